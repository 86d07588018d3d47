use super::EvalError;

/// Centered moving average. The window spans `(window - 1) / 2` samples before and
/// `window / 2` after each position, truncated at the edges. Non-finite samples are
/// treated as missing; a window with no finite samples yields NaN.
pub fn moving_average(series: &[f64], window: usize) -> Result<Vec<f64>, EvalError> {
    if series.is_empty() {
        return Err(EvalError::EmptySeries);
    }
    if window == 0 {
        return Err(EvalError::InvalidWindow(window));
    }
    let before = (window - 1) / 2;
    let after = window / 2;
    let n = series.len();
    let mut cnt = vec![0usize; n + 1];
    for (i, v) in series.iter().enumerate() {
        cnt[i + 1] = cnt[i] + usize::from(v.is_finite());
    }
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(before);
            let hi = (i + after + 1).min(n);
            let c = cnt[hi] - cnt[lo];
            if c == 0 {
                f64::NAN
            } else {
                series[lo..hi].iter().filter(|v| v.is_finite()).sum::<f64>() / c as f64
            }
        })
        .collect())
}
