use nalgebra::{DMatrix, DVector};

use super::MatchingError;

/// Relative threshold on pivoted QR diagonals below which a column counts as dependent.
const RANK_RTOL: f64 = 1e-10;

/// Ordinary least squares fit with an intercept.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub r2: f64,
    /// Set when the centered design had dependent columns; the minimum-norm solution
    /// was returned.
    pub rank_deficient: bool,
}

impl LinearFit {
    pub fn predict(&self, columns: &[&[f64]]) -> Vec<f64> {
        let n = columns.first().map_or(0, |c| c.len());
        (0..n)
            .map(|k| {
                self.intercept
                    + self
                        .coefficients
                        .iter()
                        .zip(columns)
                        .map(|(b, c)| b * c[k])
                        .sum::<f64>()
            })
            .collect()
    }
}

/// Coefficient of determination with the constant-target convention: a target with no
/// variance has nothing to explain and scores 0.
pub fn r_squared(y: &[f64], fitted: &[f64]) -> f64 {
    if y.iter().all(|v| *v == y[0]) {
        return 0.0;
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = y.iter().zip(fitted).map(|(v, f)| (v - f).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

/// Least-squares fit of `y ≈ intercept + Σ_j coefficients[j] · columns[j]`.
///
/// The problem is solved in centered coordinates (the intercept is recovered from the
/// means) with a column-pivoted Householder QR. Dependent columns fall back to an SVD
/// minimum-norm solution and set `rank_deficient`.
pub fn fit_linear(columns: &[&[f64]], y: &[f64]) -> Result<LinearFit, MatchingError> {
    let n = y.len();
    let p = columns.len();
    if n <= p + 1 {
        return Err(MatchingError::TooFewObservations {
            observations: n,
            regressors: p,
        });
    }
    if let Some(c) = columns.iter().find(|c| c.len() != n) {
        return Err(MatchingError::LengthMismatch {
            expected: n,
            found: c.len(),
        });
    }
    if y.iter()
        .chain(columns.iter().flat_map(|c| c.iter()))
        .any(|v| !v.is_finite())
    {
        return Err(MatchingError::NonFinite);
    }

    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let y_mean = mean(y);
    let x_means: Vec<f64> = columns.iter().map(|c| mean(c)).collect();
    let centered: Vec<Vec<f64>> = columns
        .iter()
        .zip(&x_means)
        .map(|(c, m)| c.iter().map(|v| v - m).collect())
        .collect();
    let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();

    let (coefficients, rank_deficient) = match solve_pivoted_qr(centered.clone(), yc.clone()) {
        Some(beta) => (beta, false),
        None => (solve_min_norm(&centered, &yc), true),
    };

    let intercept = y_mean - coefficients.iter().zip(&x_means).map(|(b, m)| b * m).sum::<f64>();
    let mut fit = LinearFit {
        coefficients,
        intercept,
        r2: 0.0,
        rank_deficient,
    };
    let fitted = fit.predict(columns);
    fit.r2 = r_squared(y, &fitted);
    Ok(fit)
}

/// Returns `None` when the design is numerically rank deficient.
fn solve_pivoted_qr(mut cols: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let p = cols.len();
    let n = b.len();
    if p == 0 {
        return Some(Vec::new());
    }
    let mut perm: Vec<usize> = (0..p).collect();
    let mut diag = vec![0.0; p];
    let mut first = 0.0;

    for k in 0..p {
        let tail_norm2 = |c: &Vec<f64>| c[k..].iter().map(|v| v * v).sum::<f64>();
        let (best, best_norm2) =
            (k..p)
                .map(|j| (j, tail_norm2(&cols[j])))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        cols.swap(k, best);
        perm.swap(k, best);

        let norm = best_norm2.sqrt();
        if k == 0 {
            first = norm;
        }
        if norm <= RANK_RTOL * first || norm == 0.0 {
            return None;
        }
        let alpha = if cols[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = cols[k][k..].to_vec();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        let reflect = |c: &mut [f64]| {
            let dot: f64 = v.iter().zip(c.iter()).map(|(a, b)| a * b).sum();
            let s = 2.0 * dot / vv;
            for (ci, vi) in c.iter_mut().zip(&v) {
                *ci -= s * vi;
            }
        };
        for col in cols.iter_mut().skip(k + 1) {
            reflect(&mut col[k..]);
        }
        reflect(&mut b[k..n]);
        diag[k] = alpha;
    }

    // Back substitution on R (upper triangle stored column-wise, diagonal in `diag`).
    let mut z = vec![0.0; p];
    for i in (0..p).rev() {
        let mut s = b[i];
        for j in i + 1..p {
            s -= cols[j][i] * z[j];
        }
        z[i] = s / diag[i];
    }
    let mut beta = vec![0.0; p];
    for (i, &orig) in perm.iter().enumerate() {
        beta[orig] = z[i];
    }
    Some(beta)
}

fn solve_min_norm(cols: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let p = cols.len();
    let a = DMatrix::from_fn(n, p, |i, j| cols[j][i]);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let tol = RANK_RTOL * smax;
    if smax == 0.0 {
        return vec![0.0; p];
    }
    let rhs = DVector::from_column_slice(b);
    svd.solve(&rhs, tol)
        .map(|x| x.iter().copied().collect())
        .unwrap_or_else(|_| vec![0.0; p])
}
