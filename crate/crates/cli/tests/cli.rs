use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use symwatch::panel::{AreaSet, EpiKind, EpiSeries, KeywordRegistry, QueryPanel};
use tempfile::TempDir;

fn symwatch<S: AsRef<std::ffi::OsStr>>(args: &[S], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symwatch"))
        .args(args)
        .current_dir(cwd)
        .env_remove("SYMWATCH_OUTPUT_DIR")
        .output()
        .unwrap()
}

fn ok_dir(out: Output, cwd: &Path) -> PathBuf {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    cwd.join(String::from_utf8(out.stdout).unwrap().trim())
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Pipeline {
    synth: PathBuf,
    detect: PathBuf,
    evaluate: PathBuf,
}

fn pipeline(cwd: &Path, out: &str, extra: &[&str]) -> Pipeline {
    let with = |args: &[&str]| -> Vec<String> {
        args.iter()
            .chain(&["--output-dir", out])
            .chain(extra)
            .map(|a| a.to_string())
            .collect()
    };
    let synth = ok_dir(symwatch(&with(&["synth"]), cwd), cwd);
    let (panel, areas, cases, deaths) = (
        synth.join("panel.csv"),
        synth.join("areas.csv"),
        synth.join("cases.csv"),
        synth.join("mortality.csv"),
    );
    let detect = ok_dir(
        symwatch(
            &with(&[
                "detect",
                "--panel",
                s(&panel),
                "--areas",
                s(&areas),
                "--cases",
                s(&cases),
            ]),
            cwd,
        ),
        cwd,
    );
    let evaluate = ok_dir(
        symwatch(
            &with(&[
                "evaluate",
                "--runs",
                s(&detect),
                "--panel",
                s(&panel),
                "--cases",
                s(&cases),
                "--mortality",
                s(&deaths),
            ]),
            cwd,
        ),
        cwd,
    );
    Pipeline {
        synth,
        detect,
        evaluate,
    }
}

#[test]
fn synth_is_deterministic_and_valid() {
    let t = TempDir::new().unwrap();
    let a = ok_dir(
        symwatch(&["synth", "--seed", "42", "--output-dir", "a"], t.path()),
        t.path(),
    );
    let b = ok_dir(
        symwatch(&["synth", "--seed", "42", "--output-dir", "b"], t.path()),
        t.path(),
    );
    assert_eq!(a.file_name(), b.file_name());
    assert_eq!(files(&a), files(&b));

    let reg = KeywordRegistry::default();
    let panel = QueryPanel::load_csv(a.join("panel.csv"), reg).unwrap();
    assert_eq!(panel.weeks().len(), 12);
    let areas = AreaSet::load_csv(a.join("areas.csv")).unwrap();
    assert_eq!(areas.len(), 20);
    EpiSeries::load_cases_csv(a.join("cases.csv")).unwrap();
    EpiSeries::load_mortality_csv(a.join("mortality.csv")).unwrap();
    for (week, area, _) in panel.iter() {
        let f = panel.fractions(week, area).unwrap();
        assert!(f.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn detect_emits_one_run_per_week_pair() {
    let t = TempDir::new().unwrap();
    let p = pipeline(t.path(), "out", &[]);
    let f = files(&p.detect);
    assert_eq!(f.keys().filter(|k| k.starts_with("run-")).count(), 11);
    assert_eq!(f.keys().filter(|k| k.starts_with("alerts-")).count(), 11);
    let counters = String::from_utf8(f["counters.csv"].clone()).unwrap();
    assert_eq!(counters.lines().count(), 12);
    let e = files(&p.evaluate);
    for name in [
        "auc_cases.csv",
        "auc_mortality.csv",
        "lag_table.csv",
        "coverage.csv",
        "summary.json",
        "auc.svg",
    ] {
        assert!(e.contains_key(name), "{name}");
    }
    assert!(files(&p.synth).contains_key("truth.json"));
}

#[test]
fn pipeline_is_byte_identical_across_runs() {
    let t = TempDir::new().unwrap();
    let a = pipeline(t.path(), "a", &["--preset", "detection", "--seed", "5"]);
    let b = pipeline(t.path(), "b", &["--preset", "detection", "--seed", "5"]);
    for (x, y) in [(&a.synth, &b.synth), (&a.detect, &b.detect), (&a.evaluate, &b.evaluate)] {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(files(x), files(y));
    }
}

#[test]
fn empty_panel_is_degenerate() {
    let t = TempDir::new().unwrap();
    std::fs::write(
        t.path().join("panel.csv"),
        "week_start,area_id,keyword,users_querying,total_users\n",
    )
    .unwrap();
    std::fs::write(t.path().join("areas.csv"), "area_id,name,latitude,longitude\n").unwrap();
    let out = symwatch(&["detect", "--panel", "panel.csv", "--areas", "areas.csv"], t.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no analyzable week pairs"));
    assert!(!t.path().join("symwatch-out").exists());
}

#[test]
fn single_area_has_no_eligible_candidates() {
    let t = TempDir::new().unwrap();
    let dir = ok_dir(symwatch(&["synth", "--n-areas", "1"], t.path()), t.path());
    assert_eq!(AreaSet::load_csv(dir.join("areas.csv")).unwrap().len(), 1);
    let out = symwatch(
        &[
            "detect",
            "--panel",
            s(&dir.join("panel.csv")),
            "--areas",
            s(&dir.join("areas.csv")),
        ],
        t.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no eligible candidates"));
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn anomaly_lead_and_mortality_offset() {
    let t = TempDir::new().unwrap();
    std::fs::write(
        t.path().join("c.json"),
        r#"{"preset": "detection", "scenario": {"mortality": {"fatality_rate": 1.0, "lag_weeks": 2}}}"#,
    )
    .unwrap();
    for seed in ["1", "2", "3"] {
        let p = pipeline(t.path(), "out", &["--config", "c.json", "--seed", seed]);
        let v = summary(&p.evaluate);
        let cases = v["cases"]["peak_lag_weeks"].as_i64().unwrap();
        let deaths = v["mortality"]["peak_lag_weeks"].as_i64().unwrap();
        assert_eq!(cases, 1, "seed {seed}");
        assert!((deaths - cases - 2).abs() <= 1, "seed {seed}: {cases} {deaths}");
    }
}

#[test]
fn no_positive_labels_gives_undefined_auc() {
    let t = TempDir::new().unwrap();
    let p = pipeline(t.path(), "out", &["--ratio", "1000000"]);
    let csv = std::fs::read_to_string(p.evaluate.join("auc_cases.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r.split(',').nth(1) == Some("undefined")), "{csv}");
    assert!(summary(&p.evaluate)["warnings"]
        .as_array()
        .unwrap()
        .iter()
        .any(|w| w.as_str().unwrap().contains("AUC undefined")));

    let synth = &p.synth;
    let out = symwatch(
        &[
            "evaluate",
            "--ratio",
            "1000000",
            "--runs",
            s(&p.detect),
            "--cases",
            s(&synth.join("cases.csv")),
        ],
        t.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn report_summarizes_runs() {
    let t = TempDir::new().unwrap();
    let p = pipeline(t.path(), "out", &[]);
    let r = ok_dir(
        symwatch(
            &["report", "--runs", s(&p.detect), "--evaluation", s(&p.evaluate)],
            t.path(),
        ),
        t.path(),
    );
    let md = std::fs::read_to_string(r.join("report.md")).unwrap();
    assert!(md.contains("11 week pair(s)"));
    assert!(md.contains("## Evaluation"));
    assert!(r.join("coverage.svg").exists());
}

#[test]
fn exit_codes_for_bad_inputs_and_config() {
    let t = TempDir::new().unwrap();
    let out = symwatch(&["evaluate", "--runs", "missing"], t.path());
    assert_eq!(out.status.code(), Some(1));
    let out = symwatch(
        &["detect", "--panel", "missing.csv", "--areas", "missing.csv"],
        t.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    std::fs::write(
        t.path().join("bad.csv"),
        "week_start,area_id,keyword,users_querying,total_users\n2020-03-03,A,cough,1,100\n",
    )
    .unwrap();
    std::fs::write(t.path().join("areas.csv"), "area_id,name,latitude,longitude\n").unwrap();
    let out = symwatch(&["detect", "--panel", "bad.csv", "--areas", "areas.csv"], t.path());
    assert_eq!(out.status.code(), Some(1));

    std::fs::write(t.path().join("c.json"), r#"{"thresholds": {"max_controls": 0}}"#).unwrap();
    let out = symwatch(&["detect", "--config", "c.json"], t.path());
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(t.path().join("c.json"), "{not json").unwrap();
    assert_eq!(
        symwatch(&["synth", "--config", "c.json"], t.path()).status.code(),
        Some(2)
    );
    let out = symwatch(&["detect", "--keyword-pair", "pyrexia,bogus"], t.path());
    assert_eq!(out.status.code(), Some(2));
    let out = symwatch(&["synth", "--n-weeks", "0"], t.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_dir_precedence() {
    let t = TempDir::new().unwrap();
    std::fs::write(t.path().join("c.json"), r#"{"output_dir": "from_file"}"#).unwrap();
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_symwatch"));
        c.args(["synth", "--config", "c.json", "--n-areas", "3", "--n-weeks", "2"])
            .current_dir(t.path());
        match env {
            Some(v) => c.env("SYMWATCH_OUTPUT_DIR", v),
            None => c.env_remove("SYMWATCH_OUTPUT_DIR"),
        };
        if let Some(f) = flag {
            c.args(["--output-dir", f]);
        }
        ok_dir(c.output().unwrap(), t.path())
    };
    assert!(run(None, None).starts_with(t.path().join("from_file")));
    assert!(run(Some("from_env"), None).starts_with(t.path().join("from_env")));
    assert!(run(Some("from_env"), Some("from_flag")).starts_with(t.path().join("from_flag")));
}

#[test]
fn mortality_loader_accepts_synth_output() {
    let t = TempDir::new().unwrap();
    let dir = ok_dir(
        symwatch(&["synth", "--n-areas", "4", "--n-weeks", "3"], t.path()),
        t.path(),
    );
    let m = EpiSeries::load_mortality_csv(dir.join("mortality.csv")).unwrap();
    assert_eq!(m.kind(), EpiKind::WeeklyDeaths);
    assert_eq!(m.areas().count(), 4);
}
