use std::path::Path;
use std::process::Command;

fn nlfem(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_nlfem")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const STUDY: &str = r#"{
  "dimension": 1, "kernel": "rational", "case": "sin1d", "m": 2,
  "h0": 0.125, "levels": 3, "extension": "delta",
  "mesh": {"mode": "perturbed", "epsilon": 0.1, "seed": 7}
}"#;

#[test]
fn study_outputs_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "study.json", STUDY);
    let mut reports = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let mtx = out.join("k.mtx");
        let rule = out.join("rule.csv");
        let o = nlfem(&[
            "run",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--dump-matrix",
            mtx.to_str().unwrap(),
            "--dump-inner-rule",
            rule.to_str().unwrap(),
            "--threads",
            if run == "a" { "1" } else { "3" },
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        for f in ["report.csv", "convergence.svg", "solution_h0.125.csv", "solution_h0.0625.csv", "solution_h0.03125.csv"] {
            assert!(out.join(f).exists(), "{f}");
        }
        assert!(std::fs::read_to_string(&mtx).unwrap().starts_with("%%MatrixMarket"));
        reports.push(std::fs::read(out.join("report.csv")).unwrap());
    }
    assert_eq!(reports[0], reports[1], "reports differ between runs");

    let report = String::from_utf8(reports.pop().unwrap()).unwrap();
    let svg = std::fs::read_to_string(dir.path().join("b/convergence.svg")).unwrap();
    let rows: Vec<&str> = report.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 3);
    for row in rows {
        let f: Vec<&str> = row.split(',').collect();
        assert!(svg.contains(&format!(r#"data-h="{}" data-error="{}""#, f[0], f[4])), "{row}");
        assert!(svg.contains(&format!(r#"data-h="{}" data-error="{}""#, f[0], f[5])), "{row}");
    }
    assert!(report.contains("# l2_slope="));
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("m.json", STUDY.replace("\"m\": 2", "\"m\": 2.5"), "m = delta/h must be a positive integer"),
        ("empty.json", STUDY.replace("\"h0\": 0.125, \"levels\": 3", "\"h\": []"), "empty"),
        ("typo.json", STUDY.replace("\"extension\"", "\"te\": 0, \"extension\""), "unknown field `te`"),
    ];
    for (name, body, needle) in cases {
        let cfg = write_config(dir.path(), name, &body);
        let o = nlfem(&["run", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{name}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(needle), "{name}: {err}");
    }
    let o = nlfem(&["run", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn single_run_patch_test() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "patch.json",
        r#"{"dimension":1,"kernel":"constant","case":"linear1d","m":2,"h":[0.01],"extension":"delta","outer_points":40,"inner_points_per_radius":10}"#,
    );
    let o = nlfem(&["run", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let report = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let l2: f64 = report.lines().nth(1).unwrap().split(',').nth(4).unwrap().parse().unwrap();
    assert!(l2 <= 1e-10, "{l2}");
    assert!(dir.path().join("solution_h0.01.csv").exists());
}

#[test]
fn shipped_example_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            nlfem::config::RunConfig::from_path(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 10);
}
