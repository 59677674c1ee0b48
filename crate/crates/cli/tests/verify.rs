use std::process::Command;

fn steklov() -> Command {
    Command::new(env!("CARGO_BIN_EXE_steklov"))
}

#[test]
fn bogus_suite_exits_one_naming_suites() {
    let dir = tempfile::tempdir().unwrap();
    let out = steklov().args(["verify", "--suite", "bogus", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    for s in ["bogus", "spectrum", "decay", "frequency", "gram", "approx"] {
        assert!(err.contains(s), "missing {s} in {err}");
    }
    assert!(!dir.path().join("summary.json").exists());
}

#[test]
fn disk_decay_and_frequency() {
    let dir = tempfile::tempdir().unwrap();
    let out = steklov().args(["verify", "--preset", "disk", "--suite", "decay,frequency", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let mut files: Vec<String> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    files.sort();
    assert_eq!(files, ["decay.csv", "frequency.csv", "summary.json"]);
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["pass"], true);
    for suite in summary["suites"].as_array().unwrap() {
        for r in suite["reports"].as_array().unwrap() {
            assert!(!r["sweep"].as_str().unwrap().is_empty());
        }
    }
}

#[test]
fn asym_gram_has_nonzero_volume_offdiagonals() {
    let dir = tempfile::tempdir().unwrap();
    let out = steklov().args(["verify", "--preset", "asym-exp", "--suite", "gram", "--lmax", "30", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let csv = std::fs::read_to_string(dir.path().join("gram.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let (i, j, vol) = (
        header.iter().position(|h| *h == "i").unwrap(),
        header.iter().position(|h| *h == "j").unwrap(),
        header.iter().position(|h| *h == "volume").unwrap(),
    );
    let largest = lines
        .map(|l| l.split(',').collect::<Vec<_>>())
        .filter(|c| c[i] != c[j])
        .map(|c| c[vol].parse::<f64>().unwrap().abs())
        .fold(0.0, f64::max);
    assert!(largest > 1e-6, "largest off-diagonal volume entry {largest}");
}

#[test]
fn unsupported_suite_on_geometry_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = steklov().args(["verify", "--preset", "asym-exp", "--suite", "restrict", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn json_format_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"geometry": {"preset": "cylinder"}, "suites": ["spectrum"], "lambda_max": 10, "format": "json"}"#).unwrap();
    let out_dir = dir.path().join("out");
    let out = steklov().args(["verify", "--config"]).arg(&cfg).arg("--out").arg(&out_dir).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let rows: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("spectrum.json")).unwrap()).unwrap();
    assert!(!rows.as_array().unwrap().is_empty());
}
