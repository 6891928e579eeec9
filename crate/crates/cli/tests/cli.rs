use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ecs-leggett"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(str::to_owned).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(str::to_owned).collect())
        .collect();
    (header, rows)
}

fn error_record(o: &Output) -> serde_json::Value {
    let text = String::from_utf8(o.stderr.clone()).unwrap();
    serde_json::from_str(text.trim()).expect("stderr carries one JSON record")
}

#[test]
fn sweep_csv_schema_and_row_identity() {
    let o = run(&["sweep", "--kind", "L", "--alpha-range", "5:9:2", "--phi", "0.25", "--eta", "1,0.6"]);
    assert!(o.status.success());
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(
        header,
        ["kind", "alpha", "phi", "eta", "value", "bound", "violation", "settings_digest"]
    );
    assert_eq!(rows.len(), 6);
    let mut last = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for r in &rows {
        let f = |i: usize| r[i].parse::<f64>().unwrap();
        assert!((f(6) - (f(4) - f(5))).abs() < 1e-12);
        let key = (f(1), f(3));
        assert!(key > last, "rows must be in lexicographic order");
        last = key;
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str| {
        let path = dir.path().join(name);
        let o = run(&[
            "sweep", "--kind", "LS", "--alpha", "12", "--phi-range", "0.2:1.4:0.3", "--eta", "0.8,1",
            "--format", "json", "--seed", "5", "--out", path.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        std::fs::read(path).unwrap()
    };
    let (a, b) = (write("a.json"), write("b.json"));
    assert_eq!(a, b);
    let doc: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(doc["metadata"]["seed"], 5);
    assert!(doc["metadata"]["tool_version"].is_string());
    assert!(doc["metadata"]["tolerances"]["prune"].is_number());
    assert_eq!(doc["rows"].as_array().unwrap().len(), 10);
}

#[test]
fn plateau_curve_peaks_near_quarter_radian() {
    let o = run(&["sweep", "--kind", "L", "--alpha", "60", "--phi-range", "0.05:1.0:0.01"]);
    assert!(o.status.success());
    let (_, rows) = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 96);
    let best = rows
        .iter()
        .max_by(|x, y| {
            let v = |r: &Vec<String>| r[6].parse::<f64>().unwrap();
            v(x).total_cmp(&v(y))
        })
        .unwrap();
    let phi: f64 = best[2].parse().unwrap();
    assert!((phi - 0.2507).abs() <= 0.005, "{phi}");
}

#[test]
fn empty_eta_list_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"kind": "L", "alpha": 3.0, "phi": 0.25, "eta": []}"#).unwrap();
    let o = run(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let rec = error_record(&o);
    assert_eq!(rec["error"]["kind"], "validation");
    assert!(o.stdout.is_empty());
}

#[test]
fn malformed_inputs_exit_with_code_two() {
    for args in [
        vec!["sweep", "--kind", "L", "--alpha-range", "3:1:0.5", "--phi", "0.2"],
        vec!["sweep", "--kind", "L", "--alpha", "3", "--phi", "0.2", "--eta", "0"],
        vec!["sweep", "--kind", "Q", "--alpha", "3", "--phi", "0.2"],
        vec!["sweep", "--kind", "L", "--phi", "0.2"],
        vec!["threshold", "--kind", "BELL", "--phi", "0.2"],
        vec!["threshold", "--kind", "L", "--phi", "0.2", "--resolution", "-1"],
        vec!["optimize", "--kind", "L", "--alpha", "-2"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert_eq!(error_record(&o)["error"]["code"], 2);
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"kind": "LS", "alpha-range": "2:4:1", "phi": 0.65, "eta": [0.5], "format": "json"}"#,
    )
    .unwrap();
    let o = run(&["sweep", "--config", cfg.to_str().unwrap(), "--alpha", "60", "--format", "csv"]);
    assert!(o.status.success());
    let (_, rows) = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "LS");
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 60.0);
    assert_eq!(rows[0][3].parse::<f64>().unwrap(), 0.5);
}

#[test]
fn thresholds_report_crossings_and_their_absence() {
    let o = run(&["threshold", "--kind", "L", "--phi", "0.25", "--eta", "1,0.4"]);
    assert!(o.status.success());
    let (header, rows) = csv_rows(&stdout(&o));
    let star = header.iter().position(|h| h == "alpha_star").unwrap();
    let stars: Vec<f64> = rows.iter().map(|r| r[star].parse().unwrap()).collect();
    assert!(stars.iter().all(|s| (7.0..=8.0).contains(s)));
    assert!(stars[1] >= stars[0]);

    let o = run(&["threshold", "--kind", "LS", "--phi", "1.5", "--format", "json"]);
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["rows"][0]["crossing"], false);
    assert!(doc["rows"][0]["alpha_star"].is_null());
}

#[test]
fn bell_optimization_is_seeded() {
    let args = ["optimize", "--kind", "BELL", "--alpha", "1.2", "--seed", "3"];
    let (a, b) = (run(&args), run(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let (_, rows) = csv_rows(&stdout(&a));
    assert!(rows[0][4].parse::<f64>().unwrap() > 2.0);
    assert_eq!(rows[0][2], "");
}

#[test]
fn verify_against_number_basis_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("verify.csv");
    let o = run(&["verify", "--skip-wigner", "--format", "csv", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(Path::new(&out)).unwrap();
    let (header, rows) = csv_rows(&text);
    assert_eq!(rows.len(), 80);
    let passed = header.iter().position(|h| h == "passed").unwrap();
    assert!(rows.iter().all(|r| r[passed] == "true"));
}
