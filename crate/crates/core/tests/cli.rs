use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(dir: &Path, sub: &str, config: &str, extra: &[&str]) -> (Output, PathBuf) {
    let cfg = dir.join(format!("{sub}.json"));
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join(format!("out_{sub}"));
    let output = Command::new(env!("CARGO_BIN_EXE_hstab"))
        .arg(sub)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap();
    (output, out)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn verdict<'a>(all: &'a Value, criterion: &str) -> &'a Value {
    all.as_array()
        .unwrap()
        .iter()
        .find(|v| v["criterion"] == criterion)
        .unwrap_or_else(|| panic!("no {criterion} record in {all}"))
}

#[test]
fn catastrophic_morse_integral_value() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run(
        dir.path(),
        "stability",
        r#"{"potential": {"family": "morse", "G": 1, "L": 2, "N": 2}, "criteria": ["integral"]}"#,
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(&out.join("verdicts.json"));
    let rec = verdict(&v, "integral");
    assert_eq!(rec["outcome"], "HE_satisfied");
    // 2π Γ(2) (1 − G L²)
    let want = -6.0 * std::f64::consts::PI;
    let got = rec["numeric_value"].as_f64().unwrap();
    assert!((got - want).abs() < 1e-6, "{got}");
    assert!(rec["certificate_energy"].as_f64().unwrap() < 0.0);
    let cert = rec["certificate_path"].as_str().unwrap();
    assert!(out.join(cert).exists());
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let (o, _) = run(
        dir.path(),
        "stability",
        r#"{"potential": {"family": "morse", "G": 1, "L": 2, "N": 2}, "quad_tolerance": 1e-8}"#,
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("quad_tolerance"), "{}", stderr(&o));

    let (o, _) = run(dir.path(), "analyze", "{not json", &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn single_particle_is_rejected() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run(
        dir.path(),
        "minimize",
        r#"{"potential": {"family": "power_law", "a": 2, "r": 1, "N": 1}, "n": 1}"#,
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.join("trace.csv").exists());
}

#[test]
fn invalid_potential_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let (o, _) = run(
        dir.path(),
        "analyze",
        r#"{"potential": {"family": "power_law", "a": 1, "r": 2, "N": 1}}"#,
        &[],
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn two_particles_settle_at_unit_distance() {
    // W(d) = d²/2 − d has its minimum at d = 1
    let dir = TempDir::new().unwrap();
    let (o, out) = run(
        dir.path(),
        "minimize",
        r#"{"potential": {"family": "power_law", "a": 2, "r": 1, "N": 1}, "n": 2, "seeds": [3]}"#,
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let mut r = csv::Reader::from_path(out.join("final_config.csv")).unwrap();
    let xs: Vec<f64> = r.records().map(|rec| rec.unwrap()[0].parse().unwrap()).collect();
    assert_eq!(xs.len(), 2);
    assert!(((xs[0] - xs[1]).abs() - 1.0).abs() < 1e-3, "{xs:?}");
    assert!(out.join("trace.csv").exists());
    let c = json(&out.join("classification.json"));
    assert_eq!(c["best_seed"], 3);
}

#[test]
fn growing_potential_skips_integral_criteria() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run(
        dir.path(),
        "stability",
        r#"{"potential": {"family": "power_law", "a": 2, "r": 1, "N": 1},
            "criteria": ["integral", "fourier", "ruc_search"], "ruc": {"n_list": [4, 8], "budget": 200}}"#,
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(&out.join("verdicts.json"));
    for c in ["integral", "fourier"] {
        let reason = verdict(&v, c)["skipped"].as_str().unwrap();
        assert!(reason.contains("requires") && reason.contains("(H3b)"), "{reason}");
    }
    assert!(verdict(&v, "ruc_search")["outcome"].is_string());
}

#[test]
fn analyze_reports_hypotheses() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run(
        dir.path(),
        "analyze",
        r#"{"potential": {"family": "morse", "G": 0.5, "L": 1, "N": 2}}"#,
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let h = json(&out.join("hypotheses.json"));
    assert_eq!(h["h3"]["class"], "H3b");
    assert_eq!(h["h2_locally_integrable"]["status"], "holds");

    // r^{-1} singularity in three dimensions is locally integrable
    let (o, out) = run(
        dir.path(),
        "analyze",
        r#"{"potential": {"family": "power_law", "a": 2, "r": -1, "N": 3}}"#,
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let h = json(&out.join("hypotheses.json"));
    assert_eq!(h["h2_locally_integrable"]["status"], "holds");
    assert_eq!(h["h3"]["class"], "H3a");
}

const SCAN: &str = r#"{"potential": {"family": "morse", "G": 0.5, "L": 1, "N": 1},
    "n": 8, "max_iter": 400, "seeds": [0, 1],
    "scan": [{"name": "G", "values": [0.5, -1.0, 2.0]}]}"#;

#[test]
fn scan_isolates_invalid_cells_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run(dir.path(), "scan", SCAN, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let first = std::fs::read(out.join("phase_table.csv")).unwrap();
    let mut r = csv::Reader::from_reader(first.as_slice());
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    // 3 cells x 2 seeds, plus one aggregate row per cell
    assert_eq!(rows.len(), 9);
    let bad: Vec<_> = rows.iter().filter(|row| row[0].parse::<f64>().unwrap() == -1.0).collect();
    assert_eq!(bad.len(), 3);
    assert!(bad.iter().all(|row| !row[6].is_empty() && row[2].is_empty()));
    let good = rows
        .iter()
        .filter(|row| row[0].parse::<f64>().unwrap() != -1.0);
    assert!(good.clone().all(|row| row[6].is_empty() && !row[3].is_empty()));
    let agg: Vec<_> = good.filter(|row| &row[1] == "all").collect();
    assert_eq!(agg.len(), 2);
    // 2Γ(1)(1 − G L): positive at G = 0.5, negative at G = 2
    assert_eq!(&agg[0][4], "stable_indication");
    assert_eq!(&agg[1][4], "HE_satisfied");

    let (o, out2) = run(dir.path(), "scan", SCAN, &["--threads", "1"]);
    assert!(o.status.success());
    let again = std::fs::read(out2.join("phase_table.csv")).unwrap();
    assert_eq!(first, again);
}

#[test]
fn one_cell_scan_matches_minimize_and_stability() {
    let dir = TempDir::new().unwrap();
    let base = r#""n": 6, "max_iter": 300, "seeds": [4]"#;
    let (o, scan_out) = run(
        dir.path(),
        "scan",
        &format!(
            r#"{{"potential": {{"family": "morse", "G": 2, "L": 1, "N": 2}}, {base},
                "scan": [{{"name": "L", "values": [1.0]}}]}}"#
        ),
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let (o, min_out) = run(
        dir.path(),
        "minimize",
        &format!(r#"{{"potential": {{"family": "morse", "G": 2, "L": 1, "N": 2}}, {base}}}"#),
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let (o, stab_out) = run(
        dir.path(),
        "stability",
        r#"{"potential": {"family": "morse", "G": 2, "L": 1, "N": 2}, "criteria": ["integral"]}"#,
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));

    let mut r = csv::Reader::from_path(scan_out.join("phase_table.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    let agg = rows.iter().find(|row| &row[1] == "all").unwrap();
    let c = json(&min_out.join("classification.json"));
    assert_eq!(&agg[2], c["classification"].as_str().unwrap());
    let scan_energy: f64 = agg[3].parse().unwrap();
    assert_eq!(scan_energy, c["best_energy"].as_f64().unwrap());
    let v = json(&stab_out.join("verdicts.json"));
    let rec = verdict(&v, "integral");
    assert_eq!(&agg[4], rec["outcome"].as_str().unwrap());
    let scan_value: f64 = agg[5].parse().unwrap();
    assert_eq!(scan_value, rec["numeric_value"].as_f64().unwrap());
}
