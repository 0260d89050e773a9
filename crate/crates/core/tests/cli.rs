use serde_json::Value;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ellchain")).args(args).output().expect("binary runs")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn golden_n3_passes() {
    let o = bin(&["freeze", "--N", "3", "--M", "2", "--kind", "elliptic", "--golden", "n3"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&o);
    assert_eq!(r["pass"], true);
    assert!(r["max_residual"].as_f64().unwrap() <= 1e-12);
    assert_eq!(r["items"].as_array().unwrap().len(), 4);
    assert_eq!(r["schema_version"], 1);
}

#[test]
fn uq_xxz_qybe_passes() {
    let o = bin(&["rmat", "--kind", "uq-xxz", "--check", "qybe", "--M", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&o);
    assert_eq!(r["params"]["kind"], "uq-xxz");
    assert_eq!(r["params"]["M"], 3);
    assert_eq!(r["samples"].as_array().unwrap().len(), 20);
}

#[test]
fn unknown_flag_is_usage_error() {
    let o = bin(&["rmat", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert!(o.stdout.is_empty());
}

#[test]
fn bad_values_are_usage_errors() {
    assert_eq!(bin(&["rmat", "--kind", "bogus"]).status.code(), Some(2));
    assert_eq!(bin(&["rmat", "--tau-im", "-0.5"]).status.code(), Some(2));
    assert_eq!(bin(&["freeze", "--N", "3", "--golden", "n4"]).status.code(), Some(2));
    assert_eq!(bin(&["diffop", "--N", "3", "--k1", "7"]).status.code(), Some(2));
    assert_eq!(bin(&["rmat", "--M", "3", "--kind", "eight-vertex", "--samples", "x"]).status.code(), Some(2));
}

#[test]
fn pole_is_numerical_error_with_sample() {
    let o = bin(&["freeze", "--N", "4", "--hbar-re", "0.25", "--hbar-im", "0"]);
    assert_eq!(o.status.code(), Some(3));
    let r = json(&o);
    assert_eq!(r["pass"], false);
    assert_eq!(r["error"]["kind"], "PoleProximity");
    assert_eq!(r["error"]["sample"]["hbar"][0].as_f64(), Some(0.25));
}

#[test]
fn rank_mismatch_is_numerical_error() {
    let o = bin(&["rmat", "--kind", "eight-vertex", "--M", "3"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(json(&o)["error"]["kind"], "IncompatibleRank");
}

#[test]
fn failing_tolerance_exits_one() {
    let o = bin(&["rmat", "--tol", "1e-30"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["pass"], false);
}

#[test]
fn reports_are_byte_identical() {
    for args in [
        &["diffop", "--N", "3", "--seed", "42"][..],
        &["special-fn", "--samples", "10", "--seed", "3"],
        &["freeze", "--emit", "hamiltonians", "--N", "3"],
    ] {
        let (a, b) = (bin(args), bin(args));
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
    let a = bin(&["diffop", "--N", "3", "--seed", "1"]);
    let b = bin(&["diffop", "--N", "3", "--seed", "2"]);
    assert_ne!(json(&a)["samples"], json(&b)["samples"]);
}

#[test]
fn floats_carry_17_digits() {
    let o = bin(&["rmat", "--check", "unitarity", "--samples", "2"]);
    let s = String::from_utf8(o.stdout).unwrap();
    // 0.05 has no short exact form
    assert!(s.contains("5.0000000000000003e-2"), "{s}");
}

#[test]
fn out_file_and_csv() {
    let dir = std::env::temp_dir().join(format!("ellchain-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("r.csv");
    let o = bin(&["limits", "--mode", "appendix-c", "--M", "2", "--samples", "3", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = rows.records().map(|r| r.unwrap()).collect();
    assert_eq!(&rows[0][0], "item");
    assert_eq!(&rows[2][0], "summary");
    assert_eq!(&rows[2][4], "true");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn timing_is_opt_in() {
    let plain = json(&bin(&["special-fn", "--check", "values"]));
    assert!(plain.get("wall_time_s").is_none());
    let timed = json(&bin(&["special-fn", "--check", "values", "--timing"]));
    assert!(timed["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn hamiltonians_are_row_major_complex() {
    let r = json(&bin(&["freeze", "--emit", "hamiltonians", "--N", "3", "--M", "2"]));
    let h1 = r["data"]["H1"].as_array().unwrap();
    assert_eq!(h1.len(), 8);
    assert_eq!(h1[0].as_array().unwrap().len(), 8);
    assert_eq!(h1[0][0].as_array().unwrap().len(), 2);
    assert!(r["data"]["bold H1"].is_array());
}

#[test]
fn spectra_emit_multiplicities() {
    let r = json(&bin(&["freeze", "--emit", "spectra", "--N", "3", "--M", "2", "--kind", "uq-xxz"]));
    for k in ["H1", "H2"] {
        let s = &r["data"][k];
        assert_eq!(s["eigenvalues"].as_array().unwrap().len(), 8);
        let total: u64 = s["degeneracies"].as_array().unwrap().iter().map(|d| d["multiplicity"].as_u64().unwrap()).sum();
        assert_eq!(total, 8);
    }
}

#[test]
fn eta_oracle_reports_both_quotients() {
    let o = bin(&["diffop", "--check", "eta-oracle", "--N", "3", "--samples", "2", "--tol", "1e-6"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&o);
    assert!(r["data"]["one_sided_richardson"]["H1"].as_f64().unwrap() > r["items"][0]["residual"].as_f64().unwrap());
}

#[test]
fn help_exits_zero() {
    let o = bin(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let s = String::from_utf8_lossy(&o.stdout);
    for sub in ["special-fn", "rmat", "diffop", "freeze", "limits"] {
        assert!(s.contains(sub), "{sub}");
    }
}
