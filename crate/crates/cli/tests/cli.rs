use std::path::PathBuf;
use std::process::{Command, Output};

use cqsw::catalog;
use cqsw::conditional::conditional_entropy;
use cqsw::exponent::{exponent, ExponentKind};
use cqsw::{CQState, ExtendedReal, Variant};

fn cqsw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cqsw")).args(args).output().expect("binary runs")
}

fn shipped(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/states")
        .join(format!("{name}.json"))
        .display()
        .to_string()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn curve_matches_library_calls() {
    let s = catalog::dsbs(0.11);
    let out = stdout(&cqsw(&["exponents", "--state", &shipped("dsbs_q011"), "--rate-min", "0.3", "--rate-max", "0.9", "--steps", "4"]));
    assert!(out.starts_with("R,E_r_down,E_r,E_sp,E_sc_star,E_sc_flat,alpha_star\n"));
    assert!(!out.contains('\r'));
    let kinds = [
        ExponentKind::RandomCodingDown,
        ExponentKind::RandomCoding(Variant::Petz),
        ExponentKind::SpherePacking(Variant::Petz),
        ExponentKind::StrongConverse(Variant::Sandwiched),
        ExponentKind::StrongConverse(Variant::Flat),
    ];
    for row in rows(&out) {
        let r: f64 = row[0].parse().unwrap();
        for (k, cell) in kinds.iter().zip(&row[1..6]) {
            let parsed: ExtendedReal = cell.parse().unwrap();
            assert_eq!(parsed, exponent(&s, r, *k).unwrap(), "{k} at {r}");
        }
    }
}

#[test]
fn flat_source_sphere_packing_jumps_to_infinity() {
    let out = stdout(&cqsw(&["exponents", "--state", &shipped("no_side_information"), "--rate-min", "0", "--rate-max", "2", "--steps", "9"]));
    for row in rows(&out) {
        let r: f64 = row[0].parse().unwrap();
        if r <= 1.0 {
            assert_eq!(row[3], "0", "at {r}");
        } else {
            assert_eq!(row[3], "inf", "at {r}");
        }
    }
}

#[test]
fn strong_converse_vanishes_above_entropy() {
    let s = catalog::dsbs(0.11);
    let h = conditional_entropy(&s).unwrap();
    let out = stdout(&cqsw(&["exponents", "--state", &shipped("dsbs_q011"), "--steps", "6"]));
    for row in rows(&out) {
        let r: f64 = row[0].parse().unwrap();
        if r >= h {
            assert_eq!(row[4], "0", "at {r}");
        }
    }
}

#[test]
fn extra_variants_add_columns() {
    let out = stdout(&cqsw(&["exponents", "--state", &shipped("zero_plus"), "--steps", "2", "--variants", "petz,flat"]));
    assert!(out.starts_with("R,E_r_down,E_r,E_sp,E_sc_star,E_sc_flat,alpha_star,E_r_flat,E_sp_flat\n"));
    assert!(rows(&out).iter().all(|r| r.len() == 9));
}

#[test]
fn verify_passes_on_shipped_states() {
    let o = cqsw(&["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn moderate_rejects_zero_variance() {
    let o = cqsw(&["moderate", "--state", &shipped("perfect_side_information")]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ZeroVariance"));
}

#[test]
fn moderate_reports_the_limit() {
    let out = stdout(&cqsw(&["moderate", "--state", &shipped("dsbs_q011"), "--deltas", "0.05,0.01"]));
    assert!(out.starts_with("delta,ratio,limit\n"));
    assert_eq!(rows(&out).len(), 2);
}

#[test]
fn simulation_is_deterministic() {
    let args = ["simulate", "--state", &shipped("zero_plus"), "--n", "2", "--w-size", "2", "--trials", "8", "--seed", "7"];
    let a = stdout(&cqsw(&args));
    let b = stdout(&cqsw(&args));
    assert_eq!(a, b);
    assert!(a.contains("pgm mean_error"));
}

#[test]
fn bruteforce_reports_an_encoder() {
    let out = stdout(&cqsw(&["bruteforce", "--state", &shipped("two_bit_labels"), "--w-size", "2"]));
    assert!(out.contains("encoder "));
    assert!(out.contains("error_floor "));
}

#[test]
fn rate_window_rows() {
    let out = stdout(&cqsw(&["rate-window", "--state", &shipped("dsbs_q011"), "--n", "2", "--epsilon", "0.1"]));
    for row in rows(&out) {
        let (lo, hi): (f64, f64) = (row[1].parse().unwrap(), row[2].parse().unwrap());
        assert!(lo <= hi);
    }
}

#[test]
fn config_errors_exit_with_two() {
    let state = shipped("dsbs_q011");
    let o = cqsw(&["exponents", "--state", &state, "--rate-min", "1", "--rate-max", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rate_min"));
    let o = cqsw(&["exponents", "--state", &state, "--steps", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("steps"));
    let o = cqsw(&["simulate", "--state", &state, "--w-size", "2", "--trials", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("trials"));
}

#[test]
fn state_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let o = cqsw(&["moderate", "--state", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("state"));
    let o = cqsw(&["moderate", "--state", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn output_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.csv");
    let o = cqsw(&["exponents", "--state", &shipped("zero_plus"), "--steps", "3", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let s = CQState::load(shipped("zero_plus")).unwrap();
    for row in rows(&text) {
        for cell in &row {
            let x: ExtendedReal = cell.parse().unwrap();
            assert_eq!(x.to_string(), *cell);
        }
    }
    assert_eq!(rows(&text).len(), 3);
    assert!(s.size() > 0);
}
