//! Drives the `tbe` binary end to end.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tbe::exit;
use tbe::formats::{cfn_to_json, hubo_to_json, parse_certificate, parse_hubo, CertificateJson};
use tempfile::TempDir;

fn tbe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tbe"))
        .args(args)
        .env_remove("TBE_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> u8 {
    o.status.code().expect("exited normally") as u8
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn write_random_cfn(dir: &TempDir, seed: u64, cards: &[usize]) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfn = tbe_core::random::cfn(&mut rng, cards, 1.0);
    let p = path(dir, &format!("cfn{seed}.json"));
    std::fs::write(&p, cfn_to_json(&cfn)).unwrap();
    p
}

#[test]
fn demo_degrees() {
    let dir = TempDir::new().unwrap();
    for (card, k_full) in [(32usize, 10u64), (128, 14)] {
        let input = path(&dir, &format!("demo{card}.json"));
        let csv = path(&dir, &format!("spec{card}.csv"));
        let report = path(&dir, &format!("report{card}.json"));
        assert_eq!(code(&tbe(&["demo", "--cardinality", &card.to_string(), "--out", s(&input)])), 0);
        let o = tbe(&["compile", "--input", s(&input), "--kmax", "2", "--out-spectrum", s(&csv), "--out-report", s(&report)]);
        assert_eq!(code(&o), exit::OK, "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(json(&report)["k_full"], k_full);
        let text = std::fs::read_to_string(&csv).unwrap();
        assert_eq!(text.lines().next(), Some("k,P_k,P_k_unary,P_k_pairwise"));
        assert_eq!(text.lines().count() as u64, k_full + 2);
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let input = write_random_cfn(&dir, 60, &[5, 6, 3, 4]);
    let run = |tag: &str, threads: &str| {
        let names = ["hubo", "trunc", "csv", "cert", "qubo", "report"].map(|n| path(&dir, &format!("{tag}.{n}")));
        let o = tbe(&[
            "compile", "--input", s(&input), "--kmax", "3", "--quadratize", "--solve", "anneal", "--restarts", "4",
            "--proposals", "4000", "--seed", "7", "--refine", "--threads", threads, "--out-hubo", s(&names[0]),
            "--out-truncated", s(&names[1]), "--out-spectrum", s(&names[2]), "--out-cert", s(&names[3]),
            "--out-qubo", s(&names[4]), "--out-report", s(&names[5]),
        ]);
        assert_eq!(code(&o), exit::OK, "{}", String::from_utf8_lossy(&o.stderr));
        names.map(|p| std::fs::read(p).unwrap())
    };
    let a = run("a", "1");
    let b = run("b", "1");
    let c = run("c", "4");
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn hubo_artifact_reproduces_certificate() {
    let dir = TempDir::new().unwrap();
    let input = write_random_cfn(&dir, 61, &[7, 4, 5]);
    let (hubo, cert) = (path(&dir, "h.json"), path(&dir, "c.json"));
    let o = tbe(&["compile", "--input", s(&input), "--kmax", "2", "--out-hubo", s(&hubo), "--out-cert", s(&cert)]);
    assert_eq!(code(&o), exit::OK);
    let poly = parse_hubo(&std::fs::read_to_string(&hubo).unwrap()).unwrap();
    let again = CertificateJson::from(&tbe_core::certify(&poly, 2).unwrap());
    assert_eq!(again, parse_certificate(&std::fs::read_to_string(&cert).unwrap()).unwrap());
}

#[test]
fn full_degree_recovers_optimum() {
    let dir = TempDir::new().unwrap();
    let input = write_random_cfn(&dir, 62, &[3, 6, 5]);
    let report = path(&dir, "r.json");
    let o = tbe(&["compile", "--input", s(&input), "--kmax", "20", "--solve", "exhaustive", "--out-report", s(&report)]);
    assert_eq!(code(&o), exit::OK);
    let r = json(&report);
    assert_eq!(r["certificate"]["epsilon"], 0.0);
    let b = &r["optimum_bound"];
    assert!((b["cfn_value"].as_f64().unwrap() - b["cfn_optimum"].as_f64().unwrap()).abs() <= 1e-9);
}

#[test]
fn seed_41_pipeline_meets_optimum_bound() {
    let dir = TempDir::new().unwrap();
    let input = write_random_cfn(&dir, 41, &[6, 7, 5, 8, 4, 3]);
    let report = path(&dir, "r.json");
    let o = tbe(&["compile", "--input", s(&input), "--kmax", "3", "--solve", "exhaustive", "--refine", "--out-report", s(&report)]);
    assert_eq!(code(&o), exit::OK);
    let r = json(&report);
    assert!(r["num_qubits"].as_u64().unwrap() <= 20);
    assert_eq!(r["optimum_bound"]["registers_valid"], true);
    assert_eq!(r["optimum_bound"]["holds"], true);
}

#[test]
fn strict_noise_floor_exit() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "d.json");
    tbe(&["demo", "--cardinality", "32", "--seed", "3", "--out", s(&input)]);
    let relaxed = tbe(&["compile", "--input", s(&input), "--kmax", "1"]);
    assert_eq!(code(&relaxed), exit::OK);
    assert!(String::from_utf8_lossy(&relaxed.stderr).contains("noise floor"));
    let strict = tbe(&["compile", "--input", s(&input), "--kmax", "1", "--strict"]);
    assert_eq!(code(&strict), exit::NOISE_FLOOR);
    let exact = tbe(&["compile", "--input", s(&input), "--kmax", "10", "--strict"]);
    assert_eq!(code(&exact), exit::OK);
}

#[test]
fn error_exit_codes() {
    let dir = TempDir::new().unwrap();
    let missing = path(&dir, "missing.json");
    let o = tbe(&["compile", "--input", s(&missing), "--kmax", "2"]);
    assert_eq!(code(&o), exit::IO);
    assert_eq!(String::from_utf8_lossy(&o.stderr).lines().count(), 1);

    let bad = path(&dir, "bad.json");
    std::fs::write(&bad, r#"{"variables":[{"name":"a","cardinality":2}],"unary":[{"var":0,"costs":[1]}]}"#).unwrap();
    let o = tbe(&["compile", "--input", s(&bad), "--kmax", "2"]);
    assert_eq!(code(&o), exit::INVALID_INPUT);
    assert!(String::from_utf8_lossy(&o.stderr).contains("table shape mismatch"));

    assert_eq!(code(&tbe(&["compile", "--kmax", "2"])), exit::USAGE);
    assert_eq!(code(&tbe(&["compile", "--input", s(&bad), "--kmax", "2", "--unused", "sideways"])), exit::USAGE);
    assert_eq!(code(&tbe(&["--help"])), exit::OK);

    let big = path(&dir, "big.json");
    let poly = tbe_core::IsingPolynomial::from_terms(30, [(1 << 29, 1.0)]).unwrap();
    std::fs::write(&big, hubo_to_json(&poly)).unwrap();
    assert_eq!(code(&tbe(&["solve", "--hubo", s(&big)])), exit::CAPACITY);
    let o = tbe(&["solve", "--hubo", s(&big), "--solve", "anneal", "--restarts", "2", "--proposals", "3000"]);
    assert_eq!(code(&o), exit::OK);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["best_truncated_value"], -1.0);
}

#[test]
fn verify_reports_claims() {
    let dir = TempDir::new().unwrap();
    let input = write_random_cfn(&dir, 63, &[4, 5, 3]);
    let report = path(&dir, "v.json");
    let o = tbe(&["verify", "--input", s(&input), "--kmax", "2", "--out-report", s(&report)]);
    assert_eq!(code(&o), exit::OK);
    let r = json(&report);
    let claims: Vec<&str> = r["checks"].as_array().unwrap().iter().map(|c| c["claim"].as_str().unwrap()).collect();
    assert_eq!(claims.len(), 5);
    assert!(claims.contains(&"global minimum preservation"));

    // no truncation: every check passes with epsilon zero
    let o = tbe(&["verify", "--input", s(&input), "--kmax", "8"]);
    assert_eq!(code(&o), exit::OK);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["certificate"]["epsilon"], 0.0);
    assert_eq!(r["all_passed"], true);
}

#[test]
fn ensemble_report() {
    let dir = TempDir::new().unwrap();
    let profile = path(&dir, "p.json");
    std::fs::write(&profile, r#"{"num_qubits": 12, "k_max": 2, "by_degree": [0, 1, 1, 0.05, 0.05]}"#).unwrap();
    let o = tbe(&["ensemble", "--profile", s(&profile), "--trials", "2000", "--seed", "5", "--threads", "3"]);
    assert_eq!(code(&o), exit::OK, "{}", String::from_utf8_lossy(&o.stdout));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["residual"]["moments"]["trials"], 2000);
    assert_eq!(r["sweep"].as_array().unwrap().len(), 3);
    assert_eq!(r["sweep_trend_holds"], true);

    let zero = path(&dir, "z.json");
    std::fs::write(&zero, r#"{"num_qubits": 4, "k_max": 1, "by_degree": [0, 0]}"#).unwrap();
    assert_eq!(code(&tbe(&["ensemble", "--profile", s(&zero), "--trials", "10"])), exit::FAILURE);
}

#[test]
fn spectrum_to_stdout() {
    let dir = TempDir::new().unwrap();
    let input = write_random_cfn(&dir, 64, &[3, 4]);
    let smooth = path(&dir, "sm.json");
    let o = tbe(&["spectrum", "--input", s(&input), "--assignment", "gray", "--out-smoothness", s(&smooth)]);
    assert_eq!(code(&o), exit::OK);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 5);
    let tables = json(&smooth);
    assert_eq!(tables.as_array().unwrap().len(), 3);
    for t in tables.as_array().unwrap() {
        assert!(t["identity_error"].as_f64().unwrap() <= 1e-9);
    }
}
