use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn adiaq(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adiaq"))
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn generate_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let out = adiaq(dir, &["generate", "--n", "7", "--seed", "42"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let name = "ec3_n7_seed42.txt";
    let x = fs::read(a.path().join(name)).unwrap();
    let y = fs::read(b.path().join(name)).unwrap();
    assert_eq!(x, y);
    assert!(a.path().join("ec3_n7_seed42.meta").exists());
    let text = String::from_utf8(x).unwrap();
    assert!(text.starts_with("7 "));
    assert!(text.contains("# seed 42"));
}

#[test]
fn k3_sweep_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = adiaq(dir.path(), &["sweep", "--kind", "k3", "--n", "8", "--seed", "7", "--values", "0,1,2,3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("k3.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("C3,run_time,success_prob"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 8);
    for row in rows {
        let c3 = row.split(',').next().unwrap();
        assert!(c3.parse::<u32>().is_ok(), "C3 `{c3}` is not an integer");
        let p: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!((0.0..=1.0 + 1e-6).contains(&p));
    }
    let meta = fs::read_to_string(dir.path().join("k3.meta")).unwrap();
    assert!(meta.lines().any(|l| l.starts_with("nT_over_pi = ")));
    assert!(meta.contains("cli_seed = 7"));
}

#[test]
fn decohere_rejects_five_bits() {
    let dir = tempfile::tempdir().unwrap();
    let out = adiaq(dir.path(), &["decohere", "--n", "5"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error:"));
}

#[test]
fn evolve_and_spectrum_write_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let out = adiaq(dir.path(), &["evolve", "--n", "5", "--time", "5", "--perturbation", "k2", "--strength", "0.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let meta = fs::read_to_string(dir.path().join("evolve.meta")).unwrap();
    assert!(meta.contains("perturbation = kind = k2"));
    let out = adiaq(dir.path(), &["spectrum", "--n", "5", "--grid", "21"]);
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert_eq!(csv.lines().count(), 22);
}

#[test]
fn bad_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.txt");
    let out = adiaq(dir.path(), &["spectrum", "--instance", missing.to_str().unwrap()]);
    assert!(!out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stderr).lines().count(), 1);
    let out = adiaq(dir.path(), &["sweep", "--kind", "k9", "--n", "5"]);
    assert!(!out.status.success());
}
