use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gge(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gge"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env_remove("GGE_SEED")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = gge(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Data rows of a CSV file, skipping the provenance comment and the header.
fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(2)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

const SAMPLE: [&str; 11] = ["sample", "--ensemble", "al", "--n", "64", "--beta", "1", "--samples", "100", "--seed", "7"];

#[test]
fn sample_is_bit_exact_under_a_seed() {
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    ok(a.path(), &SAMPLE);
    ok(b.path(), &SAMPLE);
    let x = fs::read(a.path().join("samples.csv")).unwrap();
    assert_eq!(x, fs::read(b.path().join("samples.csv")).unwrap());
    let text = String::from_utf8(x).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# gge sample seed=7 config_hash="));
    assert!(lines[1].starts_with("index,re_alpha_1,im_alpha_1,re_alpha_2"));
    assert_eq!(lines.len(), 102);
    assert_eq!(lines[2].split(',').count(), 129);

    let mut other = SAMPLE.to_vec();
    other[10] = "8";
    ok(c.path(), &other);
    assert_ne!(csv_rows(&a.path().join("samples.csv")), csv_rows(&c.path().join("samples.csv")));
}

#[test]
fn seed_falls_back_to_environment() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    ok(a.path(), &SAMPLE);
    let out = Command::new(env!("CARGO_BIN_EXE_gge"))
        .args(&SAMPLE[..9])
        .arg("--out")
        .arg(b.path())
        .env("GGE_SEED", "7")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(fs::read(a.path().join("samples.csv")).unwrap(), fs::read(b.path().join("samples.csv")).unwrap());
}

#[test]
fn missing_beta_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    let out = gge(d.path(), &["sample", "--n", "8"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--beta") && err.contains("Usage"), "{err}");
    assert!(!d.path().join("samples.csv").exists());
}

#[test]
fn circular_ensemble_reports_acceptance() {
    let d = tempfile::tempdir().unwrap();
    let out = ok(
        d.path(),
        &["sample", "--ensemble", "circular", "--potential", "c1=1.0", "--n", "16", "--beta", "2", "--samples", "50"],
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("acceptance rate"));
    let rate = read_json(&d.path().join("sample_summary.json"))["result"]["acceptance_rate"].as_f64().unwrap();
    assert!(rate > 0.05 && rate < 1.0, "{rate}");
}

#[test]
fn config_file_is_overridden_by_flags() {
    let d = tempfile::tempdir().unwrap();
    let conf = d.path().join("run.conf");
    fs::write(&conf, "# small run\nensemble = al\nn = 8\nbeta = 3\nsamples = 5\n").unwrap();
    let conf = conf.to_str().unwrap();
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    ok(&a, &["--config", conf, "sample"]);
    ok(&b, &["--config", conf, "sample", "--beta", "1"]);
    let ra = csv_rows(&a.join("samples.csv"));
    assert_eq!((ra.len(), ra[0].len()), (5, 17));
    let summary = |p: &Path| read_json(&p.join("sample_summary.json"));
    assert_ne!(summary(&a)["provenance"]["config_hash"], summary(&b)["provenance"]["config_hash"]);
    assert_ne!(ra, csv_rows(&b.join("samples.csv")));
}

#[test]
fn json_format_writes_arrays() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["sample", "--n", "4", "--beta", "1", "--samples", "3", "--format", "json", "--angles"]);
    let doc = read_json(&d.path().join("samples.json"));
    let states = doc["result"]["states"].as_array().unwrap();
    assert_eq!(states.len(), 3);
    assert_eq!(states[0].as_array().unwrap().len(), 4);
    assert_eq!(read_json(&d.path().join("angles.json"))["result"]["theta"][0].as_array().unwrap().len(), 4);
    assert!(!d.path().join("samples.csv").exists());
}

#[test]
fn zero_potential_dos_is_flat_with_unit_mass() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["dos", "--n", "32", "--beta", "1", "--samples", "400", "--bins", "16", "--k-max", "8"]);
    let rows = csv_rows(&d.path().join("dos.csv"));
    assert_eq!(rows.len(), 16);
    let flat = 1.0 / (2.0 * std::f64::consts::PI);
    let mass: f64 = rows.iter().map(|r| r[1]).sum::<f64>() * 2.0 * std::f64::consts::PI / 16.0;
    assert!((mass - 1.0).abs() < 1e-12);
    // 800 points per bin on average: a 5σ band is about 18% of the flat value
    for r in &rows {
        assert!((r[1] - flat).abs() < 0.18 * flat, "{r:?}");
    }
    let moments = csv_rows(&d.path().join("moments.csv"));
    assert_eq!(moments[0], vec![0.0, 1.0, 0.0]);
    assert!(moments[1..].iter().all(|m| m[1].hypot(m[2]) < 0.03));

    let e = tempfile::tempdir().unwrap();
    ok(e.path(), &["dos", "--n", "32", "--beta", "1", "--samples", "400", "--bins", "16", "--k-max", "8"]);
    assert_eq!(fs::read(d.path().join("dos.csv")).unwrap(), fs::read(e.path().join("dos.csv")).unwrap());
}

#[test]
fn interval_dos_and_kde() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["dos", "--ensemble", "schur", "--n", "16", "--beta", "1", "--samples", "50", "--bins", "10"]);
    let rows = csv_rows(&d.path().join("dos.csv"));
    assert!((rows.iter().map(|r| r[1]).sum::<f64>() * 0.2 - 1.0).abs() < 1e-12);
    assert_eq!(read_json(&d.path().join("dos_summary.json"))["result"]["points"], 400);

    let k = tempfile::tempdir().unwrap();
    ok(k.path(), &["dos", "--n", "16", "--beta", "1", "--samples", "50", "--kde-bandwidth", "0.2", "--kde-grid", "64"]);
    assert_eq!(csv_rows(&k.path().join("dos.csv")).len(), 64);
    let bad = gge(k.path(), &["dos", "--ensemble", "schur", "--n", "16", "--beta", "1", "--kde-bandwidth", "0.2"]);
    assert!(!bad.status.success());
}

#[test]
fn minimize_zero_potential_is_uniform() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["minimize", "--beta", "2", "--grid", "64", "--delta", "0.05"]);
    let rows = csv_rows(&d.path().join("density.csv"));
    assert_eq!(rows.len(), 64);
    let flat = 1.0 / (2.0 * std::f64::consts::PI);
    assert!(rows.iter().all(|r| (r[1] - flat).abs() < 1e-12));
    let report = &read_json(&d.path().join("report.json"))["result"];
    assert!(report["normalized_free_energy"].as_f64().unwrap().abs() < 1e-10);
    assert!(report["residual"].as_f64().unwrap() < 1e-10);
    assert!(d.path().join("derivative.csv").exists());
}

#[test]
fn minimize_interval_and_convergence_failure() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["minimize", "--beta", "1", "--potential", "t1=0.5", "--grid", "128"]);
    let report = read_json(&d.path().join("report.json"));
    assert_eq!(report["result"]["domain"], "interval");
    assert!((report["result"]["mass"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let out = gge(d.path(), &["minimize", "--beta", "1", "--potential", "c1=0.5", "--grid", "64", "--max-iterations", "2"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("residual"));
}

#[test]
fn relation_passes_and_threshold_is_honored() {
    let d = tempfile::tempdir().unwrap();
    let base = ["relation", "--n", "32", "--beta", "1", "--samples", "500", "--grid", "64", "--k-max", "16"];
    ok(d.path(), &base);
    let rep = read_json(&d.path().join("relation.json"));
    assert_eq!(rep["result"]["pass"], true);
    assert_eq!(rep["result"]["threshold"], 0.02);

    let mut strict = base.to_vec();
    strict.extend(["--threshold", "1e-6"]);
    let out = gge(d.path(), &strict);
    assert_eq!(out.status.code(), Some(1));
    let rep = read_json(&d.path().join("relation.json"));
    assert_eq!(rep["result"]["threshold"], 1e-6);
    assert_eq!(rep["result"]["pass"], false);
}

#[test]
fn schur_relation_at_zero_potential() {
    let d = tempfile::tempdir().unwrap();
    ok(
        d.path(),
        &["relation", "--ensemble", "schur", "--n", "32", "--beta", "1", "--samples", "1000", "--grid", "256", "--k-max", "16"],
    );
}

#[test]
fn dynamics_reports_conservation_and_lax_order() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["dynamics", "--n", "16", "--dt", "0.01", "--t-final", "1", "--record-every", "10"]);
    let rows = csv_rows(&d.path().join("trajectory.csv"));
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[0].len(), 33);
    let rep = &read_json(&d.path().join("conservation.json"))["result"];
    assert!(rep["max_drift"].as_f64().unwrap() < 1e-8);
    let ratio = rep["lax"]["ratio"].as_f64().unwrap();
    assert!((ratio - 2.0).abs() < 0.1, "{ratio}");

    let z = tempfile::tempdir().unwrap();
    ok(z.path(), &["dynamics", "--n", "8", "--radius", "0", "--t-final", "0.1", "--dt", "0.01"]);
    assert_eq!(read_json(&z.path().join("conservation.json"))["result"]["max_drift"], 0.0);
    assert!(csv_rows(&z.path().join("trajectory.csv")).iter().all(|r| r[1..].iter().all(|x| *x == 0.0)));

    let out = gge(z.path(), &["dynamics", "--flow", "schur", "--n", "16", "--dt", "5", "--t-final", "10"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dt"));
}

#[test]
fn dynamics_invariance_test() {
    let d = tempfile::tempdir().unwrap();
    let args = ["dynamics", "--n", "16", "--dt", "0.01", "--t-final", "0.1", "--invariance-samples", "200", "--beta", "1"];
    ok(d.path(), &args);
    let inv = &read_json(&d.path().join("conservation.json"))["result"]["invariance"];
    assert_eq!(inv["samples"], 200);
    assert_eq!(inv["stats"].as_array().unwrap().len(), 5);
    let missing = gge(d.path(), &args[..8]);
    assert!(!missing.status.success());
}

#[test]
fn verify_selection_and_schema() {
    let d = tempfile::tempdir().unwrap();
    let out = ok(d.path(), &["verify", "--check", "product-bounds", "--check", "exp-moment"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS product-bounds") && stdout.contains("PASS exp-moment"));
    let doc = read_json(&d.path().join("verify.json"));
    assert!(doc["provenance"]["config_hash"].as_str().unwrap().len() == 64);
    let r = &doc["result"];
    assert_eq!(r["pass"], true);
    assert!(r["failures"].as_array().unwrap().is_empty());
    let checks = r["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 2);
    for c in checks {
        assert!(c["check"].is_string() && c["name"].is_string());
        assert!(c["parameters"].is_object() && c["statistics"].is_object());
        assert!(c["pass"].is_boolean());
    }
    assert!(!gge(d.path(), &["verify", "--check", "nonsense"]).status.success());
}

#[test]
fn verify_default_suite_passes() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["verify"]);
    let r = read_json(&d.path().join("verify.json"));
    assert_eq!(r["result"]["checks"].as_array().unwrap().len(), 8);
}

#[test]
fn free_energy_of_constant_potential() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["free-energy", "--beta", "1", "--potential", "c0=0.7", "--n", "8", "--samples", "20", "--s-points", "3"]);
    let est = &read_json(&d.path().join("free_energy.json"))["result"]["estimate"];
    assert!((est["value"].as_f64().unwrap() - 0.7).abs() < 1e-12);
    assert_eq!(csv_rows(&d.path().join("integrand.csv")).len(), 3);
}
