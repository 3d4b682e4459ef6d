use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;
use vortex_core::SolutionFile;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_serrin-vortex"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn load(path: PathBuf) -> SolutionFile {
    SolutionFile::load(&path).expect("valid solution file")
}

fn value_at(file: &SolutionFile, series: &[f64], x: f64) -> f64 {
    let i = file.x.iter().position(|v| (v - x).abs() < 1e-12).expect("node present");
    series[i]
}

/// A copy of `src` with `Omega` replaced by `Omega + 0.1 x`.
fn perturbed(dir: &Path, src: &str, dst: &str) {
    let mut file = load(dir.join(src));
    for (w, x) in file.omega.iter_mut().zip(&file.x) {
        *w += 0.1 * x;
    }
    file.save(&dir.join(dst)).unwrap();
}

#[test]
fn analytic_b1_file_holds_the_closed_form() {
    let dir = TempDir::new().unwrap();
    let c1 = 4.0 * 2f64.sqrt();
    let out = run(dir.path(), &["analytic", "--C1", &c1.to_string(), "--C-omega", "1", "--h", "1e-3"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let file = load(dir.path().join("solution.json"));
    let f_half = value_at(&file, &file.f, 0.5);
    assert!((f_half - 2.0 * 2f64.sqrt()).abs() <= 1e-12, "F(0.5) = {f_half}");
    assert!(file.omega.iter().all(|w| *w == 1.0));
}

#[test]
fn analytic_with_rounded_constant_is_exactly_half_of_it() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["analytic", "--C1", "5.6568"]);
    assert_eq!(code(&out), 0);
    let file = load(dir.path().join("solution.json"));
    assert!((value_at(&file, &file.f, 0.5) - 2.8284).abs() <= 1e-12);
}

#[test]
fn analytic_trivial_and_invalid_amplitude() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["analytic", "--C1", "0", "-o", "t.json"]);
    assert_eq!(code(&out), 0);
    let file = load(dir.path().join("t.json"));
    assert!(file.f.iter().chain(&file.g).all(|v| *v == 0.0));
    assert!(file.omega.iter().all(|v| *v == 1.0));

    let out = run(dir.path(), &["analytic", "--C1", "1", "--C-omega", "0"]);
    assert_eq!(code(&out), 2);
    assert!(!dir.path().join("solution.json").exists());
}

#[test]
fn solve_inviscid_converges_with_report() {
    let dir = TempDir::new().unwrap();
    let out = run(
        dir.path(),
        &["solve-inviscid", "--b", "0.6", "--c", "0.25", "--h", "1e-3", "-o", "s.json", "--report", "r.json"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let file = load(dir.path().join("s.json"));
    assert_eq!(file.b, 0.6);
    // Omega vanishes at x = 0 like x^((1-b)/2).
    let local_power = (file.omega[1] / file.omega[0]).ln() / 2f64.ln();
    assert!((local_power - 0.2).abs() < 0.05, "Omega(h) = {}, Omega(2h) = {}", file.omega[0], file.omega[1]);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert!(report["newton_iters"].as_u64().unwrap() > 0);
    assert!(report["flux"].as_f64().unwrap().abs() <= 1e-5);
}

#[test]
fn solve_inviscid_rejects_unstable_b_and_reports_divergence() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["solve-inviscid", "--b", "1.2"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("unstable"), "{}", stderr(&out));

    let out = run(dir.path(), &["solve-inviscid", "--b", "0.6", "--c", "50"]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn b_sweep_summary_has_nine_converged_rows() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["sweep", "--b-list", "0.1:0.9:0.1", "--out-dir", "sw"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("sw/summary.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| r.split(',').nth(2) == Some("true")));
}

#[test]
fn c_sweep_has_ten_entries() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["sweep", "--b", "0.6", "--c-list", "0.1:1.0:0.1", "--out-dir", "sw"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("sw/summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
}

#[test]
fn single_entry_sweep_equals_direct_solve() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&run(dir.path(), &["sweep", "--b-list", "0.6", "--cold", "--out-dir", "sw"])), 0);
    assert_eq!(code(&run(dir.path(), &["solve-inviscid", "--b", "0.6", "-o", "d.json"])), 0);
    let a = load(dir.path().join("sw/b0.6_c0.25.json"));
    let b = load(dir.path().join("d.json"));
    assert_eq!(a.f, b.f);
    assert_eq!(a.omega, b.omega);
}

#[test]
fn identical_invocations_write_identical_bytes() {
    let dir = TempDir::new().unwrap();
    for name in ["a.json", "b.json"] {
        assert_eq!(code(&run(dir.path(), &["solve-inviscid", "--b", "0.4", "-o", name])), 0);
    }
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    let b = std::fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("cfg.json"), r#"{"C1": 2, "C_omega": 3, "h": 0.01}"#).unwrap();
    let out = run(dir.path(), &["--config", "cfg.json", "analytic", "-o", "a.json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let file = load(dir.path().join("a.json"));
    assert_eq!(file.x.len(), 100);
    assert_eq!(file.c_omega, 3.0);
    assert_eq!(value_at(&file, &file.f, 0.5), 1.0);

    let out = run(dir.path(), &["--config", "cfg.json", "analytic", "--C1", "4", "-o", "b.json"]);
    assert_eq!(code(&out), 0);
    let file = load(dir.path().join("b.json"));
    assert_eq!(value_at(&file, &file.f, 0.5), 2.0);

    std::fs::write(dir.path().join("bad.json"), r#"{"unknown": 1}"#).unwrap();
    assert_eq!(code(&run(dir.path(), &["--config", "bad.json", "analytic", "--C1", "1"])), 2);
    assert_eq!(code(&run(dir.path(), &["--config", "missing.json", "analytic", "--C1", "1"])), 5);
}

#[test]
fn thread_variable_is_validated() {
    let dir = TempDir::new().unwrap();
    let out = bin()
        .current_dir(dir.path())
        .env("SERRIN_VORTEX_THREADS", "zero")
        .args(["analytic", "--C1", "0"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    let out = bin()
        .current_dir(dir.path())
        .env("SERRIN_VORTEX_THREADS", "2")
        .args(["sweep", "--b-list", "0.2,0.4", "--cold"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn verify_accepts_solutions_and_rejects_perturbed_ones() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    assert_eq!(code(&run(d, &["analytic", "--C1", "5.656854249492381", "-o", "b1.json"])), 0);
    assert_eq!(code(&run(d, &["verify", "b1.json"])), 0);
    perturbed(d, "b1.json", "b1p.json");
    let out = run(d, &["verify", "b1p.json"]);
    assert_eq!(code(&out), 4);
    assert!(stdout(&out).contains("FAIL"));

    assert_eq!(code(&run(d, &["solve-inviscid", "--b", "0.6", "-o", "s.json"])), 0);
    let out = run(d, &["verify", "s.json", "--report", "res.csv"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(std::fs::read_to_string(d.join("res.csv")).unwrap().lines().count() > 100);
    perturbed(d, "s.json", "sp.json");
    assert_eq!(code(&run(d, &["verify", "sp.json"])), 4);
}

#[test]
fn verify_trivial_b15_passes_with_stability_warning() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&run(dir.path(), &["analytic", "--C1", "0", "--b", "1.5", "-o", "t.json"])), 0);
    let out = run(dir.path(), &["verify", "t.json"]);
    assert_eq!(code(&out), 0);
    assert!(stderr(&out).contains("unstable"), "{}", stderr(&out));
}

#[test]
fn verify_missing_file_is_an_io_error() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&run(dir.path(), &["verify", "nope.json"])), 5);
}

#[test]
fn viscous_round_trip_and_resolution_guard() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let out = run(d, &["solve-viscous", "--k", "100", "-o", "v.json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let file = load(d.join("v.json"));
    assert_eq!(file.nu, 0.005);
    assert_eq!(code(&run(d, &["verify", "v.json"])), 0);
    perturbed(d, "v.json", "vp.json");
    assert_eq!(code(&run(d, &["verify", "vp.json"])), 4);

    assert_eq!(code(&run(d, &["solve-viscous", "--nu", "0.01", "--h", "0.01"])), 2);
}

#[test]
fn layer_scaling_slope_brackets_two_thirds() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["layer-scaling", "-o", "layer.csv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let slope: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("slope="))
        .expect("slope line")
        .trim()
        .parse()
        .unwrap();
    assert!((0.60..=0.73).contains(&slope), "slope {slope}");
    let csv = std::fs::read_to_string(dir.path().join("layer.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
}

fn exponent(text: &str) -> f64 {
    let tail = text.split("exponent=").nth(1).expect("exponent printed");
    tail.split_whitespace().next().unwrap().parse().unwrap()
}

#[test]
fn fields_outputs() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    assert_eq!(code(&run(d, &["analytic", "--C1", "-3", "-o", "b1.json"])), 0);
    assert_eq!(code(&run(d, &["analytic", "--C1", "0", "--b", "0.5", "-o", "t.json"])), 0);

    let out = run(d, &["fields", "-s", "b1.json", "powerlaw"]);
    assert!((exponent(&stdout(&out)) + 1.0).abs() <= 0.02);
    let out = run(d, &["fields", "-s", "t.json", "powerlaw"]);
    assert!((exponent(&stdout(&out)) + 0.5).abs() <= 0.02);

    let out = run(d, &["fields", "-s", "b1.json", "grid", "--kind", "speed", "--n-r", "4", "--n-z", "5"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = std::fs::read_to_string(d.join("field.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("r,z,value"));
    assert_eq!(csv.lines().count(), 21);

    let out = run(d, &["fields", "-s", "b1.json", "streamline", "--start", "0.5,0,0.5", "--steps", "2000"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let drift: f64 = stdout(&out)
        .split("psi_drift=")
        .nth(1)
        .unwrap()
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(drift <= 1e-4, "drift {drift}");

    let out = run(d, &["fields", "-s", "t.json", "rayleigh", "--n-r", "3", "--n-z", "3"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("Stable"));

    let out = run(d, &["fields", "-s", "b1.json", "grid", "--r", "1:0.5"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn solved_field_power_law() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&run(dir.path(), &["solve-inviscid", "--b", "0.6", "-o", "s.json"])), 0);
    let out = run(dir.path(), &["fields", "-s", "s.json", "powerlaw"]);
    assert!((exponent(&stdout(&out)) + 0.6).abs() <= 0.02, "{}", stdout(&out));
}
