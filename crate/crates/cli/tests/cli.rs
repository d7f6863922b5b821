use std::path::Path;
use std::process::{Command, Output};

use coherence::config::ScenarioConfig;
use coherence::validate::{run_checks, DEFAULT_PROPAGATOR};
use coherence_core::qubit::{evolve_state, QubitState, RabiDrive};

fn coherence(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coherence"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn coherence")
}

fn read(dir: &Path, file: &str) -> Vec<u8> {
    std::fs::read(dir.join(file)).unwrap_or_else(|e| panic!("{file}: {e}"))
}

#[test]
fn montecarlo_is_identical_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["montecarlo", "--seed", "7", "--set", "montecarlo.runs=200", "--set", "montecarlo.dump_trials=true"];
    let ra = coherence(&[&args[..], &["--threads", "1"]].concat(), a.path());
    let rb = coherence(&[&args[..], &["--threads", "4"]].concat(), b.path());
    assert!(ra.status.success(), "{}", String::from_utf8_lossy(&ra.stderr));
    assert!(rb.status.success(), "{}", String::from_utf8_lossy(&rb.stderr));
    for f in ["montecarlo_balance.csv", "montecarlo_classical.csv", "classical_trials.csv", "montecarlo_report.txt"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f} differs");
    }
    assert_eq!(ra.stdout, rb.stdout);
}

#[test]
fn seed_changes_output() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(coherence(&["balance", "--seed", "1"], a.path()).status.success());
    assert!(coherence(&["balance", "--seed", "2"], b.path()).status.success());
    assert_ne!(read(a.path(), "balance_trace.csv"), read(b.path(), "balance_trace.csv"));
}

#[test]
fn empty_grid_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    let r = coherence(&["sweep", "--set", "sweep.n_t=[]"], d.path());
    assert_eq!(r.status.code(), Some(2));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.starts_with("error:") && err.contains("empty"), "{err}");
}

#[test]
fn unknown_config_key_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("bad.toml");
    std::fs::write(&cfg, "[field]\nbogus = 1.0\n").unwrap();
    let r = coherence(&["sweep", "--config", cfg.to_str().unwrap()], d.path());
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn sweep_writes_every_curve() {
    let d = tempfile::tempdir().unwrap();
    let r = coherence(&["sweep"], d.path());
    assert!(r.status.success());
    let text = String::from_utf8(read(d.path(), "sweep.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n_occ,zeta,n_T,Q_mc,sigma_p_sq,sigma_L_sq,sigma_sp_sq,sigma_a_sq,sigma_I_sq,dominant_term,log10_n_T,log10_Q_mc"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    // 3 occupations × 4 coherences × 81 grid points
    assert_eq!(rows.len(), 12 * 81);
    let mut curves: Vec<(&str, &str)> = rows.iter().map(|r| (r[0], r[1])).collect();
    curves.dedup();
    assert_eq!(curves.len(), 12);
    for r in &rows {
        assert_eq!(r.len(), 12);
        let q: f64 = r[3].parse().unwrap();
        assert!(q.is_finite() && q > 0.0);
        assert!(r[3].contains('e'));
    }
}

#[test]
fn config_is_echoed() {
    let d = tempfile::tempdir().unwrap();
    let r = coherence(&["sweep", "--seed", "42"], d.path());
    let stdout = String::from_utf8(r.stdout).unwrap();
    assert!(stdout.starts_with("# resolved configuration"));
    assert!(stdout.contains("#   seed = 42"));
    let echoed = ScenarioConfig::load(&d.path().join("resolved_config.toml")).unwrap();
    assert_eq!(echoed.seed, 42);
    assert!(echoed.field.omega_c_rad_per_s.is_some());
}

#[test]
fn balance_writes_trajectory_on_request() {
    let d = tempfile::tempdir().unwrap();
    let r = coherence(&["balance", "--set", "balance.trajectory=true"], d.path());
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = String::from_utf8(read(d.path(), "trajectory.csv")).unwrap();
    assert!(text.starts_with("t_s,re_c0,im_c0,re_c1,im_c1,x,y,z\n"));
    assert!(text.lines().count() > 10);
    let toml = String::from_utf8(read(d.path(), "balance_result.toml")).unwrap();
    assert!(toml.contains("[result.control]"));
}

#[test]
fn validate_passes_with_defaults() {
    let d = tempfile::tempdir().unwrap();
    let r = coherence(&["validate"], d.path());
    let stdout = String::from_utf8_lossy(&r.stdout);
    assert_eq!(r.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("0 failed"));
}

#[test]
fn reduced_sample_budget_still_passes() {
    let d = tempfile::tempdir().unwrap();
    let r = coherence(&["validate", "--sample-budget", "0.05"], d.path());
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stdout));
}

fn flipped_phase(state: &QubitState, drive: &RabiDrive, t: f64) -> coherence_core::Result<QubitState> {
    let wrong = RabiDrive::new(drive.omega.conj(), drive.delta0, drive.delta1);
    evolve_state(state, &wrong, t)
}

#[test]
fn sign_error_in_propagator_is_caught() {
    let cfg = ScenarioConfig::default().resolved().unwrap();
    let good = run_checks(&cfg, DEFAULT_PROPAGATOR).unwrap();
    assert!(good.all_passed(), "{}", good.table());
    let bad = run_checks(&cfg, flipped_phase).unwrap();
    let failing: Vec<&str> = bad.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    assert!(failing.contains(&"dynamics.rotation_composition"), "{failing:?}");
    assert!(failing.contains(&"dynamics.analytic_vs_numeric"), "{failing:?}");
}
