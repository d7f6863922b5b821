//! Subcommand drivers. Each writes its files into an output directory and
//! returns a summary the binary prints.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{ensure, Context, Result};
use coherence_core::balance::{balance_loop, control_rabi, BalanceConfig, BalanceResult, ControlSetting, PREP_SIN};
use coherence_core::budget::{atom_shot_noise, cross_validate_budget, sweep_qmc, CrossValidation, SweepPoint};
use coherence_core::classical::{
    classical_variance, estimate_coherence_three_phase, noise_equivalent_coherence, simulate_phase_scan, PhaseScan,
};
use coherence_core::field::{time_for_photons, AtomCavityParams, FieldPairSpec, FieldSampler};
use coherence_core::qubit::{evolve_numeric_trajectory, QubitState, RabiModel, RabiSeries, TrajectoryPoint};
use coherence_core::rng::stream_rng;
use coherence_core::Complex64;
use rayon::prelude::*;

use crate::config::{MonteCarloKind, ScenarioConfig};
use crate::output::{self, Field, Table};

/// Stream offsets keep the run families statistically independent.
const BALANCE_STREAM: u64 = 0;
const CLASSICAL_STREAM: u64 = 1 << 40;
const TRAJECTORY_STREAM: u64 = 1 << 41;

pub const SWEEP_FILE: &str = "sweep.csv";
pub const TRACE_FILE: &str = "balance_trace.csv";
pub const RESULT_FILE: &str = "balance_result.toml";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const BALANCE_RUNS_FILE: &str = "montecarlo_balance.csv";
pub const CLASSICAL_ESTIMATES_FILE: &str = "montecarlo_classical.csv";
pub const CLASSICAL_TRIALS_FILE: &str = "classical_trials.csv";
pub const REPORT_FILE: &str = "montecarlo_report.txt";
pub const CONFIG_ECHO_FILE: &str = "resolved_config.toml";

/// Writes the resolved configuration next to the outputs and returns it as
/// a header block.
pub fn echo_config(cfg: &ScenarioConfig, out: &Path) -> Result<String> {
    let text = cfg.to_toml()?;
    output::write_text(&out.join(CONFIG_ECHO_FILE), &text)?;
    let mut header = String::from("# resolved configuration\n");
    for line in text.lines() {
        let _ = writeln!(header, "#   {line}");
    }
    Ok(header)
}

pub fn run_sweep(cfg: &ScenarioConfig, out: &Path) -> Result<Vec<SweepPoint>> {
    let grid = cfg.sweep.grid()?;
    ensure!(!grid.is_empty(), "usage: the n_T grid is empty");
    let points = sweep_qmc(&cfg.sweep.n_occ, &cfg.sweep.zeta, &grid, &cfg.budget_params()?)?;
    output::write_sweep(&out.join(SWEEP_FILE), &points)?;
    Ok(points)
}

#[derive(Debug, Clone)]
pub struct BalanceOutcome {
    pub result: BalanceResult,
    pub truth: Complex64,
    pub trajectory: Option<Vec<TrajectoryPoint>>,
}

pub fn run_balance(cfg: &ScenarioConfig, out: &Path) -> Result<BalanceOutcome> {
    let spec = cfg.field_spec()?;
    let atom = cfg.atom_params()?;
    let control = cfg.control()?;
    let mut rng = stream_rng(cfg.seed, BALANCE_STREAM);
    let run = balance_loop(&mut rng, &spec, &atom, &control, &cfg.balance_config())?;
    output::write_trace(&out.join(TRACE_FILE), &run.trace)?;
    let truth = spec.mutual_coherence();
    output::write_text(&out.join(RESULT_FILE), &output::balance_result_toml(&run.result, truth))?;
    let trajectory = if cfg.balance.trajectory {
        let traj = balanced_trajectory(cfg, &spec, &atom, &run.result)?;
        output::write_trajectory(&out.join(TRAJECTORY_FILE), &traj)?;
        Some(traj)
    } else {
        None
    };
    Ok(BalanceOutcome { result: run.result, truth, trajectory })
}

/// Bloch trajectory of an equator-prepared atom over one interaction window,
/// driven by a sampled field plus the balanced control beams.
fn balanced_trajectory(
    cfg: &ScenarioConfig,
    spec: &FieldPairSpec,
    atom: &AtomCavityParams,
    result: &BalanceResult,
) -> Result<Vec<TrajectoryPoint>> {
    let model = RabiModel::new(atom, spec)?;
    let sample = FieldSampler::new(spec, cfg.seed, TRAJECTORY_STREAM)?.next_sample();
    let (s0, s1) = model.stark_shifts(&sample.amplitudes);
    let (w1, d0, d1) = control_rabi(&result.final_setting)?;
    let (delta0, delta1) = (s0 + d0, s1 + d1);
    let t = result.interaction_time;
    let points = cfg.balance.trajectory_points.max(1);
    let rate = delta0.abs().max(delta1.abs()).max(spec.delta_omega());
    let mut steps = points.max((t * rate / 0.02).ceil() as usize);
    loop {
        let dt = t / steps as f64;
        let series = RabiSeries::from_fn(dt, steps, |s| model.instantaneous(&sample.amplitudes, s) + w1)?;
        if series.max_abs() * dt < 0.02 {
            let state = QubitState::prepared(PREP_SIN.0, PREP_SIN.1);
            let stride = (steps / points).max(1);
            return Ok(evolve_numeric_trajectory(&state, &series, delta0, delta1, stride)?);
        }
        steps *= 2;
    }
}

fn balance_runs(
    spec: &FieldPairSpec,
    atom: &AtomCavityParams,
    control: &ControlSetting,
    bc: &BalanceConfig,
    seed: u64,
    runs: usize,
) -> Result<Vec<BalanceResult>> {
    (0..runs)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, BALANCE_STREAM + i as u64);
            Ok(balance_loop(&mut rng, spec, atom, control, bc)?.result)
        })
        .collect()
}

/// Repeated independent balance runs, in run order regardless of thread count.
pub fn balance_monte_carlo(cfg: &ScenarioConfig, runs: usize) -> Result<Vec<BalanceResult>> {
    balance_runs(&cfg.field_spec()?, &cfg.atom_params()?, &cfg.control()?, &cfg.balance_config(), cfg.seed, runs)
}

/// `σ_a²` for the atom number and interaction time of a balance run.
pub fn balance_prediction(cfg: &ScenarioConfig, r: &BalanceResult) -> Result<f64> {
    let spec = cfg.field_spec()?;
    let atom = cfg.atom_params()?;
    let n_a = match cfg.balance.atoms {
        Some(n) => (n / 2 * 2) as f64,
        None => {
            let n = coherence_core::field::atoms_in_waist(atom.n0(), spec.area(), atom.lambda())?.round() as u64;
            (n / 2 * 2) as f64
        }
    };
    Ok(atom_shot_noise(atom.delta(), atom.d02(), atom.d12(), r.interaction_time, atom.finesse(), n_a)?)
}

#[derive(Debug, Clone)]
pub struct ClassicalRun {
    pub zeta_hat: Complex64,
    pub scan: Option<PhaseScan>,
}

/// Repeated classical phase scans at `classical_n_t` photons each.
pub fn classical_monte_carlo(cfg: &ScenarioConfig, runs: usize, keep_scans: bool) -> Result<(Vec<ClassicalRun>, f64)> {
    let spec = cfg.field_spec()?;
    let eta = cfg.field.detector_efficiency;
    let t = time_for_photons(spec.n_occ(), spec.delta_omega(), cfg.montecarlo.classical_n_t)?;
    let i0 = spec.irradiance();
    let phases = &cfg.montecarlo.phases_rad;
    let runs: Vec<ClassicalRun> = (0..runs)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(cfg.seed, CLASSICAL_STREAM + i as u64);
            let scan = simulate_phase_scan(&mut rng, &spec, eta, t, phases)?;
            let zeta_hat = estimate_coherence_three_phase(&scan.measurement, i0)?;
            Ok(ClassicalRun { zeta_hat, scan: keep_scans.then_some(scan) })
        })
        .collect::<Result<_>>()?;
    Ok((runs, t))
}

#[derive(Debug, Clone)]
pub struct MonteCarloReport {
    pub balance: Option<CrossValidation>,
    pub balance_converged: usize,
    pub classical: Option<CrossValidation>,
    pub text: String,
}

pub fn run_montecarlo(cfg: &ScenarioConfig, out: &Path) -> Result<MonteCarloReport> {
    let runs = cfg.montecarlo.runs;
    let mut text = String::new();
    let mut balance = None;
    let mut balance_converged = 0;
    let mut classical = None;
    let kind = cfg.montecarlo.kind;

    if matches!(kind, MonteCarloKind::Balance | MonteCarloKind::Both) {
        let results = balance_monte_carlo(cfg, runs)?;
        let mut t = Table::create(&out.join(BALANCE_RUNS_FILE), &output::BALANCE_RUNS_HEADER)?;
        for (i, r) in results.iter().enumerate() {
            output::balance_run_row(&mut t, i, r)?;
        }
        t.finish()?;
        balance_converged = results.iter().filter(|r| r.converged).count();
        let estimates: Vec<Complex64> = results.iter().map(|r| r.gamma12_estimate).collect();
        let predicted = balance_prediction(cfg, &results[0])?;
        let _ = writeln!(text, "balance runs: {runs} ({balance_converged} converged)");
        let _ = writeln!(text, "balance mean gamma12: {}", fmt_c(mean_c(&estimates)));
        let _ = writeln!(text, "balance true gamma12: {}", fmt_c(cfg.field_spec()?.mutual_coherence()));
        match cross_validate_budget(&estimates, predicted) {
            Ok(cv) => {
                let _ = writeln!(
                    text,
                    "balance var(gamma12_hat) = {} vs sigma_a^2 = {}: ratio {:.4} +- {:.4}",
                    output::fmt_f64(cv.empirical),
                    output::fmt_f64(cv.predicted),
                    cv.ratio,
                    cv.ratio_stderr
                );
                balance = Some(cv);
            }
            Err(e) => {
                let _ = writeln!(text, "balance cross-validation skipped: {e}");
            }
        }
    }

    if matches!(kind, MonteCarloKind::Classical | MonteCarloKind::Both) {
        let dump = cfg.montecarlo.dump_trials;
        let (results, t_int) = classical_monte_carlo(cfg, runs, dump)?;
        let spec = cfg.field_spec()?;
        let eta = cfg.field.detector_efficiency;
        let i0 = spec.irradiance();
        let sigma_i = classical_variance(eta, i0, spec.n_occ(), spec.omega_c(), t_int, spec.area())?;
        let floor = noise_equivalent_coherence(sigma_i)?;
        let mut t = Table::create(&out.join(CLASSICAL_ESTIMATES_FILE), &output::CLASSICAL_ESTIMATES_HEADER)?;
        for (i, r) in results.iter().enumerate() {
            t.row(&[
                Field::U(i as u64),
                Field::F(r.zeta_hat.re),
                Field::F(r.zeta_hat.im),
                Field::F(sigma_i),
                Field::F(floor),
            ])?;
        }
        t.finish()?;
        if dump {
            let mut t = Table::create(&out.join(CLASSICAL_TRIALS_FILE), &output::CLASSICAL_TRIALS_HEADER)?;
            for (i, r) in results.iter().enumerate() {
                let scan = r.scan.as_ref().context("trial scan missing")?;
                output::classical_trial_rows(&mut t, i, &scan.measurement, &scan.counts)?;
            }
            t.finish()?;
        }
        // compare var(ζ̂)·(ηI₀)² with σ_I²
        let scaled: Vec<Complex64> = results.iter().map(|r| r.zeta_hat * (eta * i0)).collect();
        let _ = writeln!(text, "classical runs: {runs}");
        let _ = writeln!(text, "classical mean zeta_hat: {}", fmt_c(mean_c(&results.iter().map(|r| r.zeta_hat).collect::<Vec<_>>())));
        let _ = writeln!(text, "classical noise-equivalent coherence: {}", output::fmt_f64(floor));
        match cross_validate_budget(&scaled, sigma_i) {
            Ok(cv) => {
                let _ = writeln!(
                    text,
                    "classical var(zeta_hat*I0) = {} vs sigma_I^2 = {}: ratio {:.4} +- {:.4}",
                    output::fmt_f64(cv.empirical),
                    output::fmt_f64(cv.predicted),
                    cv.ratio,
                    cv.ratio_stderr
                );
                classical = Some(cv);
            }
            Err(e) => {
                let _ = writeln!(text, "classical cross-validation skipped: {e}");
            }
        }
    }
    output::write_text(&out.join(REPORT_FILE), &text)?;
    Ok(MonteCarloReport { balance, balance_converged, classical, text })
}

fn mean_c(zs: &[Complex64]) -> Complex64 {
    coherence_core::stats::complex_mean(zs)
}

fn fmt_c(z: Complex64) -> String {
    format!("{} {:+.16e}i", output::fmt_f64(z.re), z.im)
}
