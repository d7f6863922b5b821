//! Self-check suite behind the `validate` subcommand.
//!
//! Statistical checks run `M = budget·M₀` samples and use absolute
//! tolerances of the form `k/√M`, so a reduced budget widens them by
//! `√(M₀/M)`.

use std::f64::consts::PI;
use std::fmt;

use anyhow::Result;
use coherence_core::balance::{balance_loop, BalanceConfig, NoiseSwitches};
use coherence_core::budget::sweep_qmc;
use coherence_core::classical::{
    classical_variance, detector_irradiances, estimate_coherence_three_phase, simulate_phase_scan,
    PhaseScanMeasurement, DEFAULT_PHASES,
};
use coherence_core::field::{time_for_photons, FieldSampler};
use coherence_core::qubit::{
    ensemble_rabi_frequency, evolve_numeric, evolve_state, rotation_axis, three_level_oracle, LambdaSystem,
    QubitState, RabiDrive, RabiModel, RabiSeries,
};
use coherence_core::rng::stream_rng;
use coherence_core::stats::complex_variance;
use coherence_core::Complex64;
use rand::Rng;

use crate::config::ScenarioConfig;

/// Closed-form two-level propagator under test.
pub type Propagator = fn(&QubitState, &RabiDrive, f64) -> coherence_core::Result<QubitState>;

/// The library propagator.
pub const DEFAULT_PROPAGATOR: Propagator = evolve_state;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn below(name: &'static str, value: f64, tolerance: f64) -> Self {
        Self { name, value, tolerance, passed: value.is_finite() && value < tolerance }
    }

    fn failed(name: &'static str) -> Self {
        Self { name, value: f64::NAN, tolerance: f64::NAN, passed: false }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<34} {:>12.4e} {:>12.4e}  {}",
            self.name,
            self.value,
            self.tolerance,
            if self.passed { "PASS" } else { "FAIL" }
        )
    }
}

pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn table(&self) -> String {
        let mut s = format!("{:<34} {:>12} {:>12}  result\n", "check", "value", "tolerance");
        for c in &self.checks {
            s.push_str(&c.to_string());
            s.push('\n');
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        s.push_str(&format!("{} checks, {} failed\n", self.checks.len(), failed));
        s
    }
}

fn samples(base: usize, budget: f64) -> usize {
    ((base as f64 * budget).ceil() as usize).max(16)
}

fn random_state<R: Rng>(rng: &mut R) -> QubitState {
    QubitState::prepared(rng.random_range(0.0..PI), rng.random_range(-PI..PI))
}

/// Runs every check; a failing computation counts as a failed check.
pub fn run_checks(cfg: &ScenarioConfig, propagator: Propagator) -> Result<Report> {
    let budget = cfg.validate.sample_budget;
    let seed = cfg.seed;
    let mut checks = Vec::new();
    let mut push = |name: &'static str, r: Result<Check>| {
        checks.push(r.unwrap_or_else(|_| Check::failed(name)));
    };

    push("unitarity.two_level", unitarity_two_level(seed));
    push("unitarity.three_level", unitarity_three_level());
    push("dynamics.analytic_vs_numeric", analytic_vs_numeric(seed, propagator));
    push("dynamics.rotation_composition", rotation_composition(seed, propagator));
    let spec = cfg.field_spec()?;
    let atom = cfg.atom_params()?;
    push("field.cross_moment", field_cross_moment(&spec, seed, samples(20_000, budget)));
    push("field.power", field_power(&spec, seed, samples(20_000, budget)));
    push("qubit.mean_rabi", mean_rabi(&spec, &atom, seed, samples(20_000, budget)));
    push("adiabatic_elimination", adiabatic_elimination());
    let params = cfg.budget_params()?;
    push("budget.qmc_cross_check", qmc_cross_check(cfg, &params));
    push("classical.noiseless_recovery", classical_noiseless());
    push("classical.variance_ratio", classical_variance_ratio(cfg, samples(2000, budget)));
    push("balance.noiseless_recovery", balance_noiseless(cfg));
    Ok(Report { checks })
}

fn unitarity_two_level(seed: u64) -> Result<Check> {
    let mut rng = stream_rng(seed, 101);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let s0 = random_state(&mut rng);
        let steps = 2000;
        let dt = 0.005;
        let series = RabiSeries::from_fn(dt, steps, |t| Complex64::from_polar(1.0 + 0.5 * (3.0 * t).sin(), t))?;
        let s = evolve_numeric(&s0, &series, 0.7, -0.4, series.duration())?;
        worst = worst.max((s.norm_sqr() - 1.0).abs());
    }
    Ok(Check::below("unitarity.two_level", worst, 1e-8))
}

fn unitarity_three_level() -> Result<Check> {
    let delta = 1e3;
    let sys = LambdaSystem {
        g02: 30.0,
        g12: 30.0,
        alpha0: Complex64::new(1.0, 0.0),
        alpha1: Complex64::from_polar(1.0, 0.3),
        delta,
    };
    let t = (PI / 4.0) / sys.reduced_drive().omega.norm();
    let init = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)];
    let r = three_level_oracle(&sys, init, t, 0.05 / delta)?;
    Ok(Check::below("unitarity.three_level", r.max_norm_drift, 1e-8))
}

fn analytic_vs_numeric(seed: u64, prop: Propagator) -> Result<Check> {
    let mut rng = stream_rng(seed, 102);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let s0 = random_state(&mut rng);
        let omega = Complex64::from_polar(1.0, rng.random_range(-PI..PI));
        let steps = 700;
        let dt = rng.random_range(0.5..3.0) / steps as f64;
        let series = RabiSeries::constant(omega, dt, steps)?;
        let num = evolve_numeric(&s0, &series, 0.0, 0.0, series.duration())?;
        let ana = prop(&s0, &RabiDrive::resonant(omega), series.duration())?;
        worst = worst.max((num.c0 - ana.c0).norm()).max((num.c1 - ana.c1).norm());
    }
    Ok(Check::below("dynamics.analytic_vs_numeric", worst, 1e-8))
}

fn rotation_composition(seed: u64, prop: Propagator) -> Result<Check> {
    let mut rng = stream_rng(seed, 103);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let s0 = random_state(&mut rng);
        let phi = rng.random_range(-PI..PI);
        let (t1, t2) = (rng.random_range(0.0..3.0), rng.random_range(0.0..3.0));
        let drive = RabiDrive::resonant(Complex64::from_polar(1.0, phi));
        let stepped = prop(&prop(&s0, &drive, t1)?, &drive, t2)?.bloch();
        let direct = prop(&s0, &drive, t1 + t2)?.bloch();
        let axis = rotation_axis(phi);
        let rotated = s0.bloch().rotated(axis, -2.0 * t1).rotated(axis, -2.0 * t2);
        worst = worst.max(stepped.distance(&rotated)).max(direct.distance(&rotated));
    }
    Ok(Check::below("dynamics.rotation_composition", worst, 1e-10))
}

fn field_cross_moment(
    spec: &coherence_core::field::FieldPairSpec,
    seed: u64,
    m: usize,
) -> Result<Check> {
    let n = spec.n_occ();
    if n == 0.0 {
        return Ok(Check::below("field.cross_moment", 0.0, 1.0));
    }
    let mut sampler = FieldSampler::new(spec, seed, 104)?;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut buf = Vec::new();
    for _ in 0..m {
        sampler.fill(&mut buf);
        for (b0, b1) in &buf {
            acc += b0.conj() * b1;
        }
    }
    let count = (m * spec.mode_count()) as f64;
    let rho = acc / (count * n);
    let tol = 5.0 * (2.0 / count).sqrt();
    Ok(Check::below("field.cross_moment", (rho - spec.zeta()).norm(), tol))
}

fn field_power(spec: &coherence_core::field::FieldPairSpec, seed: u64, m: usize) -> Result<Check> {
    let n = spec.n_occ();
    if n == 0.0 {
        return Ok(Check::below("field.power", 0.0, 1.0));
    }
    let mut sampler = FieldSampler::new(spec, seed, 105)?;
    let mut acc = 0.0;
    let mut buf = Vec::new();
    for _ in 0..m {
        sampler.fill(&mut buf);
        acc += buf.iter().map(|(b0, _)| b0.norm_sqr()).sum::<f64>();
    }
    let count = (m * spec.mode_count()) as f64;
    Ok(Check::below("field.power", (acc / (count * n) - 1.0).abs(), 5.0 / count.sqrt()))
}

fn mean_rabi(
    spec: &coherence_core::field::FieldPairSpec,
    atom: &coherence_core::field::AtomCavityParams,
    seed: u64,
    m: usize,
) -> Result<Check> {
    let model = RabiModel::new(atom, spec)?;
    let target = ensemble_rabi_frequency(atom, spec, spec.mutual_coherence())?;
    let mut sampler = FieldSampler::new(spec, seed, 106)?;
    let mut buf = Vec::new();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut sum_sq = 0.0;
    for _ in 0..m {
        sampler.fill(&mut buf);
        let w = model.instantaneous(&buf, 0.0);
        sum += w;
        sum_sq += w.norm_sqr();
    }
    let mean = sum / m as f64;
    let rms = (sum_sq / m as f64).sqrt();
    // deviation in units of the per-sample rms
    Ok(Check::below("qubit.mean_rabi", (mean - target).norm() / rms.max(f64::MIN_POSITIVE), 5.0 / (m as f64).sqrt()))
}

fn adiabatic_elimination() -> Result<Check> {
    let delta = 1e3;
    let v = 10.0;
    let sys = LambdaSystem {
        g02: v,
        g12: v,
        alpha0: Complex64::new(1.0, 0.0),
        alpha1: Complex64::from_polar(1.0, 0.5),
        delta,
    };
    let drive = sys.reduced_drive();
    let t = (PI / 4.0) / drive.omega.norm();
    let init = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)];
    let r = three_level_oracle(&sys, init, t, 0.05 / delta)?;
    let two = evolve_state(&QubitState::ground(), &drive, t)?;
    Ok(Check::below("adiabatic_elimination", (r.c1.norm_sqr() - two.c1.norm_sqr()).abs(), 2e-3))
}

fn qmc_cross_check(cfg: &ScenarioConfig, params: &coherence_core::budget::BudgetParams) -> Result<Check> {
    let grid = cfg.sweep.grid()?;
    let points = sweep_qmc(&cfg.sweep.n_occ, &cfg.sweep.zeta, &grid, params)?;
    let mut worst: f64 = 0.0;
    for p in &points {
        let b = p.budget.clone()?;
        worst = worst.max(b.consistency());
    }
    Ok(Check::below("budget.qmc_cross_check", worst, 1e-10))
}

fn classical_noiseless() -> Result<Check> {
    let zeta = Complex64::from_polar(0.3, PI / 4.0);
    let meas = PhaseScanMeasurement {
        phases: DEFAULT_PHASES.to_vec(),
        mean_irradiances: DEFAULT_PHASES.iter().map(|&p| detector_irradiances(2.0, zeta, p)).collect(),
        integration_time: 1.0,
        eta: 1.0,
    };
    let est = estimate_coherence_three_phase(&meas, 2.0)?;
    Ok(Check::below("classical.noiseless_recovery", (est - zeta).norm(), 1e-12))
}

fn classical_variance_ratio(cfg: &ScenarioConfig, m: usize) -> Result<Check> {
    let spec = cfg.field_spec()?;
    let eta = cfg.field.detector_efficiency;
    let t = time_for_photons(spec.n_occ(), spec.delta_omega(), cfg.montecarlo.classical_n_t)?;
    let i0 = spec.irradiance();
    let mut rng = stream_rng(cfg.seed, 107);
    let mut est = Vec::with_capacity(m);
    for _ in 0..m {
        let scan = simulate_phase_scan(&mut rng, &spec, eta, t, &cfg.montecarlo.phases_rad)?;
        est.push(estimate_coherence_three_phase(&scan.measurement, i0)? * (eta * i0));
    }
    let sigma = classical_variance(eta, i0, spec.n_occ(), spec.omega_c(), t, spec.area())?;
    let ratio = complex_variance(&est) / sigma;
    Ok(Check::below("classical.variance_ratio", (ratio - 1.0).abs(), 5.0 / (m as f64).sqrt()))
}

fn balance_noiseless(cfg: &ScenarioConfig) -> Result<Check> {
    let spec = cfg.field_spec()?;
    let atom = cfg.atom_params()?;
    let control = cfg.control()?;
    let truth = spec.mutual_coherence();
    if truth.norm() == 0.0 {
        return Ok(Check::below("balance.noiseless_recovery", 0.0, 1e-6));
    }
    let bc = BalanceConfig {
        tol: Some(1e-10),
        noise: NoiseSwitches { atom_shot: false, photon: false },
        ..cfg.balance_config()
    };
    let r = balance_loop(&mut stream_rng(cfg.seed, 108), &spec, &atom, &control, &bc)?.result;
    let rel = (r.gamma12_estimate - truth).norm() / truth.norm();
    Ok(Check::below("balance.noiseless_recovery", if r.converged { rel } else { f64::INFINITY }, 1e-6))
}
