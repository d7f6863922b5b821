//! Null-balancing loop: coherent control beams cancel the field-driven Rabi
//! frequency, and the balanced control setting reads out `Γ₁₂`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{bail, ensure, Result};
use crate::field::{atoms_in_waist, AtomCavityParams, FieldPairSpec};
use crate::qubit::{ac_stark_shifts, ensemble_rabi_frequency, evolve_analytic, rabi_per_coherence, RabiDrive};
use crate::rng::circular_normal;

/// Coherent control beams (Λ-coupled through the same upper state, detuned by `Δ_L`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSetting {
    pub alpha0: Complex64,
    pub alpha1: Complex64,
    pub psi: f64,
    /// Control detuning, rad/s.
    pub delta_l: f64,
    /// Control coupling rates, rad/s per unit amplitude.
    pub g02: Complex64,
    pub g12: Complex64,
}

impl ControlSetting {
    /// Beams off, couplings and detuning given.
    pub fn dark(g02: Complex64, g12: Complex64, delta_l: f64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self { alpha0: zero, alpha1: zero, psi: 0.0, delta_l, g02, g12 }
    }

    /// Amplitudes and phase producing `omega1` while trimming the intensities
    /// so that `δ₀ + δ″₀ = δ₁ + δ″₁` for field Stark shifts `stark`.
    ///
    /// With `a = |g₀₂α₀|²`, `b = |g₁₂α₁|²` this solves `ab = (|Ω₁|Δ_L)²`,
    /// `a − b = (δ₁ − δ₀)Δ_L`.
    pub fn synthesize(&self, omega1: Complex64, stark: (f64, f64)) -> Result<Self> {
        ensure!(self.delta_l != 0.0, Singularity, "control detuning is zero");
        ensure!(
            self.g02.norm() > 0.0 && self.g12.norm() > 0.0,
            Domain,
            "control couplings must be nonzero"
        );
        let p = omega1.norm() * self.delta_l.abs();
        let d = (stark.1 - stark.0) * self.delta_l;
        let root = (d * d + 4.0 * p * p).sqrt();
        // take the large root directly and the other from ab = p²
        let (a, b) = if d >= 0.0 {
            let a = 0.5 * (d + root);
            (a, if a > 0.0 { p * p / a } else { 0.0 })
        } else {
            let b = 0.5 * (root - d);
            (if b > 0.0 { p * p / b } else { 0.0 }, b)
        };
        let alpha0 = Complex64::new(a.sqrt() / self.g02.norm(), 0.0);
        let alpha1 = Complex64::new(b.sqrt() / self.g12.norm(), 0.0);
        // arg Ω₁ = arg(g₀₂* g₁₂) − ψ + arg(Δ_L)
        let base = (self.g02.conj() * self.g12).arg() + if self.delta_l < 0.0 { PI } else { 0.0 };
        let psi = if p > 0.0 { base - omega1.arg() } else { 0.0 };
        Ok(Self { alpha0, alpha1, psi, ..*self })
    }
}

/// `Ω₁ = g₀₂* g₁₂ α₀* α₁ e^{−iψ}/Δ_L`, `δ″_i = |g_{i2}|²|α_i|²/Δ_L`.
pub fn control_rabi(setting: &ControlSetting) -> Result<(Complex64, f64, f64)> {
    ensure!(setting.delta_l != 0.0, Singularity, "control detuning is zero");
    let s = setting;
    let omega1 = s.g02.conj() * s.g12 * s.alpha0.conj() * s.alpha1 * Complex64::from_polar(1.0, -s.psi) / s.delta_l;
    let d0 = s.g02.norm_sqr() * s.alpha0.norm_sqr() / s.delta_l;
    let d1 = s.g12.norm_sqr() * s.alpha1.norm_sqr() / s.delta_l;
    Ok((omega1, d0, d1))
}

/// `Ω_T = Ω₀ + Ω₁`, `δ′_i = δ_i + δ″_i`.
pub fn total_drive(omega0: Complex64, omega1: Complex64, deltas: (f64, f64), deltas_pp: (f64, f64)) -> RabiDrive {
    RabiDrive::new(omega0 + omega1, deltas.0 + deltas_pp.0, deltas.1 + deltas_pp.1)
}

/// One preparation/evolution/population measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementRecord {
    /// `(α, β)` of the prepared state.
    pub prep: (f64, f64),
    pub atoms_total: u64,
    /// Atoms found in `|1⟩`.
    pub count1: u64,
    pub t: f64,
}

/// `p₁ = |C′₁(T)|²` for the prepared state.
pub fn excited_probability(prep: (f64, f64), drive: &RabiDrive, t: f64) -> Result<f64> {
    Ok(evolve_analytic(prep.0, prep.1, drive, t)?.c1.norm_sqr().clamp(0.0, 1.0))
}

/// Evolves `n_atoms` independent atoms and counts those in `|1⟩`.
pub fn prepare_measure_cycle<R: Rng + ?Sized>(
    rng: &mut R,
    prep: (f64, f64),
    drive: &RabiDrive,
    t: f64,
    n_atoms: u64,
) -> Result<MeasurementRecord> {
    ensure!(n_atoms > 0, Domain, "no atoms to measure");
    let p = excited_probability(prep, drive, t)?;
    let binom = Binomial::new(n_atoms, p).map_err(|e| crate::Error::Domain(alloc::format!("{e}")))?;
    Ok(MeasurementRecord { prep, atoms_total: n_atoms, count1: binom.sample(rng), t })
}

/// Equator preparations `|0⟩ + e^{iβ}|1⟩` with `β = 0` and `β = π/2`.
pub const PREP_SIN: (f64, f64) = (FRAC_PI_4, 0.0);
pub const PREP_COS: (f64, f64) = (FRAC_PI_4, FRAC_PI_2);

/// `(z_sin, z_cos)` with `z = 2·count₁/N − 1`.
///
/// In expectation `z_sin = sin(2|Ω_T|T) sin φ_T`, `z_cos = sin(2|Ω_T|T) cos φ_T`.
pub fn quadrature_signals(rec_b0: &MeasurementRecord, rec_b90: &MeasurementRecord) -> Result<(f64, f64)> {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
    ensure!(
        close(rec_b0.prep.0, FRAC_PI_4) && close(rec_b90.prep.0, FRAC_PI_4),
        Domain,
        "quadratures need equator preparations (α = π/4)"
    );
    ensure!(
        close(rec_b0.prep.1, 0.0) && close(rec_b90.prep.1, FRAC_PI_2),
        Domain,
        "quadratures need β = 0 and β = π/2"
    );
    ensure!(
        rec_b0.atoms_total == rec_b90.atoms_total && rec_b0.t == rec_b90.t,
        Domain,
        "records differ in atom number or interaction time"
    );
    ensure!(rec_b0.atoms_total > 0, Domain, "no atoms");
    let z = |r: &MeasurementRecord| 2.0 * r.count1 as f64 / r.atoms_total as f64 - 1.0;
    Ok((z(rec_b0), z(rec_b90)))
}

/// Expectation values of [`quadrature_signals`].
pub fn expected_quadratures(drive: &RabiDrive, t: f64) -> Result<(f64, f64)> {
    let zs = 2.0 * excited_probability(PREP_SIN, drive, t)? - 1.0;
    let zc = 2.0 * excited_probability(PREP_COS, drive, t)? - 1.0;
    Ok((zs, zc))
}

/// `Γ̂₁₂ = −Ω₁ / K_Ω`, the balance condition `Ω₀ = −Ω₁` inverted.
pub fn gamma_from_control(setting: &ControlSetting, atom: &AtomCavityParams) -> Result<Complex64> {
    let (omega1, _, _) = control_rabi(setting)?;
    gamma_from_rabi(omega1, atom)
}

/// As [`gamma_from_control`] for a bare control Rabi frequency.
pub fn gamma_from_rabi(omega1: Complex64, atom: &AtomCavityParams) -> Result<Complex64> {
    Ok(-omega1 / rabi_per_coherence(atom)?)
}

/// Which noise sources the simulated plant includes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseSwitches {
    /// Binomial population readout; off means expectation values.
    pub atom_shot: bool,
    /// Per-window photon-noise fluctuation of `Ω₀`.
    pub photon: bool,
}

impl Default for NoiseSwitches {
    fn default() -> Self {
        Self { atom_shot: true, photon: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceConfig {
    /// Gain schedule `g₀/(1 + k/k₀)`.
    pub gain0: f64,
    pub gain_k0: f64,
    pub max_iter: usize,
    pub min_iter: usize,
    /// Convergence threshold on the smoothed `|e|·2T`; `None` means `1/√N_a`.
    pub tol: Option<f64>,
    /// EMA weight of the newest error sample.
    pub smoothing: f64,
    /// Atoms per interval, split equally over the two preparations;
    /// `None` means the waist count `2N₀A²/λ`.
    pub atoms: Option<u64>,
    /// Interaction time; `None` means auto-scaled to `π/8`.
    pub interaction_time: Option<f64>,
    /// Prior bound on `|Γ₁₂|` used by the auto-scaling; `None` means `I₀`.
    pub prior_bound: Option<f64>,
    pub noise: NoiseSwitches,
}

impl Default for BalanceConfig {
    fn default() -> Self {
        Self {
            gain0: 1.0,
            gain_k0: 10.0,
            max_iter: 500,
            min_iter: 3,
            tol: None,
            smoothing: 0.3,
            atoms: None,
            interaction_time: None,
            prior_bound: None,
            noise: NoiseSwitches::default(),
        }
    }
}

impl BalanceConfig {
    pub fn gain(&self, k: usize) -> f64 {
        self.gain0 / (1.0 + k as f64 / self.gain_k0)
    }

    fn validate(&self) -> Result<()> {
        ensure!(self.gain0 > 0.0 && self.gain_k0 > 0.0, Config, "gain schedule must be positive");
        ensure!(self.gain0 < 2.0, Config, "gain g0 = {} outside the stable range (0, 2)", self.gain0);
        ensure!(self.smoothing > 0.0 && self.smoothing <= 1.0, Config, "smoothing must lie in (0, 1]");
        ensure!(self.max_iter >= 1, Config, "max_iter must be >= 1");
        if let Some(t) = self.interaction_time {
            ensure!(t > 0.0, Config, "interaction time must be positive");
        }
        if let Some(tol) = self.tol {
            ensure!(tol > 0.0, Config, "tolerance must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceResult {
    pub omega1_final: Complex64,
    pub gamma12_estimate: Complex64,
    pub iterations: usize,
    pub residual_signal: f64,
    pub converged: bool,
    pub interaction_time: f64,
    pub small_angle_warnings: usize,
    pub final_setting: ControlSetting,
}

/// One loop iteration, as written to the trace CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub omega1: Complex64,
    pub z_sin: f64,
    pub z_cos: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalanceRun {
    pub result: BalanceResult,
    pub trace: Vec<TraceRow>,
}

/// Simulated apparatus. Holds the hidden drive and is only queried through
/// population measurements.
struct Plant {
    omega0: Complex64,
    stark: (f64, f64),
    photon_var: f64,
    atoms_per_prep: u64,
    noise: NoiseSwitches,
    t: f64,
    warnings: usize,
}

impl Plant {
    fn measure<R: Rng + ?Sized>(&mut self, rng: &mut R, setting: &ControlSetting) -> Result<(f64, f64)> {
        let (omega1, d0, d1) = control_rabi(setting)?;
        let mut omega0 = self.omega0;
        if self.noise.photon && self.photon_var > 0.0 {
            let excess = self.photon_var * 2.0 * PI / self.t;
            omega0 += circular_normal(rng) * excess.sqrt();
        }
        let drive = total_drive(omega0, omega1, self.stark, (d0, d1));
        while drive.omega.norm() * self.t > FRAC_PI_4 {
            self.warnings += 1;
            self.t *= 0.5;
        }
        if self.noise.atom_shot {
            let a = prepare_measure_cycle(rng, PREP_SIN, &drive, self.t, self.atoms_per_prep)?;
            let b = prepare_measure_cycle(rng, PREP_COS, &drive, self.t, self.atoms_per_prep)?;
            quadrature_signals(&a, &b)
        } else {
            expected_quadratures(&drive, self.t)
        }
    }
}

/// Runs the balance loop against the plant defined by `spec` and `atom`.
///
/// Each iteration measures both quadratures, forms `e = (z_cos + i z_sin)/(2T)`
/// and updates `Ω₁ ← Ω₁ − g_k e`. After the loop stops, one fresh unit-gain
/// cycle gives the final setting that `Γ̂₁₂` is read from.
pub fn balance_loop<R: Rng + ?Sized>(
    rng: &mut R,
    spec: &FieldPairSpec,
    atom: &AtomCavityParams,
    init: &ControlSetting,
    cfg: &BalanceConfig,
) -> Result<BalanceRun> {
    cfg.validate()?;
    let k_omega = rabi_per_coherence(atom)?;
    let omega0 = ensemble_rabi_frequency(atom, spec, spec.mutual_coherence())?;
    let stark = ac_stark_shifts(atom, spec)?;
    let n_a = match cfg.atoms {
        Some(n) => n,
        None => atoms_in_waist(atom.n0(), spec.area(), atom.lambda())?.round() as u64,
    };
    ensure!(n_a >= 2, Config, "need at least 2 atoms per interval, got {n_a}");
    let atoms_per_prep = n_a / 2;
    let tol = cfg.tol.unwrap_or(1.0 / (n_a as f64).sqrt());

    let (mut omega1, _, _) = control_rabi(init)?;
    let t0 = match cfg.interaction_time {
        Some(t) => t,
        None => {
            let bound = cfg.prior_bound.unwrap_or(spec.irradiance());
            let rate = k_omega.abs() * bound + omega1.norm();
            ensure!(rate > 0.0, Config, "cannot auto-scale T: zero prior drive bound");
            FRAC_PI_8 / rate
        }
    };
    // photon-noise excess |Ω₀|²(2π/TΔω)(n+1)/n, stored without the 2π/T factor
    let n = spec.n_occ();
    let photon_var = if n > 0.0 { omega0.norm_sqr() * (n + 1.0) / (n * spec.delta_omega()) } else { 0.0 };
    let mut plant = Plant { omega0, stark, photon_var, atoms_per_prep, noise: cfg.noise, t: t0, warnings: 0 };

    let mut setting = init.synthesize(omega1, stark)?;
    let mut trace = Vec::new();
    let mut ema: Option<Complex64> = None;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    for k in 0..cfg.max_iter {
        let (z_sin, z_cos) = plant.measure(rng, &setting)?;
        let t = plant.t;
        let e = Complex64::new(z_cos, z_sin) / (2.0 * t);
        let gain = cfg.gain(k);
        omega1 -= e * gain;
        setting = setting.synthesize(omega1, stark)?;
        trace.push(TraceRow { iteration: k, omega1, z_sin, z_cos, gain });
        let smoothed = match ema {
            Some(prev) => prev * (1.0 - cfg.smoothing) + e * cfg.smoothing,
            None => e,
        };
        ema = Some(smoothed);
        residual = smoothed.norm() * 2.0 * t;
        iterations = k + 1;
        if !residual.is_finite() {
            bail!(Numerical, "balance loop diverged at iteration {k}");
        }
        if iterations >= cfg.min_iter && residual < tol {
            converged = true;
            break;
        }
    }

    let (z_sin, z_cos) = plant.measure(rng, &setting)?;
    let e = Complex64::new(z_cos, z_sin) / (2.0 * plant.t);
    let omega1_final = omega1 - e;
    let final_setting = setting.synthesize(omega1_final, stark)?;
    let result = BalanceResult {
        omega1_final,
        gamma12_estimate: gamma_from_rabi(omega1_final, atom)?,
        iterations,
        residual_signal: residual,
        converged,
        interaction_time: plant.t,
        small_angle_warnings: plant.warnings,
        final_setting,
    };
    Ok(BalanceRun { result, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{angular_frequency, AtomCavityInputs};
    use crate::rng::stream_rng;
    use core::f64::consts::FRAC_PI_3;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn reference(zeta: Complex64, d12: f64) -> (FieldPairSpec, AtomCavityParams, ControlSetting) {
        let wc = angular_frequency(780e-9);
        let spec = FieldPairSpec::new(wc, 1e-7 * wc, 1.0, zeta, 0.0, 8, 1e-6).unwrap();
        let atom = AtomCavityParams::new(
            AtomCavityInputs {
                d02: 1.6e-29,
                d12,
                delta: 1e3 * spec.delta_omega(),
                delta_l: 1e3 * spec.delta_omega(),
                finesse: 1.6e5,
                n0: 1e18,
                lambda: 780e-9,
            },
            &spec,
        )
        .unwrap();
        let ctl = ControlSetting::dark(c(2.0 * PI * 1e6, 0.0), c(2.0 * PI * 1e6, 0.0), atom.delta_l());
        (spec, atom, ctl)
    }

    #[test]
    fn control_rabi_cases() {
        let g = c(2.0 * PI * 1e6, 0.0);
        let mut s = ControlSetting::dark(g, g, 2.0 * PI * 1e9);
        let (w, d0, _) = control_rabi(&s).unwrap();
        assert_eq!((w, d0), (c(0.0, 0.0), 0.0));
        s.alpha0 = c(10.0, 0.0);
        s.alpha1 = c(10.0, 0.0);
        let (w, d0, d1) = control_rabi(&s).unwrap();
        // mpmath: (2π·10⁶)²·100/(2π·10⁹)
        let oracle = 628_318.530_717_958_6;
        assert!((w.re - oracle).abs() < 1e-9 * oracle && w.im.abs() < 1e-9);
        assert!((d0 - oracle).abs() < 1e-9 * oracle && (d1 - oracle).abs() < 1e-9 * oracle);
        let flipped = control_rabi(&ControlSetting { psi: PI, ..s }).unwrap().0;
        assert!((flipped + w).norm() < 1e-9 * oracle);
        assert!(matches!(control_rabi(&ControlSetting { delta_l: 0.0, ..s }), Err(crate::Error::Singularity(_))));
    }

    #[test]
    fn synthesize_hits_target_and_trims_stark() {
        let g0 = Complex64::from_polar(3e6, 0.4);
        let g1 = Complex64::from_polar(5e6, -1.1);
        for delta_l in [2e11, -3e11] {
            let base = ControlSetting::dark(g0, g1, delta_l);
            for (target, stark) in [
                (Complex64::from_polar(2e5, 2.0), (10.0, 40.0)),
                (Complex64::from_polar(7e4, -0.3), (50.0, 5.0)),
                (c(0.0, 0.0), (3.0, 1.0)),
            ] {
                let s = base.synthesize(target, stark).unwrap();
                let (w, d0, d1) = control_rabi(&s).unwrap();
                assert!((w - target).norm() <= 1e-9 * target.norm().max(1.0), "{w} vs {target}");
                let lhs = stark.0 + d0;
                let rhs = stark.1 + d1;
                assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(rhs.abs()), "{lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn total_drive_cases() {
        let w0 = c(1.5, -0.5);
        assert_eq!(total_drive(w0, -w0, (1.0, 2.0), (0.5, -0.5)).omega, c(0.0, 0.0));
        let d = total_drive(w0, c(0.0, 0.0), (1.0, 2.0), (0.5, -0.5));
        assert_eq!((d.omega, d.delta0, d.delta1), (w0, 1.5, 1.5));
    }

    #[test]
    fn cycle_cases() {
        let mut rng = stream_rng(1, 0);
        let off = RabiDrive::resonant(c(0.0, 0.0));
        assert!((excited_probability(PREP_SIN, &off, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let full = RabiDrive::resonant(c(1.0, 0.0));
        for _ in 0..10 {
            let r = prepare_measure_cycle(&mut rng, (0.0, 0.0), &full, FRAC_PI_2, 100).unwrap();
            assert_eq!(r.count1, 100);
        }
        let d = RabiDrive::resonant(Complex64::from_polar(1.0, FRAC_PI_2));
        let p = excited_probability(PREP_SIN, &d, 0.1).unwrap();
        assert!((p - 0.599_334_665_397_530_6).abs() < 1e-15, "{p}");
        assert!(prepare_measure_cycle(&mut rng, PREP_SIN, &d, 0.1, 0).is_err());
        let a = prepare_measure_cycle(&mut stream_rng(4, 2), PREP_SIN, &d, 0.1, 1000).unwrap();
        let b = prepare_measure_cycle(&mut stream_rng(4, 2), PREP_SIN, &d, 0.1, 1000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn quadrature_expectations() {
        let (zs, zc) = expected_quadratures(&RabiDrive::resonant(c(0.0, 0.0)), 1.0).unwrap();
        assert!(zs.abs() < 1e-15 && zc.abs() < 1e-15);
        let (zs, zc) = expected_quadratures(&RabiDrive::resonant(c(1e-4, 0.0)), 1.0).unwrap();
        assert!(zs.abs() < 1e-15 && (zc - 2e-4).abs() < 1e-11);
        let d = RabiDrive::resonant(Complex64::from_polar(1.0, FRAC_PI_3));
        let (zs, zc) = expected_quadratures(&d, FRAC_PI_8).unwrap();
        let s = FRAC_PI_4.sin();
        assert!((zs - s * FRAC_PI_3.sin()).abs() < 1e-15 && (zc - s * FRAC_PI_3.cos()).abs() < 1e-15);
    }

    #[test]
    fn quadrature_record_checks() {
        let rec = |prep, n, count1| MeasurementRecord { prep, atoms_total: n, count1, t: 1.0 };
        assert_eq!(quadrature_signals(&rec(PREP_SIN, 10, 5), &rec(PREP_COS, 10, 10)).unwrap(), (0.0, 1.0));
        assert!(quadrature_signals(&rec(PREP_COS, 10, 5), &rec(PREP_SIN, 10, 5)).is_err());
        assert!(quadrature_signals(&rec(PREP_SIN, 10, 5), &rec(PREP_COS, 12, 5)).is_err());
        assert!(quadrature_signals(&rec((0.0, 0.0), 10, 5), &rec(PREP_COS, 10, 5)).is_err());
    }

    #[test]
    fn gamma_round_trip() {
        let (spec, atom, ctl) = reference(c(0.01, 0.0), 1.6e-29);
        assert_eq!(gamma_from_control(&ctl, &atom).unwrap(), c(0.0, 0.0));
        let gamma = spec.mutual_coherence();
        let w0 = ensemble_rabi_frequency(&atom, &spec, gamma).unwrap();
        let s = ctl.synthesize(-w0, (0.0, 0.0)).unwrap();
        let back = gamma_from_control(&s, &atom).unwrap();
        // mpmath: 0.01·I₀ at n = 1
        assert!((back.re - 0.031_157_195_328_029_11).abs() < 1e-12 * back.re, "{back}");
        assert!(back.im.abs() < 1e-12 * back.re);
        let direct = gamma_from_rabi(-w0, &atom).unwrap();
        assert!((direct - gamma).norm() <= 1e-15 * gamma.norm());
    }

    fn noiseless() -> BalanceConfig {
        BalanceConfig { tol: Some(1e-10), noise: NoiseSwitches { atom_shot: false, photon: false }, ..Default::default() }
    }

    #[test]
    fn noiseless_loop_recovers_gamma() {
        let zeta = Complex64::from_polar(0.1, PI / 6.0);
        let (spec, atom, ctl) = reference(zeta, 1.2e-29);
        let run = balance_loop(&mut stream_rng(0, 0), &spec, &atom, &ctl, &noiseless()).unwrap();
        let r = run.result;
        let truth = spec.mutual_coherence();
        assert!(r.converged && r.iterations < 200, "{r:?}");
        assert!((r.gamma12_estimate - truth).norm() < 1e-6 * truth.norm(), "{} vs {truth}", r.gamma12_estimate);
        assert_eq!(r.small_angle_warnings, 0);
        assert_eq!(run.trace.len(), r.iterations);
        assert!(r.residual_signal < 1e-10);
    }

    #[test]
    fn small_angle_guard_halves_t() {
        let (spec, atom, ctl) = reference(c(1.0, 0.0), 1.6e-29);
        let k = rabi_per_coherence(&atom).unwrap();
        let cfg = BalanceConfig { interaction_time: Some(2.0 / (k * spec.irradiance())), ..noiseless() };
        let r = balance_loop(&mut stream_rng(0, 0), &spec, &atom, &ctl, &cfg).unwrap().result;
        assert!(r.small_angle_warnings >= 1);
        assert!(r.interaction_time <= 0.25 * 2.0 / (k * spec.irradiance()));
        assert!(r.converged);
    }

    #[test]
    fn null_input_and_nonconvergence() {
        let (spec, atom, ctl) = reference(c(0.0, 0.0), 1.6e-29);
        let cfg = BalanceConfig { atoms: Some(1000), ..Default::default() };
        let r = balance_loop(&mut stream_rng(3, 0), &spec, &atom, &ctl, &cfg).unwrap().result;
        assert!(r.converged);
        let bound = 3.0 / (r.interaction_time * rabi_per_coherence(&atom).unwrap() * 1000f64.sqrt());
        assert!(r.gamma12_estimate.norm() < bound, "{} vs {bound}", r.gamma12_estimate.norm());
        let tight = BalanceConfig { tol: Some(1e-12), max_iter: 5, ..cfg };
        let r = balance_loop(&mut stream_rng(3, 0), &spec, &atom, &ctl, &tight).unwrap().result;
        assert!(!r.converged && r.iterations == 5);
    }

    #[test]
    fn config_validation() {
        let (spec, atom, ctl) = reference(c(0.1, 0.0), 1.6e-29);
        let bad = BalanceConfig { gain0: -1.0, ..Default::default() };
        assert!(matches!(balance_loop(&mut stream_rng(0, 0), &spec, &atom, &ctl, &bad), Err(crate::Error::Config(_))));
        let bad = BalanceConfig { atoms: Some(1), ..Default::default() };
        assert!(balance_loop(&mut stream_rng(0, 0), &spec, &atom, &ctl, &bad).is_err());
    }
}
