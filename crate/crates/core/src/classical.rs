//! Beamsplitter interferometer baseline: fringe irradiances, photon counting
//! and the least-squares coherence estimator.
//!
//! Irradiances reported by [`simulate_phase_scan`] are *detected* irradiances
//! (counts·ħω_c/(τA), mean `η·I`). The estimator divides by `η`, so
//! `var(ζ̂)·(ηI₀)²` is the quantity compared against [`classical_variance`].

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};

use crate::constants::HBAR;
use crate::error::{ensure, Result};
use crate::field::FieldPairSpec;
use crate::rng::stream_rng;

/// Mean count above which the Gaussian count model is used.
pub const GAUSSIAN_COUNT_THRESHOLD: f64 = 50.0;

/// Phase set `{0, 2π/3, 4π/3}`.
pub const DEFAULT_PHASES: [f64; 3] = [0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0];

/// Output irradiances `I₁,₂ = I₀[1 ± Re(ζ e^{iφ})]`.
pub fn detector_irradiances(i0: f64, zeta: Complex64, phi: f64) -> (f64, f64) {
    let fringe = (zeta * Complex64::from_polar(1.0, phi)).re;
    (i0 * (1.0 + fringe), i0 * (1.0 - fringe))
}

/// Mean photocount `η I τ A/ħω_c`.
pub fn mean_count(irradiance: f64, spec: &FieldPairSpec, eta: f64, t: f64) -> f64 {
    eta * irradiance * t * spec.area() / (HBAR * spec.omega_c())
}

/// Draws one photocount with mean `μ` and variance `μ(1 + ηn)`.
///
/// Below [`GAUSSIAN_COUNT_THRESHOLD`] the count is negative binomial
/// (Poisson with a Gamma-distributed rate, `μ/(ηn)` modes); above it a rounded
/// Gaussian, clipped at zero.
pub fn photocount<R: Rng + ?Sized>(rng: &mut R, mu: f64, bunching: f64) -> Result<u64> {
    ensure!(mu >= 0.0 && mu.is_finite(), Domain, "mean count must be finite and >= 0, got {mu}");
    ensure!(bunching >= 0.0, Domain, "thermal excess must be >= 0, got {bunching}");
    if mu == 0.0 {
        return Ok(0);
    }
    if mu > GAUSSIAN_COUNT_THRESHOLD {
        let z: f64 = StandardNormal.sample(rng);
        return Ok((mu + (mu * (1.0 + bunching)).sqrt() * z).round().max(0.0) as u64);
    }
    let rate = if bunching > 0.0 {
        let gamma = Gamma::new(mu / bunching, bunching).map_err(|e| crate::Error::Domain(alloc::format!("{e}")))?;
        gamma.sample(rng)
    } else {
        mu
    };
    if rate <= 0.0 {
        return Ok(0);
    }
    let poisson = Poisson::new(rate).map_err(|e| crate::Error::Domain(alloc::format!("{e}")))?;
    Ok(poisson.sample(rng) as u64)
}

/// One photocount for irradiance `irradiance` over `t`, seeded.
pub fn simulate_photodetection(irradiance: f64, spec: &FieldPairSpec, eta: f64, t: f64, seed: u64) -> Result<u64> {
    ensure!(irradiance >= 0.0, Domain, "irradiance must be >= 0, got {irradiance}");
    ensure!((0.0..=1.0).contains(&eta), Domain, "efficiency must lie in [0, 1], got {eta}");
    ensure!(t > 0.0, Domain, "integration time must be positive, got {t}");
    let mut rng = stream_rng(seed, 0);
    photocount(&mut rng, mean_count(irradiance, spec, eta, t), eta * spec.n_occ())
}

/// Detected irradiance pairs at a set of interferometer phases.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScanMeasurement {
    pub phases: Vec<f64>,
    /// `(I₁, I₂)` per phase, W/m².
    pub mean_irradiances: Vec<(f64, f64)>,
    /// Total integration time, shared equally across the phases.
    pub integration_time: f64,
    pub eta: f64,
}

/// A simulated scan together with its raw counts.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScan {
    pub measurement: PhaseScanMeasurement,
    pub counts: Vec<(u64, u64)>,
}

/// Simulates both detectors at each phase, `T/P` per phase.
pub fn simulate_phase_scan<R: Rng + ?Sized>(
    rng: &mut R,
    spec: &FieldPairSpec,
    eta: f64,
    t: f64,
    phases: &[f64],
) -> Result<PhaseScan> {
    ensure!((0.0..=1.0).contains(&eta), Domain, "efficiency must lie in [0, 1], got {eta}");
    ensure!(t > 0.0, Domain, "integration time must be positive, got {t}");
    ensure!(!phases.is_empty(), Domain, "no phases given");
    let dwell = t / phases.len() as f64;
    let i0 = spec.irradiance();
    let zeta = spec.zeta();
    let bunching = eta * spec.n_occ();
    let to_irradiance = HBAR * spec.omega_c() / (dwell * spec.area());
    let mut counts = Vec::with_capacity(phases.len());
    let mut irr = Vec::with_capacity(phases.len());
    for &phi in phases {
        let (i1, i2) = detector_irradiances(i0, zeta, phi);
        let n1 = photocount(rng, mean_count(i1, spec, eta, dwell), bunching)?;
        let n2 = photocount(rng, mean_count(i2, spec, eta, dwell), bunching)?;
        counts.push((n1, n2));
        irr.push((n1 as f64 * to_irradiance, n2 as f64 * to_irradiance));
    }
    Ok(PhaseScan {
        measurement: PhaseScanMeasurement {
            phases: phases.to_vec(),
            mean_irradiances: irr,
            integration_time: t,
            eta,
        },
        counts,
    })
}

fn phases_distinct(phases: &[f64]) -> bool {
    for (i, a) in phases.iter().enumerate() {
        for b in &phases[i + 1..] {
            let r = (a - b) % TAU;
            let d = if r < 0.0 { r + TAU } else { r };
            if d < 1e-9 || TAU - d < 1e-9 {
                return false;
            }
        }
    }
    true
}

/// Least-squares `ζ̂` from the difference signal `I₁ − I₂ = 2ηI₀(Re ζ cos φ − Im ζ sin φ)`.
///
/// Noiseless input is recovered exactly. Returns an estimation error for
/// fewer than three or repeated phases, or a singular design.
pub fn estimate_coherence_three_phase(meas: &PhaseScanMeasurement, i0: f64) -> Result<Complex64> {
    ensure!(meas.phases.len() >= 3, Estimation, "need at least 3 phases, got {}", meas.phases.len());
    ensure!(
        meas.phases.len() == meas.mean_irradiances.len(),
        Estimation,
        "{} phases but {} irradiance pairs",
        meas.phases.len(),
        meas.mean_irradiances.len()
    );
    ensure!(phases_distinct(&meas.phases), Estimation, "phases are not distinct modulo 2π");
    let scale = 2.0 * meas.eta * i0;
    ensure!(scale > 0.0, Singularity, "ηI₀ must be positive to normalise the fringe");
    let (mut scc, mut sss, mut scs, mut scd, mut ssd) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&phi, &(i1, i2)) in meas.phases.iter().zip(&meas.mean_irradiances) {
        let (c, s) = (phi.cos(), -phi.sin());
        let d = (i1 - i2) / scale;
        scc += c * c;
        sss += s * s;
        scs += c * s;
        scd += c * d;
        ssd += s * d;
    }
    let det = scc * sss - scs * scs;
    ensure!(det.abs() > 1e-12 * (scc * sss).max(1e-300), Estimation, "singular phase design (det = {det:e})");
    Ok(Complex64::new((sss * scd - scs * ssd) / det, (scc * ssd - scs * scd) / det))
}

/// `σ_I² = 2ηI₀(1 + ηn)ħω_c/(TA)`, (W/m²)².
pub fn classical_variance(eta: f64, i0: f64, n_occ: f64, omega_c: f64, t: f64, area: f64) -> Result<f64> {
    ensure!(eta >= 0.0 && i0 >= 0.0 && n_occ >= 0.0 && omega_c >= 0.0, Domain, "inputs must be nonnegative");
    ensure!(t > 0.0 && area > 0.0, Domain, "T and A must be positive");
    Ok(2.0 * eta * i0 * (1.0 + eta * n_occ) * HBAR * omega_c / (t * area))
}

/// `|Γ₁₂,min| = √σ_I²`.
pub fn noise_equivalent_coherence(sigma_i_sq: f64) -> Result<f64> {
    ensure!(sigma_i_sq >= 0.0, Domain, "variance must be >= 0, got {sigma_i_sq}");
    Ok(sigma_i_sq.sqrt())
}
