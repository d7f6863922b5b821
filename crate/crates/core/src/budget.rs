//! Closed-form noise budget of the quantum detector against the classical
//! interferometer, and the enhancement-factor sweep.
//!
//! All detunings are angular. Every budget point is parameterised by the
//! photon number `n_T = nΔωT/2π`, which fixes `T`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::classical::classical_variance;
use crate::constants::{HBAR, Z0};
use crate::error::{ensure, Error, Result};
use crate::field::{atoms_in_waist, time_for_photons, AtomCavityParams, FieldPairSpec};
use crate::stats::{complex_variance, linear_fit};

/// `σ_p² = |Γ₁₂|²(2π/TΔω)(n+1)/n`.
pub fn photon_noise(gamma12_mag: f64, t: f64, delta_omega: f64, n_occ: f64) -> Result<f64> {
    ensure!(n_occ > 0.0, Singularity, "(n+1)/n diverges at n = 0");
    ensure!(t > 0.0 && delta_omega > 0.0, Domain, "T and Δω must be positive");
    Ok(gamma12_mag * gamma12_mag * (2.0 * PI / (t * delta_omega)) * (n_occ + 1.0) / n_occ)
}

/// `σ_L² = |ζ| n (ħω_c π/(TAF))² (ΔωT/2π)(Δ/Δ_L)`.
#[allow(clippy::too_many_arguments)]
pub fn optical_readout_noise(
    zeta_mag: f64,
    n_occ: f64,
    omega_c: f64,
    delta_omega: f64,
    t: f64,
    area: f64,
    finesse: f64,
    delta: f64,
    delta_l: f64,
) -> Result<f64> {
    ensure!(t > 0.0 && area > 0.0 && finesse > 0.0, Domain, "T, A and F must be positive");
    ensure!(delta_l != 0.0, Singularity, "zero control detuning");
    let u = HBAR * omega_c / (t * area) * PI / finesse;
    Ok(zeta_mag * n_occ * u * u * (delta_omega * t / (2.0 * PI)) * (delta / delta_l))
}

/// `σ_sp² = (4π²ħω_cΔ/(3λ²F))²`.
pub fn spontaneous_noise(omega_c: f64, delta: f64, lambda: f64, finesse: f64) -> Result<f64> {
    ensure!(lambda > 0.0 && finesse > 0.0, Domain, "λ and F must be positive");
    let s = 4.0 * PI * PI * HBAR * omega_c * delta / (3.0 * lambda * lambda * finesse);
    Ok(s * s)
}

/// `σ_a² = (π/F)²(ħ²Δ/(d₀₂d₁₂Z₀T))²/N_a`.
pub fn atom_shot_noise(delta: f64, d02: f64, d12: f64, t: f64, finesse: f64, n_atoms: f64) -> Result<f64> {
    ensure!(n_atoms > 0.0, Singularity, "no atoms in the waist");
    ensure!(t > 0.0 && finesse > 0.0, Domain, "T and F must be positive");
    ensure!(d02 != 0.0 && d12 != 0.0, Singularity, "zero dipole moment");
    let s = PI / finesse * HBAR * HBAR * delta / (d02 * d12 * Z0 * t);
    Ok(s * s / n_atoms)
}

/// Fixed apparatus parameters of a budget evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetParams {
    pub omega_c: f64,
    pub delta_omega: f64,
    pub area: f64,
    pub lambda: f64,
    pub finesse: f64,
    pub delta: f64,
    pub delta_l: f64,
    pub d02: f64,
    pub d12: f64,
    pub n0: f64,
}

impl BudgetParams {
    pub fn from_models(spec: &FieldPairSpec, atom: &AtomCavityParams) -> Self {
        Self {
            omega_c: spec.omega_c(),
            delta_omega: spec.delta_omega(),
            area: spec.area(),
            lambda: atom.lambda(),
            finesse: atom.finesse(),
            delta: atom.delta(),
            delta_l: atom.delta_l(),
            d02: atom.d02(),
            d12: atom.d12(),
            n0: atom.n0(),
        }
    }

    pub fn atoms(&self) -> Result<f64> {
        atoms_in_waist(self.n0, self.area, self.lambda)
    }

    /// `I₀ = nħω_cΔω/(2πA)`.
    pub fn irradiance(&self, n_occ: f64) -> f64 {
        n_occ * HBAR * self.omega_c * self.delta_omega / (2.0 * PI * self.area)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Term {
    Photon,
    Readout,
    Spontaneous,
    AtomShot,
}

impl Term {
    pub fn as_str(self) -> &'static str {
        match self {
            Term::Photon => "photon",
            Term::Readout => "readout",
            Term::Spontaneous => "spontaneous",
            Term::AtomShot => "atom_shot",
        }
    }
}

impl core::fmt::Display for Term {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseBudget {
    pub sigma_p_sq: f64,
    pub sigma_l_sq: f64,
    pub sigma_sp_sq: f64,
    pub sigma_a_sq: f64,
    pub sigma_q_sq: f64,
    pub sigma_i_sq: f64,
    /// Enhancement factor from its closed form.
    pub q_mc: f64,
}

impl NoiseBudget {
    /// Evaluates the four quantum terms, `σ_I²` (η = 1) and `Q_mc` at one point.
    pub fn evaluate(p: &BudgetParams, zeta_mag: f64, n_occ: f64, n_t: f64) -> Result<Self> {
        ensure!(n_t > 0.0, Domain, "n_T must be positive, got {n_t}");
        let t = time_for_photons(n_occ, p.delta_omega, n_t)?;
        let i0 = p.irradiance(n_occ);
        let sigma_p_sq = photon_noise(zeta_mag * i0, t, p.delta_omega, n_occ)?;
        let sigma_l_sq =
            optical_readout_noise(zeta_mag, n_occ, p.omega_c, p.delta_omega, t, p.area, p.finesse, p.delta, p.delta_l)?;
        let sigma_sp_sq = spontaneous_noise(p.omega_c, p.delta, p.lambda, p.finesse)?;
        let sigma_a_sq = atom_shot_noise(p.delta, p.d02, p.d12, t, p.finesse, p.atoms()?)?;
        let sigma_q_sq = sigma_p_sq + sigma_l_sq + sigma_sp_sq + sigma_a_sq;
        let sigma_i_sq = classical_variance(1.0, i0, n_occ, p.omega_c, t, p.area)?;
        Ok(Self {
            sigma_p_sq,
            sigma_l_sq,
            sigma_sp_sq,
            sigma_a_sq,
            sigma_q_sq,
            sigma_i_sq,
            q_mc: enhancement_factor(zeta_mag, n_occ, n_t, p)?,
        })
    }

    /// Largest of the four quantum terms.
    pub fn dominant_term(&self) -> Term {
        let terms = [
            (Term::Photon, self.sigma_p_sq),
            (Term::Readout, self.sigma_l_sq),
            (Term::Spontaneous, self.sigma_sp_sq),
            (Term::AtomShot, self.sigma_a_sq),
        ];
        terms.iter().fold(terms[0], |best, &t| if t.1 > best.1 { t } else { best }).0
    }

    /// `σ_I²/σ_Q²` from the individual terms.
    pub fn ratio(&self) -> f64 {
        self.sigma_i_sq / self.sigma_q_sq
    }

    /// Relative disagreement between [`Self::q_mc`] and [`Self::ratio`].
    pub fn consistency(&self) -> f64 {
        ((self.q_mc - self.ratio()) / self.q_mc).abs()
    }
}

/// Enhancement factor, term by term:
///
/// ```text
/// Q_mc = [ |ζ|²/2 + (π/F)²{ |ζ|Δ/(2(n+1)Δ_L) + 32π⁴Δ²A²n_T/(9λ⁴n²(n+1)Δω²)
///          + (ħΔ/(Z₀d₀₂d₁₂ω_c))² λ/(4N₀(1+n)n_T) } ]⁻¹
/// ```
pub fn enhancement_factor(zeta_mag: f64, n_occ: f64, n_t: f64, p: &BudgetParams) -> Result<f64> {
    ensure!(n_occ > 0.0 && n_t > 0.0, Singularity, "n and n_T must be positive");
    ensure!(p.delta_l != 0.0 && p.delta_omega != 0.0 && p.lambda != 0.0, Singularity, "zero denominator");
    ensure!(p.n0 > 0.0 && p.omega_c > 0.0 && p.d02 * p.d12 != 0.0, Singularity, "zero denominator");
    let pf = PI / p.finesse;
    let readout = zeta_mag * p.delta / (2.0 * (n_occ + 1.0) * p.delta_l);
    let pi4 = PI * PI * PI * PI;
    let spont = 32.0 * pi4 * p.delta * p.delta * p.area * p.area * n_t
        / (9.0 * p.lambda.powi(4) * n_occ * n_occ * (n_occ + 1.0) * p.delta_omega * p.delta_omega);
    let ratio = HBAR * p.delta / (Z0 * p.d02 * p.d12 * p.omega_c);
    let shot = ratio * ratio * p.lambda / (4.0 * p.n0 * (1.0 + n_occ) * n_t);
    let bracket = zeta_mag * zeta_mag / 2.0 + pf * pf * (readout + spont + shot);
    ensure!(bracket > 0.0, Singularity, "Q_mc bracket vanishes");
    Ok(1.0 / bracket)
}

/// `10^lo … 10^hi` with `per_decade` points per decade (endpoints included).
pub fn log_grid(lo_exp: f64, hi_exp: f64, per_decade: usize) -> Result<Vec<f64>> {
    ensure!(hi_exp >= lo_exp, Domain, "empty exponent range");
    ensure!(per_decade >= 1, Domain, "need at least one point per decade");
    let steps = ((hi_exp - lo_exp) * per_decade as f64).round() as usize;
    Ok((0..=steps)
        .map(|i| {
            let e = if steps == 0 { lo_exp } else { lo_exp + (hi_exp - lo_exp) * i as f64 / steps as f64 };
            exp10(e)
        })
        .collect())
}

fn exp10(e: f64) -> f64 {
    if e == e.round() && e.abs() < 300.0 {
        10f64.powi(e as i32)
    } else {
        10f64.powf(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub n_occ: f64,
    pub zeta_mag: f64,
    pub n_t: f64,
    pub budget: core::result::Result<NoiseBudget, Error>,
}

impl SweepPoint {
    pub fn q_mc(&self) -> Option<f64> {
        self.budget.as_ref().ok().map(|b| b.q_mc)
    }
    pub fn dominant_term(&self) -> Option<Term> {
        self.budget.as_ref().ok().map(|b| b.dominant_term())
    }
}

/// The full `n × ζ × n_T` cross-product, in that nesting order.
///
/// Per-point failures are recorded in [`SweepPoint::budget`].
pub fn sweep_qmc(n_list: &[f64], zeta_list: &[f64], n_t_grid: &[f64], p: &BudgetParams) -> Result<Vec<SweepPoint>> {
    ensure!(!n_list.is_empty(), Domain, "empty n grid");
    ensure!(!zeta_list.is_empty(), Domain, "empty ζ grid");
    ensure!(!n_t_grid.is_empty(), Domain, "empty n_T grid");
    let mut out = Vec::with_capacity(n_list.len() * zeta_list.len() * n_t_grid.len());
    for &n in n_list {
        for &z in zeta_list {
            for &nt in n_t_grid {
                out.push(SweepPoint { n_occ: n, zeta_mag: z, n_t: nt, budget: NoiseBudget::evaluate(p, z, n, nt) });
            }
        }
    }
    Ok(out)
}

/// Minimum number of runs accepted by [`cross_validate_budget`].
pub const MIN_RUNS: usize = 100;

/// Empirical variances against their closed-form predictions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossValidation {
    pub runs: usize,
    pub empirical: f64,
    pub predicted: f64,
    pub ratio: f64,
    /// Approximate standard error of `ratio` (Gaussian estimates).
    pub ratio_stderr: f64,
}

/// `E|z − z̄|²` of `estimates`, compared against `predicted`.
pub fn cross_validate_budget(estimates: &[Complex64], predicted: f64) -> Result<CrossValidation> {
    ensure!(
        estimates.len() >= MIN_RUNS,
        Domain,
        "need at least {MIN_RUNS} runs, got {}",
        estimates.len()
    );
    ensure!(predicted > 0.0, Domain, "prediction must be positive");
    let empirical = complex_variance(estimates);
    let ratio = empirical / predicted;
    Ok(CrossValidation {
        runs: estimates.len(),
        empirical,
        predicted,
        ratio,
        // complex-Gaussian variance estimate has relative error 1/√M
        ratio_stderr: ratio / (estimates.len() as f64).sqrt(),
    })
}

/// Slope of `log10 y` against `log10 x`, with its standard error.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    ensure!(xs.iter().chain(ys).all(|v| *v > 0.0), Domain, "log-log fit needs positive data");
    let lx: Vec<f64> = xs.iter().map(|x| x.log10()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.log10()).collect();
    let fit = linear_fit(&lx, &ly)?;
    Ok((fit.slope, fit.slope_stderr))
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::field::angular_frequency;

    fn reference() -> BudgetParams {
        let wc = angular_frequency(780e-9);
        let dw = 1e-7 * wc;
        BudgetParams {
            omega_c: wc,
            delta_omega: dw,
            area: PI * 1e-12,
            lambda: 780e-9,
            finesse: 1.6e5,
            delta: 1e3 * dw,
            delta_l: 1e3 * dw,
            d02: 1.6e-29,
            d12: 1.6e-29,
            n0: 1e18,
        }
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn term_oracles() {
        // mpmath, ζ = 1, n = 1, n_T = 10³, Δ = Δ_L = 10³Δω
        let b = NoiseBudget::evaluate(&reference(), 1.0, 1.0, 1e3).unwrap();
        assert!(rel(b.sigma_i_sq, 0.038_830_832_828_358_361) < 1e-12);
        assert!(rel(b.sigma_p_sq, 0.019_415_416_414_179_181) < 1e-12);
        assert!(rel(b.sigma_l_sq, 3.742_626_548_639_949_5e-12) < 1e-12);
        assert!(rel(b.sigma_sp_sq, 69.124_942_637_405_319) < 1e-12);
        assert!(rel(b.sigma_a_sq, 1.745_228_745_568_839_2e-5) < 1e-12);
        assert_eq!(b.sigma_q_sq, b.sigma_p_sq + b.sigma_l_sq + b.sigma_sp_sq + b.sigma_a_sq);
        assert_eq!(b.dominant_term(), Term::Spontaneous);
    }

    #[test]
    fn q_mc_oracle_and_cross_check() {
        let b = NoiseBudget::evaluate(&reference(), 1.0, 10.0, 1e4).unwrap();
        assert!(rel(b.q_mc, 0.030_426_134_338_258_699) < 1e-12, "{}", b.q_mc);
        assert!(b.consistency() < 1e-10);
    }

    #[test]
    fn structural_scalings() {
        let wc = 2.4e15;
        assert_eq!(photon_noise(0.0, 1.0, 1.0, 1.0).unwrap(), 0.0);
        assert!(rel(photon_noise(2.0, 3.0, 5.0, 1e12).unwrap(), 4.0 * 2.0 * PI / 15.0) < 1e-11);
        assert!(matches!(photon_noise(1.0, 1.0, 1.0, 0.0), Err(Error::Singularity(_))));
        assert_eq!(optical_readout_noise(0.0, 1.0, wc, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap(), 0.0);
        let l1 = optical_readout_noise(0.5, 2.0, wc, 1e8, 1e-6, 1e-12, 1e5, 1e11, 2e11).unwrap();
        let l2 = optical_readout_noise(0.5, 2.0, wc, 1e8, 1e-6, 1e-12, 2e5, 1e11, 2e11).unwrap();
        assert!(rel(l1 / l2, 4.0) < 1e-14);
        let s1 = spontaneous_noise(wc, 1e11, 780e-9, 1e5).unwrap();
        assert!(rel(spontaneous_noise(wc, 2e11, 780e-9, 1e5).unwrap() / s1, 4.0) < 1e-14);
        assert!(rel(s1 / spontaneous_noise(wc, 1e11, 780e-9, 2e5).unwrap(), 4.0) < 1e-14);
        let a1 = atom_shot_noise(1e11, 1e-29, 1e-29, 1e-6, 1e5, 10.0).unwrap();
        assert!(rel(a1 / atom_shot_noise(1e11, 1e-29, 1e-29, 1e-6, 1e5, 20.0).unwrap(), 2.0) < 1e-14);
        assert!(rel(a1 / atom_shot_noise(1e11, 1e-29, 1e-29, 2e-6, 1e5, 10.0).unwrap(), 4.0) < 1e-14);
        assert!(matches!(atom_shot_noise(1.0, 1.0, 1.0, 1.0, 1.0, 0.0), Err(Error::Singularity(_))));
    }

    #[test]
    fn photon_limited_plateau() {
        // no atom shot, spontaneous or readout noise: Q_mc = 2/|ζ|²
        let mut p = reference();
        p.finesse = 1e30;
        let q = enhancement_factor(1e-3, 0.01, 1e3, &p).unwrap();
        assert!(rel(q, 2e6) < 1e-9);
    }

    #[test]
    fn sweep_grid_and_consistency() {
        let grid = log_grid(0.0, 8.0, 4).unwrap();
        assert_eq!(grid.len(), 33);
        assert_eq!((grid[0], grid[32]), (1.0, 1e8));
        let pts = sweep_qmc(&[10.0, 1.0, 0.01], &[1.0, 0.1, 0.01, 0.001], &grid, &reference()).unwrap();
        assert_eq!(pts.len(), 12 * 33);
        for p in &pts {
            let b = p.budget.as_ref().unwrap();
            assert!(b.consistency() < 1e-10, "{p:?}");
        }
        assert!(sweep_qmc(&[1.0], &[1.0], &[], &reference()).is_err());
        let bad = sweep_qmc(&[0.0, 1.0], &[1.0], &[1.0], &reference()).unwrap();
        assert!(bad[0].budget.is_err() && bad[1].budget.is_ok());
    }

    #[test]
    fn atom_shot_regime_is_monotone() {
        // with a tiny detuning the atom-shot term dominates at low n_T
        let mut p = reference();
        p.delta = 1e-3 * p.delta_omega;
        p.delta_l = p.delta;
        let lo = enhancement_factor(0.001, 0.01, 1e-4, &p).unwrap();
        let hi = enhancement_factor(0.001, 0.01, 1e-3, &p).unwrap();
        assert!(hi > lo);
    }

    #[test]
    fn cross_validation_checks() {
        let few = alloc::vec![Complex64::new(0.0, 0.0); 99];
        assert!(matches!(cross_validate_budget(&few, 1.0), Err(Error::Domain(_))));
        let zs: Vec<Complex64> = (0..400).map(|i| Complex64::from_polar(1.0, i as f64)).collect();
        let cv = cross_validate_budget(&zs, 1.0).unwrap();
        assert!((cv.ratio - 1.0).abs() < 0.05);
    }

    #[test]
    fn slope_fit() {
        let xs = [1.0, 10.0, 100.0];
        let ys = [3.0, 300.0, 30000.0];
        let (s, _) = log_log_slope(&xs, &ys).unwrap();
        assert!((s - 2.0).abs() < 1e-12);
    }
}
