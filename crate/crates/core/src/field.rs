//! Field-pair and atom/cavity parameter records, unit conversions and
//! Gaussian sampling of the partially coherent field pair.
//!
//! The two fields are modelled as `K` discrete modes spread uniformly over
//! the band `[ω_c − Δω/2, ω_c + Δω/2]` (flat-top spectrum). Thermal light is
//! a circular complex Gaussian per mode; mode `k` of the two fields has
//! covariance `[[n, ζ* n], [ζ n, n]]`, i.e. `⟨b*_{k0} b_{k1}⟩ = ζ n`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::constants::{C0, EPS0, HBAR, KB};
use crate::error::{bail, ensure, Result};
use crate::rng::{circular_normal, stream_rng, SimRng};

/// Default number of spectral modes.
pub const DEFAULT_MODE_COUNT: usize = 256;

/// Minimum ratio `Δ/Δω` accepted by [`AtomCavityParams::new`].
pub const MIN_DETUNING_RATIO: f64 = 10.0;

/// Mean thermal occupation `1/(exp(ħω/k_BΘ) − 1)` at angular frequency `omega_c`.
pub fn occupation_from_temperature(omega_c: f64, theta: f64) -> Result<f64> {
    ensure!(theta > 0.0, Domain, "temperature must be positive, got {theta} K");
    ensure!(omega_c > 0.0, Domain, "frequency must be positive, got {omega_c}");
    let x = HBAR * omega_c / (KB * theta);
    Ok(1.0 / x.exp_m1())
}

/// Photons detected per measurement interval, `n_T = n·Δω·T/2π`.
pub fn total_photons(n_occ: f64, delta_omega: f64, t: f64) -> Result<f64> {
    ensure!(t > 0.0, Domain, "integration time must be positive, got {t}");
    Ok(n_occ * delta_omega * t / (2.0 * PI))
}

/// Integration time that yields `n_t` detected photons.
pub fn time_for_photons(n_occ: f64, delta_omega: f64, n_t: f64) -> Result<f64> {
    ensure!(n_occ > 0.0, Singularity, "n_occ = 0 admits no finite integration time");
    ensure!(delta_omega > 0.0, Domain, "bandwidth must be positive");
    Ok(2.0 * PI * n_t / (n_occ * delta_omega))
}

/// Atoms inside the Gaussian waist within a Rayleigh length, `N_a = 2 N₀ A²/λ`.
pub fn atoms_in_waist(n0: f64, area: f64, lambda: f64) -> Result<f64> {
    ensure!(n0 >= 0.0, Domain, "atom density must be non-negative, got {n0}");
    ensure!(area > 0.0 && lambda > 0.0, Domain, "area and wavelength must be positive");
    Ok(2.0 * n0 * area * area / lambda)
}

/// Angular frequency of light with vacuum wavelength `lambda`.
pub fn angular_frequency(lambda: f64) -> f64 {
    2.0 * PI * C0 / lambda
}

/// Statistical description of the two quasi-monochromatic fields.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPairSpec {
    omega_c: f64,
    delta_omega: f64,
    n_occ: f64,
    zeta: Complex64,
    tau: f64,
    mode_count: usize,
    w0: f64,
    area: f64,
}

impl FieldPairSpec {
    pub fn new(
        omega_c: f64,
        delta_omega: f64,
        n_occ: f64,
        zeta: Complex64,
        tau: f64,
        mode_count: usize,
        w0: f64,
    ) -> Result<Self> {
        ensure!(omega_c > 0.0, Domain, "omega_c must be positive, got {omega_c}");
        ensure!(delta_omega > 0.0, Domain, "delta_omega must be positive, got {delta_omega}");
        ensure!(n_occ >= 0.0 && n_occ.is_finite(), Domain, "n_occ must be >= 0, got {n_occ}");
        ensure!(
            zeta.norm() <= 1.0 + 1e-15,
            Domain,
            "|zeta| = {} exceeds 1; the mode covariance would not be positive semidefinite",
            zeta.norm()
        );
        ensure!(tau.is_finite(), Domain, "tau must be finite");
        ensure!(mode_count >= 1, Domain, "mode_count must be >= 1");
        ensure!(w0 > 0.0, Domain, "beam waist must be positive, got {w0}");
        Ok(Self {
            omega_c,
            delta_omega,
            n_occ,
            zeta,
            tau,
            mode_count,
            w0,
            area: PI * w0 * w0,
        })
    }

    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }
    pub fn delta_omega(&self) -> f64 {
        self.delta_omega
    }
    pub fn n_occ(&self) -> f64 {
        self.n_occ
    }
    pub fn zeta(&self) -> Complex64 {
        self.zeta
    }
    pub fn tau(&self) -> f64 {
        self.tau
    }
    pub fn mode_count(&self) -> usize {
        self.mode_count
    }
    pub fn w0(&self) -> f64 {
        self.w0
    }
    /// Beam cross-section `A = π W₀²`.
    pub fn area(&self) -> f64 {
        self.area
    }
    pub fn wavelength(&self) -> f64 {
        2.0 * PI * C0 / self.omega_c
    }

    pub fn with_zeta(&self, zeta: Complex64) -> Result<Self> {
        Self::new(self.omega_c, self.delta_omega, self.n_occ, zeta, self.tau, self.mode_count, self.w0)
    }

    pub fn with_occupation(&self, n_occ: f64) -> Result<Self> {
        Self::new(self.omega_c, self.delta_omega, n_occ, self.zeta, self.tau, self.mode_count, self.w0)
    }

    pub fn with_mode_count(&self, mode_count: usize) -> Result<Self> {
        Self::new(self.omega_c, self.delta_omega, self.n_occ, self.zeta, self.tau, mode_count, self.w0)
    }

    /// Offset `ω_k − ω_c` of mode `k` (band midpoints).
    pub fn mode_offset(&self, k: usize) -> f64 {
        let kk = self.mode_count as f64;
        -0.5 * self.delta_omega + (k as f64 + 0.5) * self.delta_omega / kk
    }

    /// Absolute mode frequencies `ω_k`.
    pub fn mode_frequencies(&self) -> Vec<f64> {
        (0..self.mode_count).map(|k| self.omega_c + self.mode_offset(k)).collect()
    }

    /// Relative phase `φ_k = ω_k τ` of mode `k` of the second field.
    pub fn mode_phase(&self, k: usize) -> f64 {
        // ω_c·τ can be large; reduce it before adding the small offset term.
        let carrier = (self.omega_c * self.tau) % (2.0 * PI);
        carrier + self.mode_offset(k) * self.tau
    }

    /// Per-mode irradiance scale: `I₀ = n·K·s`, i.e. `s = ħω_cΔω/(2πAK)`.
    pub fn irradiance_per_photon_mode(&self) -> f64 {
        HBAR * self.omega_c * self.delta_omega / (2.0 * PI * self.area * self.mode_count as f64)
    }

    /// Irradiance of each field, `I₀ = n ħω_c Δω/(2πA)`.
    ///
    /// Chosen so that `I₀ T A/(ħω_c)` equals the photon count `n_T`.
    pub fn irradiance(&self) -> f64 {
        irradiance_from_occupation(self)
    }

    /// Ensemble mutual coherence `Γ₁₂(τ)` of the discretised spectrum.
    ///
    /// Equals `ζ I₀` at `τ = 0`; for `τ ≠ 0` it is `ζ I₀ ⟨e^{iφ_k}⟩_k`.
    pub fn mutual_coherence(&self) -> Complex64 {
        let phase_avg = (0..self.mode_count)
            .map(|k| Complex64::from_polar(1.0, self.mode_phase(k)))
            .sum::<Complex64>()
            / self.mode_count as f64;
        self.zeta * self.irradiance() * phase_avg
    }
}

pub fn irradiance_from_occupation(spec: &FieldPairSpec) -> f64 {
    spec.n_occ * HBAR * spec.omega_c * spec.delta_omega / (2.0 * PI * spec.area)
}

/// Inputs for [`AtomCavityParams::new`]; all in SI, detunings in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomCavityInputs {
    pub d02: f64,
    pub d12: f64,
    /// Raman detuning `ω₀₂ − ω̄₀` of the probed fields (angular).
    pub delta: f64,
    /// Detuning of the control beams (angular).
    pub delta_l: f64,
    pub finesse: f64,
    /// Atom density, m⁻³.
    pub n0: f64,
    pub lambda: f64,
}

/// Atom and cavity parameters, validated against the field bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomCavityParams {
    d02: f64,
    d12: f64,
    delta: f64,
    delta_l: f64,
    finesse: f64,
    n0: f64,
    lambda: f64,
    omega_c: f64,
    gamma: f64,
}

impl AtomCavityParams {
    /// Validates the inputs against `spec` and derives the spontaneous rate.
    ///
    /// Rejects detunings below `10·Δω`, where the reduced two-level dynamics
    /// no longer applies.
    pub fn new(inputs: AtomCavityInputs, spec: &FieldPairSpec) -> Result<Self> {
        let AtomCavityInputs { d02, d12, delta, delta_l, finesse, n0, lambda } = inputs;
        ensure!(d02 > 0.0 && d12 > 0.0, Domain, "dipole moments must be positive");
        ensure!(delta.is_finite() && delta != 0.0, Singularity, "Raman detuning must be non-zero");
        ensure!(
            delta.abs() >= MIN_DETUNING_RATIO * spec.delta_omega(),
            Config,
            "large-detuning regime violated: |Delta| = {:e} < {}·delta_omega = {:e}",
            delta.abs(),
            MIN_DETUNING_RATIO,
            MIN_DETUNING_RATIO * spec.delta_omega()
        );
        ensure!(delta_l.is_finite() && delta_l != 0.0, Singularity, "control detuning must be non-zero");
        ensure!(finesse > 0.0, Domain, "finesse must be positive, got {finesse}");
        ensure!(n0 >= 0.0, Domain, "atom density must be non-negative, got {n0}");
        ensure!(lambda > 0.0, Domain, "wavelength must be positive");
        let rel = (lambda - spec.wavelength()).abs() / spec.wavelength();
        ensure!(
            rel < 1e-6,
            Config,
            "wavelength {lambda:e} m inconsistent with field centre frequency ({:e} m)",
            spec.wavelength()
        );
        let omega_c = spec.omega_c();
        let w02 = omega_c + delta;
        let gamma = d02 * d02 * w02 * w02 * w02 / (3.0 * PI * EPS0 * HBAR * C0 * C0 * C0);
        Ok(Self { d02, d12, delta, delta_l, finesse, n0, lambda, omega_c, gamma })
    }

    pub fn d02(&self) -> f64 {
        self.d02
    }
    pub fn d12(&self) -> f64 {
        self.d12
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn delta_l(&self) -> f64 {
        self.delta_l
    }
    pub fn finesse(&self) -> f64 {
        self.finesse
    }
    pub fn n0(&self) -> f64 {
        self.n0
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    /// Spontaneous emission rate of `|2⟩`, `d²ω₀₂³/(3π ε₀ ħ c₀³)`.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    /// Atomic transition frequency `ω₀₂ = ω₁₂ = ω_c + Δ`.
    pub fn transition_frequency(&self) -> f64 {
        self.omega_c + self.delta
    }
    /// `ω₀₂ω₁₂/(ω̄₀ω̄₁)`, kept exactly rather than set to one.
    pub fn frequency_ratio(&self) -> f64 {
        let r = self.transition_frequency() / self.omega_c;
        r * r
    }
    /// Intracavity intensity enhancement `F/π`.
    pub fn cavity_gain(&self) -> f64 {
        self.finesse / PI
    }

    pub fn with_detuning(&self, delta: f64, spec: &FieldPairSpec) -> Result<Self> {
        let mut inputs = self.inputs();
        inputs.delta = delta;
        Self::new(inputs, spec)
    }

    pub fn inputs(&self) -> AtomCavityInputs {
        AtomCavityInputs {
            d02: self.d02,
            d12: self.d12,
            delta: self.delta,
            delta_l: self.delta_l,
            finesse: self.finesse,
            n0: self.n0,
            lambda: self.lambda,
        }
    }
}

/// Lower Cholesky factor of the per-mode covariance `[[n, ζ*n], [ζn, n]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeCovariance {
    scale: f64,
    zeta: Complex64,
    residual: f64,
}

impl ModeCovariance {
    pub fn new(n_occ: f64, zeta: Complex64) -> Result<Self> {
        ensure!(n_occ >= 0.0, Domain, "occupation must be non-negative, got {n_occ}");
        let z2 = zeta.norm_sqr();
        if z2 > 1.0 + 1e-15 {
            bail!(Domain, "|zeta| = {} > 1: covariance is not positive semidefinite", zeta.norm());
        }
        Ok(Self { scale: n_occ.sqrt(), zeta, residual: (1.0 - z2).max(0.0).sqrt() })
    }

    /// Eigenvalues `n(1 ± |ζ|)` of the covariance matrix.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let n = self.scale * self.scale;
        (n * (1.0 - self.zeta.norm()), n * (1.0 + self.zeta.norm()))
    }

    /// Maps two independent unit circular normals onto the correlated pair.
    pub fn correlate(&self, u0: Complex64, u1: Complex64) -> (Complex64, Complex64) {
        let b0 = u0 * self.scale;
        let b1 = (self.zeta * u0 + u1 * self.residual) * self.scale;
        (b0, b1)
    }
}

/// One Monte-Carlo draw of the mode amplitudes of both fields.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    /// `(b_{k0}, b_{k1})` for each mode `k`.
    pub amplitudes: Vec<(Complex64, Complex64)>,
    /// `ω_k` for each mode.
    pub mode_freqs: Vec<f64>,
}

/// Operator ordering represented by the sampled amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ordering {
    /// Glauber-P sampling: moments are normally ordered, `⟨|b|²⟩ = n`.
    #[default]
    Normal,
    /// Field 1 carries an extra independent unit vacuum amplitude, so that
    /// `⟨b_{k1} b*_{k1}⟩ = n + 1`. Products `b*_{k0} b_{k'1} b_{j'1}* b_{j0}`
    /// then reproduce the quantum expectation of `Ω Ω†`, whose second factor
    /// is anti-normally ordered in field 1.
    VacuumOnField1,
}

/// Seeded sampler drawing successive [`FieldSample`]s.
pub struct FieldSampler {
    cov: ModeCovariance,
    freqs: Vec<f64>,
    ordering: Ordering,
    rng: SimRng,
}

impl FieldSampler {
    pub fn new(spec: &FieldPairSpec, seed: u64, stream: u64) -> Result<Self> {
        Self::with_ordering(spec, seed, stream, Ordering::Normal)
    }

    pub fn with_ordering(spec: &FieldPairSpec, seed: u64, stream: u64, ordering: Ordering) -> Result<Self> {
        Ok(Self {
            cov: ModeCovariance::new(spec.n_occ(), spec.zeta())?,
            freqs: spec.mode_frequencies(),
            ordering,
            rng: stream_rng(seed, stream),
        })
    }

    pub fn next_sample(&mut self) -> FieldSample {
        let amplitudes = draw_amplitudes(&self.cov, self.freqs.len(), self.ordering, &mut self.rng);
        FieldSample { amplitudes, mode_freqs: self.freqs.clone() }
    }

    /// Amplitudes only, reusing the caller's buffer.
    pub fn fill(&mut self, out: &mut Vec<(Complex64, Complex64)>) {
        out.clear();
        let Self { cov, freqs, ordering, rng } = self;
        out.extend((0..freqs.len()).map(|_| draw_mode(cov, *ordering, rng)));
    }
}

fn draw_mode<R: Rng + ?Sized>(cov: &ModeCovariance, ordering: Ordering, rng: &mut R) -> (Complex64, Complex64) {
    let u0 = circular_normal(rng);
    let u1 = circular_normal(rng);
    let (b0, mut b1) = cov.correlate(u0, u1);
    if ordering == Ordering::VacuumOnField1 {
        b1 += circular_normal(rng);
    }
    (b0, b1)
}

fn draw_amplitudes<R: Rng + ?Sized>(
    cov: &ModeCovariance,
    k: usize,
    ordering: Ordering,
    rng: &mut R,
) -> Vec<(Complex64, Complex64)> {
    (0..k).map(|_| draw_mode(cov, ordering, rng)).collect()
}

/// A single draw of the mode amplitudes, deterministic in `seed`.
pub fn sample_field_modes(spec: &FieldPairSpec, seed: u64) -> Result<FieldSample> {
    Ok(FieldSampler::new(spec, seed, 0)?.next_sample())
}

/// `Σ_k b*_{k0} b_{k1} e^{iφ_k}` scaled to W/m², for one sample.
pub fn sample_coherence(sample: &FieldSample, spec: &FieldPairSpec) -> Complex64 {
    let s = spec.irradiance_per_photon_mode();
    sample
        .amplitudes
        .iter()
        .enumerate()
        .map(|(k, (b0, b1))| b0.conj() * b1 * Complex64::from_polar(1.0, spec.mode_phase(k)))
        .sum::<Complex64>()
        * s
}

/// Sample estimate of `Γ₁₂`; its expectation is [`FieldPairSpec::mutual_coherence`].
pub fn empirical_mutual_coherence(samples: &[FieldSample], spec: &FieldPairSpec) -> Result<Complex64> {
    ensure!(!samples.is_empty(), Domain, "need at least one field sample");
    let total: Complex64 = samples.iter().map(|s| sample_coherence(s, spec)).sum();
    Ok(total / samples.len() as f64)
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::constants::C0;
    use proptest::prelude::*;

    fn reference_spec(n: f64, zeta: Complex64) -> FieldPairSpec {
        let wc = angular_frequency(780e-9);
        FieldPairSpec::new(wc, 1e-7 * wc, n, zeta, 0.0, 64, 1e-6).unwrap()
    }

    #[test]
    fn occupation_at_ln2_is_one() {
        let wc = 1e15;
        let theta = HBAR * wc / (KB * core::f64::consts::LN_2);
        let n = occupation_from_temperature(wc, theta).unwrap();
        assert!((n - 1.0).abs() < 1e-14);
    }

    #[test]
    fn occupation_cold_limit() {
        let n = occupation_from_temperature(angular_frequency(780e-9), 1.0).unwrap();
        assert_eq!(n, 0.0);
        assert!(occupation_from_temperature(1e15, 0.0).is_err());
        assert!(occupation_from_temperature(1e15, -3.0).is_err());
    }

    #[test]
    fn occupation_solar_temperature() {
        // mpmath, 50 digits: 1/(exp(hbar*2*pi*c/780e-9/(kB*6000)) - 1)
        let n = occupation_from_temperature(2.0 * PI * C0 / 780e-9, 6000.0).unwrap();
        let oracle = 0.048_461_494_758_434_508;
        assert!((n - oracle).abs() / oracle < 1e-12, "{n}");
    }

    #[test]
    fn irradiance_reference_n1() {
        let spec = reference_spec(1.0, Complex64::new(0.0, 0.0));
        // independent evaluation: hbar*wc*dw/(2*pi*pi*W0^2)
        let oracle = 3.115_719_532_802_911;
        assert!((spec.irradiance() - oracle).abs() / oracle < 1e-12, "{}", spec.irradiance());
        assert_eq!(spec.with_occupation(0.0).unwrap().irradiance(), 0.0);
        let ratio = spec.with_occupation(2.0).unwrap().irradiance() / spec.irradiance();
        assert!((ratio - 2.0).abs() < 1e-15);
    }

    #[test]
    fn total_photons_examples() {
        assert!((total_photons(1.0, 1.0, 2.0 * PI).unwrap() - 1.0).abs() < 1e-15);
        assert!((total_photons(10.0, 1.0, 2.0 * PI * 1e3).unwrap() - 1e4).abs() < 1e-9);
        assert!(total_photons(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn n_t_grid_from_time_sweep() {
        let spec = reference_spec(1.0, Complex64::new(0.0, 0.0));
        for e in 0..=8 {
            let n_t = 10f64.powi(e);
            let t = time_for_photons(1.0, spec.delta_omega(), n_t).unwrap();
            let back = total_photons(1.0, spec.delta_omega(), t).unwrap();
            assert!((back - n_t).abs() / n_t < 1e-14);
        }
    }

    #[test]
    fn atoms_in_reference_waist() {
        let a = PI * 1e-12;
        let na = atoms_in_waist(1e18, a, 780e-9).unwrap();
        // 2e18*(pi e-12)^2/780e-9
        assert!((na - 25.306_677_951_511_176).abs() < 1e-10, "{na}");
        assert_eq!(atoms_in_waist(0.0, a, 780e-9).unwrap(), 0.0);
        let na2 = atoms_in_waist(1e18, PI * 4e-12, 780e-9).unwrap();
        assert!((na2 / na - 16.0).abs() < 1e-12);
    }

    #[test]
    fn spec_validation() {
        let wc = angular_frequency(780e-9);
        let one = Complex64::new(1.0, 0.0);
        assert!(FieldPairSpec::new(wc, 1e8, 1.0, one * 1.01, 0.0, 4, 1e-6).is_err());
        assert!(FieldPairSpec::new(wc, 0.0, 1.0, one, 0.0, 4, 1e-6).is_err());
        assert!(FieldPairSpec::new(wc, 1e8, -1.0, one, 0.0, 4, 1e-6).is_err());
        assert!(FieldPairSpec::new(wc, 1e8, 1.0, one, 0.0, 0, 1e-6).is_err());
        let s = FieldPairSpec::new(wc, 1e8, 1.0, one, 0.0, 4, 2e-6).unwrap();
        assert_eq!(s.area(), PI * 2e-6 * 2e-6);
    }

    #[test]
    fn modes_span_band() {
        let spec = reference_spec(1.0, Complex64::new(0.0, 0.0));
        let f = spec.mode_frequencies();
        let lo = spec.omega_c() - spec.delta_omega() / 2.0;
        let hi = spec.omega_c() + spec.delta_omega() / 2.0;
        assert!(f.iter().all(|&w| w > lo && w < hi));
        let mean: f64 = spec.mode_offset(0) + spec.mode_offset(63);
        assert!(mean.abs() < 1e-6);
        let single = spec.with_mode_count(1).unwrap();
        assert_eq!(single.mode_offset(0), 0.0);
    }

    #[test]
    fn atom_params_reject_small_detuning() {
        let spec = reference_spec(1.0, Complex64::new(0.0, 0.0));
        let mut inputs = AtomCavityInputs {
            d02: 1.6e-29,
            d12: 1.6e-29,
            delta: 5.0 * spec.delta_omega(),
            delta_l: 1e12,
            finesse: 1.6e5,
            n0: 1e18,
            lambda: 780e-9,
        };
        assert!(matches!(AtomCavityParams::new(inputs, &spec), Err(crate::Error::Config(_))));
        inputs.delta = 1e3 * spec.delta_omega();
        let atom = AtomCavityParams::new(inputs, &spec).unwrap();
        let w = spec.omega_c() + inputs.delta;
        let g = 1.6e-29f64.powi(2) * w.powi(3) / (3.0 * PI * EPS0 * HBAR * C0.powi(3));
        assert!((atom.gamma() - g).abs() / g < 1e-14);
        inputs.lambda = 781e-9;
        assert!(AtomCavityParams::new(inputs, &spec).is_err());
    }

    #[test]
    fn covariance_rejects_excess_coherence() {
        assert!(ModeCovariance::new(1.0, Complex64::new(0.8, 0.7)).is_err());
        assert!(ModeCovariance::new(1.0, Complex64::new(1.0, 0.0)).is_ok());
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = reference_spec(2.0, Complex64::from_polar(0.4, 1.0));
        let a = sample_field_modes(&spec, 11).unwrap();
        let b = sample_field_modes(&spec, 11).unwrap();
        let c = sample_field_modes(&spec, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    fn cross_correlation(spec: &FieldPairSpec, m: usize, seed: u64) -> (Complex64, f64, f64) {
        let mut sampler = FieldSampler::new(spec, seed, 0).unwrap();
        let mut cross = Complex64::new(0.0, 0.0);
        let mut p0 = 0.0;
        let mut p1 = 0.0;
        let mut buf = Vec::new();
        let mut count = 0usize;
        while count < m {
            sampler.fill(&mut buf);
            for (b0, b1) in &buf {
                cross += b0.conj() * b1;
                p0 += b0.norm_sqr();
                p1 += b1.norm_sqr();
                count += 1;
            }
        }
        let c = count as f64;
        (cross / c, p0 / c, p1 / c)
    }

    #[test]
    fn zero_coherence_decorrelates() {
        let spec = reference_spec(1.0, Complex64::new(0.0, 0.0)).with_mode_count(10).unwrap();
        let m = 100_000;
        let (cross, p0, p1) = cross_correlation(&spec, m, 3);
        let rho = cross / (p0 * p1).sqrt();
        assert!(rho.norm() < 3.0 / (m as f64).sqrt(), "{rho}");
    }

    #[test]
    fn full_coherence_locks_fields() {
        let zeta = Complex64::from_polar(1.0, 0.7);
        let spec = reference_spec(1.0, zeta).with_mode_count(8).unwrap();
        let s = sample_field_modes(&spec, 5).unwrap();
        for (b0, b1) in &s.amplitudes {
            assert!((b1 - b0 * zeta).norm() < 1e-12);
        }
    }

    #[test]
    fn partial_coherence_moments() {
        // per-mode ρ̂ = ⟨b0* b1⟩/n with n = 1; se² of the estimate is (1 + |ζ|² ... )/M,
        // bounded by 1/M per quadrature for unit-power variables.
        let zeta = Complex64::from_polar(0.5, PI / 3.0);
        let spec = reference_spec(1.0, zeta).with_mode_count(10).unwrap();
        let m = 100_000;
        let (cross, p0, p1) = cross_correlation(&spec, m, 9);
        let se = (1.0 / m as f64).sqrt();
        assert!((cross - zeta).re.abs() < 3.0 * se, "{cross}");
        assert!((cross - zeta).im.abs() < 3.0 * se, "{cross}");
        assert!((p0 - 1.0).abs() < 5.0 * se);
        assert!((p1 - 1.0).abs() < 5.0 * se);
    }

    #[test]
    fn vacuum_ordering_adds_one_photon_to_field1() {
        let spec = reference_spec(0.5, Complex64::new(0.3, 0.0)).with_mode_count(10).unwrap();
        let mut sampler = FieldSampler::with_ordering(&spec, 4, 0, Ordering::VacuumOnField1).unwrap();
        let mut p1 = 0.0;
        let mut cross = Complex64::new(0.0, 0.0);
        let draws = 20_000;
        for _ in 0..draws {
            for (b0, b1) in sampler.next_sample().amplitudes {
                p1 += b1.norm_sqr();
                cross += b0.conj() * b1;
            }
        }
        let c = (draws * 10) as f64;
        assert!((p1 / c - 1.5).abs() < 0.02);
        assert!((cross / c - Complex64::new(0.15, 0.0)).norm() < 0.02);
    }

    #[test]
    fn empirical_coherence_converges() {
        let zeta = Complex64::new(0.35, 0.0);
        let spec = reference_spec(2.0, zeta).with_mode_count(16).unwrap();
        let mut sampler = FieldSampler::new(&spec, 21, 0).unwrap();
        let samples: Vec<_> = (0..20_000).map(|_| sampler.next_sample()).collect();
        let g = empirical_mutual_coherence(&samples, &spec).unwrap();
        let target = zeta * spec.irradiance();
        // per-sample std of Re ≲ I0·sqrt(1/(2K))·sqrt(1+|ζ|²)
        let se = spec.irradiance() * (1.2f64 / 32.0 / 20_000.0).sqrt();
        assert!((g - target).norm() < 5.0 * se, "{g} vs {target}");
        assert!(empirical_mutual_coherence(&[], &spec).is_err());
    }

    #[test]
    fn incoherent_fields_average_to_zero() {
        let spec = reference_spec(1.0, Complex64::new(0.0, 0.0)).with_mode_count(16).unwrap();
        let mut sampler = FieldSampler::new(&spec, 8, 0).unwrap();
        let samples: Vec<_> = (0..10_000).map(|_| sampler.next_sample()).collect();
        let g = empirical_mutual_coherence(&samples, &spec).unwrap();
        let se = spec.irradiance() * (1.0f64 / 32.0 / 10_000.0).sqrt();
        assert!(g.norm() < 5.0 * se);
    }

    #[test]
    fn delay_rotates_coherence_phase() {
        let zeta = Complex64::new(0.8, 0.0);
        // τ well inside the coherence time so the band average stays ≈ 1
        let base = reference_spec(1.0, zeta).with_mode_count(16).unwrap();
        let tau = 1.3e-15;
        let spec = FieldPairSpec::new(base.omega_c(), base.delta_omega(), 1.0, zeta, tau, 16, 1e-6).unwrap();
        let mut sampler = FieldSampler::new(&spec, 2, 0).unwrap();
        let samples: Vec<_> = (0..5_000).map(|_| sampler.next_sample()).collect();
        let g = empirical_mutual_coherence(&samples, &spec).unwrap();
        let expected = (spec.omega_c() * tau) % (2.0 * PI);
        let diff = (g.arg() - expected + 3.0 * PI) % (2.0 * PI) - PI;
        assert!(diff.abs() < 0.02, "arg {} vs {}", g.arg(), expected);
        let model = spec.mutual_coherence();
        let mdiff = (model.arg() - expected + 3.0 * PI) % (2.0 * PI) - PI;
        assert!(mdiff.abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn covariance_is_psd(n in 0.0f64..100.0, r in 0.0f64..=1.0, phi in -PI..PI) {
            let cov = ModeCovariance::new(n, Complex64::from_polar(r, phi)).unwrap();
            let (lo, hi) = cov.eigenvalues();
            prop_assert!(lo >= -1e-12 * n.max(1.0));
            prop_assert!(hi >= lo);
        }

        #[test]
        fn photon_count_round_trip(n in 1e-3f64..1e3, t in 1e-9f64..1e-3) {
            let spec = reference_spec(n, Complex64::new(0.0, 0.0));
            let n_t = total_photons(n, spec.delta_omega(), t).unwrap();
            let back = spec.irradiance() * t * spec.area() / (HBAR * spec.omega_c());
            prop_assert!((back - n_t).abs() <= 1e-13 * n_t);
        }
    }
}
