//! Two-level Raman dynamics of the atomic ground states.
//!
//! Amplitudes obey
//!
//! ```text
//! Ċ₀ = iδ₀C₀ + iΩ(t)C₁
//! Ċ₁ = iΩ*(t)C₀ + iδ₁C₁
//! ```
//!
//! and [`QubitState`] holds them in the Stark-rotated frame `C'_i = C_i e^{-iδ_i t}`.
//! Bloch convention: `|0⟩` is the `+z` pole, `x + iy = 2 c₀* c₁`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::constants::{HBAR, Z0};
use crate::error::{bail, ensure, Result};
use crate::field::{AtomCavityParams, FieldPairSpec, FieldSample};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Normalisation tolerance for [`QubitState::new`].
pub const NORM_TOL: f64 = 1e-12;
/// Largest tolerated norm drift of the integrators.
pub const DRIFT_TOL: f64 = 1e-8;
/// Step-size bound `dt·max(|Ω|, |δ|)` for [`evolve_numeric`].
pub const MAX_TWO_LEVEL_STEP: f64 = 0.05;
/// Step-size bound `dt·|Δ|` for [`three_level_oracle`].
pub const MAX_THREE_LEVEL_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    pub c0: Complex64,
    pub c1: Complex64,
}

impl QubitState {
    pub fn new(c0: Complex64, c1: Complex64) -> Result<Self> {
        let s = Self { c0, c1 };
        ensure!(
            (s.norm_sqr() - 1.0).abs() <= NORM_TOL,
            Domain,
            "state not normalised: |c0|²+|c1|² = {}",
            s.norm_sqr()
        );
        Ok(s)
    }

    pub fn ground() -> Self {
        Self { c0: Complex64::new(1.0, 0.0), c1: Complex64::new(0.0, 0.0) }
    }

    /// Spin coherent state `cos α |0⟩ + e^{iβ} sin α |1⟩`.
    pub fn prepared(alpha: f64, beta: f64) -> Self {
        Self {
            c0: Complex64::new(alpha.cos(), 0.0),
            c1: Complex64::from_polar(alpha.sin(), beta),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c0.norm_sqr() + self.c1.norm_sqr()
    }

    /// `(|c₀|², |c₁|²)`
    pub fn populations(&self) -> (f64, f64) {
        (self.c0.norm_sqr(), self.c1.norm_sqr())
    }

    pub fn bloch(&self) -> BlochVector {
        bloch_vector(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Right-handed rotation by `angle` about the unit vector `axis` (Rodrigues).
    pub fn rotated(&self, axis: [f64; 3], angle: f64) -> Self {
        let [ax, ay, az] = axis;
        let (s, c) = angle.sin_cos();
        let dot = ax * self.x + ay * self.y + az * self.z;
        let cross = [ay * self.z - az * self.y, az * self.x - ax * self.z, ax * self.y - ay * self.x];
        Self {
            x: self.x * c + cross[0] * s + ax * dot * (1.0 - c),
            y: self.y * c + cross[1] * s + ay * dot * (1.0 - c),
            z: self.z * c + cross[2] * s + az * dot * (1.0 - c),
        }
    }

    pub fn distance(&self, other: &Self) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

pub fn bloch_vector(state: &QubitState) -> BlochVector {
    let r = state.c0.conj() * state.c1 * 2.0;
    BlochVector { x: r.re, y: r.im, z: state.c0.norm_sqr() - state.c1.norm_sqr() }
}

/// Rotation axis of the closed-form evolution for drive phase `phi`.
///
/// The evolution over `T` is a right-handed rotation by `-2|Ω|T` about this axis.
pub fn rotation_axis(phi: f64) -> [f64; 3] {
    [phi.cos(), -phi.sin(), 0.0]
}

/// Complex Rabi frequency plus the two AC Stark shifts, all in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiDrive {
    pub omega: Complex64,
    pub delta0: f64,
    pub delta1: f64,
}

impl RabiDrive {
    pub fn new(omega: Complex64, delta0: f64, delta1: f64) -> Self {
        Self { omega, delta0, delta1 }
    }

    /// Drive with equal (zero) Stark shifts.
    pub fn resonant(omega: Complex64) -> Self {
        Self { omega, delta0: 0.0, delta1: 0.0 }
    }

    /// `δ₀ = δ₁` up to rounding.
    pub fn is_degenerate(&self) -> bool {
        let scale = self.delta0.abs().max(self.delta1.abs()).max(self.omega.norm());
        (self.delta0 - self.delta1).abs() <= 1e-12 * scale
    }
}

/// Ensemble Rabi rate per unit mutual coherence, rad/s per W/m².
///
/// `(Z₀ d₀₂ d₁₂/ħ²Δ)·(ω₀₂ω₁₂/ω̄₀ω̄₁)·(F/π)` with `Δ` the angular Raman detuning.
pub fn rabi_per_coherence(atom: &AtomCavityParams) -> Result<f64> {
    ensure!(atom.delta() != 0.0, Singularity, "zero Raman detuning");
    Ok(Z0 * atom.d02() * atom.d12() / (HBAR * HBAR * atom.delta()) * atom.frequency_ratio() * atom.cavity_gain())
}

/// Time-independent ensemble Rabi frequency `Ω₀` driven by `gamma12`.
pub fn ensemble_rabi_frequency(
    atom: &AtomCavityParams,
    _spec: &FieldPairSpec,
    gamma12: Complex64,
) -> Result<Complex64> {
    Ok(gamma12 * rabi_per_coherence(atom)?)
}

/// Inverse of [`ensemble_rabi_frequency`].
pub fn coherence_from_rabi(atom: &AtomCavityParams, omega: Complex64) -> Result<Complex64> {
    Ok(omega / rabi_per_coherence(atom)?)
}

/// Ensemble AC Stark shifts `δ_i = (F/π) Σ_k |g_{k,i2}|² n / Δ_k`.
pub fn ac_stark_shifts(atom: &AtomCavityParams, spec: &FieldPairSpec) -> Result<(f64, f64)> {
    ensure!(atom.delta() != 0.0, Singularity, "zero Raman detuning");
    let base = Z0 / (HBAR * HBAR * atom.delta()) * atom.frequency_ratio() * atom.cavity_gain() * spec.irradiance();
    Ok((base * atom.d02() * atom.d02(), base * atom.d12() * atom.d12()))
}

/// Per-mode coupling constants and weights for sampled (semiclassical) drives.
///
/// The coupling normalisation makes the sample mean of [`RabiModel::instantaneous`]
/// equal [`ensemble_rabi_frequency`] exactly at `τ = 0`.
#[derive(Debug, Clone)]
pub struct RabiModel {
    gain: f64,
    g0: f64,
    g1: f64,
    offsets: Vec<f64>,
    /// `e^{iφ_k}/Δ_k`
    weights: Vec<Complex64>,
    inv_detuning: Vec<f64>,
    spacing: f64,
}

impl RabiModel {
    pub fn new(atom: &AtomCavityParams, spec: &FieldPairSpec) -> Result<Self> {
        ensure!(atom.delta() != 0.0, Singularity, "zero Raman detuning");
        let k = spec.mode_count();
        let offsets: Vec<f64> = (0..k).map(|i| spec.mode_offset(i)).collect();
        // ω₀₂ − ω_k = Δ − (ω_k − ω_c)
        let inv_detuning: Vec<f64> = offsets.iter().map(|nu| 1.0 / (atom.delta() - nu)).collect();
        let mean_inv = inv_detuning.iter().sum::<f64>() / k as f64;
        let correction = (1.0 / atom.delta()) / mean_inv;
        let scale = Z0 * spec.irradiance_per_photon_mode() * atom.frequency_ratio() * correction / (HBAR * HBAR);
        let weights = inv_detuning
            .iter()
            .enumerate()
            .map(|(i, w)| Complex64::from_polar(*w, spec.mode_phase(i)))
            .collect();
        Ok(Self {
            gain: atom.cavity_gain(),
            g0: atom.d02() * scale.sqrt(),
            g1: atom.d12() * scale.sqrt(),
            offsets,
            weights,
            inv_detuning,
            spacing: spec.delta_omega() / k as f64,
        })
    }

    /// Coupling rates `(g₀, g₁)` per unit mode amplitude, rad/s.
    pub fn couplings(&self) -> (f64, f64) {
        (self.g0, self.g1)
    }

    /// `Ω(t)` for the sampled amplitudes, frequencies taken relative to `ω_c`.
    pub fn instantaneous(&self, amps: &[(Complex64, Complex64)], t: f64) -> Complex64 {
        let mut a = Complex64::new(0.0, 0.0);
        let mut b = Complex64::new(0.0, 0.0);
        for ((b0, b1), (nu, w)) in amps.iter().zip(self.offsets.iter().zip(&self.weights)) {
            let rot = Complex64::from_polar(1.0, nu * t);
            a += b0.conj() * rot;
            b += b1 * w * rot.conj();
        }
        a * b * (self.gain * self.g0 * self.g1)
    }

    /// Sampled Stark shifts `(F/π) g_i² Σ_k |b_{ki}|²/Δ_k`.
    pub fn stark_shifts(&self, amps: &[(Complex64, Complex64)]) -> (f64, f64) {
        let (mut s0, mut s1) = (0.0, 0.0);
        for ((b0, b1), w) in amps.iter().zip(&self.inv_detuning) {
            s0 += b0.norm_sqr() * w;
            s1 += b1.norm_sqr() * w;
        }
        (self.gain * self.g0 * self.g0 * s0, self.gain * self.g1 * self.g1 * s1)
    }

    /// Precomputes the exact window average `(1/T)∫₀ᵀ Ω(t) dt` for this grid.
    pub fn window(&self, t: f64) -> Result<WindowAverager<'_>> {
        ensure!(t > 0.0, Domain, "window length must be positive, got {t}");
        let k = self.offsets.len() as isize;
        let kernel = (-(k - 1)..k)
            .map(|m| {
                let x = m as f64 * self.spacing * t;
                if x == 0.0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    (Complex64::from_polar(1.0, x) - 1.0) / (I * x)
                }
            })
            .collect();
        Ok(WindowAverager { model: self, kernel })
    }
}

/// Exact time average of a sampled drive over a fixed window.
pub struct WindowAverager<'a> {
    model: &'a RabiModel,
    /// `(1/T)∫ e^{i m δν t} dt` for `m = −(K−1)..=K−1`.
    kernel: Vec<Complex64>,
}

impl WindowAverager<'_> {
    pub fn average(&self, amps: &[(Complex64, Complex64)]) -> Complex64 {
        let k = amps.len();
        let weighted: Vec<Complex64> = amps.iter().zip(&self.model.weights).map(|((_, b1), w)| b1 * w).collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, (b0, _)) in amps.iter().enumerate() {
            // kernel index for m = i − j is (i − j) + (K − 1); reversed so j runs forward
            let window = &self.kernel[i..i + k];
            let inner: Complex64 = window.iter().rev().zip(&weighted).map(|(kv, bw)| kv * bw).sum();
            acc += b0.conj() * inner;
        }
        acc * (self.model.gain * self.model.g0 * self.model.g1)
    }
}

/// `Ω(t)` of one field sample; see [`RabiModel`] for the normalisation.
pub fn instantaneous_rabi(
    sample: &FieldSample,
    atom: &AtomCavityParams,
    spec: &FieldPairSpec,
    t: f64,
) -> Result<Complex64> {
    ensure!(
        sample.amplitudes.len() == spec.mode_count(),
        Domain,
        "sample has {} modes, spec has {}",
        sample.amplitudes.len(),
        spec.mode_count()
    );
    Ok(RabiModel::new(atom, spec)?.instantaneous(&sample.amplitudes, t))
}

/// Sampled AC Stark shifts of one field sample.
pub fn sample_stark_shifts(
    sample: &FieldSample,
    atom: &AtomCavityParams,
    spec: &FieldPairSpec,
) -> Result<(f64, f64)> {
    Ok(RabiModel::new(atom, spec)?.stark_shifts(&sample.amplitudes))
}

/// Closed-form evolution of an arbitrary state under a degenerate drive.
pub fn evolve_state(state: &QubitState, drive: &RabiDrive, t: f64) -> Result<QubitState> {
    ensure!(
        drive.is_degenerate(),
        Precondition,
        "closed form needs degenerate Stark shifts, got δ0 = {:e}, δ1 = {:e}",
        drive.delta0,
        drive.delta1
    );
    let theta = drive.omega.norm() * t;
    let phase = if drive.omega.norm() > 0.0 { drive.omega / drive.omega.norm() } else { Complex64::new(1.0, 0.0) };
    let (s, c) = theta.sin_cos();
    Ok(QubitState {
        c0: state.c0 * c + I * phase * state.c1 * s,
        c1: state.c1 * c + I * phase.conj() * state.c0 * s,
    })
}

/// Closed-form evolution of the prepared state `cos α|0⟩ + e^{iβ} sin α|1⟩`.
pub fn evolve_analytic(alpha: f64, beta: f64, drive: &RabiDrive, t: f64) -> Result<QubitState> {
    evolve_state(&QubitState::prepared(alpha, beta), drive, t)
}

/// Drive samples on a uniform grid of spacing `dt/2`, for RK4 steps of size `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct RabiSeries {
    dt: f64,
    values: Vec<Complex64>,
}

impl RabiSeries {
    /// `values[j] = Ω(j·dt/2)`; the length must be odd (`2·steps + 1`).
    pub fn new(dt: f64, values: Vec<Complex64>) -> Result<Self> {
        ensure!(dt > 0.0, Config, "step must be positive, got {dt}");
        ensure!(values.len() >= 3 && values.len() % 2 == 1, Config, "series needs 2·steps+1 samples, got {}", values.len());
        Ok(Self { dt, values })
    }

    pub fn constant(omega: Complex64, dt: f64, steps: usize) -> Result<Self> {
        Self::new(dt, alloc::vec![omega; 2 * steps + 1])
    }

    pub fn from_fn(dt: f64, steps: usize, mut f: impl FnMut(f64) -> Complex64) -> Result<Self> {
        Self::new(dt, (0..=2 * steps).map(|j| f(j as f64 * 0.5 * dt)).collect())
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn steps(&self) -> usize {
        (self.values.len() - 1) / 2
    }
    pub fn duration(&self) -> f64 {
        self.steps() as f64 * self.dt
    }
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// One row of a trajectory dump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub state: QubitState,
    pub bloch: BlochVector,
}

fn two_level_rhs(c: [Complex64; 2], omega: Complex64, d0: f64, d1: f64) -> [Complex64; 2] {
    [I * (c[0] * d0 + omega * c[1]), I * (omega.conj() * c[0] + c[1] * d1)]
}

fn axpy(a: [Complex64; 2], h: f64, k: [Complex64; 2]) -> [Complex64; 2] {
    [a[0] + k[0] * h, a[1] + k[1] * h]
}

fn integrate_two_level(
    state0: &QubitState,
    series: &RabiSeries,
    delta0: f64,
    delta1: f64,
    t_end: f64,
    mut observe: impl FnMut(usize, f64, &QubitState),
) -> Result<QubitState> {
    let h = series.dt;
    let rate = series.max_abs().max(delta0.abs()).max(delta1.abs());
    ensure!(
        h * rate < MAX_TWO_LEVEL_STEP,
        Config,
        "step too large: dt·max(|Ω|,|δ|) = {:.3e} ≥ {}",
        h * rate,
        MAX_TWO_LEVEL_STEP
    );
    let span = series.duration();
    ensure!(
        (span - t_end).abs() <= 1e-9 * t_end.abs().max(span),
        Config,
        "series spans {span:e} s but T = {t_end:e} s"
    );
    ensure!(
        (state0.norm_sqr() - 1.0).abs() <= NORM_TOL,
        Domain,
        "initial state not normalised"
    );
    let primed = |c: [Complex64; 2], t: f64| QubitState {
        c0: c[0] * Complex64::from_polar(1.0, -delta0 * t),
        c1: c[1] * Complex64::from_polar(1.0, -delta1 * t),
    };
    let mut c = [state0.c0, state0.c1];
    observe(0, 0.0, state0);
    for n in 0..series.steps() {
        let (w0, wm, w1) = (series.values[2 * n], series.values[2 * n + 1], series.values[2 * n + 2]);
        let k1 = two_level_rhs(c, w0, delta0, delta1);
        let k2 = two_level_rhs(axpy(c, 0.5 * h, k1), wm, delta0, delta1);
        let k3 = two_level_rhs(axpy(c, 0.5 * h, k2), wm, delta0, delta1);
        let k4 = two_level_rhs(axpy(c, h, k3), w1, delta0, delta1);
        for i in 0..2 {
            c[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
        }
        let norm = c[0].norm_sqr() + c[1].norm_sqr();
        if (norm - 1.0).abs() > DRIFT_TOL {
            bail!(Numerical, "norm drifted to {norm} after step {}", n + 1);
        }
        let t = (n + 1) as f64 * h;
        observe(n + 1, t, &primed(c, t));
    }
    Ok(primed(c, span))
}

/// RK4 integration of the two-level equations with a sampled `Ω(t)`.
///
/// Returns the state in the Stark-rotated frame, so that a constant drive with
/// `δ₀ = δ₁` reproduces [`evolve_state`].
pub fn evolve_numeric(
    state0: &QubitState,
    series: &RabiSeries,
    delta0: f64,
    delta1: f64,
    t: f64,
) -> Result<QubitState> {
    integrate_two_level(state0, series, delta0, delta1, t, |_, _, _| {})
}

/// As [`evolve_numeric`], recording every `stride`-th step (and the last).
pub fn evolve_numeric_trajectory(
    state0: &QubitState,
    series: &RabiSeries,
    delta0: f64,
    delta1: f64,
    stride: usize,
) -> Result<Vec<TrajectoryPoint>> {
    ensure!(stride >= 1, Config, "stride must be >= 1");
    let last = series.steps();
    let mut out = Vec::new();
    integrate_two_level(state0, series, delta0, delta1, series.duration(), |n, t, s| {
        if n % stride == 0 || n == last {
            out.push(TrajectoryPoint { t, state: *s, bloch: s.bloch() });
        }
    })?;
    Ok(out)
}

/// Window-averaged `⟨|Ω̄|²⟩ = |Ω₀|²(1 + (2π/TΔω)(n+1)/n)`.
pub fn rabi_variance(omega0_abs: f64, t: f64, delta_omega: f64, n_occ: f64) -> Result<f64> {
    ensure!(t > 0.0 && delta_omega > 0.0, Domain, "T and Δω must be positive");
    ensure!(n_occ > 0.0, Singularity, "(n+1)/n diverges at n = 0");
    let excess = 2.0 * PI / (t * delta_omega) * (n_occ + 1.0) / n_occ;
    Ok(omega0_abs * omega0_abs * (1.0 + excess))
}

/// Λ system driven by two classical fields, detuned by `delta` from `|2⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaSystem {
    /// Coupling rates per unit amplitude, rad/s.
    pub g02: f64,
    pub g12: f64,
    pub alpha0: Complex64,
    pub alpha1: Complex64,
    /// Single-photon detuning (angular).
    pub delta: f64,
}

impl LambdaSystem {
    /// Leg Rabi rates `V_i = g_{i2} α_i`.
    pub fn leg_rabi(&self) -> (Complex64, Complex64) {
        (self.alpha0 * self.g02, self.alpha1 * self.g12)
    }

    /// Two-level drive after adiabatic elimination of `|2⟩`:
    /// `Ω = V₀*V₁/Δ`, `δ_i = |V_i|²/Δ`.
    pub fn reduced_drive(&self) -> RabiDrive {
        let (v0, v1) = self.leg_rabi();
        RabiDrive::new(v0.conj() * v1 / self.delta, v0.norm_sqr() / self.delta, v1.norm_sqr() / self.delta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeLevelResult {
    pub c0: Complex64,
    pub c1: Complex64,
    pub c2: Complex64,
    /// Time-averaged `|C₂|²` over the window.
    pub mean_excited: f64,
    pub max_norm_drift: f64,
}

/// Direct RK4 integration of the three-level amplitudes.
///
/// Frame: `|2⟩` carries the detuning, `iĊ = H C` with
/// `H = [[0, 0, V₀*], [0, 0, V₁*], [V₀, V₁, Δ]]`; the ground amplitudes coincide
/// with those of the two-level description.
pub fn three_level_oracle(sys: &LambdaSystem, init: [Complex64; 3], t: f64, dt: f64) -> Result<ThreeLevelResult> {
    ensure!(sys.delta != 0.0, Singularity, "zero detuning");
    ensure!(t >= 0.0 && dt > 0.0, Config, "need T >= 0 and dt > 0");
    ensure!(
        dt * sys.delta.abs() < MAX_THREE_LEVEL_STEP,
        Config,
        "dt·|Δ| = {:.3e} does not resolve the detuning (limit {})",
        dt * sys.delta.abs(),
        MAX_THREE_LEVEL_STEP
    );
    let norm0: f64 = init.iter().map(|c| c.norm_sqr()).sum();
    ensure!((norm0 - 1.0).abs() <= NORM_TOL, Domain, "initial state not normalised");
    let steps = (t / dt).ceil() as usize;
    let (v0, v1) = sys.leg_rabi();
    let d = sys.delta;
    let rhs = |c: [Complex64; 3]| -> [Complex64; 3] {
        [
            -I * (v0.conj() * c[2]),
            -I * (v1.conj() * c[2]),
            -I * (v0 * c[0] + v1 * c[1] + c[2] * d),
        ]
    };
    let add = |a: [Complex64; 3], h: f64, k: [Complex64; 3]| [a[0] + k[0] * h, a[1] + k[1] * h, a[2] + k[2] * h];
    let mut c = init;
    let mut excited = 0.0;
    let mut drift: f64 = 0.0;
    if steps > 0 {
        let h = t / steps as f64;
        for _ in 0..steps {
            let before = c[2].norm_sqr();
            let k1 = rhs(c);
            let k2 = rhs(add(c, 0.5 * h, k1));
            let k3 = rhs(add(c, 0.5 * h, k2));
            let k4 = rhs(add(c, h, k3));
            for i in 0..3 {
                c[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
            }
            excited += 0.5 * (before + c[2].norm_sqr());
            let norm: f64 = c.iter().map(|x| x.norm_sqr()).sum();
            drift = drift.max((norm - 1.0).abs());
        }
        excited /= steps as f64;
    } else {
        excited = c[2].norm_sqr();
    }
    ensure!(drift <= DRIFT_TOL, Numerical, "three-level norm drift {drift:e} exceeds {DRIFT_TOL:e}");
    Ok(ThreeLevelResult { c0: c[0], c1: c[1], c2: c[2], mean_excited: excited, max_norm_drift: drift })
}
