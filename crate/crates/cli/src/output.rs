//! CSV writers. Floats are written as `{:.16e}` (17 significant digits).

use std::fs::File;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use coherence_core::balance::{BalanceResult, TraceRow};
use coherence_core::budget::SweepPoint;
use coherence_core::classical::PhaseScanMeasurement;
use coherence_core::qubit::TrajectoryPoint;
use coherence_core::Complex64;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV writer with the fixed float format.
pub struct Table {
    inner: csv::Writer<File>,
}

impl Table {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let mut inner = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
        inner.write_record(header)?;
        Ok(Self { inner })
    }

    pub fn row(&mut self, fields: &[Field]) -> Result<()> {
        self.inner.write_record(fields.iter().map(Field::render))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

pub enum Field<'a> {
    F(f64),
    U(u64),
    B(bool),
    S(&'a str),
}

impl Field<'_> {
    fn render(&self) -> String {
        match self {
            Field::F(x) => fmt_f64(*x),
            Field::U(n) => n.to_string(),
            Field::B(b) => b.to_string(),
            Field::S(s) => s.to_string(),
        }
    }
}

use Field::{B, F, S, U};

pub const SWEEP_HEADER: [&str; 12] = [
    "n_occ",
    "zeta",
    "n_T",
    "Q_mc",
    "sigma_p_sq",
    "sigma_L_sq",
    "sigma_sp_sq",
    "sigma_a_sq",
    "sigma_I_sq",
    "dominant_term",
    "log10_n_T",
    "log10_Q_mc",
];

/// Failed points are written with NaN values and `dominant_term = error`.
pub fn write_sweep(path: &Path, points: &[SweepPoint]) -> Result<()> {
    let mut t = Table::create(path, &SWEEP_HEADER)?;
    for p in points {
        match &p.budget {
            Ok(b) => t.row(&[
                F(p.n_occ),
                F(p.zeta_mag),
                F(p.n_t),
                F(b.q_mc),
                F(b.sigma_p_sq),
                F(b.sigma_l_sq),
                F(b.sigma_sp_sq),
                F(b.sigma_a_sq),
                F(b.sigma_i_sq),
                S(b.dominant_term().as_str()),
                F(p.n_t.log10()),
                F(b.q_mc.log10()),
            ])?,
            Err(_) => {
                let nan = F(f64::NAN);
                t.row(&[
                    F(p.n_occ),
                    F(p.zeta_mag),
                    F(p.n_t),
                    F(f64::NAN),
                    F(f64::NAN),
                    F(f64::NAN),
                    F(f64::NAN),
                    F(f64::NAN),
                    F(f64::NAN),
                    S("error"),
                    F(p.n_t.log10()),
                    nan,
                ])?
            }
        }
    }
    t.finish()
}

pub fn write_trace(path: &Path, trace: &[TraceRow]) -> Result<()> {
    let mut t = Table::create(path, &["iteration", "re_omega1", "im_omega1", "z_sin", "z_cos", "gain"])?;
    for r in trace {
        t.row(&[U(r.iteration as u64), F(r.omega1.re), F(r.omega1.im), F(r.z_sin), F(r.z_cos), F(r.gain)])?;
    }
    t.finish()
}

pub fn write_trajectory(path: &Path, points: &[TrajectoryPoint]) -> Result<()> {
    let mut t = Table::create(path, &["t_s", "re_c0", "im_c0", "re_c1", "im_c1", "x", "y", "z"])?;
    for p in points {
        t.row(&[
            F(p.t),
            F(p.state.c0.re),
            F(p.state.c0.im),
            F(p.state.c1.re),
            F(p.state.c1.im),
            F(p.bloch.x),
            F(p.bloch.y),
            F(p.bloch.z),
        ])?;
    }
    t.finish()
}

/// Structured-text record of a balance run.
pub fn balance_result_toml(r: &BalanceResult, truth: Complex64) -> String {
    let s = &r.final_setting;
    format!(
        "[result]\n\
         converged = {}\n\
         iterations = {}\n\
         residual_signal = {}\n\
         omega1_final_re_rad_per_s = {}\n\
         omega1_final_im_rad_per_s = {}\n\
         gamma12_estimate_re_w_per_m2 = {}\n\
         gamma12_estimate_im_w_per_m2 = {}\n\
         gamma12_true_re_w_per_m2 = {}\n\
         gamma12_true_im_w_per_m2 = {}\n\
         interaction_time_s = {}\n\
         small_angle_warnings = {}\n\
         \n[result.control]\n\
         alpha0_re = {}\n\
         alpha0_im = {}\n\
         alpha1_re = {}\n\
         alpha1_im = {}\n\
         psi_rad = {}\n\
         delta_l_rad_per_s = {}\n",
        r.converged,
        r.iterations,
        toml_f64(r.residual_signal),
        toml_f64(r.omega1_final.re),
        toml_f64(r.omega1_final.im),
        toml_f64(r.gamma12_estimate.re),
        toml_f64(r.gamma12_estimate.im),
        toml_f64(truth.re),
        toml_f64(truth.im),
        toml_f64(r.interaction_time),
        r.small_angle_warnings,
        toml_f64(s.alpha0.re),
        toml_f64(s.alpha0.im),
        toml_f64(s.alpha1.re),
        toml_f64(s.alpha1.im),
        toml_f64(s.psi),
        toml_f64(s.delta_l),
    )
}

fn toml_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        fmt_f64(x)
    }
}

pub const BALANCE_RUNS_HEADER: [&str; 8] = [
    "run",
    "re_gamma12",
    "im_gamma12",
    "iterations",
    "converged",
    "residual_signal",
    "interaction_time_s",
    "small_angle_warnings",
];

pub fn balance_run_row(t: &mut Table, run: usize, r: &BalanceResult) -> Result<()> {
    t.row(&[
        U(run as u64),
        F(r.gamma12_estimate.re),
        F(r.gamma12_estimate.im),
        U(r.iterations as u64),
        B(r.converged),
        F(r.residual_signal),
        F(r.interaction_time),
        U(r.small_angle_warnings as u64),
    ])
}

pub const CLASSICAL_TRIALS_HEADER: [&str; 7] = ["run", "phase_index", "phi_rad", "I1_w_per_m2", "I2_w_per_m2", "count1", "count2"];

pub fn classical_trial_rows(t: &mut Table, run: usize, m: &PhaseScanMeasurement, counts: &[(u64, u64)]) -> Result<()> {
    for (j, ((phi, (i1, i2)), (n1, n2))) in m.phases.iter().zip(&m.mean_irradiances).zip(counts).enumerate() {
        t.row(&[U(run as u64), U(j as u64), F(*phi), F(*i1), F(*i2), U(*n1), U(*n2)])?;
    }
    Ok(())
}

pub const CLASSICAL_ESTIMATES_HEADER: [&str; 5] = ["run", "re_zeta_hat", "im_zeta_hat", "sigma_I_sq", "gamma12_min"];

/// Writes a plain text file.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
