//! Scenario configuration file.
//!
//! Every physical key carries its unit in the name. Quantities that are
//! normally derived (`omega_c_rad_per_s`, `delta_omega_rad_per_s`,
//! `delta_rad_per_s`, ...) may be set explicitly; otherwise they follow from
//! the dimensionless ratios next to them. Missing tables take the defaults
//! below (a 780 nm thermal field pair, 1 µm waist, finesse 1.6e5).

use std::f64::consts::PI;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use coherence_core::balance::{BalanceConfig, ControlSetting, NoiseSwitches};
use coherence_core::budget::{log_grid, BudgetParams};
use coherence_core::field::{angular_frequency, AtomCavityInputs, AtomCavityParams, FieldPairSpec, DEFAULT_MODE_COUNT};
use coherence_core::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub field: FieldConfig,
    pub atom: AtomConfig,
    pub sweep: SweepConfig,
    pub balance: BalanceSection,
    pub montecarlo: MonteCarloConfig,
    pub validate: ValidateConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            field: FieldConfig::default(),
            atom: AtomConfig::default(),
            sweep: SweepConfig::default(),
            balance: BalanceSection::default(),
            montecarlo: MonteCarloConfig::default(),
            validate: ValidateConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldConfig {
    pub wavelength_m: f64,
    pub omega_c_rad_per_s: Option<f64>,
    /// `Δω/ω_c`, used when `delta_omega_rad_per_s` is absent.
    pub bandwidth_fraction: f64,
    pub delta_omega_rad_per_s: Option<f64>,
    pub n_occ: f64,
    pub zeta_re: f64,
    pub zeta_im: f64,
    pub tau_s: f64,
    pub mode_count: usize,
    pub waist_m: f64,
    pub detector_efficiency: f64,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            wavelength_m: 780e-9,
            omega_c_rad_per_s: None,
            bandwidth_fraction: 1e-7,
            delta_omega_rad_per_s: None,
            n_occ: 1.0,
            zeta_re: 0.1,
            zeta_im: 0.0,
            tau_s: 0.0,
            mode_count: DEFAULT_MODE_COUNT,
            waist_m: 1e-6,
            detector_efficiency: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtomConfig {
    pub d02_c_m: f64,
    pub d12_c_m: f64,
    /// `Δ/Δω`, used when `delta_rad_per_s` is absent.
    pub detuning_over_bandwidth: f64,
    pub delta_rad_per_s: Option<f64>,
    /// `Δ_L/Δ`, used when `delta_l_rad_per_s` is absent.
    pub control_detuning_ratio: f64,
    pub delta_l_rad_per_s: Option<f64>,
    pub finesse: f64,
    pub n0_per_m3: f64,
}

impl Default for AtomConfig {
    fn default() -> Self {
        Self {
            d02_c_m: 1.6e-29,
            d12_c_m: 1.6e-29,
            detuning_over_bandwidth: 1e3,
            delta_rad_per_s: None,
            control_detuning_ratio: 1.0,
            delta_l_rad_per_s: None,
            finesse: 1.6e5,
            n0_per_m3: 1e18,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub n_occ: Vec<f64>,
    pub zeta: Vec<f64>,
    /// Explicit `n_T` grid; overrides the log grid below when present.
    pub n_t: Option<Vec<f64>>,
    pub n_t_log10_min: f64,
    pub n_t_log10_max: f64,
    pub points_per_decade: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_occ: vec![10.0, 1.0, 0.01],
            zeta: vec![1.0, 0.1, 0.01, 0.001],
            n_t: None,
            n_t_log10_min: 0.0,
            n_t_log10_max: 8.0,
            points_per_decade: 10,
        }
    }
}

impl SweepConfig {
    pub fn grid(&self) -> Result<Vec<f64>> {
        match &self.n_t {
            Some(v) => Ok(v.clone()),
            None => Ok(log_grid(self.n_t_log10_min, self.n_t_log10_max, self.points_per_decade)?),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BalanceSection {
    pub gain0: f64,
    pub gain_k0: f64,
    pub max_iter: usize,
    pub min_iter: usize,
    pub tol: Option<f64>,
    pub smoothing: f64,
    /// Atoms per interval; default is the waist count.
    pub atoms: Option<u64>,
    pub interaction_time_s: Option<f64>,
    pub prior_bound_w_per_m2: Option<f64>,
    pub atom_noise: bool,
    pub photon_noise: bool,
    pub control_g02_rad_per_s: f64,
    pub control_g12_rad_per_s: f64,
    /// Initial control Rabi frequency.
    pub omega1_init_re_rad_per_s: f64,
    pub omega1_init_im_rad_per_s: f64,
    pub trajectory: bool,
    pub trajectory_points: usize,
}

impl Default for BalanceSection {
    fn default() -> Self {
        let b = BalanceConfig::default();
        Self {
            gain0: b.gain0,
            gain_k0: b.gain_k0,
            max_iter: b.max_iter,
            min_iter: b.min_iter,
            tol: None,
            smoothing: b.smoothing,
            atoms: None,
            interaction_time_s: None,
            prior_bound_w_per_m2: None,
            atom_noise: true,
            photon_noise: false,
            control_g02_rad_per_s: 2.0 * PI * 1e6,
            control_g12_rad_per_s: 2.0 * PI * 1e6,
            omega1_init_re_rad_per_s: 0.0,
            omega1_init_im_rad_per_s: 0.0,
            trajectory: false,
            trajectory_points: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MonteCarloKind {
    Balance,
    Classical,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub kind: MonteCarloKind,
    pub runs: usize,
    /// Photons per classical measurement; fixes `T` for the classical runs.
    pub classical_n_t: f64,
    pub phases_rad: Vec<f64>,
    /// Write every classical phase-scan trial.
    pub dump_trials: bool,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            kind: MonteCarloKind::Both,
            runs: 1000,
            classical_n_t: 1e3,
            phases_rad: coherence_core::classical::DEFAULT_PHASES.to_vec(),
            dump_trials: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateConfig {
    /// Fraction of the default Monte-Carlo sample counts.
    pub sample_budget: f64,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self { sample_budget: 1.0 }
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Fills every derived quantity, so the echoed config has no silent defaults.
    pub fn resolved(&self) -> Result<Self> {
        let mut c = self.clone();
        let wc = c.field.omega_c_rad_per_s.unwrap_or_else(|| angular_frequency(c.field.wavelength_m));
        c.field.omega_c_rad_per_s = Some(wc);
        let dw = c.field.delta_omega_rad_per_s.unwrap_or(c.field.bandwidth_fraction * wc);
        c.field.delta_omega_rad_per_s = Some(dw);
        c.field.bandwidth_fraction = dw / wc;
        let delta = c.atom.delta_rad_per_s.unwrap_or(c.atom.detuning_over_bandwidth * dw);
        c.atom.delta_rad_per_s = Some(delta);
        c.atom.detuning_over_bandwidth = delta / dw;
        let delta_l = c.atom.delta_l_rad_per_s.unwrap_or(c.atom.control_detuning_ratio * delta);
        c.atom.delta_l_rad_per_s = Some(delta_l);
        c.atom.control_detuning_ratio = delta_l / delta;
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        ensure!(self.field.wavelength_m > 0.0, "field.wavelength_m must be positive");
        ensure!(
            (0.0..=1.0).contains(&self.field.detector_efficiency),
            "field.detector_efficiency must lie in [0, 1]"
        );
        ensure!(!self.sweep.n_occ.is_empty(), "sweep.n_occ grid is empty");
        ensure!(!self.sweep.zeta.is_empty(), "sweep.zeta grid is empty");
        if let Some(g) = &self.sweep.n_t {
            ensure!(!g.is_empty(), "sweep.n_t grid is empty");
        }
        ensure!(self.montecarlo.runs >= 1, "montecarlo.runs must be >= 1");
        ensure!(self.validate.sample_budget > 0.0, "validate.sample_budget must be positive");
        // constructing the models runs their own checks
        self.field_spec()?;
        self.atom_params()?;
        Ok(())
    }

    fn omega_c(&self) -> f64 {
        self.field.omega_c_rad_per_s.unwrap_or_else(|| angular_frequency(self.field.wavelength_m))
    }

    fn delta_omega(&self) -> f64 {
        self.field.delta_omega_rad_per_s.unwrap_or(self.field.bandwidth_fraction * self.omega_c())
    }

    pub fn zeta(&self) -> Complex64 {
        Complex64::new(self.field.zeta_re, self.field.zeta_im)
    }

    pub fn field_spec(&self) -> Result<FieldPairSpec> {
        let f = &self.field;
        Ok(FieldPairSpec::new(self.omega_c(), self.delta_omega(), f.n_occ, self.zeta(), f.tau_s, f.mode_count, f.waist_m)?)
    }

    pub fn atom_params(&self) -> Result<AtomCavityParams> {
        let spec = self.field_spec()?;
        let a = &self.atom;
        let delta = a.delta_rad_per_s.unwrap_or(a.detuning_over_bandwidth * spec.delta_omega());
        let delta_l = a.delta_l_rad_per_s.unwrap_or(a.control_detuning_ratio * delta);
        let inputs = AtomCavityInputs {
            d02: a.d02_c_m,
            d12: a.d12_c_m,
            delta,
            delta_l,
            finesse: a.finesse,
            n0: a.n0_per_m3,
            lambda: self.field.wavelength_m,
        };
        Ok(AtomCavityParams::new(inputs, &spec)?)
    }

    pub fn budget_params(&self) -> Result<BudgetParams> {
        Ok(BudgetParams::from_models(&self.field_spec()?, &self.atom_params()?))
    }

    pub fn balance_config(&self) -> BalanceConfig {
        let b = &self.balance;
        BalanceConfig {
            gain0: b.gain0,
            gain_k0: b.gain_k0,
            max_iter: b.max_iter,
            min_iter: b.min_iter,
            tol: b.tol,
            smoothing: b.smoothing,
            atoms: b.atoms,
            interaction_time: b.interaction_time_s,
            prior_bound: b.prior_bound_w_per_m2,
            noise: NoiseSwitches { atom_shot: b.atom_noise, photon: b.photon_noise },
        }
    }

    /// Initial control setting: beams producing the configured `Ω₁`.
    pub fn control(&self) -> Result<ControlSetting> {
        let atom = self.atom_params()?;
        let b = &self.balance;
        let dark = ControlSetting::dark(
            Complex64::new(b.control_g02_rad_per_s, 0.0),
            Complex64::new(b.control_g12_rad_per_s, 0.0),
            atom.delta_l(),
        );
        let init = Complex64::new(b.omega1_init_re_rad_per_s, b.omega1_init_im_rad_per_s);
        if init.norm() == 0.0 {
            return Ok(dark);
        }
        Ok(dark.synthesize(init, (0.0, 0.0))?)
    }

    /// Applies `key=value` overrides to the parsed file.
    pub fn with_overrides(&self, sets: &[String]) -> Result<Self> {
        if sets.is_empty() {
            return Ok(self.clone());
        }
        let mut doc: toml::Table = toml::from_str(&self.to_toml()?)?;
        for s in sets {
            let Some((key, value)) = s.split_once('=') else { bail!("override `{s}` is not key=value") };
            let value: toml::Value = match toml::from_str::<toml::Table>(&format!("v = {value}")) {
                Ok(mut t) => t.remove("v").expect("parsed key"),
                Err(_) => toml::Value::String(value.to_string()),
            };
            let mut parts: Vec<&str> = key.trim().split('.').collect();
            let leaf = parts.pop().expect("split yields one part");
            let mut table = &mut doc;
            for p in parts {
                table = table
                    .entry(p)
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                    .as_table_mut()
                    .with_context(|| format!("`{p}` is not a table"))?;
            }
            table.insert(leaf.to_string(), value);
        }
        Ok(toml::from_str(&toml::to_string(&doc)?)?)
    }
}
