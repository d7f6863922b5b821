use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use coherence::config::ScenarioConfig;
use coherence::run;
use coherence::validate::{run_checks, DEFAULT_PROPAGATOR};

#[derive(Parser)]
#[command(name = "coherence", version, about = "Mutual-coherence estimation by atomic balancing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the noise budget and Q_mc over the (n, |ζ|, n_T) grid.
    Sweep(Common),
    /// Run one balance loop and write its trace.
    Balance(Common),
    /// Repeat the balance loop and the classical baseline.
    Montecarlo(Common),
    /// Run the internal consistency checks.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Scales every statistical check's sample count.
        #[arg(long)]
        sample_budget: Option<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Override a configuration key, e.g. `--set field.n_occ=10`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

impl Common {
    fn load(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(p) => ScenarioConfig::load(p)?,
            None => ScenarioConfig::default(),
        };
        cfg = cfg.with_overrides(&self.sets)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.resolved()
    }
}

fn prepare(common: &Common) -> Result<(ScenarioConfig, rayon::ThreadPool)> {
    let cfg = common.load()?;
    std::fs::create_dir_all(&common.out)
        .with_context(|| format!("creating output directory {}", common.out.display()))?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(common.threads).build()?;
    Ok((cfg, pool))
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Sweep(c) => {
            let (cfg, pool) = prepare(&c)?;
            print!("{}", run::echo_config(&cfg, &c.out)?);
            let points = pool.install(|| run::run_sweep(&cfg, &c.out))?;
            let failed = points.iter().filter(|p| p.budget.is_err()).count();
            println!("{} grid points written to {}", points.len(), path(&c.out, run::SWEEP_FILE));
            if failed > 0 {
                println!("{failed} points could not be evaluated");
            }
            Ok(true)
        }
        Command::Balance(c) => {
            let (cfg, pool) = prepare(&c)?;
            print!("{}", run::echo_config(&cfg, &c.out)?);
            let o = pool.install(|| run::run_balance(&cfg, &c.out))?;
            let r = &o.result;
            println!(
                "gamma12_estimate = {:.6e} {:+.6e}i  (true {:.6e} {:+.6e}i)",
                r.gamma12_estimate.re, r.gamma12_estimate.im, o.truth.re, o.truth.im
            );
            println!("iterations = {}  converged = {}  T = {:.6e} s", r.iterations, r.converged, r.interaction_time);
            if r.small_angle_warnings > 0 {
                println!("warning: interaction time halved {} times", r.small_angle_warnings);
            }
            Ok(true)
        }
        Command::Montecarlo(c) => {
            let (cfg, pool) = prepare(&c)?;
            print!("{}", run::echo_config(&cfg, &c.out)?);
            let report = pool.install(|| run::run_montecarlo(&cfg, &c.out))?;
            print!("{}", report.text);
            Ok(true)
        }
        Command::Validate { common, sample_budget } => {
            let (mut cfg, pool) = prepare(&common)?;
            if let Some(b) = sample_budget {
                anyhow::ensure!(b > 0.0 && b.is_finite(), "--sample-budget must be positive");
                cfg.validate.sample_budget = b;
            }
            print!("{}", run::echo_config(&cfg, &common.out)?);
            let report = pool.install(|| run_checks(&cfg, DEFAULT_PROPAGATOR))?;
            let table = report.table();
            print!("{table}");
            coherence::output::write_text(&common.out.join("validate.txt"), &table)?;
            Ok(report.all_passed())
        }
    }
}

fn path(dir: &Path, file: &str) -> String {
    dir.join(file).display().to_string()
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
