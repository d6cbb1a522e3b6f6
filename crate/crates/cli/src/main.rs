use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pepdg::cases::{CaseKind, CaseSpec};
use pepdg::diagnostics::auxiliary_vector_error;
use pepdg::runner::{run_case, run_sweep, RunConfig, SweepAxis};
use pepdg::scheme::SchemeKind;

#[derive(Parser)]
#[command(name = "pepdg", version, about = "1D multicomponent Euler DG solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single simulation.
    Run(RunArgs),
    /// Run a grid, time-step or scheme sweep.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated sweep values (element counts, time steps or schemes).
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Randomized consistency check of the thermodynamic derivatives.
    Check {
        #[arg(long, default_value = "bubble-600")]
        case: String,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        thermo: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Grid,
    Timestep,
    Scheme,
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    scheme: Option<SchemeKind>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long)]
    cfl: Option<f64>,
    /// Fixed time step (seconds for the real-gas cases).
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    periods: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    thermo: Option<PathBuf>,
    /// Accepted for symmetry with `check`; runs are deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p).with_context(|| format!("reading {}", p.display()))?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.case {
            cfg.case = v.clone();
        }
        if let Some(v) = self.scheme {
            cfg.scheme = v;
        }
        if self.p.is_some() {
            cfg.p = self.p;
        }
        if self.n.is_some() {
            cfg.n = self.n;
        }
        if self.cfl.is_some() {
            cfg.cfl = self.cfl;
            cfg.dt = None;
        }
        if self.dt.is_some() {
            cfg.dt = self.dt;
            cfg.cfl = None;
        }
        if self.periods.is_some() {
            cfg.periods = self.periods;
            cfg.t_end = None;
        }
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        if self.thermo.is_some() {
            cfg.thermo = self.thermo.clone();
        }
        Ok(cfg)
    }
}

fn check(case: &str, samples: usize, seed: u64, tol: f64, thermo: Option<PathBuf>) -> Result<bool> {
    let kind: CaseKind = case.parse()?;
    let spec = CaseSpec::new(kind);
    let gas = spec.gas(thermo.as_deref())?;
    let (lo, hi) = gas.temperature_bounds();
    let (t_lo, t_hi) = if kind == CaseKind::Gaussian || kind == CaseKind::Mms {
        (0.1, 10.0)
    } else {
        (lo.max(300.0 / 298.15), hi.min(3000.0 / 298.15))
    };
    let p0 = spec.p0_model();
    let v_scale = if spec.v0_model() != 0.0 { spec.v0_model() } else { 1.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ns = gas.n_species();
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let t = rng.gen_range(t_lo..t_hi);
        let p = p0 * rng.gen_range(0.5..2.0);
        let mut y: Vec<f64> = (0..ns).map(|_| rng.gen_range(0.01..1.0)).collect();
        let s: f64 = y.iter().sum();
        y.iter_mut().for_each(|v| *v /= s);
        let w = gas.molar_masses();
        let inv_w: f64 = y.iter().zip(w).map(|(y, w)| y / w).sum();
        let rho = p / (gas.r0() * t * inv_w);
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let v = sign * v_scale * rng.gen_range(0.1..3.0);
        let mut state = vec![rho * v, p];
        state.extend(y.iter().zip(w).map(|(y, w)| rho * y / w));
        worst = worst.max(auxiliary_vector_error(&gas, &state)?);
    }
    println!("max relative error over {samples} states: {worst:.3e} (tolerance {tol:.1e})");
    Ok(worst <= tol)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn real_main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let cfg = args.config()?;
            info!("running {} with {}", cfg.case, cfg.scheme);
            let r = run_case(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&r.to_json())?);
            Ok(ExitCode::from(if r.diverged { 2 } else { 0 }))
        }
        Command::Sweep { run, axis, values } => {
            let cfg = run.config()?;
            let axis = match axis {
                Axis::Grid => SweepAxis::Grid,
                Axis::Timestep => SweepAxis::Timestep,
                Axis::Scheme => SweepAxis::Scheme,
            };
            let s = run_sweep(&cfg, axis, &values)?;
            println!("value,size,error,status");
            for p in &s.points {
                let f = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:e}"));
                println!("{},{},{},{}", p.value, f(p.size), f(p.error), p.report.status());
            }
            if let Some(r) = s.mean_rate() {
                println!("rates: {:?} (mean {r:.3})", s.rates);
            }
            let any_diverged = s.points.iter().any(|p| p.report.diverged);
            Ok(ExitCode::from(if any_diverged { 2 } else { 0 }))
        }
        Command::Check {
            case,
            samples,
            seed,
            tol,
            thermo,
        } => {
            if samples == 0 {
                bail!("--samples must be positive");
            }
            let ok = check(&case, samples, seed, tol, thermo)?;
            Ok(ExitCode::from(if ok { 0 } else { 2 }))
        }
    }
}
