//! Batch experiment runner: reads a JSON config, runs one experiment
//! class, and writes CSV/SVG artifacts plus a JSON manifest.
//!
//! Exit codes: 0 success, 1 configuration failure, 2 numeric failure,
//! 3 resource cap exceeded. Errors are emitted as machine-readable JSON
//! on stderr.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use latticeq::error::Error;

#[derive(Parser)]
#[command(
    name = "latticeq",
    about = "Lattice Schrödinger laboratory: transport moments, Green's functions, \
             trimmed-model eigenfunctions, and inequality checks",
    after_help = "CSV columns per subcommand:\n\
  spectrum  index,eigenvalue (dense) or bound,value (window)\n\
  evolve    per snapshot: n1..nd,prob\n\
  moments   T,value,quad_err,model_err,route (one file per route)\n\
  green     n1..nd,re,im,abs\n\
  eigenfun  L,shell_sum,weighted_sum,threshold\n\
  ct-check  dist,max_abs_g,threshold\n\
  borel     gamma,alpha,eps,window_radius,im_g,lhs_factor,rhs_factor,margin,ok\n\
  contrast  model,realization,slope,fit_residual\n\
  certify   eps,lhs,rhs,window_radius,s_boundary,s_gate_ok,ok"
)]
struct Cli {
    /// JSON experiment configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides output.dir from the config)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: LATTICEQ_THREADS or all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override the base RNG seed (model.potential.seed)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Config override as dotted.path=json_value (repeatable)
    #[arg(long = "override", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Dense spectrum or rigorous spectral window of the model
    Spectrum,
    /// Snapshots of |psi_t|^2 for delta-function initial data
    Evolve,
    /// Transport moments over the T grid via the selected route(s)
    Moments,
    /// One Green's-function column at a complex shift
    Green,
    /// Construct a generalized eigenfunction, validate it, and profile its growth
    Eigenfun,
    /// Exponential-decay check of an off-spectrum Green's column
    CtCheck,
    /// Borel scaling product inequality over a (gamma, alpha, eps) grid
    Borel,
    /// Transport-exponent contrast between a trimmed model and a disordered reference
    Contrast,
    /// Delocalization certificate vs measured weighted resolvent sums
    Certify,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Evolve => "evolve",
            Command::Moments => "moments",
            Command::Green => "green",
            Command::Eigenfun => "eigenfun",
            Command::CtCheck => "ct-check",
            Command::Borel => "borel",
            Command::Contrast => "contrast",
            Command::Certify => "certify",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let payload = serde_json::json!({
                "exit": err.exit_class(),
                "kind": match err.exit_class() {
                    1 => "config",
                    2 => "numeric",
                    _ => "resource",
                },
                "message": err.to_string(),
            });
            eprintln!("{payload}");
            ExitCode::from(err.exit_class() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let threads = cli
        .threads
        .or_else(|| {
            std::env::var("LATTICEQ_THREADS")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .unwrap_or(0);
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    }

    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::config("missing required flag: --config <path>"))?;
    let mut overrides: Vec<(String, String)> = Vec::new();
    for ov in &cli.overrides {
        let (k, v) = ov
            .split_once('=')
            .ok_or_else(|| Error::config(format!("override {ov:?} is not key=value")))?;
        overrides.push((k.to_string(), v.to_string()));
    }
    if let Some(seed) = cli.seed {
        overrides.push(("model.potential.seed".to_string(), seed.to_string()));
    }
    let mut cfg = ExperimentConfig::load(config_path, &overrides)?;
    if let Some(out) = &cli.out {
        cfg.output.dir = Some(out.clone());
    }
    let out_dir = cfg
        .output
        .dir
        .clone()
        .ok_or_else(|| Error::config("missing output directory: set output.dir or --out"))?;
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| Error::config(format!("cannot create {}: {e}", out_dir.display())))?;

    let threads_resolved = if threads > 0 {
        threads
    } else {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    };
    commands::dispatch(cli.command.name(), &cfg, &out_dir, threads_resolved)
}
