use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fracmhd::checks::{bernstein_suite, diffusion_suite, lp_suite};
use fracmhd::config::RunConfig;
use fracmhd::diagnostics::boundedness_report;
use fracmhd::error::{Error, Result};
use fracmhd::ranges::validate_ranges;
use fracmhd::run::{config_for_checkpoint, resume, run, sweep, MANIFEST_FILE, SERIES_FILE};
use fracmhd::series::read_series;

/// Pseudospectral 2D MHD with fractional magnetic diffusion.
#[derive(Parser)]
#[command(name = "fracmhd", version)]
struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Key-value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override a key, e.g. `--set beta=1.25`. Repeatable; applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Output directory (same as `--set output_dir=...`).
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self, fallback: Option<&Path>) -> Result<RunConfig> {
        let mut cfg = match self.config.as_deref().or(fallback) {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        cfg.apply_overrides(&self.overrides)?;
        if let Some(d) = &self.output_dir {
            cfg.output_dir = d.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Integrate from t = 0 to t_end.
    Run(ConfigArgs),
    /// Continue a run from a checkpoint.
    Resume {
        /// Checkpoint file to restart from.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Resume even if the configuration digest differs.
        #[arg(long)]
        force: bool,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// One run per beta, in `beta_<beta>` subdirectories, plus a manifest.
    Sweep {
        /// Comma-separated beta values.
        #[arg(long, value_delimiter = ',', required = true)]
        betas: Vec<f64>,
        /// Concurrent workers.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Partition of unity and shell reconstruction.
    CheckLp {
        /// Grid sizes, comma-separated.
        #[arg(long, value_delimiter = ',', default_value = "64")]
        n: Vec<usize>,
        /// Random fields reconstructed per grid.
        #[arg(long, default_value_t = 20)]
        fields: usize,
        /// Seed for the random test fields.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Bernstein envelopes and the shell-wise diffusion lower bound.
    CheckBernstein {
        /// Grid size.
        #[arg(long, default_value_t = 64)]
        n: usize,
        /// Random fields per shell check.
        #[arg(long, default_value_t = 50)]
        trials: usize,
        /// Derivative orders, comma-separated.
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,1.25")]
        alphas: Vec<f64>,
        /// Beta for the diffusion lower bound.
        #[arg(long, default_value_t = 1.5)]
        beta: f64,
        /// Seed for the random test fields.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Admissibility table for diagnostic exponents.
    CheckRanges {
        #[arg(long)]
        beta: f64,
        /// Lebesgue exponents.
        #[arg(long, value_delimiter = ',')]
        q: Vec<f64>,
        /// Besov regularity indices.
        #[arg(long, value_delimiter = ',')]
        s: Vec<f64>,
        /// Exponents for the time integrals.
        #[arg(long, value_delimiter = ',')]
        r: Vec<f64>,
    },
    /// Boundedness summary of a series file (or run directory).
    Report {
        /// Series file (CSV or NDJSON) or a run directory.
        #[arg(long)]
        series: PathBuf,
    },
}

fn property(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Property(what.into()))
    }
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.load(None)?;
            let s = run(&cfg)?;
            println!("completed: {} rows, t = {}, output in {}", s.rows, s.t_final, s.output_dir.display());
        }
        Command::Resume { checkpoint, force, cfg } => {
            let found = config_for_checkpoint(&checkpoint);
            if cfg.config.is_none() && found.is_none() {
                return Err(Error::Config(format!("no config.txt next to {}; pass --config", checkpoint.display())));
            }
            let mut config = cfg.load(found.as_deref())?;
            if cfg.output_dir.is_none() && !cfg.overrides.iter().any(|o| o.trim_start().starts_with("output_dir")) {
                if let Some(dir) = found.as_deref().and_then(Path::parent) {
                    config.output_dir = dir.to_path_buf();
                }
            }
            let s = resume(&config, &checkpoint, force)?;
            println!("completed: {} rows, t = {}, output in {}", s.rows, s.t_final, s.output_dir.display());
        }
        Command::Sweep { betas, jobs, cfg } => {
            let base = cfg.load(None)?;
            let m = sweep(&base, &betas, jobs)?;
            for r in &m.runs {
                println!("beta = {:<8} {:<10} {}", r.beta, r.status, r.message.as_deref().unwrap_or(""));
            }
            println!("manifest: {}", base.output_dir.join(MANIFEST_FILE).display());
            return Ok(m.exit_code());
        }
        Command::CheckLp { n, fields, seed } => {
            let r = lp_suite(&n, fields, seed)?;
            print!("{r}");
            property(r.passed(), "Littlewood-Paley partition or reconstruction out of tolerance")?;
        }
        Command::CheckBernstein { n, trials, alphas, beta, seed } => {
            let r = bernstein_suite(n, trials, &alphas, &[(2.0, 2.0), (2.0, f64::INFINITY)], seed)?;
            print!("{r}");
            let d2 = diffusion_suite(n, beta, 2.0, trials, seed)?;
            let d4 = diffusion_suite(n, beta, 4.0, trials, seed)?;
            print!("{d2}{d4}");
            property(r.passed(), "Bernstein envelope violated")?;
            property(d2.passed() && d4.passed(), "diffusion lower bound violated")?;
        }
        Command::CheckRanges { beta, q, s, r } => {
            let report = validate_ranges(beta, &q, &s, &r);
            print!("{report}");
            property(report.all_admissible(), "inadmissible exponent")?;
        }
        Command::Report { series } => {
            let path = if series.is_dir() { series.join(SERIES_FILE) } else { series };
            let s = read_series(&path)?;
            let report = boundedness_report(&s.columns, &s.rows)?;
            print!("{report}");
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
