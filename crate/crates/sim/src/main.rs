use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::Utc;
use clap::{Args, Parser, Subcommand};
use kmt_sim::config::Config;
use kmt_sim::error::{Result, SimError};
use kmt_sim::{output, report, runner, validate};

/// Environment variable that overrides `--workers`.
const WORKERS_ENV: &str = "KMT_WORKERS";

#[derive(Parser)]
#[command(name = "kmt", version, about = "Dyadic Gaussian coupling of independent sums: validation, Monte Carlo runs and reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the hypotheses of a config: exponential-moment constant, variance band, blocking size.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run one experiment and write summary, CSVs and manifest.
    Run(RunArgs),
    /// Render tables from a results directory written by `run` or `sweep`.
    Report {
        /// Results directory.
        dir: PathBuf,
    },
    /// Run the same config at several `n` and fit growth exponents.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated sample sizes.
        #[arg(long, value_delimiter = ',', default_value = "64,256,1024")]
        n: Vec<usize>,
        /// Do not rerun failing points at doubled R.
        #[arg(long)]
        no_confirm: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: available parallelism). KMT_WORKERS overrides.
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides `experiment.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Keep level states for identity and node diagnostics.
    #[arg(long)]
    retain_levels: bool,
}

fn workers(flag: Option<usize>) -> Result<usize> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        return v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&w| w > 0)
            .ok_or_else(|| SimError::Invalid(format!("{WORKERS_ENV}: not a positive integer: '{v}'")));
    }
    match flag {
        Some(0) => Err(SimError::Invalid("--workers must be positive".into())),
        Some(w) => Ok(w),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| SimError::Run(e.to_string()))?;
    Ok(pool.install(f))
}

fn load(args: &RunArgs) -> Result<(Config, PathBuf)> {
    let mut config = Config::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.experiment.seed = seed;
    }
    if args.retain_levels {
        config.experiment.retain_levels = true;
    }
    let out = args.out.clone().or_else(|| config.output.dir.clone()).ok_or_else(|| SimError::Config {
        path: args.config.clone(),
        message: "no output directory: pass --out or set output.dir".into(),
    })?;
    Ok((config, out))
}

fn cmd_validate(path: &Path) -> Result<i32> {
    let config = Config::load(path)?;
    let v = validate::validate(&config)?;
    print!("{}", v.render());
    Ok(v.exit_code())
}

fn cmd_run(args: &RunArgs) -> Result<i32> {
    let (config, out) = load(args)?;
    let workers = workers(args.workers)?;
    output::create_dir(&out)?;
    let started = Utc::now();
    let outcome = in_pool(workers, || runner::execute(&config))??;
    let files = output::write_outcome(&out, &outcome)?;
    let v = &outcome.summary.verdict;
    output::write_manifest(
        &out,
        Some(&args.config),
        &config.hash(),
        config.experiment.seed,
        workers,
        started,
        &files,
        (v.status, v.failed.clone(), v.exit_code),
    )?;
    print!("{}", report::render_summary(&outcome.summary));
    Ok(v.exit_code)
}

fn cmd_sweep(args: &RunArgs, ns: &[usize], confirm: bool) -> Result<i32> {
    let (config, out) = load(args)?;
    let workers = workers(args.workers)?;
    output::create_dir(&out)?;
    let started = Utc::now();
    let mut points = Vec::new();
    let mut files = Vec::new();
    for &n in ns {
        let c = runner::at_n(&config, n);
        let point_started = Utc::now();
        let (outcome, point) = in_pool(workers, || runner::sweep_point(&c, confirm))??;
        let sub = out.join(format!("n{n}"));
        let written = output::write_outcome(&sub, &outcome)?;
        let v = &outcome.summary.verdict;
        output::write_manifest(
            &sub,
            Some(&args.config),
            &c.hash(),
            c.experiment.seed,
            workers,
            point_started,
            &written,
            (v.status, v.failed.clone(), v.exit_code),
        )?;
        files.extend(written.iter().map(|f| format!("n{n}/{f}")));
        files.push(format!("n{n}/{}", output::MANIFEST));
        eprintln!("n = {n}: median max |S_n(f)| = {:.4}", point.median_battery_max);
        points.push(point);
    }
    let sweep = runner::sweep_summary(points);
    files.insert(0, output::write_sweep(&out, &sweep)?);
    let code = if sweep.status.failed() { 1 } else { 0 };
    let failed = if code == 0 { Vec::new() } else { vec!["sweep".to_string()] };
    output::write_manifest(
        &out,
        Some(&args.config),
        &config.hash(),
        config.experiment.seed,
        workers,
        started,
        &files,
        (sweep.status, failed, code),
    )?;
    print!("{}", report::render_sweep(&sweep));
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate { config } => cmd_validate(config),
        Command::Run(args) => cmd_run(args),
        Command::Report { dir } => report::report(dir).map(|text| {
            print!("{text}");
            0
        }),
        Command::Sweep { run, n, no_confirm } => cmd_sweep(run, n, !no_confirm),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
