//! `mblmem`: Holevo-rate sweeps and finite-size-scaling collapses.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use mbl_memory::config::{BetaMode, Ratio, SweepConfig};
use mbl_memory::io::{self, RunManifest};
use mbl_memory::scaling::{analyze, FitReport, ScalingDataset};
use mbl_memory::sweep::{jobs, run_sweep_with, SweepOutput};
use mbl_memory::{EnvironmentKind, Error};

const EXIT_ANALYSIS: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_FAILURES: u8 = 3;

#[derive(Parser)]
#[command(
    name = "mblmem",
    version,
    about = "Local memory in disordered Heisenberg rings via the Holevo rate",
    after_help = "Exit codes: 0 success, 1 analysis error, 2 configuration error, \
                  3 too many failed realizations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Disorder-averaged R(t) for every (L, environment, h) in the config
    Trace(RunArgs),
    /// Per-realization results and steady-state aggregate table
    Sweep(RunArgs),
    /// Crossing analysis and data collapse of an aggregate table
    Collapse(CollapseArgs),
    /// Parse and validate a config file, then print its canonical form
    ValidateConfig {
        /// Sweep configuration (TOML)
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Sweep configuration (TOML)
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Directory for the output tables and manifest
    #[arg(long, value_name = "DIR", default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    threads: Option<usize>,
    /// Override the master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the ring lengths, e.g. 6,9,12
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// Override the message ratio l/L, e.g. 1/3
    #[arg(long)]
    ratio: Option<Ratio>,
    /// Override the environments: neel, evolved, eigenstate
    #[arg(long, value_delimiter = ',')]
    env: Option<Vec<EnvironmentKind>>,
}

#[derive(Args)]
struct CollapseArgs {
    /// aggregate.csv written by `sweep`
    aggregate: PathBuf,
    /// Config whose [analysis] section sets the fit options
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Directory for the fit report and collapsed points
    #[arg(long, value_name = "DIR", default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    threads: Option<usize>,
    /// Override the bootstrap seed
    #[arg(long)]
    seed: Option<u64>,
    /// Only use these ring lengths
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// Message ratio to analyse (required if the table holds several)
    #[arg(long)]
    ratio: Option<Ratio>,
    /// Environment to analyse (required if the table holds several)
    #[arg(long)]
    env: Option<EnvironmentKind>,
    /// Which fit to headline: free or pinned
    #[arg(long)]
    beta_mode: Option<BetaMode>,
}

/// Error carrying the process exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn config(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_CONFIG,
            error: error.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) => EXIT_CONFIG,
            _ => EXIT_ANALYSIS,
        };
        Self { code, error: e.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Self {
            code: EXIT_ANALYSIS,
            error,
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Trace(args) => run(args, "trace"),
        Command::Sweep(args) => run(args, "sweep"),
        Command::Collapse(args) => collapse(args),
        Command::ValidateConfig { config } => validate(&config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(path: &Path) -> Result<SweepConfig, Failure> {
    SweepConfig::load(path).map_err(Failure::config)
}

fn validate(path: &Path) -> CmdResult {
    let config = load_config(path)?;
    println!("# config hash {}", config.hash());
    print!("{}", config.to_toml_string());
    Ok(())
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, Failure> {
    if threads == Some(0) {
        return Err(Failure::config(anyhow::anyhow!("--threads must be at least 1")));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .context("cannot start worker threads")
        .map_err(Failure::from)
}

fn apply_overrides(config: &mut SweepConfig, args: &RunArgs) -> Result<(), Failure> {
    if let Some(seed) = args.seed {
        config.sampling.seed = seed;
    }
    if let Some(sizes) = &args.sizes {
        config.physics.sizes = sizes.clone();
    }
    if let Some(ratio) = args.ratio {
        config.physics.ratio = ratio;
    }
    if let Some(env) = &args.env {
        config.physics.environments = env.clone();
    }
    config.validate().map_err(Failure::from)
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory `{}`", dir.display()))
        .map_err(Failure::from)
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn command_line() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn run(args: RunArgs, command: &str) -> CmdResult {
    let started = io::unix_now();
    let mut config = load_config(&args.config)?;
    apply_overrides(&mut config, &args)?;
    let pool = thread_pool(args.threads)?;
    create_dir(&args.out_dir)?;

    let total = jobs(&config).len();
    let done = AtomicUsize::new(0);
    let step = (total / 20).max(1);
    eprintln!(
        "{command}: {total} realizations on {} threads (config {})",
        pool.current_num_threads(),
        config.hash()
    );
    let output: SweepOutput = pool.install(|| {
        run_sweep_with(&config, |outcome| {
            if let Err(f) = outcome {
                eprintln!(
                    "warning: L = {} h = {} {} realization {} failed: {}",
                    f.job.size, f.job.disorder, f.job.environment, f.job.key.realization, f.message
                );
            }
            let n = done.fetch_add(1, Ordering::Relaxed) + 1;
            if n.is_multiple_of(step) || n == total {
                eprintln!("  {n}/{total}");
            }
        })
    })?;

    let dir = &args.out_dir;
    let mut outputs = Vec::new();
    let config_path = dir.join("config.json");
    io::write_config_json(&config_path, &config)?;
    outputs.push(file_name(&config_path));
    if command == "trace" {
        for trace in output.averaged_traces() {
            let path = dir.join(io::trace_file_name(&trace));
            io::write_trace(&path, &output.config_hash, &trace)?;
            outputs.push(file_name(&path));
        }
    } else {
        for path in io::write_results(dir, &output)? {
            outputs.push(file_name(&path));
        }
        let path = dir.join("aggregate.csv");
        io::write_aggregate(&path, &output.config_hash, &output.aggregate())?;
        outputs.push(file_name(&path));
    }
    let mut manifest = RunManifest::new(&command_line(), &output.config_hash, started);
    manifest.outputs = outputs;
    manifest.finished_unix = io::unix_now();
    manifest.write(&dir.join("manifest.json"))?;

    let failed = output.failures().count();
    let fraction = output.failure_fraction();
    if fraction > config.sampling.max_failure_fraction {
        return Err(Failure {
            code: EXIT_FAILURES,
            error: anyhow::anyhow!(
                "{failed} of {total} realizations failed ({:.1}%), above the {:.1}% threshold",
                100.0 * fraction,
                100.0 * config.sampling.max_failure_fraction
            ),
        });
    }
    if failed > 0 {
        eprintln!("{failed} of {total} realizations failed; continuing");
    }
    Ok(())
}

fn only<T: Copy + PartialEq + std::fmt::Display>(values: &[T], what: &str, flag: &str) -> Result<T, Failure> {
    let mut distinct: Vec<T> = Vec::new();
    for &v in values {
        if !distinct.contains(&v) {
            distinct.push(v);
        }
    }
    match distinct.as_slice() {
        [one] => Ok(*one),
        [] => Err(Error::Analysis(format!("the aggregate table holds no {what}")).into()),
        many => Err(Failure::config(anyhow::anyhow!(
            "the aggregate table holds several {what}s ({}); choose one with {flag}",
            many.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
        ))),
    }
}

fn collapse(args: CollapseArgs) -> CmdResult {
    let started = io::unix_now();
    let mut analysis = match &args.config {
        Some(path) => load_config(path)?.analysis,
        None => Default::default(),
    };
    if let Some(seed) = args.seed {
        analysis.seed = seed;
    }
    if let Some(mode) = args.beta_mode {
        analysis.beta_mode = mode;
    }
    let pool = thread_pool(args.threads)?;
    let mut records =
        io::read_aggregate(&args.aggregate).with_context(|| format!("cannot read `{}`", args.aggregate.display()))?;
    if let Some(sizes) = &args.sizes {
        records.retain(|r| sizes.contains(&r.size));
    }
    let env = match args.env {
        Some(e) => e,
        None => only(
            &records.iter().map(|r| r.environment).collect::<Vec<_>>(),
            "environment",
            "--env",
        )?,
    };
    let ratio = match args.ratio {
        Some(r) => r,
        None => {
            let ratios = records
                .iter()
                .filter(|r| r.environment == env)
                .map(|r| Ratio::of(r.message_sites, r.size))
                .collect::<Result<Vec<_>, _>>()?;
            only(&ratios, "ratio", "--ratio")?
        }
    };
    let dataset = ScalingDataset::from_records(&records, env, ratio)?;
    let mut report: FitReport = pool.install(|| analyze(&dataset, &analysis))?;
    report.environment = Some(env);
    report.ratio = Some(ratio);

    create_dir(&args.out_dir)?;
    let dir = &args.out_dir;
    let stem = format!("collapse_{env}_{}", ratio.to_string().replace('/', "-"));
    let report_path = dir.join(format!("{stem}.json"));
    let mut text = serde_json::to_string_pretty(&report).context("cannot encode the fit report")?;
    text.push('\n');
    std::fs::write(&report_path, text).with_context(|| format!("cannot write `{}`", report_path.display()))?;
    let table_path = dir.join(format!("{stem}_points.csv"));
    write_collapsed(&table_path, &report).with_context(|| format!("cannot write `{}`", table_path.display()))?;

    let fit = report.selected_fit();
    println!(
        "{env} l/L = {ratio}: crossing h = {:.3} ± {:.3}; collapse ({} β) h_c = {:.3} ± {:.3}, ν = {:.3} ± {:.3}, β = {:.3} ± {:.3}, quality {:.3}",
        report.crossings.mean,
        report.crossings.spread,
        fit.beta_mode,
        fit.h_c,
        fit.h_c_stderr,
        fit.nu,
        fit.nu_stderr,
        fit.beta,
        fit.beta_stderr,
        fit.quality,
    );
    for (name, flagged) in [
        ("h_c", fit.h_c_at_bound),
        ("ν", fit.nu_at_bound),
        ("β", fit.beta_at_bound),
    ] {
        if flagged {
            eprintln!("warning: {name} stopped at a search bound");
        }
    }

    let config_hash = args
        .config
        .as_deref()
        .map(load_config)
        .transpose()?
        .map(|c| c.hash())
        .unwrap_or_default();
    let mut manifest = RunManifest::new(&command_line(), &config_hash, started);
    manifest.outputs = vec![file_name(&report_path), file_name(&table_path)];
    manifest.finished_unix = io::unix_now();
    manifest.write(&dir.join("manifest.json"))?;
    Ok(())
}

fn write_collapsed(path: &Path, report: &FitReport) -> std::io::Result<()> {
    use std::fmt::Write as _;
    let mut text = String::from("beta_mode,size,disorder,x,y,dy\n");
    for fit in [&report.free, &report.pinned] {
        for p in &fit.collapsed {
            writeln!(
                text,
                "{},{},{},{},{},{}",
                fit.beta_mode, p.size, p.disorder, p.x, p.y, p.dy
            )
            .expect("writing to a String");
        }
    }
    std::fs::write(path, text)
}
