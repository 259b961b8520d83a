use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use formation_core::config::{ScenarioFile, DEMO_CONFIG};
use formation_core::sim::{write_metrics, write_trace_csv, Comparison, RunOutput};
use formation_core::{
    compare_variants, load_config, load_config_str, run_with, ConfigError, LoadedConfig, Overrides,
    Parallelism, SimError, Variant,
};

/// Leader-follower formation simulator.
#[derive(Debug, Parser)]
#[command(name = "formation", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one controller variant; writes trace.csv and metrics.txt.
    Run(RunArgs),
    /// Simulate all four variants; writes report.csv plus per-variant traces and metrics.
    Compare(RunArgs),
    /// Check a scenario and print it with every default filled in.
    Validate(ValidateArgs),
    /// Compare the variants on the built-in three-follower scenario.
    Demo(DemoArgs),
}

#[derive(Debug, Args)]
struct OverrideArgs {
    /// Integration step in seconds.
    #[arg(long)]
    dt: Option<f64>,
    /// Simulated time in seconds.
    #[arg(long)]
    horizon: Option<f64>,
    /// backstepping, bioinspired, backstepping+learning or bioinspired+learning.
    #[arg(long)]
    variant: Option<Variant>,
    /// Log every N-th step.
    #[arg(long)]
    decimation: Option<usize>,
}

impl OverrideArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            dt: self.dt,
            horizon: self.horizon,
            variant: self.variant,
            decimation: self.decimation,
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Scenario file (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, short, default_value = "out")]
    out: PathBuf,
    /// Disable multi-threading.
    #[arg(long)]
    sequential: bool,
    #[command(flatten)]
    overrides: OverrideArgs,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long, short)]
    config: PathBuf,
    #[command(flatten)]
    overrides: OverrideArgs,
}

#[derive(Debug, Args)]
struct DemoArgs {
    #[arg(long, short, default_value = "demo-out")]
    out: PathBuf,
    #[arg(long)]
    sequential: bool,
    #[command(flatten)]
    overrides: OverrideArgs,
}

#[derive(Debug)]
enum Failure {
    Config(ConfigError),
    Sim(SimError),
    Output { path: PathBuf, source: io::Error },
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Sim(SimError::InvalidConfig(_)) => 1,
            Failure::Sim(_) | Failure::Output { .. } => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "{e}"),
            Failure::Sim(e) => write!(f, "simulation failed: {e}"),
            Failure::Output { path, source } => write!(f, "cannot write {}: {source}", path.display()),
        }
    }
}

/// Files written so far; removed again if the command fails.
struct Outputs {
    dir: PathBuf,
    created_dir: bool,
    written: Vec<PathBuf>,
}

impl Outputs {
    fn create(dir: &Path) -> Result<Self, Failure> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).map_err(|source| Failure::Output {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            created_dir,
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, fill: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<(), Failure> {
        let path = self.dir.join(name);
        self.written.push(path.clone());
        let result = File::create(&path).and_then(|file| {
            let mut w = BufWriter::new(file);
            fill(&mut w)?;
            w.flush()
        });
        result.map_err(|source| Failure::Output { path, source })
    }

    fn discard(self) {
        for path in &self.written {
            let _ = fs::remove_file(path);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

fn parallelism(sequential: bool) -> Parallelism {
    if sequential {
        Parallelism::Sequential
    } else {
        Parallelism::default()
    }
}

fn report_warnings(loaded: &LoadedConfig) {
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
}

fn write_run(out: &mut Outputs, run: &RunOutput, suffix: &str) -> Result<(), Failure> {
    out.write(&format!("trace{suffix}.csv"), |w| {
        write_trace_csv(&run.trace, w).map_err(io::Error::other)
    })?;
    out.write(&format!("metrics{suffix}.txt"), |w| write_metrics(&run.metrics, w))
}

fn write_comparison(out: &mut Outputs, cmp: &Comparison) -> Result<(), Failure> {
    for (variant, run) in &cmp.runs {
        write_run(out, run, &format!("_{}", variant.slug()))?;
    }
    out.write("report.csv", |w| cmp.write_report(w))
}

/// Runs `body` against a fresh output directory and cleans up on failure.
fn with_outputs(dir: &Path, body: impl FnOnce(&mut Outputs) -> Result<(), Failure>) -> Result<(), Failure> {
    let mut out = Outputs::create(dir)?;
    match body(&mut out) {
        Ok(()) => Ok(()),
        Err(e) => {
            out.discard();
            Err(e)
        }
    }
}

fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let loaded = load_config(&args.config, &args.overrides.overrides()).map_err(Failure::Config)?;
    report_warnings(&loaded);
    let run = run_with(&loaded.config, parallelism(args.sequential)).map_err(Failure::Sim)?;
    with_outputs(&args.out, |out| write_run(out, &run, ""))?;
    println!(
        "{}: {} records over [0, {}] s written to {}",
        loaded.config.variant,
        run.trace.len(),
        run.trace.last().map_or(0.0, |r| r.t),
        args.out.display()
    );
    Ok(())
}

fn compare(loaded: &LoadedConfig, sequential: bool) -> Result<Comparison, Failure> {
    report_warnings(loaded);
    compare_variants(&loaded.config, parallelism(sequential)).map_err(Failure::Sim)
}

fn print_report(cmp: &Comparison) {
    let mut stdout = io::stdout().lock();
    let _ = cmp.write_report(&mut stdout);
}

fn cmd_compare(args: &RunArgs) -> Result<(), Failure> {
    let loaded = load_config(&args.config, &args.overrides.overrides()).map_err(Failure::Config)?;
    let cmp = compare(&loaded, args.sequential)?;
    with_outputs(&args.out, |out| write_comparison(out, &cmp))?;
    print_report(&cmp);
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> Result<(), Failure> {
    let loaded = load_config(&args.config, &args.overrides.overrides()).map_err(Failure::Config)?;
    report_warnings(&loaded);
    print!("{}", ScenarioFile::from_config(&loaded.config).to_toml());
    eprintln!("{}: valid", args.config.display());
    Ok(())
}

fn cmd_demo(args: &DemoArgs) -> Result<(), Failure> {
    let loaded = load_config_str(DEMO_CONFIG, "demo", &args.overrides.overrides()).map_err(Failure::Config)?;
    let cmp = compare(&loaded, args.sequential)?;
    with_outputs(&args.out, |out| {
        write_comparison(out, &cmp)?;
        out.write("scenario.toml", |w| w.write_all(DEMO_CONFIG.as_bytes()))
    })?;
    print_report(&cmp);
    if !cmp.ordering_holds() {
        eprintln!("note: the per-follower ordering differs from the expected pattern");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Demo(a) => cmd_demo(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
