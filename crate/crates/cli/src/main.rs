//! `blowup-lab`: runs the profile, solver and sequence experiments from a TOML config.
//!
//! Exit status: 0 when every check passes, 2 when a check fails or a run
//! aborts, 1 on configuration errors.

mod commands;

use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use blowup_core::config::{LoadedConfig, RunConfig};
use blowup_core::report::fmt_f64;
use blowup_core::solver::Direction;
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use commands::{Context, Failure, Output};

const OUT_ENV: &str = "BLOWUP_LAB_OUT";
const DEFAULT_OUT: &str = "blowup-lab-out";

#[derive(Parser)]
#[command(
    name = "blowup-lab",
    version,
    about = "Blow-up profile and approximating-sequence experiments for NLS"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run config; omitted keys take the defaults listed below.
    #[arg(long)]
    config: PathBuf,
    /// Output root; results go to `<out>/<subcommand>/`.
    /// Falls back to output.dir in the config, then `blowup-lab-out`.
    #[arg(long, env = OUT_ENV)]
    out: Option<PathBuf>,
    /// Run even if the profile fails a (non-shape) hypothesis.
    #[arg(long)]
    force: bool,
    /// Worker threads for the sequence runs (default: all cores).
    #[arg(long)]
    jobs: Option<NonZeroUsize>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the profile hypotheses and report targets, box and resolution.
    ProfileCheck(Common),
    /// Single forward or backward run from the [simulate] data.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Overrides simulate.direction.
        #[arg(long)]
        direction: Option<Direction>,
    },
    /// Approximating sequence u_n(T_n) = U(T_n) integrated back to t0.
    ApproxSeq(Common),
    /// Norm growth rates of the profile against their targets.
    Rates(Common),
    /// Pointwise nonlinearity and field-norm property suites.
    Invariants(Common),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::ProfileCheck(_) => "profile-check",
            Command::Simulate { .. } => "simulate",
            Command::ApproxSeq(_) => "approx-seq",
            Command::Rates(_) => "rates",
            Command::Invariants(_) => "invariants",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::ProfileCheck(c)
            | Command::ApproxSeq(c)
            | Command::Rates(c)
            | Command::Invariants(c) => c,
            Command::Simulate { common, .. } => common,
        }
    }
}

fn defaults_help() -> String {
    let mut text = String::from("Config defaults (every key is optional):\n\n");
    for line in RunConfig::default().to_toml().lines() {
        text.push_str("  ");
        text.push_str(line);
        text.push('\n');
    }
    text.push_str(&format!(
        "\nOutput root: --out, then ${OUT_ENV}, then output.dir, then `{DEFAULT_OUT}`.\n\
         Exit status: 0 all checks pass, 2 a check failed or a run aborted, 1 configuration error."
    ));
    text
}

fn output_root(common: &Common, config: &RunConfig) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| config.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn write_outputs(dir: &Path, output: &Output, svg: bool) -> Result<(), Failure> {
    output
        .report
        .write(dir, svg)
        .map_err(|e| Failure::Config(e.to_string()))?;
    for (name, text) in &output.files {
        let path = dir.join(name);
        std::fs::write(&path, text)
            .map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn run(command: &Command) -> Result<bool, Failure> {
    let common = command.common();
    let loaded = LoadedConfig::read(&common.config)?;
    let jobs = common
        .jobs
        .map_or_else(rayon::current_num_threads, NonZeroUsize::get);
    if let Some(n) = common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.get())
            .build_global()
            .map_err(|e| Failure::Config(format!("--jobs: {e}")))?;
    }
    let dir = output_root(common, &loaded.config).join(command.name());
    let ctx = Context {
        config: loaded.config,
        force: common.force,
        jobs,
    };
    let started = Instant::now();
    let mut output = match command {
        Command::ProfileCheck(_) => commands::profile_check(&ctx),
        Command::Simulate { direction, .. } => commands::simulate(&ctx, *direction),
        Command::ApproxSeq(_) => commands::approx_seq(&ctx),
        Command::Rates(_) => commands::rates(&ctx),
        Command::Invariants(_) => commands::invariants(&ctx),
    }?;
    output
        .report
        .number("run.runtime_seconds", started.elapsed().as_secs_f64());
    write_outputs(&dir, &output, ctx.config.output.svg)?;
    let report = &output.report;
    for c in report.failed() {
        println!(
            "FAIL {}: measured {} ({})",
            c.name,
            fmt_f64(c.measured),
            c.rule
        );
    }
    let failed = report.failed().count();
    println!(
        "{}: {}/{} checks pass; report in {}",
        command.name(),
        report.checks.len() - failed,
        report.checks.len(),
        dir.display()
    );
    Ok(report.passed())
}

fn main() -> ExitCode {
    let help = defaults_help();
    let matches = Cli::command()
        .after_help(help.clone())
        .mut_subcommands(|sub| sub.after_help(help.clone()))
        .get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: run aborted: {msg}");
            ExitCode::from(2)
        }
    }
}
