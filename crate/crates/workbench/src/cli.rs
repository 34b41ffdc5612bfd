//! `lfd` command line: serve, run experiments, replay and export logs,
//! compare experiment outputs.
//!
//! Exit codes: 0 ok, 1 usage, 2 log integrity failure, 3 engine error.

use std::ffi::OsString;
use std::fs::File;
use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lfd_feedback::config::{read_reports_csv, write_reports_csv, WorkbenchConfig};
use lfd_feedback::eventlog::{read_log, replay};
use lfd_feedback::metrics::{mann_whitney_u, MetricsReport};
use lfd_feedback::protocol::Condition;
use lfd_feedback::simteacher::{run_experiment, TeacherStrategy};
use lfd_feedback::Error;

use crate::server::{serve, AppState};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_INTEGRITY: u8 = 2;
pub const EXIT_ENGINE: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "lfd",
    version,
    about = "Learning-from-demonstration teaching workbench"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Host teaching sessions over HTTP.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        data: PathBuf,
        /// Defaults for new sessions.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run simulated-teacher sessions and write one CSV row per seed.
    RunExperiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        condition: ConditionArg,
        #[arg(long, value_enum)]
        strategy: Option<StrategyArg>,
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-derive a session from its log and print its report.
    Replay {
        #[arg(long)]
        log: PathBuf,
    },
    /// Export the report of a finished session log.
    Report {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Mann-Whitney U test on one column of two experiment CSVs.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        metric: String,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ConditionArg {
    Ef,
    Nf,
}

impl From<ConditionArg> for Condition {
    fn from(c: ConditionArg) -> Self {
        match c {
            ConditionArg::Ef => Condition::Ef,
            ConditionArg::Nf => Condition::Nf,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StrategyArg {
    Random,
    Coverage,
    Responsive,
}

impl From<StrategyArg> for TeacherStrategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Random => TeacherStrategy::RandomStart,
            StrategyArg::Coverage => TeacherStrategy::CoverageStart,
            StrategyArg::Responsive => TeacherStrategy::FeedbackResponsive,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Parses `args` (program name first) and runs the command.
pub fn main<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let mut stdout = std::io::stdout().lock();
    match run(cli.command, &mut stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Integrity { .. } => EXIT_INTEGRITY,
        _ => EXIT_ENGINE,
    }
}

/// Runs one command, writing its normal output to `out`.
pub fn run(command: Command, out: &mut impl Write) -> lfd_feedback::Result<()> {
    match command {
        Command::Serve { port, data, config } => {
            let defaults = match config {
                Some(path) => WorkbenchConfig::load(path)?.setup(),
                None => WorkbenchConfig::default().setup(),
            };
            let state = AppState::open(&data, defaults)?;
            let addr = SocketAddr::from(([0, 0, 0, 0], port));
            writeln!(out, "serving on {addr}, data in {}", data.display())?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(serve(addr, state))?;
            Ok(())
        }
        Command::RunExperiment {
            config,
            condition,
            strategy,
            seeds,
            out: csv_path,
        } => {
            let cfg = WorkbenchConfig::load(config)?;
            let strategy = strategy.map(Into::into).unwrap_or(cfg.experiment.strategy);
            let seeds = seeds.unwrap_or(cfg.experiment.seeds);
            let reports = run_experiment(condition.into(), strategy, &cfg.setup(), seeds)?;
            write_reports_csv(File::create(&csv_path)?, &reports)?;
            writeln!(
                out,
                "wrote {} rows to {}",
                reports.len(),
                csv_path.display()
            )?;
            Ok(())
        }
        Command::Replay { log } => {
            let replayed = replay(&read_log(log)?)?;
            match replayed.report {
                Some(report) => writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?,
                None => writeln!(
                    out,
                    "log of session {} verified; session is in phase {:?}",
                    replayed.session_id,
                    replayed.session.phase()
                )?,
            }
            Ok(())
        }
        Command::Report { log, format } => {
            let replayed = replay(&read_log(log)?)?;
            let report = replayed
                .report
                .ok_or(Error::SessionNotDone(replayed.session.phase()))?;
            write_report(&report, format, out)
        }
        Command::Compare { a, b, metric } => {
            let column = |path: PathBuf| -> lfd_feedback::Result<Vec<f64>> {
                read_reports_csv(File::open(path)?)?
                    .iter()
                    .map(|r| {
                        r.metric(&metric).ok_or_else(|| {
                            Error::InvalidConfig(format!("unknown metric `{metric}`"))
                        })
                    })
                    .collect()
            };
            let (xa, xb) = (column(a)?, column(b)?);
            let test = mann_whitney_u(&xa, &xb)?;
            let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
            writeln!(
                out,
                "metric {metric}: mean a = {:.6}, mean b = {:.6}",
                mean(&xa),
                mean(&xb)
            )?;
            writeln!(
                out,
                "U = {} p = {:.6} ({})",
                test.u,
                test.p,
                if test.exact {
                    "exact"
                } else {
                    "normal approximation"
                }
            )?;
            Ok(())
        }
    }
}

fn write_report(
    report: &MetricsReport,
    format: Format,
    out: &mut impl Write,
) -> lfd_feedback::Result<()> {
    match format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(report)?)?,
        Format::Csv => write_reports_csv(&mut *out, std::slice::from_ref(report))?,
    }
    Ok(())
}
