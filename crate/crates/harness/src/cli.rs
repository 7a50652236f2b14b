use std::path::PathBuf;

use bayesrisk_core::SweepAxis;
use clap::{Args, Parser, Subcommand};

use crate::commands;
use crate::config::{parse_seeds, RunConfig, Settings};
use crate::error::{exit, HarnessError, Result};
use crate::validation;

#[derive(Debug, Parser)]
#[command(
    name = "bayesrisk",
    version,
    about = "Asymptotic and simulated Bayes risks for semi-supervised two-cluster classification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// All five risks at one parameter point, as a one-row CSV.
    Risk,
    /// Risks along one axis (--axis, --grid-start/--grid-stop/--grid-points).
    Curve,
    /// Risks on a two-axis grid (adds --axis2 and --grid2-*), long format.
    Phase,
    /// Monte Carlo runs over --seeds, with a JSON summary against theory.
    Simulate,
    /// Runs the acceptance suite and prints one line per criterion.
    Validate,
}

fn axis(s: &str) -> std::result::Result<SweepAxis, String> {
    s.parse().map_err(|e: bayesrisk_core::Error| e.to_string())
}

/// Parsed `--seeds` value, kept as one argument.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedList(pub Vec<u64>);

fn seeds(s: &str) -> std::result::Result<SeedList, String> {
    parse_seeds(s).map(SeedList).map_err(|e| e.to_string())
}

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file, then to built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Config file: a JSON object or `key = value` lines.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Samples per dimension, N / D.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Noise variance.
    #[arg(long, global = true)]
    pub sigma2: Option<f64>,
    /// Fraction of revealed labels.
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    /// Sweep axis: eta, inv_sigma2 or alpha.
    #[arg(long, global = true, value_parser = axis)]
    pub axis: Option<SweepAxis>,
    #[arg(long, global = true)]
    pub grid_start: Option<f64>,
    #[arg(long, global = true)]
    pub grid_stop: Option<f64>,
    #[arg(long, global = true)]
    pub grid_points: Option<usize>,
    /// Second axis of `phase`.
    #[arg(long, global = true, value_parser = axis)]
    pub axis2: Option<SweepAxis>,
    #[arg(long, global = true)]
    pub grid2_start: Option<f64>,
    #[arg(long, global = true)]
    pub grid2_stop: Option<f64>,
    #[arg(long, global = true)]
    pub grid2_points: Option<usize>,
    /// Training points.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Dimension.
    #[arg(long, global = true)]
    pub d: Option<usize>,
    /// Test points.
    #[arg(long, global = true)]
    pub m: Option<usize>,
    /// Seeds: comma-separated integers or ranges `a..b`, `a..=b`.
    #[arg(long, global = true, value_parser = seeds)]
    pub seeds: Option<SeedList>,
    /// Output file (standard output when absent).
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// JSON summary of `simulate` (default: --out with a .json extension).
    #[arg(long, global = true, value_name = "PATH")]
    pub summary: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Use a Gauss-Hermite rule of this order for the channel integrals
    /// instead of the default trapezoidal rule.
    #[arg(long, global = true)]
    pub quadrature_order: Option<usize>,
    /// `validate`: analytic criteria only.
    #[arg(long, global = true)]
    pub quick: bool,
    /// AMP iteration cap.
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    /// AMP convergence tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// More log output on standard error (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

impl Flags {
    fn settings(&self) -> Settings {
        Settings {
            alpha: self.alpha,
            sigma2: self.sigma2,
            eta: self.eta,
            axis: self.axis,
            grid_start: self.grid_start,
            grid_stop: self.grid_stop,
            grid_points: self.grid_points,
            axis2: self.axis2,
            grid2_start: self.grid2_start,
            grid2_stop: self.grid2_stop,
            grid2_points: self.grid2_points,
            n: self.n,
            d: self.d,
            m: self.m,
            seeds: self.seeds.as_ref().map(|s| s.0.clone()),
            out: self.out.clone(),
            summary: self.summary.clone(),
            threads: self.threads,
            quadrature_order: self.quadrature_order,
            quick: self.quick.then_some(true),
            max_iter: self.max_iter,
            tol: self.tol,
        }
    }

    /// Defaults, overridden by the config file, overridden by flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let file = match &self.config {
            Some(path) => Settings::from_file(path)?,
            None => Settings::default(),
        };
        file.overlay(self.settings()).resolve()
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    // Builder::new() does not consult the environment.
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
}

fn execute(command: Command, cfg: &RunConfig) -> Result<()> {
    match command {
        Command::Risk => commands::emit(cfg.out.as_deref(), &commands::risk(cfg)?),
        Command::Curve => commands::emit(cfg.out.as_deref(), &commands::curve(cfg)?),
        Command::Phase => commands::emit(cfg.out.as_deref(), &commands::phase(cfg)?),
        Command::Simulate => {
            let out = commands::simulate(cfg)?;
            commands::emit(cfg.out.as_deref(), &out.csv)?;
            let json = serde_json::to_string_pretty(&out.summary).expect("summary serializes") + "\n";
            match commands::summary_path(cfg) {
                Some(path) => commands::emit(Some(&path), &json)?,
                None => eprint!("{json}"),
            }
            if out.summary.succeeded == 0 {
                return Err(HarnessError::Numerical("every seed failed".into()));
            }
            Ok(())
        }
        Command::Validate => {
            let report = validation::run(cfg)?;
            print!("{}", report.table());
            if let Some(path) = &cfg.out {
                let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
                commands::emit(Some(path), &json)?;
            }
            if report.all_passed() {
                println!("all {} criteria passed", report.criteria.len());
                Ok(())
            } else {
                Err(HarnessError::Validation(report.failing()))
            }
        }
    }
}

/// Parses the command line, runs it and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::USAGE } else { exit::OK };
        }
    };
    init_logging(cli.flags.verbose);
    let outcome = cli.flags.resolve().and_then(|cfg| execute(cli.command, &cfg));
    match outcome {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("bayesrisk: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_after_the_subcommand() {
        let cli = Cli::try_parse_from(["bayesrisk", "simulate", "--seeds", "1..3,9", "--alpha", "2"]).unwrap();
        assert_eq!(cli.command, Command::Simulate);
        let cfg = cli.flags.resolve().unwrap();
        assert_eq!(cfg.seeds, [1, 2, 9]);
        assert_eq!(cfg.alpha, 2.0);
    }
}
