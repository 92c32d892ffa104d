//! The `eswap` command line: `fig1`, `fig2`, `verify`, `emit-config-template`.
//!
//! Settings resolve as flag > config file > `ESWAP_SEED` (seed only) >
//! built-in default. Exit codes: 0 success, 1 numerical failure, 2 config
//! error, 3 verification failure, 4 I/O error.

pub mod config;
pub mod emit;
pub mod figures;
pub mod verify;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{Mode, PRule, Preparation, SweepConfig};
pub use emit::Format;
pub use figures::{run_fig1, run_fig2, FigureRow, FigureTable};
pub use verify::{run_verify, Suite, VerifyReport};

use crate::error::{Error, Result};

pub const SEED_ENV: &str = "ESWAP_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "eswap", version, about = "Entanglement swapping of partially entangled pairs: figure data and verification suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Local coherence, predictability and entanglement of the AC pair across the q sweep.
    Fig1(SweepArgs),
    /// Post-selected AB branch concurrences and the probability identity across the q sweep.
    Fig2(SweepArgs),
    /// Run a named property suite.
    Verify(VerifyArgs),
    /// Print a commented config file with every key at its default.
    EmitConfigTemplate {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Config file (`[sweep]`, `[sampling]`, `[noise]` sections).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    q_min: Option<f64>,
    #[arg(long)]
    q_max: Option<f64>,
    #[arg(long)]
    q_steps: Option<usize>,
    /// Shots per measurement setting.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    noise_eps01: Option<f64>,
    #[arg(long)]
    noise_eps10: Option<f64>,
    /// Comma-separated subset of theory, ideal_sim, noisy_sim.
    #[arg(long, value_delimiter = ',')]
    mode: Option<Vec<String>>,
    /// computational or hadamard.
    #[arg(long)]
    prep: Option<String>,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// ccr, swap_oracle, probabilities, special_cases or mitigation.
    #[arg(long)]
    suite: String,
    /// Number of trials; each suite has its own default.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{SEED_ENV}: not an unsigned integer: {v:?}"))),
        Err(_) => Ok(None),
    }
}

impl SweepArgs {
    fn resolve(&self) -> Result<SweepConfig> {
        let mut base = SweepConfig::default();
        if let Some(seed) = env_seed()? {
            base.seed = seed;
        }
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                SweepConfig::from_config_str_with_base(&text, base)
                    .map_err(|e| Error::Config(format!("{}: {}", path.display(), strip_config_prefix(e))))?
            }
            None => base,
        };
        if self.q_min.is_some() || self.q_max.is_some() || self.q_steps.is_some() {
            let lo = self.q_min.unwrap_or_else(|| cfg.q_values.iter().copied().fold(f64::INFINITY, f64::min));
            let hi = self.q_max.unwrap_or_else(|| cfg.q_values.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            cfg.q_values = config::even_grid(lo, hi, self.q_steps.unwrap_or(cfg.q_values.len()));
        }
        if let Some(v) = self.shots {
            cfg.shots = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.noise_eps01 {
            cfg.eps01 = v;
        }
        if let Some(v) = self.noise_eps10 {
            cfg.eps10 = v;
        }
        if let Some(modes) = &self.mode {
            cfg.modes = modes.iter().map(|m| m.parse()).collect::<Result<_>>()?;
        }
        if let Some(p) = &self.prep {
            cfg.preparation = p.parse()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn strip_config_prefix(e: Error) -> String {
    match e {
        Error::Config(s) => s,
        other => other.to_string(),
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::UnknownSuite(_) | Error::InvalidNoise(_) => EXIT_CONFIG,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_FAILURE,
    }
}

fn write_text(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Fig1(args) | Command::Fig2(args) if args.format.parse::<Format>().is_err() => {
            Err(args.format.parse::<Format>().unwrap_err())
        }
        Command::Fig1(args) => {
            let table = run_fig1(&args.resolve()?)?;
            emit::emit(&table, args.format.parse()?, args.out.as_deref())?;
            Ok(EXIT_OK)
        }
        Command::Fig2(args) => {
            let table = run_fig2(&args.resolve()?)?;
            emit::emit(&table, args.format.parse()?, args.out.as_deref())?;
            Ok(EXIT_OK)
        }
        Command::Verify(args) => {
            let suite: Suite = args.suite.parse()?;
            let seed = match args.seed {
                Some(s) => s,
                None => env_seed()?.unwrap_or(config::DEFAULT_SEED),
            };
            let report = run_verify(suite, args.trials.unwrap_or(suite.default_trials()), seed)?;
            if args.json {
                println!("{}", serde_json::to_string_pretty(&report).map_err(|e| Error::Io(e.to_string()))?);
            } else {
                println!("{report}");
            }
            Ok(if report.passed() { EXIT_OK } else { EXIT_VERIFY })
        }
        Command::EmitConfigTemplate { out } => {
            write_text(&config::config_template(), out.as_ref())?;
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code. Errors are reported on stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "[sampling]\nshots = 100\nseed = 5\n").unwrap();
        let cli = Cli::try_parse_from(["eswap", "fig1", "--config", path.to_str().unwrap(), "--seed", "9", "--q-steps", "3"]).unwrap();
        let Command::Fig1(args) = cli.command else { panic!() };
        let cfg = args.resolve().unwrap();
        assert_eq!((cfg.shots, cfg.seed), (100, 9));
        assert_eq!(cfg.q_values, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn error_kinds_map_to_exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::UnknownSuite("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::Io("x".into())), EXIT_IO);
        assert_eq!(exit_code(&Error::NoShots), EXIT_FAILURE);
        assert_eq!(run(["eswap", "verify", "--suite", "bogus"]), EXIT_CONFIG);
        assert_eq!(run(["eswap", "fig1", "--format", "xml"]), EXIT_CONFIG);
        assert_eq!(run(["eswap", "no-such-command"]), EXIT_CONFIG);
    }
}
