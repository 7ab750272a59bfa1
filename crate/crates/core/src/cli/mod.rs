//! Command-line driver: reads a TOML run configuration, dispatches to the
//! library, and writes scalars, CSV tables or JSON documents.
//!
//! Exit codes: 0 success or check passed, 1 check failed, 2 configuration
//! error, 3 numerical error. Inputs are in nats; `--base` only affects
//! displayed rates.

mod commands;
pub mod config;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use config::{parse_matrix_text, RunConfig};

use crate::error::Error;

#[derive(Debug, Parser)]
#[command(name = "mimo-secrecy", version, about = "Secrecy capacity and capacity regions of MIMO Gaussian wiretap and broadcast channels")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base seed for every randomized routine (overrides the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Unit for displayed rates.
    #[arg(long, global = true, value_enum)]
    pub base: Option<Base>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Capacity of the legitimate receiver's channel under `[power] s`.
    Capacity,
    /// Secrecy capacity of the wiretap channel under `[power] s`.
    SecrecyCapacity,
    /// Capacity-equivocation region `(R, Re)`.
    CeRegion,
    /// Private-confidential region `(Rp, Rs)`.
    PcRegion,
    /// Sampled boundary of the common/confidential/confidential region.
    BccRegion,
    /// `(R1, R2)` boundary at a fixed common rate.
    CrossSection,
    /// KKT certificate for a covariance split.
    KktCheck,
    /// Enhanced noise covariance for a covariance split.
    Enhance,
    /// Binning-code simulation on a discrete memoryless wiretap channel.
    SimulateDmc,
    /// Cross-check of the secrecy capacity against the oracles.
    OracleCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Base {
    Bits,
    Nats,
}

impl Base {
    pub fn rate(self, nats: f64) -> f64 {
        match self {
            Base::Bits => nats / std::f64::consts::LN_2,
            Base::Nats => nats,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Base::Bits => "bits",
            Base::Nats => "nats",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical(_) => CliError::Numerical(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

/// Resolved display settings.
#[derive(Debug, Clone, Copy)]
pub struct Settings {
    pub seed: u64,
    pub format: Format,
    pub base: Base,
}

/// Rendered output and whether the command's check passed.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub text: String,
    pub passed: bool,
}

impl Output {
    fn ok(text: String) -> Self {
        Self { text, passed: true }
    }
}

fn parse_choice<T: ValueEnum>(value: &Option<String>, key: &str) -> Result<Option<T>, CliError> {
    value
        .as_deref()
        .map(|v| T::from_str(v, true).map_err(|_| CliError::Config(format!("unknown {key} '{v}'"))))
        .transpose()
}

pub fn settings(cli: &Cli, cfg: &RunConfig) -> Result<Settings, CliError> {
    Ok(Settings {
        seed: cli.seed.or(cfg.seed).unwrap_or(0),
        format: cli.format.or(parse_choice(&cfg.format, "format")?).unwrap_or(Format::Csv),
        base: cli.base.or(parse_choice(&cfg.base, "base")?).unwrap_or(Base::Bits),
    })
}

/// Runs one command and returns its rendered output.
pub fn execute(command: Command, cfg: &RunConfig, st: Settings) -> Result<Output, CliError> {
    commands::dispatch(command, cfg, st)
}

/// Full CLI invocation; returns the process exit code.
pub fn run(cli: &Cli) -> u8 {
    let result = (|| {
        let cfg = match &cli.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let st = settings(cli, &cfg)?;
        let out = execute(cli.command, &cfg, st)?;
        match &cli.out {
            Some(path) => std::fs::write(path, &out.text)
                .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?,
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(out.text.as_bytes())
                    .and_then(|_| stdout.flush())
                    .map_err(|e| CliError::Config(format!("cannot write output: {e}")))?;
            }
        }
        Ok::<_, CliError>(out.passed)
    })();
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Six decimals, without a negative sign on zero.
pub fn fixed(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

fn csv_table(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.iter().map(|v| fixed(*v)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

fn json_text(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_formatting() {
        assert_eq!(fixed(0.0), "0.000000");
        assert_eq!(fixed(-1e-12), "0.000000");
        assert_eq!(fixed(4.7547004), "4.754700");
        assert_eq!(fixed(1e6), "1000000.000000");
    }

    #[test]
    fn csv_layout() {
        let t = csv_table(&["r", "re"], &[vec![0.0, 0.0], vec![1.5, 0.25]]);
        assert_eq!(t, "r,re\n0.000000,0.000000\n1.500000,0.250000\n");
    }

    #[test]
    fn base_conversion() {
        assert!((Base::Bits.rate(std::f64::consts::LN_2) - 1.0).abs() < 1e-15);
        assert_eq!(Base::Nats.rate(0.3), 0.3);
    }

    #[test]
    fn error_codes() {
        assert_eq!(CliError::from(Error::Numerical("x".into())).exit_code(), 3);
        assert_eq!(CliError::from(Error::NotPsd { min_eig: -1.0 }).exit_code(), 2);
    }
}
