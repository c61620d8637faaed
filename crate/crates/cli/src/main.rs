//! `latline`: run link simulations and export figure data.
//!
//! Standard output carries JSON only. Exit status is 2 for invalid
//! configuration and 1 for runtime failures.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "latline",
    version,
    about = "Near-field dipole link simulator for lateral-line arrays"
)]
struct Cli {
    /// Scenario JSON; omitted keys take the built-in defaults.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,

    /// Master seed [default: the scenario's seed, 0 if unset]
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for every file the command writes.
    #[arg(long, global = true, default_value = "./out")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one end-to-end link and print its report.
    Simulate {
        #[command(flatten)]
        link: LinkOverrides,
        /// Also write transmitter, received and beamformed waveforms.
        #[arg(long)]
        waveforms: bool,
    },
    /// BER against SNR, distance or bit rate.
    Sweep {
        #[arg(value_enum)]
        kind: SweepKind,
        #[command(flatten)]
        range: RangeArgs,
        /// Independent runs per sweep value.
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[command(flatten)]
        link: LinkOverrides,
    },
    /// Dipole field on a plane through the source.
    Field {
        /// Plane as `axis=level`, e.g. `z=0`.
        #[arg(long, default_value = "z=0")]
        plane: String,
        /// Half-width of the square window, m.
        #[arg(long, default_value_t = 0.3)]
        extent: f64,
        /// Points per in-plane axis.
        #[arg(long, default_value_t = 200)]
        resolution: usize,
        #[arg(long, value_enum, default_value_t = Quantity::Geometric)]
        quantity: Quantity,
        /// Time for instantaneous pressure, s.
        #[arg(long, default_value_t = 0.00625)]
        time: f64,
    },
    /// Array sensitivity on a cube around the array centre.
    Sensitivity {
        /// Half-width of the cube, m.
        #[arg(long, default_value_t = 0.5)]
        extent: f64,
        /// Points per axis.
        #[arg(long, default_value_t = 40)]
        resolution: usize,
        /// Exclusion radius around each sensor, m [default: source radius]
        #[arg(long)]
        probe_radius: Option<f64>,
    },
    /// Eye diagram of the beamformed baseband.
    Eye {
        #[arg(long, default_value_t = 200)]
        traces: usize,
        #[command(flatten)]
        link: LinkOverrides,
    },
    /// Print the effective scenario with every default filled in.
    DumpConfig {
        #[command(flatten)]
        link: LinkOverrides,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SweepKind {
    Snr,
    Distance,
    Rate,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Quantity {
    Pressure,
    Geometric,
}

#[derive(Debug, Clone, Args)]
struct RangeArgs {
    #[arg(
        long,
        requires = "to",
        conflicts_with = "values",
        allow_negative_numbers = true
    )]
    from: Option<f64>,
    #[arg(long, requires = "from", allow_negative_numbers = true)]
    to: Option<f64>,
    /// Increment; without it `--points` evenly spaced values are used.
    #[arg(long, requires = "from", conflicts_with = "points")]
    step: Option<f64>,
    #[arg(long, requires = "from")]
    points: Option<usize>,
    /// Explicit comma-separated values.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    values: Option<Vec<f64>>,
}

/// Overrides applied on top of the scenario before validation.
#[derive(Debug, Clone, Default, Args)]
struct LinkOverrides {
    /// Mean per-sensor input SNR, dB.
    #[arg(long, allow_negative_numbers = true, conflicts_with = "sigma_n")]
    snr_db: Option<f64>,
    /// Absolute per-sensor noise standard deviation, Pa.
    #[arg(long)]
    sigma_n: Option<f64>,
    /// Number of transmitted bits.
    #[arg(long)]
    bits: Option<usize>,
    /// Bits per second.
    #[arg(long)]
    bit_rate: Option<f64>,
    /// Actuator low-pass as `natural_frequency,damping`.
    #[arg(long, value_name = "FN,ZETA", value_parser = parse_pair)]
    actuator: Option<(f64, f64)>,
    #[arg(long, value_enum)]
    noise: Option<NoiseArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NoiseArg {
    White,
    Kolmogorov,
}

fn parse_pair(text: &str) -> Result<(f64, f64), String> {
    let (a, b) = text
        .split_once(',')
        .ok_or_else(|| "expected two comma-separated numbers".to_string())?;
    let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("`{s}`: {e}"));
    Ok((num(a)?, num(b)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(json) => {
            println!("{json}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
