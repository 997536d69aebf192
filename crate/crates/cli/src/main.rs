//! `pulseopt` — simulate and optimize laser pulses for two-level systems.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod output;

#[derive(Parser)]
#[command(name = "pulseopt", version, about = "Optimal pulse shaping for two-level systems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the density-matrix dynamics for a configured pulse.
    Simulate {
        /// TOML run configuration.
        config: PathBuf,
        /// Output directory (created if missing).
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Compare the sech pulse against an equal-area, equal-energy square pulse.
    Fig1 {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Constant pi/2 pulse for a Morse oscillator reduced to two levels.
    Fig2 {
        /// Reduced mass of the oscillator (atomic units).
        #[arg(long)]
        mass: f64,
        /// Control time of the pulse.
        #[arg(long, default_value_t = 30000.0)]
        t_control: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Gradient-based pulse optimization under a fixed energy budget.
    Optimize {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the seed from the configuration.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check the analytic optimum against random perturbations.
    Audit {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the seed from the configuration.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Solve the Morse oscillator bound states and transition dipole.
    Morse {
        /// Reduced mass of the oscillator (atomic units).
        #[arg(long)]
        mass: f64,
        /// Radial grid resolution.
        #[arg(long, default_value_t = 4096)]
        n_r: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Simulate { config, out } => commands::cmd_simulate(&config, &out),
        Cmd::Fig1 { out } => commands::cmd_fig1(&out),
        Cmd::Fig2 { mass, t_control, out } => commands::cmd_fig2(mass, t_control, &out),
        Cmd::Optimize { config, out, seed } => commands::cmd_optimize(&config, &out, seed),
        Cmd::Audit { config, out, seed } => commands::cmd_audit(&config, &out, seed),
        Cmd::Morse { mass, n_r, out } => commands::cmd_morse(mass, n_r, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pulseopt: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
