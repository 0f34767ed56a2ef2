use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod manifest;

/// Synthesize, analyze, design and optimize MTSFM pulses.
#[derive(Parser, Debug)]
#[command(name = "mtsfm", version)]
struct Cli {
    /// Waveform spec (analyze, af) or optimization problem (optimize), as JSON.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// RNG seed for the optimizer's restarts; overrides the problem file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Samples per Hz of swept band; overrides the waveform spec.
    #[arg(long, global = true)]
    oversample: Option<u32>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// ACF metrics and EOA parameters of one waveform.
    Analyze(AnalyzeArgs),
    /// Ambiguity surface on a delay/Doppler grid, plus the EOA contour.
    Af(AfArgs),
    /// Bandwidth circle, coupling trace and max coupling versus harmonic count.
    Figure1,
    /// Sine coefficients of maximum coupling for an LFM-equivalent bandwidth.
    DesignRho(DesignArgs),
    /// Minimize ISL under bandwidth and coupling bounds.
    Optimize,
    /// Seed list and optimization results for the four benchmark waveforms.
    Tables(TablesArgs),
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Also write af.csv over +-this Doppler span (Hz).
    #[arg(long)]
    doppler_span: Option<f64>,
    #[arg(long, default_value_t = 65)]
    doppler_points: usize,
}

#[derive(Args, Debug)]
struct AfArgs {
    /// Delay span +-tau (s); defaults to the pulse length.
    #[arg(long)]
    delay_span: Option<f64>,
    #[arg(long, default_value_t = 257)]
    delay_points: usize,
    /// Doppler span +-nu (Hz); defaults to half the swept band.
    #[arg(long)]
    doppler_span: Option<f64>,
    #[arg(long, default_value_t = 129)]
    doppler_points: usize,
    /// Contour level of `1 - |chi|^2`.
    #[arg(long, default_value_t = 0.5)]
    contour_level: f64,
}

#[derive(Args, Debug)]
struct DesignArgs {
    #[arg(long, default_value_t = 200.0)]
    time_bandwidth: f64,
    #[arg(long, default_value_t = 1.0)]
    duration: f64,
    #[arg(long, default_value_t = 2)]
    harmonics: usize,
}

#[derive(Args, Debug)]
struct TablesArgs {
    #[arg(long, default_value_t = 200.0)]
    time_bandwidth: f64,
    #[arg(long, default_value_t = 1.0)]
    duration: f64,
    /// Objective evaluations allowed per waveform.
    #[arg(long)]
    max_evals: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mtsfm: {e:#}");
            ExitCode::from(e.code())
        }
    }
}
