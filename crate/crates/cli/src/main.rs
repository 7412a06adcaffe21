use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sarnsaf::filterbank::{design_prototype, modulate, write_prototype, DESIGN_GRID};
use sarnsaf::harness::{run_experiment, ExperimentConfig};
use sarnsaf::scenario::{read_system, synth_system_seeded, write_system, SystemKind, SystemShape};

#[derive(Parser)]
#[command(name = "sarnsaf", version, about = "Sparsity-aware robust subband adaptive filter simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo experiment and write the averaged NMSD curve as CSV.
    Run {
        /// `key = value` config file; defaults apply without one.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        algo: Option<String>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Design a cosine-modulated bank prototype and write its coefficients.
    DesignBank {
        #[arg(long, default_value_t = 4)]
        bands: usize,
        #[arg(long, default_value_t = 33)]
        length: usize,
        #[arg(long, default_value_t = 60.0)]
        atten: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic unknown system with a target sparseness.
    SynthSystem {
        #[arg(long, default_value_t = 512)]
        taps: usize,
        #[arg(long)]
        kind: SystemKind,
        #[arg(long)]
        chi: f64,
        #[arg(long, default_value_t = 16)]
        active_taps: usize,
        #[arg(long, default_value_t = 2022)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the sparseness of a system file.
    Chi {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> sarnsaf::Result<()> {
    match command {
        Command::Run { config, algo, alpha, gamma, runs, seed, out } => {
            let mut cfg = match &config {
                Some(path) => ExperimentConfig::load(path)?,
                None => ExperimentConfig::default(),
            };
            let overrides = [
                ("algorithm", algo),
                ("alpha", alpha.map(|v| v.to_string())),
                ("gamma", gamma.map(|v| v.to_string())),
                ("runs", runs.map(|v| v.to_string())),
                ("seed", seed.map(|v| v.to_string())),
            ];
            for (key, value) in overrides {
                if let Some(v) = value {
                    cfg.set(key, &v)?;
                }
            }
            cfg.validate()?;
            let outcome = run_experiment(&cfg)?;
            for f in &outcome.diverged {
                eprintln!("trial {} diverged at iteration {}", f.trial, f.iteration);
            }
            match out {
                Some(path) => {
                    outcome.curve.write_csv(&path)?;
                    eprintln!(
                        "{}: {} runs averaged, {} diverged, {} points -> {}",
                        cfg.algorithm,
                        outcome.curve.runs,
                        outcome.diverged.len(),
                        outcome.curve.len(),
                        path.display()
                    );
                }
                None => print!("{}", outcome.curve.to_csv()),
            }
        }
        Command::DesignBank { bands, length, atten, out } => {
            let proto = design_prototype(bands, length, atten)?;
            let edge = proto.stopband_edge(atten, DESIGN_GRID);
            let bank = modulate(&proto, bands);
            write_prototype(&out, &proto, bands)?;
            println!(
                "N={bands} L={length}: stopband attenuation {:.2} dB from {edge:.4} rad, power-complementarity error {:.4}",
                bank.stopband_attenuation_db(edge, DESIGN_GRID),
                bank.power_complementarity_error(DESIGN_GRID)
            );
        }
        Command::SynthSystem { taps, kind, chi, active_taps, seed, out } => {
            let shape = SystemShape { active_taps, ..SystemShape::default() };
            let system = synth_system_seeded(taps, kind, chi, shape, seed)?;
            write_system(&out, &system)?;
            println!("{kind} system, M={taps}, chi={:.4}", system.sparseness());
        }
        Command::Chi { input } => {
            println!("{:.6}", read_system(&input)?.sparseness());
        }
    }
    Ok(())
}
