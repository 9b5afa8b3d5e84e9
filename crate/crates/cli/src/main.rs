//! `sensegen` command-line tool: synthesize data, train the generator and
//! discriminator, sample traces and score them.

mod commands;
mod config;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Settings;
use failure::Failure;

#[derive(Parser)]
#[command(name = "sensegen", version, about = "Synthetic sensor trace generator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic column file (sine, ar1 or bimodal).
    SynthData(Flags),
    /// Train the mixture-density generator on a data file.
    TrainGen(Flags),
    /// Train the discriminator on real and fake files.
    TrainDisc(Flags),
    /// Alternate discriminator and generator phases.
    Alternate(Flags),
    /// Sample traces from a generator checkpoint.
    Generate(Flags),
    /// Score real and fake files with a discriminator checkpoint.
    Evaluate(Flags),
}

#[derive(clap::Args)]
struct Flags {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Generator epochs per phase; discriminator epochs for train-disc.
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    rounds: Option<usize>,
    /// Truncated BPTT length for train-gen; discriminator window otherwise.
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    mixtures: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    real: Option<PathBuf>,
    #[arg(long)]
    fake: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    length: Option<usize>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    kind: Option<String>,
    /// Any config key, as KEY=VALUE. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Flags {
    fn settings(&self, train_gen: bool, train_disc: bool) -> Result<Settings, Failure> {
        let mut s = match &self.config {
            Some(p) => Settings::load(p)?,
            None => Settings::default(),
        };
        for pair in &self.set {
            s.set_pair(pair)?;
        }
        let path = |p: &PathBuf| p.display().to_string();
        let epochs_key = if train_disc { "d_epochs" } else { "g_epochs" };
        let window_key = if train_gen { "tbptt_window" } else { "window_len" };
        let overrides = [
            ("seed", self.seed.map(|v| v.to_string())),
            (epochs_key, self.epochs.map(|v| v.to_string())),
            ("rounds", self.rounds.map(|v| v.to_string())),
            (window_key, self.window.map(|v| v.to_string())),
            ("mixtures", self.mixtures.map(|v| v.to_string())),
            ("out", self.out.as_ref().map(path)),
            ("data", self.data.as_ref().map(path)),
            ("real", self.real.as_ref().map(path)),
            ("fake", self.fake.as_ref().map(path)),
            ("checkpoint", self.checkpoint.as_ref().map(path)),
            ("length", self.length.map(|v| v.to_string())),
            ("count", self.count.map(|v| v.to_string())),
            ("kind", self.kind.clone()),
        ];
        for (k, v) in overrides {
            if let Some(v) = v {
                s.set(k, &v)?;
            }
        }
        Ok(s)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::SynthData(f) => commands::synth_data(&f.settings(false, false)?),
        Command::TrainGen(f) => commands::train_gen(&f.settings(true, false)?),
        Command::TrainDisc(f) => commands::train_disc(&f.settings(false, true)?),
        Command::Alternate(f) => commands::alternate(&f.settings(false, false)?),
        Command::Generate(f) => commands::generate(&f.settings(false, false)?),
        Command::Evaluate(f) => commands::evaluate(&f.settings(false, false)?),
    }
}

fn main() -> ExitCode {
    let level = std::env::var("SENSEGEN_LOG").unwrap_or_else(|_| "info".into());
    env_logger::Builder::new()
        .parse_filters(&level)
        .format_timestamp(None)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
