use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use medirl_cli::{cmd_eval, cmd_rollout, cmd_synth, cmd_train, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "medirl", version, about = "Driver-attention scanpaths from maximum-entropy deep IRL")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic scenes with expert fixations.
    Synth(Flags),
    /// Train a reward network on a dataset.
    Train(Flags),
    /// Score policy saliency against ground-truth attention.
    Eval(Flags),
    /// Generate scanpaths and saliency maps.
    Rollout(Flags),
}

#[derive(Args)]
struct Flags {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<u32>,
    #[arg(long)]
    scenes: Option<usize>,
    #[arg(long)]
    frames: Option<usize>,
    /// Disable a feature group (X, Y, G, M, D, Q or v); repeatable.
    #[arg(long = "toggle-off", value_name = "GROUP")]
    toggle_off: Vec<String>,
}

impl Flags {
    fn resolve(&self) -> medirl_core::Result<RunConfig> {
        let o = Overrides {
            seed: self.seed,
            out: self.out.clone(),
            data: self.data.clone(),
            checkpoint: self.checkpoint.clone(),
            epochs: self.epochs,
            scenes: self.scenes,
            frames: self.frames,
            toggle_off: self.toggle_off.clone(),
        };
        RunConfig::resolve(self.config.as_deref(), &o)
    }
}

fn run(cli: Cli) -> medirl_core::Result<String> {
    match cli.command {
        Command::Synth(f) => {
            let s = cmd_synth(&f.resolve()?)?;
            Ok(format!("synth: {} scenes, {} fixations", s.scenes.len(), s.fixations))
        }
        Command::Train(f) => {
            let s = cmd_train(&f.resolve()?)?;
            let nll = s.history.epochs.last().map_or(f64::NAN, |e| e.nll);
            Ok(format!(
                "train: {} windows, {} sequences, {} epochs, final nll {nll:.4}, checkpoint {}",
                s.gates.windows_kept,
                s.gates.sequences_kept,
                s.history.epochs.len(),
                s.checkpoint.display()
            ))
        }
        Command::Eval(f) => {
            let r = cmd_eval(&f.resolve()?)?;
            let a = &r.aggregate;
            Ok(format!(
                "eval: {} frames, kld {:.4}, cc {:.4}, s-auc {:.4}, f-beta {:.4}",
                r.frames_evaluated, a.kld, a.cc, a.sauc, a.f_beta
            ))
        }
        Command::Rollout(f) => {
            let s = cmd_rollout(&f.resolve()?)?;
            Ok(format!("rollout: {} scenes, {} fixations", s.scenes, s.fixations))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("medirl-error: {}: {msg}", e.category());
            ExitCode::from(2)
        }
    }
}
