//! Command-line surface: `train`, `craft`, `evaluate`, `compare`.
//!
//! Every command is deterministic given its flags: all randomness flows
//! from explicit `--seed` values and reruns produce byte-identical
//! artifacts. Exit codes: 0 success, 2 validation error, 3 numeric
//! failure, 4 I/O error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::attacks::{craft_shift_invariant, craft_universal, AttackConfig, AttackKind};
use crate::autoencoder::{ArchName, AutoencoderArch, TrainConfig, TrainedAutoencoder};
use crate::channel::{noise_variance, perturbation_power};
use crate::evaluation::{compare_report, curves_from_csv, curves_to_csv};
use crate::experiment::{run_experiment, ExperimentConfig};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "aecomm",
    about = "Train autoencoder communication systems, craft adversarial perturbations, \
             and measure BLER robustness over AWGN channels",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train an autoencoder end to end and write the model JSON.
    Train(TrainArgs),
    /// Craft an adversarial perturbation against a (substitute) model.
    Craft(CraftArgs),
    /// Run the scenario sweeps of an experiment config and write one CSV.
    Evaluate(EvaluateArgs),
    /// Compare curves from an evaluation CSV: ratios and dominance flags.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Architecture: mlp or cnn.
    #[arg(long)]
    pub arch: ArchName,
    /// Bits per message.
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    /// Channel uses per message.
    #[arg(long, default_value_t = 7)]
    pub n: usize,
    /// Training seed (required; there is no wall-clock seeding).
    #[arg(long)]
    pub seed: u64,
    /// Optimizer steps (one batch each).
    #[arg(long, default_value_t = 10_000)]
    pub epochs: usize,
    #[arg(long, default_value_t = 256)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
    /// Channel Eb/N0 during training, in dB.
    #[arg(long, default_value_t = 7.0, allow_negative_numbers = true)]
    pub train_ebno_db: f64,
    /// Output model path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CraftArgs {
    /// Substitute model to craft against.
    #[arg(long)]
    pub model: PathBuf,
    /// Attack kind: universal or shift-invariant.
    #[arg(long)]
    pub kind: CraftKind,
    /// Perturbation-to-signal ratio in dB; sets the power budget.
    #[arg(long, allow_negative_numbers = true)]
    pub psr_db: f64,
    /// Channel Eb/N0 assumed while crafting, in dB.
    #[arg(long, default_value_t = 7.0, allow_negative_numbers = true)]
    pub ebno_db: f64,
    /// Crafting seed (required).
    #[arg(long)]
    pub seed: u64,
    /// Iterations of the universal-perturbation loop.
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    /// Candidate pool size I for shift-invariant crafting.
    #[arg(long, default_value_t = 100)]
    pub pool: usize,
    /// Candidates t kept for the SVD.
    #[arg(long, default_value_t = 10)]
    pub keep: usize,
    /// Monte Carlo trials per candidate during screening.
    #[arg(long, default_value_t = 2000)]
    pub screen_trials: usize,
    /// Keep the t candidates with the lowest shifted BLER (literal
    /// algorithm reading) instead of the highest.
    #[arg(long, default_value_t = false)]
    pub select_lowest_bler: bool,
    /// Output perturbation path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CraftKind {
    Universal,
    ShiftInvariant,
}

impl std::str::FromStr for CraftKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "universal" => Ok(CraftKind::Universal),
            "shift-invariant" => Ok(CraftKind::ShiftInvariant),
            other => Err(Error::Argument(format!(
                "unknown attack kind '{other}' (expected universal or shift-invariant)"
            ))),
        }
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Experiment config JSON.
    #[arg(long)]
    pub config: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
    /// Cap on worker threads; results are thread-count-invariant.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Re-serialize the parsed config to this path (round-trip check).
    #[arg(long)]
    pub dump_config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Evaluation CSV produced by `evaluate`.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Comma-separated scenario-id pairs, e.g. "adv:jam,adv:clean".
    #[arg(long)]
    pub pairs: String,
    /// Optional machine-readable JSON report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs a parsed command.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => cmd_train(&args),
        Command::Craft(args) => cmd_craft(&args),
        Command::Evaluate(args) => cmd_evaluate(&args),
        Command::Compare(args) => cmd_compare(&args),
    }
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let arch = AutoencoderArch::build(args.arch, args.k, args.n)?;
    let config = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch_size,
        learning_rate: args.learning_rate,
        train_ebno_db: args.train_ebno_db,
        seed: args.seed,
    };
    let model = crate::autoencoder::train(&arch, &config)?;
    let final_loss = model.loss_history.last().copied().unwrap_or(f64::NAN);
    let accuracy = model.clean_accuracy()?;
    model.save(&args.out)?;
    println!(
        "trained {} (k={}, n={}) in {} epochs; final loss {final_loss:.6}; \
         clean-channel accuracy {:.1}% ({}/{} messages); wrote {}",
        args.arch,
        args.k,
        args.n,
        args.epochs,
        accuracy * 100.0,
        (accuracy * arch.message_count() as f64).round() as usize,
        arch.message_count(),
        args.out.display()
    );
    Ok(())
}

fn cmd_craft(args: &CraftArgs) -> Result<()> {
    let model = TrainedAutoencoder::load(&args.model)?;
    let sigma2 = noise_variance(args.ebno_db, model.arch.k, model.arch.n);
    let p_power = perturbation_power(args.psr_db, model.arch.n as f64);
    let config = AttackConfig {
        number_of_samples: args.samples,
        pool_size: args.pool,
        keep_count: args.keep,
        screening_trials: args.screen_trials,
        select_lowest_bler: args.select_lowest_bler,
        line_search_points: 25,
        line_search_span: 1e-3,
        seed: args.seed,
    };
    let perturbation = match args.kind {
        CraftKind::Universal => craft_universal(&model, p_power, sigma2, &config)?,
        CraftKind::ShiftInvariant => craft_shift_invariant(&model, p_power, sigma2, &config)?,
    };
    perturbation.save(&args.out)?;
    let norm_sq: f64 = perturbation.vector.iter().map(|v| v * v).sum();
    let kind = match perturbation.provenance.attack {
        AttackKind::Universal => "universal",
        AttackKind::ShiftInvariant => "shift-invariant",
    };
    println!(
        "crafted {kind} perturbation against {} at PSR {} dB: \
         ||p||^2 = {norm_sq:.6} (budget {p_power:.6}); wrote {}",
        perturbation.provenance.substitute_model,
        args.psr_db,
        args.out.display()
    );
    if perturbation.provenance.warning_no_updates {
        eprintln!("warning: crafting loop applied no updates; the perturbation is zero");
    }
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    if let Some(threads) = args.threads {
        if threads == 0 {
            return Err(Error::Argument("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let config = ExperimentConfig::load(&args.config)?;
    if let Some(dump) = &args.dump_config {
        std::fs::write(dump, config.to_json()?)?;
    }
    let base = args
        .config
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let curves = run_experiment(&config, base)?;
    std::fs::write(&args.out, curves_to_csv(&curves))?;
    let points: usize = curves.iter().map(|c| c.points.len()).sum();
    println!(
        "evaluated {} scenarios ({points} BLER points); wrote {}",
        curves.len(),
        args.out.display()
    );
    Ok(())
}

fn parse_pairs(spec: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let Some((a, b)) = part.split_once(':') else {
            return Err(Error::Argument(format!(
                "bad pair '{part}' (expected 'scenarioA:scenarioB')"
            )));
        };
        pairs.push((a.trim().to_string(), b.trim().to_string()));
    }
    if pairs.is_empty() {
        return Err(Error::Argument("no comparison pairs given".into()));
    }
    Ok(pairs)
}

fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.input)?;
    let curves = curves_from_csv(&text)?;
    let pairs = parse_pairs(&args.pairs)?;
    let report = compare_report(&curves, &pairs)?;
    print!("{report}");
    if let Some(out) = &args.out {
        std::fs::write(out, serde_json::to_string_pretty(&report)?)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_spec_parsing() {
        assert_eq!(
            parse_pairs("a:b, c:d").unwrap(),
            vec![
                ("a".to_string(), "b".to_string()),
                ("c".to_string(), "d".to_string())
            ]
        );
        assert!(parse_pairs("ab").is_err());
        assert!(parse_pairs("").is_err());
    }

    #[test]
    fn craft_kind_parsing() {
        assert_eq!("universal".parse::<CraftKind>().unwrap(), CraftKind::Universal);
        assert_eq!(
            "shift-invariant".parse::<CraftKind>().unwrap(),
            CraftKind::ShiftInvariant
        );
        assert!("pgd".parse::<CraftKind>().is_err());
    }

    #[test]
    fn cli_requires_explicit_seeds() {
        use clap::Parser;
        let err = Cli::try_parse_from([
            "aecomm", "train", "--arch", "mlp", "--out", "m.json",
        ]);
        assert!(err.is_err());
        let ok = Cli::try_parse_from([
            "aecomm", "train", "--arch", "mlp", "--seed", "1", "--out", "m.json",
        ]);
        assert!(ok.is_ok());
    }
}
