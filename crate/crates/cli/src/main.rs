mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use relcorpus::score::{Averaging, Scheme};

use commands::Run;
use config::{BackendKind, Format, PipelineConfig};

/// Repair, augment, export and score entity-tagged relation corpora.
#[derive(Parser)]
#[command(name = "relcorpus", version)]
struct Cli {
    /// TOML pipeline config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every seeded stage.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Format of written corpora (inputs are detected by extension).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Inputs {
    /// Input corpora: SemEval text, or JSONL when the name ends in `.jsonl`.
    inputs: Vec<PathBuf>,
}

#[derive(Args, Default)]
struct RepairArgs {
    /// JSONL replacement list (`{"id": .., "text": ..}` per line).
    #[arg(long)]
    replacements: Option<PathBuf>,
}

#[derive(Args, Default)]
struct AugmentArgs {
    /// Add one back-translated variant per sentence.
    #[arg(long)]
    backtranslate: bool,
    #[arg(long)]
    deletions: Option<usize>,
    #[arg(long)]
    swaps: Option<usize>,
    #[arg(long, value_enum)]
    backend: Option<BackendKind>,
    /// Append translations to this transcript.
    #[arg(long)]
    record: Option<PathBuf>,
    /// Answer translations from this transcript only.
    #[arg(long)]
    replay: Option<PathBuf>,
}

#[derive(Args, Default)]
struct ExportArgs {
    /// Token limit for marked text, counted after marker insertion.
    #[arg(long)]
    max_tokens: Option<usize>,
    /// Export full sentences without truncation.
    #[arg(long, conflicts_with = "max_tokens")]
    no_truncate: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and bind tagged sentences into a clean corpus.
    Parse(Inputs),
    /// List tag faults per sentence.
    Validate {
        #[command(flatten)]
        inputs: Inputs,
        /// Exit with status 1 when any fault is found.
        #[arg(long)]
        strict: bool,
    },
    /// Apply replacements, repair swapped closing tags, drop faulty sentences.
    Repair {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        args: RepairArgs,
    },
    /// Add seeded deletion/swap and back-translation variants.
    Augment {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        args: AugmentArgs,
    },
    /// Write entity-marked text for classifier training.
    Export {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        args: ExportArgs,
    },
    /// Score predictions against gold labels.
    Score {
        /// Gold corpus; `--pred` is then `id<TAB>label` lines. Without it,
        /// `--pred` is JSONL with `id`, `gold` and `pred` fields.
        #[arg(long)]
        gold: Option<PathBuf>,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, value_enum)]
        scheme: Option<SchemeArg>,
        #[arg(long, value_enum)]
        averaging: Option<AveragingArg>,
        /// Average over all relation classes, including absent ones.
        #[arg(long)]
        include_empty_classes: bool,
    },
    /// Run repair, augment and export in sequence.
    Pipeline {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        repair: RepairArgs,
        #[command(flatten)]
        augment: AugmentArgs,
        #[command(flatten)]
        export: ExportArgs,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum SchemeArg {
    Way18,
    Way9Directed,
    Way9Undirected,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum AveragingArg {
    Micro,
    Macro,
}

fn apply_inputs(config: &mut PipelineConfig, inputs: Inputs) {
    if !inputs.inputs.is_empty() {
        config.inputs = inputs.inputs;
    }
}

fn apply_repair(config: &mut PipelineConfig, args: RepairArgs) {
    if args.replacements.is_some() {
        config.replacements = args.replacements;
    }
}

fn apply_augment(config: &mut PipelineConfig, args: AugmentArgs) {
    let a = &mut config.augment;
    a.backtranslate |= args.backtranslate;
    if let Some(n) = args.deletions {
        a.deletions_per_sentence = n;
    }
    if let Some(n) = args.swaps {
        a.swaps_per_sentence = n;
    }
    let t = &mut config.translate;
    if let Some(b) = args.backend {
        t.backend = b;
    }
    if args.record.is_some() {
        t.record = args.record;
    }
    if args.replay.is_some() {
        t.replay = args.replay;
    }
}

fn apply_export(config: &mut PipelineConfig, args: ExportArgs) {
    if args.no_truncate {
        config.export.max_tokens = None;
    } else if args.max_tokens.is_some() {
        config.export.max_tokens = args.max_tokens;
    }
}

type Action = Box<dyn FnOnce(Run) -> Result<ExitCode>>;

fn run(cli: Cli) -> Result<ExitCode> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if cli.seed.is_some() {
        config.seed = cli.seed;
    }
    if let Some(out) = cli.out {
        config.out = out;
    }
    if let Some(format) = cli.format {
        config.format = format;
    }
    let args: Vec<String> = std::env::args().skip(1).collect();
    let started_at = chrono::Utc::now().to_rfc3339();
    let (name, action): (&'static str, Action) = match cli.command {
        Command::Parse(inputs) => {
            apply_inputs(&mut config, inputs);
            (
                "parse",
                Box::new(|r| commands::parse(r).map(|_| ExitCode::SUCCESS)),
            )
        }
        Command::Validate { inputs, strict } => {
            apply_inputs(&mut config, inputs);
            (
                "validate",
                Box::new(move |r| {
                    let faulty = commands::validate_cmd(r)?;
                    Ok(if strict && faulty {
                        ExitCode::FAILURE
                    } else {
                        ExitCode::SUCCESS
                    })
                }),
            )
        }
        Command::Repair { inputs, args } => {
            apply_inputs(&mut config, inputs);
            apply_repair(&mut config, args);
            (
                "repair",
                Box::new(|r| commands::repair(r).map(|_| ExitCode::SUCCESS)),
            )
        }
        Command::Augment { inputs, args } => {
            apply_inputs(&mut config, inputs);
            apply_augment(&mut config, args);
            (
                "augment",
                Box::new(|r| commands::augment(r).map(|_| ExitCode::SUCCESS)),
            )
        }
        Command::Export { inputs, args } => {
            apply_inputs(&mut config, inputs);
            apply_export(&mut config, args);
            (
                "export",
                Box::new(|r| commands::export(r).map(|_| ExitCode::SUCCESS)),
            )
        }
        Command::Score {
            gold,
            pred,
            scheme,
            averaging,
            include_empty_classes,
        } => {
            let s = &mut config.score;
            if let Some(scheme) = scheme {
                s.scheme = match scheme {
                    SchemeArg::Way18 => Scheme::Way18,
                    SchemeArg::Way9Directed => Scheme::Way9Directed,
                    SchemeArg::Way9Undirected => Scheme::Way9Undirected,
                };
            }
            if let Some(averaging) = averaging {
                s.averaging = match averaging {
                    AveragingArg::Micro => Averaging::Micro,
                    AveragingArg::Macro => Averaging::Macro,
                };
            }
            s.include_empty_classes |= include_empty_classes;
            config.inputs.clear();
            (
                "score",
                Box::new(move |r| commands::score_cmd(r, gold, pred).map(|_| ExitCode::SUCCESS)),
            )
        }
        Command::Pipeline {
            inputs,
            repair,
            augment,
            export,
        } => {
            apply_inputs(&mut config, inputs);
            apply_repair(&mut config, repair);
            apply_augment(&mut config, augment);
            apply_export(&mut config, export);
            (
                "pipeline",
                Box::new(|r| commands::pipeline(r).map(|_| ExitCode::SUCCESS)),
            )
        }
    };
    config.finalize()?;
    action(Run {
        command: name,
        args,
        config,
        started_at,
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
