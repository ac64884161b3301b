//! `disinfo`: run the analytics stages over a run directory of artifacts.
//!
//! Configuration comes from an optional TOML file, then `--set key=value`
//! overrides, then the dedicated flags; later sources win. Logs go to stderr,
//! the one-line stage summary to stdout.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use disinfo_core::classifier::Optimizer;
use disinfo_core::corpus::CorpusFormat;
use disinfo_core::llm::{QuantType, TaskKind};
use disinfo_core::pipeline::{run_stage, PipelineConfig, Stage};
use disinfo_core::trends::BinWidth;

#[derive(Parser)]
#[command(name = "disinfo", version, about = "Disinformation analytics pipeline")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML configuration file.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Override a config value by dotted key, e.g. `train.epochs=5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Global seed for every randomized stage.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory holding the artifacts and manifest.
    #[arg(long, global = true)]
    run_dir: Option<PathBuf>,
    /// Input corpus for `ingest`.
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Corpus file format.
    #[arg(long, global = true)]
    format: Option<CorpusFormat>,
    /// More log output (-v info, -vv debug); `RUST_LOG` takes precedence.
    #[arg(long, short, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Load, filter and label the corpus.
    Ingest {
        #[arg(long)]
        min_retweets: Option<usize>,
        /// Required term; repeatable, all must match.
        #[arg(long = "term")]
        terms: Vec<String>,
    },
    /// Thematic-field time series.
    Trends {
        /// Thematic term; repeatable, all must match.
        #[arg(long = "term")]
        terms: Vec<String>,
        #[arg(long)]
        bin: Option<BinWidth>,
    },
    /// Frequent itemsets, association rules and the semantic graph.
    Itemsets {
        #[arg(long)]
        min_support: Option<u64>,
        #[arg(long)]
        min_confidence: Option<f64>,
        #[arg(long)]
        max_len: Option<usize>,
    },
    /// User graph, communities, centralities and layout.
    Graph {
        #[arg(long)]
        walk_steps: Option<usize>,
    },
    /// Vocabulary, TF-IDF/SVD features and the train/validation split.
    Features {
        #[arg(long)]
        svd_k: Option<usize>,
        #[arg(long)]
        valid_fraction: Option<f64>,
    },
    /// Train the classifier.
    Train {
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        optimizer: Option<Optimizer>,
        #[arg(long)]
        batch_size: Option<usize>,
    },
    /// Validation metrics for the trained model.
    Eval {
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Send prompts to the LLM endpoint.
    Analyze {
        #[arg(long)]
        task: Option<TaskKind>,
        #[arg(long)]
        question: Option<String>,
        /// Plain-text document to analyse instead of the corpus.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long)]
        max_tweets: Option<usize>,
    },
    /// Parse entity-sentiment records out of LLM responses.
    ExtractEntities {
        /// Response text file or `analysis.jsonl`.
        #[arg(long)]
        responses: Option<PathBuf>,
        /// Entity for the sentiment feature vector; repeatable.
        #[arg(long = "entity")]
        registry: Vec<String>,
    },
    /// Write the fine-tuning configuration document.
    EmitConfig {
        #[arg(long)]
        model_name: Option<String>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        epochs: Option<u32>,
        #[arg(long)]
        max_seq_length: Option<u32>,
        #[arg(long)]
        quant_type: Option<QuantType>,
    },
    /// Generate a planted-amplification corpus.
    Synth {
        #[arg(long)]
        n_genuine: Option<usize>,
        #[arg(long)]
        n_fake: Option<usize>,
        /// Output corpus path.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// ingest, features, train and eval in order.
    Pipeline,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn configure(global: &Global, command: &Command) -> Result<(Stage, PipelineConfig)> {
    let mut cfg = match &global.config {
        Some(path) => PipelineConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => PipelineConfig::default(),
    };
    for o in &global.overrides {
        cfg.set(o)?;
    }
    set(&mut cfg.seed, global.seed);
    set(&mut cfg.paths.run_dir, global.run_dir.clone());
    set(&mut cfg.paths.format, global.format);
    if global.corpus.is_some() {
        cfg.paths.corpus = global.corpus.clone();
    }

    let stage = match command {
        Command::Ingest { min_retweets, terms } => {
            set(&mut cfg.filter.min_retweets, *min_retweets);
            if !terms.is_empty() {
                cfg.filter.terms = terms.clone();
            }
            Stage::Ingest
        }
        Command::Trends { terms, bin } => {
            if !terms.is_empty() {
                cfg.trends.terms = terms.clone();
            }
            set(&mut cfg.trends.bin, *bin);
            Stage::Trends
        }
        Command::Itemsets {
            min_support,
            min_confidence,
            max_len,
        } => {
            set(&mut cfg.itemsets.min_support, *min_support);
            set(&mut cfg.itemsets.min_confidence, *min_confidence);
            set(&mut cfg.itemsets.max_len, *max_len);
            Stage::Itemsets
        }
        Command::Graph { walk_steps } => {
            set(&mut cfg.graph.walk_steps, *walk_steps);
            Stage::Graph
        }
        Command::Features { svd_k, valid_fraction } => {
            set(&mut cfg.features.svd_k, *svd_k);
            set(&mut cfg.features.valid_fraction, *valid_fraction);
            Stage::Features
        }
        Command::Train {
            epochs,
            learning_rate,
            optimizer,
            batch_size,
        } => {
            set(&mut cfg.train.epochs, *epochs);
            set(&mut cfg.train.learning_rate, *learning_rate);
            set(&mut cfg.train.optimizer, *optimizer);
            set(&mut cfg.train.batch_size, *batch_size);
            Stage::Train
        }
        Command::Eval { threshold } => {
            set(&mut cfg.train.threshold, *threshold);
            Stage::Eval
        }
        Command::Analyze {
            task,
            question,
            input,
            endpoint,
            max_tweets,
        } => {
            set(&mut cfg.llm.task, *task);
            if question.is_some() {
                cfg.llm.question = question.clone();
            }
            if input.is_some() {
                cfg.llm.input = input.clone();
            }
            set(&mut cfg.llm.endpoint.base_url, endpoint.clone());
            set(&mut cfg.llm.max_tweets, *max_tweets);
            Stage::Analyze
        }
        Command::ExtractEntities { responses, registry } => {
            if responses.is_some() {
                cfg.llm.responses = responses.clone();
            }
            if !registry.is_empty() {
                cfg.features.entity_registry = registry.clone();
            }
            Stage::ExtractEntities
        }
        Command::EmitConfig {
            model_name,
            learning_rate,
            epochs,
            max_seq_length,
            quant_type,
        } => {
            let f = &mut cfg.finetune;
            f.model_name = model_name.clone().or(f.model_name.take());
            f.learning_rate = learning_rate.or(f.learning_rate);
            f.num_train_epochs = epochs.or(f.num_train_epochs);
            f.max_seq_length = max_seq_length.or(f.max_seq_length);
            f.quant_type = quant_type.or(f.quant_type);
            Stage::EmitConfig
        }
        Command::Synth {
            n_genuine,
            n_fake,
            output,
        } => {
            set(&mut cfg.synth.n_genuine, *n_genuine);
            set(&mut cfg.synth.n_fake, *n_fake);
            set(&mut cfg.synth.seed, global.seed);
            if output.is_some() {
                cfg.paths.synth_output = output.clone();
            }
            Stage::Synth
        }
        Command::Pipeline => Stage::Pipeline,
    };
    cfg.validate()?;
    Ok((stage, cfg))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();

    let result = configure(&cli.global, &cli.command).and_then(|(stage, cfg)| {
        log::info!("running {stage} in {}", cfg.paths.run_dir.display());
        run_stage(stage, &cfg).with_context(|| format!("stage {stage} failed"))
    });
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
