use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cnm::commands::{self, load_settings, resolve_format};
use cnm::error::{CliError, Result};
use cnm::synthetic::SyntheticConfig;
use cnm_core::metrics_lab::BuiltinMetric;
use cnm_core::trainer::GridPools;

/// Complex-valued matching network: training, evaluation, interpretability
/// reports and density-matrix metric audits.
#[derive(Parser)]
#[command(name = "cnm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Data {
    /// Training (or evaluation) file.
    #[arg(long)]
    dataset: PathBuf,
    /// Dev file for model selection; defaults to the training file.
    #[arg(long)]
    dev: Option<PathBuf>,
    /// Format descriptor file, or a preset name: canonical, wikiqa.
    #[arg(long)]
    format: Option<PathBuf>,
}

/// Overrides for the settings file, one per trainer field.
#[derive(Args, Default)]
struct Settings {
    /// `key = value` settings file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    learning_rate: Option<String>,
    #[arg(long)]
    l2_lambda: Option<String>,
    #[arg(long)]
    batch_size: Option<String>,
    /// Number of measurements.
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    margin: Option<String>,
    #[arg(long)]
    dropout_rate: Option<String>,
    /// drop or keep: how --dropout-rate is read.
    #[arg(long)]
    dropout_mode: Option<String>,
    /// Comma-separated, ascending.
    #[arg(long)]
    window_sizes: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    /// sgd or adam.
    #[arg(long)]
    optimizer: Option<String>,
    /// local or global.
    #[arg(long)]
    mixture: Option<String>,
    /// complex or real.
    #[arg(long)]
    field: Option<String>,
    #[arg(long)]
    dim: Option<String>,
    #[arg(long)]
    max_len: Option<String>,
    /// GloVe-format vectors for amplitude initialisation.
    #[arg(long)]
    embeddings: Option<String>,
}

impl Settings {
    fn resolve(&self) -> Result<cnm::config::RunSettings> {
        let pairs = [
            ("seed", self.seed.map(|s| s.to_string())),
            ("learning_rate", self.learning_rate.clone()),
            ("l2_lambda", self.l2_lambda.clone()),
            ("batch_size", self.batch_size.clone()),
            ("k", self.k.clone()),
            ("margin", self.margin.clone()),
            ("dropout_rate", self.dropout_rate.clone()),
            ("dropout_mode", self.dropout_mode.clone()),
            ("window_sizes", self.window_sizes.clone()),
            ("epochs", self.epochs.clone()),
            ("optimizer", self.optimizer.clone()),
            ("mixture", self.mixture.clone()),
            ("field", self.field.clone()),
            ("dim", self.dim.clone()),
            ("max_len", self.max_len.clone()),
            ("embeddings", self.embeddings.clone()),
        ];
        let overrides: Vec<(&str, String)> = pairs.into_iter().filter_map(|(k, v)| v.map(|v| (k, v))).collect();
        load_settings(self.config.as_deref(), &overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write checkpoint, per-epoch log and settings.
    Train {
        #[command(flatten)]
        data: Data,
        #[command(flatten)]
        settings: Settings,
        #[arg(long, default_value = "cnm_out")]
        out: PathBuf,
    },
    /// Score a split with a checkpoint and write MAP/MRR reports.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        format: Option<PathBuf>,
        #[arg(long, default_value = "test")]
        split: String,
        #[arg(long, default_value_t = cnm::config::DEFAULT_MAX_LEN)]
        max_len: usize,
        /// Fail unless the checkpoint has this embedding dimension.
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, default_value = "cnm_out")]
        out: PathBuf,
    },
    /// Train every configuration of the hyperparameter grid.
    GridSearch {
        #[command(flatten)]
        data: Data,
        #[command(flatten)]
        settings: Settings,
        #[arg(long, value_delimiter = ',')]
        learning_rates: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        l2_lambdas: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        batch_sizes: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        measurement_counts: Option<Vec<usize>>,
        /// Only the first N configurations.
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long, default_value = "cnm_out")]
        out: PathBuf,
    },
    /// Rank words by the norm of their amplitude row.
    InspectWords {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 50)]
        top_n: usize,
        #[arg(long, default_value = "cnm_out")]
        out: PathBuf,
    },
    /// Word weights of the best matching windows of a sentence pair.
    InspectMatch {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        question: String,
        #[arg(long)]
        answer: String,
        #[arg(long, default_value_t = cnm::config::DEFAULT_MAX_LEN)]
        max_len: usize,
        #[arg(long, default_value = "cnm_out")]
        out: PathBuf,
    },
    /// Nearest words to each learned measurement.
    InspectMeasurements {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 10)]
        top_n: usize,
        #[arg(long, default_value = "cnm_out")]
        out: PathBuf,
    },
    /// Test density-matrix metrics against the metric axioms.
    MetricAudit {
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Comma-separated metric names; all built-in metrics by default.
        #[arg(long, value_delimiter = ',')]
        metrics: Option<Vec<String>>,
        #[arg(long, default_value = "cnm_out")]
        out: PathBuf,
    },
    /// Generate a synthetic factoid QA corpus (train/dev/test).
    Synth {
        #[arg(long, default_value_t = 200)]
        questions: usize,
        #[arg(long, default_value_t = 100)]
        dev_questions: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "cnm_out")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { data, settings, out } => {
            commands::require_all([data.dataset.as_path()].into_iter().chain(data.dev.as_deref()))?;
            let settings = settings.resolve()?;
            let format = resolve_format(data.format.as_deref())?;
            let a = commands::cmd_train(&settings, &data.dataset, data.dev.as_deref(), &format, &out)?;
            println!(
                "best epoch {} dev MAP {:.4} MRR {:.4}",
                a.outcome.best_epoch, a.outcome.best_dev_map, a.outcome.best_dev_mrr
            );
            println!("wrote {} and {}", a.checkpoint.display(), a.log.display());
        }
        Command::Eval {
            checkpoint,
            dataset,
            format,
            split,
            max_len,
            dim,
            out,
        } => {
            commands::require_all([checkpoint.as_path(), dataset.as_path()])?;
            let format = resolve_format(format.as_deref())?;
            let r = commands::cmd_eval(&checkpoint, &dataset, &format, &split, max_len, dim, &out)?;
            println!("{split}: MAP {:.4} MRR {:.4} over {} questions", r.map, r.mrr, r.per_question.len());
        }
        Command::GridSearch {
            data,
            settings,
            learning_rates,
            l2_lambdas,
            batch_sizes,
            measurement_counts,
            limit,
            out,
        } => {
            commands::require_all([data.dataset.as_path()].into_iter().chain(data.dev.as_deref()))?;
            let settings = settings.resolve()?;
            let format = resolve_format(data.format.as_deref())?;
            let standard = GridPools::standard();
            let pools = GridPools {
                learning_rates: learning_rates.unwrap_or(standard.learning_rates),
                l2_lambdas: l2_lambdas.unwrap_or(standard.l2_lambdas),
                batch_sizes: batch_sizes.unwrap_or(standard.batch_sizes),
                measurement_counts: measurement_counts.unwrap_or(standard.measurement_counts),
            };
            let r = commands::cmd_grid_search(&settings, &pools, &data.dataset, data.dev.as_deref(), &format, limit, &out)?;
            let best = &r.rows[r.best];
            println!(
                "{} configurations; best lr {} l2 {} batch {} k {}: dev MAP {:.4} MRR {:.4}",
                r.rows.len(),
                best.config.learning_rate,
                best.config.l2_lambda,
                best.config.batch_size,
                best.config.k,
                best.dev_map,
                best.dev_mrr
            );
        }
        Command::InspectWords { checkpoint, top_n, out } => {
            let rows = commands::cmd_inspect_words(&checkpoint, top_n, &out)?;
            print!("{}", cnm::inspect::words_tsv(&rows));
        }
        Command::InspectMatch {
            checkpoint,
            question,
            answer,
            max_len,
            out,
        } => {
            let r = commands::cmd_inspect_match(&checkpoint, &question, &answer, max_len, &out)?;
            println!("score {:.4}", r.score);
            print!("{}", cnm::inspect::match_tsv(&r));
        }
        Command::InspectMeasurements { checkpoint, top_n, out } => {
            let rows = commands::cmd_inspect_measurements(&checkpoint, top_n, &out)?;
            print!("{}", cnm::inspect::measurements_tsv(&rows));
        }
        Command::MetricAudit {
            trials,
            dims,
            seed,
            metrics,
            out,
        } => {
            let metrics = match metrics {
                None => BuiltinMetric::ALL.to_vec(),
                Some(names) => names
                    .iter()
                    .map(|n| BuiltinMetric::parse(n).ok_or_else(|| CliError::Config(format!("unknown metric {n:?}"))))
                    .collect::<Result<_>>()?,
            };
            let reports = commands::cmd_metric_audit(&metrics, trials, &dims, seed, &out)?;
            print!("{}", cnm_core::metrics_lab::audit_table(&reports));
        }
        Command::Synth {
            questions,
            dev_questions,
            seed,
            out,
        } => {
            let spec = SyntheticConfig {
                questions,
                ..Default::default()
            };
            for p in commands::cmd_synth(&spec, dev_questions, seed, &out)? {
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cnm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

