//! Command implementations behind the `cnm` binary. Each writes its
//! artifacts into an output directory and returns what it wrote.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use cnm_core::data::{build_vocab, encode, EncodedDataset, LoadStats};
use cnm_core::evaluation::{evaluate, MetricReport};
use cnm_core::metrics_lab::{audit_metric, audit_table, BuiltinMetric, MetricAuditReport};
use cnm_core::model::ParameterSet;
use cnm_core::text::Vocabulary;
use cnm_core::trainer::{grid_search, train, GridPools, GridResult, TrainOutcome, TrainerConfig};

use crate::checkpoint::Checkpoint;
use crate::config::RunSettings;
use crate::dataset::{load_tsv, write_canonical_tsv, FormatDescriptor};
use crate::error::{require_path, CliError, Result};
use crate::inspect::{self, MatchReport, MeasurementNeighbours, WordImportance};
use crate::reports::{self, write_file};
use crate::synthetic::{generate, SyntheticConfig};

pub const CHECKPOINT_FILE: &str = "checkpoint.cnm";
pub const TRAIN_LOG_FILE: &str = "train_log.jsonl";
pub const SETTINGS_FILE: &str = "settings.cfg";

/// Preset name (`canonical`, `wikiqa`) or a descriptor file; canonical
/// when absent.
pub fn resolve_format(spec: Option<&Path>) -> Result<FormatDescriptor> {
    let Some(p) = spec else {
        return Ok(FormatDescriptor::canonical());
    };
    if p.exists() {
        return FormatDescriptor::load(p);
    }
    p.to_str()
        .and_then(FormatDescriptor::preset)
        .ok_or_else(|| CliError::MissingPath(p.to_path_buf()))
}

/// Defaults, then the config file, then `key, value` overrides in order.
pub fn load_settings(config: Option<&Path>, overrides: &[(&str, String)]) -> Result<RunSettings> {
    let mut s = match config {
        Some(p) => RunSettings::load(p)?,
        None => RunSettings::default(),
    };
    for (k, v) in overrides {
        s.set(k, v).map_err(CliError::Config)?;
    }
    s.validate()?;
    Ok(s)
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn load_pretrained(vocab: &Vocabulary, settings: &RunSettings) -> Result<BTreeMap<String, Vec<f64>>> {
    match &settings.embeddings {
        Some(p) => crate::glove::load_for_vocab(p, vocab, settings.dim),
        None => Ok(BTreeMap::new()),
    }
}

/// Fresh parameters seeded by the trainer seed.
pub fn init_params(
    vocab: &Vocabulary,
    pretrained: &BTreeMap<String, Vec<f64>>,
    dim: usize,
    config: &TrainerConfig,
) -> cnm_core::Result<ParameterSet> {
    let mut rng = cnm_core::seeded_rng(config.seed);
    ParameterSet::init(vocab, pretrained, dim, config.k, config.field, &mut rng)
}

/// Training and dev splits encoded over the training vocabulary.
pub struct PreparedData {
    pub vocab: Vocabulary,
    pub train: EncodedDataset,
    pub dev: EncodedDataset,
    pub train_stats: LoadStats,
    pub dev_stats: LoadStats,
}

/// Loads both splits; without a dev file the training file doubles as dev.
pub fn prepare(settings: &RunSettings, dataset: &Path, dev: Option<&Path>, format: &FormatDescriptor) -> Result<PreparedData> {
    let (train_ds, train_stats) = load_tsv(dataset, format, "train")?;
    let (dev_ds, dev_stats) = match dev {
        Some(p) => load_tsv(p, format, "dev")?,
        None => (train_ds.clone(), train_stats),
    };
    let vocab = build_vocab(&[&train_ds]);
    Ok(PreparedData {
        train: encode(&train_ds, &vocab, settings.max_len)?,
        dev: encode(&dev_ds, &vocab, settings.max_len)?,
        vocab,
        train_stats,
        dev_stats,
    })
}

pub struct TrainArtifacts {
    pub checkpoint: PathBuf,
    pub log: PathBuf,
    pub outcome: TrainOutcome,
}

/// Trains and writes the best-dev checkpoint, the per-epoch log (epoch 0
/// is the untrained model) and the resolved settings.
pub fn cmd_train(settings: &RunSettings, dataset: &Path, dev: Option<&Path>, format: &FormatDescriptor, out: &Path) -> Result<TrainArtifacts> {
    let data = prepare(settings, dataset, dev, format)?;
    ensure_dir(out)?;
    let pretrained = load_pretrained(&data.vocab, settings)?;
    let init = init_params(&data.vocab, &pretrained, settings.dim, &settings.trainer)?;
    let outcome = train(&data.train, &data.dev, init, &settings.trainer)?;
    let checkpoint = out.join(CHECKPOINT_FILE);
    Checkpoint::new(data.vocab, outcome.best.clone(), settings.trainer.model_config()?)?.save(&checkpoint)?;
    let log = out.join(TRAIN_LOG_FILE);
    write_file(&log, &outcome.log.iter().map(reports::log_line).collect::<String>())?;
    write_file(&out.join(SETTINGS_FILE), &settings.to_text())?;
    Ok(TrainArtifacts { checkpoint, log, outcome })
}

/// Scores a split with a checkpoint. `expect_dim` rejects a checkpoint of
/// another embedding dimension.
pub fn cmd_eval(
    checkpoint: &Path,
    dataset: &Path,
    format: &FormatDescriptor,
    split: &str,
    max_len: usize,
    expect_dim: Option<usize>,
    out: &Path,
) -> Result<MetricReport> {
    let ckpt = Checkpoint::load(checkpoint)?;
    if let Some(d) = expect_dim {
        if d != ckpt.params.dim() {
            return Err(CliError::Config(format!(
                "checkpoint {} has dim {}, expected {d}",
                checkpoint.display(),
                ckpt.params.dim()
            )));
        }
    }
    let (ds, _) = load_tsv(dataset, format, split)?;
    let enc = encode(&ds, &ckpt.vocab, max_len)?;
    let report = evaluate(&enc, &ckpt.params, &ckpt.model)?;
    ensure_dir(out)?;
    write_file(&out.join(format!("metrics_{split}.tsv")), &reports::metric_tsv(&report))?;
    write_file(&out.join(format!("metrics_{split}.jsonl")), &reports::metric_jsonl(&report, split))?;
    Ok(report)
}

pub fn cmd_grid_search(
    settings: &RunSettings,
    pools: &GridPools,
    dataset: &Path,
    dev: Option<&Path>,
    format: &FormatDescriptor,
    limit: Option<usize>,
    out: &Path,
) -> Result<GridResult> {
    let data = prepare(settings, dataset, dev, format)?;
    ensure_dir(out)?;
    let pretrained = load_pretrained(&data.vocab, settings)?;
    let result = grid_search(&data.train, &data.dev, &settings.trainer, pools, limit, |c| {
        init_params(&data.vocab, &pretrained, settings.dim, c)
    })?;
    write_file(&out.join("grid.tsv"), &reports::grid_tsv(&result))?;
    write_file(&out.join("grid.jsonl"), &reports::grid_jsonl(&result))?;
    Ok(result)
}

pub fn cmd_inspect_words(checkpoint: &Path, top_n: usize, out: &Path) -> Result<Vec<WordImportance>> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let rows = inspect::word_importance(&ckpt, top_n);
    ensure_dir(out)?;
    write_file(&out.join("words.tsv"), &inspect::words_tsv(&rows))?;
    Ok(rows)
}

pub fn cmd_inspect_match(checkpoint: &Path, question: &str, answer: &str, max_len: usize, out: &Path) -> Result<MatchReport> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let report = inspect::match_report(&ckpt, question, answer, max_len)?;
    ensure_dir(out)?;
    write_file(&out.join("match.tsv"), &inspect::match_tsv(&report))?;
    write_file(
        &out.join("match.json"),
        &serde_json::to_string_pretty(&report).expect("match report serialises"),
    )?;
    Ok(report)
}

pub fn cmd_inspect_measurements(checkpoint: &Path, top_n: usize, out: &Path) -> Result<Vec<MeasurementNeighbours>> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let rows = inspect::measurement_neighbours(&ckpt, top_n)?;
    ensure_dir(out)?;
    write_file(&out.join("measurements.tsv"), &inspect::measurements_tsv(&rows))?;
    Ok(rows)
}

pub fn cmd_metric_audit(metrics: &[BuiltinMetric], trials: usize, dims: &[usize], seed: u64, out: &Path) -> Result<Vec<MetricAuditReport>> {
    if trials == 0 {
        return Err(CliError::Config("trials must be at least 1".into()));
    }
    let reports = metrics
        .iter()
        .map(|m| audit_metric(m, trials, dims, seed))
        .collect::<cnm_core::Result<Vec<_>>>()?;
    ensure_dir(out)?;
    write_file(&out.join("audit.txt"), &audit_table(&reports))?;
    write_file(&out.join("audit.jsonl"), &reports::audit_jsonl(&reports))?;
    Ok(reports)
}

/// Writes `train.tsv`, `dev.tsv` and `test.tsv` in the canonical layout.
pub fn cmd_synth(spec: &SyntheticConfig, dev_questions: usize, seed: u64, out: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out)?;
    let mut written = Vec::new();
    for (split, questions) in [("train", spec.questions), ("dev", dev_questions), ("test", dev_questions)] {
        let ds = generate(&SyntheticConfig { questions, ..spec.clone() }, split, seed)?;
        let path = out.join(format!("{split}.tsv"));
        write_canonical_tsv(&ds, &path)?;
        written.push(path);
    }
    Ok(written)
}

/// Checks that an input exists before any work starts.
pub fn require_all<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Result<()> {
    paths.into_iter().try_for_each(require_path)
}
