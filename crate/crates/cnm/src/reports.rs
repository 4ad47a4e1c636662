//! Training logs, metric reports, grid tables and audit reports.
//!
//! Every report comes as a tab-separated table with a one-line header and
//! as JSON lines.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use cnm_core::evaluation::{MetricReport, QuestionMetrics};
use cnm_core::metrics_lab::{CaseOrigin, MetricAuditReport};
use cnm_core::trainer::{EpochRecord, GridResult};
use serde::{Deserialize, Serialize};

use crate::checkpoint::{field_name, mixture_name};
use crate::error::{CliError, Result};

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    crate::error::require_path(path)?;
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn json_lines<T: Serialize>(items: impl IntoIterator<Item = T>) -> String {
    let mut s = String::new();
    for item in items {
        s.push_str(&serde_json::to_string(&item).expect("report records serialise"));
        s.push('\n');
    }
    s
}

fn parse_json_lines<T: for<'de> Deserialize<'de>>(text: &str, origin: &Path) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| CliError::parse(origin, i + 1, e.to_string())))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub epoch: usize,
    pub batches: usize,
    pub loss: Option<f64>,
    pub dev_map: f64,
    pub dev_mrr: f64,
}

impl From<&EpochRecord> for LogRecord {
    fn from(r: &EpochRecord) -> Self {
        Self {
            epoch: r.epoch,
            batches: r.batches,
            loss: r.loss,
            dev_map: r.dev_map,
            dev_mrr: r.dev_mrr,
        }
    }
}

pub fn log_line(r: &EpochRecord) -> String {
    json_lines([LogRecord::from(r)])
}

pub fn read_training_log(path: &Path) -> Result<Vec<LogRecord>> {
    parse_json_lines(&read_file(path)?, path)
}

/// One line of a machine-readable metric report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricRecord {
    Question {
        question_id: String,
        average_precision: f64,
        reciprocal_rank: f64,
    },
    Summary {
        split: String,
        questions: usize,
        map: f64,
        mrr: f64,
    },
}

pub fn metric_records(report: &MetricReport, split: &str) -> Vec<MetricRecord> {
    let mut out: Vec<MetricRecord> = report
        .per_question
        .iter()
        .map(|q| MetricRecord::Question {
            question_id: q.question_id.clone(),
            average_precision: q.average_precision,
            reciprocal_rank: q.reciprocal_rank,
        })
        .collect();
    out.push(MetricRecord::Summary {
        split: split.to_string(),
        questions: report.per_question.len(),
        map: report.map,
        mrr: report.mrr,
    });
    out
}

pub fn metric_jsonl(report: &MetricReport, split: &str) -> String {
    json_lines(metric_records(report, split))
}

/// Per-question table followed by an `ALL` row with MAP and MRR.
pub fn metric_tsv(report: &MetricReport) -> String {
    let mut s = String::from("question_id\taverage_precision\treciprocal_rank\n");
    for q in &report.per_question {
        let _ = writeln!(s, "{}\t{:?}\t{:?}", q.question_id, q.average_precision, q.reciprocal_rank);
    }
    let _ = writeln!(s, "ALL\t{:?}\t{:?}", report.map, report.mrr);
    s
}

/// Rebuilds a report from its JSON lines.
pub fn read_metric_jsonl(path: &Path) -> Result<MetricReport> {
    let records: Vec<MetricRecord> = parse_json_lines(&read_file(path)?, path)?;
    let mut per_question = Vec::new();
    let mut summary = None;
    for r in records {
        match r {
            MetricRecord::Question {
                question_id,
                average_precision,
                reciprocal_rank,
            } => per_question.push(QuestionMetrics {
                question_id,
                average_precision,
                reciprocal_rank,
            }),
            MetricRecord::Summary { map, mrr, .. } => summary = Some((map, mrr)),
        }
    }
    let (map, mrr) = summary.ok_or_else(|| CliError::parse(path, 0, "no summary record"))?;
    Ok(MetricReport { map, mrr, per_question })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRecord {
    pub index: usize,
    pub learning_rate: f64,
    pub l2_lambda: f64,
    pub batch_size: usize,
    pub k: usize,
    pub dev_map: f64,
    pub dev_mrr: f64,
    pub best_epoch: usize,
    pub best: bool,
}

pub fn grid_records(result: &GridResult) -> Vec<GridRecord> {
    result
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| GridRecord {
            index: i,
            learning_rate: r.config.learning_rate,
            l2_lambda: r.config.l2_lambda,
            batch_size: r.config.batch_size,
            k: r.config.k,
            dev_map: r.dev_map,
            dev_mrr: r.dev_mrr,
            best_epoch: r.best_epoch,
            best: i == result.best,
        })
        .collect()
}

pub fn grid_tsv(result: &GridResult) -> String {
    let mut s = String::from("index\tlearning_rate\tl2_lambda\tbatch_size\tk\tdev_map\tdev_mrr\tbest_epoch\tbest\n");
    for r in grid_records(result) {
        let _ = writeln!(
            s,
            "{}\t{:?}\t{:?}\t{}\t{}\t{:?}\t{:?}\t{}\t{}",
            r.index, r.learning_rate, r.l2_lambda, r.batch_size, r.k, r.dev_map, r.dev_mrr, r.best_epoch, r.best
        );
    }
    s
}

pub fn grid_jsonl(result: &GridResult) -> String {
    json_lines(grid_records(result))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub metric: String,
    pub axiom: String,
    pub holds: bool,
    pub checks: usize,
    pub violations: usize,
    pub worst_excess: Option<f64>,
    /// `trial <i> seed <s>` or `counterexample alpha <a>`.
    pub reproducer: Option<String>,
}

pub fn audit_records(reports: &[MetricAuditReport]) -> Vec<AuditRecord> {
    reports
        .iter()
        .flat_map(|r| {
            r.axioms.iter().map(move |a| AuditRecord {
                metric: r.metric.clone(),
                axiom: a.axiom.label().to_string(),
                holds: a.holds(),
                checks: a.checks,
                violations: a.violations,
                worst_excess: a.worst.as_ref().map(|w| w.excess),
                reproducer: a.worst.as_ref().map(|w| match w.origin {
                    CaseOrigin::Trial { seed, trial } => format!("trial {trial} seed {seed}"),
                    CaseOrigin::Counterexample { alpha } => format!("counterexample alpha {alpha}"),
                }),
            })
        })
        .collect()
}

pub fn audit_jsonl(reports: &[MetricAuditReport]) -> String {
    json_lines(audit_records(reports))
}

/// Header line describing a trained architecture, for human-readable output.
pub fn describe_model(model: &cnm_core::model::ModelConfig) -> String {
    format!(
        "mixture={} field={} windows={:?}",
        mixture_name(model.mixture),
        field_name(model.field),
        model.window_sizes
    )
}
