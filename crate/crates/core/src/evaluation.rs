//! Ranking metrics: mean average precision and mean reciprocal rank.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::data::EncodedDataset;
use crate::error::{Error, Result};
use crate::matcher::{cosine, represent};
use crate::model::{ModelConfig, ParameterSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedEntry {
    /// Position of the candidate in its question's file order.
    pub answer_id: usize,
    pub score: f64,
    pub label: u8,
}

/// Candidates of one question sorted by score, highest first. Equal scores
/// keep ascending `answer_id` order.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub question_id: String,
    pub entries: Vec<RankedEntry>,
}

impl RankedList {
    pub fn new(question_id: impl Into<String>, mut entries: Vec<RankedEntry>) -> Self {
        entries.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.answer_id.cmp(&b.answer_id)));
        Self {
            question_id: question_id.into(),
            entries,
        }
    }

    /// Builds a list from scores given in file order.
    pub fn from_scores(question_id: impl Into<String>, scores: &[f64], labels: &[u8]) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(crate::error::shape_err(
                "RankedList::from_scores",
                format!("{} labels", scores.len()),
                format!("{} labels", labels.len()),
            ));
        }
        let entries = scores
            .iter()
            .zip(labels)
            .enumerate()
            .map(|(answer_id, (&score, &label))| RankedEntry { answer_id, score, label })
            .collect();
        Ok(Self::new(question_id, entries))
    }

    fn positives(&self) -> usize {
        self.entries.iter().filter(|e| e.label == 1).count()
    }
}

/// Mean of precision@k over the ranks `k` of the relevant candidates.
pub fn average_precision(list: &RankedList) -> Result<f64> {
    let total = list.positives();
    if total == 0 {
        return Err(Error::Domain(format!("question {} has no relevant answer", list.question_id)));
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, e) in list.entries.iter().enumerate() {
        if e.label == 1 {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(sum / total as f64)
}

/// Inverse rank of the first relevant candidate.
pub fn reciprocal_rank(list: &RankedList) -> Result<f64> {
    list.entries
        .iter()
        .position(|e| e.label == 1)
        .map(|p| 1.0 / (p + 1) as f64)
        .ok_or_else(|| Error::Domain(format!("question {} has no relevant answer", list.question_id)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuestionMetrics {
    pub question_id: String,
    pub average_precision: f64,
    pub reciprocal_rank: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub map: f64,
    pub mrr: f64,
    pub per_question: Vec<QuestionMetrics>,
}

/// Averages AP and RR over the ranked lists.
pub fn summarize(lists: &[RankedList]) -> Result<MetricReport> {
    if lists.is_empty() {
        return Err(Error::Data("cannot evaluate an empty question set".into()));
    }
    let per_question = lists
        .iter()
        .map(|l| {
            Ok(QuestionMetrics {
                question_id: l.question_id.clone(),
                average_precision: average_precision(l)?,
                reciprocal_rank: reciprocal_rank(l)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = per_question.len() as f64;
    Ok(MetricReport {
        map: per_question.iter().map(|q| q.average_precision).sum::<f64>() / n,
        mrr: per_question.iter().map(|q| q.reciprocal_rank).sum::<f64>() / n,
        per_question,
    })
}

/// Scores every candidate against its question in eval mode.
pub fn rank_dataset(dataset: &EncodedDataset, params: &ParameterSet, config: &ModelConfig) -> Result<Vec<RankedList>> {
    dataset
        .questions
        .iter()
        .map(|q| {
            let qr = represent(&q.tokens, params, config)?;
            let mut scores = Vec::with_capacity(q.candidates.len());
            for c in &q.candidates {
                let ar = represent(&c.tokens, params, config)?;
                scores.push(cosine(&qr.pooled, &ar.pooled)?);
            }
            let labels: Vec<u8> = q.candidates.iter().map(|c| c.label).collect();
            RankedList::from_scores(q.id.clone(), &scores, &labels)
        })
        .collect()
}

pub fn evaluate(dataset: &EncodedDataset, params: &ParameterSet, config: &ModelConfig) -> Result<MetricReport> {
    summarize(&rank_dataset(dataset, params, config)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list(scores: &[f64], labels: &[u8]) -> RankedList {
        RankedList::from_scores("q", scores, labels).unwrap()
    }

    #[test]
    fn single_relevant_at_rank_two() {
        let l = list(&[0.9, 0.8, 0.1], &[0, 1, 0]);
        assert_eq!(average_precision(&l).unwrap(), 0.5);
        assert_eq!(reciprocal_rank(&l).unwrap(), 0.5);
    }

    #[test]
    fn two_relevant() {
        let l = list(&[0.9, 0.8, 0.7, 0.6], &[1, 0, 1, 0]);
        assert!((average_precision(&l).unwrap() - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
        assert_eq!(reciprocal_rank(&l).unwrap(), 1.0);
    }

    #[test]
    fn ties_resolve_by_answer_id() {
        let l = list(&[0.5, 0.5, 0.5], &[0, 0, 1]);
        assert_eq!(l.entries.iter().map(|e| e.answer_id).collect::<Vec<_>>(), [0, 1, 2]);
        assert!((reciprocal_rank(&l).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn no_relevant_is_domain_error() {
        assert!(matches!(average_precision(&list(&[0.1], &[0])), Err(Error::Domain(_))));
    }

    #[test]
    fn summary_means() {
        let r = summarize(&[list(&[0.9, 0.1], &[1, 0]), list(&[0.9, 0.1], &[0, 1])]).unwrap();
        assert_eq!(r.map, 0.75);
        assert_eq!(r.mrr, 0.75);
        assert!(summarize(&[]).is_err());
    }
}
