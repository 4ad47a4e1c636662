//! Interpretability reports over a trained checkpoint: word importance,
//! matching windows and measurement neighbourhoods.

use std::fmt::Write as _;

use cnm_core::autograd::{forward, SentenceTape};
use cnm_core::linalg::inner_slices;
use cnm_core::matcher::word_states;
use cnm_core::text::{tokenize, PAD_INDEX};
use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordImportance {
    pub rank: usize,
    pub token: String,
    /// L2 norm of the amplitude row.
    pub norm: f64,
}

/// Words ordered by amplitude norm, largest first; ties keep index order.
pub fn word_importance(ckpt: &Checkpoint, top_n: usize) -> Vec<WordImportance> {
    let amps = &ckpt.params.amplitudes;
    let mut rows: Vec<(usize, f64)> = (0..amps.rows())
        .map(|i| (i, amps.row(i).iter().map(|x| x * x).sum::<f64>().sqrt()))
        .collect();
    rows.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    rows.into_iter()
        .take(top_n)
        .enumerate()
        .map(|(rank, (i, norm))| WordImportance {
            rank: rank + 1,
            token: ckpt.vocab.tokens()[i].clone(),
            norm,
        })
        .collect()
}

pub fn words_tsv(rows: &[WordImportance]) -> String {
    let mut s = String::from("rank\ttoken\tnorm\n");
    for r in rows {
        let _ = writeln!(s, "{}\t{}\t{:?}", r.rank, r.token, r.norm);
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedWindow {
    pub start: usize,
    pub end: usize,
    /// `(token, mixture weight)` for each word of the window.
    pub words: Vec<(String, f64)>,
}

/// The question/answer window pair that contributes most to the cosine
/// score within one pooled block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockMatch {
    /// Window length, or 0 for a global mixture.
    pub window_size: usize,
    pub question: WeightedWindow,
    pub answer: WeightedWindow,
    /// Summed cosine terms of the measurements both windows win.
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub score: f64,
    pub blocks: Vec<BlockMatch>,
}

fn encode_text(ckpt: &Checkpoint, text: &str, max_len: usize) -> Result<(Vec<String>, Vec<u32>)> {
    let mut toks = tokenize(text);
    toks.truncate(max_len);
    if toks.is_empty() {
        return Err(CliError::Config(format!("sentence {text:?} has no tokens")));
    }
    let ids = ckpt.vocab.encode(&toks)?;
    Ok((toks, ids))
}

fn eval_tape(ckpt: &Checkpoint, tokens: &[u32]) -> Result<SentenceTape> {
    let mut rng = cnm_core::seeded_rng(0);
    Ok(forward(tokens, &ckpt.params, &ckpt.model, &mut rng, false)?)
}

fn weighted(tape: &SentenceTape, words: &[String], block: usize, window: usize) -> WeightedWindow {
    let (&(start, end), weights) = tape.window_weights(block, window).expect("window from argmax exists");
    WeightedWindow {
        start,
        end,
        words: words[start..end].iter().cloned().zip(weights.iter().copied()).collect(),
    }
}

/// Cosine terms `q_j a_j / (|q| |a|)` summed per winning window pair.
pub fn window_pair_contributions(q: &SentenceTape, a: &SentenceTape, block: usize, k: usize) -> Vec<((usize, usize), f64)> {
    let (qr, ar) = (&q.representation, &a.representation);
    let nq = qr.iter().map(|x| x * x).sum::<f64>().sqrt();
    let na = ar.iter().map(|x| x * x).sum::<f64>().sqrt();
    let denom = nq * na;
    let (qa, aa) = (q.argmax(block).unwrap_or(&[]), a.argmax(block).unwrap_or(&[]));
    let mut pairs: Vec<((usize, usize), f64)> = Vec::new();
    for j in 0..k {
        let idx = block * k + j;
        let term = if denom > 0.0 { qr[idx] * ar[idx] / denom } else { 0.0 };
        let key = (qa[j], aa[j]);
        match pairs.iter_mut().find(|(p, _)| *p == key) {
            Some((_, v)) => *v += term,
            None => pairs.push((key, term)),
        }
    }
    pairs.sort_by_key(|(p, _)| *p);
    pairs
}

pub fn match_report(ckpt: &Checkpoint, question: &str, answer: &str, max_len: usize) -> Result<MatchReport> {
    let (qw, qt) = encode_text(ckpt, question, max_len)?;
    let (aw, at) = encode_text(ckpt, answer, max_len)?;
    let q = eval_tape(ckpt, &qt)?;
    let a = eval_tape(ckpt, &at)?;
    let score = cnm_core::matcher::cosine(&q.representation, &a.representation)?;
    let k = ckpt.params.measurement_count();
    let sizes: Vec<usize> = match ckpt.model.mixture {
        cnm_core::model::MixtureKind::Local => ckpt.model.window_sizes.clone(),
        cnm_core::model::MixtureKind::Global => vec![0],
    };
    let blocks = sizes
        .iter()
        .enumerate()
        .map(|(b, &window_size)| {
            let pairs = window_pair_contributions(&q, &a, b, k);
            // first maximum in (question, answer) window order
            let ((qi, ai), contribution) = pairs
                .iter()
                .copied()
                .reduce(|best, p| if p.1 > best.1 { p } else { best })
                .expect("k is positive");
            BlockMatch {
                window_size,
                question: weighted(&q, &qw, b, qi),
                answer: weighted(&a, &aw, b, ai),
                contribution,
            }
        })
        .collect();
    Ok(MatchReport { score, blocks })
}

fn render_window(w: &WeightedWindow) -> String {
    w.words
        .iter()
        .map(|(t, x)| format!("{t}:{x:.4}"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn match_tsv(report: &MatchReport) -> String {
    let mut s = String::from("window_size\tside\tstart\tend\tweighted_words\tcontribution\n");
    for b in &report.blocks {
        for (side, w) in [("question", &b.question), ("answer", &b.answer)] {
            let _ = writeln!(
                s,
                "{}\t{side}\t{}\t{}\t{}\t{:?}",
                b.window_size,
                w.start,
                w.end,
                render_window(w),
                b.contribution
            );
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementNeighbours {
    pub measurement: usize,
    /// `(token, |<v|u_w>|)`, most similar first.
    pub words: Vec<(String, f64)>,
}

/// Nearest words to each measurement by the modulus of the Hermitian inner
/// product with the word's unit state. The padding token is skipped.
pub fn measurement_neighbours(ckpt: &Checkpoint, top_n: usize) -> Result<Vec<MeasurementNeighbours>> {
    let ids: Vec<u32> = (0..ckpt.params.vocab_size() as u32).filter(|&i| i != PAD_INDEX).collect();
    let states = word_states(&ids, &ckpt.params, ckpt.model.field)?;
    let m = &ckpt.params.measurements;
    Ok((0..m.count())
        .map(|i| {
            let v = m.row(i);
            let mut sims: Vec<(u32, f64)> = ids
                .iter()
                .zip(&states)
                .map(|(&w, s)| (w, inner_slices(v, s.state.as_slice()).norm()))
                .collect();
            sims.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            MeasurementNeighbours {
                measurement: i,
                words: sims
                    .into_iter()
                    .take(top_n)
                    .map(|(w, s)| (ckpt.vocab.tokens()[w as usize].clone(), s))
                    .collect(),
            }
        })
        .collect())
}

pub fn measurements_tsv(rows: &[MeasurementNeighbours]) -> String {
    let mut s = String::from("measurement\trank\ttoken\tsimilarity\n");
    for r in rows {
        for (rank, (t, x)) in r.words.iter().enumerate() {
            let _ = writeln!(s, "{}\t{}\t{t}\t{x:?}", r.measurement, rank + 1);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use cnm_core::model::{Field, ModelConfig, ParameterSet};
    use cnm_core::text::Vocabulary;
    use std::collections::BTreeMap;

    fn toy(words: &[&str], k: usize) -> Checkpoint {
        let vocab = Vocabulary::from_tokens(words.iter().copied()).unwrap();
        let mut rng = cnm_core::seeded_rng(3);
        let params = ParameterSet::init(&vocab, &BTreeMap::new(), 4, k, Field::Complex, &mut rng).unwrap();
        Checkpoint::new(vocab, params, ModelConfig::default()).unwrap()
    }

    #[test]
    fn zeroed_word_ranks_last() {
        let mut c = toy(&["a", "b", "c"], 2);
        let v = c.vocab.len();
        let id = c.vocab.get("b").unwrap() as usize;
        c.params.amplitudes.row_mut(id).fill(0.0);
        let rows = word_importance(&c, v);
        assert_eq!(rows.len(), v);
        assert_eq!(rows.last().unwrap().token, "b");
        assert!(rows.windows(2).all(|w| w[0].norm >= w[1].norm));
    }

    #[test]
    fn single_word_gets_full_weight() {
        let c = toy(&["a", "b"], 3);
        let r = match_report(&c, "a", "b", 40).unwrap();
        assert_eq!(r.blocks.len(), 4);
        for b in &r.blocks {
            assert_eq!(b.question.words, [("a".to_string(), 1.0)]);
        }
    }

    #[test]
    fn measurement_on_word_state_ranks_it_first() {
        let mut c = toy(&["a", "b", "c"], 2);
        let id = c.vocab.get("c").unwrap();
        let s = word_states(&[id], &c.params, Field::Complex).unwrap().remove(0);
        c.params.measurements.row_mut(1).copy_from_slice(s.state.as_slice());
        let n = measurement_neighbours(&c, 2).unwrap();
        assert_eq!(n[1].words[0].0, "c");
        assert!((n[1].words[0].1 - 1.0).abs() < 1e-12);
        assert!(n.iter().all(|m| m.words.len() == 2));
    }
}
