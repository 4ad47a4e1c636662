//! Sentence representations, cosine matching and the triplet hinge loss.

use alloc::format;
use alloc::vec::Vec;


use crate::autograd::forward;
use crate::embedding::{assemble_word_vector, normalize_word_or_uniform, WordState};
use crate::error::{shape_err, Error, Result};
use crate::linalg::{Complex64, ComplexVector};
use crate::measurement::{max_pool, measure_all};
use crate::mixture::{global_mixture, slide_windows, WindowSequence};
use crate::model::{Field, MixtureKind, ModelConfig, ParameterSet};

/// Concatenated max-pooled measurement probabilities, one `k` block per
/// window size in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceRepresentation {
    pub pooled: Vec<f64>,
}

/// Cosine similarity in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct MatchScore(pub f64);

/// Evaluation-mode representation of an encoded sentence.
pub fn represent(tokens: &[u32], params: &ParameterSet, config: &ModelConfig) -> Result<SentenceRepresentation> {
    // no dropout in eval mode, so the rng is never consulted
    let mut rng = crate::seeded_rng(0);
    let tape = forward(tokens, params, config, &mut rng, false)?;
    Ok(SentenceRepresentation {
        pooled: tape.representation,
    })
}

/// Word states of an encoded sentence, as the model sees them in eval mode.
pub fn word_states(tokens: &[u32], params: &ParameterSet, field: Field) -> Result<Vec<WordState>> {
    tokens
        .iter()
        .map(|&t| {
            let v = match field {
                Field::Complex => assemble_word_vector(t as usize, &params.amplitudes, &params.phases)?,
                Field::Real => {
                    // bounds check through the lookup
                    assemble_word_vector(t as usize, &params.amplitudes, &params.phases)?;
                    ComplexVector::from_real(params.amplitudes.row(t as usize))
                }
            };
            Ok(normalize_word_or_uniform(&v))
        })
        .collect()
}

/// Same representation as [`represent`], computed by materialising every
/// density matrix and measuring it explicitly.
pub fn represent_materialized(
    tokens: &[u32],
    params: &ParameterSet,
    config: &ModelConfig,
) -> Result<SentenceRepresentation> {
    if tokens.is_empty() {
        return Err(Error::Degenerate("empty sentence".into()));
    }
    let words = word_states(tokens, params, config.field)?;
    let measurements = &params.measurements;
    let mut pooled = Vec::new();
    match config.mixture {
        MixtureKind::Local => {
            for &l in &config.window_sizes {
                let seq = slide_windows(&words, l)?;
                pooled.extend(max_pool(&measure_all(&seq, measurements)?)?.values);
            }
        }
        MixtureKind::Global => {
            let seq = WindowSequence {
                windows: alloc::vec![global_mixture(&words)?],
                window_length: words.len(),
                sentence_length: words.len(),
            };
            pooled.extend(max_pool(&measure_all(&seq, measurements)?)?.values);
        }
    }
    Ok(SentenceRepresentation { pooled })
}

/// Cosine similarity; zero if either operand is the zero vector.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(shape_err("cosine", format!("length {}", a.len()), format!("length {}", b.len())));
    }
    let (dot, na, nb) = dot_norms(a, b);
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok(dot / (na * nb))
}

fn dot_norms(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let mut dot = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        aa += x * x;
        bb += y * y;
    }
    (dot, aa.sqrt(), bb.sqrt())
}

/// Gradients of `cosine(a, b)` with respect to `a` and `b`; zero when either
/// operand is zero.
pub fn cosine_backward(a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (dot, na, nb) = dot_norms(a, b);
    if na == 0.0 || nb == 0.0 {
        return (alloc::vec![0.0; a.len()], alloc::vec![0.0; b.len()]);
    }
    let s = dot / (na * nb);
    let inv = 1.0 / (na * nb);
    let da = a.iter().zip(b).map(|(x, y)| y * inv - s * x / (na * na)).collect();
    let db = a.iter().zip(b).map(|(x, y)| x * inv - s * y / (nb * nb)).collect();
    (da, db)
}

pub fn score(q: &SentenceRepresentation, a: &SentenceRepresentation) -> Result<MatchScore> {
    cosine(&q.pooled, &a.pooled).map(MatchScore)
}

/// `max(0, margin - s_pos + s_neg)`.
pub fn triplet_loss(score_pos: f64, score_neg: f64, margin: f64) -> f64 {
    (margin - (score_pos - score_neg)).max(0.0)
}

/// Modulus of the Hermitian inner product, used to compare measurement
/// states with word states.
pub fn state_similarity(a: &[Complex64], b: &[Complex64]) -> f64 {
    crate::linalg::inner_slices(a, b).norm()
}
