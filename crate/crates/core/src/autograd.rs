//! Forward pass with a recorded tape and its exact reverse-mode gradient.
//!
//! Density matrices are never formed here. For a window with softmax weights
//! `p_i` over raw word vectors `w_i` (norm `pi_i`), the probability of
//! measurement `v` is
//!
//! ```text
//! P(v) = sum_i p_i |<v|w_i>|^2 / pi_i^2
//! ```
//!
//! which equals `<v|rho|v>` for the local mixture `rho`. Gradients with
//! respect to a raw vector are carried as one complex number per element,
//! `df/dRe + i df/dIm`, and mapped onto the amplitude/phase parameters at
//! the end.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;

use crate::embedding::RealTable;
use crate::error::{Error, Result};
use crate::linalg::inner_slices;
use crate::matcher::{cosine, cosine_backward, triplet_loss};
use crate::measurement::first_max;
use crate::mixture::{softmax, window_spans};
use crate::model::{Field, MixtureKind, ModelConfig, ParameterSet};

/// One pooled block: a window size (or the global mixture) and its windows.
#[derive(Debug, Clone)]
struct BlockTape {
    spans: Vec<(usize, usize)>,
    /// Mixture weights per window, aligned with the span's tokens.
    weights: Vec<Vec<f64>>,
    /// Whether the weights came from a softmax (and so depend on word norms).
    softmax: bool,
    /// Winning window per measurement.
    argmax: Vec<usize>,
}

/// Intermediate values of one sentence's forward pass.
#[derive(Debug, Clone)]
pub struct SentenceTape {
    tokens: Vec<u32>,
    n: usize,
    k: usize,
    /// Raw vectors after amplitude dropout, `L x n`.
    raw: Vec<Complex64>,
    /// Amplitude dropout factors, `L x n`.
    amp_mask: Option<Vec<f64>>,
    /// Word weights `pi_i`.
    norms: Vec<f64>,
    degenerate: Vec<bool>,
    /// `<v|w_i>`, `L x k`.
    overlap: Vec<Complex64>,
    /// `|<v|u_i>|^2` for the unit state `u_i`, `L x k`.
    prob: Vec<f64>,
    blocks: Vec<BlockTape>,
    pooled_mask: Option<Vec<f64>>,
    /// Final sentence representation.
    pub representation: Vec<f64>,
}

impl SentenceTape {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[u32] {
        &self.tokens
    }

    /// Mixture weights for window `window` of block `block`.
    pub fn window_weights(&self, block: usize, window: usize) -> Option<(&(usize, usize), &[f64])> {
        let b = self.blocks.get(block)?;
        Some((b.spans.get(window)?, b.weights.get(window)?.as_slice()))
    }

    /// Winning window per measurement for `block`.
    pub fn argmax(&self, block: usize) -> Option<&[usize]> {
        self.blocks.get(block).map(|b| b.argmax.as_slice())
    }
}

/// Runs the forward pass for one sentence.
///
/// With `train` set, a fresh dropout mask is drawn from `rng` for the
/// amplitudes of every token occurrence and for the pooled vector.
pub fn forward<R: Rng + ?Sized>(
    tokens: &[u32],
    params: &ParameterSet,
    config: &ModelConfig,
    rng: &mut R,
    train: bool,
) -> Result<SentenceTape> {
    if tokens.is_empty() {
        return Err(Error::Degenerate("empty sentence".into()));
    }
    let n = params.dim();
    let k = params.measurement_count();
    let len = tokens.len();
    let vocab = params.vocab_size();

    let mut raw = Vec::with_capacity(len * n);
    for &t in tokens {
        let t = t as usize;
        if t >= vocab {
            return Err(Error::Lookup { index: t, len: vocab });
        }
        let r = params.amplitudes.row(t);
        match config.field {
            Field::Complex => {
                let phi = params.phases.row(t);
                raw.extend(r.iter().zip(phi).map(|(&a, &p)| Complex64::from_polar(a, p)));
            }
            Field::Real => raw.extend(r.iter().map(|&a| Complex64::new(a, 0.0))),
        }
    }
    let amp_mask = config.dropout.apply_complex(&mut raw, rng, train);

    let mut norms = Vec::with_capacity(len);
    let mut degenerate = Vec::with_capacity(len);
    let mut overlap = Vec::with_capacity(len * k);
    let mut prob = Vec::with_capacity(len * k);
    let uniform = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
    for i in 0..len {
        let w = &raw[i * n..(i + 1) * n];
        let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let is_degenerate = norm == 0.0;
        degenerate.push(is_degenerate);
        norms.push(if is_degenerate { crate::embedding::DEGENERATE_WEIGHT } else { norm });
        for m in 0..k {
            let v = params.measurements.row(m);
            if is_degenerate {
                let c: Complex64 = v.iter().map(|x| x.conj() * uniform).sum();
                overlap.push(Complex64::new(0.0, 0.0));
                prob.push(c.norm_sqr());
            } else {
                let c = inner_slices(v, w);
                overlap.push(c);
                prob.push(c.norm_sqr() / (norm * norm));
            }
        }
    }

    let mut blocks = Vec::with_capacity(config.blocks());
    let mut representation = Vec::with_capacity(config.blocks() * k);
    let mut push_block = |spans: Vec<(usize, usize)>, weights: Vec<Vec<f64>>, softmax: bool| {
        let windows = spans.len();
        let mut table = vec![0.0; k * windows];
        for (j, (&(s, _), p)) in spans.iter().zip(&weights).enumerate() {
            for (offset, &pi) in p.iter().enumerate() {
                let row = &prob[(s + offset) * k..(s + offset + 1) * k];
                for m in 0..k {
                    table[m * windows + j] += pi * row[m];
                }
            }
        }
        let mut argmax = Vec::with_capacity(k);
        for m in 0..k {
            let (j, value) = first_max(&table[m * windows..(m + 1) * windows]);
            argmax.push(j);
            representation.push(value);
        }
        blocks.push(BlockTape {
            spans,
            weights,
            softmax,
            argmax,
        });
    };

    match config.mixture {
        MixtureKind::Local => {
            for &l in &config.window_sizes {
                let spans: Vec<_> = window_spans(len, l).collect();
                let weights = spans.iter().map(|&(s, e)| softmax(&norms[s..e])).collect();
                push_block(spans, weights, true);
            }
        }
        MixtureKind::Global => {
            push_block(vec![(0, len)], vec![vec![1.0 / len as f64; len]], false);
        }
    }

    let pooled_mask = config.dropout.apply(&mut representation, rng, train);

    Ok(SentenceTape {
        tokens: tokens.to_vec(),
        n,
        k,
        raw,
        amp_mask,
        norms,
        degenerate,
        overlap,
        prob,
        blocks,
        pooled_mask,
        representation,
    })
}

/// Gradients with the shapes of a [`ParameterSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub amplitudes: RealTable,
    pub phases: RealTable,
    /// `dL/dRe(v) + i dL/dIm(v)` per measurement element, `k x n`.
    pub measurements: Vec<Complex64>,
}

impl GradientSet {
    pub fn zeros_like(params: &ParameterSet) -> Self {
        Self {
            amplitudes: RealTable::zeros(params.vocab_size(), params.dim()),
            phases: RealTable::zeros(params.vocab_size(), params.dim()),
            measurements: vec![Complex64::new(0.0, 0.0); params.measurement_count() * params.dim()],
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.amplitudes.as_mut_slice().iter_mut().for_each(|x| *x *= factor);
        self.phases.as_mut_slice().iter_mut().for_each(|x| *x *= factor);
        self.measurements.iter_mut().for_each(|z| *z *= factor);
    }

    pub fn add_assign(&mut self, other: &GradientSet) {
        for (a, b) in self.amplitudes.as_mut_slice().iter_mut().zip(other.amplitudes.as_slice()) {
            *a += b;
        }
        for (a, b) in self.phases.as_mut_slice().iter_mut().zip(other.phases.as_slice()) {
            *a += b;
        }
        for (a, b) in self.measurements.iter_mut().zip(&other.measurements) {
            *a += b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.amplitudes.is_finite()
            && self.phases.is_finite()
            && self.measurements.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.amplitudes.as_slice().iter().all(|&x| x == 0.0)
            && self.phases.as_slice().iter().all(|&x| x == 0.0)
            && self.measurements.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }
}

/// Accumulates into `grads` the gradient of a scalar whose derivative with
/// respect to the tape's representation is `d_repr`.
pub fn backward(
    tape: &SentenceTape,
    d_repr: &[f64],
    params: &ParameterSet,
    config: &ModelConfig,
    grads: &mut GradientSet,
) -> Result<()> {
    let (n, k, len) = (tape.n, tape.k, tape.len());
    if d_repr.len() != tape.representation.len() {
        return Err(Error::Internal("representation gradient does not match tape".into()));
    }
    let mut d_pooled = d_repr.to_vec();
    if let Some(mask) = &tape.pooled_mask {
        for (d, m) in d_pooled.iter_mut().zip(mask) {
            *d *= m;
        }
    }

    // d/d prob[i][m] and d/d norms[i]
    let mut d_prob = vec![0.0; len * k];
    let mut d_norm = vec![0.0; len];
    for (b, block) in tape.blocks.iter().enumerate() {
        let windows = block.spans.len();
        let mut d_weights: Vec<Option<Vec<f64>>> = vec![None; windows];
        for m in 0..k {
            let g = d_pooled[b * k + m];
            if g == 0.0 {
                continue;
            }
            let j = block.argmax[m];
            let (s, e) = block.spans[j];
            let p = &block.weights[j];
            let dw = d_weights[j].get_or_insert_with(|| vec![0.0; e - s]);
            for (offset, &pi) in p.iter().enumerate() {
                let i = s + offset;
                dw[offset] += g * tape.prob[i * k + m];
                d_prob[i * k + m] += g * pi;
            }
        }
        if block.softmax {
            for (j, dw) in d_weights.iter().enumerate() {
                let Some(dw) = dw else { continue };
                let (s, _) = block.spans[j];
                let p = &block.weights[j];
                let mean: f64 = p.iter().zip(dw).map(|(a, b)| a * b).sum();
                for (offset, (&pi, &di)) in p.iter().zip(dw).enumerate() {
                    d_norm[s + offset] += pi * (di - mean);
                }
            }
        }
    }

    let real = config.field == Field::Real;
    let mut g_raw = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..len {
        if tape.degenerate[i] {
            // the substituted uniform state does not depend on the parameters
            // except through the measurement vectors
            let uniform = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
            for m in 0..k {
                let dp = d_prob[i * k + m];
                if dp == 0.0 {
                    continue;
                }
                let v = params.measurements.row(m);
                let c: Complex64 = v.iter().map(|x| x.conj() * uniform).sum();
                let gv = &mut grads.measurements[m * n..(m + 1) * n];
                for slot in gv.iter_mut() {
                    *slot += c.conj() * uniform * (2.0 * dp);
                }
            }
            continue;
        }
        let w = &tape.raw[i * n..(i + 1) * n];
        let norm = tape.norms[i];
        let inv_sq = 1.0 / (norm * norm);
        let mut dn = d_norm[i];
        g_raw.fill(Complex64::new(0.0, 0.0));
        for m in 0..k {
            let dp = d_prob[i * k + m];
            if dp == 0.0 {
                continue;
            }
            // prob = |c|^2 / norm^2
            let c = tape.overlap[i * k + m];
            let d_csq = dp * inv_sq;
            dn -= 2.0 * dp * tape.prob[i * k + m] / norm;
            let v = params.measurements.row(m);
            let gv = &mut grads.measurements[m * n..(m + 1) * n];
            let cc = c.conj() * (2.0 * d_csq);
            let c2 = c * (2.0 * d_csq);
            for j in 0..n {
                // d|c|^2/dw_j = 2 c v_j, d|c|^2/dv_j = 2 conj(c) w_j
                g_raw[j] += c2 * v[j];
                gv[j] += cc * w[j];
            }
        }
        if dn != 0.0 {
            let scale = dn / norm;
            for j in 0..n {
                g_raw[j] += w[j] * scale;
            }
        }

        let t = tape.tokens[i] as usize;
        let phi = params.phases.row(t);
        let mask = tape.amp_mask.as_ref().map(|m| &m[i * n..(i + 1) * n]);
        let amp_row = grads.amplitudes.row_mut(t);
        for j in 0..n {
            let rotated = if real {
                g_raw[j]
            } else {
                g_raw[j] * Complex64::from_polar(1.0, -phi[j])
            };
            let s = mask.map_or(1.0, |m| m[j]);
            amp_row[j] += rotated.re * s;
        }
        if !real {
            let amp = params.amplitudes.row(t);
            let phase_row = grads.phases.row_mut(t);
            for j in 0..n {
                let rotated = g_raw[j] * Complex64::from_polar(1.0, -phi[j]);
                // signed amplitude after dropout
                let r_eff = amp[j] * mask.map_or(1.0, |m| m[j]);
                phase_row[j] += r_eff * rotated.im;
            }
        }
    }
    if real {
        for z in grads.measurements.iter_mut() {
            z.im = 0.0;
        }
    }
    Ok(())
}

/// Forward and backward passes for one `(question, positive, negative)` triple.
#[derive(Debug, Clone)]
pub struct TripletOutcome {
    pub loss: f64,
    pub score_pos: f64,
    pub score_neg: f64,
}

/// Evaluates the triplet hinge loss and accumulates its gradient into `grads`.
#[allow(clippy::too_many_arguments)]
pub fn triplet_gradient<R: Rng + ?Sized>(
    question: &[u32],
    positive: &[u32],
    negative: &[u32],
    params: &ParameterSet,
    config: &ModelConfig,
    margin: f64,
    rng: &mut R,
    train: bool,
    grads: &mut GradientSet,
) -> Result<TripletOutcome> {
    let q = forward(question, params, config, rng, train)?;
    let a = forward(positive, params, config, rng, train)?;
    let b = forward(negative, params, config, rng, train)?;
    let score_pos = cosine(&q.representation, &a.representation)?;
    let score_neg = cosine(&q.representation, &b.representation)?;
    let loss = triplet_loss(score_pos, score_neg, margin);
    if loss > 0.0 {
        let (dq_pos, da) = cosine_backward(&q.representation, &a.representation);
        let (dq_neg, db) = cosine_backward(&q.representation, &b.representation);
        // dL/ds_pos = -1, dL/ds_neg = +1
        let dq: Vec<f64> = dq_pos.iter().zip(&dq_neg).map(|(p, n)| n - p).collect();
        let da: Vec<f64> = da.iter().map(|x| -x).collect();
        backward(&q, &dq, params, config, grads)?;
        backward(&a, &da, params, config, grads)?;
        backward(&b, &db, params, config, grads)?;
    }
    Ok(TripletOutcome {
        loss,
        score_pos,
        score_neg,
    })
}
