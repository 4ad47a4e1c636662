//! Test-only oracles shared by the integration tests of both crates.
#![allow(dead_code)]

use cnm_core::autograd::{triplet_gradient, GradientSet};
use cnm_core::model::Field;
use cnm_core::embedding::{AmplitudeTable, PhaseTable, RealTable};
use cnm_core::linalg::{Complex64, ComplexMatrix, ComplexVector};
use cnm_core::matcher::word_states;
use cnm_core::measurement::MeasurementSet;
use cnm_core::mixture::{global_mixture, local_mixture};
use cnm_core::model::{MixtureKind, ModelConfig, ParameterSet};
use rand::seq::SliceRandom;
use rand::Rng;

/// `<v|rho|v>` by explicit double sum, without any unit-norm check.
pub fn quadratic_form(rho: &ComplexMatrix, v: &[Complex64]) -> f64 {
    let n = v.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += v[i].conj() * rho[(i, j)] * v[j];
        }
    }
    acc.re
}

/// Sentence representation computed from materialised density matrices.
pub fn representation_oracle(tokens: &[u32], params: &ParameterSet, config: &ModelConfig) -> Vec<f64> {
    let words = word_states(tokens, params, config.field).unwrap();
    let k = params.measurements.count();
    let mut out = Vec::new();
    let windows: Vec<Vec<(usize, usize)>> = match config.mixture {
        MixtureKind::Local => config
            .window_sizes
            .iter()
            .map(|&l| (0..words.len()).map(|j| (j, (j + l).min(words.len()))).collect())
            .collect(),
        MixtureKind::Global => vec![vec![(0, words.len())]],
    };
    for spans in windows {
        let rhos: Vec<ComplexMatrix> = spans
            .iter()
            .map(|&(s, e)| {
                let rho = match config.mixture {
                    MixtureKind::Local => local_mixture(&words[s..e]),
                    MixtureKind::Global => global_mixture(&words[s..e]),
                };
                rho.unwrap().into_matrix()
            })
            .collect();
        for m in 0..k {
            let v = params.measurements.row(m);
            let best = rhos
                .iter()
                .map(|rho| quadratic_form(rho, v))
                .fold(f64::NEG_INFINITY, f64::max);
            out.push(best);
        }
    }
    out
}

pub fn cosine_oracle(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

pub fn triplet_loss_oracle(
    params: &ParameterSet,
    config: &ModelConfig,
    q: &[u32],
    a: &[u32],
    b: &[u32],
    margin: f64,
) -> f64 {
    let rq = representation_oracle(q, params, config);
    let ra = representation_oracle(a, params, config);
    let rb = representation_oracle(b, params, config);
    (margin - cosine_oracle(&rq, &ra) + cosine_oracle(&rq, &rb)).max(0.0)
}

/// Smallest gap between the winning window and any other window with a
/// different value, over all pooled entries. Near-zero gaps mean the
/// max-pool is close to a kink.
pub fn pooling_gap(tokens: &[u32], params: &ParameterSet, config: &ModelConfig) -> f64 {
    let words = word_states(tokens, params, config.field).unwrap();
    let mut gap = f64::INFINITY;
    if config.mixture == MixtureKind::Global {
        return gap;
    }
    for &l in &config.window_sizes {
        let rhos: Vec<ComplexMatrix> = (0..words.len())
            .map(|j| local_mixture(&words[j..(j + l).min(words.len())]).unwrap().into_matrix())
            .collect();
        for m in 0..params.measurements.count() {
            let mut vals: Vec<f64> = rhos.iter().map(|r| quadratic_form(r, params.measurements.row(m))).collect();
            vals.sort_by(|x, y| y.total_cmp(x));
            if vals.len() > 1 {
                gap = gap.min(vals[0] - vals[1]);
            }
        }
    }
    gap
}

/// Random parameters: amplitudes in (-1, 1) away from zero, phases in
/// (-pi, pi), unit-norm complex measurements.
pub fn random_params<R: Rng>(vocab: usize, n: usize, k: usize, rng: &mut R) -> ParameterSet {
    let amps: Vec<f64> = (0..vocab * n)
        .map(|_| {
            let x: f64 = rng.random_range(0.1..1.0);
            if rng.random::<bool>() { x } else { -x }
        })
        .collect();
    let phases: Vec<f64> = (0..vocab * n)
        .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect();
    let mut rows = Vec::new();
    for _ in 0..k {
        let v: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        rows.push(ComplexVector::new(v.into_iter().map(|z| z / norm).collect()));
    }
    ParameterSet {
        amplitudes: AmplitudeTable(RealTable::from_vec(vocab, n, amps).unwrap()),
        phases: PhaseTable(RealTable::from_vec(vocab, n, phases).unwrap()),
        measurements: MeasurementSet::from_rows(&rows).unwrap(),
    }
}

/// `len` distinct token ids drawn from `0..vocab`.
pub fn distinct_tokens<R: Rng>(vocab: u32, len: usize, rng: &mut R) -> Vec<u32> {
    let mut ids: Vec<u32> = (0..vocab).collect();
    ids.shuffle(rng);
    ids.truncate(len);
    ids
}

/// Which parameter a finite-difference probe perturbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Probe {
    Amplitude(usize, usize),
    Phase(usize, usize),
    MeasurementRe(usize, usize),
    MeasurementIm(usize, usize),
}

pub fn perturb(params: &ParameterSet, probe: Probe, delta: f64) -> ParameterSet {
    let mut p = params.clone();
    match probe {
        Probe::Amplitude(r, c) => p.amplitudes.row_mut(r)[c] += delta,
        Probe::Phase(r, c) => p.phases.row_mut(r)[c] += delta,
        Probe::MeasurementRe(r, c) => p.measurements.row_mut(r)[c].re += delta,
        Probe::MeasurementIm(r, c) => p.measurements.row_mut(r)[c].im += delta,
    }
    p
}

/// Central difference of the oracle loss.
pub fn numeric_gradient(
    params: &ParameterSet,
    config: &ModelConfig,
    triplet: (&[u32], &[u32], &[u32]),
    margin: f64,
    probe: Probe,
    h: f64,
) -> f64 {
    let (q, a, b) = triplet;
    let up = triplet_loss_oracle(&perturb(params, probe, h), config, q, a, b, margin);
    let down = triplet_loss_oracle(&perturb(params, probe, -h), config, q, a, b, margin);
    (up - down) / (2.0 * h)
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / numeric.abs().max(1e-8)
}

/// Central differences with `h = 1e-5` on an O(1) loss carry roundoff of
/// order `1e-11`; below this magnitude a numeric gradient is zero.
pub const FD_NOISE_FLOOR: f64 = 1e-9;

/// Relative agreement within `rel_tol`, or both values inside the
/// finite-difference noise floor.
pub fn gradients_agree(analytic: f64, numeric: f64, rel_tol: f64) -> bool {
    if numeric.abs() < FD_NOISE_FLOOR {
        return (analytic - numeric).abs() <= FD_NOISE_FLOOR;
    }
    relative_error(analytic, numeric) <= rel_tol
}

/// Normalised vector with Gaussian-ish entries (uniform parts, then scaled).
pub fn random_unit<R: Rng>(n: usize, rng: &mut R) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

/// Orthonormal basis of C^n by Gram-Schmidt on random vectors; row `i` is
/// basis vector `i`.
pub fn random_orthonormal_basis<R: Rng>(n: usize, rng: &mut R) -> Vec<Vec<Complex64>> {
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    while basis.len() < n {
        let mut v = random_unit(n, rng);
        for _ in 0..2 {
            for b in &basis {
                let c: Complex64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= c * bi;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            basis.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    basis
}

/// `sum_i w_i |v_i><v_i|` by explicit outer products.
pub fn explicit_mixture(weights: &[f64], states: &[Vec<Complex64>]) -> ComplexMatrix {
    let n = states[0].len();
    let mut m = ComplexMatrix::zeros(n, n);
    for (w, v) in weights.iter().zip(states) {
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] += v[i] * v[j].conj() * *w;
            }
        }
    }
    m
}

/// `sum_ij p_i q_j |<phi_i|psi_j>|^2`.
pub fn vsm_double_sum(p: &[f64], phi: &[Vec<Complex64>], q: &[f64], psi: &[Vec<Complex64>]) -> f64 {
    let mut acc = 0.0;
    for (pi, a) in p.iter().zip(phi) {
        for (qj, b) in q.iter().zip(psi) {
            let ov: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
            acc += pi * qj * ov.norm_sqr();
        }
    }
    acc
}

/// Random probability vector of length `m` (normalised uniforms).
pub fn random_weights<R: Rng>(m: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.01..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

/// `tr(a b)` by explicit double sum.
pub fn trace_product_oracle(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc.re
}

/// Counterexample difference built in a rotated orthonormal basis rather
/// than on diagonals.
pub fn counterexample_oracle<R: Rng>(alpha: f64, rng: &mut R) -> f64 {
    let basis = random_orthonormal_basis(2, rng);
    let a = explicit_mixture(&[alpha, 1.0 - alpha], &basis);
    let b = explicit_mixture(&[1.0], &basis[..1]);
    trace_product_oracle(&a, &a) - trace_product_oracle(&a, &b)
}

/// Rows of a QA corpus where question `i` (cue word `cue{i}`) is answered
/// by the candidate naming `ans{i}`. Question and answer share no content
/// word, so the pairing has to be learned. Each question has one positive and
/// `negatives` distractors naming other answers.
pub fn separable_rows(questions: usize, negatives: usize) -> Vec<cnm_core::data::QAPair> {
    let mut rows = Vec::new();
    for i in 0..questions {
        let qid = format!("q{i}");
        let question = format!("what about cue{i}");
        let mut cands = vec![(format!("it is ans{i}"), 1u8)];
        for d in 1..=negatives {
            cands.push((format!("it is ans{}", (i + d) % questions), 0));
        }
        // rotate so the positive is not always first
        let shift = i % cands.len();
        cands.rotate_left(shift);
        for (answer, label) in cands {
            rows.push(cnm_core::data::QAPair {
                question_id: qid.clone(),
                question: question.clone(),
                answer,
                label,
            });
        }
    }
    rows
}

pub const FD_STEP: f64 = 1e-5;
pub const GRAD_REL_TOL: f64 = 1e-4;

pub struct GradientInstance {
    pub params: ParameterSet,
    pub q: Vec<u32>,
    pub a: Vec<u32>,
    pub b: Vec<u32>,
}

pub fn gradient_instance(seed: u64, config: &ModelConfig) -> GradientInstance {
    let mut rng = cnm_core::seeded_rng(seed);
    loop {
        let n = rng.random_range(2..=4);
        let k = rng.random_range(1..=3);
        let vocab = 8;
        let params = random_params(vocab, n, k, &mut rng);
        let mut sent = || {
            let len = rng.random_range(1..=5);
            distinct_tokens(vocab as u32, len, &mut rng)
        };
        let (q, a, b) = (sent(), sent(), sent());
        let clear = [&q, &a, &b].iter().all(|s| pooling_gap(s, &params, config) > 1e-6);
        if clear {
            return GradientInstance { params, q, a, b };
        }
    }
}

/// Analytic gradients of one random triplet against central differences of
/// the oracle loss, over every parameter the field trains. Returns the
/// worst relative error above the noise floor and the number of probes.
pub fn gradient_check(config: &ModelConfig, seed: u64) -> Result<(f64, usize), String> {
    let inst = gradient_instance(seed, config);
    let margin = 2.5;
    let mut grads = GradientSet::zeros_like(&inst.params);
    let mut rng = cnm_core::seeded_rng(0);
    let out = triplet_gradient(&inst.q, &inst.a, &inst.b, &inst.params, config, margin, &mut rng, false, &mut grads)
        .unwrap();
    if out.loss <= 0.0 {
        return Err(format!("seed {seed}: hinge inactive"));
    }
    let oracle_loss = triplet_loss_oracle(&inst.params, config, &inst.q, &inst.a, &inst.b, margin);
    if (oracle_loss - out.loss).abs() >= 1e-12 {
        return Err(format!("seed {seed}: loss {} vs oracle {oracle_loss}", out.loss));
    }

    let triplet = (inst.q.as_slice(), inst.a.as_slice(), inst.b.as_slice());
    let n = inst.params.dim();
    let mut worst: f64 = 0.0;
    let mut probes = Vec::new();
    for r in 0..inst.params.vocab_size() {
        for c in 0..n {
            probes.push((Probe::Amplitude(r, c), grads.amplitudes.row(r)[c]));
            if config.field == Field::Complex {
                probes.push((Probe::Phase(r, c), grads.phases.row(r)[c]));
            }
        }
    }
    for m in 0..inst.params.measurement_count() {
        for c in 0..n {
            let g = grads.measurements[m * n + c];
            probes.push((Probe::MeasurementRe(m, c), g.re));
            if config.field == Field::Complex {
                probes.push((Probe::MeasurementIm(m, c), g.im));
            }
        }
    }
    let count = probes.len();
    for (probe, analytic) in probes {
        let numeric = numeric_gradient(&inst.params, config, triplet, margin, probe, FD_STEP);
        let err = relative_error(analytic, numeric);
        if !gradients_agree(analytic, numeric, GRAD_REL_TOL) {
            return Err(format!("seed {seed} {probe:?}: analytic {analytic:e} numeric {numeric:e} rel {err:e}"));
        }
        if numeric.abs() >= FD_NOISE_FLOOR {
            worst = worst.max(err);
        }
    }
    Ok((worst, count))
}

