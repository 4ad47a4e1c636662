//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Raw corpora are picked up from the environment when present:
//! `CNM_TREC_TRAIN`, `CNM_TREC_DEV` (with optional `CNM_TREC_FORMAT`),
//! `CNM_WIKIQA_TEST` and `CNM_GLOVE`. Without them the dataset criterion
//! checks bundled fixtures and the training criteria use the synthetic
//! factoid corpus.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use cnm::dataset::{load_tsv, FormatDescriptor};
use cnm::synthetic::{generate, SyntheticConfig};
use cnm_core::data::{build_vocab, encode, EncodedDataset, LoadStats, QADataset};
use cnm_core::embedding::{normalize_word, WordState};
use cnm_core::evaluation::evaluate;
use cnm_core::linalg::{complex_add_polar, hermitian_eig, Complex64, ComplexMatrix, ComplexVector};
use cnm_core::measurement::{measure_all, MeasurementSet};
use cnm_core::metrics_lab::{self_similarity_gap, audit_metric, trace_inner_product, Axiom, BuiltinMetric};
use cnm_core::mixture::{global_mixture, slide_windows, DensityMatrix};
use cnm_core::model::{DropoutMode, Field, MixtureKind, ModelConfig, ParameterSet};
use cnm_core::seeded_rng;
use cnm_core::text::Vocabulary;
use cnm_core::trainer::{train, TrainerConfig};
use rand::Rng;
use rayon::prelude::*;

fn verdict(name: &str, pass: bool, detail: impl Display) -> bool {
    println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn random_words<R: Rng>(n: usize, len: usize, rng: &mut R) -> Vec<WordState> {
    (0..len)
        .map(|_| {
            let v: Vec<Complex64> = (0..n)
                .map(|_| Complex64::from_polar(rng.random_range(0.05..1.0), rng.random_range(-3.2..3.2)))
                .collect();
            normalize_word(&ComplexVector::new(v)).unwrap()
        })
        .collect()
}

fn hermitian_defect(m: &ComplexMatrix) -> f64 {
    let n = m.rows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

#[test]
fn density_matrix_invariants() {
    let start = Instant::now();
    let mut rng = seeded_rng(1);
    let (mut matrices, mut worst_h, mut worst_t, mut min_eig) = (0usize, 0f64, 0f64, f64::INFINITY);
    for _ in 0..10_000 {
        let n = rng.random_range(2..=10);
        let len = rng.random_range(1..=12);
        let l = rng.random_range(1..=5);
        let words = random_words(n, len, &mut rng);
        let mut rhos: Vec<DensityMatrix> = slide_windows(&words, l).unwrap().windows;
        rhos.push(global_mixture(&words).unwrap());
        for rho in &rhos {
            let m = rho.matrix();
            let tr: Complex64 = (0..n).map(|i| m[(i, i)]).sum();
            worst_h = worst_h.max(hermitian_defect(m));
            worst_t = worst_t.max((tr - 1.0).norm());
            min_eig = min_eig.min(*hermitian_eig(m).unwrap().eigenvalues.last().unwrap());
            matrices += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst_h <= 1e-9 && worst_t <= 1e-9 && min_eig >= -1e-8 && secs < 30.0;
    assert!(verdict(
        "density-matrix invariants",
        pass,
        format!("10000 sentences, {matrices} matrices; hermitian {worst_h:.1e}, trace {worst_t:.1e}, min eigenvalue {min_eig:.1e}, {secs:.1}s"),
    ));
}

#[test]
fn measurement_normalization() {
    let mut rng = seeded_rng(2);
    let mut worst: f64 = 0.0;
    let mut windows = 0;
    for _ in 0..1_000 {
        let n = rng.random_range(2..=10);
        let words = random_words(n, rng.random_range(1..=12), &mut rng);
        let seq = slide_windows(&words, rng.random_range(1..=5)).unwrap();
        let basis: Vec<ComplexVector> = common::random_orthonormal_basis(n, &mut rng)
            .into_iter()
            .map(ComplexVector::new)
            .collect();
        let set = MeasurementSet::from_rows(&basis).unwrap();
        let p = measure_all(&seq, &set).unwrap();
        for w in 0..p.windows() {
            let total: f64 = (0..p.measurements()).map(|m| p.get(m, w)).sum();
            worst = worst.max((total - 1.0).abs());
            windows += 1;
        }
    }
    assert!(verdict(
        "measurement normalization",
        worst <= 1e-8,
        format!("1000 cases, {windows} windows; worst |sum p - 1| = {worst:.1e}"),
    ));
}

#[test]
fn gradient_correctness() {
    let start = Instant::now();
    let configs = [
        ModelConfig::default(),
        ModelConfig {
            mixture: MixtureKind::Global,
            ..ModelConfig::default()
        },
        ModelConfig {
            field: Field::Real,
            ..ModelConfig::default()
        },
    ];
    let mut failures = Vec::new();
    let (mut worst, mut probes, mut instances) = (0f64, 0usize, 0usize);
    for (c, config) in configs.iter().enumerate() {
        let count = if c == 0 { 80 } else { 20 };
        for seed in 0..count {
            match common::gradient_check(config, 1000 * c as u64 + seed) {
                Ok((w, p)) => {
                    worst = worst.max(w);
                    probes += p;
                }
                Err(e) => failures.push(e),
            }
            instances += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = failures.is_empty() && secs < 60.0;
    assert!(
        verdict(
            "gradient correctness",
            pass,
            format!("{instances} instances, {probes} probes; worst relative error {worst:.1e}; {secs:.1}s"),
        ),
        "{failures:?}"
    );
}

#[test]
fn trace_inner_product_counterexample() {
    let mut worst: f64 = 0.0;
    let mut signs = Vec::new();
    for i in 0..100 {
        let alpha = i as f64 / 99.0;
        let got = self_similarity_gap(alpha).unwrap();
        worst = worst.max((got - (2.0 * alpha * alpha - 3.0 * alpha + 1.0)).abs());
        signs.push((alpha, got));
    }
    let below = signs.iter().filter(|(a, _)| *a < 0.5).all(|(_, v)| *v > 0.0);
    let above = signs.iter().filter(|(a, _)| *a > 0.5 && *a < 1.0).all(|(_, v)| *v < 0.0);
    assert!(verdict(
        "counterexample reproduction",
        worst <= 1e-12 && below && above,
        format!("100-point grid, worst error {worst:.1e}; positive below 1/2: {below}, negative above: {above}"),
    ));
}

#[test]
fn vsm_identity() {
    let mut rng = seeded_rng(4);
    let mut worst: f64 = 0.0;
    for _ in 0..1_000 {
        let n = rng.random_range(2..=8);
        let (ma, mb) = (rng.random_range(1..=n), rng.random_range(1..=n));
        let phi: Vec<Vec<Complex64>> = (0..ma).map(|_| common::random_unit(n, &mut rng)).collect();
        let psi: Vec<Vec<Complex64>> = (0..mb).map(|_| common::random_unit(n, &mut rng)).collect();
        let (p, q) = (common::random_weights(ma, &mut rng), common::random_weights(mb, &mut rng));
        let a = DensityMatrix::new(common::explicit_mixture(&p, &phi)).unwrap();
        let b = DensityMatrix::new(common::explicit_mixture(&q, &psi)).unwrap();
        let expect = common::vsm_double_sum(&p, &phi, &q, &psi);
        let got = trace_inner_product(&a, &b).unwrap();
        worst = worst.max((got - expect).abs() / expect.abs().max(1e-300));
    }
    assert!(verdict(
        "VSM identity",
        worst <= 1e-9,
        format!("1000 mixture pairs, worst relative error {worst:.1e}"),
    ));
}

#[test]
fn complex_addition() {
    let mut rng = seeded_rng(5);
    let mut worst: f64 = 0.0;
    let mut exact = true;
    for _ in 0..10_000 {
        let (r1, r2) = (rng.random_range(0.0..10.0), rng.random_range(0.0..10.0));
        let (t1, t2) = (rng.random_range(-3.2..3.2), rng.random_range(-3.2..3.2));
        let (r, t) = complex_add_polar((r1, t1), (r2, t2));
        let rect = Complex64::from_polar(r1, t1) + Complex64::from_polar(r2, t2);
        worst = worst.max((Complex64::from_polar(r, t) - rect).norm());
        exact &= complex_add_polar((r1, 0.0), (r2, 0.0)) == (r1 + r2, 0.0);
    }
    assert!(verdict(
        "complex addition",
        worst <= 1e-12 && exact,
        format!("10000 pairs, worst |polar - rectangular| {worst:.1e}; zero-phase exact: {exact}"),
    ));
}

fn env_path(key: &str) -> Option<PathBuf> {
    std::env::var_os(key).map(PathBuf::from)
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn trec_format() -> FormatDescriptor {
    match env_path("CNM_TREC_FORMAT") {
        Some(p) => FormatDescriptor::load(&p).unwrap(),
        None => FormatDescriptor::canonical(),
    }
}

#[test]
fn dataset_statistics() {
    let check = |label: &str, stats: LoadStats, expect: (usize, usize), extra: bool| {
        let ok = extra && (stats.questions, stats.pairs) == expect;
        (format!("{label} {}/{} (expected {}/{})", stats.questions, stats.pairs, expect.0, expect.1), ok)
    };
    let mut checks: Vec<(String, bool)> = Vec::new();
    let raw_trec = env_path("CNM_TREC_TRAIN");
    let raw_wiki = env_path("CNM_WIKIQA_TEST");
    if let Some(p) = &raw_trec {
        checks.push(check("TREC QA train", load_tsv(p, &trec_format(), "train").unwrap().1, (1229, 53417), true));
    }
    if let Some(p) = &raw_wiki {
        checks.push(check("WikiQA test", load_tsv(p, &FormatDescriptor::wikiqa(), "test").unwrap().1, (633, 2351), true));
    }
    if raw_trec.is_none() || raw_wiki.is_none() {
        // two blank rows, one question without a correct answer, interleaved ids
        let (_, s) = load_tsv(&fixture("trec_like.tsv"), &FormatDescriptor::canonical(), "train").unwrap();
        let counts_ok = s.rows == 9 && s.dropped_empty == 2 && s.dropped_questions == 1;
        checks.push(check("fixture trec_like", s, (2, 5), counts_ok));
        let (_, s) = load_tsv(&fixture("wikiqa_like.tsv"), &FormatDescriptor::wikiqa(), "test").unwrap();
        let counts_ok = s.rows == 9 && s.dropped_questions == 1;
        checks.push(check("fixture wikiqa_like", s, (3, 7), counts_ok));
    }
    let pass = checks.iter().all(|c| c.1);
    let detail: Vec<&str> = checks.iter().map(|c| c.0.as_str()).collect();
    assert!(verdict("dataset statistics", pass, detail.join("; ")));
}

#[test]
fn overfit_separable_toy() {
    let start = Instant::now();
    let (ds, _) = QADataset::from_pairs("toy", common::separable_rows(8, 3)).unwrap();
    let vocab = build_vocab(&[&ds]);
    let enc = encode(&ds, &vocab, 40).unwrap();
    let config = TrainerConfig {
        learning_rate: 0.1,
        l2_lambda: 0.0,
        batch_size: 4,
        k: 8,
        dropout_rate: 0.0,
        epochs: 50,
        seed: 3,
        ..TrainerConfig::default()
    };
    let init = ParameterSet::init(&vocab, &BTreeMap::new(), 8, 8, Field::Complex, &mut seeded_rng(3)).unwrap();
    let out = train(&enc, &enc, init, &config).unwrap();
    let first = out.log.iter().find(|r| r.dev_map == 1.0 && r.dev_mrr == 1.0).map(|r| r.epoch);
    let secs = start.elapsed().as_secs_f64();
    assert!(verdict(
        "overfit sanity",
        first.is_some() && secs < 60.0,
        format!(
            "8 questions; untrained MAP {:.3}; MAP = MRR = 1 first at epoch {first:?}; {secs:.2}s",
            out.log[0].dev_map
        ),
    ));
}

/// Training configuration of the scaled experiments. The dropout rate is
/// read as a keep probability.
fn scaled_config(seed: u64) -> TrainerConfig {
    TrainerConfig {
        learning_rate: 0.1,
        l2_lambda: 1e-6,
        batch_size: 8,
        k: 50,
        margin: 0.1,
        dropout_rate: 0.9,
        dropout_mode: DropoutMode::KeepProbability,
        epochs: 30,
        seed,
        ..TrainerConfig::default()
    }
}

const SCALED_DIM: usize = 50;

struct Subset {
    source: String,
    vocab: Vocabulary,
    train: EncodedDataset,
    dev: EncodedDataset,
    pretrained: BTreeMap<String, Vec<f64>>,
}

/// 200 training questions and a dev split: raw TREC QA when supplied,
/// otherwise the synthetic corpus with seed 0.
fn subset() -> &'static Subset {
    static SUBSET: OnceLock<Subset> = OnceLock::new();
    SUBSET.get_or_init(|| {
        let (mut train_ds, dev_ds, source) = match (env_path("CNM_TREC_TRAIN"), env_path("CNM_TREC_DEV")) {
            (Some(t), Some(d)) => (
                load_tsv(&t, &trec_format(), "train").unwrap().0,
                load_tsv(&d, &trec_format(), "dev").unwrap().0,
                "TREC QA".to_string(),
            ),
            _ => {
                let spec = SyntheticConfig::default();
                let dev = SyntheticConfig {
                    questions: 100,
                    ..spec.clone()
                };
                (
                    generate(&spec, "train", 0).unwrap(),
                    generate(&dev, "dev", 0).unwrap(),
                    "synthetic".to_string(),
                )
            }
        };
        train_ds.questions.truncate(200);
        let vocab = build_vocab(&[&train_ds]);
        let pretrained = match env_path("CNM_GLOVE") {
            Some(p) => cnm::glove::load_for_vocab(&p, &vocab, SCALED_DIM).unwrap(),
            None => BTreeMap::new(),
        };
        Subset {
            source,
            train: encode(&train_ds, &vocab, 40).unwrap(),
            dev: encode(&dev_ds, &vocab, 40).unwrap(),
            vocab,
            pretrained,
        }
    })
}

#[derive(Debug, Clone, Copy)]
struct Run {
    baseline: f64,
    trained: f64,
    time: Duration,
}

/// Dev MAP of the frozen initialisation and of the final-epoch model.
fn run(config: &TrainerConfig) -> Run {
    let start = Instant::now();
    let s = subset();
    let init = ParameterSet::init(
        &s.vocab,
        &s.pretrained,
        SCALED_DIM,
        config.k,
        config.field,
        &mut seeded_rng(config.seed),
    )
    .unwrap();
    let baseline = evaluate(&s.dev, &init, &config.model_config().unwrap()).unwrap().map;
    let out = train(&s.train, &s.dev, init, config).unwrap();
    Run {
        baseline,
        trained: out.log.last().unwrap().dev_map,
        time: start.elapsed(),
    }
}

/// Complex local-mixture runs over seeds 0..10, shared by two criteria.
/// Also returns the wall time of the whole batch.
fn main_runs() -> &'static (Vec<Run>, Duration) {
    static RUNS: OnceLock<(Vec<Run>, Duration)> = OnceLock::new();
    RUNS.get_or_init(|| {
        let start = Instant::now();
        let runs = (0..10).into_par_iter().map(|seed| run(&scaled_config(seed))).collect();
        (runs, start.elapsed())
    })
}

#[test]
fn scaled_training_signal() {
    let (runs, wall) = main_runs();
    let wins = runs.iter().filter(|r| r.trained - r.baseline >= 0.10).count();
    let gains: Vec<String> = runs.iter().map(|r| format!("{:+.3}", r.trained - r.baseline)).collect();
    let cpu: f64 = runs.iter().map(|r| r.time.as_secs_f64()).sum();
    let secs = wall.as_secs_f64();
    assert!(verdict(
        "scaled-training signal",
        wins >= 8 && secs < 1200.0,
        format!(
            "{} subset, {} train / {} dev questions; gain >= 0.10 for {wins}/10 seeds [{}]; {secs:.0}s ({cpu:.0}s cpu)",
            subset().source,
            subset().train.questions.len(),
            subset().dev.questions.len(),
            gains.join(" ")
        ),
    ));
}

fn mean_map(runs: &[Run]) -> f64 {
    runs.iter().map(|r| r.trained).sum::<f64>() / runs.len() as f64
}

fn variant_runs(edit: impl Fn(&mut TrainerConfig) + Sync) -> Vec<Run> {
    (0..5)
        .into_par_iter()
        .map(|seed| {
            let mut c = scaled_config(seed);
            edit(&mut c);
            run(&c)
        })
        .collect()
}

#[test]
fn ablation_local_beats_global() {
    let local = mean_map(&main_runs().0[..5]);
    let global = mean_map(&variant_runs(|c| c.mixture = MixtureKind::Global));
    assert!(verdict(
        "ablation local >= global",
        local >= global,
        format!("{} subset, seeds 0-4: local {local:.4}, global {global:.4}", subset().source),
    ));
}

#[test]
fn ablation_complex_beats_real() {
    let complex = mean_map(&main_runs().0[..5]);
    let real = mean_map(&variant_runs(|c| c.field = Field::Real));
    assert!(verdict(
        "ablation complex >= real",
        complex >= real,
        format!("{} subset, seeds 0-4: complex {complex:.4}, real {real:.4}", subset().source),
    ));
}

#[test]
fn metric_audit_table() {
    let start = Instant::now();
    let dims = [2, 3, 4];
    let reports: Vec<_> = [BuiltinMetric::TraceInnerProduct, BuiltinMetric::VnDivergence, BuiltinMetric::SymVn, BuiltinMetric::Fidelity]
        .par_iter()
        .map(|m| audit_metric(m, 10_000, &dims, 7).unwrap())
        .collect();
    let holds = |i: usize, a: Axiom| reports[i].result(a).holds();
    let expected = [
        ("trace-inner-product symmetry", holds(0, Axiom::Symmetry)),
        ("sym-vn symmetry", holds(2, Axiom::Symmetry)),
        ("fidelity symmetry", holds(3, Axiom::Symmetry)),
        ("vn-divergence asymmetry", !holds(1, Axiom::Symmetry)),
        ("trace-inner-product identity violation", !holds(0, Axiom::Identity)),
    ];
    let pass = expected.iter().all(|e| e.1);
    let missed: Vec<&str> = expected.iter().filter(|e| !e.1).map(|e| e.0).collect();
    println!("{}", cnm_core::metrics_lab::audit_table(&reports));
    assert!(verdict(
        "metric audit table",
        pass,
        format!(
            "10000 trials, dims {dims:?}; {} of 5 expected findings{}; {:.1}s",
            expected.len() - missed.len(),
            if missed.is_empty() { String::new() } else { format!(", missing {missed:?}") },
            start.elapsed().as_secs_f64()
        ),
    ));
}
