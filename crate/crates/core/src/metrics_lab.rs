//! Distances between density matrices and an empirical audit of the metric
//! axioms they satisfy.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_distr::{Exp1, StandardNormal};

use crate::error::{shape_err, Error, Result};
use crate::linalg::{hermitian_eig, matmul, singular_values, trace_of_product, ComplexMatrix, ComplexVector};
use crate::mixture::DensityMatrix;

/// Floor applied to eigenvalues before the matrix logarithm.
pub const LOG_EIGEN_FLOOR: f64 = 1e-12;
/// `1 - F` values at or below this are rounding noise and give a zero
/// square-root distance.
pub const FIDELITY_ROUNDING: f64 = 1e-13;
/// Tolerance beyond which an axiom check counts as a violation.
pub const AXIOM_TOL: f64 = 1e-9;
/// Minimum Frobenius separation for two states to count as distinct.
pub const DISTINCT_TOL: f64 = 1e-3;
const IMAG_RESIDUE_TOL: f64 = 1e-9;

fn check_dims(op: &'static str, a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(shape_err(op, format!("dim {}", a.dim()), format!("dim {}", b.dim())));
    }
    Ok(())
}

fn real_trace_product(op: &str, a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    let t = trace_of_product(a, b)?;
    if t.im.abs() > IMAG_RESIDUE_TOL {
        return Err(Error::Numeric(format!("{op}: imaginary residue {:e}", t.im)));
    }
    Ok(t.re)
}

/// `tr(rho_a rho_b)`.
pub fn trace_inner_product(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    check_dims("trace_inner_product", a, b)?;
    real_trace_product("trace_inner_product", a.matrix(), b.matrix())
}

/// The two-dimensional pair `rho_a = alpha P1 + (1 - alpha) P2`, `rho_b = P1`
/// on orthogonal projectors.
pub fn counterexample_pair(alpha: f64) -> Result<(DensityMatrix, DensityMatrix)> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    Ok((DensityMatrix::diagonal(&[alpha, 1.0 - alpha])?, DensityMatrix::diagonal(&[1.0, 0.0])?))
}

/// `tr(rho_a rho_a) - tr(rho_a rho_b)` on [`counterexample_pair`]. Negative
/// for `alpha` in `(1/2, 1)`.
pub fn self_similarity_gap(alpha: f64) -> Result<f64> {
    let (a, b) = counterexample_pair(alpha)?;
    Ok(trace_inner_product(&a, &a)? - trace_inner_product(&a, &b)?)
}

fn log_matrix(a: &DensityMatrix) -> Result<ComplexMatrix> {
    crate::linalg::matrix_function(a.matrix(), f64::ln, LOG_EIGEN_FLOOR)
}

/// `tr(rho_a log rho_a) - tr(rho_a log rho_b)`, with eigenvalues floored at
/// [`LOG_EIGEN_FLOOR`] inside the logarithms.
pub fn vn_divergence(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    check_dims("vn_divergence", a, b)?;
    let la = log_matrix(a)?;
    let lb = log_matrix(b)?;
    Ok(real_trace_product("vn_divergence", a.matrix(), &la)? - real_trace_product("vn_divergence", a.matrix(), &lb)?)
}

/// Mean of both divergence directions.
pub fn sym_vn(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    Ok(0.5 * (vn_divergence(a, b)? + vn_divergence(b, a)?))
}

/// `(tr sqrt(sqrt(rho_a) rho_b sqrt(rho_a)))^2`, clamped to `[0, 1]`.
///
/// The inner trace equals the sum of singular values of
/// `sqrt(rho_a) sqrt(rho_b)`, which is what is computed: swapping the
/// arguments only transposes that product, and no rounding-level eigenvalue
/// passes through a second square root.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    check_dims("fidelity", a, b)?;
    let sa = crate::linalg::matrix_function(a.matrix(), f64::sqrt, 0.0)?;
    let sb = crate::linalg::matrix_function(b.matrix(), f64::sqrt, 0.0)?;
    let nuclear: f64 = singular_values(&matmul(&sa, &sb)?)?.iter().sum();
    let f = nuclear * nuclear;
    if !f.is_finite() {
        return Err(Error::Numeric("fidelity: non-finite result".into()));
    }
    Ok(f.clamp(0.0, 1.0))
}

/// `1 - F`.
pub fn fidelity_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    Ok(1.0 - fidelity(a, b)?)
}

/// `sqrt(1 - F)`.
pub fn sqrt_fidelity_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    let d = fidelity_distance(a, b)?;
    Ok(if d <= FIDELITY_ROUNDING { 0.0 } else { d.sqrt() })
}

/// Whether a metric's raw value grows with similarity or with distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    /// Audited through the induced distance `s(a, a) - s(a, b)`; symmetry is
    /// checked on the raw score.
    Similarity,
    Divergence,
}

pub trait DensityMetric {
    fn name(&self) -> &str;
    fn kind(&self) -> MetricKind;
    fn eval(&self, a: &DensityMatrix, b: &DensityMatrix) -> Result<f64>;

    fn distance(&self, a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
        match self.kind() {
            MetricKind::Divergence => self.eval(a, b),
            MetricKind::Similarity => Ok(self.eval(a, a)? - self.eval(a, b)?),
        }
    }
}

pub type MetricFn = Box<dyn Fn(&DensityMatrix, &DensityMatrix) -> Result<f64> + Send + Sync>;

/// A metric defined by a plain function.
pub struct FnMetric {
    pub name: String,
    pub kind: MetricKind,
    pub f: MetricFn,
}

impl DensityMetric for FnMetric {
    fn name(&self) -> &str {
        &self.name
    }

    fn kind(&self) -> MetricKind {
        self.kind
    }

    fn eval(&self, a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
        (self.f)(a, b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinMetric {
    TraceInnerProduct,
    VnDivergence,
    SymVn,
    Fidelity,
    SqrtFidelity,
}

impl BuiltinMetric {
    pub const ALL: [BuiltinMetric; 5] = [
        BuiltinMetric::TraceInnerProduct,
        BuiltinMetric::VnDivergence,
        BuiltinMetric::SymVn,
        BuiltinMetric::Fidelity,
        BuiltinMetric::SqrtFidelity,
    ];

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }
}

impl DensityMetric for BuiltinMetric {
    fn name(&self) -> &str {
        match self {
            BuiltinMetric::TraceInnerProduct => "trace-inner-product",
            BuiltinMetric::VnDivergence => "vn-divergence",
            BuiltinMetric::SymVn => "sym-vn",
            BuiltinMetric::Fidelity => "fidelity",
            BuiltinMetric::SqrtFidelity => "sqrt-fidelity",
        }
    }

    fn kind(&self) -> MetricKind {
        match self {
            BuiltinMetric::TraceInnerProduct => MetricKind::Similarity,
            _ => MetricKind::Divergence,
        }
    }

    fn eval(&self, a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
        match self {
            BuiltinMetric::TraceInnerProduct => trace_inner_product(a, b),
            BuiltinMetric::VnDivergence => vn_divergence(a, b),
            BuiltinMetric::SymVn => sym_vn(a, b),
            BuiltinMetric::Fidelity => fidelity_distance(a, b),
            BuiltinMetric::SqrtFidelity => sqrt_fidelity_distance(a, b),
        }
    }
}

/// Normalised complex Gaussian vector.
pub fn random_pure_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexVector {
    loop {
        let v = ComplexVector::new(
            (0..dim)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect(),
        );
        let norm = v.norm();
        if norm > 1e-12 {
            return v.scale(Complex64::new(1.0 / norm, 0.0));
        }
    }
}

/// Mixture of `m` random pure states, `m` uniform in `1..=dim`, with
/// flat-Dirichlet weights.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<DensityMatrix> {
    if dim == 0 {
        return Err(Error::Config("density dimension must be positive".into()));
    }
    let m = rng.random_range(1..=dim);
    let raw: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = raw.iter().sum();
    let mut mat = ComplexMatrix::zeros(dim, dim);
    for w in raw {
        mat.add_scaled_projector(w / total, random_pure_state(dim, rng).as_slice())?;
    }
    DensityMatrix::new(mat)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Axiom {
    NonNegativity,
    Identity,
    Symmetry,
    Triangle,
}

impl Axiom {
    pub const ALL: [Axiom; 4] = [Axiom::NonNegativity, Axiom::Identity, Axiom::Symmetry, Axiom::Triangle];

    pub fn label(self) -> &'static str {
        match self {
            Axiom::NonNegativity => "non-negativity",
            Axiom::Identity => "identity",
            Axiom::Symmetry => "symmetry",
            Axiom::Triangle => "triangle inequality",
        }
    }
}

/// Where a counterexample came from.
#[derive(Debug, Clone, PartialEq)]
pub enum CaseOrigin {
    /// Random trial `trial` of a run seeded with `seed`.
    Trial { seed: u64, trial: usize },
    /// The analytic two-state pair at this `alpha`.
    Counterexample { alpha: f64 },
}

/// A stored violation: the states involved and how far past tolerance the
/// axiom failed.
#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub axiom: Axiom,
    pub origin: CaseOrigin,
    pub states: Vec<DensityMatrix>,
    /// Amount by which the axiom's inequality is broken.
    pub excess: f64,
}

impl Counterexample {
    /// Re-evaluates the violation on the stored states.
    pub fn reproduces(&self, metric: &dyn DensityMetric) -> Result<bool> {
        Ok(axiom_excess(metric, self.axiom, &self.states)? > AXIOM_TOL)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomResult {
    pub axiom: Axiom,
    pub checks: usize,
    pub violations: usize,
    /// Largest violation seen, if any.
    pub worst: Option<Counterexample>,
}

impl AxiomResult {
    pub fn holds(&self) -> bool {
        self.worst.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricAuditReport {
    pub metric: String,
    pub kind: MetricKind,
    pub trials: usize,
    pub dims: Vec<usize>,
    pub seed: u64,
    pub axioms: Vec<AxiomResult>,
}

impl MetricAuditReport {
    pub fn result(&self, axiom: Axiom) -> &AxiomResult {
        self.axioms.iter().find(|r| r.axiom == axiom).expect("every axiom is audited")
    }

    pub fn holds(&self, axiom: Axiom) -> bool {
        self.result(axiom).holds()
    }
}

/// Positive when `states` break `axiom` for `metric`.
///
/// Identity takes `[x]` (self-distance) or `[x, y]` (distinct states at zero
/// distance), non-negativity and symmetry take `[x, y]`, triangle `[x, y, z]`.
fn axiom_excess(metric: &dyn DensityMetric, axiom: Axiom, states: &[DensityMatrix]) -> Result<f64> {
    match (axiom, states) {
        (Axiom::NonNegativity, [x, y]) => Ok(-metric.distance(x, y)?),
        (Axiom::Identity, [x]) => Ok(metric.distance(x, x)?.abs()),
        (Axiom::Identity, [x, y]) => {
            if x.matrix().frobenius_distance(y.matrix())? < DISTINCT_TOL {
                return Ok(0.0);
            }
            // distinct states must be strictly apart; report how close to zero
            Ok(2.0 * AXIOM_TOL - metric.distance(x, y)?)
        }
        (Axiom::Symmetry, [x, y]) => Ok((metric.eval(x, y)? - metric.eval(y, x)?).abs()),
        (Axiom::Triangle, [x, y, z]) => Ok(metric.distance(x, z)? - metric.distance(x, y)? - metric.distance(y, z)?),
        _ => Err(Error::Internal(format!("{} check given {} states", axiom.label(), states.len()))),
    }
}

/// Generator for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: usize) -> crate::SeededRng {
    let mut rng = crate::SeededRng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// The states of one random trial: `x`, `y`, `z` of a common dimension.
/// Half of the trials put `y` on the segment between `x` and `z`, where
/// triangle violations concentrate.
pub fn trial_states(dims: &[usize], seed: u64, trial: usize) -> Result<[DensityMatrix; 3]> {
    if dims.is_empty() {
        return Err(Error::Config("audit needs at least one dimension".into()));
    }
    let mut rng = trial_rng(seed, trial);
    let dim = dims[rng.random_range(0..dims.len())];
    let x = random_density(dim, &mut rng)?;
    let z = random_density(dim, &mut rng)?;
    let y = if rng.random_bool(0.5) {
        let t: f64 = rng.random_range(0.05..0.95);
        let mixed = x
            .matrix()
            .scale(Complex64::new(t, 0.0))
            .add(&z.matrix().scale(Complex64::new(1.0 - t, 0.0)))?;
        DensityMatrix::new(mixed)?
    } else {
        random_density(dim, &mut rng)?
    };
    Ok([x, y, z])
}

/// Alphas of the analytic pair injected into every audit: one on each side of
/// the sign change and the zero-distance point itself.
pub const INJECTED_ALPHAS: [f64; 3] = [0.25, 0.5, 0.75];

/// Tests `metric` against the four axioms on `trials` random triples plus the
/// injected analytic pairs.
pub fn audit_metric(metric: &dyn DensityMetric, trials: usize, dims: &[usize], seed: u64) -> Result<MetricAuditReport> {
    if trials == 0 {
        return Err(Error::Config("audit needs at least one trial".into()));
    }
    let mut results: Vec<AxiomResult> = Axiom::ALL
        .iter()
        .map(|&axiom| AxiomResult {
            axiom,
            checks: 0,
            violations: 0,
            worst: None,
        })
        .collect();
    let mut record = |axiom: Axiom, origin: &CaseOrigin, states: &[DensityMatrix]| -> Result<()> {
        let excess = axiom_excess(metric, axiom, states)?;
        let r = &mut results[axiom as usize];
        r.checks += 1;
        if excess > AXIOM_TOL {
            r.violations += 1;
            if r.worst.as_ref().is_none_or(|w| excess > w.excess) {
                r.worst = Some(Counterexample {
                    axiom,
                    origin: origin.clone(),
                    states: states.to_vec(),
                    excess,
                });
            }
        }
        Ok(())
    };

    for &alpha in &INJECTED_ALPHAS {
        let (a, b) = counterexample_pair(alpha)?;
        let origin = CaseOrigin::Counterexample { alpha };
        let pair = [a, b];
        record(Axiom::NonNegativity, &origin, &pair)?;
        record(Axiom::Identity, &origin, &pair)?;
        record(Axiom::Symmetry, &origin, &pair)?;
    }

    for trial in 0..trials {
        let [x, y, z] = trial_states(dims, seed, trial)?;
        let origin = CaseOrigin::Trial { seed, trial };
        let xy = [x.clone(), y.clone()];
        record(Axiom::NonNegativity, &origin, &xy)?;
        record(Axiom::Identity, &origin, &xy[..1])?;
        record(Axiom::Identity, &origin, &xy)?;
        record(Axiom::Symmetry, &origin, &xy)?;
        record(Axiom::Triangle, &origin, &[x, y, z])?;
    }

    Ok(MetricAuditReport {
        metric: String::from(metric.name()),
        kind: metric.kind(),
        trials,
        dims: dims.to_vec(),
        seed,
        axioms: results,
    })
}

/// Plain-text table with one row per metric: `+` where no violation was
/// found, `-` where a stored counterexample exists.
pub fn audit_table(reports: &[MetricAuditReport]) -> String {
    let width = reports.iter().map(|r| r.metric.len()).max().unwrap_or(0).max("metric".len());
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  non-negativity  identity  symmetry  triangle inequality  differentiability  computing complexity",
        "metric"
    );
    for r in reports {
        let flag = |a: Axiom| if r.holds(a) { "+" } else { "-" };
        let _ = writeln!(
            out,
            "{:<width$}  {:<14}  {:<8}  {:<8}  {:<19}  {:<17}  O(n^3)",
            r.metric,
            flag(Axiom::NonNegativity),
            flag(Axiom::Identity),
            flag(Axiom::Symmetry),
            flag(Axiom::Triangle),
            "n/a",
        );
    }
    out
}

/// Eigenvalues of a density matrix, descending.
pub fn spectrum(a: &DensityMatrix) -> Result<Vec<f64>> {
    Ok(hermitian_eig(a.matrix())?.eigenvalues)
}
