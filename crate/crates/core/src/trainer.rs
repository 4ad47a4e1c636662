//! Optimiser steps, the training loop and the grid-search driver.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::SeedableRng;

use crate::autograd::{triplet_gradient, GradientSet};
use crate::data::{sample_triplets, EncodedDataset};
use crate::error::{Error, Result};
use crate::evaluation::evaluate;
use crate::model::{Dropout, DropoutMode, Field, MixtureKind, ModelConfig, ParameterSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OptimizerKind {
    #[default]
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainerConfig {
    pub learning_rate: f64,
    /// L2 penalty on the amplitude table.
    pub l2_lambda: f64,
    pub batch_size: usize,
    /// Number of measurements.
    pub k: usize,
    pub margin: f64,
    pub dropout_rate: f64,
    pub dropout_mode: DropoutMode,
    pub window_sizes: Vec<usize>,
    pub epochs: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    pub mixture: MixtureKind,
    pub field: Field,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            l2_lambda: 1e-6,
            batch_size: 16,
            k: 50,
            margin: 0.1,
            dropout_rate: 0.9,
            dropout_mode: DropoutMode::DropProbability,
            window_sizes: vec![1, 2, 3, 4],
            epochs: 30,
            seed: 0,
            optimizer: OptimizerKind::Sgd,
            mixture: MixtureKind::Local,
            field: Field::Complex,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return Err(Error::Config(format!("l2 lambda must be non-negative, got {}", self.l2_lambda)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(Error::Config("at least one measurement is required".into()));
        }
        if !(self.margin >= 0.0 && self.margin.is_finite()) {
            return Err(Error::Config(format!("margin must be non-negative, got {}", self.margin)));
        }
        self.model_config().and_then(|m| m.validate())
    }

    pub fn model_config(&self) -> Result<ModelConfig> {
        Ok(ModelConfig {
            window_sizes: self.window_sizes.clone(),
            mixture: self.mixture,
            field: self.field,
            dropout: Dropout::new(self.dropout_rate, self.dropout_mode)?,
        })
    }
}

/// Plain gradient step: `theta -= lr * (g + l2 * theta)` with the penalty on
/// amplitudes only, then measurement rows are projected back to unit norm.
pub fn sgd_step(params: &mut ParameterSet, grads: &GradientSet, config: &TrainerConfig) -> Result<()> {
    check_grads(grads)?;
    let (lr, l2) = (config.learning_rate, config.l2_lambda);
    for (t, g) in params.amplitudes.as_mut_slice().iter_mut().zip(grads.amplitudes.as_slice()) {
        *t -= lr * (g + l2 * *t);
    }
    for (t, g) in params.phases.as_mut_slice().iter_mut().zip(grads.phases.as_slice()) {
        *t -= lr * g;
    }
    for (t, g) in params.measurements.as_mut_slice().iter_mut().zip(&grads.measurements) {
        *t -= g * lr;
    }
    finish_step(params)
}

fn check_grads(grads: &GradientSet) -> Result<()> {
    if !grads.amplitudes.is_finite() {
        return Err(Error::Numeric("non-finite gradient for amplitudes".into()));
    }
    if !grads.phases.is_finite() {
        return Err(Error::Numeric("non-finite gradient for phases".into()));
    }
    if grads.measurements.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numeric("non-finite gradient for measurements".into()));
    }
    Ok(())
}

fn finish_step(params: &mut ParameterSet) -> Result<()> {
    if !params.amplitudes.is_finite() {
        return Err(Error::Numeric("non-finite update for amplitudes".into()));
    }
    if !params.phases.is_finite() {
        return Err(Error::Numeric("non-finite update for phases".into()));
    }
    if !params.measurements.is_finite() {
        return Err(Error::Numeric("non-finite update for measurements".into()));
    }
    params.measurements.project_unit_norm();
    Ok(())
}

/// First and second moment estimates for every real parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    step: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl AdamState {
    pub fn new(params: &ParameterSet) -> Self {
        let len = 2 * params.amplitudes.as_slice().len() + 2 * params.measurements.as_slice().len();
        Self {
            step: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    /// Adam update on the same effective gradient as [`sgd_step`].
    pub fn step(&mut self, params: &mut ParameterSet, grads: &GradientSet, config: &TrainerConfig) -> Result<()> {
        check_grads(grads)?;
        self.step += 1;
        let bc1 = 1.0 - ADAM_BETA1.powi(self.step);
        let bc2 = 1.0 - ADAM_BETA2.powi(self.step);
        let lr = config.learning_rate;
        let mut slot = 0;
        let mut update = |theta: &mut f64, g: f64| {
            let m = &mut self.m[slot];
            let v = &mut self.v[slot];
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            *theta -= lr * (*m / bc1) / ((*v / bc2).sqrt() + ADAM_EPS);
            slot += 1;
        };
        for (t, g) in params.amplitudes.as_mut_slice().iter_mut().zip(grads.amplitudes.as_slice()) {
            let g = g + config.l2_lambda * *t;
            update(t, g);
        }
        for (t, g) in params.phases.as_mut_slice().iter_mut().zip(grads.phases.as_slice()) {
            update(t, *g);
        }
        for (t, g) in params.measurements.as_mut_slice().iter_mut().zip(&grads.measurements) {
            let (mut re, mut im) = (t.re, t.im);
            update(&mut re, g.re);
            update(&mut im, g.im);
            *t = Complex64::new(re, im);
        }
        finish_step(params)
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub batches: usize,
    /// Mean triplet loss over the epoch; `None` for the untrained entry.
    pub loss: Option<f64>,
    pub dev_map: f64,
    pub dev_mrr: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the epoch with the best dev MAP (earliest on ties).
    pub best: ParameterSet,
    pub best_epoch: usize,
    pub best_dev_map: f64,
    pub best_dev_mrr: f64,
    /// Parameters after the last epoch.
    pub last: ParameterSet,
    pub log: Vec<EpochRecord>,
    /// Training questions that produced no triplet.
    pub skipped_questions: Vec<String>,
}

/// Seed of epoch `epoch` derived from the run seed (splitmix64 finaliser).
pub fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    let mut z = seed ^ (epoch as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Trains from `initial` for `config.epochs` epochs and keeps the best dev
/// checkpoint. Epoch 0 in the log is the untrained model.
pub fn train(
    train_set: &EncodedDataset,
    dev_set: &EncodedDataset,
    initial: ParameterSet,
    config: &TrainerConfig,
) -> Result<TrainOutcome> {
    train_with(train_set, dev_set, initial, config, |_| {})
}

/// [`train`] with a callback invoked after every logged epoch.
pub fn train_with(
    train_set: &EncodedDataset,
    dev_set: &EncodedDataset,
    initial: ParameterSet,
    config: &TrainerConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    config.validate()?;
    initial.validate()?;
    if initial.measurement_count() != config.k {
        return Err(Error::Config(format!(
            "parameters carry {} measurements, config asks for {}",
            initial.measurement_count(),
            config.k
        )));
    }
    let model = config.model_config()?;
    let mut params = initial;
    let mut adam = (config.optimizer == OptimizerKind::Adam).then(|| AdamState::new(&params));

    let dev0 = evaluate(dev_set, &params, &model)?;
    let mut log = vec![EpochRecord {
        epoch: 0,
        batches: 0,
        loss: None,
        dev_map: dev0.map,
        dev_mrr: dev0.mrr,
    }];
    on_epoch(&log[0]);
    let mut best = (params.clone(), 0, dev0.map, dev0.mrr);
    let mut skipped_questions = Vec::new();

    for epoch in 1..=config.epochs {
        let seed = epoch_seed(config.seed, epoch);
        let sample = sample_triplets(train_set, seed);
        if sample.triplets.is_empty() {
            return Err(Error::Data("training split yields no (question, positive, negative) triplets".into()));
        }
        if epoch == 1 {
            skipped_questions = sample.skipped;
        }
        let mut loss_sum = 0.0;
        let mut batches = 0;
        for (b, batch) in sample.triplets.chunks(config.batch_size).enumerate() {
            let mut grads = GradientSet::zeros_like(&params);
            for (t, trip) in batch.iter().enumerate() {
                let q = &train_set.questions[trip.question];
                // each triplet gets its own dropout stream
                let mut rng = crate::SeededRng::seed_from_u64(seed);
                rng.set_stream(((b * config.batch_size + t) as u64) + 1);
                let out = triplet_gradient(
                    &q.tokens,
                    &q.candidates[trip.positive].tokens,
                    &q.candidates[trip.negative].tokens,
                    &params,
                    &model,
                    config.margin,
                    &mut rng,
                    true,
                    &mut grads,
                )?;
                loss_sum += out.loss;
            }
            grads.scale(1.0 / batch.len() as f64);
            match adam.as_mut() {
                Some(state) => state.step(&mut params, &grads, config)?,
                None => sgd_step(&mut params, &grads, config)?,
            }
            batches += 1;
        }
        let dev = evaluate(dev_set, &params, &model)?;
        let record = EpochRecord {
            epoch,
            batches,
            loss: Some(loss_sum / sample.triplets.len() as f64),
            dev_map: dev.map,
            dev_mrr: dev.mrr,
        };
        on_epoch(&record);
        if dev.map > best.2 {
            best = (params.clone(), epoch, dev.map, dev.mrr);
        }
        log.push(record);
    }
    let (best_params, best_epoch, best_dev_map, best_dev_mrr) = best;
    Ok(TrainOutcome {
        best: best_params,
        best_epoch,
        best_dev_map,
        best_dev_mrr,
        last: params,
        log,
        skipped_questions,
    })
}

/// Values explored by [`grid_search`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridPools {
    pub learning_rates: Vec<f64>,
    pub l2_lambdas: Vec<f64>,
    pub batch_sizes: Vec<usize>,
    pub measurement_counts: Vec<usize>,
}

impl GridPools {
    /// The published search space.
    pub fn standard() -> Self {
        Self {
            learning_rates: vec![0.01, 0.05, 0.1],
            l2_lambdas: vec![1e-5, 1e-6, 1e-7, 1e-8],
            batch_sizes: vec![8, 16, 32],
            measurement_counts: vec![50, 100, 300, 500],
        }
    }

    /// Cartesian product in `lr`, `l2`, `batch`, `k` nesting order.
    pub fn configurations(&self, base: &TrainerConfig) -> Vec<TrainerConfig> {
        let mut out = Vec::new();
        for &lr in &self.learning_rates {
            for &l2 in &self.l2_lambdas {
                for &batch in &self.batch_sizes {
                    for &k in &self.measurement_counts {
                        out.push(TrainerConfig {
                            learning_rate: lr,
                            l2_lambda: l2,
                            batch_size: batch,
                            k,
                            ..base.clone()
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub config: TrainerConfig,
    pub dev_map: f64,
    pub dev_mrr: f64,
    pub best_epoch: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub rows: Vec<GridRow>,
    /// Index into `rows` of the highest dev MAP (earliest on ties).
    pub best: usize,
}

impl GridResult {
    pub fn best_config(&self) -> &TrainerConfig {
        &self.rows[self.best].config
    }
}

/// Trains one model per configuration (the first `limit` of the product if
/// given). `init` builds fresh parameters for a configuration.
pub fn grid_search(
    train_set: &EncodedDataset,
    dev_set: &EncodedDataset,
    base: &TrainerConfig,
    pools: &GridPools,
    limit: Option<usize>,
    mut init: impl FnMut(&TrainerConfig) -> Result<ParameterSet>,
) -> Result<GridResult> {
    let mut configs = pools.configurations(base);
    if configs.is_empty() {
        return Err(Error::Config("grid pools must all be nonempty".into()));
    }
    if let Some(limit) = limit {
        configs.truncate(limit.max(1));
    }
    let mut rows = Vec::with_capacity(configs.len());
    let mut best = 0;
    for config in configs {
        let outcome = train(train_set, dev_set, init(&config)?, &config)?;
        rows.push(GridRow {
            config,
            dev_map: outcome.best_dev_map,
            dev_mrr: outcome.best_dev_mrr,
            best_epoch: outcome.best_epoch,
        });
        if rows.last().unwrap().dev_map > rows[best].dev_map {
            best = rows.len() - 1;
        }
    }
    Ok(GridResult { rows, best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{AmplitudeTable, PhaseTable, RealTable};
    use crate::measurement::init_measurements;

    fn scalar_params(theta: f64) -> ParameterSet {
        ParameterSet {
            amplitudes: AmplitudeTable(RealTable::from_vec(1, 1, vec![theta]).unwrap()),
            phases: PhaseTable(RealTable::zeros(1, 1)),
            measurements: init_measurements(1, 1).unwrap(),
        }
    }

    #[test]
    fn sgd_arithmetic() {
        let mut p = scalar_params(1.0);
        let mut g = GradientSet::zeros_like(&p);
        g.amplitudes.as_mut_slice()[0] = 0.5;
        let cfg = TrainerConfig {
            learning_rate: 0.1,
            l2_lambda: 0.0,
            ..TrainerConfig::default()
        };
        sgd_step(&mut p, &g, &cfg).unwrap();
        assert!((p.amplitudes.as_slice()[0] - 0.95).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = scalar_params(0.3);
        let before = p.clone();
        let cfg = TrainerConfig {
            l2_lambda: 0.0,
            ..TrainerConfig::default()
        };
        sgd_step(&mut p, &GradientSet::zeros_like(&before), &cfg).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn l2_only_touches_amplitudes() {
        let mut p = scalar_params(2.0);
        p.phases.as_mut_slice()[0] = 1.0;
        let cfg = TrainerConfig {
            learning_rate: 0.5,
            l2_lambda: 0.1,
            ..TrainerConfig::default()
        };
        let g = GradientSet::zeros_like(&p);
        sgd_step(&mut p, &g, &cfg).unwrap();
        assert!((p.amplitudes.as_slice()[0] - 1.9).abs() < 1e-15);
        assert_eq!(p.phases.as_slice()[0], 1.0);
    }

    #[test]
    fn measurement_rows_stay_unit() {
        let mut p = ParameterSet {
            amplitudes: AmplitudeTable(RealTable::zeros(1, 3)),
            phases: PhaseTable(RealTable::zeros(1, 3)),
            measurements: init_measurements(4, 3).unwrap(),
        };
        let mut g = GradientSet::zeros_like(&p);
        for (i, z) in g.measurements.iter_mut().enumerate() {
            *z = Complex64::new(i as f64 * 0.3 - 1.0, 0.7 - i as f64 * 0.1);
        }
        let cfg = TrainerConfig::default();
        for _ in 0..50 {
            sgd_step(&mut p, &g, &cfg).unwrap();
            assert!(p.measurements.max_norm_deviation() < 1e-9);
        }
    }

    #[test]
    fn non_finite_gradient_names_parameter() {
        let mut p = scalar_params(1.0);
        let mut g = GradientSet::zeros_like(&p);
        g.phases.as_mut_slice()[0] = f64::NAN;
        let err = sgd_step(&mut p, &g, &TrainerConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Numeric(ref m) if m.contains("phases")));
    }

    #[test]
    fn grid_enumeration() {
        let base = TrainerConfig::default();
        let all = GridPools::standard().configurations(&base);
        assert_eq!(all.len(), 144);
        assert_eq!((all[0].learning_rate, all[0].l2_lambda, all[0].batch_size, all[0].k), (0.01, 1e-5, 8, 50));
        assert_eq!((all[1].k, all[4].batch_size, all[12].l2_lambda, all[48].learning_rate), (100, 16, 1e-6, 0.05));
        let single = GridPools {
            learning_rates: vec![0.1],
            l2_lambdas: vec![0.0],
            batch_sizes: vec![4],
            measurement_counts: vec![3],
        };
        assert_eq!(single.configurations(&base).len(), 1);
    }

    #[test]
    fn config_validation() {
        assert!(TrainerConfig::default().validate().is_ok());
        assert!(TrainerConfig { learning_rate: 0.0, ..Default::default() }.validate().is_err());
        assert!(TrainerConfig { batch_size: 0, ..Default::default() }.validate().is_err());
        assert!(TrainerConfig { dropout_rate: 1.0, ..Default::default() }.validate().is_err());
    }
}
