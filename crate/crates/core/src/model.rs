//! Trainable parameters and the model configuration shared by forward and
//! backward passes.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::embedding::{init_amplitudes, init_phases, AmplitudeTable, PhaseTable, PretrainedVectors};
use crate::error::{Error, Result};
use crate::measurement::{init_measurements, MeasurementSet};
use crate::text::Vocabulary;

/// How the word states of a sentence are combined into density matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MixtureKind {
    /// Sliding windows, softmax word weights, max pooling over windows.
    #[default]
    Local,
    /// One equal-weight mixture of the whole sentence.
    Global,
}

/// Number field of embeddings and measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Field {
    #[default]
    Complex,
    /// Phases are pinned at zero and measurement imaginary parts are frozen.
    Real,
}

/// How the configured dropout rate is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DropoutMode {
    /// The rate is the probability of zeroing an element.
    #[default]
    DropProbability,
    /// The rate is the probability of keeping an element.
    KeepProbability,
}

/// Inverted dropout with a validated drop probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dropout {
    drop: f64,
}

impl Dropout {
    pub fn new(rate: f64, mode: DropoutMode) -> Result<Self> {
        let drop = match mode {
            DropoutMode::DropProbability => rate,
            DropoutMode::KeepProbability => 1.0 - rate,
        };
        if !(0.0..1.0).contains(&drop) || !rate.is_finite() || !(0.0..=1.0).contains(&rate) {
            return Err(Error::Config(format!(
                "dropout rate {rate} gives drop probability {drop}; must lie in [0, 1)"
            )));
        }
        Ok(Self { drop })
    }

    pub fn disabled() -> Self {
        Self { drop: 0.0 }
    }

    pub fn drop_probability(&self) -> f64 {
        self.drop
    }

    /// Per-element scale factors: `0` with the drop probability, otherwise
    /// `1 / (1 - p)`. `None` means identity (eval mode or `p = 0`).
    pub fn mask<R: Rng + ?Sized>(&self, len: usize, rng: &mut R, train: bool) -> Option<Vec<f64>> {
        if !train || self.drop == 0.0 {
            return None;
        }
        let keep_scale = 1.0 / (1.0 - self.drop);
        Some(
            (0..len)
                .map(|_| if rng.random::<f64>() < self.drop { 0.0 } else { keep_scale })
                .collect(),
        )
    }

    /// Applies a fresh mask in place and returns it.
    pub fn apply<R: Rng + ?Sized>(&self, values: &mut [f64], rng: &mut R, train: bool) -> Option<Vec<f64>> {
        let mask = self.mask(values.len(), rng, train)?;
        for (x, m) in values.iter_mut().zip(&mask) {
            *x *= m;
        }
        Some(mask)
    }

    /// Complex variant: one real mask entry per element scales both parts,
    /// so phases are untouched.
    pub fn apply_complex<R: Rng + ?Sized>(
        &self,
        values: &mut [num_complex::Complex64],
        rng: &mut R,
        train: bool,
    ) -> Option<Vec<f64>> {
        let mask = self.mask(values.len(), rng, train)?;
        for (z, m) in values.iter_mut().zip(&mask) {
            *z *= m;
        }
        Some(mask)
    }
}

/// Everything the forward pass needs besides parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Sliding window lengths, concatenated in ascending order.
    pub window_sizes: Vec<usize>,
    pub mixture: MixtureKind,
    pub field: Field,
    pub dropout: Dropout,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            window_sizes: vec![1, 2, 3, 4],
            mixture: MixtureKind::Local,
            field: Field::Complex,
            dropout: Dropout::disabled(),
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mixture == MixtureKind::Local {
            if self.window_sizes.is_empty() {
                return Err(Error::Config("at least one window size is required".into()));
            }
            if self.window_sizes.contains(&0) {
                return Err(Error::Config("window sizes must be positive".into()));
            }
            if self.window_sizes.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config("window sizes must be strictly ascending".into()));
            }
        }
        Ok(())
    }

    /// Number of pooled blocks in a sentence representation.
    pub fn blocks(&self) -> usize {
        match self.mixture {
            MixtureKind::Local => self.window_sizes.len(),
            MixtureKind::Global => 1,
        }
    }
}

/// Trainable parameters: amplitudes, phases and measurement states.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    pub amplitudes: AmplitudeTable,
    pub phases: PhaseTable,
    pub measurements: MeasurementSet,
}

impl ParameterSet {
    /// Fresh parameters: pretrained or uniform amplitudes, uniform phases and
    /// one-hot measurements. Phases are zero for a real-valued model.
    pub fn init<P: PretrainedVectors + ?Sized, R: Rng + ?Sized>(
        vocab: &Vocabulary,
        pretrained: &P,
        dim: usize,
        k: usize,
        field: Field,
        rng: &mut R,
    ) -> Result<Self> {
        let amplitudes = init_amplitudes(vocab, pretrained, dim, rng)?;
        let mut phases = init_phases(vocab.len(), dim, rng);
        if field == Field::Real {
            phases.as_mut_slice().fill(0.0);
        }
        Ok(Self {
            amplitudes,
            phases,
            measurements: init_measurements(k, dim)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.cols()
    }

    pub fn vocab_size(&self) -> usize {
        self.amplitudes.rows()
    }

    pub fn measurement_count(&self) -> usize {
        self.measurements.count()
    }

    /// Checks table shapes against each other.
    pub fn validate(&self) -> Result<()> {
        let (v, n) = (self.amplitudes.rows(), self.amplitudes.cols());
        if self.phases.rows() != v || self.phases.cols() != n {
            return Err(Error::Config(format!(
                "phase table is {}x{}, amplitude table is {v}x{n}",
                self.phases.rows(),
                self.phases.cols()
            )));
        }
        if self.measurements.dim() != n {
            return Err(Error::Config(format!(
                "measurements have dim {}, embeddings have dim {n}",
                self.measurements.dim()
            )));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.amplitudes.is_finite() && self.phases.is_finite() && self.measurements.is_finite()
    }
}
