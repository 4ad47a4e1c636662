//! Polar-parameterised complex word embeddings.
//!
//! A word is stored as two real rows: amplitudes `r_j` and phases `phi_j`.
//! Its raw complex vector has elements `r_j e^{i phi_j}`; the direction of
//! that vector is the word's superposition state and its length is the
//! word weight used by the local mixture.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Deref, DerefMut};

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::ComplexVector;
use crate::text::{Vocabulary, PAD_TOKEN};

/// Weight assigned to a degenerate (zero-length) word vector.
pub const DEGENERATE_WEIGHT: f64 = 1e-8;
/// Norm of the initial padding row.
pub const PADDING_NORM: f64 = 1e-8;
/// Half-width of the uniform range for rows without a pretrained vector.
pub const OOV_INIT_RANGE: f64 = 0.25;

/// Dense row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RealTable {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealTable {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(crate::error::shape_err(
                "RealTable::from_vec",
                format!("{} values", rows * cols),
                format!("{} values", data.len()),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    fn checked_row(&self, i: usize) -> Result<&[f64]> {
        if i >= self.rows {
            return Err(Error::Lookup {
                index: i,
                len: self.rows,
            });
        }
        Ok(self.row(i))
    }
}

macro_rules! table_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(pub RealTable);

        impl Deref for $name {
            type Target = RealTable;
            fn deref(&self) -> &RealTable {
                &self.0
            }
        }

        impl DerefMut for $name {
            fn deref_mut(&mut self) -> &mut RealTable {
                &mut self.0
            }
        }
    };
}

table_newtype!(
    /// Per-word amplitude rows, `|V| x n`. Row norms are meaningful.
    AmplitudeTable
);
table_newtype!(
    /// Per-word phase rows in radians, `|V| x n`.
    PhaseTable
);

/// A normalised word: unit state plus the length of the raw vector.
#[derive(Debug, Clone, PartialEq)]
pub struct WordState {
    pub state: ComplexVector,
    pub weight: f64,
}

/// `element_j = R[w][j] * e^{i Phi[w][j]}`.
pub fn assemble_word_vector(word: usize, amplitudes: &AmplitudeTable, phases: &PhaseTable) -> Result<ComplexVector> {
    let r = amplitudes.checked_row(word)?;
    let phi = phases.checked_row(word)?;
    if r.len() != phi.len() {
        return Err(crate::error::shape_err(
            "assemble_word_vector",
            format!("phase width {}", r.len()),
            format!("phase width {}", phi.len()),
        ));
    }
    Ok(ComplexVector::new(
        r.iter().zip(phi).map(|(&a, &p)| Complex64::from_polar(a, p)).collect(),
    ))
}

/// Splits a raw vector into its unit direction and its 2-norm.
pub fn normalize_word(v: &ComplexVector) -> Result<WordState> {
    let norm = v.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::Degenerate(format!("cannot normalise word vector with norm {norm}")));
    }
    Ok(WordState {
        state: v.scale(Complex64::new(1.0 / norm, 0.0)),
        weight: norm,
    })
}

/// Like [`normalize_word`], but maps a zero vector to the uniform state
/// `1/sqrt(n)` with weight [`DEGENERATE_WEIGHT`].
pub fn normalize_word_or_uniform(v: &ComplexVector) -> WordState {
    match normalize_word(v) {
        Ok(w) => w,
        Err(_) => uniform_state(v.dim()),
    }
}

pub(crate) fn uniform_state(n: usize) -> WordState {
    let x = 1.0 / (n as f64).sqrt();
    WordState {
        state: ComplexVector::new(vec![Complex64::new(x, 0.0); n]),
        weight: DEGENERATE_WEIGHT,
    }
}

/// Source of pretrained real vectors keyed by token.
pub trait PretrainedVectors {
    fn dim(&self) -> usize;
    fn get(&self, token: &str) -> Option<&[f64]>;
}

impl PretrainedVectors for BTreeMap<String, Vec<f64>> {
    fn dim(&self) -> usize {
        self.values().next().map_or(0, Vec::len)
    }

    fn get(&self, token: &str) -> Option<&[f64]> {
        BTreeMap::get(self, token).map(Vec::as_slice)
    }
}

/// Amplitude table seeded from pretrained vectors.
///
/// Tokens with a pretrained vector copy it; other rows draw from
/// `U(-0.25, 0.25)`. The padding row is a constant row of norm `1e-8`.
pub fn init_amplitudes<P: PretrainedVectors + ?Sized, R: Rng + ?Sized>(
    vocab: &Vocabulary,
    pretrained: &P,
    dim: usize,
    rng: &mut R,
) -> Result<AmplitudeTable> {
    if dim == 0 {
        return Err(Error::Config("embedding dimension must be positive".into()));
    }
    let mut table = RealTable::zeros(vocab.len(), dim);
    for (i, token) in vocab.tokens().iter().enumerate() {
        let row = table.row_mut(i);
        if token == PAD_TOKEN {
            row.fill(PADDING_NORM / (dim as f64).sqrt());
        } else if let Some(values) = pretrained.get(token) {
            if values.len() != dim {
                return Err(Error::Config(format!(
                    "pretrained vector for {token:?} has {} values, expected {dim}",
                    values.len()
                )));
            }
            row.copy_from_slice(values);
        } else {
            for x in row.iter_mut() {
                *x = rng.random_range(-OOV_INIT_RANGE..OOV_INIT_RANGE);
            }
        }
    }
    Ok(AmplitudeTable(table))
}

/// Phases drawn uniformly from `[-pi, pi]`.
pub fn init_phases<R: Rng + ?Sized>(vocab_size: usize, dim: usize, rng: &mut R) -> PhaseTable {
    let mut table = RealTable::zeros(vocab_size, dim);
    for x in table.as_mut_slice() {
        *x = rng.random_range(-PI..=PI);
    }
    PhaseTable(table)
}
