//! Portable text checkpoint of a trained model.
//!
//! ```text
//! cnm-checkpoint 1
//! dim <n>
//! vocab <|V|>
//! measurements <k>
//! mixture local|global
//! field complex|real
//! windows <l1> <l2> ...
//! [vocab]            one token per line, in index order
//! [amplitudes]       |V| rows of n values
//! [phases]           |V| rows of n values
//! [measurements]     k rows of 2n values: re im re im ...
//! ```
//!
//! Numbers use Rust's shortest round-trip formatting, so save then load is
//! exact and equal parameters give byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use cnm_core::embedding::{AmplitudeTable, PhaseTable, RealTable};
use cnm_core::linalg::Complex64;
use cnm_core::measurement::MeasurementSet;
use cnm_core::model::{Dropout, Field, MixtureKind, ModelConfig, ParameterSet};
use cnm_core::text::Vocabulary;

use crate::error::{require_path, CliError, Result};

const MAGIC: &str = "cnm-checkpoint";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub vocab: Vocabulary,
    pub params: ParameterSet,
    /// Architecture the parameters were trained with; dropout is not stored.
    pub model: ModelConfig,
}

pub fn mixture_name(m: MixtureKind) -> &'static str {
    match m {
        MixtureKind::Local => "local",
        MixtureKind::Global => "global",
    }
}

pub fn field_name(f: Field) -> &'static str {
    match f {
        Field::Complex => "complex",
        Field::Real => "real",
    }
}

pub fn parse_mixture(s: &str) -> Option<MixtureKind> {
    match s {
        "local" => Some(MixtureKind::Local),
        "global" => Some(MixtureKind::Global),
        _ => None,
    }
}

pub fn parse_field(s: &str) -> Option<Field> {
    match s {
        "complex" => Some(Field::Complex),
        "real" => Some(Field::Real),
        _ => None,
    }
}

fn join(values: impl Iterator<Item = f64>) -> String {
    let mut s = String::new();
    for (i, v) in values.enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{v:?}");
    }
    s
}

impl Checkpoint {
    pub fn new(vocab: Vocabulary, params: ParameterSet, model: ModelConfig) -> Result<Self> {
        params.validate()?;
        if vocab.len() != params.vocab_size() {
            return Err(CliError::Config(format!(
                "vocabulary has {} tokens but the amplitude table has {} rows",
                vocab.len(),
                params.vocab_size()
            )));
        }
        Ok(Self { vocab, params, model })
    }

    pub fn to_text(&self) -> String {
        let p = &self.params;
        let (n, v, k) = (p.dim(), p.vocab_size(), p.measurement_count());
        let mut s = String::new();
        let _ = writeln!(s, "{MAGIC} {VERSION}");
        let _ = writeln!(s, "dim {n}\nvocab {v}\nmeasurements {k}");
        let _ = writeln!(s, "mixture {}", mixture_name(self.model.mixture));
        let _ = writeln!(s, "field {}", field_name(self.model.field));
        let windows: Vec<String> = self.model.window_sizes.iter().map(ToString::to_string).collect();
        let _ = writeln!(s, "windows {}", windows.join(" "));
        s.push_str("[vocab]\n");
        for t in self.vocab.tokens() {
            let _ = writeln!(s, "{t}");
        }
        s.push_str("[amplitudes]\n");
        for i in 0..v {
            let _ = writeln!(s, "{}", join(p.amplitudes.row(i).iter().copied()));
        }
        s.push_str("[phases]\n");
        for i in 0..v {
            let _ = writeln!(s, "{}", join(p.phases.row(i).iter().copied()));
        }
        s.push_str("[measurements]\n");
        for i in 0..k {
            let _ = writeln!(s, "{}", join(p.measurements.row(i).iter().flat_map(|z| [z.re, z.im])));
        }
        s
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| CliError::parse(origin, 0, format!("unexpected end of file, expected {what}")))
        };
        let (no, magic) = next("header")?;
        if magic != format!("{MAGIC} {VERSION}") {
            return Err(CliError::parse(origin, no, format!("not a version {VERSION} checkpoint: {magic:?}")));
        }
        let mut field = |key: &str| -> Result<(usize, String)> {
            let (no, line) = next(key)?;
            line.strip_prefix(key)
                .and_then(|r| r.strip_prefix(' ').or(Some(r).filter(|r| r.is_empty())))
                .map(|r| (no, r.to_string()))
                .ok_or_else(|| CliError::parse(origin, no, format!("expected `{key} ...`, got {line:?}")))
        };
        let number = |(no, s): (usize, String)| -> Result<usize> {
            s.trim().parse().map_err(|_| CliError::parse(origin, no, format!("bad count {s:?}")))
        };
        let n = number(field("dim")?)?;
        let v = number(field("vocab")?)?;
        let k = number(field("measurements")?)?;
        let (no, m) = field("mixture")?;
        let mixture = parse_mixture(&m).ok_or_else(|| CliError::parse(origin, no, format!("unknown mixture {m:?}")))?;
        let (no, f) = field("field")?;
        let fld = parse_field(&f).ok_or_else(|| CliError::parse(origin, no, format!("unknown field {f:?}")))?;
        let (no, w) = field("windows")?;
        let window_sizes = w
            .split_whitespace()
            .map(|x| x.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| CliError::parse(origin, no, format!("bad window list {w:?}")))?;

        let mut section = |name: &str, rows: usize| -> Result<Vec<(usize, &str)>> {
            let (no, line) = next(name)?;
            if line != format!("[{name}]") {
                return Err(CliError::parse(origin, no, format!("expected [{name}], got {line:?}")));
            }
            (0..rows).map(|_| next(name)).collect()
        };
        let floats = |rows: Vec<(usize, &str)>, width: usize| -> Result<Vec<f64>> {
            let mut out = Vec::with_capacity(rows.len() * width);
            for (no, line) in rows {
                let vals = line
                    .split_whitespace()
                    .map(str::parse::<f64>)
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| CliError::parse(origin, no, format!("bad number: {e}")))?;
                if vals.len() != width {
                    return Err(CliError::parse(origin, no, format!("expected {width} values, found {}", vals.len())));
                }
                out.extend(vals);
            }
            Ok(out)
        };
        let tokens: Vec<String> = section("vocab", v)?.into_iter().map(|(_, t)| t.to_string()).collect();
        let amps = floats(section("amplitudes", v)?, n)?;
        let phases = floats(section("phases", v)?, n)?;
        let meas = floats(section("measurements", k)?, 2 * n)?;

        let vocab = Vocabulary::from_tokens(tokens)?;
        let params = ParameterSet {
            amplitudes: AmplitudeTable(RealTable::from_vec(v, n, amps)?),
            phases: PhaseTable(RealTable::from_vec(v, n, phases)?),
            measurements: MeasurementSet::from_vec(k, n, meas.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect())?,
        };
        let model = ModelConfig {
            window_sizes,
            mixture,
            field: fld,
            dropout: Dropout::disabled(),
        };
        model.validate()?;
        Self::new(vocab, params, model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        require_path(path)?;
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }
}
