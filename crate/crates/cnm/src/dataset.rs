//! Tab-separated QA files and the format descriptors that map their columns.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use cnm_core::data::{LoadStats, QADataset, QAPair};

use crate::error::{require_path, CliError, Result};

/// A column given by position or, for files with a header, by name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Column {
    Index(usize),
    Name(String),
}

impl Column {
    fn parse(value: &str) -> Column {
        value.parse().map_or_else(|_| Column::Name(value.to_string()), Column::Index)
    }

    fn resolve(&self, header: Option<&[&str]>) -> std::result::Result<usize, String> {
        match (self, header) {
            (Column::Index(i), _) => Ok(*i),
            (Column::Name(n), Some(h)) => h
                .iter()
                .position(|c| c.trim() == n)
                .ok_or_else(|| format!("header has no column named {n:?}")),
            (Column::Name(n), None) => Err(format!("column {n:?} is named but the format has no header")),
        }
    }
}

/// Where the four fields of a QA row live in a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormatDescriptor {
    pub name: String,
    pub header: bool,
    pub question_id: Column,
    pub question: Column,
    pub answer: Column,
    pub label: Column,
}

impl FormatDescriptor {
    /// `question_id, question, answer, label`, no header. Written by
    /// [`write_canonical_tsv`].
    pub fn canonical() -> Self {
        Self {
            name: "canonical".into(),
            header: false,
            question_id: Column::Index(0),
            question: Column::Index(1),
            answer: Column::Index(2),
            label: Column::Index(3),
        }
    }

    /// The published WikiQA layout: `QuestionID, Question, DocumentID,
    /// DocumentTitle, SentenceID, Sentence, Label` with a header row.
    pub fn wikiqa() -> Self {
        Self {
            name: "wikiqa".into(),
            header: true,
            question_id: Column::Name("QuestionID".into()),
            question: Column::Name("Question".into()),
            answer: Column::Name("Sentence".into()),
            label: Column::Name("Label".into()),
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "canonical" => Some(Self::canonical()),
            "wikiqa" => Some(Self::wikiqa()),
            _ => None,
        }
    }

    /// Parses `key = value` lines; `#` starts a comment. Keys: `name`,
    /// `preset`, `header`, `question_id`, `question`, `answer`, `label`.
    /// A `preset` line supplies defaults that later keys override.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut fmt = Self::canonical();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| CliError::parse(origin, no + 1, format!("expected key = value, got {line:?}")))?;
            match key {
                "preset" => {
                    fmt = Self::preset(value)
                        .ok_or_else(|| CliError::parse(origin, no + 1, format!("unknown preset {value:?}")))?
                }
                "name" => fmt.name = value.to_string(),
                "header" => {
                    fmt.header = value
                        .parse()
                        .map_err(|_| CliError::parse(origin, no + 1, format!("header must be true or false, got {value:?}")))?
                }
                "question_id" => fmt.question_id = Column::parse(value),
                "question" => fmt.question = Column::parse(value),
                "answer" => fmt.answer = Column::parse(value),
                "label" => fmt.label = Column::parse(value),
                other => return Err(CliError::parse(origin, no + 1, format!("unknown key {other:?}"))),
            }
        }
        Ok(fmt)
    }

    pub fn load(path: &Path) -> Result<Self> {
        require_path(path)?;
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn to_text(&self) -> String {
        let col = |c: &Column| match c {
            Column::Index(i) => i.to_string(),
            Column::Name(n) => n.clone(),
        };
        format!(
            "name = {}\nheader = {}\nquestion_id = {}\nquestion = {}\nanswer = {}\nlabel = {}\n",
            self.name,
            self.header,
            col(&self.question_id),
            col(&self.question),
            col(&self.answer),
            col(&self.label)
        )
    }
}

/// Reads QA rows from `reader`; `origin` is used in error messages.
pub fn read_pairs(reader: impl BufRead, format: &FormatDescriptor, origin: &Path) -> Result<Vec<QAPair>> {
    let mut lines = reader.lines().enumerate();
    let header_line = if format.header {
        match lines.next() {
            Some((_, line)) => Some(line.map_err(|e| CliError::io(origin, e))?),
            None => return Ok(Vec::new()),
        }
    } else {
        None
    };
    let header: Option<Vec<&str>> = header_line.as_deref().map(|h| h.split('\t').collect());
    let first_data_line = if format.header { 2 } else { 1 };
    let resolve = |c: &Column| c.resolve(header.as_deref()).map_err(|m| CliError::parse(origin, 1, m));
    let cols = [
        resolve(&format.question_id)?,
        resolve(&format.question)?,
        resolve(&format.answer)?,
        resolve(&format.label)?,
    ];
    let needed = cols.iter().max().unwrap() + 1;

    let mut pairs = Vec::new();
    for (idx, line) in lines {
        let line = line.map_err(|e| CliError::io(origin, e))?;
        let no = idx + 1;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < needed {
            return Err(CliError::parse(
                origin,
                no.max(first_data_line),
                format!("expected at least {needed} tab-separated fields, found {}", fields.len()),
            ));
        }
        let label = match fields[cols[3]].trim() {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(cnm_core::Error::Data(format!(
                    "{}:{no}: unknown label {other:?}",
                    origin.display()
                ))
                .into())
            }
        };
        pairs.push(QAPair {
            question_id: fields[cols[0]].to_string(),
            question: fields[cols[1]].to_string(),
            answer: fields[cols[2]].to_string(),
            label,
        });
    }
    Ok(pairs)
}

/// Loads, groups and filters a QA file.
pub fn load_tsv(path: &Path, format: &FormatDescriptor, split: &str) -> Result<(QADataset, LoadStats)> {
    require_path(path)?;
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let pairs = read_pairs(BufReader::new(file), format, path)?;
    Ok(QADataset::from_pairs(split, pairs)?)
}

fn clean(field: &str) -> String {
    field.replace(['\t', '\n', '\r'], " ")
}

/// Writes `question_id, question, answer, label` rows without a header.
pub fn write_canonical(dataset: &QADataset, out: impl Write) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    for p in dataset.pairs() {
        writeln!(out, "{}\t{}\t{}\t{}", clean(&p.question_id), clean(&p.question), clean(&p.answer), p.label)?;
    }
    out.flush()
}

pub fn write_canonical_tsv(dataset: &QADataset, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_canonical(dataset, file).map_err(|e| CliError::io(path, e))
}
