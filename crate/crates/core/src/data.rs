//! Question/answer datasets, filtering, encoding and triplet sampling.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::text::{tokenize, Vocabulary};

/// One labelled row of a raw dataset file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QAPair {
    pub question_id: String,
    pub question: String,
    pub answer: String,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub text: String,
    pub label: u8,
}

/// A question with its candidates; a candidate's id is its index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Question {
    pub id: String,
    pub text: String,
    pub candidates: Vec<Candidate>,
}

impl Question {
    pub fn positives(&self) -> usize {
        self.candidates.iter().filter(|c| c.label == 1).count()
    }

    pub fn negatives(&self) -> usize {
        self.candidates.len() - self.positives()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QADataset {
    pub split: String,
    pub questions: Vec<Question>,
}

/// Counts reported after loading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LoadStats {
    pub rows: usize,
    pub dropped_empty: usize,
    pub dropped_questions: usize,
    pub questions: usize,
    pub pairs: usize,
}

impl QADataset {
    /// Groups rows by question id (first-seen order), drops rows whose
    /// question or answer tokenises to nothing, and removes questions
    /// without a correct answer.
    pub fn from_pairs(split: impl Into<String>, pairs: impl IntoIterator<Item = QAPair>) -> Result<(Self, LoadStats)> {
        let mut stats = LoadStats::default();
        let mut order: Vec<Question> = Vec::new();
        let mut slot: BTreeMap<String, usize> = BTreeMap::new();
        for pair in pairs {
            stats.rows += 1;
            if pair.label > 1 {
                return Err(Error::Data(alloc::format!(
                    "label {} for question {} is not binary",
                    pair.label, pair.question_id
                )));
            }
            if tokenize(&pair.question).is_empty() || tokenize(&pair.answer).is_empty() {
                stats.dropped_empty += 1;
                continue;
            }
            let idx = *slot.entry(pair.question_id.clone()).or_insert_with(|| {
                order.push(Question {
                    id: pair.question_id.clone(),
                    text: pair.question.clone(),
                    candidates: Vec::new(),
                });
                order.len() - 1
            });
            order[idx].candidates.push(Candidate {
                text: pair.answer,
                label: pair.label,
            });
        }
        let before = order.len();
        order.retain(|q| q.positives() > 0);
        stats.dropped_questions = before - order.len();
        let dataset = QADataset {
            split: split.into(),
            questions: order,
        };
        stats.questions = dataset.questions.len();
        stats.pairs = dataset.pair_count();
        Ok((dataset, stats))
    }

    pub fn pair_count(&self) -> usize {
        self.questions.iter().map(|q| q.candidates.len()).sum()
    }

    /// Rows in file order, as written by the canonical TSV writer.
    pub fn pairs(&self) -> impl Iterator<Item = QAPair> + '_ {
        self.questions.iter().flat_map(|q| {
            q.candidates.iter().map(move |c| QAPair {
                question_id: q.id.clone(),
                question: q.text.clone(),
                answer: c.text.clone(),
                label: c.label,
            })
        })
    }
}

/// Vocabulary over the tokens of the given (training) splits.
pub fn build_vocab(datasets: &[&QADataset]) -> Vocabulary {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for ds in datasets {
        for q in &ds.questions {
            for t in tokenize(&q.text) {
                *counts.entry(t).or_default() += 1;
            }
            for c in &q.candidates {
                for t in tokenize(&c.text) {
                    *counts.entry(t).or_default() += 1;
                }
            }
        }
    }
    Vocabulary::from_counts(&counts)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedCandidate {
    pub tokens: Vec<u32>,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedQuestion {
    pub id: String,
    pub tokens: Vec<u32>,
    pub candidates: Vec<EncodedCandidate>,
}

/// Token-id view of a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EncodedDataset {
    pub split: String,
    pub questions: Vec<EncodedQuestion>,
}

/// Encodes every text, truncating to `max_len` tokens.
pub fn encode(dataset: &QADataset, vocab: &Vocabulary, max_len: usize) -> Result<EncodedDataset> {
    if max_len == 0 {
        return Err(Error::Config("maximum sentence length must be positive".into()));
    }
    let enc = |text: &str| -> Result<Vec<u32>> {
        let mut toks = tokenize(text);
        toks.truncate(max_len);
        vocab.encode(&toks)
    };
    let questions = dataset
        .questions
        .iter()
        .map(|q| {
            Ok(EncodedQuestion {
                id: q.id.clone(),
                tokens: enc(&q.text)?,
                candidates: q
                    .candidates
                    .iter()
                    .map(|c| {
                        Ok(EncodedCandidate {
                            tokens: enc(&c.text)?,
                            label: c.label,
                        })
                    })
                    .collect::<Result<_>>()?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(EncodedDataset {
        split: dataset.split.clone(),
        questions,
    })
}

/// Indices of a `(question, positive answer, negative answer)` triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triplet {
    pub question: usize,
    pub positive: usize,
    pub negative: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripletSample {
    pub triplets: Vec<Triplet>,
    /// Question ids skipped because they have no negative answer.
    pub skipped: Vec<String>,
}

/// One triple per positive answer. Each question's negatives are shuffled
/// and dealt out without replacement, cycling only when positives outnumber
/// negatives; the full list is then shuffled.
pub fn sample_triplets(dataset: &EncodedDataset, epoch_seed: u64) -> TripletSample {
    let mut rng = crate::seeded_rng(epoch_seed);
    let mut triplets = Vec::new();
    let mut skipped = Vec::new();
    for (qi, q) in dataset.questions.iter().enumerate() {
        let mut negatives: Vec<usize> = (0..q.candidates.len()).filter(|&i| q.candidates[i].label == 0).collect();
        if negatives.is_empty() {
            skipped.push(q.id.clone());
            continue;
        }
        negatives.shuffle(&mut rng);
        let positives = (0..q.candidates.len()).filter(|&i| q.candidates[i].label == 1);
        for (slot, pi) in positives.enumerate() {
            triplets.push(Triplet {
                question: qi,
                positive: pi,
                negative: negatives[slot % negatives.len()],
            });
        }
    }
    triplets.shuffle(&mut rng);
    TripletSample { triplets, skipped }
}
