//! Seeded generator of factoid question/answer corpora.
//!
//! Each question asks for one relation of one entity. Its correct answer
//! names the entity and an answer cue for that relation; the wrong answers
//! either talk about the same entity under another relation or about
//! another entity under the same relation. Question words and answer cues
//! come from disjoint vocabularies, so word overlap alone cannot separate
//! the candidates: the pairing has to be learned.

use cnm_core::data::{QAPair, QADataset};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::error::Result;

const QUESTION_CUES: &[&[&str]] = &[
    &["where", "born"],
    &["when", "founded"],
    &["who", "wrote"],
    &["what", "capital"],
    &["how", "tall"],
    &["which", "river"],
    &["what", "currency"],
    &["who", "married"],
    &["what", "language"],
    &["how", "many", "people"],
];

const ANSWER_CUES: &[&[&str]] = &[
    &["birthplace", "native", "hometown"],
    &["established", "opened", "year"],
    &["author", "novel", "penned"],
    &["seat", "government", "city"],
    &["meters", "height", "feet"],
    &["flows", "banks", "stream"],
    &["coins", "money", "dollar"],
    &["spouse", "wedding", "wife"],
    &["spoken", "dialect", "tongue"],
    &["population", "inhabitants", "residents"],
];

const FILLERS: &[&str] = &[
    "the", "a", "of", "in", "and", "is", "was", "to", "it", "its", "by", "for", "on", "as", "with", "at", "from",
    "that", "this", "also", "known", "during", "later", "early", "many", "some", "first", "new", "old", "great",
    "local", "small", "large", "north", "south", "century", "region", "people", "area", "history", "world",
];

const ENTITY_SYLLABLES: &[&str] = &[
    "ka", "lo", "mir", "ven", "tas", "ori", "bel", "dun", "sef", "ral", "qui", "zan", "pem", "hol", "gri", "vak",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub questions: usize,
    pub entities: usize,
    /// Inclusive range of correct answers per question.
    pub positives: (usize, usize),
    /// Inclusive range of wrong answers per question.
    pub negatives: (usize, usize),
    /// Extra filler words per sentence, inclusive range.
    pub fillers: (usize, usize),
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            questions: 200,
            entities: 60,
            positives: (1, 2),
            negatives: (4, 8),
            fillers: (1, 4),
        }
    }
}

fn entity_name(i: usize) -> String {
    let n = ENTITY_SYLLABLES.len();
    format!("{}{}", ENTITY_SYLLABLES[i % n], ENTITY_SYLLABLES[(i / n + i) % n])
}

fn sentence<R: Rng>(rng: &mut R, core: Vec<String>, fillers: (usize, usize)) -> String {
    let mut words = core;
    for _ in 0..rng.random_range(fillers.0..=fillers.1) {
        let at = rng.random_range(0..=words.len());
        words.insert(at, FILLERS.choose(rng).expect("fillers").to_string());
    }
    words.join(" ")
}

fn answer<R: Rng>(rng: &mut R, entity: &str, relation: usize, spec: &SyntheticConfig) -> String {
    let cue = ANSWER_CUES[relation].choose(rng).expect("cues").to_string();
    let value = format!("{}{}", ENTITY_SYLLABLES.choose(rng).expect("syllables"), rng.random_range(0..50));
    sentence(rng, vec![entity.to_string(), cue, value], spec.fillers)
}

/// Builds one split. Different `split` names with the same seed draw
/// different questions over the same entity pool.
pub fn generate(spec: &SyntheticConfig, split: &str, seed: u64) -> Result<QADataset> {
    let salt = split.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    let mut rng = cnm_core::seeded_rng(seed ^ salt);
    let relations = QUESTION_CUES.len();
    let mut rows = Vec::new();
    for qi in 0..spec.questions {
        let entity = entity_name(rng.random_range(0..spec.entities.max(2)));
        let relation = rng.random_range(0..relations);
        let mut q: Vec<String> = QUESTION_CUES[relation].iter().map(|s| s.to_string()).collect();
        q.push(entity.clone());
        let question = sentence(&mut rng, q, spec.fillers);
        let qid = format!("{split}-{qi}");

        let mut cands: Vec<(String, u8)> = Vec::new();
        for _ in 0..rng.random_range(spec.positives.0..=spec.positives.1) {
            cands.push((answer(&mut rng, &entity, relation, spec), 1));
        }
        for _ in 0..rng.random_range(spec.negatives.0..=spec.negatives.1) {
            let text = if rng.random_bool(0.5) {
                let mut other = rng.random_range(0..relations - 1);
                if other >= relation {
                    other += 1;
                }
                answer(&mut rng, &entity, other, spec)
            } else {
                let mut other = entity_name(rng.random_range(0..spec.entities.max(2)));
                while other == entity {
                    other = entity_name(rng.random_range(0..spec.entities.max(2)));
                }
                answer(&mut rng, &other, relation, spec)
            };
            cands.push((text, 0));
        }
        cands.shuffle(&mut rng);
        rows.extend(cands.into_iter().map(|(answer, label)| QAPair {
            question_id: qid.clone(),
            question: question.clone(),
            answer,
            label,
        }));
    }
    Ok(QADataset::from_pairs(split, rows)?.0)
}
