//! Documents, mentions and candidate lists, plus the corpus and prediction
//! JSONL formats.
//!
//! Spans are token offsets `[start, end)`. Mentions inside a [`Document`] are
//! kept sorted by `(start, end, id)` so that reading the same document with
//! its mentions in any order yields the same value.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical English-KB entity title with whitespace runs collapsed to one
/// space. Case is preserved and comparison is byte-wise.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct EntityId(String);

impl EntityId {
    pub fn new(raw: &str) -> Result<Self> {
        let normalized = raw.split_whitespace().collect::<Vec<_>>().join(" ");
        if normalized.is_empty() {
            return Err(Error::EmptyEntityId);
        }
        Ok(EntityId(normalized))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for EntityId {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        EntityId::new(&value)
    }
}

impl From<EntityId> for String {
    fn from(value: EntityId) -> Self {
        value.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub entity: EntityId,
    pub p: f64,
}

impl Candidate {
    pub fn new(entity: EntityId, p: f64) -> Self {
        Candidate { entity, p }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mention {
    pub id: String,
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub gold: Option<EntityId>,
    #[serde(default)]
    pub candidates: Vec<Candidate>,
}

impl Mention {
    /// Index of the gold entity inside the candidate list, if both exist.
    pub fn gold_index(&self) -> Option<usize> {
        let gold = self.gold.as_ref()?;
        self.candidates.iter().position(|c| &c.entity == gold)
    }

    fn validate(&self, doc_id: &str, n_tokens: usize) -> Result<()> {
        let fail = |message: String| Error::InvalidMention {
            doc_id: doc_id.to_string(),
            mention_id: self.id.clone(),
            message,
        };
        if self.start >= self.end || self.end > n_tokens {
            return Err(fail(format!(
                "span [{}, {}) out of bounds for {} tokens",
                self.start, self.end, n_tokens
            )));
        }
        let mut seen = HashSet::with_capacity(self.candidates.len());
        for c in &self.candidates {
            if !seen.insert(&c.entity) {
                return Err(fail(format!("duplicate candidate {}", c.entity)));
            }
            if !(0.0..=1.0).contains(&c.p) {
                return Err(fail(format!(
                    "candidate {} probability {} outside [0, 1]",
                    c.entity, c.p
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Document {
    pub doc_id: String,
    pub tokens: Vec<String>,
    pub mentions: Vec<Mention>,
}

impl Document {
    /// Validates every mention and sorts them into canonical order.
    pub fn new(doc_id: String, tokens: Vec<String>, mut mentions: Vec<Mention>) -> Result<Self> {
        let mut ids = HashSet::with_capacity(mentions.len());
        for m in &mentions {
            m.validate(&doc_id, tokens.len())?;
            if !ids.insert(m.id.as_str()) {
                return Err(Error::InvalidMention {
                    doc_id: doc_id.clone(),
                    mention_id: m.id.clone(),
                    message: "duplicate mention id".into(),
                });
            }
        }
        mentions.sort_by(|a, b| (a.start, a.end, &a.id).cmp(&(b.start, b.end, &b.id)));
        Ok(Document {
            doc_id,
            tokens,
            mentions,
        })
    }
}

#[derive(Deserialize)]
struct RawDocument {
    doc_id: String,
    tokens: Vec<String>,
    #[serde(default)]
    mentions: Vec<Mention>,
}

/// Parses corpus JSONL from a reader. `origin` is only used in error messages.
pub fn parse_corpus<R: BufRead>(reader: R, origin: &Path) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawDocument = serde_json::from_str(&line).map_err(|source| Error::Json {
            path: origin.to_path_buf(),
            line: idx + 1,
            source,
        })?;
        docs.push(Document::new(raw.doc_id, raw.tokens, raw.mentions)?);
    }
    Ok(docs)
}

pub fn read_corpus(path: &Path) -> Result<Vec<Document>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(BufReader::new(file), path)
}

pub fn write_corpus(docs: &[Document], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for doc in docs {
        serde_json::to_writer(&mut out, doc).map_err(|e| Error::io(path, e.into()))?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Identifies a mention across a corpus.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MentionKey {
    pub doc_id: String,
    pub mention_id: String,
}

impl MentionKey {
    pub fn new(doc_id: impl Into<String>, mention_id: impl Into<String>) -> Self {
        MentionKey {
            doc_id: doc_id.into(),
            mention_id: mention_id.into(),
        }
    }
}

/// Non-null predictions. A mention without an entry is predicted null.
pub type Predictions = BTreeMap<MentionKey, EntityId>;

#[derive(Serialize, Deserialize)]
struct PredictionLine {
    doc_id: String,
    mentions: Vec<PredictionEntry>,
}

#[derive(Serialize, Deserialize)]
struct PredictionEntry {
    id: String,
    prediction: Option<EntityId>,
}

/// Writes one predictions line per document, in document and mention order.
pub fn write_linked(docs: &[Document], predictions: &Predictions, path: &Path) -> Result<()> {
    let known: HashSet<(&str, &str)> = docs
        .iter()
        .flat_map(|d| d.mentions.iter().map(move |m| (d.doc_id.as_str(), m.id.as_str())))
        .collect();
    if let Some(key) = predictions
        .keys()
        .find(|k| !known.contains(&(k.doc_id.as_str(), k.mention_id.as_str())))
    {
        return Err(Error::UnknownMention {
            doc_id: key.doc_id.clone(),
            mention_id: key.mention_id.clone(),
        });
    }

    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for doc in docs {
        let line = PredictionLine {
            doc_id: doc.doc_id.clone(),
            mentions: doc
                .mentions
                .iter()
                .map(|m| PredictionEntry {
                    id: m.id.clone(),
                    prediction: predictions.get(&MentionKey::new(&doc.doc_id, &m.id)).cloned(),
                })
                .collect(),
        };
        serde_json::to_writer(&mut out, &line).map_err(|e| Error::io(path, e.into()))?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_predictions(path: &Path) -> Result<Predictions> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut map = Predictions::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: PredictionLine = serde_json::from_str(&line).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            line: idx + 1,
            source,
        })?;
        for entry in parsed.mentions {
            if let Some(entity) = entry.prediction {
                map.insert(MentionKey::new(&parsed.doc_id, entry.id), entity);
            }
        }
    }
    Ok(map)
}
