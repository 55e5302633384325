//! Gold candidate recall and in-KB accuracy.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::candgen::MentionEntityMap;
use crate::corpus::{Document, EntityId, MentionKey, Predictions};
use crate::error::{Error, Result};
use crate::kb::{sha256_hex, KbStatistics};
use crate::parallel::Parallelism;

/// Which labeled mentions count as in the knowledge base.
#[derive(Debug, Clone, PartialEq)]
pub enum InKbPolicy {
    /// Every mention with a gold label.
    AllLabeled,
    /// Mentions whose gold entity is in this set.
    Known(BTreeSet<EntityId>),
}

impl InKbPolicy {
    /// Entities seen in the statistics or the dictionary.
    pub fn from_sources(stats: Option<&KbStatistics>, dictionary: Option<&MentionEntityMap>) -> Self {
        let mut known = BTreeSet::new();
        if let Some(s) = stats {
            known.extend(s.entity_counts().keys().cloned());
            known.extend(s.outlinks().keys().cloned());
        }
        if let Some(d) = dictionary {
            known.extend(d.entities().cloned());
        }
        InKbPolicy::Known(known)
    }

    pub fn contains(&self, gold: &EntityId) -> bool {
        match self {
            InKbPolicy::AllLabeled => true,
            InKbPolicy::Known(set) => set.contains(gold),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InKbPolicy::AllLabeled => "all-labeled",
            InKbPolicy::Known(_) => "known-entities",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DocReport {
    pub doc_id: String,
    pub n_mentions: usize,
    pub n_in_kb: usize,
    /// In-KB mentions whose candidates contain the gold entity.
    pub n_covered: usize,
    pub n_correct: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub n_mentions: usize,
    pub n_in_kb: usize,
    pub n_covered: usize,
    pub gold_recall: f64,
    /// Absent when no predictions were given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_correct: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    pub per_document: Vec<DocReport>,
}

fn doc_report(doc: &Document, predictions: Option<&Predictions>, policy: &InKbPolicy) -> DocReport {
    let mut r = DocReport {
        doc_id: doc.doc_id.clone(),
        n_mentions: doc.mentions.len(),
        ..DocReport::default()
    };
    for m in &doc.mentions {
        let Some(gold) = m.gold.as_ref() else {
            continue;
        };
        if !policy.contains(gold) {
            continue;
        }
        r.n_in_kb += 1;
        if m.candidates.iter().any(|c| &c.entity == gold) {
            r.n_covered += 1;
        }
        if let Some(preds) = predictions {
            if preds.get(&MentionKey::new(&doc.doc_id, &m.id)) == Some(gold) {
                r.n_correct += 1;
            }
        }
    }
    r
}

/// Whether every prediction names one of its mention's candidates.
fn predictions_from_candidates(docs: &[Document], predictions: &Predictions) -> bool {
    docs.iter().all(|doc| {
        doc.mentions.iter().all(|m| {
            match predictions.get(&MentionKey::new(&doc.doc_id, &m.id)) {
                Some(p) => m.candidates.iter().any(|c| &c.entity == p),
                None => true,
            }
        })
    })
}

/// Full report; documents are scored in parallel and summed in order.
pub fn evaluate(
    docs: &[Document],
    predictions: Option<&Predictions>,
    policy: &InKbPolicy,
    par: &Parallelism,
) -> Result<EvalReport> {
    let per_document = par.map(docs, |_, doc| doc_report(doc, predictions, policy));
    let n_mentions = per_document.iter().map(|r| r.n_mentions).sum();
    let n_in_kb: usize = per_document.iter().map(|r| r.n_in_kb).sum();
    let n_covered: usize = per_document.iter().map(|r| r.n_covered).sum();
    let n_correct: usize = per_document.iter().map(|r| r.n_correct).sum();
    if n_in_kb == 0 {
        return Err(Error::NoEvaluableMentions);
    }
    let gold_recall = n_covered as f64 / n_in_kb as f64;
    let accuracy = predictions.map(|_| n_correct as f64 / n_in_kb as f64);
    if let (Some(preds), Some(acc)) = (predictions, accuracy) {
        if predictions_from_candidates(docs, preds) {
            assert!(
                n_correct <= n_covered,
                "accuracy {acc} exceeds gold recall {gold_recall} with in-candidate predictions"
            );
        }
    }
    Ok(EvalReport {
        n_mentions,
        n_in_kb,
        n_covered,
        gold_recall,
        n_correct: predictions.map(|_| n_correct),
        accuracy,
        per_document,
    })
}

pub fn gold_candidate_recall(docs: &[Document], policy: &InKbPolicy) -> Result<f64> {
    Ok(evaluate(docs, None, policy, &Parallelism::sequential())?.gold_recall)
}

pub fn accuracy(docs: &[Document], predictions: &Predictions, policy: &InKbPolicy) -> Result<f64> {
    let report = evaluate(docs, Some(predictions), policy, &Parallelism::sequential())?;
    Ok(report.accuracy.expect("predictions given"))
}

/// Hex SHA-256 of a file, for run metadata.
pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Highest-prior candidate per mention, first on ties.
pub fn prior_predictions(docs: &[Document]) -> Predictions {
    let mut out = Predictions::new();
    for doc in docs {
        for m in &doc.mentions {
            let mut best: Option<&crate::corpus::Candidate> = None;
            for c in &m.candidates {
                if best.is_none_or(|b| c.p > b.p) {
                    best = Some(c);
                }
            }
            if let Some(c) = best {
                out.insert(MentionKey::new(&doc.doc_id, &m.id), c.entity.clone());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Candidate, Mention};

    fn e(s: &str) -> EntityId {
        EntityId::new(s).unwrap()
    }

    fn mention(id: &str, start: usize, gold: Option<&str>, cands: &[&str]) -> Mention {
        Mention {
            id: id.into(),
            start,
            end: start + 1,
            surface: "x".into(),
            gold: gold.map(e),
            candidates: cands.iter().map(|c| Candidate::new(e(c), 1.0 / cands.len() as f64)).collect(),
        }
    }

    fn doc() -> Document {
        Document::new(
            "d".into(),
            vec!["x".into(); 6],
            vec![
                mention("a", 0, Some("A"), &["A", "B"]),
                mention("b", 1, Some("B"), &["A"]),
                mention("c", 2, Some("C"), &["C"]),
                mention("d", 3, Some("D"), &[]),
                mention("e", 4, None, &["A"]),
            ],
        )
        .unwrap()
    }

    fn preds(pairs: &[(&str, &str)]) -> Predictions {
        pairs.iter().map(|(m, p)| (MentionKey::new("d", *m), e(p))).collect()
    }

    #[test]
    fn recall_counts_covered_in_kb_mentions() {
        let docs = [doc()];
        assert_eq!(gold_candidate_recall(&docs, &InKbPolicy::AllLabeled).unwrap(), 0.5);
        let known = InKbPolicy::Known([e("A"), e("C")].into_iter().collect());
        assert_eq!(gold_candidate_recall(&docs, &known).unwrap(), 1.0);
    }

    #[test]
    fn accuracy_examples() {
        let docs = [doc()];
        let all = InKbPolicy::AllLabeled;
        assert_eq!(accuracy(&docs, &preds(&[("a", "A"), ("b", "A"), ("c", "C")]), &all).unwrap(), 0.5);
        let known = InKbPolicy::Known([e("A"), e("B"), e("C"), e("D")].into_iter().collect());
        let gold = preds(&[("a", "A"), ("b", "B"), ("c", "C"), ("d", "D")]);
        assert_eq!(accuracy(&docs, &gold, &known).unwrap(), 1.0);
        let three = preds(&[("a", "A"), ("b", "B"), ("c", "C")]);
        assert_eq!(accuracy(&docs, &three, &known).unwrap(), 0.75);
    }

    #[test]
    fn no_evaluable_mentions() {
        let docs = [doc()];
        let none = InKbPolicy::Known(BTreeSet::new());
        assert!(matches!(gold_candidate_recall(&docs, &none), Err(Error::NoEvaluableMentions)));
        assert!(gold_candidate_recall(&[], &InKbPolicy::AllLabeled).is_err());
    }

    #[test]
    fn report_breaks_down_by_document() {
        let docs = [doc()];
        let r = evaluate(&docs, None, &InKbPolicy::AllLabeled, &Parallelism::sequential()).unwrap();
        assert_eq!(r.n_mentions, 5);
        assert_eq!(r.n_in_kb, 4);
        assert_eq!(r.per_document.len(), 1);
        assert!(r.accuracy.is_none());
    }

    #[test]
    fn prior_baseline_takes_first_maximum() {
        let docs = [doc()];
        let p = prior_predictions(&docs);
        assert_eq!(p[&MentionKey::new("d", "a")], e("A"));
        assert!(!p.contains_key(&MentionKey::new("d", "d")));
    }
}
