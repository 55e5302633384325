//! Seeded generator of coherence-driven linking corpora.
//!
//! Entities are grouped into topics. Every KB page links only within its own
//! topic, so entities of different topics never co-occur. Each document draws
//! its gold entities from one topic and pads every mention with distractors
//! from other topics, none shared within the document. The gold entity is
//! then the unique candidate that co-occurs with the other gold entities,
//! while the mention priors point at a distractor for a chosen share of
//! mentions.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Candidate, Document, EntityId, Mention};
use crate::error::{Error, Result};
use crate::kb::{AnchorLink, AnchorPage, KbStatistics};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub documents: usize,
    pub topics: usize,
    pub entities_per_topic: usize,
    pub min_mentions: usize,
    pub max_mentions: usize,
    pub distractors: usize,
    /// Share of mentions whose highest prior goes to a distractor.
    pub misleading_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            documents: 200,
            topics: 40,
            entities_per_topic: 10,
            min_mentions: 4,
            max_mentions: 6,
            distractors: 2,
            misleading_rate: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub pages: Vec<AnchorPage>,
    pub documents: Vec<Document>,
}

pub fn entity_name(topic: usize, index: usize) -> String {
    format!("T{topic:03}_E{index:02}")
}

/// Anchor text shared by the `index`-th entity of every topic.
pub fn surface_name(index: usize) -> String {
    format!("name{index:02}")
}

fn entity(topic: usize, index: usize) -> EntityId {
    EntityId::new(&entity_name(topic, index)).expect("non-empty id")
}

impl SyntheticConfig {
    fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.entities_per_topic < self.max_mentions || self.entities_per_topic < 2 {
            return fail("each topic needs at least max_mentions entities");
        }
        if self.min_mentions < 2 || self.min_mentions > self.max_mentions {
            return fail("need 2 <= min_mentions <= max_mentions");
        }
        if self.topics < 1 + self.max_mentions * self.distractors {
            return fail("too few topics for distinct distractors");
        }
        if !(0.0..=1.0).contains(&self.misleading_rate) {
            return fail("misleading rate must lie in [0, 1]");
        }
        Ok(())
    }
}

fn kb_pages(cfg: &SyntheticConfig, rng: &mut ChaCha8Rng) -> Vec<AnchorPage> {
    let mut pages = Vec::new();
    for t in 0..cfg.topics {
        // an overview page links every entity of the topic, so all pairs co-occur
        let mut overview: Vec<AnchorLink> = (0..cfg.entities_per_topic)
            .map(|e| AnchorLink {
                surface: surface_name(e),
                entity: entity(t, e),
            })
            .collect();
        overview.shuffle(rng);
        pages.push(AnchorPage {
            page: EntityId::new(&format!("T{t:03}_overview")).expect("non-empty id"),
            links: overview,
        });
        for e in 0..cfg.entities_per_topic {
            let mut links = Vec::new();
            for other in 0..cfg.entities_per_topic {
                if other == e || !rng.gen_bool(0.5) {
                    continue;
                }
                for _ in 0..rng.gen_range(1..=3) {
                    links.push(AnchorLink {
                        surface: surface_name(other),
                        entity: entity(t, other),
                    });
                }
            }
            links.shuffle(rng);
            pages.push(AnchorPage {
                page: entity(t, e),
                links,
            });
        }
    }
    pages
}

/// Priors with the top value on `top`, which is below every split of the rest.
fn priors(n: usize, top: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let head = rng.gen_range(0.5..0.7);
    let mut rest: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(0.2..1.0)).collect();
    let sum: f64 = rest.iter().sum();
    for r in &mut rest {
        *r *= (1.0 - head) / sum;
    }
    rest.insert(top, head);
    rest
}

pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticCorpus> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pages = kb_pages(cfg, &mut rng);
    let mut documents = Vec::with_capacity(cfg.documents);
    for d in 0..cfg.documents {
        let topic = rng.gen_range(0..cfg.topics);
        let n = rng.gen_range(cfg.min_mentions..=cfg.max_mentions);
        let mut golds: Vec<usize> = (0..cfg.entities_per_topic).collect();
        golds.shuffle(&mut rng);
        golds.truncate(n);
        let mut others: Vec<usize> = (0..cfg.topics).filter(|&t| t != topic).collect();
        others.shuffle(&mut rng);

        let mut tokens = Vec::new();
        let mut mentions = Vec::with_capacity(n);
        for (i, &g) in golds.iter().enumerate() {
            for _ in 0..rng.gen_range(0..12) {
                tokens.push("w".to_string());
            }
            let start = tokens.len();
            tokens.push(surface_name(g));

            let mut entities = vec![entity(topic, g)];
            for &t in &others[i * cfg.distractors..(i + 1) * cfg.distractors] {
                entities.push(entity(t, rng.gen_range(0..cfg.entities_per_topic)));
            }
            entities.shuffle(&mut rng);
            let gold_pos = entities.iter().position(|e| e == &entity(topic, g)).expect("gold present");
            let top = if rng.gen_bool(cfg.misleading_rate) {
                let mut wrong: Vec<usize> = (0..entities.len()).filter(|&j| j != gold_pos).collect();
                wrong.shuffle(&mut rng);
                wrong[0]
            } else {
                gold_pos
            };
            let p = priors(entities.len(), top, &mut rng);
            mentions.push(Mention {
                id: format!("m{i}"),
                start,
                end: start + 1,
                surface: surface_name(g),
                gold: Some(entity(topic, g)),
                candidates: entities.into_iter().zip(p).map(|(e, p)| Candidate::new(e, p)).collect(),
            });
        }
        documents.push(Document::new(format!("doc{d:04}"), tokens, mentions)?);
    }
    Ok(SyntheticCorpus { pages, documents })
}

/// Checks that every gold entity is the unique candidate with the largest
/// summed co-occurrence count against the document's other gold entities.
pub fn gold_is_most_coherent(doc: &Document, stats: &KbStatistics) -> bool {
    doc.mentions.iter().enumerate().all(|(i, m)| {
        let Some(gold) = m.gold.as_ref() else {
            return true;
        };
        let coherence = |e: &EntityId| -> u64 {
            doc.mentions
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != i)
                .filter_map(|(_, o)| o.gold.as_ref())
                .map(|g| stats.pair_count(e, g))
                .sum()
        };
        let best = coherence(gold);
        best > 0
            && m.candidates
                .iter()
                .filter(|c| &c.entity != gold)
                .all(|c| coherence(&c.entity) < best)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_has_intended_structure() {
        let cfg = SyntheticConfig {
            documents: 30,
            seed: 4,
            ..SyntheticConfig::default()
        };
        let corpus = generate(&cfg).unwrap();
        let stats = KbStatistics::ingest(&corpus.pages);
        assert_eq!(corpus.documents.len(), 30);
        let mut misleading = 0;
        let mut total = 0;
        for doc in &corpus.documents {
            assert!(gold_is_most_coherent(doc, &stats));
            for m in &doc.mentions {
                assert_eq!(m.candidates.len(), 3);
                assert!(m.gold_index().is_some());
                let sum: f64 = m.candidates.iter().map(|c| c.p).sum();
                assert!((sum - 1.0).abs() < 1e-12);
                let top = m
                    .candidates
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.p.total_cmp(&b.1.p))
                    .unwrap()
                    .0;
                total += 1;
                if Some(top) != m.gold_index() {
                    misleading += 1;
                }
            }
        }
        let share = misleading as f64 / total as f64;
        assert!((0.35..0.65).contains(&share), "{share}");
    }

    #[test]
    fn same_seed_same_corpus() {
        let cfg = SyntheticConfig {
            documents: 5,
            seed: 9,
            ..SyntheticConfig::default()
        };
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
    }

    #[test]
    fn impossible_config_rejected() {
        let cfg = SyntheticConfig {
            topics: 3,
            ..SyntheticConfig::default()
        };
        assert!(generate(&cfg).is_err());
    }
}
