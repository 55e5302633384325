//! Unary and binary features for candidate entities.
//!
//! Unary vector Φ(e), in order:
//! 1. `ln max(p(e|m), ε)`: mention-entity prior
//! 2. `ln max(c(e) / Σc, ε)`: entity prior
//! 3. number of other mentions with a candidate that co-occurs with `e`
//! 4. number of other mentions whose candidate list contains `e`
//!
//! Binary vector Ψ(a, b), in order:
//! 1. `ln max(c(a, b) / c(a), ε)`: co-occurrence probability, normalized by the first argument
//! 2. `max(log2(p(a, b) / (p'(a) p'(b))), 0)`: PPMI with `count^γ`-smoothed marginals
//! 3. cosine similarity of entity embeddings, 0 when either is missing
//! 4. `ln max(mult(b in H_a) / |H_a|, ε)`: share of `a`'s page links pointing at `b`
//!
//! The BASE set is the first component of each vector.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, EntityId};
use crate::error::{Error, Result};
use crate::kb::KbStatistics;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureSet {
    #[serde(rename = "BASE")]
    Base,
    #[serde(rename = "FEAT")]
    Feat,
}

impl FeatureSet {
    pub fn unary_dim(self) -> usize {
        match self {
            FeatureSet::Base => 1,
            FeatureSet::Feat => 4,
        }
    }

    pub fn binary_dim(self) -> usize {
        match self {
            FeatureSet::Base => 1,
            FeatureSet::Feat => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureSet::Base => "BASE",
            FeatureSet::Feat => "FEAT",
        }
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "BASE" => Ok(FeatureSet::Base),
            "FEAT" => Ok(FeatureSet::Feat),
            _ => Err(Error::InvalidArgument(format!("unknown feature set {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    vectors: HashMap<EntityId, Vec<f64>>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dim must be at least 1".into()));
        }
        Ok(EmbeddingStore {
            dim,
            vectors: HashMap::new(),
        })
    }

    pub fn insert(&mut self, entity: EntityId, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: vector.len(),
            });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite embedding for {entity}")));
        }
        self.vectors.insert(entity, vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, entity: &EntityId) -> Option<&[f64]> {
        self.vectors.get(entity).map(Vec::as_slice)
    }

    /// Cosine similarity, 0 when either vector is missing or has zero norm.
    pub fn similarity(&self, a: &EntityId, b: &EntityId) -> f64 {
        let (Some(u), Some(v)) = (self.get(a), self.get(b)) else {
            return 0.0;
        };
        let dot: f64 = u.iter().zip(v).map(|(x, y)| x * y).sum();
        let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nu == 0.0 || nv == 0.0 {
            return 0.0;
        }
        (dot / (nu * nv)).clamp(-1.0, 1.0)
    }

    /// Text format: a `N dim` header, then `entity<TAB>f1 f2 ... f_dim` per line.
    pub fn read_text(path: &Path) -> Result<Self> {
        let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = body.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let (_, header) = lines.next().ok_or_else(|| parse_err(1, "missing header".into()))?;
        let mut parts = header.split_whitespace();
        let (n, dim) = match (parts.next(), parts.next(), parts.next()) {
            (Some(n), Some(d), None) => (
                n.parse::<usize>().map_err(|_| parse_err(1, "bad entity count".into()))?,
                d.parse::<usize>().map_err(|_| parse_err(1, "bad dim".into()))?,
            ),
            _ => return Err(parse_err(1, "header must be `N dim`".into())),
        };
        let mut store = EmbeddingStore::new(dim).map_err(|e| parse_err(1, e.to_string()))?;
        for (i, line) in lines {
            let (name, values) = line
                .split_once('\t')
                .ok_or_else(|| parse_err(i + 1, "expected entity<TAB>vector".into()))?;
            let entity = EntityId::new(name).map_err(|e| parse_err(i + 1, e.to_string()))?;
            let vector = values
                .split_whitespace()
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| parse_err(i + 1, e.to_string()))?;
            store
                .insert(entity, vector)
                .map_err(|e| parse_err(i + 1, e.to_string()))?;
        }
        if store.len() != n {
            return Err(parse_err(1, format!("header declares {n} entities, found {}", store.len())));
        }
        Ok(store)
    }
}

fn clamped_ln(x: f64, epsilon: f64) -> f64 {
    x.max(epsilon).ln()
}

/// Φ for candidate `candidate` of mention `mention` in `doc`.
pub fn unary_features(
    doc: &Document,
    mention: usize,
    candidate: usize,
    stats: &KbStatistics,
    feature_set: FeatureSet,
) -> Vec<f64> {
    let eps = stats.epsilon();
    let cand = &doc.mentions[mention].candidates[candidate];
    let mut phi = Vec::with_capacity(feature_set.unary_dim());
    phi.push(clamped_ln(cand.p, eps));
    if feature_set == FeatureSet::Base {
        return phi;
    }

    let e = &cand.entity;
    let total = stats.total_anchor_count();
    let entity_prior = if total == 0 {
        0.0
    } else {
        stats.entity_count(e) as f64 / total as f64
    };
    phi.push(clamped_ln(entity_prior, eps));

    let mut related = 0usize;
    let mut exact = 0usize;
    for (k, other) in doc.mentions.iter().enumerate() {
        if k == mention {
            continue;
        }
        if other.candidates.iter().any(|c| stats.pair_count(e, &c.entity) > 0) {
            related += 1;
        }
        if other.candidates.iter().any(|c| &c.entity == e) {
            exact += 1;
        }
    }
    phi.push(related as f64);
    phi.push(exact as f64);
    phi
}

/// Ψ(a, b). Asymmetric: `a` is the entity being scored.
pub fn binary_features(
    a: &EntityId,
    b: &EntityId,
    stats: &KbStatistics,
    embeddings: Option<&EmbeddingStore>,
    feature_set: FeatureSet,
) -> Vec<f64> {
    let eps = stats.epsilon();
    let c_a = stats.entity_count(a);
    let c_ab = stats.pair_count(a, b);
    let mut psi = Vec::with_capacity(feature_set.binary_dim());
    let cooccurrence = if c_a == 0 { 0.0 } else { c_ab as f64 / c_a as f64 };
    psi.push(clamped_ln(cooccurrence, eps));
    if feature_set == FeatureSet::Base {
        return psi;
    }

    psi.push(ppmi(a, b, stats));
    psi.push(embeddings.map_or(0.0, |emb| emb.similarity(a, b)));

    let links = stats.outlink_total(a);
    let share = if links == 0 {
        0.0
    } else {
        stats.outlink_multiplicity(a, b) as f64 / links as f64
    };
    psi.push(clamped_ln(share, eps));
    psi
}

fn ppmi(a: &EntityId, b: &EntityId, stats: &KbStatistics) -> f64 {
    let c_ab = stats.pair_count(a, b);
    let mass = stats.smoothed_mass();
    if c_ab == 0 || stats.total_pair_count() == 0 || mass == 0.0 {
        return 0.0;
    }
    let s = stats.smoothing();
    let joint = c_ab as f64 / stats.total_pair_count() as f64;
    let pa = (stats.entity_count(a) as f64).powf(s) / mass;
    let pb = (stats.entity_count(b) as f64).powf(s) / mass;
    (joint / (pa * pb)).log2().max(0.0)
}

/// Per-mention layout inside [`DocFeatures`].
#[derive(Debug, Clone, PartialEq)]
pub struct MentionSlot {
    pub start: usize,
    pub end: usize,
    /// Document-level entity index of each candidate.
    pub entities: Vec<usize>,
    /// Index of the gold entity in the candidate list.
    pub gold: Option<usize>,
    /// The mention carries a gold label, found in its candidates or not.
    pub labeled: bool,
    unary: Vec<f64>,
}

impl MentionSlot {
    pub fn n_candidates(&self) -> usize {
        self.entities.len()
    }
}

/// Precomputed features of one document.
///
/// Pair features are stored once per ordered pair of distinct document
/// entities, so candidates shared between mentions share their rows.
#[derive(Debug, Clone, PartialEq)]
pub struct DocFeatures {
    pub doc_id: String,
    pub d_l: usize,
    pub d_g: usize,
    pub mentions: Vec<MentionSlot>,
    n_entities: usize,
    pair: Vec<f64>,
}

impl DocFeatures {
    pub fn build(
        doc: &Document,
        stats: &KbStatistics,
        embeddings: Option<&EmbeddingStore>,
        feature_set: FeatureSet,
    ) -> DocFeatures {
        let d_l = feature_set.unary_dim();
        let d_g = feature_set.binary_dim();
        let mut entity_index: HashMap<&EntityId, usize> = HashMap::new();
        let mut entities: Vec<&EntityId> = Vec::new();
        let mut mentions = Vec::with_capacity(doc.mentions.len());
        for (i, m) in doc.mentions.iter().enumerate() {
            let mut slot_entities = Vec::with_capacity(m.candidates.len());
            let mut unary = Vec::with_capacity(m.candidates.len() * d_l);
            for (j, c) in m.candidates.iter().enumerate() {
                let idx = *entity_index.entry(&c.entity).or_insert_with(|| {
                    entities.push(&c.entity);
                    entities.len() - 1
                });
                slot_entities.push(idx);
                unary.extend(unary_features(doc, i, j, stats, feature_set));
            }
            mentions.push(MentionSlot {
                start: m.start,
                end: m.end,
                entities: slot_entities,
                gold: m.gold_index(),
                labeled: m.gold.is_some(),
                unary,
            });
        }
        let n = entities.len();
        let mut pair = vec![0.0; n * n * d_g];
        for (u, a) in entities.iter().enumerate() {
            for (v, b) in entities.iter().enumerate() {
                let off = (u * n + v) * d_g;
                pair[off..off + d_g].copy_from_slice(&binary_features(a, b, stats, embeddings, feature_set));
            }
        }
        DocFeatures {
            doc_id: doc.doc_id.clone(),
            d_l,
            d_g,
            mentions,
            n_entities: n,
            pair,
        }
    }

    /// Builds features where every candidate is a distinct entity, from raw
    /// arrays with dimensions `(d_l, d_g)`. `unary[i][j]` is Φ for candidate j of mention i; `pair(i, j, k, w)`
    /// gives Ψ between candidate j of mention i and candidate w of mention k.
    pub fn from_raw(
        doc_id: &str,
        spans: &[(usize, usize)],
        unary: &[Vec<Vec<f64>>],
        gold: &[Option<usize>],
        (d_l, d_g): (usize, usize),
        pair: impl Fn(usize, usize, usize, usize) -> Vec<f64>,
    ) -> Result<DocFeatures> {
        if spans.len() != unary.len() || gold.len() != unary.len() {
            return Err(Error::DimensionMismatch {
                expected: spans.len(),
                actual: unary.len(),
            });
        }
        let mut owner = Vec::new();
        let mut mentions = Vec::new();
        for (i, cands) in unary.iter().enumerate() {
            let mut flat = Vec::new();
            let mut ents = Vec::new();
            for (j, phi) in cands.iter().enumerate() {
                if phi.len() != d_l {
                    return Err(Error::DimensionMismatch {
                        expected: d_l,
                        actual: phi.len(),
                    });
                }
                flat.extend_from_slice(phi);
                ents.push(owner.len());
                owner.push((i, j));
            }
            if let Some(g) = gold[i] {
                if g >= cands.len() {
                    return Err(Error::InvalidArgument(format!("gold index {g} out of range")));
                }
            }
            mentions.push(MentionSlot {
                start: spans[i].0,
                end: spans[i].1,
                entities: ents,
                gold: gold[i],
                labeled: gold[i].is_some(),
                unary: flat,
            });
        }
        let n = owner.len();
        let mut table = vec![0.0; n * n * d_g];
        for (u, &(i, j)) in owner.iter().enumerate() {
            for (v, &(k, w)) in owner.iter().enumerate() {
                if i == k {
                    continue;
                }
                let psi = pair(i, j, k, w);
                if psi.len() != d_g {
                    return Err(Error::DimensionMismatch {
                        expected: d_g,
                        actual: psi.len(),
                    });
                }
                let off = (u * n + v) * d_g;
                table[off..off + d_g].copy_from_slice(&psi);
            }
        }
        Ok(DocFeatures {
            doc_id: doc_id.to_string(),
            d_l,
            d_g,
            mentions,
            n_entities: n,
            pair: table,
        })
    }

    pub fn unary(&self, mention: usize, candidate: usize) -> &[f64] {
        let off = candidate * self.d_l;
        &self.mentions[mention].unary[off..off + self.d_l]
    }

    /// Ψ between candidate `j` of mention `i` and candidate `w` of mention `k`.
    pub fn pair(&self, i: usize, j: usize, k: usize, w: usize) -> &[f64] {
        let u = self.mentions[i].entities[j];
        let v = self.mentions[k].entities[w];
        let off = (u * self.n_entities + v) * self.d_g;
        &self.pair[off..off + self.d_g]
    }

    /// Ψ between document entities `u` and `v`.
    pub fn pair_by_entity(&self, u: usize, v: usize) -> &[f64] {
        let off = (u * self.n_entities + v) * self.d_g;
        &self.pair[off..off + self.d_g]
    }

    /// Distinct candidate entities in the document.
    pub fn n_entities(&self) -> usize {
        self.n_entities
    }

    /// Mentions with at least one candidate.
    pub fn active_mentions(&self) -> usize {
        self.mentions.iter().filter(|m| m.n_candidates() > 0).count()
    }
}

/// Tokens strictly between two spans; 0 when they touch or overlap.
pub fn token_distance(a: (usize, usize), b: (usize, usize)) -> usize {
    let lo_end = a.1.min(b.1);
    let hi_start = a.0.max(b.0);
    hi_start.saturating_sub(lo_end)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Candidate, Mention};
    use crate::kb::{AnchorLink, AnchorPage};

    fn e(s: &str) -> EntityId {
        EntityId::new(s).unwrap()
    }

    fn page(name: &str, targets: &[&str]) -> AnchorPage {
        AnchorPage {
            page: e(name),
            links: targets
                .iter()
                .map(|t| AnchorLink {
                    surface: t.to_string(),
                    entity: e(t),
                })
                .collect(),
        }
    }

    fn mention(id: &str, start: usize, cands: &[(&str, f64)]) -> Mention {
        Mention {
            id: id.into(),
            start,
            end: start + 1,
            surface: id.into(),
            gold: None,
            candidates: cands.iter().map(|(c, p)| Candidate::new(e(c), *p)).collect(),
        }
    }

    fn doc(mentions: Vec<Mention>) -> Document {
        Document::new("d".into(), (0..10).map(|i| format!("t{i}")).collect(), mentions).unwrap()
    }

    #[test]
    fn prior_feature_is_log_prior() {
        let d = doc(vec![mention("m", 0, &[("A", 0.75)])]);
        let phi = unary_features(&d, 0, 0, &KbStatistics::default(), FeatureSet::Feat);
        assert!((phi[0] - (-0.2876820724517809)).abs() < 1e-15);
        assert!((phi[0] - 0.75f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn unseen_entity_prior_is_clamped() {
        let d = doc(vec![mention("m", 0, &[("A", 0.0)])]);
        let phi = unary_features(&d, 0, 0, &KbStatistics::default(), FeatureSet::Feat);
        let floor = 1e-7f64.ln();
        assert!((floor - (-16.11809565095832)).abs() < 1e-12);
        assert_eq!(phi[0], floor);
        assert_eq!(phi[1], floor);
    }

    #[test]
    fn exact_match_counts_other_mentions() {
        let d = doc(vec![
            mention("m1", 0, &[("A", 0.5), ("B", 0.5)]),
            mention("m2", 2, &[("A", 1.0)]),
            mention("m3", 4, &[("C", 0.5), ("A", 0.5)]),
            mention("m4", 6, &[("C", 1.0)]),
        ]);
        let phi = unary_features(&d, 0, 0, &KbStatistics::default(), FeatureSet::Feat);
        assert_eq!(phi[3], 2.0);
    }

    #[test]
    fn single_mention_has_no_context_features() {
        let stats = KbStatistics::ingest(&[page("P", &["A", "B"])]);
        let d = doc(vec![mention("m", 0, &[("A", 1.0)])]);
        let phi = unary_features(&d, 0, 0, &stats, FeatureSet::Feat);
        assert_eq!(&phi[2..], &[0.0, 0.0]);
    }

    #[test]
    fn related_mention_uses_positive_cooccurrence() {
        let stats = KbStatistics::ingest(&[page("P", &["A", "B"]), page("Q", &["C"])]);
        let d = doc(vec![
            mention("m1", 0, &[("A", 1.0)]),
            mention("m2", 2, &[("X", 0.5), ("B", 0.5)]),
            mention("m3", 4, &[("C", 1.0)]),
        ]);
        let phi = unary_features(&d, 0, 0, &stats, FeatureSet::Feat);
        assert_eq!(phi[2], 1.0);
    }

    #[test]
    fn cooccurrence_is_normalized_by_first_argument() {
        // c(A) = 4, c(A, B) = 2
        let stats = KbStatistics::ingest(&[
            page("P1", &["A", "B"]),
            page("P2", &["A", "B"]),
            page("P3", &["A"]),
            page("P4", &["A", "B", "B"]),
        ]);
        assert_eq!(stats.entity_count(&e("A")), 4);
        assert_eq!(stats.pair_count(&e("A"), &e("B")), 3);

        let stats = KbStatistics::ingest(&[
            page("P1", &["A", "B"]),
            page("P2", &["A", "B"]),
            page("P3", &["A"]),
            page("P4", &["A"]),
        ]);
        let ab = binary_features(&e("A"), &e("B"), &stats, None, FeatureSet::Base);
        assert!((ab[0] + std::f64::consts::LN_2).abs() < 1e-15);
        let ba = binary_features(&e("B"), &e("A"), &stats, None, FeatureSet::Base);
        assert_eq!(ba[0], 0.0);
    }

    #[test]
    fn ppmi_clips_negative_association() {
        // A and B are common and co-occur once among many pairs.
        let mut pages = vec![page("X", &["A", "B"])];
        for i in 0..20 {
            pages.push(page(&format!("P{i}"), &["A", &format!("Z{i}")]));
            pages.push(page(&format!("Q{i}"), &["B", &format!("Y{i}")]));
        }
        let stats = KbStatistics::ingest(&pages);
        let psi = binary_features(&e("A"), &e("B"), &stats, None, FeatureSet::Feat);
        assert_eq!(psi[1], 0.0);
        let psi_rare = binary_features(&e("Z0"), &e("A"), &stats, None, FeatureSet::Feat);
        assert!(psi_rare[1] > 0.0);
    }

    #[test]
    fn embedding_similarity_identities() {
        let mut emb = EmbeddingStore::new(3).unwrap();
        emb.insert(e("A"), vec![1.0, 2.0, 3.0]).unwrap();
        emb.insert(e("A2"), vec![1.0, 2.0, 3.0]).unwrap();
        emb.insert(e("B"), vec![0.0, 3.0, -2.0]).unwrap();
        let stats = KbStatistics::default();
        let same = binary_features(&e("A"), &e("A2"), &stats, Some(&emb), FeatureSet::Feat);
        assert!((same[2] - 1.0).abs() < 1e-15);
        let ortho = binary_features(&e("A"), &e("B"), &stats, Some(&emb), FeatureSet::Feat);
        assert_eq!(ortho[2], 0.0);
        let missing = binary_features(&e("A"), &e("Nope"), &stats, Some(&emb), FeatureSet::Feat);
        assert_eq!(missing[2], 0.0);
        assert!(emb.insert(e("C"), vec![1.0]).is_err());
    }

    #[test]
    fn hyperlink_share() {
        let stats = KbStatistics::ingest(&[page("A", &["B", "B", "C", "D"])]);
        let psi = binary_features(&e("A"), &e("B"), &stats, None, FeatureSet::Feat);
        assert!((psi[3] - 0.5f64.ln()).abs() < 1e-15);
        let none = binary_features(&e("B"), &e("A"), &stats, None, FeatureSet::Feat);
        assert_eq!(none[3], 1e-7f64.ln());
    }

    #[test]
    fn base_is_prefix_of_feat() {
        let stats = KbStatistics::ingest(&[page("P", &["A", "B", "C"]), page("Q", &["A", "C"])]);
        let d = doc(vec![
            mention("m1", 0, &[("A", 0.4), ("B", 0.6)]),
            mention("m2", 3, &[("C", 1.0)]),
        ]);
        for j in 0..2 {
            let base = unary_features(&d, 0, j, &stats, FeatureSet::Base);
            let feat = unary_features(&d, 0, j, &stats, FeatureSet::Feat);
            assert_eq!(base[..], feat[..1]);
        }
        let base = binary_features(&e("A"), &e("C"), &stats, None, FeatureSet::Base);
        let feat = binary_features(&e("A"), &e("C"), &stats, None, FeatureSet::Feat);
        assert_eq!(base[..], feat[..1]);
    }

    #[test]
    fn embeddings_text_format() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.txt");
        fs::write(&path, "2 3\nA\t1 0 0\nNew York\t0 1 0.5\n").unwrap();
        let emb = EmbeddingStore::read_text(&path).unwrap();
        assert_eq!(emb.dim(), 3);
        assert_eq!(emb.get(&e("New York")).unwrap(), &[0.0, 1.0, 0.5]);

        fs::write(&path, "1 3\nA\t1 0\n").unwrap();
        assert!(EmbeddingStore::read_text(&path).is_err());
        fs::write(&path, "3 2\nA\t1 0\n").unwrap();
        assert!(EmbeddingStore::read_text(&path).is_err());
    }

    #[test]
    fn doc_features_share_entity_rows() {
        let stats = KbStatistics::ingest(&[page("P", &["A", "B"])]);
        let d = doc(vec![
            mention("m1", 0, &[("A", 0.5), ("B", 0.5)]),
            mention("m2", 3, &[("B", 1.0)]),
        ]);
        let f = DocFeatures::build(&d, &stats, None, FeatureSet::Feat);
        assert_eq!(f.pair(0, 0, 1, 0), &binary_features(&e("A"), &e("B"), &stats, None, FeatureSet::Feat)[..]);
        assert_eq!(f.pair(1, 0, 0, 1), f.pair(0, 1, 0, 1));
        assert_eq!(f.unary(0, 1), &unary_features(&d, 0, 1, &stats, FeatureSet::Feat)[..]);
    }

    #[test]
    fn distances() {
        assert_eq!(token_distance((0, 1), (1, 2)), 0);
        assert_eq!(token_distance((0, 1), (8, 9)), 7);
        assert_eq!(token_distance((8, 9), (0, 1)), 7);
        assert_eq!(token_distance((0, 5), (2, 3)), 0);
    }

    #[test]
    fn feature_set_parsing() {
        assert_eq!("feat".parse::<FeatureSet>().unwrap(), FeatureSet::Feat);
        assert_eq!("BASE".parse::<FeatureSet>().unwrap(), FeatureSet::Base);
        assert!("x".parse::<FeatureSet>().is_err());
    }
}
