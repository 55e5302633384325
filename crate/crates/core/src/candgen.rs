//! Candidate generation: the anchor-text dictionary, temperature calibration
//! of non-probabilistic scores, and averaging of several candidate sources.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use crate::corpus::{Candidate, Document, EntityId, MentionKey};
use crate::error::{Error, Result};
use crate::kb::{AnchorPage, BilingualMap};

pub const DEFAULT_K: usize = 30;
pub const DEFAULT_GAMMA: f64 = 1.0;

/// Unicode lowercase plus whitespace collapse.
pub fn normalize_surface(surface: &str, lowercase: bool) -> String {
    let collapsed = surface.split_whitespace().collect::<Vec<_>>().join(" ");
    if lowercase {
        collapsed.to_lowercase()
    } else {
        collapsed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    WikiMention,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CandidateSource {
    pub kind: SourceKind,
    /// Scores already lie on the probability simplex.
    pub probabilistic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationConfig {
    pub gamma: f64,
    pub k: usize,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            gamma: DEFAULT_GAMMA,
            k: DEFAULT_K,
        }
    }
}

impl CalibrationConfig {
    pub fn new(gamma: f64, k: usize) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("gamma must be > 0, got {gamma}")));
        }
        if k == 0 {
            return Err(Error::InvalidArgument("K must be at least 1".into()));
        }
        Ok(CalibrationConfig { gamma, k })
    }
}

/// Surface form to `(entity, count)` list. Entities are unique per surface.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MentionEntityMap {
    table: BTreeMap<String, Vec<(EntityId, u64)>>,
    lowercase: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub kept: u64,
    /// Anchors whose entity has no bilingual entry.
    pub dropped: u64,
}

impl MentionEntityMap {
    pub fn new(lowercase: bool) -> Self {
        MentionEntityMap {
            table: BTreeMap::new(),
            lowercase,
        }
    }

    /// Builds the dictionary from source-language anchors, redirecting each
    /// linked entity to English through `bimap`.
    pub fn build<'a, I>(src_pages: I, bimap: &BilingualMap) -> (Self, BuildReport)
    where
        I: IntoIterator<Item = &'a AnchorPage>,
    {
        let mut counts: BTreeMap<String, BTreeMap<EntityId, u64>> = BTreeMap::new();
        let mut report = BuildReport::default();
        for page in src_pages {
            for link in &page.links {
                let Some(english) = bimap.get(&link.entity) else {
                    report.dropped += 1;
                    continue;
                };
                let surface = normalize_surface(&link.surface, true);
                if surface.is_empty() {
                    report.dropped += 1;
                    continue;
                }
                *counts.entry(surface).or_default().entry(english.clone()).or_insert(0) += 1;
                report.kept += 1;
            }
        }
        let table = counts
            .into_iter()
            .map(|(s, m)| (s, m.into_iter().collect()))
            .collect();
        (
            MentionEntityMap {
                table,
                lowercase: true,
            },
            report,
        )
    }

    pub fn add(&mut self, surface: &str, entity: EntityId, count: u64) -> Result<()> {
        if count == 0 {
            return Err(Error::InvalidArgument("dictionary counts must be positive".into()));
        }
        let surface = normalize_surface(surface, self.lowercase);
        let list = self.table.entry(surface).or_default();
        match list.iter_mut().find(|(e, _)| *e == entity) {
            Some((_, c)) => *c += count,
            None => list.push((entity, count)),
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn contains_entity(&self, entity: &EntityId) -> bool {
        self.table.values().any(|l| l.iter().any(|(e, _)| e == entity))
    }

    pub fn entities(&self) -> impl Iterator<Item = &EntityId> {
        self.table.values().flat_map(|l| l.iter().map(|(e, _)| e))
    }

    pub fn entries(&self, surface: &str) -> &[(EntityId, u64)] {
        self.table
            .get(&normalize_surface(surface, self.lowercase))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// `p(e|m)` for every entity recorded under `surface`, in table order.
    pub fn priors(&self, surface: &str) -> Vec<(EntityId, f64)> {
        let entries = self.entries(surface);
        let total: u64 = entries.iter().map(|(_, c)| c).sum();
        entries
            .iter()
            .map(|(e, c)| (e.clone(), *c as f64 / total as f64))
            .collect()
    }

    /// Top-`k` entities by prior, ties by entity id. Priors are not
    /// renormalized after truncation.
    pub fn lookup(&self, surface: &str, k: usize) -> Result<Vec<Candidate>> {
        if k == 0 {
            return Err(Error::InvalidArgument("K must be at least 1".into()));
        }
        let mut priors = self.priors(surface);
        priors.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        priors.truncate(k);
        Ok(priors
            .into_iter()
            .map(|(e, p)| Candidate::new(e, p))
            .collect())
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut body = String::new();
        for (surface, list) in &self.table {
            let mut sorted: Vec<_> = list.iter().collect();
            sorted.sort_by(|a, b| a.0.cmp(&b.0));
            for (e, c) in sorted {
                body.push_str(&format!("{surface}\t{e}\t{c}\n"));
            }
        }
        fs::write(path, body).map_err(|e| Error::io(path, e))
    }

    /// Reads `surface<TAB>entity<TAB>count` rows. Surfaces are re-normalized.
    pub fn read_tsv(path: &Path) -> Result<Self> {
        let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut map = MentionEntityMap::new(true);
        for (i, line) in body.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(parse_err("expected surface<TAB>entity<TAB>count".into()));
            }
            let entity = EntityId::new(fields[1]).map_err(|e| parse_err(e.to_string()))?;
            let count: u64 = fields[2]
                .parse()
                .map_err(|_| parse_err(format!("bad count {:?}", fields[2])))?;
            map.add(fields[0], entity, count)
                .map_err(|e| parse_err(e.to_string()))?;
        }
        Ok(map)
    }
}

/// Temperature softmax over a raw score list, `p_j = exp(γ s_j) / Σ_k exp(γ s_k)`.
pub fn calibrate(scores: &[(EntityId, f64)], gamma: f64) -> Result<Vec<Candidate>> {
    if scores.is_empty() {
        return Err(Error::InvalidArgument("cannot calibrate an empty list".into()));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!("gamma must be > 0, got {gamma}")));
    }
    if let Some((e, s)) = scores.iter().find(|(_, s)| !s.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite score {s} for {e}")));
    }
    let max = scores
        .iter()
        .map(|(_, s)| gamma * s)
        .fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|(_, s)| (gamma * s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    Ok(scores
        .iter()
        .zip(exps)
        .map(|((e, _), x)| Candidate::new(e.clone(), x / z))
        .collect())
}

/// Averages calibrated lists from several sources. An entity missing from a
/// source contributes probability 0 for that source. Returns the top `k`,
/// ties by entity id.
pub fn combine(lists: &[Vec<Candidate>], k: usize) -> Vec<Candidate> {
    if lists.is_empty() || k == 0 {
        return Vec::new();
    }
    let mut contributions: BTreeMap<&EntityId, Vec<f64>> = BTreeMap::new();
    for list in lists {
        for c in list {
            contributions.entry(&c.entity).or_default().push(c.p);
        }
    }
    let n = lists.len() as f64;
    let mut fused: Vec<Candidate> = contributions
        .into_iter()
        .map(|(e, mut ps)| {
            // summation order fixed by value so the result ignores source order
            ps.sort_by(f64::total_cmp);
            Candidate::new(e.clone(), ps.iter().sum::<f64>() / n)
        })
        .collect();
    fused.sort_by(|a, b| b.p.total_cmp(&a.p).then_with(|| a.entity.cmp(&b.entity)));
    fused.truncate(k);
    fused
}

/// One line of the external candidate scores file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ExternalScores {
    pub doc_id: String,
    pub mention_id: String,
    pub candidates: Vec<ExternalCandidate>,
    pub probabilistic: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ExternalCandidate {
    pub entity: EntityId,
    pub score: f64,
}

pub fn read_external_scores(path: &Path) -> Result<Vec<ExternalScores>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            line: idx + 1,
            source,
        })?);
    }
    Ok(out)
}

impl ExternalScores {
    /// Top-`k` by raw score, calibrated unless already probabilistic.
    pub fn to_candidates(&self, cfg: &CalibrationConfig) -> Result<Vec<Candidate>> {
        let mut scored: Vec<(EntityId, f64)> = Vec::with_capacity(self.candidates.len());
        for c in &self.candidates {
            if scored.iter().any(|(e, _)| e == &c.entity) {
                return Err(Error::InvalidMention {
                    doc_id: self.doc_id.clone(),
                    mention_id: self.mention_id.clone(),
                    message: format!("duplicate external candidate {}", c.entity),
                });
            }
            scored.push((c.entity.clone(), c.score));
        }
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        scored.truncate(cfg.k);
        if scored.is_empty() {
            return Ok(Vec::new());
        }
        if self.probabilistic {
            if let Some((e, s)) = scored.iter().find(|(_, s)| !(0.0..=1.0).contains(s)) {
                return Err(Error::InvalidArgument(format!(
                    "probabilistic score {s} for {e} outside [0, 1]"
                )));
            }
            Ok(scored.into_iter().map(|(e, p)| Candidate::new(e, p)).collect())
        } else {
            calibrate(&scored, cfg.gamma)
        }
    }
}

/// Fills every mention's candidate list from the configured sources.
///
/// Each configured source counts in the average for every mention, whether
/// or not it produced a list for that mention. With a single source the
/// fused list equals that source's list.
pub fn generate_candidates(
    docs: &mut [Document],
    dictionary: Option<&MentionEntityMap>,
    external: &[Vec<ExternalScores>],
    cfg: &CalibrationConfig,
) -> Result<()> {
    let mut by_mention: Vec<HashMap<MentionKey, &ExternalScores>> = Vec::new();
    for source in external {
        let mut map = HashMap::new();
        for rec in source {
            map.insert(MentionKey::new(&rec.doc_id, &rec.mention_id), rec);
        }
        by_mention.push(map);
    }
    for doc in docs.iter_mut() {
        for m in doc.mentions.iter_mut() {
            let key = MentionKey::new(&doc.doc_id, &m.id);
            let mut lists = Vec::new();
            if let Some(dict) = dictionary {
                lists.push(dict.lookup(&m.surface, cfg.k)?);
            }
            for source in &by_mention {
                lists.push(match source.get(&key) {
                    Some(rec) => rec.to_candidates(cfg)?,
                    None => Vec::new(),
                });
            }
            m.candidates = combine(&lists, cfg.k);
        }
    }
    Ok(())
}
