//! Knowledge-base statistics gathered from anchor-annotated articles.
//!
//! Counts kept here:
//! - `entity_count[e]`: anchor links targeting `e` over all pages.
//! - `pair_count[{a, b}]`: pages on which both `a` and `b` are link targets,
//!   once per page per unordered pair; self-pairs are never counted.
//! - `outlinks[p]`: multiset of link targets found on page `p`.
//!
//! A statistics store is a directory holding `meta.json` and three sorted
//! TSV files, each guarded by a SHA-256 checksum in the manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::EntityId;
use crate::error::{Error, Result};
use crate::parallel::Parallelism;

pub const DEFAULT_EPSILON: f64 = 1e-7;
pub const DEFAULT_SMOOTHING: f64 = 0.75;
pub const STORE_FORMAT_VERSION: u32 = 1;

const META_FILE: &str = "meta.json";
const ENTITY_FILE: &str = "entity_counts.tsv";
const PAIR_FILE: &str = "pair_counts.tsv";
const OUTLINK_FILE: &str = "outlinks.tsv";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorLink {
    pub surface: String,
    pub entity: EntityId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorPage {
    pub page: EntityId,
    pub links: Vec<AnchorLink>,
}

pub fn read_anchor_pages(path: &Path) -> Result<Vec<AnchorPage>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut pages = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let page: AnchorPage = serde_json::from_str(&line).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            line: idx + 1,
            source,
        })?;
        if page.links.iter().any(|l| l.surface.trim().is_empty()) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message: format!("empty anchor surface on page {}", page.page),
            });
        }
        pages.push(page);
    }
    Ok(pages)
}

/// Unordered entity pair, stored with the lexicographically smaller id first.
pub fn pair_key(a: &EntityId, b: &EntityId) -> (EntityId, EntityId) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KbStatistics {
    entity_count: BTreeMap<EntityId, u64>,
    pair_count: BTreeMap<(EntityId, EntityId), u64>,
    total_anchor_count: u64,
    total_pair_count: u64,
    outlinks: BTreeMap<EntityId, BTreeMap<EntityId, u64>>,
    epsilon: f64,
    smoothing: f64,
    // Derived from the counts; refreshed after every mutation.
    smoothed_mass: f64,
    outlink_totals: BTreeMap<EntityId, u64>,
}

impl Default for KbStatistics {
    fn default() -> Self {
        KbStatistics::empty(DEFAULT_EPSILON, DEFAULT_SMOOTHING).expect("default constants are valid")
    }
}

impl KbStatistics {
    pub fn empty(epsilon: f64, smoothing: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!("epsilon must be > 0, got {epsilon}")));
        }
        if !(smoothing > 0.0 && smoothing <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "smoothing must be in (0, 1], got {smoothing}"
            )));
        }
        Ok(KbStatistics {
            entity_count: BTreeMap::new(),
            pair_count: BTreeMap::new(),
            total_anchor_count: 0,
            total_pair_count: 0,
            outlinks: BTreeMap::new(),
            epsilon,
            smoothing,
            smoothed_mass: 0.0,
            outlink_totals: BTreeMap::new(),
        })
    }

    /// Ingests pages with the default constants.
    pub fn ingest<'a, I>(pages: I) -> Self
    where
        I: IntoIterator<Item = &'a AnchorPage>,
    {
        let mut stats = KbStatistics::default();
        stats.add_pages(pages);
        stats
    }

    pub fn ingest_with<'a, I>(pages: I, epsilon: f64, smoothing: f64) -> Result<Self>
    where
        I: IntoIterator<Item = &'a AnchorPage>,
    {
        let mut stats = KbStatistics::empty(epsilon, smoothing)?;
        stats.add_pages(pages);
        Ok(stats)
    }

    /// Splits `pages` into contiguous shards, ingests them independently and
    /// merges the results in shard order.
    pub fn ingest_sharded(pages: &[AnchorPage], par: &Parallelism) -> Self {
        if pages.is_empty() {
            return KbStatistics::default();
        }
        let shard_len = pages.len().div_ceil(par.jobs().max(1) * 4);
        let shards: Vec<&[AnchorPage]> = pages.chunks(shard_len).collect();
        let partial = par.map(&shards, |_, shard| KbStatistics::ingest(shard.iter()));
        partial
            .into_iter()
            .reduce(|a, b| a.merge(&b).expect("shards share constants"))
            .unwrap_or_default()
    }

    fn add_pages<'a, I>(&mut self, pages: I)
    where
        I: IntoIterator<Item = &'a AnchorPage>,
    {
        for page in pages {
            let mut distinct = BTreeSet::new();
            let page_out = self.outlinks.entry(page.page.clone()).or_default();
            for link in &page.links {
                *self.entity_count.entry(link.entity.clone()).or_insert(0) += 1;
                *page_out.entry(link.entity.clone()).or_insert(0) += 1;
                self.total_anchor_count += 1;
                distinct.insert(&link.entity);
            }
            if page_out.is_empty() {
                self.outlinks.remove(&page.page);
            }
            let distinct: Vec<_> = distinct.into_iter().collect();
            for (i, a) in distinct.iter().enumerate() {
                for b in &distinct[i + 1..] {
                    *self.pair_count.entry(((*a).clone(), (*b).clone())).or_insert(0) += 1;
                    self.total_pair_count += 1;
                }
            }
        }
        self.refresh();
    }

    fn refresh(&mut self) {
        let s = self.smoothing;
        self.smoothed_mass = self.entity_count.values().map(|&c| (c as f64).powf(s)).sum();
        self.outlink_totals = self
            .outlinks
            .iter()
            .map(|(p, targets)| (p.clone(), targets.values().sum()))
            .collect();
    }

    /// Pointwise sum of all counts.
    pub fn merge(&self, other: &KbStatistics) -> Result<KbStatistics> {
        if self.epsilon.to_bits() != other.epsilon.to_bits()
            || self.smoothing.to_bits() != other.smoothing.to_bits()
        {
            return Err(Error::ConstantMismatch(format!(
                "epsilon {} vs {}, smoothing {} vs {}",
                self.epsilon, other.epsilon, self.smoothing, other.smoothing
            )));
        }
        let mut out = self.clone();
        for (e, c) in &other.entity_count {
            *out.entity_count.entry(e.clone()).or_insert(0) += c;
        }
        for (k, c) in &other.pair_count {
            *out.pair_count.entry(k.clone()).or_insert(0) += c;
        }
        for (p, targets) in &other.outlinks {
            let dst = out.outlinks.entry(p.clone()).or_default();
            for (t, c) in targets {
                *dst.entry(t.clone()).or_insert(0) += c;
            }
        }
        out.total_anchor_count += other.total_anchor_count;
        out.total_pair_count += other.total_pair_count;
        out.refresh();
        Ok(out)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn total_anchor_count(&self) -> u64 {
        self.total_anchor_count
    }

    pub fn total_pair_count(&self) -> u64 {
        self.total_pair_count
    }

    pub fn entity_count(&self, e: &EntityId) -> u64 {
        self.entity_count.get(e).copied().unwrap_or(0)
    }

    pub fn entity_counts(&self) -> &BTreeMap<EntityId, u64> {
        &self.entity_count
    }

    pub fn pair_counts(&self) -> &BTreeMap<(EntityId, EntityId), u64> {
        &self.pair_count
    }

    pub fn outlinks(&self) -> &BTreeMap<EntityId, BTreeMap<EntityId, u64>> {
        &self.outlinks
    }

    pub fn contains_entity(&self, e: &EntityId) -> bool {
        self.entity_count.contains_key(e)
    }

    /// Co-occurrence count of an unordered pair; 0 for self-pairs.
    pub fn pair_count(&self, a: &EntityId, b: &EntityId) -> u64 {
        if a == b {
            return 0;
        }
        self.pair_count.get(&pair_key(a, b)).copied().unwrap_or(0)
    }

    /// Occurrences of `target` among the links on `page`.
    pub fn outlink_multiplicity(&self, page: &EntityId, target: &EntityId) -> u64 {
        self.outlinks
            .get(page)
            .and_then(|t| t.get(target))
            .copied()
            .unwrap_or(0)
    }

    /// Total number of links on `page` (|H_e| as a multiset).
    pub fn outlink_total(&self, page: &EntityId) -> u64 {
        self.outlink_totals.get(page).copied().unwrap_or(0)
    }

    /// Sum over entities of `count^smoothing`.
    pub fn smoothed_mass(&self) -> f64 {
        self.smoothed_mass
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

        let mut entity_tsv = String::new();
        for (e, c) in &self.entity_count {
            entity_tsv.push_str(&format!("{e}\t{c}\n"));
        }
        let mut pair_tsv = String::new();
        for ((a, b), c) in &self.pair_count {
            pair_tsv.push_str(&format!("{a}\t{b}\t{c}\n"));
        }
        let mut outlink_tsv = String::new();
        for (p, targets) in &self.outlinks {
            for (t, c) in targets {
                outlink_tsv.push_str(&format!("{p}\t{t}\t{c}\n"));
            }
        }

        let mut checksums = BTreeMap::new();
        for (name, body) in [
            (ENTITY_FILE, &entity_tsv),
            (PAIR_FILE, &pair_tsv),
            (OUTLINK_FILE, &outlink_tsv),
        ] {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
            checksums.insert(name.to_string(), sha256_hex(body.as_bytes()));
        }

        let meta = StoreMeta {
            format_version: STORE_FORMAT_VERSION,
            epsilon: self.epsilon,
            smoothing: self.smoothing,
            total_anchor_count: self.total_anchor_count,
            total_pair_count: self.total_pair_count,
            checksums,
        };
        let path = dir.join(META_FILE);
        let mut text = serde_json::to_string_pretty(&meta).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<KbStatistics> {
        let meta_path = dir.join(META_FILE);
        let meta_text = fs::read_to_string(&meta_path).map_err(|e| store_err(META_FILE, e))?;
        let meta: StoreMeta = serde_json::from_str(&meta_text).map_err(|e| Error::Store {
            file: META_FILE.into(),
            message: e.to_string(),
        })?;
        if meta.format_version != STORE_FORMAT_VERSION {
            return Err(Error::Store {
                file: META_FILE.into(),
                message: format!("unsupported format_version {}", meta.format_version),
            });
        }
        let mut stats = KbStatistics::empty(meta.epsilon, meta.smoothing)?;

        let read_checked = |name: &str| -> Result<String> {
            let body = fs::read_to_string(dir.join(name)).map_err(|e| store_err(name, e))?;
            let expected = meta.checksums.get(name).ok_or_else(|| Error::Store {
                file: name.into(),
                message: "no checksum in manifest".into(),
            })?;
            if &sha256_hex(body.as_bytes()) != expected {
                return Err(Error::Store {
                    file: name.into(),
                    message: "checksum mismatch".into(),
                });
            }
            Ok(body)
        };

        for (line_no, fields) in tsv_rows(&read_checked(ENTITY_FILE)?, 2, ENTITY_FILE)? {
            let e = parse_entity(fields[0], ENTITY_FILE, line_no)?;
            let c = parse_count(fields[1], ENTITY_FILE, line_no)?;
            stats.entity_count.insert(e, c);
        }
        for (line_no, fields) in tsv_rows(&read_checked(PAIR_FILE)?, 3, PAIR_FILE)? {
            let a = parse_entity(fields[0], PAIR_FILE, line_no)?;
            let b = parse_entity(fields[1], PAIR_FILE, line_no)?;
            if a >= b {
                return Err(bad_row(PAIR_FILE, line_no, "pair not in ascending order"));
            }
            let c = parse_count(fields[2], PAIR_FILE, line_no)?;
            stats.pair_count.insert((a, b), c);
        }
        for (line_no, fields) in tsv_rows(&read_checked(OUTLINK_FILE)?, 3, OUTLINK_FILE)? {
            let p = parse_entity(fields[0], OUTLINK_FILE, line_no)?;
            let t = parse_entity(fields[1], OUTLINK_FILE, line_no)?;
            let c = parse_count(fields[2], OUTLINK_FILE, line_no)?;
            stats.outlinks.entry(p).or_default().insert(t, c);
        }

        stats.total_anchor_count = meta.total_anchor_count;
        stats.total_pair_count = meta.total_pair_count;
        if stats.entity_count.values().sum::<u64>() != stats.total_anchor_count {
            return Err(Error::Store {
                file: META_FILE.into(),
                message: "total_anchor_count disagrees with entity counts".into(),
            });
        }
        if stats.pair_count.values().sum::<u64>() != stats.total_pair_count {
            return Err(Error::Store {
                file: META_FILE.into(),
                message: "total_pair_count disagrees with pair counts".into(),
            });
        }
        stats.refresh();
        Ok(stats)
    }
}

#[derive(Serialize, Deserialize)]
struct StoreMeta {
    format_version: u32,
    epsilon: f64,
    smoothing: f64,
    total_anchor_count: u64,
    total_pair_count: u64,
    checksums: BTreeMap<String, String>,
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn store_err(file: &str, e: std::io::Error) -> Error {
    Error::Store {
        file: file.into(),
        message: e.to_string(),
    }
}

fn bad_row(file: &str, line: usize, message: &str) -> Error {
    Error::Store {
        file: file.into(),
        message: format!("line {line}: {message}"),
    }
}

fn tsv_rows<'a>(body: &'a str, width: usize, file: &str) -> Result<Vec<(usize, Vec<&'a str>)>> {
    body.lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let fields: Vec<&str> = l.split('\t').collect();
            if fields.len() != width {
                return Err(bad_row(file, i + 1, &format!("expected {width} fields")));
            }
            Ok((i + 1, fields))
        })
        .collect()
}

fn parse_entity(s: &str, file: &str, line: usize) -> Result<EntityId> {
    EntityId::new(s).map_err(|_| bad_row(file, line, "empty entity"))
}

fn parse_count(s: &str, file: &str, line: usize) -> Result<u64> {
    s.parse().map_err(|_| bad_row(file, line, &format!("bad count {s:?}")))
}

/// Source-language entity to English entity.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BilingualMap {
    entries: BTreeMap<EntityId, EntityId>,
}

impl BilingualMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a mapping; a second, different target for the same source is an error.
    pub fn insert(&mut self, source: EntityId, english: EntityId) -> Result<()> {
        match self.entries.get(&source) {
            Some(existing) if existing != &english => Err(Error::InvalidArgument(format!(
                "{source} maps to both {existing} and {english}"
            ))),
            _ => {
                self.entries.insert(source, english);
                Ok(())
            }
        }
    }

    pub fn get(&self, source: &EntityId) -> Option<&EntityId> {
        self.entries.get(source)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn read_tsv(path: &Path) -> Result<Self> {
        let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut map = BilingualMap::new();
        for (i, line) in body.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let (src, eng) = line
                .split_once('\t')
                .ok_or_else(|| parse_err("expected source<TAB>english".into()))?;
            let src = EntityId::new(src).map_err(|e| parse_err(e.to_string()))?;
            let eng = EntityId::new(eng).map_err(|e| parse_err(e.to_string()))?;
            map.insert(src, eng).map_err(|e| parse_err(e.to_string()))?;
        }
        Ok(map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(s: &str) -> EntityId {
        EntityId::new(s).unwrap()
    }

    fn page(name: &str, targets: &[&str]) -> AnchorPage {
        AnchorPage {
            page: e(name),
            links: targets
                .iter()
                .map(|t| AnchorLink {
                    surface: t.to_lowercase(),
                    entity: e(t),
                })
                .collect(),
        }
    }

    #[test]
    fn one_page_hand_count() {
        let s = KbStatistics::ingest(&[page("P", &["A", "A", "B"])]);
        assert_eq!(s.entity_count(&e("A")), 2);
        assert_eq!(s.entity_count(&e("B")), 1);
        assert_eq!(s.pair_count(&e("A"), &e("B")), 1);
        assert_eq!(s.pair_count(&e("B"), &e("A")), 1);
        assert_eq!(s.total_anchor_count(), 3);
        assert_eq!(s.total_pair_count(), 1);
        assert_eq!(s.outlink_multiplicity(&e("P"), &e("A")), 2);
        assert_eq!(s.outlink_total(&e("P")), 3);
    }

    #[test]
    fn two_pages_accumulate_pairs() {
        let s = KbStatistics::ingest(&[page("P", &["A", "B"]), page("Q", &["B", "A"])]);
        assert_eq!(s.pair_count(&e("A"), &e("B")), 2);
    }

    #[test]
    fn single_link_page_has_no_pairs() {
        let s = KbStatistics::ingest(&[page("P", &["A"])]);
        assert!(s.pair_counts().is_empty());
        assert_eq!(s.total_pair_count(), 0);
        assert_eq!(s.pair_count(&e("A"), &e("A")), 0);
    }

    #[test]
    fn empty_stream() {
        let s = KbStatistics::ingest(&[]);
        assert_eq!(s.total_anchor_count(), 0);
        assert_eq!(s.total_pair_count(), 0);
        assert_eq!(s, KbStatistics::default());
    }

    #[test]
    fn merge_identity_and_commutativity() {
        let a = KbStatistics::ingest(&[page("P", &["A", "B", "C"])]);
        let b = KbStatistics::ingest(&[page("Q", &["C", "D"]), page("P", &["A"])]);
        assert_eq!(a.merge(&KbStatistics::default()).unwrap(), a);
        assert_eq!(a.merge(&b).unwrap(), b.merge(&a).unwrap());
    }

    #[test]
    fn merge_rejects_mismatched_constants() {
        let a = KbStatistics::default();
        let b = KbStatistics::empty(1e-6, 0.75).unwrap();
        assert!(matches!(a.merge(&b), Err(Error::ConstantMismatch(_))));
    }

    #[test]
    fn invalid_constants() {
        assert!(KbStatistics::empty(0.0, 0.75).is_err());
        assert!(KbStatistics::empty(1e-7, 0.0).is_err());
        assert!(KbStatistics::empty(1e-7, 1.5).is_err());
    }

    #[test]
    fn sharded_ingest_matches_single_pass() {
        let pages: Vec<_> = (0..37)
            .map(|i| {
                let ts: Vec<String> = (0..(i % 5 + 1)).map(|j| format!("E{}", (i * 7 + j * 3) % 11)).collect();
                let refs: Vec<&str> = ts.iter().map(|s| s.as_str()).collect();
                page(&format!("P{i}"), &refs)
            })
            .collect();
        let whole = KbStatistics::ingest(&pages);
        let sharded = KbStatistics::ingest_sharded(&pages, &Parallelism::new(3).unwrap());
        assert_eq!(whole, sharded);
    }

    #[test]
    fn save_load_round_trip() {
        let s = KbStatistics::ingest(&[page("P", &["A", "B", "A"]), page("Q", &["C", "B"])]);
        let dir = tempfile::tempdir().unwrap();
        s.save(dir.path()).unwrap();
        assert_eq!(KbStatistics::load(dir.path()).unwrap(), s);

        // deterministic bytes
        let dir2 = tempfile::tempdir().unwrap();
        s.save(dir2.path()).unwrap();
        for f in [META_FILE, ENTITY_FILE, PAIR_FILE, OUTLINK_FILE] {
            assert_eq!(
                fs::read(dir.path().join(f)).unwrap(),
                fs::read(dir2.path().join(f)).unwrap()
            );
        }
        assert_eq!(
            fs::read_to_string(dir.path().join(PAIR_FILE)).unwrap(),
            "A\tB\t1\nB\tC\t1\n"
        );
    }

    #[test]
    fn load_empty_dir_fails_naming_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let err = KbStatistics::load(dir.path()).unwrap_err();
        assert!(err.to_string().contains(META_FILE));
    }

    #[test]
    fn load_unknown_version_fails() {
        let s = KbStatistics::ingest(&[page("P", &["A", "B"])]);
        let dir = tempfile::tempdir().unwrap();
        s.save(dir.path()).unwrap();
        let meta_path = dir.path().join(META_FILE);
        let text = fs::read_to_string(&meta_path)
            .unwrap()
            .replace("\"format_version\": 1", "\"format_version\": 99");
        fs::write(&meta_path, text).unwrap();
        assert!(KbStatistics::load(dir.path()).unwrap_err().to_string().contains("format_version"));
    }

    #[test]
    fn load_detects_tampering() {
        let s = KbStatistics::ingest(&[page("P", &["A", "B"])]);
        let dir = tempfile::tempdir().unwrap();
        s.save(dir.path()).unwrap();
        fs::write(dir.path().join(ENTITY_FILE), "A\t5\nB\t1\n").unwrap();
        let err = KbStatistics::load(dir.path()).unwrap_err().to_string();
        assert!(err.contains(ENTITY_FILE) && err.contains("checksum"), "{err}");
    }

    #[test]
    fn bilingual_map_is_a_partial_function() {
        let mut m = BilingualMap::new();
        m.insert(e("Itoophiyaa"), e("Ethiopia")).unwrap();
        m.insert(e("Itoophiyaa"), e("Ethiopia")).unwrap();
        assert!(m.insert(e("Itoophiyaa"), e("Eritrea")).is_err());
        assert_eq!(m.get(&e("Itoophiyaa")), Some(&e("Ethiopia")));
    }
}
