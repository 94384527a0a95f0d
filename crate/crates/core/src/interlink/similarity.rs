use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::model::{NoteKind, RelationKind, TermKind};
use crate::store::{ConceptKey, SchemeId, Snapshot};

use super::{require_scheme, LinkCandidate, LinkError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Measure {
    #[default]
    NormalizedLevenshtein,
    TokenJaccard,
}

impl Measure {
    pub fn parse(s: &str) -> Option<Measure> {
        match s {
            "normalized-levenshtein" | "levenshtein" => Some(Measure::NormalizedLevenshtein),
            "token-jaccard" | "jaccard" => Some(Measure::TokenJaccard),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Measure::NormalizedLevenshtein => "normalized-levenshtein",
            Measure::TokenJaccard => "token-jaccard",
        }
    }

    pub fn apply(self, a: &str, b: &str) -> f64 {
        match self {
            Measure::NormalizedLevenshtein => strsim::normalized_levenshtein(a, b),
            Measure::TokenJaccard => token_jaccard(a, b),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityConfig {
    pub w_label: f64,
    pub w_def: f64,
    pub w_neighbor: f64,
    pub threshold: f64,
    pub measure: Measure,
    /// Only score pairs whose labels share a character 3-gram.
    pub blocking: bool,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig {
            w_label: 0.6,
            w_def: 0.2,
            w_neighbor: 0.2,
            threshold: 0.85,
            measure: Measure::NormalizedLevenshtein,
            blocking: true,
        }
    }
}

impl SimilarityConfig {
    pub fn labels_only(threshold: f64) -> Self {
        SimilarityConfig { w_label: 1.0, w_def: 0.0, w_neighbor: 0.0, threshold, ..Default::default() }
    }

    pub fn check(&self) -> Result<(), String> {
        let ws = [self.w_label, self.w_def, self.w_neighbor];
        if ws.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err("weights must lie in [0, 1]".into());
        }
        if (ws.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err("weights must sum to 1".into());
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err("threshold must lie in [0, 1]".into());
        }
        Ok(())
    }
}

fn tokens(s: &str) -> impl Iterator<Item = &str> {
    s.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty())
}

/// Jaccard index of the lowercased alphanumeric token sets.
pub fn token_jaccard(a: &str, b: &str) -> f64 {
    let a = a.to_lowercase();
    let b = b.to_lowercase();
    let ta: BTreeSet<&str> = tokens(&a).collect();
    let tb: BTreeSet<&str> = tokens(&b).collect();
    let union = ta.union(&tb).count();
    if union == 0 {
        return if a == b { 1.0 } else { 0.0 };
    }
    ta.intersection(&tb).count() as f64 / union as f64
}

/// Multiset Jaccard: sum of minimum counts over sum of maximum counts.
fn multiset_jaccard(a: &BTreeMap<String, usize>, b: &BTreeMap<String, usize>) -> f64 {
    let mut min = 0;
    let mut max = 0;
    let keys: BTreeSet<&String> = a.keys().chain(b.keys()).collect();
    for k in keys {
        let x = a.get(k).copied().unwrap_or(0);
        let y = b.get(k).copied().unwrap_or(0);
        min += x.min(y);
        max += x.max(y);
    }
    if max == 0 {
        0.0
    } else {
        min as f64 / max as f64
    }
}

/// Best measure over text pairs in a shared language, or over all pairs when
/// no language is shared. `None` when either side is empty.
fn best_pair(measure: Measure, a: &[(String, String)], b: &[(String, String)]) -> Option<f64> {
    if a.is_empty() || b.is_empty() {
        return None;
    }
    let shared = a.iter().any(|(la, _)| b.iter().any(|(lb, _)| la == lb));
    let mut best = 0.0f64;
    for (la, ta) in a {
        for (lb, tb) in b {
            if !shared || la == lb {
                best = best.max(measure.apply(ta, tb));
            }
        }
    }
    Some(best)
}

/// Best label similarity of two lists of `(language, text)`, compared
/// case-insensitively.
pub fn label_similarity(measure: Measure, a: &[(String, String)], b: &[(String, String)]) -> f64 {
    let lower = |v: &[(String, String)]| v.iter().map(|(l, t)| (l.clone(), t.to_lowercase())).collect::<Vec<_>>();
    best_pair(measure, &lower(a), &lower(b)).unwrap_or(0.0)
}

#[derive(Debug, Clone, Default)]
struct Profile {
    labels: Vec<(String, String)>,
    defs: Vec<(String, String)>,
    neighbors: BTreeMap<String, usize>,
}

impl Profile {
    fn build(snap: &Snapshot, key: &ConceptKey) -> Profile {
        let lower = |v: Vec<(String, String)>| v.into_iter().map(|(l, t)| (l, t.to_lowercase())).collect::<Vec<_>>();
        let mut labels = lower(snap.label_text(key, TermKind::PrefLabel));
        labels.extend(lower(snap.label_text(key, TermKind::AltLabel)));
        let defs = snap
            .note_text(key, NoteKind::Definition)
            .into_iter()
            .map(|(l, t)| (l.unwrap_or_default(), t.to_lowercase()))
            .collect();
        let mut neighbors = BTreeMap::new();
        for rel in [RelationKind::Broader, RelationKind::Narrower, RelationKind::Related] {
            for n in snap.targets(key, rel) {
                for (_, text) in snap.label_text(&n, TermKind::PrefLabel) {
                    for t in tokens(&text.to_lowercase()) {
                        *neighbors.entry(t.to_string()).or_default() += 1;
                    }
                }
            }
        }
        Profile { labels, defs, neighbors }
    }

    fn grams(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for (_, t) in &self.labels {
            let chars: Vec<char> = t.chars().collect();
            if chars.len() < 3 {
                out.insert(t.clone());
            } else {
                for w in chars.windows(3) {
                    out.insert(w.iter().collect());
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairScore {
    pub label: f64,
    pub definition: Option<f64>,
    pub neighbor: Option<f64>,
    pub total: f64,
}

fn score_profiles(cfg: &SimilarityConfig, a: &Profile, b: &Profile) -> PairScore {
    let label = best_pair(cfg.measure, &a.labels, &b.labels).unwrap_or(0.0);
    let definition = best_pair(cfg.measure, &a.defs, &b.defs);
    let neighbor =
        (!a.neighbors.is_empty() && !b.neighbors.is_empty()).then(|| multiset_jaccard(&a.neighbors, &b.neighbors));
    let mut num = cfg.w_label * label;
    let mut den = cfg.w_label;
    if let Some(d) = definition {
        num += cfg.w_def * d;
        den += cfg.w_def;
    }
    if let Some(n) = neighbor {
        num += cfg.w_neighbor * n;
        den += cfg.w_neighbor;
    }
    let total = if den > 0.0 { (num / den).clamp(0.0, 1.0) } else { label };
    PairScore { label, definition, neighbor, total }
}

/// Similarity of two stored concepts. Missing definitions or neighbors
/// drop out and their weight is spread over the present components.
pub fn score_pair(snap: &Snapshot, cfg: &SimilarityConfig, a: &ConceptKey, b: &ConceptKey) -> PairScore {
    score_profiles(cfg, &Profile::build(snap, a), &Profile::build(snap, b))
}

/// Scores concept pairs across two local schemes. Pairs scoring zero are
/// omitted; the rest are returned in key order, accepted when the score
/// reaches the threshold.
pub fn link_similarity(
    snap: &Snapshot,
    src_scheme: SchemeId,
    dst_scheme: SchemeId,
    cfg: &SimilarityConfig,
) -> Result<Vec<LinkCandidate>, LinkError> {
    require_scheme(snap, src_scheme, true)?;
    require_scheme(snap, dst_scheme, true)?;
    cfg.check().map_err(LinkError::InvalidRule)?;
    let profiles = |s: SchemeId| -> Vec<(ConceptKey, Profile)> {
        snap.concepts_in(s)
            .map(|l| {
                let k = ConceptKey::new(s, l);
                let p = Profile::build(snap, &k);
                (k, p)
            })
            .collect()
    };
    let src = profiles(src_scheme);
    let dst = profiles(dst_scheme);
    let mut blocks: HashMap<String, Vec<usize>> = HashMap::new();
    if cfg.blocking {
        for (i, (_, p)) in dst.iter().enumerate() {
            for g in p.grams() {
                blocks.entry(g).or_default().push(i);
            }
        }
    }
    let mut out = Vec::new();
    for (sk, sp) in &src {
        let candidates: Vec<usize> = if cfg.blocking {
            let set: BTreeSet<usize> =
                sp.grams().iter().filter_map(|g| blocks.get(g)).flatten().copied().collect();
            set.into_iter().collect()
        } else {
            (0..dst.len()).collect()
        };
        for j in candidates {
            let (dk, dp) = &dst[j];
            let s = score_profiles(cfg, sp, dp);
            if s.total <= 0.0 {
                continue;
            }
            let emit = if s.label == 1.0 { RelationKind::ExactMatch } else { RelationKind::CloseMatch };
            out.push(LinkCandidate {
                src: sk.clone(),
                dst: dk.clone(),
                score: s.total,
                emit,
                accepted: s.total >= cfg.threshold,
            });
        }
    }
    Ok(out)
}
