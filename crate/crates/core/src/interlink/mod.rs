//! Cross-scheme link discovery: label/definition similarity, shared foreign
//! keys, mentions of one scheme's labels in another's notes, and curated
//! link files.

mod manual;
mod mention;
mod similarity;

use std::fmt;

use thiserror::Error;

use crate::mapping::{expand_uri_pattern, ColumnRef, Row, UriPattern};
use crate::model::{NoteKind, RelationKind};
use crate::store::{ConceptKey, Provenance, RelationRecord, SchemeId, SchemeKind, Snapshot, Store, StoreError};

pub use manual::{load_manual_links, parse_manual_links, MANUAL_KEYWORDS};
pub use mention::link_mention_scan;
pub use similarity::{
    label_similarity, link_similarity, score_pair, token_jaccard, Measure, PairScore, SimilarityConfig,
};

#[derive(Debug, Error)]
pub enum LinkError {
    #[error("unknown scheme {0}")]
    UnknownScheme(SchemeId),
    #[error("scheme {0} is not local")]
    NotLocal(SchemeId),
    #[error("invalid rule: {0}")]
    InvalidRule(String),
    #[error("invalid pattern: {0}")]
    InvalidPattern(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown concept {0}")]
    UnknownConcept(ConceptKey),
    #[error("candidate {0} -> {1} was not accepted")]
    NotAccepted(ConceptKey, ConceptKey),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkCandidate {
    pub src: ConceptKey,
    pub dst: ConceptKey,
    pub score: f64,
    pub emit: RelationKind,
    pub accepted: bool,
}

impl LinkCandidate {
    pub fn certain(src: ConceptKey, emit: RelationKind, dst: ConceptKey) -> Self {
        LinkCandidate { src, dst, score: 1.0, emit, accepted: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    Similarity(SimilarityConfig),
    /// Foreign key values expanded through `target_pattern` into concept
    /// IRIs of `dst_scheme`.
    SharedKey { key_column: String, target_pattern: UriPattern },
    MentionScan { note_kind: NoteKind, emit: RelationKind },
    Manual { path: std::path::PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkRule {
    pub name: String,
    pub strategy: Strategy,
    pub src_scheme: SchemeId,
    pub dst_scheme: SchemeId,
}

impl LinkRule {
    pub fn check(&self) -> Result<(), LinkError> {
        let manual = matches!(self.strategy, Strategy::Manual { .. });
        if !manual && self.src_scheme == self.dst_scheme {
            return Err(LinkError::InvalidRule(format!("{}: source and target scheme are the same", self.name)));
        }
        match &self.strategy {
            Strategy::Similarity(c) => c.check().map_err(|e| LinkError::InvalidRule(format!("{}: {e}", self.name))),
            Strategy::MentionScan { emit, .. } if !matches!(emit, RelationKind::Related | RelationKind::ExactMatch) => {
                Err(LinkError::InvalidRule(format!("{}: mention scan emits related or exactMatch, not {emit}", self.name)))
            }
            _ => Ok(()),
        }
    }
}

pub(crate) fn require_scheme(snap: &Snapshot, id: SchemeId, local: bool) -> Result<(), LinkError> {
    match snap.scheme(id) {
        None => Err(LinkError::UnknownScheme(id)),
        Some(s) if local && s.kind != SchemeKind::Local => Err(LinkError::NotLocal(id)),
        Some(_) => Ok(()),
    }
}

struct KeyRow<'a>(&'a str);

impl Row for KeyRow<'_> {
    fn value(&self, _: &ColumnRef) -> Option<&str> {
        Some(self.0)
    }
}

/// Links each source concept to the IRI built from its foreign key. `keys`
/// pairs a source local id with its key value; empty values are NULL and
/// produce nothing. Every placeholder of the pattern receives the key.
pub fn link_shared_key(
    snap: &Snapshot,
    src_scheme: SchemeId,
    dst_scheme: SchemeId,
    target_pattern: &UriPattern,
    keys: &[(String, String)],
) -> Result<Vec<LinkCandidate>, LinkError> {
    require_scheme(snap, src_scheme, true)?;
    require_scheme(snap, dst_scheme, false)?;
    let mut out = Vec::new();
    for (local, key) in keys {
        if key.is_empty() {
            continue;
        }
        let src = ConceptKey::new(src_scheme, local.as_str());
        if !snap.contains(&src) {
            return Err(LinkError::UnknownConcept(src));
        }
        let iri = expand_uri_pattern(target_pattern, &KeyRow(key), "")
            .map_err(|e| LinkError::InvalidPattern(format!("{target_pattern}: {e}")))?;
        let dst = snap
            .resolve_iri(iri.as_str())
            .filter(|k| k.scheme_id == dst_scheme)
            .ok_or_else(|| LinkError::InvalidPattern(format!("{iri} is not a concept IRI of scheme {dst_scheme}")))?;
        out.push(LinkCandidate::certain(src, RelationKind::ExactMatch, dst));
    }
    Ok(out)
}

/// Runs one rule. `keys` feeds the shared-key strategy and is ignored by
/// the others.
pub fn run_rule(snap: &Snapshot, rule: &LinkRule, keys: &[(String, String)]) -> Result<Vec<LinkCandidate>, LinkError> {
    rule.check()?;
    match &rule.strategy {
        Strategy::Similarity(cfg) => link_similarity(snap, rule.src_scheme, rule.dst_scheme, cfg),
        Strategy::SharedKey { target_pattern, .. } => {
            link_shared_key(snap, rule.src_scheme, rule.dst_scheme, target_pattern, keys)
        }
        Strategy::MentionScan { note_kind, emit } => {
            link_mention_scan(snap, rule.src_scheme, rule.dst_scheme, *note_kind, *emit)
        }
        Strategy::Manual { path } => load_manual_links(snap, path),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ApplyReport {
    pub applied: usize,
    pub rows: usize,
}

impl fmt::Display for ApplyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "applied:{} rows:{}", self.applied, self.rows)
    }
}

/// Inserts accepted candidates as linked rows. With `bidirectional`, a
/// candidate between two stored concepts also gets its inverse row. All
/// candidates are checked before anything is written.
pub fn apply_links(store: &mut Store, candidates: &[LinkCandidate], bidirectional: bool) -> Result<ApplyReport, LinkError> {
    let snap = store.snapshot();
    for c in candidates {
        if !c.accepted {
            return Err(LinkError::NotAccepted(c.src.clone(), c.dst.clone()));
        }
        if !snap.contains(&c.src) {
            return Err(LinkError::UnknownConcept(c.src.clone()));
        }
        if snap.scheme(c.dst.scheme_id).is_none() {
            return Err(LinkError::UnknownScheme(c.dst.scheme_id));
        }
    }
    let mut report = ApplyReport::default();
    for c in candidates {
        let rec = RelationRecord { src: c.src.clone(), dst: c.dst.clone(), rel: c.emit, provenance: Provenance::Linked };
        let mut rows = usize::from(store.add_relation(rec)?);
        if bidirectional && snap.contains(&c.dst) {
            let inv = RelationRecord {
                src: c.dst.clone(),
                dst: c.src.clone(),
                rel: c.emit.inverse(),
                provenance: Provenance::Linked,
            };
            rows += usize::from(store.add_relation(inv)?);
        }
        report.applied += 1;
        report.rows += rows;
    }
    Ok(report)
}

/// Candidate dump with columns src_iri, dst_iri, score, emit, accepted.
pub fn candidates_csv(snap: &Snapshot, candidates: &[LinkCandidate]) -> Result<String, LinkError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["src_iri", "dst_iri", "score", "emit", "accepted"]).map_err(csv_err)?;
    for c in candidates {
        w.write_record([
            snap.concept_uri(&c.src)?,
            snap.concept_uri(&c.dst)?,
            format!("{:.6}", c.score),
            c.emit.local_name().to_string(),
            c.accepted.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| LinkError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_err(e: csv::Error) -> LinkError {
    LinkError::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::SchemeRecord;

    fn store() -> Store {
        let mut s = Store::new();
        s.upsert_scheme(SchemeRecord::local("EARTh", "http://x.org/resource/EARTh/", "E")).unwrap();
        s.upsert_scheme(SchemeRecord::remote("GEMET", "http://www.eionet.europa.eu/gemet/concept?cp=", "G")).unwrap();
        s.upsert_scheme(SchemeRecord::local("SP", "http://x.org/resource/SP/", "S")).unwrap();
        s.add_concept(1, "42").unwrap();
        s.add_concept(1, "43").unwrap();
        s.add_concept(3, "fagus").unwrap();
        s
    }

    fn gemet_pattern() -> UriPattern {
        UriPattern::parse("http://www.eionet.europa.eu/gemet/concept?cp=@@EARTh.LinkToGEMET@@").unwrap()
    }

    #[test]
    fn shared_key_builds_gemet_links() {
        let s = store();
        let keys = vec![("42".to_string(), "1347".to_string()), ("43".to_string(), String::new())];
        let c = link_shared_key(&s.snapshot(), 1, 2, &gemet_pattern(), &keys).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].dst, ConceptKey::new(2, "1347"));
        assert_eq!(c[0].emit, RelationKind::ExactMatch);
        assert!(c[0].accepted && c[0].score == 1.0);
        assert_eq!(
            s.snapshot().concept_uri(&c[0].dst).unwrap(),
            "http://www.eionet.europa.eu/gemet/concept?cp=1347"
        );
    }

    #[test]
    fn shared_key_outside_target_scheme_is_rejected() {
        let s = store();
        let p = UriPattern::parse("http://elsewhere.org/@@T.k@@").unwrap();
        let keys = vec![("42".to_string(), "1".to_string())];
        assert!(matches!(link_shared_key(&s.snapshot(), 1, 2, &p, &keys), Err(LinkError::InvalidPattern(_))));
    }

    #[test]
    fn bidirectional_related_gives_two_rows() {
        let mut s = store();
        let c = LinkCandidate::certain(ConceptKey::new(1, "42"), RelationKind::Related, ConceptKey::new(3, "fagus"));
        let r = apply_links(&mut s, &[c], true).unwrap();
        assert_eq!(r, ApplyReport { applied: 1, rows: 2 });
        assert_eq!(s.snapshot().count_by_provenance(Provenance::Linked), 2);
    }

    #[test]
    fn remote_target_gives_one_row() {
        let mut s = store();
        let c = LinkCandidate::certain(ConceptKey::new(1, "42"), RelationKind::ExactMatch, ConceptKey::new(2, "1347"));
        assert_eq!(apply_links(&mut s, &[c], true).unwrap().rows, 1);
    }

    #[test]
    fn rejected_candidate_is_an_error_and_writes_nothing() {
        let mut s = store();
        let ok = LinkCandidate::certain(ConceptKey::new(1, "42"), RelationKind::Related, ConceptKey::new(3, "fagus"));
        let mut bad = ok.clone();
        bad.accepted = false;
        assert!(matches!(apply_links(&mut s, &[ok, bad], true), Err(LinkError::NotAccepted(..))));
        assert_eq!(s.relation_count(), 0);
    }

    #[test]
    fn rule_checks() {
        let rule = LinkRule {
            name: "r".into(),
            strategy: Strategy::MentionScan { note_kind: NoteKind::Definition, emit: RelationKind::Broader },
            src_scheme: 1,
            dst_scheme: 3,
        };
        assert!(rule.check().is_err());
        let same = LinkRule { strategy: Strategy::Similarity(SimilarityConfig::default()), dst_scheme: 1, ..rule };
        assert!(same.check().is_err());
    }

    #[test]
    fn candidate_dump() {
        let s = store();
        let c = LinkCandidate::certain(ConceptKey::new(1, "42"), RelationKind::ExactMatch, ConceptKey::new(2, "1347"));
        let text = candidates_csv(&s.snapshot(), &[c]).unwrap();
        assert_eq!(
            text,
            "src_iri,dst_iri,score,emit,accepted\n\
             http://x.org/resource/EARTh/42,http://www.eionet.europa.eu/gemet/concept?cp=1347,1.000000,exactMatch,true\n"
        );
    }
}
