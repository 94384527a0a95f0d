use std::path::Path;

use crate::model::RelationKind;
use crate::store::{ConceptKey, Snapshot};

use super::{LinkCandidate, LinkError};

/// Relation keywords accepted in curated link files.
pub const MANUAL_KEYWORDS: &[RelationKind] = &[
    RelationKind::ExactMatch,
    RelationKind::CloseMatch,
    RelationKind::Related,
    RelationKind::BroadMatch,
    RelationKind::NarrowMatch,
];

fn concept_ref(snap: &Snapshot, field: &str, line: usize) -> Result<ConceptKey, LinkError> {
    let parse_err = |message: String| LinkError::Parse { line, message };
    let (prefix, local) =
        field.split_once(':').ok_or_else(|| parse_err(format!("expected PREFIX:local_id, got {field:?}")))?;
    if local.is_empty() {
        return Err(parse_err(format!("empty local id in {field:?}")));
    }
    let scheme = snap.scheme_by_prefix(prefix).ok_or_else(|| parse_err(format!("unknown scheme prefix {prefix:?}")))?;
    Ok(ConceptKey::new(scheme.scheme_id, local))
}

/// Parses lines of `SRC_PREFIX:local_id REL DST_PREFIX:local_id`. Blank
/// lines and `#` comments are skipped.
pub fn parse_manual_links(snap: &Snapshot, text: &str) -> Result<Vec<LinkCandidate>, LinkError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split_once('#').map_or(raw, |(c, _)| c).trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let [src, rel, dst] = fields[..] else {
            return Err(LinkError::Parse { line, message: format!("expected 3 fields, got {}", fields.len()) });
        };
        let rel = RelationKind::from_local_name(rel)
            .filter(|r| MANUAL_KEYWORDS.contains(r))
            .ok_or_else(|| LinkError::Parse { line, message: format!("unknown relation keyword {rel:?}") })?;
        out.push(LinkCandidate::certain(concept_ref(snap, src, line)?, rel, concept_ref(snap, dst, line)?));
    }
    Ok(out)
}

pub fn load_manual_links(snap: &Snapshot, path: &Path) -> Result<Vec<LinkCandidate>, LinkError> {
    parse_manual_links(snap, &std::fs::read_to_string(path)?)
}
