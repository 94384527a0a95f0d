use std::collections::BTreeSet;

use aho_corasick::AhoCorasick;

use crate::model::{NoteKind, RelationKind, TermKind};
use crate::store::{ConceptKey, SchemeId, Snapshot};

use super::{require_scheme, LinkCandidate, LinkError};

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn whole_word(text: &str, start: usize, end: usize) -> bool {
    let before = text[..start].chars().next_back().is_none_or(|c| !is_word_char(c));
    let after = text[end..].chars().next().is_none_or(|c| !is_word_char(c));
    before && after
}

/// Links a source concept to every target concept whose prefLabel occurs
/// as a whole word, case-insensitively, in one of the source's notes of
/// `note_kind`. An occurrence lying inside a longer occurrence of another
/// label does not count.
pub fn link_mention_scan(
    snap: &Snapshot,
    src_scheme: SchemeId,
    dst_scheme: SchemeId,
    note_kind: NoteKind,
    emit: RelationKind,
) -> Result<Vec<LinkCandidate>, LinkError> {
    require_scheme(snap, src_scheme, true)?;
    require_scheme(snap, dst_scheme, true)?;
    let mut labels: Vec<String> = Vec::new();
    let mut owners: Vec<Vec<ConceptKey>> = Vec::new();
    {
        let mut by_label: std::collections::BTreeMap<String, Vec<ConceptKey>> = Default::default();
        for local in snap.concepts_in(dst_scheme) {
            let key = ConceptKey::new(dst_scheme, local);
            for (_, text) in snap.label_text(&key, TermKind::PrefLabel) {
                let l = text.to_lowercase();
                if !l.trim().is_empty() {
                    by_label.entry(l).or_default().push(key.clone());
                }
            }
        }
        for (l, ks) in by_label {
            labels.push(l);
            owners.push(ks);
        }
    }
    if labels.is_empty() {
        return Ok(Vec::new());
    }
    let ac = AhoCorasick::new(&labels).map_err(|e| LinkError::InvalidRule(e.to_string()))?;
    let mut out = Vec::new();
    for local in snap.concepts_in(src_scheme) {
        let src = ConceptKey::new(src_scheme, local);
        let mut found: BTreeSet<&ConceptKey> = BTreeSet::new();
        for (_, note) in snap.note_text(&src, note_kind) {
            let text = note.to_lowercase();
            let hits: Vec<(usize, usize, usize)> = ac
                .find_overlapping_iter(&text)
                .filter(|m| whole_word(&text, m.start(), m.end()))
                .map(|m| (m.start(), m.end(), m.pattern().as_usize()))
                .collect();
            for &(s, e, p) in &hits {
                let inside_longer = hits.iter().any(|&(s2, e2, _)| s2 <= s && e <= e2 && e2 - s2 > e - s);
                if !inside_longer {
                    found.extend(owners[p].iter());
                }
            }
        }
        out.extend(found.into_iter().map(|dst| LinkCandidate::certain(src.clone(), emit, dst.clone())));
    }
    Ok(out)
}
