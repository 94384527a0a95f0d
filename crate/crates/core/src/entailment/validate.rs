use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::model::{RelationKind, TermKind};
use crate::store::{ConceptKey, KeyId, SchemeKind, Snapshot, StoreData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IssueKind {
    DuplicatePrefLabel,
    PrefAltClash,
    DanglingTarget,
    BroaderCycle,
    OrphanTopConcept,
}

impl IssueKind {
    pub fn as_str(self) -> &'static str {
        match self {
            IssueKind::DuplicatePrefLabel => "DuplicatePrefLabel",
            IssueKind::PrefAltClash => "PrefAltClash",
            IssueKind::DanglingTarget => "DanglingTarget",
            IssueKind::BroaderCycle => "BroaderCycle",
            IssueKind::OrphanTopConcept => "OrphanTopConcept",
        }
    }
}

impl fmt::Display for IssueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ValidationIssue {
    pub kind: IssueKind,
    pub subjects: Vec<ConceptKey>,
    pub detail: String,
}

/// Scans the snapshot for integrity violations. The result is sorted and
/// therefore deterministic.
pub fn validate(snap: &Snapshot) -> Vec<ValidationIssue> {
    let data = &*snap.data;
    let mut issues = Vec::new();
    label_issues(data, &mut issues);
    dangling_targets(data, &mut issues);
    broader_cycles(data, &mut issues);
    orphan_tops(data, &mut issues);
    issues.sort();
    issues
}

fn stored(data: &StoreData) -> impl Iterator<Item = KeyId> + '_ {
    data.members.values().flat_map(|m| m.values().copied())
}

fn label_issues(data: &StoreData, out: &mut Vec<ValidationIssue>) {
    for id in stored(data) {
        let c = data.concept(id).expect("member is stored");
        let mut prefs: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        let mut alts: BTreeSet<(&str, &str)> = BTreeSet::new();
        for l in &c.labels {
            match l.kind {
                TermKind::PrefLabel => prefs.entry(l.lang.as_str()).or_default().push(&l.text),
                TermKind::AltLabel => {
                    alts.insert((l.lang.as_str(), &l.text));
                }
                _ => {}
            }
        }
        for (lang, texts) in &prefs {
            if texts.len() > 1 {
                out.push(ValidationIssue {
                    kind: IssueKind::DuplicatePrefLabel,
                    subjects: vec![data.key(id)],
                    detail: format!("{} prefLabels in @{lang}", texts.len()),
                });
            }
            let distinct: BTreeSet<&str> = texts.iter().copied().collect();
            for text in distinct {
                if alts.contains(&(lang, text)) {
                    out.push(ValidationIssue {
                        kind: IssueKind::PrefAltClash,
                        subjects: vec![data.key(id)],
                        detail: format!("{text:?}@{lang} is both prefLabel and altLabel"),
                    });
                }
            }
        }
    }
}

fn dangling_targets(data: &StoreData, out: &mut Vec<ValidationIssue>) {
    for id in stored(data) {
        let c = data.concept(id).expect("member is stored");
        let dsts: BTreeSet<KeyId> = c.out.keys().map(|&(_, d)| d).collect();
        for dst in dsts {
            if data.is_stored(dst) {
                continue;
            }
            let kind = data.schemes.get(&data.scheme_of(dst)).map(|s| s.kind);
            if matches!(kind, Some(SchemeKind::Local | SchemeKind::Removed) | None) {
                let rels: Vec<&str> =
                    c.out.keys().filter(|&&(_, d)| d == dst).map(|&(r, _)| r.local_name()).collect();
                out.push(ValidationIssue {
                    kind: IssueKind::DanglingTarget,
                    subjects: vec![data.key(id), data.key(dst)],
                    detail: format!("target missing ({})", rels.join(",")),
                });
            }
        }
    }
}

fn broader_targets(data: &StoreData, id: KeyId) -> impl Iterator<Item = KeyId> + '_ {
    data.concept(id)
        .into_iter()
        .flat_map(|c| c.out.range((RelationKind::Broader, 0)..=(RelationKind::Broader, KeyId::MAX)))
        .map(|(&(_, d), _)| d)
        .filter(|&d| data.is_stored(d))
}

/// Tarjan's strongly connected components, iterative.
fn broader_cycles(data: &StoreData, out: &mut Vec<ValidationIssue>) {
    const UNSEEN: u32 = u32::MAX;
    let n = data.concepts.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<KeyId> = Vec::new();
    let mut next = 0u32;
    let roots: Vec<KeyId> = stored(data).collect();
    for root in roots {
        if index[root as usize] != UNSEEN {
            continue;
        }
        let mut work: Vec<(KeyId, Vec<KeyId>, usize)> = Vec::new();
        let succ = |v: KeyId| broader_targets(data, v).collect::<Vec<_>>();
        index[root as usize] = next;
        low[root as usize] = next;
        next += 1;
        stack.push(root);
        on_stack[root as usize] = true;
        work.push((root, succ(root), 0));
        while let Some((v, succs, pos)) = work.last_mut() {
            let v = *v;
            if *pos < succs.len() {
                let w = succs[*pos];
                *pos += 1;
                if index[w as usize] == UNSEEN {
                    index[w as usize] = next;
                    low[w as usize] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w as usize] = true;
                    work.push((w, succ(w), 0));
                } else if on_stack[w as usize] {
                    low[v as usize] = low[v as usize].min(index[w as usize]);
                }
                continue;
            }
            work.pop();
            if let Some((parent, _, _)) = work.last() {
                low[*parent as usize] = low[*parent as usize].min(low[v as usize]);
            }
            if low[v as usize] == index[v as usize] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("component on stack");
                    on_stack[w as usize] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                let self_loop = comp.len() == 1 && broader_targets(data, v).any(|d| d == v);
                if comp.len() > 1 || self_loop {
                    let mut subjects: Vec<ConceptKey> = comp.iter().map(|&k| data.key(k)).collect();
                    subjects.sort();
                    out.push(ValidationIssue {
                        kind: IssueKind::BroaderCycle,
                        detail: format!("{} concepts in a broader cycle", subjects.len()),
                        subjects,
                    });
                }
            }
        }
    }
}

fn orphan_tops(data: &StoreData, out: &mut Vec<ValidationIssue>) {
    for (&scheme, tops) in &data.top {
        for &id in tops {
            let parents: Vec<KeyId> = broader_targets(data, id).filter(|&d| data.scheme_of(d) == scheme).collect();
            if !parents.is_empty() {
                out.push(ValidationIssue {
                    kind: IssueKind::OrphanTopConcept,
                    subjects: vec![data.key(id)],
                    detail: format!("top concept has {} broader concept(s) in its own scheme", parents.len()),
                });
            }
        }
    }
}

fn key_iri(data: &StoreData, key: &ConceptKey) -> String {
    match data.schemes.get(&key.scheme_id) {
        Some(s) => s.concept_iri(&key.local_id),
        None => key.to_string(),
    }
}

/// One line per issue: kind, comma-separated concept IRIs and detail,
/// separated by tabs.
pub fn format_issues(snap: &Snapshot, issues: &[ValidationIssue]) -> String {
    let mut s = String::new();
    for i in issues {
        let iris: Vec<String> = i.subjects.iter().map(|k| key_iri(&snap.data, k)).collect();
        s.push_str(i.kind.as_str());
        s.push('\t');
        s.push_str(&iris.join(","));
        s.push('\t');
        s.push_str(&i.detail.replace(['\t', '\n'], " "));
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LanguageTag;
    use crate::store::{LabelRecord, RelationRecord, SchemeRecord, Store};

    fn k(l: &str) -> ConceptKey {
        ConceptKey::new(1, l)
    }

    fn base() -> Store {
        let mut s = Store::new();
        s.upsert_scheme(SchemeRecord::local("E", "http://x.org/E/", "E")).unwrap();
        for c in ["a", "b", "c"] {
            s.add_concept(1, c).unwrap();
        }
        s
    }

    fn broader(s: &mut Store, a: &str, b: &str) {
        s.add_relation(RelationRecord::asserted(k(a), RelationKind::Broader, k(b))).unwrap();
    }

    fn kinds(s: &Store) -> Vec<IssueKind> {
        validate(&s.snapshot()).into_iter().map(|i| i.kind).collect()
    }

    #[test]
    fn clean_store_has_no_issues() {
        let mut s = base();
        broader(&mut s, "a", "b");
        s.add_top_concept(&k("b")).unwrap();
        assert!(validate(&s.snapshot()).is_empty());
    }

    #[test]
    fn duplicate_pref_label_reported_once() {
        let mut s = base();
        let en = LanguageTag::parse("en").unwrap();
        for t in ["x", "y"] {
            s.add_label_unchecked(LabelRecord { concept: k("a"), kind: TermKind::PrefLabel, lang: en.clone(), text: t.into() })
                .unwrap();
        }
        let issues = validate(&s.snapshot());
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].kind, IssueKind::DuplicatePrefLabel);
        assert_eq!(issues[0].subjects, vec![k("a")]);
    }

    #[test]
    fn pref_alt_clash() {
        let mut s = base();
        let en = LanguageTag::parse("en").unwrap();
        for kind in [TermKind::PrefLabel, TermKind::AltLabel] {
            s.add_label_unchecked(LabelRecord { concept: k("a"), kind, lang: en.clone(), text: "x".into() }).unwrap();
        }
        assert_eq!(kinds(&s), vec![IssueKind::PrefAltClash]);
    }

    #[test]
    fn two_cycle_is_one_component() {
        let mut s = base();
        broader(&mut s, "a", "b");
        broader(&mut s, "b", "a");
        broader(&mut s, "c", "c");
        let issues = validate(&s.snapshot());
        assert_eq!(issues.len(), 2);
        assert_eq!(issues[0].subjects, vec![k("a"), k("b")]);
        assert_eq!(issues[1].subjects, vec![k("c")]);
    }

    #[test]
    fn dangling_into_removed_scheme() {
        let mut s = base();
        s.upsert_scheme(SchemeRecord::local("F", "http://x.org/F/", "F")).unwrap();
        s.add_concept(2, "z").unwrap();
        s.add_relation(RelationRecord::asserted(k("a"), RelationKind::Related, ConceptKey::new(2, "z"))).unwrap();
        assert!(validate(&s.snapshot()).is_empty());
        s.remove_scheme(2).unwrap();
        let snap = s.snapshot();
        let issues = validate(&snap);
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].kind, IssueKind::DanglingTarget);
        assert_eq!(format_issues(&snap, &issues), "DanglingTarget\thttp://x.org/E/a,http://x.org/F/z\ttarget missing (related)\n");
    }

    #[test]
    fn orphan_top_concept() {
        let mut s = base();
        broader(&mut s, "a", "b");
        s.add_top_concept(&k("a")).unwrap();
        assert_eq!(kinds(&s), vec![IssueKind::OrphanTopConcept]);
    }
}
