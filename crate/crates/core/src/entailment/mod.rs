//! Materialization of SKOS inverse, subproperty and transitivity entailments,
//! plus integrity validation.

mod validate;

use std::collections::BTreeMap;
use std::fmt;

use crate::model::RelationKind;
use crate::store::{insert_edge, KeyId, Provenance, Store, StoreData};

pub use validate::{format_issues, validate, IssueKind, ValidationIssue};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntailmentReport {
    pub added: BTreeMap<RelationKind, usize>,
    pub iterations: usize,
}

impl EntailmentReport {
    pub fn total(&self) -> usize {
        self.added.values().sum()
    }

    pub fn merge(&mut self, other: &EntailmentReport) {
        for (k, n) in &other.added {
            *self.added.entry(*k).or_default() += n;
        }
        self.iterations += other.iterations;
    }

    fn count(&mut self, rel: RelationKind) {
        *self.added.entry(rel).or_default() += 1;
    }
}

impl fmt::Display for EntailmentReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "added:{} iterations:{}", self.total(), self.iterations)?;
        for (k, n) in &self.added {
            write!(f, " {k}:{n}")?;
        }
        Ok(())
    }
}

/// Direct super-properties in the SKOS hierarchy.
fn parents(rel: RelationKind) -> &'static [RelationKind] {
    use RelationKind::*;
    match rel {
        BroadMatch => &[Broader, SemanticRelation],
        Broader => &[BroaderTransitive, SemanticRelation],
        NarrowMatch => &[Narrower, SemanticRelation],
        Narrower => &[NarrowerTransitive, SemanticRelation],
        RelatedMatch => &[Related, SemanticRelation],
        SemanticRelation => &[],
        _ => &[SemanticRelation],
    }
}

/// Every strict super-property of `rel`.
pub fn super_properties(rel: RelationKind) -> Vec<RelationKind> {
    let mut out: Vec<RelationKind> = Vec::new();
    let mut stack = parents(rel).to_vec();
    while let Some(p) = stack.pop() {
        if !out.contains(&p) {
            out.push(p);
            stack.extend_from_slice(parents(p));
        }
    }
    out.sort();
    out
}

fn all_edges(data: &StoreData) -> Vec<(KeyId, RelationKind, KeyId)> {
    let mut out = Vec::new();
    for (src, c) in data.concepts.iter().enumerate() {
        if let Some(c) = c {
            out.extend(c.out.keys().map(|&(rel, dst)| (src as KeyId, rel, dst)));
        }
    }
    out
}

fn add(data: &mut StoreData, report: &mut EntailmentReport, src: KeyId, rel: RelationKind, dst: KeyId) {
    if insert_edge(data, src, rel, dst, Provenance::Entailed) {
        report.count(rel);
    }
}

/// For every row between two locally stored concepts, adds the inverse row
/// at the target. Rows into remote or missing concepts get none.
pub fn materialize_inverses(store: &mut Store) -> EntailmentReport {
    let mut report = EntailmentReport { iterations: 1, ..Default::default() };
    let data = store.data_mut();
    for (src, rel, dst) in all_edges(data) {
        if data.is_stored(dst) {
            add(data, &mut report, dst, rel.inverse(), src);
        }
    }
    report
}

/// Adds every super-property row of every row (broadMatch implies broader,
/// broader implies broaderTransitive, everything implies semanticRelation).
pub fn subproperty_closure(store: &mut Store) -> EntailmentReport {
    let mut report = EntailmentReport { iterations: 1, ..Default::default() };
    let supers: BTreeMap<RelationKind, Vec<RelationKind>> =
        RelationKind::ALL.iter().map(|&k| (k, super_properties(k))).collect();
    let data = store.data_mut();
    for (src, rel, dst) in all_edges(data) {
        for &sup in &supers[&rel] {
            add(data, &mut report, src, sup, dst);
        }
    }
    report
}

fn close(data: &mut StoreData, rel: RelationKind, report: &mut EntailmentReport) {
    let n = data.concepts.len();
    let mut seen = vec![u32::MAX; n];
    let mut stack = Vec::new();
    let mut reached = Vec::new();
    for src in 0..n {
        let Some(c) = &data.concepts[src] else { continue };
        reached.clear();
        stack.clear();
        stack.extend(c.out.range((rel, 0)..=(rel, KeyId::MAX)).map(|(&(_, d), _)| d));
        while let Some(node) = stack.pop() {
            if seen[node as usize] == src as u32 {
                continue;
            }
            seen[node as usize] = src as u32;
            reached.push(node);
            if let Some(nc) = &data.concepts[node as usize] {
                stack.extend(nc.out.range((rel, 0)..=(rel, KeyId::MAX)).map(|(&(_, d), _)| d));
            }
        }
        for &dst in &reached {
            add(data, report, src as KeyId, rel, dst);
        }
    }
}

/// Closes broaderTransitive and narrowerTransitive under transitivity,
/// following paths through locally stored concepts. Cycles produce
/// reflexive rows.
pub fn transitive_closure(store: &mut Store) -> EntailmentReport {
    let mut report = subproperty_closure(store);
    let data = store.data_mut();
    close(data, RelationKind::BroaderTransitive, &mut report);
    close(data, RelationKind::NarrowerTransitive, &mut report);
    report
}

/// Runs inverses, subproperties and transitivity until nothing new is added.
pub fn entail(store: &mut Store) -> EntailmentReport {
    let mut report = EntailmentReport::default();
    loop {
        let mut round = materialize_inverses(store);
        round.merge(&transitive_closure(store));
        let added = round.total();
        for (k, n) in round.added {
            *report.added.entry(k).or_default() += n;
        }
        report.iterations += 1;
        if added == 0 {
            return report;
        }
    }
}
