use std::collections::BTreeSet;

use proptest::prelude::*;
use skosframe_core::entailment::{entail, transitive_closure};
use skosframe_core::store::RelationRecord;
use skosframe_core::{ConceptKey, Provenance, RelationKind, SchemeRecord, Store};

fn local_store(n: usize) -> Store {
    let mut s = Store::new();
    s.upsert_scheme(SchemeRecord::local("T", "http://example.org/resource/T/", "T")).unwrap();
    for i in 0..n {
        s.add_concept(1, &format!("n{i}")).unwrap();
    }
    s
}

fn key(i: usize) -> ConceptKey {
    ConceptKey::new(1, format!("n{i}"))
}

fn index_of(k: &ConceptKey) -> usize {
    k.local_id[1..].parse().unwrap()
}

/// Floyd–Warshall reachability over an adjacency matrix.
fn reachability(n: usize, edges: &[(usize, usize)]) -> BTreeSet<(usize, usize)> {
    let mut r = vec![vec![false; n]; n];
    for &(a, b) in edges {
        r[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if r[i][k] {
                let via = r[k].clone();
                for (dst, &x) in r[i].iter_mut().zip(&via) {
                    *dst |= x;
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    for (i, row) in r.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            if x {
                out.insert((i, j));
            }
        }
    }
    out
}

fn pairs(s: &Store, rel: RelationKind) -> BTreeSet<(usize, usize)> {
    s.snapshot()
        .all_relations()
        .into_iter()
        .filter(|r| r.rel == rel)
        .map(|r| (index_of(&r.src), index_of(&r.dst)))
        .collect()
}

/// Random DAG: edges only from lower to higher index, each with probability 0.1.
fn arb_dag() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (1..=50usize).prop_flat_map(|n| {
        let slots = n * (n - 1) / 2;
        prop::collection::vec(prop::bool::weighted(0.1), slots).prop_map(move |bits| {
            let mut edges = Vec::new();
            let mut it = bits.into_iter();
            for a in 0..n {
                for b in a + 1..n {
                    if it.next().unwrap() {
                        edges.push((a, b));
                    }
                }
            }
            (n, edges)
        })
    })
}

fn build(n: usize, edges: &[(usize, usize)]) -> Store {
    let mut s = local_store(n);
    for &(a, b) in edges {
        s.add_relation(RelationRecord::asserted(key(a), RelationKind::Broader, key(b))).unwrap();
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn closure_matches_reachability_on_random_dags((n, edges) in arb_dag()) {
        let mut s = build(n, &edges);
        entail(&mut s);
        let want = reachability(n, &edges);
        prop_assert_eq!(pairs(&s, RelationKind::BroaderTransitive), want.clone());
        let inverse: BTreeSet<_> = want.into_iter().map(|(a, b)| (b, a)).collect();
        prop_assert_eq!(pairs(&s, RelationKind::NarrowerTransitive), inverse);
        prop_assert_eq!(entail(&mut s).total(), 0);
    }

    #[test]
    fn closure_matches_reachability_with_cycles(n in 1..15usize, raw in prop::collection::vec((0..15usize, 0..15usize), 0..40)) {
        let edges: Vec<_> = raw.into_iter().filter(|&(a, b)| a < n && b < n).collect();
        let mut s = build(n, &edges);
        transitive_closure(&mut s);
        prop_assert_eq!(pairs(&s, RelationKind::BroaderTransitive), reachability(n, &edges));
    }

    #[test]
    fn semantic_relation_covers_broader((n, edges) in arb_dag()) {
        let mut s = build(n, &edges);
        entail(&mut s);
        let sem = pairs(&s, RelationKind::SemanticRelation);
        prop_assert!(pairs(&s, RelationKind::Broader).is_subset(&sem));
    }
}

#[test]
fn adding_a_scheme_keeps_existing_rows() {
    let mut s = build(4, &[(0, 1), (1, 2), (2, 3)]);
    entail(&mut s);
    let before: BTreeSet<_> = s.snapshot().all_relations().into_iter().collect();

    s.upsert_scheme(SchemeRecord::local("U", "http://example.org/resource/U/", "U")).unwrap();
    s.add_concept(2, "x").unwrap();
    s.add_relation(RelationRecord::asserted(ConceptKey::new(2, "x"), RelationKind::Broader, key(0))).unwrap();
    s.add_relation(RelationRecord::asserted(ConceptKey::new(2, "x"), RelationKind::ExactMatch, key(3))).unwrap();
    let report = entail(&mut s);
    assert!(report.total() > 0);

    let after: BTreeSet<_> = s.snapshot().all_relations().into_iter().collect();
    assert!(before.is_subset(&after));
    let asserted = after.iter().filter(|r| r.provenance == Provenance::Asserted).count();
    assert_eq!(asserted, 5);
}

#[test]
fn entailed_rows_keep_asserted_provenance() {
    let mut s = local_store(2);
    s.add_relation(RelationRecord::asserted(key(0), RelationKind::Broader, key(1))).unwrap();
    s.add_relation(RelationRecord::asserted(key(1), RelationKind::Narrower, key(0))).unwrap();
    entail(&mut s);
    let rels = s.snapshot().relations(&key(1)).unwrap();
    let narrower = rels.iter().find(|r| r.rel == RelationKind::Narrower).unwrap();
    assert_eq!(narrower.provenance, Provenance::Asserted);
}
