use std::collections::{HashMap, HashSet};

use regex::{Regex, RegexBuilder};

use crate::model::{Term, Triple};
use crate::ntriples::term_to_string;
use crate::store::Snapshot;

use super::{BindingSet, Filter, PatternTerm, SelectQuery, TriplePattern};

type TermId = u32;

/// Interned triple set with one index per position.
#[derive(Debug, Default)]
pub struct GraphIndex {
    terms: Vec<Term>,
    ids: HashMap<Term, TermId>,
    triples: Vec<[TermId; 3]>,
    by_pos: [HashMap<TermId, Vec<usize>>; 3],
}

impl GraphIndex {
    pub fn build(triples: Vec<Triple>) -> Self {
        let mut g = GraphIndex::default();
        let mut seen = HashSet::new();
        for t in triples {
            let row = [g.intern(Term::Iri(t.subject)), g.intern(Term::Iri(t.predicate)), g.intern(t.object)];
            if seen.insert(row) {
                let i = g.triples.len();
                g.triples.push(row);
                for (pos, id) in row.iter().enumerate() {
                    g.by_pos[pos].entry(*id).or_default().push(i);
                }
            }
        }
        g
    }

    fn intern(&mut self, t: Term) -> TermId {
        if let Some(&id) = self.ids.get(&t) {
            return id;
        }
        let id = self.terms.len() as TermId;
        self.terms.push(t.clone());
        self.ids.insert(t, id);
        id
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn evaluate(&self, q: &SelectQuery) -> BindingSet {
        let mut out = BindingSet { vars: q.variables.clone(), rows: Vec::new() };
        if q.limit == Some(0) {
            return out;
        }
        let vars = q.pattern_variables();
        let slot = |v: &str| vars.iter().position(|x| x == v).expect("pattern variable");

        // A ground term absent from the graph cannot match anything.
        let mut compiled = Vec::with_capacity(q.patterns.len());
        for p in &q.patterns {
            let mut pos = [Slot::Var(0); 3];
            for (i, t) in p.positions().into_iter().enumerate() {
                pos[i] = match t {
                    PatternTerm::Var(v) => Slot::Var(slot(v)),
                    PatternTerm::Term(term) => match self.ids.get(term) {
                        Some(&id) => Slot::Fixed(id),
                        None => return out,
                    },
                };
            }
            compiled.push(pos);
        }
        let order = join_order(&q.patterns);

        let filters: Vec<CompiledFilter> = q.filters.iter().map(|f| CompiledFilter::new(f, slot(f.var()))).collect();
        let mut rows: Vec<Vec<TermId>> = Vec::new();
        let mut binding = vec![None; vars.len()];
        self.join(&compiled, &order, 0, &mut binding, &mut |b| {
            let full: Vec<TermId> = b.iter().map(|x| x.expect("all variables bound")).collect();
            if filters.iter().all(|f| f.accepts(&self.terms[full[f.slot] as usize])) {
                rows.push(full);
            }
        });

        let proj: Vec<usize> = q.variables.iter().map(|v| slot(v)).collect();
        let mut projected: Vec<Vec<TermId>> = rows.into_iter().map(|r| proj.iter().map(|&i| r[i]).collect()).collect();
        projected.sort_unstable();
        projected.dedup();

        let rendered: HashMap<TermId, String> = projected
            .iter()
            .flatten()
            .map(|&id| (id, term_to_string(&self.terms[id as usize])))
            .collect();
        projected.sort_by(|a, b| {
            a.iter().map(|id| rendered[id].as_bytes()).cmp(b.iter().map(|id| rendered[id].as_bytes()))
        });

        let skip = q.offset.unwrap_or(0);
        let take = q.limit.unwrap_or(usize::MAX);
        out.rows = projected
            .into_iter()
            .skip(skip)
            .take(take)
            .map(|r| r.into_iter().map(|id| self.terms[id as usize].clone()).collect())
            .collect();
        out
    }

    fn join(
        &self,
        patterns: &[[Slot; 3]],
        order: &[usize],
        depth: usize,
        binding: &mut Vec<Option<TermId>>,
        emit: &mut dyn FnMut(&[Option<TermId>]),
    ) {
        let Some(&pi) = order.get(depth) else {
            emit(binding);
            return;
        };
        let pat = &patterns[pi];
        let resolved: [Option<TermId>; 3] = pat.map(|s| match s {
            Slot::Fixed(id) => Some(id),
            Slot::Var(v) => binding[v],
        });

        // Scan the shortest posting list among bound positions.
        let candidates: Option<&Vec<usize>> = {
            let mut best: Option<&Vec<usize>> = None;
            for (pos, r) in resolved.iter().enumerate() {
                if let Some(id) = r {
                    match self.by_pos[pos].get(id) {
                        None => return,
                        Some(list) if best.is_none_or(|b| list.len() < b.len()) => best = Some(list),
                        Some(_) => {}
                    }
                }
            }
            best
        };
        let mut visit = |ti: usize, binding: &mut Vec<Option<TermId>>| {
            let t = self.triples[ti];
            let mut newly = [usize::MAX; 3];
            let mut ok = true;
            for pos in 0..3 {
                match (pat[pos], resolved[pos]) {
                    (_, Some(id)) if id != t[pos] => {
                        ok = false;
                        break;
                    }
                    (Slot::Var(v), None) => match binding[v] {
                        // Same variable twice in one pattern.
                        Some(id) if id != t[pos] => {
                            ok = false;
                            break;
                        }
                        Some(_) => {}
                        None => {
                            binding[v] = Some(t[pos]);
                            newly[pos] = v;
                        }
                    },
                    _ => {}
                }
            }
            if ok {
                self.join(patterns, order, depth + 1, binding, emit);
            }
            for v in newly {
                if v != usize::MAX {
                    binding[v] = None;
                }
            }
        };
        match candidates {
            Some(list) => {
                for &ti in list {
                    visit(ti, binding);
                }
            }
            None => {
                for ti in 0..self.triples.len() {
                    visit(ti, binding);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Slot {
    Var(usize),
    Fixed(TermId),
}

/// Most ground terms first; afterwards prefer patterns sharing a variable
/// with what is already bound, so later patterns probe an index.
fn join_order(patterns: &[TriplePattern]) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..patterns.len()).collect();
    let mut bound: HashSet<&str> = HashSet::new();
    let mut order = Vec::with_capacity(patterns.len());
    while !remaining.is_empty() {
        let score = |i: usize| {
            let p = &patterns[i];
            let shared = p.positions().iter().filter(|t| t.var().is_some_and(|v| bound.contains(v))).count();
            (p.ground_count() + shared, std::cmp::Reverse(i))
        };
        let (at, &best) = remaining.iter().enumerate().max_by_key(|(_, &i)| score(i)).expect("non-empty");
        remaining.remove(at);
        for t in patterns[best].positions() {
            if let Some(v) = t.var() {
                bound.insert(v);
            }
        }
        order.push(best);
    }
    order
}

struct CompiledFilter {
    slot: usize,
    kind: FilterKind,
}

enum FilterKind {
    Lang(String),
    Equals(Term),
    Regex(Regex),
}

impl CompiledFilter {
    fn new(f: &Filter, slot: usize) -> Self {
        let kind = match f {
            Filter::LangEquals(_, tag) => FilterKind::Lang(tag.to_ascii_lowercase()),
            Filter::TermEquals(_, t) => FilterKind::Equals(t.clone()),
            Filter::Regex { pattern, case_insensitive, .. } => FilterKind::Regex(
                RegexBuilder::new(pattern)
                    .case_insensitive(*case_insensitive)
                    .build()
                    .expect("validated by the parser"),
            ),
        };
        CompiledFilter { slot, kind }
    }

    fn accepts(&self, t: &Term) -> bool {
        match (&self.kind, t) {
            (FilterKind::Lang(tag), Term::Literal(l)) => l.lang.as_ref().map_or("", |x| x.as_str()) == tag,
            (FilterKind::Lang(_), Term::Iri(_)) => false,
            (FilterKind::Equals(want), t) => want == t,
            (FilterKind::Regex(re), Term::Literal(l)) => re.is_match(&l.lexical),
            (FilterKind::Regex(_), Term::Iri(_)) => false,
        }
    }
}

/// Evaluates `q` over the snapshot's full triple set.
pub fn evaluate(q: &SelectQuery, snapshot: &Snapshot) -> BindingSet {
    snapshot.graph_index().evaluate(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Iri, LanguageTag, Literal};
    use crate::query::parse_select;
    use proptest::prelude::*;

    fn iri(s: &str) -> Iri {
        Iri::parse(s).unwrap()
    }

    fn t(s: &str, p: &str, o: impl Into<Term>) -> Triple {
        Triple::new(iri(s), iri(p), o)
    }

    /// Enumerates every assignment of graph terms to variables and keeps those
    /// satisfying all patterns and filters.
    fn naive(q: &SelectQuery, triples: &[Triple]) -> Vec<Vec<Term>> {
        let set: HashSet<(Term, Term, Term)> = triples
            .iter()
            .map(|t| (Term::Iri(t.subject.clone()), Term::Iri(t.predicate.clone()), t.object.clone()))
            .collect();
        let mut universe: Vec<Term> = set.iter().flat_map(|(s, p, o)| [s.clone(), p.clone(), o.clone()]).collect();
        universe.sort();
        universe.dedup();
        let vars = q.pattern_variables();
        let mut out = Vec::new();
        let mut assign = vec![0usize; vars.len()];
        if universe.is_empty() {
            return out;
        }
        loop {
            let get = |pt: &PatternTerm| -> Term {
                match pt {
                    PatternTerm::Term(t) => t.clone(),
                    PatternTerm::Var(v) => universe[assign[vars.iter().position(|x| x == v).unwrap()]].clone(),
                }
            };
            let ok = q.patterns.iter().all(|p| set.contains(&(get(&p.s), get(&p.p), get(&p.o))))
                && q.filters.iter().all(|f| {
                    let val = universe[assign[vars.iter().position(|x| x == f.var()).unwrap()]].clone();
                    match f {
                        Filter::LangEquals(_, tag) => {
                            matches!(&val, Term::Literal(l) if l.lang.as_ref().map_or("", |x| x.as_str()) == tag)
                        }
                        Filter::TermEquals(_, want) => &val == want,
                        Filter::Regex { pattern, case_insensitive, .. } => match &val {
                            Term::Literal(l) => RegexBuilder::new(pattern)
                                .case_insensitive(*case_insensitive)
                                .build()
                                .unwrap()
                                .is_match(&l.lexical),
                            Term::Iri(_) => false,
                        },
                    }
                });
            if ok {
                out.push(
                    q.variables
                        .iter()
                        .map(|v| universe[assign[vars.iter().position(|x| x == v).unwrap()]].clone())
                        .collect(),
                );
            }
            let mut i = 0;
            loop {
                if i == assign.len() {
                    out.sort_by_key(|r: &Vec<Term>| r.iter().map(term_to_string).collect::<Vec<_>>());
                    out.dedup();
                    return out;
                }
                assign[i] += 1;
                if assign[i] < universe.len() {
                    break;
                }
                assign[i] = 0;
                i += 1;
            }
        }
    }

    const B: &str = "http://www.w3.org/2004/02/skos/core#broaderTransitive";

    #[test]
    fn transitive_pairs() {
        let g = GraphIndex::build(vec![
            t("http://x/A", B, iri("http://x/B")),
            t("http://x/B", B, iri("http://x/C")),
            t("http://x/A", B, iri("http://x/C")),
        ]);
        let q = parse_select("SELECT ?x ?y WHERE { ?x skos:broaderTransitive ?y }").unwrap();
        let r = g.evaluate(&q);
        let pairs: Vec<(String, String)> = r
            .rows
            .iter()
            .map(|row| (row[0].as_iri().unwrap().to_string(), row[1].as_iri().unwrap().to_string()))
            .collect();
        assert_eq!(
            pairs,
            vec![
                ("http://x/A".into(), "http://x/B".into()),
                ("http://x/A".into(), "http://x/C".into()),
                ("http://x/B".into(), "http://x/C".into())
            ]
        );
    }

    #[test]
    fn limit_zero_and_unknown_predicate() {
        let g = GraphIndex::build(vec![t("http://x/A", B, iri("http://x/B"))]);
        assert!(g.evaluate(&parse_select("SELECT ?x WHERE { ?x ?p ?y } LIMIT 0").unwrap()).is_empty());
        assert!(g.evaluate(&parse_select("SELECT ?x WHERE { ?x <http://nope/p> ?y }").unwrap()).is_empty());
        assert_eq!(g.evaluate(&parse_select("SELECT ?x WHERE { ?x ?p ?y } OFFSET 1").unwrap()).len(), 0);
    }

    #[test]
    fn repeated_variable_in_pattern() {
        let g = GraphIndex::build(vec![t("http://x/A", B, iri("http://x/A")), t("http://x/A", B, iri("http://x/B"))]);
        let r = g.evaluate(&parse_select("SELECT ?x WHERE { ?x ?p ?x }").unwrap());
        assert_eq!(r.len(), 1);
    }

    #[test]
    fn filters() {
        let en = LanguageTag::parse("en").unwrap();
        let it = LanguageTag::parse("it").unwrap();
        let p = "http://www.w3.org/2004/02/skos/core#prefLabel";
        let g = GraphIndex::build(vec![
            t("http://x/A", p, Literal::tagged("Water", &en)),
            t("http://x/A", p, Literal::tagged("Acqua", &it)),
            t("http://x/B", p, Literal::tagged("Soil", &en)),
        ]);
        let r = g.evaluate(&parse_select("SELECT ?l WHERE { ?c skos:prefLabel ?l FILTER(lang(?l) = \"EN\") }").unwrap());
        assert_eq!(r.len(), 2);
        let r = g.evaluate(&parse_select("SELECT ?c WHERE { ?c skos:prefLabel ?l FILTER(regex(?l, \"^w\", \"i\")) }").unwrap());
        assert_eq!(r.len(), 1);
        let r = g.evaluate(&parse_select("SELECT ?l WHERE { ?c skos:prefLabel ?l FILTER(?c = <http://x/A>) }").unwrap());
        assert_eq!(r.len(), 2);
    }

    fn arb_graph() -> impl Strategy<Value = Vec<Triple>> {
        let node = (0..6u8).prop_map(|i| format!("http://x/n{i}"));
        let pred = (0..3u8).prop_map(|i| format!("http://x/p{i}"));
        let obj = prop_oneof![
            3 => (0..6u8).prop_map(|i| Term::Iri(iri(&format!("http://x/n{i}")))),
            1 => (0..3u8, prop::bool::ANY).prop_map(|(i, tagged)| {
                let lang = if tagged { Some(LanguageTag::parse("en").unwrap()) } else { None };
                Term::Literal(Literal::new(format!("w{i}"), lang))
            }),
        ];
        prop::collection::vec((node, pred, obj).prop_map(|(s, p, o)| t(&s, &p, o)), 0..40)
    }

    fn arb_query() -> impl Strategy<Value = String> {
        let var = (0..3u8).prop_map(|i| format!("?v{i}"));
        let s = prop_oneof![var.clone(), (0..6u8).prop_map(|i| format!("<http://x/n{i}>"))];
        let p = prop_oneof![var.clone(), (0..4u8).prop_map(|i| format!("<http://x/p{i}>"))];
        let o = prop_oneof![var.clone(), (0..6u8).prop_map(|i| format!("<http://x/n{i}>")), Just("\"w1\"@en".into())];
        let pat = (s, p, o).prop_map(|(s, p, o)| format!("{s} {p} {o}"));
        (prop::collection::vec(pat, 1..4), 0..3u8, prop::option::of(0..4usize), prop::option::of(0..3usize)).prop_map(
            |(pats, filter, limit, offset)| {
                let mut body = pats.join(" . ");
                let first_var = body.split_whitespace().find(|w| w.starts_with('?')).map(str::to_string);
                if let Some(v) = &first_var {
                    match filter {
                        1 => body.push_str(&format!(" FILTER(lang({v}) = \"en\")")),
                        2 => body.push_str(&format!(" FILTER(regex({v}, \"1\"))")),
                        _ => {}
                    }
                }
                let mut q = format!("SELECT * WHERE {{ {body} }}");
                if let Some(l) = limit {
                    q.push_str(&format!(" LIMIT {l}"));
                }
                if let Some(o) = offset {
                    q.push_str(&format!(" OFFSET {o}"));
                }
                q
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn matches_naive_evaluator(graph in arb_graph(), text in arb_query()) {
            let q = match parse_select(&text) {
                Ok(q) => q,
                // All-ground patterns have no variable for SELECT *.
                Err(_) => return Ok(()),
            };
            let got = GraphIndex::build(graph.clone()).evaluate(&q);
            let all = naive(&SelectQuery { limit: None, offset: None, ..q.clone() }, &graph);
            let want: Vec<Vec<Term>> = all
                .into_iter()
                .skip(q.offset.unwrap_or(0))
                .take(q.limit.unwrap_or(usize::MAX))
                .collect();
            prop_assert_eq!(got.rows, want);
        }
    }
}
