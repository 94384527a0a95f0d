use std::collections::HashMap;
use std::fmt;

use crate::model::{
    Iri, Literal, NoteKind, RelationKind, SkosTerm, Term, TermKind, Triple, RDF_TYPE, SKOS_CONCEPT, SKOS_IN_SCHEME,
    SKOS_TOP_CONCEPT_OF,
};
use crate::pct::urify;
use crate::store::{IngestReport, LoadMode, RowError, Store};

use super::{
    ClassMap, ColumnRef, ConcatPart, Condition, MappingError, MappingSpec, PropertyBridge, Segment, Table, TableSet,
    UriPattern, ValueSource,
};

/// Column lookup for pattern expansion.
pub trait Row {
    /// `None` when the row has no such column; `Some("")` is NULL.
    fn value(&self, column: &ColumnRef) -> Option<&str>;
}

/// `("table.column", value)` pairs.
impl Row for [(&str, &str)] {
    fn value(&self, column: &ColumnRef) -> Option<&str> {
        self.iter().find(|(k, _)| ColumnRef::parse(k).as_ref() == Some(column)).map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExpandError {
    NullColumn(ColumnRef),
    MissingColumn(ColumnRef),
    InvalidIri(String),
}

impl fmt::Display for ExpandError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExpandError::NullColumn(c) => write!(f, "column {c} is null"),
            ExpandError::MissingColumn(c) => write!(f, "row has no column {c}"),
            ExpandError::InvalidIri(s) => write!(f, "{s:?} is not a valid IRI"),
        }
    }
}

fn is_absolute(s: &str) -> bool {
    match s.split_once(':') {
        Some((scheme, _)) => {
            let mut cs = scheme.chars();
            cs.next().is_some_and(|c| c.is_ascii_alphabetic())
                && cs.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
        }
        None => false,
    }
}

fn finish_iri(expanded: String, base: &str) -> Result<Iri, ExpandError> {
    let full = if is_absolute(&expanded) { expanded } else { format!("{base}{expanded}") };
    Iri::parse(&full).map_err(|_| ExpandError::InvalidIri(full))
}

/// Substitutes placeholders; relative results are resolved against `base` by
/// concatenation, absolute ones are kept as they are.
pub fn expand_uri_pattern<R: Row + ?Sized>(p: &UriPattern, row: &R, base: &str) -> Result<Iri, ExpandError> {
    let mut out = String::new();
    for seg in &p.segments {
        match seg {
            Segment::Literal(l) => out.push_str(l),
            Segment::Column { column, urify: enc } => {
                let v = row.value(column).ok_or_else(|| ExpandError::MissingColumn(column.clone()))?;
                if v.is_empty() {
                    return Err(ExpandError::NullColumn(column.clone()));
                }
                if *enc {
                    out.push_str(&urify(v));
                } else {
                    out.push_str(v);
                }
            }
        }
    }
    finish_iri(out, base)
}

/// Output of a mapping run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Evaluation {
    /// Sorted and duplicate-free.
    pub triples: Vec<Triple>,
    /// Candidate triples dropped because a referenced column was NULL.
    pub skipped_null: usize,
    /// Candidate triples dropped because the expansion was not a valid IRI.
    pub invalid_iris: Vec<String>,
}

/// (table slot in the current join, column index)
type Slot = (usize, usize);

enum Step {
    /// Extend each partial row with matching rows of a new table.
    Probe { from: Slot, table: usize, column: usize },
    /// Both tables already joined: keep rows where the two columns agree.
    Filter { a: Slot, b: Slot },
}

struct BridgePlan<'a> {
    bridge: &'a PropertyBridge,
    /// Table index of each join slot; slot 0 is the class map's base table.
    slots: Vec<usize>,
    steps: Vec<Step>,
    conditions: Vec<(Slot, &'a [String])>,
    value: Vec<PlanPart<'a>>,
}

enum PlanPart<'a> {
    Literal(&'a str),
    Column(Slot, bool),
}

struct Resolver<'a> {
    tables: Vec<&'a Table>,
    by_name: HashMap<String, usize>,
}

impl<'a> Resolver<'a> {
    fn new(set: &'a TableSet) -> Self {
        let tables: Vec<&Table> = set.tables().collect();
        let by_name = tables.iter().enumerate().map(|(i, t)| (t.name.to_ascii_lowercase(), i)).collect();
        Resolver { tables, by_name }
    }

    fn column(&self, c: &ColumnRef) -> Result<(usize, usize), MappingError> {
        let t = *self.by_name.get(&c.table_key()).ok_or_else(|| MappingError::UnknownTable(c.table.clone()))?;
        let col = self.tables[t].column_index(&c.column).ok_or_else(|| MappingError::UnknownColumn(c.to_string()))?;
        Ok((t, col))
    }
}

fn slot_of(slots: &[usize], table: usize) -> Option<usize> {
    slots.iter().position(|&t| t == table)
}

fn plan_conditions<'a>(
    r: &Resolver,
    slots: &[usize],
    conds: &'a [Condition],
    owner: &str,
) -> Result<Vec<(Slot, &'a [String])>, MappingError> {
    conds
        .iter()
        .map(|c| {
            let (t, col) = r.column(&c.column)?;
            let s = slot_of(slots, t)
                .ok_or_else(|| MappingError::Unsupported(format!("{owner}: condition table {} is not joined", c.column.table)))?;
            Ok(((s, col), c.values.as_slice()))
        })
        .collect()
}

fn plan_bridge<'a>(r: &Resolver, base: usize, b: &'a PropertyBridge) -> Result<BridgePlan<'a>, MappingError> {
    let mut slots = vec![base];
    let mut steps = Vec::new();
    let mut pending: Vec<((usize, usize), (usize, usize))> =
        b.joins.iter().map(|j| Ok((r.column(&j.left)?, r.column(&j.right)?))).collect::<Result<_, MappingError>>()?;
    while !pending.is_empty() {
        let pos = pending.iter().position(|(l, rr)| slot_of(&slots, l.0).is_some() || slot_of(&slots, rr.0).is_some());
        let Some(pos) = pos else {
            return Err(MappingError::Unsupported(format!("{}: join tables are not connected to the base table", b.name)));
        };
        let (l, rr) = pending.remove(pos);
        match (slot_of(&slots, l.0), slot_of(&slots, rr.0)) {
            (Some(a), Some(c)) => steps.push(Step::Filter { a: (a, l.1), b: (c, rr.1) }),
            (Some(a), None) => {
                slots.push(rr.0);
                steps.push(Step::Probe { from: (a, l.1), table: rr.0, column: rr.1 });
            }
            (None, Some(c)) => {
                slots.push(l.0);
                steps.push(Step::Probe { from: (c, rr.1), table: l.0, column: l.1 });
            }
            (None, None) => unreachable!(),
        }
    }
    let conditions = plan_conditions(r, &slots, &b.conditions, &b.name)?;
    let col = |c: &ColumnRef, enc: bool| -> Result<PlanPart<'a>, MappingError> {
        let (t, ci) = r.column(c)?;
        let s = slot_of(&slots, t)
            .ok_or_else(|| MappingError::Unsupported(format!("{}: value table {} is not joined", b.name, c.table)))?;
        Ok(PlanPart::Column((s, ci), enc))
    };
    let value = match &b.value {
        ValueSource::Column(c) => vec![col(c, false)?],
        ValueSource::Pattern(p) => p
            .segments
            .iter()
            .map(|s| match s {
                Segment::Literal(l) => Ok(PlanPart::Literal(l)),
                Segment::Column { column, urify } => col(column, *urify),
            })
            .collect::<Result<_, _>>()?,
        ValueSource::Concat(parts) => parts
            .iter()
            .map(|p| match p {
                ConcatPart::Literal(l) => Ok(PlanPart::Literal(l)),
                ConcatPart::Column(c) => col(c, false),
            })
            .collect::<Result<_, _>>()?,
    };
    Ok(BridgePlan { bridge: b, slots, steps, conditions, value })
}

type Index<'a> = HashMap<&'a str, Vec<usize>>;

struct Indexes<'a> {
    tables: &'a [&'a Table],
    built: HashMap<(usize, usize), Index<'a>>,
}

impl<'a> Indexes<'a> {
    fn get(&mut self, table: usize, column: usize) -> &Index<'a> {
        let tables = self.tables;
        self.built.entry((table, column)).or_insert_with(|| {
            let mut idx: Index<'a> = HashMap::new();
            for (i, row) in tables[table].rows.iter().enumerate() {
                let v = row[column].as_str();
                // NULL never joins.
                if !v.is_empty() {
                    idx.entry(v).or_default().push(i);
                }
            }
            idx
        })
    }
}

fn cell<'a>(tables: &[&'a Table], slots: &[usize], bound: &[usize], (s, c): Slot) -> &'a str {
    tables[slots[s]].rows[bound[s]][c].as_str()
}

fn passes(tables: &[&Table], slots: &[usize], bound: &[usize], conds: &[(Slot, &[String])]) -> bool {
    conds.iter().all(|&(slot, values)| {
        let v = cell(tables, slots, bound, slot);
        !v.is_empty() && values.iter().any(|x| x == v)
    })
}

struct Emitter<'a> {
    base: &'a str,
    out: Evaluation,
}

impl Emitter<'_> {
    fn iri(&mut self, r: Result<Iri, ExpandError>) -> Option<Iri> {
        match r {
            Ok(i) => Some(i),
            Err(ExpandError::InvalidIri(s)) => {
                self.out.invalid_iris.push(s);
                None
            }
            Err(_) => {
                self.out.skipped_null += 1;
                None
            }
        }
    }
}

struct ClassRow<'a, 'b> {
    tables: &'b [&'a Table],
    table: usize,
    row: usize,
    r: &'b Resolver<'a>,
}

impl Row for ClassRow<'_, '_> {
    fn value(&self, column: &ColumnRef) -> Option<&str> {
        let (t, c) = self.r.column(column).ok()?;
        (t == self.table).then(|| self.tables[t].rows[self.row][c].as_str())
    }
}

fn bridge_object(plan: &BridgePlan, tables: &[&Table], bound: &[usize], base: &str) -> Result<Term, ExpandError> {
    if let ValueSource::Column(c) = &plan.bridge.value {
        let PlanPart::Column(slot, _) = plan.value[0] else { unreachable!() };
        let v = cell(tables, &plan.slots, bound, slot);
        if v.is_empty() {
            return Err(ExpandError::NullColumn(c.clone()));
        }
        return Ok(Term::Literal(Literal::new(v, plan.bridge.lang.clone())));
    }
    let mut s = String::new();
    for part in &plan.value {
        match *part {
            PlanPart::Literal(l) => s.push_str(l),
            PlanPart::Column(slot, enc) => {
                let v = cell(tables, &plan.slots, bound, slot);
                if v.is_empty() {
                    let col = plan.bridge.value.columns().into_iter().next().cloned().expect("has a column");
                    return Err(ExpandError::NullColumn(col));
                }
                if enc {
                    s.push_str(&urify(v));
                } else {
                    s.push_str(v);
                }
            }
        }
    }
    finish_iri(s, base).map(Term::Iri)
}

fn run_bridge(
    plan: &BridgePlan,
    tables: &[&Table],
    idx: &mut Indexes,
    base_row: usize,
    subject: &Iri,
    em: &mut Emitter,
) {
    let mut partial: Vec<Vec<usize>> = vec![vec![base_row]];
    for step in &plan.steps {
        match *step {
            Step::Probe { from, table, column } => {
                let mut next = Vec::new();
                for b in &partial {
                    let key = cell(tables, &plan.slots, b, from);
                    if key.is_empty() {
                        continue;
                    }
                    if let Some(rows) = idx.get(table, column).get(key) {
                        for &r in rows {
                            let mut nb = b.clone();
                            nb.push(r);
                            next.push(nb);
                        }
                    }
                }
                partial = next;
            }
            Step::Filter { a, b } => partial.retain(|row| {
                let x = cell(tables, &plan.slots, row, a);
                !x.is_empty() && x == cell(tables, &plan.slots, row, b)
            }),
        }
        if partial.is_empty() {
            return;
        }
    }
    for bound in partial {
        if !passes(tables, &plan.slots, &bound, &plan.conditions) {
            continue;
        }
        let obj = bridge_object(plan, tables, &bound, em.base);
        let obj = match obj {
            Ok(Term::Iri(i)) => Term::Iri(i),
            Ok(lit) => lit,
            Err(e) => {
                em.iri(Err(e));
                continue;
            }
        };
        em.out.triples.push(Triple::new(subject.clone(), plan.bridge.property.clone(), obj));
    }
}

fn run_class_map(
    cm: &ClassMap,
    spec: &MappingSpec,
    r: &Resolver,
    idx: &mut Indexes,
    em: &mut Emitter,
) -> Result<(), MappingError> {
    let mut base = None;
    for c in cm.uri_pattern.columns() {
        base = Some(r.column(c)?.0);
    }
    let base = base.expect("validated: pattern has a column");
    let conds = plan_conditions(r, &[base], &cm.conditions, &cm.name)?;
    let plans: Vec<BridgePlan> = spec.bridges_of(&cm.name).map(|b| plan_bridge(r, base, b)).collect::<Result<_, _>>()?;
    let tables = &r.tables;
    let rdf_type = Iri::parse(RDF_TYPE).expect("constant");
    for row in 0..tables[base].rows.len() {
        if !passes(tables, &[base], &[row], &conds) {
            continue;
        }
        let cr = ClassRow { tables, table: base, row, r };
        let Some(subject) = em.iri(expand_uri_pattern(&cm.uri_pattern, &cr, em.base)) else { continue };
        em.out.triples.push(Triple::new(subject.clone(), rdf_type.clone(), cm.rdf_class.clone()));
        for plan in &plans {
            run_bridge(plan, tables, idx, row, &subject, em);
        }
    }
    Ok(())
}

/// Materializes the triples a mapping produces over `tables`. Every table and
/// column reference is checked before any row is read.
pub fn evaluate(spec: &MappingSpec, tables: &TableSet, base: &str) -> Result<Evaluation, MappingError> {
    let r = Resolver::new(tables);
    for cm in &spec.class_maps {
        for c in cm.uri_pattern.columns().chain(cm.conditions.iter().map(|c| &c.column)) {
            r.column(c)?;
        }
    }
    for b in &spec.bridges {
        let cols = b
            .value
            .columns()
            .into_iter()
            .chain(b.joins.iter().flat_map(|j| [&j.left, &j.right]))
            .chain(b.conditions.iter().map(|c| &c.column));
        for c in cols {
            r.column(c)?;
        }
    }
    let mut idx = Indexes { tables: &r.tables, built: HashMap::new() };
    let mut em = Emitter { base, out: Evaluation::default() };
    for cm in &spec.class_maps {
        run_class_map(cm, spec, &r, &mut idx, &mut em)?;
    }
    em.out.triples.sort();
    em.out.triples.dedup();
    em.out.invalid_iris.sort();
    Ok(em.out)
}

fn store_supported(property: &str) -> bool {
    if property == SKOS_IN_SCHEME || property == SKOS_TOP_CONCEPT_OF {
        return true;
    }
    match SkosTerm::from_iri(property) {
        Some(SkosTerm::Label(k)) => matches!(k, TermKind::PrefLabel | TermKind::AltLabel),
        Some(SkosTerm::Note(k)) => k == NoteKind::Definition,
        Some(SkosTerm::Relation(r)) => matches!(
            r,
            RelationKind::Broader
                | RelationKind::Narrower
                | RelationKind::Related
                | RelationKind::ExactMatch
                | RelationKind::CloseMatch
                | RelationKind::BroadMatch
                | RelationKind::NarrowMatch
                | RelationKind::RelatedMatch
        ),
        None => false,
    }
}

/// Runs the mapping and decomposes its triples into store records. Predicates
/// are checked against the supported SKOS subset before evaluation; row
/// level failures are collected in the report.
pub fn evaluate_to_store(
    spec: &MappingSpec,
    tables: &TableSet,
    base: &str,
    store: &mut Store,
) -> Result<IngestReport, MappingError> {
    for cm in &spec.class_maps {
        if cm.rdf_class.as_str() != SKOS_CONCEPT {
            return Err(MappingError::Unsupported(format!("{}: only skos:Concept class maps can be stored", cm.name)));
        }
    }
    for b in &spec.bridges {
        if !store_supported(b.property.as_str()) {
            return Err(MappingError::Unsupported(format!("{}: property <{}> is outside the stored SKOS subset", b.name, b.property)));
        }
        let is_label = matches!(SkosTerm::from_iri(b.property.as_str()), Some(SkosTerm::Label(_)));
        if is_label && b.lang.is_none() {
            return Err(MappingError::Unsupported(format!("{}: label bridges need d2rq:lang", b.name)));
        }
    }
    let ev = evaluate(spec, tables, base)?;
    let mut report = store.ingest_triples(&ev.triples, LoadMode::Strict);
    report.skipped_null += ev.skipped_null;
    report.errors.extend(ev.invalid_iris.into_iter().map(|s| RowError { row: s, message: "not a valid IRI".into() }));
    Ok(report)
}
