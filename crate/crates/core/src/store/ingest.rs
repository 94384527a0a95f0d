//! Decomposition of SKOS triples into store records.

use std::fmt;

use crate::model::{
    SkosTerm, Term, Triple, DCTERMS_CREATOR, DCTERMS_DESCRIPTION, DCTERMS_PUBLISHER, DCTERMS_TITLE, RDF_TYPE,
    SKOS_CONCEPT, SKOS_CONCEPT_SCHEME, SKOS_HAS_TOP_CONCEPT, SKOS_IN_SCHEME, SKOS_TOP_CONCEPT_OF,
};
use crate::ntriples::format_ntriples;

use super::{ConceptKey, LabelRecord, NoteRecord, Provenance, RelationRecord, SchemeKind, Store};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadMode {
    /// Label constraints are enforced; violating rows are reported.
    Strict,
    /// Label constraints are not enforced (persisted or imported data);
    /// validation reports any violations afterwards.
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    pub row: String,
    pub message: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.row.trim_end(), self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub concepts: usize,
    pub labels: usize,
    pub notes: usize,
    pub relations: usize,
    pub top_concepts: usize,
    /// Rows dropped because a referenced column was null.
    pub skipped_null: usize,
    pub errors: Vec<RowError>,
}

impl IngestReport {
    pub fn merge(&mut self, other: IngestReport) {
        self.concepts += other.concepts;
        self.labels += other.labels;
        self.notes += other.notes;
        self.relations += other.relations;
        self.top_concepts += other.top_concepts;
        self.skipped_null += other.skipped_null;
        self.errors.extend(other.errors);
    }

    pub fn summary(&self) -> String {
        format!(
            "concepts:{} labels:{} notes:{} relations:{} top_concepts:{} skipped:{} errors:{}",
            self.concepts,
            self.labels,
            self.notes,
            self.relations,
            self.top_concepts,
            self.skipped_null,
            self.errors.len()
        )
    }
}

impl Store {
    /// Turns triples back into records. Concept typing triples are applied
    /// first so that input order does not matter for them; every other row
    /// is applied in input order. Per-row failures are collected.
    pub fn ingest_triples(&mut self, triples: &[Triple], mode: LoadMode) -> IngestReport {
        let mut report = IngestReport::default();
        let fail = |t: &Triple, msg: String, report: &mut IngestReport| {
            report.errors.push(RowError { row: format_ntriples(t), message: msg });
        };

        for t in triples {
            if t.predicate.as_str() != RDF_TYPE {
                continue;
            }
            match t.object.as_iri().map(|i| i.as_str()) {
                Some(SKOS_CONCEPT) => match self.resolve_iri(t.subject.as_str()) {
                    Some(key) => match self.add_concept(key.scheme_id, &key.local_id) {
                        Ok(true) => report.concepts += 1,
                        Ok(false) => {}
                        Err(e) => fail(t, e.to_string(), &mut report),
                    },
                    None => fail(t, "subject is not under a registered namespace".into(), &mut report),
                },
                Some(SKOS_CONCEPT_SCHEME) => {
                    if self.data.scheme_by_iri(t.subject.as_str()).is_none() {
                        fail(t, "concept scheme is not registered".into(), &mut report);
                    }
                }
                _ => fail(t, "unsupported rdf:type".into(), &mut report),
            }
        }

        for t in triples {
            let pred = t.predicate.as_str();
            if pred == RDF_TYPE {
                continue;
            }
            if let Err(msg) = self.apply_row(t, pred, mode, &mut report) {
                fail(t, msg, &mut report);
            }
        }
        report
    }

    fn apply_row(&mut self, t: &Triple, pred: &str, mode: LoadMode, report: &mut IngestReport) -> Result<(), String> {
        if let Some(scheme) = self.data.scheme_by_iri(t.subject.as_str()) {
            let id = scheme.scheme_id;
            return self.apply_scheme_row(id, t, pred, report);
        }
        let concept = self
            .resolve_iri(t.subject.as_str())
            .filter(|k| self.contains_concept(k))
            .ok_or_else(|| "subject is not a stored concept".to_string())?;
        match pred {
            SKOS_IN_SCHEME => {
                let expected = self.data.schemes[&concept.scheme_id].iri();
                match t.object.as_iri() {
                    Some(o) if o.as_str() == expected => Ok(()),
                    _ => Err(format!("skos:inScheme must be <{expected}>")),
                }
            }
            SKOS_TOP_CONCEPT_OF => {
                let expected = self.data.schemes[&concept.scheme_id].iri();
                match t.object.as_iri() {
                    Some(o) if o.as_str() == expected => {
                        if self.add_top_concept(&concept).map_err(|e| e.to_string())? {
                            report.top_concepts += 1;
                        }
                        Ok(())
                    }
                    _ => Err(format!("skos:topConceptOf must be <{expected}>")),
                }
            }
            _ => match SkosTerm::from_iri(pred) {
                Some(SkosTerm::Label(kind)) => {
                    let lit = t.object.as_literal().ok_or("label object must be a literal")?;
                    let lang = lit.lang.clone().ok_or("label literal needs a language tag")?;
                    let rec = LabelRecord { concept, kind, lang, text: lit.lexical.clone() };
                    let added = match mode {
                        LoadMode::Strict => self.add_label(rec),
                        LoadMode::Lenient => self.add_label_unchecked(rec),
                    }
                    .map_err(|e| e.to_string())?;
                    report.labels += usize::from(added);
                    Ok(())
                }
                Some(SkosTerm::Note(kind)) => {
                    let lit = t.object.as_literal().ok_or("note object must be a literal")?;
                    let rec = NoteRecord { concept, kind, lang: lit.lang.clone(), text: lit.lexical.clone() };
                    report.notes += usize::from(self.add_note(rec).map_err(|e| e.to_string())?);
                    Ok(())
                }
                Some(SkosTerm::Relation(rel)) => {
                    let obj = t.object.as_iri().ok_or("relation object must be an IRI")?;
                    let dst = self
                        .resolve_iri(obj.as_str())
                        .ok_or_else(|| format!("<{obj}> is not under a registered namespace"))?;
                    let rec = RelationRecord { src: concept, dst, rel, provenance: Provenance::Asserted };
                    report.relations += usize::from(self.add_relation(rec).map_err(|e| e.to_string())?);
                    Ok(())
                }
                None => Err(format!("unsupported predicate <{pred}>")),
            },
        }
    }

    fn apply_scheme_row(
        &mut self,
        id: super::SchemeId,
        t: &Triple,
        pred: &str,
        report: &mut IngestReport,
    ) -> Result<(), String> {
        if self.data.schemes[&id].kind != SchemeKind::Local {
            return Err("scheme is not local".into());
        }
        if pred == SKOS_HAS_TOP_CONCEPT {
            let obj = t.object.as_iri().ok_or("skos:hasTopConcept object must be an IRI")?;
            let key: ConceptKey = self
                .resolve_iri(obj.as_str())
                .filter(|k| k.scheme_id == id)
                .ok_or("top concept must belong to the scheme")?;
            if self.add_top_concept(&key).map_err(|e| e.to_string())? {
                report.top_concepts += 1;
            }
            return Ok(());
        }
        let text = match &t.object {
            Term::Literal(l) => l.lexical.clone(),
            Term::Iri(_) => return Err("scheme metadata must be a literal".into()),
        };
        let scheme = self.scheme_mut(id).expect("checked");
        match pred {
            DCTERMS_TITLE => scheme.title = text,
            DCTERMS_DESCRIPTION => scheme.description = text,
            DCTERMS_PUBLISHER => scheme.publisher = text,
            DCTERMS_CREATOR => {
                if !scheme.authors.contains(&text) {
                    scheme.authors.push(text);
                }
            }
            _ => return Err(format!("unsupported scheme predicate <{pred}>")),
        }
        Ok(())
    }
}
