use std::sync::{Arc, OnceLock};

use crate::model::{
    rdf_type, skos_iri, vocab, Iri, Literal, NoteKind, RelationKind, TermKind, Triple, DCTERMS_CREATOR,
    DCTERMS_DESCRIPTION, DCTERMS_PUBLISHER, DCTERMS_TITLE, SKOS_CONCEPT, SKOS_CONCEPT_SCHEME, SKOS_HAS_TOP_CONCEPT,
    SKOS_IN_SCHEME,
};
use crate::query::GraphIndex;

use super::{
    ConceptKey, KeyId, LabelRecord, NoteRecord, Provenance, RelationRecord, Scheme, SchemeId, SchemeKind, StoreData,
    StoreError,
};

/// Immutable view of the store at the moment it was taken.
#[derive(Clone)]
pub struct Snapshot {
    pub(crate) data: Arc<StoreData>,
    index: Arc<OnceLock<GraphIndex>>,
}

impl std::fmt::Debug for Snapshot {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Snapshot")
            .field("schemes", &self.data.schemes.len())
            .field("concepts", &self.data.concept_count())
            .finish()
    }
}

fn iri_unchecked(s: String) -> Iri {
    Iri::parse(&s).expect("store-generated IRIs are valid")
}

impl Snapshot {
    pub(crate) fn new(data: Arc<StoreData>) -> Self {
        Snapshot { data, index: Arc::new(OnceLock::new()) }
    }

    pub fn schemes(&self) -> impl Iterator<Item = &Scheme> {
        self.data.schemes.values()
    }

    pub fn scheme(&self, id: SchemeId) -> Option<&Scheme> {
        self.data.schemes.get(&id)
    }

    pub fn scheme_by_prefix(&self, prefix: &str) -> Option<&Scheme> {
        self.data.schemes.values().find(|s| s.prefix == prefix)
    }

    pub fn scheme_by_iri(&self, iri: &str) -> Option<&Scheme> {
        self.data.scheme_by_iri(iri)
    }

    pub fn concept_count(&self) -> usize {
        self.data.concept_count()
    }

    pub fn scheme_concept_count(&self, id: SchemeId) -> usize {
        self.data.members.get(&id).map_or(0, |m| m.len())
    }

    pub fn contains(&self, key: &ConceptKey) -> bool {
        self.data.concept_id(key).is_some()
    }

    pub fn resolve_iri(&self, iri: &str) -> Option<ConceptKey> {
        self.data.resolve_iri(iri)
    }

    pub fn concept_uri(&self, key: &ConceptKey) -> Result<String, StoreError> {
        self.data
            .schemes
            .get(&key.scheme_id)
            .map(|s| s.concept_iri(&key.local_id))
            .ok_or(StoreError::UnknownScheme(key.scheme_id))
    }

    /// Local ids of a scheme's concepts in lexicographic order.
    pub fn concepts_in(&self, id: SchemeId) -> impl Iterator<Item = &str> {
        self.data.members.get(&id).into_iter().flat_map(|m| m.keys().map(|k| &**k))
    }

    pub fn concept_keys(&self) -> impl Iterator<Item = ConceptKey> + '_ {
        self.data.members.values().flat_map(|m| m.values().map(|&id| self.data.key(id)))
    }

    fn require(&self, key: &ConceptKey) -> Result<(KeyId, &super::ConceptData), StoreError> {
        let id = self.data.concept_id(key).ok_or_else(|| StoreError::UnknownConcept(key.clone()))?;
        Ok((id, self.data.concept(id).expect("stored")))
    }

    pub fn labels(&self, key: &ConceptKey) -> Result<Vec<LabelRecord>, StoreError> {
        let (_, c) = self.require(key)?;
        Ok(c.labels
            .iter()
            .map(|l| LabelRecord { concept: key.clone(), kind: l.kind, lang: l.lang.clone(), text: l.text.clone() })
            .collect())
    }

    pub fn notes(&self, key: &ConceptKey) -> Result<Vec<NoteRecord>, StoreError> {
        let (_, c) = self.require(key)?;
        Ok(c.notes
            .iter()
            .map(|n| NoteRecord { concept: key.clone(), kind: n.kind, lang: n.lang.clone(), text: n.text.clone() })
            .collect())
    }

    pub fn relations(&self, key: &ConceptKey) -> Result<Vec<RelationRecord>, StoreError> {
        let (_, c) = self.require(key)?;
        Ok(c.out
            .iter()
            .map(|(&(rel, dst), &provenance)| RelationRecord { src: key.clone(), dst: self.data.key(dst), rel, provenance })
            .collect())
    }

    pub fn all_relations(&self) -> Vec<RelationRecord> {
        let mut out = Vec::new();
        for members in self.data.members.values() {
            for &id in members.values() {
                let src = self.data.key(id);
                for (&(rel, dst), &provenance) in &self.data.concept(id).expect("stored").out {
                    out.push(RelationRecord { src: src.clone(), dst: self.data.key(dst), rel, provenance });
                }
            }
        }
        out
    }

    pub fn relation_count(&self) -> usize {
        self.data.concepts.iter().flatten().map(|c| c.out.len()).sum()
    }

    pub fn count_by_provenance(&self, prov: Provenance) -> usize {
        self.data.concepts.iter().flatten().flat_map(|c| c.out.values()).filter(|&&p| p == prov).count()
    }

    pub fn top_concepts(&self, id: SchemeId) -> Vec<ConceptKey> {
        self.data.top.get(&id).into_iter().flatten().map(|&k| self.data.key(k)).collect()
    }

    /// Triples describing one concept: type, scheme membership, one triple per
    /// label, note and outgoing relation. Provenance is not serialized.
    pub fn triples_of(&self, key: &ConceptKey) -> Result<Vec<Triple>, StoreError> {
        let (id, _) = self.require(key)?;
        let mut out = Vec::new();
        self.push_concept_triples(id, &mut out);
        Ok(out)
    }

    fn push_concept_triples(&self, id: KeyId, out: &mut Vec<Triple>) {
        let data = &self.data;
        let c = data.concept(id).expect("stored");
        let scheme = &data.schemes[&data.scheme_of(id)];
        let subject = iri_unchecked(scheme.concept_iri(data.local_of(id)));
        out.push(Triple::new(subject.clone(), rdf_type(), vocab(SKOS_CONCEPT)));
        out.push(Triple::new(subject.clone(), vocab(SKOS_IN_SCHEME), iri_unchecked(scheme.iri())));
        for l in &c.labels {
            out.push(Triple::new(subject.clone(), skos_iri(l.kind), Literal::tagged(l.text.clone(), &l.lang)));
        }
        for n in &c.notes {
            out.push(Triple::new(subject.clone(), skos_iri(n.kind), Literal::new(n.text.clone(), n.lang.clone())));
        }
        let mut last_dst: Option<(KeyId, Iri)> = None;
        for &(rel, dst) in c.out.keys() {
            let obj = match &last_dst {
                Some((d, iri)) if *d == dst => iri.clone(),
                _ => {
                    let iri = iri_unchecked(data.iri_of(dst));
                    last_dst = Some((dst, iri.clone()));
                    iri
                }
            };
            out.push(Triple::new(subject.clone(), skos_iri(rel), obj));
        }
    }

    /// Scheme-level description: type, title, description, publisher,
    /// creators and `skos:hasTopConcept`. Empty for non-local schemes.
    pub fn scheme_triples(&self, id: SchemeId) -> Vec<Triple> {
        let mut out = Vec::new();
        let Some(scheme) = self.data.schemes.get(&id) else { return out };
        if scheme.kind != SchemeKind::Local {
            return out;
        }
        let s = iri_unchecked(scheme.iri());
        out.push(Triple::new(s.clone(), rdf_type(), vocab(SKOS_CONCEPT_SCHEME)));
        for (pred, value) in [
            (DCTERMS_TITLE, &scheme.title),
            (DCTERMS_DESCRIPTION, &scheme.description),
            (DCTERMS_PUBLISHER, &scheme.publisher),
        ] {
            if !value.is_empty() {
                out.push(Triple::new(s.clone(), vocab(pred), Literal::plain(value.clone())));
            }
        }
        for a in &scheme.authors {
            out.push(Triple::new(s.clone(), vocab(DCTERMS_CREATOR), Literal::plain(a.clone())));
        }
        for &top in self.data.top.get(&id).into_iter().flatten() {
            out.push(Triple::new(s.clone(), vocab(SKOS_HAS_TOP_CONCEPT), iri_unchecked(self.data.iri_of(top))));
        }
        out
    }

    /// Scheme description plus every concept of the scheme.
    pub fn scheme_triples_and_concepts(&self, id: SchemeId) -> Vec<Triple> {
        let mut out = self.scheme_triples(id);
        if self.data.schemes.get(&id).is_some_and(|s| s.kind == SchemeKind::Local) {
            for &cid in self.data.members.get(&id).into_iter().flat_map(|m| m.values()) {
                self.push_concept_triples(cid, &mut out);
            }
        }
        out
    }

    /// The complete served graph.
    pub fn all_triples(&self) -> Vec<Triple> {
        let mut out = Vec::new();
        for &id in self.data.schemes.keys() {
            out.extend(self.scheme_triples_and_concepts(id));
        }
        out
    }

    /// Canonical export: sorted, duplicate-free N-Triples.
    pub fn to_canonical_ntriples(&self) -> String {
        crate::ntriples::to_sorted_ntriples(&self.all_triples())
    }

    /// Lazily built triple index for SPARQL evaluation.
    pub fn graph_index(&self) -> &GraphIndex {
        self.index.get_or_init(|| GraphIndex::build(self.all_triples()))
    }

    pub fn label_text(&self, key: &ConceptKey, kind: TermKind) -> Vec<(String, String)> {
        self.data
            .concept_id(key)
            .and_then(|id| self.data.concept(id))
            .map(|c| c.labels.iter().filter(|l| l.kind == kind).map(|l| (l.lang.to_string(), l.text.clone())).collect())
            .unwrap_or_default()
    }

    pub fn note_text(&self, key: &ConceptKey, kind: NoteKind) -> Vec<(Option<String>, String)> {
        self.data
            .concept_id(key)
            .and_then(|id| self.data.concept(id))
            .map(|c| {
                c.notes.iter().filter(|n| n.kind == kind).map(|n| (n.lang.as_ref().map(|l| l.to_string()), n.text.clone())).collect()
            })
            .unwrap_or_default()
    }

    pub fn targets(&self, key: &ConceptKey, rel: RelationKind) -> Vec<ConceptKey> {
        self.data
            .concept_id(key)
            .and_then(|id| self.data.concept(id))
            .map(|c| c.out.keys().filter(|(r, _)| *r == rel).map(|&(_, d)| self.data.key(d)).collect())
            .unwrap_or_default()
    }
}
