//! Normalized SKOS repository: concept schemes, concepts, labels, notes,
//! semantic relations and top concepts.
//!
//! The store has a single writer (`&mut Store`). Readers take a [`Snapshot`],
//! which shares the current state behind an `Arc`; the next write after a
//! snapshot copies the state, so snapshots never observe later writes.

mod ingest;
mod persist;
mod snapshot;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::model::{LanguageTag, NoteKind, RelationKind, TermKind};
use crate::pct;

pub use ingest::{IngestReport, LoadMode, RowError};
pub use persist::{load_dir, save_dir, PersistError, REGISTRY_FILE};
pub use snapshot::Snapshot;

pub type SchemeId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConceptKey {
    pub scheme_id: SchemeId,
    pub local_id: String,
}

impl ConceptKey {
    pub fn new(scheme_id: SchemeId, local_id: impl Into<String>) -> Self {
        ConceptKey { scheme_id, local_id: local_id.into() }
    }
}

impl fmt::Display for ConceptKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.scheme_id, self.local_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeKind {
    /// Concepts are stored and served here.
    Local,
    /// Registered for link targets only; no local concepts.
    Remote,
    /// Formerly local; its content was removed. Rows pointing into it are
    /// kept and reported as dangling.
    Removed,
}

impl SchemeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SchemeKind::Local => "local",
            SchemeKind::Remote => "remote",
            SchemeKind::Removed => "removed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "local" => Some(SchemeKind::Local),
            "remote" => Some(SchemeKind::Remote),
            "removed" => Some(SchemeKind::Removed),
            _ => None,
        }
    }
}

/// Input to [`Store::upsert_scheme`]. `scheme_id: None` lets the store
/// allocate the next free id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeRecord {
    pub scheme_id: Option<SchemeId>,
    pub prefix: String,
    pub namespace: String,
    pub title: String,
    pub description: String,
    pub publisher: String,
    pub authors: Vec<String>,
    pub kind: SchemeKind,
}

impl SchemeRecord {
    pub fn local(prefix: &str, namespace: &str, title: &str) -> Self {
        SchemeRecord {
            scheme_id: None,
            prefix: prefix.into(),
            namespace: namespace.into(),
            title: title.into(),
            description: String::new(),
            publisher: String::new(),
            authors: Vec::new(),
            kind: SchemeKind::Local,
        }
    }

    pub fn remote(prefix: &str, namespace: &str, title: &str) -> Self {
        SchemeRecord { kind: SchemeKind::Remote, ..SchemeRecord::local(prefix, namespace, title) }
    }

    pub fn with_id(mut self, id: SchemeId) -> Self {
        self.scheme_id = Some(id);
        self
    }
}

/// A registered scheme.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scheme {
    pub scheme_id: SchemeId,
    pub prefix: String,
    pub namespace: String,
    pub title: String,
    pub description: String,
    pub publisher: String,
    pub authors: Vec<String>,
    pub kind: SchemeKind,
}

impl Scheme {
    /// The scheme resource: its namespace without the trailing delimiter.
    pub fn iri(&self) -> String {
        let mut s = self.namespace.clone();
        s.pop();
        s
    }

    pub fn concept_iri(&self, local_id: &str) -> String {
        let mut s = String::with_capacity(self.namespace.len() + local_id.len());
        s.push_str(&self.namespace);
        s.push_str(&pct::urify(local_id));
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabelRecord {
    pub concept: ConceptKey,
    pub kind: TermKind,
    pub lang: LanguageTag,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NoteRecord {
    pub concept: ConceptKey,
    pub kind: NoteKind,
    pub lang: Option<LanguageTag>,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Provenance {
    Asserted,
    Entailed,
    Linked,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Asserted => "asserted",
            Provenance::Entailed => "entailed",
            Provenance::Linked => "linked",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "asserted" => Some(Provenance::Asserted),
            "entailed" => Some(Provenance::Entailed),
            "linked" => Some(Provenance::Linked),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationRecord {
    pub src: ConceptKey,
    pub dst: ConceptKey,
    pub rel: RelationKind,
    pub provenance: Provenance,
}

impl RelationRecord {
    pub fn asserted(src: ConceptKey, rel: RelationKind, dst: ConceptKey) -> Self {
        RelationRecord { src, dst, rel, provenance: Provenance::Asserted }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("namespace {namespace} is already registered as scheme {existing}")]
    NamespaceClash { namespace: String, existing: SchemeId },
    #[error("scheme id {0} is already used by another namespace")]
    SchemeIdTaken(SchemeId),
    #[error("scheme prefix {0:?} is already used by another scheme")]
    PrefixClash(String),
    #[error("invalid namespace {0:?}: must be an IRI ending in '/', '#' or '='")]
    InvalidNamespace(String),
    #[error("invalid scheme prefix {0:?}")]
    InvalidPrefix(String),
    #[error("unknown scheme {0}")]
    UnknownScheme(SchemeId),
    #[error("scheme {0} is not local")]
    NotLocal(SchemeId),
    #[error("unknown concept {0}")]
    UnknownConcept(ConceptKey),
    #[error("concept {0} already has a prefLabel in @{1}")]
    DuplicatePrefLabel(ConceptKey, LanguageTag),
    #[error("concept {0}: {2:?}@{1} used as both prefLabel and altLabel")]
    PrefAltClash(ConceptKey, LanguageTag, String),
    #[error("empty text")]
    EmptyText,
    #[error("empty local id")]
    EmptyLocalId,
}

pub(crate) type KeyId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct Label {
    pub kind: TermKind,
    pub lang: LanguageTag,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct Note {
    pub kind: NoteKind,
    pub lang: Option<LanguageTag>,
    pub text: String,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct ConceptData {
    pub labels: Vec<Label>,
    pub notes: Vec<Note>,
    pub out: BTreeMap<(RelationKind, KeyId), Provenance>,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct StoreData {
    pub schemes: BTreeMap<SchemeId, Scheme>,
    pub keys: Vec<(SchemeId, Arc<str>)>,
    pub key_index: HashMap<SchemeId, HashMap<Arc<str>, KeyId>>,
    /// Parallel to `keys`; `Some` for concepts stored locally.
    pub concepts: Vec<Option<ConceptData>>,
    /// Stored concepts per scheme, ordered by local id.
    pub members: BTreeMap<SchemeId, BTreeMap<Arc<str>, KeyId>>,
    pub top: BTreeMap<SchemeId, BTreeSet<KeyId>>,
}

impl StoreData {
    pub fn key_id(&self, key: &ConceptKey) -> Option<KeyId> {
        self.key_index.get(&key.scheme_id)?.get(key.local_id.as_str()).copied()
    }

    pub fn concept_id(&self, key: &ConceptKey) -> Option<KeyId> {
        self.key_id(key).filter(|&id| self.concepts[id as usize].is_some())
    }

    pub fn key(&self, id: KeyId) -> ConceptKey {
        let (s, l) = &self.keys[id as usize];
        ConceptKey { scheme_id: *s, local_id: l.to_string() }
    }

    pub fn scheme_of(&self, id: KeyId) -> SchemeId {
        self.keys[id as usize].0
    }

    pub fn local_of(&self, id: KeyId) -> &str {
        &self.keys[id as usize].1
    }

    pub fn concept(&self, id: KeyId) -> Option<&ConceptData> {
        self.concepts.get(id as usize)?.as_ref()
    }

    pub fn is_stored(&self, id: KeyId) -> bool {
        self.concept(id).is_some()
    }

    pub fn iri_of(&self, id: KeyId) -> String {
        let (s, l) = &self.keys[id as usize];
        self.schemes[s].concept_iri(l)
    }

    fn intern(&mut self, scheme_id: SchemeId, local_id: &str) -> KeyId {
        if let Some(id) = self.key_index.get(&scheme_id).and_then(|m| m.get(local_id)) {
            return *id;
        }
        let id = self.keys.len() as KeyId;
        let local: Arc<str> = Arc::from(local_id);
        self.keys.push((scheme_id, local.clone()));
        self.concepts.push(None);
        self.key_index.entry(scheme_id).or_default().insert(local, id);
        id
    }

    /// Longest registered namespace that prefixes `iri`, with the decoded
    /// local id. The remainder must be in canonical percent-encoded form.
    pub fn resolve_iri(&self, iri: &str) -> Option<ConceptKey> {
        let scheme = self
            .schemes
            .values()
            .filter(|s| iri.len() > s.namespace.len() && iri.starts_with(&s.namespace))
            .max_by_key(|s| s.namespace.len())?;
        let rest = &iri[scheme.namespace.len()..];
        let local = pct::decode(rest)?;
        (pct::urify(&local) == rest).then_some(ConceptKey { scheme_id: scheme.scheme_id, local_id: local })
    }

    pub fn scheme_by_iri(&self, iri: &str) -> Option<&Scheme> {
        self.schemes.values().find(|s| s.namespace.len() == iri.len() + 1 && s.namespace.starts_with(iri))
    }

    pub fn concept_count(&self) -> usize {
        self.members.values().map(BTreeMap::len).sum()
    }
}

fn valid_prefix(p: &str) -> bool {
    !p.is_empty() && p.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b'.'))
}

fn valid_namespace(ns: &str) -> bool {
    crate::model::parse_iri(ns).is_ok() && (ns.ends_with('/') || ns.ends_with('#') || ns.ends_with('='))
}

#[derive(Debug, Clone, Default)]
pub struct Store {
    pub(crate) data: Arc<StoreData>,
}

impl Store {
    pub fn new() -> Self {
        Store::default()
    }

    pub(crate) fn data_mut(&mut self) -> &mut StoreData {
        Arc::make_mut(&mut self.data)
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot::new(self.data.clone())
    }

    pub fn upsert_scheme(&mut self, rec: SchemeRecord) -> Result<SchemeId, StoreError> {
        if !valid_namespace(&rec.namespace) {
            return Err(StoreError::InvalidNamespace(rec.namespace));
        }
        if !valid_prefix(&rec.prefix) {
            return Err(StoreError::InvalidPrefix(rec.prefix));
        }
        let existing = self.data.schemes.values().find(|s| s.namespace == rec.namespace).map(|s| s.scheme_id);
        let id = match (existing, rec.scheme_id) {
            (Some(x), Some(y)) if x != y => {
                return Err(StoreError::NamespaceClash { namespace: rec.namespace, existing: x })
            }
            (Some(x), _) => x,
            (None, Some(0)) => return Err(StoreError::SchemeIdTaken(0)),
            (None, Some(y)) if self.data.schemes.contains_key(&y) => return Err(StoreError::SchemeIdTaken(y)),
            (None, Some(y)) => y,
            (None, None) => self.data.schemes.keys().next_back().map_or(1, |m| m + 1),
        };
        if self.data.schemes.values().any(|s| s.prefix == rec.prefix && s.scheme_id != id) {
            return Err(StoreError::PrefixClash(rec.prefix));
        }
        let data = self.data_mut();
        if rec.kind != SchemeKind::Local {
            if let Some(members) = data.members.get(&id) {
                if !members.is_empty() {
                    return Err(StoreError::NotLocal(id));
                }
            }
        }
        data.schemes.insert(
            id,
            Scheme {
                scheme_id: id,
                prefix: rec.prefix,
                namespace: rec.namespace,
                title: rec.title,
                description: rec.description,
                publisher: rec.publisher,
                authors: rec.authors,
                kind: rec.kind,
            },
        );
        Ok(id)
    }

    pub fn scheme(&self, id: SchemeId) -> Option<&Scheme> {
        self.data.schemes.get(&id)
    }

    pub fn scheme_by_prefix(&self, prefix: &str) -> Option<&Scheme> {
        self.data.schemes.values().find(|s| s.prefix == prefix)
    }

    pub fn schemes(&self) -> impl Iterator<Item = &Scheme> {
        self.data.schemes.values()
    }

    pub(crate) fn scheme_mut(&mut self, id: SchemeId) -> Option<&mut Scheme> {
        self.data_mut().schemes.get_mut(&id)
    }

    fn require_local(&self, id: SchemeId) -> Result<(), StoreError> {
        match self.data.schemes.get(&id) {
            None => Err(StoreError::UnknownScheme(id)),
            Some(s) if s.kind != SchemeKind::Local => Err(StoreError::NotLocal(id)),
            Some(_) => Ok(()),
        }
    }

    /// Returns `true` when the concept was newly added.
    pub fn add_concept(&mut self, scheme_id: SchemeId, local_id: &str) -> Result<bool, StoreError> {
        self.require_local(scheme_id)?;
        if local_id.is_empty() {
            return Err(StoreError::EmptyLocalId);
        }
        let key = ConceptKey::new(scheme_id, local_id);
        if self.data.concept_id(&key).is_some() {
            return Ok(false);
        }
        let data = self.data_mut();
        let id = data.intern(scheme_id, local_id);
        data.concepts[id as usize] = Some(ConceptData::default());
        let local = data.keys[id as usize].1.clone();
        data.members.entry(scheme_id).or_default().insert(local, id);
        Ok(true)
    }

    pub fn contains_concept(&self, key: &ConceptKey) -> bool {
        self.data.concept_id(key).is_some()
    }

    pub fn concept_count(&self) -> usize {
        self.data.concept_count()
    }

    /// Returns `true` when the label was newly stored.
    pub fn add_label(&mut self, rec: LabelRecord) -> Result<bool, StoreError> {
        self.insert_label(rec, true)
    }

    /// Stores a label without the prefLabel uniqueness and pref/alt
    /// disjointness checks. Bulk loads of external files use this; violations
    /// are then reported by validation.
    pub fn add_label_unchecked(&mut self, rec: LabelRecord) -> Result<bool, StoreError> {
        self.insert_label(rec, false)
    }

    fn insert_label(&mut self, rec: LabelRecord, checked: bool) -> Result<bool, StoreError> {
        if rec.text.is_empty() {
            return Err(StoreError::EmptyText);
        }
        let id = self.data.concept_id(&rec.concept).ok_or_else(|| StoreError::UnknownConcept(rec.concept.clone()))?;
        let label = Label { kind: rec.kind, lang: rec.lang, text: rec.text };
        let existing = &self.data.concepts[id as usize].as_ref().expect("stored").labels;
        if existing.contains(&label) {
            return Ok(false);
        }
        if checked {
            for l in existing.iter().filter(|l| l.lang == label.lang) {
                if label.kind == TermKind::PrefLabel && l.kind == TermKind::PrefLabel {
                    return Err(StoreError::DuplicatePrefLabel(rec.concept, label.lang));
                }
                let pair = (l.kind, label.kind);
                let clash = matches!(pair, (TermKind::PrefLabel, TermKind::AltLabel) | (TermKind::AltLabel, TermKind::PrefLabel));
                if clash && l.text == label.text {
                    return Err(StoreError::PrefAltClash(rec.concept, label.lang, label.text));
                }
            }
        }
        self.data_mut().concepts[id as usize].as_mut().expect("stored").labels.push(label);
        Ok(true)
    }

    /// Returns `true` when the note was newly stored.
    pub fn add_note(&mut self, rec: NoteRecord) -> Result<bool, StoreError> {
        if rec.text.is_empty() {
            return Err(StoreError::EmptyText);
        }
        let id = self.data.concept_id(&rec.concept).ok_or_else(|| StoreError::UnknownConcept(rec.concept.clone()))?;
        let note = Note { kind: rec.kind, lang: rec.lang, text: rec.text };
        if self.data.concepts[id as usize].as_ref().expect("stored").notes.contains(&note) {
            return Ok(false);
        }
        self.data_mut().concepts[id as usize].as_mut().expect("stored").notes.push(note);
        Ok(true)
    }

    /// Returns `true` when the row was new. Exact `(src, rel, dst)` duplicates
    /// are ignored and keep their original provenance.
    pub fn add_relation(&mut self, rec: RelationRecord) -> Result<bool, StoreError> {
        let src = self.data.concept_id(&rec.src).ok_or_else(|| StoreError::UnknownConcept(rec.src.clone()))?;
        if !self.data.schemes.contains_key(&rec.dst.scheme_id) {
            return Err(StoreError::UnknownScheme(rec.dst.scheme_id));
        }
        if rec.dst.local_id.is_empty() {
            return Err(StoreError::EmptyLocalId);
        }
        if let Some(dst) = self.data.key_id(&rec.dst) {
            let out = &self.data.concepts[src as usize].as_ref().expect("stored").out;
            if out.contains_key(&(rec.rel, dst)) {
                return Ok(false);
            }
        }
        Ok(self.insert_relation_ids(src, rec.rel, &rec.dst, rec.provenance))
    }

    pub(crate) fn insert_relation_ids(&mut self, src: KeyId, rel: RelationKind, dst: &ConceptKey, prov: Provenance) -> bool {
        let data = self.data_mut();
        let dst = data.intern(dst.scheme_id, &dst.local_id);
        insert_edge(data, src, rel, dst, prov)
    }

    pub fn add_top_concept(&mut self, key: &ConceptKey) -> Result<bool, StoreError> {
        let id = self.data.concept_id(key).ok_or_else(|| StoreError::UnknownConcept(key.clone()))?;
        Ok(self.data_mut().top.entry(key.scheme_id).or_default().insert(id))
    }

    pub fn concept_uri(&self, scheme_id: SchemeId, local_id: &str) -> Result<String, StoreError> {
        self.data.schemes.get(&scheme_id).map(|s| s.concept_iri(local_id)).ok_or(StoreError::UnknownScheme(scheme_id))
    }

    pub fn resolve_iri(&self, iri: &str) -> Option<ConceptKey> {
        self.data.resolve_iri(iri)
    }

    /// Drops the scheme's concepts with their labels, notes, outgoing
    /// relations and top concepts. The scheme stays registered as
    /// [`SchemeKind::Removed`] so rows from other schemes that point into it
    /// still serialize and are flagged as dangling.
    pub fn remove_scheme(&mut self, scheme_id: SchemeId) -> Result<usize, StoreError> {
        self.require_local(scheme_id)?;
        let data = self.data_mut();
        let members = data.members.remove(&scheme_id).unwrap_or_default();
        for id in members.values() {
            data.concepts[*id as usize] = None;
        }
        data.top.remove(&scheme_id);
        data.schemes.get_mut(&scheme_id).expect("checked").kind = SchemeKind::Removed;
        Ok(members.len())
    }

    pub fn relation_count(&self) -> usize {
        self.data.concepts.iter().flatten().map(|c| c.out.len()).sum()
    }
}

pub(crate) fn insert_edge(data: &mut StoreData, src: KeyId, rel: RelationKind, dst: KeyId, prov: Provenance) -> bool {
    let c = data.concepts[src as usize].as_mut().expect("src is stored");
    match c.out.entry((rel, dst)) {
        std::collections::btree_map::Entry::Occupied(_) => false,
        std::collections::btree_map::Entry::Vacant(v) => {
            v.insert(prov);
            true
        }
    }
}
