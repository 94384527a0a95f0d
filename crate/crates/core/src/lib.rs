//! SKOS thesaurus toolkit: a normalized concept store, a D2RQ-style mapping
//! language for tabular sources, SKOS entailment and validation,
//! cross-thesaurus interlinking, a SPARQL SELECT subset and the routing logic
//! of a Linked Data server.

pub mod entailment;
pub mod interlink;
pub mod mapping;
pub mod model;
pub mod ntriples;
pub mod pct;
pub mod query;
pub mod server;
pub mod store;

pub use entailment::{entail, validate, EntailmentReport, IssueKind, ValidationIssue};
pub use interlink::{LinkCandidate, LinkRule, SimilarityConfig, Strategy};
pub use model::{Iri, LanguageTag, Literal, NoteKind, RelationKind, Term, TermKind, Triple};
pub use query::{evaluate, parse_select, results_json, BindingSet, QueryError, SelectQuery};
pub use store::{ConceptKey, Provenance, SchemeKind, SchemeRecord, Snapshot, Store, StoreError};
