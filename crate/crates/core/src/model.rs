//! RDF atoms and the SKOS vocabulary shared by every other module.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use thiserror::Error;

pub const SKOS_NS: &str = "http://www.w3.org/2004/02/skos/core#";
pub const RDF_NS: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
pub const RDFS_NS: &str = "http://www.w3.org/2000/01/rdf-schema#";
pub const DCTERMS_NS: &str = "http://purl.org/dc/terms/";

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";
pub const RDFS_COMMENT: &str = "http://www.w3.org/2000/01/rdf-schema#comment";
pub const RDFS_SEE_ALSO: &str = "http://www.w3.org/2000/01/rdf-schema#seeAlso";
pub const SKOS_CONCEPT: &str = "http://www.w3.org/2004/02/skos/core#Concept";
pub const SKOS_CONCEPT_SCHEME: &str = "http://www.w3.org/2004/02/skos/core#ConceptScheme";
pub const SKOS_IN_SCHEME: &str = "http://www.w3.org/2004/02/skos/core#inScheme";
pub const SKOS_HAS_TOP_CONCEPT: &str = "http://www.w3.org/2004/02/skos/core#hasTopConcept";
pub const SKOS_TOP_CONCEPT_OF: &str = "http://www.w3.org/2004/02/skos/core#topConceptOf";
pub const DCTERMS_TITLE: &str = "http://purl.org/dc/terms/title";
pub const DCTERMS_DESCRIPTION: &str = "http://purl.org/dc/terms/description";
pub const DCTERMS_PUBLISHER: &str = "http://purl.org/dc/terms/publisher";
pub const DCTERMS_CREATOR: &str = "http://purl.org/dc/terms/creator";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("malformed IRI {0:?}: {1}")]
    MalformedIri(String, &'static str),
    #[error("malformed language tag {0:?}")]
    MalformedLanguageTag(String),
    #[error("unknown SKOS term {0:?}")]
    UnknownTerm(String),
}

/// An absolute IRI. Validation is structural only: a scheme, then `:`, and no
/// whitespace or control characters anywhere.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Iri(Arc<str>);

impl Iri {
    pub fn parse(s: &str) -> Result<Self, ModelError> {
        parse_iri(s)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Constant IRIs from this module are known to be valid; the common ones
    /// are shared instead of reallocated.
    pub(crate) fn from_static(s: &'static str) -> Self {
        static TABLE: OnceLock<HashMap<&'static str, Iri>> = OnceLock::new();
        let table = TABLE.get_or_init(|| {
            let mut m = HashMap::new();
            let fixed = [
                RDF_TYPE, RDFS_LABEL, RDFS_COMMENT, RDFS_SEE_ALSO, SKOS_CONCEPT, SKOS_CONCEPT_SCHEME,
                SKOS_IN_SCHEME, SKOS_HAS_TOP_CONCEPT, SKOS_TOP_CONCEPT_OF, DCTERMS_TITLE,
                DCTERMS_DESCRIPTION, DCTERMS_PUBLISHER, DCTERMS_CREATOR,
            ];
            let kinds = TermKind::ALL
                .iter()
                .map(|k| k.iri_str())
                .chain(NoteKind::ALL.iter().map(|k| k.iri_str()))
                .chain(RelationKind::ALL.iter().map(|k| k.iri_str()));
            for iri in fixed.into_iter().chain(kinds) {
                m.insert(iri, Iri(Arc::from(iri)));
            }
            m
        });
        match table.get(s) {
            Some(i) => i.clone(),
            None => {
                debug_assert!(parse_iri(s).is_ok());
                Iri(Arc::from(s))
            }
        }
    }
}

impl fmt::Debug for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Iri {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

pub fn parse_iri(s: &str) -> Result<Iri, ModelError> {
    if s.is_empty() {
        return Err(ModelError::MalformedIri(s.into(), "empty"));
    }
    if s.chars().any(|c| c.is_whitespace() || c.is_control()) {
        return Err(ModelError::MalformedIri(s.into(), "contains whitespace or control characters"));
    }
    if s.contains(['<', '>', '"', '{', '}', '|', '^', '`', '\\']) {
        return Err(ModelError::MalformedIri(s.into(), "contains characters not allowed in IRIs"));
    }
    let Some(colon) = s.find(':') else {
        return Err(ModelError::MalformedIri(s.into(), "missing scheme"));
    };
    let scheme = &s[..colon];
    let mut chars = scheme.chars();
    let scheme_ok = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'));
    if !scheme_ok {
        return Err(ModelError::MalformedIri(s.into(), "missing scheme"));
    }
    Ok(Iri(Arc::from(s)))
}

/// Lowercased BCP 47-ish language tag: 2–8 letters, optionally `-` and 1–8
/// alphanumerics.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LanguageTag(Arc<str>);

impl LanguageTag {
    pub fn parse(s: &str) -> Result<Self, ModelError> {
        let lower = s.to_ascii_lowercase();
        let (primary, sub) = match lower.split_once('-') {
            Some((p, r)) => (p, Some(r)),
            None => (lower.as_str(), None),
        };
        let primary_ok = (2..=8).contains(&primary.len()) && primary.bytes().all(|b| b.is_ascii_lowercase());
        let sub_ok = match sub {
            None => true,
            Some(r) => (1..=8).contains(&r.len()) && r.bytes().all(|b| b.is_ascii_alphanumeric()),
        };
        if primary_ok && sub_ok {
            Ok(LanguageTag(Arc::from(lower)))
        } else {
            Err(ModelError::MalformedLanguageTag(s.into()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "@{}", self.0)
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub lexical: String,
    pub lang: Option<LanguageTag>,
}

impl Literal {
    pub fn new(lexical: impl Into<String>, lang: Option<LanguageTag>) -> Self {
        Literal { lexical: lexical.into(), lang }
    }

    pub fn plain(lexical: impl Into<String>) -> Self {
        Literal { lexical: lexical.into(), lang: None }
    }

    pub fn tagged(lexical: impl Into<String>, lang: &LanguageTag) -> Self {
        Literal { lexical: lexical.into(), lang: Some(lang.clone()) }
    }
}

/// Object position of a triple.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Iri(Iri),
    Literal(Literal),
}

impl Term {
    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(i) => Some(i),
            Term::Literal(_) => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(l) => Some(l),
            Term::Iri(_) => None,
        }
    }
}

impl From<Iri> for Term {
    fn from(i: Iri) -> Self {
        Term::Iri(i)
    }
}

impl From<Literal> for Term {
    fn from(l: Literal) -> Self {
        Term::Literal(l)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: Iri,
    pub predicate: Iri,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Iri, predicate: Iri, object: impl Into<Term>) -> Self {
        Triple { subject, predicate, object: object.into() }
    }
}

macro_rules! skos_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $local:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            /// Camel-case local name in the SKOS core namespace.
            pub fn local_name(self) -> &'static str {
                match self {
                    $($name::$variant => $local),+
                }
            }

            pub fn iri_str(self) -> &'static str {
                match self {
                    $($name::$variant => concat!("http://www.w3.org/2004/02/skos/core#", $local)),+
                }
            }

            pub fn from_local_name(s: &str) -> Option<Self> {
                match s {
                    $($local => Some($name::$variant),)+
                    _ => None,
                }
            }

            pub fn from_iri(iri: &str) -> Option<Self> {
                iri.strip_prefix(SKOS_NS).and_then(Self::from_local_name)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.local_name())
            }
        }

        impl std::str::FromStr for $name {
            type Err = ModelError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::from_local_name(s).ok_or_else(|| ModelError::UnknownTerm(s.into()))
            }
        }
    };
}

skos_enum!(
    /// Lexical label kinds.
    TermKind {
        PrefLabel => "prefLabel",
        AltLabel => "altLabel",
        HiddenLabel => "hiddenLabel",
    }
);

skos_enum!(
    /// Documentation property kinds.
    NoteKind {
        Definition => "definition",
        Note => "note",
        ScopeNote => "scopeNote",
        EditorialNote => "editorialNote",
    }
);

skos_enum!(
    /// Semantic and mapping relations between concepts.
    RelationKind {
        Broader => "broader",
        Narrower => "narrower",
        Related => "related",
        BroaderTransitive => "broaderTransitive",
        NarrowerTransitive => "narrowerTransitive",
        SemanticRelation => "semanticRelation",
        ExactMatch => "exactMatch",
        CloseMatch => "closeMatch",
        BroadMatch => "broadMatch",
        NarrowMatch => "narrowMatch",
        RelatedMatch => "relatedMatch",
    }
);

impl RelationKind {
    /// Inverse property. Symmetric kinds map to themselves; `semanticRelation`
    /// has no declared inverse and also maps to itself.
    pub fn inverse(self) -> RelationKind {
        use RelationKind::*;
        match self {
            Broader => Narrower,
            Narrower => Broader,
            BroaderTransitive => NarrowerTransitive,
            NarrowerTransitive => BroaderTransitive,
            BroadMatch => NarrowMatch,
            NarrowMatch => BroadMatch,
            Related => Related,
            RelatedMatch => RelatedMatch,
            ExactMatch => ExactMatch,
            CloseMatch => CloseMatch,
            SemanticRelation => SemanticRelation,
        }
    }

    pub fn is_symmetric(self) -> bool {
        use RelationKind::*;
        matches!(self, Related | RelatedMatch | ExactMatch | CloseMatch)
    }
}

/// Any of the three SKOS enumerations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SkosTerm {
    Label(TermKind),
    Note(NoteKind),
    Relation(RelationKind),
}

impl SkosTerm {
    pub fn iri_str(self) -> &'static str {
        match self {
            SkosTerm::Label(k) => k.iri_str(),
            SkosTerm::Note(k) => k.iri_str(),
            SkosTerm::Relation(k) => k.iri_str(),
        }
    }

    pub fn from_iri(iri: &str) -> Option<Self> {
        TermKind::from_iri(iri)
            .map(SkosTerm::Label)
            .or_else(|| NoteKind::from_iri(iri).map(SkosTerm::Note))
            .or_else(|| RelationKind::from_iri(iri).map(SkosTerm::Relation))
    }
}

impl From<TermKind> for SkosTerm {
    fn from(k: TermKind) -> Self {
        SkosTerm::Label(k)
    }
}

impl From<NoteKind> for SkosTerm {
    fn from(k: NoteKind) -> Self {
        SkosTerm::Note(k)
    }
}

impl From<RelationKind> for SkosTerm {
    fn from(k: RelationKind) -> Self {
        SkosTerm::Relation(k)
    }
}

pub fn skos_iri(term: impl Into<SkosTerm>) -> Iri {
    Iri::from_static(term.into().iri_str())
}

pub fn rdf_type() -> Iri {
    Iri::from_static(RDF_TYPE)
}

pub(crate) fn vocab(iri: &'static str) -> Iri {
    Iri::from_static(iri)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn iri_examples() {
        assert!(parse_iri("http://example.org/a").is_ok());
        assert!(parse_iri("http://linkeddata.ge.imati.cnr.it:2020/resource/EARTH/123").is_ok());
        assert!(matches!(parse_iri("no scheme here"), Err(ModelError::MalformedIri(..))));
        assert!(parse_iri("").is_err());
        assert!(parse_iri("noscheme").is_err());
        assert!(parse_iri(":x").is_err());
        assert!(parse_iri("http://a/\u{7}").is_err());
    }

    #[test]
    fn iri_equality_is_exact() {
        assert_ne!(parse_iri("http://a/B").unwrap(), parse_iri("http://a/b").unwrap());
    }

    #[test]
    fn language_tags() {
        assert_eq!(LanguageTag::parse("EN").unwrap().as_str(), "en");
        assert_eq!(LanguageTag::parse("en-GB").unwrap().as_str(), "en-gb");
        assert!(LanguageTag::parse("la").is_ok());
        assert!(LanguageTag::parse("e").is_err());
        assert!(LanguageTag::parse("english1").is_err());
        assert!(LanguageTag::parse("en-").is_err());
        assert!(LanguageTag::parse("en-abcdefghi").is_err());
    }

    #[test]
    fn skos_constants() {
        assert_eq!(skos_iri(RelationKind::Broader).as_str(), "http://www.w3.org/2004/02/skos/core#broader");
        assert_eq!(skos_iri(TermKind::PrefLabel).as_str(), "http://www.w3.org/2004/02/skos/core#prefLabel");
        assert_eq!(skos_iri(RelationKind::ExactMatch).as_str(), "http://www.w3.org/2004/02/skos/core#exactMatch");
    }

    #[test]
    fn skos_iri_is_collision_free() {
        let mut seen = HashSet::new();
        let all = TermKind::ALL
            .iter()
            .map(|&k| SkosTerm::from(k))
            .chain(NoteKind::ALL.iter().map(|&k| SkosTerm::from(k)))
            .chain(RelationKind::ALL.iter().map(|&k| SkosTerm::from(k)));
        for t in all {
            let iri = skos_iri(t);
            assert!(seen.insert(iri.clone()), "collision on {iri}");
            assert_eq!(SkosTerm::from_iri(iri.as_str()), Some(t));
        }
        assert_eq!(seen.len(), 3 + 4 + 11);
    }

    #[test]
    fn inverse_is_an_involution() {
        for &k in RelationKind::ALL {
            assert_eq!(k.inverse().inverse(), k);
            if k.is_symmetric() {
                assert_eq!(k.inverse(), k);
            }
        }
        assert_eq!(RelationKind::Broader.inverse(), RelationKind::Narrower);
        assert_eq!(RelationKind::BroaderTransitive.inverse(), RelationKind::NarrowerTransitive);
        assert_eq!(RelationKind::BroadMatch.inverse(), RelationKind::NarrowMatch);
    }
}
