//! Declarative mapping from tables to SKOS triples, in the D2RQ block syntax:
//!
//! ```text
//! map:EARTh a d2rq:ClassMap;
//!     d2rq:uriPattern "EARTh/@@EARTh.ID|urify@@";
//!     d2rq:class skos:Concept;
//! .
//! ```

mod eval;
mod parser;
mod table;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::model::{Iri, LanguageTag};

pub use eval::{evaluate, evaluate_to_store, expand_uri_pattern, Evaluation, ExpandError, Row};
pub use parser::{parse_mapping, pretty_print};
pub use table::{Table, TableError, TableSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MappingError {
    #[error("syntax error at line {line}: {message}")]
    SyntaxError { line: usize, message: String },
    #[error("unknown directive {name} at line {line}")]
    UnknownDirective { line: usize, name: String },
    #[error("bridge {bridge} belongs to undeclared class map {class_map}")]
    DanglingBridge { bridge: String, class_map: String },
    #[error("invalid pattern at line {line}: {message}")]
    InvalidPattern { line: usize, message: String },
    #[error("unknown table {0}")]
    UnknownTable(String),
    #[error("unknown column {0}")]
    UnknownColumn(String),
    #[error("{0}")]
    Unsupported(String),
}

/// `table.column`, compared without regard to ASCII case or surrounding
/// whitespace.
#[derive(Debug, Clone)]
pub struct ColumnRef {
    pub table: String,
    pub column: String,
}

impl ColumnRef {
    pub fn parse(s: &str) -> Option<ColumnRef> {
        let (t, c) = s.trim().split_once('.')?;
        let (t, c) = (t.trim(), c.trim());
        let ident = |x: &str| !x.is_empty() && x.chars().all(|ch| ch.is_alphanumeric() || ch == '_' || ch == '-');
        (ident(t) && ident(c)).then(|| ColumnRef { table: t.to_string(), column: c.to_string() })
    }

    pub fn table_key(&self) -> String {
        self.table.to_ascii_lowercase()
    }

    pub fn column_key(&self) -> String {
        self.column.to_ascii_lowercase()
    }
}

impl PartialEq for ColumnRef {
    fn eq(&self, other: &Self) -> bool {
        self.table.eq_ignore_ascii_case(&other.table) && self.column.eq_ignore_ascii_case(&other.column)
    }
}

impl Eq for ColumnRef {}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.table, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment {
    Literal(String),
    Column { column: ColumnRef, urify: bool },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UriPattern {
    pub segments: Vec<Segment>,
}

impl UriPattern {
    /// Parses `lit@@table.col|urify@@lit...`.
    pub fn parse(s: &str) -> Result<UriPattern, String> {
        let parts: Vec<&str> = s.split("@@").collect();
        if parts.len().is_multiple_of(2) {
            return Err(format!("unbalanced @@ in {s:?}"));
        }
        let mut segments = Vec::new();
        for (i, part) in parts.iter().enumerate() {
            if i % 2 == 0 {
                if !part.is_empty() {
                    segments.push(Segment::Literal(part.to_string()));
                }
                continue;
            }
            let (col, urify) = match part.split_once('|') {
                Some((c, "urify")) => (c, true),
                Some((_, m)) => return Err(format!("unsupported placeholder modifier {m:?}")),
                None => (*part, false),
            };
            let column = ColumnRef::parse(col).ok_or_else(|| format!("placeholder {part:?} is not table.column"))?;
            segments.push(Segment::Column { column, urify });
        }
        if parts.len() < 3 {
            return Err(format!("pattern {s:?} has no placeholder"));
        }
        Ok(UriPattern { segments })
    }

    pub fn columns(&self) -> impl Iterator<Item = &ColumnRef> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Column { column, .. } => Some(column),
            Segment::Literal(_) => None,
        })
    }
}

impl fmt::Display for UriPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.segments {
            match s {
                Segment::Literal(l) => f.write_str(l)?,
                Segment::Column { column, urify: true } => write!(f, "@@{column}|urify@@")?,
                Segment::Column { column, urify: false } => write!(f, "@@{column}@@")?,
            }
        }
        Ok(())
    }
}

/// Equality against one value, or a disjunction of equalities on the same
/// column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condition {
    pub column: ColumnRef,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Join {
    pub left: ColumnRef,
    pub right: ColumnRef,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConcatPart {
    Column(ColumnRef),
    Literal(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValueSource {
    Column(ColumnRef),
    Pattern(UriPattern),
    /// `CONCAT(a.namespace, b.id)`: the parts are joined verbatim.
    Concat(Vec<ConcatPart>),
}

impl ValueSource {
    pub fn columns(&self) -> Vec<&ColumnRef> {
        match self {
            ValueSource::Column(c) => vec![c],
            ValueSource::Pattern(p) => p.columns().collect(),
            ValueSource::Concat(parts) => parts
                .iter()
                .filter_map(|p| match p {
                    ConcatPart::Column(c) => Some(c),
                    ConcatPart::Literal(_) => None,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassMap {
    pub name: String,
    pub uri_pattern: UriPattern,
    pub rdf_class: Iri,
    pub conditions: Vec<Condition>,
}

impl ClassMap {
    /// The single table the URI pattern draws from.
    pub fn base_table(&self) -> &str {
        &self.uri_pattern.columns().next().expect("validated").table
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyBridge {
    pub name: String,
    pub belongs_to: String,
    pub property: Iri,
    pub value: ValueSource,
    pub lang: Option<LanguageTag>,
    pub joins: Vec<Join>,
    pub conditions: Vec<Condition>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MappingSpec {
    pub prefixes: BTreeMap<String, String>,
    pub class_maps: Vec<ClassMap>,
    pub bridges: Vec<PropertyBridge>,
}

impl MappingSpec {
    pub fn class_map(&self, name: &str) -> Option<&ClassMap> {
        self.class_maps.iter().find(|c| c.name.eq_ignore_ascii_case(name))
    }

    pub fn bridges_of<'a>(&'a self, class_map: &'a str) -> impl Iterator<Item = &'a PropertyBridge> {
        self.bridges.iter().filter(move |b| b.belongs_to.eq_ignore_ascii_case(class_map))
    }
}
