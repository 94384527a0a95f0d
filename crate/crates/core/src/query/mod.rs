//! A SPARQL SELECT subset: basic graph patterns, three filter forms
//! (`lang(?v) = "xx"`, `?v = term`, `regex(?v, "re", "i")`), LIMIT and
//! OFFSET. Everything else is rejected with [`QueryError::UnsupportedFeature`]
//! naming the construct.

mod eval;
mod parser;
mod results;

use thiserror::Error;

use crate::model::Term;

pub use eval::{evaluate, GraphIndex};
pub use parser::parse_select;
pub use results::results_json;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("syntax error at offset {offset}: {message}")]
    SyntaxError { offset: usize, message: String },
    #[error("unsupported feature: {0}")]
    UnsupportedFeature(String),
    #[error("variable ?{0} is not bound by any triple pattern")]
    UnboundVariable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PatternTerm {
    Var(String),
    Term(Term),
}

impl PatternTerm {
    pub fn var(&self) -> Option<&str> {
        match self {
            PatternTerm::Var(v) => Some(v),
            PatternTerm::Term(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TriplePattern {
    pub s: PatternTerm,
    pub p: PatternTerm,
    pub o: PatternTerm,
}

impl TriplePattern {
    pub fn positions(&self) -> [&PatternTerm; 3] {
        [&self.s, &self.p, &self.o]
    }

    pub fn ground_count(&self) -> usize {
        self.positions().iter().filter(|t| t.var().is_none()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Filter {
    /// `lang(?v) = "tag"`; compared case-insensitively, `""` matches
    /// untagged literals.
    LangEquals(String, String),
    TermEquals(String, Term),
    Regex { var: String, pattern: String, case_insensitive: bool },
}

impl Filter {
    pub fn var(&self) -> &str {
        match self {
            Filter::LangEquals(v, _) | Filter::TermEquals(v, _) => v,
            Filter::Regex { var, .. } => var,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectQuery {
    /// Projected variables; for `SELECT *`, every pattern variable in order of
    /// first appearance.
    pub variables: Vec<String>,
    pub star: bool,
    pub patterns: Vec<TriplePattern>,
    pub filters: Vec<Filter>,
    pub limit: Option<usize>,
    pub offset: Option<usize>,
}

impl SelectQuery {
    pub fn pattern_variables(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for p in &self.patterns {
            for t in p.positions() {
                if let Some(v) = t.var() {
                    if !out.iter().any(|o| o == v) {
                        out.push(v.to_string());
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BindingSet {
    pub vars: Vec<String>,
    /// One entry per row, aligned with `vars`.
    pub rows: Vec<Vec<Term>>,
}

impl BindingSet {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, row: usize, var: &str) -> Option<&Term> {
        let i = self.vars.iter().position(|v| v == var)?;
        self.rows.get(row).map(|r| &r[i])
    }
}
