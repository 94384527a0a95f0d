use std::collections::HashMap;

use crate::model::{parse_iri, Iri, LanguageTag, Literal, Term, DCTERMS_NS, RDFS_NS, RDF_NS, RDF_TYPE, SKOS_NS};

use super::{Filter, PatternTerm, QueryError, SelectQuery, TriplePattern};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Var(String),
    Iri(String),
    PName(String, String),
    Str(String),
    LangTag(String),
    Int(usize),
    Word(String),
    Punct(char),
    /// Operators outside the subset (`!=`, `&&`, `||`, `<`, ...).
    Op(String),
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

const UNSUPPORTED_KEYWORDS: &[&str] = &[
    "OPTIONAL", "UNION", "MINUS", "GRAPH", "SERVICE", "BIND", "VALUES", "CONSTRUCT", "ASK", "DESCRIBE", "ORDER",
    "GROUP", "HAVING", "FROM", "NAMED", "NOT", "EXISTS", "INSERT", "DELETE", "LOAD", "CLEAR", "DROP", "CREATE",
    "COUNT", "SUM", "MIN", "MAX", "AVG", "SAMPLE", "GROUP_CONCAT", "BASE", "AS", "STR", "LANGMATCHES", "BOUND",
    "CONTAINS", "STRSTARTS", "IF", "COALESCE", "IN",
];

impl<'a> Lexer<'a> {
    fn err(&self, offset: usize, message: impl Into<String>) -> QueryError {
        QueryError::SyntaxError { offset, message: message.into() }
    }

    fn skip_ws(&mut self) {
        loop {
            let rest = &self.src[self.pos..];
            let trimmed = rest.trim_start();
            self.pos += rest.len() - trimmed.len();
            if trimmed.starts_with('#') {
                self.pos += trimmed.find('\n').unwrap_or(trimmed.len());
            } else {
                break;
            }
        }
    }

    fn tokens(mut self) -> Result<Vec<(usize, Tok)>, QueryError> {
        let mut out = Vec::new();
        loop {
            self.skip_ws();
            let start = self.pos;
            let rest = &self.src[self.pos..];
            let Some(c) = rest.chars().next() else { break };
            let tok = match c {
                '?' | '$' => {
                    let name: String = rest[1..].chars().take_while(|c| c.is_alphanumeric() || *c == '_').collect();
                    if name.is_empty() {
                        return Err(self.err(start, "empty variable name"));
                    }
                    self.pos += 1 + name.len();
                    Tok::Var(name)
                }
                '<' => {
                    let end = rest.find(|c: char| c == '>' || c.is_whitespace());
                    match end {
                        Some(e) if rest.as_bytes()[e] == b'>' && e > 1 => {
                            self.pos += e + 1;
                            Tok::Iri(rest[1..e].to_string())
                        }
                        _ => {
                            let op = if rest.starts_with("<=") { "<=" } else { "<" };
                            self.pos += op.len();
                            Tok::Op(op.into())
                        }
                    }
                }
                '"' | '\'' => {
                    let (s, len) = self.string(rest, c, start)?;
                    self.pos += len;
                    Tok::Str(s)
                }
                '@' => {
                    let tag: String = rest[1..].chars().take_while(|c| c.is_ascii_alphanumeric() || *c == '-').collect();
                    self.pos += 1 + tag.len();
                    Tok::LangTag(tag)
                }
                '0'..='9' => {
                    let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
                    self.pos += digits.len();
                    Tok::Int(digits.parse().map_err(|_| self.err(start, "integer out of range"))?)
                }
                '{' | '}' | '.' | '(' | ')' | ',' | ';' | '*' => {
                    self.pos += 1;
                    Tok::Punct(c)
                }
                '=' => {
                    self.pos += 1;
                    Tok::Punct('=')
                }
                '!' | '&' | '|' | '>' | '/' | '^' | '+' | '-' => {
                    let op: String = rest.chars().take_while(|c| "!&|=<>/^+-".contains(*c)).collect();
                    self.pos += op.len();
                    Tok::Op(op)
                }
                c if c.is_alphabetic() || c == '_' || c == ':' => {
                    let word: String = rest
                        .chars()
                        .take_while(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | ':' | '.' | '%'))
                        .collect();
                    // A trailing '.' terminates the triple, it is not part of the name.
                    let word = word.trim_end_matches('.').to_string();
                    self.pos += word.len();
                    match word.split_once(':') {
                        Some((p, l)) => Tok::PName(p.to_string(), l.to_string()),
                        None => Tok::Word(word),
                    }
                }
                other => return Err(self.err(start, format!("unexpected character {other:?}"))),
            };
            out.push((start, tok));
        }
        Ok(out)
    }

    fn string(&self, rest: &str, quote: char, start: usize) -> Result<(String, usize), QueryError> {
        let mut out = String::new();
        let mut chars = rest.char_indices().skip(1);
        while let Some((i, c)) = chars.next() {
            match c {
                c if c == quote => return Ok((out, i + 1)),
                '\\' => match chars.next() {
                    Some((_, 'n')) => out.push('\n'),
                    Some((_, 't')) => out.push('\t'),
                    Some((_, 'r')) => out.push('\r'),
                    Some((_, e @ ('"' | '\'' | '\\'))) => out.push(e),
                    _ => return Err(self.err(start, "bad escape in string")),
                },
                '\n' => return Err(self.err(start, "newline in string")),
                c => out.push(c),
            }
        }
        Err(self.err(start, "unterminated string"))
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    i: usize,
    end: usize,
    prefixes: HashMap<String, String>,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.i).map_or(self.end, |(o, _)| *o)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.i).map(|(_, t)| t.clone());
        self.i += 1;
        t
    }

    fn err(&self, message: impl Into<String>) -> QueryError {
        QueryError::SyntaxError { offset: self.offset(), message: message.into() }
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(x)) if x.eq_ignore_ascii_case(w))
    }

    fn expect_punct(&mut self, c: char) -> Result<(), QueryError> {
        match self.peek() {
            Some(Tok::Punct(p)) if *p == c => {
                self.i += 1;
                Ok(())
            }
            _ => Err(self.err(format!("expected '{c}'"))),
        }
    }

    /// Rejects anything outside the subset before the structural parse, so
    /// the error names the construct rather than the token it tripped on.
    fn check_unsupported(&self) -> Result<(), QueryError> {
        for (_, t) in &self.toks {
            match t {
                Tok::Word(w) => {
                    let up = w.to_ascii_uppercase();
                    if UNSUPPORTED_KEYWORDS.contains(&up.as_str()) {
                        return Err(QueryError::UnsupportedFeature(up));
                    }
                }
                Tok::Op(op) => {
                    let name = match op.as_str() {
                        "/" | "^" | "|" | "+" => "property paths",
                        _ => "filter operator",
                    };
                    return Err(QueryError::UnsupportedFeature(format!("{name} ({op})")));
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn iri(&self, s: &str) -> Result<Iri, QueryError> {
        parse_iri(s).map_err(|e| self.err(e.to_string()))
    }

    fn pname(&self, p: &str, l: &str) -> Result<Iri, QueryError> {
        let ns = self.prefixes.get(p).ok_or_else(|| self.err(format!("undeclared prefix {p}:")))?;
        self.iri(&format!("{ns}{l}"))
    }

    fn ground(&mut self) -> Result<Term, QueryError> {
        match self.next() {
            Some(Tok::Iri(s)) => Ok(Term::Iri(self.iri(&s)?)),
            Some(Tok::PName(p, l)) => Ok(Term::Iri(self.pname(&p, &l)?)),
            Some(Tok::Word(w)) if w == "a" => Ok(Term::Iri(self.iri(RDF_TYPE)?)),
            Some(Tok::Str(s)) => {
                let lang = match self.peek() {
                    Some(Tok::LangTag(t)) => {
                        let t = t.clone();
                        self.i += 1;
                        Some(LanguageTag::parse(&t).map_err(|e| self.err(e.to_string()))?)
                    }
                    _ => None,
                };
                Ok(Term::Literal(Literal { lexical: s, lang }))
            }
            _ => {
                self.i -= 1;
                Err(self.err("expected a term"))
            }
        }
    }

    fn pattern_term(&mut self) -> Result<PatternTerm, QueryError> {
        if let Some(Tok::Var(v)) = self.peek() {
            let v = v.clone();
            self.i += 1;
            return Ok(PatternTerm::Var(v));
        }
        self.ground().map(PatternTerm::Term)
    }

    fn subject_or_predicate(&mut self, what: &str) -> Result<PatternTerm, QueryError> {
        let t = self.pattern_term()?;
        if let PatternTerm::Term(Term::Literal(_)) = t {
            self.i -= 1;
            return Err(self.err(format!("a literal cannot be a {what}")));
        }
        Ok(t)
    }

    fn filter(&mut self) -> Result<Filter, QueryError> {
        self.expect_punct('(')?;
        let f = if self.is_word("lang") {
            self.i += 1;
            self.expect_punct('(')?;
            let v = self.var()?;
            self.expect_punct(')')?;
            self.expect_punct('=')?;
            match self.next() {
                Some(Tok::Str(s)) => Filter::LangEquals(v, s.to_ascii_lowercase()),
                _ => {
                    self.i -= 1;
                    return Err(self.err("expected a string after lang(...) ="));
                }
            }
        } else if self.is_word("regex") {
            self.i += 1;
            self.expect_punct('(')?;
            let var = self.var()?;
            self.expect_punct(',')?;
            let pattern = self.string()?;
            let case_insensitive = if matches!(self.peek(), Some(Tok::Punct(','))) {
                self.i += 1;
                let flags = self.string()?;
                if flags.chars().any(|c| c != 'i') {
                    return Err(QueryError::UnsupportedFeature(format!("regex flags {flags:?}")));
                }
                flags.contains('i')
            } else {
                false
            };
            self.expect_punct(')')?;
            regex::RegexBuilder::new(&pattern)
                .case_insensitive(case_insensitive)
                .build()
                .map_err(|e| self.err(format!("invalid regex: {e}")))?;
            Filter::Regex { var, pattern, case_insensitive }
        } else {
            let v = self.var()?;
            self.expect_punct('=')?;
            Filter::TermEquals(v, self.ground()?)
        };
        self.expect_punct(')')?;
        Ok(f)
    }

    fn var(&mut self) -> Result<String, QueryError> {
        match self.next() {
            Some(Tok::Var(v)) => Ok(v),
            _ => {
                self.i -= 1;
                Err(self.err("expected a variable"))
            }
        }
    }

    fn string(&mut self) -> Result<String, QueryError> {
        match self.next() {
            Some(Tok::Str(s)) => Ok(s),
            _ => {
                self.i -= 1;
                Err(self.err("expected a string"))
            }
        }
    }

    fn uint(&mut self, what: &str) -> Result<usize, QueryError> {
        match self.next() {
            Some(Tok::Int(n)) => Ok(n),
            _ => {
                self.i -= 1;
                Err(self.err(format!("expected a non-negative integer after {what}")))
            }
        }
    }

    fn parse(&mut self) -> Result<SelectQuery, QueryError> {
        while self.is_word("PREFIX") {
            self.i += 1;
            let name = match self.next() {
                Some(Tok::PName(p, l)) if l.is_empty() => p,
                _ => {
                    self.i -= 1;
                    return Err(self.err("expected 'name:' after PREFIX"));
                }
            };
            let ns = match self.next() {
                Some(Tok::Iri(i)) => i,
                _ => {
                    self.i -= 1;
                    return Err(self.err("expected <iri> in PREFIX"));
                }
            };
            self.prefixes.insert(name, ns);
        }
        if !self.is_word("SELECT") {
            return Err(self.err("expected SELECT"));
        }
        self.i += 1;
        if self.is_word("DISTINCT") || self.is_word("REDUCED") {
            self.i += 1;
        }
        let mut star = false;
        let mut vars = Vec::new();
        if matches!(self.peek(), Some(Tok::Punct('*'))) {
            self.i += 1;
            star = true;
        } else {
            while let Some(Tok::Var(v)) = self.peek() {
                if !vars.contains(v) {
                    vars.push(v.clone());
                }
                self.i += 1;
            }
            if vars.is_empty() {
                return Err(self.err("expected variables or '*' after SELECT"));
            }
        }
        if self.is_word("WHERE") {
            self.i += 1;
        }
        self.expect_punct('{')?;
        let mut patterns = Vec::new();
        let mut filters = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::Punct('}')) => {
                    self.i += 1;
                    break;
                }
                Some(Tok::Punct('.')) => {
                    self.i += 1;
                }
                Some(Tok::Punct('{')) => return Err(QueryError::UnsupportedFeature("nested group patterns".into())),
                Some(Tok::Word(w)) if w.eq_ignore_ascii_case("FILTER") => {
                    self.i += 1;
                    filters.push(self.filter()?);
                }
                Some(_) => {
                    let s = self.subject_or_predicate("subject")?;
                    loop {
                        let p = self.subject_or_predicate("predicate")?;
                        loop {
                            let o = self.pattern_term()?;
                            patterns.push(TriplePattern { s: s.clone(), p: p.clone(), o });
                            if matches!(self.peek(), Some(Tok::Punct(','))) {
                                self.i += 1;
                            } else {
                                break;
                            }
                        }
                        if matches!(self.peek(), Some(Tok::Punct(';'))) {
                            self.i += 1;
                            if matches!(self.peek(), Some(Tok::Punct('.' | '}'))) {
                                break;
                            }
                        } else {
                            break;
                        }
                    }
                    match self.peek() {
                        Some(Tok::Punct('.' | '}')) => {}
                        Some(Tok::Word(w)) if w.eq_ignore_ascii_case("FILTER") => {}
                        _ => return Err(self.err("expected '.' or '}' after triple pattern")),
                    }
                }
                None => return Err(self.err("unterminated group pattern")),
            }
        }
        let mut limit = None;
        let mut offset = None;
        loop {
            if self.is_word("LIMIT") && limit.is_none() {
                self.i += 1;
                limit = Some(self.uint("LIMIT")?);
            } else if self.is_word("OFFSET") && offset.is_none() {
                self.i += 1;
                offset = Some(self.uint("OFFSET")?);
            } else {
                break;
            }
        }
        if self.peek().is_some() {
            return Err(self.err("unexpected trailing input"));
        }
        if patterns.is_empty() {
            return Err(self.err("the WHERE clause needs at least one triple pattern"));
        }
        let mut q = SelectQuery { variables: vars, star, patterns, filters, limit, offset };
        let bound = q.pattern_variables();
        if star {
            q.variables = bound.clone();
        }
        for v in q.variables.iter().map(String::as_str).chain(q.filters.iter().map(Filter::var)) {
            if !bound.iter().any(|b| b == v) {
                return Err(QueryError::UnboundVariable(v.to_string()));
            }
        }
        Ok(q)
    }
}

pub fn parse_select(text: &str) -> Result<SelectQuery, QueryError> {
    let toks = Lexer { src: text, pos: 0 }.tokens()?;
    let mut prefixes = HashMap::new();
    for (p, ns) in [("rdf", RDF_NS), ("rdfs", RDFS_NS), ("skos", SKOS_NS), ("dcterms", DCTERMS_NS)] {
        prefixes.insert(p.to_string(), ns.to_string());
    }
    let mut parser = Parser { toks, i: 0, end: text.len(), prefixes };
    parser.check_unsupported()?;
    parser.parse()
}
