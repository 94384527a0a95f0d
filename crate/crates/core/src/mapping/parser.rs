use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use regex::Regex;

use crate::model::{Iri, LanguageTag, DCTERMS_NS, RDFS_NS, RDF_NS, SKOS_NS};

use super::{
    ClassMap, ColumnRef, ConcatPart, Condition, Join, MappingError, MappingSpec, PropertyBridge, UriPattern,
    ValueSource,
};

pub const D2RQ_NS: &str = "http://www.wiwiss.fu-berlin.de/suhl/bizer/D2RQ/0.1#";
const MAP_NS: &str = "urn:skosframe:mapping#";

fn builtin_prefixes() -> BTreeMap<String, String> {
    [("rdf", RDF_NS), ("rdfs", RDFS_NS), ("skos", SKOS_NS), ("d2rq", D2RQ_NS), ("map", MAP_NS), ("dcterms", DCTERMS_NS)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Str(String),
    Iri(String),
    Semi,
    Dot,
    PrefixKw,
}

fn syntax(line: usize, message: impl Into<String>) -> MappingError {
    MappingError::SyntaxError { line, message: message.into() }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, MappingError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line = 1;
    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                line += 1;
                chars.next();
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            '#' => {
                while chars.peek().is_some_and(|&c| c != '\n') {
                    chars.next();
                }
            }
            ';' => {
                chars.next();
                out.push((line, Tok::Semi));
            }
            '.' => {
                chars.next();
                out.push((line, Tok::Dot));
            }
            '<' => {
                chars.next();
                let mut iri = String::new();
                loop {
                    match chars.next() {
                        Some('>') => break,
                        Some(c) if !c.is_whitespace() => iri.push(c),
                        _ => return Err(syntax(line, "unterminated IRI")),
                    }
                }
                out.push((line, Tok::Iri(iri)));
            }
            '"' => {
                let start = line;
                chars.next();
                let mut s = String::new();
                let mut at_line_start = false;
                loop {
                    match chars.next() {
                        Some('"') => break,
                        Some('\\') => match chars.next() {
                            Some(e @ ('"' | '\\')) => s.push(e),
                            _ => return Err(syntax(line, "bad escape in string")),
                        },
                        Some('\n') => {
                            line += 1;
                            s.push('\n');
                            at_line_start = true;
                            continue;
                        }
                        // Comment lines inside a multi-line string are dropped.
                        Some('#') if at_line_start => {
                            while chars.peek().is_some_and(|&c| c != '\n') {
                                chars.next();
                            }
                            if chars.next().is_some() {
                                line += 1;
                            }
                            continue;
                        }
                        Some(c) => {
                            s.push(c);
                            if !c.is_whitespace() {
                                at_line_start = false;
                            }
                            continue;
                        }
                        None => return Err(syntax(start, "unterminated string")),
                    }
                }
                out.push((start, Tok::Str(s)));
            }
            '@' => {
                chars.next();
                let word: String = std::iter::from_fn(|| chars.next_if(|c| c.is_alphanumeric())).collect();
                if word != "prefix" {
                    return Err(syntax(line, format!("unknown keyword @{word}")));
                }
                out.push((line, Tok::PrefixKw));
            }
            c if c.is_alphanumeric() || c == '_' || c == ':' => {
                let word: String =
                    std::iter::from_fn(|| chars.next_if(|&c| c.is_alphanumeric() || matches!(c, '_' | '-' | ':')))
                        .collect();
                out.push((line, Tok::Name(word)));
            }
            other => return Err(syntax(line, format!("unexpected character {other:?}"))),
        }
    }
    Ok(out)
}

#[derive(Debug)]
enum Value {
    Name(String),
    Str(String),
    Iri(String),
}

struct Directive {
    line: usize,
    local: String,
    value: Value,
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    i: usize,
    prefixes: BTreeMap<String, String>,
    declared: HashSet<String>,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|(_, t)| t)
    }

    fn line(&self) -> usize {
        self.toks.get(self.i).or(self.toks.last()).map_or(1, |(l, _)| *l)
    }

    fn prev_line(&self) -> usize {
        self.toks.get(self.i.saturating_sub(1)).map_or(1, |(l, _)| *l)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.i).map(|(_, t)| t.clone());
        self.i += 1;
        t
    }

    fn expand(&self, name: &str, line: usize) -> Result<String, MappingError> {
        let (p, local) = name.split_once(':').ok_or_else(|| syntax(line, format!("expected a prefixed name, got {name:?}")))?;
        let ns = self.prefixes.get(p).ok_or_else(|| syntax(line, format!("undeclared prefix {p}:")))?;
        Ok(format!("{ns}{local}"))
    }

    fn d2rq_local(&self, name: &str, line: usize) -> Result<String, MappingError> {
        let full = self.expand(name, line)?;
        full.strip_prefix(D2RQ_NS)
            .map(str::to_string)
            .ok_or_else(|| MappingError::UnknownDirective { line, name: name.to_string() })
    }

    fn prefix_decl(&mut self) -> Result<(), MappingError> {
        let line = self.line();
        let name = match self.next() {
            Some(Tok::Name(n)) if n.ends_with(':') && n.matches(':').count() == 1 => n.trim_end_matches(':').to_string(),
            _ => return Err(syntax(line, "expected 'name:' after @prefix")),
        };
        let iri = match self.next() {
            Some(Tok::Iri(i)) => i,
            _ => return Err(syntax(line, "expected <iri> in @prefix")),
        };
        if self.next() != Some(Tok::Dot) {
            return Err(syntax(line, "expected '.' after @prefix declaration"));
        }
        if !self.declared.insert(name.clone()) && self.prefixes.get(&name) != Some(&iri) {
            return Err(syntax(line, format!("prefix {name}: declared twice")));
        }
        Iri::parse(&iri).map_err(|e| syntax(line, e.to_string()))?;
        self.prefixes.insert(name, iri);
        Ok(())
    }

    /// `subject a Type; key value; ... .`
    fn statement(&mut self) -> Result<(String, String, usize, Vec<Directive>), MappingError> {
        let line = self.line();
        let mut subject = String::new();
        loop {
            match self.next() {
                Some(Tok::Name(n)) if n == "a" && !subject.is_empty() => break,
                // Tolerate a stray space inside a dotted name, as in `EARTh. prefLabelIt`.
                Some(Tok::Name(n)) => subject.push_str(&n),
                _ => return Err(syntax(self.prev_line(), "expected 'subject a Type'")),
            }
        }
        if !subject.contains(':') {
            return Err(syntax(line, format!("subject {subject:?} is not a prefixed name")));
        }
        self.expand(&subject, line)?;
        let ty = match self.next() {
            Some(Tok::Name(n)) => self.d2rq_local(&n, line)?,
            _ => return Err(syntax(line, "expected a type after 'a'")),
        };
        let mut directives = Vec::new();
        match self.next() {
            Some(Tok::Semi) => {}
            Some(Tok::Dot) => return Ok((subject, ty, line, directives)),
            _ => return Err(syntax(self.prev_line(), "expected ';' or '.' after the type")),
        }
        loop {
            match self.peek() {
                Some(Tok::Dot) => {
                    self.i += 1;
                    return Ok((subject, ty, line, directives));
                }
                Some(Tok::Name(_)) => {}
                None => return Err(syntax(self.prev_line(), format!("statement {subject} is missing its terminating '.'"))),
                Some(_) => return Err(syntax(self.line(), "expected a directive")),
            }
            let dline = self.line();
            let Some(Tok::Name(key)) = self.next() else { unreachable!() };
            let local = self.d2rq_local(&key, dline)?;
            let value = match self.next() {
                Some(Tok::Name(n)) => Value::Name(n),
                Some(Tok::Str(s)) => Value::Str(s),
                Some(Tok::Iri(i)) => Value::Iri(i),
                _ => return Err(syntax(dline, format!("missing value for {key}"))),
            };
            let vline = self.prev_line();
            directives.push(Directive { line: dline, local, value });
            match self.next() {
                Some(Tok::Semi) => {}
                Some(Tok::Dot) => return Ok((subject, ty, line, directives)),
                _ => return Err(syntax(vline, format!("statement {subject} is missing its terminating '.'"))),
            }
        }
    }

    fn iri_value(&self, d: &Directive) -> Result<Iri, MappingError> {
        let s = match &d.value {
            Value::Name(n) => self.expand(n, d.line)?,
            Value::Iri(i) => i.clone(),
            Value::Str(_) => return Err(syntax(d.line, format!("d2rq:{} expects an IRI", d.local))),
        };
        Iri::parse(&s).map_err(|e| syntax(d.line, e.to_string()))
    }
}

fn str_value(d: &Directive) -> Result<&str, MappingError> {
    match &d.value {
        Value::Str(s) => Ok(s),
        _ => Err(syntax(d.line, format!("d2rq:{} expects a string", d.local))),
    }
}

fn name_value(d: &Directive) -> Result<&str, MappingError> {
    match &d.value {
        Value::Name(n) => Ok(n),
        _ => Err(syntax(d.line, format!("d2rq:{} expects a prefixed name", d.local))),
    }
}

fn invalid(line: usize, message: impl Into<String>) -> MappingError {
    MappingError::InvalidPattern { line, message: message.into() }
}

fn column(s: &str, line: usize) -> Result<ColumnRef, MappingError> {
    ColumnRef::parse(s).ok_or_else(|| invalid(line, format!("{:?} is not table.column", s.trim())))
}

fn parse_condition(s: &str, line: usize) -> Result<Condition, MappingError> {
    static OR: std::sync::OnceLock<Regex> = std::sync::OnceLock::new();
    let or = OR.get_or_init(|| Regex::new(r"(?i)\s+OR\s+").expect("static regex"));
    let mut col: Option<ColumnRef> = None;
    let mut values = Vec::new();
    for disjunct in or.split(s.trim()) {
        let (lhs, rhs) = disjunct.split_once('=').ok_or_else(|| invalid(line, format!("condition {disjunct:?} is not col=value")))?;
        let c = column(lhs, line)?;
        let rhs = rhs.trim();
        let v = match rhs.strip_prefix('\'').and_then(|r| r.strip_suffix('\'')) {
            Some(q) => q.to_string(),
            None if !rhs.is_empty() && !rhs.contains(char::is_whitespace) && !rhs.contains('\'') => rhs.to_string(),
            None => return Err(invalid(line, format!("bad condition value {rhs:?}"))),
        };
        match &col {
            Some(prev) if *prev != c => return Err(invalid(line, "all alternatives of a condition must test the same column")),
            _ => col = Some(c),
        }
        values.push(v);
    }
    Ok(Condition { column: col.expect("split yields at least one part"), values })
}

fn parse_join(s: &str, line: usize) -> Result<Join, MappingError> {
    let (l, r) = s
        .split_once("=>")
        .or_else(|| s.split_once("<="))
        .or_else(|| s.split_once('='))
        .ok_or_else(|| invalid(line, format!("join {s:?} needs '='")))?;
    Ok(Join { left: column(l, line)?, right: column(r, line)? })
}

fn parse_concat(s: &str, line: usize) -> Result<Vec<ConcatPart>, MappingError> {
    static CONCAT: std::sync::OnceLock<Regex> = std::sync::OnceLock::new();
    let re = CONCAT.get_or_init(|| Regex::new(r"(?is)^\s*CONCAT\s*\((.*)\)\s*$").expect("static regex"));
    let inner = re
        .captures(s)
        .map(|c| c.get(1).expect("group").as_str())
        .ok_or_else(|| invalid(line, format!("only CONCAT(...) is supported in uriSqlExpression, got {:?}", s.trim())))?;
    let mut parts = Vec::new();
    for arg in inner.split(',') {
        let arg = arg.trim();
        match arg.strip_prefix('\'').and_then(|a| a.strip_suffix('\'')) {
            Some(lit) => parts.push(ConcatPart::Literal(lit.to_string())),
            None => parts.push(ConcatPart::Column(column(arg, line)?)),
        }
    }
    if !parts.iter().any(|p| matches!(p, ConcatPart::Column(_))) {
        return Err(invalid(line, "CONCAT needs at least one column"));
    }
    Ok(parts)
}

fn single<'a>(ds: &'a [Directive], local: &str, owner: &str) -> Result<Option<&'a Directive>, MappingError> {
    let mut it = ds.iter().filter(|d| d.local == local);
    let first = it.next();
    if let Some(dup) = it.next() {
        return Err(syntax(dup.line, format!("d2rq:{local} given twice for {owner}")));
    }
    Ok(first)
}

const CLASS_MAP_IGNORED: &[&str] = &["dataStorage", "classDefinitionLabel", "classDefinitionComment"];
const BRIDGE_IGNORED: &[&str] = &["dataStorage", "propertyDefinitionLabel", "propertyDefinitionComment"];

fn build_class_map(p: &Parser, name: String, line: usize, ds: Vec<Directive>) -> Result<ClassMap, MappingError> {
    let mut conditions = Vec::new();
    for d in &ds {
        match d.local.as_str() {
            "uriPattern" | "class" => {}
            "condition" => conditions.push(parse_condition(str_value(d)?, d.line)?),
            l if CLASS_MAP_IGNORED.contains(&l) => {}
            _ => return Err(MappingError::UnknownDirective { line: d.line, name: format!("d2rq:{}", d.local) }),
        }
    }
    let pat = single(&ds, "uriPattern", &name)?.ok_or_else(|| syntax(line, format!("{name} needs d2rq:uriPattern")))?;
    let uri_pattern = UriPattern::parse(str_value(pat)?).map_err(|m| invalid(pat.line, m))?;
    let mut tables = uri_pattern.columns().map(ColumnRef::table_key).collect::<Vec<_>>();
    tables.dedup();
    if tables.len() != 1 {
        return Err(invalid(pat.line, format!("{name}: the URI pattern must draw from exactly one table")));
    }
    for c in &conditions {
        if c.column.table_key() != tables[0] {
            return Err(invalid(line, format!("{name}: condition on {} is outside the base table", c.column)));
        }
    }
    let class = single(&ds, "class", &name)?.ok_or_else(|| syntax(line, format!("{name} needs d2rq:class")))?;
    Ok(ClassMap { name, uri_pattern, rdf_class: p.iri_value(class)?, conditions })
}

fn build_bridge(p: &Parser, name: String, line: usize, ds: Vec<Directive>) -> Result<PropertyBridge, MappingError> {
    let mut joins = Vec::new();
    let mut conditions = Vec::new();
    for d in &ds {
        match d.local.as_str() {
            "belongsToClassMap" | "property" | "column" | "uriPattern" | "uriSqlExpression" | "lang" => {}
            "join" => joins.push(parse_join(str_value(d)?, d.line)?),
            "condition" => conditions.push(parse_condition(str_value(d)?, d.line)?),
            l if BRIDGE_IGNORED.contains(&l) => {}
            _ => return Err(MappingError::UnknownDirective { line: d.line, name: format!("d2rq:{}", d.local) }),
        }
    }
    let belongs = single(&ds, "belongsToClassMap", &name)?
        .ok_or_else(|| syntax(line, format!("{name} needs d2rq:belongsToClassMap")))?;
    let property =
        single(&ds, "property", &name)?.ok_or_else(|| syntax(line, format!("{name} needs d2rq:property")))?;
    let sources: Vec<&Directive> =
        ds.iter().filter(|d| matches!(d.local.as_str(), "column" | "uriPattern" | "uriSqlExpression")).collect();
    let value = match sources.as_slice() {
        [d] => match d.local.as_str() {
            "column" => ValueSource::Column(column(str_value(d)?, d.line)?),
            "uriPattern" => ValueSource::Pattern(UriPattern::parse(str_value(d)?).map_err(|m| invalid(d.line, m))?),
            _ => ValueSource::Concat(parse_concat(str_value(d)?, d.line)?),
        },
        [] => return Err(syntax(line, format!("{name} needs one of d2rq:column, d2rq:uriPattern, d2rq:uriSqlExpression"))),
        [_, d, ..] => return Err(syntax(d.line, format!("{name} has more than one value source"))),
    };
    let lang = match single(&ds, "lang", &name)? {
        Some(d) => {
            if !matches!(value, ValueSource::Column(_)) {
                return Err(syntax(d.line, "d2rq:lang is only valid with d2rq:column"));
            }
            Some(LanguageTag::parse(str_value(d)?.trim()).map_err(|e| syntax(d.line, e.to_string()))?)
        }
        None => None,
    };
    Ok(PropertyBridge {
        name,
        belongs_to: name_value(belongs)?.to_string(),
        property: p.iri_value(property)?,
        value,
        lang,
        joins,
        conditions,
    })
}

pub fn parse_mapping(text: &str) -> Result<MappingSpec, MappingError> {
    let mut p = Parser { toks: tokenize(text)?, i: 0, prefixes: builtin_prefixes(), declared: HashSet::new() };
    let mut spec = MappingSpec::default();
    let mut names = HashSet::new();
    while let Some(t) = p.peek() {
        if *t == Tok::PrefixKw {
            p.i += 1;
            p.prefix_decl()?;
            continue;
        }
        let (subject, ty, line, directives) = p.statement()?;
        if !names.insert(subject.to_ascii_lowercase()) {
            return Err(syntax(line, format!("{subject} is declared twice")));
        }
        match ty.as_str() {
            "ClassMap" => spec.class_maps.push(build_class_map(&p, subject, line, directives)?),
            "PropertyBridge" => spec.bridges.push(build_bridge(&p, subject, line, directives)?),
            // Connection settings do not apply: tables come from CSV.
            "Database" => {}
            _ => return Err(MappingError::UnknownDirective { line, name: format!("d2rq:{ty}") }),
        }
    }
    for b in &spec.bridges {
        if spec.class_map(&b.belongs_to).is_none() {
            return Err(MappingError::DanglingBridge { bridge: b.name.clone(), class_map: b.belongs_to.clone() });
        }
    }
    spec.prefixes = p.prefixes;
    Ok(spec)
}

fn compact(prefixes: &BTreeMap<String, String>, iri: &Iri) -> String {
    let s = iri.as_str();
    prefixes
        .iter()
        .filter_map(|(p, ns)| {
            let local = s.strip_prefix(ns.as_str())?;
            (!local.is_empty() && local.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-'))
                .then(|| format!("{p}:{local}"))
        })
        .next()
        .unwrap_or_else(|| format!("<{s}>"))
}

fn quoted(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn condition_text(c: &Condition) -> String {
    c.values.iter().map(|v| format!("{}='{v}'", c.column)).collect::<Vec<_>>().join(" OR ")
}

/// Renders a spec in the block syntax; `parse_mapping` of the output yields
/// an equal spec.
pub fn pretty_print(spec: &MappingSpec) -> String {
    let mut out = String::new();
    for (p, ns) in &spec.prefixes {
        let _ = writeln!(out, "@prefix {p}: <{ns}> .");
    }
    for cm in &spec.class_maps {
        let _ = write!(out, "\n{} a d2rq:ClassMap;\n", cm.name);
        let _ = writeln!(out, "    d2rq:uriPattern {};", quoted(&cm.uri_pattern.to_string()));
        let _ = writeln!(out, "    d2rq:class {};", compact(&spec.prefixes, &cm.rdf_class));
        for c in &cm.conditions {
            let _ = writeln!(out, "    d2rq:condition {};", quoted(&condition_text(c)));
        }
        out.push_str(".\n");
    }
    for b in &spec.bridges {
        let _ = write!(out, "\n{} a d2rq:PropertyBridge;\n", b.name);
        let _ = writeln!(out, "    d2rq:belongsToClassMap {};", b.belongs_to);
        let _ = writeln!(out, "    d2rq:property {};", compact(&spec.prefixes, &b.property));
        match &b.value {
            ValueSource::Column(c) => {
                let _ = writeln!(out, "    d2rq:column {};", quoted(&c.to_string()));
            }
            ValueSource::Pattern(p) => {
                let _ = writeln!(out, "    d2rq:uriPattern {};", quoted(&p.to_string()));
            }
            ValueSource::Concat(parts) => {
                let args: Vec<String> = parts
                    .iter()
                    .map(|p| match p {
                        ConcatPart::Column(c) => c.to_string(),
                        ConcatPart::Literal(l) => format!("'{l}'"),
                    })
                    .collect();
                let _ = writeln!(out, "    d2rq:uriSqlExpression {};", quoted(&format!("CONCAT({})", args.join(","))));
            }
        }
        if let Some(l) = &b.lang {
            let _ = writeln!(out, "    d2rq:lang {};", quoted(l.as_str()));
        }
        for j in &b.joins {
            let _ = writeln!(out, "    d2rq:join {};", quoted(&format!("{} => {}", j.left, j.right)));
        }
        for c in &b.conditions {
            let _ = writeln!(out, "    d2rq:condition {};", quoted(&condition_text(c)));
        }
        out.push_str(".\n");
    }
    out
}
