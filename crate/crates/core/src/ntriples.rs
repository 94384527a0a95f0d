//! N-Triples line format, a matching reader, and a predicate-grouped Turtle
//! writer (full IRIs, no prefixes).

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{parse_iri, Iri, LanguageTag, Literal, Term, Triple};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct NTriplesError {
    pub line: usize,
    pub message: String,
}

pub fn format_ntriples(t: &Triple) -> String {
    let mut s = String::with_capacity(64);
    write_ntriples(&mut s, t);
    s
}

pub fn write_ntriples(out: &mut String, t: &Triple) {
    write_iri(out, &t.subject);
    out.push(' ');
    write_iri(out, &t.predicate);
    out.push(' ');
    write_term(out, &t.object);
    out.push_str(" .\n");
}

pub fn term_to_string(t: &Term) -> String {
    let mut s = String::new();
    write_term(&mut s, t);
    s
}

pub fn write_term(out: &mut String, t: &Term) {
    match t {
        Term::Iri(i) => write_iri(out, i),
        Term::Literal(l) => write_literal(out, l),
    }
}

fn write_iri(out: &mut String, i: &Iri) {
    out.push('<');
    out.push_str(i.as_str());
    out.push('>');
}

fn write_literal(out: &mut String, l: &Literal) {
    out.push('"');
    escape_into(out, &l.lexical);
    out.push('"');
    if let Some(lang) = &l.lang {
        out.push('@');
        out.push_str(lang.as_str());
    }
}

pub fn escape_into(out: &mut String, s: &str) {
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            _ => out.push(c),
        }
    }
}

/// Serializes triples as sorted N-Triples (bytewise line order, duplicates
/// removed).
pub fn to_sorted_ntriples<'a>(triples: impl IntoIterator<Item = &'a Triple>) -> String {
    let mut lines: Vec<String> = triples.into_iter().map(format_ntriples).collect();
    lines.sort_unstable();
    lines.dedup();
    lines.concat()
}

/// Parses one line. Blank lines and `#` comments yield `Ok(None)`.
pub fn parse_line(line: &str) -> Result<Option<Triple>, String> {
    let mut cur = Cursor { s: line, pos: 0 };
    cur.skip_ws();
    if cur.at_end() || cur.peek() == Some('#') {
        return Ok(None);
    }
    let subject = cur.iri()?;
    cur.skip_ws();
    let predicate = cur.iri()?;
    cur.skip_ws();
    let object = match cur.peek() {
        Some('<') => Term::Iri(cur.iri()?),
        Some('"') => Term::Literal(cur.literal()?),
        Some(c) => return Err(format!("unexpected {c:?} at column {}", cur.pos + 1)),
        None => return Err("missing object".into()),
    };
    cur.skip_ws();
    if cur.peek() != Some('.') {
        return Err("expected '.'".into());
    }
    cur.pos += 1;
    cur.skip_ws();
    if !(cur.at_end() || cur.peek() == Some('#')) {
        return Err(format!("trailing content at column {}", cur.pos + 1));
    }
    Ok(Some(Triple { subject, predicate, object }))
}

pub fn parse_document(text: &str) -> Result<Vec<Triple>, NTriplesError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        match parse_line(line) {
            Ok(Some(t)) => out.push(t),
            Ok(None) => {}
            Err(message) => return Err(NTriplesError { line: i + 1, message }),
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<char> {
        self.s[self.pos..].chars().next()
    }

    fn at_end(&self) -> bool {
        self.pos >= self.s.len()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if matches!(c, ' ' | '\t' | '\r' | '\n') {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn iri(&mut self) -> Result<Iri, String> {
        if self.peek() != Some('<') {
            return Err(format!("expected IRI at column {}", self.pos + 1));
        }
        let rest = &self.s[self.pos + 1..];
        let end = rest.find('>').ok_or("unterminated IRI")?;
        let iri = parse_iri(&rest[..end]).map_err(|e| e.to_string())?;
        self.pos += end + 2;
        Ok(iri)
    }

    fn literal(&mut self) -> Result<Literal, String> {
        self.pos += 1;
        let mut lexical = String::new();
        let mut chars = self.s[self.pos..].char_indices();
        let mut closed = None;
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    closed = Some(i + 1);
                    break;
                }
                '\\' => {
                    let (_, e) = chars.next().ok_or("dangling escape")?;
                    match e {
                        '"' => lexical.push('"'),
                        '\\' => lexical.push('\\'),
                        'n' => lexical.push('\n'),
                        't' => lexical.push('\t'),
                        'r' => lexical.push('\r'),
                        'u' | 'U' => {
                            let n = if e == 'u' { 4 } else { 8 };
                            let mut hex = String::new();
                            for _ in 0..n {
                                hex.push(chars.next().ok_or("short unicode escape")?.1);
                            }
                            let cp = u32::from_str_radix(&hex, 16).map_err(|_| "bad unicode escape")?;
                            lexical.push(char::from_u32(cp).ok_or("bad code point")?);
                        }
                        other => return Err(format!("unknown escape \\{other}")),
                    }
                }
                _ => lexical.push(c),
            }
        }
        let consumed = closed.ok_or("unterminated literal")?;
        self.pos += consumed;
        let lang = if self.peek() == Some('@') {
            self.pos += 1;
            let rest = &self.s[self.pos..];
            let end = rest.find(|c: char| !(c.is_ascii_alphanumeric() || c == '-')).unwrap_or(rest.len());
            let tag = LanguageTag::parse(&rest[..end]).map_err(|e| e.to_string())?;
            self.pos += end;
            Some(tag)
        } else if self.s[self.pos..].starts_with("^^") {
            return Err("datatyped literals are not supported".into());
        } else {
            None
        };
        Ok(Literal { lexical, lang })
    }
}

/// Turtle with full IRIs: triples grouped by subject, then by predicate with
/// object lists. Input order is normalized by sorting.
pub fn to_turtle<'a>(triples: impl IntoIterator<Item = &'a Triple>) -> String {
    let mut sorted: Vec<&Triple> = triples.into_iter().collect();
    sorted.sort();
    sorted.dedup();
    let mut out = String::new();
    let mut i = 0;
    while i < sorted.len() {
        let subject = &sorted[i].subject;
        let _ = write!(out, "<{subject}>");
        let mut first_pred = true;
        while i < sorted.len() && &sorted[i].subject == subject {
            let predicate = &sorted[i].predicate;
            out.push_str(if first_pred { "\n    " } else { " ;\n    " });
            first_pred = false;
            let _ = write!(out, "<{predicate}> ");
            let mut first_obj = true;
            while i < sorted.len() && &sorted[i].subject == subject && &sorted[i].predicate == predicate {
                if !first_obj {
                    out.push_str(", ");
                }
                first_obj = false;
                write_term(&mut out, &sorted[i].object);
                i += 1;
            }
        }
        out.push_str(" .\n\n");
    }
    out
}
