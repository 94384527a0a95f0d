use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MediaType {
    Turtle,
    NTriples,
    Html,
    SparqlJson,
}

impl MediaType {
    pub fn essence(self) -> &'static str {
        match self {
            MediaType::Turtle => "text/turtle",
            MediaType::NTriples => "application/n-triples",
            MediaType::Html => "text/html",
            MediaType::SparqlJson => "application/sparql-results+json",
        }
    }

    /// Value for the Content-Type header.
    pub fn content_type(self) -> &'static str {
        match self {
            MediaType::Turtle => "text/turtle; charset=utf-8",
            MediaType::NTriples => "application/n-triples; charset=utf-8",
            MediaType::Html => "text/html; charset=utf-8",
            MediaType::SparqlJson => "application/sparql-results+json; charset=utf-8",
        }
    }

    pub fn is_rdf(self) -> bool {
        matches!(self, MediaType::Turtle | MediaType::NTriples)
    }
}

impl fmt::Display for MediaType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.essence())
    }
}

/// Server preference order for dereferenceable resources.
pub const RESOURCE_TYPES: &[MediaType] = &[MediaType::Turtle, MediaType::NTriples, MediaType::Html];
pub const RDF_TYPES: &[MediaType] = &[MediaType::Turtle, MediaType::NTriples];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NotAcceptable;

struct Range<'a> {
    kind: &'a str,
    sub: &'a str,
    q: f64,
}

fn parse_accept(header: &str) -> Option<Vec<Range<'_>>> {
    let mut out = Vec::new();
    for item in header.split(',') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let mut parts = item.split(';');
        let range = parts.next()?.trim();
        let (kind, sub) = range.split_once('/')?;
        let (kind, sub) = (kind.trim(), sub.trim());
        if kind.is_empty() || sub.is_empty() || (kind == "*" && sub != "*") {
            return None;
        }
        let mut q = 1.0;
        for p in parts {
            if let Some((k, v)) = p.split_once('=') {
                if k.trim().eq_ignore_ascii_case("q") {
                    q = v.trim().parse::<f64>().ok().filter(|q| (0.0..=1.0).contains(q))?;
                }
            }
        }
        out.push(Range { kind, sub, q });
    }
    Some(out)
}

/// q-value the header assigns to `t`, taken from the most specific matching
/// range; `None` when no range matches.
fn quality(ranges: &[Range<'_>], t: MediaType) -> Option<f64> {
    let (kind, sub) = t.essence().split_once('/').expect("type/subtype");
    let mut best: Option<(u8, f64)> = None;
    for r in ranges {
        let specificity = if r.kind.eq_ignore_ascii_case(kind) && r.sub.eq_ignore_ascii_case(sub) {
            3
        } else if r.kind.eq_ignore_ascii_case(kind) && r.sub == "*" {
            2
        } else if r.kind == "*" && r.sub == "*" {
            1
        } else {
            continue;
        };
        if best.is_none_or(|(s, _)| specificity > s) {
            best = Some((specificity, r.q));
        }
    }
    best.map(|(_, q)| q)
}

/// Picks the offered type with the highest q-value; ties go to the earlier
/// entry of `offered`. A missing or malformed header, or one naming none of
/// the offered types, yields the first offered type. Fails only when every
/// offered type is explicitly refused with q=0.
pub fn negotiate(accept: Option<&str>, offered: &[MediaType]) -> Result<MediaType, NotAcceptable> {
    let first = offered[0];
    let Some(ranges) = accept.and_then(parse_accept) else { return Ok(first) };
    if ranges.is_empty() {
        return Ok(first);
    }
    let qs: Vec<Option<f64>> = offered.iter().map(|&t| quality(&ranges, t)).collect();
    let mut best: Option<(usize, f64)> = None;
    for (i, q) in qs.iter().enumerate() {
        if let Some(q) = *q {
            if q > 0.0 && best.is_none_or(|(_, b)| q > b) {
                best = Some((i, q));
            }
        }
    }
    match best {
        Some((i, _)) => Ok(offered[i]),
        None if qs.iter().all(|q| *q == Some(0.0)) => Err(NotAcceptable),
        None => Ok(first),
    }
}
