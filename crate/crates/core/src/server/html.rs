use std::collections::BTreeMap;
use std::fmt::Write;

use crate::model::{NoteKind, RelationKind, TermKind};
use crate::store::{ConceptKey, Scheme, SchemeKind, Snapshot};

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

fn head(out: &mut String, title: &str, alternate: Option<&str>) {
    out.push_str("<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n");
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    if let Some(alt) = alternate {
        let _ = writeln!(out, "<link rel=\"alternate\" type=\"text/turtle\" href=\"{}\">", escape(alt));
    }
    out.push_str("</head>\n<body>\n");
}

fn foot(out: &mut String, base: &str) {
    let _ = writeln!(
        out,
        "<p class=\"nav\"><a href=\"{b}all\">All concept schemes</a> | SPARQL endpoint: <code>{b}sparql</code></p>",
        b = escape(base)
    );
    out.push_str("</body>\n</html>\n");
}

/// Preferred display label: English prefLabel, then any prefLabel, then the
/// local id.
pub fn display_label(snap: &Snapshot, key: &ConceptKey) -> String {
    let prefs = snap.label_text(key, TermKind::PrefLabel);
    prefs
        .iter()
        .find(|(l, _)| l == "en")
        .or_else(|| prefs.first())
        .map(|(_, t)| t.clone())
        .unwrap_or_else(|| key.local_id.clone())
}

pub struct ConceptPage<'a> {
    pub snap: &'a Snapshot,
    pub base: &'a str,
    pub key: &'a ConceptKey,
    pub scheme: &'a Scheme,
    pub data_url: String,
}

pub fn concept_page(p: &ConceptPage<'_>) -> String {
    let snap = p.snap;
    let iri = p.scheme.concept_iri(&p.key.local_id);
    let title = display_label(snap, p.key);
    let mut out = String::new();
    head(&mut out, &title, Some(&p.data_url));
    let _ = writeln!(out, "<h1>{}</h1>", escape(&title));
    let _ = writeln!(out, "<p class=\"uri\">URI: <code>{}</code></p>", escape(&iri));
    let _ = writeln!(
        out,
        "<p>Concept scheme: <a href=\"{}all/{}\">{}</a> | <a href=\"{}\">RDF description</a></p>",
        escape(p.base),
        escape(&crate::pct::urify(&p.scheme.prefix)),
        escape(&p.scheme.title),
        escape(&p.data_url)
    );

    let labels = snap.labels(p.key).unwrap_or_default();
    let mut by_lang: BTreeMap<String, Vec<(TermKind, String)>> = BTreeMap::new();
    for l in labels {
        by_lang.entry(l.lang.to_string()).or_default().push((l.kind, l.text));
    }
    if !by_lang.is_empty() {
        out.push_str("<h2>Labels</h2>\n<dl class=\"labels\">\n");
        for (lang, mut items) in by_lang {
            items.sort();
            let _ = writeln!(out, "<dt lang=\"{0}\">{0}</dt>", escape(&lang));
            for (kind, text) in items {
                let _ = writeln!(
                    out,
                    "<dd lang=\"{}\"><span class=\"prop\">skos:{}</span> {} <span class=\"lang\">@{}</span></dd>",
                    escape(&lang),
                    kind.local_name(),
                    escape(&text),
                    escape(&lang)
                );
            }
        }
        out.push_str("</dl>\n");
    }

    let mut notes = snap.notes(p.key).unwrap_or_default();
    notes.sort_by(|a, b| (a.kind, &a.lang, &a.text).cmp(&(b.kind, &b.lang, &b.text)));
    if !notes.is_empty() {
        out.push_str("<h2>Documentation</h2>\n<dl class=\"notes\">\n");
        for kind in NoteKind::ALL {
            let of_kind: Vec<_> = notes.iter().filter(|n| n.kind == *kind).collect();
            if of_kind.is_empty() {
                continue;
            }
            let _ = writeln!(out, "<dt>skos:{}</dt>", kind.local_name());
            for n in of_kind {
                let lang = n.lang.as_ref().map(|l| l.to_string());
                match &lang {
                    Some(l) => {
                        let _ = writeln!(
                            out,
                            "<dd lang=\"{0}\">{1} <span class=\"lang\">@{0}</span></dd>",
                            escape(l),
                            escape(&n.text)
                        );
                    }
                    None => {
                        let _ = writeln!(out, "<dd>{}</dd>", escape(&n.text));
                    }
                }
            }
        }
        out.push_str("</dl>\n");
    }

    let rels = snap.relations(p.key).unwrap_or_default();
    if !rels.is_empty() {
        out.push_str("<h2>Relations</h2>\n<dl class=\"relations\">\n");
        for kind in RelationKind::ALL {
            let mut targets: Vec<&ConceptKey> = rels.iter().filter(|r| r.rel == *kind).map(|r| &r.dst).collect();
            if targets.is_empty() {
                continue;
            }
            targets.sort();
            let _ = writeln!(out, "<dt>skos:{}</dt>", kind.local_name());
            for t in targets {
                let Some(ts) = snap.scheme(t.scheme_id) else { continue };
                let href = ts.concept_iri(&t.local_id);
                let text = match ts.kind {
                    SchemeKind::Local if snap.contains(t) => display_label(snap, t),
                    _ => format!("{}:{}", ts.prefix, t.local_id),
                };
                let _ = writeln!(out, "<dd><a href=\"{}\">{}</a></dd>", escape(&href), escape(&text));
            }
        }
        out.push_str("</dl>\n");
    }
    foot(&mut out, p.base);
    out
}

pub struct SchemeRow {
    pub prefix: String,
    pub title: String,
    pub kind: SchemeKind,
    pub count: usize,
    pub href: String,
}

pub fn scheme_index(base: &str, rows: &[SchemeRow]) -> String {
    let mut out = String::new();
    head(&mut out, "Concept schemes", None);
    out.push_str("<h1>Concept schemes</h1>\n");
    out.push_str("<table class=\"schemes\">\n<tr><th>Prefix</th><th>Title</th><th>Kind</th><th>Concepts</th></tr>\n");
    for r in rows {
        let _ = writeln!(
            out,
            "<tr><td><a href=\"{}\">{}</a></td><td>{}</td><td>{}</td><td>{}</td></tr>",
            escape(&r.href),
            escape(&r.prefix),
            escape(&r.title),
            r.kind.as_str(),
            r.count
        );
    }
    out.push_str("</table>\n");
    foot(&mut out, base);
    out
}

pub struct ListingPage<'a> {
    pub base: &'a str,
    pub scheme: &'a Scheme,
    pub page: usize,
    pub pages: usize,
    pub total: usize,
    /// (concept IRI, display label)
    pub items: Vec<(String, String)>,
    pub prev: Option<String>,
    pub next: Option<String>,
}

pub fn scheme_listing(p: &ListingPage<'_>) -> String {
    let mut out = String::new();
    let title = format!("{} ({})", p.scheme.title, p.scheme.prefix);
    head(&mut out, &title, None);
    let _ = writeln!(out, "<h1>{}</h1>", escape(&title));
    let _ = writeln!(out, "<p>{} concepts, page {} of {}</p>", p.total, p.page, p.pages.max(1));
    out.push_str("<ul class=\"concepts\">\n");
    for (href, label) in &p.items {
        let _ = writeln!(out, "<li><a href=\"{}\">{}</a></li>", escape(href), escape(label));
    }
    out.push_str("</ul>\n<p class=\"pager\">");
    if let Some(prev) = &p.prev {
        let _ = write!(out, "<a rel=\"prev\" href=\"{}\">previous</a> ", escape(prev));
    }
    if let Some(next) = &p.next {
        let _ = write!(out, "<a rel=\"next\" href=\"{}\">next</a>", escape(next));
    }
    out.push_str("</p>\n");
    foot(&mut out, p.base);
    out
}

pub fn error_page(status: u16, message: &str) -> String {
    format!(
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>{status}</title>\n</head>\n<body>\n<h1>{status}</h1>\n<p>{}</p>\n</body>\n</html>\n",
        escape(message)
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escapes_markup() {
        assert_eq!(escape("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
    }
}
