//! Linked Data publication: routing, content negotiation and rendering,
//! independent of any HTTP library. A front end converts its requests into
//! [`Request`] and writes out the returned [`Response`].
//!
//! Routes, relative to the public base URI:
//! `/`, `/all`, `/all/{scheme}?page=N`, `/resource/{scheme}/{id}` (303),
//! `/data/{scheme}/{id}`, `/page/{scheme}/{id}` and `/sparql`.

pub mod html;
mod negotiate;

use std::sync::{Arc, RwLock};

use thiserror::Error;

use crate::model::{parse_iri, rdf_type, Iri, Literal, Triple};
use crate::ntriples::{to_sorted_ntriples, to_turtle};
use crate::pct;
use crate::query::{evaluate, parse_select, results_json};
use crate::store::{ConceptKey, Scheme, SchemeKind, Snapshot};

pub use negotiate::{negotiate, MediaType, NotAcceptable, RDF_TYPES, RESOURCE_TYPES};

pub const PAGE_SIZE: usize = 100;
pub const MAX_GET_QUERY: usize = 8 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Get,
    Head,
    Post,
    Other,
}

#[derive(Debug, Clone)]
pub struct Request {
    pub method: Method,
    /// Percent-encoded path without the query string.
    pub path: String,
    pub query: Option<String>,
    pub accept: Option<String>,
    pub content_type: Option<String>,
    pub body: Vec<u8>,
}

impl Request {
    pub fn get(target: &str) -> Self {
        let (path, query) = match target.split_once('?') {
            Some((p, q)) => (p.to_string(), Some(q.to_string())),
            None => (target.to_string(), None),
        };
        Request { method: Method::Get, path, query, accept: None, content_type: None, body: Vec::new() }
    }

    pub fn with_accept(mut self, accept: &str) -> Self {
        self.accept = Some(accept.to_string());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub status: u16,
    pub content_type: Option<&'static str>,
    pub location: Option<String>,
    pub allow: Option<&'static str>,
    pub vary_accept: bool,
    pub body: Vec<u8>,
}

impl Response {
    fn new(status: u16, media: MediaType, body: impl Into<Vec<u8>>) -> Self {
        Response {
            status,
            content_type: Some(media.content_type()),
            location: None,
            allow: None,
            vary_accept: false,
            body: body.into(),
        }
    }

    fn text(status: u16, message: impl Into<String>) -> Self {
        let mut body = message.into();
        body.push('\n');
        Response {
            status,
            content_type: Some("text/plain; charset=utf-8"),
            location: None,
            allow: None,
            vary_accept: false,
            body: body.into_bytes(),
        }
    }

    fn not_found(what: &str) -> Self {
        Response::text(404, format!("not found: {what}"))
    }

    fn redirect(location: String) -> Self {
        Response {
            status: 303,
            content_type: None,
            location: Some(location),
            allow: None,
            vary_accept: true,
            body: Vec::new(),
        }
    }

    fn negotiated(mut self) -> Self {
        self.vary_accept = true;
        self
    }

    pub fn body_text(&self) -> &str {
        std::str::from_utf8(&self.body).unwrap_or("")
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SiteError {
    #[error("public base {0:?} must be an absolute http(s) IRI ending in '/'")]
    InvalidBase(String),
}

/// The published site: the public base URI and the routes beneath it.
#[derive(Debug, Clone)]
pub struct Site {
    base: String,
    base_path: String,
}

impl Site {
    pub fn new(base: &str) -> Result<Site, SiteError> {
        let bad = || SiteError::InvalidBase(base.to_string());
        if !base.ends_with('/') || parse_iri(base).is_err() {
            return Err(bad());
        }
        let rest = base
            .strip_prefix("http://")
            .or_else(|| base.strip_prefix("https://"))
            .ok_or_else(bad)?;
        let slash = rest.find('/').ok_or_else(bad)?;
        if slash == 0 {
            return Err(bad());
        }
        Ok(Site { base: base.to_string(), base_path: rest[slash..].to_string() })
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    /// Path component of the base, starting and ending with `/`.
    pub fn base_path(&self) -> &str {
        &self.base_path
    }

    /// Namespace under which a local scheme's concepts are dereferenceable.
    pub fn namespace_for(&self, prefix: &str) -> String {
        format!("{}resource/{}/", self.base, pct::urify(prefix))
    }

    pub fn handle(&self, snap: &Snapshot, req: &Request) -> Response {
        let mut resp = self.route(snap, req);
        if req.method == Method::Head {
            resp.body.clear();
        }
        resp
    }

    fn route(&self, snap: &Snapshot, req: &Request) -> Response {
        let Some(rel) = req.path.strip_prefix(&self.base_path) else {
            return Response::not_found(&req.path);
        };
        let segments: Vec<&str> = if rel.is_empty() { Vec::new() } else { rel.split('/').collect() };
        if segments.first() == Some(&"sparql") && segments.len() == 1 {
            return self.sparql(snap, req);
        }
        if !matches!(req.method, Method::Get | Method::Head) {
            let mut r = Response::text(405, "method not allowed");
            r.allow = Some("GET, HEAD");
            return r;
        }
        let accept = req.accept.as_deref();
        match segments.as_slice() {
            [] | ["all"] => self.all(snap, accept),
            ["all", scheme] => self.listing(snap, scheme, req.query.as_deref(), accept),
            ["resource", scheme, id] => self.resource(snap, scheme, id, accept),
            ["data", scheme, id] => self.data(snap, scheme, id, accept),
            ["page", scheme, id] => self.page(snap, scheme, id),
            _ => Response::not_found(&req.path),
        }
    }

    fn lookup<'s>(&self, snap: &'s Snapshot, scheme: &str, id: &str) -> Option<(&'s Scheme, ConceptKey)> {
        let prefix = pct::decode(scheme)?;
        let local = pct::decode(id)?;
        let s = snap.scheme_by_prefix(&prefix).filter(|s| s.kind == SchemeKind::Local)?;
        let key = ConceptKey::new(s.scheme_id, local);
        snap.contains(&key).then_some((s, key))
    }

    fn concept_path(&self, kind: &str, scheme: &Scheme, key: &ConceptKey) -> String {
        format!("{}{kind}/{}/{}", self.base_path, pct::urify(&scheme.prefix), pct::urify(&key.local_id))
    }

    fn resource(&self, snap: &Snapshot, scheme: &str, id: &str, accept: Option<&str>) -> Response {
        let Some((s, key)) = self.lookup(snap, scheme, id) else {
            return Response::not_found(&format!("resource/{scheme}/{id}"));
        };
        match negotiate(accept, RESOURCE_TYPES) {
            Err(NotAcceptable) => Response::text(406, "none of text/turtle, application/n-triples, text/html is acceptable"),
            Ok(MediaType::Html) => Response::redirect(self.concept_path("page", s, &key)),
            Ok(_) => Response::redirect(self.concept_path("data", s, &key)),
        }
    }

    fn rdf(media: MediaType, triples: &[Triple]) -> Response {
        let body = match media {
            MediaType::NTriples => to_sorted_ntriples(triples),
            _ => to_turtle(triples),
        };
        Response::new(200, media, body).negotiated()
    }

    fn data(&self, snap: &Snapshot, scheme: &str, id: &str, accept: Option<&str>) -> Response {
        let Some((_, key)) = self.lookup(snap, scheme, id) else {
            return Response::not_found(&format!("data/{scheme}/{id}"));
        };
        let media = match negotiate(accept, RDF_TYPES) {
            Ok(m) => m,
            Err(NotAcceptable) => return Response::text(406, "none of text/turtle, application/n-triples is acceptable"),
        };
        let triples = snap.triples_of(&key).expect("looked up");
        Self::rdf(media, &triples)
    }

    fn page(&self, snap: &Snapshot, scheme: &str, id: &str) -> Response {
        let Some((s, key)) = self.lookup(snap, scheme, id) else {
            return Response::new(404, MediaType::Html, html::error_page(404, "unknown concept"));
        };
        let data_url = format!("{}data/{}/{}", self.base, pct::urify(&s.prefix), pct::urify(&key.local_id));
        let body = html::concept_page(&html::ConceptPage { snap, base: &self.base, key: &key, scheme: s, data_url });
        Response::new(200, MediaType::Html, body)
    }

    fn listing_url(&self, scheme: &Scheme, page: Option<usize>) -> String {
        let mut s = format!("{}all/{}", self.base, pct::urify(&scheme.prefix));
        if let Some(p) = page {
            s.push_str(&format!("?page={p}"));
        }
        s
    }

    fn all(&self, snap: &Snapshot, accept: Option<&str>) -> Response {
        let media = match negotiate(accept, RESOURCE_TYPES) {
            Ok(m) => m,
            Err(NotAcceptable) => return Response::text(406, "no acceptable representation"),
        };
        let schemes: Vec<&Scheme> = snap.schemes().collect();
        if media == MediaType::Html {
            let rows: Vec<html::SchemeRow> = schemes
                .iter()
                .map(|s| html::SchemeRow {
                    prefix: s.prefix.clone(),
                    title: s.title.clone(),
                    kind: s.kind,
                    count: snap.scheme_concept_count(s.scheme_id),
                    href: self.listing_url(s, None),
                })
                .collect();
            return Response::new(200, MediaType::Html, html::scheme_index(&self.base, &rows)).negotiated();
        }
        let mut triples = Vec::new();
        for s in schemes {
            let Ok(subject) = Iri::parse(&s.iri()) else { continue };
            triples.push(Triple::new(subject.clone(), rdf_type(), iri(crate::model::SKOS_CONCEPT_SCHEME)));
            triples.push(Triple::new(subject.clone(), iri(crate::model::DCTERMS_TITLE), Literal::plain(s.title.clone())));
            let count = snap.scheme_concept_count(s.scheme_id);
            triples.push(Triple::new(subject.clone(), iri(crate::model::RDFS_COMMENT), Literal::plain(format!("{count} concepts"))));
            if let Ok(list) = Iri::parse(&self.listing_url(s, None)) {
                triples.push(Triple::new(subject, iri(crate::model::RDFS_SEE_ALSO), list));
            }
        }
        Self::rdf(media, &triples)
    }

    fn listing(&self, snap: &Snapshot, scheme: &str, query: Option<&str>, accept: Option<&str>) -> Response {
        let Some(s) = pct::decode(scheme).and_then(|p| snap.scheme_by_prefix(&p)) else {
            return Response::not_found(&format!("all/{scheme}"));
        };
        let page = match query_param(query, "page") {
            None => 1,
            Some(v) => match v.parse::<usize>() {
                Ok(n) if n >= 1 => n,
                _ => return Response::text(400, format!("invalid page number {v:?}")),
            },
        };
        let total = snap.scheme_concept_count(s.scheme_id);
        let pages = total.div_ceil(PAGE_SIZE);
        if page > pages.max(1) {
            return Response::not_found(&format!("all/{scheme}?page={page}"));
        }
        let media = match negotiate(accept, RESOURCE_TYPES) {
            Ok(m) => m,
            Err(NotAcceptable) => return Response::text(406, "no acceptable representation"),
        };
        let locals: Vec<&str> = snap.concepts_in(s.scheme_id).skip((page - 1) * PAGE_SIZE).take(PAGE_SIZE).collect();
        if media == MediaType::Html {
            let items = locals
                .iter()
                .map(|l| {
                    let key = ConceptKey::new(s.scheme_id, *l);
                    (s.concept_iri(l), html::display_label(snap, &key))
                })
                .collect();
            let body = html::scheme_listing(&html::ListingPage {
                base: &self.base,
                scheme: s,
                page,
                pages,
                total,
                items,
                prev: (page > 1).then(|| self.listing_url(s, Some(page - 1))),
                next: (page < pages).then(|| self.listing_url(s, Some(page + 1))),
            });
            return Response::new(200, MediaType::Html, body).negotiated();
        }
        let mut triples = Vec::new();
        if let Ok(subject) = Iri::parse(&s.iri()) {
            triples.push(Triple::new(subject.clone(), rdf_type(), iri(crate::model::SKOS_CONCEPT_SCHEME)));
            triples.push(Triple::new(subject.clone(), iri(crate::model::DCTERMS_TITLE), Literal::plain(s.title.clone())));
            for l in &locals {
                if let Ok(c) = Iri::parse(&s.concept_iri(l)) {
                    triples.push(Triple::new(c, iri(crate::model::SKOS_IN_SCHEME), subject.clone()));
                }
            }
        }
        Self::rdf(media, &triples)
    }

    fn sparql(&self, snap: &Snapshot, req: &Request) -> Response {
        let text = match req.method {
            Method::Get | Method::Head => {
                if req.query.as_ref().is_some_and(|q| q.len() > MAX_GET_QUERY) {
                    return Response::text(414, format!("query string longer than {MAX_GET_QUERY} bytes; use POST"));
                }
                query_param(req.query.as_deref(), "query")
            }
            Method::Post => {
                let body = String::from_utf8_lossy(&req.body).into_owned();
                let essence = req.content_type.as_deref().map(|c| c.split(';').next().unwrap_or("").trim().to_ascii_lowercase());
                match essence.as_deref() {
                    Some("application/sparql-query") => Some(body),
                    _ => query_param(Some(&body), "query").or_else(|| query_param(req.query.as_deref(), "query")),
                }
            }
            Method::Other => {
                let mut r = Response::text(405, "method not allowed");
                r.allow = Some("GET, HEAD, POST");
                return r;
            }
        };
        let Some(text) = text.filter(|t| !t.trim().is_empty()) else {
            return Response::text(400, "missing query parameter");
        };
        match parse_select(&text) {
            Ok(q) => Response::new(200, MediaType::SparqlJson, results_json(&evaluate(&q, snap))),
            Err(e) => Response::text(400, e.to_string()),
        }
    }
}

fn iri(s: &'static str) -> Iri {
    crate::model::vocab(s)
}

/// First value of `name` in an `application/x-www-form-urlencoded` string.
pub fn query_param(query: Option<&str>, name: &str) -> Option<String> {
    query?.split('&').find_map(|pair| {
        let (k, v) = pair.split_once('=').unwrap_or((pair, ""));
        (pct::decode_form(k)? == name).then(|| pct::decode_form(v)).flatten()
    })
}

/// Holds the snapshot being served. Replacing it is atomic; requests that
/// already hold the previous snapshot finish on it.
#[derive(Debug, Clone)]
pub struct SharedSnapshot(Arc<RwLock<Snapshot>>);

impl SharedSnapshot {
    pub fn new(snap: Snapshot) -> Self {
        SharedSnapshot(Arc::new(RwLock::new(snap)))
    }

    pub fn load(&self) -> Snapshot {
        self.0.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn replace(&self, snap: Snapshot) {
        *self.0.write().unwrap_or_else(|e| e.into_inner()) = snap;
    }
}
