//! On-disk layout: a directory holding `schemes.tsv` (the registry), one
//! N-Triples file per local scheme named `<prefix>.nt`, and
//! `provenance.tsv` listing every relation row that was not asserted.
//!
//! Registry lines are `scheme_id TAB namespace TAB title TAB publisher`,
//! optionally followed by `TAB prefix TAB local|remote|removed`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::RelationKind;
use crate::ntriples::{self, NTriplesError};

use super::{IngestReport, LoadMode, Provenance, SchemeKind, SchemeRecord, Snapshot, Store, StoreError};

pub const REGISTRY_FILE: &str = "schemes.tsv";
pub const PROVENANCE_FILE: &str = "provenance.tsv";

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Format { path: PathBuf, line: usize, message: String },
    #[error("{path}: {source}")]
    NTriples { path: PathBuf, source: NTriplesError },
    #[error(transparent)]
    Store(#[from] StoreError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PersistError + '_ {
    move |source| PersistError::Io { path: path.to_path_buf(), source }
}

fn escape_field(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            _ => out.push(c),
        }
    }
    out
}

fn unescape_field(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}

/// Default prefix for four-column registry lines: the last path segment of
/// the namespace.
fn derive_prefix(namespace: &str) -> String {
    namespace[..namespace.len() - 1]
        .rsplit(['/', '#', '?', '='])
        .find(|s| !s.is_empty())
        .unwrap_or("scheme")
        .chars()
        .filter(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        .collect()
}

pub fn registry_text(snap: &Snapshot) -> String {
    let mut out = String::new();
    for s in snap.schemes() {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            s.scheme_id,
            s.namespace,
            escape_field(&s.title),
            escape_field(&s.publisher),
            s.prefix,
            s.kind.as_str()
        ));
    }
    out
}

fn provenance_text(snap: &Snapshot) -> String {
    let data = &snap.data;
    let mut lines = Vec::new();
    for members in data.members.values() {
        for &id in members.values() {
            let src = data.iri_of(id);
            for (&(rel, dst), &prov) in &data.concept(id).expect("stored").out {
                if prov != Provenance::Asserted {
                    lines.push(format!("{src}\t{rel}\t{}\t{}\n", data.iri_of(dst), prov.as_str()));
                }
            }
        }
    }
    lines.sort_unstable();
    lines.concat()
}

/// Writes the snapshot into `dir`, replacing its previous content. Files are
/// written to a sibling directory first and swapped in by rename.
pub fn save_dir(snap: &Snapshot, dir: &Path) -> Result<(), PersistError> {
    let parent = dir.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(parent).map_err(io_err(parent))?;
    let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "store".into());
    let staging = parent.join(format!(".{name}.staging-{}", std::process::id()));
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(io_err(&staging))?;
    }
    fs::create_dir_all(&staging).map_err(io_err(&staging))?;

    let write = |file: &str, body: &str| -> Result<(), PersistError> {
        let p = staging.join(file);
        fs::write(&p, body).map_err(io_err(&p))
    };
    write(REGISTRY_FILE, &registry_text(snap))?;
    for s in snap.schemes().filter(|s| s.kind == SchemeKind::Local) {
        let triples = snap.scheme_triples_and_concepts(s.scheme_id);
        write(&format!("{}.nt", s.prefix), &ntriples::to_sorted_ntriples(&triples))?;
    }
    write(PROVENANCE_FILE, &provenance_text(snap))?;

    let retired = parent.join(format!(".{name}.retired-{}", std::process::id()));
    if dir.exists() {
        fs::rename(dir, &retired).map_err(io_err(dir))?;
    }
    fs::rename(&staging, dir).map_err(io_err(dir))?;
    if retired.exists() {
        fs::remove_dir_all(&retired).map_err(io_err(&retired))?;
    }
    Ok(())
}

pub fn parse_registry(path: &Path, text: &str) -> Result<Vec<SchemeRecord>, PersistError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |message: String| PersistError::Format { path: path.to_path_buf(), line: i + 1, message };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 && fields.len() != 6 {
            return Err(bad(format!("expected 4 or 6 tab-separated fields, found {}", fields.len())));
        }
        let id: u32 = fields[0].parse().map_err(|_| bad(format!("bad scheme id {:?}", fields[0])))?;
        let namespace = fields[1].to_string();
        let (prefix, kind) = if fields.len() == 6 {
            let kind = SchemeKind::parse(fields[5]).ok_or_else(|| bad(format!("bad scheme kind {:?}", fields[5])))?;
            (fields[4].to_string(), kind)
        } else {
            if namespace.is_empty() {
                return Err(bad("empty namespace".into()));
            }
            (derive_prefix(&namespace), SchemeKind::Local)
        };
        out.push(SchemeRecord {
            scheme_id: Some(id),
            prefix,
            namespace,
            title: unescape_field(fields[2]),
            description: String::new(),
            publisher: unescape_field(fields[3]),
            authors: Vec::new(),
            kind,
        });
    }
    Ok(out)
}

/// Loads a directory written by [`save_dir`]. Label constraints are not
/// enforced on load; run validation to find violations.
pub fn load_dir(dir: &Path) -> Result<(Store, IngestReport), PersistError> {
    let reg_path = dir.join(REGISTRY_FILE);
    let text = fs::read_to_string(&reg_path).map_err(io_err(&reg_path))?;
    let mut store = Store::new();
    let records = parse_registry(&reg_path, &text)?;
    // Removed schemes are registered as remote first so that no local
    // content can be attached, then flagged.
    let mut removed = Vec::new();
    for mut rec in records {
        if rec.kind == SchemeKind::Removed {
            rec.kind = SchemeKind::Remote;
            removed.push(rec.scheme_id.expect("registry ids are explicit"));
        }
        store.upsert_scheme(rec)?;
    }
    let mut report = IngestReport::default();
    let locals: Vec<(u32, String)> =
        store.schemes().filter(|s| s.kind == SchemeKind::Local).map(|s| (s.scheme_id, s.prefix.clone())).collect();
    for (_, prefix) in &locals {
        let path = dir.join(format!("{prefix}.nt"));
        if !path.exists() {
            continue;
        }
        let body = fs::read_to_string(&path).map_err(io_err(&path))?;
        let triples = ntriples::parse_document(&body).map_err(|source| PersistError::NTriples { path: path.clone(), source })?;
        report.merge(store.ingest_triples(&triples, LoadMode::Lenient));
    }
    for id in removed {
        store.scheme_mut(id).expect("registered").kind = SchemeKind::Removed;
    }

    let prov_path = dir.join(PROVENANCE_FILE);
    if prov_path.exists() {
        let body = fs::read_to_string(&prov_path).map_err(io_err(&prov_path))?;
        for (i, line) in body.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let bad = |message: &str| PersistError::Format { path: prov_path.clone(), line: i + 1, message: message.into() };
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 4 {
                return Err(bad("expected 4 tab-separated fields"));
            }
            let rel = RelationKind::from_local_name(f[1]).ok_or_else(|| bad("unknown relation"))?;
            let prov = Provenance::parse(f[3]).ok_or_else(|| bad("unknown provenance"))?;
            let (Some(src), Some(dst)) = (store.resolve_iri(f[0]), store.resolve_iri(f[2])) else {
                return Err(bad("unresolvable IRI"));
            };
            let data = std::sync::Arc::make_mut(&mut store.data);
            let (Some(s), Some(d)) = (data.concept_id(&src), data.key_id(&dst)) else {
                return Err(bad("relation row not present in scheme files"));
            };
            match data.concepts[s as usize].as_mut().expect("stored").out.get_mut(&(rel, d)) {
                Some(p) => *p = prov,
                None => return Err(bad("relation row not present in scheme files")),
            }
        }
    }
    Ok((store, report))
}
