//! The pipeline steps, each operating on an in-memory store so that they
//! can be composed without touching disk.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use skosframe_core::entailment::{entail, format_issues, validate, EntailmentReport};
use skosframe_core::interlink::{apply_links, candidates_csv, run_rule, ApplyReport, LinkCandidate, SimilarityConfig};
use skosframe_core::mapping::{evaluate_to_store, parse_mapping, TableSet};
use skosframe_core::model::RelationKind;
use skosframe_core::ntriples::parse_document;
use skosframe_core::query::{evaluate, parse_select, results_json};
use skosframe_core::server::Site;
use skosframe_core::store::{load_dir, save_dir, REGISTRY_FILE};
use skosframe_core::store::{IngestReport, LoadMode, SchemeKind, Snapshot, Store};

use crate::config::Config;
use crate::rules::load_rules;

/// Loads the configured store, or starts an empty one, and registers every
/// scheme of the configuration.
pub fn open_store(cfg: &Config) -> Result<Store> {
    let mut store = if cfg.store.join(REGISTRY_FILE).exists() {
        let (store, report) = load_dir(&cfg.store).with_context(|| format!("loading store {}", cfg.store.display()))?;
        for e in &report.errors {
            log::warn!("store: {e}");
        }
        store
    } else {
        Store::new()
    };
    for rec in cfg.scheme_records()? {
        let prefix = rec.prefix.clone();
        store.upsert_scheme(rec).with_context(|| format!("registering scheme {prefix}"))?;
    }
    Ok(store)
}

pub fn save_store(cfg: &Config, store: &Store) -> Result<()> {
    save_dir(&store.snapshot(), &cfg.store).with_context(|| format!("saving store {}", cfg.store.display()))
}

/// Relative URI patterns of mappings resolve against this prefix.
pub fn mapping_base(site: &Site) -> String {
    format!("{}resource/", site.base())
}

#[derive(Debug, Clone, Default)]
pub struct IngestOutcome {
    pub report: IngestReport,
    /// Skipped CSV rows and rejected triples.
    pub warnings: Vec<String>,
}

impl IngestOutcome {
    /// Per-type counts on one line.
    pub fn summary(&self) -> String {
        let r = &self.report;
        format!(
            "concepts:{} labels:{} relations:{} notes:{} top_concepts:{} skipped:{} warnings:{}",
            r.concepts,
            r.labels,
            r.relations,
            r.notes,
            r.top_concepts,
            r.skipped_null,
            self.warnings.len()
        )
    }
}

pub fn ingest(store: &mut Store, site: &Site, csv_dir: &Path, mapping: &Path, scheme: &str) -> Result<IngestOutcome> {
    match store.scheme_by_prefix(scheme) {
        None => bail!("unknown scheme prefix {scheme:?}"),
        Some(s) if s.kind != SchemeKind::Local => bail!("scheme {scheme:?} is not local"),
        Some(_) => {}
    }
    let text = std::fs::read_to_string(mapping).with_context(|| format!("reading mapping {}", mapping.display()))?;
    let spec = parse_mapping(&text).with_context(|| format!("mapping {}", mapping.display()))?;
    if !csv_dir.is_dir() {
        bail!("{} is not a directory", csv_dir.display());
    }
    let (tables, skipped) = TableSet::load_dir_lenient(csv_dir)?;
    let report = evaluate_to_store(&spec, &tables, &mapping_base(site), store)?;
    let mut warnings: Vec<String> = skipped.iter().map(|e| format!("skipped row: {e}")).collect();
    warnings.extend(report.errors.iter().map(|e| format!("rejected: {e}")));
    Ok(IngestOutcome { report, warnings })
}

/// Adds the triples of an N-Triples document under registered namespaces.
pub fn import(store: &mut Store, text: &str) -> Result<IngestOutcome> {
    let triples = parse_document(text)?;
    let report = store.ingest_triples(&triples, LoadMode::Lenient);
    let warnings = report.errors.iter().map(|e| format!("rejected: {e}")).collect();
    Ok(IngestOutcome { report, warnings })
}

/// Entailment report with one line per relation kind, zeros included.
pub fn format_entailment(r: &EntailmentReport) -> String {
    let mut out = format!("added:{} iterations:{}\n", r.total(), r.iterations);
    for k in RelationKind::ALL {
        let _ = writeln!(out, "{}\t{}", k.local_name(), r.added.get(k).copied().unwrap_or(0));
    }
    out
}

#[derive(Debug, Clone, Default)]
pub struct RuleOutcome {
    pub name: String,
    pub candidates: usize,
    pub accepted: usize,
    pub applied: ApplyReport,
}

#[derive(Debug, Clone, Default)]
pub struct LinkOutcome {
    pub rules: Vec<RuleOutcome>,
    pub candidates: Vec<LinkCandidate>,
    /// Candidate dump of every rule, in rule order.
    pub csv: String,
    pub entailment: EntailmentReport,
}

impl LinkOutcome {
    pub fn applied(&self) -> usize {
        self.rules.iter().map(|r| r.applied.applied).sum()
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for r in &self.rules {
            let _ = writeln!(out, "rule {} candidates:{} accepted:{} {}", r.name, r.candidates, r.accepted, r.applied);
        }
        let rows: usize = self.rules.iter().map(|r| r.applied.rows).sum();
        let _ = writeln!(
            out,
            "candidates:{} applied:{} rows:{} entailed:{}",
            self.candidates.len(),
            self.applied(),
            rows,
            self.entailment.total()
        );
        out
    }
}

/// Runs every rule against the store as it was before linking, applies the
/// accepted candidates in both directions and re-closes the graph.
pub fn link(store: &mut Store, rules_file: &Path, defaults: &SimilarityConfig) -> Result<LinkOutcome> {
    let snap = store.snapshot();
    let rules = load_rules(rules_file, &snap, defaults)?;
    let mut out = LinkOutcome::default();
    let mut per_rule = Vec::new();
    for r in &rules {
        let cands = run_rule(&snap, &r.rule, &r.keys).with_context(|| format!("rule {:?}", r.rule.name))?;
        per_rule.push(cands);
    }
    for (r, cands) in rules.iter().zip(per_rule) {
        let accepted: Vec<LinkCandidate> = cands.iter().filter(|c| c.accepted).cloned().collect();
        let applied = apply_links(store, &accepted, true).with_context(|| format!("rule {:?}", r.rule.name))?;
        out.rules.push(RuleOutcome { name: r.rule.name.clone(), candidates: cands.len(), accepted: accepted.len(), applied });
        out.candidates.extend(cands);
    }
    out.csv = candidates_csv(&store.snapshot(), &out.candidates)?;
    out.entailment = entail(store);
    Ok(out)
}

/// Formatted issue lines and the number of issues.
pub fn validate_report(snap: &Snapshot) -> (String, usize) {
    let issues = validate(snap);
    (format_issues(snap, &issues), issues.len())
}

pub fn query(snap: &Snapshot, text: &str) -> Result<String> {
    let q = parse_select(text).map_err(|e| anyhow!("{e}"))?;
    Ok(results_json(&evaluate(&q, snap)))
}

pub fn export(snap: &Snapshot) -> String {
    snap.to_canonical_ntriples()
}

/// Ingests every table of a generated fixture, in order.
pub fn ingest_fixture(store: &mut Store, site: &Site, layout: &crate::fixture::FixtureLayout) -> Result<Vec<(String, IngestOutcome)>> {
    let mut out = Vec::new();
    for (prefix, dir, mapping) in &layout.tables {
        out.push((prefix.clone(), ingest(store, site, dir, mapping, prefix)?));
    }
    Ok(out)
}
