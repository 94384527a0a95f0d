//! Link rule files: a TOML list of `[[rule]]` tables.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;
use skosframe_core::interlink::{LinkRule, SimilarityConfig, Strategy};
use skosframe_core::mapping::{Table, UriPattern};
use skosframe_core::model::{NoteKind, RelationKind};
use skosframe_core::store::Snapshot;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleFile {
    #[serde(default, rename = "rule")]
    rules: Vec<RawRule>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRule {
    name: String,
    strategy: String,
    src: Option<String>,
    dst: Option<String>,
    // mention
    note: Option<String>,
    emit: Option<String>,
    // shared-key
    table: Option<PathBuf>,
    id_column: Option<String>,
    key_column: Option<String>,
    pattern: Option<String>,
    // manual
    file: Option<PathBuf>,
    // similarity
    threshold: Option<f64>,
    w_label: Option<f64>,
    w_def: Option<f64>,
    w_neighbor: Option<f64>,
    measure: Option<String>,
    blocking: Option<bool>,
}

/// A parsed rule with the foreign-key pairs it needs.
#[derive(Debug, Clone)]
pub struct ResolvedRule {
    pub rule: LinkRule,
    pub keys: Vec<(String, String)>,
}

fn field<'a, T>(r: &'a RawRule, v: &'a Option<T>, name: &str) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| anyhow!("rule {:?}: missing `{name}`", r.name))
}

fn scheme_id(snap: &Snapshot, r: &RawRule, prefix: &str) -> Result<u32> {
    snap.scheme_by_prefix(prefix)
        .map(|s| s.scheme_id)
        .ok_or_else(|| anyhow!("rule {:?}: unknown scheme prefix {prefix:?}", r.name))
}

fn read_keys(path: &Path, id_column: &str, key_column: &str) -> Result<Vec<(String, String)>> {
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let t = Table::from_csv(name, file)?;
    let id = t.column_index(id_column).ok_or_else(|| anyhow!("{}: no column {id_column:?}", path.display()))?;
    let key = t.column_index(key_column).ok_or_else(|| anyhow!("{}: no column {key_column:?}", path.display()))?;
    Ok(t.rows.iter().map(|r| (r[id].clone(), r[key].clone())).collect())
}

/// Parses `text`, resolving scheme prefixes through `snap` and relative paths
/// against `dir`. Similarity rules start from `defaults`.
pub fn parse_rules(text: &str, dir: &Path, snap: &Snapshot, defaults: &SimilarityConfig) -> Result<Vec<ResolvedRule>> {
    let file: RuleFile = toml::from_str(text)?;
    let mut out = Vec::new();
    for r in &file.rules {
        if out.iter().any(|o: &ResolvedRule| o.rule.name == r.name) {
            bail!("duplicate rule name {:?}", r.name);
        }
        let ids = || -> Result<(u32, u32)> {
            Ok((scheme_id(snap, r, field(r, &r.src, "src")?)?, scheme_id(snap, r, field(r, &r.dst, "dst")?)?))
        };
        let mut keys = Vec::new();
        let (strategy, (src, dst)) = match r.strategy.as_str() {
            "similarity" => {
                let mut cfg = defaults.clone();
                cfg.threshold = r.threshold.unwrap_or(cfg.threshold);
                cfg.w_label = r.w_label.unwrap_or(cfg.w_label);
                cfg.w_def = r.w_def.unwrap_or(cfg.w_def);
                cfg.w_neighbor = r.w_neighbor.unwrap_or(cfg.w_neighbor);
                cfg.blocking = r.blocking.unwrap_or(cfg.blocking);
                if let Some(m) = &r.measure {
                    cfg.measure = skosframe_core::interlink::Measure::parse(m)
                        .ok_or_else(|| anyhow!("rule {:?}: unknown measure {m:?}", r.name))?;
                }
                (Strategy::Similarity(cfg), ids()?)
            }
            "shared-key" => {
                let key_column = field(r, &r.key_column, "key_column")?.clone();
                let pattern = field(r, &r.pattern, "pattern")?;
                let target_pattern =
                    UriPattern::parse(pattern).map_err(|e| anyhow!("rule {:?}: pattern: {e}", r.name))?;
                let table = dir.join(field(r, &r.table, "table")?);
                let id_column = r.id_column.as_deref().unwrap_or("ID");
                keys = read_keys(&table, id_column, &key_column)?;
                (Strategy::SharedKey { key_column, target_pattern }, ids()?)
            }
            "mention" => {
                let note = r.note.as_deref().unwrap_or("definition");
                let note_kind =
                    NoteKind::from_local_name(note).ok_or_else(|| anyhow!("rule {:?}: unknown note kind {note:?}", r.name))?;
                let emit = r.emit.as_deref().unwrap_or("related");
                let emit = RelationKind::from_local_name(emit)
                    .ok_or_else(|| anyhow!("rule {:?}: unknown relation {emit:?}", r.name))?;
                (Strategy::MentionScan { note_kind, emit }, ids()?)
            }
            "manual" => {
                let path = dir.join(field(r, &r.file, "file")?);
                let ends = match (&r.src, &r.dst) {
                    (Some(_), Some(_)) => ids()?,
                    _ => (0, 0),
                };
                (Strategy::Manual { path }, ends)
            }
            other => bail!("rule {:?}: unknown strategy {other:?}", r.name),
        };
        let rule = LinkRule { name: r.name.clone(), strategy, src_scheme: src, dst_scheme: dst };
        rule.check()?;
        out.push(ResolvedRule { rule, keys });
    }
    Ok(out)
}

pub fn load_rules(path: &Path, snap: &Snapshot, defaults: &SimilarityConfig) -> Result<Vec<ResolvedRule>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading rules {}", path.display()))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    parse_rules(&text, dir, snap, defaults).with_context(|| format!("rules {}", path.display()))
}
