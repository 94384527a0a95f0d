use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use skosframe_core::interlink::{Measure, SimilarityConfig};
use skosframe_core::server::Site;
use skosframe_core::store::{SchemeKind, SchemeRecord};

pub const DEFAULT_CONFIG: &str = "skosframe.toml";
pub const DEFAULT_BASE: &str = "http://localhost:2020/";
pub const DEFAULT_LISTEN: &str = "127.0.0.1:2020";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeEntry {
    pub prefix: String,
    pub title: String,
    #[serde(default = "local_kind")]
    pub kind: String,
    /// Required for remote schemes; local schemes default to
    /// `{base}resource/{prefix}/`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub namespace: Option<String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub publisher: String,
}

fn local_kind() -> String {
    "local".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimilaritySection {
    #[serde(default = "defaults::w_label")]
    pub w_label: f64,
    #[serde(default = "defaults::w_def")]
    pub w_def: f64,
    #[serde(default = "defaults::w_neighbor")]
    pub w_neighbor: f64,
    #[serde(default = "defaults::threshold")]
    pub threshold: f64,
    #[serde(default = "defaults::measure")]
    pub measure: String,
    #[serde(default = "defaults::blocking")]
    pub blocking: bool,
}

mod defaults {
    use skosframe_core::interlink::SimilarityConfig;

    pub fn w_label() -> f64 {
        SimilarityConfig::default().w_label
    }
    pub fn w_def() -> f64 {
        SimilarityConfig::default().w_def
    }
    pub fn w_neighbor() -> f64 {
        SimilarityConfig::default().w_neighbor
    }
    pub fn threshold() -> f64 {
        SimilarityConfig::default().threshold
    }
    pub fn measure() -> String {
        SimilarityConfig::default().measure.as_str().to_string()
    }
    pub fn blocking() -> bool {
        true
    }
}

impl Default for SimilaritySection {
    fn default() -> Self {
        SimilaritySection {
            w_label: defaults::w_label(),
            w_def: defaults::w_def(),
            w_neighbor: defaults::w_neighbor(),
            threshold: defaults::threshold(),
            measure: defaults::measure(),
            blocking: true,
        }
    }
}

impl SimilaritySection {
    pub fn to_config(&self) -> Result<SimilarityConfig> {
        let measure = Measure::parse(&self.measure).with_context(|| format!("unknown similarity measure {:?}", self.measure))?;
        let cfg = SimilarityConfig {
            w_label: self.w_label,
            w_def: self.w_def,
            w_neighbor: self.w_neighbor,
            threshold: self.threshold,
            measure,
            blocking: self.blocking,
        };
        cfg.check().map_err(anyhow::Error::msg)?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "default_store")]
    pub store: PathBuf,
    #[serde(default = "default_base")]
    pub base: String,
    #[serde(default = "default_listen")]
    pub listen: String,
    #[serde(default)]
    pub similarity: SimilaritySection,
    #[serde(default, rename = "scheme")]
    pub schemes: Vec<SchemeEntry>,
}

fn default_store() -> PathBuf {
    PathBuf::from("store")
}
fn default_base() -> String {
    DEFAULT_BASE.into()
}
fn default_listen() -> String {
    DEFAULT_LISTEN.into()
}

impl Default for Config {
    fn default() -> Self {
        Config {
            store: default_store(),
            base: default_base(),
            listen: default_listen(),
            similarity: SimilaritySection::default(),
            schemes: Vec::new(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub store: Option<PathBuf>,
    pub base: Option<String>,
    pub listen: Option<String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let cfg: Config = toml::from_str(text)?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Reads `path`, or `skosframe.toml` in the working directory when no
    /// path is given and that file exists. A relative store path is taken
    /// relative to the config file.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Config> {
        let path = match path {
            Some(p) => Some(p.to_path_buf()),
            None => Some(PathBuf::from(DEFAULT_CONFIG)).filter(|p| p.exists()),
        };
        let mut cfg = match &path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                let mut cfg = Config::parse(&text).with_context(|| format!("config {}", p.display()))?;
                if cfg.store.is_relative() {
                    if let Some(dir) = p.parent() {
                        cfg.store = dir.join(&cfg.store);
                    }
                }
                cfg
            }
            None => Config::default(),
        };
        if let Some(s) = &overrides.store {
            cfg.store = s.clone();
        }
        if let Some(b) = &overrides.base {
            cfg.base = b.clone();
        }
        if let Some(l) = &overrides.listen {
            cfg.listen = l.clone();
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        Site::new(&self.base)?;
        let mut seen = BTreeSet::new();
        for s in &self.schemes {
            if !seen.insert(s.prefix.as_str()) {
                bail!("duplicate scheme prefix {:?}", s.prefix);
            }
            match SchemeKind::parse(&s.kind) {
                Some(SchemeKind::Local) => {}
                Some(SchemeKind::Remote) if s.namespace.is_none() => {
                    bail!("remote scheme {:?} needs a namespace", s.prefix)
                }
                Some(SchemeKind::Remote) => {}
                _ => bail!("scheme {:?}: kind must be local or remote, not {:?}", s.prefix, s.kind),
            }
        }
        self.similarity.to_config()?;
        Ok(())
    }

    pub fn site(&self) -> Result<Site> {
        Ok(Site::new(&self.base)?)
    }

    /// Registry records in file order.
    pub fn scheme_records(&self) -> Result<Vec<SchemeRecord>> {
        let site = self.site()?;
        let mut out = Vec::new();
        for s in &self.schemes {
            let kind = SchemeKind::parse(&s.kind).expect("checked");
            let namespace = s.namespace.clone().unwrap_or_else(|| site.namespace_for(&s.prefix));
            let mut rec = match kind {
                SchemeKind::Remote => SchemeRecord::remote(&s.prefix, &namespace, &s.title),
                _ => SchemeRecord::local(&s.prefix, &namespace, &s.title),
            };
            rec.description = s.description.clone();
            rec.publisher = s.publisher.clone();
            out.push(rec);
        }
        Ok(out)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
