//! `skosframe`: ingest tabular thesauri through D2RQ-style mappings, close
//! them under the SKOS entailments, interlink them, and publish the result
//! as Linked Data with a SPARQL endpoint.

pub mod commands;
pub mod config;
pub mod fixture;
pub mod rules;
pub mod serve;

use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use skosframe_core::entailment::entail;
use skosframe_core::server::SharedSnapshot;

use crate::config::{Config, Overrides};
use crate::fixture::FixtureSpec;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USER: u8 = 1;
pub const EXIT_INTERNAL: u8 = 2;

/// Failure on the tool's side rather than in the user's input.
#[derive(Debug, thiserror::Error)]
#[error("{0:#}")]
pub struct InternalError(pub anyhow::Error);

#[derive(Parser, Debug)]
#[command(name = "skosframe", version, about = "SKOS thesaurus pipeline and Linked Data server")]
pub struct Cli {
    /// Configuration file (default: ./skosframe.toml when present).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Store directory, overriding the configuration.
    #[arg(long, global = true)]
    pub store: Option<PathBuf>,
    /// Public base URI, overriding the configuration.
    #[arg(long, global = true)]
    pub base: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Map the CSV tables of a directory into a scheme.
    Ingest {
        /// Directory of `<table>.csv` files.
        #[arg(long)]
        csv: PathBuf,
        /// D2RQ mapping file.
        #[arg(long)]
        mapping: PathBuf,
        /// Prefix of the target local scheme.
        #[arg(long)]
        scheme: String,
    },
    /// Load an N-Triples document into the store.
    Import {
        file: PathBuf,
    },
    /// Materialize inverse, subproperty and transitive relations.
    Entail,
    /// Run link rules and apply the accepted candidates.
    Link {
        /// Rule file (TOML, one `[[rule]]` table per rule).
        #[arg(long)]
        rules: PathBuf,
        /// Where to write the candidate CSV.
        #[arg(long)]
        candidates: Option<PathBuf>,
    },
    /// Check integrity constraints; exits 1 when issues are found.
    Validate,
    /// Evaluate a SPARQL SELECT query and print JSON results.
    Query {
        /// Query text.
        #[arg(conflicts_with = "file", required_unless_present = "file")]
        query: Option<String>,
        /// Read the query from a file.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Serve the store over HTTP until interrupted.
    Serve {
        /// Listen address, overriding the configuration.
        #[arg(long)]
        listen: Option<String>,
    },
    /// Write the closed graph as canonical N-Triples.
    Export {
        /// Output format; only `ntriples` is supported.
        #[arg(long, default_value = "ntriples")]
        format: String,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic dataset with mappings, link rules and config.
    Fixture {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = FixtureSpec::default().seed)]
        seed: u64,
        /// Total concept count; the large schemes grow proportionally.
        #[arg(long)]
        scale: Option<usize>,
        #[arg(long)]
        earth: Option<usize>,
        #[arg(long)]
        habitats: Option<usize>,
        #[arg(long)]
        species: Option<usize>,
    },
}

fn load_config(cli: &Cli, listen: Option<&String>) -> Result<Config> {
    let ov = Overrides { store: cli.store.clone(), base: cli.base.clone(), listen: listen.cloned() };
    Config::load(cli.config.as_deref(), &ov)
}

fn save(cfg: &Config, store: &skosframe_core::Store) -> Result<()> {
    commands::save_store(cfg, store).map_err(|e| InternalError(e).into())
}

/// Runs one command, writing data to `out` and diagnostics to `err`.
/// Returns the process exit code.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    match execute(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            if e.downcast_ref::<InternalError>().is_some() {
                EXIT_INTERNAL
            } else {
                EXIT_USER
            }
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8> {
    let listen = match &cli.command {
        Command::Serve { listen } => listen.as_ref(),
        _ => None,
    };
    let cfg = load_config(cli, listen)?;
    match &cli.command {
        Command::Ingest { csv, mapping, scheme } => {
            if !mapping.is_file() {
                anyhow::bail!("mapping file {} not found", mapping.display());
            }
            let mut store = commands::open_store(&cfg)?;
            let outcome = commands::ingest(&mut store, &cfg.site()?, csv, mapping, scheme)?;
            for w in &outcome.warnings {
                writeln!(err, "warning: {w}")?;
            }
            save(&cfg, &store)?;
            writeln!(out, "{}", outcome.summary())?;
        }
        Command::Import { file } => {
            let text = std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
            let mut store = commands::open_store(&cfg)?;
            let outcome = commands::import(&mut store, &text)?;
            for w in &outcome.warnings {
                writeln!(err, "warning: {w}")?;
            }
            save(&cfg, &store)?;
            writeln!(out, "{}", outcome.summary())?;
        }
        Command::Entail => {
            let mut store = commands::open_store(&cfg)?;
            let report = entail(&mut store);
            save(&cfg, &store)?;
            write!(out, "{}", commands::format_entailment(&report))?;
        }
        Command::Link { rules, candidates } => {
            let mut store = commands::open_store(&cfg)?;
            let outcome = commands::link(&mut store, rules, &cfg.similarity.to_config()?)?;
            if let Some(path) = candidates {
                std::fs::write(path, &outcome.csv).with_context(|| format!("writing {}", path.display()))?;
            }
            save(&cfg, &store)?;
            write!(out, "{}", outcome.summary())?;
        }
        Command::Validate => {
            let store = commands::open_store(&cfg)?;
            let (text, n) = commands::validate_report(&store.snapshot());
            write!(out, "{text}")?;
            if n > 0 {
                writeln!(err, "{n} issue(s)")?;
                return Ok(EXIT_USER);
            }
        }
        Command::Query { query, file } => {
            let text = match (query, file) {
                (Some(q), _) => q.clone(),
                (None, Some(f)) => std::fs::read_to_string(f).with_context(|| format!("reading {}", f.display()))?,
                (None, None) => anyhow::bail!("no query given"),
            };
            let store = commands::open_store(&cfg)?;
            writeln!(out, "{}", commands::query(&store.snapshot(), &text)?)?;
        }
        Command::Export { format, out: path } => {
            if format != "ntriples" {
                anyhow::bail!("unsupported export format {format:?}");
            }
            let store = commands::open_store(&cfg)?;
            let text = commands::export(&store.snapshot());
            match path {
                Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
                None => out.write_all(text.as_bytes())?,
            }
        }
        Command::Fixture { out: dir, seed, scale, earth, habitats, species } => {
            let mut spec = match scale {
                Some(n) => FixtureSpec::scaled(*n, *seed),
                None => FixtureSpec { seed: *seed, ..FixtureSpec::default() },
            };
            spec.earth = earth.unwrap_or(spec.earth);
            spec.habitats = habitats.unwrap_or(spec.habitats);
            spec.species = species.unwrap_or(spec.species);
            let layout = fixture::generate(&spec, dir)?;
            writeln!(out, "schemes:{} concepts:{} dir:{}", layout.tables.len(), layout.concepts, dir.display())?;
        }
        Command::Serve { .. } => return serve_blocking(&cfg, err),
    }
    Ok(EXIT_OK)
}

fn serve_blocking(cfg: &Config, err: &mut dyn Write) -> Result<u8> {
    let site = cfg.site()?;
    let mut store = commands::open_store(cfg)?;
    let report = entail(&mut store);
    if report.total() > 0 {
        log::info!("closed store before serving: {report}");
    }
    let snapshot = SharedSnapshot::new(store.snapshot());
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(|e| InternalError(e.into()))?;
    rt.block_on(async {
        let listener = serve::bind(&cfg.listen).await?;
        let _ = writeln!(err, "serving {} on http://{}", site.base(), listener.local_addr()?);
        let reloader = serve::spawn_reloader(cfg.store.clone(), snapshot.clone(), Duration::from_secs(1));
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
            log::info!("shutting down");
        };
        let res = serve::serve(listener, site, snapshot, shutdown).await;
        reloader.abort();
        res
    })?;
    Ok(EXIT_OK)
}
