//! Inputs shared by the benchmarks.

use skosframe_cli::commands::{ingest_fixture, open_store};
use skosframe_cli::config::Config;
use skosframe_cli::fixture::{generate, FixtureLayout, FixtureSpec};
use skosframe_core::server::Site;
use skosframe_core::Store;

/// A generated dataset, ingested but not yet closed.
pub struct Loaded {
    pub store: Store,
    pub site: Site,
    pub layout: FixtureLayout,
    pub config: Config,
    _dir: tempfile::TempDir,
}

/// Generates and ingests a fixture of about `total` concepts.
pub fn load_fixture(total: usize) -> Loaded {
    let dir = tempfile::tempdir().expect("temp dir");
    let spec = if total == FixtureSpec::default().total() { FixtureSpec::default() } else { FixtureSpec::scaled(total, 2010) };
    let layout = generate(&spec, dir.path()).expect("fixture");
    let cfg = Config::load(Some(&layout.config), &Default::default()).expect("config");
    let site = cfg.site().expect("site");
    let mut store = open_store(&cfg).expect("store");
    ingest_fixture(&mut store, &site, &layout).expect("ingest");
    Loaded { store, site, layout, config: cfg, _dir: dir }
}
