//! Seeded synthetic datasets shaped like the nature-conservation roster: a
//! bilingual general thesaurus, protected-site categories, habitat types,
//! species, threats and biogeographical regions, each as one wide CSV table
//! with its mapping file, plus link rules and a curated link file.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skosframe_core::model::{LanguageTag, TermKind};
use skosframe_core::store::{ConceptKey, LabelRecord, SchemeRecord, Store};

use crate::config::{Config, SchemeEntry};

pub const GEMET_NAMESPACE: &str = "http://www.eionet.europa.eu/gemet/concept?cp=";
pub const EUNIS_NAMESPACE: &str = "http://eunis.eea.europa.eu/species/";
pub const RULES_FILE: &str = "links/rules.toml";
pub const MANUAL_LINKS_FILE: &str = "links/earth_regions.links";

/// Nominal full-scale sizes of the three large vocabularies.
pub const FULL_SCALE: [(&str, usize); 3] = [("EARTh", 14340), ("HABITATS", 5431), ("SPECIES", 183447)];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureSpec {
    pub seed: u64,
    pub earth: usize,
    pub iucn: usize,
    pub habitats: usize,
    pub species: usize,
    pub threats: usize,
    pub regions: usize,
    /// Every n-th habitat definition names one or two species.
    pub mention_every: usize,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec { seed: 2010, earth: 500, iucn: 8, habitats: 200, species: 1000, threats: 12, regions: 68, mention_every: 4 }
    }
}

impl FixtureSpec {
    /// Spreads `total` concepts over the large schemes in their full-scale
    /// proportions, keeping the small classifications at their fixed sizes.
    pub fn scaled(total: usize, seed: u64) -> Self {
        let base = FixtureSpec { seed, ..FixtureSpec::default() };
        let fixed = base.iucn + base.threats + base.regions;
        let rest = total.saturating_sub(fixed);
        let full: usize = FULL_SCALE.iter().map(|(_, n)| n).sum();
        let share = |n: usize| (rest * n).div_ceil(full).max(1);
        FixtureSpec {
            earth: share(FULL_SCALE[0].1),
            habitats: share(FULL_SCALE[1].1),
            species: share(FULL_SCALE[2].1),
            ..base
        }
    }

    pub fn total(&self) -> usize {
        self.earth + self.iucn + self.habitats + self.species + self.threats + self.regions
    }

    pub fn check(&self) -> Result<()> {
        for (name, n) in [
            ("EARTh", self.earth),
            ("IUCN", self.iucn),
            ("HABITATS", self.habitats),
            ("SPECIES", self.species),
            ("THREATS", self.threats),
            ("REGIONS", self.regions),
        ] {
            ensure!(n >= 1, "{name}: concept count must be at least 1");
        }
        ensure!(self.mention_every >= 1, "mention_every must be at least 1");
        Ok(())
    }
}

/// One column of a wide table and how it maps to SKOS.
#[derive(Debug, Clone, Copy)]
enum Column {
    Id,
    Label(TermKind, &'static str),
    Definition(&'static str),
    Broader,
    Related,
    TopConceptOf,
    InScheme,
    /// Foreign key consumed by a link rule, not by the mapping.
    Key(&'static str),
}

impl Column {
    fn header(self) -> String {
        match self {
            Column::Id => "ID".into(),
            Column::Label(k, lang) => format!("{}{}", k.local_name(), capitalize(lang)),
            Column::Definition(lang) => format!("definition{}", capitalize(lang)),
            Column::Broader => "BT".into(),
            Column::Related => "RT".into(),
            Column::TopConceptOf => "topConceptOf".into(),
            Column::InScheme => "inScheme".into(),
            Column::Key(name) => name.into(),
        }
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}

struct SchemeShape {
    prefix: &'static str,
    title: &'static str,
    description: &'static str,
    columns: Vec<Column>,
    roots: usize,
    max_depth: usize,
}

fn shapes() -> Vec<SchemeShape> {
    use Column::*;
    use TermKind::*;
    vec![
        SchemeShape {
            prefix: "EARTh",
            title: "Environmental Applications Reference Thesaurus",
            description: "General environmental thesaurus, English and Italian",
            columns: vec![
                Id,
                Label(PrefLabel, "en"),
                Label(PrefLabel, "it"),
                Label(AltLabel, "en"),
                Label(AltLabel, "it"),
                Definition("en"),
                Definition("it"),
                Broader,
                Related,
                TopConceptOf,
                InScheme,
                Key("LinkToGEMET"),
            ],
            roots: 12,
            max_depth: 5,
        },
        SchemeShape {
            prefix: "IUCN",
            title: "Protected area management categories",
            description: "Classification of protected sites",
            columns: vec![Id, Label(PrefLabel, "en"), Definition("en"), Broader, TopConceptOf, InScheme],
            roots: 2,
            max_depth: 1,
        },
        SchemeShape {
            prefix: "HABITATS",
            title: "Habitat types",
            description: "Taxonomy of habitats and biotopes",
            columns: vec![Id, Label(PrefLabel, "en"), Definition("en"), Broader, TopConceptOf, InScheme],
            roots: 10,
            max_depth: 4,
        },
        SchemeShape {
            prefix: "SPECIES",
            title: "Species",
            description: "Taxonomy of species, Latin and English names",
            columns: vec![
                Id,
                Label(PrefLabel, "la"),
                Label(PrefLabel, "en"),
                Label(AltLabel, "en"),
                Broader,
                TopConceptOf,
                InScheme,
                Key("EunisID"),
            ],
            roots: 20,
            max_depth: 2,
        },
        SchemeShape {
            prefix: "THREATS",
            title: "Main threats to biodiversity",
            description: "Classification of threats by biogeographic region",
            columns: vec![Id, Label(PrefLabel, "en"), Broader, TopConceptOf, InScheme],
            roots: 3,
            max_depth: 1,
        },
        SchemeShape {
            prefix: "REGIONS",
            title: "European ecological regions",
            description: "Classification of biogeographical regions",
            columns: vec![Id, Label(PrefLabel, "en"), Broader, TopConceptOf, InScheme],
            roots: 6,
            max_depth: 1,
        },
    ]
}

/// Files written by [`generate`].
#[derive(Debug, Clone)]
pub struct FixtureLayout {
    pub root: PathBuf,
    pub config: PathBuf,
    /// (prefix, csv dir, mapping file) in ingest order.
    pub tables: Vec<(String, PathBuf, PathBuf)>,
    pub rules: PathBuf,
    pub manual_links: PathBuf,
    pub concepts: usize,
}

impl FixtureLayout {
    pub fn new(root: &Path) -> Self {
        let tables = shapes()
            .iter()
            .map(|s| {
                let dir = root.join("data").join(s.prefix);
                let mapping = dir.join(format!("{}.d2s", s.prefix.to_ascii_lowercase()));
                (s.prefix.to_string(), dir, mapping)
            })
            .collect();
        FixtureLayout {
            root: root.to_path_buf(),
            config: root.join(crate::config::DEFAULT_CONFIG),
            tables,
            rules: root.join(RULES_FILE),
            manual_links: root.join(MANUAL_LINKS_FILE),
            concepts: 0,
        }
    }
}

const CONSONANTS: &[&str] = &["b", "c", "d", "f", "g", "l", "m", "n", "p", "r", "s", "t", "v", "z"];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];

fn word(rng: &mut ChaCha8Rng, syllables: std::ops::RangeInclusive<usize>) -> String {
    let n = rng.random_range(syllables);
    let mut w = String::new();
    for _ in 0..n {
        w.push_str(CONSONANTS.choose(rng).expect("non-empty"));
        w.push_str(VOWELS.choose(rng).expect("non-empty"));
    }
    if rng.random_bool(0.3) {
        w.push_str(CONSONANTS.choose(rng).expect("non-empty"));
    }
    w
}

fn phrase(rng: &mut ChaCha8Rng, words: std::ops::RangeInclusive<usize>) -> String {
    let n = rng.random_range(words);
    (0..n).map(|_| word(rng, 2..=4)).collect::<Vec<_>>().join(" ")
}

/// Draws phrases until one is new to `seen`.
fn unique(rng: &mut ChaCha8Rng, seen: &mut HashSet<String>, make: impl Fn(&mut ChaCha8Rng) -> String) -> String {
    loop {
        let p = make(rng);
        if seen.insert(p.clone()) {
            return p;
        }
    }
}

/// Parent index per concept (None for roots); depth is bounded by
/// `max_depth` edges.
fn hierarchy(rng: &mut ChaCha8Rng, n: usize, roots: usize, max_depth: usize) -> Vec<Option<usize>> {
    let roots = roots.clamp(1, n);
    let mut parent = vec![None; n];
    let mut depth = vec![0usize; n];
    let mut open: Vec<usize> = (0..roots).collect();
    for i in roots..n {
        let p = *open.choose(rng).expect("roots are open");
        parent[i] = Some(p);
        depth[i] = depth[p] + 1;
        if depth[i] < max_depth {
            open.push(i);
        }
    }
    parent
}

struct Generated {
    shape: SchemeShape,
    rows: Vec<Vec<String>>,
}

fn cell(row: &mut [String], columns: &[Column], col: impl Fn(&Column) -> bool, value: String) {
    if let Some(i) = columns.iter().position(col) {
        row[i] = value;
    }
}

fn generate_scheme(rng: &mut ChaCha8Rng, shape: SchemeShape, n: usize) -> Generated {
    let parent = hierarchy(rng, n, shape.roots, shape.max_depth);
    let cols = shape.columns.clone();
    let mut seen: HashSet<String> = HashSet::new();
    let mut rows = Vec::with_capacity(n);
    for (i, parent) in parent.iter().enumerate() {
        let mut row = vec![String::new(); cols.len()];
        let id = (i + 1).to_string();
        for (c, col) in cols.iter().enumerate() {
            row[c] = match *col {
                Column::Id => id.clone(),
                Column::Label(TermKind::PrefLabel, "la") => {
                    unique(rng, &mut seen, |r| format!("{} {}", capitalize(&word(r, 2..=4)), word(r, 2..=4)))
                }
                Column::Label(TermKind::PrefLabel, _) => unique(rng, &mut seen, |r| phrase(r, 1..=3)),
                Column::Label(_, _) if rng.random_bool(0.3) => unique(rng, &mut seen, |r| phrase(r, 1..=3)),
                Column::Definition(lang) => match lang {
                    "it" => format!("Concetto {} del tesauro", id),
                    _ => format!("Concept {} of the {} vocabulary", id, shape.prefix),
                },
                Column::Broader => parent.map(|p| (p + 1).to_string()).unwrap_or_default(),
                Column::TopConceptOf if parent.is_none() => shape.prefix.to_string(),
                Column::InScheme => shape.prefix.to_string(),
                _ => String::new(),
            };
        }
        rows.push(row);
    }
    // Related pairs between siblings-or-cousins of the general thesaurus.
    if cols.iter().any(|c| matches!(c, Column::Related)) && n > 2 {
        for i in 0..n {
            if rng.random_bool(0.1) {
                let j = rng.random_range(0..n);
                if j != i && parent[j] != Some(i) && parent[i] != Some(j) {
                    cell(&mut rows[i], &cols, |c| matches!(c, Column::Related), (j + 1).to_string());
                }
            }
        }
    }
    Generated { shape, rows }
}

fn column_of(g: &Generated, pred: impl Fn(&Column) -> bool) -> Option<usize> {
    g.shape.columns.iter().position(pred)
}

/// Rewrites habitat definitions so that every `every`-th habitat names one
/// or two species by their English or Latin preferred label.
fn plant_mentions(rng: &mut ChaCha8Rng, habitats: &mut Generated, species: &Generated, every: usize) {
    let def = column_of(habitats, |c| matches!(c, Column::Definition(_))).expect("habitat definitions");
    let en = column_of(species, |c| matches!(c, Column::Label(TermKind::PrefLabel, "en"))).expect("species en");
    let la = column_of(species, |c| matches!(c, Column::Label(TermKind::PrefLabel, "la"))).expect("species la");
    for (i, row) in habitats.rows.iter_mut().enumerate() {
        if i % every != 0 {
            continue;
        }
        let k = rng.random_range(1..=2usize);
        let names: Vec<String> = (0..k)
            .map(|_| {
                let s = &species.rows[rng.random_range(0..species.rows.len())];
                if rng.random_bool(0.5) { s[en].clone() } else { s[la].clone() }
            })
            .collect();
        row[def] = format!("Habitat {} characterised by {}.", i + 1, names.join(" and "));
    }
}

fn fill_keys(rng: &mut ChaCha8Rng, g: &mut Generated, column: &str, share: f64, first: usize) {
    let Some(c) = column_of(g, |c| matches!(c, Column::Key(k) if *k == column)) else { return };
    let mut next = first;
    for row in &mut g.rows {
        if rng.random_bool(share) {
            row[c] = next.to_string();
            next += 1;
        }
    }
}

fn csv_text(g: &Generated) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(g.shape.columns.iter().map(|c| c.header()))?;
    for r in &g.rows {
        w.write_record(r)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?)?)
}

/// D2RQ mapping for a wide table, one bridge per mapped column.
fn mapping_text(shape: &SchemeShape) -> String {
    let t = shape.prefix;
    let mut out = String::new();
    let _ = writeln!(out, "#####\n# Table {t} #\n#####");
    let _ = writeln!(out, "map:{t} a d2rq:ClassMap;");
    let _ = writeln!(out, "    d2rq:dataStorage map:database;");
    let _ = writeln!(out, "    d2rq:uriPattern \"{t}/@@{t}.ID|urify@@\";");
    let _ = writeln!(out, "    d2rq:class skos:Concept;\n.");
    for col in &shape.columns {
        let h = col.header();
        let (prop, value) = match *col {
            Column::Id | Column::Key(_) => continue,
            Column::Label(k, lang) => (format!("skos:{}", k.local_name()), format!("    d2rq:lang \"{lang}\";\n    d2rq:column \"{t}.{h}\";")),
            Column::Definition(lang) => ("skos:definition".into(), format!("    d2rq:lang \"{lang}\";\n    d2rq:column \"{t}.{h}\";")),
            Column::Broader => ("skos:broader".into(), format!("    d2rq:uriPattern \"{t}/@@{t}.{h}|urify@@\";")),
            Column::Related => ("skos:related".into(), format!("    d2rq:uriPattern \"{t}/@@{t}.{h}|urify@@\";")),
            Column::TopConceptOf => ("skos:topConceptOf".into(), format!("    d2rq:uriPattern \"@@{t}.{h}@@\";")),
            Column::InScheme => ("skos:inScheme".into(), format!("    d2rq:uriPattern \"@@{t}.{h}@@\";")),
        };
        let _ = writeln!(out, "map:{t}_{h} a d2rq:PropertyBridge;");
        let _ = writeln!(out, "    d2rq:belongsToClassMap map:{t};");
        let _ = writeln!(out, "    d2rq:property {prop};");
        let _ = writeln!(out, "{value}\n.");
    }
    out
}

fn rules_text() -> String {
    format!(
        r#"# Habitat definitions naming species; applied in both directions.
[[rule]]
name = "habitats-species"
strategy = "mention"
src = "HABITATS"
dst = "SPECIES"
note = "definition"
emit = "related"

# General thesaurus to GEMET through the stored GEMET identifier.
[[rule]]
name = "earth-gemet"
strategy = "shared-key"
src = "EARTh"
dst = "GEMET"
table = "../data/EARTh/EARTh.csv"
id_column = "ID"
key_column = "LinkToGEMET"
pattern = "{GEMET_NAMESPACE}@@EARTh.LinkToGEMET@@"

# Species to the EUNIS species pages.
[[rule]]
name = "species-eunis"
strategy = "shared-key"
src = "SPECIES"
dst = "EUNIS"
table = "../data/SPECIES/SPECIES.csv"
id_column = "ID"
key_column = "EunisID"
pattern = "{EUNIS_NAMESPACE}@@SPECIES.EunisID@@"

# Expert links between the general thesaurus and the regions.
[[rule]]
name = "earth-regions"
strategy = "manual"
file = "earth_regions.links"
"#
    )
}

fn manual_links_text(rng: &mut ChaCha8Rng, earth: usize, regions: usize) -> String {
    let mut out = String::from("# EARTh concept, relation, region\n");
    let n = 10.min(earth).min(regions);
    let mut pairs = HashSet::new();
    while pairs.len() < n {
        pairs.insert((rng.random_range(1..=earth), rng.random_range(1..=regions)));
    }
    let mut pairs: Vec<_> = pairs.into_iter().collect();
    pairs.sort_unstable();
    for (i, (e, r)) in pairs.into_iter().enumerate() {
        let rel = if i % 2 == 0 { "related" } else { "closeMatch" };
        let _ = writeln!(out, "EARTh:{e} {rel} REGIONS:{r}");
    }
    out
}

pub fn fixture_config() -> Config {
    let mut cfg = Config::default();
    for s in shapes() {
        cfg.schemes.push(SchemeEntry {
            prefix: s.prefix.into(),
            title: s.title.into(),
            kind: "local".into(),
            namespace: None,
            description: s.description.into(),
            publisher: String::new(),
        });
    }
    for (prefix, title, ns) in [("GEMET", "GEneral Multilingual Environmental Thesaurus", GEMET_NAMESPACE), ("EUNIS", "EUNIS species", EUNIS_NAMESPACE)] {
        cfg.schemes.push(SchemeEntry {
            prefix: prefix.into(),
            title: title.into(),
            kind: "remote".into(),
            namespace: Some(ns.into()),
            description: String::new(),
            publisher: String::new(),
        });
    }
    cfg
}

/// Writes the dataset under `root`. Output bytes depend only on `spec`.
pub fn generate(spec: &FixtureSpec, root: &Path) -> Result<FixtureLayout> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let counts = [spec.earth, spec.iucn, spec.habitats, spec.species, spec.threats, spec.regions];
    let mut gens: Vec<Generated> =
        shapes().into_iter().zip(counts).map(|(shape, n)| generate_scheme(&mut rng, shape, n)).collect();
    let (head, tail) = gens.split_at_mut(3);
    plant_mentions(&mut rng, &mut head[2], &tail[0], spec.mention_every);
    fill_keys(&mut rng, &mut gens[0], "LinkToGEMET", 0.3, 100);
    fill_keys(&mut rng, &mut gens[3], "EunisID", 0.5, 1);

    let mut layout = FixtureLayout::new(root);
    layout.concepts = spec.total();
    for (g, (_, dir, mapping)) in gens.iter().zip(&layout.tables) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        std::fs::write(dir.join(format!("{}.csv", g.shape.prefix)), csv_text(g)?)?;
        std::fs::write(mapping, mapping_text(&g.shape))?;
    }
    std::fs::create_dir_all(root.join("links"))?;
    std::fs::write(&layout.rules, rules_text())?;
    std::fs::write(&layout.manual_links, manual_links_text(&mut rng, spec.earth, spec.regions))?;
    std::fs::write(&layout.config, fixture_config().to_toml())?;
    Ok(layout)
}

/// Two local schemes of `n` concepts each with English prefLabels. `planted`
/// source labels have a partner exactly one substitution away; every other
/// cross-scheme pair is at least `min_distance` edits apart.
pub struct PlantedPairs {
    pub store: Store,
    pub src_scheme: u32,
    pub dst_scheme: u32,
    pub pairs: Vec<(ConceptKey, ConceptKey)>,
}

pub fn planted_pairs(seed: u64, n: usize, planted: usize, label_len: usize, min_distance: usize) -> Result<PlantedPairs> {
    ensure!(planted <= n, "cannot plant more pairs than concepts");
    ensure!(label_len >= 8, "labels must be at least 8 characters");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let letters: Vec<char> = ('a'..='z').collect();
    let random_label = |rng: &mut ChaCha8Rng| -> String { (0..label_len).map(|_| *letters.choose(rng).expect("letters")).collect() };
    let far = |a: &str, others: &[String]| others.iter().all(|o| strsim::levenshtein(a, o) >= min_distance);

    let mut src: Vec<String> = Vec::with_capacity(n);
    while src.len() < n {
        let l = random_label(&mut rng);
        if far(&l, &src) {
            src.push(l);
        }
    }
    let mut dst: Vec<String> = Vec::with_capacity(n);
    for (i, s) in src.iter().enumerate().take(planted) {
        let others: Vec<String> = src.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, s)| s.clone()).collect();
        let d = loop {
            let mut chars: Vec<char> = s.chars().collect();
            let at = rng.random_range(0..chars.len());
            let orig = chars[at];
            chars[at] = **letters.iter().filter(|c| **c != orig).collect::<Vec<_>>().choose(&mut rng).expect("letters");
            let d: String = chars.into_iter().collect();
            if far(&d, &others) {
                break d;
            }
        };
        dst.push(d);
    }
    while dst.len() < n {
        let l = random_label(&mut rng);
        if far(&l, &src) {
            dst.push(l);
        }
    }

    let mut store = Store::new();
    let a = store.upsert_scheme(SchemeRecord::local("A", "http://example.org/A/", "A"))?;
    let b = store.upsert_scheme(SchemeRecord::local("B", "http://example.org/B/", "B"))?;
    let en = LanguageTag::parse("en")?;
    for (scheme, labels) in [(a, &src), (b, &dst)] {
        for (i, l) in labels.iter().enumerate() {
            let id = (i + 1).to_string();
            store.add_concept(scheme, &id)?;
            store.add_label(LabelRecord { concept: ConceptKey::new(scheme, id), kind: TermKind::PrefLabel, lang: en.clone(), text: l.clone() })?;
        }
    }
    let pairs = (1..=planted).map(|i| (ConceptKey::new(a, i.to_string()), ConceptKey::new(b, i.to_string()))).collect();
    Ok(PlantedPairs { store, src_scheme: a, dst_scheme: b, pairs })
}
