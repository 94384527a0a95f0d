//! End-to-end acceptance criteria. Prints one PASS/FAIL line per criterion
//! and exits non-zero when any of them fails.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use rio_api::model::Subject;
use rio_api::parser::TriplesParser;
use rio_turtle::{NTriplesParser, TurtleError, TurtleParser};
use skosframe_cli::commands;
use skosframe_cli::config::Config;
use skosframe_cli::fixture::{generate, planted_pairs, FixtureLayout, FixtureSpec};
use skosframe_cli::serve;
use skosframe_core::entailment::{entail, validate, IssueKind};
use skosframe_core::interlink::{link_similarity, SimilarityConfig};
use skosframe_core::mapping::{evaluate, parse_mapping, TableSet};
use skosframe_core::model::{Iri, LanguageTag, Literal, RelationKind, Term, TermKind};
use skosframe_core::ntriples::format_ntriples;
use skosframe_core::query::{parse_select, GraphIndex};
use skosframe_core::server::{SharedSnapshot, Site};
use skosframe_core::store::{load_dir, ConceptKey, LabelRecord, Provenance, RelationRecord, SchemeKind, SchemeRecord, Snapshot, Store};
use skosframe_core::Triple;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);
type Seed<'a> = (IssueKind, Box<dyn Fn(&mut Store) -> Result<(), String> + 'a>);

fn main() {
    let started = Instant::now();
    let pipeline = Pipeline::build();
    let criteria: Vec<Criterion<'_>> = vec![
        ("1 transitive closure matches reachability", Box::new(closure_matches_reachability)),
        ("2 mapping examples produce the expected triples", Box::new(mapping_examples)),
        ("3 query results match a naive evaluator", Box::new(query_matches_naive)),
        ("4 every concept dereferences over HTTP", Box::new(|| crawl_fixture(pipeline.as_ref()?))),
        ("5 link topology after linking", Box::new(|| link_topology(pipeline.as_ref()?))),
        ("6 similarity recovers planted pairs", Box::new(planted_recovery)),
        ("7 each violation class is detected once", Box::new(|| violations_detected(pipeline.as_ref()?))),
        ("8 export/import round trip is byte-identical", Box::new(|| round_trip(pipeline.as_ref()?))),
        ("9 dereference latency at 200k concepts", Box::new(latency_at_scale)),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let t = Instant::now();
        let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(format!("panicked: {}", panic_text(&p))));
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS  {name}: {detail} ({secs:.1}s)"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail} ({secs:.1}s)");
            }
        }
    }
    println!("{} of {} criteria passed in {:.1}s", criteria.len() - failed, criteria.len(), started.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn panic_text(p: &Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// ---------------------------------------------------------------------------
// Shared fixture pipeline, run through the real binary.

struct Pipeline {
    _dir: tempfile::TempDir,
    layout: FixtureLayout,
    config: PathBuf,
    store_dir: PathBuf,
}

fn skosframe(args: &[&str]) -> Result<(i32, String, String), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_skosframe"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .map_err(|e| format!("spawning skosframe: {e}"))?;
    Ok((
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    ))
}

fn skosframe_ok(args: &[&str]) -> Result<String, String> {
    let (code, out, errs) = skosframe(args)?;
    ensure(code == 0, || format!("skosframe {} exited {code}: {}", args.join(" "), errs.trim()))?;
    Ok(out)
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

impl Pipeline {
    /// fixture, ingest of every table, entail, link and validate.
    fn build() -> Result<Pipeline, String> {
        let dir = tempfile::tempdir().map_err(err)?;
        let root = dir.path().join("fixture");
        skosframe_ok(&["fixture", "--out", path_str(&root)])?;
        let layout = FixtureLayout::new(&root);
        let config = layout.config.clone();
        let cfg = path_str(&config);
        for (prefix, csv, mapping) in &layout.tables {
            skosframe_ok(&["--config", cfg, "ingest", "--csv", path_str(csv), "--mapping", path_str(mapping), "--scheme", prefix])?;
        }
        skosframe_ok(&["--config", cfg, "entail"])?;
        let candidates = root.join("candidates.csv");
        skosframe_ok(&["--config", cfg, "link", "--rules", path_str(&layout.rules), "--candidates", path_str(&candidates)])?;
        skosframe_ok(&["--config", cfg, "validate"])?;
        let store_dir = Config::load(Some(&config), &Default::default()).map_err(err)?.store;
        Ok(Pipeline { _dir: dir, layout, config, store_dir })
    }

    fn snapshot(&self) -> Result<Snapshot, String> {
        Ok(load_dir(&self.store_dir).map_err(err)?.0.snapshot())
    }
}

// ---------------------------------------------------------------------------
// Running server on an ephemeral port.

struct Server {
    addr: SocketAddr,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl Server {
    fn start(site: Site, snap: Snapshot) -> Result<Server, String> {
        let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(err)?;
        let listener = rt.block_on(serve::bind("127.0.0.1:0")).map_err(err)?;
        let addr = listener.local_addr().map_err(err)?;
        let (tx, rx) = tokio::sync::oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            let shutdown = async {
                let _ = rx.await;
            };
            if let Err(e) = rt.block_on(serve::serve(listener, site, SharedSnapshot::new(snap), shutdown)) {
                eprintln!("server error: {e:#}");
            }
        });
        Ok(Server { addr, stop: Some(tx), thread: Some(thread) })
    }

    fn origin(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

struct Reply {
    status: u16,
    location: Option<String>,
    vary: Option<String>,
    body: String,
}

fn agent() -> ureq::Agent {
    ureq::AgentBuilder::new().redirects(0).timeout(Duration::from_secs(30)).build()
}

fn get(agent: &ureq::Agent, url: &str, accept: &str) -> Result<Reply, String> {
    let resp = match agent.get(url).set("Accept", accept).call() {
        Ok(r) => r,
        Err(ureq::Error::Status(_, r)) => r,
        Err(e) => return Err(format!("GET {url}: {e}")),
    };
    Ok(Reply {
        status: resp.status(),
        location: resp.header("Location").map(str::to_string),
        vary: resp.header("Vary").map(str::to_string),
        body: resp.into_string().map_err(|e| format!("GET {url}: {e}"))?,
    })
}

/// Absolute request URL for a Location header value.
fn follow(origin: &str, location: &str) -> String {
    if location.starts_with("http://") || location.starts_with("https://") {
        location.to_string()
    } else {
        format!("{origin}{location}")
    }
}

/// Dereferences `url` with content negotiation: a 303 to the expected
/// document, which answers 200. Returns the document URL and body.
fn dereference(agent: &ureq::Agent, origin: &str, url: &str, accept: &str, doc_kind: &str) -> Result<(String, String), String> {
    let r = get(agent, url, accept)?;
    ensure(r.status == 303, || format!("{url} ({accept}) answered {} instead of 303", r.status))?;
    ensure(r.vary.as_deref().is_some_and(|v| v.contains("Accept")), || format!("{url}: 303 without Vary: Accept"))?;
    let loc = r.location.ok_or_else(|| format!("{url}: 303 without Location"))?;
    ensure(loc.contains(&format!("/{doc_kind}/")), || format!("{url} ({accept}) redirected to {loc}"))?;
    let doc = follow(origin, &loc);
    let d = get(agent, &doc, accept)?;
    ensure(d.status == 200, || format!("{doc} answered {}", d.status))?;
    Ok((doc, d.body))
}

fn turtle_subjects(body: &str) -> Result<Vec<String>, String> {
    let mut subjects = Vec::new();
    TurtleParser::new(body.as_bytes(), None)
        .parse_all(&mut |t| -> Result<(), TurtleError> {
            if let Subject::NamedNode(n) = t.subject {
                subjects.push(n.iri.to_string());
            } else {
                subjects.push(t.subject.to_string());
            }
            Ok(())
        })
        .map_err(|e| format!("turtle: {e}"))?;
    Ok(subjects)
}

fn ntriples_count(body: &str) -> Result<usize, String> {
    let mut n = 0;
    NTriplesParser::new(body.as_bytes())
        .parse_all(&mut |_| -> Result<(), TurtleError> {
            n += 1;
            Ok(())
        })
        .map_err(|e| format!("n-triples: {e}"))?;
    Ok(n)
}

fn hrefs(html: &str) -> Vec<String> {
    let re = Regex::new(r#"href="([^"]*)""#).expect("regex");
    re.captures_iter(html)
        .map(|c| c[1].replace("&quot;", "\"").replace("&lt;", "<").replace("&gt;", ">").replace("&amp;", "&"))
        .collect()
}

// ---------------------------------------------------------------------------
// 1. Entailment against brute-force reachability.

fn closure_matches_reachability() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut edges_total = 0;
    for case in 0..100 {
        let n = rng.random_range(2..=50usize);
        let mut store = Store::new();
        let s = store.upsert_scheme(SchemeRecord::local("T", "http://example.org/T/", "T")).map_err(err)?;
        for i in 0..n {
            store.add_concept(s, &i.to_string()).map_err(err)?;
        }
        let mut up: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, parents) in up.iter_mut().enumerate() {
            for j in 0..i {
                if rng.random_bool(0.1) {
                    parents.push(j);
                    let rec = RelationRecord::asserted(ConceptKey::new(s, i.to_string()), RelationKind::Broader, ConceptKey::new(s, j.to_string()));
                    store.add_relation(rec).map_err(err)?;
                    edges_total += 1;
                }
            }
        }
        entail(&mut store);
        let again = entail(&mut store);
        ensure(again.total() == 0, || format!("case {case}: second pass added {}", again.total()))?;

        let reach: Vec<BTreeSet<usize>> = (0..n)
            .map(|start| {
                let mut seen = BTreeSet::new();
                let mut queue: VecDeque<usize> = up[start].iter().copied().collect();
                while let Some(x) = queue.pop_front() {
                    if seen.insert(x) {
                        queue.extend(up[x].iter().copied());
                    }
                }
                seen
            })
            .collect();
        let snap = store.snapshot();
        let targets = |i: usize, rel: RelationKind| -> BTreeSet<usize> {
            snap.targets(&ConceptKey::new(s, i.to_string()), rel).iter().map(|k| k.local_id.parse().expect("numeric id")).collect()
        };
        for i in 0..n {
            let got = targets(i, RelationKind::BroaderTransitive);
            ensure(got == reach[i], || format!("case {case} node {i}: broaderTransitive {got:?}, reachable {:?}", reach[i]))?;
            let below: BTreeSet<usize> = (0..n).filter(|&k| reach[k].contains(&i)).collect();
            let got = targets(i, RelationKind::NarrowerTransitive);
            ensure(got == below, || format!("case {case} node {i}: narrowerTransitive {got:?}, expected {below:?}"))?;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    ensure(secs < 10.0, || format!("took {secs:.1}s, limit 10s"))?;
    Ok(format!("100 DAGs, {edges_total} broader edges, exact match, idempotent"))
}

// ---------------------------------------------------------------------------
// 2. Mapping examples.

const MAPPING_BASE: &str = "http://example.org/resource/";
const SKOS: &str = "http://www.w3.org/2004/02/skos/core#";
const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn nt_iri(s: &str) -> String {
    format!("<{s}>")
}

fn nt_lit(text: &str, lang: &str) -> String {
    format!("\"{text}\"@{lang}")
}

fn line(s: &str, p: &str, o: String) -> String {
    format!("{} <{SKOS}{p}> {o} .", nt_iri(s))
}

fn type_line(s: &str) -> String {
    format!("{} <{RDF_TYPE}> <{SKOS}Concept> .", nt_iri(s))
}

fn evaluate_example(name: &str, mapping: &str) -> Result<BTreeSet<String>, String> {
    let dir = fixtures_dir().join(name);
    let text = std::fs::read_to_string(dir.join(mapping)).map_err(err)?;
    let spec = parse_mapping(&text).map_err(err)?;
    let tables = TableSet::load_dir(&dir).map_err(err)?;
    let ev = evaluate(&spec, &tables, MAPPING_BASE).map_err(err)?;
    Ok(ev.triples.iter().map(format_ntriples).map(|l| l.trim_end().to_string()).collect())
}

fn compare_sets(what: &str, got: &BTreeSet<String>, want: &BTreeSet<String>) -> Result<(), String> {
    let missing: Vec<&String> = want.difference(got).collect();
    let extra: Vec<&String> = got.difference(want).collect();
    ensure(missing.is_empty() && extra.is_empty(), || format!("{what}: missing {missing:?}, unexpected {extra:?}"))
}

fn mapping_examples() -> Outcome {
    let e = |id: &str| format!("{MAPPING_BASE}EARTh/{id}");
    let mut a = BTreeSet::new();
    for (id, en, it) in [("1", "environment", "ambiente"), ("2", "water", "acqua"), ("3", "water body", "corpo idrico")] {
        a.insert(type_line(&e(id)));
        a.insert(line(&e(id), "prefLabel", nt_lit(en, "en")));
        a.insert(line(&e(id), "prefLabel", nt_lit(it, "it")));
        a.insert(line(&e(id), "inScheme", nt_iri(&format!("{MAPPING_BASE}EARTh"))));
    }
    a.insert(line(&e("2"), "broader", nt_iri(&e("1"))));
    a.insert(line(&e("3"), "broader", nt_iri(&e("2"))));
    let got_a = evaluate_example("example_a", "earth.d2s")?;
    compare_sets("example A", &got_a, &a)?;

    let gemet7 = "http://www.eionet.europa.eu/gemet/concept?cp=7";
    let mut b = BTreeSet::new();
    for (id, en, it) in [("1", "environment", "ambiente"), ("2", "water", "acqua"), ("3", "water body", "corpo idrico")] {
        b.insert(type_line(&e(id)));
        b.insert(line(&e(id), "prefLabel", nt_lit(en, "en")));
        b.insert(line(&e(id), "prefLabel", nt_lit(it, "it")));
    }
    b.insert(line(&e("2"), "altLabel", nt_lit("aqua", "en")));
    b.insert(line(&e("2"), "definition", nt_lit("A transparent, odourless liquid.", "en")));
    b.insert(line(&e("2"), "broader", nt_iri(&e("1"))));
    b.insert(line(&e("3"), "broader", nt_iri(&e("2"))));
    b.insert(line(&e("3"), "broader", nt_iri(gemet7)));
    b.insert(line(&e("1"), "narrower", nt_iri(&e("2"))));
    b.insert(line(&e("2"), "narrower", nt_iri(&e("3"))));
    b.insert(line(&e("2"), "exactMatch", nt_iri(gemet7)));
    let got_b = evaluate_example("example_b", "earth.d2s")?;
    compare_sets("example B", &got_b, &b)?;
    Ok(format!("example A {} triples, example B {} triples", got_a.len(), got_b.len()))
}

// ---------------------------------------------------------------------------
// 3. Query evaluation against a naive nested-loop evaluator.

#[derive(Clone, Debug)]
enum Slot {
    Var(&'static str),
    Const(String),
}

#[derive(Clone, Debug)]
enum Cond {
    Lang(&'static str, &'static str),
    Equals(&'static str, String),
    Regex(&'static str, &'static str),
}

#[derive(Clone, Debug)]
struct GenQuery {
    select: Vec<&'static str>,
    star: bool,
    patterns: Vec<[Slot; 3]>,
    conds: Vec<Cond>,
    limit: Option<usize>,
    offset: Option<usize>,
}

/// Terms in N-Triples form; literals are `"lex"` or `"lex"@tag`.
type Row3 = [String; 3];

const VARS: [&str; 3] = ["a", "b", "c"];

fn random_graph(rng: &mut ChaCha8Rng) -> Vec<Row3> {
    let n = rng.random_range(1..=200usize);
    let mut set = BTreeSet::new();
    while set.len() < n {
        let s = format!("<http://example.org/n{}>", rng.random_range(0..8));
        let p = format!("<http://example.org/p{}>", rng.random_range(0..4));
        let o = match rng.random_range(0..4) {
            0 | 1 => format!("<http://example.org/n{}>", rng.random_range(0..8)),
            2 => format!("\"w{}\"@{}", rng.random_range(0..6), ["en", "it"][rng.random_range(0..2)]),
            _ => format!("\"w{}\"", rng.random_range(0..6)),
        };
        set.insert([s, p, o]);
    }
    set.into_iter().collect()
}

fn random_query(rng: &mut ChaCha8Rng, graph: &[Row3]) -> GenQuery {
    let np = rng.random_range(1..=3usize);
    let mut patterns = Vec::new();
    for _ in 0..np {
        let t = graph.choose(rng).expect("non-empty graph");
        let slot = |rng: &mut ChaCha8Rng, i: usize, var_p: f64| {
            if rng.random_bool(var_p) {
                Slot::Var(VARS.choose(rng).expect("vars"))
            } else {
                Slot::Const(t[i].clone())
            }
        };
        patterns.push([slot(rng, 0, 0.6), slot(rng, 1, 0.25), slot(rng, 2, 0.6)]);
    }
    if !patterns.iter().flatten().any(|s| matches!(s, Slot::Var(_))) {
        patterns[0][0] = Slot::Var("a");
    }
    let mut used: Vec<&'static str> = Vec::new();
    for s in patterns.iter().flatten() {
        if let Slot::Var(v) = s {
            if !used.contains(v) {
                used.push(v);
            }
        }
    }
    let mut conds = Vec::new();
    if rng.random_bool(0.4) {
        let v = *used.choose(rng).expect("a variable");
        conds.push(match rng.random_range(0..3) {
            0 => Cond::Lang(v, ["en", "it", ""][rng.random_range(0..3)]),
            1 => {
                let t = graph.choose(rng).expect("non-empty graph");
                Cond::Equals(v, t[rng.random_range(0..3)].clone())
            }
            _ => Cond::Regex(v, ["^w[0-2]", "3", "w"][rng.random_range(0..3)]),
        });
    }
    let star = rng.random_bool(0.3);
    let select = if star {
        used.clone()
    } else {
        let mut pick: Vec<&'static str> = used.iter().copied().filter(|_| rng.random_bool(0.6)).collect();
        if pick.is_empty() {
            pick.push(used[0]);
        }
        pick
    };
    let limit = rng.random_bool(0.3).then(|| rng.random_range(0..10));
    let offset = rng.random_bool(0.3).then(|| rng.random_range(0..4));
    GenQuery { select, star, patterns, conds, limit, offset }
}

fn render_query(q: &GenQuery) -> String {
    let slot = |s: &Slot| match s {
        Slot::Var(v) => format!("?{v}"),
        Slot::Const(c) => c.clone(),
    };
    let mut text = String::from("SELECT ");
    if q.star {
        text.push('*');
    } else {
        text.push_str(&q.select.iter().map(|v| format!("?{v}")).collect::<Vec<_>>().join(" "));
    }
    text.push_str(" WHERE {\n");
    for p in &q.patterns {
        text.push_str(&format!("  {} {} {} .\n", slot(&p[0]), slot(&p[1]), slot(&p[2])));
    }
    for c in &q.conds {
        text.push_str(&match c {
            Cond::Lang(v, tag) => format!("  FILTER(lang(?{v}) = \"{tag}\")\n"),
            Cond::Equals(v, t) => format!("  FILTER(?{v} = {t})\n"),
            Cond::Regex(v, re) => format!("  FILTER(regex(?{v}, \"{re}\"))\n"),
        });
    }
    text.push('}');
    if let Some(l) = q.limit {
        text.push_str(&format!(" LIMIT {l}"));
    }
    if let Some(o) = q.offset {
        text.push_str(&format!(" OFFSET {o}"));
    }
    text
}

fn literal_parts(t: &str) -> Option<(&str, &str)> {
    let rest = t.strip_prefix('"')?;
    let end = rest.rfind('"')?;
    let lang = rest[end + 1..].strip_prefix('@').unwrap_or("");
    Some((&rest[..end], lang))
}

fn naive_eval(q: &GenQuery, graph: &[Row3]) -> Vec<Vec<String>> {
    let mut bindings: Vec<HashMap<&'static str, String>> = vec![HashMap::new()];
    for p in &q.patterns {
        let mut next = Vec::new();
        for b in &bindings {
            'triples: for t in graph {
                let mut nb = b.clone();
                for (slot, term) in p.iter().zip(t.iter()) {
                    match slot {
                        Slot::Const(c) if c != term => continue 'triples,
                        Slot::Const(_) => {}
                        Slot::Var(v) => match nb.get(v) {
                            Some(bound) if bound != term => continue 'triples,
                            Some(_) => {}
                            None => {
                                nb.insert(v, term.clone());
                            }
                        },
                    }
                }
                next.push(nb);
            }
        }
        bindings = next;
    }
    let keep = |b: &HashMap<&'static str, String>| {
        q.conds.iter().all(|c| match c {
            Cond::Lang(v, tag) => literal_parts(&b[v]).is_some_and(|(_, l)| l.eq_ignore_ascii_case(tag)),
            Cond::Equals(v, t) => &b[v] == t,
            Cond::Regex(v, re) => literal_parts(&b[v]).is_some_and(|(lex, _)| Regex::new(re).expect("regex").is_match(lex)),
        })
    };
    let rows: BTreeSet<Vec<String>> =
        bindings.iter().filter(|b| keep(b)).map(|b| q.select.iter().map(|v| b[v].clone()).collect()).collect();
    rows.into_iter().skip(q.offset.unwrap_or(0)).take(q.limit.unwrap_or(usize::MAX)).collect()
}

fn parse_term(t: &str) -> Result<Term, String> {
    if let Some(iri) = t.strip_prefix('<').and_then(|r| r.strip_suffix('>')) {
        return Ok(Term::Iri(Iri::parse(iri).map_err(err)?));
    }
    let (lex, lang) = literal_parts(t).ok_or_else(|| format!("bad term {t}"))?;
    let lang = if lang.is_empty() { None } else { Some(LanguageTag::parse(lang).map_err(err)?) };
    Ok(Term::Literal(Literal::new(lex, lang)))
}

fn render_term(t: &Term) -> String {
    match t {
        Term::Iri(i) => format!("<{}>", i.as_str()),
        Term::Literal(l) => match &l.lang {
            Some(tag) => format!("\"{}\"@{}", l.lexical, tag.as_str()),
            None => format!("\"{}\"", l.lexical),
        },
    }
}

fn query_matches_naive() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut rows_total = 0;
    let mut non_empty = 0;
    let mut sliced = 0;
    for case in 0..50 {
        let graph = random_graph(&mut rng);
        let q = random_query(&mut rng, &graph);
        let text = render_query(&q);
        let triples: Vec<Triple> = graph
            .iter()
            .map(|[s, p, o]| -> Result<Triple, String> {
                let s = match parse_term(s)? {
                    Term::Iri(i) => i,
                    _ => unreachable!(),
                };
                let p = match parse_term(p)? {
                    Term::Iri(i) => i,
                    _ => unreachable!(),
                };
                Ok(Triple::new(s, p, parse_term(o)?))
            })
            .collect::<Result<_, _>>()?;
        let parsed = parse_select(&text).map_err(|e| format!("case {case}: {e}\n{text}"))?;
        let got = GraphIndex::build(triples).evaluate(&parsed);
        let got_vars: Vec<&str> = got.vars.iter().map(String::as_str).collect();
        ensure(got_vars == q.select, || format!("case {case}: variables {got_vars:?}, expected {:?}", q.select))?;
        let got_rows: Vec<Vec<String>> = got.rows.iter().map(|r| r.iter().map(render_term).collect()).collect();
        let want = naive_eval(&q, &graph);
        ensure(got_rows == want, || format!("case {case}: got {got_rows:?}, expected {want:?}\n{text}"))?;
        rows_total += want.len();
        non_empty += usize::from(!want.is_empty());
        sliced += usize::from(q.limit.is_some() || q.offset.is_some());
    }
    let secs = started.elapsed().as_secs_f64();
    ensure(secs < 30.0, || format!("took {secs:.1}s, limit 30s"))?;
    Ok(format!("50 queries ({sliced} with LIMIT/OFFSET, {non_empty} non-empty), {rows_total} rows, all equal"))
}

// ---------------------------------------------------------------------------
// 4. Crawl of the served fixture.

fn local_schemes(snap: &Snapshot) -> Vec<(u32, String)> {
    snap.schemes().filter(|s| s.kind == SchemeKind::Local).map(|s| (s.scheme_id, s.prefix.clone())).collect()
}

fn crawl_fixture(p: &Pipeline) -> Outcome {
    let cfg = Config::load(Some(&p.config), &Default::default()).map_err(err)?;
    let site = cfg.site().map_err(err)?;
    let base = site.base().to_string();
    let snap = p.snapshot()?;
    let schemes = local_schemes(&snap);
    ensure(schemes.len() == 6, || format!("{} local schemes, expected 6", schemes.len()))?;
    for (prefix, want) in [("IUCN", 8), ("THREATS", 12), ("REGIONS", 68)] {
        let s = snap.scheme_by_prefix(prefix).ok_or_else(|| format!("no scheme {prefix}"))?;
        let got = snap.scheme_concept_count(s.scheme_id);
        ensure(got == want, || format!("{prefix} has {got} concepts, expected {want}"))?;
    }

    let server = Server::start(site, snap.clone())?;
    let origin = server.origin();
    let to_local = |url: &str| url.replacen(&base, &format!("{origin}/"), 1);
    let agent = agent();
    let mut links: BTreeSet<String> = BTreeSet::new();
    let mut concepts = 0;
    for (id, _) in &schemes {
        let scheme = snap.scheme(*id).expect("scheme");
        let ids: Vec<String> = snap.concepts_in(*id).map(str::to_string).collect();
        for local in ids {
            let iri = scheme.concept_iri(&local);
            let url = to_local(&iri);
            let (_, html) = dereference(&agent, &origin, &url, "text/html", "page")?;
            links.extend(hrefs(&html).into_iter().filter(|h| h.starts_with(&base)));
            let (doc, ttl) = dereference(&agent, &origin, &url, "text/turtle", "data")?;
            let subjects = turtle_subjects(&ttl).map_err(|e| format!("{doc}: {e}"))?;
            ensure(!subjects.is_empty(), || format!("{doc}: no triples"))?;
            ensure(subjects.iter().all(|s| *s == iri), || format!("{doc}: subject other than {iri}"))?;
            let (doc, nt) = dereference(&agent, &origin, &url, "application/n-triples", "data")?;
            let n = ntriples_count(&nt).map_err(|e| format!("{doc}: {e}"))?;
            ensure(n == subjects.len(), || format!("{doc}: {n} N-Triples vs {} Turtle triples", subjects.len()))?;
            concepts += 1;
        }
    }

    // Scheme listings, followed through every page.
    let mut listed: BTreeMap<String, usize> = BTreeMap::new();
    let re = Regex::new(r#"<a rel="next" href="([^"]*)""#).expect("regex");
    let all = get(&agent, &format!("{origin}/all"), "text/html")?;
    ensure(all.status == 200, || format!("/all answered {}", all.status))?;
    for (_, prefix) in &schemes {
        let mut next = Some(format!("{origin}/all/{prefix}"));
        let ns = format!("{base}resource/{prefix}/");
        let mut n = 0;
        let mut pages = 0;
        while let Some(url) = next.take() {
            let r = get(&agent, &url, "text/html")?;
            ensure(r.status == 200, || format!("{url} answered {}", r.status))?;
            pages += 1;
            ensure(pages <= 10_000, || format!("{prefix}: listing does not terminate"))?;
            let hs = hrefs(&r.body);
            n += hs.iter().filter(|h| h.starts_with(&ns)).count();
            links.extend(hs.into_iter().filter(|h| h.starts_with(&base)));
            next = re.captures(&r.body).map(|c| follow(&origin, &to_local(&c[1].replace("&amp;", "&"))));
        }
        listed.insert(prefix.clone(), n);
    }
    for (id, prefix) in &schemes {
        let want = snap.scheme_concept_count(*id);
        ensure(listed[prefix] == want, || format!("listing of {prefix} shows {} concepts, expected {want}", listed[prefix]))?;
    }
    ensure(hrefs(&all.body).iter().filter(|h| schemes.iter().any(|(_, p)| h.ends_with(&format!("all/{p}")))).count() >= 6, || {
        "/all does not link every local scheme".to_string()
    })?;

    // Every internal hyperlink resolves, through a 303 where one is issued.
    for link in &links {
        let url = to_local(link);
        let r = get(&agent, &url, "text/html")?;
        let status = match (r.status, r.location) {
            (303, Some(loc)) => get(&agent, &follow(&origin, &loc), "text/html")?.status,
            (s, _) => s,
        };
        ensure(status == 200, || format!("link {link} ends in {status}"))?;
    }
    Ok(format!("{concepts} concepts x 3 representations, {} internal links, counts IUCN 8 THREATS 12 REGIONS 68", links.len()))
}

// ---------------------------------------------------------------------------
// 5. Link topology.

fn linked(snap: &Snapshot, src: u32, dst: u32, rel: RelationKind) -> BTreeSet<(String, String)> {
    snap.all_relations()
        .into_iter()
        .filter(|r| r.provenance == Provenance::Linked && r.rel == rel && r.src.scheme_id == src && r.dst.scheme_id == dst)
        .map(|r| (r.src.local_id, r.dst.local_id))
        .collect()
}

fn link_topology(p: &Pipeline) -> Outcome {
    let snap = p.snapshot()?;
    let id = |prefix: &str| snap.scheme_by_prefix(prefix).map(|s| s.scheme_id).ok_or_else(|| format!("no scheme {prefix}"));
    let (h, s, e, g, r) = (id("HABITATS")?, id("SPECIES")?, id("EARTh")?, id("GEMET")?, id("REGIONS")?);
    let mirrored = |a: &BTreeSet<(String, String)>, b: &BTreeSet<(String, String)>| {
        a.iter().all(|(x, y)| b.contains(&(y.clone(), x.clone()))) && a.len() == b.len()
    };

    let hs = linked(&snap, h, s, RelationKind::Related);
    let sh = linked(&snap, s, h, RelationKind::Related);
    ensure(!hs.is_empty(), || "no habitat-species related links".into())?;
    ensure(mirrored(&hs, &sh), || format!("habitat->species {} vs species->habitat {}", hs.len(), sh.len()))?;

    let eg = linked(&snap, e, g, RelationKind::ExactMatch);
    ensure(!eg.is_empty(), || "no EARTh->GEMET exactMatch links".into())?;

    let mut er = 0;
    for rel in [RelationKind::Related, RelationKind::CloseMatch] {
        let fwd = linked(&snap, e, r, rel);
        let back = linked(&snap, r, e, rel);
        ensure(mirrored(&fwd, &back), || format!("EARTh<->REGIONS {}: {} vs {}", rel.local_name(), fwd.len(), back.len()))?;
        er += fwd.len();
    }
    ensure(er > 0, || "no EARTh<->REGIONS manual links".into())?;

    let issues = validate(&snap);
    ensure(issues.is_empty(), || format!("{} validation issues after linking", issues.len()))?;
    Ok(format!(
        "habitats<->species {} pairs, EARTh->GEMET {} exactMatch, EARTh<->REGIONS {} pairs, validation clean",
        hs.len(),
        eg.len(),
        er
    ))
}

// ---------------------------------------------------------------------------
// 6. Planted similarity pairs.

fn planted_recovery() -> Outcome {
    let pp = planted_pairs(6, 100, 30, 12, 5).map_err(err)?;
    let snap = pp.store.snapshot();
    let cfg = SimilarityConfig::labels_only(0.85);
    let cands = link_similarity(&snap, pp.src_scheme, pp.dst_scheme, &cfg).map_err(err)?;
    let accepted: BTreeSet<(ConceptKey, ConceptKey)> =
        cands.iter().filter(|c| c.accepted).map(|c| (c.src.clone(), c.dst.clone())).collect();
    let planted: BTreeSet<(ConceptKey, ConceptKey)> = pp.pairs.iter().cloned().collect();
    let recovered = accepted.intersection(&planted).count();
    let false_pos = accepted.difference(&planted).count();

    let label = |k: &ConceptKey| -> String {
        snap.labels(k).expect("stored").into_iter().find(|l| l.kind == TermKind::PrefLabel).expect("prefLabel").text.to_lowercase()
    };
    let mut brute = BTreeSet::new();
    let src: Vec<String> = snap.concepts_in(pp.src_scheme).map(str::to_string).collect();
    let dst: Vec<String> = snap.concepts_in(pp.dst_scheme).map(str::to_string).collect();
    for a in &src {
        let ka = ConceptKey::new(pp.src_scheme, a.as_str());
        let la = label(&ka);
        for b in &dst {
            let kb = ConceptKey::new(pp.dst_scheme, b.as_str());
            if strsim::normalized_levenshtein(&la, &label(&kb)) >= 0.85 {
                brute.insert((ka.clone(), kb));
            }
        }
    }
    ensure(brute == accepted, || format!("linker accepted {} pairs, brute force {}", accepted.len(), brute.len()))?;
    ensure(recovered >= 28, || format!("recovered {recovered}/30 planted pairs"))?;
    ensure(false_pos == 0, || format!("{false_pos} false positives"))?;
    Ok(format!("recovered {recovered}/30, {false_pos} false positives, agrees with brute force"))
}

// ---------------------------------------------------------------------------
// 7. Integrity violations.

fn violations_detected(p: &Pipeline) -> Outcome {
    let (clean, _) = load_dir(&p.store_dir).map_err(err)?;
    let base = validate(&clean.snapshot());
    ensure(base.is_empty(), || format!("clean fixture has {} issues", base.len()))?;
    let snap = clean.snapshot();
    let earth = snap.scheme_by_prefix("EARTh").ok_or("no EARTh")?.scheme_id;
    let en = LanguageTag::parse("en").map_err(err)?;

    // A concept two levels below a root, its parent and that parent's parent.
    let (child, parent) = snap
        .concepts_in(earth)
        .map(|l| ConceptKey::new(earth, l))
        .find_map(|k| {
            let up = snap.targets(&k, RelationKind::Broader);
            let p = up.into_iter().find(|p| p.scheme_id == earth && !snap.targets(p, RelationKind::Broader).is_empty())?;
            Some((k, p))
        })
        .ok_or("no EARTh concept at depth two")?;
    let pref = snap.labels(&child).map_err(err)?.into_iter().find(|l| l.kind == TermKind::PrefLabel && l.lang == en).ok_or("no English prefLabel")?;

    let seeds: Vec<Seed<'_>> = vec![
        (
            IssueKind::DuplicatePrefLabel,
            Box::new(|s: &mut Store| {
                let rec = LabelRecord { text: format!("{} duplicate", pref.text), ..pref.clone() };
                s.add_label_unchecked(rec).map(|_| ()).map_err(err)
            }),
        ),
        (
            IssueKind::PrefAltClash,
            Box::new(|s: &mut Store| {
                let rec = LabelRecord { kind: TermKind::AltLabel, ..pref.clone() };
                s.add_label_unchecked(rec).map(|_| ()).map_err(err)
            }),
        ),
        (
            IssueKind::DanglingTarget,
            Box::new(|s: &mut Store| {
                let rec = RelationRecord::asserted(child.clone(), RelationKind::Related, ConceptKey::new(earth, "no-such-concept"));
                s.add_relation(rec).map(|_| ()).map_err(err)
            }),
        ),
        (
            IssueKind::BroaderCycle,
            Box::new(|s: &mut Store| {
                let rec = RelationRecord::asserted(parent.clone(), RelationKind::Broader, child.clone());
                s.add_relation(rec).map(|_| ()).map_err(err)
            }),
        ),
        (IssueKind::OrphanTopConcept, Box::new(|s: &mut Store| s.add_top_concept(&child).map(|_| ()).map_err(err))),
    ];
    let mut detail = Vec::new();
    for (kind, seed) in &seeds {
        let mut store = clean.clone();
        seed(&mut store)?;
        let issues = validate(&store.snapshot());
        let kinds: Vec<IssueKind> = issues.iter().map(|i| i.kind).collect();
        ensure(kinds == vec![*kind], || format!("seeded {kind}, found {kinds:?}"))?;
        detail.push(kind.as_str());
    }
    Ok(format!("{} each found once, clean fixture has 0 issues", detail.join(", ")))
}

// ---------------------------------------------------------------------------
// 8. Export/import round trip.

fn round_trip(p: &Pipeline) -> Outcome {
    let cfg = path_str(&p.config);
    let first = p.layout.root.join("export1.nt");
    skosframe_ok(&["--config", cfg, "export", "--out", path_str(&first)])?;
    let fresh = p.layout.root.join("fresh-store");
    let fresh_s = path_str(&fresh);
    skosframe_ok(&["--config", cfg, "--store", fresh_s, "import", path_str(&first)])?;
    let second = p.layout.root.join("export2.nt");
    skosframe_ok(&["--config", cfg, "--store", fresh_s, "export", "--out", path_str(&second)])?;
    let a = std::fs::read(&first).map_err(err)?;
    let b = std::fs::read(&second).map_err(err)?;
    ensure(!a.is_empty(), || "empty export".into())?;
    if a != b {
        let (la, lb) = (String::from_utf8_lossy(&a), String::from_utf8_lossy(&b));
        let sa: BTreeSet<&str> = la.lines().collect();
        let sb: BTreeSet<&str> = lb.lines().collect();
        return Err(format!(
            "exports differ: {} lines only in first, {} only in second, e.g. {:?}",
            sa.difference(&sb).count(),
            sb.difference(&sa).count(),
            sa.symmetric_difference(&sb).next()
        ));
    }
    let n = ntriples_count(&String::from_utf8_lossy(&a))?;
    Ok(format!("{n} triples, {} bytes, identical", a.len()))
}

// ---------------------------------------------------------------------------
// 9. Latency at scale.

fn latency_at_scale() -> Outcome {
    let started = Instant::now();
    let dir = tempfile::tempdir().map_err(err)?;
    let spec = FixtureSpec::scaled(200_000, 2010);
    let layout = generate(&spec, dir.path()).map_err(err)?;
    let cfg = Config::load(Some(&layout.config), &Default::default()).map_err(err)?;
    let site = cfg.site().map_err(err)?;
    let mut store = commands::open_store(&cfg).map_err(err)?;
    commands::ingest_fixture(&mut store, &site, &layout).map_err(err)?;
    entail(&mut store);
    let snap = store.snapshot();
    drop(store);
    let prepared = started.elapsed().as_secs_f64();
    ensure(snap.concept_count() >= 200_000, || format!("only {} concepts", snap.concept_count()))?;

    let mut all: Vec<String> = Vec::with_capacity(snap.concept_count());
    for (id, _) in local_schemes(&snap) {
        let s = snap.scheme(id).expect("scheme");
        all.extend(snap.concepts_in(id).map(|l| s.concept_iri(l)));
    }
    let base = site.base().to_string();
    let server = Server::start(site, snap.clone())?;
    let origin = server.origin();
    let agent = agent();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut times = Vec::with_capacity(1000);
    let mut seen = HashSet::new();
    while times.len() < 1000 {
        let iri = all.choose(&mut rng).expect("concepts");
        if !seen.insert(iri.clone()) {
            continue;
        }
        let url = iri.replacen(&base, &format!("{origin}/"), 1);
        let t = Instant::now();
        let (doc, body) = dereference(&agent, &origin, &url, "text/turtle", "data")?;
        times.push(t.elapsed());
        ensure(turtle_subjects(&body).map_err(|e| format!("{doc}: {e}"))?.iter().all(|s| s == iri), || format!("{doc}: wrong subject"))?;
    }
    times.sort();
    let p95 = times[times.len() * 95 / 100 - 1].as_secs_f64() * 1000.0;
    let p50 = times[times.len() / 2].as_secs_f64() * 1000.0;
    let total = started.elapsed().as_secs_f64();
    ensure(p95 < 100.0, || format!("p95 {p95:.1} ms, limit 100 ms"))?;
    ensure(total < 600.0, || format!("total {total:.0}s, limit 600s"))?;
    Ok(format!(
        "{} concepts, ready in {prepared:.1}s, 1000 dereferences p50 {p50:.2} ms p95 {p95:.2} ms",
        snap.concept_count()
    ))
}
