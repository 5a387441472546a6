use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use thiserror::Error;
use treecover::cover::{
    cover_stretch, light_tree_cover, pair_gate_excess, span_tree_cover, verify_spanning, Audit, CoverBuild, CoverConfig, CoverError, CoverStats,
    Mode, PairSource, TreeCover, SCHEMA_VERSION,
};
use treecover::graph::generate::{generate as gen, GraphKind};
use treecover::graph::io::{load_graph, write_graph};
use treecover::graph::{apsp_with_cap, dijkstra, DistanceMatrix, GraphError, WeightedGraph, DEFAULT_APSP_CAP, TOL};
use treecover::hpf::{all_vertex_levels, verify_padding, HpfError, HpfParams};
use treecover::oracle::build_oracle;
use treecover::routing::{build_routing_scheme, dump_scheme, measure_sizes, route_end_to_end};

use crate::RunArgs;

pub const APSP_CAP_ENV: &str = "TREECOVER_APSP_CAP";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{0}")]
    Failed(String),
}

impl From<CoverError> for CliError {
    fn from(e: CoverError) -> Self {
        match e {
            CoverError::Hpf(HpfError::InvalidParams(m)) => CliError::Usage(m),
            CoverError::Config(m) => CliError::Usage(m),
            CoverError::Graph(g) => CliError::Graph(g),
            other => CliError::Failed(other.to_string()),
        }
    }
}

pub enum Outcome {
    Pass,
    Fail(String),
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json");
    s.push('\n');
    s
}

fn parse_pair_lines(text: &str) -> Result<Vec<(usize, usize)>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let nums: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| CliError::Usage(format!("line {}: bad vertex {t:?}", i + 1))))
            .collect::<Result<_, _>>()?;
        match nums[..] {
            [u, v] => out.push((u, v)),
            _ => return Err(CliError::Usage(format!("line {}: expected `u v`", i + 1))),
        }
    }
    Ok(out)
}

fn parse_pairs(spec: &str) -> Result<PairSource, CliError> {
    match spec.split_once(':') {
        None if spec == "auto" => Ok(PairSource::Auto),
        None if spec == "all" => Ok(PairSource::All),
        Some(("sample", k)) => k.parse().map(PairSource::Sample).map_err(|_| CliError::Usage(format!("bad sample size {k:?}"))),
        Some(("file", p)) => Ok(PairSource::List(parse_pair_lines(&read(Path::new(p))?)?)),
        _ => Err(CliError::Usage(format!("bad --pairs {spec:?} (auto|all|sample:K|file:PATH)"))),
    }
}

fn apsp_cap() -> Result<usize, CliError> {
    match std::env::var(APSP_CAP_ENV) {
        Ok(v) => v.parse().map_err(|_| CliError::Usage(format!("{APSP_CAP_ENV}={v:?} is not a count"))),
        Err(_) => Ok(DEFAULT_APSP_CAP),
    }
}

fn setup(run: &RunArgs) -> Result<(WeightedGraph, CoverConfig), CliError> {
    let mode: Mode = run.mode.parse().map_err(CliError::Usage)?;
    let params = HpfParams { mu: run.mu, rho: run.rho, eta: run.eta, epsilon: run.epsilon, theory: mode == Mode::Theory };
    params.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let g = load_graph(&read(&run.graph)?)?;
    let config = CoverConfig { params, mode, pairs: parse_pairs(&run.pairs)?, seed: run.seed, apsp_cap: apsp_cap()?, audit: Audit::Off };
    Ok((g, config))
}

fn distances(g: &WeightedGraph) -> Result<DistanceMatrix, CliError> {
    Ok(apsp_with_cap(g, apsp_cap()?)?)
}

pub fn generate(kind: &str, size: usize, seed: u64, out: Option<&Path>) -> Result<Outcome, CliError> {
    let kind: GraphKind = kind.parse().map_err(|e: GraphError| CliError::Usage(e.to_string()))?;
    let g = gen(kind, size, seed)?;
    emit(out, &write_graph(&g))?;
    Ok(Outcome::Pass)
}

struct Gates {
    failures: Vec<String>,
}

impl Gates {
    fn check(&mut self, ok: bool, what: impl Into<String>) -> bool {
        if !ok {
            self.failures.push(what.into());
        }
        ok
    }

    fn outcome(self) -> Outcome {
        if self.failures.is_empty() {
            Outcome::Pass
        } else {
            Outcome::Fail(self.failures.join("; "))
        }
    }
}

fn gate_two(build: &CoverBuild) -> Result<usize, CliError> {
    let st = cover_stretch(&build.scaled, &build.cover, &build.dist, &build.demanded)?;
    Ok(pair_gate_excess(build, &st).iter().filter(|e| e.2 > TOL).count())
}

pub fn cover(run: &RunArgs, light: bool) -> Result<Outcome, CliError> {
    let (g, config) = setup(run)?;
    let (build, spanner_lightness) = if light {
        let lc = light_tree_cover(&g, &config)?;
        (lc.build, Some(lc.spanner_lightness))
    } else {
        (span_tree_cover(&g, &config)?, None)
    };
    let dist = distances(&g)?;
    let stretch = cover_stretch(&g, &build.cover, &dist, &build.demanded)?;
    let spanning = verify_spanning(&g, &build.cover);
    let gate_failures = gate_two(&build)?;
    let below = stretch.pairs.iter().filter(|p| p.ratio < 1.0 - TOL).count();
    let mut gates = Gates { failures: Vec::new() };
    gates.check(spanning.is_empty(), format!("{} spanning failures", spanning.len()));
    gates.check(below == 0, format!("{below} pairs below graph distance"));
    // Lightness is only meaningful against a spanner when covering one.
    if let Some(sl) = spanner_lightness {
        let stats = CoverStats::new(&g, &build, &stretch);
        gates.check(stats.individual_lightness <= sl + TOL, "tree heavier than the spanner");
    }
    gates.check(gate_failures == 0, format!("{gate_failures} demanded pairs above the additive bound"));

    let stats = CoverStats::new(&g, &build, &stretch);
    let mut v = serde_json::to_value(&stats).expect("stats");
    v["light"] = json!(light);
    v["spanner_lightness"] = json!(spanner_lightness);
    v["spanning_failures"] = json!(spanning.len());
    v["gate_failures"] = json!(gate_failures);
    v["params"] = serde_json::to_value(build.cover.params).expect("params");
    if let Some(p) = &run.out {
        write(p, &build.cover.to_json())?;
    }
    emit(run.stats.as_deref(), &json_text(&v))?;
    Ok(gates.outcome())
}

pub fn verify(run: &RunArgs, cover_path: &Path) -> Result<Outcome, CliError> {
    let (g, mut config) = setup(run)?;
    let cover = TreeCover::from_json(&read(cover_path)?).map_err(|e| CliError::Usage(format!("{}: {e}", cover_path.display())))?;
    let mut gates = Gates { failures: Vec::new() };
    let spanning = verify_spanning(&g, &cover);
    let mut report = json!({ "schema_version": SCHEMA_VERSION, "num_trees": cover.trees.len() });
    report["spanning"] = json!({ "pass": gates.check(spanning.is_empty(), "spanning"), "failures": spanning });
    if spanning.is_empty() {
        let dist = distances(&g)?;
        let pairs = treecover::cover::demanded_pairs(&g, &config.pairs, config.seed);
        let st = cover_stretch(&g, &cover, &dist, &pairs)?;
        let below = st.pairs.iter().filter(|p| p.ratio < 1.0 - TOL).count();
        report["lower_bound"] = json!({ "pass": gates.check(below == 0, "lower bound"), "violations": below });
        report["stretch"] = json!({ "max": st.max, "mean": st.mean, "pairs": st.pairs.len() });
    }
    // Structure of the construction itself, rebuilt with the cover's parameters.
    config.params = HpfParams { theory: cover.params.theory || config.mode == Mode::Theory, ..cover.params };
    config.audit = Audit::Structure;
    let build = span_tree_cover(&g, &config)?;
    let bad: Vec<_> = build.reports.iter().filter(|r| !r.report.structure_ok()).map(|r| (r.tree, r.cluster, r.level)).collect();
    report["preservable"] = json!({ "pass": gates.check(bad.is_empty(), "preservable structure"), "nodes": build.reports.len(), "failures": bad });
    if g.n() <= 512 {
        let fam = &build.preserving.family;
        let pad = verify_padding(&build.scaled, fam, cover.params.rho, &all_vertex_levels(g.n(), fam));
        report["padding"] = json!({ "advisory": true, "checked": pad.checked, "failures": pad.failures.len() });
    }
    report["pass"] = json!(gates.failures.is_empty());
    emit(run.out.as_deref().or(run.stats.as_deref()), &json_text(&report))?;
    Ok(gates.outcome())
}

pub fn route(run: &RunArgs, dump: Option<&Path>) -> Result<Outcome, CliError> {
    let (g, config) = setup(run)?;
    let lc = light_tree_cover(&g, &config)?;
    let scheme = build_routing_scheme(&g, &lc, run.seed, None).map_err(|e| CliError::Failed(e.to_string()))?;
    let dist = distances(&g)?;
    let eps = config.params.epsilon;
    let fam = &lc.build.preserving.family;
    let mut csv = String::from("s,t,tree,hop,vertex,port,cumulative_weight\n");
    let mut gates = Gates { failures: Vec::new() };
    let mut selection_failures = Vec::new();
    let (mut unterminated, mut over, mut stretch_max) = (0, 0, 1.0f64);
    for r in &lc.build.preserving.records {
        let e = match route_end_to_end(&g, &scheme, r.u, r.v) {
            Ok(e) => e,
            Err(err) => {
                selection_failures.push(json!({ "s": r.u, "t": r.v, "error": err.to_string() }));
                continue;
            }
        };
        let d = dist.get(r.u, r.v);
        if !e.trace.terminated {
            unterminated += 1;
        }
        let rho_eff = fam.params.scale(r.level) / r.d_graph;
        if e.trace.weight > (1.0 + eps).powi(2) * (1.0 + 44.0 * rho_eff * eps) * d + TOL {
            over += 1;
        }
        stretch_max = stretch_max.max(e.trace.weight / d);
        let tree = e.tree.map_or(String::new(), |t| t.to_string());
        for line in e.trace.to_csv(&g).lines().skip(1) {
            csv.push_str(&format!("{},{},{tree},{line}\n", r.u, r.v));
        }
    }
    gates.check(unterminated == 0, format!("{unterminated} routes did not terminate"));
    gates.check(over == 0, format!("{over} routes above the end-to-end bound"));
    let sizes = measure_sizes(&scheme);
    gates.check(sizes.header_bits == scheme.word_bits && sizes.max_stored < (1u64 << scheme.word_bits), "stored integer exceeds the word size");
    let stats = json!({
        "schema_version": SCHEMA_VERSION,
        "n": g.n(),
        "routes": lc.build.preserving.records.len(),
        "alpha": scheme.alpha.alpha,
        "beta": scheme.beta,
        "num_trees": scheme.trees.len(),
        "label_bits_max": sizes.label_bits_max,
        "selection_bits_max": sizes.selection_bits_max,
        "table_bits_max": sizes.table_bits_max,
        "header_bits": sizes.header_bits,
        "stretch_max": stretch_max,
        "unterminated": unterminated,
        "bound_violations": over,
        "selection_failures": selection_failures,
    });
    if let Some(p) = &run.out {
        write(p, &csv)?;
    }
    if let Some(p) = dump {
        write(p, &serde_json::to_string_pretty(&dump_scheme(&scheme)).expect("dump"))?;
    }
    emit(run.stats.as_deref(), &json_text(&stats))?;
    Ok(gates.outcome())
}

pub fn oracle(run: &RunArgs, cover_path: &Path, queries: &Path) -> Result<Outcome, CliError> {
    let g = load_graph(&read(&run.graph)?)?;
    let cover = TreeCover::from_json(&read(cover_path)?).map_err(|e| CliError::Usage(format!("{}: {e}", cover_path.display())))?;
    let pairs = parse_pair_lines(&read(queries)?)?;
    if let Some(&(u, v)) = pairs.iter().find(|&&(u, v)| u >= g.n() || v >= g.n()) {
        return Err(CliError::Usage(format!("query ({u}, {v}) out of range for n = {}", g.n())));
    }
    let index = build_oracle(&g, &cover).map_err(|e| CliError::Failed(e.to_string()))?;
    let mut gates = Gates { failures: Vec::new() };
    let mut csv = String::from("u,v,estimate,tree,path_len,path\n");
    for &(u, v) in &pairs {
        let (path, est) = index.query_path(u, v);
        let d = dijkstra(&g, u, None)?.dist[v];
        let mut w = 0.0;
        let mut edges_ok = true;
        for p in path.windows(2) {
            match g.edge_id(p[0], p[1]) {
                Some(e) => w += g.edge(e).w,
                None => edges_ok = false,
            }
        }
        gates.check(edges_ok, format!("({u}, {v}): path leaves the graph"));
        gates.check(est.distance >= d - TOL * d.max(1.0), format!("({u}, {v}): estimate below d_G"));
        gates.check((w - est.distance).abs() <= TOL * w.max(1.0), format!("({u}, {v}): path weight differs from estimate"));
        let joined: Vec<String> = path.iter().map(usize::to_string).collect();
        csv.push_str(&format!("{u},{v},{},{},{},{}\n", est.distance, est.tree, path.len(), joined.join(" ")));
    }
    emit(run.out.as_deref(), &csv)?;
    Ok(gates.outcome())
}
