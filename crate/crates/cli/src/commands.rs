//! One function per subcommand. Each returns the JSON document together with
//! the process exit code, so the binary only has to do IO.

use chainphase_core::bridge::{self, SearchStatus, XSearch};
use chainphase_core::canonical::{canonicalize, classify_phase, Outcome};
use chainphase_core::decomposition::{decompose_site, SiteDecomposition};
use chainphase_core::ed::{self, build_chain};
use chainphase_core::graph::{build_graph, export_dot, extract_bond_projectors, BondFactors, InteractionGraph};
use chainphase_core::groundspace::{
    check_scale_invariance, degeneracy, ground_states, spectral_census, TransferMatrices,
};
use chainphase_core::operators::check_commuting;
use chainphase_core::{BigUint, CMatrix, ProjectorTerm, TwoSite};
use serde_json::{json, Map, Value};

use crate::input::{self, Source};
use crate::json;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_NOT_COMMUTING: i32 = 2;
pub const EXIT_NOT_SCALE_INVARIANT: i32 = 3;

/// Settings shared by all subcommands.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub source: Source,
    pub tol: f64,
    pub seed: u64,
    /// Chain lengths, all at least 2; `None` picks a per-command default.
    pub lengths: Option<Vec<usize>>,
    /// Limit on enumerated cycles and ground states.
    pub cap: usize,
    /// Largest Hilbert space handed to exact diagonalization.
    pub ed_cap: usize,
}

impl RunConfig {
    pub fn new(source: Source) -> Self {
        RunConfig {
            source,
            tol: chainphase_core::DEFAULT_TOL,
            seed: 0,
            lengths: None,
            cap: chainphase_core::groundspace::DEFAULT_CAP,
            ed_cap: ed::DEFAULT_ED_CAP,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(format!("tolerance must be positive, got {}", self.tol));
        }
        if let Some(n) = self.lengths.as_ref().and_then(|l| l.iter().find(|&&n| n < 2)) {
            return Err(format!("chain length {n} is below 2"));
        }
        Ok(())
    }

    fn lengths_or(&self, default: impl FnOnce() -> Vec<usize>) -> Vec<usize> {
        self.lengths.clone().unwrap_or_else(default)
    }
}

/// What a subcommand produced.
#[derive(Clone, Debug)]
pub struct Report {
    pub json: Value,
    pub code: i32,
    /// Human-readable table, printed instead of the JSON.
    pub text: Option<String>,
    pub dot: Option<String>,
}

impl Report {
    fn ok(json: Value) -> Self {
        Report { json, code: EXIT_OK, text: None, dot: None }
    }

    fn error(cfg: &RunConfig, code: i32, message: impl Into<String>) -> Self {
        let json = json!({ "error": message.into(), "seed": cfg.seed, "tol": cfg.tol });
        Report { json, code, text: None, dot: None }
    }
}

fn header(cfg: &RunConfig) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("seed".into(), json!(cfg.seed));
    m.insert("tol".into(), json!(cfg.tol));
    m
}

struct Stages {
    p: ProjectorTerm,
    dec: SiteDecomposition,
    bonds: BondFactors,
    graph: InteractionGraph,
}

/// Load, check commutation, decompose and build the graph.
fn pipeline(cfg: &RunConfig) -> Result<Stages, Report> {
    let p = input::load_projector(&cfg.source, cfg.tol).map_err(|e| Report::error(cfg, EXIT_FAILURE, e))?;
    let fail = |e: chainphase_core::Error| Report::error(cfg, EXIT_FAILURE, e.to_string());
    let comm = check_commuting(&p, cfg.tol).map_err(fail)?;
    if !comm.commuting {
        let mut r = Report::error(cfg, EXIT_NOT_COMMUTING, "local terms do not commute");
        r.json["commutator_residual"] = json!(comm.residual);
        return Err(r);
    }
    let dec = decompose_site(&p, cfg.tol, cfg.seed).map_err(fail)?;
    let bonds = extract_bond_projectors(&p, &dec, cfg.tol).map_err(fail)?;
    let graph = build_graph(&bonds);
    Ok(Stages { p, dec, bonds, graph })
}

pub fn analyze(cfg: &RunConfig) -> Report {
    let p = match input::load_projector(&cfg.source, cfg.tol) {
        Ok(p) => p,
        Err(e) => {
            return Report { json: json::failed_report(&e, cfg.tol, cfg.seed), code: EXIT_FAILURE, text: None, dot: None }
        }
    };
    let report = classify_phase(&p, cfg.tol, cfg.seed);
    let code = match report.outcome {
        Outcome::Classified => EXIT_OK,
        Outcome::NotCommuting => EXIT_NOT_COMMUTING,
        Outcome::NotScaleInvariant => EXIT_NOT_SCALE_INVARIANT,
        Outcome::Failed(_) => EXIT_FAILURE,
    };
    Report { json: json::phase_report(&report), code, text: None, dot: report.graph.as_ref().map(export_dot) }
}

pub fn decompose(cfg: &RunConfig) -> Report {
    match pipeline(cfg) {
        Ok(s) => Report::ok(json::decomposition(&s.dec)),
        Err(r) => r,
    }
}

pub fn graph(cfg: &RunConfig) -> Report {
    match pipeline(cfg) {
        Ok(s) => Report { dot: Some(export_dot(&s.graph)), ..Report::ok(json::graph(&s.graph)) },
        Err(r) => r,
    }
}

pub fn degeneracy_sweep(cfg: &RunConfig) -> Report {
    let s = match pipeline(cfg) {
        Ok(s) => s,
        Err(r) => return r,
    };
    let t = TransferMatrices::from_graph(&s.graph);
    let mut out = Map::new();
    for n in cfg.lengths_or(|| (2..=8).collect()) {
        match degeneracy(&t, n) {
            Ok(k) => out.insert(n.to_string(), json::big(&k)),
            Err(e) => return Report::error(cfg, EXIT_FAILURE, e.to_string()),
        };
    }
    let mut doc = header(cfg);
    doc.insert("degeneracy".into(), Value::Object(out));
    Report::ok(Value::Object(doc))
}

pub fn census(cfg: &RunConfig) -> Report {
    let s = match pipeline(cfg) {
        Ok(s) => s,
        Err(r) => return r,
    };
    let t = TransferMatrices::from_graph(&s.graph);
    let mut out = Map::new();
    for n in cfg.lengths_or(|| (2..=8).collect()) {
        match spectral_census(&t, n) {
            Ok(c) => out.insert(n.to_string(), json::census(&c)),
            Err(e) => return Report::error(cfg, EXIT_FAILURE, e.to_string()),
        };
    }
    let mut doc = header(cfg);
    doc.insert("census".into(), Value::Object(out));
    Report::ok(Value::Object(doc))
}

pub fn ground(cfg: &RunConfig) -> Report {
    let s = match pipeline(cfg) {
        Ok(s) => s,
        Err(r) => return r,
    };
    let t = TransferMatrices::from_graph(&s.graph);
    let mut out = Map::new();
    for n in cfg.lengths_or(|| vec![4]) {
        let (gs, k) = match (ground_states(&s.dec, &s.bonds, n, cfg.cap), degeneracy(&t, n)) {
            (Ok(gs), Ok(k)) => (gs, k),
            (Err(e), _) | (_, Err(e)) => return Report::error(cfg, EXIT_FAILURE, e.to_string()),
        };
        out.insert(
            n.to_string(),
            json!({
                "N": n,
                "degeneracy": json::big(&k),
                "count": gs.states.len(),
                "truncated": gs.truncated,
                "states": gs.states.iter().map(json::ground_state).collect::<Vec<_>>(),
            }),
        );
    }
    let mut doc = header(cfg);
    doc.insert("ground_states".into(), Value::Object(out));
    Report::ok(Value::Object(doc))
}

pub fn canonical(cfg: &RunConfig) -> Report {
    let s = match pipeline(cfg) {
        Ok(s) => s,
        Err(r) => return r,
    };
    let verdict = check_scale_invariance(&s.graph);
    if !verdict.scale_invariant {
        let mut r = Report::error(cfg, EXIT_NOT_SCALE_INVARIANT, "interaction graph is not scale invariant");
        r.json["verdict"] = json::verdict(&verdict);
        return r;
    }
    let chain = match canonicalize(&s.p, &s.dec, &s.bonds, cfg.tol) {
        Ok(c) => c,
        Err(e) => return Report::error(cfg, EXIT_FAILURE, e.to_string()),
    };
    let mut doc = header(cfg);
    doc.insert("k".into(), json!(verdict.loops.len()));
    doc.insert("d".into(), json!(s.p.site_dim()));
    doc.insert("loops".into(), json!(verdict.loops));
    doc.insert(
        "references".into(),
        Value::Array(
            chain
                .disentangler
                .refs
                .iter()
                .map(|r| json!({ "block": r.block, "xi_r": json::vector(&r.xi_r), "xi_l": json::vector(&r.xi_l) }))
                .collect(),
        ),
    );
    doc.insert("pruned".into(), json::term(&chain.pruned));
    doc.insert("disentangler".into(), json::matrix(&chain.disentangler.u));
    doc.insert("conjugated".into(), json::term(&chain.conjugated));
    doc.insert("relabel".into(), json::matrix(&chain.relabel));
    doc.insert("relabeled".into(), json::term(&chain.relabeled));
    doc.insert("canonical_rep".into(), chain.canonical.as_ref().map_or(Value::Null, |c| json::term(c)));
    Report::ok(Value::Object(doc))
}

const MPS_LAYOUT: &str = "site index l*chi+r; maximally entangled pair on (r_j, l_{j+1})";

pub fn mps_parent(cfg: &RunConfig, chi: usize) -> Report {
    let parent = bridge::random_mps_map(chi, cfg.seed).and_then(|map| Ok((bridge::mps_parent(&map)?, map)));
    let (parent, map) = match parent {
        Ok(x) => x,
        Err(e) => return Report::error(cfg, EXIT_FAILURE, e.to_string()),
    };
    let mut doc = header(cfg);
    doc.insert("chi".into(), json!(chi));
    doc.insert("layout".into(), json!(MPS_LAYOUT));
    doc.insert("S".into(), json::matrix(&map.s));
    doc.insert("P".into(), json::term(&parent.p));
    doc.insert("h".into(), json::term(&parent.h));
    doc.insert("h_commutator_residual".into(), json!(parent.h_commutator_residual));
    Report::ok(Value::Object(doc))
}

fn x_search(search: &XSearch) -> Value {
    let status = match search.status {
        SearchStatus::Found => "found",
        SearchStatus::NotFound => "not_found",
    };
    let best = search.best.as_ref();
    json!({
        "X": best.map(|c| json::matrix(&c.x)),
        "residual": best.map(|c| c.residual),
        "min_eig": best.map(|c| c.min_eigenvalue),
        "status": status,
        "solution_dim": search.solution_dim,
    })
}

pub fn solve_x(cfg: &RunConfig) -> Report {
    let h = match input::load_term(&cfg.source, cfg.tol) {
        Ok(h) => h,
        Err(e) => return Report::error(cfg, EXIT_FAILURE, e),
    };
    match bridge::solve_x(&h, cfg.tol, cfg.seed) {
        Ok(s) => Report::ok(x_search(&s)),
        Err(e) => Report::error(cfg, EXIT_FAILURE, e.to_string()),
    }
}

fn parse_x(v: &Value) -> Result<CMatrix, String> {
    json::parse_matrix(v.get("X").unwrap_or(v))
}

/// With `x_path` unset the solution is searched for first.
pub fn commutify(cfg: &RunConfig, x_path: Option<&str>) -> Report {
    let h = match input::load_term(&cfg.source, cfg.tol) {
        Ok(h) => h,
        Err(e) => return Report::error(cfg, EXIT_FAILURE, e),
    };
    let x = match x_path {
        Some(path) => match input::load_json(path).and_then(|v| parse_x(&v)) {
            Ok(x) => x,
            Err(e) => return Report::error(cfg, EXIT_FAILURE, e),
        },
        None => match bridge::solve_x(&h, cfg.tol, cfg.seed) {
            Ok(s) => match s.found() {
                Some(c) => c.x.clone(),
                None => return Report::error(cfg, EXIT_FAILURE, "no positive definite solution found"),
            },
            Err(e) => return Report::error(cfg, EXIT_FAILURE, e.to_string()),
        },
    };
    let lengths = cfg.lengths_or(|| vec![3, 4]);
    match bridge::commutify(&h, &x, cfg.tol, &lengths) {
        Ok(c) => {
            let mut doc = header(cfg);
            doc.insert("X".into(), json::matrix(&x));
            doc.insert("h_prime".into(), json::term(&c.h_prime));
            doc.insert("commutator_residual".into(), json!(c.commutator_residual));
            doc.insert(
                "correspondence".into(),
                Value::Array(
                    c.correspondence
                        .iter()
                        .map(|k| {
                            json!({
                                "N": k.n,
                                "dim_original": k.dim_original,
                                "dim_commuting": k.dim_commuting,
                                "distance": k.distance,
                                "holds": k.holds(1e-8),
                            })
                        })
                        .collect(),
                ),
            );
            Report::ok(Value::Object(doc))
        }
        Err(e) => Report::error(cfg, EXIT_FAILURE, e.to_string()),
    }
}

/// One row of the `verify` table.
struct Check {
    n: usize,
    name: &'static str,
    ok: Option<bool>,
    detail: String,
}

fn fits(d: usize, n: usize, cap: usize) -> bool {
    (d as u128).checked_pow(n as u32).is_some_and(|x| x <= cap as u128)
}

/// Compare every combinatorial prediction with exact diagonalization.
pub fn verify(cfg: &RunConfig) -> Report {
    let s = match pipeline(cfg) {
        Ok(s) => s,
        Err(r) => return r,
    };
    let d = s.p.site_dim();
    let t = TransferMatrices::from_graph(&s.graph);
    let lengths = cfg.lengths_or(|| (2..).take_while(|&n| fits(d, n, cfg.ed_cap)).collect());
    let mut rows = Vec::new();
    for n in lengths {
        if !fits(d, n, cfg.ed_cap) {
            rows.push(Check { n, name: "all", ok: None, detail: format!("d^N exceeds ed cap {}", cfg.ed_cap) });
            continue;
        }
        rows.extend(verify_length(&s, &t, n, cfg));
    }
    let all_ok = rows.iter().all(|r| r.ok != Some(false));
    let mut text = String::from("N   check                   result  detail\n");
    for r in &rows {
        let res = match r.ok {
            Some(true) => "pass",
            Some(false) => "FAIL",
            None => "skip",
        };
        text.push_str(&format!("{:<3} {:<23} {:<7} {}\n", r.n, r.name, res, r.detail));
    }
    let mut doc = header(cfg);
    doc.insert("passed".into(), json!(all_ok));
    doc.insert(
        "checks".into(),
        Value::Array(rows.iter().map(|r| json!({ "N": r.n, "check": r.name, "ok": r.ok, "detail": r.detail })).collect()),
    );
    Report {
        json: Value::Object(doc),
        code: if all_ok { EXIT_OK } else { EXIT_FAILURE },
        text: Some(text),
        dot: None,
    }
}

fn verify_length(s: &Stages, t: &TransferMatrices, n: usize, cfg: &RunConfig) -> Vec<Check> {
    let mut rows = Vec::new();
    let mut push = |name, result: Result<(bool, String), String>| {
        let (ok, detail) = match result {
            Ok((ok, detail)) => (Some(ok), detail),
            Err(e) => (Some(false), e),
        };
        rows.push(Check { n, name, ok, detail });
    };
    let h = match build_chain(&s.p, n, cfg.ed_cap) {
        Ok(h) => h,
        Err(e) => {
            push("build chain", Err(e.to_string()));
            return rows;
        }
    };
    let kernel = ed::kernel_dim(&h).map_err(|e| e.to_string());
    push(
        "degeneracy",
        kernel.clone().and_then(|(k, _)| {
            let want = degeneracy(t, n).map_err(|e| e.to_string())?;
            Ok((want == BigUint::from(k), format!("graph {want}, ED {k}")))
        }),
    );
    push(
        "census",
        (|| {
            let spec = ed::integer_spectrum(&h).map_err(|e| e.to_string())?;
            let census = spectral_census(t, n).map_err(|e| e.to_string())?;
            let mut want: Vec<BigUint> = spec.iter().map(|&c| BigUint::from(c)).collect();
            want.resize(census.dims.len().max(want.len()), BigUint::ZERO);
            let mut got = census.dims.clone();
            got.resize(want.len(), BigUint::ZERO);
            let shown: Vec<String> = census.dims.iter().map(|x| x.to_string()).collect();
            Ok((got == want, format!("[{}]", shown.join(","))))
        })(),
    );
    push(
        "ground states",
        kernel.and_then(|(k, basis)| {
            let gs = ground_states(&s.dec, &s.bonds, n, cfg.cap).map_err(|e| e.to_string())?;
            if gs.truncated {
                return Ok((true, format!("truncated at {}", gs.states.len())));
            }
            let mut worst = 0.0f64;
            let mut cols = Vec::with_capacity(gs.states.len());
            for st in &gs.states {
                let v = st.mps.to_vector(cfg.ed_cap).map_err(|e| e.to_string())?;
                worst = worst.max(h.max_bond_residual(&v));
                cols.push(v);
            }
            let ours = chainphase_core::linalg::columns_to_matrix(&cols, h.dim());
            let same = cols.len() == k && ed::same_subspace(&ours, &basis, 1e-8).map_err(|e| e.to_string())?;
            Ok((same && worst < 1e-8, format!("{} states, bond residual {worst:.1e}", cols.len())))
        }),
    );
    let defect = h.translation_defect(cfg.seed);
    push("translation invariance", Ok((defect < 1e-10, format!("defect {defect:.1e}"))));
    rows
}
