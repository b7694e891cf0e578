//! End-to-end acceptance checks, one line per criterion.

use std::panic::{self, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use chainphase::json;
use chainphase_core::bridge::{commutify, mps_parent, random_mps_map, verify_x};
use chainphase_core::canonical::{canonical_hamiltonian, canonicalize, classify_phase, loop_product_basis, Outcome};
use chainphase_core::corpus::{default_corpus, CorpusEntry};
use chainphase_core::decomposition::{decompose_site, SiteDecomposition};
use chainphase_core::ed::{self, build_chain};
use chainphase_core::graph::{build_graph, extract_bond_projectors, BondFactors, InteractionGraph};
use chainphase_core::groundspace::{
    check_scale_invariance, degeneracy, enumerate_cycles, spectral_census, TransferMatrices, Witness,
};
use chainphase_core::{linalg, models, BigUint, ProjectorTerm, TwoSite};
use serde_json::Value;

const TOL: f64 = 1e-9;

/// Detail line on success, reason on failure.
type Checked = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn run(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_chainphase")).args(args).output().expect("spawn chainphase");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn run_json(args: &[&str]) -> Result<(i32, Value), String> {
    let (code, out) = run(args);
    let v = serde_json::from_slice(&out).map_err(|e| format!("{args:?}: bad JSON: {e}"))?;
    Ok((code, v))
}

fn max_n(d: usize) -> usize {
    let mut n = 1;
    while d.pow(n as u32 + 1) <= ed::DEFAULT_ED_CAP {
        n += 1;
    }
    n
}

struct Analyzed {
    entry: CorpusEntry,
    dec: SiteDecomposition,
    bonds: BondFactors,
    graph: InteractionGraph,
}

fn analyze_corpus() -> Result<Vec<Analyzed>, String> {
    default_corpus()
        .into_iter()
        .enumerate()
        .map(|(i, entry)| {
            let dec = decompose_site(&entry.term, TOL, 0).map_err(|e| format!("entry {i}: {e}"))?;
            let bonds = extract_bond_projectors(&entry.term, &dec, TOL).map_err(|e| format!("entry {i}: {e}"))?;
            let graph = build_graph(&bonds);
            Ok(Analyzed { entry, dec, bonds, graph })
        })
        .collect()
}

fn pipeline(p: &ProjectorTerm) -> Result<(SiteDecomposition, InteractionGraph), String> {
    let dec = decompose_site(p, TOL, 0).map_err(|e| e.to_string())?;
    let bonds = extract_bond_projectors(p, &dec, TOL).map_err(|e| e.to_string())?;
    let g = build_graph(&bonds);
    Ok((dec, g))
}

/// ED census at length `n` equals the transfer-matrix census.
fn census_agrees(p: &ProjectorTerm, g: &InteractionGraph, n: usize) -> Result<Vec<BigUint>, String> {
    let h = build_chain(p, n, ed::DEFAULT_ED_CAP).map_err(|e| e.to_string())?;
    let spec = ed::integer_spectrum(&h).map_err(|e| e.to_string())?;
    let census = spectral_census(&TransferMatrices::from_graph(g), n).map_err(|e| e.to_string())?;
    let mut want: Vec<BigUint> = spec.iter().map(|&c| BigUint::from(c)).collect();
    want.resize(n + 1, BigUint::ZERO);
    ensure!(census.dims == want, "N={n}: census {:?} vs ED {:?}", census.dims, want);
    Ok(census.dims)
}

fn criterion_1() -> Checked {
    let (code, r) = run_json(&["analyze", "--model", "ising"])?;
    ensure!(code == 0, "exit code {code}");
    ensure!(r["commuting"] == true, "commuting = {}", r["commuting"]);
    ensure!(r["blocks"] == serde_json::json!([[1, 1], [1, 1]]), "blocks {}", r["blocks"]);
    ensure!(r["graph"]["M"] == serde_json::json!([[1, 0], [0, 1]]), "M = {}", r["graph"]["M"]);
    ensure!(r["scale_invariant"] == true, "not scale invariant");
    ensure!(r["degeneracy"] == 2, "degeneracy {}", r["degeneracy"]);
    let p = models::ising();
    let (_, g) = pipeline(&p)?;
    let t = TransferMatrices::from_graph(&g);
    for n in 2..=8 {
        let (k, _) = ed::kernel_dim(&build_chain(&p, n, ed::DEFAULT_ED_CAP).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        ensure!(k == 2, "ED kernel {k} at N={n}");
        ensure!(degeneracy(&t, n).map_err(|e| e.to_string())? == BigUint::from(2u32), "Tr(M^N) at N={n}");
    }
    Ok("2 blocks (1,1), two weight-1 loops, k=2, ED N=2..8".into())
}

/// Labels α, β, γ, θ for the blocks of the `fig2` model.
fn fig2_labels(dec: &SiteDecomposition) -> Vec<usize> {
    dec.blocks
        .iter()
        .map(|b| {
            let w = linalg::column(&b.isometry, 0);
            let overlaps: Vec<f64> =
                models::fig2_block_vectors().iter().map(|v| linalg::modulus(linalg::vdot(v, &w))).collect();
            (0..4).max_by(|&i, &j| overlaps[i].total_cmp(&overlaps[j])).unwrap()
        })
        .collect()
}

fn criterion_2() -> Checked {
    let (code, r) = run_json(&["analyze", "--model", "fig2"])?;
    ensure!(code == 3, "exit code {code}");
    ensure!(r["blocks"] == serde_json::json!([[1, 1], [1, 1], [1, 1], [1, 1]]), "blocks {}", r["blocks"]);
    ensure!(r["scale_invariant"] == false, "scale_invariant = {}", r["scale_invariant"]);
    let witness_len = r["witness"]["cycle"].as_array().map_or(0, Vec::len);
    ensure!(witness_len >= 2, "witness {}", r["witness"]);

    let p = models::fig2();
    let (dec, g) = pipeline(&p)?;
    let label = fig2_labels(&dec);
    let mut sorted = label.clone();
    sorted.sort();
    ensure!(sorted == vec![0, 1, 2, 3], "blocks are not the four Bell-type states: {label:?}");
    let verdict = check_scale_invariance(&g);
    ensure!(matches!(verdict.witness, Some(Witness::Cycle(ref c)) if c.len() >= 2), "witness {:?}", verdict.witness);
    // α → γ → θ → α
    let (alpha, gamma, theta) = (0, 2, 3);
    let cycles = enumerate_cycles(&g, 3, usize::MAX).map_err(|e| e.to_string())?;
    let found = cycles.cycles.iter().any(|c| {
        let l: Vec<usize> = c.iter().map(|&v| label[v]).collect();
        l == [alpha, gamma, theta] || l == [gamma, theta, alpha] || l == [theta, alpha, gamma]
    });
    ensure!(found, "cycle (α,γ,θ) missing");

    let t = TransferMatrices::from_graph(&g);
    let mut values = Vec::new();
    for n in 2..=5 {
        let tr = degeneracy(&t, n).map_err(|e| e.to_string())?;
        let (k, _) = ed::kernel_dim(&build_chain(&p, n, ed::DEFAULT_ED_CAP).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        ensure!(tr == BigUint::from(k), "N={n}: Tr(M^N)={tr}, ED {k}");
        ensure!(k == 1 << n, "N={n}: kernel {k}, expected {}", 1 << n);
        values.push(k);
    }
    Ok(format!("4 blocks, cycle (α,γ,θ), witness length {witness_len}, degeneracies {values:?}"))
}

fn criterion_3(corpus: &[Analyzed]) -> Checked {
    ensure!(corpus.len() >= 50, "corpus has {} entries", corpus.len());
    let mut checks = 0;
    let builtins = [models::ising(), models::fig2(), models::zero(2), models::zero(3)];
    for (i, p) in builtins.iter().enumerate() {
        let (_, g) = pipeline(p)?;
        for n in 2..=max_n(p.site_dim()) {
            let dims = census_agrees(p, &g, n).map_err(|e| format!("builtin {i}: {e}"))?;
            if i == 0 {
                ensure!(dims[1] == BigUint::ZERO, "Ising has energy-1 states at N={n}");
            }
            checks += 1;
        }
    }
    for (i, a) in corpus.iter().enumerate() {
        ensure!(a.entry.d() <= 6 && a.entry.blocks.len() <= 4, "entry {i} out of range");
        for n in 2..=max_n(a.entry.d()) {
            census_agrees(&a.entry.term, &a.graph, n).map_err(|e| format!("entry {i}: {e}"))?;
            checks += 1;
        }
    }
    Ok(format!("{} builtin + {} synthesized terms, {checks} (term, N) pairs", builtins.len(), corpus.len()))
}

fn criterion_4(corpus: &[Analyzed]) -> Checked {
    ensure!(corpus.len() >= 50, "corpus has {} entries", corpus.len());
    let mut worst = 0.0f64;
    let mut worst_rec = 0.0f64;
    for (i, a) in corpus.iter().enumerate() {
        let r = a.dec.residuals.max();
        ensure!(r < 1e-8, "entry {i}: postcondition residual {r:e}");
        ensure!(a.bonds.reconstruction_residual < 1e-8, "entry {i}: reconstruction {:e}", a.bonds.reconstruction_residual);
        let mut got: Vec<_> = a.dec.block_dims().iter().map(|b| (b.l, b.r)).collect();
        let mut want: Vec<_> = a.entry.blocks.iter().map(|b| (b.l, b.r)).collect();
        got.sort();
        want.sort();
        ensure!(got == want, "entry {i}: blocks {got:?} vs requested {want:?}");
        worst = worst.max(r);
        worst_rec = worst_rec.max(a.bonds.reconstruction_residual);
    }
    Ok(format!("{} terms, max residual {worst:.1e}, max reconstruction {worst_rec:.1e}", corpus.len()))
}

fn criterion_5(corpus: &[Analyzed]) -> Checked {
    ensure!(corpus.len() >= 50, "corpus has {} entries", corpus.len());
    let mut seen = 0;
    let mut worst = 0.0f64;
    for (i, a) in corpus.iter().enumerate() {
        let verdict = check_scale_invariance(&a.graph);
        if !verdict.scale_invariant {
            continue;
        }
        seen += 1;
        let d = a.entry.d();
        let k = verdict.loops.len();
        let chain = canonicalize(&a.entry.term, &a.dec, &a.bonds, TOL).map_err(|e| format!("entry {i}: {e}"))?;
        let n = max_n(d).min(4);
        let h = build_chain(&chain.relabeled, n, ed::DEFAULT_ED_CAP).map_err(|e| e.to_string())?;
        let (_, kernel) = ed::kernel_dim(&h).map_err(|e| e.to_string())?;
        let target = loop_product_basis(k, d, n);
        ensure!(kernel.ncols() == k, "entry {i}: kernel dim {} vs k={k}", kernel.ncols());
        if k > 0 {
            let dist = linalg::subspace_distance(&kernel, &target).map_err(|e| e.to_string())?;
            ensure!(dist < 1e-8, "entry {i}: principal angle {dist:e}");
            worst = worst.max(dist);
        }
    }
    ensure!(seen > 0, "no scale-invariant corpus entries");
    for d in 1..=6 {
        for k in 1..=d {
            let p = canonical_hamiltonian(k, d).map_err(|e| e.to_string())?;
            let r = classify_phase(&p, TOL, 0);
            ensure!(r.outcome == Outcome::Classified, "canonical({k},{d}): {:?}", r.outcome);
            ensure!(r.degeneracy == Some(k), "canonical({k},{d}) classified as {:?}", r.degeneracy);
        }
    }
    Ok(format!("{seen} scale-invariant terms, max angle {worst:.1e}; canonical(k,d) fixed for 1 ≤ k ≤ d ≤ 6"))
}

fn criterion_6() -> Checked {
    let seeds = 0..10u64;
    let mut min_comm = f64::INFINITY;
    for seed in seeds.clone() {
        let map = random_mps_map(2, seed).map_err(|e| e.to_string())?;
        let parent = mps_parent(&map).map_err(|e| e.to_string())?;
        ensure!(parent.h_commutator_residual > 1e-3, "seed {seed}: h commutes ({:e})", parent.h_commutator_residual);
        min_comm = min_comm.min(parent.h_commutator_residual);
        let x = &map.s * &map.s;
        let check = verify_x(&parent.h, &x, TOL).map_err(|e| e.to_string())?;
        ensure!(check.pd && check.residual < 1e-10, "seed {seed}: verify_x residual {:e}", check.residual);
        let c = commutify(&parent.h, &x, TOL, &[3, 4]).map_err(|e| format!("seed {seed}: {e}"))?;
        let gap = linalg::op_norm(&(c.h_prime.op() - parent.p.op())).map_err(|e| e.to_string())?;
        ensure!(gap < 1e-9, "seed {seed}: h' differs from P by {gap:e}");
        for k in &c.correspondence {
            ensure!(k.holds(1e-8), "seed {seed}: correspondence fails at N={}: {k:?}", k.n);
        }
    }
    Ok(format!("10 maps, min commutator residual of h {min_comm:.2e}, correspondence at N=3,4"))
}

fn criterion_7(corpus: &[Analyzed]) -> Checked {
    ensure!(corpus.len() >= 50, "corpus has {} entries", corpus.len());
    let dir = std::env::temp_dir().join(format!("chainphase-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let term = dir.join("term.json");
    std::fs::write(&term, json::to_string(&json::term(&corpus[1].entry.term))).map_err(|e| e.to_string())?;
    let term = term.to_string_lossy().into_owned();
    let runs: Vec<Vec<&str>> = vec![
        vec!["analyze", "--model", "ising"],
        vec!["analyze", "--model", "fig2", "--seed", "5"],
        vec!["analyze", &term, "--seed", "3"],
        vec!["decompose", &term, "--seed", "3"],
        vec!["census", &term, "--N", "2..4"],
        vec!["ground", "--model", "fig2", "--N", "3"],
        vec!["bridge", "mps-parent", "--chi", "2", "--seed", "7"],
    ];
    for args in &runs {
        let (c1, a) = run(args);
        let (c2, b) = run(args);
        ensure!(c1 == c2 && a == b, "{args:?}: outputs differ");
        ensure!(!a.is_empty(), "{args:?}: no output");
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok(format!("{} commands byte-identical across two runs", runs.len()))
}

fn report(id: usize, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Checked) -> bool {
    let start = Instant::now();
    let result = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panicked: {}", msg.unwrap_or_default()))
    });
    let elapsed = start.elapsed();
    let result = match (result, limit) {
        (Ok(_), Some(l)) if elapsed > l => Err(format!("took {elapsed:.2?}, limit {l:?}")),
        (r, _) => r,
    };
    let (tag, detail) = match &result {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    println!("criterion {id} [{tag}] {name} ({elapsed:.2?}): {detail}");
    result.is_ok()
}

fn main() {
    let mut ok = true;
    ok &= report(1, "Ising end-to-end", Some(Duration::from_secs(1)), criterion_1);
    ok &= report(2, "fig2 model", Some(Duration::from_secs(10)), criterion_2);

    // criterion 3's budget covers building the corpus, which 4, 5 and 7 reuse
    let mut corpus = Err(String::from("not built"));
    ok &= report(3, "census equals exact diagonalization", Some(Duration::from_secs(300)), || {
        corpus = analyze_corpus();
        criterion_3(corpus.as_deref().map_err(Clone::clone)?)
    });
    let corpus = corpus.unwrap_or_default();
    ok &= report(4, "decomposition properties", None, || criterion_4(&corpus));
    ok &= report(5, "canonicalization", None, || criterion_5(&corpus));
    ok &= report(6, "bridge to commuting terms", Some(Duration::from_secs(60)), criterion_6);
    ok &= report(7, "deterministic JSON", None, || criterion_7(&corpus));
    if !ok {
        std::process::exit(1);
    }
}
