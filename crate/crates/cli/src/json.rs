//! JSON encodings of core types. Object keys keep insertion order so the
//! output is stable byte for byte.

use std::str::FromStr;

use chainphase_core::canonical::{Outcome, PhaseReport};
use chainphase_core::decomposition::SiteDecomposition;
use chainphase_core::graph::InteractionGraph;
use chainphase_core::groundspace::{GroundState, Mps, ScaleInvarianceVerdict, SpectralCensus, Witness};
use chainphase_core::{c64, BigUint, CMatrix, LocalTerm, TwoSite};
use serde_json::{json, Map, Number, Value};

pub fn complex(z: c64) -> Value {
    json!([z.re, z.im])
}

pub fn vector(v: &[c64]) -> Value {
    Value::Array(v.iter().map(|&z| complex(z)).collect())
}

/// Row-major `[[[re, im], ...], ...]`.
pub fn matrix(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| complex(m[(i, j)])).collect()))
            .collect(),
    )
}

pub fn parse_matrix(v: &Value) -> Result<CMatrix, String> {
    let rows = v.as_array().ok_or("matrix must be an array of rows")?;
    let n = rows.len();
    let mut entries = Vec::with_capacity(n);
    for row in rows {
        let row = row.as_array().ok_or("matrix rows must be arrays")?;
        if row.len() != rows.first().and_then(|r| r.as_array()).map_or(0, |r| r.len()) {
            return Err("matrix rows differ in length".into());
        }
        for z in row {
            let pair = z.as_array().filter(|p| p.len() == 2).ok_or("entries must be [re, im] pairs")?;
            let re = pair[0].as_f64().ok_or("entry is not a number")?;
            let im = pair[1].as_f64().ok_or("entry is not a number")?;
            entries.push(c64::new(re, im));
        }
    }
    let m = if n == 0 { 0 } else { entries.len() / n };
    Ok(CMatrix::from_fn(n, m, |i, j| entries[i * m + j]))
}

/// `{"d": …, "matrix": …}`.
pub fn term<T: TwoSite + ?Sized>(t: &T) -> Value {
    json!({ "d": t.site_dim(), "matrix": matrix(t.op()) })
}

/// Reads a local term; an object without `"matrix"` but with an `"h"` field
/// (the output of `bridge mps-parent`) is unwrapped first.
pub fn parse_term(v: &Value, tol: f64) -> Result<LocalTerm, String> {
    let v = match v.get("matrix") {
        Some(_) => v,
        None => v.get("h").ok_or("expected an object with \"d\" and \"matrix\"")?,
    };
    let d = v.get("d").and_then(Value::as_u64).ok_or("missing integer field \"d\"")? as usize;
    let m = parse_matrix(v.get("matrix").ok_or("missing field \"matrix\"")?)?;
    LocalTerm::new(d, m, tol).map_err(|e| e.to_string())
}

pub fn big(n: &BigUint) -> Value {
    Value::Number(Number::from_str(&n.to_string()).expect("integer literal"))
}

pub fn blocks(dims: &[chainphase_core::BlockDims]) -> Value {
    Value::Array(dims.iter().map(|b| json!([b.l, b.r])).collect())
}

pub fn graph(g: &InteractionGraph) -> Value {
    json!({ "M": g.m, "R": g.r, "blocks": blocks(&g.block_dims) })
}

pub fn decomposition(dec: &SiteDecomposition) -> Value {
    json!({
        "d": dec.d,
        "blocks": dec.blocks.iter().map(|b| json!({
            "l": b.l(),
            "r": b.r(),
            "isometry": matrix(&b.isometry),
        })).collect::<Vec<_>>(),
        "residuals": {
            "second_slot": dec.residuals.second_slot,
            "first_slot": dec.residuals.first_slot,
            "structure": dec.residuals.structure,
        },
        "seed_used": dec.seed_used,
    })
}

/// `{"N": …, "dims": {"k": count}}`, energies with no states omitted.
pub fn census(c: &SpectralCensus) -> Value {
    let mut dims = Map::new();
    for (k, n) in c.dims.iter().enumerate() {
        if *n != BigUint::ZERO {
            dims.insert(k.to_string(), big(n));
        }
    }
    json!({ "N": c.n, "dims": dims })
}

pub fn witness(w: &Witness) -> Value {
    match w {
        Witness::Cycle(c) => json!({ "cycle": c }),
        Witness::HeavyLoop { vertex, weight } => json!({ "heavy_loop": { "vertex": vertex, "weight": weight } }),
    }
}

pub fn verdict(v: &ScaleInvarianceVerdict) -> Value {
    json!({
        "scale_invariant": v.scale_invariant,
        "loops": v.loops,
        "witness": v.witness.as_ref().map(witness),
    })
}

pub fn mps(m: &Mps) -> Value {
    json!({
        "bond_dim": m.bond_dim(),
        "phys_dim": m.phys_dim(),
        "tensor": m.tensors.iter().map(|site| site.iter().map(matrix).collect::<Vec<_>>()).collect::<Vec<_>>(),
    })
}

pub fn ground_state(s: &GroundState) -> Value {
    json!({
        "cycle": s.cycle,
        "kernel_choice": s.kernel_choice,
        "bond_vectors": s.bond_vectors.iter().map(|v| vector(v)).collect::<Vec<_>>(),
        "mps": mps(&s.mps),
    })
}

pub fn outcome_name(o: &Outcome) -> &'static str {
    match o {
        Outcome::Classified => "classified",
        Outcome::NotCommuting => "not_commuting",
        Outcome::NotScaleInvariant => "not_scale_invariant",
        Outcome::Failed(_) => "failed",
    }
}

pub fn phase_report(r: &PhaseReport) -> Value {
    let error = match &r.outcome {
        Outcome::Failed(e) => Value::String(e.to_string()),
        _ => Value::Null,
    };
    json!({
        "outcome": outcome_name(&r.outcome),
        "d": r.d,
        "tol": r.tol,
        "seed": r.seed,
        "commuting": r.commuting,
        "commutator_residual": r.commutator_residual,
        "blocks": blocks(&r.blocks),
        "decomposition_residual": r.decomposition_residual,
        "graph": r.graph.as_ref().map(graph),
        "scale_invariant": r.verdict.as_ref().map(|v| v.scale_invariant),
        "loops": r.verdict.as_ref().map(|v| v.loops.clone()),
        "witness": r.verdict.as_ref().and_then(|v| v.witness.as_ref()).map(witness),
        "degeneracy": r.degeneracy,
        "canonical_rep": r.canonical_rep.as_ref().map(|p| json!({
            "k": r.degeneracy,
            "d": p.site_dim(),
            "matrix": matrix(p.op()),
        })),
        "conventions": r.conventions,
        "error": error,
        "version": env!("CARGO_PKG_VERSION"),
    })
}

/// A report for input that never reached the pipeline.
pub fn failed_report(error: &str, tol: f64, seed: u64) -> Value {
    json!({
        "outcome": "failed",
        "tol": tol,
        "seed": seed,
        "commuting": null,
        "scale_invariant": null,
        "degeneracy": null,
        "canonical_rep": null,
        "conventions": [],
        "error": error,
        "version": env!("CARGO_PKG_VERSION"),
    })
}

pub fn to_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}
