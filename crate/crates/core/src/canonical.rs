//! Reduction of a scale-invariant chain to the canonical representative of
//! its phase, and the phase report.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::decomposition::{decompose_site, SiteDecomposition};
use crate::ed::{self, build_chain};
use crate::error::{Error, Result};
use crate::graph::{build_graph, extract_bond_projectors, BondFactors, InteractionGraph};
use crate::groundspace::{check_scale_invariance, loop_states, GroundLoopState, ScaleInvarianceVerdict};
use crate::linalg::{self, c64, CMatrix};
use crate::operators::{check_commuting, BlockDims, ProjectorTerm, TwoSite};

/// Chain length used by the internal ground-space checks.
fn check_length(d: usize) -> usize {
    if d.pow(3) <= ed::DEFAULT_ED_CAP {
        3
    } else {
        2
    }
}

/// Replace every bond factor that is not a self-loop by the identity.
pub fn prune_to_loops(p: &ProjectorTerm, dec: &SiteDecomposition, bonds: &BondFactors, tol: f64) -> Result<ProjectorTerm> {
    let verdict = check_scale_invariance(&build_graph(bonds));
    if !verdict.scale_invariant {
        return Err(Error::NotScaleInvariant);
    }
    let d = p.site_dim();
    let mut op = linalg::zeros(d * d, d * d);
    for (a, ba) in dec.blocks.iter().enumerate() {
        for (b, bb) in dec.blocks.iter().enumerate() {
            let v = linalg::kron(&ba.isometry, &bb.isometry);
            let q = if a == b { bonds.get(a, b).q.clone() } else { linalg::identity(ba.r() * bb.l()) };
            op += &v * linalg::embed_middle(ba.l(), &q, bb.r()) * v.adjoint();
        }
    }
    let pruned = ProjectorTerm::new(d, linalg::hermitian_part(&op), tol)?;
    let n = check_length(d);
    if !same_chain_kernel(p, &pruned, n)? {
        return Err(Error::Verification(format!("pruning changed the ground space at N = {n}")));
    }
    Ok(pruned)
}

/// ED kernels of the two chains of length `n` coincide.
pub fn same_chain_kernel<A: TwoSite + ?Sized, B: TwoSite + ?Sized>(a: &A, b: &B, n: usize) -> Result<bool> {
    let ka = ed::kernel_dim(&build_chain(a, n, ed::DEFAULT_ED_CAP)?)?.1;
    let kb = ed::kernel_dim(&build_chain(b, n, ed::DEFAULT_ED_CAP)?)?.1;
    ed::same_subspace(&ka, &kb, 1e-8)
}

/// Reference product vector `ξ_r ⊗ ξ_l` for one loop.
#[derive(Clone, Debug)]
pub struct LoopReference {
    pub block: usize,
    pub xi_r: Vec<c64>,
    pub xi_l: Vec<c64>,
}

#[derive(Clone, Debug)]
pub struct DisentanglerSpec {
    pub refs: Vec<LoopReference>,
    /// `U_α` on `H_{α_r} ⊗ H_{α_l}`, one per loop, in the order of `refs`.
    pub local: Vec<CMatrix>,
    /// The two-site unitary, identity outside the loop subspaces.
    pub u: CMatrix,
}

/// Orthonormal basis whose first vector is `v`, completed from the standard
/// basis.
fn complete_basis(v: &[c64]) -> CMatrix {
    let n = v.len();
    let mut vecs = vec![v.to_vec()];
    vecs.extend((0..n).map(|k| linalg::basis_vector(n, k)));
    let basis = linalg::orthonormalize(&vecs, 1e-8);
    linalg::columns_to_matrix(&basis[..n], n)
}

/// A unitary sending the unit vector `from` to the unit vector `to`.
pub fn rotate_onto(from: &[c64], to: &[c64]) -> CMatrix {
    let a = complete_basis(from);
    let b = complete_basis(to);
    b * a.adjoint()
}

/// Build `U` from the loop kernel vectors. `refs` defaults to the first basis
/// vector of each factor.
pub fn disentangling_unitary(
    dec: &SiteDecomposition,
    loops: &[GroundLoopState],
    refs: Option<&[LoopReference]>,
) -> Result<DisentanglerSpec> {
    let d = dec.d;
    let mut u = linalg::identity(d * d);
    let mut used = Vec::with_capacity(loops.len());
    let mut local = Vec::with_capacity(loops.len());
    for (i, ls) in loops.iter().enumerate() {
        let block = &dec.blocks[ls.block];
        let (l, r) = (block.l(), block.r());
        if ls.phi.len() != r * l {
            return Err(Error::DegenerateLoopKernel { block: ls.block, dim: ls.phi.len() });
        }
        let reference = match refs {
            Some(list) => list.get(i).cloned().ok_or_else(|| Error::Verification(format!("no reference for loop {i}")))?,
            None => LoopReference { block: ls.block, xi_r: linalg::basis_vector(r, 0), xi_l: linalg::basis_vector(l, 0) },
        };
        let target = linalg::to_vec(&linalg::kron(&linalg::from_column(&reference.xi_r), &linalg::from_column(&reference.xi_l)));
        let ua = rotate_onto(&ls.phi, &target);
        let w = linalg::kron(&block.isometry, &block.isometry);
        let delta = linalg::embed_middle(l, &(&ua - linalg::identity(r * l)), r);
        u += &w * delta * w.adjoint();
        used.push(reference);
        local.push(ua);
    }
    Ok(DisentanglerSpec { refs: used, local, u })
}

/// `U P U†`, checked to be a commuting projector with the same graph whose
/// loop kernels are the reference product vectors.
pub fn conjugate(p: &ProjectorTerm, dec: &SiteDecomposition, spec: &DisentanglerSpec, tol: f64) -> Result<ProjectorTerm> {
    let op = &spec.u * p.op() * spec.u.adjoint();
    let out = ProjectorTerm::new(p.site_dim(), linalg::hermitian_part(&op), tol)?;
    let comm = check_commuting(&out, tol.sqrt())?;
    if !comm.commuting {
        return Err(Error::NotCommuting { residual: comm.residual });
    }
    let before = build_graph(&extract_bond_projectors(p, dec, tol)?);
    let bonds = extract_bond_projectors(&out, dec, tol)?;
    if build_graph(&bonds) != before {
        return Err(Error::Verification("conjugation changed the interaction graph".into()));
    }
    for (reference, ls) in spec.refs.iter().zip(loop_states(&bonds)) {
        let target = linalg::kron(&linalg::from_column(&reference.xi_r), &linalg::from_column(&reference.xi_l));
        let q = &bonds.get(ls.block, ls.block).q;
        if linalg::fro_norm(&(q * &target)) > tol.sqrt() {
            return Err(Error::Verification(format!("loop {} is not disentangled", ls.block)));
        }
    }
    Ok(out)
}

/// Site unitary sending the product loop states `W_α(ξ_l ⊗ ξ_r)` to the first
/// basis vectors, in loop order.
pub fn relabeling_unitary(dec: &SiteDecomposition, refs: &[LoopReference]) -> CMatrix {
    let d = dec.d;
    let mut vecs: Vec<Vec<c64>> = refs
        .iter()
        .map(|rf| {
            let w = &dec.blocks[rf.block].isometry;
            let prod = linalg::kron(&linalg::from_column(&rf.xi_l), &linalg::from_column(&rf.xi_r));
            linalg::to_vec(&(w * prod))
        })
        .collect();
    vecs.extend((0..d).map(|k| linalg::basis_vector(d, k)));
    let basis = linalg::columns_to_matrix(&linalg::orthonormalize(&vecs, 1e-8)[..d], d);
    basis.adjoint().to_owned()
}

/// `1⊗1 − Σ_{a<k} |aa⟩⟨aa|` on site dimension `d`.
pub fn canonical_hamiltonian(k: usize, d: usize) -> Result<ProjectorTerm> {
    if k == 0 || k > d {
        return Err(Error::InvalidK { k, d });
    }
    let mut op = linalg::identity(d * d);
    for a in 0..k {
        op[(a * d + a, a * d + a)] = linalg::real(0.0);
    }
    ProjectorTerm::new(d, op, 1e-12)
}

/// Every stage of the reduction, for inspection and testing.
#[derive(Clone, Debug)]
pub struct CanonicalChain {
    pub pruned: ProjectorTerm,
    pub disentangler: DisentanglerSpec,
    pub conjugated: ProjectorTerm,
    /// Site unitary `V` with `V W_α(ξ_l ⊗ ξ_r) = |a⟩` for the `a`-th loop.
    pub relabel: CMatrix,
    /// `(V⊗V) U P̃ U† (V⊗V)†`; its chains share their ground space with the
    /// canonical term.
    pub relabeled: ProjectorTerm,
    pub canonical: Option<ProjectorTerm>,
}

pub fn canonicalize(p: &ProjectorTerm, dec: &SiteDecomposition, bonds: &BondFactors, tol: f64) -> Result<CanonicalChain> {
    let pruned = prune_to_loops(p, dec, bonds, tol)?;
    let pruned_bonds = extract_bond_projectors(&pruned, dec, tol)?;
    let loops = loop_states(&pruned_bonds);
    let disentangler = disentangling_unitary(dec, &loops, None)?;
    let conjugated = conjugate(&pruned, dec, &disentangler, tol)?;
    let relabel = relabeling_unitary(dec, &disentangler.refs);
    let vv = linalg::kron(&relabel, &relabel);
    let op = &vv * conjugated.op() * vv.adjoint();
    let relabeled = ProjectorTerm::new(p.site_dim(), linalg::hermitian_part(&op), tol)?;
    let canonical = if loops.is_empty() { None } else { Some(canonical_hamiltonian(loops.len(), p.site_dim())?) };
    Ok(CanonicalChain { pruned, disentangler, conjugated, relabel, relabeled, canonical })
}

/// Orthonormal basis of `span{|a⟩^⊗N : a < k}`.
pub fn loop_product_basis(k: usize, d: usize, n: usize) -> CMatrix {
    let dim = d.pow(n as u32);
    let mut m = linalg::zeros(dim, k);
    for a in 0..k {
        let idx = (0..n).fold(0, |acc, _| acc * d + a);
        m[(idx, a)] = linalg::real(1.0);
    }
    m
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Classified,
    NotCommuting,
    NotScaleInvariant,
    Failed(Error),
}

/// Everything learned about one term. Fields after the failing stage stay
/// empty.
#[derive(Clone, Debug)]
pub struct PhaseReport {
    pub outcome: Outcome,
    pub d: usize,
    pub tol: f64,
    pub seed: u64,
    pub commuting: bool,
    pub commutator_residual: f64,
    pub blocks: Vec<BlockDims>,
    pub decomposition_residual: Option<f64>,
    pub graph: Option<InteractionGraph>,
    pub verdict: Option<ScaleInvarianceVerdict>,
    /// Number of loops; the ground-state degeneracy for every `N`.
    pub degeneracy: Option<usize>,
    pub canonical_rep: Option<ProjectorTerm>,
    pub conventions: Vec<String>,
}

impl PhaseReport {
    /// Same phase under the classification by degeneracy: both scale
    /// invariant and with equal `k`. No interpolating path is constructed.
    pub fn same_phase(&self, other: &PhaseReport) -> Option<bool> {
        match (self.outcome == Outcome::Classified, other.outcome == Outcome::Classified) {
            (true, true) => Some(self.degeneracy == other.degeneracy),
            _ => None,
        }
    }
}

fn conventions() -> Vec<String> {
    [
        "two-site basis index i*d+j with i the left site",
        "block basis index a*r+b for |a>_l (x) |b>_r; l carries the algebra of the second-slot factors",
        "blocks ordered by (l*r, l, fingerprint of the first isometry column)",
        "loop reference vectors: first basis vector of each factor",
        "canonical representative embedded in the input site dimension",
        "phase equality is the degeneracy criterion; no interpolating path is constructed",
    ]
    .iter()
    .map(|s| String::from(*s))
    .collect()
}

/// Run the whole pipeline on a projector.
pub fn classify_phase(p: &ProjectorTerm, tol: f64, seed: u64) -> PhaseReport {
    let mut report = PhaseReport {
        outcome: Outcome::Classified,
        d: p.site_dim(),
        tol,
        seed,
        commuting: false,
        commutator_residual: f64::NAN,
        blocks: Vec::new(),
        decomposition_residual: None,
        graph: None,
        verdict: None,
        degeneracy: None,
        canonical_rep: None,
        conventions: conventions(),
    };
    if let Err(e) = classify_into(p, tol, seed, &mut report) {
        report.outcome = Outcome::Failed(e);
    }
    report
}

fn classify_into(p: &ProjectorTerm, tol: f64, seed: u64, report: &mut PhaseReport) -> Result<()> {
    let comm = check_commuting(p, tol)?;
    report.commuting = comm.commuting;
    report.commutator_residual = comm.residual;
    if !comm.commuting {
        report.outcome = Outcome::NotCommuting;
        return Ok(());
    }
    let dec = decompose_site(p, tol, seed)?;
    report.blocks = dec.block_dims();
    report.decomposition_residual = Some(dec.residuals.max());
    let bonds = extract_bond_projectors(p, &dec, tol)?;
    let graph = build_graph(&bonds);
    let verdict = check_scale_invariance(&graph);
    report.graph = Some(graph);
    let scale_invariant = verdict.scale_invariant;
    let k = verdict.loops.len();
    report.verdict = Some(verdict);
    if !scale_invariant {
        report.outcome = Outcome::NotScaleInvariant;
        return Ok(());
    }
    report.degeneracy = Some(k);
    if k > 0 {
        report.canonical_rep = Some(canonical_hamiltonian(k, p.site_dim())?);
    } else {
        report.conventions.push("no loops: the chain is frustrated for every N".into());
    }
    Ok(())
}
