//! Bond projectors between blocks and the interaction graph they define.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

#[allow(unused_imports)]
use num_traits::Float;

use crate::decomposition::SiteDecomposition;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::operators::{BlockDims, ProjectorTerm, TwoSite};

/// The term restricted to the bond between a site in block `from` and its
/// right neighbour in block `to`: `Q` acts on `H_{from,r} ⊗ H_{to,l}`.
#[derive(Clone, Debug)]
pub struct BondFactor {
    pub from: usize,
    pub to: usize,
    pub q: CMatrix,
    pub kernel_dim: usize,
    /// Orthonormal columns spanning `ker q`, each phase-normalized.
    pub kernel_basis: CMatrix,
}

impl BondFactor {
    /// `r_from · l_to`.
    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn rank(&self) -> usize {
        self.dim() - self.kernel_dim
    }
}

/// All bond factors, indexed by ordered block pair.
#[derive(Clone, Debug)]
pub struct BondFactors {
    pub block_dims: Vec<BlockDims>,
    factors: Vec<BondFactor>,
    /// Frobenius distance between the term and its reassembly from the factors.
    pub reconstruction_residual: f64,
}

impl BondFactors {
    pub fn num_blocks(&self) -> usize {
        self.block_dims.len()
    }

    pub fn get(&self, from: usize, to: usize) -> &BondFactor {
        &self.factors[from * self.num_blocks() + to]
    }

    pub fn iter(&self) -> impl Iterator<Item = &BondFactor> {
        self.factors.iter()
    }
}

/// Threshold separating the 0 and 1 eigenvalues of a projector.
const PROJECTOR_SPLIT: f64 = 0.5;

/// Compress `p` onto every block pair and split off the identity on the outer
/// slots.
pub fn extract_bond_projectors(p: &ProjectorTerm, dec: &SiteDecomposition, tol: f64) -> Result<BondFactors> {
    let d = p.site_dim();
    if dec.d != d {
        return Err(Error::Shape { rows: dec.d, cols: dec.d, expected: d });
    }
    let limit = tol.sqrt();
    let n = dec.num_blocks();
    let mut factors = Vec::with_capacity(n * n);
    let mut rebuilt = linalg::zeros(d * d, d * d);
    for (from, ba) in dec.blocks.iter().enumerate() {
        for (to, bb) in dec.blocks.iter().enumerate() {
            let v = linalg::kron(&ba.isometry, &bb.isometry);
            let c = v.adjoint() * p.op() * &v;
            let (outer_l, m, outer_r) = (ba.l(), ba.r() * bb.l(), bb.r());
            let q = linalg::hermitian_part(&linalg::trace_outer(&c, outer_l, m, outer_r));
            let embedded = linalg::embed_middle(outer_l, &q, outer_r);
            let residual = linalg::fro_norm(&(&c - &embedded));
            if !(residual <= limit) {
                return Err(Error::FactorizationFailed { from, to, residual });
            }
            rebuilt += &v * &embedded * v.adjoint();

            let e = linalg::eigh(&q)?;
            let mut kernel = e.columns_where(|x| x < PROJECTOR_SPLIT);
            for j in 0..kernel.ncols() {
                let mut col = linalg::column(&kernel, j);
                linalg::normalize_phase(&mut col);
                for (i, z) in col.into_iter().enumerate() {
                    kernel[(i, j)] = z;
                }
            }
            factors.push(BondFactor { from, to, kernel_dim: kernel.ncols(), q, kernel_basis: kernel });
        }
    }
    let reconstruction_residual = linalg::fro_norm(&(rebuilt - p.op()));
    if !(reconstruction_residual <= limit) {
        return Err(Error::Verification(format!(
            "bond factors reassemble the term with residual {reconstruction_residual:.3e}"
        )));
    }
    Ok(BondFactors { block_dims: dec.block_dims(), factors, reconstruction_residual })
}

/// Weighted digraph on blocks: `m[a][b] = dim ker Q_ab`, `r[a][b] = rank Q_ab`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InteractionGraph {
    pub m: Vec<Vec<usize>>,
    pub r: Vec<Vec<usize>>,
    pub block_dims: Vec<BlockDims>,
}

impl InteractionGraph {
    /// Build directly from matrices, checking `m + r = r_a · l_b`.
    pub fn from_parts(m: Vec<Vec<usize>>, r: Vec<Vec<usize>>, block_dims: Vec<BlockDims>) -> Result<Self> {
        let n = block_dims.len();
        let square = |x: &Vec<Vec<usize>>| x.len() == n && x.iter().all(|row| row.len() == n);
        if !square(&m) || !square(&r) {
            return Err(Error::InvalidSpec(format!("graph matrices must be {n}x{n}")));
        }
        for a in 0..n {
            for b in 0..n {
                let want = block_dims[a].r * block_dims[b].l;
                if m[a][b] + r[a][b] != want {
                    return Err(Error::InvalidSpec(format!(
                        "M[{a}][{b}] + R[{a}][{b}] = {} but the bond space has dimension {want}",
                        m[a][b] + r[a][b]
                    )));
                }
            }
        }
        Ok(InteractionGraph { m, r, block_dims })
    }

    pub fn num_vertices(&self) -> usize {
        self.block_dims.len()
    }

    /// Edges `(a, b, weight)` in row-major order, self-loops included.
    pub fn edges(&self) -> Vec<(usize, usize, usize)> {
        let n = self.num_vertices();
        let mut out = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if self.m[a][b] > 0 {
                    out.push((a, b, self.m[a][b]));
                }
            }
        }
        out
    }
}

pub fn build_graph(bonds: &BondFactors) -> InteractionGraph {
    let n = bonds.num_blocks();
    let m = (0..n).map(|a| (0..n).map(|b| bonds.get(a, b).kernel_dim).collect()).collect();
    let r = (0..n).map(|a| (0..n).map(|b| bonds.get(a, b).rank()).collect()).collect();
    InteractionGraph { m, r, block_dims: bonds.block_dims.clone() }
}

/// Graphviz rendering; vertex `a{i}` is labelled `α{i} (l,r)`.
pub fn export_dot(g: &InteractionGraph) -> String {
    let mut s = String::from("digraph G {\n");
    for (i, b) in g.block_dims.iter().enumerate() {
        let _ = writeln!(s, "  a{i} [label=\"α{i} ({},{})\"];", b.l, b.r);
    }
    for (a, b, k) in g.edges() {
        let _ = writeln!(s, "  a{a} -> a{b} [label=\"k={k}\"];");
    }
    s.push_str("}\n");
    s
}
