//! Two-site operators: local terms, projectors, the commutation test and the
//! operator Schmidt decomposition across the bond.

use alloc::format;
use alloc::vec::Vec;

use faer::Mat;
#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMatrix};

/// Anything acting on two adjacent sites of dimension `site_dim`.
pub trait TwoSite {
    fn site_dim(&self) -> usize;
    fn op(&self) -> &CMatrix;
}

fn check_shape(d: usize, op: &CMatrix) -> Result<()> {
    let n = d * d;
    if d == 0 || op.nrows() != n || op.ncols() != n {
        return Err(Error::Shape { rows: op.nrows(), cols: op.ncols(), expected: n });
    }
    for j in 0..n {
        for i in 0..n {
            let z = op[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite);
            }
        }
    }
    Ok(())
}

/// Hermitian operator on two adjacent sites; the one datum that defines a
/// translation-invariant chain.
#[derive(Clone, Debug)]
pub struct LocalTerm {
    site_dim: usize,
    op: CMatrix,
}

impl LocalTerm {
    /// Validates shape and hermiticity. Inputs within `tol` of Hermitian are
    /// replaced by their Hermitian part.
    pub fn new(site_dim: usize, op: CMatrix, tol: f64) -> Result<Self> {
        check_shape(site_dim, &op)?;
        let defect = linalg::hermiticity_defect(&op);
        if defect > tol {
            return Err(Error::NotHermitian { defect });
        }
        Ok(LocalTerm { site_dim, op: linalg::hermitian_part(&op) })
    }

    pub fn into_op(self) -> CMatrix {
        self.op
    }
}

impl TwoSite for LocalTerm {
    fn site_dim(&self) -> usize {
        self.site_dim
    }
    fn op(&self) -> &CMatrix {
        &self.op
    }
}

/// Hermitian projector on two adjacent sites.
#[derive(Clone, Debug)]
pub struct ProjectorTerm {
    site_dim: usize,
    op: CMatrix,
}

impl ProjectorTerm {
    pub fn new(site_dim: usize, op: CMatrix, tol: f64) -> Result<Self> {
        let h = LocalTerm::new(site_dim, op, tol)?;
        let p = h.op;
        let defect = linalg::fro_norm(&(&p * &p - &p));
        if defect > tol.sqrt().max(1e-8) {
            return Err(Error::NotProjector { defect });
        }
        Ok(ProjectorTerm { site_dim, op: p })
    }

    pub fn as_local_term(&self) -> LocalTerm {
        LocalTerm { site_dim: self.site_dim, op: self.op.clone() }
    }

    /// Rank of the projector (its trace, rounded).
    pub fn rank(&self) -> usize {
        linalg::trace(&self.op).re.round().max(0.0) as usize
    }
}

impl TwoSite for ProjectorTerm {
    fn site_dim(&self) -> usize {
        self.site_dim
    }
    fn op(&self) -> &CMatrix {
        &self.op
    }
}

/// Projector onto the positive eigenspaces of `h`, so that `ker P = ker h`.
pub fn projectorize(h: &LocalTerm, tol: f64) -> Result<ProjectorTerm> {
    let e = linalg::eigh(&h.op)?;
    let min = e.values.first().copied().unwrap_or(0.0);
    if min < -tol.sqrt() {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let top = e.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let thr = tol.max(linalg::rank_threshold(top));
    let range = e.columns_where(|v| v > thr);
    let p = linalg::hermitian_part(&linalg::projector_onto(&range));
    Ok(ProjectorTerm { site_dim: h.site_dim, op: p })
}

/// Outcome of the commutation test.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct CommutationCheck {
    pub commuting: bool,
    /// `‖[P⊗1, 1⊗P]‖` in operator norm on three sites.
    pub residual: f64,
}

/// Operator norm of `[A⊗1_d, 1_d⊗A]` on `(ℂ^d)^{⊗3}`.
pub fn commutator_residual<T: TwoSite + ?Sized>(term: &T) -> Result<f64> {
    let d = term.site_dim();
    let id = linalg::identity(d);
    let left = linalg::kron(term.op(), &id);
    let right = linalg::kron(&id, term.op());
    Ok(linalg::op_norm(&linalg::commutator(&left, &right))?)
}

pub fn check_commuting<T: TwoSite + ?Sized>(term: &T, tol: f64) -> Result<CommutationCheck> {
    let residual = commutator_residual(term)?;
    Ok(CommutationCheck { commuting: residual <= tol, residual })
}

/// `Σ_i left_i ⊗ right_i`, both factor lists Hermitian and linearly
/// independent. The left factors are Hilbert–Schmidt orthonormal; the weights
/// live in the right factors.
#[derive(Clone, Debug)]
pub struct SchmidtPair {
    pub left_factors: Vec<CMatrix>,
    pub right_factors: Vec<CMatrix>,
}

impl SchmidtPair {
    pub fn rank(&self) -> usize {
        self.left_factors.len()
    }

    pub fn reconstruct(&self) -> CMatrix {
        let d = self.left_factors.first().map(|m| m.nrows()).unwrap_or(0);
        let mut acc = linalg::zeros(d * d, d * d);
        for (a, b) in self.left_factors.iter().zip(&self.right_factors) {
            acc += linalg::kron(a, b);
        }
        acc
    }
}

/// Reshuffle a two-site operator so that rows index the first site's
/// operator space and columns the second's: `R[(i,i'),(j,j')] = A[(i,j),(i',j')]`.
pub fn realign(op: &CMatrix, d: usize) -> CMatrix {
    Mat::from_fn(d * d, d * d, |row, col| {
        let (i, ip) = (row / d, row % d);
        let (j, jp) = (col / d, col % d);
        op[(i * d + j, ip * d + jp)]
    })
}

fn hermitian_to_real(h: &CMatrix) -> Vec<f64> {
    let mut v = Vec::with_capacity(2 * h.nrows() * h.ncols());
    for j in 0..h.ncols() {
        for i in 0..h.nrows() {
            v.push(h[(i, j)].re);
            v.push(h[(i, j)].im);
        }
    }
    v
}

fn real_to_hermitian(v: &[f64], d: usize) -> CMatrix {
    let m = Mat::from_fn(d, d, |i, j| {
        let k = 2 * (j * d + i);
        c64::new(v[k], v[k + 1])
    });
    linalg::hermitian_part(&m)
}

/// Operator Schmidt decomposition of a Hermitian two-site operator with
/// Hermitian factors on both sides.
pub fn operator_schmidt<T: TwoSite + ?Sized>(term: &T, _tol: f64) -> Result<SchmidtPair> {
    let d = term.site_dim();
    let op = term.op();
    let realigned = realign(op, d);
    let sv = linalg::svd(&realigned)?;
    let thr = linalg::rank_threshold(sv.s.first().copied().unwrap_or(0.0));
    let rank = sv.s.iter().filter(|&&s| s > thr).count();
    if rank == 0 {
        return Ok(SchmidtPair { left_factors: Vec::new(), right_factors: Vec::new() });
    }

    // The left span is closed under adjoint, so its Hermitian elements form a
    // real space of the same dimension; take Hermitian and anti-Hermitian parts
    // of every singular factor and extract a real orthonormal basis.
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(2 * rank);
    for k in 0..rank {
        let a = Mat::from_fn(d, d, |i, ip| sv.u[(i * d + ip, k)]);
        let herm = linalg::hermitian_part(&a);
        let anti = linalg::scale(&(&a - a.adjoint()), c64::new(0.0, -0.5));
        cols.push(hermitian_to_real(&herm));
        cols.push(hermitian_to_real(&anti));
    }
    let real = Mat::from_fn(2 * d * d, cols.len(), |i, j| cols[j][i]);
    let basis = real.thin_svd().map_err(|_| crate::error::LinalgError::NoConvergence)?;
    let u = basis.U();

    let mut left_factors = Vec::with_capacity(rank);
    let mut right_factors = Vec::with_capacity(rank);
    for k in 0..rank {
        let v: Vec<f64> = (0..2 * d * d).map(|i| u[(i, k)]).collect();
        let mut h = real_to_hermitian(&v, d);
        let n = linalg::fro_norm(&h);
        h = linalg::scale(&h, linalg::real(1.0 / n));
        // right factor: first-slot Hilbert–Schmidt contraction of the operator with h
        let g = Mat::from_fn(d, d, |j, jp| {
            let mut acc = c64::new(0.0, 0.0);
            for a in 0..d {
                for ap in 0..d {
                    acc += h[(a, ap)].conj() * op[(a * d + j, ap * d + jp)];
                }
            }
            acc
        });
        left_factors.push(h);
        right_factors.push(linalg::hermitian_part(&g));
    }
    Ok(SchmidtPair { left_factors, right_factors })
}

/// Shape of one block `H_l ⊗ H_r` of a site decomposition.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockDims {
    pub l: usize,
    pub r: usize,
}

impl BlockDims {
    pub const fn new(l: usize, r: usize) -> Self {
        BlockDims { l, r }
    }
    pub const fn dim(&self) -> usize {
        self.l * self.r
    }
}

/// Build a commuting projector with prescribed block structure and bond
/// kernel dimensions: random site basis, random kernel subspaces, assembled
/// block pair by block pair.
pub fn synthesize_local_term(
    blocks: &[BlockDims],
    edge_kernel_dims: &[Vec<usize>],
    seed: u64,
) -> Result<ProjectorTerm> {
    let nb = blocks.len();
    if nb == 0 {
        return Err(Error::InvalidSpec("no blocks".into()));
    }
    if blocks.iter().any(|b| b.l == 0 || b.r == 0) {
        return Err(Error::InvalidSpec("block factors must be at least one dimensional".into()));
    }
    if edge_kernel_dims.len() != nb || edge_kernel_dims.iter().any(|row| row.len() != nb) {
        return Err(Error::InvalidSpec(format!("kernel dims must be {nb}x{nb}")));
    }
    for (a, row) in edge_kernel_dims.iter().enumerate() {
        for (b, &m) in row.iter().enumerate() {
            let cap = blocks[a].r * blocks[b].l;
            if m > cap {
                return Err(Error::InvalidSpec(format!(
                    "kernel dim {m} at ({a},{b}) exceeds r·l = {cap}"
                )));
            }
        }
    }
    let d: usize = blocks.iter().map(BlockDims::dim).sum();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let site_basis = linalg::haar_unitary(&mut rng, d);
    let mut offsets = Vec::with_capacity(nb);
    let mut off = 0;
    for b in blocks {
        offsets.push(off);
        off += b.dim();
    }
    let isometries: Vec<CMatrix> = blocks
        .iter()
        .zip(&offsets)
        .map(|(b, &o)| {
            let idx: Vec<usize> = (o..o + b.dim()).collect();
            linalg::select_columns(&site_basis, &idx)
        })
        .collect();

    let mut p = linalg::zeros(d * d, d * d);
    for a in 0..nb {
        for b in 0..nb {
            let n = blocks[a].r * blocks[b].l;
            let m = edge_kernel_dims[a][b];
            let q = if m == 0 {
                linalg::identity(n)
            } else {
                let u = linalg::haar_unitary(&mut rng, n);
                let idx: Vec<usize> = (0..m).collect();
                let k = linalg::select_columns(&u, &idx);
                linalg::identity(n) - linalg::projector_onto(&k)
            };
            let inner = linalg::embed_middle(blocks[a].l, &q, blocks[b].r);
            let w = linalg::kron(&isometries[a], &isometries[b]);
            p += &w * &inner * w.adjoint();
        }
    }
    ProjectorTerm::new(d, linalg::hermitian_part(&p), 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use alloc::vec;

    fn diag(entries: &[f64]) -> CMatrix {
        Mat::from_fn(entries.len(), entries.len(), |i, j| {
            if i == j {
                linalg::real(entries[i])
            } else {
                c64::new(0.0, 0.0)
            }
        })
    }

    #[test]
    fn projectorize_truncates_spectrum() {
        let h = LocalTerm::new(2, diag(&[0.0, 2.0, 3.0, 0.0]), 1e-9).unwrap();
        let p = projectorize(&h, 1e-9).unwrap();
        assert!(linalg::fro_norm(&(p.op() - diag(&[0.0, 1.0, 1.0, 0.0]))) < 1e-12);
    }

    #[test]
    fn projectorize_zero_and_fixed_point() {
        let z = LocalTerm::new(2, linalg::zeros(4, 4), 1e-9).unwrap();
        assert!(linalg::fro_norm(projectorize(&z, 1e-9).unwrap().op()) == 0.0);
        let ising = models::ising();
        let again = projectorize(&ising.as_local_term(), 1e-9).unwrap();
        assert!(linalg::fro_norm(&(again.op() - ising.op())) < 1e-12);
    }

    #[test]
    fn projectorize_rejects_bad_input() {
        let mut m = diag(&[0.0, 1.0, 1.0, 0.0]);
        m[(0, 1)] = c64::new(0.5, 0.0);
        assert!(matches!(LocalTerm::new(2, m, 1e-9), Err(Error::NotHermitian { .. })));
        let neg = LocalTerm::new(2, diag(&[-1.0, 1.0, 1.0, 0.0]), 1e-9).unwrap();
        assert!(matches!(projectorize(&neg, 1e-9), Err(Error::NotPsd { .. })));
        let wrong = linalg::zeros(3, 3);
        assert!(matches!(LocalTerm::new(2, wrong, 1e-9), Err(Error::Shape { .. })));
    }

    #[test]
    fn symmetrizes_small_defects() {
        let mut m = diag(&[0.0, 1.0, 1.0, 0.0]);
        m[(0, 1)] = c64::new(1e-12, 0.0);
        let h = LocalTerm::new(2, m, 1e-9).unwrap();
        assert!(linalg::hermiticity_defect(h.op()) == 0.0);
    }

    #[test]
    fn builtin_terms_commute() {
        assert!(check_commuting(&models::ising(), 1e-9).unwrap().commuting);
        assert!(check_commuting(&models::fig2(), 1e-9).unwrap().commuting);
    }

    #[test]
    fn random_projector_does_not_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = linalg::haar_unitary(&mut rng, 4);
        let k = linalg::select_columns(&u, &[0, 1]);
        let p = ProjectorTerm::new(2, linalg::projector_onto(&k), 1e-9).unwrap();
        let c = check_commuting(&p, 1e-9).unwrap();
        assert!(!c.commuting);
        assert!(c.residual > 0.1, "{}", c.residual);
    }

    #[test]
    fn schmidt_ranks() {
        // oracle: nonzero singular values of the realigned matrix
        let numeric_rank = |p: &ProjectorTerm| {
            let sv = linalg::svd(&realign(p.op(), p.site_dim())).unwrap().s;
            sv.iter().filter(|&&x| x > 1e-9).count()
        };
        let ising = models::ising();
        let s = operator_schmidt(&ising, 1e-9).unwrap();
        // |0⟩⟨0|⊗|1⟩⟨1| + |1⟩⟨1|⊗|0⟩⟨0|, and 1 is in the span of the projectors
        assert_eq!(numeric_rank(&ising), 2);
        assert_eq!(s.rank(), 2);
        assert!(linalg::fro_norm(&(s.reconstruct() - ising.op())) < 1e-12);
        let f2 = models::fig2();
        let s2 = operator_schmidt(&f2, 1e-9).unwrap();
        assert_eq!(numeric_rank(&f2), 2);
        assert_eq!(s2.rank(), 2);
        assert!(linalg::fro_norm(&(s2.reconstruct() - f2.op())) < 1e-12);
        for f in s2.left_factors.iter().chain(&s2.right_factors) {
            assert!(linalg::hermiticity_defect(f) < 1e-12);
        }
    }

    #[test]
    fn schmidt_of_product_is_rank_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = linalg::random_hermitian(&mut rng, 3);
        let b = linalg::random_hermitian(&mut rng, 3);
        let t = LocalTerm::new(3, linalg::kron(&a, &b), 1e-9).unwrap();
        let s = operator_schmidt(&t, 1e-9).unwrap();
        assert_eq!(s.rank(), 1);
        assert!(linalg::fro_norm(&(s.reconstruct() - t.op())) < 1e-12);
    }

    #[test]
    fn synthesize_validates_spec() {
        let blocks = [BlockDims::new(1, 1)];
        assert!(matches!(
            synthesize_local_term(&blocks, &[vec![2]], 0),
            Err(Error::InvalidSpec(_))
        ));
        assert!(matches!(
            synthesize_local_term(&blocks, &[vec![0, 0]], 0),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn synthesize_full_kernel_gives_zero() {
        let p = synthesize_local_term(&[BlockDims::new(1, 2)], &[vec![2]], 4).unwrap();
        assert!(linalg::fro_norm(p.op()) < 1e-12);
    }

    #[test]
    fn synthesize_ising_like() {
        let blocks = [BlockDims::new(1, 1), BlockDims::new(1, 1)];
        let p = synthesize_local_term(&blocks, &[vec![1, 0], vec![0, 1]], 17).unwrap();
        assert!(check_commuting(&p, 1e-9).unwrap().commuting);
        // unitarily equivalent to Ising: same spectrum {0,0,1,1}
        let ev = linalg::eigvalsh(p.op()).unwrap();
        let want = [0.0, 0.0, 1.0, 1.0];
        for (a, b) in ev.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(p.rank(), 2);
    }
}
