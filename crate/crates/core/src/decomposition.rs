//! Block decomposition of the single-site space, `ℂ^d ≅ ⊕_α H_{α_l} ⊗ H_{α_r}`,
//! such that the term touches each block through `H_{α_l}` from the left bond
//! and through `H_{α_r}` from the right bond.
//!
//! The construction is numerical: the second-slot Schmidt factors of the term
//! generate a *-algebra `A`; its center is split by a random central element,
//! and inside each central block a random element of the commutant separates
//! the copies of `H_l`. The result is accepted only after every second-slot
//! factor has been checked to act as `s̃ ⊗ 1` and every first-slot factor as
//! `1 ⊗ c̃` on every block, with no cross-block terms.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, FactorFamily, Result};
use crate::linalg::{self, c64, CMatrix};
use crate::operators::{operator_schmidt, BlockDims, ProjectorTerm, TwoSite};

/// Reseeds attempted by [`decompose_site`] before giving up.
pub const MAX_ATTEMPTS: u64 = 8;

/// Relative eigenvalue gap separating clusters of a random central element.
pub const CLUSTER_GAP: f64 = 1e-6;

/// Unital *-algebra of `ambient_dim × ambient_dim` matrices, stored as a
/// Hilbert–Schmidt orthonormal basis.
#[derive(Clone, Debug)]
pub struct OperatorAlgebra {
    ambient_dim: usize,
    basis: Vec<CMatrix>,
}

impl OperatorAlgebra {
    fn from_flat(ambient_dim: usize, flat: Vec<Vec<c64>>) -> Self {
        let basis = flat.iter().map(|v| linalg::unflatten(v, ambient_dim)).collect();
        OperatorAlgebra { ambient_dim, basis }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    /// Orthogonal projection of `x` onto the span.
    pub fn project(&self, x: &CMatrix) -> CMatrix {
        let mut acc = linalg::zeros(self.ambient_dim, self.ambient_dim);
        for b in &self.basis {
            let c = linalg::hs_inner(b, x);
            acc += linalg::scale(b, c);
        }
        acc
    }

    /// Hilbert–Schmidt distance from `x` to the span.
    pub fn distance(&self, x: &CMatrix) -> f64 {
        linalg::fro_norm(&(x - self.project(x)))
    }

    /// Largest distance between the two spans, measured on basis elements of
    /// each side. Zero iff the spans agree.
    pub fn span_distance(&self, other: &OperatorAlgebra) -> f64 {
        if self.dimension() != other.dimension() {
            return f64::INFINITY;
        }
        let a = self.basis.iter().map(|b| other.distance(b));
        let b = other.basis.iter().map(|b| self.distance(b));
        a.chain(b).fold(0.0, f64::max)
    }

    /// Random Hermitian element of the algebra.
    pub fn random_hermitian<R: Rng + ?Sized>(&self, rng: &mut R) -> CMatrix {
        let coeffs = linalg::gaussian_vector(rng, self.basis.len());
        let mut acc = linalg::zeros(self.ambient_dim, self.ambient_dim);
        for (b, c) in self.basis.iter().zip(coeffs) {
            acc += linalg::scale(b, c);
        }
        linalg::hermitian_part(&acc)
    }

    /// Random (generally non-Hermitian) element.
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> CMatrix {
        let coeffs = linalg::gaussian_vector(rng, self.basis.len());
        let mut acc = linalg::zeros(self.ambient_dim, self.ambient_dim);
        for (b, c) in self.basis.iter().zip(coeffs) {
            acc += linalg::scale(b, c);
        }
        acc
    }

    /// The algebra compressed to the range of an isometry `v` (`v† a v`).
    /// Only meaningful when the range of `v` is invariant.
    pub fn compress(&self, v: &CMatrix) -> OperatorAlgebra {
        let n = v.ncols();
        let flat: Vec<Vec<c64>> = self.basis.iter().map(|b| linalg::flatten(&(v.adjoint() * b * v))).collect();
        OperatorAlgebra::from_flat(n, linalg::orthonormalize(&flat, linalg::RANK_RTOL))
    }
}

/// Smallest unital *-algebra containing `ops`: alternate multiplication by the
/// generators and Gram–Schmidt until the dimension stops growing.
pub fn generate_algebra(ambient_dim: usize, ops: &[CMatrix], _tol: f64) -> OperatorAlgebra {
    let mut generators: Vec<CMatrix> = Vec::with_capacity(2 * ops.len());
    for op in ops {
        generators.push(op.clone());
        generators.push(linalg::dagger(op));
    }
    let mut seed: Vec<Vec<c64>> = vec![linalg::flatten(&linalg::identity(ambient_dim))];
    seed.extend(generators.iter().map(linalg::flatten));
    let mut basis = linalg::orthonormalize(&seed, linalg::RANK_RTOL);

    let mut start = 0;
    loop {
        let before = basis.len();
        let mut candidates = Vec::new();
        for b in &basis[start..] {
            let bm = linalg::unflatten(b, ambient_dim);
            for g in &generators {
                candidates.push(linalg::flatten(&(&bm * g)));
            }
        }
        let mut all = basis.clone();
        all.extend(candidates);
        basis = linalg::orthonormalize(&all, linalg::RANK_RTOL);
        if basis.len() == before || basis.len() == ambient_dim * ambient_dim {
            break;
        }
        // only the new elements can produce new products
        start = before;
    }
    OperatorAlgebra::from_flat(ambient_dim, basis)
}

/// Row-major matrix of `Z ↦ a Z − Z a` acting on flattened `Z`.
fn commutator_map(a: &CMatrix) -> CMatrix {
    let d = a.nrows();
    let mut m = linalg::zeros(d * d, d * d);
    for p in 0..d {
        for q in 0..d {
            let row = p * d + q;
            for k in 0..d {
                // (a Z)[p,q] = Σ_k a[p,k] Z[k,q]
                m[(row, k * d + q)] += a[(p, k)];
                // (Z a)[p,q] = Σ_k Z[p,k] a[k,q]
                m[(row, p * d + k)] -= a[(k, q)];
            }
        }
    }
    m
}

/// All matrices commuting with every element of `a`.
pub fn commutant(a: &OperatorAlgebra, _tol: f64) -> Result<OperatorAlgebra> {
    let d = a.ambient_dim;
    let blocks: Vec<CMatrix> = a.basis.iter().map(commutator_map).collect();
    let refs: Vec<&CMatrix> = blocks.iter().collect();
    let stacked = vstack(&refs, d * d);
    let ns = linalg::null_space(&stacked)?;
    let flat: Vec<Vec<c64>> = (0..ns.ncols()).map(|j| linalg::column(&ns, j)).collect();
    Ok(OperatorAlgebra::from_flat(d, linalg::orthonormalize(&flat, linalg::RANK_RTOL)))
}

/// `A ∩ A'`, the center of the algebra.
pub fn center(a: &OperatorAlgebra, _tol: f64) -> Result<OperatorAlgebra> {
    let d = a.ambient_dim;
    let m = a.basis.len();
    let mut map = linalg::zeros(m * d * d, m);
    for (k, ak) in a.basis.iter().enumerate() {
        for (i, ai) in a.basis.iter().enumerate() {
            let c = linalg::commutator(ak, ai);
            for (t, z) in linalg::flatten(&c).into_iter().enumerate() {
                map[(i * d * d + t, k)] = z;
            }
        }
    }
    let ns = linalg::null_space(&map)?;
    let mut flat = Vec::with_capacity(ns.ncols());
    for j in 0..ns.ncols() {
        let mut acc = linalg::zeros(d, d);
        for (k, ak) in a.basis.iter().enumerate() {
            acc += linalg::scale(ak, ns[(k, j)]);
        }
        flat.push(linalg::flatten(&acc));
    }
    Ok(OperatorAlgebra::from_flat(d, linalg::orthonormalize(&flat, linalg::RANK_RTOL)))
}

fn vstack(blocks: &[&CMatrix], cols: usize) -> CMatrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = linalg::zeros(rows, cols);
    let mut r0 = 0;
    for b in blocks {
        for j in 0..cols {
            for i in 0..b.nrows() {
                out[(r0 + i, j)] = b[(i, j)];
            }
        }
        r0 += b.nrows();
    }
    out
}

/// One block `H_l ⊗ H_r` with its embedding into the site space. Column
/// `a·r + b` of the isometry is the image of `|a⟩_l ⊗ |b⟩_r`.
#[derive(Clone, Debug)]
pub struct Block {
    pub dims: BlockDims,
    pub isometry: CMatrix,
}

impl Block {
    pub fn l(&self) -> usize {
        self.dims.l
    }
    pub fn r(&self) -> usize {
        self.dims.r
    }
    /// Central projection `W W†`.
    pub fn projection(&self) -> CMatrix {
        linalg::projector_onto(&self.isometry)
    }
}

/// Largest violations of the block-structure postconditions.
#[derive(Copy, Clone, Debug, Default, PartialEq)]
pub struct DecompositionResiduals {
    /// Second-slot factors acting as `s̃ ⊗ 1_r`, including cross-block terms.
    pub second_slot: f64,
    /// First-slot factors acting as `1_l ⊗ c̃`, including cross-block terms.
    pub first_slot: f64,
    /// Isometry orthonormality, mutual orthogonality and completeness.
    pub structure: f64,
}

impl DecompositionResiduals {
    pub fn max(&self) -> f64 {
        self.second_slot.max(self.first_slot).max(self.structure)
    }
}

#[derive(Clone, Debug)]
pub struct SiteDecomposition {
    pub d: usize,
    pub blocks: Vec<Block>,
    /// Postcondition residuals measured when the decomposition was accepted.
    pub residuals: DecompositionResiduals,
    /// Seed of the attempt that succeeded.
    pub seed_used: u64,
}

impl SiteDecomposition {
    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_dims(&self) -> Vec<BlockDims> {
        self.blocks.iter().map(|b| b.dims).collect()
    }
}

fn split_clusters(values: &[f64]) -> Vec<core::ops::Range<usize>> {
    let spread = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..values.len() {
        if values[k] - values[k - 1] > CLUSTER_GAP * spread {
            out.push(start..k);
            start = k;
        }
    }
    if !values.is_empty() {
        out.push(start..values.len());
    }
    out
}

fn structure_failure(residual: f64) -> Error {
    Error::DecompositionFailed { family: FactorFamily::Structure, residual }
}

fn exact_sqrt(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n).then_some(r)
}

/// Tensor-factorize one central block given by the orthonormal columns `v`.
fn factor_block<R: Rng + ?Sized>(
    v: &CMatrix,
    algebra: &OperatorAlgebra,
    comm: &OperatorAlgebra,
    rng: &mut R,
) -> Result<Block> {
    let n = v.ncols();
    let a_loc = algebra.compress(v);
    let c_loc = comm.compress(v);
    let l = exact_sqrt(a_loc.dimension()).ok_or_else(|| structure_failure(1.0))?;
    let r = exact_sqrt(c_loc.dimension()).ok_or_else(|| structure_failure(1.0))?;
    if l * r != n {
        return Err(structure_failure(1.0));
    }

    let k = c_loc.random_hermitian(rng);
    let e = linalg::eigh(&k)?;
    let clusters = split_clusters(&e.values);
    if clusters.len() != r || clusters.iter().any(|c| c.len() != l) {
        return Err(structure_failure(1.0));
    }
    let copies: Vec<CMatrix> = clusters
        .iter()
        .map(|c| linalg::select_columns(&e.vectors, &c.clone().collect::<Vec<_>>()))
        .collect();

    // intertwine every copy of H_l with the first one through a random element
    // of the commutant, which acts as 1 ⊗ c̃
    let c = c_loc.random_element(rng);
    let mut local = linalg::zeros(n, n);
    for (b, eb) in copies.iter().enumerate() {
        let fb = eb * (eb.adjoint() * (&c * &copies[0]));
        let norm = (linalg::fro_norm(&fb).powi(2) / l as f64).sqrt();
        if norm < 1e-6 {
            return Err(structure_failure(norm));
        }
        for a in 0..l {
            for i in 0..n {
                local[(i, a * r + b)] = fb[(i, a)] / norm;
            }
        }
    }
    Ok(Block { dims: BlockDims::new(l, r), isometry: v * &local })
}

fn fingerprint(w: &CMatrix) -> (Vec<i64>, Vec<i64>) {
    let mut col = linalg::column(w, 0);
    let abs = col.iter().map(|z| (linalg::modulus(*z) * 1e6).round() as i64).collect();
    linalg::normalize_phase(&mut col);
    let phased = col
        .iter()
        .flat_map(|z| [(z.re * 1e6).round() as i64, (z.im * 1e6).round() as i64])
        .collect();
    (abs, phased)
}

/// Verify the block-structure postconditions against both factor families.
pub fn measure_residuals(
    blocks: &[Block],
    second_slot: &[CMatrix],
    first_slot: &[CMatrix],
) -> DecompositionResiduals {
    let d = blocks.first().map(|b| b.isometry.nrows()).unwrap_or(0);
    let mut structure = 0.0f64;
    let mut sum = linalg::zeros(d, d);
    for (i, bi) in blocks.iter().enumerate() {
        sum += bi.projection();
        for (j, bj) in blocks.iter().enumerate() {
            let g = bi.isometry.adjoint() * &bj.isometry;
            let target = if i == j { linalg::identity(bi.dims.dim()) } else { linalg::zeros(g.nrows(), g.ncols()) };
            structure = structure.max(linalg::fro_norm(&(g - target)));
        }
    }
    structure = structure.max(linalg::fro_norm(&(sum - linalg::identity(d))));

    let family = |ops: &[CMatrix], acts_on_l: bool| -> f64 {
        let mut worst = 0.0f64;
        for s in ops {
            let scale = linalg::fro_norm(s).max(1.0);
            for (i, bi) in blocks.iter().enumerate() {
                for (j, bj) in blocks.iter().enumerate() {
                    let m = bi.isometry.adjoint() * s * &bj.isometry;
                    let res = if i != j {
                        linalg::fro_norm(&m)
                    } else {
                        let (l, r) = (bi.l(), bi.r());
                        let ideal = if acts_on_l {
                            linalg::kron(&linalg::trace_second(&m, l, r), &linalg::identity(r))
                        } else {
                            linalg::kron(&linalg::identity(l), &linalg::trace_first(&m, l, r))
                        };
                        linalg::fro_norm(&(m - ideal))
                    };
                    worst = worst.max(res / scale);
                }
            }
        }
        worst
    };
    DecompositionResiduals {
        second_slot: family(second_slot, true),
        first_slot: family(first_slot, false),
        structure,
    }
}

fn attempt(
    d: usize,
    algebra: &OperatorAlgebra,
    comm: &OperatorAlgebra,
    cent: &OperatorAlgebra,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Block>> {
    let z = cent.random_hermitian(rng);
    let z = linalg::scale(&z, linalg::real(1.0 / linalg::op_norm(&z)?.max(f64::MIN_POSITIVE)));
    let e = linalg::eigh(&z)?;
    let clusters = split_clusters(&e.values);
    if clusters.len() != cent.dimension() {
        return Err(structure_failure(1.0));
    }
    let mut blocks = Vec::with_capacity(clusters.len());
    for c in clusters {
        let v = linalg::select_columns(&e.vectors, &c.collect::<Vec<_>>());
        blocks.push(factor_block(&v, algebra, comm, rng)?);
    }
    let total: usize = blocks.iter().map(|b| b.dims.dim()).sum();
    if total != d {
        return Err(structure_failure(1.0));
    }
    blocks.sort_by_cached_key(|b| (b.dims.dim(), b.dims.l, fingerprint(&b.isometry)));
    Ok(blocks)
}

/// Bravyi–Vyalyi decomposition of the site space for a commuting projector.
///
/// The `l` factor of each block carries the algebra generated by the
/// second-slot factors and the `r` factor the first-slot ones. When the term is trivial on a
/// block pair this fixes the otherwise ambiguous split between `l` and `r`.
pub fn decompose_site(p: &ProjectorTerm, tol: f64, seed: u64) -> Result<SiteDecomposition> {
    let d = p.site_dim();
    let schmidt = operator_schmidt(p, tol)?;
    let algebra = generate_algebra(d, &schmidt.right_factors, tol);
    let comm = commutant(&algebra, tol)?;
    // blocks are the minimal central projections of the algebra generated by
    // both families; inside a block the second-slot algebra is a full factor
    let both: Vec<CMatrix> = schmidt.right_factors.iter().chain(&schmidt.left_factors).cloned().collect();
    let cent = center(&generate_algebra(d, &both, tol), tol)?;

    let limit = tol.sqrt();
    let mut last = structure_failure(f64::INFINITY);
    for k in 0..MAX_ATTEMPTS {
        let attempt_seed = seed.wrapping_add(k.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut rng = ChaCha8Rng::seed_from_u64(attempt_seed);
        let blocks = match attempt(d, &algebra, &comm, &cent, &mut rng) {
            Ok(b) => b,
            Err(e) => {
                last = e;
                continue;
            }
        };
        let residuals = measure_residuals(&blocks, &schmidt.right_factors, &schmidt.left_factors);
        let failing = [
            (FactorFamily::SecondSlot, residuals.second_slot),
            (FactorFamily::FirstSlot, residuals.first_slot),
            (FactorFamily::Structure, residuals.structure),
        ]
        .into_iter()
        .find(|(_, r)| !(*r <= limit));
        match failing {
            None => return Ok(SiteDecomposition { d, blocks, residuals, seed_used: attempt_seed }),
            Some((family, residual)) => last = Error::DecompositionFailed { family, residual },
        }
    }
    Err(last)
}
