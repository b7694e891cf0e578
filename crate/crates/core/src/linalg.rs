//! Dense complex linear algebra helpers on top of `faer`.
//!
//! Everything in the crate works with [`CMatrix`], a dense column-major
//! `faer::Mat<c64>`. Tensor products follow the row-major convention used
//! throughout: in `A ⊗ B` the index of `A` is the most significant one, so
//! the two-site basis vector `|i⟩⊗|j⟩` sits at position `i·d + j`.

use alloc::vec;
use alloc::vec::Vec;

use faer::{Mat, Side};
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub use faer::c64;

use crate::error::LinalgError;

/// Dense complex matrix.
pub type CMatrix = Mat<c64>;

/// Relative threshold below which singular values and eigenvalues count as zero.
pub const RANK_RTOL: f64 = 1e-9;

/// Zero threshold for a spectrum whose largest magnitude is `scale`.
pub fn rank_threshold(scale: f64) -> f64 {
    RANK_RTOL * scale.max(1.0)
}

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    Mat::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMatrix {
    Mat::identity(n, n)
}

/// `|z|`.
pub fn modulus(z: c64) -> f64 {
    z.norm_sqr().sqrt()
}

/// `e^{iθ}`.
pub fn cis(theta: f64) -> c64 {
    let (s, c) = theta.sin_cos();
    c64::new(c, s)
}

pub fn real(x: f64) -> c64 {
    c64::new(x, 0.0)
}

pub fn dagger(a: &CMatrix) -> CMatrix {
    a.adjoint().to_owned()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kron(b)
}

pub fn scale(a: &CMatrix, s: c64) -> CMatrix {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s)
}

pub fn trace(a: &CMatrix) -> c64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

/// Hilbert–Schmidt inner product `Tr(a† b)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> c64 {
    let mut acc = c64::new(0.0, 0.0);
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a[(i, j)].conj() * b[(i, j)];
        }
    }
    acc
}

/// Frobenius norm.
pub fn fro_norm(a: &CMatrix) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a[(i, j)].norm_sqr();
        }
    }
    acc.sqrt()
}

/// Largest singular value.
pub fn op_norm(a: &CMatrix) -> Result<f64, LinalgError> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(0.0);
    }
    let s = a.singular_values().map_err(|_| LinalgError::NoConvergence)?;
    Ok(s.first().copied().unwrap_or(0.0))
}

/// `‖a − a†‖` in Frobenius norm.
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    fro_norm(&(a - a.adjoint()))
}

/// `(a + a†)/2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    let s = a + a.adjoint();
    scale(&s, real(0.5))
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermEigen {
    /// Orthonormal columns for the eigenvalues selected by `keep`.
    pub fn columns_where(&self, mut keep: impl FnMut(f64) -> bool) -> CMatrix {
        let idx: Vec<usize> = (0..self.values.len()).filter(|&k| keep(self.values[k])).collect();
        select_columns(&self.vectors, &idx)
    }
}

pub fn eigh(a: &CMatrix) -> Result<HermEigen, LinalgError> {
    let n = a.nrows();
    if n == 0 {
        return Ok(HermEigen { values: Vec::new(), vectors: zeros(0, 0) });
    }
    let e = a.self_adjoint_eigen(Side::Lower).map_err(|_| LinalgError::NoConvergence)?;
    let s = e.S().column_vector();
    let values = (0..n).map(|k| s[k].re).collect();
    Ok(HermEigen { values, vectors: e.U().to_owned() })
}

pub fn eigvalsh(a: &CMatrix) -> Result<Vec<f64>, LinalgError> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    a.self_adjoint_eigenvalues(Side::Lower).map_err(|_| LinalgError::NoConvergence)
}

/// Full singular value decomposition `a = U diag(s) V†`.
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

pub fn svd(a: &CMatrix) -> Result<Svd, LinalgError> {
    let r = a.svd().map_err(|_| LinalgError::NoConvergence)?;
    let k = a.nrows().min(a.ncols());
    let sd = r.S().column_vector();
    Ok(Svd {
        u: r.U().to_owned(),
        s: (0..k).map(|i| sd[i].re).collect(),
        v: r.V().to_owned(),
    })
}

/// Orthonormal basis (as columns) of `{x : a x = 0}`, using the scale-relative
/// zero threshold.
pub fn null_space(a: &CMatrix) -> Result<CMatrix, LinalgError> {
    let n = a.ncols();
    if n == 0 {
        return Ok(zeros(0, 0));
    }
    // faer returns a square V only when rows >= cols; pad otherwise.
    let padded;
    let m = if a.nrows() < n {
        padded = Mat::from_fn(n, n, |i, j| if i < a.nrows() { a[(i, j)] } else { c64::new(0.0, 0.0) });
        &padded
    } else {
        a
    };
    let d = svd(m)?;
    let thr = rank_threshold(d.s.first().copied().unwrap_or(0.0));
    let idx: Vec<usize> = (0..n).filter(|&k| d.s.get(k).copied().unwrap_or(0.0) <= thr).collect();
    Ok(select_columns(&d.v, &idx))
}

/// Real null space of a real matrix stored column-major as `rows × cols`.
pub fn real_null_space(a: &Mat<f64>) -> Result<Mat<f64>, LinalgError> {
    let n = a.ncols();
    let padded;
    let m = if a.nrows() < n {
        padded = Mat::from_fn(n, n, |i, j| if i < a.nrows() { a[(i, j)] } else { 0.0 });
        &padded
    } else {
        a
    };
    let r = m.svd().map_err(|_| LinalgError::NoConvergence)?;
    let s = r.S().column_vector();
    let thr = rank_threshold(if n > 0 { s[0] } else { 0.0 });
    let idx: Vec<usize> = (0..n).filter(|&k| s[k] <= thr).collect();
    let v = r.V();
    Ok(Mat::from_fn(n, idx.len(), |i, j| v[(i, idx[j])]))
}

/// Orthonormal basis of the real column span of `a`, scale-relative threshold.
pub fn real_range(a: &Mat<f64>) -> Result<Mat<f64>, LinalgError> {
    if a.ncols() == 0 || a.nrows() == 0 {
        return Ok(Mat::zeros(a.nrows(), 0));
    }
    let r = a.thin_svd().map_err(|_| LinalgError::NoConvergence)?;
    let s = r.S().column_vector();
    let k = a.nrows().min(a.ncols());
    let thr = rank_threshold(s[0]);
    let idx: Vec<usize> = (0..k).filter(|&i| s[i] > thr).collect();
    let u = r.U();
    Ok(Mat::from_fn(a.nrows(), idx.len(), |i, j| u[(i, idx[j])]))
}

pub fn select_columns(a: &CMatrix, idx: &[usize]) -> CMatrix {
    Mat::from_fn(a.nrows(), idx.len(), |i, j| a[(i, idx[j])])
}

pub fn hstack(blocks: &[&CMatrix], rows: usize) -> CMatrix {
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let mut c0 = 0;
    for b in blocks {
        for j in 0..b.ncols() {
            for i in 0..rows {
                out[(i, c0 + j)] = b[(i, j)];
            }
        }
        c0 += b.ncols();
    }
    out
}

pub fn column(a: &CMatrix, j: usize) -> Vec<c64> {
    (0..a.nrows()).map(|i| a[(i, j)]).collect()
}

pub fn from_column(v: &[c64]) -> CMatrix {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

/// Outer product `|u⟩⟨v|`.
pub fn outer(u: &[c64], v: &[c64]) -> CMatrix {
    Mat::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
}

pub fn vec_norm(v: &[c64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vdot(u: &[c64], v: &[c64]) -> c64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * *b).sum()
}

/// Multiply so that the first entry of maximal modulus becomes real positive.
pub fn normalize_phase(v: &mut [c64]) {
    let mut best = 0usize;
    let mut best_abs = -1.0;
    for (k, z) in v.iter().enumerate() {
        // strictly larger by a margin, so near-ties resolve to the first index
        if modulus(*z) > best_abs + 1e-12 {
            best_abs = modulus(*z);
            best = k;
        }
    }
    if best_abs <= 0.0 {
        return;
    }
    let ph = v[best].conj() / modulus(v[best]);
    for z in v.iter_mut() {
        *z *= ph;
    }
}

/// Apply `f` to the spectrum of a Hermitian matrix.
pub fn hermitian_function(a: &CMatrix, f: impl Fn(f64) -> f64) -> Result<CMatrix, LinalgError> {
    let e = eigh(a)?;
    let n = a.nrows();
    let u = &e.vectors;
    let scaled = Mat::from_fn(n, n, |i, j| u[(i, j)] * f(e.values[j]));
    Ok(&scaled * u.adjoint())
}

/// Orthogonal projector onto the column span of an orthonormal `basis`.
pub fn projector_onto(basis: &CMatrix) -> CMatrix {
    basis * basis.adjoint()
}

/// Modified Gram–Schmidt (two passes) over `vectors`, dropping those whose
/// residual falls below `rtol` times the largest input norm.
pub fn orthonormalize(vectors: &[Vec<c64>], rtol: f64) -> Vec<Vec<c64>> {
    // residuals are judged against the largest input, so a vector that is
    // pure rounding noise never counts as a new direction
    let scale = vectors.iter().map(|v| vec_norm(v)).fold(0.0f64, f64::max);
    let mut out: Vec<Vec<c64>> = Vec::new();
    for v in vectors {
        if vec_norm(v) == 0.0 {
            continue;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let c = vdot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * *qi;
                }
            }
        }
        let n1 = vec_norm(&w);
        if n1 > rtol * scale {
            for wi in w.iter_mut() {
                *wi /= n1;
            }
            out.push(w);
        }
    }
    out
}

pub fn columns_to_matrix(cols: &[Vec<c64>], rows: usize) -> CMatrix {
    Mat::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

/// Row-major flattening of a square operator, `vec[i·n + j] = a[i][j]`.
pub fn flatten(a: &CMatrix) -> Vec<c64> {
    let mut v = Vec::with_capacity(a.nrows() * a.ncols());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            v.push(a[(i, j)]);
        }
    }
    v
}

pub fn unflatten(v: &[c64], n: usize) -> CMatrix {
    Mat::from_fn(n, n, |i, j| v[i * n + j])
}

/// `1_left ⊗ q ⊗ 1_right`.
pub fn embed_middle(left: usize, q: &CMatrix, right: usize) -> CMatrix {
    kron(&kron(&identity(left), q), &identity(right))
}

/// For `c` acting on `H_a ⊗ H_m ⊗ H_b`, the normalized partial trace over the
/// outer factors: `Tr_{a,b}(c) / (a·b)`.
pub fn trace_outer(c: &CMatrix, a: usize, m: usize, b: usize) -> CMatrix {
    let mut q = zeros(m, m);
    for x in 0..a {
        for y in 0..b {
            for i in 0..m {
                for j in 0..m {
                    q[(i, j)] += c[((x * m + i) * b + y, (x * m + j) * b + y)];
                }
            }
        }
    }
    scale(&q, real(1.0 / (a * b) as f64))
}

/// Normalized partial trace of an operator on `H_a ⊗ H_b` over the second factor.
pub fn trace_second(c: &CMatrix, a: usize, b: usize) -> CMatrix {
    trace_outer(c, 1, a, b)
}

/// Normalized partial trace of an operator on `H_a ⊗ H_b` over the first factor.
pub fn trace_first(c: &CMatrix, a: usize, b: usize) -> CMatrix {
    trace_outer(c, a, b, 1)
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    let mut m = zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            m[(i, j)] = c64::new(re, im);
        }
    }
    m
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<c64> {
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            c64::new(re, im)
        })
        .collect()
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    hermitian_part(&gaussian_matrix(rng, n, n))
}

/// Haar-distributed unitary from the QR factorization of a Ginibre matrix,
/// with the phases of `R`'s diagonal folded back into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    if n == 0 {
        return zeros(0, 0);
    }
    let g = gaussian_matrix(rng, n, n);
    let qr = g.qr();
    let q = qr.compute_Q();
    let r = qr.R();
    Mat::from_fn(n, n, |i, j| {
        let d = r[(j, j)];
        let ph = if modulus(d) > 0.0 { d / modulus(d) } else { c64::new(1.0, 0.0) };
        q[(i, j)] * ph
    })
}

/// Largest principal-angle sine between the spans of two orthonormal column
/// sets of equal size, `‖(1 − AA†)B‖`.
pub fn subspace_distance(a: &CMatrix, b: &CMatrix) -> Result<f64, LinalgError> {
    if a.ncols() != b.ncols() || a.nrows() != b.nrows() {
        return Ok(f64::INFINITY);
    }
    if b.ncols() == 0 {
        return Ok(0.0);
    }
    let proj = a * (a.adjoint() * b);
    let resid = b - proj;
    op_norm(&resid)
}

/// Dense vector from a `rows × 1` matrix or a plain list of entries.
pub fn to_vec(a: &CMatrix) -> Vec<c64> {
    column(a, 0)
}

/// Basis vector `e_k` in dimension `n`.
pub fn basis_vector(n: usize, k: usize) -> Vec<c64> {
    let mut v = vec![c64::new(0.0, 0.0); n];
    v[k] = c64::new(1.0, 0.0);
    v
}

/// Matrix–vector product.
pub fn apply(a: &CMatrix, v: &[c64]) -> Vec<c64> {
    let mut out = vec![c64::new(0.0, 0.0); a.nrows()];
    for j in 0..a.ncols() {
        let x = v[j];
        if x == c64::new(0.0, 0.0) {
            continue;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o += a[(i, j)] * x;
        }
    }
    out
}
