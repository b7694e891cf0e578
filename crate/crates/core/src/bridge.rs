//! From non-commuting to commuting terms and back.
//!
//! A positive definite `X` solving
//! `(h⊗1)(1⊗X⊗1)(1⊗h) = (1⊗h)(1⊗X⊗1)(h⊗1)` makes
//! `h' = (X^{1/2}⊗X^{1/2}) h (X^{1/2}⊗X^{1/2})` commuting, with ground states
//! related by `(X^{1/2})^{⊗N}`. Conversely an injective MPS map `S` turns the
//! commuting projector of a ring of maximally entangled pairs into a
//! frustration-free parent term that usually does not commute.

use alloc::vec::Vec;

use faer::Mat;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ed::{self, build_chain};
use crate::error::{Error, Result};
use crate::groundspace::Mps;
use crate::linalg::{self, c64, CMatrix};
use crate::operators::{check_commuting, commutator_residual, projectorize, LocalTerm, ProjectorTerm, TwoSite};

/// Number of random sign mixtures tried by [`solve_x`].
pub const SEARCH_TRIALS: usize = 200;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SearchStatus {
    Found,
    /// Nothing positive definite turned up. This does not prove that no
    /// solution exists.
    NotFound,
}

#[derive(Clone, Debug)]
pub struct XCandidate {
    /// Hermitian, scaled to trace `d` when positive definite.
    pub x: CMatrix,
    pub min_eigenvalue: f64,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct XSearch {
    pub status: SearchStatus,
    /// Dimension of the space of Hermitian solutions.
    pub solution_dim: usize,
    /// The best candidate seen, positive definite or not.
    pub best: Option<XCandidate>,
}

impl XSearch {
    /// The candidate, if it is positive definite.
    pub fn found(&self) -> Option<&XCandidate> {
        match self.status {
            SearchStatus::Found => self.best.as_ref(),
            SearchStatus::NotFound => None,
        }
    }
}

/// `(h⊗1)(1⊗X⊗1)(1⊗h) − (1⊗h)(1⊗X⊗1)(h⊗1)` on three sites.
pub fn x_defect(h: &CMatrix, d: usize, x: &CMatrix) -> CMatrix {
    let hl = linalg::kron(h, &linalg::identity(d));
    let hr = linalg::kron(&linalg::identity(d), h);
    let mid = linalg::embed_middle(d, x, d);
    &hl * &mid * &hr - &hr * &mid * &hl
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct XCheck {
    /// Frobenius norm of [`x_defect`].
    pub residual: f64,
    /// `residual / (‖h‖² ‖X‖)`, all Frobenius norms.
    pub relative_residual: f64,
    pub min_eigenvalue: f64,
    pub pd: bool,
}

pub fn verify_x(h: &LocalTerm, x: &CMatrix, tol: f64) -> Result<XCheck> {
    let d = h.site_dim();
    if x.nrows() != d || x.ncols() != d {
        return Err(Error::Shape { rows: x.nrows(), cols: x.ncols(), expected: d });
    }
    let residual = linalg::fro_norm(&x_defect(h.op(), d, x));
    let scale = linalg::fro_norm(h.op()).powi(2) * linalg::fro_norm(x);
    let relative_residual = if scale > 0.0 { residual / scale } else { residual };
    let min_eigenvalue = linalg::eigvalsh(&linalg::hermitian_part(x))?[0];
    Ok(XCheck { residual, relative_residual, min_eigenvalue, pd: min_eigenvalue > tol })
}

/// Real orthonormal basis of the Hermitian `d×d` matrices.
fn hermitian_basis(d: usize) -> Vec<CMatrix> {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in i..d {
            if i == j {
                out.push(Mat::from_fn(d, d, |a, b| linalg::real(if a == i && b == i { 1.0 } else { 0.0 })));
            } else {
                out.push(Mat::from_fn(d, d, |a, b| {
                    linalg::real(if (a, b) == (i, j) || (a, b) == (j, i) { s } else { 0.0 })
                }));
                out.push(Mat::from_fn(d, d, |a, b| {
                    if (a, b) == (i, j) {
                        c64::new(0.0, -s)
                    } else if (a, b) == (j, i) {
                        c64::new(0.0, s)
                    } else {
                        c64::new(0.0, 0.0)
                    }
                }));
            }
        }
    }
    out
}

/// Hermitian solutions of the defect equation, orthonormal in the
/// Hilbert–Schmidt inner product.
pub fn x_solution_space(h: &LocalTerm) -> Result<Vec<CMatrix>> {
    let d = h.site_dim();
    let basis = hermitian_basis(d);
    let cols: Vec<Vec<c64>> = basis.iter().map(|e| linalg::flatten(&x_defect(h.op(), d, e))).collect();
    let rows = cols.first().map_or(0, |c| c.len());
    // real and imaginary parts stacked, since only real combinations are allowed
    let a = Mat::<f64>::from_fn(2 * rows, basis.len(), |i, k| {
        if i < rows {
            cols[k][i].re
        } else {
            cols[k][i - rows].im
        }
    });
    let scale = linalg::fro_norm(h.op()).powi(2).max(1.0);
    let a = Mat::<f64>::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] / scale);
    let null = linalg::real_null_space(&a)?;
    Ok((0..null.ncols())
        .map(|c| {
            let mut x = linalg::zeros(d, d);
            for (k, e) in basis.iter().enumerate() {
                x += linalg::scale(e, linalg::real(null[(k, c)]));
            }
            x
        })
        .collect())
}

fn score(x: &CMatrix) -> Result<(f64, CMatrix)> {
    let x = linalg::hermitian_part(x);
    let norm = linalg::fro_norm(&x);
    if norm == 0.0 {
        return Ok((f64::NEG_INFINITY, x));
    }
    let x = linalg::scale(&x, linalg::real(1.0 / norm));
    let ev = linalg::eigvalsh(&x)?;
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    // a negative definite solution is as good as its negative
    if -hi > lo {
        Ok((-hi, linalg::scale(&x, linalg::real(-1.0))))
    } else {
        Ok((lo, x))
    }
}

/// Search the solution space for a positive definite `X`: the projection of
/// the identity first, then [`SEARCH_TRIALS`] random sign mixtures of the
/// solution basis.
pub fn solve_x(h: &LocalTerm, tol: f64, seed: u64) -> Result<XSearch> {
    let d = h.site_dim();
    let sols = x_solution_space(h)?;
    let mut best: Option<(f64, CMatrix)> = None;
    let mut consider = |cand: (f64, CMatrix)| {
        if best.as_ref().is_none_or(|b| cand.0 > b.0) {
            best = Some(cand);
        }
    };
    if !sols.is_empty() {
        let id = linalg::identity(d);
        let mut proj = linalg::zeros(d, d);
        for s in &sols {
            proj += linalg::scale(s, linalg::hs_inner(s, &id));
        }
        consider(score(&proj)?);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..SEARCH_TRIALS {
            let mut x = linalg::zeros(d, d);
            for s in &sols {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let mag: f64 = rng.random_range(0.1..1.0);
                x += linalg::scale(s, linalg::real(sign * mag));
            }
            consider(score(&x)?);
        }
    }
    let Some((_, x)) = best else {
        return Ok(XSearch { status: SearchStatus::NotFound, solution_dim: 0, best: None });
    };
    let tr = linalg::trace(&x).re;
    let x = if tr > 0.0 { linalg::scale(&x, linalg::real(d as f64 / tr)) } else { x };
    let check = verify_x(h, &x, tol)?;
    let status = if check.pd && check.residual <= tol.sqrt() { SearchStatus::Found } else { SearchStatus::NotFound };
    Ok(XSearch {
        status,
        solution_dim: sols.len(),
        best: Some(XCandidate { x, min_eigenvalue: check.min_eigenvalue, residual: check.residual }),
    })
}

/// ED evidence that `ker H'_N` maps onto `ker H_N` under `(X^{1/2})^{⊗N}`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelCorrespondence {
    pub n: usize,
    pub dim_original: usize,
    pub dim_commuting: usize,
    /// Largest principal-angle sine between the mapped and the original kernel.
    pub distance: f64,
}

impl KernelCorrespondence {
    pub fn holds(&self, tol: f64) -> bool {
        self.dim_original == self.dim_commuting && self.distance < tol
    }
}

#[derive(Clone, Debug)]
pub struct Commutified {
    pub h_prime: LocalTerm,
    /// Commutator residual of the projectorized `h'`.
    pub commutator_residual: f64,
    pub correspondence: Vec<KernelCorrespondence>,
}

/// `y^{⊗n}` applied to each column.
fn apply_sitewise(y: &CMatrix, n: usize, cols: &CMatrix) -> CMatrix {
    let d = y.nrows();
    let dim = cols.nrows();
    let mut out = cols.clone();
    for site in 0..n {
        let stride = d.pow((n - 1 - site) as u32);
        let mut next = linalg::zeros(dim, cols.ncols());
        for c in 0..cols.ncols() {
            for x in 0..dim {
                let t = (x / stride) % d;
                let base = x - t * stride;
                let z = out[(x, c)];
                if z == c64::new(0.0, 0.0) {
                    continue;
                }
                for s in 0..d {
                    next[(base + s * stride, c)] += y[(s, t)] * z;
                }
            }
        }
        out = next;
    }
    out
}

/// Orthonormal basis of the column span.
fn orthonormal_span(a: &CMatrix) -> CMatrix {
    let cols: Vec<Vec<c64>> = (0..a.ncols()).map(|j| linalg::column(a, j)).collect();
    let on = linalg::orthonormalize(&cols, 1e-10);
    linalg::columns_to_matrix(&on, a.nrows())
}

/// Compare the ED kernels of `h` and `h'` for each chain length in `lengths`.
pub fn kernel_correspondence(h: &LocalTerm, h_prime: &LocalTerm, y: &CMatrix, n: usize) -> Result<KernelCorrespondence> {
    let k = ed::kernel_dim(&build_chain(h, n, ed::DEFAULT_ED_CAP)?)?.1;
    let kp = ed::kernel_dim(&build_chain(h_prime, n, ed::DEFAULT_ED_CAP)?)?.1;
    let mapped = orthonormal_span(&apply_sitewise(y, n, &kp));
    let distance = if mapped.ncols() == k.ncols() { linalg::subspace_distance(&mapped, &k)? } else { f64::INFINITY };
    Ok(KernelCorrespondence { n, dim_original: k.ncols(), dim_commuting: kp.ncols(), distance })
}

/// Conjugate `h` by `X^{1/2} ⊗ X^{1/2}` and certify the result. The ground
/// state correspondence is checked by ED for every length in `lengths`.
pub fn commutify(h: &LocalTerm, x: &CMatrix, tol: f64, lengths: &[usize]) -> Result<Commutified> {
    let d = h.site_dim();
    let check = verify_x(h, x, tol)?;
    if !check.pd {
        return Err(Error::NotPsd { min_eigenvalue: check.min_eigenvalue });
    }
    if !(check.residual <= tol.sqrt()) {
        return Err(Error::CommutificationFailed { residual: check.residual });
    }
    let y = linalg::hermitian_function(&linalg::hermitian_part(x), |v| v.max(tol).sqrt())?;
    let yy = linalg::kron(&y, &y);
    let h_prime = LocalTerm::new(d, linalg::hermitian_part(&(&yy * h.op() * &yy)), tol)?;
    let p = projectorize(&h_prime, tol)?;
    let comm = check_commuting(&p, tol.sqrt())?;
    if !comm.commuting {
        return Err(Error::CommutificationFailed { residual: comm.residual });
    }
    let correspondence = lengths
        .iter()
        .map(|&n| kernel_correspondence(h, &h_prime, &y, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(Commutified { h_prime, commutator_residual: comm.residual, correspondence })
}

/// Hermitian positive definite map on a doubled spin `(l, r)` of bond
/// dimension `chi`; site index `l·chi + r`.
#[derive(Clone, Debug)]
pub struct InjectiveMpsMap {
    pub chi: usize,
    pub s: CMatrix,
    /// `Σ_i |ii⟩ / √chi` on `(r_j, l_{j+1})`.
    pub phi_max: Vec<c64>,
}

fn max_entangled(chi: usize) -> Vec<c64> {
    let mut v = alloc::vec![c64::new(0.0, 0.0); chi * chi];
    for i in 0..chi {
        v[i * chi + i] = linalg::real(1.0 / (chi as f64).sqrt());
    }
    v
}

fn min_singular(s: &CMatrix) -> Result<f64> {
    Ok(linalg::svd(s)?.s.iter().copied().fold(f64::INFINITY, f64::min))
}

impl InjectiveMpsMap {
    /// Accepts a Hermitian positive definite `s` on `chi²`.
    pub fn new(chi: usize, s: CMatrix, tol: f64) -> Result<Self> {
        let n = chi * chi;
        if s.nrows() != n || s.ncols() != n {
            return Err(Error::Shape { rows: s.nrows(), cols: s.ncols(), expected: n });
        }
        let defect = linalg::hermiticity_defect(&s);
        if defect > tol {
            return Err(Error::NotHermitian { defect });
        }
        let s = linalg::hermitian_part(&s);
        let lo = linalg::eigvalsh(&s)?[0];
        if lo <= tol {
            return Err(Error::SingularS { min_singular: lo });
        }
        Ok(InjectiveMpsMap { chi, s, phi_max: max_entangled(chi) })
    }

    /// The MPS `S^{⊗N}` applied to the ring of maximally entangled pairs.
    pub fn state(&self, n: usize) -> Mps {
        let chi = self.chi;
        let site: Vec<CMatrix> = (0..chi * chi)
            .map(|idx| {
                let (l, r) = (idx / chi, idx % chi);
                Mat::from_fn(chi, chi, |a, b| linalg::real(if a == l && b == r { 1.0 / (chi as f64).sqrt() } else { 0.0 }))
            })
            .collect();
        Mps { tensors: alloc::vec![site; n] }.map_sites(&self.s)
    }
}

/// Positive factor `(S†S)^{1/2}` of the polar decomposition of `s_raw`.
pub fn polar_normalize(chi: usize, s_raw: &CMatrix, tol: f64) -> Result<InjectiveMpsMap> {
    let n = chi * chi;
    if s_raw.nrows() != n || s_raw.ncols() != n {
        return Err(Error::Shape { rows: s_raw.nrows(), cols: s_raw.ncols(), expected: n });
    }
    let smin = min_singular(s_raw)?;
    if smin <= tol {
        return Err(Error::SingularS { min_singular: smin });
    }
    let gram = linalg::hermitian_part(&(s_raw.adjoint() * s_raw));
    let pos = linalg::hermitian_function(&gram, |v| v.max(0.0).sqrt())?;
    InjectiveMpsMap::new(chi, pos, tol)
}

/// Spectrum of [`random_mps_map`]. Residuals of the intertwining equation
/// scale like `‖h‖²‖X‖` and `‖h‖ ~ 1/λ_min(S)²`, so a bounded condition
/// number keeps absolute tolerances meaningful.
pub const RANDOM_MAP_SPECTRUM: core::ops::Range<f64> = 0.5..2.0;

/// Seeded random map `U diag(λ) U†` with Haar `U` and `λ` uniform in
/// [`RANDOM_MAP_SPECTRUM`].
pub fn random_mps_map(chi: usize, seed: u64) -> Result<InjectiveMpsMap> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = chi * chi;
    let u = linalg::haar_unitary(&mut rng, n);
    let lambda: Vec<f64> = (0..n).map(|_| rng.random_range(RANDOM_MAP_SPECTRUM)).collect();
    let s = Mat::from_fn(n, n, |i, j| {
        (0..n).fold(c64::new(0.0, 0.0), |acc, k| acc + u[(i, k)] * u[(j, k)].conj() * lambda[k])
    });
    InjectiveMpsMap::new(chi, linalg::hermitian_part(&s), 1e-12)
}

#[derive(Clone, Debug)]
pub struct MpsParent {
    /// `1 − |Φ⟩⟨Φ|` on the inner pair `(r_j, l_{j+1})`, site dimension `chi²`.
    pub p: ProjectorTerm,
    /// `(S⁻¹⊗S⁻¹) P (S⁻¹⊗S⁻¹)`.
    pub h: LocalTerm,
    /// Commutator residual of `h`, reported as is.
    pub h_commutator_residual: f64,
}

pub fn mps_parent(map: &InjectiveMpsMap) -> Result<MpsParent> {
    let chi = map.chi;
    let n = chi * chi;
    let smin = min_singular(&map.s)?;
    if smin <= 1e-12 {
        return Err(Error::SingularS { min_singular: smin });
    }
    let phi = linalg::from_column(&map.phi_max);
    let inner = linalg::identity(n) - &phi * phi.adjoint();
    let p = ProjectorTerm::new(n, linalg::embed_middle(chi, &inner, chi), 1e-9)?;
    let sinv = linalg::hermitian_function(&map.s, |v| 1.0 / v)?;
    let ss = linalg::kron(&sinv, &sinv);
    let h = LocalTerm::new(n, linalg::hermitian_part(&(&ss * p.op() * &ss)), 1e-9)?;
    let h_commutator_residual = commutator_residual(&h)?;
    Ok(MpsParent { p, h, h_commutator_residual })
}
