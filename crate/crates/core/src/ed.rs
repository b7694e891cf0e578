//! Exact diagonalization of the periodic chain, used as an oracle.
//!
//! The chain is never stored as one `d^N × d^N` matrix. It is block
//! diagonalized by lattice momentum first: every momentum sector is a dense
//! Hermitian matrix of size about `d^N / N`, built from the orbits of
//! configurations under the cyclic shift. [`ChainHamiltonian::to_dense`] is
//! there for small chains and for cross-checks.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::groundspace::checked_pow;
use crate::linalg::{self, c64, CMatrix};
use crate::operators::TwoSite;

/// Largest chain dimension `d^N` accepted by default.
pub const DEFAULT_ED_CAP: usize = 4096;

/// Eigenvalues below this count as zero energy.
pub const KERNEL_TOL: f64 = 1e-8;

/// Distance to the nearest integer tolerated by [`integer_spectrum`].
pub const INTEGER_TOL: f64 = 1e-6;

/// `H_N = Σ_j P_{j,j+1}` with sites taken mod `N`; site 0 is the most
/// significant digit of a configuration index.
#[derive(Clone, Debug)]
pub struct ChainHamiltonian {
    d: usize,
    n: usize,
    term: CMatrix,
    dim: usize,
}

pub fn build_chain<T: TwoSite + ?Sized>(term: &T, n: usize, cap: usize) -> Result<ChainHamiltonian> {
    if n < 2 {
        return Err(Error::ChainTooShort { n, min: 2 });
    }
    let d = term.site_dim();
    let dim = checked_pow(d, n).unwrap_or(usize::MAX);
    if dim > cap {
        return Err(Error::TooLarge { dim, cap });
    }
    Ok(ChainHamiltonian { d, n, term: term.op().clone(), dim })
}

/// One momentum sector: states `|r,k⟩ ∝ Σ_m e^{-iθm} T^m |r⟩`, `θ = 2πk/N`.
#[derive(Clone, Debug)]
pub struct Sector {
    pub k: usize,
    /// Orbit representatives (smallest index in the orbit).
    pub reps: Vec<usize>,
    /// Orbit length of each representative.
    pub periods: Vec<usize>,
    pub matrix: CMatrix,
}

impl ChainHamiltonian {
    pub fn site_dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn stride(&self, site: usize) -> usize {
        checked_pow(self.d, self.n - 1 - site).unwrap()
    }

    /// Add `P_{j,j+1} |x⟩` scaled by `amp` into `out`.
    fn add_bond_column(&self, j: usize, x: usize, amp: c64, out: &mut [c64]) {
        let (d, sa, sb) = (self.d, self.stride(j), self.stride((j + 1) % self.n));
        let (a, b) = ((x / sa) % d, (x / sb) % d);
        let base = x - a * sa - b * sb;
        let col = a * d + b;
        for ap in 0..d {
            for bp in 0..d {
                let h = self.term[(ap * d + bp, col)];
                if h != c64::new(0.0, 0.0) {
                    out[base + ap * sa + bp * sb] += h * amp;
                }
            }
        }
    }

    /// `P_{j,j+1} ψ` on the bond between site `j` and site `j+1 mod N`.
    pub fn apply_bond(&self, j: usize, psi: &[c64]) -> Vec<c64> {
        let mut out = vec![c64::new(0.0, 0.0); self.dim];
        for (x, &amp) in psi.iter().enumerate() {
            if amp != c64::new(0.0, 0.0) {
                self.add_bond_column(j, x, amp, &mut out);
            }
        }
        out
    }

    /// `H_N ψ`.
    pub fn apply(&self, psi: &[c64]) -> Vec<c64> {
        let mut out = vec![c64::new(0.0, 0.0); self.dim];
        for (x, &amp) in psi.iter().enumerate() {
            if amp != c64::new(0.0, 0.0) {
                for j in 0..self.n {
                    self.add_bond_column(j, x, amp, &mut out);
                }
            }
        }
        out
    }

    /// Largest `‖P_{j,j+1} ψ‖` over all bonds.
    pub fn max_bond_residual(&self, psi: &[c64]) -> f64 {
        (0..self.n).map(|j| linalg::vec_norm(&self.apply_bond(j, psi))).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut h = linalg::zeros(self.dim, self.dim);
        let mut col = vec![c64::new(0.0, 0.0); self.dim];
        for x in 0..self.dim {
            col.iter_mut().for_each(|z| *z = c64::new(0.0, 0.0));
            for j in 0..self.n {
                self.add_bond_column(j, x, c64::new(1.0, 0.0), &mut col);
            }
            for (y, &z) in col.iter().enumerate() {
                h[(y, x)] = z;
            }
        }
        h
    }

    /// `T|c_0 … c_{N-1}⟩ = |c_{N-1} c_0 … c_{N-2}⟩`.
    pub fn shift(&self, x: usize) -> usize {
        (x % self.d) * self.stride(0) + x / self.d
    }

    pub fn shift_vector(&self, psi: &[c64]) -> Vec<c64> {
        let mut out = vec![c64::new(0.0, 0.0); self.dim];
        for (x, &z) in psi.iter().enumerate() {
            out[self.shift(x)] = z;
        }
        out
    }

    /// `‖T H ψ − H T ψ‖` for a seeded random unit vector ψ.
    pub fn translation_defect(&self, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut psi = linalg::gaussian_vector(&mut rng, self.dim);
        let norm = linalg::vec_norm(&psi);
        psi.iter_mut().for_each(|z| *z /= norm);
        let a = self.shift_vector(&self.apply(&psi));
        let b = self.apply(&self.shift_vector(&psi));
        linalg::vec_norm(&a.iter().zip(&b).map(|(x, y)| x - y).collect::<Vec<_>>())
    }

    /// For every configuration: its orbit representative and the `ℓ` with
    /// `x = T^ℓ rep`.
    fn orbits(&self) -> (Vec<usize>, Vec<usize>) {
        let mut rep = vec![usize::MAX; self.dim];
        let mut ell = vec![0usize; self.dim];
        for x in 0..self.dim {
            if rep[x] != usize::MAX {
                continue;
            }
            // x is the smallest member of its orbit since all smaller ones are done
            let mut y = x;
            let mut m = 0;
            loop {
                rep[y] = x;
                ell[y] = m;
                y = self.shift(y);
                m += 1;
                if y == x {
                    break;
                }
            }
        }
        (rep, ell)
    }

    /// All momentum sectors `k = 0..N`.
    pub fn sectors(&self) -> Vec<Sector> {
        let (rep, ell) = self.orbits();
        let mut period = vec![0usize; self.dim];
        for x in 0..self.dim {
            period[rep[x]] += 1;
        }
        let all_reps: Vec<usize> = (0..self.dim).filter(|&x| rep[x] == x).collect();
        // H|r⟩ for every representative, computed once
        let columns: Vec<Vec<(usize, c64)>> = all_reps
            .iter()
            .map(|&r| {
                let mut buf = vec![c64::new(0.0, 0.0); self.dim];
                for j in 0..self.n {
                    self.add_bond_column(j, r, c64::new(1.0, 0.0), &mut buf);
                }
                buf.into_iter().enumerate().filter(|(_, z)| *z != c64::new(0.0, 0.0)).collect()
            })
            .collect();

        let n = self.n;
        (0..n)
            .map(|k| {
                let theta = 2.0 * core::f64::consts::PI * k as f64 / n as f64;
                let members: Vec<usize> =
                    (0..all_reps.len()).filter(|&i| (k * period[all_reps[i]]) % n == 0).collect();
                let mut position = BTreeMap::new();
                for (row, &i) in members.iter().enumerate() {
                    position.insert(all_reps[i], row);
                }
                let size = members.len();
                let mut h = linalg::zeros(size, size);
                for (colidx, &i) in members.iter().enumerate() {
                    let p = period[all_reps[i]] as f64;
                    for &(s, z) in &columns[i] {
                        if let Some(&row) = position.get(&rep[s]) {
                            let pp = period[rep[s]] as f64;
                            let phase = linalg::cis(theta * ell[s] as f64);
                            h[(row, colidx)] += z * phase * (p / pp).sqrt();
                        }
                    }
                }
                Sector {
                    k,
                    reps: members.iter().map(|&i| all_reps[i]).collect(),
                    periods: members.iter().map(|&i| period[all_reps[i]]).collect(),
                    matrix: linalg::hermitian_part(&h),
                }
            })
            .collect()
    }

    /// Embed a sector vector back into the full space.
    pub fn sector_to_full(&self, sector: &Sector, coeffs: &[c64]) -> Vec<c64> {
        let theta = 2.0 * core::f64::consts::PI * sector.k as f64 / self.n as f64;
        let mut out = vec![c64::new(0.0, 0.0); self.dim];
        for ((&r, &p), &c) in sector.reps.iter().zip(&sector.periods).zip(coeffs) {
            let mut x = r;
            for m in 0..p {
                out[x] += c * linalg::cis(-theta * m as f64) / (p as f64).sqrt();
                x = self.shift(x);
            }
        }
        out
    }

    /// All eigenvalues, ascending.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        let mut all = Vec::with_capacity(self.dim);
        for s in self.sectors() {
            all.extend(linalg::eigvalsh(&s.matrix)?);
        }
        all.sort_by(f64::total_cmp);
        Ok(all)
    }

    /// Orthonormal basis of `ker H_N` (eigenvalues below [`KERNEL_TOL`]) as
    /// columns in the full space.
    pub fn kernel(&self) -> Result<CMatrix> {
        let mut cols = Vec::new();
        for s in self.sectors() {
            let e = linalg::eigh(&s.matrix)?;
            let kern = e.columns_where(|x| x < KERNEL_TOL);
            for j in 0..kern.ncols() {
                cols.push(self.sector_to_full(&s, &linalg::column(&kern, j)));
            }
        }
        Ok(linalg::columns_to_matrix(&cols, self.dim))
    }
}

/// `dim ker H_N` together with an orthonormal basis.
pub fn kernel_dim(h: &ChainHamiltonian) -> Result<(usize, CMatrix)> {
    let k = h.kernel()?;
    Ok((k.ncols(), k))
}

/// Multiplicity of each integer eigenvalue, indexed by energy.
pub fn integer_spectrum(h: &ChainHamiltonian) -> Result<Vec<usize>> {
    let spec = h.spectrum()?;
    let mut counts: Vec<usize> = Vec::new();
    for x in spec {
        let k = x.round();
        if (x - k).abs() > INTEGER_TOL || k < 0.0 {
            return Err(Error::NonIntegerSpectrum { value: x });
        }
        let k = k as usize;
        if counts.len() <= k {
            counts.resize(k + 1, 0);
        }
        counts[k] += 1;
    }
    Ok(counts)
}

/// Equal dimension and largest principal angle below `tol`. Both inputs are
/// orthonormal column sets.
pub fn same_subspace(a: &CMatrix, b: &CMatrix, tol: f64) -> Result<bool> {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
        return Ok(false);
    }
    Ok(linalg::subspace_distance(a, b)? < tol)
}
