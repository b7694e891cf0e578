//! Builtin example terms.

use faer::Mat;

use crate::linalg::{self, c64, CMatrix};
use crate::operators::ProjectorTerm;

fn pauli_x() -> CMatrix {
    Mat::from_fn(2, 2, |i, j| linalg::real(if i != j { 1.0 } else { 0.0 }))
}

fn pauli_z() -> CMatrix {
    Mat::from_fn(2, 2, |i, j| {
        linalg::real(match (i, j) {
            (0, 0) => 1.0,
            (1, 1) => -1.0,
            _ => 0.0,
        })
    })
}

/// Ising projector `1⊗1 − |00⟩⟨00| − |11⟩⟨11|` on qubits.
pub fn ising() -> ProjectorTerm {
    let op = Mat::from_fn(4, 4, |i, j| linalg::real(if i == j && (i == 1 || i == 2) { 1.0 } else { 0.0 }));
    ProjectorTerm::new(2, op, 1e-12).expect("ising projector")
}

/// `(1⊗1 − (σx⊗σx)⊗(σz⊗σz))/2` on sites made of two qubits each (d = 4).
/// Commuting and translation invariant, but not scale invariant.
pub fn fig2() -> ProjectorTerm {
    let xx = linalg::kron(&pauli_x(), &pauli_x());
    let zz = linalg::kron(&pauli_z(), &pauli_z());
    let prod = linalg::kron(&xx, &zz);
    let op = linalg::scale(&(linalg::identity(16) - prod), linalg::real(0.5));
    ProjectorTerm::new(4, op, 1e-12).expect("fig2 projector")
}

/// The zero term on site dimension `d`.
pub fn zero(d: usize) -> ProjectorTerm {
    ProjectorTerm::new(d, linalg::zeros(d * d, d * d), 1e-12).expect("zero projector")
}

/// The four block vectors of [`fig2`] in the order `α, β, γ, θ`:
/// `|00⟩+|11⟩`, `|01⟩−|10⟩`, `|00⟩−|11⟩`, `|01⟩+|10⟩` (normalized).
pub fn fig2_block_vectors() -> [[c64; 4]; 4] {
    let h = core::f64::consts::FRAC_1_SQRT_2;
    let z = c64::new(0.0, 0.0);
    let p = c64::new(h, 0.0);
    let m = c64::new(-h, 0.0);
    [[p, z, z, p], [z, p, m, z], [p, z, z, m], [z, p, p, z]]
}
