use alloc::string::String;

use thiserror::Error;

/// Failure inside a dense factorization.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("dense factorization did not converge")]
    NoConvergence,
}

/// Which family of site operators violated the block structure.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum FactorFamily {
    /// Operators through which the term touches a site from its left
    /// neighbour (the site is the second tensor slot). They must act on the
    /// `l` factor of every block.
    SecondSlot,
    /// Operators through which the term touches a site from its right
    /// neighbour (the site is the first tensor slot). They must act on the
    /// `r` factor of every block.
    FirstSlot,
    /// Block-structure bookkeeping (dimensions, completeness, orthogonality).
    Structure,
}

impl core::fmt::Display for FactorFamily {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            FactorFamily::SecondSlot => "second-slot (left-neighbour) factors",
            FactorFamily::FirstSlot => "first-slot (right-neighbour) factors",
            FactorFamily::Structure => "block structure",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),

    /// Operator shape does not match the declared site dimension.
    #[error("operator is {rows}x{cols}, expected {expected}x{expected}")]
    Shape { rows: usize, cols: usize, expected: usize },

    /// Entries must be finite.
    #[error("operator has non-finite entries")]
    NonFinite,

    #[error("operator is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    /// A negative eigenvalue below `-sqrt(tol)`: the caller has to shift the
    /// energy before projectorizing.
    #[error("operator is not positive semidefinite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("operator is not a projector (defect {defect:.3e})")]
    NotProjector { defect: f64 },

    /// Inconsistent block/kernel specification for the term synthesizer.
    #[error("invalid synthesis spec: {0}")]
    InvalidSpec(String),

    /// The term's translates do not commute.
    #[error("local terms do not commute (residual {residual:.3e})")]
    NotCommuting { residual: f64 },

    #[error("site decomposition failed on {family} (residual {residual:.3e})")]
    DecompositionFailed { family: FactorFamily, residual: f64 },

    /// The compression of the term onto a block pair is not of the form
    /// `1 ⊗ Q ⊗ 1`.
    #[error("bond factor ({from}, {to}) does not factorize (residual {residual:.3e})")]
    FactorizationFailed { from: usize, to: usize, residual: f64 },

    #[error("interaction graph is not scale invariant")]
    NotScaleInvariant,

    /// A loop whose bond kernel is not one dimensional.
    #[error("loop at block {block} has kernel dimension {dim}, expected 1")]
    DegenerateLoopKernel { block: usize, dim: usize },

    #[error("invalid degeneracy k = {k} for site dimension {d}")]
    InvalidK { k: usize, d: usize },

    #[error("MPS map is singular (smallest singular value {min_singular:.3e})")]
    SingularS { min_singular: f64 },

    #[error("commutified term still fails to commute (residual {residual:.3e})")]
    CommutificationFailed { residual: f64 },

    /// Chain Hilbert space exceeds the dense oracle budget.
    #[error("chain dimension {dim} exceeds oracle cap {cap}")]
    TooLarge { dim: usize, cap: usize },

    #[error("spectrum is not integral (eigenvalue {value})")]
    NonIntegerSpectrum { value: f64 },

    #[error("chain length must be at least {min}, got {n}")]
    ChainTooShort { n: usize, min: usize },

    /// A constructed object failed its own verification.
    #[error("verification failed: {0}")]
    Verification(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
