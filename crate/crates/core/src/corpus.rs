//! Seeded random commuting terms with a known block structure and graph.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decomposition::{center, generate_algebra};
use crate::operators::{operator_schmidt, synthesize_local_term, BlockDims, ProjectorTerm};

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    /// Seed handed to the synthesizer.
    pub seed: u64,
    pub blocks: Vec<BlockDims>,
    pub kernel_dims: Vec<Vec<usize>>,
    pub term: ProjectorTerm,
}

impl CorpusEntry {
    pub fn d(&self) -> usize {
        self.blocks.iter().map(|b| b.dim()).sum()
    }
}

/// Whether the blocks can be read back from the term: the second-slot factors
/// must generate all of `⊕ L(H_l) ⊗ 1` and the factors of both slots together
/// must have exactly one central projection per block.
pub fn identifiable(blocks: &[BlockDims], term: &ProjectorTerm, tol: f64) -> bool {
    let Ok(schmidt) = operator_schmidt(term, tol) else {
        return false;
    };
    let d = blocks.iter().map(|b| b.dim()).sum();
    let second = generate_algebra(d, &schmidt.right_factors, tol);
    if second.dimension() != blocks.iter().map(|b| b.l * b.l).sum::<usize>() {
        return false;
    }
    let both: Vec<_> = schmidt.right_factors.iter().chain(&schmidt.left_factors).cloned().collect();
    matches!(center(&generate_algebra(d, &both, tol), tol), Ok(z) if z.dimension() == blocks.len())
}

fn random_blocks(rng: &mut ChaCha8Rng, max_d: usize, max_blocks: usize) -> Vec<BlockDims> {
    loop {
        let nb = rng.random_range(1..=max_blocks);
        let blocks: Vec<BlockDims> =
            (0..nb).map(|_| BlockDims::new(rng.random_range(1..=2), rng.random_range(1..=3))).collect();
        let d: usize = blocks.iter().map(|b| b.dim()).sum();
        if (2..=max_d).contains(&d) {
            return blocks;
        }
    }
}

/// Kernel dimensions; with `scale_invariant` the off-diagonal part only points
/// from lower to higher index and self-loops have weight 0 or 1.
fn random_kernels(rng: &mut ChaCha8Rng, blocks: &[BlockDims], scale_invariant: bool) -> Vec<Vec<usize>> {
    let nb = blocks.len();
    let mut m = vec![vec![0usize; nb]; nb];
    for a in 0..nb {
        for b in 0..nb {
            let cap = blocks[a].r * blocks[b].l;
            m[a][b] = if !scale_invariant {
                rng.random_range(0..=cap)
            } else if a == b {
                rng.random_range(0..=1)
            } else if a < b {
                rng.random_range(0..=cap)
            } else {
                0
            };
        }
    }
    m
}

/// `count` identifiable terms with site dimension at most `max_d` and at most
/// `max_blocks` blocks. Every third entry is drawn scale invariant.
pub fn synthesized_corpus(count: usize, seed: u64, max_d: usize, max_blocks: usize) -> Vec<CorpusEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let blocks = random_blocks(&mut rng, max_d, max_blocks);
        let kernels = random_kernels(&mut rng, &blocks, out.len() % 3 == 0);
        let term_seed: u64 = rng.random();
        let Ok(term) = synthesize_local_term(&blocks, &kernels, term_seed) else {
            continue;
        };
        if identifiable(&blocks, &term, 1e-9) {
            out.push(CorpusEntry { seed: term_seed, blocks, kernel_dims: kernels, term });
        }
    }
    out
}

/// The corpus used by the test suites: 60 terms, `d ≤ 6`, at most 4 blocks.
pub fn default_corpus() -> Vec<CorpusEntry> {
    synthesized_corpus(60, 2024, 6, 4)
}
