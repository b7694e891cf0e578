//! What the interaction graph says about the spectrum: ground-state
//! degeneracy, ordered cycles, the scale-invariance test, explicit ground
//! states and the full energy census.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::decomposition::SiteDecomposition;
use crate::error::{Error, Result};
use crate::graph::{BondFactors, InteractionGraph};
use crate::linalg::{self, c64, CMatrix};

/// Default bound on enumerated cycles and returned states.
pub const DEFAULT_CAP: usize = 10_000;

/// Integer transfer matrices of the graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransferMatrices {
    pub m: Vec<Vec<BigUint>>,
    pub r: Vec<Vec<BigUint>>,
}

impl TransferMatrices {
    pub fn from_graph(g: &InteractionGraph) -> Self {
        let conv = |x: &Vec<Vec<usize>>| -> Vec<Vec<BigUint>> {
            x.iter().map(|row| row.iter().map(|&v| BigUint::from(v)).collect()).collect()
        };
        TransferMatrices { m: conv(&g.m), r: conv(&g.r) }
    }

    pub fn size(&self) -> usize {
        self.m.len()
    }
}

type IntMatrix = Vec<Vec<BigUint>>;

fn int_identity(n: usize) -> IntMatrix {
    (0..n).map(|i| (0..n).map(|j| if i == j { BigUint::one() } else { BigUint::zero() }).collect()).collect()
}

fn int_mul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let n = a.len();
    let mut c = vec![vec![BigUint::zero(); n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..n {
                if !b[k][j].is_zero() {
                    c[i][j] += &a[i][k] * &b[k][j];
                }
            }
        }
    }
    c
}

fn check_length(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::ChainTooShort { n, min });
    }
    Ok(())
}

/// `Tr(M^N)`, the dimension of the ground space of the periodic chain of
/// length `N`.
pub fn degeneracy(t: &TransferMatrices, n: usize) -> Result<BigUint> {
    check_length(n, 1)?;
    let mut result = int_identity(t.size());
    let mut base = t.m.clone();
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            result = int_mul(&result, &base);
        }
        e >>= 1;
        if e > 0 {
            base = int_mul(&base, &base);
        }
    }
    Ok((0..t.size()).fold(BigUint::zero(), |acc, i| acc + &result[i][i]))
}

/// Matrices with polynomial entries in `x`, coefficients listed from degree 0.
type PolyMatrix = Vec<Vec<Vec<BigUint>>>;

fn poly_mul(a: &PolyMatrix, b: &PolyMatrix, max_deg: usize) -> PolyMatrix {
    let n = a.len();
    let mut c = vec![vec![vec![BigUint::zero(); max_deg + 1]; n]; n];
    for i in 0..n {
        for k in 0..n {
            for (da, ca) in a[i][k].iter().enumerate() {
                if ca.is_zero() {
                    continue;
                }
                for j in 0..n {
                    for (db, cb) in b[k][j].iter().enumerate() {
                        if da + db <= max_deg && !cb.is_zero() {
                            c[i][j][da + db] += ca * cb;
                        }
                    }
                }
            }
        }
    }
    c
}

/// Number of eigenstates of `H_N` at each integer energy `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpectralCensus {
    pub n: usize,
    /// `dims[k]` for `k = 0..=N`.
    pub dims: Vec<BigUint>,
}

impl SpectralCensus {
    pub fn total(&self) -> BigUint {
        self.dims.iter().sum()
    }
}

/// `dims[k] = [x^k] Tr((M + xR)^N)`: in the joint eigenbasis of the commuting
/// bond projectors every state picks a kernel or range vector on each bond.
pub fn spectral_census(t: &TransferMatrices, n: usize) -> Result<SpectralCensus> {
    check_length(n, 1)?;
    let size = t.size();
    let step: PolyMatrix = (0..size)
        .map(|i| (0..size).map(|j| vec![t.m[i][j].clone(), t.r[i][j].clone()]).collect())
        .collect();
    let mut result: PolyMatrix = (0..size)
        .map(|i| (0..size).map(|j| vec![if i == j { BigUint::one() } else { BigUint::zero() }]).collect())
        .collect();
    let mut base = step;
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            result = poly_mul(&result, &base, n);
        }
        e >>= 1;
        if e > 0 {
            base = poly_mul(&base, &base, n);
        }
    }
    let mut dims = vec![BigUint::zero(); n + 1];
    for (i, row) in result.iter().enumerate() {
        for (k, c) in row[i].iter().enumerate() {
            dims[k] += c;
        }
    }
    Ok(SpectralCensus { n, dims })
}

/// Ordered cycles (rotations distinct) in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleList {
    pub cycles: Vec<Vec<usize>>,
    pub truncated: bool,
}

/// `reach[k][u][v]`: a walk of exactly `k` edges leads from `u` to `v`.
fn reachability(g: &InteractionGraph, max_len: usize) -> Vec<Vec<Vec<bool>>> {
    let n = g.num_vertices();
    let mut reach = vec![vec![vec![false; n]; n]; max_len + 1];
    for u in 0..n {
        reach[0][u][u] = true;
    }
    for k in 1..=max_len {
        for u in 0..n {
            for w in 0..n {
                if g.m[u][w] == 0 {
                    continue;
                }
                for v in 0..n {
                    if reach[k - 1][w][v] {
                        reach[k][u][v] = true;
                    }
                }
            }
        }
    }
    reach
}

pub fn enumerate_cycles(g: &InteractionGraph, n: usize, cap: usize) -> Result<CycleList> {
    check_length(n, 1)?;
    let reach = reachability(g, n);
    let mut out = CycleList { cycles: Vec::new(), truncated: false };
    let mut path = Vec::with_capacity(n);
    for start in 0..g.num_vertices() {
        if !reach[n][start][start] {
            continue;
        }
        path.clear();
        path.push(start);
        if !extend_cycle(g, &reach, n, &mut path, &mut out, cap) {
            break;
        }
    }
    Ok(out)
}

/// Returns false once the cap stops the search.
fn extend_cycle(
    g: &InteractionGraph,
    reach: &[Vec<Vec<bool>>],
    n: usize,
    path: &mut Vec<usize>,
    out: &mut CycleList,
    cap: usize,
) -> bool {
    let last = *path.last().unwrap();
    if path.len() == n {
        if g.m[last][path[0]] > 0 {
            if out.cycles.len() >= cap {
                out.truncated = true;
                return false;
            }
            out.cycles.push(path.clone());
        }
        return true;
    }
    let remaining = n - path.len();
    for next in 0..g.num_vertices() {
        if g.m[last][next] > 0 && reach[remaining][next][path[0]] {
            path.push(next);
            let go_on = extend_cycle(g, reach, n, path, out, cap);
            path.pop();
            if !go_on {
                return false;
            }
        }
    }
    true
}

/// Why a graph is not scale invariant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    /// A directed cycle of length at least two.
    Cycle(Vec<usize>),
    /// A self-loop whose bond kernel has dimension at least two.
    HeavyLoop { vertex: usize, weight: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScaleInvarianceVerdict {
    pub scale_invariant: bool,
    /// Vertices with `M[a][a] = 1`.
    pub loops: Vec<usize>,
    pub witness: Option<Witness>,
}

/// Shortest cycle through `v` avoiding self-loops.
fn shortest_cycle_through(g: &InteractionGraph, v: usize) -> Option<Vec<usize>> {
    let n = g.num_vertices();
    let mut parent = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    for w in 0..n {
        if w != v && g.m[v][w] > 0 {
            seen[w] = true;
            parent[w] = v;
            queue.push_back(w);
        }
    }
    while let Some(u) = queue.pop_front() {
        if g.m[u][v] > 0 {
            let mut cycle = vec![u];
            let mut x = u;
            while parent[x] != v {
                x = parent[x];
                cycle.push(x);
            }
            cycle.push(v);
            cycle.reverse();
            return Some(cycle);
        }
        for w in 0..n {
            if w != v && w != u && !seen[w] && g.m[u][w] > 0 {
                seen[w] = true;
                parent[w] = u;
                queue.push_back(w);
            }
        }
    }
    None
}

/// Scale invariant iff the graph minus its self-loops is acyclic and every
/// self-loop has weight one. A cycle witness takes precedence; it is the
/// shortest cycle through the lowest vertex lying on one.
pub fn check_scale_invariance(g: &InteractionGraph) -> ScaleInvarianceVerdict {
    let n = g.num_vertices();
    let loops: Vec<usize> = (0..n).filter(|&a| g.m[a][a] == 1).collect();
    let witness = (0..n)
        .find_map(|v| shortest_cycle_through(g, v).map(Witness::Cycle))
        .or_else(|| (0..n).find(|&a| g.m[a][a] >= 2).map(|a| Witness::HeavyLoop { vertex: a, weight: g.m[a][a] }));
    let scale_invariant = witness.is_none();
    if scale_invariant && cfg!(debug_assertions) {
        let t = TransferMatrices::from_graph(g);
        for len in 1..=2 * n.max(1) {
            debug_assert_eq!(degeneracy(&t, len).ok(), Some(BigUint::from(loops.len())));
        }
    }
    ScaleInvarianceVerdict { scale_invariant, loops, witness }
}

/// The kernel vector of a weight-one self-loop, on `H_{α_r} ⊗ H_{α_l}`.
#[derive(Clone, Debug)]
pub struct GroundLoopState {
    pub block: usize,
    pub phi: Vec<c64>,
}

/// One state per weight-one self-loop.
pub fn loop_states(bonds: &BondFactors) -> Vec<GroundLoopState> {
    (0..bonds.num_blocks())
        .filter(|&a| bonds.get(a, a).kernel_dim == 1)
        .map(|a| GroundLoopState { block: a, phi: linalg::column(&bonds.get(a, a).kernel_basis, 0) })
        .collect()
}

/// Periodic matrix product state `ψ(s_1..s_N) = Tr(A_1^{s_1} ⋯ A_N^{s_N})`.
/// `tensors[j][s]` is a `D_j × D_{j+1}` matrix with `D_{N+1} = D_1`.
#[derive(Clone, Debug)]
pub struct Mps {
    pub tensors: Vec<Vec<CMatrix>>,
}

impl Mps {
    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn phys_dim(&self) -> usize {
        self.tensors.first().map_or(0, |t| t.len())
    }

    pub fn bond_dim(&self) -> usize {
        self.tensors.iter().map(|t| t[0].nrows()).max().unwrap_or(0)
    }

    /// True when every site carries the same tensor.
    pub fn is_uniform(&self) -> bool {
        self.tensors.windows(2).all(|w| {
            w[0].len() == w[1].len()
                && w[0].iter().zip(&w[1]).all(|(a, b)| a.nrows() == b.nrows() && a.ncols() == b.ncols() && a == b)
        })
    }

    /// The state after applying `y` on every site: `A'^s = Σ_t y[s,t] A^t`.
    /// Bond dimensions are unchanged.
    pub fn map_sites(&self, y: &CMatrix) -> Mps {
        let tensors = self
            .tensors
            .iter()
            .map(|site| {
                (0..y.nrows())
                    .map(|s| {
                        let mut acc = linalg::zeros(site[0].nrows(), site[0].ncols());
                        for (t, a) in site.iter().enumerate() {
                            acc += linalg::scale(a, y[(s, t)]);
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        Mps { tensors }
    }

    /// Dense amplitudes, first site most significant. Fails when `d^N > cap`.
    pub fn to_vector(&self, cap: usize) -> Result<Vec<c64>> {
        let d = self.phys_dim();
        let n = self.len();
        let dim = checked_pow(d, n).filter(|&x| x <= cap).ok_or(Error::TooLarge {
            dim: checked_pow(d, n).unwrap_or(usize::MAX),
            cap,
        })?;
        // prefix products, one matrix per prefix configuration
        let mut prefixes: Vec<CMatrix> = self.tensors[0].clone();
        for site in &self.tensors[1..] {
            let mut next = Vec::with_capacity(prefixes.len() * d);
            for pre in &prefixes {
                for a in site {
                    next.push(pre * a);
                }
            }
            prefixes = next;
        }
        debug_assert_eq!(prefixes.len(), dim);
        Ok(prefixes.iter().map(linalg::trace).collect())
    }
}

pub(crate) fn checked_pow(d: usize, n: usize) -> Option<usize> {
    let mut x: usize = 1;
    for _ in 0..n {
        x = x.checked_mul(d)?;
    }
    Some(x)
}

/// A ground state labelled by an ordered cycle and one kernel vector per bond.
#[derive(Clone, Debug)]
pub struct GroundState {
    pub cycle: Vec<usize>,
    /// Column of the bond kernel basis used on bond `j` (sites `j`, `j+1`).
    pub kernel_choice: Vec<usize>,
    /// The chosen kernel vector on each bond, on `H_{v_j,r} ⊗ H_{v_{j+1},l}`.
    pub bond_vectors: Vec<Vec<c64>>,
    pub mps: Mps,
}

#[derive(Clone, Debug)]
pub struct GroundStates {
    pub states: Vec<GroundState>,
    pub truncated: bool,
}

/// Site tensor `A^s[a, a'] = Σ_b W[s, a·r + b] φ[b·l' + a']`.
fn site_tensor(w: &CMatrix, l: usize, r: usize, phi: &[c64], l_next: usize) -> Vec<CMatrix> {
    (0..w.nrows())
        .map(|s| {
            CMatrix::from_fn(l, l_next, |a, ap| {
                (0..r).fold(c64::new(0.0, 0.0), |acc, b| acc + w[(s, a * r + b)] * phi[b * l_next + ap])
            })
        })
        .collect()
}

/// Build the state for one cycle and kernel choice.
pub fn cycle_state(dec: &SiteDecomposition, bonds: &BondFactors, cycle: &[usize], choice: &[usize]) -> GroundState {
    let n = cycle.len();
    let mut bond_vectors = Vec::with_capacity(n);
    let mut tensors = Vec::with_capacity(n);
    for j in 0..n {
        let (v, next) = (cycle[j], cycle[(j + 1) % n]);
        let phi = linalg::column(&bonds.get(v, next).kernel_basis, choice[j]);
        let block = &dec.blocks[v];
        tensors.push(site_tensor(&block.isometry, block.l(), block.r(), &phi, dec.blocks[next].l()));
        bond_vectors.push(phi);
    }
    GroundState { cycle: cycle.to_vec(), kernel_choice: choice.to_vec(), bond_vectors, mps: Mps { tensors } }
}

/// Orthonormal basis of `ker H_N`: one state per ordered cycle and tuple of
/// bond kernel vectors, at most `cap` of them.
pub fn ground_states(dec: &SiteDecomposition, bonds: &BondFactors, n: usize, cap: usize) -> Result<GroundStates> {
    check_length(n, 2)?;
    let g = crate::graph::build_graph(bonds);
    let cycles = enumerate_cycles(&g, n, cap)?;
    let mut out = GroundStates { states: Vec::new(), truncated: cycles.truncated };
    'cycles: for cycle in &cycles.cycles {
        let weights: Vec<usize> = (0..n).map(|j| g.m[cycle[j]][cycle[(j + 1) % n]]).collect();
        let mut choice = vec![0usize; n];
        loop {
            if out.states.len() >= cap {
                out.truncated = true;
                break 'cycles;
            }
            out.states.push(cycle_state(dec, bonds, cycle, &choice));
            // odometer over kernel indices, last bond fastest
            let mut j = n;
            loop {
                if j == 0 {
                    continue 'cycles;
                }
                j -= 1;
                choice[j] += 1;
                if choice[j] < weights[j] {
                    break;
                }
                choice[j] = 0;
            }
        }
    }
    Ok(out)
}
