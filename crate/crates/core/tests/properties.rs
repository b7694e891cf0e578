use chainphase_core::bridge::x_defect;
use chainphase_core::corpus::identifiable;
use chainphase_core::decomposition::{commutant, decompose_site, generate_algebra};
use chainphase_core::ed::{self, build_chain};
use chainphase_core::graph::{extract_bond_projectors, InteractionGraph};
use chainphase_core::groundspace::{
    check_scale_invariance, degeneracy, enumerate_cycles, spectral_census, TransferMatrices,
};
use chainphase_core::linalg::{self, c64, CMatrix};
use chainphase_core::operators::{
    check_commuting, operator_schmidt, projectorize, synthesize_local_term, LocalTerm, TwoSite,
};
use chainphase_core::BlockDims;
use faer::Mat;
use num_bigint::BigUint;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

/// PSD two-site term with a kernel of dimension `k` in a random basis.
fn psd_with_kernel(d: usize, k: usize, seed: u64) -> LocalTerm {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = d * d;
    let u = linalg::haar_unitary(&mut rng, n);
    let diag = Mat::from_fn(n, n, |i, j| {
        if i == j && i >= k {
            linalg::real(rng.random_range(0.25..3.0))
        } else {
            c64::new(0.0, 0.0)
        }
    });
    LocalTerm::new(d, linalg::hermitian_part(&(&u * diag * u.adjoint())), TOL).unwrap()
}

fn blocks_strategy() -> impl Strategy<Value = Vec<BlockDims>> {
    prop::collection::vec((1usize..=2, 1usize..=3), 1..=3)
        .prop_map(|v| v.into_iter().map(|(l, r)| BlockDims::new(l, r)).collect::<Vec<_>>())
        .prop_filter("site dimension", |b| (2..=6).contains(&b.iter().map(|x| x.dim()).sum::<usize>()))
}

/// Blocks together with a kernel matrix respecting the `r·l` caps.
fn spec_strategy() -> impl Strategy<Value = (Vec<BlockDims>, Vec<Vec<usize>>, u64)> {
    blocks_strategy().prop_flat_map(|blocks| {
        let nb = blocks.len();
        let caps: Vec<BoxedStrategy<usize>> = (0..nb * nb)
            .map(|i| (0..=blocks[i / nb].r * blocks[i % nb].l).boxed())
            .collect();
        (Just(blocks), caps, any::<u64>()).prop_map(move |(b, flat, seed)| {
            let m = flat.chunks(nb).map(|c| c.to_vec()).collect();
            (b, m, seed)
        })
    })
}

/// Random bond-projector kernel data turned into a valid graph.
fn graph_strategy() -> impl Strategy<Value = InteractionGraph> {
    spec_strategy().prop_map(|(blocks, m, _)| {
        let nb = blocks.len();
        let r = (0..nb)
            .map(|a| (0..nb).map(|b| blocks[a].r * blocks[b].l - m[a][b]).collect())
            .collect();
        InteractionGraph::from_parts(m, r, blocks).unwrap()
    })
}

fn diff(a: &CMatrix, b: &CMatrix) -> f64 {
    linalg::fro_norm(&(a - b))
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn projectorize_is_idempotent_and_keeps_the_kernel(d in 2usize..=3, k in 0usize..=4, seed in any::<u64>()) {
        let h = psd_with_kernel(d, k, seed);
        let p = projectorize(&h, TOL).unwrap();
        let pp = projectorize(&p.as_local_term(), TOL).unwrap();
        prop_assert!(diff(p.op(), pp.op()) < TOL);
        let kh = linalg::eigh(h.op()).unwrap().columns_where(|v| v < 1e-8);
        let kp = linalg::eigh(p.op()).unwrap().columns_where(|v| v < 0.5);
        prop_assert_eq!(kh.ncols(), k);
        prop_assert!(ed::same_subspace(&kh, &kp, 1e-8).unwrap());
    }

    #[test]
    fn schmidt_reconstructs_any_hermitian_term(d in 2usize..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = LocalTerm::new(d, linalg::random_hermitian(&mut rng, d * d), TOL).unwrap();
        let s = operator_schmidt(&h, TOL).unwrap();
        prop_assert!(diff(&s.reconstruct(), h.op()) < TOL * linalg::fro_norm(h.op()).max(1.0));
        for f in s.left_factors.iter().chain(&s.right_factors) {
            prop_assert!(linalg::hermiticity_defect(f) < 1e-12);
        }
    }

    #[test]
    fn x_defect_is_linear(seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = 2;
        let h = linalg::random_hermitian(&mut rng, d * d);
        let x1 = linalg::random_hermitian(&mut rng, d);
        let x2 = linalg::random_hermitian(&mut rng, d);
        let mix = linalg::scale(&x1, linalg::real(a)) + linalg::scale(&x2, linalg::real(b));
        let lhs = x_defect(&h, d, &mix);
        let rhs = linalg::scale(&x_defect(&h, d, &x1), linalg::real(a))
            + linalg::scale(&x_defect(&h, d, &x2), linalg::real(b));
        prop_assert!(diff(&lhs, &rhs) < 1e-10);
    }

    #[test]
    fn chains_are_translation_invariant(d in 2usize..=3, n in 2usize..=5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = LocalTerm::new(d, linalg::random_hermitian(&mut rng, d * d), TOL).unwrap();
        if let Ok(chain) = build_chain(&h, n, 256) {
            prop_assert!(chain.translation_defect(seed) < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(config(16))]

    #[test]
    fn synthesized_terms_commute((blocks, m, seed) in spec_strategy()) {
        let p = synthesize_local_term(&blocks, &m, seed).unwrap();
        prop_assert!(check_commuting(&p, TOL).unwrap().commuting);
    }

    #[test]
    fn decomposition_properties((blocks, m, seed) in spec_strategy()) {
        let p = synthesize_local_term(&blocks, &m, seed).unwrap();
        prop_assume!(identifiable(&blocks, &p, TOL));
        let dec = decompose_site(&p, TOL, 0).unwrap();
        let again = decompose_site(&p, TOL, 0).unwrap();

        // round trip
        let mut want: Vec<_> = blocks.iter().map(|b| (b.l, b.r)).collect();
        let mut got: Vec<_> = dec.block_dims().iter().map(|b| (b.l, b.r)).collect();
        want.sort();
        got.sort();
        prop_assert_eq!(got, want);

        // completeness
        let d = p.site_dim();
        let mut sum = linalg::zeros(d, d);
        for b in &dec.blocks {
            sum += b.projection();
        }
        prop_assert!(diff(&sum, &linalg::identity(d)) < 1e-8);

        // bit-stable determinism
        prop_assert_eq!(dec.blocks.len(), again.blocks.len());
        for (x, y) in dec.blocks.iter().zip(&again.blocks) {
            prop_assert_eq!(x.dims, y.dims);
            prop_assert!(diff(&x.isometry, &y.isometry) == 0.0);
        }

        let bonds = extract_bond_projectors(&p, &dec, TOL).unwrap();
        prop_assert!(bonds.reconstruction_residual < TOL.sqrt());
    }

    #[test]
    fn double_commutant_is_the_generated_algebra((blocks, m, seed) in spec_strategy()) {
        let p = synthesize_local_term(&blocks, &m, seed).unwrap();
        let s = operator_schmidt(&p, TOL).unwrap();
        let d = p.site_dim();
        let a = generate_algebra(d, &s.right_factors, TOL);
        let aa = commutant(&commutant(&a, TOL).unwrap(), TOL).unwrap();
        prop_assert_eq!(a.dimension(), aa.dimension());
        prop_assert!(a.span_distance(&aa) < 1e-8);
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn census_is_complete(g in graph_strategy()) {
        let t = TransferMatrices::from_graph(&g);
        let d: usize = g.block_dims.iter().map(|b| b.dim()).sum();
        for n in 1..=12usize {
            let census = spectral_census(&t, n).unwrap();
            prop_assert_eq!(census.total(), BigUint::from(d).pow(n as u32));
            prop_assert_eq!(&census.dims[0], &degeneracy(&t, n).unwrap());
        }
    }

    #[test]
    fn weighted_cycles_count_the_degeneracy(g in graph_strategy()) {
        let t = TransferMatrices::from_graph(&g);
        for n in 1..=8usize {
            let cycles = enumerate_cycles(&g, n, usize::MAX).unwrap();
            let weighted: BigUint = cycles
                .cycles
                .iter()
                .map(|c| (0..n).map(|j| BigUint::from(g.m[c[j]][c[(j + 1) % n]])).product::<BigUint>())
                .sum();
            prop_assert_eq!(weighted, degeneracy(&t, n).unwrap());
        }
    }

    #[test]
    fn scale_invariance_means_constant_degeneracy(g in graph_strategy()) {
        let v = check_scale_invariance(&g);
        let t = TransferMatrices::from_graph(&g);
        let degs: Vec<BigUint> = (1..=12).map(|n| degeneracy(&t, n).unwrap()).collect();
        if v.scale_invariant {
            for x in &degs {
                prop_assert_eq!(x, &BigUint::from(v.loops.len()));
            }
        } else {
            prop_assert!(v.witness.is_some());
            prop_assert!(degs.windows(2).any(|w| w[0] != w[1]) || degs[0] != BigUint::from(v.loops.len()));
        }
    }
}
