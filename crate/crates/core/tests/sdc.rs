mod common;

use common::{invertible, re};
use evolalg::pencil::DEFAULT_TRIALS;
use evolalg::sdc::gram_factor;
use evolalg::{
    adversarial_instance, max_pencil_rank, paper_example, planted_evolution_algebra, sdc_full_rank,
    sdc_reduced, verify_congruence, AdversarialKind, Complex, Directions, ExampleId, LinearPencil,
    Matrix, SdcResult, Tolerances,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn solve(ms: &[Matrix], seed: u64) -> SdcResult<f64> {
    let pencil = LinearPencil::new(ms.to_vec(), &tol()).unwrap();
    let w = max_pencil_rank(&pencil, &tol(), DEFAULT_TRIALS, seed, Directions::Complex);
    if w.r0 == ms[0].n_rows() {
        sdc_full_rank(ms, &w, &tol(), true).unwrap()
    } else {
        sdc_reduced(ms, &w, &tol(), true).unwrap()
    }
}

fn planted_family(n: usize, seed: u64) -> Vec<Matrix> {
    planted_evolution_algebra::<f64>(n, 0.8, seed)
        .unwrap()
        .0
        .m_structure_matrices()
        .matrices
}

fn adversarial_family(n: usize, seed: u64) -> Vec<Matrix> {
    let kind = AdversarialKind::ALL[(seed % 3) as usize];
    adversarial_instance::<f64>(kind, n.max(3), seed)
        .unwrap()
        .spec
        .m_structure_matrices()
        .matrices
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn planted_families_are_sdc_and_verified(n in 1usize..7, seed in any::<u64>()) {
        let ms = planted_family(n, seed);
        match solve(&ms, seed) {
            SdcResult::Sdc(c) => {
                prop_assert!(verify_congruence(&c.p, &ms, &tol()).unwrap().is_yes());
                prop_assert!(c.gram_residual <= 1e-8, "gram residual {}", c.gram_residual);
            }
            other => prop_assert!(false, "{:?}", other),
        }
    }

    #[test]
    fn verdict_is_congruence_invariant(n in 2usize..6, seed in any::<u64>(), planted in any::<bool>()) {
        let ms = if planted { planted_family(n, seed) } else { adversarial_family(n, seed) };
        let r = invertible(ms[0].n_rows(), seed ^ 11);
        let moved: Vec<Matrix> = ms.iter().map(|m| r.congruence(m)).collect();
        prop_assert_eq!(solve(&ms, seed).is_sdc(), solve(&moved, seed).is_sdc());
        prop_assert_eq!(solve(&ms, seed).is_sdc(), planted);
    }

    #[test]
    fn scaling_keeps_verdict_and_scales_diagonals(n in 1usize..6, seed in any::<u64>(), c in prop_oneof![-50.0f64..-0.02, 0.02f64..50.0]) {
        let ms = planted_family(n, seed);
        let scaled: Vec<Matrix> = ms.iter().map(|m| m.scale(re(c))).collect();
        let SdcResult::Sdc(base) = solve(&ms, seed) else { return Err(TestCaseError::fail("base not sdc")); };
        prop_assert!(solve(&scaled, seed).is_sdc());
        prop_assert!(verify_congruence(&base.p, &scaled, &tol()).unwrap().is_yes());
        for (k, m) in scaled.iter().enumerate() {
            let d = base.p.congruence(m).diag();
            for (got, want) in d.iter().zip(&base.diagonals[k]) {
                prop_assert!((got - want * c).norm() <= 1e-7 * c.abs() * (1.0 + want.norm()));
            }
        }
    }

    #[test]
    fn full_rank_and_reduced_agree(n in 1usize..6, seed in any::<u64>()) {
        let ms = planted_family(n, seed);
        let pencil = LinearPencil::new(ms.clone(), &tol()).unwrap();
        let w = max_pencil_rank(&pencil, &tol(), DEFAULT_TRIALS, seed, Directions::Complex);
        if w.r0 != n {
            return Ok(());
        }
        let full = sdc_full_rank(&ms, &w, &tol(), true).unwrap();
        let reduced = sdc_reduced(&ms, &w, &tol(), true).unwrap();
        prop_assert_eq!(full.is_sdc(), reduced.is_sdc());
        if let SdcResult::Sdc(c) = reduced {
            prop_assert!(verify_congruence(&c.p, &ms, &tol()).unwrap().is_yes());
        }
    }

    #[test]
    fn gram_factor_reproduces_g(d in 1usize..6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Matrix::from_fn(d, d, |_, _| Complex::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)));
        let g = &a.transpose() * &a;
        prop_assume!(evolalg::numkernel::rank(&g, &tol()) == d);
        let f = gram_factor(&g, false, &tol()).unwrap();
        prop_assert!(f.residual <= 1e-8, "residual {}", f.residual);
        let wgw = f.transform.congruence(&g);
        prop_assert!(wgw.off_diagonal_norm() <= 1e-8 * g.frobenius_norm().max(1.0));
    }
}

#[test]
fn every_sdc_fixture_is_verified() {
    let ids = [
        ExampleId::Simple2d,
        ExampleId::Mendel(0.1),
        ExampleId::Mendel(0.5),
        ExampleId::Mendel(1.0),
        ExampleId::Mendel3dAnn(0.5),
        ExampleId::Tetraploid(0.05),
        ExampleId::Tetraploid(0.2),
    ];
    for id in ids {
        let ms = paper_example::<f64>(id)
            .unwrap()
            .m_structure_matrices()
            .matrices;
        match solve(&ms, 0) {
            SdcResult::Sdc(c) => assert!(
                verify_congruence(&c.p, &ms, &tol()).unwrap().is_yes(),
                "{id}"
            ),
            other => panic!("{id}: {other:?}"),
        }
    }
}
