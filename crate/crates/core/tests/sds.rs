mod common;

use common::{invertible, random_real, re};
use evolalg::numkernel::{inverse, is_diagonalisable};
use evolalg::{are_sds, Matrix, SdsResult, Tolerances};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tol() -> Tolerances {
    Tolerances::default()
}

/// `Q D_k Q⁻¹` with eigenvalues drawn from a few levels so that
/// eigenspaces of dimension above one occur.
fn planted_family(n: usize, m: usize, seed: u64) -> Vec<Matrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = invertible(n, seed);
    let qi = inverse(&q, &tol()).unwrap();
    (0..m)
        .map(|_| {
            let d: Vec<_> = (0..n)
                .map(|_| re(rng.random_range(-2i32..=2) as f64))
                .collect();
            &(&q * &Matrix::diagonal(&d)) * &qi
        })
        .collect()
}

fn check_diagonalises(ns: &[Matrix], result: &SdsResult<f64>) -> Result<(), TestCaseError> {
    let SdsResult::Sds { q, eigenspaces } = result else {
        return Err(TestCaseError::fail(format!("{result:?}")));
    };
    let qi = inverse(q, &tol()).unwrap();
    for nk in ns {
        let d = &(&qi * nk) * q;
        prop_assert!(
            d.off_diagonal_norm() <= 1e-8 * nk.frobenius_norm().max(1.0) * 100.0,
            "{:?}",
            d.off_diagonal_norm()
        );
    }
    let total: usize = eigenspaces.iter().map(|s| s.dim()).sum();
    prop_assert_eq!(total, ns[0].n_rows());
    for (k, nk) in ns.iter().enumerate() {
        let mut from_spaces: Vec<f64> = eigenspaces
            .iter()
            .flat_map(|s| std::iter::repeat_n(s.eigenvalues[k].re, s.dim()))
            .collect();
        let mut spectrum: Vec<f64> = evolalg::numkernel::eigenvalues(nk)
            .unwrap()
            .iter()
            .map(|z| z.re)
            .collect();
        from_spaces.sort_by(f64::total_cmp);
        spectrum.sort_by(f64::total_cmp);
        for (a, b) in from_spaces.iter().zip(&spectrum) {
            prop_assert!((a - b).abs() <= 1e-6);
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn planted_families_are_sds(n in 1usize..7, m in 1usize..7, seed in any::<u64>()) {
        let ns = planted_family(n, m, seed);
        let result = are_sds(&ns, &tol()).unwrap();
        check_diagonalises(&ns, &result)?;
    }

    #[test]
    fn verdict_ignores_input_order(n in 2usize..6, seed in any::<u64>(), break_it in any::<bool>()) {
        let mut ns = planted_family(n, 3, seed);
        if break_it {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            ns.push(random_real(n, &mut rng));
        }
        let forward = are_sds(&ns, &tol()).unwrap().is_sds();
        ns.reverse();
        prop_assert_eq!(forward, are_sds(&ns, &tol()).unwrap().is_sds());
    }

    #[test]
    fn single_matrix_matches_diagonalisability(n in 1usize..6, seed in any::<u64>(), jordan in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = if jordan {
            let j = Matrix::from_fn(n, n, |i, l| if i == l || l == i + 1 { re(1.0) } else { re(0.0) });
            let q = invertible(n, seed);
            &(&q * &j) * &inverse(&q, &tol()).unwrap()
        } else {
            random_real(n, &mut rng)
        };
        prop_assert_eq!(are_sds(std::slice::from_ref(&m), &tol()).unwrap().is_sds(), is_diagonalisable(&m, &tol()).unwrap().is_yes());
    }
}
