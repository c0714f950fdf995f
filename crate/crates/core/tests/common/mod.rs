#![allow(dead_code)]

use evolalg::{Complex, Matrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn re(x: f64) -> Complex {
    Complex::new(x, 0.0)
}

/// Uniform `[-1, 1]` real matrix with condition number at most `1e2`.
pub fn invertible(n: usize, seed: u64) -> Matrix {
    invertible_with(n, seed, 1e2)
}

pub fn invertible_with(n: usize, seed: u64, max_cond: f64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let m = Matrix::from_fn(n, n, |_, _| re(rng.random_range(-1.0..=1.0)));
        let sv = evolalg::numkernel::svd(&m).singular_values;
        if sv[n - 1] > 0.0 && sv[0] / sv[n - 1] <= max_cond {
            return m;
        }
    }
}

pub fn random_real(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(n, n, |_, _| re(rng.random_range(-1.0..=1.0)))
}

pub fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let a = random_real(n, rng);
    &a + &a.transpose()
}

pub fn real_diagonal(entries: &[f64]) -> Matrix {
    Matrix::diagonal(&entries.iter().map(|&x| re(x)).collect::<Vec<_>>())
}

pub fn seeds() -> impl Strategy<Value = u64> {
    any::<u64>()
}
