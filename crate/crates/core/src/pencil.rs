//! The linear pencil `M(λ) = Σ λ_j M_j` and a randomized search for a
//! direction of maximum rank.

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::SolverError;
use crate::matrix::{vec_norm, DenseMatrix};
use crate::numkernel::rank_info;
use crate::scalar::{Real, C};
use crate::tol::{scale, ToleranceContext};

pub const DEFAULT_TRIALS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearPencil<T> {
    matrices: Vec<DenseMatrix<T>>,
}

/// Distribution of the random search directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Directions {
    /// Independent standard complex Gaussian coordinates.
    Complex,
    /// Independent standard real Gaussian coordinates.
    Real,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PencilRankWitness<T> {
    /// Unit vector with `rank M(λ₀) = r0`.
    pub lambda0: Vec<C<T>>,
    pub r0: usize,
    /// Random directions drawn (0 when a canonical direction reached full rank).
    pub trials_used: usize,
    pub seed: u64,
    /// Smallest singular value of `M(λ₀)` counted in the rank.
    pub smallest_retained: T,
    /// `σ_max / smallest_retained` of `M(λ₀)`.
    pub condition: T,
}

impl<T: Real> LinearPencil<T> {
    /// At least one matrix; all square, equally sized and symmetric within
    /// `verify_rtol`.
    pub fn new(
        matrices: Vec<DenseMatrix<T>>,
        tol: &ToleranceContext<T>,
    ) -> Result<Self, SolverError> {
        let n = matrices.first().ok_or(SolverError::ShapeMismatch)?.n_rows();
        for (index, m) in matrices.iter().enumerate() {
            if m.shape() != (n, n) {
                return Err(SolverError::ShapeMismatch);
            }
            if m.asymmetry() > tol.verify_rtol * scale(m.frobenius_norm()) {
                return Err(SolverError::NotSymmetric { index });
            }
        }
        Ok(Self { matrices })
    }

    pub fn matrices(&self) -> &[DenseMatrix<T>] {
        &self.matrices
    }

    /// Number of matrices `m`.
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    /// Size `n` of each matrix.
    pub fn dim(&self) -> usize {
        self.matrices[0].n_rows()
    }

    pub fn evaluate(&self, lambda: &[C<T>]) -> Result<DenseMatrix<T>, SolverError> {
        if lambda.len() != self.matrices.len() {
            return Err(SolverError::ShapeMismatch);
        }
        let n = self.dim();
        let mut out = DenseMatrix::zeros(n, n);
        for (l, m) in lambda.iter().zip(&self.matrices) {
            if l.is_zero() {
                continue;
            }
            out = &out + &m.scale(*l);
        }
        Ok(out)
    }
}

/// Best rank over the `m` canonical directions followed by `trials` random
/// unit directions.
///
/// Canonical directions are tried in order and the first reaching the best
/// canonical rank is kept. Random draws replace it only with strictly higher
/// rank, or with equal rank and a condition number 100 times smaller. Among
/// random draws of equal rank the one with the largest smallest retained
/// singular value wins. Random draws are skipped when a canonical direction
/// has full rank and `10 · κ · ε ≤ rank_rtol`. Trial `i` uses its own
/// ChaCha8 stream `i` under `seed`, so the result does not depend on
/// evaluation order.
pub fn max_pencil_rank<T: Real>(
    pencil: &LinearPencil<T>,
    tol: &ToleranceContext<T>,
    trials: usize,
    seed: u64,
    directions: Directions,
) -> PencilRankWitness<T> {
    let m = pencil.len();
    let n = pencil.dim();
    let mut best: Option<PencilRankWitness<T>> = None;
    for k in 0..m {
        let mut lambda = vec![C::zero(); m];
        lambda[k] = C::new(T::one(), T::zero());
        let info = rank_info(&pencil.matrices[k], tol);
        if best.as_ref().is_none_or(|b| info.rank > b.r0) {
            best = Some(PencilRankWitness {
                lambda0: lambda,
                r0: info.rank,
                trials_used: 0,
                seed,
                smallest_retained: info.smallest_retained,
                condition: info.condition(),
            });
        }
    }
    let mut best = best.expect("pencil has at least one matrix");
    if best.r0 == n && T::lit(10.0) * best.condition * T::epsilon() <= tol.rank_rtol {
        return best;
    }
    let canonical_rank = best.r0;
    let mut random_best: Option<PencilRankWitness<T>> = None;
    for i in 0..trials {
        let lambda = random_direction(m, seed, i as u64, directions);
        let mat = pencil.evaluate(&lambda).expect("length matches");
        let info = rank_info(&mat, tol);
        let better = match &random_best {
            None => true,
            Some(b) => {
                info.rank > b.r0
                    || (info.rank == b.r0 && info.smallest_retained > b.smallest_retained)
            }
        };
        if better {
            random_best = Some(PencilRankWitness {
                lambda0: lambda,
                r0: info.rank,
                trials_used: 0,
                seed,
                smallest_retained: info.smallest_retained,
                condition: info.condition(),
            });
        }
    }
    if let Some(rb) = random_best {
        if rb.r0 > canonical_rank
            || (rb.r0 == canonical_rank && T::lit(1e2) * rb.condition < best.condition)
        {
            best = rb;
        }
    }
    best.trials_used = trials;
    best
}

fn random_direction<T: Real>(
    m: usize,
    seed: u64,
    stream: u64,
    directions: Directions,
) -> Vec<C<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    loop {
        let v: Vec<C<T>> = (0..m)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = match directions {
                    Directions::Complex => rng.sample(StandardNormal),
                    Directions::Real => 0.0,
                };
                C::new(T::lit(re), T::lit(im))
            })
            .collect();
        let norm = vec_norm(&v);
        if norm > T::zero() {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = DenseMatrix<f64>;

    fn tol() -> ToleranceContext<f64> {
        ToleranceContext::default()
    }

    fn e(m: usize, k: usize) -> Vec<C<f64>> {
        (0..m)
            .map(|i| C::new(if i == k { 1.0 } else { 0.0 }, 0.0))
            .collect()
    }

    fn mendel(eps: f64) -> LinearPencil<f64> {
        let m1 = M::from_real_rows(&[&[1.0 - eps, 0.5], &[0.5, 0.0]]);
        let m2 = M::from_real_rows(&[&[eps, 0.5], &[0.5, 1.0]]);
        LinearPencil::new(vec![m1, m2], &tol()).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let p = mendel(0.5);
        assert_eq!(p.evaluate(&e(2, 0)).unwrap(), p.matrices()[0]);
        assert_eq!(p.evaluate(&[C::new(0.0, 0.0); 2]).unwrap(), M::zeros(2, 2));
        assert!(p.evaluate(&e(3, 0)).is_err());
        let asym = M::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert_eq!(
            LinearPencil::new(vec![asym], &tol()),
            Err(SolverError::NotSymmetric { index: 0 })
        );
    }

    #[test]
    fn canonical_direction_wins_when_invertible() {
        let w = max_pencil_rank(&mendel(0.0), &tol(), DEFAULT_TRIALS, 0, Directions::Complex);
        assert_eq!(w.r0, 2);
        assert_eq!(w.lambda0, e(2, 0));
        assert_eq!(w.trials_used, 0);
    }

    #[test]
    fn remark2_pencil_has_rank_two() {
        let pad = |rows: &[&[f64]]| M::from_real_rows(rows).direct_sum(&M::zeros(1, 1));
        let mats = vec![
            pad(&[&[1.0, 0.0], &[0.0, 1.0]]),
            pad(&[&[0.0, 1.0], &[1.0, 0.0]]),
            pad(&[&[1.0, 0.0], &[0.0, -1.0]]),
        ];
        let p = LinearPencil::new(mats, &tol()).unwrap();
        let w = max_pencil_rank(&p, &tol(), DEFAULT_TRIALS, 3, Directions::Complex);
        assert_eq!(w.r0, 2);
        assert_eq!(w.trials_used, DEFAULT_TRIALS);
        assert_eq!(w.lambda0, e(3, 0));
    }

    #[test]
    fn zero_pencil_has_rank_zero() {
        let p = LinearPencil::new(vec![M::zeros(3, 3); 3], &tol()).unwrap();
        let w = max_pencil_rank(&p, &tol(), 4, 1, Directions::Real);
        assert_eq!(w.r0, 0);
    }

    #[test]
    fn random_search_finds_rank_hidden_from_axes() {
        // each M_k is singular, their sum is not
        let p = LinearPencil::new(
            vec![
                M::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]),
                M::from_real_rows(&[&[0.0, 0.0], &[0.0, 1.0]]),
            ],
            &tol(),
        )
        .unwrap();
        for directions in [Directions::Complex, Directions::Real] {
            let w = max_pencil_rank(&p, &tol(), 8, 42, directions);
            assert_eq!(w.r0, 2);
            assert!((vec_norm(&w.lambda0) - 1.0).abs() < 1e-12);
            if directions == Directions::Real {
                assert!(w.lambda0.iter().all(|z| z.im == 0.0));
            }
            assert_eq!(w, max_pencil_rank(&p, &tol(), 8, 42, directions));
        }
    }
}
