//! Simultaneous diagonalisation by similarity.
//!
//! A family is SDS iff each member is diagonalisable and all pairs commute.
//! A common eigenbasis is built by refining the eigenspaces of `N_1` with
//! `N_2`, then `N_3`, and so on.

use crate::error::SolverError;
use crate::matrix::DenseMatrix;
use crate::numkernel::{
    commutator_norm, eigen_structure, is_diagonalisable, Diagonalisability, EigenCluster,
};
use crate::scalar::{Real, C};
use crate::tol::ToleranceContext;

/// Orthonormal basis of a joint eigenspace and the eigenvalue of each input
/// matrix on it.
#[derive(Debug, Clone, PartialEq)]
pub struct CommonEigenspace<T> {
    pub basis: Vec<Vec<C<T>>>,
    pub eigenvalues: Vec<C<T>>,
}

impl<T> CommonEigenspace<T> {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SdsWitness<T> {
    /// `cluster` is a defective eigenvalue of matrix `index`.
    NonDiagonalisable {
        index: usize,
        cluster: EigenCluster<T>,
    },
    NonCommuting {
        i: usize,
        j: usize,
        norm: T,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SdsResult<T> {
    Sds {
        q: DenseMatrix<T>,
        eigenspaces: Vec<CommonEigenspace<T>>,
    },
    NotSds(SdsWitness<T>),
}

impl<T> SdsResult<T> {
    pub fn is_sds(&self) -> bool {
        matches!(self, SdsResult::Sds { .. })
    }
}

fn check_shapes<T: Real>(ns: &[DenseMatrix<T>]) -> Result<usize, SolverError> {
    let n = ns.first().ok_or(SolverError::ShapeMismatch)?.n_rows();
    if ns.iter().any(|m| m.shape() != (n, n)) {
        return Err(SolverError::ShapeMismatch);
    }
    Ok(n)
}

/// Diagonalisability is checked for every matrix in index order before any
/// commutator, so the first failure is reported deterministically.
pub fn are_sds<T: Real>(
    ns: &[DenseMatrix<T>],
    tol: &ToleranceContext<T>,
) -> Result<SdsResult<T>, SolverError> {
    check_shapes(ns)?;
    for (index, n) in ns.iter().enumerate() {
        if let Diagonalisability::No { defective } = is_diagonalisable(n, tol)? {
            return Ok(SdsResult::NotSds(SdsWitness::NonDiagonalisable {
                index,
                cluster: defective,
            }));
        }
    }
    for i in 0..ns.len() {
        for j in (i + 1)..ns.len() {
            let norm = commutator_norm(&ns[i], &ns[j])?;
            if norm > tol.commute_rtol * ns[i].frobenius_norm() * ns[j].frobenius_norm() {
                return Ok(SdsResult::NotSds(SdsWitness::NonCommuting { i, j, norm }));
            }
        }
    }
    let (q, eigenspaces) = common_eigenbasis(ns, tol)?;
    Ok(SdsResult::Sds { q, eigenspaces })
}

/// Joint eigenspaces of a diagonalisable commuting family, and `Q` whose
/// columns are their bases in order.
///
/// Each matrix is compressed onto the current subspaces as `BᴴNB` and split
/// by its eigenvalues there.
pub fn common_eigenbasis<T: Real>(
    ns: &[DenseMatrix<T>],
    tol: &ToleranceContext<T>,
) -> Result<(DenseMatrix<T>, Vec<CommonEigenspace<T>>), SolverError> {
    let n = check_shapes(ns)?;
    let identity: Vec<Vec<C<T>>> = DenseMatrix::<T>::identity(n).columns();
    let mut spaces = vec![CommonEigenspace {
        basis: identity,
        eigenvalues: Vec::new(),
    }];
    for (index, nk) in ns.iter().enumerate() {
        let mut refined = Vec::with_capacity(spaces.len());
        for space in spaces {
            let d = space.dim();
            let b = DenseMatrix::from_columns(n, &space.basis);
            let restricted = &(&b.conj_transpose() * nk) * &b;
            let es = eigen_structure(&restricted, tol)?;
            let spanned: usize = es.clusters.iter().map(|c| c.geometric_multiplicity()).sum();
            if spanned != d || es.clusters.iter().any(|c| !c.is_semisimple()) {
                return Err(SolverError::RefinementInconsistency { index });
            }
            for cluster in es.clusters {
                let basis = cluster.eigenspace.iter().map(|v| b.mat_vec(v)).collect();
                let mut eigenvalues = space.eigenvalues.clone();
                eigenvalues.push(cluster.eigenvalue);
                refined.push(CommonEigenspace { basis, eigenvalues });
            }
        }
        spaces = refined;
    }
    let columns: Vec<Vec<C<T>>> = spaces
        .iter()
        .flat_map(|s| s.basis.iter().cloned())
        .collect();
    Ok((DenseMatrix::from_columns(n, &columns), spaces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::{commutator_norm, inverse};

    type M = DenseMatrix<f64>;

    fn tol() -> ToleranceContext<f64> {
        ToleranceContext::default()
    }

    fn assert_diagonalises(ns: &[M], q: &M) {
        let qi = inverse(q, &tol()).unwrap();
        for n in ns {
            let d = &(&qi * n) * q;
            assert!(
                d.off_diagonal_norm() <= 1e-8 * n.frobenius_norm().max(1.0),
                "{d:?}"
            );
        }
    }

    #[test]
    fn mendel_matrix_is_not_sds() {
        let a = M::from_real_rows(&[&[1.0, 2.0], &[-2.0, -3.0]]);
        match are_sds(&[a], &tol()).unwrap() {
            SdsResult::NotSds(SdsWitness::NonDiagonalisable { index, cluster }) => {
                assert_eq!(index, 0);
                assert!((cluster.eigenvalue - C::new(-1.0, 0.0)).norm() < 1e-8);
                assert_eq!(cluster.geometric_multiplicity(), 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tetraploid_pair_commutes_but_is_not_sds() {
        let m1 = M::from_real_rows(&[
            &[1.0, 0.5, 1.0 / 6.0],
            &[0.5, 1.0 / 6.0, 0.0],
            &[1.0 / 6.0, 0.0, 0.0],
        ]);
        let m2 = M::from_real_rows(&[
            &[0.0, 1.0 / 2.0, 2.0 / 3.0],
            &[1.0 / 2.0, 2.0 / 3.0, 1.0 / 2.0],
            &[2.0 / 3.0, 1.0 / 2.0, 0.0],
        ]);
        let m3 = M::from_real_rows(&[
            &[0.0, 0.0, 1.0 / 6.0],
            &[0.0, 1.0 / 6.0, 0.5],
            &[1.0 / 6.0, 0.5, 1.0],
        ]);
        let inv = inverse(&m1, &tol()).unwrap();
        let (n2, n3) = (&inv * &m2, &inv * &m3);
        assert!(commutator_norm(&n2, &n3).unwrap() < 1e-10);
        match are_sds(&[n2, n3], &tol()).unwrap() {
            SdsResult::NotSds(SdsWitness::NonDiagonalisable { index, cluster }) => {
                assert_eq!(index, 0);
                assert!((cluster.eigenvalue - C::new(-2.0, 0.0)).norm() < 1e-6);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn identity_and_swap() {
        let x = M::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let ns = [M::identity(2), x];
        match are_sds(&ns, &tol()).unwrap() {
            SdsResult::Sds { q, eigenspaces } => {
                assert_diagonalises(&ns, &q);
                let mut tuples: Vec<(f64, f64)> = eigenspaces
                    .iter()
                    .map(|s| (s.eigenvalues[0].re, s.eigenvalues[1].re))
                    .collect();
                tuples.sort_by(|a, b| a.partial_cmp(b).unwrap());
                assert!((tuples[0].0 - 1.0).abs() < 1e-12 && (tuples[0].1 + 1.0).abs() < 1e-12);
                assert!((tuples[1].0 - 1.0).abs() < 1e-12 && (tuples[1].1 - 1.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_commuting_pair() {
        let x = M::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let z = M::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]);
        match are_sds(&[M::identity(2), x, z], &tol()).unwrap() {
            SdsResult::NotSds(SdsWitness::NonCommuting { i, j, norm }) => {
                assert_eq!((i, j), (1, 2));
                assert!((norm - 2.0 * 2f64.sqrt()).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn diagonal_eigenspaces() {
        let d = M::diagonal(&[C::new(1.0, 0.0), C::new(2.0, 0.0), C::new(2.0, 0.0)]);
        let (q, spaces) = common_eigenbasis(std::slice::from_ref(&d), &tol()).unwrap();
        assert_eq!(spaces.len(), 2);
        assert_eq!(spaces[0].dim(), 1);
        assert_eq!(spaces[1].dim(), 2);
        assert_diagonalises(&[d], &q);
    }

    #[test]
    fn mendel_deformation_at_one_half() {
        let eps = 0.5;
        let m1 = M::from_real_rows(&[&[1.0 - eps, 0.5], &[0.5, 0.0]]);
        let m2 = M::from_real_rows(&[&[eps, 0.5], &[0.5, 1.0]]);
        let n = &inverse(&m1, &tol()).unwrap() * &m2;
        let (q, spaces) = common_eigenbasis(std::slice::from_ref(&n), &tol()).unwrap();
        assert_diagonalises(&[n], &q);
        let mut ev: Vec<f64> = spaces.iter().map(|s| s.eigenvalues[0].re).collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ev[0] + 1.0).abs() < 1e-10);
        assert!((ev[1] - (4.0 * eps - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn mismatched_shapes_are_rejected() {
        assert_eq!(are_sds::<f64>(&[], &tol()), Err(SolverError::ShapeMismatch));
        assert_eq!(
            are_sds(&[M::identity(2), M::identity(3)], &tol()),
            Err(SolverError::ShapeMismatch)
        );
    }
}
