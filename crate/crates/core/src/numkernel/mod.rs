//! Tolerance-aware dense linear algebra: rank, kernel, inverse,
//! eigen-structure, diagonalisability and commutators.
//!
//! Real inputs are handled in complex arithmetic like everything else.

mod eig;
mod svd;

pub use eig::eigenvalues;
pub use svd::{svd, Svd};

use crate::error::KernelError;
use crate::matrix::{vec_dot, vec_norm, DenseMatrix};
use crate::scalar::{abs, c, Real, C};
use crate::tol::{scale, ToleranceContext};
use num_traits::Zero;

/// Rank-revealing data for a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RankInfo<T> {
    pub rank: usize,
    /// Smallest singular value counted in the rank (zero when rank is 0).
    pub smallest_retained: T,
    pub largest: T,
    pub threshold: T,
}

impl<T: Real> RankInfo<T> {
    /// `σ_max / smallest_retained`; infinite at rank 0.
    pub fn condition(&self) -> T {
        if self.rank == 0 {
            T::infinity()
        } else {
            self.largest / self.smallest_retained
        }
    }
}

fn rank_threshold<T: Real>(sv: &[T], rows: usize, cols: usize, tol: &ToleranceContext<T>) -> T {
    let smax = sv.first().copied().unwrap_or_else(T::zero);
    tol.rank_rtol * smax * T::lit(rows.max(cols) as f64)
}

pub fn rank_info<T: Real>(m: &DenseMatrix<T>, tol: &ToleranceContext<T>) -> RankInfo<T> {
    let s = svd(m).singular_values;
    let threshold = rank_threshold(&s, m.n_rows(), m.n_cols(), tol);
    let rank = s
        .iter()
        .take_while(|&&x| x > threshold && x > T::zero())
        .count();
    let smallest_retained = if rank == 0 { T::zero() } else { s[rank - 1] };
    RankInfo {
        rank,
        smallest_retained,
        largest: s.first().copied().unwrap_or_else(T::zero),
        threshold,
    }
}

/// Numerical rank: singular values above `rank_rtol · σ_max · max(rows, cols)`.
pub fn rank<T: Real>(m: &DenseMatrix<T>, tol: &ToleranceContext<T>) -> usize {
    rank_info(m, tol).rank
}

/// Orthonormal basis of the numerical null space, `n_cols - rank` vectors.
///
/// Each vector is phase-normalised so that its largest entry (first on ties)
/// is real and positive.
pub fn kernel_basis<T: Real>(m: &DenseMatrix<T>, tol: &ToleranceContext<T>) -> Vec<Vec<C<T>>> {
    let s = svd(m);
    let threshold = rank_threshold(&s.singular_values, m.n_rows(), m.n_cols(), tol);
    let r = s
        .singular_values
        .iter()
        .take_while(|&&x| x > threshold && x > T::zero())
        .count();
    (r..m.n_cols())
        .map(|j| normalise_phase(s.v.column(j)))
        .collect()
}

/// Right singular vectors with singular value at most `threshold`.
fn kernel_below<T: Real>(m: &DenseMatrix<T>, threshold: T) -> Vec<Vec<C<T>>> {
    let s = svd(m);
    let r = s
        .singular_values
        .iter()
        .take_while(|&&x| x > threshold)
        .count();
    (r..m.n_cols())
        .map(|j| normalise_phase(s.v.column(j)))
        .collect()
}

pub(crate) fn normalise_phase<T: Real>(mut v: Vec<C<T>>) -> Vec<C<T>> {
    let mut best = 0;
    let mut best_abs = T::zero();
    for (i, &z) in v.iter().enumerate() {
        let a = abs(z);
        // tolerate round-off so that near-ties resolve to the first index
        if a > best_abs * (T::one() + T::lit(64.0) * T::epsilon()) {
            best = i;
            best_abs = a;
        }
    }
    if best_abs > T::zero() {
        let phase = v[best].conj() / best_abs;
        for z in v.iter_mut() {
            *z = *z * phase;
        }
        v[best] = c(v[best].re);
    }
    v
}

/// Inverse via Gauss-Jordan elimination with partial pivoting.
///
/// Fails with [`KernelError::Singular`] when the numerical rank is below `n`
/// or the residual `‖MN − I‖` exceeds `verify_rtol · ‖M‖ · ‖N‖`.
pub fn inverse<T: Real>(
    m: &DenseMatrix<T>,
    tol: &ToleranceContext<T>,
) -> Result<DenseMatrix<T>, KernelError> {
    let n = m.n_rows();
    if !m.is_square() {
        return Err(KernelError::DimensionMismatch {
            expected: "square matrix".into(),
            found: format!("{}x{}", m.n_rows(), m.n_cols()),
        });
    }
    let r = rank(m, tol);
    if r < n {
        return Err(KernelError::Singular { rank: r, n });
    }
    let mut a = m.clone();
    let mut inv = DenseMatrix::identity(n);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| abs(a[(i, col)]).partial_cmp(&abs(a[(j, col)])).unwrap())
            .unwrap();
        if abs(a[(pivot, col)]) == T::zero() {
            return Err(KernelError::Singular { rank: col, n });
        }
        if pivot != col {
            for j in 0..n {
                let t = a[(col, j)];
                a[(col, j)] = a[(pivot, j)];
                a[(pivot, j)] = t;
                let t = inv[(col, j)];
                inv[(col, j)] = inv[(pivot, j)];
                inv[(pivot, j)] = t;
            }
        }
        let p = a[(col, col)];
        for j in 0..n {
            a[(col, j)] = a[(col, j)] / p;
            inv[(col, j)] = inv[(col, j)] / p;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = a[(i, col)];
            if f.is_zero() {
                continue;
            }
            for j in 0..n {
                a[(i, j)] = a[(i, j)] - f * a[(col, j)];
                inv[(i, j)] = inv[(i, j)] - f * inv[(col, j)];
            }
        }
    }
    let residual = (&(m * &inv) - &DenseMatrix::identity(n)).frobenius_norm();
    if residual > tol.verify_rtol * m.frobenius_norm() * inv.frobenius_norm() {
        return Err(KernelError::Singular { rank: n - 1, n });
    }
    Ok(inv)
}

/// One eigenvalue cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenCluster<T> {
    pub eigenvalue: C<T>,
    pub algebraic_multiplicity: usize,
    /// Orthonormal basis of the (numerical) eigenspace.
    pub eigenspace: Vec<Vec<C<T>>>,
}

impl<T> EigenCluster<T> {
    pub fn geometric_multiplicity(&self) -> usize {
        self.eigenspace.len()
    }

    pub fn is_semisimple(&self) -> bool {
        self.eigenspace.len() == self.algebraic_multiplicity
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenStructure<T> {
    pub clusters: Vec<EigenCluster<T>>,
}

/// Clustered eigenvalues with eigenspaces.
///
/// Eigenvalues are first grouped with a loose radius
/// `scale · max(eig_cluster_atol, η^(1/n))` with `η = max(1e4·ε, rank_rtol)`,
/// wide enough to catch the `η^(1/k)` splitting of a perturbed size-`k`
/// Jordan block. Inside a group,
/// tight clusters (radius `eig_cluster_atol · scale`) each get the kernel of
/// `M − μI` at their centroid. If those kernels jointly span as many
/// dimensions as the group has eigenvalues (smallest singular value of the
/// union above `defect_rtol`, and `gap/scale · σ_min` of each pair of kernels
/// above `max(1e2 · defect_rtol², 1e-2 · rank_rtol)`), the tight clusters are
/// reported separately;
/// otherwise the group is reported as one cluster at its centroid.
pub fn eigen_structure<T: Real>(
    m: &DenseMatrix<T>,
    tol: &ToleranceContext<T>,
) -> Result<EigenStructure<T>, KernelError> {
    let n = m.n_rows();
    let mut evals = eigenvalues(m)?;
    if n == 0 {
        return Ok(EigenStructure {
            clusters: Vec::new(),
        });
    }
    evals.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    let sc = scale(m.frobenius_norm());
    let tight = tol.eig_cluster_atol * sc;
    let noise = (T::lit(1e4) * T::epsilon()).max(tol.rank_rtol);
    let jordan_spread = noise.powf(T::one() / T::lit(n as f64));
    let loose = sc * tol.eig_cluster_atol.max(jordan_spread);
    // measured against M, not against M - μI, which may be tiny
    let kernel_cut = tol.rank_rtol * sc * T::lit(n as f64);

    let mut clusters = Vec::new();
    for group in single_linkage(&evals, loose) {
        let group_vals: Vec<C<T>> = group.iter().map(|&i| evals[i]).collect();
        let subs = single_linkage(&group_vals, tight);
        let mut sub_clusters = Vec::with_capacity(subs.len());
        for sub in &subs {
            let vals: Vec<C<T>> = sub.iter().map(|&i| group_vals[i]).collect();
            let mu = centroid(&vals);
            let mut basis = kernel_below(&shifted(m, mu), kernel_cut);
            // keep the directions with the smallest singular values
            if basis.len() > vals.len() {
                basis.drain(0..basis.len() - vals.len());
            }
            sub_clusters.push(EigenCluster {
                eigenvalue: mu,
                algebraic_multiplicity: vals.len(),
                eigenspace: basis,
            });
        }
        let spanned: usize = sub_clusters.iter().map(|s| s.eigenspace.len()).sum();
        let independent = spanned == group.len() && {
            let union: Vec<Vec<C<T>>> = sub_clusters
                .iter()
                .flat_map(|s| s.eigenspace.iter().cloned())
                .collect();
            let sv = svd(&DenseMatrix::from_columns(n, &union)).singular_values;
            sv.last().copied().unwrap_or_else(T::zero) > tol.defect_rtol
                && pairs_separated(&sub_clusters, n, sc, tol)
        };
        if independent {
            clusters.extend(sub_clusters);
            continue;
        }
        let mu = centroid(&group_vals);
        let mut basis = kernel_below(&shifted(m, mu), kernel_cut);
        if basis.len() > group.len() {
            basis.drain(0..basis.len() - group.len());
        }
        if basis.is_empty() {
            let union: Vec<Vec<C<T>>> = sub_clusters
                .iter()
                .flat_map(|s| s.eigenspace.iter().cloned())
                .collect();
            basis = if union.is_empty() {
                Vec::new()
            } else {
                column_space(&DenseMatrix::from_columns(n, &union), tol.defect_rtol)
            };
            if basis.len() >= group.len() {
                basis.truncate(group.len() - 1);
            }
        }
        if basis.is_empty() {
            // closest direction to an eigenvector at the centroid
            let s = svd(&shifted(m, mu));
            basis.push(normalise_phase(s.v.column(n - 1)));
        }
        clusters.push(EigenCluster {
            eigenvalue: mu,
            algebraic_multiplicity: group.len(),
            eigenspace: basis,
        });
    }
    Ok(EigenStructure { clusters })
}

/// A Jordan pair split by a perturbation `δ` has eigenvalues `s` apart and
/// eigenvectors at angle `θ` with `s·θ ≈ δ`; distinct eigenvalues do not.
fn pairs_separated<T: Real>(
    subs: &[EigenCluster<T>],
    n: usize,
    sc: T,
    tol: &ToleranceContext<T>,
) -> bool {
    let cut = (T::lit(1e2) * tol.defect_rtol * tol.defect_rtol).max(T::lit(1e-2) * tol.rank_rtol);
    for (a, sa) in subs.iter().enumerate() {
        for sb in &subs[a + 1..] {
            let gap = (sa.eigenvalue - sb.eigenvalue).norm() / sc;
            let cols: Vec<Vec<C<T>>> = sa
                .eigenspace
                .iter()
                .chain(&sb.eigenspace)
                .cloned()
                .collect();
            let angle = svd(&DenseMatrix::from_columns(n, &cols))
                .singular_values
                .last()
                .copied()
                .unwrap_or_else(T::zero);
            if angle <= tol.defect_rtol || gap * angle <= cut {
                return false;
            }
        }
    }
    true
}

fn shifted<T: Real>(m: &DenseMatrix<T>, mu: C<T>) -> DenseMatrix<T> {
    let mut s = m.clone();
    for i in 0..m.n_rows() {
        s[(i, i)] = s[(i, i)] - mu;
    }
    s
}

fn centroid<T: Real>(vals: &[C<T>]) -> C<T> {
    let sum = vals.iter().fold(C::<T>::zero(), |acc, &z| acc + z);
    sum / c(T::lit(vals.len() as f64))
}

/// Orthonormal basis for the span of the columns with singular value above
/// `threshold` (absolute).
pub(crate) fn column_space<T: Real>(a: &DenseMatrix<T>, threshold: T) -> Vec<Vec<C<T>>> {
    let s = svd(a);
    s.singular_values
        .iter()
        .enumerate()
        .take_while(|(_, &x)| x > threshold)
        .map(|(j, _)| normalise_phase(s.u.column(j)))
        .collect()
}

/// Unit vectors completing the orthonormal set `span` to a basis of `C^n`.
///
/// Chosen greedily by largest residual after projecting out everything
/// picked so far, lowest index on near-ties.
pub(crate) fn complete_with_unit_vectors<T: Real>(n: usize, span: &[Vec<C<T>>]) -> Vec<usize> {
    let mut ortho: Vec<Vec<C<T>>> = span.to_vec();
    let mut chosen = Vec::with_capacity(n.saturating_sub(span.len()));
    for _ in span.len()..n {
        let mut best: Option<(usize, T, Vec<C<T>>)> = None;
        for i in 0..n {
            let mut res = vec![C::zero(); n];
            res[i] = c(T::one());
            for q in &ortho {
                let proj = vec_dot(q, &res);
                for (x, &qv) in res.iter_mut().zip(q) {
                    *x = *x - qv * proj;
                }
            }
            let norm = vec_norm(&res);
            let better = match &best {
                None => true,
                Some((_, b, _)) => norm > *b * (T::one() + T::lit(64.0) * T::epsilon()),
            };
            if better {
                best = Some((i, norm, res));
            }
        }
        let (i, norm, res) = best.expect("n > 0");
        ortho.push(res.into_iter().map(|z| z / c(norm)).collect());
        chosen.push(i);
    }
    chosen
}

/// Connected components of the graph joining points closer than `radius`.
/// Components are ordered by their smallest index; members ascend.
pub(crate) fn single_linkage<T: Real>(points: &[C<T>], radius: T) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if abs(points[i] - points[j]) <= radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_slot: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        match root_slot[r] {
            Some(slot) => groups[slot].push(i),
            None => {
                root_slot[r] = Some(groups.len());
                groups.push(vec![i]);
            }
        }
    }
    groups
}

/// Outcome of a diagonalisability test.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagonalisability<T> {
    Yes,
    /// The first defective cluster, in eigenvalue order.
    No {
        defective: EigenCluster<T>,
    },
}

impl<T> Diagonalisability<T> {
    pub fn is_yes(&self) -> bool {
        matches!(self, Diagonalisability::Yes)
    }
}

pub fn is_diagonalisable<T: Real>(
    m: &DenseMatrix<T>,
    tol: &ToleranceContext<T>,
) -> Result<Diagonalisability<T>, KernelError> {
    let es = eigen_structure(m, tol)?;
    Ok(match es.clusters.into_iter().find(|c| !c.is_semisimple()) {
        None => Diagonalisability::Yes,
        Some(defective) => Diagonalisability::No { defective },
    })
}

/// `‖AB − BA‖_F`.
pub fn commutator_norm<T: Real>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<T, KernelError> {
    if !a.is_square() || a.shape() != b.shape() {
        return Err(KernelError::DimensionMismatch {
            expected: format!("{}x{}", a.n_rows(), a.n_rows()),
            found: format!("{}x{}", b.n_rows(), b.n_cols()),
        });
    }
    Ok((&(a * b) - &(b * a)).frobenius_norm())
}

/// Whether the commutator is below `commute_rtol · ‖A‖_F · ‖B‖_F`.
pub fn commutes<T: Real>(
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
    tol: &ToleranceContext<T>,
) -> Result<bool, KernelError> {
    let cn = commutator_norm(a, b)?;
    Ok(cn <= tol.commute_rtol * a.frobenius_norm() * b.frobenius_norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = DenseMatrix<f64>;

    fn tol() -> ToleranceContext<f64> {
        ToleranceContext::default()
    }

    fn parallel(u: &[C<f64>], v: &[f64]) -> f64 {
        // sine of the angle between u and v
        let vn: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let un: f64 = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let dot = u
            .iter()
            .zip(v)
            .fold(C::new(0.0, 0.0), |acc, (z, &x)| acc + z.conj() * x);
        (1.0 - (dot.norm() / (un * vn)).powi(2)).max(0.0).sqrt()
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&M::identity(2), &tol()), 2);
        assert_eq!(
            rank(&M::from_real_rows(&[&[0.0, 0.5], &[0.5, 1.0]]), &tol()),
            2
        );
        assert_eq!(rank(&M::zeros(3, 3), &tol()), 0);
    }

    #[test]
    fn inverse_examples() {
        let m1 = M::from_real_rows(&[&[1.0, 0.5], &[0.5, 0.0]]);
        let inv = inverse(&m1, &tol()).unwrap();
        let want = M::from_real_rows(&[&[0.0, 2.0], &[2.0, -4.0]]);
        assert!((&inv - &want).max_abs() < 1e-12);
        assert_eq!(inverse(&M::identity(3), &tol()).unwrap(), M::identity(3));
        let t1 = M::from_real_rows(&[
            &[1.0, 0.5, 1.0 / 6.0],
            &[0.5, 1.0 / 6.0, 0.0],
            &[1.0 / 6.0, 0.0, 0.0],
        ]);
        let want = M::from_real_rows(&[&[0.0, 0.0, 6.0], &[0.0, 6.0, -18.0], &[6.0, -18.0, 18.0]]);
        assert!((&inverse(&t1, &tol()).unwrap() - &want).max_abs() < 1e-11);
        assert!(matches!(
            inverse(&M::from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]), &tol()),
            Err(KernelError::Singular { rank: 1, n: 2 })
        ));
    }

    #[test]
    fn kernel_examples() {
        assert!(kernel_basis(&M::identity(2), &tol()).is_empty());
        let block = M::identity(2).direct_sum(&M::zeros(1, 1));
        let k = kernel_basis(&block, &tol());
        assert_eq!(k.len(), 1);
        assert!(parallel(&k[0], &[0.0, 0.0, 1.0]) < 1e-14);
        let k = kernel_basis(&M::from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]), &tol());
        assert_eq!(k.len(), 1);
        let s = 0.5f64.sqrt();
        assert!((k[0][0].re - s).abs() < 1e-14 && (k[0][1].re + s).abs() < 1e-14);
    }

    #[test]
    fn mendel_product_is_defective() {
        let n = M::from_real_rows(&[&[1.0, 2.0], &[-2.0, -3.0]]);
        let es = eigen_structure(&n, &tol()).unwrap();
        assert_eq!(es.clusters.len(), 1);
        let cl = &es.clusters[0];
        assert!((cl.eigenvalue - C::new(-1.0, 0.0)).norm() < 1e-8);
        assert_eq!(cl.algebraic_multiplicity, 2);
        assert_eq!(cl.geometric_multiplicity(), 1);
        match is_diagonalisable(&n, &tol()).unwrap() {
            Diagonalisability::No { defective } => {
                assert!((defective.eigenvalue.re + 1.0).abs() < 1e-8)
            }
            Diagonalisability::Yes => panic!("Jordan block reported diagonalisable"),
        }
    }

    #[test]
    fn repeated_semisimple_eigenvalue() {
        let d = M::from_real_rows(&[&[3.0, 0.0, 0.0], &[0.0, 3.0, 0.0], &[0.0, 0.0, 5.0]]);
        let es = eigen_structure(&d, &tol()).unwrap();
        assert_eq!(es.clusters.len(), 2);
        assert!((es.clusters[0].eigenvalue.re - 3.0).abs() < 1e-12);
        assert_eq!(
            (
                es.clusters[0].algebraic_multiplicity,
                es.clusters[0].geometric_multiplicity()
            ),
            (2, 2)
        );
        assert!((es.clusters[1].eigenvalue.re - 5.0).abs() < 1e-12);
        assert_eq!(
            (
                es.clusters[1].algebraic_multiplicity,
                es.clusters[1].geometric_multiplicity()
            ),
            (1, 1)
        );
    }

    #[test]
    fn tetraploid_product_single_jordan_block() {
        let n = M::from_real_rows(&[&[4.0, 3.0, 0.0], &[-9.0, -5.0, 3.0], &[3.0, 0.0, -5.0]]);
        let es = eigen_structure(&n, &tol()).unwrap();
        assert_eq!(es.clusters.len(), 1);
        let cl = &es.clusters[0];
        assert!((cl.eigenvalue - C::new(-2.0, 0.0)).norm() < 1e-8);
        assert_eq!(cl.algebraic_multiplicity, 3);
        assert_eq!(cl.geometric_multiplicity(), 1);
        assert!(parallel(&cl.eigenspace[0], &[1.0, -2.0, 1.0]) < 1e-6);
    }

    #[test]
    fn diagonalisability_examples() {
        assert!(
            is_diagonalisable(&M::from_real_rows(&[&[2.0, 0.0], &[0.0, -7.0]]), &tol())
                .unwrap()
                .is_yes()
        );
        // M1^{-1} M2 of the deformed Mendelian algebra at ε = 1/2
        assert!(
            is_diagonalisable(&M::from_real_rows(&[&[1.0, 2.0], &[0.0, -1.0]]), &tol())
                .unwrap()
                .is_yes()
        );
    }

    #[test]
    fn commutator_examples() {
        let x = M::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let z = M::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]);
        assert_eq!(commutator_norm(&M::identity(2), &x).unwrap(), 0.0);
        assert!((commutator_norm(&x, &z).unwrap() - 8f64.sqrt()).abs() < 1e-14);
        assert!(commutator_norm(&x, &M::identity(3)).is_err());
        let a = M::from_real_rows(&[&[4.0, 3.0, 0.0], &[-9.0, -5.0, 3.0], &[3.0, 0.0, -5.0]]);
        let b = M::from_real_rows(&[&[1.0, 3.0, 6.0], &[-3.0, -8.0, -15.0], &[3.0, 6.0, 10.0]]);
        assert_eq!(commutator_norm(&a, &b).unwrap(), 0.0);
        let want = M::from_real_rows(&[
            &[-5.0, -12.0, -21.0],
            &[15.0, 31.0, 51.0],
            &[-12.0, -21.0, -32.0],
        ]);
        assert_eq!(&a * &b, want);
    }

    #[test]
    fn single_linkage_chains() {
        let pts: Vec<C<f64>> = [0.0, 0.5, 1.0, 5.0]
            .iter()
            .map(|&x| C::new(x, 0.0))
            .collect();
        assert_eq!(single_linkage(&pts, 0.6), vec![vec![0, 1, 2], vec![3]]);
    }
}
