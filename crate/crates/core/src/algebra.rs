//! Commutative algebras given by structure constants `e_i e_j = Σ_k m_ijk e_k`.
//!
//! Only entries with `i ≤ j` are stored, so a non-commutative table cannot
//! be represented. Indices are 0-based in this API.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::error::AlgebraError;
use crate::matrix::{DenseMatrix, Field};
use crate::numkernel::{complete_with_unit_vectors, inverse, kernel_basis};
use crate::scalar::{abs, Real, C};
use crate::tol::ToleranceContext;

/// Structure-constant key `(i, j, k)` with `i ≤ j`.
pub type Index3 = (usize, usize, usize);

/// Unvalidated input to [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct UncheckedSpec<T> {
    pub dim: usize,
    pub field: Field,
    pub entries: Vec<(Index3, C<T>)>,
    pub labels: Option<Vec<String>>,
}

/// A validated, canonical algebra: exact zeros dropped, `-0.0` normalised.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraSpec<T> {
    dim: usize,
    field: Field,
    constants: BTreeMap<Index3, C<T>>,
    labels: Option<Vec<String>>,
}

/// The stack `M_1 … M_n` with `(M_k)_ij = m_ijk`.
#[derive(Debug, Clone, PartialEq)]
pub struct MStructureSet<T> {
    pub matrices: Vec<DenseMatrix<T>>,
}

impl<T: Real> MStructureSet<T> {
    pub fn dim(&self) -> usize {
        self.matrices.first().map_or(0, |m| m.n_rows())
    }

    /// `[M_1; M_2; …; M_n]`, an `n² x n` matrix whose kernel is the annihilator.
    pub fn stacked(&self) -> DenseMatrix<T> {
        DenseMatrix::vstack(&self.matrices)
    }

    /// Largest Frobenius norm in the stack, at least 1.
    pub fn scale(&self) -> T {
        self.matrices
            .iter()
            .map(|m| m.frobenius_norm())
            .fold(T::one(), T::max)
    }
}

/// Basis placing an annihilator basis last.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedBasis<T> {
    /// Columns are the new basis vectors in old coordinates.
    pub transform: DenseMatrix<T>,
    pub ann_dim: usize,
    /// Leading `r x r` blocks `M̃_1 … M̃_n`, `r = n - ann_dim`.
    pub reduced_blocks: Vec<DenseMatrix<T>>,
    /// The algebra re-expressed in the adapted basis.
    pub adapted: AlgebraSpec<T>,
    /// Largest entry outside the leading blocks (zero in exact arithmetic).
    pub block_residual: T,
}

pub fn validate<T: Real>(raw: UncheckedSpec<T>) -> Result<AlgebraSpec<T>, AlgebraError> {
    let n = raw.dim;
    if n == 0 {
        return Err(AlgebraError::MalformedSpec {
            reason: "dimension must be at least 1".into(),
        });
    }
    if let Some(labels) = &raw.labels {
        if labels.len() != n {
            return Err(AlgebraError::MalformedSpec {
                reason: format!("{} labels given for dimension {}", labels.len(), n),
            });
        }
    }
    let mut constants = BTreeMap::new();
    for ((i, j, k), v) in raw.entries {
        let at = || format!("entry ({}, {}, {})", i + 1, j + 1, k + 1);
        if i >= n || j >= n || k >= n {
            return Err(AlgebraError::MalformedSpec {
                reason: format!("{}: index out of range 1..={}", at(), n),
            });
        }
        if i > j {
            return Err(AlgebraError::MalformedSpec {
                reason: format!("{}: store i ≤ j", at()),
            });
        }
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(AlgebraError::MalformedSpec {
                reason: format!("{}: non-finite value", at()),
            });
        }
        if raw.field == Field::Real && v.im != T::zero() {
            return Err(AlgebraError::MalformedSpec {
                reason: format!("{}: complex value in a real algebra", at()),
            });
        }
        if constants.contains_key(&(i, j, k)) {
            return Err(AlgebraError::MalformedSpec {
                reason: format!("{}: duplicate", at()),
            });
        }
        let v = canonical(v);
        if !v.is_zero() {
            constants.insert((i, j, k), v);
        }
    }
    Ok(AlgebraSpec {
        dim: n,
        field: raw.field,
        constants,
        labels: raw.labels,
    })
}

fn canonical<T: Real>(v: C<T>) -> C<T> {
    // adding +0 turns -0 into +0 and leaves everything else untouched
    C::new(v.re + T::zero(), v.im + T::zero())
}

impl<T: Real> AlgebraSpec<T> {
    /// The zero algebra of dimension `dim`.
    pub fn zero(dim: usize, field: Field) -> Result<Self, AlgebraError> {
        validate(UncheckedSpec {
            dim,
            field,
            entries: Vec::new(),
            labels: None,
        })
    }

    /// Builds from a real table with 1-based `(i, j, k, value)` rows, as
    /// multiplication tables are usually written.
    pub fn from_real_table(
        dim: usize,
        table: &[(usize, usize, usize, f64)],
    ) -> Result<Self, AlgebraError> {
        let entries = table
            .iter()
            .map(|&(i, j, k, v)| {
                if i == 0 || j == 0 || k == 0 {
                    return Err(AlgebraError::MalformedSpec {
                        reason: "table indices are 1-based".into(),
                    });
                }
                Ok(((i - 1, j - 1, k - 1), C::new(T::lit(v), T::zero())))
            })
            .collect::<Result<Vec<_>, _>>()?;
        validate(UncheckedSpec {
            dim,
            field: Field::Real,
            entries,
            labels: None,
        })
    }

    /// Builds from a full stack of symmetric matrices (entries are read from
    /// the upper triangle).
    pub fn from_matrices(field: Field, matrices: &[DenseMatrix<T>]) -> Result<Self, AlgebraError> {
        let n = matrices.len();
        if matrices.iter().any(|m| m.shape() != (n, n)) {
            return Err(AlgebraError::MalformedSpec {
                reason: format!("expected {n} matrices of size {n}x{n}"),
            });
        }
        let mut entries = Vec::new();
        for (k, m) in matrices.iter().enumerate() {
            for i in 0..n {
                for j in i..n {
                    entries.push(((i, j, k), m[(i, j)]));
                }
            }
        }
        validate(UncheckedSpec {
            dim: n,
            field,
            entries,
            labels: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn with_labels(mut self, labels: Option<Vec<String>>) -> Result<Self, AlgebraError> {
        if let Some(l) = &labels {
            if l.len() != self.dim {
                return Err(AlgebraError::MalformedSpec {
                    reason: format!("{} labels given for dimension {}", l.len(), self.dim),
                });
            }
        }
        self.labels = labels;
        Ok(self)
    }

    /// `m_ijk`, symmetric in `i, j`.
    pub fn constant(&self, i: usize, j: usize, k: usize) -> C<T> {
        let key = if i <= j { (i, j, k) } else { (j, i, k) };
        self.constants.get(&key).copied().unwrap_or_else(C::zero)
    }

    /// Stored non-zero constants in lexicographic `(i, j, k)` order.
    pub fn constants(&self) -> impl Iterator<Item = (Index3, C<T>)> + '_ {
        self.constants.iter().map(|(&key, &v)| (key, v))
    }

    pub fn n_constants(&self) -> usize {
        self.constants.len()
    }

    /// Frobenius norm of the full (symmetric) structure tensor.
    pub fn tensor_norm(&self) -> T {
        self.constants
            .iter()
            .map(|(&(i, j, _), v)| {
                if i == j {
                    v.norm_sqr()
                } else {
                    v.norm_sqr() + v.norm_sqr()
                }
            })
            .sum::<T>()
            .sqrt()
    }

    pub fn m_structure_matrices(&self) -> MStructureSet<T> {
        let n = self.dim;
        let mut matrices = vec![DenseMatrix::zeros(n, n); n];
        for (&(i, j, k), &v) in &self.constants {
            matrices[k][(i, j)] = v;
            matrices[k][(j, i)] = v;
        }
        MStructureSet { matrices }
    }

    /// Product of two coefficient vectors, read directly off the table.
    pub fn multiply(&self, a: &[C<T>], b: &[C<T>]) -> Result<Vec<C<T>>, AlgebraError> {
        for v in [a, b] {
            if v.len() != self.dim {
                return Err(AlgebraError::DimensionMismatch {
                    expected: self.dim,
                    found: v.len(),
                });
            }
        }
        let mut out = vec![C::zero(); self.dim];
        for (&(i, j, k), &m) in &self.constants {
            let w = if i == j {
                a[i] * b[i]
            } else {
                a[i] * b[j] + a[j] * b[i]
            };
            out[k] = out[k] + w * m;
        }
        Ok(out)
    }

    /// Re-express the algebra in the basis `e*_i = Σ_k p_ki e_k`.
    ///
    /// New constants are `M*_k = Σ_j (P⁻¹)_kj · PᵀM_jP`, symmetrised by
    /// averaging, with round-off below `8ε` of the largest entry flushed.
    pub fn change_basis(
        &self,
        p: &DenseMatrix<T>,
        tol: &ToleranceContext<T>,
    ) -> Result<Self, AlgebraError> {
        let n = self.dim;
        if p.shape() != (n, n) {
            return Err(AlgebraError::DimensionMismatch {
                expected: n,
                found: p.n_rows(),
            });
        }
        let p_inv = inverse(p, tol).map_err(|_| AlgebraError::Singular)?;
        let congruent: Vec<DenseMatrix<T>> = self
            .m_structure_matrices()
            .matrices
            .iter()
            .map(|m| p.congruence(m))
            .collect();
        let mut new = vec![DenseMatrix::<T>::zeros(n, n); n];
        for (k, target) in new.iter_mut().enumerate() {
            for (j, cj) in congruent.iter().enumerate() {
                let w = p_inv[(k, j)];
                if w.is_zero() {
                    continue;
                }
                *target = &*target + &cj.scale(w);
            }
        }
        let half = C::new(T::lit(0.5), T::zero());
        let biggest = new.iter().map(|m| m.max_abs()).fold(T::zero(), T::max);
        let flush = T::lit(8.0) * T::epsilon() * biggest;
        let field = if self.field == Field::Real && p.field_tag() == Field::Real {
            Field::Real
        } else {
            Field::Complex
        };
        let mut entries = Vec::new();
        for (k, m) in new.iter().enumerate() {
            for i in 0..n {
                for j in i..n {
                    let v = (m[(i, j)] + m[(j, i)]) * half;
                    let re = if v.re.abs() <= flush { T::zero() } else { v.re };
                    let im = if v.im.abs() <= flush || field == Field::Real {
                        T::zero()
                    } else {
                        v.im
                    };
                    entries.push(((i, j, k), C::new(re, im)));
                }
            }
        }
        validate(UncheckedSpec {
            dim: n,
            field,
            entries,
            labels: None,
        })
    }

    /// Basis of `Ann(A) = ∩_k ker M_k`, from one kernel computation on the
    /// stacked `n² x n` matrix.
    pub fn annihilator_basis(&self, tol: &ToleranceContext<T>) -> Vec<Vec<C<T>>> {
        kernel_basis(&self.m_structure_matrices().stacked(), tol)
    }

    /// Extend an annihilator basis to a basis of the algebra, annihilator last.
    ///
    /// Leading vectors are standard basis vectors chosen greedily by largest
    /// residual after projecting out the span picked so far (lowest index on
    /// ties).
    pub fn adapt_basis_to_annihilator(
        &self,
        tol: &ToleranceContext<T>,
    ) -> Result<AdaptedBasis<T>, AlgebraError> {
        let n = self.dim;
        let ann = self.annihilator_basis(tol);
        if ann.is_empty() {
            return Err(AlgebraError::EmptyAnnihilator);
        }
        let ann_dim = ann.len();
        let r = n - ann_dim;
        let leading: Vec<Vec<C<T>>> = complete_with_unit_vectors(n, &ann)
            .into_iter()
            .map(|i| unit(n, i))
            .collect();
        let columns: Vec<Vec<C<T>>> = leading.into_iter().chain(ann).collect();
        let transform = DenseMatrix::from_columns(n, &columns);
        let adapted = self.change_basis(&transform, tol)?;
        let full = adapted.m_structure_matrices().matrices;
        let mut block_residual = T::zero();
        for m in &full {
            for i in 0..n {
                for j in 0..n {
                    if i >= r || j >= r {
                        block_residual = block_residual.max(abs(m[(i, j)]));
                    }
                }
            }
        }
        let reduced_blocks = full.iter().map(|m| m.submatrix(0..r, 0..r)).collect();
        Ok(AdaptedBasis {
            transform,
            ann_dim,
            reduced_blocks,
            adapted,
            block_residual,
        })
    }

    /// `A ⊕ B`: basis of `A` first, products across the summands vanish.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let shift = self.dim;
        let mut constants = self.constants.clone();
        for (&(i, j, k), &v) in &other.constants {
            constants.insert((i + shift, j + shift, k + shift), v);
        }
        let field = if self.field == Field::Real && other.field == Field::Real {
            Field::Real
        } else {
            Field::Complex
        };
        Self {
            dim: self.dim + other.dim,
            field,
            constants,
            labels: None,
        }
    }

    /// Same constants over ℂ.
    pub fn complexify(&self) -> Result<Self, AlgebraError> {
        if self.field == Field::Complex {
            return Err(AlgebraError::AlreadyComplex);
        }
        Ok(Self {
            field: Field::Complex,
            ..self.clone()
        })
    }

    /// `A / Ann(A)` in the adapted basis: its structure matrices are the
    /// leading blocks `M̃_1 … M̃_r`.
    pub fn quotient_by_annihilator(&self, tol: &ToleranceContext<T>) -> Result<Self, AlgebraError> {
        let adapted = self.adapt_basis_to_annihilator(tol)?;
        let r = self.dim - adapted.ann_dim;
        if r == 0 {
            return Err(AlgebraError::EmptyQuotient);
        }
        Self::from_matrices(self.field, &adapted.reduced_blocks[..r])
    }
}

fn unit<T: Real>(n: usize, i: usize) -> Vec<C<T>> {
    let mut v = vec![C::zero(); n];
    v[i] = C::new(T::one(), T::zero());
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    type A = AlgebraSpec<f64>;
    type M = DenseMatrix<f64>;

    fn tol() -> ToleranceContext<f64> {
        ToleranceContext::default()
    }

    fn simple2d() -> A {
        A::from_real_table(2, &[(1, 1, 1, 1.0), (1, 2, 2, 1.0), (2, 2, 1, 1.0)]).unwrap()
    }

    fn nota2() -> A {
        A::from_real_table(
            3,
            &[
                (1, 1, 1, 1.0),
                (1, 1, 3, 1.0),
                (2, 2, 1, 1.0),
                (2, 2, 3, -1.0),
                (1, 2, 2, 1.0),
            ],
        )
        .unwrap()
    }

    fn cv(v: &[f64]) -> Vec<C<f64>> {
        v.iter().map(|&x| C::new(x, 0.0)).collect()
    }

    #[test]
    fn validate_rejects_bad_entries() {
        let bad_index = UncheckedSpec {
            dim: 2,
            field: Field::Real,
            entries: vec![((0, 0, 2), C::new(1.0, 0.0))],
            labels: None,
        };
        assert!(matches!(
            validate(bad_index),
            Err(AlgebraError::MalformedSpec { .. })
        ));
        let nan = UncheckedSpec {
            dim: 2,
            field: Field::Real,
            entries: vec![((0, 0, 0), C::new(f64::NAN, 0.0))],
            labels: None,
        };
        assert!(matches!(
            validate(nan),
            Err(AlgebraError::MalformedSpec { .. })
        ));
        let lower = UncheckedSpec {
            dim: 2,
            field: Field::Real,
            entries: vec![((1, 0, 0), C::new(0.5, 0.0))],
            labels: None,
        };
        let err = validate(lower).unwrap_err().to_string();
        assert!(err.contains("i ≤ j"), "{err}");
        assert!(AlgebraSpec::<f64>::zero(0, Field::Real).is_err());
        let complex_in_real = UncheckedSpec {
            dim: 1,
            field: Field::Real,
            entries: vec![((0, 0, 0), C::new(0.0, 1.0))],
            labels: None,
        };
        assert!(validate(complex_in_real).is_err());
        assert_eq!(simple2d().n_constants(), 3);
    }

    #[test]
    fn canonical_form_drops_zeros() {
        let spec =
            A::from_real_table(2, &[(1, 1, 1, 0.0), (1, 2, 1, -0.0), (2, 2, 2, 3.0)]).unwrap();
        assert_eq!(spec.n_constants(), 1);
    }

    #[test]
    fn structure_matrices_of_simple2d_and_mendel() {
        let ms = simple2d().m_structure_matrices().matrices;
        assert_eq!(ms[0], M::identity(2));
        assert_eq!(ms[1], M::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]));
        let mendel = A::from_real_table(
            2,
            &[
                (1, 1, 1, 1.0),
                (1, 2, 1, 0.5),
                (1, 2, 2, 0.5),
                (2, 2, 2, 1.0),
            ],
        )
        .unwrap();
        let ms = mendel.m_structure_matrices().matrices;
        assert_eq!(ms[0], M::from_real_rows(&[&[1.0, 0.5], &[0.5, 0.0]]));
        assert_eq!(ms[1], M::from_real_rows(&[&[0.0, 0.5], &[0.5, 1.0]]));
        let zero = A::zero(3, Field::Real).unwrap().m_structure_matrices();
        assert!(zero.matrices.iter().all(|m| *m == M::zeros(3, 3)));
    }

    #[test]
    fn multiply_simple2d() {
        let spec = simple2d();
        let (al, be, ga, de) = (2.0, -3.0, 0.5, 7.0);
        let prod = spec.multiply(&cv(&[al, be]), &cv(&[ga, de])).unwrap();
        assert_eq!(prod, cv(&[al * ga + be * de, al * de + be * ga]));
        assert_eq!(
            spec.multiply(&cv(&[0.0, 1.0]), &cv(&[0.0, 1.0])).unwrap(),
            cv(&[1.0, 0.0])
        );
        assert_eq!(
            spec.multiply(&cv(&[0.0, 0.0]), &cv(&[4.0, 1.0])).unwrap(),
            cv(&[0.0, 0.0])
        );
        assert!(spec.multiply(&cv(&[1.0]), &cv(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn change_basis_examples() {
        let spec = simple2d();
        assert_eq!(spec.change_basis(&M::identity(2), &tol()).unwrap(), spec);
        let p = M::from_real_rows(&[&[1.0, 1.0], &[1.0, -1.0]]);
        let natural = spec.change_basis(&p, &tol()).unwrap();
        for m in natural.m_structure_matrices().matrices {
            assert_eq!(m.off_diagonal_norm(), 0.0);
        }
        let p_inv = inverse(&p, &tol()).unwrap();
        let back = natural.change_basis(&p_inv, &tol()).unwrap();
        for ((ka, va), (kb, vb)) in back.constants().zip(spec.constants()) {
            assert_eq!(ka, kb);
            assert!((va - vb).norm() < 1e-12);
        }
        assert_eq!(
            spec.change_basis(&M::zeros(2, 2), &tol()),
            Err(AlgebraError::Singular)
        );
    }

    #[test]
    fn annihilator_examples() {
        let ann = nota2().annihilator_basis(&tol());
        assert_eq!(ann, vec![cv(&[0.0, 0.0, 1.0])]);
        assert!(simple2d().annihilator_basis(&tol()).is_empty());
        assert_eq!(
            A::zero(2, Field::Real)
                .unwrap()
                .annihilator_basis(&tol())
                .len(),
            2
        );
    }

    #[test]
    fn adapted_basis_of_nota2() {
        let ad = nota2().adapt_basis_to_annihilator(&tol()).unwrap();
        assert_eq!(ad.ann_dim, 1);
        assert_eq!(ad.transform, M::identity(3));
        assert_eq!(ad.reduced_blocks[0], M::identity(2));
        assert_eq!(
            ad.reduced_blocks[1],
            M::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
        );
        assert_eq!(
            ad.reduced_blocks[2],
            M::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]])
        );
        assert_eq!(ad.block_residual, 0.0);

        let zero = A::zero(2, Field::Real)
            .unwrap()
            .adapt_basis_to_annihilator(&tol())
            .unwrap();
        assert_eq!(zero.ann_dim, 2);
        assert!(zero.reduced_blocks.iter().all(|b| b.shape() == (0, 0)));
        assert_eq!(
            simple2d().adapt_basis_to_annihilator(&tol()),
            Err(AlgebraError::EmptyAnnihilator)
        );
    }

    #[test]
    fn complexify_keeps_constants() {
        let c = simple2d().complexify().unwrap();
        assert_eq!(c.field(), Field::Complex);
        assert_eq!(c.m_structure_matrices(), simple2d().m_structure_matrices());
        assert_eq!(c.complexify(), Err(AlgebraError::AlreadyComplex));
        let z = A::zero(2, Field::Real).unwrap().complexify().unwrap();
        assert_eq!(z, A::zero(2, Field::Complex).unwrap());
    }

    #[test]
    fn direct_sum_offsets_indices() {
        let s = simple2d().direct_sum(&simple2d());
        assert_eq!(s.dim(), 4);
        assert_eq!(s.constant(2, 3, 3), C::new(1.0, 0.0));
        assert_eq!(s.constant(0, 2, 0), C::new(0.0, 0.0));
        assert_eq!(s.n_constants(), 6);
    }

    #[test]
    fn quotient_examples() {
        assert_eq!(nota2().quotient_by_annihilator(&tol()).unwrap(), simple2d());
        assert_eq!(
            A::zero(2, Field::Real)
                .unwrap()
                .quotient_by_annihilator(&tol()),
            Err(AlgebraError::EmptyQuotient)
        );
        assert_eq!(
            simple2d().quotient_by_annihilator(&tol()),
            Err(AlgebraError::EmptyAnnihilator)
        );
    }
}
