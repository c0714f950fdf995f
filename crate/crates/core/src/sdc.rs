//! Simultaneous diagonalisation by congruence: find one invertible `P` with
//! every `PᵀM_kP` diagonal, or a witness that none exists.
//!
//! With `M(λ₀)` invertible the family is SDC iff the `M(λ₀)⁻¹M_k` are SDS.
//! When the maximum pencil rank `r` is below `n`, the common kernel must
//! have dimension `n - r` and the problem reduces to the leading `r x r`
//! blocks in a basis that puts that kernel last.

use num_traits::Zero;

use crate::error::{KernelError, SolverError};
use crate::matrix::DenseMatrix;
use crate::numkernel::{complete_with_unit_vectors, inverse, kernel_basis, svd, EigenCluster};
use crate::pencil::{LinearPencil, PencilRankWitness};
use crate::scalar::{abs, c, Real, C};
use crate::sds::{are_sds, CommonEigenspace, SdsResult, SdsWitness};
use crate::tol::{scale, ToleranceContext};

/// Why a family is not SDC. Matrix indices are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Refutation<T> {
    /// `M(λ₀)⁻¹M_index` has the defective eigenvalue in `cluster`.
    NonDiagonalisable {
        index: usize,
        cluster: EigenCluster<T>,
    },
    /// `M(λ₀)⁻¹M_i` and `M(λ₀)⁻¹M_j` do not commute.
    NonCommuting { i: usize, j: usize, norm: T },
    /// The common kernel does not have dimension `n - r0`.
    KernelDimensionMismatch {
        common_kernel_dim: usize,
        expected: usize,
    },
    /// No invertible pencil was found among the canonical directions and
    /// `trials` random ones.
    NoFullRankPencil {
        trials: usize,
        seed: u64,
        reduced_dim: usize,
        r0: usize,
    },
}

impl<T> Refutation<T> {
    pub fn kind(&self) -> &'static str {
        match self {
            Refutation::NonDiagonalisable { .. } => "NonDiagonalisable",
            Refutation::NonCommuting { .. } => "NonCommuting",
            Refutation::KernelDimensionMismatch { .. } => "KernelDimensionMismatch",
            Refutation::NoFullRankPencil { .. } => "NoFullRankPencil",
        }
    }
}

impl<T> From<SdsWitness<T>> for Refutation<T> {
    fn from(w: SdsWitness<T>) -> Self {
        match w {
            SdsWitness::NonDiagonalisable { index, cluster } => {
                Refutation::NonDiagonalisable { index, cluster }
            }
            SdsWitness::NonCommuting { i, j, norm } => Refutation::NonCommuting { i, j, norm },
        }
    }
}

/// `WᵀGW = diag(signature)` for a nonsingular complex symmetric `G`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramFactor<T> {
    pub transform: DenseMatrix<T>,
    /// All ones in complex mode, `±1` in real mode.
    pub signature: Vec<T>,
    /// `‖W⁻ᵀ S W⁻¹ − G‖ / max(1, ‖G‖)`.
    pub residual: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Congruence<T> {
    pub p: DenseMatrix<T>,
    /// Diagonal of `PᵀM_kP`, one vector per input matrix.
    pub diagonals: Vec<Vec<C<T>>>,
    /// Joint eigenspaces of the full-rank subproblem, in the coordinates of
    /// that subproblem.
    pub eigenspaces: Vec<CommonEigenspace<T>>,
    /// Whether `P` has exactly zero imaginary part.
    pub real: bool,
    /// Largest `‖offdiag(PᵀM_kP)‖ / (max(1,‖M_k‖) ‖P‖²)`.
    pub residual: T,
    pub gram_residual: T,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SdcResult<T> {
    Sdc(Congruence<T>),
    NotSdc(Refutation<T>),
}

impl<T> SdcResult<T> {
    pub fn is_sdc(&self) -> bool {
        matches!(self, SdcResult::Sdc(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CongruenceCheck<T> {
    Yes {
        residual: T,
    },
    /// `offender` has the largest relative off-diagonal mass.
    No {
        offender: usize,
        mass: T,
    },
    Singular,
}

impl<T> CongruenceCheck<T> {
    pub fn is_yes(&self) -> bool {
        matches!(self, CongruenceCheck::Yes { .. })
    }
}

fn check_family<T: Real>(ms: &[DenseMatrix<T>]) -> Result<usize, SolverError> {
    let n = ms.first().ok_or(SolverError::ShapeMismatch)?.n_rows();
    if ms.iter().any(|m| m.shape() != (n, n)) {
        return Err(SolverError::ShapeMismatch);
    }
    Ok(n)
}

/// Symmetric elimination with diagonal pivoting on `WᵀGW`.
///
/// When every remaining diagonal entry is small against the largest
/// off-diagonal `h_pq`, column `p` is replaced by `p ± q`, whichever gives
/// the larger new pivot; this pivot is at least `2|h_pq|`. In real mode the
/// pivots are scaled to `±1`, otherwise to `1` with the principal square root.
pub fn gram_factor<T: Real>(
    g: &DenseMatrix<T>,
    real: bool,
    tol: &ToleranceContext<T>,
) -> Result<GramFactor<T>, SolverError> {
    let d = g.n_rows();
    if !g.is_square() {
        return Err(SolverError::ShapeMismatch);
    }
    let mut h = g.clone();
    let mut w = DenseMatrix::<T>::identity(d);
    let breakdown = tol.rank_rtol * g.frobenius_norm() * T::lit(d.max(1) as f64);
    let half = T::lit(0.5);
    for s in 0..d {
        let (mut p, mut dmax) = (s, T::zero());
        for i in s..d {
            if abs(h[(i, i)]) > dmax {
                p = i;
                dmax = abs(h[(i, i)]);
            }
        }
        let (mut a, mut b, mut omax) = (s, s, T::zero());
        for i in s..d {
            for j in (i + 1)..d {
                if abs(h[(i, j)]) > omax {
                    a = i;
                    b = j;
                    omax = abs(h[(i, j)]);
                }
            }
        }
        if dmax < half * omax {
            let plus = abs(h[(a, a)] + c(T::lit(2.0)) * h[(a, b)] + h[(b, b)]);
            let minus = abs(h[(a, a)] - c(T::lit(2.0)) * h[(a, b)] + h[(b, b)]);
            let t = if plus >= minus { T::one() } else { -T::one() };
            add_column(&mut h, &mut w, a, b, c(t));
            p = a;
            dmax = abs(h[(a, a)]);
        }
        if dmax <= breakdown || dmax == T::zero() {
            return Err(SolverError::GramBreakdown);
        }
        swap(&mut h, &mut w, s, p);
        let pivot = h[(s, s)];
        for i in (s + 1)..d {
            let l = h[(i, s)] / pivot;
            if !l.is_zero() {
                add_column(&mut h, &mut w, i, s, -l);
            }
        }
    }
    let mut signature = Vec::with_capacity(d);
    for s in 0..d {
        let hs = h[(s, s)];
        let (f, sign) = if real {
            let sign = if hs.re < T::zero() {
                -T::one()
            } else {
                T::one()
            };
            (c(T::one() / abs(hs).sqrt()), sign)
        } else {
            (C::new(T::one(), T::zero()) / hs.sqrt(), T::one())
        };
        for i in 0..d {
            w[(i, s)] = w[(i, s)] * f;
        }
        signature.push(sign);
    }
    let residual = match inverse(&w, tol) {
        Ok(wi) => {
            let sig: Vec<C<T>> = signature.iter().map(|&x| c(x)).collect();
            let rebuilt = wi.congruence(&DenseMatrix::diagonal(&sig));
            (&rebuilt - g).frobenius_norm() / scale(g.frobenius_norm())
        }
        Err(_) => return Err(SolverError::GramBreakdown),
    };
    Ok(GramFactor {
        transform: w,
        signature,
        residual,
    })
}

/// Column `i += a · column j` on `W`, with the matching congruence on `H`.
fn add_column<T: Real>(
    h: &mut DenseMatrix<T>,
    w: &mut DenseMatrix<T>,
    i: usize,
    j: usize,
    a: C<T>,
) {
    let d = h.n_rows();
    for r in 0..d {
        w[(r, i)] = w[(r, i)] + a * w[(r, j)];
    }
    for r in 0..d {
        h[(r, i)] = h[(r, i)] + a * h[(r, j)];
    }
    for col in 0..d {
        h[(i, col)] = h[(i, col)] + a * h[(j, col)];
    }
}

fn swap<T: Real>(h: &mut DenseMatrix<T>, w: &mut DenseMatrix<T>, i: usize, j: usize) {
    if i == j {
        return;
    }
    let d = h.n_rows();
    for r in 0..d {
        let t = w[(r, i)];
        w[(r, i)] = w[(r, j)];
        w[(r, j)] = t;
        let t = h[(r, i)];
        h[(r, i)] = h[(r, j)];
        h[(r, j)] = t;
    }
    for col in 0..d {
        let t = h[(i, col)];
        h[(i, col)] = h[(j, col)];
        h[(j, col)] = t;
    }
}

/// Full-rank case: `witness.r0` must equal `n`.
///
/// With `realify`, real inputs whose joint eigenvalues are all real get a
/// real `P`: each eigenspace is replaced by a real basis of the span of its
/// real and imaginary parts and the Gram step runs in real mode. Otherwise,
/// or when that fails numerically, `P` is complex.
pub fn sdc_full_rank<T: Real>(
    ms: &[DenseMatrix<T>],
    witness: &PencilRankWitness<T>,
    tol: &ToleranceContext<T>,
    realify: bool,
) -> Result<SdcResult<T>, SolverError> {
    let n = check_family(ms)?;
    if witness.r0 != n {
        return Err(SolverError::WitnessRank {
            expected: n,
            found: witness.r0,
        });
    }
    let pencil = LinearPencil::new(ms.to_vec(), tol)?;
    let m0 = pencil.evaluate(&witness.lambda0)?;
    let m0_inv = inverse(&m0, tol).map_err(|e| match e {
        KernelError::Singular { rank, .. } => SolverError::WitnessRank {
            expected: n,
            found: rank,
        },
        other => SolverError::Kernel(other),
    })?;
    let ns: Vec<DenseMatrix<T>> = ms.iter().map(|m| &m0_inv * m).collect();
    // N_k inherits relative error κ(M0)·ε from the inverse
    let sv = svd(&m0).singular_values;
    let kappa = sv[0] / sv[n - 1];
    let ntol = tol.with_noise_floor(T::lit(1e2) * kappa * T::epsilon());
    let eigenspaces = match are_sds(&ns, &ntol)? {
        SdsResult::NotSds(w) => return Ok(SdcResult::NotSdc(w.into())),
        SdsResult::Sds { eigenspaces, .. } => eigenspaces,
    };

    let all_real = realify
        && m0.field_tag() == crate::matrix::Field::Real
        && ms
            .iter()
            .all(|m| m.field_tag() == crate::matrix::Field::Real)
        && eigenspaces
            .iter()
            .flat_map(|s| s.eigenvalues.iter())
            .all(|z| z.im.abs() <= ntol.eig_cluster_atol * scale(abs(*z)));
    let attempt = |real: bool| -> Result<(DenseMatrix<T>, T), SolverError> {
        let mut columns: Vec<Vec<C<T>>> = Vec::with_capacity(n);
        let mut gram_residual = T::zero();
        for space in &eigenspaces {
            let basis = if real {
                real_basis(n, &space.basis, tol).ok_or(SolverError::GramBreakdown)?
            } else {
                DenseMatrix::from_columns(n, &space.basis)
            };
            let g = basis.congruence(&m0);
            let gf = gram_factor(&g, real, tol)?;
            gram_residual = gram_residual.max(gf.residual);
            columns.extend((&basis * &gf.transform).columns());
        }
        Ok((DenseMatrix::from_columns(n, &columns), gram_residual))
    };
    let (p, gram_residual, real) = if all_real {
        match attempt(true) {
            Ok((p, g)) => (p, g, true),
            Err(_) => {
                let (p, g) = attempt(false)?;
                (p, g, false)
            }
        }
    } else {
        let (p, g) = attempt(false)?;
        (p, g, false)
    };
    Ok(SdcResult::Sdc(finish(
        ms,
        p,
        eigenspaces,
        real,
        gram_residual,
    )))
}

/// Real orthonormal basis of `span(Re V, Im V)`, if it has the same
/// dimension as `V`.
fn real_basis<T: Real>(
    n: usize,
    v: &[Vec<C<T>>],
    tol: &ToleranceContext<T>,
) -> Option<DenseMatrix<T>> {
    let d = v.len();
    let mut parts: Vec<Vec<C<T>>> = v
        .iter()
        .map(|col| col.iter().map(|z| c(z.re)).collect())
        .collect();
    parts.extend(
        v.iter()
            .map(|col| col.iter().map(|z| c(z.im)).collect::<Vec<_>>()),
    );
    let s = svd(&DenseMatrix::from_columns(n, &parts));
    let sv = &s.singular_values;
    if sv[d - 1] <= tol.defect_rtol * sv[0] {
        return None;
    }
    if sv.get(d).is_some_and(|&x| x > tol.defect_rtol * sv[0]) {
        return None;
    }
    let cols: Vec<Vec<C<T>>> = (0..d).map(|j| s.u.column(j)).collect();
    Some(DenseMatrix::from_columns(n, &cols))
}

fn finish<T: Real>(
    ms: &[DenseMatrix<T>],
    p: DenseMatrix<T>,
    eigenspaces: Vec<CommonEigenspace<T>>,
    real: bool,
    gram_residual: T,
) -> Congruence<T> {
    let p_norm2 = p.frobenius_norm() * p.frobenius_norm();
    let mut residual = T::zero();
    let mut diagonals = Vec::with_capacity(ms.len());
    for m in ms {
        let d = p.congruence(m);
        residual =
            residual.max(d.off_diagonal_norm() / (scale(m.frobenius_norm()) * scale(p_norm2)));
        diagonals.push(d.diag());
    }
    let real = real && p.field_tag() == crate::matrix::Field::Real;
    Congruence {
        p,
        diagonals,
        eigenspaces,
        real,
        residual,
        gram_residual,
    }
}

/// Any-rank case. Checks the common kernel dimension against `n - r0`,
/// solves the leading `r0 x r0` blocks in a basis `T` with the kernel last
/// and returns `P = T · (P_r ⊕ I)`.
pub fn sdc_reduced<T: Real>(
    ms: &[DenseMatrix<T>],
    witness: &PencilRankWitness<T>,
    tol: &ToleranceContext<T>,
    realify: bool,
) -> Result<SdcResult<T>, SolverError> {
    let n = check_family(ms)?;
    let r = witness.r0;
    if r > n {
        return Err(SolverError::WitnessRank {
            expected: n,
            found: r,
        });
    }
    let kernel = kernel_basis(&DenseMatrix::vstack(ms), tol);
    if kernel.len() != n - r {
        return Ok(SdcResult::NotSdc(Refutation::KernelDimensionMismatch {
            common_kernel_dim: kernel.len(),
            expected: n - r,
        }));
    }
    if r == 0 {
        return Ok(SdcResult::Sdc(finish(
            ms,
            DenseMatrix::identity(n),
            Vec::new(),
            true,
            T::zero(),
        )));
    }
    let mut columns: Vec<Vec<C<T>>> = complete_with_unit_vectors(n, &kernel)
        .into_iter()
        .map(|i| {
            (0..n)
                .map(|k| if k == i { c(T::one()) } else { C::zero() })
                .collect()
        })
        .collect();
    columns.extend(kernel);
    let t = DenseMatrix::from_columns(n, &columns);
    let blocks: Vec<DenseMatrix<T>> = ms
        .iter()
        .map(|m| t.congruence(m).submatrix(0..r, 0..r))
        .collect();
    match sdc_full_rank(&blocks, witness, tol, realify)? {
        SdcResult::NotSdc(refutation) => Ok(SdcResult::NotSdc(refutation)),
        SdcResult::Sdc(inner) => {
            let p = &t * &inner.p.direct_sum(&DenseMatrix::identity(n - r));
            Ok(SdcResult::Sdc(finish(
                ms,
                p,
                inner.eigenspaces,
                inner.real,
                inner.gram_residual,
            )))
        }
    }
}

/// Pure recomputation: `P` invertible and every `PᵀM_kP` off-diagonal mass
/// at most `verify_rtol · max(1,‖M_k‖) · ‖P‖²`.
pub fn verify_congruence<T: Real>(
    p: &DenseMatrix<T>,
    ms: &[DenseMatrix<T>],
    tol: &ToleranceContext<T>,
) -> Result<CongruenceCheck<T>, SolverError> {
    let n = check_family(ms)?;
    if p.shape() != (n, n) {
        return Err(SolverError::ShapeMismatch);
    }
    if inverse(p, tol).is_err() {
        return Ok(CongruenceCheck::Singular);
    }
    let p_norm2 = scale(p.frobenius_norm() * p.frobenius_norm());
    let mut worst: Option<(usize, T)> = None;
    let mut residual = T::zero();
    for (k, m) in ms.iter().enumerate() {
        let rel = p.congruence(m).off_diagonal_norm() / (scale(m.frobenius_norm()) * p_norm2);
        residual = residual.max(rel);
        if rel > tol.verify_rtol && worst.is_none_or(|(_, w)| rel > w) {
            worst = Some((k, rel));
        }
    }
    Ok(match worst {
        Some((offender, mass)) => CongruenceCheck::No { offender, mass },
        None => CongruenceCheck::Yes { residual },
    })
}
