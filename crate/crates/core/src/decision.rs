//! Deciding whether an algebra is an evolution algebra.
//!
//! Branches:
//! - `a`: some `M_k` is invertible, so `Ann(A) = 0` and the canonical
//!   direction `e_k` is a full-rank pencil point.
//! - `b.1`: no `M_k` is invertible and `Ann(A) = 0`. A random search looks for
//!   an invertible `M(λ₀)`; without one the algebra is not evolution.
//! - `b.2`: `Ann(A) ≠ 0`. The problem moves to the leading blocks `M̃_k` of a
//!   basis with the annihilator last, which need an invertible `M̃(λ₀)`.
//!
//! In every branch the last step asks whether the `M(λ₀)⁻¹M_k` are
//! simultaneously diagonalisable by similarity.

use std::fmt::{self, Write as _};

use crate::algebra::AlgebraSpec;
use crate::error::SolverError;
use crate::matrix::{vec_norm, DenseMatrix, Field};
use crate::numkernel::{inverse, svd};
use crate::pencil::{max_pencil_rank, Directions, LinearPencil, PencilRankWitness, DEFAULT_TRIALS};
use crate::scalar::{abs, c, Real, C};
use crate::sdc::{sdc_full_rank, Refutation, SdcResult};
use crate::tol::{scale, ToleranceContext};

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionOptions<T> {
    pub tol: ToleranceContext<T>,
    pub trials: usize,
    pub seed: u64,
}

impl<T: Real> Default for DecisionOptions<T> {
    fn default() -> Self {
        Self {
            tol: ToleranceContext::default(),
            trials: DEFAULT_TRIALS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    A,
    B1,
    B2,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::A => "a",
            Branch::B1 => "b.1",
            Branch::B2 => "b.2",
        })
    }
}

/// A natural basis: columns of `p` are `e*_i = Σ_k p_ki e_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate<T> {
    pub p: DenseMatrix<T>,
    /// Diagonal of `PᵀM_kP` for each `k`.
    pub diagonals: Vec<Vec<C<T>>>,
    /// Row `i` holds the coordinates of `e*_i²` in the natural basis.
    pub squares: Vec<Vec<C<T>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome<T> {
    Evolution {
        certificate: Certificate<T>,
    },
    NotEvolution {
        refutation: Refutation<T>,
    },
    /// Real algebra diagonalised only by a complex change of basis.
    ComplexOnlyUndetermined {
        certificate: Certificate<T>,
        note: String,
    },
    Undetermined {
        reason: String,
    },
}

impl<T> Outcome<T> {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Evolution { .. } => "Evolution",
            Outcome::NotEvolution { .. } => "NotEvolution",
            Outcome::ComplexOnlyUndetermined { .. } => "ComplexOnlyUndetermined",
            Outcome::Undetermined { .. } => "Undetermined",
        }
    }

    pub fn certificate(&self) -> Option<&Certificate<T>> {
        match self {
            Outcome::Evolution { certificate }
            | Outcome::ComplexOnlyUndetermined { certificate, .. } => Some(certificate),
            _ => None,
        }
    }

    pub fn refutation(&self) -> Option<&Refutation<T>> {
        match self {
            Outcome::NotEvolution { refutation } => Some(refutation),
            _ => None,
        }
    }

    pub fn is_evolution(&self) -> bool {
        matches!(self, Outcome::Evolution { .. })
    }

    pub fn is_not_evolution(&self) -> bool {
        matches!(self, Outcome::NotEvolution { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics<T> {
    pub branch: Branch,
    pub dim: usize,
    pub field: Field,
    pub ann_dim: usize,
    /// Pencil witness of the (possibly reduced) problem.
    pub witness: Option<PencilRankWitness<T>>,
    pub tol: ToleranceContext<T>,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict<T> {
    pub outcome: Outcome<T>,
    pub diagnostics: Diagnostics<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CertificateCheck<T> {
    Yes {
        residual: T,
    },
    /// Largest relative product `e*_i e*_j` (0-based, `i < j`).
    No {
        pair: (usize, usize),
        residual: T,
    },
    Singular,
}

impl<T> CertificateCheck<T> {
    pub fn is_yes(&self) -> bool {
        matches!(self, CertificateCheck::Yes { .. })
    }
}

pub fn is_evolution_algebra<T: Real>(
    spec: &AlgebraSpec<T>,
    opts: &DecisionOptions<T>,
) -> Verdict<T> {
    let mut diagnostics = Diagnostics {
        branch: Branch::A,
        dim: spec.dim(),
        field: spec.field(),
        ann_dim: 0,
        witness: None,
        tol: opts.tol,
        trials: opts.trials,
        seed: opts.seed,
    };
    let outcome = match decide(spec, opts, &mut diagnostics) {
        Ok(outcome) => outcome,
        Err(e) => Outcome::Undetermined {
            reason: e.to_string(),
        },
    };
    Verdict {
        outcome,
        diagnostics,
    }
}

fn decide<T: Real>(
    spec: &AlgebraSpec<T>,
    opts: &DecisionOptions<T>,
    diag: &mut Diagnostics<T>,
) -> Result<Outcome<T>, SolverError> {
    let tol = &opts.tol;
    let n = spec.dim();
    let real = spec.field() == Field::Real;
    let directions = if real {
        Directions::Real
    } else {
        Directions::Complex
    };
    let ms = spec.m_structure_matrices().matrices;
    let pencil = LinearPencil::new(ms.clone(), tol)?;

    let canonical = max_pencil_rank(&pencil, tol, 0, opts.seed, directions);
    let (result, transform) = if canonical.r0 == n {
        diag.branch = Branch::A;
        diag.witness = Some(canonical.clone());
        (sdc_full_rank(&ms, &canonical, tol, real)?, None)
    } else {
        let ann = spec.annihilator_basis(tol);
        diag.ann_dim = ann.len();
        if ann.is_empty() {
            diag.branch = Branch::B1;
            let w = max_pencil_rank(&pencil, tol, opts.trials, opts.seed, directions);
            diag.witness = Some(w.clone());
            if w.r0 < n {
                return Ok(Outcome::NotEvolution {
                    refutation: Refutation::KernelDimensionMismatch {
                        common_kernel_dim: 0,
                        expected: n - w.r0,
                    },
                });
            }
            (sdc_full_rank(&ms, &w, tol, real)?, None)
        } else {
            diag.branch = Branch::B2;
            let adapted = spec.adapt_basis_to_annihilator(tol)?;
            diag.ann_dim = adapted.ann_dim;
            let r = n - adapted.ann_dim;
            if r == 0 {
                return certify(spec, adapted.transform, tol);
            }
            let reduced = LinearPencil::new(adapted.reduced_blocks.clone(), tol)?;
            let w = max_pencil_rank(&reduced, tol, opts.trials, opts.seed, directions);
            diag.witness = Some(w.clone());
            if w.r0 < r {
                return Ok(Outcome::NotEvolution {
                    refutation: Refutation::NoFullRankPencil {
                        trials: w.trials_used,
                        seed: w.seed,
                        reduced_dim: r,
                        r0: w.r0,
                    },
                });
            }
            (
                sdc_full_rank(&adapted.reduced_blocks, &w, tol, real)?,
                Some((adapted.transform, r)),
            )
        }
    };
    match result {
        SdcResult::NotSdc(refutation) => Ok(Outcome::NotEvolution { refutation }),
        SdcResult::Sdc(cg) => {
            let p = match transform {
                None => cg.p,
                Some((t, r)) => &t * &cg.p.direct_sum(&DenseMatrix::identity(n - r)),
            };
            let outcome = certify(spec, p, tol)?;
            if real && !cg.real {
                if let Outcome::Evolution { certificate } = outcome {
                    return Ok(Outcome::ComplexOnlyUndetermined {
                        certificate,
                        note: "diagonalised over the complex numbers only: some joint eigenvalues are not real, so no real natural basis was constructed".into(),
                    });
                }
            }
            Ok(outcome)
        }
    }
}

/// Normalises the columns of `p`, then re-checks them independently.
fn certify<T: Real>(
    spec: &AlgebraSpec<T>,
    p: DenseMatrix<T>,
    tol: &ToleranceContext<T>,
) -> Result<Outcome<T>, SolverError> {
    let p = normalise_columns(&p);
    match check_certificate(spec, &p, tol)? {
        CertificateCheck::Yes { .. } => Ok(Outcome::Evolution { certificate: build_certificate(spec, p, tol)? }),
        CertificateCheck::No { pair, residual } => Ok(Outcome::Undetermined {
            reason: format!(
                "candidate natural basis failed the product check: e*_{} e*_{} has relative size {:e}",
                pair.0 + 1,
                pair.1 + 1,
                residual.to_f64().unwrap_or(f64::NAN)
            ),
        }),
        CertificateCheck::Singular => Ok(Outcome::Undetermined { reason: "candidate change of basis is singular".into() }),
    }
}

/// Each column divided by its largest entry (first on near-ties), so the
/// leading coefficient is 1.
fn normalise_columns<T: Real>(p: &DenseMatrix<T>) -> DenseMatrix<T> {
    let n = p.n_rows();
    let cols: Vec<Vec<C<T>>> = p
        .columns()
        .into_iter()
        .map(|col| {
            let mut best = 0;
            for (i, z) in col.iter().enumerate() {
                if abs(*z) > abs(col[best]) * (T::one() + T::lit(1e-9)) {
                    best = i;
                }
            }
            let pivot = col[best];
            if abs(pivot) == T::zero() {
                return col;
            }
            col.into_iter()
                .map(|z| if z == pivot { c(T::one()) } else { z / pivot })
                .collect()
        })
        .collect();
    DenseMatrix::from_columns(n, &cols)
}

fn build_certificate<T: Real>(
    spec: &AlgebraSpec<T>,
    p: DenseMatrix<T>,
    tol: &ToleranceContext<T>,
) -> Result<Certificate<T>, SolverError> {
    let n = spec.dim();
    let ms = spec.m_structure_matrices().matrices;
    let diagonals: Vec<Vec<C<T>>> = ms.iter().map(|m| p.congruence(m).diag()).collect();
    let p_inv = inverse(&p, tol)?;
    let squares = (0..n)
        .map(|i| {
            let old: Vec<C<T>> = diagonals.iter().map(|d| d[i]).collect();
            p_inv.mat_vec(&old)
        })
        .collect();
    Ok(Certificate {
        p,
        diagonals,
        squares,
    })
}

/// Independent check of a candidate natural basis: every product
/// `e*_i e*_j` with `i ≠ j` must be at most
/// `verify_rtol · ‖p_i‖ · ‖p_j‖ · max(1, ‖m‖)`.
pub fn check_certificate<T: Real>(
    spec: &AlgebraSpec<T>,
    p: &DenseMatrix<T>,
    tol: &ToleranceContext<T>,
) -> Result<CertificateCheck<T>, SolverError> {
    let n = spec.dim();
    if p.shape() != (n, n) {
        return Err(SolverError::ShapeMismatch);
    }
    let cols = p.columns();
    let unit: Vec<Vec<C<T>>> = cols
        .iter()
        .map(|c| {
            let l = vec_norm(c);
            c.iter()
                .map(|&z| if l > T::zero() { z / l } else { z })
                .collect()
        })
        .collect();
    let sv = svd(&DenseMatrix::from_columns(n, &unit)).singular_values;
    if inverse(p, tol).is_err() || sv.last().copied().unwrap_or_else(T::zero) <= tol.defect_rtol {
        return Ok(CertificateCheck::Singular);
    }
    let m_scale = scale(spec.tensor_norm());
    let mut worst: Option<((usize, usize), T)> = None;
    let mut largest = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            let prod = spec.multiply(&cols[i], &cols[j])?;
            let rel = vec_norm(&prod) / (vec_norm(&cols[i]) * vec_norm(&cols[j]) * m_scale);
            largest = largest.max(rel);
            if rel > tol.verify_rtol && worst.is_none_or(|(_, w)| rel > w) {
                worst = Some(((i, j), rel));
            }
        }
    }
    Ok(match worst {
        Some((pair, residual)) => CertificateCheck::No { pair, residual },
        None => CertificateCheck::Yes { residual: largest },
    })
}

/// Human-readable report. Matrix and basis indices are 1-based.
pub fn explain<T: Real>(verdict: &Verdict<T>) -> String {
    let d = &verdict.diagnostics;
    let mut out = String::new();
    let _ = writeln!(out, "verdict: {}", verdict.outcome.label());
    let _ = writeln!(out, "dimension: {} over the {} numbers", d.dim, d.field);
    let _ = writeln!(out, "annihilator dimension: {}", d.ann_dim);
    let branch_text = match d.branch {
        Branch::A => "some structure matrix M_k is invertible; the algebra is evolution iff every M_k^-1 M_j is diagonalisable and they commute pairwise",
        Branch::B1 => "no structure matrix is invertible and the annihilator is zero; an invertible pencil M(λ0) is searched for, and without one the algebra is not evolution",
        Branch::B2 => "the annihilator is nonzero; the leading blocks of a basis with the annihilator last must admit an invertible pencil whose quotients are simultaneously diagonalisable",
    };
    let _ = writeln!(out, "branch {}: {}", d.branch, branch_text);
    if let Some(w) = &d.witness {
        let lambda: Vec<String> = w.lambda0.iter().map(|z| fmt_c(*z)).collect();
        let _ = writeln!(
            out,
            "pencil witness: rank {} at λ0 = ({}), random trials used {}, seed {}",
            w.r0,
            lambda.join(", "),
            w.trials_used,
            w.seed
        );
    }
    match &verdict.outcome {
        Outcome::Evolution { certificate } => write_certificate(&mut out, certificate),
        Outcome::ComplexOnlyUndetermined { certificate, note } => {
            let _ = writeln!(out, "note: {note}");
            write_certificate(&mut out, certificate);
        }
        Outcome::NotEvolution { refutation } => {
            let _ = writeln!(out, "refutation: {}", describe_refutation(refutation));
        }
        Outcome::Undetermined { reason } => {
            let _ = writeln!(out, "reason: {reason}");
        }
    }
    let tols: Vec<String> = d
        .tol
        .fields()
        .iter()
        .map(|(k, v)| format!("{k}={:e}", v.to_f64().unwrap_or(f64::NAN)))
        .collect();
    let _ = writeln!(
        out,
        "reproduce with: --seed {} --trials {} --tol {}",
        d.seed,
        d.trials,
        tols.join(",")
    );
    out
}

fn write_certificate<T: Real>(out: &mut String, cert: &Certificate<T>) {
    let n = cert.p.n_rows();
    let _ = writeln!(out, "natural basis:");
    for i in 0..n {
        let _ = writeln!(
            out,
            "  e*_{} = {}",
            i + 1,
            linear_combination(&cert.p.column(i), "e")
        );
    }
    let _ = writeln!(out, "squares in the natural basis:");
    for (i, sq) in cert.squares.iter().enumerate() {
        let _ = writeln!(out, "  e*_{}^2 = {}", i + 1, linear_combination(sq, "e*"));
    }
}

pub fn describe_refutation<T: Real>(r: &Refutation<T>) -> String {
    match r {
        Refutation::NonDiagonalisable { index, cluster } => format!(
            "M(λ0)^-1 M_{} is not diagonalisable: eigenvalue {} has algebraic multiplicity {} but eigenspace dimension {}",
            index + 1,
            fmt_c(cluster.eigenvalue),
            cluster.algebraic_multiplicity,
            cluster.geometric_multiplicity()
        ),
        Refutation::NonCommuting { i, j, norm } => format!(
            "M(λ0)^-1 M_{} and M(λ0)^-1 M_{} do not commute (commutator norm {:e})",
            i + 1,
            j + 1,
            norm.to_f64().unwrap_or(f64::NAN)
        ),
        Refutation::KernelDimensionMismatch { common_kernel_dim, expected } => format!(
            "the common kernel of the structure matrices has dimension {common_kernel_dim}, but the maximum pencil rank requires {expected}"
        ),
        Refutation::NoFullRankPencil { trials, seed, reduced_dim, r0 } => format!(
            "no invertible pencil of the {reduced_dim}x{reduced_dim} reduced blocks was found (best rank {r0} over the canonical directions and {trials} random ones, seed {seed})"
        ),
    }
}

fn linear_combination<T: Real>(coeffs: &[C<T>], name: &str) -> String {
    let terms: Vec<String> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, z)| abs(**z) > T::zero())
        .map(|(k, z)| format!("({}) {}_{}", fmt_c(*z), name, k + 1))
        .collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

fn fmt_c<T: Real>(z: C<T>) -> String {
    let re = z.re.to_f64().unwrap_or(f64::NAN);
    let im = z.im.to_f64().unwrap_or(f64::NAN);
    let r = |x: f64| {
        let s = format!("{:.6}", x);
        let s = s.trim_end_matches('0').trim_end_matches('.').to_string();
        if s == "-0" {
            "0".to_string()
        } else {
            s
        }
    };
    if im == 0.0 {
        r(re)
    } else if im < 0.0 {
        format!("{}-{}i", r(re), r(-im))
    } else {
        format!("{}+{}i", r(re), r(im))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type A = AlgebraSpec<f64>;
    type M = DenseMatrix<f64>;

    fn opts() -> DecisionOptions<f64> {
        DecisionOptions::default()
    }

    fn simple2d() -> A {
        A::from_real_table(2, &[(1, 1, 1, 1.0), (1, 2, 2, 1.0), (2, 2, 1, 1.0)]).unwrap()
    }

    fn mendel(eps: f64) -> A {
        A::from_real_table(
            2,
            &[
                (1, 1, 1, 1.0 - eps),
                (1, 1, 2, eps),
                (1, 2, 1, 0.5),
                (1, 2, 2, 0.5),
                (2, 2, 2, 1.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn simple2d_is_evolution_with_paper_basis() {
        let v = is_evolution_algebra(&simple2d(), &opts());
        assert_eq!(v.diagnostics.branch, Branch::A);
        let Outcome::Evolution { certificate } = &v.outcome else {
            panic!("{v:?}")
        };
        let mut cols: Vec<Vec<f64>> = certificate
            .p
            .columns()
            .iter()
            .map(|c| c.iter().map(|z| z.re).collect())
            .collect();
        cols.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(cols, vec![vec![1.0, -1.0], vec![1.0, 1.0]]);
        let text = explain(&v);
        assert!(text.contains("natural basis"), "{text}");
    }

    #[test]
    fn mendel_verdicts() {
        let v = is_evolution_algebra(&mendel(0.0), &opts());
        match &v.outcome {
            Outcome::NotEvolution {
                refutation: Refutation::NonDiagonalisable { cluster, .. },
            } => {
                assert!((cluster.eigenvalue - C::new(-1.0, 0.0)).norm() < 1e-8);
            }
            other => panic!("{other:?}"),
        }
        assert!(explain(&v).contains("eigenvalue -1"));
        for eps in [0.1, 0.25, 0.5, 1.0] {
            assert!(
                is_evolution_algebra(&mendel(eps), &opts())
                    .outcome
                    .is_evolution(),
                "{eps}"
            );
        }
    }

    #[test]
    fn check_certificate_examples() {
        let p = M::from_real_rows(&[&[1.0, 1.0], &[1.0, -1.0]]);
        let tol = ToleranceContext::default();
        assert!(check_certificate(&simple2d(), &p, &tol).unwrap().is_yes());
        assert!(matches!(
            check_certificate(&simple2d(), &M::identity(2), &tol).unwrap(),
            CertificateCheck::No { pair: (0, 1), .. }
        ));
        assert_eq!(
            check_certificate(&simple2d(), &M::zeros(2, 2), &tol).unwrap(),
            CertificateCheck::Singular
        );
    }

    #[test]
    fn zero_algebra_is_evolution() {
        let v = is_evolution_algebra(&A::zero(3, Field::Real).unwrap(), &opts());
        assert_eq!(v.diagnostics.branch, Branch::B2);
        assert_eq!(v.diagnostics.ann_dim, 3);
        assert!(v.outcome.is_evolution());
    }

    #[test]
    fn complex_only_real_algebra() {
        // M_1 = diag(1,-1), M_2 = X: N_2 = [[0,1],[-1,0]] has eigenvalues ±i
        let spec =
            A::from_real_table(2, &[(1, 1, 1, 1.0), (2, 2, 1, -1.0), (1, 2, 2, 1.0)]).unwrap();
        let v = is_evolution_algebra(&spec, &opts());
        assert!(
            matches!(v.outcome, Outcome::ComplexOnlyUndetermined { .. }),
            "{v:?}"
        );
        let v = is_evolution_algebra(&spec.complexify().unwrap(), &opts());
        assert!(v.outcome.is_evolution());
    }
}
