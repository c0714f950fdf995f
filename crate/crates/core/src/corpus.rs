//! Worked examples from genetics, planted evolution algebras and
//! adversarial instances with a known refutation.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::AlgebraSpec;
use crate::error::CorpusError;
use crate::matrix::{DenseMatrix, Field};
use crate::numkernel::{inverse, svd};
use crate::scalar::{Real, C};
use crate::tol::ToleranceContext;

/// Condition number above which a random change of basis is redrawn.
pub const MAX_CONDITION: f64 = 1e4;
/// Probability that a planted generator squares to zero.
pub const ZERO_ROW_PROBABILITY: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExampleId {
    /// `e1² = e1, e1e2 = e2, e2² = e1`.
    Simple2d,
    /// `e1² = e1 + e3, e2² = e1 − e3, e1e2 = e2`: not evolution, while its
    /// quotient by `Ann = span(e3)` is `Simple2d`.
    Nota2,
    /// Deformed gametic algebra of simple Mendelian inheritance.
    Mendel(f64),
    /// `Mendel` with a one-dimensional annihilator attached.
    Mendel3dAnn(f64),
    /// Deformed gametic algebra of auto-tetraploid inheritance.
    Tetraploid(f64),
}

pub const EXAMPLE_NAMES: [&str; 5] = ["simple2d", "nota2", "mendel", "mendel3d_ann", "tetraploid"];

/// A built example and whether its parameter lies in the genetic range.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixture<T> {
    pub spec: AlgebraSpec<T>,
    pub genetic: bool,
    pub notes: &'static str,
}

impl ExampleId {
    /// `epsilon` defaults to 0 (the undeformed algebra) and is ignored by
    /// examples without a parameter.
    pub fn parse(name: &str, epsilon: Option<f64>) -> Result<Self, CorpusError> {
        let e = epsilon.unwrap_or(0.0);
        Ok(match name {
            "simple2d" => ExampleId::Simple2d,
            "nota2" => ExampleId::Nota2,
            "mendel" => ExampleId::Mendel(e),
            "mendel3d_ann" => ExampleId::Mendel3dAnn(e),
            "tetraploid" => ExampleId::Tetraploid(e),
            other => return Err(CorpusError::UnknownExample(other.to_string())),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExampleId::Simple2d => "simple2d",
            ExampleId::Nota2 => "nota2",
            ExampleId::Mendel(_) => "mendel",
            ExampleId::Mendel3dAnn(_) => "mendel3d_ann",
            ExampleId::Tetraploid(_) => "tetraploid",
        }
    }

    pub fn epsilon(&self) -> Option<f64> {
        match *self {
            ExampleId::Mendel(e) | ExampleId::Mendel3dAnn(e) | ExampleId::Tetraploid(e) => Some(e),
            _ => None,
        }
    }

    /// Range of ε with non-negative structure constants.
    pub fn genetic_range(&self) -> Option<(f64, f64)> {
        match self {
            ExampleId::Mendel(_) | ExampleId::Mendel3dAnn(_) => Some((0.0, 1.0)),
            ExampleId::Tetraploid(_) => Some((0.0, 2.0 / 9.0)),
            _ => None,
        }
    }

    pub fn notes(&self) -> &'static str {
        match self {
            ExampleId::Simple2d => "natural basis {e1 - e2, e1 + e2}",
            ExampleId::Nota2 => "Ann = span(e3); the quotient is simple2d but the algebra is not evolution",
            ExampleId::Mendel(_) => {
                "evolution iff eps != 0; natural basis {e1 - e2, e1 + (2 eps - 1) e2}; M1^-1 M2 has eigenvalues -1 and 4 eps - 1"
            }
            ExampleId::Mendel3dAnn(_) => "mendel(eps) with e3 spanning the annihilator and M3 = -M2; the quotient is mendel(eps)",
            ExampleId::Tetraploid(_) => {
                "eigenvalues of M1^-1 M2 are -2, -2 - 9 eps - 3 S and -2 - 9 eps + 3 S with S = sqrt(3 eps (3 eps + 4)); \
                 a version of the third with leading +2 circulates, but the trace -6 - 18 eps and the eps -> 0 limit fix it as -2"
            }
        }
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.epsilon() {
            Some(e) => write!(f, "{}(eps={})", self.name(), e),
            None => f.write_str(self.name()),
        }
    }
}

/// The example's structure constants; ε outside the genetic range is an error.
pub fn paper_example<T: Real>(id: ExampleId) -> Result<AlgebraSpec<T>, CorpusError> {
    Ok(example_fixture(id, false)?.spec)
}

/// Like [`paper_example`]; with `allow_non_genetic` any finite ε is accepted
/// and tagged with `genetic = false`.
pub fn example_fixture<T: Real>(
    id: ExampleId,
    allow_non_genetic: bool,
) -> Result<Fixture<T>, CorpusError> {
    let mut genetic = true;
    if let (Some(e), Some((lo, hi))) = (id.epsilon(), id.genetic_range()) {
        if !(lo..=hi).contains(&e) {
            if !allow_non_genetic || !e.is_finite() {
                return Err(CorpusError::OutOfRangeEpsilon {
                    example: id.name(),
                    epsilon: e,
                    lo,
                    hi,
                });
            }
            genetic = false;
        }
    }
    let spec = match id {
        ExampleId::Simple2d => {
            AlgebraSpec::from_real_table(2, &[(1, 1, 1, 1.0), (1, 2, 2, 1.0), (2, 2, 1, 1.0)])?
        }
        ExampleId::Nota2 => AlgebraSpec::from_real_table(
            3,
            &[
                (1, 1, 1, 1.0),
                (1, 1, 3, 1.0),
                (2, 2, 1, 1.0),
                (2, 2, 3, -1.0),
                (1, 2, 2, 1.0),
            ],
        )?,
        ExampleId::Mendel(e) => AlgebraSpec::from_real_table(
            2,
            &[
                (1, 1, 1, 1.0 - e),
                (1, 1, 2, e),
                (1, 2, 1, 0.5),
                (1, 2, 2, 0.5),
                (2, 2, 2, 1.0),
            ],
        )?,
        ExampleId::Mendel3dAnn(e) => AlgebraSpec::from_real_table(
            3,
            &[
                (1, 1, 1, 1.0 - e),
                (1, 1, 2, e),
                (1, 1, 3, -e),
                (1, 2, 1, 0.5),
                (1, 2, 2, 0.5),
                (1, 2, 3, -0.5),
                (2, 2, 2, 1.0),
                (2, 2, 3, -1.0),
            ],
        )?,
        ExampleId::Tetraploid(e) => {
            let m = |rows: [[f64; 3]; 3]| {
                let r: Vec<&[f64]> = rows.iter().map(|x| x.as_slice()).collect();
                DenseMatrix::<T>::from_real_rows(&r)
            };
            let (s6, s2, s23) = (1.0 / 6.0, 0.5, 2.0 / 3.0);
            let ms = [
                m([[1.0 + 2.0 * e, s2, s6], [s2, s6, 0.0], [s6, 0.0, 0.0]]),
                m([[8.0 * e, s2, s23], [s2, s23 - 3.0 * e, s2], [s23, s2, 0.0]]),
                m([
                    [0.0, 10.0 * e, s6 + 10.0 * e],
                    [10.0 * e, s6 + 13.0 * e, s2 + 10.0 * e],
                    [s6 + 10.0 * e, s2 + 10.0 * e, 1.0 + 10.0 * e],
                ]),
            ];
            AlgebraSpec::from_matrices(Field::Real, &ms)?
        }
    };
    Ok(Fixture {
        spec,
        genetic,
        notes: id.notes(),
    })
}

/// Uniform `[-1, 1]` entries, redrawn until the condition number is at most
/// [`MAX_CONDITION`].
pub fn random_change_of_basis<T: Real>(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix<T> {
    loop {
        let p = DenseMatrix::from_fn(n, n, |_, _| {
            C::new(T::lit(rng.random_range(-1.0..=1.0)), T::zero())
        });
        let sv = svd(&p).singular_values;
        let (hi, lo) = (sv[0], sv[n - 1]);
        if lo > T::zero() && hi / lo <= T::lit(MAX_CONDITION) {
            return p;
        }
    }
}

fn natural_form<T: Real>(
    n: usize,
    density: f64,
    zero_rows: f64,
    rng: &mut ChaCha8Rng,
) -> AlgebraSpec<T> {
    let mut table = Vec::new();
    for i in 1..=n {
        if rng.random_bool(zero_rows) {
            continue;
        }
        for k in 1..=n {
            if rng.random_bool(density.clamp(0.0, 1.0)) {
                let v: f64 = rng.random_range(-1.0..=1.0);
                table.push((i, i, k, v));
            }
        }
    }
    AlgebraSpec::from_real_table(n, &table).expect("valid table")
}

/// Natural-form evolution algebra whose squares have every coordinate of
/// magnitude in `[0.5, 1]`, so its annihilator is zero.
fn filler<T: Real>(n: usize, seed: u64) -> AlgebraSpec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut table = Vec::with_capacity(n * n);
    for i in 1..=n {
        for k in 1..=n {
            let v: f64 = rng.random_range(0.5..=1.0);
            table.push((i, i, k, if rng.random_bool(0.5) { v } else { -v }));
        }
    }
    AlgebraSpec::from_real_table(n, &table).expect("valid table")
}

/// A random evolution algebra presented in a random basis, and the planted
/// natural basis (columns of the returned matrix).
///
/// Each natural generator squares to zero with probability
/// [`ZERO_ROW_PROBABILITY`]; otherwise each coordinate of its square is
/// nonzero with probability `density`.
pub fn planted_evolution_algebra<T: Real>(
    n: usize,
    density: f64,
    seed: u64,
) -> Result<(AlgebraSpec<T>, DenseMatrix<T>), CorpusError> {
    planted(n, density, ZERO_ROW_PROBABILITY, seed)
}

fn planted<T: Real>(
    n: usize,
    density: f64,
    zero_rows: f64,
    seed: u64,
) -> Result<(AlgebraSpec<T>, DenseMatrix<T>), CorpusError> {
    if n == 0 {
        return Err(CorpusError::UnsupportedSize {
            kind: "planted",
            n,
            min: 1,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let natural = natural_form::<T>(n, density, zero_rows, &mut rng);
    let p = random_change_of_basis::<T>(n, &mut rng);
    let tol = ToleranceContext::default();
    let p_inv = inverse(&p, &tol).map_err(crate::error::AlgebraError::from)?;
    Ok((natural.change_basis(&p_inv, &tol)?, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversarialKind {
    /// Mendelian obstruction: a defective `M(λ₀)⁻¹M_k`.
    Defective,
    /// Identity, swap and reflection blocks beside an annihilator.
    NonCommuting,
    /// `Ann = 0` yet every pencil is singular.
    AnnMismatch,
}

impl AdversarialKind {
    pub const ALL: [AdversarialKind; 3] = [
        AdversarialKind::Defective,
        AdversarialKind::NonCommuting,
        AdversarialKind::AnnMismatch,
    ];

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "defective" => Some(AdversarialKind::Defective),
            "noncommuting" => Some(AdversarialKind::NonCommuting),
            "ann_mismatch" => Some(AdversarialKind::AnnMismatch),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AdversarialKind::Defective => "defective",
            AdversarialKind::NonCommuting => "noncommuting",
            AdversarialKind::AnnMismatch => "ann_mismatch",
        }
    }

    /// Refutation kind the decision procedure must report.
    pub fn expected_refutation(&self) -> &'static str {
        match self {
            AdversarialKind::Defective => "NonDiagonalisable",
            AdversarialKind::NonCommuting => "NonCommuting",
            AdversarialKind::AnnMismatch => "KernelDimensionMismatch",
        }
    }

    pub fn min_dim(&self) -> usize {
        match self {
            AdversarialKind::Defective => 2,
            AdversarialKind::NonCommuting | AdversarialKind::AnnMismatch => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdversarialInstance<T> {
    pub spec: AlgebraSpec<T>,
    pub kind: AdversarialKind,
    pub expected_refutation: &'static str,
}

/// A non-evolution algebra of dimension `n`: a small core carrying the
/// obstruction, direct-summed with a random evolution algebra whose
/// generators all have nonzero squares. Seed 0 keeps the standard basis;
/// other seeds also apply a random change of basis.
pub fn adversarial_instance<T: Real>(
    kind: AdversarialKind,
    n: usize,
    seed: u64,
) -> Result<AdversarialInstance<T>, CorpusError> {
    if n < kind.min_dim() {
        return Err(CorpusError::UnsupportedSize {
            kind: kind.name(),
            n,
            min: kind.min_dim(),
        });
    }
    let core: AlgebraSpec<T> = match kind {
        AdversarialKind::Defective => paper_example(ExampleId::Mendel(0.0))?,
        AdversarialKind::NonCommuting => paper_example(ExampleId::Nota2)?,
        AdversarialKind::AnnMismatch => {
            AlgebraSpec::from_real_table(3, &[(1, 2, 1, 1.0), (1, 3, 2, 1.0)])?
        }
    };
    let extra = n - core.dim();
    let spec = if extra == 0 {
        core
    } else {
        core.direct_sum(&filler::<T>(extra, seed))
    };
    let spec = if seed == 0 {
        spec
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_change_of_basis::<T>(n, &mut rng);
        spec.change_basis(&p, &ToleranceContext::default())?
    };
    Ok(AdversarialInstance {
        spec,
        kind,
        expected_refutation: kind.expected_refutation(),
    })
}
