//! JSON reports.
//!
//! Complex numbers are `[re, im]` pairs and every index is 1-based. Matrices
//! are flattened row-major. `diagnostics.runtime_ms` is the only field that
//! varies between identical runs.

use evolalg::decision::describe_refutation;
use evolalg::{Branch, Certificate, Complex, Outcome, Refutation, Tolerances, Verdict};
use serde::{Deserialize, Serialize};

pub const REPORT_SCHEMA: &str = "evolalg-report/1";
pub const ANN_SCHEMA: &str = "evolalg-ann/1";
pub const VERIFY_SCHEMA: &str = "evolalg-verify/1";

pub type Pair = [f64; 2];

fn pair(z: Complex) -> Pair {
    [z.re, z.im]
}

fn pairs(v: &[Complex]) -> Vec<Pair> {
    v.iter().copied().map(pair).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportJson {
    pub schema: String,
    pub source: String,
    /// `Evolution`, `NotEvolution`, `ComplexOnlyUndetermined` or `Undetermined`.
    pub verdict: String,
    /// `a`, `b.1` or `b.2`.
    pub branch: String,
    /// Human-readable refutation, complex-only note or undetermined reason.
    pub message: Option<String>,
    pub certificate: Option<CertificateJson>,
    pub refutation: Option<RefutationJson>,
    pub diagnostics: DiagnosticsJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateJson {
    pub dim: usize,
    /// `real` when every entry of `p` has zero imaginary part.
    pub field: String,
    /// Row-major; column `i` holds the coordinates of `e*_i`.
    pub p: Vec<Pair>,
    /// Diagonal of `PᵀM_kP`, one list per `k`.
    pub diagonals: Vec<Vec<Pair>>,
    pub natural_basis: Vec<BasisVectorJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisVectorJson {
    /// Coordinates in the input basis.
    pub vector: Vec<Pair>,
    /// Coordinates of the square in the natural basis.
    pub square: Vec<Pair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "witness", deny_unknown_fields)]
pub enum RefutationJson {
    NonDiagonalisable {
        /// `k` in `M(λ0)⁻¹M_k`.
        matrix: usize,
        eigenvalue: Pair,
        algebraic_multiplicity: usize,
        geometric_multiplicity: usize,
        eigenspace: Vec<Vec<Pair>>,
    },
    NonCommuting {
        i: usize,
        j: usize,
        commutator_norm: f64,
    },
    KernelDimensionMismatch {
        common_kernel_dim: usize,
        expected: usize,
    },
    NoFullRankPencil {
        trials: usize,
        seed: u64,
        reduced_dim: usize,
        r0: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsJson {
    /// First so that dropping its line leaves valid JSON.
    pub runtime_ms: f64,
    pub dim: usize,
    pub field: String,
    pub ann_dim: usize,
    pub r0: Option<usize>,
    pub lambda0: Option<Vec<Pair>>,
    pub trials_used: Option<usize>,
    pub tolerances: TolerancesJson,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesJson {
    pub rank_rtol: f64,
    pub eig_cluster_atol: f64,
    pub commute_rtol: f64,
    pub verify_rtol: f64,
    pub defect_rtol: f64,
}

impl From<&Tolerances> for TolerancesJson {
    fn from(t: &Tolerances) -> Self {
        Self {
            rank_rtol: t.rank_rtol,
            eig_cluster_atol: t.eig_cluster_atol,
            commute_rtol: t.commute_rtol,
            verify_rtol: t.verify_rtol,
            defect_rtol: t.defect_rtol,
        }
    }
}

fn certificate_json(c: &Certificate<f64>) -> CertificateJson {
    let n = c.p.n_rows();
    CertificateJson {
        dim: n,
        field: c.p.field_tag().to_string(),
        p: pairs(c.p.as_slice()),
        diagonals: c.diagonals.iter().map(|d| pairs(d)).collect(),
        natural_basis: (0..n)
            .map(|i| BasisVectorJson {
                vector: pairs(&c.p.column(i)),
                square: pairs(&c.squares[i]),
            })
            .collect(),
    }
}

fn refutation_json(r: &Refutation<f64>) -> RefutationJson {
    match r {
        Refutation::NonDiagonalisable { index, cluster } => RefutationJson::NonDiagonalisable {
            matrix: index + 1,
            eigenvalue: pair(cluster.eigenvalue),
            algebraic_multiplicity: cluster.algebraic_multiplicity,
            geometric_multiplicity: cluster.geometric_multiplicity(),
            eigenspace: cluster.eigenspace.iter().map(|v| pairs(v)).collect(),
        },
        Refutation::NonCommuting { i, j, norm } => RefutationJson::NonCommuting {
            i: i + 1,
            j: j + 1,
            commutator_norm: *norm,
        },
        Refutation::KernelDimensionMismatch {
            common_kernel_dim,
            expected,
        } => RefutationJson::KernelDimensionMismatch {
            common_kernel_dim: *common_kernel_dim,
            expected: *expected,
        },
        Refutation::NoFullRankPencil {
            trials,
            seed,
            reduced_dim,
            r0,
        } => RefutationJson::NoFullRankPencil {
            trials: *trials,
            seed: *seed,
            reduced_dim: *reduced_dim,
            r0: *r0,
        },
    }
}

fn branch_name(b: Branch) -> String {
    b.to_string()
}

impl ReportJson {
    pub fn new(source: &str, verdict: &Verdict<f64>, runtime_ms: f64) -> Self {
        let d = &verdict.diagnostics;
        let (certificate, refutation, message) = match &verdict.outcome {
            Outcome::Evolution { certificate } => (Some(certificate_json(certificate)), None, None),
            Outcome::ComplexOnlyUndetermined { certificate, note } => (
                Some(certificate_json(certificate)),
                None,
                Some(note.clone()),
            ),
            Outcome::NotEvolution { refutation } => (
                None,
                Some(refutation_json(refutation)),
                Some(describe_refutation(refutation)),
            ),
            Outcome::Undetermined { reason } => (None, None, Some(reason.clone())),
        };
        Self {
            schema: REPORT_SCHEMA.into(),
            source: source.into(),
            verdict: verdict.outcome.label().into(),
            branch: branch_name(d.branch),
            message,
            certificate,
            refutation,
            diagnostics: DiagnosticsJson {
                runtime_ms,
                dim: d.dim,
                field: d.field.to_string(),
                ann_dim: d.ann_dim,
                r0: d.witness.as_ref().map(|w| w.r0),
                lambda0: d.witness.as_ref().map(|w| pairs(&w.lambda0)),
                trials_used: d.witness.as_ref().map(|w| w.trials_used),
                tolerances: (&d.tol).into(),
                trials: d.trials,
                seed: d.seed,
            },
        }
    }

    /// Every floating-point value is finite.
    pub fn is_finite(&self) -> bool {
        let ok = |v: &[Pair]| v.iter().flatten().all(|x| x.is_finite());
        let cert = self.certificate.as_ref().is_none_or(|c| {
            ok(&c.p)
                && c.diagonals.iter().all(|d| ok(d))
                && c.natural_basis
                    .iter()
                    .all(|b| ok(&b.vector) && ok(&b.square))
        });
        let refutation = match &self.refutation {
            Some(RefutationJson::NonDiagonalisable {
                eigenvalue,
                eigenspace,
                ..
            }) => ok(std::slice::from_ref(eigenvalue)) && eigenspace.iter().all(|v| ok(v)),
            Some(RefutationJson::NonCommuting {
                commutator_norm, ..
            }) => commutator_norm.is_finite(),
            _ => true,
        };
        let d = &self.diagnostics;
        let t = &d.tolerances;
        cert && refutation
            && d.lambda0.as_deref().is_none_or(ok)
            && d.runtime_ms.is_finite()
            && [
                t.rank_rtol,
                t.eig_cluster_atol,
                t.commute_rtol,
                t.verify_rtol,
                t.defect_rtol,
            ]
            .iter()
            .all(|x| x.is_finite())
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<S: Serialize>(value: &S) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialise");
    s.push('\n');
    s
}

/// The JSON text with every `runtime_ms` line removed.
pub fn strip_runtime(json: &str) -> String {
    json.lines()
        .filter(|l| !l.trim_start().starts_with("\"runtime_ms\""))
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnJson {
    pub schema: String,
    pub source: String,
    pub dim: usize,
    pub ann_dim: usize,
    /// Basis vectors of the annihilator in input coordinates.
    pub basis: Vec<Vec<Pair>>,
}

impl AnnJson {
    pub fn new(source: &str, dim: usize, basis: &[Vec<Complex>]) -> Self {
        Self {
            schema: ANN_SCHEMA.into(),
            source: source.into(),
            dim,
            ann_dim: basis.len(),
            basis: basis.iter().map(|v| pairs(v)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyJson {
    pub schema: String,
    pub source: String,
    /// `Yes`, `No` or `Singular`.
    pub status: String,
    pub residual: Option<f64>,
    /// The worst pair `(i, j)` when `status` is `No`.
    pub pair: Option<[usize; 2]>,
}
