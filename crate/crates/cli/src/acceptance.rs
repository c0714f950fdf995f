//! Acceptance suite driven by `acceptance/cases.toml`.
//!
//! Cases run in parallel and are reported in file order. Every public
//! operation of the library is registered in [`OPERATIONS`]; the suite fails
//! if a run leaves one unexercised.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Mutex;
use std::time::Instant;

use evolalg::corpus::random_change_of_basis;
use evolalg::matrix::{vec_dot, vec_norm};
use evolalg::numkernel::{
    commutator_norm, eigen_structure, inverse, is_diagonalisable, kernel_basis, rank,
    Diagonalisability,
};
use evolalg::{
    adversarial_instance, are_sds, check_certificate, common_eigenbasis, explain, max_pencil_rank,
    paper_example, planted_evolution_algebra, sdc_full_rank, sdc_reduced, verify_congruence,
    AdversarialKind, Algebra, CertificateCheck, Complex, CongruenceCheck, DecisionOptions,
    Directions, Field, LinearPencil, Matrix, Outcome, Refutation, SdcResult, SdsResult, Verdict,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::app::{decide, run};
use crate::format::{parse_algebra, serialise_algebra};
use crate::report::{strip_runtime, ReportJson};
use crate::source::parse_example_uri;

const BUILTIN: &str = include_str!("../acceptance/cases.toml");

pub const OPERATIONS: [&str; 30] = [
    "rank",
    "inverse",
    "kernel_basis",
    "eigen_structure",
    "is_diagonalisable",
    "commutator_norm",
    "validate",
    "m_structure_matrices",
    "multiply",
    "change_basis",
    "annihilator_basis",
    "adapt_basis_to_annihilator",
    "complexify",
    "quotient_by_annihilator",
    "evaluate",
    "max_pencil_rank",
    "are_sds",
    "common_eigenbasis",
    "sdc_full_rank",
    "sdc_reduced",
    "verify_congruence",
    "is_evolution_algebra",
    "check_certificate",
    "explain",
    "paper_example",
    "planted_evolution_algebra",
    "adversarial_instance",
    "parse",
    "run",
    "run_acceptance_suite",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Provenance {
    Paper,
    Trivial,
    Derived,
}

impl Provenance {
    pub fn tag(self) -> &'static str {
        match self {
            Provenance::Paper => "PAPER",
            Provenance::Trivial => "TRIVIAL",
            Provenance::Derived => "DERIVED",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessExpectation {
    pub kind: String,
    pub eigenvalue: Option<f64>,
    pub eigenspace_dim: Option<usize>,
    pub eigenvector: Option<Vec<f64>>,
    pub vector_tolerance: Option<f64>,
}

/// Eigenvalues of `M_a⁻¹M_b` for `of = [a, b]`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PencilSpectrum {
    pub of: [usize; 2],
    pub values: Vec<f64>,
}

/// `M_base⁻¹M_p` and `M_base⁻¹M_q` commute for `pair = [p, q]`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Commuting {
    pub base: usize,
    pub pair: [usize; 2],
    pub tolerance: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Property {
    Planted {
        count: usize,
        dims: [usize; 2],
        density: f64,
        seed: u64,
    },
    Scramble {
        fixtures: Vec<String>,
        trials: usize,
        seed: u64,
    },
    Determinism {
        fixtures: Vec<String>,
        repetitions: usize,
    },
    Adversarial {
        dims: [usize; 2],
        seeds: u64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceptanceCase {
    pub id: String,
    pub criterion: Option<u32>,
    pub provenance: Provenance,
    pub summary: String,
    pub fixture: Option<String>,
    pub expect: Option<String>,
    pub tolerance: f64,
    pub max_runtime_ms: Option<f64>,
    #[serde(default)]
    pub canonical_witness: bool,
    #[serde(default)]
    pub sdc_route: bool,
    pub complexified_expect: Option<String>,
    /// Diagonals of `PᵀM_kP`, one row per `k`, up to column scaling and order.
    pub diagonals: Option<Vec<Vec<f64>>>,
    /// `M_a⁻¹M_b` is reported defective when computed directly.
    pub direct_defect: Option<[usize; 2]>,
    pub witness: Option<WitnessExpectation>,
    pub pencil_spectrum: Option<PencilSpectrum>,
    pub commuting: Option<Commuting>,
    pub quotient_expect: Option<String>,
    pub quotient_equals: Option<String>,
    /// Spanning vectors of the expected annihilator.
    pub annihilator: Option<Vec<Vec<f64>>>,
    pub property: Option<Property>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    #[serde(rename = "case")]
    pub cases: Vec<AcceptanceCase>,
}

impl Suite {
    pub fn builtin() -> Self {
        Self::from_toml(BUILTIN).expect("built-in acceptance cases parse")
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckLine {
    pub ok: bool,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseReport {
    pub id: String,
    pub criterion: Option<u32>,
    pub provenance: Provenance,
    pub summary: String,
    pub passed: bool,
    pub runtime_ms: f64,
    pub checks: Vec<CheckLine>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub criterion: u32,
    pub passed: bool,
    pub cases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcceptanceSummary {
    pub cases: Vec<CaseReport>,
    pub criteria: Vec<CriterionReport>,
    pub covered: usize,
    pub uncovered: Vec<String>,
    pub passed: bool,
}

impl AcceptanceSummary {
    pub fn criterion(&self, c: u32) -> Option<&CriterionReport> {
        self.criteria.iter().find(|r| r.criterion == c)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let mark = |ok: bool| if ok { "PASS" } else { "FAIL" };
        for case in &self.cases {
            let criterion = case
                .criterion
                .map_or_else(|| "supplementary".to_string(), |c| format!("criterion {c}"));
            let _ = writeln!(
                s,
                "[{}] {} ({criterion}, {}) {:.1} ms: {}",
                mark(case.passed),
                case.id,
                case.provenance.tag(),
                case.runtime_ms,
                case.summary
            );
            for line in &case.checks {
                let _ = writeln!(
                    s,
                    "    {} {}",
                    if line.ok { "ok  " } else { "FAIL" },
                    line.text
                );
            }
        }
        for c in &self.criteria {
            let _ = writeln!(
                s,
                "criterion {}: {} ({})",
                c.criterion,
                mark(c.passed),
                c.cases.join(", ")
            );
        }
        let _ = writeln!(
            s,
            "operations covered: {}/{}",
            self.covered,
            OPERATIONS.len()
        );
        if !self.uncovered.is_empty() {
            let _ = writeln!(s, "uncovered: {}", self.uncovered.join(", "));
        }
        let _ = writeln!(s, "acceptance suite: {}", mark(self.passed));
        s
    }
}

#[derive(Default)]
struct Coverage(Mutex<BTreeSet<&'static str>>);

impl Coverage {
    fn hit(&self, ops: &[&'static str]) {
        let mut set = self.0.lock().unwrap_or_else(|e| e.into_inner());
        set.extend(ops);
    }

    fn uncovered(&self) -> Vec<String> {
        let set = self.0.lock().unwrap_or_else(|e| e.into_inner());
        OPERATIONS
            .iter()
            .filter(|op| !set.contains(*op))
            .map(|op| op.to_string())
            .collect()
    }
}

struct Ctx<'a> {
    opts: &'a DecisionOptions<f64>,
    cov: &'a Coverage,
    checks: Vec<CheckLine>,
}

impl Ctx<'_> {
    fn check(&mut self, ok: bool, text: impl Into<String>) {
        self.checks.push(CheckLine {
            ok,
            text: text.into(),
        });
    }

    fn bound(&mut self, name: &str, value: f64, bound: f64) {
        self.check(
            value <= bound,
            format!("{name} {value:.3e} (bound {bound:.1e})"),
        );
    }

    fn decide(&self, spec: &Algebra) -> (Verdict<f64>, f64) {
        self.cov
            .hit(&["is_evolution_algebra", "m_structure_matrices"]);
        decide(spec, self.opts)
    }

    fn fixture(&mut self, uri: &str) -> Option<Algebra> {
        self.cov.hit(&["paper_example"]);
        match parse_example_uri(uri, None)
            .map_err(|e| e.to_string())
            .and_then(|id| paper_example(id).map_err(|e| e.to_string()))
        {
            Ok(spec) => Some(spec),
            Err(e) => {
                self.check(false, format!("fixture {uri}: {e}"));
                None
            }
        }
    }
}

pub fn run_acceptance_suite(suite: &Suite, opts: &DecisionOptions<f64>) -> AcceptanceSummary {
    let cov = Coverage::default();
    cov.hit(&["run_acceptance_suite"]);
    let cases: Vec<CaseReport> = std::thread::scope(|s| {
        let handles: Vec<_> = suite
            .cases
            .iter()
            .map(|case| {
                let cov = &cov;
                (case, s.spawn(move || run_case(case, opts, cov)))
            })
            .collect();
        handles
            .into_iter()
            .map(|(case, h)| {
                h.join().unwrap_or_else(|_| CaseReport {
                    id: case.id.clone(),
                    criterion: case.criterion,
                    provenance: case.provenance,
                    summary: case.summary.clone(),
                    passed: false,
                    runtime_ms: 0.0,
                    checks: vec![CheckLine {
                        ok: false,
                        text: "case panicked".into(),
                    }],
                })
            })
            .collect()
    });
    let numbers: BTreeSet<u32> = cases.iter().filter_map(|c| c.criterion).collect();
    let criteria: Vec<CriterionReport> = numbers
        .into_iter()
        .map(|n| {
            let mine: Vec<&CaseReport> = cases.iter().filter(|c| c.criterion == Some(n)).collect();
            CriterionReport {
                criterion: n,
                passed: mine.iter().all(|c| c.passed),
                cases: mine.iter().map(|c| c.id.clone()).collect(),
            }
        })
        .collect();
    let uncovered = cov.uncovered();
    let passed = cases.iter().all(|c| c.passed) && uncovered.is_empty();
    AcceptanceSummary {
        covered: OPERATIONS.len() - uncovered.len(),
        cases,
        criteria,
        uncovered,
        passed,
    }
}

fn run_case(case: &AcceptanceCase, opts: &DecisionOptions<f64>, cov: &Coverage) -> CaseReport {
    let start = Instant::now();
    let mut ctx = Ctx {
        opts,
        cov,
        checks: Vec::new(),
    };
    match (&case.fixture, &case.property) {
        (Some(uri), None) => fixture_case(case, uri, &mut ctx),
        (None, Some(p)) => property_case(case, p, &mut ctx),
        _ => ctx.check(
            false,
            "a case needs exactly one of `fixture` and `property`",
        ),
    }
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    if let (Some(bound), Some(_)) = (case.max_runtime_ms, &case.property) {
        ctx.bound("runtime ms", runtime_ms, bound);
    }
    if ctx.checks.is_empty() {
        ctx.check(false, "no checks ran");
    }
    CaseReport {
        id: case.id.clone(),
        criterion: case.criterion,
        provenance: case.provenance,
        summary: case.summary.clone(),
        passed: ctx.checks.iter().all(|c| c.ok),
        runtime_ms,
        checks: ctx.checks,
    }
}

fn re(x: f64) -> Complex {
    Complex::new(x, 0.0)
}

fn quotient(ctx: &mut Ctx, a: &[Matrix], i: usize, j: usize) -> Option<Matrix> {
    ctx.cov.hit(&["inverse"]);
    let (Some(mi), Some(mj)) = (a.get(i.wrapping_sub(1)), a.get(j.wrapping_sub(1))) else {
        ctx.check(false, format!("no structure matrices {i} and {j}"));
        return None;
    };
    match inverse(mi, &ctx.opts.tol) {
        Ok(inv) => Some(&inv * mj),
        Err(e) => {
            ctx.check(false, format!("M_{i} is not invertible: {e}"));
            None
        }
    }
}

/// Largest difference between two sorted real multisets, relative to
/// `max(1, |expected|)`.
fn multiset_gap(mut got: Vec<f64>, mut want: Vec<f64>) -> f64 {
    if got.len() != want.len() {
        return f64::INFINITY;
    }
    got.sort_by(f64::total_cmp);
    want.sort_by(f64::total_cmp);
    got.iter()
        .zip(&want)
        .map(|(g, w)| (g - w).abs() / w.abs().max(1.0))
        .fold(0.0, f64::max)
}

/// Sine of the angle between two vectors.
fn sine(a: &[Complex], b: &[Complex]) -> f64 {
    let (na, nb) = (vec_norm(a), vec_norm(b));
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    let c = vec_dot(a, b).norm() / (na * nb);
    (1.0 - c * c).max(0.0).sqrt()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Smallest, over column orders, of the largest relative distance from a
/// certificate column of diagonals to a rescaled expected column. Real
/// certificates only allow positive rescaling.
fn diagonal_mismatch(got: &[Vec<Complex>], want: &[Vec<f64>], real: bool) -> f64 {
    let n = got.first().map_or(0, |d| d.len());
    if got.len() != want.len() || want.iter().any(|w| w.len() != n) || n > 7 {
        return f64::INFINITY;
    }
    let col = |m: &[Vec<Complex>], i: usize| m.iter().map(|d| d[i]).collect::<Vec<_>>();
    let want_c: Vec<Vec<Complex>> = want
        .iter()
        .map(|w| w.iter().map(|&x| re(x)).collect())
        .collect();
    permutations(n)
        .iter()
        .map(|perm| {
            (0..n)
                .map(|i| {
                    let d = col(got, i);
                    let e = col(&want_c, perm[i]);
                    let s = vec_dot(&e, &d) / vec_norm(&e).powi(2);
                    if real && (s.re <= 0.0 || s.im != 0.0) {
                        return f64::INFINITY;
                    }
                    let r: Vec<Complex> = d.iter().zip(&e).map(|(x, y)| x - s * y).collect();
                    vec_norm(&r) / vec_norm(&d).max(f64::MIN_POSITIVE)
                })
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

fn orthonormal(vs: &[Vec<Complex>]) -> Vec<Vec<Complex>> {
    let mut q: Vec<Vec<Complex>> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        for u in &q {
            let c = vec_dot(u, &w);
            w.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
        }
        let l = vec_norm(&w);
        if l > 0.0 {
            q.push(w.iter().map(|x| x / l).collect());
        }
    }
    q
}

fn fixture_case(case: &AcceptanceCase, uri: &str, ctx: &mut Ctx) {
    let Some(spec) = ctx.fixture(uri) else {
        return;
    };
    let tol = ctx.opts.tol;
    let ms = spec.m_structure_matrices().matrices;
    let n = spec.dim();
    let (verdict, ms_taken) = ctx.decide(&spec);
    ctx.cov.hit(&["explain"]);
    ctx.check(!explain(&verdict).is_empty(), "explanation rendered");
    if let Some(expect) = &case.expect {
        let got = verdict.outcome.label();
        ctx.check(got == expect, format!("verdict {got} (expected {expect})"));
    }
    if let Some(bound) = case.max_runtime_ms {
        ctx.bound("decision ms", ms_taken, bound);
    }

    if let Some(cert) = verdict.outcome.certificate() {
        ctx.cov
            .hit(&["check_certificate", "verify_congruence", "multiply"]);
        match check_certificate(&spec, &cert.p, &tol) {
            Ok(CertificateCheck::Yes { residual }) => {
                ctx.bound("certificate product residual", residual, case.tolerance)
            }
            other => ctx.check(false, format!("certificate rejected: {other:?}")),
        }
        match verify_congruence(&cert.p, &ms, &tol) {
            Ok(CongruenceCheck::Yes { residual }) => {
                ctx.bound("congruence off-diagonal residual", residual, case.tolerance)
            }
            other => ctx.check(false, format!("congruence rejected: {other:?}")),
        }
        let mut worst = 0.0f64;
        for (i, sq) in cert.squares.iter().enumerate() {
            let pi = cert.p.column(i);
            match spec.multiply(&pi, &pi) {
                Ok(prod) => {
                    let back = cert.p.mat_vec(sq);
                    let r: Vec<Complex> = prod.iter().zip(&back).map(|(a, b)| a - b).collect();
                    worst = worst.max(vec_norm(&r) / vec_norm(&pi).powi(2).max(f64::MIN_POSITIVE));
                }
                Err(e) => ctx.check(false, format!("multiply failed: {e}")),
            }
        }
        ctx.bound("squares residual", worst, case.tolerance);
        if let Some(want) = &case.diagonals {
            let real = cert.p.field_tag() == Field::Real;
            let gap = diagonal_mismatch(&cert.diagonals, want, real);
            ctx.bound("diagonals up to rescaling", gap, case.tolerance);
        }
    } else if case.diagonals.is_some() {
        ctx.check(false, "no certificate to compare diagonals with");
    }

    if let Some(w) = &case.witness {
        witness_checks(w, verdict.outcome.refutation(), ctx);
    }

    if case.canonical_witness {
        ctx.cov.hit(&["evaluate", "max_pencil_rank", "rank"]);
        match &verdict.diagnostics.witness {
            Some(w) => {
                let ones = w.lambda0.iter().filter(|z| **z == re(1.0)).count();
                let zeros = w.lambda0.iter().filter(|z| **z == re(0.0)).count();
                ctx.check(
                    ones == 1 && zeros + 1 == w.lambda0.len() && w.trials_used == 0,
                    format!(
                        "canonical pencil direction, {} random trials",
                        w.trials_used
                    ),
                );
                match LinearPencil::new(ms.clone(), &tol).and_then(|p| p.evaluate(&w.lambda0)) {
                    Ok(m) => {
                        let r = rank(&m, &tol);
                        ctx.check(
                            r == w.r0,
                            format!("rank M(λ0) = {r}, witness r0 = {}", w.r0),
                        );
                    }
                    Err(e) => ctx.check(false, format!("pencil evaluation failed: {e}")),
                }
            }
            None => ctx.check(false, "no pencil witness"),
        }
    }

    if case.sdc_route {
        sdc_route(&spec, &ms, ctx);
    }

    if let Some(expect) = &case.complexified_expect {
        ctx.cov.hit(&["complexify"]);
        match spec.complexify() {
            Ok(c) => {
                let got = ctx.decide(&c).0.outcome.label();
                ctx.check(
                    got == expect,
                    format!("complexified verdict {got} (expected {expect})"),
                );
            }
            Err(e) => ctx.check(false, format!("complexify failed: {e}")),
        }
    }

    if let Some([a, b]) = case.direct_defect {
        ctx.cov.hit(&["is_diagonalisable", "eigen_structure"]);
        if let Some(nq) = quotient(ctx, &ms, a, b) {
            match is_diagonalisable(&nq, &tol) {
                Ok(Diagonalisability::No { defective }) => {
                    let text = format!(
                        "M_{a}^-1 M_{b} defective at {:.10} (eigenspace dimension {} of {})",
                        defective.eigenvalue,
                        defective.geometric_multiplicity(),
                        defective.algebraic_multiplicity
                    );
                    let agrees = case
                        .witness
                        .as_ref()
                        .and_then(|w| w.eigenvalue)
                        .is_none_or(|e| (defective.eigenvalue - re(e)).norm() <= case.tolerance);
                    ctx.check(agrees, text);
                }
                other => ctx.check(
                    false,
                    format!("M_{a}^-1 M_{b} not reported defective: {other:?}"),
                ),
            }
            match eigen_structure(&nq, &tol) {
                Ok(es) => ctx.check(
                    es.clusters.iter().any(|c| !c.is_semisimple()),
                    format!(
                        "eigen structure has {} cluster(s), one defective",
                        es.clusters.len()
                    ),
                ),
                Err(e) => ctx.check(false, format!("eigen structure failed: {e}")),
            }
        }
    }

    if let Some(spec_want) = &case.pencil_spectrum {
        let [a, b] = spec_want.of;
        if let Some(nq) = quotient(ctx, &ms, a, b) {
            ctx.cov.hit(&["eigen_structure", "common_eigenbasis"]);
            let label = format!("spectrum of M_{a}^-1 M_{b}");
            match eigen_structure(&nq, &tol) {
                Ok(es) => {
                    let got: Vec<f64> = es
                        .clusters
                        .iter()
                        .flat_map(|c| {
                            std::iter::repeat_n(c.eigenvalue.re, c.algebraic_multiplicity)
                        })
                        .collect();
                    let imag = es
                        .clusters
                        .iter()
                        .map(|c| c.eigenvalue.im.abs())
                        .fold(0.0, f64::max);
                    ctx.bound(
                        &format!("{label} (eigen structure)"),
                        multiset_gap(got, spec_want.values.clone()).max(imag),
                        case.tolerance,
                    );
                }
                Err(e) => ctx.check(false, format!("eigen structure failed: {e}")),
            }
            match common_eigenbasis(std::slice::from_ref(&nq), &tol) {
                Ok((_, spaces)) => {
                    let got: Vec<f64> = spaces
                        .iter()
                        .flat_map(|s| std::iter::repeat_n(s.eigenvalues[0].re, s.dim()))
                        .collect();
                    ctx.bound(
                        &format!("{label} (joint eigenspaces)"),
                        multiset_gap(got, spec_want.values.clone()),
                        case.tolerance,
                    );
                }
                Err(e) => ctx.check(false, format!("joint eigenspaces failed: {e}")),
            }
            if let Some(cert) = verdict.outcome.certificate() {
                let (da, db) = (&cert.diagonals[a - 1], &cert.diagonals[b - 1]);
                let got: Vec<f64> = da.iter().zip(db).map(|(x, y)| (y / x).re).collect();
                ctx.bound(
                    &format!("{label} (certificate ratios)"),
                    multiset_gap(got, spec_want.values.clone()),
                    case.tolerance,
                );
            }
        }
    }

    if let Some(c) = &case.commuting {
        ctx.cov.hit(&["commutator_norm", "are_sds"]);
        let [p, q] = c.pair;
        if let (Some(na), Some(nb)) = (quotient(ctx, &ms, c.base, p), quotient(ctx, &ms, c.base, q))
        {
            let scale = na.frobenius_norm() * nb.frobenius_norm();
            match commutator_norm(&na, &nb) {
                Ok(norm) => ctx.bound(
                    &format!(
                        "commutator of M_{0}^-1 M_{p} and M_{0}^-1 M_{q} relative to their norms",
                        c.base
                    ),
                    norm / scale.max(1.0),
                    c.tolerance,
                ),
                Err(e) => ctx.check(false, format!("commutator failed: {e}")),
            }
            match are_sds(&[na, nb], &tol) {
                Ok(SdsResult::NotSds(w)) => {
                    let r: Refutation<f64> = w.into();
                    ctx.check(
                        true,
                        format!(
                            "commuting pair still not simultaneously diagonalisable: {}",
                            r.kind()
                        ),
                    )
                }
                other => ctx.check(
                    false,
                    format!(
                        "commuting pair unexpectedly diagonalisable: {}",
                        other.map(|r| r.is_sds()).unwrap_or(false)
                    ),
                ),
            }
        }
    }

    if let Some(want) = &case.annihilator {
        ctx.cov.hit(&[
            "annihilator_basis",
            "adapt_basis_to_annihilator",
            "kernel_basis",
            "rank",
        ]);
        let basis = spec.annihilator_basis(&tol);
        ctx.check(
            basis.len() == want.len(),
            format!(
                "annihilator dimension {} (expected {})",
                basis.len(),
                want.len()
            ),
        );
        let q = orthonormal(&basis);
        let worst = want
            .iter()
            .map(|w| {
                let e: Vec<Complex> = w.iter().map(|&x| re(x)).collect();
                let mut r = e.clone();
                for u in &q {
                    let c = vec_dot(u, &e);
                    r.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
                }
                vec_norm(&r) / vec_norm(&e).max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max);
        ctx.bound(
            "distance of expected annihilator from computed span",
            worst,
            case.tolerance,
        );
        ctx.check(
            verdict.diagnostics.ann_dim == want.len(),
            format!("decision ann_dim {}", verdict.diagnostics.ann_dim),
        );
        let stacked = spec.m_structure_matrices().stacked();
        let k = kernel_basis(&stacked, &tol).len();
        let r = rank(&stacked, &tol);
        ctx.check(
            k == want.len() && r + k == n,
            format!("stacked structure matrices: rank {r}, kernel {k}"),
        );
        match spec.adapt_basis_to_annihilator(&tol) {
            Ok(ab) => ctx.check(
                ab.ann_dim == want.len(),
                format!("adapted basis ann_dim {}", ab.ann_dim),
            ),
            Err(e) => ctx.check(false, format!("adapted basis failed: {e}")),
        }
    }

    if case.quotient_expect.is_some() || case.quotient_equals.is_some() {
        ctx.cov.hit(&["quotient_by_annihilator"]);
        match spec.quotient_by_annihilator(&tol) {
            Ok(qspec) => {
                if let Some(expect) = &case.quotient_expect {
                    let got = ctx.decide(&qspec).0.outcome.label();
                    ctx.check(
                        got == expect,
                        format!("quotient verdict {got} (expected {expect})"),
                    );
                }
                if let Some(other) = &case.quotient_equals {
                    if let Some(want) = ctx.fixture(other) {
                        ctx.check(qspec == want, format!("quotient equals {other} entry-wise"));
                    }
                }
            }
            Err(e) => ctx.check(false, format!("quotient failed: {e}")),
        }
    }
}

fn witness_checks(w: &WitnessExpectation, refutation: Option<&Refutation<f64>>, ctx: &mut Ctx) {
    let Some(r) = refutation else {
        ctx.check(false, format!("no refutation (expected {})", w.kind));
        return;
    };
    ctx.check(
        r.kind() == w.kind,
        format!("refutation {} (expected {})", r.kind(), w.kind),
    );
    let Refutation::NonDiagonalisable { cluster, index } = r else {
        return;
    };
    if let Some(e) = w.eigenvalue {
        let gap = (cluster.eigenvalue - re(e)).norm();
        ctx.bound(
            &format!("defective eigenvalue of M(λ0)^-1 M_{} minus {e}", index + 1),
            gap,
            1e-8,
        );
    }
    if let Some(d) = w.eigenspace_dim {
        let got = cluster.geometric_multiplicity();
        ctx.check(
            got == d,
            format!(
                "eigenspace dimension {got} (expected {d}), algebraic multiplicity {}",
                cluster.algebraic_multiplicity
            ),
        );
    }
    if let Some(v) = &w.eigenvector {
        let want: Vec<Complex> = v.iter().map(|&x| re(x)).collect();
        let s = match cluster.eigenspace.as_slice() {
            [u] => sine(u, &want),
            _ => f64::INFINITY,
        };
        ctx.bound(
            "sine of angle to expected eigenvector",
            s,
            w.vector_tolerance.unwrap_or(1e-6),
        );
    }
}

fn sdc_route(spec: &Algebra, ms: &[Matrix], ctx: &mut Ctx) {
    ctx.cov.hit(&[
        "max_pencil_rank",
        "sdc_full_rank",
        "sdc_reduced",
        "verify_congruence",
    ]);
    let tol = ctx.opts.tol;
    let directions = match spec.field() {
        Field::Real => Directions::Real,
        Field::Complex => Directions::Complex,
    };
    let pencil = match LinearPencil::new(ms.to_vec(), &tol) {
        Ok(p) => p,
        Err(e) => return ctx.check(false, format!("pencil rejected: {e}")),
    };
    let w = max_pencil_rank(&pencil, &tol, ctx.opts.trials, ctx.opts.seed, directions);
    let n = spec.dim();
    let (route, result) = if w.r0 == n {
        ("full-rank", sdc_full_rank(ms, &w, &tol, true))
    } else {
        ("reduced", sdc_reduced(ms, &w, &tol, true))
    };
    match result {
        Ok(SdcResult::Sdc(c)) => {
            let ok = verify_congruence(&c.p, ms, &tol).is_ok_and(|v| v.is_yes());
            ctx.check(
                ok,
                format!("{route} congruence route (r0 = {} of {n}) verified", w.r0),
            );
        }
        other => ctx.check(false, format!("{route} congruence route failed: {other:?}")),
    }
}

fn property_case(case: &AcceptanceCase, p: &Property, ctx: &mut Ctx) {
    let tol = ctx.opts.tol;
    match p {
        Property::Planted {
            count,
            dims,
            density,
            seed,
        } => {
            ctx.cov
                .hit(&["planted_evolution_algebra", "check_certificate"]);
            let [lo, hi] = *dims;
            if lo == 0 || hi < lo {
                return ctx.check(false, "bad dimension range");
            }
            let (mut evolution, mut accepted, mut planted_ok) = (0, 0, 0);
            let mut ann_dims = BTreeSet::new();
            let mut worst = 0.0f64;
            let mut failures = Vec::new();
            for i in 0..*count {
                let n = lo + i % (hi - lo + 1);
                let s = seed.wrapping_add(i as u64);
                let (spec, planted) = match planted_evolution_algebra::<f64>(n, *density, s) {
                    Ok(x) => x,
                    Err(e) => return ctx.check(false, format!("generator failed: {e}")),
                };
                planted_ok +=
                    usize::from(check_certificate(&spec, &planted, &tol).is_ok_and(|c| c.is_yes()));
                let (v, _) = ctx.decide(&spec);
                ann_dims.insert(v.diagnostics.ann_dim);
                if let Outcome::Evolution { certificate } = &v.outcome {
                    evolution += 1;
                    if let Ok(CertificateCheck::Yes { residual }) =
                        check_certificate(&spec, &certificate.p, &tol)
                    {
                        accepted += 1;
                        worst = worst.max(residual);
                    }
                } else if failures.len() < 5 {
                    failures.push(format!("n={n} seed={s}: {}", v.outcome.label()));
                }
            }
            ctx.check(
                planted_ok == *count,
                format!("planted bases accepted {planted_ok}/{count}"),
            );
            ctx.check(
                evolution == *count,
                format!(
                    "Evolution verdicts {evolution}/{count} {}",
                    failures.join("; ")
                ),
            );
            ctx.check(
                accepted == *count,
                format!("certificates accepted {accepted}/{count}"),
            );
            ctx.bound("largest certificate residual", worst, case.tolerance);
            let mixed = ann_dims.len() >= 2 && ann_dims.contains(&0);
            ctx.check(mixed, format!("annihilator dimensions seen {ann_dims:?}"));
        }
        Property::Scramble {
            fixtures,
            trials,
            seed,
        } => {
            ctx.cov.hit(&["change_basis"]);
            for (f, uri) in fixtures.iter().enumerate() {
                let Some(spec) = ctx.fixture(uri) else {
                    continue;
                };
                let base = ctx.decide(&spec).0.outcome.label();
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(f as u64));
                let mut same = 0;
                for _ in 0..*trials {
                    let p: Matrix = random_change_of_basis(spec.dim(), &mut rng);
                    match spec.change_basis(&p, &tol) {
                        Ok(moved) => {
                            same += usize::from(ctx.decide(&moved).0.outcome.label() == base)
                        }
                        Err(e) => ctx.check(false, format!("change of basis failed: {e}")),
                    }
                }
                ctx.check(
                    same == *trials,
                    format!("{uri}: {same}/{trials} scrambles keep {base}"),
                );
            }
        }
        Property::Determinism {
            fixtures,
            repetitions,
        } => {
            ctx.cov.hit(&["run", "parse", "validate"]);
            for uri in fixtures {
                let Some(spec) = ctx.fixture(uri) else {
                    continue;
                };
                let round = serialise_algebra(&spec)
                    .ok()
                    .and_then(|t| parse_algebra(&t).ok());
                ctx.check(
                    round.as_ref() == Some(&spec),
                    format!("{uri}: file round trip exact"),
                );
                let outputs: Vec<(i32, String, Option<ReportJson>)> = (0..*repetitions)
                    .map(|_| run_check_json(uri, ctx.opts))
                    .collect();
                let first = &outputs[0];
                let identical = outputs.iter().all(|o| o.0 == first.0 && o.1 == first.1);
                let schema_ok = outputs.iter().all(|o| {
                    o.2.as_ref()
                        .is_some_and(|r| r.is_finite() && r.source == *uri)
                });
                let verdict = first.2.as_ref().map_or("?", |r| r.verdict.as_str());
                ctx.check(
                    identical && schema_ok,
                    format!(
                        "{uri}: {repetitions} runs byte-identical, exit {}, verdict {verdict}",
                        first.0
                    ),
                );
            }
        }
        Property::Adversarial { dims, seeds } => {
            ctx.cov.hit(&["adversarial_instance"]);
            for kind in AdversarialKind::ALL {
                let (mut total, mut right) = (0, 0);
                for n in dims[0].max(kind.min_dim())..=dims[1] {
                    for s in 0..*seeds {
                        match adversarial_instance::<f64>(kind, n, s) {
                            Ok(inst) => {
                                total += 1;
                                let v = ctx.decide(&inst.spec).0;
                                right += usize::from(
                                    v.outcome.refutation().map(|r| r.kind())
                                        == Some(inst.expected_refutation),
                                );
                            }
                            Err(e) => ctx.check(false, format!("generator failed: {e}")),
                        }
                    }
                }
                ctx.check(
                    total > 0 && right == total,
                    format!(
                        "{}: {right}/{total} refuted as {}",
                        kind.name(),
                        kind.expected_refutation()
                    ),
                );
            }
        }
    }
}

/// Exit code and stdout of `evolalg check --json` with `runtime_ms` removed,
/// and the parsed report.
fn run_check_json(uri: &str, opts: &DecisionOptions<f64>) -> (i32, String, Option<ReportJson>) {
    let tols: Vec<String> = opts
        .tol
        .fields()
        .iter()
        .map(|(k, v)| format!("{k}={v:e}"))
        .collect();
    let args = [
        "evolalg".to_string(),
        "--json".into(),
        "--seed".into(),
        opts.seed.to_string(),
        "--trials".into(),
        opts.trials.to_string(),
        "--tol".into(),
        tols.join(","),
        "check".into(),
        uri.into(),
    ];
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(args, &mut out, &mut err);
    let text = String::from_utf8_lossy(&out);
    let report = serde_json::from_str::<ReportJson>(&text).ok();
    (code, strip_runtime(&text), report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_cases_parse_and_cover_every_criterion() {
        let suite = Suite::builtin();
        let criteria: BTreeSet<u32> = suite.cases.iter().filter_map(|c| c.criterion).collect();
        assert_eq!(criteria, (1..=10).collect());
        let ids: BTreeSet<&str> = suite.cases.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids.len(), suite.cases.len());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = "[[case]]\nid = \"x\"\nprovenance = \"PAPER\"\nsummary = \"s\"\ntolerance = 1.0\nbogus = 1\n";
        assert!(Suite::from_toml(text).is_err());
    }

    #[test]
    fn diagonal_matching_allows_rescaling_and_reordering() {
        let got = vec![vec![re(8.0), re(0.5)], vec![re(-8.0), re(0.5)]];
        let want = vec![vec![2.0, 2.0], vec![2.0, -2.0]];
        assert!(diagonal_mismatch(&got, &want, true) < 1e-15);
        let flipped = vec![vec![re(-8.0), re(0.5)], vec![re(8.0), re(0.5)]];
        assert!(diagonal_mismatch(&flipped, &want, true).is_infinite());
        assert!(diagonal_mismatch(&flipped, &want, false) < 1e-15);
    }

    #[test]
    fn multiset_gap_is_order_free() {
        assert_eq!(multiset_gap(vec![1.0, -1.0], vec![-1.0, 1.0]), 0.0);
        assert!(multiset_gap(vec![1.0], vec![1.0, 2.0]).is_infinite());
    }
}
