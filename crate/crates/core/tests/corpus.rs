use evolalg::corpus::EXAMPLE_NAMES;
use evolalg::numkernel::{eigenvalues, inverse};
use evolalg::{
    adversarial_instance, check_certificate, example_fixture, is_evolution_algebra, paper_example,
    planted_evolution_algebra, AdversarialKind, Algebra, CorpusError, DecisionOptions, ExampleId,
    Tolerances,
};

fn verdict(id: ExampleId) -> &'static str {
    let spec: Algebra = paper_example(id).unwrap();
    is_evolution_algebra(&spec, &DecisionOptions::default())
        .outcome
        .label()
}

#[test]
fn fixture_verdicts() {
    assert_eq!(verdict(ExampleId::Simple2d), "Evolution");
    assert_eq!(verdict(ExampleId::Nota2), "NotEvolution");
    assert_eq!(verdict(ExampleId::Mendel(0.0)), "NotEvolution");
    for e in [0.05, 0.1, 0.25, 0.5, 0.75, 1.0] {
        assert_eq!(verdict(ExampleId::Mendel(e)), "Evolution", "mendel({e})");
        assert_eq!(
            verdict(ExampleId::Mendel3dAnn(e)),
            "Evolution",
            "mendel3d_ann({e})"
        );
    }
    assert_eq!(verdict(ExampleId::Mendel3dAnn(0.0)), "NotEvolution");
    assert_eq!(verdict(ExampleId::Tetraploid(0.0)), "NotEvolution");
    for e in [0.01, 0.05, 0.1, 0.15, 0.2, 2.0 / 9.0] {
        assert_eq!(
            verdict(ExampleId::Tetraploid(e)),
            "Evolution",
            "tetraploid({e})"
        );
    }
}

#[test]
fn tetraploid_spectrum_matches_closed_form() {
    let tol = Tolerances::default();
    for e in [0.05, 0.1, 0.2] {
        let ms = paper_example::<f64>(ExampleId::Tetraploid(e))
            .unwrap()
            .m_structure_matrices()
            .matrices;
        let n = &inverse(&ms[0], &tol).unwrap() * &ms[1];
        let mut got: Vec<f64> = eigenvalues(&n).unwrap().iter().map(|z| z.re).collect();
        got.sort_by(f64::total_cmp);
        let s = (3.0 * e * (3.0 * e + 4.0)).sqrt();
        let mut want = [-2.0, -2.0 - 9.0 * e - 3.0 * s, -2.0 - 9.0 * e + 3.0 * s];
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-8, "eps={e}: {got:?} vs {want:?}");
        }
        // the variant with a leading +2 is not an eigenvalue
        let printed = 2.0 - 9.0 * e + 3.0 * s;
        assert!(got.iter().all(|g| (g - printed).abs() > 0.1));
    }
}

#[test]
fn annihilator_example_quotient_is_mendel() {
    let tol = Tolerances::default();
    let q = paper_example::<f64>(ExampleId::Mendel3dAnn(0.0))
        .unwrap()
        .quotient_by_annihilator(&tol)
        .unwrap();
    assert_eq!(q, paper_example(ExampleId::Mendel(0.0)).unwrap());
}

#[test]
fn epsilon_range_is_enforced_unless_overridden() {
    for id in [
        ExampleId::Mendel(-0.1),
        ExampleId::Mendel(1.5),
        ExampleId::Mendel3dAnn(2.0),
        ExampleId::Tetraploid(0.25),
    ] {
        assert!(matches!(
            paper_example::<f64>(id),
            Err(CorpusError::OutOfRangeEpsilon { .. })
        ));
        let f = example_fixture::<f64>(id, true).unwrap();
        assert!(!f.genetic);
    }
    assert!(example_fixture::<f64>(ExampleId::Mendel(f64::NAN), true).is_err());
    assert!(
        example_fixture::<f64>(ExampleId::Mendel(0.3), false)
            .unwrap()
            .genetic
    );
    for name in EXAMPLE_NAMES {
        assert_eq!(ExampleId::parse(name, None).unwrap().name(), name);
    }
}

#[test]
fn planted_round_trip_at_scale() {
    let opts = DecisionOptions::default();
    let tol = Tolerances::default();
    let mut with_ann = 0;
    let mut total = 0;
    for n in 2..=6 {
        for seed in 0..50 {
            let (spec, p) = planted_evolution_algebra::<f64>(n, 0.7, seed).unwrap();
            assert!(check_certificate(&spec, &p, &tol).unwrap().is_yes());
            let v = is_evolution_algebra(&spec, &opts);
            assert!(v.outcome.is_evolution(), "n={n} seed={seed}");
            let cert = v.outcome.certificate().unwrap();
            assert!(check_certificate(&spec, &cert.p, &tol).unwrap().is_yes());
            with_ann += usize::from(v.diagnostics.ann_dim > 0);
            total += 1;
        }
    }
    assert_eq!(total, 250);
    assert!(with_ann > 50, "only {with_ann} draws with an annihilator");
}

#[test]
fn adversarial_labels_at_scale() {
    let opts = DecisionOptions::default();
    let mut total = 0;
    for kind in AdversarialKind::ALL {
        for n in kind.min_dim()..=6 {
            for seed in 0..12 {
                let inst = adversarial_instance::<f64>(kind, n, seed).unwrap();
                let v = is_evolution_algebra(&inst.spec, &opts);
                assert_eq!(
                    v.outcome.refutation().map(|r| r.kind()),
                    Some(inst.expected_refutation),
                    "{kind:?} n={n} seed={seed}"
                );
                total += 1;
            }
        }
    }
    assert!(total >= 100);
}

#[test]
fn small_adversarial_sizes_are_rejected() {
    assert!(matches!(
        adversarial_instance::<f64>(AdversarialKind::NonCommuting, 2, 0),
        Err(CorpusError::UnsupportedSize { .. })
    ));
    assert!(matches!(
        adversarial_instance::<f64>(AdversarialKind::Defective, 1, 0),
        Err(CorpusError::UnsupportedSize { .. })
    ));
}

#[test]
fn f32_pipeline_handles_the_fixtures() {
    let opts = DecisionOptions::<f32>::default();
    for (id, evolution) in [
        (ExampleId::Simple2d, true),
        (ExampleId::Mendel(0.0), false),
        (ExampleId::Mendel(0.5), true),
        (ExampleId::Nota2, false),
    ] {
        let spec = paper_example::<f32>(id).unwrap();
        let v = is_evolution_algebra(&spec, &opts);
        assert_eq!(v.outcome.is_evolution(), evolution, "{id}");
    }
}
