use evolalg::algebra::validate;
use evolalg::corpus::EXAMPLE_NAMES;
use evolalg::{example_fixture, Algebra, Complex, ExampleId, Field, Matrix, UncheckedSpec};
use evolalg_cli::format::{format_matrix, parse_algebra, parse_matrix, serialise_algebra};
use proptest::collection::{btree_map, vec};
use proptest::prelude::*;

fn value() -> impl Strategy<Value = f64> {
    prop_oneof![
        -10.0f64..10.0,
        (-300i32..300, -1.0f64..1.0).prop_map(|(e, m)| m * 10f64.powi(e)),
        (-4i32..=4).prop_map(|k| k as f64 / 4.0),
    ]
    .prop_filter("finite", |x| x.is_finite())
}

fn algebra() -> impl Strategy<Value = Algebra> {
    (1usize..6, any::<bool>()).prop_flat_map(|(n, complex)| {
        let key = (0..n, 0..n, 0..n).prop_map(|(a, b, k)| (a.min(b), a.max(b), k));
        let im = if complex {
            value().boxed()
        } else {
            Just(0.0).boxed()
        };
        btree_map(key, (value(), im), 0..12).prop_map(move |entries| {
            validate(UncheckedSpec {
                dim: n,
                field: if complex { Field::Complex } else { Field::Real },
                entries: entries
                    .into_iter()
                    .map(|(k, (re, im))| (k, Complex::new(re, im)))
                    .collect(),
                labels: None,
            })
            .unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn parse_inverts_serialise(spec in algebra()) {
        let text = serialise_algebra(&spec).unwrap();
        let back = parse_algebra(&text).unwrap();
        prop_assert_eq!(&back, &spec);
        prop_assert_eq!(serialise_algebra(&back).unwrap(), text);
    }

    #[test]
    fn parser_never_panics(text in "[a-z0-9:# .+\\-ei\n]{0,80}") {
        let _ = parse_algebra(&text);
        let _ = parse_matrix(&text);
    }

    #[test]
    fn matrices_round_trip(n in 1usize..5, entries in vec((value(), value()), 16)) {
        let m = Matrix::from_fn(n, n, |i, j| {
            let (re, im) = entries[i * 4 + j];
            Complex::new(re, im)
        });
        prop_assert_eq!(parse_matrix(&format_matrix(&m)).unwrap(), m);
    }
}

#[test]
fn fixtures_round_trip_for_a_range_of_epsilons() {
    for name in EXAMPLE_NAMES {
        for e in [0.0, 0.05, 0.1, 1.0 / 3.0, 0.7, 2.5] {
            let id = ExampleId::parse(name, Some(e)).unwrap();
            let spec = example_fixture::<f64>(id, true).unwrap().spec;
            let text = serialise_algebra(&spec).unwrap();
            assert_eq!(parse_algebra(&text).unwrap(), spec, "{id}");
        }
    }
}

#[test]
fn labels_round_trip_or_are_refused() {
    let spec = parse_algebra("field: real\ndim: 2\nlabels: AA Aa\nm 1 1 1 1\n").unwrap();
    assert_eq!(
        parse_algebra(&serialise_algebra(&spec).unwrap()).unwrap(),
        spec
    );
    let spaced = spec
        .with_labels(Some(vec!["a b".into(), "c".into()]))
        .unwrap();
    assert!(serialise_algebra(&spaced).is_err());
}
