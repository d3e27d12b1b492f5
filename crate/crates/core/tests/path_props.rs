use lepage_core::StepPath;
use proptest::prelude::*;

fn arb_path() -> impl Strategy<Value = StepPath> {
    (
        -5.0..5.0f64,
        prop::collection::btree_map(1u32..1000, -10.0..10.0f64, 0..12),
    )
        .prop_map(|(init, jumps)| {
            let times: Vec<f64> = jumps.keys().map(|k| f64::from(*k) / 1000.0).collect();
            let values: Vec<Vec<f64>> = jumps.values().map(|v| vec![*v]).collect();
            StepPath::from_parts(1, vec![init], times, values).unwrap()
        })
}

proptest! {
    #[test]
    fn combine_evaluates_pointwise(a in arb_path(), b in arb_path(), c in -3.0..3.0f64, t in 0.0..=1.0f64) {
        let z = StepPath::linear_combine(1, [(c, &a), (1.0, &b)]).unwrap();
        let expect = c * a.evaluate(t).unwrap()[0] + b.evaluate(t).unwrap()[0];
        let got = z.evaluate(t).unwrap()[0];
        prop_assert!((got - expect).abs() <= 1e-13 * (1.0 + expect.abs()));
    }

    #[test]
    fn self_difference_is_zero(a in arb_path()) {
        let d = a.sub(&a).unwrap();
        prop_assert_eq!(d.sup_norm(), 0.0);
    }

    #[test]
    fn increments_add(a in arb_path(), s in 0.0..=1.0f64, u in 0.0..=1.0f64, v in 0.0..=1.0f64) {
        let mut w = [s, u, v];
        w.sort_by(f64::total_cmp);
        let left = a.increment(w[0], w[1]).unwrap()[0];
        let right = a.increment(w[1], w[2]).unwrap()[0];
        let whole = a.increment(w[0], w[2]).unwrap()[0];
        prop_assert!((left + right - whole).abs() <= 1e-12);
    }

    #[test]
    fn text_round_trips_are_exact(a in arb_path()) {
        let csv = StepPath::read_csv(a.to_csv_string().as_bytes()).unwrap();
        prop_assert_eq!(&csv, &a);
        prop_assert_eq!(&StepPath::from_json(&a.to_json()).unwrap(), &a);
    }

    #[test]
    fn sup_norm_bounds_values(a in arb_path(), t in 0.0..=1.0f64) {
        prop_assert!(a.evaluate(t).unwrap()[0].abs() <= a.sup_norm());
    }
}
