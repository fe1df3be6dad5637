mod common;

use common::delong::{bootstrap_p, constructed_case, pair_count_auc};
use proptest::prelude::*;
use radauto::evaluate::{
    auc, bca, cohens_kappa, corrected_resampled_ci, delong_test, format_bound, mann_whitney_u, random_split_plan,
};
use statrs::distribution::{ContinuousCDF, StudentsT};

fn labelled() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
    (2usize..30).prop_flat_map(|n| {
        (
            prop::collection::vec(prop_oneof![(-5i32..5).prop_map(f64::from), -5.0f64..5.0], n),
            prop::collection::vec(0u8..2, n),
        )
            .prop_filter("both classes", |(_, y)| y.contains(&0) && y.contains(&1))
    })
}

proptest! {
    #[test]
    fn auc_equals_pair_counting((s, y) in labelled()) {
        let a = auc(&s, &y).unwrap();
        prop_assert!((a - pair_count_auc(&s, &y)).abs() < 1e-12);
    }

    #[test]
    fn auc_ignores_monotone_transforms((s, y) in labelled()) {
        let t: Vec<f64> = s.iter().map(|v| (0.3 * v).exp() * 7.0 - 2.0).collect();
        prop_assert!((auc(&s, &y).unwrap() - auc(&t, &y).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn corrected_interval_contains_the_naive_one(
        values in prop::collection::vec(0.0f64..1.0, 2..40),
        n_train in 10usize..200,
        n_test in 1usize..100,
    ) {
        let ci = corrected_resampled_ci(&values, n_train, n_test, 0.95).unwrap();
        let k = values.len() as f64;
        let m = values.iter().sum::<f64>() / k;
        let s2 = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (k - 1.0);
        let t = StudentsT::new(0.0, 1.0, k - 1.0).unwrap().inverse_cdf(0.975);
        let naive = t * (s2 / k).sqrt();
        prop_assert!((ci.mean - m).abs() < 1e-12);
        prop_assert!(ci.lower <= m - naive + 1e-12 && ci.upper >= m + naive - 1e-12);
    }

    #[test]
    fn random_splits_keep_class_proportions(
        n0 in 5usize..40,
        n1 in 5usize..40,
        seed in any::<u64>(),
    ) {
        let mut y = vec![0u8; n0];
        y.extend(vec![1u8; n1]);
        let plan = random_split_plan(&y, 5, 0.2, seed).unwrap();
        for s in &plan.splits {
            let t1 = s.test.iter().filter(|&&i| y[i] == 1).count();
            let t0 = s.test.len() - t1;
            prop_assert!((t0 as f64 - 0.2 * n0 as f64).abs() <= 1.0);
            prop_assert!((t1 as f64 - 0.2 * n1 as f64).abs() <= 1.0);
            prop_assert_eq!(s.train.len() + s.test.len(), n0 + n1);
            prop_assert!(s.test.iter().all(|i| !s.train.contains(i)));
        }
    }

    #[test]
    fn delong_is_symmetric_in_its_inputs((s, y) in labelled(), shift in -2.0f64..2.0) {
        let b: Vec<f64> = s.iter().enumerate().map(|(i, v)| v + shift * (i % 3) as f64).collect();
        let ab = delong_test(&s, &b, &y).unwrap();
        let ba = delong_test(&b, &s, &y).unwrap();
        prop_assert!((ab.p - ba.p).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab.p));
    }
}

#[test]
fn published_bca_values() {
    let rows = [
        (0.74, 0.60, 0.67, 0.67),
        (0.90, 0.44, 0.67, 0.67),
        (0.78, 0.74, 0.76, 0.76),
        (0.58, 0.75, 0.665, 0.67),
        (0.30, 0.71, 0.505, 0.51),
    ];
    for (se, sp, exact, printed) in rows {
        let v = bca(se, sp);
        assert!((v - exact).abs() < 1e-12, "{se} {sp}");
        assert!((v - printed).abs() <= 0.005 + 1e-9, "{se} {sp}");
    }
}

#[test]
fn hand_derived_interval_and_markers() {
    let ci = corrected_resampled_ci(&[0.7, 0.8], 100, 25, 0.95).unwrap();
    assert!((ci.lower + 0.028).abs() < 1e-3 && (ci.upper - 1.528).abs() < 1e-3);
    assert_eq!(format_bound(ci.lower), "<0.00");
    assert_eq!(format_bound(ci.upper), ">1.00");
}

#[test]
fn exact_mann_whitney_and_delong_identity() {
    let (_, p) = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
    assert!((p - 0.1).abs() < 1e-12);
    let s = [0.1, 0.4, 0.35, 0.8, 0.2, 0.9];
    let y = [0, 0, 1, 1, 0, 1];
    assert_eq!(delong_test(&s, &s, &y).unwrap().p, 1.0);
    assert_eq!(cohens_kappa(&[1, 2, 3, 1], &[1, 2, 3, 1]).unwrap(), 1.0);
}

#[test]
fn delong_agrees_with_a_bootstrap_on_twenty_patients() {
    let (a, b, y) = constructed_case();
    let d = delong_test(&a, &b, &y).unwrap();
    let boot = bootstrap_p(&a, &b, &y, 100_000, 7);
    assert!((d.p - boot).abs() <= 0.02, "delong {} bootstrap {}", d.p, boot);
}
