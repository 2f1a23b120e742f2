use lvo_core::gbt::GbtParams;
use lvo_core::metrics::{
    confusion_at, mann_whitney_auc, roc_curve, select_cutoff_cv, ConfusionMetrics, MetricsError,
};
use lvo_core::{ColumnKind, FeatureMatrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scores_with_ties(rng: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<bool>) {
    loop {
        let s: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64 / 8.0).collect();
        let y: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        if y.iter().any(|v| *v) && y.iter().any(|v| !*v) {
            return (s, y);
        }
    }
}

/// Pairwise counting written independently of the library.
fn rank_oracle(s: &[f64], y: &[bool]) -> f64 {
    let (mut num, mut pairs) = (0.0, 0.0);
    for i in 0..s.len() {
        for j in 0..s.len() {
            if y[i] && !y[j] {
                pairs += 1.0;
                if s[i] > s[j] {
                    num += 1.0;
                } else if s[i] == s[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / pairs
}

#[test]
fn trapezoid_auc_equals_rank_statistic() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let n = rng.random_range(2..60);
        let (s, y) = scores_with_ties(&mut rng, n);
        let auc = roc_curve(&s, &y).unwrap().auc;
        assert!((auc - rank_oracle(&s, &y)).abs() < 1e-12);
        assert!((auc - mann_whitney_auc(&s, &y).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn twenty_random_scores() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let s: Vec<f64> = (0..20).map(|_| rng.random::<f64>()).collect();
    let y: Vec<bool> = (0..20).map(|i| i % 3 == 0).collect();
    assert!((roc_curve(&s, &y).unwrap().auc - rank_oracle(&s, &y)).abs() < 1e-12);
}

#[test]
fn table_one_youden_arithmetic() {
    let level3 = ConfusionMetrics::from_counts(93, 316, 684, 7);
    assert_eq!((level3.sensitivity, level3.specificity), (0.93, 0.684));
    assert!((level3.youden - 0.614).abs() < 1e-9);
    let level2 = ConfusionMetrics::from_counts(93, 351, 649, 7);
    assert!((level2.youden - 0.579).abs() < 1e-9);
    // through confusion_at on scores
    let mut s = vec![0.9; 93];
    s.extend(vec![0.1; 7]);
    s.extend(vec![0.9; 316]);
    s.extend(vec![0.1; 684]);
    let y: Vec<bool> = (0..1100).map(|i| i < 100).collect();
    let m = confusion_at(&s, &y, 0.5).unwrap();
    assert!((m.youden - 0.614).abs() < 1e-9);
    assert!((m.accuracy - (93.0 + 684.0) / 1100.0).abs() < 1e-15);
}

#[test]
fn single_class_roc_is_error() {
    assert!(matches!(roc_curve(&[0.1, 0.3], &[false, false]), Err(MetricsError::SingleClass)));
    assert!(matches!(roc_curve(&[f64::NAN, 0.3], &[true, false]), Err(MetricsError::NonFinite(0))));
}

fn one_feature(values: &[f64]) -> FeatureMatrix {
    let rows: Vec<Vec<Option<f64>>> = values.iter().map(|v| vec![Some(*v)]).collect();
    FeatureMatrix::from_rows(&rows, vec!["x".into()], vec![ColumnKind::Continuous]).unwrap()
}

fn quick() -> GbtParams {
    GbtParams { num_rounds: 20, ..GbtParams::default() }
}

#[test]
fn separable_cutoff_has_unit_youden() {
    let y: Vec<bool> = (0..60).map(|i| i % 2 == 0).collect();
    let x: Vec<f64> = y.iter().enumerate().map(|(i, &l)| if l { 10.0 + i as f64 } else { i as f64 - 100.0 }).collect();
    let sel = select_cutoff_cv(&one_feature(&x), &y, &quick(), 10, 3).unwrap();
    assert_eq!(sel.pooled_youden, 1.0);
    assert!((0.0..=1.0).contains(&sel.threshold));
    assert_eq!(sel.folds.len(), 10);
    assert!(sel.folds.iter().enumerate().all(|(k, f)| f.fold == k));
}

#[test]
fn null_cutoff_youden_is_small() {
    let mut total = 0.0;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let x: Vec<f64> = (0..200).map(|_| rng.random::<f64>()).collect();
        let y: Vec<bool> = (0..200).map(|_| rng.random_bool(0.43)).collect();
        total += select_cutoff_cv(&one_feature(&x), &y, &quick(), 10, seed).unwrap().pooled_youden;
    }
    let mean = total / 20.0;
    assert!(mean < 0.25, "mean null Youden {mean}");
}

#[test]
fn cutoff_selection_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x: Vec<f64> = (0..50).map(|_| rng.random::<f64>()).collect();
    let y: Vec<bool> = x.iter().map(|v| *v + rng.random::<f64>() * 0.5 > 0.7).collect();
    let a = select_cutoff_cv(&one_feature(&x), &y, &quick(), 5, 9).unwrap();
    let b = select_cutoff_cv(&one_feature(&x), &y, &quick(), 5, 9).unwrap();
    assert_eq!(a, b);
}

#[test]
fn too_few_positives_for_ten_folds() {
    let y: Vec<bool> = (0..40).map(|i| i < 5).collect();
    let x: Vec<f64> = (0..40).map(|i| i as f64).collect();
    let err = select_cutoff_cv(&one_feature(&x), &y, &quick(), 10, 0).unwrap_err();
    assert!(matches!(err, MetricsError::TooFewForFolds { count: 5, n_folds: 10 }));
}

fn arb_scores() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    prop::collection::vec((0u8..10, any::<bool>()), 2..40)
        .prop_filter("both classes", |v| v.iter().any(|p| p.1) && v.iter().any(|p| !p.1))
        .prop_map(|v| (v.iter().map(|p| p.0 as f64 / 10.0).collect(), v.iter().map(|p| p.1).collect()))
}

proptest! {
    #[test]
    fn auc_invariant_under_increasing_maps((s, y) in arb_scores()) {
        let base = roc_curve(&s, &y).unwrap().auc;
        let e: Vec<f64> = s.iter().map(|v| v.exp()).collect();
        let a: Vec<f64> = s.iter().map(|v| 2.0 * v + 1.0).collect();
        prop_assert_eq!(roc_curve(&e, &y).unwrap().auc, base);
        prop_assert_eq!(roc_curve(&a, &y).unwrap().auc, base);
    }

    #[test]
    fn reversed_labels_negated_scores_keep_auc((s, y) in arb_scores()) {
        let neg: Vec<f64> = s.iter().map(|v| -v).collect();
        let flip: Vec<bool> = y.iter().map(|v| !v).collect();
        let a = roc_curve(&s, &y).unwrap().auc;
        let b = roc_curve(&neg, &flip).unwrap().auc;
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn youden_matches_roc_points((s, y) in arb_scores()) {
        let curve = roc_curve(&s, &y).unwrap();
        let mut distinct = s.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        prop_assert!(curve.points.len() <= distinct.len() + 1);
        for p in &curve.points[1..] {
            let m = confusion_at(&s, &y, p.threshold).unwrap();
            prop_assert!((m.youden - (p.tpr - p.fpr)).abs() < 1e-12);
        }
        for w in curve.points.windows(2) {
            prop_assert!(w[0].threshold > w[1].threshold);
            prop_assert!(w[0].fpr <= w[1].fpr && w[0].tpr <= w[1].tpr);
        }
        let last = curve.points.last().unwrap();
        prop_assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        prop_assert!((0.0..=1.0).contains(&curve.auc));
    }
}
