use lvo_core::cohort::{
    chi_square_2x2, cohort_stats, read_cohort_csv, synth_cohort, two_sample_t, write_cohort_csv, CohortSpec, Manifest,
    TVariant,
};
use proptest::prelude::*;

fn student_density(x: f64, nu: f64, norm: f64) -> f64 {
    norm * (1.0 + x * x / nu).powf(-(nu + 1.0) / 2.0)
}

/// Two-sided tail of Student's t by composite Simpson quadrature on
/// `x = |t| + u/(1−u)`, `u ∈ [0, 1)`.
fn t_tail_quadrature(t: f64, nu: f64, norm: f64) -> f64 {
    let n = 200_000;
    let h = 1.0 / n as f64;
    let f = |u: f64| {
        if u >= 1.0 {
            return 0.0;
        }
        let x = t.abs() + u / (1.0 - u);
        student_density(x, nu, norm) / ((1.0 - u) * (1.0 - u))
    };
    let mut s = f(0.0) + f(1.0);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    2.0 * s * h / 3.0
}

#[test]
fn pooled_t_matches_textbook_oracle() {
    let a = [2.1, 2.5, 2.8, 3.0];
    let b = [1.1, 1.4, 1.9];
    let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    let ss = |x: &[f64]| {
        let m = mean(x);
        x.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
    };
    let sp2 = (ss(&a) + ss(&b)) / 5.0;
    let t = (mean(&a) - mean(&b)) / (sp2 * (1.0 / 4.0 + 1.0 / 3.0)).sqrt();
    // Γ(3) / (√(5π) · Γ(5/2)), Γ(5/2) = 3√π/4
    let norm = 2.0 / ((5.0 * std::f64::consts::PI).sqrt() * 0.75 * std::f64::consts::PI.sqrt());
    let p = t_tail_quadrature(t, 5.0, norm);

    let r = two_sample_t(&a, &b, TVariant::Pooled).unwrap();
    assert_eq!(r.df, 5.0);
    assert!((r.t - t).abs() < 1e-10, "t {} vs {}", r.t, t);
    assert!((r.p - p).abs() < 1e-10, "p {} vs {}", r.p, p);
}

#[test]
fn chi_square_worked_examples() {
    let (c, p) = chi_square_2x2([[10.0, 10.0], [10.0, 10.0]]).unwrap();
    assert_eq!(c, 0.0);
    assert!((p - 1.0).abs() < 1e-15);
    let (c, _) = chi_square_2x2([[50.0, 0.0], [0.0, 50.0]]).unwrap();
    assert!((c - 100.0).abs() < 1e-12);
    assert!(chi_square_2x2([[0.0, 0.0], [3.0, 4.0]]).is_err());
}

#[test]
fn csv_round_trip_is_byte_identical() {
    let m = Manifest::default();
    let spec = CohortSpec::default().with_size(100);
    let records = synth_cohort(&spec, 77).unwrap();
    let mut first = Vec::new();
    write_cohort_csv(&mut first, &records, &m).unwrap();
    let back = read_cohort_csv(first.as_slice(), &m).unwrap();
    assert_eq!(back, records);
    let mut second = Vec::new();
    write_cohort_csv(&mut second, &back, &m).unwrap();
    assert_eq!(first, second);
    assert!(!first.contains(&b'\r'));
}

#[test]
fn generated_records_always_valid() {
    let m = Manifest::default();
    let spec = CohortSpec::default().with_size(12);
    for seed in 0..10_000 {
        for r in synth_cohort(&spec, seed).unwrap() {
            if let Err(v) = r.validate(&m) {
                panic!("seed {seed} record {}: {}", r.id, v.rule);
            }
        }
    }
}

#[test]
fn synthesis_is_deterministic() {
    let spec = CohortSpec::default();
    assert_eq!(synth_cohort(&spec, 3).unwrap(), synth_cohort(&spec, 3).unwrap());
    assert_ne!(synth_cohort(&spec, 3).unwrap(), synth_cohort(&spec, 4).unwrap());
}

#[test]
fn planted_age_gap_is_significant() {
    let m = Manifest::default();
    let records = synth_cohort(&CohortSpec::default(), 1).unwrap();
    let s = cohort_stats(&records, &["age", "female", "afib"], &m, TVariant::Pooled).unwrap();
    assert!(s.features[0].p_value.unwrap() < 0.001);
    assert_eq!((s.n_lvo, s.n_non_lvo), (130, 170));
}

#[test]
fn null_feature_p_values_rarely_small() {
    let m = Manifest::default();
    let spec = CohortSpec::default().with_size(10_000);
    let mut large = 0;
    for seed in 0..100 {
        let records = synth_cohort(&spec, 1000 + seed).unwrap();
        let s = cohort_stats(&records, &["diabetes"], &m, TVariant::Pooled).unwrap();
        if s.features[0].p_value.unwrap() > 0.01 {
            large += 1;
        }
    }
    assert!(large >= 95, "only {large}/100 null p-values above 0.01");
}

#[test]
fn single_class_cohort_is_error() {
    let m = Manifest::default();
    let mut records = synth_cohort(&CohortSpec::default().with_size(20), 0).unwrap();
    for r in &mut records {
        r.lvo = true;
    }
    assert!(cohort_stats(&records, &["age"], &m, TVariant::Pooled).is_err());
}

proptest! {
    #[test]
    fn chi_square_equals_brute_force(a in 0u32..1000, b in 0u32..1000, c in 0u32..1000, d in 0u32..1000) {
        let t = [[a as f64, b as f64], [c as f64, d as f64]];
        let rows = [t[0][0] + t[0][1], t[1][0] + t[1][1]];
        let cols = [t[0][0] + t[1][0], t[0][1] + t[1][1]];
        prop_assume!(rows.iter().chain(&cols).all(|m| *m > 0.0));
        let n = rows[0] + rows[1];
        let mut brute = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let e = rows[i] * cols[j] / n;
                brute += (t[i][j] - e) * (t[i][j] - e) / e;
            }
        }
        let (chi2, p) = chi_square_2x2(t).unwrap();
        prop_assert!((chi2 - brute).abs() <= 1e-12 * brute.max(1.0));
        prop_assert!((0.0..=1.0).contains(&p));
        let swapped = chi_square_2x2([t[1], t[0]]).unwrap().0;
        prop_assert!((swapped - chi2).abs() <= 1e-12 * chi2.max(1.0));
    }

    #[test]
    fn t_test_antisymmetric(
        a in prop::collection::vec(-50.0f64..50.0, 2..20),
        b in prop::collection::vec(-50.0f64..50.0, 2..20),
        welch in any::<bool>(),
    ) {
        let v = if welch { TVariant::Welch } else { TVariant::Pooled };
        let ab = two_sample_t(&a, &b, v).unwrap();
        let ba = two_sample_t(&b, &a, v).unwrap();
        prop_assert_eq!(ab.t, -ba.t);
        prop_assert_eq!(ab.p, ba.p);
        prop_assert!((0.0..=1.0).contains(&ab.p));
    }
}
