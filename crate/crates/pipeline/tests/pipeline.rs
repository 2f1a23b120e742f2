use std::collections::BTreeMap;

use lvo_core::cohort::manifest::MANIFEST_V1;
use lvo_core::cohort::{synth_cohort, CohortSpec, Manifest, PatientRecord, TVariant};
use lvo_imaging::SegMask;
use lvo_pipeline::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn manifest() -> Manifest {
    Manifest::parse(MANIFEST_V1).unwrap()
}

fn cohort(n: usize, seed: u64) -> Vec<PatientRecord> {
    synth_cohort(&CohortSpec::default().with_size(n), seed).unwrap()
}

/// 40-wide random vectors; column 7 is shifted for LVO records, and one
/// record in ten has no scan.
fn planted_images(records: &[PatientRecord], seed: u64) -> ImageFeatures {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut v: Vec<f64> = (0..40).map(|_| rng.random::<f64>()).collect();
            if r.lvo {
                v[7] += 0.8;
            }
            (r.id.clone(), (i % 10 != 3).then_some(v))
        })
        .collect()
}

fn small_config(seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig { seed, n_folds: 5, top_k: 5, ..Default::default() };
    cfg.gbt.num_rounds = 30;
    cfg
}

proptest! {
    #[test]
    fn select_slice_matches_exhaustive_scan(
        nz in 1usize..9,
        density in 0.0f64..0.3,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (nx, ny) = (6, 5);
        let data: Vec<u8> = (0..nx * ny * nz).map(|_| u8::from(rng.random::<f64>() < density)).collect();
        let mask = SegMask::new([nx, ny, nz], [1.0, 1.0, 1.0], data.clone()).unwrap();
        let areas: Vec<usize> = data.chunks(nx * ny).map(|s| s.iter().filter(|v| **v != 0).count()).collect();
        let max = *areas.iter().max().unwrap();
        let choice = select_slice(&mask);
        if max == 0 {
            prop_assert_eq!(choice, SliceChoice { index: nz / 2, fallback: true });
        } else {
            let first = areas.iter().position(|a| *a == max).unwrap();
            prop_assert_eq!(choice, SliceChoice { index: first, fallback: false });
        }
    }
}

#[test]
fn all_zero_mask_of_28_slices_falls_back_to_14() {
    let mask = SegMask::filled([4, 4, 28], [1.0, 1.0, 5.0], 0).unwrap();
    assert_eq!(select_slice(&mask), SliceChoice { index: 14, fallback: true });
}

#[test]
fn top_k_recovers_planted_column() {
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<bool> = (0..40).map(|i| i % 2 == 0).collect();
        let planted = rng.random_range(0..30);
        let rows: Vec<Vec<f64>> = labels
            .iter()
            .map(|&l| {
                (0..30)
                    .map(|j| if j == planted { f64::from(u8::from(l)) * 10.0 + rng.random::<f64>() } else { rng.random() })
                    .collect()
            })
            .collect();
        let top = select_top_k(&rows, &labels, 1, TVariant::Pooled).unwrap();
        assert_eq!(top[0].column, planted, "seed {seed}");
    }
}

#[test]
fn constant_column_ranks_behind_discriminative_ones() {
    let labels = [true, true, true, false, false, false];
    let rows: Vec<Vec<f64>> = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| vec![4.0, if l { 2.0 } else { 1.0 } + 0.1 * i as f64, 0.3 * (i % 2) as f64])
        .collect();
    let all = select_top_k(&rows, &labels, 3, TVariant::Pooled).unwrap();
    assert_eq!(all[0].column, 1);
    assert_eq!(all[2].column, 0);
    assert_eq!(all[2].p, 1.0);
    assert!(select_top_k(&rows, &labels, 0, TVariant::Pooled).unwrap().is_empty());
    assert!(select_top_k(&rows, &labels, 4, TVariant::Pooled).is_err());
}

#[test]
fn levels_nest_and_vectorize_to_expected_widths() {
    let m = manifest();
    let records = cohort(30, 2);
    let images = planted_images(&records, 2);
    let l1 = LevelSpec::clinical(&m, 1).unwrap().names();
    let l2 = LevelSpec::clinical(&m, 2).unwrap().names();
    let l3 = LevelSpec::with_image(&m, &(0..10).collect::<Vec<_>>()).unwrap().names();
    assert_eq!(l2[..l1.len()], l1[..]);
    assert_eq!(l3[..l2.len()], l2[..]);
    for (level, spec, width) in [
        (1, LevelSpec::clinical(&m, 1).unwrap(), 9),
        (2, LevelSpec::clinical(&m, 2).unwrap(), 24),
        (3, LevelSpec::with_image(&m, &(0..10).collect::<Vec<_>>()).unwrap(), 34),
    ] {
        let x = vectorize(&records, &spec, (level == 3).then_some(&images)).unwrap();
        assert_eq!((x.n_rows(), x.n_cols()), (30, width));
    }
}

#[test]
fn scanless_records_get_masked_image_columns() {
    let m = manifest();
    let records = cohort(20, 3);
    let mut images = planted_images(&records, 3);
    images.remove(&records[0].id);
    let spec = LevelSpec::with_image(&m, &[7, 8]).unwrap();
    let x = vectorize(&records, &spec, Some(&images)).unwrap();
    assert_eq!(x.get(0, 24), None);
    assert_eq!(x.get(3, 25), None); // mapped to None
    assert!(x.get(1, 24).is_some());
    let bad = LevelSpec::with_image(&m, &[40]).unwrap();
    assert!(matches!(vectorize(&records, &bad, Some(&images)), Err(PipelineError::UnknownColumn(_))));
    let mut unknown = LevelSpec::clinical(&m, 1).unwrap();
    unknown.columns[0].name = "shoe_size".into();
    assert!(matches!(vectorize(&records, &unknown, None), Err(PipelineError::UnknownColumn(_))));
}

#[test]
fn experiment_rows_are_consistent_and_deterministic() {
    let m = manifest();
    let records = cohort(150, 4);
    let images = planted_images(&records, 4);
    let cfg = small_config(9);
    let a = run_experiment(&m, &records, Some(&images), &cfg).unwrap();
    let b = run_experiment(&m, &records, Some(&images), &cfg).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    assert_eq!(report_csv(&a.levels), report_csv(&b.levels));
    assert_eq!(report_svg(&a).unwrap(), report_svg(&b).unwrap());
    assert_eq!((a.n_train, a.n_test), (100, 50));
    assert_eq!(a.levels.len(), 3);
    for r in &a.levels {
        assert!((r.youden - (r.sensitivity + r.specificity - 1.0)).abs() < 1e-12);
        for v in [r.sensitivity, r.specificity, r.accuracy, r.auc, r.cutoff] {
            assert!((0.0..=1.0).contains(&v));
        }
    }
    assert_eq!(a.levels.iter().map(|r| r.n_features).collect::<Vec<_>>(), [9, 24, 29]);
    assert_eq!(a.fits[2].image_columns[0].column, 7);
    assert_eq!(ExperimentReport::from_json(&a.to_json().unwrap()).unwrap(), a);
    assert_eq!(report_csv(&a.levels).lines().count(), 4);
}

#[test]
fn test_labels_do_not_reach_fitting() {
    let m = manifest();
    let records = cohort(150, 5);
    let images = planted_images(&records, 5);
    let cfg = small_config(2);
    let labels: Vec<bool> = records.iter().map(|r| r.lvo).collect();
    let split = split_rows(&labels, cfg.train_fraction, cfg.stratify, cfg.seed).unwrap();
    let base = run_experiment_on(&m, &records, Some(&images), &split, &cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut shuffled = records.clone();
    let mut test_labels: Vec<bool> = split.test.iter().map(|&i| records[i].lvo).collect();
    test_labels.shuffle(&mut rng);
    for (&i, l) in split.test.iter().zip(test_labels) {
        shuffled[i].lvo = l;
    }
    let permuted = run_experiment_on(&m, &shuffled, Some(&images), &split, &cfg).unwrap();
    assert_eq!(base.fits, permuted.fits);
    for (a, b) in base.levels.iter().zip(&permuted.levels) {
        assert_eq!(a.scores, b.scores);
    }
    assert_ne!(base.test_labels, permuted.test_labels);
}

#[test]
fn level_toggles_and_missing_images() {
    let m = manifest();
    let records = cohort(120, 6);
    let cfg = ExperimentConfig { levels: vec![2, 1], ..small_config(1) };
    let r = run_experiment(&m, &records, None, &cfg).unwrap();
    assert_eq!(r.levels.iter().map(|l| l.level).collect::<Vec<_>>(), [2, 1]);
    let cfg3 = ExperimentConfig { levels: vec![3], ..small_config(1) };
    assert!(run_experiment(&m, &records, None, &cfg3).is_err());
    let empty: ImageFeatures = BTreeMap::new();
    assert!(run_experiment(&m, &records, Some(&empty), &cfg3).is_err());
}

#[test]
fn report_files_are_written() {
    let m = manifest();
    let records = cohort(120, 7);
    let r = run_experiment(&m, &records, None, &ExperimentConfig { levels: vec![1, 2], ..small_config(3) }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_report(&r, dir.path()).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(csv.starts_with(REPORT_HEADER));
    let svg = std::fs::read_to_string(dir.path().join("roc.svg")).unwrap();
    assert!(svg.contains("Level 2"));
}

#[test]
fn network_overfits_four_dot_crops() {
    use lvo_fcn::{predict_dot, train_fcn, TrainConfig};
    let scans = ScanSpec::default();
    let prep = PreprocessConfig::default();
    let mut patches = Vec::new();
    let mut scan0 = None;
    for i in 0..4 {
        let (scan, mask, dot) = aux_scan(&scans, &prep, "overfit", 2 * i, 3).unwrap();
        assert!(dot);
        let c = crop_sample(&scan, &mask);
        let k = c.mask.iter().position(|v| *v > 0.0).unwrap();
        let (y0, x0) = ((k / 128).saturating_sub(12).min(96), (k % 128).saturating_sub(12).min(96));
        let cut = |s: &[f64]| (y0..y0 + 32).flat_map(|y| s[y * 128 + x0..y * 128 + x0 + 32].to_vec()).collect::<Vec<f64>>();
        patches.push((cut(&c.image), cut(&c.mask)));
        scan0.get_or_insert(scan);
    }
    let spec = DetectorSpec::default();
    let cfg = lvo_fcn::FcnConfig { height: 32, width: 32, ..spec.fcn.clone() };
    let model = lvo_fcn::FcnModel::init(cfg, 1).unwrap();
    let refs: Vec<(&[f64], &[f64])> = patches.iter().map(|(a, b)| (&a[..], &b[..])).collect();
    let train = TrainConfig { epochs: 200, ..spec.train.clone() };
    let (model, _) = train_fcn(model, &refs, &train).unwrap();
    for (img, mask) in &patches {
        let p = model.forward(img).unwrap().probs;
        let inter: f64 = p.iter().zip(mask).map(|(a, b)| a * b).sum();
        let dice = 2.0 * inter / (p.iter().sum::<f64>() + mask.iter().sum::<f64>());
        assert!(dice > 0.9, "soft Dice {dice}");
    }
    let full = model.with_input_size(128, 128).unwrap();
    let scan = scan0.unwrap();
    assert!(predict_dot(&full, &scan.crops.crops[0].slices, 3.0).unwrap().flag);
}
