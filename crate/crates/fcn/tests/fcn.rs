use std::time::Instant;

use lvo_fcn::{bce, predict_dot, train_fcn, FcnConfig, FcnModel, LossKind, Optimizer, TrainConfig, TrainStatus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_image(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>()).collect()
}

/// A disc of radius `r` at `(cy, cx)` over faint noise.
fn disc_sample(h: usize, w: usize, cy: f64, cx: f64, r: f64, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let mut img = Vec::with_capacity(h * w);
    let mut mask = Vec::with_capacity(h * w);
    for y in 0..h {
        for x in 0..w {
            let inside = (y as f64 - cy).powi(2) + (x as f64 - cx).powi(2) <= r * r;
            img.push(if inside { 0.9 } else { 0.3 } + 0.05 * rng.random::<f64>());
            mask.push(if inside { 1.0 } else { 0.0 });
        }
    }
    (img, mask)
}

pub fn gradcheck(seed: u64, n_params: usize) -> (f64, usize) {
    let cfg = FcnConfig::tiny();
    let mut model = FcnModel::init(cfg.clone(), seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Nonzero biases keep pre-activations away from the ReLU kink.
    for p in model.params_mut() {
        if p.name.ends_with(".bias") {
            p.data.iter_mut().for_each(|b| *b = rng.random_range(-0.2..0.2));
        }
    }
    let (img, mask) = disc_sample(16, 16, 7.0, 9.0, 3.0, &mut rng);
    let (img2, mask2) = disc_sample(16, 16, 4.0, 4.0, 2.0, &mut rng);
    let batch = [(&img[..], &mask[..]), (&img2[..], &mask2[..])];
    let (_, grads) = model.loss_and_grad(&batch, LossKind::BceDice).unwrap();
    let total: usize = model.params().iter().map(|p| p.data.len()).sum();
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..n_params {
        let mut flat = rng.random_range(0..total);
        let mut k = 0;
        while flat >= model.params()[k].data.len() {
            flat -= model.params()[k].data.len();
            k += 1;
        }
        let orig = model.params()[k].data[flat];
        model.params_mut()[k].data[flat] = orig + eps;
        let (lp, _) = model.loss_and_grad(&batch, LossKind::BceDice).unwrap();
        model.params_mut()[k].data[flat] = orig - eps;
        let (lm, _) = model.loss_and_grad(&batch, LossKind::BceDice).unwrap();
        model.params_mut()[k].data[flat] = orig;
        let numeric = (lp - lm) / (2.0 * eps);
        let analytic = grads[k][flat];
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    (worst, n_params)
}

#[test]
fn gradients_match_finite_differences() {
    let start = Instant::now();
    let (worst, _) = gradcheck(11, 50);
    assert!(worst < 1e-4, "worst relative error {worst:e}");
    assert!(start.elapsed().as_secs() < 60);
}

#[test]
fn parameter_count_matches_closed_form() {
    for skip in [true, false] {
        let cfg = FcnConfig { skip_connections: skip, ..FcnConfig::default() };
        let m = FcnModel::zeros(cfg.clone()).unwrap();
        let conv = |cin: usize, cout: usize| 9 * cin * cout + cout;
        let c: Vec<usize> = (0..=3).map(|i| 8usize << i).collect();
        let mut n = 0;
        let mut cin = 1;
        for &ci in &c {
            n += conv(cin, ci) + conv(ci, ci);
            cin = ci;
        }
        for i in (0..3).rev() {
            let first_in = if skip { 2 * c[i] } else { c[i] };
            n += conv(c[i + 1], c[i]) + conv(first_in, c[i]) + conv(c[i], c[i]);
        }
        n += 8 + 1;
        assert_eq!(m.param_count(), n, "skip = {skip}");
    }
    let with = FcnModel::zeros(FcnConfig::default()).unwrap().param_count();
    let without = FcnModel::zeros(FcnConfig { skip_connections: false, ..FcnConfig::default() }).unwrap().param_count();
    // Each decoder stage's first block conv loses C_i input channels.
    assert_eq!(with - without, 9 * (8 * 8 + 16 * 16 + 32 * 32));
}

#[test]
fn output_shape_follows_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for size in [64, 128] {
        let cfg = FcnConfig { height: size, width: size, ..FcnConfig::default() };
        let m = FcnModel::init(cfg, 2).unwrap();
        let f = m.forward(&random_image(&mut rng, size * size)).unwrap();
        assert_eq!(f.probs.len(), size * size);
        assert!(f.probs.iter().all(|p| *p > 0.0 && *p < 1.0));
        assert_eq!(f.bottleneck.len(), 64 * (size / 8) * (size / 8));
    }
}

#[test]
fn default_features_have_16384_values_and_separate_images() {
    let m = FcnModel::init(FcnConfig::default(), 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (a, _) = disc_sample(128, 128, 40.0, 40.0, 8.0, &mut rng);
    let (b, _) = disc_sample(128, 128, 90.0, 70.0, 20.0, &mut rng);
    let fa = m.extract_features(&a).unwrap();
    let fb = m.extract_features(&b).unwrap();
    assert_eq!(fa.len(), 16384);
    assert_ne!(fa, fb);
    let zero = FcnModel::zeros(FcnConfig::default()).unwrap();
    assert!(zero.extract_features(&a).unwrap().iter().all(|v| *v == 0.0));
}

#[test]
fn constant_image_under_uniform_kernels_gives_constant_interior() {
    // Every kernel tap equal makes each layer translation invariant away from
    // the zero-padded border; the bottleneck interior is then constant per
    // channel.
    let cfg = FcnConfig { height: 64, width: 64, ..FcnConfig::default() };
    let mut m = FcnModel::zeros(cfg).unwrap();
    for p in m.params_mut() {
        if p.name.ends_with(".weight") {
            let fan_in = (p.shape[1] * p.shape[2] * p.shape[3]) as f64;
            p.data.iter_mut().for_each(|w| *w = 1.0 / fan_in);
        }
    }
    let b = m.extract_features(&vec![0.5; 64 * 64]).unwrap();
    let (c, h, w) = (64, 8, 8);
    for ch in 0..c {
        let centre = b[ch * h * w + 4 * w + 4];
        assert!(centre > 0.0);
        for y in 3..5 {
            for x in 3..5 {
                assert!((b[ch * h * w + y * w + x] - centre).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn duplicated_batch_leaves_loss_and_grads_unchanged() {
    let m = FcnModel::init(FcnConfig::tiny(), 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (i1, m1) = disc_sample(16, 16, 5.0, 5.0, 2.0, &mut rng);
    let (i2, m2) = disc_sample(16, 16, 10.0, 8.0, 3.0, &mut rng);
    let one = [(&i1[..], &m1[..]), (&i2[..], &m2[..])];
    let two = [one[0], one[1], one[0], one[1]];
    let (l1, g1) = m.loss_and_grad(&one, LossKind::BceDice).unwrap();
    let (l2, g2) = m.loss_and_grad(&two, LossKind::BceDice).unwrap();
    assert!((l1 - l2).abs() <= 1e-12);
    for (a, b) in g1.iter().flatten().zip(g2.iter().flatten()) {
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn bce_matches_direct_probabilities() {
    let m = FcnModel::init(FcnConfig::tiny(), 9).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (img, mask) = disc_sample(16, 16, 8.0, 8.0, 3.0, &mut rng);
    let (loss, _) = m.loss_and_grad(&[(&img, &mask)], LossKind::Bce).unwrap();
    let probs = m.forward(&img).unwrap().probs;
    assert!((loss - bce(&probs, &mask)).abs() < 1e-9);
}

#[test]
fn non_binary_mask_rejected() {
    let m = FcnModel::zeros(FcnConfig::tiny()).unwrap();
    let img = vec![0.0; 256];
    let mask = vec![0.5; 256];
    assert!(m.loss_and_grad(&[(&img, &mask)], LossKind::Bce).is_err());
}

#[test]
fn init_is_seeded() {
    let a = FcnModel::init(FcnConfig::default(), 1).unwrap();
    let b = FcnModel::init(FcnConfig::default(), 1).unwrap();
    let c = FcnModel::init(FcnConfig::default(), 2).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn persistence_is_bit_exact() {
    let m = FcnModel::init(FcnConfig::tiny(), 21).unwrap();
    let back = FcnModel::from_json(&m.to_json()).unwrap();
    assert_eq!(m, back);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let img = random_image(&mut rng, 256);
        let a = m.forward(&img).unwrap();
        let b = back.forward(&img).unwrap();
        assert!(a.probs.iter().zip(&b.probs).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    m.save(&path).unwrap();
    assert_eq!(FcnModel::load(&path).unwrap(), m);
    let bad = m.to_json().replace("fcn-v1", "fcn-v0");
    assert!(FcnModel::from_json(&bad).is_err());
}

fn tiny_data(seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..4).map(|i| disc_sample(16, 16, 4.0 + 2.0 * i as f64, 10.0 - i as f64, 2.5, &mut rng)).collect()
}

#[test]
fn zero_learning_rate_keeps_parameters() {
    let data = tiny_data(1);
    let refs: Vec<(&[f64], &[f64])> = data.iter().map(|(a, b)| (&a[..], &b[..])).collect();
    let m = FcnModel::init(FcnConfig::tiny(), 1).unwrap();
    let cfg = TrainConfig { learning_rate: 0.0, epochs: 3, batch_size: 2, ..TrainConfig::default() };
    let (out, state) = train_fcn(m.clone(), &refs, &cfg).unwrap();
    assert_eq!(out, m);
    assert_eq!(state.loss_history.len(), 6);
}

#[test]
fn training_is_reproducible_and_reduces_loss() {
    let data = tiny_data(2);
    let refs: Vec<(&[f64], &[f64])> = data.iter().map(|(a, b)| (&a[..], &b[..])).collect();
    let cfg = TrainConfig { learning_rate: 1e-2, epochs: 30, batch_size: 2, seed: 4, ..TrainConfig::default() };
    let run = || train_fcn(FcnModel::init(FcnConfig::tiny(), 3).unwrap(), &refs, &cfg).unwrap();
    let (m1, s1) = run();
    let (m2, s2) = run();
    assert_eq!(s1.loss_history, s2.loss_history);
    assert_eq!(m1, m2);
    assert_eq!(s1.status, TrainStatus::Completed);
    assert!(s1.loss_history.last().unwrap() < &(0.5 * s1.loss_history[0]));
    let sgd = TrainConfig { optimizer: Optimizer::Sgd, learning_rate: 0.1, ..cfg };
    let (_, s3) = train_fcn(FcnModel::init(FcnConfig::tiny(), 3).unwrap(), &refs, &sgd).unwrap();
    assert!(s3.loss_history.last().unwrap() < &s3.loss_history[0]);
}

#[test]
fn divergence_stops_at_last_finite_step() {
    let data = tiny_data(3);
    let refs: Vec<(&[f64], &[f64])> = data.iter().map(|(a, b)| (&a[..], &b[..])).collect();
    let cfg = TrainConfig { optimizer: Optimizer::Sgd, learning_rate: 1e300, epochs: 5, batch_size: 4, ..TrainConfig::default() };
    let (m, state) = train_fcn(FcnModel::init(FcnConfig::tiny(), 3).unwrap(), &refs, &cfg).unwrap();
    assert_eq!(state.status, TrainStatus::Diverged);
    assert!(m.params().iter().all(|p| p.data.iter().all(|v| v.is_finite())));
}

#[test]
fn dot_flags() {
    let zero = FcnModel::zeros(FcnConfig::tiny()).unwrap();
    let mut bg = zero.clone();
    for p in bg.params_mut() {
        if p.name == "head.bias" {
            p.data[0] = -5.0;
        }
    }
    let img = vec![0.2; 256];
    let r = predict_dot(&bg, &[img.clone(), img.clone()], 3.0).unwrap();
    assert_eq!(r.areas, vec![0, 0]);
    assert!(!r.flag);
    // Zero weights put every pixel at 0.5, one big component.
    let r = predict_dot(&zero, &[img.clone()], 3.0).unwrap();
    assert!(r.flag && r.areas[0] == 256);
    assert!(!predict_dot(&zero, &[img], f64::INFINITY).unwrap().flag);
}

#[test]
fn resized_model_agrees_on_interior_structure() {
    let m = FcnModel::init(FcnConfig::tiny(), 6).unwrap();
    let big = m.with_input_size(32, 32).unwrap();
    assert_eq!(big.params(), m.params());
    assert_eq!(big.forward(&vec![0.4; 1024]).unwrap().probs.len(), 1024);
    assert!(m.with_input_size(20, 20).is_err());
}
