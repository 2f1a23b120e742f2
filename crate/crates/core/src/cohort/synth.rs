//! Synthetic cohorts with class-conditional marginals.
//!
//! Continuous fields are Gaussian per class, binary fields Bernoulli per
//! class. GCS subscales are a uniformly random decomposition of the sampled
//! total. Missingness is completely at random with a per-column rate.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::record::{PatientRecord, Sex, WeakSide};
use super::CohortError;
use crate::rng;

/// A per-class parameter: `(LVO, non-LVO)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassPair {
    pub lvo: f64,
    pub non_lvo: f64,
}

impl ClassPair {
    pub const fn new(lvo: f64, non_lvo: f64) -> Self {
        Self { lvo, non_lvo }
    }

    pub fn pick(&self, lvo: bool) -> f64 {
        if lvo {
            self.lvo
        } else {
            self.non_lvo
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassGaussian {
    pub mean: ClassPair,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub size: usize,
    /// Fraction of LVO subjects; the LVO count is `round(size · prevalence)`.
    pub prevalence: f64,
    pub age: ClassGaussian,
    pub gcs_total: ClassGaussian,
    pub bp_systolic: ClassGaussian,
    pub bp_diastolic: ClassGaussian,
    pub female: ClassPair,
    pub speech_deficit: ClassPair,
    pub facial_weakness: ClassPair,
    pub limb_weakness: ClassPair,
    pub diabetes: ClassPair,
    pub hypertension: ClassPair,
    pub smoker_ever: ClassPair,
    /// P(current smoker | ever smoked); the remainder are previous smokers.
    pub smoker_current_given_ever: ClassPair,
    pub afib: ClassPair,
    pub atherosclerosis: ClassPair,
    pub valvular_heart_disease: ClassPair,
    pub cardioembolism: ClassPair,
    pub prior_stroke: ClassPair,
    pub ischemic_heart_disease: ClassPair,
    pub mca_dot: ClassPair,
    /// Per-column missing-completely-at-random rate, keyed by manifest name.
    pub missing_rate: BTreeMap<String, f64>,
}

impl Default for CohortSpec {
    fn default() -> Self {
        let missing_rate = ["bp_systolic", "bp_diastolic", "gcs_total", "gcs_eye", "gcs_verbal", "gcs_motor"]
            .iter()
            .map(|c| (c.to_string(), 0.05))
            .collect();
        Self {
            size: 300,
            prevalence: 130.0 / 300.0,
            age: ClassGaussian { mean: ClassPair::new(80.5, 71.4), sd: 9.0 },
            gcs_total: ClassGaussian { mean: ClassPair::new(10.7, 13.68), sd: 3.0 },
            bp_systolic: ClassGaussian { mean: ClassPair::new(158.0, 146.0), sd: 15.0 },
            bp_diastolic: ClassGaussian { mean: ClassPair::new(84.0, 84.0), sd: 15.0 },
            female: ClassPair::new(0.674, 0.316),
            speech_deficit: ClassPair::new(0.45, 0.45),
            facial_weakness: ClassPair::new(0.315, 0.259),
            limb_weakness: ClassPair::new(0.992, 0.741),
            diabetes: ClassPair::new(0.30, 0.30),
            hypertension: ClassPair::new(0.70, 0.70),
            smoker_ever: ClassPair::new(0.45, 0.28),
            smoker_current_given_ever: ClassPair::new(0.5, 0.5),
            afib: ClassPair::new(0.369, 0.188),
            atherosclerosis: ClassPair::new(0.35, 0.18),
            valvular_heart_disease: ClassPair::new(0.10, 0.06),
            cardioembolism: ClassPair::new(0.32, 0.12),
            prior_stroke: ClassPair::new(0.20, 0.20),
            ischemic_heart_disease: ClassPair::new(0.15, 0.15),
            // 0.48·130 + 0.07·170 ≈ 74 dot-positive subjects out of 300.
            mca_dot: ClassPair::new(0.48, 0.07),
            missing_rate,
        }
    }
}

impl CohortSpec {
    pub fn with_size(mut self, size: usize) -> Self {
        self.size = size;
        self
    }

    pub fn without_missingness(mut self) -> Self {
        self.missing_rate.clear();
        self
    }

    pub fn n_lvo(&self) -> usize {
        (self.size as f64 * self.prevalence).round() as usize
    }

    fn validate(&self) -> Result<(), CohortError> {
        let err = |m: String| Err(CohortError::Spec(m));
        if self.size < 2 {
            return err(format!("size {} < 2", self.size));
        }
        if !(0.0..=1.0).contains(&self.prevalence) {
            return err(format!("prevalence {} outside [0,1]", self.prevalence));
        }
        let n_lvo = self.n_lvo();
        if n_lvo == 0 || n_lvo == self.size {
            return err(format!("size {} with prevalence {} leaves a class empty", self.size, self.prevalence));
        }
        let probs = [
            ("female", self.female),
            ("speech_deficit", self.speech_deficit),
            ("facial_weakness", self.facial_weakness),
            ("limb_weakness", self.limb_weakness),
            ("diabetes", self.diabetes),
            ("hypertension", self.hypertension),
            ("smoker_ever", self.smoker_ever),
            ("smoker_current_given_ever", self.smoker_current_given_ever),
            ("afib", self.afib),
            ("atherosclerosis", self.atherosclerosis),
            ("valvular_heart_disease", self.valvular_heart_disease),
            ("cardioembolism", self.cardioembolism),
            ("prior_stroke", self.prior_stroke),
            ("ischemic_heart_disease", self.ischemic_heart_disease),
            ("mca_dot", self.mca_dot),
        ];
        for (name, p) in probs {
            for v in [p.lvo, p.non_lvo] {
                if !(0.0..=1.0).contains(&v) {
                    return err(format!("{name} probability {v} outside [0,1]"));
                }
            }
        }
        for (name, g) in [
            ("age", self.age),
            ("gcs_total", self.gcs_total),
            ("bp_systolic", self.bp_systolic),
            ("bp_diastolic", self.bp_diastolic),
        ] {
            if !(g.sd >= 0.0) || !g.mean.lvo.is_finite() || !g.mean.non_lvo.is_finite() {
                return err(format!("{name}: sd must be ≥ 0 and means finite"));
            }
        }
        for (name, r) in &self.missing_rate {
            if !(0.0..=1.0).contains(r) {
                return err(format!("missing rate for {name} = {r} outside [0,1]"));
            }
            if matches!(name.as_str(), "age" | "female") {
                return err(format!("{name} is required and cannot be missing"));
            }
        }
        Ok(())
    }
}

fn gaussian<R: Rng>(rng: &mut R, g: &ClassGaussian, lvo: bool) -> f64 {
    let mean = g.mean.pick(lvo);
    if g.sd == 0.0 {
        return mean;
    }
    Normal::new(mean, g.sd).expect("validated sd").sample(rng)
}

fn bern<R: Rng>(rng: &mut R, p: &ClassPair, lvo: bool) -> bool {
    rng.random::<f64>() < p.pick(lvo)
}

/// Uniformly random `(eye, verbal, motor)` with the given total.
fn decompose_gcs<R: Rng>(rng: &mut R, total: u8) -> (u8, u8, u8) {
    let mut triples = Vec::new();
    for e in 1..=4u8 {
        for v in 1..=5u8 {
            let m = i16::from(total) - i16::from(e) - i16::from(v);
            if (1..=6).contains(&m) {
                triples.push((e, v, m as u8));
            }
        }
    }
    triples[rng.random_range(0..triples.len())]
}

/// Generates `spec.size` records with exactly `spec.n_lvo()` LVO subjects.
/// Bit-deterministic in `(spec, seed)`.
pub fn synth_cohort(spec: &CohortSpec, seed: u64) -> Result<Vec<PatientRecord>, CohortError> {
    spec.validate()?;
    let mut rng = rng::stream(seed, "cohort");
    let n_lvo = spec.n_lvo();
    let mut labels: Vec<bool> = (0..spec.size).map(|i| i < n_lvo).collect();
    labels.shuffle(&mut rng);

    let mut out = Vec::with_capacity(spec.size);
    for (i, &lvo) in labels.iter().enumerate() {
        let age = (gaussian(&mut rng, &spec.age, lvo).clamp(18.0, 110.0) * 10.0).round() / 10.0;
        let sex = if bern(&mut rng, &spec.female, lvo) { Sex::Female } else { Sex::Male };
        let mut r = PatientRecord::blank(format!("P{:04}", i + 1), age, sex, lvo);
        r.scan_id = Some(format!("S{:04}", i + 1));

        r.speech_deficit = Some(bern(&mut rng, &spec.speech_deficit, lvo));
        let limb = bern(&mut rng, &spec.limb_weakness, lvo);
        let limb_left = rng.random::<bool>();
        r.limb_weakness = Some(limb);
        r.weakness_left = Some(limb && limb_left);
        r.weakness_right = Some(limb && !limb_left);
        let facial = bern(&mut rng, &spec.facial_weakness, lvo);
        // Facial weakness follows the limb side when both are present.
        let facial_left = if limb { limb_left } else { rng.random::<bool>() };
        r.facial_weakness = Some(facial);
        r.facial_weakness_left = Some(facial && facial_left);
        r.facial_weakness_right = Some(facial && !facial_left);

        r.diabetes = Some(bern(&mut rng, &spec.diabetes, lvo));
        r.hypertension = Some(bern(&mut rng, &spec.hypertension, lvo));
        let ever = bern(&mut rng, &spec.smoker_ever, lvo);
        let current = ever && bern(&mut rng, &spec.smoker_current_given_ever, lvo);
        r.smoker_ever = Some(ever);
        r.smoker_current = Some(current);
        r.smoker_previous = Some(ever && !current);
        r.afib = Some(bern(&mut rng, &spec.afib, lvo));
        r.atherosclerosis = Some(bern(&mut rng, &spec.atherosclerosis, lvo));
        r.valvular_heart_disease = Some(bern(&mut rng, &spec.valvular_heart_disease, lvo));
        r.cardioembolism = Some(bern(&mut rng, &spec.cardioembolism, lvo));
        r.prior_stroke = Some(bern(&mut rng, &spec.prior_stroke, lvo));
        r.ischemic_heart_disease = Some(bern(&mut rng, &spec.ischemic_heart_disease, lvo));

        let sys = gaussian(&mut rng, &spec.bp_systolic, lvo).round().clamp(60.0, 260.0);
        let dia = gaussian(&mut rng, &spec.bp_diastolic, lvo).round().clamp(30.0, 150.0).min(sys);
        r.bp_systolic = Some(sys);
        r.bp_diastolic = Some(dia);

        let total = gaussian(&mut rng, &spec.gcs_total, lvo).round().clamp(3.0, 15.0) as u8;
        let (e, v, m) = decompose_gcs(&mut rng, total);
        r.gcs_total = Some(total);
        r.gcs_eye = Some(e);
        r.gcs_verbal = Some(v);
        r.gcs_motor = Some(m);

        r.mca_dot_present = Some(bern(&mut rng, &spec.mca_dot, lvo));

        // One uniform draw per (record, column) keeps the stream layout
        // independent of which rates are zero.
        for (name, rate) in &spec.missing_rate {
            let u = rng.random::<f64>();
            if u < *rate {
                r.set_feature(name, None).map_err(CohortError::Spec)?;
            }
        }
        r.weak_side = match (r.weakness_left, r.weakness_right) {
            (Some(true), _) => WeakSide::Left,
            (_, Some(true)) => WeakSide::Right,
            (Some(false), Some(false)) => WeakSide::None,
            _ => WeakSide::Unknown,
        };
        out.push(r);
    }
    Ok(out)
}
