use serde::{Deserialize, Serialize};

use super::manifest::Manifest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sex {
    Female,
    Male,
}

/// Side of limb weakness, in patient coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeakSide {
    Left,
    Right,
    None,
    Unknown,
}

impl WeakSide {
    pub fn as_str(self) -> &'static str {
        match self {
            WeakSide::Left => "left",
            WeakSide::Right => "right",
            WeakSide::None => "none",
            WeakSide::Unknown => "unknown",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "left" => WeakSide::Left,
            "right" => WeakSide::Right,
            "none" => WeakSide::None,
            "unknown" => WeakSide::Unknown,
            _ => return None,
        })
    }
}

/// One subject's level-1/level-2 fields plus label and scan link.
/// `None` means the field was not recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub id: String,
    pub age: f64,
    pub sex: Sex,

    pub speech_deficit: Option<bool>,
    pub facial_weakness: Option<bool>,
    pub facial_weakness_left: Option<bool>,
    pub facial_weakness_right: Option<bool>,
    pub limb_weakness: Option<bool>,
    pub weakness_left: Option<bool>,
    pub weakness_right: Option<bool>,

    pub diabetes: Option<bool>,
    pub hypertension: Option<bool>,
    pub smoker_ever: Option<bool>,
    pub smoker_current: Option<bool>,
    pub smoker_previous: Option<bool>,
    pub afib: Option<bool>,
    pub atherosclerosis: Option<bool>,
    pub valvular_heart_disease: Option<bool>,
    pub cardioembolism: Option<bool>,
    pub prior_stroke: Option<bool>,
    pub ischemic_heart_disease: Option<bool>,

    pub bp_systolic: Option<f64>,
    pub bp_diastolic: Option<f64>,
    pub gcs_total: Option<u8>,
    pub gcs_eye: Option<u8>,
    pub gcs_verbal: Option<u8>,
    pub gcs_motor: Option<u8>,

    pub lvo: bool,
    pub mca_dot_present: Option<bool>,
    pub weak_side: WeakSide,
    pub scan_id: Option<String>,
}

/// A record failed one of its cross-field rules; `rule` names it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleViolation {
    pub rule: String,
}

fn b2f(b: Option<bool>) -> Option<f64> {
    b.map(|v| if v { 1.0 } else { 0.0 })
}

fn u2f(v: Option<u8>) -> Option<f64> {
    v.map(f64::from)
}

impl PatientRecord {
    /// A record with every optional field missing.
    pub fn blank(id: impl Into<String>, age: f64, sex: Sex, lvo: bool) -> Self {
        Self {
            id: id.into(),
            age,
            sex,
            speech_deficit: None,
            facial_weakness: None,
            facial_weakness_left: None,
            facial_weakness_right: None,
            limb_weakness: None,
            weakness_left: None,
            weakness_right: None,
            diabetes: None,
            hypertension: None,
            smoker_ever: None,
            smoker_current: None,
            smoker_previous: None,
            afib: None,
            atherosclerosis: None,
            valvular_heart_disease: None,
            cardioembolism: None,
            prior_stroke: None,
            ischemic_heart_disease: None,
            bp_systolic: None,
            bp_diastolic: None,
            gcs_total: None,
            gcs_eye: None,
            gcs_verbal: None,
            gcs_motor: None,
            lvo,
            mca_dot_present: None,
            weak_side: WeakSide::Unknown,
            scan_id: None,
        }
    }

    /// Numeric value of a manifest column; `Err(())` for an unknown name.
    pub fn feature(&self, name: &str) -> Result<Option<f64>, ()> {
        Ok(match name {
            "age" => Some(self.age),
            "female" => Some(if self.sex == Sex::Female { 1.0 } else { 0.0 }),
            "speech_deficit" => b2f(self.speech_deficit),
            "facial_weakness" => b2f(self.facial_weakness),
            "facial_weakness_left" => b2f(self.facial_weakness_left),
            "facial_weakness_right" => b2f(self.facial_weakness_right),
            "limb_weakness" => b2f(self.limb_weakness),
            "weakness_left" => b2f(self.weakness_left),
            "weakness_right" => b2f(self.weakness_right),
            "diabetes" => b2f(self.diabetes),
            "hypertension" => b2f(self.hypertension),
            "smoker_ever" => b2f(self.smoker_ever),
            "smoker_current" => b2f(self.smoker_current),
            "smoker_previous" => b2f(self.smoker_previous),
            "afib" => b2f(self.afib),
            "atherosclerosis" => b2f(self.atherosclerosis),
            "valvular_heart_disease" => b2f(self.valvular_heart_disease),
            "cardioembolism" => b2f(self.cardioembolism),
            "prior_stroke" => b2f(self.prior_stroke),
            "ischemic_heart_disease" => b2f(self.ischemic_heart_disease),
            "bp_systolic" => self.bp_systolic,
            "bp_diastolic" => self.bp_diastolic,
            "gcs_total" => u2f(self.gcs_total),
            "gcs_eye" => u2f(self.gcs_eye),
            "gcs_verbal" => u2f(self.gcs_verbal),
            "gcs_motor" => u2f(self.gcs_motor),
            _ => return Err(()),
        })
    }

    /// Sets a manifest column from a numeric value. Range checks are the
    /// caller's job; this only rejects values the field type cannot hold.
    pub fn set_feature(&mut self, name: &str, value: Option<f64>) -> Result<(), String> {
        fn as_bool(v: Option<f64>) -> Result<Option<bool>, String> {
            match v {
                None => Ok(None),
                Some(x) if x == 0.0 => Ok(Some(false)),
                Some(x) if x == 1.0 => Ok(Some(true)),
                Some(x) => Err(format!("{x} is not 0 or 1")),
            }
        }
        fn as_u8(v: Option<f64>) -> Result<Option<u8>, String> {
            match v {
                None => Ok(None),
                Some(x) if x.fract() == 0.0 && (0.0..=255.0).contains(&x) => Ok(Some(x as u8)),
                Some(x) => Err(format!("{x} is not a small integer")),
            }
        }
        match name {
            "age" => self.age = value.ok_or("age is required")?,
            "female" => {
                self.sex = match as_bool(value)?.ok_or("sex is required")? {
                    true => Sex::Female,
                    false => Sex::Male,
                }
            }
            "speech_deficit" => self.speech_deficit = as_bool(value)?,
            "facial_weakness" => self.facial_weakness = as_bool(value)?,
            "facial_weakness_left" => self.facial_weakness_left = as_bool(value)?,
            "facial_weakness_right" => self.facial_weakness_right = as_bool(value)?,
            "limb_weakness" => self.limb_weakness = as_bool(value)?,
            "weakness_left" => self.weakness_left = as_bool(value)?,
            "weakness_right" => self.weakness_right = as_bool(value)?,
            "diabetes" => self.diabetes = as_bool(value)?,
            "hypertension" => self.hypertension = as_bool(value)?,
            "smoker_ever" => self.smoker_ever = as_bool(value)?,
            "smoker_current" => self.smoker_current = as_bool(value)?,
            "smoker_previous" => self.smoker_previous = as_bool(value)?,
            "afib" => self.afib = as_bool(value)?,
            "atherosclerosis" => self.atherosclerosis = as_bool(value)?,
            "valvular_heart_disease" => self.valvular_heart_disease = as_bool(value)?,
            "cardioembolism" => self.cardioembolism = as_bool(value)?,
            "prior_stroke" => self.prior_stroke = as_bool(value)?,
            "ischemic_heart_disease" => self.ischemic_heart_disease = as_bool(value)?,
            "bp_systolic" => self.bp_systolic = value,
            "bp_diastolic" => self.bp_diastolic = value,
            "gcs_total" => self.gcs_total = as_u8(value)?,
            "gcs_eye" => self.gcs_eye = as_u8(value)?,
            "gcs_verbal" => self.gcs_verbal = as_u8(value)?,
            "gcs_motor" => self.gcs_motor = as_u8(value)?,
            other => return Err(format!("unknown column {other:?}")),
        }
        Ok(())
    }

    /// Checks every record invariant; the first broken rule is returned.
    pub fn validate(&self, manifest: &Manifest) -> Result<(), RuleViolation> {
        let fail = |rule: &str| Err(RuleViolation { rule: rule.to_string() });
        if !(self.age >= 18.0) {
            return fail("age ≥ 18");
        }
        if self.id.is_empty() || self.id.contains([',', '"', '\n', '\r']) {
            return fail("id is non-empty and free of commas, quotes and line breaks");
        }
        for def in &manifest.features {
            if let Ok(Some(v)) = self.feature(&def.name) {
                if !def.in_range(v) {
                    return fail(&format!("{} within [{}, {}]", def.name, def.min, def.max));
                }
            }
        }
        if let (Some(t), Some(e), Some(v), Some(m)) =
            (self.gcs_total, self.gcs_eye, self.gcs_verbal, self.gcs_motor)
        {
            if u16::from(t) != u16::from(e) + u16::from(v) + u16::from(m) {
                return fail("gcs_total = gcs_eye + gcs_verbal + gcs_motor");
            }
        }
        if self.smoker_current == Some(true) && self.smoker_previous == Some(true) {
            return fail("smoker_current and smoker_previous not both true");
        }
        if (self.smoker_current == Some(true) || self.smoker_previous == Some(true))
            && self.smoker_ever == Some(false)
        {
            return fail("current or previous smoker implies smoker_ever");
        }
        if (self.facial_weakness_left == Some(true) || self.facial_weakness_right == Some(true))
            && self.facial_weakness == Some(false)
        {
            return fail("sided facial weakness implies facial_weakness");
        }
        if (self.weakness_left == Some(true) || self.weakness_right == Some(true))
            && self.limb_weakness == Some(false)
        {
            return fail("sided weakness implies limb_weakness");
        }
        if let (Some(s), Some(d)) = (self.bp_systolic, self.bp_diastolic) {
            if s < d {
                return fail("bp_systolic ≥ bp_diastolic");
            }
        }
        let left = self.weakness_left == Some(true);
        let right = self.weakness_right == Some(true);
        let side_ok = match self.weak_side {
            WeakSide::Left => left,
            WeakSide::Right => right,
            WeakSide::None | WeakSide::Unknown => !left && !right,
        };
        if !side_ok {
            return fail("weak_side matches weakness_left/weakness_right");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> PatientRecord {
        let mut r = PatientRecord::blank("P1", 70.0, Sex::Male, false);
        r.weak_side = WeakSide::None;
        r
    }

    #[test]
    fn blank_record_is_valid() {
        assert_eq!(base().validate(&Manifest::default()), Ok(()));
    }

    #[test]
    fn named_rules_fire() {
        let m = Manifest::default();
        let cases: Vec<(Box<dyn Fn(&mut PatientRecord)>, &str)> = vec![
            (Box::new(|r| r.age = 17.0), "age ≥ 18"),
            (
                Box::new(|r| {
                    r.gcs_total = Some(14);
                    r.gcs_eye = Some(4);
                    r.gcs_verbal = Some(5);
                    r.gcs_motor = Some(6);
                }),
                "gcs_total = gcs_eye + gcs_verbal + gcs_motor",
            ),
            (
                Box::new(|r| {
                    r.smoker_current = Some(true);
                    r.smoker_previous = Some(true);
                }),
                "smoker_current and smoker_previous not both true",
            ),
            (
                Box::new(|r| {
                    r.bp_systolic = Some(80.0);
                    r.bp_diastolic = Some(90.0);
                }),
                "bp_systolic ≥ bp_diastolic",
            ),
            (
                Box::new(|r| {
                    r.weakness_left = Some(true);
                    r.limb_weakness = Some(true);
                }),
                "weak_side matches weakness_left/weakness_right",
            ),
        ];
        for (mutate, rule) in cases {
            let mut r = base();
            mutate(&mut r);
            assert_eq!(r.validate(&m).unwrap_err().rule, rule);
        }
    }

    #[test]
    fn feature_accessors_round_trip() {
        let m = Manifest::default();
        let mut r = base();
        for (i, def) in m.features.iter().enumerate() {
            let v = match def.name.as_str() {
                "age" => Some(55.5),
                "bp_systolic" => Some(140.0),
                "bp_diastolic" => None,
                "gcs_total" => Some(12.0),
                _ => Some((i % 2) as f64),
            };
            r.set_feature(&def.name, v).unwrap();
            assert_eq!(r.feature(&def.name), Ok(v), "{}", def.name);
        }
        assert!(r.feature("nope").is_err());
        assert!(r.set_feature("diabetes", Some(0.5)).is_err());
    }
}
