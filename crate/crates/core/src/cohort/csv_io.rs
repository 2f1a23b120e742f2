use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use super::manifest::Manifest;
use super::record::{PatientRecord, Sex, WeakSide};
use super::CohortError;

const TRAILING: [&str; 4] = ["lvo", "mca_dot_present", "weak_side", "scan_id"];

/// Exact header row: `id`, every manifest column, then label and scan link.
pub fn cohort_header(manifest: &Manifest) -> Vec<String> {
    std::iter::once("id".to_string())
        .chain(manifest.features.iter().map(|f| f.name.clone()))
        .chain(TRAILING.iter().map(|s| s.to_string()))
        .collect()
}

fn fmt_num(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

pub fn write_cohort_csv<W: Write>(
    out: W,
    records: &[PatientRecord],
    manifest: &Manifest,
) -> Result<(), CohortError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .quote_style(csv::QuoteStyle::Necessary)
        .from_writer(out);
    w.write_record(cohort_header(manifest))?;
    for r in records {
        let mut row = Vec::with_capacity(manifest.features.len() + 5);
        row.push(r.id.clone());
        for def in &manifest.features {
            let v = r.feature(&def.name).map_err(|_| CohortError::Manifest(format!("unknown column {:?}", def.name)))?;
            row.push(fmt_num(v));
        }
        row.push(if r.lvo { "1" } else { "0" }.to_string());
        row.push(match r.mca_dot_present {
            Some(true) => "1".into(),
            Some(false) => "0".into(),
            None => String::new(),
        });
        row.push(r.weak_side.as_str().to_string());
        row.push(r.scan_id.clone().unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_cohort_csv_file(
    path: impl AsRef<Path>,
    records: &[PatientRecord],
    manifest: &Manifest,
) -> Result<(), CohortError> {
    let mut buf = Vec::new();
    write_cohort_csv(&mut buf, records, manifest)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn load_cohort_csv(path: impl AsRef<Path>, manifest: &Manifest) -> Result<Vec<PatientRecord>, CohortError> {
    let f = std::fs::File::open(path)?;
    read_cohort_csv(f, manifest)
}

/// Parses and validates a cohort CSV. Rows are numbered from 1 (first data row).
pub fn read_cohort_csv<R: Read>(input: R, manifest: &Manifest) -> Result<Vec<PatientRecord>, CohortError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let expected = cohort_header(manifest);
    let found: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if found != expected {
        return Err(CohortError::Header { expected, found });
    }
    let n_feat = manifest.features.len();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        let field = |c: usize| rec.get(c).unwrap_or("");
        let parse_err = |column: &str, value: &str, reason: String| CohortError::Parse {
            row,
            column: column.to_string(),
            value: value.to_string(),
            reason,
        };
        let id = field(0).to_string();
        let mut r = PatientRecord::blank(id.clone(), 0.0, Sex::Male, false);
        for (j, def) in manifest.features.iter().enumerate() {
            let raw = field(j + 1);
            let v = if raw.is_empty() {
                None
            } else {
                let x: f64 = raw.parse().map_err(|_| parse_err(&def.name, raw, "not a number".into()))?;
                if !x.is_finite() {
                    return Err(parse_err(&def.name, raw, "not finite".into()));
                }
                Some(x)
            };
            r.set_feature(&def.name, v).map_err(|e| parse_err(&def.name, raw, e))?;
        }
        let lvo_raw = field(n_feat + 1);
        r.lvo = match lvo_raw {
            "1" => true,
            "0" => false,
            _ => return Err(parse_err("lvo", lvo_raw, "expected 0 or 1".into())),
        };
        let dot_raw = field(n_feat + 2);
        r.mca_dot_present = match dot_raw {
            "1" => Some(true),
            "0" => Some(false),
            "" => None,
            _ => return Err(parse_err("mca_dot_present", dot_raw, "expected 0, 1 or empty".into())),
        };
        let side_raw = field(n_feat + 3);
        r.weak_side = WeakSide::parse(side_raw)
            .ok_or_else(|| parse_err("weak_side", side_raw, "expected left/right/none/unknown".into()))?;
        let scan = field(n_feat + 4);
        r.scan_id = (!scan.is_empty()).then(|| scan.to_string());

        r.validate(manifest)
            .map_err(|v| CohortError::Validation { row, id: id.clone(), rule: v.rule })?;
        if !seen.insert(id.clone()) {
            return Err(CohortError::DuplicateId { row, id });
        }
        out.push(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_with_row(manifest: &Manifest, edit: impl Fn(&str, &mut String)) -> String {
        let header = cohort_header(manifest);
        let mut row = Vec::new();
        for name in &header {
            let mut v = match name.as_str() {
                "id" => "P1".to_string(),
                "age" => "70".into(),
                "female" => "0".into(),
                "weak_side" => "none".into(),
                "lvo" => "1".into(),
                _ => String::new(),
            };
            edit(name, &mut v);
            row.push(v);
        }
        format!("{}\n{}\n", header.join(","), row.join(","))
    }

    #[test]
    fn empty_total_with_observed_eye_passes_through() {
        let m = Manifest::default();
        let text = csv_with_row(&m, |name, v| {
            if name == "gcs_eye" {
                *v = "4".into();
            }
        });
        let recs = read_cohort_csv(text.as_bytes(), &m).unwrap();
        assert_eq!(recs[0].gcs_total, None);
        assert_eq!(recs[0].gcs_eye, Some(4));
    }

    #[test]
    fn underage_row_is_a_validation_error() {
        let m = Manifest::default();
        let text = csv_with_row(&m, |name, v| {
            if name == "age" {
                *v = "17".into();
            }
        });
        match read_cohort_csv(text.as_bytes(), &m).unwrap_err() {
            CohortError::Validation { rule, row, .. } => {
                assert_eq!(rule, "age ≥ 18");
                assert_eq!(row, 1);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn malformed_number_names_row_and_column() {
        let m = Manifest::default();
        let text = csv_with_row(&m, |name, v| {
            if name == "bp_systolic" {
                *v = "12o".into();
            }
        });
        match read_cohort_csv(text.as_bytes(), &m).unwrap_err() {
            CohortError::Parse { row, column, .. } => {
                assert_eq!((row, column.as_str()), (1, "bp_systolic"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn duplicate_ids_and_bad_headers_rejected() {
        let m = Manifest::default();
        let one = csv_with_row(&m, |_, _| {});
        let row = one.lines().nth(1).unwrap();
        let twice = format!("{one}{row}\n");
        assert!(matches!(read_cohort_csv(twice.as_bytes(), &m), Err(CohortError::DuplicateId { row: 2, .. })));
        let bad = one.replacen("age", "years", 1);
        assert!(matches!(read_cohort_csv(bad.as_bytes(), &m), Err(CohortError::Header { .. })));
    }
}
