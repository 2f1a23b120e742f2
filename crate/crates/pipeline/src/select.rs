use serde::{Deserialize, Serialize};

use lvo_core::cohort::{two_sample_t, TVariant};
use lvo_imaging::SegMask;

use crate::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceChoice {
    pub index: usize,
    /// No slice had any segmented pixel; `index` is the middle slice.
    pub fallback: bool,
}

/// Slice with the most segmented pixels, lowest index on ties.
pub fn select_slice_by_area(areas: &[usize]) -> SliceChoice {
    let mut best = 0;
    for (z, a) in areas.iter().enumerate() {
        if *a > areas[best] {
            best = z;
        }
    }
    if areas.iter().all(|a| *a == 0) {
        return SliceChoice { index: areas.len() / 2, fallback: true };
    }
    SliceChoice { index: best, fallback: false }
}

pub fn select_slice(mask: &SegMask) -> SliceChoice {
    let nz = mask.dims()[2];
    let areas: Vec<usize> = (0..nz).map(|z| mask.slice(z).iter().filter(|v| **v != 0).count()).collect();
    select_slice_by_area(&areas)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnScore {
    pub column: usize,
    pub t: f64,
    pub p: f64,
}

/// The `k` columns with the smallest two-sample t-test p-values between
/// positive and negative rows; ties go to the larger `|t|`, then the lower
/// index. `rows` is `n × p`, row-major.
pub fn select_top_k(
    rows: &[Vec<f64>],
    labels: &[bool],
    k: usize,
    variant: TVariant,
) -> Result<Vec<ColumnScore>, PipelineError> {
    if rows.len() != labels.len() {
        return Err(PipelineError::Config(format!("{} rows but {} labels", rows.len(), labels.len())));
    }
    let p = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != p) {
        return Err(PipelineError::Config("ragged feature rows".into()));
    }
    if k > p {
        return Err(PipelineError::Config(format!("k = {k} exceeds {p} columns")));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let n_pos = labels.iter().filter(|l| **l).count();
    if n_pos < 2 || labels.len() - n_pos < 2 {
        return Err(PipelineError::Config("feature selection needs at least 2 rows per class".into()));
    }
    let mut scores = Vec::with_capacity(p);
    let mut a = Vec::with_capacity(n_pos);
    let mut b = Vec::with_capacity(labels.len() - n_pos);
    for j in 0..p {
        a.clear();
        b.clear();
        for (r, l) in rows.iter().zip(labels) {
            if *l { a.push(r[j]) } else { b.push(r[j]) }
        }
        let t = two_sample_t(&a, &b, variant)?;
        scores.push(ColumnScore { column: j, t: t.t, p: t.p });
    }
    scores.sort_by(|x, y| {
        x.p.total_cmp(&y.p).then(y.t.abs().total_cmp(&x.t.abs())).then(x.column.cmp(&y.column))
    });
    scores.truncate(k);
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_and_fallback() {
        assert_eq!(select_slice_by_area(&[0, 4, 9, 4]), SliceChoice { index: 2, fallback: false });
        assert_eq!(select_slice_by_area(&[3, 5, 5]), SliceChoice { index: 1, fallback: false });
        assert_eq!(select_slice_by_area(&[0; 28]), SliceChoice { index: 14, fallback: true });
    }

    #[test]
    fn k_bounds() {
        let rows = vec![vec![1.0, 2.0]; 4];
        let labels = [true, true, false, false];
        assert!(select_top_k(&rows, &labels, 0, TVariant::Pooled).unwrap().is_empty());
        assert!(select_top_k(&rows, &labels, 3, TVariant::Pooled).is_err());
    }
}
