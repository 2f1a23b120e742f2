use crate::model::FcnModel;
use crate::FcnError;

pub const DEFAULT_AREA_THRESHOLD: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DotPrediction {
    /// Largest 4-connected component of `prob ≥ 0.5`, per slice.
    pub areas: Vec<usize>,
    pub flag: bool,
}

/// Size of the largest 4-connected `true` region.
pub fn largest_component(mask: &[bool], h: usize, w: usize) -> usize {
    assert_eq!(mask.len(), h * w, "mask shape");
    let mut seen = vec![false; mask.len()];
    let mut stack = Vec::new();
    let mut best = 0;
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut size = 0;
        while let Some(i) = stack.pop() {
            size += 1;
            let (y, x) = (i / w, i % w);
            let mut visit = |j: usize| {
                if mask[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        best = best.max(size);
    }
    best
}

/// Flags a dot when any slice's largest component reaches `area_threshold`
/// pixels. An infinite threshold never flags.
pub fn predict_dot(model: &FcnModel, slices: &[Vec<f64>], area_threshold: f64) -> Result<DotPrediction, FcnError> {
    let (h, w) = (model.config().height, model.config().width);
    let mut areas = Vec::with_capacity(slices.len());
    for s in slices {
        let f = model.forward(s)?;
        let mask: Vec<bool> = f.probs.iter().map(|p| *p >= 0.5).collect();
        areas.push(largest_component(&mask, h, w));
    }
    let flag = areas.iter().any(|a| *a as f64 >= area_threshold);
    Ok(DotPrediction { areas, flag })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn components_are_four_connected() {
        #[rustfmt::skip]
        let m = [
            true,  false, true,
            false, true,  true,
            false, false, false,
        ];
        assert_eq!(largest_component(&m, 3, 3), 3);
        assert_eq!(largest_component(&[false; 9], 3, 3), 0);
    }
}
