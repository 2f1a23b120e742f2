use crate::volume::{SegMask, Volume};
use crate::ImagingError;

/// Soft-tissue HU band, exclusive on both ends.
const SOFT: (i16, i16) = (-100, 200);

#[derive(Debug, Clone)]
pub struct BrainExtraction {
    pub mask: SegMask,
    /// Input with every voxel outside `mask` set to −1000.
    pub stripped: Volume,
}

/// Largest 6-connected soft-tissue component that does not reach the
/// in-plane border of the field. In a head CT that is the intracranial
/// space, enclosed by the skull ring; in an already stripped volume it is
/// the same region enclosed by air, which makes the operation idempotent.
pub fn brain_extract(vol: &Volume) -> Result<BrainExtraction, ImagingError> {
    let [nx, ny, nz] = vol.dims();
    let data = vol.data();
    let soft: Vec<bool> = data.iter().map(|v| *v > SOFT.0 && *v < SOFT.1).collect();
    let mut label = vec![u32::MAX; data.len()];
    let mut best: Option<(usize, u32)> = None;
    let mut stack = Vec::new();
    let mut next = 0u32;
    for start in 0..data.len() {
        if !soft[start] || label[start] != u32::MAX {
            continue;
        }
        let id = next;
        next += 1;
        label[start] = id;
        stack.push(start);
        let (mut size, mut touches) = (0usize, false);
        while let Some(i) = stack.pop() {
            size += 1;
            let x = i % nx;
            let y = (i / nx) % ny;
            let z = i / (nx * ny);
            if x == 0 || y == 0 || x == nx - 1 || y == ny - 1 {
                touches = true;
            }
            let mut visit = |j: usize| {
                if soft[j] && label[j] == u32::MAX {
                    label[j] = id;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < nx {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - nx);
            }
            if y + 1 < ny {
                visit(i + nx);
            }
            if z > 0 {
                visit(i - nx * ny);
            }
            if z + 1 < nz {
                visit(i + nx * ny);
            }
        }
        if !touches && best.is_none_or(|(s, _)| size > s) {
            best = Some((size, id));
        }
    }
    let (_, id) = best.ok_or(ImagingError::NotHeadCt)?;
    let mask: Vec<u8> = label.iter().map(|l| u8::from(*l == id)).collect();
    let stripped: Vec<i16> = data.iter().zip(&mask).map(|(v, m)| if *m == 1 { *v } else { -1000 }).collect();
    Ok(BrainExtraction { mask: vol.with_data(mask)?, stripped: vol.with_data(stripped)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_air_is_not_a_head() {
        let v = Volume::filled([8, 8, 2], [1.0; 3], -1000).unwrap();
        assert!(matches!(brain_extract(&v), Err(ImagingError::NotHeadCt)));
        let flat = Volume::filled([8, 8, 2], [1.0; 3], 35).unwrap();
        assert!(matches!(brain_extract(&flat), Err(ImagingError::NotHeadCt)));
    }

    #[test]
    fn ring_encloses_interior() {
        let mut data = vec![-1000i16; 49];
        for y in 1..6 {
            for x in 1..6 {
                data[y * 7 + x] = if x == 1 || x == 5 || y == 1 || y == 5 { 900 } else { 35 };
            }
        }
        let v = Volume::new([7, 7, 1], [1.0; 3], data).unwrap();
        let e = brain_extract(&v).unwrap();
        assert_eq!(e.mask.count(), 9);
        assert_eq!(brain_extract(&e.stripped).unwrap().mask, e.mask);
    }
}
