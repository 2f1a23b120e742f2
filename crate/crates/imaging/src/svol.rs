//! `SVOL` version 1: magic `SVOL`, u32 version, u32 nx/ny/nz, three f32
//! spacings, u8 dtype (1 = i16, 2 = u8), then the little-endian payload.

use std::path::Path;

use crate::volume::{Grid, SegMask, Volume};
use crate::ImagingError;

const MAGIC: &[u8; 4] = b"SVOL";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 12 + 12 + 1;

pub trait Voxel: Copy {
    const DTYPE: u8;
    const SIZE: usize;
    fn put(self, out: &mut Vec<u8>);
    fn take(bytes: &[u8]) -> Self;
}

impl Voxel for i16 {
    const DTYPE: u8 = 1;
    const SIZE: usize = 2;
    fn put(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn take(bytes: &[u8]) -> Self {
        i16::from_le_bytes([bytes[0], bytes[1]])
    }
}

impl Voxel for u8 {
    const DTYPE: u8 = 2;
    const SIZE: usize = 1;
    fn put(self, out: &mut Vec<u8>) {
        out.push(self);
    }
    fn take(bytes: &[u8]) -> Self {
        bytes[0]
    }
}

pub fn svol_bytes<T: Voxel>(grid: &Grid<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + grid.len() * T::SIZE);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for d in grid.dims() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for s in grid.spacing() {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out.push(T::DTYPE);
    for v in grid.data() {
        v.put(&mut out);
    }
    out
}

pub fn svol_from_bytes<T: Voxel>(bytes: &[u8]) -> Result<Grid<T>, ImagingError> {
    let bad = |m: String| ImagingError::Format(m);
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("file is {} bytes, shorter than the header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(bad("bad magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let dims = [u32_at(8) as usize, u32_at(12) as usize, u32_at(16) as usize];
    let spacing = [0, 1, 2].map(|k| f32::from_le_bytes(bytes[20 + 4 * k..24 + 4 * k].try_into().unwrap()));
    let dtype = bytes[32];
    if dtype != T::DTYPE {
        return Err(bad(format!("dtype code {dtype}, expected {}", T::DTYPE)));
    }
    let n = dims.iter().try_fold(1usize, |a, d| a.checked_mul(*d)).ok_or_else(|| bad("dimensions overflow".into()))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != n * T::SIZE {
        return Err(bad(format!("payload is {} bytes, expected {}", payload.len(), n * T::SIZE)));
    }
    let data = payload.chunks_exact(T::SIZE).map(T::take).collect();
    Grid::new(dims, spacing, data)
}

pub fn write_volume(vol: &Volume, path: impl AsRef<Path>) -> Result<(), ImagingError> {
    std::fs::write(path, svol_bytes(vol))?;
    Ok(())
}

pub fn read_volume(path: impl AsRef<Path>) -> Result<Volume, ImagingError> {
    svol_from_bytes(&std::fs::read(path)?)
}

pub fn write_mask(mask: &SegMask, path: impl AsRef<Path>) -> Result<(), ImagingError> {
    std::fs::write(path, svol_bytes(mask))?;
    Ok(())
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<SegMask, ImagingError> {
    let m: SegMask = svol_from_bytes(&std::fs::read(path)?)?;
    if m.data().iter().any(|v| *v > 1) {
        return Err(ImagingError::Format("mask voxels must be 0 or 1".into()));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let v = Volume::new([2, 1, 1], [0.5, 0.5, 5.0], vec![-1000, 7]).unwrap();
        let b = svol_bytes(&v);
        assert_eq!(&b[..4], b"SVOL");
        assert_eq!(b[4..8], 1u32.to_le_bytes());
        assert_eq!(b[8..12], 2u32.to_le_bytes());
        assert_eq!(b[32], 1);
        assert_eq!(b[33..], [0x18, 0xfc, 7, 0]);
        assert_eq!(svol_from_bytes::<i16>(&b).unwrap(), v);
    }

    #[test]
    fn rejects_corruption() {
        let v = Volume::new([2, 2, 1], [1.0; 3], vec![1, 2, 3, 4]).unwrap();
        let mut b = svol_bytes(&v);
        assert!(svol_from_bytes::<u8>(&b).is_err());
        b.pop();
        assert!(svol_from_bytes::<i16>(&b).is_err());
        let mut c = svol_bytes(&v);
        c[0] = b'X';
        assert!(svol_from_bytes::<i16>(&c).is_err());
    }
}

/// Binary portable graymap (P5) of slice `z`, `[lo, hi]` mapped to 0–255.
pub fn slice_pgm(vol: &Volume, z: usize, lo: i16, hi: i16) -> Vec<u8> {
    let [nx, ny, _] = vol.dims();
    let mut out = format!("P5\n{nx} {ny}\n255\n").into_bytes();
    let span = (hi as f64 - lo as f64).max(1.0);
    out.extend(vol.slice(z).iter().map(|v| ((*v as f64 - lo as f64) / span * 255.0).round().clamp(0.0, 255.0) as u8));
    out
}
