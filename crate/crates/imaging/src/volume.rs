use serde::{Deserialize, Serialize};

use crate::ImagingError;

/// Patient-side hemisphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hemisphere {
    Left,
    Right,
}

impl Hemisphere {
    pub fn opposite(self) -> Self {
        match self {
            Hemisphere::Left => Hemisphere::Right,
            Hemisphere::Right => Hemisphere::Left,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Hemisphere::Left => "left",
            Hemisphere::Right => "right",
        }
    }
}

/// Regular 3-D grid, `x` fastest, then `y`, then `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    dims: [usize; 3],
    spacing: [f32; 3],
    data: Vec<T>,
}

/// Hounsfield units.
pub type Volume = Grid<i16>;
/// Binary voxels, 0 or 1.
pub type SegMask = Grid<u8>;

impl<T: Copy> Grid<T> {
    pub fn new(dims: [usize; 3], spacing: [f32; 3], data: Vec<T>) -> Result<Self, ImagingError> {
        if dims.iter().any(|d| *d == 0) {
            return Err(ImagingError::Dims(dims));
        }
        if spacing.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(ImagingError::Spacing(spacing));
        }
        let expected = dims[0] * dims[1] * dims[2];
        if data.len() != expected {
            return Err(ImagingError::VoxelCount { expected, got: data.len() });
        }
        Ok(Self { dims, spacing, data })
    }

    pub fn filled(dims: [usize; 3], spacing: [f32; 3], value: T) -> Result<Self, ImagingError> {
        Self::new(dims, spacing, vec![value; dims.iter().product()])
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f32; 3] {
        self.spacing
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn slice_len(&self) -> usize {
        self.dims[0] * self.dims[1]
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        (z * self.dims[1] + y) * self.dims[0] + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> T {
        self.data[self.index(x, y, z)]
    }

    pub fn slice(&self, z: usize) -> &[T] {
        let n = self.slice_len();
        &self.data[z * n..(z + 1) * n]
    }

    /// Same grid with new voxel values.
    pub fn with_data<U: Copy>(&self, data: Vec<U>) -> Result<Grid<U>, ImagingError> {
        Grid::new(self.dims, self.spacing, data)
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Grid<U> {
        Grid { dims: self.dims, spacing: self.spacing, data: self.data.iter().map(|v| f(*v)).collect() }
    }

    /// Mirror about the vertical midline (`x ↦ nx − 1 − x`).
    pub fn flip_x(&self) -> Self {
        let nx = self.dims[0];
        let mut data = self.data.clone();
        for row in data.chunks_mut(nx) {
            row.reverse();
        }
        Self { dims: self.dims, spacing: self.spacing, data }
    }
}

impl SegMask {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|v| **v != 0).count()
    }

    pub fn check_dims(&self, vol: &Volume) -> Result<(), ImagingError> {
        if self.dims != vol.dims() {
            return Err(ImagingError::DimMismatch { volume: vol.dims(), mask: self.dims });
        }
        Ok(())
    }
}
