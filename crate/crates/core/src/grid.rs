//! Sparse voxel addressing: world/grid coordinate transforms and filter-cube
//! enumeration.
//!
//! Cells are half-open cubes `[i*r, (i+1)*r)` per axis, so a point on a cell
//! boundary belongs to the cell on the higher side. Indices pack into a
//! single 64-bit key (21 signed bits per axis) for sparse hash storage.

use thiserror::Error;

/// Signed per-axis range representable by [`VoxelIndex::pack`].
pub const PACK_AXIS_MIN: i64 = -(1 << 20);
pub const PACK_AXIS_MAX: i64 = (1 << 20) - 1;

const AXIS_MASK: u64 = (1 << 21) - 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("non-finite world coordinate {0}")]
    NonFiniteCoordinate(f64),
    #[error("voxel index ({0}, {1}, {2}) outside the packable range of +/-2^20 cells per axis")]
    IndexOutOfRange(i64, i64, i64),
    #[error("resolution must be positive and finite, got {0}")]
    BadResolution(f64),
    #[error("filter size must be an odd positive integer, got {0}")]
    BadFilterSize(usize),
}

/// Integer grid cell along x, y, z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VoxelIndex {
    pub i: i64,
    pub j: i64,
    pub k: i64,
}

impl VoxelIndex {
    pub fn new(i: i64, j: i64, k: i64) -> Self {
        Self { i, j, k }
    }

    /// Packs the index into a 64-bit key, 21 signed bits per axis.
    pub fn pack(self) -> Result<u64, GridError> {
        for a in [self.i, self.j, self.k] {
            if !(PACK_AXIS_MIN..=PACK_AXIS_MAX).contains(&a) {
                return Err(GridError::IndexOutOfRange(self.i, self.j, self.k));
            }
        }
        Ok(((self.i as u64 & AXIS_MASK) << 42)
            | ((self.j as u64 & AXIS_MASK) << 21)
            | (self.k as u64 & AXIS_MASK))
    }

    /// Inverse of [`pack`](Self::pack).
    pub fn unpack(key: u64) -> Self {
        fn axis(bits: u64) -> i64 {
            let v = (bits & AXIS_MASK) as i64;
            if v > PACK_AXIS_MAX {
                v - (1 << 21)
            } else {
                v
            }
        }
        Self {
            i: axis(key >> 42),
            j: axis(key >> 21),
            k: axis(key),
        }
    }
}

impl std::fmt::Display for VoxelIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.i, self.j, self.k)
    }
}

/// Voxel grid geometry: cell edge length and the width of the cube of
/// neighboring cells each observation updates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    resolution: f64,
    filter_size: usize,
}

impl GridConfig {
    pub fn new(resolution: f64, filter_size: usize) -> Result<Self, GridError> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(GridError::BadResolution(resolution));
        }
        if filter_size == 0 || filter_size.is_multiple_of(2) {
            return Err(GridError::BadFilterSize(filter_size));
        }
        Ok(Self {
            resolution,
            filter_size,
        })
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn filter_size(&self) -> usize {
        self.filter_size
    }

    /// Cells on each side of the center cell along one axis.
    pub fn half_width(&self) -> i64 {
        (self.filter_size / 2) as i64
    }
}

/// Index of the cell containing `p`, floor semantics.
pub fn world_to_index(p: [f64; 3], cfg: &GridConfig) -> Result<VoxelIndex, GridError> {
    let inv = 1.0 / cfg.resolution;
    let mut cells = [0_i64; 3];
    for (cell, &coord) in cells.iter_mut().zip(p.iter()) {
        if !coord.is_finite() {
            return Err(GridError::NonFiniteCoordinate(coord));
        }
        *cell = (coord * inv).floor() as i64;
    }
    Ok(VoxelIndex::new(cells[0], cells[1], cells[2]))
}

/// World position of the center of cell `v`.
pub fn index_to_centroid(v: VoxelIndex, cfg: &GridConfig) -> [f64; 3] {
    let r = cfg.resolution;
    [
        (v.i as f64 + 0.5) * r,
        (v.j as f64 + 0.5) * r,
        (v.k as f64 + 0.5) * r,
    ]
}

/// The `filter_size^3` cells of the axis-aligned cube centered at `v`, in
/// (i, j, k) lexicographic order.
pub fn neighbors(v: VoxelIndex, cfg: &GridConfig) -> Vec<VoxelIndex> {
    let h = cfg.half_width();
    let mut out = Vec::with_capacity(cfg.filter_size.pow(3));
    for di in -h..=h {
        for dj in -h..=h {
            for dk in -h..=h {
                out.push(VoxelIndex::new(v.i + di, v.j + dj, v.k + dk));
            }
        }
    }
    out
}
