//! Compactly supported distance kernel weighting each observation's influence
//! on nearby voxel centroids.

use crate::grid::{self, GridConfig, VoxelIndex};
use std::f64::consts::TAU;
use thiserror::Error;

/// Weights below this are clamped to exactly zero so that numerically
/// meaningless mass never allocates a voxel.
pub const WEIGHT_FLOOR: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("kernel length must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("distance must be non-negative and finite, got {0}")]
    BadDistance(f64),
}

/// Kernel support radius in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig {
    length: f64,
}

impl KernelConfig {
    pub fn new(length: f64) -> Result<Self, KernelError> {
        if !(length.is_finite() && length > 0.0) {
            return Err(KernelError::BadLength(length));
        }
        Ok(Self { length })
    }

    pub fn length(&self) -> f64 {
        self.length
    }
}

/// Evaluates the sparse kernel at distance `d`:
///
/// `k(d) = (2 + cos(2 pi d/l) (1 - d/l) + sin(2 pi d/l) / (2 pi)) / 3` for
/// `d < l`, and 0 at or beyond the support radius. `k(0) = 1` and
/// `0 <= k <= 1` everywhere, as the extended-likelihood construction
/// requires.
pub fn sparse_kernel(d: f64, cfg: &KernelConfig) -> Result<f64, KernelError> {
    if !d.is_finite() || d < 0.0 {
        return Err(KernelError::BadDistance(d));
    }
    let l = cfg.length;
    if d >= l {
        return Ok(0.0);
    }
    let r = d / l;
    let (sin, cos) = (TAU * r).sin_cos();
    let w = (2.0 + cos * (1.0 - r) + sin / TAU) / 3.0;
    if w < WEIGHT_FLOOR {
        Ok(0.0)
    } else {
        Ok(w.min(1.0))
    }
}

/// Kernel weight of a point on a voxel: `sparse_kernel` of the Euclidean
/// distance from `p` to the centroid of `v`. Non-finite positions get zero
/// weight.
pub fn point_voxel_weight(
    p: [f64; 3],
    v: VoxelIndex,
    grid_cfg: &GridConfig,
    kernel_cfg: &KernelConfig,
) -> f64 {
    let c = grid::index_to_centroid(v, grid_cfg);
    let d2 = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) + (p[2] - c[2]).powi(2);
    sparse_kernel(d2.sqrt(), kernel_cfg).unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kernel(l: f64) -> KernelConfig {
        KernelConfig::new(l).unwrap()
    }

    #[test]
    fn anchor_values() {
        let k = kernel(0.5);
        assert_eq!(sparse_kernel(0.0, &k).unwrap(), 1.0);
        assert_eq!(sparse_kernel(0.5, &k).unwrap(), 0.0);
        // cos(pi) = -1, sin(pi) = 0 => (2 - 0.5) / 3.
        assert!((sparse_kernel(0.25, &k).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_outside_support() {
        let k = kernel(0.5);
        assert_eq!(sparse_kernel(0.5, &k).unwrap(), 0.0);
        assert_eq!(sparse_kernel(0.7, &k).unwrap(), 0.0);
        assert_eq!(sparse_kernel(1e9, &k).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_distance() {
        let k = kernel(0.5);
        assert!(sparse_kernel(-0.1, &k).is_err());
        assert!(sparse_kernel(f64::NAN, &k).is_err());
        assert!(sparse_kernel(f64::INFINITY, &k).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(KernelConfig::new(0.0).is_err());
        assert!(KernelConfig::new(-1.0).is_err());
        assert!(KernelConfig::new(f64::NAN).is_err());
        assert!(KernelConfig::new(0.5).is_ok());
    }

    #[test]
    fn point_weight_examples() {
        let g = GridConfig::new(0.1, 3).unwrap();
        let k = kernel(0.5);
        let v = VoxelIndex::new(0, 0, 0);
        let c = grid::index_to_centroid(v, &g);
        assert_eq!(point_voxel_weight(c, v, &g, &k), 1.0);
        // Offset (0.25, 0, 0) from the centroid: same as sparse_kernel(0.25).
        let p = [c[0] + 0.25, c[1], c[2]];
        assert!((point_voxel_weight(p, v, &g, &k) - 0.5).abs() < 1e-12);
        // At or beyond the support radius.
        let q = [c[0] + 0.5, c[1], c[2]];
        assert_eq!(point_voxel_weight(q, v, &g, &k), 0.0);
        let far = [c[0] + 3.0, c[1] - 2.0, c[2]];
        assert_eq!(point_voxel_weight(far, v, &g, &k), 0.0);
    }

    #[test]
    fn bounded_on_dense_grid() {
        let k = kernel(0.5);
        for n in 0..10_000 {
            let d = 0.6 * n as f64 / 10_000.0;
            let w = sparse_kernel(d, &k).unwrap();
            assert!((0.0..=1.0).contains(&w), "k({d}) = {w} out of range");
        }
    }

    proptest! {
        #[test]
        fn bounded_for_any_length(d in 0.0f64..10.0, l in 0.01f64..5.0) {
            let w = sparse_kernel(d, &kernel(l)).unwrap();
            prop_assert!((0.0..=1.0).contains(&w));
            if d >= l {
                prop_assert_eq!(w, 0.0);
            }
        }
    }
}
