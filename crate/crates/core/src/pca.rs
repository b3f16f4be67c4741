//! PCA compression of full-dimension embeddings to the map's latent
//! dimension, and the affine lift back.
//!
//! The transform is fit offline on a feature corpus and serialized; maps
//! never refit online. Because the lift is affine, lifting a voxel's expected
//! feature equals the expectation of lifted features, so decoding against a
//! full-dimension dictionary stays consistent.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Maximum allowed deviation of `basis^T basis` from the identity.
pub const ORTHONORMALITY_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PcaError {
    #[error("need at least {needed} samples to fit {needed} components, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("component count must be between 1 and the input dimension {dim}, got {requested}")]
    BadComponentCount { requested: usize, dim: usize },
    #[error("samples have inconsistent dimensions")]
    RaggedSamples,
    #[error("samples contain non-finite values")]
    NonFiniteSample,
    #[error("sample covariance is rank-deficient: component {component} has no variance")]
    RankDeficient { component: usize },
    #[error("vector dimension {got} does not match the transform ({expected})")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("basis is not orthonormal within {ORTHONORMALITY_TOL}")]
    NotOrthonormal,
}

/// Affine encode/decode pair between the full and reduced feature spaces:
/// `encode(y) = B^T (y - mean)`, `decode(z) = mean + B z` with orthonormal
/// columns in `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaTransform {
    mean: Vec<f64>,
    /// Column-major, `c_full` rows by `c_reduced` columns.
    basis: Vec<f64>,
    c_full: usize,
    c_reduced: usize,
}

impl PcaTransform {
    /// Builds a transform from raw parts, checking shapes and orthonormality.
    pub fn from_parts(
        mean: Vec<f64>,
        basis: Vec<f64>,
        c_full: usize,
        c_reduced: usize,
    ) -> Result<Self, PcaError> {
        if c_reduced == 0 || c_reduced > c_full {
            return Err(PcaError::BadComponentCount {
                requested: c_reduced,
                dim: c_full,
            });
        }
        if mean.len() != c_full || basis.len() != c_full * c_reduced {
            return Err(PcaError::DimensionMismatch {
                expected: c_full,
                got: mean.len(),
            });
        }
        if !mean.iter().all(|v| v.is_finite()) || !basis.iter().all(|v| v.is_finite()) {
            return Err(PcaError::NonFiniteSample);
        }
        let t = Self {
            mean,
            basis,
            c_full,
            c_reduced,
        };
        for a in 0..c_reduced {
            for b in a..c_reduced {
                let dot: f64 = (0..c_full)
                    .map(|r| t.basis_at(r, a) * t.basis_at(r, b))
                    .sum();
                let want = if a == b { 1.0 } else { 0.0 };
                if (dot - want).abs() > ORTHONORMALITY_TOL {
                    return Err(PcaError::NotOrthonormal);
                }
            }
        }
        Ok(t)
    }

    /// Fits the top `c_reduced` principal directions of `samples` by
    /// eigendecomposition of the sample covariance.
    ///
    /// Columns come in descending eigenvalue order with a fixed sign
    /// convention (largest-magnitude entry positive), so repeated fits of the
    /// same data serialize identically.
    pub fn fit(samples: &[Vec<f32>], c_reduced: usize) -> Result<Self, PcaError> {
        let n = samples.len();
        if n < c_reduced {
            return Err(PcaError::TooFewSamples {
                needed: c_reduced,
                got: n,
            });
        }
        let c_full = samples[0].len();
        if c_reduced == 0 || c_reduced > c_full {
            return Err(PcaError::BadComponentCount {
                requested: c_reduced,
                dim: c_full,
            });
        }
        for s in samples {
            if s.len() != c_full {
                return Err(PcaError::RaggedSamples);
            }
            if !s.iter().all(|v| v.is_finite()) {
                return Err(PcaError::NonFiniteSample);
            }
        }

        let mut mean = vec![0.0f64; c_full];
        for s in samples {
            for (m, &v) in mean.iter_mut().zip(s) {
                *m += v as f64;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }

        let centered = DMatrix::from_fn(n, c_full, |r, c| samples[r][c] as f64 - mean[c]);
        let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
        let cov = centered.transpose() * &centered / denom;
        let eig = cov.symmetric_eigen();

        let mut order: Vec<usize> = (0..c_full).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .partial_cmp(&eig.eigenvalues[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });

        let top = eig.eigenvalues[order[0]].max(0.0);
        let rank_tol = top * 1e-12 + f64::MIN_POSITIVE;
        let mut basis = vec![0.0f64; c_full * c_reduced];
        for (col, &src) in order.iter().take(c_reduced).enumerate() {
            if eig.eigenvalues[src] <= rank_tol {
                return Err(PcaError::RankDeficient { component: col });
            }
            let column: DVector<f64> = eig.eigenvectors.column(src).into();
            let mut flip_at = 0;
            for r in 1..c_full {
                if column[r].abs() > column[flip_at].abs() {
                    flip_at = r;
                }
            }
            let sign = if column[flip_at] < 0.0 { -1.0 } else { 1.0 };
            for r in 0..c_full {
                basis[col * c_full + r] = sign * column[r];
            }
        }

        Self::from_parts(mean, basis, c_full, c_reduced)
    }

    pub fn c_full(&self) -> usize {
        self.c_full
    }

    pub fn c_reduced(&self) -> usize {
        self.c_reduced
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Column-major basis, `c_full` rows by `c_reduced` columns.
    pub fn basis(&self) -> &[f64] {
        &self.basis
    }

    fn basis_at(&self, row: usize, col: usize) -> f64 {
        self.basis[col * self.c_full + row]
    }

    /// Projects a full-dimension vector into the reduced space.
    pub fn encode(&self, y: &[f64]) -> Result<Vec<f64>, PcaError> {
        if y.len() != self.c_full {
            return Err(PcaError::DimensionMismatch {
                expected: self.c_full,
                got: y.len(),
            });
        }
        let mut z = vec![0.0f64; self.c_reduced];
        for (col, zc) in z.iter_mut().enumerate() {
            let column = &self.basis[col * self.c_full..(col + 1) * self.c_full];
            *zc = column
                .iter()
                .zip(y.iter().zip(&self.mean))
                .map(|(&b, (&yr, &m))| b * (yr - m))
                .sum();
        }
        Ok(z)
    }

    /// Lifts a reduced vector back to the full space.
    pub fn decode(&self, z: &[f64]) -> Result<Vec<f64>, PcaError> {
        if z.len() != self.c_reduced {
            return Err(PcaError::DimensionMismatch {
                expected: self.c_reduced,
                got: z.len(),
            });
        }
        let mut y = self.mean.clone();
        for (col, &zc) in z.iter().enumerate() {
            for (r, yr) in y.iter_mut().enumerate() {
                *yr += self.basis_at(r, col) * zc;
            }
        }
        Ok(y)
    }

    /// Convenience for `f32` feature vectors: encode and narrow back.
    pub fn encode_f32(&self, y: &[f32]) -> Result<Vec<f32>, PcaError> {
        let wide: Vec<f64> = y.iter().map(|&v| v as f64).collect();
        Ok(self.encode(&wide)?.into_iter().map(|v| v as f32).collect())
    }

    /// Mean squared reconstruction error of `decode(encode(y))` over samples.
    pub fn reconstruction_mse(&self, samples: &[Vec<f32>]) -> Result<f64, PcaError> {
        if samples.is_empty() {
            return Ok(0.0);
        }
        let mut total = 0.0;
        let mut count = 0usize;
        for s in samples {
            let wide: Vec<f64> = s.iter().map(|&v| v as f64).collect();
            let back = self.decode(&self.encode(&wide)?)?;
            for (a, b) in wide.iter().zip(&back) {
                total += (a - b).powi(2);
                count += 1;
            }
        }
        Ok(total / count as f64)
    }
}
