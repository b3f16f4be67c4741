//! The latent voxel map and its recursive Bayesian update.
//!
//! Each voxel holds a normal-inverse-Wishart belief over the Gaussian
//! generating the latent features observed near it: posterior mean `mu`, the
//! diagonal of the scale matrix `psi_diag`, and a confidence `lam` equal to
//! the kernel mass absorbed so far plus the prior. A frame of observations is
//! folded in with one closed-form conjugate merge per affected voxel:
//!
//! ```text
//! kbar   = sum_i k_i                      (kernel mass of the frame)
//! lam'   = lam + kbar
//! ybar   = sum_i (k_i / kbar) y_i         (kernel-weighted frame mean)
//! mu'    = (lam * mu + kbar * ybar) / lam'
//! psi'   = psi + sbar + (lam * kbar / lam') * (ybar - mu)^2
//! ```
//!
//! where `sbar = sum_i k_i (y_i - ybar)^2` is the weighted scatter of the
//! frame around its own mean (diagonals only). The merge is the exact
//! parallel combination of weighted scatter statistics, so any partition of a
//! point set into frames yields the same posterior up to floating-point
//! rounding, and with a zero prior the mean reduces to the Nadaraya-Watson
//! kernel estimate.
//!
//! Each observation only touches the voxels of the filter cube centered on
//! its containing cell; the kernel is deliberately truncated to that cube
//! even when its support radius is wider.

use crate::grid::{self, GridConfig, VoxelIndex};
use crate::kernel::{self, KernelConfig};
use rayon::prelude::*;
use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};
use thiserror::Error;

/// Points per parallel accumulation chunk. Fixed (rather than derived from
/// the thread count) so results are bit-identical for any pool size.
const CHUNK_POINTS: usize = 4096;

/// Multiply-fold hasher for packed voxel keys. Key bits are already well
/// mixed across the three axes, so a single multiply spreads them enough for
/// the accumulation maps at a fraction of SipHash's cost.
#[derive(Default)]
pub struct PackedKeyHasher(u64);

impl Hasher for PackedKeyHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0 ^ b as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        }
    }

    fn write_u64(&mut self, key: u64) {
        let x = key.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        self.0 = x ^ (x >> 29);
    }
}

type KeyMap<V> = HashMap<u64, V, BuildHasherDefault<PackedKeyHasher>>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("latent dimension must be at least 1")]
    ZeroLatentDim,
    #[error("prior parameters must be finite and non-negative, got lam0={0}, psi0={1}")]
    BadPrior(f64, f64),
    #[error("feature dimension {got} does not match the map's latent dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("observation feature contains a non-finite entry")]
    NonFiniteFeature,
    #[error("observation position contains a non-finite coordinate")]
    NonFinitePosition,
    #[error(transparent)]
    Grid(#[from] grid::GridError),
}

/// One observed point: a world position with its latent feature vector, plus
/// optional sensor range and ground-truth label (evaluation only).
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub position: [f64; 3],
    pub feature: Vec<f32>,
    pub range: Option<f32>,
    pub label: Option<u32>,
}

impl Observation {
    pub fn new(position: [f64; 3], feature: Vec<f32>) -> Self {
        Self {
            position,
            feature,
            range: None,
            label: None,
        }
    }
}

/// One sensor batch of observations. Frame granularity is the caller's
/// choice; the update is partition-invariant.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObservationFrame {
    pub points: Vec<Observation>,
}

impl ObservationFrame {
    pub fn new(points: Vec<Observation>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Posterior belief of one voxel.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelState {
    /// Posterior mean of the latent feature.
    pub mu: Vec<f32>,
    /// Diagonal of the inverse-Wishart scale matrix, entrywise >= 0.
    pub psi_diag: Vec<f32>,
    /// Confidence: prior mass plus cumulative kernel mass of all absorbed
    /// observations.
    pub lam: f64,
}

/// Prior applied to voxels before any observation: `lam0` pseudo-mass at the
/// zero feature vector with isotropic scale `psi0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapPrior {
    pub lam0: f64,
    pub psi0: f64,
}

impl Default for MapPrior {
    /// Near-non-informative: positive so downstream formulas stay finite, yet
    /// dominated by a single observation.
    fn default() -> Self {
        Self {
            lam0: 1e-3,
            psi0: 1e-6,
        }
    }
}

/// Sparse voxel map of NIW beliefs keyed by packed integer cell index.
///
/// Voxel payloads live in structure-of-arrays storage: `mu` and `psi_diag`
/// as `f32` arenas (one `latent_dim` stride per voxel) and `lam` as `f64`,
/// so a voxel costs `2 * C * 4 + 8` bytes plus the index entry. Arithmetic
/// runs in `f64` and narrows on store.
#[derive(Debug, Clone)]
pub struct LatentMap {
    grid: GridConfig,
    kernel: KernelConfig,
    latent_dim: usize,
    prior: MapPrior,
    slots: KeyMap<u32>,
    lam: Vec<f64>,
    mu: Vec<f32>,
    psi: Vec<f32>,
}

impl LatentMap {
    /// Creates an empty map. Every voxel implicitly starts at the prior:
    /// `mu = 0`, `psi_diag = psi0`, `lam = lam0`.
    pub fn new(
        grid: GridConfig,
        kernel: KernelConfig,
        latent_dim: usize,
        prior: MapPrior,
    ) -> Result<Self, MapError> {
        if latent_dim == 0 {
            return Err(MapError::ZeroLatentDim);
        }
        if !(prior.lam0.is_finite()
            && prior.lam0 >= 0.0
            && prior.psi0.is_finite()
            && prior.psi0 >= 0.0)
        {
            return Err(MapError::BadPrior(prior.lam0, prior.psi0));
        }
        Ok(Self {
            grid,
            kernel,
            latent_dim,
            prior,
            slots: KeyMap::default(),
            lam: Vec::new(),
            mu: Vec::new(),
            psi: Vec::new(),
        })
    }

    pub fn grid(&self) -> &GridConfig {
        &self.grid
    }

    pub fn kernel(&self) -> &KernelConfig {
        &self.kernel
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn prior(&self) -> MapPrior {
        self.prior
    }

    /// Number of allocated voxels.
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// The prior belief reported for never-observed voxels.
    pub fn prior_state(&self) -> VoxelState {
        VoxelState {
            mu: vec![0.0; self.latent_dim],
            psi_diag: vec![self.prior.psi0 as f32; self.latent_dim],
            lam: self.prior.lam0,
        }
    }

    /// Belief at `v`; unallocated voxels read as the prior.
    pub fn voxel_state(&self, v: VoxelIndex) -> VoxelState {
        match v.pack().ok().and_then(|key| self.slots.get(&key)) {
            Some(&slot) => self.state_of_slot(slot),
            None => self.prior_state(),
        }
    }

    /// Belief at `v` if the voxel has absorbed any observation.
    pub fn allocated_state(&self, v: VoxelIndex) -> Option<VoxelState> {
        let key = v.pack().ok()?;
        self.slots.get(&key).map(|&slot| self.state_of_slot(slot))
    }

    pub fn contains(&self, v: VoxelIndex) -> bool {
        v.pack()
            .map(|key| self.slots.contains_key(&key))
            .unwrap_or(false)
    }

    /// Allocated voxel indices in ascending (i, j, k) order.
    pub fn indices_sorted(&self) -> Vec<VoxelIndex> {
        let mut out: Vec<VoxelIndex> = self.slots.keys().map(|&k| VoxelIndex::unpack(k)).collect();
        out.sort();
        out
    }

    /// Iterates allocated voxels in unspecified order.
    pub fn iter(&self) -> impl Iterator<Item = (VoxelIndex, VoxelState)> + '_ {
        self.slots
            .iter()
            .map(|(&key, &slot)| (VoxelIndex::unpack(key), self.state_of_slot(slot)))
    }

    /// Bytes of voxel payload storage (index overhead excluded).
    pub fn payload_bytes(&self) -> usize {
        self.lam.capacity() * std::mem::size_of::<f64>()
            + (self.mu.capacity() + self.psi.capacity()) * std::mem::size_of::<f32>()
    }

    /// Drops spare arena capacity left by amortized growth.
    pub fn shrink_to_fit(&mut self) {
        self.lam.shrink_to_fit();
        self.mu.shrink_to_fit();
        self.psi.shrink_to_fit();
        self.slots.shrink_to_fit();
    }

    /// Installs a voxel state verbatim, for deserialization. Replaces any
    /// existing state at `v`.
    pub fn restore_voxel(
        &mut self,
        v: VoxelIndex,
        lam: f64,
        mu: &[f32],
        psi_diag: &[f32],
    ) -> Result<(), MapError> {
        let c = self.latent_dim;
        if mu.len() != c || psi_diag.len() != c {
            return Err(MapError::DimensionMismatch {
                expected: c,
                got: mu.len().min(psi_diag.len()),
            });
        }
        if !(lam.is_finite() && lam >= 0.0)
            || !mu.iter().all(|v| v.is_finite())
            || !psi_diag.iter().all(|v| v.is_finite() && *v >= 0.0)
        {
            return Err(MapError::NonFiniteFeature);
        }
        let key = v.pack()?;
        let slot = *self.slots.entry(key).or_insert_with(|| {
            let slot = self.lam.len() as u32;
            self.lam.push(0.0);
            self.mu.extend(std::iter::repeat_n(0.0f32, c));
            self.psi.extend(std::iter::repeat_n(0.0f32, c));
            slot
        }) as usize;
        self.lam[slot] = lam;
        let at = slot * c;
        self.mu[at..at + c].copy_from_slice(mu);
        self.psi[at..at + c].copy_from_slice(psi_diag);
        Ok(())
    }

    fn state_of_slot(&self, slot: u32) -> VoxelState {
        let c = self.latent_dim;
        let at = slot as usize * c;
        VoxelState {
            mu: self.mu[at..at + c].to_vec(),
            psi_diag: self.psi[at..at + c].to_vec(),
            lam: self.lam[slot as usize],
        }
    }

    /// Folds one frame into the map.
    ///
    /// The frame is validated up front and the map is untouched on error.
    /// Points whose kernel weight vanishes on every cell of their filter cube
    /// leave the map bit-identical; voxels receiving zero mass are never
    /// allocated.
    pub fn update(&mut self, frame: &ObservationFrame) -> Result<(), MapError> {
        let c = self.latent_dim;
        let h = self.grid.half_width();
        for obs in &frame.points {
            if obs.feature.len() != c {
                return Err(MapError::DimensionMismatch {
                    expected: c,
                    got: obs.feature.len(),
                });
            }
            if !obs.feature.iter().all(|v| v.is_finite()) {
                return Err(MapError::NonFiniteFeature);
            }
            if !obs.position.iter().all(|v| v.is_finite()) {
                return Err(MapError::NonFinitePosition);
            }
            let base = grid::world_to_index(obs.position, &self.grid)?;
            // The whole filter cube must be packable before any mutation.
            VoxelIndex::new(base.i - h, base.j - h, base.k - h).pack()?;
            VoxelIndex::new(base.i + h, base.j + h, base.k + h).pack()?;
        }
        if frame.points.is_empty() {
            return Ok(());
        }

        // Pass 1: kernel mass and weighted feature sums per voxel. Chunks are
        // merged in order, so sums are independent of the thread count.
        let grid_cfg = self.grid;
        let kernel_cfg = self.kernel;
        let mass_partials: Vec<KeyMap<MassAccum>> = frame
            .points
            .par_chunks(CHUNK_POINTS)
            .map(|chunk| accumulate_mass(chunk, c, &grid_cfg, &kernel_cfg))
            .collect();
        let mut acc: KeyMap<FrameAccum> = KeyMap::default();
        for partial in mass_partials {
            for (key, m) in partial {
                let entry = acc.entry(key).or_insert_with(|| FrameAccum::zero(c));
                entry.kbar += m.kbar;
                for (dst, src) in entry.sum_wy.iter_mut().zip(&m.sum_wy) {
                    *dst += src;
                }
            }
        }
        for a in acc.values_mut() {
            for (ybar, &swy) in a.ybar.iter_mut().zip(&a.sum_wy) {
                *ybar = swy / a.kbar;
            }
        }

        // Pass 2: weighted scatter around each voxel's frame mean.
        let scatter_partials: Vec<KeyMap<Vec<f64>>> = frame
            .points
            .par_chunks(CHUNK_POINTS)
            .map(|chunk| accumulate_scatter(chunk, c, &grid_cfg, &kernel_cfg, &acc))
            .collect();
        for partial in scatter_partials {
            for (key, s) in partial {
                let entry = acc
                    .get_mut(&key)
                    .expect("scatter key missing from mass pass");
                for (dst, src) in entry.sbar.iter_mut().zip(&s) {
                    *dst += src;
                }
            }
        }

        // Conjugate merge, one per affected voxel. Sorted keys keep slot
        // assignment reproducible.
        let mut keys: Vec<u64> = acc.keys().copied().collect();
        keys.sort_unstable();
        for key in keys {
            let a = &acc[&key];
            if a.kbar <= 0.0 {
                continue;
            }
            self.merge_voxel(key, a);
        }
        Ok(())
    }

    fn merge_voxel(&mut self, key: u64, a: &FrameAccum) {
        let c = self.latent_dim;
        let slot = *self.slots.entry(key).or_insert_with(|| {
            let slot = self.lam.len() as u32;
            self.lam.push(self.prior.lam0);
            self.mu.extend(std::iter::repeat_n(0.0f32, c));
            self.psi
                .extend(std::iter::repeat_n(self.prior.psi0 as f32, c));
            slot
        }) as usize;

        let lam_prev = self.lam[slot];
        let lam_new = lam_prev + a.kbar;
        let shrink = lam_prev * a.kbar / lam_new;
        let at = slot * c;
        for d in 0..c {
            let mu_prev = self.mu[at + d] as f64;
            let ybar = a.ybar[d];
            let mu_new = (lam_prev * mu_prev + a.kbar * ybar) / lam_new;
            let gap = ybar - mu_prev;
            let psi_new = self.psi[at + d] as f64 + a.sbar[d] + shrink * gap * gap;
            self.mu[at + d] = mu_new as f32;
            self.psi[at + d] = psi_new as f32;
        }
        self.lam[slot] = lam_new;
    }
}

struct MassAccum {
    kbar: f64,
    sum_wy: Vec<f64>,
}

struct FrameAccum {
    kbar: f64,
    sum_wy: Vec<f64>,
    ybar: Vec<f64>,
    sbar: Vec<f64>,
}

impl FrameAccum {
    fn zero(c: usize) -> Self {
        Self {
            kbar: 0.0,
            sum_wy: vec![0.0; c],
            ybar: vec![0.0; c],
            sbar: vec![0.0; c],
        }
    }
}

fn for_each_weighted_cell(
    obs: &Observation,
    grid_cfg: &GridConfig,
    kernel_cfg: &KernelConfig,
    mut f: impl FnMut(u64, f64),
) {
    let base = grid::world_to_index(obs.position, grid_cfg).expect("position validated");
    let h = grid_cfg.half_width();
    for di in -h..=h {
        for dj in -h..=h {
            for dk in -h..=h {
                let v = VoxelIndex::new(base.i + di, base.j + dj, base.k + dk);
                let w = kernel::point_voxel_weight(obs.position, v, grid_cfg, kernel_cfg);
                if w > 0.0 {
                    f(v.pack().expect("cube validated"), w);
                }
            }
        }
    }
}

fn accumulate_mass(
    chunk: &[Observation],
    c: usize,
    grid_cfg: &GridConfig,
    kernel_cfg: &KernelConfig,
) -> KeyMap<MassAccum> {
    let mut out = KeyMap::<MassAccum>::default();
    for obs in chunk {
        for_each_weighted_cell(obs, grid_cfg, kernel_cfg, |key, w| {
            let entry = out.entry(key).or_insert_with(|| MassAccum {
                kbar: 0.0,
                sum_wy: vec![0.0; c],
            });
            entry.kbar += w;
            for (dst, &y) in entry.sum_wy.iter_mut().zip(&obs.feature) {
                *dst += w * y as f64;
            }
        });
    }
    out
}

fn accumulate_scatter(
    chunk: &[Observation],
    c: usize,
    grid_cfg: &GridConfig,
    kernel_cfg: &KernelConfig,
    acc: &KeyMap<FrameAccum>,
) -> KeyMap<Vec<f64>> {
    let mut out = KeyMap::<Vec<f64>>::default();
    for obs in chunk {
        for_each_weighted_cell(obs, grid_cfg, kernel_cfg, |key, w| {
            let ybar = &acc[&key].ybar;
            let entry = out.entry(key).or_insert_with(|| vec![0.0; c]);
            for ((dst, &y), &m) in entry.iter_mut().zip(&obs.feature).zip(ybar) {
                let gap = y as f64 - m;
                *dst += w * gap * gap;
            }
        });
    }
    out
}
