//! Sparse probabilistic voxel mapping in the latent space of a feature
//! encoder.
//!
//! Points carrying latent feature vectors are fused recursively into
//! per-voxel normal-inverse-Wishart beliefs. A compactly supported distance
//! kernel spreads each observation over the voxels of a small filter cube, so
//! nearby cells accumulate evidence even where data is sparse. Voxel beliefs
//! decode into open-dictionary category predictions by cosine similarity
//! against a phrase-embedding dictionary, and expose sampling- and
//! optimality-based uncertainty measures.

pub mod eval;
pub mod grid;
pub mod inference;
pub mod io;
pub mod kernel;
pub mod map;
pub mod pca;

pub use grid::{GridConfig, GridError, VoxelIndex};
pub use inference::{
    InferenceError, PosteriorPredictive, QueryDictionary, UncertaintyMethod, VoxelPrediction,
};
pub use kernel::{KernelConfig, KernelError};
pub use map::{LatentMap, MapError, MapPrior, Observation, ObservationFrame, VoxelState};
pub use pca::{PcaError, PcaTransform};
