//! Synthetic labeled scenes: a desk-scale stand-in for captured datasets.
//!
//! A scene is a box of voxels partitioned into contiguous category regions
//! (nearest-seed assignment), with one unit-norm anchor embedding per
//! category. Observations sample positions inside labeled voxels and carry
//! the category anchor perturbed by Gaussian noise and re-normalized, which
//! mimics an encoder that is right on average but noisy per view.

use super::EvalError;
use crate::grid::{GridConfig, VoxelIndex};
use crate::inference::QueryDictionary;
use crate::map::{Observation, ObservationFrame};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::collections::HashMap;

/// Maximum pairwise cosine between generated category anchors.
pub const ANCHOR_MAX_COSINE: f64 = 0.8;

const ANCHOR_ATTEMPTS: usize = 10_000;

/// Per-point feature noise: one sigma for all categories, or one per
/// category (heterogeneous scenes).
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpec {
    Uniform(f64),
    PerCategory(Vec<f64>),
}

impl NoiseSpec {
    fn sigma_for(&self, category: usize) -> f64 {
        match self {
            NoiseSpec::Uniform(s) => *s,
            NoiseSpec::PerCategory(v) => v[category],
        }
    }

    fn validate(&self, categories: usize) -> Result<(), EvalError> {
        let ok = match self {
            NoiseSpec::Uniform(s) => s.is_finite() && *s >= 0.0,
            NoiseSpec::PerCategory(v) => {
                v.len() == categories && v.iter().all(|s| s.is_finite() && *s >= 0.0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(EvalError::BadSceneSpec(format!(
                "noise spec {self:?} invalid for {categories} categories"
            )))
        }
    }
}

/// How category regions tile the scene box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RegionShape {
    /// Nearest-seed cells: irregular blobs with slanted boundaries.
    #[default]
    Voronoi,
    /// Equal-width partitions along the first axis: planar boundaries only.
    Slabs,
}

impl std::str::FromStr for RegionShape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "voronoi" => Ok(Self::Voronoi),
            "slabs" => Ok(Self::Slabs),
            other => Err(format!(
                "unknown region shape {other:?} (expected voronoi or slabs)"
            )),
        }
    }
}

/// Everything needed to deterministically generate a scene and its
/// observation stream.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub resolution: f64,
    /// Scene size in voxels per axis; cells (0, 0, 0)..extent are labeled.
    pub extent: [usize; 3],
    pub categories: usize,
    pub frames: usize,
    pub points_per_frame: usize,
    /// Dimension of anchors and point features.
    pub feature_dim: usize,
    pub noise: NoiseSpec,
    pub regions: RegionShape,
    /// Relative chance of observing a voxel of each category; uniform when
    /// absent. Starved categories model rarely seen regions.
    pub observation_weights: Option<Vec<f64>>,
    pub seed: u64,
}

/// Ground truth of a generated scene.
#[derive(Debug, Clone)]
pub struct SyntheticScene {
    labels: HashMap<u64, u32>,
    anchors: Vec<Vec<f32>>,
    spec: SceneSpec,
}

impl SyntheticScene {
    pub fn label_of(&self, v: VoxelIndex) -> Option<u32> {
        v.pack().ok().and_then(|key| self.labels.get(&key)).copied()
    }

    pub fn labeled_voxels(&self) -> usize {
        self.labels.len()
    }

    pub fn anchors(&self) -> &[Vec<f32>] {
        &self.anchors
    }

    pub fn spec(&self) -> &SceneSpec {
        &self.spec
    }

    pub fn grid(&self, filter_size: usize) -> Result<GridConfig, EvalError> {
        Ok(GridConfig::new(self.spec.resolution, filter_size)?)
    }

    /// Dictionary of the scene's categories, phrased `class_<k>`.
    pub fn dictionary(&self) -> QueryDictionary {
        QueryDictionary::new(
            (0..self.anchors.len())
                .map(|k| format!("class_{k}"))
                .collect(),
            self.anchors.clone(),
        )
        .expect("anchors are unit-norm by construction")
    }
}

/// Generates the scene and its frame stream. Bit-identical for equal specs.
pub fn generate_scene(
    spec: &SceneSpec,
) -> Result<(SyntheticScene, Vec<ObservationFrame>), EvalError> {
    if spec.categories == 0 {
        return Err(EvalError::EmptyCategories);
    }
    if spec.extent.contains(&0) {
        return Err(EvalError::BadSceneSpec("extent has a zero axis".into()));
    }
    let voxel_count = spec.extent[0] * spec.extent[1] * spec.extent[2];
    if voxel_count < spec.categories {
        return Err(EvalError::BadSceneSpec(format!(
            "{} voxels cannot hold {} categories",
            voxel_count, spec.categories
        )));
    }
    if spec.feature_dim == 0 {
        return Err(EvalError::BadSceneSpec("feature_dim is zero".into()));
    }
    if !(spec.resolution.is_finite() && spec.resolution > 0.0) {
        return Err(EvalError::BadSceneSpec(format!(
            "resolution {} invalid",
            spec.resolution
        )));
    }
    spec.noise.validate(spec.categories)?;
    let weights = match &spec.observation_weights {
        None => vec![1.0; spec.categories],
        Some(w) => {
            if w.len() != spec.categories || w.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(EvalError::BadSceneSpec(
                    "observation_weights must be positive, one per category".into(),
                ));
            }
            w.clone()
        }
    };

    if spec.regions == RegionShape::Slabs && spec.extent[0] < spec.categories {
        return Err(EvalError::BadSceneSpec(format!(
            "slab regions need extent[0] >= categories ({} < {})",
            spec.extent[0], spec.categories
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let anchors = draw_anchors(&mut rng, spec.categories, spec.feature_dim)?;
    let seeds = match spec.regions {
        RegionShape::Voronoi => draw_region_seeds(&mut rng, spec),
        RegionShape::Slabs => Vec::new(),
    };

    // Labeling over the extent box, lexicographic voxel order.
    let mut labels = HashMap::with_capacity(voxel_count);
    let mut sample_table = Vec::with_capacity(voxel_count);
    let mut total_weight = 0.0f64;
    for i in 0..spec.extent[0] {
        for j in 0..spec.extent[1] {
            for k in 0..spec.extent[2] {
                let cell = [i as i64, j as i64, k as i64];
                let best = match spec.regions {
                    RegionShape::Slabs => i * spec.categories / spec.extent[0],
                    RegionShape::Voronoi => {
                        let mut best = 0usize;
                        let mut best_d = u64::MAX;
                        for (c, s) in seeds.iter().enumerate() {
                            let d = square_dist(cell, *s);
                            if d < best_d {
                                best_d = d;
                                best = c;
                            }
                        }
                        best
                    }
                };
                let key = VoxelIndex::new(cell[0], cell[1], cell[2]).pack()?;
                labels.insert(key, best as u32);
                total_weight += weights[best];
                sample_table.push((cell, best as u32, total_weight));
            }
        }
    }

    let frames = (0..spec.frames)
        .map(|_| {
            let points = (0..spec.points_per_frame)
                .map(|_| {
                    let (cell, category) = pick_voxel(&mut rng, &sample_table, total_weight);
                    let position = interior_position(&mut rng, cell, spec.resolution);
                    let sigma = spec.noise.sigma_for(category as usize);
                    let feature = noisy_feature(&mut rng, &anchors[category as usize], sigma);
                    Observation {
                        position,
                        feature,
                        range: None,
                        label: Some(category),
                    }
                })
                .collect();
            ObservationFrame::new(points)
        })
        .collect();

    Ok((
        SyntheticScene {
            labels,
            anchors,
            spec: spec.clone(),
        },
        frames,
    ))
}

fn square_dist(a: [i64; 3], b: [i64; 3]) -> u64 {
    a.iter()
        .zip(&b)
        .map(|(x, y)| ((x - y) * (x - y)) as u64)
        .sum()
}

fn draw_anchors(
    rng: &mut ChaCha8Rng,
    categories: usize,
    dim: usize,
) -> Result<Vec<Vec<f32>>, EvalError> {
    let mut anchors: Vec<Vec<f64>> = Vec::with_capacity(categories);
    for _ in 0..categories {
        let mut accepted = None;
        for _ in 0..ANCHOR_ATTEMPTS {
            let candidate = random_unit(rng, dim);
            let separated = anchors.iter().all(|a| {
                a.iter().zip(&candidate).map(|(x, y)| x * y).sum::<f64>() < ANCHOR_MAX_COSINE
            });
            if separated {
                accepted = Some(candidate);
                break;
            }
        }
        anchors.push(accepted.ok_or(EvalError::AnchorSeparation { categories, dim })?);
    }
    Ok(anchors
        .into_iter()
        .map(|a| a.into_iter().map(|v| v as f32).collect())
        .collect())
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn draw_region_seeds(rng: &mut ChaCha8Rng, spec: &SceneSpec) -> Vec<[i64; 3]> {
    let mut seeds: Vec<[i64; 3]> = Vec::with_capacity(spec.categories);
    while seeds.len() < spec.categories {
        let cell = [
            rng.random_range(0..spec.extent[0]) as i64,
            rng.random_range(0..spec.extent[1]) as i64,
            rng.random_range(0..spec.extent[2]) as i64,
        ];
        if !seeds.contains(&cell) {
            seeds.push(cell);
        }
    }
    seeds
}

fn pick_voxel(rng: &mut ChaCha8Rng, table: &[([i64; 3], u32, f64)], total: f64) -> ([i64; 3], u32) {
    let target = rng.random_range(0.0..total);
    let at = table.partition_point(|(_, _, cum)| *cum <= target);
    let (cell, category, _) = table[at.min(table.len() - 1)];
    (cell, category)
}

/// Uniform position strictly inside the cell, away from faces so floating
/// rounding can never reassign the containing voxel.
fn interior_position(rng: &mut ChaCha8Rng, cell: [i64; 3], resolution: f64) -> [f64; 3] {
    [
        (cell[0] as f64 + rng.random_range(0.01..0.99)) * resolution,
        (cell[1] as f64 + rng.random_range(0.01..0.99)) * resolution,
        (cell[2] as f64 + rng.random_range(0.01..0.99)) * resolution,
    ]
}

fn noisy_feature(rng: &mut ChaCha8Rng, anchor: &[f32], sigma: f64) -> Vec<f32> {
    if sigma == 0.0 {
        return anchor.to_vec();
    }
    loop {
        let noisy: Vec<f64> = anchor
            .iter()
            .map(|&a| a as f64 + sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let norm = noisy.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return noisy.into_iter().map(|v| (v / norm) as f32).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::world_to_index;

    fn base_spec() -> SceneSpec {
        SceneSpec {
            resolution: 0.1,
            extent: [8, 8, 4],
            categories: 3,
            frames: 4,
            points_per_frame: 200,
            feature_dim: 16,
            noise: NoiseSpec::Uniform(0.0),
            regions: RegionShape::Voronoi,
            observation_weights: None,
            seed: 17,
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = base_spec();
        let (scene_a, frames_a) = generate_scene(&spec).unwrap();
        let (scene_b, frames_b) = generate_scene(&spec).unwrap();
        assert_eq!(frames_a, frames_b);
        assert_eq!(scene_a.anchors(), scene_b.anchors());
        let (_, frames_c) = generate_scene(&SceneSpec { seed: 18, ..spec }).unwrap();
        assert_ne!(frames_a, frames_c);
    }

    #[test]
    fn noiseless_points_carry_their_anchor() {
        let spec = base_spec();
        let (scene, frames) = generate_scene(&spec).unwrap();
        for frame in &frames {
            for p in &frame.points {
                let label = p.label.unwrap() as usize;
                assert_eq!(p.feature, scene.anchors()[label]);
            }
        }
    }

    #[test]
    fn labels_cover_every_category_and_match_point_positions() {
        let spec = base_spec();
        let (scene, frames) = generate_scene(&spec).unwrap();
        assert_eq!(scene.labeled_voxels(), 8 * 8 * 4);
        let mut seen = vec![false; spec.categories];
        for label in scene.labels.values() {
            seen[*label as usize] = true;
        }
        assert!(seen.iter().all(|&s| s), "some category has no voxels");

        let grid = scene.grid(1).unwrap();
        for frame in &frames {
            for p in &frame.points {
                let v = world_to_index(p.position, &grid).unwrap();
                assert_eq!(scene.label_of(v), p.label);
            }
        }
    }

    #[test]
    fn anchors_are_unit_norm_and_separated() {
        let spec = SceneSpec {
            categories: 6,
            feature_dim: 32,
            ..base_spec()
        };
        let (scene, _) = generate_scene(&spec).unwrap();
        let anchors = scene.anchors();
        for a in anchors {
            let norm: f64 = a.iter().map(|&v| (v as f64).powi(2)).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-6);
        }
        for (i, a) in anchors.iter().enumerate() {
            for b in anchors.iter().skip(i + 1) {
                let cos: f64 = a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum();
                assert!(cos < ANCHOR_MAX_COSINE);
            }
        }
    }

    #[test]
    fn observation_weights_starve_categories() {
        let spec = SceneSpec {
            categories: 2,
            extent: [10, 10, 2],
            frames: 10,
            points_per_frame: 500,
            observation_weights: Some(vec![1.0, 0.01]),
            ..base_spec()
        };
        let (_, frames) = generate_scene(&spec).unwrap();
        let mut counts = [0usize; 2];
        for f in &frames {
            for p in &f.points {
                counts[p.label.unwrap() as usize] += 1;
            }
        }
        assert!(
            counts[0] > counts[1] * 5,
            "weights had no effect: {counts:?}"
        );
    }

    #[test]
    fn slab_regions_partition_along_first_axis() {
        let spec = SceneSpec {
            regions: RegionShape::Slabs,
            categories: 4,
            ..base_spec()
        };
        let (scene, _) = generate_scene(&spec).unwrap();
        for i in 0..8i64 {
            let want = (i as usize * 4 / 8) as u32;
            for j in 0..8i64 {
                for k in 0..4i64 {
                    assert_eq!(scene.label_of(VoxelIndex::new(i, j, k)), Some(want));
                }
            }
        }
        // Not enough slabs to give every category a region.
        assert!(generate_scene(&SceneSpec {
            regions: RegionShape::Slabs,
            categories: 9,
            ..base_spec()
        })
        .is_err());
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(
            generate_scene(&SceneSpec {
                categories: 0,
                ..base_spec()
            }),
            Err(EvalError::EmptyCategories)
        ));
        assert!(generate_scene(&SceneSpec {
            extent: [0, 4, 4],
            ..base_spec()
        })
        .is_err());
        assert!(generate_scene(&SceneSpec {
            feature_dim: 0,
            ..base_spec()
        })
        .is_err());
        assert!(generate_scene(&SceneSpec {
            noise: NoiseSpec::PerCategory(vec![0.1]),
            ..base_spec()
        })
        .is_err());
        assert!(generate_scene(&SceneSpec {
            observation_weights: Some(vec![1.0, 0.0, 1.0]),
            ..base_spec()
        })
        .is_err());
        // Too many categories for a tiny feature space: separation fails.
        assert!(matches!(
            generate_scene(&SceneSpec {
                categories: 40,
                feature_dim: 2,
                extent: [8, 8, 4],
                ..base_spec()
            }),
            Err(EvalError::AnchorSeparation { .. })
        ));
    }
}
