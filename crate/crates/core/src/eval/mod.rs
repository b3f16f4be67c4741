//! Metrics, held-out evaluation, and the ablation experiments that probe
//! spatial smoothing, uncertainty calibration, and fusion quality on
//! synthetic scenes.

mod metrics;
mod scene;

pub use metrics::{DecodedPoint, MetricReport};
pub use scene::{
    generate_scene, NoiseSpec, RegionShape, SceneSpec, SyntheticScene, ANCHOR_MAX_COSINE,
};

use crate::grid::{self, GridConfig, VoxelIndex};
use crate::inference::{self, InferenceError, QueryDictionary, UncertaintyMethod};
use crate::kernel::KernelConfig;
use crate::map::{LatentMap, MapError, MapPrior, Observation, ObservationFrame};
use crate::pca::{PcaError, PcaTransform};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("scene needs at least one category")]
    EmptyCategories,
    #[error("invalid scene spec: {0}")]
    BadSceneSpec(String),
    #[error("could not draw {categories} anchors with pairwise cosine < {max} in {dim} dims", max = ANCHOR_MAX_COSINE)]
    AnchorSeparation { categories: usize, dim: usize },
    #[error("holdout fraction must lie strictly between 0 and 1, got {0}")]
    BadFraction(f64),
    #[error("split leaves an empty {side} set")]
    DegenerateSplit { side: String },
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("test point has no ground-truth label")]
    UnlabeledTestPoint,
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("density must lie in (0, 1], got {0}")]
    BadDensity(f64),
    #[error("need at least 2 bins, got {0}")]
    BadBins(usize),
    #[error("need at least {required} points/voxels, got {got}")]
    TooFew { required: usize, got: usize },
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Grid(#[from] grid::GridError),
    #[error(transparent)]
    Kernel(#[from] crate::kernel::KernelError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Pca(#[from] PcaError),
}

/// Shared knobs for map-building experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentParams {
    pub kernel_length: f64,
    pub prior: MapPrior,
    pub holdout: f64,
    /// Posterior samples per voxel for sampling-based uncertainty.
    pub samples: usize,
    pub seed: u64,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        Self {
            kernel_length: 0.5,
            prior: MapPrior::default(),
            holdout: 0.8,
            samples: 64,
            seed: 0,
        }
    }
}

/// Splits the stream's points into training frames and a flat labeled test
/// set, point-level and deterministic: exactly `round(fraction * N)` points
/// stay in training.
pub fn holdout_split(
    frames: &[ObservationFrame],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<ObservationFrame>, Vec<Observation>), EvalError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(EvalError::BadFraction(fraction));
    }
    let total: usize = frames.iter().map(|f| f.len()).sum();
    let n_train = (fraction * total as f64).round() as usize;
    let n_test = total - n_train;
    if n_train == 0 {
        return Err(EvalError::DegenerateSplit {
            side: "train".into(),
        });
    }
    if n_test == 0 {
        return Err(EvalError::DegenerateSplit {
            side: "test".into(),
        });
    }

    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut is_test = vec![false; total];
    for &idx in order.iter().take(n_test) {
        is_test[idx] = true;
    }

    let mut train = Vec::with_capacity(frames.len());
    let mut test = Vec::with_capacity(n_test);
    let mut at = 0usize;
    for frame in frames {
        let mut kept = Vec::with_capacity(frame.len());
        for p in &frame.points {
            if is_test[at] {
                test.push(p.clone());
            } else {
                kept.push(p.clone());
            }
            at += 1;
        }
        train.push(ObservationFrame::new(kept));
    }
    Ok((train, test))
}

/// Keeps a deterministic `density` share of each frame's points (relative
/// order preserved), modeling sparser sensing of the same stream.
pub fn subsample_frames(
    frames: &[ObservationFrame],
    density: f64,
    seed: u64,
) -> Result<Vec<ObservationFrame>, EvalError> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(EvalError::BadDensity(density));
    }
    if density == 1.0 {
        return Ok(frames.to_vec());
    }
    let mut out = Vec::with_capacity(frames.len());
    for (fi, frame) in frames.iter().enumerate() {
        let keep = (density * frame.len() as f64).round() as usize;
        let mut order: Vec<usize> = (0..frame.len()).collect();
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed ^ (fi as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        order.shuffle(&mut rng);
        let mut pick: Vec<usize> = order.into_iter().take(keep).collect();
        pick.sort_unstable();
        out.push(ObservationFrame::new(
            pick.iter().map(|&i| frame.points[i].clone()).collect(),
        ));
    }
    Ok(out)
}

/// Builds a map over `frames` with the given filter size.
pub fn build_map(
    resolution: f64,
    filter_size: usize,
    latent_dim: usize,
    frames: &[ObservationFrame],
    params: &ExperimentParams,
) -> Result<LatentMap, EvalError> {
    let grid = GridConfig::new(resolution, filter_size)?;
    let kernel = KernelConfig::new(params.kernel_length)?;
    let mut map = LatentMap::new(grid, kernel, latent_dim, params.prior)?;
    for frame in frames {
        map.update(frame)?;
    }
    Ok(map)
}

fn require_label(p: &Observation) -> Result<usize, EvalError> {
    p.label
        .map(|l| l as usize)
        .ok_or(EvalError::UnlabeledTestPoint)
}

/// Decodes each test point through its containing voxel. Returns one entry
/// per point, in point order.
pub fn decode_points(
    map: &LatentMap,
    test_points: &[Observation],
    dict: &QueryDictionary,
    lift: Option<&PcaTransform>,
) -> Result<Vec<DecodedPoint>, EvalError> {
    let mut out = Vec::with_capacity(test_points.len());
    for p in test_points {
        let label = require_label(p)?;
        let v = grid::world_to_index(p.position, map.grid())?;
        let state = map.voxel_state(v);
        let covered = state.lam > 1.0;
        let prediction = match inference::decode_category(&state, dict, lift) {
            Ok(pred) => Some(pred.category),
            Err(
                InferenceError::ExpectationUndefined(_)
                | InferenceError::InsufficientEvidence(_)
                | InferenceError::ZeroNormMean,
            ) => None,
            Err(e) => return Err(e.into()),
        };
        out.push(DecodedPoint {
            label,
            prediction,
            covered,
        });
    }
    Ok(out)
}

/// Map-based segmentation metrics: each test point decoded via its voxel,
/// undecodable voxels counted as wrong.
pub fn evaluate_map(
    map: &LatentMap,
    test_points: &[Observation],
    dict: &QueryDictionary,
    lift: Option<&PcaTransform>,
) -> Result<MetricReport, EvalError> {
    let decoded = decode_points(map, test_points, dict, lift)?;
    MetricReport::from_decoded(&decoded, dict.len())
}

/// Baseline without any map: each point's own feature decoded directly.
pub fn evaluate_raw(
    test_points: &[Observation],
    dict: &QueryDictionary,
    lift: Option<&PcaTransform>,
) -> Result<MetricReport, EvalError> {
    let mut decoded = Vec::with_capacity(test_points.len());
    for p in test_points {
        let label = require_label(p)?;
        let feature: Vec<f64> = p.feature.iter().map(|&v| v as f64).collect();
        let lifted = match lift {
            Some(t) => t.decode(&feature)?,
            None => feature,
        };
        let prediction = match dict.cosine_scores(&lifted) {
            Ok(scores) => {
                let mut best = 0;
                for (i, &s) in scores.iter().enumerate().skip(1) {
                    if s > scores[best] {
                        best = i;
                    }
                }
                Some(best)
            }
            Err(InferenceError::ZeroNormMean) => None,
            Err(e) => return Err(e.into()),
        };
        decoded.push(DecodedPoint {
            label,
            prediction,
            covered: true,
        });
    }
    MetricReport::from_decoded(&decoded, dict.len())
}

/// One cell of the sparsity ablation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationCell {
    pub density: f64,
    pub filter_size: usize,
    pub report: MetricReport,
}

/// Sweeps input density against filter size on one scene: the same held-out
/// test set scores a map built from each subsampled training stream.
///
/// Subsampling depends only on the density (not the filter size), so cells in
/// one density row see identical inputs.
pub fn sparsity_ablation(
    scene: &SyntheticScene,
    frames: &[ObservationFrame],
    densities: &[f64],
    filter_sizes: &[usize],
    params: &ExperimentParams,
) -> Result<Vec<AblationCell>, EvalError> {
    let dict = scene.dictionary();
    let (train, test) = holdout_split(frames, params.holdout, params.seed)?;
    let mut out = Vec::with_capacity(densities.len() * filter_sizes.len());
    for (di, &density) in densities.iter().enumerate() {
        let sub = subsample_frames(&train, density, params.seed ^ ((di as u64 + 1) << 32))?;
        for &filter_size in filter_sizes {
            let map = build_map(
                scene.spec().resolution,
                filter_size,
                scene.spec().feature_dim,
                &sub,
                params,
            )?;
            let report = evaluate_map(&map, &test, &dict, None)?;
            out.push(AblationCell {
                density,
                filter_size,
                report,
            });
        }
    }
    Ok(out)
}

/// One entry of a sparsification curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub fraction_removed: f64,
    pub accuracy: f64,
    pub miou: f64,
}

/// Per-voxel uncertainty for every allocated voxel, under the total order
/// (undefined ranks as infinity). Sampling seeds derive from the voxel key,
/// so values are reproducible regardless of evaluation order.
pub fn voxel_uncertainties(
    map: &LatentMap,
    method: UncertaintyMethod,
    dict: &QueryDictionary,
    lift: Option<&PcaTransform>,
    samples: usize,
    seed: u64,
) -> Vec<(VoxelIndex, f64)> {
    map.indices_sorted()
        .into_iter()
        .map(|v| {
            let state = map.voxel_state(v);
            let voxel_seed = seed ^ splitmix(v.pack().expect("allocated voxels packable"));
            let u = inference::uncertainty_value(&state, method, dict, lift, samples, voxel_seed);
            (v, u)
        })
        .collect()
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Sparsification curve: test points sorted by voxel uncertainty descending,
/// split into `bins` near-equal bins, and the most uncertain bins removed
/// cumulatively. Entry `j` reports metrics with `j` bins removed, so entry 0
/// equals the plain evaluation.
#[allow(clippy::too_many_arguments)]
pub fn sparsification_curve(
    map: &LatentMap,
    test_points: &[Observation],
    dict: &QueryDictionary,
    lift: Option<&PcaTransform>,
    method: UncertaintyMethod,
    bins: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<CurvePoint>, EvalError> {
    let decoded = decode_points(map, test_points, dict, lift)?;
    let mut voxel_u: HashMap<u64, f64> = HashMap::new();
    let mut uncertainties = Vec::with_capacity(test_points.len());
    for p in test_points {
        let v = grid::world_to_index(p.position, map.grid())?;
        let key = v.pack()?;
        let u = *voxel_u.entry(key).or_insert_with(|| {
            let state = map.voxel_state(v);
            inference::uncertainty_value(&state, method, dict, lift, samples, seed ^ splitmix(key))
        });
        uncertainties.push(u);
    }
    sparsification_curve_from(&decoded, &uncertainties, dict.len(), bins)
}

/// Curve construction from precomputed outcomes and uncertainties (one per
/// point, aligned).
pub fn sparsification_curve_from(
    decoded: &[DecodedPoint],
    uncertainties: &[f64],
    classes: usize,
    bins: usize,
) -> Result<Vec<CurvePoint>, EvalError> {
    if bins < 2 {
        return Err(EvalError::BadBins(bins));
    }
    let n = decoded.len();
    if n < bins {
        return Err(EvalError::TooFew {
            required: bins,
            got: n,
        });
    }
    assert_eq!(decoded.len(), uncertainties.len());

    let mut order: Vec<usize> = (0..n).collect();
    // Most uncertain first; index as a deterministic tiebreak.
    order.sort_by(|&a, &b| {
        uncertainties[b]
            .partial_cmp(&uncertainties[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut curve = Vec::with_capacity(bins);
    for removed_bins in 0..bins {
        let start = removed_bins * n / bins;
        let kept: Vec<DecodedPoint> = order[start..].iter().map(|&i| decoded[i]).collect();
        let report = MetricReport::from_decoded(&kept, classes)?;
        curve.push(CurvePoint {
            fraction_removed: start as f64 / n as f64,
            accuracy: report.accuracy,
            miou: report.miou,
        });
    }
    Ok(curve)
}

/// Spearman rank correlation between two uncertainty methods over voxels
/// where both are defined (finite).
pub fn uncertainty_correlation(
    map: &LatentMap,
    method_a: UncertaintyMethod,
    method_b: UncertaintyMethod,
    dict: &QueryDictionary,
    lift: Option<&PcaTransform>,
    samples: usize,
    seed: u64,
) -> Result<f64, EvalError> {
    let ua = voxel_uncertainties(map, method_a, dict, lift, samples, seed);
    let ub = voxel_uncertainties(map, method_b, dict, lift, samples, seed);
    let mut a = Vec::new();
    let mut b = Vec::new();
    for ((_, x), (_, y)) in ua.iter().zip(&ub) {
        if x.is_finite() && y.is_finite() {
            a.push(*x);
            b.push(*y);
        }
    }
    if a.len() < 100 {
        return Err(EvalError::TooFew {
            required: 100,
            got: a.len(),
        });
    }
    Ok(spearman(&a, &b))
}

/// Spearman rank correlation with average ranks on ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    pearson(&ra, &rb)
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| {
        values[x]
            .partial_cmp(&values[y])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut ranks = vec![0.0f64; n];
    let mut at = 0usize;
    while at < n {
        let mut end = at + 1;
        while end < n && values[order[end]] == values[order[at]] {
            end += 1;
        }
        // Ranks are 1-based; ties share the mean rank of their run.
        let mean_rank = (at + 1 + end) as f64 / 2.0;
        for &idx in &order[at..end] {
            ranks[idx] = mean_rank;
        }
        at = end;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    if va == 0.0 || vb == 0.0 {
        return if va == vb { 1.0 } else { 0.0 };
    }
    cov / (va.sqrt() * vb.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scene_spec(seed: u64) -> SceneSpec {
        SceneSpec {
            resolution: 0.1,
            extent: [10, 10, 4],
            categories: 4,
            frames: 6,
            points_per_frame: 500,
            feature_dim: 12,
            noise: NoiseSpec::Uniform(0.0),
            regions: RegionShape::Voronoi,
            observation_weights: None,
            seed,
        }
    }

    #[test]
    fn split_is_exact_disjoint_and_deterministic() {
        let (_, frames) = generate_scene(&scene_spec(1)).unwrap();
        let (train, test) = holdout_split(&frames, 0.8, 9).unwrap();
        let train_n: usize = train.iter().map(|f| f.len()).sum();
        assert_eq!(train_n, 2400);
        assert_eq!(test.len(), 600);

        let (train2, test2) = holdout_split(&frames, 0.8, 9).unwrap();
        assert_eq!(train, train2);
        assert_eq!(test, test2);

        let (_, test3) = holdout_split(&frames, 0.8, 10).unwrap();
        assert_ne!(test, test3);
    }

    #[test]
    fn split_rejects_degenerate_fractions() {
        let (_, frames) = generate_scene(&scene_spec(2)).unwrap();
        assert!(matches!(
            holdout_split(&frames, 0.0, 1),
            Err(EvalError::BadFraction(_))
        ));
        assert!(matches!(
            holdout_split(&frames, 1.0, 1),
            Err(EvalError::BadFraction(_))
        ));
        // A fraction so close to 1 that rounding empties the test set.
        assert!(matches!(
            holdout_split(&frames, 0.999999, 1),
            Err(EvalError::DegenerateSplit { .. })
        ));
    }

    #[test]
    fn noiseless_scene_evaluates_perfectly() {
        // Dense enough that every voxel holds several points, and no spatial
        // smoothing, so no category ever bleeds across a region boundary.
        let spec = SceneSpec {
            frames: 8,
            points_per_frame: 800,
            ..scene_spec(3)
        };
        let (scene, frames) = generate_scene(&spec).unwrap();
        let params = ExperimentParams::default();
        let (train, test) = holdout_split(&frames, 0.8, params.seed).unwrap();
        let map = build_map(0.1, 1, 12, &train, &params).unwrap();
        let dict = scene.dictionary();
        let report = evaluate_map(&map, &test, &dict, None).unwrap();
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.miou, 1.0);
        let raw = evaluate_raw(&test, &dict, None).unwrap();
        assert_eq!(raw.accuracy, 1.0);
    }

    #[test]
    fn noisy_two_class_raw_accuracy_is_between_half_and_one() {
        let spec = SceneSpec {
            categories: 2,
            noise: NoiseSpec::Uniform(0.5),
            feature_dim: 8,
            ..scene_spec(4)
        };
        let (scene, frames) = generate_scene(&spec).unwrap();
        let points: Vec<Observation> = frames.into_iter().flat_map(|f| f.points).collect();
        let r = evaluate_raw(&points, &scene.dictionary(), None).unwrap();
        assert!(r.accuracy > 0.5, "accuracy {}", r.accuracy);
        assert!(r.accuracy < 1.0, "accuracy {}", r.accuracy);
    }

    #[test]
    fn subsample_keeps_exact_share_per_frame() {
        let (_, frames) = generate_scene(&scene_spec(5)).unwrap();
        let sub = subsample_frames(&frames, 0.1, 3).unwrap();
        for f in &sub {
            assert_eq!(f.len(), 50);
        }
        // Deterministic and order-preserving.
        let sub2 = subsample_frames(&frames, 0.1, 3).unwrap();
        assert_eq!(sub, sub2);
        assert!(subsample_frames(&frames, 0.0, 3).is_err());
        assert!(subsample_frames(&frames, 1.5, 3).is_err());
    }

    #[test]
    fn ablation_has_one_cell_per_combination() {
        let spec = SceneSpec {
            frames: 3,
            points_per_frame: 300,
            ..scene_spec(6)
        };
        let (scene, frames) = generate_scene(&spec).unwrap();
        let params = ExperimentParams::default();
        let cells = sparsity_ablation(&scene, &frames, &[0.05, 1.0], &[1, 3], &params).unwrap();
        assert_eq!(cells.len(), 4);
        // Coverage never shrinks when the filter widens at fixed density.
        for pair in cells.chunks(2) {
            assert!(pair[1].report.coverage >= pair[0].report.coverage);
            assert_eq!(pair[0].density, pair[1].density);
        }
    }

    #[test]
    fn synthetic_anticorrelated_uncertainty_gives_increasing_curve() {
        // 80% wrong, wrong points maximally uncertain: every removal step
        // strictly raises accuracy.
        let mut decoded = Vec::new();
        let mut uncertainties = Vec::new();
        for i in 0..100 {
            let wrong = i % 5 != 0;
            decoded.push(DecodedPoint {
                label: 0,
                prediction: Some(if wrong { 1 } else { 0 }),
                covered: true,
            });
            uncertainties.push(if wrong { 1.0 } else { 0.0 });
        }
        let curve = sparsification_curve_from(&decoded, &uncertainties, 2, 4).unwrap();
        assert_eq!(curve.len(), 4);
        assert_eq!(curve[0].fraction_removed, 0.0);
        for w in curve.windows(2) {
            assert!(w[1].accuracy > w[0].accuracy, "{curve:?}");
        }
    }

    #[test]
    fn constant_uncertainty_gives_flat_curve() {
        // Periodic correctness, uniform uncertainty: every bin removes the
        // same mix, so the curve is exactly flat.
        let mut decoded = Vec::new();
        for i in 0..120 {
            decoded.push(DecodedPoint {
                label: 0,
                prediction: Some(if i % 4 == 0 { 1 } else { 0 }),
                covered: true,
            });
        }
        let uncertainties = vec![0.5; 120];
        let curve = sparsification_curve_from(&decoded, &uncertainties, 2, 6).unwrap();
        for p in &curve {
            assert!((p.accuracy - 0.75).abs() < 1e-12, "{curve:?}");
        }
    }

    #[test]
    fn curve_entry_zero_matches_plain_evaluation() {
        let (scene, frames) = generate_scene(&SceneSpec {
            noise: NoiseSpec::Uniform(0.4),
            ..scene_spec(7)
        })
        .unwrap();
        let params = ExperimentParams::default();
        let (train, test) = holdout_split(&frames, 0.8, params.seed).unwrap();
        let map = build_map(0.1, 3, 12, &train, &params).unwrap();
        let dict = scene.dictionary();
        let full = evaluate_map(&map, &test, &dict, None).unwrap();
        let curve = sparsification_curve(
            &map,
            &test,
            &dict,
            None,
            UncertaintyMethod::EOptimality,
            10,
            16,
            params.seed,
        )
        .unwrap();
        assert_eq!(curve.len(), 10);
        assert_eq!(curve[0].accuracy, full.accuracy);
        assert_eq!(curve[0].miou, full.miou);
    }

    #[test]
    fn spearman_fundamentals() {
        let a = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        assert!((spearman(&a, &a) - 1.0).abs() < 1e-12);
        let b: Vec<f64> = a.iter().map(|v| v * v).collect();
        assert!(
            (spearman(&a, &b) - 1.0).abs() < 1e-12,
            "monotone map preserves ranks"
        );
        let c: Vec<f64> = a.iter().map(|v| -v).collect();
        assert!((spearman(&a, &c) + 1.0).abs() < 1e-12);
        // Ties get average ranks.
        let d = vec![1.0, 1.0, 2.0];
        let ranks = average_ranks(&d);
        assert_eq!(ranks, vec![1.5, 1.5, 3.0]);
    }

    #[test]
    fn correlation_of_method_with_itself_is_one() {
        let (scene, frames) = generate_scene(&SceneSpec {
            noise: NoiseSpec::Uniform(0.3),
            frames: 8,
            points_per_frame: 800,
            ..scene_spec(8)
        })
        .unwrap();
        let params = ExperimentParams::default();
        let (train, _) = holdout_split(&frames, 0.8, params.seed).unwrap();
        let map = build_map(0.1, 3, 12, &train, &params).unwrap();
        let dict = scene.dictionary();
        let rho = uncertainty_correlation(
            &map,
            UncertaintyMethod::EOptimality,
            UncertaintyMethod::EOptimality,
            &dict,
            None,
            16,
            params.seed,
        )
        .unwrap();
        assert!((rho - 1.0).abs() < 1e-12);

        let rho_ed = uncertainty_correlation(
            &map,
            UncertaintyMethod::EOptimality,
            UncertaintyMethod::DOptimality,
            &dict,
            None,
            16,
            params.seed,
        )
        .unwrap();
        assert!(
            rho_ed > 0.0,
            "E vs D should correlate positively, got {rho_ed}"
        );
    }

    #[test]
    fn correlation_needs_enough_voxels() {
        let (scene, frames) = generate_scene(&SceneSpec {
            extent: [3, 3, 1],
            frames: 1,
            points_per_frame: 30,
            ..scene_spec(9)
        })
        .unwrap();
        let params = ExperimentParams::default();
        let map = build_map(0.1, 1, 12, &frames, &params).unwrap();
        let dict = scene.dictionary();
        assert!(matches!(
            uncertainty_correlation(
                &map,
                UncertaintyMethod::EOptimality,
                UncertaintyMethod::DOptimality,
                &dict,
                None,
                8,
                0,
            ),
            Err(EvalError::TooFew { .. })
        ));
    }
}
