//! Decoding voxel beliefs: posterior predictive distribution, open-dictionary
//! category prediction, and scalar uncertainty measures.
//!
//! Marginalizing a voxel's NIW parameters gives a multivariate Student-t
//! posterior predictive with `lam` degrees of freedom, mean `mu`, and
//! diagonal scale `(lam + 1) / lam^2 * psi_diag`. Its moments exist only with
//! enough evidence: the expectation for `lam > 1`, the covariance for
//! `lam > 2`. Voxels below those thresholds report errors here; callers that
//! need a total order over uncertainty treat them as infinitely uncertain.

use crate::map::VoxelState;
use crate::pca::PcaTransform;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, StandardNormal};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InferenceError {
    #[error("posterior predictive undefined: lam = {0} is not positive")]
    InsufficientEvidence(f64),
    #[error("predictive expectation undefined for lam = {0} (requires lam > 1)")]
    ExpectationUndefined(f64),
    #[error("predictive covariance undefined for lam = {0} (requires lam > 2)")]
    CovarianceUndefined(f64),
    #[error("covariance diagonal has a zero or negative entry; log-volume undefined")]
    DegenerateCovariance,
    #[error("voxel mean has zero norm; cosine decoding undefined")]
    ZeroNormMean,
    #[error(
        "dictionary dimension {dict} incompatible with voxel dimension {voxel} (lift: {lift})"
    )]
    DimensionMismatch {
        dict: usize,
        voxel: usize,
        lift: String,
    },
    #[error("dictionary is empty")]
    EmptyDictionary,
    #[error("dictionary phrase and embedding counts differ: {phrases} vs {embeddings}")]
    LengthMismatch { phrases: usize, embeddings: usize },
    #[error("dictionary embeddings have inconsistent dimensions")]
    RaggedEmbeddings,
    #[error("dictionary entry {0:?} has a zero-norm or non-finite embedding")]
    BadEmbedding(String),
}

/// Student-t posterior predictive of one voxel, diagonal scale.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorPredictive {
    pub mean: Vec<f64>,
    pub scale_diag: Vec<f64>,
    pub dof: f64,
}

/// Ordered phrases with their full-dimension embeddings, pre-normalized for
/// cosine scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryDictionary {
    phrases: Vec<String>,
    embeddings: Vec<Vec<f32>>,
    norms: Vec<f64>,
}

impl QueryDictionary {
    pub fn new(phrases: Vec<String>, embeddings: Vec<Vec<f32>>) -> Result<Self, InferenceError> {
        if phrases.len() != embeddings.len() {
            return Err(InferenceError::LengthMismatch {
                phrases: phrases.len(),
                embeddings: embeddings.len(),
            });
        }
        if phrases.is_empty() {
            return Err(InferenceError::EmptyDictionary);
        }
        let dim = embeddings[0].len();
        let mut norms = Vec::with_capacity(embeddings.len());
        for (phrase, emb) in phrases.iter().zip(&embeddings) {
            if emb.len() != dim {
                return Err(InferenceError::RaggedEmbeddings);
            }
            let norm = emb.iter().map(|&v| (v as f64).powi(2)).sum::<f64>().sqrt();
            if !(norm.is_finite() && norm > 0.0) {
                return Err(InferenceError::BadEmbedding(phrase.clone()));
            }
            norms.push(norm);
        }
        Ok(Self {
            phrases,
            embeddings,
            norms,
        })
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.embeddings[0].len()
    }

    pub fn phrases(&self) -> &[String] {
        &self.phrases
    }

    pub fn embeddings(&self) -> &[Vec<f32>] {
        &self.embeddings
    }

    /// Index of the first entry whose phrase matches exactly.
    pub fn find(&self, phrase: &str) -> Option<usize> {
        self.phrases.iter().position(|p| p == phrase)
    }

    /// Cosine similarities of `feature` against every entry.
    pub fn cosine_scores(&self, feature: &[f64]) -> Result<Vec<f64>, InferenceError> {
        if feature.len() != self.dim() {
            return Err(InferenceError::DimensionMismatch {
                dict: self.dim(),
                voxel: feature.len(),
                lift: "none".into(),
            });
        }
        let norm = feature.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 0.0 || !norm.is_finite() {
            return Err(InferenceError::ZeroNormMean);
        }
        Ok(self
            .embeddings
            .iter()
            .zip(&self.norms)
            .map(|(emb, &emb_norm)| {
                let dot: f64 = emb.iter().zip(feature).map(|(&e, &f)| e as f64 * f).sum();
                dot / (norm * emb_norm)
            })
            .collect())
    }
}

/// Category prediction for one voxel: argmax of cosine similarity, ties
/// broken by lowest phrase index. `uncertainty` carries the E-optimality
/// value, or infinity when the covariance is undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelPrediction {
    pub category: usize,
    pub score: f64,
    pub uncertainty: f64,
}

/// How to summarize a voxel's predictive covariance as one scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UncertaintyMethod {
    /// Variance of the winning cosine score over decoded feature samples.
    Sampling,
    /// Largest covariance eigenvalue (the max diagonal entry here).
    EOptimality,
    /// Geometric mean of the covariance eigenvalues (hyper-ellipsoid volume).
    DOptimality,
}

impl std::str::FromStr for UncertaintyMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sampling" => Ok(Self::Sampling),
            "e" | "e-optimality" => Ok(Self::EOptimality),
            "d" | "d-optimality" => Ok(Self::DOptimality),
            other => Err(format!(
                "unknown uncertainty method {other:?} (expected sampling, e, or d)"
            )),
        }
    }
}

/// Posterior predictive of `s`: mean `mu`, scale `(lam+1)/lam^2 * psi`,
/// degrees of freedom `lam`.
pub fn posterior_predictive(s: &VoxelState) -> Result<PosteriorPredictive, InferenceError> {
    if s.lam <= 0.0 {
        return Err(InferenceError::InsufficientEvidence(s.lam));
    }
    let factor = (s.lam + 1.0) / (s.lam * s.lam);
    Ok(PosteriorPredictive {
        mean: s.mu.iter().map(|&m| m as f64).collect(),
        scale_diag: s.psi_diag.iter().map(|&p| factor * p as f64).collect(),
        dof: s.lam,
    })
}

/// Expected feature at the voxel, defined for `lam > 1`.
pub fn predictive_expectation(s: &VoxelState) -> Result<Vec<f64>, InferenceError> {
    if s.lam <= 1.0 {
        return Err(InferenceError::ExpectationUndefined(s.lam));
    }
    Ok(s.mu.iter().map(|&m| m as f64).collect())
}

/// Diagonal of the predictive covariance,
/// `lam/(lam-2) * (lam+1)/lam^2 * psi`, defined for `lam > 2`.
pub fn predictive_covariance_diag(s: &VoxelState) -> Result<Vec<f64>, InferenceError> {
    if s.lam <= 2.0 {
        return Err(InferenceError::CovarianceUndefined(s.lam));
    }
    let factor = s.lam / (s.lam - 2.0) * (s.lam + 1.0) / (s.lam * s.lam);
    Ok(s.psi_diag.iter().map(|&p| factor * p as f64).collect())
}

fn lifted_mean(
    s: &VoxelState,
    dict: &QueryDictionary,
    lift: Option<&PcaTransform>,
) -> Result<Vec<f64>, InferenceError> {
    let mean = predictive_expectation(s)?;
    match lift {
        Some(t) if t.c_reduced() == mean.len() && t.c_full() == dict.dim() => t
            .decode(&mean)
            .map_err(|_| InferenceError::DimensionMismatch {
                dict: dict.dim(),
                voxel: mean.len(),
                lift: format!("{}x{}", t.c_full(), t.c_reduced()),
            }),
        Some(t) => Err(InferenceError::DimensionMismatch {
            dict: dict.dim(),
            voxel: mean.len(),
            lift: format!("{}x{}", t.c_full(), t.c_reduced()),
        }),
        None if dict.dim() == mean.len() => Ok(mean),
        None => Err(InferenceError::DimensionMismatch {
            dict: dict.dim(),
            voxel: mean.len(),
            lift: "none".into(),
        }),
    }
}

fn argmax_lowest_index(scores: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    (best, scores[best])
}

/// Decodes the voxel's expected feature into the best-matching phrase.
///
/// When the map's latent dimension is smaller than the dictionary's, `lift`
/// must map reduced features back to the dictionary space.
pub fn decode_category(
    s: &VoxelState,
    dict: &QueryDictionary,
    lift: Option<&PcaTransform>,
) -> Result<VoxelPrediction, InferenceError> {
    let mean = lifted_mean(s, dict, lift)?;
    let scores = dict.cosine_scores(&mean)?;
    let (category, score) = argmax_lowest_index(&scores);
    let uncertainty = uncertainty_e_optimality(s).unwrap_or(f64::INFINITY);
    Ok(VoxelPrediction {
        category,
        score,
        uncertainty,
    })
}

/// Draws `n` features from the voxel's Student-t posterior predictive.
///
/// Each sample shares one chi-square draw across dimensions (a true
/// multivariate t with diagonal scale): `y = mu + z * sqrt(dof/u)` with
/// `z ~ N(0, scale_diag)` and `u ~ ChiSquare(dof)`. The degrees of freedom
/// may be fractional. Deterministic for a fixed seed.
pub fn sample_features(
    s: &VoxelState,
    n: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, InferenceError> {
    let pp = posterior_predictive(s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chi = ChiSquared::new(pp.dof).expect("dof > 0 checked");
    let sd: Vec<f64> = pp.scale_diag.iter().map(|&v| v.sqrt()).collect();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = chi.sample(&mut rng);
        let t_factor = (pp.dof / u).sqrt();
        let sample: Vec<f64> = pp
            .mean
            .iter()
            .zip(&sd)
            .map(|(&m, &sd_c)| {
                let z: f64 = rng.sample(StandardNormal);
                m + z * sd_c * t_factor
            })
            .collect();
        out.push(sample);
    }
    Ok(out)
}

/// Sampling-based decoded-space uncertainty, with the per-category score
/// variances as a secondary output.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingUncertainty {
    /// Variance of the winning cosine score across samples.
    pub best_score_variance: f64,
    /// Variance of each phrase's cosine score across samples.
    pub per_category_variance: Vec<f64>,
}

/// Decodes `n` posterior samples and measures the variance of the
/// predictions in cosine-score space.
pub fn sampling_uncertainty(
    s: &VoxelState,
    dict: &QueryDictionary,
    lift: Option<&PcaTransform>,
    n: usize,
    seed: u64,
) -> Result<SamplingUncertainty, InferenceError> {
    let samples = sample_features(s, n, seed)?;
    let categories = dict.len();
    let mut best_scores = Vec::with_capacity(samples.len());
    let mut cat_scores: Vec<Vec<f64>> = vec![Vec::with_capacity(samples.len()); categories];
    for sample in &samples {
        let lifted = match lift {
            Some(t) => t
                .decode(sample)
                .map_err(|_| InferenceError::DimensionMismatch {
                    dict: dict.dim(),
                    voxel: sample.len(),
                    lift: format!("{}x{}", t.c_full(), t.c_reduced()),
                })?,
            None => sample.clone(),
        };
        // A sample may cancel to zero norm only in degenerate maps; such
        // draws carry no decodable prediction and are skipped.
        let scores = match dict.cosine_scores(&lifted) {
            Ok(s) => s,
            Err(InferenceError::ZeroNormMean) => continue,
            Err(e) => return Err(e),
        };
        let (_, best) = argmax_lowest_index(&scores);
        best_scores.push(best);
        for (c, &sc) in scores.iter().enumerate() {
            cat_scores[c].push(sc);
        }
    }
    Ok(SamplingUncertainty {
        best_score_variance: population_variance(&best_scores),
        per_category_variance: cat_scores.iter().map(|v| population_variance(v)).collect(),
    })
}

/// Population variance (divide by n), exactly zero on constant data.
fn population_variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let shift = values[0];
    let mut sum = 0.0;
    let mut sq = 0.0;
    for &v in values {
        let d = v - shift;
        sum += d;
        sq += d * d;
    }
    let mean = sum / n;
    (sq / n - mean * mean).max(0.0)
}

/// Variance of the winning decoded score over `n` posterior samples.
pub fn uncertainty_sampling(
    s: &VoxelState,
    dict: &QueryDictionary,
    lift: Option<&PcaTransform>,
    n: usize,
    seed: u64,
) -> Result<f64, InferenceError> {
    Ok(sampling_uncertainty(s, dict, lift, n, seed)?.best_score_variance)
}

/// Largest predictive-covariance eigenvalue; with a diagonal covariance,
/// the largest diagonal entry.
pub fn uncertainty_e_optimality(s: &VoxelState) -> Result<f64, InferenceError> {
    let cov = predictive_covariance_diag(s)?;
    Ok(cov.iter().copied().fold(0.0f64, f64::max))
}

/// Geometric mean of the predictive-covariance eigenvalues, the normalized
/// volume of the covariance hyper-ellipsoid.
pub fn uncertainty_d_optimality(s: &VoxelState) -> Result<f64, InferenceError> {
    let cov = predictive_covariance_diag(s)?;
    if cov.iter().any(|&v| v <= 0.0) {
        return Err(InferenceError::DegenerateCovariance);
    }
    let mean_log = cov.iter().map(|v| v.ln()).sum::<f64>() / cov.len() as f64;
    Ok(mean_log.exp())
}

/// Scalar uncertainty under a total order: voxels whose covariance is
/// undefined (`lam <= 2`, or a degenerate diagonal for D-optimality) rank
/// as infinitely uncertain.
pub fn uncertainty_value(
    s: &VoxelState,
    method: UncertaintyMethod,
    dict: &QueryDictionary,
    lift: Option<&PcaTransform>,
    samples: usize,
    seed: u64,
) -> f64 {
    if s.lam <= 2.0 {
        return f64::INFINITY;
    }
    let result = match method {
        UncertaintyMethod::Sampling => uncertainty_sampling(s, dict, lift, samples, seed),
        UncertaintyMethod::EOptimality => uncertainty_e_optimality(s),
        UncertaintyMethod::DOptimality => uncertainty_d_optimality(s),
    };
    result.unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(mu: Vec<f32>, psi: Vec<f32>, lam: f64) -> VoxelState {
        VoxelState {
            mu,
            psi_diag: psi,
            lam,
        }
    }

    fn dict(entries: &[(&str, Vec<f32>)]) -> QueryDictionary {
        QueryDictionary::new(
            entries.iter().map(|(p, _)| p.to_string()).collect(),
            entries.iter().map(|(_, e)| e.clone()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn posterior_predictive_scale() {
        let s = state(vec![1.0, 2.0], vec![4.0, 4.0], 2.0);
        let pp = posterior_predictive(&s).unwrap();
        // (lam+1)/lam^2 = 3/4.
        assert_eq!(pp.scale_diag, vec![3.0, 3.0]);
        assert_eq!(pp.dof, 2.0);
        assert_eq!(pp.mean, vec![1.0, 2.0]);
    }

    #[test]
    fn posterior_predictive_consistency_limit() {
        // As lam grows with psi/lam fixed, the scale approaches psi/lam.
        let lam = 1e9;
        let psi_over_lam = 0.5;
        let s = state(vec![0.0], vec![(psi_over_lam * lam) as f32], lam);
        let pp = posterior_predictive(&s).unwrap();
        assert!((pp.scale_diag[0] - psi_over_lam).abs() / psi_over_lam < 1e-6);
    }

    #[test]
    fn posterior_predictive_needs_positive_lam() {
        let s = state(vec![0.0], vec![1.0], 0.0);
        assert!(matches!(
            posterior_predictive(&s),
            Err(InferenceError::InsufficientEvidence(_))
        ));
        // A weak positive prior is defined, just low-confidence.
        let weak = state(vec![0.0], vec![1e-6], 1e-3);
        assert!(posterior_predictive(&weak).is_ok());
    }

    #[test]
    fn expectation_threshold() {
        let m = vec![3.0f32, -1.0];
        assert_eq!(
            predictive_expectation(&state(m.clone(), vec![1.0, 1.0], 5.0)).unwrap(),
            vec![3.0, -1.0]
        );
        assert!(matches!(
            predictive_expectation(&state(m.clone(), vec![1.0, 1.0], 0.5)),
            Err(InferenceError::ExpectationUndefined(_))
        ));
        // Just above the threshold: defined.
        assert!(predictive_expectation(&state(m, vec![1.0, 1.0], 1.0 + 1e-9)).is_ok());
    }

    #[test]
    fn covariance_formula_and_threshold() {
        let s = state(vec![0.0], vec![8.0], 4.0);
        // lam/(lam-2) * (lam+1)/lam^2 * psi = 2 * 5/16 * 8 = 5.
        assert!((predictive_covariance_diag(&s).unwrap()[0] - 5.0).abs() < 1e-12);
        assert!(matches!(
            predictive_covariance_diag(&state(vec![0.0], vec![8.0], 2.0)),
            Err(InferenceError::CovarianceUndefined(_))
        ));
        assert_eq!(
            predictive_covariance_diag(&state(vec![0.0], vec![0.0], 4.0)).unwrap(),
            vec![0.0]
        );
    }

    #[test]
    fn decode_self_similarity() {
        let d = dict(&[
            ("table", vec![1.0, 0.0, 0.0]),
            ("chair", vec![0.0, 1.0, 0.0]),
        ]);
        let s = state(vec![0.0, 1.0, 0.0], vec![0.1; 3], 5.0);
        let p = decode_category(&s, &d, None).unwrap();
        assert_eq!(p.category, 1);
        assert!((p.score - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decode_is_scale_invariant() {
        let d = dict(&[("a", vec![0.6, 0.8, 0.0]), ("b", vec![-0.8, 0.6, 0.0])]);
        // Exactly representable scaling by 8 so the cosines agree bitwise.
        let s1 = state(vec![0.5, 0.75, 0.125], vec![0.1; 3], 5.0);
        let s2 = state(vec![4.0, 6.0, 1.0], vec![0.1; 3], 5.0);
        let p1 = decode_category(&s1, &d, None).unwrap();
        let p2 = decode_category(&s2, &d, None).unwrap();
        assert_eq!(p1.category, p2.category);
        assert!((p1.score - p2.score).abs() < 1e-12);
    }

    #[test]
    fn decode_picks_nearest_angle() {
        let d = dict(&[("x", vec![1.0, 0.0, 0.0]), ("y", vec![0.0, 1.0, 0.0])]);
        // Closer in angle to x than to y.
        let s = state(vec![0.9, 0.3, 0.0], vec![0.1; 3], 5.0);
        assert_eq!(decode_category(&s, &d, None).unwrap().category, 0);
    }

    #[test]
    fn decode_breaks_ties_by_lowest_index() {
        let d = dict(&[("first", vec![1.0, 0.0]), ("second", vec![1.0, 0.0])]);
        let s = state(vec![2.0, 0.0], vec![0.1; 2], 5.0);
        assert_eq!(decode_category(&s, &d, None).unwrap().category, 0);
    }

    #[test]
    fn decode_rejects_zero_mean_and_low_lam() {
        let d = dict(&[("a", vec![1.0, 0.0])]);
        let zero = state(vec![0.0, 0.0], vec![0.1; 2], 5.0);
        assert!(matches!(
            decode_category(&zero, &d, None),
            Err(InferenceError::ZeroNormMean)
        ));
        let sparse = state(vec![1.0, 0.0], vec![0.1; 2], 0.5);
        assert!(matches!(
            decode_category(&sparse, &d, None),
            Err(InferenceError::ExpectationUndefined(_))
        ));
    }

    #[test]
    fn decode_requires_matching_dims_or_lift() {
        let d = dict(&[("a", vec![1.0, 0.0, 0.0])]);
        let s = state(vec![1.0, 0.0], vec![0.1; 2], 5.0);
        assert!(matches!(
            decode_category(&s, &d, None),
            Err(InferenceError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn dictionary_validation() {
        assert!(QueryDictionary::new(vec![], vec![]).is_err());
        assert!(QueryDictionary::new(vec!["a".into()], vec![]).is_err());
        assert!(QueryDictionary::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 0.0], vec![1.0]]
        )
        .is_err());
        assert!(QueryDictionary::new(vec!["a".into()], vec![vec![0.0, 0.0]]).is_err());
    }

    #[test]
    fn samples_are_reproducible_and_degenerate_scale_collapses() {
        let s = state(vec![1.0, -2.0], vec![0.5, 0.25], 4.0);
        let a = sample_features(&s, 32, 42).unwrap();
        let b = sample_features(&s, 32, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_features(&s, 32, 43).unwrap();
        assert_ne!(a, c);

        let frozen = state(vec![1.0, -2.0], vec![0.0, 0.0], 4.0);
        for sample in sample_features(&frozen, 16, 7).unwrap() {
            assert_eq!(sample, vec![1.0, -2.0]);
        }
        assert!(sample_features(&s, 0, 1).unwrap().is_empty());
        assert!(sample_features(&state(vec![0.0], vec![1.0], 0.0), 4, 1).is_err());
    }

    #[test]
    fn sampling_uncertainty_conventions() {
        let d = dict(&[("a", vec![1.0, 0.0]), ("b", vec![0.0, 1.0])]);
        let frozen = state(vec![1.0, 0.2], vec![0.0, 0.0], 5.0);
        let u = uncertainty_sampling(&frozen, &d, None, 64, 1).unwrap();
        assert_eq!(u, 0.0);
        // Single-sample variance convention.
        let s = state(vec![1.0, 0.2], vec![0.5, 0.5], 5.0);
        assert_eq!(uncertainty_sampling(&s, &d, None, 1, 1).unwrap(), 0.0);
    }

    #[test]
    fn sampling_uncertainty_grows_with_psi() {
        let d = dict(&[("a", vec![1.0, 0.0, 0.0]), ("b", vec![0.0, 1.0, 0.0])]);
        let narrow = state(vec![1.0, 0.1, 0.0], vec![0.05; 3], 8.0);
        let wide = state(vec![1.0, 0.1, 0.0], vec![2.0; 3], 8.0);
        let un = uncertainty_sampling(&narrow, &d, None, 4000, 3).unwrap();
        let uw = uncertainty_sampling(&wide, &d, None, 4000, 3).unwrap();
        assert!(uw > un, "wide {uw} should exceed narrow {un}");
    }

    #[test]
    fn e_optimality_is_max_diagonal() {
        // Covariance factor at lam=4 is 2 * 5/16 = 0.625.
        let s = state(vec![0.0; 3], vec![1.6, 8.0, 3.2], 4.0);
        let e = uncertainty_e_optimality(&s).unwrap();
        assert!((e - 5.0).abs() < 1e-12);
        let iso = state(vec![0.0; 3], vec![4.0; 3], 4.0);
        assert!((uncertainty_e_optimality(&iso).unwrap() - 2.5).abs() < 1e-12);
        let zero = state(vec![0.0; 3], vec![0.0; 3], 4.0);
        assert_eq!(uncertainty_e_optimality(&zero).unwrap(), 0.0);
        assert!(uncertainty_e_optimality(&state(vec![0.0], vec![1.0], 2.0)).is_err());
    }

    #[test]
    fn d_optimality_is_geometric_mean() {
        // The covariance factor at lam=4 is 0.625; psi (1.6, 6.4) targets a
        // (1, 4) diagonal up to f32 storage of psi.
        let s = state(vec![0.0; 2], vec![1.6, 6.4], 4.0);
        assert!((uncertainty_d_optimality(&s).unwrap() - 2.0).abs() < 1e-6);
        // Covariance (e^2, e^4) => geometric mean e^3.
        let e2 = (2.0f64).exp() / 0.625;
        let e4 = (4.0f64).exp() / 0.625;
        let s2 = state(vec![0.0; 2], vec![e2 as f32, e4 as f32], 4.0);
        let want = (3.0f64).exp();
        assert!((uncertainty_d_optimality(&s2).unwrap() - want).abs() / want < 1e-6);
        // Identity covariance in any dimension has unit volume.
        let psi_one = 1.0 / 0.625;
        let s3 = state(vec![0.0; 5], vec![psi_one as f32; 5], 4.0);
        assert!((uncertainty_d_optimality(&s3).unwrap() - 1.0).abs() < 1e-6);
        // Zero diagonal: undefined.
        assert!(matches!(
            uncertainty_d_optimality(&state(vec![0.0; 2], vec![0.0, 1.0], 4.0)),
            Err(InferenceError::DegenerateCovariance)
        ));
    }

    #[test]
    fn e_dominates_d() {
        for psi in [
            vec![0.1f32, 2.0, 0.7],
            vec![1.0, 1.0, 1.0],
            vec![5.0, 0.3, 9.0],
        ] {
            let s = state(vec![0.0; 3], psi, 6.0);
            let e = uncertainty_e_optimality(&s).unwrap();
            let d = uncertainty_d_optimality(&s).unwrap();
            assert!(e >= d - 1e-12, "E {e} < D {d}");
        }
    }

    #[test]
    fn uncertainty_value_total_order() {
        let d = dict(&[("a", vec![1.0, 0.0])]);
        let sparse = state(vec![1.0, 0.0], vec![1.0; 2], 1.5);
        for method in [
            UncertaintyMethod::Sampling,
            UncertaintyMethod::EOptimality,
            UncertaintyMethod::DOptimality,
        ] {
            let u = uncertainty_value(&sparse, method, &d, None, 8, 1);
            assert!(u.is_infinite());
        }
        let dense = state(vec![1.0, 0.0], vec![1.0; 2], 8.0);
        let u = uncertainty_value(&dense, UncertaintyMethod::EOptimality, &d, None, 8, 1);
        assert!(u.is_finite());
        assert!(u < f64::INFINITY);
    }
}
