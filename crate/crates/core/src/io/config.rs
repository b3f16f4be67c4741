//! Plain-text `key = value` configuration files.
//!
//! Lines starting with `#` and blank lines are ignored. Unknown and duplicate
//! keys are errors, so typos fail fast instead of silently falling back to
//! defaults.

use super::FormatError;
use crate::eval::{NoiseSpec, RegionShape, SceneSpec};
use crate::inference::UncertaintyMethod;
use std::collections::HashMap;
use std::path::Path;

/// Parameters for building a map from frame files.
#[derive(Debug, Clone, PartialEq)]
pub struct MapConfig {
    pub resolution: f64,
    pub kernel_length: f64,
    pub filter_size: usize,
    pub latent_dim: usize,
    pub prior_lambda: f64,
    pub prior_psi: f64,
    pub min_depth: f64,
    pub max_depth: f64,
}

/// Parameters for synthetic scene generation.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub resolution: f64,
    pub extent: [usize; 3],
    pub categories: usize,
    pub frames: usize,
    pub points_per_frame: usize,
    pub feature_dim: usize,
    pub noise: NoiseSpec,
    pub regions: RegionShape,
    pub observation_weights: Option<Vec<f64>>,
}

impl SceneConfig {
    pub fn to_spec(&self, seed: u64) -> SceneSpec {
        SceneSpec {
            resolution: self.resolution,
            extent: self.extent,
            categories: self.categories,
            frames: self.frames,
            points_per_frame: self.points_per_frame,
            feature_dim: self.feature_dim,
            noise: self.noise.clone(),
            regions: self.regions,
            observation_weights: self.observation_weights.clone(),
            seed,
        }
    }
}

/// Scene plus experiment parameters for the evaluation pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub scene: SceneConfig,
    pub kernel_length: f64,
    pub filter_size: usize,
    pub prior_lambda: f64,
    pub prior_psi: f64,
    pub holdout: f64,
    pub densities: Vec<f64>,
    pub filter_sizes: Vec<usize>,
    pub bins: usize,
    pub methods: Vec<UncertaintyMethod>,
    pub samples: usize,
    pub experiments: Vec<String>,
}

struct Parsed {
    path: String,
    entries: HashMap<String, (usize, String)>,
}

impl Parsed {
    fn load(path: &Path, allowed: &[&str]) -> Result<Self, FormatError> {
        let text = std::fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
        let display = path.display().to_string();
        let mut entries = HashMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let stripped = raw.split('#').next().unwrap_or("").trim();
            if stripped.is_empty() {
                continue;
            }
            let Some((key, value)) = stripped.split_once('=') else {
                return Err(FormatError::MalformedLine {
                    path: display.clone(),
                    line,
                });
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if !allowed.contains(&key.as_str()) {
                return Err(FormatError::UnknownKey {
                    path: display.clone(),
                    line,
                    key,
                });
            }
            if entries.insert(key.clone(), (line, value)).is_some() {
                return Err(FormatError::DuplicateKey {
                    path: display.clone(),
                    line,
                    key,
                });
            }
        }
        Ok(Self {
            path: display,
            entries,
        })
    }

    fn bad(&self, key: &str, line: usize, reason: impl Into<String>) -> FormatError {
        FormatError::BadValue {
            path: self.path.clone(),
            line,
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    fn required(&self, key: &str) -> Result<(usize, &str), FormatError> {
        self.entries
            .get(key)
            .map(|(line, v)| (*line, v.as_str()))
            .ok_or_else(|| FormatError::MissingKey {
                path: self.path.clone(),
                key: key.to_string(),
            })
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, FormatError> {
        let (line, raw) = self.required(key)?;
        raw.parse()
            .map_err(|_| self.bad(key, line, format!("cannot parse {raw:?}")))
    }

    fn parse_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, FormatError> {
        match self.entries.get(key) {
            None => Ok(default),
            Some(_) => self.parse(key),
        }
    }

    fn parse_list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>, FormatError> {
        let (line, raw) = self.required(key)?;
        raw.split(',')
            .map(|item| {
                item.trim()
                    .parse()
                    .map_err(|_| self.bad(key, line, format!("cannot parse {:?}", item.trim())))
            })
            .collect()
    }

    fn parse_list_or<T: std::str::FromStr>(
        &self,
        key: &str,
        default: Vec<T>,
    ) -> Result<Vec<T>, FormatError> {
        match self.entries.get(key) {
            None => Ok(default),
            Some(_) => self.parse_list(key),
        }
    }

    fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }
}

const MAP_KEYS: &[&str] = &[
    "resolution",
    "kernel_length",
    "filter_size",
    "latent_dim",
    "prior_lambda",
    "prior_psi",
    "min_depth",
    "max_depth",
];

pub fn parse_map_config(path: &Path) -> Result<MapConfig, FormatError> {
    let p = Parsed::load(path, MAP_KEYS)?;
    Ok(MapConfig {
        resolution: p.parse("resolution")?,
        kernel_length: p.parse("kernel_length")?,
        filter_size: p.parse("filter_size")?,
        latent_dim: p.parse("latent_dim")?,
        prior_lambda: p.parse_or("prior_lambda", 1e-3)?,
        prior_psi: p.parse_or("prior_psi", 1e-6)?,
        min_depth: p.parse_or("min_depth", 0.1)?,
        max_depth: p.parse_or("max_depth", 6.0)?,
    })
}

impl MapConfig {
    pub fn parse(path: &Path) -> Result<Self, FormatError> {
        parse_map_config(path)
    }
}

const SCENE_KEYS: &[&str] = &[
    "resolution",
    "extent",
    "categories",
    "frames",
    "points_per_frame",
    "feature_dim",
    "sigma",
    "sigmas",
    "regions",
    "observation_weights",
];

fn scene_from(p: &Parsed) -> Result<SceneConfig, FormatError> {
    let extent: Vec<usize> = p.parse_list("extent")?;
    if extent.len() != 3 {
        let (line, _) = p.required("extent")?;
        return Err(p.bad("extent", line, "expected three comma-separated sizes"));
    }
    let noise = if p.has("sigmas") {
        NoiseSpec::PerCategory(p.parse_list("sigmas")?)
    } else {
        NoiseSpec::Uniform(p.parse_or("sigma", 0.0)?)
    };
    let observation_weights = if p.has("observation_weights") {
        Some(p.parse_list("observation_weights")?)
    } else {
        None
    };
    let regions = if p.has("regions") {
        let (line, raw) = p.required("regions")?;
        raw.parse().map_err(|e: String| p.bad("regions", line, e))?
    } else {
        RegionShape::Voronoi
    };
    Ok(SceneConfig {
        resolution: p.parse("resolution")?,
        extent: [extent[0], extent[1], extent[2]],
        categories: p.parse("categories")?,
        frames: p.parse("frames")?,
        points_per_frame: p.parse("points_per_frame")?,
        feature_dim: p.parse("feature_dim")?,
        noise,
        regions,
        observation_weights,
    })
}

pub fn parse_scene_config(path: &Path) -> Result<SceneConfig, FormatError> {
    let p = Parsed::load(path, SCENE_KEYS)?;
    scene_from(&p)
}

impl SceneConfig {
    pub fn parse(path: &Path) -> Result<Self, FormatError> {
        parse_scene_config(path)
    }
}

const EVAL_KEYS: &[&str] = &[
    "resolution",
    "extent",
    "categories",
    "frames",
    "points_per_frame",
    "feature_dim",
    "sigma",
    "sigmas",
    "regions",
    "observation_weights",
    "kernel_length",
    "filter_size",
    "prior_lambda",
    "prior_psi",
    "holdout",
    "densities",
    "filter_sizes",
    "bins",
    "methods",
    "samples",
    "experiments",
];

pub fn parse_eval_config(path: &Path) -> Result<EvalConfig, FormatError> {
    let p = Parsed::load(path, EVAL_KEYS)?;
    let methods: Vec<String> = p.parse_list_or("methods", vec!["e".to_string()])?;
    let mut parsed_methods = Vec::with_capacity(methods.len());
    for m in &methods {
        let method: UncertaintyMethod = m.parse().map_err(|e: String| {
            let line = p.entries.get("methods").map(|(l, _)| *l).unwrap_or(0);
            p.bad("methods", line, e)
        })?;
        parsed_methods.push(method);
    }
    Ok(EvalConfig {
        scene: scene_from(&p)?,
        kernel_length: p.parse("kernel_length")?,
        filter_size: p.parse("filter_size")?,
        prior_lambda: p.parse_or("prior_lambda", 1e-3)?,
        prior_psi: p.parse_or("prior_psi", 1e-6)?,
        holdout: p.parse_or("holdout", 0.8)?,
        densities: p.parse_list_or("densities", vec![0.01, 0.1, 1.0])?,
        filter_sizes: p.parse_list_or("filter_sizes", vec![1, 3])?,
        bins: p.parse_or("bins", 10)?,
        methods: parsed_methods,
        samples: p.parse_or("samples", 64)?,
        experiments: p.parse_list_or(
            "experiments",
            vec![
                "metrics".to_string(),
                "ablation".to_string(),
                "sparsification".to_string(),
                "correlation".to_string(),
            ],
        )?,
    })
}

impl EvalConfig {
    pub fn parse(path: &Path) -> Result<Self, FormatError> {
        parse_eval_config(path)
    }
}
