use super::require_config;
use crate::CliResult;
use lbkmap_core::eval::generate_scene;
use lbkmap_core::io::{self, SceneConfig};
use std::path::Path;

pub fn run(config: Option<&Path>, seed: u64, out_dir: &Path) -> CliResult {
    let cfg = SceneConfig::parse(require_config(config)?)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| anyhow::anyhow!("creating {}: {e}", out_dir.display()))?;

    let spec = cfg.to_spec(seed);
    let (scene, frames) = generate_scene(&spec)?;
    for (i, frame) in frames.iter().enumerate() {
        let path = out_dir.join(format!("frame_{i:04}.lbkf"));
        io::write_frame(&path, frame, spec.feature_dim)?;
    }
    let dict_path = out_dir.join("dict.lbkd");
    io::write_dict(&dict_path, &scene.dictionary())?;
    println!(
        "wrote {} frames x {} points and {} ({} categories, {} labeled voxels) to {}",
        frames.len(),
        spec.points_per_frame,
        dict_path.display(),
        spec.categories,
        scene.labeled_voxels(),
        out_dir.display()
    );
    Ok(())
}
