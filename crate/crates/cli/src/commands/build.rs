use super::{expand_frame_paths, require_config};
use crate::CliResult;
use lbkmap_core::grid::GridConfig;
use lbkmap_core::io::{self, MapConfig};
use lbkmap_core::kernel::KernelConfig;
use lbkmap_core::map::{LatentMap, MapPrior};
use log::{info, warn};
use std::path::{Path, PathBuf};

pub fn run(
    config: Option<&Path>,
    frame_args: &[PathBuf],
    pca_path: Option<&Path>,
    out: &Path,
) -> CliResult {
    let cfg = MapConfig::parse(require_config(config)?)?;
    let pca = pca_path.map(io::read_pca).transpose()?;
    if let Some(t) = &pca {
        if t.c_reduced() != cfg.latent_dim {
            return Err(anyhow::anyhow!(
                "PCA reduces to {} dims but the config expects latent_dim = {}",
                t.c_reduced(),
                cfg.latent_dim
            )
            .into());
        }
    }

    let mut map = LatentMap::new(
        GridConfig::new(cfg.resolution, cfg.filter_size)?,
        KernelConfig::new(cfg.kernel_length)?,
        cfg.latent_dim,
        MapPrior {
            lam0: cfg.prior_lambda,
            psi0: cfg.prior_psi,
        },
    )?;

    let paths = expand_frame_paths(frame_args)?;
    if paths.is_empty() {
        warn!("no frame files found; writing an empty map");
    }
    let mut ingested = 0usize;
    let mut depth_dropped = 0usize;
    for path in &paths {
        let mut frame = io::read_frame(path)?;
        let before = frame.len();
        frame.points.retain(|p| match p.range {
            Some(r) => (cfg.min_depth..=cfg.max_depth).contains(&(r as f64)),
            None => true,
        });
        depth_dropped += before - frame.len();

        if let Some(t) = &pca {
            for p in &mut frame.points {
                if p.feature.len() != t.c_full() {
                    return Err(anyhow::anyhow!(
                        "{}: feature dim {} does not match the PCA input dim {}",
                        path.display(),
                        p.feature.len(),
                        t.c_full()
                    )
                    .into());
                }
                p.feature = t.encode_f32(&p.feature)?;
            }
        }

        ingested += frame.len();
        map.update(&frame)?;
        info!(
            "{}: {} points ({} dropped by depth)",
            path.display(),
            frame.len(),
            before - frame.len()
        );
    }

    io::write_map(out, &map)?;
    println!(
        "built {}: {} frames, {} points ({} dropped by depth filter), {} voxels",
        out.display(),
        paths.len(),
        ingested,
        depth_dropped,
        map.len()
    );
    Ok(())
}
