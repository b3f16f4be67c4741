use super::expand_frame_paths;
use crate::{CliError, CliResult};
use lbkmap_core::io;
use lbkmap_core::pca::PcaTransform;
use log::info;
use std::path::{Path, PathBuf};

fn load_corpus(frame_args: &[PathBuf]) -> Result<(Vec<PathBuf>, Vec<Vec<f32>>), CliError> {
    let paths = expand_frame_paths(frame_args)?;
    let mut corpus = Vec::new();
    for path in &paths {
        let frame = io::read_frame(path)?;
        corpus.extend(frame.points.into_iter().map(|p| p.feature));
    }
    Ok((paths, corpus))
}

pub fn fit(frame_args: &[PathBuf], dims: usize, out: &Path) -> CliResult {
    let (paths, corpus) = load_corpus(frame_args)?;
    if corpus.is_empty() {
        return Err(CliError::Data(anyhow::anyhow!(
            "no feature vectors in the given frames"
        )));
    }
    info!(
        "fitting on {} features from {} frames",
        corpus.len(),
        paths.len()
    );
    let t = PcaTransform::fit(&corpus, dims)?;
    io::write_pca(out, &t)?;
    let mse = t.reconstruction_mse(&corpus)?;
    println!(
        "wrote {}: {} -> {} dims over {} samples, reconstruction MSE {mse:.6e}",
        out.display(),
        t.c_full(),
        t.c_reduced(),
        corpus.len()
    );
    Ok(())
}

pub fn apply(pca_path: &Path, frame_args: &[PathBuf], out_dir: &Path) -> CliResult {
    let t = io::read_pca(pca_path)?;
    let paths = expand_frame_paths(frame_args)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| anyhow::anyhow!("creating {}: {e}", out_dir.display()))?;

    let mut sq_err = 0.0f64;
    let mut entries = 0usize;
    for path in &paths {
        let mut frame = io::read_frame(path)?;
        for p in &mut frame.points {
            if p.feature.len() != t.c_full() {
                return Err(CliError::Data(anyhow::anyhow!(
                    "{}: feature dim {} does not match the transform input dim {}",
                    path.display(),
                    p.feature.len(),
                    t.c_full()
                )));
            }
            let wide: Vec<f64> = p.feature.iter().map(|&v| v as f64).collect();
            let code = t.encode(&wide)?;
            for (orig, back) in wide.iter().zip(t.decode(&code)?) {
                sq_err += (orig - back).powi(2);
                entries += 1;
            }
            p.feature = code.into_iter().map(|v| v as f32).collect();
        }
        let name = path
            .file_name()
            .ok_or_else(|| CliError::usage(format!("{} has no file name", path.display())))?;
        io::write_frame(&out_dir.join(name), &frame, t.c_reduced())?;
    }
    let mse = if entries > 0 {
        sq_err / entries as f64
    } else {
        0.0
    };
    println!(
        "re-encoded {} frames into {} ({} -> {} dims), reconstruction MSE {mse:.6e}",
        paths.len(),
        out_dir.display(),
        t.c_full(),
        t.c_reduced()
    );
    Ok(())
}
