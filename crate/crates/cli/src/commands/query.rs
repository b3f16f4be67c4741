use super::{fmt_float, write_text};
use crate::{CliError, CliResult};
use lbkmap_core::grid;
use lbkmap_core::inference::{self, InferenceError};
use lbkmap_core::io::{self, category_color, write_ply, PlyPoint};
use log::warn;
use std::fmt::Write as _;
use std::path::Path;

pub fn run(
    map_path: &Path,
    dict_path: &Path,
    pca_path: Option<&Path>,
    mode: &str,
    out: &Path,
) -> CliResult {
    let map = io::read_map(map_path)?;
    let dict = io::read_dict(dict_path)?;
    let pca = pca_path.map(io::read_pca).transpose()?;

    if map.is_empty() {
        warn!(
            "map {} holds no voxels; writing an empty export",
            map_path.display()
        );
    }

    if mode == "category" {
        let mut points = Vec::new();
        let mut skipped = 0usize;
        for v in map.indices_sorted() {
            let state = map.voxel_state(v);
            if state.lam <= 1.0 {
                continue;
            }
            match inference::decode_category(&state, &dict, pca.as_ref()) {
                Ok(pred) => points.push(PlyPoint {
                    position: grid::index_to_centroid(v, map.grid()),
                    color: category_color(pred.category),
                }),
                Err(InferenceError::ZeroNormMean | InferenceError::ExpectationUndefined(_)) => {
                    skipped += 1;
                }
                Err(e) => return Err(e.into()),
            }
        }
        write_ply(out, &points)?;
        println!(
            "wrote {}: {} voxels decoded, {} undecodable skipped",
            out.display(),
            points.len(),
            skipped
        );
        return Ok(());
    }

    if let Some(phrase) = mode.strip_prefix("heatmap:") {
        let entry = dict.find(phrase).ok_or_else(|| {
            CliError::Data(anyhow::anyhow!(
                "phrase {phrase:?} is not in {}",
                dict_path.display()
            ))
        })?;
        let mut text = String::from("i,j,k,x,y,z,score\n");
        let mut rows = 0usize;
        let mut skipped = 0usize;
        for v in map.indices_sorted() {
            let state = map.voxel_state(v);
            if state.lam <= 1.0 {
                continue;
            }
            let mean = match inference::predictive_expectation(&state) {
                Ok(m) => m,
                Err(_) => {
                    skipped += 1;
                    continue;
                }
            };
            let lifted = match &pca {
                Some(t) => t.decode(&mean)?,
                None => mean,
            };
            let score = match dict.cosine_scores(&lifted) {
                Ok(scores) => scores[entry],
                Err(InferenceError::ZeroNormMean) => {
                    skipped += 1;
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            let c = grid::index_to_centroid(v, map.grid());
            let _ = writeln!(
                text,
                "{},{},{},{},{},{},{}",
                v.i,
                v.j,
                v.k,
                fmt_float(c[0]),
                fmt_float(c[1]),
                fmt_float(c[2]),
                fmt_float(score)
            );
            rows += 1;
        }
        write_text(out, &text)?;
        println!(
            "wrote {}: {} voxels scored for {phrase:?}, {} undecodable skipped",
            out.display(),
            rows,
            skipped
        );
        return Ok(());
    }

    Err(CliError::usage(format!(
        "unknown mode {mode:?}; expected category or heatmap:<phrase>"
    )))
}
