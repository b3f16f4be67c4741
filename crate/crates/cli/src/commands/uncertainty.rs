use super::{fmt_float, write_text};
use crate::{CliError, CliResult};
use lbkmap_core::inference::{self, UncertaintyMethod};
use lbkmap_core::io;
use std::fmt::Write as _;
use std::path::Path;

/// Emitted for voxels whose covariance is undefined (`lam <= 2`); such rows
/// sort after every finite value.
const UNDEFINED: &str = "undefined";

pub fn run(
    map_path: &Path,
    method_arg: &str,
    dict_path: Option<&Path>,
    pca_path: Option<&Path>,
    samples: usize,
    seed: u64,
    out: &Path,
) -> CliResult {
    let method: UncertaintyMethod = method_arg.parse().map_err(CliError::Usage)?;
    if method == UncertaintyMethod::Sampling && dict_path.is_none() {
        return Err(CliError::usage(
            "--method sampling decodes posterior samples and needs --dict",
        ));
    }
    let map = io::read_map(map_path)?;
    let pca = pca_path.map(io::read_pca).transpose()?;
    // E/D-optimality never touch the dictionary; a placeholder keeps one
    // code path.
    let dict = match dict_path {
        Some(p) => io::read_dict(p)?,
        None => {
            inference::QueryDictionary::new(vec![String::new()], vec![vec![1.0; map.latent_dim()]])?
        }
    };

    let mut rows: Vec<(i64, f64, Option<f64>)> = Vec::with_capacity(map.len());
    for (v, u) in
        lbkmap_core::eval::voxel_uncertainties(&map, method, &dict, pca.as_ref(), samples, seed)
    {
        let state = map.voxel_state(v);
        let value = u.is_finite().then_some(u);
        rows.push((v.pack()? as i64, state.lam, value));
    }
    // Ascending uncertainty, undefined rows last, index as the tiebreak.
    rows.sort_by(|a, b| match (a.2, b.2) {
        (Some(x), Some(y)) => x.partial_cmp(&y).unwrap().then(a.0.cmp(&b.0)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.0.cmp(&b.0),
    });

    let mut text = String::from("index,lam,uncertainty\n");
    let mut undefined = 0usize;
    for (index, lam, value) in &rows {
        let u = match value {
            Some(u) => fmt_float(*u),
            None => {
                undefined += 1;
                UNDEFINED.to_string()
            }
        };
        let _ = writeln!(text, "{index},{},{u}", fmt_float(*lam));
    }
    write_text(out, &text)?;
    println!(
        "wrote {}: {} voxels, {} with undefined uncertainty",
        out.display(),
        rows.len(),
        undefined
    );
    Ok(())
}
