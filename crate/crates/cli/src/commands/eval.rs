use super::{fmt_float, require_config, write_text};
use crate::{CliError, CliResult};
use lbkmap_core::eval::{self, ExperimentParams, MetricReport};
use lbkmap_core::inference::UncertaintyMethod;
use lbkmap_core::io::EvalConfig;
use lbkmap_core::map::MapPrior;
use log::info;
use std::fmt::Write as _;
use std::path::Path;

fn method_tag(m: UncertaintyMethod) -> &'static str {
    match m {
        UncertaintyMethod::Sampling => "sampling",
        UncertaintyMethod::EOptimality => "e",
        UncertaintyMethod::DOptimality => "d",
    }
}

pub fn run(config: Option<&Path>, seed: u64, out_dir: &Path) -> CliResult {
    let cfg = EvalConfig::parse(require_config(config)?)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| anyhow::anyhow!("creating {}: {e}", out_dir.display()))?;

    let spec = cfg.scene.to_spec(seed);
    let params = ExperimentParams {
        kernel_length: cfg.kernel_length,
        prior: MapPrior {
            lam0: cfg.prior_lambda,
            psi0: cfg.prior_psi,
        },
        holdout: cfg.holdout,
        samples: cfg.samples,
        seed,
    };

    info!("generating scene and observation stream");
    let (scene, frames) = eval::generate_scene(&spec)?;
    let dict = scene.dictionary();
    let (train, test) = eval::holdout_split(&frames, params.holdout, seed)?;
    info!(
        "scene ready: {} voxels labeled, {} train points, {} test points",
        scene.labeled_voxels(),
        train.iter().map(|f| f.len()).sum::<usize>(),
        test.len()
    );

    for experiment in &cfg.experiments {
        match experiment.as_str() {
            "metrics" => {
                let map = eval::build_map(
                    spec.resolution,
                    cfg.filter_size,
                    spec.feature_dim,
                    &train,
                    &params,
                )?;
                let fused = eval::evaluate_map(&map, &test, &dict, None)?;
                let raw = eval::evaluate_raw(&test, &dict, None)?;
                let mut text = String::from("subject,accuracy,miou,coverage,correct,total\n");
                for (name, r) in [("map", &fused), ("segmentation", &raw)] {
                    let _ = writeln!(
                        text,
                        "{name},{},{},{},{},{}",
                        fmt_float(r.accuracy),
                        fmt_float(r.miou),
                        fmt_float(r.coverage),
                        r.correct,
                        r.total
                    );
                }
                let path = out_dir.join("metrics.csv");
                write_text(&path, &text)?;
                print_report("map", &fused);
                print_report("segmentation", &raw);
            }
            "ablation" => {
                let cells = eval::sparsity_ablation(
                    &scene,
                    &frames,
                    &cfg.densities,
                    &cfg.filter_sizes,
                    &params,
                )?;
                let mut text = String::from("density,filter_size,accuracy,miou,coverage\n");
                for c in &cells {
                    let _ = writeln!(
                        text,
                        "{},{},{},{},{}",
                        fmt_float(c.density),
                        c.filter_size,
                        fmt_float(c.report.accuracy),
                        fmt_float(c.report.miou),
                        fmt_float(c.report.coverage)
                    );
                }
                let path = out_dir.join("ablation.csv");
                write_text(&path, &text)?;
                println!("wrote {} ({} cells)", path.display(), cells.len());
            }
            "sparsification" => {
                let map = eval::build_map(
                    spec.resolution,
                    cfg.filter_size,
                    spec.feature_dim,
                    &train,
                    &params,
                )?;
                for &method in &cfg.methods {
                    let curve = eval::sparsification_curve(
                        &map,
                        &test,
                        &dict,
                        None,
                        method,
                        cfg.bins,
                        cfg.samples,
                        seed,
                    )?;
                    let mut text = String::from("fraction_removed,accuracy,miou\n");
                    for p in &curve {
                        let _ = writeln!(
                            text,
                            "{},{},{}",
                            fmt_float(p.fraction_removed),
                            fmt_float(p.accuracy),
                            fmt_float(p.miou)
                        );
                    }
                    let path = out_dir.join(format!("sparsification_{}.csv", method_tag(method)));
                    write_text(&path, &text)?;
                    println!(
                        "wrote {} (accuracy {} -> {})",
                        path.display(),
                        fmt_float(curve.first().map(|p| p.accuracy).unwrap_or(0.0)),
                        fmt_float(curve.last().map(|p| p.accuracy).unwrap_or(0.0))
                    );
                }
            }
            "correlation" => {
                let map = eval::build_map(
                    spec.resolution,
                    cfg.filter_size,
                    spec.feature_dim,
                    &train,
                    &params,
                )?;
                let pairs = [
                    (UncertaintyMethod::EOptimality, UncertaintyMethod::Sampling),
                    (UncertaintyMethod::DOptimality, UncertaintyMethod::Sampling),
                    (
                        UncertaintyMethod::EOptimality,
                        UncertaintyMethod::DOptimality,
                    ),
                ];
                let mut text = String::from("method_a,method_b,spearman\n");
                for (a, b) in pairs {
                    let rho =
                        eval::uncertainty_correlation(&map, a, b, &dict, None, cfg.samples, seed)?;
                    let _ = writeln!(
                        text,
                        "{},{},{}",
                        method_tag(a),
                        method_tag(b),
                        fmt_float(rho)
                    );
                }
                let path = out_dir.join("correlation.csv");
                write_text(&path, &text)?;
                println!("wrote {}", path.display());
            }
            other => {
                return Err(CliError::usage(format!(
                    "unknown experiment {other:?} (expected metrics, ablation, sparsification, correlation)"
                )));
            }
        }
    }
    Ok(())
}

fn print_report(name: &str, r: &MetricReport) {
    println!(
        "{name}: accuracy {:.4}, mIoU {:.4}, coverage {:.4} ({}/{} correct)",
        r.accuracy, r.miou, r.coverage, r.correct, r.total
    );
}
