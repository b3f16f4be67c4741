//! Accuracy and intersection-over-union from decoded predictions.

use super::EvalError;

/// One evaluated test point: ground truth, the decoded category if the
/// voxel was decodable, and whether the voxel held enough evidence
/// (`lam > 1`) to decode at all.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodedPoint {
    pub label: usize,
    pub prediction: Option<usize>,
    pub covered: bool,
}

/// Segmentation metrics over a set of decoded points.
///
/// `confusion[t][p]` counts points of true class `t` predicted as `p`; the
/// extra final column counts undecodable points. Per-class IoU is
/// `TP / (TP + FP + FN)`, reported only for classes with nonzero ground-truth
/// support, and mIoU averages exactly those classes.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub accuracy: f64,
    pub miou: f64,
    pub per_class_iou: Vec<Option<f64>>,
    pub support: Vec<usize>,
    /// Fraction of points whose voxel held enough evidence to decode.
    pub coverage: f64,
    pub total: usize,
    pub correct: usize,
    pub confusion: Vec<Vec<usize>>,
}

impl MetricReport {
    pub fn from_decoded(points: &[DecodedPoint], classes: usize) -> Result<Self, EvalError> {
        if points.is_empty() {
            return Err(EvalError::EmptyTestSet);
        }
        let mut confusion = vec![vec![0usize; classes + 1]; classes];
        let mut covered = 0usize;
        for p in points {
            if p.label >= classes {
                return Err(EvalError::LabelOutOfRange {
                    label: p.label,
                    classes,
                });
            }
            let col = match p.prediction {
                Some(c) if c < classes => c,
                Some(c) => {
                    return Err(EvalError::LabelOutOfRange { label: c, classes });
                }
                None => classes,
            };
            confusion[p.label][col] += 1;
            if p.covered {
                covered += 1;
            }
        }
        Ok(Self::from_confusion(confusion, covered, points.len()))
    }

    fn from_confusion(confusion: Vec<Vec<usize>>, covered: usize, total: usize) -> Self {
        let classes = confusion.len();
        let correct: usize = (0..classes).map(|c| confusion[c][c]).sum();
        let support: Vec<usize> = confusion.iter().map(|row| row.iter().sum()).collect();
        let mut per_class_iou = vec![None; classes];
        let mut iou_sum = 0.0;
        let mut iou_classes = 0usize;
        for c in 0..classes {
            if support[c] == 0 {
                continue;
            }
            let tp = confusion[c][c];
            let fn_ = support[c] - tp;
            let fp: usize = (0..classes)
                .filter(|&t| t != c)
                .map(|t| confusion[t][c])
                .sum();
            let iou = tp as f64 / (tp + fp + fn_) as f64;
            per_class_iou[c] = Some(iou);
            iou_sum += iou;
            iou_classes += 1;
        }
        Self {
            accuracy: correct as f64 / total as f64,
            miou: if iou_classes > 0 {
                iou_sum / iou_classes as f64
            } else {
                0.0
            },
            per_class_iou,
            support,
            coverage: covered as f64 / total as f64,
            total,
            correct,
            confusion,
        }
    }
}
