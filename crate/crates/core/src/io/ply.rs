//! ASCII PLY point-cloud export: one colored vertex per row, consumable by
//! any standard viewer.

use super::{atomic_write, FormatError};
use std::fmt::Write as _;
use std::path::Path;

/// One exported vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlyPoint {
    pub position: [f64; 3],
    pub color: [u8; 3],
}

/// Deterministic category palette, cycled for large dictionaries.
const PALETTE: [[u8; 3]; 20] = [
    [31, 119, 180],
    [174, 199, 232],
    [255, 127, 14],
    [255, 187, 120],
    [44, 160, 44],
    [152, 223, 138],
    [214, 39, 40],
    [255, 152, 150],
    [148, 103, 189],
    [197, 176, 213],
    [140, 86, 75],
    [196, 156, 148],
    [227, 119, 194],
    [247, 182, 210],
    [127, 127, 127],
    [199, 199, 199],
    [188, 189, 34],
    [219, 219, 141],
    [23, 190, 207],
    [158, 218, 229],
];

pub fn category_color(category: usize) -> [u8; 3] {
    PALETTE[category % PALETTE.len()]
}

pub fn write_ply(path: &Path, points: &[PlyPoint]) -> Result<(), FormatError> {
    let mut text = String::new();
    text.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(text, "element vertex {}", points.len());
    text.push_str(
        "property float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n",
    );
    for (record, p) in points.iter().enumerate() {
        if !p.position.iter().all(|v| v.is_finite()) {
            return Err(FormatError::NonFinite {
                path: path.display().to_string(),
                record,
            });
        }
        let _ = writeln!(
            text,
            "{} {} {} {} {} {}",
            p.position[0] as f32,
            p.position[1] as f32,
            p.position[2] as f32,
            p.color[0],
            p.color[1],
            p.color[2]
        );
    }
    atomic_write(path, text.as_bytes())
}
