//! Observation frame files.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic "LBKF" | version u16 | point count u32 | feature dim u16 | flags u8
//! per point: position 3 x f32 | feature dim x f32 | [range f32] | [label u32]
//! ```
//!
//! Bit 0 of `flags` marks the presence of the range field, bit 1 of the
//! label field; either all points of a frame carry a field or none do.

use super::{atomic_write, read_all, FormatError};
use crate::map::{Observation, ObservationFrame};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use std::io::Cursor;
use std::path::Path;

pub const FRAME_MAGIC: &[u8; 4] = b"LBKF";
pub const FRAME_VERSION: u16 = 1;

const FLAG_RANGE: u8 = 0b01;
const FLAG_LABEL: u8 = 0b10;

/// Serializes a frame. `feature_dim` must match every point (it also types
/// empty frames).
pub fn write_frame(
    path: &Path,
    frame: &ObservationFrame,
    feature_dim: usize,
) -> Result<(), FormatError> {
    let dim = u16::try_from(feature_dim).map_err(|_| FormatError::InvalidField {
        path: path.display().to_string(),
        field: "feature dim".into(),
        reason: format!("{feature_dim} exceeds u16"),
    })?;
    let count = u32::try_from(frame.points.len()).map_err(|_| FormatError::InvalidField {
        path: path.display().to_string(),
        field: "point count".into(),
        reason: "exceeds u32".into(),
    })?;

    let has_range = frame.points.first().map(|p| p.range.is_some());
    let has_label = frame.points.first().map(|p| p.label.is_some());
    let mut flags = 0u8;
    if has_range == Some(true) {
        flags |= FLAG_RANGE;
    }
    if has_label == Some(true) {
        flags |= FLAG_LABEL;
    }

    let mut buf = Vec::with_capacity(13 + frame.points.len() * (12 + feature_dim * 4 + 8));
    buf.extend_from_slice(FRAME_MAGIC);
    buf.write_u16::<LittleEndian>(FRAME_VERSION).unwrap();
    buf.write_u32::<LittleEndian>(count).unwrap();
    buf.write_u16::<LittleEndian>(dim).unwrap();
    buf.push(flags);

    for (record, p) in frame.points.iter().enumerate() {
        if p.feature.len() != feature_dim {
            return Err(FormatError::InvalidField {
                path: path.display().to_string(),
                field: "feature".into(),
                reason: format!(
                    "record {record} has dimension {}, expected {feature_dim}",
                    p.feature.len()
                ),
            });
        }
        if p.range.is_some() != (has_range == Some(true)) {
            return Err(FormatError::MixedOptionalField {
                field: "range".into(),
            });
        }
        if p.label.is_some() != (has_label == Some(true)) {
            return Err(FormatError::MixedOptionalField {
                field: "label".into(),
            });
        }
        let finite = p.position.iter().all(|v| v.is_finite())
            && p.feature.iter().all(|v| v.is_finite())
            && p.range.map(|r| r.is_finite()).unwrap_or(true);
        if !finite {
            return Err(FormatError::NonFinite {
                path: path.display().to_string(),
                record,
            });
        }
        for &c in &p.position {
            buf.write_f32::<LittleEndian>(c as f32).unwrap();
        }
        for &f in &p.feature {
            buf.write_f32::<LittleEndian>(f).unwrap();
        }
        if let Some(r) = p.range {
            buf.write_f32::<LittleEndian>(r).unwrap();
        }
        if let Some(l) = p.label {
            buf.write_u32::<LittleEndian>(l).unwrap();
        }
    }
    atomic_write(path, &buf)
}

pub fn read_frame(path: &Path) -> Result<ObservationFrame, FormatError> {
    let bytes = read_all(path)?;
    let mut cur = Cursor::new(bytes.as_slice());
    let err = |e| FormatError::read_error(path, e);

    let mut magic = [0u8; 4];
    std::io::Read::read_exact(&mut cur, &mut magic).map_err(err)?;
    if &magic != FRAME_MAGIC {
        return Err(FormatError::BadMagic {
            path: path.display().to_string(),
            expected: "LBKF frame".into(),
        });
    }
    let version = cur.read_u16::<LittleEndian>().map_err(err)?;
    if version != FRAME_VERSION {
        return Err(FormatError::BadVersion {
            path: path.display().to_string(),
            got: version,
            expected: FRAME_VERSION,
        });
    }
    let count = cur.read_u32::<LittleEndian>().map_err(err)? as usize;
    let dim = cur.read_u16::<LittleEndian>().map_err(err)? as usize;
    let flags = cur.read_u8().map_err(err)?;
    let has_range = flags & FLAG_RANGE != 0;
    let has_label = flags & FLAG_LABEL != 0;

    let mut points = Vec::with_capacity(count);
    for record in 0..count {
        let mut position = [0.0f64; 3];
        for c in &mut position {
            *c = cur.read_f32::<LittleEndian>().map_err(err)? as f64;
        }
        let mut feature = Vec::with_capacity(dim);
        for _ in 0..dim {
            feature.push(cur.read_f32::<LittleEndian>().map_err(err)?);
        }
        let range = if has_range {
            Some(cur.read_f32::<LittleEndian>().map_err(err)?)
        } else {
            None
        };
        let label = if has_label {
            Some(cur.read_u32::<LittleEndian>().map_err(err)?)
        } else {
            None
        };
        let finite = position.iter().all(|v| v.is_finite())
            && feature.iter().all(|v| v.is_finite())
            && range.map(|r| r.is_finite()).unwrap_or(true);
        if !finite {
            return Err(FormatError::NonFinite {
                path: path.display().to_string(),
                record,
            });
        }
        points.push(Observation {
            position,
            feature,
            range,
            label,
        });
    }
    let rest = bytes.len() - cur.position() as usize;
    if rest != 0 {
        return Err(FormatError::TrailingBytes {
            path: path.display().to_string(),
            got: rest,
        });
    }
    Ok(ObservationFrame::new(points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::Observation;
    use tempfile::tempdir;

    fn sample_frame(with_range: bool, with_label: bool) -> ObservationFrame {
        let points = (0..5)
            .map(|i| Observation {
                position: [i as f64 * 0.25, -0.5, 1.0],
                feature: vec![i as f32, 0.5, -1.25],
                range: with_range.then_some(1.5 + i as f32),
                label: with_label.then_some(i as u32 % 3),
            })
            .collect();
        ObservationFrame::new(points)
    }

    #[test]
    fn round_trips_all_flag_combinations() {
        let dir = tempdir().unwrap();
        for (r, l) in [(false, false), (true, false), (false, true), (true, true)] {
            let path = dir.path().join(format!("f_{r}_{l}.lbkf"));
            let frame = sample_frame(r, l);
            write_frame(&path, &frame, 3).unwrap();
            let back = read_frame(&path).unwrap();
            assert_eq!(back.points.len(), frame.points.len());
            for (a, b) in back.points.iter().zip(&frame.points) {
                // Positions pass through f32.
                for (x, y) in a.position.iter().zip(&b.position) {
                    assert!((x - y).abs() < 1e-6);
                }
                assert_eq!(a.feature, b.feature);
                assert_eq!(a.range, b.range);
                assert_eq!(a.label, b.label);
            }
        }
    }

    #[test]
    fn empty_frame_round_trips() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("empty.lbkf");
        write_frame(&path, &ObservationFrame::default(), 16).unwrap();
        let back = read_frame(&path).unwrap();
        assert!(back.is_empty());
    }

    #[test]
    fn rejects_truncation_and_trailing_bytes() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("frame.lbkf");
        write_frame(&path, &sample_frame(true, true), 3).unwrap();
        let bytes = std::fs::read(&path).unwrap();

        let cut = dir.path().join("cut.lbkf");
        std::fs::write(&cut, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(
            read_frame(&cut),
            Err(FormatError::Truncated { .. })
        ));

        let padded = dir.path().join("padded.lbkf");
        let mut extra = bytes.clone();
        extra.extend_from_slice(&[0, 1, 2]);
        std::fs::write(&padded, &extra).unwrap();
        assert!(matches!(
            read_frame(&padded),
            Err(FormatError::TrailingBytes { got: 3, .. })
        ));
    }

    #[test]
    fn rejects_wrong_magic_and_version() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("frame.lbkf");
        write_frame(&path, &sample_frame(false, false), 3).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        let bad = dir.path().join("bad.lbkf");
        std::fs::write(&bad, &bytes).unwrap();
        assert!(matches!(
            read_frame(&bad),
            Err(FormatError::BadMagic { .. })
        ));

        let mut bytes = std::fs::read(&path).unwrap();
        bytes[4] = 99;
        std::fs::write(&bad, &bytes).unwrap();
        assert!(matches!(
            read_frame(&bad),
            Err(FormatError::BadVersion { got: 99, .. })
        ));
    }

    #[test]
    fn rejects_non_finite_and_mixed_optionals() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("frame.lbkf");
        let mut frame = sample_frame(false, false);
        frame.points[1].feature[0] = f32::NAN;
        assert!(matches!(
            write_frame(&path, &frame, 3),
            Err(FormatError::NonFinite { record: 1, .. })
        ));

        let mut mixed = sample_frame(true, false);
        mixed.points[2].range = None;
        assert!(matches!(
            write_frame(&path, &mixed, 3),
            Err(FormatError::MixedOptionalField { .. })
        ));
    }
}
