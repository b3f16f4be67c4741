//! Serialized PCA transforms.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic "LBKP" | version u16 | c_full u16 | c_reduced u16
//! mean: c_full x f32 | basis, column-major: c_full * c_reduced x f32
//! ```

use super::{atomic_write, read_all, FormatError};
use crate::pca::PcaTransform;
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use std::io::Cursor;
use std::path::Path;

pub const PCA_MAGIC: &[u8; 4] = b"LBKP";
pub const PCA_VERSION: u16 = 1;

pub fn write_pca(path: &Path, t: &PcaTransform) -> Result<(), FormatError> {
    let mut buf = Vec::with_capacity(10 + (t.mean().len() + t.basis().len()) * 4);
    buf.extend_from_slice(PCA_MAGIC);
    buf.write_u16::<LittleEndian>(PCA_VERSION).unwrap();
    buf.write_u16::<LittleEndian>(t.c_full() as u16).unwrap();
    buf.write_u16::<LittleEndian>(t.c_reduced() as u16).unwrap();
    for &v in t.mean() {
        buf.write_f32::<LittleEndian>(v as f32).unwrap();
    }
    for &v in t.basis() {
        buf.write_f32::<LittleEndian>(v as f32).unwrap();
    }
    atomic_write(path, &buf)
}

pub fn read_pca(path: &Path) -> Result<PcaTransform, FormatError> {
    let bytes = read_all(path)?;
    let mut cur = Cursor::new(bytes.as_slice());
    let err = |e| FormatError::read_error(path, e);

    let mut magic = [0u8; 4];
    std::io::Read::read_exact(&mut cur, &mut magic).map_err(err)?;
    if &magic != PCA_MAGIC {
        return Err(FormatError::BadMagic {
            path: path.display().to_string(),
            expected: "LBKP transform".into(),
        });
    }
    let version = cur.read_u16::<LittleEndian>().map_err(err)?;
    if version != PCA_VERSION {
        return Err(FormatError::BadVersion {
            path: path.display().to_string(),
            got: version,
            expected: PCA_VERSION,
        });
    }
    let c_full = cur.read_u16::<LittleEndian>().map_err(err)? as usize;
    let c_reduced = cur.read_u16::<LittleEndian>().map_err(err)? as usize;
    let mut mean = Vec::with_capacity(c_full);
    for _ in 0..c_full {
        mean.push(cur.read_f32::<LittleEndian>().map_err(err)? as f64);
    }
    let mut basis = Vec::with_capacity(c_full * c_reduced);
    for _ in 0..c_full * c_reduced {
        basis.push(cur.read_f32::<LittleEndian>().map_err(err)? as f64);
    }
    let rest = bytes.len() - cur.position() as usize;
    if rest != 0 {
        return Err(FormatError::TrailingBytes {
            path: path.display().to_string(),
            got: rest,
        });
    }
    Ok(PcaTransform::from_parts(mean, basis, c_full, c_reduced)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use tempfile::tempdir;

    #[test]
    fn round_trips_within_f32_precision() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let samples: Vec<Vec<f32>> = (0..200)
            .map(|_| (0..32).map(|_| rng.random_range(-1.0f32..1.0)).collect())
            .collect();
        let t = PcaTransform::fit(&samples, 8).unwrap();
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.lbkp");
        write_pca(&path, &t).unwrap();
        let back = read_pca(&path).unwrap();
        assert_eq!((back.c_full(), back.c_reduced()), (32, 8));
        for (a, b) in t.mean().iter().zip(back.mean()) {
            assert!((a - b).abs() < 1e-6);
        }
        for (a, b) in t.basis().iter().zip(back.basis()) {
            assert!((a - b).abs() < 1e-6);
        }
        // Second write of the loaded transform is byte-identical.
        let path2 = dir.path().join("t2.lbkp");
        write_pca(&path2, &back).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn rejects_corrupt_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let samples: Vec<Vec<f32>> = (0..50)
            .map(|_| (0..8).map(|_| rng.random_range(-1.0f32..1.0)).collect())
            .collect();
        let t = PcaTransform::fit(&samples, 3).unwrap();
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.lbkp");
        write_pca(&path, &t).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        // Scribble over part of the basis: orthonormality check fires.
        let at = bytes.len() - 6;
        bytes[at..at + 4].copy_from_slice(&2.5f32.to_le_bytes());
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_pca(&path), Err(FormatError::Pca(_))));
    }
}
