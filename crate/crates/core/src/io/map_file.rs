//! Map persistence.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic "LBKM" | version u16 | resolution f32 | kernel length f32
//! filter size u8 | latent dim u16 | prior lam0 f32 | prior psi0 f32
//! voxel count u64
//! per voxel: packed index i64 | lam f32 | mu dim x f32 | psi dim x f32
//! ```
//!
//! Records are sorted by (i, j, k), so identical maps serialize to identical
//! bytes and save/load/save round-trips are bit-exact.

use super::{atomic_write, read_all, FormatError};
use crate::grid::{GridConfig, VoxelIndex};
use crate::kernel::KernelConfig;
use crate::map::{LatentMap, MapPrior};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use std::io::Cursor;
use std::path::Path;

pub const MAP_MAGIC: &[u8; 4] = b"LBKM";
pub const MAP_VERSION: u16 = 1;

pub fn write_map(path: &Path, map: &LatentMap) -> Result<(), FormatError> {
    let dim = map.latent_dim();
    let dim_u16 = u16::try_from(dim).map_err(|_| FormatError::InvalidField {
        path: path.display().to_string(),
        field: "latent dim".into(),
        reason: format!("{dim} exceeds u16"),
    })?;

    let mut buf = Vec::with_capacity(29 + map.len() * (12 + dim * 8));
    buf.extend_from_slice(MAP_MAGIC);
    buf.write_u16::<LittleEndian>(MAP_VERSION).unwrap();
    buf.write_f32::<LittleEndian>(map.grid().resolution() as f32)
        .unwrap();
    buf.write_f32::<LittleEndian>(map.kernel().length() as f32)
        .unwrap();
    buf.push(map.grid().filter_size() as u8);
    buf.write_u16::<LittleEndian>(dim_u16).unwrap();
    buf.write_f32::<LittleEndian>(map.prior().lam0 as f32)
        .unwrap();
    buf.write_f32::<LittleEndian>(map.prior().psi0 as f32)
        .unwrap();
    buf.write_u64::<LittleEndian>(map.len() as u64).unwrap();

    for idx in map.indices_sorted() {
        let state = map.voxel_state(idx);
        buf.write_i64::<LittleEndian>(idx.pack()? as i64).unwrap();
        buf.write_f32::<LittleEndian>(state.lam as f32).unwrap();
        for &m in &state.mu {
            buf.write_f32::<LittleEndian>(m).unwrap();
        }
        for &p in &state.psi_diag {
            buf.write_f32::<LittleEndian>(p).unwrap();
        }
    }
    atomic_write(path, &buf)
}

pub fn read_map(path: &Path) -> Result<LatentMap, FormatError> {
    let bytes = read_all(path)?;
    let mut cur = Cursor::new(bytes.as_slice());
    let err = |e| FormatError::read_error(path, e);

    let mut magic = [0u8; 4];
    std::io::Read::read_exact(&mut cur, &mut magic).map_err(err)?;
    if &magic != MAP_MAGIC {
        return Err(FormatError::BadMagic {
            path: path.display().to_string(),
            expected: "LBKM map".into(),
        });
    }
    let version = cur.read_u16::<LittleEndian>().map_err(err)?;
    if version != MAP_VERSION {
        return Err(FormatError::BadVersion {
            path: path.display().to_string(),
            got: version,
            expected: MAP_VERSION,
        });
    }
    let resolution = cur.read_f32::<LittleEndian>().map_err(err)? as f64;
    let kernel_length = cur.read_f32::<LittleEndian>().map_err(err)? as f64;
    let filter_size = cur.read_u8().map_err(err)? as usize;
    let dim = cur.read_u16::<LittleEndian>().map_err(err)? as usize;
    let lam0 = cur.read_f32::<LittleEndian>().map_err(err)? as f64;
    let psi0 = cur.read_f32::<LittleEndian>().map_err(err)? as f64;
    let count = cur.read_u64::<LittleEndian>().map_err(err)? as usize;

    let grid = GridConfig::new(resolution, filter_size)?;
    let kernel = KernelConfig::new(kernel_length)?;
    let mut map = LatentMap::new(grid, kernel, dim, MapPrior { lam0, psi0 })?;

    for record in 0..count {
        let key = cur.read_i64::<LittleEndian>().map_err(err)? as u64;
        let lam = cur.read_f32::<LittleEndian>().map_err(err)? as f64;
        let mut mu = Vec::with_capacity(dim);
        for _ in 0..dim {
            mu.push(cur.read_f32::<LittleEndian>().map_err(err)?);
        }
        let mut psi = Vec::with_capacity(dim);
        for _ in 0..dim {
            psi.push(cur.read_f32::<LittleEndian>().map_err(err)?);
        }
        let finite = lam.is_finite()
            && lam >= 0.0
            && mu.iter().all(|v| v.is_finite())
            && psi.iter().all(|v| v.is_finite() && *v >= 0.0);
        if !finite {
            return Err(FormatError::NonFinite {
                path: path.display().to_string(),
                record,
            });
        }
        map.restore_voxel(VoxelIndex::unpack(key), lam, &mu, &psi)
            .map_err(|e| FormatError::InvalidField {
                path: path.display().to_string(),
                field: format!("record {record}"),
                reason: e.to_string(),
            })?;
    }
    let rest = bytes.len() - cur.position() as usize;
    if rest != 0 {
        return Err(FormatError::TrailingBytes {
            path: path.display().to_string(),
            got: rest,
        });
    }
    Ok(map)
}
