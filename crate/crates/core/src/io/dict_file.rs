//! Query dictionary files: ordered phrases with their embeddings, produced
//! offline by any text encoder.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic "LBKD" | version u16 | phrase count u32 | embedding dim u16
//! per entry: phrase byte length u16 | UTF-8 bytes | dim x f32
//! ```

use super::{atomic_write, read_all, FormatError};
use crate::inference::QueryDictionary;
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use std::io::Cursor;
use std::path::Path;

pub const DICT_MAGIC: &[u8; 4] = b"LBKD";
pub const DICT_VERSION: u16 = 1;

pub fn write_dict(path: &Path, dict: &QueryDictionary) -> Result<(), FormatError> {
    let dim = u16::try_from(dict.dim()).map_err(|_| FormatError::InvalidField {
        path: path.display().to_string(),
        field: "embedding dim".into(),
        reason: "exceeds u16".into(),
    })?;
    let mut buf = Vec::new();
    buf.extend_from_slice(DICT_MAGIC);
    buf.write_u16::<LittleEndian>(DICT_VERSION).unwrap();
    buf.write_u32::<LittleEndian>(dict.len() as u32).unwrap();
    buf.write_u16::<LittleEndian>(dim).unwrap();
    for (phrase, emb) in dict.phrases().iter().zip(dict.embeddings()) {
        let bytes = phrase.as_bytes();
        let len = u16::try_from(bytes.len()).map_err(|_| FormatError::InvalidField {
            path: path.display().to_string(),
            field: "phrase".into(),
            reason: format!("{phrase:?} longer than u16 bytes"),
        })?;
        buf.write_u16::<LittleEndian>(len).unwrap();
        buf.extend_from_slice(bytes);
        for &v in emb {
            buf.write_f32::<LittleEndian>(v).unwrap();
        }
    }
    atomic_write(path, &buf)
}

pub fn read_dict(path: &Path) -> Result<QueryDictionary, FormatError> {
    let bytes = read_all(path)?;
    let mut cur = Cursor::new(bytes.as_slice());
    let err = |e| FormatError::read_error(path, e);

    let mut magic = [0u8; 4];
    std::io::Read::read_exact(&mut cur, &mut magic).map_err(err)?;
    if &magic != DICT_MAGIC {
        return Err(FormatError::BadMagic {
            path: path.display().to_string(),
            expected: "LBKD dictionary".into(),
        });
    }
    let version = cur.read_u16::<LittleEndian>().map_err(err)?;
    if version != DICT_VERSION {
        return Err(FormatError::BadVersion {
            path: path.display().to_string(),
            got: version,
            expected: DICT_VERSION,
        });
    }
    let count = cur.read_u32::<LittleEndian>().map_err(err)? as usize;
    let dim = cur.read_u16::<LittleEndian>().map_err(err)? as usize;

    let mut phrases = Vec::with_capacity(count);
    let mut embeddings = Vec::with_capacity(count);
    for record in 0..count {
        let len = cur.read_u16::<LittleEndian>().map_err(err)? as usize;
        let mut raw = vec![0u8; len];
        std::io::Read::read_exact(&mut cur, &mut raw).map_err(err)?;
        let phrase = String::from_utf8(raw).map_err(|_| FormatError::InvalidField {
            path: path.display().to_string(),
            field: format!("phrase {record}"),
            reason: "not valid UTF-8".into(),
        })?;
        let mut emb = Vec::with_capacity(dim);
        for _ in 0..dim {
            let v = cur.read_f32::<LittleEndian>().map_err(err)?;
            if !v.is_finite() {
                return Err(FormatError::NonFinite {
                    path: path.display().to_string(),
                    record,
                });
            }
            emb.push(v);
        }
        phrases.push(phrase);
        embeddings.push(emb);
    }
    let rest = bytes.len() - cur.position() as usize;
    if rest != 0 {
        return Err(FormatError::TrailingBytes {
            path: path.display().to_string(),
            got: rest,
        });
    }
    Ok(QueryDictionary::new(phrases, embeddings)?)
}
