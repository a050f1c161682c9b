//! Embedding tensors as NPY files (shape `(frames, dims)`, C order,
//! little-endian f32 or f64) with a JSON sidecar next to them
//! (`clip.npy` ↔ `clip.json`) carrying encoder metadata.

use std::io::Write;
use std::path::{Path, PathBuf};

use super::HarnessError;
use crate::embed::{EmbeddingMatrix, EmbeddingMeta};

const MAGIC: &[u8] = b"\x93NUMPY";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NpyDtype {
    F32,
    F64,
}

impl NpyDtype {
    fn descr(self) -> &'static str {
        match self {
            NpyDtype::F32 => "<f4",
            NpyDtype::F64 => "<f8",
        }
    }

    fn width(self) -> usize {
        match self {
            NpyDtype::F32 => 4,
            NpyDtype::F64 => 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NpyTensor {
    pub shape: Vec<usize>,
    pub dtype: NpyDtype,
    pub data: Vec<f64>,
}

pub fn read_npy(path: impl AsRef<Path>) -> Result<NpyTensor, HarnessError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    let bad = |message: &str| HarnessError::BadTensor {
        path: path.to_path_buf(),
        message: message.to_string(),
    };
    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err(HarnessError::BadMagic { path: path.to_path_buf() });
    }
    let (header_len, header_start) = match bytes[6] {
        1 => (u16::from_le_bytes([bytes[8], bytes[9]]) as usize, 10),
        2 | 3 => {
            if bytes.len() < 12 {
                return Err(bad("truncated header"));
            }
            (u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize, 12)
        }
        v => return Err(bad(&format!("unsupported NPY version {v}"))),
    };
    let data_start = header_start + header_len;
    if bytes.len() < data_start {
        return Err(bad("truncated header"));
    }
    let header = std::str::from_utf8(&bytes[header_start..data_start]).map_err(|_| bad("header is not text"))?;

    let descr = dict_value(header, "descr").ok_or_else(|| bad("header lacks 'descr'"))?;
    let descr = descr.trim_matches(|c| c == '\'' || c == '"');
    let dtype = match descr {
        "<f4" => NpyDtype::F32,
        "<f8" => NpyDtype::F64,
        other => {
            return Err(HarnessError::UnsupportedDtype {
                path: path.to_path_buf(),
                dtype: other.to_string(),
            })
        }
    };
    match dict_value(header, "fortran_order") {
        Some("False") => {}
        Some("True") => return Err(bad("Fortran-ordered arrays are not supported")),
        _ => return Err(bad("header lacks 'fortran_order'")),
    }
    let shape_text = dict_value(header, "shape").ok_or_else(|| bad("header lacks 'shape'"))?;
    let shape = parse_shape(shape_text).ok_or_else(|| bad("malformed shape"))?;

    let count: usize = shape.iter().product();
    let payload = &bytes[data_start..];
    if payload.len() < count * dtype.width() {
        return Err(bad(&format!(
            "payload holds {} bytes, shape needs {}",
            payload.len(),
            count * dtype.width()
        )));
    }
    let data: Vec<f64> = match dtype {
        NpyDtype::F32 => payload
            .chunks_exact(4)
            .take(count)
            .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
            .collect(),
        NpyDtype::F64 => payload
            .chunks_exact(8)
            .take(count)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect(),
    };
    Ok(NpyTensor { shape, dtype, data })
}

/// Raw text of `key`'s value in a Python dict literal such as
/// `{'descr': '<f4', 'fortran_order': False, 'shape': (3, 4), }`.
fn dict_value<'a>(header: &'a str, key: &str) -> Option<&'a str> {
    let quoted = [format!("'{key}'"), format!("\"{key}\"")];
    let pos = quoted.iter().find_map(|q| header.find(q.as_str()).map(|p| p + q.len()))?;
    let rest = header[pos..].trim_start().strip_prefix(':')?.trim_start();
    let end = if rest.starts_with('(') {
        rest.find(')')? + 1
    } else if let Some(quote) = rest.chars().next().filter(|c| *c == '\'' || *c == '"') {
        rest[1..].find(quote)? + 2
    } else {
        rest.find([',', '}']).unwrap_or(rest.len())
    };
    Some(rest[..end].trim())
}

fn parse_shape(text: &str) -> Option<Vec<usize>> {
    let inner = text.strip_prefix('(')?.strip_suffix(')')?;
    inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().ok())
        .collect()
}

/// Write a version 1.0 NPY file.
pub fn write_npy(path: impl AsRef<Path>, shape: &[usize], data: &[f64], dtype: NpyDtype) -> Result<(), HarnessError> {
    let path = path.as_ref();
    assert_eq!(shape.iter().product::<usize>(), data.len(), "shape does not match data length");
    let dims: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
    let shape_text = if dims.len() == 1 {
        format!("({},)", dims[0])
    } else {
        format!("({})", dims.join(", "))
    };
    let mut header = format!("{{'descr': '{}', 'fortran_order': False, 'shape': {shape_text}, }}", dtype.descr());
    // pad so the payload starts on a 64-byte boundary
    let unpadded = MAGIC.len() + 4 + header.len() + 1;
    header.push_str(&" ".repeat((64 - unpadded % 64) % 64));
    header.push('\n');

    let mut out = Vec::with_capacity(MAGIC.len() + 4 + header.len() + data.len() * dtype.width());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    match dtype {
        NpyDtype::F32 => data.iter().for_each(|&v| out.extend_from_slice(&(v as f32).to_le_bytes())),
        NpyDtype::F64 => data.iter().for_each(|&v| out.extend_from_slice(&v.to_le_bytes())),
    }
    let mut file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    file.write_all(&out).map_err(|e| HarnessError::io(path, e))
}

pub fn sidecar_path(npy: &Path) -> PathBuf {
    npy.with_extension("json")
}

/// Load a `(frames, dims)` tensor and its sidecar metadata, if any.
pub fn load_embedding(path: impl AsRef<Path>) -> Result<EmbeddingMatrix, HarnessError> {
    let path = path.as_ref();
    let tensor = read_npy(path)?;
    let [frames, dims] = tensor.shape[..] else {
        return Err(HarnessError::BadTensor {
            path: path.to_path_buf(),
            message: format!("expected a 2-D (frames, dims) tensor, got shape {:?}", tensor.shape),
        });
    };
    if tensor.data.iter().any(|v| !v.is_finite()) {
        return Err(HarnessError::NonFinite { path: path.to_path_buf() });
    }

    let sidecar = sidecar_path(path);
    let mut meta = if sidecar.exists() {
        let text = std::fs::read_to_string(&sidecar).map_err(|e| HarnessError::io(&sidecar, e))?;
        serde_json::from_str::<EmbeddingMeta>(&text).map_err(|e| HarnessError::parse(sidecar.display().to_string(), e))?
    } else {
        EmbeddingMeta::default()
    };
    if meta.source.is_none() {
        meta.source = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    }
    EmbeddingMatrix::from_frames(dims, frames, tensor.data, meta).map_err(|e| HarnessError::BadTensor {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Write an embedding as `(frames, dims)` NPY plus JSON sidecar.
pub fn write_embedding(path: impl AsRef<Path>, emb: &EmbeddingMatrix, dtype: NpyDtype) -> Result<(), HarnessError> {
    let path = path.as_ref();
    write_npy(path, &[emb.frames(), emb.dims()], emb.values(), dtype)?;
    let sidecar = sidecar_path(path);
    let text = serde_json::to_string_pretty(&emb.meta).expect("metadata serializes");
    std::fs::write(&sidecar, text).map_err(|e| HarnessError::io(&sidecar, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_values() {
        let h = "{'descr': '<f4', 'fortran_order': False, 'shape': (374, 768), }";
        assert_eq!(dict_value(h, "descr"), Some("'<f4'"));
        assert_eq!(dict_value(h, "fortran_order"), Some("False"));
        assert_eq!(parse_shape(dict_value(h, "shape").unwrap()), Some(vec![374, 768]));
        assert_eq!(parse_shape("(5,)"), Some(vec![5]));
    }

    #[test]
    fn header_is_aligned() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.npy");
        write_npy(&p, &[2, 3], &[0.0; 6], NpyDtype::F32).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
        assert_eq!((10 + header_len) % 64, 0);
        assert_eq!(bytes.len(), 10 + header_len + 24);
        assert_eq!(bytes[10 + header_len - 1], b'\n');
    }

    #[test]
    fn shape_maps_to_dims_by_frames() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.npy");
        write_npy(&p, &[374, 768], &vec![0.25; 374 * 768], NpyDtype::F32).unwrap();
        let emb = load_embedding(&p).unwrap();
        assert_eq!((emb.dims(), emb.frames()), (768, 374));
        assert_eq!(emb.meta.source.as_deref(), Some("e"));
    }

    #[test]
    fn rejects_bad_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.npy");
        std::fs::write(&p, b"not an npy file at all").unwrap();
        assert!(matches!(read_npy(&p), Err(HarnessError::BadMagic { .. })));

        let mut bytes = MAGIC.to_vec();
        let header = "{'descr': '<i4', 'fortran_order': False, 'shape': (1, 2), }\n";
        bytes.extend_from_slice(&[1, 0]);
        bytes.extend_from_slice(&(header.len() as u16).to_le_bytes());
        bytes.extend_from_slice(header.as_bytes());
        bytes.extend_from_slice(&[0; 8]);
        std::fs::write(&p, &bytes).unwrap();
        assert!(matches!(read_npy(&p), Err(HarnessError::UnsupportedDtype { dtype, .. }) if dtype == "<i4"));

        write_npy(&p, &[2, 2], &[1.0, f64::NAN, 0.0, 0.0], NpyDtype::F64).unwrap();
        assert!(matches!(load_embedding(&p), Err(HarnessError::NonFinite { .. })));

        write_npy(&p, &[4], &[1.0; 4], NpyDtype::F64).unwrap();
        assert!(matches!(load_embedding(&p), Err(HarnessError::BadTensor { .. })));
    }

    #[test]
    fn truncated_payload() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.npy");
        write_npy(&p, &[4, 4], &[1.0; 16], NpyDtype::F64).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() - 8]).unwrap();
        assert!(matches!(read_npy(&p), Err(HarnessError::BadTensor { .. })));
    }

    #[test]
    fn sidecar_metadata_is_loaded() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("clip.npy");
        let meta = EmbeddingMeta {
            encoder: Some("m-a-p/MERT-v1-95M".into()),
            layer: Some(12),
            source: Some("song1/vocals".into()),
        };
        let emb = EmbeddingMatrix::from_frames(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], meta.clone()).unwrap();
        write_embedding(&p, &emb, NpyDtype::F64).unwrap();
        let back = load_embedding(&p).unwrap();
        assert_eq!(back, emb);
        assert_eq!(back.meta, meta);
    }
}
