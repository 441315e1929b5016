//! FTEN binary tensor files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! offset  size     field
//! 0       4        magic "FTEN"
//! 4       2        version (u16) = 1
//! 6       1        dtype (u8), 1 = f32 LE
//! 7       1        ndim (u8)
//! 8       4*ndim   dims (u32 each)
//! ..      8        payload length in elements (u64)
//! ..      4*len    payload, row-major f32 LE
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, FtenError, Result};
use crate::tensor::Tensor;

pub const MAGIC: [u8; 4] = *b"FTEN";
pub const VERSION: u16 = 1;
pub const DTYPE_F32: u8 = 1;

pub fn encode(tensor: &Tensor) -> Vec<u8> {
    let shape = tensor.shape();
    let mut out = Vec::with_capacity(16 + 4 * shape.len() + 4 * tensor.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(DTYPE_F32);
    out.push(shape.len() as u8);
    for &d in shape {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(&(tensor.len() as u64).to_le_bytes());
    for v in tensor.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn take<'a>(bytes: &'a [u8], cursor: &mut usize, n: usize) -> std::result::Result<&'a [u8], FtenError> {
    let end = *cursor + n;
    if end > bytes.len() {
        return Err(FtenError::Truncated {
            needed: end,
            found: bytes.len(),
        });
    }
    let s = &bytes[*cursor..end];
    *cursor = end;
    Ok(s)
}

pub fn decode(bytes: &[u8]) -> std::result::Result<Tensor, FtenError> {
    let mut cur = 0;
    let magic: [u8; 4] = take(bytes, &mut cur, 4)?.try_into().unwrap();
    if magic != MAGIC {
        return Err(FtenError::BadMagic(magic));
    }
    let version = u16::from_le_bytes(take(bytes, &mut cur, 2)?.try_into().unwrap());
    if version != VERSION {
        return Err(FtenError::BadVersion(version));
    }
    let dtype = take(bytes, &mut cur, 1)?[0];
    if dtype != DTYPE_F32 {
        return Err(FtenError::BadDtype(dtype));
    }
    let ndim = take(bytes, &mut cur, 1)?[0] as usize;
    let mut dims = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        dims.push(u32::from_le_bytes(take(bytes, &mut cur, 4)?.try_into().unwrap()));
    }
    let declared = u64::from_le_bytes(take(bytes, &mut cur, 8)?.try_into().unwrap());
    let expected: u64 = dims.iter().map(|&d| d as u64).product();
    if expected != declared {
        return Err(FtenError::LengthMismatch {
            dims,
            expected,
            declared,
        });
    }
    let payload = take(bytes, &mut cur, declared as usize * 4)?;
    if cur != bytes.len() {
        return Err(FtenError::TrailingBytes(bytes.len() - cur));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let shape = dims.into_iter().map(|d| d as usize).collect();
    Ok(Tensor::new(shape, data).expect("length checked against dims"))
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|source| Error::Format {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_tensor(path: impl AsRef<Path>, tensor: &Tensor) -> Result<()> {
    write_atomic(path.as_ref(), &encode(tensor))
}

/// Writes via a sibling temp file and rename so readers never see partial files.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
