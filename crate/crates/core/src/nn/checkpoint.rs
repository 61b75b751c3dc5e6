//! Checkpoint serialization.
//!
//! Layout: magic bytes "LWNN", format version u16, manifest (parameter names
//! and shapes), then all values as little-endian f32 in declaration order.
//! Everything multi-byte is little-endian, so files are byte-exact across
//! platforms.

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;
use crate::scalar::Scalar;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"LWNN";
const VERSION: u16 = 1;

/// Serialize named parameters. Values are stored as f32 regardless of the
/// working precision.
pub fn write_checkpoint<T: Scalar, W: Write>(params: &[(String, Tensor<T>)], mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(params.len() as u32).to_le_bytes())?;
    for (name, tensor) in params {
        let bytes = name.as_bytes();
        if bytes.len() > u16::MAX as usize {
            return Err(Error::Format(format!("parameter name too long: {name}")));
        }
        w.write_all(&(bytes.len() as u16).to_le_bytes())?;
        w.write_all(bytes)?;
        let shape = tensor.shape();
        if shape.len() > u8::MAX as usize {
            return Err(Error::Format("tensor rank exceeds u8".into()));
        }
        w.write_all(&[shape.len() as u8])?;
        for &d in shape {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
    }
    for (_, tensor) in params {
        for &v in tensor.data() {
            w.write_all(&(v.as_f64() as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn save_checkpoint<T: Scalar>(params: &[(String, Tensor<T>)], path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_checkpoint(params, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

/// Checkpoint bytes without touching disk (used for byte-identity checks).
pub fn checkpoint_bytes<T: Scalar>(params: &[(String, Tensor<T>)]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_checkpoint(params, &mut buf)?;
    Ok(buf)
}

pub fn read_checkpoint<T: Scalar, R: Read>(mut r: R) -> Result<Vec<(String, Tensor<T>)>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let mut u16b = [0u8; 2];
    r.read_exact(&mut u16b)?;
    let version = u16::from_le_bytes(u16b);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let mut u32b = [0u8; 4];
    r.read_exact(&mut u32b)?;
    let count = u32::from_le_bytes(u32b) as usize;
    let mut manifest: Vec<(String, Vec<usize>)> = Vec::with_capacity(count);
    for _ in 0..count {
        r.read_exact(&mut u16b)?;
        let name_len = u16::from_le_bytes(u16b) as usize;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|e| Error::Format(e.to_string()))?;
        let mut rank = [0u8; 1];
        r.read_exact(&mut rank)?;
        let mut shape = Vec::with_capacity(rank[0] as usize);
        for _ in 0..rank[0] {
            r.read_exact(&mut u32b)?;
            shape.push(u32::from_le_bytes(u32b) as usize);
        }
        manifest.push((name, shape));
    }
    let mut out = Vec::with_capacity(count);
    for (name, shape) in manifest {
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut u32b)?;
            data.push(T::of_f64(f32::from_le_bytes(u32b) as f64));
        }
        out.push((name, Tensor::from_vec(&shape, data)?));
    }
    Ok(out)
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<Vec<(String, Tensor<T>)>> {
    let bytes = std::fs::read(path)?;
    read_checkpoint(bytes.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_preserves_names_shapes_values() {
        let params = vec![
            ("conv.w".to_string(), Tensor::from_vec(&[2, 3], vec![1.0f32, -2.5, 0.0, 4.25, 1e-7, 3.0]).unwrap()),
            ("conv.b".to_string(), Tensor::from_vec(&[2], vec![0.5f32, -0.5]).unwrap()),
        ];
        let bytes = checkpoint_bytes(&params).unwrap();
        assert_eq!(&bytes[..4], b"LWNN");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
        let back: Vec<(String, Tensor<f32>)> = read_checkpoint(bytes.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        for ((n1, t1), (n2, t2)) in params.iter().zip(&back) {
            assert_eq!(n1, n2);
            assert_eq!(t1.shape(), t2.shape());
            assert_eq!(t1.data(), t2.data());
        }
    }

    #[test]
    fn rejects_corrupt_header() {
        let params = vec![("w".to_string(), Tensor::from_vec(&[1], vec![1.0f32]).unwrap())];
        let mut bytes = checkpoint_bytes(&params).unwrap();
        bytes[0] = b'X';
        assert!(read_checkpoint::<f32, _>(bytes.as_slice()).is_err());
    }
}
