//! `WB01` tensor container.
//!
//! Layout: magic `WB01`, u32 LE tensor count, then per tensor: u8 name
//! length, name bytes (UTF-8), u32 LE rank, `rank` u32 LE dims, and the
//! f32 LE values in row-major order.

use std::io::{Read, Write};

use ndarray::{Array2, ArrayD, IxDyn};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 4] = b"WB01";

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn from_array<T: Scalar>(
        name: impl Into<String>,
        array: ndarray::ArrayViewD<'_, T>,
    ) -> Self {
        Self {
            name: name.into(),
            dims: array.shape().to_vec(),
            data: array.iter().map(|v| v.to_f64_lossy() as f32).collect(),
        }
    }

    pub fn to_array<T: Scalar>(&self) -> Result<ArrayD<T>> {
        ArrayD::from_shape_vec(
            IxDyn(&self.dims),
            self.data.iter().map(|&v| T::lit(v as f64)).collect(),
        )
        .map_err(|e| Error::parse(format!("tensor {}: {e}", self.name)))
    }

    /// Views a rank-1 or rank-2 tensor as a matrix (rank 1 becomes one row).
    pub fn to_matrix<T: Scalar>(&self) -> Result<Array2<T>> {
        let (r, c) = match self.dims.as_slice() {
            [c] => (1, *c),
            [r, c] => (*r, *c),
            d => {
                return Err(Error::InvalidConfig(format!(
                    "tensor {} has rank {}, expected 1 or 2",
                    self.name,
                    d.len()
                )))
            }
        };
        Array2::from_shape_vec(
            (r, c),
            self.data.iter().map(|&v| T::lit(v as f64)).collect(),
        )
        .map_err(|e| Error::parse(format!("tensor {}: {e}", self.name)))
    }
}

pub fn write(tensors: &[Tensor], mut w: impl Write) -> Result<()> {
    let count =
        u32::try_from(tensors.len()).map_err(|_| Error::InvalidCount("too many tensors".into()))?;
    w.write_all(MAGIC)?;
    w.write_all(&count.to_le_bytes())?;
    for t in tensors {
        let name = t.name.as_bytes();
        let len = u8::try_from(name.len())
            .map_err(|_| Error::InvalidConfig(format!("tensor name too long: {}", t.name)))?;
        if t.dims.iter().product::<usize>() != t.data.len() {
            return Err(Error::InvalidConfig(format!(
                "tensor {} dims/data mismatch",
                t.name
            )));
        }
        w.write_all(&[len])?;
        w.write_all(name)?;
        w.write_all(&(t.dims.len() as u32).to_le_bytes())?;
        for &d in &t.dims {
            let d = u32::try_from(d)
                .map_err(|_| Error::InvalidConfig(format!("dimension {d} too large")))?;
            w.write_all(&d.to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(t.data.len() * 4);
        for v in &t.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn read(mut r: impl Read) -> Result<Vec<Tensor>> {
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic)?;
    if &magic != MAGIC {
        return Err(Error::parse("bad WB01 magic"));
    }
    let count = read_u32(&mut r)? as usize;
    let mut tensors = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let mut len = [0u8; 1];
        read_exact(&mut r, &mut len)?;
        let mut name = vec![0u8; len[0] as usize];
        read_exact(&mut r, &mut name)?;
        let name = String::from_utf8(name).map_err(|_| Error::parse("tensor name is not UTF-8"))?;
        let rank = read_u32(&mut r)? as usize;
        if rank > 8 {
            return Err(Error::parse(format!(
                "tensor {name} has implausible rank {rank}"
            )));
        }
        let dims = (0..rank)
            .map(|_| read_u32(&mut r).map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let numel = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::parse("tensor too large"))?;
        let mut bytes = vec![
            0u8;
            numel
                .checked_mul(4)
                .ok_or_else(|| Error::parse("tensor too large"))?
        ];
        read_exact(&mut r, &mut bytes)?;
        let data = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        tensors.push(Tensor { name, dims, data });
    }
    Ok(tensors)
}

fn read_exact(r: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::parse("truncated WB01 stream"))
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}
