//! DTF1 binary tensor files.
//!
//! Layout: magic `DTF1`, one dtype byte (`0x01` float64, `0x02` uint8), a
//! little-endian `u32` mode count N, N little-endian `u64` shape entries, then
//! the values in storage order (little-endian).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tensor::DenseTensor;

pub const MAGIC: &[u8; 4] = b"DTF1";
pub const DTYPE_F64: u8 = 0x01;
pub const DTYPE_U8: u8 = 0x02;

/// Boolean tensor (labels, flags). Stored as uint8 0/1 on disk.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    pub shape: Vec<usize>,
    pub data: Vec<bool>,
}

impl Mask {
    pub fn new(shape: Vec<usize>, data: Vec<bool>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::InvalidShape(shape));
        }
        if shape.iter().product::<usize>() != data.len() {
            return Err(Error::Format(format!(
                "mask shape {shape:?} does not match {} values",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DtfData {
    F64(DenseTensor<f64>),
    U8 { shape: Vec<usize>, data: Vec<u8> },
}

impl DtfData {
    pub fn shape(&self) -> &[usize] {
        match self {
            DtfData::F64(t) => t.shape(),
            DtfData::U8 { shape, .. } => shape,
        }
    }

    /// Numeric view; uint8 payloads are widened.
    pub fn into_f64(self) -> Result<DenseTensor<f64>> {
        match self {
            DtfData::F64(t) => Ok(t),
            DtfData::U8 { shape, data } => {
                DenseTensor::new(shape, data.into_iter().map(f64::from).collect())
            }
        }
    }

    /// Mask view; float payloads are nonzero-tested.
    pub fn into_mask(self) -> Result<Mask> {
        match self {
            DtfData::F64(t) => {
                let shape = t.shape().to_vec();
                Mask::new(shape, t.as_slice().iter().map(|&v| v != 0.0).collect())
            }
            DtfData::U8 { shape, data } => Mask::new(shape, data.into_iter().map(|b| b != 0).collect()),
        }
    }
}

fn write_header<W: Write>(w: &mut W, dtype: u8, shape: &[usize]) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[dtype])?;
    w.write_all(&(shape.len() as u32).to_le_bytes())?;
    for &d in shape {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    Ok(())
}

pub fn write_tensor<T: Real, W: Write>(w: &mut W, t: &DenseTensor<T>) -> Result<()> {
    write_header(w, DTYPE_F64, t.shape())?;
    for v in t.as_slice() {
        w.write_all(&v.to_f64_lossy().to_le_bytes())?;
    }
    Ok(())
}

pub fn write_mask<W: Write>(w: &mut W, m: &Mask) -> Result<()> {
    write_header(w, DTYPE_U8, &m.shape)?;
    let bytes: Vec<u8> = m.data.iter().map(|&b| b as u8).collect();
    w.write_all(&bytes)?;
    Ok(())
}

pub fn read<R: Read>(r: &mut R) -> Result<DtfData> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("missing DTF1 magic".into()));
    }
    let mut dtype = [0u8; 1];
    r.read_exact(&mut dtype)?;
    let mut n = [0u8; 4];
    r.read_exact(&mut n)?;
    let n = u32::from_le_bytes(n) as usize;
    if n == 0 {
        return Err(Error::Format("DTF1 tensor with zero modes".into()));
    }
    let mut shape = Vec::with_capacity(n);
    for _ in 0..n {
        let mut d = [0u8; 8];
        r.read_exact(&mut d)?;
        shape.push(u64::from_le_bytes(d) as usize);
    }
    if shape.contains(&0) {
        return Err(Error::InvalidShape(shape));
    }
    let count = shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Format("DTF1 shape overflows".into()))?;
    match dtype[0] {
        DTYPE_F64 => {
            let mut buf = vec![0u8; count * 8];
            r.read_exact(&mut buf)?;
            let values = buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            Ok(DtfData::F64(DenseTensor::new(shape, values)?))
        }
        DTYPE_U8 => {
            let mut data = vec![0u8; count];
            r.read_exact(&mut data)?;
            Ok(DtfData::U8 { shape, data })
        }
        other => Err(Error::Format(format!("unknown DTF1 dtype 0x{other:02x}"))),
    }
}

pub fn save_tensor<T: Real>(path: impl AsRef<Path>, t: &DenseTensor<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_tensor(&mut w, t)?;
    w.flush()?;
    Ok(())
}

pub fn save_mask(path: impl AsRef<Path>, m: &Mask) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_mask(&mut w, m)?;
    w.flush()?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<DtfData> {
    read(&mut BufReader::new(File::open(path)?))
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<DenseTensor<f64>> {
    load(path)?.into_f64()
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<Mask> {
    load(path)?.into_mask()
}
