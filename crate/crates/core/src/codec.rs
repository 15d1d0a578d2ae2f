//! Little-endian binary encoding of scalars, strings and dense matrices.
//!
//! Layout: integers and floats are fixed-width little-endian (`f64` as its
//! IEEE-754 bit pattern), strings are a `u64` byte length followed by UTF-8,
//! and a matrix is `u64` rows, `u64` cols, then the entries in column-major
//! order. Vectors are encoded as single-column matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Default, Clone)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn usize(&mut self, v: usize) -> &mut Self {
        self.u64(v as u64)
    }

    pub fn f64(&mut self, v: f64) -> &mut Self {
        self.u64(v.to_bits())
    }

    pub fn bool(&mut self, v: bool) -> &mut Self {
        self.u8(v as u8)
    }

    pub fn str(&mut self, s: &str) -> &mut Self {
        self.usize(s.len());
        self.buf.extend_from_slice(s.as_bytes());
        self
    }

    pub fn matrix(&mut self, m: &DMatrix<f64>) -> &mut Self {
        self.usize(m.nrows()).usize(m.ncols());
        for &v in m.iter() {
            self.f64(v);
        }
        self
    }

    pub fn vector(&mut self, v: &DVector<f64>) -> &mut Self {
        self.usize(v.len()).usize(1);
        for &x in v.iter() {
            self.f64(x);
        }
        self
    }

    pub fn indices(&mut self, idx: &[usize]) -> &mut Self {
        self.usize(idx.len());
        for &i in idx {
            self.usize(i);
        }
        self
    }

    pub fn bytes(&mut self, b: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(b);
        self
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.buf
    }
}

#[derive(Debug, Clone)]
pub struct Decoder<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn is_empty(&self) -> bool {
        self.remaining() == 0
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(Error::Decode(format!(
                "needed {n} bytes at offset {}, {} left",
                self.pos,
                self.remaining()
            )));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut out = [0u8; N];
        out.copy_from_slice(self.take(N)?);
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.array::<1>()?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    pub fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| Error::Decode(format!("length {v} out of range")))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    pub fn bool(&mut self) -> Result<bool> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(Error::Decode(format!("invalid boolean byte {b}"))),
        }
    }

    pub fn string(&mut self) -> Result<String> {
        let n = self.usize()?;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec()).map_err(|e| Error::Decode(e.to_string()))
    }

    fn checked_len(&self, rows: usize, cols: usize) -> Result<usize> {
        let len = rows
            .checked_mul(cols)
            .filter(|&n| n.checked_mul(8).is_some_and(|b| b <= self.remaining()))
            .ok_or_else(|| Error::Decode(format!("matrix {rows}x{cols} exceeds remaining data")))?;
        Ok(len)
    }

    pub fn matrix(&mut self) -> Result<DMatrix<f64>> {
        let rows = self.usize()?;
        let cols = self.usize()?;
        let len = self.checked_len(rows, cols)?;
        let data = (0..len).map(|_| self.f64()).collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_vec(rows, cols, data))
    }

    pub fn vector(&mut self) -> Result<DVector<f64>> {
        let m = self.matrix()?;
        if m.ncols() != 1 {
            return Err(Error::Decode(format!("expected a vector, found {} columns", m.ncols())));
        }
        Ok(DVector::from_column_slice(m.as_slice()))
    }

    pub fn indices(&mut self) -> Result<Vec<usize>> {
        let n = self.usize()?;
        if n.saturating_mul(8) > self.remaining() {
            return Err(Error::Decode(format!("index list of {n} exceeds remaining data")));
        }
        (0..n).map(|_| self.usize()).collect()
    }
}
