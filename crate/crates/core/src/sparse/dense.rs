use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SparseError;

const DMAT_MAGIC: &[u8; 4] = b"DMAT";

/// Row-major dense `f32` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f32>,
}

impl DenseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self { n_rows, n_cols, data: vec![0.0; n_rows * n_cols] }
    }

    /// Wraps row-major data. Every value must be finite.
    pub fn from_vec(n_rows: usize, n_cols: usize, data: Vec<f32>) -> Result<Self, SparseError> {
        if data.len() != n_rows * n_cols {
            return Err(SparseError::Invalid(format!(
                "dense data has length {}, expected {}x{}",
                data.len(),
                n_rows,
                n_cols
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(SparseError::Invalid(format!("non-finite dense value at flat index {i}")));
        }
        Ok(Self { n_rows, n_cols, data })
    }

    /// Seeded uniform samples in `[-1, 1]`.
    pub fn random_uniform(n_rows: usize, n_cols: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n_rows * n_cols).map(|_| rng.gen_range(-1.0f32..=1.0)).collect();
        Self { n_rows, n_cols, data }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f32 {
        self.data[r * self.n_cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f32) {
        self.data[r * self.n_cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.n_cols..(r + 1) * self.n_cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f32] {
        &mut self.data[r * self.n_cols..(r + 1) * self.n_cols]
    }

    /// Element-wise sum of two equally shaped matrices.
    pub fn add(&self, other: &Self) -> Result<Self, SparseError> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(SparseError::DimensionMismatch(format!(
                "{}x{} + {}x{}",
                self.n_rows, self.n_cols, other.n_rows, other.n_cols
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { n_rows: self.n_rows, n_cols: self.n_cols, data })
    }

    /// Largest `|self - reference| / max(|reference|, 1)` over all elements.
    pub fn max_relative_error(&self, reference: &Self) -> Result<f64, SparseError> {
        if self.n_rows != reference.n_rows || self.n_cols != reference.n_cols {
            return Err(SparseError::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.n_rows, self.n_cols, reference.n_rows, reference.n_cols
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&reference.data)
            .map(|(&x, &r)| (x as f64 - r as f64).abs() / (r as f64).abs().max(1.0))
            .fold(0.0, f64::max))
    }

    /// Writes the binary `DMAT` layout: 16-byte header then little-endian `f32` data.
    pub fn write_dmat<W: Write>(&self, mut w: W) -> Result<(), SparseError> {
        let rows = u32::try_from(self.n_rows).map_err(|_| SparseError::Overflow("n_rows".into()))?;
        let cols = u32::try_from(self.n_cols).map_err(|_| SparseError::Overflow("n_cols".into()))?;
        w.write_all(DMAT_MAGIC)?;
        w.write_all(&rows.to_le_bytes())?;
        w.write_all(&cols.to_le_bytes())?;
        w.write_all(&0u32.to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.data.len() * 4);
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_dmat<R: Read>(mut r: R) -> Result<Self, SparseError> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        if &header[0..4] != DMAT_MAGIC {
            return Err(SparseError::Format("bad DMAT magic".into()));
        }
        let n_rows = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
        let n_cols = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let len = n_rows.checked_mul(n_cols).ok_or_else(|| SparseError::Overflow("DMAT dimensions".into()))?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != len * 4 {
            return Err(SparseError::Format(format!("DMAT payload has {} bytes, expected {}", bytes.len(), len * 4)));
        }
        let data = bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        Self::from_vec(n_rows, n_cols, data)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SparseError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_dmat(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SparseError> {
        Self::read_dmat(BufReader::new(File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dmat_header_layout() {
        let m = DenseMatrix::from_vec(1, 2, vec![1.0, -2.5]).unwrap();
        let mut buf = Vec::new();
        m.write_dmat(&mut buf).unwrap();
        assert_eq!(&buf[0..4], b"DMAT");
        assert_eq!(&buf[4..8], &1u32.to_le_bytes());
        assert_eq!(&buf[8..12], &2u32.to_le_bytes());
        assert_eq!(&buf[12..16], &[0, 0, 0, 0]);
        assert_eq!(buf.len(), 16 + 8);
        assert_eq!(DenseMatrix::read_dmat(&buf[..]).unwrap(), m);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(DenseMatrix::from_vec(1, 1, vec![f32::NAN]).is_err());
    }

    #[test]
    fn truncated_payload_is_an_error() {
        let m = DenseMatrix::zeros(2, 2);
        let mut buf = Vec::new();
        m.write_dmat(&mut buf).unwrap();
        buf.pop();
        assert!(DenseMatrix::read_dmat(&buf[..]).is_err());
    }

    #[test]
    fn random_uniform_is_seeded_and_bounded() {
        let a = DenseMatrix::random_uniform(4, 5, 7);
        assert_eq!(a, DenseMatrix::random_uniform(4, 5, 7));
        assert!(a.data().iter().all(|v| (-1.0..=1.0).contains(v)));
    }
}
