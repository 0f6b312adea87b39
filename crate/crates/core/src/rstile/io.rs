//! Binary RS-Tile files.
//!
//! Layout (all little-endian): a 48-byte header
//!
//! | field               | type |
//! |---------------------|------|
//! | magic `RSTL`        | 4 B  |
//! | version (1)         | u16  |
//! | window_size         | u16  |
//! | n_rows              | u32  |
//! | n_cols              | u32  |
//! | window_entries      | u32  |
//! | block_count         | u64  |
//! | tc_value_count      | u64  |
//! | residual_row_count  | u32  |
//! | residual_nnz        | u64  |
//!
//! followed by `row_window_id`, `row_window_offset`, `bitmaps`, `col_id`,
//! `values` of the TC part and `row_id`, `row_nnz_offset`, `col_id`,
//! `values` of the residual part, tightly packed.

use std::io::{Read, Write};

use super::{validate, FormatError, ResidualPart, RsTileMatrix, TcPart, MAX_INDEX};
use crate::partition::BLOCK_DIM;

const MAGIC: &[u8; 4] = b"RSTL";
const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 48;

fn put_u32s(buf: &mut Vec<u8>, xs: &[u32]) {
    for x in xs {
        buf.extend_from_slice(&x.to_le_bytes());
    }
}

fn put_f32s(buf: &mut Vec<u8>, xs: &[f32]) {
    for x in xs {
        buf.extend_from_slice(&x.to_le_bytes());
    }
}

fn narrow(what: &str, v: usize) -> Result<u32, FormatError> {
    if v > MAX_INDEX {
        return Err(FormatError::TooLarge(format!("{what} = {v}")));
    }
    Ok(v as u32)
}

pub fn write_rstile<W: Write>(m: &RsTileMatrix, mut w: W) -> Result<(), FormatError> {
    if let Some(first) = validate(m).into_iter().next() {
        return Err(FormatError::Corrupt(first));
    }
    let tc = &m.tc;
    let res = &m.residual;
    let mut buf = Vec::with_capacity(HEADER_LEN);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(m.window_size as u16).to_le_bytes());
    buf.extend_from_slice(&narrow("n_rows", m.n_rows)?.to_le_bytes());
    buf.extend_from_slice(&narrow("n_cols", m.n_cols)?.to_le_bytes());
    buf.extend_from_slice(&narrow("window_entries", tc.entry_count())?.to_le_bytes());
    buf.extend_from_slice(&(tc.block_count() as u64).to_le_bytes());
    buf.extend_from_slice(&(tc.values.len() as u64).to_le_bytes());
    buf.extend_from_slice(&narrow("residual_rows", res.row_count())?.to_le_bytes());
    buf.extend_from_slice(&(res.nnz() as u64).to_le_bytes());
    debug_assert_eq!(buf.len(), HEADER_LEN);
    w.write_all(&buf)?;

    buf.clear();
    put_u32s(&mut buf, &tc.row_window_id);
    put_u32s(&mut buf, &tc.row_window_offset);
    for b in &tc.bitmaps {
        buf.extend_from_slice(&b.to_le_bytes());
    }
    put_u32s(&mut buf, &tc.col_id);
    put_f32s(&mut buf, &tc.values);
    put_u32s(&mut buf, &res.row_id);
    put_u32s(&mut buf, &res.row_nnz_offset);
    put_u32s(&mut buf, &res.col_id);
    put_f32s(&mut buf, &res.values);
    w.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| FormatError::Malformed(format!("truncated at byte {} (needed {n} more)", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, FormatError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u32s(&mut self, n: usize) -> Result<Vec<u32>, FormatError> {
        let len = n.checked_mul(4).ok_or_else(|| FormatError::Malformed("array length overflow".into()))?;
        Ok(self.take(len)?.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect())
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>, FormatError> {
        Ok(self.u32s(n)?.into_iter().map(f32::from_bits).collect())
    }

    fn u64s(&mut self, n: usize) -> Result<Vec<u64>, FormatError> {
        let len = n.checked_mul(8).ok_or_else(|| FormatError::Malformed("array length overflow".into()))?;
        Ok(self.take(len)?.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

fn count(v: u64, what: &str) -> Result<usize, FormatError> {
    usize::try_from(v)
        .ok()
        .filter(|&x| x <= MAX_INDEX)
        .ok_or_else(|| FormatError::Malformed(format!("{what} = {v} exceeds the 32-bit index range")))
}

/// Reads and validates an RS-Tile file.
pub fn read_rstile<R: Read>(mut r: R) -> Result<RsTileMatrix, FormatError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut cur = Cursor { bytes: &bytes, pos: 0 };
    if cur.take(4)? != MAGIC {
        return Err(FormatError::Malformed("bad magic, expected RSTL".into()));
    }
    let version = cur.u16()?;
    if version != VERSION {
        return Err(FormatError::Malformed(format!("unsupported version {version}")));
    }
    let window_size = cur.u16()? as usize;
    let n_rows = count(cur.u32()? as u64, "n_rows")?;
    let n_cols = count(cur.u32()? as u64, "n_cols")?;
    let entries = count(cur.u32()? as u64, "window_entries")?;
    let blocks = count(cur.u64()?, "block_count")?;
    let tc_values = count(cur.u64()?, "tc_value_count")?;
    let res_rows = count(cur.u32()? as u64, "residual_row_count")?;
    let res_nnz = count(cur.u64()?, "residual_nnz")?;

    let tc = TcPart {
        row_window_id: cur.u32s(entries)?,
        row_window_offset: cur.u32s(entries + 1)?,
        bitmaps: cur.u64s(blocks)?,
        col_id: cur.u32s(blocks * BLOCK_DIM)?,
        values: cur.f32s(tc_values)?,
    };
    let residual = ResidualPart {
        row_id: cur.u32s(res_rows)?,
        row_nnz_offset: cur.u32s(res_rows + 1)?,
        col_id: cur.u32s(res_nnz)?,
        values: cur.f32s(res_nnz)?,
    };
    if cur.pos != bytes.len() {
        return Err(FormatError::Malformed(format!("{} trailing bytes", bytes.len() - cur.pos)));
    }
    let m = RsTileMatrix { n_rows, n_cols, window_size, tc, residual };
    if let Some(first) = validate(&m).into_iter().next() {
        return Err(FormatError::Corrupt(first));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{partition_rows, PartitionParams};
    use crate::rstile::{build_rstile, storage_report};
    use crate::sparse::generate_power_law;

    #[test]
    fn round_trip_and_size() {
        let a = generate_power_law(300, 300, 3000, 1.5, 2).unwrap();
        let m = build_rstile(&a, &partition_rows(&a, &PartitionParams::default()).unwrap(), 8).unwrap();
        let mut buf = Vec::new();
        write_rstile(&m, &mut buf).unwrap();
        assert_eq!(buf.len(), HEADER_LEN + storage_report(&a, &m).rstile_bytes);
        assert_eq!(read_rstile(&buf[..]).unwrap(), m);
    }

    #[test]
    fn header_fields() {
        let t: Vec<_> = (0..9).map(|i| (i / 3, i % 3, 1.0)).collect();
        let a = crate::sparse::CsrMatrix::from_triplets(3, 3, &t).unwrap();
        let m = build_rstile(&a, &partition_rows(&a, &PartitionParams::default()).unwrap(), 8).unwrap();
        let mut buf = Vec::new();
        write_rstile(&m, &mut buf).unwrap();
        assert_eq!(&buf[0..4], b"RSTL");
        assert_eq!(u16::from_le_bytes([buf[4], buf[5]]), 1);
        assert_eq!(u16::from_le_bytes([buf[6], buf[7]]), 8);
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(buf[16..20].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(buf[20..28].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(buf[28..36].try_into().unwrap()), 9);
        assert_eq!(u32::from_le_bytes(buf[36..40].try_into().unwrap()), 0);
    }

    #[test]
    fn rejects_truncated_trailing_and_bad_magic() {
        let a = crate::sparse::CsrMatrix::identity(9);
        let m = build_rstile(&a, &partition_rows(&a, &PartitionParams::default()).unwrap(), 8).unwrap();
        let mut buf = Vec::new();
        write_rstile(&m, &mut buf).unwrap();
        assert!(read_rstile(&buf[..buf.len() - 1]).is_err());
        let mut longer = buf.clone();
        longer.push(0);
        assert!(read_rstile(&longer[..]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_rstile(&bad[..]), Err(FormatError::Malformed(_))));
    }

    #[test]
    fn corrupt_payload_is_reported() {
        let t: Vec<_> = (0..64).map(|i| (i / 8, i % 8, 1.0)).collect();
        let a = crate::sparse::CsrMatrix::from_triplets(8, 8, &t).unwrap();
        let m = build_rstile(&a, &partition_rows(&a, &PartitionParams::default()).unwrap(), 8).unwrap();
        let mut buf = Vec::new();
        write_rstile(&m, &mut buf).unwrap();
        // first col_id slot: header + id(4) + offsets(8) + bitmap(8)
        let at = HEADER_LEN + 4 + 8 + 8;
        buf[at..at + 4].copy_from_slice(&100u32.to_le_bytes());
        assert!(matches!(read_rstile(&buf[..]), Err(FormatError::Corrupt(_))));
    }
}
