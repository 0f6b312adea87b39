//! Matrix Market coordinate files.
//!
//! Supported headers: `matrix coordinate {real|integer|pattern} {general|symmetric}`.
//! Symmetric files mirror strictly-lower entries, pattern entries read as 1.0,
//! and repeated coordinates are summed.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{CsrMatrix, SparseError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

const MAX_DIM: usize = i32::MAX as usize;

fn parse_err(line: usize, message: impl Into<String>) -> SparseError {
    SparseError::Parse { line, message: message.into() }
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<CsrMatrix, SparseError> {
    let path = path.as_ref();
    let file = File::open(path)
        .map_err(|e| SparseError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    parse_matrix_market(BufReader::new(file))
}

pub fn parse_matrix_market<R: BufRead>(reader: R) -> Result<CsrMatrix, SparseError> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (lineno, header) = match lines.next() {
        Some((n, l)) => (n, l?),
        None => return Err(parse_err(1, "empty file")),
    };
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
        return Err(parse_err(lineno, "expected '%%MatrixMarket matrix coordinate <field> <symmetry>'"));
    }
    if tokens[1] != "matrix" || tokens[2] != "coordinate" {
        return Err(parse_err(lineno, format!("unsupported object/format '{} {}'", tokens[1], tokens[2])));
    }
    let field = match tokens[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" => Field::Pattern,
        other => return Err(parse_err(lineno, format!("unsupported field '{other}'"))),
    };
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(parse_err(lineno, format!("unsupported symmetry '{other}'"))),
    };

    // size line, skipping comments and blanks
    let (n_rows, n_cols, declared) = loop {
        let Some((n, line)) = lines.next() else {
            return Err(parse_err(lineno + 1, "missing size line"));
        };
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = t.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(parse_err(n, "size line must hold 'rows cols nnz'"));
        }
        let mut dims = [0usize; 3];
        for (d, p) in dims.iter_mut().zip(&parts) {
            *d = p
                .parse::<u64>()
                .map_err(|_| parse_err(n, format!("bad integer '{p}'")))?
                .try_into()
                .map_err(|_| SparseError::Overflow(format!("line {n}: '{p}' does not fit in memory")))?;
        }
        if dims[0] > MAX_DIM || dims[1] > MAX_DIM || dims[2] > MAX_DIM {
            return Err(SparseError::Overflow(format!(
                "line {n}: dimensions {}x{} with {} entries exceed 32-bit index range",
                dims[0], dims[1], dims[2]
            )));
        }
        if symmetric && dims[0] != dims[1] {
            return Err(parse_err(n, "symmetric matrix must be square"));
        }
        break (dims[0], dims[1], dims[2]);
    };

    let mut triplets = Vec::with_capacity(if symmetric { declared * 2 } else { declared });
    let mut seen = 0usize;
    for (n, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let mut parts = t.split_whitespace();
        let mut index = |what: &str, bound: usize| -> Result<usize, SparseError> {
            let tok = parts.next().ok_or_else(|| parse_err(n, format!("missing {what} index")))?;
            let v: usize = tok.parse().map_err(|_| parse_err(n, format!("bad {what} index '{tok}'")))?;
            if v == 0 || v > bound {
                return Err(parse_err(n, format!("{what} index {v} outside 1..={bound}")));
            }
            Ok(v - 1)
        };
        let r = index("row", n_rows)?;
        let c = index("column", n_cols)?;
        let value = match field {
            Field::Pattern => 1.0f32,
            Field::Real | Field::Integer => {
                let tok = parts.next().ok_or_else(|| parse_err(n, "missing value"))?;
                let v: f64 = if field == Field::Integer {
                    tok.parse::<i64>().map_err(|_| parse_err(n, format!("bad integer value '{tok}'")))? as f64
                } else {
                    tok.parse().map_err(|_| parse_err(n, format!("bad real value '{tok}'")))?
                };
                let v = v as f32;
                if !v.is_finite() {
                    return Err(parse_err(n, format!("value '{tok}' is not a finite f32")));
                }
                v
            }
        };
        if parts.next().is_some() {
            return Err(parse_err(n, "trailing tokens after entry"));
        }
        seen += 1;
        if seen > declared {
            return Err(parse_err(n, format!("more entries than the declared {declared}")));
        }
        triplets.push((r, c, value));
        if symmetric && r > c {
            triplets.push((c, r, value));
        }
    }
    if seen != declared {
        return Err(parse_err(0, format!("declared {declared} entries but found {seen}")));
    }
    CsrMatrix::from_triplets(n_rows, n_cols, &triplets)
}

/// Writes `m` as a `real general` coordinate file. `f32` values are printed
/// in shortest round-trip form, so a re-read is value-exact.
pub fn write_matrix_market<W: Write>(m: &CsrMatrix, mut w: W) -> Result<(), SparseError> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", m.n_rows(), m.n_cols(), m.nnz())?;
    for (r, c, v) in m.iter() {
        writeln!(w, "{} {} {:?}", r + 1, c + 1, v)?;
    }
    Ok(())
}

pub fn save_matrix_market(m: &CsrMatrix, path: impl AsRef<Path>) -> Result<(), SparseError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix_market(m, &mut w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<CsrMatrix, SparseError> {
        parse_matrix_market(s.as_bytes())
    }

    #[test]
    fn single_entry_is_zero_based() {
        let m = parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 3.5\n").unwrap();
        assert_eq!(m.row_ptr(), &[0, 1, 1]);
        assert_eq!(m.col_idx(), &[0]);
        assert_eq!(m.values(), &[3.5]);
    }

    #[test]
    fn symmetric_expansion_mirrors_off_diagonal() {
        let m =
            parse("%%MatrixMarket matrix coordinate real symmetric\n% c\n3 3 3\n2 1 4.0\n3 1 5.0\n2 2 1.0\n").unwrap();
        assert_eq!(m.nnz(), 5);
        assert_eq!(m.row_cols(0), &[1, 2]);
        let m = parse("%%MatrixMarket matrix coordinate real symmetric\n3 3 2\n2 1 4.0\n3 1 5.0\n").unwrap();
        assert_eq!(m.nnz(), 4);
    }

    #[test]
    fn duplicates_are_summed() {
        let m = parse("%%MatrixMarket matrix coordinate real general\n1 1 2\n1 1 1.0\n1 1 2.0\n").unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.values(), &[3.0]);
    }

    #[test]
    fn pattern_and_integer_fields() {
        let m = parse("%%MatrixMarket matrix coordinate pattern general\n2 3 2\n1 3\n2 1\n").unwrap();
        assert_eq!(m.values(), &[1.0, 1.0]);
        let m = parse("%%MatrixMarket matrix coordinate integer general\n1 1 1\n1 1 -7\n").unwrap();
        assert_eq!(m.values(), &[-7.0]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n3 1 1.0\n") {
            Err(SparseError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        match parse("%%MatrixMarket matrix array real general\n2 2\n") {
            Err(SparseError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
        match parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 x 1.0\n") {
            Err(SparseError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn oversized_dimensions_overflow() {
        let r = parse("%%MatrixMarket matrix coordinate real general\n4294967296 2 0\n");
        assert!(matches!(r, Err(SparseError::Overflow(_))));
    }

    #[test]
    fn write_then_read_is_exact() {
        let m = CsrMatrix::from_triplets(3, 4, &[(0, 3, 0.1), (2, 0, -1.0e-7), (1, 1, 3.402_823_5e38)]).unwrap();
        let mut buf = Vec::new();
        write_matrix_market(&m, &mut buf).unwrap();
        assert_eq!(parse(std::str::from_utf8(&buf).unwrap()).unwrap(), m);
    }
}
