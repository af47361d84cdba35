//! MatrixMarket coordinate format (real, general).

use std::io::{BufRead, Write};

use super::csr::CsrMatrix;
use crate::error::{Error, Result};

pub fn write_matrix_market<W: Write>(a: &CsrMatrix, mut out: W) -> Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for i in 0..a.nrows() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            writeln!(out, "{} {} {v:e}", i + 1, j + 1)?;
        }
    }
    Ok(())
}

pub fn read_matrix_market<R: BufRead>(input: R) -> Result<CsrMatrix> {
    let mut lines = input.lines();
    let banner = lines.next().ok_or_else(|| Error::Parse("empty MatrixMarket file".into()))??;
    let lower = banner.to_ascii_lowercase();
    if !lower.starts_with("%%matrixmarket matrix coordinate real") {
        return Err(Error::Parse(format!("unsupported banner `{banner}`")));
    }
    let symmetric = lower.contains("symmetric");
    let perr = |e: &dyn std::fmt::Display| Error::Parse(e.to_string());
    let mut size = None;
    let mut triplets = Vec::new();
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let tok: Vec<&str> = t.split_whitespace().collect();
        if size.is_none() {
            if tok.len() != 3 {
                return Err(Error::Parse(format!("bad size line `{t}`")));
            }
            let p = |s: &str| s.parse::<usize>().map_err(|e| perr(&e));
            size = Some((p(tok[0])?, p(tok[1])?));
            continue;
        }
        if tok.len() != 3 {
            return Err(Error::Parse(format!("bad entry line `{t}`")));
        }
        let i: usize = tok[0].parse().map_err(|e| perr(&e))?;
        let j: usize = tok[1].parse().map_err(|e| perr(&e))?;
        let v: f64 = tok[2].parse().map_err(|e| perr(&e))?;
        if i == 0 || j == 0 {
            return Err(Error::Parse("indices are 1-based".into()));
        }
        triplets.push((i - 1, j - 1, v));
        if symmetric && i != j {
            triplets.push((j - 1, i - 1, v));
        }
    }
    let (nr, nc) = size.ok_or_else(|| Error::Parse("missing size line".into()))?;
    CsrMatrix::from_triplets(nr, nc, &triplets)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let a = CsrMatrix::from_triplets(3, 3, &[(0, 0, 0.1), (1, 2, -1.0 / 3.0), (2, 1, 7e-300)]).unwrap();
        let mut buf = Vec::new();
        write_matrix_market(&a, &mut buf).unwrap();
        let b = read_matrix_market(buf.as_slice()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn symmetric_files_are_expanded() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% c\n2 2 2\n1 1 2.0\n2 1 -1.0\n";
        let a = read_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(a.get(0, 1), -1.0);
        assert_eq!(a.get(1, 0), -1.0);
    }
}
