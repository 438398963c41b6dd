//! Matrix Market coordinate-format reader/writer.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::{FieldTag, Scalar};
use crate::sparse::CscMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MmField {
    Real,
    Integer,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MmSymmetry {
    General,
    Symmetric,
    SkewSymmetric,
    Hermitian,
}

pub fn read_matrix_market<T: Scalar>(path: &Path) -> Result<CscMatrix<T>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::format(format!("{}: {e}", path.display())))?;
    let mut lines = BufReader::new(file).lines();

    let header = lines
        .next()
        .ok_or_else(|| Error::format("empty matrix market file".to_string()))??;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() < 5 || !toks[0].eq_ignore_ascii_case("%%MatrixMarket") {
        return Err(Error::format(format!("bad matrix market header: {header}")));
    }
    if !toks[1].eq_ignore_ascii_case("matrix") || !toks[2].eq_ignore_ascii_case("coordinate") {
        return Err(Error::format(
            "only coordinate-format matrices are supported".to_string(),
        ));
    }
    let field = match toks[3].to_ascii_lowercase().as_str() {
        "real" => MmField::Real,
        "integer" => MmField::Integer,
        "complex" => MmField::Complex,
        other => return Err(Error::format(format!("unsupported value field: {other}"))),
    };
    let symmetry = match toks[4].to_ascii_lowercase().as_str() {
        "general" => MmSymmetry::General,
        "symmetric" => MmSymmetry::Symmetric,
        "skew-symmetric" => MmSymmetry::SkewSymmetric,
        "hermitian" => MmSymmetry::Hermitian,
        other => return Err(Error::format(format!("unsupported symmetry: {other}"))),
    };
    if field == MmField::Complex && T::FIELD == FieldTag::Real {
        return Err(Error::format(
            "complex matrix market data cannot load into a real-field problem".to_string(),
        ));
    }

    let mut dims: Option<(usize, usize, usize)> = None;
    let mut triplets: Vec<(usize, usize, T)> = Vec::new();
    for line in lines {
        let line = line?;
        let s = line.trim();
        if s.is_empty() || s.starts_with('%') {
            continue;
        }
        let mut it = s.split_whitespace();
        if dims.is_none() {
            let nr: usize = parse_tok(it.next(), s)?;
            let nc: usize = parse_tok(it.next(), s)?;
            let nnz: usize = parse_tok(it.next(), s)?;
            dims = Some((nr, nc, nnz));
            triplets.reserve(nnz * 2);
            continue;
        }
        let i: usize = parse_tok(it.next(), s)?;
        let j: usize = parse_tok(it.next(), s)?;
        if i == 0 || j == 0 {
            return Err(Error::format("matrix market indices are 1-based".to_string()));
        }
        let re: f64 = parse_tok(it.next(), s)?;
        let im: f64 = if field == MmField::Complex { parse_tok(it.next(), s)? } else { 0.0 };
        let v = T::try_from_parts(re, im)?;
        let (i, j) = (i - 1, j - 1);
        triplets.push((i, j, v));
        if i != j {
            match symmetry {
                MmSymmetry::General => {}
                MmSymmetry::Symmetric => triplets.push((j, i, v)),
                MmSymmetry::SkewSymmetric => triplets.push((j, i, -v)),
                MmSymmetry::Hermitian => triplets.push((j, i, v.conjugate())),
            }
        }
    }
    let (nrows, ncols, _) = dims.ok_or_else(|| Error::format("missing size line".to_string()))?;
    CscMatrix::from_triplets(nrows, ncols, &triplets)
}

fn parse_tok<V: std::str::FromStr>(tok: Option<&str>, line: &str) -> Result<V> {
    tok.ok_or_else(|| Error::format(format!("short matrix market line: {line}")))?
        .parse()
        .map_err(|_| Error::format(format!("unparseable matrix market line: {line}")))
}

pub fn write_matrix_market<T: Scalar>(path: &Path, a: &CscMatrix<T>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    let field = match T::FIELD {
        FieldTag::Real => "real",
        FieldTag::Complex => "complex",
    };
    writeln!(w, "%%MatrixMarket matrix coordinate {field} general")?;
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for (i, j, v) in a.iter() {
        match T::FIELD {
            FieldTag::Real => writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v.re())?,
            FieldTag::Complex => {
                writeln!(w, "{} {} {:.17e} {:.17e}", i + 1, j + 1, v.re(), v.im())?
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Complex;

    #[test]
    fn roundtrip_real() {
        let a = CscMatrix::from_triplets(
            3,
            2,
            &[(0, 0, 1.5), (2, 1, -2.25), (1, 0, 1e-17)],
        )
        .unwrap();
        let dir = std::env::temp_dir().join("skmor_mm_real");
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("a.mtx");
        write_matrix_market(&p, &a).unwrap();
        let b: CscMatrix<f64> = read_matrix_market(&p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn roundtrip_complex_and_field_guard() {
        let a = CscMatrix::from_triplets(
            2,
            2,
            &[(0, 1, Complex::new(1.0, -3.5)), (1, 1, Complex::new(0.25, 0.0))],
        )
        .unwrap();
        let dir = std::env::temp_dir().join("skmor_mm_cplx");
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("a.mtx");
        write_matrix_market(&p, &a).unwrap();
        let b: CscMatrix<Complex<f64>> = read_matrix_market(&p).unwrap();
        assert_eq!(a, b);
        let real_load: Result<CscMatrix<f64>> = read_matrix_market(&p);
        assert!(real_load.is_err());
    }

    #[test]
    fn symmetric_expansion() {
        let dir = std::env::temp_dir().join("skmor_mm_sym");
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("s.mtx");
        std::fs::write(
            &p,
            "%%MatrixMarket matrix coordinate real symmetric\n% comment\n2 2 2\n1 1 2.0\n2 1 -1.0\n",
        )
        .unwrap();
        let a: CscMatrix<f64> = read_matrix_market(&p).unwrap();
        assert_eq!(a.get(0, 1), -1.0);
        assert_eq!(a.get(1, 0), -1.0);
        assert_eq!(a.get(0, 0), 2.0);
    }
}
