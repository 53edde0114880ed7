//! Matrix Market reader and writer for real coordinate and array files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use faer::Mat;
use scare_core::SparseMat;

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

/// A matrix as read from disk, before choosing a storage.
#[derive(Debug, Clone)]
pub struct MmMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub format: Format,
    pub entries: Vec<(usize, usize, f64)>,
}

impl MmMatrix {
    pub fn to_sparse(&self) -> scare_core::Result<SparseMat> {
        SparseMat::from_triplets(self.nrows, self.ncols, &self.entries)
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.nrows, self.ncols);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }
}

pub fn read(path: &Path) -> Result<MmMatrix> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    parse(&text, path)
}

pub fn read_sparse(path: &Path) -> Result<SparseMat> {
    read(path)?.to_sparse().map_err(|source| BenchError::Load { file: path.display().to_string(), source })
}

pub fn read_dense(path: &Path) -> Result<Mat<f64>> {
    Ok(read(path)?.to_dense())
}

pub fn parse(text: &str, path: &Path) -> Result<MmMatrix> {
    let err = |line: usize, msg: String| BenchError::Parse { path: path.to_path_buf(), line, msg };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(err(1, format!("bad header {header:?}")));
    }
    let format = match tokens[2].as_str() {
        "coordinate" => Format::Coordinate,
        "array" => Format::Array,
        f => return Err(err(1, format!("unsupported format {f}"))),
    };
    let pattern = match tokens[3].as_str() {
        "real" | "integer" | "double" => false,
        "pattern" if format == Format::Coordinate => true,
        f => return Err(err(1, format!("unsupported field {f}"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        s => return Err(err(1, format!("unsupported symmetry {s}"))),
    };

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_no, size_line) = body.next().ok_or_else(|| err(2, "missing size line".into()))?;
    let size: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| err(size_no + 1, format!("bad size token {t:?}"))))
        .collect::<Result<_>>()?;
    let mut entries = Vec::new();
    let (nrows, ncols) = match (format, size.as_slice()) {
        (Format::Coordinate, &[r, c, nnz]) => {
            entries.reserve(nnz);
            for (no, line) in body.by_ref() {
                let t: Vec<&str> = line.split_whitespace().collect();
                let want = if pattern { 2 } else { 3 };
                if t.len() < want {
                    return Err(err(no + 1, format!("expected {want} fields")));
                }
                let idx = |s: &str, bound: usize| -> Result<usize> {
                    match s.parse::<usize>() {
                        Ok(v) if v >= 1 && v <= bound => Ok(v - 1),
                        _ => Err(err(no + 1, format!("index {s:?} out of range 1..={bound}"))),
                    }
                };
                let i = idx(t[0], r)?;
                let j = idx(t[1], c)?;
                let v = if pattern { 1.0 } else { t[2].parse().map_err(|_| err(no + 1, format!("bad value {:?}", t[2])))? };
                push(&mut entries, symmetry, i, j, v);
            }
            if entries.len() < nnz {
                return Err(err(0, format!("expected {nnz} entries, found {}", entries.len())));
            }
            (r, c)
        }
        (Format::Array, &[r, c]) => {
            let mut k = 0;
            for (no, line) in body.by_ref() {
                for t in line.split_whitespace() {
                    let v: f64 = t.parse().map_err(|_| err(no + 1, format!("bad value {t:?}")))?;
                    // Column-major; symmetric files store the lower triangle only.
                    let (i, j) = match symmetry {
                        Symmetry::General => (k % r, k / r),
                        _ => lower_position(k, r, symmetry == Symmetry::Skew).ok_or_else(|| err(no + 1, "too many values".into()))?,
                    };
                    if j >= c {
                        return Err(err(no + 1, "too many values".into()));
                    }
                    if v != 0.0 {
                        push(&mut entries, symmetry, i, j, v);
                    }
                    k += 1;
                }
            }
            let expected = match symmetry {
                Symmetry::General => r * c,
                Symmetry::Symmetric => r * (r + 1) / 2,
                Symmetry::Skew => r * r.saturating_sub(1) / 2,
            };
            if k != expected {
                return Err(err(0, format!("expected {expected} values, found {k}")));
            }
            (r, c)
        }
        _ => return Err(err(size_no + 1, format!("bad size line {size_line:?}"))),
    };
    Ok(MmMatrix { nrows, ncols, format, entries })
}

fn push(entries: &mut Vec<(usize, usize, f64)>, symmetry: Symmetry, i: usize, j: usize, v: f64) {
    entries.push((i, j, v));
    if i != j {
        match symmetry {
            Symmetry::General => {}
            Symmetry::Symmetric => entries.push((j, i, v)),
            Symmetry::Skew => entries.push((j, i, -v)),
        }
    }
}

/// Position of the `k`-th stored value of a column-major lower triangle.
fn lower_position(mut k: usize, n: usize, strict: bool) -> Option<(usize, usize)> {
    for j in 0..n {
        let start = if strict { j + 1 } else { j };
        let len = n - start;
        if k < len {
            return Some((start + k, j));
        }
        k -= len;
    }
    None
}

pub fn write_sparse(path: &Path, m: &SparseMat) -> Result<()> {
    let mut s = String::from("%%MatrixMarket matrix coordinate real general\n");
    let t = m.triplets();
    let _ = writeln!(s, "{} {} {}", m.nrows(), m.ncols(), t.len());
    for (i, j, v) in t {
        let _ = writeln!(s, "{} {} {v:e}", i + 1, j + 1);
    }
    fs::write(path, s).map_err(|e| BenchError::io(path, e))
}

pub fn write_dense(path: &Path, m: &Mat<f64>) -> Result<()> {
    let mut s = String::from("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(s, "{} {}", m.nrows(), m.ncols());
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let _ = writeln!(s, "{:e}", m[(i, j)]);
        }
    }
    fs::write(path, s).map_err(|e| BenchError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Result<MmMatrix> {
        parse(s, Path::new("t.mtx"))
    }

    #[test]
    fn symmetric_coordinate_is_mirrored() {
        let m = p("%%MatrixMarket matrix coordinate real symmetric\n% c\n2 2 2\n1 1 4\n2 1 -1\n").unwrap();
        let d = m.to_dense();
        assert_eq!((d[(0, 0)], d[(0, 1)], d[(1, 0)], d[(1, 1)]), (4.0, -1.0, -1.0, 0.0));
    }

    #[test]
    fn array_is_column_major() {
        let d = p("%%MatrixMarket matrix array real general\n2 3\n1\n2\n3\n4\n5\n6\n").unwrap().to_dense();
        assert_eq!(d[(1, 0)], 2.0);
        assert_eq!(d[(0, 2)], 5.0);
    }

    #[test]
    fn symmetric_array_stores_lower_triangle() {
        let d = p("%%MatrixMarket matrix array real symmetric\n2 2\n1\n2\n3\n").unwrap().to_dense();
        assert_eq!((d[(0, 1)], d[(1, 0)], d[(1, 1)]), (2.0, 2.0, 3.0));
    }

    #[test]
    fn rejects_out_of_range_and_short_files() {
        assert!(p("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n").is_err());
        assert!(p("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n").is_err());
        assert!(p("%%MatrixMarket matrix array real general\n2 2\n1\n").is_err());
        assert!(p("%%MatrixMarket vector coordinate real general\n").is_err());
    }
}
