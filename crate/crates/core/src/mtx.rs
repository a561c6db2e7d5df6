//! Matrix Market ingestion for user-supplied problem data.
//!
//! Reads `array` and `coordinate` formats with `real` or `integer` fields
//! and `general`, `symmetric` or `skew-symmetric` storage. Writes dense
//! `array real general`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Storage {
    General,
    Symmetric,
    Skew,
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::MatrixMarket {
        line,
        msg: msg.into(),
    }
}

/// Parses Matrix Market text into a dense matrix.
pub fn parse_matrix_market(text: &str) -> Result<Matrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty input"))?;
    let h: Vec<String> = header
        .split_whitespace()
        .map(|s| s.to_ascii_lowercase())
        .collect();
    if h.len() != 5 || h[0] != "%%matrixmarket" || h[1] != "matrix" {
        return Err(err(
            1,
            "expected '%%MatrixMarket matrix <format> <field> <symmetry>'",
        ));
    }
    let coordinate = match h[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(err(1, format!("unsupported format '{other}'"))),
    };
    if h[3] != "real" && h[3] != "integer" && h[3] != "double" {
        return Err(err(1, format!("unsupported field '{}'", h[3])));
    }
    let storage = match h[4].as_str() {
        "general" => Storage::General,
        "symmetric" => Storage::Symmetric,
        "skew-symmetric" => Storage::Skew,
        other => return Err(err(1, format!("unsupported symmetry '{other}'"))),
    };

    let mut data = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = data.next().ok_or_else(|| err(2, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| err(size_line, format!("bad size entry '{t}'")))
        })
        .collect::<Result<_>>()?;
    let want = if coordinate { 3 } else { 2 };
    if dims.len() != want {
        return Err(err(size_line, format!("size line needs {want} integers")));
    }
    let (rows, cols) = (dims[0], dims[1]);
    if storage != Storage::General && rows != cols {
        return Err(err(size_line, "symmetric storage needs a square matrix"));
    }
    let mut m = Matrix::zeros(rows, cols);
    let num = |line: usize, t: &str| -> Result<f64> {
        t.parse::<f64>()
            .map_err(|_| err(line, format!("bad number '{t}'")))
    };

    if coordinate {
        let nnz = dims[2];
        let mut seen = 0;
        for (ln, l) in data {
            let t: Vec<&str> = l.split_whitespace().collect();
            if t.len() != 3 {
                return Err(err(ln, "coordinate entry needs 'row col value'"));
            }
            let i: usize = t[0].parse().map_err(|_| err(ln, "bad row index"))?;
            let j: usize = t[1].parse().map_err(|_| err(ln, "bad column index"))?;
            if i == 0 || j == 0 || i > rows || j > cols {
                return Err(err(ln, format!("index ({i}, {j}) out of range")));
            }
            let v = num(ln, t[2])?;
            let (i, j) = (i - 1, j - 1);
            if storage != Storage::General && j > i {
                return Err(err(
                    ln,
                    "entry above the diagonal in lower-triangular storage",
                ));
            }
            if storage == Storage::Skew && i == j {
                return Err(err(ln, "diagonal entry in skew-symmetric storage"));
            }
            m[(i, j)] += v;
            match storage {
                Storage::Symmetric if i != j => m[(j, i)] += v,
                Storage::Skew => m[(j, i)] -= v,
                _ => {}
            }
            seen += 1;
        }
        if seen != nnz {
            return Err(err(
                size_line,
                format!("declared {nnz} entries, found {seen}"),
            ));
        }
    } else {
        // Column-major; symmetric kinds store the lower triangle only.
        let mut slots = Vec::new();
        for j in 0..cols {
            let start = match storage {
                Storage::General => 0,
                Storage::Symmetric => j,
                Storage::Skew => j + 1,
            };
            for i in start..rows {
                slots.push((i, j));
            }
        }
        let mut it = slots.into_iter();
        let mut last = size_line;
        for (ln, l) in data {
            last = ln;
            for t in l.split_whitespace() {
                let (i, j) = it.next().ok_or_else(|| err(ln, "too many values"))?;
                let v = num(ln, t)?;
                m[(i, j)] = v;
                match storage {
                    Storage::Symmetric => m[(j, i)] = v,
                    Storage::Skew => m[(j, i)] = -v,
                    Storage::General => {}
                }
            }
        }
        if it.next().is_some() {
            return Err(err(last, "too few values"));
        }
    }
    Ok(m)
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<Matrix> {
    parse_matrix_market(&std::fs::read_to_string(path)?)
}

/// Dense `array real general` text.
pub fn format_matrix_market(m: &Matrix) -> String {
    let mut s = String::from("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(s, "{} {}", m.nrows(), m.ncols());
    for v in m.iter() {
        let _ = writeln!(s, "{v:e}");
    }
    s
}

pub fn write_matrix_market(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    std::fs::write(path, format_matrix_market(m))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn array_round_trip() {
        let m = Matrix::from_fn(3, 2, |i, j| i as f64 - 0.25 * j as f64 + 1e-17);
        let back = parse_matrix_market(&format_matrix_market(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn coordinate_symmetric() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% c\n3 3 4\n1 1 2\n2 1 -1\n3 3 5\n3 2 0.5\n";
        let m = parse_matrix_market(text).unwrap();
        let want = Matrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 0.0, 0.5, 0.0, 0.5, 5.0]);
        assert_eq!(m, want);
    }

    #[test]
    fn skew_array_and_integer_field() {
        let text = "%%MatrixMarket matrix array integer skew-symmetric\n3 3\n1\n2\n3\n";
        let m = parse_matrix_market(text).unwrap();
        assert_eq!(m[(1, 0)], 1.0);
        assert_eq!(m[(0, 1)], -1.0);
        assert_eq!(m[(2, 1)], 3.0);
        assert_eq!(m[(1, 2)], -3.0);
        assert_eq!(m[(2, 2)], 0.0);
    }

    #[test]
    fn malformed_inputs() {
        for text in [
            "",
            "%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n",
            "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n",
            "%%MatrixMarket matrix array real general\n1 1\nx\n",
        ] {
            assert!(
                matches!(parse_matrix_market(text), Err(Error::MatrixMarket { .. })),
                "{text:?}"
            );
        }
    }
}
