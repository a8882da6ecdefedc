//! Row-major dense matrix with a plain text encoding.
//!
//! Text form: a first line `<rows> <cols>`, then one whitespace-separated row
//! per line. Blank lines and `#` comments are ignored.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::num::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim("matrix data", rows * cols, data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds from equal-width rows. An empty input yields a `0 × 0` matrix.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::dim("matrix row", cols, r.len()));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[T]> {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.rows, self.cols);
        for r in self.iter_rows() {
            let row: Vec<String> = r.iter().map(|v| v.to_string()).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str, label: &str) -> Result<Self> {
        let err = |field: &str, message: String| Error::Parse {
            file: label.to_string(),
            field: field.to_string(),
            message,
        };
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| err("header", "empty file".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse())
            .collect::<Result<_, _>>()
            .map_err(|_| {
                err(
                    "header",
                    format!("expected `<rows> <cols>`, got `{header}`"),
                )
            })?;
        let [rows, cols] = dims[..] else {
            return Err(err(
                "header",
                format!("expected two integers, got `{header}`"),
            ));
        };
        let mut data = Vec::with_capacity(rows * cols);
        let mut seen = 0;
        for (i, line) in lines.enumerate() {
            let before = data.len();
            for tok in line.split_whitespace() {
                let v: T = tok
                    .parse()
                    .map_err(|_| err("data", format!("row {i}: `{tok}` is not a number")))?;
                data.push(v);
            }
            if data.len() - before != cols {
                return Err(err(
                    "data",
                    format!(
                        "row {i}: expected {cols} values, got {}",
                        data.len() - before
                    ),
                ));
            }
            seen += 1;
        }
        if seen != rows {
            return Err(err(
                "data",
                format!("header declares {rows} rows, found {seen}"),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}
