//! Dense matrices over exact rationals and doubles, plus the text file format
//!
//! ```text
//! rip-matrix v1 <rows> <cols> <rational|float>
//! <row 0 entries, space separated>
//! ...
//! c block <name> <row_start> <row_end>
//! ```
//!
//! Rational entries are written `p/q` (`/q` omitted when `q == 1`), float
//! entries in shortest round-trip form. Block ranges are 0-based and
//! half-open.

use std::fmt::Write as _;
use std::ops::{Add, Mul};

use num::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{format_rational, from_f64, parse_rational, to_f64, Rational};

/// A named contiguous range of rows, `start..end`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowBlock {
    pub name: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
    blocks: Vec<RowBlock>,
}

pub type RationalMatrix = DenseMatrix<Rational>;
pub type FloatMatrix = DenseMatrix<f64>;

impl<T: Clone + Zero> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
            blocks: Vec::new(),
        }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::input("ragged rows"));
        }
        let nrows = rows.len();
        Ok(DenseMatrix {
            rows: nrows,
            cols,
            data: rows.into_iter().flatten().collect(),
            blocks: Vec::new(),
        })
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::input(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(DenseMatrix {
            rows,
            cols,
            data,
            blocks: Vec::new(),
        })
    }

    pub fn identity(n: usize) -> Self
    where
        T: num::One,
    {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn blocks(&self) -> &[RowBlock] {
        &self.blocks
    }

    pub fn block(&self, name: &str) -> Option<&RowBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn add_block(&mut self, name: impl Into<String>, start: usize, end: usize) -> Result<()> {
        if start > end || end > self.rows {
            return Err(Error::input(format!(
                "block {start}..{end} does not fit {} rows",
                self.rows
            )));
        }
        self.blocks.push(RowBlock {
            name: name.into(),
            start,
            end,
        });
        Ok(())
    }

    pub fn clear_blocks(&mut self) {
        self.blocks.clear();
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    /// Copies `other` into this matrix with its top-left corner at `(r, c)`.
    pub fn paste(&mut self, r: usize, c: usize, other: &Self) {
        for i in 0..other.rows {
            for j in 0..other.cols {
                self.set(r + i, c + j, other.get(i, j).clone());
            }
        }
    }

    /// `self` stacked on top of `below`.
    pub fn vstack(&self, below: &Self) -> Result<Self> {
        if self.cols != below.cols {
            return Err(Error::input(format!(
                "cannot stack {} columns on {} columns",
                self.cols, below.cols
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&below.data);
        Ok(DenseMatrix {
            rows: self.rows + below.rows,
            cols: self.cols,
            data,
            blocks: Vec::new(),
        })
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> DenseMatrix<U> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
            blocks: self.blocks.clone(),
        }
    }
}

impl<T> DenseMatrix<T>
where
    T: Clone + Zero,
    for<'a> &'a T: Mul<&'a T, Output = T> + Add<&'a T, Output = T>,
{
    pub fn mul_vec(&self, u: &[T]) -> Result<Vec<T>> {
        if u.len() != self.cols {
            return Err(Error::input(format!(
                "vector of length {} against {} columns",
                u.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                // reduction matrices are mostly zeros
                self.row(i)
                    .iter()
                    .zip(u)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .fold(T::zero(), |acc, (a, b)| &acc + &(a * b))
            })
            .collect())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::input(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = T::zero();
                for k in 0..self.cols {
                    acc = &acc + &(self.get(i, k) * other.get(k, j));
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    /// `‖self · u‖²`.
    pub fn image_norm_sq(&self, u: &[T]) -> Result<T> {
        Ok(self
            .mul_vec(u)?
            .iter()
            .fold(T::zero(), |acc, y| &acc + &(y * y)))
    }

    pub fn scaled(&self, s: &T) -> Self {
        let mut out = self.map(|x| x * s);
        out.blocks = self.blocks.clone();
        out
    }
}

/// `A ⊕ B` with zero off-diagonal blocks.
pub fn block_diagonal<T: Clone + Zero>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> DenseMatrix<T> {
    let mut out = DenseMatrix::zeros(a.rows + b.rows, a.cols + b.cols);
    out.paste(0, 0, a);
    out.paste(a.rows, a.cols, b);
    out
}

impl RationalMatrix {
    /// Round-to-nearest double view.
    pub fn to_float(&self) -> FloatMatrix {
        self.map(to_f64)
    }
}

impl FloatMatrix {
    /// Exact rational value of every entry.
    pub fn to_rational(&self) -> Result<RationalMatrix> {
        let data = self
            .data
            .iter()
            .map(|&x| from_f64(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
            blocks: self.blocks.clone(),
        })
    }

    /// `XᵀX`.
    pub fn gram(&self) -> FloatMatrix {
        let mut g = FloatMatrix::zeros(self.cols, self.cols);
        for i in 0..self.cols {
            for j in i..self.cols {
                let s: f64 = (0..self.rows)
                    .map(|r| self.get(r, i) * self.get(r, j))
                    .sum();
                g.set(i, j, s);
                g.set(j, i, s);
            }
        }
        g
    }

    /// Principal submatrix on `support` (row and column indices).
    pub fn principal(&self, support: &[usize]) -> FloatMatrix {
        let k = support.len();
        let mut out = FloatMatrix::zeros(k, k);
        for (a, &i) in support.iter().enumerate() {
            for (b, &j) in support.iter().enumerate() {
                out.set(a, b, *self.get(i, j));
            }
        }
        out
    }

    pub fn sub(&self, other: &FloatMatrix) -> Result<FloatMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::input("shape mismatch"));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        FloatMatrix::from_row_major(self.rows, self.cols, data)
    }

    pub fn max_abs_diff(&self, other: &FloatMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Either kind of matrix as stored on disk.
#[derive(Clone, Debug, PartialEq)]
pub enum MatrixFile {
    Rational(RationalMatrix),
    Float(FloatMatrix),
}

impl MatrixFile {
    pub fn to_float(&self) -> FloatMatrix {
        match self {
            MatrixFile::Rational(m) => m.to_float(),
            MatrixFile::Float(m) => m.clone(),
        }
    }

    /// Exact rational view; float entries convert without rounding.
    pub fn to_rational(&self) -> Result<RationalMatrix> {
        match self {
            MatrixFile::Rational(m) => Ok(m.clone()),
            MatrixFile::Float(m) => m.to_rational(),
        }
    }
}

fn write_blocks<T>(out: &mut String, m: &DenseMatrix<T>) {
    for b in &m.blocks {
        writeln!(out, "c block {} {} {}", b.name, b.start, b.end).unwrap();
    }
}

pub fn write_rational_matrix(m: &RationalMatrix) -> String {
    let mut out = format!("rip-matrix v1 {} {} rational\n", m.rows, m.cols);
    for i in 0..m.rows {
        let row: Vec<String> = m.row(i).iter().map(format_rational).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    write_blocks(&mut out, m);
    out
}

pub fn write_float_matrix(m: &FloatMatrix) -> String {
    let mut out = format!("rip-matrix v1 {} {} float\n", m.rows, m.cols);
    for i in 0..m.rows {
        let row: Vec<String> = m.row(i).iter().map(|x| format!("{x:?}")).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    write_blocks(&mut out, m);
    out
}

pub fn write_matrix(m: &MatrixFile) -> String {
    match m {
        MatrixFile::Rational(r) => write_rational_matrix(r),
        MatrixFile::Float(f) => write_float_matrix(f),
    }
}

pub fn parse_matrix(text: &str) -> Result<MatrixFile> {
    let mut lines = text.lines().enumerate();
    let (rows, cols, rational) = loop {
        let Some((i, line)) = lines.next() else {
            return Err(Error::parse(1, "missing `rip-matrix v1` header"));
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 5 || f[0] != "rip-matrix" || f[1] != "v1" {
            return Err(Error::parse(
                i + 1,
                "expected `rip-matrix v1 <rows> <cols> <rational|float>`",
            ));
        }
        let rows: usize = f[2]
            .parse()
            .map_err(|_| Error::parse(i + 1, "bad row count"))?;
        let cols: usize = f[3]
            .parse()
            .map_err(|_| Error::parse(i + 1, "bad column count"))?;
        let rational = match f[4] {
            "rational" => true,
            "float" => false,
            other => return Err(Error::parse(i + 1, format!("unknown entry kind `{other}`"))),
        };
        break (rows, cols, rational);
    };

    let mut rat_data = Vec::new();
    let mut float_data = Vec::new();
    let mut blocks = Vec::new();
    let mut seen_rows = 0;
    let mut last = 1;
    for (i, raw) in lines {
        let lineno = i + 1;
        last = lineno;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('c') {
            let f: Vec<&str> = rest.split_whitespace().collect();
            if f.first() == Some(&"block") {
                if f.len() != 4 {
                    return Err(Error::parse(
                        lineno,
                        "expected `c block <name> <start> <end>`",
                    ));
                }
                let start = f[2]
                    .parse()
                    .map_err(|_| Error::parse(lineno, "bad block start"))?;
                let end = f[3]
                    .parse()
                    .map_err(|_| Error::parse(lineno, "bad block end"))?;
                blocks.push(RowBlock {
                    name: f[1].to_string(),
                    start,
                    end,
                });
            }
            continue;
        }
        if seen_rows == rows {
            return Err(Error::parse(
                lineno,
                format!("more than the {rows} declared rows"),
            ));
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != cols {
            return Err(Error::parse(
                lineno,
                format!("row has {} entries, expected {cols}", toks.len()),
            ));
        }
        for t in toks {
            if rational {
                rat_data.push(parse_rational(t).map_err(|e| Error::parse(lineno, e.to_string()))?);
            } else {
                let x: f64 = t
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("bad float `{t}`")))?;
                if !x.is_finite() {
                    return Err(Error::parse(lineno, format!("non-finite entry `{t}`")));
                }
                float_data.push(x);
            }
        }
        seen_rows += 1;
    }
    if seen_rows != rows {
        return Err(Error::parse(
            last,
            format!("header declares {rows} rows, found {seen_rows}"),
        ));
    }
    if let Some(b) = blocks.iter().find(|b| b.start > b.end || b.end > rows) {
        return Err(Error::parse(
            last,
            format!("block `{}` exceeds the matrix", b.name),
        ));
    }
    Ok(if rational {
        let mut m = RationalMatrix::from_row_major(rows, cols, rat_data)?;
        m.blocks = blocks;
        MatrixFile::Rational(m)
    } else {
        let mut m = FloatMatrix::from_row_major(rows, cols, float_data)?;
        m.blocks = blocks;
        MatrixFile::Float(m)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use proptest::prelude::*;

    #[test]
    fn rational_file_layout() {
        let mut m =
            RationalMatrix::from_rows(vec![vec![int(1), ratio(-1, 2)], vec![int(0), ratio(4, 3)]])
                .unwrap();
        m.add_block("top", 0, 1).unwrap();
        let text = write_rational_matrix(&m);
        assert_eq!(
            text,
            "rip-matrix v1 2 2 rational\n1 -1/2\n0 4/3\nc block top 0 1\n"
        );
        assert_eq!(parse_matrix(&text).unwrap(), MatrixFile::Rational(m));
    }

    #[test]
    fn rejects_malformed_files() {
        assert!(parse_matrix("rip-matrix v2 1 1 float\n1\n").is_err());
        assert!(parse_matrix("rip-matrix v1 1 2 float\n1\n").is_err());
        assert!(parse_matrix("rip-matrix v1 2 1 float\n1\n").is_err());
        assert!(parse_matrix("rip-matrix v1 1 1 rational\n1/0\n").is_err());
        assert!(parse_matrix("rip-matrix v1 1 1 float\nNaN\n").is_err());
        assert!(parse_matrix("rip-matrix v1 1 1 float\n1\nc block x 0 5\n").is_err());
    }

    #[test]
    fn gram_and_principal() {
        let x = FloatMatrix::from_rows(vec![vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        let g = x.gram();
        assert_eq!(g.data(), &[1.0, 2.0, 2.0, 5.0]);
        assert_eq!(g.principal(&[1]).data(), &[5.0]);
    }

    #[test]
    fn block_diagonal_layout() {
        let a = FloatMatrix::identity(1);
        let b = FloatMatrix::from_rows(vec![vec![2.0, 3.0]]).unwrap();
        let d = block_diagonal(&a, &b);
        assert_eq!(d.rows(), 2);
        assert_eq!(d.cols(), 3);
        assert_eq!(d.data(), &[1.0, 0.0, 0.0, 0.0, 2.0, 3.0]);
    }

    proptest! {
        #[test]
        fn float_file_round_trips(rows in 1usize..4, cols in 1usize..4, seed in proptest::collection::vec(-1e6f64..1e6, 16)) {
            let data: Vec<f64> = seed.iter().take(rows * cols).map(|x| x / 7.0).collect();
            prop_assume!(data.len() == rows * cols);
            let m = FloatMatrix::from_row_major(rows, cols, data).unwrap();
            let back = parse_matrix(&write_float_matrix(&m)).unwrap();
            prop_assert_eq!(back, MatrixFile::Float(m));
        }
    }
}
