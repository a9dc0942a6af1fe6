//! Dense matrices over `F_q`, block partitioning, and exact linear algebra.
//!
//! Storage is row-major: entry `(i, j)` lives at `i * cols + j`. The text
//! format used for fixtures and result dumps is a header line `q rows cols`
//! followed by the entries in the same row-major order, whitespace-separated.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::field::{FieldElement, FieldError, PrimeField, SeededPrg};
use crate::par::Exec;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("matrix is singular")]
    Singular,
    #[error("dimension {dim} is not divisible by {count}")]
    IndivisibleDimension { dim: usize, count: usize },
    #[error("empty block list")]
    EmptyBlockList,
    #[error("malformed matrix text: {0}")]
    Parse(String),
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FieldMatrix {
    field: PrimeField,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl FieldMatrix {
    /// Builds a matrix from row-major values, reducing each modulo `q`.
    pub fn from_values(
        field: PrimeField,
        rows: usize,
        cols: usize,
        values: Vec<u64>,
    ) -> Result<Self, MatrixError> {
        if values.len() != rows * cols {
            return Err(MatrixError::DimensionMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                values.len()
            )));
        }
        let q = field.modulus();
        let data = values.into_iter().map(|v| v % q).collect();
        Ok(Self {
            field,
            rows,
            cols,
            data,
        })
    }

    pub fn from_elements(
        field: PrimeField,
        rows: usize,
        cols: usize,
        elems: &[FieldElement],
    ) -> Result<Self, MatrixError> {
        if elems.len() != rows * cols {
            return Err(MatrixError::DimensionMismatch(format!(
                "{} elements for a {rows}x{cols} matrix",
                elems.len()
            )));
        }
        let mut data = Vec::with_capacity(elems.len());
        for e in elems {
            if e.field() != field {
                return Err(FieldError::FieldMismatch {
                    left: field.modulus(),
                    right: e.field().modulus(),
                }
                .into());
            }
            data.push(e.value());
        }
        Ok(Self {
            field,
            rows,
            cols,
            data,
        })
    }

    pub fn from_rows(field: PrimeField, rows: &[Vec<u64>]) -> Result<Self, MatrixError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(MatrixError::DimensionMismatch("ragged rows".into()));
        }
        Self::from_values(field, rows.len(), cols, rows.concat())
    }

    pub fn zeros(field: PrimeField, rows: usize, cols: usize) -> Self {
        Self {
            field,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(field: PrimeField, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1 % field.modulus();
        }
        m
    }

    pub fn from_fn(
        field: PrimeField,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> FieldElement,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let e = f(i, j);
                debug_assert_eq!(e.field(), field);
                data.push(e.value());
            }
        }
        Self {
            field,
            rows,
            cols,
            data,
        }
    }

    /// Matrix with i.i.d. uniform entries, drawn in row-major order.
    pub fn random(field: PrimeField, rows: usize, cols: usize, prg: &mut SeededPrg) -> Self {
        let data = (0..rows * cols).map(|_| prg.sample_raw(field)).collect();
        Self {
            field,
            rows,
            cols,
            data,
        }
    }

    #[inline]
    pub fn field(&self) -> PrimeField {
        self.field
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Number of `F_q` symbols held.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> FieldElement {
        self.field.elem(self.data[i * self.cols + j])
    }

    pub fn set(&mut self, i: usize, j: usize, v: FieldElement) {
        assert_eq!(v.field(), self.field, "element from a different field");
        self.data[i * self.cols + j] = v.value();
    }

    /// Row-major canonical representatives.
    pub fn values(&self) -> &[u64] {
        &self.data
    }

    pub fn elements(&self) -> Vec<FieldElement> {
        self.data.iter().map(|&v| self.field.elem(v)).collect()
    }

    pub fn row(&self, i: usize) -> Vec<FieldElement> {
        self.data[i * self.cols..(i + 1) * self.cols]
            .iter()
            .map(|&v| self.field.elem(v))
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<FieldElement> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.field, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self::from_fn(self.field, self.rows, cols.len(), |i, k| self.get(i, cols[k]))
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self::from_fn(self.field, rows.len(), self.cols, |k, j| self.get(rows[k], j))
    }

    /// Rows `start..end`.
    pub fn row_range(&self, start: usize, end: usize) -> Self {
        Self {
            field: self.field,
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    fn check_field(&self, other: &Self) -> Result<(), MatrixError> {
        if self.field != other.field {
            return Err(FieldError::FieldMismatch {
                left: self.field.modulus(),
                right: other.field.modulus(),
            }
            .into());
        }
        Ok(())
    }

    fn check_same_shape(&self, other: &Self) -> Result<(), MatrixError> {
        self.check_field(other)?;
        if self.dims() != other.dims() {
            return Err(MatrixError::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, MatrixError> {
        self.check_same_shape(other)?;
        let f = self.field;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f.add_raw(a, b))
            .collect();
        Ok(self.with_data(data))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, MatrixError> {
        self.check_same_shape(other)?;
        let f = self.field;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f.sub_raw(a, b))
            .collect();
        Ok(self.with_data(data))
    }

    /// In-place `self += c * other`.
    pub fn add_scaled_assign(&mut self, c: FieldElement, other: &Self) -> Result<(), MatrixError> {
        self.check_same_shape(other)?;
        if c.field() != self.field {
            return Err(FieldError::FieldMismatch {
                left: self.field.modulus(),
                right: c.field().modulus(),
            }
            .into());
        }
        let f = self.field;
        let c = c.value();
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = f.add_raw(*a, f.mul_raw(c, b));
        }
        Ok(())
    }

    pub fn scale(&self, c: FieldElement) -> Self {
        assert_eq!(c.field(), self.field, "scalar from a different field");
        let f = self.field;
        let data = self.data.iter().map(|&a| f.mul_raw(a, c.value())).collect();
        self.with_data(data)
    }

    fn with_data(&self, data: Vec<u64>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        Self {
            field: self.field,
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, MatrixError> {
        self.matmul_with(other, Exec::default())
    }

    /// Exact product, output rows computed independently under `exec`.
    pub fn matmul_with(&self, other: &Self, exec: Exec) -> Result<Self, MatrixError> {
        self.check_field(other)?;
        if self.cols != other.rows {
            return Err(MatrixError::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let (n, m) = (self.cols, other.cols);
        let f = self.field;
        let q = f.modulus();
        let mut out = Self::zeros(f, self.rows, m);
        if m == 0 {
            return Ok(out);
        }
        // Below 2^32 every product fits in 64 bits, so a u128 accumulator
        // absorbs up to 2^64 terms before a single final reduction.
        let small = q <= u32::MAX as u64;
        exec.for_each_chunk_mut(&mut out.data, m, |i, out_row| {
            let a_row = &self.data[i * n..(i + 1) * n];
            if small {
                let mut acc = vec![0u128; m];
                for (k, &a) in a_row.iter().enumerate() {
                    if a == 0 {
                        continue;
                    }
                    let b_row = &other.data[k * m..(k + 1) * m];
                    for (s, &b) in acc.iter_mut().zip(b_row) {
                        *s += (a * b) as u128;
                    }
                }
                for (o, s) in out_row.iter_mut().zip(acc) {
                    *o = (s % q as u128) as u64;
                }
            } else {
                for (k, &a) in a_row.iter().enumerate() {
                    if a == 0 {
                        continue;
                    }
                    let b_row = &other.data[k * m..(k + 1) * m];
                    for (o, &b) in out_row.iter_mut().zip(b_row) {
                        *o = f.add_raw(*o, f.mul_raw(a, b));
                    }
                }
            }
        });
        Ok(out)
    }

    /// Gauss-Jordan inverse. The pivot for each column is the lowest-index
    /// remaining row with a nonzero entry.
    pub fn invert(&self) -> Result<Self, MatrixError> {
        if self.rows != self.cols {
            return Err(MatrixError::DimensionMismatch(format!(
                "cannot invert a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let f = self.field;
        let w = 2 * n;
        let mut aug = vec![0u64; n * w];
        for i in 0..n {
            aug[i * w..i * w + n].copy_from_slice(&self.data[i * n..(i + 1) * n]);
            aug[i * w + n + i] = 1 % f.modulus();
        }
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| aug[r * w + col] != 0)
                .ok_or(MatrixError::Singular)?;
            if pivot != col {
                for j in 0..w {
                    aug.swap(pivot * w + j, col * w + j);
                }
            }
            let inv = f.inv_raw(aug[col * w + col])?;
            for j in 0..w {
                aug[col * w + j] = f.mul_raw(aug[col * w + j], inv);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = aug[r * w + col];
                if factor == 0 {
                    continue;
                }
                for j in 0..w {
                    let v = f.mul_raw(factor, aug[col * w + j]);
                    aug[r * w + j] = f.sub_raw(aug[r * w + j], v);
                }
            }
        }
        let mut out = Self::zeros(f, n, n);
        for i in 0..n {
            out.data[i * n..(i + 1) * n].copy_from_slice(&aug[i * w + n..(i + 1) * w]);
        }
        Ok(out)
    }

    /// Reduces to row-echelon form in place and returns the pivot columns.
    fn echelon(&mut self) -> Vec<usize> {
        let f = self.field;
        let (rows, cols) = (self.rows, self.cols);
        let mut pivots = Vec::new();
        let mut r = 0;
        for col in 0..cols {
            if r == rows {
                break;
            }
            let Some(p) = (r..rows).find(|&i| self.data[i * cols + col] != 0) else {
                continue;
            };
            if p != r {
                for j in 0..cols {
                    self.data.swap(p * cols + j, r * cols + j);
                }
            }
            let inv = f.inv_raw(self.data[r * cols + col]).expect("nonzero pivot");
            for j in col..cols {
                self.data[r * cols + j] = f.mul_raw(self.data[r * cols + j], inv);
            }
            for i in 0..rows {
                if i == r {
                    continue;
                }
                let factor = self.data[i * cols + col];
                if factor == 0 {
                    continue;
                }
                for j in col..cols {
                    let v = f.mul_raw(factor, self.data[r * cols + j]);
                    self.data[i * cols + j] = f.sub_raw(self.data[i * cols + j], v);
                }
            }
            pivots.push(col);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().echelon().len()
    }

    /// Some solution of `self * x = rhs`, or `None` if the system is
    /// inconsistent. Free variables are set to zero.
    pub fn solve(&self, rhs: &[FieldElement]) -> Result<Option<Vec<FieldElement>>, MatrixError> {
        if rhs.len() != self.rows {
            return Err(MatrixError::DimensionMismatch(format!(
                "right-hand side of length {} for {} rows",
                rhs.len(),
                self.rows
            )));
        }
        let f = self.field;
        let w = self.cols + 1;
        let mut aug = Self::zeros(f, self.rows, w);
        for (i, b) in rhs.iter().enumerate() {
            aug.data[i * w..i * w + self.cols]
                .copy_from_slice(&self.data[i * self.cols..(i + 1) * self.cols]);
            if b.field() != f {
                return Err(FieldError::FieldMismatch {
                    left: f.modulus(),
                    right: b.field().modulus(),
                }
                .into());
            }
            aug.data[i * w + self.cols] = b.value();
        }
        let pivots = aug.echelon();
        if pivots.last() == Some(&self.cols) {
            return Ok(None);
        }
        let mut x = vec![f.zero(); self.cols];
        for (r, &c) in pivots.iter().enumerate() {
            x[c] = f.elem(aug.data[r * w + self.cols]);
        }
        Ok(Some(x))
    }

    /// Splits into an ordered block list; see [`PartitionKind`].
    pub fn split(&self, kind: PartitionKind, count: usize) -> Result<BlockList, MatrixError> {
        let divide = |dim: usize, count: usize| {
            if count == 0 || !dim.is_multiple_of(count) {
                Err(MatrixError::IndivisibleDimension { dim, count })
            } else {
                Ok(dim / count)
            }
        };
        let blocks = match kind {
            PartitionKind::IppColumns | PartitionKind::OppCols => {
                let w = divide(self.cols, count)?;
                (0..count)
                    .map(|b| {
                        let cols: Vec<usize> = (b * w..(b + 1) * w).collect();
                        self.select_columns(&cols)
                    })
                    .collect()
            }
            PartitionKind::IppRows | PartitionKind::OppRows => {
                let h = divide(self.rows, count)?;
                (0..count)
                    .map(|b| self.row_range(b * h, (b + 1) * h))
                    .collect()
            }
            PartitionKind::Grid { rows, cols } => {
                if rows * cols != count {
                    return Err(MatrixError::DimensionMismatch(format!(
                        "grid {rows}x{cols} does not hold {count} blocks"
                    )));
                }
                let h = divide(self.rows, rows)?;
                let w = divide(self.cols, cols)?;
                let mut out = Vec::with_capacity(count);
                for br in 0..rows {
                    for bc in 0..cols {
                        out.push(Self::from_fn(self.field, h, w, |i, j| {
                            self.get(br * h + i, bc * w + j)
                        }));
                    }
                }
                out
            }
        };
        Ok(BlockList { blocks, kind })
    }

    /// Writes the `q rows cols` text format.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {} {}\n", self.field.modulus(), self.rows, self.cols);
        for i in 0..self.rows {
            let row: Vec<String> = self.data[i * self.cols..(i + 1) * self.cols]
                .iter()
                .map(u64::to_string)
                .collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn parse_text(text: &str) -> Result<Self, MatrixError> {
        let mut tokens = text.split_whitespace();
        let mut header = |name: &str| -> Result<u64, MatrixError> {
            tokens
                .next()
                .ok_or_else(|| MatrixError::Parse(format!("missing {name}")))?
                .parse::<u64>()
                .map_err(|e| MatrixError::Parse(format!("{name}: {e}")))
        };
        let q = header("q")?;
        let rows = header("rows")? as usize;
        let cols = header("cols")? as usize;
        let field = PrimeField::new(q)?;
        let values = tokens
            .map(|t| {
                let v = t
                    .parse::<u64>()
                    .map_err(|e| MatrixError::Parse(format!("entry {t:?}: {e}")))?;
                if v >= q {
                    return Err(MatrixError::Parse(format!("entry {v} is not below q = {q}")));
                }
                Ok(v)
            })
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() != rows * cols {
            return Err(MatrixError::Parse(format!(
                "expected {} entries, found {}",
                rows * cols,
                values.len()
            )));
        }
        Self::from_values(field, rows, cols, values)
    }
}

impl fmt::Debug for FieldMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FieldMatrix<{}>{}x{} ", self.field, self.rows, self.cols)?;
        let rows: Vec<&[u64]> = (0..self.rows)
            .map(|i| &self.data[i * self.cols..(i + 1) * self.cols])
            .collect();
        write!(f, "{rows:?}")
    }
}

impl fmt::Display for FieldMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for FieldMatrix {
    type Err = MatrixError;
    fn from_str(s: &str) -> Result<Self, MatrixError> {
        Self::parse_text(s)
    }
}

/// How a matrix is cut into blocks.
///
/// Inner-product partitioning cuts `A` into column blocks and `B` into row
/// blocks so that `AB = sum_j A_j B_j`; outer-product partitioning cuts `A`
/// into row blocks and `B` into column blocks so that `AB` is the grid of
/// `A_i B_k`. `Grid` is a row-major block grid, used to reassemble outer
/// products.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionKind {
    IppColumns,
    IppRows,
    OppRows,
    OppCols,
    Grid { rows: usize, cols: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockList {
    pub blocks: Vec<FieldMatrix>,
    pub kind: PartitionKind,
}

impl BlockList {
    pub fn new(blocks: Vec<FieldMatrix>, kind: PartitionKind) -> Self {
        Self { blocks, kind }
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Concatenates the blocks back into one matrix.
    pub fn assemble(&self) -> Result<FieldMatrix, MatrixError> {
        let first = self.blocks.first().ok_or(MatrixError::EmptyBlockList)?;
        let field = first.field();
        let (h, w) = first.dims();
        for b in &self.blocks {
            first.check_field(b)?;
            if b.dims() != (h, w) {
                return Err(MatrixError::DimensionMismatch(format!(
                    "block {}x{} differs from {h}x{w}",
                    b.rows(),
                    b.cols()
                )));
            }
        }
        let (grid_rows, grid_cols) = match self.kind {
            PartitionKind::IppColumns | PartitionKind::OppCols => (1, self.blocks.len()),
            PartitionKind::IppRows | PartitionKind::OppRows => (self.blocks.len(), 1),
            PartitionKind::Grid { rows, cols } => {
                if rows * cols != self.blocks.len() {
                    return Err(MatrixError::DimensionMismatch(format!(
                        "grid {rows}x{cols} with {} blocks",
                        self.blocks.len()
                    )));
                }
                (rows, cols)
            }
        };
        let mut out = FieldMatrix::zeros(field, grid_rows * h, grid_cols * w);
        let out_cols = out.cols;
        for (idx, b) in self.blocks.iter().enumerate() {
            let (br, bc) = (idx / grid_cols, idx % grid_cols);
            for i in 0..h {
                let dst = (br * h + i) * out_cols + bc * w;
                out.data[dst..dst + w].copy_from_slice(&b.data[i * w..(i + 1) * w]);
            }
        }
        Ok(out)
    }
}
