//! Polynomials over `F_q`, Lagrange bases, Reed-Solomon generators and
//! generalized Vandermonde decoding.
//!
//! Zero is an allowed interpolation node here. Whether an encoding may use it
//! is a security question answered by the protocol layer.

use std::collections::HashSet;

use thiserror::Error;

use crate::field::{FieldElement, FieldError, PrimeField};
use crate::matgrid::{FieldMatrix, MatrixError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("interpolation points are not pairwise distinct")]
    DuplicatePoints,
    #[error("index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("exponents must be strictly increasing")]
    NonIncreasingExponents,
    #[error("code dimension {k} exceeds length {n}")]
    DimensionTooLarge { k: usize, n: usize },
    #[error("no interpolation points")]
    NoPoints,
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Dense univariate polynomial; `coeffs[i]` multiplies `x^i`.
///
/// Trailing zeros are allowed; [`DensePoly::degree`] ignores them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensePoly {
    field: PrimeField,
    coeffs: Vec<FieldElement>,
}

impl DensePoly {
    pub fn new(field: PrimeField, coeffs: Vec<FieldElement>) -> Self {
        debug_assert!(coeffs.iter().all(|c| c.field() == field));
        Self { field, coeffs }
    }

    pub fn from_values(field: PrimeField, values: &[u64]) -> Self {
        Self::new(field, values.iter().map(|&v| field.elem(v)).collect())
    }

    pub fn zero(field: PrimeField) -> Self {
        Self::new(field, Vec::new())
    }

    pub fn constant(c: FieldElement) -> Self {
        Self::new(c.field(), vec![c])
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    /// Coefficient of `x^i`; zero beyond the stored length.
    pub fn coeff(&self, i: usize) -> FieldElement {
        self.coeffs.get(i).copied().unwrap_or(self.field.zero())
    }

    /// Highest index with a nonzero coefficient, `None` for the zero
    /// polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| !c.is_zero())
    }

    pub fn is_zero(&self) -> bool {
        self.degree().is_none()
    }

    /// Horner evaluation.
    pub fn eval(&self, x: FieldElement) -> FieldElement {
        self.coeffs
            .iter()
            .rev()
            .fold(self.field.zero(), |acc, &c| acc * x + c)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new(
            self.field,
            (0..n).map(|i| self.coeff(i) + other.coeff(i)).collect(),
        )
    }

    pub fn scale(&self, c: FieldElement) -> Self {
        Self::new(self.field, self.coeffs.iter().map(|&a| a * c).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Self::zero(self.field);
        }
        let mut out = vec![self.field.zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(self.field, out)
    }

    /// `self * (x - root)`.
    pub fn mul_linear(&self, root: FieldElement) -> Self {
        let mut out = vec![self.field.zero(); self.coeffs.len() + 1];
        for (i, &c) in self.coeffs.iter().enumerate() {
            out[i + 1] += c;
            out[i] -= c * root;
        }
        Self::new(self.field, out)
    }

    /// `prod_i (x - roots_i)`.
    pub fn from_roots(field: PrimeField, roots: &[FieldElement]) -> Self {
        roots
            .iter()
            .fold(Self::constant(field.one()), |acc, &r| acc.mul_linear(r))
    }
}

fn check_distinct(points: &[FieldElement]) -> Result<(), PolyError> {
    let mut seen = HashSet::with_capacity(points.len());
    if points.iter().all(|p| seen.insert(*p)) {
        Ok(())
    } else {
        Err(PolyError::DuplicatePoints)
    }
}

fn field_of(points: &[FieldElement]) -> Result<PrimeField, PolyError> {
    let field = points.first().ok_or(PolyError::NoPoints)?.field();
    if let Some(p) = points.iter().find(|p| p.field() != field) {
        return Err(FieldError::FieldMismatch {
            left: field.modulus(),
            right: p.field().modulus(),
        }
        .into());
    }
    Ok(field)
}

/// Lagrange basis polynomial `l_j` for the given nodes, built from its product
/// form: `l_j(x) = prod_{i != j} (x - x_i) / (x_j - x_i)`.
pub fn lagrange_basis(points: &[FieldElement], j: usize) -> Result<DensePoly, PolyError> {
    let field = field_of(points)?;
    if j >= points.len() {
        return Err(PolyError::IndexOutOfRange {
            index: j,
            len: points.len(),
        });
    }
    check_distinct(points)?;
    let xj = points[j];
    let mut numer = DensePoly::constant(field.one());
    let mut denom = field.one();
    for (i, &xi) in points.iter().enumerate() {
        if i == j {
            continue;
        }
        numer = numer.mul_linear(xi);
        denom *= xj - xi;
    }
    Ok(numer.scale(denom.inv()?))
}

/// Weights `(l_0[theta], ..., l_{K-1}[theta])`: the coefficient `L_theta` of
/// the interpolant through `(x_j, y_j)` is `sum_j y_j * l_j[theta]`.
pub fn coeff_weights(points: &[FieldElement], theta: usize) -> Result<Vec<FieldElement>, PolyError> {
    if theta >= points.len() {
        return Err(PolyError::IndexOutOfRange {
            index: theta,
            len: points.len(),
        });
    }
    (0..points.len())
        .map(|j| Ok(lagrange_basis(points, j)?.coeff(theta)))
        .collect()
}

/// Interpolating polynomial of degree `< K` through `K` points.
pub fn interpolate(points: &[FieldElement], values: &[FieldElement]) -> Result<DensePoly, PolyError> {
    let field = field_of(points)?;
    if values.len() != points.len() {
        return Err(MatrixError::DimensionMismatch(format!(
            "{} values for {} points",
            values.len(),
            points.len()
        ))
        .into());
    }
    let mut acc = DensePoly::zero(field);
    for (j, &y) in values.iter().enumerate() {
        acc = acc.add(&lagrange_basis(points, j)?.scale(y));
    }
    Ok(acc)
}

/// `K x N` generator of the `[N, K]` Reed-Solomon code: row `k` holds
/// `x_i^k` for every locator `x_i`.
pub fn rs_generator(points: &[FieldElement], k: usize) -> Result<FieldMatrix, PolyError> {
    let field = field_of(points)?;
    check_distinct(points)?;
    if k > points.len() {
        return Err(PolyError::DimensionTooLarge { k, n: points.len() });
    }
    Ok(FieldMatrix::from_fn(field, k, points.len(), |r, i| {
        points[i].pow(r as u64)
    }))
}

/// Strictly increasing list of exponents.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExponentSet(Vec<u32>);

impl ExponentSet {
    pub fn new(exponents: Vec<u32>) -> Result<Self, PolyError> {
        if exponents.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PolyError::NonIncreasingExponents);
        }
        Ok(Self(exponents))
    }

    /// `{0, 1, ..., k-1}`.
    pub fn consecutive(k: usize) -> Self {
        Self((0..k as u32).collect())
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Position of exponent `e`, if present.
    pub fn position(&self, e: u32) -> Option<usize> {
        self.0.binary_search(&e).ok()
    }
}

/// Matrix with entry `(i, k) = points_i ^ E_k`.
pub fn generalized_vandermonde(
    points: &[FieldElement],
    exponents: &ExponentSet,
) -> Result<FieldMatrix, PolyError> {
    let field = field_of(points)?;
    let e = exponents.as_slice();
    Ok(FieldMatrix::from_fn(field, points.len(), e.len(), |i, k| {
        points[i].pow(e[k] as u64)
    }))
}

/// Rows `targets` of the inverse of the square generalized Vandermonde matrix.
///
/// Row `t` holds the weights that recover the coefficient at position `t` of
/// `exponents` from evaluations at `points`.
pub fn decode_rows(
    points: &[FieldElement],
    exponents: &ExponentSet,
    targets: &[usize],
) -> Result<FieldMatrix, PolyError> {
    let v = generalized_vandermonde(points, exponents)?;
    if v.rows() != v.cols() {
        return Err(MatrixError::DimensionMismatch(format!(
            "{} points for {} exponents",
            v.rows(),
            v.cols()
        ))
        .into());
    }
    if let Some(&t) = targets.iter().find(|&&t| t >= v.rows()) {
        return Err(PolyError::IndexOutOfRange {
            index: t,
            len: v.rows(),
        });
    }
    Ok(v.invert()?.select_rows(targets))
}

/// Sparse polynomial with matrix coefficients, exponents strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsePoly {
    terms: Vec<(u32, FieldMatrix)>,
}

impl SparsePoly {
    /// Terms may be given in any order; they are sorted by exponent.
    pub fn new(mut terms: Vec<(u32, FieldMatrix)>) -> Result<Self, PolyError> {
        terms.sort_by_key(|(e, _)| *e);
        if terms.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(PolyError::NonIncreasingExponents);
        }
        if let Some((_, first)) = terms.first() {
            for (_, m) in &terms {
                if m.dims() != first.dims() || m.field() != first.field() {
                    return Err(MatrixError::DimensionMismatch(
                        "coefficient blocks differ in shape or field".into(),
                    )
                    .into());
                }
            }
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[(u32, FieldMatrix)] {
        &self.terms
    }

    pub fn exponents(&self) -> ExponentSet {
        ExponentSet(self.terms.iter().map(|(e, _)| *e).collect())
    }

    /// Block multiplying `x^e`, if any.
    pub fn coefficient(&self, e: u32) -> Option<&FieldMatrix> {
        self.terms.iter().find(|(x, _)| *x == e).map(|(_, m)| m)
    }

    /// `sum_terms block * x^exponent`.
    pub fn eval(&self, x: FieldElement) -> Result<FieldMatrix, PolyError> {
        let (_, first) = self.terms.first().ok_or(PolyError::NoPoints)?;
        let mut acc = FieldMatrix::zeros(first.field(), first.rows(), first.cols());
        for (e, block) in &self.terms {
            acc.add_scaled_assign(x.pow(*e as u64), block)?;
        }
        Ok(acc)
    }
}

/// Evaluates a sparse matrix polynomial at `x`.
pub fn eval_sparse(poly: &SparsePoly, x: FieldElement) -> Result<FieldMatrix, PolyError> {
    poly.eval(x)
}
