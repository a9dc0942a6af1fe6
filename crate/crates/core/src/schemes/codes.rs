use super::SchemeError;
use crate::field::{FieldElement, PrimeField, SeededPrg};
use crate::matgrid::{BlockList, FieldMatrix, PartitionKind};
use crate::par::Exec;
use crate::polycode::{coeff_weights, decode_rows, ExponentSet, SparsePoly};

/// Support of `h = f * g` for the 2x2 GASP code.
pub const GASP_EXPONENTS: [u32; 11] = [0, 1, 2, 3, 4, 5, 6, 8, 9, 10, 11];

/// What the user uploads to one server.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareBundle {
    pub server: usize,
    pub point: FieldElement,
    pub a_tilde: FieldMatrix,
    pub b_tilde: FieldMatrix,
}

/// A server's product `h(a_i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductShare {
    pub server: usize,
    pub h: FieldMatrix,
}

impl ShareBundle {
    pub fn compute(&self, exec: Exec) -> Result<ProductShare, SchemeError> {
        Ok(ProductShare {
            server: self.server,
            h: self.a_tilde.matmul_with(&self.b_tilde, exec)?,
        })
    }
}

/// A polynomial code for `A * B` whose decoder is linear in the products.
pub trait LinearCode: Sync + Send {
    fn field(&self) -> PrimeField;
    fn collusion(&self) -> usize;
    fn recovery_threshold(&self) -> usize;
    /// Exponents that may appear in `h = f * g`.
    fn product_exponents(&self) -> ExponentSet;
    /// Number of coefficient blocks of `h` the user needs.
    fn target_count(&self) -> usize;
    /// Shape of one product share.
    fn product_block_dims(&self) -> (usize, usize);
    fn f_poly(&self, a: &FieldMatrix, prg: &mut SeededPrg) -> Result<SparsePoly, SchemeError>;
    fn g_poly(&self, b: &FieldMatrix, prg: &mut SeededPrg) -> Result<SparsePoly, SchemeError>;
    /// `targets x R_c` weights recovering the target coefficients from
    /// products at `points`.
    fn decode_weights(&self, points: &[FieldElement]) -> Result<FieldMatrix, SchemeError>;
    /// Builds `A * B` from the decoded target blocks.
    fn assemble(&self, targets: Vec<FieldMatrix>) -> Result<FieldMatrix, SchemeError>;

    /// Evaluates `f` and `g` at every point. The randomness of `f` is drawn
    /// before that of `g`.
    fn encode(
        &self,
        a: &FieldMatrix,
        b: &FieldMatrix,
        points: &[FieldElement],
        prg: &mut SeededPrg,
        exec: Exec,
    ) -> Result<Vec<ShareBundle>, SchemeError> {
        let f = self.f_poly(a, prg)?;
        let g = self.g_poly(b, prg)?;
        evaluate(&f, &g, points, exec)
    }
}

pub(crate) fn evaluate(
    f: &SparsePoly,
    g: &SparsePoly,
    points: &[FieldElement],
    exec: Exec,
) -> Result<Vec<ShareBundle>, SchemeError> {
    exec.map_range(points.len(), |i| {
        Ok(ShareBundle {
            server: i,
            point: points[i],
            a_tilde: f.eval(points[i])?,
            b_tilde: g.eval(points[i])?,
        })
    })
    .into_iter()
    .collect()
}

fn check_dims(m: &FieldMatrix, rows: usize, cols: usize, what: &str) -> Result<(), SchemeError> {
    if m.dims() != (rows, cols) {
        return Err(SchemeError::DimensionMismatch(format!(
            "{what} is {}x{}, expected {rows}x{cols}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

/// MatDot with `X` random terms:
/// `f = sum_j A_j x^j + sum_t Z_t x^{p+t}`,
/// `g = sum_j B_j x^{p-1-j} + sum_t S_t x^{p+t}`,
/// so that the `x^{p-1}` coefficient of `f * g` is `A * B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatDot {
    field: PrimeField,
    p: usize,
    x: usize,
    t: usize,
    s: usize,
    r: usize,
}

impl MatDot {
    pub fn new(field: PrimeField, p: usize, x: usize, t: usize, s: usize, r: usize) -> Result<Self, SchemeError> {
        if x == 0 {
            return Err(SchemeError::InvalidConfig("X must be at least 1".into()));
        }
        if p == 0 || !s.is_multiple_of(p) {
            return Err(SchemeError::InvalidConfig(format!("p={p} must divide s={s}")));
        }
        Ok(Self { field, p, x, t, s, r })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Shapes of the `Z_t` and `S_t` blocks.
    pub fn randomness_dims(&self) -> ((usize, usize), (usize, usize)) {
        ((self.t, self.s / self.p), (self.s / self.p, self.r))
    }

    /// `f` with explicit randomness blocks `Z_0..Z_{X-1}`.
    pub fn f_poly_with(&self, a: &FieldMatrix, z: &[FieldMatrix]) -> Result<SparsePoly, SchemeError> {
        check_dims(a, self.t, self.s, "A")?;
        let blocks = a.split(PartitionKind::IppColumns, self.p)?.blocks;
        let mut terms: Vec<(u32, FieldMatrix)> =
            blocks.into_iter().enumerate().map(|(j, b)| (j as u32, b)).collect();
        terms.extend(z.iter().enumerate().map(|(t, zt)| ((self.p + t) as u32, zt.clone())));
        Ok(SparsePoly::new(terms)?)
    }

    /// `g` with explicit randomness blocks `S_0..S_{X-1}`.
    pub fn g_poly_with(&self, b: &FieldMatrix, s: &[FieldMatrix]) -> Result<SparsePoly, SchemeError> {
        check_dims(b, self.s, self.r, "B")?;
        let blocks = b.split(PartitionKind::IppRows, self.p)?.blocks;
        let mut terms: Vec<(u32, FieldMatrix)> = blocks
            .into_iter()
            .enumerate()
            .map(|(j, b)| ((self.p - 1 - j) as u32, b))
            .collect();
        terms.extend(s.iter().enumerate().map(|(t, st)| ((self.p + t) as u32, st.clone())));
        Ok(SparsePoly::new(terms)?)
    }
}

impl LinearCode for MatDot {
    fn field(&self) -> PrimeField {
        self.field
    }

    fn collusion(&self) -> usize {
        self.x
    }

    fn recovery_threshold(&self) -> usize {
        2 * self.p + 2 * self.x - 1
    }

    fn product_exponents(&self) -> ExponentSet {
        ExponentSet::consecutive(self.recovery_threshold())
    }

    fn target_count(&self) -> usize {
        1
    }

    fn product_block_dims(&self) -> (usize, usize) {
        (self.t, self.r)
    }

    fn f_poly(&self, a: &FieldMatrix, prg: &mut SeededPrg) -> Result<SparsePoly, SchemeError> {
        let ((zr, zc), _) = self.randomness_dims();
        let z: Vec<FieldMatrix> = (0..self.x)
            .map(|_| FieldMatrix::random(self.field, zr, zc, prg))
            .collect();
        self.f_poly_with(a, &z)
    }

    fn g_poly(&self, b: &FieldMatrix, prg: &mut SeededPrg) -> Result<SparsePoly, SchemeError> {
        let (_, (sr, sc)) = self.randomness_dims();
        let s: Vec<FieldMatrix> = (0..self.x)
            .map(|_| FieldMatrix::random(self.field, sr, sc, prg))
            .collect();
        self.g_poly_with(b, &s)
    }

    fn decode_weights(&self, points: &[FieldElement]) -> Result<FieldMatrix, SchemeError> {
        let rc = self.recovery_threshold();
        if points.len() != rc {
            return Err(SchemeError::DimensionMismatch(format!(
                "{} points for recovery threshold {rc}",
                points.len()
            )));
        }
        let w = coeff_weights(points, self.p - 1)?;
        Ok(FieldMatrix::from_elements(self.field, 1, rc, &w)?)
    }

    fn assemble(&self, mut targets: Vec<FieldMatrix>) -> Result<FieldMatrix, SchemeError> {
        if targets.len() != 1 {
            return Err(SchemeError::DimensionMismatch(format!(
                "{} target blocks, expected 1",
                targets.len()
            )));
        }
        Ok(targets.remove(0))
    }
}

/// The 2x2 outer-product GASP code with `X = 2`:
/// `f = A_0 + A_1 x + Z_0 x^4 + Z_1 x^6`,
/// `g = B_0 + B_1 x^2 + S_0 x^4 + S_1 x^5`.
/// Coefficients 0..3 of `f * g` are `A_0B_0, A_1B_0, A_0B_1, A_1B_1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gasp2x2 {
    field: PrimeField,
    t: usize,
    s: usize,
    r: usize,
}

impl Gasp2x2 {
    pub const RECOVERY_THRESHOLD: usize = 11;
    const F_EXP: [u32; 4] = [0, 1, 4, 6];
    const G_EXP: [u32; 4] = [0, 2, 4, 5];

    pub fn new(field: PrimeField, t: usize, s: usize, r: usize) -> Result<Self, SchemeError> {
        if !t.is_multiple_of(2) || !r.is_multiple_of(2) {
            return Err(SchemeError::InvalidConfig(format!(
                "t={t} and r={r} must be even"
            )));
        }
        Ok(Self { field, t, s, r })
    }

    pub fn f_poly_with(&self, a: &FieldMatrix, z: &[FieldMatrix; 2]) -> Result<SparsePoly, SchemeError> {
        check_dims(a, self.t, self.s, "A")?;
        let ab = a.split(PartitionKind::OppRows, 2)?.blocks;
        let blocks = [&ab[0], &ab[1], &z[0], &z[1]];
        Ok(SparsePoly::new(
            Self::F_EXP.iter().zip(blocks).map(|(&e, b)| (e, b.clone())).collect(),
        )?)
    }

    pub fn g_poly_with(&self, b: &FieldMatrix, s: &[FieldMatrix; 2]) -> Result<SparsePoly, SchemeError> {
        check_dims(b, self.s, self.r, "B")?;
        let bb = b.split(PartitionKind::OppCols, 2)?.blocks;
        let blocks = [&bb[0], &bb[1], &s[0], &s[1]];
        Ok(SparsePoly::new(
            Self::G_EXP.iter().zip(blocks).map(|(&e, b)| (e, b.clone())).collect(),
        )?)
    }
}

impl LinearCode for Gasp2x2 {
    fn field(&self) -> PrimeField {
        self.field
    }

    fn collusion(&self) -> usize {
        2
    }

    fn recovery_threshold(&self) -> usize {
        Self::RECOVERY_THRESHOLD
    }

    fn product_exponents(&self) -> ExponentSet {
        ExponentSet::new(GASP_EXPONENTS.to_vec()).expect("increasing")
    }

    fn target_count(&self) -> usize {
        4
    }

    fn product_block_dims(&self) -> (usize, usize) {
        (self.t / 2, self.r / 2)
    }

    fn f_poly(&self, a: &FieldMatrix, prg: &mut SeededPrg) -> Result<SparsePoly, SchemeError> {
        let z = [
            FieldMatrix::random(self.field, self.t / 2, self.s, prg),
            FieldMatrix::random(self.field, self.t / 2, self.s, prg),
        ];
        self.f_poly_with(a, &z)
    }

    fn g_poly(&self, b: &FieldMatrix, prg: &mut SeededPrg) -> Result<SparsePoly, SchemeError> {
        let s = [
            FieldMatrix::random(self.field, self.s, self.r / 2, prg),
            FieldMatrix::random(self.field, self.s, self.r / 2, prg),
        ];
        self.g_poly_with(b, &s)
    }

    fn decode_weights(&self, points: &[FieldElement]) -> Result<FieldMatrix, SchemeError> {
        Ok(decode_rows(points, &self.product_exponents(), &[0, 1, 2, 3])?)
    }

    fn assemble(&self, targets: Vec<FieldMatrix>) -> Result<FieldMatrix, SchemeError> {
        let [a0b0, a1b0, a0b1, a1b1]: [FieldMatrix; 4] = targets.try_into().map_err(|t: Vec<_>| {
            SchemeError::DimensionMismatch(format!("{} target blocks, expected 4", t.len()))
        })?;
        let grid = BlockList::new(
            vec![a0b0, a0b1, a1b0, a1b1],
            PartitionKind::Grid { rows: 2, cols: 2 },
        );
        Ok(grid.assemble()?)
    }
}

/// Coefficient blocks of `f * g`, indexed by exponent.
#[cfg(test)]
pub(crate) fn product_coefficients(f: &SparsePoly, g: &SparsePoly) -> Result<Vec<FieldMatrix>, SchemeError> {
    let (fe, ge) = (f.terms(), g.terms());
    let (Some((fmax, f0)), Some((gmax, g0))) = (fe.last(), ge.last()) else {
        return Err(SchemeError::DimensionMismatch("empty polynomial".into()));
    };
    let len = (fmax + gmax) as usize + 1;
    let mut out = vec![FieldMatrix::zeros(f0.field(), f0.rows(), g0.cols()); len];
    for (ea, a) in fe {
        for (eb, b) in ge {
            let prod = a.matmul(b)?;
            let slot = &mut out[(ea + eb) as usize];
            slot.add_scaled_assign(f0.field().one(), &prod)?;
        }
    }
    Ok(out)
}
