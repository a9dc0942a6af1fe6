//! Upload encoders with scalar blocks, small enough for exhaustive probing.

use super::codes::MatDot;
use super::pir::query_matrix;
use super::SchemeError;
use crate::field::{FieldElement, PrimeField};
use crate::matgrid::FieldMatrix;
use crate::simnet::UploadEncoder;

fn scalars(field: PrimeField, r: &[FieldElement], rows: usize, cols: usize) -> Vec<FieldMatrix> {
    r.chunks(rows * cols)
        .map(|c| FieldMatrix::from_fn(field, rows, cols, |i, j| c[i * cols + j]))
        .collect()
}

fn check_points(points: &[FieldElement], field: PrimeField) -> Result<(), SchemeError> {
    if points.is_empty() || points.iter().any(|a| a.field() != field) {
        return Err(SchemeError::InvalidConfig("points must be nonempty and in the field".into()));
    }
    let mut v: Vec<u64> = points.iter().map(|a| a.value()).collect();
    v.sort_unstable();
    v.dedup();
    if v.len() != points.len() {
        return Err(SchemeError::InvalidConfig("duplicate evaluation points".into()));
    }
    Ok(())
}

/// MatDot upload with `t = r = 1`, `s = p`. Input 0 is `A = 0, B = 0`;
/// input 1 is `A = (1, 2, .., p)`, `B = A^T`. Each server sees
/// `(f(a_i), g(a_i))`, the randomness being `Z_0..Z_{X-1}, S_0..S_{X-1}`.
/// Points are taken as given, so point 0 may be included on purpose.
#[derive(Debug, Clone)]
pub struct MatdotUploadProbe {
    code: MatDot,
    x: usize,
    points: Vec<FieldElement>,
    inputs: [(FieldMatrix, FieldMatrix); 2],
}

impl MatdotUploadProbe {
    pub fn new(field: PrimeField, p: usize, x: usize, points: Vec<FieldElement>) -> Result<Self, SchemeError> {
        check_points(&points, field)?;
        let code = MatDot::new(field, p, x, 1, p, 1)?;
        let a = FieldMatrix::from_fn(field, 1, p, |_, j| field.elem(j as u64 + 1));
        let inputs = [
            (FieldMatrix::zeros(field, 1, p), FieldMatrix::zeros(field, p, 1)),
            (a.clone(), a.transpose()),
        ];
        Ok(Self {
            code,
            x,
            points,
            inputs,
        })
    }

    pub fn points(&self) -> &[FieldElement] {
        &self.points
    }
}

impl UploadEncoder for MatdotUploadProbe {
    fn field(&self) -> PrimeField {
        self.points[0].field()
    }

    fn servers(&self) -> usize {
        self.points.len()
    }

    fn randomness_len(&self) -> usize {
        2 * self.x
    }

    fn upload(&self, which: usize, randomness: &[FieldElement]) -> Vec<Vec<u64>> {
        let field = self.field();
        let (a, b) = &self.inputs[which];
        let z = scalars(field, &randomness[..self.x], 1, 1);
        let s = scalars(field, &randomness[self.x..], 1, 1);
        let f = self.code.f_poly_with(a, &z).expect("probe shapes are fixed");
        let g = self.code.g_poly_with(b, &s).expect("probe shapes are fixed");
        self.points
            .iter()
            .map(|&pt| {
                let mut v = f.eval(pt).expect("shapes agree").values().to_vec();
                v.extend_from_slice(g.eval(pt).expect("shapes agree").values());
                v
            })
            .collect()
    }
}

/// Query upload of the retrieval scheme with `p = 1`, one-row files and `m`
/// files: server `i` sees `f(a_i) = e_k^T + sum_t Z_t a_i^{1+t}`. Input 0
/// asks for file `first`, input 1 for file `second`.
#[derive(Debug, Clone)]
pub struct PirQueryProbe {
    code: MatDot,
    m: usize,
    x: usize,
    points: Vec<FieldElement>,
    queries: [usize; 2],
}

impl PirQueryProbe {
    pub fn new(
        field: PrimeField,
        m: usize,
        x: usize,
        points: Vec<FieldElement>,
        queries: [usize; 2],
    ) -> Result<Self, SchemeError> {
        check_points(&points, field)?;
        if queries.iter().any(|&i| i >= m) {
            return Err(SchemeError::InvalidConfig(format!("query index out of {m} files")));
        }
        Ok(Self {
            code: MatDot::new(field, 1, x, 1, m, 1)?,
            m,
            x,
            points,
            queries,
        })
    }
}

impl UploadEncoder for PirQueryProbe {
    fn field(&self) -> PrimeField {
        self.points[0].field()
    }

    fn servers(&self) -> usize {
        self.points.len()
    }

    fn randomness_len(&self) -> usize {
        self.x * self.m
    }

    fn upload(&self, which: usize, randomness: &[FieldElement]) -> Vec<Vec<u64>> {
        let field = self.field();
        let query = query_matrix(field, self.m, 1, self.queries[which]);
        let z = scalars(field, randomness, 1, self.m);
        let f = self.code.f_poly_with(&query, &z).expect("probe shapes are fixed");
        self.points
            .iter()
            .map(|&pt| f.eval(pt).expect("shapes agree").values().to_vec())
            .collect()
    }
}
