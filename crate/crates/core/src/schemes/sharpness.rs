//! Two MatDot input pairs that agree on `R_c - 1` product shares yet have
//! different products, so no decoder can work from fewer than `R_c` servers.
//!
//! With `P1` vanishing on the first `p+X-1` points and `P2` on the rest,
//! `f = P1 * F` and `g' = g + P2 * D` are both valid encodings (every
//! coefficient of degree below `p+X` is free). Then `f g' - f g = P1 P2 F D`
//! vanishes on all `R_c - 1` points while the `x^{p-1}` coefficient moves by
//! `[x^{p-1}](P1 P2) * F D`.

use super::codes::MatDot;
use super::SchemeError;
use crate::field::{FieldElement, PrimeField, SeededPrg};
use crate::matgrid::{BlockList, FieldMatrix, PartitionKind};
use crate::polycode::DensePoly;

const POINT_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone)]
pub struct SharpnessWitness {
    pub p: usize,
    pub x: usize,
    /// The `R_c - 1` responding servers' points.
    pub points: Vec<FieldElement>,
    pub a: FieldMatrix,
    pub z: Vec<FieldMatrix>,
    pub b_first: FieldMatrix,
    pub s_first: Vec<FieldMatrix>,
    pub b_second: FieldMatrix,
    pub s_second: Vec<FieldMatrix>,
}

impl SharpnessWitness {
    fn code(&self) -> Result<MatDot, SchemeError> {
        let (t, s) = self.a.dims();
        MatDot::new(self.a.field(), self.p, self.x, t, s, self.b_first.cols())
    }

    /// Product shares `h(a_i)` of both runs.
    pub fn shares(&self) -> Result<(Vec<FieldMatrix>, Vec<FieldMatrix>), SchemeError> {
        let code = self.code()?;
        let f = code.f_poly_with(&self.a, &self.z)?;
        let g1 = code.g_poly_with(&self.b_first, &self.s_first)?;
        let g2 = code.g_poly_with(&self.b_second, &self.s_second)?;
        let mut first = Vec::with_capacity(self.points.len());
        let mut second = Vec::with_capacity(self.points.len());
        for &pt in &self.points {
            let fa = f.eval(pt)?;
            first.push(fa.matmul(&g1.eval(pt)?)?);
            second.push(fa.matmul(&g2.eval(pt)?)?);
        }
        Ok((first, second))
    }

    pub fn products(&self) -> Result<(FieldMatrix, FieldMatrix), SchemeError> {
        Ok((self.a.matmul(&self.b_first)?, self.a.matmul(&self.b_second)?))
    }

    /// True when there are exactly `R_c - 1` distinct points, the shares
    /// agree at every one of them, and the products differ.
    pub fn validate(&self) -> Result<bool, SchemeError> {
        let rc = 2 * self.p + 2 * self.x - 1;
        let mut distinct: Vec<u64> = self.points.iter().map(|a| a.value()).collect();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() != rc - 1 {
            return Ok(false);
        }
        let (first, second) = self.shares()?;
        let (pa, pb) = self.products()?;
        Ok(first == second && pa != pb)
    }
}

fn distinct_nonzero(field: PrimeField, count: usize, prg: &mut SeededPrg) -> Vec<FieldElement> {
    let mut out: Vec<FieldElement> = Vec::with_capacity(count);
    while out.len() < count {
        let v = prg.sample_uniform(field);
        if !v.is_zero() && !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// Builds a witness for `A` of shape `t x s` and `B` of shape `s x r`.
pub fn matdot_sharpness_witness(
    field: PrimeField,
    p: usize,
    x: usize,
    (t, s, r): (usize, usize, usize),
    prg: &mut SeededPrg,
) -> Result<SharpnessWitness, SchemeError> {
    let code = MatDot::new(field, p, x, t, s, r)?;
    let half = p + x - 1;
    let need = 2 * half;
    if field.modulus() <= need as u64 {
        return Err(SchemeError::FieldTooSmall {
            q: field.modulus(),
            n: need,
        });
    }
    let mut chosen = None;
    for attempt in 0..POINT_ATTEMPTS {
        let pts = if attempt == 0 {
            (1..=need as u64).map(|v| field.elem(v)).collect()
        } else {
            distinct_nonzero(field, need, prg)
        };
        if !DensePoly::from_roots(field, &pts).coeff(p - 1).is_zero() {
            chosen = Some(pts);
            break;
        }
    }
    let points = chosen.ok_or(SchemeError::InvalidConfig(
        "no point set with a nonzero target coefficient".into(),
    ))?;
    let p1 = DensePoly::from_roots(field, &points[..half]);
    let p2 = DensePoly::from_roots(field, &points[half..]);

    let ((fr, fc), (dr, dc)) = code.randomness_dims();
    let (f0, d0) = loop {
        let f0 = FieldMatrix::random(field, fr, fc, prg);
        let d0 = FieldMatrix::random(field, dr, dc, prg);
        if !f0.matmul(&d0)?.is_zero() {
            break (f0, d0);
        }
    };

    // f has coefficients x^0..x^{p+X-1}: A blocks first, then Z.
    let f_coeffs: Vec<FieldMatrix> = (0..p + x).map(|k| f0.scale(p1.coeff(k))).collect();
    let a = BlockList::new(f_coeffs[..p].to_vec(), PartitionKind::IppColumns).assemble()?;
    let z = f_coeffs[p..].to_vec();

    let b_first = FieldMatrix::random(field, s, r, prg);
    let s_first: Vec<FieldMatrix> = (0..x).map(|_| FieldMatrix::random(field, dr, dc, prg)).collect();
    let b_blocks = b_first.split(PartitionKind::IppRows, p)?.blocks;
    // B_j sits at x^{p-1-j}.
    let b_second_blocks = b_blocks
        .iter()
        .enumerate()
        .map(|(j, bj)| bj.add(&d0.scale(p2.coeff(p - 1 - j))))
        .collect::<Result<Vec<_>, _>>()?;
    let b_second = BlockList::new(b_second_blocks, PartitionKind::IppRows).assemble()?;
    let s_second = s_first
        .iter()
        .enumerate()
        .map(|(k, st)| st.add(&d0.scale(p2.coeff(p + k))))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(SharpnessWitness {
        p,
        x,
        points,
        a,
        z,
        b_first,
        s_first,
        b_second,
        s_second,
    })
}
