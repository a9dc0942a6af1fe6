//! Secure coded storage, Shamir sharing, linear recovery and cooperative
//! (component-wise) recovery, plus an exhaustive secrecy audit.
//!
//! A plan stores `rho` message symbols with generator `G` (`K x N`): the
//! share vector is `(m, s) * G` with `s` uniform in `F_q^{K - rho}`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::combin::{binomial, checked_pow, k_subsets};
use crate::field::{FieldElement, PrimeField, SeededPrg};
use crate::matgrid::{FieldMatrix, MatrixError};
use crate::par::Exec;
use crate::polycode::{self, PolyError};

/// Refuse audits that would enumerate more rows than this.
pub const AUDIT_BUDGET: u128 = 10_000_000;

const EXHAUSTIVE_SUBSET_LIMIT: u128 = 20_000;
const SAMPLED_SUBSETS: usize = 2_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShareError {
    #[error("expected {expected} symbols, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("need {need} shares with independent columns, have {have}")]
    InsufficientShares { have: usize, need: usize },
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("columns {subset:?} of the randomness rows are rank deficient")]
    SecurityCondition { subset: Vec<usize> },
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("audit needs {rows} rows, budget is {budget}")]
    BudgetExceeded { rows: u128, budget: u128 },
    #[error("server index {0} out of range")]
    IndexOutOfRange(usize),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// `(G, rho, X)` with `N = G.cols()` and `K = G.rows()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoragePlan {
    g: FieldMatrix,
    rho: usize,
    x: usize,
}

impl StoragePlan {
    /// Builds a plan and checks that every `X` columns of the randomness rows
    /// are independent. The check is exhaustive up to 20000 subsets and
    /// sampled beyond that.
    pub fn new(g: FieldMatrix, rho: usize, x: usize) -> Result<Self, ShareError> {
        let plan = Self::unverified(g, rho, x)?;
        if let Some(subset) = plan.rank_condition_violation(x) {
            return Err(ShareError::SecurityCondition { subset });
        }
        Ok(plan)
    }

    /// Builds a plan without the security check. Shape constraints still
    /// apply.
    pub fn unverified(g: FieldMatrix, rho: usize, x: usize) -> Result<Self, ShareError> {
        let (k, n) = g.dims();
        if rho > k || k > n {
            return Err(ShareError::InvalidPlan(format!(
                "need rho <= K <= N, got rho={rho} K={k} N={n}"
            )));
        }
        if x > n {
            return Err(ShareError::InvalidPlan(format!("X={x} exceeds N={n}")));
        }
        Ok(Self { g, rho, x })
    }

    pub fn generator(&self) -> &FieldMatrix {
        &self.g
    }

    pub fn field(&self) -> PrimeField {
        self.g.field()
    }

    pub fn rho(&self) -> usize {
        self.rho
    }

    pub fn x(&self) -> usize {
        self.x
    }

    pub fn n(&self) -> usize {
        self.g.cols()
    }

    pub fn k(&self) -> usize {
        self.g.rows()
    }

    /// Lowest `K - rho` rows of `G`.
    pub fn randomness_rows(&self) -> FieldMatrix {
        self.g.row_range(self.rho, self.k())
    }

    /// Column `j` of `G`.
    pub fn column(&self, j: usize) -> Vec<FieldElement> {
        self.g.column(j)
    }

    fn rank_condition_violation(&self, x: usize) -> Option<Vec<usize>> {
        if x == 0 {
            return None;
        }
        let r = self.randomness_rows();
        let n = self.n();
        let bad = |s: &Vec<usize>| r.select_columns(s).rank() < x;
        if binomial(n, x) <= EXHAUSTIVE_SUBSET_LIMIT {
            k_subsets(n, x).into_iter().find(bad)
        } else {
            let mut prg = SeededPrg::with_stream(0x5eed, 1);
            (0..SAMPLED_SUBSETS)
                .map(|_| {
                    let mut idx: Vec<usize> = (0..n).collect();
                    for i in 0..x {
                        let j = i + prg.below(n - i);
                        idx.swap(i, j);
                    }
                    let mut s = idx[..x].to_vec();
                    s.sort_unstable();
                    s
                })
                .find(bad)
        }
    }

    /// Whether every `x` columns of the randomness rows are independent.
    pub fn rank_condition(&self, x: usize) -> bool {
        self.rank_condition_violation(x).is_none()
    }
}

/// One share per server.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareVector {
    pub y: Vec<FieldElement>,
}

impl ShareVector {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// `(index, share)` pairs for the given servers.
    pub fn select(&self, idx: &[usize]) -> Vec<(usize, FieldElement)> {
        idx.iter().map(|&i| (i, self.y[i])).collect()
    }
}

/// Disjoint server sets covering `0..N`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentPartition {
    components: Vec<Vec<usize>>,
}

impl ComponentPartition {
    pub fn new(n: usize, components: Vec<Vec<usize>>) -> Result<Self, ShareError> {
        let mut seen = vec![false; n];
        for c in &components {
            if c.is_empty() {
                return Err(ShareError::InvalidPartition("empty component".into()));
            }
            for &v in c {
                if v >= n {
                    return Err(ShareError::IndexOutOfRange(v));
                }
                if std::mem::replace(&mut seen[v], true) {
                    return Err(ShareError::InvalidPartition(format!(
                        "server {v} appears twice"
                    )));
                }
            }
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(ShareError::InvalidPartition(format!("server {v} missing")));
        }
        Ok(Self { components })
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            components: (0..n).map(|i| vec![i]).collect(),
        }
    }

    pub fn whole(n: usize) -> Self {
        Self {
            components: vec![(0..n).collect()],
        }
    }

    /// Every set partition of `0..n`.
    pub fn all(n: usize) -> Vec<Self> {
        crate::combin::set_partitions(n)
            .into_iter()
            .map(|components| Self { components })
            .collect()
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

/// Shamir `[N, K]` threshold sharing of one symbol: rows of `G` are
/// `x^{K-1}, ..., x, 1` and the secret multiplies the top row.
pub fn shamir_plan(points: &[FieldElement], k: usize) -> Result<StoragePlan, ShareError> {
    if k == 0 {
        return Err(ShareError::InvalidPlan("K must be positive".into()));
    }
    let rs = polycode::rs_generator(points, k)?;
    let order: Vec<usize> = (0..k).rev().collect();
    StoragePlan::new(rs.select_rows(&order), 1, k - 1)
}

/// `(m, s) * G` for explicit randomness `s`.
pub fn share_with(
    plan: &StoragePlan,
    m: &[FieldElement],
    s: &[FieldElement],
) -> Result<ShareVector, ShareError> {
    if m.len() != plan.rho {
        return Err(ShareError::LengthMismatch {
            expected: plan.rho,
            got: m.len(),
        });
    }
    if s.len() != plan.k() - plan.rho {
        return Err(ShareError::LengthMismatch {
            expected: plan.k() - plan.rho,
            got: s.len(),
        });
    }
    let v: Vec<FieldElement> = m.iter().chain(s).copied().collect();
    let row = FieldMatrix::from_elements(plan.field(), 1, v.len(), &v)?;
    Ok(ShareVector {
        y: row.matmul(&plan.g)?.row(0),
    })
}

/// `(m, s) * G` with `s` drawn from `prg`.
pub fn share(
    plan: &StoragePlan,
    m: &[FieldElement],
    prg: &mut SeededPrg,
) -> Result<ShareVector, ShareError> {
    let s = prg.sample_vec(plan.field(), plan.k() - plan.rho);
    share_with(plan, m, &s)
}

/// First `K` of `candidates` (in order) whose columns are independent.
fn independent_columns(plan: &StoragePlan, candidates: &[usize]) -> Result<Vec<usize>, ShareError> {
    let k = plan.k();
    if candidates.len() < k {
        return Err(ShareError::InsufficientShares {
            have: candidates.len(),
            need: k,
        });
    }
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    for &c in candidates {
        if c >= plan.n() {
            return Err(ShareError::IndexOutOfRange(c));
        }
        let mut trial = chosen.clone();
        trial.push(c);
        if plan.g.select_columns(&trial).rank() == trial.len() {
            chosen = trial;
            if chosen.len() == k {
                return Ok(chosen);
            }
        }
    }
    Err(MatrixError::Singular.into())
}

/// Linear recovery coefficients: entry `[i][j]` multiplies the share of
/// server `j` in the combination that yields `m_i`. Only servers in
/// `available` get nonzero weight.
pub fn recovery_coefficients(
    plan: &StoragePlan,
    available: &[usize],
) -> Result<Vec<Vec<FieldElement>>, ShareError> {
    let cols = independent_columns(plan, available)?;
    let inv = plan.g.select_columns(&cols).invert()?;
    let f = plan.field();
    Ok((0..plan.rho)
        .map(|i| {
            let mut alpha = vec![f.zero(); plan.n()];
            for (pos, &j) in cols.iter().enumerate() {
                alpha[j] = inv.get(pos, i);
            }
            alpha
        })
        .collect())
}

/// Recovers the message from `(server, share)` pairs.
pub fn recover(
    plan: &StoragePlan,
    shares: &[(usize, FieldElement)],
) -> Result<Vec<FieldElement>, ShareError> {
    let idx: Vec<usize> = shares.iter().map(|(i, _)| *i).collect();
    let alpha = recovery_coefficients(plan, &idx)?;
    let f = plan.field();
    Ok(alpha
        .iter()
        .map(|a| shares.iter().fold(f.zero(), |acc, &(j, y)| acc + a[j] * y))
        .collect())
}

/// Result of component-wise cooperative recovery.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoopRecovery {
    /// One aggregated response per component.
    pub responses: Vec<FieldElement>,
    /// Sum of the responses.
    pub message: FieldElement,
    /// Symbols downloaded by the user.
    pub download: usize,
}

/// Each component sends `r_c = sum_{i in V_c} alpha_i y_i`; the user adds
/// the responses. `alpha` must be a recovery combination over all servers.
pub fn coop_recover(
    plan: &StoragePlan,
    y: &ShareVector,
    partition: &ComponentPartition,
    alpha: &[FieldElement],
) -> Result<CoopRecovery, ShareError> {
    let n = plan.n();
    for got in [y.len(), alpha.len()] {
        if got != n {
            return Err(ShareError::LengthMismatch { expected: n, got });
        }
    }
    let f = plan.field();
    let responses: Vec<FieldElement> = partition
        .components
        .iter()
        .map(|c| c.iter().fold(f.zero(), |acc, &i| acc + alpha[i] * y.y[i]))
        .collect();
    let message = responses.iter().fold(f.zero(), |a, &r| a + r);
    Ok(CoopRecovery {
        download: responses.len(),
        responses,
        message,
    })
}

/// Outcome of [`coop_partition_recover`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionRecovery {
    Recovered(FieldElement),
    Unrecoverable,
}

/// `K x gamma` matrix of compressed columns `sum_{j in V_c} alpha_j g^j`.
pub fn compressed_columns(
    plan: &StoragePlan,
    partition: &ComponentPartition,
    alpha: &[FieldElement],
) -> FieldMatrix {
    let f = plan.field();
    let comps = &partition.components;
    FieldMatrix::from_fn(f, plan.k(), comps.len(), |row, c| {
        comps[c]
            .iter()
            .fold(f.zero(), |acc, &j| acc + alpha[j] * plan.g.get(row, j))
    })
}

/// Recovers `m_i` from per-component aggregates when `e_i` lies in the span
/// of the compressed columns.
pub fn coop_partition_recover(
    plan: &StoragePlan,
    y: &ShareVector,
    partition: &ComponentPartition,
    alpha: &[FieldElement],
    i: usize,
) -> Result<PartitionRecovery, ShareError> {
    if i >= plan.rho {
        return Err(ShareError::IndexOutOfRange(i));
    }
    let resp = coop_recover(plan, y, partition, alpha)?.responses;
    let c = compressed_columns(plan, partition, alpha);
    let f = plan.field();
    let mut e = vec![f.zero(); plan.k()];
    e[i] = f.one();
    Ok(match c.solve(&e)? {
        Some(lambda) => PartitionRecovery::Recovered(
            lambda
                .iter()
                .zip(&resp)
                .fold(f.zero(), |acc, (&l, &r)| acc + l * r),
        ),
        None => PartitionRecovery::Unrecoverable,
    })
}

/// Message indices whose unit vector lies in the span of the compressed
/// columns.
pub fn recoverable_indices(
    plan: &StoragePlan,
    partition: &ComponentPartition,
    alpha: &[FieldElement],
) -> Vec<usize> {
    let c = compressed_columns(plan, partition, alpha);
    let f = plan.field();
    (0..plan.rho)
        .filter(|&i| {
            let mut e = vec![f.zero(); plan.k()];
            e[i] = f.one();
            matches!(c.solve(&e), Ok(Some(_)))
        })
        .collect()
}

/// Random search for per-server coefficients that make the most message
/// symbols recoverable. Returns the best alphas seen within `budget` draws
/// and the indices they recover. This is a heuristic, not an optimizer.
pub fn search_alphas(
    plan: &StoragePlan,
    partition: &ComponentPartition,
    prg: &mut SeededPrg,
    budget: usize,
) -> (Vec<FieldElement>, Vec<usize>) {
    let f = plan.field();
    let mut best = (vec![f.zero(); plan.n()], Vec::new());
    for _ in 0..budget {
        let alpha = prg.sample_vec(f, plan.n());
        let rec = recoverable_indices(plan, partition, &alpha);
        if rec.len() > best.1.len() {
            best = (alpha, rec);
            if best.1.len() == plan.rho {
                break;
            }
        }
    }
    best
}

/// Secrecy audit verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditVerdict {
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failing_subset: Option<Vec<usize>>,
    pub rank_check: bool,
    /// Whether the enumeration verdict and the rank check agree.
    pub agree: bool,
    pub enumeration_rows: u128,
}

/// Exhaustive check that any `x` servers see the same share distribution for
/// every message.
///
/// The view of a subset `T` is `m * G_top[T] + s * G_rand[T]`. Since the map is
/// linear it suffices to compare message `0` against each unit message: the
/// multiset for `m` is a translate of the one for `0`, and equal translates
/// for all unit messages imply equality for all of their combinations.
pub fn secrecy_audit(plan: &StoragePlan, x: usize) -> Result<AuditVerdict, ShareError> {
    secrecy_audit_with(plan, x, Exec::default())
}

pub fn secrecy_audit_with(
    plan: &StoragePlan,
    x: usize,
    exec: Exec,
) -> Result<AuditVerdict, ShareError> {
    let n = plan.n();
    if x > n {
        return Err(ShareError::InvalidPlan(format!("X={x} exceeds N={n}")));
    }
    let f = plan.field();
    let q = f.modulus();
    let free = plan.k() - plan.rho;
    let subsets = binomial(n, x);
    let rows = checked_pow(q, free)
        .and_then(|r| r.checked_mul(subsets))
        .unwrap_or(u128::MAX);
    if rows > AUDIT_BUDGET {
        return Err(ShareError::BudgetExceeded {
            rows,
            budget: AUDIT_BUDGET,
        });
    }
    let rand = plan.randomness_rows();
    let top = plan.g.row_range(0, plan.rho);
    let subs = k_subsets(n, x);
    let results = exec.map(&subs, |t| {
        let r = rand.select_columns(t);
        let mut base = enumerate_views(&r, free, q);
        base.sort_unstable();
        for i in 0..plan.rho {
            let shift = top.select_columns(t).row(i);
            let mut shifted: Vec<Vec<u64>> = base
                .iter()
                .map(|v| {
                    v.iter()
                        .zip(&shift)
                        .map(|(&a, &b)| (f.elem(a) + b).value())
                        .collect()
                })
                .collect();
            shifted.sort_unstable();
            if shifted != base {
                return false;
            }
        }
        true
    });
    let failing_subset = results
        .iter()
        .position(|ok| !ok)
        .map(|i| subs[i].clone());
    let pass = failing_subset.is_none();
    let rank_check = x <= free && plan.rank_condition(x);
    Ok(AuditVerdict {
        pass,
        failing_subset,
        rank_check,
        agree: pass == rank_check,
        enumeration_rows: rows,
    })
}

/// `s * r` for every `s` in `F_q^free`.
fn enumerate_views(r: &FieldMatrix, free: usize, q: u64) -> Vec<Vec<u64>> {
    let f = r.field();
    let width = r.cols();
    let total = q.pow(free as u32) as usize;
    let mut s = vec![0u64; free];
    let mut out = Vec::with_capacity(total);
    for _ in 0..total {
        let view = (0..width)
            .map(|c| {
                (0..free)
                    .fold(f.zero(), |acc, k| acc + f.elem(s[k]) * r.get(k, c))
                    .value()
            })
            .collect();
        out.push(view);
        for d in s.iter_mut() {
            *d += 1;
            if *d < q {
                break;
            }
            *d = 0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f(q: u64) -> PrimeField {
        PrimeField::new(q).unwrap()
    }

    fn pts(field: PrimeField, v: &[u64]) -> Vec<FieldElement> {
        v.iter().map(|&x| field.elem(x)).collect()
    }

    fn shamir_3_2() -> StoragePlan {
        shamir_plan(&pts(f(5), &[0, 1, 2]), 2).unwrap()
    }

    #[test]
    fn shamir_generator_layout() {
        let plan = shamir_3_2();
        assert_eq!(
            plan.generator(),
            &FieldMatrix::from_rows(f(5), &[vec![0, 1, 2], vec![1, 1, 1]]).unwrap()
        );
        assert_eq!(plan.x(), 1);
        assert_eq!(plan.rho(), 1);
        assert!(matches!(
            shamir_plan(&pts(f(5), &[1, 1, 2]), 2),
            Err(ShareError::Poly(PolyError::DuplicatePoints))
        ));
    }

    #[test]
    fn shamir_roundtrip_from_every_pair() {
        let plan = shamir_3_2();
        let f5 = f(5);
        let mut prg = SeededPrg::new(9);
        let y = share(&plan, &[f5.elem(3)], &mut prg).unwrap();
        let a = recover(&plan, &y.select(&[0, 1])).unwrap();
        let b = recover(&plan, &y.select(&[1, 2])).unwrap();
        let c = recover(&plan, &y.select(&[0, 2])).unwrap();
        assert_eq!(a, vec![f5.elem(3)]);
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(
            recover(&plan, &y.select(&[2])),
            Err(ShareError::InsufficientShares { have: 1, need: 2 })
        );
    }

    #[test]
    fn degenerate_plans() {
        let f7 = f(7);
        let mut prg = SeededPrg::new(1);
        let g = FieldMatrix::from_rows(f7, &[vec![1, 2, 3], vec![0, 1, 4]]).unwrap();
        let plan = StoragePlan::new(g.clone(), 2, 0).unwrap();
        let m = pts(f7, &[5, 6]);
        let y1 = share(&plan, &m, &mut prg).unwrap();
        let y2 = share(&plan, &m, &mut prg).unwrap();
        assert_eq!(y1, y2);
        assert_eq!(recover(&plan, &y1.select(&[0, 1, 2])).unwrap(), m);
        let zero = share_with(&plan, &[f7.zero(); 2], &[]).unwrap();
        assert!(zero.y.iter().all(|v| v.is_zero()));
        assert!(matches!(
            share(&plan, &m[..1], &mut prg),
            Err(ShareError::LengthMismatch { .. })
        ));
        // Dependent columns.
        let g = FieldMatrix::from_rows(f7, &[vec![1, 2, 1], vec![1, 2, 0]]).unwrap();
        let plan = StoragePlan::new(g, 2, 0).unwrap();
        assert_eq!(
            recover(&plan, &[(0, f7.one()), (1, f7.one())]),
            Err(ShareError::Matrix(MatrixError::Singular))
        );
    }

    #[test]
    fn partition_sums_equal_direct_recovery() {
        let f7 = f(7);
        let plan = shamir_plan(&pts(f7, &[1, 2, 3, 4]), 4).unwrap();
        let mut prg = SeededPrg::new(3);
        let secret = f7.elem(6);
        let y = share(&plan, &[secret], &mut prg).unwrap();
        let alpha = recovery_coefficients(&plan, &[0, 1, 2, 3]).unwrap().remove(0);
        let direct = recover(&plan, &y.select(&[0, 1, 2, 3])).unwrap()[0];
        assert_eq!(direct, secret);
        let two = ComponentPartition::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let r = coop_recover(&plan, &y, &two, &alpha).unwrap();
        assert_eq!(r.responses.len(), 2);
        assert_eq!(r.download, 2);
        assert_eq!(r.message, secret);
        let one = coop_recover(&plan, &y, &ComponentPartition::whole(4), &alpha).unwrap();
        assert_eq!(one.download, 1);
        assert_eq!(one.message, secret);
        let single = coop_recover(&plan, &y, &ComponentPartition::singletons(4), &alpha).unwrap();
        assert_eq!(single.download, 4);
        assert_eq!(single.message, secret);
    }

    #[test]
    fn partition_validation() {
        assert!(ComponentPartition::new(3, vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(ComponentPartition::new(3, vec![vec![0, 1]]).is_err());
        assert!(ComponentPartition::new(3, vec![vec![0, 1, 2], vec![]]).is_err());
        assert!(ComponentPartition::new(3, vec![vec![0, 3], vec![1, 2]]).is_err());
        assert_eq!(ComponentPartition::all(4).len(), 15);
    }

    #[test]
    fn span_recovery() {
        let f7 = f(7);
        let mut prg = SeededPrg::new(21);
        // Singletons with standard alphas reduce to plain recovery.
        let plan = shamir_plan(&pts(f7, &[1, 2, 3]), 3).unwrap();
        let y = share(&plan, &[f7.elem(4)], &mut prg).unwrap();
        let alpha = recovery_coefficients(&plan, &[0, 1, 2]).unwrap().remove(0);
        let got =
            coop_partition_recover(&plan, &y, &ComponentPartition::singletons(3), &alpha, 0).unwrap();
        assert_eq!(got, PartitionRecovery::Recovered(f7.elem(4)));
        let zeros = vec![f7.zero(); 3];
        assert_eq!(
            coop_partition_recover(&plan, &y, &ComponentPartition::singletons(3), &zeros, 0).unwrap(),
            PartitionRecovery::Unrecoverable
        );

        // rho = 2 over F_7, two components: look for alphas that expose m_0
        // but not m_1, confirming with a rank oracle.
        let g = polycode::rs_generator(&pts(f7, &[1, 2, 3, 4]), 3).unwrap();
        let plan = StoragePlan::new(g, 2, 1).unwrap();
        let part = ComponentPartition::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let m = pts(f7, &[2, 5]);
        let y = share(&plan, &m, &mut prg).unwrap();
        let mut found = false;
        for _ in 0..500 {
            let alpha = prg.sample_vec(f7, 4);
            let c = compressed_columns(&plan, &part, &alpha);
            let e = |i: usize| {
                let mut v = FieldMatrix::zeros(f7, 3, 1);
                v.set(i, 0, f7.one());
                v
            };
            let in_span = |i: usize| {
                let aug = FieldMatrix::from_fn(f7, 3, 3, |r, col| {
                    if col < 2 { c.get(r, col) } else { e(i).get(r, 0) }
                });
                aug.rank() == c.rank()
            };
            if in_span(0) && !in_span(1) {
                assert_eq!(
                    coop_partition_recover(&plan, &y, &part, &alpha, 0).unwrap(),
                    PartitionRecovery::Recovered(m[0])
                );
                assert_eq!(
                    coop_partition_recover(&plan, &y, &part, &alpha, 1).unwrap(),
                    PartitionRecovery::Unrecoverable
                );
                found = true;
                break;
            }
        }
        assert!(found);
        let (alpha, rec) = search_alphas(&plan, &part, &mut prg, 200);
        assert_eq!(rec, recoverable_indices(&plan, &part, &alpha));
        assert!(!rec.is_empty());
    }

    #[test]
    fn audit_examples() {
        let plan = shamir_3_2();
        let v = secrecy_audit(&plan, 1).unwrap();
        assert!(v.pass && v.rank_check && v.agree);
        assert_eq!(v.enumeration_rows, 15);
        let v = secrecy_audit(&plan, 2).unwrap();
        assert!(!v.pass);
        assert!(v.failing_subset.is_some());

        let f5 = f(5);
        let g = FieldMatrix::from_rows(f5, &[vec![1, 1, 1], vec![1, 0, 2]]).unwrap();
        let plan = StoragePlan::unverified(g.clone(), 1, 1).unwrap();
        let v = secrecy_audit(&plan, 1).unwrap();
        assert!(!v.pass);
        assert_eq!(v.failing_subset, Some(vec![1]));
        assert!(!v.rank_check);
        assert!(matches!(
            StoragePlan::new(g, 1, 1),
            Err(ShareError::SecurityCondition { .. })
        ));

        let json = serde_json::to_value(secrecy_audit(&shamir_3_2(), 1).unwrap()).unwrap();
        assert_eq!(json["pass"], true);
        assert!(json.get("failing_subset").is_none());
    }

    #[test]
    fn audit_budget() {
        let fq = f(10007);
        let points: Vec<_> = (1..=6).map(|v| fq.elem(v)).collect();
        let plan = shamir_plan(&points, 4).unwrap();
        assert!(matches!(
            secrecy_audit(&plan, 2),
            Err(ShareError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn audit_parallel_matches_sequential() {
        let f7 = f(7);
        let plan = shamir_plan(&pts(f7, &[1, 2, 3, 4, 5]), 3).unwrap();
        for x in 0..=4 {
            assert_eq!(
                secrecy_audit_with(&plan, x, Exec::Sequential).unwrap(),
                secrecy_audit_with(&plan, x, Exec::Parallel).unwrap()
            );
        }
    }

    fn random_plan(seed: u64, q: u64, n: usize, k: usize, rho: usize) -> StoragePlan {
        let fq = f(q);
        let mut prg = SeededPrg::new(seed);
        StoragePlan::new(FieldMatrix::random(fq, k, n, &mut prg), rho, 0).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn roundtrip_on_independent_subsets(
            seed: u64,
            q in prop::sample::select(vec![2u64, 3, 5, 7, 11]),
            n in 1usize..=6,
            kk in 1usize..=6,
            rr in 0usize..=6,
        ) {
            let k = kk.min(n);
            let rho = rr.min(k);
            let plan = random_plan(seed, q, n, k, rho);
            let mut prg = SeededPrg::new(seed ^ 1);
            let m = prg.sample_vec(plan.field(), rho);
            let y = share(&plan, &m, &mut prg).unwrap();
            for t in k_subsets(n, k) {
                if plan.generator().select_columns(&t).rank() == k {
                    prop_assert_eq!(recover(&plan, &y.select(&t)).unwrap(), m.clone());
                }
            }
        }

        #[test]
        fn component_sums_match_recover(
            seed: u64,
            q in prop::sample::select(vec![5u64, 7, 11]),
            n in 1usize..=5,
        ) {
            let fq = f(q);
            let mut prg = SeededPrg::new(seed);
            let mut points = Vec::new();
            while points.len() < n {
                let x = prg.sample_uniform(fq);
                if !points.contains(&x) {
                    points.push(x);
                }
            }
            let k = 1 + prg.below(n);
            let plan = shamir_plan(&points, k).unwrap();
            let secret = prg.sample_uniform(fq);
            let y = share(&plan, &[secret], &mut prg).unwrap();
            let all: Vec<usize> = (0..n).collect();
            let alpha = recovery_coefficients(&plan, &all).unwrap().remove(0);
            let direct = recover(&plan, &y.select(&all)).unwrap()[0];
            for part in ComponentPartition::all(n) {
                let r = coop_recover(&plan, &y, &part, &alpha).unwrap();
                prop_assert_eq!(r.message, direct);
                prop_assert_eq!(r.download, part.len());
            }
        }

        #[test]
        fn rank_condition_implies_pass(
            seed: u64,
            q in prop::sample::select(vec![2u64, 3, 5]),
            n in 1usize..=5,
            kk in 1usize..=4,
            rr in 0usize..=3,
            x in 0usize..=3,
        ) {
            let k = kk.min(n);
            let rho = rr.min(k);
            let x = x.min(n);
            let plan = random_plan(seed, q, n, k, rho);
            let v = secrecy_audit(&plan, x).unwrap();
            if v.rank_check {
                prop_assert!(v.pass);
            }
        }

        #[test]
        fn shamir_rank_condition_iff_pass(
            seed: u64,
            q in prop::sample::select(vec![5u64, 7, 11]),
            n in 1usize..=5,
            x in 0usize..=5,
        ) {
            let fq = f(q);
            let mut prg = SeededPrg::new(seed);
            let mut points = Vec::new();
            while points.len() < n {
                let p = prg.sample_uniform(fq);
                if !points.contains(&p) {
                    points.push(p);
                }
            }
            let k = 1 + prg.below(n);
            let plan = shamir_plan(&points, k).unwrap();
            let x = x.min(n);
            let v = secrecy_audit(&plan, x).unwrap();
            prop_assert!(v.agree);
            prop_assert_eq!(v.pass, x < k);
        }
    }
}
