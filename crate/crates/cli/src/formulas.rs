//! Closed-form communication costs of the compared SDMM schemes.
//!
//! Every scheme has a recovery threshold, a total upload over `N` servers
//! and a product size per server. The aggregation strategy then fixes the
//! download and cooperation costs: directly `R_c` products, cooperatively
//! `ceil(R_c / X) * t * r`, or through an encrypting hub `t * r`.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

pub type Q = Ratio<u128>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ChangTandon,
    Kakar,
    /// Lower bound on the GASP threshold for general `m, n`.
    GaspBound,
    /// The 2x2 GASP code with `X = 2` and exponent gap at 7.
    #[serde(rename = "gasp-2x2")]
    Gasp2x2,
    /// Piecewise SGPD threshold for general `m, n, p`.
    Sgpd,
    SgpdOpp,
    SgpdIpp,
    /// Secure entangled polynomial code, inner product partitioning only.
    EntangledIpp,
    Mital,
    #[serde(rename = "matdot")]
    MatDot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    Direct,
    Cooperative,
    Encrypted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SchemeFormula {
    pub scheme: Scheme,
    pub aggregation: Aggregation,
}

impl SchemeFormula {
    pub const fn new(scheme: Scheme, aggregation: Aggregation) -> Self {
        Self { scheme, aggregation }
    }

    pub fn name(&self) -> String {
        match self.aggregation {
            Aggregation::Direct => self.scheme.to_string(),
            Aggregation::Cooperative => format!("{}-coop", self.scheme),
            Aggregation::Encrypted => format!("{}-enc", self.scheme),
        }
    }
}

/// `A` is `t x s`, `B` is `s x r`; `A` is cut into `m` row blocks, `B` into
/// `n` column blocks and both into `p` blocks along `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Params {
    pub t: u64,
    pub s: u64,
    pub r: u64,
    pub m: u64,
    pub n: u64,
    pub p: u64,
    #[serde(rename = "X")]
    pub x: u64,
    #[serde(rename = "N")]
    pub servers: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostEval {
    pub upload: Q,
    pub download: Q,
    pub cooperation: Q,
    pub rc: u64,
    /// `rc` is a lower bound, not an achieved threshold.
    pub bound: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormulaError(pub String);

impl fmt::Display for FormulaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid parameters: {}", self.0)
    }
}

impl std::error::Error for FormulaError {}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Scheme::ChangTandon => "chang-tandon",
            Scheme::Kakar => "kakar",
            Scheme::GaspBound => "gasp-bound",
            Scheme::Gasp2x2 => "gasp-2x2",
            Scheme::Sgpd => "sgpd",
            Scheme::SgpdOpp => "sgpd-opp",
            Scheme::SgpdIpp => "sgpd-ipp",
            Scheme::EntangledIpp => "entangled-ipp",
            Scheme::Mital => "mital",
            Scheme::MatDot => "matdot",
        };
        f.write_str(s)
    }
}

impl FromStr for Scheme {
    type Err = FormulaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| FormulaError(format!("unknown scheme {s:?}")))
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), FormulaError> {
    if cond {
        Ok(())
    } else {
        Err(FormulaError(msg()))
    }
}

fn divides(d: u64, v: u64, what: &str) -> Result<(), FormulaError> {
    check(d > 0 && v.is_multiple_of(d), || format!("{what}: {d} does not divide {v}"))
}

fn q(v: u64) -> Q {
    Q::from_integer(v as u128)
}

/// How the scheme cuts the inputs.
enum Cut {
    /// Along `s` into `p` pieces; one product of size `t r`.
    Inner,
    /// Rows of `A` into `m`, columns of `B` into `n`; `mn` products.
    Outer { m: u64, n: u64 },
    /// Both.
    General,
}

impl Scheme {
    fn cut(self, p: &Params) -> Cut {
        match self {
            Scheme::SgpdIpp | Scheme::EntangledIpp | Scheme::Mital | Scheme::MatDot => Cut::Inner,
            Scheme::ChangTandon => Cut::Outer { m: p.m, n: p.m },
            Scheme::Gasp2x2 => Cut::Outer { m: 2, n: 2 },
            Scheme::Kakar | Scheme::GaspBound | Scheme::SgpdOpp => Cut::Outer { m: p.m, n: p.n },
            Scheme::Sgpd => Cut::General,
        }
    }

    /// Recovery threshold and whether it is only a bound.
    pub fn recovery_threshold(self, p: &Params) -> Result<(u64, bool), FormulaError> {
        let (m, n, pp, x) = (p.m, p.n, p.p, p.x);
        Ok(match self {
            Scheme::ChangTandon => ((m + x) * (m + x), false),
            Scheme::Kakar => ((m + x) * (n + 1) - 1, false),
            Scheme::GaspBound => (m * n + m.max(n) + 2 * x - 1, true),
            Scheme::Gasp2x2 => {
                check(x == 2, || "the 2x2 GASP code needs X = 2".into())?;
                (11, false)
            }
            Scheme::Sgpd => {
                let tail = if pp < m {
                    pp * n * x.div_ceil(pp)
                } else {
                    (m * n - m) * x.div_ceil(m.min(n))
                };
                (pp * m * n + pp * m + tail + 2 * x - 1, false)
            }
            Scheme::SgpdOpp => (m * n + m + n * x + 2 * x - 1, false),
            Scheme::SgpdIpp | Scheme::EntangledIpp | Scheme::MatDot => (2 * pp + 2 * x - 1, false),
            Scheme::Mital => (pp + 2 * x, false),
        })
    }
}

/// Exact costs of one scheme under one aggregation strategy.
pub fn cost_eval(formula: SchemeFormula, p: &Params) -> Result<CostEval, FormulaError> {
    check(
        [p.t, p.s, p.r, p.m, p.n, p.p, p.x, p.servers].iter().all(|&v| v > 0),
        || "all parameters must be positive".into(),
    )?;
    let (rc, bound) = formula.scheme.recovery_threshold(p)?;
    if formula.scheme == Scheme::Mital {
        check(p.servers == rc, || format!("this code needs N = R_c = {rc}"))?;
    } else {
        check(p.servers >= rc, || format!("N = {} is below R_c = {rc}", p.servers))?;
    }
    let (t, s, r, nn) = (q(p.t), q(p.s), q(p.r), q(p.servers));
    // Upload per server, number of products and size of one product.
    let (per_server, k, h) = match formula.scheme.cut(p) {
        Cut::Inner => {
            divides(p.p, p.s, "p | s")?;
            let pp = q(p.p);
            (t * s / pp + s * r / pp, 1, t * r)
        }
        Cut::Outer { m, n } => {
            divides(m, p.t, "m | t")?;
            divides(n, p.r, "n | r")?;
            (t * s / q(m) + s * r / q(n), m * n, t * r / q(m * n))
        }
        Cut::General => {
            divides(p.m, p.t, "m | t")?;
            divides(p.n, p.r, "n | r")?;
            divides(p.p, p.s, "p | s")?;
            let pp = q(p.p);
            (
                t * s / (q(p.m) * pp) + s * r / (pp * q(p.n)),
                p.m * p.n,
                t * r / q(p.m * p.n),
            )
        }
    };
    let (kq, rcq) = (q(k), q(rc));
    let (download, cooperation) = match formula.aggregation {
        Aggregation::Direct => (rcq * h, Q::from_integer(0)),
        Aggregation::Cooperative => {
            let groups = q(rc.div_ceil(p.x));
            (groups * kq * h, (rcq - groups) * kq * h)
        }
        Aggregation::Encrypted => (kq * h, (rcq - q(1)) * h),
    };
    Ok(CostEval {
        upload: nn * per_server,
        download,
        cooperation,
        rc,
        bound,
    })
}

/// Parameters with `t = s = r = side` and `N = R_c` of the given scheme.
pub fn square_at_threshold(scheme: Scheme, side: u64, m: u64, p: u64, x: u64) -> Result<Params, FormulaError> {
    let mut params = Params {
        t: side,
        s: side,
        r: side,
        m,
        n: m,
        p,
        x,
        servers: 1,
    };
    params.servers = scheme.recovery_threshold(&params)?.0;
    Ok(params)
}
