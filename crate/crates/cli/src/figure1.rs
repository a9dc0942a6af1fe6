//! Normalized communication cost (upload plus download over `s^2`) against
//! `X`, with `t = r = s`, `n = m`, `p = m^2` and `N = R_c` for every scheme.

use num_rational::Ratio;

use crate::formulas::{cost_eval, square_at_threshold, Aggregation, FormulaError, Scheme, SchemeFormula, Q};

/// Column order of the emitted CSV.
pub const COLUMNS: [(&str, SchemeFormula); 9] = [
    ("matdot_coop", SchemeFormula::new(Scheme::MatDot, Aggregation::Cooperative)),
    ("matdot_enc", SchemeFormula::new(Scheme::MatDot, Aggregation::Encrypted)),
    ("mital_coop", SchemeFormula::new(Scheme::Mital, Aggregation::Cooperative)),
    ("sgpd_ipp", SchemeFormula::new(Scheme::SgpdIpp, Aggregation::Direct)),
    ("entangled_ipp", SchemeFormula::new(Scheme::EntangledIpp, Aggregation::Direct)),
    ("gasp_bound", SchemeFormula::new(Scheme::GaspBound, Aggregation::Direct)),
    ("kakar", SchemeFormula::new(Scheme::Kakar, Aggregation::Direct)),
    ("chang_tandon", SchemeFormula::new(Scheme::ChangTandon, Aggregation::Direct)),
    ("sgpd_opp", SchemeFormula::new(Scheme::SgpdOpp, Aggregation::Direct)),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Figure1Row {
    pub x: u64,
    /// In [`COLUMNS`] order.
    pub values: Vec<Q>,
}

impl Figure1Row {
    pub fn column(&self, name: &str) -> Option<Q> {
        COLUMNS.iter().position(|(c, _)| *c == name).map(|i| self.values[i])
    }
}

/// One normalized value through [`cost_eval`].
pub fn normalized(formula: SchemeFormula, m: u64, x: u64) -> Result<Q, FormulaError> {
    let side = m * m;
    let params = square_at_threshold(formula.scheme, side, m, m * m, x)?;
    let c = cost_eval(formula, &params)?;
    let area = (side as u128) * (side as u128);
    Ok((c.upload + c.download) / Ratio::from_integer(area))
}

pub fn figure1_rows(m: u64, xs: impl IntoIterator<Item = u64>) -> Result<Vec<Figure1Row>, FormulaError> {
    xs.into_iter()
        .map(|x| {
            let values = COLUMNS
                .iter()
                .map(|(_, f)| normalized(*f, m, x))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Figure1Row { x, values })
        })
        .collect()
}

/// Exact decimal with six fractional digits, rounded half up.
pub fn fmt6(v: Q) -> String {
    let scale = 1_000_000u128;
    let scaled = (v.numer() * scale * 2 + v.denom()) / (v.denom() * 2);
    format!("{}.{:06}", scaled / scale, scaled % scale)
}

pub fn header() -> String {
    let mut h = vec!["X"];
    h.extend(COLUMNS.iter().map(|(c, _)| *c));
    h.join(",")
}

pub fn figure1_csv(m: u64, xmax: u64) -> Result<String, FormulaError> {
    if m == 0 {
        return Err(FormulaError("m must be positive".into()));
    }
    let mut out = header();
    out.push('\n');
    for row in figure1_rows(m, 1..=xmax)? {
        out.push_str(&row.x.to_string());
        for v in &row.values {
            out.push(',');
            out.push_str(&fmt6(*v));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Smallest `X` in the rows from which `matdot_coop < gasp_bound` holds for
/// every later row.
pub fn crossover(rows: &[Figure1Row]) -> Option<u64> {
    let below: Vec<bool> = rows
        .iter()
        .map(|r| r.column("matdot_coop") < r.column("gasp_bound"))
        .collect();
    let last_above = below.iter().rposition(|b| !b);
    match last_above {
        None => rows.first().map(|r| r.x),
        Some(i) if i + 1 < rows.len() => Some(rows[i + 1].x),
        Some(_) => None,
    }
}
