use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::codes::{Gasp2x2, LinearCode};
use super::SchemeError;
use crate::combin::{binomial, k_subsets};
use crate::field::{FieldElement, PrimeField, SeededPrg};
use crate::matgrid::FieldMatrix;
use crate::simnet::{CostLedger, Grouping};
use crate::streamcipher::{key_material_symbols, PrfProfile};

pub const STREAM_POINTS: u64 = 1;
pub const STREAM_RANDOMNESS: u64 = 2;
pub const STREAM_KEYS: u64 = 4;
pub const STREAM_INPUTS: u64 = 5;

const GASP_POINT_ATTEMPTS: usize = 1000;
const GASP_EXHAUSTIVE_SUBSETS: u128 = 2000;
const GASP_SAMPLED_SUBSETS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    MatdotPlain,
    MatdotCoop,
    MatdotEnc,
    GaspPlain,
    GaspCoop,
    GaspEnc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    MatDot,
    Gasp,
}

/// How products travel from servers to the user.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Direct,
    Cooperative,
    Encrypted,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::MatdotPlain,
        Mode::MatdotCoop,
        Mode::MatdotEnc,
        Mode::GaspPlain,
        Mode::GaspCoop,
        Mode::GaspEnc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::MatdotPlain => "matdot-plain",
            Mode::MatdotCoop => "matdot-coop",
            Mode::MatdotEnc => "matdot-enc",
            Mode::GaspPlain => "gasp-plain",
            Mode::GaspCoop => "gasp-coop",
            Mode::GaspEnc => "gasp-enc",
        }
    }

    pub fn family(self) -> Family {
        match self {
            Mode::MatdotPlain | Mode::MatdotCoop | Mode::MatdotEnc => Family::MatDot,
            _ => Family::Gasp,
        }
    }

    pub fn strategy(self) -> Strategy {
        match self {
            Mode::MatdotPlain | Mode::GaspPlain => Strategy::Direct,
            Mode::MatdotCoop | Mode::GaspCoop => Strategy::Cooperative,
            Mode::MatdotEnc | Mode::GaspEnc => Strategy::Encrypted,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = SchemeError;
    fn from_str(s: &str) -> Result<Self, SchemeError> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| SchemeError::UnknownMode(s.to_string()))
    }
}

fn default_p() -> usize {
    1
}

/// Run configuration. `A` is `t x s`, `B` is `s x r`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdmmConfig {
    pub t: usize,
    pub s: usize,
    pub r: usize,
    /// Number of inner-product blocks; ignored by GASP.
    #[serde(default = "default_p")]
    pub p: usize,
    #[serde(rename = "X")]
    pub x: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub q: u64,
    #[serde(default)]
    pub seed: u64,
    pub mode: Mode,
    /// Servers that never respond.
    #[serde(default)]
    pub stragglers: Vec<usize>,
    /// Puts server 0 at evaluation point zero. Insecure; for leak tests.
    #[serde(default)]
    pub force_zero_point: bool,
    #[serde(default)]
    pub prf: PrfProfile,
    #[serde(default)]
    pub grouping: Grouping,
    /// Cooperation graph edges; when absent the graph is induced by the
    /// groups.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<Vec<(usize, usize)>>,
}

impl SdmmConfig {
    /// A configuration with defaults for the optional fields.
    #[allow(clippy::too_many_arguments)]
    pub fn new(mode: Mode, t: usize, s: usize, r: usize, p: usize, x: usize, n: usize, q: u64, seed: u64) -> Self {
        Self {
            t,
            s,
            r,
            p,
            x,
            n,
            q,
            seed,
            mode,
            stragglers: Vec::new(),
            force_zero_point: false,
            prf: PrfProfile::default(),
            grouping: Grouping::default(),
            topology: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, SchemeError> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| SchemeError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn field(&self) -> Result<PrimeField, SchemeError> {
        Ok(PrimeField::new(self.q)?)
    }

    pub fn recovery_threshold(&self) -> usize {
        match self.mode.family() {
            Family::MatDot => 2 * self.p + 2 * self.x - 1,
            Family::Gasp => Gasp2x2::RECOVERY_THRESHOLD,
        }
    }

    /// `p` for MatDot, the per-side split `m = n = 2` for GASP.
    pub fn p_or_mn(&self) -> usize {
        match self.mode.family() {
            Family::MatDot => self.p,
            Family::Gasp => 2,
        }
    }

    pub fn validate(&self) -> Result<(), SchemeError> {
        let bad = |m: String| Err(SchemeError::InvalidConfig(m));
        if self.t == 0 || self.s == 0 || self.r == 0 {
            return bad("matrix dimensions must be positive".into());
        }
        if self.x == 0 {
            return bad("X must be at least 1".into());
        }
        match self.mode.family() {
            Family::MatDot => {
                if self.p == 0 || !self.s.is_multiple_of(self.p) {
                    return bad(format!("p={} must divide s={}", self.p, self.s));
                }
            }
            Family::Gasp => {
                if self.x != 2 {
                    return bad("the 2x2 GASP code is defined for X=2 only".into());
                }
                if !self.t.is_multiple_of(2) || !self.r.is_multiple_of(2) {
                    return bad(format!("t={} and r={} must be even", self.t, self.r));
                }
            }
        }
        let rc = self.recovery_threshold();
        if self.n < rc {
            return bad(format!("N={} is below the recovery threshold {rc}", self.n));
        }
        self.field()?;
        if self.q <= self.n as u64 + 1 {
            return Err(SchemeError::FieldTooSmall {
                q: self.q,
                n: self.n,
            });
        }
        if let Some(&s) = self.stragglers.iter().find(|&&s| s >= self.n) {
            return bad(format!("straggler {s} outside 0..{}", self.n));
        }
        if let Some(edges) = &self.topology {
            if let Some(e) = edges.iter().find(|(a, b)| *a >= self.n || *b >= self.n || a == b) {
                return bad(format!("bad topology edge {e:?}"));
            }
        }
        Ok(())
    }

    pub fn upload_per_server(&self) -> u64 {
        let (t, s, r) = (self.t as u64, self.s as u64, self.r as u64);
        match self.mode.family() {
            Family::MatDot => (t * s + s * r) / self.p as u64,
            Family::Gasp => (t * s + s * r) / 2,
        }
    }
}

/// `N` distinct nonzero evaluation points drawn from the seed. For GASP the
/// draw is repeated until every set of 11 points gives a nonsingular decoding
/// matrix (checked exhaustively when there are at most 2000 such sets, on a
/// sample otherwise).
pub fn select_points(cfg: &SdmmConfig) -> Result<Vec<FieldElement>, SchemeError> {
    let field = cfg.field()?;
    if cfg.q <= cfg.n as u64 + 1 {
        return Err(SchemeError::FieldTooSmall {
            q: cfg.q,
            n: cfg.n,
        });
    }
    let mut prg = SeededPrg::with_stream(cfg.seed, STREAM_POINTS);
    let draw = |prg: &mut SeededPrg| {
        let mut pts: Vec<FieldElement> = Vec::with_capacity(cfg.n);
        if cfg.force_zero_point {
            pts.push(field.zero());
        }
        while pts.len() < cfg.n {
            let x = prg.sample_uniform(field);
            if !x.is_zero() && !pts.contains(&x) {
                pts.push(x);
            }
        }
        pts
    };
    match cfg.mode.family() {
        Family::MatDot => Ok(draw(&mut prg)),
        Family::Gasp => {
            let code = Gasp2x2::new(field, 2, 2, 2)?;
            let rc = Gasp2x2::RECOVERY_THRESHOLD;
            for _ in 0..GASP_POINT_ATTEMPTS {
                let pts = draw(&mut prg);
                let subsets: Vec<Vec<usize>> = if binomial(cfg.n, rc) <= GASP_EXHAUSTIVE_SUBSETS {
                    k_subsets(cfg.n, rc)
                } else {
                    let mut check = SeededPrg::with_stream(cfg.seed, STREAM_POINTS + 100);
                    (0..GASP_SAMPLED_SUBSETS)
                        .map(|_| {
                            let mut idx: Vec<usize> = (0..cfg.n).collect();
                            for i in 0..rc {
                                let j = i + check.below(cfg.n - i);
                                idx.swap(i, j);
                            }
                            idx.truncate(rc);
                            idx
                        })
                        .collect()
                };
                let ok = subsets.iter().all(|sub| {
                    let chosen: Vec<FieldElement> = sub.iter().map(|&i| pts[i]).collect();
                    code.decode_weights(&chosen).is_ok()
                });
                if ok {
                    return Ok(pts);
                }
            }
            Err(SchemeError::GaspPointSearchExhausted {
                attempts: GASP_POINT_ATTEMPTS,
            })
        }
    }
}

/// Uniform `A` (`t x s`) and `B` (`s x r`) drawn from the seed.
pub fn random_inputs(cfg: &SdmmConfig) -> Result<(FieldMatrix, FieldMatrix), SchemeError> {
    let field = cfg.field()?;
    let mut prg = SeededPrg::with_stream(cfg.seed, STREAM_INPUTS);
    let a = FieldMatrix::random(field, cfg.t, cfg.s, &mut prg);
    let b = FieldMatrix::random(field, cfg.s, cfg.r, &mut prg);
    Ok((a, b))
}

/// Closed-form costs with groups formed in response order.
pub fn expected_costs(cfg: &SdmmConfig) -> Result<CostLedger, SchemeError> {
    let field = cfg.field()?;
    let rc = cfg.recovery_threshold() as u64;
    let n = cfg.n as u64;
    let x = cfg.x as u64;
    let tr = (cfg.t * cfg.r) as u64;
    // Target blocks times block size is tr for both codes.
    let (download, cooperation) = match cfg.mode.strategy() {
        Strategy::Direct => match cfg.mode.family() {
            Family::MatDot => (rc * tr, 0),
            Family::Gasp => (rc * tr / 4, 0),
        },
        Strategy::Cooperative => {
            let groups = rc.div_ceil(x);
            (groups * tr, (rc - groups) * tr)
        }
        Strategy::Encrypted => {
            let block = match cfg.mode.family() {
                Family::MatDot => tr,
                Family::Gasp => tr / 4,
            };
            (tr, (rc - 1) * block)
        }
    };
    let mut aux = n;
    if cfg.mode.strategy() != Strategy::Direct {
        aux += rc * rc;
    }
    if cfg.mode.strategy() == Strategy::Encrypted {
        aux += rc * key_material_symbols(field);
    }
    Ok(CostLedger {
        upload: n * cfg.upload_per_server(),
        download,
        cooperation,
        auxiliary: aux,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(mode: Mode, n: usize, q: u64) -> SdmmConfig {
        SdmmConfig::new(mode, 4, 4, 4, 2, 2, n, q, 1)
    }

    #[test]
    fn points_are_distinct_nonzero_and_replayable() {
        let c = cfg(Mode::MatdotCoop, 7, 10007);
        let a = select_points(&c).unwrap();
        assert_eq!(a, select_points(&c).unwrap());
        assert_eq!(a.len(), 7);
        assert!(a.iter().all(|x| !x.is_zero()));
        let mut d = a.clone();
        d.sort_by_key(|x| x.value());
        d.dedup();
        assert_eq!(d.len(), 7);
        assert_eq!(
            select_points(&cfg(Mode::MatdotCoop, 7, 5)),
            Err(SchemeError::FieldTooSmall { q: 5, n: 7 })
        );
        let mut z = c.clone();
        z.force_zero_point = true;
        assert!(select_points(&z).unwrap()[0].is_zero());
    }

    #[test]
    fn gasp_points_give_nonsingular_decoders() {
        let c = cfg(Mode::GaspPlain, 11, 101);
        let pts = select_points(&c).unwrap();
        let v = crate::polycode::generalized_vandermonde(
            &pts,
            &crate::polycode::ExponentSet::new(super::super::GASP_EXPONENTS.to_vec()).unwrap(),
        )
        .unwrap();
        assert_eq!(v.rank(), 11);
        let c = cfg(Mode::GaspCoop, 13, 101);
        let pts = select_points(&c).unwrap();
        let code = Gasp2x2::new(c.field().unwrap(), 2, 2, 2).unwrap();
        for sub in k_subsets(13, 11) {
            let chosen: Vec<_> = sub.iter().map(|&i| pts[i]).collect();
            assert!(code.decode_weights(&chosen).is_ok());
        }
    }

    #[test]
    fn config_validation() {
        assert!(cfg(Mode::MatdotCoop, 7, 10007).validate().is_ok());
        let mut c = cfg(Mode::MatdotCoop, 7, 10007);
        c.x = 0;
        assert!(matches!(c.validate(), Err(SchemeError::InvalidConfig(_))));
        let mut c = cfg(Mode::MatdotCoop, 7, 10007);
        c.p = 3;
        assert!(c.validate().is_err());
        let c = cfg(Mode::MatdotCoop, 6, 10007);
        assert!(c.validate().is_err());
        let c = cfg(Mode::MatdotCoop, 7, 7);
        assert_eq!(c.validate(), Err(SchemeError::FieldTooSmall { q: 7, n: 7 }));
        let c = cfg(Mode::MatdotCoop, 7, 10005);
        assert!(matches!(c.validate(), Err(SchemeError::Field(_))));
        let mut c = cfg(Mode::GaspCoop, 11, 101);
        c.t = 3;
        assert!(c.validate().is_err());
        let mut c = cfg(Mode::GaspCoop, 11, 101);
        c.x = 3;
        assert!(c.validate().is_err());
        assert_eq!("gasp-enc".parse::<Mode>().unwrap(), Mode::GaspEnc);
        assert!("gasp".parse::<Mode>().is_err());
    }

    #[test]
    fn json_shape() {
        let text = r#"{"t":8,"s":8,"r":8,"p":2,"X":2,"N":7,"q":10007,"seed":3,"mode":"matdot-coop"}"#;
        let c = SdmmConfig::from_json(text).unwrap();
        assert_eq!(c.x, 2);
        assert_eq!(c.n, 7);
        assert_eq!(c.mode, Mode::MatdotCoop);
        assert_eq!(c.grouping, Grouping::ResponseOrder);
        let back: SdmmConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(SdmmConfig::from_json(r#"{"t":8}"#).is_err());
        let bad = text.replace("\"N\":7", "\"N\":7,\"extra\":1");
        assert!(SdmmConfig::from_json(&bad).is_err());
    }

    #[test]
    fn closed_forms_for_the_small_example() {
        let c = SdmmConfig::new(Mode::MatdotCoop, 8, 8, 8, 2, 2, 7, 10007, 0);
        let e = expected_costs(&c).unwrap();
        assert_eq!(e.upload, 7 * (32 + 32));
        assert_eq!(e.download, 4 * 64);
        assert_eq!(e.cooperation, 3 * 64);
    }
}
