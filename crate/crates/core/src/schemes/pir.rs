//! Retrieval of one of `m` files from `X`-securely stored MatDot shares.
//!
//! The files are stacked into `B` (`s x r`, `s = m * stripes`), so file `i`
//! is rows `i*stripes .. (i+1)*stripes`. Servers store `g(a_j)`; the user
//! uploads `f`-shares of the selector `e_i^T (x) I_stripes` and the product
//! is retrieved cooperatively.

use serde::{Deserialize, Serialize};

use super::codes::{LinearCode, MatDot, ShareBundle};
use super::config::{select_points, Mode, SdmmConfig, Strategy};
use super::engine::CodedRun;
use super::SchemeError;
use crate::field::{FieldElement, PrimeField, SeededPrg};
use crate::matgrid::{BlockList, FieldMatrix, PartitionKind};
use crate::par::Exec;
use crate::polycode::{decode_rows, ExponentSet};
use crate::secretshare::StoragePlan;
use crate::simnet::{self, CoopGraph, Grouping, RunOutcome, SimError, StragglerModel};
use crate::streamcipher::PrfProfile;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PirConfig {
    /// Number of files.
    pub m: usize,
    /// Rows per file.
    pub stripes: usize,
    /// Record length.
    pub r: usize,
    #[serde(rename = "X")]
    pub x: usize,
    pub p: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub q: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub stragglers: Vec<usize>,
    #[serde(default)]
    pub grouping: Grouping,
}

impl PirConfig {
    pub fn s(&self) -> usize {
        self.m * self.stripes
    }

    /// The equivalent multiplication: selector (`stripes x s`) times files.
    pub fn sdmm_config(&self) -> SdmmConfig {
        let mut c = SdmmConfig::new(
            Mode::MatdotCoop,
            self.stripes,
            self.s(),
            self.r,
            self.p,
            self.x,
            self.n,
            self.q,
            self.seed,
        );
        c.stragglers = self.stragglers.clone();
        c.grouping = self.grouping;
        c
    }

    pub fn validate(&self) -> Result<(), SchemeError> {
        if self.m == 0 {
            return Err(SchemeError::InvalidConfig("no files".into()));
        }
        self.sdmm_config().validate()
    }

    fn code(&self) -> Result<MatDot, SchemeError> {
        MatDot::new(PrimeField::new(self.q)?, self.p, self.x, self.stripes, self.s(), self.r)
    }
}

/// Server-side state after setup.
#[derive(Debug, Clone)]
pub struct PirStore {
    cfg: PirConfig,
    points: Vec<FieldElement>,
    stored: Vec<FieldMatrix>,
}

impl PirStore {
    pub fn config(&self) -> &PirConfig {
        &self.cfg
    }

    pub fn points(&self) -> &[FieldElement] {
        &self.points
    }

    /// `g(a_j)` held by server `j`.
    pub fn stored(&self) -> &[FieldMatrix] {
        &self.stored
    }
}

#[derive(Debug, Clone)]
pub struct PirOutcome {
    pub file: FieldMatrix,
    /// File symbols over downloaded symbols, in lowest terms.
    pub rate: (u64, u64),
    pub run: RunOutcome,
}

/// Encodes the stacked files (`s x r`) and places `g(a_j)` on server `j`.
pub fn pir_setup(files: &FieldMatrix, cfg: &PirConfig, prg: &mut SeededPrg) -> Result<PirStore, SchemeError> {
    cfg.validate()?;
    let code = cfg.code()?;
    let points = select_points(&cfg.sdmm_config())?;
    let g = code.g_poly(files, prg)?;
    let stored = points
        .iter()
        .map(|&a| g.eval(a))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PirStore {
        cfg: cfg.clone(),
        points,
        stored,
    })
}

/// `e_i^T (x) I_stripes`.
pub fn query_matrix(field: PrimeField, m: usize, stripes: usize, i: usize) -> FieldMatrix {
    FieldMatrix::from_fn(field, stripes, m * stripes, |k, c| {
        if c == i * stripes + k {
            field.one()
        } else {
            field.zero()
        }
    })
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Retrieves file `i` with query randomness from `prg`.
pub fn pir_retrieve(store: &PirStore, i: usize, prg: &mut SeededPrg) -> Result<PirOutcome, SimError> {
    let cfg = &store.cfg;
    if i >= cfg.m {
        return Err(SchemeError::InvalidConfig(format!("file {i} of {}", cfg.m)).into());
    }
    let code = cfg.code()?;
    let field = code.field();
    let query = query_matrix(field, cfg.m, cfg.stripes, i);
    let f = code.f_poly(&query, prg)?;
    let bundles = store
        .points
        .iter()
        .zip(&store.stored)
        .enumerate()
        .map(|(j, (&a, stored))| {
            Ok(ShareBundle {
                server: j,
                point: a,
                a_tilde: f.eval(a)?,
                b_tilde: stored.clone(),
            })
        })
        .collect::<Result<Vec<_>, SchemeError>>()?;
    let upload = (cfg.stripes * cfg.s() / cfg.p) as u64;
    let proto = CodedRun::new(
        Box::new(code),
        bundles,
        Strategy::Cooperative,
        false,
        upload,
        cfg.seed,
        PrfProfile::default(),
        Exec::default(),
    );
    let straggler = StragglerModel::with_non_responders(cfg.seed, cfg.stragglers.iter().copied());
    let graph: Option<CoopGraph> = None;
    let run = simnet::run(&proto, graph.as_ref(), &straggler, cfg.grouping)?;
    let file_symbols = (cfg.stripes * cfg.r) as u64;
    let g = gcd(file_symbols, run.ledger.download);
    Ok(PirOutcome {
        file: run.result.clone(),
        rate: (file_symbols / g, run.ledger.download / g),
        run,
    })
}

/// Non-private baseline: interpolates the stored polynomial from the first
/// `p + X` listed servers and returns the stacked files.
pub fn pir_baseline_reassemble(store: &PirStore, servers: &[usize]) -> Result<FieldMatrix, SchemeError> {
    let cfg = &store.cfg;
    let k = cfg.p + cfg.x;
    if servers.len() < k {
        return Err(SchemeError::DimensionMismatch(format!(
            "{} servers, need {k}",
            servers.len()
        )));
    }
    let used = &servers[..k];
    let pts: Vec<FieldElement> = used.iter().map(|&j| store.points[j]).collect();
    // B_j multiplies x^{p-1-j}.
    let targets: Vec<usize> = (0..cfg.p).map(|j| cfg.p - 1 - j).collect();
    let w = decode_rows(&pts, &ExponentSet::consecutive(k), &targets)?;
    let field = w.field();
    let (rows, cols) = store.stored[0].dims();
    let blocks = (0..cfg.p)
        .map(|j| {
            let mut acc = FieldMatrix::zeros(field, rows, cols);
            for (pos, &srv) in used.iter().enumerate() {
                acc.add_scaled_assign(w.get(j, pos), &store.stored[srv])?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>, SchemeError>>()?;
    Ok(BlockList::new(blocks, PartitionKind::IppRows).assemble()?)
}

/// The storage plan of one entry of `g`: message rows `a^{p-1-j}`, then
/// randomness rows `a^{p+t}`. Built without the rank check so callers can
/// audit it.
pub fn matdot_storage_plan(points: &[FieldElement], p: usize, x: usize) -> Result<StoragePlan, SchemeError> {
    let field = points
        .first()
        .ok_or_else(|| SchemeError::InvalidConfig("no points".into()))?
        .field();
    let g = FieldMatrix::from_fn(field, p + x, points.len(), |row, i| {
        let e = if row < p { p - 1 - row } else { row };
        points[i].pow(e as u64)
    });
    Ok(StoragePlan::unverified(g, p, x)?)
}
