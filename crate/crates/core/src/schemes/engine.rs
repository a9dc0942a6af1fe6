use std::collections::HashMap;

use super::codes::{Gasp2x2, LinearCode, MatDot, ShareBundle};
use super::config::{select_points, Family, Mode, SdmmConfig, Strategy, STREAM_KEYS, STREAM_RANDOMNESS};
use super::SchemeError;
use crate::field::SeededPrg;
use crate::matgrid::FieldMatrix;
use crate::par::Exec;
use crate::simnet::{
    self, Cooperation, CoopGraph, CostLedger, Node, Payload, Phase, Protocol, ProtocolOutput,
    RunOutcome, SimError, StragglerModel, Transcript,
};
use crate::streamcipher::{key_material_symbols, CipherKey, Nonce, PrfProfile, StreamCipher};

/// An encoded instance ready to be driven by [`simnet::run`].
pub struct CodedRun {
    code: Box<dyn LinearCode>,
    bundles: Vec<ShareBundle>,
    strategy: Strategy,
    /// Whether `B~` is uploaded per run. It is not when the servers already
    /// store it, as in retrieval.
    upload_b: bool,
    upload_per_server: u64,
    key_seed: u64,
    prf: PrfProfile,
    exec: Exec,
}

impl CodedRun {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        code: Box<dyn LinearCode>,
        bundles: Vec<ShareBundle>,
        strategy: Strategy,
        upload_b: bool,
        upload_per_server: u64,
        key_seed: u64,
        prf: PrfProfile,
        exec: Exec,
    ) -> Self {
        Self {
            code,
            bundles,
            strategy,
            upload_b,
            upload_per_server,
            key_seed,
            prf,
            exec,
        }
    }

    pub fn bundles(&self) -> &[ShareBundle] {
        &self.bundles
    }

    pub fn code(&self) -> &dyn LinearCode {
        self.code.as_ref()
    }

    fn report(&self, groups: usize) -> CostLedger {
        let n = self.bundles.len() as u64;
        let rc = self.code.recovery_threshold() as u64;
        let k = self.code.target_count() as u64;
        let (hr, hc) = self.code.product_block_dims();
        let hb = (hr * hc) as u64;
        let groups = groups as u64;
        let (download, cooperation) = match self.strategy {
            Strategy::Direct => (rc * hb, 0),
            Strategy::Cooperative => (groups * k * hb, (rc - groups) * k * hb),
            Strategy::Encrypted => (k * hb, (rc - 1) * hb),
        };
        let mut auxiliary = n;
        if self.strategy != Strategy::Direct {
            auxiliary += rc * rc;
        }
        if self.strategy == Strategy::Encrypted {
            auxiliary += rc * key_material_symbols(self.code.field());
        }
        CostLedger {
            upload: n * self.upload_per_server,
            download,
            cooperation,
            auxiliary,
        }
    }
}

fn weighted_sum(
    w: &FieldMatrix,
    t: usize,
    blocks: &[FieldMatrix],
    positions: impl Iterator<Item = usize>,
    dims: (usize, usize),
) -> Result<FieldMatrix, SchemeError> {
    let mut acc = FieldMatrix::zeros(w.field(), dims.0, dims.1);
    for pos in positions {
        acc.add_scaled_assign(w.get(t, pos), &blocks[pos])?;
    }
    Ok(acc)
}

impl Protocol for CodedRun {
    fn servers(&self) -> usize {
        self.bundles.len()
    }

    fn collusion(&self) -> usize {
        self.code.collusion()
    }

    fn recovery_threshold(&self) -> usize {
        self.code.recovery_threshold()
    }

    fn cooperation(&self) -> Cooperation {
        match self.strategy {
            Strategy::Direct => Cooperation::None,
            Strategy::Cooperative => Cooperation::InformationTheoretic,
            Strategy::Encrypted => Cooperation::Encrypted,
        }
    }

    fn execute(&self, responders: &[usize], groups: &[Vec<usize>]) -> Result<ProtocolOutput, SimError> {
        let code = self.code.as_ref();
        let field = code.field();
        let rc = code.recovery_threshold();
        if responders.len() != rc {
            return Err(SimError::InsufficientResponders {
                have: responders.len(),
                need: rc,
            });
        }
        let mut tr = Transcript::new();
        for b in &self.bundles {
            let dst = Node::Server(b.server);
            tr.record(Phase::Upload, Node::User, dst, Payload::Point, 1);
            if self.upload_b {
                tr.send(Phase::Upload, Node::User, dst, Payload::Share, &[&b.a_tilde, &b.b_tilde]);
            } else {
                tr.send(Phase::Upload, Node::User, dst, Payload::Share, &[&b.a_tilde]);
            }
        }

        let products: Vec<FieldMatrix> = self
            .exec
            .map(responders, |&j| {
                let b = &self.bundles[j];
                b.a_tilde.matmul_with(&b.b_tilde, Exec::Sequential)
            })
            .into_iter()
            .collect::<Result<_, _>>()
            .map_err(SchemeError::from)?;
        let points: Vec<_> = responders.iter().map(|&j| self.bundles[j].point).collect();
        let w = code.decode_weights(&points)?;
        let k = code.target_count();
        let dims = code.product_block_dims();
        let all = || 0..rc;

        let targets: Vec<FieldMatrix> = match self.strategy {
            Strategy::Direct => {
                for (pos, &j) in responders.iter().enumerate() {
                    tr.send(Phase::Download, Node::Server(j), Node::User, Payload::Product, &[&products[pos]]);
                }
                (0..k)
                    .map(|t| weighted_sum(&w, t, &products, all(), dims))
                    .collect::<Result<_, _>>()?
            }
            Strategy::Cooperative => {
                for &j in responders {
                    tr.record(Phase::Setup, Node::User, Node::Server(j), Payload::ResponderPoints, rc as u64);
                }
                let pos_of: HashMap<usize, usize> =
                    responders.iter().enumerate().map(|(p, &j)| (j, p)).collect();
                let mut targets = vec![FieldMatrix::zeros(field, dims.0, dims.1); k];
                for grp in groups {
                    let rep = grp[0];
                    let mut agg = vec![FieldMatrix::zeros(field, dims.0, dims.1); k];
                    for &m in grp {
                        let pos = *pos_of.get(&m).ok_or_else(|| {
                            SchemeError::InvalidConfig(format!("group member {m} did not respond"))
                        })?;
                        let contrib: Vec<FieldMatrix> =
                            (0..k).map(|t| products[pos].scale(w.get(t, pos))).collect();
                        if m != rep {
                            let refs: Vec<&FieldMatrix> = contrib.iter().collect();
                            tr.send(Phase::Cooperation, Node::Server(m), Node::Server(rep), Payload::Weighted, &refs);
                        }
                        for (a, c) in agg.iter_mut().zip(&contrib) {
                            a.add_scaled_assign(field.one(), c).map_err(SchemeError::from)?;
                        }
                    }
                    let refs: Vec<&FieldMatrix> = agg.iter().collect();
                    tr.send(Phase::Download, Node::Server(rep), Node::User, Payload::Aggregate, &refs);
                    for (t, a) in targets.iter_mut().zip(&agg) {
                        t.add_scaled_assign(field.one(), a).map_err(SchemeError::from)?;
                    }
                }
                targets
            }
            Strategy::Encrypted => {
                let hub = responders[0];
                for &j in responders {
                    tr.record(Phase::Setup, Node::User, Node::Server(j), Payload::ResponderPoints, rc as u64);
                }
                let cipher = StreamCipher::new(field, self.prf);
                let mut kp = SeededPrg::with_stream(self.key_seed, STREAM_KEYS);
                let keys: Vec<(CipherKey, Nonce)> = (0..rc)
                    .map(|_| (CipherKey::random(&mut kp), Nonce::random(&mut kp)))
                    .collect();
                let bodies: Vec<FieldMatrix> = self
                    .exec
                    .map_range(rc, |pos| {
                        let (key, nonce) = &keys[pos];
                        let ct = cipher.encrypt_with_nonce(key, *nonce, &products[pos].elements());
                        FieldMatrix::from_elements(field, dims.0, dims.1, &ct.body)
                    })
                    .into_iter()
                    .collect::<Result<_, _>>()
                    .map_err(SchemeError::from)?;
                let kms = key_material_symbols(field);
                for (pos, &j) in responders.iter().enumerate() {
                    tr.record(Phase::Download, Node::Server(j), Node::User, Payload::KeyMaterial, kms);
                    if j != hub {
                        tr.send(Phase::Cooperation, Node::Server(j), Node::Server(hub), Payload::Ciphertext, &[&bodies[pos]]);
                    }
                }
                let agg: Vec<FieldMatrix> = (0..k)
                    .map(|t| weighted_sum(&w, t, &bodies, all(), dims))
                    .collect::<Result<_, _>>()?;
                let refs: Vec<&FieldMatrix> = agg.iter().collect();
                tr.send(Phase::Download, Node::Server(hub), Node::User, Payload::Aggregate, &refs);
                // The user regenerates every mask and decodes them with the
                // same weights.
                let masks: Vec<FieldMatrix> = self
                    .exec
                    .map_range(rc, |pos| {
                        let (key, nonce) = &keys[pos];
                        let z = cipher.expand(key, nonce, dims.0 * dims.1);
                        FieldMatrix::from_elements(field, dims.0, dims.1, &z)
                    })
                    .into_iter()
                    .collect::<Result<_, _>>()
                    .map_err(SchemeError::from)?;
                agg.iter()
                    .enumerate()
                    .map(|(t, a)| {
                        let m = weighted_sum(&w, t, &masks, all(), dims)?;
                        Ok(a.sub(&m)?)
                    })
                    .collect::<Result<_, SchemeError>>()?
            }
        };
        let result = code.assemble(targets)?;
        Ok(ProtocolOutput {
            result,
            transcript: tr,
            report: self.report(groups.len()),
        })
    }
}

/// The code a configuration asks for.
pub fn build_code(cfg: &SdmmConfig) -> Result<Box<dyn LinearCode>, SchemeError> {
    let field = cfg.field()?;
    Ok(match cfg.mode.family() {
        Family::MatDot => Box::new(MatDot::new(field, cfg.p, cfg.x, cfg.t, cfg.s, cfg.r)?),
        Family::Gasp => Box::new(Gasp2x2::new(field, cfg.t, cfg.s, cfg.r)?),
    })
}

/// Encodes `A` and `B` for the configured mode.
pub fn prepare_sdmm(cfg: &SdmmConfig, a: &FieldMatrix, b: &FieldMatrix, exec: Exec) -> Result<CodedRun, SchemeError> {
    cfg.validate()?;
    let points = select_points(cfg)?;
    let code = build_code(cfg)?;
    let mut prg = SeededPrg::with_stream(cfg.seed, STREAM_RANDOMNESS);
    let bundles = code.encode(a, b, &points, &mut prg, exec)?;
    Ok(CodedRun::new(
        code,
        bundles,
        cfg.mode.strategy(),
        true,
        cfg.upload_per_server(),
        cfg.seed,
        cfg.prf,
        exec,
    ))
}

/// Runs the configured mode with the configured stragglers, topology and
/// grouping.
pub fn run_sdmm(cfg: &SdmmConfig, a: &FieldMatrix, b: &FieldMatrix) -> Result<RunOutcome, SimError> {
    let straggler = StragglerModel::with_non_responders(cfg.seed, cfg.stragglers.iter().copied());
    run_sdmm_with(cfg, a, b, &straggler, Exec::default())
}

pub fn run_sdmm_with(
    cfg: &SdmmConfig,
    a: &FieldMatrix,
    b: &FieldMatrix,
    straggler: &StragglerModel,
    exec: Exec,
) -> Result<RunOutcome, SimError> {
    let proto = prepare_sdmm(cfg, a, b, exec)?;
    let graph = match &cfg.topology {
        Some(edges) => Some(CoopGraph::from_edges(cfg.n, edges)?),
        None => None,
    };
    simnet::run(&proto, graph.as_ref(), straggler, cfg.grouping)
}

fn with_mode(cfg: &SdmmConfig, mode: Mode) -> SdmmConfig {
    SdmmConfig {
        mode,
        ..cfg.clone()
    }
}

/// MatDot shares for every server, randomness drawn from `prg`.
pub fn matdot_encode(
    a: &FieldMatrix,
    b: &FieldMatrix,
    cfg: &SdmmConfig,
    prg: &mut SeededPrg,
) -> Result<Vec<ShareBundle>, SchemeError> {
    let cfg = with_mode(cfg, Mode::MatdotCoop);
    cfg.validate()?;
    let code = MatDot::new(cfg.field()?, cfg.p, cfg.x, cfg.t, cfg.s, cfg.r)?;
    code.encode(a, b, &select_points(&cfg)?, prg, Exec::default())
}

/// 2x2 GASP shares for every server, randomness drawn from `prg`.
pub fn gasp_encode_2x2(
    a: &FieldMatrix,
    b: &FieldMatrix,
    cfg: &SdmmConfig,
    prg: &mut SeededPrg,
) -> Result<Vec<ShareBundle>, SchemeError> {
    let cfg = with_mode(cfg, Mode::GaspPlain);
    cfg.validate()?;
    let code = Gasp2x2::new(cfg.field()?, cfg.t, cfg.s, cfg.r)?;
    code.encode(a, b, &select_points(&cfg)?, prg, Exec::default())
}

fn run_as(
    mode: Mode,
    a: &FieldMatrix,
    b: &FieldMatrix,
    cfg: &SdmmConfig,
    straggler: &StragglerModel,
) -> Result<RunOutcome, SimError> {
    run_sdmm_with(&with_mode(cfg, mode), a, b, straggler, Exec::default())
}

pub fn matdot_coop_run(a: &FieldMatrix, b: &FieldMatrix, cfg: &SdmmConfig, straggler: &StragglerModel) -> Result<RunOutcome, SimError> {
    run_as(Mode::MatdotCoop, a, b, cfg, straggler)
}

pub fn gasp_plain_run(a: &FieldMatrix, b: &FieldMatrix, cfg: &SdmmConfig, straggler: &StragglerModel) -> Result<RunOutcome, SimError> {
    run_as(Mode::GaspPlain, a, b, cfg, straggler)
}

pub fn gasp_coop_run(a: &FieldMatrix, b: &FieldMatrix, cfg: &SdmmConfig, straggler: &StragglerModel) -> Result<RunOutcome, SimError> {
    run_as(Mode::GaspCoop, a, b, cfg, straggler)
}

pub fn gasp_enc_run(a: &FieldMatrix, b: &FieldMatrix, cfg: &SdmmConfig, straggler: &StragglerModel) -> Result<RunOutcome, SimError> {
    run_as(Mode::GaspEnc, a, b, cfg, straggler)
}

/// Hub-based encrypted aggregation on top of a code whose direct download
/// is `R_c * t * r`. Codes that download less directly (such as 2x2 GASP)
/// are rejected; use [`gasp_enc_run`] for those.
pub fn enc_coop_wrap(a: &FieldMatrix, b: &FieldMatrix, cfg: &SdmmConfig, straggler: &StragglerModel) -> Result<RunOutcome, SimError> {
    let code = build_code(cfg)?;
    let (hr, hc) = code.product_block_dims();
    if hr * hc != cfg.t * cfg.r {
        return Err(SchemeError::InvalidConfig(format!(
            "{} downloads {}x{} products, not t x r",
            cfg.mode, hr, hc
        ))
        .into());
    }
    let mode = match cfg.mode.family() {
        Family::MatDot => Mode::MatdotEnc,
        Family::Gasp => Mode::GaspEnc,
    };
    run_as(mode, a, b, cfg, straggler)
}
