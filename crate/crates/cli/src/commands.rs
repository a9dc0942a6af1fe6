//! Subcommand bodies. Each returns its report text and whether the check it
//! performs passed; the binary maps a failed check to a nonzero exit code.

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use coopsdmm::field::{PrimeField, SeededPrg};
use coopsdmm::matgrid::FieldMatrix;
use coopsdmm::par::Exec;
use coopsdmm::schemes::{
    expected_costs, pir_retrieve, pir_setup, random_inputs, run_sdmm, Family, MatdotUploadProbe, Mode,
    PirConfig, PirQueryProbe, SdmmConfig, Strategy,
};
use coopsdmm::simnet::{security_probe, RunOutcome, LEDGER_CSV_HEADER};

use crate::figure1::figure1_csv;
use crate::formulas::{cost_eval, Aggregation, CostEval, Params, Scheme, SchemeFormula, Q};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub text: String,
    pub ok: bool,
}

pub fn load_sdmm_config(text: &str, seed: Option<u64>) -> Result<SdmmConfig> {
    let mut cfg = SdmmConfig::from_json(text).context("reading SDMM configuration")?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn ledger_lines(cfg: &SdmmConfig, out: &RunOutcome) -> String {
    format!(
        "{LEDGER_CSV_HEADER}\n{}\n",
        out.ledger.csv_row(
            cfg.mode.as_str(),
            cfg.p_or_mn(),
            cfg.x,
            cfg.n,
            cfg.recovery_threshold()
        )
    )
}

/// Runs the configured protocol on seeded random inputs and checks the
/// result against a plain product.
pub fn run_sdmm_cmd(cfg: &SdmmConfig) -> Result<(Report, RunOutcome)> {
    let (a, b) = random_inputs(cfg)?;
    let out = run_sdmm(cfg, &a, &b)?;
    let ok = out.result == a.matmul_with(&b, Exec::Sequential)?;
    let mut text = ledger_lines(cfg, &out);
    text.push_str(if ok { "product: exact\n" } else { "product: MISMATCH\n" });
    Ok((Report { text, ok }, out))
}

/// The cost formula matching a protocol mode.
pub fn mode_formula(mode: Mode) -> SchemeFormula {
    let scheme = match mode.family() {
        Family::MatDot => Scheme::MatDot,
        Family::Gasp => Scheme::Gasp2x2,
    };
    let aggregation = match mode.strategy() {
        Strategy::Direct => Aggregation::Direct,
        Strategy::Cooperative => Aggregation::Cooperative,
        Strategy::Encrypted => Aggregation::Encrypted,
    };
    SchemeFormula::new(scheme, aggregation)
}

pub fn mode_params(cfg: &SdmmConfig) -> Params {
    let (mn, p) = match cfg.mode.family() {
        Family::MatDot => (1, cfg.p as u64),
        Family::Gasp => (2, 1),
    };
    Params {
        t: cfg.t as u64,
        s: cfg.s as u64,
        r: cfg.r as u64,
        m: mn,
        n: mn,
        p,
        x: cfg.x as u64,
        servers: cfg.n as u64,
    }
}

pub fn mode_costs(cfg: &SdmmConfig) -> Result<CostEval> {
    Ok(cost_eval(mode_formula(cfg.mode), &mode_params(cfg))?)
}

/// Runs and compares every ledger bucket with the closed forms.
pub fn audit_costs_cmd(cfg: &SdmmConfig) -> Result<Report> {
    let (run, out) = run_sdmm_cmd(cfg)?;
    let formula = mode_costs(cfg)?;
    let aux = expected_costs(cfg)?.auxiliary;
    let mut text = run.text;
    let mut ok = run.ok;
    let checks = [
        ("upload", out.ledger.upload, formula.upload),
        ("download", out.ledger.download, formula.download),
        ("cooperation", out.ledger.cooperation, formula.cooperation),
        ("auxiliary", out.ledger.auxiliary, Q::from_integer(aux as u128)),
    ];
    for (name, measured, want) in checks {
        let same = Q::from_integer(measured as u128) == want;
        ok &= same;
        text.push_str(&format!(
            "{name}: measured {measured}, closed form {want}{}\n",
            if same { "" } else { "  <-- differs" }
        ));
    }
    text.push_str(if ok { "PASS\n" } else { "FAIL\n" });
    Ok(Report { text, ok })
}

/// Retrieves file `index` from the stacked `files` matrix.
pub fn pir_cmd(files_text: &str, index: usize, cfg_text: &str) -> Result<Report> {
    let cfg: PirConfig = serde_json::from_str(cfg_text).context("reading retrieval configuration")?;
    cfg.validate()?;
    let files = FieldMatrix::parse_text(files_text).context("reading files matrix")?;
    if files.field().modulus() != cfg.q {
        bail!("files are over q = {}, configuration says q = {}", files.field().modulus(), cfg.q);
    }
    if files.dims() != (cfg.s(), cfg.r) {
        bail!(
            "files matrix is {}x{}, expected {}x{} (m * stripes by r)",
            files.rows(),
            files.cols(),
            cfg.s(),
            cfg.r
        );
    }
    let mut prg = SeededPrg::new(cfg.seed);
    let store = pir_setup(&files, &cfg, &mut prg)?;
    let out = pir_retrieve(&store, index, &mut prg)?;
    let want = files.row_range(index * cfg.stripes, (index + 1) * cfg.stripes);
    let ok = out.file == want;
    let sdmm = cfg.sdmm_config();
    let mut text = format!(
        "{LEDGER_CSV_HEADER}\n{}\n",
        out.run
            .ledger
            .csv_row("pir", cfg.p, cfg.x, cfg.n, sdmm.recovery_threshold())
    );
    text.push_str(&format!("rate: {}/{}\n", out.rate.0, out.rate.1));
    text.push_str(if ok { "file: exact\n" } else { "file: MISMATCH\n" });
    text.push_str(&out.file.to_text());
    Ok(Report { text, ok })
}

/// Configuration of an exhaustive probe.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub kind: ProbeKind,
    pub q: u64,
    #[serde(default = "one")]
    pub p: usize,
    /// Collusion level the encoder is built for.
    #[serde(rename = "X")]
    pub x: usize,
    /// Explicit evaluation points. Defaults to `1..=N`, or `0..N` with
    /// `force_zero_point`.
    #[serde(default)]
    pub points: Option<Vec<u64>>,
    #[serde(rename = "N", default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub force_zero_point: bool,
    /// Number of files for the query probe.
    #[serde(default = "two")]
    pub m: usize,
    #[serde(default = "first_two")]
    pub queries: [usize; 2],
}

fn one() -> usize {
    1
}

fn two() -> usize {
    2
}

fn first_two() -> [usize; 2] {
    [0, 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeKind {
    MatdotUpload,
    PirQuery,
}

impl ProbeConfig {
    pub fn points(&self) -> Result<Vec<u64>> {
        if let Some(p) = &self.points {
            return Ok(p.clone());
        }
        let p = match self.kind {
            ProbeKind::MatdotUpload => self.p,
            ProbeKind::PirQuery => 1,
        };
        let n = self.n.unwrap_or(2 * p + 2 * self.x - 1);
        let start = u64::from(!self.force_zero_point);
        let pts: Vec<u64> = (start..start + n as u64).collect();
        if pts.iter().any(|&v| v >= self.q) {
            bail!("{n} points do not fit in F_{}; give N or explicit points", self.q);
        }
        Ok(pts)
    }
}

/// Exhaustive probe; `ok` is the verdict.
pub fn probe_cmd(cfg_text: &str, coalition: usize) -> Result<Report> {
    let cfg: ProbeConfig = serde_json::from_str(cfg_text).context("reading probe configuration")?;
    let field = PrimeField::new(cfg.q)?;
    let points = cfg.points()?.into_iter().map(|v| field.elem(v)).collect();
    let verdict = match cfg.kind {
        ProbeKind::MatdotUpload => {
            security_probe(&MatdotUploadProbe::new(field, cfg.p, cfg.x, points)?, coalition, Exec::default())?
        }
        ProbeKind::PirQuery => security_probe(
            &PirQueryProbe::new(field, cfg.m, cfg.x, points, cfg.queries)?,
            coalition,
            Exec::default(),
        )?,
    };
    let mut text = serde_json::to_string_pretty(&verdict)?;
    text.push('\n');
    Ok(Report { text, ok: verdict.pass })
}

pub fn figure1_cmd(m: u64, xmax: u64) -> Result<String> {
    Ok(figure1_csv(m, xmax)?)
}
