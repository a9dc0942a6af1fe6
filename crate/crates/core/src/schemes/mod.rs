//! Secure distributed matrix multiplication and private retrieval protocols.
//!
//! Two polynomial codes are provided: MatDot with `X` random terms (inner
//! product partitioning, target coefficient `x^{p-1}`) and the 2x2 GASP code
//! (outer product partitioning, gap at `x^7`). Each can be decoded directly
//! by the user, cooperatively by groups of `X` servers, or through a hub that
//! aggregates stream-cipher-masked products.

mod codes;
mod config;
mod engine;
mod pir;
mod probe;
mod sharpness;

use thiserror::Error;

use crate::field::FieldError;
use crate::matgrid::MatrixError;
use crate::polycode::PolyError;
use crate::secretshare::ShareError;

pub use codes::{Gasp2x2, LinearCode, MatDot, ProductShare, ShareBundle, GASP_EXPONENTS};
pub use config::{
    expected_costs, random_inputs, select_points, Family, Mode, SdmmConfig, Strategy, STREAM_INPUTS,
    STREAM_KEYS, STREAM_POINTS, STREAM_RANDOMNESS,
};
pub use engine::{
    build_code, enc_coop_wrap, gasp_coop_run, gasp_enc_run, gasp_encode_2x2, gasp_plain_run,
    matdot_coop_run, matdot_encode, prepare_sdmm, run_sdmm, run_sdmm_with, CodedRun,
};
pub use pir::{
    matdot_storage_plan, pir_baseline_reassemble, pir_retrieve, pir_setup, query_matrix, PirConfig,
    PirOutcome, PirStore,
};
pub use probe::{MatdotUploadProbe, PirQueryProbe};
pub use sharpness::{matdot_sharpness_witness, SharpnessWitness};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemeError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("field of size {q} has no room for {n} distinct nonzero points")]
    FieldTooSmall { q: u64, n: usize },
    #[error("no nonsingular GASP point set found after {attempts} attempts")]
    GaspPointSearchExhausted { attempts: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unknown mode {0:?}")]
    UnknownMode(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Share(#[from] ShareError),
}
