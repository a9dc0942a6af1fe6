//! Driver library behind the `sdmm` binary: cost formulas for the compared
//! schemes, the normalized cost sweep and the subcommand bodies.

pub mod commands;
pub mod figure1;
pub mod formulas;
