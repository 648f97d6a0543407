//! The array canary model: `parseInt` prefix semantics, checksum extraction
//! and exact double evaluation, the bounded rotation search and decoder
//! resolution. The older fixed-count shuffle is handled as a second variant.

mod checksum;
mod parse_int;
mod solve;

use thiserror::Error;

use crate::syntax::SyntaxError;

pub use checksum::{
    extract_checksum, render_number, ArithOp, CanaryShape, ChecksumCanary, ChecksumExpr,
    FixedCountCanary,
};
pub use parse_int::numeric_prefix_parse;
pub use solve::{
    evaluate_checksum, resolve, solve_rotation, CanaryModel, CanaryVariant, ResolutionTable,
    StringTable, Unsatisfiable,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CanaryError {
    #[error("unrecognized IIFE: {0}")]
    UnrecognizedIife(String),
    #[error("index {index:#x} outside table of {len} entries at base {base:#x}")]
    IndexOutOfRange { index: u32, base: u32, len: usize },
    #[error("string table is empty")]
    EmptyTable,
    #[error("checksum target {0} is not finite")]
    NonFiniteTarget(f64),
    #[error("IIFE text does not parse: {0}")]
    Syntax(SyntaxError),
}
