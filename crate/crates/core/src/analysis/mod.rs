//! Static passes that locate the pieces of a string-array canary: the
//! rotation IIFE, the declared symbols, self-contained functions, the
//! decoder (as the most reassigned name), the string table and the decoder's
//! index offset.

mod arrays;
mod iife;
mod offsets;
mod symbols;

use thiserror::Error;

use crate::syntax::SyntaxError;

pub use arrays::{largest_string_array, ArrayCandidate};
pub use iife::{find_iifes, CalleeKind, IifeExtract};
pub(crate) use offsets::literal_index;
pub use offsets::{
    call_site_offset, decoder_base_offset, decoder_call_indices, offset_range, subtraction_offset,
    Alias, AliasSet, OffsetRange, MAX_ALIAS_DEPTH,
};
pub(crate) use symbols::referenced_identifiers;
pub use symbols::{
    filter_closed_functions, find_function_definition, inventory_symbols, most_reassigned_variable,
    ClosedFunction, FunctionDefinition, ReassignmentCensus, SymbolInventory,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("no base offset: decoder has no `param - K` and no literal call sites")]
    OffsetNotFound,
    #[error("decoder subtracts {subtraction:#x} but a call site passes {call_site:#x}")]
    OffsetConflict { subtraction: u32, call_site: u32 },
    #[error("decoder text does not parse: {0}")]
    DecoderSyntax(SyntaxError),
    #[error("decoder text contains no function")]
    NotAFunction,
}
