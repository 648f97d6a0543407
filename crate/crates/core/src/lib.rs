//! Static recovery of string tables protected by array canaries in
//! obfuscated JavaScript.
//!
//! The pipeline parses a script ([`syntax`]), locates the rotation IIFE, the
//! decoder and the string table ([`analysis`]), solves the rotation the
//! canary checksum demands ([`canary`]) and writes the decoded result back
//! ([`emit`]). [`lift`] runs those stages over one file. [`forge`] produces
//! canaried samples with known ground truth.

pub mod analysis;
pub mod canary;
pub mod emit;
pub mod forge;
pub mod lift;
pub mod numeric;
pub mod syntax;
