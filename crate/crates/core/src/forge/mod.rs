//! Seeded generation of canaried samples with known ground truth, and
//! controlled tampering of their canaries.

mod corrupt;
mod generate;
mod names;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canary::{numeric_prefix_parse, ChecksumExpr, StringTable};
use crate::emit::Hex;

pub use corrupt::corrupt;
pub use generate::generate;
pub use names::IdentifierStyle;

/// Most attempts spent resampling before giving up.
pub const MAX_RESAMPLES: usize = 1000;

/// Largest accepted number of payload functions.
pub const MAX_ALIAS_FUNCTIONS: usize = 256;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ForgeVariant {
    #[default]
    Checksum,
    FixedCount,
}

/// Parameters of one forged sample.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForgeManifest {
    /// Plaintext strings, in decoder order. Canaries are inserted among them.
    pub payload_strings: Vec<String>,
    /// Canary strings added to the table. Unused by the fixed-count variant.
    pub canary_count: usize,
    /// Push/shift steps that bring the shipped table to decoder order.
    pub rotation: usize,
    pub base: Hex,
    pub seed: u64,
    #[serde(default)]
    pub variant: ForgeVariant,
    /// Payload functions holding a `const h = <decoder>` alias.
    pub alias_functions: usize,
    #[serde(default)]
    pub identifier_style: IdentifierStyle,
}

const PAYLOAD_WORDS: &[&str] = &[
    "toLowerCase",
    "getElementById",
    "querySelector",
    "addEventListener",
    "location",
    "href",
    "innerHTML",
    "createElement",
    "appendChild",
    "setAttribute",
    "value",
    "submit",
    "preventDefault",
    "cookie",
    "userAgent",
    "split",
    "join",
    "replace",
    "charCodeAt",
    "fromCharCode",
    "length",
    "style",
    "display",
    "none",
    "block",
    "click",
    "input",
    "form",
    "card number",
    "expiry",
    "cvv",
    "verify",
    "payment",
    "package",
    "delivery",
    "address",
    "https://",
    "/api/submit",
    "POST",
    "Content-Type",
    "application/json",
    "status",
    "then",
    "catch",
    "title",
    "body",
    "hidden",
    "textContent",
];

impl ForgeManifest {
    /// Table length: payload strings plus canaries.
    pub fn table_len(&self) -> usize {
        match self.variant {
            ForgeVariant::Checksum => self.payload_strings.len() + self.canary_count,
            ForgeVariant::FixedCount => self.payload_strings.len(),
        }
    }

    pub fn validate(&self) -> Result<(), ForgeError> {
        let len = self.table_len();
        if self.variant == ForgeVariant::Checksum
            && (self.canary_count == 0 || self.payload_strings.is_empty())
        {
            return Err(ForgeError::CanaryCount {
                canary_count: self.canary_count,
                len,
            });
        }
        if len == 0 {
            return Err(ForgeError::EmptyTable);
        }
        if self.rotation >= len {
            return Err(ForgeError::RotationOutOfRange {
                rotation: self.rotation,
                len,
            });
        }
        if self.alias_functions == 0 || self.alias_functions > MAX_ALIAS_FUNCTIONS {
            return Err(ForgeError::AliasFunctions(self.alias_functions));
        }
        if self.base.0.checked_add(len as u32).is_none() {
            return Err(ForgeError::BaseOverflow(self.base.0));
        }
        for (index, s) in self.payload_strings.iter().enumerate() {
            if !numeric_prefix_parse(s).is_nan() {
                return Err(ForgeError::PayloadString {
                    index,
                    reason: "has a numeric prefix, which is reserved for canaries",
                });
            }
            if s.contains(['\t', '\n', '\r']) {
                return Err(ForgeError::PayloadString {
                    index,
                    reason: "contains a tab or line break",
                });
            }
        }
        Ok(())
    }

    /// A manifest with `len` table slots, `canary_count` of them canaries,
    /// and payload strings drawn from `seed`.
    pub fn synthetic(
        len: usize,
        canary_count: usize,
        rotation: usize,
        base: u32,
        seed: u64,
        variant: ForgeVariant,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x005e_ed0f_9a71_0ad5);
        let payload_len = match variant {
            ForgeVariant::Checksum => len.saturating_sub(canary_count),
            ForgeVariant::FixedCount => len,
        };
        let payload_strings = (0..payload_len)
            .map(|i| {
                let word = PAYLOAD_WORDS.choose(&mut rng).copied().unwrap_or("value");
                if i % 3 == 2 {
                    format!("{word}_{}", names::random_letters(&mut rng, 3))
                } else {
                    word.to_string()
                }
            })
            .collect();
        ForgeManifest {
            payload_strings,
            canary_count,
            rotation,
            base: Hex(base),
            seed,
            variant,
            alias_functions: 1 + len / 12,
            identifier_style: IdentifierStyle::RandomSuffix,
        }
    }

    /// Draws a manifest from the property-test space: length in 4..=64,
    /// canary count in 1..=len/2, any rotation, base below 0x400.
    pub fn sample(seed: u64, variant: ForgeVariant) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = rng.gen_range(4..=64);
        let canary_count = rng.gen_range(1..=len / 2);
        let rotation = rng.gen_range(0..len);
        let base = rng.gen_range(0..0x400);
        let mut m = ForgeManifest::synthetic(len, canary_count, rotation, base, rng.gen(), variant);
        m.alias_functions = rng.gen_range(1..=4);
        m
    }
}

/// What a forged sample is known to contain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub variant: ForgeVariant,
    /// The table as written in the file.
    pub shipped_table: Vec<String>,
    /// The table in decoder order.
    pub canonical_table: Vec<String>,
    pub rotation: usize,
    /// Checksum target, for the checksum variant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    /// Bit pattern of `target`, so exactness survives any JSON reader.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_bits: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checksum: Option<ChecksumExpr>,
    /// Second IIFE argument of the fixed-count variant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_count_literal: Option<u64>,
    /// Canonical positions holding canary strings.
    pub canary_indices: Vec<usize>,
    pub decoder_name: String,
    pub array_function: String,
    pub base: Hex,
    pub end: Hex,
    /// Declarations of the decoder, counted the way the census counts them.
    pub alias_count: usize,
    pub resolution: BTreeMap<Hex, String>,
    pub closed_function_names: Vec<String>,
}

impl GroundTruth {
    pub fn len(&self) -> usize {
        self.shipped_table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shipped_table.is_empty()
    }

    /// Position in the shipped table of canonical slot `slot`.
    pub fn shipped_position(&self, slot: usize) -> usize {
        (slot + self.rotation) % self.len()
    }

    pub fn shipped(&self) -> StringTable {
        StringTable::new(self.shipped_table.clone())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ground truth always serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ForgeError {
    #[error("canary count {canary_count} needs at least one payload string (table length {len})")]
    CanaryCount { canary_count: usize, len: usize },
    #[error("manifest has an empty string table")]
    EmptyTable,
    #[error("rotation {rotation} is outside a table of {len}")]
    RotationOutOfRange { rotation: usize, len: usize },
    #[error("alias function count {0} is outside 1..={MAX_ALIAS_FUNCTIONS}")]
    AliasFunctions(usize),
    #[error("base {0:#x} leaves no room for the table")]
    BaseOverflow(u32),
    #[error("payload string {index} {reason}")]
    PayloadString { index: usize, reason: &'static str },
    #[error("no admissible sample after {0} attempts")]
    Exhausted(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorruptionError {
    #[error("slot {slot} is not a canary slot")]
    NotACanary { slot: usize },
    #[error("only checksum samples carry canaries")]
    NotChecksum,
    #[error("source does not match the ground truth: {0}")]
    SourceMismatch(String),
    #[error("every tampering tried still satisfied the checksum after {0} attempts")]
    Exhausted(usize),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lift::lift;

    fn manifest(variant: ForgeVariant) -> ForgeManifest {
        ForgeManifest::synthetic(18, 7, 11, 0x151, 42, variant)
    }

    #[test]
    fn listing_sized_sample_round_trips() {
        let (src, truth) = generate(&manifest(ForgeVariant::Checksum)).unwrap();
        assert_eq!(truth.len(), 18);
        assert_eq!(truth.canary_indices.len(), 7);
        let lifted = lift("forged.js", &src);
        assert_eq!(
            lifted.report.outcome,
            crate::emit::Outcome::Solved,
            "{:?}",
            lifted.report
        );
        let resolution = lifted.resolution.unwrap();
        assert_eq!(resolution.rotation, 11);
        let got: BTreeMap<Hex, String> = resolution
            .iter()
            .map(|(i, s)| (Hex(i), s.to_string()))
            .collect();
        assert_eq!(got, truth.resolution);
    }

    #[test]
    fn deterministic_under_seed() {
        for variant in [ForgeVariant::Checksum, ForgeVariant::FixedCount] {
            let a = generate(&manifest(variant)).unwrap();
            let b = generate(&manifest(variant)).unwrap();
            assert_eq!(a.0, b.0);
            assert_eq!(a.1, b.1);
        }
    }

    #[test]
    fn fixed_count_literal_matches_rotation() {
        let m = ForgeManifest::synthetic(10, 0, 5, 0, 7, ForgeVariant::FixedCount);
        let (src, truth) = generate(&m).unwrap();
        assert_eq!(truth.fixed_count_literal.unwrap() % 10, 5);
        let lifted = lift("e.js", &src);
        assert_eq!(lifted.resolution.unwrap().rotation, 5);
    }

    #[test]
    fn zero_rotation_ships_canonical_order() {
        let m = ForgeManifest::synthetic(8, 2, 0, 0x20, 1, ForgeVariant::Checksum);
        let (_, truth) = generate(&m).unwrap();
        assert_eq!(truth.shipped_table, truth.canonical_table);
    }

    #[test]
    fn invalid_manifests() {
        let mut m = manifest(ForgeVariant::Checksum);
        m.rotation = 18;
        assert!(matches!(
            generate(&m),
            Err(ForgeError::RotationOutOfRange { .. })
        ));
        let m = ForgeManifest::synthetic(4, 4, 0, 0, 1, ForgeVariant::Checksum);
        assert!(matches!(generate(&m), Err(ForgeError::CanaryCount { .. })));
        let mut m = manifest(ForgeVariant::Checksum);
        m.payload_strings[0] = " 12abc".into();
        assert!(matches!(
            generate(&m),
            Err(ForgeError::PayloadString { index: 0, .. })
        ));
    }

    #[test]
    fn corrupt_breaks_the_checksum() {
        let (src, truth) = generate(&manifest(ForgeVariant::Checksum)).unwrap();
        let slot = truth.canary_indices[0];
        let tampered = corrupt(&src, &truth, slot, 9).unwrap();
        assert_ne!(tampered, src);
        let lifted = lift("t.js", &tampered);
        assert_eq!(lifted.report.outcome, crate::emit::Outcome::Unsatisfiable);
        let plain = (0..truth.len())
            .find(|k| !truth.canary_indices.contains(k))
            .unwrap();
        assert_eq!(
            corrupt(&src, &truth, plain, 9),
            Err(CorruptionError::NotACanary { slot: plain })
        );
    }

    #[test]
    fn truth_json_round_trip() {
        let (_, truth) = generate(&manifest(ForgeVariant::Checksum)).unwrap();
        let back = GroundTruth::from_json(&truth.to_json()).unwrap();
        assert_eq!(back, truth);
        assert!(truth.to_json().contains("\"base\": \"0x151\""));
    }
}
