use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CorruptionError, ForgeVariant, GroundTruth, MAX_RESAMPLES};
use crate::analysis::largest_string_array;
use crate::canary::{evaluate_checksum, StringTable};
use crate::emit::quote_js_string;
use crate::syntax::parse;

/// Rewrites the numeric prefix of the canary at canonical slot `slot` so
/// that no rotation of the table satisfies the checksum any more. Only that
/// one string literal changes.
pub fn corrupt(
    source: &str,
    truth: &GroundTruth,
    slot: usize,
    seed: u64,
) -> Result<String, CorruptionError> {
    if truth.variant != ForgeVariant::Checksum {
        return Err(CorruptionError::NotChecksum);
    }
    if !truth.canary_indices.contains(&slot) {
        return Err(CorruptionError::NotACanary { slot });
    }
    let (Some(expr), Some(target)) = (&truth.checksum, truth.target) else {
        return Err(CorruptionError::NotChecksum);
    };

    let tree = parse(source).map_err(|e| CorruptionError::SourceMismatch(e.to_string()))?;
    let array = largest_string_array(&tree)
        .ok_or_else(|| CorruptionError::SourceMismatch("no string array".into()))?;
    if array.elements != truth.shipped_table {
        return Err(CorruptionError::SourceMismatch(
            "string array differs from the shipped table".into(),
        ));
    }
    let position = truth.shipped_position(slot);
    let original = &truth.shipped_table[position];
    let digits = original.chars().take_while(char::is_ascii_digit).count();
    let suffix = &original[digits..];

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = truth.base.0;
    for _ in 0..MAX_RESAMPLES {
        let replacement = format!("{}{suffix}", rng.gen_range(1..=10_000_000u32));
        if replacement == *original {
            continue;
        }
        let mut entries = truth.shipped_table.clone();
        entries[position] = replacement.clone();
        let table = StringTable::new(entries);
        let satisfiable = (0..table.len())
            .any(|r| evaluate_checksum(expr, &table, r, base).is_ok_and(|v| v == target));
        if satisfiable {
            continue;
        }
        let span = array.element_spans[position];
        let mut out = String::with_capacity(source.len() + 8);
        out.push_str(&source[..span.start]);
        out.push_str(&quote_js_string(&replacement));
        out.push_str(&source[span.end..]);
        return Ok(out);
    }
    Err(CorruptionError::Exhausted(MAX_RESAMPLES))
}
