use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::checksum::{extract_checksum, CanaryShape, ChecksumExpr};
use super::parse_int::numeric_prefix_parse;
use super::CanaryError;
use crate::analysis::{IifeExtract, OffsetRange};

/// An ordered string table. Rotation is passed to each operation rather than
/// stored.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StringTable {
    pub entries: Vec<String>,
}

impl StringTable {
    pub fn new(entries: Vec<String>) -> Self {
        StringTable { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Element `k` after `rotation` push(shift()) steps.
    pub fn at(&self, rotation: usize, k: usize) -> &str {
        &self.entries[(k + rotation) % self.len()]
    }

    /// The table after `rotation` push(shift()) steps.
    pub fn rotated_left(&self, rotation: usize) -> StringTable {
        let mut entries = self.entries.clone();
        if !entries.is_empty() {
            entries.rotate_left(rotation % self.len());
        }
        StringTable { entries }
    }
}

impl<S: Into<String>> FromIterator<S> for StringTable {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        StringTable::new(iter.into_iter().map(Into::into).collect())
    }
}

/// `expr` with each `Term(i)` read as `parseInt(table[i - base])` after
/// `rotation` push(shift()) steps.
pub fn evaluate_checksum(
    expr: &ChecksumExpr,
    table: &StringTable,
    rotation: usize,
    base: u32,
) -> Result<f64, CanaryError> {
    let len = table.len();
    expr.evaluate_with(&mut |i| {
        let k = i
            .checked_sub(base)
            .map(|k| k as usize)
            .filter(|&k| k < len)
            .ok_or(CanaryError::IndexOutOfRange {
                index: i,
                base,
                len,
            })?;
        Ok(numeric_prefix_parse(table.at(rotation, k)))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CanaryVariant {
    Checksum { expr: ChecksumExpr, target: f64 },
    FixedCount { count: u64 },
}

/// Everything needed to solve one canary.
#[derive(Clone, Debug, PartialEq)]
pub struct CanaryModel {
    pub iife: IifeExtract,
    pub decoder_name: String,
    pub base: u32,
    pub table: StringTable,
    pub variant: CanaryVariant,
}

impl CanaryModel {
    /// Checks the model invariants: a non-empty table, a finite target, at
    /// least one term, and every term inside the offset range.
    pub fn new(
        iife: IifeExtract,
        decoder_name: impl Into<String>,
        base: u32,
        table: StringTable,
        variant: CanaryVariant,
    ) -> Result<Self, CanaryError> {
        if table.is_empty() {
            return Err(CanaryError::EmptyTable);
        }
        if let CanaryVariant::Checksum { expr, target } = &variant {
            if !target.is_finite() {
                return Err(CanaryError::NonFiniteTarget(*target));
            }
            let terms = expr.terms();
            if terms.is_empty() {
                return Err(CanaryError::UnrecognizedIife(
                    "checksum has no terms".into(),
                ));
            }
            let range = OffsetRange {
                start: base,
                end: base.saturating_add(table.len() as u32),
            };
            if let Some(&index) = terms.iter().find(|&&i| !range.contains(i)) {
                return Err(CanaryError::IndexOutOfRange {
                    index,
                    base,
                    len: table.len(),
                });
            }
        }
        Ok(CanaryModel {
            iife,
            decoder_name: decoder_name.into(),
            base,
            table,
            variant,
        })
    }

    /// Builds a model from an IIFE, extracting its variant.
    pub fn from_iife(
        iife: IifeExtract,
        decoder_name: impl Into<String>,
        base: u32,
        table: StringTable,
    ) -> Result<Self, CanaryError> {
        let variant = match extract_checksum(&iife)? {
            CanaryShape::Checksum(c) => CanaryVariant::Checksum {
                expr: c.expr,
                target: c.target,
            },
            CanaryShape::FixedCount(f) => CanaryVariant::FixedCount { count: f.count },
        };
        CanaryModel::new(iife, decoder_name, base, table, variant)
    }

    pub fn range(&self) -> OffsetRange {
        OffsetRange {
            start: self.base,
            end: self.base + self.table.len() as u32,
        }
    }
}

/// The table at its fixpoint, addressed by decoder index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolutionTable {
    pub base: u32,
    pub rotation: usize,
    /// Fixpoint order: `entries[i - base]` is what the decoder returns for `i`.
    pub entries: Vec<String>,
    /// Checksum evaluations spent finding `rotation`.
    pub evaluations: usize,
}

impl ResolutionTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn range(&self) -> OffsetRange {
        OffsetRange {
            start: self.base,
            end: self.base + self.entries.len() as u32,
        }
    }

    pub fn get(&self, index: u32) -> Option<&str> {
        let k = index.checked_sub(self.base)? as usize;
        self.entries.get(k).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &str)> + '_ {
        self.entries
            .iter()
            .enumerate()
            .map(|(k, s)| (self.base + k as u32, s.as_str()))
    }

    pub fn to_map(&self) -> BTreeMap<u32, String> {
        self.iter().map(|(i, s)| (i, s.to_string())).collect()
    }

    pub fn fixpoint(&self) -> StringTable {
        StringTable::new(self.entries.clone())
    }
}

/// No rotation satisfies the checksum: the original loop never terminates.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("no rotation of {evaluations} satisfies the checksum")]
pub struct Unsatisfiable {
    pub evaluations: usize,
}

/// Finds the first rotation whose checksum equals the target (`===`), trying
/// each of the `len` distinct rotations once.
pub fn solve_rotation(model: &CanaryModel) -> Result<ResolutionTable, Unsatisfiable> {
    let len = model.table.len();
    let (rotation, evaluations) = match &model.variant {
        CanaryVariant::FixedCount { count } => ((*count % len as u64) as usize, 0),
        CanaryVariant::Checksum { expr, target } => {
            let mut evaluations = 0;
            let hit = (0..len).find(|&r| {
                evaluations += 1;
                evaluate_checksum(expr, &model.table, r, model.base).is_ok_and(|v| v == *target)
            });
            match hit {
                Some(r) => (r, evaluations),
                None => return Err(Unsatisfiable { evaluations }),
            }
        }
    };
    Ok(ResolutionTable {
        base: model.base,
        rotation,
        entries: model.table.rotated_left(rotation).entries,
        evaluations,
    })
}

/// Element `index - base` of the fixpoint table.
pub fn resolve(table_fixpoint: &StringTable, base: u32, index: u32) -> Result<&str, CanaryError> {
    let len = table_fixpoint.len();
    index
        .checked_sub(base)
        .map(|k| k as usize)
        .filter(|&k| k < len)
        .map(|k| table_fixpoint.entries[k].as_str())
        .ok_or(CanaryError::IndexOutOfRange { index, base, len })
}
