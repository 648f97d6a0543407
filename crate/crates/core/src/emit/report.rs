use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// JSON schema every serialized [`LiftReport`] conforms to.
pub const REPORT_SCHEMA: &str = include_str!("../../schema/lift_report.schema.json");

/// An index written as a `0x`-prefixed hex string.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Hex(pub u32);

impl fmt::Display for Hex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}", self.0)
    }
}

impl FromStr for Hex {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s
            .strip_prefix("0x")
            .ok_or_else(|| format!("`{s}` lacks a 0x prefix"))?;
        u32::from_str_radix(digits, 16)
            .map(Hex)
            .map_err(|e| format!("`{s}`: {e}"))
    }
}

impl Serialize for Hex {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Hex {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Solved,
    Unsatisfiable,
    UnrecognizedIife,
    ParseError,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Solved => "Solved",
            Outcome::Unsatisfiable => "Unsatisfiable",
            Outcome::UnrecognizedIife => "UnrecognizedIife",
            Outcome::ParseError => "ParseError",
        })
    }
}

/// Result of lifting one file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftReport {
    pub input: String,
    pub sha256: String,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decoder: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Hex>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<Hex>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<usize>,
    #[serde(default)]
    pub terms: Vec<Hex>,
    #[serde(default)]
    pub resolved: usize,
    #[serde(default)]
    pub skipped: usize,
    #[serde(default)]
    pub edits: usize,
    #[serde(default)]
    pub elapsed_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl LiftReport {
    pub fn new(input: impl Into<String>, sha256: impl Into<String>, outcome: Outcome) -> Self {
        LiftReport {
            input: input.into(),
            sha256: sha256.into(),
            outcome,
            decoder: None,
            base: None,
            end: None,
            rotation: None,
            terms: Vec::new(),
            resolved: 0,
            skipped: 0,
            edits: 0,
            elapsed_ms: 0,
            detail: None,
        }
    }

    /// A solved report resolves every index in `base..end` and carries a
    /// rotation; any other outcome carries none.
    pub fn is_consistent(&self) -> bool {
        match self.outcome {
            Outcome::Solved => match (self.base, self.end) {
                (Some(b), Some(e)) => {
                    b <= e && self.resolved == (e.0 - b.0) as usize && self.rotation.is_some()
                }
                _ => false,
            },
            _ => self.rotation.is_none(),
        }
    }
}

pub fn write_report(report: &LiftReport) -> String {
    serde_json::to_string_pretty(report).expect("reports always serialize")
}

pub fn parse_report(text: &str) -> Result<LiftReport, serde_json::Error> {
    serde_json::from_str(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solved() -> LiftReport {
        LiftReport {
            decoder: Some("a0A".into()),
            base: Some(Hex(0x151)),
            end: Some(Hex(0x163)),
            rotation: Some(11),
            terms: vec![Hex(0x154), Hex(0x152)],
            resolved: 18,
            skipped: 1,
            edits: 30,
            elapsed_ms: 3,
            ..LiftReport::new("x.js", "00".repeat(32), Outcome::Solved)
        }
    }

    #[test]
    fn solved_document() {
        let text = write_report(&solved());
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["outcome"], "Solved");
        assert_eq!(value["base"], "0x151");
        assert_eq!(value["end"], "0x163");
        assert_eq!(value["terms"][0], "0x154");
        assert!(solved().is_consistent());
    }

    #[test]
    fn unsatisfiable_has_no_rotation() {
        let r = LiftReport::new("y.js", "ab", Outcome::Unsatisfiable);
        let value: serde_json::Value = serde_json::from_str(&write_report(&r)).unwrap();
        assert!(value.get("rotation").is_none());
        assert!(r.is_consistent());
    }

    #[test]
    fn round_trip() {
        let r = solved();
        assert_eq!(parse_report(&write_report(&r)).unwrap(), r);
        assert!(
            parse_report(r#"{"input":"a","sha256":"b","outcome":"Solved","base":"151"}"#).is_err()
        );
    }
}
