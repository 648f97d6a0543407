use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{inventory_symbols, referenced_identifiers, IifeExtract};
use crate::syntax::{parse, NodeKind, SyntaxError};

/// Name the decoder is re-exported under inside a harness.
pub const PLACEHOLDER: &str = "PLACEHOLDER";

/// Host globals a driver may use without defining them.
const HOST_GLOBALS: &[&str] = &["console"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SectionKind {
    StringArray,
    Decoder,
    Iife,
    Offsets,
    Driver,
}

impl SectionKind {
    pub const ORDER: [SectionKind; 5] = [
        SectionKind::StringArray,
        SectionKind::Decoder,
        SectionKind::Iife,
        SectionKind::Offsets,
        SectionKind::Driver,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SectionKind::StringArray => "string array",
            SectionKind::Decoder => "decoder",
            SectionKind::Iife => "rotation IIFE",
            SectionKind::Offsets => "offsets",
            SectionKind::Driver => "driver",
        }
    }
}

impl fmt::Display for SectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarnessSection {
    pub kind: SectionKind,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssemblyError {
    #[error("{kind} section does not parse: {source}")]
    Section {
        kind: SectionKind,
        source: SyntaxError,
    },
    #[error("assembled harness does not parse: {0}")]
    Concatenation(SyntaxError),
    #[error("expected the {expected} section at position {position}, found {found}")]
    Order {
        position: usize,
        expected: SectionKind,
        found: SectionKind,
    },
    #[error("harness is missing its {0} section")]
    Missing(SectionKind),
    #[error("driver uses `{0}` before any section defines it")]
    Undefined(String),
    #[error("no function name found in decoder text")]
    DecoderName,
    #[error("offset range {base:#x}..{end:#x} is reversed")]
    ReversedRange { base: u32, end: u32 },
}

/// A standalone script that rebuilds the string table the way the original
/// file does and prints every decoded index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarnessFile {
    sections: Vec<HarnessSection>,
}

impl HarnessFile {
    /// Validates section order, that every section and their concatenation
    /// parse, and that the driver only uses names defined before it.
    pub fn assemble(sections: Vec<HarnessSection>) -> Result<Self, AssemblyError> {
        for (position, expected) in SectionKind::ORDER.into_iter().enumerate() {
            match sections.get(position) {
                Some(s) if s.kind == expected => {}
                Some(s) => {
                    return Err(AssemblyError::Order {
                        position,
                        expected,
                        found: s.kind,
                    })
                }
                None => return Err(AssemblyError::Missing(expected)),
            }
        }
        if let Some(extra) = sections.get(SectionKind::ORDER.len()) {
            return Err(AssemblyError::Order {
                position: SectionKind::ORDER.len(),
                expected: SectionKind::Driver,
                found: extra.kind,
            });
        }

        let mut defined: HashSet<String> = HOST_GLOBALS.iter().map(|s| s.to_string()).collect();
        for section in &sections {
            let tree = parse(&section.text).map_err(|source| AssemblyError::Section {
                kind: section.kind,
                source,
            })?;
            let inv = inventory_symbols(&tree);
            if section.kind == SectionKind::Driver {
                let own: HashSet<&str> = inv.variables.iter().map(String::as_str).collect();
                if let Some(name) = referenced_identifiers(tree.root())
                    .into_iter()
                    .find(|n| !own.contains(n) && !defined.contains(*n))
                {
                    return Err(AssemblyError::Undefined(name.to_string()));
                }
            }
            defined.extend(inv.functions);
            defined.extend(inv.variables);
        }

        let file = HarnessFile { sections };
        parse(&file.text()).map_err(AssemblyError::Concatenation)?;
        Ok(file)
    }

    pub fn sections(&self) -> &[HarnessSection] {
        &self.sections
    }

    pub fn section(&self, kind: SectionKind) -> &str {
        &self.sections[kind as usize].text
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        for section in &self.sections {
            out.push_str(section.text.trim_end());
            out.push('\n');
        }
        out
    }
}

/// Name bound by the first statement of `text`.
fn defined_name(text: &str) -> Option<String> {
    let tree = parse(text).ok()?;
    let first = tree.body().first()?;
    let name = match &first.kind {
        NodeKind::FunctionDeclaration { id, .. } => id.as_identifier(),
        NodeKind::VariableDeclaration { declarations, .. } => match &declarations.first()?.kind {
            NodeKind::VariableDeclarator { id, .. } => id.as_identifier(),
            _ => None,
        },
        NodeKind::ExpressionStatement { expression } => match &expression.kind {
            NodeKind::AssignmentExpression { left, .. } => left.as_identifier(),
            _ => None,
        },
        _ => None,
    };
    name.map(str::to_string)
}

fn statement_text(text: &str) -> String {
    let trimmed = text.trim_end();
    if trimmed.ends_with(';') {
        trimmed.to_string()
    } else {
        format!("{trimmed};")
    }
}

/// Hex digits needed for `end`, the driver's zero-padding width.
pub fn index_width(end: u32) -> usize {
    format!("{end:x}").len()
}

fn driver_text(width: usize) -> String {
    format!(
        "let harnessIndex = HARNESS_BASE;\n\
         while (harnessIndex !== HARNESS_END) {{\n    \
         let harnessHex = harnessIndex[\"toString\"](0x10);\n    \
         while (harnessHex[\"length\"] < {width}) {{\n        \
         harnessHex = \"0\" + harnessHex;\n    \
         }}\n    \
         console[\"log\"](\"0x\" + harnessHex + \"\\t\" + {PLACEHOLDER}(harnessIndex));\n    \
         harnessIndex++;\n\
         }}\n"
    )
}

/// Assembles a harness: the string array holder, the decoder followed by
/// its `PLACEHOLDER` binding, the rotation IIFE, the two offset constants and
/// a driver printing `0x<index>\t<string>` for every index in `base..end`.
pub fn build_harness(
    iife: &IifeExtract,
    decoder_text: &str,
    array_fn_text: &str,
    base: u32,
    end: u32,
) -> Result<HarnessFile, AssemblyError> {
    if base > end {
        return Err(AssemblyError::ReversedRange { base, end });
    }
    let decoder_name = defined_name(decoder_text).ok_or(AssemblyError::DecoderName)?;
    let sections = vec![
        HarnessSection {
            kind: SectionKind::StringArray,
            text: statement_text(array_fn_text),
        },
        HarnessSection {
            kind: SectionKind::Decoder,
            text: format!(
                "{}\nconst {PLACEHOLDER} = {decoder_name};",
                statement_text(decoder_text)
            ),
        },
        HarnessSection {
            kind: SectionKind::Iife,
            text: statement_text(&iife.text),
        },
        HarnessSection {
            kind: SectionKind::Offsets,
            text: format!("const HARNESS_BASE = {base:#x};\nconst HARNESS_END = {end:#x};"),
        },
        HarnessSection {
            kind: SectionKind::Driver,
            text: driver_text(index_width(end)),
        },
    ];
    HarnessFile::assemble(sections)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("harness output line {line}: {message}")]
pub struct HarnessOutputError {
    pub line: usize,
    pub message: String,
}

/// Reads `0x<index>\t<string>` lines printed by a harness.
pub fn parse_harness_output(output: &str) -> Result<BTreeMap<u32, String>, HarnessOutputError> {
    let mut out = BTreeMap::new();
    for (i, line) in output.lines().enumerate() {
        let err = |message: &str| HarnessOutputError {
            line: i + 1,
            message: message.to_string(),
        };
        let (index, value) = line
            .split_once('\t')
            .ok_or_else(|| err("no tab separator"))?;
        let digits = index
            .strip_prefix("0x")
            .ok_or_else(|| err("index lacks 0x prefix"))?;
        let index = u32::from_str_radix(digits, 16).map_err(|_| err("index is not hex"))?;
        if out.insert(index, value.to_string()).is_some() {
            return Err(err("duplicate index"));
        }
    }
    Ok(out)
}
