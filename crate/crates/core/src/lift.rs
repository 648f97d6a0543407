//! The end-to-end pipeline over one file: classify, analyze, solve, rewrite.

use std::fmt::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::{
    decoder_base_offset, find_function_definition, find_iifes, largest_string_array,
    most_reassigned_variable, offset_range, AliasSet, AnalysisError, ArrayCandidate,
    FunctionDefinition, IifeExtract, OffsetRange,
};
use crate::canary::{
    extract_checksum, solve_rotation, CanaryError, CanaryModel, CanaryShape, CanaryVariant,
    ResolutionTable, StringTable, Unsatisfiable,
};
use crate::emit::{
    apply_rewrite, build_harness, plan_rewrite_excluding, AssemblyError, HarnessFile, Hex,
    LiftReport, Outcome, RewriteError, RewritePlan,
};
use crate::syntax::{parse, SyntaxError, SyntaxTree};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    /// A rotation IIFE guarded by a checksum.
    Canaried,
    /// A fixed-count push/shift shuffle.
    EmotetStyle,
    Clean,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Canaried => "canaried",
            Classification::EmotetStyle => "emotet-style",
            Classification::Clean => "clean",
        }
    }
}

/// Classifies a script by the first IIFE that matches either canary shape.
pub fn classify(source: &str) -> Result<Classification, SyntaxError> {
    let tree = parse(source)?;
    for iife in find_iifes(&tree) {
        match extract_checksum(&iife) {
            Ok(CanaryShape::Checksum(_)) => return Ok(Classification::Canaried),
            Ok(CanaryShape::FixedCount(_)) => return Ok(Classification::EmotetStyle),
            Err(_) => {}
        }
    }
    Ok(Classification::Clean)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LiftError {
    #[error(transparent)]
    Parse(#[from] SyntaxError),
    #[error("no IIFE matches a canary shape")]
    NoCanary,
    #[error("decoder `{0}` has no function definition")]
    DecoderNotFound(String),
    #[error("no decoder candidate: nothing is reassigned")]
    NoDecoder,
    #[error("no all-string array in the file")]
    NoStringArray,
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Canary(#[from] CanaryError),
    #[error(transparent)]
    Unsatisfiable(#[from] Unsatisfiable),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
    #[error("rewritten source no longer parses: {0}")]
    RewriteSyntax(SyntaxError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

impl LiftError {
    pub fn outcome(&self) -> Outcome {
        match self {
            LiftError::Parse(_) | LiftError::RewriteSyntax(_) => Outcome::ParseError,
            LiftError::Unsatisfiable(_) => Outcome::Unsatisfiable,
            _ => Outcome::UnrecognizedIife,
        }
    }
}

/// The located pieces of one canaried file.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub tree: SyntaxTree,
    pub iife: IifeExtract,
    pub decoder: FunctionDefinition,
    pub aliases: AliasSet,
    pub array: ArrayCandidate,
    pub range: OffsetRange,
    pub model: CanaryModel,
}

impl Analysis {
    pub fn array_holder_text(&self) -> &str {
        self.tree.slice(self.array.holder_span).unwrap_or_default()
    }

    pub fn terms(&self) -> Vec<u32> {
        match &self.model.variant {
            CanaryVariant::Checksum { expr, .. } => expr.terms(),
            CanaryVariant::FixedCount { .. } => Vec::new(),
        }
    }
}

pub fn analyze(source: &str) -> Result<Analysis, LiftError> {
    let tree = parse(source)?;
    let (iife, shape) = find_iifes(&tree)
        .into_iter()
        .find_map(|iife| extract_checksum(&iife).ok().map(|shape| (iife, shape)))
        .ok_or(LiftError::NoCanary)?;

    let decoder_name = match &shape {
        CanaryShape::Checksum(c) => c.decoder.clone(),
        CanaryShape::FixedCount(_) => {
            most_reassigned_variable(&tree)
                .ok_or(LiftError::NoDecoder)?
                .0
        }
    };
    let decoder = find_function_definition(&tree, &decoder_name)
        .ok_or_else(|| LiftError::DecoderNotFound(decoder_name.clone()))?;
    let array = largest_string_array(&tree).ok_or(LiftError::NoStringArray)?;
    let base = decoder_base_offset(&decoder.as_statement(), &tree, &decoder_name)?;
    let range = offset_range(base, &array);
    let variant = match shape {
        CanaryShape::Checksum(c) => CanaryVariant::Checksum {
            expr: c.expr,
            target: c.target,
        },
        CanaryShape::FixedCount(f) => CanaryVariant::FixedCount { count: f.count },
    };
    let table = StringTable::new(array.elements.clone());
    let model = CanaryModel::new(iife.clone(), decoder_name.as_str(), base, table, variant)?;
    let aliases = AliasSet::resolve(&tree, &decoder_name);
    Ok(Analysis {
        tree,
        iife,
        decoder,
        aliases,
        array,
        range,
        model,
    })
}

/// A finished lift of one file.
#[derive(Clone, Debug)]
pub struct Lifted {
    pub report: LiftReport,
    /// Rewritten source, present only when solved.
    pub output: Option<String>,
    pub resolution: Option<ResolutionTable>,
    pub plan: Option<RewritePlan>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(64);
    for b in Sha256::digest(bytes) {
        write!(out, "{b:02x}").unwrap();
    }
    out
}

/// Solves the canary and rewrites every in-range decoder call outside the
/// rotation IIFE into the string it resolves to.
pub fn lift(input: &str, source: &str) -> Lifted {
    let started = Instant::now();
    let mut report = LiftReport::new(input, sha256_hex(source.as_bytes()), Outcome::Solved);
    let mut lifted = Lifted {
        report: report.clone(),
        output: None,
        resolution: None,
        plan: None,
    };
    let result = analyze(source).and_then(|analysis| {
        report.decoder = Some(analysis.model.decoder_name.clone());
        report.base = Some(Hex(analysis.range.start));
        report.end = Some(Hex(analysis.range.end));
        report.terms = analysis.terms().into_iter().map(Hex).collect();
        let resolution = solve_rotation(&analysis.model)?;
        let plan = plan_rewrite_excluding(
            &analysis.tree,
            &analysis.aliases,
            &resolution,
            &[analysis.iife.span],
        );
        let output = apply_rewrite(source, &plan)?;
        parse(&output).map_err(LiftError::RewriteSyntax)?;
        Ok((resolution, plan, output))
    });
    match result {
        Ok((resolution, plan, output)) => {
            report.rotation = Some(resolution.rotation);
            report.resolved = resolution.len();
            report.skipped = plan.skipped.len();
            report.edits = plan.edits.len();
            lifted.output = Some(output);
            lifted.resolution = Some(resolution);
            lifted.plan = Some(plan);
        }
        Err(e) => {
            report.outcome = e.outcome();
            report.detail = Some(e.to_string());
        }
    }
    report.elapsed_ms = started.elapsed().as_millis() as u64;
    lifted.report = report;
    lifted
}

/// The standalone harness for a canaried file.
pub fn harness(source: &str) -> Result<HarnessFile, LiftError> {
    let analysis = analyze(source)?;
    Ok(build_harness(
        &analysis.iife,
        &analysis.decoder.as_statement(),
        analysis.array_holder_text(),
        analysis.range.start,
        analysis.range.end,
    )?)
}
