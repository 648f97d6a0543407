//! Outputs of a lift: the rewritten source, the standalone harness script
//! and the JSON report.

mod harness;
mod report;
mod rewrite;

pub use harness::{
    build_harness, index_width, parse_harness_output, AssemblyError, HarnessFile,
    HarnessOutputError, HarnessSection, SectionKind, PLACEHOLDER,
};
pub use report::{parse_report, write_report, Hex, LiftReport, Outcome, REPORT_SCHEMA};
pub use rewrite::{
    apply_rewrite, plan_rewrite, plan_rewrite_excluding, quote_js_string, Edit, RewriteError,
    RewritePlan,
};
