use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{literal_index, AliasSet};
use crate::canary::ResolutionTable;
use crate::syntax::{NodeKind, Span, SyntaxTree};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edit {
    pub span: Span,
    pub replacement: String,
}

/// Replacements to apply to one source file.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewritePlan {
    /// Sorted by span, never overlapping.
    pub edits: Vec<Edit>,
    /// Decoder calls left alone: computed, out-of-range or extra arguments.
    pub skipped: Vec<Span>,
}

impl RewritePlan {
    pub fn is_empty(&self) -> bool {
        self.edits.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RewriteError {
    #[error("edits at {first} and {second} overlap")]
    Overlap { first: Span, second: Span },
    #[error("edit at {span} lies outside a source of {len} bytes")]
    OutOfBounds { span: Span, len: usize },
}

/// A double-quoted JavaScript string literal for `s`.
pub fn quote_js_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            '\u{8}' => out.push_str("\\b"),
            '\u{c}' => out.push_str("\\f"),
            c if c < ' ' || c == '\u{7f}' || c == '\u{2028}' || c == '\u{2029}' => {
                out.push_str(&format!("\\u{:04x}", c as u32))
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Plans a string literal for every decoder call (direct or through an
/// alias) that takes exactly one numeric literal inside the solved range.
pub fn plan_rewrite(
    tree: &SyntaxTree,
    aliases: &AliasSet,
    resolution: &ResolutionTable,
) -> RewritePlan {
    plan_rewrite_excluding(tree, aliases, resolution, &[])
}

/// As [`plan_rewrite`], leaving calls inside any `excluded` span untouched.
pub fn plan_rewrite_excluding(
    tree: &SyntaxTree,
    aliases: &AliasSet,
    resolution: &ResolutionTable,
    excluded: &[Span],
) -> RewritePlan {
    let mut plan = RewritePlan::default();
    let mut covered: Option<Span> = None;
    tree.root().walk(&mut |node, _| {
        let NodeKind::CallExpression { callee, arguments } = &node.kind else {
            return;
        };
        let Some(name) = callee.as_identifier() else {
            return;
        };
        if !aliases.refers_to_decoder(name, node.span)
            || excluded.iter().any(|s| s.contains(node.span))
            || covered.is_some_and(|c| c.contains(node.span))
        {
            return;
        }
        let resolved = match arguments.as_slice() {
            [arg] => literal_index(arg).and_then(|i| resolution.get(i)),
            _ => None,
        };
        match resolved {
            Some(value) => {
                covered = Some(node.span);
                plan.edits.push(Edit {
                    span: node.span,
                    replacement: quote_js_string(value),
                });
            }
            None => plan.skipped.push(node.span),
        }
    });
    plan
}

/// `source` with every edit applied. Bytes outside edit spans are copied
/// through unchanged.
pub fn apply_rewrite(source: &str, plan: &RewritePlan) -> Result<String, RewriteError> {
    let mut edits: Vec<&Edit> = plan.edits.iter().collect();
    edits.sort_by_key(|e| e.span);
    for pair in edits.windows(2) {
        if pair[0].span.end > pair[1].span.start {
            return Err(RewriteError::Overlap {
                first: pair[0].span,
                second: pair[1].span,
            });
        }
    }
    let mut out = String::with_capacity(source.len());
    let mut cursor = 0;
    for edit in edits {
        let span = edit.span;
        if span.end > source.len()
            || !source.is_char_boundary(span.start)
            || !source.is_char_boundary(span.end)
        {
            return Err(RewriteError::OutOfBounds {
                span,
                len: source.len(),
            });
        }
        out.push_str(&source[cursor..span.start]);
        out.push_str(&edit.replacement);
        cursor = span.end;
    }
    out.push_str(&source[cursor..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    fn resolution() -> ResolutionTable {
        ResolutionTable {
            base: 0x154,
            rotation: 0,
            entries: vec!["toLowerCase".into(), "a\"b\\c\n".into()],
            evaluations: 1,
        }
    }

    #[test]
    fn rewrites_aliased_calls_and_skips_the_rest() {
        let src =
            "function p(i) { const h = a0A; return h(0x154) + h(i) + h(0x999) + a0A(0x155); }";
        let tree = parse(src).unwrap();
        let aliases = AliasSet::resolve(&tree, "a0A");
        let plan = plan_rewrite(&tree, &aliases, &resolution());
        assert_eq!(plan.edits.len(), 2);
        assert_eq!(plan.skipped.len(), 2);
        let out = apply_rewrite(src, &plan).unwrap();
        assert_eq!(
            out,
            r#"function p(i) { const h = a0A; return "toLowerCase" + h(i) + h(0x999) + "a\"b\\c\n"; }"#
        );
        parse(&out).unwrap();
    }

    #[test]
    fn empty_plan_is_identity() {
        let src = "console.log(1);\n";
        let tree = parse(src).unwrap();
        let plan = plan_rewrite(&tree, &AliasSet::resolve(&tree, "a0A"), &resolution());
        assert!(plan.is_empty());
        assert_eq!(apply_rewrite(src, &plan).unwrap(), src);
    }

    #[test]
    fn excluded_spans_are_left_alone() {
        let src = "f(h(0x154)); g(h(0x154));";
        let tree = parse(src).unwrap();
        let aliases = AliasSet::resolve(&tree, "h");
        let plan = plan_rewrite_excluding(&tree, &aliases, &resolution(), &[Span::new(0, 12)]);
        assert_eq!(
            apply_rewrite(src, &plan).unwrap(),
            r#"f(h(0x154)); g("toLowerCase");"#
        );
    }

    #[test]
    fn overlap_is_rejected() {
        let plan = RewritePlan {
            edits: vec![
                Edit {
                    span: Span::new(0, 4),
                    replacement: "x".into(),
                },
                Edit {
                    span: Span::new(3, 5),
                    replacement: "y".into(),
                },
            ],
            skipped: vec![],
        };
        assert!(matches!(
            apply_rewrite("abcdef", &plan),
            Err(RewriteError::Overlap { .. })
        ));
        let plan = RewritePlan {
            edits: vec![Edit {
                span: Span::new(4, 9),
                replacement: "x".into(),
            }],
            skipped: vec![],
        };
        assert!(matches!(
            apply_rewrite("abcdef", &plan),
            Err(RewriteError::OutOfBounds { .. })
        ));
    }

    #[test]
    fn quoting() {
        assert_eq!(quote_js_string("\u{1}\u{2028}é"), "\"\\u0001\\u2028é\"");
        assert_eq!(quote_js_string(""), "\"\"");
    }
}
