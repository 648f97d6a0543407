use serde::{Deserialize, Serialize};

use crate::syntax::{parse, Node, NodeKind, Span, SyntaxTree};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CalleeKind {
    FunctionExpression,
    ArrowFunctionExpression,
}

/// An immediately invoked function expression cut out of its file.
#[derive(Clone, Debug, PartialEq)]
pub struct IifeExtract {
    /// Captured text, including the wrapping `(` and trailing `;`/`)` when
    /// the capture rule takes them.
    pub text: String,
    /// Span of `text` in the original source.
    pub span: Span,
    /// Span of the call expression node itself.
    pub call_span: Span,
    pub callee_kind: CalleeKind,
    pub argument_spans: Vec<Span>,
}

/// Every call whose callee is a function or arrow expression, in source
/// order.
///
/// The capture widens one byte to the left over a `(` and one byte to the
/// right over a `;` or `)`. When a widened capture would not reparse on its
/// own (an IIFE nested in an argument list, say) the narrower variants are
/// tried in turn.
pub fn find_iifes(tree: &SyntaxTree) -> Vec<IifeExtract> {
    let src = tree.source().as_bytes();
    let mut out = Vec::new();
    tree.root().walk(&mut |node, _| {
        let NodeKind::CallExpression { callee, arguments } = &node.kind else {
            return;
        };
        let callee_kind = match callee.kind {
            NodeKind::FunctionExpression { .. } => CalleeKind::FunctionExpression,
            NodeKind::ArrowFunctionExpression { .. } => CalleeKind::ArrowFunctionExpression,
            _ => return,
        };
        let span = node.span;
        let widen_left = span.start > 0 && src[span.start - 1] == b'(';
        let widen_right = src.get(span.end).is_some_and(|&b| b == b';' || b == b')');
        let captured = capture_variants(widen_left, widen_right)
            .into_iter()
            .map(|(l, r)| Span::new(span.start - l as usize, span.end + r as usize))
            .find(|s| reparses_as_call(&tree.source()[s.start..s.end]))
            .unwrap_or(Span::new(
                span.start - widen_left as usize,
                span.end + widen_right as usize,
            ));
        out.push(IifeExtract {
            text: tree.source()[captured.start..captured.end].to_string(),
            span: captured,
            call_span: span,
            callee_kind,
            argument_spans: arguments.iter().map(|a| a.span).collect(),
        });
    });
    out
}

fn capture_variants(left: bool, right: bool) -> Vec<(bool, bool)> {
    let mut out = Vec::with_capacity(4);
    for v in [(left, right), (false, right), (left, false), (false, false)] {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// True if `text` is exactly one expression statement holding a call.
pub(crate) fn reparses_as_call(text: &str) -> bool {
    match parse(text) {
        Ok(tree) => matches!(
            tree.body(),
            [Node {
                kind: NodeKind::ExpressionStatement { expression },
                ..
            }] if matches!(expression.kind, NodeKind::CallExpression { .. })
        ),
        Err(_) => false,
    }
}
