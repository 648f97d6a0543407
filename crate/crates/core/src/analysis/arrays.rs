use serde::{Deserialize, Serialize};

use crate::syntax::{Node, NodeKind, Span, SyntaxTree};

/// An array literal made only of string literals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayCandidate {
    /// Name of the nearest enclosing function, if it has one.
    pub owner_function: Option<String>,
    pub elements: Vec<String>,
    pub element_spans: Vec<Span>,
    pub span: Span,
    /// The top-level statement holding the array.
    pub holder_span: Span,
}

impl ArrayCandidate {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Name a function node is known by: its own id, or the declarator or
/// assignment target it initialises.
fn function_name(function: &Node, parent: Option<&Node>) -> Option<String> {
    match &function.kind {
        NodeKind::FunctionDeclaration { id, .. } => return id.as_identifier().map(str::to_string),
        NodeKind::FunctionExpression { id: Some(id), .. } => {
            return id.as_identifier().map(str::to_string)
        }
        _ => {}
    }
    match parent.map(|p| &p.kind) {
        Some(NodeKind::VariableDeclarator { id, .. }) => id.as_identifier().map(str::to_string),
        Some(NodeKind::AssignmentExpression { left, .. }) => {
            left.as_identifier().map(str::to_string)
        }
        _ => None,
    }
}

/// The all-string array with the most elements; ties go to the earliest.
/// Empty arrays are never candidates.
pub fn largest_string_array(tree: &SyntaxTree) -> Option<ArrayCandidate> {
    let mut best: Option<ArrayCandidate> = None;
    tree.root().walk(&mut |node, ancestors| {
        let NodeKind::ArrayExpression { elements } = &node.kind else {
            return;
        };
        if elements.is_empty() || best.as_ref().is_some_and(|b| b.len() >= elements.len()) {
            return;
        }
        let Some(strings) = elements
            .iter()
            .map(|e| e.as_string().map(str::to_string))
            .collect::<Option<Vec<_>>>()
        else {
            return;
        };
        let owner_function = ancestors
            .iter()
            .enumerate()
            .rev()
            .find(|(_, a)| a.is_function())
            .and_then(|(i, f)| function_name(f, i.checked_sub(1).map(|p| ancestors[p])));
        let holder_span = ancestors.get(1).map_or(node.span, |n| n.span);
        best = Some(ArrayCandidate {
            owner_function,
            elements: strings,
            element_spans: elements.iter().map(|e| e.span).collect(),
            span: node.span,
            holder_span,
        });
    });
    best
}
