use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::syntax::{DeclKind, Node, NodeKind, Span, SyntaxTree};

/// Names declared anywhere in a file.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolInventory {
    /// Function declarations plus declarators initialised with a function.
    pub functions: Vec<String>,
    /// Every variable declarator.
    pub variables: Vec<String>,
}

impl SymbolInventory {
    pub fn contains(&self, name: &str) -> bool {
        self.functions.iter().any(|f| f == name) || self.variables.iter().any(|v| v == name)
    }
}

fn push_unique(list: &mut Vec<String>, name: &str) {
    if !list.iter().any(|n| n == name) {
        list.push(name.to_string());
    }
}

fn is_function_init(init: Option<&Node>) -> bool {
    matches!(
        init.map(|n| &n.kind),
        Some(NodeKind::FunctionExpression { .. } | NodeKind::ArrowFunctionExpression { .. })
    )
}

pub fn inventory_symbols(tree: &SyntaxTree) -> SymbolInventory {
    let mut inv = SymbolInventory::default();
    tree.root().walk(&mut |node, _| match &node.kind {
        NodeKind::FunctionDeclaration { id, .. } => {
            if let Some(name) = id.as_identifier() {
                push_unique(&mut inv.functions, name);
            }
        }
        NodeKind::VariableDeclaration { declarations, .. } => {
            for decl in declarations {
                if let NodeKind::VariableDeclarator { id, .. } = &decl.kind {
                    if let Some(name) = id.as_identifier() {
                        push_unique(&mut inv.variables, name);
                    }
                }
            }
        }
        NodeKind::VariableDeclarator { id, init } if is_function_init(init.as_deref()) => {
            if let Some(name) = id.as_identifier() {
                push_unique(&mut inv.functions, name);
            }
        }
        _ => {}
    });
    inv
}

/// A function declaration that only refers to names the file itself defines.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosedFunction {
    pub name: String,
    pub text: String,
    pub span: Span,
}

/// Names bound inside `function`: its parameters, and every parameter,
/// declarator, function name and catch parameter nested within it.
fn local_bindings(function: &Node) -> HashSet<&str> {
    let mut names = HashSet::new();
    function.walk(&mut |node, _| match &node.kind {
        NodeKind::FunctionDeclaration { id, params, .. } => {
            names.extend(id.as_identifier());
            names.extend(params.iter().filter_map(Node::as_identifier));
        }
        NodeKind::FunctionExpression { id, params, .. } => {
            names.extend(id.as_deref().and_then(Node::as_identifier));
            names.extend(params.iter().filter_map(Node::as_identifier));
        }
        NodeKind::ArrowFunctionExpression { params, .. } => {
            names.extend(params.iter().filter_map(Node::as_identifier));
        }
        NodeKind::VariableDeclarator { id, .. } => names.extend(id.as_identifier()),
        NodeKind::CatchClause { param: Some(p), .. } => names.extend(p.as_identifier()),
        _ => {}
    });
    names
}

/// Identifier references in `node`, skipping property names of dotted
/// member expressions.
pub(crate) fn referenced_identifiers(node: &Node) -> Vec<&str> {
    let mut out = Vec::new();
    node.walk(&mut |n, ancestors| {
        let Some(name) = n.as_identifier() else {
            return;
        };
        if let Some(parent) = ancestors.last() {
            if let NodeKind::MemberExpression {
                property,
                computed: false,
                ..
            } = &parent.kind
            {
                if std::ptr::eq(property.as_ref(), n) {
                    return;
                }
            }
        }
        out.push(name);
    });
    out
}

/// Function declarations whose bodies reference nothing outside the file's
/// own inventory, their own bindings, or property names.
pub fn filter_closed_functions(tree: &SyntaxTree, inv: &SymbolInventory) -> Vec<ClosedFunction> {
    let mut out = Vec::new();
    tree.root().walk(&mut |node, _| {
        let NodeKind::FunctionDeclaration { id, body, .. } = &node.kind else {
            return;
        };
        let locals = local_bindings(node);
        let closed = referenced_identifiers(body)
            .into_iter()
            .all(|name| locals.contains(name) || inv.contains(name));
        if closed {
            out.push(ClosedFunction {
                name: id.as_identifier().unwrap_or_default().to_string(),
                text: tree.text(node).to_string(),
                span: node.span,
            });
        }
    });
    out
}

/// Per-name count of declarators and assignments whose right-hand side is a
/// bare identifier.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReassignmentCensus {
    pub counts: HashMap<String, usize>,
    /// Names in order of their first counted occurrence.
    order: Vec<String>,
}

impl ReassignmentCensus {
    pub fn of(tree: &SyntaxTree) -> Self {
        let mut census = ReassignmentCensus::default();
        tree.root().walk(&mut |node, _| {
            let source = match &node.kind {
                NodeKind::VariableDeclarator {
                    init: Some(init), ..
                } => init.as_identifier(),
                NodeKind::AssignmentExpression { right, .. } => right.as_identifier(),
                _ => None,
            };
            if let Some(name) = source {
                census.bump(name);
            }
        });
        census
    }

    fn bump(&mut self, name: &str) {
        let count = self.counts.entry(name.to_string()).or_insert(0);
        if *count == 0 {
            self.order.push(name.to_string());
        }
        *count += 1;
    }

    pub fn get(&self, name: &str) -> usize {
        self.counts.get(name).copied().unwrap_or(0)
    }

    /// Highest count; ties go to the name counted first in source order.
    pub fn most_reassigned(&self) -> Option<(String, usize)> {
        let mut best: Option<(&String, usize)> = None;
        for name in &self.order {
            let count = self.counts[name];
            if best.is_none_or(|(_, c)| count > c) {
                best = Some((name, count));
            }
        }
        best.map(|(n, c)| (n.clone(), c))
    }
}

pub fn most_reassigned_variable(tree: &SyntaxTree) -> Option<(String, usize)> {
    ReassignmentCensus::of(tree).most_reassigned()
}

/// Where a named function is defined.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionDefinition {
    pub name: String,
    /// Declarator (`d = function ...`) or declaration (`function d ...`) text.
    pub text: String,
    pub span: Span,
    /// Set when the definition is a declarator, to the keyword of its
    /// enclosing declaration.
    pub declarator_kind: Option<DeclKind>,
}

impl FunctionDefinition {
    /// The definition as a standalone statement.
    pub fn as_statement(&self) -> String {
        match self.declarator_kind {
            Some(kind) => format!("{} {};", kind.as_str(), self.text),
            None => self.text.clone(),
        }
    }
}

/// Finds the function bound to `name`. When several definitions exist, the
/// last one in traversal order wins.
pub fn find_function_definition(tree: &SyntaxTree, name: &str) -> Option<FunctionDefinition> {
    let mut found = None;
    tree.root().walk(&mut |node, ancestors| match &node.kind {
        NodeKind::VariableDeclarator { id, init }
            if id.as_identifier() == Some(name) && is_function_init(init.as_deref()) =>
        {
            let declarator_kind = match ancestors.last().map(|a| &a.kind) {
                Some(NodeKind::VariableDeclaration { kind, .. }) => Some(*kind),
                _ => None,
            };
            found = Some(FunctionDefinition {
                name: name.to_string(),
                text: tree.text(node).to_string(),
                span: node.span,
                declarator_kind,
            });
        }
        NodeKind::FunctionDeclaration { id, .. } if id.as_identifier() == Some(name) => {
            found = Some(FunctionDefinition {
                name: name.to_string(),
                text: tree.text(node).to_string(),
                span: node.span,
                declarator_kind: None,
            });
        }
        _ => {}
    });
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    const AC1: &str = r#"(function (u, A) {
    const h = [ "763343ZEEmqI", "10MjwbHE", "9850357GcgXRv",
    "VALUE_7", "143668KLzuHC", "2744166fvKFHm", "159958nePvPH",
    "VALUE_1", "1UiidKZ", "VALUE_2", "51QZYsCO", "9rBvnZg",
    "VALUE_3", "6312632cMablh", "VALUE_4", "953875DutVaJ",
    "VALUE_5", "VALUE_6", ];

    while (true) {
        try {
            const D =
                (parseInt(h[3]) / 1) *
                (-parseInt(h[1]) / 2);
            if (D === 0x6f0ff) break;
            else h["push"](h["shift"]());
        } catch (v) {
            h["push"](h["shift"]());
        }
    }
})(a0u, 0x6f0ff);"#;

    #[test]
    fn inventory_cases() {
        let tree = parse("function a0u(){} const h = () => 1; let x = 2;").unwrap();
        let inv = inventory_symbols(&tree);
        assert_eq!(inv.functions, ["a0u", "h"]);
        assert_eq!(inv.variables, ["h", "x"]);
    }

    #[test]
    fn inventory_of_listing_skips_params() {
        let inv = inventory_symbols(&parse(AC1).unwrap());
        assert!(inv.functions.is_empty());
        assert_eq!(inv.variables, ["h", "D"]);
    }

    #[test]
    fn inventory_of_empty_program() {
        assert_eq!(
            inventory_symbols(&parse("").unwrap()),
            SymbolInventory::default()
        );
    }

    #[test]
    fn inventory_names_are_unique() {
        let inv = inventory_symbols(
            &parse("var a = 1; var a = 2; function f(){} function f(){}").unwrap(),
        );
        assert_eq!(inv.variables, ["a"]);
        assert_eq!(inv.functions, ["f"]);
    }

    #[test]
    fn params_make_a_function_closed() {
        let tree = parse("function f(x){return x+1;}").unwrap();
        let closed = filter_closed_functions(&tree, &SymbolInventory::default());
        assert_eq!(closed.len(), 1);
        assert_eq!(closed[0].name, "f");
        assert_eq!(closed[0].text, "function f(x){return x+1;}");
    }

    #[test]
    fn undeclared_global_excludes() {
        let tree = parse(r#"function g(){return atob("x");}"#).unwrap();
        let inv = inventory_symbols(&tree);
        assert!(filter_closed_functions(&tree, &inv).is_empty());
    }

    #[test]
    fn property_names_and_catch_params_are_not_references() {
        let src = r#"
function a0u() { const t = ["a", "b"]; a0u = function () { return t; }; return a0u(); }
function dec(i) { i = i - 0x10; const e = a0u(); try { return e[i].length; } catch (err) { return err; } }
function leak() { return document.title; }
"#;
        let tree = parse(src).unwrap();
        let inv = inventory_symbols(&tree);
        let names: Vec<String> = filter_closed_functions(&tree, &inv)
            .into_iter()
            .map(|c| c.name)
            .collect();
        assert_eq!(names, ["a0u", "dec"]);
    }

    #[test]
    fn census_counts_and_argmax() {
        let tree = parse("const h = a0A; const k = a0A; b = a0A;").unwrap();
        assert_eq!(
            most_reassigned_variable(&tree),
            Some(("a0A".to_string(), 3))
        );
        assert_eq!(
            most_reassigned_variable(&parse("const x = 1;").unwrap()),
            None
        );
    }

    #[test]
    fn census_ties_go_to_first_occurrence() {
        let tree = parse("var p = zed; var q = alpha; var r = alpha; var s = zed;").unwrap();
        assert_eq!(
            most_reassigned_variable(&tree),
            Some(("zed".to_string(), 2))
        );
    }

    #[test]
    fn function_definition_lookup() {
        let tree = parse("const d = (i) => tbl[i];").unwrap();
        let def = find_function_definition(&tree, "d").unwrap();
        assert_eq!(def.text, "d = (i) => tbl[i]");
        assert_eq!(def.as_statement(), "const d = (i) => tbl[i];");
        assert!(find_function_definition(&tree, "nope").is_none());
    }

    #[test]
    fn later_definition_wins() {
        let tree =
            parse("function d(a) { return 1; }\nvar d = function (b) { return 2; };").unwrap();
        let def = find_function_definition(&tree, "d").unwrap();
        assert!(def.text.starts_with("d = function (b)"));
        assert_eq!(def.declarator_kind, Some(DeclKind::Var));
    }
}
