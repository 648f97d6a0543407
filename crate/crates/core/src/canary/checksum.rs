use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::CanaryError;
use crate::analysis::{literal_index, IifeExtract};
use crate::syntax::{parse, BinaryOp, Node, NodeKind, UnaryOp};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn as_str(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            ArithOp::Add | ArithOp::Sub => 1,
            ArithOp::Mul | ArithOp::Div => 2,
        }
    }

    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            ArithOp::Add => a + b,
            ArithOp::Sub => a - b,
            ArithOp::Mul => a * b,
            ArithOp::Div => a / b,
        }
    }

    fn from_binary(op: BinaryOp) -> Option<Self> {
        Some(match op {
            BinaryOp::Add => ArithOp::Add,
            BinaryOp::Sub => ArithOp::Sub,
            BinaryOp::Mul => ArithOp::Mul,
            BinaryOp::Div => ArithOp::Div,
            _ => return None,
        })
    }
}

/// Arithmetic over `parseInt(decoder(i))` terms and numeric constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChecksumExpr {
    Const(f64),
    Term(u32),
    Neg(Box<ChecksumExpr>),
    Binary {
        op: ArithOp,
        left: Box<ChecksumExpr>,
        right: Box<ChecksumExpr>,
    },
}

impl ChecksumExpr {
    pub fn binary(op: ArithOp, left: ChecksumExpr, right: ChecksumExpr) -> Self {
        ChecksumExpr::Binary {
            op,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn negate(inner: ChecksumExpr) -> Self {
        ChecksumExpr::Neg(Box::new(inner))
    }

    /// Term indices in source order, repeats included.
    pub fn terms(&self) -> Vec<u32> {
        let mut out = Vec::new();
        self.collect_terms(&mut out);
        out
    }

    fn collect_terms(&self, out: &mut Vec<u32>) {
        match self {
            ChecksumExpr::Const(_) => {}
            ChecksumExpr::Term(i) => out.push(*i),
            ChecksumExpr::Neg(e) => e.collect_terms(out),
            ChecksumExpr::Binary { left, right, .. } => {
                left.collect_terms(out);
                right.collect_terms(out);
            }
        }
    }

    /// Evaluates in IEEE-754 doubles with `term` supplying each leaf value.
    pub fn evaluate_with<E>(&self, term: &mut impl FnMut(u32) -> Result<f64, E>) -> Result<f64, E> {
        Ok(match self {
            ChecksumExpr::Const(c) => *c,
            ChecksumExpr::Term(i) => term(*i)?,
            ChecksumExpr::Neg(e) => -e.evaluate_with(term)?,
            ChecksumExpr::Binary { op, left, right } => {
                let l = left.evaluate_with(term)?;
                let r = right.evaluate_with(term)?;
                op.apply(l, r)
            }
        })
    }

    /// JavaScript source for the expression, each term rendered as
    /// `parseInt(<callee>(0x..))`. Products of quotients are parenthesised
    /// the way obfuscator output does it.
    pub fn render(&self, callee: &str) -> String {
        let mut out = String::new();
        self.render_into(callee, &mut out);
        out
    }

    fn precedence(&self) -> u8 {
        match self {
            ChecksumExpr::Binary { op, .. } => op.precedence(),
            ChecksumExpr::Neg(_) => 3,
            ChecksumExpr::Const(c) if *c < 0.0 || c.is_sign_negative() => 3,
            _ => 4,
        }
    }

    fn render_into(&self, callee: &str, out: &mut String) {
        match self {
            ChecksumExpr::Const(c) => out.push_str(&render_number(*c)),
            ChecksumExpr::Term(i) => out.push_str(&format!("parseInt({callee}({i:#x}))")),
            ChecksumExpr::Neg(e) => {
                out.push('-');
                let wrap = e.precedence() < 4;
                wrap_if(wrap, out, |out| e.render_into(callee, out));
            }
            ChecksumExpr::Binary { op, left, right } => {
                let p = op.precedence();
                let multiplicative = p == 2;
                let wrap_left = left.precedence() < p || (multiplicative && left.precedence() == 2);
                let wrap_right = right.precedence() <= p;
                wrap_if(wrap_left, out, |out| left.render_into(callee, out));
                out.push(' ');
                out.push_str(op.as_str());
                out.push(' ');
                wrap_if(wrap_right, out, |out| right.render_into(callee, out));
            }
        }
    }
}

fn wrap_if(wrap: bool, out: &mut String, body: impl FnOnce(&mut String)) {
    if wrap {
        out.push('(');
    }
    body(out);
    if wrap {
        out.push(')');
    }
}

/// Hex for non-negative integers, shortest round-trip decimal otherwise.
pub fn render_number(v: f64) -> String {
    if v.is_sign_negative() && v != 0.0 || v == 0.0 && v.is_sign_negative() {
        return format!("-{}", render_number(-v));
    }
    if v.fract() == 0.0 && v < 9.007_199_254_740_992e15 {
        format!("{:#x}", v as u64)
    } else {
        format!("{v:?}")
    }
}

impl fmt::Display for ChecksumExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render("p"))
    }
}

/// The checksum half of a canary IIFE.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChecksumCanary {
    pub expr: ChecksumExpr,
    pub target: f64,
    /// Name the terms call, as written inside the IIFE.
    pub alias: String,
    /// What `alias` is bound to, or `alias` itself when unbound.
    pub decoder: String,
    /// The variable compared against the target.
    pub check_variable: String,
    /// Identifier passed as the IIFE's first argument.
    pub table_source: Option<String>,
}

/// A fixed-count push/shift shuffle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedCountCanary {
    /// Number of push/shift iterations the loop executes.
    pub count: u64,
    pub table_source: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CanaryShape {
    Checksum(ChecksumCanary),
    FixedCount(FixedCountCanary),
}

impl CanaryShape {
    pub fn table_source(&self) -> Option<&str> {
        match self {
            CanaryShape::Checksum(c) => c.table_source.as_deref(),
            CanaryShape::FixedCount(c) => c.table_source.as_deref(),
        }
    }
}

fn unrecognized(reason: impl Into<String>) -> CanaryError {
    CanaryError::UnrecognizedIife(reason.into())
}

/// Recognises a checksum canary or a fixed-count shuffle in an IIFE.
pub fn extract_checksum(iife: &IifeExtract) -> Result<CanaryShape, CanaryError> {
    let tree = parse(&iife.text).map_err(CanaryError::Syntax)?;
    let call = tree
        .root()
        .descendants()
        .into_iter()
        .find(|n| match &n.kind {
            NodeKind::CallExpression { callee, .. } => callee.is_function(),
            _ => false,
        })
        .ok_or_else(|| unrecognized("no immediately invoked function"))?;
    let NodeKind::CallExpression { callee, arguments } = &call.kind else {
        unreachable!()
    };
    let table_source = arguments
        .first()
        .and_then(Node::as_identifier)
        .map(str::to_string);

    match checksum_shape(callee, arguments)? {
        Some(mut c) => {
            c.table_source = table_source;
            Ok(CanaryShape::Checksum(c))
        }
        None => match fixed_count_shape(callee, arguments)? {
            Some(count) => Ok(CanaryShape::FixedCount(FixedCountCanary {
                count,
                table_source,
            })),
            None => Err(unrecognized("no checksum loop and no fixed-count shuffle")),
        },
    }
}

/// `literal` or `-literal`.
fn signed_number(node: &Node) -> Option<f64> {
    match &node.kind {
        NodeKind::UnaryExpression {
            op: UnaryOp::Neg,
            argument,
        } => argument.as_number().map(|v| -v),
        NodeKind::UnaryExpression {
            op: UnaryOp::Plus,
            argument,
        } => argument.as_number(),
        _ => node.as_number(),
    }
}

fn checksum_shape(
    function: &Node,
    arguments: &[Node],
) -> Result<Option<ChecksumCanary>, CanaryError> {
    let mut bindings: HashMap<&str, &str> = HashMap::new();
    for n in function.descendants() {
        if let NodeKind::VariableDeclarator {
            id,
            init: Some(init),
        } = &n.kind
        {
            if let (Some(a), Some(b)) = (id.as_identifier(), init.as_identifier()) {
                bindings.insert(a, b);
            }
        }
    }

    let loops = function
        .descendants()
        .into_iter()
        .filter_map(|n| match &n.kind {
            NodeKind::WhileStatement { body, .. } => Some(body.as_ref()),
            _ => None,
        });
    for body in loops {
        let Some(NodeKind::TryStatement { block, .. }) = body
            .descendants()
            .into_iter()
            .map(|n| &n.kind)
            .find(|k| matches!(k, NodeKind::TryStatement { .. }))
        else {
            continue;
        };
        for decl in block.descendants() {
            let NodeKind::VariableDeclarator {
                id,
                init: Some(init),
            } = &decl.kind
            else {
                continue;
            };
            let Some(check) = id.as_identifier() else {
                continue;
            };
            let mut callee = None;
            let Some(expr) = lower(init, &mut callee) else {
                continue;
            };
            if expr.terms().is_empty() {
                continue;
            }
            let Some(target_node) = comparison_partner(body, check) else {
                continue;
            };
            let target = target_value(function, arguments, target_node)?;
            let alias = callee.unwrap_or_default();
            let decoder = bindings
                .get(alias.as_str())
                .map_or(alias.clone(), |d| d.to_string());
            return Ok(Some(ChecksumCanary {
                expr,
                target,
                alias,
                decoder,
                check_variable: check.to_string(),
                table_source: None,
            }));
        }
    }
    Ok(None)
}

/// Lowers a JS expression into a checksum expression. Every term must call
/// the same callee.
fn lower(node: &Node, callee: &mut Option<String>) -> Option<ChecksumExpr> {
    match &node.kind {
        NodeKind::NumericLiteral { value, .. } => Some(ChecksumExpr::Const(*value)),
        NodeKind::UnaryExpression { op, argument } => {
            let inner = lower(argument, callee)?;
            match op {
                UnaryOp::Neg => Some(ChecksumExpr::negate(inner)),
                UnaryOp::Plus => Some(inner),
                _ => None,
            }
        }
        NodeKind::BinaryExpression { op, left, right } => Some(ChecksumExpr::binary(
            ArithOp::from_binary(*op)?,
            lower(left, callee)?,
            lower(right, callee)?,
        )),
        NodeKind::CallExpression {
            callee: parse_int,
            arguments,
        } if parse_int.as_identifier() == Some("parseInt") && arguments.len() == 1 => {
            let (name, index) = term_lookup(&arguments[0])?;
            match callee {
                Some(existing) if existing != name => return None,
                _ => *callee = Some(name.to_string()),
            }
            Some(ChecksumExpr::Term(index))
        }
        _ => None,
    }
}

/// `p(0x154)` or `p[3]`.
fn term_lookup(node: &Node) -> Option<(&str, u32)> {
    match &node.kind {
        NodeKind::CallExpression { callee, arguments } if arguments.len() == 1 => {
            Some((callee.as_identifier()?, literal_index(&arguments[0])?))
        }
        NodeKind::MemberExpression {
            object,
            property,
            computed: true,
        } => Some((object.as_identifier()?, literal_index(property)?)),
        _ => None,
    }
}

/// The other operand of `check === X` (either order) inside `scope`.
fn comparison_partner<'a>(scope: &'a Node, check: &str) -> Option<&'a Node> {
    scope.descendants().into_iter().find_map(|n| {
        let NodeKind::IfStatement { test, .. } = &n.kind else {
            return None;
        };
        let NodeKind::BinaryExpression {
            op: BinaryOp::StrictEq | BinaryOp::LooseEq,
            left,
            right,
        } = &test.kind
        else {
            return None;
        };
        if left.as_identifier() == Some(check) {
            Some(right.as_ref())
        } else if right.as_identifier() == Some(check) {
            Some(left.as_ref())
        } else {
            None
        }
    })
}

/// A literal target, or a parameter whose argument is a literal.
fn target_value(function: &Node, arguments: &[Node], node: &Node) -> Result<f64, CanaryError> {
    if let Some(v) = signed_number(node) {
        return Ok(v);
    }
    let name = node
        .as_identifier()
        .ok_or_else(|| unrecognized("checksum target is neither a literal nor a parameter"))?;
    let position = function
        .params()
        .iter()
        .position(|p| p.as_identifier() == Some(name))
        .ok_or_else(|| unrecognized(format!("checksum target `{name}` is not a parameter")))?;
    arguments
        .get(position)
        .and_then(signed_number)
        .ok_or_else(|| unrecognized(format!("argument for `{name}` is not a numeric literal")))
}

/// `x.push(x.shift())` or `x["push"](x["shift"]())` on `table`.
fn is_rotation_of(node: &Node, table: &str) -> bool {
    let NodeKind::CallExpression { callee, arguments } = &node.kind else {
        return false;
    };
    let [inner] = arguments.as_slice() else {
        return false;
    };
    let NodeKind::CallExpression {
        callee: inner_callee,
        arguments: inner_args,
    } = &inner.kind
    else {
        return false;
    };
    inner_args.is_empty()
        && method_on(callee, table, "push")
        && method_on(inner_callee, table, "shift")
}

fn method_on(node: &Node, object_name: &str, method: &str) -> bool {
    let NodeKind::MemberExpression {
        object,
        property,
        computed,
    } = &node.kind
    else {
        return false;
    };
    let name = if *computed {
        property.as_string()
    } else {
        property.as_identifier()
    };
    object.as_identifier() == Some(object_name) && name == Some(method)
}

/// How a loop counter variable is consumed by `while (test)`.
#[derive(Clone, Copy)]
enum CountStyle {
    PreDecrement,
    PostDecrement,
}

/// Finds `while (--v)` / `while (v--)` loops that rotate `table`.
fn rotating_loop(scope: &Node, table: &str) -> Option<(String, CountStyle)> {
    scope.descendants().into_iter().find_map(|n| {
        let NodeKind::WhileStatement { test, body } = &n.kind else {
            return None;
        };
        let NodeKind::UnaryExpression { op, argument } = &test.kind else {
            return None;
        };
        let style = match op {
            UnaryOp::PreDecrement => CountStyle::PreDecrement,
            UnaryOp::PostDecrement => CountStyle::PostDecrement,
            _ => return None,
        };
        let counter = argument.as_identifier()?;
        body.descendants()
            .into_iter()
            .any(|b| is_rotation_of(b, table))
            .then(|| (counter.to_string(), style))
    })
}

fn iterations(initial: f64, style: CountStyle) -> Result<u64, CanaryError> {
    let endless = || unrecognized("fixed-count loop never reaches zero");
    if initial.fract() != 0.0 || !initial.is_finite() {
        return Err(endless());
    }
    match style {
        CountStyle::PreDecrement if initial >= 1.0 => Ok(initial as u64 - 1),
        CountStyle::PostDecrement if initial >= 0.0 => Ok(initial as u64),
        _ => Err(endless()),
    }
}

/// Emotet-style `(function (c, d) { var e = function (f) { while (--f)
/// c.push(c.shift()); }; e(++d); }(a, N))`. Returns the number of
/// push/shift iterations the loop performs.
fn fixed_count_shape(function: &Node, arguments: &[Node]) -> Result<Option<u64>, CanaryError> {
    let params: Vec<&str> = function
        .params()
        .iter()
        .filter_map(Node::as_identifier)
        .collect();
    let [table, count_param] = params.as_slice() else {
        return Ok(None);
    };
    let Some(literal) = arguments.get(1).and_then(signed_number) else {
        return Ok(None);
    };

    // Rotation loop directly on the count parameter.
    let direct = function
        .descendants()
        .into_iter()
        .find_map(|n| match &n.kind {
            NodeKind::WhileStatement { .. } => rotating_loop(n, table),
            _ => None,
        });
    if let Some((counter, style)) = &direct {
        if counter == count_param {
            return iterations(literal, *style).map(Some);
        }
    }

    // Rotation loop inside a helper invoked with the count.
    for n in function.descendants() {
        let (helper_name, helper) = match &n.kind {
            NodeKind::VariableDeclarator {
                id,
                init: Some(init),
            } if init.is_function() => (id.as_identifier(), init.as_ref()),
            NodeKind::FunctionDeclaration { id, .. } => (id.as_identifier(), n),
            _ => continue,
        };
        let Some(helper_name) = helper_name else {
            continue;
        };
        let Some(counter) = helper.params().first().and_then(Node::as_identifier) else {
            continue;
        };
        let Some((loop_var, style)) = rotating_loop(helper, table) else {
            continue;
        };
        if loop_var != counter {
            continue;
        }
        let invocation = function
            .descendants()
            .into_iter()
            .find_map(|c| match &c.kind {
                NodeKind::CallExpression { callee, arguments }
                    if callee.as_identifier() == Some(helper_name) && arguments.len() == 1 =>
                {
                    Some(&arguments[0])
                }
                _ => None,
            });
        let initial = match invocation.map(|a| &a.kind) {
            Some(NodeKind::Identifier { name }) if name == count_param => literal,
            Some(NodeKind::UnaryExpression { op, argument })
                if argument.as_identifier() == Some(count_param) =>
            {
                match op {
                    UnaryOp::PreIncrement => literal + 1.0,
                    UnaryOp::PreDecrement => literal - 1.0,
                    UnaryOp::PostIncrement | UnaryOp::PostDecrement => literal,
                    _ => continue,
                }
            }
            _ => continue,
        };
        return iterations(initial, style).map(Some);
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::find_iifes;

    pub(crate) const AC_IIFE: &str = r#"(function (u, A) {
    const h = a0A,
        E = u();
    while (!![]) {
        try {
            const D =
                (parseInt(h(0x154)) / 0x1) *
                (-parseInt(h(0x152)) / 0x2) +
                (-parseInt(h(0x156)) / 0x3) *
                (parseInt(h(0x162)) / 0x4) +
                -parseInt(h(0x15b)) / 0x5 +
                -parseInt(h(0x151)) / 0x6 +
                parseInt(h(0x15e)) / 0x7 +
                (parseInt(h(0x159)) / 0x8) *
                (parseInt(h(0x157)) / 0x9) +
                (parseInt(h(0x15f)) / 0xa) *
                (parseInt(h(0x160)) / 0xb);
            if (D === A) break;
            else E["push"](E["shift"]());
        } catch (v) {
            E["push"](E["shift"]());
        }
    }
})(a0u, 0x6f0ff);"#;

    const EMOTET: &str = "(function(c, d) {\n    var e = function(f) {\n        while (--f) {\n            c['push'] (c['shift']());\n        }\n    };\n    e(++d);\n} (a, 0xea));";

    fn only_iife(src: &str) -> IifeExtract {
        let tree = parse(src).unwrap();
        find_iifes(&tree).remove(0)
    }

    #[test]
    fn listing_checksum() {
        let CanaryShape::Checksum(c) = extract_checksum(&only_iife(AC_IIFE)).unwrap() else {
            panic!("expected checksum");
        };
        assert_eq!(
            c.expr.terms(),
            [0x154, 0x152, 0x156, 0x162, 0x15b, 0x151, 0x15e, 0x159, 0x157, 0x15f, 0x160]
        );
        assert_eq!(c.target, 454911.0);
        assert_eq!(c.alias, "h");
        assert_eq!(c.decoder, "a0A");
        assert_eq!(c.check_variable, "D");
        assert_eq!(c.table_source.as_deref(), Some("a0u"));
    }

    #[test]
    fn render_reparses_to_same_expression() {
        let CanaryShape::Checksum(c) = extract_checksum(&only_iife(AC_IIFE)).unwrap() else {
            panic!()
        };
        let text = c.expr.render("h");
        assert!(text.starts_with("(parseInt(h(0x154)) / 0x1) * (-parseInt(h(0x152)) / 0x2) + "));
        assert!(text.contains(" + -parseInt(h(0x15b)) / 0x5 + "));
        let tree = parse(&format!("const D = {text};")).unwrap();
        let mut init = None;
        tree.root().walk(&mut |n, _| {
            if let NodeKind::VariableDeclarator { init: Some(i), .. } = &n.kind {
                init = Some(i.as_ref());
            }
        });
        let mut callee = None;
        assert_eq!(lower(init.unwrap(), &mut callee).unwrap(), c.expr);
    }

    #[test]
    fn emotet_counts_real_iterations() {
        let src = format!("var a = ['x'];\n{EMOTET}\n");
        let CanaryShape::FixedCount(f) = extract_checksum(&only_iife(&src)).unwrap() else {
            panic!("expected fixed count");
        };
        assert_eq!(f.count, 0xea);
        assert_eq!(f.table_source.as_deref(), Some("a"));
        let post = src.replace("while (--f)", "while (f--)");
        let CanaryShape::FixedCount(f) = extract_checksum(&only_iife(&post)).unwrap() else {
            panic!()
        };
        assert_eq!(f.count, 0xeb);
    }

    #[test]
    fn no_loop_is_unrecognized() {
        let err = extract_checksum(&only_iife("(function (a, b) { return a + b; })(1, 2);"));
        assert!(matches!(err, Err(CanaryError::UnrecognizedIife(_))));
    }

    #[test]
    fn member_terms_and_literal_target() {
        let src = r#"(function () { const h = ["1a", "2b"]; while (true) { try { const D = parseInt(h[1]) - parseInt(h[0]); if (0x1 === D) break; else h.push(h.shift()); } catch (v) { h.push(h.shift()); } } })();"#;
        let CanaryShape::Checksum(c) = extract_checksum(&only_iife(src)).unwrap() else {
            panic!()
        };
        assert_eq!(c.expr.terms(), [1, 0]);
        assert_eq!(c.target, 1.0);
        assert_eq!(c.decoder, "h");
    }

    #[test]
    fn numbers_render_in_source_style() {
        assert_eq!(render_number(454911.0), "0x6f0ff");
        assert_eq!(render_number(-3.5), "-3.5");
        assert_eq!(render_number(0.1), "0.1");
    }
}
