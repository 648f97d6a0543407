use std::fmt;

use serde::{Deserialize, Serialize};

/// Half-open byte range into the source text.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end, "span start {start} past end {end}");
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, other: Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn overlaps(&self, other: Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeclKind {
    Var,
    Let,
    Const,
}

impl DeclKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DeclKind::Var => "var",
            DeclKind::Let => "let",
            DeclKind::Const => "const",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    StrictEq,
    StrictNe,
    LooseEq,
    LooseNe,
    Lt,
    Gt,
    Le,
    Ge,
}

impl BinaryOp {
    pub fn as_str(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Rem => "%",
            BinaryOp::StrictEq => "===",
            BinaryOp::StrictNe => "!==",
            BinaryOp::LooseEq => "==",
            BinaryOp::LooseNe => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Gt => ">",
            BinaryOp::Le => "<=",
            BinaryOp::Ge => ">=",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Plus,
    Not,
    PreIncrement,
    PreDecrement,
    PostIncrement,
    PostDecrement,
}

impl UnaryOp {
    pub fn as_str(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Plus => "+",
            UnaryOp::Not => "!",
            UnaryOp::PreIncrement | UnaryOp::PostIncrement => "++",
            UnaryOp::PreDecrement | UnaryOp::PostDecrement => "--",
        }
    }

    pub fn is_prefix(self) -> bool {
        !matches!(self, UnaryOp::PostIncrement | UnaryOp::PostDecrement)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AssignOp {
    Assign,
    AddAssign,
    SubAssign,
    MulAssign,
    DivAssign,
}

impl AssignOp {
    pub fn as_str(self) -> &'static str {
        match self {
            AssignOp::Assign => "=",
            AssignOp::AddAssign => "+=",
            AssignOp::SubAssign => "-=",
            AssignOp::MulAssign => "*=",
            AssignOp::DivAssign => "/=",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub span: Span,
    pub kind: NodeKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    Program {
        body: Vec<Node>,
    },
    FunctionDeclaration {
        id: Box<Node>,
        params: Vec<Node>,
        body: Box<Node>,
    },
    FunctionExpression {
        id: Option<Box<Node>>,
        params: Vec<Node>,
        body: Box<Node>,
    },
    ArrowFunctionExpression {
        params: Vec<Node>,
        /// Either a `BlockStatement` or a bare expression body.
        body: Box<Node>,
    },
    VariableDeclaration {
        kind: DeclKind,
        declarations: Vec<Node>,
    },
    VariableDeclarator {
        id: Box<Node>,
        init: Option<Box<Node>>,
    },
    Identifier {
        name: String,
    },
    StringLiteral {
        value: String,
    },
    NumericLiteral {
        value: f64,
        raw: String,
    },
    BooleanLiteral {
        value: bool,
    },
    ArrayExpression {
        elements: Vec<Node>,
    },
    CallExpression {
        callee: Box<Node>,
        arguments: Vec<Node>,
    },
    MemberExpression {
        object: Box<Node>,
        property: Box<Node>,
        computed: bool,
    },
    AssignmentExpression {
        op: AssignOp,
        left: Box<Node>,
        right: Box<Node>,
    },
    BinaryExpression {
        op: BinaryOp,
        left: Box<Node>,
        right: Box<Node>,
    },
    UnaryExpression {
        op: UnaryOp,
        argument: Box<Node>,
    },
    WhileStatement {
        test: Box<Node>,
        body: Box<Node>,
    },
    IfStatement {
        test: Box<Node>,
        consequent: Box<Node>,
        alternate: Option<Box<Node>>,
    },
    TryStatement {
        block: Box<Node>,
        handler: Box<Node>,
    },
    CatchClause {
        param: Option<Box<Node>>,
        body: Box<Node>,
    },
    ReturnStatement {
        argument: Option<Box<Node>>,
    },
    BreakStatement,
    ExpressionStatement {
        expression: Box<Node>,
    },
    BlockStatement {
        body: Vec<Node>,
    },
}

impl Node {
    pub fn new(kind: NodeKind, span: Span) -> Self {
        Node { span, kind }
    }

    /// ESTree-style type name.
    pub fn type_name(&self) -> &'static str {
        match &self.kind {
            NodeKind::Program { .. } => "Program",
            NodeKind::FunctionDeclaration { .. } => "FunctionDeclaration",
            NodeKind::FunctionExpression { .. } => "FunctionExpression",
            NodeKind::ArrowFunctionExpression { .. } => "ArrowFunctionExpression",
            NodeKind::VariableDeclaration { .. } => "VariableDeclaration",
            NodeKind::VariableDeclarator { .. } => "VariableDeclarator",
            NodeKind::Identifier { .. } => "Identifier",
            NodeKind::StringLiteral { .. } => "StringLiteral",
            NodeKind::NumericLiteral { .. } => "NumericLiteral",
            NodeKind::BooleanLiteral { .. } => "BooleanLiteral",
            NodeKind::ArrayExpression { .. } => "ArrayExpression",
            NodeKind::CallExpression { .. } => "CallExpression",
            NodeKind::MemberExpression { .. } => "MemberExpression",
            NodeKind::AssignmentExpression { .. } => "AssignmentExpression",
            NodeKind::BinaryExpression { .. } => "BinaryExpression",
            NodeKind::UnaryExpression { .. } => "UnaryExpression",
            NodeKind::WhileStatement { .. } => "WhileStatement",
            NodeKind::IfStatement { .. } => "IfStatement",
            NodeKind::TryStatement { .. } => "TryStatement",
            NodeKind::CatchClause { .. } => "CatchClause",
            NodeKind::ReturnStatement { .. } => "ReturnStatement",
            NodeKind::BreakStatement => "BreakStatement",
            NodeKind::ExpressionStatement { .. } => "ExpressionStatement",
            NodeKind::BlockStatement { .. } => "BlockStatement",
        }
    }

    /// Direct children in source order.
    pub fn children(&self) -> Vec<&Node> {
        let mut out: Vec<&Node> = Vec::new();
        match &self.kind {
            NodeKind::Program { body } | NodeKind::BlockStatement { body } => out.extend(body),
            NodeKind::FunctionDeclaration { id, params, body } => {
                out.push(id);
                out.extend(params);
                out.push(body);
            }
            NodeKind::FunctionExpression { id, params, body } => {
                out.extend(id.as_deref());
                out.extend(params);
                out.push(body);
            }
            NodeKind::ArrowFunctionExpression { params, body } => {
                out.extend(params);
                out.push(body);
            }
            NodeKind::VariableDeclaration { declarations, .. } => out.extend(declarations),
            NodeKind::VariableDeclarator { id, init } => {
                out.push(id);
                out.extend(init.as_deref());
            }
            NodeKind::Identifier { .. }
            | NodeKind::StringLiteral { .. }
            | NodeKind::NumericLiteral { .. }
            | NodeKind::BooleanLiteral { .. }
            | NodeKind::BreakStatement => {}
            NodeKind::ArrayExpression { elements } => out.extend(elements),
            NodeKind::CallExpression { callee, arguments } => {
                out.push(callee);
                out.extend(arguments);
            }
            NodeKind::MemberExpression {
                object, property, ..
            } => {
                out.push(object);
                out.push(property);
            }
            NodeKind::AssignmentExpression { left, right, .. }
            | NodeKind::BinaryExpression { left, right, .. } => {
                out.push(left);
                out.push(right);
            }
            NodeKind::UnaryExpression { argument, .. } => out.push(argument),
            NodeKind::WhileStatement { test, body } => {
                out.push(test);
                out.push(body);
            }
            NodeKind::IfStatement {
                test,
                consequent,
                alternate,
            } => {
                out.push(test);
                out.push(consequent);
                out.extend(alternate.as_deref());
            }
            NodeKind::TryStatement { block, handler } => {
                out.push(block);
                out.push(handler);
            }
            NodeKind::CatchClause { param, body } => {
                out.extend(param.as_deref());
                out.push(body);
            }
            NodeKind::ReturnStatement { argument } => out.extend(argument.as_deref()),
            NodeKind::ExpressionStatement { expression } => out.push(expression),
        }
        out
    }

    pub fn as_identifier(&self) -> Option<&str> {
        match &self.kind {
            NodeKind::Identifier { name } => Some(name),
            _ => None,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match &self.kind {
            NodeKind::NumericLiteral { value, .. } => Some(*value),
            _ => None,
        }
    }

    pub fn as_string(&self) -> Option<&str> {
        match &self.kind {
            NodeKind::StringLiteral { value } => Some(value),
            _ => None,
        }
    }

    pub fn is_function(&self) -> bool {
        matches!(
            self.kind,
            NodeKind::FunctionDeclaration { .. }
                | NodeKind::FunctionExpression { .. }
                | NodeKind::ArrowFunctionExpression { .. }
        )
    }

    /// Parameters of a function-like node, empty otherwise.
    pub fn params(&self) -> &[Node] {
        match &self.kind {
            NodeKind::FunctionDeclaration { params, .. }
            | NodeKind::FunctionExpression { params, .. }
            | NodeKind::ArrowFunctionExpression { params, .. } => params,
            _ => &[],
        }
    }

    /// Compares two trees ignoring spans.
    pub fn structurally_eq(&self, other: &Node) -> bool {
        if !self.leaf_eq(other) {
            return false;
        }
        let (a, b) = (self.children(), other.children());
        a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.structurally_eq(y))
    }

    fn leaf_eq(&self, other: &Node) -> bool {
        use NodeKind as K;
        match (&self.kind, &other.kind) {
            (K::VariableDeclaration { kind: a, .. }, K::VariableDeclaration { kind: b, .. }) => {
                a == b
            }
            (K::Identifier { name: a }, K::Identifier { name: b }) => a == b,
            (K::StringLiteral { value: a }, K::StringLiteral { value: b }) => a == b,
            (K::NumericLiteral { value: a, raw: ra }, K::NumericLiteral { value: b, raw: rb }) => {
                a.to_bits() == b.to_bits() && ra == rb
            }
            (K::BooleanLiteral { value: a }, K::BooleanLiteral { value: b }) => a == b,
            (K::MemberExpression { computed: a, .. }, K::MemberExpression { computed: b, .. }) => {
                a == b
            }
            (K::AssignmentExpression { op: a, .. }, K::AssignmentExpression { op: b, .. }) => {
                a == b
            }
            (K::BinaryExpression { op: a, .. }, K::BinaryExpression { op: b, .. }) => a == b,
            (K::UnaryExpression { op: a, .. }, K::UnaryExpression { op: b, .. }) => a == b,
            (K::FunctionExpression { id: a, .. }, K::FunctionExpression { id: b, .. }) => {
                a.is_some() == b.is_some()
            }
            (K::IfStatement { alternate: a, .. }, K::IfStatement { alternate: b, .. }) => {
                a.is_some() == b.is_some()
            }
            (K::CatchClause { param: a, .. }, K::CatchClause { param: b, .. }) => {
                a.is_some() == b.is_some()
            }
            (K::ReturnStatement { argument: a }, K::ReturnStatement { argument: b }) => {
                a.is_some() == b.is_some()
            }
            (a, b) => std::mem::discriminant(a) == std::mem::discriminant(b),
        }
    }

    /// Pre-order traversal. The callback receives each node together with
    /// its ancestors (outermost first).
    pub fn walk<'a, F>(&'a self, f: &mut F)
    where
        F: FnMut(&'a Node, &[&'a Node]),
    {
        let mut stack = Vec::new();
        self.walk_inner(&mut stack, f);
    }

    fn walk_inner<'a, F>(&'a self, ancestors: &mut Vec<&'a Node>, f: &mut F)
    where
        F: FnMut(&'a Node, &[&'a Node]),
    {
        f(self, ancestors);
        ancestors.push(self);
        for child in self.children() {
            child.walk_inner(ancestors, f);
        }
        ancestors.pop();
    }

    /// Every node in pre-order.
    pub fn descendants(&self) -> Vec<&Node> {
        let mut out = Vec::new();
        self.walk(&mut |n, _| out.push(n));
        out
    }
}
