//! Lexer and parser for the ECMAScript subset that string-array obfuscators
//! emit, producing a spanned, immutable syntax tree.

mod ast;
mod lexer;
mod parser;

use std::sync::Arc;

use thiserror::Error;

pub use ast::{AssignOp, BinaryOp, DeclKind, Node, NodeKind, Span, UnaryOp};
pub use lexer::{is_trimmable, tokenize, Lexed, Punct, Token, TokenKind};
pub use parser::parse;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("lex error at byte {offset}: {message}")]
    Lex { offset: usize, message: String },
    #[error("parse error at {span}: expected {expected}, found {found}")]
    Parse {
        span: Span,
        expected: String,
        found: String,
    },
    #[error("unsupported construct at {span}: {construct}")]
    Unsupported { span: Span, construct: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("span {span} is outside the source (length {len}) or splits a character")]
pub struct RangeError {
    pub span: Span,
    pub len: usize,
}

/// A parsed program together with the text it was parsed from.
///
/// Cloning is cheap; the source is shared.
#[derive(Debug, Clone)]
pub struct SyntaxTree {
    root: Arc<Node>,
    source: Arc<str>,
    comments: Arc<[Span]>,
}

impl SyntaxTree {
    pub(crate) fn from_parts(root: Node, source: String, comments: Vec<Span>) -> Self {
        SyntaxTree {
            root: Arc::new(root),
            source: source.into(),
            comments: comments.into(),
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Spans of comments skipped by the lexer, in source order.
    pub fn comments(&self) -> &[Span] {
        &self.comments
    }

    /// Top-level statements of the program.
    pub fn body(&self) -> &[Node] {
        match &self.root.kind {
            NodeKind::Program { body } => body,
            _ => unreachable!("root is always a Program"),
        }
    }

    pub fn slice(&self, span: Span) -> Result<&str, RangeError> {
        slice(self, span)
    }

    pub fn text(&self, node: &Node) -> &str {
        &self.source[node.span.start..node.span.end]
    }
}

/// Exact source text covered by `span`.
pub fn slice(tree: &SyntaxTree, span: Span) -> Result<&str, RangeError> {
    let err = || RangeError {
        span,
        len: tree.source.len(),
    };
    if span.start > span.end {
        return Err(err());
    }
    tree.source.get(span.start..span.end).ok_or_else(err)
}
