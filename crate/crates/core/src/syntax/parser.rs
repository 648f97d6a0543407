use super::ast::*;
use super::lexer::{tokenize, Punct, Token, TokenKind};
use super::{SyntaxError, SyntaxTree};

const RESERVED: &[&str] = &[
    "break",
    "case",
    "catch",
    "class",
    "const",
    "continue",
    "debugger",
    "default",
    "delete",
    "do",
    "else",
    "export",
    "extends",
    "false",
    "finally",
    "for",
    "function",
    "if",
    "import",
    "in",
    "instanceof",
    "let",
    "new",
    "null",
    "return",
    "super",
    "switch",
    "this",
    "throw",
    "true",
    "try",
    "typeof",
    "var",
    "void",
    "while",
    "with",
    "yield",
    "await",
    "async",
];

/// Parses `source` into a [`SyntaxTree`].
pub fn parse(source: &str) -> Result<SyntaxTree, SyntaxError> {
    let lexed = tokenize(source)?;
    let mut parser = Parser {
        tokens: &lexed.tokens,
        pos: 0,
        prev_end: 0,
        src_len: source.len(),
    };
    let mut body = Vec::new();
    while !parser.at_end() {
        if let Some(stmt) = parser.statement()? {
            body.push(stmt);
        }
    }
    let root = Node::new(NodeKind::Program { body }, Span::new(0, source.len()));
    Ok(SyntaxTree::from_parts(
        root,
        source.to_string(),
        lexed.comments,
    ))
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    prev_end: usize,
    src_len: usize,
}

type PResult<T> = Result<T, SyntaxError>;

impl<'t> Parser<'t> {
    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&'t Token> {
        self.tokens.get(self.pos + n)
    }

    fn next(&mut self) -> Option<&'t Token> {
        let t = self.tokens.get(self.pos)?;
        self.pos += 1;
        self.prev_end = t.span.end;
        Some(t)
    }

    fn start(&self) -> usize {
        self.peek().map_or(self.src_len, |t| t.span.start)
    }

    fn span_from(&self, start: usize) -> Span {
        Span::new(start, self.prev_end)
    }

    fn check(&self, p: Punct) -> bool {
        self.peek().is_some_and(|t| t.is_punct(p))
    }

    fn check_word(&self, w: &str) -> bool {
        self.peek().is_some_and(|t| t.is_ident(w))
    }

    fn eat(&mut self, p: Punct) -> bool {
        if self.check(p) {
            self.next();
            true
        } else {
            false
        }
    }

    fn error(&self, expected: &str) -> SyntaxError {
        match self.peek() {
            Some(t) => SyntaxError::Parse {
                span: t.span,
                expected: expected.to_string(),
                found: t.describe(),
            },
            None => SyntaxError::Parse {
                span: Span::new(self.src_len, self.src_len),
                expected: expected.to_string(),
                found: "end of input".to_string(),
            },
        }
    }

    fn unsupported(&self, construct: &str) -> SyntaxError {
        let span = self
            .peek()
            .map_or(Span::new(self.src_len, self.src_len), |t| t.span);
        SyntaxError::Unsupported {
            span,
            construct: construct.to_string(),
        }
    }

    fn expect(&mut self, p: Punct) -> PResult<()> {
        if self.eat(p) {
            Ok(())
        } else {
            Err(self.error(&format!("`{}`", p.as_str())))
        }
    }

    fn expect_word(&mut self, w: &str) -> PResult<()> {
        if self.check_word(w) {
            self.next();
            Ok(())
        } else {
            Err(self.error(&format!("`{w}`")))
        }
    }

    fn binding_identifier(&mut self) -> PResult<Node> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Ident(name),
                span,
                ..
            }) if !RESERVED.contains(&name.as_str()) => {
                self.next();
                Ok(Node::new(
                    NodeKind::Identifier { name: name.clone() },
                    *span,
                ))
            }
            Some(t) if t.is_punct(Punct::LBracket) || t.is_punct(Punct::LBrace) => {
                Err(self.unsupported("destructuring pattern"))
            }
            _ => Err(self.error("identifier")),
        }
    }

    /// Consumes a statement terminator, applying the newline-only subset of
    /// automatic semicolon insertion.
    fn semicolon(&mut self) -> PResult<()> {
        if self.eat(Punct::Semicolon) {
            return Ok(());
        }
        match self.peek() {
            None => Ok(()),
            Some(t) if t.is_punct(Punct::RBrace) || t.newline_before => Ok(()),
            Some(_) => Err(self.error("`;`")),
        }
    }

    // ---- statements -----------------------------------------------------

    fn statement(&mut self) -> PResult<Option<Node>> {
        let Some(tok) = self.peek() else {
            return Err(self.error("statement"));
        };
        let start = tok.span.start;
        if tok.is_punct(Punct::Semicolon) {
            self.next();
            return Ok(None);
        }
        if tok.is_punct(Punct::LBrace) {
            return self.block().map(Some);
        }
        if let TokenKind::Ident(word) = &tok.kind {
            match word.as_str() {
                "function" => return self.function_declaration().map(Some),
                "var" | "const" => return self.variable_statement().map(Some),
                "let"
                    if self
                        .peek_at(1)
                        .is_some_and(|t| matches!(t.kind, TokenKind::Ident(_))) =>
                {
                    return self.variable_statement().map(Some)
                }
                "while" => {
                    self.next();
                    self.expect(Punct::LParen)?;
                    let test = self.expression()?;
                    self.expect(Punct::RParen)?;
                    let body = self.required_statement()?;
                    return Ok(Some(Node::new(
                        NodeKind::WhileStatement {
                            test: Box::new(test),
                            body: Box::new(body),
                        },
                        self.span_from(start),
                    )));
                }
                "if" => {
                    self.next();
                    self.expect(Punct::LParen)?;
                    let test = self.expression()?;
                    self.expect(Punct::RParen)?;
                    let consequent = self.required_statement()?;
                    let alternate = if self.check_word("else") {
                        self.next();
                        Some(Box::new(self.required_statement()?))
                    } else {
                        None
                    };
                    return Ok(Some(Node::new(
                        NodeKind::IfStatement {
                            test: Box::new(test),
                            consequent: Box::new(consequent),
                            alternate,
                        },
                        self.span_from(start),
                    )));
                }
                "try" => return self.try_statement().map(Some),
                "return" => {
                    self.next();
                    let argument = match self.peek() {
                        None => None,
                        Some(t)
                            if t.newline_before
                                || t.is_punct(Punct::Semicolon)
                                || t.is_punct(Punct::RBrace) =>
                        {
                            None
                        }
                        Some(_) => Some(Box::new(self.expression()?)),
                    };
                    self.semicolon()?;
                    return Ok(Some(Node::new(
                        NodeKind::ReturnStatement { argument },
                        self.span_from(start),
                    )));
                }
                "break" => {
                    self.next();
                    if self
                        .peek()
                        .is_some_and(|t| !t.newline_before && matches!(t.kind, TokenKind::Ident(_)))
                    {
                        return Err(self.unsupported("labelled break"));
                    }
                    self.semicolon()?;
                    return Ok(Some(Node::new(
                        NodeKind::BreakStatement,
                        self.span_from(start),
                    )));
                }
                "class" => return Err(self.unsupported("class declaration")),
                "async" => return Err(self.unsupported("async function")),
                "for" | "do" | "switch" | "continue" | "throw" | "with" | "debugger" | "import"
                | "export" => return Err(self.unsupported(&format!("`{word}` statement"))),
                _ => {}
            }
        }
        let expression = self.expression()?;
        self.semicolon()?;
        Ok(Some(Node::new(
            NodeKind::ExpressionStatement {
                expression: Box::new(expression),
            },
            self.span_from(start),
        )))
    }

    /// A statement in a position that cannot be empty-skipped (loop bodies,
    /// branches).
    fn required_statement(&mut self) -> PResult<Node> {
        if self.check(Punct::Semicolon) {
            let start = self.start();
            self.next();
            return Ok(Node::new(
                NodeKind::BlockStatement { body: vec![] },
                self.span_from(start),
            ));
        }
        match self.statement()? {
            Some(n) => Ok(n),
            None => Err(self.error("statement")),
        }
    }

    fn block(&mut self) -> PResult<Node> {
        let start = self.start();
        self.expect(Punct::LBrace)?;
        let mut body = Vec::new();
        while !self.check(Punct::RBrace) {
            if self.at_end() {
                return Err(self.error("`}`"));
            }
            if let Some(stmt) = self.statement()? {
                body.push(stmt);
            }
        }
        self.next();
        Ok(Node::new(
            NodeKind::BlockStatement { body },
            self.span_from(start),
        ))
    }

    fn try_statement(&mut self) -> PResult<Node> {
        let start = self.start();
        self.expect_word("try")?;
        let block = self.block()?;
        if self.check_word("finally") {
            return Err(self.unsupported("finally clause"));
        }
        let catch_start = self.start();
        self.expect_word("catch")?;
        let param = if self.eat(Punct::LParen) {
            let p = self.binding_identifier()?;
            self.expect(Punct::RParen)?;
            Some(Box::new(p))
        } else {
            None
        };
        let body = self.block()?;
        let handler = Node::new(
            NodeKind::CatchClause {
                param,
                body: Box::new(body),
            },
            self.span_from(catch_start),
        );
        if self.check_word("finally") {
            return Err(self.unsupported("finally clause"));
        }
        Ok(Node::new(
            NodeKind::TryStatement {
                block: Box::new(block),
                handler: Box::new(handler),
            },
            self.span_from(start),
        ))
    }

    fn variable_statement(&mut self) -> PResult<Node> {
        let decl = self.variable_declaration()?;
        self.semicolon()?;
        let span = self.span_from(decl.span.start);
        Ok(Node { span, ..decl })
    }

    fn variable_declaration(&mut self) -> PResult<Node> {
        let start = self.start();
        let kind = match self.next() {
            Some(t) if t.is_ident("var") => DeclKind::Var,
            Some(t) if t.is_ident("let") => DeclKind::Let,
            Some(t) if t.is_ident("const") => DeclKind::Const,
            _ => unreachable!("caller checked the declaration keyword"),
        };
        let mut declarations = Vec::new();
        loop {
            let decl_start = self.start();
            let id = self.binding_identifier()?;
            let init = if self.eat(Punct::Assign) {
                Some(Box::new(self.assignment()?))
            } else {
                None
            };
            declarations.push(Node::new(
                NodeKind::VariableDeclarator {
                    id: Box::new(id),
                    init,
                },
                self.span_from(decl_start),
            ));
            if !self.eat(Punct::Comma) {
                break;
            }
        }
        Ok(Node::new(
            NodeKind::VariableDeclaration { kind, declarations },
            self.span_from(start),
        ))
    }

    fn function_declaration(&mut self) -> PResult<Node> {
        let start = self.start();
        self.expect_word("function")?;
        if self.check(Punct::Star) {
            return Err(self.unsupported("generator function"));
        }
        let id = self.binding_identifier()?;
        let params = self.formal_parameters()?;
        let body = self.block()?;
        Ok(Node::new(
            NodeKind::FunctionDeclaration {
                id: Box::new(id),
                params,
                body: Box::new(body),
            },
            self.span_from(start),
        ))
    }

    fn formal_parameters(&mut self) -> PResult<Vec<Node>> {
        self.expect(Punct::LParen)?;
        let mut params = Vec::new();
        while !self.check(Punct::RParen) {
            if self.check(Punct::Ellipsis) {
                return Err(self.unsupported("rest parameter"));
            }
            params.push(self.binding_identifier()?);
            if self.check(Punct::Assign) {
                return Err(self.unsupported("default parameter"));
            }
            if !self.eat(Punct::Comma) {
                break;
            }
        }
        self.expect(Punct::RParen)?;
        Ok(params)
    }

    // ---- expressions ----------------------------------------------------

    fn expression(&mut self) -> PResult<Node> {
        let expr = self.assignment()?;
        if self.check(Punct::Comma) {
            return Err(self.unsupported("comma (sequence) expression"));
        }
        Ok(expr)
    }

    fn arrow_ahead(&self) -> bool {
        match self.peek() {
            Some(t) if matches!(t.kind, TokenKind::Ident(_)) => {
                self.peek_at(1).is_some_and(|n| n.is_punct(Punct::Arrow))
            }
            Some(t) if t.is_punct(Punct::LParen) => {
                let mut depth = 0usize;
                for (i, tok) in self.tokens[self.pos..].iter().enumerate() {
                    match tok.kind {
                        TokenKind::Punct(Punct::LParen) => depth += 1,
                        TokenKind::Punct(Punct::RParen) => {
                            depth -= 1;
                            if depth == 0 {
                                return self.peek_at(i + 1).is_some_and(|n| {
                                    n.is_punct(Punct::Arrow) && !n.newline_before
                                });
                            }
                        }
                        _ => {}
                    }
                }
                false
            }
            _ => false,
        }
    }

    fn arrow_function(&mut self) -> PResult<Node> {
        let start = self.start();
        let params = if self.check(Punct::LParen) {
            self.formal_parameters()?
        } else {
            vec![self.binding_identifier()?]
        };
        self.expect(Punct::Arrow)?;
        let body = if self.check(Punct::LBrace) {
            self.block()?
        } else {
            self.assignment()?
        };
        Ok(Node::new(
            NodeKind::ArrowFunctionExpression {
                params,
                body: Box::new(body),
            },
            self.span_from(start),
        ))
    }

    fn assignment(&mut self) -> PResult<Node> {
        if self.check_word("async") {
            return Err(self.unsupported("async function"));
        }
        if self.arrow_ahead() {
            return self.arrow_function();
        }
        let start = self.start();
        let left = self.binary(0)?;
        let op = match self.peek().map(|t| &t.kind) {
            Some(TokenKind::Punct(Punct::Assign)) => AssignOp::Assign,
            Some(TokenKind::Punct(Punct::PlusAssign)) => AssignOp::AddAssign,
            Some(TokenKind::Punct(Punct::MinusAssign)) => AssignOp::SubAssign,
            Some(TokenKind::Punct(Punct::StarAssign)) => AssignOp::MulAssign,
            Some(TokenKind::Punct(Punct::SlashAssign)) => AssignOp::DivAssign,
            Some(TokenKind::Punct(Punct::Question)) => {
                return Err(self.unsupported("conditional expression"))
            }
            Some(TokenKind::Punct(Punct::AndAnd | Punct::OrOr)) => {
                return Err(self.unsupported("logical operator"))
            }
            Some(TokenKind::Punct(Punct::Amp | Punct::Pipe | Punct::Caret)) => {
                return Err(self.unsupported("bitwise operator"))
            }
            _ => return Ok(left),
        };
        if !matches!(
            left.kind,
            NodeKind::Identifier { .. } | NodeKind::MemberExpression { .. }
        ) {
            return Err(SyntaxError::Parse {
                span: left.span,
                expected: "assignable target".into(),
                found: left.type_name().into(),
            });
        }
        self.next();
        let right = self.assignment()?;
        Ok(Node::new(
            NodeKind::AssignmentExpression {
                op,
                left: Box::new(left),
                right: Box::new(right),
            },
            self.span_from(start),
        ))
    }

    fn binary_op(&self) -> Option<(BinaryOp, u8)> {
        let TokenKind::Punct(p) = self.peek()?.kind else {
            return None;
        };
        Some(match p {
            Punct::StrictEq => (BinaryOp::StrictEq, 1),
            Punct::StrictNe => (BinaryOp::StrictNe, 1),
            Punct::LooseEq => (BinaryOp::LooseEq, 1),
            Punct::LooseNe => (BinaryOp::LooseNe, 1),
            Punct::Lt => (BinaryOp::Lt, 2),
            Punct::Gt => (BinaryOp::Gt, 2),
            Punct::Le => (BinaryOp::Le, 2),
            Punct::Ge => (BinaryOp::Ge, 2),
            Punct::Plus => (BinaryOp::Add, 3),
            Punct::Minus => (BinaryOp::Sub, 3),
            Punct::Star => (BinaryOp::Mul, 4),
            Punct::Slash => (BinaryOp::Div, 4),
            Punct::Percent => (BinaryOp::Rem, 4),
            _ => return None,
        })
    }

    /// Precedence climbing over left-associative binary operators.
    fn binary(&mut self, min_prec: u8) -> PResult<Node> {
        let start = self.start();
        let mut left = self.unary()?;
        while let Some((op, prec)) = self.binary_op() {
            if prec < min_prec {
                break;
            }
            self.next();
            let right = self.binary(prec + 1)?;
            left = Node::new(
                NodeKind::BinaryExpression {
                    op,
                    left: Box::new(left),
                    right: Box::new(right),
                },
                self.span_from(start),
            );
        }
        Ok(left)
    }

    fn unary(&mut self) -> PResult<Node> {
        let start = self.start();
        let op = match self.peek().map(|t| &t.kind) {
            Some(TokenKind::Punct(Punct::Minus)) => Some(UnaryOp::Neg),
            Some(TokenKind::Punct(Punct::Plus)) => Some(UnaryOp::Plus),
            Some(TokenKind::Punct(Punct::Bang)) => Some(UnaryOp::Not),
            Some(TokenKind::Punct(Punct::PlusPlus)) => Some(UnaryOp::PreIncrement),
            Some(TokenKind::Punct(Punct::MinusMinus)) => Some(UnaryOp::PreDecrement),
            Some(TokenKind::Punct(Punct::Tilde)) => {
                return Err(self.unsupported("bitwise operator"))
            }
            Some(TokenKind::Ident(w))
                if matches!(w.as_str(), "typeof" | "void" | "delete" | "await") =>
            {
                return Err(self.unsupported(&format!("`{w}` operator")))
            }
            _ => None,
        };
        let Some(op) = op else {
            return self.postfix();
        };
        self.next();
        let argument = self.unary()?;
        if matches!(op, UnaryOp::PreIncrement | UnaryOp::PreDecrement) {
            self.check_update_target(&argument)?;
        }
        Ok(Node::new(
            NodeKind::UnaryExpression {
                op,
                argument: Box::new(argument),
            },
            self.span_from(start),
        ))
    }

    fn check_update_target(&self, target: &Node) -> PResult<()> {
        match target.kind {
            NodeKind::Identifier { .. } | NodeKind::MemberExpression { .. } => Ok(()),
            _ => Err(SyntaxError::Parse {
                span: target.span,
                expected: "assignable target for `++`/`--`".into(),
                found: target.type_name().into(),
            }),
        }
    }

    fn postfix(&mut self) -> PResult<Node> {
        let start = self.start();
        let expr = self.call_member()?;
        let op = match self.peek() {
            Some(t) if t.newline_before => return Ok(expr),
            Some(t) if t.is_punct(Punct::PlusPlus) => UnaryOp::PostIncrement,
            Some(t) if t.is_punct(Punct::MinusMinus) => UnaryOp::PostDecrement,
            _ => return Ok(expr),
        };
        self.check_update_target(&expr)?;
        self.next();
        Ok(Node::new(
            NodeKind::UnaryExpression {
                op,
                argument: Box::new(expr),
            },
            self.span_from(start),
        ))
    }

    fn call_member(&mut self) -> PResult<Node> {
        let start = self.start();
        let mut expr = self.primary()?;
        loop {
            if self.eat(Punct::LParen) {
                let mut arguments = Vec::new();
                while !self.check(Punct::RParen) {
                    if self.check(Punct::Ellipsis) {
                        return Err(self.unsupported("spread argument"));
                    }
                    arguments.push(self.assignment()?);
                    if !self.eat(Punct::Comma) {
                        break;
                    }
                }
                self.expect(Punct::RParen)?;
                expr = Node::new(
                    NodeKind::CallExpression {
                        callee: Box::new(expr),
                        arguments,
                    },
                    self.span_from(start),
                );
            } else if self.eat(Punct::LBracket) {
                let property = self.expression()?;
                self.expect(Punct::RBracket)?;
                expr = Node::new(
                    NodeKind::MemberExpression {
                        object: Box::new(expr),
                        property: Box::new(property),
                        computed: true,
                    },
                    self.span_from(start),
                );
            } else if self.eat(Punct::Dot) {
                // Property names may be reserved words (`x.default`).
                let property = match self.next() {
                    Some(Token {
                        kind: TokenKind::Ident(name),
                        span,
                        ..
                    }) => Node::new(NodeKind::Identifier { name: name.clone() }, *span),
                    _ => {
                        self.pos -= 1;
                        return Err(self.error("property name"));
                    }
                };
                expr = Node::new(
                    NodeKind::MemberExpression {
                        object: Box::new(expr),
                        property: Box::new(property),
                        computed: false,
                    },
                    self.span_from(start),
                );
            } else {
                return Ok(expr);
            }
        }
    }

    fn primary(&mut self) -> PResult<Node> {
        let Some(tok) = self.peek() else {
            return Err(self.error("expression"));
        };
        let start = tok.span.start;
        match &tok.kind {
            TokenKind::Number { value, raw } => {
                self.next();
                Ok(Node::new(
                    NodeKind::NumericLiteral {
                        value: *value,
                        raw: raw.clone(),
                    },
                    tok.span,
                ))
            }
            TokenKind::Str(value) => {
                self.next();
                Ok(Node::new(
                    NodeKind::StringLiteral {
                        value: value.clone(),
                    },
                    tok.span,
                ))
            }
            TokenKind::Ident(word) => match word.as_str() {
                "true" | "false" => {
                    self.next();
                    Ok(Node::new(
                        NodeKind::BooleanLiteral {
                            value: word == "true",
                        },
                        tok.span,
                    ))
                }
                "function" => self.function_expression(),
                "class" => Err(self.unsupported("class expression")),
                "new" => Err(self.unsupported("`new` expression")),
                "this" | "null" | "super" | "import" => Err(self.unsupported(&format!("`{word}`"))),
                w if RESERVED.contains(&w) => Err(self.error("expression")),
                _ => {
                    self.next();
                    Ok(Node::new(
                        NodeKind::Identifier { name: word.clone() },
                        tok.span,
                    ))
                }
            },
            TokenKind::Punct(Punct::LParen) => {
                self.next();
                let inner = self.expression()?;
                self.expect(Punct::RParen)?;
                Ok(inner)
            }
            TokenKind::Punct(Punct::LBracket) => {
                self.next();
                let mut elements = Vec::new();
                while !self.check(Punct::RBracket) {
                    if self.check(Punct::Comma) {
                        return Err(self.unsupported("array hole"));
                    }
                    if self.check(Punct::Ellipsis) {
                        return Err(self.unsupported("spread element"));
                    }
                    elements.push(self.assignment()?);
                    if !self.eat(Punct::Comma) {
                        break;
                    }
                }
                self.expect(Punct::RBracket)?;
                Ok(Node::new(
                    NodeKind::ArrayExpression { elements },
                    self.span_from(start),
                ))
            }
            TokenKind::Punct(Punct::LBrace) => Err(self.unsupported("object literal")),
            _ => Err(self.error("expression")),
        }
    }

    fn function_expression(&mut self) -> PResult<Node> {
        let start = self.start();
        self.expect_word("function")?;
        if self.check(Punct::Star) {
            return Err(self.unsupported("generator function"));
        }
        let id = if self.check(Punct::LParen) {
            None
        } else {
            Some(Box::new(self.binding_identifier()?))
        };
        let params = self.formal_parameters()?;
        let body = self.block()?;
        Ok(Node::new(
            NodeKind::FunctionExpression {
                id,
                params,
                body: Box::new(body),
            },
            self.span_from(start),
        ))
    }
}
