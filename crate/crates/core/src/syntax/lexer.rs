use super::ast::Span;
use super::SyntaxError;
use crate::numeric::digits_to_f64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Punct {
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Semicolon,
    Comma,
    Dot,
    Arrow,
    Assign,
    PlusAssign,
    MinusAssign,
    StarAssign,
    SlashAssign,
    StrictEq,
    StrictNe,
    LooseEq,
    LooseNe,
    Lt,
    Gt,
    Le,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    PlusPlus,
    MinusMinus,
    Bang,
    Tilde,
    Question,
    Colon,
    AndAnd,
    OrOr,
    Amp,
    Pipe,
    Caret,
    Ellipsis,
}

impl Punct {
    pub fn as_str(self) -> &'static str {
        use Punct::*;
        match self {
            LParen => "(",
            RParen => ")",
            LBracket => "[",
            RBracket => "]",
            LBrace => "{",
            RBrace => "}",
            Semicolon => ";",
            Comma => ",",
            Dot => ".",
            Arrow => "=>",
            Assign => "=",
            PlusAssign => "+=",
            MinusAssign => "-=",
            StarAssign => "*=",
            SlashAssign => "/=",
            StrictEq => "===",
            StrictNe => "!==",
            LooseEq => "==",
            LooseNe => "!=",
            Lt => "<",
            Gt => ">",
            Le => "<=",
            Ge => ">=",
            Plus => "+",
            Minus => "-",
            Star => "*",
            Slash => "/",
            Percent => "%",
            PlusPlus => "++",
            MinusMinus => "--",
            Bang => "!",
            Tilde => "~",
            Question => "?",
            Colon => ":",
            AndAnd => "&&",
            OrOr => "||",
            Amp => "&",
            Pipe => "|",
            Caret => "^",
            Ellipsis => "...",
        }
    }
}

// Longest first so that maximal munch falls out of a linear scan.
const PUNCTUATORS: &[(&str, Punct)] = &[
    ("===", Punct::StrictEq),
    ("!==", Punct::StrictNe),
    ("...", Punct::Ellipsis),
    ("=>", Punct::Arrow),
    ("==", Punct::LooseEq),
    ("!=", Punct::LooseNe),
    ("<=", Punct::Le),
    (">=", Punct::Ge),
    ("++", Punct::PlusPlus),
    ("--", Punct::MinusMinus),
    ("+=", Punct::PlusAssign),
    ("-=", Punct::MinusAssign),
    ("*=", Punct::StarAssign),
    ("/=", Punct::SlashAssign),
    ("&&", Punct::AndAnd),
    ("||", Punct::OrOr),
    ("(", Punct::LParen),
    (")", Punct::RParen),
    ("[", Punct::LBracket),
    ("]", Punct::RBracket),
    ("{", Punct::LBrace),
    ("}", Punct::RBrace),
    (";", Punct::Semicolon),
    (",", Punct::Comma),
    (".", Punct::Dot),
    ("=", Punct::Assign),
    ("<", Punct::Lt),
    (">", Punct::Gt),
    ("+", Punct::Plus),
    ("-", Punct::Minus),
    ("*", Punct::Star),
    ("/", Punct::Slash),
    ("%", Punct::Percent),
    ("!", Punct::Bang),
    ("~", Punct::Tilde),
    ("?", Punct::Question),
    (":", Punct::Colon),
    ("&", Punct::Amp),
    ("|", Punct::Pipe),
    ("^", Punct::Caret),
];

#[derive(Clone, Debug, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Number { value: f64, raw: String },
    Str(String),
    Punct(Punct),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
    /// A line terminator appeared between the previous token and this one.
    pub newline_before: bool,
}

impl Token {
    pub fn is_punct(&self, p: Punct) -> bool {
        self.kind == TokenKind::Punct(p)
    }

    pub fn is_ident(&self, name: &str) -> bool {
        matches!(&self.kind, TokenKind::Ident(n) if n == name)
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            TokenKind::Ident(n) => format!("`{n}`"),
            TokenKind::Number { raw, .. } => format!("number `{raw}`"),
            TokenKind::Str(_) => "string literal".to_string(),
            TokenKind::Punct(p) => format!("`{}`", p.as_str()),
        }
    }
}

/// Output of [`tokenize`]: tokens plus the spans of every skipped comment.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Lexed {
    pub tokens: Vec<Token>,
    pub comments: Vec<Span>,
}

pub fn tokenize(source: &str) -> Result<Lexed, SyntaxError> {
    Lexer {
        src: source,
        pos: 0,
        out: Lexed::default(),
    }
    .run()
}

fn is_js_whitespace(c: char) -> bool {
    matches!(
        c,
        '\u{9}' | '\u{B}' | '\u{C}' | ' ' | '\u{A0}' | '\u{FEFF}' | '\u{1680}' | '\u{2000}'
            ..='\u{200A}' | '\u{202F}' | '\u{205F}' | '\u{3000}'
    )
}

fn is_line_terminator(c: char) -> bool {
    matches!(c, '\n' | '\r' | '\u{2028}' | '\u{2029}')
}

/// Whitespace as ECMAScript's `TrimString` understands it.
pub fn is_trimmable(c: char) -> bool {
    is_js_whitespace(c) || is_line_terminator(c)
}

fn is_ident_start(c: char) -> bool {
    c == '$' || c == '_' || c.is_alphabetic()
}

fn is_ident_part(c: char) -> bool {
    is_ident_start(c) || c.is_alphanumeric() || c == '\u{200C}' || c == '\u{200D}'
}

/// Words after which a `/` starts an expression (and so would be a regex).
const EXPRESSION_KEYWORDS: &[&str] = &[
    "return",
    "typeof",
    "instanceof",
    "in",
    "of",
    "new",
    "delete",
    "void",
    "throw",
    "case",
    "do",
    "else",
];

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    out: Lexed,
}

impl<'a> Lexer<'a> {
    fn run(mut self) -> Result<Lexed, SyntaxError> {
        let mut newline_before = false;
        while let Some(c) = self.peek() {
            if is_js_whitespace(c) {
                self.bump();
            } else if is_line_terminator(c) {
                newline_before = true;
                self.bump();
            } else if self.rest().starts_with("//") {
                let start = self.pos;
                while self.peek().is_some_and(|c| !is_line_terminator(c)) {
                    self.bump();
                }
                self.out.comments.push(Span::new(start, self.pos));
            } else if self.rest().starts_with("/*") {
                let start = self.pos;
                let Some(close) = self.rest()[2..].find("*/") else {
                    return Err(SyntaxError::Lex {
                        offset: start,
                        message: "unterminated block comment".into(),
                    });
                };
                let body = &self.rest()[2..2 + close];
                if body.chars().any(is_line_terminator) {
                    newline_before = true;
                }
                self.pos += close + 4;
                self.out.comments.push(Span::new(start, self.pos));
            } else {
                let token = self.token(c, newline_before)?;
                self.out.tokens.push(token);
                newline_before = false;
            }
        }
        Ok(self.out)
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.rest().chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn regex_allowed(&self) -> bool {
        match self.out.tokens.last() {
            None => true,
            Some(t) => match &t.kind {
                TokenKind::Number { .. } | TokenKind::Str(_) => false,
                TokenKind::Ident(name) => EXPRESSION_KEYWORDS.contains(&name.as_str()),
                TokenKind::Punct(p) => !matches!(
                    p,
                    Punct::RParen
                        | Punct::RBracket
                        | Punct::RBrace
                        | Punct::PlusPlus
                        | Punct::MinusMinus
                ),
            },
        }
    }

    fn token(&mut self, c: char, newline_before: bool) -> Result<Token, SyntaxError> {
        let start = self.pos;
        let kind = if c == '`' {
            return Err(SyntaxError::Unsupported {
                span: Span::new(start, start + 1),
                construct: "template literal".into(),
            });
        } else if c == '/' && self.regex_allowed() {
            return Err(SyntaxError::Unsupported {
                span: Span::new(start, start + 1),
                construct: "regular expression literal".into(),
            });
        } else if c == '"' || c == '\'' {
            TokenKind::Str(self.string(c)?)
        } else if c.is_ascii_digit()
            || (c == '.' && self.peek_at(1).is_some_and(|d| d.is_ascii_digit()))
        {
            self.number()?
        } else if is_ident_start(c) {
            while self.peek().is_some_and(is_ident_part) {
                self.bump();
            }
            TokenKind::Ident(self.src[start..self.pos].to_string())
        } else if c == '\\' {
            return Err(SyntaxError::Unsupported {
                span: Span::new(start, start + 1),
                construct: "unicode escape in identifier".into(),
            });
        } else {
            let rest = self.rest();
            let Some((text, p)) = PUNCTUATORS.iter().find(|(text, _)| rest.starts_with(text))
            else {
                return Err(SyntaxError::Lex {
                    offset: start,
                    message: format!("illegal character {c:?}"),
                });
            };
            self.pos += text.len();
            TokenKind::Punct(*p)
        };
        Ok(Token {
            kind,
            span: Span::new(start, self.pos),
            newline_before,
        })
    }

    fn number(&mut self) -> Result<TokenKind, SyntaxError> {
        let start = self.pos;
        let prefixed_radix = match (self.peek(), self.peek_at(1)) {
            (Some('0'), Some('x' | 'X')) => Some(16),
            (Some('0'), Some('o' | 'O')) => Some(8),
            (Some('0'), Some('b' | 'B')) => Some(2),
            _ => None,
        };
        let value = if let Some(radix) = prefixed_radix {
            self.pos += 2;
            let digits_start = self.pos;
            while self.peek().is_some_and(|c| c.is_digit(radix)) {
                self.bump();
            }
            digits_to_f64(&self.src[digits_start..self.pos], radix).ok_or_else(|| {
                SyntaxError::Lex {
                    offset: start,
                    message: "missing digits after radix prefix".into(),
                }
            })?
        } else {
            if self.peek() == Some('0') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
                return Err(SyntaxError::Unsupported {
                    span: Span::new(start, start + 2),
                    construct: "legacy octal literal".into(),
                });
            }
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
            if self.peek() == Some('.') {
                self.bump();
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.bump();
                }
            }
            if matches!(self.peek(), Some('e' | 'E')) {
                let mark = self.pos;
                self.bump();
                if matches!(self.peek(), Some('+' | '-')) {
                    self.bump();
                }
                if !self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    return Err(SyntaxError::Lex {
                        offset: mark,
                        message: "missing exponent digits".into(),
                    });
                }
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.bump();
                }
            }
            let mut text = self.src[start..self.pos].to_string();
            if text.ends_with('.') {
                text.push('0');
            }
            if text.starts_with('.') {
                text.insert(0, '0');
            }
            text.parse::<f64>().map_err(|e| SyntaxError::Lex {
                offset: start,
                message: format!("bad numeric literal: {e}"),
            })?
        };
        if self
            .peek()
            .is_some_and(|c| is_ident_start(c) || c.is_ascii_digit())
        {
            return Err(SyntaxError::Lex {
                offset: self.pos,
                message: "identifier starts immediately after numeric literal".into(),
            });
        }
        Ok(TokenKind::Number {
            value,
            raw: self.src[start..self.pos].to_string(),
        })
    }

    fn string(&mut self, quote: char) -> Result<String, SyntaxError> {
        let start = self.pos;
        self.bump();
        let unterminated = || SyntaxError::Lex {
            offset: start,
            message: "unterminated string literal".into(),
        };
        let mut value = String::new();
        let mut pending_high: Option<u16> = None;
        loop {
            let c = self.bump().ok_or_else(unterminated)?;
            if c == '\\' {
                let e = self.bump().ok_or_else(unterminated)?;
                let unit = match e {
                    'n' => Some('\n'),
                    't' => Some('\t'),
                    'r' => Some('\r'),
                    'b' => Some('\u{8}'),
                    'f' => Some('\u{C}'),
                    'v' => Some('\u{B}'),
                    '0' if !self.peek().is_some_and(|d| d.is_ascii_digit()) => Some('\0'),
                    'x' => {
                        let code = self.hex_escape(2, start)?;
                        Some(char::from_u32(code).expect("two hex digits are a valid scalar"))
                    }
                    'u' => {
                        let code = if self.peek() == Some('{') {
                            self.bump();
                            let digits_start = self.pos;
                            while self.peek().is_some_and(|c| c.is_ascii_hexdigit()) {
                                self.bump();
                            }
                            let digits = &self.src[digits_start..self.pos];
                            if self.bump() != Some('}') || digits.is_empty() {
                                return Err(self.bad_escape(start));
                            }
                            u32::from_str_radix(digits, 16).map_err(|_| self.bad_escape(start))?
                        } else {
                            self.hex_escape(4, start)?
                        };
                        if (0xD800..0xDC00).contains(&code) {
                            flush_surrogate(&mut value, &mut pending_high);
                            pending_high = Some(code as u16);
                            continue;
                        }
                        if (0xDC00..0xE000).contains(&code) {
                            match pending_high.take() {
                                Some(high) => {
                                    let combined = 0x10000
                                        + ((u32::from(high) - 0xD800) << 10)
                                        + (code - 0xDC00);
                                    value.push(char::from_u32(combined).unwrap_or('\u{FFFD}'));
                                }
                                None => value.push('\u{FFFD}'),
                            }
                            continue;
                        }
                        Some(char::from_u32(code).ok_or_else(|| self.bad_escape(start))?)
                    }
                    '\r' => {
                        if self.peek() == Some('\n') {
                            self.bump();
                        }
                        None
                    }
                    '\n' | '\u{2028}' | '\u{2029}' => None,
                    d if d.is_ascii_digit() => {
                        return Err(SyntaxError::Unsupported {
                            span: Span::new(self.pos - 2, self.pos),
                            construct: "octal escape sequence".into(),
                        })
                    }
                    other => Some(other),
                };
                flush_surrogate(&mut value, &mut pending_high);
                value.extend(unit);
            } else if c == quote {
                flush_surrogate(&mut value, &mut pending_high);
                return Ok(value);
            } else if c == '\n' || c == '\r' {
                return Err(unterminated());
            } else {
                flush_surrogate(&mut value, &mut pending_high);
                value.push(c);
            }
        }
    }

    fn hex_escape(&mut self, width: usize, start: usize) -> Result<u32, SyntaxError> {
        let digits = self
            .rest()
            .get(..width)
            .ok_or_else(|| self.bad_escape(start))?;
        if !digits.chars().all(|c| c.is_ascii_hexdigit()) {
            return Err(self.bad_escape(start));
        }
        self.pos += width;
        Ok(u32::from_str_radix(digits, 16).expect("checked hex digits"))
    }

    fn bad_escape(&self, start: usize) -> SyntaxError {
        SyntaxError::Lex {
            offset: start,
            message: "malformed escape sequence in string literal".into(),
        }
    }
}

// Lone surrogates cannot live in a Rust string.
fn flush_surrogate(value: &mut String, pending: &mut Option<u16>) {
    if pending.take().is_some() {
        value.push('\u{FFFD}');
    }
}
