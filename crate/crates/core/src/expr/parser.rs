//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := factor (("*"|"/") factor)*
//! factor := ("-")? power
//! power  := atom ("^" factor)?
//! atom   := number | ident | ident "(" expr ("," expr)* ")" | "(" expr ")"
//! ```

use super::ast::{BinaryOp, Expr, UnaryOp};
use super::lexer::{tokenize, Token, TokenKind};
use std::f64::consts::{E, PI};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: found {found}, expected one of {}", expected.join(", "))]
    Syntax {
        offset: usize,
        found: String,
        expected: Vec<String>,
    },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("function `{name}` at byte {offset} takes {expected} argument(s), got {got}")]
    Arity {
        offset: usize,
        name: String,
        expected: usize,
        got: usize,
    },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::Arity { offset, .. } => *offset,
        }
    }
}

/// Token cursor usable by both the expression parser and the scene parser.
pub struct Cursor<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(tokens: &'a [Token]) -> Self {
        Cursor { tokens, pos: 0 }
    }

    pub fn peek(&self) -> &TokenKind {
        &self.tokens[self.pos.min(self.tokens.len() - 1)].kind
    }

    pub fn peek_at(&self, ahead: usize) -> &TokenKind {
        &self.tokens[(self.pos + ahead).min(self.tokens.len() - 1)].kind
    }

    pub fn offset(&self) -> usize {
        self.tokens[self.pos.min(self.tokens.len() - 1)].offset
    }

    pub fn bump(&mut self) -> &Token {
        let t = &self.tokens[self.pos.min(self.tokens.len() - 1)];
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    pub fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek() == kind {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn error(&self, expected: &[&str]) -> ParseError {
        ParseError::Syntax {
            offset: self.offset(),
            found: self.peek().to_string(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn expect(&mut self, kind: &TokenKind, label: &str) -> Result<(), ParseError> {
        if self.eat(kind) {
            Ok(())
        } else {
            Err(self.error(&[label]))
        }
    }
}

/// Which identifiers are accepted as variables.
#[derive(Clone, Copy)]
pub enum VarPolicy<'a> {
    Any,
    Only(&'a [String]),
}

pub struct ExprParser<'a, 'c> {
    pub cursor: &'c mut Cursor<'a>,
    pub vars: VarPolicy<'c>,
}

const ATOM_START: &[&str] = &["number", "identifier", "`(`", "`-`"];

impl ExprParser<'_, '_> {
    pub fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.cursor.peek() {
                TokenKind::Plus => BinaryOp::Add,
                TokenKind::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.cursor.bump();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.cursor.peek() {
                TokenKind::Star => BinaryOp::Mul,
                TokenKind::Slash => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.cursor.bump();
            let rhs = self.factor()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.cursor.eat(&TokenKind::Minus) {
            let inner = self.power()?;
            Ok(Expr::unary(UnaryOp::Neg, inner))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.cursor.eat(&TokenKind::Caret) {
            let exponent = self.factor()?;
            Ok(Expr::binary(BinaryOp::Pow, base, exponent))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.cursor.offset();
        match self.cursor.peek().clone() {
            TokenKind::Number(v) => {
                self.cursor.bump();
                Ok(Expr::Const(v))
            }
            TokenKind::LParen => {
                self.cursor.bump();
                let e = self.expr()?;
                self.cursor.expect(&TokenKind::RParen, "`)`")?;
                Ok(e)
            }
            TokenKind::Ident(name) => {
                self.cursor.bump();
                if self.cursor.eat(&TokenKind::LParen) {
                    let mut args = vec![self.expr()?];
                    while self.cursor.eat(&TokenKind::Comma) {
                        args.push(self.expr()?);
                    }
                    if !self.cursor.eat(&TokenKind::RParen) {
                        return Err(self.cursor.error(&["`,`", "`)`"]));
                    }
                    return self.call(&name, offset, args);
                }
                match name.as_str() {
                    "pi" => Ok(Expr::Const(PI)),
                    "e" => Ok(Expr::Const(E)),
                    _ => match self.vars {
                        VarPolicy::Any => Ok(Expr::Var(name)),
                        VarPolicy::Only(allowed) if allowed.contains(&name) => {
                            Ok(Expr::Var(name))
                        }
                        VarPolicy::Only(_) => Err(ParseError::UnknownIdentifier { offset, name }),
                    },
                }
            }
            _ => Err(self.cursor.error(ATOM_START)),
        }
    }

    fn call(&mut self, name: &str, offset: usize, mut args: Vec<Expr>) -> Result<Expr, ParseError> {
        let arity = |expected: usize, got: usize| ParseError::Arity {
            offset,
            name: name.to_string(),
            expected,
            got,
        };
        if name == "atan2" {
            if args.len() != 2 {
                return Err(arity(2, args.len()));
            }
            let x = args.pop().unwrap();
            let y = args.pop().unwrap();
            return Ok(Expr::Atan2(Box::new(y), Box::new(x)));
        }
        let op = UnaryOp::from_name(name).ok_or_else(|| ParseError::UnknownIdentifier {
            offset,
            name: name.to_string(),
        })?;
        if args.len() != 1 {
            return Err(arity(1, args.len()));
        }
        Ok(Expr::unary(op, args.pop().unwrap()))
    }
}

/// Parses an expression in which any identifier other than a function name or
/// `pi`/`e` is a variable.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    parse_with(text, VarPolicy::Any)
}

/// Parses an expression whose free variables must come from `vars`.
pub fn parse_expr_in(text: &str, vars: &[String]) -> Result<Expr, ParseError> {
    parse_with(text, VarPolicy::Only(vars))
}

fn parse_with(text: &str, vars: VarPolicy<'_>) -> Result<Expr, ParseError> {
    let tokens = tokenize(text).map_err(|e| ParseError::Syntax {
        offset: e.offset,
        found: format!("character {:?}", e.ch),
        expected: ATOM_START.iter().map(|s| s.to_string()).collect(),
    })?;
    let mut cursor = Cursor::new(&tokens);
    let mut p = ExprParser {
        cursor: &mut cursor,
        vars,
    };
    let e = p.expr()?;
    if *cursor.peek() != TokenKind::Eof {
        return Err(cursor.error(&["`+`", "`-`", "`*`", "`/`", "`^`", "end of input"]));
    }
    Ok(e)
}
