//! Arithmetic expressions over named parameters.
//!
//! The rule language is deliberately small: literals, parameter names, the
//! four arithmetic operators, unary minus, and parentheses. No conditionals.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Number(f64),
    Param(String),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
}

/// A parsed arithmetic expression; keeps its source text for serialization.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    pub fn parse(source: &str) -> Result<Expr> {
        let tokens = tokenize(source)?;
        let mut parser = Parser { tokens, pos: 0 };
        let root = parser.expr()?;
        if parser.pos != parser.tokens.len() {
            return Err(Error::parse(format!(
                "expression {source:?}: unexpected trailing input"
            )));
        }
        Ok(Expr {
            source: source.to_string(),
            root,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Parameter names the expression references.
    pub fn params(&self) -> Vec<String> {
        let mut out = Vec::new();
        collect_params(&self.root, &mut out);
        out
    }

    pub fn eval(&self, params: &BTreeMap<String, f64>) -> Result<f64> {
        let v = eval_node(&self.root, params)?;
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("expression {:?}", self.source)));
        }
        Ok(v)
    }
}

fn collect_params(node: &Node, out: &mut Vec<String>) {
    match node {
        Node::Number(_) => {}
        Node::Param(name) => {
            if !out.contains(name) {
                out.push(name.clone());
            }
        }
        Node::Neg(a) => collect_params(a, out),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
            collect_params(a, out);
            collect_params(b, out);
        }
    }
}

fn eval_node(node: &Node, params: &BTreeMap<String, f64>) -> Result<f64> {
    Ok(match node {
        Node::Number(v) => *v,
        Node::Param(name) => *params
            .get(name)
            .ok_or_else(|| Error::invalid(format!("missing parameter {name:?}")))?,
        Node::Neg(a) => -eval_node(a, params)?,
        Node::Add(a, b) => eval_node(a, params)? + eval_node(b, params)?,
        Node::Sub(a, b) => eval_node(a, params)? - eval_node(b, params)?,
        Node::Mul(a, b) => eval_node(a, params)? * eval_node(b, params)?,
        Node::Div(a, b) => eval_node(a, params)? / eval_node(b, params)?,
    })
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
}

fn tokenize(source: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = source.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                tokens.push(Token::Plus);
                i += 1;
            }
            '-' => {
                tokens.push(Token::Minus);
                i += 1;
            }
            '*' => {
                tokens.push(Token::Star);
                i += 1;
            }
            '/' => {
                tokens.push(Token::Slash);
                i += 1;
            }
            '(' => {
                tokens.push(Token::LParen);
                i += 1;
            }
            ')' => {
                tokens.push(Token::RParen);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                // optional exponent
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let value = f64::from_str(&text)
                    .map_err(|_| Error::parse(format!("expression: bad number {text:?}")))?;
                tokens.push(Token::Number(value));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                tokens.push(Token::Ident(chars[start..i].iter().collect()));
            }
            other => {
                return Err(Error::parse(format!(
                    "expression {source:?}: unexpected character {other:?}"
                )))
            }
        }
    }
    if tokens.is_empty() {
        return Err(Error::parse("empty expression"));
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Node> {
        let mut left = self.term()?;
        while let Some(op) = self.peek() {
            match op {
                Token::Plus => {
                    self.next();
                    left = Node::Add(Box::new(left), Box::new(self.term()?));
                }
                Token::Minus => {
                    self.next();
                    left = Node::Sub(Box::new(left), Box::new(self.term()?));
                }
                _ => break,
            }
        }
        Ok(left)
    }

    fn term(&mut self) -> Result<Node> {
        let mut left = self.unary()?;
        while let Some(op) = self.peek() {
            match op {
                Token::Star => {
                    self.next();
                    left = Node::Mul(Box::new(left), Box::new(self.unary()?));
                }
                Token::Slash => {
                    self.next();
                    left = Node::Div(Box::new(left), Box::new(self.unary()?));
                }
                _ => break,
            }
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek() {
            Some(Token::Minus) => {
                self.next();
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Node> {
        match self.next() {
            Some(Token::Number(v)) => Ok(Node::Number(v)),
            Some(Token::Ident(name)) => Ok(Node::Param(name)),
            Some(Token::LParen) => {
                let inner = self.expr()?;
                match self.next() {
                    Some(Token::RParen) => Ok(inner),
                    _ => Err(Error::parse("expression: missing closing parenthesis")),
                }
            }
            other => Err(Error::parse(format!(
                "expression: unexpected token {other:?}"
            ))),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.source)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Expr::parse(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn arithmetic_and_precedence() {
        let e = Expr::parse("1 + 2 * 3").unwrap();
        assert_eq!(e.eval(&params(&[])).unwrap(), 7.0);
        let e = Expr::parse("(1 + 2) * 3").unwrap();
        assert_eq!(e.eval(&params(&[])).unwrap(), 9.0);
        let e = Expr::parse("-length / 2").unwrap();
        assert_eq!(e.eval(&params(&[("length", 4.0)])).unwrap(), -2.0);
    }

    #[test]
    fn missing_parameter_is_an_error() {
        let e = Expr::parse("length - 4").unwrap();
        assert!(e.eval(&params(&[])).is_err());
    }

    #[test]
    fn rejects_garbage() {
        assert!(Expr::parse("1 +").is_err());
        assert!(Expr::parse("a ? b").is_err());
        assert!(Expr::parse("").is_err());
        assert!(Expr::parse("(1").is_err());
    }

    #[test]
    fn division_by_zero_is_non_finite() {
        let e = Expr::parse("1 / x").unwrap();
        assert!(matches!(e.eval(&params(&[("x", 0.0)])), Err(Error::NonFinite(_))));
    }

    #[test]
    fn serde_roundtrip() {
        let e = Expr::parse("2*(length - 4)").unwrap();
        let json = serde_json::to_string(&e).unwrap();
        assert_eq!(json, "\"2*(length - 4)\"");
        let back: Expr = serde_json::from_str(&json).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn lists_parameters() {
        let e = Expr::parse("a + b * a - 2").unwrap();
        assert_eq!(e.params(), vec!["a".to_string(), "b".to_string()]);
    }
}
