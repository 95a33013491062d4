//! Affine expressions over parameters and row values.
//!
//! An expression is a constant plus a sum of terms, each term being a real
//! coefficient times at most one parameter times at most one row value
//! (a covariate column or the response). This is enough for covariate-model
//! parameters like `alpha_dvt + beta_dvt*dvc` and mechanism predictors like
//! `phi0 + phi1*x1 + phi2*x2`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operand {
    Column(usize),
    Response,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symbol {
    Param(usize),
    Operand(Operand),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coef: f64,
    pub param: Option<usize>,
    pub operand: Option<Operand>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Affine {
    pub constant: f64,
    pub terms: Vec<Term>,
}

impl Affine {
    pub fn constant(value: f64) -> Self {
        Self {
            constant: value,
            terms: Vec::new(),
        }
    }

    pub fn param(index: usize) -> Self {
        Self {
            constant: 0.0,
            terms: vec![Term {
                coef: 1.0,
                param: Some(index),
                operand: None,
            }],
        }
    }

    pub fn with_term(mut self, coef: f64, param: Option<usize>, operand: Option<Operand>) -> Self {
        self.terms.push(Term { coef, param, operand });
        self
    }

    #[inline]
    pub fn eval(&self, params: &[f64], row: &[f64], y: f64) -> f64 {
        let mut acc = self.constant;
        for t in &self.terms {
            let mut v = t.coef;
            if let Some(p) = t.param {
                v *= params[p];
            }
            match t.operand {
                Some(Operand::Column(j)) => v *= row[j],
                Some(Operand::Response) => v *= y,
                None => {}
            }
            acc += v;
        }
        acc
    }

    pub fn columns(&self) -> impl Iterator<Item = usize> + '_ {
        self.terms.iter().filter_map(|t| match t.operand {
            Some(Operand::Column(j)) => Some(j),
            _ => None,
        })
    }

    pub fn params(&self) -> impl Iterator<Item = usize> + '_ {
        self.terms.iter().filter_map(|t| t.param)
    }

    pub fn uses_response(&self) -> bool {
        self.terms.iter().any(|t| t.operand == Some(Operand::Response))
    }

    /// Parses `text`, resolving identifiers through `resolve`.
    pub fn parse(text: &str, resolve: impl Fn(&str) -> Option<Symbol>) -> Result<Self> {
        let fail = |reason: String| Error::Expression {
            expr: text.to_string(),
            reason,
        };
        let tokens = tokenize(text).map_err(fail)?;
        if tokens.is_empty() {
            return Err(fail("empty expression".into()));
        }
        let mut out = Affine::default();
        let mut pos = 0;
        let mut first = true;
        while pos < tokens.len() {
            let mut sign = 1.0;
            match tokens[pos] {
                Token::Plus => pos += 1,
                Token::Minus => {
                    sign = -1.0;
                    pos += 1;
                }
                _ if first => {}
                _ => return Err(fail("expected `+` or `-` between terms".into())),
            }
            first = false;
            let mut term = Term {
                coef: sign,
                param: None,
                operand: None,
            };
            loop {
                match tokens.get(pos) {
                    Some(Token::Number(v)) => term.coef *= v,
                    Some(Token::Ident(name)) => match resolve(name) {
                        Some(Symbol::Param(i)) if term.param.is_none() => term.param = Some(i),
                        Some(Symbol::Operand(o)) if term.operand.is_none() => term.operand = Some(o),
                        Some(_) => {
                            return Err(fail(format!(
                                "`{name}` makes the term non-affine (at most one parameter and one column per term)"
                            )))
                        }
                        None => return Err(fail(format!("unknown name `{name}`"))),
                    },
                    _ => return Err(fail("expected a number or a name".into())),
                }
                pos += 1;
                if tokens.get(pos) == Some(&Token::Star) {
                    pos += 1;
                } else {
                    break;
                }
            }
            if term.param.is_none() && term.operand.is_none() {
                out.constant += term.coef;
            } else {
                out.terms.push(term);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
}

fn tokenize(text: &str) -> std::result::Result<Vec<Token>, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1
            }
            '-' => {
                out.push(Token::Minus);
                i += 1
            }
            '*' => {
                out.push(Token::Star);
                i += 1
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
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
                let s: String = chars[start..i].iter().collect();
                let v = s.parse::<f64>().map_err(|_| format!("bad number `{s}`"))?;
                out.push(Token::Number(v));
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                    i += 1;
                }
                out.push(Token::Ident(chars[start..i].iter().collect()));
            }
            other => return Err(format!("unexpected character `{other}`")),
        }
    }
    Ok(out)
}
