//! Recursive-descent parser for the concrete formula syntax.
//!
//! Grammar (whitespace insignificant):
//! ```text
//! formula := iff
//! iff     := imp ("<->" imp)*            left-associative
//! imp     := or ("->" or)*               right-associative
//! or      := and ("|" and)*
//! and     := unary ("&" unary)*
//! unary   := "~" unary | "D{" agents "}" unary | "C{" agents "}" unary
//!          | "K{" agent "}" unary | "(" formula ")" | atom
//! agents  := agent ("," agent)*
//! atom, agent := [a-zA-Z][a-zA-Z0-9_]*
//! ```
//! `|`, `->`, `<->` and `K{a}` are sugar and expand into `~`, `&`, `D`, `C`.

use std::fmt;
use std::sync::Arc;

use crate::formula::{self, Coalition, Formula, Symbols};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// Byte offset into the input.
    pub pos: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at offset {}: {}", self.pos, self.msg)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Tilde,
    Amp,
    Pipe,
    Arrow,
    DArrow,
    LPar,
    RPar,
    LBrace,
    RBrace,
    Comma,
    Eof,
}

fn lex(input: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = input.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '~' => {
                i += 1;
                Tok::Tilde
            }
            '&' => {
                i += 1;
                Tok::Amp
            }
            '|' => {
                i += 1;
                Tok::Pipe
            }
            '(' => {
                i += 1;
                Tok::LPar
            }
            ')' => {
                i += 1;
                Tok::RPar
            }
            '{' => {
                i += 1;
                Tok::LBrace
            }
            '}' => {
                i += 1;
                Tok::RBrace
            }
            ',' => {
                i += 1;
                Tok::Comma
            }
            '-' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    i += 2;
                    Tok::Arrow
                } else {
                    return Err(ParseError {
                        pos: start,
                        msg: "expected '->' after '-'".into(),
                    });
                }
            }
            '<' => {
                if bytes.get(i + 1) == Some(&b'-') && bytes.get(i + 2) == Some(&b'>') {
                    i += 3;
                    Tok::DArrow
                } else {
                    return Err(ParseError {
                        pos: start,
                        msg: "expected '<->' after '<'".into(),
                    });
                }
            }
            _ if c.is_ascii_alphabetic() => {
                let mut j = i + 1;
                while j < bytes.len()
                    && ((bytes[j] as char).is_ascii_alphanumeric() || bytes[j] == b'_')
                {
                    j += 1;
                }
                let s = input[i..j].to_string();
                i = j;
                Tok::Ident(s)
            }
            _ => {
                return Err(ParseError {
                    pos: start,
                    msg: format!("unknown token '{c}'"),
                })
            }
        };
        toks.push((start, tok));
    }
    toks.push((input.len(), Tok::Eof));
    Ok(toks)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    sym: &'a mut Symbols,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn here(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: &Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn err(&self, msg: String) -> ParseError {
        ParseError {
            pos: self.here(),
            msg,
        }
    }

    fn formula(&mut self) -> Result<Arc<Formula>, ParseError> {
        self.iff()
    }

    fn iff(&mut self) -> Result<Arc<Formula>, ParseError> {
        let mut left = self.imp()?;
        while *self.peek() == Tok::DArrow {
            self.bump();
            let right = self.imp()?;
            left = formula::iff(left, right);
        }
        Ok(left)
    }

    fn imp(&mut self) -> Result<Arc<Formula>, ParseError> {
        let left = self.or()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let right = self.imp()?;
            Ok(formula::implies(left, right))
        } else {
            Ok(left)
        }
    }

    fn or(&mut self) -> Result<Arc<Formula>, ParseError> {
        let mut left = self.and()?;
        while *self.peek() == Tok::Pipe {
            self.bump();
            let right = self.and()?;
            left = formula::or(left, right);
        }
        Ok(left)
    }

    fn and(&mut self) -> Result<Arc<Formula>, ParseError> {
        let mut left = self.unary()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            let right = self.unary()?;
            left = formula::and(left, right);
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Arc<Formula>, ParseError> {
        match self.peek().clone() {
            Tok::Tilde => {
                self.bump();
                Ok(formula::not(self.unary()?))
            }
            Tok::LPar => {
                self.bump();
                let f = self.formula()?;
                self.expect(&Tok::RPar, "')'")?;
                Ok(f)
            }
            Tok::Ident(name) => {
                // D/C/K followed by '{' start a knowledge operator,
                // otherwise the identifier is an atom.
                let is_op = matches!(name.as_str(), "D" | "C" | "K");
                if is_op && self.toks[self.pos + 1].1 == Tok::LBrace {
                    self.bump(); // operator name
                    self.bump(); // '{'
                    let coal = self.coalition(&name)?;
                    self.expect(&Tok::RBrace, "'}'")?;
                    let body = self.unary()?;
                    Ok(match name.as_str() {
                        "C" => formula::common(coal, body),
                        // K{a} is D{a}
                        _ => formula::dist(coal, body),
                    })
                } else {
                    self.bump();
                    Ok(formula::atom(self.sym.atom_id(&name)))
                }
            }
            Tok::Eof => Err(self.err("unexpected end of input".into())),
            other => Err(self.err(format!("unexpected token {other:?}"))),
        }
    }

    fn coalition(&mut self, op: &str) -> Result<Coalition, ParseError> {
        let mut agents = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Ident(name) => {
                    self.bump();
                    let id = self
                        .sym
                        .agent_id(&name)
                        .map_err(|m| self.err(m))?;
                    agents.push(id);
                }
                Tok::RBrace if agents.is_empty() => {
                    return Err(self.err("empty coalition".into()));
                }
                _ => return Err(self.err("expected agent name".into())),
            }
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        if op == "K" && agents.len() != 1 {
            return Err(self.err("K takes a single agent".into()));
        }
        Coalition::from_agents(agents).ok_or_else(|| self.err("empty coalition".into()))
    }
}

/// Parses a single formula, interning atom and agent names into `sym`.
pub fn parse(input: &str, sym: &mut Symbols) -> Result<Arc<Formula>, ParseError> {
    let toks = lex(input)?;
    let mut p = Parser { toks, pos: 0, sym };
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return Err(p.err("trailing input".into()));
    }
    Ok(f)
}

/// Parses one formula per non-empty, non-comment line, as a set.
pub fn parse_set(input: &str, sym: &mut Symbols) -> Result<Vec<Arc<Formula>>, ParseError> {
    let mut out = Vec::new();
    for line in input.lines() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(parse(t, sym)?);
    }
    Ok(out)
}
