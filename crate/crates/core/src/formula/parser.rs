//! Recursive-descent parser for the formula text format.
//!
//! ```text
//! imp   := or ( "->" imp )?
//! or    := and ( "|" and )*
//! and   := unary ( "&" unary )*
//! unary := "~" unary | "[" agents "]" unary | "<" agents ">" unary | atom
//! atom  := "T" | "F" | prop | "(" imp ")"
//! ```

use super::ast::*;
use crate::coalition::Coalition;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at {pos}: {msg}")]
    SyntaxError { pos: usize, msg: String },
    #[error("unknown agent '{0}'")]
    UnknownAgent(String),
    #[error("unknown proposition '{0}'")]
    UnknownProp(String),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Not,
    And,
    Or,
    Imp,
    LParen,
    RParen,
    LBrack,
    RBrack,
    LAngle,
    RAngle,
    Comma,
    End,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '~' => Tok::Not,
            '&' => Tok::And,
            '|' => Tok::Or,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBrack,
            ']' => Tok::RBrack,
            '<' => Tok::LAngle,
            '>' => Tok::RAngle,
            ',' => Tok::Comma,
            '-' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    i += 1;
                    Tok::Imp
                } else {
                    return Err(ParseError::SyntaxError {
                        pos: i,
                        msg: "expected '->'".into(),
                    });
                }
            }
            c if c.is_ascii_alphanumeric() || c == '_' => {
                while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push((start, Tok::Ident(text[start..i].to_string())));
                continue;
            }
            _ => {
                return Err(ParseError::SyntaxError {
                    pos: i,
                    msg: format!("unexpected character '{c}'"),
                })
            }
        };
        out.push((start, tok));
        i += 1;
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    i: usize,
    agents: &'a [String],
    props: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].1
    }

    fn pos(&self) -> usize {
        self.toks[self.i].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].1.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn err<T>(&self, msg: &str) -> Result<T, ParseError> {
        Err(ParseError::SyntaxError {
            pos: self.pos(),
            msg: msg.to_string(),
        })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.err(&format!("expected {what}"))
        }
    }

    fn imp(&mut self) -> Result<F, ParseError> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Imp {
            self.bump();
            let rhs = self.imp()?;
            return Ok(implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<F, ParseError> {
        let mut parts = vec![self.and()?];
        while *self.peek() == Tok::Or {
            self.bump();
            parts.push(self.and()?);
        }
        Ok(or(parts))
    }

    fn and(&mut self) -> Result<F, ParseError> {
        let mut parts = vec![self.unary()?];
        while *self.peek() == Tok::And {
            self.bump();
            parts.push(self.unary()?);
        }
        Ok(and(parts))
    }

    fn agents(&mut self, close: Tok) -> Result<Coalition, ParseError> {
        let mut c = Coalition::EMPTY;
        if *self.peek() == close {
            self.bump();
            return Ok(c);
        }
        loop {
            match self.bump() {
                Tok::Ident(name) => {
                    let a = self
                        .agents
                        .iter()
                        .position(|x| *x == name)
                        .ok_or(ParseError::UnknownAgent(name))?;
                    c = c.with(a);
                }
                _ => {
                    self.i -= 1;
                    return self.err("expected agent name");
                }
            }
            match self.bump() {
                Tok::Comma => continue,
                t if t == close => return Ok(c),
                _ => {
                    self.i -= 1;
                    return self.err("expected ',' or end of agent list");
                }
            }
        }
    }

    fn unary(&mut self) -> Result<F, ParseError> {
        match self.peek().clone() {
            Tok::Not => {
                self.bump();
                Ok(not(self.unary()?))
            }
            Tok::LBrack => {
                self.bump();
                let c = self.agents(Tok::RBrack)?;
                Ok(boxed(c, self.unary()?))
            }
            Tok::LAngle => {
                self.bump();
                let c = self.agents(Tok::RAngle)?;
                Ok(diamond(c, self.unary()?))
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<F, ParseError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let f = self.imp()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(f)
            }
            Tok::Ident(name) => {
                self.bump();
                match name.as_str() {
                    "T" => Ok(top()),
                    "F" => Ok(bot()),
                    _ => match self.props.iter().position(|p| *p == name) {
                        Some(i) => Ok(prop(i)),
                        None => Err(ParseError::UnknownProp(name)),
                    },
                }
            }
            _ => self.err("expected formula"),
        }
    }
}

/// Parse formula text against the given agent and proposition names.
pub fn parse(text: &str, agents: &[String], props: &[String]) -> Result<F, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        i: 0,
        agents,
        props,
    };
    let f = p.imp()?;
    if *p.peek() != Tok::End {
        return p.err("trailing input");
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn sig() -> (Vec<String>, Vec<String>) {
        (
            vec!["a".into(), "b".into()],
            vec!["p0".into(), "p1".into()],
        )
    }

    #[test]
    fn examples() {
        let (ag, pr) = sig();
        assert_eq!(*parse("T", &ag, &pr).unwrap(), Formula::Top);
        let ab = Coalition::full(2);
        assert_eq!(parse("[a,b] p0", &ag, &pr).unwrap(), boxed(ab, prop(0)));
        let a = Coalition::singleton(0);
        let b = Coalition::singleton(1);
        assert_eq!(
            parse("<a>(p0 & ~[b]p1)", &ag, &pr).unwrap(),
            diamond(a, and(vec![prop(0), not(boxed(b, prop(1)))]))
        );
        assert_eq!(parse("[]p0", &ag, &pr).unwrap(), boxed(Coalition::EMPTY, prop(0)));
        assert_eq!(parse("<>F", &ag, &pr).unwrap(), diamond(Coalition::EMPTY, bot()));
    }

    #[test]
    fn implication_desugars() {
        let (ag, pr) = sig();
        assert_eq!(
            parse("p0 -> p1", &ag, &pr).unwrap(),
            Arc::new(Formula::Or(vec![not(prop(0)), prop(1)]))
        );
    }

    #[test]
    fn errors() {
        let (ag, pr) = sig();
        assert_eq!(parse("[c]p0", &ag, &pr), Err(ParseError::UnknownAgent("c".into())));
        assert_eq!(parse("p7", &ag, &pr), Err(ParseError::UnknownProp("p7".into())));
        assert!(matches!(parse("p0 &", &ag, &pr), Err(ParseError::SyntaxError { pos: 4, .. })));
        assert!(matches!(parse("(p0", &ag, &pr), Err(ParseError::SyntaxError { .. })));
        assert!(matches!(parse("p0 - p1", &ag, &pr), Err(ParseError::SyntaxError { pos: 3, .. })));
    }

    #[test]
    fn precedence() {
        let (ag, pr) = sig();
        let f = parse("p0 & p1 | ~p0", &ag, &pr).unwrap();
        assert_eq!(f, or(vec![and(vec![prop(0), prop(1)]), not(prop(0))]));
    }
}
