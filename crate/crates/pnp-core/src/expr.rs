//! Minimal arithmetic expressions for initial-data and coefficient fields:
//! `+ - * / ^`, `cos`, `sin`, `exp`, the constants `pi` and `e`, numeric
//! literals, and the variable `x`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Cos(Box<Node>),
    Sin(Box<Node>),
    Exp(Box<Node>),
}

/// A parsed expression in the variable `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    source: String,
}

impl Expr {
    pub fn parse(source: &str) -> Result<Self> {
        let mut p = Parser {
            bytes: source.as_bytes(),
            pos: 0,
        };
        p.skip_ws();
        let root = p.expr()?;
        p.skip_ws();
        if p.pos != p.bytes.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(Expr {
            root,
            source: source.trim().to_string(),
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, x: f64) -> f64 {
        fn go(n: &Node, x: f64) -> f64 {
            match n {
                Node::Num(v) => *v,
                Node::Var => x,
                Node::Neg(a) => -go(a, x),
                Node::Add(a, b) => go(a, x) + go(b, x),
                Node::Sub(a, b) => go(a, x) - go(b, x),
                Node::Mul(a, b) => go(a, x) * go(b, x),
                Node::Div(a, b) => go(a, x) / go(b, x),
                Node::Pow(a, b) => go(a, x).powf(go(b, x)),
                Node::Cos(a) => go(a, x).cos(),
                Node::Sin(a) => go(a, x).sin(),
                Node::Exp(a) => go(a, x).exp(),
            }
        }
        go(&self.root, x)
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: &str) -> Error {
        Error::ExprParse {
            position: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, byte: u8) -> bool {
        if self.peek() == Some(byte) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            self.skip_ws();
            if self.eat(b'+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            self.skip_ws();
            if self.eat(b'*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        self.skip_ws();
        if self.eat(b'-') {
            Ok(Node::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        self.skip_ws();
        if self.eat(b'^') {
            // right-associative
            Ok(Node::Pow(Box::new(base), Box::new(self.unary()?)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Node> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.skip_ws();
                if !self.eat(b')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            _ => Err(self.error("expected a number, name, or '('")),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || c == b'.' {
                self.pos += 1;
            } else if (c == b'e' || c == b'E')
                && self
                    .bytes
                    .get(self.pos + 1)
                    .is_some_and(|&n| n.is_ascii_digit() || n == b'+' || n == b'-')
            {
                self.pos += 2;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii slice");
        text.parse::<f64>().map(Node::Num).map_err(|_| Error::ExprParse {
            position: start,
            message: format!("invalid number '{text}'"),
        })
    }

    fn ident(&mut self) -> Result<Node> {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii slice");
        match name {
            "x" => Ok(Node::Var),
            "pi" => Ok(Node::Num(std::f64::consts::PI)),
            "e" => Ok(Node::Num(std::f64::consts::E)),
            "cos" | "sin" | "exp" => {
                self.skip_ws();
                if !self.eat(b'(') {
                    return Err(self.error("expected '(' after function name"));
                }
                let arg = Box::new(self.expr()?);
                self.skip_ws();
                if !self.eat(b')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(match name {
                    "cos" => Node::Cos(arg),
                    "sin" => Node::Sin(arg),
                    _ => Node::Exp(arg),
                })
            }
            _ => Err(Error::ExprParse {
                position: start,
                message: format!("unknown name '{name}'"),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(src: &str, x: f64) -> f64 {
        Expr::parse(src).unwrap().eval(x)
    }

    #[test]
    fn arithmetic_and_precedence() {
        assert_eq!(eval("1 + 2 * 3", 0.0), 7.0);
        assert_eq!(eval("(1 + 2) * 3", 0.0), 9.0);
        assert_eq!(eval("2 ^ 3 ^ 2", 0.0), 512.0); // right-assoc
        assert_eq!(eval("-2 ^ 2", 0.0), -4.0); // unary binds the whole power
        assert_eq!(eval("6 / 3 / 2", 0.0), 1.0);
        assert_eq!(eval("1 - 2 - 3", 0.0), -4.0);
    }

    #[test]
    fn constants_functions_and_variable() {
        assert!((eval("cos(pi*x)", 1.0) + 1.0).abs() < 1e-15);
        assert!((eval("exp(1)", 0.0) - std::f64::consts::E).abs() < 1e-15);
        assert!((eval("sin(pi/2)", 0.0) - 1.0).abs() < 1e-15);
        assert_eq!(eval("1 + 0.5*cos(pi*x)", 0.0), 1.5);
        assert_eq!(eval("2.5e-1 * x", 2.0), 0.5);
    }

    #[test]
    fn parse_errors_carry_positions() {
        for bad in ["1 +", "foo(2)", "cos 2", "(1", "1 ) 2", "1..2 +"] {
            let err = Expr::parse(bad).unwrap_err();
            assert!(matches!(err, Error::ExprParse { .. }), "{bad}: {err}");
        }
    }

    #[test]
    fn source_round_trips() {
        let e = Expr::parse("  1 + 0.5*cos(pi*x) ").unwrap();
        assert_eq!(e.source(), "1 + 0.5*cos(pi*x)");
        let again = Expr::parse(e.source()).unwrap();
        assert_eq!(e, again);
    }
}
