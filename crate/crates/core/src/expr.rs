//! Closed-form curvature candidates written as text.
//!
//! Grammar: `x1 y1 x2 y2` are the real coordinates of (ξ₁, ξ₂), `pi` and `e`
//! are constants, operators are `+ - * / ^` with `^` right-associative, and
//! the functions are `exp ln sqrt sin cos`.
//!
//! ```
//! use crcurv_core::expr::Expr;
//! let k = Expr::parse("2 + x2^2 - 0.5*x1").unwrap();
//! assert_eq!(k.eval_f64([0.0, 0.0, 1.0, 0.0]), 3.0);
//! ```

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use core::fmt;

use crate::scalar::Scalar;
use crate::sphere::GenericAmbient;

#[derive(Clone, Debug, PartialEq)]
pub struct ParseError {
    /// Byte offset into the source.
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at position {}: {}", self.position, self.message)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn has_var(&self) -> bool {
        match self {
            Node::Num(_) => false,
            Node::Var(_) => true,
            Node::Neg(a) | Node::Call(_, a) => a.has_var(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                a.has_var() || b.has_var()
            }
        }
    }

    fn fold(self) -> Node {
        let f = |a: Box<Node>| Box::new(a.fold());
        let folded = match self {
            Node::Neg(a) => Node::Neg(f(a)),
            Node::Call(g, a) => Node::Call(g, f(a)),
            Node::Add(a, b) => Node::Add(f(a), f(b)),
            Node::Sub(a, b) => Node::Sub(f(a), f(b)),
            Node::Mul(a, b) => Node::Mul(f(a), f(b)),
            Node::Div(a, b) => Node::Div(f(a), f(b)),
            Node::Pow(a, b) => Node::Pow(f(a), f(b)),
            leaf => leaf,
        };
        if folded.has_var() {
            folded
        } else {
            Node::Num(folded.eval::<f64>(&[0.0; 4]))
        }
    }

    pub fn eval<T: Scalar>(&self, x: &[T; 4]) -> T {
        match self {
            Node::Num(v) => T::cst(*v),
            Node::Var(i) => x[*i],
            Node::Neg(a) => -a.eval(x),
            Node::Add(a, b) => a.eval(x) + b.eval(x),
            Node::Sub(a, b) => a.eval(x) - b.eval(x),
            Node::Mul(a, b) => a.eval(x) * b.eval(x),
            Node::Div(a, b) => a.eval(x) / b.eval(x),
            Node::Pow(a, b) => {
                let base = a.eval(x);
                match **b {
                    Node::Num(p) if p == libm::trunc(p) && libm::fabs(p) <= 64.0 => base.powi(p as i32),
                    Node::Num(p) => base.powf(p),
                    _ => (b.eval(x) * base.ln()).exp(),
                }
            }
            Node::Call(f, a) => {
                let v = a.eval(x);
                match f {
                    Func::Exp => v.exp(),
                    Func::Ln => v.ln(),
                    Func::Sqrt => v.sqrt(),
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ParseError> {
        let mut p = Parser { src: src.as_bytes(), pos: 0 };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(Expr { source: src.trim().to_string(), root: root.fold() })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn eval_f64(&self, x: [f64; 4]) -> f64 {
        self.root.eval(&x)
    }
}

impl GenericAmbient for Expr {
    fn eval<T: Scalar>(&self, x: [T; 4]) -> T {
        self.root.eval(&x)
    }

    fn describe(&self) -> String {
        self.source.clone()
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> ParseError {
        ParseError { position: self.pos, message: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                b'+' => {
                    self.pos += 1;
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                b'-' => {
                    self.pos += 1;
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(c) = self.peek() {
            match c {
                b'*' => {
                    self.pos += 1;
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                b'/' => {
                    self.pos += 1;
                    lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    // -a^b parses as -(a^b).
    fn unary(&mut self) -> Result<Node, ParseError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let c = match self.peek() {
            Some(c) => c,
            None => return Err(self.err("unexpected end of input")),
        };
        if c == b'(' {
            self.pos += 1;
            let inner = self.expr()?;
            if self.peek() != Some(b')') {
                return Err(self.err("expected ')'"));
            }
            self.pos += 1;
            return Ok(inner);
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.number();
        }
        if c.is_ascii_alphabetic() {
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                self.pos += 1;
            }
            let name = core::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
            let var = match name {
                "x1" => Some(0),
                "y1" => Some(1),
                "x2" => Some(2),
                "y2" => Some(3),
                _ => None,
            };
            if let Some(i) = var {
                return Ok(Node::Var(i));
            }
            match name {
                "pi" => return Ok(Node::Num(core::f64::consts::PI)),
                "e" => return Ok(Node::Num(core::f64::consts::E)),
                _ => {}
            }
            let func = match name {
                "exp" => Func::Exp,
                "ln" => Func::Ln,
                "sqrt" => Func::Sqrt,
                "sin" => Func::Sin,
                "cos" => Func::Cos,
                _ => {
                    return Err(ParseError {
                        position: start,
                        message: alloc::format!("unknown identifier '{name}'"),
                    })
                }
            };
            if self.peek() != Some(b'(') {
                return Err(self.err("expected '(' after function name"));
            }
            self.pos += 1;
            let arg = self.expr()?;
            if self.peek() != Some(b')') {
                return Err(self.err("expected ')'"));
            }
            self.pos += 1;
            return Ok(Node::Call(func, Box::new(arg)));
        }
        Err(self.err("unexpected character"))
    }

    fn number(&mut self) -> Result<Node, ParseError> {
        let start = self.pos;
        let s = self.src;
        let digits = |p: &mut usize| {
            while *p < s.len() && s[*p].is_ascii_digit() {
                *p += 1;
            }
        };
        digits(&mut self.pos);
        if self.pos < s.len() && s[self.pos] == b'.' {
            self.pos += 1;
            digits(&mut self.pos);
        }
        if self.pos < s.len() && (s[self.pos] == b'e' || s[self.pos] == b'E') {
            let mut q = self.pos + 1;
            if q < s.len() && (s[q] == b'+' || s[q] == b'-') {
                q += 1;
            }
            if q < s.len() && s[q].is_ascii_digit() {
                self.pos = q;
                digits(&mut self.pos);
            }
        }
        let text = core::str::from_utf8(&s[start..self.pos]).unwrap_or("");
        text.parse::<f64>()
            .map(Node::Num)
            .map_err(|_| ParseError { position: start, message: alloc::format!("malformed number '{text}'") })
    }
}
