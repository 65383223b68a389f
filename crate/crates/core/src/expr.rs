//! Scalar expressions in the variables `x`, `y`, `z`, `t`.
//!
//! Problem data (sources, boundary and initial values, coefficients, exact
//! solutions) is written as text and parsed into an [`ExprFn`]. The grammar is
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | 'pi' | var | func '(' sum (',' sum)* ')' | '(' sum ')'
//! ```
//!
//! so `^` binds tighter than unary minus (`-x^2 == -(x^2)`) and is right
//! associative.

use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {msg}")]
    Syntax { offset: usize, msg: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("function `{name}` expects {expected} argument(s), found {found} (byte {offset})")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
        offset: usize,
    },
    #[error("domain error: {0}")]
    Domain(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
    Z,
    T,
}

impl Var {
    fn index(self) -> usize {
        match self {
            Var::X => 0,
            Var::Y => 1,
            Var::Z => 2,
            Var::T => 3,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::Z => "z",
            Var::T => "t",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
    Atan2,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "atan2" => Func::Atan2,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Atan2 => "atan2",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Atan2 => 2,
            _ => 1,
        }
    }
}

/// Expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(Var),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

/// Parsed, immutable expression. Cheap to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprFn {
    root: Node,
    source: String,
}

/// Value together with the partial derivatives w.r.t. `(x, y, z, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub value: f64,
    pub grad: [f64; 4],
}

impl Dual {
    fn constant(value: f64) -> Self {
        Dual {
            value,
            grad: [0.0; 4],
        }
    }

    fn scale_grad(self, s: f64, value: f64) -> Self {
        let mut grad = self.grad;
        for g in &mut grad {
            *g *= s;
        }
        Dual { value, grad }
    }
}

impl ExprFn {
    pub fn parse(src: &str) -> Result<ExprFn, ExprError> {
        let mut p = Parser {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        };
        let root = p.sum()?;
        p.skip_ws();
        if p.pos != p.bytes.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(ExprFn {
            root,
            source: src.trim().to_string(),
        })
    }

    pub fn from_node(root: Node) -> ExprFn {
        let source = root.to_string();
        ExprFn { root, source }
    }

    pub fn constant(c: f64) -> ExprFn {
        ExprFn::from_node(Node::Const(c))
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// The text this expression was parsed from (or its canonical print).
    pub fn source(&self) -> &str {
        &self.source
    }

    /// `Some(c)` when the expression references no variable.
    pub fn as_constant(&self) -> Option<f64> {
        if self.root.has_vars() {
            None
        } else {
            self.root.eval(&[0.0; 4]).ok()
        }
    }

    pub fn depends_on_t(&self) -> bool {
        self.root.uses(Var::T)
    }

    /// Evaluates at spatial point `p` (up to three coordinates) and time `t`.
    /// Coordinates beyond `p.len()` read as zero.
    pub fn eval(&self, p: &[f64], t: f64) -> Result<f64, ExprError> {
        self.root.eval(&pack(p, t))
    }

    /// Value and gradient w.r.t. `(x, y, z, t)` by forward-mode differentiation.
    pub fn eval_grad(&self, p: &[f64], t: f64) -> Result<Dual, ExprError> {
        self.root.eval_dual(&pack(p, t))
    }
}

impl fmt::Display for ExprFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

fn pack(p: &[f64], t: f64) -> [f64; 4] {
    let mut vars = [0.0; 4];
    for (dst, src) in vars.iter_mut().zip(p.iter().take(3)) {
        *dst = *src;
    }
    vars[3] = t;
    vars
}

impl Node {
    fn has_vars(&self) -> bool {
        match self {
            Node::Const(_) => false,
            Node::Var(_) => true,
            Node::Neg(a) => a.has_vars(),
            Node::Bin(_, a, b) => a.has_vars() || b.has_vars(),
            Node::Call(_, args) => args.iter().any(Node::has_vars),
        }
    }

    fn uses(&self, v: Var) -> bool {
        match self {
            Node::Const(_) => false,
            Node::Var(w) => *w == v,
            Node::Neg(a) => a.uses(v),
            Node::Bin(_, a, b) => a.uses(v) || b.uses(v),
            Node::Call(_, args) => args.iter().any(|a| a.uses(v)),
        }
    }

    pub fn eval(&self, vars: &[f64; 4]) -> Result<f64, ExprError> {
        Ok(match self {
            Node::Const(c) => *c,
            Node::Var(v) => vars[v.index()],
            Node::Neg(a) => -a.eval(vars)?,
            Node::Bin(op, a, b) => {
                let a = a.eval(vars)?;
                let b = b.eval(vars)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(ExprError::Domain("division by zero"));
                        }
                        a / b
                    }
                    BinOp::Pow => checked_pow(a, b)?,
                }
            }
            Node::Call(func, args) => {
                let a = args[0].eval(vars)?;
                match func {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Abs => a.abs(),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(ExprError::Domain("sqrt of a negative number"));
                        }
                        a.sqrt()
                    }
                    Func::Atan2 => a.atan2(args[1].eval(vars)?),
                }
            }
        })
    }

    fn eval_dual(&self, vars: &[f64; 4]) -> Result<Dual, ExprError> {
        Ok(match self {
            Node::Const(c) => Dual::constant(*c),
            Node::Var(v) => {
                let mut grad = [0.0; 4];
                grad[v.index()] = 1.0;
                Dual {
                    value: vars[v.index()],
                    grad,
                }
            }
            Node::Neg(a) => {
                let a = a.eval_dual(vars)?;
                a.scale_grad(-1.0, -a.value)
            }
            Node::Bin(op, a, b) => {
                let a = a.eval_dual(vars)?;
                let b = b.eval_dual(vars)?;
                let mut grad = [0.0; 4];
                let value = match op {
                    BinOp::Add => {
                        for i in 0..4 {
                            grad[i] = a.grad[i] + b.grad[i];
                        }
                        a.value + b.value
                    }
                    BinOp::Sub => {
                        for i in 0..4 {
                            grad[i] = a.grad[i] - b.grad[i];
                        }
                        a.value - b.value
                    }
                    BinOp::Mul => {
                        for i in 0..4 {
                            grad[i] = a.grad[i] * b.value + a.value * b.grad[i];
                        }
                        a.value * b.value
                    }
                    BinOp::Div => {
                        if b.value == 0.0 {
                            return Err(ExprError::Domain("division by zero"));
                        }
                        let q = a.value / b.value;
                        for i in 0..4 {
                            grad[i] = (a.grad[i] - q * b.grad[i]) / b.value;
                        }
                        q
                    }
                    BinOp::Pow => {
                        let value = checked_pow(a.value, b.value)?;
                        let exponent_varies = b.grad.iter().any(|g| *g != 0.0);
                        let da = if a.grad.iter().any(|g| *g != 0.0) {
                            b.value * checked_pow(a.value, b.value - 1.0)?
                        } else {
                            0.0
                        };
                        let db = if exponent_varies {
                            value * a.value.ln()
                        } else {
                            0.0
                        };
                        for i in 0..4 {
                            grad[i] = da * a.grad[i] + db * b.grad[i];
                        }
                        value
                    }
                };
                Dual { value, grad }
            }
            Node::Call(func, args) => {
                let a = args[0].eval_dual(vars)?;
                match func {
                    Func::Sin => a.scale_grad(a.value.cos(), a.value.sin()),
                    Func::Cos => a.scale_grad(-a.value.sin(), a.value.cos()),
                    Func::Exp => {
                        let e = a.value.exp();
                        a.scale_grad(e, e)
                    }
                    Func::Abs => a.scale_grad(a.value.signum(), a.value.abs()),
                    Func::Sqrt => {
                        if a.value < 0.0 {
                            return Err(ExprError::Domain("sqrt of a negative number"));
                        }
                        let s = a.value.sqrt();
                        a.scale_grad(0.5 / s, s)
                    }
                    Func::Atan2 => {
                        let y = a;
                        let x = args[1].eval_dual(vars)?;
                        let r2 = x.value * x.value + y.value * y.value;
                        let mut grad = [0.0; 4];
                        if r2 > 0.0 {
                            for i in 0..4 {
                                grad[i] = (x.value * y.grad[i] - y.value * x.grad[i]) / r2;
                            }
                        }
                        Dual {
                            value: y.value.atan2(x.value),
                            grad,
                        }
                    }
                }
            }
        })
    }
}

fn checked_pow(a: f64, b: f64) -> Result<f64, ExprError> {
    let v = a.powf(b);
    if v.is_nan() && !a.is_nan() && !b.is_nan() {
        return Err(ExprError::Domain("fractional power of a negative number"));
    }
    if a == 0.0 && b < 0.0 {
        return Err(ExprError::Domain("division by zero"));
    }
    Ok(v)
}

/// Canonical print: every compound sub-expression is parenthesised, so the
/// output parses back to the same tree.
impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(c) => {
                if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) {
                    write!(f, "(-{:?})", -c)
                } else {
                    write!(f, "{:?}", c)
                }
            }
            Node::Var(v) => f.write_str(v.name()),
            Node::Neg(a) => write!(f, "(-{})", a),
            Node::Bin(op, a, b) => write!(f, "({} {} {})", a, op.symbol(), b),
            Node::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    a.fmt(f)?;
                }
                f.write_str(")")
            }
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, msg: &str) -> ExprError {
        ExprError::Syntax {
            offset: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.product()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if self.eat(b'-') {
            // `-<literal>` folds into a negative constant; `-(...)` stays a negation
            let literal = matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == b'.');
            let inner = self.unary()?;
            return Ok(match inner {
                Node::Const(c) if literal => Node::Const(-c),
                other => Node::Neg(Box::new(other)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.primary()?;
        if self.eat(b'^') {
            let exponent = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ExprError> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.sum()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(_) => Err(self.error("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        let b = self.bytes;
        while self.pos < b.len() && (b[self.pos].is_ascii_digit() || b[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < b.len() && (b[self.pos] == b'e' || b[self.pos] == b'E') {
            let mut look = self.pos + 1;
            if look < b.len() && (b[look] == b'+' || b[look] == b'-') {
                look += 1;
            }
            if look < b.len() && b[look].is_ascii_digit() {
                self.pos = look;
                while self.pos < b.len() && b[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>()
            .map(Node::Const)
            .map_err(|_| ExprError::Syntax {
                offset: start,
                msg: format!("malformed number `{}`", text),
            })
    }

    fn identifier(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        let b = self.bytes;
        while self.pos < b.len() && (b[self.pos].is_ascii_alphanumeric() || b[self.pos] == b'_') {
            self.pos += 1;
        }
        let name = &self.src[start..self.pos];
        match name {
            "x" => return Ok(Node::Var(Var::X)),
            "y" => return Ok(Node::Var(Var::Y)),
            "z" => return Ok(Node::Var(Var::Z)),
            "t" => return Ok(Node::Var(Var::T)),
            "pi" => return Ok(Node::Const(PI)),
            _ => {}
        }
        let func = Func::lookup(name).ok_or_else(|| ExprError::UnknownIdentifier {
            name: name.to_string(),
            offset: start,
        })?;
        if !self.eat(b'(') {
            return Err(self.error("expected `(` after function name"));
        }
        let mut args = vec![self.sum()?];
        while self.eat(b',') {
            args.push(self.sum()?);
        }
        if !self.eat(b')') {
            return Err(self.error("expected `)` closing the argument list"));
        }
        if args.len() != func.arity() {
            return Err(ExprError::Arity {
                name: name.to_string(),
                expected: func.arity(),
                found: args.len(),
                offset: start,
            });
        }
        Ok(Node::Call(func, args))
    }
}
