use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Atan,
    Abs,
}

impl UnaryOp {
    pub fn from_name(name: &str) -> Option<UnaryOp> {
        Some(match name {
            "sqrt" => UnaryOp::Sqrt,
            "exp" => UnaryOp::Exp,
            "log" => UnaryOp::Log,
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "sinh" => UnaryOp::Sinh,
            "cosh" => UnaryOp::Cosh,
            "atan" => UnaryOp::Atan,
            "abs" => UnaryOp::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "neg",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Sinh => "sinh",
            UnaryOp::Cosh => "cosh",
            UnaryOp::Atan => "atan",
            UnaryOp::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    pub fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }
}

/// Expression tree. Constants are finite and non-negative; a negative literal is
/// represented as `Neg(Const)`, which is also what the parser produces.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Atan2(Box<Expr>, Box<Expr>),
}

impl Expr {
    /// Builds a numeric literal, normalizing negative values to `Neg(Const(|v|))`.
    pub fn num(v: f64) -> Expr {
        assert!(v.is_finite(), "expression constants must be finite");
        if v < 0.0 || (v == 0.0 && v.is_sign_negative()) {
            Expr::Unary(UnaryOp::Neg, Box::new(Expr::Const(-v)))
        } else {
            Expr::Const(v)
        }
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn unary(op: UnaryOp, e: Expr) -> Expr {
        Expr::Unary(op, Box::new(e))
    }

    pub fn binary(op: BinaryOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    /// If this node is a syntactic integer (`k` or `-k`), returns it.
    pub fn as_integer(&self) -> Option<i32> {
        match self {
            Expr::Const(v) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => Some(*v as i32),
            Expr::Unary(UnaryOp::Neg, inner) => inner.as_integer().map(|k| -k),
            _ => None,
        }
    }

    /// Free variable names in first-occurrence order.
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                if !out.iter().any(|o| o == v) {
                    out.push(v.clone());
                }
            }
            Expr::Unary(_, e) => e.collect_vars(out),
            Expr::Binary(_, l, r) | Expr::Atan2(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Unary(_, e) => 1 + e.depth(),
            Expr::Binary(_, l, r) | Expr::Atan2(l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    /// Substitutes variables by expressions.
    pub fn substitute(&self, f: &dyn Fn(&str) -> Option<Expr>) -> Expr {
        match self {
            Expr::Const(v) => Expr::Const(*v),
            Expr::Var(v) => f(v).unwrap_or_else(|| Expr::Var(v.clone())),
            Expr::Unary(op, e) => Expr::unary(*op, e.substitute(f)),
            Expr::Binary(op, l, r) => Expr::binary(*op, l.substitute(f), r.substitute(f)),
            Expr::Atan2(l, r) => Expr::Atan2(Box::new(l.substitute(f)), Box::new(r.substitute(f))),
        }
    }
}

/// Fully parenthesized form that parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) => {
                if *v < 0.0 {
                    write!(f, "(-{:?})", -v)
                } else {
                    write!(f, "{v:?}")
                }
            }
            Expr::Var(name) => f.write_str(name),
            Expr::Unary(UnaryOp::Neg, e) => write!(f, "(-{e})"),
            Expr::Unary(op, e) => write!(f, "{}({e})", op.name()),
            Expr::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            Expr::Atan2(y, x) => write!(f, "atan2({y}, {x})"),
        }
    }
}

/// A vector-valued map sharing one parameter list.
#[derive(Debug, Clone, PartialEq)]
pub struct VecExpr {
    pub params: Vec<String>,
    pub components: Vec<Expr>,
}

impl VecExpr {
    pub fn new(params: Vec<String>, components: Vec<Expr>) -> VecExpr {
        VecExpr { params, components }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }
}

impl fmt::Display for VecExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}
