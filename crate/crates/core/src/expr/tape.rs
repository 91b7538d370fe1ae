//! Flattened, slot-indexed form of an expression list.
//!
//! Identical subtrees are shared, so a chart like `(cosh(t)*cos(s), cosh(t)*sin(s), t)`
//! evaluates `cosh(t)` once per point.

use super::ast::{BinaryOp, Expr, UnaryOp, VecExpr};
use super::dual::{Dual, Scalar};
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("domain error: {reason} in `{subexpr}`")]
    Domain { reason: &'static str, subexpr: String },
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("non-finite value in `{0}`")]
    NonFinite(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Op {
    Const(u64),
    Var(usize),
    Unary(UnaryOp, usize),
    Binary(BinaryOp, usize, usize),
    PowInt(usize, i32),
    Atan2(usize, usize),
}

#[derive(Debug, Clone)]
pub struct Tape {
    ops: Vec<Op>,
    /// Printed subexpression per op, for error reporting.
    labels: Vec<String>,
    outputs: Vec<usize>,
    nvars: usize,
}

impl Tape {
    /// Compiles `map` with variable slots given by `map.params`.
    pub fn compile(map: &VecExpr) -> Result<Tape, EvalError> {
        Tape::compile_exprs(&map.components, &map.params)
    }

    pub fn compile_exprs(exprs: &[Expr], params: &[String]) -> Result<Tape, EvalError> {
        let mut b = Builder {
            ops: Vec::new(),
            labels: Vec::new(),
            index: HashMap::new(),
            params,
        };
        let outputs = exprs.iter().map(|e| b.push(e)).collect::<Result<Vec<_>, _>>()?;
        Ok(Tape {
            ops: b.ops,
            labels: b.labels,
            outputs,
            nvars: params.len(),
        })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn noutputs(&self) -> usize {
        self.outputs.len()
    }

    /// Evaluates all outputs at `point` using `scratch` as the value buffer.
    pub fn eval_generic<T: Scalar>(
        &self,
        point: &[T],
        scratch: &mut Vec<T>,
        out: &mut [T],
    ) -> Result<(), EvalError> {
        debug_assert_eq!(point.len(), self.nvars);
        scratch.clear();
        for (i, op) in self.ops.iter().enumerate() {
            let v = match *op {
                Op::Const(bits) => T::cst(f64::from_bits(bits)),
                Op::Var(k) => point[k],
                Op::Unary(u, a) => {
                    let x = scratch[a];
                    match u {
                        UnaryOp::Neg => -x,
                        UnaryOp::Sqrt => {
                            if x.value() < 0.0 {
                                return Err(self.domain(i, "square root of a negative number"));
                            }
                            x.sqrt()
                        }
                        UnaryOp::Exp => x.exp(),
                        UnaryOp::Log => {
                            if x.value() <= 0.0 {
                                return Err(self.domain(i, "logarithm of a non-positive number"));
                            }
                            x.ln()
                        }
                        UnaryOp::Sin => x.sin(),
                        UnaryOp::Cos => x.cos(),
                        UnaryOp::Sinh => x.sinh(),
                        UnaryOp::Cosh => x.cosh(),
                        UnaryOp::Atan => x.atan(),
                        UnaryOp::Abs => x.abs(),
                    }
                }
                Op::Binary(bop, a, b) => {
                    let (x, y) = (scratch[a], scratch[b]);
                    match bop {
                        BinaryOp::Add => x + y,
                        BinaryOp::Sub => x - y,
                        BinaryOp::Mul => x * y,
                        BinaryOp::Div => {
                            if y.value() == 0.0 {
                                return Err(self.domain(i, "division by zero"));
                            }
                            x / y
                        }
                        BinaryOp::Pow => {
                            if x.value() <= 0.0 {
                                return Err(self.domain(i, "non-integer power of a non-positive base"));
                            }
                            x.powf(y)
                        }
                    }
                }
                Op::PowInt(a, k) => {
                    let x = scratch[a];
                    if k < 0 && x.value() == 0.0 {
                        return Err(self.domain(i, "division by zero"));
                    }
                    x.powi(k)
                }
                Op::Atan2(a, b) => scratch[a].atan2(scratch[b]),
            };
            scratch.push(v);
        }
        for (o, &idx) in out.iter_mut().zip(&self.outputs) {
            *o = scratch[idx];
        }
        Ok(())
    }

    pub fn eval(&self, point: &[f64]) -> Result<Vec<f64>, EvalError> {
        let mut scratch = Vec::with_capacity(self.ops.len());
        let mut out = vec![0.0; self.outputs.len()];
        self.eval_generic(point, &mut scratch, &mut out)?;
        Ok(out)
    }

    /// Values and Jacobian (column-major, `noutputs x nvars`) by one dual pass per parameter.
    pub fn eval_jacobian(
        &self,
        point: &[f64],
        scratch: &mut Vec<Dual>,
        values: &mut [f64],
        jac: &mut [f64],
    ) -> Result<(), EvalError> {
        let m = self.outputs.len();
        let d = self.nvars;
        debug_assert!(jac.len() >= m * d);
        let mut seeds: Vec<Dual> = point.iter().map(|&v| Dual::new(v, 0.0)).collect();
        let mut out = vec![Dual::cst(0.0); m];
        if d == 0 {
            let mut plain = Vec::with_capacity(self.ops.len());
            self.eval_generic(&[], &mut plain, values)?;
        }
        for k in 0..d {
            seeds[k].d = 1.0;
            self.eval_generic(&seeds, scratch, &mut out)?;
            seeds[k].d = 0.0;
            for i in 0..m {
                jac[k * m + i] = out[i].d;
                if k == 0 {
                    values[i] = out[i].v;
                }
            }
        }
        for (i, &v) in values.iter().enumerate().take(m) {
            if !v.is_finite() {
                return Err(EvalError::NonFinite(self.labels[self.outputs[i]].clone()));
            }
        }
        for k in 0..d {
            for i in 0..m {
                if !jac[k * m + i].is_finite() {
                    return Err(EvalError::NonFinite(format!(
                        "d/d{} of {}",
                        k, self.labels[self.outputs[i]]
                    )));
                }
            }
        }
        Ok(())
    }

    fn domain(&self, i: usize, reason: &'static str) -> EvalError {
        EvalError::Domain {
            reason,
            subexpr: self.labels[i].clone(),
        }
    }
}

struct Builder<'p> {
    ops: Vec<Op>,
    labels: Vec<String>,
    index: HashMap<Op, usize>,
    params: &'p [String],
}

impl Builder<'_> {
    fn intern(&mut self, op: Op, label: impl FnOnce() -> String) -> usize {
        if let Some(&i) = self.index.get(&op) {
            return i;
        }
        let i = self.ops.len();
        self.ops.push(op);
        self.labels.push(label());
        self.index.insert(op, i);
        i
    }

    fn push(&mut self, e: &Expr) -> Result<usize, EvalError> {
        let op = match e {
            Expr::Const(v) => Op::Const(v.to_bits()),
            Expr::Var(name) => {
                let k = self
                    .params
                    .iter()
                    .position(|p| p == name)
                    .ok_or_else(|| EvalError::Unbound(name.clone()))?;
                Op::Var(k)
            }
            Expr::Unary(u, a) => Op::Unary(*u, self.push(a)?),
            Expr::Binary(BinaryOp::Pow, a, b) if b.as_integer().is_some() => {
                let k = b.as_integer().unwrap();
                Op::PowInt(self.push(a)?, k)
            }
            Expr::Binary(bop, a, b) => {
                let ia = self.push(a)?;
                let ib = self.push(b)?;
                Op::Binary(*bop, ia, ib)
            }
            Expr::Atan2(y, x) => {
                let iy = self.push(y)?;
                let ix = self.push(x)?;
                Op::Atan2(iy, ix)
            }
        };
        Ok(self.intern(op, || e.to_string()))
    }
}
