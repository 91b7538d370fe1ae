//! Expression trees for chart maps: parsing, printing, evaluation and
//! forward-mode Jacobians.

mod ast;
mod dual;
pub mod lexer;
pub(crate) mod parser;
mod tape;

pub use ast::{BinaryOp, Expr, UnaryOp, VecExpr};
pub use dual::{Dual, Scalar};
pub use parser::{parse_expr, parse_expr_in, ParseError};
pub use tape::{EvalError, Tape};

use nalgebra::DMatrix;
use std::collections::HashMap;

/// Evaluates `e` with variables bound by `env`.
pub fn eval(e: &Expr, env: &HashMap<String, f64>) -> Result<f64, EvalError> {
    let vars = e.variables();
    let mut point = Vec::with_capacity(vars.len());
    for v in &vars {
        point.push(*env.get(v).ok_or_else(|| EvalError::Unbound(v.clone()))?);
    }
    let tape = Tape::compile_exprs(std::slice::from_ref(e), &vars)?;
    Ok(tape.eval(&point)?[0])
}

/// Jacobian of `f` with respect to `params` at `point`, as an
/// `f.dim() x params.len()` matrix.
pub fn jacobian(f: &VecExpr, params: &[String], point: &[f64]) -> Result<DMatrix<f64>, EvalError> {
    let tape = Tape::compile_exprs(&f.components, params)?;
    let m = f.dim();
    let d = params.len();
    let mut values = vec![0.0; m];
    let mut jac = vec![0.0; m * d];
    let mut scratch = Vec::new();
    tape.eval_jacobian(point, &mut scratch, &mut values, &mut jac)?;
    Ok(DMatrix::from_column_slice(m, d, &jac))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn env(pairs: &[(&str, f64)]) -> HashMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn vexpr(params: &[&str], comps: &[&str]) -> VecExpr {
        VecExpr::new(
            params.iter().map(|s| s.to_string()).collect(),
            comps.iter().map(|c| parse_expr(c).unwrap()).collect(),
        )
    }

    #[test]
    fn eval_examples() {
        assert_eq!(eval(&parse_expr("cosh(0)").unwrap(), &env(&[])).unwrap(), 1.0);
        assert_eq!(eval(&parse_expr("atan2(0,1)").unwrap(), &env(&[])).unwrap(), 0.0);
        let e = parse_expr("(x^2+y^2+1)^(1/3)").unwrap();
        assert_eq!(eval(&e, &env(&[("x", 0.0), ("y", 0.0)])).unwrap(), 1.0);
    }

    #[test]
    fn domain_errors_name_the_subexpression() {
        let e = parse_expr("1 + sqrt(x - 2)").unwrap();
        match eval(&e, &env(&[("x", 1.0)])) {
            Err(EvalError::Domain { subexpr, .. }) => assert_eq!(subexpr, "sqrt((x - 2.0))"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            eval(&parse_expr("log(x)").unwrap(), &env(&[("x", 0.0)])),
            Err(EvalError::Domain { .. })
        ));
        assert!(matches!(
            eval(&parse_expr("1/x").unwrap(), &env(&[("x", 0.0)])),
            Err(EvalError::Domain { .. })
        ));
        assert!(matches!(
            eval(&parse_expr("y").unwrap(), &env(&[])),
            Err(EvalError::Unbound(_))
        ));
    }

    #[test]
    fn integer_powers_accept_negative_bases() {
        let e = parse_expr("x^3 + x^-2").unwrap();
        let v = eval(&e, &env(&[("x", -2.0)])).unwrap();
        assert_eq!(v, -8.0 + 0.25);
        // non-integer exponents need a positive base
        assert!(eval(&parse_expr("x^(1/3)").unwrap(), &env(&[("x", -8.0)])).is_err());
    }

    #[test]
    fn jacobian_identity() {
        let f = vexpr(&["a", "b", "c"], &["a", "b", "c"]);
        let j = jacobian(&f, &f.params, &[0.3, -1.0, 7.0]).unwrap();
        assert_eq!(j, DMatrix::identity(3, 3));
    }

    #[test]
    fn jacobian_catenoid_at_origin() {
        let f = vexpr(&["t", "s"], &["cosh(t)*cos(s)", "cosh(t)*sin(s)", "t"]);
        let j = jacobian(&f, &f.params, &[0.0, 0.0]).unwrap();
        // columns d/dt = (0,0,1), d/ds = (0,1,0)
        let expect = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 0.0, 1.0, 1.0, 0.0]);
        assert_eq!(j, expect);
    }

    #[test]
    fn jacobian_cubic_graph_matches_hand_derivative() {
        let f = vexpr(&["x", "y"], &["x", "y", "(x^2+y^2+1)^(1/3)"]);
        let j0 = jacobian(&f, &f.params, &[0.0, 0.0]).unwrap();
        assert_eq!(j0[(2, 0)], 0.0);
        assert_eq!(j0[(2, 1)], 0.0);
        // dz/dx = (2x/3) (x^2+y^2+1)^(-2/3)
        let (x, y) = (0.8, -1.3);
        let j = jacobian(&f, &f.params, &[x, y]).unwrap();
        let hand = 2.0 * x / 3.0 * (x * x + y * y + 1.0_f64).powf(-2.0 / 3.0);
        assert!((j[(2, 0)] - hand).abs() < 1e-14);
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u32..1000).prop_map(|k| Expr::Const(k as f64 / 8.0)),
            prop_oneof![Just("x"), Just("y"), Just("t_1")].prop_map(Expr::var),
        ];
        leaf.prop_recursive(8, 256, 2, |inner| {
            let unary = prop_oneof![
                Just(UnaryOp::Neg),
                Just(UnaryOp::Sqrt),
                Just(UnaryOp::Exp),
                Just(UnaryOp::Log),
                Just(UnaryOp::Sin),
                Just(UnaryOp::Cos),
                Just(UnaryOp::Sinh),
                Just(UnaryOp::Cosh),
                Just(UnaryOp::Atan),
                Just(UnaryOp::Abs),
            ];
            let binary = prop_oneof![
                Just(BinaryOp::Add),
                Just(BinaryOp::Sub),
                Just(BinaryOp::Mul),
                Just(BinaryOp::Div),
                Just(BinaryOp::Pow),
            ];
            prop_oneof![
                (unary, inner.clone()).prop_map(|(op, e)| Expr::unary(op, e)),
                (binary, inner.clone(), inner.clone()).prop_map(|(op, l, r)| Expr::binary(op, l, r)),
                (inner.clone(), inner).prop_map(|(y, x)| Expr::Atan2(Box::new(y), Box::new(x))),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn print_then_parse_is_identity(e in arb_expr()) {
            prop_assume!(e.depth() <= 8);
            let printed = e.to_string();
            let back = parse_expr(&printed).unwrap();
            prop_assert_eq!(back, e);
        }
    }

    proptest! {
        #[test]
        fn eval_is_bitwise_deterministic(e in arb_expr(), x in -3.0f64..3.0, y in -3.0f64..3.0) {
            let env = env(&[("x", x), ("y", y), ("t_1", 0.5)]);
            let a = eval(&e, &env);
            let b = eval(&e, &env);
            match (a, b) {
                (Ok(a), Ok(b)) => prop_assert_eq!(a.to_bits(), b.to_bits()),
                (Err(a), Err(b)) => prop_assert_eq!(a, b),
                _ => prop_assert!(false, "nondeterministic outcome"),
            }
        }
    }
}
