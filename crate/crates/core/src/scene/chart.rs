use super::region::Region;
use super::SceneError;
use crate::expr::{Dual, EvalError, Expr, Tape, UnaryOp, VecExpr};
use crate::linalg;

/// A parametrized piece of the set: `map: domain ⊂ R^d -> R^m`.
#[derive(Debug, Clone)]
pub struct Chart {
    pub params: Vec<String>,
    pub domain: Region,
    pub map: VecExpr,
    /// Per-axis lower bound on `|map|` as a function of that axis alone,
    /// nondecreasing in the distance of the axis value from 0.
    pub growth: Vec<Option<Expr>>,
    pub weight: f64,
    tape: Tape,
    growth_tapes: Vec<Option<Tape>>,
}

/// Reusable buffers for chart evaluation.
#[derive(Debug, Default, Clone)]
pub struct Jet {
    pub values: Vec<f64>,
    /// Column-major `m x d`.
    pub jac: Vec<f64>,
    duals: Vec<Dual>,
    plain: Vec<f64>,
}

impl Chart {
    pub fn new(
        params: Vec<String>,
        domain: Region,
        map: VecExpr,
        mut growth: Vec<Option<Expr>>,
        weight: f64,
    ) -> Result<Chart, SceneError> {
        let d = params.len();
        if domain.dim() != d {
            return Err(SceneError::DimensionMismatch(format!(
                "domain has {} axes but the chart has {} parameters",
                domain.dim(),
                d
            )));
        }
        domain.validate().map_err(SceneError::Invalid)?;
        if !(weight > 0.0 && weight <= 1.0) {
            return Err(SceneError::Invalid(format!("chart weight {weight} outside (0, 1]")));
        }
        growth.resize(d, None);
        // a coordinate that is a bare parameter bounds the norm from below
        for (i, p) in params.iter().enumerate() {
            if growth[i].is_none() && map.components.iter().any(|c| matches!(c, Expr::Var(v) if v == p)) {
                growth[i] = Some(Expr::unary(UnaryOp::Abs, Expr::var(p)));
            }
        }
        let tape = Tape::compile_exprs(&map.components, &params).map_err(|e| SceneError::Invalid(e.to_string()))?;
        let mut growth_tapes = Vec::with_capacity(d);
        for (i, g) in growth.iter().enumerate() {
            growth_tapes.push(match g {
                Some(g) => Some(
                    Tape::compile_exprs(std::slice::from_ref(g), std::slice::from_ref(&params[i]))
                        .map_err(|e| {
                            SceneError::Invalid(format!("growth hint for `{}`: {e}", params[i]))
                        })?,
                ),
                None => None,
            });
        }
        Ok(Chart {
            params,
            domain,
            map,
            growth,
            weight,
            tape,
            growth_tapes,
        })
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn ambient(&self) -> usize {
        self.map.dim()
    }

    pub fn jet_buffer(&self) -> Jet {
        Jet {
            values: vec![0.0; self.ambient()],
            jac: vec![0.0; self.ambient() * self.dim()],
            duals: Vec::new(),
            plain: Vec::new(),
        }
    }

    /// Image point only.
    pub fn point(&self, u: &[f64], jet: &mut Jet) -> Result<(), EvalError> {
        self.tape.eval_generic(u, &mut jet.plain, &mut jet.values)?;
        for v in &jet.values {
            if !v.is_finite() {
                return Err(EvalError::NonFinite(self.map.to_string()));
            }
        }
        Ok(())
    }

    /// Image point and Jacobian.
    pub fn jet(&self, u: &[f64], jet: &mut Jet) -> Result<(), EvalError> {
        self.tape
            .eval_jacobian(u, &mut jet.duals, &mut jet.values, &mut jet.jac)
    }

    pub fn eval(&self, u: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.tape.eval(u)
    }

    /// `sqrt(det(J^T J))` from the last `jet` call.
    pub fn area_element(&self, jet: &Jet) -> f64 {
        linalg::area_element(&jet.jac, self.ambient(), self.dim())
    }

    /// Box in parameter space outside which `|map| > extent`, or `None` if empty.
    /// Fails if an unbounded axis has no growth hint.
    pub fn parameter_box(&self, extent: f64) -> Result<Option<(Vec<f64>, Vec<f64>)>, SceneError> {
        let (mut lo, mut hi) = self.domain.bounds();
        for i in 0..self.dim() {
            if let Some(t) = &self.growth_tapes[i] {
                let g = |x: f64| t.eval(&[x]).map(|v| v[0]).unwrap_or(f64::INFINITY);
                let up = growth_limit(g, extent);
                let down = growth_limit(|x| g(-x), extent);
                match (up, down) {
                    (Some(up), Some(down)) => {
                        lo[i] = lo[i].max(-down);
                        hi[i] = hi[i].min(up);
                    }
                    _ => return Ok(None),
                }
            }
            if !lo[i].is_finite() || !hi[i].is_finite() {
                return Err(SceneError::Invalid(format!(
                    "parameter `{}` is unbounded and has no growth hint",
                    self.params[i]
                )));
            }
            if lo[i] >= hi[i] {
                return Ok(None);
            }
        }
        Ok(Some((lo, hi)))
    }

    /// Indices of parameters equal to the first `d` coordinates, if the chart is a graph
    /// `x -> (x, u(x))`.
    pub fn is_graph(&self) -> bool {
        self.params
            .iter()
            .zip(&self.map.components)
            .all(|(p, c)| matches!(c, Expr::Var(v) if v == p))
    }
}

/// Largest `t >= 0` with `g(t) <= level`, for `g` nondecreasing on `[0, inf)`.
fn growth_limit(g: impl Fn(f64) -> f64, level: f64) -> Option<f64> {
    if !(g(0.0) <= level) {
        return None;
    }
    let mut a = 0.0;
    let mut b = 1.0;
    while g(b) <= level {
        a = b;
        b *= 2.0;
        if b > 1e300 {
            return Some(f64::INFINITY);
        }
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if g(m) <= level {
            a = m;
        } else {
            b = m;
        }
    }
    Some(b * (1.0 + 1e-12) + 1e-300)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn catenoid() -> Chart {
        let params = vec!["t".to_string(), "s".to_string()];
        let map = VecExpr::new(
            params.clone(),
            ["cosh(t)*cos(s)", "cosh(t)*sin(s)", "t"]
                .iter()
                .map(|c| parse_expr(c).unwrap())
                .collect(),
        );
        Chart::new(
            params,
            Region::Rect {
                lo: vec![f64::NEG_INFINITY, -std::f64::consts::PI],
                hi: vec![f64::INFINITY, std::f64::consts::PI],
            },
            map,
            vec![Some(parse_expr("cosh(t)").unwrap()), None],
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn growth_clips_unbounded_axis() {
        let c = catenoid();
        let (lo, hi) = c.parameter_box(10.0).unwrap().unwrap();
        let acosh10 = (10.0f64 + (99.0f64).sqrt()).ln();
        assert!((hi[0] - acosh10).abs() < 1e-9);
        assert!((lo[0] + acosh10).abs() < 1e-9);
        assert!(c.parameter_box(0.5).unwrap().is_none());
    }

    #[test]
    fn bare_parameter_coordinates_give_growth() {
        let params = vec!["x".to_string()];
        let map = VecExpr::new(params.clone(), vec![parse_expr("x").unwrap(), parse_expr("x^2").unwrap()]);
        let c = Chart::new(
            params,
            Region::Rect {
                lo: vec![f64::NEG_INFINITY],
                hi: vec![f64::INFINITY],
            },
            map,
            vec![],
            1.0,
        )
        .unwrap();
        assert!(c.is_graph());
        let (lo, hi) = c.parameter_box(5.0).unwrap().unwrap();
        assert!((hi[0] - 5.0).abs() < 1e-9 && (lo[0] + 5.0).abs() < 1e-9);
    }

    #[test]
    fn catenoid_area_element_is_cosh_squared() {
        let c = catenoid();
        let mut jet = c.jet_buffer();
        c.jet(&[0.7, 0.2], &mut jet).unwrap();
        assert!((c.area_element(&jet) - 0.7f64.cosh().powi(2)).abs() < 1e-12);
    }
}
