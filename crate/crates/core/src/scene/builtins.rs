//! Built-in scenes, written in the scene language and parsed on demand.

use super::dsl::parse_scene;
use super::{Scene, SceneError};
use crate::expr::{parse_expr_in, Tape};

/// The ten reference scenes, in a fixed order.
const CORE: &[&str] = &[
    "plane",
    "parabola",
    "catenoid",
    "upper_catenoid_graph",
    "alpha_cone",
    "helicoid",
    "staircase",
    "complex_parabola",
    "cubic_graph",
    "lawson_osserman",
];

/// Additional scenes used by the metric and degree checks.
const EXTRA: &[&str] = &["plane_minus_ball", "complex_line", "complex_cubic"];

pub fn builtin_names() -> Vec<&'static str> {
    CORE.iter().chain(EXTRA).copied().collect()
}

/// All built-ins with default arguments.
pub fn builtin_library() -> Vec<Scene> {
    builtin_names()
        .into_iter()
        .map(|n| builtin_scene(n).expect("built-in scenes parse"))
        .collect()
}

/// Scene-language source of a built-in. `args` may be empty to use defaults.
pub fn builtin_source(name: &str, args: &[f64]) -> Result<String, SceneError> {
    let arity = |n: usize| -> Result<(), SceneError> {
        if args.len() > n {
            Err(SceneError::Invalid(format!("`{name}` takes at most {n} argument(s)")))
        } else {
            Ok(())
        }
    };
    let text = match name {
        "plane" => {
            arity(0)?;
            r#"scene "plane" {
  ambient 3; dim 2;
  chart { params (x, y); domain { x in (-inf, inf); y in (-inf, inf) }; map (x, y, 0) }
  meta { definable=true; minimal=true; cone_vertex=(0,0,0); monotone_at=(0,0,0) }
}
"#
            .to_string()
        }
        "plane_minus_ball" => {
            arity(0)?;
            r#"scene "plane_minus_ball" {
  ambient 3; dim 2;
  chart {
    params (x, y);
    domain { x in (-inf, inf); y in (-inf, inf); exclude ball((0,0), 1) };
    map (x, y, 0)
  }
  meta { definable=true; minimal=true }
}
"#
            .to_string()
        }
        "parabola" => {
            arity(0)?;
            r#"scene "parabola" {
  ambient 2; dim 1;
  chart { params (x); domain { x in (-inf, inf) }; map (x, x^2) }
  meta { definable=true; minimal=false }
}
"#
            .to_string()
        }
        "catenoid" => {
            arity(0)?;
            r#"scene "catenoid" {
  ambient 3; dim 2;
  chart {
    params (t, s);
    domain { t in (-inf, inf) grows cosh(t); s in (-pi, pi) };
    map (cosh(t)*cos(s), cosh(t)*sin(s), t)
  }
  meta { definable=true; minimal=true; monotone_at=(1,0,0) }
}
"#
            .to_string()
        }
        "upper_catenoid_graph" => {
            arity(0)?;
            r#"scene "upper_catenoid_graph" {
  ambient 3; dim 2;
  chart {
    params (x, y);
    domain { x in (-inf, inf); y in (-inf, inf); exclude ball((0,0), 2) };
    map (x, y, log(sqrt(x^2+y^2) + sqrt(x^2+y^2-1)))
  }
  meta { definable=true; minimal=true }
}
"#
            .to_string()
        }
        "alpha_cone" => {
            arity(1)?;
            let alpha = args.first().copied().unwrap_or(1.0);
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(SceneError::Invalid(format!("alpha_cone needs alpha > 0, got {alpha}")));
            }
            format!(
                r#"scene "alpha_cone({alpha})" {{
  ambient 3; dim 2;
  chart {{
    params (r, s);
    domain {{ r in (-inf, inf) grows sqrt(1+{alpha:?})*abs(r); s in (-pi, pi) }};
    map (r*cos(s), r*sin(s), sqrt({alpha:?})*r)
  }}
  meta {{ definable=true; minimal=false; cone_vertex=(0,0,0) }}
}}
"#
            )
        }
        "helicoid" => {
            arity(0)?;
            r#"scene "helicoid" {
  ambient 3; dim 2;
  chart {
    params (u, v);
    domain { u in (-inf, inf) grows abs(u); v in (-inf, inf) grows abs(v) };
    map (u*cos(v), u*sin(v), v)
  }
  meta { definable=false; minimal=true; monotone_at=(0,0,0) }
}
"#
            .to_string()
        }
        "staircase" => {
            arity(1)?;
            let a1 = args.first().copied().unwrap_or(1.0);
            format!(
                r#"scene "staircase({a1})" {{
  ambient 2; dim 1;
  builtin staircase({a1:?});
  meta {{ definable=false; minimal=false }}
}}
"#
            )
        }
        "complex_parabola" => {
            arity(0)?;
            r#"scene "complex_parabola" {
  ambient 4; dim 2;
  chart { params (u, v); domain { u in (-inf, inf); v in (-inf, inf) }; map (u, v, u^2 - v^2, 2*u*v) }
  meta { definable=true; minimal=true; monotone_at=(0,0,0,0); degree=2 }
}
"#
            .to_string()
        }
        "complex_line" => {
            arity(0)?;
            r#"scene "complex_line" {
  ambient 4; dim 2;
  chart { params (u, v); domain { u in (-inf, inf); v in (-inf, inf) }; map (u, v, 0, 0) }
  meta { definable=true; minimal=true; cone_vertex=(0,0,0,0); monotone_at=(0,0,0,0); degree=1 }
}
"#
            .to_string()
        }
        "complex_cubic" => {
            arity(0)?;
            r#"scene "complex_cubic" {
  ambient 4; dim 2;
  chart {
    params (u, v);
    domain { u in (-inf, inf); v in (-inf, inf) };
    map (u, v, u^3 - 3*u*v^2, 3*u^2*v - v^3)
  }
  meta { definable=true; minimal=true; monotone_at=(0,0,0,0); degree=3 }
}
"#
            .to_string()
        }
        "cubic_graph" => {
            arity(0)?;
            r#"scene "cubic_graph" {
  ambient 3; dim 2;
  chart { params (x, y); domain { x in (-inf, inf); y in (-inf, inf) }; map (x, y, (x^2+y^2+1)^(1/3)) }
  meta { definable=true; minimal=false }
}
"#
            .to_string()
        }
        "lawson_osserman" => {
            arity(0)?;
            // |x| eta(x/|x|) = eta(x)/|x| for the quadratic Hopf map eta
            r#"scene "lawson_osserman" {
  ambient 7; dim 4;
  chart {
    params (x1, x2, x3, x4);
    domain {
      x1 in (-inf, inf); x2 in (-inf, inf); x3 in (-inf, inf); x4 in (-inf, inf);
      exclude ball((0,0,0,0), 0.001)
    };
    map (x1, x2, x3, x4,
         sqrt(5)/2 * (x1^2 + x2^2 - x3^2 - x4^2) / sqrt(x1^2 + x2^2 + x3^2 + x4^2),
         sqrt(5)/2 * 2*(x1*x3 + x2*x4) / sqrt(x1^2 + x2^2 + x3^2 + x4^2),
         sqrt(5)/2 * 2*(x2*x3 - x1*x4) / sqrt(x1^2 + x2^2 + x3^2 + x4^2))
  }
  meta { definable=true; minimal=true; cone_vertex=(0,0,0,0,0,0,0); monotone_at=(0,0,0,0,0,0,0) }
}
"#
            .to_string()
        }
        _ => return Err(SceneError::UnknownBuiltin(name.to_string())),
    };
    Ok(text)
}

/// Builds a built-in from a call such as `catenoid`, `alpha_cone(3)` or `staircase(1)`.
pub fn builtin_scene(call: &str) -> Result<Scene, SceneError> {
    let call = call.trim();
    let (name, args) = match call.find('(') {
        Some(open) => {
            let inner = call[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| SceneError::Invalid(format!("malformed builtin call `{call}`")))?;
            let mut args = Vec::new();
            for a in inner.split(',').map(str::trim).filter(|a| !a.is_empty()) {
                let e = parse_expr_in(a, &[]).map_err(|e| SceneError::Invalid(format!("argument `{a}`: {e}")))?;
                let v = Tape::compile_exprs(&[e], &[])
                    .and_then(|t| t.eval(&[]))
                    .map_err(|e| SceneError::Invalid(format!("argument `{a}`: {e}")))?[0];
                args.push(v);
            }
            (call[..open].trim(), args)
        }
        None => (call, Vec::new()),
    };
    parse_scene(&builtin_source(name, &args)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Body;

    #[test]
    fn library_has_every_reference_scene() {
        let lib = builtin_library();
        for name in CORE {
            assert!(lib.iter().any(|s| s.name.starts_with(name)), "{name}");
        }
    }

    #[test]
    fn catenoid_meta() {
        let s = builtin_scene("catenoid").unwrap();
        assert_eq!((s.ambient_dim, s.dim), (3, 2));
        assert!(s.meta.minimal);
    }

    #[test]
    fn alpha_cone_argument() {
        let s = builtin_scene("alpha_cone(3)").unwrap();
        assert_eq!(s.meta.cone_vertex, Some(vec![0.0; 3]));
        let p = s.charts()[0].eval(&[2.0, 0.3]).unwrap();
        // z^2 = 3 (x^2 + y^2)
        assert!((p[2] * p[2] - 3.0 * (p[0] * p[0] + p[1] * p[1])).abs() < 1e-12);
    }

    #[test]
    fn complex_parabola_is_a_graph() {
        let s = builtin_scene("complex_parabola").unwrap();
        assert_eq!((s.ambient_dim, s.dim), (4, 2));
        assert!(s.graph_chart().is_some());
        assert_eq!(s.charts()[0].eval(&[2.0, 3.0]).unwrap(), vec![2.0, 3.0, -5.0, 12.0]);
    }

    #[test]
    fn staircase_body() {
        let s = builtin_scene("staircase(1)").unwrap();
        assert!(matches!(s.body, Body::Staircase(st) if st.a1 == 1.0));
        assert!(builtin_scene("staircase(-1)").is_err());
    }

    #[test]
    fn lawson_osserman_has_norm_proportional_graph() {
        let s = builtin_scene("lawson_osserman").unwrap();
        assert_eq!((s.ambient_dim, s.dim), (7, 4));
        let x = [0.3, -1.2, 0.7, 2.0];
        let p = s.charts()[0].eval(&x).unwrap();
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nf = p[4..].iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((nf - 5f64.sqrt() / 2.0 * nx).abs() < 1e-12);
    }

    #[test]
    fn unknown_name() {
        assert_eq!(
            builtin_scene("torus").unwrap_err(),
            SceneError::UnknownBuiltin("torus".into())
        );
    }
}
