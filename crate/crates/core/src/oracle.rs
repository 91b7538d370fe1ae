//! Closed-form and one-dimensional reference values, computed without the cell
//! integrator. Used by tests and the `oracle` subcommand.

use crate::measure::unit_ball_volume;
use serde::Serialize;
use std::f64::consts::PI;

/// Composite 5-point Gauss-Legendre on `[a, b]` with `panels` panels.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let (x, w) = crate::measure::gauss_legendre(5);
    let h = (b - a) / panels as f64;
    let mut sum = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            sum += wi * f(lo + xi * h);
        }
    }
    sum * h
}

/// Root of an increasing function on `[lo, hi]` by bisection.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Area of the plane inside `B_r(0)`.
pub fn plane_area(r: f64) -> f64 {
    PI * r * r
}

/// Area of the double cone `z^2 = alpha (x^2 + y^2)` inside `B_r(0)`, by integrating
/// `sqrt(1+alpha) 2 pi rho` over `rho <= r / sqrt(1+alpha)` on each nappe.
pub fn alpha_cone_area(alpha: f64, r: f64) -> f64 {
    let rho_max = r / (1.0 + alpha).sqrt();
    2.0 * integrate(|rho| (1.0 + alpha).sqrt() * 2.0 * PI * rho, 0.0, rho_max, 4)
}

/// Height where the catenoid leaves `B_r(0)`: root of `cosh(z)^2 + z^2 = r^2`.
pub fn catenoid_height(r: f64) -> Option<f64> {
    if r <= 1.0 {
        return None;
    }
    Some(bisect(|z| z.cosh().powi(2) + z * z - r * r, 0.0, r))
}

/// Catenoid area inside `B_r(0)`: `2 pi ∫_{|z| <= z*} cosh(z)^2 dz`.
pub fn catenoid_area(r: f64) -> f64 {
    match catenoid_height(r) {
        None => 0.0,
        Some(z) => 2.0 * PI * integrate(|t| t.cosh().powi(2), -z, z, 400),
    }
}

/// Helicoid area inside `B_r(0)`: `∫∫_{u^2+v^2 <= r^2} sqrt(1+u^2)`, with `u = r sin(phi)`.
pub fn helicoid_area(r: f64) -> f64 {
    let f = |phi: f64| {
        let u = r * phi.sin();
        let c = r * phi.cos();
        (1.0 + u * u).sqrt() * 2.0 * c * c
    };
    // the integrand bends at phi ~ 1/r, so panels are graded towards 0
    let mut total = 0.0;
    let mut hi = PI / 2.0;
    while hi > 1e-3 / r.max(1.0) {
        total += integrate(f, hi / 2.0, hi, 16);
        hi /= 2.0;
    }
    total += integrate(f, 0.0, hi, 16);
    2.0 * total
}

/// Area of the graph of `w -> w^k` over `C` inside `B_r(0)`:
/// `∫ (1 + k^2 rho^(2k-2)) 2 pi rho drho` over `rho^2 + rho^(2k) <= r^2`.
pub fn complex_power_area(k: i32, r: f64) -> f64 {
    let rho_max = bisect(|rho| rho * rho + rho.powi(2 * k) - r * r, 0.0, r);
    let kf = k as f64;
    integrate(
        |rho| (1.0 + kf * kf * rho.powi(2 * k - 2)) * 2.0 * PI * rho,
        0.0,
        rho_max,
        400,
    )
}

/// Length of the parabola `y = x^2` inside `B_r(0)`.
pub fn parabola_length(r: f64) -> f64 {
    let x = bisect(|x| x * x + x.powi(4) - r * r, 0.0, r);
    2.0 * (x * (1.0 + 4.0 * x * x).sqrt() / 2.0 + (2.0 * x).asinh() / 4.0)
}

/// `liminf` and `limsup` of the staircase density ratio as `r -> inf`.
///
/// With single segments on odd intervals and double segments on even ones,
/// the length up to `a_J` approaches `2^(J-1) * 8/3` for odd `J` and
/// `2^(J-1) * 10/3` for even `J`, while `a_J ~ 2^J`.
pub fn staircase_bands() -> (f64, f64) {
    (2.0 / 3.0, 5.0 / 6.0)
}

/// Density of the double cone at its vertex and at infinity, `2 / sqrt(1+alpha)`.
pub fn alpha_cone_density(alpha: f64) -> f64 {
    2.0 / (1.0 + alpha).sqrt()
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct OracleValue {
    pub quantity: String,
    pub value: f64,
}

pub fn oracle_names() -> &'static [&'static str] {
    &[
        "mu",
        "plane",
        "alpha_cone",
        "catenoid",
        "helicoid",
        "parabola",
        "complex_parabola",
        "complex_cubic",
        "staircase",
    ]
}

/// Reference values printed by the `oracle` subcommand.
pub fn oracle_values(name: &str) -> Option<Vec<OracleValue>> {
    let v = |q: String, value: f64| OracleValue { quantity: q, value };
    let out = match name {
        "mu" => (1..=4).map(|n| v(format!("mu_{n}"), unit_ball_volume(n))).collect(),
        "plane" => [1.0, 10.0].iter().map(|&r| v(format!("area(B_{r})"), plane_area(r))).collect(),
        "alpha_cone" => {
            let mut out = Vec::new();
            for alpha in [1.0, 3.0] {
                out.push(v(format!("alpha={alpha}: area(B_1)"), alpha_cone_area(alpha, 1.0)));
                out.push(v(format!("alpha={alpha}: density"), alpha_cone_density(alpha)));
            }
            out
        }
        "catenoid" => [2.0, 10.0, 50.0]
            .iter()
            .flat_map(|&r| {
                [
                    v(format!("z*({r})"), catenoid_height(r).unwrap()),
                    v(format!("area(B_{r})"), catenoid_area(r)),
                    v(format!("theta({r})"), catenoid_area(r) / (PI * r * r)),
                ]
            })
            .collect(),
        "helicoid" => [10.0, 100.0, 1000.0]
            .iter()
            .map(|&r| v(format!("theta({r})"), helicoid_area(r) / (PI * r * r)))
            .collect(),
        "parabola" => [1.0, 10.0, 1000.0]
            .iter()
            .map(|&r| v(format!("length(B_{r})"), parabola_length(r)))
            .collect(),
        "complex_parabola" => [1.0, 10.0, 1000.0]
            .iter()
            .map(|&r| v(format!("theta({r})"), complex_power_area(2, r) / (PI * r * r)))
            .collect(),
        "complex_cubic" => [1.0, 10.0, 1000.0]
            .iter()
            .map(|&r| v(format!("theta({r})"), complex_power_area(3, r) / (PI * r * r)))
            .collect(),
        "staircase" => {
            let st = crate::scene::StaircaseSet { a1: 1.0 };
            let mut out: Vec<OracleValue> = (1..=6)
                .map(|j| v(format!("length(0, a_{j})"), st.cumulative_length(j)))
                .collect();
            let (lo, hi) = staircase_bands();
            out.push(v("liminf theta".into(), lo));
            out.push(v("limsup theta".into(), hi));
            out
        }
        _ => return None,
    };
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms_agree_with_quadrature() {
        // alpha cone: pi r^2 / sqrt(1+alpha) per nappe
        assert!((alpha_cone_area(1.0, 1.0) - 2.0 * PI / 2f64.sqrt()).abs() < 1e-12);
        // catenoid: 2 pi (z + sinh(2z)/2)
        let z = catenoid_height(50.0).unwrap();
        let closed = 2.0 * PI * (z + (2.0 * z).sinh() / 2.0);
        assert!((catenoid_area(50.0) / closed - 1.0).abs() < 1e-12);
        // w^2: pi (2 r^2 - rho*^2)
        let r: f64 = 7.0;
        let s = (-1.0 + (1.0 + 4.0 * r * r).sqrt()) / 2.0;
        assert!((complex_power_area(2, r) / (PI * (2.0 * r * r - s)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unit_ball_volumes() {
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-12);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-12 * PI);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-12 * PI);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-12 * PI * PI);
    }
}
