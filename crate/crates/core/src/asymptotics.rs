//! Density profiles `theta(r) = H^n(X ∩ B_r(p)) / (mu_n r^n)`, their limits at
//! `0+` and at infinity, and numerical monotonicity checks.

use crate::error::{Error, Result};
use crate::measure::{area_with, unit_ball_volume, BallQuery, MeasureOptions, Method};
use crate::scene::{nearest_point, Body, Scene};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;

/// Fixed verdict thresholds, echoed in every report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// Tail band must be within this multiple of `err + residual`.
    pub converge_band: f64,
    /// Fit residual must be at most this fraction of the raw tail spread (or the error scale).
    pub residual_fraction: f64,
    /// `limsup.lo - liminf.hi` must exceed this multiple of the tail error.
    pub no_limit_separation: f64,
    /// Growth factor over the last decade that counts as divergence.
    pub diverge_factor: f64,
}

pub const THRESHOLDS: Thresholds = Thresholds {
    converge_band: 3.0,
    residual_fraction: 0.1,
    no_limit_separation: 5.0,
    diverge_factor: 4.0,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityProfile {
    pub center: Vec<f64>,
    pub n: usize,
    pub radii: Vec<f64>,
    pub theta: Vec<f64>,
    pub err: Vec<f64>,
    /// Radii whose measure hit the cell budget; their error is the reported one.
    pub over_budget: Vec<f64>,
    pub method: Method,
}

impl DensityProfile {
    /// `r,theta,err` rows with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,theta,err\n");
        for i in 0..self.radii.len() {
            let _ = writeln!(out, "{:.16e},{:.16e},{:.16e}", self.radii[i], self.theta[i], self.err[i]);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LimitVerdict {
    Converges { value: f64, err: f64 },
    Diverges { rate: f64, growth: f64 },
    NoLimit { liminf_band: [f64; 2], limsup_band: [f64; 2] },
    Inconclusive { reason: String },
}

impl LimitVerdict {
    pub fn kind(&self) -> &'static str {
        match self {
            LimitVerdict::Converges { .. } => "converges",
            LimitVerdict::Diverges { .. } => "diverges",
            LimitVerdict::NoLimit { .. } => "no_limit",
            LimitVerdict::Inconclusive { .. } => "inconclusive",
        }
    }

    pub fn value(&self) -> Option<(f64, f64)> {
        match self {
            LimitVerdict::Converges { value, err } => Some((*value, *err)),
            _ => None,
        }
    }
}

/// Least-squares fit `theta = limit + slope * x` on the tail.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailFit {
    pub limit: f64,
    pub slope: f64,
    pub residual: f64,
    /// Spread of the tail after removing the fitted transient.
    pub band: f64,
    /// Spread of the raw tail values.
    pub raw_band: f64,
    pub tail_err: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityAnalysis {
    pub verdict: LimitVerdict,
    pub fit: Option<TailFit>,
    pub thresholds: Thresholds,
    pub profile: DensityProfile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitOptions {
    pub center: Option<Vec<f64>>,
    pub r_lo: f64,
    pub r_hi: f64,
    pub k: usize,
    pub tol: f64,
    pub seed: u64,
    pub max_cells: usize,
}

impl LimitOptions {
    /// Default grid for `r -> inf`: `[10, 1e4]` with 24 points, or 100 points per
    /// decade when the measure is exact.
    pub fn at_infinity(scene: &Scene, tol: f64) -> LimitOptions {
        let exact = matches!(scene.body, Body::Staircase(_));
        LimitOptions {
            center: None,
            r_lo: 10.0,
            r_hi: 1e4,
            k: if exact {
                301
            } else if scene.dim >= 3 {
                8
            } else {
                24
            },
            tol,
            seed: 0,
            max_cells: 200_000,
        }
    }

    /// Default grid for `r -> 0+`: `[1e-2, 1]`.
    pub fn at_point(p: &[f64], tol: f64) -> LimitOptions {
        LimitOptions {
            center: Some(p.to_vec()),
            r_lo: 1e-2,
            r_hi: 1.0,
            k: 12,
            tol,
            seed: 0,
            max_cells: 200_000,
        }
    }

    fn measure(&self) -> MeasureOptions {
        MeasureOptions {
            tol: self.tol,
            seed: self.seed,
            max_cells: self.max_cells,
        }
    }
}

pub fn log_grid(r_lo: f64, r_hi: f64, k: usize) -> Vec<f64> {
    let (a, b) = (r_lo.ln(), r_hi.ln());
    (0..k)
        .map(|i| {
            if i + 1 == k {
                r_hi
            } else {
                (a + (b - a) * i as f64 / (k - 1) as f64).exp()
            }
        })
        .collect()
}

/// `theta` at `k` log-spaced radii in `[r_lo, r_hi]` around `p`.
pub fn profile(scene: &Scene, p: &[f64], r_lo: f64, r_hi: f64, k: usize, tol: f64) -> Result<DensityProfile> {
    profile_with(
        scene,
        p,
        r_lo,
        r_hi,
        k,
        &MeasureOptions {
            tol,
            ..Default::default()
        },
    )
}

pub fn profile_with(scene: &Scene, p: &[f64], r_lo: f64, r_hi: f64, k: usize, opts: &MeasureOptions) -> Result<DensityProfile> {
    if !(r_lo > 0.0 && r_lo < r_hi && r_hi.is_finite()) {
        return Err(Error::InvalidArgument(format!("need 0 < r_lo < r_hi, got [{r_lo}, {r_hi}]")));
    }
    if k < 8 {
        return Err(Error::InvalidArgument(format!("a profile needs at least 8 radii, got {k}")));
    }
    let radii = log_grid(r_lo, r_hi, k);
    let mu = unit_ball_volume(scene.dim);
    let n = scene.dim as i32;
    let rows: Vec<Result<(f64, f64, bool, Method)>> = radii
        .par_iter()
        .map(|&r| {
            let q = BallQuery::new(p.to_vec(), r)?;
            let norm = mu * r.powi(n);
            match area_with(scene, &q, opts) {
                Ok(e) => Ok((e.value / norm, e.abs_error / norm, false, e.method)),
                Err(Error::BudgetExceeded { value, abs_error, .. }) => {
                    Ok((value / norm, abs_error / norm, true, Method::MonteCarlo))
                }
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut prof = DensityProfile {
        center: p.to_vec(),
        n: scene.dim,
        radii: radii.clone(),
        theta: Vec::with_capacity(k),
        err: Vec::with_capacity(k),
        over_budget: Vec::new(),
        method: Method::Exact,
    };
    for (r, row) in radii.iter().zip(rows) {
        let (t, e, over, m) = row?;
        prof.theta.push(t);
        prof.err.push(e);
        if over {
            prof.over_budget.push(*r);
        }
        prof.method = match (prof.method, m) {
            (_, Method::MonteCarlo) | (Method::MonteCarlo, _) => Method::MonteCarlo,
            (_, Method::Quadrature) | (Method::Quadrature, _) => Method::Quadrature,
            _ => Method::Exact,
        };
    }
    Ok(prof)
}

/// Density at infinity with the default grid.
pub fn density_at_infinity(scene: &Scene, tol: f64) -> Result<DensityAnalysis> {
    density_at_infinity_with(scene, &LimitOptions::at_infinity(scene, tol))
}

pub fn density_at_infinity_with(scene: &Scene, opts: &LimitOptions) -> Result<DensityAnalysis> {
    let center = opts.center.clone().unwrap_or_else(|| vec![0.0; scene.ambient_dim]);
    let prof = profile_with(scene, &center, opts.r_lo, opts.r_hi, opts.k, &opts.measure())?;
    // ordered towards the limit, with x = 1/r
    let seq: Vec<Point> = (0..prof.radii.len())
        .map(|i| Point {
            r: prof.radii[i],
            x: 1.0 / prof.radii[i],
            theta: prof.theta[i],
            err: prof.err[i],
        })
        .collect();
    let (verdict, fit) = limit_verdict(&seq, opts.tol);
    Ok(DensityAnalysis {
        verdict,
        fit,
        thresholds: THRESHOLDS,
        profile: prof,
    })
}

/// Density at a point of the set with the default grid.
pub fn density_at_point(scene: &Scene, p: &[f64], tol: f64) -> Result<DensityAnalysis> {
    density_at_point_with(scene, &LimitOptions::at_point(p, tol))
}

pub fn density_at_point_with(scene: &Scene, opts: &LimitOptions) -> Result<DensityAnalysis> {
    let p = opts
        .center
        .clone()
        .ok_or_else(|| Error::InvalidArgument("density at a point needs a center".into()))?;
    ensure_on_set(scene, &p)?;
    let prof = profile_with(scene, &p, opts.r_lo, opts.r_hi, opts.k, &opts.measure())?;
    let seq: Vec<Point> = (0..prof.radii.len())
        .rev()
        .map(|i| Point {
            r: 1.0 / prof.radii[i],
            x: prof.radii[i],
            theta: prof.theta[i],
            err: prof.err[i],
        })
        .collect();
    let (verdict, fit) = limit_verdict(&seq, opts.tol);
    Ok(DensityAnalysis {
        verdict,
        fit,
        thresholds: THRESHOLDS,
        profile: prof,
    })
}

/// Errors unless `p` lies within `1e-6` of the set.
pub fn ensure_on_set(scene: &Scene, p: &[f64]) -> Result<()> {
    let d = nearest_point(scene, p)?.distance;
    if d > 1e-6 {
        return Err(Error::PointNotOnSet(d));
    }
    Ok(())
}

/// One grid point, ordered so that the limit is approached as the index grows.
/// `r` grows towards the limit; `x` is the regressor of the tail model and shrinks.
#[derive(Debug, Clone, Copy)]
struct Point {
    r: f64,
    x: f64,
    theta: f64,
    err: f64,
}

fn limit_verdict(seq: &[Point], tol: f64) -> (LimitVerdict, Option<TailFit>) {
    let inconclusive = |reason: String| (LimitVerdict::Inconclusive { reason }, None);
    if seq.iter().any(|p| !p.theta.is_finite() || !p.err.is_finite()) {
        return inconclusive("non-finite density values".into());
    }
    let last = seq[seq.len() - 1];

    // divergence: growth over the last decade
    let decade: Vec<&Point> = seq.iter().filter(|p| p.r >= last.r / 10.0 * (1.0 - 1e-12)).collect();
    let spans_decade = seq[0].r <= last.r / 10.0 * (1.0 + 1e-12);
    if spans_decade && decade.len() >= 3 && decade[0].theta > 0.0 {
        let growth = last.theta / decade[0].theta;
        let xs: Vec<f64> = decade.iter().map(|p| p.r.ln()).collect();
        let ys: Vec<f64> = decade.iter().map(|p| p.theta.max(1e-300).ln()).collect();
        let (_, rate) = line_fit(&xs, &ys);
        if growth >= THRESHOLDS.diverge_factor && rate > 0.0 {
            return (LimitVerdict::Diverges { rate, growth }, None);
        }
    }

    let tail = &seq[seq.len() / 2..];
    let tail_err = tail.iter().map(|p| p.err).fold(0.0, f64::max);

    // oscillation: alternating turning points separated by more than the errors
    let (minima, maxima) = turning_points(tail);
    if minima.len() >= 2 && maxima.len() >= 2 {
        let band = |v: &[f64]| [v.iter().copied().fold(f64::INFINITY, f64::min), v.iter().copied().fold(f64::NEG_INFINITY, f64::max)];
        let liminf_band = band(&minima);
        let limsup_band = band(&maxima);
        if limsup_band[0] - liminf_band[1] > THRESHOLDS.no_limit_separation * tail_err {
            return (LimitVerdict::NoLimit { liminf_band, limsup_band }, None);
        }
    }

    if tail.len() < 3 {
        return inconclusive(format!("tail has {} points", tail.len()));
    }
    let xs: Vec<f64> = tail.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = tail.iter().map(|p| p.theta).collect();
    let (limit, slope) = line_fit(&xs, &ys);
    let residual = tail
        .iter()
        .map(|p| (p.theta - limit - slope * p.x).abs())
        .fold(0.0, f64::max);
    let spread = |v: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| (lo.min(y), hi.max(y)));
        hi - lo
    };
    let raw_band = spread(&mut ys.iter().copied());
    // values with the fitted transient removed
    let band = spread(&mut tail.iter().map(|p| p.theta - slope * p.x));
    let fit = TailFit {
        limit,
        slope,
        residual,
        band,
        raw_band,
        tail_err,
        points: tail.len(),
    };
    // error scale: measured error, but never finer than the requested tolerance
    let scale = tail_err.max(tol * last.theta.abs());
    let within_band = band <= THRESHOLDS.converge_band * (scale + residual);
    let model_fits = residual <= scale.max(THRESHOLDS.residual_fraction * raw_band);
    if within_band && model_fits {
        return (
            LimitVerdict::Converges {
                value: limit,
                err: scale + residual,
            },
            Some(fit),
        );
    }
    let reason = if !model_fits {
        format!("tail does not follow the a + c*x model (residual {residual:.3e}, spread {raw_band:.3e})")
    } else {
        format!("tail band {band:.3e} exceeds {}x(err + residual)", THRESHOLDS.converge_band)
    };
    (LimitVerdict::Inconclusive { reason }, Some(fit))
}

/// Intercept and slope of the least-squares line.
fn line_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - slope * mx, slope)
}

/// Local minima and maxima of a zigzag that only turns after a swing larger than
/// the combined errors of the two points involved.
fn turning_points(seq: &[Point]) -> (Vec<f64>, Vec<f64>) {
    let mut minima = Vec::new();
    let mut maxima = Vec::new();
    if seq.len() < 3 {
        return (minima, maxima);
    }
    // direction: +1 rising, -1 falling, 0 unknown
    let mut dir = 0;
    let mut ext = seq[0];
    for p in seq.iter().skip(1) {
        let swing = p.err + ext.err;
        match dir {
            0 => {
                if p.theta > ext.theta + swing {
                    dir = 1;
                    ext = *p;
                } else if p.theta < ext.theta - swing {
                    dir = -1;
                    ext = *p;
                }
            }
            1 => {
                if p.theta >= ext.theta {
                    ext = *p;
                } else if p.theta < ext.theta - swing {
                    maxima.push(ext.theta);
                    dir = -1;
                    ext = *p;
                }
            }
            _ => {
                if p.theta <= ext.theta {
                    ext = *p;
                } else if p.theta > ext.theta + swing {
                    minima.push(ext.theta);
                    dir = 1;
                    ext = *p;
                }
            }
        }
    }
    (minima, maxima)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub nondecreasing: bool,
    /// Largest decrease between adjacent radii, before subtracting errors.
    pub max_violation: f64,
    pub constant: bool,
    /// False only if the scene declares a cone vertex at `p` and the profile is not constant.
    pub cone_consistent: bool,
    pub declared_cone: bool,
    pub min_theta: f64,
    /// `theta + err >= 1` at every radius.
    pub lower_bound_ok: bool,
    pub profile: DensityProfile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityOptions {
    pub r_lo: f64,
    pub r_hi: f64,
    pub k: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for MonotonicityOptions {
    fn default() -> Self {
        MonotonicityOptions {
            r_lo: 0.05,
            r_hi: 50.0,
            k: 24,
            tol: 1e-3,
            seed: 0,
        }
    }
}

pub fn check_monotonicity(scene: &Scene, p: &[f64]) -> Result<MonotonicityReport> {
    check_monotonicity_with(scene, p, &MonotonicityOptions::default())
}

pub fn check_monotonicity_with(scene: &Scene, p: &[f64], opts: &MonotonicityOptions) -> Result<MonotonicityReport> {
    let prof = profile_with(
        scene,
        p,
        opts.r_lo,
        opts.r_hi,
        opts.k,
        &MeasureOptions {
            tol: opts.tol,
            seed: opts.seed,
            ..Default::default()
        },
    )?;
    let t = &prof.theta;
    let e = &prof.err;
    let mut nondecreasing = true;
    let mut max_violation: f64 = 0.0;
    let mut variation = 0.0;
    let mut allowance = 0.0;
    for i in 1..t.len() {
        let drop = t[i - 1] - t[i];
        max_violation = max_violation.max(drop);
        if drop > e[i - 1] + e[i] {
            nondecreasing = false;
        }
        variation += (t[i] - t[i - 1]).abs();
        allowance += e[i - 1] + e[i];
    }
    let constant = variation <= allowance;
    let declared_cone = scene
        .meta
        .cone_vertex
        .as_ref()
        .is_some_and(|v| crate::linalg::dist(v, p) < 1e-9);
    let min_theta = t.iter().copied().fold(f64::INFINITY, f64::min);
    let lower_bound_ok = t.iter().zip(e).all(|(t, e)| t + e >= 1.0);
    Ok(MonotonicityReport {
        nondecreasing,
        max_violation,
        constant,
        cone_consistent: !declared_cone || constant,
        declared_cone,
        min_theta,
        lower_bound_ok,
        profile: prof,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(r: &[f64], th: &[f64], err: f64) -> Vec<Point> {
        r.iter()
            .zip(th)
            .map(|(&r, &t)| Point {
                r,
                x: 1.0 / r,
                theta: t,
                err,
            })
            .collect()
    }

    fn verdict_for(f: impl Fn(f64) -> f64, err: f64) -> LimitVerdict {
        verdict_on(24, f, err)
    }

    fn verdict_on(k: usize, f: impl Fn(f64) -> f64, err: f64) -> LimitVerdict {
        let r = log_grid(10.0, 1e4, k);
        let th: Vec<f64> = r.iter().map(|&x| f(x)).collect();
        limit_verdict(&pts(&r, &th, err), 1e-3).0
    }

    #[test]
    fn grid_is_log_spaced() {
        let g = log_grid(1.0, 1000.0, 4);
        for (a, b) in g.iter().zip([1.0, 10.0, 100.0, 1000.0]) {
            assert!((a / b - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn synthetic_verdicts() {
        assert_eq!(verdict_for(|r| 2.0 - 3.0 / r, 1e-6).kind(), "converges");
        assert_eq!(verdict_for(|r| r / 10.0, 1e-6).kind(), "diverges");
        assert_eq!(verdict_for(|r| r.sqrt(), 1e-6).kind(), "inconclusive");
        assert_eq!(verdict_for(|r| r.ln(), 1e-6).kind(), "inconclusive");
        assert_eq!(verdict_on(101, |r| 1.0 + 0.2 * (6.0 * r.ln()).sin(), 1e-6).kind(), "no_limit");
        // oscillation buried in the errors is not a missing limit
        assert_ne!(verdict_on(101, |r| 1.0 + 1e-4 * (6.0 * r.ln()).sin(), 1e-3).kind(), "no_limit");
    }

    #[test]
    fn converged_value_extrapolates() {
        match verdict_for(|r| 2.0 - 3.0 / r, 1e-6) {
            LimitVerdict::Converges { value, err } => {
                assert!((value - 2.0).abs() < 1e-9);
                assert!(err < 3e-3);
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn csv_has_seventeen_digits() {
        let p = DensityProfile {
            center: vec![0.0],
            n: 1,
            radii: vec![1.0],
            theta: vec![1.0 / 3.0],
            err: vec![0.0],
            over_budget: vec![],
            method: Method::Exact,
        };
        let csv = p.to_csv();
        assert!(csv.starts_with("r,theta,err\n"));
        let row = csv.lines().nth(1).unwrap();
        let theta: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(theta, 1.0 / 3.0);
    }
}
