//! Nearest points on the set, by cover search followed by damped Gauss-Newton.

use super::chart::Chart;
use super::cover::cover_chart;
use super::region::Target;
use super::{Body, Scene};
use crate::error::{Error, Result};
use crate::linalg::dist;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub chart: usize,
    pub param: Vec<f64>,
    pub point: Vec<f64>,
    pub distance: f64,
}

/// Closest point of the set to `p`. Searches balls of doubling radius around `p`.
pub fn nearest_point(scene: &Scene, p: &[f64]) -> Result<Projection> {
    if p.len() != scene.ambient_dim {
        return Err(Error::InvalidArgument(format!(
            "point has {} coordinates, ambient dimension is {}",
            p.len(),
            scene.ambient_dim
        )));
    }
    if let Body::Staircase(st) = &scene.body {
        let reach = p[0].max(0.0) + 2.0;
        let mut best: Option<Projection> = None;
        for s in st.segments_until(reach) {
            let x = p[0].clamp(s.x0, s.x1);
            let q = vec![x, s.height];
            let d = dist(&q, p);
            if best.as_ref().is_none_or(|b| d < b.distance) {
                best = Some(Projection {
                    chart: 0,
                    param: vec![x],
                    point: q,
                    distance: d,
                });
            }
        }
        return best.ok_or_else(|| Error::EmptyIntersection("staircase is empty".into()));
    }
    let mut radius = 1e-3 * crate::linalg::norm(p).max(1.0);
    while radius < 1e7 {
        let target = Target::Ball {
            center: p.to_vec(),
            radius,
        };
        let mut best: Option<Projection> = None;
        for (ci, chart) in scene.charts().iter().enumerate() {
            if let Some(mut q) = nearest_on_chart(chart, p, &target)? {
                q.chart = ci;
                if best.as_ref().is_none_or(|b| q.distance < b.distance) {
                    best = Some(q);
                }
            }
        }
        if let Some(b) = best {
            if b.distance <= radius {
                return Ok(b);
            }
        }
        radius *= 4.0;
    }
    Err(Error::EmptyIntersection(format!("no point of the set within 1e7 of {p:?}")))
}

/// Closest point of one chart to `p`, starting from cover cells of `target`.
pub fn nearest_on_chart(chart: &Chart, p: &[f64], target: &Target) -> Result<Option<Projection>> {
    let cover = cover_chart(chart, 0, target, 20_000)?;
    if cover.is_empty() {
        return Ok(None);
    }
    let mut jet = chart.jet_buffer();
    let mut starts: Vec<(f64, Vec<f64>)> = Vec::new();
    for c in &cover {
        let u = c.cell.center();
        if chart.point(&u, &mut jet).is_ok() {
            starts.push((dist(&jet.values, p), u));
        }
    }
    starts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best: Option<Projection> = None;
    for (_, u0) in starts.into_iter().take(6) {
        if let Some(q) = refine(chart, p, u0) {
            if best.as_ref().is_none_or(|b| q.distance < b.distance) {
                best = Some(q);
            }
        }
    }
    Ok(best)
}

/// Gauss-Newton on `|f(u) - p|^2` with a backtracking search along each step,
/// staying inside the chart domain.
fn refine(chart: &Chart, p: &[f64], mut u: Vec<f64>) -> Option<Projection> {
    let d = chart.dim();
    let m = chart.ambient();
    let mut jet = chart.jet_buffer();
    let mut trial_jet = chart.jet_buffer();
    chart.jet(&u, &mut jet).ok()?;
    let mut cost = dist(&jet.values, p);
    for _ in 0..200 {
        let j = DMatrix::from_column_slice(m, d, &jet.jac);
        let r = DVector::from_iterator(m, p.iter().zip(&jet.values).map(|(a, b)| a - b));
        let jt = j.transpose();
        let g = &jt * &r;
        let mut h = &jt * &j;
        let scale = h.diagonal().max().max(1e-300);
        for i in 0..d {
            h[(i, i)] += 1e-10 * scale;
        }
        let step = h.cholesky()?.solve(&g);
        // best point among u + 2^-k step
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut alpha = 1.0;
        for _ in 0..40 {
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(a, b)| a + alpha * b).collect();
            if chart.domain.contains(&trial) && chart.point(&trial, &mut trial_jet).is_ok() {
                let c = dist(&trial_jet.values, p);
                match &best {
                    Some((bc, _)) if c >= *bc => {
                        if *bc < cost {
                            break;
                        }
                    }
                    _ => best = Some((c, trial)),
                }
            }
            alpha *= 0.5;
        }
        match best {
            Some((c, trial)) if c < cost => {
                let moved = crate::linalg::dist(&trial, &u);
                u = trial;
                chart.jet(&u, &mut jet).ok()?;
                cost = c;
                if moved <= 1e-15 * (1.0 + crate::linalg::norm(&u)) {
                    break;
                }
            }
            _ => break,
        }
    }
    Some(Projection {
        chart: 0,
        param: u,
        point: jet.values.clone(),
        distance: cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::builtin_scene;

    #[test]
    fn projects_onto_catenoid_neck() {
        let s = builtin_scene("catenoid").unwrap();
        let q = nearest_point(&s, &[0.0, 0.0, 0.0]).unwrap();
        assert!((q.distance - 1.0).abs() < 1e-9);
        let on = nearest_point(&s, &[1.0, 0.0, 0.0]).unwrap();
        assert!(on.distance < 1e-9);
    }

    #[test]
    fn projects_onto_parabola() {
        let s = builtin_scene("parabola").unwrap();
        let q = nearest_point(&s, &[0.0, 1.0]).unwrap();
        // nearest points at x^2 = 1/2
        assert!((q.distance - 0.75f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn staircase_nearest() {
        let s = builtin_scene("staircase(1)").unwrap();
        let q = nearest_point(&s, &[2.0, 0.2]).unwrap();
        assert!((q.distance - 0.3).abs() < 1e-12);
    }
}
