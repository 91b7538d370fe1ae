//! Bernstein-type classification from numerical evidence at infinity.
//!
//! The verdict follows one route: a set satisfying the monotonicity formula with
//! density 1 at infinity is affine. The other observations (cone, limit planes,
//! normal embedding, multiplicities) are reported next to it and cross-checked.

use crate::asymptotics::{check_monotonicity, density_at_infinity, LimitVerdict, MonotonicityReport};
use crate::cones::{normal_set_infinity, tangent_cone_infinity, ConeEstimate, ConeOptions, NormalOptions, PlaneLimitEstimate};
use crate::error::Result;
use crate::linalg::{distance_to_span, principal_directions, sub};
use crate::metric::{lne_at_infinity, LneOptions, LneReport, LneVerdict};
use crate::multiplicity::{kr_check, KrReport};
use crate::scene::{nearest_point, sample_target, Region, Scene, Target};
use nalgebra::DMatrix;
use serde::Serialize;

/// Wording of the affine verdict; the theorem's hypotheses are not all checkable.
pub const AFFINE_STATEMENT: &str = "numerically consistent with an affine subspace";

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyOptions {
    /// Tolerance on the density at infinity and the measure behind it.
    pub tol: f64,
    /// Angular tolerance for cones and limit planes.
    pub angle_tol: f64,
    pub seed: u64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            tol: 1e-3,
            angle_tol: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneEvidence {
    /// `meta` when declared by the scene, `check` when measured.
    pub source: String,
    pub point: Vec<f64>,
    pub holds: bool,
    pub check: Option<MonotonicityReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evidence {
    pub theta_inf: Option<LimitVerdict>,
    pub cone: Option<ConeEstimate>,
    pub normal_planes: Option<PlaneLimitEstimate>,
    pub lne: Option<LneReport>,
    pub monotone: Option<MonotoneEvidence>,
    pub kr: Option<KrReport>,
    /// Evidence that could not be gathered, with the reason.
    pub errors: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BernsteinVerdict {
    AffineSubspace { statement: String, basis: Vec<Vec<f64>>, offset: Vec<f64>, max_residual: f64 },
    NotAffine { failed: Vec<String> },
    Inconclusive { missing: Vec<String> },
}

impl BernsteinVerdict {
    pub fn kind(&self) -> &'static str {
        match self {
            BernsteinVerdict::AffineSubspace { .. } => "affine_subspace",
            BernsteinVerdict::NotAffine { .. } => "not_affine",
            BernsteinVerdict::Inconclusive { .. } => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Routes {
    /// Density 1 and monotonicity: decides the verdict.
    pub density_monotone: Option<bool>,
    /// Normally embedded at infinity with a linear tangent cone.
    pub lne_linear_cone: Option<bool>,
    /// Proxy for regularity at infinity: linear cone and every multiplicity 1.
    pub multiplicity_proxy: Option<bool>,
    /// False if an affine verdict is contradicted by another route.
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub scene: String,
    pub definable: bool,
    /// Connectedness is assumed, never tested.
    pub connected_assumed: bool,
    pub evidence: Evidence,
    pub routes: Routes,
    pub moser: Option<MoserReport>,
    pub verdict: BernsteinVerdict,
}

/// Gathers every piece of evidence and applies the density-monotonicity route.
pub fn classify(scene: &Scene, opts: &ClassifyOptions) -> Result<Classification> {
    let mut errors = Vec::new();
    let density_tol = if scene.dim >= 3 { opts.tol.max(1e-2) } else { opts.tol };
    let theta_inf = keep(&mut errors, "theta_inf", density_at_infinity(scene, density_tol).map(|a| a.verdict));
    let cone = keep(&mut errors, "cone", tangent_cone_infinity(scene, &ConeOptions::at_infinity(opts.angle_tol, opts.seed)));
    let normal_planes = keep(&mut errors, "normal_planes", normal_set_infinity(scene, &NormalOptions::new(opts.angle_tol, opts.seed)));
    let lne = keep(
        &mut errors,
        "lne",
        lne_at_infinity(
            scene,
            &LneOptions {
                graph: crate::metric::GraphOptions {
                    seed: opts.seed,
                    ..Default::default()
                },
                ..Default::default()
            },
        ),
    );
    let monotone = keep(&mut errors, "monotone", monotone_evidence(scene));
    let kr = keep(&mut errors, "kr", kr_check(scene, density_tol, opts.seed));
    let moser = match scene.graph_chart() {
        Some(_) => keep(
            &mut errors,
            "moser",
            moser_with(scene, normal_planes.as_ref(), monotone.as_ref().map(|m| m.holds), opts.seed),
        ),
        None => None,
    };
    let evidence = Evidence {
        theta_inf,
        cone,
        normal_planes,
        lne,
        monotone,
        kr,
        errors,
    };
    let routes = routes(&evidence, opts.tol);
    let verdict = decide(scene, &evidence, &routes, opts)?;
    let mut routes = routes;
    if verdict.kind() == "affine_subspace" {
        routes.consistent = routes.lne_linear_cone != Some(false) && routes.multiplicity_proxy != Some(false);
    }
    if let Some(m) = &moser {
        if m.implies_affine && verdict.kind() != "affine_subspace" {
            routes.consistent = false;
        }
    }
    Ok(Classification {
        scene: scene.name.clone(),
        definable: scene.meta.definable,
        connected_assumed: true,
        evidence,
        routes,
        moser,
        verdict,
    })
}

fn keep<T>(errors: &mut Vec<(String, String)>, what: &str, r: Result<T>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            errors.push((what.to_string(), e.to_string()));
            None
        }
    }
}

/// Declared monotonicity point, else a measured check at the cone vertex or at the
/// point of the set nearest the origin. A measured check must be nondecreasing,
/// stay at least 1 and be constant at a declared vertex.
pub fn monotone_evidence(scene: &Scene) -> Result<MonotoneEvidence> {
    if let Some(p) = &scene.meta.monotone_at {
        return Ok(MonotoneEvidence {
            source: "meta".into(),
            point: p.clone(),
            holds: true,
            check: None,
        });
    }
    let p = match &scene.meta.cone_vertex {
        Some(v) => v.clone(),
        None => nearest_point(scene, &vec![0.0; scene.ambient_dim])?.point,
    };
    let report = check_monotonicity(scene, &p)?;
    let holds = report.nondecreasing && report.lower_bound_ok && report.cone_consistent;
    Ok(MonotoneEvidence {
        source: "check".into(),
        point: p,
        holds,
        check: Some(report),
    })
}

fn routes(ev: &Evidence, tol: f64) -> Routes {
    let theta_one = ev.theta_inf.as_ref().and_then(|v| match v {
        LimitVerdict::Converges { value, err } => Some((value - 1.0).abs() <= tol + err),
        LimitVerdict::Diverges { .. } | LimitVerdict::NoLimit { .. } => Some(false),
        LimitVerdict::Inconclusive { .. } => None,
    });
    let monotone = ev.monotone.as_ref().map(|m| m.holds);
    let density_monotone = match (theta_one, monotone) {
        (Some(false), _) | (_, Some(false)) => Some(false),
        (Some(true), Some(true)) => Some(true),
        _ => None,
    };
    let linear = ev.cone.as_ref().map(|c| c.is_linear_subspace);
    let lne = ev.lne.as_ref().and_then(|l| match l.verdict {
        LneVerdict::Lne { .. } => Some(true),
        LneVerdict::NotLne { .. } => Some(false),
        LneVerdict::Inconclusive { .. } => None,
    });
    let both = |a: Option<bool>, b: Option<bool>| match (a, b) {
        (Some(false), _) | (_, Some(false)) => Some(false),
        (Some(true), Some(true)) => Some(true),
        _ => None,
    };
    let all_k_one = ev.kr.as_ref().and_then(|kr| {
        if kr.components.is_empty() {
            None
        } else {
            Some(kr.components.iter().all(|c| c.k == 1))
        }
    });
    Routes {
        density_monotone,
        lne_linear_cone: both(lne, linear),
        multiplicity_proxy: both(all_k_one, linear),
        consistent: true,
    }
}

fn decide(scene: &Scene, ev: &Evidence, routes: &Routes, opts: &ClassifyOptions) -> Result<BernsteinVerdict> {
    if routes.density_monotone == Some(true) {
        let (basis, offset, max_residual) = fit_affine(scene, opts.seed)?;
        return Ok(BernsteinVerdict::AffineSubspace {
            statement: AFFINE_STATEMENT.into(),
            basis,
            offset,
            max_residual,
        });
    }
    let mut failed = Vec::new();
    match &ev.theta_inf {
        Some(LimitVerdict::Converges { value, err }) if (value - 1.0).abs() > opts.tol + err => {
            failed.push(format!("theta_inf = {value:.4} != 1"))
        }
        Some(LimitVerdict::Diverges { .. }) => failed.push("theta_inf diverges".into()),
        Some(LimitVerdict::NoLimit { .. }) => failed.push("theta_inf has no limit".into()),
        _ => {}
    }
    if let Some(m) = &ev.monotone {
        if !m.holds {
            failed.push(format!("monotonicity formula fails at {:?}", m.point));
        }
    }
    if routes.density_monotone == Some(false) {
        if let Some(c) = &ev.cone {
            if !c.is_linear_subspace {
                failed.push("tangent cone at infinity is not a linear subspace".into());
            }
        }
        if let Some(l) = &ev.lne {
            if l.verdict.kind() == "not_lne" {
                failed.push("not normally embedded at infinity".into());
            }
        }
        if let Some(kr) = &ev.kr {
            if let Some(k) = kr.components.iter().map(|c| c.k).filter(|&k| k > 1).max() {
                failed.push(format!("relative multiplicity k = {k} > 1"));
            }
        }
        if let Some(p) = &ev.normal_planes {
            if !p.is_single_plane {
                failed.push("limit tangent planes are not a single plane".into());
            }
        }
        if !scene.meta.definable {
            failed.push("not definable (declared)".into());
        }
        return Ok(BernsteinVerdict::NotAffine { failed });
    }
    let mut missing = Vec::new();
    if !matches!(ev.theta_inf, Some(LimitVerdict::Converges { .. })) {
        missing.push("theta_inf".to_string());
    }
    if ev.monotone.is_none() {
        missing.push("monotone".to_string());
    }
    for (what, why) in &ev.errors {
        missing.push(format!("{what}: {why}"));
    }
    Ok(BernsteinVerdict::Inconclusive { missing })
}

/// Affine `n`-plane through far samples by total least squares, with the largest
/// sample distance to it.
pub fn fit_affine(scene: &Scene, seed: u64) -> Result<(Vec<Vec<f64>>, Vec<f64>, f64)> {
    let m = scene.ambient_dim;
    let target = Target::Annulus {
        center: vec![0.0; m],
        lo: 100.0,
        hi: 200.0,
    };
    let pts: Vec<Vec<f64>> = sample_target(scene, &target, 2000, seed)?
        .samples
        .into_iter()
        .map(|s| s.point)
        .collect();
    let mut offset = vec![0.0; m];
    for p in &pts {
        for i in 0..m {
            offset[i] += p[i] / pts.len() as f64;
        }
    }
    let centered: Vec<Vec<f64>> = pts.iter().map(|p| sub(p, &offset)).collect();
    let (dirs, _) = principal_directions(&centered);
    let basis: Vec<Vec<f64>> = dirs.into_iter().take(scene.dim).collect();
    let max_residual = centered
        .iter()
        .map(|r| distance_to_span(r, &basis))
        .fold(0.0, f64::max);
    Ok((basis, offset, max_residual))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MoserReport {
    pub levels: Vec<f64>,
    /// Largest operator norm of the derivative of the graph function, per level.
    pub sup_derivative: Vec<f64>,
    pub bounded_derivative: bool,
    pub normal_single_plane: Option<bool>,
    pub monotone: Option<bool>,
    /// The graph is defined over all of parameter space.
    pub complete: bool,
    pub implies_affine: bool,
}

/// Graph scenes: bounded slope, a single limit plane and monotonicity together
/// force an affine graph.
pub fn moser_graph_check(scene: &Scene, angle_tol: f64, seed: u64) -> Result<MoserReport> {
    let normal = normal_set_infinity(scene, &NormalOptions::new(angle_tol, seed))?;
    let monotone = monotone_evidence(scene)?.holds;
    moser_with(scene, Some(&normal), Some(monotone), seed)
}

const MOSER_LEVELS: [f64; 3] = [10.0, 100.0, 1000.0];

fn moser_with(scene: &Scene, normal: Option<&PlaneLimitEstimate>, monotone: Option<bool>, seed: u64) -> Result<MoserReport> {
    let chart = scene
        .graph_chart()
        .ok_or_else(|| crate::Error::Unsupported("the scene is not a single graph chart".into()))?;
    let (m, n) = (scene.ambient_dim, scene.dim);
    let mut sup = Vec::new();
    for (i, &r) in MOSER_LEVELS.iter().enumerate() {
        let target = Target::Annulus {
            center: vec![0.0; m],
            lo: r,
            hi: 2.0 * r,
        };
        let set = sample_target(scene, &target, 500, seed.wrapping_add(i as u64))?;
        let mut jet = chart.jet_buffer();
        let mut best: f64 = 0.0;
        for s in &set.samples {
            chart.jet(&s.param, &mut jet)?;
            // rows n..m of the column-major m x n Jacobian
            let du = DMatrix::from_fn(m - n, n, |row, col| jet.jac[col * m + n + row]);
            let norm = if m == n { 0.0 } else { du.singular_values().max() };
            best = best.max(norm);
        }
        sup.push(best);
    }
    let bounded_derivative = sup.iter().all(|s| s.is_finite()) && sup.windows(2).all(|w| w[1] <= 1.1 * w[0] + 1e-9);
    let complete = entire(&chart.domain);
    let normal_single_plane = normal.map(|p| p.is_single_plane);
    let implies_affine = bounded_derivative && complete && normal_single_plane == Some(true) && monotone == Some(true);
    Ok(MoserReport {
        levels: MOSER_LEVELS.to_vec(),
        sup_derivative: sup,
        bounded_derivative,
        normal_single_plane,
        monotone,
        complete,
        implies_affine,
    })
}

fn entire(r: &Region) -> bool {
    match r {
        Region::Rect { lo, hi } => lo.iter().all(|x| *x == f64::NEG_INFINITY) && hi.iter().all(|x| *x == f64::INFINITY),
        Region::Intersection(parts) => parts.iter().all(entire),
        Region::Ball { .. } | Region::BallComplement { .. } => false,
    }
}
