//! Spherical blow-ups, tangent cones at infinity and at points, and the set of
//! limit tangent planes at infinity.

use crate::error::{Error, Result};
use crate::linalg::{self, distance_to_span, fit_subspace, norm, orthonormal_columns, principal_angle};
use crate::scene::{sample_target, Body, Scene, Target};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

/// A sampled point seen through the blow-up: direction and scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupPoint {
    pub direction: Vec<f64>,
    /// `1/|x|` at infinity, `|x - p|` at a point.
    pub scale: f64,
    pub source: Vec<f64>,
    pub level: usize,
}

/// `x -> (x/|x|, 1/|x|)`.
pub fn blow_up(x: &[f64]) -> Option<(Vec<f64>, f64)> {
    let r = norm(x);
    if !(r > 0.0 && r.is_finite()) {
        return None;
    }
    Some((x.iter().map(|v| v / r).collect(), 1.0 / r))
}

/// Inverse of [`blow_up`].
pub fn blow_down(u: &[f64], s: f64) -> Vec<f64> {
    u.iter().map(|v| v / s).collect()
}

/// Per level `R`, points of the set with `R <= |x| <= 2R`, blown up at infinity.
pub fn blowup_cloud(scene: &Scene, levels: &[f64], per_level: usize, seed: u64) -> Result<Vec<BlowupPoint>> {
    cloud(scene, None, levels, per_level, seed)
}

/// Per level `r`, points with `r <= |x - p| <= 2r`, as `((x-p)/|x-p|, |x-p|)`.
pub fn blowup_cloud_at(scene: &Scene, p: &[f64], levels: &[f64], per_level: usize, seed: u64) -> Result<Vec<BlowupPoint>> {
    cloud(scene, Some(p), levels, per_level, seed)
}

fn cloud(scene: &Scene, p: Option<&[f64]>, levels: &[f64], per_level: usize, seed: u64) -> Result<Vec<BlowupPoint>> {
    if levels.len() < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 levels, got {}", levels.len())));
    }
    if levels.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidArgument(format!("levels must be positive, got {levels:?}")));
    }
    let center = p.map_or_else(|| vec![0.0; scene.ambient_dim], <[f64]>::to_vec);
    let per: Vec<Result<Vec<BlowupPoint>>> = levels
        .par_iter()
        .enumerate()
        .map(|(i, &r)| {
            let target = Target::Annulus {
                center: center.clone(),
                lo: r,
                hi: 2.0 * r,
            };
            let set = sample_target(scene, &target, per_level, level_seed(seed, i))?;
            Ok(set
                .samples
                .into_iter()
                .filter_map(|s| {
                    let rel = linalg::sub(&s.point, &center);
                    let (u, inv) = blow_up(&rel)?;
                    Some(BlowupPoint {
                        direction: u,
                        scale: if p.is_some() { 1.0 / inv } else { inv },
                        source: s.point,
                        level: i,
                    })
                })
                .collect())
        })
        .collect();
    let mut out = Vec::new();
    for level in per {
        out.extend(level?);
    }
    Ok(out)
}

fn level_seed(seed: u64, level: usize) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(level as u64 + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subspace {
    pub dim: usize,
    pub basis: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeEstimate {
    /// Extrapolated unit directions, one per cluster.
    pub directions: Vec<Vec<f64>>,
    pub fitted_subspace: Option<Subspace>,
    /// Distance of the limit directions to the fitted subspace plus the extrapolation residual.
    pub max_residual: f64,
    pub extrapolation_residual: f64,
    pub is_linear_subspace: bool,
    pub two_sided: bool,
    pub levels: Vec<f64>,
    pub samples: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeOptions {
    pub levels: Vec<f64>,
    pub per_level: usize,
    pub tol: f64,
    pub seed: u64,
}

impl ConeOptions {
    pub fn at_infinity(tol: f64, seed: u64) -> ConeOptions {
        ConeOptions {
            levels: vec![1e2, 1e4, 1e6],
            per_level: 3000,
            tol,
            seed,
        }
    }

    pub fn at_point(tol: f64, seed: u64) -> ConeOptions {
        ConeOptions {
            levels: vec![1e-1, 1e-2, 1e-3],
            per_level: 3000,
            tol,
            seed,
        }
    }
}

pub fn tangent_cone_infinity(scene: &Scene, opts: &ConeOptions) -> Result<ConeEstimate> {
    let mut levels = opts.levels.clone();
    levels.sort_by(f64::total_cmp);
    let cloud = blowup_cloud(scene, &levels, opts.per_level, opts.seed)?;
    let x: Vec<f64> = levels.iter().map(|r| 1.0 / r).collect();
    estimate_cone(scene, &cloud, &levels, &x, opts.tol)
}

pub fn tangent_cone_at_point(scene: &Scene, p: &[f64], opts: &ConeOptions) -> Result<ConeEstimate> {
    crate::asymptotics::ensure_on_set(scene, p)?;
    let mut levels = opts.levels.clone();
    levels.sort_by(|a, b| b.total_cmp(a));
    let cloud = blowup_cloud_at(scene, p, &levels, opts.per_level, opts.seed)?;
    estimate_cone(scene, &cloud, &levels, &levels, opts.tol)
}

/// `levels` are ordered towards the limit and `x` is the extrapolation variable,
/// vanishing in the limit.
fn estimate_cone(scene: &Scene, cloud: &[BlowupPoint], levels: &[f64], x: &[f64], tol: f64) -> Result<ConeEstimate> {
    let n = scene.dim;
    let m = scene.ambient_dim;
    if cloud.len() < 8 * n {
        return Err(Error::InsufficientClusters {
            found: cloud.len(),
            needed: 8 * n,
        });
    }
    let top = levels.len() - 1;
    let top_dirs: Vec<&[f64]> = cloud
        .iter()
        .filter(|b| b.level == top)
        .map(|b| b.direction.as_slice())
        .collect();
    if top_dirs.is_empty() {
        return Err(Error::InsufficientClusters { found: 0, needed: 8 * n });
    }
    let centers = epsilon_net(&top_dirs, tol / 2.0);

    // per cluster and level: sum of directions and count
    let mut sums = vec![vec![vec![0.0; m]; levels.len()]; centers.len()];
    let mut counts = vec![vec![0usize; levels.len()]; centers.len()];
    for b in cloud {
        let c = nearest(&centers, &b.direction);
        for (s, v) in sums[c][b.level].iter_mut().zip(&b.direction) {
            *s += v;
        }
        counts[c][b.level] += 1;
    }
    let means: Vec<Vec<Option<Vec<f64>>>> = (0..centers.len())
        .map(|c| {
            (0..levels.len())
                .map(|l| (counts[c][l] > 0).then(|| sums[c][l].iter().map(|s| s / counts[c][l] as f64).collect()))
                .collect()
        })
        .collect();

    // Richardson: mean(x) = limit + slope * x, per coordinate
    let limits: Vec<Vec<f64>> = means
        .iter()
        .zip(&centers)
        .map(|(ms, center)| {
            let pts: Vec<(f64, &Vec<f64>)> = ms.iter().zip(x).filter_map(|(m, &x)| m.as_ref().map(|m| (x, m))).collect();
            let raw = if pts.len() >= 2 {
                (0..m)
                    .map(|k| {
                        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
                        let ys: Vec<f64> = pts.iter().map(|p| p.1[k]).collect();
                        line_fit(&xs, &ys).0
                    })
                    .collect()
            } else {
                center.clone()
            };
            linalg::normalized(&raw).unwrap_or_else(|| center.clone())
        })
        .collect();

    // smallest subspace holding the limits within tol
    let mut fit = fit_subspace(&limits, m);
    let mut dim = m;
    for k in 1..=m {
        let f = fit_subspace(&limits, k);
        if f.max_residual <= tol {
            fit = f;
            dim = k;
            break;
        }
    }

    // extrapolated distance of each cluster to the subspace
    let mut extrapolation_residual: f64 = 0.0;
    for ms in &means {
        let pts: Vec<(f64, f64)> = ms
            .iter()
            .zip(x)
            .filter_map(|(m, &x)| {
                let u = linalg::normalized(m.as_ref()?)?;
                Some((x, distance_to_span(&u, &fit.basis)))
            })
            .collect();
        if pts.len() >= 3 {
            let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let (a, b) = line_fit(&xs, &ys);
            let r = xs.iter().zip(&ys).map(|(x, y)| (y - a - b * x).abs()).fold(0.0, f64::max);
            extrapolation_residual = extrapolation_residual.max(r);
        }
    }
    let max_residual = fit.max_residual + extrapolation_residual;
    // antipodal symmetry of the directions projected onto the subspace
    let projected: Vec<Vec<f64>> = limits
        .iter()
        .filter_map(|u| {
            let mut v = vec![0.0; m];
            for b in &fit.basis {
                let c = linalg::dot(u, b);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi += c * bi;
                }
            }
            linalg::normalized(&v)
        })
        .collect();
    let two_sided = projected.len() == limits.len()
        && projected.iter().all(|u| {
            projected
                .iter()
                .any(|v| u.iter().zip(v).map(|(a, b)| (a + b) * (a + b)).sum::<f64>().sqrt() <= tol)
        });
    let is_linear_subspace = dim == n && max_residual <= tol && two_sided;
    Ok(ConeEstimate {
        directions: limits,
        fitted_subspace: Some(Subspace { dim, basis: fit.basis }),
        max_residual,
        extrapolation_residual,
        is_linear_subspace,
        two_sided,
        levels: levels.to_vec(),
        samples: cloud.len(),
        tol,
    })
}

/// Greedy net: every direction is within `eps` (chordal) of some center.
pub fn epsilon_net(dirs: &[&[f64]], eps: f64) -> Vec<Vec<f64>> {
    let mut centers: Vec<Vec<f64>> = Vec::new();
    for d in dirs {
        if !centers.iter().any(|c| linalg::dist(c, d) <= eps) {
            centers.push(d.to_vec());
        }
    }
    centers
}

fn nearest(centers: &[Vec<f64>], u: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centers.iter().enumerate() {
        let d = linalg::dist(c, u);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
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

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaneLimitEstimate {
    pub levels: Vec<f64>,
    pub frames_per_level: Vec<usize>,
    /// Points where the Jacobian was singular.
    pub skipped: usize,
    /// Largest principal angle of a frame to the mean plane, per level.
    pub spread: Vec<f64>,
    /// Largest pairwise principal angle at the top level.
    pub top_pairwise: f64,
    /// Representatives of the plane clusters at the top level.
    pub clusters: Vec<Vec<Vec<f64>>>,
    pub is_single_plane: bool,
    pub basis: Option<Vec<Vec<f64>>>,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalOptions {
    pub levels: Vec<f64>,
    pub per_level: usize,
    pub tol: f64,
    pub seed: u64,
}

impl NormalOptions {
    pub fn new(tol: f64, seed: u64) -> NormalOptions {
        NormalOptions {
            levels: vec![1e2, 1e4, 1e6],
            per_level: 400,
            tol,
            seed,
        }
    }
}

/// Tangent planes at sampled far points, clustered by principal angle.
pub fn normal_set_infinity(scene: &Scene, opts: &NormalOptions) -> Result<PlaneLimitEstimate> {
    let Body::Charts(charts) = &scene.body else {
        return Err(Error::Unsupported("limit tangent planes need differentiable charts".into()));
    };
    let mut levels = opts.levels.clone();
    levels.sort_by(f64::total_cmp);
    if levels.len() < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 levels, got {}", levels.len())));
    }
    let (m, n) = (scene.ambient_dim, scene.dim);
    let per: Vec<Result<(Vec<DMatrix<f64>>, usize)>> = levels
        .par_iter()
        .enumerate()
        .map(|(i, &r)| {
            let target = Target::Annulus {
                center: vec![0.0; m],
                lo: r,
                hi: 2.0 * r,
            };
            let set = sample_target(scene, &target, opts.per_level, level_seed(opts.seed, i))?;
            let mut frames = Vec::new();
            let mut skipped = 0;
            for s in &set.samples {
                let chart = &charts[s.chart];
                let mut jet = chart.jet_buffer();
                match chart.jet(&s.param, &mut jet).ok().and_then(|_| orthonormal_columns(&jet.jac, m, n)) {
                    Some(q) => frames.push(q),
                    None => skipped += 1,
                }
            }
            Ok((frames, skipped))
        })
        .collect();
    let mut frames_per_level = Vec::new();
    let mut all = Vec::new();
    let mut skipped = 0;
    for level in per {
        let (f, s) = level?;
        frames_per_level.push(f.len());
        skipped += s;
        all.push(f);
    }
    let mut spread = Vec::new();
    let mut mean_planes = Vec::new();
    for frames in &all {
        if frames.is_empty() {
            spread.push(f64::NAN);
            mean_planes.push(None);
            continue;
        }
        let mean = mean_plane(frames, n);
        spread.push(frames.iter().map(|q| principal_angle(&mean, q)).fold(0.0, f64::max));
        mean_planes.push(Some(mean));
    }
    let top = all.last().expect("at least 3 levels");
    let mut top_pairwise: f64 = 0.0;
    for i in 0..top.len() {
        for j in i + 1..top.len() {
            top_pairwise = top_pairwise.max(principal_angle(&top[i], &top[j]));
        }
    }
    let mut clusters: Vec<&DMatrix<f64>> = Vec::new();
    for q in top {
        if !clusters.iter().any(|c| principal_angle(c, q) <= opts.tol) {
            clusters.push(q);
        }
    }
    let first = spread[0];
    let last = *spread.last().unwrap();
    let settled = last.is_finite() && (!first.is_finite() || last <= first + opts.tol);
    let is_single_plane = !top.is_empty() && top_pairwise <= opts.tol && settled;
    let basis = if is_single_plane {
        mean_planes.last().cloned().flatten().map(|q| linalg::columns(&q))
    } else {
        None
    };
    Ok(PlaneLimitEstimate {
        levels,
        frames_per_level,
        skipped,
        spread,
        top_pairwise,
        clusters: clusters.iter().map(|q| linalg::columns(q)).collect(),
        is_single_plane,
        basis,
        tol: opts.tol,
    })
}

/// Plane spanned by the top eigenvectors of the averaged projector.
fn mean_plane(frames: &[DMatrix<f64>], n: usize) -> DMatrix<f64> {
    let rows: Vec<Vec<f64>> = frames.iter().flat_map(linalg::columns).collect();
    let (dirs, _) = linalg::principal_directions(&rows);
    linalg::from_columns(&dirs[..n])
}

/// Largest distance of a direction to the span of `basis`.
pub fn max_distance_to_plane(dirs: &[Vec<f64>], basis: &[Vec<f64>]) -> f64 {
    dirs.iter().map(|u| distance_to_span(u, basis)).fold(0.0, f64::max)
}
