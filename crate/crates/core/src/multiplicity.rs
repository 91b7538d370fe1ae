//! Sheet counts in conical shells at infinity, the Kurdyka-Raby sum and the
//! density of complex algebraic graphs.

use crate::asymptotics::{density_at_infinity, LimitVerdict};
use crate::cones::{tangent_cone_infinity, ConeEstimate, ConeOptions};
use crate::error::{Error, Result};
use crate::linalg::{self, dist};
use crate::measure::unit_ball_volume;
use crate::scene::{sample_target, Scene, Target};
use petgraph::unionfind::UnionFind;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Components holding fewer than this fraction of the shell samples are treated
/// as sampling debris.
pub const MIN_COMPONENT_FRACTION: f64 = 0.02;

/// `{w : angle(w, v) < asin(eta), lo < |w| < hi}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConicalShell {
    pub direction: Vec<f64>,
    pub eta: f64,
    pub lo: f64,
    pub hi: f64,
}

impl ConicalShell {
    pub fn target(&self) -> Target {
        Target::ConeShell {
            axis: self.direction.clone(),
            eta: self.eta,
            lo: self.lo,
            hi: self.hi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandCount {
    pub eta: f64,
    pub radius: f64,
    pub samples: usize,
    pub k: usize,
    /// Components below the size cut-off.
    pub debris: usize,
    /// A few points of each counted component.
    pub clusters: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplicityReport {
    pub direction: Vec<f64>,
    pub eta: f64,
    pub r: f64,
    pub k: usize,
    pub bands: Vec<BandCount>,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicityOptions {
    pub eta: f64,
    /// Starting inner radius; doubled until the count is stable.
    pub r: f64,
    pub r_max: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for MultiplicityOptions {
    fn default() -> Self {
        MultiplicityOptions {
            eta: 0.2,
            r: 16.0,
            r_max: 4096.0,
            samples: 4000,
            seed: 0,
        }
    }
}

/// Sheet count in shells around `v` at radii `R, 2R, 4R`, for `eta` and `eta/2`.
pub fn relative_multiplicity(scene: &Scene, v: &[f64], eta: f64, r: f64, samples: usize, seed: u64) -> Result<MultiplicityReport> {
    if !(eta > 0.0 && eta < 0.5) {
        return Err(Error::InvalidArgument(format!("need 0 < eta < 1/2, got {eta}")));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("need R > 0, got {r}")));
    }
    let v = linalg::normalized(v).ok_or_else(|| Error::InvalidArgument("direction must be nonzero".into()))?;
    if v.len() != scene.ambient_dim {
        return Err(Error::InvalidArgument(format!(
            "direction has {} coordinates, ambient dimension is {}",
            v.len(),
            scene.ambient_dim
        )));
    }
    let jobs: Vec<(f64, f64)> = [eta, eta / 2.0]
        .iter()
        .flat_map(|&e| [r, 2.0 * r, 4.0 * r].map(|rho| (e, rho)))
        .collect();
    let bands: Vec<Result<BandCount>> = jobs
        .par_iter()
        .enumerate()
        .map(|(i, &(e, rho))| {
            let shell = ConicalShell {
                direction: v.clone(),
                eta: e,
                lo: rho,
                hi: 2.0 * rho,
            };
            count_band(scene, &shell, samples, seed.wrapping_add(i as u64))
        })
        .collect();
    let bands = bands.into_iter().collect::<Result<Vec<_>>>()?;
    if bands[..3].iter().all(|b| b.samples == 0) {
        return Err(Error::EmptyShell);
    }
    let k = bands[2].k;
    let stable = bands.iter().all(|b| b.samples > 0 && b.k == k);
    Ok(MultiplicityReport {
        direction: v,
        eta,
        r,
        k,
        bands,
        stable,
    })
}

/// [`relative_multiplicity`] with `R` doubled from `opts.r` until the count is stable.
pub fn multiplicity_auto(scene: &Scene, v: &[f64], opts: &MultiplicityOptions) -> Result<MultiplicityReport> {
    let mut r = opts.r;
    let mut last: Option<MultiplicityReport> = None;
    while r <= opts.r_max {
        match relative_multiplicity(scene, v, opts.eta, r, opts.samples, opts.seed) {
            Ok(rep) if rep.stable => return Ok(rep),
            Ok(rep) => last = Some(rep),
            Err(Error::EmptyShell) => {}
            Err(e) => return Err(e),
        }
        r *= 2.0;
    }
    last.ok_or(Error::EmptyShell)
}

fn count_band(scene: &Scene, shell: &ConicalShell, samples: usize, seed: u64) -> Result<BandCount> {
    let empty = || BandCount {
        eta: shell.eta,
        radius: shell.lo,
        samples: 0,
        k: 0,
        debris: 0,
        clusters: Vec::new(),
    };
    let set = match sample_target(scene, &shell.target(), samples, seed) {
        Ok(s) => s,
        Err(Error::EmptyIntersection(_)) => return Ok(empty()),
        Err(e) => return Err(e),
    };
    let points = set.points();
    if points.is_empty() {
        return Ok(empty());
    }
    let eps = shell.eta * shell.lo / 4.0;
    let labels = components(&points, eps);
    let mut sizes = std::collections::BTreeMap::<usize, Vec<usize>>::new();
    for (i, l) in labels.iter().enumerate() {
        sizes.entry(*l).or_default().push(i);
    }
    let cut = (MIN_COMPONENT_FRACTION * points.len() as f64).ceil() as usize;
    let mut clusters: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut debris = 0;
    for members in sizes.values() {
        if members.len() >= cut.max(1) {
            clusters.push(members.iter().take(3).map(|&i| points[i].clone()).collect());
        } else {
            debris += 1;
        }
    }
    Ok(BandCount {
        eta: shell.eta,
        radius: shell.lo,
        samples: points.len(),
        k: clusters.len(),
        debris,
        clusters,
    })
}

/// Connected components of the graph joining points closer than `eps`.
pub fn components(points: &[Vec<f64>], eps: f64) -> Vec<usize> {
    let n = points.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]).then(a.cmp(&b)));
    let mut uf = UnionFind::<usize>::new(n);
    for (ii, &i) in order.iter().enumerate() {
        for &j in &order[ii + 1..] {
            if points[j][0] - points[i][0] > eps {
                break;
            }
            if dist(&points[i], &points[j]) < eps {
                uf.union(i, j);
            }
        }
    }
    uf.into_labeling()
}

/// Up to `count` cone directions away from the ends of the link, chosen
/// deterministically from `seed`.
pub fn simple_directions(scene: &Scene, cone: &ConeEstimate, count: usize, seed: u64) -> Vec<Vec<f64>> {
    simple_among(scene.dim, &cone.directions, 2.0 * cone.tol, count, seed)
}

fn simple_among(n: usize, dirs: &[Vec<f64>], tube: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut simple: Vec<Vec<f64>> = dirs
        .iter()
        .filter(|u| {
            if n <= 1 {
                return true;
            }
            // ends and branch points of the link have lopsided neighborhoods
            let near: Vec<&Vec<f64>> = dirs.iter().filter(|w| dist(w, u) <= tube).collect();
            if near.len() < 3 {
                return false;
            }
            let m = u.len();
            let mut offset = vec![0.0; m];
            for w in &near {
                for k in 0..m {
                    offset[k] += (w[k] - u[k]) / near.len() as f64;
                }
            }
            linalg::norm(&offset) <= 0.3 * tube
        })
        .cloned()
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simple.shuffle(&mut rng);
    simple.truncate(count);
    simple
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeComponent {
    pub id: usize,
    pub directions: usize,
    /// Median sheet count over the sampled directions.
    pub k: usize,
    pub k_samples: Vec<usize>,
    pub stable: bool,
    /// `H^n(C_j ∩ B_1)`.
    pub cone_slice_measure: f64,
    pub slice_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KrReport {
    pub lhs: LimitVerdict,
    pub components: Vec<ConeComponent>,
    pub rhs: Option<f64>,
    pub rhs_err: Option<f64>,
    pub agree: bool,
    /// Set when a sub-step failed; the report is partial.
    pub error: Option<String>,
}

/// Compares the density at infinity with `sum_j k_j H^n(C_j ∩ B_1) / mu_n`.
pub fn kr_check(scene: &Scene, tol: f64, seed: u64) -> Result<KrReport> {
    let lhs = density_at_infinity(scene, tol)?.verdict;
    let mut report = KrReport {
        lhs,
        components: Vec::new(),
        rhs: None,
        rhs_err: None,
        agree: false,
        error: None,
    };
    match report.lhs {
        LimitVerdict::NoLimit { .. } => {
            report.error = Some("density at infinity has no limit".into());
            return Ok(report);
        }
        // sheet counts grow without bound too; the shells would never stabilise
        LimitVerdict::Diverges { .. } => {
            report.error = Some("density at infinity diverges".into());
            return Ok(report);
        }
        _ => {}
    }
    let cone = match tangent_cone_infinity(scene, &ConeOptions::at_infinity(0.05, seed)) {
        Ok(c) => c,
        Err(e) => {
            report.error = Some(e.to_string());
            return Ok(report);
        }
    };
    let parts = link_components(&cone.directions, 0.25);
    let mu = unit_ball_volume(scene.dim);
    let mut rhs = 0.0;
    let mut rhs_err = 0.0;
    for (id, dirs) in parts.iter().enumerate() {
        let (slice, slice_err) = match cone_slice_measure(scene.dim, dirs) {
            Ok(s) => s,
            Err(e) => {
                report.error = Some(e.to_string());
                return Ok(report);
            }
        };
        let picks = simple_among(scene.dim, dirs, 2.0 * cone.tol, 5, seed.wrapping_add(id as u64));
        let picks = if picks.is_empty() { vec![dirs[0].clone()] } else { picks };
        let mut ks = Vec::new();
        let mut stable = true;
        for v in &picks {
            match multiplicity_auto(
                scene,
                v,
                &MultiplicityOptions {
                    seed,
                    ..Default::default()
                },
            ) {
                Ok(r) => {
                    stable &= r.stable;
                    ks.push(r.k);
                }
                Err(e) => {
                    report.error = Some(e.to_string());
                    return Ok(report);
                }
            }
        }
        let mut sorted = ks.clone();
        sorted.sort_unstable();
        let k = sorted[sorted.len() / 2];
        stable &= sorted.iter().all(|&x| x == k);
        rhs += k as f64 * slice / mu;
        rhs_err += k as f64 * slice_err / mu;
        report.components.push(ConeComponent {
            id,
            directions: dirs.len(),
            k,
            k_samples: ks,
            stable,
            cone_slice_measure: slice,
            slice_err,
        });
    }
    report.rhs = Some(rhs);
    report.rhs_err = Some(rhs_err);
    if let LimitVerdict::Converges { value, err } = report.lhs {
        report.agree = (value - rhs).abs() <= 3.0 * (err + rhs_err);
    }
    Ok(report)
}

/// Groups directions joined by chords shorter than `eps`.
pub fn link_components(dirs: &[Vec<f64>], eps: f64) -> Vec<Vec<Vec<f64>>> {
    let labels = components(dirs, eps);
    let mut groups = std::collections::BTreeMap::<usize, Vec<Vec<f64>>>::new();
    for (d, l) in dirs.iter().zip(labels) {
        groups.entry(l).or_default().push(d.clone());
    }
    groups.into_values().collect()
}

/// `H^n` of the cone over a link component inside the unit ball, `H^(n-1)(link)/n`,
/// with an error from halving the link sampling.
pub fn cone_slice_measure(n: usize, dirs: &[Vec<f64>]) -> Result<(f64, f64)> {
    match n {
        // one ray per tight cluster of directions
        1 => Ok((1.0, 0.0)),
        2 => {
            let (full, half) = link_length(dirs);
            Ok((full / 2.0, (full - half).abs() / 2.0))
        }
        _ => Err(Error::Unsupported(format!("cone slice measure for dimension {n}"))),
    }
}

/// Length of a link curve by ordering its points by angle in their principal plane.
/// Returns the polygon length using all points and using every other point.
fn link_length(dirs: &[Vec<f64>]) -> (f64, f64) {
    if dirs.len() < 3 {
        return (0.0, 0.0);
    }
    let m = dirs[0].len();
    let mut mean = vec![0.0; m];
    for d in dirs {
        for k in 0..m {
            mean[k] += d[k] / dirs.len() as f64;
        }
    }
    let centered: Vec<Vec<f64>> = dirs.iter().map(|d| linalg::sub(d, &mean)).collect();
    let (axes, _) = linalg::principal_directions(&centered);
    let mut ordered: Vec<(f64, &Vec<f64>)> = centered
        .iter()
        .zip(dirs)
        .map(|(c, d)| (linalg::dot(c, &axes[1]).atan2(linalg::dot(c, &axes[0])), d))
        .collect();
    ordered.sort_by(|a, b| a.0.total_cmp(&b.0));
    // open arc if some angular gap is much larger than typical
    let gaps: Vec<f64> = (0..ordered.len())
        .map(|i| {
            let next = ordered[(i + 1) % ordered.len()].0 + if i + 1 == ordered.len() { std::f64::consts::TAU } else { 0.0 };
            next - ordered[i].0
        })
        .collect();
    let typical = std::f64::consts::TAU / ordered.len() as f64;
    let (widest, widest_gap) = gaps
        .iter()
        .enumerate()
        .fold((0, 0.0), |acc, (i, &g)| if g > acc.1 { (i, g) } else { acc });
    let closed = widest_gap < 10.0 * typical;
    let start = if closed { 0 } else { (widest + 1) % ordered.len() };
    let seq: Vec<&Vec<f64>> = (0..ordered.len()).map(|i| ordered[(start + i) % ordered.len()].1).collect();
    let length = |step: usize| {
        let idx: Vec<usize> = (0..seq.len()).step_by(step).collect();
        let mut total = 0.0;
        for w in idx.windows(2) {
            total += dist(seq[w[0]], seq[w[1]]);
        }
        if closed {
            total += dist(seq[*idx.last().unwrap()], seq[0]);
        } else if *idx.last().unwrap() != seq.len() - 1 {
            total += dist(seq[*idx.last().unwrap()], seq[seq.len() - 1]);
        }
        total
    };
    (length(1), length(2))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeReport {
    pub theta_inf: LimitVerdict,
    pub declared_degree: u32,
    pub matches_degree: bool,
}

/// Compares the density at infinity of a complex algebraic graph with its degree.
pub fn degree_density_check(scene: &Scene, declared_degree: u32, tol: f64) -> Result<DegreeReport> {
    let verdict = density_at_infinity(scene, 1e-3)?.verdict;
    let matches_degree = match &verdict {
        LimitVerdict::Converges { value, err } => (value - declared_degree as f64).abs() <= tol + err,
        _ => false,
    };
    Ok(DegreeReport {
        theta_inf: verdict,
        declared_degree,
        matches_degree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(k: usize, z: f64) -> Vec<Vec<f64>> {
        let rho = (1.0 - z * z).sqrt();
        (0..k)
            .map(|i| {
                let a = i as f64 * std::f64::consts::TAU / k as f64;
                vec![rho * a.cos(), rho * a.sin(), z]
            })
            .collect()
    }

    #[test]
    fn components_split_far_groups() {
        let mut pts = circle(100, 0.7);
        pts.extend(circle(100, -0.7));
        let parts = link_components(&pts, 0.25);
        assert_eq!(parts.len(), 2);
    }

    #[test]
    fn link_length_of_circles() {
        let (full, half) = link_length(&circle(400, 0.0));
        assert!((full - std::f64::consts::TAU).abs() < 1e-3);
        assert!((full - half).abs() < 1e-3);
        let z = 0.5f64.sqrt();
        let (full, _) = link_length(&circle(400, z));
        assert!((full - std::f64::consts::TAU * z).abs() < 1e-3);
    }

    #[test]
    fn open_arc_is_not_closed() {
        let arc: Vec<Vec<f64>> = (0..100)
            .map(|i| {
                let a = i as f64 * 0.01;
                vec![a.cos(), a.sin(), 0.0]
            })
            .collect();
        let (full, _) = link_length(&arc);
        assert!((full - 0.99).abs() < 1e-3);
    }

    #[test]
    fn ends_of_an_arc_are_not_simple() {
        let arc: Vec<Vec<f64>> = (0..101)
            .map(|i| {
                let a = i as f64 * 0.01;
                vec![a.cos(), a.sin(), 0.0]
            })
            .collect();
        let picks = simple_among(2, &arc, 0.1, 200, 0);
        assert!(picks.len() < arc.len());
        assert!(!picks.contains(&arc[0]));
        assert!(!picks.contains(&arc[100]));
        assert!(picks.contains(&arc[50]));
    }
}
