//! Area-weighted rejection sampling of points of the set inside a target region.

use super::cover::build_cover;
use super::project::nearest_on_chart;
use super::region::Target;
use super::{Body, Scene};
use crate::error::{Error, Result};
use crate::linalg::norm;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Cells allowed in a sampling cover.
const COVER_BUDGET: usize = 100_000;
/// Minimum acceptance rate before sampling gives up.
pub const MIN_ACCEPTANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub chart: usize,
    pub param: Vec<f64>,
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct SampleSet {
    pub samples: Vec<Sample>,
    pub attempts: u64,
    pub acceptance: f64,
    /// Set when fewer points than requested were produced.
    pub warning: bool,
    /// Accepted points whose area element exceeded the cell envelope.
    pub envelope_violations: u64,
}

impl SampleSet {
    pub fn points(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.point.clone()).collect()
    }
}

/// Points of the set with `r_lo <= |x| <= r_hi`.
pub fn sample_points(scene: &Scene, r_lo: f64, r_hi: f64, count: usize, seed: u64) -> Result<SampleSet> {
    if !(r_lo >= 0.0 && r_lo < r_hi) || count == 0 {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= r_lo < r_hi and count >= 1, got [{r_lo}, {r_hi}] and {count}"
        )));
    }
    let target = Target::Annulus {
        center: vec![0.0; scene.ambient_dim],
        lo: r_lo,
        hi: r_hi,
    };
    sample_target(scene, &target, count, seed)
}

/// `count` points of the set inside `target`, distributed by Hausdorff measure.
pub fn sample_target(scene: &Scene, target: &Target, count: usize, seed: u64) -> Result<SampleSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match &scene.body {
        Body::Staircase(st) => {
            let lower = match target {
                Target::Annulus { center, lo, .. } if norm(center) == 0.0 => *lo,
                Target::ConeShell { lo, .. } => *lo,
                _ => 0.0,
            };
            let pieces: Vec<(f64, f64, f64)> = st
                .segments_until(target.extent())
                .iter()
                .filter_map(|s| s.x_range_in_annulus(lower, target.extent()).map(|(a, b)| (a, b, s.height)))
                .collect();
            if pieces.is_empty() {
                return Err(Error::EmptyIntersection("no staircase segment reaches the target".into()));
            }
            let pick = WeightedIndex::new(pieces.iter().map(|p| p.1 - p.0))
                .map_err(|e| Error::EmptyIntersection(e.to_string()))?;
            let mut out = SampleSet::default();
            let budget = (count as u64).saturating_mul(100).max(10_000);
            while out.samples.len() < count && out.attempts < budget {
                out.attempts += 1;
                let (a, b, h) = pieces[pick.sample(&mut rng)];
                let x = a + rng.random::<f64>() * (b - a);
                let point = vec![x, h];
                if target.contains(&point) {
                    out.samples.push(Sample {
                        chart: 0,
                        param: vec![x],
                        point,
                    });
                }
            }
            finish(out, count)
        }
        Body::Charts(charts) => {
            let cover = build_cover(scene, target, COVER_BUDGET)?;
            if cover.is_empty() {
                return Err(Error::EmptyIntersection(format!(
                    "chart domains do not reach the target (extent {})",
                    target.extent()
                )));
            }
            let weights: Vec<f64> = cover.iter().map(|c| c.weight() * charts[c.chart].weight).collect();
            let pick = WeightedIndex::new(&weights).map_err(|e| Error::EmptyIntersection(e.to_string()))?;
            let mut jets: Vec<_> = charts.iter().map(|c| c.jet_buffer()).collect();
            let d = scene.dim;
            let mut u = vec![0.0; d];
            let mut t = vec![0.0; d];
            let mut out = SampleSet::default();
            let budget = (count as u64).saturating_mul((1.0 / MIN_ACCEPTANCE) as u64);
            while out.samples.len() < count && out.attempts < budget {
                out.attempts += 1;
                if out.attempts >= 100_000 && (out.samples.len() as f64) < MIN_ACCEPTANCE * out.attempts as f64 {
                    break;
                }
                let cc = &cover[pick.sample(&mut rng)];
                for v in t.iter_mut() {
                    *v = rng.random::<f64>();
                }
                let accept_draw: f64 = rng.random();
                cc.cell.at(&t, &mut u);
                let chart = &charts[cc.chart];
                if !chart.domain.contains(&u) {
                    continue;
                }
                let jet = &mut jets[cc.chart];
                if chart.jet(&u, jet).is_err() || !target.contains(&jet.values) {
                    continue;
                }
                let a = chart.area_element(jet);
                if a > cc.bound {
                    out.envelope_violations += 1;
                }
                if accept_draw * cc.bound < a {
                    out.samples.push(Sample {
                        chart: cc.chart,
                        param: u.clone(),
                        point: jet.values.clone(),
                    });
                }
            }
            if out.envelope_violations > 0 {
                log::warn!(
                    "{} samples exceeded their cell envelope; distribution slightly biased",
                    out.envelope_violations
                );
            }
            finish(out, count)
        }
    }
}

fn finish(mut out: SampleSet, count: usize) -> Result<SampleSet> {
    out.acceptance = out.samples.len() as f64 / out.attempts.max(1) as f64;
    out.warning = out.samples.len() < count;
    if out.warning {
        log::warn!(
            "sampling produced {} of {} points (acceptance {:.2e})",
            out.samples.len(),
            count,
            out.acceptance
        );
    }
    Ok(out)
}

/// Fraction of sampled points of each chart that also lie on another chart,
/// within `1e-9` relative distance. Used to spot-check disjoint scenes.
pub fn collision_rate(scene: &Scene, radius: f64, per_chart: usize, seed: u64) -> Result<f64> {
    let charts = scene.charts();
    if charts.len() < 2 {
        return Ok(0.0);
    }
    let mut hits = 0usize;
    let mut total = 0usize;
    let target = Target::Ball {
        center: vec![0.0; scene.ambient_dim],
        radius,
    };
    let set = sample_target(scene, &target, per_chart * charts.len(), seed)?;
    for s in &set.samples {
        total += 1;
        let tol = 1e-9 * norm(&s.point).max(1.0);
        for (ci, c) in charts.iter().enumerate() {
            if ci == s.chart {
                continue;
            }
            if let Some(p) = nearest_on_chart(c, &s.point, &target)? {
                if p.distance < tol {
                    hits += 1;
                    break;
                }
            }
        }
    }
    Ok(hits as f64 / total.max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::builtin_scene;

    #[test]
    fn catenoid_points_satisfy_equation() {
        let s = builtin_scene("catenoid").unwrap();
        let set = sample_points(&s, 10.0, 20.0, 500, 7).unwrap();
        assert_eq!(set.samples.len(), 500);
        for p in set.points() {
            let r = norm(&p);
            assert!((10.0..=20.0).contains(&r));
            let c2 = p[2].cosh().powi(2);
            assert!((p[0] * p[0] + p[1] * p[1] - c2).abs() <= 1e-9 * c2);
        }
    }

    #[test]
    fn parabola_points_in_annulus() {
        let s = builtin_scene("parabola").unwrap();
        let set = sample_points(&s, 5.0, 10.0, 300, 1).unwrap();
        for p in set.points() {
            assert!((p[1] - p[0] * p[0]).abs() <= 1e-9 * p[1].abs());
            let r = norm(&p);
            assert!((5.0..=10.0).contains(&r));
        }
    }

    #[test]
    fn staircase_heights() {
        let s = builtin_scene("staircase(1)").unwrap();
        let set = sample_points(&s, 0.0, 7.0, 400, 3).unwrap();
        assert_eq!(set.samples.len(), 400);
        for p in set.points() {
            assert!([0.0, 0.5, -0.5].contains(&p[1]));
            assert!(norm(&p) <= 7.0);
        }
    }

    #[test]
    fn seeds_reproduce_bitwise() {
        let s = builtin_scene("helicoid").unwrap();
        let a = sample_points(&s, 3.0, 6.0, 200, 42).unwrap();
        let b = sample_points(&s, 3.0, 6.0, 200, 42).unwrap();
        let bits = |set: &SampleSet| -> Vec<u64> {
            set.points().iter().flatten().map(|v| v.to_bits()).collect()
        };
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn empty_annulus_is_an_error() {
        let s = builtin_scene("catenoid").unwrap();
        assert!(matches!(
            sample_points(&s, 0.0, 0.5, 10, 0),
            Err(Error::EmptyIntersection(_))
        ));
    }
}
