//! Parameter-space domains and ambient-space query shapes.

use crate::linalg::{dist, norm};

/// Outcome of testing a box (or an image ball) against a set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Overlap {
    Inside,
    Outside,
    Straddle,
}

impl Overlap {
    /// Intersection of two classifications.
    pub fn and(self, other: Overlap) -> Overlap {
        match (self, other) {
            (Overlap::Outside, _) | (_, Overlap::Outside) => Overlap::Outside,
            (Overlap::Inside, Overlap::Inside) => Overlap::Inside,
            _ => Overlap::Straddle,
        }
    }
}

/// Chart domain in parameter space.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Rect { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    BallComplement { center: Vec<f64>, radius: f64 },
    Intersection(Vec<Region>),
}

impl Region {
    pub fn dim(&self) -> usize {
        match self {
            Region::Rect { lo, .. } => lo.len(),
            Region::Ball { center, .. } | Region::BallComplement { center, .. } => center.len(),
            Region::Intersection(parts) => parts.first().map_or(0, Region::dim),
        }
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        match self {
            Region::Rect { lo, hi } => u
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(x, (l, h))| x > l && x < h),
            Region::Ball { center, radius } => dist(u, center) < *radius,
            Region::BallComplement { center, radius } => dist(u, center) > *radius,
            Region::Intersection(parts) => parts.iter().all(|p| p.contains(u)),
        }
    }

    /// Classifies the closed box `[lo, hi]` against the region.
    pub fn classify_box(&self, lo: &[f64], hi: &[f64]) -> Overlap {
        match self {
            Region::Rect { lo: rl, hi: rh } => {
                let mut inside = true;
                for i in 0..lo.len() {
                    if hi[i] <= rl[i] || lo[i] >= rh[i] {
                        return Overlap::Outside;
                    }
                    if lo[i] < rl[i] || hi[i] > rh[i] {
                        inside = false;
                    }
                }
                if inside {
                    Overlap::Inside
                } else {
                    Overlap::Straddle
                }
            }
            Region::Ball { center, radius } => {
                let (near, far) = box_distance_range(lo, hi, center);
                if far < *radius {
                    Overlap::Inside
                } else if near >= *radius {
                    Overlap::Outside
                } else {
                    Overlap::Straddle
                }
            }
            Region::BallComplement { center, radius } => {
                let (near, far) = box_distance_range(lo, hi, center);
                if near > *radius {
                    Overlap::Inside
                } else if far <= *radius {
                    Overlap::Outside
                } else {
                    Overlap::Straddle
                }
            }
            Region::Intersection(parts) => parts
                .iter()
                .fold(Overlap::Inside, |acc, p| acc.and(p.classify_box(lo, hi))),
        }
    }

    /// Axis-aligned bounds; unbounded sides are infinite.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim();
        match self {
            Region::Rect { lo, hi } => (lo.clone(), hi.clone()),
            Region::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            Region::BallComplement { .. } => (vec![f64::NEG_INFINITY; d], vec![f64::INFINITY; d]),
            Region::Intersection(parts) => {
                let mut lo = vec![f64::NEG_INFINITY; d];
                let mut hi = vec![f64::INFINITY; d];
                for p in parts {
                    let (pl, ph) = p.bounds();
                    for i in 0..d {
                        lo[i] = lo[i].max(pl[i]);
                        hi[i] = hi[i].min(ph[i]);
                    }
                }
                (lo, hi)
            }
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            Region::Rect { lo, hi } => {
                if lo.len() != hi.len() {
                    return Err("rectangle bounds have different lengths".into());
                }
                for (l, h) in lo.iter().zip(hi) {
                    if l.is_nan() || h.is_nan() || l >= h {
                        return Err(format!("empty interval ({l}, {h})"));
                    }
                }
                Ok(())
            }
            Region::Ball { radius, .. } => {
                if *radius > 0.0 && radius.is_finite() {
                    Ok(())
                } else {
                    Err(format!("ball radius must be positive and finite, got {radius}"))
                }
            }
            Region::BallComplement { radius, .. } => {
                if *radius > 0.0 && radius.is_finite() {
                    Ok(())
                } else {
                    Err(format!("excluded ball radius must be positive, got {radius}"))
                }
            }
            Region::Intersection(parts) => {
                if parts.is_empty() || parts.len() > 4 {
                    return Err(format!("intersection of {} regions (1 to 4 allowed)", parts.len()));
                }
                let d = parts[0].dim();
                for p in parts {
                    if p.dim() != d {
                        return Err("regions of different dimensions intersected".into());
                    }
                    p.validate()?;
                }
                Ok(())
            }
        }
    }
}

/// Smallest and largest distance from `c` to points of the box.
fn box_distance_range(lo: &[f64], hi: &[f64], c: &[f64]) -> (f64, f64) {
    let mut near = 0.0;
    let mut far = 0.0;
    for i in 0..lo.len() {
        let n = if c[i] < lo[i] {
            lo[i] - c[i]
        } else if c[i] > hi[i] {
            c[i] - hi[i]
        } else {
            0.0
        };
        let f = (c[i] - lo[i]).abs().max((hi[i] - c[i]).abs());
        near += n * n;
        far += f * f;
    }
    (near.sqrt(), far.sqrt())
}

/// Ambient-space query set: ball, annulus or conical shell around the origin.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Ball { center: Vec<f64>, radius: f64 },
    /// `lo <= |x - center| <= hi`.
    Annulus { center: Vec<f64>, lo: f64, hi: f64 },
    /// Points `w` with `lo < |w| < hi` inside the open cone of aperture `eta` around `axis`.
    ConeShell { axis: Vec<f64>, eta: f64, lo: f64, hi: f64 },
}

impl Target {
    pub fn contains(&self, y: &[f64]) -> bool {
        match self {
            Target::Ball { center, radius } => dist(y, center) < *radius,
            Target::Annulus { center, lo, hi } => {
                let r = dist(y, center);
                r >= *lo && r <= *hi
            }
            Target::ConeShell { axis, eta, lo, hi } => {
                let r = norm(y);
                if r <= *lo || r >= *hi {
                    return false;
                }
                let c: f64 = y.iter().zip(axis).map(|(a, b)| a * b).sum::<f64>() / r;
                c > 0.0 && 1.0 - c * c < eta * eta
            }
        }
    }

    /// Classifies the ball `B(y, delta)` against the target.
    pub fn classify_ball(&self, y: &[f64], delta: f64) -> Overlap {
        match self {
            Target::Ball { center, radius } => {
                let d = dist(y, center);
                if d + delta < *radius {
                    Overlap::Inside
                } else if d - delta >= *radius {
                    Overlap::Outside
                } else {
                    Overlap::Straddle
                }
            }
            Target::Annulus { center, lo, hi } => {
                let d = dist(y, center);
                if d - delta > *hi || d + delta < *lo {
                    Overlap::Outside
                } else if d - delta >= *lo && d + delta <= *hi {
                    Overlap::Inside
                } else {
                    Overlap::Straddle
                }
            }
            Target::ConeShell { axis, eta, lo, hi } => {
                let r = norm(y);
                let radial = if r - delta > *hi || r + delta < *lo {
                    Overlap::Outside
                } else if r - delta > *lo && r + delta < *hi {
                    Overlap::Inside
                } else {
                    Overlap::Straddle
                };
                if radial == Overlap::Outside {
                    return radial;
                }
                let half = eta.asin();
                let phi = if r > 0.0 {
                    let c: f64 = y.iter().zip(axis).map(|(a, b)| a * b).sum::<f64>() / r;
                    c.clamp(-1.0, 1.0).acos()
                } else {
                    0.0
                };
                let angular = if phi < half {
                    let gap = phi - half;
                    let to_boundary = r * (-gap).min(std::f64::consts::FRAC_PI_2).sin();
                    if to_boundary > delta {
                        Overlap::Inside
                    } else {
                        Overlap::Straddle
                    }
                } else {
                    let gap = phi - half;
                    let to_cone = if gap >= std::f64::consts::FRAC_PI_2 {
                        r
                    } else {
                        r * gap.sin()
                    };
                    if to_cone > delta {
                        Overlap::Outside
                    } else {
                        Overlap::Straddle
                    }
                };
                radial.and(angular)
            }
        }
    }

    /// Radius of a ball around the origin containing the target.
    pub fn extent(&self) -> f64 {
        match self {
            Target::Ball { center, radius } => norm(center) + radius,
            Target::Annulus { center, hi, .. } => norm(center) + hi,
            Target::ConeShell { hi, .. } => *hi,
        }
    }

    /// Characteristic width used to decide how finely a cover must resolve the target.
    pub fn thickness(&self) -> f64 {
        match self {
            Target::Ball { radius, .. } => *radius,
            Target::Annulus { lo, hi, .. } => (hi - lo).max(1e-300),
            Target::ConeShell { eta, lo, hi, .. } => (hi - lo).min(eta * lo.max(1e-300)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rect_and_ball_classification() {
        let rect = Region::Rect {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 1.0],
        };
        assert_eq!(rect.classify_box(&[0.1, 0.1], &[0.2, 0.2]), Overlap::Inside);
        assert_eq!(rect.classify_box(&[0.9, 0.9], &[1.2, 1.2]), Overlap::Straddle);
        assert_eq!(rect.classify_box(&[1.1, 0.0], &[1.2, 0.5]), Overlap::Outside);

        let hole = Region::BallComplement {
            center: vec![0.0, 0.0],
            radius: 2.0,
        };
        assert_eq!(hole.classify_box(&[-0.5, -0.5], &[0.5, 0.5]), Overlap::Outside);
        assert_eq!(hole.classify_box(&[3.0, 3.0], &[4.0, 4.0]), Overlap::Inside);
        assert_eq!(hole.classify_box(&[1.0, 1.0], &[2.0, 2.0]), Overlap::Straddle);
        assert!(!hole.contains(&[1.0, 1.0]));
        assert!(hole.contains(&[2.0, 1.0]));
    }

    #[test]
    fn validation() {
        assert!(Region::BallComplement {
            center: vec![0.0],
            radius: 0.0
        }
        .validate()
        .is_err());
        assert!(Region::Rect {
            lo: vec![1.0],
            hi: vec![1.0]
        }
        .validate()
        .is_err());
        let five = Region::Intersection(vec![
            Region::Rect {
                lo: vec![0.0],
                hi: vec![1.0]
            };
            5
        ]);
        assert!(five.validate().is_err());
    }

    #[test]
    fn cone_shell_membership_is_half_angle_asin_eta() {
        let t = Target::ConeShell {
            axis: vec![1.0, 0.0],
            eta: 0.5,
            lo: 1.0,
            hi: 10.0,
        };
        // asin(0.5) = 30 degrees
        let at = |deg: f64, r: f64| vec![r * deg.to_radians().cos(), r * deg.to_radians().sin()];
        assert!(t.contains(&at(29.0, 5.0)));
        assert!(!t.contains(&at(31.0, 5.0)));
        assert!(!t.contains(&at(0.0, 0.5)));
        assert!(!t.contains(&at(180.0, 5.0)));
        assert_eq!(t.classify_ball(&at(0.0, 5.0), 0.1), Overlap::Inside);
        assert_eq!(t.classify_ball(&at(90.0, 5.0), 0.1), Overlap::Outside);
        assert_eq!(t.classify_ball(&at(30.0, 5.0), 0.1), Overlap::Straddle);
    }

    #[test]
    fn annulus_classification() {
        let t = Target::Annulus {
            center: vec![0.0, 0.0],
            lo: 2.0,
            hi: 4.0,
        };
        assert_eq!(t.classify_ball(&[3.0, 0.0], 0.5), Overlap::Inside);
        assert_eq!(t.classify_ball(&[1.0, 0.0], 0.5), Overlap::Outside);
        assert_eq!(t.classify_ball(&[4.2, 0.0], 0.5), Overlap::Straddle);
        assert_eq!(t.thickness(), 2.0);
    }
}
