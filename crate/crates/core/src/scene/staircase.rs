//! Union of horizontal segments over doubling intervals of the positive axis.
//!
//! Interval `I_j = (a_{j-1}, a_j)` has length `a1 * 2^(j-1)`. Odd `j` carry one
//! segment at height 0, even `j` carry two at heights `+1/2` and `-1/2`.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaircaseSet {
    pub a1: f64,
}

/// One horizontal segment `[x0, x1] x {height}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub x0: f64,
    pub x1: f64,
    pub height: f64,
}

impl StaircaseSet {
    pub fn new(a1: f64) -> Option<StaircaseSet> {
        (a1 > 0.0 && a1.is_finite()).then_some(StaircaseSet { a1 })
    }

    /// Right endpoint `a_j = a1 (2^j - 1)`, with `a_0 = 0`.
    pub fn endpoint(&self, j: u32) -> f64 {
        self.a1 * (2f64.powi(j as i32) - 1.0)
    }

    pub fn interval_length(&self, j: u32) -> f64 {
        self.a1 * 2f64.powi(j as i32 - 1)
    }

    /// Number of segments over interval `j`.
    pub fn copies(j: u32) -> u32 {
        if j % 2 == 1 {
            1
        } else {
            2
        }
    }

    /// All segments meeting `[0, x_max]`.
    pub fn segments_until(&self, x_max: f64) -> Vec<Segment> {
        let mut out = Vec::new();
        let mut j = 1;
        loop {
            let x0 = self.endpoint(j - 1);
            if x0 > x_max {
                break;
            }
            let x1 = self.endpoint(j);
            if j % 2 == 1 {
                out.push(Segment { x0, x1, height: 0.0 });
            } else {
                out.push(Segment { x0, x1, height: 0.5 });
                out.push(Segment { x0, x1, height: -0.5 });
            }
            j += 1;
        }
        out
    }

    /// Exact length of the part within distance `r` of the origin (open ball).
    pub fn length_in_ball(&self, r: f64) -> f64 {
        let mut total = 0.0;
        for s in self.segments_until(r) {
            total += s.span_in_annulus(0.0, r);
        }
        total
    }

    /// `sum_{j <= J} c_j l_j`, the total length over `(0, a_J)`.
    pub fn cumulative_length(&self, big_j: u32) -> f64 {
        (1..=big_j)
            .map(|j| Self::copies(j) as f64 * self.interval_length(j))
            .sum()
    }
}

impl Segment {
    /// `x`-range of points with `lo <= |(x, h)| <= hi`, clipped to the segment.
    pub fn x_range_in_annulus(&self, lo: f64, hi: f64) -> Option<(f64, f64)> {
        let h2 = self.height * self.height;
        if hi * hi <= h2 {
            return None;
        }
        let a = if lo * lo > h2 { (lo * lo - h2).sqrt() } else { 0.0 };
        let b = (hi * hi - h2).sqrt();
        let (a, b) = (a.max(self.x0), b.min(self.x1));
        (a < b).then_some((a, b))
    }

    pub fn span_in_annulus(&self, lo: f64, hi: f64) -> f64 {
        self.x_range_in_annulus(lo, hi).map_or(0.0, |(a, b)| b - a)
    }
}
