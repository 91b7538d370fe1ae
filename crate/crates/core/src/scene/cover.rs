//! Adaptive covers of the pullback of a target set by boxes in parameter space.
//!
//! A box is compared with the target through the ball `B(f(center), L * half_diag)`,
//! where `L` is 1.5 times the largest Frobenius norm of the Jacobian seen at the
//! center and the corners.

use super::chart::{Chart, Jet};
use super::region::{Overlap, Target};
use super::{Scene, SceneError};
use crate::linalg;
use rayon::prelude::*;

/// Safety factor applied to sampled Jacobian and area-element maxima.
pub const SAFETY: f64 = 1.5;
pub const MAX_DEPTH: u32 = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub depth: u32,
}

impl Cell {
    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    pub fn half_diag(&self) -> f64 {
        0.5 * linalg::dist(&self.lo, &self.hi)
    }

    pub fn split(&self, axis: usize) -> [Cell; 2] {
        let mid = 0.5 * (self.lo[axis] + self.hi[axis]);
        let mut a = self.clone();
        let mut b = self.clone();
        a.hi[axis] = mid;
        b.lo[axis] = mid;
        a.depth += 1;
        b.depth += 1;
        [a, b]
    }

    /// Point at relative position `t in [0,1]^d`.
    pub fn at(&self, t: &[f64], out: &mut [f64]) {
        for i in 0..self.lo.len() {
            out[i] = self.lo[i] + t[i] * (self.hi[i] - self.lo[i]);
        }
    }
}

/// Jacobian information gathered at the center and corners of a cell.
#[derive(Debug, Clone)]
pub struct Probe {
    pub image: Vec<f64>,
    /// Safety-factored Lipschitz bound.
    pub lip: f64,
    pub jmax: f64,
    pub jmin: f64,
    /// Largest norm of each Jacobian column.
    pub col_norms: Vec<f64>,
    /// False if some corner could not be evaluated.
    pub complete: bool,
}

impl Probe {
    pub fn image_radius(&self, cell: &Cell) -> f64 {
        self.lip * cell.half_diag()
    }
}

/// Probes `cell`; `None` if the chart cannot be evaluated at its center.
pub fn probe(chart: &Chart, cell: &Cell, jet: &mut Jet) -> Option<Probe> {
    let d = chart.dim();
    let m = chart.ambient();
    let center = cell.center();
    chart.jet(&center, jet).ok()?;
    let image = jet.values.clone();
    let mut fro = linalg::frobenius(&jet.jac);
    let a = chart.area_element(jet);
    let (mut jmax, mut jmin) = (a, a);
    let mut col_norms: Vec<f64> = (0..d).map(|k| linalg::norm(&jet.jac[k * m..(k + 1) * m])).collect();
    let mut complete = true;
    let mut u = vec![0.0; d];
    for mask in 0..(1usize << d) {
        for i in 0..d {
            u[i] = if mask >> i & 1 == 1 { cell.hi[i] } else { cell.lo[i] };
        }
        if chart.jet(&u, jet).is_err() {
            complete = false;
            continue;
        }
        fro = fro.max(linalg::frobenius(&jet.jac));
        let a = chart.area_element(jet);
        jmax = jmax.max(a);
        jmin = jmin.min(a);
        for (k, c) in col_norms.iter_mut().enumerate() {
            *c = c.max(linalg::norm(&jet.jac[k * m..(k + 1) * m]));
        }
    }
    Some(Probe {
        image,
        lip: SAFETY * fro,
        jmax,
        jmin,
        col_norms,
        complete,
    })
}

/// Combined classification against the chart domain and the target.
pub fn classify(chart: &Chart, cell: &Cell, probe: Option<&Probe>, target: &Target) -> Overlap {
    let dom = chart.domain.classify_box(&cell.lo, &cell.hi);
    if dom == Overlap::Outside {
        return Overlap::Outside;
    }
    let Some(p) = probe else {
        return Overlap::Straddle;
    };
    let t = target.classify_ball(&p.image, p.image_radius(cell));
    match dom.and(t) {
        Overlap::Inside if !p.complete => Overlap::Straddle,
        o => o,
    }
}

/// Axis along which the image of the cell is longest.
pub fn split_axis(cell: &Cell, probe: Option<&Probe>) -> usize {
    let d = cell.lo.len();
    let mut best = 0;
    let mut best_len = f64::NEG_INFINITY;
    for k in 0..d {
        let w = cell.hi[k] - cell.lo[k];
        let len = match probe {
            Some(p) => w * p.col_norms[k].max(1e-300),
            None => w,
        };
        if len > best_len {
            best_len = len;
            best = k;
        }
    }
    best
}

/// Starting boxes for `chart` and `target`: the growth-clipped parameter box,
/// cut at zero and then halved along every axis.
pub fn initial_cells(chart: &Chart, target: &Target) -> Result<Vec<Cell>, SceneError> {
    let Some((lo, hi)) = chart.parameter_box(target.extent())? else {
        return Ok(Vec::new());
    };
    let mut cells = vec![Cell { lo, hi, depth: 0 }];
    for axis in 0..chart.dim() {
        let mut next = Vec::with_capacity(cells.len() * 4);
        for c in cells {
            let pieces = if c.lo[axis] < 0.0 && c.hi[axis] > 0.0 {
                let mut a = c.clone();
                let mut b = c.clone();
                a.hi[axis] = 0.0;
                b.lo[axis] = 0.0;
                vec![a, b]
            } else {
                vec![c]
            };
            for p in pieces {
                let [a, b] = p.split(axis);
                next.push(Cell { depth: 0, ..a });
                next.push(Cell { depth: 0, ..b });
            }
        }
        cells = next;
    }
    Ok(cells)
}

/// A cover cell with an upper bound on the area element inside it.
#[derive(Debug, Clone)]
pub struct CoverCell {
    pub chart: usize,
    pub cell: Cell,
    pub bound: f64,
    pub overlap: Overlap,
}

impl CoverCell {
    /// Upper bound on the measure carried by the cell.
    pub fn weight(&self) -> f64 {
        self.cell.volume() * self.bound
    }
}

/// Cells covering the pullback of `target`, refined until straddling cells are small
/// against the target thickness and the area element varies by at most 4x per cell.
pub fn build_cover(scene: &Scene, target: &Target, max_cells: usize) -> Result<Vec<CoverCell>, SceneError> {
    let mut done = Vec::new();
    for (ci, chart) in scene.charts().iter().enumerate() {
        done.extend(cover_chart(chart, ci, target, max_cells)?);
    }
    Ok(done)
}

/// Cover for a single chart; `index` is recorded in each cell.
pub fn cover_chart(chart: &Chart, index: usize, target: &Target, max_cells: usize) -> Result<Vec<CoverCell>, SceneError> {
    let fine = target.thickness() / 4.0;
    let mut done = Vec::new();
    let mut queue = initial_cells(chart, target)?;
    while !queue.is_empty() {
        let results: Vec<(Cell, Option<Probe>, Overlap)> = queue
            .into_par_iter()
            .map_init(
                || chart.jet_buffer(),
                |jet, cell| {
                    let p = probe(chart, &cell, jet);
                    let o = classify(chart, &cell, p.as_ref(), target);
                    (cell, p, o)
                },
            )
            .collect();
        let room = done.len() + 2 * results.len() < max_cells;
        queue = Vec::new();
        for (cell, p, o) in results {
            if o == Overlap::Outside {
                continue;
            }
            let deep_enough = cell.depth >= MAX_DEPTH || !room;
            let refine = match (&p, o) {
                (None, _) => !deep_enough,
                (Some(p), Overlap::Straddle) => p.image_radius(&cell) > fine && !deep_enough,
                (Some(p), _) => p.jmax > 4.0 * p.jmin && cell.depth < 16 && !deep_enough,
            };
            if refine {
                let axis = split_axis(&cell, p.as_ref());
                queue.extend(cell.split(axis));
            } else if let Some(p) = p {
                done.push(CoverCell {
                    chart: index,
                    bound: SAFETY * p.jmax,
                    cell,
                    overlap: o,
                });
            }
        }
    }
    Ok(done)
}
