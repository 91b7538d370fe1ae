//! Hausdorff measure of the set inside a ball (or another target), by adaptive
//! cell quadrature of the chart area element over the pulled-back region.
//!
//! Cells whose image lies inside the target use a 5-point Gauss-Legendre tensor
//! rule with `|G5 - G3|` as error. Cells straddling the target boundary use
//! stratified Monte Carlo with 256 samples.

mod quadrature;

pub use quadrature::{gauss_legendre, tensor_rule};

use crate::error::{Error, Result};
use crate::linalg::norm;
use crate::scene::cover::{self, Cell, Probe, MAX_DEPTH, SAFETY};
use crate::scene::{Body, Chart, Overlap, Scene, StaircaseSet, Target};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Volume of the unit ball in `R^n`, `pi^(n/2) / Gamma(n/2 + 1)`.
pub fn unit_ball_volume(n: usize) -> f64 {
    // Gamma(n/2 + 1) by the half-integer recursion
    let mut gamma = if n.is_multiple_of(2) { 1.0 } else { PI.sqrt() / 2.0 };
    let mut k = if n.is_multiple_of(2) { 1.0 } else { 1.5 };
    while k < n as f64 / 2.0 + 1.0 - 1e-9 {
        gamma *= k;
        k += 1.0;
    }
    PI.powf(n as f64 / 2.0) / gamma
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Quadrature,
    MonteCarlo,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureEstimate {
    pub value: f64,
    pub abs_error: f64,
    pub method: Method,
    pub cells_or_samples: u64,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallQuery {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl BallQuery {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<BallQuery> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("ball radius must be positive and finite, got {radius}")));
        }
        Ok(BallQuery { center, radius })
    }

    pub fn origin(m: usize, radius: f64) -> Result<BallQuery> {
        BallQuery::new(vec![0.0; m], radius)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureOptions {
    /// Relative tolerance.
    pub tol: f64,
    pub seed: u64,
    /// Maximum number of leaf cells per chart.
    pub max_cells: usize,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        MeasureOptions {
            tol: 1e-3,
            seed: 0,
            max_cells: 200_000,
        }
    }
}

impl MeasureOptions {
    pub fn with_tol(tol: f64) -> MeasureOptions {
        MeasureOptions {
            tol,
            ..Default::default()
        }
    }
}

/// Samples drawn per straddling cell.
pub const MC_SAMPLES: usize = 256;

/// `H^n(X ∩ B_r(c))` to relative tolerance `tol`.
pub fn area(scene: &Scene, q: &BallQuery, tol: f64) -> Result<MeasureEstimate> {
    area_with(scene, q, &MeasureOptions::with_tol(tol))
}

pub fn area_with(scene: &Scene, q: &BallQuery, opts: &MeasureOptions) -> Result<MeasureEstimate> {
    if q.center.len() != scene.ambient_dim {
        return Err(Error::InvalidArgument(format!(
            "ball center has {} coordinates, ambient dimension is {}",
            q.center.len(),
            scene.ambient_dim
        )));
    }
    if let Body::Staircase(st) = &scene.body {
        return area_staircase(st, q);
    }
    let target = Target::Ball {
        center: q.center.clone(),
        radius: q.radius,
    };
    measure_target(scene, &target, opts)
}

/// Exact length of the staircase inside a ball centered at the origin.
pub fn area_staircase(st: &StaircaseSet, q: &BallQuery) -> Result<MeasureEstimate> {
    if norm(&q.center) != 0.0 {
        return Err(Error::Unsupported("the staircase supports balls centered at the origin only".into()));
    }
    let value = st.length_in_ball(q.radius);
    Ok(MeasureEstimate {
        value,
        abs_error: 1e-13 * value,
        method: Method::Exact,
        cells_or_samples: st.segments_until(q.radius).len() as u64,
        seed: None,
    })
}

/// Measure of the part of a chart scene inside an arbitrary target.
pub fn measure_target(scene: &Scene, target: &Target, opts: &MeasureOptions) -> Result<MeasureEstimate> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let floor = 1e-3 * unit_ball_volume(scene.dim) * target.thickness().min(target.extent()).powi(scene.dim as i32);
    let mut total = ChartResult::default();
    for (ci, chart) in scene.charts().iter().enumerate() {
        let r = integrate_chart(chart, ci, target, opts, floor)?;
        total.value += chart.weight * r.value;
        total.quad_err += chart.weight * r.quad_err;
        total.mc_var += chart.weight * chart.weight * r.mc_var;
        total.cells += r.cells;
        total.samples += r.samples;
        total.over_budget |= r.over_budget;
    }
    let abs_error = total.quad_err + total.mc_var.sqrt();
    if !abs_error.is_finite() || !total.value.is_finite() {
        return Err(Error::NonFiniteIntegrand(format!("{} on {:?}", scene.name, target)));
    }
    if total.over_budget {
        return Err(Error::BudgetExceeded {
            budget: opts.max_cells,
            value: total.value,
            abs_error,
        });
    }
    let mc = total.samples > 0;
    Ok(MeasureEstimate {
        value: total.value,
        abs_error,
        method: if mc { Method::MonteCarlo } else { Method::Quadrature },
        cells_or_samples: if mc { total.samples } else { total.cells },
        seed: mc.then_some(opts.seed),
    })
}

#[derive(Debug, Default)]
struct ChartResult {
    value: f64,
    quad_err: f64,
    mc_var: f64,
    cells: u64,
    samples: u64,
    over_budget: bool,
}

/// Integral over one cell.
#[derive(Debug, Clone)]
struct Leaf {
    cell: Cell,
    value: f64,
    /// Deterministic error (quadrature or excision bound).
    quad_err: f64,
    /// Variance of a Monte Carlo estimate.
    mc_var: f64,
    samples: u64,
    probe: Option<Probe>,
    /// False once the cell reached the depth limit.
    splittable: bool,
}

impl Leaf {
    fn err(&self) -> f64 {
        self.quad_err + self.mc_var.sqrt()
    }
}

fn integrate_chart(chart: &Chart, index: usize, target: &Target, opts: &MeasureOptions, floor: f64) -> Result<ChartResult> {
    let mut pending: Vec<(Cell, f64)> = cover::initial_cells(chart, target)?
        .into_iter()
        .map(|c| (c, 0.0))
        .collect();
    let mut leaves: Vec<Leaf> = Vec::new();
    let mut over_budget = false;
    loop {
        let fresh: Vec<Option<Leaf>> = pending
            .par_iter()
            .map_init(
                || chart.jet_buffer(),
                |jet, (cell, parent_lip)| evaluate(chart, index, cell, *parent_lip, target, opts.seed, jet),
            )
            .collect();
        leaves.extend(fresh.into_iter().flatten());
        pending = Vec::new();

        let (value, err) = totals(&leaves);
        let goal = opts.tol * value.max(floor);
        if err <= goal {
            break;
        }
        if leaves.len() >= opts.max_cells {
            over_budget = true;
            break;
        }
        // split the largest-error leaves until they account for half the error
        let mut order: Vec<usize> = (0..leaves.len()).filter(|&i| leaves[i].splittable).collect();
        if order.is_empty() {
            break;
        }
        order.sort_by(|&a, &b| leaves[b].err().total_cmp(&leaves[a].err()).then(a.cmp(&b)));
        let room = (opts.max_cells - leaves.len()).max(1);
        let mut picked = vec![false; leaves.len()];
        let mut acc = 0.0;
        let mut count = 0;
        for &i in &order {
            if acc >= 0.5 * (err - 0.5 * goal) || count >= room {
                break;
            }
            let e = leaves[i].err();
            if e <= 0.0 {
                break;
            }
            acc += e;
            picked[i] = true;
            count += 1;
        }
        let mut kept = Vec::with_capacity(leaves.len());
        for (i, leaf) in leaves.into_iter().enumerate() {
            if picked[i] {
                let axis = cover::split_axis(&leaf.cell, leaf.probe.as_ref());
                let lip = leaf.probe.as_ref().map_or(0.0, |p| p.lip);
                for child in leaf.cell.split(axis) {
                    pending.push((child, lip));
                }
            } else {
                kept.push(leaf);
            }
        }
        leaves = kept;
    }
    let mut r = ChartResult {
        over_budget,
        ..Default::default()
    };
    for leaf in &leaves {
        r.value += leaf.value;
        r.quad_err += leaf.quad_err;
        r.mc_var += leaf.mc_var;
        r.samples += leaf.samples;
    }
    r.cells = leaves.len() as u64;
    Ok(r)
}

fn totals(leaves: &[Leaf]) -> (f64, f64) {
    let mut value = 0.0;
    let mut quad = 0.0;
    let mut var = 0.0;
    for l in leaves {
        value += l.value;
        quad += l.quad_err;
        var += l.mc_var;
    }
    (value, quad + var.sqrt())
}

fn evaluate(
    chart: &Chart,
    index: usize,
    cell: &Cell,
    parent_lip: f64,
    target: &Target,
    seed: u64,
    jet: &mut crate::scene::Jet,
) -> Option<Leaf> {
    if chart.domain.classify_box(&cell.lo, &cell.hi) == Overlap::Outside {
        return None;
    }
    let probe = cover::probe(chart, cell, jet);
    let overlap = cover::classify(chart, cell, probe.as_ref(), target);
    if overlap == Overlap::Outside {
        return None;
    }
    let splittable = cell.depth < MAX_DEPTH;
    let Some(p) = probe else {
        // chart cannot be evaluated here: excise, bounding the lost measure
        let n = chart.dim() as i32;
        let bound = if splittable { f64::INFINITY } else { parent_lip.powi(n) * cell.volume() };
        return Some(Leaf {
            cell: cell.clone(),
            value: 0.0,
            quad_err: bound,
            mc_var: 0.0,
            samples: 0,
            probe: None,
            splittable,
        });
    };
    if overlap == Overlap::Inside {
        if let Some((g5, g3)) = gauss_pair(chart, cell, jet) {
            return Some(Leaf {
                cell: cell.clone(),
                value: g5,
                quad_err: (g5 - g3).abs(),
                mc_var: 0.0,
                samples: 0,
                probe: Some(p),
                splittable,
            });
        }
    }
    let (value, var, samples) = stratified(chart, index, cell, target, seed, &p, jet);
    Some(Leaf {
        cell: cell.clone(),
        value,
        quad_err: 0.0,
        mc_var: var,
        samples,
        probe: Some(p),
        splittable,
    })
}

/// Tensor Gauss-Legendre integrals of the area element with 5 and 3 nodes per axis.
fn gauss_pair(chart: &Chart, cell: &Cell, jet: &mut crate::scene::Jet) -> Option<(f64, f64)> {
    let mut run = |order: usize| -> Option<f64> {
        let mut sum = 0.0;
        let mut u = vec![0.0; cell.lo.len()];
        for (t, w) in tensor_rule(order, cell.lo.len()) {
            cell.at(t, &mut u);
            chart.jet(&u, jet).ok()?;
            sum += w * chart.area_element(jet);
        }
        Some(sum * cell.volume())
    };
    let g5 = run(5)?;
    let g3 = run(3)?;
    Some((g5, g3))
}

/// Stratified Monte Carlo estimate of the area inside the target and the domain.
fn stratified(
    chart: &Chart,
    index: usize,
    cell: &Cell,
    target: &Target,
    seed: u64,
    probe: &Probe,
    jet: &mut crate::scene::Jet,
) -> (f64, f64, u64) {
    let d = cell.lo.len();
    let per_axis = (MC_SAMPLES as f64).powf(1.0 / d as f64).floor().max(1.0) as usize;
    let per_axis = if per_axis.pow(d as u32) > MC_SAMPLES { per_axis - 1 } else { per_axis };
    let strata = per_axis.pow(d as u32);
    let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(seed, index, cell));
    let mut t = vec![0.0; d];
    let mut u = vec![0.0; d];
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    let mut hits = 0usize;
    let mut fmax: f64 = 0.0;
    for s in 0..strata {
        let mut k = s;
        for v in t.iter_mut() {
            let j = k % per_axis;
            k /= per_axis;
            *v = (j as f64 + rng.random::<f64>()) / per_axis as f64;
        }
        cell.at(&t, &mut u);
        let mut f = 0.0;
        if chart.domain.contains(&u) && chart.jet(&u, jet).is_ok() && target.contains(&jet.values) {
            f = chart.area_element(jet);
            hits += 1;
        }
        fmax = fmax.max(f);
        sum += f;
        sum2 += f * f;
    }
    let n = strata as f64;
    let vol = cell.volume();
    let mean = sum / n;
    let var_f = (sum2 / n - mean * mean).max(0.0);
    let mut var = vol * vol * var_f / n;
    if hits == 0 || hits == strata {
        // all samples agree on membership: allow for a missed sliver
        let b = SAFETY * probe.jmax.max(fmax);
        let sliver = vol * b / n;
        var += sliver * sliver;
    }
    (vol * mean, var, strata as u64)
}

/// Seed for a cell, independent of evaluation order.
fn cell_seed(seed: u64, index: usize, cell: &Cell) -> u64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15 ^ (index as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    for v in cell.lo.iter().chain(&cell.hi) {
        h = splitmix(h ^ v.to_bits());
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
