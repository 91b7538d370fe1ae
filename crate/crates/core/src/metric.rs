//! Inner distances on sampled sets and the normal-embedding test at infinity.

use crate::error::{Error, Result};
use crate::linalg::{dist, norm, orthonormal_columns};
use nalgebra::DMatrix;
use crate::measure::{area_with, unit_ball_volume, BallQuery, MeasureOptions};
use crate::scene::{nearest_point, sample_target, Scene, Target};
use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Components smaller than this share of the vertices are sampling debris.
pub const MIN_COMPONENT_FRACTION: f64 = 0.01;
/// Pairs closer than this many connection radii are not tested.
pub const MIN_SEPARATION_HOPS: f64 = 1.0;
/// Nor pairs closer than this fraction of the inner annulus radius.
pub const MIN_SEPARATION_SCALE: f64 = 0.25;
/// The graph covers `B_(4R * margin)` so pairs near `4R` are not cut off from detours.
pub const GRAPH_MARGIN: f64 = 1.25;
const SHORTCUT_CHECKS: usize = 100;
pub const MAX_SHORTCUT_FRACTION: f64 = 0.02;
/// Largest normal-to-tangential ratio, relative to edge length, of an accepted edge.
pub const TANGENT_SLOPE: f64 = 0.5;

/// Points of the set joined when closer than `h`, weighted by Euclidean length.
#[derive(Debug, Clone)]
pub struct NeighborGraph {
    pub points: Vec<Vec<f64>>,
    pub h: f64,
    pub graph: UnGraph<(), f64>,
    pub components: usize,
    /// Component label of each vertex.
    pub labels: Vec<usize>,
}

impl NeighborGraph {
    pub fn new(points: Vec<Vec<f64>>, h: f64) -> NeighborGraph {
        NeighborGraph::build(points, None, h)
    }

    /// As `new`, but drops edges leaving either endpoint's tangent plane at more
    /// than `TANGENT_SLOPE`: these jump between sheets rather than follow one.
    /// Vertices without a frame accept every edge.
    pub fn with_tangents(points: Vec<Vec<f64>>, tangents: &[Option<DMatrix<f64>>], h: f64) -> NeighborGraph {
        NeighborGraph::build(points, Some(tangents), h)
    }

    fn build(points: Vec<Vec<f64>>, tangents: Option<&[Option<DMatrix<f64>>]>, h: f64) -> NeighborGraph {
        let n = points.len();
        let along = |i: usize, e: &[f64], len: f64| match tangents.and_then(|t| t[i].as_ref()) {
            None => true,
            Some(q) => {
                let mut off = 0.0;
                let coef: Vec<f64> = (0..q.ncols()).map(|k| (0..e.len()).map(|r| q[(r, k)] * e[r]).sum()).collect();
                for r in 0..e.len() {
                    let v = e[r] - (0..q.ncols()).map(|k| q[(r, k)] * coef[k]).sum::<f64>();
                    off += v * v;
                }
                off.sqrt() <= TANGENT_SLOPE * len
            }
        };
        let mut graph = UnGraph::<(), f64>::with_capacity(n, 8 * n);
        for _ in 0..n {
            graph.add_node(());
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]).then(a.cmp(&b)));
        for (ii, &i) in order.iter().enumerate() {
            for &j in &order[ii + 1..] {
                if points[j][0] - points[i][0] > h {
                    break;
                }
                let d = dist(&points[i], &points[j]);
                if d >= h {
                    continue;
                }
                let e: Vec<f64> = points[j].iter().zip(&points[i]).map(|(a, b)| a - b).collect();
                if along(i, &e, d) && along(j, &e, d) {
                    graph.add_edge(NodeIndex::new(i), NodeIndex::new(j), d);
                }
            }
        }
        let mut uf = petgraph::unionfind::UnionFind::<usize>::new(n);
        for e in graph.raw_edges() {
            uf.union(e.source().index(), e.target().index());
        }
        let roots = uf.into_labeling();
        let mut ids = std::collections::BTreeMap::new();
        let labels: Vec<usize> = roots
            .iter()
            .map(|r| {
                let next = ids.len();
                *ids.entry(*r).or_insert(next)
            })
            .collect();
        NeighborGraph {
            points,
            h,
            graph,
            components: ids.len(),
            labels,
        }
    }

    /// Vertices of components holding at least `fraction` of all vertices.
    pub fn major_vertices(&self, fraction: f64) -> Vec<bool> {
        let mut size = vec![0usize; self.components];
        for &l in &self.labels {
            size[l] += 1;
        }
        let min = fraction * self.points.len() as f64;
        self.labels.iter().map(|&l| size[l] as f64 >= min).collect()
    }

    /// Fraction of `checks` random edges whose midpoint lies farther than `h / 10`
    /// from the set: edges cutting through ambient space.
    pub fn shortcut_fraction(&self, scene: &Scene, checks: usize, seed: u64) -> Result<f64> {
        let edges = self.graph.raw_edges();
        if edges.is_empty() {
            return Ok(0.0);
        }
        let mut idx: Vec<usize> = (0..edges.len()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        idx.truncate(checks);
        let flagged: Vec<Result<bool>> = idx
            .par_iter()
            .map(|&e| {
                let a = &self.points[edges[e].source().index()];
                let b = &self.points[edges[e].target().index()];
                let mid: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
                Ok(nearest_point(scene, &mid)?.distance > 0.1 * self.h)
            })
            .collect();
        let mut bad = 0;
        for f in flagged {
            if f? {
                bad += 1;
            }
        }
        Ok(bad as f64 / idx.len() as f64)
    }

    /// Shortest-path lengths from vertex `i` to every vertex; `INFINITY` if unreachable.
    pub fn distances_from(&self, i: usize) -> Vec<f64> {
        let map = dijkstra(&self.graph, NodeIndex::new(i), None, |e| *e.weight());
        let mut out = vec![f64::INFINITY; self.points.len()];
        for (node, d) in map {
            out[node.index()] = d;
        }
        out
    }
}

/// Connection radius: `factor` times the expected nearest-neighbor spacing of a
/// Poisson sample, but at least the radius that keeps such a sample connected.
pub fn connection_radius(measure: f64, n: usize, count: usize, factor: f64) -> f64 {
    let mu = unit_ball_volume(n);
    let lambda = count as f64 / measure;
    let gamma = match n {
        1 => 1.0,
        2 => 0.886_226_925_452_758,
        3 => 0.892_979_511_569_249,
        _ => 0.9,
    };
    let spacing = gamma / (lambda * mu).powf(1.0 / n as f64);
    // on a line a gap is bridged only by an edge spanning it, not by a ball around either end
    let reach = if n == 1 { 1.0 } else { mu };
    let connect = (((count as f64).ln() + 3.0) / (lambda * reach)).powf(1.0 / n as f64);
    (factor * spacing).max(connect)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphOptions {
    pub samples: usize,
    /// Fixed connection radius; automatic when `None`.
    pub h: Option<f64>,
    pub h_factor: f64,
    pub seed: u64,
}

impl Default for GraphOptions {
    fn default() -> Self {
        GraphOptions {
            samples: 20_000,
            h: None,
            h_factor: 8.0,
            seed: 0,
        }
    }
}

/// Samples `X ∩ B_rho(0)` and builds its neighbor graph, with `extra` points added first.
pub fn ball_graph(scene: &Scene, rho: f64, extra: &[Vec<f64>], opts: &GraphOptions) -> Result<NeighborGraph> {
    let target = Target::Ball {
        center: vec![0.0; scene.ambient_dim],
        radius: rho,
    };
    let set = sample_target(scene, &target, opts.samples, opts.seed)?;
    let h = match opts.h {
        Some(h) => h,
        None => {
            let q = BallQuery::origin(scene.ambient_dim, rho)?;
            let measure = match area_with(scene, &q, &MeasureOptions::with_tol(1e-2)) {
                Ok(e) => e.value,
                Err(Error::BudgetExceeded { value, .. }) => value,
                Err(e) => return Err(e),
            };
            connection_radius(measure, scene.dim, set.samples.len() + extra.len(), opts.h_factor)
        }
    };
    let mut points = Vec::with_capacity(extra.len() + set.samples.len());
    let mut frames = Vec::with_capacity(points.capacity());
    for p in extra {
        let proj = nearest_point(scene, p)?;
        frames.push(tangent_frame(scene, proj.chart, &proj.param)?);
        points.push(p.clone());
    }
    for s in set.samples {
        frames.push(tangent_frame(scene, s.chart, &s.param)?);
        points.push(s.point);
    }
    Ok(NeighborGraph::with_tangents(points, &frames, h))
}

/// Orthonormal tangent basis at a chart point, as columns; `None` where the chart is singular.
pub fn tangent_frame(scene: &Scene, chart: usize, param: &[f64]) -> Result<Option<DMatrix<f64>>> {
    if scene.staircase().is_some() {
        return Ok(Some(DMatrix::from_column_slice(2, 1, &[1.0, 0.0])));
    }
    let c = &scene.charts()[chart];
    let mut jet = c.jet_buffer();
    c.jet(param, &mut jet)?;
    Ok(orthonormal_columns(&jet.jac, scene.ambient_dim, scene.dim))
}

/// Graph estimate of the inner distance between two points of the set.
/// Returns `INFINITY` when they fall in different graph components.
pub fn inner_distance(scene: &Scene, x: &[f64], y: &[f64], opts: &GraphOptions) -> Result<f64> {
    for p in [x, y] {
        let d = nearest_point(scene, p)?.distance;
        if d > 1e-6 {
            return Err(Error::PointNotOnSet(d));
        }
    }
    let rho = 1.5 * norm(x).max(norm(y)) + 1.0;
    let g = ball_graph(scene, rho, &[x.to_vec(), y.to_vec()], opts)?;
    Ok(g.distances_from(0)[1])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub d_graph: f64,
    pub d_euclid: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnulusReport {
    pub r_lo: f64,
    pub r_hi: f64,
    pub c_hat: f64,
    pub witness: Option<Witness>,
    pub vertices: usize,
    pub h: f64,
    pub components: usize,
    /// Tested pairs with no graph path.
    pub disconnected_pairs: usize,
    /// Fraction of checked edges cutting through ambient space.
    pub shortcut_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LneVerdict {
    Lne { c_bound: f64 },
    NotLne { growth: Vec<f64> },
    Inconclusive { reason: String },
}

impl LneVerdict {
    pub fn kind(&self) -> &'static str {
        match self {
            LneVerdict::Lne { .. } => "lne",
            LneVerdict::NotLne { .. } => "not_lne",
            LneVerdict::Inconclusive { .. } => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LneReport {
    pub annuli: Vec<AnnulusReport>,
    pub verdict: LneVerdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LneOptions {
    pub levels: Vec<f64>,
    /// Source vertices per level; every annulus vertex is paired with each.
    pub pairs_per_level: usize,
    pub graph: GraphOptions,
}

impl Default for LneOptions {
    fn default() -> Self {
        LneOptions {
            levels: vec![4.0, 8.0, 16.0],
            pairs_per_level: 32,
            graph: GraphOptions::default(),
        }
    }
}

/// For each level `R`, the largest ratio of graph to Euclidean distance over pairs
/// in `R <= |x| <= 4R`, with paths allowed anywhere in `B_4R`.
pub fn lne_at_infinity(scene: &Scene, opts: &LneOptions) -> Result<LneReport> {
    if opts.levels.len() < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 levels, got {}", opts.levels.len())));
    }
    if scene.dim >= 3 {
        return Ok(LneReport {
            annuli: Vec::new(),
            verdict: LneVerdict::Inconclusive {
                reason: format!("graph distances are not estimated for dimension {}", scene.dim),
            },
        });
    }
    let mut levels = opts.levels.clone();
    levels.sort_by(f64::total_cmp);
    let annuli: Vec<Result<AnnulusReport>> = levels
        .par_iter()
        .enumerate()
        .map(|(i, &r)| {
            let g_opts = GraphOptions {
                seed: opts.graph.seed.wrapping_add(i as u64),
                ..opts.graph.clone()
            };
            annulus_ratio(scene, r, opts.pairs_per_level, &g_opts)
        })
        .collect();
    let annuli = annuli.into_iter().collect::<Result<Vec<_>>>()?;
    let verdict = lne_verdict(&annuli);
    Ok(LneReport { annuli, verdict })
}

fn annulus_ratio(scene: &Scene, r: f64, sources: usize, opts: &GraphOptions) -> Result<AnnulusReport> {
    let g = ball_graph(scene, GRAPH_MARGIN * 4.0 * r, &[], opts)?;
    let major = g.major_vertices(MIN_COMPONENT_FRACTION);
    let in_annulus: Vec<usize> = (0..g.points.len())
        .filter(|&i| {
            let n = norm(&g.points[i]);
            major[i] && n >= r && n <= 4.0 * r
        })
        .collect();
    let min_separation = (MIN_SEPARATION_HOPS * g.h).max(MIN_SEPARATION_SCALE * r);
    let anchors = pick_anchors(&g.points, &in_annulus, sources, opts.seed);
    let rows: Vec<(f64, Option<Witness>, usize)> = anchors
        .par_iter()
        .map(|&a| {
            let d = g.distances_from(a);
            let mut best = (1.0, None, 0usize);
            for &b in &in_annulus {
                if b == a {
                    continue;
                }
                let e = dist(&g.points[a], &g.points[b]);
                if e < min_separation {
                    continue;
                }
                if !d[b].is_finite() {
                    best.2 += 1;
                    continue;
                }
                let ratio = d[b] / e;
                if ratio > best.0 {
                    best.0 = ratio;
                    best.1 = Some(Witness {
                        x: g.points[a].clone(),
                        y: g.points[b].clone(),
                        d_graph: d[b],
                        d_euclid: e,
                    });
                }
            }
            best
        })
        .collect();
    let mut c_hat = 1.0;
    let mut witness = None;
    let mut disconnected = 0;
    for (c, w, dis) in rows {
        disconnected += dis;
        if c > c_hat {
            c_hat = c;
            witness = w;
        }
    }
    let shortcut_fraction = g.shortcut_fraction(scene, SHORTCUT_CHECKS, opts.seed)?;
    Ok(AnnulusReport {
        r_lo: r,
        r_hi: 4.0 * r,
        c_hat,
        witness,
        vertices: g.points.len(),
        h: g.h,
        components: g.components,
        disconnected_pairs: disconnected,
        shortcut_fraction,
    })
}

/// Half the anchors are the outermost points in distinct directions, the rest random.
fn pick_anchors(points: &[Vec<f64>], candidates: &[usize], count: usize, seed: u64) -> Vec<usize> {
    let mut by_norm = candidates.to_vec();
    by_norm.sort_by(|&a, &b| norm(&points[b]).total_cmp(&norm(&points[a])).then(a.cmp(&b)));
    let mut chosen: Vec<usize> = Vec::new();
    for &i in &by_norm {
        if chosen.len() >= count / 2 {
            break;
        }
        let u = &points[i];
        let nu = norm(u);
        let apart = chosen.iter().all(|&j| {
            let v = &points[j];
            let c = crate::linalg::dot(u, v) / (nu * norm(v));
            c < 0.9
        });
        if apart {
            chosen.push(i);
        }
    }
    let mut rest: Vec<usize> = candidates.iter().copied().filter(|i| !chosen.contains(i)).collect();
    rest.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let need = count.saturating_sub(chosen.len());
    chosen.extend(rest.into_iter().take(need));
    chosen
}

fn lne_verdict(annuli: &[AnnulusReport]) -> LneVerdict {
    if let Some(a) = annuli.iter().find(|a| a.shortcut_fraction > MAX_SHORTCUT_FRACTION) {
        return LneVerdict::Inconclusive {
            reason: format!(
                "{:.1}% of checked edges leave the set at R = {} (h = {:.3e}); more samples needed",
                100.0 * a.shortcut_fraction,
                a.r_lo,
                a.h
            ),
        };
    }
    if annuli.iter().all(|a| a.disconnected_pairs > 0) {
        return LneVerdict::Inconclusive {
            reason: "neighbor graph is disconnected at every level".into(),
        };
    }
    let c: Vec<f64> = annuli.iter().map(|a| a.c_hat).collect();
    let growth: Vec<f64> = c.windows(2).map(|w| w[1] / w[0]).collect();
    let last = *growth.last().expect("at least 3 levels");
    if growth.iter().all(|&g| g >= 1.5) {
        return LneVerdict::NotLne { growth };
    }
    if last <= 1.1 {
        return LneVerdict::Lne {
            c_bound: c.iter().copied().fold(1.0, f64::max),
        };
    }
    LneVerdict::Inconclusive {
        reason: format!("ratio growth per level {growth:?} is neither bounded nor steadily increasing"),
    }
}
