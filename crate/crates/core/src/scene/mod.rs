//! Sets described by charts or by special built-in generators, the scene
//! language, sampling, and the built-in library.

mod builtins;
mod chart;
pub mod cover;
mod dsl;
mod project;
mod region;
mod sample;
mod staircase;

pub use builtins::{builtin_library, builtin_names, builtin_scene, builtin_source};
pub use chart::{Chart, Jet};
pub use dsl::parse_scene;
pub use project::{nearest_point, Projection};
pub use region::{Overlap, Region, Target};
pub use sample::{collision_rate, sample_points, sample_target, Sample, SampleSet};
pub use staircase::{Segment, StaircaseSet};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SceneError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unknown builtin `{0}`")]
    UnknownBuiltin(String),
    #[error("invalid scene: {0}")]
    Invalid(String),
}

/// User-asserted facts about the set. Reported, never verified.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SceneMeta {
    pub definable: bool,
    pub minimal: bool,
    pub cone_vertex: Option<Vec<f64>>,
    pub monotone_at: Option<Vec<f64>>,
    /// Degree when the set is a complex algebraic graph.
    pub degree: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapPolicy {
    Disjoint,
    /// Charts may overlap; each carries its own weight.
    Declared,
}

#[derive(Debug, Clone)]
pub enum Body {
    Charts(Vec<Chart>),
    Staircase(StaircaseSet),
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub name: String,
    pub ambient_dim: usize,
    pub dim: usize,
    pub body: Body,
    pub overlap: OverlapPolicy,
    pub meta: SceneMeta,
    /// Scene-language text the scene was built from.
    pub source: String,
}

impl Scene {
    pub fn charts(&self) -> &[Chart] {
        match &self.body {
            Body::Charts(c) => c,
            Body::Staircase(_) => &[],
        }
    }

    pub fn staircase(&self) -> Option<&StaircaseSet> {
        match &self.body {
            Body::Staircase(s) => Some(s),
            Body::Charts(_) => None,
        }
    }

    /// Single-chart graph `x -> (x, u(x))`.
    pub fn graph_chart(&self) -> Option<&Chart> {
        match self.charts() {
            [c] if c.is_graph() => Some(c),
            _ => None,
        }
    }

    /// Hex SHA-256 of the source text.
    pub fn source_hash(&self) -> String {
        let digest = Sha256::digest(self.source.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// `mu_n`, volume of the unit `n`-ball.
    pub fn unit_ball_volume(&self) -> f64 {
        crate::measure::unit_ball_volume(self.dim)
    }

    pub(crate) fn validate(&self) -> Result<(), SceneError> {
        if !(1 <= self.dim && self.dim < self.ambient_dim && self.ambient_dim <= 8) {
            return Err(SceneError::DimensionMismatch(format!(
                "need 1 <= dim < ambient <= 8, got dim {} and ambient {}",
                self.dim, self.ambient_dim
            )));
        }
        match &self.body {
            Body::Charts(charts) => {
                if charts.is_empty() {
                    return Err(SceneError::Invalid("scene has no charts".into()));
                }
                for (i, c) in charts.iter().enumerate() {
                    if c.dim() != self.dim {
                        return Err(SceneError::DimensionMismatch(format!(
                            "chart {} has {} parameters but the scene has dim {}",
                            i + 1,
                            c.dim(),
                            self.dim
                        )));
                    }
                    if c.ambient() != self.ambient_dim {
                        return Err(SceneError::DimensionMismatch(format!(
                            "chart {} maps into R^{} but the scene has ambient {}",
                            i + 1,
                            c.ambient(),
                            self.ambient_dim
                        )));
                    }
                    if c.dim() > 4 {
                        return Err(SceneError::Invalid("charts have at most 4 parameters".into()));
                    }
                    if self.overlap == OverlapPolicy::Disjoint && c.weight != 1.0 {
                        return Err(SceneError::Invalid(
                            "chart weights need `overlap declared`".into(),
                        ));
                    }
                }
            }
            Body::Staircase(_) => {
                if self.ambient_dim != 2 || self.dim != 1 {
                    return Err(SceneError::DimensionMismatch(
                        "the staircase lives in R^2 with dim 1".into(),
                    ));
                }
            }
        }
        for (label, p) in [("cone_vertex", &self.meta.cone_vertex), ("monotone_at", &self.meta.monotone_at)] {
            if let Some(p) = p {
                if p.len() != self.ambient_dim {
                    return Err(SceneError::DimensionMismatch(format!(
                        "{label} has {} coordinates, ambient is {}",
                        p.len(),
                        self.ambient_dim
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Resolves a builtin name such as `catenoid` or `alpha_cone(3)`, or reads a
/// `.scene` file.
pub fn load_scene(spec: &str) -> Result<Scene, SceneError> {
    let path = std::path::Path::new(spec);
    if spec.ends_with(".scene") || path.is_file() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SceneError::Invalid(format!("cannot read {spec}: {e}")))?;
        return parse_scene(&text);
    }
    builtin_scene(spec)
}
