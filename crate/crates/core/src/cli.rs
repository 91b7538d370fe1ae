//! Command-line front end. Reports go to stdout as JSON, diagnostics to stderr.

use crate::asymptotics::{
    density_at_infinity_with, density_at_point_with, profile_with, LimitOptions, LimitVerdict,
};
use crate::classify::{classify, ClassifyOptions};
use crate::cones::{normal_set_infinity, tangent_cone_at_point, tangent_cone_infinity, ConeOptions, NormalOptions};
use crate::measure::MeasureOptions;
use crate::metric::{lne_at_infinity, GraphOptions, LneOptions};
use crate::multiplicity::{kr_check, multiplicity_auto, relative_multiplicity, MultiplicityOptions};
use crate::oracle::{oracle_names, oracle_values};
use crate::scene::{load_scene, Scene, SceneMeta};
use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Value};
use std::io::{self, Write};
use std::path::PathBuf;
use std::time::Instant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "infdensity", version, about = "Densities, tangent cones and multiplicities at infinity")]
pub struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Density at infinity or at a point.
    Density {
        scene: String,
        #[arg(long, value_parser = parse_point, conflicts_with = "at_infinity")]
        at_point: Option<Point>,
        #[arg(long)]
        at_infinity: bool,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the density profile as `r,theta,err`.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Density ratio on a log-spaced grid of radii.
    Profile {
        scene: String,
        #[arg(long, value_parser = parse_point)]
        center: Option<Point>,
        #[arg(long, default_value_t = 1.0)]
        rmin: f64,
        #[arg(long, default_value_t = 100.0)]
        rmax: f64,
        #[arg(long, default_value_t = 16)]
        k: usize,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Tangent cone at infinity or at a point.
    Cone {
        scene: String,
        #[arg(long, value_parser = parse_point)]
        at_point: Option<Point>,
        /// Angular tolerance.
        #[arg(long, default_value_t = 0.05)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also estimate the limit tangent planes.
        #[arg(long)]
        normals: bool,
    },
    /// Relative multiplicity along a cone direction.
    Mult {
        scene: String,
        #[arg(long, value_parser = parse_point)]
        dir: Point,
        #[arg(long, default_value_t = 0.2)]
        eta: f64,
        /// Inner shell radius; doubled until stable when omitted.
        #[arg(long = "R")]
        r: Option<f64>,
        #[arg(long, default_value_t = 4000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Density at infinity against the cone decomposition with multiplicities.
    KrCheck {
        scene: String,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Normal embedding at infinity.
    Lne {
        scene: String,
        #[arg(long, value_delimiter = ',', default_values_t = vec![4.0, 8.0, 16.0])]
        levels: Vec<f64>,
        #[arg(long, default_value_t = 32)]
        pairs: usize,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Bernstein-type classification.
    Classify {
        scene: String,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Closed-form reference values.
    Oracle { name: String },
}

/// A single point argument; the alias keeps clap from treating it as a list.
pub type Point = Vec<f64>;

/// Accepts `1,0,0` or `(1, 0, 0)`.
pub fn parse_point(s: &str) -> Result<Point, String> {
    let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
    inner
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad coordinate `{}`: {e}", t.trim())))
        .collect()
}

#[derive(Debug, Serialize)]
struct SceneEcho<'a> {
    name: &'a str,
    meta: &'a SceneMeta,
    hash: String,
}

#[derive(Debug, Serialize)]
struct Report<'a> {
    tool: &'static str,
    version: &'static str,
    scene: Option<SceneEcho<'a>>,
    command: &'static str,
    parameters: Value,
    results: Value,
    wall_time_s: f64,
}

/// Pretty JSON with every float written to 17 significant digits.
pub struct ReportFormatter(PrettyFormatter<'static>);

impl Default for ReportFormatter {
    fn default() -> Self {
        ReportFormatter(PrettyFormatter::new())
    }
}

impl Formatter for ReportFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_report_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ReportFormatter::default());
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

struct Outcome {
    scene: Option<Scene>,
    command: &'static str,
    parameters: Value,
    results: Value,
    code: i32,
}

/// Runs the tool on `argv` (including the program name), writing the report to
/// `out`. Returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_USAGE;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already configured: {e}");
        }
    }
    let start = Instant::now();
    let outcome = match execute(cli.command) {
        Ok(o) => o,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
        Err(CliError::Failed(msg)) => {
            eprintln!("error: {msg}");
            return EXIT_ERROR;
        }
    };
    let report = Report {
        tool: "infdensity",
        version: env!("CARGO_PKG_VERSION"),
        scene: outcome.scene.as_ref().map(|s| SceneEcho {
            name: &s.name,
            meta: &s.meta,
            hash: s.source_hash(),
        }),
        command: outcome.command,
        parameters: outcome.parameters,
        results: outcome.results,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    match to_report_json(&report) {
        Ok(text) => {
            if writeln!(out, "{text}").is_err() {
                return EXIT_ERROR;
            }
            outcome.code
        }
        Err(e) => {
            eprintln!("error: cannot serialize report: {e}");
            EXIT_ERROR
        }
    }
}

enum CliError {
    Usage(String),
    Failed(String),
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Failed(e.to_string())
    }
}

fn value<T: Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Failed(format!("cannot serialize results: {e}")))
}

fn scene(spec: &str) -> Result<Scene, CliError> {
    load_scene(spec).map_err(|e| CliError::Failed(format!("{spec}: {e}")))
}

fn write_csv(path: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    if let Some(p) = path {
        std::fs::write(p, text).map_err(|e| CliError::Failed(format!("cannot write {}: {e}", p.display())))?;
        log::info!("profile written to {}", p.display());
    }
    Ok(())
}

fn check_point(s: &Scene, p: &[f64]) -> Result<(), CliError> {
    if p.len() != s.ambient_dim {
        return Err(CliError::Usage(format!(
            "point has {} coordinates, scene ambient dimension is {}",
            p.len(),
            s.ambient_dim
        )));
    }
    Ok(())
}

fn limit_code(v: &LimitVerdict) -> i32 {
    match v {
        LimitVerdict::Converges { .. } | LimitVerdict::Diverges { .. } => EXIT_OK,
        LimitVerdict::NoLimit { .. } | LimitVerdict::Inconclusive { .. } => EXIT_INCONCLUSIVE,
    }
}

fn execute(cmd: Command) -> Result<Outcome, CliError> {
    match cmd {
        Command::Density {
            scene: spec,
            at_point,
            at_infinity: _,
            tol,
            seed,
            csv,
        } => {
            let s = scene(&spec)?;
            let (analysis, opts) = match &at_point {
                Some(p) => {
                    check_point(&s, p)?;
                    let opts = LimitOptions {
                        seed,
                        ..LimitOptions::at_point(p, tol)
                    };
                    (density_at_point_with(&s, &opts)?, opts)
                }
                None => {
                    let opts = LimitOptions {
                        seed,
                        ..LimitOptions::at_infinity(&s, tol)
                    };
                    (density_at_infinity_with(&s, &opts)?, opts)
                }
            };
            write_csv(&csv, &analysis.profile.to_csv())?;
            Ok(Outcome {
                code: limit_code(&analysis.verdict),
                scene: Some(s),
                command: "density",
                parameters: json!({
                    "at_point": at_point, "tol": tol, "seed": seed,
                    "r_lo": opts.r_lo, "r_hi": opts.r_hi, "k": opts.k, "max_cells": opts.max_cells,
                }),
                results: value(&analysis)?,
            })
        }
        Command::Profile {
            scene: spec,
            center,
            rmin,
            rmax,
            k,
            tol,
            seed,
            csv,
        } => {
            let s = scene(&spec)?;
            let c = center.unwrap_or_else(|| vec![0.0; s.ambient_dim]);
            check_point(&s, &c)?;
            if !(rmin > 0.0 && rmax > rmin) || k < 2 {
                return Err(CliError::Usage("need 0 < rmin < rmax and k >= 2".into()));
            }
            let mopts = MeasureOptions {
                tol,
                seed,
                ..Default::default()
            };
            let prof = profile_with(&s, &c, rmin, rmax, k, &mopts)?;
            write_csv(&csv, &prof.to_csv())?;
            Ok(Outcome {
                scene: Some(s),
                command: "profile",
                parameters: json!({
                    "center": c, "rmin": rmin, "rmax": rmax, "k": k, "tol": tol, "seed": seed,
                    "max_cells": mopts.max_cells,
                }),
                results: value(&prof)?,
                code: EXIT_OK,
            })
        }
        Command::Cone {
            scene: spec,
            at_point,
            tol,
            seed,
            normals,
        } => {
            let s = scene(&spec)?;
            let (cone, opts) = match &at_point {
                Some(p) => {
                    check_point(&s, p)?;
                    let opts = ConeOptions::at_point(tol, seed);
                    (tangent_cone_at_point(&s, p, &opts)?, opts)
                }
                None => {
                    let opts = ConeOptions::at_infinity(tol, seed);
                    (tangent_cone_infinity(&s, &opts)?, opts)
                }
            };
            let planes = if normals && at_point.is_none() {
                Some(normal_set_infinity(&s, &NormalOptions::new(tol, seed))?)
            } else {
                None
            };
            Ok(Outcome {
                scene: Some(s),
                command: "cone",
                parameters: json!({
                    "at_point": at_point, "tol": tol, "seed": seed,
                    "levels": opts.levels, "per_level": opts.per_level, "normals": normals,
                }),
                results: json!({ "cone": value(&cone)?, "normal_planes": value(&planes)? }),
                code: EXIT_OK,
            })
        }
        Command::Mult {
            scene: spec,
            dir,
            eta,
            r,
            samples,
            seed,
        } => {
            let s = scene(&spec)?;
            check_point(&s, &dir)?;
            let report = match r {
                Some(r) => relative_multiplicity(&s, &dir, eta, r, samples, seed)?,
                None => multiplicity_auto(
                    &s,
                    &dir,
                    &MultiplicityOptions {
                        eta,
                        samples,
                        seed,
                        ..Default::default()
                    },
                )?,
            };
            Ok(Outcome {
                code: if report.stable { EXIT_OK } else { EXIT_INCONCLUSIVE },
                scene: Some(s),
                command: "mult",
                parameters: json!({ "dir": dir, "eta": eta, "R": r, "samples": samples, "seed": seed }),
                results: value(&report)?,
            })
        }
        Command::KrCheck { scene: spec, tol, seed } => {
            let s = scene(&spec)?;
            let report = kr_check(&s, tol, seed)?;
            let complete = report.error.is_none() && report.rhs.is_some();
            Ok(Outcome {
                code: if complete { limit_code(&report.lhs) } else { EXIT_INCONCLUSIVE },
                scene: Some(s),
                command: "kr-check",
                parameters: json!({ "tol": tol, "seed": seed }),
                results: value(&report)?,
            })
        }
        Command::Lne {
            scene: spec,
            levels,
            pairs,
            samples,
            seed,
        } => {
            let s = scene(&spec)?;
            if levels.len() < 3 {
                return Err(CliError::Usage("--levels needs at least 3 values".into()));
            }
            let opts = LneOptions {
                levels,
                pairs_per_level: pairs,
                graph: GraphOptions {
                    samples,
                    seed,
                    ..Default::default()
                },
            };
            let report = lne_at_infinity(&s, &opts)?;
            Ok(Outcome {
                code: if report.verdict.kind() == "inconclusive" { EXIT_INCONCLUSIVE } else { EXIT_OK },
                scene: Some(s),
                command: "lne",
                parameters: json!({
                    "levels": opts.levels, "pairs": pairs, "samples": samples, "seed": seed,
                    "h_factor": opts.graph.h_factor,
                }),
                results: value(&report)?,
            })
        }
        Command::Classify { scene: spec, tol, seed } => {
            let s = scene(&spec)?;
            let opts = ClassifyOptions {
                tol,
                seed,
                ..Default::default()
            };
            let c = classify(&s, &opts)?;
            Ok(Outcome {
                code: if c.verdict.kind() == "inconclusive" { EXIT_INCONCLUSIVE } else { EXIT_OK },
                scene: Some(s),
                command: "classify",
                parameters: json!({ "tol": tol, "angle_tol": opts.angle_tol, "seed": seed }),
                results: value(&c)?,
            })
        }
        Command::Oracle { name } => {
            let values = oracle_values(&name).ok_or_else(|| {
                CliError::Usage(format!("unknown oracle `{name}`; one of {}", oracle_names().join(", ")))
            })?;
            Ok(Outcome {
                scene: None,
                command: "oracle",
                parameters: json!({ "name": name }),
                results: json!({ "name": name, "values": value(&values)? }),
                code: EXIT_OK,
            })
        }
    }
}
