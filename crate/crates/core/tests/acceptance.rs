//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any fails. Runs without the libtest harness so the criteria
//! share one classification table.

use infdensity::asymptotics::{density_at_infinity, DensityAnalysis, LimitVerdict};
use infdensity::classify::{classify, BernsteinVerdict, Classification, ClassifyOptions};
use infdensity::cones::{blow_down, blow_up, tangent_cone_infinity, ConeOptions};
use infdensity::measure::{area_with, unit_ball_volume, BallQuery, MeasureOptions};
use infdensity::metric::{lne_at_infinity, LneOptions, LneVerdict, NeighborGraph};
use infdensity::multiplicity::{degree_density_check, multiplicity_auto, KrReport, MultiplicityOptions};
use infdensity::oracle::{alpha_cone_density, staircase_bands};
use infdensity::scene::{builtin_scene, sample_target, Body, Scene, Target};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};
use std::time::Instant;

const TABLE: [&str; 10] = [
    "plane",
    "catenoid",
    "alpha_cone",
    "parabola",
    "complex_parabola",
    "cubic_graph",
    "lawson_osserman",
    "helicoid",
    "staircase",
    "upper_catenoid_graph",
];

struct Check {
    ok: bool,
    notes: Vec<String>,
}

impl Check {
    fn new() -> Check {
        Check { ok: true, notes: Vec::new() }
    }

    fn expect(&mut self, cond: bool, note: impl Into<String>) {
        let note = note.into();
        if cond {
            self.notes.push(note);
        } else {
            self.ok = false;
            self.notes.push(format!("!! {note}"));
        }
    }
}

fn scene(call: &str) -> Scene {
    builtin_scene(call).unwrap_or_else(|e| panic!("{call}: {e}"))
}

fn timed_density(call: &str) -> (DensityAnalysis, f64) {
    let s = scene(call);
    let t = Instant::now();
    let a = density_at_infinity(&s, 1e-3).unwrap_or_else(|e| panic!("{call}: {e}"));
    (a, t.elapsed().as_secs_f64())
}

fn converges_near(c: &mut Check, label: &str, v: &LimitVerdict, target: f64, tol: f64) {
    match v {
        LimitVerdict::Converges { value, err } => c.expect(
            (value - target).abs() <= tol,
            format!("{label}: {value:.5} ± {err:.1e} (want {target:.4} ± {tol})"),
        ),
        other => c.expect(false, format!("{label}: {} (want converges)", other.kind())),
    }
}

fn c1() -> Check {
    let mut c = Check::new();
    let (a, secs) = timed_density("parabola");
    converges_near(&mut c, "parabola", &a.verdict, 1.0, 0.01);
    c.expect(secs <= 10.0, format!("{secs:.1}s (≤ 10s)"));
    c
}

fn c2() -> Check {
    let mut c = Check::new();
    let (a, secs) = timed_density("catenoid");
    converges_near(&mut c, "catenoid", &a.verdict, 2.0, 0.04);
    c.expect(secs <= 60.0, format!("{secs:.1}s (≤ 60s)"));
    c
}

fn c3() -> Check {
    let mut c = Check::new();
    for alpha in [1.0, 3.0] {
        let call = format!("alpha_cone({alpha})");
        let (a, _) = timed_density(&call);
        let want = alpha_cone_density(alpha);
        converges_near(&mut c, &call, &a.verdict, want, 0.02);
        // exact cone: every radius has the same ratio
        let p = &a.profile;
        let worst = (0..p.radii.len())
            .map(|i| (p.theta[i] - want).abs() - p.err[i])
            .fold(f64::NEG_INFINITY, f64::max);
        c.expect(
            worst <= 0.0,
            format!("{call}: profile within its error bands of {want:.4} (worst excess {worst:.1e})"),
        );
    }
    c
}

fn c4() -> Check {
    let mut c = Check::new();
    let (a, secs) = timed_density("helicoid");
    c.expect(a.verdict.kind() == "diverges", format!("helicoid: {}", a.verdict.kind()));
    let p = &a.profile;
    let top = p.radii.len() - 1;
    let lo = (0..top)
        .min_by(|&i, &j| {
            let d = |k: usize| (p.radii[k] - p.radii[top] / 10.0).abs();
            d(i).total_cmp(&d(j))
        })
        .unwrap();
    let growth = p.theta[top] / p.theta[lo];
    c.expect(
        growth >= 4.0,
        format!("theta({:.0})/theta({:.0}) = {growth:.2} (≥ 4)", p.radii[top], p.radii[lo]),
    );
    c.expect(secs <= 60.0, format!("{secs:.1}s (≤ 60s)"));
    c
}

fn c5() -> Check {
    let mut c = Check::new();
    let (a, _) = timed_density("staircase(1)");
    let (lo, hi) = staircase_bands();
    match a.verdict {
        LimitVerdict::NoLimit { liminf_band, limsup_band } => {
            c.expect(
                limsup_band[0] - liminf_band[1] > 0.0,
                format!("bands {liminf_band:.4?} / {limsup_band:.4?} separated"),
            );
            let mid = |b: [f64; 2]| 0.5 * (b[0] + b[1]);
            let rel_lo = (mid(liminf_band) - lo).abs() / lo;
            let rel_hi = (mid(limsup_band) - hi).abs() / hi;
            c.expect(rel_lo <= 0.02, format!("liminf vs 2/3: {:.2}%", 100.0 * rel_lo));
            c.expect(rel_hi <= 0.02, format!("limsup vs 5/6: {:.2}%", 100.0 * rel_hi));
        }
        other => c.expect(false, format!("staircase: {} (want no_limit)", other.kind())),
    }
    c
}

fn kr_line(c: &mut Check, name: &str, kr: Option<&KrReport>, ks: &[usize], rhs_want: f64) {
    let Some(kr) = kr else {
        c.expect(false, format!("{name}: no KR report"));
        return;
    };
    let mut got: Vec<usize> = kr.components.iter().map(|p| p.k).collect();
    got.sort_unstable();
    let lhs = kr.lhs.value().map_or(f64::NAN, |v| v.0);
    let rhs = kr.rhs.unwrap_or(f64::NAN);
    c.expect(
        kr.agree && got == ks,
        format!("{name}: lhs {lhs:.4} rhs {rhs:.4} ± {:.1e}, k {got:?} (want {ks:?}, rhs {rhs_want:.4})", kr.rhs_err.unwrap_or(f64::NAN)),
    );
}

fn c6(table: &BTreeMap<&str, Classification>) -> Check {
    let mut c = Check::new();
    kr_line(&mut c, "plane", table["plane"].evidence.kr.as_ref(), &[1], 1.0);
    kr_line(&mut c, "parabola", table["parabola"].evidence.kr.as_ref(), &[2], 1.0);
    kr_line(&mut c, "catenoid", table["catenoid"].evidence.kr.as_ref(), &[2], 2.0);
    kr_line(&mut c, "alpha_cone(1)", table["alpha_cone"].evidence.kr.as_ref(), &[1, 1], SQRT_2);
    c
}

fn c7() -> Check {
    let mut c = Check::new();
    for (call, degree, tol) in [("complex_parabola", 2, 0.04), ("complex_cubic", 3, 0.06)] {
        let r = degree_density_check(&scene(call), degree, 1e-3).unwrap_or_else(|e| panic!("{call}: {e}"));
        converges_near(&mut c, call, &r.theta_inf, degree as f64, tol);
        c.expect(r.matches_degree, format!("{call}: matches degree {degree}"));
    }
    c
}

fn c8() -> Check {
    let mut c = Check::new();
    let cat = tangent_cone_infinity(&scene("catenoid"), &ConeOptions::at_infinity(0.05, 0)).unwrap();
    let off_plane = cat
        .fitted_subspace
        .as_ref()
        .map_or(f64::INFINITY, |s| s.basis.iter().map(|b| b[2].abs()).fold(0.0, f64::max));
    c.expect(
        cat.is_linear_subspace && cat.max_residual <= 1e-2 && off_plane <= 1e-2,
        format!("catenoid: linear, residual {:.1e}, basis z-component {off_plane:.1e}", cat.max_residual),
    );
    for call in ["parabola", "alpha_cone"] {
        let k = tangent_cone_infinity(&scene(call), &ConeOptions::at_infinity(0.05, 0)).unwrap();
        c.expect(
            !k.is_linear_subspace,
            format!("{call}: not linear (two_sided {}, residual {:.2})", k.two_sided, k.max_residual),
        );
    }
    c
}

fn c9() -> Check {
    let mut c = Check::new();
    for (call, dir, want) in [
        ("catenoid", vec![1.0, 0.0, 0.0], 2),
        ("plane", vec![1.0, 0.0, 0.0], 1),
        ("parabola", vec![0.0, 1.0], 2),
    ] {
        let r = multiplicity_auto(&scene(call), &dir, &MultiplicityOptions::default()).unwrap();
        let refinements = r.bands.iter().filter(|b| b.k == want).count();
        c.expect(
            r.k == want && r.stable && refinements >= 3,
            format!("{call}: k = {} at R = {}, {refinements}/{} (eta, R) bands agree", r.k, r.r, r.bands.len()),
        );
    }
    c
}

fn c10(table: &BTreeMap<&str, Classification>) -> Check {
    let mut c = Check::new();
    let pmb = lne_at_infinity(&scene("plane_minus_ball"), &LneOptions::default()).unwrap();
    match pmb.verdict {
        LneVerdict::Lne { c_bound } => c.expect(c_bound <= PI * 1.1, format!("plane_minus_ball: lne, C = {c_bound:.3} (≤ 1.1π)")),
        ref v => c.expect(false, format!("plane_minus_ball: {}", v.kind())),
    }
    let Some(cat) = table["catenoid"].evidence.lne.as_ref() else {
        c.expect(false, "catenoid: no LNE report");
        return c;
    };
    match &cat.verdict {
        LneVerdict::NotLne { growth } => c.expect(
            growth.iter().all(|&g| g >= 1.5),
            format!("catenoid: not_lne, growth per level {growth:.3?} (≥ 1.5)"),
        ),
        v => c.expect(false, format!("catenoid: {}", v.kind())),
    }
    let opposite = cat
        .annuli
        .iter()
        .all(|a| a.witness.as_ref().is_some_and(|w| w.x[2] * w.y[2] < 0.0));
    c.expect(opposite, "catenoid: every witness pair joins the two sheets");
    c
}

/// Failure messages the report must contain for each scene, any one of them.
fn expected_failures(name: &str) -> &'static [&'static str] {
    match name {
        "catenoid" => &["!= 1", "not normally embedded", "k = 2"],
        "alpha_cone" => &["!= 1", "not a linear subspace"],
        "parabola" => &["monotonicity", "not a linear subspace"],
        "complex_parabola" => &["!= 1", "k = 2"],
        "cubic_graph" => &["monotonicity"],
        "lawson_osserman" => &["not a single plane"],
        "helicoid" => &["diverges", "not definable"],
        "staircase" => &["no limit", "not definable"],
        "upper_catenoid_graph" => &["monotonicity"],
        _ => &[],
    }
}

fn c11(table: &BTreeMap<&str, Classification>) -> Check {
    let mut c = Check::new();
    for name in TABLE {
        let cl = &table[name];
        match (&cl.verdict, name) {
            (BernsteinVerdict::AffineSubspace { max_residual, .. }, "plane") => {
                c.expect(*max_residual < 1e-9, format!("plane: affine, residual {max_residual:.1e}"))
            }
            (v, "plane") => c.expect(false, format!("plane: {}", v.kind())),
            (BernsteinVerdict::NotAffine { failed }, _) | (BernsteinVerdict::Inconclusive { missing: failed }, _) => {
                let want = expected_failures(name);
                let named = want.iter().all(|w| failed.iter().any(|f| f.contains(w)));
                c.expect(named, format!("{name}: {} [{}]", cl.verdict.kind(), failed.join("; ")));
            }
            (v, _) => c.expect(false, format!("{name}: {}", v.kind())),
        }
    }
    for (name, want, tol) in [("catenoid", 2.0, 0.04), ("alpha_cone", SQRT_2, 0.02), ("complex_parabola", 2.0, 0.04)] {
        match table[name].evidence.theta_inf.as_ref() {
            Some(v) => converges_near(&mut c, &format!("{name} theta_inf"), v, want, tol),
            None => c.expect(false, format!("{name}: no density evidence")),
        }
    }
    let lo = table["lawson_osserman"].moser.as_ref();
    c.expect(
        lo.is_some_and(|m| m.bounded_derivative && m.normal_single_plane == Some(false) && !m.implies_affine),
        "lawson_osserman: bounded derivative, normals not a single plane",
    );
    let uc = table["upper_catenoid_graph"].moser.as_ref();
    c.expect(
        uc.is_some_and(|m| m.bounded_derivative && !m.implies_affine),
        "upper_catenoid_graph: bounded derivative, not implied affine",
    );
    c
}

fn autodiff_vs_fd(c: &mut Check) {
    let mut worst: f64 = 0.0;
    for name in infdensity::scene::builtin_names() {
        let s = scene(name);
        let Body::Charts(charts) = &s.body else { continue };
        let target = Target::Ball {
            center: vec![0.0; s.ambient_dim],
            radius: 20.0,
        };
        let set = sample_target(&s, &target, 1000, 3).unwrap();
        for smp in &set.samples {
            let chart = &charts[smp.chart];
            let mut jet = chart.jet_buffer();
            chart.jet(&smp.param, &mut jet).unwrap();
            let (m, d) = (chart.ambient(), chart.dim());
            for j in 0..d {
                let h = 1e-6 * smp.param[j].abs().max(1.0);
                let mut up = smp.param.clone();
                let mut dn = smp.param.clone();
                up[j] += h;
                dn[j] -= h;
                let (Ok(fu), Ok(fd)) = (chart.eval(&up), chart.eval(&dn)) else { continue };
                for i in 0..m {
                    let fdiff = (fu[i] - fd[i]) / (2.0 * h);
                    let ad = jet.jac[j * m + i];
                    worst = worst.max((ad - fdiff).abs() / ad.abs().max(1.0));
                }
            }
        }
    }
    c.expect(worst <= 1e-5, format!("autodiff vs central differences: {worst:.1e} (≤ 1e-5)"));
}

fn mu_closed_form(c: &mut Check) {
    // V_n = 2π/n V_(n-2), an independent route to pi^(n/2) / Gamma(n/2 + 1)
    let mut v = [1.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    for n in 2..v.len() {
        v[n] = 2.0 * PI / n as f64 * v[n - 2];
    }
    let worst = (1..v.len())
        .map(|n| (unit_ball_volume(n) - v[n]).abs() / v[n])
        .fold(0.0, f64::max);
    c.expect(worst <= 1e-12, format!("mu_n closed form, n = 1..11: {worst:.1e} (≤ 1e-12)"));
}

fn blowup_inverse(c: &mut Check) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let m = rng.random_range(1..6);
        let scale = 10f64.powf(rng.random_range(-6.0..6.0));
        let x: Vec<f64> = (0..m).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
        let Some((u, s)) = blow_up(&x) else { continue };
        let y = blow_down(&u, s);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let err = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / norm;
        worst = worst.max(err);
    }
    c.expect(worst <= 1e-12, format!("blow-up inverse: {worst:.1e} (≤ 1e-12)"));
}

fn cone_scaling(c: &mut Check) {
    let s = scene("alpha_cone(1)");
    let a1 = area_with(&s, &BallQuery::origin(3, 1.0).unwrap(), &MeasureOptions::with_tol(1e-4)).unwrap().value;
    let mut worst: f64 = 0.0;
    for r in [2.0, 7.5, 40.0] {
        let ar = area_with(&s, &BallQuery::origin(3, r).unwrap(), &MeasureOptions::with_tol(1e-4)).unwrap().value;
        worst = worst.max((ar / (r * r) - a1).abs() / a1);
    }
    c.expect(worst <= 2e-3, format!("cone scaling |C ∩ B_r| = r² |C ∩ B_1|: {worst:.1e} (≤ 2e-3)"));
}

fn graph_dominates_euclid(c: &mut Check) {
    let s = scene("catenoid");
    let target = Target::Ball {
        center: vec![0.0; 3],
        radius: 10.0,
    };
    let pts = sample_target(&s, &target, 3000, 5).unwrap().points();
    let g = NeighborGraph::new(pts.clone(), 1.0);
    let mut violations = 0;
    let mut checked = 0;
    for src in (0..pts.len()).step_by(150) {
        for (j, d) in g.distances_from(src).into_iter().enumerate() {
            if d.is_finite() {
                checked += 1;
                if d < infdensity::linalg::dist(&pts[src], &pts[j]) {
                    violations += 1;
                }
            }
        }
    }
    c.expect(violations == 0, format!("graph distance ≥ Euclidean: {violations} of {checked} pairs violate"));
}

fn seed_reproducibility(c: &mut Check) {
    let s = scene("catenoid");
    let run = |seed| {
        let a = infdensity::asymptotics::profile_with(&s, &[0.0; 3], 1.0, 50.0, 8, &MeasureOptions { seed, ..MeasureOptions::with_tol(1e-2) }).unwrap();
        let cone = tangent_cone_infinity(&s, &ConeOptions::at_infinity(0.05, seed)).unwrap();
        serde_json::to_string(&(a, cone)).unwrap()
    };
    c.expect(run(4) == run(4), "seed reproducibility: repeated runs are bitwise identical");
}

fn c12() -> Check {
    let mut c = Check::new();
    autodiff_vs_fd(&mut c);
    mu_closed_form(&mut c);
    blowup_inverse(&mut c);
    cone_scaling(&mut c);
    graph_dominates_euclid(&mut c);
    seed_reproducibility(&mut c);
    c
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let start = Instant::now();
    let opts = ClassifyOptions::default();
    let table: BTreeMap<&str, Classification> = TABLE
        .iter()
        .map(|&name| (name, classify(&scene(name), &opts).unwrap_or_else(|e| panic!("{name}: {e}"))))
        .collect();

    let criteria: Vec<(&str, Box<dyn Fn() -> Check + '_>)> = vec![
        ("parabola density at infinity", Box::new(c1)),
        ("catenoid density at infinity", Box::new(c2)),
        ("alpha cone densities and constant profile", Box::new(c3)),
        ("helicoid density diverges", Box::new(c4)),
        ("staircase has no limit", Box::new(c5)),
        ("density equals the multiplicity sum", Box::new(|| c6(&table))),
        ("degree equals density", Box::new(c7)),
        ("tangent cone linearity", Box::new(c8)),
        ("relative multiplicities", Box::new(c9)),
        ("normal embedding at infinity", Box::new(|| c10(&table))),
        ("classifier table", Box::new(|| c11(&table))),
        ("property suites", Box::new(c12)),
    ];
    let mut failed = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let check = run();
        let tag = if check.ok { "PASS" } else { "FAIL" };
        println!("[{tag}] {:>2}. {title} ({:.1}s)", i + 1, t.elapsed().as_secs_f64());
        for note in &check.notes {
            println!("         {note}");
        }
        failed += usize::from(!check.ok);
    }
    println!(
        "acceptance: {} passed, {failed} failed, {:.0}s",
        criteria.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
