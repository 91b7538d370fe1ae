use infdensity::cones::{blow_down, blow_up};
use infdensity::expr::{eval, parse_expr};
use infdensity::linalg::dist;
use infdensity::measure::{area_with, unit_ball_volume, BallQuery, MeasureOptions};
use infdensity::metric::NeighborGraph;
use infdensity::scene::{builtin_scene, sample_target, Body, Target};
use proptest::prelude::*;
use std::collections::HashMap;

fn cloud() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-5.0..5.0f64, 2), 20..120)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn graph_distance_dominates_euclid(points in cloud(), h in 0.5..3.0f64) {
        let g = NeighborGraph::new(points.clone(), h);
        for src in [0, points.len() / 2] {
            for (j, d) in g.distances_from(src).into_iter().enumerate() {
                if d.is_finite() {
                    prop_assert!(d >= dist(&points[src], &points[j]));
                }
            }
        }
    }

    #[test]
    fn graph_distance_triangle(points in cloud(), h in 0.5..3.0f64) {
        let g = NeighborGraph::new(points.clone(), h);
        let n = points.len();
        let (a, b) = (0, n / 3);
        let da = g.distances_from(a);
        let db = g.distances_from(b);
        for c in 0..n {
            if da[b].is_finite() && db[c].is_finite() {
                prop_assert!(da[c] <= da[b] + db[c] + 1e-12);
            }
        }
    }

    #[test]
    fn refinement_never_lengthens(points in cloud(), extra in cloud(), h in 0.5..3.0f64) {
        let coarse = NeighborGraph::new(points.clone(), h);
        let mut all = points.clone();
        all.extend(extra);
        let fine = NeighborGraph::new(all, h);
        let dc = coarse.distances_from(0);
        let df = fine.distances_from(0);
        for j in 0..points.len() {
            prop_assert!(df[j] <= dc[j]);
        }
    }

    #[test]
    fn blow_up_round_trip(x in prop::collection::vec(-1e6..1e6f64, 1..6)) {
        prop_assume!(x.iter().any(|v| v.abs() > 1e-9));
        let (u, s) = blow_up(&x).unwrap();
        prop_assert!((u.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
        let y = blow_down(&u, s);
        let scale = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (a, b) in x.iter().zip(&y) {
            prop_assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn sampling_is_seeded(seed in 0u64..1000) {
        let s = builtin_scene("catenoid").unwrap();
        let t = Target::Annulus { center: vec![0.0; 3], lo: 5.0, hi: 20.0 };
        let a = sample_target(&s, &t, 50, seed).unwrap();
        let b = sample_target(&s, &t, 50, seed).unwrap();
        prop_assert_eq!(a.samples, b.samples);
    }

    #[test]
    fn printed_expressions_reparse(a in -3.0..3.0f64, b in 0.1..3.0f64, x in -2.0..2.0f64, y in -2.0..2.0f64) {
        let text = format!("{a}*x^3 - sin(x*y)/({b} + y^2) + exp(-x^2)*sqrt(1 + y^2) + atan(x - y)");
        let e = parse_expr(&text).unwrap();
        let again = parse_expr(&e.to_string()).unwrap();
        let env: HashMap<String, f64> = [("x".to_string(), x), ("y".to_string(), y)].into();
        let direct = a * x.powi(3) - (x * y).sin() / (b + y * y) + (-x * x).exp() * (1.0 + y * y).sqrt() + (x - y).atan();
        let v = eval(&e, &env).unwrap();
        prop_assert!((v - direct).abs() <= 1e-12 * direct.abs().max(1.0));
        prop_assert_eq!(v.to_bits(), eval(&again, &env).unwrap().to_bits());
    }
}

#[test]
fn unit_ball_volume_closed_form() {
    let mut v = vec![1.0, 2.0];
    for n in 2..16 {
        v.push(2.0 * std::f64::consts::PI / n as f64 * v[n - 2]);
    }
    for (n, want) in v.iter().enumerate().skip(1) {
        let got = unit_ball_volume(n);
        assert!((got - want).abs() <= 1e-12 * want, "n = {n}: {got} vs {want}");
    }
}

#[test]
fn jacobians_match_central_differences() {
    for name in infdensity::scene::builtin_names() {
        let s = builtin_scene(name).unwrap();
        let Body::Charts(charts) = &s.body else { continue };
        let target = Target::Ball {
            center: vec![0.0; s.ambient_dim],
            radius: 30.0,
        };
        for smp in sample_target(&s, &target, 1000, 17).unwrap().samples {
            let chart = &charts[smp.chart];
            let mut jet = chart.jet_buffer();
            chart.jet(&smp.param, &mut jet).unwrap();
            let m = chart.ambient();
            for j in 0..chart.dim() {
                let h = 1e-6 * smp.param[j].abs().max(1.0);
                let mut up = smp.param.clone();
                let mut dn = smp.param.clone();
                up[j] += h;
                dn[j] -= h;
                let (Ok(fu), Ok(fd)) = (chart.eval(&up), chart.eval(&dn)) else { continue };
                for i in 0..m {
                    let fdiff = (fu[i] - fd[i]) / (2.0 * h);
                    let ad = jet.jac[j * m + i];
                    assert!(
                        (ad - fdiff).abs() <= 1e-5 * ad.abs().max(1.0),
                        "{name} at {:?}: d{i}/d{j} {ad} vs {fdiff}",
                        smp.param
                    );
                }
            }
        }
    }
}

#[test]
fn cone_areas_scale_with_radius() {
    for (call, n) in [("alpha_cone(1)", 2.0), ("alpha_cone(3)", 2.0), ("plane", 2.0)] {
        let s = builtin_scene(call).unwrap();
        let opts = MeasureOptions::with_tol(1e-4);
        let unit = area_with(&s, &BallQuery::origin(3, 1.0).unwrap(), &opts).unwrap().value;
        for r in [0.3, 4.0, 25.0] {
            let a = area_with(&s, &BallQuery::origin(3, r).unwrap(), &opts).unwrap().value;
            let rel = (a / r.powf(n) - unit).abs() / unit;
            assert!(rel <= 2e-3, "{call} r = {r}: relative {rel}");
        }
    }
}
