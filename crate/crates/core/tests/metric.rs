use infdensity::metric::{inner_distance, GraphOptions};
use infdensity::scene::builtin_scene;

#[test]
fn plane_inner_distance_is_euclidean() {
    let s = builtin_scene("plane").unwrap();
    let opts = GraphOptions {
        h: Some(0.5),
        ..Default::default()
    };
    let d = inner_distance(&s, &[0.0, 0.0, 0.0], &[3.0, 4.0, 0.0], &opts).unwrap();
    assert!((d - 5.0).abs() <= 0.1, "{d}");
}

#[test]
fn catenoid_sheets_are_joined_through_the_neck() {
    // meridian from height +z down to the neck and back: 2 sinh(z) = 2 sqrt(rho^2 - 1)
    let s = builtin_scene("catenoid").unwrap();
    let rho: f64 = 50.0;
    let z = rho.acosh();
    let exact = 2.0 * (rho * rho - 1.0).sqrt();
    let d = inner_distance(&s, &[rho, 0.0, z], &[rho, 0.0, -z], &GraphOptions::default()).unwrap();
    assert!(d >= 0.98 * exact && d <= 1.1 * exact, "{d} vs {exact}");
    assert!(d / (2.0 * z) > 10.0);
}

#[test]
fn points_off_the_set_are_rejected() {
    let s = builtin_scene("plane").unwrap();
    assert!(inner_distance(&s, &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0], &GraphOptions::default()).is_err());
}
