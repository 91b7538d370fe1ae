//! Cross-module relations that must hold on the built-in scenes.

use infdensity::asymptotics::density_at_infinity;
use infdensity::cones::{tangent_cone_infinity, ConeOptions};
use infdensity::metric::{lne_at_infinity, LneOptions};
use infdensity::multiplicity::{multiplicity_auto, simple_directions, MultiplicityOptions};
use infdensity::scene::builtin_scene;

// normally embedded at infinity forces one sheet along every simple direction
#[test]
fn lne_scenes_have_unit_multiplicity() {
    for name in ["plane", "plane_minus_ball", "cubic_graph", "upper_catenoid_graph"] {
        let s = builtin_scene(name).unwrap();
        let lne = lne_at_infinity(&s, &LneOptions::default()).unwrap();
        assert_eq!(lne.verdict.kind(), "lne", "{name}");
        let cone = tangent_cone_infinity(&s, &ConeOptions::at_infinity(0.05, 0)).unwrap();
        let dirs = simple_directions(&s, &cone, 3, 0);
        assert!(!dirs.is_empty(), "{name}");
        for v in dirs {
            let k = multiplicity_auto(&s, &v, &MultiplicityOptions::default()).unwrap();
            assert_eq!(k.k, 1, "{name} along {v:?}");
        }
    }
}

// and its density equals that of the tangent cone, a plane here
#[test]
fn lne_density_matches_cone() {
    for name in ["plane", "upper_catenoid_graph"] {
        let s = builtin_scene(name).unwrap();
        let (v, err) = density_at_infinity(&s, 1e-3).unwrap().verdict.value().unwrap();
        assert!((v - 1.0).abs() <= 1e-2 + err, "{name}: {v}");
    }
}

#[test]
fn catenoid_two_sheets_and_not_lne() {
    let s = builtin_scene("catenoid").unwrap();
    let k = multiplicity_auto(&s, &[0.0, 1.0, 0.0], &MultiplicityOptions::default()).unwrap();
    assert_eq!(k.k, 2);
    let lne = lne_at_infinity(&s, &LneOptions::default()).unwrap();
    assert_eq!(lne.verdict.kind(), "not_lne");
}
