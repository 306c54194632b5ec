use std::f64::consts::PI;

use qdcoupler::geometry::*;
use qdcoupler::CouplerError;

const N_CH2: f64 = 3.406 * 3.406;
const N_F2: f64 = 1.45 * 1.45;

fn grid(step: f64) -> GridSpec {
    GridSpec::default().with_step(step)
}

#[test]
fn default_paper_geometry() {
    let spec = CrossSectionSpec::default();
    assert_eq!(spec.channel_thickness_nm, 256.0);
    assert_eq!(spec.channel_index, 3.406);
    assert_eq!(spec.fiber_radius_nm, 500.0);
    assert_eq!(spec.fiber_index, 1.45);
    assert_eq!(spec.background_index, 1.0);
    assert_eq!(spec.wavelength_um, 1.3);
    assert_eq!(spec.gap_nm, 0.0);
    validate(&spec, &grid(10.0)).unwrap();
}

#[test]
fn zero_width_is_rejected() {
    let err = validate(&CrossSectionSpec::default().with_width(0.0), &grid(10.0)).unwrap_err();
    assert!(matches!(err, CouplerError::InvalidGeometry(_)));
    assert!(err.to_string().contains("channel_width must be positive"), "{err}");
}

#[test]
fn small_window_is_rejected() {
    let g = GridSpec {
        window_x_um: 0.8,
        ..grid(10.0)
    };
    let err = validate(&CrossSectionSpec::default(), &g).unwrap_err();
    assert!(err.to_string().contains("window must enclose geometry"), "{err}");
}

#[test]
fn thin_margin_is_rejected() {
    let g = GridSpec {
        window_x_um: 2.5,
        ..grid(10.0)
    };
    assert!(validate(&CrossSectionSpec::default(), &g).is_err());
}

#[test]
fn bad_indices_and_negative_gap_rejected() {
    let spec = CrossSectionSpec {
        fiber_index: 0.9,
        ..Default::default()
    };
    assert!(validate(&spec, &grid(10.0)).is_err());
    let spec = CrossSectionSpec {
        gap_nm: -5.0,
        ..Default::default()
    };
    assert!(validate(&spec, &grid(10.0)).is_err());
}

#[test]
fn uniform_spec_gives_constant_map() {
    let spec = CrossSectionSpec {
        channel_index: 1.45,
        fiber_index: 1.45,
        background_index: 1.45,
        ..Default::default()
    };
    let map = rasterize(&spec, &grid(20.0)).unwrap();
    for v in map.eps_x.iter().chain(&map.eps_y).chain(&map.eps_z) {
        assert_eq!(*v, N_F2);
    }
}

#[test]
fn interior_cells_take_material_values() {
    let spec = CrossSectionSpec::default();
    let map = rasterize(&spec, &grid(10.0)).unwrap();
    let (fx, fy) = spec.fiber_center_nm();
    let ic = map.nx / 2;
    let jc = (0..=map.ny).find(|&j| map.node_y(j).abs() < 1e-9).unwrap();
    assert!((map.ez(ic, jc) - N_CH2).abs() < 1e-12);
    assert!((map.ex(ic, jc) - N_CH2).abs() < 1e-12);
    assert!((map.ey(ic, jc) - N_CH2).abs() < 1e-12);
    let jf = (0..=map.ny).min_by(|&a, &b| (map.node_y(a) - fy).abs().total_cmp(&(map.node_y(b) - fy).abs())).unwrap();
    let i_f = ((fx - map.x0_nm) / map.dx_nm).round() as usize;
    assert!((map.ez(i_f, jf) - N_F2).abs() < 1e-12);
    assert_eq!(map.ez(0, 0), 1.0);
}

#[test]
fn values_bounded_by_materials() {
    let map = rasterize(&CrossSectionSpec::default(), &grid(10.0)).unwrap();
    let (lo, hi) = map.min_max();
    assert!(lo >= 1.0 - 1e-12);
    assert!(hi <= N_CH2 + 1e-12);
}

#[test]
fn map_is_mirror_exact() {
    for w in [190.0, 220.0, 275.0, 350.0] {
        for step in [10.0, 20.0] {
            let map = rasterize(&CrossSectionSpec::default().with_width(w), &grid(step)).unwrap();
            assert!(map.mirror_symmetric);
            assert!(map.is_mirror_exact(), "W = {w}, dx = {step}");
        }
    }
}

#[test]
fn offset_fiber_breaks_symmetry() {
    let spec = CrossSectionSpec {
        fiber_offset_nm: 100.0,
        ..Default::default()
    };
    let g = GridSpec {
        window_x_um: 3.4,
        ..grid(20.0)
    };
    let map = rasterize(&spec, &g).unwrap();
    assert!(!map.mirror_symmetric);
    assert!(!map.is_mirror_exact());
}

#[test]
fn fiber_disc_area_converges() {
    let spec = CrossSectionSpec::default();
    let exact = PI * spec.fiber_radius_nm * spec.fiber_radius_nm;
    let area = |step: f64| {
        let map = rasterize_scene(&spec, &grid(step), Scene::FiberOnly).unwrap();
        map.filled_area_nm2(1.0, N_F2)
    };
    let a20 = area(20.0);
    let a10 = area(10.0);
    assert!((a10 - a20).abs() / a10 < 0.005, "{a20} vs {a10}");
    assert!((a10 - exact).abs() / exact < 0.005, "{a10} vs {exact}");
}

#[test]
fn channel_area_converges_first_order() {
    let spec = CrossSectionSpec::default().with_width(225.0);
    let exact = spec.channel_width_nm * spec.channel_thickness_nm;
    let mut prev = f64::INFINITY;
    for step in [20.0, 10.0, 5.0] {
        let map = rasterize_scene(&spec, &grid(step), Scene::ChannelOnly).unwrap();
        let err = (map.filled_area_nm2(1.0, N_CH2) - exact).abs();
        // perimeter times a fraction of a cell
        assert!(err <= 2.0 * (spec.channel_width_nm + spec.channel_thickness_nm) * step, "dx = {step}: {err}");
        assert!(err <= prev + 1e-6);
        prev = err;
    }
}

#[test]
fn scenes_share_one_grid() {
    let spec = CrossSectionSpec::default();
    let g = grid(20.0);
    let a = rasterize_scene(&spec, &g, Scene::Coupler).unwrap();
    let b = rasterize_scene(&spec, &g, Scene::FiberOnly).unwrap();
    let c = rasterize_scene(&spec, &g, Scene::ChannelOnly).unwrap();
    assert!(a.same_grid(&b) && a.same_grid(&c));
}

#[test]
fn boundary_cell_uses_harmonic_normal_component() {
    // vertical interface through the middle of each x-cell sample
    let map = PermittivityMap::from_function(4, 4, 10.0, 10.0, -20.0, -20.0, 8, false, |x, _| {
        if x < -5.0 {
            1.0
        } else {
            4.0
        }
    });
    // Ex at x = -5 straddles the interface along its normal: harmonic mean
    let ex = map.ex(1, 2);
    assert!((ex - 1.0 / (0.5 / 1.0 + 0.5 / 4.0)).abs() < 1e-12, "{ex}");
    // Ey and Ez at node x = -10 only touch the interface at the cell edge
    assert!((map.ey(1, 2) - 1.0).abs() < 1e-9);
    assert!((map.ez(1, 2) - 1.0).abs() < 1e-9);
    // tangential component at a node sitting on the interface
    let tangential = PermittivityMap::from_function(4, 4, 10.0, 10.0, -20.0, -20.0, 8, false, |x, _| {
        if x < 0.0 {
            1.0
        } else {
            4.0
        }
    });
    assert!((tangential.ez(2, 2) - 2.5).abs() < 1e-12);
    assert!((tangential.ey(2, 2) - 2.5).abs() < 1e-12);
}
