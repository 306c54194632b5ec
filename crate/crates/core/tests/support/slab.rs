//! Symmetric dielectric slab in air: exact TE0 mode and its power flux.

#![allow(dead_code)]

use std::f64::consts::PI;

use qdcoupler::geometry::PermittivityMap;
use qdcoupler::modesolver::{solve_modes, Family, SolverConfig, Supermode};

use super::fiber::{bisect, LAMBDA};

pub struct Slab {
    pub n_eff: f64,
    pub kappa: f64,
    pub decay: f64,
}

pub const SLAB_WIDTH_NM: f64 = 256.0;
pub const SLAB_INDEX: f64 = 3.406;

/// Fundamental TE mode of a symmetric slab in air.
pub fn slab_te0() -> Slab {
    let k0 = 2.0 * PI / LAMBDA;
    let half = 0.5 * SLAB_WIDTH_NM * 1e-3;
    let kap = |n: f64| k0 * (SLAB_INDEX * SLAB_INDEX - n * n).sqrt();
    let gam = |n: f64| k0 * (n * n - 1.0).sqrt();
    // kappa tan(kappa d/2) = gamma on the first branch
    let lo = (SLAB_INDEX * SLAB_INDEX - (PI / (2.0 * half * k0)).powi(2)).max(1.0).sqrt() + 1e-12;
    let n = bisect(lo, SLAB_INDEX - 1e-12, |n| kap(n) * (kap(n) * half).tan() - gam(n));
    Slab {
        n_eff: n,
        kappa: kap(n),
        decay: gam(n),
    }
}

pub fn slab_map(step: f64, rows: usize) -> PermittivityMap {
    let nx = (3000.0 / step) as usize;
    let mut map = PermittivityMap::from_function(
        nx,
        rows,
        step,
        step,
        -(nx as f64) * 0.5 * step,
        0.0,
        8,
        true,
        |x, _| {
            if x.abs() <= 0.5 * SLAB_WIDTH_NM {
                SLAB_INDEX * SLAB_INDEX
            } else {
                1.0
            }
        },
    );
    map.wavelength_um = LAMBDA;
    map
}

pub fn slab_mode(step: f64, rows: usize) -> Supermode {
    let map = slab_map(step, rows);
    let basis = solve_modes(&map, &SolverConfig::default().with_window(2.0, 3.4)).unwrap();
    let top = basis.family(Family::HEy).next().unwrap().clone();
    top
}

/// With `Ey` equal to 1 on the slab axis, `S = n_eff * Ly * int |Ey|^2 dx`.
pub fn slab_flux(s: &Slab, height_um: f64) -> f64 {
    let a = 0.5 * SLAB_WIDTH_NM * 1e-3;
    let inside = a + (2.0 * s.kappa * a).sin() / (2.0 * s.kappa);
    let outside = (s.kappa * a).cos().powi(2) / s.decay;
    s.n_eff * height_um * (inside + outside)
}

