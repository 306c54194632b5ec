//! Time-domain reference for the resonant response: a driven two-level
//! system coupled to chiral supermode channels, integrated with RK4 until
//! steady state.
//!
//! Units: total decay rate `G = 1`. Channel `m` couples with
//! `g_m = sqrt(g_m G) e^{i p_m}`. A weak coherent fiber input of amplitude
//! `eps` projects onto supermode `m` as `a_m = eps sqrt(f_m) e^{i b_m z0}` at the
//! dipole, giving the Rabi term `W = -sum g_m^* a_m`, and
//!
//! ```text
//! s' = (i d - 1/2) s - i W w
//! w' = -(1 + w) + 2 i (W s^* - W^* s)
//! ```
//!
//! The fiber output at `z` is `sum sqrt(f_m) e^{i b_m (z - z0)} (a_m - i g_m s)`.

#![allow(dead_code)]

use qdcoupler::transmission::CouplerChannel;
use qdcoupler::C64;

const I: C64 = C64::new(0.0, 1.0);

pub struct Oracle {
    /// Rabi amplitude `|W|` relative to the total linewidth.
    pub drive: f64,
    pub dt: f64,
    pub t_end: f64,
}

impl Default for Oracle {
    fn default() -> Self {
        Self {
            drive: 1e-3,
            dt: 0.01,
            t_end: 45.0,
        }
    }
}

impl Oracle {
    /// Returns `(F, W)`: transmitted fiber power normalized to the input, and
    /// the Rabi amplitude that was applied.
    pub fn transmission(&self, ch: &CouplerChannel, z: f64, z0: f64, detuning: f64) -> (f64, f64) {
        let g: Vec<C64> = ch.modes.iter().map(|m| C64::from_polar(m.gamma.sqrt(), m.phi)).collect();
        let unit: Vec<C64> = ch
            .modes
            .iter()
            .map(|m| C64::from_polar(m.f.sqrt(), m.beta * z0))
            .collect();
        let w_unit: C64 = -g.iter().zip(&unit).map(|(g, a)| g.conj() * a).sum::<C64>();
        // scale the input so the drive has the requested strength
        let eps = if w_unit.norm() > 0.0 { self.drive / w_unit.norm() } else { 1.0 };
        let rabi = w_unit * eps;
        let rhs = |s: C64, w: f64| -> (C64, f64) {
            let ds = (I * detuning - 0.5) * s - I * rabi * w;
            let dw = -(1.0 + w) + (2.0 * I * (rabi * s.conj() - rabi.conj() * s)).re;
            (ds, dw)
        };
        let (mut s, mut w) = (C64::new(0.0, 0.0), -1.0);
        let steps = (self.t_end / self.dt).ceil() as usize;
        let h = self.dt;
        for _ in 0..steps {
            let (k1s, k1w) = rhs(s, w);
            let (k2s, k2w) = rhs(s + 0.5 * h * k1s, w + 0.5 * h * k1w);
            let (k3s, k3w) = rhs(s + 0.5 * h * k2s, w + 0.5 * h * k2w);
            let (k4s, k4w) = rhs(s + h * k3s, w + h * k3w);
            s += h / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
            w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        }
        let out: C64 = ch
            .modes
            .iter()
            .zip(&g)
            .zip(&unit)
            .map(|((m, g), a)| C64::from_polar(m.f.sqrt(), m.beta * (z - z0)) * (eps * a - I * g * s))
            .sum();
        (out.norm_sqr() / (eps * eps), rabi.norm())
    }
}
