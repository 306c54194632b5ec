//! Resonant single-dipole transmission through the coupler in the
//! low-excitation limit.
//!
//! With fiber fractions `f_m`, beta-factors `g_m`, propagation constants `b_m`
//! and emission phases `p_m`, the fiber output amplitude at `z` for a dipole
//! at `z0` is
//!
//! ```text
//! t = sum f_m e^{i b_m z}
//!     - 2 L(d) [sum sqrt(f_m g_m) e^{i p_m} e^{i b_m (z - z0)}]
//!              [sum sqrt(f_m g_m) e^{-i p_m} e^{i b_m z0}],   L(d) = 1 / (1 - 2 i d)
//! ```
//!
//! and `F = |t|^2`, `F0 = |sum f_m e^{i b_m z}|^2`.

use std::f64::consts::PI;

use qdc_sparse::C64;
use serde::Serialize;

use crate::error::{CouplerError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelMode {
    pub f: f64,
    pub gamma: f64,
    /// rad/um
    pub beta: f64,
    /// rad
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplerChannel {
    pub modes: Vec<ChannelMode>,
}

pub const F_SUM_SLACK: f64 = 0.02;

impl CouplerChannel {
    pub fn new(modes: Vec<ChannelMode>) -> Result<Self> {
        let ch = Self { modes };
        ch.validate()?;
        Ok(ch)
    }

    pub fn single(f: f64, gamma: f64) -> Self {
        Self {
            modes: vec![ChannelMode {
                f,
                gamma,
                beta: 0.0,
                phi: 0.0,
            }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut fsum = 0.0;
        let mut gsum = 0.0;
        for m in &self.modes {
            if !(0.0..=1.0 + FRACTION_TOL).contains(&m.f) {
                return Err(CouplerError::InvalidParameter(format!("fiber fraction {} outside [0, 1]", m.f)));
            }
            if !(0.0..=0.5 + 1e-12).contains(&m.gamma) {
                return Err(CouplerError::InvalidParameter(format!(
                    "beta-factor {} outside [0, 0.5]",
                    m.gamma
                )));
            }
            if !m.beta.is_finite() || !m.phi.is_finite() {
                return Err(CouplerError::InvalidParameter("non-finite beta or phase".into()));
            }
            fsum += m.f;
            gsum += 2.0 * m.gamma;
        }
        if fsum > 1.0 + F_SUM_SLACK {
            return Err(CouplerError::InvalidParameter(format!("fiber fractions sum to {fsum}")));
        }
        if gsum > 1.0 + 1e-12 {
            return Err(CouplerError::InvalidParameter(format!("beta-factors sum to {}", gsum / 2.0)));
        }
        Ok(())
    }

    /// Beat length `pi / |b_0 - b_1|` of the first two modes.
    pub fn beat_length_um(&self) -> Option<f64> {
        match self.modes.as_slice() {
            [a, b, ..] if a.beta != b.beta => Some(PI / (a.beta - b.beta).abs()),
            _ => None,
        }
    }

    fn off_amplitude(&self, z: f64) -> C64 {
        self.modes
            .iter()
            .map(|m| C64::from_polar(m.f, m.beta * z))
            .sum()
    }

    /// `sum sqrt(f g) e^{i p} e^{i b z}`: emission collected after distance `z`.
    pub fn emission_amplitude(&self, z: f64) -> C64 {
        self.modes
            .iter()
            .map(|m| C64::from_polar((m.f * m.gamma).sqrt(), m.phi + m.beta * z))
            .sum()
    }

    /// `sum sqrt(f g) e^{-i p} e^{i b z0}`: drive seen by a dipole at `z0`.
    fn drive_amplitude(&self, z0: f64) -> C64 {
        self.modes
            .iter()
            .map(|m| C64::from_polar((m.f * m.gamma).sqrt(), m.beta * z0 - m.phi))
            .sum()
    }

    pub fn output_amplitude(&self, z: f64, z0: f64, detuning: f64) -> C64 {
        self.off_amplitude(z) - 2.0 * lorentzian(detuning) * self.emission_amplitude(z - z0) * self.drive_amplitude(z0)
    }
}

const FRACTION_TOL: f64 = 0.01;

/// `1 / (1 - 2 i d)` with `d` in units of the total linewidth.
pub fn lorentzian(detuning: f64) -> C64 {
    C64::new(1.0, 0.0) / C64::new(1.0, -2.0 * detuning)
}

pub fn off_resonance(ch: &CouplerChannel, z_um: f64) -> f64 {
    ch.off_amplitude(z_um).norm_sqr()
}

pub fn on_resonance(ch: &CouplerChannel, z_um: f64, z0_um: f64, detuning: f64) -> f64 {
    ch.output_amplitude(z_um, z0_um, detuning).norm_sqr()
}

/// `f^2 [1 - 4 g (1 - g)]`.
pub fn single_mode_transmission(f: f64, gamma: f64) -> f64 {
    f * f * (1.0 - 4.0 * gamma * (1.0 - gamma))
}

/// Sentinel for `F / F0` where `F0` vanishes.
pub const RATIO_INFINITE: f64 = f64::INFINITY;
pub const F0_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct TransmissionScan {
    pub z_um: Vec<f64>,
    pub z0_um: f64,
    pub detuning: f64,
    pub f0: Vec<f64>,
    pub f: Vec<f64>,
    /// `(F - F0) / F0`; `NaN` where `F0` vanishes.
    pub dt: Vec<f64>,
    /// `F / F0`, [`RATIO_INFINITE`] where `F0` vanishes.
    pub ratio: Vec<f64>,
    pub dt_min: (f64, f64),
    pub dt_max: (f64, f64),
    /// Indices with vanishing `F0`.
    pub flagged: Vec<usize>,
}

impl TransmissionScan {
    /// Largest `|10 log10(F/F0)|` over finite ratios.
    pub fn max_contrast_db(&self) -> f64 {
        self.ratio
            .iter()
            .filter(|r| r.is_finite() && **r > 0.0)
            .map(|r| (10.0 * r.log10()).abs())
            .fold(0.0, f64::max)
    }
}

pub fn contrast_scan(ch: &CouplerChannel, z_um: &[f64], z0_um: f64, detuning: f64) -> TransmissionScan {
    let mut scan = TransmissionScan {
        z_um: z_um.to_vec(),
        z0_um,
        detuning,
        f0: Vec::with_capacity(z_um.len()),
        f: Vec::with_capacity(z_um.len()),
        dt: Vec::with_capacity(z_um.len()),
        ratio: Vec::with_capacity(z_um.len()),
        dt_min: (f64::INFINITY, f64::NAN),
        dt_max: (f64::NEG_INFINITY, f64::NAN),
        flagged: Vec::new(),
    };
    for (k, &z) in z_um.iter().enumerate() {
        let f0 = off_resonance(ch, z);
        let f = on_resonance(ch, z, z0_um, detuning);
        scan.f0.push(f0);
        scan.f.push(f);
        if f0 > F0_FLOOR {
            let dt = (f - f0) / f0;
            scan.dt.push(dt);
            scan.ratio.push(f / f0);
            if dt < scan.dt_min.0 {
                scan.dt_min = (dt, z);
            }
            if dt > scan.dt_max.0 {
                scan.dt_max = (dt, z);
            }
        } else {
            scan.dt.push(f64::NAN);
            scan.ratio.push(RATIO_INFINITE);
            scan.flagged.push(k);
        }
    }
    scan
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Extinction {
    /// `1 - max F/F0` over all scanned `(z, z0)`.
    pub worst_case: f64,
    pub z_um: f64,
    pub z0_um: f64,
}

/// Worst-case resonant extinction over coupler length and dipole position.
/// Positions are scanned over one period of the slowest beat (`samples` per
/// axis).
pub fn engineered_extinction(ch: &CouplerChannel, samples: usize) -> Extinction {
    let mut min_dbeta = f64::INFINITY;
    for (a, ma) in ch.modes.iter().enumerate() {
        for mb in &ch.modes[a + 1..] {
            let d = (ma.beta - mb.beta).abs();
            if d > 0.0 {
                min_dbeta = min_dbeta.min(d);
            }
        }
    }
    let period = if min_dbeta.is_finite() { 2.0 * PI / min_dbeta } else { 1.0 };
    let n = samples.max(2);
    let mut worst = Extinction {
        worst_case: f64::INFINITY,
        z_um: 0.0,
        z0_um: 0.0,
    };
    for a in 0..n {
        let z = period * a as f64 / n as f64;
        let f0 = off_resonance(ch, z);
        if f0 <= F0_FLOOR {
            continue;
        }
        for b in 0..n {
            let z0 = period * b as f64 / n as f64;
            let ext = 1.0 - on_resonance(ch, z, z0, 0.0) / f0;
            if ext < worst.worst_case {
                worst = Extinction {
                    worst_case: ext,
                    z_um: z,
                    z0_um: z0,
                };
            }
        }
    }
    worst
}

pub fn lineshape(ch: &CouplerChannel, z_um: f64, z0_um: f64, detunings: &[f64]) -> Vec<f64> {
    detunings.iter().map(|&d| on_resonance(ch, z_um, z0_um, d)).collect()
}

/// Full width of `|F(d) - F0|` at half its extremum, from a dense sample of
/// `F(d)`; `None` if the response never falls below half within the range.
pub fn response_width(detunings: &[f64], f: &[f64], f0: f64) -> Option<f64> {
    let dev: Vec<f64> = f.iter().map(|v| (v - f0).abs()).collect();
    let (peak_k, &peak) = dev.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    let half = 0.5 * peak;
    let crossing = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let mut prev = peak_k;
        for k in range {
            if dev[k] <= half {
                let t = (dev[prev] - half) / (dev[prev] - dev[k]);
                return Some(detunings[prev] + t * (detunings[k] - detunings[prev]));
            }
            prev = k;
        }
        None
    };
    let hi = crossing(&mut (peak_k + 1..dev.len()))?;
    let lo = crossing(&mut (0..peak_k).rev())?;
    Some(hi - lo)
}

/// Real part of the double sum `sum_{m m'} c_m c_m'^* e^{i (b_m - b_m') (z - z0)}`
/// and the magnitude of its imaginary part, for `c_m = sqrt(f_m g_m) e^{i p_m}`.
pub fn interference_sum(ch: &CouplerChannel, dz: f64) -> (f64, f64) {
    let mut s = C64::new(0.0, 0.0);
    for a in &ch.modes {
        for b in &ch.modes {
            let ca = C64::from_polar((a.f * a.gamma).sqrt(), a.phi);
            let cb = C64::from_polar((b.f * b.gamma).sqrt(), b.phi);
            s += ca * cb.conj() * C64::from_polar(1.0, (a.beta - b.beta) * dz);
        }
    }
    (s.re, s.im.abs())
}
