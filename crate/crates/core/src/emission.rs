//! Emission of an embedded dipole into supermodes, beta-factors and
//! fiber-collected photoluminescence.
//!
//! Rates are referenced to the bulk rate in the channel material,
//! `G_m / G_bulk = 3 pi / (2 n_ch k0^2) |d.e_m|^2 / S_m` per direction.

use std::f64::consts::PI;

use qdc_sparse::C64;
use serde::{Deserialize, Serialize};

use crate::coupling::CouplingTable;
use crate::error::{CouplerError, Result};
use crate::geometry::CrossSectionSpec;
use crate::modesolver::{Family, ModeBasis, ModeLabel, Supermode};
use crate::transmission::{ChannelMode, CouplerChannel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DipoleAxis {
    X,
    Z,
}

impl DipoleAxis {
    pub fn unit(self) -> [f64; 3] {
        match self {
            DipoleAxis::X => [1.0, 0.0, 0.0],
            DipoleAxis::Z => [0.0, 0.0, 1.0],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DipoleAxis::X => "x",
            DipoleAxis::Z => "z",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DipoleSpec {
    pub x_nm: f64,
    pub y_nm: f64,
    pub z0_um: f64,
    /// Unit vector in the `xz` plane.
    pub orientation: [f64; 3],
}

impl DipoleSpec {
    /// Dipole at the channel centre.
    pub fn centered(axis: DipoleAxis) -> Self {
        Self {
            x_nm: 0.0,
            y_nm: 0.0,
            z0_um: 0.0,
            orientation: axis.unit(),
        }
    }

    /// In-plane orientation at angle `theta` from `x` toward `z`.
    pub fn with_angle(mut self, theta: f64) -> Self {
        self.orientation = [theta.cos(), 0.0, theta.sin()];
        self
    }

    pub fn validate(&self, spec: &CrossSectionSpec) -> Result<()> {
        let d = self.orientation;
        let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(CouplerError::InvalidDipole(format!("orientation norm {norm} != 1")));
        }
        if d[1] != 0.0 {
            return Err(CouplerError::InvalidDipole("orientation must lie in the xz plane".into()));
        }
        if self.x_nm.abs() > 0.5 * spec.channel_width_nm || self.y_nm.abs() > 0.5 * spec.channel_thickness_nm {
            return Err(CouplerError::InvalidDipole(format!(
                "position ({}, {}) nm is outside the channel",
                self.x_nm, self.y_nm
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy)]
pub struct ModeRate {
    /// `G_m / G_bulk` into one direction.
    pub rate: f64,
    /// `d . e_m(r0)` for the given direction.
    pub coupling: C64,
    /// `arg((d . e_m)^*)`.
    pub phase: f64,
}

/// Per-direction emission rate into one supermode.
pub fn guided_rate(
    mode: &Supermode,
    dipole: &DipoleSpec,
    channel_index: f64,
    wavelength_um: f64,
    direction: Direction,
) -> Result<ModeRate> {
    let e = mode
        .fields
        .electric_at(dipole.x_nm, dipole.y_nm)
        .ok_or_else(|| CouplerError::InvalidDipole("position outside the grid".into()))?;
    let d = dipole.orientation;
    let ez = match direction {
        Direction::Forward => e[2],
        Direction::Backward => -e[2],
    };
    let coupling = e[0] * d[0] + e[1] * d[1] + ez * d[2];
    let k0 = 2.0 * PI / wavelength_um;
    let rate = 3.0 * PI / (2.0 * channel_index * k0 * k0) * coupling.norm_sqr() / mode.flux;
    Ok(ModeRate {
        rate,
        coupling,
        phase: (-coupling.arg()).rem_euclid(2.0 * PI),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RadiationModel {
    /// Fixed `G_rad / G_bulk`.
    Explicit { rate: f64 },
    /// `G_rad / G_bulk` chosen so the guided fraction hits `target` at a
    /// reference geometry; `rate` holds the calibrated value.
    Calibrated { target: f64, rate: f64 },
}

impl RadiationModel {
    pub fn explicit(rate: f64) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(CouplerError::Calibration(format!("radiation rate {rate} must be >= 0")));
        }
        Ok(RadiationModel::Explicit { rate })
    }

    /// Calibrates against the total guided rate `sum_m (G_m+ + G_m-) / G_bulk`
    /// at the reference geometry.
    pub fn calibrate(target: f64, reference_guided: f64) -> Result<Self> {
        if !(target > 0.0 && target <= 1.0) {
            return Err(CouplerError::Calibration(format!("target guided fraction {target} outside (0, 1]")));
        }
        if !(reference_guided > 0.0) {
            return Err(CouplerError::Calibration(
                "reference geometry has no guided emission; target unreachable".into(),
            ));
        }
        Ok(RadiationModel::Calibrated {
            target,
            rate: reference_guided * (1.0 - target) / target,
        })
    }

    pub fn rate(&self) -> f64 {
        match *self {
            RadiationModel::Explicit { rate } | RadiationModel::Calibrated { rate, .. } => rate,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RateEntry {
    pub label: ModeLabel,
    pub forward: ModeRate,
    pub backward: ModeRate,
    pub gamma_forward: f64,
    pub gamma_backward: f64,
}

#[derive(Debug, Clone)]
pub struct RateTable {
    pub entries: Vec<RateEntry>,
    pub radiation: f64,
    /// `G / G_bulk`.
    pub total: f64,
}

impl RateTable {
    pub fn guided(&self) -> f64 {
        self.entries.iter().map(|e| e.forward.rate + e.backward.rate).sum()
    }

    pub fn guided_fraction(&self) -> f64 {
        self.guided() / self.total
    }

    pub fn get(&self, label: ModeLabel) -> Option<&RateEntry> {
        self.entries.iter().find(|e| e.label == label)
    }
}

/// Sum over guided supermodes and both directions of `G_m / G_bulk`.
pub fn guided_total(basis: &ModeBasis, dipole: &DipoleSpec, channel_index: f64) -> Result<f64> {
    let mut sum = 0.0;
    for m in basis.modes.iter().filter(|m| m.guided) {
        sum += guided_rate(m, dipole, channel_index, basis.wavelength_um, Direction::Forward)?.rate;
        sum += guided_rate(m, dipole, channel_index, basis.wavelength_um, Direction::Backward)?.rate;
    }
    Ok(sum)
}

pub fn rate_table(
    basis: &ModeBasis,
    dipole: &DipoleSpec,
    channel_index: f64,
    radiation: &RadiationModel,
) -> Result<RateTable> {
    let mut entries = Vec::new();
    for m in basis.modes.iter().filter(|m| m.guided) {
        let forward = guided_rate(m, dipole, channel_index, basis.wavelength_um, Direction::Forward)?;
        let backward = guided_rate(m, dipole, channel_index, basis.wavelength_um, Direction::Backward)?;
        entries.push(RateEntry {
            label: m.label,
            forward,
            backward,
            gamma_forward: 0.0,
            gamma_backward: 0.0,
        });
    }
    let guided: f64 = entries.iter().map(|e| e.forward.rate + e.backward.rate).sum();
    let total = guided + radiation.rate();
    for e in &mut entries {
        e.gamma_forward = if total > 0.0 { e.forward.rate / total } else { 0.0 };
        e.gamma_backward = if total > 0.0 { e.backward.rate / total } else { 0.0 };
    }
    Ok(RateTable {
        entries,
        radiation: radiation.rate(),
        total,
    })
}

/// Reduced channel for one fiber polarization and direction. The phase
/// includes the sign of the supermode's overlap with the fiber mode,
/// `p_m = arg(O_m (d . e_m)^*)`, so results do not depend on how each
/// supermode's overall sign was fixed.
pub fn channel_for(
    basis: &ModeBasis,
    coupling: &CouplingTable,
    rates: &RateTable,
    family: Family,
    direction: Direction,
) -> Result<CouplerChannel> {
    let mut modes = Vec::new();
    for m in basis.family(family).filter(|m| m.guided) {
        let c = coupling
            .get(m.label)
            .ok_or_else(|| CouplerError::MissingMode(format!("coupling entry for {}", m.label)))?;
        let r = rates
            .get(m.label)
            .ok_or_else(|| CouplerError::MissingMode(format!("rate entry for {}", m.label)))?;
        let (rate, gamma) = match direction {
            Direction::Forward => (r.forward, r.gamma_forward),
            Direction::Backward => (r.backward, r.gamma_backward),
        };
        let phase = (c.overlap * rate.coupling.conj()).arg();
        modes.push(ChannelMode {
            f: c.fraction,
            gamma,
            beta: m.beta_rad_per_um,
            phi: if phase.is_finite() { phase } else { 0.0 },
        });
    }
    Ok(CouplerChannel { modes })
}

#[derive(Debug, Clone, Serialize)]
pub struct CollectionCurve {
    pub z_um: Vec<f64>,
    pub eta_plus: Vec<f64>,
    pub eta_minus: Vec<f64>,
    pub eta_total: Vec<f64>,
    /// `sum_m f_m (g_m+ + g_m-)`.
    pub incoherent: f64,
    pub max: f64,
    pub z_at_max: f64,
}

/// `eta(z) = sum_pol |A+_pol(z)|^2 + |A-_pol(z)|^2` with
/// `A(z) = sum_m sqrt(f_m g_m) e^{i p_m} e^{i b_m z}`, collected at a common
/// distance `z` in both directions.
pub fn collection_efficiency(
    basis: &ModeBasis,
    coupling: &CouplingTable,
    rates: &RateTable,
    z_um: &[f64],
) -> Result<CollectionCurve> {
    let mut channels = Vec::new();
    for family in [Family::HEx, Family::HEy] {
        channels.push((
            channel_for(basis, coupling, rates, family, Direction::Forward)?,
            channel_for(basis, coupling, rates, family, Direction::Backward)?,
        ));
    }
    let mut curve = CollectionCurve {
        z_um: z_um.to_vec(),
        eta_plus: Vec::with_capacity(z_um.len()),
        eta_minus: Vec::with_capacity(z_um.len()),
        eta_total: Vec::with_capacity(z_um.len()),
        incoherent: 0.0,
        max: f64::NEG_INFINITY,
        z_at_max: f64::NAN,
    };
    for (fw, bw) in &channels {
        curve.incoherent += fw.modes.iter().chain(&bw.modes).map(|m| m.f * m.gamma).sum::<f64>();
    }
    for &z in z_um {
        let plus: f64 = channels.iter().map(|(fw, _)| fw.emission_amplitude(z).norm_sqr()).sum();
        let minus: f64 = channels.iter().map(|(_, bw)| bw.emission_amplitude(z).norm_sqr()).sum();
        let total = plus + minus;
        curve.eta_plus.push(plus);
        curve.eta_minus.push(minus);
        curve.eta_total.push(total);
        if total > curve.max {
            curve.max = total;
            curve.z_at_max = z;
        }
    }
    Ok(curve)
}

/// Per-supermode contribution `f_m (g_m+ + g_m-)`.
pub fn supermode_contributions(coupling: &CouplingTable, rates: &RateTable) -> Vec<(ModeLabel, f64)> {
    rates
        .entries
        .iter()
        .filter_map(|r| {
            coupling
                .get(r.label)
                .map(|c| (r.label, c.fraction * (r.gamma_forward + r.gamma_backward)))
        })
        .collect()
}

/// Evenly spaced samples including both ends.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}
