//! Power normalization and fiber-mode fractions of supermodes.

use qdc_sparse::C64;

use crate::error::{CouplerError, Result};
use crate::geometry::{rasterize_scene, CrossSectionSpec, GridSpec, Scene};
use crate::modesolver::{cross_z, solve_modes, Family, ModeBasis, ModeFields, SolverConfig, Supermode};

pub use crate::modesolver::power_flux;

/// Fundamental mode of the bare fiber, on the coupler's grid.
#[derive(Debug, Clone)]
pub struct FiberMode {
    pub polarization: Family,
    pub n_eff: C64,
    pub fields: ModeFields,
    pub flux: f64,
}

impl FiberMode {
    pub fn from_supermode(mode: &Supermode) -> Self {
        Self {
            polarization: mode.label.family,
            n_eff: mode.n_eff,
            fields: mode.fields.clone(),
            flux: mode.flux,
        }
    }
}

/// Both polarizations of the bare-fiber fundamental mode.
#[derive(Debug, Clone)]
pub struct FiberModes {
    pub x: FiberMode,
    pub y: FiberMode,
}

impl FiberModes {
    pub fn get(&self, family: Family) -> &FiberMode {
        match family {
            Family::HEx => &self.x,
            Family::HEy => &self.y,
        }
    }
}

/// Solves the fiber-only map (channel removed) on the same grid as `spec`.
pub fn fiber_modes(spec: &CrossSectionSpec, grid: &GridSpec, cfg: &SolverConfig) -> Result<FiberModes> {
    let map = rasterize_scene(spec, grid, Scene::FiberOnly)?;
    let basis = solve_modes(&map, cfg)?;
    fiber_modes_from_basis(&basis)
}

pub fn fiber_modes_from_basis(basis: &ModeBasis) -> Result<FiberModes> {
    let top = |family: Family| {
        basis
            .family(family)
            .next()
            .map(FiberMode::from_supermode)
            .ok_or_else(|| CouplerError::MissingMode(format!("fiber {family}")))
    };
    Ok(FiberModes {
        x: top(Family::HEx)?,
        y: top(Family::HEy)?,
    })
}

/// `O = int (e_m x h_f*) . z dS`, the overlap that carries supermode power
/// into the fiber mode.
pub fn fiber_overlap(mode: &ModeFields, fiber: &FiberMode) -> Result<C64> {
    check_grid(mode, &fiber.fields)?;
    Ok(cross_z(mode, &fiber.fields))
}

fn check_grid(a: &ModeFields, b: &ModeFields) -> Result<()> {
    if a.same_grid(b) {
        Ok(())
    } else {
        Err(CouplerError::GridMismatch(format!(
            "{}x{} @ ({}, {}) nm vs {}x{} @ ({}, {}) nm",
            a.nx, a.ny, a.dx_nm, a.dy_nm, b.nx, b.ny, b.dx_nm, b.dy_nm
        )))
    }
}

/// Slack allowed above 1 before clamping.
pub const FRACTION_SLACK: f64 = 0.01;

/// Unclamped `Re{ int(e_f x h_m*) int(e_m x h_f*) } / (S_f S_m)`.
pub fn fiber_fraction_raw(mode: &ModeFields, fiber: &FiberMode) -> Result<f64> {
    check_grid(mode, &fiber.fields)?;
    let a = cross_z(&fiber.fields, mode);
    let b = cross_z(mode, &fiber.fields);
    let sm = power_flux(mode);
    Ok((a * b).re / (fiber.flux * sm))
}

/// Fiber-mode fraction clamped to `[0, 1]`.
pub fn fiber_fraction(mode: &ModeFields, fiber: &FiberMode) -> Result<f64> {
    let f = fiber_fraction_raw(mode, fiber)?;
    Ok(f.clamp(0.0, 1.0))
}

#[derive(Debug, Clone)]
pub struct CouplingEntry {
    pub label: crate::modesolver::ModeLabel,
    pub fraction: f64,
    pub raw_fraction: f64,
    /// Overlap `O_m` with the matching fiber polarization.
    pub overlap: C64,
}

#[derive(Debug, Clone)]
pub struct CouplingTable {
    pub entries: Vec<CouplingEntry>,
}

impl CouplingTable {
    /// Each supermode is projected onto the fiber mode of its own family.
    pub fn new(basis: &ModeBasis, fibers: &FiberModes) -> Result<Self> {
        let mut entries = Vec::with_capacity(basis.modes.len());
        for m in &basis.modes {
            let fiber = fibers.get(m.label.family);
            let raw = fiber_fraction_raw(&m.fields, fiber)?;
            entries.push(CouplingEntry {
                label: m.label,
                fraction: raw.clamp(0.0, 1.0),
                raw_fraction: raw,
                overlap: fiber_overlap(&m.fields, fiber)?,
            });
        }
        Ok(Self { entries })
    }

    pub fn get(&self, label: crate::modesolver::ModeLabel) -> Option<&CouplingEntry> {
        self.entries.iter().find(|e| e.label == label)
    }

    pub fn family_sum(&self, family: Family) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.label.family == family)
            .map(|e| e.fraction)
            .sum()
    }
}
