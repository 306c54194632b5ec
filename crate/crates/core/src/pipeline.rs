//! Geometry-to-tables pipeline for one channel width.

use crate::coupling::{fiber_modes, CouplingTable, FiberModes};
use crate::emission::{guided_total, rate_table, DipoleSpec, RadiationModel, RateTable};
use crate::error::Result;
use crate::geometry::{rasterize, CrossSectionSpec, GridSpec};
use crate::modesolver::{solve_modes, track, ModeBasis, SolverConfig};

/// Shared state for sweeps over the channel width: the bare-fiber modes do
/// not depend on it.
#[derive(Debug, Clone)]
pub struct Simulator {
    pub spec: CrossSectionSpec,
    pub grid: GridSpec,
    pub solver: SolverConfig,
    pub fibers: FiberModes,
}

#[derive(Debug, Clone)]
pub struct CouplerPoint {
    pub width_nm: f64,
    pub basis: ModeBasis,
    pub coupling: CouplingTable,
}

impl Simulator {
    pub fn new(spec: CrossSectionSpec, grid: GridSpec, solver: SolverConfig) -> Result<Self> {
        let fibers = fiber_modes(&spec, &grid, &solver)?;
        Ok(Self {
            spec,
            grid,
            solver,
            fibers,
        })
    }

    pub fn point(&self, width_nm: f64) -> Result<CouplerPoint> {
        let spec = self.spec.with_width(width_nm);
        let map = rasterize(&spec, &self.grid)?;
        let basis = solve_modes(&map, &self.solver)?;
        let coupling = CouplingTable::new(&basis, &self.fibers)?;
        Ok(CouplerPoint {
            width_nm,
            basis,
            coupling,
        })
    }

    /// Relabels `next` by field continuity with `prev` and rebuilds its
    /// coupling table.
    pub fn tracked(&self, prev: &CouplerPoint, next: CouplerPoint) -> Result<CouplerPoint> {
        let basis = track(&prev.basis, &next.basis)?;
        let coupling = CouplingTable::new(&basis, &self.fibers)?;
        Ok(CouplerPoint {
            width_nm: next.width_nm,
            basis,
            coupling,
        })
    }

    /// Radiation model calibrated to a guided fraction `target` for `dipole`
    /// at `reference`.
    pub fn calibrate(&self, reference: &CouplerPoint, dipole: &DipoleSpec, target: f64) -> Result<RadiationModel> {
        dipole.validate(&self.spec.with_width(reference.width_nm))?;
        let guided = guided_total(&reference.basis, dipole, self.spec.channel_index)?;
        RadiationModel::calibrate(target, guided)
    }

    pub fn rates(&self, point: &CouplerPoint, dipole: &DipoleSpec, radiation: &RadiationModel) -> Result<RateTable> {
        dipole.validate(&self.spec.with_width(point.width_nm))?;
        rate_table(&point.basis, dipole, self.spec.channel_index, radiation)
    }
}
