//! Run configuration: one JSON document, optionally overridden per key from
//! the environment.
//!
//! Overrides use `COUPLER_SIM_<SECTION>__<FIELD>` with `__` between path
//! segments, e.g. `COUPLER_SIM_GRID__DX_NM=20` or
//! `COUPLER_SIM_SWEEP__WIDTHS_NM=[220,300]`. Values are parsed as JSON and fall
//! back to plain strings.

use std::path::{Path, PathBuf};

use qdcoupler::emission::DipoleAxis;
use qdcoupler::geometry::{validate, CrossSectionSpec, GridSpec};
use qdcoupler::modesolver::{Family, SolverConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const ENV_PREFIX: &str = "COUPLER_SIM_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmissionConfig {
    /// Guided fraction imposed at the reference geometry.
    pub target_guided_fraction: f64,
    pub reference_width_nm: f64,
    /// Fixed `G_rad / G_bulk`; replaces the calibration when set.
    pub explicit_radiation: Option<f64>,
    pub dipole_x_nm: f64,
    pub dipole_y_nm: f64,
}

impl Default for EmissionConfig {
    fn default() -> Self {
        Self {
            target_guided_fraction: 0.73,
            reference_width_nm: 220.0,
            explicit_radiation: None,
            dipole_x_nm: 0.0,
            dipole_y_nm: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransmissionConfig {
    /// Dipole position along the coupler; half the beat length when unset.
    pub z0_um: Option<f64>,
    /// End of the coupler scan; `z0 + 8 um` when unset.
    pub z_max_um: Option<f64>,
    pub z_samples: usize,
    /// In units of the total linewidth.
    pub detuning: f64,
    pub lineshape_span: f64,
    pub lineshape_samples: usize,
    pub dipole_axis: DipoleAxis,
    /// Supermode family matched to the input fiber polarization.
    pub family: Family,
    /// Widths that get transmission and lineshape files in a sweep.
    pub widths_nm: Vec<f64>,
    /// Samples per axis for the worst-case extinction search.
    pub extinction_samples: usize,
}

impl Default for TransmissionConfig {
    fn default() -> Self {
        Self {
            z0_um: None,
            z_max_um: None,
            z_samples: 801,
            detuning: 0.0,
            lineshape_span: 5.0,
            lineshape_samples: 401,
            dipole_axis: DipoleAxis::X,
            family: Family::HEx,
            widths_nm: vec![220.0, 300.0],
            extinction_samples: 181,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub start_nm: f64,
    pub stop_nm: f64,
    pub step_nm: f64,
    /// Explicit list; overrides the range.
    pub widths_nm: Option<Vec<f64>>,
    pub dipole_axes: Vec<DipoleAxis>,
    pub z_min_um: f64,
    pub z_max_um: f64,
    pub z_samples: usize,
    /// 0 picks the machine parallelism.
    pub workers: usize,
    pub output_dir: PathBuf,
    /// Eigensolver start-vector seed; the solver default when unset.
    pub seed: Option<u64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            start_nm: 190.0,
            stop_nm: 350.0,
            step_nm: 10.0,
            widths_nm: None,
            dipole_axes: vec![DipoleAxis::X, DipoleAxis::Z],
            z_min_um: 1.0,
            z_max_um: 5.0,
            z_samples: 401,
            workers: 0,
            output_dir: PathBuf::from("out"),
            seed: None,
        }
    }
}

impl SweepConfig {
    pub fn widths(&self) -> Result<Vec<f64>> {
        let widths = match &self.widths_nm {
            Some(list) => list.clone(),
            None => {
                if !(self.step_nm > 0.0) {
                    return Err(CliError::Config(format!("sweep step {} must be positive", self.step_nm)));
                }
                let count = ((self.stop_nm - self.start_nm) / self.step_nm + 1e-9).floor();
                if count < 0.0 {
                    return Err(CliError::Config("sweep stop lies below start".into()));
                }
                (0..=count as usize)
                    .map(|k| self.start_nm + k as f64 * self.step_nm)
                    .collect()
            }
        };
        if widths.is_empty() {
            return Err(CliError::Config("sweep has no widths".into()));
        }
        if widths.iter().any(|w| !(*w > 0.0)) {
            return Err(CliError::Config("sweep widths must be positive".into()));
        }
        Ok(widths)
    }

    pub fn workers(&self) -> usize {
        if self.workers > 0 {
            self.workers
        } else {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: CrossSectionSpec,
    pub grid: GridSpec,
    pub solver: SolverConfig,
    pub emission: EmissionConfig,
    pub transmission: TransmissionConfig,
    pub sweep: SweepConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            geometry: CrossSectionSpec::default(),
            grid: GridSpec::default(),
            solver: SolverConfig::default(),
            emission: EmissionConfig::default(),
            transmission: TransmissionConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

impl RunConfig {
    /// Reads `path` (defaults when `None`) and applies overrides from the
    /// process environment.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        Self::load_with_env(path, std::env::vars())
    }

    pub fn load_with_env(path: Option<&Path>, env: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let mut value = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                serde_json::from_str::<Value>(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => Value::Object(Default::default()),
        };
        // fill defaults so overrides can address any key
        let base: RunConfig = serde_json::from_value(value.clone()).map_err(|e| CliError::Config(e.to_string()))?;
        let defaults = serde_json::to_value(&base).expect("config serializes");
        merge_missing(&mut value, &defaults);
        let mut vars: Vec<(String, String)> = env.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        vars.sort();
        for (key, raw) in vars {
            let path: Vec<String> = key[ENV_PREFIX.len()..]
                .split("__")
                .map(|s| s.to_ascii_lowercase())
                .collect();
            let parsed = serde_json::from_str(&raw).unwrap_or(Value::String(raw.clone()));
            set_path(&mut value, &path, parsed).map_err(|_| CliError::Config(format!("unknown override {key}")))?;
        }
        let cfg: RunConfig = serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        validate(&self.geometry, &self.grid).map_err(|e| CliError::Config(e.to_string()))?;
        self.sweep.widths()?;
        let e = &self.emission;
        if !(e.target_guided_fraction > 0.0 && e.target_guided_fraction <= 1.0) {
            return Err(CliError::Config(format!(
                "target_guided_fraction {} outside (0, 1]",
                e.target_guided_fraction
            )));
        }
        if matches!(e.explicit_radiation, Some(r) if !(r >= 0.0)) {
            return Err(CliError::Config("explicit_radiation must be non-negative".into()));
        }
        if !(self.solver.n_lo < self.solver.n_hi) {
            return Err(CliError::Config("solver window needs n_lo < n_hi".into()));
        }
        if self.sweep.z_samples < 2 || self.transmission.z_samples < 2 || self.transmission.lineshape_samples < 2 {
            return Err(CliError::Config("scans need at least two samples".into()));
        }
        if !(self.sweep.z_min_um < self.sweep.z_max_um) {
            return Err(CliError::Config("sweep z window is empty".into()));
        }
        Ok(())
    }

    /// Solver settings with the sweep seed applied.
    pub fn solver(&self) -> SolverConfig {
        let mut s = self.solver.clone();
        if let Some(seed) = self.sweep.seed {
            s.seed = seed;
        }
        s
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        format!("{:x}", Sha256::digest(&bytes))
    }
}

fn merge_missing(value: &mut Value, defaults: &Value) {
    if let (Value::Object(map), Value::Object(def)) = (value, defaults) {
        for (k, v) in def {
            match map.get_mut(k) {
                Some(existing) => merge_missing(existing, v),
                None => {
                    map.insert(k.clone(), v.clone());
                }
            }
        }
    }
}

fn set_path(value: &mut Value, path: &[String], new: Value) -> std::result::Result<(), ()> {
    let (head, rest) = path.split_first().ok_or(())?;
    let map = value.as_object_mut().ok_or(())?;
    let slot = map.get_mut(head).ok_or(())?;
    if rest.is_empty() {
        *slot = new;
        Ok(())
    } else {
        if slot.is_null() {
            *slot = Value::Object(Default::default());
        }
        set_path(slot, rest, new)
    }
}

/// `220` for integral widths, `222.5` otherwise.
pub fn width_tag(width_nm: f64) -> String {
    if width_nm.fract() == 0.0 {
        format!("{}", width_nm as i64)
    } else {
        format!("{width_nm}")
    }
}
