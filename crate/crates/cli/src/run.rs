//! End-to-end runs: single-width subcommands and the width sweep.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use qdcoupler::emission::{
    channel_for, collection_efficiency, linspace, CollectionCurve, DipoleAxis, DipoleSpec, Direction, RadiationModel,
    RateTable,
};
use qdcoupler::geometry::{rasterize, PermittivityMap};
use qdcoupler::modesolver::{Family, ModeBasis, ModeFields, SolveDiagnostics};
use qdcoupler::pipeline::{CouplerPoint, Simulator};
use qdcoupler::transmission::{contrast_scan, lineshape, CouplerChannel, TransmissionScan};
use qdcoupler::C64;
use serde::Serialize;

use crate::config::{width_tag, RunConfig};
use crate::error::{CliError, Result};
use crate::table::{num, Table};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Calibrated simulator shared by every width of a run.
pub struct Context {
    pub cfg: RunConfig,
    pub sim: Simulator,
    pub radiation: RadiationModel,
    /// The calibration point, kept so a sweep through it need not solve twice.
    pub reference: Option<CouplerPoint>,
}

impl Context {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        let sim = Simulator::new(cfg.geometry.clone(), cfg.grid.clone(), cfg.solver())?;
        let (radiation, reference) = match cfg.emission.explicit_radiation {
            Some(rate) => (RadiationModel::explicit(rate)?, None),
            None => {
                let reference = sim.point(cfg.emission.reference_width_nm)?;
                let dipole = dipole(&cfg, DipoleAxis::X);
                let model = sim.calibrate(&reference, &dipole, cfg.emission.target_guided_fraction)?;
                (model, Some(reference))
            }
        };
        Ok(Self {
            cfg,
            sim,
            radiation,
            reference,
        })
    }

    pub fn dipole(&self, axis: DipoleAxis) -> DipoleSpec {
        dipole(&self.cfg, axis)
    }

    /// Solves one width, reusing the calibration point when it matches.
    pub fn point(&self, width_nm: f64) -> Result<CouplerPoint> {
        match &self.reference {
            Some(r) if r.width_nm == width_nm => Ok(r.clone()),
            _ => Ok(self.sim.point(width_nm)?),
        }
    }

    pub fn rates(&self, point: &CouplerPoint, axis: DipoleAxis) -> Result<RateTable> {
        Ok(self.sim.rates(point, &self.dipole(axis), &self.radiation)?)
    }
}

fn dipole(cfg: &RunConfig, axis: DipoleAxis) -> DipoleSpec {
    DipoleSpec {
        x_nm: cfg.emission.dipole_x_nm,
        y_nm: cfg.emission.dipole_y_nm,
        ..DipoleSpec::centered(axis)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeSummary {
    pub label: String,
    pub family: Family,
    pub n_eff: (f64, f64),
    pub beta_rad_per_um: f64,
    pub flux: f64,
    pub guided: bool,
    pub f: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AxisSummary {
    pub axis: DipoleAxis,
    pub eta_max: f64,
    pub z_at_max: f64,
    pub incoherent: f64,
    pub guided_fraction: f64,
    /// `(label, gamma+, gamma-)` per guided supermode.
    pub gammas: Vec<(String, f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransmissionSummary {
    pub z0_um: f64,
    pub scan: TransmissionScan,
    pub lineshape_z_um: f64,
    pub detunings: Vec<f64>,
    pub lineshape: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointSummary {
    pub width_nm: f64,
    pub modes: Vec<ModeSummary>,
    pub axes: Vec<AxisSummary>,
    /// Forward channel of the configured family and dipole axis.
    pub channel: CouplerChannel,
    pub beat_length_um: Option<f64>,
    pub transmission: Option<TransmissionSummary>,
    pub diagnostics: Vec<SolveDiagnostics>,
    pub warnings: Vec<String>,
    pub seconds: f64,
}

impl PointSummary {
    pub fn axis(&self, axis: DipoleAxis) -> Option<&AxisSummary> {
        self.axes.iter().find(|a| a.axis == axis)
    }

    pub fn mode(&self, label: &str) -> Option<&ModeSummary> {
        self.modes.iter().find(|m| m.label == label)
    }
}

/// Tables produced for one width, keyed by file name.
pub type Outputs = BTreeMap<String, Table>;

pub fn modes_table(point: &CouplerPoint) -> Table {
    let mut t = Table::new(&[
        "label",
        "re_n_eff",
        "im_n_eff",
        "beta_rad_per_um",
        "S_m",
        "guided",
        "f_m",
    ]);
    for m in &point.basis.modes {
        let f = point.coupling.get(m.label).map_or(f64::NAN, |c| c.fraction);
        t.push(vec![
            m.label.to_string(),
            num(m.n_eff.re),
            num(m.n_eff.im),
            num(m.beta_rad_per_um),
            num(m.flux),
            m.guided.to_string(),
            num(f),
        ]);
    }
    t
}

fn etapl_table(curves: &[(DipoleAxis, CollectionCurve)]) -> Table {
    let mut t = Table::new(&["dipole_axis", "z_um", "eta_plus", "eta_minus", "eta_total"]);
    for (axis, c) in curves {
        for k in 0..c.z_um.len() {
            t.push(vec![
                axis.name().into(),
                num(c.z_um[k]),
                num(c.eta_plus[k]),
                num(c.eta_minus[k]),
                num(c.eta_total[k]),
            ]);
        }
    }
    t
}

fn transmission_table(scan: &TransmissionScan) -> Table {
    let mut t = Table::new(&["z_um", "F0", "F", "dT"]);
    for k in 0..scan.z_um.len() {
        t.push(vec![num(scan.z_um[k]), num(scan.f0[k]), num(scan.f[k]), num(scan.dt[k])]);
    }
    t
}

fn lineshape_table(tr: &TransmissionSummary) -> Table {
    let mut t = Table::new(&["delta_over_Gamma", "F"]);
    for (d, f) in tr.detunings.iter().zip(&tr.lineshape) {
        t.push(vec![num(*d), num(*f)]);
    }
    t
}

/// Options for the transmission part of an analysis.
#[derive(Debug, Clone, Copy, Default)]
pub struct TransmitRequest {
    pub z0_um: Option<f64>,
    pub z_max_um: Option<f64>,
    pub detuning: Option<f64>,
}

/// Scan of the configured channel. The lineshape is taken where the scan's
/// contrast `|dT|` is largest.
pub fn transmit(cfg: &RunConfig, channel: &CouplerChannel, request: TransmitRequest) -> Result<TransmissionSummary> {
    let tc = &cfg.transmission;
    let z0 = match request.z0_um.or(tc.z0_um) {
        Some(z0) => z0,
        None => 0.5
            * channel
                .beat_length_um()
                .ok_or_else(|| {
                    qdcoupler::CouplerError::MissingMode("second supermode for the beat length".into())
                })?,
    };
    let z_max = request.z_max_um.or(tc.z_max_um).unwrap_or(z0 + 8.0);
    if !(z_max > z0) {
        return Err(CliError::Config(format!("z_max {z_max} must exceed z0 {z0}")));
    }
    let detuning = request.detuning.unwrap_or(tc.detuning);
    let zs = linspace(z0, z_max, tc.z_samples);
    let scan = contrast_scan(channel, &zs, z0, detuning);
    let mut best = (f64::NEG_INFINITY, z0);
    for (k, dt) in scan.dt.iter().enumerate() {
        if dt.is_finite() && dt.abs() > best.0 {
            best = (dt.abs(), zs[k]);
        }
    }
    let span = tc.lineshape_span;
    let detunings = linspace(-span, span, tc.lineshape_samples);
    let lineshape = lineshape(channel, best.1, z0, &detunings);
    Ok(TransmissionSummary {
        z0_um: z0,
        scan,
        lineshape_z_um: best.1,
        detunings,
        lineshape,
    })
}

/// Rates, collection and (optionally) transmission for a solved width.
pub fn analyze(ctx: &Context, point: &CouplerPoint, with_transmission: bool) -> Result<(PointSummary, Outputs)> {
    let cfg = &ctx.cfg;
    let tag = width_tag(point.width_nm);
    let zs = linspace(cfg.sweep.z_min_um, cfg.sweep.z_max_um, cfg.sweep.z_samples);
    let mut outputs = Outputs::new();
    let mut axes = Vec::new();
    let mut curves = Vec::new();
    let mut channel = None;
    let mut axis_list = cfg.sweep.dipole_axes.clone();
    if !axis_list.contains(&cfg.transmission.dipole_axis) {
        axis_list.push(cfg.transmission.dipole_axis);
    }
    for axis in axis_list {
        let rates = ctx.rates(point, axis)?;
        if axis == cfg.transmission.dipole_axis {
            channel = Some(channel_for(
                &point.basis,
                &point.coupling,
                &rates,
                cfg.transmission.family,
                Direction::Forward,
            )?);
        }
        if !cfg.sweep.dipole_axes.contains(&axis) {
            continue;
        }
        let curve = collection_efficiency(&point.basis, &point.coupling, &rates, &zs)?;
        axes.push(AxisSummary {
            axis,
            eta_max: curve.max,
            z_at_max: curve.z_at_max,
            incoherent: curve.incoherent,
            guided_fraction: rates.guided_fraction(),
            gammas: rates
                .entries
                .iter()
                .map(|e| (e.label.to_string(), e.gamma_forward, e.gamma_backward))
                .collect(),
        });
        curves.push((axis, curve));
    }
    let channel = channel.expect("transmission axis is always evaluated");
    outputs.insert(format!("modes_{tag}.csv"), modes_table(point));
    if !curves.is_empty() {
        outputs.insert(format!("etapl_{tag}.csv"), etapl_table(&curves));
    }
    let transmission = if with_transmission {
        let tr = transmit(cfg, &channel, TransmitRequest::default())?;
        outputs.insert(format!("transmission_{tag}.csv"), transmission_table(&tr.scan));
        outputs.insert(format!("lineshape_{tag}.csv"), lineshape_table(&tr));
        Some(tr)
    } else {
        None
    };
    let modes = point
        .basis
        .modes
        .iter()
        .map(|m| ModeSummary {
            label: m.label.to_string(),
            family: m.label.family,
            n_eff: (m.n_eff.re, m.n_eff.im),
            beta_rad_per_um: m.beta_rad_per_um,
            flux: m.flux,
            guided: m.guided,
            f: point.coupling.get(m.label).map_or(f64::NAN, |c| c.fraction),
        })
        .collect();
    let summary = PointSummary {
        width_nm: point.width_nm,
        modes,
        axes,
        beat_length_um: channel.beat_length_um(),
        channel,
        transmission,
        diagnostics: point.basis.diagnostics.clone(),
        warnings: point.basis.warnings.clone(),
        seconds: point.basis.diagnostics.iter().map(|d| d.seconds).sum(),
    };
    Ok((summary, outputs))
}

pub fn write_outputs(dir: &Path, outputs: &Outputs) -> Result<Vec<String>> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut names = Vec::new();
    for (name, table) in outputs {
        table.write(&dir.join(name))?;
        names.push(name.clone());
    }
    Ok(names)
}

#[derive(Debug, Clone, Serialize)]
pub struct PointRecord {
    pub width_nm: f64,
    pub status: &'static str,
    pub error: Option<String>,
    pub seconds: f64,
    pub diagnostics: Vec<SolveDiagnostics>,
    pub warnings: Vec<String>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub version: String,
    pub config: RunConfig,
    pub radiation_rate: f64,
    pub points: Vec<PointRecord>,
    pub files: Vec<String>,
    pub audit_passed: bool,
}

impl RunManifest {
    /// Every referenced file exists under `dir`.
    pub fn audit(&self, dir: &Path) -> Vec<String> {
        self.files.iter().filter(|f| !dir.join(f).is_file()).cloned().collect()
    }
}

pub struct SweepReport {
    pub summaries: Vec<PointSummary>,
    pub manifest: RunManifest,
    pub failed: usize,
}

impl SweepReport {
    pub fn into_result(self) -> Result<SweepReport> {
        if self.failed > 0 {
            Err(CliError::Partial {
                failed: self.failed,
                total: self.manifest.points.len(),
            })
        } else {
            Ok(self)
        }
    }

    pub fn summary(&self, width_nm: f64) -> Option<&PointSummary> {
        self.summaries.iter().find(|s| s.width_nm == width_nm)
    }
}

/// Hook called by the collector for every successfully tracked width.
pub type Inspect<'a> = dyn FnMut(&Context, &CouplerPoint, &PointSummary) + 'a;

/// Solves every width on a worker pool; a single collector relabels each
/// point against its predecessor, analyzes it and writes its files in width
/// order, so outputs do not depend on scheduling.
pub fn sweep(ctx: &Context, inspect: &mut Inspect<'_>) -> Result<SweepReport> {
    let cfg = &ctx.cfg;
    let widths = cfg.sweep.widths()?;
    let dir = cfg.sweep.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let workers = cfg.sweep.workers().min(widths.len()).max(1);
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, f64, std::result::Result<CouplerPoint, String>)>();

    let mut summaries = Vec::new();
    let mut records: Vec<PointRecord> = Vec::new();
    let mut files = Vec::new();
    let mut failed = 0;

    std::thread::scope(|scope| -> Result<()> {
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            let widths = &widths;
            scope.spawn(move || loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                if k >= widths.len() {
                    break;
                }
                let t = Instant::now();
                let res = ctx.point(widths[k]).map_err(|e| e.to_string());
                if tx.send((k, t.elapsed().as_secs_f64(), res)).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        let mut pending = BTreeMap::new();
        let mut cursor = 0;
        let mut prev: Option<CouplerPoint> = None;
        for (k, secs, res) in rx.iter() {
            pending.insert(k, (secs, res));
            while let Some((secs, res)) = pending.remove(&cursor) {
                let width = widths[cursor];
                cursor += 1;
                let outcome = res.and_then(|raw| {
                    let point = match &prev {
                        Some(p) => ctx.sim.tracked(p, raw).map_err(|e| e.to_string())?,
                        None => raw,
                    };
                    let fig4 = cfg.transmission.widths_nm.contains(&width);
                    let (summary, outputs) = analyze(ctx, &point, fig4).map_err(|e| e.to_string())?;
                    let names = write_outputs(&dir, &outputs).map_err(|e| e.to_string())?;
                    inspect(ctx, &point, &summary);
                    Ok((point, summary, names))
                });
                match outcome {
                    Ok((point, summary, names)) => {
                        records.push(PointRecord {
                            width_nm: width,
                            status: "ok",
                            error: None,
                            seconds: secs,
                            diagnostics: summary.diagnostics.clone(),
                            warnings: summary.warnings.clone(),
                            files: names.clone(),
                        });
                        files.extend(names);
                        summaries.push(summary);
                        prev = Some(point);
                    }
                    Err(e) => {
                        failed += 1;
                        records.push(PointRecord {
                            width_nm: width,
                            status: "failed",
                            error: Some(e),
                            seconds: secs,
                            diagnostics: Vec::new(),
                            warnings: Vec::new(),
                            files: Vec::new(),
                        });
                    }
                }
            }
        }
        Ok(())
    })?;

    for (name, table) in [
        ("fig2.csv", fig2_table(&summaries)),
        ("fig3.csv", fig3_table(&summaries)),
        ("etapl_max.csv", etapl_max_table(&summaries)),
    ] {
        table.write(&dir.join(name))?;
        files.push(name.to_string());
    }
    files.push("manifest.json".into());
    let mut manifest = RunManifest {
        config_hash: cfg.hash(),
        version: VERSION.into(),
        config: cfg.clone(),
        radiation_rate: ctx.radiation.rate(),
        points: records,
        files,
        audit_passed: false,
    };
    write_manifest(&dir, &mut manifest)?;
    Ok(SweepReport {
        summaries,
        manifest,
        failed,
    })
}

fn write_manifest(dir: &Path, manifest: &mut RunManifest) -> Result<()> {
    let path = dir.join("manifest.json");
    let save = |m: &RunManifest| -> Result<()> {
        let mut file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        serde_json::to_writer_pretty(&mut file, m).map_err(|e| CliError::Config(e.to_string()))?;
        file.write_all(b"\n").map_err(|e| CliError::io(&path, e))
    };
    save(manifest)?;
    manifest.audit_passed = manifest.audit(dir).is_empty();
    save(manifest)
}

/// One row per width and supermode. `gamma_*` is the per-direction
/// beta-factor; `eta_pl_*` is `f_m (gamma+ + gamma-)`.
pub fn fig2_table(summaries: &[PointSummary]) -> Table {
    let mut t = Table::new(&[
        "Wch_nm",
        "family",
        "label",
        "re_n_eff",
        "f_m",
        "gamma_x",
        "gamma_z",
        "eta_pl_x",
        "eta_pl_z",
    ]);
    for s in summaries {
        for m in s.modes.iter().filter(|m| m.guided) {
            let lookup = |axis| {
                s.axis(axis)
                    .and_then(|a| a.gammas.iter().find(|g| g.0 == m.label))
                    .map_or((f64::NAN, f64::NAN), |g| (g.1, m.f * (g.1 + g.2)))
            };
            let (gx, ex) = lookup(DipoleAxis::X);
            let (gz, ez) = lookup(DipoleAxis::Z);
            t.push(vec![
                num(s.width_nm),
                m.family.to_string(),
                m.label.clone(),
                num(m.n_eff.0),
                num(m.f),
                num(gx),
                num(gz),
                num(ex),
                num(ez),
            ]);
        }
    }
    t
}

pub fn fig3_table(summaries: &[PointSummary]) -> Table {
    let mut t = Table::new(&["Wch_nm", "dipole_axis", "eta_max", "z_at_max", "eta_incoherent"]);
    for s in summaries {
        for a in &s.axes {
            t.push(vec![
                num(s.width_nm),
                a.axis.name().into(),
                num(a.eta_max),
                num(a.z_at_max),
                num(a.incoherent),
            ]);
        }
    }
    t
}

pub fn etapl_max_table(summaries: &[PointSummary]) -> Table {
    let mut t = Table::new(&["Wch_nm", "dipole_axis", "eta_max", "z_at_max"]);
    for s in summaries {
        for a in &s.axes {
            t.push(vec![num(s.width_nm), a.axis.name().into(), num(a.eta_max), num(a.z_at_max)]);
        }
    }
    t
}

/// `x_nm, y_nm, eps_Ex, eps_Ey, eps_Ez` per node; each value belongs to its
/// component's staggered point next to that node (`NaN` past the last row or
/// column of a lattice).
pub fn epsilon_table(map: &PermittivityMap) -> Table {
    let mut t = Table::new(&["x_nm", "y_nm", "eps_Ex", "eps_Ey", "eps_Ez"]);
    for j in 0..=map.ny {
        for i in 0..=map.nx {
            let ex = if i < map.nx { map.ex(i, j) } else { f64::NAN };
            let ey = if j < map.ny { map.ey(i, j) } else { f64::NAN };
            t.push(vec![
                num(map.node_x(i)),
                num(map.node_y(j)),
                num(ex),
                num(ey),
                num(map.ez(i, j)),
            ]);
        }
    }
    t
}

pub const FIELD_MAGIC: &[u8; 8] = b"QDCFLD01";

/// Raw field dump, little endian:
///
/// ```text
/// magic "QDCFLD01"
/// u64 nx, u64 ny                      cells
/// f64 dx_nm, dy_nm, x0_nm, y0_nm
/// f64 re n_eff, im n_eff
/// planes Ex, Ey, Ez, Hx, Hy, Hz       row-major in y, (re, im) per sample
/// ```
///
/// Plane shapes (columns x rows): `Ex`, `Hy` `nx x (ny+1)`; `Ey`, `Hx`
/// `(nx+1) x ny`; `Ez` `(nx+1) x (ny+1)`; `Hz` `nx x ny`.
pub fn write_fields(path: &Path, fields: &ModeFields, n_eff: C64) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(FIELD_MAGIC);
    buf.extend_from_slice(&(fields.nx as u64).to_le_bytes());
    buf.extend_from_slice(&(fields.ny as u64).to_le_bytes());
    for v in [
        fields.dx_nm,
        fields.dy_nm,
        fields.x0_nm,
        fields.y0_nm,
        n_eff.re,
        n_eff.im,
    ] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for plane in [&fields.ex, &fields.ey, &fields.ez, &fields.hx, &fields.hy, &fields.hz] {
        for z in plane.iter() {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    fs::write(path, buf).map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ModesRequest {
    /// Search window for the coupler solve; the bare-fiber reference keeps
    /// the configured one.
    pub window: Option<(f64, f64)>,
    pub count: Option<usize>,
    pub dump_epsilon: bool,
    pub dump_fields: bool,
}

/// `modes` subcommand body: solve one width and write its table, plus
/// optional permittivity and field dumps. Needs no calibration.
pub fn modes_command(cfg: &RunConfig, width_nm: f64, request: ModesRequest) -> Result<(ModeBasis, Vec<PathBuf>)> {
    cfg.validate()?;
    let mut sim = Simulator::new(cfg.geometry.clone(), cfg.grid.clone(), cfg.solver())?;
    if let Some((lo, hi)) = request.window {
        sim.solver = sim.solver.with_window(lo, hi);
    }
    if let Some(k) = request.count {
        sim.solver.count = k;
    }
    let point = sim.point(width_nm)?;
    let dir = &cfg.sweep.output_dir;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let tag = width_tag(width_nm);
    let mut written = Vec::new();
    let path = dir.join(format!("modes_{tag}.csv"));
    modes_table(&point).write(&path)?;
    written.push(path);
    if request.dump_epsilon {
        let map = rasterize(&cfg.geometry.with_width(width_nm), &cfg.grid)?;
        let path = dir.join(format!("epsilon_{tag}.csv"));
        epsilon_table(&map).write(&path)?;
        written.push(path);
    }
    if request.dump_fields {
        for m in &point.basis.modes {
            let path = dir.join(format!("fields_{tag}_{}.bin", m.label));
            write_fields(&path, &m.fields, m.n_eff)?;
            written.push(path);
        }
    }
    Ok((point.basis, written))
}

/// `collect` and `transmit` bodies: one width through the calibrated pipeline.
pub fn single_point(ctx: &Context, width_nm: f64, with_transmission: bool) -> Result<(PointSummary, Vec<PathBuf>)> {
    let point = ctx.point(width_nm)?;
    let (summary, mut outputs) = analyze(ctx, &point, with_transmission)?;
    if !with_transmission {
        outputs.insert("etapl_max.csv".into(), etapl_max_table(std::slice::from_ref(&summary)));
    }
    let dir = &ctx.cfg.sweep.output_dir;
    let names = write_outputs(dir, &outputs)?;
    Ok((summary, names.into_iter().map(|n| dir.join(n)).collect()))
}

/// `transmit` with explicit overrides.
pub fn transmit_command(
    ctx: &Context,
    width_nm: f64,
    request: TransmitRequest,
) -> Result<(TransmissionSummary, Vec<PathBuf>)> {
    let point = ctx.point(width_nm)?;
    let rates = ctx.rates(&point, ctx.cfg.transmission.dipole_axis)?;
    let channel = channel_for(
        &point.basis,
        &point.coupling,
        &rates,
        ctx.cfg.transmission.family,
        Direction::Forward,
    )?;
    let tr = transmit(&ctx.cfg, &channel, request)?;
    let tag = width_tag(width_nm);
    let mut outputs = Outputs::new();
    outputs.insert(format!("transmission_{tag}.csv"), transmission_table(&tr.scan));
    outputs.insert(format!("lineshape_{tag}.csv"), lineshape_table(&tr));
    let dir = &ctx.cfg.sweep.output_dir;
    let names = write_outputs(dir, &outputs)?;
    Ok((tr, names.into_iter().map(|n| dir.join(n)).collect()))
}
