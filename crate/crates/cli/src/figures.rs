//! Self-contained SVG line plots of the run tables.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};
use crate::table::Table;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];
const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 50.0;

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

#[derive(Debug, Clone)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone)]
pub struct Figure {
    pub columns: usize,
    pub panels: Vec<Panel>,
}

fn series(name: &str, xs: &[f64], ys: &[f64]) -> Series {
    Series {
        name: name.into(),
        points: xs.iter().copied().zip(ys.iter().copied()).collect(),
        dashed: false,
    }
}

/// Tick positions at 1, 2 or 5 times a power of ten.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let start = (lo / step).ceil() as i64;
    let stop = (hi / step).floor() as i64;
    (start..=stop).map(|k| k as f64 * step).collect()
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * lo.abs().max(1.0) {
        let pad = 0.5 * lo.abs().max(1.0);
        return (lo - pad, hi + pad);
    }
    let pad = 0.04 * (hi - lo);
    (lo - pad, hi + pad)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

impl Figure {
    pub fn to_svg(&self) -> String {
        let cols = self.columns.max(1);
        let rows = self.panels.len().div_ceil(cols);
        let width = cols as f64 * PANEL_W;
        let height = rows as f64 * PANEL_H;
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        for (k, panel) in self.panels.iter().enumerate() {
            let ox = (k % cols) as f64 * PANEL_W;
            let oy = (k / cols) as f64 * PANEL_H;
            panel.render(&mut out, ox, oy);
        }
        out.push_str("</svg>\n");
        out
    }
}

impl Panel {
    fn render(&self, out: &mut String, ox: f64, oy: f64) {
        let (x0, x1) = range(self.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
        let (y0, y1) = range(self.series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
        let left = ox + MARGIN_L;
        let right = ox + PANEL_W - MARGIN_R;
        let top = oy + MARGIN_T;
        let bottom = oy + PANEL_H - MARGIN_B;
        let sx = |x: f64| left + (x - x0) / (x1 - x0) * (right - left);
        let sy = |y: f64| bottom - (y - y0) / (y1 - y0) * (bottom - top);

        let _ = writeln!(out, r#"<g class="panel">"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-weight="bold">{}</text>"#,
            0.5 * (left + right),
            oy + 18.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r##"<rect x="{left:.1}" y="{top:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#333"/>"##,
            right - left,
            bottom - top
        );
        for t in ticks(x0, x1) {
            let x = sx(t);
            let _ = writeln!(
                out,
                r##"<line x1="{x:.1}" y1="{bottom:.1}" x2="{x:.1}" y2="{:.1}" stroke="#333"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"##,
                bottom + 4.0,
                bottom + 16.0,
                fmt_tick(t)
            );
        }
        for t in ticks(y0, y1) {
            let y = sy(t);
            let _ = writeln!(
                out,
                r##"<line x1="{:.1}" y1="{y:.1}" x2="{left:.1}" y2="{y:.1}" stroke="#333"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
                left - 4.0,
                left - 6.0,
                y + 4.0,
                fmt_tick(t)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            0.5 * (left + right),
            bottom + 34.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" transform="rotate(-90 {:.1} {:.1})">{}</text>"#,
            ox + 18.0,
            0.5 * (top + bottom),
            ox + 18.0,
            0.5 * (top + bottom),
            escape(&self.y_label)
        );
        for (k, s) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let dash = if s.dashed { r#" stroke-dasharray="5 3""# } else { "" };
            // non-finite samples split the trace
            let mut segments: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
            for &(x, y) in &s.points {
                if x.is_finite() && y.is_finite() {
                    segments.last_mut().expect("nonempty").push((sx(x), sy(y)));
                } else if !segments.last().expect("nonempty").is_empty() {
                    segments.push(Vec::new());
                }
            }
            let _ = writeln!(out, r#"<g class="trace" data-trace="{}">"#, escape(&s.name));
            for seg in segments.iter().filter(|s| !s.is_empty()) {
                let pts: Vec<String> = seg.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                if seg.len() == 1 {
                    let _ = writeln!(
                        out,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                        seg[0].0, seg[0].1
                    );
                } else {
                    let _ = writeln!(
                        out,
                        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                        pts.join(" ")
                    );
                }
            }
            let ly = top + 14.0 + 14.0 * k as f64;
            let _ = writeln!(
                out,
                r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.1}" y="{:.1}">{}</text>"#,
                right - 90.0,
                right - 70.0,
                right - 66.0,
                ly + 4.0,
                escape(&s.name)
            );
            out.push_str("</g>\n");
        }
        out.push_str("</g>\n");
    }
}

fn fig2(t: &Table) -> Result<Figure> {
    let widths = t.numbers("Wch_nm")?;
    let labels = t.text("label")?;
    let families = t.text("family")?;
    let columns = [
        ("re_n_eff", None, "(a) effective index", "Re n_eff"),
        ("f_m", None, "(b) fiber mode fraction", "f_m"),
        ("gamma_x", Some("gamma_z"), "(c) beta-factor", "γ_m"),
        ("eta_pl_x", Some("eta_pl_z"), "(d) collection contribution", "η_PL^m"),
    ];
    let mut panels = Vec::new();
    for (col, hey_col, title, y_label) in columns {
        let values = t.numbers(col)?;
        // hEy modes couple to the z dipole, hEx to the x dipole
        let hey_values = match hey_col {
            Some(c) => t.numbers(c)?,
            None => values.clone(),
        };
        let mut panel = Panel {
            title: title.into(),
            x_label: "W_ch (nm)".into(),
            y_label: y_label.into(),
            series: Vec::new(),
        };
        for label in t.distinct("label")? {
            let mut s = Series {
                name: label.clone(),
                points: Vec::new(),
                dashed: false,
            };
            for k in 0..widths.len() {
                if labels[k] == label {
                    let hey = families[k] == "hEy";
                    s.dashed = hey;
                    s.points.push((widths[k], if hey { hey_values[k] } else { values[k] }));
                }
            }
            panel.series.push(s);
        }
        panels.push(panel);
    }
    Ok(Figure { columns: 2, panels })
}

fn per_axis(t: &Table, x: &str, y: &str, title: &str, x_label: &str, y_label: &str) -> Result<Figure> {
    let mut panel = Panel {
        title: title.into(),
        x_label: x_label.into(),
        y_label: y_label.into(),
        series: Vec::new(),
    };
    for axis in t.distinct("dipole_axis")? {
        let sub = t.filter("dipole_axis", &axis)?;
        panel
            .series
            .push(series(&format!("{axis}-dipole"), &sub.numbers(x)?, &sub.numbers(y)?));
    }
    Ok(Figure {
        columns: 1,
        panels: vec![panel],
    })
}

fn transmission(t: &Table) -> Result<Figure> {
    let z = t.numbers("z_um")?;
    let f0 = t.numbers("F0")?;
    let f = t.numbers("F")?;
    let dt = t.numbers("dT")?;
    Ok(Figure {
        columns: 1,
        panels: vec![
            Panel {
                title: "off- and on-resonance transmission".into(),
                x_label: "z (µm)".into(),
                y_label: "normalized transmission".into(),
                series: vec![series("F0", &z, &f0), series("F", &z, &f)],
            },
            Panel {
                title: "contrast".into(),
                x_label: "z (µm)".into(),
                y_label: "ΔT = (F - F0)/F0".into(),
                series: vec![series("dT", &z, &dt)],
            },
        ],
    })
}

fn lineshape(t: &Table) -> Result<Figure> {
    Ok(Figure {
        columns: 1,
        panels: vec![Panel {
            title: "resonant lineshape".into(),
            x_label: "δ/Γ".into(),
            y_label: "F".into(),
            series: vec![series("F", &t.numbers("delta_over_Gamma")?, &t.numbers("F")?)],
        }],
    })
}

fn modes(t: &Table) -> Result<Figure> {
    let n = t.numbers("re_n_eff")?;
    let f = t.numbers("f_m")?;
    let labels = t.text("label")?;
    Ok(Figure {
        columns: 1,
        panels: vec![Panel {
            title: "supermodes".into(),
            x_label: "Re n_eff".into(),
            y_label: "f_m".into(),
            series: (0..n.len()).map(|k| series(labels[k], &n[k..=k], &f[k..=k])).collect(),
        }],
    })
}

/// Builds the figure for a table, chosen by its file name; `None` for files
/// that have no plot.
pub fn figure_for(path: &Path) -> Result<Option<Figure>> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    if !name.ends_with(".csv") {
        return Ok(None);
    }
    let known = name == "fig2.csv"
        || name == "fig3.csv"
        || name == "etapl_max.csv"
        || ["etapl_", "transmission_", "lineshape_", "modes_"]
            .iter()
            .any(|p| name.starts_with(p));
    if !known {
        return Ok(None);
    }
    let t = Table::read(path)?;
    let fig = match name {
        "fig2.csv" => fig2(&t)?,
        "fig3.csv" | "etapl_max.csv" => per_axis(
            &t,
            "Wch_nm",
            "eta_max",
            "maximum collection efficiency",
            "W_ch (nm)",
            "max η_PL",
        )?,
        n if n.starts_with("etapl_") => per_axis(&t, "z_um", "eta_total", "collection efficiency", "z (µm)", "η_PL")?,
        n if n.starts_with("transmission_") => transmission(&t)?,
        n if n.starts_with("lineshape_") => lineshape(&t)?,
        _ => modes(&t)?,
    };
    Ok(Some(fig))
}

/// Renders one CSV to `out`; nothing is written on error.
pub fn render(csv: &Path, out: &Path) -> Result<()> {
    let fig = figure_for(csv)?.ok_or_else(|| CliError::Config(format!("{}: no plot for this table", csv.display())))?;
    fs::write(out, fig.to_svg()).map_err(|e| CliError::io(out, e))
}

/// Renders every plottable CSV in `dir` next to it. All tables are parsed
/// before anything is written, so a bad table leaves the directory untouched.
pub fn render_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    let mut rendered = Vec::new();
    for path in entries {
        if let Some(fig) = figure_for(&path)? {
            rendered.push((path.with_extension("svg"), fig.to_svg()));
        }
    }
    if rendered.is_empty() {
        return Err(CliError::Config(format!("{}: no tables to plot", dir.display())));
    }
    for (path, svg) in &rendered {
        fs::write(path, svg).map_err(|e| CliError::io(path, e))?;
    }
    Ok(rendered.into_iter().map(|(p, _)| p).collect())
}
