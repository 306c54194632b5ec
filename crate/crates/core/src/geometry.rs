//! Coupler cross-section and its rasterization onto a staggered grid.
//!
//! The channel is a `W_ch x t_ch` rectangle centred on the origin. The fiber
//! disc sits above it (along `+y`), centred on the vertical axis `x = 0` (plus an
//! optional lateral offset), separated from the channel's top face by `gap`.
//!
//! Sample points of a cell with lower-left node `(i, j)`:
//! `Ex` at `(i + 1/2, j)`, `Ey` at `(i, j + 1/2)`, `Ez` at `(i, j)`.

use serde::{Deserialize, Serialize};

use crate::error::{CouplerError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrossSectionSpec {
    pub channel_width_nm: f64,
    pub channel_thickness_nm: f64,
    pub channel_index: f64,
    pub fiber_radius_nm: f64,
    pub fiber_index: f64,
    pub gap_nm: f64,
    pub background_index: f64,
    pub wavelength_um: f64,
    /// Lateral displacement of the fiber centre from the channel axis.
    pub fiber_offset_nm: f64,
}

impl Default for CrossSectionSpec {
    fn default() -> Self {
        Self {
            channel_width_nm: 220.0,
            channel_thickness_nm: 256.0,
            channel_index: 3.406,
            fiber_radius_nm: 500.0,
            fiber_index: 1.45,
            gap_nm: 0.0,
            background_index: 1.0,
            wavelength_um: 1.3,
            fiber_offset_nm: 0.0,
        }
    }
}

impl CrossSectionSpec {
    pub fn with_width(&self, width_nm: f64) -> Self {
        Self {
            channel_width_nm: width_nm,
            ..self.clone()
        }
    }

    pub fn fiber_center_nm(&self) -> (f64, f64) {
        (
            self.fiber_offset_nm,
            0.5 * self.channel_thickness_nm + self.gap_nm + self.fiber_radius_nm,
        )
    }

    pub fn max_index(&self) -> f64 {
        self.channel_index.max(self.fiber_index).max(self.background_index)
    }

    /// Bounding box `(x_min, x_max, y_min, y_max)` of fiber and channel in nm.
    pub fn bounding_box_nm(&self) -> (f64, f64, f64, f64) {
        let (fx, fy) = self.fiber_center_nm();
        let r = self.fiber_radius_nm;
        let hw = 0.5 * self.channel_width_nm;
        (
            (-hw).min(fx - r),
            hw.max(fx + r),
            -0.5 * self.channel_thickness_nm,
            fy + r,
        )
    }

    pub fn is_mirror_symmetric(&self) -> bool {
        self.fiber_offset_nm == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Boundary {
    /// Perfect electric conductor on all four walls.
    Conductor,
    /// Stretched-coordinate absorbing layer inside the window, backed by a
    /// conductor. The stretch is `1 + i strength (d / thickness)^2`.
    Absorbing { cells: usize, strength: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub dx_nm: f64,
    pub dy_nm: f64,
    pub window_x_um: f64,
    pub window_y_um: f64,
    pub boundary: Boundary,
    /// Sub-samples per cell side used for dielectric averaging.
    pub subpixel: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            dx_nm: 10.0,
            dy_nm: 10.0,
            window_x_um: 3.2,
            window_y_um: 3.4,
            boundary: Boundary::Conductor,
            subpixel: 8,
        }
    }
}

impl GridSpec {
    pub fn with_step(&self, step_nm: f64) -> Self {
        Self {
            dx_nm: step_nm,
            dy_nm: step_nm,
            ..self.clone()
        }
    }
}

pub const MIN_MARGIN_NM: f64 = 1000.0;

pub fn validate(spec: &CrossSectionSpec, grid: &GridSpec) -> Result<()> {
    let positive = [
        ("channel_width", spec.channel_width_nm),
        ("channel_thickness", spec.channel_thickness_nm),
        ("fiber_radius", spec.fiber_radius_nm),
        ("wavelength", spec.wavelength_um),
        ("dx", grid.dx_nm),
        ("dy", grid.dy_nm),
        ("window_x", grid.window_x_um),
        ("window_y", grid.window_y_um),
    ];
    for (name, v) in positive {
        if !(v > 0.0) || !v.is_finite() {
            return Err(CouplerError::InvalidGeometry(format!("{name} must be positive")));
        }
    }
    if !(spec.gap_nm >= 0.0) {
        return Err(CouplerError::InvalidGeometry("gap must be non-negative".into()));
    }
    for (name, v) in [
        ("channel_index", spec.channel_index),
        ("fiber_index", spec.fiber_index),
        ("background_index", spec.background_index),
    ] {
        if !(v >= 1.0) || !v.is_finite() {
            return Err(CouplerError::InvalidGeometry(format!("{name} must be at least 1")));
        }
    }
    if grid.subpixel == 0 {
        return Err(CouplerError::InvalidGeometry("subpixel must be at least 1".into()));
    }
    let (x0, x1, y0, y1) = spec.bounding_box_nm();
    let wx = 1000.0 * grid.window_x_um;
    let wy = 1000.0 * grid.window_y_um;
    if x1 - x0 >= wx || y1 - y0 >= wy {
        return Err(CouplerError::InvalidGeometry("window must enclose geometry".into()));
    }
    let margin_x = 0.5 * wx - x0.abs().max(x1.abs());
    let margin_y = 0.5 * (wy - (y1 - y0));
    if margin_x < MIN_MARGIN_NM - 0.5 * grid.dx_nm || margin_y < MIN_MARGIN_NM - 0.5 * grid.dy_nm {
        return Err(CouplerError::InvalidGeometry(format!(
            "window must leave {MIN_MARGIN_NM} nm of background margin (have {margin_x:.0} x {margin_y:.0} nm)"
        )));
    }
    if let Boundary::Absorbing { cells, strength } = grid.boundary {
        if cells == 0 || !(strength >= 0.0) {
            return Err(CouplerError::InvalidGeometry(
                "absorbing layer needs cells > 0 and strength >= 0".into(),
            ));
        }
    }
    Ok(())
}

/// Which bodies are present in a rasterized map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scene {
    Coupler,
    FiberOnly,
    ChannelOnly,
}

impl Scene {
    fn permittivity(self, spec: &CrossSectionSpec, x: f64, y: f64) -> f64 {
        let (fx, fy) = spec.fiber_center_nm();
        if self != Scene::FiberOnly
            && x.abs() <= 0.5 * spec.channel_width_nm
            && y.abs() <= 0.5 * spec.channel_thickness_nm
        {
            return spec.channel_index * spec.channel_index;
        }
        if self != Scene::ChannelOnly {
            let (dx, dy) = (x - fx, y - fy);
            if dx * dx + dy * dy <= spec.fiber_radius_nm * spec.fiber_radius_nm {
                return spec.fiber_index * spec.fiber_index;
            }
        }
        spec.background_index * spec.background_index
    }
}

/// Relative permittivity at the staggered electric sample points.
///
/// `nx, ny` count cells; nodes run `0..=nx`, `0..=ny`. Storage is row-major in
/// `y` with row lengths `nx` (`eps_x`) or `nx + 1` (`eps_y`, `eps_z`).
#[derive(Debug, Clone, PartialEq)]
pub struct PermittivityMap {
    pub nx: usize,
    pub ny: usize,
    pub dx_nm: f64,
    pub dy_nm: f64,
    pub x0_nm: f64,
    pub y0_nm: f64,
    pub eps_x: Vec<f64>,
    pub eps_y: Vec<f64>,
    pub eps_z: Vec<f64>,
    pub boundary: Boundary,
    pub wavelength_um: f64,
    pub mirror_symmetric: bool,
}

/// Node layout shared by every scene of one `(spec, grid)` pair, so coupler and
/// fiber-only maps coincide cell for cell.
fn layout(spec: &CrossSectionSpec, grid: &GridSpec) -> (usize, usize, f64, f64) {
    let mut nx = (1000.0 * grid.window_x_um / grid.dx_nm).round() as usize;
    if nx % 2 == 1 {
        nx += 1;
    }
    let ny = (1000.0 * grid.window_y_um / grid.dy_nm).round() as usize;
    let (_, _, y_lo, y_hi) = spec.bounding_box_nm();
    let yc = 0.5 * (y_lo + y_hi);
    // y = 0 (channel centre) falls on a node
    let j0 = ((0.5 * ny as f64 * grid.dy_nm - yc) / grid.dy_nm).round();
    (nx, ny, -((nx / 2) as f64) * grid.dx_nm, -j0 * grid.dy_nm)
}

pub fn rasterize(spec: &CrossSectionSpec, grid: &GridSpec) -> Result<PermittivityMap> {
    rasterize_scene(spec, grid, Scene::Coupler)
}

pub fn rasterize_scene(spec: &CrossSectionSpec, grid: &GridSpec, scene: Scene) -> Result<PermittivityMap> {
    validate(spec, grid)?;
    let (nx, ny, x0, y0) = layout(spec, grid);
    let mut map = PermittivityMap::from_function(
        nx,
        ny,
        grid.dx_nm,
        grid.dy_nm,
        x0,
        y0,
        grid.subpixel,
        spec.is_mirror_symmetric(),
        |x, y| scene.permittivity(spec, x, y),
    );
    map.boundary = grid.boundary;
    map.wavelength_um = spec.wavelength_um;
    Ok(map)
}

impl PermittivityMap {
    /// Samples `eps(x_nm, y_nm)` with sub-pixel averaging. When `mirror` is
    /// set the left half is computed and reflected about the central node
    /// column, which requires `nx` even and `x0 = -nx dx / 2`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_function(
        nx: usize,
        ny: usize,
        dx_nm: f64,
        dy_nm: f64,
        x0_nm: f64,
        y0_nm: f64,
        subpixel: usize,
        mirror: bool,
        eps: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let mirror = mirror && nx % 2 == 0;
        let half = nx / 2;
        let s = subpixel.max(1);
        let offsets: Vec<f64> = (0..s).map(|k| (k as f64 + 0.5) / s as f64 - 0.5).collect();
        // integer multiples of dx from the axis keep the mirror image exact
        let xc = |twice_i: i64| {
            if mirror {
                (twice_i - nx as i64) as f64 * 0.5 * dx_nm
            } else {
                x0_nm + twice_i as f64 * 0.5 * dx_nm
            }
        };
        let yc = |twice_j: i64| y0_nm + twice_j as f64 * 0.5 * dy_nm;
        // probe positions including the cell edges, so interfaces close to an
        // edge are still detected
        let probes: Vec<f64> = std::iter::once(-0.5)
            .chain(offsets.iter().copied())
            .chain(std::iter::once(0.5))
            .collect();
        // exact (eps, 1/eps) means along one line through the cell; sample
        // changes are resolved by bisection
        let line = |at: &dyn Fn(f64) -> f64| -> (f64, f64) {
            let mut sum = 0.0;
            let mut inv = 0.0;
            let mut start = -0.5;
            let mut value = at(-0.5);
            for w in probes.windows(2) {
                let next = at(w[1]);
                if next != value {
                    let (mut lo, mut hi) = (w[0], w[1]);
                    for _ in 0..40 {
                        let mid = 0.5 * (lo + hi);
                        if at(mid) == value {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    let cut = 0.5 * (lo + hi);
                    sum += value * (cut - start);
                    inv += (cut - start) / value;
                    start = cut;
                    value = next;
                }
            }
            sum += value * (0.5 - start);
            inv += (0.5 - start) / value;
            (sum, inv)
        };
        let average = |cx: f64, cy: f64, axis: Axis| -> f64 {
            let (mut mx, mut my) = (0.0, 0.0);
            let first = eps(cx - 0.5 * dx_nm, cy - 0.5 * dy_nm);
            let mut uniform = true;
            for &oy in &probes {
                for &ox in &probes {
                    let e = eps(cx + ox * dx_nm, cy + oy * dy_nm);
                    uniform &= e == first;
                    mx += e * ox * dx_nm;
                    my += e * oy * dy_nm;
                }
            }
            if uniform {
                return first;
            }
            let nrm = (mx * mx + my * my).sqrt();
            // integrate exactly along the dominant normal, one line per sub-row
            let along_x = mx.abs() >= my.abs();
            let (mut sum, mut inv) = (0.0, 0.0);
            for &o in &offsets {
                let (a, b) = if along_x {
                    line(&|t| eps(cx + t * dx_nm, cy + o * dy_nm))
                } else {
                    line(&|t| eps(cx + o * dx_nm, cy + t * dy_nm))
                };
                sum += a;
                inv += b;
            }
            let mean = sum / s as f64;
            let mean_inv = inv / s as f64;
            let n2 = match axis {
                Axis::Z => return mean,
                _ if nrm <= 1e-12 * mean * dx_nm.max(dy_nm) => return 1.0 / mean_inv,
                Axis::X => (mx / nrm).powi(2),
                Axis::Y => (my / nrm).powi(2),
            };
            1.0 / (n2 * mean_inv + (1.0 - n2) / mean)
        };
        let cols_x = if mirror { half } else { nx };
        let cols_n = if mirror { half + 1 } else { nx + 1 };
        let mut eps_x = vec![0.0; nx * (ny + 1)];
        let mut eps_y = vec![0.0; (nx + 1) * ny];
        let mut eps_z = vec![0.0; (nx + 1) * (ny + 1)];
        for j in 0..=ny {
            for i in 0..cols_x {
                eps_x[j * nx + i] = average(xc(2 * i as i64 + 1), yc(2 * j as i64), Axis::X);
            }
            for i in 0..cols_n {
                eps_z[j * (nx + 1) + i] = average(xc(2 * i as i64), yc(2 * j as i64), Axis::Z);
                if j < ny {
                    eps_y[j * (nx + 1) + i] = average(xc(2 * i as i64), yc(2 * j as i64 + 1), Axis::Y);
                }
            }
        }
        if mirror {
            for j in 0..=ny {
                for i in half..nx {
                    eps_x[j * nx + i] = eps_x[j * nx + nx - 1 - i];
                }
                for i in half + 1..=nx {
                    eps_z[j * (nx + 1) + i] = eps_z[j * (nx + 1) + nx - i];
                    if j < ny {
                        eps_y[j * (nx + 1) + i] = eps_y[j * (nx + 1) + nx - i];
                    }
                }
            }
        }
        Self {
            nx,
            ny,
            dx_nm,
            dy_nm,
            x0_nm: if mirror { -(half as f64) * dx_nm } else { x0_nm },
            y0_nm,
            eps_x,
            eps_y,
            eps_z,
            boundary: Boundary::Conductor,
            wavelength_um: 1.0,
            mirror_symmetric: mirror,
        }
    }

    pub fn node_x(&self, i: usize) -> f64 {
        self.x0_nm + i as f64 * self.dx_nm
    }

    pub fn node_y(&self, j: usize) -> f64 {
        self.y0_nm + j as f64 * self.dy_nm
    }

    pub fn ex(&self, i: usize, j: usize) -> f64 {
        self.eps_x[j * self.nx + i]
    }

    pub fn ey(&self, i: usize, j: usize) -> f64 {
        self.eps_y[j * (self.nx + 1) + i]
    }

    pub fn ez(&self, i: usize, j: usize) -> f64 {
        self.eps_z[j * (self.nx + 1) + i]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.eps_x
            .iter()
            .chain(&self.eps_y)
            .chain(&self.eps_z)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)))
    }

    /// Checks mirror symmetry about the central node column, bit for bit.
    pub fn is_mirror_exact(&self) -> bool {
        if self.nx % 2 == 1 {
            return false;
        }
        let nx = self.nx;
        (0..=self.ny).all(|j| {
            (0..nx).all(|i| self.ex(i, j) == self.ex(nx - 1 - i, j))
                && (0..=nx).all(|i| self.ez(i, j) == self.ez(nx - i, j))
                && (j == self.ny || (0..=nx).all(|i| self.ey(i, j) == self.ey(nx - i, j)))
        })
    }

    /// Dielectric area (nm^2) of a single body on a `background`, from the
    /// fractional fill of each `Ez` cell.
    pub fn filled_area_nm2(&self, background: f64, inside: f64) -> f64 {
        let span = inside - background;
        let fill: f64 = self
            .eps_z
            .iter()
            .map(|&e| ((e - background) / span).clamp(0.0, 1.0))
            .sum();
        fill * self.dx_nm * self.dy_nm
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.dx_nm == other.dx_nm
            && self.dy_nm == other.dy_nm
            && self.x0_nm == other.x0_nm
            && self.y0_nm == other.y0_nm
            && self.boundary == other.boundary
    }
}

#[derive(Clone, Copy)]
enum Axis {
    X,
    Y,
    Z,
}
