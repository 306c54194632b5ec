//! Full-vector finite-difference mode solver on the staggered grid.
//!
//! Lengths are scaled by `k0 = 2 pi / lambda` and `H` by the vacuum impedance,
//! so the transverse-E operator has eigenvalues `n_eff^2`. Field dependence
//! is `exp(i (beta z - omega t))`.
//!
//! For mirror-symmetric maps the problem splits on the axis `x = 0`: an
//! electric-wall axis keeps modes with `Ex` even, a magnetic-wall axis those
//! with `Ey` even. Each half is solved separately and unfolded afterwards.

use std::f64::consts::PI;
use std::fmt;

use qdc_sparse::{eigs_with_factors, EigenConfig, LuFactors, SparseMatrix, TripletBuilder, C64};
use serde::{Deserialize, Serialize};

use crate::error::{CouplerError, Result};
use crate::geometry::{Boundary, PermittivityMap};

const I: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wall {
    Electric,
    Magnetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymmetryClass {
    Full,
    /// Electric wall on the axis: `Ex` even, `Ey` and `Ez` odd.
    ElectricAxis,
    /// Magnetic wall on the axis: `Ex` odd, `Ey` and `Ez` even.
    MagneticAxis,
}

impl SymmetryClass {
    /// Mirror parity of `Ex` (`Ey`, `Ez`, `Hx` carry the opposite sign, `Hy` and
    /// `Hz` the same).
    fn ex_parity(self) -> f64 {
        match self {
            SymmetryClass::MagneticAxis => -1.0,
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "hEx")]
    HEx,
    #[serde(rename = "hEy")]
    HEy,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::HEx => write!(f, "hEx"),
            Family::HEy => write!(f, "hEy"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeLabel {
    pub family: Family,
    /// 1-based; rendered as a Roman numeral.
    pub ordinal: usize,
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.family, roman(self.ordinal))
    }
}

pub fn roman(mut n: usize) -> String {
    const TABLE: [(usize, &str); 9] = [
        (100, "C"),
        (90, "XC"),
        (50, "L"),
        (40, "XL"),
        (10, "X"),
        (9, "IX"),
        (5, "V"),
        (4, "IV"),
        (1, "I"),
    ];
    let mut s = String::new();
    for &(v, r) in &TABLE {
        while n >= v {
            s.push_str(r);
            n -= v;
        }
    }
    s
}

/// Six field components on the full staggered grid.
///
/// `ex`, `hy`: `nx x (ny + 1)`; `ey`, `hx`: `(nx + 1) x ny`; `ez`: `(nx + 1) x
/// (ny + 1)`; `hz`: `nx x ny`. Row-major in `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeFields {
    pub nx: usize,
    pub ny: usize,
    pub dx_nm: f64,
    pub dy_nm: f64,
    pub x0_nm: f64,
    pub y0_nm: f64,
    pub ex: Vec<C64>,
    pub ey: Vec<C64>,
    pub ez: Vec<C64>,
    pub hx: Vec<C64>,
    pub hy: Vec<C64>,
    pub hz: Vec<C64>,
}

impl ModeFields {
    fn zeros(map: &PermittivityMap) -> Self {
        let (nx, ny) = (map.nx, map.ny);
        Self {
            nx,
            ny,
            dx_nm: map.dx_nm,
            dy_nm: map.dy_nm,
            x0_nm: map.x0_nm,
            y0_nm: map.y0_nm,
            ex: vec![ZERO; nx * (ny + 1)],
            ey: vec![ZERO; (nx + 1) * ny],
            ez: vec![ZERO; (nx + 1) * (ny + 1)],
            hx: vec![ZERO; (nx + 1) * ny],
            hy: vec![ZERO; nx * (ny + 1)],
            hz: vec![ZERO; nx * ny],
        }
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.dx_nm == other.dx_nm
            && self.dy_nm == other.dy_nm
            && self.x0_nm == other.x0_nm
            && self.y0_nm == other.y0_nm
    }

    /// Cell area in um^2.
    pub fn cell_area_um2(&self) -> f64 {
        self.dx_nm * self.dy_nm * 1e-6
    }

    pub fn scale(&mut self, c: C64) {
        for v in [
            &mut self.ex,
            &mut self.ey,
            &mut self.ez,
            &mut self.hx,
            &mut self.hy,
            &mut self.hz,
        ] {
            v.iter_mut().for_each(|z| *z *= c);
        }
    }

    pub fn scaled(&self, c: C64) -> Self {
        let mut out = self.clone();
        out.scale(c);
        out
    }

    /// Fields of the counter-propagating mode: `(ex, ey, -ez, -hx, -hy, hz)`.
    pub fn backward(&self) -> Self {
        let mut out = self.clone();
        for v in [&mut out.ez, &mut out.hx, &mut out.hy] {
            v.iter_mut().for_each(|z| *z = -*z);
        }
        out
    }

    pub fn intensity_x(&self) -> f64 {
        self.ex.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    pub fn intensity_y(&self) -> f64 {
        self.ey.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    /// Electric field `(Ex, Ey, Ez)` at `(x, y)` in nm, bilinearly interpolated
    /// on each component's own lattice. `None` outside the window.
    pub fn electric_at(&self, x_nm: f64, y_nm: f64) -> Option<[C64; 3]> {
        let u = (x_nm - self.x0_nm) / self.dx_nm;
        let v = (y_nm - self.y0_nm) / self.dy_nm;
        if !(0.0..=self.nx as f64).contains(&u) || !(0.0..=self.ny as f64).contains(&v) {
            return None;
        }
        Some([
            bilinear(&self.ex, self.nx, self.ny + 1, u - 0.5, v),
            bilinear(&self.ey, self.nx + 1, self.ny, u, v - 0.5),
            bilinear(&self.ez, self.nx + 1, self.ny + 1, u, v),
        ])
    }

    /// `Ex` at its sample points, with coordinates in nm.
    pub fn ex_samples(&self) -> impl Iterator<Item = (f64, f64, C64)> + '_ {
        (0..=self.ny).flat_map(move |j| {
            (0..self.nx).map(move |i| {
                (
                    self.x0_nm + (i as f64 + 0.5) * self.dx_nm,
                    self.y0_nm + j as f64 * self.dy_nm,
                    self.ex[j * self.nx + i],
                )
            })
        })
    }
}

/// Bilinear interpolation at fractional index `(u, v)`, clamped to the lattice.
fn bilinear(data: &[C64], cols: usize, rows: usize, u: f64, v: f64) -> C64 {
    let u = u.clamp(0.0, (cols - 1) as f64);
    let v = v.clamp(0.0, (rows - 1) as f64);
    let i = (u.floor() as usize).min(cols.saturating_sub(2));
    let j = (v.floor() as usize).min(rows.saturating_sub(2));
    let (fu, fv) = (u - i as f64, v - j as f64);
    let at = |ii: usize, jj: usize| data[jj.min(rows - 1) * cols + ii.min(cols - 1)];
    at(i, j) * (1.0 - fu) * (1.0 - fv)
        + at(i + 1, j) * fu * (1.0 - fv)
        + at(i, j + 1) * (1.0 - fu) * fv
        + at(i + 1, j + 1) * fu * fv
}

#[derive(Debug, Clone)]
pub struct Supermode {
    pub label: ModeLabel,
    pub n_eff: C64,
    pub beta_rad_per_um: f64,
    pub fields: ModeFields,
    /// `Re int (e x h*) . z dS` in um^2 times field units squared.
    pub flux: f64,
    pub guided: bool,
    /// `int |ex|^2 / (int |ex|^2 + int |ey|^2)`.
    pub x_fraction: f64,
    pub ambiguous: bool,
    pub symmetry: SymmetryClass,
    pub residual: f64,
    pub divergence_residual: f64,
    pub maxwell_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub n_lo: f64,
    pub n_hi: f64,
    /// Eigenpairs requested per symmetry class; grown while the farthest one
    /// is still inside the window.
    pub count: usize,
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
    pub ordering: String,
    pub use_symmetry: bool,
    /// Modes with `Im n_eff` below this count as guided.
    pub leakage_threshold: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n_lo: 1.05,
            n_hi: 2.8,
            count: 4,
            tol: 1e-10,
            max_restarts: 400,
            seed: qdc_sparse::krylov::DEFAULT_SEED,
            ordering: qdc_sparse::OrderingRegistry::DEFAULT.to_string(),
            use_symmetry: true,
            leakage_threshold: 1e-9,
        }
    }
}

impl SolverConfig {
    pub fn with_window(&self, n_lo: f64, n_hi: f64) -> Self {
        Self {
            n_lo,
            n_hi,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveDiagnostics {
    pub symmetry: SymmetryClass,
    pub unknowns: usize,
    pub requested: usize,
    pub restarts: usize,
    pub operator_applications: usize,
    pub factor_entries: usize,
    pub max_residual: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ModeBasis {
    pub wavelength_um: f64,
    /// Sorted by family, then `Re n_eff` descending.
    pub modes: Vec<Supermode>,
    pub config: SolverConfig,
    pub boundary: Boundary,
    pub dx_nm: f64,
    pub dy_nm: f64,
    pub diagnostics: Vec<SolveDiagnostics>,
    /// Messages from tracking (weak overlaps, new labels).
    pub warnings: Vec<String>,
}

impl ModeBasis {
    pub fn get(&self, label: ModeLabel) -> Option<&Supermode> {
        self.modes.iter().find(|m| m.label == label)
    }

    pub fn family(&self, family: Family) -> impl Iterator<Item = &Supermode> {
        self.modes.iter().filter(move |m| m.label.family == family)
    }

    pub fn labels(&self) -> Vec<ModeLabel> {
        self.modes.iter().map(|m| m.label).collect()
    }
}

/// One straight line of staggered samples between two walls.
#[derive(Debug, Clone)]
struct Line {
    /// First and last node index (inclusive) in the map.
    lo: usize,
    hi: usize,
    /// Map node indices of the integer-position unknowns.
    ints: Vec<usize>,
    /// `1 / (h s)` at integer and half positions.
    inv_int: Vec<C64>,
    inv_half: Vec<C64>,
    lo_wall: Wall,
    hi_wall: Wall,
}

impl Line {
    #[allow(clippy::too_many_arguments)]
    fn new(
        lo: usize,
        hi: usize,
        lo_wall: Wall,
        hi_wall: Wall,
        step: f64,
        total: usize,
        pml: Option<(usize, f64)>,
    ) -> Self {
        let ints: Vec<usize> = (lo..=hi)
            .filter(|&i| !((i == lo && lo_wall == Wall::Electric) || (i == hi && hi_wall == Wall::Electric)))
            .collect();
        // position measured in cells from node 0 of the full window
        let stretch = |pos: f64| -> C64 {
            match pml {
                Some((cells, strength)) if cells > 0 => {
                    let c = cells as f64;
                    let depth = (c - pos).max(pos - (total as f64 - c)).max(0.0) / c;
                    ONE + I * strength * depth * depth
                }
                _ => ONE,
            }
        };
        let inv_int = ints.iter().map(|&i| ONE / (stretch(i as f64) * step)).collect();
        let inv_half = (lo..hi).map(|i| ONE / (stretch(i as f64 + 0.5) * step)).collect();
        Self {
            lo,
            hi,
            ints,
            inv_int,
            inv_half,
            lo_wall,
            hi_wall,
        }
    }

    fn n_half(&self) -> usize {
        self.hi - self.lo
    }

    fn n_int(&self) -> usize {
        self.ints.len()
    }

    fn int_slot(&self, node: usize) -> Option<usize> {
        let first = self.ints.first().copied()?;
        let k = node.checked_sub(first)?;
        (k < self.ints.len()).then_some(k)
    }

    /// Integer to half positions.
    fn forward(&self) -> SparseMatrix<C64> {
        let mut b = TripletBuilder::new(self.n_half(), self.n_int());
        for p in 0..self.n_half() {
            let node = self.lo + p;
            if let Some(q) = self.int_slot(node + 1) {
                b.push(p, q, self.inv_half[p]);
            }
            if let Some(q) = self.int_slot(node) {
                b.push(p, q, -self.inv_half[p]);
            }
        }
        b.build()
    }

    /// Half to integer positions; half-position samples are odd across a
    /// magnetic wall.
    fn backward(&self) -> SparseMatrix<C64> {
        let mut b = TripletBuilder::new(self.n_int(), self.n_half());
        for (q, &node) in self.ints.iter().enumerate() {
            let w = self.inv_int[q];
            if node == self.lo && self.lo_wall == Wall::Magnetic {
                b.push(q, 0, w * 2.0);
            } else if node == self.hi && self.hi_wall == Wall::Magnetic {
                b.push(q, self.n_half() - 1, -w * 2.0);
            } else {
                b.push(q, node - self.lo, w);
                b.push(q, node - self.lo - 1, -w);
            }
        }
        b.build()
    }
}

fn kron(a: &SparseMatrix<C64>, b: &SparseMatrix<C64>) -> SparseMatrix<C64> {
    let (p, q) = (b.nrows(), b.ncols());
    let mut t = TripletBuilder::with_capacity(a.nrows() * p, a.ncols() * q, a.nnz() * b.nnz());
    for i in 0..a.nrows() {
        let (ac, av) = a.row(i);
        for (&j, &x) in ac.iter().zip(av) {
            for k in 0..p {
                let (bc, bv) = b.row(k);
                for (&l, &y) in bc.iter().zip(bv) {
                    t.push(i * p + k, j * q + l, x * y);
                }
            }
        }
    }
    t.build()
}

fn diag(v: Vec<C64>) -> SparseMatrix<C64> {
    SparseMatrix::from_diagonal(&v)
}

fn mul(a: &SparseMatrix<C64>, b: &SparseMatrix<C64>) -> SparseMatrix<C64> {
    a.matmul(b).expect("conforming operator product")
}

fn add(a: &SparseMatrix<C64>, b: &SparseMatrix<C64>) -> SparseMatrix<C64> {
    a.add(b).expect("conforming operator sum")
}

fn sub(a: &SparseMatrix<C64>, b: &SparseMatrix<C64>) -> SparseMatrix<C64> {
    a.sub(b).expect("conforming operator difference")
}

/// Assembled transverse-E operator with the pieces needed to rebuild the
/// remaining field components.
pub struct Operator {
    pub matrix: SparseMatrix<C64>,
    pub symmetry: SymmetryClass,
    x: Line,
    y: Line,
    eps_x: Vec<C64>,
    eps_y: Vec<C64>,
    eps_z: Vec<C64>,
    dxf_ii: SparseMatrix<C64>,
    dxb_hi: SparseMatrix<C64>,
    dyf_hi: SparseMatrix<C64>,
    dyb_hh_x: SparseMatrix<C64>,
    dyb_ih: SparseMatrix<C64>,
    dyf_ii: SparseMatrix<C64>,
    dxf_ih: SparseMatrix<C64>,
    dxb_hh_y: SparseMatrix<C64>,
}

impl Operator {
    pub fn n_ex(&self) -> usize {
        self.x.n_half() * self.y.n_int()
    }

    pub fn n_ey(&self) -> usize {
        self.x.n_int() * self.y.n_half()
    }

    pub fn is_real(&self) -> bool {
        self.matrix.values().iter().all(|z| z.im == 0.0)
    }
}

pub fn assemble(map: &PermittivityMap, symmetry: SymmetryClass) -> Operator {
    let k0_per_nm = 2.0 * PI / (map.wavelength_um * 1000.0);
    let pml = match map.boundary {
        Boundary::Conductor => None,
        Boundary::Absorbing { cells, strength } => Some((cells, strength)),
    };
    let (xlo, xwall) = match symmetry {
        SymmetryClass::Full => (0, Wall::Electric),
        SymmetryClass::ElectricAxis => (map.nx / 2, Wall::Electric),
        SymmetryClass::MagneticAxis => (map.nx / 2, Wall::Magnetic),
    };
    let x = Line::new(xlo, map.nx, xwall, Wall::Electric, k0_per_nm * map.dx_nm, map.nx, pml);
    let y = Line::new(0, map.ny, Wall::Electric, Wall::Electric, k0_per_nm * map.dy_nm, map.ny, pml);

    let ix_h = SparseMatrix::<C64>::identity(x.n_half());
    let ix_i = SparseMatrix::<C64>::identity(x.n_int());
    let iy_h = SparseMatrix::<C64>::identity(y.n_half());
    let iy_i = SparseMatrix::<C64>::identity(y.n_int());
    let (dxf, dxb, dyf, dyb) = (x.forward(), x.backward(), y.forward(), y.backward());

    let dxf_ii = kron(&iy_i, &dxf); // (i,i) -> (h,i)
    let dxb_hi = kron(&iy_i, &dxb); // (h,i) -> (i,i)
    let dyf_hi = kron(&dyf, &ix_h); // (h,i) -> (h,h)
    let dyb_hh_x = kron(&dyb, &ix_h); // (h,h) -> (h,i)
    let dyb_ih = kron(&dyb, &ix_i); // (i,h) -> (i,i)
    let dyf_ii = kron(&dyf, &ix_i); // (i,i) -> (i,h)
    let dxf_ih = kron(&iy_h, &dxf); // (i,h) -> (h,h)
    let dxb_hh_y = kron(&iy_h, &dxb); // (h,h) -> (i,h)

    let mut eps_x = Vec::with_capacity(x.n_half() * y.n_int());
    for &j in &y.ints {
        for i in x.lo..x.hi {
            eps_x.push(C64::new(map.ex(i, j), 0.0));
        }
    }
    let mut eps_y = Vec::with_capacity(x.n_int() * y.n_half());
    for j in y.lo..y.hi {
        for &i in &x.ints {
            eps_y.push(C64::new(map.ey(i, j), 0.0));
        }
    }
    let mut eps_z = Vec::with_capacity(x.n_int() * y.n_int());
    for &j in &y.ints {
        for &i in &x.ints {
            eps_z.push(C64::new(map.ez(i, j), 0.0));
        }
    }
    let ex_d = diag(eps_x.clone());
    let ey_d = diag(eps_y.clone());
    let inv_ez = diag(eps_z.iter().map(|e| ONE / e).collect());

    let grad_div_x = mul(&dxf_ii, &inv_ez);
    let grad_div_y = mul(&dyf_ii, &inv_ez);
    let axx = add(
        &add(&ex_d, &mul(&dyb_hh_x, &dyf_hi)),
        &mul(&mul(&grad_div_x, &dxb_hi), &ex_d),
    );
    let axy = sub(&mul(&mul(&grad_div_x, &dyb_ih), &ey_d), &mul(&dyb_hh_x, &dxf_ih));
    let ayx = sub(&mul(&mul(&grad_div_y, &dxb_hi), &ex_d), &mul(&dxb_hh_y, &dyf_hi));
    let ayy = add(
        &add(&ey_d, &mul(&dxb_hh_y, &dxf_ih)),
        &mul(&mul(&grad_div_y, &dyb_ih), &ey_d),
    );

    let nex = axx.nrows();
    let n = nex + ayy.nrows();
    let mut t = TripletBuilder::with_capacity(n, n, axx.nnz() + axy.nnz() + ayx.nnz() + ayy.nnz());
    for (block, r0, c0) in [(&axx, 0, 0), (&axy, 0, nex), (&ayx, nex, 0), (&ayy, nex, nex)] {
        for r in 0..block.nrows() {
            let (cols, vals) = block.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                if v != ZERO {
                    t.push(r0 + r, c0 + c, v);
                }
            }
        }
    }
    Operator {
        matrix: t.build(),
        symmetry,
        x,
        y,
        eps_x,
        eps_y,
        eps_z,
        dxf_ii,
        dxb_hi,
        dyf_hi,
        dyb_hh_x,
        dyb_ih,
        dyf_ii,
        dxf_ih,
        dxb_hh_y,
    }
}

struct Reconstructed {
    fields: ModeFields,
    divergence_residual: f64,
    maxwell_residual: f64,
}

fn axpy_vec(a: &[C64], b: &[C64], alpha: C64, beta: C64) -> Vec<C64> {
    a.iter().zip(b).map(|(&x, &y)| alpha * x + beta * y).collect()
}

fn max_abs(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Rebuilds all six components from `[Ex; Ey]` and unfolds half-domain
/// solutions onto the full grid.
fn reconstruct(op: &Operator, map: &PermittivityMap, n_eff: C64, v: &[C64]) -> Reconstructed {
    let beta = n_eff;
    let (ex, ey) = v.split_at(op.n_ex());
    let hz: Vec<C64> = axpy_vec(&op.dxf_ih.mul_vec(ey), &op.dyf_hi.mul_vec(ex), -I, I);
    let exe: Vec<C64> = ex.iter().zip(&op.eps_x).map(|(a, e)| a * e).collect();
    let eye: Vec<C64> = ey.iter().zip(&op.eps_y).map(|(a, e)| a * e).collect();
    let hy: Vec<C64> = axpy_vec(&op.dyb_hh_x.mul_vec(&hz), &exe, ONE / (I * beta), ONE / beta);
    let hx: Vec<C64> = axpy_vec(&op.dxb_hh_y.mul_vec(&hz), &eye, ONE / (I * beta), -ONE / beta);
    let curl_h = axpy_vec(&op.dxb_hi.mul_vec(&hy), &op.dyb_ih.mul_vec(&hx), ONE, -ONE);
    let ez: Vec<C64> = curl_h.iter().zip(&op.eps_z).map(|(c, e)| I * c / e).collect();

    // div(eps E) = 0
    let div_x = op.dxb_hi.mul_vec(&exe);
    let div_y = op.dyb_ih.mul_vec(&eye);
    let mut div_scale = 0.0f64;
    let mut div_max = 0.0f64;
    for k in 0..ez.len() {
        let t3 = I * beta * op.eps_z[k] * ez[k];
        div_scale = div_scale.max(div_x[k].norm() + div_y[k].norm() + t3.norm());
        div_max = div_max.max((div_x[k] + div_y[k] + t3).norm());
    }
    // the two curl equations not used above: i Hx = dy Ez - i beta Ey, i Hy = i beta Ex - dx Ez
    let dy_ez = op.dyf_ii.mul_vec(&ez);
    let dx_ez = op.dxf_ii.mul_vec(&ez);
    let mut mx_max = 0.0f64;
    for k in 0..hx.len() {
        let r = I * hx[k] - (dy_ez[k] - I * beta * ey[k]);
        mx_max = mx_max.max(r.norm());
    }
    for k in 0..hy.len() {
        let r = I * hy[k] - (I * beta * ex[k] - dx_ez[k]);
        mx_max = mx_max.max(r.norm());
    }
    let mx_scale = max_abs(&hx).max(max_abs(&hy)).max(f64::MIN_POSITIVE);

    let mut f = ModeFields::zeros(map);
    let nx = map.nx;
    let p = op.symmetry.ex_parity();
    let unfold = op.symmetry != SymmetryClass::Full;
    // (h,i) lattice: ex, hy
    for (q, &j) in op.y.ints.iter().enumerate() {
        for a in 0..op.x.n_half() {
            let i = op.x.lo + a;
            let k = q * op.x.n_half() + a;
            f.ex[j * nx + i] = ex[k];
            f.hy[j * nx + i] = hy[k];
            if unfold {
                f.ex[j * nx + nx - 1 - i] = ex[k] * p;
                f.hy[j * nx + nx - 1 - i] = hy[k] * p;
            }
        }
    }
    // (i,h) lattice: ey, hx
    for j in 0..op.y.n_half() {
        for (a, &i) in op.x.ints.iter().enumerate() {
            let k = j * op.x.n_int() + a;
            f.ey[j * (nx + 1) + i] = ey[k];
            f.hx[j * (nx + 1) + i] = hx[k];
            if unfold && i != nx / 2 {
                f.ey[j * (nx + 1) + nx - i] = -ey[k] * p;
                f.hx[j * (nx + 1) + nx - i] = -hx[k] * p;
            }
        }
    }
    // (i,i): ez
    for (q, &j) in op.y.ints.iter().enumerate() {
        for (a, &i) in op.x.ints.iter().enumerate() {
            let k = q * op.x.n_int() + a;
            f.ez[j * (nx + 1) + i] = ez[k];
            if unfold && i != nx / 2 {
                f.ez[j * (nx + 1) + nx - i] = -ez[k] * p;
            }
        }
    }
    // (h,h): hz
    for j in 0..op.y.n_half() {
        for a in 0..op.x.n_half() {
            let i = op.x.lo + a;
            let k = j * op.x.n_half() + a;
            f.hz[j * nx + i] = hz[k];
            if unfold {
                f.hz[j * nx + nx - 1 - i] = hz[k] * p;
            }
        }
    }
    Reconstructed {
        fields: f,
        divergence_residual: div_max / div_scale.max(f64::MIN_POSITIVE),
        maxwell_residual: mx_max / mx_scale,
    }
}

/// `Re sum (ex hy* - ey hx*) dA` in um^2.
pub fn power_flux(f: &ModeFields) -> f64 {
    cross_z(f, f).re
}

/// `sum (a_e x b_h*) . z dA`.
pub fn cross_z(a: &ModeFields, b: &ModeFields) -> C64 {
    let s1: C64 = a.ex.iter().zip(&b.hy).map(|(e, h)| e * h.conj()).sum();
    let s2: C64 = a.ey.iter().zip(&b.hx).map(|(e, h)| e * h.conj()).sum();
    (s1 - s2) * a.cell_area_um2()
}

/// Scales so the dominant transverse component peaks at `1 + 0i`. Returns the
/// `x` power fraction.
fn fix_phase(f: &mut ModeFields) -> f64 {
    let px = f.intensity_x();
    let py = f.intensity_y();
    let comp = if px >= py { &f.ex } else { &f.ey };
    let mut best = ZERO;
    let mut best_abs = -1.0;
    for z in comp {
        if z.norm() > best_abs {
            best_abs = z.norm();
            best = *z;
        }
    }
    if best_abs > 0.0 {
        f.scale(best.conj() / (best_abs * best_abs));
    }
    px / (px + py).max(f64::MIN_POSITIVE)
}

pub fn classify_fraction(x_fraction: f64) -> (Family, bool) {
    let family = if x_fraction > 0.5 { Family::HEx } else { Family::HEy };
    // polarization integrals within 5 % of each other
    let ambiguous = (2.0 * x_fraction - 1.0).abs() < 0.05;
    (family, ambiguous)
}

/// Family of a mode from its reconstructed fields and an ambiguity flag.
pub fn classify(fields: &ModeFields) -> (Family, bool) {
    let px = fields.intensity_x();
    let py = fields.intensity_y();
    classify_fraction(px / (px + py).max(f64::MIN_POSITIVE))
}

fn sort_and_label(modes: &mut [Supermode]) {
    modes.sort_by(|a, b| {
        a.label
            .family
            .cmp(&b.label.family)
            .then(b.n_eff.re.total_cmp(&a.n_eff.re))
    });
    let mut counter = [0usize; 2];
    for m in modes.iter_mut() {
        let slot = &mut counter[m.label.family as usize];
        *slot += 1;
        m.label.ordinal = *slot;
    }
}

/// Finds every mode with `Re n_eff` in `[n_lo, n_hi]`.
pub fn solve_modes(map: &PermittivityMap, cfg: &SolverConfig) -> Result<ModeBasis> {
    if !(cfg.n_lo < cfg.n_hi) || cfg.count == 0 {
        return Err(CouplerError::InvalidParameter(format!(
            "search window [{}, {}] with count {}",
            cfg.n_lo, cfg.n_hi, cfg.count
        )));
    }
    let classes: &[SymmetryClass] = if cfg.use_symmetry && map.mirror_symmetric && map.nx % 2 == 0 {
        &[SymmetryClass::ElectricAxis, SymmetryClass::MagneticAxis]
    } else {
        &[SymmetryClass::Full]
    };
    let mut modes = Vec::new();
    let mut diagnostics = Vec::new();
    for &class in classes {
        let (found, diag) = solve_class(map, cfg, class)?;
        modes.extend(found);
        diagnostics.push(diag);
    }
    sort_and_label(&mut modes);
    Ok(ModeBasis {
        wavelength_um: map.wavelength_um,
        modes,
        config: cfg.clone(),
        boundary: map.boundary,
        dx_nm: map.dx_nm,
        dy_nm: map.dy_nm,
        diagnostics,
        warnings: Vec::new(),
    })
}

fn solve_class(
    map: &PermittivityMap,
    cfg: &SolverConfig,
    class: SymmetryClass,
) -> Result<(Vec<Supermode>, SolveDiagnostics)> {
    let start = std::time::Instant::now();
    let op = assemble(map, class);
    let n = op.matrix.nrows();
    let shift = C64::new(cfg.n_hi * cfg.n_hi, 0.0);
    let context = |what: &str| format!("{what} ({class:?}, {n} unknowns)");
    let wrap = |what: &str| {
        let ctx = context(what);
        move |source| CouplerError::Eigen { context: ctx, source }
    };
    enum Factors {
        Real(SparseMatrix<f64>, LuFactors<f64>),
        Complex(LuFactors<C64>),
    }
    let factors = if op.is_real() {
        let real = op.matrix.map(|z| z.re);
        let lu = LuFactors::factorize_with(&real, shift, &cfg.ordering).map_err(wrap("factorization"))?;
        Factors::Real(real, lu)
    } else {
        Factors::Complex(LuFactors::factorize_with(&op.matrix, shift, &cfg.ordering).map_err(wrap("factorization"))?)
    };
    let mut count = cfg.count.min(n.saturating_sub(1)).max(1);
    let solution = loop {
        let mut ec = EigenConfig::new(shift, count);
        ec.tol = cfg.tol;
        ec.max_restarts = cfg.max_restarts;
        ec.seed = cfg.seed;
        ec.ordering = cfg.ordering.clone();
        ec.subspace_dim = (2 * count + 12).min(n);
        let sol = match &factors {
            Factors::Real(a, lu) => eigs_with_factors(a, lu, &ec),
            Factors::Complex(lu) => eigs_with_factors(&op.matrix, lu, &ec),
        }
        .map_err(wrap("eigen-iteration"))?;
        let farthest = sol.pairs.last().map(|p| p.value.sqrt().re).unwrap_or(0.0);
        if farthest < cfg.n_lo || count + 1 >= n {
            break sol;
        }
        count += 4;
    };
    let lu_entries = match &factors {
        Factors::Real(_, lu) => lu.stats().factor_entries,
        Factors::Complex(lu) => lu.stats().factor_entries,
    };
    let mut out = Vec::new();
    let mut max_residual = 0.0f64;
    for pair in &solution.pairs {
        let mut value = pair.value;
        // real operator: complex pairs come in conjugates, isolated ones are real
        if op.is_real() && value.im.abs() <= 1e-10 * value.norm() {
            value.im = 0.0;
        }
        let mut n_eff = value.sqrt();
        if n_eff.re < 0.0 {
            n_eff = -n_eff;
        }
        if n_eff.re < cfg.n_lo || n_eff.re > cfg.n_hi {
            continue;
        }
        max_residual = max_residual.max(pair.residual);
        let rec = reconstruct(&op, map, n_eff, &pair.vector);
        let mut fields = rec.fields;
        let x_fraction = fix_phase(&mut fields);
        let (family, ambiguous) = classify_fraction(x_fraction);
        let flux = power_flux(&fields);
        let guided = match map.boundary {
            Boundary::Conductor => true,
            Boundary::Absorbing { .. } => n_eff.im.abs() < cfg.leakage_threshold,
        };
        out.push(Supermode {
            label: ModeLabel { family, ordinal: 0 },
            n_eff,
            beta_rad_per_um: 2.0 * PI / map.wavelength_um * n_eff.re,
            fields,
            flux,
            guided,
            x_fraction,
            ambiguous,
            symmetry: class,
            residual: pair.residual,
            divergence_residual: rec.divergence_residual,
            maxwell_residual: rec.maxwell_residual,
        });
    }
    let diag = SolveDiagnostics {
        symmetry: class,
        unknowns: n,
        requested: count,
        restarts: solution.restarts,
        operator_applications: solution.operator_applications,
        factor_entries: lu_entries,
        max_residual,
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok((out, diag))
}

/// Normalized transverse overlap `|<e_a, e_b>| / (|e_a| |e_b|)`.
pub fn field_overlap(a: &ModeFields, b: &ModeFields) -> f64 {
    let dot: C64 = a
        .ex
        .iter()
        .zip(&b.ex)
        .chain(a.ey.iter().zip(&b.ey))
        .map(|(p, q)| p.conj() * q)
        .sum();
    let na = (a.intensity_x() + a.intensity_y()).sqrt();
    let nb = (b.intensity_x() + b.intensity_y()).sqrt();
    dot.norm() / (na * nb).max(f64::MIN_POSITIVE)
}

pub const TRACK_WARN_OVERLAP: f64 = 0.5;

/// Relabels `next` to follow field continuity from `prev`. Labels move only
/// within a family; modes without a partner get fresh ordinals.
pub fn track(prev: &ModeBasis, next: &ModeBasis) -> Result<ModeBasis> {
    let mut out = next.clone();
    for family in [Family::HEx, Family::HEy] {
        let p: Vec<&Supermode> = prev.family(family).collect();
        let q: Vec<usize> = (0..next.modes.len())
            .filter(|&k| next.modes[k].label.family == family)
            .collect();
        if q.is_empty() {
            continue;
        }
        for (a, pm) in p.iter().enumerate() {
            for qm in &q {
                if !pm.fields.same_grid(&next.modes[*qm].fields) {
                    return Err(CouplerError::GridMismatch(format!(
                        "cannot track {} across different grids",
                        p[a].label
                    )));
                }
            }
        }
        let overlap: Vec<Vec<f64>> = p
            .iter()
            .map(|pm| q.iter().map(|&k| field_overlap(&pm.fields, &next.modes[k].fields)).collect())
            .collect();
        let assignment = best_assignment(&overlap, p.len(), q.len());
        let mut used: Vec<usize> = Vec::new();
        let mut unassigned = Vec::new();
        for (col, &k) in q.iter().enumerate() {
            match assignment.iter().position(|&c| c == Some(col)) {
                Some(row) => {
                    let ov = overlap[row][col];
                    if ov < TRACK_WARN_OVERLAP {
                        out.warnings.push(format!(
                            "{} tracked with weak overlap {ov:.3}",
                            p[row].label
                        ));
                    }
                    out.modes[k].label = p[row].label;
                    used.push(p[row].label.ordinal);
                }
                None => unassigned.push(k),
            }
        }
        let mut next_ordinal = p.iter().map(|m| m.label.ordinal).max().unwrap_or(0);
        for k in unassigned {
            next_ordinal += 1;
            out.modes[k].label.ordinal = next_ordinal;
            out.warnings.push(format!("new mode {} appeared", out.modes[k].label));
        }
    }
    out.modes.sort_by(|a, b| a.label.cmp(&b.label));
    Ok(out)
}

/// Maximizes the summed overlap of an injective row-to-column assignment.
/// Exhaustive for up to six rows, greedy beyond.
fn best_assignment(w: &[Vec<f64>], rows: usize, cols: usize) -> Vec<Option<usize>> {
    if rows <= 6 && cols <= 8 {
        let mut best = (f64::NEG_INFINITY, vec![None; rows]);
        let mut current = vec![None; rows];
        let mut taken = vec![false; cols];
        fn recurse(
            r: usize,
            w: &[Vec<f64>],
            current: &mut Vec<Option<usize>>,
            taken: &mut Vec<bool>,
            score: f64,
            best: &mut (f64, Vec<Option<usize>>),
        ) {
            if r == current.len() {
                if score > best.0 + 1e-15 {
                    *best = (score, current.clone());
                }
                return;
            }
            let free = taken.iter().filter(|t| !**t).count();
            let remaining = current.len() - r;
            if remaining > free {
                // more rows than columns: this row may stay unmatched
                current[r] = None;
                recurse(r + 1, w, current, taken, score, best);
            }
            for c in 0..taken.len() {
                if !taken[c] {
                    taken[c] = true;
                    current[r] = Some(c);
                    recurse(r + 1, w, current, taken, score + w[r][c], best);
                    taken[c] = false;
                    current[r] = None;
                }
            }
        }
        recurse(0, w, &mut current, &mut taken, 0.0, &mut best);
        return best.1;
    }
    let mut out = vec![None; rows];
    let mut taken = vec![false; cols];
    let mut pairs: Vec<(usize, usize, f64)> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c, w[r][c])))
        .collect();
    pairs.sort_by(|a, b| b.2.total_cmp(&a.2));
    for (r, c, _) in pairs {
        if out[r].is_none() && !taken[c] {
            out[r] = Some(c);
            taken[c] = true;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roman_numerals() {
        assert_eq!(roman(1), "I");
        assert_eq!(roman(4), "IV");
        assert_eq!(roman(9), "IX");
        assert_eq!(roman(14), "XIV");
    }

    #[test]
    fn assignment_prefers_total_overlap() {
        let w = vec![vec![0.9, 0.8], vec![0.85, 0.1]];
        assert_eq!(best_assignment(&w, 2, 2), vec![Some(1), Some(0)]);
        let w = vec![vec![0.9], vec![0.2]];
        assert_eq!(best_assignment(&w, 2, 1), vec![Some(0), None]);
    }

    #[test]
    fn magnetic_wall_backward_difference_doubles() {
        let l = Line::new(0, 3, Wall::Magnetic, Wall::Electric, 1.0, 3, None);
        assert_eq!(l.ints, vec![0, 1, 2]);
        let b = l.backward();
        assert_eq!(b.get(0, 0), C64::new(2.0, 0.0));
        assert_eq!(b.get(1, 1), ONE);
        assert_eq!(b.get(1, 0), -ONE);
    }
}
