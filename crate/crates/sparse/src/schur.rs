//! Small dense complex Schur utilities for the projected Krylov problem.

use nalgebra::DMatrix;

use crate::error::{Result, SparseError};
use crate::scalar::C64;

/// Complex Schur form `A = Q T Q^H` with `T` upper triangular.
pub struct ComplexSchur {
    pub q: DMatrix<C64>,
    pub t: DMatrix<C64>,
}

impl ComplexSchur {
    pub fn new(a: DMatrix<C64>) -> Result<Self> {
        let n = a.nrows();
        let schur = nalgebra::linalg::Schur::try_new(a, 1e-15, 1000 * n.max(10))
            .ok_or_else(|| SparseError::DenseFailure("Schur iteration did not converge".into()))?;
        let (q, mut t) = schur.unpack();
        for j in 0..n {
            for i in j + 1..n {
                t[(i, j)] = C64::new(0.0, 0.0);
            }
        }
        Ok(Self { q, t })
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    pub fn eigenvalue(&self, i: usize) -> C64 {
        self.t[(i, i)]
    }

    /// Swaps diagonal entries `k` and `k + 1` with a unitary rotation,
    /// preserving `Q T Q^H`.
    pub fn swap(&mut self, k: usize) {
        let n = self.dim();
        let t11 = self.t[(k, k)];
        let t22 = self.t[(k + 1, k + 1)];
        let (c, s) = givens(self.t[(k, k + 1)], t22 - t11);
        for j in k + 2..n {
            let (x, y) = (self.t[(k, j)], self.t[(k + 1, j)]);
            self.t[(k, j)] = x * c + s * y;
            self.t[(k + 1, j)] = y * c - s.conj() * x;
        }
        let sc = s.conj();
        for i in 0..k {
            let (x, y) = (self.t[(i, k)], self.t[(i, k + 1)]);
            self.t[(i, k)] = x * c + sc * y;
            self.t[(i, k + 1)] = y * c - sc.conj() * x;
        }
        self.t[(k, k)] = t22;
        self.t[(k + 1, k + 1)] = t11;
        for i in 0..n {
            let (x, y) = (self.q[(i, k)], self.q[(i, k + 1)]);
            self.q[(i, k)] = x * c + sc * y;
            self.q[(i, k + 1)] = y * c - sc.conj() * x;
        }
    }

    /// Reorders so that diagonal entries appear in descending `key` order
    /// (stable bubble sort through adjacent swaps).
    pub fn sort_by_key_desc(&mut self, key: impl Fn(C64) -> f64) {
        let n = self.dim();
        for pass in 0..n {
            let mut swapped = false;
            for k in 0..n - 1 - pass.min(n - 1) {
                if key(self.t[(k, k)]) < key(self.t[(k + 1, k + 1)]) {
                    self.swap(k);
                    swapped = true;
                }
            }
            if !swapped {
                break;
            }
        }
    }

    /// Eigenvector of the triangular factor for diagonal entry `i`
    /// (components beyond `i` are zero).
    pub fn triangular_eigenvector(&self, i: usize) -> Vec<C64> {
        let n = self.dim();
        let theta = self.t[(i, i)];
        let scale = self.t.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
        let floor = f64::EPSILON * scale;
        let mut y = vec![C64::new(0.0, 0.0); n];
        y[i] = C64::new(1.0, 0.0);
        for r in (0..i).rev() {
            let mut acc = C64::new(0.0, 0.0);
            for c in r + 1..=i {
                acc += self.t[(r, c)] * y[c];
            }
            let mut den = self.t[(r, r)] - theta;
            if den.norm() < floor {
                den = C64::new(floor, 0.0);
            }
            y[r] = -acc / den;
        }
        y
    }
}

/// Plane rotation `[c s; -conj(s) c]` mapping `(f, g)` to `(r, 0)`.
fn givens(f: C64, g: C64) -> (f64, C64) {
    let fa = f.norm();
    let ga = g.norm();
    if ga == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    if fa == 0.0 {
        return (0.0, g.conj() / ga);
    }
    let d = (fa * fa + ga * ga).sqrt();
    let c = fa / d;
    let s = (f / fa) * g.conj() / d;
    (c, s)
}
