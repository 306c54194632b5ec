//! Built-in checks of the eigensolver against dense references.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::csr::{SparseMatrix, TripletBuilder};
use crate::krylov::{eigs_shift_invert, EigenConfig};
use crate::scalar::C64;
use crate::schur::ComplexSchur;

#[derive(Debug, Clone)]
pub struct CaseReport {
    pub name: String,
    pub n: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Eigenvalues nearest `shift`, from a dense Schur decomposition.
pub fn dense_nearest(a: &SparseMatrix<C64>, shift: C64, k: usize) -> Vec<C64> {
    let n = a.nrows();
    let d = a.to_dense();
    let m = DMatrix::from_fn(n, n, |i, j| d[i * n + j]);
    let schur = ComplexSchur::new(m).expect("dense Schur");
    let mut ev: Vec<C64> = (0..n).map(|i| schur.eigenvalue(i)).collect();
    ev.sort_by(|p, q| (p - shift).norm().total_cmp(&(q - shift).norm()));
    ev.truncate(k);
    ev
}

/// Random banded complex matrix with a dominant real diagonal ramp.
pub fn banded(n: usize, half_band: usize, seed: u64) -> SparseMatrix<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = TripletBuilder::new(n, n);
    for i in 0..n {
        b.push(i, i, C64::new(i as f64 / n as f64 * 4.0, 0.0));
        for j in i.saturating_sub(half_band)..(i + half_band + 1).min(n) {
            if j != i {
                b.push(i, j, C64::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.05..0.05)));
            }
        }
    }
    b.build()
}

/// 1D Dirichlet Laplacian `tridiag(-1, 2, -1)`.
pub fn laplacian_1d(n: usize) -> SparseMatrix<f64> {
    let mut b = TripletBuilder::new(n, n);
    for i in 0..n {
        b.push(i, i, 2.0);
        if i > 0 {
            b.push(i, i - 1, -1.0);
            b.push(i - 1, i, -1.0);
        }
    }
    b.build()
}

fn compare(name: &str, a: &SparseMatrix<C64>, shift: C64, k: usize, tol: f64) -> CaseReport {
    let reference = dense_nearest(a, shift, k);
    let max_error = match eigs_shift_invert(a, &EigenConfig::new(shift, k)) {
        Ok(sol) => sol
            .pairs
            .iter()
            .zip(&reference)
            .map(|(p, r)| (p.value - r).norm() / r.norm().max(1.0))
            .fold(0.0, f64::max),
        Err(_) => f64::INFINITY,
    };
    CaseReport {
        name: name.to_string(),
        n: a.nrows(),
        max_error,
        tolerance: tol,
        passed: max_error <= tol,
    }
}

/// Runs the suite; every case should pass on a healthy build.
pub fn run_suite() -> Vec<CaseReport> {
    let mut out = Vec::new();
    let lap = laplacian_1d(50).map(|x| C64::new(x, 0.0));
    out.push(compare("laplacian-50", &lap, C64::new(0.0, 0.0), 4, 1e-10));
    for (n, seed) in [(120usize, 1u64), (250, 2), (400, 3)] {
        let a = banded(n, 3, seed);
        out.push(compare(&format!("banded-{n}"), &a, C64::new(2.0, 0.01), 6, 1e-8));
    }
    out
}
