//! Small dense complex-matrix helpers shared by the modules.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64 as C64;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };
pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_vec(v: &DVector<C64>) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max |M - M^dag|`.
pub fn hermitian_defect(m: &DMatrix<C64>) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs(&(m - m.adjoint()))
}

/// `max |U^dag U - I|`.
pub fn unitarity_defect(u: &DMatrix<C64>) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - DMatrix::<C64>::identity(n, n)))
}

/// Eigenvalues from the complex Schur form (diagonal of the triangular factor).
pub fn eigenvalues(m: &DMatrix<C64>) -> Vec<C64> {
    let (_, t) = Schur::new(m.clone()).unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

pub fn expm(m: &DMatrix<C64>) -> DMatrix<C64> {
    m.clone().exp()
}

/// Sorts eigenvalues lexicographically by (re, im) so two spectra can be compared.
pub fn sorted_spectrum(mut ev: Vec<C64>) -> Vec<C64> {
    ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    ev
}

/// Largest distance from an eigenvalue of `a` to its nearest eigenvalue of `b`
/// (greedy matching, adequate for the well-separated spectra used here).
pub fn spectrum_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("spectra have equal length");
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}
