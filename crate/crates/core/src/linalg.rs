//! Dense linear algebra helpers shared by the classical and quantum modules.

use alloc::vec::Vec;
use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

pub type C64 = Complex<f64>;
pub type RMat = DMatrix<f64>;
pub type CMat = DMatrix<C64>;
pub type RVec = DVector<f64>;
pub type CVec = DVector<C64>;

/// Floor applied to eigenvalues before fractional or negative powers.
pub const EIG_FLOOR: f64 = 1e-12;

const MAX_DOUBLINGS: usize = 10_000;
const MAX_PERIOD: usize = 24;
const CYCLE_TOL: f64 = 1e-12;

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermitianEigen {
    pub fn new(m: &CMat) -> Self {
        let eig = SymmetricEigen::new(hermitian_part(m));
        let n = m.nrows();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        HermitianEigen { values, vectors }
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Rebuilds `V f(Λ) V†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.vectors.nrows();
        let mut scaled = self.vectors.clone();
        for (c, &v) in self.values.iter().enumerate() {
            let w = f(v);
            for r in 0..n {
                scaled[(r, c)] *= w;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

pub fn hermitian_sqrt(m: &CMat) -> CMat {
    HermitianEigen::new(m).map(|v| v.max(EIG_FLOOR).sqrt())
}

pub fn hermitian_inv_sqrt(m: &CMat) -> CMat {
    HermitianEigen::new(m).map(|v| 1.0 / v.max(EIG_FLOOR).sqrt())
}

/// Trace norm of a Hermitian matrix: the sum of absolute eigenvalues.
pub fn trace_norm(m: &CMat) -> f64 {
    HermitianEigen::new(m).values.iter().map(|v| v.abs()).sum()
}

pub fn trace(m: &CMat) -> C64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

pub fn max_abs(m: &RMat) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn max_abs_c(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.norm_sqr().sqrt()))
}

/// Largest singular value via the top eigenvalue of `mᵀm`.
pub fn max_singular_value(m: &RMat) -> f64 {
    let gram = m.transpose() * m;
    let eig = SymmetricEigen::new(gram);
    eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b)).max(0.0).sqrt()
}

/// Singular values, descending.
pub fn singular_values(m: &RMat) -> Vec<f64> {
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn numerical_rank(m: &RMat, tol: f64) -> usize {
    singular_values(m).iter().filter(|&&s| s > tol).count()
}

/// Asymptotic behaviour of the powers of a matrix.
///
/// `limit` is `M^N` for some large `N` after which the sequence of powers (or
/// of the probe vector, if one was given) repeats with `period`.
#[derive(Debug, Clone)]
pub struct Cycle {
    pub limit: RMat,
    pub period: usize,
}

impl Cycle {
    /// Average of `M^{N+s} v` over one period.
    pub fn average(&self, m: &RMat, v: &RVec) -> RVec {
        let mut w = &self.limit * v;
        let mut acc = w.clone();
        for _ in 1..self.period {
            w = m * w;
            acc += &w;
        }
        acc / self.period as f64
    }
}

/// Repeated squaring with cycle detection up to period 24.
///
/// Without a probe the matrix power itself must repeat; with a probe only the
/// image of the probe vector must.
pub fn limit_cycle(m: &RMat, probe: Option<&RVec>) -> Result<Cycle> {
    let mut powers = Vec::with_capacity(MAX_PERIOD);
    let mut p = m.clone();
    for _ in 0..MAX_PERIOD {
        powers.push(p.clone());
        p = m * &p;
    }
    let mut cur = m.clone();
    for _ in 0..MAX_DOUBLINGS {
        if !cur.iter().all(|x| x.is_finite()) {
            return Err(Error::NoConvergence);
        }
        let found = match probe {
            Some(v) => {
                let w = &cur * v;
                powers.iter().position(|pr| {
                    let d = pr * &w - &w;
                    d.iter().all(|x| x.abs() < CYCLE_TOL)
                })
            }
            None => powers.iter().position(|pr| max_abs(&(&cur * pr - &cur)) < CYCLE_TOL),
        };
        if let Some(r) = found {
            return Ok(Cycle { limit: cur, period: r + 1 });
        }
        cur = &cur * &cur;
    }
    Err(Error::NoConvergence)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_squares_back() {
        let m = CMat::from_row_slice(2, 2, &[
            C64::new(2.0, 0.0), C64::new(0.5, 0.5),
            C64::new(0.5, -0.5), C64::new(1.0, 0.0),
        ]);
        let s = hermitian_sqrt(&m);
        assert!(max_abs_c(&(&s * &s - &m)) < 1e-12);
        let is = hermitian_inv_sqrt(&m);
        let id = &is * &m * &is;
        assert!(max_abs_c(&(id - CMat::identity(2, 2))) < 1e-12);
    }

    #[test]
    fn cycle_of_swap() {
        let m = RMat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let c = limit_cycle(&m, None).unwrap();
        assert_eq!(c.period, 2);
    }

    #[test]
    fn trace_norm_of_difference_of_pure_states() {
        let mut m = CMat::zeros(2, 2);
        m[(0, 0)] = C64::new(1.0, 0.0);
        m[(1, 1)] = C64::new(-1.0, 0.0);
        assert!((trace_norm(&m) - 2.0).abs() < 1e-14);
    }
}
