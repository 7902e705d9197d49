//! Brute-force references that share no numerical path with the main modules.
//!
//! The quadrature computes Bayes inverses from scratch, and all singular values
//! here come from a one-sided Jacobi sweep rather than an eigensolver.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::classical::StochasticMatrix;
use crate::linalg::{CMat, RMat, C64};
use crate::quantum::KrausChannel;
use crate::samplers;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureGrid {
    pub npoints: usize,
    pub margin: f64,
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        QuadratureGrid { npoints: 400, margin: 1e-4 }
    }
}

/// Singular values of a real matrix, descending, by one-sided Jacobi rotations.
pub fn svd_reference(m: &RMat) -> Vec<f64> {
    let (rows, cols) = m.shape();
    let mut a: Vec<Vec<f64>> = (0..cols).map(|j| (0..rows).map(|i| m[(i, j)]).collect()).collect();
    for _ in 0..100 {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha: f64 = a[p].iter().map(|x| x * x).sum();
                let beta: f64 = a[q].iter().map(|x| x * x).sum();
                let gamma: f64 = a[p].iter().zip(&a[q]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let (x, y) = (a[p][i], a[q][i]);
                    a[p][i] = c * x - s * y;
                    a[q][i] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = a.iter().map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Trace norm of a Hermitian matrix through its real symmetric embedding.
pub fn trace_norm_reference(h: &CMat) -> f64 {
    let n = h.nrows();
    let emb = RMat::from_fn(2 * n, 2 * n, |i, j| {
        let z = h[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    svd_reference(&emb).iter().sum::<f64>() / 2.0
}

fn bit_inverse(phi: &[[f64; 2]; 2], g: f64) -> Option<[[f64; 2]; 2]> {
    let prior = [g, 1.0 - g];
    let push = [phi[0][0] * g + phi[0][1] * (1.0 - g), phi[1][0] * g + phi[1][1] * (1.0 - g)];
    if push[0] <= 0.0 || push[1] <= 0.0 {
        return None;
    }
    let mut inv = [[0.0; 2]; 2];
    for (a, row) in inv.iter_mut().enumerate() {
        for (ap, x) in row.iter_mut().enumerate() {
            *x = phi[ap][a] * prior[a] / push[ap];
        }
    }
    Some(inv)
}

fn trapezoid_weights(grid: &QuadratureGrid) -> (Vec<f64>, Vec<f64>) {
    let n = grid.npoints;
    let (lo, hi) = (grid.margin, 1.0 - grid.margin);
    let h = (hi - lo) / (n - 1) as f64;
    let nodes = (0..n).map(|i| lo + i as f64 * h).collect();
    let mut w = vec![1.0 / (n - 1) as f64; n];
    w[0] *= 0.5;
    w[n - 1] *= 0.5;
    (nodes, w)
}

/// Grid average of `‖φ̂_{γ₁} − φ̂_{γ₂}‖^power` over bit prior pairs.
pub fn quadrature_bit_moment(map: &StochasticMatrix, grid: &QuadratureGrid, power: i32) -> Result<f64> {
    if map.dim() != 2 {
        return Err(Error::WrongDimension { expected: 2, found: map.dim() });
    }
    if grid.npoints < 16 {
        return Err(Error::InvalidParameter("quadrature needs at least 16 points".into()));
    }
    let phi = [[map.entry(0, 0), map.entry(0, 1)], [map.entry(1, 0), map.entry(1, 1)]];
    let (nodes, w) = trapezoid_weights(grid);
    let inverses: Vec<Option<[[f64; 2]; 2]>> = nodes.iter().map(|&g| bit_inverse(&phi, g)).collect();
    let mut total = 0.0;
    let mut weight = 0.0;
    for i in 0..nodes.len() {
        for j in 0..i {
            let (Some(a), Some(b)) = (inverses[i], inverses[j]) else { continue };
            let diff = RMat::from_fn(2, 2, |r, c| a[r][c] - b[r][c]);
            let s = svd_reference(&diff)[0];
            total += 2.0 * w[i] * w[j] * s.powi(power);
            weight += 2.0 * w[i] * w[j];
        }
        if inverses[i].is_some() {
            weight += w[i] * w[i];
        }
    }
    Ok(total / weight)
}

/// Trapezoid estimate of bit subjectivity, normalized by the canonical erasure.
pub fn quadrature_bit_subjectivity(map: &StochasticMatrix, grid: &QuadratureGrid) -> Result<f64> {
    let erasure = crate::measures::canonical_erasure_classical(2);
    Ok(quadrature_bit_moment(map, grid, 1)? / quadrature_bit_moment(&erasure, grid, 1)?)
}

fn output_difference(a: &KrausChannel, b: &KrausChannel, psi: &[C64]) -> CMat {
    let d = a.dim();
    let n = d * d;
    let mut m = CMat::zeros(n, n);
    for (ks, sign) in [(a.kraus(), 1.0), (b.kraus(), -1.0)] {
        for k in ks {
            let mut v = vec![C64::new(0.0, 0.0); n];
            for s in 0..d {
                for anc in 0..d {
                    let mut acc = C64::new(0.0, 0.0);
                    for t in 0..d {
                        acc += k[(s, t)] * psi[t * d + anc];
                    }
                    v[s * d + anc] = acc;
                }
            }
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] += v[i] * v[j].conj() * sign;
                }
            }
        }
    }
    m
}

/// Best output trace norm over `nsamples` random pure system ⊗ ancilla inputs.
pub fn brute_diamond_lower(a: &KrausChannel, b: &KrausChannel, nsamples: usize, seed: u64) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    let d = a.dim();
    let mut best = 0.0f64;
    for i in 0..nsamples {
        let mut rng = samplers::stream(seed, i as u64);
        let g = samplers::ginibre(d * d, &mut rng);
        let norm = g.column(0).norm();
        let psi: Vec<C64> = g.column(0).iter().map(|z| z / norm).collect();
        best = best.max(trace_norm_reference(&output_difference(a, b, &psi)));
    }
    Ok(best)
}
