//! Closed forms of bit-channel subjectivity and average divergence change as
//! functions of the absolute determinant `D` and fixed centroid distance `F`.
//!
//! With `c = F (1 − D)` and `z± = D / (1 ± c)`:
//!
//! * subjectivity `= f(z₊) + f(z₋)`, `f(z) = (z⁻² − 1)[1 − (z⁻² − 1) artanh² z]`
//! * divergence change `= (D/4)[g(z₊) + g(z₋)]`, `g(z) = (z⁻² − 1) artanh z`
//!
//! `F` is the normalized centroid distance in `[0, 1]`. Both expressions are raw
//! (unnormalized) integrals; the erasure corner `D = 0` gives 2/3 and 1/2.

use alloc::format;
#[allow(unused_imports)]
use num_traits::Float;

use crate::classical::StochasticMatrix;
use crate::linalg::RMat;
use crate::{Error, Result};

const NEAR_ONE: f64 = 1e-6;
const NEAR_ZERO: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BitCoords {
    pub d: f64,
    pub f: f64,
}

impl BitCoords {
    pub fn new(d: f64, f: f64) -> Result<Self> {
        let c = BitCoords { d, f };
        c.arguments()?;
        Ok(c)
    }

    /// `(z₊, z₋)`.
    pub fn arguments(&self) -> Result<(f64, f64)> {
        let (d, f) = (self.d, self.f);
        if !(0.0..=1.0).contains(&d) || !(0.0..=1.0).contains(&f) {
            return Err(Error::DomainError(format!("(D, F) = ({d}, {f}) outside the unit square")));
        }
        let c = f * (1.0 - d);
        if 1.0 - c <= 1e-15 {
            return Err(Error::DomainError(format!("(D, F) = ({d}, {f}) is not realizable by a bit channel")));
        }
        let zp = d / (1.0 + c);
        let zm = (d / (1.0 - c)).min(1.0);
        Ok((zp, zm))
    }
}

/// `(z⁻² − 1)[1 − (z⁻² − 1) artanh² z]`, with the limits f(0) = 1/3 and f(1) = 0.
pub fn subjectivity_kernel(z: f64) -> f64 {
    if z < NEAR_ZERO {
        let z2 = z * z;
        return 1.0 / 3.0 - z2 * (8.0 / 45.0 + z2 * (4.0 / 63.0 + z2 * 16.0 / 525.0));
    }
    if z > 1.0 - NEAR_ONE {
        let e = 1.0 - z;
        if e <= 0.0 {
            return 0.0;
        }
        let k = e * (2.0 - e) / ((1.0 - e) * (1.0 - e));
        let at = 0.5 * ((2.0 - e) / e).ln();
        return k * (1.0 - k * at * at);
    }
    let k = (1.0 - z) * (1.0 + z) / (z * z);
    let at = z.atanh();
    k * (1.0 - k * at * at)
}

/// `(1 − z²) artanh(z) / z`, which equals `z (z⁻² − 1) artanh z`; limits 1 at 0 and 0 at 1.
pub fn divergence_kernel(z: f64) -> f64 {
    if z < NEAR_ZERO {
        let z2 = z * z;
        return 1.0 - z2 * (2.0 / 3.0 + z2 * (2.0 / 15.0 + z2 * 2.0 / 35.0));
    }
    if z > 1.0 - NEAR_ONE {
        let e = 1.0 - z;
        if e <= 0.0 {
            return 0.0;
        }
        return e * (2.0 - e) * 0.5 * ((2.0 - e) / e).ln() / (1.0 - e);
    }
    (1.0 - z) * (1.0 + z) * z.atanh() / z
}

pub fn bit_subjectivity_analytic(c: BitCoords) -> Result<f64> {
    let (zp, zm) = c.arguments()?;
    Ok(subjectivity_kernel(zp) + subjectivity_kernel(zm))
}

pub fn bit_divchange_analytic(c: BitCoords) -> Result<f64> {
    let (zp, zm) = c.arguments()?;
    let s = c.f * (1.0 - c.d);
    // D·g(z±) = (1 ± c)·z± g(z±), finite at D = 0
    Ok(0.25 * ((1.0 + s) * divergence_kernel(zp) + (1.0 - s) * divergence_kernel(zm)))
}

/// A bit channel with determinant `+D` and centroid distance `F`.
pub fn bit_channel(c: BitCoords) -> Result<StochasticMatrix> {
    c.arguments()?;
    let star = 0.5 + 0.5 * c.f;
    let b = star * (1.0 - c.d);
    let a = (1.0 - star) * (1.0 - c.d);
    StochasticMatrix::new(RMat::from_row_slice(2, 2, &[1.0 - a, b, a, 1.0 - b]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical;

    #[test]
    fn vanishes_at_unit_determinant() {
        for f in [0.0, 0.3, 1.0] {
            let c = BitCoords::new(1.0, f).unwrap();
            assert!(bit_subjectivity_analytic(c).unwrap().abs() < 1e-8);
            assert!(bit_divchange_analytic(c).unwrap().abs() < 1e-8);
        }
    }

    #[test]
    fn symmetric_collapse() {
        let d = 0.37;
        let c = BitCoords::new(d, 0.0).unwrap();
        assert!((bit_subjectivity_analytic(c).unwrap() - 2.0 * subjectivity_kernel(d)).abs() < 1e-15);
        let g = (d.powi(-2) - 1.0) * d.atanh();
        assert!((bit_divchange_analytic(c).unwrap() - d / 2.0 * g).abs() < 1e-14);
    }

    #[test]
    fn kernels_are_continuous_at_switch_points() {
        for z in [NEAR_ZERO, 1.0 - NEAR_ONE] {
            let (lo, hi) = (z * (1.0 - 1e-12), z * (1.0 + 1e-12));
            assert!((subjectivity_kernel(lo) - subjectivity_kernel(hi)).abs() < 1e-9);
            assert!((divergence_kernel(lo) - divergence_kernel(hi)).abs() < 1e-9);
        }
    }

    #[test]
    fn unrealizable_corner() {
        assert!(matches!(BitCoords::new(0.0, 1.0), Err(Error::DomainError(_))));
        assert!(BitCoords::new(1.2, 0.0).is_err());
    }

    #[test]
    fn channel_realizes_coordinates() {
        let c = BitCoords::new(0.4, 0.7).unwrap();
        let m = bit_channel(c).unwrap();
        assert!((classical::abs_determinant(&m) - 0.4).abs() < 1e-12);
        assert!((classical::cfd(&m).unwrap() - 0.7).abs() < 1e-10);
    }
}
