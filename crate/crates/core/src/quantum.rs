//! Density operators, Kraus channels, dilations, transfer matrices and the Petz map.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{self, CMat, HermitianEigen, RMat, RVec, C64};
use crate::{Error, Result, PUSHFORWARD_EPS};

const STATE_TOL: f64 = 1e-12;
const CHANNEL_TOL: f64 = 1e-10;

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator(CMat);

impl DensityOperator {
    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::InvalidState("density matrix must be square".into()));
        }
        let herm = linalg::max_abs_c(&(&m - m.adjoint()));
        if herm > STATE_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = linalg::trace(&m).re;
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let min = HermitianEigen::new(&m).min();
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(DensityOperator(m))
    }

    pub(crate) fn from_matrix_unchecked(m: CMat) -> Self {
        DensityOperator(m)
    }

    pub fn maximally_mixed(d: usize) -> Self {
        DensityOperator(CMat::identity(d, d) * C64::new(1.0 / d as f64, 0.0))
    }

    pub fn diagonal(p: &[f64]) -> Result<Self> {
        let d = p.len();
        Self::new(CMat::from_fn(d, d, |i, j| if i == j { C64::new(p[i], 0.0) } else { C64::new(0.0, 0.0) }))
    }

    /// `|ψ⟩⟨ψ|` for a unit vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let d = psi.len();
        Self::new(CMat::from_fn(d, d, |i, j| psi[i] * psi[j].conj()))
    }

    pub fn basis_state(d: usize, i: usize) -> Self {
        let mut m = CMat::zeros(d, d);
        m[(i, i)] = C64::new(1.0, 0.0);
        DensityOperator(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        HermitianEigen::new(&self.0).min()
    }
}

#[derive(Debug, Clone)]
pub struct KrausChannel {
    dim: usize,
    kraus: Vec<CMat>,
}

impl KrausChannel {
    pub fn new(kraus: Vec<CMat>) -> Result<Self> {
        let d = kraus.first().map(|k| k.nrows()).ok_or_else(|| Error::InvalidChannel("no Kraus operators".into()))?;
        if kraus.iter().any(|k| k.nrows() != d || k.ncols() != d) {
            return Err(Error::InvalidChannel("Kraus operators must be square and equal-sized".into()));
        }
        let ch = KrausChannel { dim: d, kraus };
        let dev = ch.completeness_deviation();
        if dev > CHANNEL_TOL {
            return Err(Error::InvalidChannel(format!("not trace preserving (deviation {dev:e})")));
        }
        Ok(ch)
    }

    pub(crate) fn from_kraus_unchecked(kraus: Vec<CMat>) -> Self {
        KrausChannel { dim: kraus[0].nrows(), kraus }
    }

    pub fn identity(d: usize) -> Self {
        KrausChannel { dim: d, kraus: alloc::vec![CMat::identity(d, d)] }
    }

    pub fn unitary(u: CMat) -> Result<Self> {
        Self::new(alloc::vec![u])
    }

    /// Channel sending every input to `tau`.
    pub fn erasure(tau: &DensityOperator) -> Self {
        let d = tau.dim();
        let eig = HermitianEigen::new(tau.matrix());
        let mut kraus = Vec::new();
        for (j, &l) in eig.values.iter().enumerate() {
            if l <= 0.0 {
                continue;
            }
            let v = eig.vectors.column(j) * C64::new(l.sqrt(), 0.0);
            for k in 0..d {
                let mut m = CMat::zeros(d, d);
                m.set_column(k, &v);
                kraus.push(m);
            }
        }
        KrausChannel { dim: d, kraus }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    /// `‖Σ κ†κ − 1‖_max`.
    pub fn completeness_deviation(&self) -> f64 {
        let mut s = CMat::zeros(self.dim, self.dim);
        for k in &self.kraus {
            s += k.adjoint() * k;
        }
        linalg::max_abs_c(&(s - CMat::identity(self.dim, self.dim)))
    }
}

/// Stinespring-type dilation `F[ρ] = Tr_B[U (ρ ⊗ β) U†]`.
///
/// Joint indices are system-major: `|s⟩|b⟩ ↦ s·d_B + b`.
#[derive(Debug, Clone)]
pub struct Dilation {
    dim: usize,
    ancilla_dim: usize,
    u: CMat,
    beta: DensityOperator,
}

impl Dilation {
    pub fn new(dim: usize, u: CMat, beta: DensityOperator) -> Result<Self> {
        let ancilla_dim = beta.dim();
        let n = dim * ancilla_dim;
        if u.nrows() != n || u.ncols() != n {
            return Err(Error::InvalidDilation(format!("unitary must be {n}x{n}")));
        }
        let dev = linalg::max_abs_c(&(u.adjoint() * &u - CMat::identity(n, n)));
        if dev > CHANNEL_TOL {
            return Err(Error::InvalidDilation(format!("not unitary (deviation {dev:e})")));
        }
        Ok(Dilation { dim, ancilla_dim, u, beta })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ancilla_dim(&self) -> usize {
        self.ancilla_dim
    }

    pub fn unitary(&self) -> &CMat {
        &self.u
    }

    pub fn beta(&self) -> &DensityOperator {
        &self.beta
    }
}

pub fn dilation_to_kraus(dil: &Dilation) -> Result<KrausChannel> {
    let (d, db) = (dil.dim, dil.ancilla_dim);
    let eig = HermitianEigen::new(dil.beta.matrix());
    let mut kraus = Vec::new();
    for (k, &l) in eig.values.iter().enumerate() {
        let w = l.max(0.0).sqrt();
        if w <= 0.0 {
            continue;
        }
        let bk = eig.vectors.column(k);
        for j in 0..db {
            let m = CMat::from_fn(d, d, |so, si| {
                let mut acc = C64::new(0.0, 0.0);
                for b in 0..db {
                    acc += dil.u[(so * db + j, si * db + b)] * bk[b];
                }
                acc * w
            });
            kraus.push(m);
        }
    }
    KrausChannel::new(kraus)
}

pub fn apply_channel(chan: &KrausChannel, rho: &DensityOperator) -> Result<DensityOperator> {
    check_dim(chan.dim, rho.dim())?;
    Ok(DensityOperator(apply_raw(chan, rho.matrix())))
}

pub(crate) fn apply_raw(chan: &KrausChannel, x: &CMat) -> CMat {
    let mut out = CMat::zeros(chan.dim, chan.dim);
    for k in &chan.kraus {
        out += k * x * k.adjoint();
    }
    out
}

/// Heisenberg-picture action `Σ κ† X κ`.
pub fn adjoint_apply(chan: &KrausChannel, op: &CMat) -> Result<CMat> {
    check_dim(chan.dim, op.nrows())?;
    let mut out = CMat::zeros(chan.dim, chan.dim);
    for k in &chan.kraus {
        out += k.adjoint() * op * k;
    }
    Ok(out)
}

/// Petz recovery map with Kraus set `{√γ κ† F[γ]^{-1/2}}`.
pub fn petz_inverse(chan: &KrausChannel, prior: &DensityOperator) -> Result<KrausChannel> {
    petz_inverse_eps(chan, prior, PUSHFORWARD_EPS)
}

pub fn petz_inverse_eps(chan: &KrausChannel, prior: &DensityOperator, eps: f64) -> Result<KrausChannel> {
    check_dim(chan.dim, prior.dim())?;
    let push = apply_raw(chan, prior.matrix());
    let eig = HermitianEigen::new(&push);
    let min = eig.min();
    if min <= eps {
        return Err(Error::SingularPushforward { min });
    }
    let inv_sqrt = eig.map(|v| 1.0 / v.max(linalg::EIG_FLOOR).sqrt());
    let sqrt_prior = linalg::hermitian_sqrt(prior.matrix());
    let kraus = chan.kraus.iter().map(|k| &sqrt_prior * k.adjoint() * &inv_sqrt).collect();
    Ok(KrausChannel::from_kraus_unchecked(kraus))
}

pub fn compose_channels(outer: &KrausChannel, inner: &KrausChannel) -> Result<KrausChannel> {
    check_dim(outer.dim, inner.dim)?;
    let mut kraus = Vec::with_capacity(outer.kraus.len() * inner.kraus.len());
    for g in &outer.kraus {
        for f in &inner.kraus {
            kraus.push(g * f);
        }
    }
    Ok(KrausChannel::from_kraus_unchecked(kraus))
}

/// Hermitian operator basis with `Tr[P_i P_j] = d δ_ij` and `P_{d²} = 1`.
///
/// Generalized Gell-Mann matrices (symmetric, antisymmetric, diagonal), which
/// are the Pauli matrices X, Y, Z for qubits.
pub fn operator_basis(d: usize) -> Vec<CMat> {
    let scale = C64::new((d as f64 / 2.0).sqrt(), 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let mut basis = Vec::with_capacity(d * d);
    for j in 0..d {
        for k in (j + 1)..d {
            let mut s = CMat::zeros(d, d);
            s[(j, k)] = one;
            s[(k, j)] = one;
            basis.push(s * scale);
        }
    }
    for j in 0..d {
        for k in (j + 1)..d {
            let mut a = CMat::zeros(d, d);
            a[(j, k)] = -i;
            a[(k, j)] = i;
            basis.push(a * scale);
        }
    }
    for l in 1..d {
        let c = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut m = CMat::zeros(d, d);
        for j in 0..l {
            m[(j, j)] = C64::new(c, 0.0);
        }
        m[(l, l)] = C64::new(-(l as f64) * c, 0.0);
        basis.push(m * scale);
    }
    basis.push(CMat::identity(d, d));
    basis
}

/// Coefficients `r_k = Tr[P_k ρ]`, so that `ρ = (1/d) Σ r_k P_k`.
pub fn coefficients(x: &CMat) -> RVec {
    let basis = operator_basis(x.nrows());
    RVec::from_iterator(basis.len(), basis.iter().map(|p| linalg::trace(&(p * x)).re))
}

/// Bloch vector: all coefficients but the identity one.
pub fn bloch_vector(rho: &DensityOperator) -> RVec {
    let r = coefficients(rho.matrix());
    r.rows(0, r.len() - 1).into_owned()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    dim: usize,
    m: RMat,
}

impl TransferMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &RMat {
        &self.m
    }

    /// Linear block acting on Bloch vectors.
    pub fn linear_part(&self) -> RMat {
        let n = self.m.nrows() - 1;
        self.m.view((0, 0), (n, n)).into_owned()
    }

    /// Translation of the Bloch vector of the maximally mixed state.
    pub fn translation(&self) -> RVec {
        let n = self.m.nrows() - 1;
        self.m.view((0, n), (n, 1)).column(0).into_owned()
    }
}

pub fn transfer_matrix(chan: &KrausChannel) -> TransferMatrix {
    let d = chan.dim;
    let basis = operator_basis(d);
    let n = basis.len();
    let images: Vec<CMat> = basis.iter().map(|p| apply_raw(chan, p)).collect();
    let mut m = RMat::from_fn(n, n, |i, j| linalg::trace(&(&basis[i] * &images[j])).re / d as f64);
    for j in 0..n {
        m[(n - 1, j)] = if j == n - 1 { 1.0 } else { 0.0 };
    }
    TransferMatrix { dim: d, m }
}

pub fn qad(chan: &KrausChannel) -> f64 {
    transfer_matrix(chan).m.determinant().abs()
}

/// Bloch vector of the channel's fixed centroid, averaged over a cycle if any.
pub fn fixed_centroid_bloch(chan: &KrausChannel) -> Result<(RVec, usize)> {
    let t = transfer_matrix(chan);
    let n = t.m.nrows();
    let mut e = RVec::zeros(n);
    e[n - 1] = 1.0;
    let cycle = linalg::limit_cycle(&t.m, Some(&e))?;
    let v = cycle.average(&t.m, &e);
    Ok((v.rows(0, n - 1).into_owned(), cycle.period))
}

pub fn qfd(chan: &KrausChannel) -> Result<f64> {
    let (b, _) = fixed_centroid_bloch(chan)?;
    Ok(b.norm() / ((chan.dim - 1) as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn amplitude_damping(s: f64) -> KrausChannel {
        let k0 = CMat::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c((1.0 - s).sqrt())]);
        let k1 = CMat::from_row_slice(2, 2, &[c(0.0), c(s.sqrt()), c(0.0), c(0.0)]);
        KrausChannel::new(vec![k0, k1]).unwrap()
    }

    #[test]
    fn basis_is_orthogonal() {
        for d in 2..5 {
            let b = operator_basis(d);
            assert_eq!(b.len(), d * d);
            for (i, p) in b.iter().enumerate() {
                for (j, q) in b.iter().enumerate() {
                    let t = linalg::trace(&(p * q));
                    let want = if i == j { d as f64 } else { 0.0 };
                    assert!((t.re - want).abs() < 1e-12 && t.im.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn damping_excited_state() {
        let out = apply_channel(&amplitude_damping(0.3), &DensityOperator::basis_state(2, 1)).unwrap();
        assert!((out.matrix()[(0, 0)].re - 0.3).abs() < 1e-14);
        assert!((out.matrix()[(1, 1)].re - 0.7).abs() < 1e-14);
    }

    #[test]
    fn identity_transfer_matrix() {
        let t = transfer_matrix(&KrausChannel::identity(3));
        assert!(linalg::max_abs(&(t.matrix() - RMat::identity(9, 9))) < 1e-12);
    }

    #[test]
    fn full_damping_has_unit_qfd() {
        let ad = amplitude_damping(1.0);
        assert!((qfd(&ad).unwrap() - 1.0).abs() < 1e-12);
        assert!(qad(&ad) < 1e-12);
    }

    #[test]
    fn erasure_has_rank_one_transfer_matrix() {
        let tau = DensityOperator::diagonal(&[0.3, 0.7]).unwrap();
        let t = transfer_matrix(&KrausChannel::erasure(&tau));
        assert_eq!(linalg::numerical_rank(t.matrix(), 1e-9), 1);
    }

    #[test]
    fn petz_matches_classical_z_channel() {
        let s = 0.5;
        let ad = amplitude_damping(s);
        let p = 0.5;
        let gamma = DensityOperator::diagonal(&[p, 1.0 - p]).unwrap();
        let inv = petz_inverse(&ad, &gamma).unwrap();
        for q in [0.0, 0.25, 0.6, 1.0] {
            let rho = DensityOperator::diagonal(&[q, 1.0 - q]).unwrap();
            let out = apply_channel(&inv, &rho).unwrap();
            let want = p * q / (p + (1.0 - p) * s);
            assert!((out.matrix()[(0, 0)].re - want).abs() < 1e-10);
        }
    }
}
