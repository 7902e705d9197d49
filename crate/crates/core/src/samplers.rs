//! Random states, unitaries and channels, plus constructors for special map families.
//!
//! All randomness comes from counter-based streams keyed by `(seed, index)`.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::classical::{ProbVector, StochasticMatrix};
use crate::linalg::{CMat, RMat, C64};
use crate::quantum::{self, DensityOperator, Dilation, KrausChannel};
use crate::{Error, Result};

pub type Stream = ChaCha8Rng;

/// Independent stream for sample `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Splitmix64 mixing of a seed with a salt, for deriving sub-seeds.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform point on the probability simplex (flat Dirichlet).
pub fn sample_simplex<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ProbVector {
    let e: Vec<f64> = (0..dim).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = e.iter().sum();
    ProbVector::from_vec_unchecked(e.into_iter().map(|x| x / s).collect())
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

pub fn ginibre<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    CMat::from_fn(dim, dim, |_, _| complex_gaussian(rng))
}

/// Hilbert-Schmidt random density operator `G G† / Tr[G G†]`.
pub fn sample_hs_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityOperator {
    let g = ginibre(dim, rng);
    let w = &g * g.adjoint();
    let tr = crate::linalg::trace(&w).re;
    let m = crate::linalg::hermitian_part(&(w / C64::new(tr, 0.0)));
    DensityOperator::from_matrix_unchecked(m)
}

/// Haar-distributed unitary from the QR decomposition of a Ginibre matrix.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let qr = ginibre(dim, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let rjj = r[(j, j)];
        let n = rjj.norm_sqr().sqrt();
        let phase = if n > 0.0 { rjj / n } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Uniformly random permutation of `0..d`.
pub fn random_permutation<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<usize> {
    let mut p: Vec<usize> = (0..d).collect();
    for i in (1..d).rev() {
        let j = rng.random_range(0..=i);
        p.swap(i, j);
    }
    p
}

/// Column-stochastic matrix with iid flat-Dirichlet columns.
pub fn sample_stochastic<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> StochasticMatrix {
    let cols: Vec<ProbVector> = (0..dim).map(|_| sample_simplex(dim, rng)).collect();
    StochasticMatrix::from_matrix_unchecked(RMat::from_fn(dim, dim, |i, j| cols[j].entries()[i]))
}

/// Random channel from a Haar dilation with a Hilbert-Schmidt ancilla.
pub fn sample_kraus_channel<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> KrausChannel {
    let u = haar_unitary(dim * dim, rng);
    let beta = sample_hs_state(dim, rng);
    let dil = Dilation::new(dim, u, beta).expect("Haar unitary is unitary");
    quantum::dilation_to_kraus(&dil).expect("dilation of a unitary is trace preserving")
}

/// The two-qubit amplitude-damping dilation unitary.
pub fn u_ad(gamma: f64) -> CMat {
    let (a, b) = ((1.0 - gamma).sqrt(), gamma.sqrt());
    let z = 0.0;
    let rows = [
        [1.0, z, z, z],
        [z, a, b, z],
        [z, -b, a, z],
        [z, z, z, 1.0],
    ];
    CMat::from_fn(4, 4, |i, j| C64::new(rows[i][j], 0.0))
}

/// Generalized amplitude damping as a dilation with `β = diag(p, 1 − p)`.
pub fn gad_dilation(gamma: f64, p: f64) -> Dilation {
    let beta = DensityOperator::diagonal(&[p, 1.0 - p]).expect("p in [0, 1]");
    Dilation::new(2, u_ad(gamma), beta).expect("U_AD is unitary")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub u: (f64, f64),
    pub f: (f64, f64),
    pub quota: usize,
    pub id: (usize, usize),
}

impl GridCell {
    /// Cell `(i, j)` of an `n × n` grid on the unit square.
    pub fn of_grid(n: usize, i: usize, j: usize, quota: usize) -> Result<Self> {
        if n == 0 || i >= n || j >= n || quota == 0 {
            return Err(Error::InvalidParameter(format!("cell ({i}, {j}) of a {n}x{n} grid with quota {quota}")));
        }
        let w = 1.0 / n as f64;
        Ok(GridCell { u: (i as f64 * w, (i + 1) as f64 * w), f: (j as f64 * w, (j + 1) as f64 * w), quota, id: (i, j) })
    }

    pub fn contains(&self, u: f64, f: f64) -> bool {
        u >= self.u.0 && u < self.u.1 && f >= self.f.0 && f < self.f.1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GadSamplerConfig {
    pub sandwich_probability: f64,
    pub max_retries: usize,
}

impl Default for GadSamplerConfig {
    fn default() -> Self {
        GadSamplerConfig { sandwich_probability: 0.8, max_retries: 64 }
    }
}

#[derive(Debug, Clone)]
pub struct SampledQubitChannel {
    pub dilation: Dilation,
    /// `(|det T'|, ‖(I − T')⁻¹ t'‖)` of the realized channel.
    pub coords: (f64, f64),
    pub cell: (usize, usize),
    pub retries: usize,
    pub sandwiched: bool,
    pub gamma: f64,
    pub p: f64,
}

/// `(|det T|, ‖(I − T)⁻¹ t‖)` for the affine Bloch action of a qubit channel.
pub fn affine_coords(chan: &KrausChannel) -> Option<(f64, f64)> {
    let t = quantum::transfer_matrix(chan);
    let lin = t.linear_part();
    let n = lin.nrows();
    let det = t.matrix().determinant().abs();
    let fixed = (RMat::identity(n, n) - lin).lu().solve(&t.translation())?;
    Some((det, fixed.norm()))
}

fn sandwich(u1: &CMat, inner: &CMat, u2: &CMat) -> CMat {
    let id = CMat::identity(2, 2);
    u1.kronecker(&id) * inner * u2.kronecker(&id)
}

/// Draws a GAD channel inside `cell`, optionally sandwiched by random unitaries.
pub fn sample_qubit_gad_grid<R: Rng + ?Sized>(
    cell: &GridCell,
    cfg: &GadSamplerConfig,
    rng: &mut R,
) -> SampledQubitChannel {
    let u = rng.random_range(cell.u.0..cell.u.1);
    let f = rng.random_range(cell.f.0..cell.f.1);
    let gamma = 1.0 - u.sqrt();
    let p = if rng.random_bool(0.5) { (1.0 + f) / 2.0 } else { (1.0 - f) / 2.0 };
    let beta = DensityOperator::diagonal(&[p, 1.0 - p]).expect("p in [0, 1]");
    let base = u_ad(gamma);
    let mut retries = 0;
    if rng.random_bool(cfg.sandwich_probability) {
        while retries < cfg.max_retries {
            retries += 1;
            let u1 = haar_unitary(2, rng);
            let u2 = haar_unitary(2, rng);
            let dil = Dilation::new(2, sandwich(&u1, &base, &u2), beta.clone()).expect("product of unitaries");
            let chan = quantum::dilation_to_kraus(&dil).expect("dilation is trace preserving");
            if let Some(c) = affine_coords(&chan) {
                if cell.contains(c.0, c.1) {
                    return SampledQubitChannel { dilation: dil, coords: c, cell: cell.id, retries, sandwiched: true, gamma, p };
                }
            }
        }
    }
    let dil = Dilation::new(2, base, beta).expect("U_AD is unitary");
    let chan = quantum::dilation_to_kraus(&dil).expect("dilation is trace preserving");
    let coords = affine_coords(&chan).unwrap_or((u, f));
    SampledQubitChannel { dilation: dil, coords, cell: cell.id, retries, sandwiched: false, gamma, p }
}

/// Trit map whose columns are drawn from the restricted simplex
/// `{(r₁, r₂) ∈ [0, 1−D]² : r₁ + r₂ ≤ 1 − D}`.
pub fn sample_trit_channel_restricted<R: Rng + ?Sized>(det: f64, rng: &mut R) -> Result<StochasticMatrix> {
    if !(0.0..=1.0).contains(&det) {
        return Err(Error::InvalidParameter(format!("D = {det} outside [0, 1]")));
    }
    let side = 1.0 - det;
    let mut cols = Vec::with_capacity(3);
    for _ in 0..3 {
        let (mut x, mut y): (f64, f64) = (rng.random(), rng.random());
        if x + y > 1.0 {
            x = 1.0 - x;
            y = 1.0 - y;
        }
        let (r1, r2) = (x * side, y * side);
        cols.push([r1, r2, 1.0 - r1 - r2]);
    }
    Ok(StochasticMatrix::from_matrix_unchecked(RMat::from_fn(3, 3, |i, j| cols[j][i])))
}

fn permutation_matrix(perm: &[usize]) -> Result<RMat> {
    Ok(StochasticMatrix::permutation(perm)?.matrix().clone())
}

/// Absorbing map `Φ_d [[Φ_n, R], [0, Q]] Φ_dᵀ`.
///
/// `transfer` is `n × (d−n)` and `transient` is `(d−n) × (d−n)`.
pub fn construct_absorbing(
    d: usize,
    n: usize,
    transfer: &RMat,
    transient: &RMat,
    outer: &[usize],
    inner: &[usize],
) -> Result<StochasticMatrix> {
    if n == 0 || n >= d {
        return Err(Error::InvalidBlocks(format!("need 0 < n < d, got n = {n}, d = {d}")));
    }
    let m = d - n;
    if transfer.shape() != (n, m) || transient.shape() != (m, m) {
        return Err(Error::InvalidBlocks("block shapes do not match (d, n)".into()));
    }
    if outer.len() != d || inner.len() != n {
        return Err(Error::InvalidBlocks("permutation sizes do not match (d, n)".into()));
    }
    if transfer.iter().all(|&x| x == 0.0) {
        return Err(Error::InvalidBlocks("transfer block has no nonzero entry".into()));
    }
    if (RMat::identity(m, m) - transient).determinant().abs() < 1e-12 {
        return Err(Error::InvalidBlocks("1 − Q is singular".into()));
    }
    let mut block = RMat::zeros(d, d);
    block.view_mut((0, 0), (n, n)).copy_from(&permutation_matrix(inner)?);
    block.view_mut((0, n), (n, m)).copy_from(transfer);
    block.view_mut((n, n), (m, m)).copy_from(transient);
    let phi = permutation_matrix(outer)?;
    let full = &phi * block * phi.transpose();
    StochasticMatrix::new(full).map_err(|e| Error::InvalidBlocks(format!("{e}")))
}

/// Spiral map `[[0, 0, p], [1, 0, q], [0, 1, 1−p−q]]` conjugated by `outer`.
pub fn construct_spiral(p: f64, q: f64, outer: &[usize]) -> Result<StochasticMatrix> {
    if !(p > 0.0 && q >= 0.0 && p + q <= 1.0) {
        return Err(Error::InvalidParameter(format!("spiral needs p in (0, 1 − q], got p = {p}, q = {q}")));
    }
    if outer.len() != 3 {
        return Err(Error::InvalidParameter("spiral permutation must have length 3".into()));
    }
    let xi = RMat::from_row_slice(3, 3, &[0.0, 0.0, p, 1.0, 0.0, q, 0.0, 1.0, 1.0 - p - q]);
    let phi = permutation_matrix(outer)?;
    StochasticMatrix::new(&phi * xi * phi.transpose())
}
