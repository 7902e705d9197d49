//! Probability vectors, column-stochastic maps and classical Bayesian inversion.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{self, RMat, RVec};
use crate::{Error, Result, PUSHFORWARD_EPS};

const STATE_TOL: f64 = 1e-12;
const CLASS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidState("empty vector".into()));
        }
        if let Some(x) = entries.iter().find(|x| !(**x >= -STATE_TOL && **x <= 1.0 + STATE_TOL)) {
            return Err(Error::InvalidState(format!("entry {x} outside [0, 1]")));
        }
        let s: f64 = entries.iter().sum();
        if (s - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("entries sum to {s}")));
        }
        Ok(ProbVector(entries))
    }

    pub(crate) fn from_vec_unchecked(entries: Vec<f64>) -> Self {
        ProbVector(entries)
    }

    pub fn uniform(d: usize) -> Self {
        ProbVector(alloc::vec![1.0 / d as f64; d])
    }

    pub fn pure(d: usize, i: usize) -> Self {
        let mut v = alloc::vec![0.0; d];
        v[i] = 1.0;
        ProbVector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn min(&self) -> f64 {
        self.0.iter().fold(f64::INFINITY, |a, &b| a.min(b))
    }

    pub fn to_dvector(&self) -> RVec {
        RVec::from_column_slice(&self.0)
    }
}

/// Column-stochastic matrix with entry `(a', a) = φ(a'|a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix(RMat);

impl StochasticMatrix {
    pub fn new(m: RMat) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::InvalidMatrix(format!("shape {}x{} is not square", m.nrows(), m.ncols())));
        }
        if let Some(x) = m.iter().find(|x| !(**x >= -STATE_TOL && **x <= 1.0 + STATE_TOL)) {
            return Err(Error::InvalidMatrix(format!("entry {x} outside [0, 1]")));
        }
        for (j, col) in m.column_iter().enumerate() {
            let s: f64 = col.iter().sum();
            if (s - 1.0).abs() > STATE_TOL {
                return Err(Error::InvalidMatrix(format!("column {j} sums to {s}")));
            }
        }
        Ok(StochasticMatrix(m))
    }

    pub(crate) fn from_matrix_unchecked(m: RMat) -> Self {
        StochasticMatrix(m)
    }

    /// Builds from rows, `rows[a'][a] = φ(a'|a)`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidMatrix("ragged rows".into()));
        }
        Self::new(RMat::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn from_columns(cols: &[Vec<f64>]) -> Result<Self> {
        let d = cols.len();
        if cols.iter().any(|c| c.len() != d) {
            return Err(Error::InvalidMatrix("ragged columns".into()));
        }
        Self::new(RMat::from_fn(d, d, |i, j| cols[j][i]))
    }

    pub fn identity(d: usize) -> Self {
        StochasticMatrix(RMat::identity(d, d))
    }

    /// Permutation sending state `j` to state `perm[j]`.
    pub fn permutation(perm: &[usize]) -> Result<Self> {
        let d = perm.len();
        let mut seen = alloc::vec![false; d];
        for &p in perm {
            if p >= d || seen[p] {
                return Err(Error::InvalidParameter(format!("{perm:?} is not a permutation")));
            }
            seen[p] = true;
        }
        Ok(StochasticMatrix(RMat::from_fn(d, d, |i, j| if perm[j] == i { 1.0 } else { 0.0 })))
    }

    /// Erasure sending every state to `tau`.
    pub fn erasure(tau: &ProbVector) -> Self {
        let d = tau.dim();
        StochasticMatrix(RMat::from_fn(d, d, |i, _| tau.0[i]))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &RMat {
        &self.0
    }

    /// `φ(a'|a)`.
    pub fn entry(&self, out: usize, inp: usize) -> f64 {
        self.0[(out, inp)]
    }

    pub fn column(&self, a: usize) -> Vec<f64> {
        self.0.column(a).iter().copied().collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.0.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

pub fn apply(map: &StochasticMatrix, state: &ProbVector) -> Result<ProbVector> {
    check_dim(map.dim(), state.dim())?;
    let out = map.matrix() * state.to_dvector();
    Ok(ProbVector(out.iter().copied().collect()))
}

/// Bayes-rule retrodiction map `φ̂(a|a') = φ(a'|a) γ(a) / φ[γ](a')`.
pub fn bayes_inverse(map: &StochasticMatrix, prior: &ProbVector) -> Result<StochasticMatrix> {
    bayes_inverse_eps(map, prior, PUSHFORWARD_EPS)
}

pub fn bayes_inverse_eps(map: &StochasticMatrix, prior: &ProbVector, eps: f64) -> Result<StochasticMatrix> {
    let push = apply(map, prior)?;
    let min = push.min();
    if min <= eps {
        return Err(Error::SingularPushforward { min });
    }
    let d = map.dim();
    let m = RMat::from_fn(d, d, |a, ap| map.entry(ap, a) * prior.0[a] / push.0[ap]);
    Ok(StochasticMatrix(m))
}

pub fn abs_determinant(map: &StochasticMatrix) -> f64 {
    map.matrix().clone().determinant().abs()
}

pub fn compose(outer: &StochasticMatrix, inner: &StochasticMatrix) -> Result<StochasticMatrix> {
    check_dim(outer.dim(), inner.dim())?;
    Ok(StochasticMatrix(outer.matrix() * inner.matrix()))
}

/// Largest singular value of `a − b`.
pub fn spectral_norm_distance(a: &StochasticMatrix, b: &StochasticMatrix) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    Ok(linalg::max_singular_value(&(a.matrix() - b.matrix())))
}

/// Asymptotic image of a map: the limit power and its centroid.
#[derive(Debug, Clone)]
pub struct Asymptote {
    pub limit: RMat,
    pub period: usize,
    pub centroid: ProbVector,
}

pub fn asymptote(map: &StochasticMatrix) -> Result<Asymptote> {
    let d = map.dim();
    let cycle = linalg::limit_cycle(map.matrix(), None)?;
    let u = ProbVector::uniform(d).to_dvector();
    let c = cycle.average(map.matrix(), &u);
    Ok(Asymptote { limit: cycle.limit, period: cycle.period, centroid: ProbVector(c.iter().copied().collect()) })
}

pub fn fixed_centroid(map: &StochasticMatrix) -> Result<ProbVector> {
    asymptote(map).map(|a| a.centroid)
}

/// Distance of a centroid from the uniform vector, 1 for a pure vector.
pub fn centroid_displacement(c: &ProbVector) -> f64 {
    let d = c.dim() as f64;
    let dist = c.0.iter().map(|x| (x - 1.0 / d).powi(2)).sum::<f64>().sqrt();
    dist / ((d - 1.0) / d).sqrt()
}

pub fn cfd(map: &StochasticMatrix) -> Result<f64> {
    fixed_centroid(map).map(|c| centroid_displacement(&c))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelaxationTime {
    Steps(u64),
    Infinite,
}

pub fn relaxation_time(map: &StochasticMatrix, z: f64) -> RelaxationTime {
    relaxation_time_from_det(abs_determinant(map), z)
}

/// Smallest `t ≥ 1` with `cad^t ≤ 10^{-z}`.
pub fn relaxation_time_from_det(cad: f64, z: f64) -> RelaxationTime {
    if cad >= 1.0 - 1e-12 {
        return RelaxationTime::Infinite;
    }
    if cad <= 0.0 {
        return RelaxationTime::Steps(1);
    }
    let t = -z / cad.log10();
    let t = (t * (1.0 - 1e-12)).ceil().max(1.0);
    RelaxationTime::Steps(t as u64)
}

/// Skew of a trit map's image triangle, `None` when a vertex pair coincides.
pub fn skew(map: &StochasticMatrix) -> Result<Option<f64>> {
    if map.dim() != 3 {
        return Err(Error::WrongDimension { expected: 3, found: map.dim() });
    }
    let cols: Vec<RVec> = (0..3).map(|j| map.matrix().column(j).into_owned()).collect();
    for (i, j) in [(0, 1), (1, 2), (0, 2)] {
        if (&cols[i] - &cols[j]).norm() < CLASS_TOL {
            return Ok(None);
        }
    }
    let angle_at = |k: usize, i: usize, j: usize| {
        let a = &cols[i] - &cols[k];
        let b = &cols[j] - &cols[k];
        let c = (a.dot(&b) / (a.norm() * b.norm())).clamp(-1.0, 1.0);
        c.acos().to_degrees()
    };
    let thetas = [angle_at(2, 0, 1), angle_at(0, 1, 2), angle_at(1, 2, 0)];
    let max = thetas.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let min = thetas.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    Ok(Some((max / 120.0).max((60.0 - min) / 60.0) - 0.5))
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelClass {
    Bijection,
    Erasure(ProbVector),
    Absorbing(usize),
    PseudoAbsorbing,
    Generic,
}

impl ChannelClass {
    pub fn tag(&self) -> &'static str {
        match self {
            ChannelClass::Bijection => "bijection",
            ChannelClass::Erasure(_) => "erasure",
            ChannelClass::Absorbing(_) => "absorbing",
            ChannelClass::PseudoAbsorbing => "pseudo-absorbing",
            ChannelClass::Generic => "generic",
        }
    }
}

fn near(x: f64, y: f64) -> bool {
    (x - y).abs() <= CLASS_TOL
}

fn is_permutation(m: &RMat) -> bool {
    let d = m.nrows();
    m.iter().all(|&x| near(x, 0.0) || near(x, 1.0))
        && (0..d).all(|i| m.row(i).iter().filter(|&&x| near(x, 1.0)).count() == 1)
        && (0..d).all(|j| m.column(j).iter().filter(|&&x| near(x, 1.0)).count() == 1)
}

/// States lying on closed cycles of deterministic transitions.
fn deterministic_cycle_states(m: &RMat) -> usize {
    let d = m.nrows();
    let next: Vec<Option<usize>> =
        (0..d).map(|j| m.column(j).iter().position(|&x| near(x, 1.0))).collect();
    (0..d)
        .filter(|&start| {
            let mut s = start;
            for _ in 0..d {
                match next[s] {
                    Some(n) if n == start => return true,
                    Some(n) => s = n,
                    None => return false,
                }
            }
            false
        })
        .count()
}

fn matches_spiral(m: &RMat) -> bool {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    PERMS.iter().any(|p| {
        let e = |i: usize, j: usize| m[(p[i], p[j])];
        near(e(0, 0), 0.0)
            && near(e(0, 1), 0.0)
            && near(e(1, 0), 1.0)
            && near(e(1, 1), 0.0)
            && near(e(2, 0), 0.0)
            && near(e(2, 1), 1.0)
            && e(0, 2) > CLASS_TOL
    })
}

pub fn classify(map: &StochasticMatrix) -> Result<ChannelClass> {
    let m = map.matrix();
    let d = map.dim();
    if is_permutation(m) {
        return Ok(ChannelClass::Bijection);
    }
    let first = m.column(0).into_owned();
    if (1..d).all(|j| m.column(j).iter().zip(first.iter()).all(|(a, b)| near(*a, *b))) {
        return Ok(ChannelClass::Erasure(ProbVector(first.iter().copied().collect())));
    }
    let has_unit = m.iter().any(|&x| near(x, 1.0));
    if has_unit {
        let limit = asymptote(map)?.limit;
        let rank = linalg::numerical_rank(&limit, CLASS_TOL);
        if rank < d && deterministic_cycle_states(m) == rank {
            return Ok(ChannelClass::Absorbing(rank));
        }
    }
    if d == 3 && matches_spiral(m) {
        return Ok(ChannelClass::PseudoAbsorbing);
    }
    Ok(ChannelClass::Generic)
}
