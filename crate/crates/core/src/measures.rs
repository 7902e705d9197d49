//! Bayesian subjectivity, average change in divergence, divergences and the
//! diamond-norm distance.
//!
//! Every Monte Carlo sample `i` draws its priors from `stream(seed, i)`, so an
//! estimate is the same whether samples are evaluated serially or in parallel,
//! as long as [`reduce`] sees them in index order.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::classical::{self, ProbVector, StochasticMatrix};
use crate::linalg::{CMat, HermitianEigen, C64};
use crate::quantum::{self, DensityOperator, KrausChannel};
use crate::samplers::{self, stream};
use crate::{Error, Result};

/// Minimum eigenvalue accepted for sampled quantum priors.
pub const QUANTUM_PRIOR_MIN_EIG: f64 = 1e-6;
/// Attempts per Monte Carlo sample before giving up.
pub const MAX_ATTEMPTS: usize = 1000;

const DIAMOND_SALT: u64 = 0xD1A3_04D0;
const SUPPORT_TOL: f64 = 1e-12;
const ASCENT_MAX_ITER: usize = 500;
const ASCENT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationConfig {
    pub npairs: usize,
    pub seed: u64,
    pub rejection_eps: f64,
    pub diamond_restarts: usize,
    pub normalize: bool,
}

impl IntegrationConfig {
    pub fn classical(seed: u64) -> Self {
        IntegrationConfig { npairs: 2000, seed, rejection_eps: crate::PUSHFORWARD_EPS, diamond_restarts: 16, normalize: false }
    }

    pub fn quantum(seed: u64) -> Self {
        IntegrationConfig { npairs: 200, ..Self::classical(seed) }
    }

    pub fn with_npairs(self, npairs: usize) -> Self {
        IntegrationConfig { npairs, ..self }
    }

    pub fn normalized(self) -> Self {
        IntegrationConfig { normalize: true, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.npairs == 0 || self.diamond_restarts == 0 || !(self.rejection_eps > 0.0) {
            return Err(Error::InvalidParameter(format!("integration config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureEstimate {
    pub value: f64,
    pub stderr: f64,
    pub nsamples: usize,
    pub seed: u64,
    pub normalized: bool,
    /// Prior draws rejected at the simplex boundary or for singular pushforwards.
    pub rejected: u64,
}

impl MeasureEstimate {
    /// `|a − b| / √(σ_a² + σ_b²)`, the separation in combined standard errors.
    pub fn z_score(&self, other: &MeasureEstimate) -> f64 {
        let s = (self.stderr.powi(2) + other.stderr.powi(2)).sqrt();
        let d = (self.value - other.value).abs();
        if s > 0.0 {
            d / s
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Domain {
    Classical,
    Quantum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MeasureKind {
    Subjectivity,
    Divergence,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::Classical => "classical",
            Domain::Quantum => "quantum",
        }
    }
}

impl MeasureKind {
    pub fn name(self) -> &'static str {
        match self {
            MeasureKind::Subjectivity => "subjectivity",
            MeasureKind::Divergence => "divergence",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    Classical(&'a StochasticMatrix),
    Quantum(&'a KrausChannel),
}

impl Target<'_> {
    pub fn dim(&self) -> usize {
        match self {
            Target::Classical(m) => m.dim(),
            Target::Quantum(c) => c.dim(),
        }
    }

    pub fn domain(&self) -> Domain {
        match self {
            Target::Classical(_) => Domain::Classical,
            Target::Quantum(_) => Domain::Quantum,
        }
    }
}

/// One Monte Carlo integrand value and the draws rejected before it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub value: f64,
    pub rejected: u32,
}

fn interior_prior<R: Rng + ?Sized>(d: usize, eps: f64, rng: &mut R) -> Option<ProbVector> {
    let p = samplers::sample_simplex(d, rng);
    (p.min() >= eps).then_some(p)
}

fn interior_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Option<DensityOperator> {
    let s = samplers::sample_hs_state(d, rng);
    (s.min_eigenvalue() >= QUANTUM_PRIOR_MIN_EIG).then_some(s)
}

fn rejectable<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::SingularPushforward { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn draw<R: Rng + ?Sized>(target: Target<'_>, kind: MeasureKind, cfg: &IntegrationConfig, rng: &mut R) -> Result<Option<f64>> {
    let d = target.dim();
    let eps = cfg.rejection_eps;
    match (target, kind) {
        (Target::Classical(map), MeasureKind::Subjectivity) => {
            let (Some(g1), Some(g2)) = (interior_prior(d, eps, rng), interior_prior(d, eps, rng)) else {
                return Ok(None);
            };
            let (Some(a), Some(b)) = (
                rejectable(classical::bayes_inverse_eps(map, &g1, eps))?,
                rejectable(classical::bayes_inverse_eps(map, &g2, eps))?,
            ) else {
                return Ok(None);
            };
            classical::spectral_norm_distance(&a, &b).map(Some)
        }
        (Target::Classical(map), MeasureKind::Divergence) => {
            let (Some(p), Some(g)) = (interior_prior(d, eps, rng), interior_prior(d, eps, rng)) else {
                return Ok(None);
            };
            let before = kl_divergence(&p, &g)?;
            let after = kl_divergence(&classical::apply(map, &p)?, &classical::apply(map, &g)?)?;
            Ok((before.is_finite() && after.is_finite()).then_some(before - after))
        }
        (Target::Quantum(chan), MeasureKind::Subjectivity) => {
            let (Some(g1), Some(g2)) = (interior_state(d, rng), interior_state(d, rng)) else {
                return Ok(None);
            };
            let (Some(a), Some(b)) = (
                rejectable(quantum::petz_inverse_eps(chan, &g1, eps))?,
                rejectable(quantum::petz_inverse_eps(chan, &g2, eps))?,
            ) else {
                return Ok(None);
            };
            diamond_norm_with(&a, &b, cfg.diamond_restarts, rng).map(|e| Some(e.value))
        }
        (Target::Quantum(chan), MeasureKind::Divergence) => {
            let (Some(rho), Some(g)) = (interior_state(d, rng), interior_state(d, rng)) else {
                return Ok(None);
            };
            let before = umegaki_divergence(&rho, &g)?;
            let after = umegaki_divergence(&quantum::apply_channel(chan, &rho)?, &quantum::apply_channel(chan, &g)?)?;
            Ok((before.is_finite() && after.is_finite()).then_some(before - after))
        }
    }
}

/// Integrand value for sample `index`, resampling rejected prior draws.
pub fn sample_integrand(target: Target<'_>, kind: MeasureKind, cfg: &IntegrationConfig, index: u64) -> Result<Sample> {
    let mut rng = stream(cfg.seed, index);
    let mut rejected = 0u32;
    for _ in 0..MAX_ATTEMPTS {
        if let Some(value) = draw(target, kind, cfg, &mut rng)? {
            return Ok(Sample { value, rejected });
        }
        rejected += 1;
    }
    Err(Error::RejectionLimit { attempts: MAX_ATTEMPTS })
}

/// Mean and standard error of samples taken in index order.
pub fn reduce(samples: &[Sample], cfg: &IntegrationConfig) -> MeasureEstimate {
    let n = samples.len();
    let mean = samples.iter().map(|s| s.value).sum::<f64>() / n as f64;
    let var = if n > 1 {
        samples.iter().map(|s| (s.value - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    MeasureEstimate {
        value: mean,
        stderr: (var / n as f64).sqrt(),
        nsamples: n,
        seed: cfg.seed,
        normalized: false,
        rejected: samples.iter().map(|s| s.rejected as u64).sum(),
    }
}

/// Unnormalized Monte Carlo estimate, evaluated serially.
pub fn estimate_raw(target: Target<'_>, kind: MeasureKind, cfg: &IntegrationConfig) -> Result<MeasureEstimate> {
    cfg.validate()?;
    let samples = (0..cfg.npairs as u64)
        .map(|i| sample_integrand(target, kind, cfg, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(reduce(&samples, cfg))
}

/// Divides by a reference estimate, propagating both standard errors.
pub fn normalize(raw: &MeasureEstimate, reference: &MeasureEstimate) -> MeasureEstimate {
    let r = reference.value;
    let value = raw.value / r;
    let stderr = ((raw.stderr / r).powi(2) + (raw.value * reference.stderr / (r * r)).powi(2)).sqrt();
    MeasureEstimate { value, stderr, normalized: true, ..*raw }
}

/// The canonical erasure: to the uniform vector or the maximally mixed state.
pub fn canonical_erasure_classical(dim: usize) -> StochasticMatrix {
    StochasticMatrix::erasure(&ProbVector::uniform(dim))
}

pub fn canonical_erasure_quantum(dim: usize) -> KrausChannel {
    KrausChannel::erasure(&DensityOperator::maximally_mixed(dim))
}

/// Unnormalized measure of the canonical erasure, the normalization yardstick.
pub fn erasure_reference_value(dim: usize, cfg: &IntegrationConfig, domain: Domain, kind: MeasureKind) -> Result<MeasureEstimate> {
    if dim < 2 {
        return Err(Error::InvalidParameter(format!("reference dimension {dim}")));
    }
    match domain {
        Domain::Classical => estimate_raw(Target::Classical(&canonical_erasure_classical(dim)), kind, cfg),
        Domain::Quantum => estimate_raw(Target::Quantum(&canonical_erasure_quantum(dim)), kind, cfg),
    }
}

/// Cache of erasure references keyed by dimension, domain, measure, seed and budget.
#[derive(Debug, Clone, Default)]
pub struct ReferenceCache {
    entries: BTreeMap<String, MeasureEstimate>,
}

impl ReferenceCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn key(dim: usize, domain: Domain, kind: MeasureKind, cfg: &IntegrationConfig) -> String {
        format!("{}:{}:d{}:seed{}:n{}", domain.name(), kind.name(), dim, cfg.seed, cfg.npairs)
    }

    pub fn get_or_compute(&mut self, dim: usize, domain: Domain, kind: MeasureKind, cfg: &IntegrationConfig) -> Result<MeasureEstimate> {
        let key = Self::key(dim, domain, kind, cfg);
        if let Some(e) = self.entries.get(&key) {
            return Ok(*e);
        }
        let e = erasure_reference_value(dim, cfg, domain, kind)?;
        self.entries.insert(key, e);
        Ok(e)
    }

    pub fn insert(&mut self, key: String, estimate: MeasureEstimate) {
        self.entries.insert(key, estimate);
    }

    pub fn entries(&self) -> &BTreeMap<String, MeasureEstimate> {
        &self.entries
    }
}

fn estimate(target: Target<'_>, kind: MeasureKind, cfg: &IntegrationConfig) -> Result<MeasureEstimate> {
    let raw = estimate_raw(target, kind, cfg)?;
    if !cfg.normalize {
        return Ok(raw);
    }
    let reference = erasure_reference_value(target.dim(), cfg, target.domain(), kind)?;
    Ok(normalize(&raw, &reference))
}

pub fn classical_subjectivity(map: &StochasticMatrix, cfg: &IntegrationConfig) -> Result<MeasureEstimate> {
    estimate(Target::Classical(map), MeasureKind::Subjectivity, cfg)
}

pub fn quantum_subjectivity(chan: &KrausChannel, cfg: &IntegrationConfig) -> Result<MeasureEstimate> {
    estimate(Target::Quantum(chan), MeasureKind::Subjectivity, cfg)
}

pub fn classical_avg_div_change(map: &StochasticMatrix, cfg: &IntegrationConfig) -> Result<MeasureEstimate> {
    estimate(Target::Classical(map), MeasureKind::Divergence, cfg)
}

pub fn quantum_avg_div_change(chan: &KrausChannel, cfg: &IntegrationConfig) -> Result<MeasureEstimate> {
    estimate(Target::Quantum(chan), MeasureKind::Divergence, cfg)
}

/// Kullback-Leibler divergence in nats; infinite on a support mismatch.
pub fn kl_divergence(p: &ProbVector, q: &ProbVector) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), found: q.dim() });
    }
    let mut s = 0.0;
    for (&a, &b) in p.entries().iter().zip(q.entries()) {
        if a <= 0.0 {
            continue;
        }
        if b <= 0.0 {
            return Ok(f64::INFINITY);
        }
        s += a * (a / b).ln();
    }
    Ok(s.max(0.0))
}

/// Umegaki relative entropy `Tr[ρ ln ρ − ρ ln γ]` in nats.
pub fn umegaki_divergence(rho: &DensityOperator, gamma: &DensityOperator) -> Result<f64> {
    if rho.dim() != gamma.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: gamma.dim() });
    }
    let er = HermitianEigen::new(rho.matrix());
    let entropy_term: f64 = er.values.iter().filter(|&&l| l > 0.0).map(|&l| l * l.ln()).sum();
    let eg = HermitianEigen::new(gamma.matrix());
    let mut cross = 0.0;
    for (k, &mu) in eg.values.iter().enumerate() {
        let v = eg.vectors.column(k);
        let w = (v.adjoint() * rho.matrix() * v)[(0, 0)].re;
        if mu <= SUPPORT_TOL {
            if w > SUPPORT_TOL {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        cross += w * mu.ln();
    }
    Ok((entropy_term - cross).max(0.0))
}

/// Result of a diamond-norm optimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiamondEstimate {
    pub value: f64,
    /// Optimum over inputs without an ancilla.
    pub lower_bound: f64,
}

/// `(A − B) ⊗ id` acting on pure inputs stored as `d × n` matrices `Ψ`,
/// with `|ψ⟩ = Σ Ψ[s, a] |s⟩|a⟩`.
struct ChannelDifference<'a> {
    a: &'a [CMat],
    b: &'a [CMat],
    d: usize,
}

fn row_major(x: &CMat) -> Vec<C64> {
    let (r, c) = x.shape();
    let mut v = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            v.push(x[(i, j)]);
        }
    }
    v
}

impl ChannelDifference<'_> {
    fn output(&self, psi: &CMat) -> (CMat, Vec<Vec<C64>>, Vec<Vec<C64>>) {
        let n = self.d * psi.ncols();
        let mut m = CMat::zeros(n, n);
        let va: Vec<Vec<C64>> = self.a.iter().map(|k| row_major(&(k * psi))).collect();
        let vb: Vec<Vec<C64>> = self.b.iter().map(|k| row_major(&(k * psi))).collect();
        for (vs, sign) in [(&va, 1.0), (&vb, -1.0)] {
            for v in vs.iter() {
                for i in 0..n {
                    let vi = v[i] * sign;
                    for j in 0..n {
                        m[(i, j)] += vi * v[j].conj();
                    }
                }
            }
        }
        (m, va, vb)
    }

    fn objective(&self, psi: &CMat) -> f64 {
        crate::linalg::trace_norm(&self.output(psi).0)
    }

    /// Objective and `Hψ`, where `H = L†(sign(L(ψψ†)))` so that `f = ⟨ψ|H|ψ⟩`.
    fn objective_and_direction(&self, psi: &CMat) -> (f64, CMat) {
        let (m, va, vb) = self.output(psi);
        let eig = HermitianEigen::new(&m);
        let f: f64 = eig.values.iter().map(|l| l.abs()).sum();
        let s = eig.map(|l| if l > 0.0 { 1.0 } else if l < 0.0 { -1.0 } else { 0.0 });
        let cols = psi.ncols();
        let mut g = CMat::zeros(self.d, cols);
        for (ks, vs, sign) in [(self.a, &va, 1.0), (self.b, &vb, -1.0)] {
            for (k, v) in ks.iter().zip(vs.iter()) {
                let sv = &s * crate::linalg::CVec::from_column_slice(v);
                let w = CMat::from_fn(self.d, cols, |i, j| sv[i * cols + j]);
                g += k.adjoint() * w * C64::new(sign, 0.0);
            }
        }
        (f, g)
    }

    /// Monotone projected gradient ascent on the unit sphere.
    fn ascend(&self, start: CMat) -> (f64, CMat) {
        let mut psi = unit(start);
        let (mut f, mut g) = self.objective_and_direction(&psi);
        let mut eta = 1.0;
        for _ in 0..ASCENT_MAX_ITER {
            let overlap = psi.dotc(&g);
            let t = &g - &psi * overlap;
            if t.norm() < ASCENT_TOL {
                break;
            }
            let mut accepted = None;
            while eta > 1e-12 {
                let cand = unit(&psi + &t * C64::new(eta, 0.0));
                let fc = self.objective(&cand);
                if fc > f {
                    accepted = Some((fc, cand));
                    break;
                }
                eta *= 0.5;
            }
            let Some((fc, cand)) = accepted else { break };
            let gain = fc - f;
            psi = cand;
            let (f2, g2) = self.objective_and_direction(&psi);
            f = f2;
            g = g2;
            eta = (eta * 2.0).min(1e6);
            if gain < ASCENT_TOL * 1e-2 {
                break;
            }
        }
        (f, psi)
    }
}

fn unit(m: CMat) -> CMat {
    let n = m.norm();
    m / C64::new(n, 0.0)
}

fn random_input<R: Rng + ?Sized>(d: usize, cols: usize, rng: &mut R) -> CMat {
    let g = samplers::ginibre(d.max(cols), rng);
    g.view((0, 0), (d, cols)).into_owned()
}

fn check_pair(a: &KrausChannel, b: &KrausChannel) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(())
}

/// Diamond-norm distance by multi-start ascent over pure system ⊗ ancilla inputs.
pub fn diamond_norm_with<R: Rng + ?Sized>(a: &KrausChannel, b: &KrausChannel, restarts: usize, rng: &mut R) -> Result<DiamondEstimate> {
    check_pair(a, b)?;
    let d = a.dim();
    let diff = ChannelDifference { a: a.kraus(), b: b.kraus(), d };
    let mut bound = 0.0;
    let mut bound_psi = random_input(d, 1, rng);
    for _ in 0..(restarts / 4).max(2) {
        let (f, psi) = diff.ascend(random_input(d, 1, rng));
        if f > bound {
            bound = f;
            bound_psi = psi;
        }
    }
    let mut embedded = CMat::zeros(d, d);
    embedded.set_column(0, &bound_psi.column(0));
    let (mut best, _) = diff.ascend(embedded);
    for _ in 0..restarts {
        let (f, _) = diff.ascend(random_input(d, d, rng));
        best = best.max(f);
    }
    debug_assert!(best >= bound - 1e-12);
    Ok(DiamondEstimate { value: best.max(bound), lower_bound: bound })
}

pub fn diamond_norm_distance(a: &KrausChannel, b: &KrausChannel, cfg: &IntegrationConfig) -> Result<f64> {
    let mut rng = stream(samplers::derive_seed(cfg.seed, DIAMOND_SALT), 0);
    diamond_norm_with(a, b, cfg.diamond_restarts, &mut rng).map(|e| e.value)
}

/// Disagreement between the retrodictions of `map` at two priors.
pub fn disagreement(map: &StochasticMatrix, g1: &ProbVector, g2: &ProbVector) -> Result<f64> {
    let a = classical::bayes_inverse(map, g1)?;
    let b = classical::bayes_inverse(map, g2)?;
    classical::spectral_norm_distance(&a, &b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn x_gate() -> CMat {
        let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        CMat::from_row_slice(2, 2, &[z, o, o, z])
    }

    #[test]
    fn kl_examples() {
        let p = ProbVector::new(vec![1.0, 0.0]).unwrap();
        let u = ProbVector::uniform(2);
        assert!((kl_divergence(&p, &u).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(kl_divergence(&u, &p).unwrap(), f64::INFINITY);
        assert_eq!(kl_divergence(&u, &u).unwrap(), 0.0);
    }

    #[test]
    fn umegaki_examples() {
        let pure = DensityOperator::basis_state(2, 0);
        let mixed = DensityOperator::maximally_mixed(2);
        assert!((umegaki_divergence(&pure, &mixed).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert_eq!(umegaki_divergence(&mixed, &pure).unwrap(), f64::INFINITY);
        let p = DensityOperator::diagonal(&[0.2, 0.8]).unwrap();
        let q = DensityOperator::diagonal(&[0.6, 0.4]).unwrap();
        let kl = kl_divergence(&ProbVector::new(vec![0.2, 0.8]).unwrap(), &ProbVector::new(vec![0.6, 0.4]).unwrap()).unwrap();
        assert!((umegaki_divergence(&p, &q).unwrap() - kl).abs() < 1e-12);
    }

    #[test]
    fn diamond_anchors() {
        let cfg = IntegrationConfig::quantum(5);
        let id = KrausChannel::identity(2);
        let x = KrausChannel::unitary(x_gate()).unwrap();
        assert!(diamond_norm_distance(&id, &id, &cfg).unwrap() < 1e-8);
        assert!((diamond_norm_distance(&id, &x, &cfg).unwrap() - 2.0).abs() < 1e-3);
        let e0 = KrausChannel::erasure(&DensityOperator::basis_state(2, 0));
        let e1 = KrausChannel::erasure(&DensityOperator::basis_state(2, 1));
        assert!((diamond_norm_distance(&e0, &e1, &cfg).unwrap() - 2.0).abs() < 1e-3);
    }

    #[test]
    fn permutation_has_zero_subjectivity() {
        let p = StochasticMatrix::permutation(&[2, 0, 1]).unwrap();
        let e = classical_subjectivity(&p, &IntegrationConfig::classical(1).with_npairs(200)).unwrap();
        assert!(e.value.abs() < 1e-12);
    }

    #[test]
    fn estimates_are_deterministic() {
        let m = StochasticMatrix::from_columns(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let cfg = IntegrationConfig::classical(3).with_npairs(300);
        assert_eq!(classical_subjectivity(&m, &cfg).unwrap(), classical_subjectivity(&m, &cfg).unwrap());
    }
}
