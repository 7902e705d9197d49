//! Property suites: data processing, extremal and composition theorems, absorbing geometry.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use retrodict_core::classical::{self, ChannelClass, ProbVector, StochasticMatrix};
use retrodict_core::linalg::{self, RMat};
use retrodict_core::measures::{IntegrationConfig, MeasureEstimate, MeasureKind, Target};
use retrodict_core::quantum::{self, DensityOperator, KrausChannel};
use retrodict_core::samplers::{self, Stream};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, Result};
use crate::estimator::par_estimate_raw;

const DPI_SALT: u64 = 0xD9_1000;
const THEOREM_SALT: u64 = 0x7E_0005;
const ABSORB_SALT: u64 = 0xAB_50B0;
const Z_BAND: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Dpi,
    Theorems,
    Absorbing,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Dpi => "dpi",
            Suite::Theorems => "theorems",
            Suite::Absorbing => "absorbing",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dpi" => Ok(Suite::Dpi),
            "theorems" => Ok(Suite::Theorems),
            "absorbing" => Ok(Suite::Absorbing),
            other => Err(CliError::Usage(format!("unknown suite `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Classical dimension.
    pub dim: usize,
    /// Classical channel pairs in the DPI sweep.
    pub pairs: usize,
    /// Qubit channel pairs in the DPI sweep.
    pub quantum_pairs: usize,
    /// Instances per relation in the theorem suite.
    pub instances: usize,
    /// Random absorbing maps in the geometry suite.
    pub absorbers: usize,
    /// Monte Carlo prior pairs per classical estimate.
    pub npairs: usize,
    /// Monte Carlo prior pairs per quantum estimate.
    pub quantum_npairs: usize,
    pub restarts: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 0,
            dim: 3,
            pairs: 200,
            quantum_pairs: 50,
            instances: 50,
            absorbers: 200,
            npairs: 2000,
            quantum_npairs: 200,
            restarts: 16,
        }
    }
}

impl VerifyConfig {
    fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(CliError::Usage("dimension must be at least 2".into()));
        }
        if self.npairs == 0 || self.quantum_npairs == 0 || self.restarts == 0 {
            return Err(CliError::Usage("sample budgets must be positive".into()));
        }
        Ok(())
    }

    fn classical_cfg(&self) -> IntegrationConfig {
        IntegrationConfig::classical(self.seed).with_npairs(self.npairs)
    }

    fn quantum_cfg(&self) -> IntegrationConfig {
        IntegrationConfig { diamond_restarts: self.restarts, ..IntegrationConfig::quantum(self.seed) }
            .with_npairs(self.quantum_npairs)
    }

    fn budgets(&self) -> BTreeMap<String, u64> {
        [
            ("dim", self.dim),
            ("pairs", self.pairs),
            ("quantum_pairs", self.quantum_pairs),
            ("instances", self.instances),
            ("absorbers", self.absorbers),
            ("samples", self.npairs),
            ("quantum_samples", self.quantum_npairs),
            ("restarts", self.restarts),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v as u64))
        .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Property {
    pub name: String,
    pub pass: bool,
    pub statistic: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub suite: String,
    pub seed: u64,
    pub budgets: BTreeMap<String, u64>,
    pub properties: Vec<Property>,
    pub violations: Vec<Value>,
    /// Instances demonstrating existence claims.
    pub witnesses: Vec<Value>,
}

impl Report {
    fn new(suite: Suite, cfg: &VerifyConfig) -> Self {
        Report {
            suite: suite.name().into(),
            seed: cfg.seed,
            budgets: cfg.budgets(),
            properties: Vec::new(),
            violations: Vec::new(),
            witnesses: Vec::new(),
        }
    }

    /// Passes when `statistic <= threshold`.
    fn at_most(&mut self, name: &str, statistic: f64, threshold: f64) {
        self.properties.push(Property { name: name.into(), pass: statistic <= threshold, statistic, threshold });
    }

    /// Passes when `statistic >= threshold`.
    fn at_least(&mut self, name: &str, statistic: f64, threshold: f64) {
        self.properties.push(Property { name: name.into(), pass: statistic >= threshold, statistic, threshold });
    }

    pub fn all_pass(&self) -> bool {
        self.properties.iter().all(|p| p.pass)
    }

    pub fn failures(&self) -> usize {
        self.properties.iter().filter(|p| !p.pass).count()
    }

    pub fn property(&self, name: &str) -> Option<&Property> {
        self.properties.iter().find(|p| p.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn run_suite(suite: Suite, cfg: &VerifyConfig) -> Result<Report> {
    cfg.validate()?;
    match suite {
        Suite::Dpi => dpi(cfg),
        Suite::Theorems => theorems(cfg),
        Suite::Absorbing => absorbing(cfg),
    }
}

fn subjectivity(target: Target<'_>, cfg: &IntegrationConfig) -> Result<MeasureEstimate> {
    par_estimate_raw(target, MeasureKind::Subjectivity, cfg)
}

/// `(before − after) / σ`: how far a measure dropped, in combined standard errors.
fn standardized_drop(before: &MeasureEstimate, after: &MeasureEstimate) -> f64 {
    let s = (before.stderr.powi(2) + after.stderr.powi(2)).sqrt();
    let d = before.value - after.value;
    if s > 0.0 {
        d / s
    } else if d > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

fn interior_prior(d: usize, rng: &mut Stream) -> ProbVector {
    loop {
        let p = samplers::sample_simplex(d, rng);
        if p.min() > 1e-6 {
            return p;
        }
    }
}

fn dpi(cfg: &VerifyConfig) -> Result<Report> {
    let mut report = Report::new(Suite::Dpi, cfg);
    let seed = samplers::derive_seed(cfg.seed, DPI_SALT);
    let ccfg = cfg.classical_cfg();

    let classical_pairs: Vec<(StochasticMatrix, StochasticMatrix)> = (0..cfg.pairs as u64)
        .map(|i| {
            let mut rng = samplers::stream(seed, i);
            (samplers::sample_stochastic(cfg.dim, &mut rng), samplers::sample_stochastic(cfg.dim, &mut rng))
        })
        .collect();
    let classical_results: Vec<(MeasureEstimate, MeasureEstimate)> = classical_pairs
        .par_iter()
        .map(|(phi, psi)| -> Result<_> {
            let comp = classical::compose(psi, phi)?;
            let before = retrodict_core::measures::estimate_raw(Target::Classical(phi), MeasureKind::Subjectivity, &ccfg)?;
            let after = retrodict_core::measures::estimate_raw(Target::Classical(&comp), MeasureKind::Subjectivity, &ccfg)?;
            Ok((before, after))
        })
        .collect::<Result<_>>()?;
    let mut drops = Vec::new();
    for (i, (before, after)) in classical_results.iter().enumerate() {
        let z = standardized_drop(before, after);
        drops.push(z);
        if z > Z_BAND {
            report.violations.push(json!({
                "property": "classical_dpi", "instance": i, "before": before.value, "after": after.value, "z": z,
            }));
        }
    }
    let n_viol = drops.iter().filter(|&&z| z > Z_BAND).count();
    report.at_most("classical_dpi_violations", n_viol as f64, 0.0);
    report.properties.push(Property {
        name: "classical_dpi_max_standardized_drop".into(),
        pass: n_viol == 0,
        statistic: drops.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        threshold: Z_BAND,
    });

    let qcfg = cfg.quantum_cfg();
    let mut qdrops = Vec::new();
    for i in 0..cfg.quantum_pairs as u64 {
        let mut rng = samplers::stream(seed, (1 << 32) + i);
        let f = samplers::sample_kraus_channel(2, &mut rng);
        let g = samplers::sample_kraus_channel(2, &mut rng);
        let comp = quantum::compose_channels(&g, &f)?;
        let before = subjectivity(Target::Quantum(&f), &qcfg)?;
        let after = subjectivity(Target::Quantum(&comp), &qcfg)?;
        let z = standardized_drop(&before, &after);
        qdrops.push(z);
        if z > Z_BAND {
            report.violations.push(json!({
                "property": "quantum_dpi", "instance": i, "before": before.value, "after": after.value, "z": z,
            }));
        }
    }
    let q_viol = qdrops.iter().filter(|&&z| z > Z_BAND).count();
    report.at_most("quantum_dpi_violations", q_viol as f64, 0.0);

    // Element-wise: a single pair of priors may see the disagreement shrink.
    let mut found = 0usize;
    for (i, (phi, psi)) in classical_pairs.iter().enumerate() {
        let comp = classical::compose(psi, phi)?;
        let mut rng = samplers::stream(seed, (2 << 32) + i as u64);
        for _ in 0..8 {
            let (g1, g2) = (interior_prior(cfg.dim, &mut rng), interior_prior(cfg.dim, &mut rng));
            let (Ok(before), Ok(after)) = (
                retrodict_core::measures::disagreement(phi, &g1, &g2),
                retrodict_core::measures::disagreement(&comp, &g1, &g2),
            ) else {
                continue;
            };
            if after < before - 1e-9 {
                found += 1;
                if report.witnesses.len() < 3 {
                    report.witnesses.push(json!({
                        "property": "elementwise_disagreement_decrease",
                        "phi": phi.rows(), "psi": psi.rows(),
                        "gamma1": g1.entries(), "gamma2": g2.entries(),
                        "before": before, "after": after,
                    }));
                }
            }
        }
    }
    report.at_least("elementwise_disagreement_decrease_found", found as f64, 1.0);
    Ok(report)
}

fn random_unitary_channel(rng: &mut Stream) -> Result<KrausChannel> {
    Ok(KrausChannel::unitary(samplers::haar_unitary(2, rng))?)
}

fn theorems(cfg: &VerifyConfig) -> Result<Report> {
    let mut report = Report::new(Suite::Theorems, cfg);
    let seed = samplers::derive_seed(cfg.seed, THEOREM_SALT);
    let d = cfg.dim;
    let ccfg = cfg.classical_cfg();
    let qcfg = cfg.quantum_cfg();
    let n = cfg.instances;
    let rng_for = |block: u64, i: usize| samplers::stream(seed, (block << 32) + i as u64);

    // Retrodiction identities.
    let mut recover = 0.0f64;
    let mut compose = 0.0f64;
    let mut petz_recover = 0.0f64;
    let mut petz_compose = 0.0f64;
    for i in 0..n {
        let mut rng = rng_for(0, i);
        let phi = samplers::sample_stochastic(d, &mut rng);
        let psi = samplers::sample_stochastic(d, &mut rng);
        let g = interior_prior(d, &mut rng);
        let push = classical::apply(&phi, &g)?;
        let inv = classical::bayes_inverse(&phi, &g)?;
        let back = classical::apply(&inv, &push)?;
        recover = recover.max(back.entries().iter().zip(g.entries()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        let whole = classical::bayes_inverse(&classical::compose(&psi, &phi)?, &g)?;
        let parts = classical::compose(&inv, &classical::bayes_inverse(&psi, &push)?)?;
        compose = compose.max(linalg::max_abs(&(whole.matrix() - parts.matrix())));

        let f = samplers::sample_kraus_channel(2, &mut rng);
        let gch = samplers::sample_kraus_channel(2, &mut rng);
        let gamma = samplers::sample_hs_state(2, &mut rng);
        let fg = quantum::apply_channel(&f, &gamma)?;
        let petz = quantum::petz_inverse(&f, &gamma)?;
        let back = quantum::apply_channel(&petz, &fg)?;
        petz_recover = petz_recover.max(linalg::max_abs_c(&(back.matrix() - gamma.matrix())));
        let whole = quantum::petz_inverse(&quantum::compose_channels(&gch, &f)?, &gamma)?;
        let parts = quantum::compose_channels(&petz, &quantum::petz_inverse(&gch, &fg)?)?;
        let probe = samplers::sample_hs_state(2, &mut rng);
        let (a, b) = (quantum::apply_channel(&whole, &probe)?, quantum::apply_channel(&parts, &probe)?);
        petz_compose = petz_compose.max(linalg::max_abs_c(&(a.matrix() - b.matrix())));
    }
    report.at_most("bayes_recovers_prior", recover, 1e-10);
    report.at_most("bayes_composes", compose, 1e-10);
    report.at_most("petz_recovers_prior", petz_recover, 1e-8);
    report.at_most("petz_composes", petz_compose, 1e-8);

    // Extremal maps.
    let mut perm_max = 0.0f64;
    for i in 0..n {
        let mut rng = rng_for(1, i);
        let perm = StochasticMatrix::permutation(&samplers::random_permutation(d, &mut rng))?;
        perm_max = perm_max.max(subjectivity(Target::Classical(&perm), &ccfg)?.value.abs());
    }
    report.at_most("bijection_subjectivity_zero", perm_max, 1e-8);
    let mut unitary_max = 0.0f64;
    for i in 0..n.min(10) {
        let u = random_unitary_channel(&mut rng_for(2, i))?;
        unitary_max = unitary_max.max(subjectivity(Target::Quantum(&u), &qcfg)?.value.abs());
    }
    report.at_most("unitary_subjectivity_zero", unitary_max, 1e-8);

    let canonical = subjectivity(Target::Classical(&retrodict_core::measures::canonical_erasure_classical(d)), &ccfg)?;
    let mut erase_z = 0.0f64;
    for i in 0..n.min(10) {
        let tau = interior_prior(d, &mut rng_for(3, i));
        let e = StochasticMatrix::erasure(&tau);
        erase_z = erase_z.max(subjectivity(Target::Classical(&e), &ccfg)?.z_score(&canonical));
    }
    report.at_most("classical_erasures_equal", erase_z, Z_BAND);
    let qcanonical = subjectivity(Target::Quantum(&retrodict_core::measures::canonical_erasure_quantum(2)), &qcfg)?;
    let mut qerase_z = 0.0f64;
    for i in 0..n.min(5) {
        let tau = full_rank_state(&mut rng_for(4, i));
        let w = KrausChannel::erasure(&tau);
        qerase_z = qerase_z.max(subjectivity(Target::Quantum(&w), &qcfg)?.z_score(&qcanonical));
    }
    report.at_most("quantum_erasures_equal", qerase_z, Z_BAND);

    // Compositions with bijections, unitaries and erasures.
    let mut worst = [0.0f64; 4];
    for i in 0..n {
        let mut rng = rng_for(5, i);
        let phi = samplers::sample_stochastic(d, &mut rng);
        let perm = StochasticMatrix::permutation(&samplers::random_permutation(d, &mut rng))?;
        let a = subjectivity(Target::Classical(&phi), &ccfg)?;
        let b = subjectivity(Target::Classical(&classical::compose(&perm, &phi)?), &ccfg)?;
        record(&mut report, &mut worst[0], "bijection_after_map", i, &a, &b);

        let e = loop {
            let tau = interior_prior(d, &mut rng);
            if classical::apply(&phi, &tau)?.min() > 1e-6 {
                break StochasticMatrix::erasure(&tau);
            }
        };
        let a = subjectivity(Target::Classical(&e), &ccfg)?;
        let b = subjectivity(Target::Classical(&classical::compose(&phi, &e)?), &ccfg)?;
        record(&mut report, &mut worst[2], "map_after_erasure", i, &a, &b);
    }
    for i in 0..n {
        let mut rng = rng_for(6, i);
        let f = samplers::sample_kraus_channel(2, &mut rng);
        let u = random_unitary_channel(&mut rng)?;
        let a = subjectivity(Target::Quantum(&f), &qcfg)?;
        let b = subjectivity(Target::Quantum(&quantum::compose_channels(&u, &f)?), &qcfg)?;
        record(&mut report, &mut worst[1], "unitary_after_channel", i, &a, &b);

        let w = loop {
            let tau = full_rank_state(&mut rng);
            if quantum::apply_channel(&f, &tau)?.min_eigenvalue() > 1e-6 {
                break KrausChannel::erasure(&tau);
            }
        };
        let a = subjectivity(Target::Quantum(&w), &qcfg)?;
        let b = subjectivity(Target::Quantum(&quantum::compose_channels(&f, &w)?), &qcfg)?;
        record(&mut report, &mut worst[3], "channel_after_erasure", i, &a, &b);
    }
    report.at_most("bijection_after_map_preserves", worst[0], Z_BAND);
    report.at_most("unitary_after_channel_preserves", worst[1], Z_BAND);
    report.at_most("map_after_erasure_preserves", worst[2], Z_BAND);
    report.at_most("channel_after_erasure_preserves", worst[3], Z_BAND);
    Ok(report)
}

fn full_rank_state(rng: &mut Stream) -> DensityOperator {
    loop {
        let s = samplers::sample_hs_state(2, rng);
        if s.min_eigenvalue() > 1e-6 {
            return s;
        }
    }
}

fn record(report: &mut Report, worst: &mut f64, name: &str, i: usize, a: &MeasureEstimate, b: &MeasureEstimate) {
    let z = a.z_score(b);
    *worst = worst.max(z);
    if z > Z_BAND {
        report.violations.push(json!({"property": name, "instance": i, "a": a.value, "b": b.value, "z": z}));
    }
}

/// Random absorbing map with transient columns drawn uniformly from the simplex.
pub fn random_absorber(d: usize, n: usize, standard: bool, rng: &mut Stream) -> Result<(StochasticMatrix, RMat, RMat)> {
    let m = d - n;
    loop {
        let mut transfer = RMat::zeros(n, m);
        let mut transient = RMat::zeros(m, m);
        for j in 0..m {
            let col = samplers::sample_simplex(d, rng);
            for i in 0..n {
                transfer[(i, j)] = col.entries()[i];
            }
            for i in 0..m {
                transient[(i, j)] = col.entries()[n + i];
            }
        }
        let (outer, inner) = if standard {
            ((0..d).collect(), (0..n).collect())
        } else {
            (samplers::random_permutation(d, rng), samplers::random_permutation(n, rng))
        };
        if let Ok(map) = samplers::construct_absorbing(d, n, &transfer, &transient, &outer, &inner) {
            return Ok((map, transfer, transient));
        }
    }
}

/// Standard-form absorber whose transient block is diagonal.
fn diagonal_absorber(d: usize, n: usize, rng: &mut Stream) -> Result<StochasticMatrix> {
    let m = d - n;
    let mut transfer = RMat::zeros(n, m);
    let mut transient = RMat::zeros(m, m);
    for j in 0..m {
        let stay: f64 = rng.random_range(0.05..0.95);
        transient[(j, j)] = stay;
        let split = samplers::sample_simplex(n, rng);
        for i in 0..n {
            transfer[(i, j)] = (1.0 - stay) * split.entries()[i];
        }
    }
    let outer: Vec<usize> = (0..d).collect();
    let inner: Vec<usize> = (0..n).collect();
    Ok(samplers::construct_absorbing(d, n, &transfer, &transient, &outer, &inner)?)
}

pub fn cfd_bounds(d: usize, n: usize) -> (f64, f64) {
    let (d, n) = (d as f64, n as f64);
    (((d - n) / ((d - 1.0) * n)).sqrt(), ((d - n) * (d + 1.0 - n) / ((d - 1.0) * d)).sqrt())
}

fn absorbing(cfg: &VerifyConfig) -> Result<Report> {
    let mut report = Report::new(Suite::Absorbing, cfg);
    let seed = samplers::derive_seed(cfg.seed, ABSORB_SALT);
    let rng_for = |block: u64, i: usize| samplers::stream(seed, (block << 32) + i as u64);

    let mut bound_excess = 0.0f64;
    let mut misclassified = 0usize;
    for i in 0..cfg.absorbers {
        let mut rng = rng_for(0, i);
        let d = rng.random_range(2..=5usize);
        let n = rng.random_range(1..d);
        let (map, _, _) = random_absorber(d, n, false, &mut rng)?;
        let c = classical::cfd(&map)?;
        let (lo, hi) = cfd_bounds(d, n);
        let excess = (lo - c).max(c - hi).max(0.0);
        bound_excess = bound_excess.max(excess);
        if excess > 1e-9 {
            report.violations.push(json!({"property": "cfd_bounds", "d": d, "n": n, "cfd": c, "lower": lo, "upper": hi}));
        }
        if classical::classify(&map)? != ChannelClass::Absorbing(n) {
            misclassified += 1;
            report.violations.push(json!({"property": "classified_absorbing", "d": d, "n": n, "map": map.rows()}));
        }
    }
    report.at_most("cfd_within_bounds", bound_excess, 1e-9);
    report.at_most("classified_absorbing", misclassified as f64, 0.0);

    let mut alt_dev = 0.0f64;
    for i in 0..cfg.absorbers.min(50) {
        let mut rng = rng_for(1, i);
        let (p, q) = loop {
            let (p, q): (f64, f64) = (rng.random(), rng.random());
            if p + q <= 1.0 && p + q > 1e-3 {
                break (p, q);
            }
        };
        let outer = samplers::random_permutation(3, &mut rng);
        let transfer = RMat::from_column_slice(2, 1, &[p, q]);
        let transient = RMat::from_element(1, 1, 1.0 - p - q);
        let map = samplers::construct_absorbing(3, 2, &transfer, &transient, &outer, &[1, 0])?;
        alt_dev = alt_dev.max((classical::cfd(&map)? - 0.5).abs());
    }
    report.at_most("alternating_absorber_cfd_half", alt_dev, 1e-9);

    let mut single_dev = 0.0f64;
    for i in 0..cfg.absorbers.min(50) {
        let mut rng = rng_for(2, i);
        let d = rng.random_range(2..=5usize);
        let (map, _, _) = random_absorber(d, 1, false, &mut rng)?;
        single_dev = single_dev.max((classical::cfd(&map)? - 1.0).abs());
    }
    report.at_most("single_absorber_cfd_one", single_dev, 1e-9);

    // Bayes inverses of standard-form absorbers.
    let mut block_zero = 0.0f64;
    let mut equivalence_failures = 0usize;
    for i in 0..cfg.absorbers.min(50) {
        let mut rng = rng_for(3, i);
        let d = rng.random_range(3..=5usize);
        let n = if i % 2 == 0 { rng.random_range(1..d) } else { rng.random_range(1..d - 1) };
        let m = d - n;
        let map = if i % 2 == 0 { diagonal_absorber(d, n, &mut rng)? } else { random_absorber(d, n, true, &mut rng)?.0 };
        let q = map.matrix().view((n, n), (m, m)).clone_owned();
        let diagonal = (0..m).all(|r| (0..m).all(|c| r == c || q[(r, c)] == 0.0));
        let g = interior_prior(d, &mut rng);
        let inv = classical::bayes_inverse(&map, &g)?;
        let im = inv.matrix();
        let mut off = 0.0f64;
        for r in 0..n {
            for c in 0..d {
                if c != r {
                    off = off.max(im[(r, c)].abs());
                }
            }
        }
        block_zero = block_zero.max(off);
        let absorbing_inverse = classical::classify(&inv)? == ChannelClass::Absorbing(m);
        let identity_block = linalg::max_abs(&(im.view((n, n), (m, m)) - RMat::identity(m, m))) < 1e-12;
        if absorbing_inverse != diagonal || identity_block != diagonal {
            equivalence_failures += 1;
            report.violations.push(json!({
                "property": "diagonal_transient_iff_absorbing_inverse", "d": d, "n": n, "diagonal": diagonal,
                "absorbing_inverse": absorbing_inverse, "map": map.rows(),
            }));
        }
    }
    report.at_most("inverse_block_zero_pattern", block_zero, 1e-12);
    report.at_most("diagonal_transient_iff_absorbing_inverse", equivalence_failures as f64, 0.0);
    Ok(report)
}
