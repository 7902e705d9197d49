//! Data files for the bit, qubit and trit density plots.

use rand::Rng;
use rayon::prelude::*;
use retrodict_core::bit_analytic::{self, BitCoords};
use retrodict_core::classical::{self, StochasticMatrix};
use retrodict_core::linalg::RMat;
use retrodict_core::measures::{IntegrationConfig, MeasureEstimate, MeasureKind, Target};
use retrodict_core::oracle::{self, QuadratureGrid};
use retrodict_core::quantum::{self, KrausChannel};
use retrodict_core::samplers::{self, GadSamplerConfig, GridCell, SampledQubitChannel};
use retrodict_core::Error;

use crate::error::{CliError, Result};
use crate::estimator::Estimator;
use crate::format::{Cell, Table};

const QUBIT_SALT: u64 = 0x5155_4249;
const TRIT_SALT: u64 = 0x5452_4954;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BitConfig {
    pub grid: usize,
    pub seed: u64,
    /// Adds quadrature and Monte Carlo columns to every row.
    pub cross_check: bool,
    pub npairs: usize,
    pub quadrature_points: usize,
}

impl Default for BitConfig {
    fn default() -> Self {
        BitConfig { grid: 64, seed: 0, cross_check: false, npairs: 2000, quadrature_points: 100 }
    }
}

/// Analytic bit measures on the `(D, F)` grid `D_i = i/(n−1)`, `F_j = j/(n−1)`.
///
/// Coordinates outside the domain of the closed forms are skipped.
pub fn run_bit_figure(cfg: &BitConfig) -> Result<Table> {
    if cfg.grid < 2 {
        return Err(usage("bit grid needs at least 2 points per axis"));
    }
    if cfg.cross_check && (cfg.npairs == 0 || cfg.quadrature_points < 16) {
        return Err(usage("cross-check needs positive pairs and at least 16 quadrature points"));
    }
    let mut header = vec!["d", "f", "cad", "cfd", "is", "is_stderr", "id", "id_stderr", "class", "seed", "index"];
    if cfg.cross_check {
        header.extend(["is_quadrature", "id_mc", "id_mc_stderr"]);
    }
    let n = cfg.grid;
    let coords: Vec<(usize, f64, f64)> = (0..n * n)
        .map(|k| (k, (k / n) as f64 / (n - 1) as f64, (k % n) as f64 / (n - 1) as f64))
        .collect();
    let mcfg = IntegrationConfig::classical(cfg.seed).with_npairs(cfg.npairs);
    let grid = QuadratureGrid { npoints: cfg.quadrature_points, ..Default::default() };
    let rows: Vec<Option<Vec<Cell>>> = coords
        .par_iter()
        .map(|&(index, d, f)| bit_row(index, d, f, cfg, &mcfg, &grid))
        .collect::<Result<_>>()?;
    let mut table = Table::new(&header);
    rows.into_iter().flatten().for_each(|r| table.push(r));
    Ok(table)
}

fn bit_row(
    index: usize,
    d: f64,
    f: f64,
    cfg: &BitConfig,
    mcfg: &IntegrationConfig,
    grid: &QuadratureGrid,
) -> Result<Option<Vec<Cell>>> {
    let analytic = BitCoords::new(d, f).and_then(|c| {
        Ok((c, bit_analytic::bit_subjectivity_analytic(c)?, bit_analytic::bit_divchange_analytic(c)?))
    });
    let (c, is, id) = match analytic {
        Ok(v) => v,
        Err(Error::DomainError(_)) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let map = bit_analytic::bit_channel(c)?;
    let mut row: Vec<Cell> = vec![
        d.into(),
        f.into(),
        classical::abs_determinant(&map).into(),
        classical::cfd(&map)?.into(),
        is.into(),
        0.0.into(),
        id.into(),
        0.0.into(),
        classical::classify(&map)?.tag().into(),
        cfg.seed.into(),
        index.into(),
    ];
    if cfg.cross_check {
        let q = oracle::quadrature_bit_moment(&map, grid, 1)?;
        let mc = retrodict_core::measures::estimate_raw(Target::Classical(&map), MeasureKind::Divergence, mcfg)?;
        row.extend([q.into(), mc.value.into(), mc.stderr.into()]);
    }
    Ok(Some(row))
}

#[derive(Debug, Clone, PartialEq)]
pub struct QubitConfig {
    pub grid: usize,
    pub quota: usize,
    /// Restricts the run to these `(i, j)` cells; all cells when `None`.
    pub cells: Option<Vec<(usize, usize)>>,
    pub seed: u64,
    pub npairs: usize,
    pub restarts: usize,
    pub sampler: GadSamplerConfig,
}

impl Default for QubitConfig {
    fn default() -> Self {
        QubitConfig {
            grid: 8,
            quota: 4,
            cells: None,
            seed: 0,
            npairs: 200,
            restarts: 16,
            sampler: GadSamplerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QubitOutput {
    pub rows: Table,
    pub cells: Table,
}

/// Stream index of the `k`-th channel in cell `(i, j)`.
pub fn qubit_sample_index(grid: usize, quota: usize, i: usize, j: usize, k: usize) -> u64 {
    ((i * grid + j) * quota + k) as u64
}

/// Regenerates the channel recorded at `index`.
pub fn qubit_sample(cfg: &QubitConfig, index: u64) -> Result<SampledQubitChannel> {
    let per_row = (cfg.grid * cfg.quota) as u64;
    let i = (index / per_row) as usize;
    let j = ((index % per_row) / cfg.quota as u64) as usize;
    let cell = GridCell::of_grid(cfg.grid, i, j, cfg.quota)?;
    let mut rng = samplers::stream(samplers::derive_seed(cfg.seed, QUBIT_SALT), index);
    Ok(samplers::sample_qubit_gad_grid(&cell, &cfg.sampler, &mut rng))
}

fn mean_with_stderr(values: &[MeasureEstimate]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().map(|e| e.value).sum::<f64>() / n;
    let mc = values.iter().map(|e| e.stderr.powi(2)).sum::<f64>() / (n * n);
    let spread = if values.len() > 1 {
        values.iter().map(|e| (e.value - mean).powi(2)).sum::<f64>() / ((n - 1.0) * n)
    } else {
        0.0
    };
    (mean, spread.max(mc).sqrt())
}

/// Fills the `(u, f)` grid and estimates normalized quantum measures per channel.
pub fn run_qubit_figure(cfg: &QubitConfig, est: &mut Estimator) -> Result<QubitOutput> {
    if cfg.grid == 0 || cfg.quota == 0 || cfg.npairs == 0 || cfg.restarts == 0 {
        return Err(usage("qubit grid, quota, pairs and restarts must be positive"));
    }
    let cells: Vec<(usize, usize)> = match &cfg.cells {
        Some(c) => c.clone(),
        None => (0..cfg.grid).flat_map(|i| (0..cfg.grid).map(move |j| (i, j))).collect(),
    };
    for &(i, j) in &cells {
        GridCell::of_grid(cfg.grid, i, j, cfg.quota)?;
    }
    let indices: Vec<u64> = cells
        .iter()
        .flat_map(|&(i, j)| (0..cfg.quota).map(move |k| qubit_sample_index(cfg.grid, cfg.quota, i, j, k)))
        .collect();
    let sampled: Vec<SampledQubitChannel> = indices.par_iter().map(|&ix| qubit_sample(cfg, ix)).collect::<Result<_>>()?;
    let channels: Vec<KrausChannel> =
        sampled.iter().map(|s| quantum::dilation_to_kraus(&s.dilation)).collect::<retrodict_core::Result<_>>()?;
    let targets: Vec<Target<'_>> = channels.iter().map(Target::Quantum).collect();
    let mcfg = IntegrationConfig { diamond_restarts: cfg.restarts, ..IntegrationConfig::quantum(cfg.seed).with_npairs(cfg.npairs) }
        .normalized();
    let is = est.estimate_many(&targets, MeasureKind::Subjectivity, &mcfg)?;
    let id = est.estimate_many(&targets, MeasureKind::Divergence, &mcfg)?;

    let mut rows = Table::new(&[
        "cell_i", "cell_j", "u", "f", "qad", "qfd", "is", "is_stderr", "id", "id_stderr", "class", "sandwiched", "retries",
        "seed", "index",
    ]);
    for (k, s) in sampled.iter().enumerate() {
        let chan = &channels[k];
        rows.push(vec![
            s.cell.0.into(),
            s.cell.1.into(),
            s.coords.0.into(),
            s.coords.1.into(),
            quantum::qad(chan).into(),
            quantum::qfd(chan)?.into(),
            is[k].value.into(),
            is[k].stderr.into(),
            id[k].value.into(),
            id[k].stderr.into(),
            if s.sandwiched { "sandwiched-gad" } else { "gad" }.into(),
            s.sandwiched.into(),
            s.retries.into(),
            cfg.seed.into(),
            indices[k].into(),
        ]);
    }

    let mut cell_table = Table::new(&[
        "cell_i", "cell_j", "u_lo", "u_hi", "f_lo", "f_hi", "count", "fallbacks", "is_mean", "is_stderr", "id_mean",
        "id_stderr",
    ]);
    for (c, &(i, j)) in cells.iter().enumerate() {
        let range = c * cfg.quota..(c + 1) * cfg.quota;
        let cell = GridCell::of_grid(cfg.grid, i, j, cfg.quota)?;
        let fallbacks = sampled[range.clone()].iter().filter(|s| !s.sandwiched).count();
        let (is_mean, is_se) = mean_with_stderr(&is[range.clone()]);
        let (id_mean, id_se) = mean_with_stderr(&id[range]);
        cell_table.push(vec![
            i.into(),
            j.into(),
            cell.u.0.into(),
            cell.u.1.into(),
            cell.f.0.into(),
            cell.f.1.into(),
            cfg.quota.into(),
            fallbacks.into(),
            is_mean.into(),
            is_se.into(),
            id_mean.into(),
            id_se.into(),
        ]);
    }
    Ok(QubitOutput { rows, cells: cell_table })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TritConfig {
    pub levels: Vec<f64>,
    pub per_level: usize,
    /// Adds spiral, absorber and permutation populations.
    pub inject: bool,
    pub seed: u64,
    pub npairs: usize,
}

impl Default for TritConfig {
    fn default() -> Self {
        TritConfig { levels: (0..10).map(|i| i as f64 / 10.0).collect(), per_level: 40, inject: true, seed: 0, npairs: 2000 }
    }
}

/// Family tag of a trit row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Random,
    Spiral,
    AltAbsorber,
    UnbiasedAbsorber,
    Permutation,
}

impl Family {
    pub fn tag(self) -> &'static str {
        match self {
            Family::Random => "random",
            Family::Spiral => "spiral",
            Family::AltAbsorber => "alt-absorber",
            Family::UnbiasedAbsorber => "unbiased-absorber",
            Family::Permutation => "permutation",
        }
    }
}

/// A trit channel with the parameters it was built from.
#[derive(Debug, Clone)]
pub struct TritChannel {
    pub family: Family,
    pub level: f64,
    pub p: f64,
    pub q: f64,
    pub map: StochasticMatrix,
}

const INJECTED_CADS: [f64; 7] = [0.04, 0.08, 0.12, 0.16, 0.2, 0.24, 0.28];

fn injected_specs() -> Vec<(Family, f64, f64)> {
    let mut specs = Vec::new();
    for &p in &INJECTED_CADS {
        for q in [p / 2.0, p, (1.0 - p) / 2.0, 0.8 * (1.0 - p)] {
            specs.push((Family::Spiral, p, q));
        }
    }
    for &r in &INJECTED_CADS {
        for s in [0.0, 0.25, 0.5, 0.75] {
            specs.push((Family::AltAbsorber, s * (1.0 - r), (1.0 - s) * (1.0 - r)));
        }
    }
    for &r in &INJECTED_CADS {
        specs.push((Family::UnbiasedAbsorber, (1.0 - r) / 2.0, (1.0 - r) / 2.0));
    }
    for _ in 0..6 {
        specs.push((Family::Permutation, f64::NAN, f64::NAN));
    }
    specs
}

fn block_absorber(top: [[f64; 3]; 3], outer: &[usize]) -> Result<StochasticMatrix> {
    let transfer = RMat::from_fn(2, 1, |i, _| top[i][2]);
    let transient = RMat::from_element(1, 1, top[2][2]);
    let inner = if top[0][0] == 1.0 { vec![0, 1] } else { vec![1, 0] };
    Ok(samplers::construct_absorbing(3, 2, &transfer, &transient, outer, &inner)?)
}

fn all_permutations() -> Vec<Vec<usize>> {
    vec![vec![0, 1, 2], vec![0, 2, 1], vec![1, 0, 2], vec![1, 2, 0], vec![2, 0, 1], vec![2, 1, 0]]
}

/// Regenerates trit row `index`; rows are the random sweep followed by injections.
pub fn trit_channel(cfg: &TritConfig, index: u64) -> Result<TritChannel> {
    let mut rng = samplers::stream(samplers::derive_seed(cfg.seed, TRIT_SALT), index);
    let nrandom = (cfg.levels.len() * cfg.per_level) as u64;
    if index < nrandom {
        let level = cfg.levels[(index / cfg.per_level as u64) as usize];
        let map = samplers::sample_trit_channel_restricted(level, &mut rng)?;
        return Ok(TritChannel { family: Family::Random, level, p: f64::NAN, q: f64::NAN, map });
    }
    let specs = injected_specs();
    let k = (index - nrandom) as usize;
    if !cfg.inject || k >= specs.len() {
        return Err(usage(format!("trit row {index} out of range")));
    }
    let (family, p, q) = specs[k];
    let outer = samplers::random_permutation(3, &mut rng);
    let map = match family {
        Family::Spiral => samplers::construct_spiral(p, q, &outer)?,
        Family::AltAbsorber => block_absorber([[0.0, 1.0, p], [1.0, 0.0, q], [0.0, 0.0, 1.0 - p - q]], &outer)?,
        Family::UnbiasedAbsorber => block_absorber([[1.0, 0.0, p], [0.0, 1.0, p], [0.0, 0.0, 1.0 - 2.0 * p]], &outer)?,
        Family::Permutation => {
            let perms = all_permutations();
            StochasticMatrix::permutation(&perms[(k + rng.random_range(0..6)) % 6])?
        }
        Family::Random => unreachable!(),
    };
    Ok(TritChannel { family, level: f64::NAN, p, q, map })
}

pub fn trit_row_count(cfg: &TritConfig) -> usize {
    cfg.levels.len() * cfg.per_level + if cfg.inject { injected_specs().len() } else { 0 }
}

/// Sweeps `D` with the restricted sampler and appends the injected families.
pub fn run_trit_figure(cfg: &TritConfig, est: &mut Estimator) -> Result<Table> {
    if cfg.levels.is_empty() || cfg.per_level == 0 || cfg.npairs == 0 {
        return Err(usage("trit levels, per-level count and pairs must be nonempty"));
    }
    if cfg.levels.iter().any(|d| !(0.0..=1.0).contains(d)) {
        return Err(usage("trit levels must lie in [0, 1]"));
    }
    let n = trit_row_count(cfg) as u64;
    let chans: Vec<TritChannel> = (0..n).into_par_iter().map(|i| trit_channel(cfg, i)).collect::<Result<_>>()?;
    let targets: Vec<Target<'_>> = chans.iter().map(|c| Target::Classical(&c.map)).collect();
    let mcfg = IntegrationConfig::classical(cfg.seed).with_npairs(cfg.npairs).normalized();
    let is = est.estimate_many(&targets, MeasureKind::Subjectivity, &mcfg)?;
    let id = est.estimate_many(&targets, MeasureKind::Divergence, &mcfg)?;
    let mut table = Table::new(&[
        "family", "level", "p", "q", "cad", "cfd", "skew", "is", "is_stderr", "id", "id_stderr", "class", "seed", "index",
    ]);
    for (k, c) in chans.iter().enumerate() {
        table.push(vec![
            c.family.tag().into(),
            c.level.into(),
            c.p.into(),
            c.q.into(),
            classical::abs_determinant(&c.map).into(),
            classical::cfd(&c.map)?.into(),
            classical::skew(&c.map)?.unwrap_or(f64::NAN).into(),
            is[k].value.into(),
            is[k].stderr.into(),
            id[k].value.into(),
            id[k].stderr.into(),
            classical::classify(&c.map)?.tag().into(),
            cfg.seed.into(),
            (k as u64).into(),
        ]);
    }
    Ok(table)
}
