//! End-to-end acceptance checks. Each test prints one `criterion N: PASS|FAIL` line.

use std::io::Write;
use std::time::Instant;

use retrodict::estimator::{par_estimate_raw, Estimator};
use retrodict::experiments::{run_trit_figure, TritConfig};
use retrodict::format::{read_csv, write_table, OutputFormat};
use retrodict::verify::{run_suite, Report, Suite, VerifyConfig};
use retrodict_core::bit_analytic::{self, BitCoords};
use retrodict_core::classical::{self, ProbVector, StochasticMatrix};
use retrodict_core::linalg::{CMat, C64};
use retrodict_core::measures::{self, IntegrationConfig, MeasureEstimate, MeasureKind, Target};
use retrodict_core::oracle::{self, QuadratureGrid};
use retrodict_core::quantum::{self, DensityOperator, KrausChannel};
use retrodict_core::samplers::{self, GadSamplerConfig, GridCell};

const SEED: u64 = 20_240_901;

const EXACT_TOL: f64 = 1e-8;
const Z_BAND: f64 = 3.0;
const IS_RESIDUAL: f64 = 0.01;
const ID_RESIDUAL: f64 = 0.02;
const Z_CHANNEL_TOL: f64 = 1e-12;
const PETZ_TOL: f64 = 1e-10;
const DIAMOND_ANCHOR_TOL: f64 = 1e-3;
const GAD_QAD_TOL: f64 = 1e-8;
const GAD_FIXED_TOL: f64 = 1e-10;
const MATCH_WINDOW: f64 = 0.05;

/// Writes straight to stderr so the line shows up even when test output is captured.
fn line(text: &str) {
    let _ = writeln!(std::io::stderr(), "{text}");
}

fn verdict(n: usize, pass: bool, detail: &str, start: Instant) {
    let tag = if pass { "PASS" } else { "FAIL" };
    line(&format!("criterion {n}: {tag} {detail} ({:.1}s)", start.elapsed().as_secs_f64()));
}

fn print_report(report: &Report) {
    for p in &report.properties {
        let tag = if p.pass { "ok  " } else { "FAIL" };
        line(&format!("  {tag} {} statistic={} threshold={}", p.name, p.statistic, p.threshold));
    }
}

fn combined_z(a: &MeasureEstimate, b: &MeasureEstimate) -> f64 {
    (a.value - b.value).abs() / (a.stderr * a.stderr + b.stderr * b.stderr).sqrt().max(1e-300)
}

/// Relative least-squares scale `s` with `s·analytic ≈ oracle`, and the worst relative residual.
fn fit_scale(analytic: &[f64], oracle: &[f64]) -> (f64, f64) {
    let r: Vec<f64> = analytic.iter().zip(oracle).map(|(a, o)| a / o).collect();
    let s = r.iter().sum::<f64>() / r.iter().map(|x| x * x).sum::<f64>();
    (s, r.iter().map(|x| (s * x - 1.0).abs()).fold(0.0, f64::max))
}

fn pauli_x() -> CMat {
    let (z, o) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    CMat::from_row_slice(2, 2, &[z, o, o, z])
}

#[test]
fn criterion_01_extremal_maps_have_zero_subjectivity() {
    let start = Instant::now();
    let cfg = IntegrationConfig::classical(SEED).normalized();
    let mut worst = 0.0f64;
    for i in 0..50u64 {
        let d = 2 + (i % 3) as usize;
        let perm = samplers::random_permutation(d, &mut samplers::stream(SEED, i));
        let map = StochasticMatrix::permutation(&perm).unwrap();
        worst = worst.max(measures::classical_subjectivity(&map, &cfg).unwrap().value.abs());
    }
    let qcfg = IntegrationConfig::quantum(SEED).normalized();
    for i in 0..10u64 {
        let u = samplers::haar_unitary(2, &mut samplers::stream(SEED + 1, i));
        let chan = KrausChannel::unitary(u).unwrap();
        worst = worst.max(measures::quantum_subjectivity(&chan, &qcfg).unwrap().value.abs());
    }
    let pass = worst <= EXACT_TOL;
    verdict(1, pass, &format!("max |normalized I^s| = {worst:.3e} (tol {EXACT_TOL:e})"), start);
    assert!(pass);
}

#[test]
fn criterion_02_erasures_are_universal() {
    let start = Instant::now();
    let mut worst_pair = 0.0f64;
    let mut worst_unit = 0.0f64;
    let mut groups: Vec<Vec<MeasureEstimate>> = Vec::new();
    for d in [2usize, 3] {
        let reference = par_estimate_raw(
            Target::Classical(&measures::canonical_erasure_classical(d)),
            MeasureKind::Subjectivity,
            &IntegrationConfig::classical(SEED + 1000 + d as u64),
        )
        .unwrap();
        let mut group = Vec::new();
        for k in 0..5u64 {
            let tau = samplers::sample_simplex(d, &mut samplers::stream(SEED + 2, 10 * d as u64 + k));
            let cfg = IntegrationConfig::classical(SEED + 100 * d as u64 + k);
            let est = par_estimate_raw(Target::Classical(&StochasticMatrix::erasure(&tau)), MeasureKind::Subjectivity, &cfg)
                .unwrap();
            let norm = measures::normalize(&est, &reference);
            worst_unit = worst_unit.max((norm.value - 1.0).abs() / norm.stderr);
            group.push(est);
        }
        groups.push(group);
    }
    let qref = par_estimate_raw(
        Target::Quantum(&measures::canonical_erasure_quantum(2)),
        MeasureKind::Subjectivity,
        &IntegrationConfig::quantum(SEED + 3000),
    )
    .unwrap();
    let mut qgroup = Vec::new();
    for k in 0..5u64 {
        let tau = samplers::sample_hs_state(2, &mut samplers::stream(SEED + 3, k));
        let cfg = IntegrationConfig::quantum(SEED + 4000 + k);
        let est = par_estimate_raw(Target::Quantum(&KrausChannel::erasure(&tau)), MeasureKind::Subjectivity, &cfg).unwrap();
        let norm = measures::normalize(&est, &qref);
        worst_unit = worst_unit.max((norm.value - 1.0).abs() / norm.stderr);
        qgroup.push(est);
    }
    groups.push(qgroup);
    for g in &groups {
        for i in 0..g.len() {
            for j in 0..i {
                worst_pair = worst_pair.max(combined_z(&g[i], &g[j]));
            }
        }
    }
    let pass = worst_pair <= Z_BAND && worst_unit <= Z_BAND;
    verdict(
        2,
        pass,
        &format!("max pairwise z = {worst_pair:.2}, max |normalized − 1|/σ = {worst_unit:.2} (band {Z_BAND})"),
        start,
    );
    assert!(pass);
}

#[test]
fn criterion_03_bit_closed_forms_match_oracles() {
    let start = Instant::now();
    let grid = QuadratureGrid::default();
    let mc = IntegrationConfig::classical(SEED).with_npairs(100_000);
    let (mut a_is, mut o_is, mut a_id, mut o_id, mut sq) = (vec![], vec![], vec![], vec![], vec![]);
    for d in [0.1, 0.3, 0.5, 0.7, 0.9] {
        for f in [0.0, 0.3, 0.6, 0.9] {
            let c = BitCoords::new(d, f).unwrap();
            let map = bit_analytic::bit_channel(c).unwrap();
            a_is.push(bit_analytic::bit_subjectivity_analytic(c).unwrap());
            o_is.push(oracle::quadrature_bit_moment(&map, &grid, 1).unwrap());
            sq.push(oracle::quadrature_bit_moment(&map, &grid, 2).unwrap());
            a_id.push(bit_analytic::bit_divchange_analytic(c).unwrap());
            o_id.push(par_estimate_raw(Target::Classical(&map), MeasureKind::Divergence, &mc).unwrap().value);
        }
    }
    let (s_is, r_is) = fit_scale(&a_is, &o_is);
    let (s_id, r_id) = fit_scale(&a_id, &o_id);
    let (s_sq, r_sq) = fit_scale(&a_is, &sq);
    line(&format!("  I^s vs squared-norm quadrature: scale {s_sq:.4}, residual {:.3}%", 100.0 * r_sq));
    let pass = r_is < IS_RESIDUAL && r_id < ID_RESIDUAL;
    verdict(
        3,
        pass,
        &format!(
            "{} coords; I^s scale {s_is:.4} residual {:.2}% (tol {}%), I^d scale {s_id:.4} residual {:.2}% (tol {}%)",
            a_is.len(),
            100.0 * r_is,
            100.0 * IS_RESIDUAL,
            100.0 * r_id,
            100.0 * ID_RESIDUAL
        ),
        start,
    );
    assert!(pass);
}

#[test]
fn criterion_04_z_channel_closed_form() {
    let start = Instant::now();
    let want = [[2.0 / 3.0, 1.0 / 3.0], [0.0, 1.0]];
    let z = StochasticMatrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 0.5]]).unwrap();
    let inv = classical::bayes_inverse(&z, &ProbVector::uniform(2)).unwrap();
    let mut err_c = 0.0f64;
    for (a, col) in want.iter().enumerate() {
        for (x, y) in inv.column(a).iter().zip(col) {
            err_c = err_c.max((x - y).abs());
        }
    }
    let damping = quantum::dilation_to_kraus(&samplers::gad_dilation(0.5, 1.0)).unwrap();
    let petz = quantum::petz_inverse(&damping, &DensityOperator::maximally_mixed(2)).unwrap();
    let mut err_q = 0.0f64;
    for (k, col) in want.iter().enumerate() {
        let out = quantum::apply_channel(&petz, &DensityOperator::basis_state(2, k)).unwrap();
        for (i, y) in col.iter().enumerate() {
            err_q = err_q.max((out.matrix()[(i, i)] - C64::new(*y, 0.0)).norm_sqr().sqrt());
        }
        err_q = err_q.max(out.matrix()[(0, 1)].norm_sqr().sqrt());
    }
    let pass = err_c <= Z_CHANNEL_TOL && err_q <= PETZ_TOL;
    verdict(4, pass, &format!("Bayes error {err_c:.2e}, Petz error {err_q:.2e}"), start);
    assert!(pass);
}

#[test]
fn criterion_05_diamond_anchors() {
    let start = Instant::now();
    let cfg = IntegrationConfig::quantum(SEED);
    let mut rng = samplers::stream(SEED, 5);
    let a = samplers::sample_kraus_channel(2, &mut rng);
    let same = measures::diamond_norm_distance(&a, &a, &cfg).unwrap();
    let e0 = KrausChannel::erasure(&DensityOperator::basis_state(2, 0));
    let e1 = KrausChannel::erasure(&DensityOperator::basis_state(2, 1));
    let orth = measures::diamond_norm_distance(&e0, &e1, &cfg).unwrap();
    let x = KrausChannel::unitary(pauli_x()).unwrap();
    let flip = measures::diamond_norm_distance(&KrausChannel::identity(2), &x, &cfg).unwrap();
    let mut below = 0usize;
    let mut worst_gap = f64::INFINITY;
    for i in 0..50u64 {
        let mut rng = samplers::stream(SEED + 5, i);
        let a = samplers::sample_kraus_channel(2, &mut rng);
        let b = samplers::sample_kraus_channel(2, &mut rng);
        let dn = measures::diamond_norm_distance(&a, &b, &cfg).unwrap();
        let lower = oracle::brute_diamond_lower(&a, &b, 256, SEED + i).unwrap();
        worst_gap = worst_gap.min(dn - lower);
        if dn < lower - EXACT_TOL {
            below += 1;
        }
    }
    let pass = same <= EXACT_TOL
        && (orth - 2.0).abs() <= DIAMOND_ANCHOR_TOL
        && (flip - 2.0).abs() <= DIAMOND_ANCHOR_TOL
        && below == 0;
    verdict(
        5,
        pass,
        &format!("identical {same:.2e}, orthogonal erasures {orth:.6}, identity vs X {flip:.6}, below brute bound {below}/50 (min gap {worst_gap:.2e})"),
        start,
    );
    assert!(pass);
}

fn suite_criterion(n: usize, suite: Suite) {
    let start = Instant::now();
    let cfg = VerifyConfig { seed: SEED, ..VerifyConfig::default() };
    let report = run_suite(suite, &cfg).unwrap();
    print_report(&report);
    let pass = report.all_pass();
    verdict(n, pass, &format!("{} suite, {} properties, {} failing", suite.name(), report.properties.len(), report.failures()), start);
    assert!(pass);
}

#[test]
fn criterion_06_dpi_sweep() {
    suite_criterion(6, Suite::Dpi);
}

#[test]
fn criterion_07_theorem_relations() {
    suite_criterion(7, Suite::Theorems);
}

#[test]
fn criterion_08_absorbing_geometry() {
    suite_criterion(8, Suite::Absorbing);
}

#[test]
fn criterion_09_gad_sampler_fidelity() {
    let start = Instant::now();
    let sampler = GadSamplerConfig::default();
    let (mut qad_err, mut fixed_err, mut plain) = (0.0f64, 0.0f64, 0usize);
    for k in 0..500u64 {
        let (i, j) = ((k % 8) as usize, ((k / 8) % 8) as usize);
        let cell = GridCell::of_grid(8, i, j, 1).unwrap();
        let s = samplers::sample_qubit_gad_grid(&cell, &sampler, &mut samplers::stream(SEED, k));
        let chan = quantum::dilation_to_kraus(&s.dilation).unwrap();
        qad_err = qad_err.max((quantum::qad(&chan) - s.coords.0).abs());
        if !s.sandwiched {
            plain += 1;
            let (fixed, _) = quantum::fixed_centroid_bloch(&chan).unwrap();
            fixed_err = fixed_err.max((fixed.norm() - (2.0 * s.p - 1.0).abs()).abs());
        }
    }
    let pass = qad_err <= GAD_QAD_TOL && fixed_err <= GAD_FIXED_TOL && plain > 0;
    verdict(
        9,
        pass,
        &format!("500 samples, max qad error {qad_err:.2e}, max fixed-point error {fixed_err:.2e} over {plain} unsandwiched"),
        start,
    );
    assert!(pass);
}

/// Paired differences `mean I^s(generic, |cad − cad_row| ≤ window) − I^s(row)` for one family.
fn paired_differences(family: &[&str], cad: &[f64], is: &[f64], tag: &str) -> Vec<f64> {
    let generic: Vec<usize> = (0..family.len()).filter(|&i| family[i] == "random" && is[i].is_finite()).collect();
    (0..family.len())
        .filter(|&i| family[i] == tag)
        .filter_map(|i| {
            let near: Vec<f64> =
                generic.iter().filter(|&&g| (cad[g] - cad[i]).abs() <= MATCH_WINDOW).map(|&g| is[g]).collect();
            (!near.is_empty()).then(|| near.iter().sum::<f64>() / near.len() as f64 - is[i])
        })
        .collect()
}

#[test]
fn criterion_10_trit_ridge() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trit.csv");
    let cfg = TritConfig { seed: SEED, ..TritConfig::default() };
    let table = run_trit_figure(&cfg, &mut Estimator::new()).unwrap();
    write_table(&table, &path, OutputFormat::Csv).unwrap();
    let data = read_csv(&path).unwrap();
    let family = data.texts("family").unwrap();
    let cad = data.numbers("cad").unwrap();
    let is = data.numbers("is").unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (tag, required) in [("spiral", true), ("unbiased-absorber", true), ("alt-absorber", false)] {
        let diffs = paired_differences(&family, &cad, &is, tag);
        let n = diffs.len() as f64;
        let mean = diffs.iter().sum::<f64>() / n;
        let var = diffs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        let ok = diffs.len() >= 2 && mean > Z_BAND * se;
        if required {
            pass &= ok;
        }
        parts.push(format!("{tag}: gap {mean:.3} ± {se:.3} (n={})", diffs.len()));
    }
    verdict(10, pass, &parts.join("; "), start);
    assert!(pass);
}
