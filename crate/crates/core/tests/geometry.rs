use proptest::prelude::*;
use retrodict_core::classical::{self, ChannelClass, RelaxationTime, StochasticMatrix};
use retrodict_core::linalg::{self, RMat};
use retrodict_core::oracle;
use retrodict_core::quantum::{self, KrausChannel};
use retrodict_core::samplers;

fn cfd_bounds(d: usize, n: usize) -> (f64, f64) {
    let (d, n) = (d as f64, n as f64);
    (((d - n) / ((d - 1.0) * n)).sqrt(), ((d - n) * (d + 1.0 - n) / ((d - 1.0) * d)).sqrt())
}

fn random_absorber(seed: u64, d: usize, n: usize) -> StochasticMatrix {
    let mut rng = samplers::stream(seed, 0);
    let m = d - n;
    let mut transfer = RMat::zeros(n, m);
    let mut transient = RMat::zeros(m, m);
    for j in 0..m {
        let col = samplers::sample_simplex(d, &mut rng);
        for i in 0..d {
            if i < n {
                transfer[(i, j)] = col.entries()[i];
            } else {
                transient[(i - n, j)] = col.entries()[i];
            }
        }
    }
    let outer = samplers::random_permutation(d, &mut rng);
    let inner = samplers::random_permutation(n, &mut rng);
    samplers::construct_absorbing(d, n, &transfer, &transient, &outer, &inner).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cad_is_multiplicative(seed in any::<u64>(), d in 2usize..6) {
        let mut rng = samplers::stream(seed, 0);
        let phi = samplers::sample_stochastic(d, &mut rng);
        let psi = samplers::sample_stochastic(d, &mut rng);
        let both = classical::abs_determinant(&classical::compose(&psi, &phi).unwrap());
        prop_assert!((both - classical::abs_determinant(&phi) * classical::abs_determinant(&psi)).abs() < 1e-12);
        prop_assert!(classical::abs_determinant(&phi) <= 1.0 + 1e-12);
    }

    #[test]
    fn qad_is_multiplicative(seed in any::<u64>(), d in 2usize..4) {
        let mut rng = samplers::stream(seed, 1);
        let f = samplers::sample_kraus_channel(d, &mut rng);
        let g = samplers::sample_kraus_channel(d, &mut rng);
        let both = quantum::qad(&quantum::compose_channels(&g, &f).unwrap());
        prop_assert!((both - quantum::qad(&f) * quantum::qad(&g)).abs() < 1e-10);
        let u = KrausChannel::unitary(samplers::haar_unitary(d, &mut rng)).unwrap();
        prop_assert!((quantum::qad(&u) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn displacements_lie_in_unit_interval(seed in any::<u64>(), d in 2usize..6) {
        let mut rng = samplers::stream(seed, 2);
        let c = classical::cfd(&samplers::sample_stochastic(d, &mut rng)).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-9).contains(&c));
        let q = quantum::qfd(&samplers::sample_kraus_channel(2, &mut rng)).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-9).contains(&q));
    }

    #[test]
    fn absorbers_respect_cfd_bounds(seed in any::<u64>(), d in 2usize..6, n_raw in 0usize..4) {
        let n = 1 + n_raw % (d - 1);
        let map = random_absorber(seed, d, n);
        let c = classical::cfd(&map).unwrap();
        let (lo, hi) = cfd_bounds(d, n);
        prop_assert!(c >= lo - 1e-9 && c <= hi + 1e-9, "d={} n={} cfd={} bounds=({}, {})", d, n, c, lo, hi);
        prop_assert_eq!(classical::classify(&map).unwrap(), ChannelClass::Absorbing(n));
    }

    #[test]
    fn alternating_absorbers_sit_at_half(p in 0.0f64..1.0, frac in 0.01f64..1.0, seed in any::<u64>()) {
        let q = frac * (1.0 - p);
        let mut rng = samplers::stream(seed, 3);
        let outer = samplers::random_permutation(3, &mut rng);
        let transfer = RMat::from_column_slice(2, 1, &[p, q]);
        let transient = RMat::from_element(1, 1, 1.0 - p - q);
        let map = samplers::construct_absorbing(3, 2, &transfer, &transient, &outer, &[1, 0]).unwrap();
        prop_assert!((classical::cfd(&map).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn spectral_norm_matches_jacobi_oracle(seed in any::<u64>(), d in 2usize..6) {
        let mut rng = samplers::stream(seed, 4);
        let a = samplers::sample_stochastic(d, &mut rng);
        let b = samplers::sample_stochastic(d, &mut rng);
        let fast = classical::spectral_norm_distance(&a, &b).unwrap();
        let slow = oracle::svd_reference(&(a.matrix() - b.matrix()))[0];
        prop_assert!((fast - slow).abs() < 1e-10);
        let sv = linalg::singular_values(a.matrix());
        let sv_ref = oracle::svd_reference(a.matrix());
        for (x, y) in sv.iter().zip(&sv_ref) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn trace_norm_matches_oracle(seed in any::<u64>(), d in 2usize..5) {
        let mut rng = samplers::stream(seed, 5);
        let x = samplers::ginibre(d, &mut rng);
        let h = &x + x.adjoint();
        prop_assert!((linalg::trace_norm(&h) - oracle::trace_norm_reference(&h)).abs() < 1e-9);
    }

    #[test]
    fn skew_is_a_ratio_of_angles(seed in any::<u64>()) {
        let mut rng = samplers::stream(seed, 6);
        let phi = samplers::sample_stochastic(3, &mut rng);
        if let Some(s) = classical::skew(&phi).unwrap() {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&s));
        }
    }
}

#[test]
fn spiral_is_pseudo_absorbing() {
    let xi = samplers::construct_spiral(0.3, 0.3, &[2, 0, 1]).unwrap();
    assert_eq!(classical::classify(&xi).unwrap(), ChannelClass::PseudoAbsorbing);
    assert!((classical::abs_determinant(&xi) - 0.3).abs() < 1e-12);
}

#[test]
fn relaxation_time_edges() {
    assert_eq!(classical::relaxation_time_from_det(0.0, 3.0), RelaxationTime::Steps(1));
    assert_eq!(classical::relaxation_time_from_det(1.0, 3.0), RelaxationTime::Infinite);
    assert_eq!(classical::relaxation_time_from_det(0.1, 3.0), RelaxationTime::Steps(3));
    assert_eq!(classical::relaxation_time(&StochasticMatrix::identity(3), 2.0), RelaxationTime::Infinite);
}

#[test]
fn erasure_cfd_measures_target_offset() {
    let tau = retrodict_core::classical::ProbVector::pure(3, 0);
    assert!((classical::cfd(&StochasticMatrix::erasure(&tau)).unwrap() - 1.0).abs() < 1e-12);
    let u = retrodict_core::classical::ProbVector::uniform(3);
    assert!(classical::cfd(&StochasticMatrix::erasure(&u)).unwrap().abs() < 1e-12);
}
