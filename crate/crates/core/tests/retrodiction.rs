use proptest::prelude::*;
use retrodict_core::classical::{self, ProbVector, StochasticMatrix};
use retrodict_core::linalg::{self, CMat, C64};
use retrodict_core::quantum::{self, DensityOperator, KrausChannel};
use retrodict_core::samplers::{self, Stream};
use retrodict_core::Error;

fn interior(d: usize, rng: &mut Stream) -> ProbVector {
    loop {
        let p = samplers::sample_simplex(d, rng);
        if p.min() > 1e-4 {
            return p;
        }
    }
}

fn full_rank(d: usize, rng: &mut Stream) -> DensityOperator {
    loop {
        let s = samplers::sample_hs_state(d, rng);
        if s.min_eigenvalue() > 1e-4 {
            return s;
        }
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bayes_inverse_is_stochastic_and_recovers_prior(seed in any::<u64>(), d in 2usize..6) {
        let mut rng = samplers::stream(seed, 0);
        let phi = samplers::sample_stochastic(d, &mut rng);
        let g = interior(d, &mut rng);
        let inv = classical::bayes_inverse(&phi, &g).unwrap();
        for a in 0..d {
            let s: f64 = inv.column(a).iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
        let back = classical::apply(&inv, &classical::apply(&phi, &g).unwrap()).unwrap();
        prop_assert!(max_diff(back.entries(), g.entries()) < 1e-12);
    }

    #[test]
    fn bayes_inverse_composes(seed in any::<u64>(), d in 2usize..5) {
        let mut rng = samplers::stream(seed, 1);
        let phi = samplers::sample_stochastic(d, &mut rng);
        let psi = samplers::sample_stochastic(d, &mut rng);
        let g = interior(d, &mut rng);
        let whole = classical::bayes_inverse(&classical::compose(&psi, &phi).unwrap(), &g).unwrap();
        let push = classical::apply(&phi, &g).unwrap();
        let parts = classical::compose(
            &classical::bayes_inverse(&phi, &g).unwrap(),
            &classical::bayes_inverse(&psi, &push).unwrap(),
        ).unwrap();
        prop_assert!(linalg::max_abs(&(whole.matrix() - parts.matrix())) < 1e-12);
    }

    #[test]
    fn bijection_inverse_ignores_prior(seed in any::<u64>(), d in 2usize..6) {
        let mut rng = samplers::stream(seed, 2);
        let perm = samplers::random_permutation(d, &mut rng);
        let phi = StochasticMatrix::permutation(&perm).unwrap();
        let a = classical::bayes_inverse(&phi, &interior(d, &mut rng)).unwrap();
        let b = classical::bayes_inverse(&phi, &interior(d, &mut rng)).unwrap();
        prop_assert!(linalg::max_abs(&(a.matrix() - b.matrix())) < 1e-15);
        prop_assert!(linalg::max_abs(&(a.matrix() - phi.matrix().transpose())) < 1e-15);
    }

    #[test]
    fn erasure_retrodicts_to_prior(seed in any::<u64>(), d in 2usize..6) {
        let mut rng = samplers::stream(seed, 3);
        let tau = interior(d, &mut rng);
        let g = interior(d, &mut rng);
        let inv = classical::bayes_inverse(&StochasticMatrix::erasure(&tau), &g).unwrap();
        for a in 0..d {
            prop_assert!(max_diff(&inv.column(a), g.entries()) < 1e-14);
        }
    }

    #[test]
    fn petz_recovers_prior_and_composes(seed in any::<u64>()) {
        let mut rng = samplers::stream(seed, 4);
        let f = samplers::sample_kraus_channel(2, &mut rng);
        let g = samplers::sample_kraus_channel(2, &mut rng);
        let gamma = full_rank(2, &mut rng);
        let fg = quantum::apply_channel(&f, &gamma).unwrap();
        let petz = quantum::petz_inverse(&f, &gamma).unwrap();
        prop_assert!(petz.completeness_deviation() < 1e-8);
        let back = quantum::apply_channel(&petz, &fg).unwrap();
        prop_assert!(linalg::max_abs_c(&(back.matrix() - gamma.matrix())) < 1e-9);

        let whole = quantum::petz_inverse(&quantum::compose_channels(&g, &f).unwrap(), &gamma).unwrap();
        let parts = quantum::compose_channels(&petz, &quantum::petz_inverse(&g, &fg).unwrap()).unwrap();
        let probe = samplers::sample_hs_state(2, &mut rng);
        let (x, y) = (quantum::apply_channel(&whole, &probe).unwrap(), quantum::apply_channel(&parts, &probe).unwrap());
        prop_assert!(linalg::max_abs_c(&(x.matrix() - y.matrix())) < 1e-8);
    }

    #[test]
    fn unitary_petz_ignores_prior(seed in any::<u64>(), d in 2usize..4) {
        let mut rng = samplers::stream(seed, 5);
        let u = samplers::haar_unitary(d, &mut rng);
        let chan = KrausChannel::unitary(u.clone()).unwrap();
        let a = quantum::petz_inverse(&chan, &full_rank(d, &mut rng)).unwrap();
        let b = quantum::petz_inverse(&chan, &full_rank(d, &mut rng)).unwrap();
        let probe = samplers::sample_hs_state(d, &mut rng);
        let (x, y) = (quantum::apply_channel(&a, &probe).unwrap(), quantum::apply_channel(&b, &probe).unwrap());
        prop_assert!(linalg::max_abs_c(&(x.matrix() - y.matrix())) < 1e-9);
        let expected = u.adjoint() * probe.matrix() * &u;
        prop_assert!(linalg::max_abs_c(&(x.matrix() - expected)) < 1e-9);
    }

    #[test]
    fn adjoint_is_dual(seed in any::<u64>(), d in 2usize..4) {
        let mut rng = samplers::stream(seed, 6);
        let f = samplers::sample_kraus_channel(d, &mut rng);
        let rho = samplers::sample_hs_state(d, &mut rng);
        let x = samplers::ginibre(d, &mut rng);
        let x = &x + x.adjoint();
        let lhs = linalg::trace(&(quantum::apply_channel(&f, &rho).unwrap().matrix() * &x));
        let rhs = linalg::trace(&(rho.matrix() * quantum::adjoint_apply(&f, &x).unwrap()));
        prop_assert!((lhs - rhs).norm_sqr().sqrt() < 1e-10);
        let id = quantum::adjoint_apply(&f, &CMat::identity(d, d)).unwrap();
        prop_assert!(linalg::max_abs_c(&(id - CMat::identity(d, d))) < 1e-10);
    }

    #[test]
    fn spiral_inverse_has_five_fixed_entries(p in 0.05f64..0.9, frac in 0.0f64..1.0, seed in any::<u64>()) {
        let q = frac * (1.0 - p);
        let xi = samplers::construct_spiral(p, q, &[0, 1, 2]).unwrap();
        let mut rng = samplers::stream(seed, 7);
        let a = classical::bayes_inverse(&xi, &interior(3, &mut rng)).unwrap();
        let b = classical::bayes_inverse(&xi, &interior(3, &mut rng)).unwrap();
        let fixed = (0..3).flat_map(|i| (0..3).map(move |j| (i, j)))
            .filter(|&(i, j)| (a.entry(i, j) - b.entry(i, j)).abs() < 1e-12)
            .count();
        prop_assert_eq!(fixed, 5);
    }
}

#[test]
fn z_channel_closed_form() {
    let z = StochasticMatrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 0.5]]).unwrap();
    let inv = classical::bayes_inverse(&z, &ProbVector::uniform(2)).unwrap();
    assert!(max_diff(&inv.column(0), &[2.0 / 3.0, 1.0 / 3.0]) < 1e-12);
    assert!(max_diff(&inv.column(1), &[0.0, 1.0]) < 1e-12);

    let damping = quantum::dilation_to_kraus(&samplers::gad_dilation(0.5, 1.0)).unwrap();
    let petz = quantum::petz_inverse(&damping, &DensityOperator::maximally_mixed(2)).unwrap();
    for (k, col) in [[2.0 / 3.0, 1.0 / 3.0], [0.0, 1.0]].iter().enumerate() {
        let out = quantum::apply_channel(&petz, &DensityOperator::basis_state(2, k)).unwrap();
        let diag = [out.matrix()[(0, 0)].re, out.matrix()[(1, 1)].re];
        assert!(max_diff(&diag, col) < 1e-10, "column {k}: {diag:?}");
    }
}

#[test]
fn singular_pushforward_is_reported() {
    let to_zero = StochasticMatrix::erasure(&ProbVector::pure(2, 0));
    let err = classical::bayes_inverse(&to_zero, &ProbVector::uniform(2)).unwrap_err();
    assert!(matches!(err, Error::SingularPushforward { .. }));
    let pure = DensityOperator::pure(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
    let err = quantum::petz_inverse(&KrausChannel::erasure(&pure), &DensityOperator::maximally_mixed(2)).unwrap_err();
    assert!(matches!(err, Error::SingularPushforward { .. }));
}
