mod common;

use oqw::derivation::{bath_rate, ModelSpec, RateSign};
use oqw::io::{parse_model_config, serialize_model_config};
use oqw::linalg::{hermitian_eig, psd_sqrt, ComplexMatrix, HERMITIAN_TOL};
use oqw::state::{validate_density, BlockState};
use oqw::walk::kraus_residuals;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

use common::*;

fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigendecomposition_reconstructs(seed in any::<u64>(), n in 1usize..=6) {
        let h = random_hermitian(&mut rng(seed), n);
        let eig = hermitian_eig(&h, HERMITIAN_TOL).unwrap();
        let err = (&eig.reconstruct() - &h).frobenius_norm();
        prop_assert!(err <= 1e-12 * h.frobenius_norm().max(1.0));
        let v = &eig.eigenvectors;
        prop_assert!((&v.gram() - &ComplexMatrix::identity(n)).frobenius_norm() <= 1e-12);
        prop_assert!(eig.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn psd_sqrt_squares_back(seed in any::<u64>(), n in 1usize..=5) {
        let x = random_matrix(&mut rng(seed), n, n);
        let p = &x * &x.adjoint();
        let s = psd_sqrt(&p).unwrap();
        prop_assert!((&(&s * &s) - &p).frobenius_norm() <= 1e-10 * p.frobenius_norm().max(1.0));
        prop_assert!(s.is_hermitian(1e-12));
    }

    #[test]
    fn random_density_matrices_validate(seed in any::<u64>(), n in 1usize..=5) {
        let rho = random_density(&mut rng(seed), n);
        prop_assert!(validate_density(&rho, 1e-10).is_ok());
        prop_assert!(validate_density(&rho.scale_real(1.5), 1e-10).is_err());
    }

    #[test]
    fn kms_relation(gamma0 in 1e-3f64..1e3, beta in 1e-3f64..10.0, omega in 1e-2f64..5.0) {
        let up = bath_rate(gamma0, beta, omega, RateSign::Plus).unwrap();
        let down = bath_rate(gamma0, beta, omega, RateSign::Minus).unwrap();
        let expected = (-beta * omega).exp();
        prop_assert!((up / down - expected).abs() <= 1e-12 * expected);
        prop_assert!(((down - up) - gamma0).abs() <= 1e-12 * down);
    }

    #[test]
    fn random_kraus_maps_are_complete(seed in any::<u64>(), v in 1usize..=4, n in 1usize..=4) {
        let terms = random_kraus_terms(&mut rng(seed), v, n);
        let r = kraus_residuals(v, n, &terms).unwrap();
        prop_assert!(r.iter().all(|x| *x <= 1e-12));
    }

    #[test]
    fn walk_step_is_linear(seed in any::<u64>(), v in 1usize..=3, n in 1usize..=3, t in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let map = random_strict_map(&mut r, v, n);
        let a = random_block_state(&mut r, v, n);
        let b = random_block_state(&mut r, v, n);
        let mixed = BlockState::combine(&[(t, &a), (1.0 - t, &b)]).unwrap();
        let lhs = map.apply_raw(&mixed).unwrap();
        let ra = map.apply_raw(&a).unwrap();
        let rb = map.apply_raw(&b).unwrap();
        for k in 0..v {
            let rhs = &ra.block(k).scale_real(t) + &rb.block(k).scale_real(1.0 - t);
            prop_assert!(lhs.block(k).max_abs_diff(&rhs) <= 1e-13);
        }
    }

    #[test]
    fn strict_steps_preserve_trace(seed in any::<u64>(), v in 1usize..=4, n in 1usize..=4) {
        let mut r = rng(seed);
        let map = random_strict_map(&mut r, v, n);
        let mut s = random_block_state(&mut r, v, n);
        for _ in 0..20 {
            let (next, raw) = map.step(&s).unwrap();
            prop_assert!((raw - 1.0).abs() <= 1e-12);
            s = next;
        }
    }

    #[test]
    fn preset_config_round_trips(beta in 1e-3f64..60.0, gamma0 in 1e-3f64..1e3) {
        let spec = ModelSpec::two_level(beta, gamma0).unwrap();
        prop_assert_eq!(parse_model_config(&serialize_model_config(&spec)).unwrap(), spec);
    }

    #[test]
    fn generic_config_round_trips(seed in any::<u64>(), n in 1usize..=3, beta in 1e-2f64..10.0) {
        let mut r = rng(seed);
        let o1 = random_nondegenerate(&mut r, n, 1e-2);
        let o2 = random_nondegenerate(&mut r, n, 1e-2);
        let a = random_hermitian(&mut r, n);
        let spec = ModelSpec::new(o1, o2, oqw::derivation::Coupling::Hermitian(a), 0.7, beta).unwrap();
        prop_assert_eq!(parse_model_config(&serialize_model_config(&spec)).unwrap(), spec);
    }
}
