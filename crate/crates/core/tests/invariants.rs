use std::f64::consts::PI;

use nalgebra::DMatrix;
use proptest::prelude::*;

use hseom::bath::{compute_coefficients, BathSpec, BetaHbar};
use hseom::dynamics::Generator;
use hseom::hierarchy::build_space;
use hseom::models::{spin_boson, InitialState, Operator, SPIN_BOSON_GROUND};
use hseom::observables::{density_trajectory, reduced_density_matrix, two_body_correlation};
use hseom::C64;

fn rotation(theta: f64, phi: f64) -> DMatrix<C64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(
        2,
        2,
        &[C64::new(c, 0.0), -C64::from_polar(s, -phi), C64::from_polar(s, phi), C64::new(c, 0.0)],
    )
}

fn state(theta: f64, phi: f64) -> Vec<C64> {
    let (s, c) = theta.sin_cos();
    vec![C64::new(c, 0.0), C64::from_polar(s, phi)]
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |a, x| a.max(x.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn identity_correlation_preserves_trace(
        zeta in 0.05f64..0.6, nu in 2.0f64..8.0, beta in prop_oneof![Just(None), (0.5f64..5.0).prop_map(Some)],
        theta in 0.0f64..PI, phi in 0.0f64..2.0 * PI, steps in 10usize..80,
    ) {
        let beta = beta.map_or(BetaHbar::Infinite, BetaHbar::Finite);
        let spec = BathSpec::circular(zeta, nu, beta, 6).unwrap();
        let bath = compute_coefficients(&spec).unwrap();
        let space = build_space(6, 2).unwrap();
        let model = spin_boson(PI).unwrap();
        let generator = Generator::new(&space, &bath, &model).unwrap();
        let init = InitialState::pure(state(theta, phi)).unwrap();
        let id = Operator::Identity(2);
        let trace = two_body_correlation(&generator, &id, &id, 0.01 * steps as f64, 0.005 * steps as f64, &init, 0.005).unwrap();
        prop_assert!((trace - 1.0).norm() < 1e-6, "{trace}");
    }

    #[test]
    fn density_matrix_is_hermitian_with_unit_trace(
        zeta in 0.05f64..0.6, theta in 0.0f64..PI, phi in 0.0f64..2.0 * PI,
    ) {
        let spec = BathSpec::circular(zeta, 6.0, BetaHbar::Finite(3.0), 6).unwrap();
        let bath = compute_coefficients(&spec).unwrap();
        let space = build_space(6, 2).unwrap();
        let model = spin_boson(PI).unwrap();
        let generator = Generator::new(&space, &bath, &model).unwrap();
        let init = InitialState::pure(state(theta, phi)).unwrap();
        let rho = reduced_density_matrix(&generator, &init, 0.6, 0.005).unwrap();
        prop_assert!(max_abs(&(&rho - rho.adjoint())) < 1e-6);
        prop_assert!((rho.trace() - 1.0).norm() < 1e-6);
    }

    #[test]
    fn localized_state_equals_prepared_pure_state(theta in 0.0f64..PI, phi in 0.0f64..2.0 * PI) {
        let spec = BathSpec::circular(0.35, 6.0, BetaHbar::Finite(3.0), 5).unwrap();
        let bath = compute_coefficients(&spec).unwrap();
        let space = build_space(5, 2).unwrap();
        let model = spin_boson(PI).unwrap();
        let generator = Generator::new(&space, &bath, &model).unwrap();
        let transform = rotation(theta, phi);
        let localized = InitialState::localized(SPIN_BOSON_GROUND, Operator::dense(transform.clone()).unwrap()).unwrap();
        let prepared = transform.column(SPIN_BOSON_GROUND).iter().copied().collect();
        let pure = InitialState::pure(prepared).unwrap();
        let a = density_trajectory(&generator, &localized, 0.5, 0.005, 50).unwrap();
        let b = density_trajectory(&generator, &pure, 0.5, 0.005, 50).unwrap();
        for ((_, x), (_, y)) in a.iter().zip(&b) {
            prop_assert!(max_abs(&(x - y)) < 1e-10);
        }
    }

    #[test]
    fn imaginary_bath_part_ignores_temperature(zeta in 0.01f64..1.0, nu in 1.0f64..10.0) {
        let odd = |beta| {
            let spec = BathSpec::circular(zeta, nu, beta, 12).unwrap();
            let c = compute_coefficients(&spec).unwrap().c;
            c.into_iter().skip(1).step_by(2).collect::<Vec<_>>()
        };
        let reference = odd(BetaHbar::Finite(1.0));
        for beta in [BetaHbar::Finite(3.0), BetaHbar::Finite(30.0), BetaHbar::Infinite] {
            for (x, y) in odd(beta).iter().zip(&reference) {
                prop_assert!((x - y).norm() <= 1e-10);
            }
        }
    }
}

#[test]
fn ground_state_relaxes_toward_lower_energy() {
    let spec = BathSpec::circular(0.35, 6.0, BetaHbar::Finite(3.0), 12).unwrap();
    let bath = compute_coefficients(&spec).unwrap();
    let space = build_space(12, 3).unwrap();
    let model = spin_boson(PI).unwrap();
    let generator = Generator::new(&space, &bath, &model).unwrap();
    let init = InitialState::basis_state(2, 1 - SPIN_BOSON_GROUND).unwrap();
    let traj = density_trajectory(&generator, &init, 2.0, 0.002, 100).unwrap();
    let ground = |rho: &DMatrix<C64>| rho[(SPIN_BOSON_GROUND, SPIN_BOSON_GROUND)].re;
    assert_eq!(ground(&traj[0].1), 0.0);
    assert!(ground(&traj.last().unwrap().1) > 0.05);
}
