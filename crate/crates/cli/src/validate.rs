//! Engine-versus-oracle residuals run by the `validate` subcommand.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DMatrix;

use hseom::bath::{compute_coefficients, BathExpansion, BathSpec, BetaHbar};
use hseom::dynamics::{propagate, Branch, ContourPlan, Generator, WaveStack};
use hseom::hierarchy::build_space;
use hseom::models::{pure_dephasing, spin_boson, InitialState, Operator, SystemModel};
use hseom::observables::{density_trajectory, reduced_density_matrix, two_body_correlation};
use hseom::oracles::{assemble_generator, closed_system_propagate, dephasing_exact};
use hseom::{Result, C64};

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
}

impl Check {
    fn new(name: impl Into<String>, residual: f64, threshold: f64) -> Self {
        Self { name: name.into(), residual, threshold }
    }

    pub fn passed(&self) -> bool {
        self.residual <= self.threshold
    }
}

/// Deterministic pseudo-random numbers in `[−½, ½)`.
struct Lcg(u64);

impl Lcg {
    fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }

    fn complex(&mut self) -> C64 {
        C64::new(self.next(), self.next())
    }

    fn vec(&mut self, n: usize) -> Vec<C64> {
        (0..n).map(|_| self.complex()).collect()
    }

    fn hermitian(&mut self, d: usize) -> DMatrix<C64> {
        let a = DMatrix::from_fn(d, d, |_, _| self.complex());
        &a + a.adjoint()
    }
}

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn plus() -> Vec<C64> {
    vec![C64::new(FRAC_1_SQRT_2, 0.0); 2]
}

/// Hierarchy right-hand side against the independently assembled generator
/// on three random instances, both branches, three random stacks each.
pub fn generator_checks() -> Result<Vec<Check>> {
    let mut rng = Lcg(2024);
    let mut checks = Vec::new();
    for (dim, modes, levels) in [(2, 3, 2), (2, 5, 1), (4, 2, 2)] {
        let model = SystemModel::from_dense(rng.hermitian(dim), rng.hermitian(dim))?;
        let bath = BathExpansion::from_coefficients(2.7, rng.vec(modes));
        let space = build_space(modes, levels)?;
        let generator = Generator::new(&space, &bath, &model)?;
        let mut worst = 0.0_f64;
        for branch in [Branch::C1, Branch::C2] {
            let oracle = assemble_generator(&space, &bath, &model, 0.0, branch)?;
            for _ in 0..3 {
                let x = rng.vec(generator.len());
                let mut out = vec![C64::new(0.0, 0.0); generator.len()];
                generator.apply(0.0, branch.sign(), &x, &mut out);
                worst = worst.max(max_diff(&out, &oracle.apply(&x)));
            }
        }
        checks.push(Check::new(format!("generator dim={dim} K={modes} N={levels}"), worst, 1e-13));
    }
    Ok(checks)
}

/// Decoupled runs against exact two-level unitary dynamics at `dt = 1e−3`.
pub fn closed_system_checks() -> Result<Vec<Check>> {
    let model = spin_boson(PI)?;
    let bath = BathExpansion::decoupled(3, 6.0);
    let space = build_space(3, 2)?;
    let generator = Generator::new(&space, &bath, &model)?;
    let forward =
        propagate(&generator, &ContourPlan::forward(1.0, 1e-3)?, WaveStack::factorized(space.len(), &plus()))?;
    let exact = closed_system_propagate(&model, &plus(), 1.0)?;
    let id = Operator::Identity(2);
    let plan = ContourPlan::correlation(1.0, 0.3, 1e-3, id.clone(), id)?;
    let contour = propagate(&generator, &plan, WaveStack::factorized(space.len(), &plus()))?;
    Ok(vec![
        Check::new("closed forward unitary", max_diff(forward.final_stack.rwf(), &exact), 1e-9),
        Check::new("closed contour identity", max_diff(contour.final_stack.rwf(), &plus()), 1e-9),
    ])
}

/// Commuting coupling `V = σz/2` against the double-quadrature coherence,
/// maximum relative deviation of `ρ_10` over `[0, horizon]`.
pub fn dephasing_residual(zeta: f64, modes: usize, levels: usize, horizon: f64, dt: f64) -> Result<f64> {
    let spec = BathSpec::circular(zeta, 6.0, BetaHbar::Finite(3.0), modes)?;
    let bath = compute_coefficients(&spec)?;
    let space = build_space(modes, levels)?;
    let model = pure_dephasing(PI)?;
    let generator = Generator::new(&space, &bath, &model)?;
    let init = InitialState::pure(plus())?;
    let rho0 = init.density_matrix()[(1, 0)];
    let stride = ((horizon / dt / 20.0).round() as usize).max(1);
    let mut worst = 0.0_f64;
    for (t, rho) in density_trajectory(&generator, &init, horizon, dt, stride)? {
        let expected = rho0 * C64::from_polar(1.0, PI * t) * dephasing_exact(&spec, 1.0, t)?;
        worst = worst.max((rho[(1, 0)] - expected).norm() / expected.norm());
    }
    Ok(worst)
}

/// Trace preservation, one-sweep versus per-element density matrices, and hermiticity.
pub fn observable_checks() -> Result<Vec<Check>> {
    let spec = BathSpec::circular(0.35, 6.0, BetaHbar::Finite(3.0), 8)?;
    let bath = compute_coefficients(&spec)?;
    let space = build_space(8, 2)?;
    let model = spin_boson(PI)?;
    let generator = Generator::new(&space, &bath, &model)?;
    let init = InitialState::pure(plus())?;
    let id = Operator::Identity(2);
    let trace = two_body_correlation(&generator, &id, &id, 1.0, 0.5, &init, 0.01)?;
    let literal = reduced_density_matrix(&generator, &init, 1.0, 0.01)?;
    let swept = density_trajectory(&generator, &init, 1.0, 0.01, 100)?;
    let (_, last) = swept.last().expect("at least one record");
    let hermiticity = (&literal - literal.adjoint()).iter().fold(0.0_f64, |m, x| m.max(x.norm()));
    Ok(vec![
        Check::new("trace preservation", (trace - 1.0).norm(), 1e-6),
        Check::new(
            "density sweep vs per-element contours",
            (&literal - last).iter().fold(0.0, |m, x| m.max(x.norm())),
            1e-8,
        ),
        Check::new("density hermiticity", hermiticity, 1e-6),
        Check::new("density trace", (literal.trace() - 1.0).norm(), 1e-6),
    ])
}

pub fn validation_suite() -> Result<Vec<Check>> {
    let mut checks = generator_checks()?;
    checks.extend(closed_system_checks()?);
    checks.push(Check::new("pure dephasing coherence", dephasing_residual(0.1, 16, 4, 1.0, 2e-3)?, 1e-3));
    checks.extend(observable_checks()?);
    Ok(checks)
}
