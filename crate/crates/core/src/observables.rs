//! Correlation functions, response spectra and reduced density matrices.
//!
//! Every observable is the row-0 value of a closed contour. The literal
//! procedure propagates the stack forward to `t`, inserts operators and
//! propagates back, once per initial run. Time series use [`DualSweep`]
//! instead, which yields the value for every turning point in one sweep.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::dynamics::{grid_index, propagate, ContourPlan, DualSweep, Generator, WaveStack};
use crate::models::{pspin_first_excited, pspin_ground_index, InitialState, Operator};
use crate::{HseomError, Result, C64};

/// Populations drifting by more than this at the equilibration time raise a warning.
pub const DRIFT_TOLERANCE: f64 = 1e-3;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// `min(0.05/Ω, T/2000)`, shrunk so that it divides `T` exactly.
pub fn default_step(omega: f64, horizon: f64) -> Result<f64> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(HseomError::invalid("omega", "must be finite and positive"));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(HseomError::invalid("horizon", "must be finite and non-negative"));
    }
    let cap = 0.05 / omega;
    if horizon == 0.0 {
        return Ok(cap);
    }
    fit_step(horizon, cap.min(horizon / 2000.0))
}

/// Largest step not exceeding `max_dt` that divides `horizon`.
pub fn fit_step(horizon: f64, max_dt: f64) -> Result<f64> {
    if !(max_dt > 0.0 && max_dt.is_finite()) {
        return Err(HseomError::invalid("dt", "must be finite and positive"));
    }
    if horizon <= 0.0 {
        return Ok(max_dt);
    }
    let steps = (horizon / max_dt * (1.0 - 1e-12)).ceil().max(1.0);
    Ok(horizon / steps)
}

/// `10 / (ζ ν)`
pub fn default_equilibration_time(zeta: f64, nu: f64) -> f64 {
    10.0 / (zeta * nu)
}

/// `(initial wave, row-0 functional)` pairs whose contour values sum to the
/// observable: one pair per basis state `n′` with `ψ_{n′} ≠ 0` for a pure
/// state, a single pair `(C|k⟩, ⟨Ck|)` for a localized one.
fn initial_runs(init: &InitialState) -> Vec<(Vec<C64>, Vec<C64>)> {
    match init {
        InitialState::Pure(psi) => psi
            .iter()
            .enumerate()
            .filter(|(_, p)| **p != ZERO)
            .map(|(n, p)| {
                let wave = psi.iter().map(|x| x * p.conj()).collect();
                let mut functional = vec![ZERO; psi.len()];
                functional[n] = ONE;
                (wave, functional)
            })
            .collect(),
        InitialState::Localized { .. } => {
            let u = init.prepared_vector();
            let functional = u.iter().map(|x| x.conj()).collect();
            vec![(u, functional)]
        }
    }
}

fn check_dims(generator: &Generator<'_>, init: &InitialState, ops: &[&Operator]) -> Result<()> {
    let dim = generator.dim();
    for found in std::iter::once(init.dim()).chain(ops.iter().map(|op| op.dim())) {
        if found != dim {
            return Err(HseomError::DimensionMismatch { expected: dim, found });
        }
    }
    Ok(())
}

fn dot(functional: &[C64], v: &[C64]) -> C64 {
    functional.iter().zip(v).map(|(f, x)| f * x).sum()
}

/// `Ψ_AB(t; t′) = ⟨B(t′) A(t)⟩`: `A` inserted at the turning point, `B` at
/// `s = 2t − t′` on the return branch.
pub fn two_body_correlation(
    generator: &Generator<'_>,
    a: &Operator,
    b: &Operator,
    t: f64,
    t_prime: f64,
    init: &InitialState,
    dt: f64,
) -> Result<C64> {
    check_dims(generator, init, &[a, b])?;
    let plan = ContourPlan::correlation(t, t_prime, dt, a.clone(), b.clone())?;
    let rows = generator.space().len();
    let mut total = ZERO;
    for (wave, functional) in initial_runs(init) {
        let run = propagate(generator, &plan, WaveStack::factorized(rows, &wave))?;
        total += dot(&functional, run.final_stack.rwf());
    }
    Ok(total)
}

/// Selected elements `ρ_ij(t)`, each the contour with `A = |j⟩⟨i|` at the
/// turning point and `B = 1`. The forward branch is run once per initial run
/// and its stack shared by the per-element return branches.
pub fn density_elements(
    generator: &Generator<'_>,
    init: &InitialState,
    t: f64,
    dt: f64,
    elements: &[(usize, usize)],
) -> Result<Vec<C64>> {
    check_dims(generator, init, &[])?;
    let dim = generator.dim();
    if let Some(&(i, j)) = elements.iter().find(|(i, j)| *i >= dim || *j >= dim) {
        return Err(HseomError::invalid("element", format!("({i}, {j}) outside dimension {dim}")));
    }
    let forward = ContourPlan::forward(t, dt)?;
    let full = ContourPlan::new(t, dt)?;
    let rows = generator.space().len();
    let mut values = vec![ZERO; elements.len()];
    for (wave, functional) in initial_runs(init) {
        let turning = propagate(generator, &forward, WaveStack::factorized(rows, &wave))?.final_stack;
        let contributions = elements
            .par_iter()
            .map(|&(i, j)| {
                let mut stack = turning.clone();
                stack.apply_operator(&Operator::MatrixUnit { dim, row: j, col: i })?;
                let back = propagate(generator, &full, stack)?;
                Ok(dot(&functional, back.final_stack.rwf()))
            })
            .collect::<Result<Vec<C64>>>()?;
        for (v, c) in values.iter_mut().zip(contributions) {
            *v += c;
        }
    }
    Ok(values)
}

pub fn reduced_density_matrix(generator: &Generator<'_>, init: &InitialState, t: f64, dt: f64) -> Result<DMatrix<C64>> {
    let dim = generator.dim();
    let elements: Vec<_> = (0..dim).flat_map(|i| (0..dim).map(move |j| (i, j))).collect();
    let values = density_elements(generator, init, t, dt, &elements)?;
    Ok(DMatrix::from_fn(dim, dim, |i, j| values[i * dim + j]))
}

fn dual_sweep<'a>(generator: &Generator<'a>, init: &InitialState, dt: f64) -> Result<DualSweep<'a>> {
    check_dims(generator, init, &[])?;
    let u = init.prepared_vector();
    let functional: Vec<C64> = u.iter().map(|x| x.conj()).collect();
    DualSweep::new(*generator, &u, &functional, dt)
}

fn record_steps(total: usize, stride: usize) -> Vec<usize> {
    let mut steps: Vec<usize> = (0..=total).step_by(stride.max(1)).collect();
    if steps.last() != Some(&total) {
        steps.push(total);
    }
    steps
}

/// `ρ(τ)` every `stride` steps on `[0, horizon]`.
pub fn density_trajectory(
    generator: &Generator<'_>,
    init: &InitialState,
    horizon: f64,
    dt: f64,
    stride: usize,
) -> Result<Vec<(f64, DMatrix<C64>)>> {
    let total = grid_index(horizon, dt)?;
    let mut sweep = dual_sweep(generator, init, dt)?;
    let mut out = Vec::new();
    for step in record_steps(total, stride) {
        sweep.advance_to(step)?;
        out.push((step as f64 * dt, sweep.reduced_density()));
    }
    Ok(out)
}

#[derive(Clone, Debug, Default)]
pub struct CorrelationResult {
    pub times: Vec<f64>,
    pub values: Vec<C64>,
    /// Largest population change over the last quarter of the equilibration interval.
    pub drift: Option<f64>,
    pub warnings: Vec<String>,
    pub metadata: Vec<(String, String)>,
}

impl CorrelationResult {
    pub fn imaginary(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.im).collect()
    }
}

/// `Ψ_AB(t0 + t; t0)` on `t ∈ [0, horizon]`, sampled every `stride` steps.
#[allow(clippy::too_many_arguments)]
pub fn equilibrium_correlation(
    generator: &Generator<'_>,
    a: &Operator,
    b: &Operator,
    init: &InitialState,
    t0: f64,
    horizon: f64,
    dt: f64,
    stride: usize,
) -> Result<CorrelationResult> {
    check_dims(generator, init, &[a, b])?;
    let n0 = grid_index(t0, dt)?;
    let total = grid_index(horizon, dt)?;
    let dim = generator.dim();
    let mut sweep = dual_sweep(generator, init, dt)?;

    let states: Vec<usize> = (0..dim).collect();
    sweep.advance_to(n0 - n0 / 4)?;
    let early = sweep.populations(&states);
    sweep.advance_to(n0)?;
    let late = sweep.populations(&states);
    let drift = early.iter().zip(&late).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    let mut warnings = Vec::new();
    if drift > DRIFT_TOLERANCE {
        warnings.push(format!("populations still drifting by {drift:.3e} at t0 = {t0}"));
    }

    sweep.insert_adjoint(b)?;
    let mut result = CorrelationResult { drift: Some(drift), warnings, ..Default::default() };
    for step in record_steps(total, stride) {
        sweep.advance_to(n0 + step)?;
        result.times.push(step as f64 * dt);
        result.values.push(sweep.contract(a)?);
    }
    result.metadata =
        vec![("t0".into(), t0.to_string()), ("dt".into(), dt.to_string()), ("horizon".into(), horizon.to_string())];
    Ok(result)
}

pub fn sigma_x() -> Operator {
    Operator::Dense(DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]))
}

/// `Ψ_{σxσx}(t0 + t; t0)`, whose imaginary part is the first-order response `R(t)`.
pub fn response_function(
    generator: &Generator<'_>,
    init: &InitialState,
    t0: f64,
    horizon: f64,
    dt: f64,
    stride: usize,
) -> Result<CorrelationResult> {
    let x = sigma_x();
    equilibrium_correlation(generator, &x, &x, init, t0, horizon, dt, stride)
}

#[derive(Clone, Debug, Default)]
pub struct Spectrum {
    pub omegas: Vec<f64>,
    pub values: Vec<C64>,
    /// Decay time `T_w` of the window `e^{−t/T_w}`, if one was applied.
    pub window: Option<f64>,
}

/// Trapezoidal `∫_0^T e^{−iωt} R(t) w(t) dt` on a uniform grid.
pub fn half_fourier(times: &[f64], samples: &[f64], omegas: &[f64], window: Option<f64>) -> Result<Spectrum> {
    if times.len() != samples.len() {
        return Err(HseomError::DimensionMismatch { expected: times.len(), found: samples.len() });
    }
    if let Some(tw) = window {
        if !(tw > 0.0) {
            return Err(HseomError::invalid("window", "decay time must be positive"));
        }
    }
    if times.len() < 2 {
        return Ok(Spectrum { omegas: omegas.to_vec(), values: vec![ZERO; omegas.len()], window });
    }
    let h = times[1] - times[0];
    let uniform = times.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs().max(1e-300));
    if !(h > 0.0) || !uniform {
        return Err(HseomError::invalid("times", "grid must be uniform and increasing"));
    }
    let weighted: Vec<f64> =
        times.iter().zip(samples).map(|(t, r)| r * window.map_or(1.0, |tw| (-t / tw).exp())).collect();
    let last = times.len() - 1;
    let values = omegas
        .iter()
        .map(|&w| {
            let sum: C64 = times
                .iter()
                .zip(&weighted)
                .enumerate()
                .map(|(j, (t, r))| {
                    let edge = if j == 0 || j == last { 0.5 } else { 1.0 };
                    C64::from_polar(r * edge, -w * t)
                })
                .sum();
            sum * h
        })
        .collect();
    Ok(Spectrum { omegas: omegas.to_vec(), values, window })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    pub omega: f64,
    pub height: f64,
    /// Height of the highest other local maximum, 0 if there is none.
    pub runner_up: f64,
}

/// Global maximum of `score(R(ω))` over the grid, with the next-highest local maximum.
pub fn dominant_peak(spectrum: &Spectrum, score: impl Fn(C64) -> f64) -> Option<Peak> {
    let y: Vec<f64> = spectrum.values.iter().map(|&v| score(v)).collect();
    let best = (0..y.len()).max_by(|&i, &j| y[i].total_cmp(&y[j]))?;
    let is_local_max = |i: usize| (i == 0 || y[i] >= y[i - 1]) && (i + 1 == y.len() || y[i] >= y[i + 1]);
    let runner_up = (0..y.len())
        .filter(|&i| i != best && is_local_max(i))
        .filter(|&i| {
            let (lo, hi) = (i.min(best), i.max(best));
            y[lo..=hi].iter().any(|&v| v < y[i])
        })
        .map(|i| y[i])
        .fold(0.0, f64::max);
    Some(Peak { omega: spectrum.omegas[best], height: y[best], runner_up })
}

#[derive(Clone, Debug, Default)]
pub struct AnnealingTrajectory {
    pub times: Vec<f64>,
    pub ground: Vec<f64>,
    /// Population of the first excited state with qubit 0 flipped.
    pub excited_representative: Vec<f64>,
    /// Summed population of all `𝒩` degenerate first excited states.
    pub excited_sum: Vec<f64>,
}

/// Ground and first-excited populations of the p-spin target on `[0, t_final]`.
pub fn annealing_populations(
    generator: &Generator<'_>,
    init: &InitialState,
    qubits: usize,
    t_final: f64,
    dt: f64,
    stride: usize,
) -> Result<AnnealingTrajectory> {
    if generator.dim() != 1usize.checked_shl(qubits as u32).unwrap_or(0) {
        return Err(HseomError::DimensionMismatch { expected: 1 << qubits.min(63), found: generator.dim() });
    }
    let total = grid_index(t_final, dt)?;
    let mut states = vec![pspin_ground_index(qubits)];
    states.extend(pspin_first_excited(qubits));
    let mut sweep = dual_sweep(generator, init, dt)?;
    let mut out = AnnealingTrajectory::default();
    for step in record_steps(total, stride) {
        sweep.advance_to(step)?;
        let p = sweep.populations(&states);
        out.times.push(step as f64 * dt);
        out.ground.push(p[0]);
        out.excited_representative.push(p[1]);
        out.excited_sum.push(p[1..].iter().sum());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{compute_coefficients, BathExpansion, BathSpec, BetaHbar};
    use crate::hierarchy::{build_space, HierarchySpace};
    use crate::models::{pspin_annealing, pure_dephasing, spin_boson, uniform_superposition_transform, SystemModel};
    use crate::oracles::{closed_system_propagate, closed_system_propagate_scheduled, dephasing_exact};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    struct Setup {
        space: HierarchySpace,
        bath: BathExpansion,
        model: SystemModel,
    }

    impl Setup {
        fn new(model: SystemModel, bath: BathExpansion, levels: usize) -> Self {
            let space = build_space(bath.modes(), levels).unwrap();
            Self { space, bath, model }
        }

        fn coupled(model: SystemModel, zeta: f64, modes: usize, levels: usize) -> Self {
            let spec = BathSpec::circular(zeta, 6.0, BetaHbar::Finite(3.0), modes).unwrap();
            Self::new(model, compute_coefficients(&spec).unwrap(), levels)
        }

        fn generator(&self) -> Generator<'_> {
            Generator::new(&self.space, &self.bath, &self.model).unwrap()
        }
    }

    fn plus() -> InitialState {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        InitialState::pure(vec![c(s, 0.0), c(0.0, s)]).unwrap()
    }

    #[test]
    fn step_rules() {
        assert_eq!(default_step(6.0, 2.0).unwrap(), 1e-3);
        let dt = default_step(20.0, 3.0).unwrap();
        assert!(dt <= 0.0025 && (3.0 / dt - (3.0 / dt).round()).abs() < 1e-9);
        assert_eq!(default_step(6.0, 0.0).unwrap(), 0.05 / 6.0);
        let dt = fit_step(1.0, 0.3).unwrap();
        assert!((dt - 0.25).abs() < 1e-15);
        assert!((fit_step(1.0, 0.25).unwrap() - 0.25).abs() < 1e-15);
        assert!(default_step(0.0, 1.0).is_err());
        assert!((default_equilibration_time(0.35, 6.0) - 10.0 / 2.1).abs() < 1e-12);
    }

    #[test]
    fn identity_correlation_is_one() {
        let s = Setup::coupled(spin_boson(PI).unwrap(), 0.35, 8, 2);
        let g = s.generator();
        let id = Operator::Identity(2);
        for init in [plus(), InitialState::basis_state(2, 1).unwrap(), InitialState::localized(1, id.clone()).unwrap()]
        {
            let psi = two_body_correlation(&g, &id, &id, 1.0, 0.4, &init, 0.01).unwrap();
            assert!((psi - 1.0).norm() < 1e-6, "{psi}");
        }
    }

    #[test]
    fn closed_sigma_x_correlation() {
        let s = Setup::new(spin_boson(PI).unwrap(), BathExpansion::decoupled(3, 6.0), 1);
        let g = s.generator();
        let x = sigma_x();
        let ground = InitialState::basis_state(2, crate::models::SPIN_BOSON_GROUND).unwrap();
        for (t, tp) in [(1.0, 0.0), (0.7, 0.3), (0.5, 0.5)] {
            let psi = two_body_correlation(&g, &x, &x, t, tp, &ground, 1e-3).unwrap();
            // ⟨g| e^{iHt′} σx e^{−iH(t′−t)} σx e^{−iHt} |g⟩ via the exact propagator.
            let g0 = ground.prepared_vector();
            let v = closed_system_propagate(&s.model, &g0, t).unwrap();
            let v = x.apply(&v).unwrap();
            let v = closed_system_propagate(&s.model, &v, tp - t).unwrap();
            let v = x.apply(&v).unwrap();
            let v = closed_system_propagate(&s.model, &v, -tp).unwrap();
            let exact: C64 = g0.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            assert!((psi - exact).norm() < 1e-8, "{psi} vs {exact}");
            assert!((exact - C64::from_polar(1.0, PI * (t - tp))).norm() < 1e-12);
        }
    }

    #[test]
    fn localized_matches_pure_runs() {
        let s = Setup::coupled(spin_boson(PI).unwrap(), 0.35, 6, 2);
        let g = s.generator();
        let x = sigma_x();
        let z = Operator::Diagonal(vec![c(1.0, 0.0), c(-1.0, 0.0)]);
        let psi = vec![c(0.6, 0.0), c(0.0, 0.8)];
        let pure = InitialState::pure(psi.clone()).unwrap();
        let transform = Operator::Outer { ket: psi, bra: vec![c(0.0, 0.0), c(1.0, 0.0)] };
        let local = InitialState::localized(1, transform).unwrap();
        let a = two_body_correlation(&g, &x, &z, 0.8, 0.3, &pure, 0.01).unwrap();
        let b = two_body_correlation(&g, &x, &z, 0.8, 0.3, &local, 0.01).unwrap();
        assert!((a - b).norm() < 1e-10, "{a} vs {b}");
        assert!(a.norm() > 1e-3);
    }

    #[test]
    fn density_at_zero_time() {
        let s = Setup::coupled(spin_boson(PI).unwrap(), 0.35, 6, 2);
        let g = s.generator();
        let init = plus();
        let rho = reduced_density_matrix(&g, &init, 0.0, 0.01).unwrap();
        assert!((rho - init.density_matrix()).camax() < 1e-10);
    }

    #[test]
    fn density_hermitian_with_unit_trace() {
        let s = Setup::coupled(spin_boson(PI).unwrap(), 0.35, 10, 3);
        let g = s.generator();
        let rho = reduced_density_matrix(&g, &plus(), 2.0, 0.005).unwrap();
        assert!((&rho - rho.adjoint()).camax() < 1e-6);
        assert!((rho.trace() - 1.0).norm() < 1e-6);
        let traj = density_trajectory(&g, &plus(), 2.0, 0.005, 100).unwrap();
        let (t, last) = traj.last().unwrap();
        assert!((t - 2.0).abs() < 1e-12);
        assert!((last - &rho).camax() < 1e-8);
        assert_eq!(traj.len(), 5);
    }

    #[test]
    fn dephasing_matches_exact_coherence() {
        let spec = BathSpec::circular(0.1, 6.0, BetaHbar::Finite(3.0), 16).unwrap();
        let s = Setup::new(pure_dephasing(PI).unwrap(), compute_coefficients(&spec).unwrap(), 4);
        let g = s.generator();
        let traj = density_trajectory(&g, &plus(), 1.0, 2e-3, 250).unwrap();
        for (t, rho) in traj {
            // ρ_10 with ket index 1 (v = +½), bra index 0 (v = −½).
            let rho0 = plus().density_matrix()[(1, 0)];
            let expected = rho0 * C64::from_polar(1.0, PI * t) * dephasing_exact(&spec, 1.0, t).unwrap();
            assert!((rho[(1, 0)] - expected).norm() < 1e-3 * expected.norm(), "t={t}: {} vs {expected}", rho[(1, 0)]);
        }
    }

    #[test]
    fn response_in_closed_limit() {
        let s = Setup::new(spin_boson(PI).unwrap(), BathExpansion::decoupled(3, 6.0), 1);
        let g = s.generator();
        let init = InitialState::localized(crate::models::SPIN_BOSON_GROUND, Operator::Identity(2)).unwrap();
        let r = response_function(&g, &init, 1.0, 2.0, 1e-3, 100).unwrap();
        assert!(r.drift.unwrap() < 1e-12 && r.warnings.is_empty());
        for (t, v) in r.times.iter().zip(&r.values) {
            assert!((v - C64::from_polar(1.0, PI * t)).norm() < 1e-9);
        }
        let literal = two_body_correlation(&g, &sigma_x(), &sigma_x(), 2.5, 1.0, &init, 1e-3).unwrap();
        assert!((literal - r.values[15]).norm() < 1e-9);
    }

    #[test]
    fn response_matches_literal_contour_with_bath() {
        let s = Setup::coupled(spin_boson(PI).unwrap(), 0.35, 8, 2);
        let g = s.generator();
        let init = InitialState::localized(1, Operator::Identity(2)).unwrap();
        let r = response_function(&g, &init, 0.5, 0.5, 0.01, 10).unwrap();
        for (t, v) in r.times.iter().zip(&r.values) {
            let literal = two_body_correlation(&g, &sigma_x(), &sigma_x(), 0.5 + t, 0.5, &init, 0.01).unwrap();
            assert!((literal - v).norm() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn half_fourier_examples() {
        let times: Vec<f64> = (0..=40_000).map(|j| j as f64 * 1e-3).collect();
        let decay: Vec<f64> = times.iter().map(|t| (-t).exp()).collect();
        let s = half_fourier(&times, &decay, &[0.0], None).unwrap();
        assert!((s.values[0] - 1.0).norm() < 1e-6);

        let zero = half_fourier(&times, &vec![0.0; times.len()], &[0.0, 1.0, 2.0], None).unwrap();
        assert!(zero.values.iter().all(|v| *v == ZERO));

        let w0 = 3.0;
        let damped: Vec<f64> = times.iter().map(|t| (w0 * t).sin() * (-0.05 * t).exp()).collect();
        let omegas: Vec<f64> = (0..=600).map(|j| j as f64 * 0.01).collect();
        let spectrum = half_fourier(&times, &damped, &omegas, None).unwrap();
        let peak = dominant_peak(&spectrum, |v| v.im.abs()).unwrap();
        assert!((peak.omega - w0).abs() <= 0.011, "{peak:?}");

        let windowed = half_fourier(&times, &decay, &[0.0], Some(1.0)).unwrap();
        assert!((windowed.values[0] - 0.5).norm() < 1e-6);
        assert_eq!(windowed.window, Some(1.0));
        assert!(half_fourier(&[0.0, 1.0, 3.0], &[1.0; 3], &[0.0], None).is_err());
    }

    #[test]
    fn dominant_peak_runner_up() {
        let spectrum = Spectrum {
            omegas: (0..7).map(f64::from).collect(),
            values: [0.0, 1.0, 0.2, 0.1, 3.0, 2.5, 0.0].iter().map(|&y| c(y, 0.0)).collect(),
            window: None,
        };
        let p = dominant_peak(&spectrum, |v| v.re).unwrap();
        assert_eq!((p.omega, p.height, p.runner_up), (4.0, 3.0, 1.0));
    }

    #[test]
    fn annealing_starts_uniform() {
        let model = pspin_annealing(2, 1.0, 3, 1.0).unwrap();
        let s = Setup::coupled(model, 0.1, 5, 2);
        let g = s.generator();
        let init = uniform_superposition_transform(2).unwrap();
        let traj = annealing_populations(&g, &init, 2, 1.0, 0.01, 10).unwrap();
        assert!((traj.ground[0] - 0.25).abs() < 1e-12);
        assert!((traj.excited_sum[0] - 0.5).abs() < 1e-12);
        assert_eq!(traj.times.len(), 11);
        let rho = reduced_density_matrix(&g, &init, 1.0, 0.01).unwrap();
        assert!((rho[(3, 3)].re - traj.ground[10]).abs() < 1e-8);
        assert!((rho[(2, 2)].re - traj.excited_representative[10]).abs() < 1e-8);
    }

    #[test]
    fn slow_closed_annealing_is_adiabatic() {
        let t_final = 40.0;
        let model = pspin_annealing(2, 1.0, 3, t_final).unwrap();
        let s = Setup::new(model, BathExpansion::decoupled(2, 3.0), 0);
        let g = s.generator();
        let init = uniform_superposition_transform(2).unwrap();
        let traj = annealing_populations(&g, &init, 2, t_final, 0.01, 1000).unwrap();
        let exact = closed_system_propagate_scheduled(&s.model, &init.prepared_vector(), t_final, 4000).unwrap();
        let p_exact = exact[3].norm_sqr();
        let p = *traj.ground.last().unwrap();
        assert!((p - p_exact).abs() < 1e-4, "{p} vs {p_exact}");
        assert!(p > 0.95, "{p}");
    }
}
