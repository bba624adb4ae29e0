//! Brute-force references for validating the hierarchy engine: exact
//! closed-system propagation, an independently assembled hierarchy generator,
//! and the exact pure-dephasing solution.
//!
//! The generator assembly below builds its own index map and neighbor
//! relations from the raw multi-indices; it shares nothing with the sweep in
//! [`crate::dynamics`] beyond the data types.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::bath::quadrature::{integrate, QuadratureConfig};
use crate::bath::{alpha_quadrature_with, BathExpansion, BathSpec};
use crate::dynamics::Branch;
use crate::hierarchy::HierarchySpace;
use crate::models::{Schedule, SystemModel};
use crate::{HseomError, Result, C64, HBAR, I};

/// Largest system the dense closed-system oracles accept.
pub const MAX_DENSE_DIM: usize = 64;
/// Largest flattened stack `assemble_generator` accepts.
pub const MAX_ASSEMBLED_SIZE: usize = 4096;

fn hermitian_eigen(h: &DMatrix<C64>) -> Result<(DVector<f64>, DMatrix<C64>)> {
    let d = h.nrows();
    let mut deviation = 0.0_f64;
    for i in 0..d {
        for j in 0..d {
            deviation = deviation.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    if deviation > 1e-10 {
        return Err(HseomError::NotHermitian { deviation });
    }
    let eig = h.clone().symmetric_eigen();
    Ok((eig.eigenvalues, eig.eigenvectors))
}

/// `exp(−iHt/ħ) ψ` by eigendecomposition.
fn evolve_dense(h: &DMatrix<C64>, psi: &DVector<C64>, t: f64) -> Result<DVector<C64>> {
    let (values, vectors) = hermitian_eigen(h)?;
    let mut coeffs = vectors.adjoint() * psi;
    for (c, e) in coeffs.iter_mut().zip(values.iter()) {
        *c *= (-I * (e * t / HBAR)).exp();
    }
    Ok(vectors * coeffs)
}

fn check_dense(model: &SystemModel, psi0: &[C64]) -> Result<()> {
    if model.dim() > MAX_DENSE_DIM {
        return Err(HseomError::ResourceRefusal {
            what: "dense oracle dimension",
            required: model.dim() as u128,
            budget: MAX_DENSE_DIM as u128,
        });
    }
    if psi0.len() != model.dim() {
        return Err(HseomError::DimensionMismatch { expected: model.dim(), found: psi0.len() });
    }
    Ok(())
}

/// Exact `exp(−iH_S t/ħ) ψ₀` for a time-independent model.
pub fn closed_system_propagate(model: &SystemModel, psi0: &[C64], t: f64) -> Result<Vec<C64>> {
    check_dense(model, psi0)?;
    let Schedule::Static(h) = model.schedule() else {
        return Err(HseomError::invalid("model", "closed-system oracle needs a time-independent Hamiltonian"));
    };
    let psi = evolve_dense(&h.to_dense(), &DVector::from_column_slice(psi0), t)?;
    Ok(psi.iter().copied().collect())
}

/// Time-ordered closed-system evolution from `τ = 0` to `t` by the exponential
/// midpoint rule with `steps` exact sub-propagators.
pub fn closed_system_propagate_scheduled(model: &SystemModel, psi0: &[C64], t: f64, steps: usize) -> Result<Vec<C64>> {
    check_dense(model, psi0)?;
    let steps = steps.max(1);
    let h_step = t / steps as f64;
    let mut psi = DVector::from_column_slice(psi0);
    for j in 0..steps {
        let tau = (j as f64 + 0.5) * h_step;
        psi = evolve_dense(&model.hamiltonian_at(tau).to_dense(), &psi, h_step)?;
    }
    Ok(psi.iter().copied().collect())
}

/// The hierarchy generator at fixed `τ` and branch, as an explicit sparse
/// matrix on the flattened stack (row-major: hierarchy row, then system index).
#[derive(Clone, Debug)]
pub struct AssembledGenerator {
    pub size: usize,
    pub sign: f64,
    /// `(row, col, value)`, sorted, no duplicates.
    pub entries: Vec<(usize, usize, C64)>,
}

impl AssembledGenerator {
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.size];
        for &(r, c, v) in &self.entries {
            out[r] += v * x[c];
        }
        out
    }

    pub fn apply_transpose(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.size];
        for &(r, c, v) in &self.entries {
            out[c] += v * x[r];
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.size, self.size);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }
}

/// Build the generator index by index from the definition of the hierarchy.
pub fn assemble_generator(
    space: &HierarchySpace,
    bath: &BathExpansion,
    model: &SystemModel,
    tau: f64,
    branch: Branch,
) -> Result<AssembledGenerator> {
    let dim = model.dim();
    let rows = space.len();
    let size = rows * dim;
    if size > MAX_ASSEMBLED_SIZE {
        return Err(HseomError::ResourceRefusal {
            what: "assembled generator size",
            required: size as u128,
            budget: MAX_ASSEMBLED_SIZE as u128,
        });
    }
    let modes = bath.c.len();
    let sign = match branch {
        Branch::C1 => 1.0,
        Branch::C2 => -1.0,
    };
    let lookup: HashMap<Vec<u8>, usize> = (0..rows).map(|r| (space.index(r).to_vec(), r)).collect();
    let h = model.hamiltonian_at(tau).to_dense();
    let v = model.coupling().to_dense();
    let mut blocks: HashMap<(usize, usize), C64> = HashMap::new();
    let mut add_block = |n: usize, m: usize, op: &dyn Fn(usize, usize) -> C64| {
        for a in 0..dim {
            for b in 0..dim {
                let value = op(a, b);
                if value != C64::new(0.0, 0.0) {
                    *blocks.entry((n * dim + a, m * dim + b)).or_default() += value;
                }
            }
        }
    };
    let minus_i = -I * (sign / HBAR);
    for (index, &n) in &lookup {
        add_block(n, n, &|a, b| minus_i * h[(a, b)]);
        for k in 0..modes {
            for kp in 0..modes {
                let eta = bath.eta.get(k, kp);
                if eta == 0.0 || index[k] == 0 {
                    continue;
                }
                let mut target = index.clone();
                target[k] -= 1;
                target[kp] += 1;
                if let Some(&m) = lookup.get(&target) {
                    let w = sign * eta * index[k] as f64;
                    add_block(n, m, &|a, b| if a == b { C64::new(w, 0.0) } else { C64::new(0.0, 0.0) });
                }
            }
            let mut up = index.clone();
            up[k] += 1;
            if let Some(&m) = lookup.get(&up) {
                let c = bath.c[k];
                add_block(n, m, &|a, b| minus_i * c * v[(a, b)]);
            }
            if index[k] > 0 {
                let mut down = index.clone();
                down[k] -= 1;
                let m = lookup[&down];
                let w = index[k] as f64 * bath.phi_at_zero[k];
                add_block(n, m, &|a, b| minus_i * w * v[(a, b)]);
            }
        }
    }
    let mut entries: Vec<(usize, usize, C64)> = blocks.into_iter().map(|((r, c), v)| (r, c, v)).collect();
    entries.sort_by_key(|&(r, c, _)| (r, c));
    Ok(AssembledGenerator { size, sign, entries })
}

/// `G(t) = ∫_0^t ds ∫_0^s du α(u) = ∫_0^t (t − u) α(u) du`, with `α` itself
/// evaluated by quadrature (a double integral over the ordered time domain).
pub fn ordered_double_integral(spec: &BathSpec, t: f64) -> Result<C64> {
    if t == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let inner = QuadratureConfig { abs_tol: 1e-13, rel_tol: 1e-11, max_subdivisions: 2000 };
    let outer = QuadratureConfig { abs_tol: 1e-12, rel_tol: 1e-10, max_subdivisions: 2000 };
    let mut failure = None;
    let result = integrate(
        |u| match alpha_quadrature_with(spec, u, &inner) {
            Ok(a) => a * (t - u),
            Err(e) => {
                failure.get_or_insert(e);
                C64::new(0.0, 0.0)
            }
        },
        0.0,
        t,
        &outer,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(result.value),
    }
}

/// Exact factor `ρ_kb(t) / (ρ_kb(0) e^{−i(E_k − E_b)t/ħ})` for a coupling that
/// commutes with the system Hamiltonian, with eigenvalues `v_ket`, `v_bra` on
/// the two states: `exp(−(v_k − v_b)(v_k G(t) − v_b G(t)*)/ħ²)`.
pub fn dephasing_factor(spec: &BathSpec, v_ket: f64, v_bra: f64, t: f64) -> Result<C64> {
    if t < 0.0 {
        return Err(HseomError::invalid("t", "must be non-negative"));
    }
    if v_ket == v_bra {
        return Ok(C64::new(1.0, 0.0));
    }
    let g = ordered_double_integral(spec, t)?;
    let phi = (v_ket - v_bra) * (v_ket * g - v_bra * g.conj()) / (HBAR * HBAR);
    Ok((-phi).exp())
}

/// Coherence factor of `V = (g ħ/2) σ^z`: `exp(−g² Re G(t))`.
pub fn dephasing_exact(spec: &BathSpec, coupling_scale: f64, t: f64) -> Result<C64> {
    let v = 0.5 * HBAR * coupling_scale;
    dephasing_factor(spec, v, -v, t)
}
