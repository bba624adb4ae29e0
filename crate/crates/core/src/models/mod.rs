//! System Hamiltonians, coupling operators and initial states.

pub mod operator;

use nalgebra::DMatrix;

pub use self::operator::{Operator, Pauli, PauliSum, PauliTerm};
use crate::{HseomError, Result, C64, HBAR};

/// Largest register `pspin_annealing` builds unless a larger limit is given.
pub const DEFAULT_MAX_QUBITS: usize = 16;

/// Basis index of the spin-boson ground state `|1⟩` (`σ^z = +1`).
pub const SPIN_BOSON_GROUND: usize = 1;
/// Basis index of the spin-boson excited state `|0⟩`.
pub const SPIN_BOSON_EXCITED: usize = 0;

const HERMITICITY_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum Schedule {
    Static(Operator),
    /// `H(τ) = (1 − τ/t_f) initial + (τ/t_f) target`
    Annealing {
        initial: Operator,
        target: Operator,
        t_final: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemModel {
    dim: usize,
    schedule: Schedule,
    coupling: Operator,
}

impl SystemModel {
    /// Checks dimensions and Hermiticity of the coupling and of `H(τ)` on a
    /// sample of times spanning the schedule.
    pub fn new(schedule: Schedule, coupling: Operator) -> Result<Self> {
        let dim = coupling.dim();
        let check_dim = |op: &Operator| {
            if op.dim() == dim {
                Ok(())
            } else {
                Err(HseomError::DimensionMismatch { expected: dim, found: op.dim() })
            }
        };
        match &schedule {
            Schedule::Static(h) => check_dim(h)?,
            Schedule::Annealing { initial, target, t_final } => {
                check_dim(initial)?;
                check_dim(target)?;
                if !(*t_final > 0.0 && t_final.is_finite()) {
                    return Err(HseomError::invalid("t_final", "must be finite and positive"));
                }
            }
        }
        let model = Self { dim, schedule, coupling };
        let deviation = model.coupling.hermitian_deviation();
        if deviation > HERMITICITY_TOLERANCE {
            return Err(HseomError::NotHermitian { deviation });
        }
        for tau in model.sample_times() {
            let deviation = model.hamiltonian_at(tau).hermitian_deviation();
            if deviation > HERMITICITY_TOLERANCE {
                return Err(HseomError::NotHermitian { deviation });
            }
        }
        Ok(model)
    }

    /// Time-independent model from dense matrices.
    pub fn from_dense(hamiltonian: DMatrix<C64>, coupling: DMatrix<C64>) -> Result<Self> {
        Self::new(Schedule::Static(Operator::dense(hamiltonian)?), Operator::dense(coupling)?)
    }

    fn sample_times(&self) -> Vec<f64> {
        match &self.schedule {
            Schedule::Static(_) => vec![0.0],
            Schedule::Annealing { t_final, .. } => (0..5).map(|j| t_final * j as f64 / 4.0).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn coupling(&self) -> &Operator {
        &self.coupling
    }

    pub fn is_time_dependent(&self) -> bool {
        matches!(self.schedule, Schedule::Annealing { .. })
    }

    fn weights(&self, tau: f64) -> (f64, f64) {
        match &self.schedule {
            Schedule::Static(_) => (1.0, 0.0),
            Schedule::Annealing { t_final, .. } => {
                let lambda = tau / t_final;
                (1.0 - lambda, lambda)
            }
        }
    }

    pub fn hamiltonian_at(&self, tau: f64) -> Operator {
        match &self.schedule {
            Schedule::Static(h) => h.clone(),
            Schedule::Annealing { initial, target, .. } => {
                let (a, b) = self.weights(tau);
                Operator::Combination(vec![(C64::new(a, 0.0), initial.clone()), (C64::new(b, 0.0), target.clone())])
            }
        }
    }

    /// `out += scale · H(τ) v` without materializing `H(τ)`.
    pub fn apply_hamiltonian_add(&self, tau: f64, scale: C64, v: &[C64], out: &mut [C64]) {
        match &self.schedule {
            Schedule::Static(h) => h.apply_add(scale, v, out),
            Schedule::Annealing { initial, target, .. } => {
                let (a, b) = self.weights(tau);
                initial.apply_add(scale * a, v, out);
                target.apply_add(scale * b, v, out);
            }
        }
    }

    /// `out += scale · H(τ)ᵀ v`
    pub fn apply_hamiltonian_transpose_add(&self, tau: f64, scale: C64, v: &[C64], out: &mut [C64]) {
        match &self.schedule {
            Schedule::Static(h) => h.apply_transpose_add(scale, v, out),
            Schedule::Annealing { initial, target, .. } => {
                let (a, b) = self.weights(tau);
                initial.apply_transpose_add(scale * a, v, out);
                target.apply_transpose_add(scale * b, v, out);
            }
        }
    }
}

/// Two-level system `H = −(ħω₀/2)σ^z`, `V = −(ħ/2)σ^x`.
///
/// Basis order is `(|0⟩, |1⟩)` with `σ^z|1⟩ = +|1⟩`, so `|1⟩` is the ground state.
pub fn spin_boson(omega0: f64) -> Result<SystemModel> {
    if !(omega0 > 0.0 && omega0.is_finite()) {
        return Err(HseomError::invalid("omega0", "must be finite and positive"));
    }
    let h = Operator::diagonal_real([HBAR * omega0 / 2.0, -HBAR * omega0 / 2.0]);
    let x = PauliSum::new(1, vec![PauliTerm::single(-HBAR / 2.0, 0, Pauli::X)])?;
    SystemModel::new(Schedule::Static(h), Operator::pauli(x))
}

/// Same system Hamiltonian as [`spin_boson`] with a commuting coupling
/// `V = (ħ/2)σ^z`, for which the reduced dynamics is known in closed form.
pub fn pure_dephasing(omega0: f64) -> Result<SystemModel> {
    if !(omega0.is_finite()) {
        return Err(HseomError::invalid("omega0", "must be finite"));
    }
    let h = Operator::diagonal_real([HBAR * omega0 / 2.0, -HBAR * omega0 / 2.0]);
    let v = Operator::diagonal_real([-HBAR / 2.0, HBAR / 2.0]);
    SystemModel::new(Schedule::Static(h), v)
}

/// Total z-magnetization `m(b) = Σ_i σ^z_i` of basis state `b`.
pub fn magnetization(qubits: usize, b: usize) -> i64 {
    2 * b.count_ones() as i64 - qubits as i64
}

/// Energy of basis state `b` under `H_1 = −ħ𝒩 (Σ_i σ^z_i / 𝒩)^p`.
pub fn pspin_target_energy(qubits: usize, p: u32, b: usize) -> f64 {
    let n = qubits as f64;
    -HBAR * n * (magnetization(qubits, b) as f64 / n).powi(p as i32)
}

/// Ground state of the p-spin target: all sites in `|1⟩`.
pub fn pspin_ground_index(qubits: usize) -> usize {
    (1 << qubits) - 1
}

/// The `𝒩` single-flip states above the p-spin ground state; the first entry
/// (site 0 flipped) is the representative used for single-state populations.
pub fn pspin_first_excited(qubits: usize) -> Vec<usize> {
    let ground = pspin_ground_index(qubits);
    (0..qubits).map(|site| ground ^ (1 << site)).collect()
}

pub fn pspin_annealing(qubits: usize, gamma: f64, p: u32, t_final: f64) -> Result<SystemModel> {
    pspin_annealing_with_limit(qubits, gamma, p, t_final, DEFAULT_MAX_QUBITS)
}

/// Quantum annealing of the p-spin model:
/// `H(τ) = (1 − τ/t_f) H_0 + (τ/t_f) H_1`, `H_0 = −ħΓ Σ σ^x_i`,
/// `H_1 = −ħ𝒩 (Σ σ^z_i / 𝒩)^p`, coupling `V = ħ Σ σ^z_i`.
pub fn pspin_annealing_with_limit(
    qubits: usize,
    gamma: f64,
    p: u32,
    t_final: f64,
    max_qubits: usize,
) -> Result<SystemModel> {
    if qubits == 0 {
        return Err(HseomError::invalid("qubits", "at least one qubit is required"));
    }
    if qubits > max_qubits {
        return Err(HseomError::ResourceRefusal {
            what: "system dimension",
            required: 1u128 << qubits.min(127),
            budget: 1u128 << max_qubits.min(127),
        });
    }
    if p == 0 {
        return Err(HseomError::invalid("p", "must be at least 1"));
    }
    if !gamma.is_finite() {
        return Err(HseomError::invalid("gamma", "must be finite"));
    }
    let transverse = (0..qubits).map(|i| PauliTerm::single(-HBAR * gamma, i, Pauli::X)).collect();
    let initial = Operator::pauli(PauliSum::new(qubits, transverse)?);
    let target = Operator::diagonal_real((0..1usize << qubits).map(|b| pspin_target_energy(qubits, p, b)));
    let z = (0..qubits).map(|i| PauliTerm::single(HBAR, i, Pauli::Z)).collect();
    let coupling = Operator::pauli(PauliSum::new(qubits, z)?);
    SystemModel::new(Schedule::Annealing { initial, target, t_final }, coupling)
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    Pure(Vec<C64>),
    /// `ρ_S(0) = C|k⟩⟨k|C†`
    Localized {
        basis: usize,
        transform: Operator,
    },
}

impl InitialState {
    pub fn pure(vector: Vec<C64>) -> Result<Self> {
        let norm: f64 = vector.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(HseomError::invalid("initial_state", format!("pure state must be normalized (norm {norm})")));
        }
        Ok(Self::Pure(vector))
    }

    pub fn basis_state(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(HseomError::invalid("initial_state", format!("basis index {k} outside dimension {dim}")));
        }
        let mut v = vec![C64::new(0.0, 0.0); dim];
        v[k] = C64::new(1.0, 0.0);
        Ok(Self::Pure(v))
    }

    pub fn localized(basis: usize, transform: Operator) -> Result<Self> {
        if basis >= transform.dim() {
            return Err(HseomError::invalid(
                "initial_state",
                format!("basis index {basis} outside dimension {}", transform.dim()),
            ));
        }
        Ok(Self::Localized { basis, transform })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Pure(v) => v.len(),
            Self::Localized { transform, .. } => transform.dim(),
        }
    }

    /// `ψ` for a pure state, `C|k⟩` for a localized one.
    pub fn prepared_vector(&self) -> Vec<C64> {
        match self {
            Self::Pure(v) => v.clone(),
            Self::Localized { basis, transform } => {
                let mut e = vec![C64::new(0.0, 0.0); transform.dim()];
                e[*basis] = C64::new(1.0, 0.0);
                let mut out = vec![C64::new(0.0, 0.0); transform.dim()];
                transform.apply_add(C64::new(1.0, 0.0), &e, &mut out);
                out
            }
        }
    }

    pub fn density_matrix(&self) -> DMatrix<C64> {
        let u = nalgebra::DVector::from_vec(self.prepared_vector());
        &u * u.adjoint()
    }
}

/// Localized state `k = 0` with `⟨i|C|j⟩ = δ_{j0} / 2^{𝒩/2}`, so that
/// `C|0⟩⟨0|C†` is the uniform superposition of all `2^𝒩` basis states.
pub fn uniform_superposition_transform(qubits: usize) -> Result<InitialState> {
    if qubits == 0 || qubits > 40 {
        return Err(HseomError::invalid("qubits", "must be between 1 and 40"));
    }
    let dim = 1usize << qubits;
    let amplitude = C64::new((dim as f64).sqrt().recip(), 0.0);
    let mut bra = vec![C64::new(0.0, 0.0); dim];
    bra[0] = C64::new(1.0, 0.0);
    InitialState::localized(0, Operator::Outer { ket: vec![amplitude; dim], bra })
}
