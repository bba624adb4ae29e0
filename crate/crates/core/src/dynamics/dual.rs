//! Forward sweep of the stack together with its adjoint.
//!
//! Write the stack propagator from `τ₁` to `τ₂` as `G(τ₂, τ₁)`. The returning
//! branch of a contour ending at the row-0 functional `f` contributes
//! `fᵀ [G(0, τ) x]₀`, which is linear in the stack `x` and can be written
//! `λ(τ)ᵀ x` with `dλ/dτ = −L(τ)ᵀ λ` and `λ(0)` equal to `f` in row 0. Carrying
//! `λ` forward next to the stack `w` gives, at every grid time `τ`, the value
//! of a contour whose turning point is `τ`:
//!
//! * `ρ_ij(τ) = Σ_n λ_{n,j} w_{n,i}` (insertion `|j⟩⟨i|` at the turning point),
//! * after an adjoint insertion `λ_n ← Bᵀ λ_n` at `t′`, `Σ_n λ_nᵀ A w_n` is the
//!   contour with `A` at the turning point and `B` at `t′`.
//!
//! One sweep thus replaces a separate returning branch per recorded time.

use nalgebra::DMatrix;

use super::{apply_rows, Generator, Rk4};
use crate::models::Operator;
use crate::{HseomError, Result, C64};

pub struct DualSweep<'a> {
    generator: Generator<'a>,
    w: Vec<C64>,
    lambda: Vec<C64>,
    dt: f64,
    steps: usize,
    rk_w: Rk4,
    rk_lambda: Rk4,
}

impl<'a> DualSweep<'a> {
    /// Start from `psi` in row 0 of the stack and `functional` in row 0 of the
    /// adjoint (all auxiliary rows zero).
    pub fn new(generator: Generator<'a>, psi: &[C64], functional: &[C64], dt: f64) -> Result<Self> {
        let dim = generator.dim();
        for v in [psi, functional] {
            if v.len() != dim {
                return Err(HseomError::DimensionMismatch { expected: dim, found: v.len() });
            }
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(HseomError::invalid("dt", "must be finite and positive"));
        }
        let len = generator.len();
        let mut w = vec![C64::new(0.0, 0.0); len];
        let mut lambda = w.clone();
        w[..dim].copy_from_slice(psi);
        lambda[..dim].copy_from_slice(functional);
        Ok(Self { generator, w, lambda, dt, steps: 0, rk_w: Rk4::new(len), rk_lambda: Rk4::new(len) })
    }

    pub fn tau(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn stack(&self) -> &[C64] {
        &self.w
    }

    pub fn adjoint(&self) -> &[C64] {
        &self.lambda
    }

    pub fn advance(&mut self) -> Result<()> {
        let tau0 = self.tau();
        let generator = self.generator;
        self.rk_w.step(&mut self.w, self.dt, |off, y, out| generator.apply(tau0 + off, 1.0, y, out));
        self.rk_lambda
            .step(&mut self.lambda, self.dt, |off, y, out| generator.apply_transpose(tau0 + off, -1.0, y, out));
        self.steps += 1;
        let finite = self.w.iter().chain(&self.lambda).all(|x| x.is_finite());
        if !finite {
            let max_abs = self.w.iter().chain(&self.lambda).fold(0.0_f64, |m, x| m.max(x.norm()));
            return Err(HseomError::NonFinite { s: self.tau(), max_abs });
        }
        Ok(())
    }

    pub fn advance_to(&mut self, steps: usize) -> Result<()> {
        while self.steps < steps {
            self.advance()?;
        }
        Ok(())
    }

    /// Insert `op` on the returning branch at the current time: `λ_n ← opᵀ λ_n`.
    pub fn insert_adjoint(&mut self, op: &Operator) -> Result<()> {
        apply_rows(&mut self.lambda, self.generator.dim(), op, true)
    }

    /// Insert `op` on the forward branch at the current time: `w_n ← op w_n`.
    pub fn insert_forward(&mut self, op: &Operator) -> Result<()> {
        apply_rows(&mut self.w, self.generator.dim(), op, false)
    }

    /// `Σ_n λ_nᵀ op w_n`: the contour value with `op` at the current turning point.
    pub fn contract(&self, op: &Operator) -> Result<C64> {
        let dim = self.generator.dim();
        if op.dim() != dim {
            return Err(HseomError::DimensionMismatch { expected: dim, found: op.dim() });
        }
        let mut scratch = vec![C64::new(0.0, 0.0); dim];
        let mut total = C64::new(0.0, 0.0);
        for (w, l) in self.w.chunks(dim).zip(self.lambda.chunks(dim)) {
            if l.iter().all(|x| *x == C64::new(0.0, 0.0)) {
                continue;
            }
            scratch.fill(C64::new(0.0, 0.0));
            op.apply_add(C64::new(1.0, 0.0), w, &mut scratch);
            total += l.iter().zip(&scratch).map(|(a, b)| a * b).sum::<C64>();
        }
        Ok(total)
    }

    /// `ρ_ij = Σ_n λ_{n,j} w_{n,i}`
    pub fn reduced_density(&self) -> DMatrix<C64> {
        let dim = self.generator.dim();
        let mut rho = DMatrix::zeros(dim, dim);
        for (w, l) in self.w.chunks(dim).zip(self.lambda.chunks(dim)) {
            for i in 0..dim {
                if w[i] == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..dim {
                    rho[(i, j)] += l[j] * w[i];
                }
            }
        }
        rho
    }

    /// Selected diagonal elements `ρ_kk` only.
    pub fn populations(&self, states: &[usize]) -> Vec<f64> {
        let dim = self.generator.dim();
        let mut out = vec![C64::new(0.0, 0.0); states.len()];
        for (w, l) in self.w.chunks(dim).zip(self.lambda.chunks(dim)) {
            for (o, &k) in out.iter_mut().zip(states) {
                *o += l[k] * w[k];
            }
        }
        out.into_iter().map(|p| p.re).collect()
    }
}
