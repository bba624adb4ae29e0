//! The hierarchy right-hand side.
//!
//! For every multi-index `n`,
//!
//! ```text
//! (Lφ)_n = −(i/ħ) H(τ) φ_n
//!          + Σ_{k,k'} η_{k,k'} n_k φ_{n−e_k+e_k'}
//!          − (i/ħ) V [ Σ_k c_k φ_{n+e_k} + Σ_k n_k φ_k(0) φ_{n−e_k} ]
//! ```
//!
//! and the contour derivative is `dφ/ds = ±Lφ` with the upper sign on the
//! forward branch. Terms pointing outside the truncated space are dropped.

use rayon::prelude::*;

use crate::bath::BathExpansion;
use crate::hierarchy::HierarchySpace;
use crate::models::SystemModel;
use crate::{HseomError, Result, C64, HBAR};

/// Stacks with fewer complex entries than this are swept on the calling thread.
pub const PARALLEL_MIN_ENTRIES: usize = 8192;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Borrowed view of everything the right-hand side needs.
#[derive(Clone, Copy)]
pub struct Generator<'a> {
    space: &'a HierarchySpace,
    bath: &'a BathExpansion,
    model: &'a SystemModel,
    parallel_min_entries: usize,
}

impl<'a> Generator<'a> {
    pub fn new(space: &'a HierarchySpace, bath: &'a BathExpansion, model: &'a SystemModel) -> Result<Self> {
        if bath.modes() != space.modes() {
            return Err(HseomError::DimensionMismatch { expected: space.modes(), found: bath.modes() });
        }
        Ok(Self { space, bath, model, parallel_min_entries: PARALLEL_MIN_ENTRIES })
    }

    /// Sweep stacks of at least `entries` complex numbers in parallel.
    pub fn with_parallel_threshold(mut self, entries: usize) -> Self {
        self.parallel_min_entries = entries;
        self
    }

    pub fn space(&self) -> &'a HierarchySpace {
        self.space
    }

    pub fn bath(&self) -> &'a BathExpansion {
        self.bath
    }

    pub fn model(&self) -> &'a SystemModel {
        self.model
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    /// Number of complex entries in a stack.
    pub fn len(&self) -> usize {
        self.space.len() * self.model.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `out = sign · L(τ) input`
    pub fn apply(&self, tau: f64, sign: f64, input: &[C64], out: &mut [C64]) {
        self.sweep(input, out, |row, scratch, out_row| self.row(tau, sign, row, input, scratch, out_row));
    }

    /// `out = sign · L(τ)ᵀ input` (transpose of the full stack operator).
    pub fn apply_transpose(&self, tau: f64, sign: f64, input: &[C64], out: &mut [C64]) {
        self.sweep(input, out, |row, scratch, out_row| self.row_transpose(tau, sign, row, input, scratch, out_row));
    }

    fn sweep<F>(&self, input: &[C64], out: &mut [C64], f: F)
    where
        F: Fn(usize, &mut [C64], &mut [C64]) + Sync,
    {
        let dim = self.dim();
        assert_eq!(input.len(), self.len(), "stack length");
        assert_eq!(out.len(), self.len(), "output length");
        if out.len() < self.parallel_min_entries {
            let mut scratch = vec![ZERO; dim];
            for (row, out_row) in out.chunks_mut(dim).enumerate() {
                f(row, &mut scratch, out_row);
            }
        } else {
            out.par_chunks_mut(dim)
                .enumerate()
                .for_each_init(|| vec![ZERO; dim], |scratch, (row, out_row)| f(row, scratch, out_row));
        }
    }

    fn row(&self, tau: f64, sign: f64, row: usize, input: &[C64], scratch: &mut [C64], out: &mut [C64]) {
        let dim = self.dim();
        let phi = |r: usize| &input[r * dim..(r + 1) * dim];
        let n = self.space.index(row);
        let eta = &self.bath.eta;
        let minus_i = C64::new(0.0, -sign / HBAR);

        out.fill(ZERO);
        self.model.apply_hamiltonian_add(tau, minus_i, phi(row), out);

        for ex in self.space.exchanges(row) {
            let (from, to) = (ex.from as usize, ex.to as usize);
            let weight = sign * eta.get(from, to) * n[from] as f64;
            for (o, x) in out.iter_mut().zip(phi(ex.target as usize)) {
                *o += x * weight;
            }
        }

        scratch.fill(ZERO);
        let mut coupled = false;
        if let Some(raised) = self.space.raise_row(row) {
            for (&target, &c) in raised.iter().zip(&self.bath.c) {
                if c != ZERO {
                    for (s, x) in scratch.iter_mut().zip(phi(target as usize)) {
                        *s += c * x;
                    }
                    coupled = true;
                }
            }
        }
        for lw in self.space.lowers(row) {
            let k = lw.mode as usize;
            let weight = n[k] as f64 * self.bath.phi_at_zero[k];
            if weight != 0.0 {
                for (s, x) in scratch.iter_mut().zip(phi(lw.target as usize)) {
                    *s += x * weight;
                }
                coupled = true;
            }
        }
        if coupled {
            self.model.coupling().apply_add(minus_i, scratch, out);
        }
    }

    fn row_transpose(&self, tau: f64, sign: f64, row: usize, input: &[C64], scratch: &mut [C64], out: &mut [C64]) {
        let dim = self.dim();
        let lam = |r: usize| &input[r * dim..(r + 1) * dim];
        let m = self.space.index(row);
        let eta = &self.bath.eta;
        let minus_i = C64::new(0.0, -sign / HBAR);

        out.fill(ZERO);
        self.model.apply_hamiltonian_transpose_add(tau, minus_i, lam(row), out);

        // Row n = m − e_from + e_to feeds row m through η_{to,from} n_to with n_to = m_to + 1.
        for ex in self.space.exchanges(row) {
            let (from, to) = (ex.from as usize, ex.to as usize);
            let weight = sign * eta.get(to, from) * (m[to] as f64 + 1.0);
            for (o, x) in out.iter_mut().zip(lam(ex.target as usize)) {
                *o += x * weight;
            }
        }

        scratch.fill(ZERO);
        let mut coupled = false;
        for lw in self.space.lowers(row) {
            let c = self.bath.c[lw.mode as usize];
            if c != ZERO {
                for (s, x) in scratch.iter_mut().zip(lam(lw.target as usize)) {
                    *s += c * x;
                }
                coupled = true;
            }
        }
        if let Some(raised) = self.space.raise_row(row) {
            for (k, &target) in raised.iter().enumerate() {
                let weight = (m[k] as f64 + 1.0) * self.bath.phi_at_zero[k];
                if weight != 0.0 {
                    for (s, x) in scratch.iter_mut().zip(lam(target as usize)) {
                        *s += x * weight;
                    }
                    coupled = true;
                }
            }
        }
        if coupled {
            self.model.coupling().apply_transpose_add(minus_i, scratch, out);
        }
    }
}
