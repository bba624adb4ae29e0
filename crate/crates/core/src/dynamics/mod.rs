//! Contour propagation of the wave-function stack.
//!
//! The contour parameter `s` runs over `[0, 2t]`; the physical clock is
//! `τ(s) = s` on the forward branch C1 and `τ(s) = 2t − s` on the returning
//! branch C2, where the equations of motion change sign.

mod dual;
mod generator;
mod integrator;

use rayon::prelude::*;

pub use self::dual::DualSweep;
pub use self::generator::{Generator, PARALLEL_MIN_ENTRIES};
pub use self::integrator::Rk4;

use crate::bath::BathExpansion;
use crate::hierarchy::HierarchySpace;
use crate::models::{Operator, SystemModel};
use crate::{HseomError, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    C1,
    C2,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Self::C1 => 1.0,
            Self::C2 => -1.0,
        }
    }
}

/// `(τ, branch, sign)` at contour position `s` of a contour with turning point `t`.
/// The turning point itself belongs to C1.
pub fn contour_clock(s: f64, t: f64) -> Result<(f64, Branch, f64)> {
    if !(0.0..=2.0 * t).contains(&s) {
        return Err(HseomError::invalid("s", format!("contour position {s} outside [0, {}]", 2.0 * t)));
    }
    Ok(if s <= t { (s, Branch::C1, 1.0) } else { (2.0 * t - s, Branch::C2, -1.0) })
}

/// Reduced wave function (row 0) and all auxiliary wave functions, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveStack {
    data: Vec<C64>,
    rows: usize,
    dim: usize,
    pub s: f64,
    pub branch: Branch,
}

impl WaveStack {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        Self { data: vec![ZERO; rows * dim], rows, dim, s: 0.0, branch: Branch::C1 }
    }

    /// Factorized initial condition: `psi` in row 0, all auxiliary rows zero.
    pub fn factorized(rows: usize, psi: &[C64]) -> Self {
        let mut stack = Self::zeros(rows, psi.len());
        stack.data[..psi.len()].copy_from_slice(psi);
        stack
    }

    pub fn from_data(rows: usize, dim: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * dim {
            return Err(HseomError::DimensionMismatch { expected: rows * dim, found: data.len() });
        }
        Ok(Self { data, rows, dim, s: 0.0, branch: Branch::C1 })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rwf(&self) -> &[C64] {
        self.row(0)
    }

    /// Replace every row `φ_n` by `op φ_n`.
    pub fn apply_operator(&mut self, op: &Operator) -> Result<()> {
        apply_rows(&mut self.data, self.dim, op, false)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| if x.is_finite() { m.max(x.norm()) } else { f64::INFINITY })
    }
}

/// `x_n ← op x_n` (or `opᵀ x_n`) for every `dim`-sized row of `data`.
pub(crate) fn apply_rows(data: &mut [C64], dim: usize, op: &Operator, transpose: bool) -> Result<()> {
    if op.dim() != dim {
        return Err(HseomError::DimensionMismatch { expected: dim, found: op.dim() });
    }
    let one = C64::new(1.0, 0.0);
    let f = |scratch: &mut Vec<C64>, row: &mut [C64]| {
        scratch.fill(ZERO);
        if transpose {
            op.apply_transpose_add(one, row, scratch);
        } else {
            op.apply_add(one, row, scratch);
        }
        row.copy_from_slice(scratch);
    };
    if data.len() < PARALLEL_MIN_ENTRIES {
        let mut scratch = vec![ZERO; dim];
        data.chunks_mut(dim).for_each(|row| f(&mut scratch, row));
    } else {
        data.par_chunks_mut(dim).for_each_init(|| vec![ZERO; dim], f);
    }
    Ok(())
}

/// Grid index of `s` on a uniform grid of spacing `dt`, if `s` lies on it.
/// Number of steps of size `dt` that reach `s`, or an off-grid error.
pub fn grid_index(s: f64, dt: f64) -> Result<usize> {
    let x = s / dt;
    let j = x.round();
    if s < 0.0 || (x - j).abs() > 1e-8 * j.max(1.0) {
        return Err(HseomError::OffGrid { s, dt });
    }
    Ok(j as usize)
}

/// Step size, operator insertions and recording schedule for one contour run.
#[derive(Clone, Debug)]
pub struct ContourPlan {
    t: f64,
    dt: f64,
    steps_per_branch: usize,
    forward_only: bool,
    insertions: Vec<(usize, Operator)>,
    record: Vec<usize>,
    record_full: bool,
}

impl ContourPlan {
    /// Full contour `0 → t → 0`; `dt` must divide `t`.
    pub fn new(t: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(HseomError::invalid("dt", "must be finite and positive"));
        }
        if !(t >= 0.0 && t.is_finite()) {
            return Err(HseomError::invalid("t", "must be finite and non-negative"));
        }
        let steps_per_branch = grid_index(t, dt)?;
        Ok(Self {
            t,
            dt,
            steps_per_branch,
            forward_only: false,
            insertions: Vec::new(),
            record: Vec::new(),
            record_full: false,
        })
    }

    /// Forward branch only, `0 → t`.
    pub fn forward(t: f64, dt: f64) -> Result<Self> {
        let mut plan = Self::new(t, dt)?;
        plan.forward_only = true;
        Ok(plan)
    }

    /// `A` at the turning point `s = t` and `B` at `s = 2t − t′`.
    pub fn correlation(t: f64, t_prime: f64, dt: f64, a: Operator, b: Operator) -> Result<Self> {
        if !(0.0..=t).contains(&t_prime) {
            return Err(HseomError::invalid("t_prime", format!("must lie in [0, {t}]")));
        }
        Self::new(t, dt)?.insert(t, a)?.insert(2.0 * t - t_prime, b)
    }

    /// Apply `op` to every row at contour position `s`. Insertions at the same
    /// position act in the order they were added.
    pub fn insert(mut self, s: f64, op: Operator) -> Result<Self> {
        let j = self.checked_index(s)?;
        let at = self.insertions.partition_point(|(k, _)| *k <= j);
        self.insertions.insert(at, (j, op));
        Ok(self)
    }

    /// Record the reduced wave function at contour position `s` (after any insertion there).
    pub fn record_at(mut self, s: f64) -> Result<Self> {
        let j = self.checked_index(s)?;
        if let Err(at) = self.record.binary_search(&j) {
            self.record.insert(at, j);
        }
        Ok(self)
    }

    /// Record every `stride` steps, including both ends.
    pub fn record_every(mut self, stride: usize) -> Self {
        let stride = stride.max(1);
        let total = self.total_steps();
        self.record = (0..=total).step_by(stride).collect();
        if self.record.last() != Some(&total) {
            self.record.push(total);
        }
        self
    }

    /// Keep whole stacks, not just the reduced wave function, in snapshots.
    pub fn with_full_snapshots(mut self) -> Self {
        self.record_full = true;
        self
    }

    fn checked_index(&self, s: f64) -> Result<usize> {
        let j = grid_index(s, self.dt)?;
        if j > self.total_steps() {
            return Err(HseomError::invalid("s", format!("contour position {s} beyond the end of the plan")));
        }
        Ok(j)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps_per_branch(&self) -> usize {
        self.steps_per_branch
    }

    pub fn total_steps(&self) -> usize {
        if self.forward_only {
            self.steps_per_branch
        } else {
            2 * self.steps_per_branch
        }
    }
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub s: f64,
    pub tau: f64,
    pub branch: Branch,
    pub rwf: Vec<C64>,
    pub stack: Option<Vec<C64>>,
}

/// Largest row norm seen on each branch and largest norm per hierarchy level.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NormDiagnostics {
    pub max_row_norm_c1: f64,
    pub max_row_norm_c2: f64,
    pub max_level_norm: Vec<f64>,
}

impl NormDiagnostics {
    fn observe(&mut self, space: &HierarchySpace, stack: &WaveStack, branch: Branch) -> f64 {
        if self.max_level_norm.len() != space.max_level() + 1 {
            self.max_level_norm = vec![0.0; space.max_level() + 1];
        }
        let dim = stack.dim();
        let mut max_row = 0.0_f64;
        let mut max_abs = 0.0_f64;
        for level in 0..=space.max_level() {
            let mut level_sq = 0.0;
            for row in space.level_range(level) {
                let mut sq = 0.0;
                for x in &stack.data()[row * dim..(row + 1) * dim] {
                    sq += x.norm_sqr();
                    max_abs = max_abs.max(x.re.abs()).max(x.im.abs());
                }
                if !sq.is_finite() {
                    return f64::INFINITY;
                }
                level_sq += sq;
                max_row = max_row.max(sq);
            }
            self.max_level_norm[level] = self.max_level_norm[level].max(level_sq.sqrt());
        }
        let slot = match branch {
            Branch::C1 => &mut self.max_row_norm_c1,
            Branch::C2 => &mut self.max_row_norm_c2,
        };
        *slot = slot.max(max_row.sqrt());
        max_abs
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub final_stack: WaveStack,
    pub diagnostics: NormDiagnostics,
}

/// Single evaluation of the contour right-hand side at position `s` of a
/// contour with turning point `t`.
pub fn hseom_rhs(
    space: &HierarchySpace,
    bath: &BathExpansion,
    model: &SystemModel,
    stack: &WaveStack,
    s: f64,
    t: f64,
) -> Result<Vec<C64>> {
    let generator = Generator::new(space, bath, model)?;
    if stack.rows() != space.len() || stack.dim() != model.dim() {
        return Err(HseomError::DimensionMismatch { expected: generator.len(), found: stack.data().len() });
    }
    let (tau, _, sign) = contour_clock(s, t)?;
    let mut out = vec![ZERO; generator.len()];
    generator.apply(tau, sign, stack.data(), &mut out);
    Ok(out)
}

/// Integrate the stack along the plan with fixed-step RK4, applying insertions
/// to every row and recording snapshots on the way.
///
/// Integration starts at the contour position `init.s` (normally 0), which must
/// lie on the plan's grid; insertions and records before it are skipped.
pub fn propagate(generator: &Generator<'_>, plan: &ContourPlan, init: WaveStack) -> Result<Trajectory> {
    let space = generator.space();
    if init.rows() != space.len() || init.dim() != generator.dim() {
        return Err(HseomError::DimensionMismatch { expected: generator.len(), found: init.data().len() });
    }
    let (t, dt, n) = (plan.t, plan.dt, plan.steps_per_branch);
    let start = plan.checked_index(init.s)?;
    let mut stack = init;
    stack.branch = if start <= n { Branch::C1 } else { Branch::C2 };
    let mut rk = Rk4::new(generator.len());
    let mut diagnostics = NormDiagnostics::default();
    diagnostics.observe(space, &stack, stack.branch);
    let mut snapshots = Vec::with_capacity(plan.record.len());
    let mut next_insertion = plan.insertions.partition_point(|(k, _)| *k < start);
    let mut next_record = plan.record.partition_point(|k| *k < start);

    let mut settle = |j: usize, stack: &mut WaveStack, snapshots: &mut Vec<Snapshot>| -> Result<()> {
        while next_insertion < plan.insertions.len() && plan.insertions[next_insertion].0 == j {
            stack.apply_operator(&plan.insertions[next_insertion].1)?;
            next_insertion += 1;
        }
        if next_record < plan.record.len() && plan.record[next_record] == j {
            let (tau, branch) =
                if j <= n { (j as f64 * dt, Branch::C1) } else { ((2 * n - j) as f64 * dt, Branch::C2) };
            snapshots.push(Snapshot {
                s: stack.s,
                tau,
                branch,
                rwf: stack.rwf().to_vec(),
                stack: plan.record_full.then(|| stack.data().to_vec()),
            });
            next_record += 1;
        }
        Ok(())
    };

    settle(start, &mut stack, &mut snapshots)?;
    for j in start..plan.total_steps() {
        let branch = if j < n { Branch::C1 } else { Branch::C2 };
        let sign = branch.sign();
        let s0 = j as f64 * dt;
        rk.step(stack.data_mut(), dt, |offset, y, out| {
            let s = s0 + offset;
            let tau = match branch {
                Branch::C1 => s,
                Branch::C2 => 2.0 * t - s,
            };
            generator.apply(tau, sign, y, out);
        });
        stack.s = (j + 1) as f64 * dt;
        stack.branch = if j < n { Branch::C1 } else { Branch::C2 };
        let max_abs = diagnostics.observe(space, &stack, branch);
        if !max_abs.is_finite() {
            return Err(HseomError::NonFinite { s: stack.s, max_abs: stack.max_abs() });
        }
        settle(j + 1, &mut stack, &mut snapshots)?;
    }
    Ok(Trajectory { snapshots, final_stack: stack, diagnostics })
}
