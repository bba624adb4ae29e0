//! Linear operators on the system Hilbert space, with a Pauli-string backing
//! for multi-qubit models.
//!
//! Site `i` of an `N`-qubit register is bit `i` of the basis index (site 0 is
//! the least significant bit) and bit value 1 is the `σ^z = +1` eigenstate.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::{HseomError, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// `coefficient · ⊗_i σ_i`; an empty factor map is the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliTerm {
    pub coefficient: f64,
    pub factors: BTreeMap<usize, Pauli>,
}

impl PauliTerm {
    pub fn new(coefficient: f64, factors: impl IntoIterator<Item = (usize, Pauli)>) -> Self {
        Self { coefficient, factors: factors.into_iter().collect() }
    }

    pub fn single(coefficient: f64, site: usize, pauli: Pauli) -> Self {
        Self::new(coefficient, [(site, pauli)])
    }

    fn masks(&self) -> (usize, usize, usize) {
        let (mut x, mut y, mut z) = (0, 0, 0);
        for (&site, &p) in &self.factors {
            match p {
                Pauli::X => x |= 1 << site,
                Pauli::Y => y |= 1 << site,
                Pauli::Z => z |= 1 << site,
            }
        }
        (x, y, z)
    }
}

/// Sum of Pauli strings on `qubits` sites, applied term by term in `O(2^N)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    qubits: usize,
    terms: Vec<PauliTerm>,
    // per term: (flip mask, y mask, z mask)
    masks: Vec<(usize, usize, usize)>,
}

const I_POWERS: [C64; 4] = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)];

impl PauliSum {
    pub fn new(qubits: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        if qubits >= usize::BITS as usize - 1 {
            return Err(HseomError::invalid("qubits", "register too large"));
        }
        for term in &terms {
            if let Some((&site, _)) = term.factors.iter().next_back() {
                if site >= qubits {
                    return Err(HseomError::invalid(
                        "factors",
                        format!("site {site} outside a {qubits}-qubit register"),
                    ));
                }
            }
        }
        let masks = terms
            .iter()
            .map(|t| {
                let (x, y, z) = t.masks();
                (x | y, y, z)
            })
            .collect();
        Ok(Self { qubits, terms, masks })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    /// Diagonal entries when no term flips a bit.
    pub fn diagonal(&self) -> Option<Vec<f64>> {
        if self.masks.iter().any(|&(flip, _, _)| flip != 0) {
            return None;
        }
        let mut out = vec![0.0; self.dim()];
        for (term, &(_, _, z)) in self.terms.iter().zip(&self.masks) {
            for (b, value) in out.iter_mut().enumerate() {
                let sign = if (!b & z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                *value += term.coefficient * sign;
            }
        }
        Some(out)
    }

    fn apply_add_impl(&self, scale: C64, v: &[C64], out: &mut [C64], transpose: bool) {
        for (term, &(flip, y, z)) in self.terms.iter().zip(&self.masks) {
            // σ^y is antisymmetric, so the transpose picks up (−1)^{#Y}.
            let sign = if transpose && y.count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            let c = scale * (term.coefficient * sign);
            for (b, &vb) in v.iter().enumerate() {
                // σ^z|0⟩ = −|0⟩, σ^y|1⟩ = i|0⟩, σ^y|0⟩ = −i|1⟩
                let nb = !b;
                let power = 2 * (nb & z).count_ones() + (b & y).count_ones() + 3 * (nb & y).count_ones();
                out[b ^ flip] += c * I_POWERS[(power % 4) as usize] * vb;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Operator {
    Identity(usize),
    Dense(DMatrix<C64>),
    Diagonal(Vec<C64>),
    /// `|row⟩⟨col|`
    MatrixUnit {
        dim: usize,
        row: usize,
        col: usize,
    },
    /// `|ket⟩⟨bra|` with `bra` given as the plain coefficient vector (not conjugated).
    Outer {
        ket: Vec<C64>,
        bra: Vec<C64>,
    },
    Pauli(PauliSum),
    /// `Σ_j a_j O_j`
    Combination(Vec<(C64, Operator)>),
}

impl Operator {
    pub fn dim(&self) -> usize {
        match self {
            Self::Identity(d) => *d,
            Self::Dense(m) => m.nrows(),
            Self::Diagonal(d) => d.len(),
            Self::MatrixUnit { dim, .. } => *dim,
            Self::Outer { ket, .. } => ket.len(),
            Self::Pauli(p) => p.dim(),
            Self::Combination(parts) => parts.first().map_or(0, |(_, op)| op.dim()),
        }
    }

    pub fn dense(matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(HseomError::DimensionMismatch { expected: matrix.nrows(), found: matrix.ncols() });
        }
        Ok(Self::Dense(matrix))
    }

    pub fn diagonal_real(values: impl IntoIterator<Item = f64>) -> Self {
        Self::Diagonal(values.into_iter().map(|v| C64::new(v, 0.0)).collect())
    }

    /// Pauli sums without bit flips become diagonal operators.
    pub fn pauli(sum: PauliSum) -> Self {
        match sum.diagonal() {
            Some(d) => Self::diagonal_real(d),
            None => Self::Pauli(sum),
        }
    }

    /// `out += scale · O v`
    pub fn apply_add(&self, scale: C64, v: &[C64], out: &mut [C64]) {
        match self {
            Self::Identity(_) => {
                for (o, x) in out.iter_mut().zip(v) {
                    *o += scale * x;
                }
            }
            Self::Dense(m) => {
                for (i, o) in out.iter_mut().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for (j, x) in v.iter().enumerate() {
                        acc += m[(i, j)] * x;
                    }
                    *o += scale * acc;
                }
            }
            Self::Diagonal(d) => {
                for ((o, x), di) in out.iter_mut().zip(v).zip(d) {
                    *o += scale * di * x;
                }
            }
            Self::MatrixUnit { row, col, .. } => out[*row] += scale * v[*col],
            Self::Outer { ket, bra } => {
                let overlap: C64 = bra.iter().zip(v).map(|(b, x)| b * x).sum();
                let s = scale * overlap;
                for (o, k) in out.iter_mut().zip(ket) {
                    *o += s * k;
                }
            }
            Self::Pauli(p) => p.apply_add_impl(scale, v, out, false),
            Self::Combination(parts) => {
                for (a, op) in parts {
                    op.apply_add(scale * a, v, out);
                }
            }
        }
    }

    /// `out += scale · Oᵀ v` (plain transpose, no conjugation).
    pub fn apply_transpose_add(&self, scale: C64, v: &[C64], out: &mut [C64]) {
        match self {
            Self::Identity(_) | Self::Diagonal(_) => self.apply_add(scale, v, out),
            Self::Dense(m) => {
                for (j, o) in out.iter_mut().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for (i, x) in v.iter().enumerate() {
                        acc += m[(i, j)] * x;
                    }
                    *o += scale * acc;
                }
            }
            Self::MatrixUnit { row, col, .. } => out[*col] += scale * v[*row],
            Self::Outer { ket, bra } => {
                let overlap: C64 = ket.iter().zip(v).map(|(k, x)| k * x).sum();
                let s = scale * overlap;
                for (o, b) in out.iter_mut().zip(bra) {
                    *o += s * b;
                }
            }
            Self::Pauli(p) => p.apply_add_impl(scale, v, out, true),
            Self::Combination(parts) => {
                for (a, op) in parts {
                    op.apply_transpose_add(scale * a, v, out);
                }
            }
        }
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim() {
            return Err(HseomError::DimensionMismatch { expected: self.dim(), found: v.len() });
        }
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        self.apply_add(C64::new(1.0, 0.0), v, &mut out);
        Ok(out)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        let mut e = vec![C64::new(0.0, 0.0); d];
        let mut col = vec![C64::new(0.0, 0.0); d];
        for j in 0..d {
            e[j] = C64::new(1.0, 0.0);
            col.iter_mut().for_each(|c| *c = C64::new(0.0, 0.0));
            self.apply_add(C64::new(1.0, 0.0), &e, &mut col);
            for i in 0..d {
                m[(i, j)] = col[i];
            }
            e[j] = C64::new(0.0, 0.0);
        }
        m
    }

    /// Upper bound on `max |O_ij − conj(O_ji)|`; exact for everything except
    /// combinations with complex weights on large registers.
    pub fn hermitian_deviation(&self) -> f64 {
        match self {
            Self::Identity(_) => 0.0,
            Self::Pauli(p) => {
                if p.terms().iter().all(|t| t.coefficient.is_finite()) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Self::Diagonal(d) => d.iter().fold(0.0, |acc, x| acc.max(x.im.abs())),
            Self::MatrixUnit { row, col, .. } => {
                if row == col {
                    0.0
                } else {
                    1.0
                }
            }
            Self::Combination(parts) if parts.iter().all(|(a, _)| a.im == 0.0) => {
                parts.iter().map(|(a, op)| a.re.abs() * op.hermitian_deviation()).sum()
            }
            _ => {
                let m = self.to_dense();
                let d = m.nrows();
                let mut worst = 0.0_f64;
                for i in 0..d {
                    for j in i..d {
                        worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
                    }
                }
                worst
            }
        }
    }

    pub fn is_hermitian(&self, tolerance: f64) -> bool {
        self.hermitian_deviation() <= tolerance
    }
}
