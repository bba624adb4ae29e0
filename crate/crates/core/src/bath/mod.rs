//! Spectral densities, the bath correlation function, and its Bessel-series
//! expansion `α(t) = Σ_k c_k J_k(Ωt)`.
//!
//! The expansion coefficients follow from the Jacobi–Anger identity
//! `e^{−iΩxt} = J_0(Ωt) + Σ_{k≥1} 2(−i)^k T_k(x) J_k(Ωt)` applied to the
//! spectral representation of `α(t)` restricted to `|ω| ≤ Ω`. Because
//! `d/dt J_k(Ωt) = (Ω/2)(J_{k−1} − J_{k+1})`, the basis closes under
//! differentiation up to the truncation of the last member, which is what the
//! hierarchy consumes through [`DerivativeMatrix`].

pub mod bessel;
pub mod quadrature;

use std::fmt::Write as _;

use crate::{HseomError, Result, C64, HBAR};

use self::bessel::{bessel_j_ladder, chebyshev_t_ladder};
use self::quadrature::{integrate, QuadratureConfig};

/// Ohmic spectral densities. The set is closed at these two forms; a new
/// variant needs `evaluate` and `over_omega` (the latter regular at ω = 0).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpectralDensity {
    /// `J(ω) = η ω e^{−|ω|/γ}`
    OhmicExponential { eta: f64, gamma: f64 },
    /// `J(ω) = ζ ω sqrt(1 − (ω/ν)²)` for `|ω| ≤ ν`, zero outside.
    OhmicCircular { zeta: f64, nu: f64 },
}

impl SpectralDensity {
    pub fn evaluate(&self, omega: f64) -> f64 {
        omega * self.over_omega(omega)
    }

    /// `J(ω)/ω`, finite at the origin.
    pub fn over_omega(&self, omega: f64) -> f64 {
        match *self {
            Self::OhmicExponential { eta, gamma } => eta * (-omega.abs() / gamma).exp(),
            Self::OhmicCircular { zeta, nu } => {
                let r = omega / nu;
                if r.abs() >= 1.0 {
                    0.0
                } else {
                    zeta * (1.0 - r * r).sqrt()
                }
            }
        }
    }

    pub fn coupling(&self) -> f64 {
        match *self {
            Self::OhmicExponential { eta, .. } => eta,
            Self::OhmicCircular { zeta, .. } => zeta,
        }
    }

    pub fn cutoff(&self) -> f64 {
        match *self {
            Self::OhmicExponential { gamma, .. } => gamma,
            Self::OhmicCircular { nu, .. } => nu,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::OhmicExponential { .. } => "exponential",
            Self::OhmicCircular { .. } => "circular",
        }
    }

    pub fn from_kind(kind: &str, coupling: f64, cutoff: f64) -> Result<Self> {
        match kind {
            "exponential" => Ok(Self::OhmicExponential { eta: coupling, gamma: cutoff }),
            "circular" => Ok(Self::OhmicCircular { zeta: coupling, nu: cutoff }),
            other => Err(HseomError::invalid("density", format!("unknown spectral density `{other}`"))),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.coupling() >= 0.0 && self.coupling().is_finite()) {
            return Err(HseomError::invalid("coupling", "must be finite and non-negative"));
        }
        if !(self.cutoff() > 0.0 && self.cutoff().is_finite()) {
            return Err(HseomError::invalid("cutoff", "must be finite and positive"));
        }
        Ok(())
    }
}

/// Literal value of the spectral density formula at `omega`.
pub fn evaluate_density(density: &SpectralDensity, omega: f64) -> f64 {
    density.evaluate(omega)
}

/// Inverse temperature in units of time (`βħ`), with zero temperature as an
/// explicit variant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BetaHbar {
    Finite(f64),
    Infinite,
}

impl BetaHbar {
    pub fn is_zero_temperature(&self) -> bool {
        matches!(self, Self::Infinite)
    }
}

impl std::fmt::Display for BetaHbar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Finite(b) => write!(f, "{b}"),
            Self::Infinite => write!(f, "inf"),
        }
    }
}

impl std::str::FromStr for BetaHbar {
    type Err = HseomError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
            return Ok(Self::Infinite);
        }
        s.parse::<f64>().map_err(|e| HseomError::invalid("beta_hbar", e.to_string())).map(|b| {
            if b.is_infinite() {
                Self::Infinite
            } else {
                Self::Finite(b)
            }
        })
    }
}

/// Everything needed to build a [`BathExpansion`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BathSpec {
    pub density: SpectralDensity,
    pub beta_hbar: BetaHbar,
    /// Expansion cutoff frequency Ω.
    pub omega: f64,
    /// Number of Bessel basis functions K.
    pub modes: usize,
}

impl BathSpec {
    pub fn new(density: SpectralDensity, beta_hbar: BetaHbar, omega: f64, modes: usize) -> Result<Self> {
        let spec = Self { density, beta_hbar, omega, modes };
        spec.validate()?;
        Ok(spec)
    }

    /// Circular cutoff with the expansion frequency tied to the cutoff (Ω = ν).
    pub fn circular(zeta: f64, nu: f64, beta_hbar: BetaHbar, modes: usize) -> Result<Self> {
        Self::new(SpectralDensity::OhmicCircular { zeta, nu }, beta_hbar, nu, modes)
    }

    pub fn validate(&self) -> Result<()> {
        self.density.validate()?;
        if self.modes == 0 {
            return Err(HseomError::invalid("modes", "at least one basis function is required"));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(HseomError::invalid("omega", "expansion frequency must be finite and positive"));
        }
        if let BetaHbar::Finite(b) = self.beta_hbar {
            if !(b > 0.0 && b.is_finite()) {
                return Err(HseomError::invalid("beta_hbar", "must be positive (use `inf` for zero temperature)"));
            }
        }
        match self.density {
            SpectralDensity::OhmicCircular { nu, .. } => {
                if (self.omega - nu).abs() > 1e-12 * nu {
                    return Err(HseomError::invalid(
                        "omega",
                        format!("circular cutoff requires omega = nu ({nu}), got {}", self.omega),
                    ));
                }
            }
            SpectralDensity::OhmicExponential { gamma, .. } => {
                if self.omega <= gamma {
                    return Err(HseomError::invalid(
                        "omega",
                        format!("exponential cutoff requires omega > gamma ({gamma}), got {}", self.omega),
                    ));
                }
            }
        }
        Ok(())
    }

    /// `J(ω) coth(βħω/2)` for ω ≥ 0, i.e. the even (cosine) spectral weight.
    /// Reduces to `J(ω)` at zero temperature.
    pub fn symmetric_density(&self, omega: f64) -> f64 {
        match self.beta_hbar {
            BetaHbar::Infinite => self.density.evaluate(omega),
            BetaHbar::Finite(beta) => {
                // J(ω)coth(y) = (J(ω)/ω)·(2/β)·(y/tanh y), y = βω/2
                let y = 0.5 * beta * omega;
                let y_coth = if y.abs() < 1e-8 { 1.0 + y * y / 3.0 } else { y / y.tanh() };
                self.density.over_omega(omega) * (2.0 / beta) * y_coth
            }
        }
    }
}

/// Sparse derivative matrix of the truncated Bessel basis:
/// `η_{0,1} = −Ω`, `η_{k,k−1} = Ω/2` (k ≥ 1), `η_{k,k+1} = −Ω/2` (1 ≤ k ≤ K−2).
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeMatrix {
    size: usize,
    /// `η_{k,k−1}`, zero at k = 0.
    sub: Vec<f64>,
    /// `η_{k,k+1}`, zero at k = K−1.
    sup: Vec<f64>,
}

impl DerivativeMatrix {
    pub fn bessel(size: usize, omega: f64) -> Self {
        let mut sub = vec![0.0; size];
        let mut sup = vec![0.0; size];
        for k in 0..size {
            if k >= 1 {
                sub[k] = 0.5 * omega;
            }
            if k + 1 < size {
                sup[k] = if k == 0 { -omega } else { -0.5 * omega };
            }
        }
        Self { size, sub, sup }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        if row >= self.size || col >= self.size {
            0.0
        } else if col + 1 == row {
            self.sub[row]
        } else if col == row + 1 {
            self.sup[row]
        } else {
            0.0
        }
    }

    /// Nonzero entries as `(row, col, value)`, row-major.
    pub fn entries(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for k in 0..self.size {
            if k >= 1 && self.sub[k] != 0.0 {
                out.push((k, k - 1, self.sub[k]));
            }
            if k + 1 < self.size && self.sup[k] != 0.0 {
                out.push((k, k + 1, self.sup[k]));
            }
        }
        out
    }
}

/// The data that closes the hierarchy: Ω, the coefficients `c_k`, the
/// derivative matrix η and the basis values `φ_k(0) = J_k(0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BathExpansion {
    pub omega: f64,
    pub c: Vec<C64>,
    pub eta: DerivativeMatrix,
    pub phi_at_zero: Vec<f64>,
    /// Parameters the coefficients were computed from, when known.
    pub source: Option<BathSpec>,
    /// Non-fatal findings from the fit (e.g. an expansion too short to reproduce α(0)).
    pub warnings: Vec<String>,
}

impl BathExpansion {
    pub fn from_coefficients(omega: f64, c: Vec<C64>) -> Self {
        let k = c.len();
        let mut phi_at_zero = vec![0.0; k];
        if k > 0 {
            phi_at_zero[0] = 1.0;
        }
        Self { omega, eta: DerivativeMatrix::bessel(k, omega), c, phi_at_zero, source: None, warnings: Vec::new() }
    }

    /// Same basis, all coefficients zero: the bath is switched off.
    pub fn decoupled(modes: usize, omega: f64) -> Self {
        Self::from_coefficients(omega, vec![C64::new(0.0, 0.0); modes])
    }

    pub fn modes(&self) -> usize {
        self.c.len()
    }

    /// Plain-text export: a `#` header block followed by one `k re im` row per
    /// coefficient. Numbers use the shortest round-trip representation.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# hseom bath expansion");
        let _ = writeln!(out, "# omega = {}", self.omega);
        let _ = writeln!(out, "# modes = {}", self.modes());
        if let Some(spec) = &self.source {
            let _ = writeln!(out, "# beta_hbar = {}", spec.beta_hbar);
            let _ = writeln!(out, "# density = {}", spec.density.kind());
            let _ = writeln!(out, "# coupling = {}", spec.density.coupling());
            let _ = writeln!(out, "# cutoff = {}", spec.density.cutoff());
        }
        let _ = writeln!(out, "k re im");
        for (k, c) in self.c.iter().enumerate() {
            let _ = writeln!(out, "{k} {} {}", c.re, c.im);
        }
        out
    }

    pub fn from_table(text: &str) -> Result<Self> {
        let mut omega = None;
        let mut modes = None;
        let mut beta = None;
        let mut kind = None;
        let mut coupling = None;
        let mut cutoff = None;
        let mut c = Vec::new();
        let perr = |line: usize, reason: String| HseomError::Parse { line: line + 1, reason };
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let Some((key, value)) = rest.split_once('=') else { continue };
                let (key, value) = (key.trim(), value.trim());
                let num = || value.parse::<f64>().map_err(|e| perr(n, format!("{key}: {e}")));
                match key {
                    "omega" => omega = Some(num()?),
                    "modes" => modes = Some(value.parse::<usize>().map_err(|e| perr(n, format!("modes: {e}")))?),
                    "beta_hbar" => beta = Some(value.parse::<BetaHbar>().map_err(|e| perr(n, e.to_string()))?),
                    "density" => kind = Some(value.to_string()),
                    "coupling" => coupling = Some(num()?),
                    "cutoff" => cutoff = Some(num()?),
                    _ => {}
                }
                continue;
            }
            if line.starts_with("k ") || line == "k" {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(perr(n, format!("expected 3 columns, found {}", fields.len())));
            }
            let k: usize = fields[0].parse().map_err(|e| perr(n, format!("k: {e}")))?;
            if k != c.len() {
                return Err(perr(n, format!("expected row k = {}, found {k}", c.len())));
            }
            let re: f64 = fields[1].parse().map_err(|e| perr(n, format!("re: {e}")))?;
            let im: f64 = fields[2].parse().map_err(|e| perr(n, format!("im: {e}")))?;
            c.push(C64::new(re, im));
        }
        let omega = omega.ok_or_else(|| perr(0, "missing `omega` header".into()))?;
        if let Some(m) = modes {
            if m != c.len() {
                return Err(perr(0, format!("header declares {m} modes but {} rows follow", c.len())));
            }
        }
        let mut expansion = Self::from_coefficients(omega, c);
        if let (Some(beta), Some(kind), Some(coupling), Some(cutoff)) = (beta, kind, coupling, cutoff) {
            let density = SpectralDensity::from_kind(&kind, coupling, cutoff)?;
            expansion.source = Some(BathSpec::new(density, beta, omega, expansion.modes())?);
        }
        Ok(expansion)
    }
}

/// Tuning for the coefficient fit.
#[derive(Clone, Copy, Debug)]
pub struct ExpansionOptions {
    /// Relative tolerance on the reconstruction of α(0).
    pub tolerance: f64,
    pub quadrature: QuadratureConfig,
}

impl Default for ExpansionOptions {
    fn default() -> Self {
        Self { tolerance: 1e-6, quadrature: QuadratureConfig::default() }
    }
}

/// Bath correlation function by direct numerical quadrature of its spectral
/// representation over `0 ≤ ω ≤ Ω`:
/// `α(t) = ħ ∫ dω [J(ω) coth(βħω/2) cos ωt − i J(ω) sin ωt]`.
///
/// This is the reference the expansion is checked against, not the production path.
pub fn alpha_quadrature(spec: &BathSpec, t: f64) -> Result<C64> {
    alpha_quadrature_with(spec, t, &QuadratureConfig::default())
}

pub fn alpha_quadrature_with(spec: &BathSpec, t: f64, config: &QuadratureConfig) -> Result<C64> {
    let integrand = |w: f64| {
        let (s, c) = (w * t).sin_cos();
        C64::new(spec.symmetric_density(w) * c, -spec.density.evaluate(w) * s)
    };
    // Split at the oscillation scale so the first pass already resolves it.
    let pieces = ((spec.omega * t.abs()) / (2.0 * std::f64::consts::PI)).ceil().max(1.0) as usize;
    let h = spec.omega / pieces as f64;
    let mut total = C64::new(0.0, 0.0);
    for j in 0..pieces {
        let r = integrate(integrand, j as f64 * h, (j + 1) as f64 * h, config)?;
        total += r.value;
    }
    Ok(total * HBAR)
}

/// `(−i)^k`
fn minus_i_pow(k: usize) -> C64 {
    match k % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, -1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, 1.0),
    }
}

pub fn compute_coefficients(spec: &BathSpec) -> Result<BathExpansion> {
    compute_coefficients_with(spec, &ExpansionOptions::default())
}

/// Bessel coefficients of the bath correlation function.
///
/// `c_k = ħΩ (2 − δ_{k0}) (−i)^k ∫_{−1}^{1} dx T_k(x) J(Ωx) / (1 − e^{−βħΩx})`.
/// With `J` odd, the even part of the Bose weight pairs with even `k` and its odd
/// part (exactly 1/2 at any temperature) with odd `k`, so the integral folds onto
/// `[0, 1]`: even `k` integrate `T_k(x) J(Ωx) coth(βħΩx/2)`, odd `k` integrate
/// `T_k(x) J(Ωx)`. Zero temperature replaces `coth` by 1. The substitution
/// `x = cos θ` turns `T_k` into `cos kθ` and removes the endpoint square root of
/// the circular cutoff.
pub fn compute_coefficients_with(spec: &BathSpec, options: &ExpansionOptions) -> Result<BathExpansion> {
    spec.validate()?;
    if spec.modes < 2 {
        return Err(HseomError::invalid("modes", "the coefficient fit needs K >= 2"));
    }
    let omega = spec.omega;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let integral = |k: usize, config: &QuadratureConfig| -> Result<f64> {
        let kf = k as f64;
        let f = |theta: f64| {
            let (s, x) = theta.sin_cos();
            let w = omega * x;
            let weight = if k % 2 == 0 { spec.symmetric_density(w) } else { spec.density.evaluate(w) };
            C64::new((kf * theta).cos() * weight * s, 0.0)
        };
        // Resolve cos(kθ) from the start: one panel per half period.
        let pieces = (k / 2).max(1);
        let h = half_pi / pieces as f64;
        let mut total = 0.0;
        for j in 0..pieces {
            total += integrate(f, j as f64 * h, (j + 1) as f64 * h, config)?.value.re;
        }
        Ok(total)
    };

    let c0 = HBAR * omega * integral(0, &options.quadrature)?;
    let config = QuadratureConfig { abs_tol: options.quadrature.abs_tol.max(1e-15 * c0.abs()), ..options.quadrature };
    let mut c = Vec::with_capacity(spec.modes);
    c.push(C64::new(c0, 0.0));
    for k in 1..spec.modes {
        let value = 2.0 * HBAR * omega * integral(k, &config)?;
        c.push(minus_i_pow(k) * value);
    }

    let mut expansion = BathExpansion::from_coefficients(omega, c);
    expansion.source = Some(*spec);

    let reference = alpha_quadrature_with(spec, 0.0, &options.quadrature)?;
    let rebuilt = alpha_reconstruct(&expansion, 0.0);
    let rel = (rebuilt - reference).norm() / reference.norm().max(f64::MIN_POSITIVE);
    if rel > options.tolerance {
        expansion.warnings.push(format!(
            "reconstruction of alpha(0) deviates by {rel:e} (tolerance {:e}); increase K",
            options.tolerance
        ));
    }
    Ok(expansion)
}

/// `Σ_{k<K} c_k J_k(Ωt)`.
pub fn alpha_reconstruct(expansion: &BathExpansion, t: f64) -> C64 {
    let ladder = bessel_j_ladder(expansion.modes(), expansion.omega * t);
    expansion.c.iter().zip(&ladder).map(|(c, j)| c * j).sum()
}

/// `|e^{−iΩxt} − J_0(Ωt) − Σ_{k=1}^{K−1} 2(−i)^k T_k(x) J_k(Ωt)|`.
pub fn jacobi_anger_residual(x: f64, t: f64, modes: usize, omega: f64) -> f64 {
    let bessel = bessel_j_ladder(modes, omega * t);
    let cheb = chebyshev_t_ladder(modes, x);
    let partial: C64 = (0..modes)
        .map(|k| {
            let weight = if k == 0 { 1.0 } else { 2.0 };
            minus_i_pow(k) * (weight * cheb[k] * bessel[k])
        })
        .sum();
    (C64::from_polar(1.0, -omega * x * t) - partial).norm()
}

/// Smallest K whose Jacobi–Anger partial sum stays below `tolerance` on a probe
/// grid covering `x ∈ [−1, 1]` and `t ∈ [0, horizon]`.
pub fn minimal_modes(omega: f64, horizon: f64, tolerance: f64) -> usize {
    const PROBES: usize = 33;
    let ceiling = (omega * horizon).ceil() as usize + 60 + (10.0 * (omega * horizon).cbrt()).ceil() as usize;
    let mut worst = vec![0.0_f64; ceiling + 1];
    for it in 0..PROBES {
        let t = horizon * it as f64 / (PROBES - 1) as f64;
        let bessel = bessel_j_ladder(ceiling, omega * t);
        for ix in 0..PROBES {
            let x = -1.0 + 2.0 * ix as f64 / (PROBES - 1) as f64;
            let cheb = chebyshev_t_ladder(ceiling, x);
            let target = C64::from_polar(1.0, -omega * x * t);
            let mut partial = C64::new(0.0, 0.0);
            for k in 0..ceiling {
                let weight = if k == 0 { 1.0 } else { 2.0 };
                partial += minus_i_pow(k) * (weight * cheb[k] * bessel[k]);
                let r = (target - partial).norm();
                if r > worst[k + 1] {
                    worst[k + 1] = r;
                }
            }
        }
    }
    (1..=ceiling).find(|&k| worst[k] < tolerance).unwrap_or(ceiling)
}

/// Fraction of the even spectral weight `J(ω)coth(βħω/2)` lying beyond Ω.
/// Zero for the circular cutoff at Ω = ν.
pub fn tail_fraction(spec: &BathSpec) -> Result<f64> {
    let config = QuadratureConfig::default();
    let f = |w: f64| C64::new(spec.symmetric_density(w), 0.0);
    let inside = integrate(f, 0.0, spec.omega, &config)?.value.re;
    let far = spec.omega + 80.0 * spec.density.cutoff();
    let outside = integrate(f, spec.omega, far, &config)?.value.re;
    Ok(outside / (inside + outside))
}

/// Largest deviation `|alpha_reconstruct − alpha_quadrature|` on a uniform grid of
/// `points` times in `[0, horizon]`, relative to `max |α|` on the same grid.
pub fn expansion_error(expansion: &BathExpansion, spec: &BathSpec, horizon: f64, points: usize) -> Result<f64> {
    let mut max_dev = 0.0_f64;
    let mut max_alpha = 0.0_f64;
    for j in 0..points {
        let t = horizon * j as f64 / (points.max(2) - 1) as f64;
        let exact = alpha_quadrature(spec, t)?;
        let approx = alpha_reconstruct(expansion, t);
        max_dev = max_dev.max((exact - approx).norm());
        max_alpha = max_alpha.max(exact.norm());
    }
    Ok(max_dev / max_alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn circular(zeta: f64, nu: f64, beta: BetaHbar, k: usize) -> BathSpec {
        BathSpec::circular(zeta, nu, beta, k).unwrap()
    }

    #[test]
    fn density_values() {
        let c = SpectralDensity::OhmicCircular { zeta: 0.35, nu: 6.0 };
        assert_eq!(evaluate_density(&c, 6.0), 0.0);
        assert_eq!(evaluate_density(&c, 7.0), 0.0);
        let e = SpectralDensity::OhmicExponential { eta: 0.4, gamma: 6.0 };
        assert_eq!(evaluate_density(&e, 0.0), 0.0);
        let unit = SpectralDensity::OhmicCircular { zeta: 1.0, nu: 2.0 };
        assert!((evaluate_density(&unit, 1.0) - 3f64.sqrt() / 2.0).abs() < 1e-15);
        // odd extension is built into both formulas
        assert_eq!(evaluate_density(&e, -1.5), -evaluate_density(&e, 1.5));
    }

    #[test]
    fn spec_validation() {
        let d = SpectralDensity::OhmicCircular { zeta: 0.1, nu: 6.0 };
        assert!(BathSpec::new(d, BetaHbar::Finite(3.0), 5.0, 10).is_err());
        let e = SpectralDensity::OhmicExponential { eta: 0.1, gamma: 6.0 };
        assert!(BathSpec::new(e, BetaHbar::Finite(3.0), 6.0, 10).is_err());
        assert!(BathSpec::new(e, BetaHbar::Finite(-1.0), 20.0, 10).is_err());
        assert!(BathSpec::new(e, BetaHbar::Infinite, 20.0, 10).is_ok());
        assert!("inf".parse::<BetaHbar>().unwrap().is_zero_temperature());
        assert_eq!("2.5".parse::<BetaHbar>().unwrap(), BetaHbar::Finite(2.5));
    }

    #[test]
    fn derivative_matrix_pattern() {
        for k in 2..12 {
            let omega = 3.7;
            let eta = DerivativeMatrix::bessel(k, omega);
            for row in 0..k {
                for col in 0..k {
                    let expected = if row == 0 && col == 1 {
                        -omega
                    } else if row >= 1 && col + 1 == row {
                        omega / 2.0
                    } else if row >= 1 && row + 2 <= k && col == row + 1 {
                        -omega / 2.0
                    } else {
                        0.0
                    };
                    assert_eq!(eta.get(row, col), expected, "K={k} ({row},{col})");
                }
            }
            // last row has only the sub-diagonal entry
            assert_eq!(eta.entries().iter().filter(|e| e.0 == k - 1).count(), 1);
        }
    }

    #[test]
    fn derivative_matrix_differentiates_bessel_ladder() {
        // d/dt J_k(Ωt) = Σ η_{k,k'} J_{k'}(Ωt) holds exactly for every row but the last.
        let (omega, k, t, h) = (6.0, 12, 0.8, 1e-5);
        let eta = DerivativeMatrix::bessel(k, omega);
        let at = |s: f64| bessel_j_ladder(k + 1, omega * s);
        let (jp, jm, j0) = (at(t + h), at(t - h), at(t));
        for row in 0..k - 1 {
            let fd = (jp[row] - jm[row]) / (2.0 * h);
            let rhs: f64 = (0..k).map(|col| eta.get(row, col) * j0[col]).sum();
            assert!((fd - rhs).abs() < 1e-8, "row {row}");
        }
    }

    #[test]
    fn high_temperature_limit_of_circular_cutoff() {
        let (zeta, nu, beta, t) = (0.35, 6.0, 1e-3, 0.5);
        let spec = circular(zeta, nu, BetaHbar::Finite(beta), 20);
        let re = alpha_quadrature(&spec, t).unwrap().re;
        let j = bessel_j_ladder(3, nu * t);
        let limit = PI * zeta * nu / (2.0 * beta) * (j[0] + j[2]);
        assert!((re / limit - 1.0).abs() < 0.01, "{re} vs {limit}");
    }

    #[test]
    fn imaginary_part_is_temperature_independent() {
        let a = alpha_quadrature(&circular(0.35, 6.0, BetaHbar::Finite(3.0), 20), 1.0).unwrap();
        let b = alpha_quadrature(&circular(0.35, 6.0, BetaHbar::Finite(30.0), 20), 1.0).unwrap();
        assert!((a.im - b.im).abs() < 1e-8);
        assert!((a.re - b.re).abs() > 1e-3);
    }

    #[test]
    fn imaginary_part_of_circular_cutoff_is_two_bessel_terms() {
        // α = α' − iα'' with α'' = (πħζν²/8)(J_1(νt) + J_3(νt))
        let (zeta, nu, t) = (0.35, 6.0, 0.7);
        let alpha = alpha_quadrature(&circular(zeta, nu, BetaHbar::Finite(3.0), 20), t).unwrap();
        let j = bessel_j_ladder(4, nu * t);
        let alpha2 = PI * HBAR * zeta * nu * nu / 8.0 * (j[1] + j[3]);
        assert!(((-alpha.im) / alpha2 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn circular_odd_coefficients() {
        for &(zeta, nu) in &[(0.35, 6.0), (0.01, 3.0), (1.3, 0.7)] {
            for beta in [BetaHbar::Finite(3.0), BetaHbar::Finite(0.2), BetaHbar::Infinite] {
                let exp = compute_coefficients(&circular(zeta, nu, beta, 20)).unwrap();
                let target = PI * HBAR * zeta * nu * nu / 8.0;
                for (k, c) in exp.c.iter().enumerate().filter(|(k, _)| k % 2 == 1) {
                    assert!(c.re.abs() < 1e-12 * target);
                    if k == 1 || k == 3 {
                        assert!((-c.im / target - 1.0).abs() < 1e-12, "k={k}: {c}");
                    } else {
                        assert!(c.im.abs() < 1e-10, "k={k}: {c}");
                    }
                }
                assert_eq!(exp.phi_at_zero[0], 1.0);
                assert!(exp.phi_at_zero[1..].iter().all(|&p| p == 0.0));
            }
        }
    }

    #[test]
    fn odd_coefficients_do_not_depend_on_temperature() {
        let d = SpectralDensity::OhmicExponential { eta: 0.35, gamma: 6.0 };
        let fits: Vec<_> = [1.0, 3.0, 30.0]
            .iter()
            .map(|&b| compute_coefficients(&BathSpec::new(d, BetaHbar::Finite(b), 20.0, 40).unwrap()).unwrap())
            .collect();
        for k in (1..40).step_by(2) {
            assert!((fits[0].c[k] - fits[1].c[k]).norm() <= 1e-10);
            assert!((fits[0].c[k] - fits[2].c[k]).norm() <= 1e-10);
        }
    }

    #[test]
    fn zero_temperature_uses_sign_weighted_even_terms() {
        // Independent route: the unfolded zero-temperature formulas on [−1, 1].
        let spec = circular(0.1, 3.0, BetaHbar::Infinite, 8);
        let exp = compute_coefficients(&spec).unwrap();
        let config = QuadratureConfig::default();
        for k in 0..8 {
            let weight = if k == 0 { 1.0 } else { 2.0 };
            let f = |x: f64| {
                let t = chebyshev_t_ladder(k + 1, x)[k];
                let sgn = if k % 2 == 0 { x.signum() } else { 1.0 };
                C64::new(weight * t * sgn * spec.density.evaluate(spec.omega * x), 0.0)
            };
            let left = integrate(f, -1.0, 0.0, &config).unwrap().value;
            let right = integrate(f, 0.0, 1.0, &config).unwrap().value;
            let ck = 0.5 * HBAR * spec.omega * minus_i_pow(k) * (left + right);
            assert!((ck - exp.c[k]).norm() < 1e-10, "k={k}: {ck} vs {}", exp.c[k]);
        }
    }

    #[test]
    fn folded_coefficients_match_bose_weighted_integral() {
        // Unfolded form: ħΩ (2 − δ_{k0}) (−i)^k ∫_{−1}^{1} T_k(x) J(Ωx) / (1 − e^{−βħΩx}) dx
        let d = SpectralDensity::OhmicExponential { eta: 0.35, gamma: 6.0 };
        let beta = 3.0;
        let spec = BathSpec::new(d, BetaHbar::Finite(beta), 20.0, 12).unwrap();
        let exp = compute_coefficients(&spec).unwrap();
        let config = QuadratureConfig::default();
        for k in 0..12 {
            let weight = if k == 0 { 1.0 } else { 2.0 };
            let f = |x: f64| {
                let w = spec.omega * x;
                let bose = if w == 0.0 { d.over_omega(0.0) / beta } else { d.evaluate(w) / -(-beta * w).exp_m1() };
                C64::new(weight * chebyshev_t_ladder(k + 1, x)[k] * bose, 0.0)
            };
            let integral =
                integrate(f, -1.0, 0.0, &config).unwrap().value + integrate(f, 0.0, 1.0, &config).unwrap().value;
            let ck = HBAR * spec.omega * minus_i_pow(k) * integral;
            assert!((ck - exp.c[k]).norm() < 1e-10 * exp.c[0].norm(), "k={k}: {ck} vs {}", exp.c[k]);
        }
    }

    #[test]
    fn reconstruction_matches_quadrature() {
        let d = SpectralDensity::OhmicExponential { eta: 0.35, gamma: 6.0 };
        let spec = BathSpec::new(d, BetaHbar::Finite(3.0), 20.0, 80).unwrap();
        let exp = compute_coefficients(&spec).unwrap();
        assert!(exp.warnings.is_empty());
        assert!(expansion_error(&exp, &spec, 2.0, 81).unwrap() <= 1e-6);
        assert_eq!(alpha_reconstruct(&exp, 0.0), exp.c[0]);
    }

    #[test]
    fn reconstruction_error_does_not_grow_when_k_doubles() {
        let spec = |k| circular(0.35, 6.0, BetaHbar::Finite(3.0), k);
        let mut previous = f64::INFINITY;
        for k in [10, 20, 40] {
            let exp = compute_coefficients(&spec(k)).unwrap();
            let err = expansion_error(&exp, &spec(k), 2.0, 41).unwrap();
            assert!(err <= previous, "K={k}: {err} > {previous}");
            previous = err;
        }
    }

    #[test]
    fn single_mode_expansion() {
        let exp = BathExpansion::from_coefficients(2.0, vec![C64::new(0.7, -0.1)]);
        let j0 = bessel_j_ladder(1, 2.0 * 1.3)[0];
        assert_eq!(alpha_reconstruct(&exp, 1.3), C64::new(0.7, -0.1) * j0);
    }

    #[test]
    fn jacobi_anger() {
        assert_eq!(jacobi_anger_residual(0.3, 0.0, 1, 5.0), 0.0);
        assert!(jacobi_anger_residual(1.0, 1.0, 20, 5.0) < 1e-10);
        assert!(jacobi_anger_residual(0.5, 1.0, 20, 30.0) > 0.1);
    }

    #[test]
    fn minimal_modes_tracks_horizon() {
        let short = minimal_modes(6.0, 1.0, 1e-6);
        let long = minimal_modes(6.0, 4.0, 1e-6);
        assert!(long > short);
        assert!(jacobi_anger_residual(1.0, 4.0, long, 6.0) < 1e-6);
        assert!(long as f64 > 6.0 * 4.0);
    }

    #[test]
    fn tail_fraction_diagnostic() {
        let c = circular(0.35, 6.0, BetaHbar::Finite(3.0), 20);
        assert_eq!(tail_fraction(&c).unwrap(), 0.0);
        let d = SpectralDensity::OhmicExponential { eta: 0.35, gamma: 6.0 };
        let e = BathSpec::new(d, BetaHbar::Infinite, 20.0, 20).unwrap();
        // ∫_Ω^∞ ω e^{−ω/γ} / ∫_0^∞ = (1 + Ω/γ) e^{−Ω/γ}
        let x: f64 = 20.0 / 6.0;
        assert!((tail_fraction(&e).unwrap() - (1.0 + x) * (-x).exp()).abs() < 1e-9);
    }

    #[test]
    fn table_round_trip() {
        let spec = circular(0.35, 6.0, BetaHbar::Infinite, 6);
        let exp = compute_coefficients(&spec).unwrap();
        let back = BathExpansion::from_table(&exp.to_table()).unwrap();
        assert_eq!(back.c, exp.c);
        assert_eq!(back.eta, exp.eta);
        assert_eq!(back.source, exp.source);
        assert!(BathExpansion::from_table("# omega = 1\nk re im\n1 0 0\n").is_err());
    }
}
