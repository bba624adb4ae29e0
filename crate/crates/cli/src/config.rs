//! Run configuration, read from a TOML file.
//!
//! Every section is optional and falls back to the spin-boson response preset
//! with a circular cutoff. Unknown keys are rejected.

use std::path::PathBuf;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use hseom::bath::{BathSpec, BetaHbar, SpectralDensity};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    BathFit,
    Respond,
    Anneal,
    Rdm,
    Validate,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::BathFit => "bath-fit",
            Self::Respond => "respond",
            Self::Anneal => "anneal",
            Self::Rdm => "rdm",
            Self::Validate => "validate",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub bath: BathConfig,
    #[serde(default)]
    pub hierarchy: HierarchyConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub horizon: HorizonConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialChoice {
    #[default]
    Ground,
    Excited,
    /// `(|0⟩ + |1⟩)/√2`
    Plus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    SpinBoson {
        omega0: f64,
        #[serde(default)]
        initial: InitialChoice,
    },
    PureDephasing {
        omega0: f64,
        #[serde(default)]
        initial: InitialChoice,
    },
    Pspin {
        qubits: usize,
        gamma: f64,
        p: u32,
        t_final: f64,
    },
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::SpinBoson { omega0: std::f64::consts::PI, initial: InitialChoice::Ground }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityKind {
    Circular,
    Exponential,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BathConfig {
    pub density: DensityKind,
    /// `ζ` for the circular cutoff, `η` for the exponential one.
    pub coupling: f64,
    /// `ν` or `γ`.
    pub cutoff: f64,
    #[serde(serialize_with = "write_beta", deserialize_with = "read_beta")]
    pub beta_hbar: BetaHbar,
    /// Expansion frequency Ω; defaults to ν for the circular cutoff and is
    /// required for the exponential one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    pub modes: usize,
}

impl Default for BathConfig {
    fn default() -> Self {
        Self {
            density: DensityKind::Circular,
            coupling: 0.35,
            cutoff: 6.0,
            beta_hbar: BetaHbar::Finite(3.0),
            omega: None,
            modes: 20,
        }
    }
}

impl BathConfig {
    pub fn spec(&self) -> Result<BathSpec, CliError> {
        let (density, omega) = match self.density {
            DensityKind::Circular => (
                SpectralDensity::OhmicCircular { zeta: self.coupling, nu: self.cutoff },
                self.omega.unwrap_or(self.cutoff),
            ),
            DensityKind::Exponential => (
                SpectralDensity::OhmicExponential { eta: self.coupling, gamma: self.cutoff },
                self.omega.ok_or_else(|| CliError::config("bath.omega", "required for the exponential cutoff"))?,
            ),
        };
        Ok(BathSpec::new(density, self.beta_hbar, omega, self.modes)?)
    }
}

fn write_beta<S: Serializer>(beta: &BetaHbar, s: S) -> Result<S::Ok, S::Error> {
    match beta {
        BetaHbar::Finite(b) => s.serialize_f64(*b),
        BetaHbar::Infinite => s.serialize_str("inf"),
    }
}

fn read_beta<'de, D: Deserializer<'de>>(d: D) -> Result<BetaHbar, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Number(f64),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::Number(b) if b.is_infinite() => Ok(BetaHbar::Infinite),
        Raw::Number(b) => Ok(BetaHbar::Finite(b)),
        Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HierarchyConfig {
    pub levels: usize,
    /// Memory budget for the pre-flight check.
    pub budget_bytes: u64,
}

impl Default for HierarchyConfig {
    fn default() -> Self {
        Self { levels: 3, budget_bytes: 4 << 30 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    /// Step size; defaults to `min(0.05/Ω, T/2000)` fitted to the horizon.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HorizonConfig {
    /// Length of the recorded series (response time, density-matrix time, α window).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Equilibration time before the first response insertion.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    /// Spacing of recorded samples; rounded to a whole number of steps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record_interval: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
    /// Decay time of the exponential window; no window when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { omega_min: 0.0, omega_max: 10.0, points: 401, window: None }
    }
}

impl SpectrumConfig {
    pub fn grid(&self) -> Vec<f64> {
        if self.points < 2 {
            return vec![self.omega_min; self.points];
        }
        let step = (self.omega_max - self.omega_min) / (self.points - 1) as f64;
        (0..self.points).map(|j| self.omega_min + step * j as f64).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub svg: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), svg: true }
    }
}

impl RunConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            workers: None,
            model: ModelConfig::default(),
            bath: BathConfig::default(),
            hierarchy: HierarchyConfig::default(),
            integrator: IntegratorConfig::default(),
            horizon: HorizonConfig::default(),
            spectrum: SpectrumConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Field-level checks that do not need any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        fn positive(name: &str, v: f64) -> Result<(), CliError> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CliError::config(name, "must be finite and positive"))
            }
        }
        fn non_negative(name: &str, v: f64) -> Result<(), CliError> {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CliError::config(name, "must be finite and non-negative"))
            }
        }
        if self.workers == Some(0) {
            return Err(CliError::config("workers", "must be at least 1"));
        }
        match &self.model {
            ModelConfig::SpinBoson { omega0, .. } | ModelConfig::PureDephasing { omega0, .. } => {
                non_negative("model.omega0", *omega0)?
            }
            ModelConfig::Pspin { qubits, gamma, p, t_final } => {
                if !(1..=hseom::models::DEFAULT_MAX_QUBITS).contains(qubits) {
                    return Err(CliError::config(
                        "model.qubits",
                        format!("must be between 1 and {}", hseom::models::DEFAULT_MAX_QUBITS),
                    ));
                }
                non_negative("model.gamma", *gamma)?;
                if *p == 0 {
                    return Err(CliError::config("model.p", "must be at least 1"));
                }
                positive("model.t_final", *t_final)?;
            }
        }
        non_negative("bath.coupling", self.bath.coupling)?;
        positive("bath.cutoff", self.bath.cutoff)?;
        if let BetaHbar::Finite(b) = self.bath.beta_hbar {
            positive("bath.beta_hbar", b)?;
        }
        if let Some(omega) = self.bath.omega {
            positive("bath.omega", omega)?;
        }
        if self.bath.modes < 2 {
            return Err(CliError::config("bath.modes", "at least 2 Bessel functions are required"));
        }
        if self.experiment != Experiment::Validate {
            self.bath.spec()?;
        }
        if let Some(dt) = self.integrator.dt {
            positive("integrator.dt", dt)?;
        }
        if let Some(t) = self.horizon.t {
            non_negative("horizon.t", t)?;
        }
        if let Some(t0) = self.horizon.t0 {
            non_negative("horizon.t0", t0)?;
        }
        if let Some(r) = self.horizon.record_interval {
            positive("horizon.record_interval", r)?;
        }
        if !(self.spectrum.omega_min.is_finite() && self.spectrum.omega_max.is_finite())
            || self.spectrum.omega_max < self.spectrum.omega_min
        {
            return Err(CliError::config("spectrum.omega_max", "must be finite and not below omega_min"));
        }
        if let Some(w) = self.spectrum.window {
            positive("spectrum.window", w)?;
        }
        let needs = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(CliError::config("model.kind", format!("{} needs {what}", self.experiment.name())))
            }
        };
        match self.experiment {
            Experiment::Respond => needs(matches!(self.model, ModelConfig::SpinBoson { .. }), "the spin-boson model")?,
            Experiment::Anneal => needs(matches!(self.model, ModelConfig::Pspin { .. }), "the p-spin model")?,
            _ => {}
        }
        Ok(())
    }
}
