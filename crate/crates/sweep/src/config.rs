use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use qvdp_core::SystemParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, SweepError};

/// Sweepable model parameters, all in units of `γ₁`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Param {
    #[serde(rename = "gamma2_ratio")]
    Gamma2,
    #[serde(rename = "kappa_ratio")]
    Kappa,
    #[serde(rename = "delta_ratio")]
    Delta,
    #[serde(rename = "Omega_ratio", alias = "omega_ratio")]
    Omega,
    #[serde(rename = "eta_ratio")]
    Eta,
}

impl Param {
    pub const ALL: [Param; 5] = [Param::Gamma2, Param::Kappa, Param::Delta, Param::Omega, Param::Eta];

    pub fn column(self) -> &'static str {
        match self {
            Param::Gamma2 => "gamma2_ratio",
            Param::Kappa => "kappa_ratio",
            Param::Delta => "delta_ratio",
            Param::Omega => "Omega_ratio",
            Param::Eta => "eta_ratio",
        }
    }

    pub fn get(self, p: &SystemParams) -> f64 {
        match self {
            Param::Gamma2 => p.gamma2,
            Param::Kappa => p.kappa,
            Param::Delta => p.delta,
            Param::Omega => p.omega,
            Param::Eta => p.eta,
        }
    }

    pub fn set(self, p: SystemParams, value: f64) -> SystemParams {
        match self {
            Param::Gamma2 => p.with_gamma2(value),
            Param::Kappa => p.with_kappa(value),
            Param::Delta => p.with_delta(value),
            Param::Omega => p.with_omega(value),
            Param::Eta => p.with_eta(value),
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: Param,
    pub min: f64,
    pub max: f64,
    pub n: usize,
    #[serde(default)]
    pub scale: Scale,
}

impl Axis {
    pub fn linear(param: Param, min: f64, max: f64, n: usize) -> Self {
        Self { param, min, max, n, scale: Scale::Linear }
    }

    pub fn log(param: Param, min: f64, max: f64, n: usize) -> Self {
        Self { param, min, max, n, scale: Scale::Log }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(SweepError::Config(format!("axis {} needs n ≥ 2, got {}", self.param, self.n)));
        }
        if !self.min.is_finite() || !self.max.is_finite() {
            return Err(SweepError::Config(format!("axis {} has a non-finite bound", self.param)));
        }
        if self.scale == Scale::Log && self.min <= 0.0 {
            return Err(SweepError::Config(format!(
                "log-scaled axis {} needs min > 0, got {}",
                self.param, self.min
            )));
        }
        Ok(())
    }

    /// Grid values; endpoints are hit exactly.
    pub fn values(&self) -> Vec<f64> {
        let last = (self.n - 1) as f64;
        (0..self.n)
            .map(|i| {
                if i == 0 {
                    return self.min;
                }
                if i == self.n - 1 {
                    return self.max;
                }
                let t = i as f64 / last;
                match self.scale {
                    Scale::Linear => self.min + t * (self.max - self.min),
                    Scale::Log => {
                        let (a, b) = (self.min.log10(), self.max.log10());
                        10f64.powf(a + t * (b - a))
                    }
                }
            })
            .collect()
    }
}

/// How the harmonic drive is derived from the distortion threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdRule {
    /// `N − N₀ = ε` in the deep quantum limit.
    #[default]
    Absolute,
    /// `(N − N₀)/N₀ = ε` in the deep quantum limit.
    Relative,
}

/// Closed form that `S_abs_diff` and `S_rel_diff` compare against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyncReference {
    #[default]
    Noiseless,
    DeepQuantumLimit,
    Ansatz,
}

/// CSV columns a scenario may request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Output {
    #[serde(rename = "N_numeric")]
    NNumeric,
    #[serde(rename = "N0_numeric")]
    N0Numeric,
    #[serde(rename = "delta_N")]
    DeltaN,
    #[serde(rename = "rel_distortion")]
    RelDistortion,
    #[serde(rename = "S_numeric")]
    SNumeric,
    #[serde(rename = "mu_numeric")]
    MuNumeric,
    #[serde(rename = "phase_defined")]
    PhaseDefined,
    #[serde(rename = "coh_01")]
    Coh01,
    #[serde(rename = "coh_02")]
    Coh02,
    #[serde(rename = "coh_12")]
    Coh12,
    #[serde(rename = "S_noiseless")]
    SNoiseless,
    #[serde(rename = "S_deep_quantum_limit")]
    SDeepQuantumLimit,
    #[serde(rename = "S_ansatz")]
    SAnsatz,
    #[serde(rename = "mu_closed")]
    MuClosed,
    #[serde(rename = "S_abs_diff")]
    SAbsDiff,
    #[serde(rename = "S_rel_diff")]
    SRelDiff,
    #[serde(rename = "N_eq5")]
    NEq5,
    #[serde(rename = "N_sse")]
    NSse,
    #[serde(rename = "N_meanfield")]
    NMeanField,
    #[serde(rename = "N_deep_quantum_limit")]
    NDeepQuantumLimit,
    #[serde(rename = "N_ansatz")]
    NAnsatz,
    #[serde(rename = "omega_th")]
    OmegaTh,
    #[serde(rename = "delta_obs")]
    DeltaObs,
    #[serde(rename = "delta_rel")]
    DeltaRel,
    #[serde(rename = "delta_obs_harmonic")]
    DeltaObsHarmonic,
    #[serde(rename = "delta_rel_harmonic")]
    DeltaRelHarmonic,
    #[serde(rename = "delta_obs_squeeze")]
    DeltaObsSqueeze,
    #[serde(rename = "delta_rel_squeeze")]
    DeltaRelSqueeze,
}

impl Output {
    pub const ALL: [Output; 28] = [
        Output::NNumeric,
        Output::N0Numeric,
        Output::DeltaN,
        Output::RelDistortion,
        Output::SNumeric,
        Output::MuNumeric,
        Output::PhaseDefined,
        Output::Coh01,
        Output::Coh02,
        Output::Coh12,
        Output::SNoiseless,
        Output::SDeepQuantumLimit,
        Output::SAnsatz,
        Output::MuClosed,
        Output::SAbsDiff,
        Output::SRelDiff,
        Output::NEq5,
        Output::NSse,
        Output::NMeanField,
        Output::NDeepQuantumLimit,
        Output::NAnsatz,
        Output::OmegaTh,
        Output::DeltaObs,
        Output::DeltaRel,
        Output::DeltaObsHarmonic,
        Output::DeltaRelHarmonic,
        Output::DeltaObsSqueeze,
        Output::DeltaRelSqueeze,
    ];

    pub fn column(self) -> &'static str {
        match self {
            Output::NNumeric => "N_numeric",
            Output::N0Numeric => "N0_numeric",
            Output::DeltaN => "delta_N",
            Output::RelDistortion => "rel_distortion",
            Output::SNumeric => "S_numeric",
            Output::MuNumeric => "mu_numeric",
            Output::PhaseDefined => "phase_defined",
            Output::Coh01 => "coh_01",
            Output::Coh02 => "coh_02",
            Output::Coh12 => "coh_12",
            Output::SNoiseless => "S_noiseless",
            Output::SDeepQuantumLimit => "S_deep_quantum_limit",
            Output::SAnsatz => "S_ansatz",
            Output::MuClosed => "mu_closed",
            Output::SAbsDiff => "S_abs_diff",
            Output::SRelDiff => "S_rel_diff",
            Output::NEq5 => "N_eq5",
            Output::NSse => "N_sse",
            Output::NMeanField => "N_meanfield",
            Output::NDeepQuantumLimit => "N_deep_quantum_limit",
            Output::NAnsatz => "N_ansatz",
            Output::OmegaTh => "omega_th",
            Output::DeltaObs => "delta_obs",
            Output::DeltaRel => "delta_rel",
            Output::DeltaObsHarmonic => "delta_obs_harmonic",
            Output::DeltaRelHarmonic => "delta_rel_harmonic",
            Output::DeltaObsSqueeze => "delta_obs_squeeze",
            Output::DeltaRelSqueeze => "delta_rel_squeeze",
        }
    }

    pub fn needs_epsilon(self) -> bool {
        matches!(self, Output::OmegaTh)
    }

    pub fn needs_drive_strength(self) -> bool {
        matches!(
            self,
            Output::DeltaObsHarmonic
                | Output::DeltaRelHarmonic
                | Output::DeltaObsSqueeze
                | Output::DeltaRelSqueeze
        )
    }
}

impl fmt::Display for Output {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

/// A parameter sweep: one or two axes, fixed values for the rest, and the
/// columns to compute at every grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Ranges or drive strengths chosen without a published value.
    #[serde(default)]
    pub reconstructed: bool,
    pub outputs: Vec<Output>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_override: Option<usize>,
    /// Set the harmonic drive of every point to the threshold drive.
    #[serde(default)]
    pub omega_from_threshold: bool,
    #[serde(default)]
    pub threshold_rule: ThresholdRule,
    #[serde(default)]
    pub sync_reference: SyncReference,
    /// Strength of the separate harmonic and squeeze drives used by the
    /// `*_harmonic` and `*_squeeze` columns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive_strength: Option<f64>,
    #[serde(default)]
    pub fixed: BTreeMap<Param, f64>,
    pub axes: Vec<Axis>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| SweepError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SweepError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario configs always serialize")
    }

    /// Hex SHA-256 of the canonical TOML form.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SweepError::Config(msg));
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad(format!("invalid scenario name {:?}", self.name));
        }
        if !(1..=2).contains(&self.axes.len()) {
            return bad(format!("a scenario needs 1 or 2 axes, found {}", self.axes.len()));
        }
        for axis in &self.axes {
            axis.validate()?;
        }
        if self.axes.len() == 2 && self.axes[0].param == self.axes[1].param {
            return bad(format!("axis {} appears twice", self.axes[0].param));
        }
        for axis in &self.axes {
            if self.fixed.contains_key(&axis.param) {
                return bad(format!("{} is both swept and fixed", axis.param));
            }
        }
        for (param, value) in &self.fixed {
            if !value.is_finite() {
                return bad(format!("fixed {param} is not finite"));
            }
        }
        if self.outputs.is_empty() {
            return bad("no outputs requested".into());
        }
        for (i, o) in self.outputs.iter().enumerate() {
            if self.outputs[..i].contains(o) {
                return bad(format!("output {o} listed twice"));
            }
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0 && eps.is_finite()) {
                return bad(format!("epsilon must be positive, got {eps}"));
            }
        }
        let needs_eps = self.omega_from_threshold || self.outputs.iter().any(|o| o.needs_epsilon());
        if needs_eps && self.epsilon.is_none() {
            return bad("threshold drive requested without epsilon".into());
        }
        if self.omega_from_threshold && self.is_set(Param::Omega) {
            return bad("Omega_ratio cannot be set when omega_from_threshold is on".into());
        }
        if self.outputs.iter().any(|o| o.needs_drive_strength()) {
            match self.drive_strength {
                Some(w) if w > 0.0 && w.is_finite() => {}
                _ => return bad("harmonic/squeeze comparison columns need a positive drive_strength".into()),
            }
        }
        if let Some(d) = self.dim_override {
            if d < qvdp_core::FockDim::MIN {
                return bad(format!("dim_override must be at least {}", qvdp_core::FockDim::MIN));
            }
        }
        if !self.is_set(Param::Gamma2) {
            return bad("gamma2_ratio must be fixed or swept".into());
        }
        Ok(())
    }

    fn is_set(&self, param: Param) -> bool {
        self.fixed.contains_key(&param) || self.axes.iter().any(|a| a.param == param)
    }

    pub fn row_count(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    /// Grid points with the first axis as the outer (slow) index.
    pub fn grid(&self) -> Vec<SystemParams> {
        let mut base = SystemParams::in_units_of_gamma1(0.0, 0.0, 0.0, 0.0, 0.0);
        for (&param, &value) in &self.fixed {
            base = param.set(base, value);
        }
        let outer = &self.axes[0];
        let inner = self.axes.get(1);
        let mut points = Vec::with_capacity(self.row_count());
        for a in outer.values() {
            let p = outer.param.set(base, a);
            match inner {
                None => points.push(p),
                Some(ax) => points.extend(ax.values().into_iter().map(|b| ax.param.set(p, b))),
            }
        }
        points
    }
}
