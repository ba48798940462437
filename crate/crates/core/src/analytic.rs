//! Closed-form steady-state results for the harmonically driven oscillator.
//!
//! The three-level ansatz keeps `ρ₀₀, ρ₁₁, ρ₂₂` and the single coherence
//! `ρ₀₁`; every limit (`κ → 0`, `γ₂/γ₁ → ∞`) is coded as its own function so
//! each printed expression can be checked on its own. All formulas are
//! homogeneous in the rates, so any `gamma1 > 0` may be used.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::observables::PHASE_UNDEFINED_BELOW;
use crate::params::SystemParams;

/// Regimes of the damping ratio `γ₂/γ₁` and the analytic method that works in each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AnalyticRegime {
    ClassicalLimit,
    SemiClassical,
    Quantum,
    DeepQuantum,
    DeepQuantumLimit,
}

impl AnalyticRegime {
    pub const SEMI_CLASSICAL_MAX: f64 = 0.1;
    pub const DEEP_QUANTUM_MIN: f64 = 10.0;

    pub fn classify(damping_ratio: f64) -> Self {
        if damping_ratio == 0.0 {
            Self::ClassicalLimit
        } else if damping_ratio.is_infinite() {
            Self::DeepQuantumLimit
        } else if damping_ratio <= Self::SEMI_CLASSICAL_MAX {
            Self::SemiClassical
        } else if damping_ratio >= Self::DEEP_QUANTUM_MIN {
            Self::DeepQuantum
        } else {
            Self::Quantum
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::ClassicalLimit => "classical-limit",
            Self::SemiClassical => "semi-classical",
            Self::Quantum => "quantum",
            Self::DeepQuantum => "deep-quantum",
            Self::DeepQuantumLimit => "deep-quantum-limit",
        }
    }

    pub fn method(self) -> &'static str {
        match self {
            Self::ClassicalLimit => "mean-field",
            Self::SemiClassical => "system size expansion",
            Self::Quantum => "none",
            Self::DeepQuantum | Self::DeepQuantumLimit => "density matrix ansatz",
        }
    }
}

/// Steady state of the three-level ansatz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnsatzState {
    pub rho00: f64,
    pub rho11: f64,
    pub rho22: f64,
    pub rho01: Complex64,
    /// Common denominator of all elements.
    pub denominator: f64,
}

impl AnsatzState {
    pub fn amplitude(&self) -> f64 {
        self.rho11 + 2.0 * self.rho22
    }

    /// `S = |ρ₀₁|`.
    pub fn sync(&self) -> f64 {
        self.rho01.norm()
    }

    /// Mean direction in the numerics' convention, `arg ⟨e^{iφ}⟩ = arg ρ₁₀`.
    pub fn mu(&self) -> f64 {
        self.rho01.conj().arg()
    }
}

/// `(3γ₁+κ)² + 4δ² = 6γ₁κ + 9γ₁² + 4δ² + κ²`.
fn detuned_width_sq(p: &SystemParams) -> f64 {
    let w = 3.0 * p.gamma1 + p.kappa;
    w * w + 4.0 * p.delta * p.delta
}

/// Full ansatz elements (harmonic drive only).
pub fn ansatz_elements(p: &SystemParams) -> Result<AnsatzState> {
    if p.eta != 0.0 {
        return Err(Error::NotApplicable(
            "the three-level ansatz covers harmonic driving only (eta = 0)".into(),
        ));
    }
    if !(p.gamma2 > 0.0) {
        return Err(Error::NotApplicable("the ansatz needs gamma2 > 0".into()));
    }
    let (g1, g2, k, d, w) = (p.gamma1, p.gamma2, p.kappa, p.delta, p.omega);
    let (d2, k2, w2) = (d * d, k * k, w * w);
    let a = detuned_width_sq(p);

    let denominator = g1
        * (4.0 * g1 * (d2 + 4.0 * k2 + 3.0 * w2)
            + 15.0 * g1 * g1 * k
            + 9.0 * g1.powi(3)
            + 4.0 * d2 * k
            + 7.0 * k * (k2 + 4.0 * w2))
        + g2 * (3.0 * g1 + k) * (a + 8.0 * w2)
        + k2 * (4.0 * d2 + k2 + 8.0 * w2);

    let n00 = 2.0 * g1 * (g2 * (4.0 * (d2 + k2) + 6.0 * w2) + 3.0 * k * (k2 + 2.0 * w2))
        + k * (g2 + k) * (4.0 * d2 + k2 + 4.0 * w2)
        + 3.0 * g1 * g1 * k * (7.0 * g2 + 3.0 * k)
        + 18.0 * g2 * g1.powi(3);
    let pumped = g1 * (a + 12.0 * w2) + 4.0 * k * w2;
    let n11 = (g2 + k) * pumped;
    let n22 = g1 * pumped;
    let n01 = Complex64::new(-2.0 * w * (g1 * (g2 - k) + k * (g2 + k)), 0.0)
        * Complex64::new(2.0 * d, -(3.0 * g1 + k));

    Ok(AnsatzState {
        rho00: n00 / denominator,
        rho11: n11 / denominator,
        rho22: n22 / denominator,
        rho01: n01 / denominator,
        denominator,
    })
}

/// Closed forms for the limit-cycle amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AmplitudeFormula {
    /// Driven amplitude for `γ₂/γ₁ → ∞`.
    DeepQuantumLimitDriven,
    /// Undriven ansatz amplitude at finite `γ₂`.
    UndrivenAnsatz,
    /// Undriven amplitude for `γ₂/γ₁ → ∞`, `γ₁/(3γ₁+κ)`.
    UndrivenDeepQuantumLimit,
    /// Semi-classical system size expansion, `(γ₁ + 2γ₂ − κ)/(2γ₂)`.
    SystemSizeExpansion,
    /// Stationary `|α|²` of the mean-field equation of motion.
    MeanField,
}

/// `lim N` for `γ₂/γ₁ → ∞` with harmonic drive.
pub fn amplitude_deep_quantum_limit(p: &SystemParams) -> f64 {
    let (g1, k, w2) = (p.gamma1, p.kappa, p.omega * p.omega);
    let a = detuned_width_sq(p);
    (g1 * (a + 12.0 * w2) + 4.0 * k * w2) / ((3.0 * g1 + k) * (a + 8.0 * w2))
}

/// Undriven ansatz amplitude `N₀`.
pub fn undriven_amplitude(p: &SystemParams) -> f64 {
    let (g1, g2, k) = (p.gamma1, p.gamma2, p.kappa);
    g1 * (2.0 * g1 + g2 + k) / (g1 * (3.0 * g2 + k) + k * (g2 + k) + g1 * g1)
}

/// `lim N₀ = γ₁/(3γ₁+κ)`.
pub fn undriven_amplitude_deep_quantum_limit(p: &SystemParams) -> f64 {
    p.gamma1 / (3.0 * p.gamma1 + p.kappa)
}

pub fn undriven_amplitude_sse(p: &SystemParams) -> Result<f64> {
    if !(p.gamma2 > 0.0) {
        return Err(Error::NotApplicable("system size expansion needs gamma2 > 0".into()));
    }
    Ok((p.gamma1 + 2.0 * p.gamma2 - p.kappa) / (2.0 * p.gamma2))
}

/// Mean-field vector field
/// `α̇ = (γ₁ − κ)/2 α − γ₂|α|²α − i(δα + Ω + 2η α*)`.
pub fn mean_field_rhs(p: &SystemParams, alpha: Complex64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    let gain = 0.5 * (p.gamma1 - p.kappa);
    alpha * gain
        - alpha * (p.gamma2 * alpha.norm_sqr())
        - i * (alpha * p.delta + p.omega + alpha.conj() * (2.0 * p.eta))
}

/// Stationary mean-field `|α|²`.
///
/// Without drives this is `max(0, (γ₁ − κ)/(2γ₂))`. With a harmonic drive
/// only, `N` solves `((g − γ₂N)² + δ²) N = Ω²` with `g = (γ₁ − κ)/2`; the
/// largest root whose fixed point is linearly stable is returned.
pub fn mean_field_amplitude(p: &SystemParams) -> Result<f64> {
    if !(p.gamma2 > 0.0) {
        return Err(Error::NotApplicable("mean-field amplitude needs gamma2 > 0".into()));
    }
    if p.eta != 0.0 {
        return Err(Error::NotApplicable(
            "mean-field closed form covers harmonic driving only".into(),
        ));
    }
    let g = 0.5 * (p.gamma1 - p.kappa);
    if p.omega == 0.0 {
        return Ok((g / p.gamma2).max(0.0));
    }
    // γ₂² N³ − 2gγ₂ N² + (g² + δ²) N − Ω² = 0
    let roots = real_cubic_roots(
        p.gamma2 * p.gamma2,
        -2.0 * g * p.gamma2,
        g * g + p.delta * p.delta,
        -p.omega * p.omega,
    );
    let stable = |n: f64| {
        // Jacobian of the amplitude/phase dynamics at the fixed point:
        // trace = 2(g − 2γ₂N) < 0 and det = (g − γ₂N)(g − 3γ₂N) + δ² > 0.
        let tr = 2.0 * (g - 2.0 * p.gamma2 * n);
        let det = (g - p.gamma2 * n) * (g - 3.0 * p.gamma2 * n) + p.delta * p.delta;
        tr < 0.0 && det > 0.0
    };
    roots
        .into_iter()
        .filter(|&n| n > 0.0 && stable(n))
        .fold(None, |best: Option<f64>, n| Some(best.map_or(n, |b| b.max(n))))
        .ok_or_else(|| {
            Error::NotApplicable("no stable mean-field fixed point (unlocked drive)".into())
        })
}

fn real_cubic_roots(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    // depressed cubic t³ + pt + q with x = t − b/(3a)
    let (b, c, d) = (b / a, c / a, d / a);
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b.powi(3) / 27.0 - b * c / 3.0 + d;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let mut roots = if disc > 0.0 {
        let s = disc.sqrt();
        vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt()]
    } else if p == 0.0 {
        vec![0.0]
    } else {
        let r = (-p / 3.0).sqrt();
        let phi = (-q / (2.0 * r.powi(3))).clamp(-1.0, 1.0).acos();
        (0..3)
            .map(|k| 2.0 * r * ((phi - 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos())
            .collect()
    };
    for x in roots.iter_mut() {
        *x -= shift;
        // one Newton polish step
        let f = ((*x + b) * *x + c) * *x + d;
        let df = (3.0 * *x + 2.0 * b) * *x + c;
        if df != 0.0 {
            *x -= f / df;
        }
    }
    roots
}

/// Amplitude by explicit formula.
pub fn amplitude_by(p: &SystemParams, formula: AmplitudeFormula) -> Result<f64> {
    match formula {
        AmplitudeFormula::DeepQuantumLimitDriven => {
            no_squeeze(p)?;
            Ok(amplitude_deep_quantum_limit(p))
        }
        AmplitudeFormula::UndrivenAnsatz => Ok(undriven_amplitude(p)),
        AmplitudeFormula::UndrivenDeepQuantumLimit => Ok(undriven_amplitude_deep_quantum_limit(p)),
        AmplitudeFormula::SystemSizeExpansion => undriven_amplitude_sse(p),
        AmplitudeFormula::MeanField => mean_field_amplitude(p),
    }
}

/// Amplitude using the method that applies in `regime`.
pub fn amplitude_closed(p: &SystemParams, regime: AnalyticRegime) -> Result<f64> {
    match regime {
        AnalyticRegime::DeepQuantumLimit => {
            amplitude_by(p, AmplitudeFormula::DeepQuantumLimitDriven)
        }
        AnalyticRegime::DeepQuantum => Ok(ansatz_elements(p)?.amplitude()),
        AnalyticRegime::SemiClassical => amplitude_by(p, AmplitudeFormula::SystemSizeExpansion),
        AnalyticRegime::ClassicalLimit => amplitude_by(p, AmplitudeFormula::MeanField),
        AnalyticRegime::Quantum => Err(Error::NotApplicable(
            "no analytic amplitude in the quantum regime".into(),
        )),
    }
}

fn no_squeeze(p: &SystemParams) -> Result<()> {
    if p.eta != 0.0 {
        return Err(Error::NotApplicable(
            "closed forms cover harmonic driving only (eta = 0)".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SyncLimit {
    /// `γ₂/γ₁ → ∞`; `gamma2` is ignored.
    DeepQuantumLimit,
    /// `κ → 0`; requires `kappa == 0`.
    Noiseless,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedSync {
    pub s: f64,
    /// `arg ⟨e^{iφ}⟩`, same convention as [`crate::observables::sync_measure`].
    pub mu: f64,
    pub phase_defined: bool,
}

/// `lim S` for `γ₂/γ₁ → ∞`.
pub fn sync_deep_quantum_limit(p: &SystemParams) -> f64 {
    let (g1, k) = (p.gamma1, p.kappa);
    let a = detuned_width_sq(p);
    2.0 * p.omega * (g1 + k) * a.sqrt() / ((3.0 * g1 + k) * (a + 8.0 * p.omega * p.omega))
}

/// `lim S` for `κ → 0` at finite `γ₂`.
pub fn sync_noiseless(p: &SystemParams) -> f64 {
    let (g1, g2, d, w) = (p.gamma1, p.gamma2, p.delta, p.omega);
    2.0 * g2 * w * (9.0 * g1 * g1 + 4.0 * d * d).sqrt()
        / (4.0 * g1 * (d * d + 3.0 * w * w)
            + 3.0 * g2 * (9.0 * g1 * g1 + 4.0 * d * d + 8.0 * w * w)
            + 9.0 * g1.powi(3))
}

/// Mean direction of the ansatz coherence: `arg(−2δ − i(3γ₁+κ))`, which is
/// −π/2 on resonance.
pub fn mean_direction(p: &SystemParams) -> f64 {
    Complex64::new(-2.0 * p.delta, -(3.0 * p.gamma1 + p.kappa)).arg()
}

/// Printed single-branch form `−arctan((κ+3γ₁)/(2δ))`, continued to −π/2 at
/// `δ = 0`. It equals `arg ρ₀₁ = −mean_direction` modulo π.
pub fn mean_direction_arctan(p: &SystemParams) -> f64 {
    if p.delta == 0.0 {
        -FRAC_PI_2
    } else {
        -((p.kappa + 3.0 * p.gamma1) / (2.0 * p.delta)).atan()
    }
}

/// Reduces an angle to [−π/2, π/2) modulo π.
pub fn wrap_mod_pi(x: f64) -> f64 {
    let pi = std::f64::consts::PI;
    (x + FRAC_PI_2).rem_euclid(pi) - FRAC_PI_2
}

pub fn sync_closed(p: &SystemParams, limit: SyncLimit) -> Result<ClosedSync> {
    no_squeeze(p)?;
    let s = match limit {
        SyncLimit::DeepQuantumLimit => sync_deep_quantum_limit(p),
        SyncLimit::Noiseless => {
            if p.kappa != 0.0 {
                return Err(Error::NotApplicable(
                    "noiseless closed form requires kappa = 0".into(),
                ));
            }
            sync_noiseless(p)
        }
    };
    let phase_defined = s >= PHASE_UNDEFINED_BELOW;
    Ok(ClosedSync {
        s,
        mu: if phase_defined { mean_direction(p) } else { 0.0 },
        phase_defined,
    })
}

/// Cardioid phase density `(1/2π)(1 + 2S cos(φ − μ))` with `μ = arg⟨e^{iφ}⟩`.
pub fn cardioid_density(s: f64, mu: f64, phi: f64) -> f64 {
    (1.0 + 2.0 * s * (phi - mu).cos()) / (2.0 * std::f64::consts::PI)
}

/// Cardioid prefactor of the deep-quantum-limit phase distribution,
/// `4Ω(κ+γ₁)/A · √(1 + 4δ²/(κ+3γ₁)²)`, which is twice its MRL.
pub fn cardioid_modulation_deep_quantum_limit(p: &SystemParams) -> f64 {
    let (g1, k) = (p.gamma1, p.kappa);
    let a = detuned_width_sq(p) + 8.0 * p.omega * p.omega;
    let w = k + 3.0 * g1;
    4.0 * p.omega * (k + g1) / a * (1.0 + 4.0 * p.delta * p.delta / (w * w)).sqrt()
}

/// Drive at which the deep-quantum-limit amplitude grows by `epsilon`.
pub fn distortion_bound(p: &SystemParams) -> f64 {
    (p.gamma1 + p.kappa) / (2.0 * (3.0 * p.gamma1 + p.kappa))
}

/// Threshold drive `Ω_th`, the positive root of
/// `Ω² = ε(3γ₁+κ)A / (4[γ₁(1−6ε) + κ(1−2ε)])`, `A = (3γ₁+κ)² + 4δ²`.
///
/// In the deep quantum limit this drive raises the amplitude by exactly
/// `N − N₀ = ε`.
pub fn threshold_drive(p: &SystemParams, epsilon: f64) -> Result<f64> {
    let bound = distortion_bound(p);
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    if epsilon >= bound {
        return Err(Error::UnattainableDistortion { epsilon, bound });
    }
    let (g1, k) = (p.gamma1, p.kappa);
    let num = epsilon * (3.0 * g1 + k) * detuned_width_sq(p);
    let den = 4.0 * (g1 * (1.0 - 6.0 * epsilon) + k * (1.0 - 2.0 * epsilon));
    Ok((num / den).sqrt())
}

/// Drive at which the deep-quantum-limit amplitude grows by the relative
/// amount `(N − N₀)/N₀ = ε`:
/// `Ω² = εγ₁A / (4[γ₁(1−2ε) + κ])`, defined for `ε < (γ₁+κ)/(2γ₁)`.
pub fn threshold_drive_relative(p: &SystemParams, epsilon: f64) -> Result<f64> {
    let bound = (p.gamma1 + p.kappa) / (2.0 * p.gamma1);
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    if epsilon >= bound {
        return Err(Error::UnattainableDistortion { epsilon, bound });
    }
    let g1 = p.gamma1;
    let num = epsilon * g1 * detuned_width_sq(p);
    let den = 4.0 * (g1 * (1.0 - 2.0 * epsilon) + p.kappa);
    Ok((num / den).sqrt())
}

/// Drive maximizing the deep-quantum-limit `S` at fixed `κ, δ`: `8Ω² = A`.
pub fn optimal_drive_deep_quantum_limit(p: &SystemParams) -> f64 {
    (detuned_width_sq(p) / 8.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoostAnalysis {
    /// `∂S/∂κ` at `κ = 0`, resonant deep-quantum-limit form.
    pub ds_dkappa_at_zero: f64,
    /// Necessary condition `γ₂/γ₁ > 1 − 3/(4(δ/γ₁)² + 12)` for noise to help.
    pub boost_possible: bool,
    /// Right-hand side of the condition above.
    pub ratio_threshold: f64,
}

pub fn boost_analysis(p: &SystemParams) -> Result<BoostAnalysis> {
    if !(p.omega > 0.0) {
        return Err(Error::NotApplicable("boost analysis needs omega > 0".into()));
    }
    let (g1, w2) = (p.gamma1, p.omega * p.omega);
    let ds = 2.0 * p.omega * (3.0 * g1 * g1 + 8.0 * w2) / (9.0 * g1 * g1 + 8.0 * w2).powi(2);
    let x = p.delta / g1;
    let ratio_threshold = 1.0 - 3.0 / (4.0 * x * x + 12.0);
    Ok(BoostAnalysis {
        ds_dkappa_at_zero: ds,
        boost_possible: p.gamma2 / g1 > ratio_threshold,
        ratio_threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(gamma2: f64, kappa: f64, delta: f64, omega: f64) -> SystemParams {
        SystemParams::in_units_of_gamma1(gamma2, kappa, delta, omega, 0.0)
    }

    #[test]
    fn regime_labels() {
        assert_eq!(AnalyticRegime::classify(0.0), AnalyticRegime::ClassicalLimit);
        assert_eq!(AnalyticRegime::classify(0.05), AnalyticRegime::SemiClassical);
        assert_eq!(AnalyticRegime::classify(1.0), AnalyticRegime::Quantum);
        assert_eq!(AnalyticRegime::classify(10.0), AnalyticRegime::DeepQuantum);
        assert_eq!(AnalyticRegime::classify(f64::INFINITY), AnalyticRegime::DeepQuantumLimit);
        assert_eq!(AnalyticRegime::DeepQuantum.method(), "density matrix ansatz");
        assert!(amplitude_closed(&p(1.0, 0.0, 0.0, 0.0), AnalyticRegime::Quantum).is_err());
    }

    #[test]
    fn undriven_ansatz_matches_n0() {
        for (g2, k) in [(100.0, 0.0), (3.0, 0.7), (0.5, 2.0)] {
            let params = p(g2, k, 0.3, 0.0);
            let st = ansatz_elements(&params).unwrap();
            assert_eq!(st.rho01, Complex64::new(0.0, 0.0));
            assert_relative_eq!(st.amplitude(), undriven_amplitude(&params), max_relative = 1e-13);
        }
    }

    #[test]
    fn noiseless_ansatz_matches_kappa_zero_formula() {
        let params = p(37.0, 0.0, -0.8, 0.6);
        let st = ansatz_elements(&params).unwrap();
        assert_relative_eq!(st.sync(), sync_noiseless(&params), max_relative = 1e-13);
    }

    #[test]
    fn squeeze_is_not_applicable() {
        let params = SystemParams::in_units_of_gamma1(10.0, 0.0, 0.0, 0.1, 0.2);
        assert!(matches!(ansatz_elements(&params), Err(Error::NotApplicable(_))));
        assert!(sync_closed(&params, SyncLimit::DeepQuantumLimit).is_err());
    }

    #[test]
    fn undriven_deep_quantum_values() {
        assert_relative_eq!(
            undriven_amplitude_deep_quantum_limit(&p(1.0, 0.0, 0.0, 0.0)),
            1.0 / 3.0
        );
        assert_relative_eq!(undriven_amplitude_deep_quantum_limit(&p(1.0, 1.0, 0.0, 0.0)), 0.25);
    }

    #[test]
    fn sse_and_mean_field_values() {
        let params = p(0.05, 0.0, 0.0, 0.0);
        assert_relative_eq!(undriven_amplitude_sse(&params).unwrap(), 11.0, max_relative = 1e-14);
        assert_relative_eq!(mean_field_amplitude(&params).unwrap(), 10.0, max_relative = 1e-14);
        assert!(undriven_amplitude_sse(&p(0.0, 0.0, 0.0, 0.0)).is_err());
        assert!(mean_field_amplitude(&p(0.0, 0.0, 0.0, 0.0)).is_err());
        // SSE tends to 1, not 1/3, deep in the quantum regime
        assert_relative_eq!(undriven_amplitude_sse(&p(1e9, 0.0, 0.0, 0.0)).unwrap(), 1.0, max_relative = 1e-8);
    }

    #[test]
    fn mean_field_fixed_point_by_integration() {
        // RK4 to stationarity from a generic start
        for params in [p(0.05, 0.0, 0.0, 0.0), p(0.2, 0.1, 0.3, 0.4)] {
            let mut alpha = Complex64::new(0.7, 0.2);
            let h = 0.01;
            for _ in 0..200_000 {
                let k1 = mean_field_rhs(&params, alpha);
                let k2 = mean_field_rhs(&params, alpha + k1 * (h / 2.0));
                let k3 = mean_field_rhs(&params, alpha + k2 * (h / 2.0));
                let k4 = mean_field_rhs(&params, alpha + k3 * h);
                alpha += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            }
            assert_relative_eq!(
                alpha.norm_sqr(),
                mean_field_amplitude(&params).unwrap(),
                max_relative = 1e-8
            );
        }
    }

    #[test]
    fn zero_drive_gives_zero_sync() {
        let out = sync_closed(&p(10.0, 0.3, 0.5, 0.0), SyncLimit::DeepQuantumLimit).unwrap();
        assert_eq!(out.s, 0.0);
        assert!(!out.phase_defined);
        assert!(sync_closed(&p(10.0, 0.3, 0.5, 0.1), SyncLimit::Noiseless).is_err());
    }

    #[test]
    fn deep_quantum_sync_upper_bound() {
        let noisy = p(1.0, 1e6, 0.0, 0.0);
        let s = sync_deep_quantum_limit(&noisy.with_omega(optimal_drive_deep_quantum_limit(&noisy)));
        assert!((s - 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-5, "{s}");
        assert!((s - 0.3536).abs() < 1e-4);
    }

    #[test]
    fn arctan_form_agrees_mod_pi() {
        for d in [-2.0, -0.3, 0.0, 0.4, 1.0, 3.0] {
            let params = p(5.0, 0.7, d, 0.2);
            let lhs = wrap_mod_pi(mean_direction_arctan(&params));
            let rhs = wrap_mod_pi(ansatz_elements(&params).unwrap().rho01.arg());
            assert!((lhs - rhs).abs() < 1e-12, "δ={d}: {lhs} vs {rhs}");
            assert!((mean_direction(&params) - ansatz_elements(&params).unwrap().mu()).abs() < 1e-12);
        }
        assert_relative_eq!(mean_direction(&p(5.0, 0.0, 0.0, 0.2)), -FRAC_PI_2);
    }

    #[test]
    fn threshold_values_and_bound() {
        let params = p(1e4, 0.0, 0.0, 0.0);
        let w = threshold_drive(&params, 0.1).unwrap();
        assert_relative_eq!(w * w, 1.6875, max_relative = 1e-14);
        assert_relative_eq!(w, 1.299038105676658, max_relative = 1e-12);
        assert_eq!(distortion_bound(&params), 1.0 / 6.0);
        assert!(matches!(
            threshold_drive(&params, 1.0 / 6.0),
            Err(Error::UnattainableDistortion { .. })
        ));
        assert!(threshold_drive(&params, 0.0).is_err());
        // diverges as epsilon approaches the bound
        let near = threshold_drive(&params, 1.0 / 6.0 - 1e-9).unwrap();
        assert!(near > 1e3);
    }

    #[test]
    fn threshold_drive_distorts_by_epsilon() {
        for (k, d) in [(0.0, 0.0), (0.5, 0.3), (2.0, -1.0)] {
            let base = p(1e4, k, d, 0.0);
            let w = threshold_drive(&base, 0.1).unwrap();
            let n = amplitude_deep_quantum_limit(&base.with_omega(w));
            let n0 = undriven_amplitude_deep_quantum_limit(&base);
            assert_relative_eq!(n - n0, 0.1, max_relative = 1e-12);
        }
    }

    #[test]
    fn relative_threshold_distorts_by_epsilon_relative() {
        for (k, d) in [(0.0, 0.0), (0.5, 0.3), (4.0, -1.0)] {
            let base = p(1e4, k, d, 0.0);
            let w = threshold_drive_relative(&base, 0.1).unwrap();
            let n = amplitude_deep_quantum_limit(&base.with_omega(w));
            let n0 = undriven_amplitude_deep_quantum_limit(&base);
            assert_relative_eq!((n - n0) / n0, 0.1, max_relative = 1e-12);
        }
        assert!(threshold_drive_relative(&p(1.0, 0.0, 0.0, 0.0), 0.5).is_err());
    }

    #[test]
    fn threshold_sync_monotone_under_absolute_rule() {
        // Eq-10 threshold: S keeps growing with noise toward its κ → ∞ value
        let s_at = |k: f64| {
            let base = p(1e4, k, 0.0, 0.0);
            sync_deep_quantum_limit(&base.with_omega(threshold_drive(&base, 0.1).unwrap()))
        };
        let ks = [0.0, 1.0, 10.0, 100.0, 1000.0];
        assert!(ks.windows(2).all(|w| s_at(w[1]) > s_at(w[0])));
        let rel_at = |k: f64| {
            let base = p(1e4, k, 0.0, 0.0);
            sync_deep_quantum_limit(&base.with_omega(threshold_drive_relative(&base, 0.1).unwrap()))
        };
        assert!(rel_at(1.0) > rel_at(0.0) && rel_at(10.0) < rel_at(1.0));
    }

    #[test]
    fn boost_signs() {
        let dq = boost_analysis(&p(1e4, 0.0, 0.0, 0.5)).unwrap();
        assert!(dq.ds_dkappa_at_zero > 0.0);
        assert!(dq.boost_possible);
        let low = boost_analysis(&p(0.7, 0.0, 0.0, 0.5)).unwrap();
        assert!(!low.boost_possible);
        assert_relative_eq!(low.ratio_threshold, 0.75);
        assert!(boost_analysis(&p(1.0, 0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn boost_sign_from_ansatz_finite_difference() {
        let h = 1e-4;
        let s_at = |params: SystemParams| ansatz_elements(&params).unwrap().sync();
        for (g2, d, expect_gain) in [(50.0, 0.0, true), (20.0, 1.0, true), (0.6, 0.0, false), (0.5, 0.5, false)] {
            let base = p(g2, 0.0, d, 0.4);
            let fd = (s_at(base.with_kappa(h)) - s_at(base.with_kappa(-h))) / (2.0 * h);
            let b = boost_analysis(&base).unwrap();
            assert_eq!(b.boost_possible, expect_gain);
            if !b.boost_possible {
                assert!(fd <= 0.0, "g2={g2} d={d} fd={fd}");
            } else {
                assert!(fd > 0.0, "g2={g2} d={d} fd={fd}");
            }
        }
    }

    #[test]
    fn deep_quantum_derivative_matches_finite_difference() {
        let h = 1e-5;
        for w in [0.1, 0.5, 1.3, 4.0] {
            let base = p(1.0, 0.0, 0.0, w);
            let fd = (sync_deep_quantum_limit(&base.with_kappa(h))
                - sync_deep_quantum_limit(&base.with_kappa(-h)))
                / (2.0 * h);
            assert_relative_eq!(
                fd,
                boost_analysis(&base).unwrap().ds_dkappa_at_zero,
                max_relative = 1e-7
            );
        }
    }
}
