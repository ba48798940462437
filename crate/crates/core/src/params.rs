use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rates and drive strengths of the driven oscillator.
///
/// `gamma1` (single-photon pump) sets the unit of every other rate. The
/// remaining fields are two-photon loss `gamma2`, single-photon loss `kappa`,
/// detuning `delta = ω₀ − ω_d`, harmonic drive `omega` and squeeze drive `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub kappa: f64,
    pub delta: f64,
    pub omega: f64,
    pub eta: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            gamma1: 1.0,
            gamma2: 1.0,
            kappa: 0.0,
            delta: 0.0,
            omega: 0.0,
            eta: 0.0,
        }
    }
}

impl SystemParams {
    /// Parameters in units of `gamma1` (which is fixed to 1).
    pub fn in_units_of_gamma1(gamma2: f64, kappa: f64, delta: f64, omega: f64, eta: f64) -> Self {
        Self {
            gamma1: 1.0,
            gamma2,
            kappa,
            delta,
            omega,
            eta,
        }
    }

    pub fn with_gamma2(self, gamma2: f64) -> Self {
        Self { gamma2, ..self }
    }

    pub fn with_kappa(self, kappa: f64) -> Self {
        Self { kappa, ..self }
    }

    pub fn with_delta(self, delta: f64) -> Self {
        Self { delta, ..self }
    }

    pub fn with_omega(self, omega: f64) -> Self {
        Self { omega, ..self }
    }

    pub fn with_eta(self, eta: f64) -> Self {
        Self { eta, ..self }
    }

    /// Same point with both drives switched off.
    pub fn undriven(self) -> Self {
        Self {
            omega: 0.0,
            eta: 0.0,
            ..self
        }
    }

    pub fn damping_ratio(&self) -> f64 {
        self.gamma2 / self.gamma1
    }

    /// True when the Hamiltonian commutes with `a†a` and every steady state is
    /// diagonal in the Fock basis.
    pub fn is_phase_symmetric(&self) -> bool {
        self.omega == 0.0 && self.eta == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("kappa", self.kappa),
            ("delta", self.delta),
            ("omega", self.omega),
            ("eta", self.eta),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite, got {v}")));
            }
        }
        if self.gamma1 <= 0.0 {
            return Err(Error::Config(format!(
                "gamma1 must be positive, got {}",
                self.gamma1
            )));
        }
        for (name, v) in [
            ("gamma2", self.gamma2),
            ("kappa", self.kappa),
            ("omega", self.omega),
            ("eta", self.eta),
        ] {
            if v < 0.0 {
                return Err(Error::Config(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// Validation plus the requirement that some loss channel balances the pump.
    pub fn validate_dissipative(&self) -> Result<()> {
        self.validate()?;
        if self.gamma2 == 0.0 && self.kappa == 0.0 {
            return Err(Error::NoSteadyState(
                "pure gain (gamma2 = kappa = 0) has no normalizable steady state".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nan_and_negative_rates() {
        let ok = SystemParams::in_units_of_gamma1(1.0, 0.5, -0.3, 0.2, 0.0);
        assert!(ok.validate().is_ok());
        assert!(ok.with_kappa(f64::NAN).validate().is_err());
        assert!(ok.with_omega(-1.0).validate().is_err());
        assert!(SystemParams { gamma1: 0.0, ..ok }.validate().is_err());
        // negative detuning is physical
        assert!(ok.with_delta(-5.0).validate().is_ok());
    }

    #[test]
    fn pure_gain_is_rejected() {
        let p = SystemParams::in_units_of_gamma1(0.0, 0.0, 0.0, 0.0, 0.0);
        assert!(matches!(
            p.validate_dissipative(),
            Err(Error::NoSteadyState(_))
        ));
        assert!(p.with_kappa(0.1).validate_dissipative().is_ok());
    }
}
