//! Built-in scenarios, one per published figure panel plus the analytic
//! comparison maps.

use std::collections::BTreeMap;

use crate::config::{Axis, Output, Param, ScenarioConfig, SyncReference, ThresholdRule};
use crate::error::{Result, SweepError};

pub const PRESET_NAMES: [&str; 13] = [
    "fig1",
    "fig2a",
    "fig2b",
    "fig3a",
    "fig3b",
    "fig4ab-coherences",
    "fig4c-harmonic-entrainment",
    "fig4d-squeeze-entrainment",
    "fig4e-crossover",
    "appendix-arnold-diff",
    "appendix-distortion",
    "appendix-coh02",
    "appendix-coh12",
];

/// Distortion threshold shared by every threshold-aware preset.
pub const EPSILON: f64 = 0.1;

/// Equal harmonic and squeeze drive used for the entrainment crossover.
pub const CROSSOVER_DRIVE: f64 = 1.1;

/// Harmonic drives of the Arnold-tongue slices.
pub const SLICE_DRIVES: (f64, f64, usize) = (0.1, 0.5, 3);

pub fn list_presets() -> &'static [&'static str] {
    &PRESET_NAMES
}

fn scenario(name: &str, description: &str, outputs: &[Output], fixed: &[(Param, f64)], axes: Vec<Axis>) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        description: description.to_string(),
        reconstructed: false,
        outputs: outputs.to_vec(),
        epsilon: None,
        dim_override: None,
        omega_from_threshold: false,
        threshold_rule: ThresholdRule::Absolute,
        sync_reference: SyncReference::Noiseless,
        drive_strength: None,
        fixed: fixed.iter().copied().collect::<BTreeMap<_, _>>(),
        axes,
    }
}

fn arnold_slices(name: &str, gamma2: f64) -> ScenarioConfig {
    let (lo, hi, n) = SLICE_DRIVES;
    ScenarioConfig {
        reconstructed: true,
        epsilon: Some(EPSILON),
        ..scenario(
            name,
            "Arnold tongue slices: S against detuning for a few drive strengths, numerics and noiseless closed form",
            &[
                Output::SNumeric,
                Output::SNoiseless,
                Output::SAbsDiff,
                Output::SRelDiff,
                Output::NNumeric,
                Output::N0Numeric,
                Output::RelDistortion,
                Output::MuNumeric,
            ],
            &[(Param::Gamma2, gamma2), (Param::Kappa, 0.0), (Param::Eta, 0.0)],
            vec![Axis::linear(Param::Omega, lo, hi, n), Axis::linear(Param::Delta, -2.0, 2.0, 41)],
        )
    }
}

fn sync_map(name: &str, gamma2: f64) -> ScenarioConfig {
    ScenarioConfig {
        reconstructed: true,
        epsilon: Some(EPSILON),
        ..scenario(
            name,
            "S over drive strength and single-photon loss with the threshold drive overlay",
            &[Output::SNumeric, Output::NNumeric, Output::OmegaTh, Output::SDeepQuantumLimit],
            &[(Param::Gamma2, gamma2), (Param::Delta, 0.0), (Param::Eta, 0.0)],
            vec![Axis::linear(Param::Omega, 0.0, 3.0, 31), Axis::linear(Param::Kappa, 0.0, 3.0, 31)],
        )
    }
}

fn appendix_map(name: &str, description: &str, outputs: &[Output]) -> ScenarioConfig {
    ScenarioConfig {
        epsilon: Some(EPSILON),
        ..scenario(
            name,
            description,
            outputs,
            &[(Param::Gamma2, 100.0), (Param::Kappa, 0.0), (Param::Eta, 0.0)],
            vec![Axis::linear(Param::Omega, 0.05, 2.0, 40), Axis::linear(Param::Delta, -2.0, 2.0, 41)],
        )
    }
}

fn entrainment(name: &str, description: &str, drive: Param) -> ScenarioConfig {
    let other = if drive == Param::Omega { Param::Eta } else { Param::Omega };
    ScenarioConfig {
        reconstructed: true,
        ..scenario(
            name,
            description,
            &[Output::DeltaObs, Output::DeltaRel, Output::NNumeric, Output::SNumeric],
            &[(Param::Kappa, 0.0), (Param::Delta, 1.0), (other, 0.0)],
            vec![Axis::log(Param::Gamma2, 1.0, 1000.0, 4), Axis::linear(drive, 0.0, 2.0, 21)],
        )
    }
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let cfg = match name {
        "fig1" => scenario(
            name,
            "Undriven noiseless amplitude against damping ratio with mean-field, system-size and three-level approximations",
            &[Output::NNumeric, Output::NMeanField, Output::NSse, Output::NEq5],
            &[(Param::Kappa, 0.0), (Param::Delta, 0.0), (Param::Omega, 0.0), (Param::Eta, 0.0)],
            vec![Axis::log(Param::Gamma2, 1e-2, 1e3, 26)],
        ),
        "fig2a" => arnold_slices(name, 100.0),
        "fig2b" => arnold_slices(name, 1000.0),
        "fig3a" => sync_map(name, 1.0),
        "fig3b" => sync_map(name, 100.0),
        "fig4ab-coherences" => ScenarioConfig {
            reconstructed: true,
            epsilon: Some(EPSILON),
            omega_from_threshold: true,
            ..scenario(
                name,
                "Coherences and S against single-photon loss at the threshold drive",
                &[Output::Coh01, Output::Coh02, Output::Coh12, Output::SNumeric, Output::NNumeric],
                &[(Param::Delta, 0.0), (Param::Eta, 0.0)],
                vec![Axis::log(Param::Gamma2, 1.0, 100.0, 2), Axis::linear(Param::Kappa, 0.0, 10.0, 41)],
            )
        },
        "fig4c-harmonic-entrainment" => entrainment(
            name,
            "Relative frequency entrainment against harmonic drive strength for several damping ratios",
            Param::Omega,
        ),
        "fig4d-squeeze-entrainment" => entrainment(
            name,
            "Relative frequency entrainment against squeeze drive strength for several damping ratios",
            Param::Eta,
        ),
        "fig4e-crossover" => ScenarioConfig {
            reconstructed: true,
            drive_strength: Some(CROSSOVER_DRIVE),
            ..scenario(
                name,
                "Harmonic and squeeze entrainment at equal drive strength against damping ratio",
                &[
                    Output::DeltaObsHarmonic,
                    Output::DeltaRelHarmonic,
                    Output::DeltaObsSqueeze,
                    Output::DeltaRelSqueeze,
                ],
                &[(Param::Kappa, 0.0), (Param::Delta, 1.0), (Param::Omega, 0.0), (Param::Eta, 0.0)],
                vec![Axis::log(Param::Gamma2, 1.0, 1000.0, 25)],
            )
        },
        "appendix-arnold-diff" => appendix_map(
            name,
            "Difference between numerical S and the noiseless closed form over the Arnold tongue",
            &[
                Output::SNumeric,
                Output::SNoiseless,
                Output::SAbsDiff,
                Output::SRelDiff,
                Output::NNumeric,
                Output::N0Numeric,
                Output::DeltaN,
                Output::RelDistortion,
                Output::OmegaTh,
            ],
        ),
        "appendix-distortion" => appendix_map(
            name,
            "Amplitude distortion under driving over the Arnold tongue",
            &[
                Output::NNumeric,
                Output::N0Numeric,
                Output::DeltaN,
                Output::RelDistortion,
                Output::NDeepQuantumLimit,
                Output::OmegaTh,
            ],
        ),
        "appendix-coh02" => appendix_map(
            name,
            "Second-order coherence |rho_02| over the Arnold tongue",
            &[Output::Coh02, Output::Coh01, Output::SNumeric, Output::RelDistortion, Output::OmegaTh],
        ),
        "appendix-coh12" => appendix_map(
            name,
            "Coherence |rho_12| over the Arnold tongue",
            &[Output::Coh12, Output::Coh01, Output::SNumeric, Output::RelDistortion, Output::OmegaTh],
        ),
        other => {
            return Err(SweepError::UnknownPreset {
                name: other.to_string(),
                valid: PRESET_NAMES.to_vec(),
            })
        }
    };
    debug_assert!(cfg.validate().is_ok(), "preset {name} is invalid");
    Ok(cfg)
}
