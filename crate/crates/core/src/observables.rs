//! Synchronization observables of a density matrix: mean resultant length and
//! mean direction of the phase distribution, the phase distribution itself,
//! the limit-cycle amplitude and individual coherences.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::state::DensityMatrix;

/// Below this `S` the mean direction is reported as 0 and flagged undefined.
pub const PHASE_UNDEFINED_BELOW: f64 = 1e-12;

/// Default phase-grid resolution for reports.
pub const DEFAULT_PHASE_POINTS: usize = 1024;

pub const MIN_PHASE_POINTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SyncMeasure {
    /// Mean resultant length `|⟨e^{iφ}⟩|`.
    pub s: f64,
    /// Mean direction `arg ⟨e^{iφ}⟩` in (−π, π].
    pub mu: f64,
    pub phase_defined: bool,
}

/// First circular moment `⟨e^{iφ}⟩ = Σ_n ρ[n+1, n]`.
pub fn first_moment(rho: &DensityMatrix) -> Complex64 {
    let n = rho.dim().get();
    (0..n - 1).map(|k| rho.get(k + 1, k)).sum()
}

pub fn sync_measure(rho: &DensityMatrix) -> SyncMeasure {
    let c = first_moment(rho);
    let s = c.norm();
    if s < PHASE_UNDEFINED_BELOW {
        SyncMeasure {
            s,
            mu: 0.0,
            phase_defined: false,
        }
    } else {
        SyncMeasure {
            s,
            mu: c.arg(),
            phase_defined: true,
        }
    }
}

/// `P(φ_k) = (1/2π) Σ_{m,n} e^{i(n−m)φ_k} ρ_mn` on `n_points` uniform angles
/// in `[0, 2π)`, summed from the vacuum upward.
pub fn phase_distribution(rho: &DensityMatrix, n_points: usize) -> Result<Vec<(f64, f64)>> {
    if n_points < MIN_PHASE_POINTS {
        return Err(Error::Config(format!(
            "phase grid needs at least {MIN_PHASE_POINTS} points, got {n_points}"
        )));
    }
    let n = rho.dim().get();
    // c_d = Σ_m ρ[m, m+d]; the d < 0 terms are conjugates by hermiticity.
    let diag: f64 = (0..n).map(|m| rho.population(m)).sum();
    let bands: Vec<Complex64> = (1..n)
        .map(|d| (0..n - d).map(|m| rho.get(m, m + d)).sum())
        .collect();
    Ok((0..n_points)
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / n_points as f64;
            let osc: f64 = bands
                .iter()
                .enumerate()
                .map(|(i, c)| (c * Complex64::from_polar(1.0, (i + 1) as f64 * phi)).re)
                .sum();
            (phi, (diag + 2.0 * osc) / (2.0 * PI))
        })
        .collect())
}

/// `N = ⟨a†a⟩ = Σ_n n ρ[n, n]`.
pub fn amplitude(rho: &DensityMatrix) -> f64 {
    (0..rho.dim().get())
        .map(|n| n as f64 * rho.population(n))
        .sum()
}

/// `|⟨m|ρ|n⟩|`.
pub fn coherence(rho: &DensityMatrix, m: usize, n: usize) -> Result<f64> {
    let dim = rho.dim().get();
    if m >= dim || n >= dim {
        return Err(Error::IndexOutOfRange { row: m, col: n, dim });
    }
    Ok(rho.get(m, n).norm())
}

/// Observables of one steady state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyncReport {
    pub s: f64,
    pub mu: f64,
    pub phase_defined: bool,
    pub n: f64,
    /// `N − N₀` when the undriven amplitude was supplied.
    pub delta_n: Option<f64>,
    pub coherences: BTreeMap<(usize, usize), f64>,
    pub phase_samples: Vec<(f64, f64)>,
}

impl SyncReport {
    pub fn new(
        rho: &DensityMatrix,
        coherence_pairs: &[(usize, usize)],
        undriven_amplitude: Option<f64>,
        n_points: usize,
    ) -> Result<Self> {
        let sync = sync_measure(rho);
        let n = amplitude(rho);
        let coherences = coherence_pairs
            .iter()
            .map(|&(i, j)| Ok(((i, j), coherence(rho, i, j)?)))
            .collect::<Result<_>>()?;
        Ok(Self {
            s: sync.s,
            mu: sync.mu,
            phase_defined: sync.phase_defined,
            n,
            delta_n: undriven_amplitude.map(|n0| n - n0),
            coherences,
            phase_samples: phase_distribution(rho, n_points)?,
        })
    }
}

/// Trapezoidal integral of periodic samples over one period.
pub fn integrate_periodic(samples: &[(f64, f64)]) -> f64 {
    let step = 2.0 * PI / samples.len() as f64;
    samples.iter().map(|(_, p)| p).sum::<f64>() * step
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{FockDim, Operator};

    fn dim(n: usize) -> FockDim {
        FockDim::new(n).unwrap()
    }

    /// Ansatz-shaped state with populations (p0, p1, p2) and coherence ρ01.
    fn ansatz_state(p: [f64; 3], rho01: Complex64) -> DensityMatrix {
        DensityMatrix::new(Operator::from_fn(dim(3), |i, j| match (i, j) {
            (0, 1) => rho01,
            (1, 0) => rho01.conj(),
            (i, j) if i == j => Complex64::new(p[i], 0.0),
            _ => Complex64::new(0.0, 0.0),
        }))
        .unwrap()
    }

    #[test]
    fn diagonal_state_is_unsynchronized() {
        let rho = DensityMatrix::from_populations(dim(4), &[0.4, 0.3, 0.2, 0.1]).unwrap();
        let m = sync_measure(&rho);
        assert_eq!(m.s, 0.0);
        assert_eq!(m.mu, 0.0);
        assert!(!m.phase_defined);
    }

    #[test]
    fn ansatz_sync_is_coherence_magnitude() {
        let rho01 = Complex64::new(-0.12, 0.21);
        let rho = ansatz_state([0.6, 0.35, 0.05], rho01);
        let m = sync_measure(&rho);
        assert!((m.s - rho01.norm()).abs() < 1e-15);
        assert!((m.mu - rho01.conj().arg()).abs() < 1e-15);
    }

    #[test]
    fn vacuum_phase_distribution_is_flat() {
        let rho = DensityMatrix::fock(dim(5), 0).unwrap();
        for (_, p) in phase_distribution(&rho, 64).unwrap() {
            assert!((p - 1.0 / (2.0 * PI)).abs() < 1e-15);
        }
        assert!(phase_distribution(&rho, 8).is_err());
    }

    #[test]
    fn phase_distribution_normalized() {
        let rho = ansatz_state([0.5, 0.4, 0.1], Complex64::new(0.2, -0.1));
        let samples = phase_distribution(&rho, DEFAULT_PHASE_POINTS).unwrap();
        assert!((integrate_periodic(&samples) - 1.0).abs() < 1e-6);
        assert!(samples.iter().all(|(_, p)| *p >= -1e-12));
    }

    #[test]
    fn amplitude_of_fock_states() {
        assert_eq!(amplitude(&DensityMatrix::fock(dim(4), 1).unwrap()), 1.0);
        assert_eq!(amplitude(&DensityMatrix::fock(dim(4), 3).unwrap()), 3.0);
    }

    #[test]
    fn coherence_bounds() {
        let rho = DensityMatrix::from_populations(dim(3), &[0.5, 0.5, 0.0]).unwrap();
        assert_eq!(coherence(&rho, 0, 1).unwrap(), 0.0);
        assert!(matches!(
            coherence(&rho, 0, 3),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn report_collects_fields() {
        let rho = ansatz_state([0.6, 0.3, 0.1], Complex64::new(0.0, 0.2));
        let report = SyncReport::new(&rho, &[(0, 1), (1, 2)], Some(1.0 / 3.0), 128).unwrap();
        assert!((report.n - 0.5).abs() < 1e-15);
        assert!((report.delta_n.unwrap() - (0.5 - 1.0 / 3.0)).abs() < 1e-15);
        assert_eq!(report.coherences[&(1, 2)], 0.0);
        assert_eq!(report.phase_samples.len(), 128);
    }
}
