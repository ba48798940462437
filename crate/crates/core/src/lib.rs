//! Steady states, synchronization measures and spectra of the driven quantum
//! van der Pol oscillator.
//!
//! The oscillator has one-photon gain `γ₁`, two-photon loss `γ₂`, one-photon
//! loss `κ`, detuning `δ`, harmonic drive `Ω` and squeezing drive `η`:
//!
//! ```text
//! dρ/dt = −i[H, ρ] + γ₁D[a†]ρ + γ₂D[a²]ρ + κD[a]ρ
//! H     = δ a†a + Ω(a + a†) + η(a² + a†²)
//! ```
//!
//! ```
//! use qvdp_core::{choose_dim, liouvillian::solve_steady_state, observables, SystemParams};
//!
//! let params = SystemParams::in_units_of_gamma1(100.0, 0.0, 0.0, 0.0, 0.0);
//! let dim = choose_dim(&params).unwrap();
//! let ss = solve_steady_state(&params, dim, Default::default()).unwrap();
//! assert!((observables::amplitude(&ss.rho) - 1.0 / 3.0).abs() < 1e-2);
//! ```

pub mod analytic;
pub mod error;
pub mod hilbert;
pub mod liouvillian;
pub mod observables;
pub mod params;
pub mod propagator;
pub mod spectrum;
pub mod state;

pub use error::{Error, Result};
pub use hilbert::{annihilation, creation, number, FockDim, Operator};
pub use liouvillian::{choose_dim, evolve, steady_state, Liouvillian, SteadyState};
pub use observables::{sync_measure, SyncMeasure, SyncReport};
pub use params::SystemParams;
pub use state::DensityMatrix;
