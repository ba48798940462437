//! Density matrices in the truncated Fock basis.

use faer::Side;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{FockDim, Operator, ZERO};

/// Tolerances a [`DensityMatrix`] must satisfy.
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const MIN_EIGENVALUE: f64 = -1e-8;

/// Hermitian, unit-trace, positive semidefinite operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    op: Operator,
}

impl DensityMatrix {
    /// Wraps `op` after checking hermiticity, trace and positivity.
    pub fn new(op: Operator) -> Result<Self> {
        let herm = op.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (max |ρ - ρ†| = {herm:e})"
            )));
        }
        let tr = op.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let rho = Self { op };
        let lowest = rho.min_eigenvalue()?;
        if lowest < MIN_EIGENVALUE {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite (smallest eigenvalue {lowest:e})"
            )));
        }
        Ok(rho)
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn new_unchecked(op: Operator) -> Self {
        Self { op }
    }

    /// `|n⟩⟨n|`.
    pub fn fock(dim: FockDim, n: usize) -> Result<Self> {
        if n >= dim.get() {
            return Err(Error::IndexOutOfRange {
                row: n,
                col: n,
                dim: dim.get(),
            });
        }
        Ok(Self {
            op: Operator::from_fn(dim, |i, j| {
                if i == n && j == n {
                    Complex64::new(1.0, 0.0)
                } else {
                    ZERO
                }
            }),
        })
    }

    /// Diagonal state with the given populations (must sum to one).
    pub fn from_populations(dim: FockDim, populations: &[f64]) -> Result<Self> {
        if populations.len() != dim.get() {
            return Err(Error::DimensionMismatch {
                expected: dim.get(),
                found: populations.len(),
            });
        }
        Self::new(Operator::from_fn(dim, |i, j| {
            if i == j {
                Complex64::new(populations[i], 0.0)
            } else {
                ZERO
            }
        }))
    }

    pub fn dim(&self) -> FockDim {
        self.op.dim()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.op.get(row, col)
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn into_operator(self) -> Operator {
        self.op
    }

    pub fn population(&self, n: usize) -> f64 {
        self.op.get(n, n).re
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim().get()).map(|n| self.population(n)).collect()
    }

    pub fn trace(&self) -> Complex64 {
        self.op.trace()
    }

    /// Combined population of the two highest retained levels.
    pub fn top_population(&self) -> f64 {
        let n = self.dim().get();
        self.population(n - 1) + self.population(n - 2)
    }

    /// `Tr(O ρ)`.
    pub fn expect(&self, observable: &Operator) -> Result<Complex64> {
        Ok(observable.try_mul(&self.op)?.trace())
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let eig = self
            .op
            .as_mat()
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
        Ok(eig.first().copied().unwrap_or(0.0))
    }
}
