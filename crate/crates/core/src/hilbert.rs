//! Truncated single-mode Fock space and dense operator algebra.
//!
//! Operators are stored as dense complex matrices. Every other module builds
//! its superoperators and observables out of the ladder operators defined here.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Number of retained Fock levels, `|0⟩ … |dim-1⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockDim(usize);

impl FockDim {
    /// Smallest admissible truncation: the two-photon processes need `|2⟩`.
    pub const MIN: usize = 3;

    pub fn new(dim: usize) -> Result<Self> {
        if dim < Self::MIN {
            return Err(Error::Config(format!(
                "Fock dimension must be at least {}, got {dim}",
                Self::MIN
            )));
        }
        Ok(Self(dim))
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// Length of a vectorized density matrix.
    pub fn super_dim(self) -> usize {
        self.0 * self.0
    }
}

impl fmt::Display for FockDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Dense square operator on a truncated Fock space.
#[derive(Clone, PartialEq)]
pub struct Operator {
    mat: Mat<Complex64>,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.mat.nrows();
        writeln!(f, "Operator({n}x{n}) [")?;
        for i in 0..n {
            write!(f, "  ")?;
            for j in 0..n {
                let z = self.mat[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Operator {
    pub fn zeros(dim: FockDim) -> Self {
        Self {
            mat: Mat::zeros(dim.get(), dim.get()),
        }
    }

    pub fn identity(dim: FockDim) -> Self {
        Self {
            mat: Mat::identity(dim.get(), dim.get()),
        }
    }

    pub fn from_fn(dim: FockDim, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self {
            mat: Mat::from_fn(dim.get(), dim.get(), f),
        }
    }


    pub fn dim(&self) -> FockDim {
        FockDim(self.mat.nrows())
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.mat[(row, col)]
    }

    pub fn as_mat(&self) -> faer::MatRef<'_, Complex64> {
        self.mat.as_ref()
    }

    pub fn dagger(&self) -> Self {
        Self {
            mat: self.mat.adjoint().to_owned(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            mat: self.mat.transpose().to_owned(),
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let n = self.mat.nrows();
        Self {
            mat: Mat::from_fn(n, n, |i, j| self.mat[(i, j)] * factor),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.mat.nrows()).map(|i| self.mat[(i, i)]).sum()
    }

    /// Largest entrywise modulus of `self - self†`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.mat.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..=i {
                worst = worst.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        let n = self.mat.nrows();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                worst = worst.max((self.mat[(i, j)] - other.mat[(i, j)]).norm());
            }
        }
        worst
    }

    fn check_dim(&self, other: &Operator) -> Result<()> {
        if self.mat.nrows() != other.mat.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.mat.nrows(),
                found: other.mat.nrows(),
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Operator) -> Result<Operator> {
        self.check_dim(other)?;
        Ok(Self {
            mat: &self.mat + &other.mat,
        })
    }

    pub fn try_mul(&self, other: &Operator) -> Result<Operator> {
        self.check_dim(other)?;
        Ok(Self {
            mat: &self.mat * &other.mat,
        })
    }

    /// `self * self * … ` (`power` factors); `power = 0` gives the identity.
    pub fn pow(&self, power: u32) -> Operator {
        let mut out = Operator::identity(self.dim());
        for _ in 0..power {
            out = &out * self;
        }
        out
    }

    /// Column-stacked vectorization, `vec(ρ)[m + n·dim] = ρ[m, n]`.
    pub fn vectorize(&self) -> Mat<Complex64> {
        let n = self.mat.nrows();
        Mat::from_fn(n * n, 1, |k, _| self.mat[(k % n, k / n)])
    }

    pub fn from_vectorized(dim: FockDim, v: faer::ColRef<'_, Complex64>) -> Self {
        let n = dim.get();
        assert_eq!(v.nrows(), n * n, "vectorized length does not match dimension");
        Self {
            mat: Mat::from_fn(n, n, |i, j| v[i + j * n]),
        }
    }
}

impl Add for &Operator {
    type Output = Operator;

    fn add(self, rhs: &Operator) -> Operator {
        self.try_add(rhs).expect("operator dimensions differ")
    }
}

impl Sub for &Operator {
    type Output = Operator;

    fn sub(self, rhs: &Operator) -> Operator {
        self.check_dim(rhs).expect("operator dimensions differ");
        Operator {
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        self.try_mul(rhs).expect("operator dimensions differ")
    }
}

/// Ladder operator `a` with `a[n, n+1] = √(n+1)`.
pub fn annihilation(dim: FockDim) -> Operator {
    Operator::from_fn(dim, |i, j| {
        if j == i + 1 {
            Complex64::new((j as f64).sqrt(), 0.0)
        } else {
            ZERO
        }
    })
}

/// `a†`, the exact conjugate transpose of [`annihilation`].
pub fn creation(dim: FockDim) -> Operator {
    annihilation(dim).dagger()
}

/// `a†a`, diagonal with entries `0 … dim-1`.
pub fn number(dim: FockDim) -> Operator {
    Operator::from_fn(dim, |i, j| {
        if i == j {
            Complex64::new(i as f64, 0.0)
        } else {
            ZERO
        }
    })
}

/// `Σ_k c_k · O_k`. All operands must share one dimension.
pub fn linear_combination(terms: &[(Complex64, &Operator)]) -> Result<Operator> {
    let Some(((_, first), rest)) = terms.split_first() else {
        return Err(Error::Config("empty linear combination".into()));
    };
    let mut out = Operator::zeros(first.dim());
    for (_, op) in rest {
        first.check_dim(op)?;
    }
    let n = first.dim().get();
    for (c, op) in terms {
        for j in 0..n {
            for i in 0..n {
                out.mat[(i, j)] += *c * op.mat[(i, j)];
            }
        }
    }
    Ok(out)
}

/// Ordered product `O_1 O_2 … O_k`.
pub fn product(factors: &[&Operator]) -> Result<Operator> {
    let Some((first, rest)) = factors.split_first() else {
        return Err(Error::Config("empty operator product".into()));
    };
    rest.iter()
        .try_fold((*first).clone(), |acc, op| acc.try_mul(op))
}
