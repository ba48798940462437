//! Lindblad superoperator of the driven oscillator, its steady state and
//! time propagation.
//!
//! The generator is
//!
//! ```text
//! L[ρ] = −i[H, ρ] + γ₁ D[a†]ρ + γ₂ D[a²]ρ + κ D[a]ρ
//! H    = δ a†a + Ω (a + a†) + η (a² + a†²)
//! D[X]ρ = XρX† − ½(X†Xρ + ρX†X)
//! ```
//!
//! Density matrices are vectorized by column stacking,
//! `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`, so `ρ[m, n]` lives at index `m + n·dim`.

use std::collections::BTreeMap;

use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{annihilation, linear_combination, number, FockDim, Operator, ONE, ZERO};
use crate::observables;
use crate::params::SystemParams;
use crate::propagator;
use crate::state::DensityMatrix;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Largest truncation for which the full dim²×dim² superoperator is assembled.
pub const MAX_DENSE_DIM: usize = 48;

/// Residual (relative to the largest generator entry) above which the
/// constrained LU solution is discarded in favour of the SVD null space.
const LU_ACCEPT_REL: f64 = 1e-12;

/// Singular values below `NULLITY_REL · σ_max` count as zero.
const NULLITY_REL: f64 = 1e-11;

/// `H = δ a†a + Ω (a + a†) + η (a² + a†²)`.
pub fn hamiltonian(params: &SystemParams, dim: FockDim) -> Operator {
    let a = annihilation(dim);
    let ad = a.dagger();
    let a2 = a.pow(2);
    let ad2 = ad.pow(2);
    let re = |x: f64| Complex64::new(x, 0.0);
    linear_combination(&[
        (re(params.delta), &number(dim)),
        (re(params.omega), &a),
        (re(params.omega), &ad),
        (re(params.eta), &a2),
        (re(params.eta), &ad2),
    ])
    .expect("operators share a dimension")
}

/// Jump operators paired with their rates: `(γ₁, a†)`, `(γ₂, a²)`, `(κ, a)`.
pub fn jump_operators(params: &SystemParams, dim: FockDim) -> Vec<(f64, Operator)> {
    let a = annihilation(dim);
    vec![
        (params.gamma1, a.dagger()),
        (params.gamma2, a.pow(2)),
        (params.kappa, a),
    ]
}

/// Master-equation right-hand side evaluated directly on a matrix.
///
/// Independent of the superoperator assembly; used to cross-check it and to
/// measure residuals without building dim⁴ entries.
pub fn lindblad_rhs(params: &SystemParams, rho: &Operator) -> Operator {
    let dim = rho.dim();
    let h = hamiltonian(params, dim);
    let comm = &(&h * rho) - &(rho * &h);
    let mut out = comm.scale(-I);
    for (rate, l) in jump_operators(params, dim) {
        if rate == 0.0 {
            continue;
        }
        let ld = l.dagger();
        let ldl = &ld * &l;
        let jump = &(&l * rho) * &ld;
        let anti = &(&ldl * rho) + &(rho * &ldl);
        let d = &jump - &anti.scale(Complex64::new(0.5, 0.0));
        out = &out + &d.scale(Complex64::new(rate, 0.0));
    }
    out
}

/// How `AρB` is mapped onto a Kronecker product.
///
/// Only [`Vectorization::ColumnStacking`] is correct for this crate's index
/// layout; the other variant exists so the verification gate can show that a
/// convention slip is caught by the trace check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Vectorization {
    #[default]
    ColumnStacking,
    #[doc(hidden)]
    UntransposedRight,
}

/// Dense matrix representation of the master-equation generator.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    dim: FockDim,
    params: SystemParams,
    mat: Mat<Complex64>,
}

fn nonzeros(op: &Operator) -> Vec<(usize, usize, Complex64)> {
    let n = op.dim().get();
    let mut out = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let z = op.get(i, j);
            if z != ZERO {
                out.push((i, j, z));
            }
        }
    }
    out
}

impl Liouvillian {
    pub fn build(params: &SystemParams, dim: FockDim) -> Result<Self> {
        Self::build_with(params, dim, Vectorization::ColumnStacking)
    }

    #[doc(hidden)]
    pub fn build_with(params: &SystemParams, dim: FockDim, conv: Vectorization) -> Result<Self> {
        params.validate()?;
        if dim.get() > MAX_DENSE_DIM {
            return Err(Error::Config(format!(
                "dense superoperator limited to dim ≤ {MAX_DENSE_DIM}, requested {dim}"
            )));
        }
        let n = dim.get();
        let identity = Operator::identity(dim);
        let mut mat = Mat::<Complex64>::zeros(n * n, n * n);

        // coeff · (Bᵀ ⊗ A): ρ[m', n'] → out[m, n] with weight A[m, m'] B[n', n]
        let mut sandwich = |coeff: Complex64, left: &Operator, right: &Operator| {
            let ln = nonzeros(left);
            let rn = nonzeros(right);
            for &(m, mp, av) in &ln {
                for &(r0, r1, bv) in &rn {
                    let (nn, np) = match conv {
                        Vectorization::ColumnStacking => (r1, r0),
                        Vectorization::UntransposedRight => (r0, r1),
                    };
                    mat[(m + nn * n, mp + np * n)] += coeff * av * bv;
                }
            }
        };

        let h = hamiltonian(params, dim);
        sandwich(-I, &h, &identity);
        sandwich(I, &identity, &h);
        for (rate, l) in jump_operators(params, dim) {
            if rate == 0.0 {
                continue;
            }
            let ld = l.dagger();
            let ldl = &ld * &l;
            let r = Complex64::new(rate, 0.0);
            let half = Complex64::new(-0.5 * rate, 0.0);
            sandwich(r, &l, &ld);
            sandwich(half, &ldl, &identity);
            sandwich(half, &identity, &ldl);
        }

        Ok(Self {
            dim,
            params: *params,
            mat,
        })
    }

    pub fn dim(&self) -> FockDim {
        self.dim
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn matrix(&self) -> faer::MatRef<'_, Complex64> {
        self.mat.as_ref()
    }

    /// `L[X]` for an arbitrary (not necessarily Hermitian) operator.
    pub fn apply(&self, x: &Operator) -> Operator {
        let v = &self.mat * x.vectorize();
        Operator::from_vectorized(self.dim, v.col(0))
    }

    /// Largest entry of `L` in modulus; sets the scale for residuals.
    pub fn max_entry(&self) -> f64 {
        self.mat.norm_max()
    }

    /// `max_k |Σ_n L[(n,n), k]|`: zero when the trace functional is a left
    /// null vector, i.e. the dynamics is trace preserving.
    pub fn trace_leakage(&self) -> f64 {
        let n = self.dim.get();
        let mut worst = 0.0f64;
        for k in 0..n * n {
            let s: Complex64 = (0..n).map(|d| self.mat[(d + d * n, k)]).sum();
            worst = worst.max(s.norm());
        }
        worst
    }

    /// `max |L vec(ρ)|`.
    pub fn residual(&self, rho: &Operator) -> f64 {
        (&self.mat * rho.vectorize()).norm_max()
    }

    /// Two smallest singular values; the second bounds the distance to a
    /// degenerate steady state.
    pub fn spectral_gap(&self) -> Result<SpectralGap> {
        let sv = singular_values(&self.mat)?;
        let k = sv.len();
        Ok(SpectralGap {
            smallest: sv[k - 1],
            second_smallest: sv[k - 2],
            largest: sv[0],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralGap {
    pub smallest: f64,
    pub second_smallest: f64,
    pub largest: f64,
}

fn singular_values(mat: &Mat<Complex64>) -> Result<Vec<f64>> {
    let s = mat
        .singular_values()
        .map_err(|e| Error::LinearAlgebra(format!("SVD failed: {e:?}")))?;
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    /// One equation replaced by `Tr ρ = 1`, square system solved by LU.
    ConstrainedLu,
    /// Right singular vector of the smallest singular value.
    SvdNullSpace,
    /// Population balance in the invariant diagonal sector (`Ω = η = 0`).
    PhaseSymmetricSector,
}

/// Which solver family to use for a parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolveStrategy {
    /// Sector solve when the drives vanish, dense superoperator otherwise.
    #[default]
    Auto,
    Dense,
    PhaseSymmetric,
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    /// `max |L vec(ρ)|` after hermitization.
    pub residual: f64,
    /// `max |ρ − ρ†| / 2` removed by hermitization.
    pub hermitize_correction: f64,
    pub method: SolveMethod,
}

fn hermitize_normalize(raw: Operator) -> (Operator, f64) {
    let correction = raw.hermiticity_error() / 2.0;
    let sym = (&raw + &raw.dagger()).scale(Complex64::new(0.5, 0.0));
    let tr = sym.trace().re;
    (sym.scale(Complex64::new(1.0 / tr, 0.0)), correction)
}

fn finish(
    raw: Operator,
    residual: impl Fn(&Operator) -> f64,
    method: SolveMethod,
) -> Result<SteadyState> {
    let (op, hermitize_correction) = hermitize_normalize(raw);
    let residual = residual(&op);
    let rho = DensityMatrix::new(op).map_err(|e| {
        Error::NoSteadyState(format!("solver returned an unphysical state: {e}"))
    })?;
    Ok(SteadyState {
        rho,
        residual,
        hermitize_correction,
        method,
    })
}

/// Unique unit-trace null vector of `liouvillian`.
pub fn steady_state(liouvillian: &Liouvillian) -> Result<SteadyState> {
    liouvillian.params.validate_dissipative()?;
    let n = liouvillian.dim.get();
    let size = n * n;
    let scale = liouvillian.max_entry().max(1.0);

    // The rows of L sum (over diagonal indices) to zero, so row 0 is redundant
    // and can carry the normalization instead.
    let mut a = liouvillian.mat.clone();
    for k in 0..size {
        a[(0, k)] = ZERO;
    }
    for d in 0..n {
        a[(0, d + d * n)] = ONE;
    }
    let mut rhs = Mat::<Complex64>::zeros(size, 1);
    rhs[(0, 0)] = ONE;
    let x = a.partial_piv_lu().solve(&rhs);

    if x.col(0).iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        let raw = Operator::from_vectorized(liouvillian.dim, x.col(0));
        if raw.trace().norm() > 0.0 {
            let candidate = finish(raw, |op| liouvillian.residual(op), SolveMethod::ConstrainedLu);
            if let Ok(ss) = candidate {
                if ss.residual <= LU_ACCEPT_REL * scale {
                    return Ok(ss);
                }
            }
        }
    }
    steady_state_svd(liouvillian)
}

fn steady_state_svd(liouvillian: &Liouvillian) -> Result<SteadyState> {
    let svd = liouvillian
        .mat
        .svd()
        .map_err(|e| Error::LinearAlgebra(format!("SVD failed: {e:?}")))?;
    let s = svd.S().column_vector();
    let k = s.nrows();
    let sigma: Vec<f64> = (0..k).map(|i| s[i].re).collect();
    let tol = NULLITY_REL * sigma[0].max(1.0);
    let nullity = sigma.iter().filter(|&&v| v <= tol).count();
    if nullity != 1 {
        return Err(Error::DegenerateSteadyState {
            nullity,
            singular_values: sigma[k.saturating_sub(3)..].to_vec(),
        });
    }
    let v = svd.V().col(k - 1);
    let raw = Operator::from_vectorized(liouvillian.dim, v);
    if raw.trace().norm() < 1e-300 {
        return Err(Error::NoSteadyState("null vector is traceless".into()));
    }
    let phase = raw.trace() / raw.trace().norm();
    let raw = raw.scale(phase.conj());
    finish(raw, |op| liouvillian.residual(op), SolveMethod::SvdNullSpace)
}

/// Population-balance matrix of the diagonal sector, valid when the
/// Hamiltonian and every `X†X` are diagonal (true for `Ω = η = 0`).
fn sector_rate_matrix(params: &SystemParams, dim: FockDim) -> Mat<f64> {
    let n = dim.get();
    let mut r = Mat::<f64>::zeros(n, n);
    for (rate, l) in jump_operators(params, dim) {
        if rate == 0.0 {
            continue;
        }
        let ldl = &l.dagger() * &l;
        for j in 0..n {
            for i in 0..n {
                r[(i, j)] += rate * l.get(i, j).norm_sqr();
            }
            r[(j, j)] -= rate * ldl.get(j, j).re;
        }
    }
    r
}

/// Steady state restricted to the diagonal sector.
///
/// Without drives the generator commutes with phase rotations, the diagonal
/// sector is invariant, and the steady state lives there; only a dim×dim
/// balance system is solved, which makes large truncations cheap.
pub fn steady_state_phase_symmetric(params: &SystemParams, dim: FockDim) -> Result<SteadyState> {
    params.validate_dissipative()?;
    if !params.is_phase_symmetric() {
        return Err(Error::NotApplicable(
            "diagonal-sector solve requires omega = eta = 0".into(),
        ));
    }
    let n = dim.get();
    let mut a = sector_rate_matrix(params, dim);
    for j in 0..n {
        a[(0, j)] = 1.0;
    }
    let mut rhs = Mat::<f64>::zeros(n, 1);
    rhs[(0, 0)] = 1.0;
    let p = a.partial_piv_lu().solve(&rhs);
    if !p.col(0).iter().all(|v| v.is_finite()) {
        return Err(Error::LinearAlgebra("singular population balance".into()));
    }
    let raw = Operator::from_fn(dim, |i, j| {
        if i == j {
            Complex64::new(p[(i, 0)], 0.0)
        } else {
            ZERO
        }
    });
    let params = *params;
    finish(
        raw,
        |op| {
            let r = lindblad_rhs(&params, op);
            r.max_abs_diff(&Operator::zeros(op.dim()))
        },
        SolveMethod::PhaseSymmetricSector,
    )
}

/// Steady state at a fixed truncation using the requested strategy.
pub fn solve_steady_state(
    params: &SystemParams,
    dim: FockDim,
    strategy: SolveStrategy,
) -> Result<SteadyState> {
    match strategy {
        SolveStrategy::PhaseSymmetric => steady_state_phase_symmetric(params, dim),
        SolveStrategy::Auto if params.is_phase_symmetric() => {
            steady_state_phase_symmetric(params, dim)
        }
        SolveStrategy::Auto | SolveStrategy::Dense => {
            params.validate_dissipative()?;
            steady_state(&Liouvillian::build(params, dim)?)
        }
    }
}

/// Settings for [`choose_dim_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimSearch {
    pub cap: usize,
    /// Allowed change of `N` and `S` between `dim` and `dim + 4`, and the
    /// allowed population of the top two levels.
    pub tol: f64,
    pub strategy: SolveStrategy,
}

impl Default for DimSearch {
    fn default() -> Self {
        Self {
            cap: 400,
            tol: 1e-8,
            strategy: SolveStrategy::Auto,
        }
    }
}

/// Accepted truncation together with the steady state computed at it.
#[derive(Debug, Clone)]
pub struct DimChoice {
    pub dim: FockDim,
    pub steady: SteadyState,
}

/// Increment between the candidate and its reference truncation.
const DIM_PROBE_STEP: usize = 4;

struct Probe {
    steady: SteadyState,
    amplitude: f64,
    sync: f64,
}

/// Smallest truncation that is converged for `params`.
pub fn choose_dim(params: &SystemParams) -> Result<FockDim> {
    Ok(choose_dim_with(params, &DimSearch::default())?.dim)
}

/// A candidate `d` is accepted when the top-two-level population at `d` and
/// the changes of `N` and `S` from `d` to `d + 4` are all below `tol`.
/// Candidates are bracketed by doubling and then bisected, which assumes the
/// acceptance test is monotone in `d`.
pub fn choose_dim_with(params: &SystemParams, search: &DimSearch) -> Result<DimChoice> {
    params.validate_dissipative()?;
    if search.cap < FockDim::MIN {
        return Err(Error::Config(format!("dimension cap {} below minimum", search.cap)));
    }
    let dense = match search.strategy {
        SolveStrategy::Dense => true,
        SolveStrategy::PhaseSymmetric => false,
        SolveStrategy::Auto => !params.is_phase_symmetric(),
    };
    // the reference truncation d + 4 must stay solvable
    let limit = if dense {
        search.cap.min(MAX_DENSE_DIM - DIM_PROBE_STEP)
    } else {
        search.cap
    };
    let mut cache: BTreeMap<usize, Probe> = BTreeMap::new();
    let probe = |d: usize, cache: &mut BTreeMap<usize, Probe>| -> Result<()> {
        if let std::collections::btree_map::Entry::Vacant(slot) = cache.entry(d) {
            let steady = solve_steady_state(params, FockDim::new(d)?, search.strategy)?;
            let amplitude = observables::amplitude(&steady.rho);
            let sync = observables::sync_measure(&steady.rho).s;
            slot.insert(Probe {
                steady,
                amplitude,
                sync,
            });
        }
        Ok(())
    };
    let accepted = |d: usize, cache: &mut BTreeMap<usize, Probe>| -> Result<bool> {
        probe(d, cache)?;
        if cache[&d].steady.rho.top_population() >= search.tol {
            return Ok(false);
        }
        probe(d + DIM_PROBE_STEP, cache)?;
        let (lo, hi) = (&cache[&d], &cache[&(d + DIM_PROBE_STEP)]);
        Ok((lo.amplitude - hi.amplitude).abs() < search.tol && (lo.sync - hi.sync).abs() < search.tol)
    };

    let mut failed = FockDim::MIN - 1;
    let mut d = FockDim::MIN;
    let pass = loop {
        if d > limit {
            let last = cache.values().next_back();
            return Err(Error::TruncationCap {
                cap: search.cap,
                detail: match last {
                    Some(p) => format!(
                        "top-two population {:e} at dim {}",
                        p.steady.rho.top_population(),
                        p.steady.rho.dim()
                    ),
                    None => "no candidate evaluated".into(),
                },
            });
        }
        let ok = accepted(d, &mut cache).map_err(|e| match e {
            Error::Config(msg) => Error::TruncationCap {
                cap: search.cap,
                detail: msg,
            },
            other => other,
        })?;
        if ok {
            break d;
        }
        failed = d;
        d = if d == limit {
            limit + 1
        } else {
            (d * 2).min(limit).max(d + 1)
        };
    };

    let (mut lo, mut hi) = (failed, pass);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if accepted(mid, &mut cache)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let steady = cache.remove(&hi).expect("accepted dimension was probed").steady;
    Ok(DimChoice {
        dim: FockDim::new(hi)?,
        steady,
    })
}

/// Trace tolerance for propagated states.
pub const EVOLVE_TRACE_TOL: f64 = 1e-9;

/// `exp(L t)` acting on vectorized operators.
#[derive(Debug, Clone)]
pub struct Propagator {
    dim: FockDim,
    time: f64,
    mat: Mat<Complex64>,
}

impl Propagator {
    pub fn new(liouvillian: &Liouvillian, t: f64) -> Result<Self> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Config(format!("propagation time must be ≥ 0, got {t}")));
        }
        let scaled = Mat::from_fn(liouvillian.mat.nrows(), liouvillian.mat.ncols(), |i, j| {
            liouvillian.mat[(i, j)] * t
        });
        let mat = propagator::expm(scaled.as_ref())?;
        Ok(Self {
            dim: liouvillian.dim,
            time: t,
            mat,
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn apply(&self, x: &Operator) -> Result<Operator> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim.get(),
                found: x.dim().get(),
            });
        }
        let v = &self.mat * x.vectorize();
        Ok(Operator::from_vectorized(self.dim, v.col(0)))
    }

    pub(crate) fn apply_vec(&self, v: faer::ColRef<'_, Complex64>) -> faer::Col<Complex64> {
        &self.mat * v
    }
}

/// `ρ(t) = exp(L t)[ρ₀]`.
pub fn evolve(liouvillian: &Liouvillian, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    if rho0.dim() != liouvillian.dim {
        return Err(Error::DimensionMismatch {
            expected: liouvillian.dim.get(),
            found: rho0.dim().get(),
        });
    }
    if t == 0.0 {
        return Ok(rho0.clone());
    }
    let out = Propagator::new(liouvillian, t)?.apply(rho0.operator())?;
    let finite = (0..out.dim().get())
        .all(|i| (0..out.dim().get()).all(|j| out.get(i, j).re.is_finite() && out.get(i, j).im.is_finite()));
    if !finite {
        return Err(Error::Stiffness(format!(
            "non-finite propagator at t = {t}; use a larger truncation or a shorter time step"
        )));
    }
    let tr = out.trace();
    if (tr - ONE).norm() > EVOLVE_TRACE_TOL {
        return Err(Error::Stiffness(format!(
            "trace drifted to {tr} at t = {t}"
        )));
    }
    Ok(DensityMatrix::new_unchecked(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dim(n: usize) -> FockDim {
        FockDim::new(n).unwrap()
    }

    fn p(gamma2: f64, kappa: f64, delta: f64, omega: f64, eta: f64) -> SystemParams {
        SystemParams::in_units_of_gamma1(gamma2, kappa, delta, omega, eta)
    }

    fn random_hermitian(d: FockDim, rng: &mut ChaCha8Rng) -> Operator {
        let n = d.get();
        let raw = Operator::from_fn(d, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let _ = n;
        (&raw + &raw.dagger()).scale(Complex64::new(0.5, 0.0))
    }

    #[test]
    fn superoperator_matches_matrix_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let params = p(0.7, 0.3, -0.4, 0.6, 0.25);
        let d = dim(6);
        let l = Liouvillian::build(&params, d).unwrap();
        for _ in 0..5 {
            let x = Operator::from_fn(d, |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let diff = l.apply(&x).max_abs_diff(&lindblad_rhs(&params, &x));
            assert!(diff < 1e-12, "{diff}");
        }
    }

    #[test]
    fn pump_only_generator_is_trace_preserving() {
        let params = p(0.0, 0.0, 0.0, 0.0, 0.0);
        let l = Liouvillian::build(&params, dim(5)).unwrap();
        assert!(l.trace_leakage() < 1e-10);
        // pumping moves vacuum population upward
        let vac = DensityMatrix::fock(dim(5), 0).unwrap();
        let out = l.apply(vac.operator());
        assert!(out.get(0, 0).re < 0.0 && out.get(1, 1).re > 0.0);
        assert!(matches!(steady_state(&l), Err(Error::NoSteadyState(_))));
    }

    #[test]
    fn untransposed_convention_breaks_trace() {
        let params = p(1.0, 0.5, 0.3, 0.4, 0.2);
        let bad = Liouvillian::build_with(&params, dim(5), Vectorization::UntransposedRight).unwrap();
        assert!(bad.trace_leakage() > 1e-3);
    }

    #[test]
    fn hermiticity_is_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let params = p(2.0, 0.4, 0.9, 0.7, 0.3);
        let d = dim(7);
        let l = Liouvillian::build(&params, d).unwrap();
        for _ in 0..5 {
            let x = random_hermitian(d, &mut rng);
            let lx = l.apply(&x);
            assert!(lx.hermiticity_error() < 1e-10);
        }
    }

    #[test]
    fn deep_quantum_undriven_populations() {
        let params = p(1e4, 0.0, 0.0, 0.0, 0.0);
        let ss = solve_steady_state(&params, dim(6), SolveStrategy::Dense).unwrap();
        assert!((ss.rho.population(0) - 2.0 / 3.0).abs() < 1e-3);
        assert!((ss.rho.population(1) - 1.0 / 3.0).abs() < 1e-3);
        assert_eq!(ss.method, SolveMethod::ConstrainedLu);
    }

    #[test]
    fn undriven_state_has_no_coherences() {
        for params in [p(3.0, 0.2, 1.5, 0.0, 0.0), p(0.5, 1.0, -0.7, 0.0, 0.0)] {
            let ss = solve_steady_state(&params, dim(12), SolveStrategy::Dense).unwrap();
            for i in 0..12 {
                for j in 0..12 {
                    if i != j {
                        assert!(ss.rho.get(i, j).norm() < 1e-10);
                    }
                }
            }
            let sector = solve_steady_state(&params, dim(12), SolveStrategy::PhaseSymmetric).unwrap();
            assert_eq!(sector.method, SolveMethod::PhaseSymmetricSector);
            for n in 0..12 {
                assert!((sector.rho.population(n) - ss.rho.population(n)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn residual_is_small_for_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..8 {
            let params = p(
                rng.random_range(0.5..50.0),
                rng.random_range(0.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(0.0..1.0),
                rng.random_range(0.0..0.5),
            );
            let ss = solve_steady_state(&params, dim(10), SolveStrategy::Dense).unwrap();
            assert!(ss.residual < 1e-10, "{params:?} residual {}", ss.residual);
            assert!(ss.hermitize_correction < 1e-10);
        }
    }

    #[test]
    fn svd_fallback_agrees_with_lu() {
        let params = p(4.0, 0.3, 0.5, 0.8, 0.1);
        let l = Liouvillian::build(&params, dim(8)).unwrap();
        let lu = steady_state(&l).unwrap();
        let svd = steady_state_svd(&l).unwrap();
        assert_eq!(svd.method, SolveMethod::SvdNullSpace);
        assert!(lu.rho.operator().max_abs_diff(svd.rho.operator()) < 1e-9);
    }

    #[test]
    fn zero_generator_is_degenerate() {
        let d = dim(3);
        let l = Liouvillian {
            dim: d,
            params: p(1.0, 0.0, 0.0, 0.0, 0.0),
            mat: Mat::zeros(9, 9),
        };
        assert!(matches!(
            steady_state(&l),
            Err(Error::DegenerateSteadyState { nullity: 9, .. })
        ));
    }

    #[test]
    fn spectral_gap_is_open() {
        let l = Liouvillian::build(&p(10.0, 0.1, 0.2, 0.3, 0.0), dim(6)).unwrap();
        let gap = l.spectral_gap().unwrap();
        assert!(gap.smallest < 1e-10 * gap.largest);
        assert!(gap.second_smallest > 1e-3);
    }

    #[test]
    fn choose_dim_deep_quantum_is_small() {
        let choice = choose_dim_with(&p(100.0, 0.0, 0.0, 0.0, 0.0), &DimSearch::default()).unwrap();
        assert!(choice.dim.get() <= 8, "{}", choice.dim);
        // convergence oracle: the next-larger truncation agrees
        let bigger = solve_steady_state(
            &p(100.0, 0.0, 0.0, 0.0, 0.0),
            FockDim::new(choice.dim.get() + 4).unwrap(),
            SolveStrategy::Auto,
        )
        .unwrap();
        let n0 = observables::amplitude(&choice.steady.rho);
        let n1 = observables::amplitude(&bigger.rho);
        assert!((n0 - n1).abs() < 1e-8);
    }

    #[test]
    fn choose_dim_semiclassical_is_large() {
        let choice = choose_dim_with(&p(0.01, 0.0, 0.0, 0.0, 0.0), &DimSearch::default()).unwrap();
        assert!(choice.dim.get() > 80, "{}", choice.dim);
        assert!(choice.steady.rho.top_population() < 1e-8);
    }

    #[test]
    fn choose_dim_cap_breach() {
        let search = DimSearch {
            cap: 20,
            ..DimSearch::default()
        };
        assert!(matches!(
            choose_dim_with(&p(0.01, 0.0, 0.0, 0.0, 0.0), &search),
            Err(Error::TruncationCap { cap: 20, .. })
        ));
    }

    #[test]
    fn evolve_identity_and_trace() {
        let params = p(1.5, 0.2, 0.4, 0.5, 0.1);
        let d = dim(8);
        let l = Liouvillian::build(&params, d).unwrap();
        let rho0 = DensityMatrix::fock(d, 2).unwrap();
        assert_eq!(evolve(&l, &rho0, 0.0).unwrap(), rho0);
        for t in [0.01, 0.3, 1.0, 4.0] {
            let rho = evolve(&l, &rho0, t).unwrap();
            assert!((rho.trace() - ONE).norm() < 1e-9, "t={t}");
        }
        assert!(evolve(&l, &rho0, -1.0).is_err());
    }

    #[test]
    fn long_time_evolution_reaches_steady_state() {
        let params = p(5.0, 0.5, 0.7, 0.6, 0.0);
        let d = dim(8);
        let l = Liouvillian::build(&params, d).unwrap();
        let ss = steady_state(&l).unwrap();
        let rho = evolve(&l, &DensityMatrix::fock(d, 3).unwrap(), 200.0).unwrap();
        assert!(rho.operator().max_abs_diff(ss.rho.operator()) < 1e-6);
    }
}
