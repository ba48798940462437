//! Steady-state emission spectrum of `a` and the observed (entrained)
//! frequency.
//!
//! The two-time correlation `g(τ) = ⟨a†(τ) a(0)⟩ = Tr(a† e^{Lτ}[a ρ_ss])` is
//! evaluated by propagating the non-Hermitian operator `a ρ_ss`. Its
//! long-time limit `|⟨a⟩|²` is the coherent part; the spectrum of the
//! remainder is
//!
//! ```text
//! S(ω) = ∫ e^{−iωτ} g_inc(τ) dτ = 2 Σ_k Re[c_k / (iω − λ_k)]
//! ```
//!
//! over the non-stationary eigenmodes `λ_k` of `L`. Frequencies are in the
//! frame rotating with the drive, so an undriven oscillator peaks at `ω = δ`.
//! With this normalization `∫ S(ω) dω = 2π (N − |⟨a⟩|²)`.

use std::f64::consts::PI;

use faer::linalg::solvers::Solve;
use faer::Col;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{annihilation, number, FockDim};
use crate::liouvillian::{self, choose_dim_with, DimSearch, Liouvillian, Propagator, MAX_DENSE_DIM};
use crate::params::SystemParams;
use crate::state::DensityMatrix;

/// Modes carrying less than this fraction of the total absolute weight are
/// ignored when deriving the required grid resolution.
const RESOLUTION_WEIGHT_FLOOR: f64 = 1e-3;

/// Eigen-decompositions whose modal sum cancels worse than this are rejected.
const MAX_MODAL_CANCELLATION: f64 = 1e6;

/// Relative residual bounds for accepting an eigen-decomposition.
const MAX_EIGEN_RESIDUAL: f64 = 1e-8;

/// Correlation propagation stops once the transient drops below this
/// fraction of its initial size.
const CORRELATION_DECAY_TOL: f64 = 1e-10;

const MAX_CORRELATION_SAMPLES: usize = 1 << 22;

/// Truncation tolerance for spectra; peak locations converge long before
/// the steady-state observables do.
pub const SPECTRUM_DIM_TOL: f64 = 1e-6;

/// Uniform angular-frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyGrid {
    start: f64,
    step: f64,
    len: usize,
}

impl FrequencyGrid {
    pub fn uniform(min: f64, max: f64, len: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || min >= max || len < 3 {
            return Err(Error::Grid(format!(
                "need finite min < max and at least 3 points, got [{min}, {max}] with {len}"
            )));
        }
        Ok(Self {
            start: min,
            step: (max - min) / (len - 1) as f64,
            len,
        })
    }

    /// Symmetric grid `[−half_span, half_span]` with spacing at most `max_step`
    /// and an odd number of points (so `ω = 0` is a node).
    pub fn symmetric(half_span: f64, max_step: f64) -> Result<Self> {
        if !(half_span > 0.0 && max_step > 0.0) {
            return Err(Error::Grid("half span and step must be positive".into()));
        }
        let half = (half_span / max_step).ceil() as usize;
        Self::uniform(-half_span, half_span, 2 * half.max(1) + 1)
    }

    /// Smallest symmetric span required for a parameter point,
    /// `4|δ| + 10γ₁`.
    pub fn required_half_span(params: &SystemParams) -> f64 {
        4.0 * params.delta.abs() + 10.0 * params.gamma1
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.at(self.len - 1)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn at(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.at(i)).collect()
    }

    fn check_span(&self, params: &SystemParams) -> Result<()> {
        let half = Self::required_half_span(params);
        let slack = 1e-9 * half;
        if self.start > -half + slack || self.end() < half - slack {
            return Err(Error::Grid(format!(
                "grid [{}, {}] does not cover ±{half}",
                self.start,
                self.end()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpectrumMethod {
    Eigen,
    Fft,
}

/// Which pipeline `power_spectrum_with` should use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpectrumStrategy {
    /// Eigen-decomposition, falling back to FFT when it is ill-conditioned.
    #[default]
    Auto,
    EigenOnly,
    FftOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumResult {
    pub freqs: Vec<f64>,
    pub density: Vec<f64>,
    /// Peak location after parabolic refinement.
    pub delta_obs: f64,
    /// `(δ_obs − δ)/δ`; `None` when `δ = 0`.
    pub delta_rel: Option<f64>,
    pub method: SpectrumMethod,
    /// `|⟨a⟩|²`, removed before computing the density.
    pub coherent_weight: f64,
    /// `N − |⟨a⟩|²`.
    pub incoherent_weight: f64,
}

impl SpectrumResult {
    fn assemble(
        grid: &FrequencyGrid,
        density: Vec<f64>,
        params: &SystemParams,
        method: SpectrumMethod,
        coherent_weight: f64,
        incoherent_weight: f64,
    ) -> Result<Self> {
        if density.iter().any(|s| !s.is_finite()) {
            return Err(Error::Stiffness("non-finite spectral density".into()));
        }
        let delta_obs = refine_peak(grid, &density);
        Ok(Self {
            freqs: grid.points(),
            density,
            delta_obs,
            delta_rel: relative_entrainment(delta_obs, params.delta),
            method,
            coherent_weight,
            incoherent_weight,
        })
    }

    /// Trapezoidal `∫ S(ω) dω` over the grid.
    pub fn total_weight(&self) -> f64 {
        trapezoid(&self.freqs, &self.density)
    }

    pub fn peak_height(&self) -> f64 {
        self.density.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn relative_entrainment(delta_obs: f64, delta: f64) -> Option<f64> {
    (delta != 0.0).then(|| (delta_obs - delta) / delta)
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Grid argmax refined by the vertex of the parabola through it and its
/// neighbours.
pub fn refine_peak(grid: &FrequencyGrid, density: &[f64]) -> f64 {
    let k = density
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > density[best] { i } else { best });
    if k == 0 || k + 1 >= density.len() {
        return grid.at(k);
    }
    let (l, c, r) = (density[k - 1], density[k], density[k + 1]);
    let curvature = l - 2.0 * c + r;
    if curvature >= 0.0 {
        return grid.at(k);
    }
    let offset = 0.5 * (l - r) / curvature;
    grid.at(k) + offset.clamp(-0.5, 0.5) * grid.step()
}

/// `Tr(a† X)` for column-stacked `X`: `Σ_m √(m+1) X[m, m+1]`.
fn trace_adag(v: faer::ColRef<'_, Complex64>, n: usize) -> Complex64 {
    (0..n - 1)
        .map(|m| v[m + (m + 1) * n] * ((m + 1) as f64).sqrt())
        .sum()
}

/// Generator, steady state and the seed `a ρ_ss` of the correlation.
struct Setup {
    liouvillian: Liouvillian,
    rho: DensityMatrix,
    seed: Col<Complex64>,
    mean_a: Complex64,
    n: f64,
}

impl Setup {
    fn new(params: &SystemParams, dim: FockDim) -> Result<Self> {
        let liouvillian = Liouvillian::build(params, dim)?;
        let rho = liouvillian::steady_state(&liouvillian)?.rho;
        let a = annihilation(dim);
        let a_rho = &a * rho.operator();
        let seed = a_rho.vectorize().col(0).to_owned();
        Ok(Self {
            liouvillian,
            mean_a: rho.expect(&a)?,
            n: rho.expect(&number(dim))?.re,
            rho,
            seed,
        })
    }

    fn dim(&self) -> usize {
        self.liouvillian.dim().get()
    }

    fn coherent_weight(&self) -> f64 {
        self.mean_a.norm_sqr()
    }
}

/// Truncation used when the caller does not fix one.
pub fn spectrum_dim(params: &SystemParams) -> Result<FockDim> {
    let search = DimSearch {
        cap: MAX_DENSE_DIM,
        tol: SPECTRUM_DIM_TOL,
        ..DimSearch::default()
    };
    Ok(choose_dim_with(params, &search)?.dim)
}

/// `g(τ) = Tr(a† e^{Lτ}[a ρ_ss])` at each `τ ≥ 0`.
pub fn correlation(params: &SystemParams, taus: &[f64]) -> Result<Vec<Complex64>> {
    correlation_at(params, spectrum_dim(params)?, taus)
}

pub fn correlation_at(params: &SystemParams, dim: FockDim, taus: &[f64]) -> Result<Vec<Complex64>> {
    if let Some(t) = taus.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
        return Err(Error::Config(format!("correlation delays must be ≥ 0, got {t}")));
    }
    let setup = Setup::new(params, dim)?;
    let n = setup.dim();
    let mut order: Vec<usize> = (0..taus.len()).collect();
    order.sort_by(|&i, &j| taus[i].total_cmp(&taus[j]));

    let mut out = vec![Complex64::new(0.0, 0.0); taus.len()];
    let mut v = setup.seed.clone();
    let mut now = 0.0;
    let mut cached: Option<Propagator> = None;
    for i in order {
        let dt = taus[i] - now;
        if dt > 0.0 {
            let reuse = cached
                .as_ref()
                .is_some_and(|p| (p.time() - dt).abs() <= 1e-12 * dt);
            if !reuse {
                cached = Some(Propagator::new(&setup.liouvillian, dt)?);
            }
            v = cached.as_ref().expect("propagator set above").apply_vec(v.as_ref());
            now = taus[i];
        }
        let g = trace_adag(v.as_ref(), n);
        if !(g.re.is_finite() && g.im.is_finite()) {
            return Err(Error::Stiffness(format!("correlation diverged at τ = {}", taus[i])));
        }
        out[i] = g;
    }
    Ok(out)
}

/// Modal expansion of the incoherent correlation,
/// `g_inc(τ) = Σ_k c_k e^{λ_k τ}` with the stationary mode removed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModalSpectrum {
    pub eigenvalues: Vec<Complex64Serde>,
    pub weights: Vec<Complex64Serde>,
    pub coherent_weight: f64,
    pub incoherent_weight: f64,
    /// Weight assigned to the stationary eigenmode (≈ `|⟨a⟩|²`).
    pub stationary_weight: Complex64Serde,
}

/// Serializable complex number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Complex64Serde {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for Complex64Serde {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<Complex64Serde> for Complex64 {
    fn from(z: Complex64Serde) -> Self {
        Complex64::new(z.re, z.im)
    }
}

impl ModalSpectrum {
    /// Eigen-decomposes `L` and projects `a ρ_ss` onto its right eigenvectors.
    pub fn compute(params: &SystemParams, dim: FockDim) -> Result<Self> {
        Self::from_setup(&Setup::new(params, dim)?)
    }

    fn from_setup(setup: &Setup) -> Result<Self> {
        let l = setup.liouvillian.matrix();
        let size = l.nrows();
        let n = setup.dim();
        let evd = l
            .eigen()
            .map_err(|e| Error::LinearAlgebra(format!("eigendecomposition failed: {e:?}")))?;
        let r = evd.U();
        let lambda: Vec<Complex64> = (0..size).map(|k| evd.S()[k]).collect();

        let scale = setup.liouvillian.max_entry().max(1.0);
        let lr = l * r;
        let mut eig_res = 0.0f64;
        for k in 0..size {
            for i in 0..size {
                eig_res = eig_res.max((lr[(i, k)] - r[(i, k)] * lambda[k]).norm());
            }
        }
        if eig_res > MAX_EIGEN_RESIDUAL * scale * r.norm_max().max(1.0) {
            return Err(Error::LinearAlgebra(format!(
                "eigenpairs inaccurate (residual {eig_res:.3e})"
            )));
        }

        let b = r.partial_piv_lu().solve(setup.seed.as_ref());
        let recon = r * &b;
        let seed_norm = setup.seed.norm_max();
        let recon_err = (0..size)
            .map(|i| (recon[i] - setup.seed[i]).norm())
            .fold(0.0, f64::max);
        if !(recon_err <= MAX_EIGEN_RESIDUAL * seed_norm.max(1e-300)) {
            return Err(Error::LinearAlgebra(format!(
                "eigenvector basis ill-conditioned (reconstruction error {recon_err:.3e})"
            )));
        }

        let weights: Vec<Complex64> = (0..size)
            .map(|k| b[k] * trace_adag(r.col(k), n))
            .collect();
        let total: Complex64 = weights.iter().sum();
        let abs_sum: f64 = weights.iter().map(|w| w.norm()).sum();
        if abs_sum > MAX_MODAL_CANCELLATION * total.norm().max(1e-300) {
            return Err(Error::LinearAlgebra(format!(
                "modal weights cancel (Σ|c| = {abs_sum:.3e}, |Σc| = {:.3e})",
                total.norm()
            )));
        }

        let stationary = (0..size)
            .min_by(|&i, &j| lambda[i].norm().total_cmp(&lambda[j].norm()))
            .expect("nonempty spectrum");
        let second = (0..size)
            .filter(|&k| k != stationary)
            .map(|k| lambda[k].norm())
            .fold(f64::INFINITY, f64::min);
        if second <= 1e-9 * scale {
            return Err(Error::DegenerateSteadyState {
                nullity: 2,
                singular_values: vec![lambda[stationary].norm(), second],
            });
        }

        let mut eigenvalues = Vec::with_capacity(size - 1);
        let mut modal = Vec::with_capacity(size - 1);
        for k in (0..size).filter(|&k| k != stationary) {
            eigenvalues.push(lambda[k].into());
            modal.push(weights[k].into());
        }
        let coherent_weight = setup.coherent_weight();
        Ok(Self {
            eigenvalues,
            weights: modal,
            coherent_weight,
            incoherent_weight: setup.n - coherent_weight,
            stationary_weight: weights[stationary].into(),
        })
    }

    /// `S(ω) = 2 Σ_k Re[c_k / (iω − λ_k)]`.
    pub fn density_at(&self, omega: f64) -> f64 {
        let iw = Complex64::new(0.0, omega);
        2.0 * self
            .eigenvalues
            .iter()
            .zip(&self.weights)
            .map(|(&l, &c)| (Complex64::from(c) / (iw - Complex64::from(l))).re)
            .sum::<f64>()
    }

    /// Narrowest decay rate among modes that carry appreciable weight.
    pub fn narrowest_rate(&self) -> f64 {
        let abs_sum: f64 = self.weights.iter().map(|w| Complex64::from(*w).norm()).sum();
        self.eigenvalues
            .iter()
            .zip(&self.weights)
            .filter(|(_, c)| Complex64::from(**c).norm() >= RESOLUTION_WEIGHT_FLOOR * abs_sum)
            .map(|(l, _)| -l.re)
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest admissible grid spacing.
    pub fn max_step(&self) -> f64 {
        self.narrowest_rate() / 10.0
    }

    /// Evaluates on `grid` after checking span and resolution.
    pub fn evaluate(&self, params: &SystemParams, grid: &FrequencyGrid) -> Result<SpectrumResult> {
        grid.check_span(params)?;
        let max_step = self.max_step();
        if grid.step() > max_step * (1.0 + 1e-9) {
            return Err(Error::Grid(format!(
                "grid spacing {} exceeds {max_step} (narrowest decay rate / 10)",
                grid.step()
            )));
        }
        let density = (0..grid.len()).map(|i| self.density_at(grid.at(i))).collect();
        SpectrumResult::assemble(
            grid,
            density,
            params,
            SpectrumMethod::Eigen,
            self.coherent_weight,
            self.incoherent_weight,
        )
    }
}

/// Spectrum by the default strategy on a truncation chosen automatically.
pub fn power_spectrum(params: &SystemParams, grid: &FrequencyGrid) -> Result<SpectrumResult> {
    power_spectrum_with(params, spectrum_dim(params)?, grid, SpectrumStrategy::Auto)
}

pub fn power_spectrum_with(
    params: &SystemParams,
    dim: FockDim,
    grid: &FrequencyGrid,
    strategy: SpectrumStrategy,
) -> Result<SpectrumResult> {
    grid.check_span(params)?;
    let setup = Setup::new(params, dim)?;
    match strategy {
        SpectrumStrategy::FftOnly => fft_from_setup(params, &setup, grid),
        SpectrumStrategy::EigenOnly => ModalSpectrum::from_setup(&setup)?.evaluate(params, grid),
        SpectrumStrategy::Auto => match ModalSpectrum::from_setup(&setup) {
            Ok(modal) => modal.evaluate(params, grid),
            Err(Error::LinearAlgebra(_) | Error::DegenerateSteadyState { .. }) => {
                fft_from_setup(params, &setup, grid)
            }
            Err(e) => Err(e),
        },
    }
}

/// Spectrum on an automatically sized symmetric grid with the eigen pipeline
/// (FFT fallback). The spacing is the resolution bound, capped so the grid
/// holds at most `max_points` points.
pub fn power_spectrum_auto(
    params: &SystemParams,
    dim: FockDim,
    max_points: usize,
) -> Result<SpectrumResult> {
    let half = FrequencyGrid::required_half_span(params);
    let setup = Setup::new(params, dim)?;
    let floor_step = 2.0 * half / max_points.max(3) as f64;
    match ModalSpectrum::from_setup(&setup) {
        Ok(modal) => {
            let step = modal.max_step();
            if step < floor_step {
                return Err(Error::Grid(format!(
                    "resolving a decay rate of {:.3e} needs more than {max_points} points",
                    modal.narrowest_rate()
                )));
            }
            modal.evaluate(params, &FrequencyGrid::symmetric(half, step.min(0.05 * params.gamma1))?)
        }
        Err(Error::LinearAlgebra(_) | Error::DegenerateSteadyState { .. }) => {
            fft_from_setup(params, &setup, &FrequencyGrid::symmetric(half, floor_step.max(0.01 * params.gamma1))?)
        }
        Err(e) => Err(e),
    }
}

/// Cross-check pipeline: FFT of the sampled incoherent correlation.
pub fn fft_spectrum(params: &SystemParams, dim: FockDim, grid: &FrequencyGrid) -> Result<SpectrumResult> {
    power_spectrum_with(params, dim, grid, SpectrumStrategy::FftOnly)
}

fn fft_from_setup(params: &SystemParams, setup: &Setup, grid: &FrequencyGrid) -> Result<SpectrumResult> {
    let n = setup.dim();
    let omega_max = grid.start().abs().max(grid.end().abs());
    // Nyquist well beyond the grid keeps aliased tails small.
    let dt = PI / (8.0 * omega_max);
    let prop = Propagator::new(&setup.liouvillian, dt)?;

    // v(τ) → ⟨a⟩ vec(ρ_ss); the transient decides when to stop.
    let rho_vec = setup.rho.operator().vectorize();
    let limit: Col<Complex64> = Col::from_fn(n * n, |i| rho_vec[(i, 0)] * setup.mean_a);
    let transient = |v: &Col<Complex64>| {
        (0..n * n).map(|i| (v[i] - limit[i]).norm()).fold(0.0, f64::max)
    };
    let coherent = setup.coherent_weight();
    let initial = transient(&setup.seed).max(1e-300);

    let mut samples = Vec::new();
    let mut v = setup.seed.clone();
    loop {
        samples.push(trace_adag(v.as_ref(), n) - coherent);
        if transient(&v) < CORRELATION_DECAY_TOL * initial {
            break;
        }
        if samples.len() >= MAX_CORRELATION_SAMPLES {
            return Err(Error::Stiffness(format!(
                "correlation still decaying after {} samples",
                samples.len()
            )));
        }
        v = prop.apply_vec(v.as_ref());
        if !transient(&v).is_finite() {
            return Err(Error::Stiffness("correlation propagation diverged".into()));
        }
    }

    // g'(0) = Tr(a† L[a ρ_ss]) for the Euler–Maclaurin endpoint term
    let l_seed = setup.liouvillian.matrix() * &setup.seed;
    let dg0 = trace_adag(l_seed.as_ref(), n);

    let min_len = (2.0 * PI / (dt * grid.step() / 4.0)).ceil() as usize;
    let len = min_len.max(2 * samples.len()).next_power_of_two();
    let mut buf: Vec<Complex64> = samples
        .iter()
        .cloned()
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(len)
        .collect();
    FftPlanner::<f64>::new().plan_fft_forward(len).process(&mut buf);

    let end_correction = dt * dt / 6.0 * dg0.re;
    let half_weight = 0.5 * samples[0];
    let d_omega = 2.0 * PI / (len as f64 * dt);
    // S at FFT bin k (k < len/2 positive, the rest negative frequencies)
    let bin = |k: usize| 2.0 * (dt * (buf[k] - half_weight)).re + end_correction;

    let density = (0..grid.len())
        .map(|i| {
            let w = grid.at(i);
            let x = w / d_omega;
            let k0 = x.floor();
            let frac = x - k0;
            let wrap = |k: i64| k.rem_euclid(len as i64) as usize;
            let k0 = k0 as i64;
            (1.0 - frac) * bin(wrap(k0)) + frac * bin(wrap(k0 + 1))
        })
        .collect();
    SpectrumResult::assemble(
        grid,
        density,
        params,
        SpectrumMethod::Fft,
        coherent,
        setup.n - coherent,
    )
}
