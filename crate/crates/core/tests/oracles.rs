use std::f64::consts::PI;

use num_complex::Complex64;
use qvdp_core::analytic::{self, SyncLimit};
use qvdp_core::hilbert::{annihilation, number, FockDim, Operator};
use qvdp_core::liouvillian::{self, choose_dim_with, DimSearch, Liouvillian, SolveStrategy};
use qvdp_core::observables::{self, amplitude, coherence, sync_measure};
use qvdp_core::spectrum::{self, FrequencyGrid, SpectrumStrategy};
use qvdp_core::{DensityMatrix, SystemParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dim(n: usize) -> FockDim {
    FockDim::new(n).unwrap()
}

fn converged(p: &SystemParams) -> DensityMatrix {
    choose_dim_with(p, &DimSearch { cap: 48, ..Default::default() })
        .unwrap()
        .steady
        .rho
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> DensityMatrix {
    let d = dim(n);
    let g = Operator::from_fn(d, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let m = &g * &g.dagger();
    let tr = m.trace();
    DensityMatrix::new(m.scale(Complex64::new(1.0 / tr.re, 0.0))).unwrap()
}

/// Brute-force `∫ e^{iφ} P(φ) dφ` with `P` from the double sum over all
/// matrix elements.
fn quadrature_moment(rho: &DensityMatrix, points: usize) -> Complex64 {
    let n = rho.dim().get();
    let h = 2.0 * PI / points as f64;
    (0..points)
        .map(|k| {
            let phi = h * k as f64;
            let mut p = Complex64::new(0.0, 0.0);
            for m in 0..n {
                for l in 0..n {
                    p += Complex64::from_polar(1.0, (l as f64 - m as f64) * phi) * rho.get(m, l);
                }
            }
            Complex64::from_polar(1.0, phi) * p.re / (2.0 * PI) * h
        })
        .sum()
}

#[test]
fn subdiagonal_sum_equals_quadrature_mrl() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [4, 6, 8, 16] {
        for _ in 0..10 {
            let rho = random_state(&mut rng, n);
            let q = quadrature_moment(&rho, 4096);
            let m = sync_measure(&rho);
            assert!((q.norm() - m.s).abs() < 1e-8, "dim {n}: {} vs {}", q.norm(), m.s);
            assert!(m.s < 1.0);
        }
    }
}

#[test]
fn ansatz_matches_numerics_elementwise() {
    let p = SystemParams::in_units_of_gamma1(100.0, 0.5, 0.2, 0.1, 0.0);
    let st = analytic::ansatz_elements(&p).unwrap();
    let rho = converged(&p);
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    assert!(rel(rho.population(0), st.rho00) < 0.02);
    assert!(rel(rho.population(1), st.rho11) < 0.02);
    // the ansatz drops ρ₀₂ and ρ₁₂, which feed back on ρ₀₁ at O(γ₁/γ₂)
    assert!(rel(rho.population(2), st.rho22) < 0.05);
    assert!((rho.get(0, 1) - st.rho01).norm() / st.rho01.norm() < 0.05);
}

#[test]
fn weak_drive_sync_matches_noiseless_formula() {
    let p = SystemParams::in_units_of_gamma1(100.0, 0.0, 0.0, 0.1, 0.0);
    let rho = converged(&p);
    let closed = analytic::sync_closed(&p, SyncLimit::Noiseless).unwrap();
    let s = coherence(&rho, 0, 1).unwrap();
    assert!((s - closed.s).abs() / closed.s < 0.05, "{s} vs {}", closed.s);
    let far = SystemParams::in_units_of_gamma1(1e4, 0.0, 0.0, 0.1, 0.0);
    let s_far = coherence(&converged(&far), 0, 1).unwrap();
    let closed_far = analytic::sync_noiseless(&far);
    assert!((s_far - closed_far).abs() / closed_far < 1e-3);
}

#[test]
fn deep_quantum_sync_within_ten_percent_of_noiseless() {
    for r in [100.0, 300.0, 1000.0] {
        for (d, w) in [(0.0, 0.2), (0.7, 0.3), (-1.5, 0.4)] {
            let p = SystemParams::in_units_of_gamma1(r, 0.0, d, w, 0.0);
            let s = sync_measure(&converged(&p)).s;
            let closed = analytic::sync_noiseless(&p);
            assert!((s - closed).abs() / closed < 0.10, "r={r} δ={d} Ω={w}: {s} vs {closed}");
        }
    }
}

#[test]
fn threshold_drive_distorts_numerical_amplitude_by_epsilon() {
    let base = SystemParams::in_units_of_gamma1(1e4, 0.0, 0.0, 0.0, 0.0);
    let w = analytic::threshold_drive(&base, 0.1).unwrap();
    let n0 = amplitude(&converged(&base));
    let n = amplitude(&converged(&base.with_omega(w)));
    assert!(((n - n0) - 0.1).abs() < 0.001, "ΔN = {}", n - n0);
}

#[test]
fn deep_quantum_limit_is_limit_of_ansatz() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let p = SystemParams::in_units_of_gamma1(
            1e6,
            rng.random_range(0.0..3.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(0.01..3.0),
            0.0,
        );
        let full = analytic::ansatz_elements(&p).unwrap().sync();
        let lim = analytic::sync_deep_quantum_limit(&p);
        assert!((full - lim).abs() / lim < 1e-4);
        let n_full = analytic::ansatz_elements(&p).unwrap().amplitude();
        assert!((n_full - analytic::amplitude_deep_quantum_limit(&p)).abs() < 1e-4);
    }
}

#[test]
fn ansatz_populations_sum_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let p = SystemParams::in_units_of_gamma1(
            10f64.powf(rng.random_range(-2.0..4.0)),
            rng.random_range(0.0..5.0),
            rng.random_range(-5.0..5.0),
            rng.random_range(0.0..5.0),
            0.0,
        );
        let st = analytic::ansatz_elements(&p).unwrap();
        assert!((st.rho00 + st.rho11 + st.rho22 - 1.0).abs() < 1e-10);
        assert!(st.rho00 >= 0.0 && st.rho11 >= 0.0 && st.rho22 >= 0.0);
        assert!(st.denominator > 0.0);
    }
}

#[test]
fn cardioid_mrl_equals_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let p = SystemParams::in_units_of_gamma1(
            1.0,
            rng.random_range(0.0..4.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(0.0..4.0),
            0.0,
        );
        let m = analytic::cardioid_modulation_deep_quantum_limit(&p) / 2.0;
        let s = analytic::sync_deep_quantum_limit(&p);
        assert!((m - s).abs() <= 1e-10 * s.max(1e-300));
    }
}

#[test]
fn golden_section_finds_closed_form_optimum() {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for kappa in [0.0, 0.5, 2.0, 7.0] {
        let f = |w: f64| analytic::sync_deep_quantum_limit(&SystemParams::in_units_of_gamma1(1.0, kappa, 0.0, w, 0.0));
        let (mut a, mut b) = (0.0, 20.0);
        for _ in 0..200 {
            let c = b - phi * (b - a);
            let d = a + phi * (b - a);
            if f(c) > f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let found = 0.5 * (a + b);
        let closed = ((9.0 + 6.0 * kappa + kappa * kappa) / 8.0f64).sqrt();
        let p = SystemParams::in_units_of_gamma1(1.0, kappa, 0.0, 0.0, 0.0);
        assert!((found - closed).abs() < 1e-6);
        assert!((analytic::optimal_drive_deep_quantum_limit(&p) - closed).abs() < 1e-12);
    }
}

#[test]
fn boost_sign_matches_numerics() {
    let h = 1e-3;
    for (r, expect_gain) in [(1e4, true), (100.0, true), (0.5, false), (0.7, false)] {
        let s = |k: f64| sync_measure(&converged(&SystemParams::in_units_of_gamma1(r, k, 0.0, 0.5, 0.0))).s;
        let fd = (-3.0 * s(0.0) + 4.0 * s(h) - s(2.0 * h)) / (2.0 * h);
        let b = analytic::boost_analysis(&SystemParams::in_units_of_gamma1(r, 0.0, 0.0, 0.5, 0.0)).unwrap();
        assert_eq!(b.boost_possible, expect_gain);
        assert_eq!(fd > 0.0, expect_gain, "r={r}: fd={fd}");
    }
}

#[test]
fn weak_drive_coherence_ordering() {
    let p = SystemParams::in_units_of_gamma1(100.0, 0.0, 0.3, 0.2, 0.0);
    let rho = converged(&p);
    assert!(coherence(&rho, 1, 2).unwrap() > coherence(&rho, 0, 2).unwrap());
}

#[test]
fn coherence_versus_noise_at_threshold_drive() {
    let at = |k: f64, relative: bool| {
        let b = SystemParams::in_units_of_gamma1(100.0, k, 0.0, 0.0, 0.0);
        let w = if relative {
            analytic::threshold_drive_relative(&b, 0.1).unwrap()
        } else {
            analytic::threshold_drive(&b, 0.1).unwrap()
        };
        coherence(&converged(&b.with_omega(w)), 0, 1).unwrap()
    };
    let ks = [0.0, 1.0, 3.0, 10.0];
    let absolute: Vec<f64> = ks.iter().map(|&k| at(k, false)).collect();
    assert!(absolute.windows(2).all(|w| w[1] > w[0]), "{absolute:?}");
    let relative: Vec<f64> = ks.iter().map(|&k| at(k, true)).collect();
    assert!(relative[1] > relative[0], "{relative:?}");
    assert!(relative[3] < relative[1], "{relative:?}");
}

#[test]
fn undriven_amplitudes() {
    let p = SystemParams::in_units_of_gamma1(1e4, 0.0, 0.0, 0.0, 0.0);
    let rho = converged(&p);
    assert!((rho.population(0) - 2.0 / 3.0).abs() < 1e-3);
    assert!((rho.population(1) - 1.0 / 3.0).abs() < 1e-3);
    let noisy = converged(&p.with_kappa(1.0));
    assert!((amplitude(&noisy) - 0.25).abs() < 1e-3);
}

#[test]
fn mean_direction_is_drive_independent() {
    let mus: Vec<f64> = [0.05, 0.2, 0.5]
        .iter()
        .map(|&w| sync_measure(&converged(&SystemParams::in_units_of_gamma1(1e4, 1.0, 1.0, w, 0.0))).mu)
        .collect();
    let p = SystemParams::in_units_of_gamma1(1e4, 1.0, 1.0, 0.5, 0.0);
    for mu in &mus {
        assert!((mu - analytic::mean_direction(&p)).abs() < 1e-3);
    }
}

#[test]
fn evolution_relaxes_to_steady_state() {
    let p = SystemParams::in_units_of_gamma1(5.0, 0.2, 0.4, 0.3, 0.1);
    let d = dim(10);
    let l = Liouvillian::build(&p, d).unwrap();
    let ss = liouvillian::steady_state(&l).unwrap().rho;
    let rho = liouvillian::evolve(&l, &DensityMatrix::fock(d, 3).unwrap(), 150.0).unwrap();
    assert!(rho.operator().max_abs_diff(ss.operator()) < 1e-6);
    for t in [0.1, 1.0, 7.5] {
        let r = liouvillian::evolve(&l, &DensityMatrix::fock(d, 0).unwrap(), t).unwrap();
        assert!((r.trace().re - 1.0).abs() < 1e-9);
    }
}

#[test]
fn undriven_correlation_rotates_at_detuning_and_decays() {
    let p = SystemParams::in_units_of_gamma1(20.0, 0.3, 0.8, 0.0, 0.0);
    let d = dim(7);
    let taus: Vec<f64> = (0..60).map(|k| 0.05 * k as f64).collect();
    let g = spectrum::correlation_at(&p, d, &taus).unwrap();

    // oracle: eigen-decompose L and expand a ρ_ss directly
    let l = Liouvillian::build(&p, d).unwrap();
    let rho = liouvillian::steady_state(&l).unwrap().rho;
    let seed = (&annihilation(d) * rho.operator()).vectorize();
    let evd = l.matrix().eigen().unwrap();
    let lu = evd.U().partial_piv_lu();
    let b = faer::linalg::solvers::Solve::solve(&lu, seed.as_ref());
    let adag = annihilation(d).dagger();
    for (k, &tau) in taus.iter().enumerate() {
        let mut v = Complex64::new(0.0, 0.0);
        for j in 0..evd.U().ncols() {
            let lam = evd.S()[j];
            let mode = Operator::from_vectorized(d, evd.U().col(j));
            v += b[(j, 0)] * (lam * tau).exp() * (&adag * &mode).trace();
        }
        assert!((v - g[k]).norm() < 1e-9, "τ={tau}: {v} vs {}", g[k]);
    }
    for w in g.windows(2) {
        assert!(w[1].norm() <= w[0].norm() + 1e-14);
        let rot = (w[1] / w[0]).arg() / 0.05;
        assert!((rot - 0.8).abs() < 1e-6, "rotation {rot}");
    }
    assert!((g[0].re - amplitude(&rho)).abs() < 1e-12);
}

#[test]
fn spectrum_pipelines_and_sum_rule() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..4 {
        let p = SystemParams::in_units_of_gamma1(
            10f64.powf(rng.random_range(0.0..2.0)),
            rng.random_range(0.0..1.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(0.0..1.0),
            rng.random_range(0.0..0.5),
        );
        let d = spectrum::spectrum_dim(&p).unwrap();
        let modal = spectrum::ModalSpectrum::compute(&p, d).unwrap();
        let half = FrequencyGrid::required_half_span(&p);
        let grid = FrequencyGrid::symmetric(half, modal.max_step().min(0.02)).unwrap();
        let e = spectrum::power_spectrum_with(&p, d, &grid, SpectrumStrategy::EigenOnly).unwrap();
        let f = spectrum::fft_spectrum(&p, d, &grid).unwrap_or_else(|e| panic!("{p:?}: {e}"));
        let peak = e.peak_height();
        for (a, b) in e.density.iter().zip(&f.density) {
            assert!((a - b).abs() < 0.01 * peak, "{p:?}");
            assert!(*a >= -1e-10);
        }

        let rho = converged(&p);
        let n = amplitude(&rho);
        let mean_a = rho.expect(&annihilation(rho.dim())).unwrap();
        let wide = FrequencyGrid::symmetric(2000.0, modal.max_step().min(0.02)).unwrap();
        let weight = modal.evaluate(&p, &wide).unwrap().total_weight();
        let expected = 2.0 * PI * (n - mean_a.norm_sqr());
        assert!((weight - expected).abs() < 0.02 * expected, "{weight} vs {expected}");
    }
}

#[test]
fn phase_symmetric_sector_handles_large_truncations() {
    let p = SystemParams::in_units_of_gamma1(0.01, 0.0, 0.0, 0.0, 0.0);
    let choice = choose_dim_with(&p, &DimSearch::default()).unwrap();
    assert!(choice.dim.get() > 80);
    let mf = analytic::mean_field_amplitude(&p).unwrap();
    assert!((amplitude(&choice.steady.rho) - mf).abs() / mf < 0.1);
    let dense = choose_dim_with(&p, &DimSearch { cap: 40, strategy: SolveStrategy::Dense, ..Default::default() });
    assert!(dense.is_err());
    let _ = number(choice.dim);
    let _ = observables::DEFAULT_PHASE_POINTS;
}
