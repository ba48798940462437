//! Grid evaluation and CSV output.
//!
//! Every grid point is solved independently on a bounded worker pool; rows
//! are collected in grid order, so the CSV bytes depend only on the config,
//! the tolerance profile and the dimension override.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qvdp_core::analytic::{self, SyncLimit};
use qvdp_core::liouvillian::{choose_dim_with, solve_steady_state, DimSearch, SolveStrategy, SteadyState};
use qvdp_core::observables::{amplitude, coherence, sync_measure};
use qvdp_core::spectrum::{power_spectrum_auto, spectrum_dim, SpectrumResult};
use qvdp_core::{FockDim, SystemParams};
use rayon::prelude::*;

use crate::config::{Output, Param, ScenarioConfig, SyncReference, ThresholdRule};
use crate::error::{Result, SweepError};
use crate::profile::TolerancePolicy;

/// Largest frequency grid a spectrum column may use.
pub const MAX_SPECTRUM_POINTS: usize = 400_000;

/// Fraction of failed rows above which a run counts as failed.
pub const MAX_FAILED_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub workers: usize,
    /// Overrides the scenario's `dim_override`.
    pub dim: Option<usize>,
    pub policy: TolerancePolicy,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            dim: None,
            policy: TolerancePolicy::DEFAULT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Number(f64),
    Flag(bool),
    Empty,
}

impl Cell {
    fn from_result(r: qvdp_core::Result<f64>) -> Self {
        r.map_or(Cell::Empty, Cell::Number)
    }

    pub fn as_f64(self) -> Option<f64> {
        match self {
            Cell::Number(x) if x.is_finite() => Some(x),
            _ => None,
        }
    }

    fn render(self) -> String {
        match self {
            Cell::Number(x) if x.is_finite() => format!("{x:.11e}"),
            Cell::Flag(b) => b.to_string(),
            _ => String::new(),
        }
    }
}

/// One grid point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Parameters actually solved, including a threshold-derived drive.
    pub params: SystemParams,
    pub cells: Vec<Cell>,
    pub dim_used: Option<usize>,
    pub residual: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub config: ScenarioConfig,
    pub policy: TolerancePolicy,
    pub dim: Option<usize>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn failed_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.failed()).count()
    }

    /// More than [`MAX_FAILED_FRACTION`] of the rows carry an error.
    pub fn excessive_failures(&self) -> bool {
        self.failed_rows() as f64 > MAX_FAILED_FRACTION * self.rows.len() as f64
    }

    /// Values of one requested output, `None` where the cell is empty.
    pub fn column(&self, output: Output) -> Option<Vec<Option<f64>>> {
        let idx = self.config.outputs.iter().position(|&o| o == output)?;
        Some(self.rows.iter().map(|r| r.cells[idx].as_f64()).collect())
    }

    pub fn header(&self) -> Vec<&'static str> {
        let mut h: Vec<&'static str> = Param::ALL.iter().map(|p| p.column()).collect();
        h.extend(self.config.outputs.iter().map(|o| o.column()));
        h.extend(["dim_used", "residual", "error"]);
        h
    }

    pub fn to_csv(&self) -> Result<String> {
        let cfg = &self.config;
        let mut out = String::new();
        let _ = writeln!(out, "# scenario: {}", cfg.name);
        if !cfg.description.is_empty() {
            let _ = writeln!(out, "# description: {}", cfg.description.replace('\n', " "));
        }
        let _ = writeln!(out, "# reconstructed: {}", cfg.reconstructed);
        let _ = writeln!(out, "# config_sha256: {}", cfg.digest());
        let _ = writeln!(out, "# tolerance: {}", self.policy);
        if let Some(d) = self.dim {
            let _ = writeln!(out, "# dim_override: {d}");
        }
        if let Some(eps) = cfg.epsilon {
            let rule = match cfg.threshold_rule {
                ThresholdRule::Absolute => "absolute",
                ThresholdRule::Relative => "relative",
            };
            let _ = writeln!(
                out,
                "# epsilon: {eps} threshold_rule: {rule} omega_from_threshold: {}",
                cfg.omega_from_threshold
            );
        }
        if let Some(w) = cfg.drive_strength {
            let _ = writeln!(out, "# drive_strength: {w}");
        }
        for (i, axis) in cfg.axes.iter().enumerate() {
            let _ = writeln!(
                out,
                "# axis{}: {} min={} max={} n={} scale={}",
                i,
                axis.param,
                axis.min,
                axis.max,
                axis.n,
                if axis.scale == crate::config::Scale::Log { "log" } else { "linear" }
            );
        }
        let _ = writeln!(out, "# rows: {} failed: {}", self.rows.len(), self.failed_rows());

        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(self.header())?;
        for row in &self.rows {
            let mut rec: Vec<String> = Param::ALL
                .iter()
                .map(|p| Cell::Number(p.get(&row.params)).render())
                .collect();
            rec.extend(row.cells.iter().map(|c| c.render()));
            rec.push(row.dim_used.map(|d| d.to_string()).unwrap_or_default());
            rec.push(row.residual.map(|r| Cell::Number(r).render()).unwrap_or_default());
            rec.push(row.error.clone().unwrap_or_default());
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| SweepError::Io(e.into_error()))?;
        out.push_str(std::str::from_utf8(&bytes).expect("csv output is utf-8"));
        Ok(out)
    }

    /// Writes `<dir>/<name>.csv`, creating `dir` if needed.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.csv", self.config.name));
        std::fs::write(&path, self.to_csv()?)?;
        Ok(path)
    }
}

pub fn run_scenario(config: &ScenarioConfig, opts: &RunOptions) -> Result<SweepTable> {
    config.validate()?;
    let dim = opts.dim.or(config.dim_override);
    let dim = dim.map(FockDim::new).transpose()?;
    faer::set_global_parallelism(faer::Par::Seq);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| SweepError::Config(format!("cannot start worker pool: {e}")))?;
    let grid = config.grid();
    let eval = PointEvaluator { config, policy: opts.policy, dim };
    let rows = pool.install(|| grid.par_iter().map(|p| eval.row(*p)).collect());
    Ok(SweepTable {
        config: config.clone(),
        policy: opts.policy,
        dim: dim.map(FockDim::get),
        rows,
    })
}

struct PointEvaluator<'a> {
    config: &'a ScenarioConfig,
    policy: TolerancePolicy,
    dim: Option<FockDim>,
}

fn needs_steady_state(o: Output) -> bool {
    matches!(
        o,
        Output::NNumeric
            | Output::DeltaN
            | Output::RelDistortion
            | Output::SNumeric
            | Output::MuNumeric
            | Output::PhaseDefined
            | Output::Coh01
            | Output::Coh02
            | Output::Coh12
            | Output::SAbsDiff
            | Output::SRelDiff
    )
}

fn needs_undriven(o: Output) -> bool {
    matches!(o, Output::N0Numeric | Output::DeltaN | Output::RelDistortion)
}

pub fn threshold(rule: ThresholdRule, p: &SystemParams, epsilon: f64) -> qvdp_core::Result<f64> {
    match rule {
        ThresholdRule::Absolute => analytic::threshold_drive(p, epsilon),
        ThresholdRule::Relative => analytic::threshold_drive_relative(p, epsilon),
    }
}

impl PointEvaluator<'_> {
    fn solve(&self, p: &SystemParams) -> qvdp_core::Result<SteadyState> {
        match self.dim {
            Some(d) => solve_steady_state(p, d, SolveStrategy::Auto),
            None => {
                let search = DimSearch {
                    tol: self.policy.dim_tol,
                    ..DimSearch::default()
                };
                Ok(choose_dim_with(p, &search)?.steady)
            }
        }
    }

    fn spectrum(&self, p: &SystemParams, row: &mut SweepRow) -> qvdp_core::Result<SpectrumResult> {
        let d = match self.dim {
            Some(d) => d,
            None => spectrum_dim(p)?,
        };
        row.dim_used = Some(row.dim_used.map_or(d.get(), |u| u.max(d.get())));
        power_spectrum_auto(p, d, MAX_SPECTRUM_POINTS)
    }

    fn row(&self, grid_point: SystemParams) -> SweepRow {
        let cfg = self.config;
        let mut row = SweepRow {
            params: grid_point,
            cells: vec![Cell::Empty; cfg.outputs.len()],
            dim_used: None,
            residual: None,
            error: None,
        };
        if let Err(e) = self.fill(&mut row) {
            row.error = Some(e.to_string());
        }
        row
    }

    fn fill(&self, row: &mut SweepRow) -> qvdp_core::Result<()> {
        let cfg = self.config;
        let outputs = &cfg.outputs;
        let want = |o: Output| outputs.contains(&o);

        let omega_th = cfg.epsilon.map(|eps| threshold(cfg.threshold_rule, &row.params, eps));
        if cfg.omega_from_threshold {
            let w = omega_th.clone().expect("validated: epsilon present")?;
            row.params = row.params.with_omega(w);
        }
        let p = row.params;
        p.validate()?;

        let steady = if outputs.iter().any(|&o| needs_steady_state(o)) {
            let ss = self.solve(&p)?;
            row.dim_used = Some(ss.rho.dim().get());
            row.residual = Some(ss.residual);
            Some(ss)
        } else {
            None
        };
        let n0 = if outputs.iter().any(|&o| needs_undriven(o)) {
            Some(amplitude(&self.solve(&p.undriven())?.rho))
        } else {
            None
        };
        let spectrum = if want(Output::DeltaObs) || want(Output::DeltaRel) {
            Some(self.spectrum(&p, row)?)
        } else {
            None
        };
        let comparison = if outputs.iter().any(|o| o.needs_drive_strength()) {
            let w = cfg.drive_strength.expect("validated: drive strength present");
            let harmonic = self.spectrum(&p.with_eta(0.0).with_omega(w), row)?;
            let squeeze = self.spectrum(&p.with_omega(0.0).with_eta(w), row)?;
            Some((harmonic, squeeze))
        } else {
            None
        };

        let rho = steady.as_ref().map(|s| &s.rho);
        let n = rho.map(amplitude);
        let sync = rho.map(sync_measure);
        let reference = || match cfg.sync_reference {
            SyncReference::Noiseless => analytic::sync_closed(&p, SyncLimit::Noiseless).map(|c| c.s),
            SyncReference::DeepQuantumLimit => {
                analytic::sync_closed(&p, SyncLimit::DeepQuantumLimit).map(|c| c.s)
            }
            SyncReference::Ansatz => analytic::ansatz_elements(&p).map(|a| a.sync()),
        };
        let num = |x: Option<f64>| x.map_or(Cell::Empty, Cell::Number);

        for (slot, &o) in row.cells.iter_mut().zip(outputs) {
            *slot = match o {
                Output::NNumeric => num(n),
                Output::N0Numeric => num(n0),
                Output::DeltaN => num(n.zip(n0).map(|(n, n0)| n - n0)),
                Output::RelDistortion => num(n.zip(n0).map(|(n, n0)| (n - n0) / n0)),
                Output::SNumeric => num(sync.map(|s| s.s)),
                Output::MuNumeric => num(sync.filter(|s| s.phase_defined).map(|s| s.mu)),
                Output::PhaseDefined => sync.map_or(Cell::Empty, |s| Cell::Flag(s.phase_defined)),
                Output::Coh01 => num(rho.and_then(|r| coherence(r, 0, 1).ok())),
                Output::Coh02 => num(rho.and_then(|r| coherence(r, 0, 2).ok())),
                Output::Coh12 => num(rho.and_then(|r| coherence(r, 1, 2).ok())),
                Output::SNoiseless => {
                    Cell::from_result(analytic::sync_closed(&p, SyncLimit::Noiseless).map(|c| c.s))
                }
                Output::SDeepQuantumLimit => Cell::from_result(
                    analytic::sync_closed(&p, SyncLimit::DeepQuantumLimit).map(|c| c.s),
                ),
                Output::SAnsatz => Cell::from_result(analytic::ansatz_elements(&p).map(|a| a.sync())),
                Output::MuClosed => num(
                    analytic::sync_closed(&p, SyncLimit::DeepQuantumLimit)
                        .ok()
                        .filter(|c| c.phase_defined)
                        .map(|c| c.mu),
                ),
                Output::SAbsDiff => num(sync.zip(reference().ok()).map(|(s, r)| (s.s - r).abs())),
                Output::SRelDiff => num(
                    sync.zip(reference().ok())
                        .filter(|(_, r)| *r > 0.0)
                        .map(|(s, r)| (s.s - r).abs() / r),
                ),
                Output::NEq5 => Cell::Number(analytic::undriven_amplitude(&p)),
                Output::NSse => Cell::from_result(analytic::undriven_amplitude_sse(&p)),
                Output::NMeanField => Cell::from_result(analytic::mean_field_amplitude(&p)),
                Output::NDeepQuantumLimit => {
                    if p.eta == 0.0 {
                        Cell::Number(analytic::amplitude_deep_quantum_limit(&p))
                    } else {
                        Cell::Empty
                    }
                }
                Output::NAnsatz => Cell::from_result(analytic::ansatz_elements(&p).map(|a| a.amplitude())),
                Output::OmegaTh => num(omega_th.clone().and_then(|r| r.ok())),
                Output::DeltaObs => num(spectrum.as_ref().map(|s| s.delta_obs)),
                Output::DeltaRel => num(spectrum.as_ref().and_then(|s| s.delta_rel)),
                Output::DeltaObsHarmonic => num(comparison.as_ref().map(|c| c.0.delta_obs)),
                Output::DeltaRelHarmonic => num(comparison.as_ref().and_then(|c| c.0.delta_rel)),
                Output::DeltaObsSqueeze => num(comparison.as_ref().map(|c| c.1.delta_obs)),
                Output::DeltaRelSqueeze => num(comparison.as_ref().and_then(|c| c.1.delta_rel)),
            };
        }

        if let Some(r) = row.residual {
            if r.is_nan() || r >= self.policy.residual_max {
                return Err(qvdp_core::Error::NoSteadyState(format!(
                    "residual {r:.3e} exceeds {:.0e}",
                    self.policy.residual_max
                )));
            }
        }
        if let Some(bad) = row.cells.iter().position(|c| matches!(c, Cell::Number(x) if !x.is_finite())) {
            return Err(qvdp_core::Error::Stiffness(format!("non-finite {}", outputs[bad])));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Axis;
    use crate::presets::{preset, EPSILON};

    fn small(outputs: Vec<Output>) -> ScenarioConfig {
        ScenarioConfig {
            outputs,
            axes: vec![Axis::linear(Param::Delta, -1.0, 1.0, 3)],
            ..preset("fig2a").unwrap()
        }
    }

    fn opts(workers: usize) -> RunOptions {
        RunOptions { workers, ..RunOptions::default() }
    }

    #[test]
    fn cells_render_twelve_significant_digits() {
        assert_eq!(Cell::Number(0.1).render(), "1.00000000000e-1");
        assert_eq!(Cell::Number(-2.5e-12).render(), "-2.50000000000e-12");
        assert_eq!(Cell::Number(f64::NAN).render(), "");
        assert_eq!(Cell::Empty.render(), "");
        assert_eq!(Cell::Flag(true).render(), "true");
    }

    #[test]
    fn rows_follow_grid_and_columns_follow_outputs() {
        let mut cfg = small(vec![Output::SNumeric, Output::SNoiseless, Output::PhaseDefined]);
        cfg.fixed.insert(Param::Omega, 0.2);
        let t = run_scenario(&cfg, &opts(2)).unwrap();
        assert_eq!(t.rows.len(), 3);
        assert_eq!(t.failed_rows(), 0);
        let deltas: Vec<f64> = t.rows.iter().map(|r| r.params.delta).collect();
        assert_eq!(deltas, vec![-1.0, 0.0, 1.0]);
        let s = t.column(Output::SNumeric).unwrap();
        let closed = t.column(Output::SNoiseless).unwrap();
        for (a, b) in s.iter().zip(&closed) {
            assert!((a.unwrap() - b.unwrap()).abs() / b.unwrap() < 0.1);
        }
        assert!(t.column(Output::NEq5).is_none());
        assert!(t.rows.iter().all(|r| r.residual.unwrap() < 1e-8 && r.dim_used.is_some()));
    }

    #[test]
    fn inapplicable_closed_forms_leave_empty_cells() {
        let mut cfg = small(vec![Output::SNoiseless, Output::NMeanField, Output::SDeepQuantumLimit]);
        cfg.fixed.insert(Param::Kappa, 0.5);
        cfg.fixed.insert(Param::Eta, 0.3);
        let t = run_scenario(&cfg, &opts(1)).unwrap();
        assert_eq!(t.failed_rows(), 0);
        assert!(t.rows.iter().all(|r| r.cells.iter().all(|c| *c == Cell::Empty)));
        let csv = t.to_csv().unwrap();
        assert!(csv.lines().last().unwrap().contains(",,,"));
    }

    #[test]
    fn threshold_drive_replaces_omega() {
        let mut cfg = small(vec![Output::OmegaTh, Output::RelDistortion]);
        cfg.fixed.remove(&Param::Omega);
        cfg.omega_from_threshold = true;
        cfg.fixed.insert(Param::Gamma2, 1e4);
        let t = run_scenario(&cfg, &opts(1)).unwrap();
        for (row, w) in t.rows.iter().zip(t.column(Output::OmegaTh).unwrap()) {
            assert_eq!(row.params.omega, w.unwrap());
        }
        cfg.threshold_rule = ThresholdRule::Relative;
        let t = run_scenario(&cfg, &opts(1)).unwrap();
        for d in t.column(Output::RelDistortion).unwrap() {
            assert!((d.unwrap() - EPSILON).abs() < 2e-3, "{d:?}");
        }
    }

    #[test]
    fn solver_errors_flag_rows_and_count_as_failures() {
        let mut cfg = small(vec![Output::SNumeric]);
        cfg.fixed.insert(Param::Omega, 0.2);
        let t = run_scenario(&cfg, &RunOptions { dim: Some(60), ..opts(1) }).unwrap();
        assert_eq!(t.failed_rows(), 3);
        assert!(t.excessive_failures());
        let csv = t.to_csv().unwrap();
        assert!(csv.contains("dense superoperator"));
        assert!(csv.contains("# dim_override: 60"));
    }

    #[test]
    fn unattainable_threshold_fails_only_that_row() {
        let mut cfg = small(vec![Output::SNumeric]);
        cfg.fixed.remove(&Param::Omega);
        cfg.omega_from_threshold = true;
        cfg.epsilon = Some(0.2);
        cfg.fixed.remove(&Param::Kappa);
        cfg.axes = vec![Axis::linear(Param::Kappa, 0.0, 1.0, 2)];
        let t = run_scenario(&cfg, &opts(1)).unwrap();
        assert!(t.rows[0].failed());
        assert!(!t.rows[1].failed());
    }
}
