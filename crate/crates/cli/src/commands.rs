//! The four subcommands. Each returns the status it wants the process to
//! exit with; files are written before returning, including on failure.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use jflow_core::par::with_workers;
use jflow_core::snapshot::{self, Snapshot};
use jflow_core::{
    boundedness, build_ma_problem, compare_with_flow, critical_chi, default_exponent, epsilon_margin, fit_decay_rate,
    newton_solve, run, DiagnosticsRecord, FlowObserver, FlowState, InvariantMonitor, OracleError, SurfaceModel,
    Tolerances,
};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{Category, CliError};
use crate::series::{write_newton_residuals, write_series};
use crate::summary::RunSummary;

pub const SERIES_FILE: &str = "series.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const PHI_FINAL: &str = "phi_final.jfld";
pub const CHI_FINAL: &str = "chi_final.jfld";
pub const PHI_MA: &str = "phi_ma.jfld";
pub const CHI_MA: &str = "chi_ma.jfld";
pub const NEWTON_FILE: &str = "newton_residuals.csv";

/// Command-line overrides shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub workers: Option<usize>,
    pub snapshot_every: Option<u64>,
    pub quiet: bool,
}

impl Overrides {
    fn output_dir(&self, cfg: &RunConfig) -> PathBuf {
        self.output.clone().unwrap_or_else(|| cfg.output_dir.clone())
    }
}

pub fn snapshot_name(step: usize) -> String {
    format!("phi_{step:06}.jfld")
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::usage(format!("cannot create {}: {e}", dir.display())))
}

fn build_model(cfg: &RunConfig) -> Result<SurfaceModel, CliError> {
    Ok(cfg.model()?)
}

struct SnapshotWriter {
    dir: PathBuf,
    every: usize,
    error: Option<std::io::Error>,
}

impl SnapshotWriter {
    fn save(&mut self, state: &FlowState) {
        if self.error.is_none() {
            let path = self.dir.join(snapshot_name(state.steps));
            if let Err(e) = snapshot::save_scalar(path, &state.phi) {
                self.error = Some(e);
            }
        }
    }
}

impl FlowObserver for SnapshotWriter {
    fn on_step(&mut self, state: &FlowState) {
        if self.every > 0 && state.steps % self.every == 0 {
            self.save(state);
        }
    }
}

struct Progress {
    quiet: bool,
    samples: usize,
}

impl FlowObserver for Progress {
    fn on_sample(&mut self, r: &DiagnosticsRecord, state: &FlowState) {
        if !self.quiet && self.samples % 20 == 0 {
            eprintln!(
                "step {:>8}  t {:>10.4}  osc(phidot) {:.3e}  J {:+.6e}  I {:+.3e}",
                state.steps, r.t, r.osc_phidot, r.j, r.i
            );
        }
        self.samples += 1;
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("summary serializes");
    fs::write(path, text + "\n").map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
}

fn save_series(dir: &Path, series: &[DiagnosticsRecord]) -> Result<(), CliError> {
    let file = File::create(dir.join(SERIES_FILE))?;
    write_series(BufWriter::new(file), series)?;
    Ok(())
}

/// Outcome of `run`: the summary that was written and the error, if any,
/// that decides the exit status.
#[derive(Debug)]
pub struct RunReport {
    pub summary: RunSummary,
    pub error: Option<CliError>,
    pub output_dir: PathBuf,
}

pub fn cmd_run(cfg: &RunConfig, ov: &Overrides) -> Result<RunReport, CliError> {
    let model = build_model(cfg)?;
    let dir = ov.output_dir(cfg);
    create_dir(&dir)?;
    let exponent_a = cfg.a_override.unwrap_or_else(|| default_exponent(&model));
    let flow_cfg = cfg.flow_config(exponent_a);
    let every = ov.snapshot_every.unwrap_or(cfg.snapshot_interval) as usize;

    let mut monitor = InvariantMonitor::new(Tolerances::default());
    let mut snaps = SnapshotWriter { dir: dir.clone(), every, error: None };
    if every > 0 {
        snaps.save(&FlowState::initial(&model)?);
    }
    let mut progress = Progress { quiet: ov.quiet, samples: 0 };
    let result = with_workers(ov.workers, || run(&model, &flow_cfg, (&mut monitor, (&mut snaps, &mut progress))));
    if let Some(e) = snaps.error.take() {
        return Err(CliError::usage(format!("cannot write snapshot: {e}")));
    }

    let mut summary = RunSummary { exponent_a, ..RunSummary::default() };
    let (series, state, error) = match result {
        Ok(out) => {
            summary.converged = out.converged;
            summary.dt_halvings = out.halvings;
            (out.series, Some(out.state), None)
        }
        Err(fail) => (fail.series, fail.state.map(|s| *s), Some(CliError::from(fail.error))),
    };
    save_series(&dir, &series)?;
    if let Some(state) = &state {
        snapshot::save_scalar(dir.join(PHI_FINAL), &state.phi)?;
        snapshot::save_form(dir.join(CHI_FINAL), &state.chi)?;
        summary.final_t = state.t;
        summary.steps = state.steps;
        summary.final_sup_abs_phidot = state.sup_abs_phidot();
    }
    summary.samples = series.len();
    summary.set_violations(&monitor.counts());
    summary.worst_gauge_residual = monitor.worst_gauge();
    let osc: Vec<(f64, f64)> = series.iter().map(|r| (r.t, r.osc_phidot)).collect();
    summary.set_decay(fit_decay_rate(&osc).ok().as_ref());
    summary.set_boundedness(&boundedness(&series));

    let error = error.or_else(|| {
        let violations = monitor.counts().total();
        if !summary.converged {
            Some(CliError::new(
                Category::NonConvergence,
                format!("sup |phidot| = {:e} at t_max = {}", summary.final_sup_abs_phidot, cfg.t_max),
            ))
        } else if violations > 0 {
            Some(CliError::new(Category::NumericalFailure, format!("{violations} monitored inequality violations")))
        } else {
            None
        }
    });
    if let Some(e) = &error {
        summary.status = e.category.name().into();
        summary.exit_code = e.category.code();
    }
    write_json(&dir.join(SUMMARY_FILE), &summary)?;
    Ok(RunReport { summary, error, output_dir: dir })
}

#[derive(Debug)]
pub struct CriticalReport {
    pub residuals: Vec<f64>,
    pub error: Option<CliError>,
    pub output_dir: PathBuf,
}

pub fn cmd_critical(cfg: &RunConfig, ov: &Overrides) -> Result<CriticalReport, CliError> {
    let model = build_model(cfg)?;
    let problem = build_ma_problem(&model)?;
    let dir = ov.output_dir(cfg);
    create_dir(&dir)?;
    let opts = cfg.newton_options();
    let result = with_workers(ov.workers, || newton_solve(&problem, model.spectral(), opts));
    let residual_file = || File::create(dir.join(NEWTON_FILE)).map(BufWriter::new);
    let rep = match result {
        Ok(rep) => rep,
        Err(e) => {
            if let OracleError::NonConvergence { residuals } | OracleError::PositivityUnrecoverable { residuals, .. } = &e
            {
                write_newton_residuals(residual_file()?, residuals, None)?;
            }
            return Ok(CriticalReport { residuals: Vec::new(), error: Some(e.into()), output_dir: dir });
        }
    };
    write_newton_residuals(residual_file()?, &rep.residuals, Some(&rep))?;
    let last = rep.residuals.last().copied().unwrap_or(0.0);
    snapshot::save_scalar(dir.join(PHI_MA), &rep.phi)?;
    let error = match critical_chi(&model, &rep.phi, last.max(cfg.newton_tol)) {
        Ok(chi) => {
            snapshot::save_form(dir.join(CHI_MA), &chi)?;
            None
        }
        Err(e) => Some(CliError::from(e)),
    };
    if !ov.quiet {
        let line = json!({
            "iterations": rep.iterations(),
            "final_residual": last,
            "quadratic_tail": rep.quadratic_tail(10.0),
            "krylov_iterations": rep.krylov_iterations,
        });
        println!("{line}");
    }
    Ok(CriticalReport { residuals: rep.residuals, error, output_dir: dir })
}

/// The metric snapshot a run or critical solve left in `dir`.
pub fn find_chi(dir: &Path) -> Result<PathBuf, CliError> {
    [CHI_FINAL, CHI_MA]
        .iter()
        .map(|f| dir.join(f))
        .find(|p| p.is_file())
        .ok_or_else(|| CliError::usage(format!("no {CHI_FINAL} or {CHI_MA} in {}", dir.display())))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub sup: f64,
    pub components: [f64; 4],
    pub within: bool,
}

pub fn cmd_compare(a: &Path, b: &Path, threshold: f64, quiet: bool) -> Result<CompareReport, CliError> {
    let load = |dir: &Path| -> Result<_, CliError> {
        let path = find_chi(dir)?;
        match snapshot::load(&path)? {
            Snapshot::Form(f) => Ok(f),
            Snapshot::Scalar(_) => Err(CliError::usage(format!("{} holds a scalar field", path.display()))),
        }
    };
    let (fa, fb) = (load(a)?, load(b)?);
    if fa.shape() != fb.shape() {
        return Err(CliError::usage(format!(
            "grid mismatch: {:?} vs {:?}",
            fa.shape().dims(),
            fb.shape().dims()
        )));
    }
    let diff = compare_with_flow(&fa, &fb)?;
    let report = CompareReport { sup: diff.sup, components: diff.components, within: diff.sup <= threshold };
    if !quiet {
        let [a11, a22, re12, im12] = diff.components;
        let line = json!({
            "sup": diff.sup,
            "a11": a11,
            "a22": a22,
            "re_a12": re12,
            "im_a12": im12,
            "threshold": threshold,
            "within": report.within,
        });
        println!("{line}");
    }
    Ok(report)
}

/// Builds the model and reports its derived constants without integrating.
pub fn cmd_validate(cfg: &RunConfig, quiet: bool) -> Result<serde_json::Value, CliError> {
    let shape = cfg.shape().map_err(|e| CliError::new(Category::Validation, e.to_string()))?;
    let raw = SurfaceModel::new(cfg.g_matrix(), cfg.h_matrix(), jflow_core::ScalarField::from_modes(shape, &cfg.modes()))?;
    let model = raw.normalized();
    let (lo, hi) = model.lambda_chi0_omega();
    let value = json!({
        "grid": shape.dims(),
        "c": raw.c(),
        "epsilon": epsilon_margin(&model),
        "A": cfg.a_override.unwrap_or_else(|| default_exponent(&model)),
        "inf_lambda_chi0_omega": lo,
        "sup_lambda_chi0_omega": hi,
    });
    if !quiet {
        println!("{value}");
    }
    Ok(value)
}
