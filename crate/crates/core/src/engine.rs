//! Explicit RK4 integration of `∂φ/∂t = ½(1 − Λ_χ ω)` from `φ = 0`.

use std::f64::consts::PI;

use thiserror::Error;

use crate::functionals::{diagnostics, DiagnosticsRecord};
use crate::grid::{FormField, ScalarField};
use crate::hermitian::{eigenvalues, h_tensor, trace_contract};
use crate::model::SurfaceModel;
use crate::par;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("model must be normalized so that c = 1/2")]
    NotNormalized,
    #[error("chi lost positivity at grid point {index} (t = {t}, eigenvalues {eigenvalues:?})")]
    PositivityLost { index: usize, eigenvalues: (f64, f64), t: f64 },
    #[error("invalid flow configuration: {0}")]
    InvalidConfig(String),
}

/// Time-stepping and stopping parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    /// Safety factor of the explicit step, in (0, 1].
    pub sigma: f64,
    /// Stop once `sup |∂φ/∂t|` falls below this.
    pub tol_stop: f64,
    pub t_max: f64,
    /// Steps between diagnostics samples.
    pub sample_interval: usize,
    /// Steps between re-evaluations of the stable step.
    pub dt_refresh: usize,
    /// Step halvings allowed when a stage loses positivity.
    pub max_halvings: u32,
    /// Exponent `A` of the second-order diagnostic `log Λ_ω χ − Aφ`.
    pub exponent_a: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            sigma: 0.2,
            tol_stop: 1e-10,
            t_max: 200.0,
            sample_interval: 50,
            dt_refresh: 16,
            max_halvings: 10,
            exponent_a: 0.0,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<(), FlowError> {
        let bad = |m: &str| Err(FlowError::InvalidConfig(m.to_string()));
        if !(self.sigma > 0.0 && self.sigma <= 1.0) {
            return bad("sigma must lie in (0, 1]");
        }
        if !(self.tol_stop > 0.0) {
            return bad("tol_stop must be positive");
        }
        if !(self.t_max >= 0.0) || !self.t_max.is_finite() {
            return bad("t_max must be finite and non-negative");
        }
        if self.sample_interval == 0 || self.dt_refresh == 0 {
            return bad("sample_interval and dt_refresh must be positive");
        }
        if !self.exponent_a.is_finite() {
            return bad("A must be finite");
        }
        Ok(())
    }
}

/// Flow time, potential and the cached `χ_φ` and `∂φ/∂t`.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    pub steps: usize,
    pub phi: ScalarField,
    pub chi: FormField,
    pub phidot: ScalarField,
    /// Most recent diagnostics sample, if one has been taken.
    pub diagnostics: Option<DiagnosticsRecord>,
}

impl FlowState {
    /// The state `φ = 0` at `t = 0`.
    pub fn initial(model: &SurfaceModel) -> Result<Self, FlowError> {
        Self::at(model, 0.0, ScalarField::zeros(model.shape()))
    }

    /// Coherent state for an arbitrary potential.
    pub fn at(model: &SurfaceModel, t: f64, phi: ScalarField) -> Result<Self, FlowError> {
        let (chi, phidot) = evaluate(model, &phi, t)?;
        Ok(Self { t, steps: 0, phi, chi, phidot, diagnostics: None })
    }

    pub fn sup_abs_phidot(&self) -> f64 {
        self.phidot.sup_abs()
    }
}

fn evaluate(model: &SurfaceModel, phi: &ScalarField, t: f64) -> Result<(FormField, ScalarField), FlowError> {
    if !model.is_normalized() {
        return Err(FlowError::NotNormalized);
    }
    let chi = model.chi(phi);
    let g = *model.g();
    let values = par::try_map_indexed(chi.data().len(), |p| {
        let x = chi.get(p);
        trace_contract(x, &g)
            .map(|lambda| 0.5 * (1.0 - lambda))
            .map_err(|_| FlowError::PositivityLost { index: p, eigenvalues: eigenvalues(x), t })
    })?;
    let phidot = ScalarField::from_vec(model.shape(), values).map_err(|e| FlowError::InvalidConfig(e.to_string()))?;
    Ok((chi, phidot))
}

/// Right-hand side `½(1 − Λ_{χ_φ} ω)` of the normalised flow.
pub fn flow_rhs(model: &SurfaceModel, phi: &ScalarField) -> Result<ScalarField, FlowError> {
    evaluate(model, phi, f64::NAN).map(|(_, rhs)| rhs)
}

/// Explicit step bound `σ · min Δx² / (π² · max λ_max(h))`.
pub fn stable_dt(model: &SurfaceModel, state: &FlowState, sigma: f64) -> f64 {
    let g = *model.g();
    let lambda = par::map_indexed(state.chi.data().len(), |p| {
        h_tensor(state.chi.get(p), &g).map(|h| eigenvalues(&h).1).unwrap_or(f64::INFINITY)
    });
    let lambda_max = lambda.into_iter().fold(0.0, f64::max);
    let dx2 = model.shape().spacing().iter().map(|d| d * d).fold(f64::INFINITY, f64::min);
    sigma * dx2 / (PI * PI * lambda_max)
}

fn combine(base: &ScalarField, terms: &[(f64, &ScalarField)]) -> ScalarField {
    let data = par::map_indexed(base.data().len(), |p| {
        terms.iter().fold(base.data()[p], |acc, (w, f)| acc + w * f.data()[p])
    });
    ScalarField::from_vec(base.shape(), data).expect("finite combination")
}

/// One classical four-stage Runge–Kutta step.
pub fn step_rk4(model: &SurfaceModel, state: &FlowState, dt: f64) -> Result<FlowState, FlowError> {
    if !(dt > 0.0) {
        return Err(FlowError::InvalidConfig(format!("dt must be positive, got {dt}")));
    }
    let t = state.t;
    let phi = &state.phi;
    let k1 = &state.phidot;
    let (_, k2) = evaluate(model, &combine(phi, &[(0.5 * dt, k1)]), t + 0.5 * dt)?;
    let (_, k3) = evaluate(model, &combine(phi, &[(0.5 * dt, &k2)]), t + 0.5 * dt)?;
    let (_, k4) = evaluate(model, &combine(phi, &[(dt, &k3)]), t + dt)?;
    let w = dt / 6.0;
    let next = combine(phi, &[(w, k1), (2.0 * w, &k2), (2.0 * w, &k3), (w, &k4)]);
    let (chi, phidot) = evaluate(model, &next, t + dt)?;
    Ok(FlowState { t: t + dt, steps: state.steps + 1, phi: next, chi, phidot, diagnostics: state.diagnostics })
}

/// Callbacks invoked by [`run`].
pub trait FlowObserver {
    fn on_sample(&mut self, _record: &DiagnosticsRecord, _state: &FlowState) {}
    fn on_step(&mut self, _state: &FlowState) {}
}

impl FlowObserver for () {}

impl<O: FlowObserver + ?Sized> FlowObserver for &mut O {
    fn on_sample(&mut self, record: &DiagnosticsRecord, state: &FlowState) {
        (**self).on_sample(record, state)
    }
    fn on_step(&mut self, state: &FlowState) {
        (**self).on_step(state)
    }
}

impl<A: FlowObserver, B: FlowObserver> FlowObserver for (A, B) {
    fn on_sample(&mut self, record: &DiagnosticsRecord, state: &FlowState) {
        self.0.on_sample(record, state);
        self.1.on_sample(record, state);
    }
    fn on_step(&mut self, state: &FlowState) {
        self.0.on_step(state);
        self.1.on_step(state);
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub state: FlowState,
    pub series: Vec<DiagnosticsRecord>,
    pub converged: bool,
    /// Total step halvings performed after positivity failures.
    pub halvings: u32,
}

/// A failed run, with the last coherent state kept for post-mortem.
#[derive(Debug, Clone, Error)]
#[error("{error}")]
pub struct RunFailure {
    pub error: FlowError,
    pub state: Option<Box<FlowState>>,
    pub series: Vec<DiagnosticsRecord>,
}

impl From<FlowError> for RunFailure {
    fn from(error: FlowError) -> Self {
        Self { error, state: None, series: Vec::new() }
    }
}

/// Integrates from `φ = 0` until `sup |∂φ/∂t| < tol_stop` or `t ≥ t_max`.
pub fn run<O: FlowObserver>(
    model: &SurfaceModel,
    config: &FlowConfig,
    mut observer: O,
) -> Result<RunOutcome, RunFailure> {
    config.validate()?;
    let mut state = FlowState::initial(model)?;
    let mut series = Vec::new();
    let mut halvings = 0;

    let sample = |state: &mut FlowState, series: &mut Vec<DiagnosticsRecord>, observer: &mut O| {
        let record = diagnostics(model, state, config.exponent_a);
        state.diagnostics = Some(record);
        observer.on_sample(&record, state);
        series.push(record);
    };

    sample(&mut state, &mut series, &mut observer);
    let mut dt = 0.0;
    let converged = loop {
        if state.sup_abs_phidot() < config.tol_stop {
            break true;
        }
        if state.t >= config.t_max {
            break false;
        }
        if state.steps % config.dt_refresh == 0 {
            dt = stable_dt(model, &state, config.sigma);
        }
        let mut h = dt.min(config.t_max - state.t);
        let mut attempt = 0;
        let next = loop {
            match step_rk4(model, &state, h) {
                Ok(next) => break next,
                Err(err @ FlowError::PositivityLost { .. }) if attempt < config.max_halvings => {
                    log_halving(&err);
                    attempt += 1;
                    halvings += 1;
                    h *= 0.5;
                }
                Err(error) => {
                    return Err(RunFailure { error, state: Some(Box::new(state)), series });
                }
            }
        };
        state = next;
        observer.on_step(&state);
        let done = state.sup_abs_phidot() < config.tol_stop || state.t >= config.t_max;
        if done || state.steps % config.sample_interval == 0 {
            sample(&mut state, &mut series, &mut observer);
        }
    };
    Ok(RunOutcome { state, series, converged, halvings })
}

fn log_halving(_err: &FlowError) {
    #[cfg(debug_assertions)]
    eprintln!("retrying step with dt/2: {_err}");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridShape;
    use crate::hermitian::HermitianMatrix2;
    use std::f64::consts::TAU;

    fn constant_model(n: usize) -> SurfaceModel {
        let i = HermitianMatrix2::IDENTITY;
        SurfaceModel::new(i, i * 2.0, ScalarField::zeros(GridShape::cubic(n).unwrap())).unwrap().normalized()
    }

    fn standard_model() -> SurfaceModel {
        let i = HermitianMatrix2::IDENTITY;
        let shape = GridShape::cubic(8).unwrap();
        let psi0 = ScalarField::from_fn(shape, |x| 0.05 * (TAU * x[0]).cos());
        SurfaceModel::new(i, i * 2.0, psi0).unwrap().normalized()
    }

    #[test]
    fn constant_background_is_critical() {
        let m = constant_model(8);
        let rhs = flow_rhs(&m, &ScalarField::zeros(m.shape())).unwrap();
        assert!(rhs.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pointwise_rhs_values() {
        let i = HermitianMatrix2::IDENTITY;
        assert_eq!(0.5 * (1.0 - trace_contract(&i, &i).unwrap()), -0.5);
        let x = HermitianMatrix2::diag(1.0, 2.0);
        assert_eq!(0.5 * (1.0 - trace_contract(&x, &i).unwrap()), -0.25);
    }

    #[test]
    fn unnormalized_model_is_refused() {
        let i = HermitianMatrix2::IDENTITY;
        let m = SurfaceModel::new(i * 2.0, i * 2.0, ScalarField::zeros(GridShape::cubic(4).unwrap())).unwrap();
        assert_eq!(flow_rhs(&m, &ScalarField::zeros(m.shape())), Err(FlowError::NotNormalized));
    }

    #[test]
    fn stable_dt_examples() {
        let m = constant_model(8);
        let s = FlowState::initial(&m).unwrap();
        let dt = stable_dt(&m, &s, 0.2);
        let expect = 0.2 * (1.0 / 64.0) / (PI * PI * 0.25);
        assert!((dt - expect).abs() < 1e-15);
        assert!((dt - 1.2665e-3).abs() < 1e-7);
        let m16 = constant_model(16);
        let dt16 = stable_dt(&m16, &FlowState::initial(&m16).unwrap(), 0.2);
        assert!((dt16 * 4.0 - dt).abs() < 1e-15);
    }

    #[test]
    fn config_rejects_bad_sigma() {
        for sigma in [0.0, -0.1, 1.5, f64::NAN] {
            let cfg = FlowConfig { sigma, ..FlowConfig::default() };
            assert!(cfg.validate().is_err());
        }
        assert!(FlowConfig { sigma: 1.0, ..FlowConfig::default() }.validate().is_ok());
    }

    #[test]
    fn fixed_point_step_is_exact() {
        let m = constant_model(4);
        let s = FlowState::initial(&m).unwrap();
        let next = step_rk4(&m, &s, 0.01).unwrap();
        assert!(next.phi.sup_abs() <= 1e-15);
        assert_eq!(next.t, 0.01);
    }

    #[test]
    fn constant_background_converges_at_first_sample() {
        let m = constant_model(4);
        let out = run(&m, &FlowConfig::default(), ()).unwrap();
        assert!(out.converged);
        assert_eq!(out.state.steps, 0);
        assert_eq!(out.series.len(), 1);
        assert_eq!(out.series[0].osc_phidot, 0.0);
    }

    #[test]
    fn zero_time_budget_returns_initial_state() {
        let m = standard_model();
        let cfg = FlowConfig { t_max: 0.0, ..FlowConfig::default() };
        let out = run(&m, &cfg, ()).unwrap();
        assert!(!out.converged);
        assert_eq!(out.state.steps, 0);
        assert_eq!(out.state.phi.sup_abs(), 0.0);
    }

    #[test]
    fn positivity_loss_reports_point() {
        let m = standard_model();
        let s = m.shape();
        let phi = ScalarField::from_fn(s, |x| 0.3 * (TAU * x[2]).cos());
        match flow_rhs(&m, &phi) {
            Err(FlowError::PositivityLost { index, eigenvalues, .. }) => {
                let x = s.point(index);
                assert!((TAU * x[2]).cos() > 0.0);
                assert!(eigenvalues.0 <= 1e-12);
            }
            other => panic!("expected positivity loss, got {other:?}"),
        }
    }

    #[test]
    fn run_reaches_t_max_when_not_converged() {
        let m = standard_model();
        let cfg = FlowConfig { t_max: 0.05, sample_interval: 10, ..FlowConfig::default() };
        let out = run(&m, &cfg, ()).unwrap();
        assert!(!out.converged);
        assert!((out.state.t - 0.05).abs() < 1e-15);
        assert_eq!(out.series.last().unwrap().t, out.state.t);
    }
}
