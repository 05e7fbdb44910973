//! Critical metric from the reduced Monge-Ampère equation.
//!
//! Completing the square in `ω∧χ = c χ²` gives `(χ − ω/2c)² = ω²/4c²`, i.e.
//! `det(A₀ + i∂∂̄φ) = det G / 4c²` with `A₀ = χ₀ − G/2c`. The equation is
//! solved by damped inexact Newton; each linearised problem
//! `mixed_det(A₀ + i∂∂̄φ, i∂∂̄δ) = −r` goes to GMRES preconditioned by the
//! exact inverse of the constant-coefficient operator with the mean matrix.

use thiserror::Error;

use crate::grid::{FormField, GridError, ScalarField};
use crate::hermitian::{eigenvalues, mixed_det, trace_contract, HermitianMatrix2};
use crate::krylov::{gmres, GmresOptions};
use crate::model::{SurfaceModel, DIM};
use crate::par;
use crate::spectral::Spectral;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("chi0 - omega/(2c) is not positive definite at grid point {index} (min eigenvalue {min_eigenvalue:e})")]
    HypothesisViolation { index: usize, min_eigenvalue: f64 },
    #[error("Monge-Ampere target must be positive, got {value:e} at grid point {index}")]
    NonPositiveTarget { index: usize, value: f64 },
    #[error("Newton did not reach the tolerance in {} iterations (residuals {residuals:?})", residuals.len().saturating_sub(1))]
    NonConvergence { residuals: Vec<f64> },
    #[error("positivity could not be kept under damping at Newton iteration {iteration}")]
    PositivityUnrecoverable { iteration: usize, residuals: Vec<f64> },
    #[error("critical equation residual {deviation:e} exceeds {tolerance:e}")]
    Inconsistent { deviation: f64, tolerance: f64 },
    #[error("critical metric is not positive definite at grid point {index}")]
    NotPositive { index: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// `det(A₀ + i∂∂̄φ) = target` on the grid.
#[derive(Debug, Clone)]
pub struct MaProblem {
    a0: FormField,
    target: ScalarField,
}

impl MaProblem {
    pub fn new(a0: FormField, target: ScalarField) -> Result<Self, OracleError> {
        if a0.shape() != target.shape() {
            return Err(GridError::ShapeMismatch(a0.shape().dims(), target.shape().dims()).into());
        }
        if let Some(index) = a0.first_non_positive() {
            return Err(OracleError::HypothesisViolation { index, min_eigenvalue: eigenvalues(a0.get(index)).0 });
        }
        if let Some(index) = target.data().iter().position(|&v| v <= 0.0) {
            return Err(OracleError::NonPositiveTarget { index, value: target.data()[index] });
        }
        Ok(Self { a0, target })
    }

    pub fn a0(&self) -> &FormField {
        &self.a0
    }

    pub fn target(&self) -> &ScalarField {
        &self.target
    }
}

/// `A₀ = χ₀ − G/2c`, `target = det G / 4c²`.
pub fn build_ma_problem(model: &SurfaceModel) -> Result<MaProblem, OracleError> {
    let c = model.c();
    let g = *model.g();
    let a0 = model.chi0().add_constant(-(g * (1.0 / (2.0 * c))));
    let target = ScalarField::constant(model.shape(), g.det() / (4.0 * c * c));
    MaProblem::new(a0, target)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Required `sup |det(A₀ + i∂∂̄φ) − target|`.
    pub tol: f64,
    pub max_iter: usize,
    /// Upper bound on the relative tolerance of each linear solve.
    pub forcing: f64,
    pub max_halvings: u32,
    pub krylov_max_iter: usize,
    pub krylov_restart: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-11, max_iter: 20, forcing: 1e-3, max_halvings: 20, krylov_max_iter: 300, krylov_restart: 50 }
    }
}

/// Residuals at or below this are roundoff; the quadratic-tail check skips them.
pub const ROUNDOFF_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct NewtonReport {
    /// Mean-zero solution.
    pub phi: ScalarField,
    /// Sup-norm residual before the first and after every iteration.
    pub residuals: Vec<f64>,
    pub krylov_iterations: Vec<usize>,
    pub step_lengths: Vec<f64>,
}

impl NewtonReport {
    pub fn iterations(&self) -> usize {
        self.residuals.len() - 1
    }

    /// Whether the last step landing above the roundoff floor at least
    /// squared the residual, up to `factor`: `r_k ≤ factor · r_{k−1}²`.
    /// Vacuously true when no such step exists.
    pub fn quadratic_tail(&self, factor: f64) -> bool {
        self.residuals
            .windows(2)
            .rev()
            .find(|w| w[1] > ROUNDOFF_FLOOR)
            .is_none_or(|w| w[1] <= factor * w[0] * w[0])
    }
}

/// `(A₀ + i∂∂̄φ, det(A₀ + i∂∂̄φ) − target)`, or the first non-positive point.
pub fn ma_residual(
    problem: &MaProblem,
    spectral: &Spectral,
    phi: &ScalarField,
) -> Result<(FormField, ScalarField), usize> {
    let m = problem.a0.add(&spectral.complex_hessian(phi));
    if let Some(index) = m.first_non_positive() {
        return Err(index);
    }
    let target = problem.target.data();
    let r = par::map_indexed(target.len(), |p| m.get(p).det() - target[p]);
    Ok((m, ScalarField::from_vec(phi.shape(), r).expect("finite residual")))
}

pub fn newton_solve(problem: &MaProblem, spectral: &Spectral, opts: NewtonOptions) -> Result<NewtonReport, OracleError> {
    newton_solve_from(problem, spectral, ScalarField::zeros(problem.a0.shape()), opts)
}

pub fn newton_solve_from(
    problem: &MaProblem,
    spectral: &Spectral,
    initial: ScalarField,
    opts: NewtonOptions,
) -> Result<NewtonReport, OracleError> {
    let shape = problem.a0.shape();
    let mut phi = initial;
    let (mut coeff, mut r) = ma_residual(problem, spectral, &phi)
        .map_err(|_| OracleError::PositivityUnrecoverable { iteration: 0, residuals: Vec::new() })?;
    let mut res = r.sup_abs();
    let mut report = NewtonReport {
        phi: phi.clone(),
        residuals: vec![res],
        krylov_iterations: Vec::new(),
        step_lengths: Vec::new(),
    };

    while res > opts.tol {
        let iteration = report.iterations() + 1;
        if iteration > opts.max_iter {
            return Err(OracleError::NonConvergence { residuals: report.residuals });
        }
        let mean_coeff = coeff.mean();
        let r_mean = r.mean();
        let rhs: Vec<f64> = r.data().iter().map(|v| -(v - r_mean)).collect();
        let apply = |v: &[f64]| -> Vec<f64> {
            let f = ScalarField::from_vec(shape, v.to_vec()).expect("finite Krylov vector");
            let h = spectral.complex_hessian(&f);
            par::map_indexed(v.len(), |p| mixed_det(coeff.get(p), h.get(p)))
        };
        let precond = |v: &[f64]| -> Vec<f64> {
            let f = ScalarField::from_vec(shape, v.to_vec()).expect("finite Krylov vector");
            spectral.solve_constant_coefficient(&mean_coeff, &f).into_vec()
        };
        let gm = gmres(
            apply,
            precond,
            &rhs,
            GmresOptions {
                rtol: opts.forcing.min(res),
                max_iter: opts.krylov_max_iter,
                restart: opts.krylov_restart,
            },
        );
        let delta = ScalarField::from_vec(shape, gm.x).map_err(OracleError::from)?;

        let mut step = 1.0;
        let mut saw_positive = false;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial = phi.axpy(step, &delta);
            if let Ok((c, rt)) = ma_residual(problem, spectral, &trial) {
                saw_positive = true;
                let rt_sup = rt.sup_abs();
                if rt_sup < res {
                    accepted = Some((trial, c, rt, rt_sup));
                    break;
                }
            }
            step *= 0.5;
        }
        match accepted {
            Some((trial, c, rt, rt_sup)) => {
                phi = trial;
                coeff = c;
                r = rt;
                res = rt_sup;
                report.residuals.push(res);
                report.krylov_iterations.push(gm.iterations);
                report.step_lengths.push(step);
            }
            None if saw_positive => return Err(OracleError::NonConvergence { residuals: report.residuals }),
            None => return Err(OracleError::PositivityUnrecoverable { iteration, residuals: report.residuals }),
        }
    }
    let mean = phi.mean();
    report.phi = phi.map(|v| v - mean);
    Ok(report)
}

/// Reassembles `χ = A₀ + i∂∂̄φ + G/2c = χ₀ + i∂∂̄φ` and checks the critical
/// equation `Λ_χ ω = n c` to the tolerance implied by a Monge-Ampère residual
/// of `ma_tol`: `|Λ_χ ω − 2c| = 2c |r| / det χ`.
pub fn critical_chi(model: &SurfaceModel, phi_ma: &ScalarField, ma_tol: f64) -> Result<FormField, OracleError> {
    let chi = model.chi(phi_ma);
    if let Some(index) = chi.first_non_positive() {
        return Err(OracleError::NotPositive { index });
    }
    let g = *model.g();
    let nc = DIM * model.c();
    let min_det = chi.data().iter().map(|x| x.det()).fold(f64::INFINITY, f64::min);
    let tolerance = 10.0 * 2.0 * model.c() * ma_tol / min_det;
    let deviation = chi
        .data()
        .iter()
        .map(|x| (trace_contract(x, &g).expect("checked positive") - nc).abs())
        .fold(0.0, f64::max);
    if deviation > tolerance {
        return Err(OracleError::Inconsistent { deviation, tolerance });
    }
    Ok(chi)
}

/// Sup over the grid of entrywise differences between two metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldDifference {
    pub sup: f64,
    /// Per component `a11, a22, Re a12, Im a12`.
    pub components: [f64; 4],
}

pub fn compare_with_flow(chi_flow: &FormField, chi_ma: &FormField) -> Result<FieldDifference, OracleError> {
    if chi_flow.shape() != chi_ma.shape() {
        return Err(GridError::ShapeMismatch(chi_flow.shape().dims(), chi_ma.shape().dims()).into());
    }
    let mut comps = [0.0f64; 4];
    for (a, b) in chi_flow.data().iter().zip(chi_ma.data()) {
        let (ca, cb) = (a.components(), b.components());
        for k in 0..4 {
            comps[k] = comps[k].max((ca[k] - cb[k]).abs());
        }
    }
    Ok(FieldDifference { sup: comps.iter().copied().fold(0.0, f64::max), components: comps })
}

/// Constant `G/2c` added back when reassembling `χ` from `χ'`.
pub fn omega_shift(model: &SurfaceModel) -> HermitianMatrix2 {
    *model.g() * (1.0 / (2.0 * model.c()))
}
