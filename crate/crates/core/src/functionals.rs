//! `J` and `I` functionals in their surface closed forms, and the
//! per-sample diagnostics record.

use crate::engine::FlowState;
use crate::grid::{mean_of as mean, sup_inf, FormField, ScalarField};
use crate::hermitian::{eigenvalues, mixed_det, trace_contract};
use crate::model::SurfaceModel;
use crate::par;

/// Bound on the curvature of `ω`; zero on the flat torus.
pub const CURVATURE_BOUND: f64 = 0.0;

/// One row of the flow's time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub sup_phidot: f64,
    pub inf_phidot: f64,
    pub osc_phidot: f64,
    pub j: f64,
    pub i: f64,
    /// Extremes of `Λ_χ ω`.
    pub sup_lambda_chi_omega: f64,
    pub inf_lambda_chi_omega: f64,
    /// `sup Λ_ω χ`, the quantity of the second-order estimate.
    pub sup_lambda_omega_chi: f64,
    /// Smallest eigenvalue over the grid of `χ − ω / sup Λ_{χ₀} ω`; the
    /// lower bound for `χ` holds iff this is non-negative.
    pub min_eig_chi: f64,
    pub sup_abs_phi: f64,
    /// `sup (log Λ_ω χ − A φ)`.
    pub sup_q: f64,
}

impl DiagnosticsRecord {
    pub const COLUMNS: [&'static str; 12] = [
        "t",
        "sup_phidot",
        "inf_phidot",
        "osc_phidot",
        "J",
        "I",
        "sup_lambda_chi_omega",
        "inf_lambda_chi_omega",
        "sup_lambda_omega_chi",
        "min_eig_chi",
        "sup_abs_phi",
        "sup_Q",
    ];

    pub fn values(&self) -> [f64; 12] {
        [
            self.t,
            self.sup_phidot,
            self.inf_phidot,
            self.osc_phidot,
            self.j,
            self.i,
            self.sup_lambda_chi_omega,
            self.inf_lambda_chi_omega,
            self.sup_lambda_omega_chi,
            self.min_eig_chi,
            self.sup_abs_phi,
            self.sup_q,
        ]
    }

    pub fn from_values(v: [f64; 12]) -> Self {
        Self {
            t: v[0],
            sup_phidot: v[1],
            inf_phidot: v[2],
            osc_phidot: v[3],
            j: v[4],
            i: v[5],
            sup_lambda_chi_omega: v[6],
            inf_lambda_chi_omega: v[7],
            sup_lambda_omega_chi: v[8],
            min_eig_chi: v[9],
            sup_abs_phi: v[10],
            sup_q: v[11],
        }
    }
}

/// `J(φ) = ½ ∫ φ ω∧(χ₀ + χ)` given a precomputed `χ = χ_φ`.
pub fn j_functional_with(model: &SurfaceModel, phi: &ScalarField, chi: &FormField) -> f64 {
    let g = *model.g();
    let chi0 = model.chi0();
    let integrand = par::map_indexed(phi.data().len(), |p| {
        phi.data()[p] * mixed_det(&g, &(*chi0.get(p) + *chi.get(p)))
    });
    0.5 * mean(&integrand)
}

pub fn j_functional(model: &SurfaceModel, phi: &ScalarField) -> f64 {
    j_functional_with(model, phi, &model.chi(phi))
}

/// `I(φ) = ⅙ ∫ φ (χ₀² + χ∧χ₀ + χ²)` given a precomputed `χ = χ_φ`.
pub fn i_functional_with(model: &SurfaceModel, phi: &ScalarField, chi: &FormField) -> f64 {
    let chi0 = model.chi0();
    let integrand = par::map_indexed(phi.data().len(), |p| {
        let x0 = chi0.get(p);
        let x = chi.get(p);
        phi.data()[p] * (2.0 * x0.det() + mixed_det(x, x0) + 2.0 * x.det())
    });
    mean(&integrand) / 6.0
}

pub fn i_functional(model: &SurfaceModel, phi: &ScalarField) -> f64 {
    i_functional_with(model, phi, &model.chi(phi))
}

/// `∫ ∂φ/∂t · χ²`, which vanishes along the flow.
pub fn gauge_residual(state: &FlowState) -> f64 {
    let integrand = par::map_indexed(state.phidot.data().len(), |p| {
        state.phidot.data()[p] * 2.0 * state.chi.get(p).det()
    });
    mean(&integrand)
}

/// Largest `ε ∈ [0, 1/3)` with `χ₀ ≥ (1 + 3ε) ω` at every grid point, by
/// bisection on the positivity of `χ₀ − (1 + 3ε) ω`. `None` when even
/// `χ₀ − ω` fails to be positive.
pub fn epsilon_margin(model: &SurfaceModel) -> Option<f64> {
    let g = *model.g();
    let holds = |eps: f64| model.chi0().data().iter().all(|x| eigenvalues(&(*x - g * (1.0 + 3.0 * eps))).0 > 0.0);
    if !holds(0.0) {
        return None;
    }
    let upper = 1.0 / 3.0;
    if holds(upper) {
        return Some(upper * (1.0 - f64::EPSILON));
    }
    let (mut lo, mut hi) = (0.0, upper);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 {
            break;
        }
    }
    Some(lo)
}

/// Default exponent `A = C₀ / ε` of the second-order diagnostic, with `C₀`
/// the curvature bound. Flat backgrounds give `A = 0`.
pub fn default_exponent(model: &SurfaceModel) -> f64 {
    match epsilon_margin(model) {
        Some(eps) if eps > 0.0 && CURVATURE_BOUND > 0.0 => CURVATURE_BOUND / eps,
        _ => 0.0,
    }
}

/// Fills every field of the diagnostics record for `state`.
pub fn diagnostics(model: &SurfaceModel, state: &FlowState, exponent_a: f64) -> DiagnosticsRecord {
    let g = *model.g();
    let sup0 = model.lambda_chi0_omega().1;
    let floor = g * (1.0 / sup0);
    let n = state.chi.data().len();

    // per point: Λ_χ ω, Λ_ω χ, min eig of χ − ω/sup Λ_{χ₀}ω, Q
    let pointwise = par::map_indexed(n, |p| {
        let x = state.chi.get(p);
        let lambda_chi_omega = trace_contract(x, &g).unwrap_or(f64::NAN);
        let lambda_omega_chi = trace_contract(&g, x).expect("G is positive definite");
        let margin = eigenvalues(&(*x - floor)).0;
        let q = lambda_omega_chi.ln() - exponent_a * state.phi.data()[p];
        (lambda_chi_omega, lambda_omega_chi, margin, q)
    });
    let mut rec_lambda = (f64::INFINITY, f64::NEG_INFINITY);
    let mut sup_lambda_omega_chi = f64::NEG_INFINITY;
    let mut min_eig = f64::INFINITY;
    let mut sup_q = f64::NEG_INFINITY;
    for &(l1, l2, m, q) in &pointwise {
        rec_lambda = (rec_lambda.0.min(l1), rec_lambda.1.max(l1));
        sup_lambda_omega_chi = sup_lambda_omega_chi.max(l2);
        min_eig = min_eig.min(m);
        sup_q = sup_q.max(q);
    }
    let (inf_phidot, sup_phidot) = sup_inf(&state.phidot);
    DiagnosticsRecord {
        t: state.t,
        sup_phidot,
        inf_phidot,
        osc_phidot: sup_phidot - inf_phidot,
        j: j_functional_with(model, &state.phi, &state.chi),
        i: i_functional_with(model, &state.phi, &state.chi),
        sup_lambda_chi_omega: rec_lambda.1,
        inf_lambda_chi_omega: rec_lambda.0,
        sup_lambda_omega_chi,
        min_eig_chi: min_eig,
        sup_abs_phi: state.phi.sup_abs(),
        sup_q,
    }
}
