//! Flat `summary.json` written at the end of `run`.

use jflow_core::monitor::Boundedness;
use jflow_core::{DecayFit, ViolationCounts};
use serde::{Deserialize, Serialize};

/// Factor by which whole-run maxima may exceed early-run maxima.
pub const BOUNDEDNESS_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub status: String,
    pub exit_code: u8,
    pub converged: bool,
    pub final_t: f64,
    pub steps: usize,
    pub samples: usize,
    pub dt_halvings: u32,
    pub final_sup_abs_phidot: f64,
    pub exponent_a: f64,
    pub eta: Option<f64>,
    pub r_squared: Option<f64>,
    pub decay_samples: usize,
    pub violations_sup_phidot_increase: usize,
    pub violations_inf_phidot_decrease: usize,
    pub violations_envelope: usize,
    pub violations_i_conservation: usize,
    pub violations_j_increase: usize,
    pub violations_chi_lower_bound: usize,
    pub violations_gauge: usize,
    pub violations_total: usize,
    pub worst_gauge_residual: f64,
    pub max_sup_lambda_omega_chi: f64,
    pub early_max_sup_lambda_omega_chi: f64,
    pub max_sup_abs_phi: f64,
    pub early_max_sup_abs_phi: f64,
    pub bounded: bool,
}

impl RunSummary {
    pub fn set_violations(&mut self, c: &ViolationCounts) {
        self.violations_sup_phidot_increase = c.sup_phidot_increase;
        self.violations_inf_phidot_decrease = c.inf_phidot_decrease;
        self.violations_envelope = c.envelope;
        self.violations_i_conservation = c.i_conservation;
        self.violations_j_increase = c.j_increase;
        self.violations_chi_lower_bound = c.chi_lower_bound;
        self.violations_gauge = c.gauge;
        self.violations_total = c.total();
    }

    pub fn set_decay(&mut self, fit: Option<&DecayFit>) {
        self.eta = fit.map(|f| f.eta);
        self.r_squared = fit.map(|f| f.r_squared);
        self.decay_samples = fit.map_or(0, |f| f.samples_used);
    }

    pub fn set_boundedness(&mut self, b: &Boundedness) {
        self.max_sup_lambda_omega_chi = b.lambda_omega_chi_max;
        self.early_max_sup_lambda_omega_chi = b.lambda_omega_chi_early_max;
        self.max_sup_abs_phi = b.abs_phi_max;
        self.early_max_sup_abs_phi = b.abs_phi_early_max;
        self.bounded = b.within(BOUNDEDNESS_FACTOR);
    }
}

impl Default for RunSummary {
    fn default() -> Self {
        Self {
            status: "ok".into(),
            exit_code: 0,
            converged: false,
            final_t: 0.0,
            steps: 0,
            samples: 0,
            dt_halvings: 0,
            final_sup_abs_phidot: f64::NAN,
            exponent_a: 0.0,
            eta: None,
            r_squared: None,
            decay_samples: 0,
            violations_sup_phidot_increase: 0,
            violations_inf_phidot_decrease: 0,
            violations_envelope: 0,
            violations_i_conservation: 0,
            violations_j_increase: 0,
            violations_chi_lower_bound: 0,
            violations_gauge: 0,
            violations_total: 0,
            worst_gauge_residual: 0.0,
            max_sup_lambda_omega_chi: f64::NAN,
            early_max_sup_lambda_omega_chi: f64::NAN,
            max_sup_abs_phi: f64::NAN,
            early_max_sup_abs_phi: f64::NAN,
            bounded: false,
        }
    }
}
