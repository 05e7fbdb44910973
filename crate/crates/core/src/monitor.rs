//! Runtime checks of the flow's a-priori estimates.
//!
//! [`InvariantMonitor`] counts violations of each monitored inequality as
//! samples arrive; [`fit_decay_rate`] and [`boundedness`] summarise a
//! finished series.

use thiserror::Error;

use crate::engine::{FlowObserver, FlowState};
use crate::functionals::{gauge_residual, DiagnosticsRecord};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticError {
    #[error("decay fit needs at least {needed} samples with oscillation above {floor:e}, got {got}")]
    InsufficientSamples { needed: usize, got: usize, floor: f64 },
}

/// Slacks applied to each monitored inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative to the initial oscillation of `∂φ/∂t`.
    pub max_principle_rel: f64,
    pub envelope: f64,
    /// `|I| ≤ i_rel · (1 + sup |φ|)`.
    pub i_rel: f64,
    pub j_increase: f64,
    pub lower_bound: f64,
    pub gauge: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            max_principle_rel: 1e-8,
            envelope: 1e-6,
            i_rel: 1e-8,
            j_increase: 1e-10,
            lower_bound: 1e-8,
            gauge: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ViolationCounts {
    pub sup_phidot_increase: usize,
    pub inf_phidot_decrease: usize,
    pub envelope: usize,
    pub i_conservation: usize,
    pub j_increase: usize,
    pub chi_lower_bound: usize,
    pub gauge: usize,
}

impl ViolationCounts {
    pub fn total(&self) -> usize {
        self.sup_phidot_increase
            + self.inf_phidot_decrease
            + self.envelope
            + self.i_conservation
            + self.j_increase
            + self.chi_lower_bound
            + self.gauge
    }
}

/// Accumulates violation counts sample by sample.
#[derive(Debug, Clone, Default)]
pub struct InvariantMonitor {
    tol: Tolerances,
    first: Option<DiagnosticsRecord>,
    prev: Option<DiagnosticsRecord>,
    counts: ViolationCounts,
    samples: usize,
    worst_gauge: f64,
}

impl InvariantMonitor {
    pub fn new(tol: Tolerances) -> Self {
        Self { tol, ..Self::default() }
    }

    pub fn counts(&self) -> ViolationCounts {
        self.counts
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    /// Largest `|∫ ∂φ/∂t χ²|` seen so far.
    pub fn worst_gauge(&self) -> f64 {
        self.worst_gauge
    }

    pub fn observe(&mut self, rec: &DiagnosticsRecord, gauge: f64) {
        let tol = self.tol;
        let first = *self.first.get_or_insert(*rec);
        let c = &mut self.counts;
        if let Some(prev) = self.prev {
            let slack = tol.max_principle_rel * first.osc_phidot;
            if rec.sup_phidot > prev.sup_phidot + slack {
                c.sup_phidot_increase += 1;
            }
            if rec.inf_phidot < prev.inf_phidot - slack {
                c.inf_phidot_decrease += 1;
            }
            if rec.j > prev.j + tol.j_increase {
                c.j_increase += 1;
            }
        }
        if rec.inf_lambda_chi_omega < first.inf_lambda_chi_omega - tol.envelope
            || rec.sup_lambda_chi_omega > first.sup_lambda_chi_omega + tol.envelope
        {
            c.envelope += 1;
        }
        if rec.i.abs() > tol.i_rel * (1.0 + rec.sup_abs_phi) {
            c.i_conservation += 1;
        }
        if rec.min_eig_chi < -tol.lower_bound {
            c.chi_lower_bound += 1;
        }
        if gauge.abs() > tol.gauge {
            c.gauge += 1;
        }
        self.worst_gauge = self.worst_gauge.max(gauge.abs());
        self.prev = Some(*rec);
        self.samples += 1;
    }
}

impl FlowObserver for InvariantMonitor {
    fn on_sample(&mut self, record: &DiagnosticsRecord, state: &FlowState) {
        self.observe(record, gauge_residual(state));
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Decay rate `η` in `osc ≈ C₀ e^{−ηt}`.
    pub eta: f64,
    pub r_squared: f64,
    pub samples_used: usize,
}

pub const DECAY_MIN_SAMPLES: usize = 10;
pub const DECAY_FLOOR: f64 = 1e-14;

/// Least-squares fit of `log osc` against `t` over the final half of the
/// samples whose oscillation exceeds the floating-point floor.
pub fn fit_decay_rate(series: &[(f64, f64)]) -> Result<DecayFit, DiagnosticError> {
    let qualifying: Vec<(f64, f64)> =
        series.iter().filter(|(_, osc)| *osc > DECAY_FLOOR).map(|&(t, osc)| (t, osc.ln())).collect();
    if qualifying.len() < DECAY_MIN_SAMPLES {
        return Err(DiagnosticError::InsufficientSamples {
            needed: DECAY_MIN_SAMPLES,
            got: qualifying.len(),
            floor: DECAY_FLOOR,
        });
    }
    let tail = &qualifying[qualifying.len() / 2..];
    let n = tail.len() as f64;
    let mt = tail.iter().map(|p| p.0).sum::<f64>() / n;
    let my = tail.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(t, y) in tail {
        sxy += (t - mt) * (y - my);
        sxx += (t - mt) * (t - mt);
        syy += (y - my) * (y - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let ss_res: f64 = tail.iter().map(|&(t, y)| (y - my - slope * (t - mt)).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(DecayFit { eta: if slope == 0.0 { 0.0 } else { -slope }, r_squared, samples_used: tail.len() })
}

/// Running maxima of `sup Λ_ω χ` and `sup |φ|` over the whole run and over
/// its first tenth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boundedness {
    pub lambda_omega_chi_max: f64,
    pub lambda_omega_chi_early_max: f64,
    pub abs_phi_max: f64,
    pub abs_phi_early_max: f64,
}

impl Boundedness {
    /// Whole-run maxima are finite and within `factor` of the early maxima.
    pub fn within(&self, factor: f64) -> bool {
        self.lambda_omega_chi_max.is_finite()
            && self.abs_phi_max.is_finite()
            && self.lambda_omega_chi_max <= factor * self.lambda_omega_chi_early_max
            && self.abs_phi_max <= factor * self.abs_phi_early_max
    }
}

pub fn boundedness(series: &[DiagnosticsRecord]) -> Boundedness {
    let t_end = series.last().map(|r| r.t).unwrap_or(0.0);
    let early_end = series.first().map(|r| r.t).unwrap_or(0.0) + 0.1 * t_end;
    let mut b = Boundedness {
        lambda_omega_chi_max: f64::NEG_INFINITY,
        lambda_omega_chi_early_max: f64::NEG_INFINITY,
        abs_phi_max: 0.0,
        abs_phi_early_max: 0.0,
    };
    for r in series {
        b.lambda_omega_chi_max = b.lambda_omega_chi_max.max(r.sup_lambda_omega_chi);
        b.abs_phi_max = b.abs_phi_max.max(r.sup_abs_phi);
        if r.t <= early_end {
            b.lambda_omega_chi_early_max = b.lambda_omega_chi_early_max.max(r.sup_lambda_omega_chi);
            b.abs_phi_early_max = b.abs_phi_early_max.max(r.sup_abs_phi);
        }
    }
    b
}
