//! Spectral J-flow laboratory on flat complex 2-tori.
//!
//! The crate integrates `∂φ/∂t = ½(1 − Λ_χ ω)` for `χ = χ₀ + i∂∂̄φ` on a
//! periodic 4D grid, monitors the maximum-principle envelope, the `I`/`J`
//! functionals and the oscillation decay of `∂φ/∂t`, and solves the reduced
//! complex Monge-Ampère equation by inexact Newton as an independent check
//! of the flow's limit.
//!
//! Pointwise work and FFT line passes run on rayon behind the `parallel`
//! feature (on by default); reductions are always sequential so results do
//! not depend on the worker count.

pub mod engine;
pub mod functionals;
pub mod grid;
pub mod hermitian;
pub mod krylov;
pub mod model;
pub mod monitor;
pub mod oracle;
pub mod par;
pub mod snapshot;
pub mod spectral;

pub use engine::{flow_rhs, run, stable_dt, step_rk4, FlowConfig, FlowError, FlowObserver, FlowState, RunFailure, RunOutcome};
pub use functionals::{
    default_exponent, diagnostics, epsilon_margin, gauge_residual, i_functional, j_functional, DiagnosticsRecord,
};
pub use grid::{integrate, sup_inf, FormField, FourierMode, GridError, GridShape, ScalarField};
pub use hermitian::{
    det, eigenvalues, h_tensor, mixed_det, trace_contract, HermitianMatrix2, NotPositiveDefinite,
};
pub use model::{compute_c, ModelError, SurfaceModel};
pub use monitor::{boundedness, fit_decay_rate, DecayFit, InvariantMonitor, Tolerances, ViolationCounts};
pub use oracle::{build_ma_problem, compare_with_flow, critical_chi, newton_solve, MaProblem, NewtonOptions, NewtonReport, OracleError};
pub use spectral::{complex_hessian, Spectral};
