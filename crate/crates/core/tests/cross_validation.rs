mod common;

use std::f64::consts::PI;

use jflow_core::{
    build_ma_problem, compare_with_flow, critical_chi, fit_decay_rate, flow_rhs, newton_solve, run, FlowConfig,
    NewtonOptions, ScalarField, Spectral,
};
use num_complex::Complex64;

/// Drops the constant and Nyquist-only modes, which `i∂∂̄` annihilates.
fn resolved_part(spectral: &Spectral, f: &ScalarField) -> ScalarField {
    let mut spectrum = spectral.forward(f);
    for (v, s) in spectrum.iter_mut().zip(spectral.symbols()) {
        if s.is_zero() {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    spectral.inverse_real(spectrum)
}

#[test]
fn skew_fixture_flow_limit_solves_the_monge_ampere_equation() {
    let model = common::skew_model(8);
    let out = run(&model, &FlowConfig::default(), ()).unwrap();
    assert!(out.converged, "stopped at t = {}", out.state.t);

    let problem = build_ma_problem(&model).unwrap();
    let rep = newton_solve(&problem, model.spectral(), NewtonOptions::default()).unwrap();
    assert!(rep.iterations() <= 8 && rep.quadratic_tail(10.0), "{:?}", rep.residuals);
    let chi_ma = critical_chi(&model, &rep.phi, 1e-11).unwrap();
    let diff = compare_with_flow(&out.state.chi, &chi_ma).unwrap();
    assert!(diff.sup <= 1e-5, "{diff:?}");

    // the potentials agree modulo the kernel of the discrete Hessian
    let gap = out.state.phi.axpy(-1.0, &rep.phi);
    let visible = resolved_part(model.spectral(), &gap);
    assert!(visible.sup_abs() <= 1e-8, "{:e}", visible.sup_abs());

    // and the oracle solution is stationary for the flow
    let rhs = flow_rhs(&model, &rep.phi.map(|v| v + gap.mean())).unwrap();
    assert!(rhs.sup_abs() <= 1e-8);
}

#[test]
fn decay_rate_matches_the_linearization_at_the_limit() {
    // the standard limit is χ = 2I, where cos 2πx¹ decays at rate π²/8
    let model = common::standard_model(8);
    let out = run(&model, &FlowConfig::default(), ()).unwrap();
    assert!(out.converged);
    let series: Vec<(f64, f64)> = out.series.iter().map(|r| (r.t, r.osc_phidot)).collect();
    let fit = fit_decay_rate(&series).unwrap();
    let expected = PI * PI / 8.0;
    assert!((fit.eta - expected).abs() <= 1e-3 * expected, "eta {} vs {expected}", fit.eta);
    assert!(fit.r_squared >= 0.999);

    let limit = ScalarField::from_fn(model.shape(), |x| -0.05 * (2.0 * PI * x[0]).cos());
    let gap = out.state.phi.axpy(-1.0, &limit);
    let g = resolved_part(model.spectral(), &gap).sup_abs();
    assert!(g <= 1e-9, "{g:e}");
}
