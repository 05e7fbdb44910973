//! Background geometry: the Kähler form `ω` (constant matrix `G`) and the
//! reference form `χ₀ = H + i∂∂̄ψ₀`.

use std::sync::Arc;

use thiserror::Error;

use crate::grid::{integrate, sup_inf, FormField, GridError, GridShape, ScalarField};
use crate::hermitian::{eigenvalues, mixed_det, trace_contract, HermitianMatrix2};
use crate::spectral::Spectral;

/// Complex dimension of the surface.
pub const DIM: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("background matrix G is not positive definite")]
    BackgroundNotPositive,
    #[error("reference form chi0 is not positive definite at grid point {index}")]
    ReferenceNotPositive { index: usize },
    #[error("volume of chi0 is not positive ({volume:e})")]
    NonPositiveVolume { volume: f64 },
    #[error("class constant c = {c:e} is not positive")]
    NonPositiveC { c: f64 },
    #[error(
        "n*c*chi0 - omega is not positive definite{} (min eigenvalue {min_eigenvalue:e})",
        index.map(|i| format!(" at grid point {i}")).unwrap_or_else(|| " for the constant representatives".into())
    )]
    HypothesisViolation { index: Option<usize>, min_eigenvalue: f64 },
}

/// `χ₀ = H + i∂∂̄ψ₀` sampled on the grid.
pub fn reference_form(h: &HermitianMatrix2, psi0: &ScalarField, spectral: &Spectral) -> FormField {
    spectral.complex_hessian(psi0).add_constant(*h)
}

/// `c = ∫ ω∧χ₀ / ∫ χ₀²`.
pub fn compute_c(
    g: &HermitianMatrix2,
    h: &HermitianMatrix2,
    psi0: &ScalarField,
    spectral: &Spectral,
) -> Result<f64, ModelError> {
    let chi0 = reference_form(h, psi0, spectral);
    if let Some(index) = chi0.first_non_positive() {
        return Err(ModelError::ReferenceNotPositive { index });
    }
    c_from_form(g, &chi0)
}

fn c_from_form(g: &HermitianMatrix2, chi0: &FormField) -> Result<f64, ModelError> {
    let volume = integrate(&chi0.map_scalar(|x| 2.0 * x.det()));
    if volume <= 0.0 {
        return Err(ModelError::NonPositiveVolume { volume });
    }
    let c = integrate(&chi0.map_scalar(|x| mixed_det(g, x))) / volume;
    if c > 0.0 {
        Ok(c)
    } else {
        Err(ModelError::NonPositiveC { c })
    }
}

/// The fixed data `(M, ω, χ₀)` of a flow, with derived quantities cached.
#[derive(Debug, Clone)]
pub struct SurfaceModel {
    shape: GridShape,
    g: HermitianMatrix2,
    h: HermitianMatrix2,
    psi0: ScalarField,
    c: f64,
    normalized: bool,
    chi0: FormField,
    lambda_chi0_omega: (f64, f64),
    spectral: Arc<Spectral>,
}

impl SurfaceModel {
    pub fn new(g: HermitianMatrix2, h: HermitianMatrix2, psi0: ScalarField) -> Result<Self, ModelError> {
        let spectral = Arc::new(Spectral::new(psi0.shape()));
        Self::with_spectral(spectral, g, h, psi0)
    }

    /// Builds and validates a model, reusing an existing transform context.
    pub fn with_spectral(
        spectral: Arc<Spectral>,
        g: HermitianMatrix2,
        h: HermitianMatrix2,
        psi0: ScalarField,
    ) -> Result<Self, ModelError> {
        let shape = psi0.shape();
        if spectral.shape() != shape {
            return Err(GridError::ShapeMismatch(spectral.shape().dims(), shape.dims()).into());
        }
        if !g.is_positive_definite() {
            return Err(ModelError::BackgroundNotPositive);
        }
        let chi0 = reference_form(&h, &psi0, &spectral);
        if let Some(index) = chi0.first_non_positive() {
            return Err(ModelError::ReferenceNotPositive { index });
        }
        let c = c_from_form(&g, &chi0)?;
        let lambda = chi0.map_scalar(|x| trace_contract(x, &g).expect("chi0 checked positive"));
        let model = Self {
            shape,
            g,
            h,
            psi0,
            c,
            normalized: false,
            chi0,
            lambda_chi0_omega: sup_inf(&lambda),
            spectral,
        };
        model.check_hypothesis()?;
        Ok(model)
    }

    /// Verifies `n·c·H − G > 0` and `n·c·χ₀ − G > 0` at every grid point.
    pub fn check_hypothesis(&self) -> Result<(), ModelError> {
        let nc = DIM * self.c;
        let constant = self.h * nc - self.g;
        if !constant.is_positive_definite() {
            return Err(ModelError::HypothesisViolation { index: None, min_eigenvalue: eigenvalues(&constant).0 });
        }
        for (index, x) in self.chi0.data().iter().enumerate() {
            let m = *x * nc - self.g;
            if !m.is_positive_definite() {
                return Err(ModelError::HypothesisViolation { index: Some(index), min_eigenvalue: eigenvalues(&m).0 });
            }
        }
        Ok(())
    }

    /// Rescales `G` by `1/(n·c)` so that the class constant becomes `1/n`.
    pub fn normalized(&self) -> Self {
        let g = self.g * (1.0 / (DIM * self.c));
        let c = c_from_form(&g, &self.chi0).expect("rescaling keeps c positive");
        let lambda = self.chi0.map_scalar(|x| trace_contract(x, &g).expect("chi0 checked positive"));
        Self { g, c, normalized: true, lambda_chi0_omega: sup_inf(&lambda), ..self.clone() }
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn g(&self) -> &HermitianMatrix2 {
        &self.g
    }

    pub fn h(&self) -> &HermitianMatrix2 {
        &self.h
    }

    pub fn psi0(&self) -> &ScalarField {
        &self.psi0
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn chi0(&self) -> &FormField {
        &self.chi0
    }

    pub fn spectral(&self) -> &Arc<Spectral> {
        &self.spectral
    }

    /// `(inf, sup)` of `Λ_{χ₀} ω` over the grid.
    pub fn lambda_chi0_omega(&self) -> (f64, f64) {
        self.lambda_chi0_omega
    }

    /// `χ_φ = χ₀ + i∂∂̄φ`.
    pub fn chi(&self, phi: &ScalarField) -> FormField {
        self.chi0.add(&self.spectral.complex_hessian(phi))
    }
}
