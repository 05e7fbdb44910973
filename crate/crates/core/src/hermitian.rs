//! Closed-form algebra for 2×2 Hermitian matrices.
//!
//! A real (1,1)-form on a complex surface is, at each point, a 2×2 Hermitian
//! matrix `a_{i j̄}`. Only the upper triangle is stored; `a21 = conj(a12)` is
//! implied. Wedge products of two forms reduce to [`mixed_det`], with the
//! convention `α ∧ β = mixed_det(A, B) · dV`, so `χ ∧ χ = 2 det(X) · dV`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;
use thiserror::Error;

/// Threshold used by the positive-definiteness test on both the leading
/// entry and the determinant.
pub const PD_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("matrix is not positive definite (a11 = {a11:e}, det = {det:e})")]
pub struct NotPositiveDefinite {
    pub a11: f64,
    pub det: f64,
}

/// Hermitian 2×2 matrix stored by its upper triangle.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HermitianMatrix2 {
    pub a11: f64,
    pub a22: f64,
    pub a12: Complex64,
}

impl HermitianMatrix2 {
    pub const ZERO: Self = Self::new(0.0, 0.0, Complex64::new(0.0, 0.0));
    pub const IDENTITY: Self = Self::new(1.0, 1.0, Complex64::new(0.0, 0.0));

    pub const fn new(a11: f64, a22: f64, a12: Complex64) -> Self {
        Self { a11, a22, a12 }
    }

    pub const fn diag(a11: f64, a22: f64) -> Self {
        Self::new(a11, a22, Complex64::new(0.0, 0.0))
    }

    pub const fn scalar(s: f64) -> Self {
        Self::diag(s, s)
    }

    /// Builds from the flat component order `[a11, a22, Re a12, Im a12]`
    /// used by snapshot files and configs.
    pub const fn from_components(c: [f64; 4]) -> Self {
        Self::new(c[0], c[1], Complex64::new(c[2], c[3]))
    }

    pub fn components(&self) -> [f64; 4] {
        [self.a11, self.a22, self.a12.re, self.a12.im]
    }

    pub fn a21(&self) -> Complex64 {
        self.a12.conj()
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn det(&self) -> f64 {
        det(self)
    }

    pub fn is_finite(&self) -> bool {
        self.a11.is_finite() && self.a22.is_finite() && self.a12.re.is_finite() && self.a12.im.is_finite()
    }

    pub fn is_positive_definite(&self) -> bool {
        self.a11 > PD_EPS && self.det() > PD_EPS
    }

    pub fn check_positive_definite(&self) -> Result<(), NotPositiveDefinite> {
        if self.is_positive_definite() {
            Ok(())
        } else {
            Err(NotPositiveDefinite { a11: self.a11, det: self.det() })
        }
    }

    /// The 2×2 adjugate `[[a22, -a12], [-a21, a11]]`, again Hermitian.
    pub fn adjugate(&self) -> Self {
        Self::new(self.a22, self.a11, -self.a12)
    }

    pub fn inverse(&self) -> Result<Self, NotPositiveDefinite> {
        self.check_positive_definite()?;
        Ok(self.adjugate() * (1.0 / self.det()))
    }

    /// Largest absolute difference over the four stored real components.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let d = *self - *other;
        d.a11.abs().max(d.a22.abs()).max(d.a12.re.abs()).max(d.a12.im.abs())
    }

    fn to_full(self) -> [[Complex64; 2]; 2] {
        [
            [Complex64::new(self.a11, 0.0), self.a12],
            [self.a12.conj(), Complex64::new(self.a22, 0.0)],
        ]
    }
}

impl Add for HermitianMatrix2 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.a11 + rhs.a11, self.a22 + rhs.a22, self.a12 + rhs.a12)
    }
}

impl AddAssign for HermitianMatrix2 {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sub for HermitianMatrix2 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.a11 - rhs.a11, self.a22 - rhs.a22, self.a12 - rhs.a12)
    }
}

impl Neg for HermitianMatrix2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.a11, -self.a22, -self.a12)
    }
}

impl Mul<f64> for HermitianMatrix2 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.a11 * s, self.a22 * s, self.a12 * s)
    }
}

/// `a11·a22 − |a12|²`.
pub fn det(x: &HermitianMatrix2) -> f64 {
    x.a11 * x.a22 - x.a12.norm_sqr()
}

/// Polarisation of the determinant: `det(A + B) = det A + mixed_det(A, B) + det B`.
pub fn mixed_det(a: &HermitianMatrix2, b: &HermitianMatrix2) -> f64 {
    // A12·conj(B12) + conj(A12)·B12 = 2 Re(A12·conj(B12))
    a.a11 * b.a22 + a.a22 * b.a11 - 2.0 * (a.a12 * b.a12.conj()).re
}

/// `Λ_X G = tr(X⁻¹ G)`, evaluated as `mixed_det(G, X) / det X`
/// (the adjugate of a 2×2 matrix pairs with `G` through the mixed determinant).
pub fn trace_contract(x: &HermitianMatrix2, g: &HermitianMatrix2) -> Result<f64, NotPositiveDefinite> {
    x.check_positive_definite()?;
    Ok(mixed_det(g, x) / x.det())
}

/// `h = X⁻¹ G X⁻¹`, the coefficient tensor of the linearised flow operator.
pub fn h_tensor(x: &HermitianMatrix2, g: &HermitianMatrix2) -> Result<HermitianMatrix2, NotPositiveDefinite> {
    let inv = x.inverse()?.to_full();
    let gf = g.to_full();
    let p = mat_mul(&mat_mul(&inv, &gf), &inv);
    Ok(HermitianMatrix2::new(p[0][0].re, p[1][1].re, p[0][1]))
}

/// Both eigenvalues in ascending order.
pub fn eigenvalues(x: &HermitianMatrix2) -> (f64, f64) {
    let mean = 0.5 * (x.a11 + x.a22);
    let half_gap = 0.5 * (x.a11 - x.a22);
    let r = (half_gap * half_gap + x.a12.norm_sqr()).sqrt();
    (mean - r, mean + r)
}

/// Eigenvalues of the pencil `X − λ G` (roots of `det G λ² − mixed_det(X, G) λ + det X`),
/// ascending. `G` must be positive definite.
pub fn generalized_eigenvalues(
    x: &HermitianMatrix2,
    g: &HermitianMatrix2,
) -> Result<(f64, f64), NotPositiveDefinite> {
    g.check_positive_definite()?;
    let a = g.det();
    let b = mixed_det(x, g);
    let c = x.det();
    let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
    Ok(((b - disc) / (2.0 * a), (b + disc) / (2.0 * a)))
}

fn mat_mul(a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}
