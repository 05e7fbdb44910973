#![allow(dead_code)]

use std::f64::consts::TAU;

use jflow_core::{FormField, FourierMode, GridShape, HermitianMatrix2, ScalarField, SurfaceModel};
use num_complex::Complex64;
use rand::Rng;

pub fn constant_model(n: usize) -> SurfaceModel {
    let i = HermitianMatrix2::IDENTITY;
    SurfaceModel::new(i, i * 2.0, ScalarField::zeros(GridShape::cubic(n).unwrap())).unwrap().normalized()
}

/// `G = I`, `H = 2I`, `ψ₀ = 0.05 cos 2πx¹`, normalized.
pub fn standard_model(n: usize) -> SurfaceModel {
    let i = HermitianMatrix2::IDENTITY;
    let psi0 = ScalarField::from_fn(GridShape::cubic(n).unwrap(), |x| 0.05 * (TAU * x[0]).cos());
    SurfaceModel::new(i, i * 2.0, psi0).unwrap().normalized()
}

/// A genuinely four-dimensional fixture with off-diagonal background data.
pub fn skew_model(n: usize) -> SurfaceModel {
    let g = HermitianMatrix2::new(1.0, 0.8, Complex64::new(0.1, -0.05));
    let h = HermitianMatrix2::new(2.0, 1.7, Complex64::new(0.2, 0.1));
    let shape = GridShape::cubic(n).unwrap();
    let psi0 = ScalarField::from_modes(
        shape,
        &[
            FourierMode::new([1, 0, 0, 0], 0.03, 0.0),
            FourierMode::new([0, 1, 1, 0], 0.01, 0.4),
            FourierMode::new([1, 0, 0, -1], 0.008, 1.1),
        ],
    );
    SurfaceModel::new(g, h, psi0).unwrap().normalized()
}

pub fn random_hermitian_pd<R: Rng>(rng: &mut R) -> HermitianMatrix2 {
    let a11: f64 = rng.gen_range(0.5..3.0);
    let a22: f64 = rng.gen_range(0.5..3.0);
    let r = 0.9 * (a11 * a22).sqrt() * rng.gen_range(0.0..1.0);
    let th = rng.gen_range(0.0..TAU);
    HermitianMatrix2::new(a11, a22, Complex64::from_polar(r, th))
}

/// A random mode resolved by an `n⁴` grid (no Nyquist components).
pub fn random_mode<R: Rng>(rng: &mut R, n: usize, amplitude: f64) -> FourierMode {
    let kmax = (n / 2 - 1) as i32;
    let k = [0; 4].map(|_: i32| rng.gen_range(-kmax..=kmax));
    FourierMode::new(k, amplitude * rng.gen_range(0.2..1.0), rng.gen_range(0.0..TAU))
}

/// `∂_i∂_j̄` of a sum of cosine modes, from `∂_z = ½(∂_x − i∂_y)`.
pub fn analytic_hessian(modes: &[FourierMode], x: [f64; 4]) -> HermitianMatrix2 {
    let mut acc = HermitianMatrix2::ZERO;
    for m in modes {
        let k = m.k.map(|v| TAU * v as f64);
        // every real second derivative of A cos θ is −A k_a k_b cos θ
        let s = -m.eval(x) * 0.25;
        let h11 = s * (k[0] * k[0] + k[1] * k[1]);
        let h22 = s * (k[2] * k[2] + k[3] * k[3]);
        let h12 = Complex64::new(k[0] * k[2] + k[1] * k[3], k[0] * k[3] - k[1] * k[2]) * s;
        acc += HermitianMatrix2::new(h11, h22, h12);
    }
    acc
}

pub fn hessian_field(shape: GridShape, modes: &[FourierMode]) -> FormField {
    let data = (0..shape.len()).map(|p| analytic_hessian(modes, shape.point(p))).collect();
    FormField::from_vec(shape, data).unwrap()
}
