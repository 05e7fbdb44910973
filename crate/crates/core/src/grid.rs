//! Periodic sampling of the flat complex 2-torus.
//!
//! Real coordinates `x¹..x⁴ ∈ [0, 1)` with `z¹ = x¹ + i x²`, `z² = x³ + i x⁴`.
//! Samples are stored row-major with `x⁴` varying fastest:
//! `index = ((i1·n2 + i2)·n3 + i3)·n4 + i4`.

use std::f64::consts::TAU;

use thiserror::Error;

use crate::hermitian::HermitianMatrix2;
use crate::par;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid dims must be even and at least 4, got {0:?}")]
    InvalidShape([usize; 4]),
    #[error("expected {expected} samples, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("sample {index} is not finite")]
    NonFinite { index: usize },
    #[error("grid shapes differ: {0:?} vs {1:?}")]
    ShapeMismatch([usize; 4], [usize; 4]),
}

/// Samples per unit period along each real axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridShape {
    dims: [usize; 4],
}

impl GridShape {
    pub fn new(dims: [usize; 4]) -> Result<Self, GridError> {
        if dims.iter().all(|&n| n >= 4 && n % 2 == 0) {
            Ok(Self { dims })
        } else {
            Err(GridError::InvalidShape(dims))
        }
    }

    pub fn cubic(n: usize) -> Result<Self, GridError> {
        Self::new([n; 4])
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, i: [usize; 4]) -> usize {
        let [_, n2, n3, n4] = self.dims;
        ((i[0] * n2 + i[1]) * n3 + i[2]) * n4 + i[3]
    }

    pub fn multi_index(&self, mut idx: usize) -> [usize; 4] {
        let mut out = [0; 4];
        for axis in (0..4).rev() {
            out[axis] = idx % self.dims[axis];
            idx /= self.dims[axis];
        }
        out
    }

    /// Real coordinates of a grid point.
    pub fn point(&self, idx: usize) -> [f64; 4] {
        let m = self.multi_index(idx);
        [0, 1, 2, 3].map(|a| m[a] as f64 / self.dims[a] as f64)
    }

    /// Grid spacing per axis.
    pub fn spacing(&self) -> [f64; 4] {
        self.dims.map(|n| 1.0 / n as f64)
    }
}

/// A real function sampled on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    shape: GridShape,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(shape: GridShape) -> Self {
        Self { shape, data: vec![0.0; shape.len()] }
    }

    pub fn constant(shape: GridShape, value: f64) -> Self {
        Self { shape, data: vec![value; shape.len()] }
    }

    pub fn from_vec(shape: GridShape, data: Vec<f64>) -> Result<Self, GridError> {
        if data.len() != shape.len() {
            return Err(GridError::LengthMismatch { expected: shape.len(), actual: data.len() });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite { index });
        }
        Ok(Self { shape, data })
    }

    /// Samples `f` at every grid point.
    pub fn from_fn<F>(shape: GridShape, f: F) -> Self
    where
        F: Fn([f64; 4]) -> f64 + Sync + Send,
    {
        let data = par::map_indexed(shape.len(), |i| f(shape.point(i)));
        Self { shape, data }
    }

    /// Sum of `amplitude · cos(2π k·x + phase)` over the given modes.
    pub fn from_modes(shape: GridShape, modes: &[FourierMode]) -> Self {
        Self::from_fn(shape, |x| modes.iter().map(|m| m.eval(x)).sum())
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn map<F>(&self, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        let data = par::map_indexed(self.data.len(), |i| f(self.data[i]));
        Self { shape: self.shape, data }
    }

    /// `self + s · other`.
    pub fn axpy(&self, s: f64, other: &ScalarField) -> Self {
        debug_assert_eq!(self.shape, other.shape);
        let data = par::map_indexed(self.data.len(), |i| self.data[i] + s * other.data[i]);
        Self { shape: self.shape, data }
    }

    pub fn mean(&self) -> f64 {
        integrate(self)
    }

    pub fn sup_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// A Hermitian 2×2 matrix per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct FormField {
    shape: GridShape,
    data: Vec<HermitianMatrix2>,
}

impl FormField {
    pub fn constant(shape: GridShape, value: HermitianMatrix2) -> Self {
        Self { shape, data: vec![value; shape.len()] }
    }

    pub fn from_vec(shape: GridShape, data: Vec<HermitianMatrix2>) -> Result<Self, GridError> {
        if data.len() != shape.len() {
            return Err(GridError::LengthMismatch { expected: shape.len(), actual: data.len() });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite { index });
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn data(&self) -> &[HermitianMatrix2] {
        &self.data
    }

    pub fn get(&self, idx: usize) -> &HermitianMatrix2 {
        &self.data[idx]
    }

    /// Pointwise `self + other`.
    pub fn add(&self, other: &FormField) -> Self {
        debug_assert_eq!(self.shape, other.shape);
        let data = par::map_indexed(self.data.len(), |i| self.data[i] + other.data[i]);
        Self { shape: self.shape, data }
    }

    /// Pointwise `self + m` for a constant matrix.
    pub fn add_constant(&self, m: HermitianMatrix2) -> Self {
        let data = par::map_indexed(self.data.len(), |i| self.data[i] + m);
        Self { shape: self.shape, data }
    }

    /// Applies `f` pointwise, producing a scalar field.
    pub fn map_scalar<F>(&self, f: F) -> ScalarField
    where
        F: Fn(&HermitianMatrix2) -> f64 + Sync + Send,
    {
        let data = par::map_indexed(self.data.len(), |i| f(&self.data[i]));
        ScalarField { shape: self.shape, data }
    }

    /// Index of the first point that is not positive definite, if any.
    pub fn first_non_positive(&self) -> Option<usize> {
        self.data.iter().position(|m| !m.is_positive_definite())
    }

    /// Entrywise mean of the field.
    pub fn mean(&self) -> HermitianMatrix2 {
        let mut acc = HermitianMatrix2::ZERO;
        for m in &self.data {
            acc += *m;
        }
        acc * (1.0 / self.data.len() as f64)
    }
}

/// One term `amplitude · cos(2π k·x + phase)` of a band-limited potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierMode {
    pub k: [i32; 4],
    pub amplitude: f64,
    pub phase: f64,
}

impl FourierMode {
    pub fn new(k: [i32; 4], amplitude: f64, phase: f64) -> Self {
        Self { k, amplitude, phase }
    }

    pub fn eval(&self, x: [f64; 4]) -> f64 {
        let arg: f64 = (0..4).map(|a| self.k[a] as f64 * x[a]).sum();
        self.amplitude * (TAU * arg + self.phase).cos()
    }

    /// True when every frequency is strictly below the Nyquist index of `shape`.
    pub fn resolved_by(&self, shape: GridShape) -> bool {
        (0..4).all(|a| (self.k[a].unsigned_abs() as usize) * 2 < shape.dims()[a])
    }
}

/// Periodic trapezoidal quadrature on the unit-volume torus: the grid mean.
pub fn integrate(f: &ScalarField) -> f64 {
    mean_of(&f.data)
}

/// Mean of a slice with Neumaier-compensated summation.
pub fn mean_of(values: &[f64]) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    (sum + comp) / values.len() as f64
}

/// `(min, max)` over the grid samples.
pub fn sup_inf(f: &ScalarField) -> (f64, f64) {
    f.data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}
