//! Fourier differentiation on the periodic grid.
//!
//! The 4D transform is done axis by axis: FFT along the contiguous last axis,
//! then rotate the layout `(a, b, c, d) → (d, a, b, c)` so the next axis
//! becomes contiguous. Four passes return the data to its original layout.
//!
//! Derivative symbols use the angular wavenumber `k = 2π m` with `m` the
//! signed mode index. The Nyquist mode of every first-derivative symbol is
//! zero, and second-order symbols are built as products of first-order ones,
//! so `∂_i ∂_j̄` of a real field is exactly Hermitian and the discrete
//! integration-by-parts identities hold to roundoff.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::grid::{FormField, GridShape, ScalarField};
use crate::hermitian::HermitianMatrix2;
use crate::par;

/// Symbols of `∂_1∂_1̄`, `∂_2∂_2̄` and `∂_1∂_2̄` for one Fourier mode.
#[derive(Debug, Clone, Copy)]
pub struct HessianSymbol {
    pub s11: f64,
    pub s22: f64,
    pub s12: Complex64,
}

impl HessianSymbol {
    /// `mixed_det(A, Hess)` restricted to this mode; real and non-positive
    /// for positive-definite `A`.
    pub fn pair(&self, a: &HermitianMatrix2) -> f64 {
        a.a11 * self.s22 + a.a22 * self.s11 - 2.0 * (a.a12 * self.s12.conj()).re
    }

    pub fn is_zero(&self) -> bool {
        self.s11 == 0.0 && self.s22 == 0.0 && self.s12 == Complex64::new(0.0, 0.0)
    }
}

/// FFT plans and precomputed Hessian symbols for one grid shape.
pub struct Spectral {
    shape: GridShape,
    forward: [Arc<dyn Fft<f64>>; 4],
    inverse: [Arc<dyn Fft<f64>>; 4],
    symbols: Vec<HessianSymbol>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("shape", &self.shape).finish()
    }
}

/// Angular wavenumber of index `j` on an axis with `n` samples, zero at Nyquist.
pub fn first_derivative_wavenumber(j: usize, n: usize) -> f64 {
    let m = if 2 * j < n {
        j as f64
    } else if 2 * j == n {
        0.0
    } else {
        j as f64 - n as f64
    };
    TAU * m
}

impl Spectral {
    pub fn new(shape: GridShape) -> Self {
        let mut planner = FftPlanner::new();
        let dims = shape.dims();
        let forward = dims.map(|n| planner.plan_fft(n, FftDirection::Forward));
        let inverse = dims.map(|n| planner.plan_fft(n, FftDirection::Inverse));
        let symbols = (0..shape.len())
            .map(|idx| {
                let m = shape.multi_index(idx);
                let k = [0, 1, 2, 3].map(|a| first_derivative_wavenumber(m[a], dims[a]));
                let i = Complex64::i();
                // ∂_z = ½(∂_x − i∂_y) ↦ ½(i kx + ky), ∂_z̄ ↦ ½(i kx − ky)
                let dz1 = 0.5 * (i * k[0] + k[1]);
                let dzb1 = 0.5 * (i * k[0] - k[1]);
                let dz2 = 0.5 * (i * k[2] + k[3]);
                let dzb2 = 0.5 * (i * k[2] - k[3]);
                HessianSymbol { s11: (dz1 * dzb1).re, s22: (dz2 * dzb2).re, s12: dz1 * dzb2 }
            })
            .collect();
        Self { shape, forward, inverse, symbols }
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn symbols(&self) -> &[HessianSymbol] {
        &self.symbols
    }

    /// Unnormalised forward transform of a real field.
    pub fn forward(&self, f: &ScalarField) -> Vec<Complex64> {
        assert_eq!(f.shape(), self.shape);
        let mut buf: Vec<Complex64> = f.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, &self.forward);
        buf
    }

    /// Normalised inverse transform, in place.
    pub fn inverse_in_place(&self, buf: &mut Vec<Complex64>) {
        self.transform(buf, &self.inverse);
        let scale = 1.0 / self.shape.len() as f64;
        buf.iter_mut().for_each(|v| *v *= scale);
    }

    /// Inverse transform keeping only the real part.
    pub fn inverse_real(&self, mut spectrum: Vec<Complex64>) -> ScalarField {
        self.inverse_in_place(&mut spectrum);
        ScalarField::from_vec(self.shape, spectrum.into_iter().map(|v| v.re).collect())
            .expect("inverse transform of a finite spectrum is finite")
    }

    fn transform(&self, buf: &mut Vec<Complex64>, plans: &[Arc<dyn Fft<f64>>; 4]) {
        assert_eq!(buf.len(), self.shape.len());
        let mut dims = self.shape.dims();
        let mut axis = 3;
        for _ in 0..4 {
            let plan = &plans[axis];
            // rustfft transforms every consecutive length-n line of a slab
            par::for_each_chunk_init(
                buf,
                dims[2] * dims[3],
                || vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()],
                |scratch, slab| plan.process_with_scratch(slab, scratch),
            );
            *buf = rotate_last_to_front(buf, dims);
            dims = [dims[3], dims[0], dims[1], dims[2]];
            axis = (axis + 3) % 4;
        }
    }

    /// Matrix of `∂_i ∂_j̄ φ` at every grid point.
    pub fn complex_hessian(&self, phi: &ScalarField) -> FormField {
        let spectrum = self.forward(phi);
        self.hessian_from_spectrum(&spectrum)
    }

    pub fn hessian_from_spectrum(&self, spectrum: &[Complex64]) -> FormField {
        let i = Complex64::i();
        // s11, s22 are real and even, so both diagonals fit in one complex inverse
        let mut diag: Vec<Complex64> = par::map_indexed(spectrum.len(), |k| {
            let s = &self.symbols[k];
            spectrum[k] * (s.s11 + i * s.s22)
        });
        let mut off: Vec<Complex64> =
            par::map_indexed(spectrum.len(), |k| spectrum[k] * self.symbols[k].s12);
        self.inverse_in_place(&mut diag);
        self.inverse_in_place(&mut off);
        let data = par::map_indexed(diag.len(), |p| HermitianMatrix2::new(diag[p].re, diag[p].im, off[p]));
        FormField::from_vec(self.shape, data).expect("hessian of a finite field is finite")
    }

    /// Solves `mixed_det(A, Hess u) = rhs` for constant positive-definite `A`,
    /// discarding the modes on which the operator vanishes (constants and
    /// Nyquist-only modes).
    pub fn solve_constant_coefficient(&self, a: &HermitianMatrix2, rhs: &ScalarField) -> ScalarField {
        let spectrum = self.forward(rhs);
        let scale = self.symbols.iter().map(|s| s.pair(a).abs()).fold(0.0, f64::max);
        let cutoff = 1e-13 * scale.max(f64::MIN_POSITIVE);
        let solved = par::map_indexed(spectrum.len(), |k| {
            let sigma = self.symbols[k].pair(a);
            if sigma.abs() <= cutoff {
                Complex64::new(0.0, 0.0)
            } else {
                spectrum[k] / sigma
            }
        });
        self.inverse_real(solved)
    }
}

fn rotate_last_to_front(buf: &[Complex64], dims: [usize; 4]) -> Vec<Complex64> {
    // (a, b, c, d) → (d, a, b, c) is a transpose of a (abc × d) matrix
    let nd = dims[3];
    let block = buf.len() / nd;
    let mut out = vec![Complex64::new(0.0, 0.0); buf.len()];
    par::for_each_chunk_indexed(&mut out, block, |id, row| {
        for (j, v) in row.iter_mut().enumerate() {
            *v = buf[j * nd + id];
        }
    });
    out
}

/// Convenience wrapper building a one-off [`Spectral`] context.
pub fn complex_hessian(phi: &ScalarField) -> FormField {
    Spectral::new(phi.shape()).complex_hessian(phi)
}
