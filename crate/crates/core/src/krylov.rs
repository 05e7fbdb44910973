//! Restarted GMRES with right preconditioning.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOptions {
    /// Stop when `‖b − A x‖ ≤ rtol · ‖b‖`.
    pub rtol: f64,
    pub max_iter: usize,
    pub restart: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self { rtol: 1e-3, max_iter: 200, restart: 40 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Estimated relative residual at exit.
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` from `x = 0`, building the Krylov space of `A M⁻¹`.
pub fn gmres<A, P>(apply: A, precond: P, b: &[f64], opts: GmresOptions) -> GmresOutcome
where
    A: Fn(&[f64]) -> Vec<f64>,
    P: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let mut x = vec![0.0; n];
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return GmresOutcome { x, iterations: 0, relative_residual: 0.0, converged: true };
    }
    let m = opts.restart.max(1);
    let target = opts.rtol * bnorm;
    let mut total = 0;
    let mut r = b.to_vec();
    loop {
        let beta = norm(&r);
        if beta <= target || total >= opts.max_iter {
            return GmresOutcome { x, iterations: total, relative_residual: beta / bnorm, converged: beta <= target };
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        while k < m && total < opts.max_iter {
            let mut w = apply(&precond(&basis[k]));
            for (i, v) in basis.iter().enumerate() {
                let h = dot(&w, v);
                hess[i][k] = h;
                w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= h * vi);
            }
            let wnorm = norm(&w);
            hess[k + 1][k] = wnorm;
            for i in 0..k {
                let (a, c) = (hess[i][k], hess[i + 1][k]);
                hess[i][k] = cs[i] * a + sn[i] * c;
                hess[i + 1][k] = -sn[i] * a + cs[i] * c;
            }
            let (a, c) = (hess[k][k], hess[k + 1][k]);
            let rho = a.hypot(c);
            (cs[k], sn[k]) = if rho == 0.0 { (1.0, 0.0) } else { (a / rho, c / rho) };
            hess[k][k] = rho;
            hess[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k += 1;
            if g[k].abs() <= target || wnorm <= 1e-14 * bnorm {
                break;
            }
            basis.push(w.iter().map(|v| v / wnorm).collect());
        }
        // back substitution for the least-squares coefficients
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|j| hess[i][j] * y[j]).sum();
            y[i] = if hess[i][i] != 0.0 { (g[i] - s) / hess[i][i] } else { 0.0 };
        }
        let mut update = vec![0.0; n];
        for (yi, v) in y.iter().zip(&basis) {
            update.iter_mut().zip(v).for_each(|(u, vi)| *u += yi * vi);
        }
        let dx = precond(&update);
        x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
        let ax = apply(&x);
        r = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(x: &[f64]) -> Vec<f64> {
        // nonsymmetric convection–diffusion stencil
        let n = x.len();
        (0..n)
            .map(|i| {
                let l = if i > 0 { x[i - 1] } else { 0.0 };
                let r = if i + 1 < n { x[i + 1] } else { 0.0 };
                4.0 * x[i] - 1.3 * l - 0.7 * r
            })
            .collect()
    }

    #[test]
    fn solves_nonsymmetric_system() {
        let n = 60;
        let truth: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = tridiag(&truth);
        let out = gmres(tridiag, |v| v.to_vec(), &b, GmresOptions { rtol: 1e-12, max_iter: 500, restart: 15 });
        assert!(out.converged);
        for (a, t) in out.x.iter().zip(&truth) {
            assert!((a - t).abs() < 1e-10);
        }
    }

    #[test]
    fn exact_preconditioner_converges_in_one_iteration() {
        let b = vec![1.0, -2.0, 0.5];
        let out = gmres(|v| v.iter().map(|x| 3.0 * x).collect(), |v| v.iter().map(|x| x / 3.0).collect(), &b, GmresOptions::default());
        assert_eq!(out.iterations, 1);
        assert!(out.x.iter().zip(&b).all(|(x, bi)| (3.0 * x - bi).abs() < 1e-15));
    }

    #[test]
    fn zero_rhs_is_trivial() {
        let out = gmres(|v| v.to_vec(), |v| v.to_vec(), &[0.0; 4], GmresOptions::default());
        assert!(out.converged && out.iterations == 0 && out.x == vec![0.0; 4]);
    }
}
