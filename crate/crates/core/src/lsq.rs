//! Matrix-free damped least squares by conjugate gradients on the normal
//! equations (CGLS).
//!
//! Minimizes `‖A x − b‖² + reg · ‖x‖²` starting from `x = 0`, so for
//! `reg → 0` the iterates stay in the range of `A*` and converge to the
//! minimal-norm solution.

use num_complex::Complex64 as C64;

#[derive(Clone, Debug, PartialEq)]
pub struct LsqOptions {
    pub reg: f64,
    /// Stop when `‖A*(b − Ax) − reg·x‖ ≤ tol · ‖A*b‖`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LsqOptions {
    fn default() -> Self {
        LsqOptions { reg: 1e-12, tol: 1e-13, max_iter: 20_000 }
    }
}

#[derive(Clone, Debug)]
pub struct LsqResult {
    pub x: Vec<C64>,
    pub residual_norm: f64,
    pub rhs_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl LsqResult {
    pub fn relative_residual(&self) -> f64 {
        if self.rhs_norm == 0.0 {
            self.residual_norm
        } else {
            self.residual_norm / self.rhs_norm
        }
    }
}

fn norm_sq(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub fn cgls<F, G>(apply: F, adjoint: G, b: &[C64], n: usize, opts: &LsqOptions) -> LsqResult
where
    F: Fn(&[C64]) -> Vec<C64>,
    G: Fn(&[C64]) -> Vec<C64>,
{
    let rhs_norm = norm_sq(b).sqrt();
    let mut x = vec![C64::new(0.0, 0.0); n];
    if rhs_norm == 0.0 {
        return LsqResult { x, residual_norm: 0.0, rhs_norm, iterations: 0, converged: true };
    }
    let mut r = b.to_vec();
    let mut s = adjoint(&r);
    let s0 = norm_sq(&s).sqrt();
    if s0 == 0.0 {
        return LsqResult { x, residual_norm: rhs_norm, rhs_norm, iterations: 0, converged: true };
    }
    let mut p = s.clone();
    let mut gamma = norm_sq(&s);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let q = apply(&p);
        let delta = norm_sq(&q) + opts.reg * norm_sq(&p);
        if delta == 0.0 {
            converged = true;
            break;
        }
        let alpha = gamma / delta;
        for (xi, pi) in x.iter_mut().zip(&p) {
            *xi += pi * alpha;
        }
        for (ri, qi) in r.iter_mut().zip(&q) {
            *ri -= qi * alpha;
        }
        s = adjoint(&r);
        for (si, xi) in s.iter_mut().zip(&x) {
            *si -= xi * opts.reg;
        }
        let gamma_new = norm_sq(&s);
        if gamma_new.sqrt() <= opts.tol * s0 || norm_sq(&r).sqrt() <= opts.tol * rhs_norm {
            converged = true;
            break;
        }
        let beta = gamma_new / gamma;
        gamma = gamma_new;
        for (pi, si) in p.iter_mut().zip(&s) {
            *pi = si + *pi * beta;
        }
    }
    let residual_norm = norm_sq(&r).sqrt();
    LsqResult { x, residual_norm, rhs_norm, iterations, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn solves_overdetermined_consistent_system() {
        // A = [[1,0],[0,2],[1,1]], x* = (1, -1)
        let a = [[1.0, 0.0], [0.0, 2.0], [1.0, 1.0]];
        let apply = |x: &[C64]| a.iter().map(|row| c(row[0]) * x[0] + c(row[1]) * x[1]).collect::<Vec<_>>();
        let adjoint =
            |y: &[C64]| (0..2).map(|j| a.iter().zip(y).map(|(row, yi)| c(row[j]) * yi).sum()).collect::<Vec<C64>>();
        let b = vec![c(1.0), c(-2.0), c(0.0)];
        let res = cgls(apply, adjoint, &b, 2, &LsqOptions { reg: 0.0, ..Default::default() });
        assert!(res.converged);
        assert!((res.x[0] - c(1.0)).norm() < 1e-12);
        assert!((res.x[1] - c(-1.0)).norm() < 1e-12);
        assert!(res.relative_residual() < 1e-12);
    }

    #[test]
    fn underdetermined_gives_minimal_norm() {
        // x0 + x1 = 2 → minimal-norm solution (1, 1)
        let apply = |x: &[C64]| vec![x[0] + x[1]];
        let adjoint = |y: &[C64]| vec![y[0], y[0]];
        let res = cgls(apply, adjoint, &[c(2.0)], 2, &LsqOptions::default());
        assert!((res.x[0] - c(1.0)).norm() < 1e-10);
        assert!((res.x[1] - c(1.0)).norm() < 1e-10);
    }

    #[test]
    fn inconsistent_system_reports_residual() {
        // x = 1 and x = 3 → x = 2, residual sqrt(2)
        let apply = |x: &[C64]| vec![x[0], x[0]];
        let adjoint = |y: &[C64]| vec![y[0] + y[1]];
        let res = cgls(apply, adjoint, &[c(1.0), c(3.0)], 1, &LsqOptions::default());
        assert!((res.x[0] - c(2.0)).norm() < 1e-10);
        assert!((res.residual_norm - 2f64.sqrt()).abs() < 1e-10);
    }
}
