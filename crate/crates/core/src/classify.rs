//! Classification of 2-cocycles in codimension one.
//!
//! Coboundaries pair symmetrically with the constant function:
//! `⟨δξ(a,b)|1⟩ = F(a+b) − F(a) − F(b)` with `F(a) = ⟨ξ_a|1⟩`. The
//! antisymmetric part `K(a,b) = ⟨Γ(a,b)|1⟩ − ⟨Γ(b,a)|1⟩` therefore only sees
//! the class, and for `u^{λ₁,λ₂}` equals `u(a)|S_b| − u(b)|S_a|` with `S_a`
//! the strip of `a`. `λ₁, λ₂` are fitted in a basis of `L(H)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use num_traits::ToPrimitive;

use crate::cocycle::{make_u, solve_coboundary, CoboundarySolution, SolveOptions, TwoCocycle};
use crate::cone::{LatticePoint, LatticeSample};
use crate::error::{Error, Result};
use crate::shift::ShiftRep;

#[derive(Clone, Debug)]
pub struct Classification {
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    /// Largest misfit of `K` after extraction.
    pub fit_residual: f64,
    pub dependent: bool,
    /// `λ₀` with `(λ₁, λ₂) = (cos θ λ₀, sin θ λ₀)`, signed lexicographically
    /// positive. `None` for independent pairs.
    pub normal_form: Option<Vec<f64>>,
    /// `Γ − u^{λ₁,λ₂}` as a coboundary problem.
    pub remainder: CoboundarySolution,
}

impl Classification {
    pub fn admissible(&self) -> bool {
        self.dependent
    }

    /// Absolute least-squares residual of `Γ − u^{λ₁,λ₂} = δξ`. The relative
    /// one is meaningless when the remainder itself is at rounding level.
    pub fn remainder_residual(&self) -> f64 {
        self.remainder.residual * self.remainder.rhs_norm
    }
}

/// `±v` with the first entry above `tol` in magnitude made positive.
pub fn sign_normalize(v: &[f64], tol: f64) -> Vec<f64> {
    match v.iter().find(|x| x.abs() > tol) {
        Some(x) if *x < 0.0 => v.iter().map(|x| -x).collect(),
        _ => v.to_vec(),
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Gram determinant test `|λ₁|²|λ₂|² − ⟨λ₁|λ₂⟩² ≤ tol · |λ₁|²|λ₂|²`.
pub fn linearly_dependent(l1: &[f64], l2: &[f64], tol: f64) -> bool {
    let (n1, n2, c) = (dot(l1, l1), dot(l2, l2), dot(l1, l2));
    // a vector at rounding level is dependent on anything
    if n1.min(n2) <= tol * tol * n1.max(n2).max(1.0) {
        return true;
    }
    n1 * n2 - c * c <= tol * n1 * n2
}

/// `λ₀` for a dependent pair, or `None`.
pub fn normal_form(l1: &[f64], l2: &[f64], tol: f64) -> Option<Vec<f64>> {
    let (n1, n2) = (dot(l1, l1), dot(l2, l2));
    let len = (n1 + n2).sqrt();
    if len <= tol {
        return Some(vec![0.0; l1.len()]);
    }
    if !linearly_dependent(l1, l2, tol) {
        return None;
    }
    let dir = if n1 >= n2 { l1 } else { l2 };
    let scale = len / dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    Some(sign_normalize(&dir.iter().map(|x| x * scale).collect::<Vec<_>>(), 1e-12 * len))
}

fn strip_measure(rep: &ShiftRep, a: &LatticePoint) -> f64 {
    rep.model().strip_indicator(a).norm_sqr()
}

fn pairing_with_one(rep: &ShiftRep, gamma: &TwoCocycle, a: &LatticePoint, b: &LatticePoint) -> Result<C64> {
    let m = rep.model();
    let v = gamma.eval(rep, a, b)?;
    Ok(v.values.iter().sum::<C64>() * m.cell_weight())
}

/// Antisymmetric pairing `K(a,b)`.
pub fn antisymmetric_pairing(rep: &ShiftRep, gamma: &TwoCocycle, a: &LatticePoint, b: &LatticePoint) -> Result<C64> {
    Ok(pairing_with_one(rep, gamma, a, b)? - pairing_with_one(rep, gamma, b, a)?)
}

/// Extracts `(λ₁, λ₂)` by least squares on the sampled pairs and reports the
/// class representative and the remainder.
pub fn classify(
    rep: &ShiftRep,
    gamma: &TwoCocycle,
    sample: &LatticeSample,
    opts: &SolveOptions,
) -> Result<Classification> {
    let m = rep.model();
    if m.codim() != 1 {
        return Err(Error::Codimension(m.codim()));
    }
    let h = m.h();
    let basis: Vec<Vec<f64>> =
        m.subgroup().basis().iter().map(|b| b.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()).collect();
    let k = basis.len();
    let pairs: Vec<_> = sample.pairs().into_iter().filter(|(a, b)| a < b).collect();
    if pairs.is_empty() || k == 0 {
        return Err(Error::EmptySample("no ordered pairs to fit".into()));
    }
    let mut rows = Vec::with_capacity(pairs.len());
    let mut rhs = Vec::with_capacity(pairs.len());
    for (a, b) in &pairs {
        let (ar, br) = (a.to_real(h), b.to_real(h));
        let (sa, sb) = (strip_measure(rep, a), strip_measure(rep, b));
        rows.push(basis.iter().map(|e| dot(e, &ar) * sb - dot(e, &br) * sa).collect::<Vec<_>>());
        rhs.push(antisymmetric_pairing(rep, gamma, a, b)?);
    }
    let design = DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j]);
    let svd = design.clone().svd(true, true);
    let solve = |part: &dyn Fn(&C64) -> f64| -> Result<(DVector<f64>, f64)> {
        let y = DVector::from_iterator(rhs.len(), rhs.iter().map(part));
        let c = svd.solve(&y, 1e-12).map_err(|e| Error::Singular(e.to_string()))?;
        let misfit = (&design * &c - &y).amax();
        Ok((c, misfit))
    };
    let (c1, r1) = solve(&|z| z.re)?;
    let (c2, r2) = solve(&|z| z.im)?;
    let combine =
        |c: &DVector<f64>| -> Vec<f64> { (0..m.dim()).map(|i| (0..k).map(|j| c[j] * basis[j][i]).sum()).collect() };
    let (lambda1, lambda2) = (combine(&c1), combine(&c2));
    let remainder = solve_coboundary(rep, &gamma.minus(&make_u(m, &lambda1, &lambda2)?), sample, opts)?;
    Ok(Classification {
        dependent: linearly_dependent(&lambda1, &lambda2, 1e-9),
        normal_form: normal_form(&lambda1, &lambda2, 1e-9),
        lambda1,
        lambda2,
        fit_residual: r1.max(r2),
        remainder,
    })
}
