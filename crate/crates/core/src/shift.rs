//! The shift semigroup `V_a f(x) = f(x ⊞⁻¹ a)` on grid vectors.
//!
//! Operators are index maps: `V_a` moves every `y`-column by `a₁` and every
//! `t`-entry up by `r(a)/h` cells. Dense matrices are available for small
//! windows to cross-check identities by brute force.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::cone::LatticePoint;
use crate::error::{Error, Result};
use crate::grid::GridVector;
use crate::pspace::PSpaceModel;

/// Largest window for which dense operator matrices are built.
pub const DENSE_LIMIT: usize = 10_000;

#[derive(Debug)]
pub struct ShiftRep {
    model: Arc<PSpaceModel>,
    max_t_extent: AtomicUsize,
}

impl Clone for ShiftRep {
    fn clone(&self) -> Self {
        ShiftRep {
            model: self.model.clone(),
            max_t_extent: AtomicUsize::new(self.max_t_extent.load(Ordering::Relaxed)),
        }
    }
}

impl ShiftRep {
    pub fn new(model: PSpaceModel) -> Self {
        ShiftRep { model: Arc::new(model), max_t_extent: AtomicUsize::new(0) }
    }

    pub fn from_arc(model: Arc<PSpaceModel>) -> Self {
        ShiftRep { model, max_t_extent: AtomicUsize::new(0) }
    }

    pub fn model(&self) -> &PSpaceModel {
        &self.model
    }

    pub fn model_arc(&self) -> Arc<PSpaceModel> {
        self.model.clone()
    }

    /// Highest `t`-index that any shifted nonzero entry has reached.
    pub fn max_t_extent(&self) -> usize {
        self.max_t_extent.load(Ordering::Relaxed)
    }

    pub fn zeros(&self) -> GridVector {
        self.model.zeros()
    }

    /// `(V_a v)(x) = v(x ⊞⁻¹ a)`; errors if nonzero mass leaves the window.
    pub fn apply_v(&self, a: &LatticePoint, v: &GridVector) -> Result<GridVector> {
        let m = &*self.model;
        m.check_in_cone(a)?;
        let nt = m.n_t();
        let r = m.t_shift(a) as usize;
        let mut out = m.zeros();
        let mut extent = 0usize;
        for y in 0..m.y_cells() {
            let src = &v.values[y * nt..(y + 1) * nt];
            let target = m.y_translate(y, a, 1);
            for (t, z) in src.iter().enumerate() {
                if z.re == 0.0 && z.im == 0.0 {
                    continue;
                }
                match target {
                    Some(y2) if t + r < nt => {
                        out.values[y2 * nt + t + r] = *z;
                        extent = extent.max(t + r);
                    }
                    _ => {
                        return Err(Error::GuardViolation(format!(
                            "shift by {a} moves cell (y={y}, t={t}) out of window"
                        )))
                    }
                }
            }
        }
        self.max_t_extent.fetch_max(extent, Ordering::Relaxed);
        Ok(out)
    }

    /// `(V_a* v)(x) = v(x ⊞ a)`, with values beyond the window read as 0.
    pub fn apply_vstar(&self, a: &LatticePoint, v: &GridVector) -> Result<GridVector> {
        let m = &*self.model;
        m.check_in_cone(a)?;
        let nt = m.n_t();
        let r = m.t_shift(a) as usize;
        let mut out = m.zeros();
        if r >= nt {
            return Ok(out);
        }
        for y in 0..m.y_cells() {
            if let Some(y2) = m.y_translate(y, a, 1) {
                out.values[y * nt..y * nt + nt - r].copy_from_slice(&v.values[y2 * nt + r..(y2 + 1) * nt]);
            }
        }
        Ok(out)
    }

    /// `E_a^⊥ v`: restriction to the strip `A ∖ A⊞a`, the range of which is
    /// `Ker(V_a*)`.
    pub fn ker_proj(&self, a: &LatticePoint, v: &GridVector) -> GridVector {
        let m = &*self.model;
        let r = m.t_shift(a).max(0) as usize;
        let nt = m.n_t();
        let mut out = v.clone();
        for y in 0..m.y_cells() {
            for z in &mut out.values[y * nt + r.min(nt)..(y + 1) * nt] {
                *z = C64::new(0.0, 0.0);
            }
        }
        out
    }

    /// `E_a v = V_a V_a* v`.
    pub fn range_proj(&self, a: &LatticePoint, v: &GridVector) -> Result<GridVector> {
        let w = self.apply_vstar(a, v)?;
        self.apply_v(a, &w)
    }

    pub fn in_kernel(&self, a: &LatticePoint, v: &GridVector) -> bool {
        self.ker_proj(a, v) == *v
    }

    /// `‖E_{n·a0} 1‖ / ‖1‖` for `n = 0..=n_max`, with `1` the all-ones
    /// window vector.
    pub fn purity_report(&self, a0: &LatticePoint, n_max: usize) -> Result<Vec<f64>> {
        if !self.model.cone().in_interior(a0)? {
            return Err(Error::NotInCone(format!("{a0} is not interior")));
        }
        let mut ones = self.model.zeros();
        ones.values.iter_mut().for_each(|z| *z = C64::new(1.0, 0.0));
        let base = ones.norm();
        (0..=n_max)
            .map(|n| {
                let a = a0.scale(n as i64);
                let r = self.model.t_shift(&a) as usize;
                if r >= self.model.n_t() {
                    return Ok(0.0);
                }
                Ok(self.range_proj(&a, &ones)?.norm() / base)
            })
            .collect()
    }

    /// Dense matrix of `V_a` on the window (debug cross-checks only).
    pub fn dense_v(&self, a: &LatticePoint) -> Result<DMatrix<C64>> {
        let m = &*self.model;
        let n = m.len();
        if n > DENSE_LIMIT {
            return Err(Error::InvalidModel(format!(
                "dense matrices need at most {DENSE_LIMIT} cells, window has {n}"
            )));
        }
        let mut mat = DMatrix::zeros(n, n);
        for cell in 0..n {
            if let Some(target) = m.act(cell, a)? {
                mat[(target, cell)] = C64::new(1.0, 0.0);
            }
        }
        Ok(mat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pspace::ModelSpec;
    use num_rational::Rational64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lp(v: &[i64]) -> LatticePoint {
        LatticePoint(v.to_vec())
    }

    fn small_c1() -> ShiftRep {
        ShiftRep::new(PSpaceModel::new(ModelSpec::c1(4, Rational64::new(1, 4), 24)).unwrap())
    }

    fn random_low(rep: &ShiftRep, rows: usize, seed: u64) -> GridVector {
        let m = rep.model();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = m.zeros();
        for y in 0..m.y_cells() {
            for t in 0..rows {
                v.values[m.index(y, t)] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        v
    }

    #[test]
    fn point_mass_moves_to_action() {
        let rep = small_c1();
        let m = rep.model();
        let mut v = m.zeros();
        let cell = m.index(m.y_flat(&[1, 2]), 3);
        v.values[cell] = C64::new(1.0, 0.0);
        let a = lp(&[1, 2, 0]);
        let out = rep.apply_v(&a, &v).unwrap();
        let target = m.act(cell, &a).unwrap().unwrap();
        assert_eq!(out.values[target], C64::new(1.0, 0.0));
        assert!((out.norm_sqr() - v.norm_sqr()).abs() < 1e-15);
        assert_eq!(rep.apply_v(&lp(&[0, 0, 0]), &v).unwrap(), v);
    }

    #[test]
    fn shifted_strip_is_orthogonal_to_first_strip() {
        let rep = ShiftRep::new(PSpaceModel::c1_default());
        let m = rep.model();
        let s = m.strip_indicator(&lp(&[8, 8, 8]));
        let a = lp(&[8, 0, 0]);
        let moved = rep.apply_v(&a, &s).unwrap();
        assert_eq!(moved.inner(&m.strip_indicator(&a)), C64::new(0.0, 0.0));
    }

    #[test]
    fn vstar_examples() {
        let rep = small_c1();
        let a = lp(&[1, 0, 2]);
        let v = random_low(&rep, 5, 3);
        let back = rep.apply_vstar(&a, &rep.apply_v(&a, &v).unwrap()).unwrap();
        assert_eq!(back, v);
        let strip = rep.model().strip_indicator(&a);
        assert!(rep.apply_vstar(&a, &strip).unwrap().is_zero());

        let c2 = ShiftRep::new(
            PSpaceModel::new(ModelSpec::c2(Rational64::from_integer(2), Rational64::new(1, 4), 8)).unwrap(),
        );
        let m = c2.model();
        let two = m.strip_indicator(&lp(&[0, 2]));
        let one = m.strip_indicator(&lp(&[0, 1]));
        assert_eq!(c2.apply_vstar(&lp(&[0, 1]), &two).unwrap(), one);
    }

    #[test]
    fn ker_proj_examples() {
        let rep = small_c1();
        let a = lp(&[1, 1, 1]);
        let strip = rep.model().strip_indicator(&a);
        assert_eq!(rep.ker_proj(&a, &strip), strip);
        let w = random_low(&rep, 6, 9);
        assert!(rep.ker_proj(&a, &rep.apply_v(&a, &w).unwrap()).is_zero());
        let v = random_low(&rep, 10, 4);
        let p = rep.ker_proj(&a, &v);
        assert_eq!(rep.ker_proj(&a, &p), p);
        // agrees with 1 − V V* on guard-respecting vectors
        let e = rep.range_proj(&a, &v).unwrap();
        assert!((&(&v - &e) - &p).max_abs() < 1e-15);
    }

    #[test]
    fn guard_violation_reported() {
        let rep = small_c1();
        let m = rep.model();
        let mut v = m.zeros();
        v.values[m.index(0, m.n_t() - 1)] = C64::new(1.0, 0.0);
        assert!(matches!(rep.apply_v(&lp(&[0, 0, 1]), &v), Err(Error::GuardViolation(_))));
    }

    #[test]
    fn purity_sequence_reaches_zero() {
        // C1 with a0 = (1,1,1): r = 3 per step; 30 units of t-window.
        let rep = ShiftRep::new(PSpaceModel::new(ModelSpec::c1(4, Rational64::new(1, 4), 120)).unwrap());
        let a0 = lp(&[4, 4, 4]);
        let seq = rep.purity_report(&a0, 12).unwrap();
        assert_eq!(seq[0], 1.0);
        for w in seq.windows(2) {
            assert!(w[1] <= w[0]);
        }
        // 3n ≥ n_t·h = 30 first at n = 10
        assert!(seq[9] > 0.0);
        assert_eq!(seq[10], 0.0);
        // oracle: remaining fraction sqrt((n_t − 12 n)/n_t)
        for (n, x) in seq.iter().enumerate().take(10) {
            let expect = ((120.0 - 12.0 * n as f64) / 120.0).sqrt();
            assert!((x - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_matches_index_maps() {
        let rep = small_c1();
        let a = lp(&[1, 0, 1]);
        let mat = rep.dense_v(&a).unwrap();
        let v = random_low(&rep, 8, 11);
        let x = nalgebra::DVector::from_column_slice(&v.values);
        let dense = &mat * &x;
        let fast = rep.apply_v(&a, &v).unwrap();
        for (p, q) in dense.iter().zip(&fast.values) {
            assert!((p - q).norm() < 1e-15);
        }
        let dstar = mat.adjoint() * &x;
        let fstar = rep.apply_vstar(&a, &v).unwrap();
        for (p, q) in dstar.iter().zip(&fstar.values) {
            assert!((p - q).norm() < 1e-15);
        }
        let dker = &x - &mat * (mat.adjoint() * &x);
        let fker = rep.ker_proj(&a, &v);
        for (p, q) in dker.iter().zip(&fker.values) {
            assert!((p - q).norm() < 1e-15);
        }
    }
}
