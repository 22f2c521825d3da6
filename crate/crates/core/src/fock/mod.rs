//! Exponential vectors in symmetric Fock space, Weyl operators, and the
//! twisted product `e(ξ)·e(η) = α(a,b) e(ξ) ⊙ W(Γ(a,b)) e(η)`.
//!
//! Everything is kept in closed form `λ·e(ξ)`; inner products follow the
//! Gram rule `⟨λe(ξ)|μe(η)⟩ = λ·conj(μ)·exp⟨ξ|η⟩`.

pub mod elog;
pub mod gns;
pub mod iso;

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::admissibility::{verify_multiplier, MultiplierReport, PhaseCochain};
use crate::cocycle::TwoCocycle;
use crate::cone::{LatticePoint, Triple};
use crate::error::{Error, Result};
use crate::grid::GridVector;
use crate::shift::ShiftRep;

/// `λ·e(ξ)` at grade `a`, with `ξ ∈ Ker(V_a*)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpVector {
    pub grade: LatticePoint,
    pub scalar: C64,
    pub xi: GridVector,
}

impl ExpVector {
    pub fn new(rep: &ShiftRep, grade: LatticePoint, scalar: C64, xi: GridVector) -> Result<Self> {
        rep.model().check_in_cone(&grade)?;
        if scalar == C64::new(0.0, 0.0) {
            return Err(Error::Malformed("exponential vector with zero scalar".into()));
        }
        if !rep.in_kernel(&grade, &xi) {
            return Err(Error::GuardViolation(format!("test function is not supported on the strip of {grade}")));
        }
        Ok(ExpVector { grade, scalar, xi })
    }

    /// `e(0)` at grade `a`.
    pub fn vacuum(rep: &ShiftRep, grade: LatticePoint) -> Self {
        ExpVector { grade, scalar: C64::new(1.0, 0.0), xi: rep.zeros() }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.scalar.norm_sqr() * self.xi.norm_sqr().exp()
    }
}

fn exp_pair(u: &ExpVector, v: &ExpVector) -> C64 {
    u.scalar * v.scalar.conj() * u.xi.inner(&v.xi).exp()
}

/// A finite combination of exponential vectors of one grade.
#[derive(Clone, Debug, PartialEq)]
pub struct PSElement {
    pub grade: LatticePoint,
    pub terms: Vec<ExpVector>,
}

impl PSElement {
    pub fn new(grade: LatticePoint, terms: Vec<ExpVector>) -> Result<Self> {
        if terms.iter().any(|t| t.grade != grade) {
            return Err(Error::GradeMismatch);
        }
        Ok(PSElement { grade, terms })
    }

    pub fn scale(&self, c: C64) -> PSElement {
        PSElement {
            grade: self.grade.clone(),
            terms: self.terms.iter().map(|t| ExpVector { scalar: t.scalar * c, ..t.clone() }).collect(),
        }
    }
}

impl From<ExpVector> for PSElement {
    fn from(v: ExpVector) -> Self {
        PSElement { grade: v.grade.clone(), terms: vec![v] }
    }
}

/// Sesquilinear extension of the Gram rule, linear in the first slot.
pub fn exp_inner(u: &PSElement, v: &PSElement) -> Result<C64> {
    if u.grade != v.grade {
        return Err(Error::GradeMismatch);
    }
    Ok(u.terms.iter().flat_map(|x| v.terms.iter().map(move |y| exp_pair(x, y))).sum())
}

pub fn exp_vector_inner(u: &ExpVector, v: &ExpVector) -> Result<C64> {
    if u.grade != v.grade {
        return Err(Error::GradeMismatch);
    }
    Ok(exp_pair(u, v))
}

/// Phase convention of the Weyl operators. `Standard` gives
/// `W(ζ)e(η) = exp(−‖ζ‖²/2 − ⟨η|ζ⟩) e(η+ζ)`; `Swapped` uses `⟨ζ|η⟩` in the
/// exponent instead and is kept only so the associativity check can tell
/// the two apart.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum WeylConvention {
    #[default]
    Standard,
    Swapped,
}

impl WeylConvention {
    pub fn name(self) -> &'static str {
        match self {
            WeylConvention::Standard => "standard",
            WeylConvention::Swapped => "swapped",
        }
    }
}

pub fn weyl_exp(zeta: &GridVector, u: &ExpVector, conv: WeylConvention) -> ExpVector {
    let cross = match conv {
        WeylConvention::Standard => u.xi.inner(zeta),
        WeylConvention::Swapped => zeta.inner(&u.xi),
    };
    let factor = (C64::new(-zeta.norm_sqr() / 2.0, 0.0) - cross).exp();
    ExpVector { grade: u.grade.clone(), scalar: u.scalar * factor, xi: &u.xi + zeta }
}

pub fn weyl_apply(zeta: &GridVector, u: &PSElement, conv: WeylConvention) -> PSElement {
    PSElement { grade: u.grade.clone(), terms: u.terms.iter().map(|t| weyl_exp(zeta, t, conv)).collect() }
}

/// The phase `c` in `W(ζ₁)W(ζ₂) = c·W(ζ₁+ζ₂)`.
pub fn weyl_phase(z1: &GridVector, z2: &GridVector, conv: WeylConvention) -> C64 {
    let im = z1.inner(z2).im;
    match conv {
        WeylConvention::Standard => C64::from_polar(1.0, im),
        WeylConvention::Swapped => C64::from_polar(1.0, -im),
    }
}

/// `λe(ξ) ⊙ μe(η) = λμ·e(ξ + V_aη)`.
pub fn ccr_product(rep: &ShiftRep, u: &ExpVector, v: &ExpVector) -> Result<ExpVector> {
    let moved = rep.apply_v(&u.grade, &v.xi)?;
    Ok(ExpVector { grade: &u.grade + &v.grade, scalar: u.scalar * v.scalar, xi: &u.xi + &moved })
}

/// The triple `(α, Γ, V)` defining a twisted product system.
#[derive(Clone, Debug)]
pub struct ProductSystemModel {
    pub rep: ShiftRep,
    pub gamma: TwoCocycle,
    pub alpha: PhaseCochain,
    pub convention: WeylConvention,
}

impl ProductSystemModel {
    pub fn new(rep: ShiftRep, gamma: TwoCocycle, alpha: PhaseCochain) -> Self {
        ProductSystemModel { rep, gamma, alpha, convention: WeylConvention::Standard }
    }

    /// The untwisted system `Γ = 0`, `α = 1`.
    pub fn ccr(rep: ShiftRep) -> Self {
        ProductSystemModel::new(rep, TwoCocycle::zero(), PhaseCochain::zero())
    }

    pub fn with_convention(mut self, conv: WeylConvention) -> Self {
        self.convention = conv;
        self
    }

    /// The associativity precondition: `α` satisfies the admissibility
    /// relation for `Γ` on the triples.
    pub fn validate(&self, triples: &[Triple], tol: f64) -> Result<MultiplierReport> {
        verify_multiplier(&self.rep, &self.alpha, &self.gamma, triples, tol)
    }

    pub fn product(&self, u: &ExpVector, v: &ExpVector) -> Result<ExpVector> {
        let g = self.gamma.eval(&self.rep, &u.grade, &v.grade)?;
        let twisted = weyl_exp(&g, v, self.convention);
        let mut out = ccr_product(&self.rep, u, &twisted)?;
        out.scalar *= self.alpha.alpha(&u.grade, &v.grade)?;
        Ok(out)
    }
}

/// Bilinear extension of [`ProductSystemModel::product`].
pub fn twisted_product(ps: &ProductSystemModel, u: &PSElement, v: &PSElement) -> Result<PSElement> {
    let mut terms = Vec::with_capacity(u.terms.len() * v.terms.len());
    for x in &u.terms {
        for y in &v.terms {
            terms.push(ps.product(x, y)?);
        }
    }
    Ok(PSElement { grade: &u.grade + &v.grade, terms })
}

/// `⟨(u·v)·w | u·(v·w)⟩ / ‖u·(v·w)‖²`; equal to 1 exactly when the product
/// is associative on these vectors.
pub fn assoc_defect(ps: &ProductSystemModel, u: &ExpVector, v: &ExpVector, w: &ExpVector) -> Result<C64> {
    let left = ps.product(&ps.product(u, v)?, w)?;
    let right = ps.product(u, &ps.product(v, w)?)?;
    let num = exp_vector_inner(&left, &right)?;
    Ok(num / right.norm_sqr())
}

/// Random `λ·e(ξ)` at grade `a`: `ξ` has independent entries in
/// `[−amp, amp] + i[−amp, amp]` on the strip, `λ` is a random phase.
pub fn random_exp_vector<R: Rng>(rep: &ShiftRep, grade: &LatticePoint, amp: f64, rng: &mut R) -> ExpVector {
    random_exp_vector_guarded(rep, grade, amp, 0, rng)
}

/// As [`random_exp_vector`], with `ξ` zero within `guard` cells of any window
/// edge so that shifts along the window stay inside it.
pub fn random_exp_vector_guarded<R: Rng>(
    rep: &ShiftRep,
    grade: &LatticePoint,
    amp: f64,
    guard: usize,
    rng: &mut R,
) -> ExpVector {
    let mut v = random_unguarded(rep, grade, amp, rng);
    let m = rep.model();
    if guard > 0 {
        for y in 0..m.y_cells() {
            let near_edge = m
                .y_multi(y)
                .iter()
                .zip(m.axes())
                .any(|(&j, ax)| ax.kind == crate::pspace::AxisKind::Window && (j < guard || j + guard >= ax.cells));
            if near_edge {
                for t in 0..m.n_t() {
                    v.xi.values[m.index(y, t)] = C64::new(0.0, 0.0);
                }
            }
        }
    }
    v
}

fn random_unguarded<R: Rng>(rep: &ShiftRep, grade: &LatticePoint, amp: f64, rng: &mut R) -> ExpVector {
    let m = rep.model();
    let rows = (m.t_shift(grade).max(0) as usize).min(m.n_t());
    let mut xi = m.zeros();
    for y in 0..m.y_cells() {
        for t in 0..rows {
            xi.values[m.index(y, t)] = C64::new(rng.gen_range(-amp..=amp), rng.gen_range(-amp..=amp));
        }
    }
    let scalar = C64::from_polar(1.0, rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI));
    ExpVector { grade: grade.clone(), scalar, xi }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::make_u;
    use crate::pspace::{ModelSpec, PSpaceModel};
    use num_rational::Rational64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lp(v: &[i64]) -> LatticePoint {
        LatticePoint(v.to_vec())
    }

    fn c1() -> ShiftRep {
        ShiftRep::new(PSpaceModel::new(ModelSpec::c1(4, Rational64::new(1, 4), 48)).unwrap())
    }

    #[test]
    fn gram_rule_examples() {
        let rep = c1();
        let a = lp(&[1, 1, 1]);
        let vac: PSElement = ExpVector::vacuum(&rep, a.clone()).into();
        assert_eq!(exp_inner(&vac, &vac).unwrap(), C64::new(1.0, 0.0));
        // two cells with ⟨ξ|η⟩ = ln 2
        let m = rep.model();
        let w = m.cell_weight();
        let mut xi = m.zeros();
        let mut eta = m.zeros();
        xi.values[m.index(0, 0)] = C64::new((2f64.ln() / w).sqrt(), 0.0);
        eta.values[m.index(0, 0)] = C64::new((2f64.ln() / w).sqrt(), 0.0);
        xi.values[m.index(1, 0)] = C64::new(1.0, 0.0);
        eta.values[m.index(2, 0)] = C64::new(1.0, 0.0);
        let u = ExpVector::new(&rep, a.clone(), C64::new(1.0, 0.0), xi).unwrap();
        let v = ExpVector::new(&rep, a.clone(), C64::new(1.0, 0.0), eta).unwrap();
        assert!((exp_vector_inner(&u, &v).unwrap() - C64::new(2.0, 0.0)).norm() < 1e-12);
        assert!(exp_vector_inner(&u, &u).unwrap().re >= 1.0);
        let other: PSElement = ExpVector::vacuum(&rep, lp(&[1, 0, 0])).into();
        assert_eq!(exp_inner(&vac, &other), Err(Error::GradeMismatch));
    }

    #[test]
    fn weyl_examples() {
        let rep = c1();
        let m = rep.model();
        let a = lp(&[1, 1, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_exp_vector(&rep, &a, 0.4, &mut rng);
        assert_eq!(weyl_exp(&m.zeros(), &u, WeylConvention::Standard), u);
        let mut zeta = m.zeros();
        zeta.values[m.index(0, 0)] = C64::new(0.0, (1.0 / m.cell_weight()).sqrt());
        let moved = weyl_exp(&zeta, &ExpVector::vacuum(&rep, a.clone()), WeylConvention::Standard);
        assert!((moved.scalar - C64::new((-0.5f64).exp(), 0.0)).norm() < 1e-15);

        let z = random_exp_vector(&rep, &a, 0.4, &mut rng).xi;
        let v = random_exp_vector(&rep, &a, 0.4, &mut rng);
        let before = exp_vector_inner(&u, &v).unwrap();
        let std = WeylConvention::Standard;
        let after = exp_vector_inner(&weyl_exp(&z, &u, std), &weyl_exp(&z, &v, std)).unwrap();
        assert!((before - after).norm() < 1e-12 * before.norm());
        let sw = WeylConvention::Swapped;
        let skew = exp_vector_inner(&weyl_exp(&z, &u, sw), &weyl_exp(&z, &v, sw)).unwrap();
        assert!((before - skew).norm() > 1e-3 * before.norm());
    }

    #[test]
    fn weyl_relation() {
        let rep = c1();
        let a = lp(&[2, 1, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_exp_vector(&rep, &a, 0.3, &mut rng);
        let z1 = random_exp_vector(&rep, &a, 0.3, &mut rng).xi;
        let z2 = random_exp_vector(&rep, &a, 0.3, &mut rng).xi;
        for conv in [WeylConvention::Standard, WeylConvention::Swapped] {
            let lhs = weyl_exp(&z1, &weyl_exp(&z2, &u, conv), conv);
            let rhs = weyl_exp(&(&z1 + &z2), &u, conv);
            assert!((&lhs.xi - &rhs.xi).max_abs() < 1e-15);
            let phase = weyl_phase(&z1, &z2, conv);
            assert!((lhs.scalar - phase * rhs.scalar).norm() < 1e-12 * lhs.scalar.norm());
        }
    }

    #[test]
    fn ccr_product_properties() {
        let rep = c1();
        let (a, b, c) = (lp(&[1, 0, 1]), lp(&[0, 2, 0]), lp(&[1, 1, 0]));
        let v0 = ccr_product(&rep, &ExpVector::vacuum(&rep, a.clone()), &ExpVector::vacuum(&rep, b.clone())).unwrap();
        assert_eq!(v0, ExpVector::vacuum(&rep, &a + &b));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_exp_vector(&rep, &a, 0.3, &mut rng);
        let v = random_exp_vector(&rep, &b, 0.3, &mut rng);
        let w = random_exp_vector(&rep, &c, 0.3, &mut rng);
        let uv = ccr_product(&rep, &u, &v).unwrap();
        assert!((uv.norm_sqr() - u.norm_sqr() * v.norm_sqr()).abs() < 1e-12 * uv.norm_sqr());
        let l = ccr_product(&rep, &uv, &w).unwrap();
        let r = ccr_product(&rep, &u, &ccr_product(&rep, &v, &w).unwrap()).unwrap();
        assert!((&l.xi - &r.xi).max_abs() < 1e-12 && (l.scalar - r.scalar).norm() < 1e-12);
    }

    #[test]
    fn twisted_product_pairing_law() {
        let rep = c1();
        let u_cocycle = make_u(rep.model(), &[1.0, 0.0, -1.0], &[0.0, 1.0, -1.0]).unwrap();
        let ps = ProductSystemModel::new(rep.clone(), u_cocycle, PhaseCochain::zero());
        let (a, b) = (lp(&[1, 2, 0]), lp(&[0, 1, 1]));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u1 = random_exp_vector(&rep, &a, 0.3, &mut rng);
        let u2 = random_exp_vector(&rep, &a, 0.3, &mut rng);
        let v1 = random_exp_vector(&rep, &b, 0.3, &mut rng);
        let v2 = random_exp_vector(&rep, &b, 0.3, &mut rng);
        let lhs = exp_vector_inner(&ps.product(&u1, &v1).unwrap(), &ps.product(&u2, &v2).unwrap()).unwrap();
        let rhs = exp_vector_inner(&u1, &u2).unwrap() * exp_vector_inner(&v1, &v2).unwrap();
        assert!((lhs - rhs).norm() < 1e-10 * rhs.norm());

        let x = PSElement::new(a.clone(), vec![u1.clone(), u2.clone()]).unwrap();
        let y: PSElement = v1.clone().into();
        let xy = twisted_product(&ps, &x, &y).unwrap();
        assert_eq!(xy.terms.len(), 2);
        let expect = exp_inner(&x, &x).unwrap() * exp_inner(&y, &y).unwrap();
        assert!((exp_inner(&xy, &xy).unwrap() - expect).norm() < 1e-10 * expect.norm());

        let ccr = ProductSystemModel::ccr(rep.clone());
        assert_eq!(ccr.product(&u1, &v1).unwrap(), ccr_product(&rep, &u1, &v1).unwrap());
    }

    #[test]
    fn associativity_selects_convention() {
        let rep = ShiftRep::new(PSpaceModel::c1_default());
        let u_cocycle = make_u(rep.model(), &[1.0, 0.0, -1.0], &[0.0, 1.0, -1.0]).unwrap();
        let (a, b, c) = (lp(&[8, 0, 0]), lp(&[0, 8, 0]), lp(&[0, 0, 8]));
        let ps = ProductSystemModel::new(rep.clone(), u_cocycle, PhaseCochain::zero());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_exp_vector(&rep, &a, 0.3, &mut rng);
        let v = random_exp_vector(&rep, &b, 0.3, &mut rng);
        let w = random_exp_vector(&rep, &c, 0.3, &mut rng);
        // α ≡ 1: defect is e^{−iT} with T = −1
        let d = assoc_defect(&ps, &u, &v, &w).unwrap();
        assert!((d - C64::from_polar(1.0, 1.0)).norm() < 1e-10, "{d}");
        let ccr = ProductSystemModel::ccr(rep.clone());
        assert!((assoc_defect(&ccr, &u, &v, &w).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-12);
    }
}
