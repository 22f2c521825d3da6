//! The e-logarithm relative to a unit-norm section `f_a = λ_a e(ξ_a)`:
//! `L(a, λe(ξ), μe(η)) = ⟨ξ − ξ_a | η − ξ_a⟩`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{exp_vector_inner, ExpVector, ProductSystemModel};
use crate::cocycle::CoherentSection;
use crate::cone::{LatticePoint, LatticeSample};
use crate::error::{Error, Result};
use crate::grid::GridVector;
use crate::shift::ShiftRep;

/// Unit vectors `f_a = e^{−‖ξ_a‖²/2} e(ξ_a)` built from a coherent section.
#[derive(Clone, Debug)]
pub struct LeftCoherentSection {
    pub section: CoherentSection,
}

impl LeftCoherentSection {
    pub fn new(section: CoherentSection) -> Self {
        LeftCoherentSection { section }
    }

    /// Checks coherence of the underlying test functions on the sample.
    pub fn checked(rep: &ShiftRep, section: CoherentSection, sample: &LatticeSample, tol: f64) -> Result<Self> {
        let res = section.coherence_residual(rep, &sample.pairs())?;
        if res > tol {
            return Err(Error::Coherence(res));
        }
        Ok(LeftCoherentSection { section })
    }

    pub fn xi(&self, rep: &ShiftRep, a: &LatticePoint) -> Result<GridVector> {
        self.section.eval(rep, a)
    }

    pub fn member(&self, rep: &ShiftRep, a: &LatticePoint) -> Result<ExpVector> {
        let xi = self.xi(rep, a)?;
        let scalar = C64::new((-xi.norm_sqr() / 2.0).exp(), 0.0);
        Ok(ExpVector { grade: a.clone(), scalar, xi })
    }
}

pub fn elog(rep: &ShiftRep, f: &LeftCoherentSection, a: &LatticePoint, u: &ExpVector, v: &ExpVector) -> Result<C64> {
    if u.grade != *a || v.grade != *a {
        return Err(Error::GradeMismatch);
    }
    let xa = f.xi(rep, a)?;
    Ok((&u.xi - &xa).inner(&(&v.xi - &xa)))
}

/// `|exp L − ⟨u|v⟩ / (⟨u|f_a⟩⟨f_a|v⟩)|`.
pub fn elog_ratio_residual(
    rep: &ShiftRep,
    f: &LeftCoherentSection,
    a: &LatticePoint,
    u: &ExpVector,
    v: &ExpVector,
) -> Result<f64> {
    let fa = f.member(rep, a)?;
    let ratio = exp_vector_inner(u, v)? / (exp_vector_inner(u, &fa)? * exp_vector_inner(&fa, v)?);
    Ok((elog(rep, f, a, u, v)?.exp() - ratio).norm())
}

/// Smallest eigenvalue of the Hermitian matrix `[L(a, uᵢ, uⱼ)]`.
pub fn elog_gram_min_eigenvalue(
    rep: &ShiftRep,
    f: &LeftCoherentSection,
    a: &LatticePoint,
    us: &[ExpVector],
) -> Result<f64> {
    let n = us.len();
    if n == 0 {
        return Ok(0.0);
    }
    let mut g = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            // row i, column j holds L(uⱼ, uᵢ) so the matrix is B*B-shaped
            g[(i, j)] = elog(rep, f, a, &us[j], &us[i])?;
        }
    }
    let eig = g.symmetric_eigenvalues();
    Ok(eig.iter().copied().fold(f64::INFINITY, f64::min))
}

/// `ξ(a, a+b) = V_a*(ξ_{a+b} − ξ_a) − Γ(a,b)`, the solution of
/// `ξ_{a+b} = ξ_a + V_a(Γ(a,b) + ξ(a,a+b))`.
pub fn xi_between(
    ps: &ProductSystemModel,
    f: &LeftCoherentSection,
    a: &LatticePoint,
    b: &LatticePoint,
) -> Result<GridVector> {
    let rep = &ps.rep;
    let diff = &f.xi(rep, &(a + b))? - &f.xi(rep, a)?;
    let mut out = rep.apply_vstar(a, &diff)?;
    out -= &ps.gamma.eval(rep, a, b)?;
    Ok(out)
}

/// `ψ_a(b, μe(η)) = ⟨η − ξ_b | ξ_b − ξ(a,a+b)⟩ + ‖ξ_b − ξ(a,a+b)‖²/2`.
pub fn psi(
    ps: &ProductSystemModel,
    f: &LeftCoherentSection,
    a: &LatticePoint,
    b: &LatticePoint,
    v: &ExpVector,
) -> Result<C64> {
    let xb = f.xi(&ps.rep, b)?;
    let d = &xb - &xi_between(ps, f, a, b)?;
    Ok((&v.xi - &xb).inner(&d) + C64::new(d.norm_sqr() / 2.0, 0.0))
}

/// `|L(a+b, u₁v₁, u₂v₂) − L(a,u₁,u₂) − L(b,v₁,v₂) − ψ_a(b,v₁) − conj ψ_a(b,v₂)|`.
pub fn elog_factorization_check(
    ps: &ProductSystemModel,
    f: &LeftCoherentSection,
    u: (&ExpVector, &ExpVector),
    v: (&ExpVector, &ExpVector),
) -> Result<f64> {
    let rep = &ps.rep;
    let a = &u.0.grade;
    let b = &v.0.grade;
    if u.1.grade != *a || v.1.grade != *b {
        return Err(Error::GradeMismatch);
    }
    let p1 = ps.product(u.0, v.0)?;
    let p2 = ps.product(u.1, v.1)?;
    let lhs = elog(rep, f, &(a + b), &p1, &p2)?;
    let rhs = elog(rep, f, a, u.0, u.1)?
        + elog(rep, f, b, v.0, v.1)?
        + psi(ps, f, a, b, v.0)?
        + psi(ps, f, a, b, v.1)?.conj();
    Ok((lhs - rhs).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admissibility::{verify_multiplier, w_seed};
    use crate::cocycle::{fourier_mode, make_w};
    use crate::cone::sample_triples;
    use crate::fock::random_exp_vector_guarded;
    use crate::pspace::{ModelSpec, PSpaceModel};
    use num_rational::Rational64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lp(v: &[i64]) -> LatticePoint {
        LatticePoint(v.to_vec())
    }

    const GUARD: usize = 8;

    fn c2() -> ShiftRep {
        ShiftRep::new(PSpaceModel::new(ModelSpec::c2(Rational64::from_integer(4), Rational64::new(1, 4), 24)).unwrap())
    }

    fn section(rep: &ShiftRep, seed: u64) -> LeftCoherentSection {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let top = LatticePoint(vec![0, rep.model().n_t() as i64]);
        LeftCoherentSection::new(CoherentSection::from_vector(
            random_exp_vector_guarded(rep, &top, 0.2, GUARD, &mut rng).xi,
        ))
    }

    #[test]
    fn elog_basics() {
        let rep = c2();
        let f = section(&rep, 1);
        let a = lp(&[1, 3]);
        let fa = f.member(&rep, &a).unwrap();
        assert!((fa.norm_sqr() - 1.0).abs() < 1e-12);
        assert_eq!(elog(&rep, &f, &a, &fa, &fa).unwrap(), C64::new(0.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let us: Vec<_> = (0..10).map(|_| random_exp_vector_guarded(&rep, &a, 0.2, GUARD, &mut rng)).collect();
        for u in &us {
            for v in &us {
                assert!(elog_ratio_residual(&rep, &f, &a, u, v).unwrap() < 1e-12);
            }
        }
        assert!(elog_gram_min_eigenvalue(&rep, &f, &a, &us).unwrap() >= -1e-10);
    }

    #[test]
    fn factorization_untwisted_and_twisted() {
        let rep = c2();
        let m = rep.model();
        let f = section(&rep, 3);
        let g = fourier_mode(m, &[1], GUARD).unwrap();
        let w = make_w(m, "fourier", g.clone(), &[], f64::INFINITY).unwrap();
        let sample = crate::cone::LatticeSample::new(m.cone(), m.step(), 3).unwrap();
        let cases = [(lp(&[1, 2]), lp(&[2, 1])), (lp(&[0, 3]), lp(&[1, 1]))];
        let mut pairs = sample.pairs();
        pairs.extend(cases.iter().cloned());
        let beta = w_seed(&rep, &g, &pairs);
        let triples = sample_triples(&sample, 100, 1).unwrap();
        assert!(verify_multiplier(&rep, &beta, &w, &triples, 1e-10).unwrap().pass);
        let twisted = ProductSystemModel::new(rep.clone(), w, beta);
        let ccr = ProductSystemModel::ccr(rep.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for (a, b) in cases {
            let u1 = random_exp_vector_guarded(&rep, &a, 0.2, GUARD, &mut rng);
            let u2 = random_exp_vector_guarded(&rep, &a, 0.2, GUARD, &mut rng);
            let v1 = random_exp_vector_guarded(&rep, &b, 0.2, GUARD, &mut rng);
            let v2 = random_exp_vector_guarded(&rep, &b, 0.2, GUARD, &mut rng);
            for ps in [&ccr, &twisted] {
                assert!(elog_factorization_check(ps, &f, (&u1, &u2), (&v1, &v2)).unwrap() < 1e-10);
                let fa = f.member(&rep, &a).unwrap();
                let fb = f.member(&rep, &b).unwrap();
                assert!(elog_factorization_check(ps, &f, (&fa, &fa), (&fb, &fb)).unwrap() < 1e-12);
            }
        }
    }
}
