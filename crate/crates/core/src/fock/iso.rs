//! Isomorphism criteria between twisted product systems on the same model.

use std::collections::HashMap;

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{random_exp_vector, ProductSystemModel};
use crate::admissibility::PhaseCochain;
use crate::cocycle::{solve_coboundary, CoboundarySolution, CoherentSection, SolveOptions, SolveStatus, TwoCocycle};
use crate::cone::{LatticePoint, LatticeSample};
use crate::error::{Error, Result};
use crate::grid::GridVector;
use crate::pspace::AxisKind;
use crate::shift::ShiftRep;

type Pair = (LatticePoint, LatticePoint);

/// A unitary on the grid given by a cell map and phases.
#[derive(Clone, Debug, PartialEq)]
pub enum UnitarySpec {
    Identity,
    /// `(Uv)(y, t) = e^{iθ} v(y − s, t)` for a shift `s` in cells along
    /// compact `y`-axes.
    YTranslation {
        cells: Vec<i64>,
        phase: f64,
    },
    /// `(Uv)[perm[i]] = phases[i] · v[i]`.
    Table {
        perm: Vec<usize>,
        phases: Vec<C64>,
    },
}

/// Cell map and phases of a validated unitary.
#[derive(Clone, Debug)]
pub struct GridUnitary {
    target: Vec<usize>,
    phases: Vec<C64>,
}

impl GridUnitary {
    pub fn new(rep: &ShiftRep, spec: &UnitarySpec) -> Result<Self> {
        let m = rep.model();
        let n = m.len();
        match spec {
            UnitarySpec::Identity => Ok(GridUnitary { target: (0..n).collect(), phases: vec![C64::new(1.0, 0.0); n] }),
            UnitarySpec::YTranslation { cells, phase } => {
                if cells.len() != m.axes().len() {
                    return Err(Error::DimensionMismatch { expected: m.axes().len(), got: cells.len() });
                }
                for (ax, &s) in m.axes().iter().zip(cells) {
                    if s != 0 && ax.kind == AxisKind::Window {
                        return Err(Error::NotUnitary(f64::INFINITY));
                    }
                }
                let nt = m.n_t();
                let mut target = vec![0; n];
                for y in 0..m.y_cells() {
                    let multi = m.y_multi(y);
                    let moved: Vec<usize> = multi
                        .iter()
                        .zip(cells)
                        .zip(m.axes())
                        .map(|((&j, &s), ax)| (j as i64 + s).rem_euclid(ax.cells as i64) as usize)
                        .collect();
                    let y2 = m.y_flat(&moved);
                    for t in 0..nt {
                        target[y * nt + t] = y2 * nt + t;
                    }
                }
                Ok(GridUnitary { target, phases: vec![C64::from_polar(1.0, *phase); n] })
            }
            UnitarySpec::Table { perm, phases } => {
                if perm.len() != n || phases.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: perm.len().min(phases.len()) });
                }
                let mut seen = vec![false; n];
                for &p in perm {
                    if p >= n || seen[p] {
                        return Err(Error::NotUnitary(1.0));
                    }
                    seen[p] = true;
                }
                let distortion = phases.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max);
                if distortion > 1e-12 {
                    return Err(Error::NotUnitary(distortion));
                }
                Ok(GridUnitary { target: perm.clone(), phases: phases.clone() })
            }
        }
    }

    pub fn apply(&self, v: &GridVector) -> GridVector {
        let mut out = v.zeros_like();
        for (i, z) in v.values.iter().enumerate() {
            out.values[self.target[i]] = self.phases[i] * z;
        }
        out
    }

    pub fn apply_adjoint(&self, v: &GridVector) -> GridVector {
        let mut out = v.zeros_like();
        for i in 0..v.len() {
            out.values[i] = self.phases[i].conj() * v.values[self.target[i]];
        }
        out
    }
}

/// `Γ₂ − UΓ₁` as a two-cocycle.
pub fn cocycle_difference(g2: &TwoCocycle, g1: &TwoCocycle, u: &GridUnitary) -> TwoCocycle {
    let (g1, g2, u) = (g1.clone(), g2.clone(), u.clone());
    TwoCocycle::custom("difference", move |rep, a, b| {
        let mut v = g2.eval(rep, a, b)?;
        v -= &u.apply(&g1.eval(rep, a, b)?);
        Ok(v)
    })
}

/// Multiplier of the system `(α₂, Γ + δξ)` isomorphic to `(α₁, Γ)` through
/// `Λ_a = W(ξ_a)`:
/// `α₂ = α₁·exp(−i Im(⟨Γ(a,b)|ξ_b⟩ + ⟨ξ_{a+b}| ξ_a + V_aξ_b − V_aΓ(a,b)⟩))`.
pub fn transform_multiplier(
    rep: &ShiftRep,
    alpha: &PhaseCochain,
    gamma: &TwoCocycle,
    xi: &CoherentSection,
    pairs: &[Pair],
) -> Result<PhaseCochain> {
    let mut table = HashMap::with_capacity(pairs.len());
    for (a, b) in pairs {
        let g = gamma.eval(rep, a, b)?;
        let xb = xi.eval(rep, b)?;
        let mut inner = xi.eval(rep, a)?;
        inner += &rep.apply_v(a, &xb)?;
        inner -= &rep.apply_v(a, &g)?;
        let phase = g.inner(&xb).im + xi.eval(rep, &(a + b))?.inner(&inner).im;
        table.insert((a.clone(), b.clone()), alpha.beta(a, b)? - phase);
    }
    Ok(PhaseCochain::from_table(table))
}

#[derive(Clone, Debug)]
pub struct IsoVerdict {
    pub pass: bool,
    /// `max ‖U V⁽¹⁾_a U* v − V⁽²⁾_a v‖` on random vectors.
    pub intertwining_residual: f64,
    pub coboundary: CoboundarySolution,
    pub obstruction: Option<String>,
}

impl IsoVerdict {
    pub fn witness(&self) -> Option<&CoherentSection> {
        self.pass.then_some(&self.coboundary.section)
    }
}

fn intertwining(rep1: &ShiftRep, rep2: &ShiftRep, u: &GridUnitary, points: &[LatticePoint], seed: u64) -> Result<f64> {
    let m = rep1.model();
    if m.len() != rep2.model().len() || m.n_t() != rep2.model().n_t() {
        return Err(Error::InvalidModel("models have different grid shapes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for a in points {
        let room = m.n_t() as i64 - m.t_shift(a);
        if room <= 0 {
            continue;
        }
        let low = LatticePoint((0..m.dim()).map(|i| if i + 1 == m.dim() { room } else { 0 }).collect::<Vec<_>>());
        let v = random_exp_vector(rep2, &low, 1.0, &mut rng).xi;
        let lhs = u.apply(&rep1.apply_v(a, &u.apply_adjoint(&v))?);
        let rhs = rep2.apply_v(a, &v)?;
        worst = worst.max((&lhs - &rhs).norm());
    }
    Ok(worst)
}

/// Projective isomorphism test: `U` intertwines the shifts and `Γ₂ − UΓ₁` is
/// a coboundary on the sample.
pub fn check_projective_iso(
    ps1: &ProductSystemModel,
    ps2: &ProductSystemModel,
    spec: &UnitarySpec,
    sample: &LatticeSample,
    opts: &SolveOptions,
    seed: u64,
) -> Result<IsoVerdict> {
    let u = GridUnitary::new(&ps2.rep, spec)?;
    let intertwining_residual = intertwining(&ps1.rep, &ps2.rep, &u, &sample.points, seed)?;
    let diff = cocycle_difference(&ps2.gamma, &ps1.gamma, &u);
    let coboundary = solve_coboundary(&ps2.rep, &diff, sample, opts)?;
    let mut reasons = Vec::new();
    if intertwining_residual > 1e-10 {
        reasons.push(format!("U does not intertwine the shifts (residual {intertwining_residual:.3e})"));
    }
    if coboundary.status != SolveStatus::Feasible {
        reasons.push(format!(
            "Γ₂ − UΓ₁ is not a coboundary: {} with relative residual {:.3e}",
            coboundary.status, coboundary.residual
        ));
    }
    Ok(IsoVerdict {
        pass: reasons.is_empty(),
        intertwining_residual,
        coboundary,
        obstruction: (!reasons.is_empty()).then(|| reasons.join("; ")),
    })
}

#[derive(Clone, Debug)]
pub struct IsoConditions {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub worst_c: Option<Pair>,
    pub pass: bool,
}

/// Verifies the three isomorphism conditions for supplied witnesses: the
/// unitary, the section `ξ` and phases `λ_a = e^{iθ_a}`.
pub fn check_iso_conditions(
    ps1: &ProductSystemModel,
    ps2: &ProductSystemModel,
    spec: &UnitarySpec,
    xi: &CoherentSection,
    lambda: &HashMap<LatticePoint, f64>,
    sample: &LatticeSample,
    seed: u64,
) -> Result<IsoConditions> {
    let rep1 = &ps1.rep;
    let rep2 = &ps2.rep;
    let u = GridUnitary::new(rep2, spec)?;
    let cond_a = intertwining(rep1, rep2, &u, &sample.points, seed)?;
    let theta = |a: &LatticePoint| -> Result<f64> {
        lambda.get(a).copied().ok_or_else(|| Error::Malformed(format!("no phase witness at {a}")))
    };
    let mut cond_b: f64 = 0.0;
    let mut cond_c: f64 = 0.0;
    let mut worst_c = None;
    for (a, b) in sample.pairs() {
        let ab = &a + &b;
        let g1 = ps1.gamma.eval(rep1, &a, &b)?;
        let g2 = ps2.gamma.eval(rep2, &a, &b)?;
        let xa = xi.eval(rep2, &a)?;
        let xb = xi.eval(rep2, &b)?;
        let xab = xi.eval(rep2, &ab)?;
        let mut lhs = rep2.apply_v(&a, &(&g2 - &u.apply(&g1)))?;
        lhs -= &xab;
        lhs += &xa;
        lhs += &rep2.apply_v(&a, &xb)?;
        cond_b = cond_b.max(lhs.norm());

        let u_v_g1 = u.apply(&rep1.apply_v(&a, &g1)?);
        let phase = xab.inner(&u_v_g1).im - g2.inner(&xb).im;
        let lam = C64::from_polar(1.0, theta(&a)? + theta(&b)? - theta(&ab)?);
        let ratio = ps2.alpha.alpha(&a, &b)? * ps1.alpha.alpha(&a, &b)?.conj();
        let d = (C64::from_polar(1.0, phase) - lam * ratio).norm();
        if d > cond_c || worst_c.is_none() {
            cond_c = cond_c.max(d);
            worst_c = Some((a.clone(), b.clone()));
        }
    }
    let tol = 1e-8;
    Ok(IsoConditions {
        a: cond_a,
        b: cond_b,
        c: cond_c,
        worst_c,
        pass: cond_a <= tol && cond_b <= tol && cond_c <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::{coboundary_from, make_u};
    use crate::fock::{exp_vector_inner, weyl_exp, ExpVector, WeylConvention};
    use crate::pspace::{ModelSpec, PSpaceModel};
    use num_rational::Rational64;

    fn lp(v: &[i64]) -> LatticePoint {
        LatticePoint(v.to_vec())
    }

    fn c1() -> ShiftRep {
        ShiftRep::new(PSpaceModel::new(ModelSpec::c1(2, Rational64::new(1, 2), 12)).unwrap())
    }

    fn section(rep: &ShiftRep, seed: u64) -> CoherentSection {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let top = LatticePoint(vec![0, 0, rep.model().n_t() as i64]);
        CoherentSection::from_vector(random_exp_vector(rep, &top, 0.3, &mut rng).xi)
    }

    /// `Λ_{a+b}(Λ_a⁻¹u · Λ_b⁻¹v)` with `Λ_a = W(ξ_a)`.
    fn transported(ps: &ProductSystemModel, xi: &CoherentSection, u: &ExpVector, v: &ExpVector) -> ExpVector {
        let rep = &ps.rep;
        let std = WeylConvention::Standard;
        let xa = xi.eval(rep, &u.grade).unwrap();
        let xb = xi.eval(rep, &v.grade).unwrap();
        let xab = xi.eval(rep, &(&u.grade + &v.grade)).unwrap();
        let prod =
            ps.product(&weyl_exp(&xa.scale_real(-1.0), u, std), &weyl_exp(&xb.scale_real(-1.0), v, std)).unwrap();
        weyl_exp(&xab, &prod, std)
    }

    #[test]
    fn transformed_multiplier_matches_transport() {
        let rep = c1();
        let m = rep.model();
        let sample = LatticeSample::new(m.cone(), m.step(), 2).unwrap();
        let u1 = make_u(m, &[1.0, 0.0, -1.0], &[0.0, 1.0, -1.0]).unwrap();
        let xi = section(&rep, 1);
        let g2 = u1.plus(&coboundary_from(&rep, &xi, &sample, 1e-12).unwrap());
        let ps1 = ProductSystemModel::new(rep.clone(), u1.clone(), PhaseCochain::zero());
        let alpha2 = transform_multiplier(&rep, &ps1.alpha, &u1, &xi, &sample.pairs()).unwrap();
        let ps2 = ProductSystemModel::new(rep.clone(), g2, alpha2);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (a, b) in sample.pairs().into_iter().take(20) {
            let u = random_exp_vector(&rep, &a, 0.3, &mut rng);
            let v = random_exp_vector(&rep, &b, 0.3, &mut rng);
            let direct = transported(&ps1, &xi, &u, &v);
            let rule = ps2.product(&u, &v).unwrap();
            assert!((&direct.xi - &rule.xi).max_abs() < 1e-12);
            assert!((direct.scalar - rule.scalar).norm() < 1e-10 * rule.scalar.norm(), "{a} {b}");
            let _ = exp_vector_inner;
        }
    }

    #[test]
    fn constructed_pair_is_isomorphic() {
        let rep = c1();
        let m = rep.model();
        let sample = LatticeSample::new(m.cone(), m.step(), 2).unwrap();
        let u1 = make_u(m, &[1.0, 0.0, -1.0], &[0.0; 3]).unwrap();
        let xi = section(&rep, 3);
        let g2 = u1.plus(&coboundary_from(&rep, &xi, &sample, 1e-12).unwrap());
        let ps1 = ProductSystemModel::new(rep.clone(), u1.clone(), PhaseCochain::zero());
        let alpha2 = transform_multiplier(&rep, &ps1.alpha, &u1, &xi, &sample.pairs()).unwrap();
        let ps2 = ProductSystemModel::new(rep.clone(), g2, alpha2);
        let opts = SolveOptions::default();
        let verdict = check_projective_iso(&ps1, &ps2, &UnitarySpec::Identity, &sample, &opts, 0).unwrap();
        assert!(verdict.pass, "{:?}", verdict.obstruction);
        let w = verdict.witness().unwrap();
        let rebuilt = coboundary_from(&rep, w, &sample, 1e-8).unwrap();
        let truth = coboundary_from(&rep, &xi, &sample, 1e-8).unwrap();
        for (a, b) in sample.pairs() {
            assert!((&rebuilt.eval(&rep, &a, &b).unwrap() - &truth.eval(&rep, &a, &b).unwrap()).norm() < 1e-7);
        }

        let ones: HashMap<_, _> = sample.points.iter().map(|a| (a.clone(), 0.0)).collect();
        let ok = check_iso_conditions(&ps1, &ps2, &UnitarySpec::Identity, &xi, &ones, &sample, 0).unwrap();
        assert!(ok.pass, "{ok:?}");
        let mut bent = ones.clone();
        bent.insert(lp(&[1, 0, 0]), 0.3);
        let bad = check_iso_conditions(&ps1, &ps2, &UnitarySpec::Identity, &xi, &bent, &sample, 0).unwrap();
        assert!(!bad.pass && bad.a <= 1e-8 && bad.b <= 1e-8 && bad.c > 1e-3);
    }

    #[test]
    fn ccr_and_u_are_not_isomorphic() {
        let rep = c1();
        let m = rep.model();
        let sample = LatticeSample::new(m.cone(), m.step(), 2).unwrap();
        let ps1 = ProductSystemModel::ccr(rep.clone());
        let ps2 = ProductSystemModel::new(
            rep.clone(),
            make_u(m, &[1.0, 0.0, -1.0], &[0.0; 3]).unwrap(),
            PhaseCochain::zero(),
        );
        let v = check_projective_iso(&ps1, &ps2, &UnitarySpec::Identity, &sample, &SolveOptions::default(), 0).unwrap();
        assert!(!v.pass && v.intertwining_residual == 0.0);
        assert_eq!(v.coboundary.status, SolveStatus::Infeasible);
        let same =
            check_projective_iso(&ps1, &ps1, &UnitarySpec::Identity, &sample, &SolveOptions::default(), 0).unwrap();
        assert!(same.pass && same.coboundary.section_norm == 0.0);
    }

    #[test]
    fn translations_commute_with_shift() {
        let rep = c1();
        let m = rep.model();
        let sample = LatticeSample::new(m.cone(), m.step(), 1).unwrap();
        let u = GridUnitary::new(&rep, &UnitarySpec::YTranslation { cells: vec![1, 0], phase: 0.4 }).unwrap();
        assert!(intertwining(&rep, &rep, &u, &sample.points, 1).unwrap() < 1e-14);
        let n = m.len();
        let bad = UnitarySpec::Table { perm: (0..n).collect(), phases: vec![C64::new(1.1, 0.0); n] };
        assert!(matches!(GridUnitary::new(&rep, &bad), Err(Error::NotUnitary(_))));
    }
}
