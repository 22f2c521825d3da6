//! The functional `T(a,b,c) = Im⟨Γ(a,b+c)|V_bΓ(b,c)⟩`, its antisymmetric
//! part, and solving `δβ = T` for a phase multiplier `α = e^{iβ}`.

use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::cocycle::{CocycleKind, SolveStatus, TwoCocycle};
use crate::cone::{with_permutations, LatticePoint, Triple};
use crate::error::{Error, Result};
use crate::grid::GridVector;
use crate::lsq::{cgls, LsqOptions};
use crate::shift::ShiftRep;

type Pair = (LatticePoint, LatticePoint);

/// Real 2-cochain `β(a,b)`; `α = e^{iβ}` is the corresponding multiplier.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhaseCochain {
    values: HashMap<Pair, f64>,
    /// When set, pairs missing from the table read as 0.
    zero_default: bool,
}

impl PhaseCochain {
    pub fn zero() -> Self {
        PhaseCochain { values: HashMap::new(), zero_default: true }
    }

    pub fn from_table(values: HashMap<Pair, f64>) -> Self {
        PhaseCochain { values, zero_default: false }
    }

    pub fn from_fn<F: FnMut(&LatticePoint, &LatticePoint) -> f64>(pairs: &[Pair], mut f: F) -> Self {
        PhaseCochain::from_table(pairs.iter().map(|(a, b)| ((a.clone(), b.clone()), f(a, b))).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn beta(&self, a: &LatticePoint, b: &LatticePoint) -> Result<f64> {
        match self.values.get(&(a.clone(), b.clone())) {
            Some(v) => Ok(*v),
            None if self.zero_default => Ok(0.0),
            None => Err(Error::Malformed(format!("phase cochain has no value at ({a}, {b})"))),
        }
    }

    pub fn alpha(&self, a: &LatticePoint, b: &LatticePoint) -> Result<C64> {
        Ok(C64::from_polar(1.0, self.beta(a, b)?))
    }

    /// `δβ(a,b,c) = β(a,b) + β(a+b,c) − β(a,b+c) − β(b,c)`.
    pub fn delta(&self, a: &LatticePoint, b: &LatticePoint, c: &LatticePoint) -> Result<f64> {
        Ok(self.beta(a, b)? + self.beta(&(a + b), c)? - self.beta(a, &(b + c))? - self.beta(b, c)?)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Pair, &f64)> {
        self.values.iter()
    }
}

/// Evaluates `T` with a cache of cocycle values.
pub struct TEvaluator<'a> {
    rep: &'a ShiftRep,
    gamma: &'a TwoCocycle,
    values: HashMap<Pair, GridVector>,
    t: HashMap<Triple, f64>,
}

impl<'a> TEvaluator<'a> {
    pub fn new(rep: &'a ShiftRep, gamma: &'a TwoCocycle) -> Self {
        TEvaluator { rep, gamma, values: HashMap::new(), t: HashMap::new() }
    }

    fn gamma_at(&mut self, a: &LatticePoint, b: &LatticePoint) -> Result<GridVector> {
        let key = (a.clone(), b.clone());
        if let Some(v) = self.values.get(&key) {
            return Ok(v.clone());
        }
        let v = self.gamma.eval(self.rep, a, b)?;
        self.values.insert(key, v.clone());
        Ok(v)
    }

    pub fn t(&mut self, a: &LatticePoint, b: &LatticePoint, c: &LatticePoint) -> Result<f64> {
        let key = (a.clone(), b.clone(), c.clone());
        if let Some(v) = self.t.get(&key) {
            return Ok(*v);
        }
        let left = self.gamma_at(a, &(b + c))?;
        let right = self.rep.apply_v(b, &self.gamma_at(b, c)?)?;
        let v = left.inner(&right).im;
        self.t.insert(key, v);
        Ok(v)
    }

    pub fn t_star(&mut self, a: &LatticePoint, b: &LatticePoint, c: &LatticePoint) -> Result<f64> {
        let mut err = None;
        let v = antisymmetrize(
            |x, y, z| match self.t(x, y, z) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            },
            a,
            b,
            c,
        );
        match err {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }
}

/// `Im⟨Γ(a,b+c)|V_bΓ(b,c)⟩`.
pub fn t_functional(
    rep: &ShiftRep,
    gamma: &TwoCocycle,
    a: &LatticePoint,
    b: &LatticePoint,
    c: &LatticePoint,
) -> Result<f64> {
    TEvaluator::new(rep, gamma).t(a, b, c)
}

/// `(1/6) Σ_{σ∈S₃} sgn(σ) F(x_σ(1), x_σ(2), x_σ(3))`.
pub fn antisymmetrize<T, F: FnMut(&T, &T, &T) -> f64>(mut f: F, a: &T, b: &T, c: &T) -> f64 {
    (f(a, b, c) + f(b, c, a) + f(c, a, b) - f(b, a, c) - f(a, c, b) - f(c, b, a)) / 6.0
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(p, q)| p * q).sum()
}

/// `(1/6)·det` of the pairings of `λ₁, λ₂, γ₃` with `a, b, c`.
pub fn det_formula(l1: &[f64], l2: &[f64], g3: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let m = [
        [dot(l1, a), dot(l1, b), dot(l1, c)],
        [dot(l2, a), dot(l2, b), dot(l2, c)],
        [dot(g3, a), dot(g3, b), dot(g3, c)],
    ];
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    det / 6.0
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObstructionRecord {
    pub triple: Triple,
    pub t: f64,
    pub t_star: f64,
    /// `det_formula` at the triple, for `u^{λ₁,λ₂}` cocycles.
    pub det: Option<f64>,
    /// Nonzero `k` when `|T_*|` lies within `1e-6` of `k·π/3`.
    pub pi_thirds: Option<i64>,
}

#[derive(Clone, Debug)]
pub struct AdmissibilityReport {
    pub max_t_star: f64,
    pub worst: Option<Triple>,
    /// `max |T_* − det_formula|` for `u^{λ₁,λ₂}` cocycles.
    pub det_deviation: Option<f64>,
    pub records: Vec<ObstructionRecord>,
    pub pass: bool,
}

impl AdmissibilityReport {
    pub fn det_agrees(&self, tol: f64) -> Option<bool> {
        self.det_deviation.map(|d| d <= tol)
    }
}

/// Necessary condition for admissibility: `T_*` vanishes on every triple.
pub fn check_admissibility_necessary(
    rep: &ShiftRep,
    gamma: &TwoCocycle,
    triples: &[Triple],
    tol: f64,
) -> Result<AdmissibilityReport> {
    let m = rep.model();
    let lambdas = match gamma.kind() {
        CocycleKind::ULambda { lambda1, lambda2 } => Some((lambda1.clone(), lambda2.clone(), m.gamma3()?)),
        _ => None,
    };
    let h = m.h();
    let mut ev = TEvaluator::new(rep, gamma);
    let mut max_t_star: f64 = 0.0;
    let mut worst = None;
    let mut det_deviation: Option<f64> = None;
    let mut records = Vec::with_capacity(triples.len());
    for (a, b, c) in triples {
        let t = ev.t(a, b, c)?;
        let t_star = ev.t_star(a, b, c)?;
        let det =
            lambdas.as_ref().map(|(l1, l2, g3)| det_formula(l1, l2, g3, &a.to_real(h), &b.to_real(h), &c.to_real(h)));
        if let Some(dv) = det {
            let dev = (t_star - dv).abs();
            det_deviation = Some(det_deviation.map_or(dev, |x| x.max(dev)));
        }
        let k = (t_star.abs() / (PI / 3.0)).round();
        let pi_thirds = (k >= 1.0 && (t_star.abs() - k * PI / 3.0).abs() < 1e-6).then_some(k as i64);
        if t_star.abs() > max_t_star || worst.is_none() {
            max_t_star = max_t_star.max(t_star.abs());
            worst = Some((a.clone(), b.clone(), c.clone()));
        }
        records.push(ObstructionRecord { triple: (a.clone(), b.clone(), c.clone()), t, t_star, det, pi_thirds });
    }
    Ok(AdmissibilityReport { max_t_star, worst, det_deviation, records, pass: max_t_star <= tol })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiplierOptions {
    pub lsq: LsqOptions,
    /// Relative residual accepted as a solution.
    pub tol: f64,
    /// `|T_*|` above this counts as a nonzero obstruction.
    pub obstruction_tol: f64,
}

impl Default for MultiplierOptions {
    fn default() -> Self {
        MultiplierOptions { lsq: LsqOptions::default(), tol: 1e-6, obstruction_tol: 1e-9 }
    }
}

#[derive(Clone, Debug)]
pub struct MultiplierSolution {
    pub status: SolveStatus,
    pub beta: PhaseCochain,
    /// `‖δβ − T‖ / ‖T‖` over the triples.
    pub residual: f64,
    pub iterations: usize,
    pub max_t_star: f64,
    pub seed_used: bool,
}

/// Least-squares solution of the real system `δβ = T` over the triples
/// (closed under permutation first). A seed is used as a warm start only if
/// it already satisfies the system to `opts.tol`.
pub fn solve_multiplier(
    rep: &ShiftRep,
    gamma: &TwoCocycle,
    triples: &[Triple],
    opts: &MultiplierOptions,
    seed: Option<&PhaseCochain>,
) -> Result<MultiplierSolution> {
    if triples.is_empty() {
        return Err(Error::EmptySample("multiplier solve needs triples".into()));
    }
    let triples = with_permutations(triples);
    let mut ev = TEvaluator::new(rep, gamma);
    let mut rhs = Vec::with_capacity(triples.len());
    for (a, b, c) in &triples {
        rhs.push(ev.t(a, b, c)?);
    }
    let mut max_t_star: f64 = 0.0;
    let mut seen = HashSet::new();
    for (a, b, c) in &triples {
        let mut key = [a.clone(), b.clone(), c.clone()];
        key.sort();
        if seen.insert(key) {
            max_t_star = max_t_star.max(ev.t_star(a, b, c)?.abs());
        }
    }

    let mut index: HashMap<Pair, usize> = HashMap::new();
    let mut pairs: Vec<Pair> = Vec::new();
    let mut rows: Vec<[(usize, f64); 4]> = Vec::with_capacity(triples.len());
    let mut slot = |p: Pair| -> usize {
        *index.entry(p.clone()).or_insert_with(|| {
            pairs.push(p);
            pairs.len() - 1
        })
    };
    for (a, b, c) in &triples {
        rows.push([
            (slot((a.clone(), b.clone())), 1.0),
            (slot((a + b, c.clone())), 1.0),
            (slot((a.clone(), b + c)), -1.0),
            (slot((b.clone(), c.clone())), -1.0),
        ]);
    }
    let n = pairs.len();
    let apply = |x: &[C64]| -> Vec<C64> { rows.iter().map(|r| r.iter().map(|&(j, s)| x[j] * s).sum()).collect() };
    let adjoint = |y: &[C64]| -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); n];
        for (r, yi) in rows.iter().zip(y) {
            for &(j, s) in r {
                out[j] += yi * s;
            }
        }
        out
    };

    let t_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut x0 = vec![0.0; n];
    let mut seed_used = false;
    if let Some(s) = seed {
        let vals: Result<Vec<f64>> = pairs.iter().map(|(a, b)| s.beta(a, b)).collect();
        if let Ok(vals) = vals {
            let fit: Vec<C64> = apply(&vals.iter().map(|v| C64::new(*v, 0.0)).collect::<Vec<_>>());
            let err = fit.iter().zip(&rhs).map(|(f, t)| (f.re - t).powi(2)).sum::<f64>().sqrt();
            if err <= opts.tol * t_norm.max(f64::MIN_POSITIVE) {
                x0 = vals;
                seed_used = true;
            }
        }
    }
    let fit0 = apply(&x0.iter().map(|v| C64::new(*v, 0.0)).collect::<Vec<_>>());
    let b: Vec<C64> = rhs.iter().zip(&fit0).map(|(t, f)| C64::new(t - f.re, 0.0)).collect();
    let res = cgls(&apply, &adjoint, &b, n, &opts.lsq);
    let beta_vals: Vec<f64> = x0.iter().zip(&res.x).map(|(a, d)| a + d.re).collect();
    let residual = if t_norm == 0.0 { res.residual_norm } else { res.residual_norm / t_norm };
    let status = if residual <= opts.tol {
        SolveStatus::Feasible
    } else if !res.converged {
        SolveStatus::NotConverged
    } else if max_t_star > opts.obstruction_tol {
        SolveStatus::Infeasible
    } else {
        SolveStatus::Inconclusive
    };
    let beta = PhaseCochain::from_table(pairs.into_iter().zip(beta_vals).collect());
    Ok(MultiplierSolution { status, beta, residual, iterations: res.iterations, max_t_star, seed_used })
}

/// `β(a,b) = −r(b)·Im Σ_y g(y+a₁)·conj(g(y))·|cell|` for `w^g` on a model
/// with `r(b) = b_d − ⟨c|b₁⟩`; exact when `g` vanishes near window edges.
pub fn w_seed(rep: &ShiftRep, g: &[C64], pairs: &[Pair]) -> PhaseCochain {
    let m = rep.model();
    let corr = |a: &LatticePoint| -> f64 {
        let s: C64 =
            (0..m.y_cells()).map(|y| m.y_translate(y, a, 1).map(|j| g[j]).unwrap_or_default() * g[y].conj()).sum();
        (s * m.y_cell_measure()).im
    };
    PhaseCochain::from_fn(pairs, |a, b| -m.r(b) * corr(a))
}

#[derive(Clone, Debug)]
pub struct MultiplierReport {
    pub max_defect: f64,
    pub worst: Option<Triple>,
    pub pass: bool,
}

/// `max |α(a,b)α(a+b,c)·conj(α(a,b+c)α(b,c)) − e^{iT(a,b,c)}|`.
pub fn verify_multiplier(
    rep: &ShiftRep,
    alpha: &PhaseCochain,
    gamma: &TwoCocycle,
    triples: &[Triple],
    tol: f64,
) -> Result<MultiplierReport> {
    let mut ev = TEvaluator::new(rep, gamma);
    let mut max_defect: f64 = 0.0;
    let mut worst = None;
    for (a, b, c) in triples {
        let lhs =
            alpha.alpha(a, b)? * alpha.alpha(&(a + b), c)? * (alpha.alpha(a, &(b + c))? * alpha.alpha(b, c)?).conj();
        let d = (lhs - C64::from_polar(1.0, ev.t(a, b, c)?)).norm();
        if d > max_defect || worst.is_none() {
            max_defect = max_defect.max(d);
            worst = Some((a.clone(), b.clone(), c.clone()));
        }
    }
    Ok(MultiplierReport { max_defect, worst, pass: max_defect <= tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::{fourier_mode, make_u, make_w};
    use crate::cone::{sample_triples, LatticeSample};
    use crate::pspace::{ModelSpec, PSpaceModel};
    use num_rational::Rational64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lp(v: &[i64]) -> LatticePoint {
        LatticePoint(v.to_vec())
    }

    fn c1(m: usize, h: i64, n_t: usize) -> ShiftRep {
        ShiftRep::new(PSpaceModel::new(ModelSpec::c1(m, Rational64::new(1, h), n_t)).unwrap())
    }

    const L1: [f64; 3] = [1.0, 0.0, -1.0];
    const L2: [f64; 3] = [0.0, 1.0, -1.0];

    /// Closed form `T = −ρ(c)·(ℓ₁(a)ℓ₂(b) − ℓ₁(b)ℓ₂(a))` for `u^{λ₁,λ₂}`.
    fn t_oracle(a: &[f64], b: &[f64], c: &[f64], g3: &[f64]) -> f64 {
        -dot(g3, c) * (dot(&L1, a) * dot(&L2, b) - dot(&L1, b) * dot(&L2, a))
    }

    #[test]
    fn t_on_unit_triple() {
        let rep = ShiftRep::new(PSpaceModel::c1_default());
        let u = make_u(rep.model(), &L1, &L2).unwrap();
        let (a, b, c) = (lp(&[8, 0, 0]), lp(&[0, 8, 0]), lp(&[0, 0, 8]));
        let t = t_functional(&rep, &u, &a, &b, &c).unwrap();
        assert!((t + 1.0).abs() < 1e-12, "{t}");
        assert_eq!(t_functional(&rep, &TwoCocycle::zero(), &a, &b, &c).unwrap(), 0.0);
        let real = make_u(rep.model(), &L1, &[0.0; 3]).unwrap();
        assert_eq!(t_functional(&rep, &real, &a, &b, &c).unwrap(), 0.0);
    }

    #[test]
    fn t_matches_closed_form() {
        let rep = c1(4, 4, 48);
        let m = rep.model();
        let u = make_u(m, &L1, &L2).unwrap();
        let g3 = m.gamma3().unwrap();
        let sample = LatticeSample::new(m.cone(), m.step(), 3).unwrap();
        for (a, b, c) in sample_triples(&sample, 50, 1).unwrap() {
            let t = t_functional(&rep, &u, &a, &b, &c).unwrap();
            let h = m.h();
            let o = t_oracle(&a.to_real(h), &b.to_real(h), &c.to_real(h), &g3);
            assert!((t - o).abs() < 1e-12);
        }
    }

    #[test]
    fn antisymmetrize_examples() {
        let sym = |x: &f64, y: &f64, z: &f64| x * y + z;
        assert_eq!(antisymmetrize(sym, &1.0, &2.0, &5.0), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rep = c1(2, 2, 24);
        let m = rep.model();
        let sample = LatticeSample::new(m.cone(), m.step(), 2).unwrap();
        let beta = PhaseCochain::from_fn(&sample.pairs(), |_, _| rng.gen_range(-3.0..3.0));
        for (a, b, c) in sample_triples(&sample, 30, 2).unwrap() {
            let v = antisymmetrize(|x, y, z| beta.delta(x, y, z).unwrap(), &a, &b, &c);
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn det_examples() {
        let e = |i: usize| {
            let mut v = [0.0; 3];
            v[i] = 1.0;
            v
        };
        let g3 = [1.0, 1.0, 1.0];
        assert!((det_formula(&L1, &L2, &g3, &e(0), &e(1), &e(2)) - 0.5).abs() < 1e-15);
        let l2 = [2.0, 0.0, -2.0];
        assert_eq!(det_formula(&L1, &l2, &g3, &e(0), &e(1), &e(2)), 0.0);
        assert_eq!(det_formula(&L1, &L2, &g3, &e(0), &e(0), &e(2)), 0.0);
    }

    #[test]
    fn antisymmetric_part_is_twice_the_determinant_formula() {
        // T_* = −det/3, i.e. twice det_formula in magnitude.
        let rep = ShiftRep::new(PSpaceModel::c1_default());
        let u = make_u(rep.model(), &L1, &L2).unwrap();
        let (a, b, c) = (lp(&[8, 0, 0]), lp(&[0, 8, 0]), lp(&[0, 0, 8]));
        let ts = TEvaluator::new(&rep, &u).t_star(&a, &b, &c).unwrap();
        assert!((ts + 1.0).abs() < 1e-12, "{ts}");
        let report = check_admissibility_necessary(&rep, &u, &[(a, b, c)], 1e-9).unwrap();
        assert!(!report.pass);
        assert!((report.max_t_star - 1.0).abs() < 1e-12);
        assert!((report.det_deviation.unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn dependent_pair_passes() {
        let rep = c1(4, 4, 48);
        let m = rep.model();
        let u = make_u(m, &L1, &[2.0, 0.0, -2.0]).unwrap();
        let sample = LatticeSample::new(m.cone(), m.step(), 3).unwrap();
        let triples = sample_triples(&sample, 40, 3).unwrap();
        let r = check_admissibility_necessary(&rep, &u, &triples, 1e-12).unwrap();
        assert!(r.pass && r.max_t_star == 0.0);
        assert!(r.det_deviation.unwrap() < 1e-12);
        let sol = solve_multiplier(&rep, &u, &triples, &MultiplierOptions::default(), None).unwrap();
        assert_eq!(sol.status, SolveStatus::Feasible);
    }

    #[test]
    fn independent_pair_is_infeasible() {
        let rep = c1(4, 4, 48);
        let m = rep.model();
        let u = make_u(m, &L1, &L2).unwrap();
        let sample = LatticeSample::new(m.cone(), m.step(), 4).unwrap();
        let triples = sample_triples(&sample, 60, 9).unwrap();
        let sol = solve_multiplier(&rep, &u, &triples, &MultiplierOptions::default(), None).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
        assert!(sol.residual > 0.1, "{}", sol.residual);
        let ones = PhaseCochain::zero();
        let (a, b, c) = (lp(&[4, 0, 0]), lp(&[0, 4, 0]), lp(&[0, 0, 4]));
        let r = verify_multiplier(&rep, &ones, &u, &[(a, b, c)], 1e-6).unwrap();
        assert!((r.max_defect - 2.0 * 0.5f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn fourier_seed_solves_multiplier() {
        let rep = ShiftRep::new(
            PSpaceModel::new(ModelSpec::c2(Rational64::from_integer(6), Rational64::new(1, 4), 16)).unwrap(),
        );
        let m = rep.model();
        let g = fourier_mode(m, &[2], 8).unwrap();
        let w = make_w(m, "fourier", g.clone(), &[], f64::INFINITY).unwrap();
        let sample = LatticeSample::new(m.cone(), m.step(), 3).unwrap();
        let triples = sample.all_triples();
        let seed = w_seed(&rep, &g, &sample.pairs());
        for (a, b, c) in &triples {
            let t = t_functional(&rep, &w, a, b, c).unwrap();
            assert!((seed.delta(a, b, c).unwrap() - t).abs() < 1e-12);
        }
        let opts = MultiplierOptions::default();
        let cold = solve_multiplier(&rep, &w, &triples, &opts, None).unwrap();
        let warm = solve_multiplier(&rep, &w, &triples, &opts, Some(&seed)).unwrap();
        assert_eq!(cold.status, SolveStatus::Feasible);
        assert!(warm.seed_used && warm.iterations <= cold.iterations);
        let check = verify_multiplier(&rep, &cold.beta, &w, &triples, 1e-6).unwrap();
        assert!(check.pass, "{}", check.max_defect);
    }

    #[test]
    fn t_scales_quadratically() {
        let rep = c1(4, 4, 48);
        let u = make_u(rep.model(), &L1, &L2).unwrap();
        let s = u.scaled(C64::new(3.0, 0.0));
        let (a, b, c) = (lp(&[1, 2, 0]), lp(&[0, 1, 3]), lp(&[2, 0, 1]));
        let t1 = t_functional(&rep, &u, &a, &b, &c).unwrap();
        let t3 = t_functional(&rep, &s, &a, &b, &c).unwrap();
        assert!((t3 - 9.0 * t1).abs() < 1e-12);
    }
}
