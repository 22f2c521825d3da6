//! Polyhedral rational cones, the order they induce, and lattice samples of
//! semigroup elements.
//!
//! Semigroup elements are stored as integer multiples of a lattice step `h`
//! ([`LatticePoint`]). Membership is decided exactly on the integer
//! coordinates, which is legitimate because cones are closed under positive
//! scaling.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_rational::Rational64;
use num_traits::{One, Signed, Zero};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Integer coordinates of a semigroup element, in units of the lattice step.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePoint(pub Vec<i64>);

impl LatticePoint {
    pub fn zero(d: usize) -> Self {
        LatticePoint(vec![0; d])
    }

    pub fn unit(d: usize, i: usize, k: i64) -> Self {
        let mut v = vec![0; d];
        v[i] = k;
        LatticePoint(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    pub fn scale(&self, k: i64) -> Self {
        LatticePoint(self.0.iter().map(|x| x * k).collect())
    }

    pub fn as_rational(&self) -> Vec<Rational64> {
        self.0.iter().map(|&x| Rational64::from_integer(x)).collect()
    }

    /// Real coordinates for lattice step `h`.
    pub fn to_real(&self, h: f64) -> Vec<f64> {
        self.0.iter().map(|&x| x as f64 * h).collect()
    }
}

impl From<Vec<i64>> for LatticePoint {
    fn from(v: Vec<i64>) -> Self {
        LatticePoint(v)
    }
}

impl From<&[i64]> for LatticePoint {
    fn from(v: &[i64]) -> Self {
        LatticePoint(v.to_vec())
    }
}

impl Add for &LatticePoint {
    type Output = LatticePoint;
    fn add(self, rhs: &LatticePoint) -> LatticePoint {
        LatticePoint(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &LatticePoint {
    type Output = LatticePoint;
    fn sub(self, rhs: &LatticePoint) -> LatticePoint {
        LatticePoint(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &LatticePoint {
    type Output = LatticePoint;
    fn neg(self) -> LatticePoint {
        LatticePoint(self.0.iter().map(|a| -a).collect())
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cone {
    dim: usize,
    generators: Vec<Vec<Rational64>>,
    dual_inequalities: Vec<Vec<Rational64>>,
}

impl Cone {
    /// Builds the cone generated by `generators`, computing its facet
    /// inequalities by enumeration over generator subsets.
    pub fn new(generators: Vec<Vec<Rational64>>) -> Result<Self> {
        let dim = generators.first().map(|g| g.len()).ok_or(Error::NotSpanning(0))?;
        if dim == 0 {
            return Err(Error::NotSpanning(0));
        }
        for g in &generators {
            if g.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: g.len() });
            }
        }
        if rational_rank(&generators) < dim {
            return Err(Error::NotSpanning(dim));
        }
        let dual_inequalities = facet_normals(&generators, dim);
        // The lineality space {x : f(x) = 0 for every facet f} is trivial iff
        // the facet normals span the dual space.
        if dual_inequalities.is_empty() || rational_rank(&dual_inequalities) < dim {
            return Err(Error::NotPointed);
        }
        Ok(Cone { dim, generators, dual_inequalities })
    }

    pub fn from_integer_generators(gens: &[Vec<i64>]) -> Result<Self> {
        Cone::new(gens.iter().map(|g| g.iter().map(|&x| Rational64::from_integer(x)).collect()).collect())
    }

    /// The nonnegative orthant R₊^d.
    pub fn orthant(d: usize) -> Self {
        let gens: Vec<Vec<i64>> = (0..d).map(|i| LatticePoint::unit(d, i, 1).0).collect();
        Cone::from_integer_generators(&gens).expect("orthant is a valid cone")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[Vec<Rational64>] {
        &self.generators
    }

    pub fn dual_inequalities(&self) -> &[Vec<Rational64>] {
        &self.dual_inequalities
    }

    pub fn contains(&self, x: &[Rational64]) -> Result<bool> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(self.dual_inequalities.iter().all(|f| !dot(f, x).is_negative()))
    }

    pub fn contains_lattice(&self, x: &LatticePoint) -> Result<bool> {
        self.contains(&x.as_rational())
    }

    /// `a ≤ b` iff `b − a ∈ P`.
    pub fn leq(&self, a: &[Rational64], b: &[Rational64]) -> Result<bool> {
        if a.len() != self.dim || b.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: if a.len() != self.dim { a.len() } else { b.len() },
            });
        }
        let diff: Vec<Rational64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
        self.contains(&diff)
    }

    pub fn leq_lattice(&self, a: &LatticePoint, b: &LatticePoint) -> Result<bool> {
        self.contains_lattice(&(b - a))
    }

    /// Strict order: `b − a` in the interior.
    pub fn lt_lattice(&self, a: &LatticePoint, b: &LatticePoint) -> Result<bool> {
        self.in_interior(&(b - a))
    }

    pub fn in_interior(&self, x: &LatticePoint) -> Result<bool> {
        let xr = x.as_rational();
        if xr.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: xr.len() });
        }
        Ok(self.dual_inequalities.iter().all(|f| dot(f, &xr).is_positive()))
    }
}

fn dot(a: &[Rational64], b: &[Rational64]) -> Rational64 {
    a.iter().zip(b).fold(Rational64::zero(), |acc, (x, y)| acc + x * y)
}

pub(crate) fn rational_rank(rows: &[Vec<Rational64>]) -> usize {
    let mut m: Vec<Vec<Rational64>> = rows.to_vec();
    let ncols = m.first().map(|r| r.len()).unwrap_or(0);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(p) = (rank..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        let pivot = m[rank][col];
        for r in 0..m.len() {
            if r != rank && !m[r][col].is_zero() {
                let f = m[r][col] / pivot;
                for c in col..ncols {
                    let v = m[rank][c];
                    m[r][c] -= f * v;
                }
            }
        }
        rank += 1;
    }
    rank
}

pub(crate) fn rational_det(m: &[Vec<Rational64>]) -> Rational64 {
    let n = m.len();
    let mut a = m.to_vec();
    let mut det = Rational64::one();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return Rational64::zero();
        };
        if p != col {
            a.swap(p, col);
            det = -det;
        }
        let pivot = a[col][col];
        det *= pivot;
        for r in col + 1..n {
            let f = a[r][col] / pivot;
            for c in col..n {
                let v = a[col][c];
                a[r][c] -= f * v;
            }
        }
    }
    det
}

/// Normal of the hyperplane through `d − 1` vectors via signed cofactors.
fn cofactor_normal(rows: &[&Vec<Rational64>], d: usize) -> Vec<Rational64> {
    (0..d)
        .map(|j| {
            let minor: Vec<Vec<Rational64>> =
                rows.iter().map(|r| r.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, v)| *v).collect()).collect();
            let det = if minor.is_empty() { Rational64::one() } else { rational_det(&minor) };
            if j % 2 == 0 {
                det
            } else {
                -det
            }
        })
        .collect()
}

fn primitive(v: Vec<Rational64>) -> Vec<Rational64> {
    match v.iter().map(|x| x.abs()).filter(|x| !x.is_zero()).min() {
        Some(s) => v.into_iter().map(|x| x / s).collect(),
        None => v,
    }
}

fn facet_normals(gens: &[Vec<Rational64>], d: usize) -> Vec<Vec<Rational64>> {
    let mut out: Vec<Vec<Rational64>> = Vec::new();
    let k = d - 1;
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let rows: Vec<&Vec<Rational64>> = idx.iter().map(|&i| &gens[i]).collect();
        let n = cofactor_normal(&rows, d);
        if n.iter().any(|x| !x.is_zero()) {
            for sign in [1i64, -1] {
                let cand: Vec<Rational64> = n.iter().map(|x| x * Rational64::from_integer(sign)).collect();
                if gens.iter().all(|g| !dot(&cand, g).is_negative()) {
                    let p = primitive(cand);
                    if !out.contains(&p) {
                        out.push(p);
                    }
                }
            }
        }
        if !next_combination(&mut idx, gens.len()) {
            break;
        }
    }
    out
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    if k == 0 {
        return false;
    }
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Nonzero lattice points of the cone with every coordinate bounded by the
/// level, in units of the step `h`.
#[derive(Clone, Debug)]
pub struct LatticeSample {
    pub step: Rational64,
    pub level: i64,
    pub points: Vec<LatticePoint>,
}

pub type Triple = (LatticePoint, LatticePoint, LatticePoint);

impl LatticeSample {
    pub fn new(cone: &Cone, step: Rational64, level: i64) -> Result<Self> {
        if !step.is_positive() {
            return Err(Error::InvalidModel("lattice step must be positive".into()));
        }
        if level < 0 {
            return Err(Error::InvalidModel("level must be nonnegative".into()));
        }
        let d = cone.dim();
        let mut points = Vec::new();
        let mut cur = vec![-level; d];
        loop {
            let p = LatticePoint(cur.clone());
            if !p.is_zero() && cone.contains_lattice(&p)? {
                points.push(p);
            }
            let mut i = 0;
            loop {
                if i == d {
                    return Ok(LatticeSample { step, level, points });
                }
                if cur[i] < level {
                    cur[i] += 1;
                    break;
                }
                cur[i] = -level;
                i += 1;
            }
        }
    }

    pub fn empty(step: Rational64, level: i64) -> Self {
        LatticeSample { step, level, points: Vec::new() }
    }

    pub fn within_level(&self, p: &LatticePoint) -> bool {
        p.0.iter().all(|x| x.abs() <= self.level)
    }

    pub fn h(&self) -> f64 {
        *self.step.numer() as f64 / *self.step.denom() as f64
    }

    /// All `(a, b)` with `a + b` inside the level, in enumeration order.
    pub fn pairs(&self) -> Vec<(LatticePoint, LatticePoint)> {
        let mut out = Vec::new();
        for a in &self.points {
            for b in &self.points {
                if self.within_level(&(a + b)) {
                    out.push((a.clone(), b.clone()));
                }
            }
        }
        out
    }

    /// All valid triples in enumeration order.
    pub fn all_triples(&self) -> Vec<Triple> {
        let mut out = Vec::new();
        for a in &self.points {
            for b in &self.points {
                let ab = a + b;
                if !self.within_level(&ab) {
                    continue;
                }
                for c in &self.points {
                    if self.within_level(&(&ab + c)) {
                        out.push((a.clone(), b.clone(), c.clone()));
                    }
                }
            }
        }
        out
    }
}

/// Deterministic pseudo-random selection of `count` valid triples (fewer if
/// the sample has fewer), returned in enumeration order.
pub fn sample_triples(sample: &LatticeSample, count: usize, seed: u64) -> Result<Vec<Triple>> {
    if count == 0 {
        return Err(Error::EmptySample("count must be at least 1".into()));
    }
    let all = sample.all_triples();
    if all.is_empty() {
        return Err(Error::EmptySample(format!("no triple with a+b+c inside level {}", sample.level)));
    }
    if count >= all.len() {
        return Ok(all);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, all.len(), count).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| all[i].clone()).collect())
}

/// Closes a list of triples under argument permutation, keeping first-seen
/// order and dropping duplicates.
pub fn with_permutations(triples: &[Triple]) -> Vec<Triple> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for (a, b, c) in triples {
        for t in [(a, b, c), (b, c, a), (c, a, b), (b, a, c), (a, c, b), (c, b, a)] {
            let t = (t.0.clone(), t.1.clone(), t.2.clone());
            if seen.insert(t.clone()) {
                out.push(t);
            }
        }
    }
    out
}
