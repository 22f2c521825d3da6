//! Two-cocycles, one-cocycles and coherent sections for the shift semigroup,
//! with the explicit families `u^{λ₁,λ₂}` and `w^g` and a least-squares
//! coboundary solver.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::cone::{LatticePoint, LatticeSample, Triple};
use crate::error::{Error, Result};
use crate::grid::GridVector;
use crate::lsq::{cgls, LsqOptions};
use crate::pspace::{AxisKind, PSpaceModel};
use crate::shift::ShiftRep;

/// Values of a function on the `y`-cells of a model.
pub type YFunction = Vec<C64>;

type Pair = (LatticePoint, LatticePoint);
type RuleFn = Arc<dyn Fn(&ShiftRep, &LatticePoint, &LatticePoint) -> Result<GridVector> + Send + Sync>;

#[derive(Clone, Debug, PartialEq)]
pub enum CocycleKind {
    Zero,
    ULambda { lambda1: Vec<f64>, lambda2: Vec<f64> },
    WGroup { label: String },
    Coboundary,
    Sum,
    Custom { label: String },
}

#[derive(Clone)]
enum Rule {
    Zero,
    U { lambda1: Vec<f64>, lambda2: Vec<f64> },
    W { g: Arc<YFunction> },
    Coboundary(CoherentSection),
    Sum(Vec<(C64, TwoCocycle)>),
    FromPhi(Box<OneCocycle>),
    Custom(RuleFn),
}

#[derive(Clone)]
pub struct TwoCocycle {
    kind: CocycleKind,
    rule: Rule,
}

impl fmt::Debug for TwoCocycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TwoCocycle").field("kind", &self.kind).finish()
    }
}

/// `⟨λ₁|a⟩ + i⟨λ₂|a⟩` for `a` in real coordinates.
pub fn u_value(lambda1: &[f64], lambda2: &[f64], a: &[f64]) -> C64 {
    let dot = |l: &[f64]| l.iter().zip(a).map(|(x, y)| x * y).sum::<f64>();
    C64::new(dot(lambda1), dot(lambda2))
}

impl TwoCocycle {
    pub fn zero() -> Self {
        TwoCocycle { kind: CocycleKind::Zero, rule: Rule::Zero }
    }

    pub fn custom<F>(label: &str, f: F) -> Self
    where
        F: Fn(&ShiftRep, &LatticePoint, &LatticePoint) -> Result<GridVector> + Send + Sync + 'static,
    {
        TwoCocycle { kind: CocycleKind::Custom { label: label.into() }, rule: Rule::Custom(Arc::new(f)) }
    }

    /// `Σ cᵢ Γᵢ`.
    pub fn sum(terms: Vec<(C64, TwoCocycle)>) -> Self {
        TwoCocycle { kind: CocycleKind::Sum, rule: Rule::Sum(terms) }
    }

    pub fn scaled(&self, c: C64) -> Self {
        TwoCocycle::sum(vec![(c, self.clone())])
    }

    pub fn plus(&self, other: &TwoCocycle) -> Self {
        let one = C64::new(1.0, 0.0);
        TwoCocycle::sum(vec![(one, self.clone()), (one, other.clone())])
    }

    pub fn minus(&self, other: &TwoCocycle) -> Self {
        TwoCocycle::sum(vec![(C64::new(1.0, 0.0), self.clone()), (C64::new(-1.0, 0.0), other.clone())])
    }

    /// Copy of `self` with `delta` added to the single value `Γ(a, b)`.
    pub fn with_fault(&self, a: &LatticePoint, b: &LatticePoint, delta: GridVector) -> Self {
        let base = self.clone();
        let (fa, fb) = (a.clone(), b.clone());
        TwoCocycle::custom("fault", move |rep, x, y| {
            let mut v = base.eval(rep, x, y)?;
            if *x == fa && *y == fb {
                v += &delta;
            }
            Ok(v)
        })
    }

    pub fn kind(&self) -> &CocycleKind {
        &self.kind
    }

    pub fn eval(&self, rep: &ShiftRep, a: &LatticePoint, b: &LatticePoint) -> Result<GridVector> {
        let m = rep.model();
        m.check_in_cone(a)?;
        m.check_in_cone(b)?;
        match &self.rule {
            Rule::Zero => Ok(m.zeros()),
            Rule::U { lambda1, lambda2 } => {
                let u = u_value(lambda1, lambda2, &a.to_real(m.h()));
                Ok(m.strip_indicator(b).scale(u))
            }
            Rule::W { g } => {
                let nt = m.n_t();
                let rows = (m.t_shift(b).max(0) as usize).min(nt);
                let mut out = m.zeros();
                for y in 0..m.y_cells() {
                    let ahead = m.y_translate(y, a, 1).map(|j| g[j]).unwrap_or_default();
                    let diff = ahead - g[y];
                    for t in 0..rows {
                        out.values[y * nt + t] = diff;
                    }
                }
                Ok(out)
            }
            Rule::Coboundary(section) => {
                let ab = a + b;
                let va_xb = rep.apply_v(a, &section.eval(rep, b)?)?;
                let mut inner = section.eval(rep, &ab)?;
                inner -= &section.eval(rep, a)?;
                inner -= &va_xb;
                rep.apply_vstar(a, &inner)
            }
            Rule::Sum(terms) => {
                let mut out = m.zeros();
                for (c, g) in terms {
                    out.axpy(*c, &g.eval(rep, a, b)?);
                }
                Ok(out)
            }
            Rule::FromPhi(phi) => {
                if m.t_shift(b) > m.t_shift(phi.cofinal()) {
                    return Err(Error::GuardViolation(format!(
                        "{b} lies beyond the cofinal element {}",
                        phi.cofinal()
                    )));
                }
                Ok(rep.ker_proj(b, &phi.riesz(rep, a)?))
            }
            Rule::Custom(f) => f(rep, a, b),
        }
    }
}

/// `Γ(a,b) = (⟨λ₁|a⟩ + i⟨λ₂|a⟩)·1_{A∖A⊞b}` for `λᵢ ∈ span(H)`; needs
/// codimension one so that strips have finite measure.
pub fn make_u(model: &PSpaceModel, lambda1: &[f64], lambda2: &[f64]) -> Result<TwoCocycle> {
    let d = model.dim();
    for l in [lambda1, lambda2] {
        if l.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: l.len() });
        }
    }
    if model.codim() != 1 {
        return Err(Error::Codimension(model.codim()));
    }
    for l in [lambda1, lambda2] {
        let res = model.subgroup().span_residual(l);
        if res > 1e-9 {
            return Err(Error::NotInLH(format!("{l:?} (distance {res:.3e})")));
        }
    }
    Ok(TwoCocycle {
        kind: CocycleKind::ULambda { lambda1: lambda1.to_vec(), lambda2: lambda2.to_vec() },
        rule: Rule::U { lambda1: lambda1.to_vec(), lambda2: lambda2.to_vec() },
    })
}

/// `Γ(a,b)(y,t) = (g(y+a₁) − g(y))` on the strip of `b`. Values of `g`
/// beyond a window edge are read as 0. Fails if `‖g(·+a₁) − g‖` exceeds
/// `bound` for one of the probe elements.
pub fn make_w(
    model: &PSpaceModel,
    label: &str,
    g: YFunction,
    probes: &[LatticePoint],
    bound: f64,
) -> Result<TwoCocycle> {
    if g.len() != model.y_cells() {
        return Err(Error::DimensionMismatch { expected: model.y_cells(), got: g.len() });
    }
    for a in probes {
        let n = translation_difference_norm(model, &g, a);
        if !(n <= bound) {
            return Err(Error::Divergent { norm: n, bound });
        }
    }
    Ok(TwoCocycle { kind: CocycleKind::WGroup { label: label.into() }, rule: Rule::W { g: Arc::new(g) } })
}

/// `‖g(·+a₁) − g‖` in `L²(Y)` on the grid.
pub fn translation_difference_norm(model: &PSpaceModel, g: &[C64], a: &LatticePoint) -> f64 {
    let s: f64 = (0..model.y_cells())
        .map(|y| {
            let ahead = model.y_translate(y, a, 1).map(|j| g[j]).unwrap_or_default();
            (ahead - g[y]).norm_sqr()
        })
        .sum();
    (s * model.y_cell_measure()).sqrt()
}

/// The function `f^p(x) = (Σ xᵢ)^{-p}` when every `xᵢ > 1`, else 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FpFamily {
    pub d: usize,
    pub p: f64,
}

impl FpFamily {
    pub fn new(d: usize, p: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidModel("f^p needs d ≥ 2".into()));
        }
        if !(p > 0.0) {
            return Err(Error::InvalidModel(format!("f^p needs p > 0, got {p}")));
        }
        Ok(FpFamily { d, p })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.d - 1);
        if x.iter().all(|&v| v > 1.0) {
            x.iter().sum::<f64>().powf(-self.p)
        } else {
            0.0
        }
    }

    /// `f^p ∈ L²(R^{d−1})` exactly when `p > (d−1)/2`.
    pub fn square_integrable(&self) -> bool {
        self.p > (self.d as f64 - 1.0) / 2.0
    }

    /// Translation differences are square integrable when `p > (d−2)/2`.
    pub fn differences_square_integrable(&self) -> bool {
        self.p > (self.d as f64 - 2.0) / 2.0
    }

    /// `Σ f(y)² h` over grid points `y = 1+h, …, R` (one-dimensional `y`).
    pub fn window_norm_sq(&self, radius: f64, h: f64) -> f64 {
        let n = ((radius - 1.0) / h).round() as usize;
        (1..=n).map(|k| self.eval(&[1.0 + k as f64 * h]).powi(2) * h).sum()
    }

    /// `Σ |f(y+a₁) − f(y)|² h` over grid points `y ∈ (−R, R]`.
    pub fn difference_norm_sq(&self, shift: f64, radius: f64, h: f64) -> f64 {
        let n = (2.0 * radius / h).round() as usize;
        (1..=n)
            .map(|k| {
                let y = -radius + k as f64 * h;
                (self.eval(&[y + shift]) - self.eval(&[y])).powi(2) * h
            })
            .sum()
    }
}

/// Samples a real function of the `y`-coordinates on the grid, zeroing the
/// last `guard` cells at both ends of each window axis.
pub fn sample_on_y<F: Fn(&[f64]) -> f64>(model: &PSpaceModel, f: F, guard: usize) -> YFunction {
    (0..model.y_cells())
        .map(|y| {
            let multi = model.y_multi(y);
            let in_guard = model
                .axes()
                .iter()
                .zip(&multi)
                .any(|(ax, &j)| ax.kind == AxisKind::Window && (j < guard || j + guard >= ax.cells));
            if in_guard {
                C64::new(0.0, 0.0)
            } else {
                C64::new(f(&model.y_coords(y)), 0.0)
            }
        })
        .collect()
}

/// `exp(i⟨k|ω·y⟩)` with `ω = 2π/P` on compact axes and `π/R` on window
/// axes, zeroed in the guard band.
pub fn fourier_mode(model: &PSpaceModel, k: &[i64], guard: usize) -> Result<YFunction> {
    if k.len() != model.axes().len() {
        return Err(Error::DimensionMismatch { expected: model.axes().len(), got: k.len() });
    }
    let radius = *model.radius().numer() as f64 / *model.radius().denom() as f64;
    let freq: Vec<f64> = model
        .axes()
        .iter()
        .zip(k)
        .map(|(ax, &kk)| match &ax.kind {
            AxisKind::Compact { period } => {
                2.0 * std::f64::consts::PI * kk as f64 * *period.denom() as f64 / *period.numer() as f64
            }
            AxisKind::Window => std::f64::consts::PI * kk as f64 / radius,
        })
        .collect();
    Ok((0..model.y_cells())
        .map(|y| {
            let multi = model.y_multi(y);
            let in_guard = model
                .axes()
                .iter()
                .zip(&multi)
                .any(|(ax, &j)| ax.kind == AxisKind::Window && (j < guard || j + guard >= ax.cells));
            if in_guard {
                return C64::new(0.0, 0.0);
            }
            let phase: f64 = model.y_coords(y).iter().zip(&freq).map(|(x, w)| x * w).sum();
            C64::from_polar(1.0, phase)
        })
        .collect())
}

/// The window vector `G(y,t) = g(y)`.
pub fn lift_to_grid(model: &PSpaceModel, g: &[C64]) -> GridVector {
    let nt = model.n_t();
    let mut v = model.zeros();
    for (y, gy) in g.iter().enumerate() {
        for z in &mut v.values[y * nt..(y + 1) * nt] {
            *z = *gy;
        }
    }
    v
}

#[derive(Clone)]
enum SectionRule {
    Zero,
    FromVector(Arc<GridVector>),
    Table(Arc<HashMap<LatticePoint, GridVector>>),
}

/// A family `a ↦ ξ_a ∈ Ker(V_a*)`.
#[derive(Clone)]
pub struct CoherentSection {
    rule: SectionRule,
}

impl fmt::Debug for CoherentSection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match &self.rule {
            SectionRule::Zero => "zero".to_string(),
            SectionRule::FromVector(_) => "restriction of a vector".to_string(),
            SectionRule::Table(t) => format!("table of {}", t.len()),
        };
        write!(f, "CoherentSection({what})")
    }
}

impl CoherentSection {
    pub fn zero() -> Self {
        CoherentSection { rule: SectionRule::Zero }
    }

    /// `ξ_a = E_a^⊥ w`, coherent by construction.
    pub fn from_vector(w: GridVector) -> Self {
        CoherentSection { rule: SectionRule::FromVector(Arc::new(w)) }
    }

    pub fn from_table(table: HashMap<LatticePoint, GridVector>) -> Self {
        CoherentSection { rule: SectionRule::Table(Arc::new(table)) }
    }

    pub fn eval(&self, rep: &ShiftRep, a: &LatticePoint) -> Result<GridVector> {
        match &self.rule {
            SectionRule::Zero => Ok(rep.zeros()),
            SectionRule::FromVector(w) => Ok(rep.ker_proj(a, w)),
            SectionRule::Table(t) => {
                if a.is_zero() {
                    return Ok(rep.zeros());
                }
                t.get(a).cloned().ok_or_else(|| Error::Malformed(format!("section has no value at {a}")))
            }
        }
    }

    /// `max ‖ξ_a − E_a^⊥ ξ_{a+b}‖` over the pairs.
    pub fn coherence_residual(&self, rep: &ShiftRep, pairs: &[Pair]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (a, b) in pairs {
            let xa = self.eval(rep, a)?;
            let xab = self.eval(rep, &(a + b))?;
            worst = worst.max((&xa - &rep.ker_proj(a, &xab)).norm());
        }
        Ok(worst)
    }
}

/// `Γ(a,b) = V_a*(ξ_{a+b} − ξ_a − V_a ξ_b)`; the section is checked for
/// coherence on the pairs of `sample`.
pub fn coboundary_from(
    rep: &ShiftRep,
    section: &CoherentSection,
    sample: &LatticeSample,
    tol: f64,
) -> Result<TwoCocycle> {
    let res = section.coherence_residual(rep, &sample.pairs())?;
    if res > tol {
        return Err(Error::Coherence(res));
    }
    Ok(TwoCocycle { kind: CocycleKind::Coboundary, rule: Rule::Coboundary(section.clone()) })
}

/// `N·b₀` for the largest `N` whose strip leaves `headroom` free `t`-cells
/// at the top of the window.
pub fn cofinal_element(model: &PSpaceModel, b0: &LatticePoint, headroom: usize) -> Result<LatticePoint> {
    if !model.cone().in_interior(b0)? {
        return Err(Error::NotInCone(format!("{b0} is not interior")));
    }
    let step = model.t_shift(b0);
    let room = model.n_t().saturating_sub(headroom) as i64;
    if step <= 0 || step > room {
        return Err(Error::InvalidModel(format!("strip of {b0} does not fit the window")));
    }
    Ok(b0.scale(room / step))
}

#[derive(Clone)]
enum OneRule {
    Zero,
    Constant { lambda1: Vec<f64>, lambda2: Vec<f64> },
    FromGamma(TwoCocycle),
    Table(Arc<HashMap<LatticePoint, GridVector>>),
}

/// A one-cocycle `a ↦ φ_a`, stored as Riesz vectors on `Ker(V_{b_N}*)`.
#[derive(Clone)]
pub struct OneCocycle {
    cofinal: LatticePoint,
    rule: OneRule,
}

impl fmt::Debug for OneCocycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OneCocycle(cofinal {})", self.cofinal)
    }
}

impl OneCocycle {
    pub fn zero(cofinal: LatticePoint) -> Self {
        OneCocycle { cofinal, rule: OneRule::Zero }
    }

    /// `φ_a(ξ) = ⟨ξ|u(a)·1⟩` with `u(a) = ⟨λ₁|a⟩ + i⟨λ₂|a⟩`.
    pub fn constant(cofinal: LatticePoint, lambda1: &[f64], lambda2: &[f64]) -> Self {
        OneCocycle { cofinal, rule: OneRule::Constant { lambda1: lambda1.to_vec(), lambda2: lambda2.to_vec() } }
    }

    pub fn from_riesz_table(cofinal: LatticePoint, table: HashMap<LatticePoint, GridVector>) -> Self {
        OneCocycle { cofinal, rule: OneRule::Table(Arc::new(table)) }
    }

    pub fn cofinal(&self) -> &LatticePoint {
        &self.cofinal
    }

    /// Riesz vector of `φ_a` in `Ker(V_{b_N}*)`.
    pub fn riesz(&self, rep: &ShiftRep, a: &LatticePoint) -> Result<GridVector> {
        let m = rep.model();
        match &self.rule {
            OneRule::Zero => Ok(m.zeros()),
            OneRule::Constant { lambda1, lambda2 } => {
                let u = u_value(lambda1, lambda2, &a.to_real(m.h()));
                Ok(m.strip_indicator(&self.cofinal).scale(u))
            }
            OneRule::FromGamma(g) => g.eval(rep, a, &self.cofinal),
            OneRule::Table(t) => {
                if a.is_zero() {
                    return Ok(m.zeros());
                }
                t.get(a).cloned().ok_or_else(|| Error::Malformed(format!("no Riesz vector at {a}")))
            }
        }
    }

    /// `φ_a(ξ) = ⟨ξ|R_a⟩` for `ξ ∈ Ker(V_{b_N}*)`.
    pub fn apply(&self, rep: &ShiftRep, a: &LatticePoint, xi: &GridVector) -> Result<C64> {
        if !rep.in_kernel(&self.cofinal, xi) {
            return Err(Error::GuardViolation(format!("argument is not in Ker(V*) of {}", self.cofinal)));
        }
        Ok(xi.inner(&self.riesz(rep, a)?))
    }

    /// `max ‖E_c^⊥(R_{a+b} − R_a − V_a* R_b)‖` with `c = b_N − a`, over
    /// pairs where `c` lies in the cone. This is additivity
    /// `φ_{a+b} = φ_a + T_aφ_b` tested on `Ker(V_c*)`.
    pub fn additivity_residual(&self, rep: &ShiftRep, pairs: &[Pair]) -> Result<f64> {
        let m = rep.model();
        let mut worst: f64 = 0.0;
        for (a, b) in pairs {
            let c = &self.cofinal - a;
            if !m.cone().contains_lattice(&c)? {
                continue;
            }
            let mut d = self.riesz(rep, &(a + b))?;
            d -= &self.riesz(rep, a)?;
            d -= &rep.apply_vstar(a, &self.riesz(rep, b)?)?;
            worst = worst.max(rep.ker_proj(&c, &d).norm());
        }
        Ok(worst)
    }
}

/// `Γ(a,b) = E_b^⊥ R_a`, the two-cocycle with `⟨ξ|Γ(a,b)⟩ = φ_a(ξ)`.
pub fn gamma_from_phi(phi: &OneCocycle) -> TwoCocycle {
    TwoCocycle {
        kind: CocycleKind::Custom { label: "from one-cocycle".into() },
        rule: Rule::FromPhi(Box::new(phi.clone())),
    }
}

/// `max ‖Γ(a,b) − E_b^⊥ Γ(a,b+c)‖` over the triples.
pub fn nesting_residual(rep: &ShiftRep, gamma: &TwoCocycle, triples: &[Triple]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (a, b, c) in triples {
        let small = gamma.eval(rep, a, b)?;
        let big = gamma.eval(rep, a, &(b + c))?;
        worst = worst.max((&small - &rep.ker_proj(b, &big)).norm());
    }
    Ok(worst)
}

/// `φ_a(ξ) = ⟨ξ|Γ(a, b_N)⟩`, after checking on the triples that the
/// restrictions `Γ(a,b)` are nested.
pub fn phi_from_gamma(
    rep: &ShiftRep,
    gamma: &TwoCocycle,
    cofinal: &LatticePoint,
    triples: &[Triple],
    tol: f64,
) -> Result<OneCocycle> {
    let res = nesting_residual(rep, gamma, triples)?;
    if res > tol {
        return Err(Error::Consistency(res));
    }
    Ok(OneCocycle { cofinal: cofinal.clone(), rule: OneRule::FromGamma(gamma.clone()) })
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub max_residual: f64,
    pub kernel_residual: f64,
    pub worst: Option<Triple>,
    pub guard_violations: Vec<(Triple, String)>,
    pub checked: usize,
    pub pass: bool,
}

/// Evaluates `Γ(a,b) + V_bΓ(a+b,c) − Γ(a,b+c) − V_bΓ(b,c)` and the kernel
/// condition on every triple. Triples that hit the window edge are listed
/// and make the report fail.
pub fn verify_two_cocycle(rep: &ShiftRep, gamma: &TwoCocycle, triples: &[Triple], tol: f64) -> Result<VerifyReport> {
    let mut cache: HashMap<Pair, GridVector> = HashMap::new();
    let mut kernel_residual: f64 = 0.0;
    let mut eval = |a: &LatticePoint, b: &LatticePoint, kr: &mut f64| -> Result<GridVector> {
        let key = (a.clone(), b.clone());
        if let Some(v) = cache.get(&key) {
            return Ok(v.clone());
        }
        let v = gamma.eval(rep, a, b)?;
        *kr = kr.max((&v - &rep.ker_proj(b, &v)).norm());
        cache.insert(key, v.clone());
        Ok(v)
    };
    let mut max_residual: f64 = 0.0;
    let mut worst = None;
    let mut guard_violations = Vec::new();
    let mut checked = 0;
    for (a, b, c) in triples {
        let ab = a + b;
        let bc = b + c;
        let attempt = (|| -> Result<f64> {
            let mut d = eval(a, b, &mut kernel_residual)?;
            d += &rep.apply_v(b, &eval(&ab, c, &mut kernel_residual)?)?;
            d -= &eval(a, &bc, &mut kernel_residual)?;
            d -= &rep.apply_v(b, &eval(b, c, &mut kernel_residual)?)?;
            Ok(d.norm())
        })();
        match attempt {
            Ok(r) => {
                checked += 1;
                if r > max_residual || worst.is_none() {
                    max_residual = max_residual.max(r);
                    worst = Some((a.clone(), b.clone(), c.clone()));
                }
            }
            Err(e @ Error::GuardViolation(_)) => {
                guard_violations.push(((a.clone(), b.clone(), c.clone()), e.to_string()));
            }
            Err(e) => return Err(e),
        }
    }
    let pass = guard_violations.is_empty() && max_residual <= tol && kernel_residual <= tol;
    Ok(VerifyReport { max_residual, kernel_residual, worst, guard_violations, checked, pass })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Feasible,
    Infeasible,
    NotConverged,
    /// Residual too large but no obstruction found.
    Inconclusive,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Feasible => "FEASIBLE",
            SolveStatus::Infeasible => "INFEASIBLE",
            SolveStatus::NotConverged => "NOT_CONVERGED",
            SolveStatus::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    pub lsq: LsqOptions,
    /// Relative residual above which the equation counts as infeasible.
    pub threshold: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { lsq: LsqOptions::default(), threshold: 1e-3 }
    }
}

#[derive(Clone, Debug)]
pub struct CoboundarySolution {
    pub status: SolveStatus,
    /// Least-squares section, returned in every status.
    pub section: CoherentSection,
    pub residual: f64,
    pub iterations: usize,
    pub rhs_norm: f64,
    /// `max_a ‖ξ_a‖` of the returned section.
    pub section_norm: f64,
    pub equations: usize,
    pub unknowns: usize,
}

struct Layout {
    points: Vec<LatticePoint>,
    offset: HashMap<LatticePoint, usize>,
    rows: HashMap<LatticePoint, usize>,
    pairs: Vec<Pair>,
    pair_offset: Vec<usize>,
    back: HashMap<LatticePoint, Vec<Option<usize>>>,
    y_cells: usize,
    unknowns: usize,
    equations: usize,
}

impl Layout {
    fn new(model: &PSpaceModel, sample: &LatticeSample) -> Result<Self> {
        let y_cells = model.y_cells();
        let mut offset = HashMap::new();
        let mut rows = HashMap::new();
        let mut unknowns = 0;
        for a in &sample.points {
            let r = model.t_shift(a).max(0) as usize;
            if r > model.n_t() {
                return Err(Error::GuardViolation(format!("strip of {a} exceeds n_t = {}", model.n_t())));
            }
            offset.insert(a.clone(), unknowns);
            rows.insert(a.clone(), r);
            unknowns += y_cells * r;
        }
        let pairs = sample.pairs();
        let mut pair_offset = Vec::with_capacity(pairs.len());
        let mut back = HashMap::new();
        let mut equations = 0;
        for (a, b) in &pairs {
            pair_offset.push(equations);
            equations += y_cells * rows[&(a + b)];
            back.entry(a.clone()).or_insert_with(|| (0..y_cells).map(|y| model.y_translate(y, a, -1)).collect());
            let _ = b;
        }
        Ok(Layout {
            points: sample.points.clone(),
            offset,
            rows,
            pairs,
            pair_offset,
            back,
            y_cells,
            unknowns,
            equations,
        })
    }

    /// `x ↦ [ξ_{a+b} − ξ_a − V_a ξ_b]` restricted to the strip of `a+b`.
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.equations];
        for (p, (a, b)) in self.pairs.iter().enumerate() {
            let ab = a + b;
            let (ra, rb, rab) = (self.rows[a], self.rows[b], self.rows[&ab]);
            let (oa, ob, oab) = (self.offset[a], self.offset[b], self.offset[&ab]);
            let back = &self.back[a];
            let base = self.pair_offset[p];
            for y in 0..self.y_cells {
                let row = &mut out[base + y * rab..base + (y + 1) * rab];
                row.copy_from_slice(&x[oab + y * rab..oab + (y + 1) * rab]);
                for t in 0..ra {
                    row[t] -= x[oa + y * ra + t];
                }
                if let Some(y0) = back[y] {
                    for t in 0..rb {
                        row[ra + t] -= x[ob + y0 * rb + t];
                    }
                }
            }
        }
        out
    }

    fn adjoint(&self, z: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.unknowns];
        for (p, (a, b)) in self.pairs.iter().enumerate() {
            let ab = a + b;
            let (ra, rb, rab) = (self.rows[a], self.rows[b], self.rows[&ab]);
            let (oa, ob, oab) = (self.offset[a], self.offset[b], self.offset[&ab]);
            let back = &self.back[a];
            let base = self.pair_offset[p];
            for y in 0..self.y_cells {
                let row = &z[base + y * rab..base + (y + 1) * rab];
                for t in 0..rab {
                    out[oab + y * rab + t] += row[t];
                }
                for t in 0..ra {
                    out[oa + y * ra + t] -= row[t];
                }
                if let Some(y0) = back[y] {
                    for t in 0..rb {
                        out[ob + y0 * rb + t] -= row[ra + t];
                    }
                }
            }
        }
        out
    }
}

/// Least-squares solution of `V_aΓ(a,b) = ξ_{a+b} − ξ_a − V_aξ_b` over the
/// pairs of `sample`, with each `ξ_a` parametrized on its strip. Starting
/// CGLS from zero selects the minimal-norm solution.
pub fn solve_coboundary(
    rep: &ShiftRep,
    gamma: &TwoCocycle,
    sample: &LatticeSample,
    opts: &SolveOptions,
) -> Result<CoboundarySolution> {
    let m = rep.model();
    if sample.points.is_empty() {
        return Err(Error::EmptySample("coboundary solve needs sample points".into()));
    }
    let layout = Layout::new(m, sample)?;
    if layout.pairs.is_empty() {
        return Err(Error::EmptySample("no pair (a, b) with a+b inside the level".into()));
    }
    let nt = m.n_t();
    let mut rhs = Vec::with_capacity(layout.equations);
    for (a, b) in &layout.pairs {
        let v = rep.apply_v(a, &gamma.eval(rep, a, b)?)?;
        let rab = layout.rows[&(a + b)];
        for y in 0..layout.y_cells {
            rhs.extend_from_slice(&v.values[y * nt..y * nt + rab]);
        }
    }
    let res = cgls(|x| layout.apply(x), |z| layout.adjoint(z), &rhs, layout.unknowns, &opts.lsq);
    let mut table = HashMap::new();
    let mut section_norm: f64 = 0.0;
    for a in &layout.points {
        let r = layout.rows[a];
        let o = layout.offset[a];
        let mut v = m.zeros();
        for y in 0..layout.y_cells {
            v.values[y * nt..y * nt + r].copy_from_slice(&res.x[o + y * r..o + (y + 1) * r]);
        }
        section_norm = section_norm.max(v.norm());
        table.insert(a.clone(), v);
    }
    let residual = res.relative_residual();
    let status = if !res.converged {
        SolveStatus::NotConverged
    } else if residual > opts.threshold {
        SolveStatus::Infeasible
    } else {
        SolveStatus::Feasible
    };
    Ok(CoboundarySolution {
        status,
        section: CoherentSection::from_table(table),
        residual,
        iterations: res.iterations,
        rhs_norm: res.rhs_norm * m.cell_weight().sqrt(),
        section_norm,
        equations: layout.equations,
        unknowns: layout.unknowns,
    })
}

#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub window: f64,
    pub status: SolveStatus,
    pub residual: f64,
    pub section_norm: f64,
}

/// Runs the coboundary solver at each window size; `build` returns the
/// representation, cocycle and sample for a size.
pub fn window_sweep<F>(windows: &[f64], opts: &SolveOptions, mut build: F) -> Result<Vec<SweepPoint>>
where
    F: FnMut(f64) -> Result<(ShiftRep, TwoCocycle, LatticeSample)>,
{
    windows
        .iter()
        .map(|&w| {
            let (rep, gamma, sample) = build(w)?;
            let sol = solve_coboundary(&rep, &gamma, &sample, opts)?;
            Ok(SweepPoint { window: w, status: sol.status, residual: sol.residual, section_norm: sol.section_norm })
        })
        .collect()
}

/// True when every doubling step shrinks the residual by less than a factor
/// of `factor`.
pub fn residual_not_decaying(points: &[SweepPoint], factor: f64) -> bool {
    points.windows(2).all(|w| w[1].residual * factor > w[0].residual)
}
