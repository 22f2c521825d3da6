//! Discretized P-spaces `A ≅ (R^{d−1}/H₀) × R₊` in boundary-chart coordinates.
//!
//! A model is a cone, a lattice subgroup `H` and a linear boundary function
//! `φ(y) = ⟨c|y⟩`. The translation action of a semigroup element
//! `a = (a₁, a₂)` moves `y` by `a₁` and `t` by `r(a) = a₂ − ⟨c|a₁⟩`, which
//! is independent of `y` for linear `φ`.
//!
//! Grid layout: compact `y`-axes carry `m` cells over one period (total
//! measure 1), window axes carry cells of width `h` at the points
//! `−R + h, …, R`, and the `t`-axis carries `n_t` cells of width `h` at
//! `0, h, …`. Cells are flattened with `t` fastest.

use num_complex::Complex64 as C64;
use num_rational::Rational64;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::cone::{rational_rank, Cone, LatticePoint};
use crate::error::{Error, Result};
use crate::grid::GridVector;

fn to_f64(r: Rational64) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubgroupH {
    basis: Vec<Vec<Rational64>>,
    h0_basis: Vec<Vec<Rational64>>,
}

impl SubgroupH {
    pub fn new(d: usize, basis: Vec<Vec<Rational64>>) -> Result<Self> {
        for b in &basis {
            if b.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: b.len() });
            }
        }
        if basis.len() >= d {
            return Err(Error::InvalidModel(format!("H has rank {} but must be below {d}", basis.len())));
        }
        if !basis.is_empty() && rational_rank(&basis) < basis.len() {
            return Err(Error::InvalidModel("H basis is linearly dependent".into()));
        }
        let h0_basis: Vec<Vec<Rational64>> = basis.iter().map(|b| b[..d - 1].to_vec()).collect();
        if !h0_basis.is_empty() && rational_rank(&h0_basis) < basis.len() {
            return Err(Error::InvalidModel("H contains a vertical element (0, r)".into()));
        }
        Ok(SubgroupH { basis, h0_basis })
    }

    pub fn trivial() -> Self {
        SubgroupH { basis: Vec::new(), h0_basis: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<Rational64>] {
        &self.basis
    }

    pub fn h0_basis(&self) -> &[Vec<Rational64>] {
        &self.h0_basis
    }

    /// Distance from `v` to the real span L(H), relative to `|v|`.
    pub fn span_residual(&self, v: &[f64]) -> f64 {
        let vn: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if vn == 0.0 {
            return 0.0;
        }
        if self.basis.is_empty() {
            return 1.0;
        }
        let d = v.len();
        let k = self.basis.len();
        let b = nalgebra::DMatrix::from_fn(d, k, |i, j| to_f64(self.basis[j][i]));
        let y = nalgebra::DVector::from_column_slice(v);
        let svd = b.clone().svd(true, true);
        let coef = svd.solve(&y, 1e-12).expect("svd solve");
        (b * coef - y).norm() / vn
    }
}

/// Linear boundary function `φ(y) = ⟨c|y⟩` with rational coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryPhi {
    pub coefficients: Vec<Rational64>,
}

impl BoundaryPhi {
    pub fn eval(&self, y: &[f64]) -> f64 {
        self.coefficients.iter().zip(y).map(|(c, y)| to_f64(*c) * y).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AxisKind {
    /// Circle of the given period.
    Compact { period: Rational64 },
    /// Truncation of a line to `(−R, R]`.
    Window,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub kind: AxisKind,
    pub cells: usize,
    pub cells_per_step: i64,
    pub origin: f64,
    pub spacing: f64,
    pub measure: f64,
}

/// Everything needed to build a [`PSpaceModel`].
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub name: String,
    pub cone_generators: Vec<Vec<Rational64>>,
    pub h_basis: Vec<Vec<Rational64>>,
    pub phi: Vec<Rational64>,
    pub m: usize,
    pub radius: Rational64,
    pub h: Rational64,
    pub n_t: usize,
}

fn ints(v: &[i64]) -> Vec<Rational64> {
    v.iter().map(|&x| Rational64::from_integer(x)).collect()
}

impl ModelSpec {
    /// Codimension-one torus model over R₊³.
    pub fn c1(m: usize, h: Rational64, n_t: usize) -> Self {
        ModelSpec {
            name: "C1".into(),
            cone_generators: vec![ints(&[1, 0, 0]), ints(&[0, 1, 0]), ints(&[0, 0, 1])],
            h_basis: vec![ints(&[1, 0, -1]), ints(&[0, 1, -1])],
            phi: ints(&[-1, -1]),
            m,
            radius: Rational64::zero(),
            h,
            n_t,
        }
    }

    /// Codimension-one circle model over R₊².
    pub fn c1b(m: usize, h: Rational64, n_t: usize) -> Self {
        ModelSpec {
            name: "C1b".into(),
            cone_generators: vec![ints(&[1, 0]), ints(&[0, 1])],
            h_basis: vec![ints(&[1, -1])],
            phi: ints(&[-1]),
            m,
            radius: Rational64::zero(),
            h,
            n_t,
        }
    }

    /// Half-plane model `R × R₊` over R₊², truncated to `|y| ≤ R`.
    pub fn c2(radius: Rational64, h: Rational64, n_t: usize) -> Self {
        ModelSpec {
            name: "C2".into(),
            cone_generators: vec![ints(&[1, 0]), ints(&[0, 1])],
            h_basis: Vec::new(),
            phi: ints(&[0]),
            m: 0,
            radius,
            h,
            n_t,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PSpaceModel {
    pub name: String,
    cone: Cone,
    subgroup: SubgroupH,
    phi: BoundaryPhi,
    m: usize,
    radius: Rational64,
    h: Rational64,
    n_t: usize,
    axes: Vec<Axis>,
    strides: Vec<usize>,
    y_cells: usize,
    cell_weight: f64,
    phi_int: Vec<i64>,
}

impl PSpaceModel {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        let cone = Cone::new(spec.cone_generators.clone())?;
        let d = cone.dim();
        if d < 2 {
            return Err(Error::InvalidModel("P-space models need d ≥ 2".into()));
        }
        if !spec.h.is_positive() {
            return Err(Error::InvalidModel("t_step h must be positive".into()));
        }
        if spec.n_t == 0 {
            return Err(Error::InvalidModel("t_count must be positive".into()));
        }
        if spec.phi.len() != d - 1 {
            return Err(Error::DimensionMismatch { expected: d - 1, got: spec.phi.len() });
        }
        let subgroup = SubgroupH::new(d, spec.h_basis.clone())?;
        let phi = BoundaryPhi { coefficients: spec.phi.clone() };

        for (hb, h0) in subgroup.basis.iter().zip(&subgroup.h0_basis) {
            let lhs: Rational64 = phi.coefficients.iter().zip(h0).map(|(c, y)| c * y).sum();
            if lhs != hb[d - 1] {
                return Err(Error::InvalidModel(format!(
                    "phi is not H-equivariant: <c|h1> = {lhs}, h2 = {}",
                    hb[d - 1]
                )));
            }
        }
        // P-space condition: r(g) ≥ 0 on every generator.
        for g in cone.generators() {
            let r: Rational64 =
                g[d - 1] - phi.coefficients.iter().zip(&g[..d - 1]).map(|(c, y)| c * y).sum::<Rational64>();
            if r.is_negative() {
                return Err(Error::InvalidModel(format!("phi violates the P-space condition at generator {g:?}")));
            }
        }
        let mut phi_int = Vec::with_capacity(d - 1);
        for c in &phi.coefficients {
            if !c.is_integer() {
                return Err(Error::InvalidModel(
                    "grid incompatible: t-shift is not a whole number of cells for unit steps".into(),
                ));
            }
            phi_int.push(c.to_integer());
        }

        let mut period: Vec<Option<Rational64>> = vec![None; d - 1];
        for h0 in &subgroup.h0_basis {
            let nz: Vec<usize> = (0..d - 1).filter(|&i| !h0[i].is_zero()).collect();
            if nz.len() != 1 || period[nz[0]].is_some() {
                return Err(Error::InvalidModel("H0 basis must consist of multiples of distinct axis vectors".into()));
            }
            period[nz[0]] = Some(h0[nz[0]].abs());
        }

        let h = spec.h;
        let hf = to_f64(h);
        let mut axes = Vec::with_capacity(d - 1);
        for p in period {
            let axis = match p {
                Some(p) => {
                    if spec.m == 0 {
                        return Err(Error::InvalidModel("torus resolution m must be positive".into()));
                    }
                    let cps = h * Rational64::from_integer(spec.m as i64) / p;
                    if !cps.is_integer() {
                        return Err(Error::InvalidModel(format!(
                            "grid incompatible: h·m/period = {cps} is not an integer"
                        )));
                    }
                    Axis {
                        kind: AxisKind::Compact { period: p },
                        cells: spec.m,
                        cells_per_step: cps.to_integer(),
                        origin: 0.0,
                        spacing: to_f64(p) / spec.m as f64,
                        measure: 1.0 / spec.m as f64,
                    }
                }
                None => {
                    if !spec.radius.is_positive() {
                        return Err(Error::InvalidModel("window radius R must be positive".into()));
                    }
                    let n = Rational64::from_integer(2) * spec.radius / h;
                    if !n.is_integer() {
                        return Err(Error::InvalidModel("2R/h must be an integer".into()));
                    }
                    Axis {
                        kind: AxisKind::Window,
                        cells: n.to_integer() as usize,
                        cells_per_step: 1,
                        origin: -to_f64(spec.radius) + hf,
                        spacing: hf,
                        measure: hf,
                    }
                }
            };
            axes.push(axis);
        }
        let mut strides = vec![1usize; d - 1];
        for i in (0..d.saturating_sub(2)).rev() {
            strides[i] = strides[i + 1] * axes[i + 1].cells;
        }
        let y_cells: usize = axes.iter().map(|a| a.cells).product();
        let cell_weight = axes.iter().map(|a| a.measure).product::<f64>() * hf;
        Ok(PSpaceModel {
            name: spec.name,
            cone,
            subgroup,
            phi,
            m: spec.m,
            radius: spec.radius,
            h,
            n_t: spec.n_t,
            axes,
            strides,
            y_cells,
            cell_weight,
            phi_int,
        })
    }

    pub fn c1_default() -> Self {
        PSpaceModel::new(ModelSpec::c1(8, Rational64::new(1, 8), 256)).expect("C1 defaults are valid")
    }

    pub fn dim(&self) -> usize {
        self.cone.dim()
    }

    pub fn cone(&self) -> &Cone {
        &self.cone
    }

    pub fn subgroup(&self) -> &SubgroupH {
        &self.subgroup
    }

    pub fn phi(&self) -> &BoundaryPhi {
        &self.phi
    }

    pub fn codim(&self) -> usize {
        self.dim() - self.subgroup.rank()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn radius(&self) -> Rational64 {
        self.radius
    }

    pub fn step(&self) -> Rational64 {
        self.h
    }

    pub fn h(&self) -> f64 {
        to_f64(self.h)
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn y_cells(&self) -> usize {
        self.y_cells
    }

    pub fn len(&self) -> usize {
        self.y_cells * self.n_t
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_weight(&self) -> f64 {
        self.cell_weight
    }

    /// Measure of a single `y`-cell.
    pub fn y_cell_measure(&self) -> f64 {
        self.axes.iter().map(|a| a.measure).product()
    }

    pub fn y_measure(&self) -> f64 {
        self.axes.iter().map(|a| a.measure * a.cells as f64).product()
    }

    pub fn zeros(&self) -> GridVector {
        GridVector::zeros(self.len(), self.cell_weight)
    }

    pub fn index(&self, y: usize, t: usize) -> usize {
        y * self.n_t + t
    }

    pub fn split(&self, idx: usize) -> (usize, usize) {
        (idx / self.n_t, idx % self.n_t)
    }

    pub fn y_flat(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn y_multi(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.axes.len()];
        for (i, s) in self.strides.iter().enumerate() {
            out[i] = flat / s;
            flat %= s;
        }
        out
    }

    pub fn y_coords(&self, flat: usize) -> Vec<f64> {
        self.y_multi(flat).iter().zip(&self.axes).map(|(&i, ax)| ax.origin + i as f64 * ax.spacing).collect()
    }

    /// Converts real coordinates into lattice steps, failing when they are
    /// not multiples of `h`.
    pub fn lattice_from_real(&self, x: &[f64]) -> Result<LatticePoint> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        let h = self.h();
        x.iter()
            .map(|&v| {
                let k = (v / h).round();
                if (v / h - k).abs() > 1e-9 {
                    Err(Error::InvalidModel(format!("{v} is not a multiple of h = {h}")))
                } else {
                    Ok(k as i64)
                }
            })
            .collect::<Result<Vec<i64>>>()
            .map(LatticePoint)
    }

    pub fn check_in_cone(&self, a: &LatticePoint) -> Result<()> {
        if self.cone.contains_lattice(a)? {
            Ok(())
        } else {
            Err(Error::NotInCone(a.to_string()))
        }
    }

    /// `r(a)/h`: the number of `t`-cells a point moves under `a`.
    pub fn t_shift(&self, a: &LatticePoint) -> i64 {
        let d = self.dim();
        a.0[d - 1] - self.phi_int.iter().zip(&a.0[..d - 1]).map(|(c, k)| c * k).sum::<i64>()
    }

    /// Real value of `r(a)`.
    pub fn r(&self, a: &LatticePoint) -> f64 {
        self.t_shift(a) as f64 * self.h()
    }

    /// Translate a flat `y`-index by `sign · a₁`; `None` when a window axis
    /// is left.
    pub fn y_translate(&self, y: usize, a: &LatticePoint, sign: i64) -> Option<usize> {
        let multi = self.y_multi(y);
        let mut out = 0usize;
        for (i, ax) in self.axes.iter().enumerate() {
            let s = multi[i] as i64 + sign * a.0[i] * ax.cells_per_step;
            let n = ax.cells as i64;
            let j = match ax.kind {
                AxisKind::Compact { .. } => s.rem_euclid(n),
                AxisKind::Window => {
                    if s < 0 || s >= n {
                        return None;
                    }
                    s
                }
            };
            out += j as usize * self.strides[i];
        }
        Some(out)
    }

    /// The cell `x ⊞ a`, or `None` (OUT_OF_WINDOW).
    pub fn act(&self, cell: usize, a: &LatticePoint) -> Result<Option<usize>> {
        self.check_in_cone(a)?;
        let (y, t) = self.split(cell);
        let Some(y2) = self.y_translate(y, a, 1) else {
            return Ok(None);
        };
        let t2 = t as i64 + self.t_shift(a);
        if t2 < 0 || t2 >= self.n_t as i64 {
            return Ok(None);
        }
        Ok(Some(self.index(y2, t2 as usize)))
    }

    /// Cells of `A ∖ A⊞a`: those with `t`-index below `r(a)/h`.
    pub fn strip_mask(&self, a: &LatticePoint) -> Vec<bool> {
        let r = self.t_shift(a).max(0) as usize;
        (0..self.len()).map(|i| i % self.n_t < r).collect()
    }

    pub fn strip_indicator(&self, a: &LatticePoint) -> GridVector {
        let r = self.t_shift(a).max(0) as usize;
        let mut v = self.zeros();
        for y in 0..self.y_cells {
            for t in 0..r.min(self.n_t) {
                v.values[self.index(y, t)] = C64::new(1.0, 0.0);
            }
        }
        v
    }

    /// Strip measure `ρ(a) = ‖1_{A∖A⊞a}‖²`, defined for codimension one.
    pub fn rho(&self, a: &LatticePoint) -> Result<f64> {
        if self.codim() != 1 {
            return Err(Error::Codimension(self.codim()));
        }
        self.check_in_cone(a)?;
        let cells = self.t_shift(a).max(0) as usize;
        if cells > self.n_t {
            return Err(Error::GuardViolation(format!("strip of {a} exceeds n_t = {}", self.n_t)));
        }
        Ok((cells * self.y_cells) as f64 * self.cell_weight)
    }

    /// The functional `γ₃` with `ρ(a) = ⟨γ₃|a⟩`, solved from `ρ` at the
    /// cone generators.
    pub fn gamma3(&self) -> Result<Vec<f64>> {
        if self.codim() != 1 {
            return Err(Error::Codimension(self.codim()));
        }
        let d = self.dim();
        let h = self.h();
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for g in self.cone.generators() {
            let lcm = g.iter().fold(1i64, |acc, x| num_integer_lcm(acc, *x.denom()));
            let k = LatticePoint(g.iter().map(|x| (x * Rational64::from_integer(lcm)).to_integer()).collect());
            let val = self.rho(&k)?;
            rows.push(k.to_real(h));
            rhs.push(val);
        }
        let a = nalgebra::DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
        let svd = a.svd(true, true);
        if svd.rank(1e-10) < d {
            return Err(Error::Singular("generator evaluations do not determine gamma3".into()));
        }
        let sol = svd.solve(&nalgebra::DVector::from_vec(rhs), 1e-12).map_err(|e| Error::Singular(e.to_string()))?;
        Ok(sol.iter().copied().collect())
    }

    /// Checks `φ(y + h₁) = φ(y) + h₂` at every grid point for each basis
    /// element of `H`; returns the largest defect.
    pub fn equivariance_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for hb in self.subgroup.basis() {
            let h1: Vec<f64> = hb[..d - 1].iter().map(|x| to_f64(*x)).collect();
            let h2 = to_f64(hb[d - 1]);
            for y in 0..self.y_cells {
                let yc = self.y_coords(y);
                let shifted: Vec<f64> = yc.iter().zip(&h1).map(|(a, b)| a + b).collect();
                worst = worst.max((self.phi.eval(&shifted) - self.phi.eval(&yc) - h2).abs());
            }
        }
        worst
    }

    /// Serializes nonzero cells as `y-index…,t-index,re,im` lines.
    pub fn write_records(&self, v: &GridVector) -> String {
        let mut out = format!("# gridvector model={} y_axes={} n_t={}\n", self.name, self.axes.len(), self.n_t);
        for (i, z) in v.values.iter().enumerate() {
            if z.re == 0.0 && z.im == 0.0 {
                continue;
            }
            let (y, t) = self.split(i);
            for j in self.y_multi(y) {
                out.push_str(&format!("{j},"));
            }
            out.push_str(&format!("{t},{:.16e},{:.16e}\n", z.re, z.im));
        }
        out
    }

    pub fn read_records(&self, text: &str) -> Result<GridVector> {
        let mut v = self.zeros();
        let na = self.axes.len();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != na + 3 {
                return Err(Error::Malformed(format!("line {}: expected {} fields", lineno + 1, na + 3)));
            }
            let bad = |what: &str| Error::Malformed(format!("line {}: bad {what}", lineno + 1));
            let mut multi = Vec::with_capacity(na);
            for (k, ax) in self.axes.iter().enumerate() {
                let j: usize = fields[k].trim().parse().map_err(|_| bad("y-index"))?;
                if j >= ax.cells {
                    return Err(bad("y-index"));
                }
                multi.push(j);
            }
            let t: usize = fields[na].trim().parse().map_err(|_| bad("t-index"))?;
            if t >= self.n_t {
                return Err(bad("t-index"));
            }
            let re: f64 = fields[na + 1].trim().parse().map_err(|_| bad("real part"))?;
            let im: f64 = fields[na + 2].trim().parse().map_err(|_| bad("imaginary part"))?;
            let idx = self.index(self.y_flat(&multi), t);
            v.values[idx] = C64::new(re, im);
        }
        Ok(v)
    }
}

fn num_integer_lcm(a: i64, b: i64) -> i64 {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }
    (a / gcd(a, b) * b).abs()
}
