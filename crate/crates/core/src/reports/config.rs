//! Experiment configuration files (TOML).

use std::path::Path;

use num_rational::Rational64;
use num_traits::Signed;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::pspace::ModelSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    ModelInfo,
    Verify,
    Classify,
    Admissibility,
    Product,
    Reconstruct,
    Iso,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::ModelInfo => "model-info",
            Suite::Verify => "verify",
            Suite::Classify => "classify",
            Suite::Admissibility => "admissibility",
            Suite::Product => "product",
            Suite::Reconstruct => "reconstruct",
            Suite::Iso => "iso",
        }
    }

    pub fn default_tol(self) -> f64 {
        match self {
            Suite::ModelInfo | Suite::Verify | Suite::Product => 1e-10,
            Suite::Classify | Suite::Reconstruct | Suite::Iso => 1e-8,
            Suite::Admissibility => 1e-9,
        }
    }
}

/// An exact rational written as an integer or as `"p/q"`.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum RationalValue {
    Int(i64),
    Text(String),
}

impl RationalValue {
    pub fn parse(&self, field: &str) -> Result<Rational64> {
        match self {
            RationalValue::Int(k) => Ok(Rational64::from_integer(*k)),
            RationalValue::Text(s) => {
                let bad = || Error::Config(format!("{field}: cannot read {s:?} as a rational"));
                let (num, den) = match s.split_once('/') {
                    Some((n, d)) => (n.trim(), d.trim()),
                    None => (s.trim(), "1"),
                };
                let num: i64 = num.parse().map_err(|_| bad())?;
                let den: i64 = den.parse().map_err(|_| bad())?;
                if den == 0 {
                    return Err(bad());
                }
                Ok(Rational64::new(num, den))
            }
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    /// `c1`, `c1b` or `c2`; omitted for an explicit model.
    pub preset: Option<String>,
    pub name: Option<String>,
    pub m: Option<usize>,
    pub radius: Option<RationalValue>,
    pub h: RationalValue,
    pub n_t: usize,
    pub generators: Option<Vec<Vec<RationalValue>>>,
    pub h_basis: Option<Vec<Vec<RationalValue>>>,
    pub phi: Option<Vec<RationalValue>>,
}

impl ModelBlock {
    pub fn spec(&self) -> Result<ModelSpec> {
        let h = self.h.parse("model.h")?;
        if !h.is_positive() {
            return Err(Error::Config(format!("model.h must be positive, got {h}")));
        }
        if self.n_t == 0 {
            return Err(Error::Config("model.n_t must be positive".into()));
        }
        let need_m = || -> Result<usize> {
            match self.m {
                Some(m) if m > 0 => Ok(m),
                Some(_) => Err(Error::Config("model.m must be positive".into())),
                None => Err(Error::Config("model.m is required for this preset".into())),
            }
        };
        let radius = self.radius.as_ref().map(|r| r.parse("model.radius")).transpose()?;
        let mut spec = match self.preset.as_deref() {
            Some("c1") => ModelSpec::c1(need_m()?, h, self.n_t),
            Some("c1b") => ModelSpec::c1b(need_m()?, h, self.n_t),
            Some("c2") => {
                let r = radius.ok_or_else(|| Error::Config("model.radius is required for c2".into()))?;
                if !r.is_positive() {
                    return Err(Error::Config(format!("model.radius must be positive, got {r}")));
                }
                ModelSpec::c2(r, h, self.n_t)
            }
            Some(other) => return Err(Error::Config(format!("model.preset: unknown preset {other:?}"))),
            None => {
                let rows = |v: &Option<Vec<Vec<RationalValue>>>, field: &str| -> Result<Vec<Vec<Rational64>>> {
                    v.as_ref()
                        .map(|rows| {
                            rows.iter()
                                .map(|r| r.iter().map(|x| x.parse(field)).collect::<Result<Vec<_>>>())
                                .collect::<Result<Vec<_>>>()
                        })
                        .transpose()
                        .map(|x| x.unwrap_or_default())
                };
                let generators = rows(&self.generators, "model.generators")?;
                if generators.is_empty() {
                    return Err(Error::Config("model.generators is required without a preset".into()));
                }
                let phi = self
                    .phi
                    .as_ref()
                    .ok_or_else(|| Error::Config("model.phi is required without a preset".into()))?
                    .iter()
                    .map(|x| x.parse("model.phi"))
                    .collect::<Result<Vec<_>>>()?;
                ModelSpec {
                    name: "custom".into(),
                    cone_generators: generators,
                    h_basis: rows(&self.h_basis, "model.h_basis")?,
                    phi,
                    m: self.m.unwrap_or(0),
                    radius: radius.unwrap_or(Rational64::from_integer(0)),
                    h,
                    n_t: self.n_t,
                }
            }
        };
        if let Some(name) = &self.name {
            spec.name = name.clone();
        }
        Ok(spec)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CocycleKindConfig {
    Zero,
    U,
    WFourier,
    WFp,
    Coboundary,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CocycleBlock {
    pub id: String,
    pub kind: CocycleKindConfig,
    pub lambda1: Option<Vec<f64>>,
    pub lambda2: Option<Vec<f64>>,
    /// Fourier wave numbers, one per `y`-axis.
    pub k: Option<Vec<i64>>,
    pub p: Option<f64>,
    /// Cells zeroed at each window edge for `w` cocycles.
    #[serde(default)]
    pub guard: usize,
    /// Entry scale of the random section behind a coboundary.
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    /// Size of a fault injected at the first sampled pair.
    pub fault: Option<f64>,
}

fn default_amplitude() -> f64 {
    0.3
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleBlock {
    #[serde(default = "default_level")]
    pub level: i64,
    #[serde(default = "default_count")]
    pub count: usize,
    pub seed: Option<u64>,
}

fn default_level() -> i64 {
    2
}

fn default_count() -> usize {
    100
}

impl Default for SampleBlock {
    fn default() -> Self {
        SampleBlock { level: default_level(), count: default_count(), seed: None }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    #[serde(default = "default_solver_tol")]
    pub tol: f64,
    #[serde(default = "default_reg")]
    pub reg: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Relative residual above which a linear system counts as infeasible.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_solver_tol() -> f64 {
    1e-13
}

fn default_reg() -> f64 {
    1e-12
}

fn default_max_iter() -> usize {
    20_000
}

fn default_threshold() -> f64 {
    1e-3
}

impl Default for SolverBlock {
    fn default() -> Self {
        SolverBlock {
            tol: default_solver_tol(),
            reg: default_reg(),
            max_iter: default_max_iter(),
            threshold: default_threshold(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MultiplierChoice {
    /// `α ≡ 1`.
    #[default]
    One,
    /// Least-squares solve of the admissibility relation.
    Solve,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductBlock {
    /// Cocycle id; the first cocycle when omitted.
    pub cocycle: Option<String>,
    #[serde(default)]
    pub multiplier: MultiplierChoice,
    #[serde(default = "default_vectors")]
    pub vectors: usize,
    #[serde(default = "default_vector_amplitude")]
    pub amplitude: f64,
    /// Cells kept zero at window edges in random test functions.
    #[serde(default)]
    pub guard: usize,
    #[serde(default)]
    pub swapped_weyl: bool,
}

fn default_vectors() -> usize {
    8
}

fn default_vector_amplitude() -> f64 {
    0.2
}

impl Default for ProductBlock {
    fn default() -> Self {
        ProductBlock {
            cocycle: None,
            multiplier: MultiplierChoice::One,
            vectors: default_vectors(),
            amplitude: default_vector_amplitude(),
            guard: 0,
            swapped_weyl: false,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsoBlock {
    pub first: String,
    /// Second cocycle id. Without it the second system is built from the
    /// first by a random coboundary and the matching multiplier.
    pub second: Option<String>,
    /// `y`-translation in cells for `U`; identity when omitted.
    pub translate: Option<Vec<i64>>,
    #[serde(default)]
    pub phase: f64,
    /// Expected outcome; a found obstruction passes when this is `false`.
    pub expect_isomorphic: Option<bool>,
}

#[derive(Clone, Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub suite: Suite,
    #[serde(default)]
    pub seed: u64,
    pub tol: Option<f64>,
    pub model: ModelBlock,
    #[serde(default, rename = "cocycle")]
    pub cocycles: Vec<CocycleBlock>,
    #[serde(default)]
    pub sample: SampleBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub product: ProductBlock,
    pub iso: Option<IsoBlock>,
    #[serde(default)]
    pub output: OutputBlock,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(self.suite.default_tol())
    }

    /// Seed of the triple sample; the run seed unless set separately.
    pub fn sample_seed(&self) -> u64 {
        self.sample.seed.unwrap_or(self.seed)
    }

    pub fn cocycle(&self, id: &str) -> Result<&CocycleBlock> {
        self.cocycles
            .iter()
            .find(|c| c.id == id)
            .ok_or_else(|| Error::Config(format!("no cocycle block with id {id:?}")))
    }

    pub fn validate(&self) -> Result<()> {
        self.model.spec()?;
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                return Err(Error::Config(format!("tol must be positive, got {t}")));
            }
        }
        if self.sample.level < 1 {
            return Err(Error::Config("sample.level must be at least 1".into()));
        }
        if self.sample.count == 0 {
            return Err(Error::Config("sample.count must be positive".into()));
        }
        let s = &self.solver;
        for (name, v) in [("solver.tol", s.tol), ("solver.reg", s.reg), ("solver.threshold", s.threshold)] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if s.max_iter == 0 {
            return Err(Error::Config("solver.max_iter must be positive".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for c in &self.cocycles {
            if !seen.insert(c.id.as_str()) {
                return Err(Error::Config(format!("duplicate cocycle id {:?}", c.id)));
            }
            let need = |field: &str, present: bool| -> Result<()> {
                if present {
                    Ok(())
                } else {
                    Err(Error::Config(format!("cocycle {:?}: {field} is required for this kind", c.id)))
                }
            };
            match c.kind {
                CocycleKindConfig::U => {
                    need("lambda1", c.lambda1.is_some())?;
                    need("lambda2", c.lambda2.is_some())?;
                }
                CocycleKindConfig::WFourier => need("k", c.k.is_some())?,
                CocycleKindConfig::WFp => {
                    need("p", c.p.is_some())?;
                    if !(c.p.unwrap_or(0.0) > 0.0) {
                        return Err(Error::Config(format!("cocycle {:?}: p must be positive", c.id)));
                    }
                }
                CocycleKindConfig::Zero | CocycleKindConfig::Coboundary => {}
            }
            if !(c.amplitude > 0.0) {
                return Err(Error::Config(format!("cocycle {:?}: amplitude must be positive", c.id)));
            }
        }
        let needs_cocycle = !matches!(self.suite, Suite::ModelInfo);
        if needs_cocycle && self.cocycles.is_empty() {
            return Err(Error::Config(format!("suite {} needs at least one [[cocycle]] block", self.suite.name())));
        }
        if let Some(id) = &self.product.cocycle {
            self.cocycle(id)?;
        }
        if self.product.vectors < 2 {
            return Err(Error::Config("product.vectors must be at least 2".into()));
        }
        if !(self.product.amplitude > 0.0) {
            return Err(Error::Config("product.amplitude must be positive".into()));
        }
        match (&self.iso, self.suite) {
            (None, Suite::Iso) => return Err(Error::Config("suite iso needs an [iso] block".into())),
            (Some(iso), _) => {
                self.cocycle(&iso.first)?;
                if let Some(s) = &iso.second {
                    self.cocycle(s)?;
                }
            }
            _ => {}
        }
        Ok(())
    }
}
