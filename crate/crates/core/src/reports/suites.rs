//! Suite runners: each turns a validated config into a [`Report`].

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{CocycleBlock, CocycleKindConfig, ExperimentConfig, MultiplierChoice, Suite};
use super::record::{fmt_pair, fmt_point, fmt_triple, Report, Verdict};
use crate::admissibility::{check_admissibility_necessary, solve_multiplier, w_seed, MultiplierOptions, PhaseCochain};
use crate::classify::classify;
use crate::cocycle::{
    coboundary_from, cofinal_element, fourier_mode, gamma_from_phi, make_u, make_w, phi_from_gamma, sample_on_y,
    translation_difference_norm, verify_two_cocycle, CoherentSection, FpFamily, SolveOptions, SolveStatus, TwoCocycle,
    YFunction,
};
use crate::cone::{sample_triples, with_permutations, LatticePoint, LatticeSample, Triple};
use crate::error::{Error, Result};
use crate::fock::elog::{elog_factorization_check, LeftCoherentSection};
use crate::fock::gns::{reconstruct_rep, GnsOptions};
use crate::fock::iso::{check_iso_conditions, check_projective_iso, transform_multiplier, GridUnitary, UnitarySpec};
use crate::fock::{
    assoc_defect, exp_vector_inner, random_exp_vector_guarded, weyl_exp, ProductSystemModel, WeylConvention,
};
use crate::lsq::LsqOptions;
use crate::pspace::PSpaceModel;
use crate::shift::ShiftRep;

type Pair = (LatticePoint, LatticePoint);

/// Overrides from the command line.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub suite: Option<Suite>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        if let Some(s) = self.suite {
            cfg.suite = s;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
            cfg.sample.seed = None;
        }
        if let Some(t) = self.tol {
            cfg.tol = Some(t);
        }
        cfg.validate()
    }
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    rep: ShiftRep,
    sample: LatticeSample,
    triples: Vec<Triple>,
    tol: f64,
}

struct BuiltCocycle {
    id: String,
    gamma: TwoCocycle,
    /// `g` for `w^g` cocycles.
    g: Option<YFunction>,
    fault: Option<f64>,
}

impl<'a> Context<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        let model = PSpaceModel::new(cfg.model.spec()?).map_err(|e| Error::Config(format!("model: {e}")))?;
        let rep = ShiftRep::new(model);
        let sample = LatticeSample::new(rep.model().cone(), rep.model().step(), cfg.sample.level)?;
        let triples = sample_triples(&sample, cfg.sample.count, cfg.sample_seed())?;
        Ok(Context { cfg, rep, sample, triples, tol: cfg.tol() })
    }

    fn model(&self) -> &PSpaceModel {
        self.rep.model()
    }

    fn solve_opts(&self) -> SolveOptions {
        let s = &self.cfg.solver;
        SolveOptions { lsq: LsqOptions { reg: s.reg, tol: s.tol, max_iter: s.max_iter }, threshold: s.threshold }
    }

    fn multiplier_opts(&self) -> MultiplierOptions {
        MultiplierOptions { lsq: self.solve_opts().lsq, ..MultiplierOptions::default() }
    }

    /// Interior point with every coordinate equal to the sample level.
    fn top_of_sample(&self) -> LatticePoint {
        LatticePoint(vec![self.sample.level; self.model().dim()])
    }

    fn random_section(&self, amplitude: f64, guard: usize, stream: u64) -> CoherentSection {
        let mut r = rng(self.cfg.seed, stream);
        let d = self.model().dim();
        let top = LatticePoint::unit(d, d - 1, self.model().n_t() as i64);
        CoherentSection::from_vector(random_exp_vector_guarded(&self.rep, &top, amplitude, guard, &mut r).xi)
    }

    fn build(&self, block: &CocycleBlock, index: usize) -> Result<BuiltCocycle> {
        let m = self.model();
        let (gamma, g) = match block.kind {
            CocycleKindConfig::Zero => (TwoCocycle::zero(), None),
            CocycleKindConfig::U => {
                let l1 = block.lambda1.as_deref().unwrap_or_default();
                let l2 = block.lambda2.as_deref().unwrap_or_default();
                (make_u(m, l1, l2).map_err(|e| Error::Config(format!("cocycle {:?}: {e}", block.id)))?, None)
            }
            CocycleKindConfig::WFourier => {
                let g = fourier_mode(m, block.k.as_deref().unwrap_or_default(), block.guard)
                    .map_err(|e| Error::Config(format!("cocycle {:?}: {e}", block.id)))?;
                (make_w(m, &block.id, g.clone(), &[], f64::INFINITY)?, Some(g))
            }
            CocycleKindConfig::WFp => {
                let fp = FpFamily::new(m.dim(), block.p.unwrap_or(0.0))
                    .map_err(|e| Error::Config(format!("cocycle {:?}: {e}", block.id)))?;
                let g = sample_on_y(m, |y| fp.eval(y), block.guard);
                (make_w(m, &block.id, g.clone(), &[], f64::INFINITY)?, Some(g))
            }
            CocycleKindConfig::Coboundary => {
                let xi = self.random_section(block.amplitude, block.guard, 100 + index as u64);
                (coboundary_from(&self.rep, &xi, &self.sample, 1e-9)?, None)
            }
        };
        let gamma = match block.fault {
            Some(size) => {
                let (a, b, _) = self
                    .triples
                    .first()
                    .cloned()
                    .ok_or_else(|| Error::EmptySample("no triple to inject a fault at".into()))?;
                let strip = m.strip_indicator(&b);
                let delta = strip.scale(C64::new(size / strip.norm(), 0.0));
                gamma.with_fault(&a, &b, delta)
            }
            None => gamma,
        };
        Ok(BuiltCocycle { id: block.id.clone(), gamma, g, fault: block.fault })
    }

    fn build_all(&self) -> Result<Vec<BuiltCocycle>> {
        self.cfg.cocycles.iter().enumerate().map(|(i, b)| self.build(b, i)).collect()
    }

    fn build_id(&self, id: &str) -> Result<BuiltCocycle> {
        let index = self.cfg.cocycles.iter().position(|c| c.id == id).unwrap_or(0);
        self.build(self.cfg.cocycle(id)?, index)
    }

    /// `α ≡ 1` or a solved multiplier defined on every pair of the sampled
    /// triples and on `extra` pairs.
    fn multiplier(&self, c: &BuiltCocycle, report: &mut Report, extra: &[Pair]) -> Result<PhaseCochain> {
        match self.cfg.product.multiplier {
            MultiplierChoice::One => Ok(PhaseCochain::zero()),
            MultiplierChoice::Solve => {
                let d = self.model().dim();
                let up = LatticePoint::unit(d, d - 1, 1);
                let mut triples = self.triples.clone();
                triples.extend(extra.iter().map(|(a, b)| (a.clone(), b.clone(), up.clone())));
                let seed = c.g.as_ref().map(|g| w_seed(&self.rep, g, &closure_pairs(&triples)));
                let sol = solve_multiplier(&self.rep, &c.gamma, &triples, &self.multiplier_opts(), seed.as_ref())?;
                report.push(
                    &c.id,
                    "multiplier_solve",
                    String::new(),
                    sol.residual,
                    None,
                    Verdict::Info,
                    format!("{}; gauge {}", sol.status, gauge(sol.seed_used)),
                );
                Ok(sol.beta)
            }
        }
    }

    /// Runs `body`, turning guard violations into a GUARD record.
    fn guarded<F>(&self, report: &mut Report, cocycle: &str, check: &str, body: F) -> Result<()>
    where
        F: FnOnce(&mut Report) -> Result<()>,
    {
        match body(report) {
            Err(Error::GuardViolation(msg)) => {
                report.push(cocycle, check, String::new(), f64::NAN, None, Verdict::Guard, msg);
                Ok(())
            }
            other => other,
        }
    }
}

/// Every pair the multiplier relation touches on the permuted triples.
fn closure_pairs(triples: &[Triple]) -> Vec<Pair> {
    let mut out = Vec::new();
    for (a, b, c) in with_permutations(triples) {
        out.push((a.clone(), b.clone()));
        out.push((&a + &b, c.clone()));
        out.push((a.clone(), &b + &c));
        out.push((b, c));
    }
    out
}

/// Runs the configured suite.
pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let ctx = Context::new(cfg)?;
    let mut report = Report::new(cfg.suite.name(), &ctx.model().name, cfg.seed, ctx.tol);
    match cfg.suite {
        Suite::ModelInfo => model_info(&ctx, &mut report)?,
        Suite::Verify => verify(&ctx, &mut report)?,
        Suite::Classify => classify_suite(&ctx, &mut report)?,
        Suite::Admissibility => admissibility(&ctx, &mut report)?,
        Suite::Product => product(&ctx, &mut report)?,
        Suite::Reconstruct => reconstruct(&ctx, &mut report)?,
        Suite::Iso => iso(&ctx, &mut report)?,
    }
    Ok(report)
}

fn model_info(ctx: &Context, report: &mut Report) -> Result<()> {
    let m = ctx.model();
    report.check_le("-", "equivariance", String::new(), m.equivariance_defect(), ctx.tol);
    for (name, v) in [
        ("dimension", m.dim() as f64),
        ("codimension", m.codim() as f64),
        ("y_cells", m.y_cells() as f64),
        ("n_t", m.n_t() as f64),
        ("h", m.h()),
        ("cell_weight", m.cell_weight()),
        ("y_measure", m.y_measure()),
        ("sample_points", ctx.sample.points.len() as f64),
        ("triples", ctx.triples.len() as f64),
    ] {
        report.push("-", name, String::new(), v, None, Verdict::Info, "");
    }
    let a0 = LatticePoint(vec![1; m.dim()]);
    let steps = (m.n_t() as i64 / m.t_shift(&a0).max(1)) as usize + 1;
    let purity = ctx.rep.purity_report(&a0, steps)?;
    let last = purity.last().copied().unwrap_or(1.0);
    report.check_le("-", "purity", fmt_point(&a0.scale(steps as i64)), last, ctx.tol);
    if m.codim() == 1 {
        report.note(format!("gamma3 = {:?}", m.gamma3()?));
    }
    Ok(())
}

fn verify(ctx: &Context, report: &mut Report) -> Result<()> {
    for c in ctx.build_all()? {
        ctx.guarded(report, &c.id, "cocycle_identity", |report| {
            let r = verify_two_cocycle(&ctx.rep, &c.gamma, &ctx.triples, ctx.tol)?;
            let at = r.worst.as_ref().map(fmt_triple).unwrap_or_default();
            match c.fault {
                Some(size) => {
                    report.check_ge(&c.id, "fault_detected", at, r.max_residual, 0.1 * size);
                }
                None => {
                    report.check_le(&c.id, "cocycle_identity", at, r.max_residual, ctx.tol);
                    report.check_le(&c.id, "kernel", String::new(), r.kernel_residual, ctx.tol);
                }
            }
            for (t, msg) in &r.guard_violations {
                report.push(&c.id, "cocycle_identity", fmt_triple(t), f64::NAN, None, Verdict::Guard, msg.clone());
            }
            Ok(())
        })?;
        if ctx.model().codim() == 1 && c.fault.is_none() {
            ctx.guarded(report, &c.id, "degree_reduction", |report| degree_reduction(ctx, &c, report))?;
        }
    }
    Ok(())
}

/// `Γ → φ → Γ` on every sampled pair.
fn degree_reduction(ctx: &Context, c: &BuiltCocycle, report: &mut Report) -> Result<()> {
    let m = ctx.model();
    let headroom = m.t_shift(&ctx.top_of_sample()).max(0) as usize;
    let cofinal = cofinal_element(m, &LatticePoint(vec![1; m.dim()]), headroom)?;
    let phi = phi_from_gamma(&ctx.rep, &c.gamma, &cofinal, &ctx.triples, ctx.tol.max(1e-12))?;
    let back = gamma_from_phi(&phi);
    let mut worst: f64 = 0.0;
    let mut at = String::new();
    for (a, b) in ctx.sample.pairs() {
        let d = (&back.eval(&ctx.rep, &a, &b)? - &c.gamma.eval(&ctx.rep, &a, &b)?).norm();
        if d > worst || at.is_empty() {
            worst = worst.max(d);
            at = fmt_pair(&a, &b);
        }
    }
    report.check_le(&c.id, "degree_reduction", at, worst, ctx.tol);
    Ok(())
}

fn classify_suite(ctx: &Context, report: &mut Report) -> Result<()> {
    let m = ctx.model();
    for c in ctx.build_all()? {
        if m.codim() != 1 {
            let e1 = LatticePoint((0..m.dim()).map(|i| i64::from(i == 0)).collect());
            match &c.g {
                Some(g) => {
                    let n = translation_difference_norm(m, g, &e1);
                    report.push(&c.id, "group_reduction", fmt_point(&e1), n, None, Verdict::Info, "‖g(·+a₁) − g‖");
                }
                None => report.push(
                    &c.id,
                    "group_reduction",
                    String::new(),
                    f64::NAN,
                    None,
                    Verdict::Info,
                    "classification by w^g needs the function g",
                ),
            }
            report.note(format!(
                "{}: codimension {} has no finite parametrisation; reported g-differences instead",
                c.id,
                m.codim()
            ));
            continue;
        }
        ctx.guarded(report, &c.id, "classify", |report| {
            let k = classify(&ctx.rep, &c.gamma, &ctx.sample, &ctx.solve_opts())?;
            report.check_le(&c.id, "lambda_fit", String::new(), k.fit_residual, ctx.tol);
            report.check_le(&c.id, "remainder_coboundary", String::new(), k.remainder_residual(), ctx.tol);
            report.push(
                &c.id,
                "dependent",
                String::new(),
                f64::from(u8::from(k.dependent)),
                None,
                Verdict::Info,
                if k.admissible() { "admissible" } else { "not admissible" },
            );
            report.note(format!("{}: lambda1 = {:?}", c.id, k.lambda1));
            report.note(format!("{}: lambda2 = {:?}", c.id, k.lambda2));
            match &k.normal_form {
                Some(nf) => report.note(format!("{}: normal form ±λ = {nf:?}", c.id)),
                None => report.note(format!("{}: independent pair, no product system", c.id)),
            }
            Ok(())
        })?;
    }
    Ok(())
}

fn admissibility(ctx: &Context, report: &mut Report) -> Result<()> {
    for c in ctx.build_all()? {
        ctx.guarded(report, &c.id, "admissibility", |report| {
            let r = check_admissibility_necessary(&ctx.rep, &c.gamma, &ctx.triples, ctx.tol)?;
            let at = r.worst.as_ref().map(fmt_triple).unwrap_or_default();
            report.check_le(&c.id, "max_Tstar", at.clone(), r.max_t_star, ctx.tol);
            if let Some(dev) = r.det_deviation {
                report.check_le(&c.id, "det_formula", String::new(), dev, 1e-10);
            }
            if let Some(rec) = r.records.iter().find(|x| x.pi_thirds.is_some()) {
                report.push(
                    &c.id,
                    "pi_thirds",
                    fmt_triple(&rec.triple),
                    rec.t_star,
                    None,
                    Verdict::Info,
                    format!("|T*| = {}π/3", rec.pi_thirds.unwrap_or(0)),
                );
            }
            let seed = c.g.as_ref().map(|g| w_seed(&ctx.rep, g, &ctx.sample.pairs()));
            let sol = solve_multiplier(&ctx.rep, &c.gamma, &ctx.triples, &ctx.multiplier_opts(), seed.as_ref())?;
            let ok = sol.status == SolveStatus::Feasible;
            report.push(
                &c.id,
                "multiplier",
                if ok { String::new() } else { at },
                sol.residual,
                Some(ctx.multiplier_opts().tol),
                Verdict::from_check(ok),
                format!("{}; gauge {}", sol.status, gauge(sol.seed_used)),
            );
            Ok(())
        })?;
    }
    Ok(())
}

fn product_cocycle(ctx: &Context) -> Result<BuiltCocycle> {
    match &ctx.cfg.product.cocycle {
        Some(id) => ctx.build_id(id),
        None => ctx.build(&ctx.cfg.cocycles[0], 0),
    }
}

fn gauge(seeded: bool) -> &'static str {
    if seeded {
        "w seed plus min-norm correction"
    } else {
        "min-norm"
    }
}

fn convention(ctx: &Context) -> WeylConvention {
    if ctx.cfg.product.swapped_weyl {
        WeylConvention::Swapped
    } else {
        WeylConvention::Standard
    }
}

fn product(ctx: &Context, report: &mut Report) -> Result<()> {
    let c = product_cocycle(ctx)?;
    let alpha = ctx.multiplier(&c, report, &[])?;
    let ps = ProductSystemModel::new(ctx.rep.clone(), c.gamma.clone(), alpha).with_convention(convention(ctx));
    report.note(format!("weyl convention: {}", ps.convention.name()));
    let id = c.id.as_str();
    ctx.guarded(report, id, "multiplier_relation", |report| {
        let v = ps.validate(&ctx.triples, ctx.tol)?;
        let at = v.worst.as_ref().map(fmt_triple).unwrap_or_default();
        report.check_le(id, "multiplier_relation", at, v.max_defect, ctx.tol);
        Ok(())
    })?;
    ctx.guarded(report, id, "product_identities", |report| {
        let p = &ctx.cfg.product;
        let mut r = rng(ctx.cfg.seed, 1);
        let mut vec_at = |a: &LatticePoint| random_exp_vector_guarded(&ctx.rep, a, p.amplitude, p.guard, &mut r);
        let f = LeftCoherentSection::new(CoherentSection::zero());
        let (mut pairing, mut unitarity, mut assoc, mut phase, mut elog) = (0f64, 0f64, 0f64, 0f64, 0f64);
        let (mut at_p, mut at_u, mut at_a, mut at_e) = (String::new(), String::new(), String::new(), String::new());
        for t in ctx.triples.iter().take(p.vectors) {
            let (a, b, c3) = t;
            let (u1, u2, v1, v2, w) = (vec_at(a), vec_at(a), vec_at(b), vec_at(b), vec_at(c3));
            let lhs = exp_vector_inner(&ps.product(&u1, &v1)?, &ps.product(&u2, &v2)?)?;
            let rhs = exp_vector_inner(&u1, &u2)? * exp_vector_inner(&v1, &v2)?;
            let dp = (lhs - rhs).norm() / rhs.norm();
            if dp >= pairing {
                pairing = dp;
                at_p = fmt_pair(a, b);
            }
            let zeta = c.gamma.eval(&ctx.rep, a, b)?;
            let before = exp_vector_inner(&v1, &v2)?;
            let after = exp_vector_inner(&weyl_exp(&zeta, &v1, ps.convention), &weyl_exp(&zeta, &v2, ps.convention))?;
            let du = (after - before).norm() / before.norm();
            if du >= unitarity {
                unitarity = du;
                at_u = fmt_pair(a, b);
            }
            let d = assoc_defect(&ps, &u1, &v1, &w)?;
            if (d - C64::new(1.0, 0.0)).norm() >= assoc {
                assoc = (d - C64::new(1.0, 0.0)).norm();
                at_a = fmt_triple(t);
            }
            phase = phase.max(d.arg().abs());
            let de = elog_factorization_check(&ps, &f, (&u1, &u2), (&v1, &v2))?;
            if de >= elog {
                elog = de;
                at_e = fmt_pair(a, b);
            }
        }
        report.check_le(id, "pairing_multiplicativity", at_p, pairing, ctx.tol);
        report.check_le(id, "weyl_unitarity", at_u, unitarity, ctx.tol);
        report.check_le(id, "associativity", at_a, assoc, ctx.tol);
        report.push(id, "assoc_phase", String::new(), phase, None, Verdict::Info, "max |arg defect|");
        report.check_le(id, "elog_factorization", at_e, elog, ctx.tol);
        Ok(())
    })
}

fn reconstruct(ctx: &Context, report: &mut Report) -> Result<()> {
    let c = product_cocycle(ctx)?;
    let grades: Vec<LatticePoint> = ctx.sample.points.iter().take(3).cloned().collect();
    let shifts: Vec<LatticePoint> = ctx.sample.points.iter().rev().take(2).cloned().collect();
    let extra: Vec<Pair> = shifts.iter().flat_map(|s| grades.iter().map(move |a| (s.clone(), a.clone()))).collect();
    let alpha = ctx.multiplier(&c, report, &extra)?;
    let ps = ProductSystemModel::new(ctx.rep.clone(), c.gamma.clone(), alpha).with_convention(convention(ctx));
    let id = c.id.as_str();
    let p = &ctx.cfg.product;
    let opts = GnsOptions {
        samples_per_grade: p.vectors,
        amplitude: p.amplitude,
        seed: ctx.cfg.seed,
        guard: p.guard,
        ..GnsOptions::default()
    };
    ctx.guarded(report, id, "reconstruction", |report| {
        let f = LeftCoherentSection::new(CoherentSection::zero());
        let (_, r) = reconstruct_rep(&ps, &f, &grades, &shifts, &opts)?;
        report.check_le(id, "gns_kernel", String::new(), r.kernel_deviation, ctx.tol);
        report.check_le(id, "gns_isometry", String::new(), r.isometry_deviation, ctx.tol);
        report.check_le(id, "gns_shift", String::new(), r.shift_deviation, ctx.tol);
        for (a, rank) in &r.ranks {
            report.push(id, "gns_rank", fmt_point(a), *rank as f64, None, Verdict::Info, "");
        }
        Ok(())
    })
}

fn iso(ctx: &Context, report: &mut Report) -> Result<()> {
    let block = ctx.cfg.iso.as_ref().ok_or_else(|| Error::Config("suite iso needs an [iso] block".into()))?;
    let first = ctx.build_id(&block.first)?;
    let spec = match &block.translate {
        Some(cells) => UnitarySpec::YTranslation { cells: cells.clone(), phase: block.phase },
        None => UnitarySpec::Identity,
    };
    let unitary = GridUnitary::new(&ctx.rep, &spec).map_err(|e| Error::Config(format!("iso.translate: {e}")))?;
    let alpha1 = ctx.multiplier(&first, report, &[])?;
    let ps1 = ProductSystemModel::new(ctx.rep.clone(), first.gamma.clone(), alpha1.clone());
    let label = match &block.second {
        Some(s) => format!("{}~{}", first.id, s),
        None => format!("{}~constructed", first.id),
    };
    let id = label.as_str();
    ctx.guarded(report, id, "iso", |report| {
        let (ps2, witness) = match &block.second {
            Some(s) => {
                let second = ctx.build_id(s)?;
                let alpha2 = ctx.multiplier(&second, report, &[])?;
                (ProductSystemModel::new(ctx.rep.clone(), second.gamma, alpha2), None)
            }
            None => {
                let xi = ctx.random_section(0.3, ctx.cfg.product.guard, 7);
                let u = unitary.clone();
                let g1 = first.gamma.clone();
                let rotated = TwoCocycle::custom("rotated", move |rep, a, b| Ok(u.apply(&g1.eval(rep, a, b)?)));
                let g2 = rotated.plus(&coboundary_from(&ctx.rep, &xi, &ctx.sample, 1e-9)?);
                let alpha2 = transform_multiplier(&ctx.rep, &alpha1, &rotated, &xi, &ctx.sample.pairs())?;
                (ProductSystemModel::new(ctx.rep.clone(), g2, alpha2), Some(xi))
            }
        };
        let verdict = check_projective_iso(&ps1, &ps2, &spec, &ctx.sample, &ctx.solve_opts(), ctx.cfg.seed)?;
        report.check_le(id, "intertwining", String::new(), verdict.intertwining_residual, ctx.tol);
        let found = verdict.pass;
        let expected = block.expect_isomorphic.unwrap_or(true);
        report.push(
            id,
            "coboundary_witness",
            String::new(),
            verdict.coboundary.residual,
            Some(ctx.cfg.solver.threshold),
            Verdict::from_check(found == expected),
            match (&verdict.obstruction, expected) {
                (Some(o), true) => o.clone(),
                (Some(o), false) => format!("obstruction as expected: {o}"),
                (None, true) => format!("witness found, max ‖ξ_a‖ = {:.6e}", verdict.coboundary.section_norm),
                (None, false) => "unexpected witness".to_string(),
            },
        );
        if let Some(xi) = witness {
            let zeros = ctx.sample.points.iter().map(|a| (a.clone(), 0.0)).collect();
            let k = check_iso_conditions(&ps1, &ps2, &spec, &xi, &zeros, &ctx.sample, ctx.cfg.seed)?;
            report.check_le(id, "condition_a", String::new(), k.a, ctx.tol);
            report.check_le(id, "condition_b", String::new(), k.b, ctx.tol);
            let at = k.worst_c.as_ref().map(|(a, b)| fmt_pair(a, b)).unwrap_or_default();
            report.check_le(id, "condition_c", at, k.c, ctx.tol);
            if found {
                let rebuilt = coboundary_from(&ctx.rep, &verdict.coboundary.section, &ctx.sample, 1.0)?;
                let truth = coboundary_from(&ctx.rep, &xi, &ctx.sample, 1.0)?;
                let mut worst: f64 = 0.0;
                for (a, b) in ctx.sample.pairs() {
                    worst = worst.max((&rebuilt.eval(&ctx.rep, &a, &b)? - &truth.eval(&ctx.rep, &a, &b)?).norm());
                }
                report.check_le(id, "witness_recovery", String::new(), worst, ctx.tol);
            }
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::parse(text).unwrap()
    }

    const C1_SMALL: &str = r#"
[model]
preset = "c1"
m = 2
h = "1/2"
n_t = 12

[sample]
level = 2
count = 60
"#;

    #[test]
    fn verify_and_fault() {
        let text = format!(
            "suite = \"verify\"\n{C1_SMALL}\n[[cocycle]]\nid = \"u\"\nkind = \"u\"\nlambda1 = [1.0, 0.0, -1.0]\nlambda2 = [0.0, 1.0, -1.0]\n\n[[cocycle]]\nid = \"bad\"\nkind = \"u\"\nlambda1 = [1.0, 0.0, -1.0]\nlambda2 = [0.0, 0.0, 0.0]\nfault = 1e-3\n"
        );
        let r = run(&cfg(&text)).unwrap();
        assert_eq!(r.exit_code(), 0, "{}", r.summary());
        assert!(r.records.iter().any(|x| x.check == "fault_detected" && x.verdict == Verdict::Pass));
        assert!(r.records.iter().any(|x| x.check == "degree_reduction" && x.verdict == Verdict::Pass));
    }

    #[test]
    fn independent_pair_is_reported_nonadmissible() {
        let text = format!(
            "suite = \"admissibility\"\n{C1_SMALL}\n[[cocycle]]\nid = \"u\"\nkind = \"u\"\nlambda1 = [1.0, 0.0, -1.0]\nlambda2 = [0.0, 1.0, -1.0]\n"
        );
        let r = run(&cfg(&text)).unwrap();
        assert_eq!(r.exit_code(), 1);
        let t = r.records.iter().find(|x| x.check == "max_Tstar").unwrap();
        assert_eq!(t.verdict, Verdict::Fail);
        assert!(!t.input.is_empty());
    }

    #[test]
    fn ccr_product_and_reconstruction_pass() {
        for suite in ["product", "reconstruct"] {
            let text = format!(
                "suite = \"{suite}\"\n[model]\npreset = \"c1b\"\nm = 4\nh = \"1/4\"\nn_t = 32\n\n[[cocycle]]\nid = \"zero\"\nkind = \"zero\"\n"
            );
            let r = run(&cfg(&text)).unwrap();
            assert_eq!(r.exit_code(), 0, "{}", r.summary());
        }
    }

    #[test]
    fn iso_constructed_and_obstructed() {
        let text = format!(
            "suite = \"iso\"\n{C1_SMALL}\n[[cocycle]]\nid = \"u\"\nkind = \"u\"\nlambda1 = [1.0, 0.0, -1.0]\nlambda2 = [0.0, 0.0, 0.0]\n\n[[cocycle]]\nid = \"zero\"\nkind = \"zero\"\n\n[iso]\nfirst = \"u\"\n"
        );
        let r = run(&cfg(&text)).unwrap();
        assert_eq!(r.exit_code(), 0, "{}", r.summary());
        let text = text.replace("first = \"u\"", "first = \"zero\"\nsecond = \"u\"\nexpect_isomorphic = false");
        let r = run(&cfg(&text)).unwrap();
        assert_eq!(r.exit_code(), 0, "{}", r.summary());
        let text = text.replace("expect_isomorphic = false", "");
        assert_eq!(run(&cfg(&text)).unwrap().exit_code(), 1);
    }

    #[test]
    fn overrides_apply() {
        let mut c = cfg(&format!("suite = \"verify\"\n{C1_SMALL}\n[[cocycle]]\nid = \"z\"\nkind = \"zero\"\n"));
        Overrides { suite: Some(Suite::ModelInfo), seed: Some(9), tol: Some(1e-6) }.apply(&mut c).unwrap();
        assert_eq!((c.suite, c.seed, c.tol()), (Suite::ModelInfo, 9, 1e-6));
        assert!(Overrides { tol: Some(-1.0), ..Overrides::default() }.apply(&mut c).is_err());
    }
}
