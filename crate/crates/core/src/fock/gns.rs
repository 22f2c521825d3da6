//! Reconstruction of the isometric representation `V^E` of a decomposable
//! product system from its e-logarithm kernel.
//!
//! At each grade the kernel `K_ij = L(a, uᵢ, uⱼ)` is obtained from Fock
//! pairings alone, `K = log(⟨uᵢ|uⱼ⟩ / (⟨uᵢ|f_a⟩⟨f_a|uⱼ⟩))`, and factored as
//! `K = C C*` with eigenvalues below `floor · λ_max` dropped. `V^E_c` acts by
//! left multiplication `[u] ↦ [v·u]` with a fixed `v` of grade `c`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::elog::LeftCoherentSection;
use super::{exp_vector_inner, random_exp_vector_guarded, ExpVector, ProductSystemModel};
use crate::cone::LatticePoint;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct GnsOptions {
    pub samples_per_grade: usize,
    pub amplitude: f64,
    pub seed: u64,
    pub floor: f64,
    /// Most negative eigenvalue tolerated before the kernel is rejected.
    pub psd_tol: f64,
    /// Cells kept zero at window edges in the random test functions.
    pub guard: usize,
}

impl Default for GnsOptions {
    fn default() -> Self {
        GnsOptions { samples_per_grade: 8, amplitude: 0.2, seed: 0, floor: 1e-12, psd_tol: 1e-8, guard: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct GnsGrade {
    pub grade: LatticePoint,
    pub samples: Vec<ExpVector>,
    pub kernel: DMatrix<C64>,
    /// Row `i` holds the GNS coordinates of `[uᵢ]`.
    pub coords: DMatrix<C64>,
    pub rank: usize,
    pub min_eigenvalue: f64,
}

#[derive(Clone, Debug, Default)]
pub struct GnsReport {
    /// GNS inner products against `⟨ξᵢ − ξ_a | ξⱼ − ξ_a⟩`.
    pub kernel_deviation: f64,
    /// Isometry of `V^E_c` on differences `[u] − [u₀]`.
    pub isometry_deviation: f64,
    /// `V^E_c` against `V_c` on test-function differences.
    pub shift_deviation: f64,
    pub ranks: Vec<(LatticePoint, usize)>,
}

impl GnsReport {
    pub fn max_deviation(&self) -> f64 {
        self.kernel_deviation.max(self.isometry_deviation).max(self.shift_deviation)
    }
}

fn log_kernel(
    ps: &ProductSystemModel,
    f: &LeftCoherentSection,
    a: &LatticePoint,
    us: &[ExpVector],
) -> Result<DMatrix<C64>> {
    let fa = f.member(&ps.rep, a)?;
    let n = us.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        let left = exp_vector_inner(&us[i], &fa)?;
        for j in 0..n {
            let right = exp_vector_inner(&fa, &us[j])?;
            k[(i, j)] = (exp_vector_inner(&us[i], &us[j])? / (left * right)).ln();
        }
    }
    Ok(k)
}

fn factor(kernel: &DMatrix<C64>, opts: &GnsOptions) -> Result<(DMatrix<C64>, usize, f64)> {
    let n = kernel.nrows();
    if n == 0 {
        return Ok((DMatrix::zeros(0, 0), 0, 0.0));
    }
    let herm = (kernel + kernel.adjoint()) * C64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    if min < -opts.psd_tol {
        return Err(Error::NotPsd(min));
    }
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > opts.floor * max.max(1.0)).collect();
    let mut coords = DMatrix::zeros(n, keep.len());
    for (col, &k) in keep.iter().enumerate() {
        let s = eig.eigenvalues[k].sqrt();
        for row in 0..n {
            coords[(row, col)] = eig.eigenvectors[(row, k)] * s;
        }
    }
    Ok((coords, keep.len(), min))
}

fn grade_space(
    ps: &ProductSystemModel,
    f: &LeftCoherentSection,
    a: &LatticePoint,
    samples: Vec<ExpVector>,
    opts: &GnsOptions,
) -> Result<GnsGrade> {
    let kernel = log_kernel(ps, f, a, &samples)?;
    let (coords, rank, min_eigenvalue) = factor(&kernel, opts)?;
    Ok(GnsGrade { grade: a.clone(), samples, kernel, coords, rank, min_eigenvalue })
}

fn gram(c: &DMatrix<C64>) -> DMatrix<C64> {
    c * c.adjoint()
}

/// `D_ij = ⟨[uᵢ] − [u₀] | [uⱼ] − [u₀]⟩` from a Gram matrix.
fn difference_gram(g: &DMatrix<C64>) -> DMatrix<C64> {
    let n = g.nrows();
    DMatrix::from_fn(n, n, |i, j| g[(i, j)] - g[(i, 0)] - g[(0, j)] + g[(0, 0)])
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Builds the GNS spaces at each grade from random decomposable vectors and
/// compares `V^E_c` with `V_c` for every `c` in `shifts`.
pub fn reconstruct_rep(
    ps: &ProductSystemModel,
    f: &LeftCoherentSection,
    grades: &[LatticePoint],
    shifts: &[LatticePoint],
    opts: &GnsOptions,
) -> Result<(Vec<GnsGrade>, GnsReport)> {
    let rep = &ps.rep;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut report = GnsReport::default();
    let mut spaces = Vec::with_capacity(grades.len());
    for a in grades {
        let samples: Vec<ExpVector> = (0..opts.samples_per_grade)
            .map(|_| random_exp_vector_guarded(rep, a, opts.amplitude, opts.guard, &mut rng))
            .collect();
        spaces.push(grade_space(ps, f, a, samples, opts)?);
    }
    for space in &spaces {
        let a = &space.grade;
        let xa = f.xi(rep, a)?;
        let n = space.samples.len();
        let direct = DMatrix::from_fn(n, n, |i, j| (&space.samples[i].xi - &xa).inner(&(&space.samples[j].xi - &xa)));
        report.kernel_deviation = report.kernel_deviation.max(max_abs(&(gram(&space.coords) - &direct)));
        report.ranks.push((a.clone(), space.rank));
        if n == 0 {
            continue;
        }
        for c in shifts {
            let v = random_exp_vector_guarded(rep, c, opts.amplitude, opts.guard, &mut rng);
            let moved: Vec<ExpVector> = space.samples.iter().map(|u| ps.product(&v, u)).collect::<Result<_>>()?;
            let target = grade_space(ps, f, &(c + a), moved, opts)?;
            let before = difference_gram(&gram(&space.coords));
            let after = difference_gram(&gram(&target.coords));
            report.isometry_deviation = report.isometry_deviation.max(max_abs(&(after - before)));
            for i in 1..n {
                let expect = rep.apply_v(c, &(&space.samples[i].xi - &space.samples[0].xi))?;
                let got = &target.samples[i].xi - &target.samples[0].xi;
                report.shift_deviation = report.shift_deviation.max((&got - &expect).norm());
            }
        }
    }
    Ok((spaces, report))
}

/// GNS space of an explicit sample at one grade.
pub fn gns_grade(
    ps: &ProductSystemModel,
    f: &LeftCoherentSection,
    a: &LatticePoint,
    samples: Vec<ExpVector>,
    opts: &GnsOptions,
) -> Result<GnsGrade> {
    grade_space(ps, f, a, samples, opts)
}
