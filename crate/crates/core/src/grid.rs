//! Complex-valued functions on the discretized P-space.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64 as C64;

/// Values on every grid cell together with the (uniform) cell measure.
///
/// The inner product is linear in the first argument:
/// `⟨u|v⟩ = w · Σ u(x) · conj(v(x))`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridVector {
    pub values: Vec<C64>,
    pub weight: f64,
}

impl GridVector {
    pub fn zeros(len: usize, weight: f64) -> Self {
        GridVector { values: vec![C64::new(0.0, 0.0); len], weight }
    }

    pub fn from_values(values: Vec<C64>, weight: f64) -> Self {
        GridVector { values, weight }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn zeros_like(&self) -> Self {
        GridVector::zeros(self.len(), self.weight)
    }

    pub fn inner(&self, other: &GridVector) -> C64 {
        debug_assert_eq!(self.len(), other.len());
        let s: C64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum();
        s * self.weight
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.weight
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, s: C64) -> GridVector {
        GridVector { values: self.values.iter().map(|v| v * s).collect(), weight: self.weight }
    }

    pub fn scale_real(&self, s: f64) -> GridVector {
        self.scale(C64::new(s, 0.0))
    }

    /// `self += s · other`
    pub fn axpy(&mut self, s: C64, other: &GridVector) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    /// Pointwise product with a 0/1 mask.
    pub fn masked(&self, mask: &[bool]) -> GridVector {
        GridVector {
            values: self.values.iter().zip(mask).map(|(v, &m)| if m { *v } else { C64::new(0.0, 0.0) }).collect(),
            weight: self.weight,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

impl Add for &GridVector {
    type Output = GridVector;
    fn add(self, rhs: &GridVector) -> GridVector {
        GridVector { values: self.values.iter().zip(&rhs.values).map(|(a, b)| a + b).collect(), weight: self.weight }
    }
}

impl Sub for &GridVector {
    type Output = GridVector;
    fn sub(self, rhs: &GridVector) -> GridVector {
        GridVector { values: self.values.iter().zip(&rhs.values).map(|(a, b)| a - b).collect(), weight: self.weight }
    }
}

impl Neg for &GridVector {
    type Output = GridVector;
    fn neg(self) -> GridVector {
        GridVector { values: self.values.iter().map(|a| -a).collect(), weight: self.weight }
    }
}

impl Mul<C64> for &GridVector {
    type Output = GridVector;
    fn mul(self, rhs: C64) -> GridVector {
        self.scale(rhs)
    }
}

impl AddAssign<&GridVector> for GridVector {
    fn add_assign(&mut self, rhs: &GridVector) {
        for (a, b) in self.values.iter_mut().zip(&rhs.values) {
            *a += b;
        }
    }
}

impl SubAssign<&GridVector> for GridVector {
    fn sub_assign(&mut self, rhs: &GridVector) {
        for (a, b) in self.values.iter_mut().zip(&rhs.values) {
            *a -= b;
        }
    }
}
