//! Dense coordinate vectors over real or complex scalars.
//!
//! Complex vectors are treated as their canonical real embedding: the inner
//! product used for norms and directional derivatives is `Re(conj(a)·b)`, so
//! every real-valued identity (Lyapunov increments, descent inequalities)
//! carries over unchanged.

use std::fmt::Debug;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar field a [`ParamVector`] lives over.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    fn zero() -> Self;
    fn from_real(x: f64) -> Self;
    fn scale(self, s: f64) -> Self;
    fn conj(self) -> Self;
    /// `|x|²` in the real embedding.
    fn abs_sq(self) -> f64;
    /// `Re(conj(self)·other)`, the real-embedding inner product.
    fn real_dot(self, other: Self) -> f64;
    fn is_finite(self) -> bool;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn conj(self) -> Self {
        self
    }
    fn abs_sq(self) -> f64 {
        self * self
    }
    fn real_dot(self, other: Self) -> f64 {
        self * other
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn abs_sq(self) -> f64 {
        self.norm_sqr()
    }
    fn real_dot(self, other: Self) -> f64 {
        self.re * other.re + self.im * other.im
    }
    fn is_finite(self) -> bool {
        Complex64::is_finite(self)
    }
}

/// Parameter estimate, regressor or direction vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector<S = f64> {
    entries: Vec<S>,
}

impl<S: Scalar> ParamVector<S> {
    pub fn new(entries: Vec<S>) -> Self {
        Self { entries }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { entries: vec![S::zero(); dim] }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize) -> S) -> Self {
        Self { entries: (0..dim).map(f).collect() }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.entries
    }

    pub fn as_mut_slice(&mut self) -> &mut [S] {
        &mut self.entries
    }

    pub fn into_inner(self) -> Vec<S> {
        self.entries
    }

    pub fn iter(&self) -> std::slice::Iter<'_, S> {
        self.entries.iter()
    }

    pub fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() == other.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() })
        }
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(self.zip_map(other, |a, b| a + b.scale(s)))
    }

    /// `a·self + b·other`.
    pub fn lincomb(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.check_dim(other)?;
        Ok(self.zip_map(other, |x, y| x.scale(a) + y.scale(b)))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(self.zip_map(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(self.zip_map(other, |a, b| a - b))
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|x| x.scale(s))
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Self { entries: self.entries.iter().map(|&x| f(x)).collect() }
    }

    fn zip_map(&self, other: &Self, f: impl Fn(S, S) -> S) -> Self {
        Self {
            entries: self.entries.iter().zip(&other.entries).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Real-embedding inner product `Σ Re(conj(aᵢ)·bᵢ)`.
    pub fn real_dot(&self, other: &Self) -> Result<f64> {
        self.check_dim(other)?;
        Ok(self.entries.iter().zip(&other.entries).map(|(&a, &b)| a.real_dot(b)).sum())
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|x| x.abs_sq()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist_sq(&self, other: &Self) -> Result<f64> {
        self.check_dim(other)?;
        Ok(self.entries.iter().zip(&other.entries).map(|(&a, &b)| (a - b).abs_sq()).sum())
    }

    pub fn max_abs_sq(&self) -> f64 {
        self.entries.iter().map(|x| x.abs_sq()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|x| x.is_finite())
    }
}

impl ParamVector<f64> {
    pub fn dot(&self, other: &Self) -> Result<f64> {
        self.real_dot(other)
    }
}

impl<S> Index<usize> for ParamVector<S> {
    type Output = S;
    fn index(&self, i: usize) -> &S {
        &self.entries[i]
    }
}

impl<S> IndexMut<usize> for ParamVector<S> {
    fn index_mut(&mut self, i: usize) -> &mut S {
        &mut self.entries[i]
    }
}

impl<S: Scalar> From<Vec<S>> for ParamVector<S> {
    fn from(v: Vec<S>) -> Self {
        Self::new(v)
    }
}

impl<S: Scalar> FromIterator<S> for ParamVector<S> {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}
