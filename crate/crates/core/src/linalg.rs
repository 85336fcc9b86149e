//! Dense real vectors, a small dense matrix type, and projections onto
//! closed convex feasible sets.
//!
//! Vectors are immutable values in spirit: every arithmetic helper returns a
//! fresh vector, so they can be shared across threads freely. Images are
//! stored as flattened vectors; their shape lives with the problem.

use std::ops::{Add, Index, Mul, Neg, Sub};

use crate::error::{invalid, Error, Result};

/// A dense, finite, double-precision vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    /// Builds a vector, rejecting empty input and non-finite entries.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyVector);
        }
        if let Some(index) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self(entries))
    }

    pub fn from_slice(entries: &[f64]) -> Result<Self> {
        Self::new(entries.to_vec())
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn ones(dim: usize) -> Self {
        Self(vec![1.0; dim])
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize) -> f64) -> Self {
        Self((0..dim).map(f).collect())
    }

    /// Wraps raw storage produced by trusted arithmetic in this crate.
    pub(crate) fn from_raw(entries: Vec<f64>) -> Self {
        Self(entries)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Inner product; panics on dimension mismatch (use [`inner`] for a checked version).
    pub fn dot(&self, other: &Vector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dot: dimension mismatch");
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_l1(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn dist(&self, other: &Vector) -> f64 {
        self.dist_sq(other).sqrt()
    }

    pub fn dist_sq(&self, other: &Vector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dist: dimension mismatch");
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn scale(&self, a: f64) -> Vector {
        self.map(|v| a * v)
    }

    /// `self + a * x`
    pub fn add_scaled(&self, a: f64, x: &Vector) -> Vector {
        assert_eq!(self.dim(), x.dim(), "add_scaled: dimension mismatch");
        Vector(self.0.iter().zip(&x.0).map(|(s, v)| s + a * v).collect())
    }

    /// In-place `self += a * x`.
    pub fn axpy(&mut self, a: f64, x: &Vector) {
        assert_eq!(self.dim(), x.dim(), "axpy: dimension mismatch");
        for (s, v) in self.0.iter_mut().zip(&x.0) {
            *s += a * v;
        }
    }

    /// `(1 - t) * self + t * other`
    pub fn lerp(&self, other: &Vector, t: f64) -> Vector {
        assert_eq!(self.dim(), other.dim(), "lerp: dimension mismatch");
        Vector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + t * (b - a))
                .collect(),
        )
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Vector {
        Vector(self.0.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Vector, f: impl Fn(f64, f64) -> f64) -> Vector {
        assert_eq!(self.dim(), other.dim(), "zip_map: dimension mismatch");
        Vector(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect())
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul<&Vector> for f64 {
    type Output = Vector;
    fn mul(self, rhs: &Vector) -> Vector {
        rhs.scale(self)
    }
}

impl Neg for &Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self.scale(-1.0)
    }
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Euclidean inner product.
pub fn inner(x: &Vector, y: &Vector) -> Result<f64> {
    check_dims(x.dim(), y.dim())?;
    Ok(x.dot(y))
}

/// Euclidean norm.
pub fn norm(x: &Vector) -> f64 {
    x.norm()
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid("shape", "matrix must have at least one row and column"));
        }
        check_dims(rows * cols, data.len())?;
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matvec(&self, x: &Vector) -> Vector {
        assert_eq!(self.cols, x.dim(), "matvec: dimension mismatch");
        Vector::from_raw(
            (0..self.rows)
                .map(|i| self.row(i).iter().zip(x.iter()).map(|(a, b)| a * b).sum())
                .collect(),
        )
    }

    pub fn matvec_t(&self, y: &Vector) -> Vector {
        assert_eq!(self.rows, y.dim(), "matvec_t: dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let yi = y[i];
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        Vector::from_raw(out)
    }

    /// `self^T * self`
    pub fn gram(&self) -> Matrix {
        let n = self.cols;
        let mut data = vec![0.0; n * n];
        for k in 0..self.rows {
            let r = self.row(k);
            for i in 0..n {
                let ri = r[i];
                if ri == 0.0 {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] += ri * r[j];
                }
            }
        }
        Matrix {
            rows: n,
            cols: n,
            data,
        }
    }
}

/// Closed convex set `C` the iterates are projected onto.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    WholeSpace,
    Box { lower: Vector, upper: Vector },
    Ball { center: Vector, radius: f64 },
}

impl FeasibleSet {
    pub fn boxed(lower: Vector, upper: Vector) -> Result<Self> {
        check_dims(lower.dim(), upper.dim())?;
        if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
            return Err(invalid("box", "lower bound exceeds upper bound"));
        }
        Ok(FeasibleSet::Box { lower, upper })
    }

    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid("radius", format!("must be positive, got {radius}")));
        }
        Ok(FeasibleSet::Ball { center, radius })
    }

    /// Euclidean projection `P_C(z)`.
    pub fn project(&self, z: &Vector) -> Result<Vector> {
        match self {
            FeasibleSet::WholeSpace => Ok(z.clone()),
            FeasibleSet::Box { lower, upper } => {
                check_dims(lower.dim(), z.dim())?;
                Ok(Vector::from_raw(
                    z.iter()
                        .zip(lower.iter().zip(upper.iter()))
                        .map(|(&v, (&l, &u))| v.clamp(l, u))
                        .collect(),
                ))
            }
            FeasibleSet::Ball { center, radius } => {
                check_dims(center.dim(), z.dim())?;
                let d = z.dist(center);
                // points produced by a previous projection sit within a few ulps of the sphere
                if d <= radius * (1.0 + 1e-14) {
                    Ok(z.clone())
                } else {
                    Ok(center.lerp(z, radius / d))
                }
            }
        }
    }

    pub fn contains(&self, z: &Vector, tol: f64) -> bool {
        match self {
            FeasibleSet::WholeSpace => true,
            FeasibleSet::Box { lower, upper } => {
                z.dim() == lower.dim()
                    && z.iter()
                        .zip(lower.iter().zip(upper.iter()))
                        .all(|(&v, (&l, &u))| v >= l - tol && v <= u + tol)
            }
            FeasibleSet::Ball { center, radius } => {
                z.dim() == center.dim() && z.dist(center) <= radius + tol
            }
        }
    }
}

/// `project(C, z)`
pub fn project(set: &FeasibleSet, z: &Vector) -> Result<Vector> {
    set.project(z)
}
