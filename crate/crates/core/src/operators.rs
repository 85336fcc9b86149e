//! Linear operators with explicit adjoints: dense matrices, the discrete
//! gradient on images, and a truncated Gaussian blur.

use std::fmt::Debug;

use crate::error::{invalid, Error, Result};
use crate::linalg::{Matrix, Vector};

/// A bounded linear map together with its adjoint.
pub trait LinearOperator: Send + Sync + Debug {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn apply(&self, x: &Vector) -> Vector;
    fn adjoint(&self, y: &Vector) -> Vector;
    /// A rigorous upper bound on the operator norm `‖A‖`.
    fn operator_norm_bound(&self) -> f64;
}

/// Row-major image shape carried by problems, never by vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImageShape {
    pub rows: usize,
    pub cols: usize,
}

impl ImageShape {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid("shape", "image dimensions must be positive"));
        }
        Ok(Self { rows, cols })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn check(&self, x: &Vector) -> Result<()> {
        if x.dim() != self.len() {
            return Err(Error::Shape(format!(
                "image of {}x{} needs {} pixels, got {}",
                self.rows,
                self.cols,
                self.len(),
                x.dim()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct IdentityOperator(pub usize);

impl LinearOperator for IdentityOperator {
    fn input_dim(&self) -> usize {
        self.0
    }
    fn output_dim(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &Vector) -> Vector {
        x.clone()
    }
    fn adjoint(&self, y: &Vector) -> Vector {
        y.clone()
    }
    fn operator_norm_bound(&self) -> f64 {
        1.0
    }
}

#[derive(Debug, Clone)]
pub struct MatrixOperator(pub Matrix);

impl LinearOperator for MatrixOperator {
    fn input_dim(&self) -> usize {
        self.0.cols()
    }
    fn output_dim(&self) -> usize {
        self.0.rows()
    }
    fn apply(&self, x: &Vector) -> Vector {
        self.0.matvec(x)
    }
    fn adjoint(&self, y: &Vector) -> Vector {
        self.0.matvec_t(y)
    }
    fn operator_norm_bound(&self) -> f64 {
        let m = &self.0;
        let frob = (0..m.rows())
            .flat_map(|i| m.row(i).iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        let row_sum = (0..m.rows())
            .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let col_sum = (0..m.cols())
            .map(|j| (0..m.rows()).map(|i| m.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max);
        frob.min((row_sum * col_sum).sqrt())
    }
}

/// Forward differences with Neumann boundary: the difference across the last
/// column (horizontal) or last row (vertical) is zero.
///
/// The output field stores all horizontal differences first, then all
/// vertical ones, each block in row-major pixel order.
#[derive(Debug, Clone, Copy)]
pub struct DiscreteGradient {
    pub shape: ImageShape,
}

impl DiscreteGradient {
    pub fn new(shape: ImageShape) -> Self {
        Self { shape }
    }

    /// `‖∇‖² ≤ 8` for this stencil.
    pub const NORM_SQ_BOUND: f64 = 8.0;

    pub fn field_len(&self) -> usize {
        2 * self.shape.len()
    }

    /// Euclidean norm of the 2-vector attached to pixel `p`.
    pub fn block_norm(&self, field: &[f64], p: usize) -> f64 {
        let n = self.shape.len();
        field[p].hypot(field[n + p])
    }

    pub fn checked_apply(&self, x: &Vector) -> Result<Vector> {
        self.shape.check(x)?;
        Ok(self.apply(x))
    }
}

impl LinearOperator for DiscreteGradient {
    fn input_dim(&self) -> usize {
        self.shape.len()
    }

    fn output_dim(&self) -> usize {
        self.field_len()
    }

    fn apply(&self, x: &Vector) -> Vector {
        let ImageShape { rows, cols } = self.shape;
        let n = rows * cols;
        let x = x.as_slice();
        let mut out = vec![0.0; 2 * n];
        for i in 0..rows {
            for j in 0..cols {
                let p = i * cols + j;
                if j + 1 < cols {
                    out[p] = x[p + 1] - x[p];
                }
                if i + 1 < rows {
                    out[n + p] = x[p + cols] - x[p];
                }
            }
        }
        Vector::from_raw(out)
    }

    /// Negative divergence.
    fn adjoint(&self, field: &Vector) -> Vector {
        let ImageShape { rows, cols } = self.shape;
        let n = rows * cols;
        let f = field.as_slice();
        let mut out = vec![0.0; n];
        for i in 0..rows {
            for j in 0..cols {
                let p = i * cols + j;
                let mut acc = 0.0;
                if j + 1 < cols {
                    acc -= f[p];
                }
                if j > 0 {
                    acc += f[p - 1];
                }
                if i + 1 < rows {
                    acc -= f[n + p];
                }
                if i > 0 {
                    acc += f[n + p - cols];
                }
                out[p] = acc;
            }
        }
        Vector::from_raw(out)
    }

    fn operator_norm_bound(&self) -> f64 {
        Self::NORM_SQ_BOUND.sqrt()
    }
}

/// Half-sample symmetric reflection of an index into `0..n`.
fn reflect(mut idx: isize, n: usize) -> usize {
    let n = n as isize;
    loop {
        if idx < 0 {
            idx = -idx - 1;
        } else if idx >= n {
            idx = 2 * n - idx - 1;
        } else {
            return idx as usize;
        }
    }
}

/// Normalized truncated-Gaussian convolution with reflective boundary.
///
/// Taps sit at offsets `m - (k-1)/2` (so an even-sized stencil has symmetric
/// weights), and output pixel `(i, j)` reads input `(i + a - k/2, j + b - k/2)`
/// for stencil entry `(a, b)`.
#[derive(Debug, Clone)]
pub struct GaussianBlur {
    shape: ImageShape,
    size: usize,
    weights: Vec<f64>,
    norm_bound: f64,
}

impl GaussianBlur {
    pub fn new(shape: ImageShape, kernel_size: usize, std: f64) -> Result<Self> {
        if kernel_size == 0 {
            return Err(invalid("kernel_size", "must be at least 1"));
        }
        if !(std > 0.0 && std.is_finite()) {
            return Err(invalid("std", format!("must be positive, got {std}")));
        }
        let half = (kernel_size as f64 - 1.0) / 2.0;
        let taps: Vec<f64> = (0..kernel_size)
            .map(|m| {
                let o = m as f64 - half;
                (-o * o / (2.0 * std * std)).exp()
            })
            .collect();
        let mut weights: Vec<f64> = taps
            .iter()
            .flat_map(|a| taps.iter().map(move |b| a * b))
            .collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        let mut blur = Self {
            shape,
            size: kernel_size,
            weights,
            norm_bound: 1.0,
        };
        // rows sum to one, so ‖A‖ ≤ sqrt(max column sum)
        let col_sums = blur.adjoint(&Vector::ones(shape.len()));
        blur.norm_bound = col_sums.norm_inf().max(1.0).sqrt();
        Ok(blur)
    }

    pub fn kernel(&self) -> &[f64] {
        &self.weights
    }

    pub fn kernel_size(&self) -> usize {
        self.size
    }

    fn anchor(&self) -> isize {
        (self.size / 2) as isize
    }
}

impl LinearOperator for GaussianBlur {
    fn input_dim(&self) -> usize {
        self.shape.len()
    }

    fn output_dim(&self) -> usize {
        self.shape.len()
    }

    fn apply(&self, x: &Vector) -> Vector {
        let ImageShape { rows, cols } = self.shape;
        let x = x.as_slice();
        let c = self.anchor();
        let mut out = vec![0.0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                let mut acc = 0.0;
                for a in 0..self.size {
                    let si = reflect(i as isize + a as isize - c, rows);
                    for b in 0..self.size {
                        let sj = reflect(j as isize + b as isize - c, cols);
                        acc += self.weights[a * self.size + b] * x[si * cols + sj];
                    }
                }
                out[i * cols + j] = acc;
            }
        }
        Vector::from_raw(out)
    }

    fn adjoint(&self, y: &Vector) -> Vector {
        let ImageShape { rows, cols } = self.shape;
        let y = y.as_slice();
        let c = self.anchor();
        let mut out = vec![0.0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                let yij = y[i * cols + j];
                for a in 0..self.size {
                    let si = reflect(i as isize + a as isize - c, rows);
                    for b in 0..self.size {
                        let sj = reflect(j as isize + b as isize - c, cols);
                        out[si * cols + sj] += self.weights[a * self.size + b] * yij;
                    }
                }
            }
        }
        Vector::from_raw(out)
    }

    fn operator_norm_bound(&self) -> f64 {
        self.norm_bound
    }
}

/// Estimates `‖A*A‖ = ‖A‖²` by power iteration on `A*A`.
///
/// The Rayleigh quotient approaches the top eigenvalue from below, so the
/// returned value is inflated by a relative `1e-9` to keep it a usable
/// Lipschitz constant.
pub fn power_iteration_norm_sq(op: &dyn LinearOperator, max_iter: usize, tol: f64) -> f64 {
    let n = op.input_dim();
    let mut v = Vector::from_fn(n, |i| 1.0 + 0.25 * ((i as f64) * 0.7 + 0.3).sin());
    let nv = v.norm();
    v = v.scale(1.0 / nv);
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let w = op.adjoint(&op.apply(&v));
        let next = v.dot(&w);
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        v = w.scale(1.0 / nw);
        let converged = (next - lambda).abs() <= tol * next.abs();
        lambda = next;
        if converged {
            break;
        }
    }
    lambda * (1.0 + 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vector {
        Vector::from_fn(n, |_| rng.random_range(-1.0..1.0))
    }

    fn adjoint_gap(op: &dyn LinearOperator, rng: &mut ChaCha8Rng) -> (f64, f64) {
        let x = random_vec(rng, op.input_dim());
        let y = random_vec(rng, op.output_dim());
        let lhs = op.apply(&x).dot(&y);
        let rhs = x.dot(&op.adjoint(&y));
        ((lhs - rhs).abs(), lhs.abs().max(1.0))
    }

    #[test]
    fn gradient_of_constant_image_is_zero() {
        let g = DiscreteGradient::new(ImageShape::square(5).unwrap());
        let field = g.apply(&Vector::from_fn(25, |_| 3.5));
        assert_eq!(field.norm_inf(), 0.0);
    }

    #[test]
    fn gradient_two_by_two_example() {
        let g = DiscreteGradient::new(ImageShape::square(2).unwrap());
        // [[0, 1], [0, 1]]
        let field = g.apply(&Vector::from_slice(&[0.0, 1.0, 0.0, 1.0]).unwrap());
        assert_eq!(&field.as_slice()[..4], &[1.0, 0.0, 1.0, 0.0]);
        assert_eq!(&field.as_slice()[4..], &[0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn gradient_rejects_wrong_shape() {
        let g = DiscreteGradient::new(ImageShape::new(2, 3).unwrap());
        assert!(g.checked_apply(&Vector::zeros(5)).is_err());
    }

    #[test]
    fn adjoint_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let grad = DiscreteGradient::new(ImageShape::new(6, 9).unwrap());
        for _ in 0..20 {
            let (gap, scale) = adjoint_gap(&grad, &mut rng);
            assert!(gap <= 1e-12 * scale, "gradient adjoint gap {gap}");
        }
        let blur = GaussianBlur::new(ImageShape::square(8).unwrap(), 4, 2.0).unwrap();
        for _ in 0..20 {
            let (gap, scale) = adjoint_gap(&blur, &mut rng);
            assert!(gap <= 1e-12 * scale, "blur adjoint gap {gap}");
        }
        let m = Matrix::from_row_major(3, 2, (0..6).map(|i| i as f64 - 2.5).collect()).unwrap();
        let (gap, scale) = adjoint_gap(&MatrixOperator(m), &mut rng);
        assert!(gap <= 1e-12 * scale);
    }

    #[test]
    fn gradient_norm_bound_holds() {
        let grad = DiscreteGradient::new(ImageShape::square(16).unwrap());
        let est = power_iteration_norm_sq(&grad, 5000, 1e-12);
        assert!(est <= DiscreteGradient::NORM_SQ_BOUND);
        assert!(est > 7.0);
    }

    #[test]
    fn blur_size_one_is_identity() {
        let blur = GaussianBlur::new(ImageShape::new(3, 4).unwrap(), 1, 2.0).unwrap();
        let x = Vector::from_fn(12, |i| i as f64 * 0.5 - 1.0);
        assert_eq!(blur.apply(&x), x);
        assert_eq!(blur.adjoint(&x), x);
    }

    #[test]
    fn blur_fixes_constant_images_and_is_bounded() {
        let shape = ImageShape::square(8).unwrap();
        let blur = GaussianBlur::new(shape, 4, 2.0).unwrap();
        assert!((blur.kernel().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let c = Vector::from_fn(64, |_| 0.3);
        let out = blur.apply(&c);
        assert!(out.dist(&c) < 1e-14);
        let l = power_iteration_norm_sq(&blur, 5000, 1e-14);
        assert!(l.sqrt() <= blur.operator_norm_bound() + 1e-12);
        // constants are fixed points, so the norm is at least one; the
        // off-centre even stencil lets boundary columns collect extra mass
        assert!(l >= 1.0 - 1e-9, "blur norm^2 {l}");
    }

    #[test]
    fn reflect_indices() {
        assert_eq!(reflect(-1, 4), 0);
        assert_eq!(reflect(-2, 4), 1);
        assert_eq!(reflect(4, 4), 3);
        assert_eq!(reflect(5, 4), 2);
        assert_eq!(reflect(-3, 1), 0);
    }
}
