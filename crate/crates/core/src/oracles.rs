//! Function oracles: values, subgradients, ε-subgradients, gradients, and
//! exact proximal maps where they exist.
//!
//! An ε-subgradient `u` of `F` at `x` satisfies
//! `F(x') ≥ F(x) + ⟨u, x' − x⟩ − ε` for every `x'`. Oracles produce them
//! in one of two certifiable ways:
//!
//! * separable ℓ1 terms sample each coordinate from its exact
//!   ε_i-subdifferential interval, with the ε_i summing to ε;
//! * everything else returns a subgradient taken at a perturbed point
//!   `z = x + t d`, which is an ε-subgradient at `x` with
//!   `ε = F(x) − F(z) − ⟨v, x − z⟩`. The step `t` is chosen so that this
//!   induced value does not exceed the requested ε.

use std::fmt::Debug;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::operators::{DiscreteGradient, ImageShape, LinearOperator};

/// Random source used by ε-subgradient samplers; seeded per solver run.
pub type SolverRng = ChaCha8Rng;

/// A closed convex function on `ℝⁿ`.
pub trait ConvexFunction: Send + Sync + Debug {
    fn dim(&self) -> usize;

    fn value(&self, x: &Vector) -> f64;

    /// Some element of `∂F(x)`.
    fn subgradient(&self, x: &Vector) -> Vector;

    /// The element of `∂F(x)` closest to `target`. Defaults to [`Self::subgradient`]
    /// for functions whose subdifferential is a singleton almost everywhere.
    fn subgradient_nearest(&self, x: &Vector, _target: &Vector) -> Vector {
        self.subgradient(x)
    }

    /// Some element of `∂_ε F(x)`; `eps = 0` must return [`Self::subgradient`].
    fn eps_subgradient(&self, x: &Vector, eps: f64, rng: &mut SolverRng) -> Vector {
        perturbed_point_eps_subgradient(self, x, eps, rng)
    }

    fn gradient(&self, _x: &Vector) -> Option<Vector> {
        None
    }

    /// Lipschitz constant of the gradient, for smooth functions.
    fn lipschitz(&self) -> Option<f64> {
        None
    }

    fn is_smooth(&self) -> bool {
        false
    }

    /// `F(x) + F*(u) − ⟨u, x⟩`, the smallest `ε` with `u ∈ ∂_ε F(x)`, when the
    /// conjugate is available in closed form. `+∞` means `u` is outside every
    /// ε-subdifferential.
    fn fenchel_young_gap(&self, _x: &Vector, _u: &Vector) -> Option<f64> {
        None
    }

    /// `prox_{αF}(z)` when it has a closed form.
    fn exact_prox(&self, _alpha: f64, _z: &Vector) -> Option<Vector> {
        None
    }

    fn as_least_squares(&self) -> Option<&LeastSquares> {
        None
    }

    /// `λ` when the function is `λ‖·‖₁`.
    fn l1_weight(&self) -> Option<f64> {
        None
    }

    /// A bound on `‖v‖` over every subgradient `v`, when one exists.
    fn subgradient_norm_bound(&self) -> Option<f64> {
        None
    }
}

/// Generic ε-subgradient: a subgradient at a perturbed point whose induced
/// error is at most `eps`.
pub fn perturbed_point_eps_subgradient<F: ConvexFunction + ?Sized>(
    func: &F,
    x: &Vector,
    eps: f64,
    rng: &mut SolverRng,
) -> Vector {
    if eps <= 0.0 {
        return func.subgradient(x);
    }
    let mut dir = Vector::from_fn(x.dim(), |_| rng.random_range(-1.0..1.0));
    let n = dir.norm();
    if n == 0.0 {
        return func.subgradient(x);
    }
    dir = dir.scale(1.0 / n);
    let fx = func.value(x);
    let induced = |t: f64| -> (f64, Vector) {
        let z = x.add_scaled(t, &dir);
        let v = func.subgradient(&z);
        let e = fx - func.value(&z) - v.dot(&(x - &z));
        (e, v)
    };
    // grow t while the induced error stays below eps, then bisect the boundary
    let mut lo = 0.0;
    let mut best = func.subgradient(x);
    let mut hi = 1.0_f64.max(x.norm_inf());
    let mut bracketed = false;
    for _ in 0..60 {
        let (e, v) = induced(hi);
        if e <= eps {
            lo = hi;
            best = v;
            hi *= 2.0;
        } else {
            bracketed = true;
            break;
        }
    }
    if bracketed {
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            let (e, v) = induced(mid);
            if e <= eps {
                lo = mid;
                best = v;
            } else {
                hi = mid;
            }
        }
    }
    best
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.lo - tol && v <= self.hi + tol
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// The ε-subdifferential of `t ↦ |t|`.
pub fn eps_subdiff_interval_abs(t: f64, eps: f64) -> Interval {
    debug_assert!(eps >= 0.0);
    if t > 0.0 {
        Interval {
            lo: (1.0 - eps / t).max(-1.0),
            hi: 1.0,
        }
    } else if t < 0.0 {
        Interval {
            lo: -1.0,
            hi: (-1.0 - eps / t).min(1.0),
        }
    } else {
        Interval { lo: -1.0, hi: 1.0 }
    }
}

fn value_tolerance(a: f64, b: f64) -> f64 {
    1e-12 * (1.0 + a.abs() + b.abs())
}

/// Tests the ε-subgradient inequality at every probe point.
///
/// This is a necessary-condition sampler in general; with
/// [`kink_probes`] it is exhaustive for separable piecewise-linear `F`.
pub fn check_eps_subgradient(
    func: &dyn ConvexFunction,
    x: &Vector,
    u: &Vector,
    eps: f64,
    probes: &[Vector],
) -> bool {
    let fx = func.value(x);
    probes.iter().all(|p| {
        let fp = func.value(p);
        let rhs = fx + u.dot(&(p - x)) - eps;
        fp >= rhs - value_tolerance(fp, fx)
    })
}

/// Probe points for separable sums of absolute values: the origin (where
/// every kink sits) plus far points along each coordinate axis.
pub fn kink_probes(x: &Vector, radius: f64) -> Vec<Vector> {
    let mut probes = vec![Vector::zeros(x.dim()), x.clone()];
    for i in 0..x.dim() {
        for s in [-1.0, 1.0] {
            let mut p = x.clone().into_inner();
            p[i] += s * radius;
            probes.push(Vector::from_raw(p));
        }
    }
    probes
}

/// `ε = F(z) − F(x_src) − ⟨v, z − x_src⟩`, the level at which a subgradient
/// taken at `x_src` is an ε-subgradient at `z`.
pub fn induced_eps_from_subgradient(
    func: &dyn ConvexFunction,
    x_src: &Vector,
    v: &Vector,
    z: &Vector,
) -> Result<f64> {
    let fz = func.value(z);
    let fx = func.value(x_src);
    let eps = fz - fx - v.dot(&(z - x_src));
    if eps < -value_tolerance(fz, fx).max(1e-12) {
        return Err(Error::InvalidCertificate(format!(
            "induced epsilon {eps:e} is negative; v is not a subgradient at the source point"
        )));
    }
    Ok(eps.max(0.0))
}

/// `λ‖x‖₁`
#[derive(Debug, Clone)]
pub struct L1Norm {
    pub dim: usize,
    pub weight: f64,
}

impl L1Norm {
    pub fn new(dim: usize, weight: f64) -> Self {
        Self { dim, weight }
    }

    /// Soft thresholding at level `alpha * weight`.
    pub fn soft_threshold(&self, alpha: f64, z: &Vector) -> Vector {
        let level = alpha * self.weight;
        z.map(|v| v.signum() * (v.abs() - level).max(0.0))
    }
}

impl ConvexFunction for L1Norm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &Vector) -> f64 {
        self.weight * x.norm_l1()
    }

    fn subgradient(&self, x: &Vector) -> Vector {
        let w = self.weight;
        x.map(|v| if v == 0.0 { 0.0 } else { w * v.signum() })
    }

    fn subgradient_nearest(&self, x: &Vector, target: &Vector) -> Vector {
        let w = self.weight;
        x.zip_map(target, |v, t| {
            if v == 0.0 {
                t.clamp(-w, w)
            } else {
                w * v.signum()
            }
        })
    }

    /// Splits `eps` into random nonnegative shares and samples each
    /// coordinate uniformly from its share's interval.
    fn eps_subgradient(&self, x: &Vector, eps: f64, rng: &mut SolverRng) -> Vector {
        if eps <= 0.0 {
            return self.subgradient(x);
        }
        let shares: Vec<f64> = (0..x.dim()).map(|_| rng.random_range(0.0..1.0)).collect();
        let total: f64 = shares.iter().sum::<f64>().max(f64::MIN_POSITIVE);
        let w = self.weight;
        Vector::from_raw(
            x.iter()
                .zip(&shares)
                .map(|(&t, &s)| {
                    // ∂_e(λ|·|)(t) = λ ∂_{e/λ}|·|(t)
                    let iv = eps_subdiff_interval_abs(t, eps * s / total / w);
                    w * rng.random_range(iv.lo..=iv.hi)
                })
                .collect(),
        )
    }

    fn fenchel_young_gap(&self, x: &Vector, u: &Vector) -> Option<f64> {
        let w = self.weight;
        if u.iter().any(|v| v.abs() > w * (1.0 + 1e-12)) {
            return Some(f64::INFINITY);
        }
        let gap: f64 = x.iter().zip(u.iter()).map(|(&t, &v)| w * t.abs() - v * t).sum();
        Some(gap.max(0.0))
    }

    fn exact_prox(&self, alpha: f64, z: &Vector) -> Option<Vector> {
        Some(self.soft_threshold(alpha, z))
    }

    fn l1_weight(&self) -> Option<f64> {
        Some(self.weight)
    }

    fn subgradient_norm_bound(&self) -> Option<f64> {
        Some(self.weight * (self.dim as f64).sqrt())
    }
}

/// `F ≡ 0`
#[derive(Debug, Clone)]
pub struct ZeroFunction(pub usize);

impl ConvexFunction for ZeroFunction {
    fn dim(&self) -> usize {
        self.0
    }
    fn value(&self, _x: &Vector) -> f64 {
        0.0
    }
    fn subgradient(&self, x: &Vector) -> Vector {
        Vector::zeros(x.dim())
    }
    fn eps_subgradient(&self, x: &Vector, _eps: f64, _rng: &mut SolverRng) -> Vector {
        Vector::zeros(x.dim())
    }
    fn gradient(&self, x: &Vector) -> Option<Vector> {
        Some(Vector::zeros(x.dim()))
    }
    fn lipschitz(&self) -> Option<f64> {
        Some(0.0)
    }
    fn is_smooth(&self) -> bool {
        true
    }
    fn subgradient_norm_bound(&self) -> Option<f64> {
        Some(0.0)
    }

    fn fenchel_young_gap(&self, _x: &Vector, u: &Vector) -> Option<f64> {
        Some(if u.norm_inf() == 0.0 { 0.0 } else { f64::INFINITY })
    }
    fn exact_prox(&self, _alpha: f64, z: &Vector) -> Option<Vector> {
        Some(z.clone())
    }
}

/// `½‖Ax − b‖²` with `L = ‖A*A‖`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    op: Arc<dyn LinearOperator>,
    b: Vector,
    lipschitz: f64,
}

impl LeastSquares {
    pub fn new(op: Arc<dyn LinearOperator>, b: Vector, lipschitz: f64) -> Result<Self> {
        if op.output_dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: op.output_dim(),
                found: b.dim(),
            });
        }
        Ok(Self { op, b, lipschitz })
    }

    pub fn operator(&self) -> &Arc<dyn LinearOperator> {
        &self.op
    }

    pub fn rhs(&self) -> &Vector {
        &self.b
    }

    fn residual(&self, x: &Vector) -> Vector {
        &self.op.apply(x) - &self.b
    }
}

impl ConvexFunction for LeastSquares {
    fn dim(&self) -> usize {
        self.op.input_dim()
    }

    fn value(&self, x: &Vector) -> f64 {
        0.5 * self.residual(x).norm_sq()
    }

    fn subgradient(&self, x: &Vector) -> Vector {
        self.op.adjoint(&self.residual(x))
    }

    /// Gradient at `x + t d` with `t` chosen so that `½ t² ‖A d‖² = eps`.
    fn eps_subgradient(&self, x: &Vector, eps: f64, rng: &mut SolverRng) -> Vector {
        if eps <= 0.0 {
            return self.subgradient(x);
        }
        let mut dir = Vector::from_fn(x.dim(), |_| rng.random_range(-1.0..1.0));
        let n = dir.norm();
        if n == 0.0 {
            return self.subgradient(x);
        }
        dir = dir.scale(1.0 / n);
        let ad = self.op.apply(&dir).norm_sq();
        if ad == 0.0 {
            return self.subgradient(x);
        }
        // shave a hair off so rounding never pushes the induced error above eps
        let t = (2.0 * eps * (1.0 - 1e-9) / ad).sqrt();
        self.subgradient(&x.add_scaled(t, &dir))
    }

    fn gradient(&self, x: &Vector) -> Option<Vector> {
        Some(self.subgradient(x))
    }

    fn lipschitz(&self) -> Option<f64> {
        Some(self.lipschitz)
    }

    fn is_smooth(&self) -> bool {
        true
    }

    fn as_least_squares(&self) -> Option<&LeastSquares> {
        Some(self)
    }
}

/// Isotropic total variation `τ Σ ‖(∇x)_{ij}‖₂`.
#[derive(Debug, Clone)]
pub struct TotalVariation {
    pub tau: f64,
    pub grad: DiscreteGradient,
}

impl TotalVariation {
    pub fn new(shape: ImageShape, tau: f64) -> Self {
        Self {
            tau,
            grad: DiscreteGradient::new(shape),
        }
    }

    pub fn shape(&self) -> ImageShape {
        self.grad.shape
    }

    /// `ω(p) = τ Σ ‖p_{ij}‖₂` on gradient fields.
    pub fn field_penalty(&self, field: &Vector) -> f64 {
        let f = field.as_slice();
        self.tau
            * (0..self.grad.shape.len())
                .map(|p| self.grad.block_norm(f, p))
                .sum::<f64>()
    }
}

impl ConvexFunction for TotalVariation {
    fn dim(&self) -> usize {
        self.grad.shape.len()
    }

    fn value(&self, x: &Vector) -> f64 {
        self.field_penalty(&self.grad.apply(x))
    }

    fn subgradient(&self, x: &Vector) -> Vector {
        let field = self.grad.apply(x);
        let n = self.grad.shape.len();
        let f = field.as_slice();
        let mut q = vec![0.0; 2 * n];
        for p in 0..n {
            let nrm = self.grad.block_norm(f, p);
            if nrm > 0.0 {
                q[p] = self.tau * f[p] / nrm;
                q[n + p] = self.tau * f[n + p] / nrm;
            }
        }
        self.grad.adjoint(&Vector::from_raw(q))
    }

    /// Every ε-subgradient is `τ∇*p` with pixelwise `|p| ≤ 1`.
    fn subgradient_norm_bound(&self) -> Option<f64> {
        Some(self.tau * (DiscreteGradient::NORM_SQ_BOUND * self.dim() as f64).sqrt())
    }
}

/// `f + g` as a single oracle.
#[derive(Debug, Clone)]
pub struct SumFunction {
    pub f: Arc<dyn ConvexFunction>,
    pub g: Arc<dyn ConvexFunction>,
}

impl ConvexFunction for SumFunction {
    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn value(&self, x: &Vector) -> f64 {
        self.f.value(x) + self.g.value(x)
    }

    fn subgradient(&self, x: &Vector) -> Vector {
        &self.f.subgradient(x) + &self.g.subgradient(x)
    }

    fn eps_subgradient(&self, x: &Vector, eps: f64, rng: &mut SolverRng) -> Vector {
        &self.f.eps_subgradient(x, 0.5 * eps, rng) + &self.g.eps_subgradient(x, 0.5 * eps, rng)
    }

    fn gradient(&self, x: &Vector) -> Option<Vector> {
        Some(&self.f.gradient(x)? + &self.g.gradient(x)?)
    }

    fn lipschitz(&self) -> Option<f64> {
        Some(self.f.lipschitz()? + self.g.lipschitz()?)
    }

    fn is_smooth(&self) -> bool {
        self.f.is_smooth() && self.g.is_smooth()
    }
}

/// Running maxima of `‖u^k‖`, `‖w^k‖`, `‖w̄^k‖` over one run, an online
/// estimate of the bound `c` on all three.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SubgradNormTracker {
    pub running_max_u: f64,
    pub running_max_w: f64,
    pub running_max_wbar: f64,
}

impl SubgradNormTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe_u(&mut self, u: &Vector) {
        self.running_max_u = self.running_max_u.max(u.norm());
    }

    pub fn observe_w(&mut self, w: &Vector) {
        self.running_max_w = self.running_max_w.max(w.norm());
    }

    pub fn observe_wbar(&mut self, wbar: &Vector) {
        self.running_max_wbar = self.running_max_wbar.max(wbar.norm());
    }

    /// Current estimate of `c`.
    pub fn c(&self) -> f64 {
        self.running_max_u
            .max(self.running_max_w)
            .max(self.running_max_wbar)
    }
}
