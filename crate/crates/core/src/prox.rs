//! Exact and inexact proximal maps, acceptance tests for the inexactness
//! criteria, and the dual-gap machinery for total variation.
//!
//! Every inexact prox returns a [`ProxCertificate`] `(x̄, w̄, ε̄)` together with
//! the two sides of the inequality it satisfies, so callers can log the
//! residuals without recomputing them.

use crate::error::{invalid, Error, Result};
use crate::linalg::Vector;
use crate::operators::LinearOperator;
use crate::oracles::{ConvexFunction, TotalVariation};

/// Number of evenly spaced points tried on the segment `[prox(y), y]`.
pub const SEGMENT_SAMPLES: usize = 32;

/// Gap values this close below zero are floating-point weak-duality noise.
pub const GAP_CLAMP: f64 = 1e-10;

/// Soft thresholding, the prox of `α‖·‖₁`.
pub fn prox_l1(alpha: f64, z: &Vector) -> Result<Vector> {
    if !(alpha > 0.0) {
        return Err(invalid("alpha", "must be positive"));
    }
    Ok(z.map(|v| v.signum() * (v.abs() - alpha).max(0.0)))
}

/// Outcome of a criterion check: `pass` iff `lhs ≤ rhs` (up to roundoff).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckResult {
    pub pass: bool,
    pub lhs: f64,
    pub rhs: f64,
}

fn roundoff(scale: f64) -> f64 {
    1e-12 * (1.0 + scale)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(invalid("alpha", format!("must be positive and finite, got {alpha}")))
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if (0.0..1.0).contains(&sigma) {
        Ok(())
    } else {
        Err(invalid("sigma", format!("must lie in [0, 1), got {sigma}")))
    }
}

/// Rejects `v ∉ ∂_ε g(x)` when `g` exposes a Fenchel–Young gap.
pub fn check_membership(g: &dyn ConvexFunction, x: &Vector, v: &Vector, eps: f64) -> Result<()> {
    if let Some(gap) = g.fenchel_young_gap(x, v) {
        let tol = 1e-10 * (1.0 + g.value(x).abs() + v.dot(x).abs());
        if gap > eps + tol {
            return Err(Error::InvalidCertificate(format!(
                "v is only a {gap:e}-subgradient, needed {eps:e}"
            )));
        }
    }
    Ok(())
}

/// `‖αv + x − z‖ ≤ r` with `v ∈ ∂g(x)`.
pub fn check_r_approximate(
    g: &dyn ConvexFunction,
    alpha: f64,
    z: &Vector,
    x: &Vector,
    v: &Vector,
    r: f64,
) -> Result<CheckResult> {
    check_alpha(alpha)?;
    if !(r >= 0.0) {
        return Err(invalid("r", "must be nonnegative"));
    }
    check_membership(g, x, v, 0.0)?;
    let residual = x.add_scaled(alpha, v).dist(z);
    Ok(CheckResult {
        pass: residual <= r + roundoff(z.norm()),
        lhs: residual,
        rhs: r,
    })
}

fn relative_lhs(alpha: f64, z: &Vector, x: &Vector, v: &Vector, eps: f64) -> f64 {
    x.add_scaled(alpha, v).dist_sq(z) + 2.0 * alpha * eps
}

/// `‖αv + x − z‖² + 2αε ≤ σ²‖x − z‖²` with `v ∈ ∂_ε g(x)`.
pub fn check_sigma_approximate(
    g: &dyn ConvexFunction,
    alpha: f64,
    z: &Vector,
    x: &Vector,
    v: &Vector,
    eps: f64,
    sigma: f64,
) -> Result<CheckResult> {
    check_alpha(alpha)?;
    check_sigma(sigma)?;
    check_membership(g, x, v, eps)?;
    let lhs = relative_lhs(alpha, z, x, v, eps);
    let rhs = sigma * sigma * x.dist_sq(z);
    Ok(CheckResult {
        pass: lhs <= rhs + roundoff(z.norm_sq()),
        lhs,
        rhs,
    })
}

/// `‖αv + x − z‖² + 2αε ≤ σ²(‖αv‖² + ‖x − z‖²)` with `v ∈ ∂_ε g(x)`.
pub fn check_sigma_quasi_approximate(
    g: &dyn ConvexFunction,
    alpha: f64,
    z: &Vector,
    x: &Vector,
    v: &Vector,
    eps: f64,
    sigma: f64,
) -> Result<CheckResult> {
    check_alpha(alpha)?;
    check_sigma(sigma)?;
    check_membership(g, x, v, eps)?;
    let lhs = relative_lhs(alpha, z, x, v, eps);
    let rhs = sigma * sigma * (alpha * alpha * v.norm_sq() + x.dist_sq(z));
    Ok(CheckResult {
        pass: lhs <= rhs + roundoff(z.norm_sq()),
        lhs,
        rhs,
    })
}

/// The accelerated method's acceptance test
/// `‖αw̄ + x̄ − y‖² + 2αε̄ ≤ σ²(‖x̄ − x̃‖² + ‖α(w̄ + ∇f(x̃))‖²)`,
/// where `y = x̃ − α∇f(x̃)`.
#[allow(clippy::too_many_arguments)]
pub fn check_accel_criterion(
    g: &dyn ConvexFunction,
    alpha: f64,
    y: &Vector,
    x_tilde: &Vector,
    grad_f_xtilde: &Vector,
    x_bar: &Vector,
    w_bar: &Vector,
    eps_bar: f64,
    sigma: f64,
) -> Result<CheckResult> {
    check_alpha(alpha)?;
    if !(sigma >= 0.0 && sigma * sigma < 0.5) {
        return Err(invalid("sigma", format!("need sigma^2 in [0, 1/2), got {sigma}")));
    }
    let expected = x_tilde.add_scaled(-alpha, grad_f_xtilde);
    if expected.dist(y) > 1e-12 * (1.0 + y.norm()) {
        return Err(Error::Precondition(
            "y must equal x_tilde - alpha * grad f(x_tilde)".into(),
        ));
    }
    check_membership(g, x_bar, w_bar, eps_bar)?;
    let (lhs, rhs) = accel_sides(alpha, y, x_tilde, grad_f_xtilde, x_bar, w_bar, eps_bar, sigma);
    Ok(CheckResult {
        pass: lhs <= rhs + roundoff(y.norm_sq()),
        lhs,
        rhs,
    })
}

#[allow(clippy::too_many_arguments)]
fn accel_sides(
    alpha: f64,
    y: &Vector,
    x_tilde: &Vector,
    grad: &Vector,
    x_bar: &Vector,
    w_bar: &Vector,
    eps_bar: f64,
    sigma: f64,
) -> (f64, f64) {
    let lhs = relative_lhs(alpha, y, x_bar, w_bar, eps_bar);
    let rhs = sigma * sigma * (x_bar.dist_sq(x_tilde) + alpha * alpha * (w_bar + grad).norm_sq());
    (lhs, rhs)
}

/// How an absolute residual `r` is turned into a prox-objective error level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RToE {
    /// `e = r / (2α)`; a valid bound only when `r ≤ 1`.
    #[default]
    Literal,
    /// `e = r² / (2α)`; valid for every `r`.
    Squared,
}

impl RToE {
    pub fn convert(self, r: f64, alpha: f64) -> f64 {
        match self {
            RToE::Literal => r_to_e(r, alpha),
            RToE::Squared => r_to_e_squared(r, alpha),
        }
    }
}

/// `r / (2α)`.
pub fn r_to_e(r: f64, alpha: f64) -> f64 {
    r / (2.0 * alpha)
}

/// `r² / (2α)`.
pub fn r_to_e_squared(r: f64, alpha: f64) -> f64 {
    r * r / (2.0 * alpha)
}

/// `g(x) + ‖x − y‖²/(2α)`, the prox objective.
pub fn prox_objective(g: &dyn ConvexFunction, alpha: f64, y: &Vector, x: &Vector) -> f64 {
    g.value(x) + x.dist_sq(y) / (2.0 * alpha)
}

/// Acceptance rule requested from an inexact prox solver.
#[derive(Debug, Clone, PartialEq)]
pub enum Criterion {
    Exact,
    RAbsolute(f64),
    SigmaApprox(f64),
    SigmaQuasi(f64),
    Accel {
        sigma: f64,
        x_tilde: Vector,
        grad: Vector,
    },
    /// Duality gap at most `e`.
    AbsoluteGap(f64),
}

/// Criterion label stored on certificates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CriterionKind {
    Exact,
    RAbsolute(f64),
    SigmaApprox(f64),
    SigmaQuasi(f64),
    AccelCriterion(f64),
    AbsoluteGap(f64),
}

impl Criterion {
    pub fn kind(&self) -> CriterionKind {
        match *self {
            Criterion::Exact => CriterionKind::Exact,
            Criterion::RAbsolute(r) => CriterionKind::RAbsolute(r),
            Criterion::SigmaApprox(s) => CriterionKind::SigmaApprox(s),
            Criterion::SigmaQuasi(s) => CriterionKind::SigmaQuasi(s),
            Criterion::Accel { sigma, .. } => CriterionKind::AccelCriterion(sigma),
            Criterion::AbsoluteGap(e) => CriterionKind::AbsoluteGap(e),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Criterion::Exact => Ok(()),
            Criterion::RAbsolute(r) if *r >= 0.0 => Ok(()),
            Criterion::RAbsolute(_) => Err(invalid("r", "must be nonnegative")),
            Criterion::SigmaApprox(s) | Criterion::SigmaQuasi(s) => check_sigma(*s),
            Criterion::Accel { sigma, .. } if *sigma >= 0.0 && sigma * sigma < 0.5 => Ok(()),
            Criterion::Accel { .. } => Err(invalid("sigma", "need sigma^2 in [0, 1/2)")),
            Criterion::AbsoluteGap(e) if *e >= 0.0 => Ok(()),
            Criterion::AbsoluteGap(_) => Err(invalid("e", "must be nonnegative")),
        }
    }

    /// Both sides of the criterion for the triplet `(x̄, w̄, ε̄)` at `y`.
    /// `AbsoluteGap` compares `ε̄` itself against `e`.
    pub fn sides(&self, alpha: f64, y: &Vector, x_bar: &Vector, w_bar: &Vector, eps_bar: f64) -> (f64, f64) {
        match self {
            Criterion::Exact => (relative_lhs(alpha, y, x_bar, w_bar, eps_bar), 0.0),
            Criterion::RAbsolute(r) => (x_bar.add_scaled(alpha, w_bar).dist(y), *r),
            Criterion::SigmaApprox(s) => (
                relative_lhs(alpha, y, x_bar, w_bar, eps_bar),
                s * s * x_bar.dist_sq(y),
            ),
            Criterion::SigmaQuasi(s) => (
                relative_lhs(alpha, y, x_bar, w_bar, eps_bar),
                s * s * (alpha * alpha * w_bar.norm_sq() + x_bar.dist_sq(y)),
            ),
            Criterion::Accel { sigma, x_tilde, grad } => {
                accel_sides(alpha, y, x_tilde, grad, x_bar, w_bar, eps_bar, *sigma)
            }
            Criterion::AbsoluteGap(e) => (eps_bar, *e),
        }
    }

    fn passes(&self, lhs: f64, rhs: f64, y: &Vector) -> bool {
        let scale = match self {
            Criterion::RAbsolute(_) => y.norm(),
            _ => y.norm_sq(),
        };
        lhs <= rhs + roundoff(scale)
    }
}

/// A certified inexact prox triplet.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxCertificate {
    pub x_bar: Vector,
    pub w_bar: Vector,
    pub eps_bar: f64,
    pub criterion: CriterionKind,
    pub lhs: f64,
    pub rhs: f64,
    pub inner_iterations: usize,
    /// The inner solver hit its iteration cap before the criterion held.
    pub max_inner_reached: bool,
}

impl ProxCertificate {
    /// `‖αw̄ + x̄ − y‖`.
    pub fn residual(&self, alpha: f64, y: &Vector) -> f64 {
        self.x_bar.add_scaled(alpha, &self.w_bar).dist(y)
    }
}

fn exact_prox_of(g: &dyn ConvexFunction, alpha: f64, y: &Vector) -> Result<Vector> {
    g.exact_prox(alpha, y)
        .ok_or_else(|| Error::Precondition("g has no closed-form prox".into()))
}

/// Exact prox packaged as a certificate with `w̄ = (y − x̄)/α`, `ε̄ = 0`.
pub fn solve_prox_exact(g: &dyn ConvexFunction, alpha: f64, y: &Vector) -> Result<ProxCertificate> {
    check_alpha(alpha)?;
    let p = exact_prox_of(g, alpha, y)?;
    let w = (y - &p).scale(1.0 / alpha);
    let lhs = p.add_scaled(alpha, &w).dist(y);
    Ok(ProxCertificate {
        x_bar: p,
        w_bar: w,
        eps_bar: 0.0,
        criterion: CriterionKind::Exact,
        lhs,
        rhs: 0.0,
        inner_iterations: 1,
        max_inner_reached: false,
    })
}

/// Absolute-criterion line search: the sampled point of `[prox_{αg}(y), y]`
/// farthest from the exact prox that is still `r`-approximate, with
/// `w̄ ∈ ∂g(x̄)` and `ε̄ = 0`.
pub fn solve_prox_absolute(g: &dyn ConvexFunction, alpha: f64, y: &Vector, r: f64) -> Result<ProxCertificate> {
    check_alpha(alpha)?;
    if !(r >= 0.0) {
        return Err(invalid("r", "must be nonnegative"));
    }
    if r == 0.0 {
        return solve_prox_exact(g, alpha, y).map(|c| ProxCertificate {
            criterion: CriterionKind::RAbsolute(0.0),
            ..c
        });
    }
    let p = exact_prox_of(g, alpha, y)?;
    let dir = y - &p;
    let tol = roundoff(y.norm());
    let mut evaluated = 0;
    for i in (1..SEGMENT_SAMPLES).rev() {
        evaluated += 1;
        let t = i as f64 / (SEGMENT_SAMPLES - 1) as f64;
        let x = p.add_scaled(t, &dir);
        let w = g.subgradient_nearest(&x, &(y - &x).scale(1.0 / alpha));
        let residual = x.add_scaled(alpha, &w).dist(y);
        if residual <= r + tol {
            return Ok(ProxCertificate {
                x_bar: x,
                w_bar: w,
                eps_bar: 0.0,
                criterion: CriterionKind::RAbsolute(r),
                lhs: residual,
                rhs: r,
                inner_iterations: evaluated,
                max_inner_reached: false,
            });
        }
    }
    let w = dir.scale(1.0 / alpha);
    let residual = p.add_scaled(alpha, &w).dist(y);
    Ok(ProxCertificate {
        x_bar: p,
        w_bar: w,
        eps_bar: 0.0,
        criterion: CriterionKind::RAbsolute(r),
        lhs: residual,
        rhs: r,
        inner_iterations: evaluated + 1,
        max_inner_reached: false,
    })
}

/// Relative-criterion line search on `[prox_{αg}(y), y]`.
///
/// For `AbsoluteGap(e)` a sample passes when its prox objective is within
/// `e` of the minimum. Each sample `x̄` is paired with `w̄ = (y − p)/α ∈ ∂g(p)`, which is an
/// ε̄-subgradient at `x̄` for `ε̄ = g(x̄) − g(p) − ⟨w̄, x̄ − p⟩`, tightened to the
/// Fenchel–Young gap when `g` provides one. Returns the farthest sample
/// satisfying `criterion`.
pub fn solve_prox_segment(
    g: &dyn ConvexFunction,
    alpha: f64,
    y: &Vector,
    criterion: &Criterion,
) -> Result<ProxCertificate> {
    check_alpha(alpha)?;
    criterion.validate()?;
    let exact_kind = |c: ProxCertificate| ProxCertificate {
        criterion: criterion.kind(),
        ..c
    };
    match criterion {
        Criterion::Exact => return solve_prox_exact(g, alpha, y),
        Criterion::RAbsolute(r) => return solve_prox_absolute(g, alpha, y, *r),
        // with σ = 0 only the exact prox qualifies
        Criterion::SigmaApprox(s) | Criterion::SigmaQuasi(s) if *s == 0.0 => {
            return solve_prox_exact(g, alpha, y).map(exact_kind)
        }
        Criterion::Accel { sigma, .. } if *sigma == 0.0 => {
            return solve_prox_exact(g, alpha, y).map(exact_kind)
        }
        _ => {}
    }
    let p = exact_prox_of(g, alpha, y)?;
    let dir = y - &p;
    let w = dir.scale(1.0 / alpha);
    let gp = g.value(&p);
    let phi_p = prox_objective(g, alpha, y, &p);
    let mut evaluated = 0;
    for i in (0..SEGMENT_SAMPLES).rev() {
        evaluated += 1;
        let t = i as f64 / (SEGMENT_SAMPLES - 1) as f64;
        let x = p.add_scaled(t, &dir);
        let eps = if i == 0 {
            0.0
        } else {
            let induced = (g.value(&x) - gp - w.dot(&(&x - &p))).max(0.0);
            match g.fenchel_young_gap(&x, &w) {
                Some(gap) if gap.is_finite() => gap.min(induced),
                _ => induced,
            }
        };
        let (lhs, rhs) = match criterion {
            // e-optimality: excess of the prox objective over its minimum
            Criterion::AbsoluteGap(e) => ((prox_objective(g, alpha, y, &x) - phi_p).max(0.0), *e),
            c => c.sides(alpha, y, &x, &w, eps),
        };
        if i == 0 || criterion.passes(lhs, rhs, y) {
            return Ok(ProxCertificate {
                x_bar: x,
                w_bar: w,
                eps_bar: eps,
                criterion: criterion.kind(),
                lhs,
                rhs,
                inner_iterations: evaluated,
                max_inner_reached: false,
            });
        }
    }
    unreachable!("the exact prox always passes")
}

/// `G(y − α∇*v, v) = Φ_α(y − α∇*v) + Ψ_α(v)` for `g = TV_τ`, where
/// `Φ_α(x) = g(x) + ‖x − y‖²/(2α)` and
/// `Ψ_α(v) = ‖α∇*v − y‖²/(2α) + ω*(v) − ‖y‖²/(2α)`.
/// `+∞` when some block of `v` leaves the τ-ball.
pub fn tv_dual_gap(tv: &TotalVariation, alpha: f64, y: &Vector, v: &Vector) -> Result<f64> {
    check_alpha(alpha)?;
    let n = tv.dim();
    if y.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: y.dim() });
    }
    if v.dim() != tv.grad.field_len() {
        return Err(Error::DimensionMismatch {
            expected: tv.grad.field_len(),
            found: v.dim(),
        });
    }
    let vs = v.as_slice();
    let limit = tv.tau * (1.0 + 1e-12);
    if (0..n).any(|p| tv.grad.block_norm(vs, p) > limit) {
        return Ok(f64::INFINITY);
    }
    let dv = tv.grad.adjoint(v);
    let x = y.add_scaled(-alpha, &dv);
    Ok(gap_from_parts(tv, alpha, y, &x, &dv))
}

fn gap_from_parts(tv: &TotalVariation, alpha: f64, y: &Vector, x: &Vector, dv: &Vector) -> f64 {
    let phi = tv.value(x) + x.dist_sq(y) / (2.0 * alpha);
    let psi = (&dv.scale(alpha) - y).norm_sq() / (2.0 * alpha) - y.norm_sq() / (2.0 * alpha);
    clamp_gap(phi + psi)
}

fn clamp_gap(g: f64) -> f64 {
    if g < 0.0 && g >= -GAP_CLAMP {
        0.0
    } else {
        g
    }
}

/// A dual iterate of the TV prox subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct DualIterate {
    pub v: Vector,
    pub primal: Vector,
    pub gap: f64,
}

/// Projects each 2-vector block of a gradient field onto the τ-ball.
pub fn project_dual(tv: &TotalVariation, v: &mut [f64]) {
    let n = tv.dim();
    for p in 0..n {
        let nrm = tv.grad.block_norm(v, p);
        if nrm > tv.tau {
            let s = tv.tau / nrm;
            v[p] *= s;
            v[n + p] *= s;
        }
    }
}

/// Inexact prox of `TV_τ` by monotone accelerated projected gradient on the
/// dual. Iterate 1 is `v = 0`. Each iterate yields the triplet
/// `x̄ = y − α∇*v`, `w̄ = ∇*v`, `ε̄ = G(x̄, v)`; the certificate carries the
/// smallest-gap triplet seen, so reported gaps never increase with the
/// iteration count. Returns the first triplet meeting `criterion`, or the
/// best one with `max_inner_reached` set.
pub fn solve_prox_tv_dual(
    tv: &TotalVariation,
    alpha: f64,
    y: &Vector,
    criterion: &Criterion,
    max_inner: usize,
) -> Result<(ProxCertificate, DualIterate)> {
    solve_prox_tv_dual_from(tv, alpha, y, criterion, max_inner, None)
}

/// [`solve_prox_tv_dual`] started from a given dual point (projected first).
pub fn solve_prox_tv_dual_from(
    tv: &TotalVariation,
    alpha: f64,
    y: &Vector,
    criterion: &Criterion,
    max_inner: usize,
    warm: Option<&Vector>,
) -> Result<(ProxCertificate, DualIterate)> {
    check_alpha(alpha)?;
    criterion.validate()?;
    if max_inner == 0 {
        return Err(invalid("max_inner", "must be at least 1"));
    }
    if matches!(criterion, Criterion::RAbsolute(_) | Criterion::Exact) {
        return Err(Error::Precondition(
            "dual certificates carry a positive epsilon; use a relative or gap criterion".into(),
        ));
    }
    let n = tv.dim();
    if y.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: y.dim() });
    }
    let m = tv.grad.field_len();
    let mut v = match warm {
        Some(w) if w.dim() == m => {
            let mut raw = w.clone().into_inner();
            project_dual(tv, &mut raw);
            Vector::from_raw(raw)
        }
        Some(w) => return Err(Error::DimensionMismatch { expected: m, found: w.dim() }),
        None => Vector::zeros(m),
    };

    // dual smooth part h(v) = ‖α∇*v − y‖²/(2α); ∇h = −∇x̄(v); Lipschitz α‖∇‖²
    let step = 1.0 / (alpha * crate::operators::DiscreteGradient::NORM_SQ_BOUND);
    let eval = |v: &Vector| {
        let dv = tv.grad.adjoint(v);
        let x = y.add_scaled(-alpha, &dv);
        let gap = gap_from_parts(tv, alpha, y, &x, &dv);
        let h = x.norm_sq() / (2.0 * alpha) - y.norm_sq() / (2.0 * alpha);
        (dv, x, gap, h)
    };

    let (dv0, x0, gap0, mut h_v) = eval(&v);
    let mut best = (x0, dv0, gap0, v.clone());
    let mut iterations = 1;
    let finish = |best: (Vector, Vector, f64, Vector), iterations: usize, hit_cap: bool| {
        let (x, w, gap, vb) = best;
        let (lhs, rhs) = criterion.sides(alpha, y, &x, &w, gap);
        (
            ProxCertificate {
                x_bar: x.clone(),
                w_bar: w,
                eps_bar: gap,
                criterion: criterion.kind(),
                lhs,
                rhs,
                inner_iterations: iterations,
                max_inner_reached: hit_cap,
            },
            DualIterate { v: vb, primal: x, gap },
        )
    };
    {
        let (lhs, rhs) = criterion.sides(alpha, y, &best.0, &best.1, best.2);
        if criterion.passes(lhs, rhs, y) {
            return Ok(finish(best, iterations, false));
        }
    }

    let mut t = 1.0_f64;
    let mut extrap = v.clone();
    while iterations < max_inner {
        iterations += 1;
        // projected ascent step from the extrapolated point
        let x_ex = y.add_scaled(-alpha, &tv.grad.adjoint(&extrap));
        let mut z = extrap.add_scaled(step, &tv.grad.apply(&x_ex)).into_inner();
        project_dual(tv, &mut z);
        let z = Vector::from_raw(z);
        let (dz, xz, gap_z, h_z) = eval(&z);

        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let v_prev = v.clone();
        if h_z <= h_v {
            v = z.clone();
            h_v = h_z;
        }
        extrap = v
            .add_scaled(t / t_next, &(&z - &v))
            .add_scaled((t - 1.0) / t_next, &(&v - &v_prev));
        t = t_next;

        if gap_z < best.2 {
            best = (xz, dz, gap_z, z);
        }
        let (lhs, rhs) = criterion.sides(alpha, y, &best.0, &best.1, best.2);
        if criterion.passes(lhs, rhs, y) {
            return Ok(finish(best, iterations, false));
        }
    }
    Ok(finish(best, iterations, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::ImageShape;
    use crate::oracles::{L1Norm, ZeroFunction};
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_slice(xs).unwrap()
    }

    fn abs1() -> L1Norm {
        L1Norm::new(1, 1.0)
    }

    /// Minimizes `|x| + (x − z)²/(2α)` on a fine grid.
    fn grid_prox_abs(alpha: f64, z: f64) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        for i in -400_000..=400_000 {
            let x = i as f64 * 1e-5;
            let val = x.abs() + (x - z) * (x - z) / (2.0 * alpha);
            if val < best.0 {
                best = (val, x);
            }
        }
        best.1
    }

    #[test]
    fn prox_l1_examples_match_grid_oracle() {
        assert_eq!(prox_l1(1.0, &v(&[2.0])).unwrap(), v(&[1.0]));
        assert!((grid_prox_abs(1.0, 2.0) - 1.0).abs() < 1e-5);
        assert_eq!(prox_l1(0.3, &Vector::zeros(3)).unwrap(), Vector::zeros(3));
        let p = prox_l1(0.5, &v(&[2.0, -0.3])).unwrap();
        assert_eq!(p, v(&[1.5, 0.0]));
        assert!((grid_prox_abs(0.5, 2.0) - 1.5).abs() < 1e-5);
        assert!(grid_prox_abs(0.5, -0.3).abs() < 1e-5);
        assert!(prox_l1(0.0, &v(&[1.0])).is_err());
    }

    #[test]
    fn r_approximate_examples() {
        let g = abs1();
        let res = check_r_approximate(&g, 1.0, &v(&[2.0]), &v(&[1.0]), &v(&[1.0]), 0.0).unwrap();
        assert!(res.pass);
        assert_eq!(res.lhs, 0.0);
        let res = check_r_approximate(&g, 1.0, &v(&[2.0]), &v(&[1.5]), &v(&[1.0]), 0.5).unwrap();
        assert!(res.pass);
        assert_eq!(res.lhs, 0.5);
        let res = check_r_approximate(&g, 1.0, &v(&[2.0]), &v(&[1.5]), &v(&[1.0]), 0.49).unwrap();
        assert!(!res.pass);
        let err = check_r_approximate(&g, 1.0, &v(&[2.0]), &v(&[1.5]), &v(&[0.2]), 1.0);
        assert!(matches!(err, Err(Error::InvalidCertificate(_))));
    }

    #[test]
    fn sigma_approximate_examples() {
        let g = abs1();
        let z = v(&[2.0]);
        let exact = check_sigma_approximate(&g, 1.0, &z, &v(&[1.0]), &v(&[1.0]), 0.0, 0.0).unwrap();
        assert!(exact.pass);
        assert_eq!(exact.lhs, 0.0);
        let x = v(&[1.2]);
        let one = v(&[1.0]);
        let at = |s| check_sigma_approximate(&g, 1.0, &z, &x, &one, 0.0, s).unwrap();
        assert!((at(0.3).lhs - 0.04).abs() < 1e-14);
        assert!((at(0.3).rhs - 0.64 * 0.09).abs() < 1e-14);
        assert!(at(0.25).pass);
        assert!(at(0.3).pass);
        assert!(!at(0.24).pass);
        assert!(!at(0.0).pass);
        assert!(check_sigma_approximate(&g, 1.0, &z, &x, &one, 0.0, 1.0).is_err());
    }

    #[test]
    fn sigma_quasi_examples() {
        let g = abs1();
        let z = v(&[2.0]);
        let x = v(&[1.2]);
        let one = v(&[1.0]);
        let threshold = (0.04f64 / 1.64).sqrt();
        let at = |s| check_sigma_quasi_approximate(&g, 1.0, &z, &x, &one, 0.0, s).unwrap();
        assert!((at(0.5).rhs - 1.64 * 0.25).abs() < 1e-14);
        assert!(at(threshold + 1e-9).pass);
        assert!(!at(threshold - 1e-6).pass);
        assert!(check_sigma_quasi_approximate(&g, 1.0, &z, &v(&[1.0]), &one, 0.0, 0.0).unwrap().pass);
    }

    #[test]
    fn accel_criterion_examples() {
        let g = abs1();
        let y = v(&[2.0]);
        let zero = v(&[0.0]);
        let res = check_accel_criterion(&g, 1.0, &y, &y, &zero, &v(&[1.2]), &v(&[1.0]), 0.0, 0.5).unwrap();
        assert!((res.lhs - 0.04).abs() < 1e-14);
        assert!((res.rhs - 0.25 * 1.64).abs() < 1e-14);
        assert!(res.pass);
        let exact = check_accel_criterion(&g, 1.0, &y, &y, &zero, &v(&[1.0]), &v(&[1.0]), 0.0, 0.0).unwrap();
        assert!(exact.pass && exact.lhs == 0.0);
        let bad = check_accel_criterion(&g, 1.0, &v(&[2.5]), &y, &zero, &v(&[1.2]), &v(&[1.0]), 0.0, 0.5);
        assert!(matches!(bad, Err(Error::Precondition(_))));
        assert!(check_accel_criterion(&g, 1.0, &y, &y, &zero, &v(&[1.2]), &v(&[1.0]), 0.0, 0.75).is_err());
    }

    #[test]
    fn r_to_e_examples() {
        assert_eq!(r_to_e(0.5, 0.25), 1.0);
        assert_eq!(r_to_e(0.0, 3.0), 0.0);
        assert_eq!(r_to_e(0.37, 0.5), 0.37);
        assert_eq!(r_to_e_squared(0.5, 0.25), 0.5);
        assert_eq!(RToE::Squared.convert(2.0, 1.0), 2.0);
    }

    #[test]
    fn literal_conversion_fails_for_large_r() {
        // g = 0: prox is y, x' = y + r is r-approximate with w = 0, and the
        // prox objective excess is r²/(2α) > r/(2α) once r > 1
        let g = ZeroFunction(1);
        let (alpha, y, r) = (1.0, v(&[0.0]), 3.0);
        let x = v(&[r]);
        assert!(check_r_approximate(&g, alpha, &y, &x, &v(&[0.0]), r).unwrap().pass);
        let excess = prox_objective(&g, alpha, &y, &x) - prox_objective(&g, alpha, &y, &y);
        assert!(excess > r_to_e(r, alpha));
        assert!(excess <= r_to_e_squared(r, alpha) + 1e-12);
    }

    #[test]
    fn absolute_line_search_examples() {
        let g = abs1();
        let y = v(&[2.0]);
        let c = solve_prox_absolute(&g, 1.0, &y, 0.0).unwrap();
        assert_eq!(c.x_bar, v(&[1.0]));
        let c = solve_prox_absolute(&g, 1.0, &y, 0.5).unwrap();
        assert!(c.x_bar[0] >= 1.0 && c.x_bar[0] <= 1.5);
        assert!(c.lhs <= 0.5 && c.eps_bar == 0.0);
        // the farthest grid point within 0.5 of the prox
        assert!((c.x_bar[0] - (1.0 + 15.0 / 31.0)).abs() < 1e-12);
        assert!(check_r_approximate(&g, 1.0, &y, &c.x_bar, &c.w_bar, 0.5).unwrap().pass);
        let z = ZeroFunction(2);
        let y2 = v(&[0.3, -4.0]);
        assert_eq!(solve_prox_absolute(&z, 0.7, &y2, 0.1).unwrap().x_bar, y2);
    }

    #[test]
    fn segment_search_returns_certified_triplets() {
        let g = L1Norm::new(3, 1.0);
        let y = v(&[2.0, 0.4, -3.0]);
        for crit in [Criterion::SigmaApprox(0.5), Criterion::SigmaQuasi(0.3)] {
            let c = solve_prox_segment(&g, 0.8, &y, &crit).unwrap();
            assert!(c.lhs <= c.rhs + 1e-12);
            let check = match crit {
                Criterion::SigmaApprox(s) => check_sigma_approximate(&g, 0.8, &y, &c.x_bar, &c.w_bar, c.eps_bar, s),
                Criterion::SigmaQuasi(s) => check_sigma_quasi_approximate(&g, 0.8, &y, &c.x_bar, &c.w_bar, c.eps_bar, s),
                _ => unreachable!(),
            };
            assert!(check.unwrap().pass);
        }
    }

    fn tv(n: usize, tau: f64) -> TotalVariation {
        TotalVariation::new(ImageShape::square(n).unwrap(), tau)
    }

    fn test_image(n: usize) -> Vector {
        Vector::from_fn(n * n, |i| {
            let (r, c) = (i / n, i % n);
            (if r < n / 2 { 1.0 } else { 0.0 }) + (if c > n / 3 { 0.5 } else { 0.0 }) + 0.05 * ((i * 7919) % 13) as f64
        })
    }

    #[test]
    fn tv_gap_examples() {
        let t = tv(4, 0.3);
        let y = test_image(4);
        let zero = Vector::zeros(t.grad.field_len());
        assert!((tv_dual_gap(&t, 0.7, &y, &zero).unwrap() - t.value(&y)).abs() < 1e-12);
        let flat = Vector::from_fn(16, |_| 2.5);
        assert_eq!(tv_dual_gap(&t, 0.7, &flat, &zero).unwrap(), 0.0);
        let outside = Vector::from_fn(t.grad.field_len(), |_| 1.0);
        assert_eq!(tv_dual_gap(&t, 0.7, &y, &outside).unwrap(), f64::INFINITY);
        assert!(tv_dual_gap(&t, 0.7, &v(&[1.0]), &zero).is_err());
    }

    #[test]
    fn tv_dual_solver_behaviour() {
        let t = tv(6, 0.2);
        let y = test_image(6);
        let flat = Vector::from_fn(36, |_| 1.0);
        let (c, _) = solve_prox_tv_dual(&t, 1.0, &flat, &Criterion::SigmaQuasi(0.5), 100).unwrap();
        assert_eq!(c.inner_iterations, 1);
        assert_eq!(c.lhs, 0.0);

        let g0 = t.value(&y);
        let (c, _) = solve_prox_tv_dual(&t, 1.0, &y, &Criterion::AbsoluteGap(g0), 100).unwrap();
        assert_eq!(c.inner_iterations, 1);

        let loose = solve_prox_tv_dual(&t, 1.0, &y, &Criterion::SigmaQuasi(0.99), 3000).unwrap().0;
        let tight = solve_prox_tv_dual(&t, 1.0, &y, &Criterion::SigmaQuasi(0.1), 3000).unwrap().0;
        assert!(!tight.max_inner_reached);
        assert!(loose.inner_iterations <= tight.inner_iterations);
        assert!(tight.lhs <= tight.rhs + 1e-12);
        // residual αw̄ + x̄ − y vanishes, so the lhs is 2αε̄
        assert!((tight.lhs - 2.0 * tight.eps_bar).abs() < 1e-12);
    }

    #[test]
    fn tv_dual_gap_is_nonincreasing_along_inner_iterations() {
        let t = tv(8, 0.15);
        let y = test_image(8);
        let mut last = f64::INFINITY;
        for cap in 1..60 {
            let (c, d) = solve_prox_tv_dual(&t, 0.9, &y, &Criterion::AbsoluteGap(0.0), cap).unwrap();
            assert!(c.eps_bar <= last + 1e-15, "cap {cap}: {} > {last}", c.eps_bar);
            assert!(d.gap >= -GAP_CLAMP);
            last = c.eps_bar;
        }
        assert!(last < 0.5 * t.value(&y));
    }

    #[test]
    fn tv_dual_certificate_is_an_eps_subgradient() {
        use crate::oracles::check_eps_subgradient;
        use rand::{Rng, SeedableRng};
        let t = tv(5, 0.4);
        let y = test_image(5);
        let (c, d) = solve_prox_tv_dual(&t, 0.6, &y, &Criterion::AbsoluteGap(1e-3), 2000).unwrap();
        let vs = d.v.as_slice();
        assert!((0..25).all(|p| t.grad.block_norm(vs, p) <= 0.4 * (1.0 + 1e-12)));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let probes: Vec<Vector> = (0..300)
            .map(|_| Vector::from_fn(25, |_| rng.random_range(-3.0..3.0)))
            .collect();
        assert!(check_eps_subgradient(&t, &c.x_bar, &c.w_bar, c.eps_bar, &probes));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn approx_implies_quasi(
            z in -5.0f64..5.0, x in -5.0f64..5.0, eps in 0.0f64..0.5,
            alpha in 0.1f64..2.0, sigma in 0.0f64..0.99,
        ) {
            let g = abs1();
            let (zv, xv) = (v(&[z]), v(&[x]));
            // any valid eps-subgradient at x
            let iv = crate::oracles::eps_subdiff_interval_abs(x, eps);
            let w = v(&[0.5 * (iv.lo + iv.hi)]);
            let a = check_sigma_approximate(&g, alpha, &zv, &xv, &w, eps, sigma).unwrap();
            let q = check_sigma_quasi_approximate(&g, alpha, &zv, &xv, &w, eps, sigma).unwrap();
            prop_assert!(!a.pass || q.pass);
            prop_assert!(q.rhs >= a.rhs);
        }

        #[test]
        fn r_approximate_points_are_close_to_the_prox(
            y in prop::collection::vec(-4.0f64..4.0, 3),
            alpha in 0.1f64..2.0, r in 0.0f64..2.0,
        ) {
            let g = L1Norm::new(3, 1.0);
            let y = v(&y);
            let c = solve_prox_absolute(&g, alpha, &y, r).unwrap();
            let p = prox_l1(alpha, &y).unwrap();
            prop_assert!(c.x_bar.dist(&p) <= r + 1e-9);
            prop_assert!(check_r_approximate(&g, alpha, &y, &c.x_bar, &c.w_bar, r).unwrap().pass);
        }

        #[test]
        fn conversion_bounds_hold_on_1d(
            y in -4.0f64..4.0, alpha in 0.1f64..2.0, r in 0.0f64..1.0, big_r in 1.0f64..5.0,
        ) {
            let g = abs1();
            let yv = v(&[y]);
            let min = prox_objective(&g, alpha, &yv, &v(&[grid_prox_abs_coarse(alpha, y)]));
            for (radius, rule) in [(r, RToE::Literal), (big_r, RToE::Squared), (r, RToE::Squared)] {
                let c = solve_prox_absolute(&g, alpha, &yv, radius).unwrap();
                let excess = prox_objective(&g, alpha, &yv, &c.x_bar) - min;
                prop_assert!(excess <= rule.convert(radius, alpha) + 1e-7);
            }
        }
    }

    /// Coarse-then-fine grid minimization, cheap enough for proptest.
    fn grid_prox_abs_coarse(alpha: f64, z: f64) -> f64 {
        let obj = |x: f64| x.abs() + (x - z) * (x - z) / (2.0 * alpha);
        let mut best = 0.0;
        let mut width = 8.0;
        for _ in 0..12 {
            let mut local = (f64::INFINITY, best);
            for i in -100..=100 {
                let x = best + width * i as f64 / 100.0;
                if obj(x) < local.0 {
                    local = (obj(x), x);
                }
            }
            best = local.1;
            width /= 20.0;
        }
        best
    }
}
