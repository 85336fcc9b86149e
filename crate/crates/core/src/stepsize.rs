//! Stepsize rules: constant, diminishing, and Polyak-type steps with a known
//! optimal value or a decreasing estimate of it.

use crate::error::{invalid, Error, Result};

/// Which rule picks `α_k`.
#[derive(Debug, Clone, PartialEq)]
pub enum StepsizePolicy {
    Constant(f64),
    Diminishing { alpha0: f64, exponent: f64 },
    PolyakAlg1 { gamma_lo: f64, gamma_hi: f64, estimates: EstimateSequence },
    PolyakAlg2 { gamma_lo: f64, gamma_hi: f64, estimates: EstimateSequence, c: f64 },
    PolyakExact { gamma_lo: f64, gamma_hi: f64, s_star: f64 },
}

impl StepsizePolicy {
    pub fn validate(&self) -> Result<()> {
        match self {
            StepsizePolicy::Constant(a) => positive("alpha", *a),
            StepsizePolicy::Diminishing { alpha0, exponent } => {
                positive("alpha0", *alpha0)?;
                if *exponent > 0.0 && *exponent <= 1.0 {
                    Ok(())
                } else {
                    Err(invalid("exponent", "must lie in (0, 1]"))
                }
            }
            StepsizePolicy::PolyakAlg1 { gamma_lo, gamma_hi, .. }
            | StepsizePolicy::PolyakExact { gamma_lo, gamma_hi, .. } => gamma_bounds(*gamma_lo, *gamma_hi),
            StepsizePolicy::PolyakAlg2 { gamma_lo, gamma_hi, c, .. } => {
                gamma_bounds(*gamma_lo, *gamma_hi)?;
                positive("c", *c)
            }
        }
    }

    pub fn is_polyak(&self) -> bool {
        !matches!(self, StepsizePolicy::Constant(_) | StepsizePolicy::Diminishing { .. })
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be positive and finite, got {v}")))
    }
}

fn gamma_bounds(lo: f64, hi: f64) -> Result<()> {
    if lo > 0.0 && lo <= hi && hi < 2.0 {
        Ok(())
    } else {
        Err(invalid("gamma", format!("need 0 < gamma_lo <= gamma_hi < 2, got [{lo}, {hi}]")))
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 2.0 {
        Ok(())
    } else {
        Err(invalid("gamma", format!("must lie in (0, 2), got {gamma}")))
    }
}

/// Decreasing estimates `s_k` of the optimal value. On an estimate
/// violation (`F(x^k) − s_k − ε_k ≤ 0`) the estimate is lowered by
/// `shrink · (|s_k| + 1)` until the numerator is positive again.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateSequence {
    pub current: f64,
    pub shrink: f64,
    pub history: Vec<f64>,
}

impl EstimateSequence {
    pub fn new(initial: f64, shrink: f64) -> Self {
        Self {
            current: initial,
            shrink,
            history: vec![initial],
        }
    }

    /// Constant sequence.
    pub fn fixed(value: f64) -> Self {
        Self::new(value, 0.0)
    }

    /// `s_k` usable at `F(x^k)` with error `ε_k`; lowers the estimate if
    /// needed. Fails when the sequence is fixed and violated.
    pub fn value_for(&mut self, f_xk: f64, eps_k: f64) -> Result<f64> {
        let mut guard = 0;
        while f_xk - self.current - eps_k <= 0.0 {
            if self.shrink <= 0.0 || guard > 200 {
                return Err(Error::EstimateViolation {
                    numerator: f_xk - self.current - eps_k,
                });
            }
            self.current -= self.shrink * (self.current.abs() + 1.0);
            guard += 1;
        }
        if self.history.last() != Some(&self.current) {
            self.history.push(self.current);
        }
        Ok(self.current)
    }

    /// The limit `s̃` reached so far.
    pub fn limit(&self) -> f64 {
        self.current
    }
}

pub fn step_constant(alpha: f64) -> Result<f64> {
    positive("alpha", alpha)?;
    Ok(alpha)
}

/// `α0 / k^p`; `k = 0` is treated as `k = 1`.
pub fn step_diminishing(alpha0: f64, p: f64, k: usize) -> Result<f64> {
    positive("alpha0", alpha0)?;
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid("p", "must lie in (0, 1]"));
    }
    Ok(alpha0 / (k.max(1) as f64).powf(p))
}

fn polyak_quotient(gamma: f64, numerator: f64, denom: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if !(numerator > 0.0) {
        return Err(Error::EstimateViolation { numerator });
    }
    if !(denom > 0.0) {
        return Err(Error::Stationary);
    }
    Ok(gamma * numerator / denom)
}

/// `γ (F(x^k) − s_k − ε_k) / ‖u^k + w^k‖²`.
pub fn step_polyak_alg1(gamma: f64, f_xk: f64, s_k: f64, eps_k: f64, u_plus_w_normsq: f64) -> Result<f64> {
    polyak_quotient(gamma, f_xk - s_k - eps_k, u_plus_w_normsq)
}

/// `σ²c²/(1−σ)²`, the extra denominator term for relative-error steps.
pub fn sigma_term(sigma: f64, c: f64) -> f64 {
    sigma * sigma * c * c / ((1.0 - sigma) * (1.0 - sigma))
}

/// `γ (F(x^k) − s_k − ε_k) / (σ²c²/(1−σ)² + ‖u^k + w^k‖²)`.
#[allow(clippy::too_many_arguments)]
pub fn step_polyak_alg2(
    gamma: f64,
    f_xk: f64,
    s_k: f64,
    eps_k: f64,
    u_plus_w_normsq: f64,
    sigma: f64,
    c: f64,
) -> Result<f64> {
    if !(0.0..1.0).contains(&sigma) {
        return Err(invalid("sigma", "must lie in [0, 1)"));
    }
    positive("c", c)?;
    polyak_quotient(gamma, f_xk - s_k - eps_k, sigma_term(sigma, c) + u_plus_w_normsq)
}

/// `γ (F(x^k) − s⋆) / denom`. Returns `0` when `F(x^k) = s⋆` (converged).
pub fn step_polyak_exact(gamma: f64, f_xk: f64, s_star: f64, denom: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if f_xk == s_star {
        return Ok(0.0);
    }
    polyak_quotient(gamma, f_xk - s_star, denom)
}

/// Interval of admissible steps `(0, 2(F(x^k) − s⋆)/denom)` for the Polyak
/// inequality with a known optimum.
pub fn polyak_interval(f_xk: f64, s_star: f64, denom: f64) -> (f64, f64) {
    (0.0, 2.0 * (f_xk - s_star) / denom)
}
