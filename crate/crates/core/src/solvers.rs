//! The iterative methods and their telemetry.
//!
//! * [`Algorithm::Pss`]: exact proximal subgradient baseline.
//! * [`Algorithm::Pesm1`]: ε-subgradient step on `f`, prox of `g` accurate to an
//!   absolute residual `r_k`.
//! * [`Algorithm::Pesm2`]: same, with the relative criterion at level `σ`.
//! * [`Algorithm::Accel`]: accelerated method with the relative criterion
//!   measured against the extrapolated point.
//! * [`Algorithm::Ipgm`]: proximal gradient with `e_k`-optimal prox, optionally
//!   with momentum.

use std::time::{Duration, Instant};

use rand::SeedableRng;

use crate::error::{invalid, Error, Result};
use crate::linalg::{FeasibleSet, Vector};
use crate::oracles::{SolverRng, SubgradNormTracker};
use crate::problems::ProblemInstance;
use crate::prox::{Criterion, ProxCertificate};
use crate::stepsize::{self, sigma_term, StepsizePolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Pss,
    Pesm1,
    Pesm2,
    Accel,
    Ipgm,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Pss => "pss",
            Algorithm::Pesm1 => "pesm1",
            Algorithm::Pesm2 => "pesm2",
            Algorithm::Accel => "accel",
            Algorithm::Ipgm => "ipgm",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "pss" => Algorithm::Pss,
            "pesm1" => Algorithm::Pesm1,
            "pesm2" => Algorithm::Pesm2,
            "accel" => Algorithm::Accel,
            "ipgm" => Algorithm::Ipgm,
            other => return Err(Error::Parse(format!("unknown algorithm {other:?}"))),
        })
    }
}

/// A nonnegative sequence indexed from `k = 1` (`k = 0` reads as `k = 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    Zero,
    Const(f64),
    /// `scale / k^exponent`
    Power { scale: f64, exponent: f64 },
    /// `(scale / k^exponent)²`
    SquaredPower { scale: f64, exponent: f64 },
    /// `(C / k^exponent)²` with `C` fixed from the first prox subproblem:
    /// `C²/(2α)` equals the gap of the zero dual point at `y⁰ − α∇f(y⁰)`.
    AutoSquaredPower { exponent: f64 },
}

impl Schedule {
    pub fn at(&self, k: usize) -> f64 {
        let k = k.max(1) as f64;
        match *self {
            Schedule::Zero => 0.0,
            Schedule::Const(c) => c,
            Schedule::Power { scale, exponent } => scale / k.powf(exponent),
            Schedule::SquaredPower { scale, exponent } => (scale / k.powf(exponent)).powi(2),
            Schedule::AutoSquaredPower { exponent } => 1.0 / k.powf(2.0 * exponent),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Schedule::Zero) || matches!(self, Schedule::Const(c) if *c == 0.0)
    }

    /// Decay exponent `d` with `√value_k ~ k^(−d)`, or `None` for the zero sequence.
    pub fn sqrt_decay(&self) -> Option<f64> {
        match *self {
            Schedule::Zero => None,
            Schedule::Const(c) if c == 0.0 => None,
            Schedule::Const(_) => Some(0.0),
            Schedule::Power { exponent, .. } => Some(exponent / 2.0),
            Schedule::SquaredPower { exponent, .. } | Schedule::AutoSquaredPower { exponent } => Some(exponent),
        }
    }

    /// Parses `zero`, `const:V`, `pow:S:P`, `sqpow:C:Q` or `sqpow:auto:Q`.
    pub fn parse(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').collect();
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v >= 0.0)
                .ok_or_else(|| Error::Parse(format!("bad number {s:?} in schedule {spec:?}")))
        };
        Ok(match parts.as_slice() {
            ["zero"] | ["0"] => Schedule::Zero,
            ["const", v] => Schedule::Const(num(v)?),
            ["pow", s, p] => Schedule::Power { scale: num(s)?, exponent: num(p)? },
            ["sqpow", "auto", q] => Schedule::AutoSquaredPower { exponent: num(q)? },
            ["sqpow", c, q] => Schedule::SquaredPower { scale: num(c)?, exponent: num(q)? },
            _ => return Err(Error::Parse(format!("unrecognized schedule {spec:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// `‖x^{k+1} − x^k‖² ≤ tol`
    SquaredStep(f64),
    /// `‖x^{k+1} − x^k‖ / ‖x^{k+1}‖ ≤ tol`
    RelativeDiff(f64),
    /// Run the whole horizon.
    Never,
}

/// Extrapolation used by the proximal gradient baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Momentum {
    /// `β_k = 0`
    None,
    /// `β_k = (k − 1)/(k + 2)`
    Standard,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub stepsize: StepsizePolicy,
    /// `ε_k` for the subgradients of `f`.
    pub eps_schedule: Schedule,
    /// `r_k` of the absolute criterion.
    pub r_schedule: Schedule,
    /// `e_k` of the proximal gradient baseline.
    pub e_schedule: Schedule,
    pub sigma: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub stop: StopRule,
    pub seed: u64,
    /// Fixed bound `c` on subgradient norms for Polyak denominators; by
    /// default the running maximum (and `g`'s global bound when known).
    pub c_override: Option<f64>,
    /// Keep the iterate vectors on every record.
    pub keep_vectors: bool,
    /// Solve each prox subproblem as accurately as the problem allows; the
    /// method's own criterion is still evaluated and recorded.
    pub exact_prox: bool,
    pub momentum: Momentum,
    /// Stop when `‖x^k‖` exceeds this.
    pub divergence_threshold: f64,
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm, stepsize: StepsizePolicy) -> Self {
        Self {
            algorithm,
            stepsize,
            eps_schedule: Schedule::Zero,
            r_schedule: Schedule::Zero,
            e_schedule: Schedule::Zero,
            sigma: 0.0,
            max_outer: 1000,
            max_inner: 3000,
            stop: StopRule::Never,
            seed: 0,
            c_override: None,
            keep_vectors: false,
            exact_prox: false,
            momentum: Momentum::None,
            divergence_threshold: 1e12,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if let Err(e) = self.stepsize.validate() {
            problems.push(format!("stepsize: {e}"));
        }
        match self.algorithm {
            Algorithm::Pesm2 if !(0.0..1.0).contains(&self.sigma) => {
                problems.push(format!("sigma: must lie in [0, 1), got {}", self.sigma))
            }
            Algorithm::Accel if !(self.sigma > 0.0 && self.sigma * self.sigma < 0.5) => problems.push(format!(
                "sigma: accelerated method needs sigma^2 in (0, 1/2), got sigma = {}",
                self.sigma
            )),
            _ => {}
        }
        if self.max_outer == 0 {
            problems.push("max_outer: must be at least 1".into());
        }
        if self.max_inner == 0 {
            problems.push("max_inner: must be at least 1".into());
        }
        match self.stop {
            StopRule::SquaredStep(t) | StopRule::RelativeDiff(t) if !(t > 0.0) => {
                problems.push(format!("tol: must be positive, got {t}"))
            }
            _ => {}
        }
        if let Some(c) = self.c_override {
            if !(c > 0.0) {
                problems.push(format!("c: must be positive, got {c}"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }
}

/// Everything observed at one outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub k: usize,
    pub x: Option<Vector>,
    pub y: Option<Vector>,
    pub u: Option<Vector>,
    /// The element of `∂g(x^k)` used in the analysis (never in the update).
    pub w: Option<Vector>,
    pub w_bar: Option<Vector>,
    pub x_next: Option<Vector>,
    pub eps_k: f64,
    pub eps_bar_k: f64,
    pub alpha_k: f64,
    pub r_k: f64,
    pub sigma: f64,
    /// Polyak estimate `s_k`, when one was used.
    pub s_k: Option<f64>,
    pub func_val: f64,
    pub best_val: f64,
    pub u_plus_w_normsq: f64,
    pub wbar_normsq: f64,
    pub residual_lhs: f64,
    pub residual_rhs: f64,
    /// Right minus left side of the one-step distance inequality at `x⋆`.
    pub lemma_slack: Option<f64>,
    pub lemma_scale: f64,
    pub dist_ref: Option<f64>,
    pub dist_ref_next: Option<f64>,
    pub inner_iterations: usize,
    pub flagged: bool,
    pub step_sq: f64,
    pub rel_diff: f64,
    pub elapsed: Duration,
}

/// Per-iteration state of the accelerated method.
#[derive(Debug, Clone, PartialEq)]
pub struct AccelState {
    pub k: usize,
    pub t_k: f64,
    pub beta_k: f64,
    /// `F(x̄^k)`
    pub f_bar: f64,
    /// `η_k`, the minimum of `t_k 𝔏_k(x) + ½‖x − x^0‖²`.
    pub eta_k: f64,
    /// `‖x^k − (x^0 − Σ β_i s_i)‖`, zero up to roundoff.
    pub argmin_gap: f64,
    /// Constant part of `t_k 𝔏_k(x) = K_k + ⟨S_k, x⟩`.
    pub k_sum: f64,
    pub s_sum: Option<Vector>,
    pub x_k: Option<Vector>,
    pub x_bar_k: Option<Vector>,
    pub x_tilde_k: Option<Vector>,
}

impl AccelState {
    /// `𝔏_k(x)`, the averaged affine minorant; needs the stored `S_k`.
    pub fn model_value(&self, x: &Vector) -> Option<f64> {
        let s = self.s_sum.as_ref()?;
        Some((self.k_sum + s.dot(x)) / self.t_k)
    }

    /// `k²σ⁴(1 − σ²)/(4L)`
    pub fn t_lower_bound(k: usize, sigma: f64, lipschitz: f64) -> f64 {
        let s2 = sigma * sigma;
        (k * k) as f64 * s2 * s2 * (1.0 - s2) / (4.0 * lipschitz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxOuter,
    StopRule,
    /// Polyak step with a known optimum reached `F(x^k) ≤ s⋆`.
    Optimal,
    /// `u + w = 0`.
    Stationary,
    Diverged,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<IterateRecord>,
    pub accel: Vec<AccelState>,
    pub stop_reason: StopReason,
    pub warnings: Vec<String>,
    pub final_x: Vector,
    pub final_value: f64,
    pub tracker: SubgradNormTracker,
}

impl RunOutput {
    pub fn outer_iterations(&self) -> usize {
        self.records.len()
    }

    pub fn inner_iterations(&self) -> usize {
        self.records.iter().map(|r| r.inner_iterations).sum()
    }

    pub fn flagged(&self) -> usize {
        self.records.iter().filter(|r| r.flagged).count()
    }

    pub fn final_rel_diff(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.rel_diff)
    }
}

/// Running minimum; on ties the earlier value is kept.
pub fn best_value(values: &[f64]) -> Vec<f64> {
    let mut best = f64::INFINITY;
    values
        .iter()
        .map(|&v| {
            if v < best {
                best = v;
            }
            best
        })
        .collect()
}

/// `(d0² + 2Σα_jε_j + Σr_j² + c_k Σα_j²) / (2Σα_j)` over records `0..=k`,
/// with `c_k = max_j ‖u^j + w^j‖²`.
pub fn rate_bound_alg1(records: &[IterateRecord], d0: f64, k: usize) -> f64 {
    let rs = &records[..=k.min(records.len() - 1)];
    let c = rs.iter().map(|r| r.u_plus_w_normsq).fold(0.0, f64::max);
    let (mut sa, mut sae, mut sr, mut sa2) = (0.0, 0.0, 0.0, 0.0);
    for r in rs {
        sa += r.alpha_k;
        sae += r.alpha_k * r.eps_k;
        sr += r.r_k * r.r_k;
        sa2 += r.alpha_k * r.alpha_k;
    }
    (d0 * d0 + 2.0 * sae + sr + c * sa2) / (2.0 * sa)
}

/// `(d0² + 2Σα_jε_j + c̃_k Σα_j²) / (2Σα_j)` with
/// `c̃_k = max_j σ²/(1−σ)² ‖w̄^j‖² + ‖u^j + w^j‖²`.
pub fn rate_bound_alg2(records: &[IterateRecord], d0: f64, k: usize) -> f64 {
    let rs = &records[..=k.min(records.len() - 1)];
    let c = rs
        .iter()
        .map(|r| relative_factor(r.sigma) * r.wbar_normsq + r.u_plus_w_normsq)
        .fold(0.0, f64::max);
    let (mut sa, mut sae, mut sa2) = (0.0, 0.0, 0.0);
    for r in rs {
        sa += r.alpha_k;
        sae += r.alpha_k * r.eps_k;
        sa2 += r.alpha_k * r.alpha_k;
    }
    (d0 * d0 + 2.0 * sae + c * sa2) / (2.0 * sa)
}

/// `2L d0² / (σ⁴(1 − σ²) k²)`
pub fn rate_bound_accel(lipschitz: f64, sigma: f64, d0: f64, k: usize) -> Result<f64> {
    let s2 = sigma * sigma;
    if !(s2 > 0.0 && s2 < 0.5) {
        return Err(invalid("sigma", "need sigma^2 in (0, 1/2)"));
    }
    if k == 0 {
        return Err(invalid("k", "must be at least 1"));
    }
    Ok(2.0 * lipschitz * d0 * d0 / (s2 * s2 * (1.0 - s2) * (k * k) as f64))
}

fn relative_factor(sigma: f64) -> f64 {
    if sigma == 0.0 {
        0.0
    } else {
        sigma * sigma / ((1.0 - sigma) * (1.0 - sigma))
    }
}

/// Right-hand side, left-hand side and scale of the one-step inequality
/// `‖x^{k+1} − x‖² ≤ ‖x^k − x‖² + 2α(F(x) − F(x^k) + ε) + E + α²‖u + w‖²`,
/// where `E` is `r²` (absolute) or `σ²/(1−σ)² α²‖w̄‖²` (relative).
fn lemma_sides(
    x: &Vector,
    x_next: &Vector,
    x_ref: &Vector,
    f_ref: f64,
    func_val: f64,
    alpha: f64,
    eps: f64,
    r: f64,
    sigma: f64,
    upw: f64,
    wbar_sq: f64,
) -> (f64, f64, f64) {
    let d = x.dist_sq(x_ref);
    let extra = r * r + relative_factor(sigma) * alpha * alpha * wbar_sq;
    let rhs = d + 2.0 * alpha * (f_ref - func_val + eps) + extra + alpha * alpha * upw;
    let lhs = x_next.dist_sq(x_ref);
    let scale = 1.0 + d + 2.0 * alpha * (f_ref.abs() + func_val.abs() + eps) + extra + alpha * alpha * upw;
    (rhs, lhs, scale)
}

/// Recomputes the one-step inequality's slack from a record that kept its
/// vectors. Errors when the slack is below `−1e−9 · scale`.
pub fn verify_descent_lemma(record: &IterateRecord, x_ref: &Vector, f_ref: f64) -> Result<f64> {
    let (Some(x), Some(x_next)) = (&record.x, &record.x_next) else {
        return Err(Error::Precondition("record was stored without iterate vectors".into()));
    };
    let (rhs, lhs, scale) = lemma_sides(
        x,
        x_next,
        x_ref,
        f_ref,
        record.func_val,
        record.alpha_k,
        record.eps_k,
        record.r_k,
        record.sigma,
        record.u_plus_w_normsq,
        record.wbar_normsq,
    );
    let slack = rhs - lhs;
    if slack < -1e-9 * scale {
        return Err(Error::InvariantViolation(format!(
            "descent inequality fails at k={}: slack {slack:e}",
            record.k
        )));
    }
    Ok(slack)
}

fn stop_hit(rule: StopRule, step_sq: f64, rel_diff: f64) -> bool {
    match rule {
        StopRule::SquaredStep(tol) => step_sq <= tol,
        StopRule::RelativeDiff(tol) => rel_diff <= tol,
        StopRule::Never => false,
    }
}

fn rel_diff(x_new: &Vector, x_old: &Vector) -> f64 {
    let n = x_new.norm();
    let d = x_new.dist(x_old);
    if n == 0.0 {
        if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        d / n
    }
}

fn keep(flag: bool, v: &Vector) -> Option<Vector> {
    flag.then(|| v.clone())
}

/// Dispatches on `config.algorithm`.
pub fn run(problem: &ProblemInstance, config: &SolverConfig) -> Result<RunOutput> {
    match config.algorithm {
        Algorithm::Pss | Algorithm::Pesm1 | Algorithm::Pesm2 => subgradient_run(problem, config),
        Algorithm::Accel => accel_run(problem, config),
        Algorithm::Ipgm => ipgm_run(problem, config),
    }
}

pub fn pesm1_run(problem: &ProblemInstance, config: &SolverConfig) -> Result<RunOutput> {
    expect_algorithm(config, Algorithm::Pesm1)?;
    subgradient_run(problem, config)
}

pub fn pesm2_run(problem: &ProblemInstance, config: &SolverConfig) -> Result<RunOutput> {
    expect_algorithm(config, Algorithm::Pesm2)?;
    subgradient_run(problem, config)
}

pub fn pss_run(problem: &ProblemInstance, config: &SolverConfig) -> Result<RunOutput> {
    expect_algorithm(config, Algorithm::Pss)?;
    subgradient_run(problem, config)
}

fn expect_algorithm(config: &SolverConfig, algo: Algorithm) -> Result<()> {
    if config.algorithm == algo {
        Ok(())
    } else {
        Err(Error::Config(vec![format!(
            "algorithm: expected {}, got {}",
            algo.label(),
            config.algorithm.label()
        )]))
    }
}

fn schedule_warnings(config: &SolverConfig) -> Vec<String> {
    let mut out = Vec::new();
    if config.algorithm == Algorithm::Pesm1 {
        if let Some(d) = config.r_schedule.sqrt_decay() {
            // r_k² ~ k^(−4d)
            if 4.0 * d <= 1.0 {
                out.push("r_k is not square summable; the absolute-error analysis does not apply".into());
            }
        }
    }
    out
}

/// Shared loop of the proximal ε-subgradient methods and the exact baseline.
fn subgradient_run(problem: &ProblemInstance, config: &SolverConfig) -> Result<RunOutput> {
    config.validate()?;
    let algo = config.algorithm;
    let start = Instant::now();
    let mut rng = SolverRng::seed_from_u64(config.seed);
    let mut warnings = schedule_warnings(config);
    let reference = problem.reference.as_ref();
    let f_ref = reference.map(|r| problem.objective(&r.x_star));
    let g_bound = problem.g.subgradient_norm_bound();
    if config.algorithm == Algorithm::Pesm2 && config.stepsize.is_polyak() && g_bound.is_none() && config.c_override.is_none() {
        warnings.push("no global bound on subgradients of g; the Polyak denominator uses the running maximum".into());
    }
    let mut estimates = match &config.stepsize {
        StepsizePolicy::PolyakAlg1 { estimates, .. } | StepsizePolicy::PolyakAlg2 { estimates, .. } => {
            Some(estimates.clone())
        }
        _ => None,
    };

    let mut x = problem.set.project(&problem.x0)?;
    let mut tracker = SubgradNormTracker::new();
    let mut records = Vec::new();
    let mut best = f64::INFINITY;
    let mut stop_reason = StopReason::MaxOuter;
    let sigma = if algo == Algorithm::Pesm2 { config.sigma } else { 0.0 };

    for k in 0..config.max_outer {
        let kk = k + 1;
        let fx = problem.objective(&x);
        let eps_k = if algo == Algorithm::Pss { 0.0 } else { config.eps_schedule.at(kk) };
        let u = if eps_k > 0.0 {
            problem.f.eps_subgradient(&x, eps_k, &mut rng)
        } else {
            problem.f.subgradient(&x)
        };
        let w = problem.g.subgradient_nearest(&x, &(-&u));
        tracker.observe_u(&u);
        tracker.observe_w(&w);
        let upw = (&u + &w).norm_sq();
        // the σ-term only has to dominate ‖w̄^k‖²; g's global bound covers every
        // ε-subgradient when it is known, otherwise fall back to the running max
        let c = config.c_override.or(g_bound).unwrap_or_else(|| tracker.c());
        let r_k = if algo == Algorithm::Pesm1 { config.r_schedule.at(kk) } else { 0.0 };

        let mut s_used = None;
        let alpha = match &config.stepsize {
            StepsizePolicy::Constant(a) => stepsize::step_constant(*a)?,
            StepsizePolicy::Diminishing { alpha0, exponent } => stepsize::step_diminishing(*alpha0, *exponent, kk)?,
            StepsizePolicy::PolyakExact { gamma_lo, s_star, .. } => {
                let denom = if algo == Algorithm::Pesm2 { sigma_term(sigma, c) + upw } else { upw };
                if fx <= *s_star {
                    stop_reason = StopReason::Optimal;
                    break;
                }
                match stepsize::step_polyak_exact(*gamma_lo, fx, *s_star, denom) {
                    Err(Error::Stationary) => {
                        stop_reason = StopReason::Stationary;
                        break;
                    }
                    other => other?,
                }
            }
            StepsizePolicy::PolyakAlg1 { gamma_lo, .. } => {
                let est = estimates.as_mut().expect("estimates present for Polyak policies");
                let s = est.value_for(fx, eps_k)?;
                s_used = Some(s);
                match stepsize::step_polyak_alg1(*gamma_lo, fx, s, eps_k, upw) {
                    Err(Error::Stationary) => {
                        stop_reason = StopReason::Stationary;
                        break;
                    }
                    other => other?,
                }
            }
            StepsizePolicy::PolyakAlg2 { gamma_lo, c: c_pol, .. } => {
                let est = estimates.as_mut().expect("estimates present for Polyak policies");
                let s = est.value_for(fx, eps_k)?;
                s_used = Some(s);
                let c_eff = c_pol.max(c);
                match stepsize::step_polyak_alg2(*gamma_lo, fx, s, eps_k, upw, sigma, c_eff) {
                    Err(Error::Stationary) => {
                        stop_reason = StopReason::Stationary;
                        break;
                    }
                    other => other?,
                }
            }
        };

        let y = x.add_scaled(-alpha, &u);
        let criterion = match algo {
            Algorithm::Pss => Criterion::Exact,
            Algorithm::Pesm1 => Criterion::RAbsolute(r_k),
            _ => Criterion::SigmaApprox(sigma),
        };
        let cert = certified_prox(problem, config, alpha, &y, &criterion)?;
        let x_next = problem.set.project(&y.add_scaled(-alpha, &cert.w_bar))?;
        tracker.observe_wbar(&cert.w_bar);
        let wbar_sq = cert.w_bar.norm_sq();

        if fx < best {
            best = fx;
        }
        let (lemma_slack, lemma_scale, dist_ref, dist_ref_next) = match (reference, f_ref) {
            (Some(r), Some(fr)) => {
                let (rhs, lhs, scale) =
                    lemma_sides(&x, &x_next, &r.x_star, fr, fx, alpha, eps_k, r_k, sigma, upw, wbar_sq);
                (Some(rhs - lhs), scale, Some(x.dist(&r.x_star)), Some(x_next.dist(&r.x_star)))
            }
            _ => (None, 0.0, None, None),
        };
        let step_sq = x_next.dist_sq(&x);
        let rd = rel_diff(&x_next, &x);
        let kv = config.keep_vectors;
        records.push(IterateRecord {
            k,
            x: keep(kv, &x),
            y: keep(kv, &y),
            u: keep(kv, &u),
            w: keep(kv, &w),
            w_bar: keep(kv, &cert.w_bar),
            x_next: keep(kv, &x_next),
            eps_k,
            eps_bar_k: cert.eps_bar,
            alpha_k: alpha,
            r_k,
            sigma,
            s_k: s_used,
            func_val: fx,
            best_val: best,
            u_plus_w_normsq: upw,
            wbar_normsq: wbar_sq,
            residual_lhs: cert.lhs,
            residual_rhs: cert.rhs,
            lemma_slack,
            lemma_scale,
            dist_ref,
            dist_ref_next,
            inner_iterations: cert.inner_iterations,
            flagged: cert.max_inner_reached,
            step_sq,
            rel_diff: rd,
            elapsed: start.elapsed(),
        });
        x = x_next;
        if x.norm() > config.divergence_threshold || !x.is_finite() {
            stop_reason = StopReason::Diverged;
            warnings.push(format!("iterate norm exceeded {:e} at k={k}", config.divergence_threshold));
            break;
        }
        if stop_hit(config.stop, step_sq, rd) {
            stop_reason = StopReason::StopRule;
            break;
        }
    }

    let final_value = problem.objective(&x);
    Ok(RunOutput {
        records,
        accel: Vec::new(),
        stop_reason,
        warnings,
        final_x: x,
        final_value,
        tracker,
    })
}

fn certified_prox(
    problem: &ProblemInstance,
    config: &SolverConfig,
    alpha: f64,
    y: &Vector,
    criterion: &Criterion,
) -> Result<ProxCertificate> {
    if !config.exact_prox {
        return problem.prox(alpha, y, criterion, config.max_inner);
    }
    let mut cert = problem.prox(alpha, y, &Criterion::Exact, config.max_inner)?;
    let (lhs, rhs) = criterion.sides(alpha, y, &cert.x_bar, &cert.w_bar, cert.eps_bar);
    cert.lhs = lhs;
    cert.rhs = rhs;
    cert.criterion = criterion.kind();
    Ok(cert)
}

fn require_smooth(problem: &ProblemInstance) -> Result<f64> {
    if !matches!(problem.set, FeasibleSet::WholeSpace) {
        return Err(Error::Precondition("gradient methods here are unconstrained".into()));
    }
    if !problem.f.is_smooth() {
        return Err(Error::Precondition("f must be smooth".into()));
    }
    problem
        .lipschitz
        .ok_or_else(|| Error::Precondition("a Lipschitz constant for grad f is required".into()))
}

/// The accelerated method with `α = σ²/L`, `t_0 = 0`, `x̄^0 = x^0`.
pub fn accel_run(problem: &ProblemInstance, config: &SolverConfig) -> Result<RunOutput> {
    expect_algorithm(config, Algorithm::Accel)?;
    config.validate()?;
    let l = require_smooth(problem)?;
    let start = Instant::now();
    let sigma = config.sigma;
    let s2 = sigma * sigma;
    let alpha = s2 / l;
    let a = alpha * (1.0 - s2);
    let reference = problem.reference.as_ref();

    let x0 = problem.x0.clone();
    let mut x = x0.clone();
    let mut x_bar = x0.clone();
    let mut t = 0.0_f64;
    let mut s_sum = Vector::zeros(x0.dim());
    let mut k_sum = 0.0;
    let mut records = Vec::new();
    let mut trace = Vec::new();
    let mut tracker = SubgradNormTracker::new();
    let mut best = f64::INFINITY;
    let mut stop_reason = StopReason::MaxOuter;
    let kv = config.keep_vectors;

    for k in 1..=config.max_outer {
        let beta = 0.5 * (a + (a * a + 4.0 * a * t).sqrt());
        let t_new = t + beta;
        let x_tilde = x_bar.scale(t / t_new).add_scaled(beta / t_new, &x);
        let grad = problem.f.gradient(&x_tilde).expect("smooth f has a gradient");
        let y = x_tilde.add_scaled(-alpha, &grad);
        let criterion = Criterion::Accel {
            sigma,
            x_tilde: x_tilde.clone(),
            grad: grad.clone(),
        };
        let cert = certified_prox(problem, config, alpha, &y, &criterion)?;
        let x_bar_new = cert.x_bar.clone();
        let eps_k = (problem.f.value(&x_bar_new) - problem.f.value(&x_tilde) - grad.dot(&(&x_bar_new - &x_tilde))).max(0.0);
        let slope = &grad + &cert.w_bar;
        let x_new = x.add_scaled(-beta, &slope);
        let f_bar = problem.objective(&x_bar_new);
        s_sum.axpy(beta, &slope);
        k_sum += beta * (f_bar - cert.eps_bar - eps_k - slope.dot(&x_bar_new));
        let eta = k_sum + s_sum.dot(&x0) - 0.5 * s_sum.norm_sq();
        let argmin_gap = x_new.dist(&x0.add_scaled(-1.0, &s_sum));

        tracker.observe_u(&grad);
        tracker.observe_wbar(&cert.w_bar);
        if f_bar < best {
            best = f_bar;
        }
        let step_sq = x_bar_new.dist_sq(&x_bar);
        let rd = rel_diff(&x_bar_new, &x_bar);
        records.push(IterateRecord {
            k,
            x: keep(kv, &x_tilde),
            y: keep(kv, &y),
            u: keep(kv, &grad),
            w: None,
            w_bar: keep(kv, &cert.w_bar),
            x_next: keep(kv, &x_bar_new),
            eps_k,
            eps_bar_k: cert.eps_bar,
            alpha_k: alpha,
            r_k: 0.0,
            sigma,
            s_k: None,
            func_val: f_bar,
            best_val: best,
            u_plus_w_normsq: slope.norm_sq(),
            wbar_normsq: cert.w_bar.norm_sq(),
            residual_lhs: cert.lhs,
            residual_rhs: cert.rhs,
            lemma_slack: None,
            lemma_scale: 0.0,
            dist_ref: reference.map(|r| x_bar.dist(&r.x_star)),
            dist_ref_next: reference.map(|r| x_bar_new.dist(&r.x_star)),
            inner_iterations: cert.inner_iterations,
            flagged: cert.max_inner_reached,
            step_sq,
            rel_diff: rd,
            elapsed: start.elapsed(),
        });
        trace.push(AccelState {
            k,
            t_k: t_new,
            beta_k: beta,
            f_bar,
            eta_k: eta,
            argmin_gap,
            k_sum,
            s_sum: keep(kv, &s_sum),
            x_k: keep(kv, &x_new),
            x_bar_k: keep(kv, &x_bar_new),
            x_tilde_k: keep(kv, &x_tilde),
        });

        t = t_new;
        x = x_new;
        x_bar = x_bar_new;
        if x_bar.norm() > config.divergence_threshold || !x_bar.is_finite() {
            stop_reason = StopReason::Diverged;
            break;
        }
        if stop_hit(config.stop, step_sq, rd) {
            stop_reason = StopReason::StopRule;
            break;
        }
    }

    let final_value = problem.objective(&x_bar);
    Ok(RunOutput {
        records,
        accel: trace,
        stop_reason,
        warnings: Vec::new(),
        final_x: x_bar,
        final_value,
        tracker,
    })
}

/// Proximal gradient with `e_k`-optimal prox: `x^k ≈_{e_k} prox_{αg}(y^{k−1} − α∇f(y^{k−1}))`,
/// `y^k = x^k + β_k(x^k − x^{k−1})`. The step is the policy's constant (or
/// `1/L` for other policies).
pub fn ipgm_run(problem: &ProblemInstance, config: &SolverConfig) -> Result<RunOutput> {
    expect_algorithm(config, Algorithm::Ipgm)?;
    config.validate()?;
    let l = require_smooth(problem)?;
    let start = Instant::now();
    let alpha = match config.stepsize {
        StepsizePolicy::Constant(a) => a,
        _ => 1.0 / l,
    };
    let mut warnings = Vec::new();
    if let Some(d) = config.e_schedule.sqrt_decay() {
        // summability of √e_k (plain) or k√e_k (with momentum)
        let needed = if config.momentum == Momentum::Standard { 2.0 } else { 1.0 };
        if d <= needed {
            let what = if needed == 2.0 { "k*sqrt(e_k)" } else { "sqrt(e_k)" };
            warnings.push(format!("{what} is not summable for this e_k schedule; convergence is not guaranteed"));
        }
    }

    let x0 = problem.x0.clone();
    let auto_scale = match config.e_schedule {
        Schedule::AutoSquaredPower { .. } => {
            let z0 = x0.add_scaled(-alpha, &problem.f.gradient(&x0).expect("smooth"));
            // gap of the zero dual point equals g(z0); C² = 2α·gap
            2.0 * alpha * problem.g.value(&z0)
        }
        _ => 1.0,
    };
    let reference = problem.reference.as_ref();
    let mut x_prev = x0.clone();
    let mut y = x0;
    let mut records = Vec::new();
    let mut tracker = SubgradNormTracker::new();
    let mut best = f64::INFINITY;
    let mut stop_reason = StopReason::MaxOuter;
    let kv = config.keep_vectors;

    for k in 1..=config.max_outer {
        let grad = problem.f.gradient(&y).expect("smooth");
        let z = y.add_scaled(-alpha, &grad);
        let e_k = match config.e_schedule {
            Schedule::AutoSquaredPower { .. } => auto_scale * config.e_schedule.at(k),
            s => s.at(k),
        };
        let cert = certified_prox(problem, config, alpha, &z, &Criterion::AbsoluteGap(e_k))?;
        let x = cert.x_bar.clone();
        let beta = match config.momentum {
            Momentum::None => 0.0,
            Momentum::Standard => (k as f64 - 1.0) / (k as f64 + 2.0),
        };
        let y_next = x.add_scaled(beta, &(&x - &x_prev));
        let fx = problem.objective(&x);
        tracker.observe_u(&grad);
        tracker.observe_wbar(&cert.w_bar);
        if fx < best {
            best = fx;
        }
        let step_sq = x.dist_sq(&x_prev);
        let rd = rel_diff(&x, &x_prev);
        records.push(IterateRecord {
            k,
            x: keep(kv, &y),
            y: keep(kv, &z),
            u: keep(kv, &grad),
            w: None,
            w_bar: keep(kv, &cert.w_bar),
            x_next: keep(kv, &x),
            eps_k: e_k,
            eps_bar_k: cert.eps_bar,
            alpha_k: alpha,
            r_k: 0.0,
            sigma: 0.0,
            s_k: None,
            func_val: fx,
            best_val: best,
            u_plus_w_normsq: (&grad + &cert.w_bar).norm_sq(),
            wbar_normsq: cert.w_bar.norm_sq(),
            residual_lhs: cert.lhs,
            residual_rhs: cert.rhs,
            lemma_slack: None,
            lemma_scale: 0.0,
            dist_ref: reference.map(|r| x_prev.dist(&r.x_star)),
            dist_ref_next: reference.map(|r| x.dist(&r.x_star)),
            inner_iterations: cert.inner_iterations,
            flagged: cert.max_inner_reached,
            step_sq,
            rel_diff: rd,
            elapsed: start.elapsed(),
        });
        x_prev = x;
        y = y_next;
        if x_prev.norm() > config.divergence_threshold || !x_prev.is_finite() {
            stop_reason = StopReason::Diverged;
            break;
        }
        if stop_hit(config.stop, step_sq, rd) {
            stop_reason = StopReason::StopRule;
            break;
        }
    }

    let final_value = problem.objective(&x_prev);
    Ok(RunOutput {
        records,
        accel: Vec::new(),
        stop_reason,
        warnings,
        final_x: x_prev,
        final_value,
        tracker,
    })
}
