//! Problem instances: the lasso and TV deblurring experiments, a 1-D toy
//! problem with a closed-form optimum, PGM image I/O and the reference
//! solver used for `s⋆`, `x⋆` and `d0`.

mod generators;
pub mod pgm;
mod reference;

use std::sync::Arc;

pub use generators::{BLUR_SIZE, BLUR_STD, lasso_instance, make_lasso, make_toy1d, make_tv_deblur, synthetic_image, tv_deblur_from_image};
pub use reference::{lasso_duality_gap, reference_solve};

use crate::error::{Error, Result};
use crate::linalg::{FeasibleSet, Vector};
use crate::operators::ImageShape;
use crate::oracles::{ConvexFunction, TotalVariation};
use crate::prox::{self, Criterion, ProxCertificate};

/// How the prox of `g` is evaluated.
#[derive(Debug, Clone)]
pub enum ProxHandle {
    /// `g` has a closed-form prox; inexact variants come from segment searches.
    Closed,
    /// Dual-certified prox of total variation.
    TvDual(TotalVariation),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Lasso,
    TvDeblur,
    Toy1d,
    Custom,
}

impl ProblemKind {
    pub fn label(self) -> &'static str {
        match self {
            ProblemKind::Lasso => "lasso",
            ProblemKind::TvDeblur => "tv",
            ProblemKind::Toy1d => "toy1d",
            ProblemKind::Custom => "custom",
        }
    }
}

/// High-accuracy solution used for telemetry and bound checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub x_star: Vector,
    pub s_star: f64,
    /// `‖x^0 − x⋆‖` for the instance's starting point.
    pub d0: f64,
    /// False when the reference solver had not settled by the end of its budget;
    /// bound checks that rely on it should be skipped.
    pub converged: bool,
}

/// `min_{x ∈ C} f(x) + g(x)`.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub kind: ProblemKind,
    pub f: Arc<dyn ConvexFunction>,
    pub g: Arc<dyn ConvexFunction>,
    pub prox: ProxHandle,
    pub set: FeasibleSet,
    pub lipschitz: Option<f64>,
    pub shape: Option<ImageShape>,
    pub seed: u64,
    pub x0: Vector,
    pub reference: Option<Reference>,
}

impl ProblemInstance {
    pub fn dim(&self) -> usize {
        self.x0.dim()
    }

    pub fn objective(&self, x: &Vector) -> f64 {
        self.f.value(x) + self.g.value(x)
    }

    pub fn with_reference(mut self, reference: Reference) -> Self {
        self.reference = Some(reference);
        self
    }

    pub fn with_start(mut self, x0: Vector) -> Result<Self> {
        if x0.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x0.dim() });
        }
        if let Some(r) = self.reference.as_mut() {
            r.d0 = x0.dist(&r.x_star);
        }
        self.x0 = x0;
        Ok(self)
    }

    /// Certified (inexact) prox of `αg` at `y`.
    pub fn prox(&self, alpha: f64, y: &Vector, criterion: &Criterion, max_inner: usize) -> Result<ProxCertificate> {
        match &self.prox {
            ProxHandle::Closed => prox::solve_prox_segment(self.g.as_ref(), alpha, y, criterion),
            ProxHandle::TvDual(tv) => {
                let crit = match criterion {
                    // the dual route always carries some gap; ask for a negligible one
                    Criterion::Exact => Criterion::AbsoluteGap(1e-14),
                    c => c.clone(),
                };
                prox::solve_prox_tv_dual(tv, alpha, y, &crit, max_inner).map(|(c, _)| c)
            }
        }
    }

    /// `prox_{αg}(y)` to the best accuracy available.
    pub fn prox_accurate(&self, alpha: f64, y: &Vector, max_inner: usize) -> Result<Vector> {
        self.prox(alpha, y, &Criterion::Exact, max_inner).map(|c| c.x_bar)
    }
}
