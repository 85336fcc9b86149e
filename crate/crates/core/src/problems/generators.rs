use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{reference_solve, ProblemInstance, ProblemKind, ProxHandle, Reference};
use crate::error::{invalid, Result};
use crate::linalg::{FeasibleSet, Matrix, Vector};
use crate::operators::{
    power_iteration_norm_sq, GaussianBlur, IdentityOperator, ImageShape, LinearOperator, MatrixOperator,
};
use crate::oracles::{L1Norm, LeastSquares, TotalVariation};

/// Kernel size and standard deviation of the deblurring experiment's blur.
pub const BLUR_SIZE: usize = 4;
pub const BLUR_STD: f64 = 2.0;

const POWER_ITERS: usize = 10_000;
const POWER_TOL: f64 = 1e-13;

/// `A = MᵀM` with `M` an `n × n` matrix of i.i.d. standard normals.
pub(crate) fn lasso_matrix(n: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..n * n).map(|_| StandardNormal.sample(&mut rng)).collect();
    Matrix::from_row_major(n, n, data)
        .expect("finite normal samples")
        .gram()
}

/// Lasso instance `½‖Ax − 1‖² + ‖x‖₁` without a reference solution.
pub fn lasso_instance(n: usize, seed: u64) -> Result<ProblemInstance> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let op: Arc<dyn LinearOperator> = Arc::new(MatrixOperator(lasso_matrix(n, seed)));
    let lipschitz = power_iteration_norm_sq(op.as_ref(), POWER_ITERS, POWER_TOL);
    let f = LeastSquares::new(op, Vector::ones(n), lipschitz)?;
    Ok(ProblemInstance {
        kind: ProblemKind::Lasso,
        f: Arc::new(f),
        g: Arc::new(L1Norm::new(n, 1.0)),
        prox: ProxHandle::Closed,
        set: FeasibleSet::WholeSpace,
        lipschitz: Some(lipschitz),
        shape: None,
        seed,
        x0: Vector::ones(n),
        reference: None,
    })
}

/// [`lasso_instance`] with its reference solution attached.
pub fn make_lasso(n: usize, seed: u64) -> Result<ProblemInstance> {
    let p = lasso_instance(n, seed)?;
    let r = reference_solve(&p, 200_000, 1e-13)?;
    Ok(p.with_reference(r))
}

/// `½(x − 2)² + |x|`, minimized at `x⋆ = 1` with `s⋆ = 3/2`; starts at `x^0 = 3`.
pub fn make_toy1d() -> ProblemInstance {
    let op: Arc<dyn LinearOperator> = Arc::new(IdentityOperator(1));
    let two = Vector::from_slice(&[2.0]).expect("finite");
    let f = LeastSquares::new(op, two, 1.0).expect("matching dims");
    let x0 = Vector::from_slice(&[3.0]).expect("finite");
    let x_star = Vector::from_slice(&[1.0]).expect("finite");
    ProblemInstance {
        kind: ProblemKind::Toy1d,
        f: Arc::new(f),
        g: Arc::new(L1Norm::new(1, 1.0)),
        prox: ProxHandle::Closed,
        set: FeasibleSet::WholeSpace,
        lipschitz: Some(1.0),
        shape: None,
        seed: 0,
        reference: Some(Reference {
            d0: x0.dist(&x_star),
            x_star,
            s_star: 1.5,
            converged: true,
        }),
        x0,
    }
}

/// Piecewise-constant test scene: a bright rectangle, a mid-grey disc and a
/// dark bar on a grey background, values in `[0, 1]`.
pub fn synthetic_image(shape: ImageShape) -> Vector {
    let (rows, cols) = (shape.rows as f64, shape.cols as f64);
    Vector::from_fn(shape.len(), |p| {
        let r = (p / shape.cols) as f64 / rows;
        let c = (p % shape.cols) as f64 / cols;
        let (dr, dc) = (r - 0.62, c - 0.35);
        if (0.15..0.45).contains(&r) && (0.5..0.85).contains(&c) {
            0.9
        } else if dr * dr + dc * dc < 0.04 {
            0.6
        } else if (0.75..0.85).contains(&r) && (0.55..0.95).contains(&c) {
            0.05
        } else {
            0.3
        }
    })
}

/// Deblurring instance on a given image: `b = blur(image) + noise`,
/// `g = τ TV`, `x^0 = b`.
pub fn tv_deblur_from_image(
    shape: ImageShape,
    image: &Vector,
    kernel_size: usize,
    blur_std: f64,
    tau: f64,
    noise_std: f64,
    seed: u64,
) -> Result<ProblemInstance> {
    shape.check(image)?;
    if !(tau >= 0.0) {
        return Err(invalid("tau", "must be nonnegative"));
    }
    if !(noise_std >= 0.0) {
        return Err(invalid("noise_std", "must be nonnegative"));
    }
    let blur = GaussianBlur::new(shape, kernel_size, blur_std)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clean = blur.apply(image);
    let b = Vector::from_fn(clean.dim(), |i| {
        let z: f64 = StandardNormal.sample(&mut rng);
        clean[i] + noise_std * z
    });
    let lipschitz = if kernel_size == 1 {
        1.0
    } else {
        power_iteration_norm_sq(&blur, POWER_ITERS, POWER_TOL)
    };
    let op: Arc<dyn LinearOperator> = Arc::new(blur);
    let f = LeastSquares::new(op, b.clone(), lipschitz)?;
    let tv = TotalVariation::new(shape, tau);
    Ok(ProblemInstance {
        kind: ProblemKind::TvDeblur,
        f: Arc::new(f),
        g: Arc::new(tv.clone()),
        prox: ProxHandle::TvDual(tv),
        set: FeasibleSet::WholeSpace,
        lipschitz: Some(lipschitz),
        shape: Some(shape),
        seed,
        x0: b,
        reference: None,
    })
}

/// `N × N` synthetic deblurring instance with the experiment's 4×4,
/// std-2 Gaussian blur. No reference is attached (see [`reference_solve`]).
pub fn make_tv_deblur(n: usize, tau: f64, noise_std: f64, seed: u64) -> Result<ProblemInstance> {
    if n < 4 {
        return Err(invalid("n", "image side must be at least 4"));
    }
    let shape = ImageShape::square(n)?;
    tv_deblur_from_image(shape, &synthetic_image(shape), BLUR_SIZE, BLUR_STD, tau, noise_std, seed)
}
