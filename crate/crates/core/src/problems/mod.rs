//! Objective-function oracles and concrete test problems.
//!
//! Every scheme in this crate talks to a problem through one of three
//! abstractions: a [`SmoothOracle`] (value, gradient, strong-convexity and
//! smoothness constants), a [`CompositeOracle`] (smooth part plus a nonsmooth
//! term with a proximal map), or a [`CoordinateOracle`] (per-coordinate
//! Lipschitz constants, partial derivatives and dependency sets).
//!
//! Oracles are immutable after construction and safe to share across
//! concurrently running experiments.

mod instances;
mod prox;

pub use instances::{
    banded_quadratic, quadratic_from_spectrum, ridge_least_squares, BandedQuadratic, Quadratic,
    RidgeLeastSquares,
};
pub use prox::{prox_l1, prox_box, BoxTerm, L1Term, ZeroTerm};

use ndarray::Array1;

use crate::error::{Error, Result};

/// Anything with a scalar objective value.
///
/// `value_diff(x, y)` computes `f(x) - f(y)`; implementations override it
/// when the difference can be evaluated without catastrophic cancellation
/// (quadratics admit an exact expansion around `y`). Monitors rely on this to
/// keep objective gaps meaningful deep into convergence.
pub trait Objective: Send + Sync {
    fn dimension(&self) -> usize;

    fn value(&self, x: &Array1<f64>) -> f64;

    fn value_diff(&self, x: &Array1<f64>, y: &Array1<f64>) -> f64 {
        self.value(x) - self.value(y)
    }
}

/// A differentiable, strongly convex objective.
pub trait SmoothOracle: Objective {
    /// Strong-convexity modulus.
    fn alpha(&self) -> f64;

    /// Gradient Lipschitz constant.
    fn lipschitz(&self) -> f64;

    fn gradient(&self, x: &Array1<f64>) -> Array1<f64>;

    /// Exact minimizer, when known in closed form.
    fn minimizer(&self) -> Option<&Array1<f64>> {
        None
    }
}

/// A smooth oracle with coordinate-wise structure.
pub trait CoordinateOracle: SmoothOracle {
    /// Per-coordinate gradient Lipschitz constants.
    fn coord_lipschitz(&self) -> &[f64];

    /// Coordinates that the `i`-th partial derivative reads.
    fn dependencies(&self, i: usize) -> &[usize];

    /// Component `i` of the gradient, reading positions through `values`.
    /// Only indices in `dependencies(i)` are queried, which lets the lazy
    /// engine materialize just those coordinates.
    fn partial_at(&self, i: usize, values: &mut dyn FnMut(usize) -> f64) -> f64;

    /// Component `i` of the gradient at a dense point.
    fn partial(&self, x: &Array1<f64>, i: usize) -> f64 {
        self.partial_at(i, &mut |j| x[j])
    }
}

/// A convex term accessed only through its value and proximal map.
pub trait NonsmoothTerm: Send + Sync {
    fn value(&self, x: &Array1<f64>) -> f64;

    fn value_diff(&self, x: &Array1<f64>, y: &Array1<f64>) -> f64 {
        self.value(x) - self.value(y)
    }

    /// `argmin_y value(y) + ‖y - x‖² / (2 scale)`.
    fn prox(&self, x: &Array1<f64>, scale: f64) -> Array1<f64>;

    /// Map an arbitrary point into the term's effective domain. Identity for
    /// finite-valued terms; indicator terms project.
    fn clamp_to_domain(&self, x: Array1<f64>) -> Array1<f64> {
        x
    }
}

/// Composite objective `f = g + h` with smooth `g` and proxable `h`.
pub struct CompositeOracle {
    pub smooth: Box<dyn SmoothOracle>,
    pub nonsmooth: Box<dyn NonsmoothTerm>,
}

impl CompositeOracle {
    pub fn new(smooth: Box<dyn SmoothOracle>, nonsmooth: Box<dyn NonsmoothTerm>) -> Self {
        Self { smooth, nonsmooth }
    }

    /// Strong-convexity modulus inherited from the smooth part.
    pub fn alpha(&self) -> f64 {
        self.smooth.alpha()
    }

    /// Smoothness constant of the smooth part (the step-size bound uses it).
    pub fn lipschitz(&self) -> f64 {
        self.smooth.lipschitz()
    }
}

impl Objective for CompositeOracle {
    fn dimension(&self) -> usize {
        self.smooth.dimension()
    }

    fn value(&self, x: &Array1<f64>) -> f64 {
        self.smooth.value(x) + self.nonsmooth.value(x)
    }

    fn value_diff(&self, x: &Array1<f64>, y: &Array1<f64>) -> f64 {
        self.smooth.value_diff(x, y) + self.nonsmooth.value_diff(x, y)
    }
}

/// A problem as configured for an experiment: either purely smooth or
/// composite.
pub enum ProblemInstance {
    Smooth(Box<dyn CoordinateOracle>),
    Composite(CompositeOracle),
}

impl ProblemInstance {
    pub fn objective(&self) -> &dyn Objective {
        match self {
            ProblemInstance::Smooth(o) => o.as_ref(),
            ProblemInstance::Composite(c) => c,
        }
    }

    pub fn dimension(&self) -> usize {
        self.objective().dimension()
    }

    pub fn alpha(&self) -> f64 {
        match self {
            ProblemInstance::Smooth(o) => o.alpha(),
            ProblemInstance::Composite(c) => c.alpha(),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            ProblemInstance::Smooth(o) => o.lipschitz(),
            ProblemInstance::Composite(c) => c.lipschitz(),
        }
    }
}

/// Iteration cap for the fallback baseline runs below.
const REFERENCE_BUDGET: usize = 2_000_000;

/// Locates `(x*, f*)` to the requested gradient(-mapping) residual.
///
/// Problems with a closed-form minimizer attached return it directly. All
/// others run a long plain forward(-backward) baseline: gradient descent with
/// step `1/L` for smooth problems, proximal gradient descent for composite
/// ones. The baseline is deliberately independent of the momentum schemes
/// whose certificates consume the result.
pub fn reference_minimizer(problem: &ProblemInstance, tolerance: f64) -> Result<(Array1<f64>, f64)> {
    if tolerance <= 0.0 {
        return Err(Error::InvalidParameter(
            "tolerance must be positive".into(),
        ));
    }
    match problem {
        ProblemInstance::Smooth(oracle) => {
            if let Some(xstar) = oracle.minimizer() {
                let xstar = xstar.clone();
                let fstar = oracle.value(&xstar);
                return Ok((xstar, fstar));
            }
            let step = 1.0 / oracle.lipschitz();
            let mut x = Array1::zeros(oracle.dimension());
            let mut best = f64::INFINITY;
            for _ in 0..REFERENCE_BUDGET {
                let g = oracle.gradient(&x);
                let residual = g.dot(&g).sqrt();
                best = best.min(residual);
                if residual <= tolerance {
                    let fstar = oracle.value(&x);
                    return Ok((x, fstar));
                }
                x.scaled_add(-step, &g);
            }
            Err(Error::NonConvergence {
                tolerance,
                best_residual: best,
            })
        }
        ProblemInstance::Composite(composite) => {
            let lipschitz = composite.lipschitz();
            let step = 1.0 / lipschitz;
            let mut x = composite
                .nonsmooth
                .clamp_to_domain(Array1::zeros(composite.dimension()));
            let mut best = f64::INFINITY;
            for _ in 0..REFERENCE_BUDGET {
                let g = composite.smooth.gradient(&x);
                let mut forward = x.clone();
                forward.scaled_add(-step, &g);
                let next = composite.nonsmooth.prox(&forward, step);
                // Gradient-mapping residual L‖x - prox(x - ∇g/L)‖.
                let mut diff = &x - &next;
                diff.mapv_inplace(|v| v * lipschitz);
                let residual = diff.dot(&diff).sqrt();
                best = best.min(residual);
                x = next;
                if residual <= tolerance {
                    let fstar = composite.value(&x);
                    return Ok((x, fstar));
                }
            }
            Err(Error::NonConvergence {
                tolerance,
                best_residual: best,
            })
        }
    }
}
