//! Deterministic discrete schemes: the semi-implicit momentum discretization,
//! its forward-backward composite variant, and the Nesterov, heavy-ball and
//! gradient-descent baselines, all behind one uniform stepper interface.
//!
//! The momentum schemes share a shape: a forward Euler step in position, a
//! semi-implicit step in velocity, then a sufficient-decrease perturbation
//! that moves `x` downhill and compensates `v` so the Lyapunov norm term is
//! untouched. The velocity line is implicit in `v'`; collecting the
//! `-s√α v'` term solves it in closed form:
//! `v' = (v - (s√α v + s g)/(1+s√α)) / (1+s√α)`.

use ndarray::Array1;

use crate::error::Error;
use crate::lyapunov::{discrete_lyapunov, CertifierSuite, Reference, StepData};
use crate::problems::{CompositeOracle, Objective, ProblemInstance, SmoothOracle};

/// Scheme selector, as it appears in configs and trace metadata.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Semi-implicit momentum discretization for smooth objectives.
    SemiImplicit,
    /// Forward-backward variant for composite objectives.
    ForwardBackward,
    Nesterov,
    HeavyBall,
    GradientDescent,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::SemiImplicit => "semi-implicit",
            Variant::ForwardBackward => "forward-backward",
            Variant::Nesterov => "nesterov",
            Variant::HeavyBall => "heavy-ball",
            Variant::GradientDescent => "gradient-descent",
        }
    }
}

/// Step size, strong-convexity modulus and policy knobs for a run.
#[derive(Clone, Debug)]
pub struct SchemeConfig {
    pub step: f64,
    pub alpha: f64,
    pub variant: Variant,
    /// Reject steps above `1/√L` for the momentum schemes. Disable to run
    /// the stability boundary as an experiment; certificates then report
    /// failures instead of the run aborting.
    pub strict_step_check: bool,
}

impl SchemeConfig {
    /// The largest step the convergence theorems allow: `1/√L`.
    pub fn auto(variant: Variant, problem: &ProblemInstance) -> Self {
        SchemeConfig {
            step: 1.0 / problem.lipschitz().sqrt(),
            alpha: problem.alpha(),
            variant,
            strict_step_check: true,
        }
    }
}

/// Iterate of a discrete scheme.
#[derive(Clone, Debug)]
pub struct DiscreteState {
    pub x: Array1<f64>,
    pub v: Array1<f64>,
    pub n: usize,
    /// Previous iterate, for the two-point baselines.
    pub aux: Option<Array1<f64>>,
}

impl DiscreteState {
    pub fn at_rest(x: Array1<f64>) -> Self {
        let v = Array1::zeros(x.len());
        Self {
            x,
            v,
            n: 0,
            aux: None,
        }
    }
}

/// Intra-step values exposed for certification.
#[derive(Clone, Debug)]
pub struct StepIntermediates {
    pub x_prime: Array1<f64>,
    pub v_prime: Array1<f64>,
    /// The gradient surrogate `g_n` of the step.
    pub gradient_like: Array1<f64>,
    /// The position perturbation `δ_n` applied by the decrease update.
    pub delta: Array1<f64>,
}

/// The `v_n = x_n - x_{n-1}` identification that reads a two-point baseline
/// as a damped-dynamics discretization. Used for trace plotting only; the
/// baselines themselves never consult it.
pub fn momentum_velocity(state: &DiscreteState) -> Array1<f64> {
    match &state.aux {
        Some(prev) => &state.x - prev,
        None => Array1::zeros(state.x.len()),
    }
}

fn check_step(cfg: &SchemeConfig, lipschitz: f64) -> Result<(), Error> {
    let bound = 1.0 / lipschitz.sqrt();
    if cfg.strict_step_check && cfg.step > bound * (1.0 + 1e-12) {
        return Err(Error::StepSize {
            step: cfg.step,
            bound,
        });
    }
    Ok(())
}

fn decrease_update_with_gradient(
    cfg: &SchemeConfig,
    lipschitz: f64,
    x: &Array1<f64>,
    v: &Array1<f64>,
    g: &Array1<f64>,
) -> (Array1<f64>, Array1<f64>, Array1<f64>) {
    let sqrt_alpha = cfg.alpha.sqrt();
    let damp = 1.0 + cfg.step * sqrt_alpha;
    let delta = g.mapv(|gi| gi / lipschitz);
    let x_next = x - &delta;
    let v_next = v + &(sqrt_alpha / damp * &delta);
    (x_next, v_next, delta)
}

/// The sufficient-decrease update
/// `(x, v) ← (x - ∇f(x)/L, v + (1+s√α)^{-1}(√α/L)∇f(x))`.
///
/// Lowers `f` by at least `‖∇f(x)‖²/(2L)` while leaving
/// `√α(x - x*) + (1+s√α)v` unchanged.
pub fn sufficient_decrease_update(
    oracle: &dyn SmoothOracle,
    cfg: &SchemeConfig,
    x: &Array1<f64>,
    v: &Array1<f64>,
) -> (Array1<f64>, Array1<f64>) {
    let g = oracle.gradient(x);
    let (x_next, v_next, _) = decrease_update_with_gradient(cfg, oracle.lipschitz(), x, v, &g);
    (x_next, v_next)
}

pub(crate) fn semi_implicit_velocity(
    cfg: &SchemeConfig,
    v: &Array1<f64>,
    g: &Array1<f64>,
) -> Array1<f64> {
    let s = cfg.step;
    let sqrt_alpha = cfg.alpha.sqrt();
    let damp = 1.0 + s * sqrt_alpha;
    let mut v_prime = v.clone();
    v_prime.zip_mut_with(g, |vi, &gi| {
        *vi = (*vi - (s * sqrt_alpha * *vi + s * gi) / damp) / damp;
    });
    v_prime
}

/// One step of the semi-implicit momentum scheme for smooth objectives.
pub fn semi_implicit_step(
    oracle: &dyn SmoothOracle,
    cfg: &SchemeConfig,
    state: &DiscreteState,
) -> Result<(DiscreteState, StepIntermediates), Error> {
    check_step(cfg, oracle.lipschitz())?;
    let s = cfg.step;
    let x_prime = &state.x + &(s * &state.v);
    let g = oracle.gradient(&x_prime);
    let v_prime = semi_implicit_velocity(cfg, &state.v, &g);
    let (x_next, v_next, delta) =
        decrease_update_with_gradient(cfg, oracle.lipschitz(), &x_prime, &v_prime, &g);
    Ok((
        DiscreteState {
            x: x_next,
            v: v_next,
            n: state.n + 1,
            aux: None,
        },
        StepIntermediates {
            x_prime,
            v_prime,
            gradient_like: g,
            delta,
        },
    ))
}

/// One step of the forward-backward variant for composite objectives.
///
/// `g_n = (x' - prox_{s²,h}(x' - s²∇g(x')))/s²` and `δ_n = s² g_n`, so the
/// position update is exactly the proximal point.
pub fn forward_backward_step(
    oracle: &CompositeOracle,
    cfg: &SchemeConfig,
    state: &DiscreteState,
) -> Result<(DiscreteState, StepIntermediates), Error> {
    check_step(cfg, oracle.lipschitz())?;
    let s = cfg.step;
    let s_sq = s * s;
    let sqrt_alpha = cfg.alpha.sqrt();
    let damp = 1.0 + s * sqrt_alpha;

    let x_prime = &state.x + &(s * &state.v);
    let grad_smooth = oracle.smooth.gradient(&x_prime);
    let forward = &x_prime - &(s_sq * &grad_smooth);
    let proximal = oracle.nonsmooth.prox(&forward, s_sq);
    let delta = &x_prime - &proximal;
    let g = delta.mapv(|di| di / s_sq);

    let v_prime = semi_implicit_velocity(cfg, &state.v, &g);
    let v_next = &v_prime + &(sqrt_alpha / damp * &delta);

    Ok((
        DiscreteState {
            x: proximal,
            v: v_next,
            n: state.n + 1,
            aux: None,
        },
        StepIntermediates {
            x_prime,
            v_prime,
            gradient_like: g,
            delta,
        },
    ))
}

/// Nesterov's accelerated gradient step in its printed `(x_n, x_{n-1})` form.
pub fn nesterov_step(oracle: &dyn SmoothOracle, state: &DiscreteState) -> DiscreteState {
    let lipschitz = oracle.lipschitz();
    let sqrt_l = lipschitz.sqrt();
    let sqrt_a = oracle.alpha().sqrt();
    let beta = (sqrt_l - sqrt_a) / (sqrt_l + sqrt_a);
    let prev = state.aux.as_ref().unwrap_or(&state.x);
    let y = &state.x + &(beta * &(&state.x - prev));
    let x_next = &y - &(oracle.gradient(&y) / lipschitz);
    DiscreteState {
        x: x_next,
        v: Array1::zeros(state.x.len()),
        n: state.n + 1,
        aux: Some(state.x.clone()),
    }
}

/// Polyak's heavy-ball step.
pub fn heavy_ball_step(oracle: &dyn SmoothOracle, state: &DiscreteState) -> DiscreteState {
    let sqrt_l = oracle.lipschitz().sqrt();
    let sqrt_a = oracle.alpha().sqrt();
    let step = 4.0 / ((sqrt_l + sqrt_a) * (sqrt_l + sqrt_a));
    let momentum = ((sqrt_l - sqrt_a) / (sqrt_l + sqrt_a)).powi(2);
    let prev = state.aux.as_ref().unwrap_or(&state.x);
    let mut x_next = &state.x - &(step * &oracle.gradient(&state.x));
    x_next += &(momentum * &(&state.x - prev));
    DiscreteState {
        x: x_next,
        v: Array1::zeros(state.x.len()),
        n: state.n + 1,
        aux: Some(state.x.clone()),
    }
}

/// Plain gradient descent with step `1/L`.
pub fn gradient_descent_step(oracle: &dyn SmoothOracle, state: &DiscreteState) -> DiscreteState {
    let x_next = &state.x - &(oracle.gradient(&state.x) / oracle.lipschitz());
    DiscreteState {
        x: x_next,
        v: Array1::zeros(state.x.len()),
        n: state.n + 1,
        aux: Some(state.x.clone()),
    }
}

/// A scheme bound to its problem.
pub enum Scheme<'a> {
    SemiImplicit(&'a dyn SmoothOracle),
    ForwardBackward(&'a CompositeOracle),
    Nesterov(&'a dyn SmoothOracle),
    HeavyBall(&'a dyn SmoothOracle),
    GradientDescent(&'a dyn SmoothOracle),
}

impl<'a> Scheme<'a> {
    pub fn from_variant(variant: Variant, problem: &'a ProblemInstance) -> Result<Self, Error> {
        match (variant, problem) {
            (Variant::SemiImplicit, ProblemInstance::Smooth(o)) => {
                Ok(Scheme::SemiImplicit(o.as_ref()))
            }
            (Variant::Nesterov, ProblemInstance::Smooth(o)) => Ok(Scheme::Nesterov(o.as_ref())),
            (Variant::HeavyBall, ProblemInstance::Smooth(o)) => Ok(Scheme::HeavyBall(o.as_ref())),
            (Variant::GradientDescent, ProblemInstance::Smooth(o)) => {
                Ok(Scheme::GradientDescent(o.as_ref()))
            }
            (Variant::ForwardBackward, ProblemInstance::Composite(c)) => {
                Ok(Scheme::ForwardBackward(c))
            }
            (v, _) => Err(Error::InvalidParameter(format!(
                "variant {} does not match the problem kind",
                v.as_str()
            ))),
        }
    }

    pub fn variant(&self) -> Variant {
        match self {
            Scheme::SemiImplicit(_) => Variant::SemiImplicit,
            Scheme::ForwardBackward(_) => Variant::ForwardBackward,
            Scheme::Nesterov(_) => Variant::Nesterov,
            Scheme::HeavyBall(_) => Variant::HeavyBall,
            Scheme::GradientDescent(_) => Variant::GradientDescent,
        }
    }

    pub fn objective(&self) -> &dyn Objective {
        match self {
            Scheme::SemiImplicit(o)
            | Scheme::Nesterov(o)
            | Scheme::HeavyBall(o)
            | Scheme::GradientDescent(o) => *o,
            Scheme::ForwardBackward(c) => *c,
        }
    }

    fn step(
        &self,
        cfg: &SchemeConfig,
        state: &DiscreteState,
    ) -> Result<(DiscreteState, Option<StepIntermediates>), Error> {
        match self {
            Scheme::SemiImplicit(o) => {
                let (next, inter) = semi_implicit_step(*o, cfg, state)?;
                Ok((next, Some(inter)))
            }
            Scheme::ForwardBackward(c) => {
                let (next, inter) = forward_backward_step(c, cfg, state)?;
                Ok((next, Some(inter)))
            }
            Scheme::Nesterov(o) => Ok((nesterov_step(*o, state), None)),
            Scheme::HeavyBall(o) => Ok((heavy_ball_step(*o, state), None)),
            Scheme::GradientDescent(o) => Ok((gradient_descent_step(*o, state), None)),
        }
    }

    /// Velocity used by the Lyapunov monitor: the scheme's own velocity for
    /// the momentum discretizations, the two-point difference for the
    /// named baselines, zero for gradient descent.
    fn monitor_velocity(&self, state: &DiscreteState) -> Array1<f64> {
        match self {
            Scheme::SemiImplicit(_) | Scheme::ForwardBackward(_) => state.v.clone(),
            Scheme::Nesterov(_) | Scheme::HeavyBall(_) => momentum_velocity(state),
            Scheme::GradientDescent(_) => Array1::zeros(state.x.len()),
        }
    }
}

/// Verdict summary carried in each iterate record.
#[derive(Clone, Debug)]
pub struct Verdict {
    pub name: &'static str,
    pub pass: bool,
    pub margin: f64,
}

/// Per-iteration trace entry.
#[derive(Clone, Debug)]
pub struct IterateRecord {
    pub n: usize,
    pub f_gap: f64,
    pub lyapunov: f64,
    /// `L_n / L_{n-1}`.
    pub contraction_ratio: f64,
    pub verdicts: Vec<Verdict>,
}

impl IterateRecord {
    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

/// A run that left the finite floats.
#[derive(Debug)]
pub enum RunError {
    Invalid(Error),
    Diverged {
        step: usize,
        records: Vec<IterateRecord>,
    },
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Invalid(e) => write!(f, "{e}"),
            RunError::Diverged { step, .. } => write!(f, "scheme diverged at iteration {step}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Invalid(e)
    }
}

fn contraction_ratio(prev: f64, next: f64) -> f64 {
    if prev == 0.0 {
        if next == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        next / prev
    }
}

/// Executes `iterations` steps of the scheme, certifying each one when a
/// suite is supplied. Records are complete even when certificates fail; a
/// non-finite iterate aborts with the records collected so far.
///
/// Certification applies to the momentum discretizations only; the baselines
/// carry no per-step guarantees and get plain monitoring.
pub fn run(
    scheme: &Scheme,
    cfg: &SchemeConfig,
    initial: &DiscreteState,
    iterations: usize,
    reference: &Reference,
    mut certifier: Option<&mut CertifierSuite>,
) -> Result<Vec<IterateRecord>, RunError> {
    let objective = scheme.objective();
    let mut state = initial.clone();
    let mut records = Vec::with_capacity(iterations);
    let mut lyap_prev = discrete_lyapunov(
        objective,
        &state.x,
        &scheme.monitor_velocity(&state),
        cfg.step,
        cfg.alpha,
        reference,
    );

    for _ in 0..iterations {
        let (next, intermediates) = scheme.step(cfg, &state)?;

        if !next.x.iter().chain(next.v.iter()).all(|c| c.is_finite()) {
            return Err(RunError::Diverged {
                step: next.n,
                records,
            });
        }

        let monitor_v = scheme.monitor_velocity(&next);
        let lyap_next =
            discrete_lyapunov(objective, &next.x, &monitor_v, cfg.step, cfg.alpha, reference);
        let f_gap = objective.value_diff(&next.x, &reference.xstar);

        let verdicts = match (&mut certifier, &intermediates) {
            (Some(suite), Some(inter)) => {
                let before = suite.log.len();
                suite.certify_step(&StepData {
                    iteration: next.n,
                    x_prev: &state.x,
                    x_prime: &inter.x_prime,
                    v_prime: &inter.v_prime,
                    x_next: &next.x,
                    v_next: &next.v,
                    gradient_like: &inter.gradient_like,
                    mean_gradient: None,
                    lyap_prev,
                    lyap_next,
                });
                suite.log[before..]
                    .iter()
                    .map(|c| Verdict {
                        name: c.name,
                        pass: c.pass,
                        margin: c.margin,
                    })
                    .collect()
            }
            _ => Vec::new(),
        };

        records.push(IterateRecord {
            n: next.n,
            f_gap,
            lyapunov: lyap_next,
            contraction_ratio: contraction_ratio(lyap_prev, lyap_next),
            verdicts,
        });
        lyap_prev = lyap_next;
        state = next;
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{
        quadratic_from_spectrum, ridge_least_squares, L1Term, ZeroTerm,
    };
    use crate::rng::SeededRng;
    use ndarray::array;

    /// Test double with an identically zero gradient.
    struct ZeroGradient;

    impl Objective for ZeroGradient {
        fn dimension(&self) -> usize {
            1
        }
        fn value(&self, _x: &Array1<f64>) -> f64 {
            0.0
        }
    }

    impl SmoothOracle for ZeroGradient {
        fn alpha(&self) -> f64 {
            1.0
        }
        fn lipschitz(&self) -> f64 {
            1.0
        }
        fn gradient(&self, x: &Array1<f64>) -> Array1<f64> {
            Array1::zeros(x.len())
        }
    }

    fn cfg(step: f64, alpha: f64, variant: Variant) -> SchemeConfig {
        SchemeConfig {
            step,
            alpha,
            variant,
            strict_step_check: true,
        }
    }

    #[test]
    fn semi_implicit_hand_example() {
        // f = x²/2, α = L = 1, s = 1, (x, v) = (1, 0):
        // x' = 1, v' = -1/4, next = (0, 1/4).
        let q = quadratic_from_spectrum(&[1.0], &[0.0], None).unwrap();
        let state = DiscreteState::at_rest(array![1.0]);
        let (next, inter) =
            semi_implicit_step(&q, &cfg(1.0, 1.0, Variant::SemiImplicit), &state).unwrap();
        assert!((inter.x_prime[0] - 1.0).abs() < 1e-15);
        assert!((inter.v_prime[0] + 0.25).abs() < 1e-15);
        assert!(next.x[0].abs() < 1e-15);
        assert!((next.v[0] - 0.25).abs() < 1e-15);
        assert_eq!(next.n, 1);
    }

    #[test]
    fn semi_implicit_fixed_point_at_minimizer() {
        let q = quadratic_from_spectrum(&[1.0, 4.0], &[1.0, 2.0], None).unwrap();
        let xstar = q.minimizer().unwrap().clone();
        let state = DiscreteState::at_rest(xstar.clone());
        let (next, _) =
            semi_implicit_step(&q, &cfg(0.5, 1.0, Variant::SemiImplicit), &state).unwrap();
        for i in 0..2 {
            assert!((next.x[i] - xstar[i]).abs() < 1e-14);
            assert!(next.v[i].abs() < 1e-14);
        }
    }

    #[test]
    fn semi_implicit_zero_gradient_closed_form() {
        // With no gradient the step is the pure momentum-decay map:
        // x ← x + sv, v ← (1+s√α)^{-2} v. From (0, 4): (4, 1).
        let z = ZeroGradient;
        let mut state = DiscreteState {
            x: array![0.0],
            v: array![4.0],
            n: 0,
            aux: None,
        };
        let c = cfg(1.0, 1.0, Variant::SemiImplicit);
        let (next, _) = semi_implicit_step(&z, &c, &state).unwrap();
        assert!((next.x[0] - 4.0).abs() < 1e-15);
        assert!((next.v[0] - 1.0).abs() < 1e-15);

        // Velocity reset identity over several steps and generic parameters.
        let c = cfg(0.3, 2.0, Variant::SemiImplicit);
        let rho = (1.0 + 0.3 * 2.0f64.sqrt()).powi(-2);
        state = DiscreteState {
            x: array![0.7],
            v: array![-1.3],
            n: 0,
            aux: None,
        };
        for _ in 0..5 {
            let (next, _) = semi_implicit_step(&z, &c, &state).unwrap();
            assert!((next.x[0] - (state.x[0] + 0.3 * state.v[0])).abs() < 1e-14);
            assert!((next.v[0] - rho * state.v[0]).abs() < 1e-14);
            state = next;
        }
    }

    #[test]
    fn strict_step_check_rejects_large_steps() {
        let q = quadratic_from_spectrum(&[1.0, 100.0], &[0.0, 0.0], None).unwrap();
        let state = DiscreteState::at_rest(array![1.0, 1.0]);
        let err =
            semi_implicit_step(&q, &cfg(0.3, 1.0, Variant::SemiImplicit), &state).unwrap_err();
        assert!(matches!(err, Error::StepSize { .. }));
        // The theorem-maximal step passes.
        assert!(semi_implicit_step(&q, &cfg(0.1, 1.0, Variant::SemiImplicit), &state).is_ok());
    }

    #[test]
    fn sufficient_decrease_examples() {
        let q = quadratic_from_spectrum(&[1.0], &[0.0], None).unwrap();
        let c = cfg(1.0, 1.0, Variant::SemiImplicit);
        // ∇f(0) = 0: identity.
        let (x, v) = sufficient_decrease_update(&q, &c, &array![0.0], &array![0.7]);
        assert_eq!(x[0], 0.0);
        assert_eq!(v[0], 0.7);
        // (1, 0) → (0, 1/2).
        let (x, v) = sufficient_decrease_update(&q, &c, &array![1.0], &array![0.0]);
        assert!(x[0].abs() < 1e-15);
        assert!((v[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sufficient_decrease_preserves_weighted_sum_and_lowers_objective() {
        let q = quadratic_from_spectrum(&[1.0, 3.0, 20.0], &[0.3, -1.0, 0.8], Some(6)).unwrap();
        let c = cfg(1.0 / q.lipschitz().sqrt(), q.alpha(), Variant::SemiImplicit);
        let damp = 1.0 + c.step * c.alpha.sqrt();
        let mut rng = SeededRng::new(2);
        for _ in 0..100 {
            let x = Array1::from(rng.normal_vector(3));
            let v = Array1::from(rng.normal_vector(3));
            let (x2, v2) = sufficient_decrease_update(&q, &c, &x, &v);
            let before = c.alpha.sqrt() * &x + damp * &v;
            let after = c.alpha.sqrt() * &x2 + damp * &v2;
            for i in 0..3 {
                assert!((before[i] - after[i]).abs() < 1e-12);
            }
            let g = q.gradient(&x);
            let drop = q.value_diff(&x, &x2);
            assert!(drop >= g.dot(&g) / (2.0 * q.lipschitz()) - 1e-10);
        }
    }

    #[test]
    fn forward_backward_hand_example() {
        // g = (x-2)²/2, h = |x|, s = 1, x' = 0:
        // y = 2, prox = 1, x₊ = 1, g_n = -1, δ = -1.
        let g = quadratic_from_spectrum(&[1.0], &[2.0], None)
            .unwrap()
            .with_offset(2.0);
        let f = crate::problems::CompositeOracle::new(Box::new(g), Box::new(L1Term::new(1.0)));
        let state = DiscreteState::at_rest(array![0.0]);
        let (next, inter) =
            forward_backward_step(&f, &cfg(1.0, 1.0, Variant::ForwardBackward), &state).unwrap();
        assert!((next.x[0] - 1.0).abs() < 1e-15);
        assert!((inter.gradient_like[0] + 1.0).abs() < 1e-15);
        assert!((inter.delta[0] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn forward_backward_fixed_point_at_composite_minimizer() {
        let g = quadratic_from_spectrum(&[1.0], &[2.0], None)
            .unwrap()
            .with_offset(2.0);
        let f = crate::problems::CompositeOracle::new(Box::new(g), Box::new(L1Term::new(1.0)));
        // x* = 1 (prox fixed point, checked via grid search in the problems
        // tests).
        let state = DiscreteState::at_rest(array![1.0]);
        let (next, inter) =
            forward_backward_step(&f, &cfg(1.0, 1.0, Variant::ForwardBackward), &state).unwrap();
        assert!((next.x[0] - 1.0).abs() < 1e-15);
        assert!(inter.gradient_like[0].abs() < 1e-15);
    }

    #[test]
    fn forward_backward_with_zero_term_matches_smooth_scheme() {
        // With h ≡ 0 and s² = 1/L the two schemes coincide exactly.
        let make_smooth = || quadratic_from_spectrum(&[1.0, 4.0], &[0.5, -0.3], None).unwrap();
        let q = make_smooth();
        let f = crate::problems::CompositeOracle::new(Box::new(make_smooth()), Box::new(ZeroTerm));
        let c = cfg(0.5, 1.0, Variant::SemiImplicit); // s = 1/√4, s² = 1/L
        let mut smooth_state = DiscreteState::at_rest(array![3.0, -2.0]);
        let mut comp_state = smooth_state.clone();
        for _ in 0..100 {
            let (s_next, _) = semi_implicit_step(&q, &c, &smooth_state).unwrap();
            let (c_next, _) = forward_backward_step(&f, &c, &comp_state).unwrap();
            for i in 0..2 {
                assert!((s_next.x[i] - c_next.x[i]).abs() < 1e-12);
                assert!((s_next.v[i] - c_next.v[i]).abs() < 1e-12);
            }
            smooth_state = s_next;
            comp_state = c_next;
        }
    }

    #[test]
    fn nesterov_momentum_coefficient() {
        // L = 4, α = 1 → β = 1/3; second step uses y = x₁ + (x₁ - x₀)/3.
        let q = quadratic_from_spectrum(&[1.0, 4.0], &[0.0, 0.0], None).unwrap();
        let x0 = array![1.0, 1.0];
        let s1 = nesterov_step(&q, &DiscreteState::at_rest(x0.clone()));
        // First step has x_{-1} = x₀, so y₀ = x₀.
        let expected1 = &x0 - &(q.gradient(&x0) / 4.0);
        for i in 0..2 {
            assert!((s1.x[i] - expected1[i]).abs() < 1e-15);
        }
        let s2 = nesterov_step(&q, &s1);
        let y = &s1.x + &((1.0 / 3.0) * &(&s1.x - &x0));
        let expected2 = &y - &(q.gradient(&y) / 4.0);
        for i in 0..2 {
            assert!((s2.x[i] - expected2[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn nesterov_unit_condition_number_converges_in_one_step() {
        let q = quadratic_from_spectrum(&[2.0, 2.0], &[2.0, -4.0], None).unwrap();
        let state = DiscreteState::at_rest(array![5.0, 5.0]);
        let next = nesterov_step(&q, &state);
        let xstar = q.minimizer().unwrap();
        for i in 0..2 {
            assert!((next.x[i] - xstar[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn nesterov_and_heavy_ball_fix_the_minimizer() {
        let q = quadratic_from_spectrum(&[1.0, 9.0], &[1.0, 3.0], Some(3)).unwrap();
        let xstar = q.minimizer().unwrap().clone();
        let state = DiscreteState {
            x: xstar.clone(),
            v: Array1::zeros(2),
            n: 0,
            aux: Some(xstar.clone()),
        };
        for next in [nesterov_step(&q, &state), heavy_ball_step(&q, &state)] {
            for i in 0..2 {
                assert!((next.x[i] - xstar[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn heavy_ball_coefficients() {
        // L = 4, α = 1: step 4/9, momentum 1/9.
        let q = quadratic_from_spectrum(&[1.0, 4.0], &[0.0, 0.0], None).unwrap();
        let x = array![1.0, 0.5];
        let prev = array![0.5, 0.25];
        let state = DiscreteState {
            x: x.clone(),
            v: Array1::zeros(2),
            n: 0,
            aux: Some(prev.clone()),
        };
        let next = heavy_ball_step(&q, &state);
        let expected = &x - &((4.0 / 9.0) * &q.gradient(&x)) + &((1.0 / 9.0) * &(&x - &prev));
        for i in 0..2 {
            assert!((next.x[i] - expected[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn heavy_ball_unit_condition_number_is_gradient_descent() {
        let q = quadratic_from_spectrum(&[3.0, 3.0], &[1.0, -1.0], None).unwrap();
        let state = DiscreteState {
            x: array![2.0, -1.0],
            v: Array1::zeros(2),
            n: 0,
            aux: Some(array![5.0, 5.0]),
        };
        let hb = heavy_ball_step(&q, &state);
        let gd = gradient_descent_step(&q, &state);
        for i in 0..2 {
            assert!((hb.x[i] - gd.x[i]).abs() < 1e-15);
        }
    }

    fn reference_for(q: &dyn SmoothOracle) -> Reference {
        let xstar = q.minimizer().unwrap().clone();
        let fstar = q.value(&xstar);
        Reference { xstar, fstar }
    }

    #[test]
    fn run_single_iteration_yields_single_record() {
        let q = quadratic_from_spectrum(&[1.0], &[0.0], None).unwrap();
        let reference = reference_for(&q);
        let scheme = Scheme::SemiImplicit(&q);
        let c = cfg(1.0, 1.0, Variant::SemiImplicit);
        let records = run(
            &scheme,
            &c,
            &DiscreteState::at_rest(array![1.0]),
            1,
            &reference,
            None,
        )
        .unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].n, 1);
    }

    #[test]
    fn run_heavy_ball_from_minimizer_keeps_zero_gap() {
        let q = quadratic_from_spectrum(&[1.0, 4.0], &[2.0, 2.0], None).unwrap();
        let reference = reference_for(&q);
        let scheme = Scheme::HeavyBall(&q);
        let c = cfg(0.5, 1.0, Variant::HeavyBall);
        let initial = DiscreteState::at_rest(reference.xstar.clone());
        let records = run(&scheme, &c, &initial, 20, &reference, None).unwrap();
        for r in &records {
            assert!(r.f_gap.abs() < 1e-20);
        }
    }

    #[test]
    fn run_reports_divergence_with_partial_records() {
        let q = quadratic_from_spectrum(&[1.0, 100.0], &[0.0, 0.0], None).unwrap();
        let reference = reference_for(&q);
        let scheme = Scheme::SemiImplicit(&q);
        let mut c = cfg(10.0, 1.0, Variant::SemiImplicit);
        c.strict_step_check = false;
        let initial = DiscreteState::at_rest(array![1.0, 1.0]);
        match run(&scheme, &c, &initial, 100_000, &reference, None) {
            Err(RunError::Diverged { step, .. }) => assert!(step > 0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn theorem_rate_holds_on_quadratic_and_ridge() {
        // f(x_n) - f* ≤ 2 (1+s√α)^{-n} (f(x₀) - f*) with v₀ = 0, s = 1/√L.
        let problems: Vec<Box<dyn SmoothOracle>> = vec![
            Box::new(quadratic_from_spectrum(&[1.0, 30.0, 100.0], &[1.0, 0.0, -1.0], Some(13)).unwrap()),
            Box::new(ridge_least_squares(10, 14, 50.0, 1.0, 14).unwrap()),
        ];
        for oracle in &problems {
            let reference = match oracle.minimizer() {
                Some(x) => Reference {
                    xstar: x.clone(),
                    fstar: oracle.value(x),
                },
                None => {
                    // Long independent baseline.
                    let mut x = Array1::zeros(oracle.dimension());
                    for _ in 0..400_000 {
                        let g = oracle.gradient(&x);
                        if g.dot(&g).sqrt() < 1e-13 {
                            break;
                        }
                        x.scaled_add(-1.0 / oracle.lipschitz(), &g);
                    }
                    let fstar = oracle.value(&x);
                    Reference { xstar: x, fstar }
                }
            };
            let s = 1.0 / oracle.lipschitz().sqrt();
            let c = SchemeConfig {
                step: s,
                alpha: oracle.alpha(),
                variant: Variant::SemiImplicit,
                strict_step_check: true,
            };
            let mut rng = SeededRng::new(100);
            let x0 = Array1::from(rng.normal_vector(oracle.dimension()));
            let gap0 = oracle.value_diff(&x0, &reference.xstar);
            let scheme = Scheme::SemiImplicit(oracle.as_ref());
            let records = run(
                &scheme,
                &c,
                &DiscreteState::at_rest(x0),
                300,
                &reference,
                None,
            )
            .unwrap();
            let rate = 1.0 + s * oracle.alpha().sqrt();
            for r in &records {
                let bound = 2.0 * rate.powi(-(r.n as i32)) * gap0;
                assert!(
                    r.f_gap <= bound * (1.0 + 1e-9) + 1e-300,
                    "n = {}: gap {} exceeds bound {}",
                    r.n,
                    r.f_gap,
                    bound
                );
                // The Lyapunov value dominates the gap on every record.
                assert!(r.f_gap <= r.lyapunov + 1e-12);
            }
        }
    }
}
