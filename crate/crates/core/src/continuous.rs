//! Continuous damped dynamics, an RK4 integrator, and per-mode damping
//! analysis.
//!
//! The flow is `ẋ = v`, `v̇ = -γ v - ∇f(x)`: a particle in the potential `f`
//! with friction `γ`. On a quadratic the flow decouples into one damped
//! harmonic oscillator per eigendirection, which is what
//! [`classify_damping`] analyzes.

use ndarray::Array1;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::problems::SmoothOracle;

/// Position/velocity pair at a point in time.
#[derive(Clone, Debug)]
pub struct PhaseState {
    pub x: Array1<f64>,
    pub v: Array1<f64>,
    pub t: f64,
}

impl PhaseState {
    pub fn at_rest(x: Array1<f64>) -> Self {
        let v = Array1::zeros(x.len());
        Self { x, v, t: 0.0 }
    }
}

/// Damping regime of a single oscillator mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DampingRegime {
    Overdamped,
    Critical,
    Underdamped,
}

impl DampingRegime {
    pub fn as_str(&self) -> &'static str {
        match self {
            DampingRegime::Overdamped => "overdamped",
            DampingRegime::Critical => "critical",
            DampingRegime::Underdamped => "underdamped",
        }
    }
}

/// Characteristic-root analysis of one eigenmode.
#[derive(Clone, Debug)]
pub struct DampingAnalysis {
    pub eigenvalue: f64,
    pub damping: f64,
    pub roots: (Complex64, Complex64),
    pub regime: DampingRegime,
    /// Largest real part of the roots; the mode decays like `e^{decay_rate t}`.
    pub decay_rate: f64,
    pub root_modulus: f64,
}

/// Discriminant tolerance for calling a mode critically damped.
const CRITICAL_TOL: f64 = 1e-12;

/// Roots and regime of `z² + γz + λ = 0`.
pub fn classify_damping(eigenvalue: f64, damping: f64) -> DampingAnalysis {
    let discriminant = damping * damping - 4.0 * eigenvalue;
    let (roots, regime, decay_rate, root_modulus) = if discriminant.abs() <= CRITICAL_TOL {
        let z = Complex64::new(-0.5 * damping, 0.0);
        (
            (z, z),
            DampingRegime::Critical,
            -0.5 * damping,
            0.5 * damping,
        )
    } else if discriminant > 0.0 {
        let sq = discriminant.sqrt();
        let hi = Complex64::new(0.5 * (-damping + sq), 0.0);
        let lo = Complex64::new(0.5 * (-damping - sq), 0.0);
        (
            (hi, lo),
            DampingRegime::Overdamped,
            hi.re,
            lo.re.abs().max(hi.re.abs()),
        )
    } else {
        let im = 0.5 * (-discriminant).sqrt();
        let re = -0.5 * damping;
        // Complex pair: |z|² = γ²/4 + (4λ - γ²)/4 = λ exactly.
        (
            (Complex64::new(re, im), Complex64::new(re, -im)),
            DampingRegime::Underdamped,
            re,
            eigenvalue.sqrt(),
        )
    };
    DampingAnalysis {
        eigenvalue,
        damping,
        roots,
        regime,
        decay_rate,
        root_modulus,
    }
}

/// Damping that critically damps the slowest mode: `2√λ_min`.
pub fn optimal_damping(lambda_min: f64) -> f64 {
    2.0 * lambda_min.sqrt()
}

/// Largest stable step for an integrator whose stability region contains the
/// negative unit semicircle: `1/√λ_max`.
pub fn stability_step_bound(lambda_max: f64) -> f64 {
    1.0 / lambda_max.sqrt()
}

/// Right-hand side of the damped flow: `(ẋ, v̇) = (v, -γv - ∇f(x))`.
pub fn vector_field(
    oracle: &dyn SmoothOracle,
    damping: f64,
    state: &PhaseState,
) -> (Array1<f64>, Array1<f64>) {
    let mut dv = oracle.gradient(&state.x);
    dv.zip_mut_with(&state.v, |g, &vi| *g = -damping * vi - *g);
    (state.v.clone(), dv)
}

/// Classic four-stage Runge-Kutta on the damped flow.
///
/// Returns all `steps + 1` states including the initial one. A non-finite
/// state, or one whose norm exceeds `1e12·(1 + ‖initial‖)`, aborts with a
/// divergence error carrying the step index.
pub fn rk4_trajectory(
    oracle: &dyn SmoothOracle,
    damping: f64,
    initial: &PhaseState,
    dt: f64,
    steps: usize,
) -> Result<Vec<PhaseState>> {
    if dt <= 0.0 {
        return Err(Error::InvalidParameter("dt must be positive".into()));
    }
    let initial_norm = initial.x.dot(&initial.x).sqrt() + initial.v.dot(&initial.v).sqrt();
    let ceiling = 1e12 * (1.0 + initial_norm);

    let mut out = Vec::with_capacity(steps + 1);
    out.push(initial.clone());
    let mut x = initial.x.clone();
    let mut v = initial.v.clone();
    let t0 = initial.t;

    // Stage buffers reused across steps; only the gradient calls allocate.
    let d = x.len();
    let mut xs = Array1::zeros(d);
    let mut vs = Array1::zeros(d);
    let mut kx = [Array1::zeros(d), Array1::zeros(d), Array1::zeros(d), Array1::zeros(d)];
    let mut kv: [Array1<f64>; 4] = std::array::from_fn(|_| Array1::zeros(d));

    for k in 0..steps {
        let weights = [0.0, 0.5 * dt, 0.5 * dt, dt];
        for stage in 0..4 {
            xs.assign(&x);
            vs.assign(&v);
            if stage > 0 {
                xs.scaled_add(weights[stage], &kx[stage - 1]);
                vs.scaled_add(weights[stage], &kv[stage - 1]);
            }
            let mut dv = oracle.gradient(&xs);
            dv.zip_mut_with(&vs, |g, &vi| *g = -damping * vi - *g);
            kx[stage].assign(&vs);
            kv[stage] = dv;
        }

        let sixth = dt / 6.0;
        for (buf, state) in [(&kx, &mut x), (&kv, &mut v)] {
            state.scaled_add(sixth, &buf[0]);
            state.scaled_add(2.0 * sixth, &buf[1]);
            state.scaled_add(2.0 * sixth, &buf[2]);
            state.scaled_add(sixth, &buf[3]);
        }

        let finite = x.iter().chain(v.iter()).all(|c| c.is_finite());
        let norm = x.dot(&x).sqrt() + v.dot(&v).sqrt();
        if !finite || norm > ceiling {
            return Err(Error::Divergence { step: k + 1 });
        }

        out.push(PhaseState {
            x: x.clone(),
            v: v.clone(),
            t: t0 + (k + 1) as f64 * dt,
        });
    }
    Ok(out)
}

/// Continuous Lyapunov value `f(x) - f* + ‖√α(x - x*) + v‖²/2`.
pub fn continuous_lyapunov(
    oracle: &dyn SmoothOracle,
    state: &PhaseState,
    xstar: &Array1<f64>,
    _fstar: f64,
) -> f64 {
    let sqrt_alpha = oracle.alpha().sqrt();
    let gap = oracle.value_diff(&state.x, xstar);
    let mut w = &state.x - xstar;
    w.mapv_inplace(|c| c * sqrt_alpha);
    w += &state.v;
    gap + 0.5 * w.dot(&w)
}

/// One row of a damping sweep.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub gamma: f64,
    pub analytic_decay_rate: f64,
    pub empirical_decay_rate: Option<f64>,
    pub regime: DampingRegime,
    pub diverged: bool,
}

/// Sweeps the damping rate over a grid on `(0, 4√λ_min]`.
///
/// Per grid point: the analytic decay rate of the slowest mode from
/// [`classify_damping`], plus an empirical rate fitted to the Lyapunov trace
/// of an RK4 run on the two-mode quadratic `diag(λ_min, λ_max)`. A step
/// above the stability bound flags the row as diverged instead of failing
/// the sweep.
pub fn damping_sweep(
    lambda_min: f64,
    lambda_max: f64,
    grid_size: usize,
    dt: f64,
    horizon: f64,
) -> Result<Vec<SweepRow>> {
    let gamma_max = 4.0 * lambda_min.sqrt();
    damping_sweep_range(lambda_min, lambda_max, 0.0, gamma_max, grid_size, dt, horizon)
}

/// [`damping_sweep`] over an explicit damping interval `(gamma_lo, gamma_hi]`.
pub fn damping_sweep_range(
    lambda_min: f64,
    lambda_max: f64,
    gamma_lo: f64,
    gamma_hi: f64,
    grid_size: usize,
    dt: f64,
    horizon: f64,
) -> Result<Vec<SweepRow>> {
    if grid_size < 3 {
        return Err(Error::InvalidParameter(
            "damping sweep needs a grid of at least 3 points".into(),
        ));
    }
    if lambda_min <= 0.0 || lambda_max < lambda_min {
        return Err(Error::InvalidParameter(
            "need 0 < lambda_min <= lambda_max".into(),
        ));
    }
    if !(gamma_lo >= 0.0 && gamma_hi > gamma_lo) {
        return Err(Error::InvalidParameter(
            "need 0 <= gamma_lo < gamma_hi".into(),
        ));
    }
    let oracle = crate::problems::quadratic_from_spectrum(
        &[lambda_min, lambda_max],
        &[0.0, 0.0],
        None,
    )?;
    let xstar = Array1::zeros(2);
    let initial = PhaseState::at_rest(Array1::from(vec![1.0, 1.0]));
    let steps = (horizon / dt).round() as usize;

    let mut rows = Vec::with_capacity(grid_size);
    for k in 0..grid_size {
        let gamma = gamma_lo + (gamma_hi - gamma_lo) * (k + 1) as f64 / grid_size as f64;
        let analysis = classify_damping(lambda_min, gamma);
        let (empirical, diverged) = match rk4_trajectory(&oracle, gamma, &initial, dt, steps) {
            Ok(traj) => {
                let times: Vec<f64> = traj.iter().map(|s| s.t).collect();
                let lyap: Vec<f64> = traj
                    .iter()
                    .map(|s| continuous_lyapunov(&oracle, s, &xstar, 0.0))
                    .collect();
                (fit_decay_rate(&times, &lyap), false)
            }
            Err(Error::Divergence { .. }) => (None, true),
            Err(e) => return Err(e),
        };
        rows.push(SweepRow {
            gamma,
            analytic_decay_rate: analysis.decay_rate,
            empirical_decay_rate: empirical,
            regime: analysis.regime,
            diverged,
        });
    }
    Ok(rows)
}

/// Rows for the trajectory CSV: `(t, f_gap, lyapunov, ‖v‖)` per state.
pub fn trajectory_rows(
    oracle: &dyn SmoothOracle,
    trajectory: &[PhaseState],
    xstar: &Array1<f64>,
    fstar: f64,
) -> Vec<(f64, f64, f64, f64)> {
    trajectory
        .iter()
        .map(|state| {
            (
                state.t,
                oracle.value_diff(&state.x, xstar),
                continuous_lyapunov(oracle, state, xstar, fstar),
                state.v.dot(&state.v).sqrt(),
            )
        })
        .collect()
}

/// Least-squares slope of `log y` over the tail half of a sampled signal,
/// halved to convert a squared-magnitude decay into a state decay rate.
///
/// Used by the damping sweep to estimate the empirical decay rate from a
/// Lyapunov trace: `L(t) ~ e^{2 r t}` when the state decays like `e^{r t}`.
pub fn fit_decay_rate(times: &[f64], lyapunov: &[f64]) -> Option<f64> {
    let n = times.len();
    if n < 4 || lyapunov.len() != n {
        return None;
    }
    let start = n / 2;
    let pairs: Vec<(f64, f64)> = times[start..]
        .iter()
        .zip(lyapunov[start..].iter())
        .filter(|&(_, &l)| l > 0.0 && l.is_finite())
        .map(|(&t, &l)| (t, l.ln()))
        .collect();
    if pairs.len() < 4 {
        return None;
    }
    let m = pairs.len() as f64;
    let mean_t = pairs.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = pairs.iter().map(|p| p.1).sum::<f64>() / m;
    let mut cov = 0.0;
    let mut var = 0.0;
    for &(t, y) in &pairs {
        cov += (t - mean_t) * (y - mean_y);
        var += (t - mean_t) * (t - mean_t);
    }
    if var == 0.0 {
        return None;
    }
    Some(0.5 * cov / var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{quadratic_from_spectrum, Objective};
    use ndarray::array;

    fn unit_quadratic() -> impl SmoothOracle {
        quadratic_from_spectrum(&[1.0], &[0.0], None).unwrap()
    }

    #[test]
    fn vector_field_direct_substitution() {
        let f = unit_quadratic();
        let cases = [
            (1.0, 0.0, 0.0, -1.0),
            (0.0, 1.0, 1.0, -2.0),
            (2.0, -1.0, -1.0, 0.0),
        ];
        for (x, v, dx, dv) in cases {
            let state = PhaseState {
                x: array![x],
                v: array![v],
                t: 0.0,
            };
            let (got_dx, got_dv) = vector_field(&f, 2.0, &state);
            assert!((got_dx[0] - dx).abs() < 1e-15);
            assert!((got_dv[0] - dv).abs() < 1e-15);
        }
    }

    #[test]
    fn rk4_zero_steps_returns_initial() {
        let f = unit_quadratic();
        let initial = PhaseState::at_rest(array![1.0]);
        let traj = rk4_trajectory(&f, 2.0, &initial, 1e-3, 0).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj[0].x[0], 1.0);
    }

    #[test]
    fn rk4_matches_critically_damped_closed_form() {
        // x(t) = (1 + t) e^{-t} for f = x²/2, γ = 2, x(0)=1, v(0)=0.
        let f = unit_quadratic();
        let initial = PhaseState::at_rest(array![1.0]);
        let traj = rk4_trajectory(&f, 2.0, &initial, 1e-3, 10_000).unwrap();
        let end = traj.last().unwrap();
        let expected = 11.0 * (-10.0f64).exp();
        assert!((end.t - 10.0).abs() < 1e-9);
        assert!(
            (end.x[0] - expected).abs() < 1e-6,
            "got {}, want {}",
            end.x[0],
            expected
        );
    }

    #[test]
    fn rk4_reports_divergence_above_stability_bound() {
        // λ = 100 has root modulus 10, so dt = 0.5 is far beyond 1/√λ = 0.1.
        let f = quadratic_from_spectrum(&[100.0], &[0.0], None).unwrap();
        let initial = PhaseState::at_rest(array![1.0]);
        let err = rk4_trajectory(&f, 2.0, &initial, 0.5, 200).unwrap_err();
        assert!(matches!(err, Error::Divergence { step } if step > 0));
    }

    #[test]
    fn continuous_lyapunov_values() {
        let f = unit_quadratic();
        let xstar = array![0.0];
        let mk = |x: f64, v: f64| PhaseState {
            x: array![x],
            v: array![v],
            t: 0.0,
        };
        assert_eq!(continuous_lyapunov(&f, &mk(0.0, 0.0), &xstar, 0.0), 0.0);
        assert!((continuous_lyapunov(&f, &mk(1.0, 0.0), &xstar, 0.0) - 1.0).abs() < 1e-15);
        assert!((continuous_lyapunov(&f, &mk(1.0, -1.0), &xstar, 0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn classify_damping_critical() {
        let a = classify_damping(1.0, 2.0);
        assert_eq!(a.regime, DampingRegime::Critical);
        assert!((a.roots.0.re + 1.0).abs() < 1e-12);
        assert!((a.decay_rate + 1.0).abs() < 1e-12);
    }

    #[test]
    fn classify_damping_overdamped_roots() {
        // Numerical root check: both roots satisfy p(z) = 0.
        let a = classify_damping(1.0, 3.0);
        assert_eq!(a.regime, DampingRegime::Overdamped);
        assert!((a.roots.0.re + 0.381966).abs() < 1e-6);
        assert!((a.roots.1.re + 2.618034).abs() < 1e-6);
        assert!((a.decay_rate + 0.381966).abs() < 1e-6);
        for z in [a.roots.0, a.roots.1] {
            let p = z * z + Complex64::new(a.damping, 0.0) * z + Complex64::new(a.eigenvalue, 0.0);
            assert!(p.norm() < 1e-12);
        }
    }

    #[test]
    fn classify_damping_underdamped_modulus() {
        let a = classify_damping(4.0, 2.0);
        assert_eq!(a.regime, DampingRegime::Underdamped);
        assert!((a.roots.0.re + 1.0).abs() < 1e-12);
        assert!((a.roots.0.im - 3.0f64.sqrt()).abs() < 1e-12);
        assert!((a.decay_rate + 1.0).abs() < 1e-12);
        assert_eq!(a.root_modulus, 2.0);
        let p = a.roots.0 * a.roots.0
            + Complex64::new(a.damping, 0.0) * a.roots.0
            + Complex64::new(a.eigenvalue, 0.0);
        assert!(p.norm() < 1e-12);
    }

    #[test]
    fn underdamped_modulus_is_sqrt_lambda_exactly() {
        for &(lambda, gamma) in &[(1.0, 1.0), (4.0, 3.0), (9.0, 0.5), (2.5, 2.0)] {
            let a = classify_damping(lambda, gamma);
            if gamma <= 2.0 * f64::sqrt(lambda) {
                assert_eq!(a.root_modulus, f64::sqrt(lambda));
            }
        }
    }

    #[test]
    fn decay_rate_is_bounded_by_critical_rate() {
        for k in 1..400 {
            let gamma = k as f64 * 0.02;
            let a = classify_damping(1.0, gamma);
            assert!(a.decay_rate >= -1.0 - 1e-12);
            if (gamma - 2.0).abs() > 1e-9 {
                assert!(a.decay_rate > -1.0 + 1e-12, "gamma = {gamma}");
            }
        }
    }

    #[test]
    fn optimal_damping_and_step_bound() {
        assert_eq!(optimal_damping(1.0), 2.0);
        assert_eq!(optimal_damping(4.0), 4.0);
        assert_eq!(optimal_damping(0.25), 1.0);
        assert_eq!(stability_step_bound(100.0), 0.1);
        assert_eq!(stability_step_bound(1.0), 1.0);
        assert_eq!(stability_step_bound(4.0), 0.5);
    }

    #[test]
    fn critical_damping_maximizes_decay_over_grid() {
        // 200-point γ grid over (0, 4√λ]; the fastest (most negative) analytic
        // decay rate must sit at the grid point nearest 2√λ.
        let lambda = 1.0;
        let gamma_max = 4.0 * f64::sqrt(lambda);
        let n = 200;
        let mut best_idx = 0;
        let mut best_rate = f64::INFINITY;
        let mut nearest_idx = 0;
        let mut nearest_dist = f64::INFINITY;
        for k in 0..n {
            let gamma = gamma_max * (k + 1) as f64 / n as f64;
            let a = classify_damping(lambda, gamma);
            if a.decay_rate < best_rate {
                best_rate = a.decay_rate;
                best_idx = k;
            }
            let dist = (gamma - 2.0 * f64::sqrt(lambda)).abs();
            if dist < nearest_dist {
                nearest_dist = dist;
                nearest_idx = k;
            }
        }
        assert_eq!(best_idx, nearest_idx);
    }

    #[test]
    fn sweep_over_overdamped_interval_labels_every_row() {
        // γ over (3√λ, 4√λ]: strictly overdamped throughout.
        let rows = damping_sweep_range(1.0, 1.0, 3.0, 4.0, 5, 0.05, 5.0).unwrap();
        assert_eq!(rows.len(), 5);
        assert!(rows
            .iter()
            .all(|r| r.regime == DampingRegime::Overdamped && !r.diverged));
    }

    #[test]
    fn undamped_flow_conserves_energy() {
        let f = quadratic_from_spectrum(&[1.0, 4.0], &[0.0, 0.0], None).unwrap();
        let initial = PhaseState {
            x: array![1.0, -0.5],
            v: array![0.0, 0.5],
            t: 0.0,
        };
        let energy = |s: &PhaseState| f.value(&s.x) + 0.5 * s.v.dot(&s.v);
        let e0 = energy(&initial);
        let traj = rk4_trajectory(&f, 0.0, &initial, 1e-3, 10_000).unwrap();
        for state in &traj {
            assert!((energy(state) - e0).abs() / e0 <= 1e-6);
        }
    }

    #[test]
    fn lyapunov_decays_along_critically_damped_flow() {
        let f = quadratic_from_spectrum(&[1.0, 2.0, 30.0], &[0.2, 0.0, -0.4], Some(4)).unwrap();
        let xstar = f.minimizer().unwrap().clone();
        let initial = PhaseState::at_rest(array![1.0, -2.0, 0.5]);
        let dt = 0.01 / f.lipschitz().sqrt();
        let gamma = optimal_damping(f.alpha());
        let traj = rk4_trajectory(&f, gamma, &initial, dt, 5000).unwrap();
        let mut prev = continuous_lyapunov(&f, &traj[0], &xstar, 0.0);
        for state in &traj[1..] {
            let cur = continuous_lyapunov(&f, state, &xstar, 0.0);
            assert!(cur <= prev * (1.0 + 1e-8));
            prev = cur;
        }
    }

    #[test]
    fn fitted_rate_matches_critical_decay() {
        let f = unit_quadratic();
        let initial = PhaseState::at_rest(array![1.0]);
        let dt = 1e-2;
        let steps = 4000; // t ∈ [0, 40]
        let traj = rk4_trajectory(&f, 2.0, &initial, dt, steps).unwrap();
        let times: Vec<f64> = traj.iter().map(|s| s.t).collect();
        let lyap: Vec<f64> = traj
            .iter()
            .map(|s| continuous_lyapunov(&f, s, &array![0.0], 0.0))
            .collect();
        let rate = fit_decay_rate(&times, &lyap).unwrap();
        assert!(
            (rate + 1.0).abs() < 0.05,
            "fitted rate {rate} not within 5% of -1"
        );
    }
}
