//! Strongly convex first-order optimization as damped-oscillator dynamics.
//!
//! The crate implements a family of accelerated methods obtained by
//! discretizing the flow `ẋ = v`, `v̇ = -γv - ∇f(x)`, together with runtime
//! Lyapunov certificates for the contraction each scheme is supposed to
//! deliver:
//!
//! * [`continuous`] — the flow itself, an RK4 integrator, and per-eigenmode
//!   damping analysis (over/critical/under-damped regimes, stability step
//!   bounds).
//! * [`schemes`] — the semi-implicit momentum discretization, its
//!   forward-backward composite variant, and Nesterov/heavy-ball/gradient
//!   descent baselines.
//! * [`coordinate`] — the stochastic coordinate variant with `√L_i` sampling,
//!   a semi-greedy mode, and a closed-form lazy update engine.
//! * [`lyapunov`] — the discrete Lyapunov function and the certificate
//!   battery (contraction, decrease conditions, preserved norm).
//! * [`problems`] — oracle traits and the spectrum-controlled test problems.
//! * [`trace`] — fixed CSV schemas for traces, certificates and sweeps.

pub mod continuous;
pub mod coordinate;
pub mod error;
pub mod lyapunov;
pub mod problems;
pub mod rng;
pub mod schemes;
pub mod trace;

pub use error::{Error, Result};
