//! The α-CIR short-rate model.
//!
//! The short rate follows
//!
//! ```text
//! dr = a(b - r) dt + σ √r dB + σ_Z r^{1/α} dZ,
//! ```
//!
//! where `Z` is a spectrally positive α-stable Lévy process with
//! α ∈ (1, 2]. The process is a continuous-state branching process with
//! immigration, so bond prices and several path functionals have
//! semi-explicit Laplace transforms driven by a generalized Riccati ODE.
//!
//! Module map:
//!
//! - [`stable_core`]: stable increments and the Lévy measure tail functions.
//! - [`mechanism`]: parameters, branching mechanisms, roots, boundary class.
//! - [`affine_engine`]: Riccati curves, joint Laplace transforms, bonds, yields.
//! - [`derivatives`]: the running-minimum yield put and its Laplace transform.
//! - [`jump_analytics`]: large-jump counters and first-large-jump laws.
//! - [`simulation`]: path schemes, the LOU benchmark and the Hawkes rescaling.
//! - [`mc_oracle`]: Monte Carlo estimators with standard errors.
//! - [`cli`]: the command-line front end.

pub mod affine_engine;
pub mod cli;
pub mod derivatives;
pub mod error;
pub mod jump_analytics;
pub mod mc_oracle;
pub mod mechanism;
pub mod numerics;
pub mod simulation;
pub mod stable_core;

pub use error::{Error, Result};
