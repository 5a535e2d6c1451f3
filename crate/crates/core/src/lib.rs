//! Discretization of continuous-time controllers with the scalable bilinear
//! transformation (SBT), a two-parameter family of s-to-z maps that contains
//! backward Euler, Tustin and pre-warped Tustin as special cases.
//!
//! The crate is organized bottom-up:
//!
//! - [`lti`]: polynomials, rational transfer functions, quadratic roots.
//! - [`transforms`]: the SBT map, its inverse, the exact map, pre-warping,
//!   stability geometry, and substitution into transfer functions.
//! - [`controllers`]: quasi-resonant and PI controllers and their discrete
//!   second-order sections.
//! - [`analysis`]: frequency response, magnitude error, RMSE, pole maps.
//! - [`tuning`]: loss functions over `(alpha, beta)` and a deterministic search.
//! - [`sim`]: difference-equation execution, sine tests, a grid-tied inverter
//!   surrogate and THD.
//!
//! ```
//! use sbt::controllers::{qr_discretize, sbt_params_straightforward, QrParams};
//! use sbt::transforms::Method;
//!
//! let qr = QrParams::board();
//! let t = 1.0 / 20_000.0;
//! let params = sbt_params_straightforward(&qr, t)?;
//! let section = qr_discretize(&qr, Method::Sbt(params), t)?;
//! assert!((section.a2 + section.a1 + section.a0).abs() < 1e-15);
//! # Ok::<(), sbt::Error>(())
//! ```

pub mod analysis;
pub mod controllers;
mod error;
pub mod lti;
pub mod sim;
pub mod transforms;
pub mod tuning;

pub use error::{Error, Result};
