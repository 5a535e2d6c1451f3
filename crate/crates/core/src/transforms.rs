//! The scalable bilinear transformation (SBT) and its relatives.
//!
//! The SBT substitutes
//!
//! ```text
//!           1        z - 1
//!   s = -------- ------------------
//!        beta*T   alpha*z + (1-alpha)
//! ```
//!
//! where the shape factor `alpha` is the backward-rectangle share of the
//! hexagonal integration area and the time factor `beta` rescales the sample
//! time. `(1, 1)` is backward Euler, `(0.5, 1)` is Tustin, and
//! `(0.5, K_pw)` reproduces the resonant-pole angle of pre-warped Tustin.
//!
//! The left half s-plane maps into the disk centered at `1 - 1/(2 alpha)`
//! with radius `1/(2 alpha)`, which lies inside the unit disk exactly when
//! `alpha >= 0.5`.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::{ComplexPoint, Domain, Polynomial, RationalTransfer};

/// Denominators of the substitution below this magnitude are singular.
pub const SINGULARITY_TOL: f64 = 1e-15;

/// Shape factor `alpha` and time factor `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SbtParams {
    alpha: f64,
    beta: f64,
}

impl SbtParams {
    pub const EULER: SbtParams = SbtParams {
        alpha: 1.0,
        beta: 1.0,
    };
    pub const TUSTIN: SbtParams = SbtParams {
        alpha: 0.5,
        beta: 1.0,
    };

    /// Accepts `alpha` in `[0, 1]` and `beta > 0`. Values below 0.5 are
    /// allowed but not stability preserving; see [`SbtParams::is_stable_range`].
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Param(format!(
                "alpha must lie in [0, 1], got {alpha}"
            )));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Param(format!("beta must be positive, got {beta}")));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// True for `0.5 <= alpha <= 1`, the range where every left-half-plane
    /// point lands inside the unit disk.
    pub fn is_stable_range(&self) -> bool {
        (0.5..=1.0).contains(&self.alpha)
    }

    /// Human-readable diagnostic for the unstable sub-range, if applicable.
    pub fn stability_warning(&self) -> Option<String> {
        (!self.is_stable_range()).then(|| {
            format!(
                "alpha = {} is below 0.5: the left half plane is not mapped into the unit disk",
                self.alpha
            )
        })
    }
}

impl fmt::Display for SbtParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(alpha={}, beta={})", self.alpha, self.beta)
    }
}

/// A discretization method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Method {
    Euler,
    Tustin,
    /// Tustin with the design frequency `omega_n` (rad/s) pre-warped.
    TustinPrewarp {
        omega_n: f64,
    },
    Sbt(SbtParams),
}

impl Method {
    /// The SBT parameter set that reproduces this method as a pure s-to-z map.
    ///
    /// For `TustinPrewarp` this is `(0.5, K_pw)`. Note that the pre-warped
    /// Tustin *controller* of [`crate::controllers::qr_discretize`] rescales
    /// only the resonant frequency, not the whole transfer function, so the
    /// two coefficient sets differ in the damping term.
    pub fn sbt_params(&self, sample_time: f64) -> Result<SbtParams> {
        match *self {
            Method::Euler => Ok(SbtParams::EULER),
            Method::Tustin => Ok(SbtParams::TUSTIN),
            Method::TustinPrewarp { omega_n } => {
                SbtParams::new(0.5, prewarp_factor(omega_n, sample_time)?)
            }
            Method::Sbt(p) => Ok(p),
        }
    }

    /// Short lowercase label used in tables and file names.
    pub fn label(&self) -> &'static str {
        match self {
            Method::Euler => "euler",
            Method::Tustin => "tustin",
            Method::TustinPrewarp { .. } => "sota",
            Method::Sbt(_) => "sbt",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Euler => write!(f, "Euler"),
            Method::Tustin => write!(f, "Tustin"),
            Method::TustinPrewarp { omega_n } => write!(f, "Tustin pre-warped at {omega_n} rad/s"),
            Method::Sbt(p) => write!(f, "SBT {p}"),
        }
    }
}

/// z-plane image of `s`: `z = (1 + (1-alpha) beta T s) / (1 - alpha beta T s)`.
pub fn sbt_z_of_s(s: ComplexPoint, p: SbtParams, sample_time: f64) -> Result<ComplexPoint> {
    let bt = p.beta * sample_time;
    let den = 1.0 - p.alpha * bt * s;
    if den.norm() < SINGULARITY_TOL {
        return Err(Error::MapSingularity(den.norm()));
    }
    Ok((1.0 + (1.0 - p.alpha) * bt * s) / den)
}

/// s-plane preimage of `z` under the SBT, written out in real and imaginary
/// parts.
pub fn sbt_s_of_z(z: ComplexPoint, p: SbtParams, sample_time: f64) -> Result<ComplexPoint> {
    let a = p.alpha;
    let (g, zeta) = (z.re, z.im);
    let den = (a * g + 1.0 - a).powi(2) + (a * zeta).powi(2);
    if den.sqrt() < SINGULARITY_TOL {
        return Err(Error::MapSingularity(den.sqrt()));
    }
    let k = 1.0 / (p.beta * sample_time);
    let sigma = k * (a * (g - 1.0).powi(2) + g - 1.0 + a * zeta * zeta) / den;
    let omega = k * zeta / den;
    Ok(Complex64::new(sigma, omega))
}

/// Exact (matched) discretization: `z = exp(s T)`.
pub fn exact_z_of_s(s: ComplexPoint, sample_time: f64) -> ComplexPoint {
    (s * sample_time).exp()
}

/// Equivalent continuous pole of a discrete pole, `s = ln(z) / T` on the
/// principal branch (`arg z` in `(-pi, pi]`).
pub fn equivalent_s_of_z(z: ComplexPoint, sample_time: f64) -> Result<ComplexPoint> {
    if z.re == 0.0 && z.im == 0.0 {
        return Err(Error::Origin);
    }
    Ok(Complex64::new(z.norm().ln(), z.im.atan2(z.re)) / sample_time)
}

/// `K_pw = tan(omega_n T / 2) / (omega_n T / 2)`.
pub fn prewarp_factor(omega_n: f64, sample_time: f64) -> Result<f64> {
    if !(omega_n > 0.0) {
        return Err(Error::OutOfDomain(format!(
            "pre-warp frequency must be positive, got {omega_n}"
        )));
    }
    if !(sample_time > 0.0) {
        return Err(Error::OutOfDomain(format!(
            "sample time must be positive, got {sample_time}"
        )));
    }
    let x = omega_n * sample_time / 2.0;
    if x >= FRAC_PI_2 {
        return Err(Error::OutOfDomain(format!(
            "omega_n*T/2 = {x} reaches the tangent singularity at pi/2"
        )));
    }
    Ok(x.tan() / x)
}

/// Image of the closed left half s-plane under the SBT for a given `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityCircle {
    pub center_re: f64,
    pub radius: f64,
}

impl StabilityCircle {
    /// Boundary inclusive.
    pub fn contains(&self, z: ComplexPoint) -> bool {
        (z.re - self.center_re).powi(2) + z.im * z.im <= self.radius * self.radius
    }

    /// True when this disk lies inside `other`.
    pub fn is_within(&self, other: &StabilityCircle) -> bool {
        (self.center_re - other.center_re).abs() + self.radius <= other.radius
    }
}

pub fn stability_circle(alpha: f64) -> Result<StabilityCircle> {
    if !(alpha > 0.0) {
        return Err(Error::OutOfDomain(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let r = 1.0 / (2.0 * alpha);
    Ok(StabilityCircle {
        center_re: 1.0 - r,
        radius: r,
    })
}

/// Whether `z` lies in the image of the closed left half-plane for `alpha`.
/// Returns false for non-positive `alpha`.
pub fn is_stable_image(z: ComplexPoint, alpha: f64) -> bool {
    stability_circle(alpha).is_ok_and(|c| c.contains(z))
}

/// Discretizes a continuous rational transfer function by substituting the SBT.
///
/// With `n = max(deg num, deg den)`, every `s^k` becomes
/// `(z-1)^k (alpha z + 1 - alpha)^(n-k) (beta T)^(n-k)`, i.e. both sides are
/// multiplied through by `(beta T)^n (alpha z + 1 - alpha)^n`.
pub fn substitute(
    tf: &RationalTransfer,
    p: SbtParams,
    sample_time: f64,
) -> Result<RationalTransfer> {
    if tf.domain() != Domain::Continuous {
        return Err(Error::DomainMismatch(tf.domain(), Domain::Continuous));
    }
    if !(sample_time > 0.0) {
        return Err(Error::Param(format!(
            "sample time must be positive, got {sample_time}"
        )));
    }
    let n = tf.num().degree().max(tf.den().degree());
    let bt = p.beta * sample_time;
    let forward = Polynomial::new(vec![-1.0, 1.0])?;
    let blend = Polynomial::new(vec![1.0 - p.alpha, p.alpha])?;

    let compose = |poly: &Polynomial| {
        (0..=poly.degree()).fold(Polynomial::zero(), |acc, k| {
            let c = poly.coeff(k);
            if c == 0.0 {
                return acc;
            }
            let term = forward
                .pow(k)
                .mul(&blend.pow(n - k))
                .scale(c * bt.powi((n - k) as i32));
            acc.add(&term)
        })
    };

    RationalTransfer::new(
        compose(tf.num()),
        compose(tf.den()),
        Domain::Discrete { sample_time },
    )
}
