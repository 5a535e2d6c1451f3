//! Polynomials and rational transfer functions.
//!
//! Coefficients are stored in ascending powers: `coeffs[k]` multiplies `x^k`.
//! Presentation layers that print descending forms (`a2 z^2 + a1 z + a0`)
//! convert at the boundary.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the s-plane (rad/s) or the z-plane (unitless).
pub type ComplexPoint = Complex64;

/// |den(x)| below this is reported as [`Error::PoleHit`].
pub const POLE_HIT_TOL: f64 = 1e-300;

/// Real polynomial, ascending powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Builds a polynomial from ascending coefficients, dropping trailing
    /// (highest-power) zeros. An all-zero input becomes the zero polynomial `[0]`.
    pub fn new(coeffs: impl Into<Vec<f64>>) -> Result<Self> {
        let mut coeffs = coeffs.into();
        if coeffs.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(bad) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::Param(format!("non-finite coefficient {bad}")));
        }
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        Ok(Self { coeffs })
    }

    /// Builds from descending coefficients (`c[0]` multiplies the highest power).
    pub fn from_descending(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().rev().copied().collect::<Vec<_>>())
    }

    pub fn zero() -> Self {
        Self { coeffs: vec![0.0] }
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    /// `x - root` for a real root.
    pub fn monic_linear(root: f64) -> Self {
        Self {
            coeffs: vec![-root, 1.0],
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().unwrap()
    }

    /// Coefficient of `x^k`, zero past the degree.
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    /// Horner evaluation at a complex point.
    pub fn eval(&self, x: ComplexPoint) -> ComplexPoint {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * k).collect::<Vec<_>>())
            .unwrap_or_else(|_| Self::zero())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let sum: Vec<f64> = (0..n).map(|k| self.coeff(k) + other.coeff(k)).collect();
        Self::new(sum).unwrap_or_else(|_| Self::zero())
    }

    /// Product by direct convolution.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out).unwrap_or_else(|_| Self::zero())
    }

    pub fn pow(&self, n: usize) -> Self {
        (0..n).fold(Self::constant(1.0), |acc, _| acc.mul(self))
    }
}

impl fmt::Display for Polynomial {
    /// Prints in ascending powers, e.g. `[1, 0, -1] (ascending)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, c) in self.coeffs.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "] (ascending)")
    }
}

/// Whether a transfer function lives in s or in z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Continuous,
    /// Discrete with sample time in seconds.
    Discrete {
        sample_time: f64,
    },
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Continuous => write!(f, "continuous"),
            Domain::Discrete { sample_time } => write!(f, "discrete(T={sample_time:e} s)"),
        }
    }
}

/// `num(x) / den(x)` in either domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalTransfer {
    num: Polynomial,
    den: Polynomial,
    domain: Domain,
}

impl RationalTransfer {
    pub fn new(num: Polynomial, den: Polynomial, domain: Domain) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Param("denominator is the zero polynomial".into()));
        }
        if let Domain::Discrete { sample_time } = domain {
            if !(sample_time > 0.0 && sample_time.is_finite()) {
                return Err(Error::Param(format!(
                    "sample time must be positive, got {sample_time}"
                )));
            }
        }
        Ok(Self { num, den, domain })
    }

    pub fn continuous(num: &[f64], den: &[f64]) -> Result<Self> {
        Self::new(
            Polynomial::new(num.to_vec())?,
            Polynomial::new(den.to_vec())?,
            Domain::Continuous,
        )
    }

    pub fn discrete(num: &[f64], den: &[f64], sample_time: f64) -> Result<Self> {
        Self::new(
            Polynomial::new(num.to_vec())?,
            Polynomial::new(den.to_vec())?,
            Domain::Discrete { sample_time },
        )
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn sample_time(&self) -> Option<f64> {
        match self.domain {
            Domain::Continuous => None,
            Domain::Discrete { sample_time } => Some(sample_time),
        }
    }

    /// `num(x) / den(x)`.
    pub fn eval(&self, x: ComplexPoint) -> Result<ComplexPoint> {
        let den = self.den.eval(x);
        if den.norm() < POLE_HIT_TOL {
            return Err(Error::PoleHit(den.norm()));
        }
        Ok(self.num.eval(x) / den)
    }

    /// Sum of two transfer functions over the common denominator
    /// `a.den * b.den`. No cancellation of shared factors is attempted.
    pub fn parallel(&self, other: &Self) -> Result<Self> {
        if self.domain != other.domain {
            return Err(Error::DomainMismatch(self.domain, other.domain));
        }
        let num = self.num.mul(&other.den).add(&other.num.mul(&self.den));
        let den = self.den.mul(&other.den);
        Self::new(num, den, self.domain)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            num: self.num.scale(k),
            den: self.den.clone(),
            domain: self.domain,
        }
    }
}

/// Both roots of a quadratic, positive-imaginary root first for complex
/// pairs and the larger root first for real ones.
pub fn quadratic_roots(p: &Polynomial) -> Result<[ComplexPoint; 2]> {
    if p.degree() != 2 {
        return Err(Error::Degree(p.degree()));
    }
    let (c, b, a) = (p.coeff(0), p.coeff(1), p.coeff(2));
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        let re = -b / (2.0 * a);
        let im = ((-disc).sqrt() / (2.0 * a)).abs();
        return Ok([Complex64::new(re, im), Complex64::new(re, -im)]);
    }
    // Cancellation-free form: q = -(b + sign(b) sqrt(disc)) / 2.
    let sq = disc.sqrt();
    let q = -0.5 * (b + b.signum() * sq);
    let (r1, r2) = if q == 0.0 {
        // b == 0 and disc == 0 -> double root at zero
        (0.0, 0.0)
    } else {
        (q / a, c / q)
    };
    let (hi, lo) = if r1 >= r2 { (r1, r2) } else { (r2, r1) };
    Ok([Complex64::new(hi, 0.0), Complex64::new(lo, 0.0)])
}
