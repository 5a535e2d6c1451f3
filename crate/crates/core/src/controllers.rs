//! Quasi-resonant (QR) and PI controllers, continuous and discrete.
//!
//! The continuous QR controller is
//!
//! ```text
//!                2 Kr wc s
//!   G(s) = ---------------------
//!           s^2 + 2 wc s + wn^2
//! ```
//!
//! and its discrete forms are second-order sections whose coefficients are
//! closed-form functions of `Kr wc T` and `wn T` for each method.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::{Polynomial, RationalTransfer};
use crate::transforms::{prewarp_factor, Method, SbtParams};

/// Gain `kr`, cutoff bandwidth `omega_c` (rad/s), resonant frequency `omega_n` (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QrParams {
    pub kr: f64,
    pub omega_c: f64,
    pub omega_n: f64,
}

impl QrParams {
    pub fn new(kr: f64, omega_c: f64, omega_n: f64) -> Result<Self> {
        let p = Self {
            kr,
            omega_c,
            omega_n,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kr > 0.0 && self.kr.is_finite()) {
            return Err(Error::Param(format!(
                "Kr must be positive, got {}",
                self.kr
            )));
        }
        if !(self.omega_c > 0.0 && self.omega_c < self.omega_n && self.omega_n.is_finite()) {
            return Err(Error::Param(format!(
                "need 0 < omega_c < omega_n, got omega_c = {}, omega_n = {}",
                self.omega_c, self.omega_n
            )));
        }
        Ok(())
    }

    /// The board-test controller: `Kr = 59.1`, `wc = 17.907`, `wn = 5969`.
    pub fn board() -> Self {
        Self {
            kr: 59.1,
            omega_c: 17.907,
            omega_n: 5969.0,
        }
    }

    /// The resonant part of the inverter current controller (`Kr = 44.325`).
    pub fn inverter() -> Self {
        Self {
            kr: 44.325,
            ..Self::board()
        }
    }
}

/// Proportional gain `kp` and integral time constant `tau_i` (s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiParams {
    pub kp: f64,
    pub tau_i: f64,
}

impl PiParams {
    pub fn new(kp: f64, tau_i: f64) -> Result<Self> {
        let p = Self { kp, tau_i };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kp > 0.0 && self.kp.is_finite()) {
            return Err(Error::Param(format!(
                "Kp must be positive, got {}",
                self.kp
            )));
        }
        if !(self.tau_i > 0.0 && self.tau_i.is_finite()) {
            return Err(Error::Param(format!(
                "tau_i must be positive, got {}",
                self.tau_i
            )));
        }
        Ok(())
    }

    /// Inverter current-loop PI: `Kp = 2.955`, `tau_i = 8.594e-4 s`.
    pub fn inverter() -> Self {
        Self {
            kp: 2.955,
            tau_i: 8.594e-4,
        }
    }
}

/// `(a2 z^2 + a1 z + a0) / (b2 z^2 + b1 z + b0)`, descending powers of z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiquadCoeffs {
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
    pub b2: f64,
    pub b1: f64,
    pub b0: f64,
}

impl BiquadCoeffs {
    pub fn numerator(&self) -> [f64; 3] {
        [self.a2, self.a1, self.a0]
    }

    pub fn denominator(&self) -> [f64; 3] {
        [self.b2, self.b1, self.b0]
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.a2, self.a1, self.a0, self.b2, self.b1, self.b0]
    }

    /// The same section as a discrete [`RationalTransfer`] (ascending storage).
    pub fn to_transfer(&self, sample_time: f64) -> Result<RationalTransfer> {
        RationalTransfer::discrete(
            &[self.a0, self.a1, self.a2],
            &[self.b0, self.b1, self.b2],
            sample_time,
        )
    }

    pub fn den_polynomial(&self) -> Result<Polynomial> {
        Polynomial::new(vec![self.b0, self.b1, self.b2])
    }

    /// Reads a discretized transfer of degree at most two into section form.
    pub fn from_transfer(tf: &RationalTransfer) -> Result<Self> {
        if tf.num().degree() > 2 || tf.den().degree() > 2 {
            return Err(Error::Degree(tf.num().degree().max(tf.den().degree())));
        }
        let (n, d) = (tf.num(), tf.den());
        Ok(Self {
            a2: n.coeff(2),
            a1: n.coeff(1),
            a0: n.coeff(0),
            b2: d.coeff(2),
            b1: d.coeff(1),
            b0: d.coeff(0),
        })
    }
}

/// Coefficients of the recursion
/// `y(n) = Kin0 x(n) + Kin1 x(n-1) + Kin2 x(n-2) + Kout1 y(n-1) + Kout2 y(n-2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffEqCoeffs {
    pub kin0: f64,
    pub kin1: f64,
    pub kin2: f64,
    pub kout1: f64,
    pub kout2: f64,
}

impl DiffEqCoeffs {
    /// `y(n) = x(n)`.
    pub const PASS_THROUGH: DiffEqCoeffs = DiffEqCoeffs {
        kin0: 1.0,
        kin1: 0.0,
        kin2: 0.0,
        kout1: 0.0,
        kout2: 0.0,
    };

    /// Back to section form with `b2 = 1`.
    pub fn to_biquad(&self) -> BiquadCoeffs {
        BiquadCoeffs {
            a2: self.kin0,
            a1: self.kin1,
            a0: self.kin2,
            b2: 1.0,
            b1: -self.kout1,
            b0: -self.kout2,
        }
    }
}

pub fn qr_continuous(p: &QrParams) -> Result<RationalTransfer> {
    p.validate()?;
    RationalTransfer::continuous(
        &[0.0, 2.0 * p.kr * p.omega_c, 0.0],
        &[p.omega_n * p.omega_n, 2.0 * p.omega_c, 1.0],
    )
}

/// `Kp (1 + 1/(tau_i s))` as `(Kp tau_i s + Kp) / (tau_i s)`.
pub fn pi_continuous(pi: &PiParams) -> Result<RationalTransfer> {
    pi.validate()?;
    RationalTransfer::continuous(&[pi.kp, pi.kp * pi.tau_i], &[0.0, pi.tau_i])
}

/// PI and QR terms in parallel.
pub fn pir_continuous(pi: &PiParams, qr: &QrParams) -> Result<RationalTransfer> {
    pi_continuous(pi)?.parallel(&qr_continuous(qr)?)
}

/// Closed-form discrete QR section for `method`.
///
/// `TustinPrewarp` pre-warps only the resonant frequency (`wn -> K_pw wn`);
/// `Sbt` rescales the whole sample time, which also scales the `wc T` terms.
pub fn qr_discretize(p: &QrParams, method: Method, sample_time: f64) -> Result<BiquadCoeffs> {
    p.validate()?;
    if !(sample_time > 0.0 && sample_time.is_finite()) {
        return Err(Error::Param(format!(
            "sample time must be positive, got {sample_time}"
        )));
    }
    let t = sample_time;
    let g = p.kr * p.omega_c * t;
    let ct = p.omega_c * t;
    let nt = p.omega_n * t;
    let c = match method {
        Method::Euler => BiquadCoeffs {
            a2: 2.0 * g,
            a1: -2.0 * g,
            a0: 0.0,
            b2: 1.0 + 2.0 * ct + nt * nt,
            b1: -2.0 - 2.0 * ct,
            b0: 1.0,
        },
        Method::Tustin => tustin_section(g, ct, nt),
        Method::TustinPrewarp { omega_n } => {
            let k = prewarp_factor(omega_n, t)?;
            tustin_section(g, ct, k * nt)
        }
        Method::Sbt(sp) => sbt_section(g, ct, nt, sp),
    };
    Ok(c)
}

fn tustin_section(g: f64, ct: f64, nt: f64) -> BiquadCoeffs {
    let h = 0.5 * nt;
    BiquadCoeffs {
        a2: g,
        a1: 0.0,
        a0: -g,
        b2: 1.0 + ct + h * h,
        b1: 0.5 * nt * nt - 2.0,
        b0: 1.0 - ct + h * h,
    }
}

fn sbt_section(g: f64, ct: f64, nt: f64, sp: SbtParams) -> BiquadCoeffs {
    let (a, b) = (sp.alpha(), sp.beta());
    BiquadCoeffs {
        a2: 2.0 * a * b * g,
        a1: -(4.0 * a - 2.0) * b * g,
        a0: -(2.0 - 2.0 * a) * b * g,
        b2: 1.0 + 2.0 * a * b * ct + (a * b * nt).powi(2),
        b1: -2.0 - (4.0 * a - 2.0) * b * ct + 2.0 * a * (1.0 - a) * (b * nt).powi(2),
        b0: 1.0 - (2.0 - 2.0 * a) * b * ct + ((1.0 - a) * b * nt).powi(2),
    }
}

/// Normalizes by `b2`.
pub fn diff_eq_coeffs(c: &BiquadCoeffs) -> Result<DiffEqCoeffs> {
    if !(c.b2.abs() >= 1e-300) {
        return Err(Error::Normalization(c.b2.abs()));
    }
    Ok(DiffEqCoeffs {
        kin0: c.a2 / c.b2,
        kin1: c.a1 / c.b2,
        kin2: c.a0 / c.b2,
        kout1: -c.b1 / c.b2,
        kout2: -c.b0 / c.b2,
    })
}

/// `(alpha, beta) = (0.5, K_pw(wn, T))`.
pub fn sbt_params_straightforward(p: &QrParams, sample_time: f64) -> Result<SbtParams> {
    SbtParams::new(0.5, prewarp_factor(p.omega_n, sample_time)?)
}

/// Tustin discretization of the PI term as a section with a trailing zero
/// coefficient: `((Kp + g) z + (g - Kp)) / (z - 1)` with `g = Kp T / (2 tau_i)`.
pub fn pi_discretize(pi: &PiParams, sample_time: f64) -> Result<BiquadCoeffs> {
    pi.validate()?;
    let g = pi.kp * sample_time / (2.0 * pi.tau_i);
    Ok(BiquadCoeffs {
        a2: pi.kp + g,
        a1: g - pi.kp,
        a0: 0.0,
        b2: 1.0,
        b1: -1.0,
        b0: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::quadratic_roots;
    use crate::transforms::{sbt_z_of_s, substitute};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const T: f64 = 5e-5;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sota(p: &QrParams) -> Method {
        Method::TustinPrewarp { omega_n: p.omega_n }
    }

    #[test]
    fn param_validation() {
        assert!(QrParams::new(59.1, 17.907, 5969.0).is_ok());
        assert!(QrParams::new(0.0, 17.907, 5969.0).is_err());
        assert!(QrParams::new(1.0, 6000.0, 5969.0).is_err());
        assert!(QrParams::new(1.0, 0.0, 5969.0).is_err());
        assert!(PiParams::new(2.955, 8.594e-4).is_ok());
        assert!(PiParams::new(-1.0, 1.0).is_err());
        assert!(PiParams::new(1.0, 0.0).is_err());
    }

    #[test]
    fn continuous_qr_shape() {
        let p = QrParams::board();
        let tf = qr_continuous(&p).unwrap();
        assert_eq!(tf.num().coeffs(), &[0.0, 2.0 * 59.1 * 17.907]);
        assert_eq!(tf.den().coeffs(), &[5969.0 * 5969.0, 2.0 * 17.907, 1.0]);
        let [r, _] = quadratic_roots(tf.den()).unwrap();
        assert!((r.re + 17.907).abs() < 1e-9 && (r.im - 5968.97).abs() < 5e-3);
        let h = tf.eval(c(0.0, 5969.0)).unwrap();
        assert!((h - c(59.1, 0.0)).norm() < 1e-9);
        assert_eq!(tf.eval(c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn pir_low_frequency_and_peak() {
        let pi = PiParams::inverter();
        let qr = QrParams::inverter();
        let tf = pir_continuous(&pi, &qr).unwrap();
        assert_eq!(tf.den().degree(), 3);
        assert_eq!(tf.den().coeff(0), 0.0);
        assert!(tf.eval(c(0.0, 10.0)).unwrap().norm() > 300.0);
        let peak = tf.eval(c(0.0, qr.omega_n)).unwrap().norm();
        for dw in [-500.0, 500.0] {
            assert!(peak > tf.eval(c(0.0, qr.omega_n + dw)).unwrap().norm());
        }
    }

    #[test]
    fn pir_with_vanishing_kr_is_pi() {
        let pi = PiParams::inverter();
        let qr = QrParams {
            kr: 1e-15,
            ..QrParams::inverter()
        };
        let pir = pir_continuous(&pi, &qr).unwrap();
        let pi_tf = pi_continuous(&pi).unwrap();
        for w in [1.0, 100.0, 5969.0, 1e5] {
            let a = pir.eval(c(0.0, w)).unwrap();
            let b = pi_tf.eval(c(0.0, w)).unwrap();
            assert!((a - b).norm() <= 1e-9 * b.norm());
        }
    }

    #[test]
    fn euler_column() {
        let b = qr_discretize(&QrParams::board(), Method::Euler, T).unwrap();
        assert_eq!(b.b0, 1.0);
        assert_eq!(b.a0, 0.0);
        assert_eq!(b.a1, -b.a2);
    }

    #[test]
    fn tustin_column() {
        let p = QrParams::board();
        let b = qr_discretize(&p, Method::Tustin, T).unwrap();
        assert_eq!(b.a1, 0.0);
        assert_eq!(b.a2, p.kr * p.omega_c * T);
        assert_eq!(b.a0, -b.a2);
    }

    #[test]
    fn straightforward_sbt_numerator() {
        let p = QrParams::board();
        let sp = sbt_params_straightforward(&p, T).unwrap();
        assert_eq!(sp.alpha(), 0.5);
        assert!((sp.beta() - 1.00749).abs() < 1e-4);
        let b = qr_discretize(&p, Method::Sbt(sp), T).unwrap();
        assert!((b.a2 - 5.3307e-2).abs() < 5e-6, "{}", b.a2);
    }

    #[test]
    fn straightforward_limits() {
        let tiny = QrParams::new(1.0, 1e-10, 2e-8).unwrap();
        let sp = sbt_params_straightforward(&tiny, 1.0).unwrap();
        assert_eq!(sp.alpha(), 0.5);
        assert!((sp.beta() - 1.0).abs() < 1e-12);
        let quarter = QrParams::new(1.0, 1.0, std::f64::consts::FRAC_PI_2).unwrap();
        let sp = sbt_params_straightforward(&quarter, 1.0).unwrap();
        assert!((sp.beta() - 4.0 / std::f64::consts::PI).abs() < 1e-12);
        let bad = QrParams::new(1.0, 1.0, 4.0).unwrap();
        assert!(sbt_params_straightforward(&bad, 1.0).is_err());
        assert!(qr_discretize(&bad, sota(&bad), 1.0).is_err());
    }

    #[test]
    fn diff_eq_normalization() {
        let d = diff_eq_coeffs(&BiquadCoeffs {
            a2: 1.0,
            a1: 0.0,
            a0: 0.0,
            b2: 2.0,
            b1: 1.0,
            b0: 0.0,
        })
        .unwrap();
        assert_eq!((d.kin0, d.kout1, d.kout2), (0.5, -0.5, 0.0));
        let id = diff_eq_coeffs(&BiquadCoeffs {
            a2: 1.0,
            a1: 0.0,
            a0: 0.0,
            b2: 1.0,
            b1: 0.0,
            b0: 0.0,
        })
        .unwrap();
        assert_eq!(id, DiffEqCoeffs::PASS_THROUGH);
        let tustin = qr_discretize(&QrParams::board(), Method::Tustin, T).unwrap();
        assert_eq!(diff_eq_coeffs(&tustin).unwrap().kin1, 0.0);
        let zero = BiquadCoeffs { b2: 0.0, ..tustin };
        assert!(matches!(
            diff_eq_coeffs(&zero),
            Err(Error::Normalization(_))
        ));
    }

    #[test]
    fn diff_eq_reconstruction_preserves_response() {
        let p = QrParams::board();
        let b = qr_discretize(&p, Method::Tustin, T).unwrap();
        let back = diff_eq_coeffs(&b).unwrap().to_biquad();
        let (h1, h2) = (b.to_transfer(T).unwrap(), back.to_transfer(T).unwrap());
        for f in [10.0, 500.0, 943.0, 950.0, 5000.0] {
            let z = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * f * T);
            let (a, b) = (h1.eval(z).unwrap(), h2.eval(z).unwrap());
            assert!((a - b).norm() <= 1e-12 * a.norm());
        }
    }

    fn methods_for(p: &QrParams, rng: &mut ChaCha8Rng) -> Vec<Method> {
        vec![
            Method::Euler,
            Method::Tustin,
            sota(p),
            Method::Sbt(SbtParams::new(rng.gen_range(0.5..=1.0), rng.gen_range(0.9..1.1)).unwrap()),
            Method::Sbt(SbtParams::new(rng.gen_range(0.0..0.5), rng.gen_range(0.9..1.1)).unwrap()),
        ]
    }

    fn random_qr(rng: &mut ChaCha8Rng) -> (QrParams, f64) {
        let fs = rng.gen_range(5e3..1e5);
        let wn = rng.gen_range(0.01..0.45) * std::f64::consts::PI * fs;
        let wc = rng.gen_range(0.001..0.2) * wn;
        (
            QrParams::new(rng.gen_range(0.1..100.0), wc, wn).unwrap(),
            1.0 / fs,
        )
    }

    #[test]
    fn numerator_sums_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let (p, t) = random_qr(&mut rng);
            for m in methods_for(&p, &mut rng) {
                let b = qr_discretize(&p, m, t).unwrap();
                assert!(
                    (b.a2 + b.a1 + b.a0).abs() <= 1e-12 * b.a2.abs(),
                    "{m}: {b:?}"
                );
            }
        }
    }

    #[test]
    fn stable_sbt_poles_inside_unit_circle() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..500 {
            let (p, t) = random_qr(&mut rng);
            let sp = SbtParams::new(rng.gen_range(0.5..=1.0), rng.gen_range(0.05..5.0)).unwrap();
            let b = qr_discretize(&p, Method::Sbt(sp), t).unwrap();
            for r in quadratic_roots(&b.den_polynomial().unwrap()).unwrap() {
                assert!(r.norm() <= 1.0 + 1e-12, "{sp} {p:?}: |{r}|");
            }
        }
    }

    #[test]
    fn closed_form_matches_substitution() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let (p, t) = random_qr(&mut rng);
            let sp = SbtParams::new(rng.gen_range(0.5..=1.0), rng.gen_range(0.9..1.1)).unwrap();
            let closed = qr_discretize(&p, Method::Sbt(sp), t).unwrap();
            let generic = BiquadCoeffs::from_transfer(
                &substitute(&qr_continuous(&p).unwrap(), sp, t).unwrap(),
            )
            .unwrap();
            let scale = closed.as_array().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (a, b) in closed.as_array().iter().zip(generic.as_array()) {
                assert!(
                    (a - b).abs() <= 1e-12 * a.abs().max(1e-12 * scale),
                    "{a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn euler_and_tustin_are_sbt_special_cases() {
        let p = QrParams::board();
        let e = qr_discretize(&p, Method::Euler, T).unwrap();
        let es = qr_discretize(&p, Method::Sbt(SbtParams::EULER), T).unwrap();
        for (a, b) in e.as_array().iter().zip(es.as_array()) {
            assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0));
        }
        let tu = qr_discretize(&p, Method::Tustin, T).unwrap();
        let ts = qr_discretize(&p, Method::Sbt(SbtParams::TUSTIN), T).unwrap();
        assert_eq!(tu, ts);
    }

    #[test]
    fn sota_and_sbt_differ_only_in_damping() {
        let p = QrParams::board();
        let k = prewarp_factor(p.omega_n, T).unwrap();
        let sota_c = qr_discretize(&p, sota(&p), T).unwrap();
        let sbt_c = qr_discretize(&p, Method::Sbt(SbtParams::new(0.5, k).unwrap()), T).unwrap();
        assert_ne!(sota_c, sbt_c);
        // b1 carries no wc term at alpha = 0.5; the damping shows up in b2 and b0
        assert!((sota_c.b1 - sbt_c.b1).abs() < 1e-14);
        let ct = p.omega_c * T;
        assert!(((sbt_c.b2 - sota_c.b2) - (k - 1.0) * ct).abs() < 1e-14);
        assert!(((sbt_c.b0 - sota_c.b0) + (k - 1.0) * ct).abs() < 1e-14);
        // both pole angles land on the exact-discretization angle w0 T
        let w0 = (p.omega_n.powi(2) - p.omega_c.powi(2)).sqrt();
        for b in [sota_c, sbt_c] {
            let [r, _] = quadratic_roots(&b.den_polynomial().unwrap()).unwrap();
            let s = crate::transforms::equivalent_s_of_z(r, T).unwrap();
            assert!((s.im / w0 - 1.0).abs() < 1e-6, "{}", s.im);
        }
    }

    #[test]
    fn pi_section_matches_tustin_substitution() {
        let pi = PiParams::inverter();
        let t = 2.5e-5;
        let sec = pi_discretize(&pi, t).unwrap().to_transfer(t).unwrap();
        let sub = substitute(&pi_continuous(&pi).unwrap(), SbtParams::TUSTIN, t).unwrap();
        for f in [10.0, 50.0, 950.0, 5000.0] {
            let z = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * f * t);
            let (a, b) = (sec.eval(z).unwrap(), sub.eval(z).unwrap());
            assert!((a - b).norm() <= 1e-12 * a.norm());
        }
    }

    #[test]
    fn mapped_poles_match_section_roots() {
        let p = QrParams::board();
        let s0 = c(-p.omega_c, (p.omega_n.powi(2) - p.omega_c.powi(2)).sqrt());
        for sp in [
            SbtParams::EULER,
            SbtParams::TUSTIN,
            SbtParams::new(0.8, 1.05).unwrap(),
        ] {
            let b = qr_discretize(&p, Method::Sbt(sp), T).unwrap();
            let [r, _] = quadratic_roots(&b.den_polynomial().unwrap()).unwrap();
            let z = sbt_z_of_s(s0, sp, T).unwrap();
            assert!((r - z).norm() < 1e-9, "{sp}: {r} vs {z}");
        }
    }
}
