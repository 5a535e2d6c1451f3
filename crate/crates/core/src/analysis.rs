//! Frequency-domain comparison of analog and discrete controllers, and pole
//! mapping diagnostics.
//!
//! Magnitude errors follow the convention `err = |H_analog|_dB - |H_discrete|_dB`,
//! so resonance damping (a discrete peak below the analog one) shows up as a
//! positive error.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::controllers::{qr_continuous, qr_discretize, QrParams};
use crate::error::{Error, Result};
use crate::lti::{quadratic_roots, ComplexPoint, Domain, Polynomial, RationalTransfer};
use crate::transforms::{
    equivalent_s_of_z, exact_z_of_s, prewarp_factor, sbt_z_of_s, substitute, Method, SbtParams,
};

/// Agreement required between the analytic pole map and the section roots.
pub const POLE_PATH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Spacing {
    Linear,
    Logarithmic,
    Explicit,
}

/// Strictly increasing frequencies in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    points: Vec<f64>,
    spacing: Spacing,
}

impl FrequencyGrid {
    pub fn linear(lo: f64, hi: f64, n: usize) -> Result<Self> {
        check_range(lo, hi, n)?;
        let points = if n == 1 {
            vec![lo]
        } else {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|k| if k == n - 1 { hi } else { lo + step * k as f64 })
                .collect()
        };
        Ok(Self {
            points,
            spacing: Spacing::Linear,
        })
    }

    pub fn logarithmic(lo: f64, hi: f64, n: usize) -> Result<Self> {
        check_range(lo, hi, n)?;
        let points = if n == 1 {
            vec![lo]
        } else {
            let (a, b) = (lo.log10(), hi.log10());
            let step = (b - a) / (n - 1) as f64;
            (0..n)
                .map(|k| match k {
                    0 => lo,
                    k if k == n - 1 => hi,
                    k => 10f64.powf(a + step * k as f64),
                })
                .collect()
        };
        Ok(Self {
            points,
            spacing: Spacing::Logarithmic,
        })
    }

    pub fn explicit(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(bad) = points.iter().find(|f| !(f.is_finite() && **f > 0.0)) {
            return Err(Error::Param(format!(
                "grid frequency must be positive, got {bad}"
            )));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Param(
                "grid frequencies must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            points,
            spacing: Spacing::Explicit,
        })
    }

    /// Parses one frequency (Hz) per line; blank lines and `#` comments are skipped.
    pub fn parse_list(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let f: f64 = line.parse().map_err(|_| {
                Error::Param(format!(
                    "line {}: cannot parse frequency {line:?}",
                    lineno + 1
                ))
            })?;
            points.push(f);
        }
        Self::explicit(points)
    }

    /// Union of both grids, sorted, exact duplicates removed.
    pub fn merge(&self, other: &Self) -> Self {
        let mut points: Vec<f64> = self.points.iter().chain(&other.points).copied().collect();
        points.sort_by(f64::total_cmp);
        points.dedup();
        Self {
            points,
            spacing: Spacing::Explicit,
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Every point must lie strictly below the Nyquist frequency.
    pub fn check_nyquist(&self, sample_rate: f64) -> Result<()> {
        let nyquist = sample_rate / 2.0;
        match self.points.iter().find(|&&f| f >= nyquist) {
            Some(f) => Err(Error::OutOfDomain(format!(
                "grid frequency {f} Hz is not below the Nyquist frequency {nyquist} Hz"
            ))),
            None => Ok(()),
        }
    }
}

fn check_range(lo: f64, hi: f64, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if !(lo > 0.0 && hi.is_finite() && (hi > lo || (n == 1 && hi >= lo))) {
        return Err(Error::Param(format!(
            "invalid grid range [{lo}, {hi}] with {n} points"
        )));
    }
    Ok(())
}

/// Named grids used across the crate and the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridPreset {
    /// 2000 log points over 10 Hz..2 kHz merged with 200 linear points over
    /// 900..1000 Hz.
    Default,
    /// 2000 log points over 10 Hz..9.5 kHz merged with 200 linear points over
    /// 900..1000 Hz. Dominated by the high-frequency compression near Nyquist.
    FullBand,
    /// 201 linear points over 900..1000 Hz.
    Resonance,
    /// 1000 log points over 50 Hz..5 kHz.
    Wideband,
}

impl GridPreset {
    pub const ALTERNATIVES: [GridPreset; 3] = [
        GridPreset::FullBand,
        GridPreset::Resonance,
        GridPreset::Wideband,
    ];

    pub fn grid(self) -> FrequencyGrid {
        let build = || -> Result<FrequencyGrid> {
            Ok(match self {
                GridPreset::Default => FrequencyGrid::logarithmic(10.0, 2000.0, 2000)?
                    .merge(&FrequencyGrid::linear(900.0, 1000.0, 200)?),
                GridPreset::FullBand => FrequencyGrid::logarithmic(10.0, 9500.0, 2000)?
                    .merge(&FrequencyGrid::linear(900.0, 1000.0, 200)?),
                GridPreset::Resonance => FrequencyGrid::linear(900.0, 1000.0, 201)?,
                GridPreset::Wideband => FrequencyGrid::logarithmic(50.0, 5000.0, 1000)?,
            })
        };
        build().expect("preset grids are valid")
    }

    pub fn name(self) -> &'static str {
        match self {
            GridPreset::Default => "default",
            GridPreset::FullBand => "full-band",
            GridPreset::Resonance => "resonance",
            GridPreset::Wideband => "wideband",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [
            Self::Default,
            Self::FullBand,
            Self::Resonance,
            Self::Wideband,
        ]
        .into_iter()
        .find(|p| p.name() == name)
    }
}

pub fn default_grid() -> FrequencyGrid {
    GridPreset::Default.grid()
}

/// One point of a frequency response. At a pole `pole_hit` is set, the
/// magnitude is `+inf` and the phase is NaN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponsePoint {
    pub f_hz: f64,
    pub mag_db: f64,
    /// Wrapped to `(-180, 180]`.
    pub phase_deg: f64,
    pub pole_hit: bool,
}

/// Point on the unit circle (discrete) or the imaginary axis (continuous)
/// for a frequency in Hz.
pub fn frequency_point(domain: Domain, f_hz: f64) -> ComplexPoint {
    let w = 2.0 * PI * f_hz;
    match domain {
        Domain::Continuous => Complex64::new(0.0, w),
        Domain::Discrete { sample_time } => Complex64::from_polar(1.0, w * sample_time),
    }
}

fn check_grid_for(tf: &RationalTransfer, grid: &FrequencyGrid) -> Result<()> {
    match tf.sample_time() {
        Some(t) => grid.check_nyquist(1.0 / t),
        None => Ok(()),
    }
}

pub fn wrap_degrees(deg: f64) -> f64 {
    let mut d = deg % 360.0;
    if d <= -180.0 {
        d += 360.0;
    } else if d > 180.0 {
        d -= 360.0;
    }
    d
}

pub fn freq_response(tf: &RationalTransfer, grid: &FrequencyGrid) -> Result<Vec<ResponsePoint>> {
    check_grid_for(tf, grid)?;
    Ok(grid
        .points()
        .iter()
        .map(|&f| match tf.eval(frequency_point(tf.domain(), f)) {
            Ok(h) => ResponsePoint {
                f_hz: f,
                mag_db: 20.0 * h.norm().log10(),
                phase_deg: wrap_degrees(h.arg().to_degrees()),
                pole_hit: false,
            },
            Err(_) => ResponsePoint {
                f_hz: f,
                mag_db: f64::INFINITY,
                phase_deg: f64::NAN,
                pole_hit: true,
            },
        })
        .collect())
}

/// Whether magnitude errors are taken in dB or on the linear magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ErrorScale {
    #[default]
    Db,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorPoint {
    pub f_hz: f64,
    /// NaN when either response hits a pole at this frequency.
    pub err: f64,
}

/// `|analog| - |discrete|` per grid point, in the requested scale.
pub fn magnitude_errors(
    analog: &RationalTransfer,
    discrete: &RationalTransfer,
    grid: &FrequencyGrid,
    scale: ErrorScale,
) -> Result<Vec<ErrorPoint>> {
    if analog.domain() != Domain::Continuous {
        return Err(Error::DomainMismatch(analog.domain(), Domain::Continuous));
    }
    let Domain::Discrete { .. } = discrete.domain() else {
        return Err(Error::Param(
            "second operand must be a discrete transfer function".into(),
        ));
    };
    check_grid_for(discrete, grid)?;
    Ok(grid
        .points()
        .iter()
        .map(|&f| {
            let ha = analog.eval(frequency_point(analog.domain(), f));
            let hd = discrete.eval(frequency_point(discrete.domain(), f));
            let err = match (ha, hd) {
                (Ok(a), Ok(d)) => match scale {
                    ErrorScale::Db => 20.0 * a.norm().log10() - 20.0 * d.norm().log10(),
                    ErrorScale::Linear => a.norm() - d.norm(),
                },
                _ => f64::NAN,
            };
            ErrorPoint { f_hz: f, err }
        })
        .collect())
}

/// Magnitude error in dB: `20 log10|H_analog| - 20 log10|H_discrete|`.
pub fn magnitude_error_curve(
    analog: &RationalTransfer,
    discrete: &RationalTransfer,
    grid: &FrequencyGrid,
) -> Result<Vec<ErrorPoint>> {
    magnitude_errors(analog, discrete, grid, ErrorScale::Db)
}

pub fn rmse(errs: &[f64]) -> Result<f64> {
    if errs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let ss: f64 = errs.iter().map(|e| e * e).sum();
    Ok((ss / errs.len() as f64).sqrt())
}

/// `sqrt(sum w e^2 / sum w)`.
pub fn weighted_rmse(errs: &[f64], weights: &[f64]) -> Result<f64> {
    if errs.is_empty() {
        return Err(Error::EmptyInput);
    }
    if weights.len() != errs.len() {
        return Err(Error::Param(format!(
            "{} weights for {} errors",
            weights.len(),
            errs.len()
        )));
    }
    let wsum: f64 = weights.iter().sum();
    if weights.iter().any(|w| !(*w >= 0.0)) || !(wsum > 0.0) {
        return Err(Error::Param(
            "weights must be non-negative with a positive sum".into(),
        ));
    }
    let ss: f64 = errs.iter().zip(weights).map(|(e, w)| w * e * e).sum();
    Ok((ss / wsum).sqrt())
}

/// RMSE of the magnitude error of the QR controller discretized by `method`.
/// Points where either response hits a pole make the result NaN.
pub fn qr_method_rmse(
    p: &QrParams,
    method: Method,
    sample_time: f64,
    grid: &FrequencyGrid,
    scale: ErrorScale,
) -> Result<f64> {
    let analog = qr_continuous(p)?;
    let discrete = qr_discretize(p, method, sample_time)?.to_transfer(sample_time)?;
    let errs: Vec<f64> = magnitude_errors(&analog, &discrete, grid, scale)?
        .into_iter()
        .map(|e| e.err)
        .collect();
    rmse(&errs)
}

/// Continuous resonant poles used as the input of a pole map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourcePoles {
    /// `(-wc, sqrt(wn^2 - wc^2))`
    pub original: ComplexPoint,
    /// `(-wc, sqrt((K_pw wn)^2 - wc^2))`
    pub prewarped: ComplexPoint,
}

pub fn source_poles(p: &QrParams, sample_time: f64) -> Result<SourcePoles> {
    let k = prewarp_factor(p.omega_n, sample_time)?;
    let damped = |wn: f64| -> Result<ComplexPoint> {
        let radicand = wn * wn - p.omega_c * p.omega_c;
        if !(radicand > 0.0) {
            return Err(Error::OutOfDomain(format!(
                "no oscillatory pole: wn^2 - wc^2 = {radicand}"
            )));
        }
        Ok(Complex64::new(-p.omega_c, radicand.sqrt()))
    };
    Ok(SourcePoles {
        original: damped(p.omega_n)?,
        prewarped: damped(k * p.omega_n)?,
    })
}

/// Which continuous pole is fed to the maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PoleConvention {
    /// The actual controller poles `-wc +- j sqrt(wn^2 - wc^2)`.
    #[default]
    Damped,
    /// `-wc +- j wn`, i.e. the damped-frequency correction is dropped.
    /// The published pole-map case values are computed this way; use it to
    /// regenerate them digit for digit.
    Natural,
}

impl PoleConvention {
    fn poles(self, p: &QrParams, sample_time: f64) -> Result<SourcePoles> {
        match self {
            PoleConvention::Damped => source_poles(p, sample_time),
            PoleConvention::Natural => {
                let k = prewarp_factor(p.omega_n, sample_time)?;
                Ok(SourcePoles {
                    original: Complex64::new(-p.omega_c, p.omega_n),
                    prewarped: Complex64::new(-p.omega_c, k * p.omega_n),
                })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PoleMapMethod {
    Exact,
    Method(Method),
}

impl PoleMapMethod {
    pub fn label(&self) -> &'static str {
        match self {
            PoleMapMethod::Exact => "exact",
            PoleMapMethod::Method(m) => m.label(),
        }
    }
}

impl fmt::Display for PoleMapMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PoleMapMethod::Exact => write!(f, "Exact"),
            PoleMapMethod::Method(m) => write!(f, "{m}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleMapRecord {
    pub method: PoleMapMethod,
    /// Continuous pole fed to the map.
    pub source_s: ComplexPoint,
    /// Upper-half-plane image of `source_s`.
    pub mapped_z: ComplexPoint,
    /// The same pole found as a root of the discretized denominator.
    pub root_z: ComplexPoint,
    /// `ln(mapped_z) / T`.
    pub equivalent_s: ComplexPoint,
}

/// Maps the upper resonant pole through each method, always starting with
/// the exact map `z = e^{sT}` as the reference row.
///
/// Every row is computed twice: by mapping the source pole directly, and by
/// factoring the discretized denominator. The two must agree within
/// [`POLE_PATH_TOL`].
pub fn pole_map_table(
    p: &QrParams,
    sample_time: f64,
    methods: &[Method],
    convention: PoleConvention,
) -> Result<Vec<PoleMapRecord>> {
    p.validate()?;
    let poles = convention.poles(p, sample_time)?;
    let mut rows = Vec::with_capacity(methods.len() + 1);

    let exact = exact_z_of_s(poles.original, sample_time);
    let exact_den = pair_polynomial(exact)?;
    rows.push(record(
        PoleMapMethod::Exact,
        poles.original,
        exact,
        upper_root(&exact_den)?,
        sample_time,
    )?);

    for &m in methods {
        // Pre-warped Tustin maps the pre-warped pole with the plain Tustin map.
        let (source, params) = match m {
            Method::TustinPrewarp { .. } => (poles.prewarped, SbtParams::TUSTIN),
            other => (poles.original, other.sbt_params(sample_time)?),
        };
        let mapped = sbt_z_of_s(source, params, sample_time)?;
        let den = match convention {
            PoleConvention::Damped => qr_discretize(p, m, sample_time)?.den_polynomial()?,
            PoleConvention::Natural => {
                let cont = RationalTransfer::new(
                    Polynomial::constant(1.0),
                    pair_polynomial(source)?,
                    Domain::Continuous,
                )?;
                substitute(&cont, params, sample_time)?.den().clone()
            }
        };
        rows.push(record(
            PoleMapMethod::Method(m),
            source,
            mapped,
            upper_root(&den)?,
            sample_time,
        )?);
    }
    Ok(rows)
}

/// `(x - r)(x - conj r)`.
fn pair_polynomial(r: ComplexPoint) -> Result<Polynomial> {
    Polynomial::new(vec![r.norm_sqr(), -2.0 * r.re, 1.0])
}

fn upper_root(den: &Polynomial) -> Result<ComplexPoint> {
    Ok(quadratic_roots(den)?[0])
}

fn record(
    method: PoleMapMethod,
    source_s: ComplexPoint,
    mapped_z: ComplexPoint,
    root_z: ComplexPoint,
    sample_time: f64,
) -> Result<PoleMapRecord> {
    let gap = (mapped_z - root_z).norm();
    if gap > POLE_PATH_TOL {
        return Err(Error::Inconsistent(format!(
            "{method}: mapped pole {mapped_z} vs section root {root_z} (gap {gap:e})"
        )));
    }
    Ok(PoleMapRecord {
        method,
        source_s,
        mapped_z,
        root_z,
        equivalent_s: equivalent_s_of_z(mapped_z, sample_time)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controllers::sbt_params_straightforward;

    const T: f64 = 5e-5;

    fn methods(p: &QrParams) -> Vec<Method> {
        vec![
            Method::Euler,
            Method::Tustin,
            Method::TustinPrewarp { omega_n: p.omega_n },
            Method::Sbt(sbt_params_straightforward(p, T).unwrap()),
        ]
    }

    fn discrete(p: &QrParams, m: Method) -> RationalTransfer {
        qr_discretize(p, m, T).unwrap().to_transfer(T).unwrap()
    }

    #[test]
    fn grids() {
        let g = FrequencyGrid::linear(1.0, 2.0, 3).unwrap();
        assert_eq!(g.points(), &[1.0, 1.5, 2.0]);
        let g = FrequencyGrid::logarithmic(10.0, 1000.0, 3).unwrap();
        assert!((g.points()[1] - 100.0).abs() < 1e-9);
        assert!(FrequencyGrid::linear(0.0, 1.0, 3).is_err());
        assert!(FrequencyGrid::linear(2.0, 1.0, 3).is_err());
        assert!(FrequencyGrid::explicit(vec![1.0, 1.0]).is_err());
        assert!(FrequencyGrid::explicit(vec![]).is_err());
        let single = FrequencyGrid::linear(950.0, 950.0, 1).unwrap();
        assert_eq!(single.points(), &[950.0]);
        let d = default_grid();
        assert!(d.points().windows(2).all(|w| w[1] > w[0]));
        assert!(d.len() > 2000 && d.len() <= 2200);
        assert!(d.check_nyquist(20_000.0).is_ok());
        assert!(GridPreset::FullBand.grid().check_nyquist(20_000.0).is_ok());
        assert!(GridPreset::FullBand.grid().check_nyquist(10_000.0).is_err());
        for p in [
            GridPreset::Default,
            GridPreset::FullBand,
            GridPreset::Resonance,
            GridPreset::Wideband,
        ] {
            assert_eq!(GridPreset::from_name(p.name()), Some(p));
        }
    }

    #[test]
    fn parse_grid_file() {
        let g = FrequencyGrid::parse_list("# grid\n10\n\n20.5 # comment\n1e3\n").unwrap();
        assert_eq!(g.points(), &[10.0, 20.5, 1000.0]);
        assert!(FrequencyGrid::parse_list("10\nabc\n").is_err());
        assert!(FrequencyGrid::parse_list("20\n10\n").is_err());
    }

    #[test]
    fn phase_wrapping() {
        assert_eq!(wrap_degrees(-180.0), 180.0);
        assert_eq!(wrap_degrees(190.0), -170.0);
        assert_eq!(wrap_degrees(-190.0), 170.0);
        assert_eq!(wrap_degrees(540.0), 180.0);
    }

    #[test]
    fn analog_resonance_magnitude() {
        let p = QrParams::board();
        let g = FrequencyGrid::explicit(vec![0.01, p.omega_n / (2.0 * PI)]).unwrap();
        let r = freq_response(&qr_continuous(&p).unwrap(), &g).unwrap();
        assert!(r[0].mag_db < -40.0);
        assert!((r[1].mag_db - 20.0 * 59.1f64.log10()).abs() < 1e-9);
        assert!((r[1].mag_db - 35.43).abs() < 5e-3);
        assert!(r[1].phase_deg.abs() < 1e-6);
    }

    #[test]
    fn sbt_matches_analog_at_950() {
        let p = QrParams::board();
        let g = FrequencyGrid::explicit(vec![950.0]).unwrap();
        let a = freq_response(&qr_continuous(&p).unwrap(), &g).unwrap()[0];
        let sp = sbt_params_straightforward(&p, T).unwrap();
        let d = freq_response(&discrete(&p, Method::Sbt(sp)), &g).unwrap()[0];
        assert!((a.mag_db - d.mag_db).abs() < 0.1);
    }

    #[test]
    fn discrete_grid_must_respect_nyquist() {
        let p = QrParams::board();
        let g = FrequencyGrid::explicit(vec![100.0, 10_000.0]).unwrap();
        assert!(freq_response(&discrete(&p, Method::Tustin), &g).is_err());
    }

    #[test]
    fn pole_hit_is_flagged() {
        let w = 2.0 * PI * 100.0;
        let res = RationalTransfer::continuous(&[1.0], &[w * w, 0.0, 1.0]).unwrap();
        let g = FrequencyGrid::explicit(vec![50.0, 100.0]).unwrap();
        let r = freq_response(&res, &g).unwrap();
        assert!(!r[0].pole_hit);
        assert!(r[1].pole_hit && r[1].mag_db.is_infinite() && r[1].phase_deg.is_nan());
    }

    #[test]
    fn self_comparison_is_zero() {
        // A discrete system evaluated against the continuous system whose
        // response it reproduces exactly on the unit circle: a pure gain.
        let a = RationalTransfer::continuous(&[3.0], &[1.0]).unwrap();
        let d = RationalTransfer::discrete(&[3.0], &[1.0], T).unwrap();
        for e in magnitude_error_curve(&a, &d, &default_grid()).unwrap() {
            assert!(e.err.abs() < 1e-9);
        }
    }

    #[test]
    fn operands_must_have_the_right_domains() {
        let a = RationalTransfer::continuous(&[3.0], &[1.0]).unwrap();
        let d = RationalTransfer::discrete(&[3.0], &[1.0], T).unwrap();
        let g = default_grid();
        assert!(magnitude_error_curve(&d, &d, &g).is_err());
        assert!(magnitude_error_curve(&a, &a, &g).is_err());
    }

    #[test]
    fn euler_damping_error_is_large_and_positive() {
        let p = QrParams::board();
        let g = FrequencyGrid::linear(940.0, 960.0, 2001).unwrap();
        let errs = magnitude_error_curve(
            &qr_continuous(&p).unwrap(),
            &discrete(&p, Method::Euler),
            &g,
        )
        .unwrap();
        let peak = errs.iter().map(|e| e.err).fold(f64::MIN, f64::max);
        assert!(peak >= 30.0, "{peak}");
        assert!(errs.iter().all(|e| e.err > 0.0));
    }

    #[test]
    fn tustin_error_crosses_zero_near_warped_resonance() {
        let p = QrParams::board();
        let g = FrequencyGrid::linear(900.0, 1000.0, 10_001).unwrap();
        let errs = magnitude_error_curve(
            &qr_continuous(&p).unwrap(),
            &discrete(&p, Method::Tustin),
            &g,
        )
        .unwrap();
        let warped = (2.0 / T) * (p.omega_n * T / 2.0).atan() / (2.0 * PI);
        assert!((warped - 943.0).abs() < 0.1);
        let crossings: Vec<f64> = errs
            .windows(2)
            .filter(|w| w[0].err.signum() != w[1].err.signum())
            .map(|w| w[0].f_hz)
            .collect();
        assert!(
            crossings.iter().any(|f| (f - 946.5).abs() < 4.0),
            "{crossings:?}"
        );
        let lo = errs.iter().map(|e| e.err).fold(f64::MAX, f64::min);
        let hi = errs.iter().map(|e| e.err).fold(f64::MIN, f64::max);
        assert!(lo < -5.0 && hi > 5.0, "{lo} {hi}");
    }

    #[test]
    fn rmse_cases() {
        assert_eq!(rmse(&[-2.0, -2.0, -2.0]).unwrap(), 2.0);
        assert_eq!(rmse(&[0.0; 5]).unwrap(), 0.0);
        assert_eq!(rmse(&[]), Err(Error::EmptyInput));
        assert!((rmse(&[3.0, 4.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
        let e = [1.0, -2.0, 0.5, 4.0];
        let perm = [4.0, 0.5, 1.0, -2.0];
        assert_eq!(rmse(&e).unwrap(), rmse(&perm).unwrap());
        let scaled: Vec<f64> = e.iter().map(|v| v * -3.0).collect();
        assert!((rmse(&scaled).unwrap() - 3.0 * rmse(&e).unwrap()).abs() < 1e-14);
        assert!((weighted_rmse(&e, &[1.0; 4]).unwrap() - rmse(&e).unwrap()).abs() < 1e-15);
        assert!(weighted_rmse(&e, &[1.0; 3]).is_err());
        assert!(weighted_rmse(&e, &[0.0; 4]).is_err());
        assert!(weighted_rmse(&e, &[1.0, -1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn sbt_beats_sota_near_resonance() {
        let p = QrParams::board();
        let m = methods(&p);
        let g = default_grid();
        let sota = qr_method_rmse(&p, m[2], T, &g, ErrorScale::Db).unwrap();
        let sbt = qr_method_rmse(&p, m[3], T, &g, ErrorScale::Db).unwrap();
        let ratio = sbt / sota;
        assert!((0.5..=0.85).contains(&ratio), "{ratio}");
    }

    #[test]
    fn source_pole_values() {
        let p = QrParams::board();
        let sp = source_poles(&p, T).unwrap();
        assert!((sp.original.re + 17.907).abs() < 1e-12);
        assert!((sp.original.im - 5968.97).abs() < 5e-3);
        assert!(
            (sp.prewarped.im - 6013.7).abs() < 0.05,
            "{}",
            sp.prewarped.im
        );
        let tiny = QrParams::new(1.0, 1e-12, 5969.0).unwrap();
        let sp = source_poles(&tiny, T).unwrap();
        assert!((sp.original.im - 5969.0).abs() < 1e-9);
    }

    #[test]
    fn pole_map_case_values() {
        let p = QrParams::board();
        let rows = pole_map_table(&p, T, &methods(&p), PoleConvention::Damped).unwrap();
        assert_eq!(rows.len(), 5);
        let close = |z: ComplexPoint, re: f64, im: f64, tol: f64| {
            (z.re - re).abs() <= tol && (z.im - im).abs() <= tol
        };
        assert!(close(rows[0].mapped_z, 0.95494, 0.29378, 1e-5));
        assert!((rows[0].equivalent_s.re + 17.907).abs() < 1e-9);
        assert!(close(rows[3].mapped_z, 0.95496, 0.29378, 1e-5));
        assert!((rows[3].equivalent_s.re + 17.511).abs() < 1e-3);
        assert!(close(rows[4].mapped_z, 0.95495, 0.29378, 1e-5));
        assert!((rows[4].equivalent_s.re + 17.642).abs() < 1e-3);
        for r in &rows {
            assert!((r.mapped_z - r.root_z).norm() <= POLE_PATH_TOL);
        }
    }

    #[test]
    fn natural_convention_is_dual_path_consistent() {
        let p = QrParams::board();
        let rows = pole_map_table(&p, T, &methods(&p), PoleConvention::Natural).unwrap();
        assert!((rows[1].equivalent_s.re + 869.699).abs() < 1e-3);
        for r in &rows {
            assert!((r.mapped_z - r.root_z).norm() <= POLE_PATH_TOL);
        }
    }

    #[test]
    fn exact_only_table() {
        let rows = pole_map_table(&QrParams::board(), T, &[], PoleConvention::Damped).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].method, PoleMapMethod::Exact);
    }

    #[test]
    fn prewarping_pins_the_pole_angle() {
        let p = QrParams::board();
        let rows = pole_map_table(&p, T, &methods(&p), PoleConvention::Damped).unwrap();
        let w0 = rows[0].equivalent_s.im;
        for r in &rows[3..] {
            assert!((r.equivalent_s.im / w0 - 1.0).abs() < 1e-6);
            assert!((r.equivalent_s.im / p.omega_n - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn tustin_warp_is_downward() {
        let p = QrParams::new(59.1, 17.907, 2.0 * PI * 2000.0).unwrap();
        let rows = pole_map_table(&p, T, &[Method::Tustin], PoleConvention::Damped).unwrap();
        assert!(rows[1].equivalent_s.im < p.omega_n);
    }

    #[test]
    fn exact_round_trip() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let s = Complex64::new(
                rng.gen_range(-1e4..1e4),
                rng.gen_range(-0.99..0.99) * PI / T,
            );
            let back = equivalent_s_of_z(exact_z_of_s(s, T), T).unwrap();
            assert!((back - s).norm() <= 1e-10 * s.norm().max(1.0), "{s} {back}");
        }
    }
}
