//! Time-domain execution of discrete controllers, steady-state sine
//! measurement, a grid-tied inverter current loop and THD measurement.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::controllers::{
    diff_eq_coeffs, pi_discretize, qr_discretize, DiffEqCoeffs, PiParams, QrParams,
};
use crate::error::{Error, Result};
use crate::transforms::Method;

/// Outputs larger than this are treated as divergence.
pub const OVERFLOW_LIMIT: f64 = 1e12;

/// Amplitude change allowed between the last two measurement windows.
pub const SETTLE_TOL: f64 = 1e-3;

/// Previous two inputs and outputs of a second-order recursion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DiffEqState {
    pub vin1: f64,
    pub vin2: f64,
    pub vout1: f64,
    pub vout2: f64,
}

/// Anything advanced one sample at a time.
pub trait SampleFilter {
    fn step(&mut self, x: f64) -> f64;
    /// Back to zero state.
    fn reset(&mut self);
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffEqFilter {
    coeffs: DiffEqCoeffs,
    state: DiffEqState,
}

impl DiffEqFilter {
    pub fn new(coeffs: DiffEqCoeffs) -> Self {
        Self {
            coeffs,
            state: DiffEqState::default(),
        }
    }

    pub fn coeffs(&self) -> &DiffEqCoeffs {
        &self.coeffs
    }

    pub fn state(&self) -> &DiffEqState {
        &self.state
    }
}

impl SampleFilter for DiffEqFilter {
    fn step(&mut self, x: f64) -> f64 {
        let c = &self.coeffs;
        let s = &mut self.state;
        let y =
            c.kin0 * x + c.kin1 * s.vin1 + c.kin2 * s.vin2 + c.kout1 * s.vout1 + c.kout2 * s.vout2;
        s.vin2 = s.vin1;
        s.vin1 = x;
        s.vout2 = s.vout1;
        s.vout1 = y;
        y
    }

    fn reset(&mut self) {
        self.state = DiffEqState::default();
    }
}

/// Sections whose outputs are summed, e.g. PI + QR.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelBank {
    sections: Vec<DiffEqFilter>,
}

impl ParallelBank {
    pub fn new(coeffs: &[DiffEqCoeffs]) -> Self {
        Self {
            sections: coeffs.iter().copied().map(DiffEqFilter::new).collect(),
        }
    }

    pub fn sections(&self) -> &[DiffEqFilter] {
        &self.sections
    }
}

impl SampleFilter for ParallelBank {
    fn step(&mut self, x: f64) -> f64 {
        self.sections.iter_mut().map(|s| s.step(x)).sum()
    }

    fn reset(&mut self) {
        self.sections.iter_mut().for_each(SampleFilter::reset);
    }
}

fn check_output(index: usize, value: f64) -> Result<f64> {
    if value.is_finite() && value.abs() <= OVERFLOW_LIMIT {
        Ok(value)
    } else {
        Err(Error::NumericOverflow { index, value })
    }
}

/// Runs the recursion from zero state.
pub fn run_difference_equation(coeffs: &DiffEqCoeffs, input: &[f64]) -> Result<Vec<f64>> {
    run_filter(&mut DiffEqFilter::new(*coeffs), input)
}

/// Runs any filter over `input` from its current state.
pub fn run_filter<F: SampleFilter>(filter: &mut F, input: &[f64]) -> Result<Vec<f64>> {
    if let Some(i) = input.iter().position(|x| !x.is_finite()) {
        return Err(Error::Param(format!("input sample {i} is not finite")));
    }
    input
        .iter()
        .enumerate()
        .map(|(i, &x)| check_output(i, filter.step(x)))
        .collect()
}

/// `amp sin(2 pi f n / fs)` for `n = 0..len`.
pub fn sine_input(f_hz: f64, fs: f64, amp: f64, len: usize) -> Vec<f64> {
    let w = 2.0 * PI * f_hz / fs;
    (0..len).map(|n| amp * (w * n as f64).sin()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SineTest {
    pub f_hz: f64,
    pub fs: f64,
    pub amp: f64,
    pub settle_cycles: usize,
    pub measure_cycles: usize,
}

impl Default for SineTest {
    fn default() -> Self {
        Self {
            f_hz: 950.0,
            fs: 20_000.0,
            amp: 1.0,
            settle_cycles: 600,
            measure_cycles: 50,
        }
    }
}

impl SineTest {
    pub fn validate(&self) -> Result<()> {
        if !(self.fs > 0.0 && self.f_hz > 0.0 && self.f_hz < self.fs / 2.0) {
            return Err(Error::OutOfDomain(format!(
                "test frequency {} Hz must lie in (0, fs/2) with fs = {} Hz",
                self.f_hz, self.fs
            )));
        }
        if !self.amp.is_finite() {
            return Err(Error::Param("amplitude must be finite".into()));
        }
        if self.measure_cycles == 0 || self.settle_cycles < self.measure_cycles {
            return Err(Error::Param(
                "need at least one measurement cycle and a settle window no shorter than it".into(),
            ));
        }
        Ok(())
    }

    fn samples(&self, cycles: usize) -> usize {
        (cycles as f64 * self.fs / self.f_hz).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineTestResult {
    pub amplitude: f64,
    /// Output phase relative to the input sine, wrapped to `(-180, 180]`.
    pub phase_deg: f64,
    /// Energy not explained by the fitted sine, relative to the window energy.
    pub residual: f64,
}

/// Least-squares fit of `a sin(wn) + b cos(wn)` over `y[start..]`, with `n`
/// counted from the beginning of the run. Over an integer number of cycles
/// this is the single-bin Fourier projection.
fn fit_sine(y: &[f64], start: usize, w: f64) -> SineTestResult {
    let (mut ss, mut cc, mut sc, mut ys, mut yc, mut yy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for (k, &v) in y.iter().enumerate() {
        let (s, c) = (w * (start + k) as f64).sin_cos();
        ss += s * s;
        cc += c * c;
        sc += s * c;
        ys += v * s;
        yc += v * c;
        yy += v * v;
    }
    let det = ss * cc - sc * sc;
    let a = (ys * cc - yc * sc) / det;
    let b = (yc * ss - ys * sc) / det;
    let fitted = a * ys + b * yc;
    let residual = if yy > 0.0 {
        ((yy - fitted) / yy).max(0.0)
    } else {
        0.0
    };
    SineTestResult {
        amplitude: a.hypot(b),
        phase_deg: crate::analysis::wrap_degrees(b.atan2(a).to_degrees()),
        residual,
    }
}

/// Drives the filter from zero state with a sine and measures the output
/// fundamental over the final `measure_cycles`.
///
/// The window just before the final one is measured too; the two amplitudes
/// must agree within [`SETTLE_TOL`] (relative).
pub fn sine_steady_state<F: SampleFilter>(
    filter: &mut F,
    test: &SineTest,
) -> Result<SineTestResult> {
    test.validate()?;
    filter.reset();
    let win = test.samples(test.measure_cycles).max(2);
    let total = test.samples(test.settle_cycles).max(win) + win;
    let y = run_filter(filter, &sine_input(test.f_hz, test.fs, test.amp, total))?;
    let w = 2.0 * PI * test.f_hz / test.fs;
    let last = fit_sine(&y[total - win..], total - win, w);
    let prev = fit_sine(&y[total - 2 * win..total - win], total - 2 * win, w);
    let scale = last.amplitude.max(prev.amplitude);
    if scale > 0.0 {
        let relative_change = (last.amplitude - prev.amplitude).abs() / scale;
        if relative_change > SETTLE_TOL {
            return Err(Error::NotSettled { relative_change });
        }
    }
    Ok(last)
}

/// Total harmonic distortion in percent: the RMS of harmonics
/// `2..=max_harmonic` over the fundamental, each taken by Fourier projection
/// over the whole window.
///
/// The window must hold an integer number (at least 10) of periods of `f0`.
pub fn thd(samples: &[f64], f0: f64, fs: f64, max_harmonic: usize) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(f0 > 0.0 && fs > 0.0) {
        return Err(Error::Param(format!(
            "invalid frequencies f0 = {f0}, fs = {fs}"
        )));
    }
    let n = samples.len();
    let periods = n as f64 * f0 / fs;
    if (periods - periods.round()).abs() > 1e-9 * periods.max(1.0) {
        return Err(Error::Window(format!(
            "{n} samples span {periods} periods of {f0} Hz, not an integer number"
        )));
    }
    if periods.round() < 10.0 {
        return Err(Error::Window(format!(
            "{periods} periods given, at least 10 needed"
        )));
    }
    if max_harmonic < 2 || max_harmonic as f64 * f0 >= fs / 2.0 {
        return Err(Error::Param(format!(
            "harmonic {max_harmonic} of {f0} Hz is not below the Nyquist frequency"
        )));
    }
    let bin = |h: usize| -> f64 {
        let w = 2.0 * PI * h as f64 * f0 / fs;
        let (mut re, mut im) = (0.0, 0.0);
        for (k, &x) in samples.iter().enumerate() {
            let (s, c) = (w * k as f64).sin_cos();
            re += x * c;
            im += x * s;
        }
        2.0 * re.hypot(im) / n as f64
    };
    let fundamental = bin(1);
    if !(fundamental > 0.0) {
        return Err(Error::Param("fundamental component is zero".into()));
    }
    let harmonics: f64 = (2..=max_harmonic).map(|h| bin(h).powi(2)).sum();
    Ok(100.0 * harmonics.sqrt() / fundamental)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub f_hz: f64,
    pub amplitude: f64,
}

/// Grid-tied inverter with an L filter and current control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InverterConfig {
    pub inductance: f64,
    /// Only used when `capacitor_branch` is set.
    pub capacitance: f64,
    /// Subtract the capacitor current `C dv_grid/dt` from the measured current.
    pub capacitor_branch: bool,
    pub fs_ctrl: f64,
    pub f_grid: f64,
    pub v_grid_rms: f64,
    pub harmonic: Harmonic,
    pub i_ref_amplitude: f64,
    pub delay_samples: usize,
    pub duration: f64,
    /// Inductor current at t = 0.
    pub initial_current: f64,
    pub pi: PiParams,
    pub qr: QrParams,
}

impl Default for InverterConfig {
    fn default() -> Self {
        Self {
            inductance: 245e-6,
            capacitance: 22e-6,
            capacitor_branch: false,
            fs_ctrl: 40_000.0,
            f_grid: 50.0,
            v_grid_rms: 220.0,
            harmonic: Harmonic {
                f_hz: 950.0,
                amplitude: 100.0,
            },
            i_ref_amplitude: 50.0,
            delay_samples: 1,
            duration: 1.0,
            initial_current: 0.0,
            pi: PiParams::inverter(),
            qr: QrParams::inverter(),
        }
    }
}

impl InverterConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("inductance", self.inductance),
            ("capacitance", self.capacitance),
            ("fs_ctrl", self.fs_ctrl),
            ("f_grid", self.f_grid),
            ("harmonic frequency", self.harmonic.f_hz),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Param(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.fs_ctrl > 2.0 * self.harmonic.f_hz) {
            return Err(Error::OutOfDomain(format!(
                "control rate {} Hz must exceed twice the harmonic frequency {} Hz",
                self.fs_ctrl, self.harmonic.f_hz
            )));
        }
        if !(self.duration * self.f_grid >= 20.0) {
            return Err(Error::Param(format!(
                "duration {} s is shorter than 20 grid cycles",
                self.duration
            )));
        }
        self.pi.validate()?;
        self.qr.validate()
    }

    pub fn sample_time(&self) -> f64 {
        1.0 / self.fs_ctrl
    }

    pub fn steps(&self) -> usize {
        (self.duration * self.fs_ctrl).round() as usize
    }

    /// Grid voltage and its time derivative at `t`.
    fn grid_voltage(&self, t: f64) -> (f64, f64) {
        let w1 = 2.0 * PI * self.f_grid;
        let wh = 2.0 * PI * self.harmonic.f_hz;
        let v1 = 2f64.sqrt() * self.v_grid_rms;
        let vh = self.harmonic.amplitude;
        (
            v1 * (w1 * t).sin() + vh * (wh * t).sin(),
            v1 * w1 * (w1 * t).cos() + vh * wh * (wh * t).cos(),
        )
    }
}

/// Current controller for the inverter loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InverterController {
    Pi,
    /// PI plus a QR term discretized with the given method.
    PiQr(Method),
}

impl InverterController {
    pub fn label(&self) -> &'static str {
        match self {
            InverterController::Pi => "pi",
            InverterController::PiQr(m) => m.label(),
        }
    }

    /// Discrete sections at the configured control rate.
    pub fn bank(&self, cfg: &InverterConfig) -> Result<ParallelBank> {
        let t = cfg.sample_time();
        let mut sections = vec![diff_eq_coeffs(&pi_discretize(&cfg.pi, t)?)?];
        if let InverterController::PiQr(m) = self {
            sections.push(diff_eq_coeffs(&qr_discretize(&cfg.qr, *m, t)?)?);
        }
        Ok(ParallelBank::new(&sections))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub t: Vec<f64>,
    pub i_grid: Vec<f64>,
    pub v_grid: Vec<f64>,
    pub v_inv: Vec<f64>,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// THD of the grid current over the final `cycles` periods of `f0`.
    pub fn current_thd(&self, f0: f64, fs: f64, cycles: usize, max_harmonic: usize) -> Result<f64> {
        let n = (cycles as f64 * fs / f0).round() as usize;
        if n > self.len() {
            return Err(Error::Window(format!(
                "trace has {} samples, {n} needed for {cycles} periods",
                self.len()
            )));
        }
        thd(&self.i_grid[self.len() - n..], f0, fs, max_harmonic)
    }

    /// CSV with header `t,i_grid,v_grid,v_inv`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,i_grid,v_grid,v_inv")?;
        for k in 0..self.len() {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                self.t[k], self.i_grid[k], self.v_grid[k], self.v_inv[k]
            )?;
        }
        Ok(())
    }
}

/// Closed-loop current control of an L-filter inverter on a stiff grid.
///
/// Per control period: measure the grid current, run the controller on the
/// tracking error, apply the output `delay_samples` periods later plus a
/// feedforward of the grid fundamental, then advance `L di/dt = v_inv - v_grid`
/// by one forward-Euler step. The phase of the fundamental is known exactly.
pub fn inverter_closed_loop(
    cfg: &InverterConfig,
    controller: InverterController,
) -> Result<SimTrace> {
    cfg.validate()?;
    let mut bank = controller.bank(cfg)?;
    let t_s = cfg.sample_time();
    let steps = cfg.steps();
    let w1 = 2.0 * PI * cfg.f_grid;
    let v1 = 2f64.sqrt() * cfg.v_grid_rms;
    let mut pending: VecDeque<f64> = std::iter::repeat(0.0).take(cfg.delay_samples).collect();
    let mut i_l = cfg.initial_current;
    let mut trace = SimTrace {
        t: Vec::with_capacity(steps),
        i_grid: Vec::with_capacity(steps),
        v_grid: Vec::with_capacity(steps),
        v_inv: Vec::with_capacity(steps),
    };
    for k in 0..steps {
        let t = k as f64 * t_s;
        let (v_grid, dv_grid) = cfg.grid_voltage(t);
        let i_grid = if cfg.capacitor_branch {
            i_l - cfg.capacitance * dv_grid
        } else {
            i_l
        };
        let i_ref = cfg.i_ref_amplitude * (w1 * t).sin();
        let u = check_output(k, bank.step(i_ref - i_grid))?;
        pending.push_back(u);
        let applied = pending.pop_front().unwrap_or(0.0);
        let v_inv = applied + v1 * (w1 * t).sin();

        trace.t.push(t);
        trace.i_grid.push(i_grid);
        trace.v_grid.push(v_grid);
        trace.v_inv.push(v_inv);

        i_l = check_output(k, i_l + t_s / cfg.inductance * (v_inv - v_grid))?;
    }
    Ok(trace)
}
