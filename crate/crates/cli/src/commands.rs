use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use sbt::analysis::{
    freq_response, magnitude_errors, pole_map_table, qr_method_rmse, ErrorScale, PoleConvention,
    PoleMapMethod,
};
use sbt::controllers::{
    diff_eq_coeffs, qr_continuous, qr_discretize, sbt_params_straightforward, QrParams,
};
use sbt::sim::{
    inverter_closed_loop, run_difference_equation, sine_input, sine_steady_state, DiffEqFilter,
    InverterController, SineTest,
};
use sbt::transforms::{Method, SbtParams};
use sbt::tuning::{optimize_alpha_beta, q_loss, LossConfig, LossKind};

use crate::args::{Cli, Command, Format, LossArg, Name, PoleSource, SbtArgs, Scenario};
use crate::config::{RunConfig, DEFAULT_FS};
use crate::error::CliError;
use crate::output::{fmt_full, write_atomic, Cell, Records};

const QR_METHODS: [Name; 4] = [Name::Euler, Name::Tustin, Name::Sota, Name::Sbt];
const INVERTER_METHODS: [Name; 5] = [Name::Pi, Name::Euler, Name::Tustin, Name::Sota, Name::Sbt];

/// Result of a command: the rendered main output and where it goes.
pub struct Rendered {
    pub text: String,
    pub output: Option<PathBuf>,
    pub warnings: Vec<String>,
}

struct Ctx {
    cfg: RunConfig,
    format: Option<Format>,
    warnings: Vec<String>,
}

impl Ctx {
    fn format(&self, default: Format) -> Format {
        self.format.or(self.cfg.format).unwrap_or(default)
    }

    /// Builds a discrete method; SBT falls back to `(0.5, K_pw)` per missing value.
    fn method(
        &mut self,
        name: Name,
        p: &QrParams,
        t: f64,
        sbt: &SbtArgs,
    ) -> Result<Method, CliError> {
        Ok(match name {
            Name::Euler => Method::Euler,
            Name::Tustin => Method::Tustin,
            Name::Sota => {
                // Surface an out-of-range pre-warp here rather than later.
                Method::TustinPrewarp { omega_n: p.omega_n }.sbt_params(t)?;
                Method::TustinPrewarp { omega_n: p.omega_n }
            }
            Name::Sbt => {
                let straight = sbt_params_straightforward(p, t)?;
                let (a, b) = self.cfg.sbt(sbt);
                let params =
                    SbtParams::new(a.unwrap_or(straight.alpha()), b.unwrap_or(straight.beta()))
                        .map_err(CliError::from_param)?;
                if let Some(w) = params.stability_warning() {
                    self.warnings.push(w);
                }
                Method::Sbt(params)
            }
            other => {
                return Err(CliError::Usage(format!(
                    "{} is not a discretization method here",
                    other.as_str()
                )))
            }
        })
    }
}

pub fn execute(cli: &Cli) -> Result<Rendered, CliError> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let mut ctx = Ctx {
        cfg,
        format: cli.format,
        warnings: Vec::new(),
    };
    let text = match &cli.command {
        Command::Discretize {
            ctrl,
            sbt,
            methods,
            diffeq,
        } => {
            let p = ctx.cfg.qr(ctrl, QrParams::board())?;
            let t = ctx.cfg.sample_time(ctrl, DEFAULT_FS)?;
            let names = ctx.cfg.methods(methods, &QR_METHODS);
            let mut cols = vec!["method", "a2", "a1", "a0", "b2", "b1", "b0"];
            if *diffeq {
                cols.extend(["kin0", "kin1", "kin2", "kout1", "kout2"]);
            }
            let mut rec = Records::new(&cols);
            for name in names {
                let m = ctx.method(name, &p, t, sbt)?;
                let c = qr_discretize(&p, m, t)?;
                let mut row = vec![Cell::Text(name.as_str().into())];
                row.extend(c.as_array().iter().map(|v| Cell::Num(*v, 9)));
                if *diffeq {
                    let d = diff_eq_coeffs(&c)?;
                    row.extend(
                        [d.kin0, d.kin1, d.kin2, d.kout1, d.kout2]
                            .iter()
                            .map(|v| Cell::Num(*v, 9)),
                    );
                }
                rec.push(row);
            }
            rec.render(ctx.format(Format::Table))
        }
        Command::Bode {
            ctrl,
            sbt,
            grid,
            method,
        } => {
            let p = ctx.cfg.qr(ctrl, QrParams::board())?;
            let t = ctx.cfg.sample_time(ctrl, DEFAULT_FS)?;
            let (grid, _) = ctx.cfg.grid(grid)?;
            let tf = match method {
                Name::Analog => qr_continuous(&p)?,
                other => {
                    let m = ctx.method(*other, &p, t, sbt)?;
                    qr_discretize(&p, m, t)?.to_transfer(t)?
                }
            };
            let mut rec = Records::new(&["f_hz", "mag_db", "phase_deg"]);
            for r in freq_response(&tf, &grid)? {
                rec.push(vec![
                    Cell::Num(r.f_hz, 3),
                    Cell::Num(r.mag_db, 4),
                    Cell::Num(r.phase_deg, 4),
                ]);
            }
            rec.render(ctx.format(Format::Csv))
        }
        Command::Error {
            ctrl,
            sbt,
            grid,
            method,
        } => {
            let p = ctx.cfg.qr(ctrl, QrParams::board())?;
            let t = ctx.cfg.sample_time(ctrl, DEFAULT_FS)?;
            let (grid, _) = ctx.cfg.grid(grid)?;
            let m = ctx.method(*method, &p, t, sbt)?;
            let discrete = qr_discretize(&p, m, t)?.to_transfer(t)?;
            let mut rec = Records::new(&["f_hz", "err_db"]);
            for e in magnitude_errors(&qr_continuous(&p)?, &discrete, &grid, ErrorScale::Db)? {
                rec.push(vec![Cell::Num(e.f_hz, 3), Cell::Num(e.err, 4)]);
            }
            rec.render(ctx.format(Format::Csv))
        }
        Command::Rmse {
            ctrl,
            sbt,
            grid,
            methods,
            linear,
        } => {
            let p = ctx.cfg.qr(ctrl, QrParams::board())?;
            let t = ctx.cfg.sample_time(ctrl, DEFAULT_FS)?;
            let (grid, label) = ctx.cfg.grid(grid)?;
            let scale = if *linear {
                ErrorScale::Linear
            } else {
                ErrorScale::Db
            };
            let mut rec = Records::new(&["method", "rmse", "grid"]);
            let (mut sota, mut sbt_v) = (None, None);
            for name in ctx.cfg.methods(methods, &QR_METHODS) {
                let m = ctx.method(name, &p, t, sbt)?;
                let v = qr_method_rmse(&p, m, t, &grid, scale)?;
                match name {
                    Name::Sota => sota = Some(v),
                    Name::Sbt => sbt_v = Some(v),
                    _ => {}
                }
                rec.push(vec![
                    Cell::Text(name.as_str().into()),
                    Cell::Num(v, 4),
                    Cell::Text(label.clone()),
                ]);
            }
            if let (Some(a), Some(b)) = (sbt_v, sota) {
                rec.push(vec![
                    Cell::Text("sbt/sota".into()),
                    Cell::Num(a / b, 4),
                    Cell::Text(label.clone()),
                ]);
            }
            rec.render(ctx.format(Format::Table))
        }
        Command::PoleMap {
            ctrl,
            sbt,
            methods,
            pole,
        } => {
            let p = ctx.cfg.qr(ctrl, QrParams::board())?;
            let t = ctx.cfg.sample_time(ctrl, DEFAULT_FS)?;
            let mut list = Vec::new();
            for name in ctx.cfg.methods(methods, &QR_METHODS) {
                if name != Name::Exact {
                    list.push(ctx.method(name, &p, t, sbt)?);
                }
            }
            let convention = match pole {
                PoleSource::Natural => PoleConvention::Natural,
                PoleSource::Damped => PoleConvention::Damped,
            };
            let mut rec = Records::new(&["method", "z_re", "z_im", "s_re", "s_im"]);
            for r in pole_map_table(&p, t, &list, convention)? {
                let label = match r.method {
                    PoleMapMethod::Exact => "exact",
                    PoleMapMethod::Method(m) => m.label(),
                };
                rec.push(vec![
                    Cell::Text(label.into()),
                    Cell::Num(r.mapped_z.re, 5),
                    Cell::Num(r.mapped_z.im, 5),
                    Cell::Num(r.equivalent_s.re, 3),
                    Cell::Num(r.equivalent_s.im, 0),
                ]);
            }
            rec.render(ctx.format(Format::Table))
        }
        Command::Simulate { scenario } => simulate(&mut ctx, scenario)?,
        Command::Optimize {
            ctrl,
            grid,
            loss,
            alpha_min,
            alpha_max,
            beta_min,
            beta_max,
            coarse,
            iters,
            sweeps,
            trace,
        } => {
            let p = ctx.cfg.qr(ctrl, QrParams::board())?;
            let t = ctx.cfg.sample_time(ctrl, DEFAULT_FS)?;
            let (grid, _) = ctx.cfg.grid(grid)?;
            let kind = match loss {
                LossArg::MagRmseDb => LossKind::MagRmseDb,
                LossArg::MagRmseLinear => LossKind::MagRmseLinear,
                LossArg::PoleDistance => LossKind::PoleDistance,
            };
            let mut search = ctx.cfg.search();
            search.alpha_range = (
                alpha_min.unwrap_or(search.alpha_range.0),
                alpha_max.unwrap_or(search.alpha_range.1),
            );
            search.beta_range = (
                beta_min.unwrap_or(search.beta_range.0),
                beta_max.unwrap_or(search.beta_range.1),
            );
            search.coarse_grid = coarse.unwrap_or(search.coarse_grid);
            search.refine_iters = iters.unwrap_or(search.refine_iters);
            search.sweeps = sweeps.unwrap_or(search.sweeps);
            search.validate().map_err(CliError::from_param)?;

            let lc = LossConfig::new(grid, kind);
            let result = optimize_alpha_beta(&p, t, &lc, &search)?;
            let straight = sbt_params_straightforward(&p, t)?;
            let straight_loss = q_loss(&p, t, straight, &lc)?.value;
            if let Some(path) = trace {
                let mut tr = Records::new(&["iter", "alpha", "beta", "loss", "best_so_far"]);
                for e in &result.trace {
                    tr.push(vec![
                        Cell::Int(e.iter),
                        Cell::num(e.alpha),
                        Cell::num(e.beta),
                        Cell::num(e.loss),
                        Cell::num(e.best_so_far),
                    ]);
                }
                write_atomic(path, tr.render(Format::Csv).as_bytes())?;
            }
            let mut rec = Records::new(&[
                "alpha",
                "beta",
                "loss",
                "loss_kind",
                "straightforward_alpha",
                "straightforward_beta",
                "straightforward_loss",
                "evaluations",
            ]);
            rec.push(vec![
                Cell::Num(result.params.alpha(), 9),
                Cell::Num(result.params.beta(), 9),
                Cell::Num(result.loss, 9),
                Cell::Text(loss_name(kind).into()),
                Cell::Num(straight.alpha(), 9),
                Cell::Num(straight.beta(), 9),
                Cell::Num(straight_loss, 9),
                Cell::Int(result.evaluations),
            ]);
            rec.render(ctx.format(Format::Table))
        }
    };
    Ok(Rendered {
        text,
        output: cli.output.clone().or_else(|| ctx.cfg.output.clone()),
        warnings: ctx.warnings,
    })
}

fn loss_name(kind: LossKind) -> &'static str {
    match kind {
        LossKind::MagRmseDb => "mag-rmse-db",
        LossKind::MagRmseLinear => "mag-rmse-linear",
        LossKind::PoleDistance => "pole-distance",
    }
}

fn simulate(ctx: &mut Ctx, scenario: &Scenario) -> Result<String, CliError> {
    match scenario {
        Scenario::Board {
            ctrl,
            sbt,
            methods,
            f,
            amp,
            settle,
            measure,
            trace_dir,
        } => {
            let p = ctx.cfg.qr(ctrl, QrParams::board())?;
            let t = ctx.cfg.sample_time(ctrl, DEFAULT_FS)?;
            let defaults = SineTest::default();
            let test = SineTest {
                f_hz: *f,
                fs: 1.0 / t,
                amp: *amp,
                settle_cycles: settle.unwrap_or(defaults.settle_cycles),
                measure_cycles: measure.unwrap_or(defaults.measure_cycles),
            };
            test.validate().map_err(CliError::from_param)?;
            let names = ctx.cfg.methods(methods, &QR_METHODS);
            let z = num_complex_unit(2.0 * PI * f * t);
            let mut rec =
                Records::new(&["method", "amplitude", "predicted", "phase_deg", "residual"]);
            let mut columns = Vec::new();
            for &name in &names {
                let m = ctx.method(name, &p, t, sbt)?;
                let c = diff_eq_coeffs(&qr_discretize(&p, m, t)?)?;
                let predicted = c.to_biquad().to_transfer(t)?.eval(z)?.norm() * amp.abs();
                let r = sine_steady_state(&mut DiffEqFilter::new(c), &test)
                    .map_err(|e| diverged(name, e))?;
                rec.push(vec![
                    Cell::Text(name.as_str().into()),
                    Cell::Num(r.amplitude, 4),
                    Cell::Num(predicted, 4),
                    Cell::Num(r.phase_deg, 3),
                    Cell::Num(r.residual, 3),
                ]);
                if trace_dir.is_some() {
                    let n = ((test.settle_cycles + test.measure_cycles) as f64 * test.fs
                        / test.f_hz)
                        .round() as usize;
                    let y =
                        run_difference_equation(&c, &sine_input(test.f_hz, test.fs, test.amp, n))
                            .map_err(|e| diverged(name, e))?;
                    columns.push((name, y));
                }
            }
            if let Some(dir) = trace_dir {
                std::fs::create_dir_all(dir)?;
                let n = columns.first().map_or(0, |(_, y)| y.len());
                let input = sine_input(test.f_hz, test.fs, test.amp, n);
                let mut csv = String::from("t,vin");
                for (name, _) in &columns {
                    csv.push(',');
                    csv.push_str(name.as_str());
                }
                csv.push('\n');
                for k in 0..n {
                    csv.push_str(&fmt_full(k as f64 * t));
                    csv.push(',');
                    csv.push_str(&fmt_full(input[k]));
                    for (_, y) in &columns {
                        csv.push(',');
                        csv.push_str(&fmt_full(y[k]));
                    }
                    csv.push('\n');
                }
                write_atomic(&dir.join("board.csv"), csv.as_bytes())?;
            }
            Ok(rec.render(ctx.format(Format::Table)))
        }
        Scenario::Inverter {
            ctrl,
            sbt,
            methods,
            duration,
            i_ref,
            harmonic_f,
            harmonic_amp,
            delay,
            capacitor_branch,
            cycles,
            trace_dir,
        } => {
            let mut cfg = ctx.cfg.inverter();
            cfg.qr = ctx.cfg.qr(ctrl, cfg.qr)?;
            if let Some(fs) = ctrl.fs.or(ctx.cfg.fs) {
                cfg.fs_ctrl = fs;
            }
            cfg.duration = duration.unwrap_or(cfg.duration);
            cfg.i_ref_amplitude = i_ref.unwrap_or(cfg.i_ref_amplitude);
            cfg.harmonic.f_hz = harmonic_f.unwrap_or(cfg.harmonic.f_hz);
            cfg.harmonic.amplitude = harmonic_amp.unwrap_or(cfg.harmonic.amplitude);
            cfg.delay_samples = delay.unwrap_or(cfg.delay_samples);
            cfg.capacitor_branch |= *capacitor_branch;
            cfg.validate().map_err(CliError::from_param)?;
            let t = cfg.sample_time();
            let qr = cfg.qr;

            let mut rec = Records::new(&["method", "thd_percent"]);
            for name in ctx.cfg.methods(methods, &INVERTER_METHODS) {
                let controller = match name {
                    Name::Pi => InverterController::Pi,
                    other => InverterController::PiQr(ctx.method(other, &qr, t, sbt)?),
                };
                let trace =
                    inverter_closed_loop(&cfg, controller).map_err(|e| diverged(name, e))?;
                let thd = trace
                    .current_thd(cfg.f_grid, cfg.fs_ctrl, *cycles, 50)
                    .map_err(CliError::from_param)?;
                rec.push(vec![Cell::Text(name.as_str().into()), Cell::Num(thd, 3)]);
                if let Some(dir) = trace_dir {
                    std::fs::create_dir_all(dir)?;
                    let mut buf = Vec::new();
                    trace.write_csv(&mut buf)?;
                    write_atomic(&dir.join(format!("inverter_{}.csv", name.as_str())), &buf)?;
                }
            }
            Ok(rec.render(ctx.format(Format::Table)))
        }
    }
}

fn num_complex_unit(theta: f64) -> sbt::lti::ComplexPoint {
    sbt::lti::ComplexPoint::from_polar(1.0, theta)
}

fn diverged(name: Name, e: sbt::Error) -> CliError {
    match e {
        sbt::Error::NumericOverflow { .. } => CliError::Diverged {
            method: name.as_str().into(),
            source: e,
        },
        other => CliError::from_param(other),
    }
}

/// Writes the rendered output to `path` atomically, or to stdout.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}
