//! Search for the `(alpha, beta)` pair minimizing a discretization loss for
//! a QR controller.
//!
//! The search is a deterministic coarse scan followed by alternating
//! golden-section refinement of each axis. Identical inputs give identical
//! results and traces.

use serde::{Deserialize, Serialize};

use crate::analysis::source_poles;
use crate::analysis::{magnitude_errors, rmse, weighted_rmse, ErrorScale, FrequencyGrid};
use crate::controllers::{qr_continuous, qr_discretize, sbt_params_straightforward, QrParams};
use crate::error::{Error, Result};
use crate::transforms::{equivalent_s_of_z, sbt_z_of_s, Method, SbtParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    /// RMSE of the dB magnitude error over the grid.
    #[default]
    MagRmseDb,
    /// RMSE of the linear magnitude error over the grid.
    MagRmseLinear,
    /// `|equivalent pole - original pole| / wn`, where the equivalent pole is
    /// `ln(z)/T` of the mapped resonant pole.
    PoleDistance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub grid: FrequencyGrid,
    pub kind: LossKind,
    /// One weight per grid point. Ignored by [`LossKind::PoleDistance`].
    pub weights: Option<Vec<f64>>,
}

impl LossConfig {
    pub fn new(grid: FrequencyGrid, kind: LossKind) -> Self {
        Self {
            grid,
            kind,
            weights: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossValue {
    /// `+inf` when the discrete response hits a pole on the grid.
    pub value: f64,
    /// The discretized resonant poles lie on or outside the unit circle.
    /// The optimizer never selects such a candidate.
    pub unstable: bool,
}

/// Loss of the QR controller discretized with `params`.
pub fn q_loss(
    p: &QrParams,
    sample_time: f64,
    params: SbtParams,
    cfg: &LossConfig,
) -> Result<LossValue> {
    let poles = source_poles(p, sample_time)?;
    let mapped = sbt_z_of_s(poles.original, params, sample_time)?;
    let value = match cfg.kind {
        LossKind::PoleDistance => {
            (equivalent_s_of_z(mapped, sample_time)? - poles.original).norm() / p.omega_n
        }
        LossKind::MagRmseDb | LossKind::MagRmseLinear => {
            let scale = if cfg.kind == LossKind::MagRmseDb {
                ErrorScale::Db
            } else {
                ErrorScale::Linear
            };
            let analog = qr_continuous(p)?;
            let discrete =
                qr_discretize(p, Method::Sbt(params), sample_time)?.to_transfer(sample_time)?;
            let errs: Vec<f64> = magnitude_errors(&analog, &discrete, &cfg.grid, scale)?
                .into_iter()
                .map(|e| e.err)
                .collect();
            match &cfg.weights {
                Some(w) => weighted_rmse(&errs, w)?,
                None => rmse(&errs)?,
            }
        }
    };
    Ok(LossValue {
        value: if value.is_nan() { f64::INFINITY } else { value },
        unstable: mapped.norm() >= 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub alpha_range: (f64, f64),
    pub beta_range: (f64, f64),
    /// Points per axis in the coarse scan.
    pub coarse_grid: usize,
    /// Golden-section iterations per axis and sweep.
    pub refine_iters: usize,
    /// Alternating alpha/beta refinement passes.
    pub sweeps: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            alpha_range: (0.5, 1.0),
            beta_range: (0.9, 1.1),
            coarse_grid: 41,
            refine_iters: 40,
            sweeps: 2,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let (a0, a1) = self.alpha_range;
        let (b0, b1) = self.beta_range;
        if !(0.5..=1.0).contains(&a0) || !(0.5..=1.0).contains(&a1) || a0 > a1 {
            return Err(Error::Param(format!(
                "alpha range [{a0}, {a1}] must lie in [0.5, 1]"
            )));
        }
        if !(b0 > 0.0 && b1.is_finite() && b0 <= b1) {
            return Err(Error::Param(format!(
                "beta range [{b0}, {b1}] must be positive"
            )));
        }
        if self.coarse_grid < 3 {
            return Err(Error::Param(
                "coarse grid needs at least three points per axis".into(),
            ));
        }
        Ok(())
    }

    fn contains(&self, params: SbtParams) -> bool {
        let (a0, a1) = self.alpha_range;
        let (b0, b1) = self.beta_range;
        (a0..=a1).contains(&params.alpha()) && (b0..=b1).contains(&params.beta())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iter: usize,
    pub alpha: f64,
    pub beta: f64,
    pub loss: f64,
    pub best_so_far: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub params: SbtParams,
    pub loss: f64,
    pub evaluations: usize,
    /// Candidates rejected because their poles left the unit circle.
    pub unstable_candidates: usize,
    pub trace: Vec<TraceEntry>,
}

struct Search<'a> {
    p: &'a QrParams,
    sample_time: f64,
    loss: &'a LossConfig,
    best: Option<(SbtParams, f64)>,
    trace: Vec<TraceEntry>,
    unstable: usize,
}

impl Search<'_> {
    fn eval(&mut self, alpha: f64, beta: f64) -> Result<f64> {
        let params = SbtParams::new(alpha, beta)?;
        let lv = q_loss(self.p, self.sample_time, params, self.loss)?;
        if lv.unstable {
            self.unstable += 1;
        }
        // Strict improvement only, so the earliest candidate wins ties.
        if !lv.unstable && lv.value.is_finite() && self.best.map_or(true, |(_, b)| lv.value < b) {
            self.best = Some((params, lv.value));
        }
        self.trace.push(TraceEntry {
            iter: self.trace.len(),
            alpha,
            beta,
            loss: lv.value,
            best_so_far: self.best.map_or(f64::INFINITY, |(_, b)| b),
        });
        Ok(lv.value)
    }

    /// Golden-section minimization over one axis; the other coordinate is fixed.
    fn golden(
        &mut self,
        lo: f64,
        hi: f64,
        iters: usize,
        at: impl Fn(f64) -> (f64, f64),
    ) -> Result<()> {
        if !(hi > lo) {
            return Ok(());
        }
        let r = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (lo, hi);
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        let (ac, bc) = at(c);
        let mut fc = self.eval(ac, bc)?;
        let (ad, bd) = at(d);
        let mut fd = self.eval(ad, bd)?;
        for _ in 0..iters {
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - r * (b - a);
                let (x, y) = at(c);
                fc = self.eval(x, y)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + r * (b - a);
                let (x, y) = at(d);
                fd = self.eval(x, y)?;
            }
        }
        Ok(())
    }
}

fn axis(range: (f64, f64), n: usize) -> Vec<f64> {
    let (lo, hi) = range;
    if n == 1 || lo == hi {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|k| if k == n - 1 { hi } else { lo + step * k as f64 })
        .collect()
}

fn cell(range: (f64, f64), n: usize) -> f64 {
    if n > 1 {
        (range.1 - range.0) / (n - 1) as f64
    } else {
        0.0
    }
}

/// Minimizes the loss over the search box.
///
/// The straightforward pair `(0.5, K_pw)` is evaluated first whenever it lies
/// inside the box, so the result is never worse than it. The coarse scan runs
/// over alpha then beta, and each refinement searches one coarse cell around
/// the current best.
pub fn optimize_alpha_beta(
    p: &QrParams,
    sample_time: f64,
    loss: &LossConfig,
    search: &SearchConfig,
) -> Result<OptimizeResult> {
    p.validate()?;
    search.validate()?;
    let mut s = Search {
        p,
        sample_time,
        loss,
        best: None,
        trace: Vec::new(),
        unstable: 0,
    };

    let seed = sbt_params_straightforward(p, sample_time)?;
    if search.contains(seed) {
        s.eval(seed.alpha(), seed.beta())?;
    }
    let alphas = axis(search.alpha_range, search.coarse_grid);
    let betas = axis(search.beta_range, search.coarse_grid);
    for &a in &alphas {
        for &b in &betas {
            s.eval(a, b)?;
        }
    }
    if s.best.is_none() {
        return Err(Error::OutOfDomain(
            "every candidate in the search box hits a pole on the grid".into(),
        ));
    }

    let da = cell(search.alpha_range, search.coarse_grid);
    let db = cell(search.beta_range, search.coarse_grid);
    for _ in 0..search.sweeps {
        let (bp, _) = s.best.expect("best exists after the scan");
        let (a0, a1) = search.alpha_range;
        let beta = bp.beta();
        s.golden(
            (bp.alpha() - da).max(a0),
            (bp.alpha() + da).min(a1),
            search.refine_iters,
            |a| (a, beta),
        )?;
        let (bp, _) = s.best.expect("best exists after the scan");
        let (b0, b1) = search.beta_range;
        let alpha = bp.alpha();
        s.golden(
            (bp.beta() - db).max(b0),
            (bp.beta() + db).min(b1),
            search.refine_iters,
            |b| (alpha, b),
        )?;
    }

    let (params, loss_value) = s.best.expect("best exists after the scan");
    Ok(OptimizeResult {
        params,
        loss: loss_value,
        evaluations: s.trace.len(),
        unstable_candidates: s.unstable,
        trace: s.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::default_grid;
    use crate::transforms::prewarp_factor;
    use std::f64::consts::PI;

    const T: f64 = 5e-5;

    fn small_search() -> SearchConfig {
        SearchConfig {
            coarse_grid: 11,
            refine_iters: 20,
            ..SearchConfig::default()
        }
    }

    #[test]
    fn deterministic() {
        let p = QrParams::board();
        let cfg = LossConfig::new(
            FrequencyGrid::linear(900.0, 1000.0, 51).unwrap(),
            LossKind::MagRmseDb,
        );
        let a = optimize_alpha_beta(&p, T, &cfg, &small_search()).unwrap();
        let b = optimize_alpha_beta(&p, T, &cfg, &small_search()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trace_is_monotone_and_feasible() {
        let p = QrParams::board();
        let cfg = LossConfig::new(
            FrequencyGrid::linear(900.0, 1000.0, 51).unwrap(),
            LossKind::MagRmseDb,
        );
        let search = small_search();
        let r = optimize_alpha_beta(&p, T, &cfg, &search).unwrap();
        assert!(r
            .trace
            .windows(2)
            .all(|w| w[1].best_so_far <= w[0].best_so_far));
        assert_eq!(r.trace.last().unwrap().best_so_far, r.loss);
        assert_eq!(r.evaluations, r.trace.len());
        assert!(search.contains(r.params));
        assert!(r.params.is_stable_range());
    }

    #[test]
    fn never_worse_than_straightforward_pair() {
        let p = QrParams::board();
        let cfg = LossConfig::new(default_grid(), LossKind::MagRmseDb);
        let seed = sbt_params_straightforward(&p, T).unwrap();
        let base = q_loss(&p, T, seed, &cfg).unwrap().value;
        let r = optimize_alpha_beta(&p, T, &cfg, &small_search()).unwrap();
        assert!(r.loss <= base, "{} > {base}", r.loss);
    }

    #[test]
    fn collapsed_box_returns_its_point() {
        let p = QrParams::board();
        let cfg = LossConfig::new(
            FrequencyGrid::linear(900.0, 1000.0, 11).unwrap(),
            LossKind::MagRmseDb,
        );
        let search = SearchConfig {
            alpha_range: (0.7, 0.7),
            beta_range: (1.0, 1.0),
            ..small_search()
        };
        let r = optimize_alpha_beta(&p, T, &cfg, &search).unwrap();
        assert_eq!((r.params.alpha(), r.params.beta()), (0.7, 1.0));
        let direct = q_loss(&p, T, SbtParams::new(0.7, 1.0).unwrap(), &cfg)
            .unwrap()
            .value;
        assert_eq!(r.loss, direct);
    }

    #[test]
    fn single_resonance_point_recovers_the_peak() {
        let p = QrParams::board();
        let grid = FrequencyGrid::explicit(vec![p.omega_n / (2.0 * PI)]).unwrap();
        let cfg = LossConfig::new(grid, LossKind::MagRmseDb);
        let r = optimize_alpha_beta(&p, T, &cfg, &SearchConfig::default()).unwrap();
        assert!(r.loss < 1e-6, "{}", r.loss);
        let poles = source_poles(&p, T).unwrap();
        let z = sbt_z_of_s(poles.original, r.params, T).unwrap();
        let w = equivalent_s_of_z(z, T).unwrap().im;
        assert!((w / p.omega_n - 1.0).abs() <= 1e-3, "{w}");
    }

    #[test]
    fn pole_distance_values() {
        let p = QrParams::board();
        let cfg = LossConfig::new(default_grid(), LossKind::PoleDistance);
        let seed = sbt_params_straightforward(&p, T).unwrap();
        let base = q_loss(&p, T, seed, &cfg).unwrap().value;
        assert!((base - 4.4e-5).abs() < 1e-6, "{base}");
        let r = optimize_alpha_beta(&p, T, &cfg, &SearchConfig::default()).unwrap();
        assert!(r.loss <= base);
        let k = prewarp_factor(p.omega_n, T).unwrap();
        assert!(
            (r.params.alpha() - 0.5).abs() < 1e-3,
            "{}",
            r.params.alpha()
        );
        assert!(
            (r.params.beta() / k - 1.0).abs() < 2e-3,
            "{}",
            r.params.beta()
        );
    }

    #[test]
    fn loss_ordering_on_default_grid() {
        let p = QrParams::board();
        let cfg = LossConfig::new(default_grid(), LossKind::MagRmseDb);
        let q = |a: f64, b: f64| {
            q_loss(&p, T, SbtParams::new(a, b).unwrap(), &cfg)
                .unwrap()
                .value
        };
        let k = prewarp_factor(p.omega_n, T).unwrap();
        assert!(q(0.5, k) <= q(0.5, 1.0));
        assert!(
            q(1.0, 1.0) > 3.0 * q(0.5, 1.0),
            "{} {}",
            q(1.0, 1.0),
            q(0.5, 1.0)
        );
    }

    #[test]
    fn weighted_loss_with_unit_weights_is_plain() {
        let p = QrParams::board();
        let grid = FrequencyGrid::linear(900.0, 1000.0, 21).unwrap();
        let plain = LossConfig::new(grid.clone(), LossKind::MagRmseLinear);
        let weighted = LossConfig {
            weights: Some(vec![2.0; 21]),
            ..plain.clone()
        };
        let sp = SbtParams::new(0.6, 1.0).unwrap();
        let a = q_loss(&p, T, sp, &plain).unwrap().value;
        let b = q_loss(&p, T, sp, &weighted).unwrap().value;
        assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn unstable_candidates_are_flagged() {
        let p = QrParams::board();
        let cfg = LossConfig::new(
            FrequencyGrid::linear(900.0, 1000.0, 11).unwrap(),
            LossKind::MagRmseDb,
        );
        let lv = q_loss(&p, T, SbtParams::new(0.0, 1.0).unwrap(), &cfg).unwrap();
        assert!(lv.unstable && lv.value.is_finite());
        let lv = q_loss(&p, T, SbtParams::TUSTIN, &cfg).unwrap();
        assert!(!lv.unstable);
    }

    #[test]
    fn invalid_boxes() {
        let bad = [
            SearchConfig {
                alpha_range: (0.8, 0.6),
                ..SearchConfig::default()
            },
            SearchConfig {
                alpha_range: (0.5, 1.2),
                ..SearchConfig::default()
            },
            SearchConfig {
                beta_range: (0.0, 1.0),
                ..SearchConfig::default()
            },
            SearchConfig {
                alpha_range: (0.2, 0.6),
                ..SearchConfig::default()
            },
            SearchConfig {
                coarse_grid: 2,
                ..SearchConfig::default()
            },
        ];
        for s in bad {
            assert!(s.validate().is_err());
        }
    }
}
