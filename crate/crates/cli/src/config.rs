use std::path::{Path, PathBuf};

use serde::Deserialize;

use sbt::analysis::{FrequencyGrid, GridPreset};
use sbt::controllers::QrParams;
use sbt::sim::InverterConfig;
use sbt::tuning::SearchConfig;

use crate::args::{ControllerArgs, Format, GridArgs, Name, SbtArgs, SpacingArg};
use crate::error::CliError;

/// Environment variable naming a file of grid frequencies (Hz, one per line)
/// that replaces the built-in default grid.
pub const GRID_ENV: &str = "SBT_DEFAULT_GRID";

pub const DEFAULT_FS: f64 = 20_000.0;

/// Optional defaults read from `--config`. Every field mirrors a flag.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kr: Option<f64>,
    pub wc: Option<f64>,
    pub wn: Option<f64>,
    pub fs: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub methods: Option<Vec<Name>>,
    pub grid: Option<String>,
    pub grid_file: Option<PathBuf>,
    pub fmin: Option<f64>,
    pub fmax: Option<f64>,
    pub points: Option<usize>,
    pub spacing: Option<SpacingArg>,
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
    pub search: Option<SearchConfig>,
    pub inverter: Option<InverterConfig>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn qr(&self, args: &ControllerArgs, base: QrParams) -> Result<QrParams, CliError> {
        let p = QrParams {
            kr: args.kr.or(self.kr).unwrap_or(base.kr),
            omega_c: args.wc.or(self.wc).unwrap_or(base.omega_c),
            omega_n: args.wn.or(self.wn).unwrap_or(base.omega_n),
        };
        p.validate().map_err(CliError::from_param)?;
        Ok(p)
    }

    pub fn sample_time(&self, args: &ControllerArgs, default_fs: f64) -> Result<f64, CliError> {
        let fs = args.fs.or(self.fs).unwrap_or(default_fs);
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(CliError::Usage(format!(
                "sampling rate must be positive, got {fs}"
            )));
        }
        Ok(1.0 / fs)
    }

    pub fn sbt(&self, args: &SbtArgs) -> (Option<f64>, Option<f64>) {
        (args.alpha.or(self.alpha), args.beta.or(self.beta))
    }

    pub fn methods(&self, given: &[Name], default: &[Name]) -> Vec<Name> {
        if !given.is_empty() {
            given.to_vec()
        } else if let Some(m) = &self.methods {
            m.clone()
        } else {
            default.to_vec()
        }
    }

    /// Resolves the grid and a label describing where it came from.
    pub fn grid(&self, args: &GridArgs) -> Result<(FrequencyGrid, String), CliError> {
        let file = args.grid_file.clone().or_else(|| self.grid_file.clone());
        if let Some(path) = file {
            return Ok((read_grid(&path)?, format!("file:{}", path.display())));
        }
        let range = match (args.fmin, args.fmax, args.points) {
            (Some(a), Some(b), Some(n)) => Some((a, b, n, args.spacing.or(self.spacing))),
            _ => match (self.fmin, self.fmax, self.points) {
                (Some(a), Some(b), Some(n)) => Some((a, b, n, args.spacing.or(self.spacing))),
                _ => None,
            },
        };
        if let Some((lo, hi, n, spacing)) = range {
            let g = match spacing.unwrap_or(SpacingArg::Log) {
                SpacingArg::Lin => FrequencyGrid::linear(lo, hi, n),
                SpacingArg::Log => FrequencyGrid::logarithmic(lo, hi, n),
            }
            .map_err(CliError::from_param)?;
            return Ok((g, "range".into()));
        }
        if let Some(name) = args.grid.clone().or_else(|| self.grid.clone()) {
            let preset = GridPreset::from_name(&name).ok_or_else(|| {
                CliError::Usage(format!(
                    "unknown grid preset {name:?} (expected default, full-band, resonance or wideband)"
                ))
            })?;
            return Ok((preset.grid(), name));
        }
        if let Some(path) = std::env::var_os(GRID_ENV) {
            let path = PathBuf::from(path);
            return Ok((read_grid(&path)?, format!("file:{}", path.display())));
        }
        Ok((
            GridPreset::Default.grid(),
            GridPreset::Default.name().into(),
        ))
    }

    pub fn search(&self) -> SearchConfig {
        self.search.unwrap_or_default()
    }

    pub fn inverter(&self) -> InverterConfig {
        self.inverter.unwrap_or_default()
    }
}

fn read_grid(path: &Path) -> Result<FrequencyGrid, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read grid file {}: {e}", path.display())))?;
    FrequencyGrid::parse_list(&text)
        .map_err(|e| CliError::Usage(format!("grid file {}: {e}", path.display())))
}
