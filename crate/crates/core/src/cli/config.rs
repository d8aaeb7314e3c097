//! TOML experiment configuration.
//!
//! ```toml
//! experiment = "sweep1d"          # sweep1d | robustness | slip2d | conservative | thresholds
//! output_dir = "out"
//!
//! [parameters.task]               # 1D task; omega_s comes from the α grid
//! m = 1.0
//! t_stance = 0.3
//!
//! [parameters.sweep]
//! alpha_min = 0.1
//! alpha_max = 316.0
//! grid_points = 36
//! v_td_ensemble = [1.5, 2.0, 2.5]
//! ```
//!
//! Every table and key is optional and falls back to the nominal value.
//! Unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::params::{validate, ControllerKind, TaskParams1D};
use crate::slip2d::{
    CommandSource, PathExtension, SlipParams, DEFAULT_ANGLES_DEG, DEFAULT_SPOT_CHECKS,
};
use crate::sweep::{
    default_combos, log_grid, Combo, SweepConfig, DEFAULT_ALPHA_RANGE, DEFAULT_ENSEMBLE,
    DEFAULT_GRID_POINTS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Sweep1d,
    Robustness,
    Slip2d,
    Conservative,
    Thresholds,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::Sweep1d,
        Experiment::Robustness,
        Experiment::Slip2d,
        Experiment::Conservative,
        Experiment::Thresholds,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Experiment::Sweep1d => "sweep1d",
            Experiment::Robustness => "robustness",
            Experiment::Slip2d => "slip2d",
            Experiment::Conservative => "conservative",
            Experiment::Thresholds => "thresholds",
        }
    }

    pub fn csv_name(self) -> String {
        format!("{}.csv", self.tag())
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// 1D task without the bandwidth, which every experiment sets from α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskSection {
    pub m: f64,
    pub g: f64,
    pub l0: f64,
    pub v_td: f64,
    pub t_stance: f64,
    pub k_min: f64,
    pub k_max: f64,
}

impl Default for TaskSection {
    fn default() -> Self {
        let p = TaskParams1D::nominal(1.0);
        TaskSection {
            m: p.m,
            g: p.g,
            l0: p.l0,
            v_td: p.v_td,
            t_stance: p.t_stance,
            k_min: p.k_min,
            k_max: p.k_max,
        }
    }
}

impl TaskSection {
    pub fn params(&self, alpha: f64) -> TaskParams1D {
        TaskParams1D {
            m: self.m,
            g: self.g,
            l0: self.l0,
            v_td: self.v_td,
            t_stance: self.t_stance,
            k_min: self.k_min,
            k_max: self.k_max,
            omega_s: alpha / self.t_stance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub grid_points: usize,
    pub v_td_ensemble: Vec<f64>,
    pub controllers: Vec<String>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            alpha_min: DEFAULT_ALPHA_RANGE.0,
            alpha_max: DEFAULT_ALPHA_RANGE.1,
            grid_points: DEFAULT_GRID_POINTS,
            v_td_ensemble: DEFAULT_ENSEMBLE.to_vec(),
            controllers: vec!["param_based".into(), "stiffness_as_state".into()],
        }
    }
}

impl SweepSection {
    pub fn alpha_grid(&self) -> Vec<f64> {
        log_grid(self.alpha_min, self.alpha_max, self.grid_points)
    }

    pub fn controllers(&self) -> Result<Vec<ControllerKind>, ConfigError> {
        self.controllers
            .iter()
            .map(|s| s.parse().map_err(ConfigError::Validation))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobustnessSection {
    pub combos: Vec<Combo>,
}

impl Default for RobustnessSection {
    fn default() -> Self {
        RobustnessSection {
            combos: default_combos(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlipSection {
    pub m: f64,
    pub g: f64,
    pub l0: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub mu: f64,
    pub v_forward: f64,
    pub h_drop: f64,
    pub t_nominal: f64,
    pub command_source: CommandSource,
    pub extension: PathExtension,
    pub angles_deg: Vec<f64>,
    /// `[angle_deg, alpha]` pairs evaluated after the main series.
    pub spot_checks: Vec<[f64; 2]>,
}

impl Default for SlipSection {
    fn default() -> Self {
        let p = SlipParams::nominal(1.0);
        SlipSection {
            m: p.m,
            g: p.g,
            l0: p.l0,
            k_min: p.k_min,
            k_max: p.k_max,
            mu: p.mu,
            v_forward: p.v_forward,
            h_drop: p.h_drop,
            t_nominal: p.t_nominal,
            command_source: p.command_source,
            extension: p.extension,
            angles_deg: DEFAULT_ANGLES_DEG.to_vec(),
            spot_checks: DEFAULT_SPOT_CHECKS.iter().map(|&(a, b)| [a, b]).collect(),
        }
    }
}

impl SlipSection {
    pub fn params(&self, angle_deg: f64, alpha: f64) -> SlipParams {
        SlipParams {
            m: self.m,
            g: self.g,
            l0: self.l0,
            k_min: self.k_min,
            k_max: self.k_max,
            mu: self.mu,
            v_forward: self.v_forward,
            alpha_td: angle_deg.to_radians(),
            h_drop: self.h_drop,
            omega_s: alpha / self.t_nominal,
            t_nominal: self.t_nominal,
            command_source: self.command_source,
            extension: self.extension,
        }
    }

    pub fn spot_checks(&self) -> Vec<(f64, f64)> {
        self.spot_checks.iter().map(|&[a, b]| (a, b)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdsSection {
    pub alpha: f64,
}

impl Default for ThresholdsSection {
    fn default() -> Self {
        ThresholdsSection { alpha: 12.5 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Parameters {
    pub task: TaskSection,
    pub sweep: SweepSection,
    pub robustness: RobustnessSection,
    pub slip: SlipSection,
    pub thresholds: ThresholdsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub parameters: Parameters,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    /// Nominal configuration for one experiment.
    pub fn nominal(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            output_dir: default_output_dir(),
            parameters: Parameters::default(),
        }
    }

    pub fn sweep_config(&self) -> Result<SweepConfig, ConfigError> {
        let p = &self.parameters;
        Ok(SweepConfig {
            alpha_grid: p.sweep.alpha_grid(),
            v_td_ensemble: p.sweep.v_td_ensemble.clone(),
            base_params: p.task.params(1.0),
            controllers: p.sweep.controllers()?,
        })
    }

    /// Checks every section, whichever experiment is selected.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.parameters;
        validate(p.task.params(1.0))?;
        let s = &p.sweep;
        if s.grid_points < 2 {
            return Err(ConfigError::Validation(
                "sweep.grid_points must be at least 2".into(),
            ));
        }
        if !(s.alpha_min > 0.0 && s.alpha_min < s.alpha_max && s.alpha_max.is_finite()) {
            return Err(ConfigError::Validation(
                "sweep needs 0 < alpha_min < alpha_max < inf".into(),
            ));
        }
        self.sweep_config()?.validate()?;
        for combo in &p.robustness.combos {
            validate(combo.apply(&p.task.params(1.0)))?;
        }
        if p.robustness.combos.len() < 3 {
            return Err(ConfigError::Validation(
                "robustness needs at least 3 combos".into(),
            ));
        }
        let angles = p
            .slip
            .angles_deg
            .iter()
            .chain(p.slip.spot_checks.iter().map(|s| &s[0]));
        for &angle in angles {
            p.slip.params(angle, 1.0).validate()?;
        }
        if p.slip
            .spot_checks
            .iter()
            .any(|s| !(s[1].is_finite() && s[1] > 0.0))
        {
            return Err(ConfigError::Validation(
                "slip spot-check alpha must be positive".into(),
            ));
        }
        let a = p.thresholds.alpha;
        if !(a.is_finite() && a > 0.0) {
            return Err(ConfigError::Validation(
                "thresholds.alpha must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let msg = e.message().to_string();
        if msg.contains("unknown field") || msg.contains("unknown variant") {
            ConfigError::UnknownKey(msg)
        } else {
            ConfigError::Parse(e.to_string())
        }
    })?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}
