//! α sweeps over a touchdown-velocity ensemble, 50 % crossing detection and
//! the log-log threshold regression across parameter combinations.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::SweepError;
use crate::hop1d::{ideal_cost, rollout};
use crate::params::{derive_constants, validate, ControllerKind, TaskParams1D};

/// `n` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| {
                    if i == 0 {
                        lo
                    } else if i == n - 1 {
                        hi
                    } else {
                        (a + (b - a) * i as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

pub const DEFAULT_GRID_POINTS: usize = 36;
pub const DEFAULT_ALPHA_RANGE: (f64, f64) = (0.1, 316.0);
pub const DEFAULT_ENSEMBLE: [f64; 3] = [1.5, 2.0, 2.5];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub alpha_grid: Vec<f64>,
    pub v_td_ensemble: Vec<f64>,
    /// `omega_s` and `v_td` are overwritten per grid point and ensemble member.
    pub base_params: TaskParams1D,
    pub controllers: Vec<ControllerKind>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let (lo, hi) = DEFAULT_ALPHA_RANGE;
        SweepConfig {
            alpha_grid: log_grid(lo, hi, DEFAULT_GRID_POINTS),
            v_td_ensemble: DEFAULT_ENSEMBLE.to_vec(),
            base_params: TaskParams1D::nominal(1.0),
            controllers: vec![ControllerKind::ParamBased, ControllerKind::StiffnessAsState],
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), SweepError> {
        if self.alpha_grid.is_empty() {
            return Err(SweepError::InvalidConfig("alpha grid is empty".into()));
        }
        if self.alpha_grid.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(SweepError::InvalidConfig(
                "alpha grid values must be positive".into(),
            ));
        }
        if self.alpha_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SweepError::InvalidConfig(
                "alpha grid must be strictly increasing".into(),
            ));
        }
        if self.v_td_ensemble.is_empty() {
            return Err(SweepError::InvalidConfig(
                "touchdown-velocity ensemble is empty".into(),
            ));
        }
        if self.controllers.is_empty() {
            return Err(SweepError::InvalidConfig("no controllers selected".into()));
        }
        for &v in &self.v_td_ensemble {
            validate(self.base_params.with_touchdown_velocity(v))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub v_td: f64,
    #[serde(serialize_with = "serialize_label")]
    pub controller: ControllerKind,
    pub d_alpha: Option<f64>,
    pub dt_alpha: Option<f64>,
    pub j_over_jideal: Option<f64>,
}

fn serialize_label<S: serde::Serializer>(kind: &ControllerKind, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(kind.label())
}

/// Rows ordered by α, then ensemble order, then controller order. A failed
/// rollout leaves its metrics empty.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>, SweepError> {
    config.validate()?;
    let jobs: Vec<(f64, f64, ControllerKind)> = config
        .alpha_grid
        .iter()
        .flat_map(|&a| {
            config
                .v_td_ensemble
                .iter()
                .flat_map(move |&v| config.controllers.iter().map(move |&c| (a, v, c)))
        })
        .collect();
    Ok(jobs
        .par_iter()
        .map(|&(alpha, v_td, controller)| {
            let params = config
                .base_params
                .with_touchdown_velocity(v_td)
                .with_alpha(alpha);
            let result = rollout(&params, controller).ok();
            SweepRow {
                alpha,
                v_td,
                controller,
                d_alpha: result.as_ref().map(|r| r.d_alpha),
                dt_alpha: result.as_ref().map(|r| r.dt_alpha),
                j_over_jideal: result.as_ref().map(|r| r.j_realized / ideal_cost(&params)),
            }
        })
        .collect())
}

/// Ensemble statistic of one metric at one α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandPoint {
    pub alpha: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Median and min/max envelope across the ensemble for one controller.
/// α values where every member failed are dropped.
pub fn ensemble_band(
    rows: &[SweepRow],
    controller: ControllerKind,
    metric: impl Fn(&SweepRow) -> Option<f64>,
) -> Vec<BandPoint> {
    let mut alphas: Vec<f64> = rows
        .iter()
        .filter(|r| r.controller == controller)
        .map(|r| r.alpha)
        .collect();
    alphas.dedup();
    alphas
        .into_iter()
        .filter_map(|alpha| {
            let mut vals: Vec<f64> = rows
                .iter()
                .filter(|r| r.controller == controller && r.alpha == alpha)
                .filter_map(&metric)
                .collect();
            if vals.is_empty() {
                return None;
            }
            let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Some(BandPoint {
                alpha,
                median: median(&mut vals),
                min,
                max,
            })
        })
        .collect()
}

/// α at which the deviation series `(α, D)` crosses 0.5, interpolating
/// linearly in `(ln α, D)`. The crossing at the largest α wins.
pub fn alpha_50(series: &[(f64, f64)]) -> Result<f64, SweepError> {
    const LEVEL: f64 = 0.5;
    for i in (0..series.len()).rev() {
        let (a1, d1) = series[i];
        if d1 == LEVEL {
            return Ok(a1);
        }
        if i == 0 {
            break;
        }
        let (a0, d0) = series[i - 1];
        if (d0 - LEVEL) * (d1 - LEVEL) < 0.0 {
            let frac = (LEVEL - d0) / (d1 - d0);
            return Ok((a0.ln() + frac * (a1.ln() - a0.ln())).exp());
        }
    }
    Err(SweepError::NoCrossing)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `exp(mean(ln α_50 − ln α_crit))`: the factor under a slope-one model.
    pub proportionality: f64,
    pub n_points: usize,
}

/// Ordinary least squares of `ln α_50` on `ln α_crit`.
pub fn fit_log_log(points: &[(f64, f64)]) -> Result<RegressionResult, SweepError> {
    let n = points.len();
    if n < 3 {
        return Err(SweepError::UnderdeterminedFit(n));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(SweepError::UnderdeterminedFit(1));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(RegressionResult {
        slope,
        intercept: my - slope * mx,
        r_squared,
        proportionality: (my - mx).exp(),
        n_points: n,
    })
}

/// Parameter combination for the robustness study, `(m, T, k_min, k_max)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Combo {
    pub m: f64,
    pub t_stance: f64,
    pub k_min: f64,
    pub k_max: f64,
}

impl Combo {
    pub fn apply(&self, base: &TaskParams1D) -> TaskParams1D {
        TaskParams1D {
            m: self.m,
            t_stance: self.t_stance,
            k_min: self.k_min,
            k_max: self.k_max,
            ..*base
        }
    }
}

/// Ten combinations within 0.5–2 kg, 0.2–0.4 s, k_min 50–100 N/m and
/// k_max 300–800 N/m. Drawn from a Halton sequence over that box, kept only
/// where the predicted reference stays inside `[k_min, k_max]` for every
/// default touchdown velocity, then picked nearest to ten log-spaced
/// thresholds from 9.6 to 52.
pub fn default_combos() -> Vec<Combo> {
    [
        (1.75, 0.21, 80.0, 670.0),
        (1.45, 0.27, 60.0, 390.0),
        (1.70, 0.36, 55.0, 300.0),
        (1.35, 0.32, 85.0, 330.0),
        (1.20, 0.25, 80.0, 690.0),
        (1.45, 0.35, 90.0, 470.0),
        (1.10, 0.32, 95.0, 520.0),
        (0.85, 0.29, 65.0, 650.0),
        (1.35, 0.37, 65.0, 780.0),
        (1.10, 0.37, 55.0, 780.0),
    ]
    .into_iter()
    .map(|(m, t_stance, k_min, k_max)| Combo {
        m,
        t_stance,
        k_min,
        k_max,
    })
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComboResult {
    pub combo: Combo,
    pub alpha_crit: f64,
    /// `None` when the ensemble-median series never crosses 0.5.
    pub alpha_50: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessReport {
    pub combos: Vec<ComboResult>,
    pub regression: RegressionResult,
}

/// Ensemble-median parameter-based deviation series for one task.
pub fn median_deviation_series(
    base: &TaskParams1D,
    alpha_grid: &[f64],
    ensemble: &[f64],
) -> Result<Vec<(f64, f64)>, SweepError> {
    let config = SweepConfig {
        alpha_grid: alpha_grid.to_vec(),
        v_td_ensemble: ensemble.to_vec(),
        base_params: *base,
        controllers: vec![ControllerKind::ParamBased],
    };
    let rows = run_sweep(&config)?;
    Ok(
        ensemble_band(&rows, ControllerKind::ParamBased, |r| r.d_alpha)
            .into_iter()
            .map(|b| (b.alpha, b.median))
            .collect(),
    )
}

/// Threshold and ensemble-median crossing for each combination.
pub fn evaluate_combos(
    base: &TaskParams1D,
    combos: &[Combo],
    alpha_grid: &[f64],
    ensemble: &[f64],
) -> Result<Vec<ComboResult>, SweepError> {
    combos
        .iter()
        .map(|combo| {
            let params = validate(combo.apply(base))?;
            let series = median_deviation_series(&params, alpha_grid, ensemble)?;
            Ok(ComboResult {
                combo: *combo,
                alpha_crit: derive_constants(&params).alpha_crit,
                alpha_50: alpha_50(&series).ok(),
            })
        })
        .collect()
}

/// Log-log fit over the combinations that produced a crossing.
pub fn fit_combos(results: &[ComboResult]) -> Result<RegressionResult, SweepError> {
    let points: Vec<(f64, f64)> = results
        .iter()
        .filter_map(|r| r.alpha_50.map(|a| (r.alpha_crit, a)))
        .collect();
    fit_log_log(&points)
}

pub fn robustness_study(
    base: &TaskParams1D,
    combos: &[Combo],
    alpha_grid: &[f64],
    ensemble: &[f64],
) -> Result<RobustnessReport, SweepError> {
    let combos = evaluate_combos(base, combos, alpha_grid, ensemble)?;
    Ok(RobustnessReport {
        regression: fit_combos(&combos)?,
        combos,
    })
}
