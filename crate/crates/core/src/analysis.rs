//! Closed-form threshold algebra for the monoped.
//!
//! Two slew demands are carried side by side. The *exact* demand
//! `k_max²·v_td / F_const` is the peak reference rate at regime entry when the
//! entry speed equals `v_td`; the *simplified* demand `k_max²·T / (2m)` drops
//! gravity against `2·v_td/T`. `alpha_crit` is defined from the simplified
//! demand, while the conservative-tuning quadratic uses the exact one.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::RolloutError;
use crate::hop1d::{self, dk_ref_dt, ideal_cost, k_ref};
use crate::params::{derive_constants, ControllerKind, TaskParams1D};

/// Minimum number of consecutive out-of-range grid samples that count as a
/// violation of positive measure.
pub const MIN_VIOLATION_RUN: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Realizable,
    FalselyFeasible,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Realizable => "realizable",
            Verdict::FalselyFeasible => "falsely_feasible",
        }
    }
}

/// Peak reference slew rate with gravity neglected, `k_max²·T/(2m)`.
pub fn simplified_demand(params: &TaskParams1D) -> f64 {
    params.k_max * params.k_max * params.t_stance / (2.0 * params.m)
}

/// Peak reference slew rate at regime entry, `k_max²·v_td/F_const`.
pub fn exact_demand(params: &TaskParams1D) -> f64 {
    params.k_max * params.k_max * params.v_td / derive_constants(params).f_const
}

/// Largest stiffness rate the actuator can produce, `ω_s·(k_max − k_min)`.
pub fn slew_capacity(params: &TaskParams1D) -> f64 {
    params.omega_s * (params.k_max - params.k_min)
}

/// `(k_max − k_min)·(alpha_crit/α − 1)`: how far the required command at
/// regime entry overshoots the admissible range.
pub fn saturation_gap(params: &TaskParams1D) -> f64 {
    let alpha_crit = derive_constants(params).alpha_crit;
    (params.k_max - params.k_min) * (alpha_crit / params.alpha() - 1.0)
}

/// Lowest α at which some upper-bound restriction makes the conservative
/// reference realizable, `4·k_min·v_td·T / F_const`.
pub fn alpha_infeas(params: &TaskParams1D) -> f64 {
    4.0 * params.k_min * params.v_td * params.t_stance / derive_constants(params).f_const
}

/// Coefficient `A = ω_s·F_const/v_td` of the restriction quadratic
/// `k′² − A·k′ + A·k_min = 0`.
pub fn quadratic_coefficient(params: &TaskParams1D) -> f64 {
    params.omega_s * derive_constants(params).f_const / params.v_td
}

/// Larger root of `k′² − A·k′ + A·k_min = 0`, or `None` when the discriminant
/// is negative. A discriminant within rounding of zero is treated as zero.
pub fn larger_root(a: f64, k_min: f64) -> Option<f64> {
    let disc = 1.0 - 4.0 * k_min / a;
    if disc < -1e-12 {
        return None;
    }
    Some(0.5 * a * (1.0 + disc.max(0.0).sqrt()))
}

pub fn quadratic_residual(a: f64, k_min: f64, k: f64) -> f64 {
    k * k - a * k + a * k_min
}

/// Least-conservative upper bound `k_max′` at the task's bandwidth, truncated
/// at `k_max`; `None` below `alpha_infeas`.
pub fn minimum_restriction(params: &TaskParams1D) -> Option<f64> {
    larger_root(quadratic_coefficient(params), params.k_min).map(|k| k.min(params.k_max))
}

/// Whether the restricted range `[k_min′, k_max′]` satisfies
/// `D′(k_max′) ≤ ω_s·(k_max′ − k_min′)` with the exact entry demand.
pub fn restriction_realizable(params: &TaskParams1D, k_min_prime: f64, k_max_prime: f64) -> bool {
    if k_max_prime <= k_min_prime {
        return false;
    }
    let f_const = derive_constants(params).f_const;
    let demand = k_max_prime * k_max_prime * params.v_td / f_const;
    demand <= params.omega_s * (k_max_prime - k_min_prime)
}

/// Every realizable non-degenerate subinterval on an `n × n` grid over
/// `[k_min, k_max]`.
pub fn realizable_subintervals(params: &TaskParams1D, n: usize) -> Vec<(f64, f64)> {
    let span = params.k_max - params.k_min;
    let at = |i: usize| params.k_min + span * i as f64 / (n - 1) as f64;
    let mut found = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let (lo, hi) = (at(i), at(j));
            if restriction_realizable(params, lo, hi) {
                found.push((lo, hi));
            }
        }
    }
    found
}

/// Required command `k_ref + (1/ω_s)·dk_ref/dt` along the parameter-based
/// prediction, unclipped.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequiredCommandProfile {
    pub times: Vec<f64>,
    pub k_ref: Vec<f64>,
    pub k_cmd: Vec<f64>,
    pub min_command: f64,
    pub max_command: f64,
    pub time_below_min: f64,
    pub time_above_max: f64,
    /// Total time in violation runs of at least [`MIN_VIOLATION_RUN`] samples.
    pub out_of_bounds_time: f64,
    /// Longest run of consecutive out-of-range grid samples.
    pub longest_run: usize,
}

impl RequiredCommandProfile {
    pub fn verdict(&self) -> Verdict {
        if self.out_of_bounds_time > 0.0 {
            Verdict::FalselyFeasible
        } else {
            Verdict::Realizable
        }
    }
}

fn run_measure(flags: &[bool], dt: f64) -> (f64, usize) {
    let mut total = 0usize;
    let mut longest = 0usize;
    let mut run = 0usize;
    for &f in flags.iter().chain(std::iter::once(&false)) {
        if f {
            run += 1;
        } else {
            if run >= MIN_VIOLATION_RUN {
                total += run;
            }
            longest = longest.max(run);
            run = 0;
        }
    }
    (total as f64 * dt, longest)
}

pub fn required_command_profile(
    params: &TaskParams1D,
) -> Result<RequiredCommandProfile, RolloutError> {
    let pred = hop1d::predict(params, ControllerKind::ParamBased)?;
    let consts = derive_constants(params);
    let n = pred.grid_len;
    let k_refs: Vec<f64> = pred.z[..n]
        .iter()
        .map(|&z| k_ref(z, &consts, params.k_max))
        .collect();
    let k_cmd: Vec<f64> = (0..n)
        .map(|i| {
            k_refs[i] + dk_ref_dt(pred.z[i], pred.z_dot[i], &consts, params.k_max) / params.omega_s
        })
        .collect();
    let below: Vec<bool> = k_cmd.iter().map(|&k| k < params.k_min).collect();
    let above: Vec<bool> = k_cmd.iter().map(|&k| k > params.k_max).collect();
    let either: Vec<bool> = below.iter().zip(&above).map(|(a, b)| *a || *b).collect();
    let dt = pred.sample_dt;
    let (time_below_min, _) = run_measure(&below, dt);
    let (time_above_max, _) = run_measure(&above, dt);
    let (out_of_bounds_time, longest_run) = run_measure(&either, dt);
    Ok(RequiredCommandProfile {
        times: pred.times[..n].to_vec(),
        min_command: k_cmd.iter().copied().fold(f64::INFINITY, f64::min),
        max_command: k_cmd.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        k_ref: k_refs,
        k_cmd,
        time_below_min,
        time_above_max,
        out_of_bounds_time,
        longest_run,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub alpha: f64,
    pub f_const: f64,
    pub z_crit: f64,
    pub d_simplified: f64,
    pub d_exact: f64,
    /// Slew capacity `R`.
    pub capacity: f64,
    /// `D_simplified / R`, equal to `alpha_crit / α`.
    pub rho: f64,
    pub alpha_crit: f64,
    pub alpha_infeas: f64,
    pub saturation_gap: f64,
    /// `k_max − D_simplified/ω_s`, the leading-order required command at
    /// regime entry.
    pub entry_command: f64,
    pub min_command: f64,
    pub max_command: f64,
    pub time_below_min: f64,
    pub time_above_max: f64,
    pub verdict: Verdict,
}

pub fn threshold_report(params: &TaskParams1D) -> Result<ThresholdReport, RolloutError> {
    let consts = derive_constants(params);
    let d_simplified = simplified_demand(params);
    let capacity = slew_capacity(params);
    let profile = required_command_profile(params)?;
    Ok(ThresholdReport {
        alpha: params.alpha(),
        f_const: consts.f_const,
        z_crit: consts.z_crit,
        d_simplified,
        d_exact: exact_demand(params),
        capacity,
        rho: d_simplified / capacity,
        alpha_crit: consts.alpha_crit,
        alpha_infeas: alpha_infeas(params),
        saturation_gap: saturation_gap(params),
        entry_command: params.k_max - d_simplified / params.omega_s,
        min_command: profile.min_command,
        max_command: profile.max_command,
        time_below_min: profile.time_below_min,
        time_above_max: profile.time_above_max,
        verdict: profile.verdict(),
    })
}

/// Closed α interval; `upper` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReachInterval {
    pub lower: f64,
    pub upper: f64,
}

impl ReachInterval {
    pub fn contains(&self, alpha: f64) -> bool {
        alpha >= self.lower && alpha <= self.upper
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Reach {
    pub stiffness_as_state: ReachInterval,
    pub conservative: ReachInterval,
    pub param_based: ReachInterval,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservativePoint {
    pub alpha: f64,
    /// `A = ω_s·F_const/v_td` [N/m].
    pub a: f64,
    pub k_max_prime: Option<f64>,
    pub conservatism_ratio: Option<f64>,
    /// Realized cost over `F_const²·T` for the unrestricted controller.
    pub j_param: Option<f64>,
    pub j_conservative: Option<f64>,
    pub j_state: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservativeReport {
    pub alpha_crit: f64,
    pub alpha_infeas: f64,
    pub j_ideal: f64,
    pub points: Vec<ConservativePoint>,
    pub reach: Reach,
}

/// Restriction curve without costs.
pub fn conservatism_point(params: &TaskParams1D, alpha: f64) -> ConservativePoint {
    let p = params.with_alpha(alpha);
    let k_max_prime = minimum_restriction(&p);
    ConservativePoint {
        alpha,
        a: quadratic_coefficient(&p),
        k_max_prime,
        conservatism_ratio: k_max_prime.map(|k| (k - p.k_min) / (p.k_max - p.k_min)),
        j_param: None,
        j_conservative: None,
        j_state: None,
    }
}

pub fn conservative_report(params: &TaskParams1D, alpha_grid: &[f64]) -> ConservativeReport {
    let consts = derive_constants(params);
    let j_ideal = ideal_cost(params);
    let cost =
        |p: &TaskParams1D, kind| hop1d::rollout(p, kind).ok().map(|r| r.j_realized / j_ideal);
    let points = alpha_grid
        .par_iter()
        .map(|&alpha| {
            let p = params.with_alpha(alpha);
            let mut point = conservatism_point(params, alpha);
            point.j_param = cost(&p, ControllerKind::ParamBased);
            point.j_state = cost(&p, ControllerKind::StiffnessAsState);
            point.j_conservative = point.k_max_prime.and_then(|k| {
                cost(
                    &p,
                    ControllerKind::ConservativeParamBased { k_max_prime: k },
                )
            });
            point
        })
        .collect();
    let grid_lo = alpha_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let grid_hi = alpha_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let alpha_infeas = alpha_infeas(params);
    ConservativeReport {
        alpha_crit: consts.alpha_crit,
        alpha_infeas,
        j_ideal,
        points,
        reach: Reach {
            stiffness_as_state: ReachInterval {
                lower: grid_lo,
                upper: grid_hi,
            },
            conservative: ReachInterval {
                lower: alpha_infeas,
                upper: f64::INFINITY,
            },
            param_based: ReachInterval {
                lower: consts.alpha_crit,
                upper: f64::INFINITY,
            },
        },
    }
}
