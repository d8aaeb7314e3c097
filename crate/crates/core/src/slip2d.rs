//! Planar spring-loaded inverted pendulum stance with a pinned foot.
//!
//! The leg runs from the foot at `(x_foot, 0)` to the point mass at `(x, y)`.
//! Compression is `c = l0 − L` and the leg pushes along the unit vector
//! `u = (x − x_foot, y) / L` with magnitude `k·c`.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ParamError, RolloutError};
use crate::hop1d::{ARM_COMPRESSION, ARM_TIME};
use crate::integrate::{
    self, Crossing, DenseOutput, Event, IntegratorSettings, SampledSolution, Switch,
};
use crate::params::{require_positive, ControllerKind};

/// Where the realized actuator takes its stiffness command from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandSource {
    /// `k_ref2D(c_real)` evaluated on the realized state.
    #[default]
    Feedback,
    /// The predicted schedule `k_ref2D(c_pred(t))`, played open loop.
    Replay,
}

/// How a trajectory is continued past its own liftoff when the two stances
/// have different durations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathExtension {
    /// Free flight under gravity from the liftoff state.
    #[default]
    Ballistic,
    /// Position frozen at liftoff.
    Hold,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlipParams {
    pub m: f64,
    pub g: f64,
    /// Leg natural length [m].
    pub l0: f64,
    pub k_min: f64,
    pub k_max: f64,
    /// Friction coefficient, reported against but never enforced.
    pub mu: f64,
    /// Horizontal touchdown velocity [m/s].
    pub v_forward: f64,
    /// Touchdown leg angle from vertical [rad].
    pub alpha_td: f64,
    /// Drop height setting the vertical touchdown speed [m].
    pub h_drop: f64,
    pub omega_s: f64,
    /// Stance timescale used to define α [s].
    pub t_nominal: f64,
    #[serde(default)]
    pub command_source: CommandSource,
    #[serde(default)]
    pub extension: PathExtension,
}

impl SlipParams {
    pub fn nominal(alpha: f64) -> Self {
        let t_nominal = 0.15;
        SlipParams {
            m: 1.0,
            g: 9.81,
            l0: 0.5,
            k_min: 500.0,
            k_max: 4000.0,
            mu: 0.7,
            v_forward: 1.0,
            alpha_td: 15f64.to_radians(),
            h_drop: 0.05,
            omega_s: alpha / t_nominal,
            t_nominal,
            command_source: CommandSource::default(),
            extension: PathExtension::default(),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.omega_s * self.t_nominal
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.omega_s = alpha / self.t_nominal;
        self
    }

    pub fn with_angle_deg(mut self, degrees: f64) -> Self {
        self.alpha_td = degrees.to_radians();
        self
    }

    /// Constant design force of the reference schedule, `2.5·m·g` [N].
    pub fn design_force(&self) -> f64 {
        2.5 * self.m * self.g
    }

    pub fn validate(self) -> Result<Self, ParamError> {
        for (name, value) in [
            ("m", self.m),
            ("g", self.g),
            ("l0", self.l0),
            ("k_min", self.k_min),
            ("k_max", self.k_max),
            ("mu", self.mu),
            ("h_drop", self.h_drop),
            ("omega_s", self.omega_s),
            ("t_nominal", self.t_nominal),
        ] {
            require_positive(name, value)?;
        }
        if self.k_min >= self.k_max {
            return Err(ParamError::DegenerateRange {
                k_min: self.k_min,
                k_max: self.k_max,
            });
        }
        if !(self.alpha_td > 0.0 && self.alpha_td < FRAC_PI_2) {
            return Err(ParamError::OutOfRange {
                name: "alpha_td",
                value: self.alpha_td,
                expected: "(0, pi/2)",
            });
        }
        if !self.v_forward.is_finite() {
            return Err(ParamError::OutOfRange {
                name: "v_forward",
                value: self.v_forward,
                expected: "finite values",
            });
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlipState {
    pub x: f64,
    pub y: f64,
    pub x_dot: f64,
    pub y_dot: f64,
    pub k: f64,
    pub x_foot: f64,
}

impl SlipState {
    pub fn leg_length(&self) -> f64 {
        (self.x - self.x_foot).hypot(self.y)
    }

    pub fn compression(&self, l0: f64) -> f64 {
        l0 - self.leg_length()
    }
}

/// Mass at `(0, l0 cos α_td)` with the foot `l0 sin α_td` ahead of it.
pub fn touchdown_state(params: &SlipParams) -> SlipState {
    SlipState {
        x: 0.0,
        y: params.l0 * params.alpha_td.cos(),
        x_dot: params.v_forward,
        y_dot: -(2.0 * params.g * params.h_drop).sqrt(),
        k: params.k_max,
        x_foot: params.l0 * params.alpha_td.sin(),
    }
}

/// `min(k_max, F/c)` with `F = 2.5·m·g`; `k_max` for any `c` at or below
/// `F / k_max`, including non-positive compression.
pub fn k_ref2d(c: f64, params: &SlipParams) -> f64 {
    let f = params.design_force();
    if c * params.k_max <= f {
        params.k_max
    } else {
        f / c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlipTrajectory {
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub x_dot: Vec<f64>,
    pub y_dot: Vec<f64>,
    pub k: Vec<f64>,
    pub compression: Vec<f64>,
    pub t_liftoff: f64,
    pub grid_len: usize,
    pub sample_dt: f64,
    pub x_foot: f64,
}

impl SlipTrajectory {
    pub fn peak_compression(&self) -> f64 {
        self.compression.iter().copied().fold(0.0, f64::max)
    }

    fn liftoff(&self) -> [f64; 4] {
        let n = self.times.len() - 1;
        [self.x[n], self.y[n], self.x_dot[n], self.y_dot[n]]
    }

    /// Mass position at grid index `i`, continued past liftoff per `ext`.
    pub fn position_on_grid(&self, i: usize, ext: PathExtension, g: f64) -> (f64, f64) {
        if i < self.grid_len {
            return (self.x[i], self.y[i]);
        }
        let [x, y, xd, yd] = self.liftoff();
        match ext {
            PathExtension::Hold => (x, y),
            PathExtension::Ballistic => {
                let s = i as f64 * self.sample_dt - self.t_liftoff;
                (x + xd * s, y + yd * s - 0.5 * g * s * s)
            }
        }
    }

    /// Leg force components `(F_h, F_v) = k·c·u` at each sample [N].
    pub fn leg_forces(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.times.len()).map(move |i| {
            let (dx, y) = (self.x[i] - self.x_foot, self.y[i]);
            let len = dx.hypot(y);
            let mag = self.k[i] * self.compression[i];
            (mag * dx / len, mag * y / len)
        })
    }

    /// Kinetic plus gravitational energy at sample `i` [J].
    pub fn energy(&self, i: usize, m: f64, g: f64) -> f64 {
        0.5 * m * (self.x_dot[i].powi(2) + self.y_dot[i].powi(2)) + m * g * self.y[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observables2D {
    /// `max ‖r_pred − r_real‖ / max c_pred` on the common grid.
    pub d_2d: f64,
    /// `|T_pred − T_real| / T_pred`.
    pub dt_2d: f64,
    /// Peak `|F_h| / F_v` over realized samples with `F_v > 0.1·m·g`.
    pub eta: f64,
    /// The mass went to or below foot height during the realized stance.
    pub negative_vertical_force: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlipRollout {
    pub predicted: SlipTrajectory,
    pub realized: SlipTrajectory,
    pub observables: Observables2D,
}

impl SlipRollout {
    /// Realized liftoff energy minus touchdown energy, as a fraction of the
    /// touchdown kinetic energy.
    pub fn energy_gain(&self, params: &SlipParams) -> f64 {
        let r = &self.realized;
        let n = r.times.len() - 1;
        let ke_td = 0.5 * params.m * (r.x_dot[0].powi(2) + r.y_dot[0].powi(2));
        (r.energy(n, params.m, params.g) - r.energy(0, params.m, params.g)) / ke_td
    }
}

fn leg(x_foot: f64, l0: f64, x: f64, y: f64) -> (f64, f64, f64) {
    let dx = x - x_foot;
    let len = dx.hypot(y);
    (l0 - len, dx / len, y / len)
}

fn stance_event<const N: usize>(x_foot: f64, l0: f64) -> impl Fn(f64, &[f64; N]) -> f64 {
    move |_, s| leg(x_foot, l0, s[0], s[1]).0
}

fn integrate_stance<const N: usize>(
    rhs: impl Fn(f64, &[f64; N]) -> [f64; N],
    state0: [f64; N],
    x_foot: f64,
    l0: f64,
    switches: &[Switch<'_, N>],
    settings: &IntegratorSettings,
) -> Result<SampledSolution<N>, RolloutError> {
    let value = stance_event::<N>(x_foot, l0);
    let armed = |t: f64, s: &[f64; N]| value(t, s) > ARM_COMPRESSION || t > ARM_TIME;
    let event = Event {
        value: &value,
        armed: &armed,
        direction: Crossing::Falling,
    };
    Ok(integrate::solve_switched(
        rhs,
        state0,
        settings,
        Some(&event),
        switches,
    )?)
}

fn to_trajectory<const N: usize>(
    sol: &SampledSolution<N>,
    params: &SlipParams,
    x_foot: f64,
    stiffness: impl Fn(&[f64; N]) -> f64,
) -> SlipTrajectory {
    let col = |j: usize| sol.states.iter().map(|s| s[j]).collect::<Vec<f64>>();
    SlipTrajectory {
        times: sol.times.clone(),
        x: col(0),
        y: col(1),
        x_dot: col(2),
        y_dot: col(3),
        k: sol.states.iter().map(&stiffness).collect(),
        compression: sol
            .states
            .iter()
            .map(|s| leg(x_foot, params.l0, s[0], s[1]).0)
            .collect(),
        t_liftoff: sol.final_time(),
        grid_len: sol.grid_len(),
        sample_dt: sol.sample_dt,
        x_foot,
    }
}

fn predict(
    params: &SlipParams,
    settings: &IntegratorSettings,
) -> Result<(SlipTrajectory, DenseOutput<4>), RolloutError> {
    let td = touchdown_state(params);
    let (m, g, l0, xf) = (params.m, params.g, params.l0, td.x_foot);
    let rhs = |_: f64, s: &[f64; 4]| {
        let (c, ux, uy) = leg(xf, l0, s[0], s[1]);
        let f = k_ref2d(c, params) * c / m;
        [s[2], s[3], f * ux, f * uy - g]
    };
    let f = params.design_force();
    let saturation = |_: f64, s: &[f64; 4]| f - leg(xf, l0, s[0], s[1]).0 * params.k_max;
    let sol = integrate_stance(
        rhs,
        [td.x, td.y, td.x_dot, td.y_dot],
        xf,
        l0,
        &[&saturation],
        settings,
    )?;
    let traj = to_trajectory(&sol, params, xf, |s| {
        k_ref2d(leg(xf, l0, s[0], s[1]).0, params)
    });
    Ok((traj, sol.dense))
}

fn realize(
    params: &SlipParams,
    schedule: &DenseOutput<4>,
    settings: &IntegratorSettings,
) -> Result<SlipTrajectory, RolloutError> {
    let td = touchdown_state(params);
    let (m, g, l0, xf, w) = (params.m, params.g, params.l0, td.x_foot, params.omega_s);
    let (lo, hi) = (params.k_min, params.k_max);
    let commanded_compression = |t: f64, s: &[f64; 5]| match params.command_source {
        CommandSource::Replay => {
            let p = schedule.eval(t);
            leg(xf, l0, p[0], p[1]).0
        }
        CommandSource::Feedback => leg(xf, l0, s[0], s[1]).0,
    };
    let command = |t: f64, s: &[f64; 5]| k_ref2d(commanded_compression(t, s), params).clamp(lo, hi);
    let f = params.design_force();
    let saturation = |t: f64, s: &[f64; 5]| f - commanded_compression(t, s) * hi;
    let floor = |t: f64, s: &[f64; 5]| f - commanded_compression(t, s) * lo;
    let rhs = |t: f64, s: &[f64; 5]| {
        let (c, ux, uy) = leg(xf, l0, s[0], s[1]);
        let f = s[4] * c / m;
        [s[2], s[3], f * ux, f * uy - g, w * (command(t, s) - s[4])]
    };
    let state0 = [td.x, td.y, td.x_dot, td.y_dot, td.k];
    let sol = integrate_stance(rhs, state0, xf, l0, &[&saturation, &floor], settings)?;
    Ok(to_trajectory(&sol, params, xf, |s| s[4]))
}

fn observables(params: &SlipParams, pred: &SlipTrajectory, real: &SlipTrajectory) -> Observables2D {
    let n = pred.grid_len.max(real.grid_len);
    let gap = (0..n)
        .map(|i| {
            let (xp, yp) = pred.position_on_grid(i, params.extension, params.g);
            let (xr, yr) = real.position_on_grid(i, params.extension, params.g);
            (xp - xr).hypot(yp - yr)
        })
        .fold(0.0, f64::max);
    let threshold = 0.1 * params.m * params.g;
    let eta = real
        .leg_forces()
        .filter(|&(_, fv)| fv > threshold)
        .map(|(fh, fv)| fh.abs() / fv)
        .fold(0.0, f64::max);
    Observables2D {
        d_2d: gap / pred.peak_compression(),
        dt_2d: (pred.t_liftoff - real.t_liftoff).abs() / pred.t_liftoff,
        eta,
        negative_vertical_force: real.y.iter().any(|&y| y <= 0.0),
    }
}

pub fn slip_rollout(
    params: &SlipParams,
    kind: ControllerKind,
) -> Result<SlipRollout, RolloutError> {
    slip_rollout_with(params, kind, &IntegratorSettings::default())
}

/// Predicted and realized stance under the parameter-based schedule.
/// Only `ControllerKind::ParamBased` is defined in the planar model.
pub fn slip_rollout_with(
    params: &SlipParams,
    kind: ControllerKind,
    settings: &IntegratorSettings,
) -> Result<SlipRollout, RolloutError> {
    if kind != ControllerKind::ParamBased {
        return Err(RolloutError::Unsupported(
            "planar rollouts are defined for the parameter-based controller only",
        ));
    }
    let params = params.validate()?;
    let (predicted, schedule) = predict(&params, settings)?;
    let realized = realize(&params, &schedule, settings)?;
    let observables = observables(&params, &predicted, &realized);
    Ok(SlipRollout {
        predicted,
        realized,
        observables,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlipRow {
    pub angle_deg: f64,
    pub alpha: f64,
    pub observables: Option<Observables2D>,
}

pub const DEFAULT_ANGLES_DEG: [f64; 2] = [15.0, 20.0];
pub const DEFAULT_SPOT_CHECKS: [(f64, f64); 2] = [(30.0, 0.5), (30.0, 1.0)];

/// One row per `(angle, α)` for the main angles, in angle-then-α order,
/// followed by the `(angle, α)` spot checks in the order given.
pub fn slip_sweep(
    base: &SlipParams,
    alpha_grid: &[f64],
    angles_deg: &[f64],
    spot_checks: &[(f64, f64)],
) -> Vec<SlipRow> {
    let jobs: Vec<(f64, f64)> = angles_deg
        .iter()
        .flat_map(|&a| alpha_grid.iter().map(move |&alpha| (a, alpha)))
        .chain(spot_checks.iter().copied())
        .collect();
    jobs.par_iter()
        .map(|&(angle_deg, alpha)| {
            let params = base.with_angle_deg(angle_deg).with_alpha(alpha);
            SlipRow {
                angle_deg,
                alpha,
                observables: slip_rollout(&params, ControllerKind::ParamBased)
                    .ok()
                    .map(|r| r.observables),
            }
        })
        .collect()
}
