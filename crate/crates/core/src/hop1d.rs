//! Vertical monoped stance: reference stiffness, controller rollouts and the
//! predicted-versus-realized deviation metrics.
//!
//! Compression `z` is positive while the leg is loaded; stance runs from
//! touchdown (`z = 0`, `ż = v_td`) to the first return of `z` to zero.
//!
//! Prediction and realization differ only in how stiffness evolves:
//!
//! * `ParamBased` / `ConservativeParamBased` predict with `k = k_ref(z)`
//!   applied instantaneously, then realize by feeding `k_ref(z_real)` through
//!   the first-order actuator `k̇ = ω_s (k_cmd − k)`.
//! * `StiffnessAsState` predicts with the actuator in the loop, so the
//!   prediction and the realization are the same ODE.

use serde::Serialize;

use crate::error::RolloutError;
use crate::integrate::{self, Crossing, Event, IntegratorSettings, SampledSolution, Switch};
use crate::params::{derive_constants, validate, ControllerKind, DerivedConstants1D, TaskParams1D};

/// Compression above which the liftoff event is armed [m].
pub const ARM_COMPRESSION: f64 = 1e-6;
/// Time after which the liftoff event is armed regardless of compression [s].
pub const ARM_TIME: f64 = 1e-4;

/// Time-sampled single stance on the uniform output grid, closed by the
/// liftoff instant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StanceTrajectory {
    pub times: Vec<f64>,
    /// Compression [m].
    pub z: Vec<f64>,
    /// Compression rate [m/s].
    pub z_dot: Vec<f64>,
    /// Realized (or, for instantaneous predictions, assumed) stiffness [N/m].
    pub k: Vec<f64>,
    /// Commanded stiffness [N/m].
    pub k_cmd: Vec<f64>,
    /// Ground reaction force `k·z` [N].
    pub force: Vec<f64>,
    /// Stance duration [s].
    pub t_liftoff: f64,
    /// Samples `0..grid_len` lie on `i·sample_dt`.
    pub grid_len: usize,
    pub sample_dt: f64,
}

impl StanceTrajectory {
    pub fn peak_compression(&self) -> f64 {
        self.z.iter().copied().fold(0.0, f64::max)
    }

    /// Compression at grid index `i`, zero once the stance has ended.
    pub fn z_on_grid(&self, i: usize) -> f64 {
        if i < self.grid_len {
            self.z[i]
        } else {
            0.0
        }
    }

    pub fn liftoff_velocity(&self) -> f64 {
        *self.z_dot.last().expect("non-empty trajectory")
    }

    /// Trapezoidal ∫F² dt over the stance [N²·s].
    pub fn integrated_squared_force(&self) -> f64 {
        trapezoid(&self.times, self.force.iter().map(|f| f * f))
    }

    /// Trapezoidal ∫F dt over the stance [N·s].
    pub fn impulse(&self) -> f64 {
        trapezoid(&self.times, self.force.iter().copied())
    }
}

pub(crate) fn trapezoid(times: &[f64], values: impl Iterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.collect();
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RolloutResult {
    #[serde(skip)]
    pub controller: ControllerKind,
    pub predicted: StanceTrajectory,
    pub realized: StanceTrajectory,
    /// `max |z_pred − z_real| / max z_pred` on the common grid.
    pub d_alpha: f64,
    /// `|T_pred − T_real| / T_pred`.
    pub dt_alpha: f64,
    /// ∫F² dt over the realized stance [N²·s].
    pub j_realized: f64,
}

/// Parameter-based reference `min(k_cap, F_const / z)`; equals `k_cap` at
/// (and, for robustness, below) zero compression.
pub fn k_ref(z: f64, consts: &DerivedConstants1D, k_cap: f64) -> f64 {
    if z <= 0.0 {
        k_cap
    } else {
        k_cap.min(consts.f_const / z)
    }
}

/// Time derivative of `k_ref` along a trajectory: `−F_const·ż/z²` in the
/// force-regulated regime, zero while saturated.
pub fn dk_ref_dt(z: f64, z_dot: f64, consts: &DerivedConstants1D, k_cap: f64) -> f64 {
    if z > 0.0 && consts.f_const / z < k_cap {
        -consts.f_const * z_dot / (z * z)
    } else {
        0.0
    }
}

/// Stiffness command issued to the actuator at state `(z, ż)`.
///
/// Parameter-based controllers command the reference directly.
/// `StiffnessAsState` adds the first-order pre-compensation term
/// `(1/ω_s)·dk_ref/dt`. Every command is clipped to `[k_min, k_max]`.
pub fn command_policy(
    kind: ControllerKind,
    z: f64,
    z_dot: f64,
    params: &TaskParams1D,
    consts: &DerivedConstants1D,
) -> f64 {
    raw_command(kind, z, z_dot, params, consts).clamp(params.k_min, params.k_max)
}

fn raw_command(
    kind: ControllerKind,
    z: f64,
    z_dot: f64,
    params: &TaskParams1D,
    consts: &DerivedConstants1D,
) -> f64 {
    let cap = kind.stiffness_cap(params.k_max);
    match kind {
        ControllerKind::ParamBased | ControllerKind::ConservativeParamBased { .. } => {
            k_ref(z, consts, cap)
        }
        ControllerKind::StiffnessAsState => {
            k_ref(z, consts, cap) + dk_ref_dt(z, z_dot, consts, cap) / params.omega_s
        }
    }
}

fn liftoff_value<const N: usize>(_: f64, y: &[f64; N]) -> f64 {
    y[0]
}

fn liftoff_armed<const N: usize>(t: f64, y: &[f64; N]) -> bool {
    y[0] > ARM_COMPRESSION || t > ARM_TIME
}

fn liftoff_event<const N: usize>() -> Event<'static, N> {
    Event {
        value: &liftoff_value::<N>,
        armed: &liftoff_armed::<N>,
        direction: Crossing::Falling,
    }
}

fn from_instantaneous(
    sol: &SampledSolution<2>,
    stiffness: impl Fn(f64) -> f64,
) -> StanceTrajectory {
    let z: Vec<f64> = sol.states.iter().map(|s| s[0]).collect();
    let k: Vec<f64> = z.iter().map(|&z| stiffness(z)).collect();
    StanceTrajectory {
        force: z.iter().zip(&k).map(|(z, k)| z * k).collect(),
        z_dot: sol.states.iter().map(|s| s[1]).collect(),
        k_cmd: k.clone(),
        k,
        z,
        times: sol.times.clone(),
        t_liftoff: sol.final_time(),
        grid_len: sol.grid_len(),
        sample_dt: sol.sample_dt,
    }
}

fn from_actuated(sol: &SampledSolution<3>, command: impl Fn(f64, f64) -> f64) -> StanceTrajectory {
    let z: Vec<f64> = sol.states.iter().map(|s| s[0]).collect();
    let k: Vec<f64> = sol.states.iter().map(|s| s[2]).collect();
    StanceTrajectory {
        force: z.iter().zip(&k).map(|(z, k)| z * k).collect(),
        z_dot: sol.states.iter().map(|s| s[1]).collect(),
        k_cmd: sol.states.iter().map(|s| command(s[0], s[1])).collect(),
        k,
        z,
        times: sol.times.clone(),
        t_liftoff: sol.final_time(),
        grid_len: sol.grid_len(),
        sample_dt: sol.sample_dt,
    }
}

/// Stance with stiffness an instantaneous function of compression.
/// `switches` mark kinks of the stiffness law.
pub fn integrate_instantaneous(
    params: &TaskParams1D,
    stiffness: impl Fn(f64) -> f64,
    switches: &[Switch<'_, 2>],
    settings: &IntegratorSettings,
) -> Result<StanceTrajectory, RolloutError> {
    let (m, g) = (params.m, params.g);
    let rhs = |_: f64, y: &[f64; 2]| [y[1], g - stiffness(y[0]) * y[0] / m];
    let event = liftoff_event();
    let sol = integrate::solve_switched(rhs, [0.0, params.v_td], settings, Some(&event), switches)?;
    Ok(from_instantaneous(&sol, &stiffness))
}

/// Stance with stiffness driven through the first-order actuator by the
/// state-feedback `command(z, ż)`, starting from `k0`. `switches` mark kinks
/// of the command.
pub fn integrate_actuated(
    params: &TaskParams1D,
    k0: f64,
    command: impl Fn(f64, f64) -> f64,
    switches: &[Switch<'_, 3>],
    settings: &IntegratorSettings,
) -> Result<StanceTrajectory, RolloutError> {
    let (m, g, w) = (params.m, params.g, params.omega_s);
    let rhs = |_: f64, y: &[f64; 3]| [y[1], g - y[2] * y[0] / m, w * (command(y[0], y[1]) - y[2])];
    let event = liftoff_event();
    let sol = integrate::solve_switched(
        rhs,
        [0.0, params.v_td, k0],
        settings,
        Some(&event),
        switches,
    )?;
    Ok(from_actuated(&sol, &command))
}

/// The controller's own prediction of the stance.
pub fn predict(
    params: &TaskParams1D,
    kind: ControllerKind,
) -> Result<StanceTrajectory, RolloutError> {
    predict_with(params, kind, &IntegratorSettings::default())
}

pub fn predict_with(
    params: &TaskParams1D,
    kind: ControllerKind,
    settings: &IntegratorSettings,
) -> Result<StanceTrajectory, RolloutError> {
    let params = validate(*params)?;
    kind.check(params.k_min, params.k_max)?;
    let consts = derive_constants(&params);
    let cap = kind.stiffness_cap(params.k_max);
    match kind {
        ControllerKind::ParamBased | ControllerKind::ConservativeParamBased { .. } => {
            let saturation = |_: f64, y: &[f64; 2]| consts.f_const - cap * y[0];
            integrate_instantaneous(
                &params,
                |z| k_ref(z, &consts, cap),
                &[&saturation],
                settings,
            )
        }
        ControllerKind::StiffnessAsState => realize_actuated(&params, kind, &consts, settings),
    }
}

/// The stance the physical system produces when the controller's command
/// policy is applied through the actuator.
pub fn realize_with(
    params: &TaskParams1D,
    kind: ControllerKind,
    settings: &IntegratorSettings,
) -> Result<StanceTrajectory, RolloutError> {
    let params = validate(*params)?;
    kind.check(params.k_min, params.k_max)?;
    let consts = derive_constants(&params);
    realize_actuated(&params, kind, &consts, settings)
}

fn realize_actuated(
    params: &TaskParams1D,
    kind: ControllerKind,
    consts: &DerivedConstants1D,
    settings: &IntegratorSettings,
) -> Result<StanceTrajectory, RolloutError> {
    let cap = kind.stiffness_cap(params.k_max);
    let saturation = |_: f64, y: &[f64; 3]| consts.f_const - cap * y[0];
    let floor = |_: f64, y: &[f64; 3]| raw_command(kind, y[0], y[1], params, consts) - params.k_min;
    let ceiling =
        |_: f64, y: &[f64; 3]| raw_command(kind, y[0], y[1], params, consts) - params.k_max;
    integrate_actuated(
        params,
        cap,
        |z, zd| command_policy(kind, z, zd, params, consts),
        &[&saturation, &floor, &ceiling],
        settings,
    )
}

/// `(D_α, ΔT_α)` between a prediction and a realization sampled on the same
/// grid. The shorter stance is zero-extended.
pub fn deviation_metrics(predicted: &StanceTrajectory, realized: &StanceTrajectory) -> (f64, f64) {
    let n = predicted.grid_len.max(realized.grid_len);
    let gap = (0..n)
        .map(|i| (predicted.z_on_grid(i) - realized.z_on_grid(i)).abs())
        .fold(0.0, f64::max);
    let d = gap / predicted.peak_compression();
    let dt = (predicted.t_liftoff - realized.t_liftoff).abs() / predicted.t_liftoff;
    (d, dt)
}

pub fn rollout(params: &TaskParams1D, kind: ControllerKind) -> Result<RolloutResult, RolloutError> {
    rollout_with(params, kind, &IntegratorSettings::default())
}

pub fn rollout_with(
    params: &TaskParams1D,
    kind: ControllerKind,
    settings: &IntegratorSettings,
) -> Result<RolloutResult, RolloutError> {
    let predicted = predict_with(params, kind, settings)?;
    let realized = realize_with(params, kind, settings)?;
    let (d_alpha, dt_alpha) = deviation_metrics(&predicted, &realized);
    let j_realized = realized.integrated_squared_force();
    Ok(RolloutResult {
        controller: kind,
        predicted,
        realized,
        d_alpha,
        dt_alpha,
        j_realized,
    })
}

/// Cost of the unconstrained constant-force optimum, `F_const²·T`.
pub fn ideal_cost(params: &TaskParams1D) -> f64 {
    let f = derive_constants(params).f_const;
    f * f * params.t_stance
}
