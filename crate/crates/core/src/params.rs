//! Task description for the vertical monoped and the closed-form constants
//! derived from it.
//!
//! Units are SI throughout: kg, m, s, N/m, rad/s.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ParamError;

/// Physical task for a single 1D stance.
///
/// `l0` is not used by the compression-coordinate dynamics; it is carried so
/// one record can feed both the 1D and the planar configuration paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskParams1D {
    /// Point mass [kg].
    pub m: f64,
    /// Gravitational acceleration [m/s²].
    pub g: f64,
    /// Leg natural length [m].
    pub l0: f64,
    /// Vertical touchdown velocity [m/s], positive into the ground.
    pub v_td: f64,
    /// Nominal stance duration [s].
    pub t_stance: f64,
    /// Lower stiffness bound [N/m].
    pub k_min: f64,
    /// Upper stiffness bound [N/m].
    pub k_max: f64,
    /// First-order actuator bandwidth [rad/s].
    pub omega_s: f64,
}

impl TaskParams1D {
    /// Reference monoped (1 kg, 0.3 s stance, 50–500 N/m, 2 m/s touchdown)
    /// with the bandwidth chosen so that `alpha() == alpha`.
    pub fn nominal(alpha: f64) -> Self {
        let t_stance = 0.3;
        TaskParams1D {
            m: 1.0,
            g: 9.81,
            l0: 0.5,
            v_td: 2.0,
            t_stance,
            k_min: 50.0,
            k_max: 500.0,
            omega_s: alpha / t_stance,
        }
    }

    /// Dimensionless bandwidth-timescale product ω_s·T.
    pub fn alpha(&self) -> f64 {
        self.omega_s * self.t_stance
    }

    /// Copy with ω_s set so that ω_s·T equals `alpha`.
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.omega_s = alpha / self.t_stance;
        self
    }

    pub fn with_touchdown_velocity(mut self, v_td: f64) -> Self {
        self.v_td = v_td;
        self
    }

    pub fn validate(self) -> Result<Self, ParamError> {
        validate(self)
    }
}

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<(), ParamError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ParamError::NonPositive { name, value })
    }
}

/// Checks every invariant of [`TaskParams1D`] and returns the record unchanged.
pub fn validate(params: TaskParams1D) -> Result<TaskParams1D, ParamError> {
    require_positive("m", params.m)?;
    require_positive("g", params.g)?;
    require_positive("l0", params.l0)?;
    require_positive("t_stance", params.t_stance)?;
    require_positive("v_td", params.v_td)?;
    require_positive("omega_s", params.omega_s)?;
    require_positive("k_min", params.k_min)?;
    require_positive("k_max", params.k_max)?;
    if params.k_min >= params.k_max {
        return Err(ParamError::DegenerateRange {
            k_min: params.k_min,
            k_max: params.k_max,
        });
    }
    Ok(params)
}

/// Closed-form quantities that depend only on task physics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedConstants1D {
    /// Constant ground force minimizing ∫F² under the periodic impulse balance [N].
    pub f_const: f64,
    /// Compression at which the reference leaves / re-enters saturation [m].
    pub z_crit: f64,
    /// k_max²·T² / (2m·(k_max − k_min)).
    pub k_task: f64,
    /// Realizability threshold on α; equal to `k_task`.
    pub alpha_crit: f64,
}

pub fn constant_force(params: &TaskParams1D) -> f64 {
    params.m * (2.0 * params.v_td / params.t_stance + params.g)
}

pub fn derive_constants(params: &TaskParams1D) -> DerivedConstants1D {
    let f_const = constant_force(params);
    let k_task = params.k_max * params.k_max * params.t_stance * params.t_stance
        / (2.0 * params.m * (params.k_max - params.k_min));
    DerivedConstants1D {
        f_const,
        z_crit: f_const / params.k_max,
        k_task,
        alpha_crit: k_task,
    }
}

/// How stiffness is treated inside the controller's prediction model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControllerKind {
    /// Stiffness is an instantaneous decision variable with pointwise bounds.
    ParamBased,
    /// Stiffness is a state driven by the first-order actuator.
    StiffnessAsState,
    /// `ParamBased` with the reference saturated at a reduced upper bound.
    ConservativeParamBased { k_max_prime: f64 },
}

impl ControllerKind {
    pub fn label(&self) -> &'static str {
        match self {
            ControllerKind::ParamBased => "param_based",
            ControllerKind::StiffnessAsState => "stiffness_as_state",
            ControllerKind::ConservativeParamBased { .. } => "conservative",
        }
    }

    /// Upper saturation of the stiffness reference under this controller.
    pub fn stiffness_cap(&self, k_max: f64) -> f64 {
        match *self {
            ControllerKind::ConservativeParamBased { k_max_prime } => k_max_prime,
            _ => k_max,
        }
    }

    pub fn check(&self, k_min: f64, k_max: f64) -> Result<(), ParamError> {
        if let ControllerKind::ConservativeParamBased { k_max_prime } = *self {
            if !(k_max_prime.is_finite() && k_min <= k_max_prime && k_max_prime <= k_max) {
                return Err(ParamError::OutOfRange {
                    name: "k_max_prime",
                    value: k_max_prime,
                    expected: "[k_min, k_max]",
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ControllerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "param_based" => Ok(ControllerKind::ParamBased),
            "stiffness_as_state" => Ok(ControllerKind::StiffnessAsState),
            other => Err(format!(
                "unknown controller `{other}` (expected param_based or stiffness_as_state)"
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nominal_is_valid() {
        let p = TaskParams1D::nominal(12.5);
        assert_eq!(validate(p), Ok(p));
        assert!((p.alpha() - 12.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_range_rejected() {
        let mut p = TaskParams1D::nominal(1.0);
        p.k_min = 500.0;
        assert!(matches!(
            validate(p),
            Err(ParamError::DegenerateRange { .. })
        ));
        p.k_min = 600.0;
        assert!(matches!(
            validate(p),
            Err(ParamError::DegenerateRange { .. })
        ));
    }

    #[test]
    fn non_positive_rejected() {
        for setter in [
            |p: &mut TaskParams1D| p.m = -1.0,
            |p: &mut TaskParams1D| p.g = 0.0,
            |p: &mut TaskParams1D| p.t_stance = 0.0,
            |p: &mut TaskParams1D| p.v_td = -2.0,
            |p: &mut TaskParams1D| p.omega_s = 0.0,
            |p: &mut TaskParams1D| p.m = f64::NAN,
        ] {
            let mut p = TaskParams1D::nominal(1.0);
            setter(&mut p);
            assert!(matches!(validate(p), Err(ParamError::NonPositive { .. })));
        }
    }

    #[test]
    fn nominal_constants() {
        let c = derive_constants(&TaskParams1D::nominal(25.0));
        // 2·2.0/0.3 + 9.81
        assert!((c.f_const - 23.143_333_333_333_333).abs() < 1e-12);
        assert!((c.alpha_crit - 25.0).abs() < 1e-12);
        assert!((c.z_crit - 0.046_286_666_666_666_67).abs() < 1e-12);
        assert_eq!(c.k_task, c.alpha_crit);
        assert!(c.f_const > 9.81);
    }

    #[test]
    fn alpha_crit_ignores_velocity_and_gravity() {
        let base = TaskParams1D::nominal(25.0);
        let a = derive_constants(&base.with_touchdown_velocity(1.5)).alpha_crit;
        let b = derive_constants(&base.with_touchdown_velocity(2.5)).alpha_crit;
        let mut low_g = base;
        low_g.g = 1.62;
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(a.to_bits(), derive_constants(&low_g).alpha_crit.to_bits());
    }

    #[test]
    fn f_const_monotone() {
        let base = TaskParams1D::nominal(25.0);
        let mut prev = f64::INFINITY;
        for t in [0.2, 0.25, 0.3, 0.35, 0.4] {
            let mut p = base;
            p.t_stance = t;
            let f = constant_force(&p);
            assert!(f < prev);
            prev = f;
        }
        let mut prev = 0.0;
        for v in [1.0, 1.5, 2.0, 2.5] {
            let f = constant_force(&base.with_touchdown_velocity(v));
            assert!(f > prev);
            prev = f;
        }
    }

    #[test]
    fn conservative_cap_checked() {
        let ok = ControllerKind::ConservativeParamBased { k_max_prime: 100.0 };
        assert!(ok.check(50.0, 500.0).is_ok());
        assert_eq!(ok.stiffness_cap(500.0), 100.0);
        let bad = ControllerKind::ConservativeParamBased { k_max_prime: 600.0 };
        assert!(bad.check(50.0, 500.0).is_err());
        assert_eq!(ControllerKind::ParamBased.stiffness_cap(500.0), 500.0);
    }

    #[test]
    fn controller_labels_round_trip() {
        for kind in [ControllerKind::ParamBased, ControllerKind::StiffnessAsState] {
            assert_eq!(kind.label().parse::<ControllerKind>(), Ok(kind));
        }
        assert!("conservative".parse::<ControllerKind>().is_err());
    }
}
