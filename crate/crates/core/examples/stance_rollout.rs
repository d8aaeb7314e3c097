// One stance per controller at a bandwidth below the threshold.

use std::error::Error;

use impedance_feasibility::hop1d::{ideal_cost, rollout};
use impedance_feasibility::params::{ControllerKind, TaskParams1D};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let params = TaskParams1D::nominal(5.0);
    for kind in [ControllerKind::ParamBased, ControllerKind::StiffnessAsState] {
        let r = rollout(&params, kind)?;
        println!(
            "{kind:>18}: T_pred = {:.4} s, T_real = {:.4} s, z_max = {:.4} m, D = {:.3}, dT = {:.3}, J/J* = {:.3}",
            r.predicted.t_liftoff,
            r.realized.t_liftoff,
            r.realized.peak_compression(),
            r.d_alpha,
            r.dt_alpha,
            r.j_realized / ideal_cost(&params),
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
