// Planar SLIP: path and timing mismatch grow as α falls while the friction
// ratio stays pinned to the touchdown geometry.

use std::error::Error;

use impedance_feasibility::params::ControllerKind;
use impedance_feasibility::slip2d::{slip_rollout, SlipParams};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    for angle in [15.0, 30.0] {
        for alpha in [0.5, 5.0, 316.0] {
            let params = SlipParams::nominal(alpha).with_angle_deg(angle);
            let r = slip_rollout(&params, ControllerKind::ParamBased)?;
            let o = r.observables;
            println!(
                "{angle:>4}°  α = {alpha:>5}: D_2D = {:.3}  dT = {:.3}  η = {:.3} (tan = {:.3})",
                o.d_2d,
                o.dt_2d,
                o.eta,
                params.alpha_td.tan()
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
