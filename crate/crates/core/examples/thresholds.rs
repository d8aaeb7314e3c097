// Closed-form thresholds for the nominal monoped and the required-command
// check on either side of α_crit.

use std::error::Error;

use impedance_feasibility::analysis::threshold_report;
use impedance_feasibility::params::TaskParams1D;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    for alpha in [12.5, 25.0, 50.0] {
        let r = threshold_report(&TaskParams1D::nominal(alpha))?;
        println!(
            "α = {alpha:>5}: ρ = {:.2}, gap = {:6.1} N/m, entry command = {:7.1} N/m, below k_min for {:.4} s -> {}",
            r.rho,
            r.saturation_gap,
            r.entry_command,
            r.time_below_min,
            r.verdict.label()
        );
    }
    let r = threshold_report(&TaskParams1D::nominal(1.0))?;
    println!(
        "α_crit = {}, α_infeas = {:.3}",
        r.alpha_crit, r.alpha_infeas
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
