// Threshold regression over a few of the default parameter combinations.
// `vifeas robustness` runs all ten on the full grid.

use std::error::Error;

use impedance_feasibility::params::TaskParams1D;
use impedance_feasibility::sweep::{default_combos, log_grid, robustness_study};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let combos: Vec<_> = default_combos().into_iter().step_by(3).collect();
    let grid = log_grid(1.0, 100.0, 12);
    let report = robustness_study(&TaskParams1D::nominal(1.0), &combos, &grid, &[2.0])?;
    for c in &report.combos {
        let a50 = c.alpha_50.map_or("-".to_string(), |a| format!("{a:.1}"));
        println!("α_crit = {:5.1}  α_50 = {a50}", c.alpha_crit);
    }
    let fit = report.regression;
    println!(
        "slope {:.2}, R² {:.3}, α_50 ≈ {:.2}·α_crit",
        fit.slope, fit.r_squared, fit.proportionality
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
