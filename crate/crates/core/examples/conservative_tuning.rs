// How far the stiffness range must shrink to stay realizable, and where no
// restriction helps at all.

use std::error::Error;

use impedance_feasibility::analysis::{alpha_infeas, conservatism_point, realizable_subintervals};
use impedance_feasibility::params::{derive_constants, TaskParams1D};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let base = TaskParams1D::nominal(1.0);
    let floor = alpha_infeas(&base);
    println!(
        "α_infeas = {floor:.3}, α_crit = {}",
        derive_constants(&base).alpha_crit
    );
    for alpha in [3.0, floor, 8.0, 12.5, 25.0] {
        let q = conservatism_point(&base, alpha);
        match (q.k_max_prime, q.conservatism_ratio) {
            (Some(k), Some(ratio)) => {
                println!("α = {alpha:6.3}: k_max' = {k:6.1} N/m, Δk'/Δk = {ratio:.4}")
            }
            _ => println!("α = {alpha:6.3}: no admissible restriction"),
        }
    }
    let below = realizable_subintervals(&base.with_alpha(0.9 * floor), 20);
    let above = realizable_subintervals(&base.with_alpha(2.0 * floor), 20);
    println!(
        "realizable sub-ranges on a 20x20 grid: {} below the floor, {} at twice it",
        below.len(),
        above.len()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
