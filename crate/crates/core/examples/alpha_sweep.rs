// Coarse α sweep of both controllers with the ensemble band.

use std::error::Error;

use impedance_feasibility::params::ControllerKind;
use impedance_feasibility::sweep::{alpha_50, ensemble_band, log_grid, run_sweep, SweepConfig};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let config = SweepConfig {
        alpha_grid: log_grid(0.1, 316.0, 10),
        ..SweepConfig::default()
    };
    let rows = run_sweep(&config)?;
    let param = ensemble_band(&rows, ControllerKind::ParamBased, |r| r.d_alpha);
    let state = ensemble_band(&rows, ControllerKind::StiffnessAsState, |r| r.d_alpha);
    println!(
        "{:>8}  {:>22}  {:>10}",
        "alpha", "param D (min..max)", "state D"
    );
    for (p, s) in param.iter().zip(&state) {
        println!(
            "{:8.2}  {:.3} ({:.3}..{:.3})  {:10.1e}",
            p.alpha, p.median, p.min, p.max, s.max
        );
    }
    let series: Vec<(f64, f64)> = param.iter().map(|b| (b.alpha, b.median)).collect();
    println!("α_50 ≈ {:.1} (coarse grid)", alpha_50(&series)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
