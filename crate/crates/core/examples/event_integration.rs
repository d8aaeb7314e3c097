// The integrator on its own: a ball dropped from 1 m, stopped when it
// reaches the floor.

use std::error::Error;

use impedance_feasibility::integrate::{solve, Crossing, Event, IntegratorSettings};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let g = 9.81;
    let height = |_: f64, y: &[f64; 2]| y[0];
    let always = |_: f64, _: &[f64; 2]| true;
    let floor = Event {
        value: &height,
        armed: &always,
        direction: Crossing::Falling,
    };
    let sol = solve(
        |_, y| [y[1], -g],
        [1.0, 0.0],
        &IntegratorSettings::default(),
        Some(&floor),
    )?;
    let exact = (2.0 / g).sqrt();
    println!(
        "impact at t = {:.12} s (exact {exact:.12}), v = {:.6} m/s, {} steps, {} samples",
        sol.final_time(),
        sol.final_state()[1],
        sol.accepted_steps,
        sol.times.len()
    );
    println!("height at t = 0.25 s: {:.9} m", sol.dense.eval(0.25)[0]);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
