// Drive an experiment from a TOML document, as `vifeas` does.

use std::error::Error;
use std::fs;

use impedance_feasibility::cli::{parse_config, run};

const CONFIG: &str = r#"
experiment = "conservative"

[parameters.task]
v_td = 2.5

[parameters.sweep]
grid_points = 8
"#;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let dir = tempfile::tempdir()?;
    let mut config = parse_config(CONFIG)?;
    config.output_dir = dir.path().to_path_buf();
    let summary = run(&config)?;
    println!("{} rows, {} failures", summary.rows, summary.failures);
    print!("{}", fs::read_to_string(&summary.csv_path)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
