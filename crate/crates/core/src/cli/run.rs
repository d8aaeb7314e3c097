//! Runs one experiment and writes its CSV plus `<experiment>.manifest.txt`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::analysis::{conservative_report, threshold_report};
use crate::cli::config::{Experiment, ExperimentConfig};
use crate::error::RunError;
use crate::slip2d::slip_sweep;
use crate::sweep::{evaluate_combos, fit_combos, run_sweep};

/// Header plus string cells, ready for CSV emission.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    /// Rows (or row groups) whose computation failed and left empty cells.
    pub failures: usize,
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

fn cell(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn flag(b: bool) -> String {
    b.to_string()
}

/// Computes the table for the configured experiment without touching disk.
pub fn compute_table(config: &ExperimentConfig) -> Result<Table, RunError> {
    let p = &config.parameters;
    let computation = |e: &dyn std::fmt::Display| RunError::Computation(e.to_string());
    match config.experiment {
        Experiment::Sweep1d => {
            let sweep = config.sweep_config().map_err(|e| computation(&e))?;
            let rows = run_sweep(&sweep).map_err(|e| computation(&e))?;
            Ok(Table {
                header: vec![
                    "alpha",
                    "v_td",
                    "controller",
                    "D_alpha",
                    "dT_alpha",
                    "J_over_Jideal",
                ],
                failures: rows.iter().filter(|r| r.d_alpha.is_none()).count(),
                rows: rows
                    .iter()
                    .map(|r| {
                        vec![
                            fmt_f64(r.alpha),
                            fmt_f64(r.v_td),
                            r.controller.label().to_string(),
                            cell(r.d_alpha),
                            cell(r.dt_alpha),
                            cell(r.j_over_jideal),
                        ]
                    })
                    .collect(),
            })
        }
        Experiment::Robustness => {
            let base = p.task.params(1.0);
            let combos = evaluate_combos(
                &base,
                &p.robustness.combos,
                &p.sweep.alpha_grid(),
                &p.sweep.v_td_ensemble,
            )
            .map_err(|e| computation(&e))?;
            let fit = fit_combos(&combos).ok();
            let missing = combos.iter().filter(|c| c.alpha_50.is_none()).count();
            Ok(Table {
                header: vec![
                    "combo",
                    "m",
                    "T",
                    "k_min",
                    "k_max",
                    "alpha_crit",
                    "alpha_50",
                    "slope",
                    "intercept",
                    "r_squared",
                    "proportionality",
                ],
                failures: missing + usize::from(fit.is_none()),
                rows: combos
                    .iter()
                    .enumerate()
                    .map(|(i, c)| {
                        vec![
                            (i + 1).to_string(),
                            fmt_f64(c.combo.m),
                            fmt_f64(c.combo.t_stance),
                            fmt_f64(c.combo.k_min),
                            fmt_f64(c.combo.k_max),
                            fmt_f64(c.alpha_crit),
                            cell(c.alpha_50),
                            cell(fit.map(|f| f.slope)),
                            cell(fit.map(|f| f.intercept)),
                            cell(fit.map(|f| f.r_squared)),
                            cell(fit.map(|f| f.proportionality)),
                        ]
                    })
                    .collect(),
            })
        }
        Experiment::Slip2d => {
            let rows = slip_sweep(
                &p.slip.params(15.0, 1.0),
                &p.sweep.alpha_grid(),
                &p.slip.angles_deg,
                &p.slip.spot_checks(),
            );
            Ok(Table {
                header: vec![
                    "angle_deg",
                    "alpha",
                    "D_2D",
                    "dT_2D",
                    "eta",
                    "negative_vertical_force",
                ],
                failures: rows.iter().filter(|r| r.observables.is_none()).count(),
                rows: rows
                    .iter()
                    .map(|r| {
                        let o = r.observables.as_ref();
                        vec![
                            fmt_f64(r.angle_deg),
                            fmt_f64(r.alpha),
                            cell(o.map(|o| o.d_2d)),
                            cell(o.map(|o| o.dt_2d)),
                            cell(o.map(|o| o.eta)),
                            o.map(|o| flag(o.negative_vertical_force))
                                .unwrap_or_default(),
                        ]
                    })
                    .collect(),
            })
        }
        Experiment::Conservative => {
            let report = conservative_report(&p.task.params(1.0), &p.sweep.alpha_grid());
            let reach = report.reach;
            Ok(Table {
                header: vec![
                    "alpha",
                    "alpha_crit",
                    "alpha_infeas",
                    "A",
                    "k_max_prime",
                    "conservatism_ratio",
                    "J_param",
                    "J_conservative",
                    "J_state",
                    "reach_stiffness_as_state",
                    "reach_conservative",
                    "reach_param_based",
                ],
                failures: report
                    .points
                    .iter()
                    .filter(|q| {
                        q.j_param.is_none()
                            || q.j_state.is_none()
                            || (q.k_max_prime.is_some() && q.j_conservative.is_none())
                    })
                    .count(),
                rows: report
                    .points
                    .iter()
                    .map(|q| {
                        vec![
                            fmt_f64(q.alpha),
                            fmt_f64(report.alpha_crit),
                            fmt_f64(report.alpha_infeas),
                            fmt_f64(q.a),
                            cell(q.k_max_prime),
                            cell(q.conservatism_ratio),
                            cell(q.j_param),
                            cell(q.j_conservative),
                            cell(q.j_state),
                            flag(reach.stiffness_as_state.contains(q.alpha)),
                            flag(reach.conservative.contains(q.alpha)),
                            flag(reach.param_based.contains(q.alpha)),
                        ]
                    })
                    .collect(),
            })
        }
        Experiment::Thresholds => {
            let r = threshold_report(&p.task.params(p.thresholds.alpha))
                .map_err(|e| computation(&e))?;
            Ok(Table {
                header: vec![
                    "alpha",
                    "F_const",
                    "z_crit",
                    "D_simplified",
                    "D_exact",
                    "capacity",
                    "rho",
                    "alpha_crit",
                    "alpha_infeas",
                    "saturation_gap",
                    "entry_command",
                    "min_command",
                    "max_command",
                    "time_below_min",
                    "time_above_max",
                    "verdict",
                ],
                failures: 0,
                rows: vec![vec![
                    fmt_f64(p.thresholds.alpha),
                    fmt_f64(r.f_const),
                    fmt_f64(r.z_crit),
                    fmt_f64(r.d_simplified),
                    fmt_f64(r.d_exact),
                    fmt_f64(r.capacity),
                    fmt_f64(r.rho),
                    fmt_f64(r.alpha_crit),
                    fmt_f64(r.alpha_infeas),
                    fmt_f64(r.saturation_gap),
                    fmt_f64(r.entry_command),
                    fmt_f64(r.min_command),
                    fmt_f64(r.max_command),
                    fmt_f64(r.time_below_min),
                    fmt_f64(r.time_above_max),
                    r.verdict.label().to_string(),
                ]],
            })
        }
    }
}

/// CSV bytes with LF line endings.
pub fn table_to_csv(table: &Table) -> Result<Vec<u8>, RunError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.into_inner()
        .map_err(|e| RunError::Computation(format!("csv flush failed: {e}")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub experiment: Experiment,
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
    pub rows: usize,
    pub failures: usize,
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    fs::write(path, bytes).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn flatten(prefix: &str, value: &toml::Value, out: &mut Vec<String>) {
    match value {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out);
            }
        }
        other => out.push(format!("{prefix}: {other}")),
    }
}

fn manifest(config: &ExperimentConfig, table: &Table, csv_name: &str, seconds: f64) -> String {
    let p = &config.parameters;
    let mut lines = vec![
        format!(
            "artifact: {} {}",
            env!("CARGO_PKG_NAME"),
            env!("CARGO_PKG_VERSION")
        ),
        format!("experiment: {}", config.experiment),
        format!("output: {csv_name}"),
        format!("rows: {}", table.rows.len()),
        format!("warnings: {}", table.failures),
        format!("grid_points: {}", p.sweep.grid_points),
        format!("ensemble_size: {}", p.sweep.v_td_ensemble.len()),
        format!("wall_clock_s: {seconds:.3}"),
    ];
    let echo = toml::Value::try_from(config).expect("config serializes");
    flatten("config", &echo, &mut lines);
    lines.push(String::new());
    lines.join("\n")
}

/// Computes the experiment and writes `<experiment>.csv` and
/// `<experiment>.manifest.txt`
/// into `config.output_dir`.
pub fn run(config: &ExperimentConfig) -> Result<RunSummary, RunError> {
    let start = Instant::now();
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|source| RunError::Io {
        path: dir.clone(),
        source,
    })?;
    let table = compute_table(config)?;
    let csv_name = config.experiment.csv_name();
    let csv_path = dir.join(&csv_name);
    write(&csv_path, &table_to_csv(&table)?)?;
    let manifest_path = dir.join(format!("{}.manifest.txt", config.experiment.tag()));
    let text = manifest(config, &table, &csv_name, start.elapsed().as_secs_f64());
    write(&manifest_path, text.as_bytes())?;
    Ok(RunSummary {
        experiment: config.experiment,
        csv_path,
        manifest_path,
        rows: table.rows.len(),
        failures: table.failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(experiment: Experiment, dir: &Path) -> ExperimentConfig {
        let mut c = ExperimentConfig::nominal(experiment);
        c.output_dir = dir.to_path_buf();
        c.parameters.sweep.grid_points = 4;
        c
    }

    #[test]
    fn float_format_round_trips() {
        for x in [25.0, 0.1, 1.0 / 3.0, 5.185_185_185_185_185, 1e-15, 316.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
            assert!(!s.contains(','));
        }
        assert_eq!(fmt_f64(25.0), "25");
    }

    #[test]
    fn thresholds_csv() {
        let dir = tempfile::tempdir().unwrap();
        let s = run(&small(Experiment::Thresholds, dir.path())).unwrap();
        let text = fs::read_to_string(&s.csv_path).unwrap();
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert!(lines.next().is_none());
        let col = header.iter().position(|h| *h == "alpha_crit").unwrap();
        assert_eq!(row[col].parse::<f64>().unwrap(), 25.0);
        assert!(!text.contains('\r'));
        let manifest = fs::read_to_string(&s.manifest_path).unwrap();
        assert!(manifest.contains("experiment: thresholds"));
        assert!(manifest.contains("config.parameters.task.k_max: 500"));
    }

    #[test]
    fn sweep_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let s = run(&small(Experiment::Sweep1d, dir.path())).unwrap();
        let text = fs::read_to_string(&s.csv_path).unwrap();
        assert!(text.starts_with("alpha,v_td,controller,D_alpha,dT_alpha,J_over_Jideal\n"));
        assert_eq!(s.rows, 4 * 3 * 2);
        assert_eq!(s.failures, 0);
    }

    #[test]
    fn conservative_columns() {
        let dir = tempfile::tempdir().unwrap();
        let table = compute_table(&small(Experiment::Conservative, dir.path())).unwrap();
        let i = table
            .header
            .iter()
            .position(|h| *h == "alpha_infeas")
            .unwrap();
        let v: f64 = table.rows[0][i].parse().unwrap();
        assert!((v - 5.185).abs() < 0.01);
        let k = table
            .header
            .iter()
            .position(|h| *h == "k_max_prime")
            .unwrap();
        assert_eq!(table.rows[0][k], "", "no restriction exists at α = 0.1");
    }

    #[test]
    fn output_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let config = small(Experiment::Slip2d, dir.path());
        let a = table_to_csv(&compute_table(&config).unwrap()).unwrap();
        let b = table_to_csv(&compute_table(&config).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unwritable_output_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("occupied");
        fs::write(&file, "x").unwrap();
        let mut c = small(Experiment::Thresholds, dir.path());
        c.output_dir = file.join("sub");
        assert!(matches!(run(&c), Err(RunError::Io { .. })));
    }
}
