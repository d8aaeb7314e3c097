// Acceptance criteria, one PASS/FAIL line each.
//
// Every experiment is run twice through the same path as `vifeas`; the first
// run's CSVs are the evidence for the numeric criteria and the second run is
// compared byte for byte. Criteria listed in KNOWN_RED are open deviations
// (analysed in the project notes). The test fails if any other criterion
// fails, or if a known red starts passing without the list being updated.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use impedance_feasibility::analysis::{
    alpha_infeas, larger_root, realizable_subintervals, required_command_profile, saturation_gap,
    simplified_demand,
};
use impedance_feasibility::cli::{run, Experiment, ExperimentConfig};
use impedance_feasibility::params::{derive_constants, ControllerKind, TaskParams1D};
use impedance_feasibility::slip2d::{slip_rollout, SlipParams};
use impedance_feasibility::sweep::log_grid;

const KNOWN_RED: [&str; 2] = [
    "robustness: unconstrained log-log slope in [0.85, 1.15]",
    "slip: D_2D(15 deg, alpha=316) = 0.03 +- 0.02",
];

struct Ledger {
    results: Vec<(String, bool)>,
}

impl Ledger {
    fn check(&mut self, name: &str, pass: bool, detail: String) {
        let tag = match (pass, KNOWN_RED.contains(&name)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("{tag:<13} {name}  [{detail}]");
        self.results.push((name.to_string(), pass));
    }
}

type Rows = Vec<HashMap<String, String>>;

fn read_csv(path: &Path) -> Rows {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            header
                .iter()
                .cloned()
                .zip(r.iter().map(String::from))
                .collect()
        })
        .collect()
}

fn num(row: &HashMap<String, String>, key: &str) -> f64 {
    row[key]
        .parse()
        .unwrap_or_else(|_| panic!("{key} = {:?} is not a number", row[key]))
}

fn run_twice(experiment: Experiment, root: &Path) -> (Rows, bool) {
    let mut bytes = Vec::new();
    for i in 0..2 {
        let mut config = ExperimentConfig::nominal(experiment);
        config.output_dir = root.join(format!("{experiment}-{i}"));
        let summary = run(&config).unwrap();
        assert_eq!(summary.failures, 0, "{experiment}: rows failed");
        bytes.push(fs::read(&summary.csv_path).unwrap());
    }
    let path = root
        .join(format!("{experiment}-0"))
        .join(experiment.csv_name());
    (read_csv(&path), bytes[0] == bytes[1])
}

fn analytic(l: &mut Ledger, thresholds: &Rows, conservative: &Rows) {
    let alpha_crit = num(&thresholds[0], "alpha_crit");
    l.check(
        "thresholds: alpha_crit(nominal) = 25 within 1e-12",
        (alpha_crit - 25.0).abs() <= 1e-12,
        format!("{alpha_crit}"),
    );
    let infeas = num(&conservative[0], "alpha_infeas");
    l.check(
        "thresholds: alpha_infeas(nominal) = 5.185 within 0.01",
        (infeas - 5.185).abs() <= 0.01,
        format!("{infeas:.6}"),
    );
    let ratio = alpha_crit / infeas;
    l.check(
        "thresholds: alpha_crit / alpha_infeas = 4.82 within 0.05",
        (ratio - 4.82).abs() <= 0.05,
        format!("{ratio:.4}"),
    );
    let p = TaskParams1D::nominal(1.0);
    let k = larger_root(4.0 * p.k_min, p.k_min);
    l.check(
        "conservative: k_max' at zero discriminant = 2 k_min = 100 exactly",
        k == Some(100.0),
        format!("{k:?}"),
    );
    let ratio = (k.unwrap_or(f64::NAN) - p.k_min) / (p.k_max - p.k_min);
    let oracle = (2.0 * p.k_min - p.k_min) / (p.k_max - p.k_min);
    l.check(
        "conservative: conservatism ratio at alpha_infeas = 0.1111 within 1e-6",
        (ratio - oracle).abs() <= 1e-6,
        format!("{ratio:.7} vs {oracle:.7}"),
    );
}

fn sweep_1d(l: &mut Ledger, rows: &Rows) {
    let series = |controller: &str, v: f64| -> Vec<(f64, f64, f64)> {
        rows.iter()
            .filter(|r| r["controller"] == controller && num(r, "v_td") == v)
            .map(|r| (num(r, "alpha"), num(r, "D_alpha"), num(r, "dT_alpha")))
            .collect()
    };
    let ensemble = [1.5, 2.0, 2.5];
    let param: Vec<_> = ensemble.iter().map(|&v| series("param_based", v)).collect();

    let hi: Vec<f64> = param.iter().map(|s| s.last().unwrap().1).collect();
    l.check(
        "sweep1d: param-based D_alpha <= 0.05 at alpha=316",
        hi.iter().all(|&d| d <= 0.05),
        format!("{hi:.4?}"),
    );
    let lo: Vec<f64> = param.iter().map(|s| s[0].1).collect();
    l.check(
        "sweep1d: param-based D_alpha >= 0.8 at alpha=0.1",
        lo.iter().all(|&d| d >= 0.8),
        format!("{lo:.4?}"),
    );
    let dt_hi: Vec<f64> = param.iter().map(|s| s.last().unwrap().2).collect();
    l.check(
        "sweep1d: param-based dT_alpha <= 0.02 at alpha=316",
        dt_hi.iter().all(|&d| d <= 0.02),
        format!("{dt_hi:.4?}"),
    );
    let dt_lo = param
        .iter()
        .flat_map(|s| s.iter().filter(|p| p.0 <= 0.3).map(|p| p.2))
        .fold(f64::INFINITY, f64::min);
    l.check(
        "sweep1d: param-based dT_alpha >= 0.5 for alpha <= 0.3",
        dt_lo >= 0.5,
        format!("min {dt_lo:.4}"),
    );
    let state_max = ensemble
        .iter()
        .flat_map(|&v| series("stiffness_as_state", v))
        .map(|p| p.1.max(p.2))
        .fold(0.0, f64::max);
    l.check(
        "sweep1d: stiffness-as-state D_alpha and dT_alpha <= 1e-6 everywhere",
        state_max <= 1e-6,
        format!("max {state_max:e}"),
    );
    let worst_rise = param
        .iter()
        .flat_map(|s| s.windows(2).map(|w| w[1].1 - w[0].1))
        .fold(f64::NEG_INFINITY, f64::max);
    l.check(
        "sweep1d: param-based D_alpha non-increasing in alpha (slack 0.02 per member)",
        worst_rise <= 0.02,
        format!("largest rise {worst_rise:.2e}"),
    );
}

fn robustness(l: &mut Ledger, rows: &Rows) {
    let r0 = &rows[0];
    let (r2, slope, prop) = (
        num(r0, "r_squared"),
        num(r0, "slope"),
        num(r0, "proportionality"),
    );
    l.check("robustness: R^2 >= 0.95", r2 >= 0.95, format!("{r2:.4}"));
    l.check(
        "robustness: unconstrained log-log slope in [0.85, 1.15]",
        (0.85..=1.15).contains(&slope),
        format!("{slope:.4}"),
    );
    l.check(
        "robustness: proportionality in [0.5, 0.85]",
        (0.5..=0.85).contains(&prop),
        format!("{prop:.4}"),
    );
    let below = rows
        .iter()
        .filter(|r| !r["alpha_50"].is_empty() && num(r, "alpha_50") < num(r, "alpha_crit"))
        .count();
    l.check(
        "robustness: alpha_50 < alpha_crit for all 10 combos",
        rows.len() == 10 && below == 10,
        format!("{below}/{}", rows.len()),
    );
}

fn slip(l: &mut Ledger, rows: &Rows) {
    let at = |angle: f64, alpha: f64| {
        rows.iter()
            .find(|r| num(r, "angle_deg") == angle && num(r, "alpha") == alpha)
            .unwrap_or_else(|| panic!("no row for {angle} deg, alpha {alpha}"))
    };
    let d316 = num(at(15.0, 316.0), "D_2D");
    l.check(
        "slip: D_2D(15 deg, alpha=316) = 0.03 +- 0.02",
        (d316 - 0.03).abs() <= 0.02,
        format!("{d316:.4}"),
    );
    let d03 = slip_rollout(&SlipParams::nominal(0.3), ControllerKind::ParamBased)
        .unwrap()
        .observables
        .d_2d;
    l.check(
        "slip: D_2D(15 deg, alpha=0.3) = 1.9 +- 0.3",
        (d03 - 1.9).abs() <= 0.3,
        format!("{d03:.4}"),
    );
    let (s05, s10) = (num(at(30.0, 0.5), "D_2D"), num(at(30.0, 1.0), "D_2D"));
    l.check(
        "slip: D_2D(30 deg) = 1.86 +- 0.3 at alpha=0.5 and 1.79 +- 0.3 at alpha=1.0",
        (s05 - 1.86).abs() <= 0.3 && (s10 - 1.79).abs() <= 0.3,
        format!("{s05:.4}, {s10:.4}"),
    );

    let grid = log_grid(0.1, 316.0, 36);
    let series = |angle: f64| -> Vec<&HashMap<String, String>> {
        rows.iter()
            .filter(|r| num(r, "angle_deg") == angle && grid.contains(&num(r, "alpha")))
            .collect()
    };
    let mut tan_ok = true;
    let mut flat_ok = true;
    let mut cone_ok = true;
    let mut detail = Vec::new();
    for angle in [15.0, 20.0, 30.0] {
        let etas: Vec<f64> = if angle == 30.0 {
            vec![num(at(30.0, 0.5), "eta"), num(at(30.0, 1.0), "eta")]
        } else {
            series(angle).iter().map(|r| num(r, "eta")).collect()
        };
        let tan = f64::to_radians(angle).tan();
        let (lo, hi) = etas
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(a, b), &e| (a.min(e), b.max(e)));
        tan_ok &= etas.iter().all(|e| (e - tan).abs() <= 0.05);
        flat_ok &= hi - lo <= 0.05;
        cone_ok &= hi < 0.7;
        detail.push(format!("{angle}deg {lo:.4}..{hi:.4} tan {tan:.4}"));
    }
    let detail = detail.join("; ");
    l.check(
        "slip: eta within 0.05 of tan(angle) for 15/20/30 deg",
        tan_ok,
        detail.clone(),
    );
    l.check(
        "slip: eta flat over alpha (spread <= 0.05 per series)",
        flat_ok,
        detail.clone(),
    );
    l.check("slip: eta < mu = 0.7 everywhere", cone_ok, detail);

    let low: Vec<f64> = [15.0, 20.0]
        .iter()
        .map(|&a| num(series(a)[0], "dT_2D"))
        .collect();
    l.check(
        "slip: timing deviation >= 0.5 at the low-alpha end",
        low.iter().all(|&d| d >= 0.5),
        format!("{low:.4?}"),
    );
    let gap = series(15.0)
        .iter()
        .zip(series(20.0))
        .map(|(a, b)| (num(a, "D_2D") - num(b, "D_2D")).abs())
        .fold(0.0, f64::max);
    l.check(
        "slip: 15 and 20 deg D_2D series within 0.15 pointwise",
        gap <= 0.15,
        format!("max gap {gap:.4}"),
    );
}

fn realizability(l: &mut Ledger) {
    let base = TaskParams1D::nominal(1.0);
    let crit = derive_constants(&base).alpha_crit;
    let grid = log_grid(0.1, 316.0, 36);

    let mut short = Vec::new();
    for &a in grid.iter().filter(|&&a| a < 0.9 * crit) {
        let profile = required_command_profile(&base.with_alpha(a)).unwrap();
        if !(profile.out_of_bounds_time > 0.0 && profile.longest_run >= 2) {
            short.push(a);
        }
    }
    l.check(
        "checker: out-of-bounds on >= 2 consecutive samples for every grid alpha < 0.9 alpha_crit",
        short.is_empty(),
        format!("violations at {short:?}"),
    );

    let floor = alpha_infeas(&base);
    let below: Vec<f64> = grid.iter().copied().filter(|&a| a < floor).collect();
    let found: usize = below
        .iter()
        .map(|&a| realizable_subintervals(&base.with_alpha(a), 20).len())
        .sum();
    l.check(
        "checker: no realizable restriction on the 20x20 grid for alpha < alpha_infeas",
        !below.is_empty() && found == 0,
        format!("{} alphas checked, {found} realizable", below.len()),
    );

    let worst = grid
        .iter()
        .map(|&a| {
            let p = base.with_alpha(a);
            let direct = simplified_demand(&p) / p.omega_s - (p.k_max - p.k_min);
            let closed = (p.k_max - p.k_min) * (crit / a - 1.0);
            (saturation_gap(&p) - direct)
                .abs()
                .max((saturation_gap(&p) - closed).abs())
        })
        .fold(0.0, f64::max);
    l.check(
        "checker: saturation gap matches (k_max - k_min)(alpha_crit/alpha - 1) within 1e-9",
        worst <= 1e-9,
        format!("max error {worst:e}"),
    );
}

#[test]
fn acceptance() {
    let root = tempfile::tempdir().unwrap();
    let mut l = Ledger {
        results: Vec::new(),
    };

    let mut csv = HashMap::new();
    let mut identical = Vec::new();
    for e in Experiment::ALL {
        let (rows, same) = run_twice(e, root.path());
        identical.push((e, same));
        csv.insert(e, rows);
    }

    analytic(
        &mut l,
        &csv[&Experiment::Thresholds],
        &csv[&Experiment::Conservative],
    );
    sweep_1d(&mut l, &csv[&Experiment::Sweep1d]);
    robustness(&mut l, &csv[&Experiment::Robustness]);
    slip(&mut l, &csv[&Experiment::Slip2d]);
    realizability(&mut l);
    l.check(
        "determinism: repeated runs give byte-identical CSVs",
        identical.iter().all(|(_, same)| *same),
        format!("{identical:?}"),
    );

    let failing: BTreeSet<&str> = l
        .results
        .iter()
        .filter(|(_, pass)| !pass)
        .map(|(name, _)| name.as_str())
        .collect();
    let passed = l.results.len() - failing.len();
    println!("{passed}/{} criteria pass", l.results.len());
    let expected: BTreeSet<&str> = KNOWN_RED.into_iter().collect();
    assert_eq!(
        failing, expected,
        "failing criteria differ from the documented known reds"
    );
}
