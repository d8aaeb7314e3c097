use impedance_feasibility::analysis::{larger_root, quadratic_residual, saturation_gap};
use impedance_feasibility::cli::run::fmt_f64;
use impedance_feasibility::hop1d::rollout;
use impedance_feasibility::params::{derive_constants, ControllerKind, TaskParams1D};
use impedance_feasibility::slip2d::{slip_rollout, SlipParams};
use impedance_feasibility::sweep::{alpha_50, log_grid};
use proptest::prelude::*;

fn task() -> impl Strategy<Value = TaskParams1D> {
    (
        0.5..2.0f64,
        0.2..0.4f64,
        50.0..100.0f64,
        300.0..800.0f64,
        1.0..3.0f64,
        0.1..300.0f64,
    )
        .prop_map(|(m, t, k_min, k_max, v, alpha)| {
            TaskParams1D {
                m,
                t_stance: t,
                k_min,
                k_max,
                v_td: v,
                ..TaskParams1D::nominal(1.0)
            }
            .with_alpha(alpha)
        })
}

fn controller() -> impl Strategy<Value = ControllerKind> {
    prop_oneof![
        Just(ControllerKind::ParamBased),
        Just(ControllerKind::StiffnessAsState),
        (0.0..1.0f64).prop_map(|f| ControllerKind::ConservativeParamBased { k_max_prime: f }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn realized_stiffness_stays_in_range(p in task(), kind in controller()) {
        let kind = match kind {
            ControllerKind::ConservativeParamBased { k_max_prime: f } => ControllerKind::ConservativeParamBased {
                k_max_prime: p.k_min + f * (p.k_max - p.k_min),
            },
            other => other,
        };
        let r = rollout(&p, kind).unwrap();
        // the lag approaches a clipped command from one side; allow integrator error only
        let tol = 1e-7 * p.k_max;
        for &k in &r.realized.k {
            prop_assert!(k >= p.k_min - tol && k <= p.k_max + tol, "k = {k}");
        }
        prop_assert!(r.d_alpha >= 0.0 && r.dt_alpha >= 0.0);
    }

    #[test]
    fn stiffness_as_state_has_no_mismatch(p in task()) {
        let r = rollout(&p, ControllerKind::StiffnessAsState).unwrap();
        prop_assert!(r.d_alpha <= 1e-6 && r.dt_alpha <= 1e-6);
    }

    #[test]
    fn threshold_ignores_velocity_and_gravity(p in task(), v in 0.5..4.0f64, g in 1.0..25.0f64) {
        let mut q = p.with_touchdown_velocity(v);
        q.g = g;
        prop_assert_eq!(derive_constants(&p).alpha_crit, derive_constants(&q).alpha_crit);
    }

    #[test]
    fn saturation_gap_closed_form(p in task()) {
        let c = derive_constants(&p);
        let closed = (p.k_max - p.k_min) * (c.alpha_crit / p.alpha() - 1.0);
        prop_assert!((saturation_gap(&p) - closed).abs() <= 1e-9 * closed.abs().max(1.0));
    }

    #[test]
    fn larger_root_solves_quadratic(k_min in 10.0..200.0f64, scale in 4.0..1e3f64) {
        let a = scale * k_min;
        let k = larger_root(a, k_min).unwrap();
        prop_assert!(quadratic_residual(a, k_min, k).abs() < 1e-9 * a * a);
        prop_assert!(k >= a / 2.0);
    }

    #[test]
    fn no_root_below_discriminant_zero(k_min in 10.0..200.0f64, frac in 0.01..0.99f64) {
        prop_assert_eq!(larger_root(frac * 4.0 * k_min, k_min), None);
    }

    #[test]
    fn grid_is_monotone_with_exact_ends(lo in 1e-3..1.0f64, span in 1.5..1e4f64, n in 2usize..80) {
        let g = log_grid(lo, lo * span, n);
        prop_assert_eq!(g.len(), n);
        prop_assert_eq!(g[0], lo);
        prop_assert_eq!(g[n - 1], lo * span);
        prop_assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn crossing_lies_in_its_bracket(d in prop::collection::vec(0.0..1.0f64, 3..20)) {
        let mut d = d;
        d.sort_by(|a, b| b.total_cmp(a));
        let alphas = log_grid(0.1, 316.0, d.len());
        let series: Vec<(f64, f64)> = alphas.iter().copied().zip(d.iter().copied()).collect();
        match alpha_50(&series) {
            Ok(a) => {
                let i = series.iter().rposition(|s| s.1 >= 0.5).unwrap();
                prop_assert!(a >= series[i].0 * (1.0 - 1e-12));
                if i + 1 < series.len() {
                    prop_assert!(a <= series[i + 1].0 * (1.0 + 1e-12));
                }
            }
            Err(_) => prop_assert!(d.iter().all(|&x| x < 0.5) || d.iter().all(|&x| x > 0.5)),
        }
    }

    #[test]
    fn numbers_round_trip(x in prop::num::f64::NORMAL | prop::num::f64::ZERO | prop::num::f64::SUBNORMAL) {
        prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn friction_ratio_is_leg_tangent(deg in 5.0..35.0f64, alpha in 0.1..316.0f64) {
        let p = SlipParams::nominal(alpha).with_angle_deg(deg);
        let r = slip_rollout(&p, ControllerKind::ParamBased).unwrap();
        let t = &r.realized;
        let max_tan = t.x.iter().zip(&t.y).map(|(x, y)| (x - t.x_foot).abs() / y).fold(0.0, f64::max);
        prop_assert!(r.observables.eta <= max_tan + 1e-9);
        prop_assert!(r.observables.eta >= p.alpha_td.tan() - 0.02);
        prop_assert!(r.energy_gain(&p) <= 0.05);
    }

    #[test]
    fn friction_ratio_peaks_at_touchdown(deg in 10.0..30.0f64, alpha in 0.1..316.0f64) {
        let p = SlipParams::nominal(alpha).with_angle_deg(deg);
        let r = slip_rollout(&p, ControllerKind::ParamBased).unwrap();
        prop_assert!(r.observables.eta <= p.alpha_td.tan() + 1e-9);
    }
}
