mod common;

use proptest::prelude::*;

use agrisc::oracle::variance_raw;
use agrisc::risk::{perspective_cut, perspective_cuts_per_week, plain_cut, variance_gradient, variance_value, LossPoint};
use agrisc::Instance;

fn probabilities(raw: &[f64]) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    raw.iter().map(|r| r / total).collect()
}

fn point_strategy() -> impl Strategy<Value = (LossPoint, Vec<f64>)> {
    (1usize..4, 2usize..5).prop_flat_map(|(weeks, scenarios)| {
        (
            prop::collection::vec(0.0f64..100.0, weeks * scenarios),
            prop::collection::vec(0.05f64..1.0, scenarios),
        )
            .prop_map(move |(loss, raw)| {
                let p = LossPoint::new(weeks, scenarios, loss, vec![1.0; weeks]).unwrap();
                (p, probabilities(&raw))
            })
    })
}

fn rows(p: &LossPoint) -> Vec<Vec<f64>> {
    (0..p.weeks).map(|w| p.week(w).to_vec()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gradient_matches_central_differences((p, rho) in point_strategy()) {
        let g = variance_gradient(&p, &rho, p.weeks).unwrap();
        for i in 0..p.loss.len() {
            let h = 1e-3 * p.loss[i].abs().max(1.0);
            let mut up = p.clone();
            let mut down = p.clone();
            up.loss[i] += h;
            down.loss[i] -= h;
            let fd = (variance_value(&up, &rho, p.weeks).unwrap() - variance_value(&down, &rho, p.weeks).unwrap()) / (2.0 * h);
            prop_assert!((g[i] - fd).abs() <= 1e-6 * g[i].abs().max(1.0), "index {i}: {} vs {fd}", g[i]);
        }
    }

    #[test]
    fn variance_agrees_with_raw_moment_form((p, rho) in point_strategy()) {
        let a = variance_value(&p, &rho, p.weeks).unwrap();
        let b = variance_raw(&rows(&p), &rho);
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0), "{a} vs {b}");
    }

    #[test]
    fn cut_at_generating_point_equals_excess((p, rho) in point_strategy(), frac in 0.0f64..0.99) {
        let var = variance_value(&p, &rho, p.weeks).unwrap();
        prop_assume!(var > 1e-6);
        let cap = frac * var;
        for cut in [perspective_cut(&p, &rho, p.weeks, cap).unwrap(), plain_cut(&p, &rho, p.weeks, cap).unwrap()] {
            let lhs = cut.lhs_at(&p);
            prop_assert!((lhs - (var - cap)).abs() <= 1e-9 * var.max(1.0), "{lhs} vs {}", var - cap);
            prop_assert!(lhs > 0.0);
        }
    }

    #[test]
    fn perspective_cut_never_cuts_off_a_feasible_point(
        (gen, rho) in point_strategy(),
        other in prop::collection::vec(0.0f64..100.0, 12),
        off in prop::collection::vec(any::<bool>(), 3),
        slack in 0.0f64..10.0,
    ) {
        let (w, s) = (gen.weeks, gen.scenarios);
        let mut loss = other[..w * s].to_vec();
        let mut delta = vec![1.0; w];
        for week in 0..w {
            if off[week] {
                delta[week] = 0.0;
                loss[week * s..(week + 1) * s].iter_mut().for_each(|l| *l = 0.0);
            }
        }
        let x = LossPoint::new(w, s, loss, delta).unwrap();
        // a cap the candidate point satisfies
        let cap = variance_value(&x, &rho, w).unwrap() + slack;
        let agg = perspective_cut(&gen, &rho, w, cap).unwrap();
        prop_assert!(agg.lhs_at(&x) <= 1e-7 * cap.max(1.0), "aggregated {}", agg.lhs_at(&x));
        for cut in perspective_cuts_per_week(&gen, &rho, w, cap).unwrap() {
            prop_assert!(cut.lhs_at(&x) <= 1e-7 * cap.max(1.0), "per week {}", cut.lhs_at(&x));
        }
    }
}

#[test]
fn hand_pattern_is_exact_in_both_modules() {
    let rho = [0.35, 0.15, 0.5];
    let p = LossPoint::new(2, 3, vec![5.0, 0.0, 5.0, 0.0, 0.0, 0.0], vec![1.0, 1.0]).unwrap();
    assert_eq!(variance_value(&p, &rho, 2).unwrap(), 1.59375);
    assert_eq!(variance_raw(&rows(&p), &rho), 1.59375);
}

#[test]
fn mccormick_rows_pin_the_product_on_the_case_study() {
    let n = common::mccormick_intervals_are_points(&Instance::case_study());
    assert!(n > 0);
}
