use multiexpr::nfl::{compare, from_real, nfl_run, to_real, AlgorithmSpec, NflBudget};
use multiexpr::rng::seeded;
use proptest::prelude::*;

fn specs() -> [AlgorithmSpec; 4] {
    [AlgorithmSpec::a1(), AlgorithmSpec::a2(), AlgorithmSpec::a3(), AlgorithmSpec::a4()]
}

#[test]
fn constant_functions_tie_exactly() {
    let mut rng = seeded(1);
    for a in &specs() {
        for b in &specs() {
            let c = compare(a, b, &mut |_| 0.0, 20, NflBudget::default(), &mut rng);
            assert_eq!(c.mean, 0.0);
        }
    }
}

#[test]
fn cubic_separates_a2_from_a1() {
    let c = compare(&AlgorithmSpec::a2(), &AlgorithmSpec::a1(), &mut |x| -6.0 * x.powi(3) - x, 300, NflBudget::default(), &mut seeded(3));
    assert!(c.mean < 0.0 && c.mean.abs() > 3.0 * c.std_error);
}

proptest! {
    #[test]
    fn archive_reaches_budget(seed in any::<u64>(), steps in 1usize..300, k in 0usize..4) {
        let budget = NflBudget { max_steps: steps, ..NflBudget::default() };
        let t = nfl_run(&specs()[k], &mut |x| (x - 0.3).abs(), budget, &mut seeded(seed));
        prop_assert_eq!(t.archive_size, steps);
        prop_assert_eq!(t.best_so_far.len(), steps);
        prop_assert!(t.best_so_far.windows(2).all(|w| w[1] <= w[0]));
        prop_assert_eq!(t.best, *t.best_so_far.last().unwrap());
    }

    #[test]
    fn fixed_point_round_trip(x in 0.0f64..=1.0) {
        prop_assert_eq!(from_real(to_real(from_real(x))), from_real(x));
    }
}
