use flexplan_optim::{solve_milp, Cmp, LinearModel, MilpOptions, MilpStatus, Sense, VarKind};
use proptest::prelude::*;

fn knapsack(values: &[f64], weights: &[Vec<f64>], caps: &[f64]) -> LinearModel {
    let mut m = LinearModel::new("knap", Sense::Maximize);
    let xs: Vec<_> = (0..values.len()).map(|j| m.add_binary(format!("x{j}"))).collect();
    for (k, (w, &cap)) in weights.iter().zip(caps).enumerate() {
        m.add_constraint(
            format!("cap{k}"),
            xs.iter().zip(w).map(|(&x, &wj)| (x, wj)).collect(),
            Cmp::Le,
            cap,
        );
    }
    m.set_objective(xs.iter().zip(values).map(|(&x, &v)| (x, v)).collect());
    m
}

fn enumerate_best(values: &[f64], weights: &[Vec<f64>], caps: &[f64]) -> f64 {
    let n = values.len();
    let mut best = 0.0f64;
    for mask in 0u32..(1 << n) {
        let fits = weights.iter().zip(caps).all(|(w, &cap)| {
            (0..n).filter(|j| mask >> j & 1 == 1).map(|j| w[j]).sum::<f64>() <= cap + 1e-9
        });
        if fits {
            let v: f64 = (0..n).filter(|j| mask >> j & 1 == 1).map(|j| values[j]).sum();
            best = best.max(v);
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn knapsack_matches_enumeration(
        n in 3usize..11,
        k in 1usize..3,
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(1..30) as f64).collect();
        let weights: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..n).map(|_| rng.gen_range(1..20) as f64).collect())
            .collect();
        let caps: Vec<f64> = weights.iter().map(|w| (w.iter().sum::<f64>() * 0.45).round()).collect();
        let m = knapsack(&values, &weights, &caps);
        let res = solve_milp(&m, &MilpOptions::default(), None);
        prop_assert_eq!(res.status, MilpStatus::Optimal);
        let expect = enumerate_best(&values, &weights, &caps);
        prop_assert!((res.objective.unwrap() - expect).abs() < 1e-6);
        let x = res.values.unwrap();
        prop_assert!(m.max_violation(&x) < 1e-6);
        prop_assert!(m.is_integral(&x, 1e-9));
    }
}

#[test]
fn general_integers_and_continuous_mix() {
    // max 5a + 4b + c st 6a + 4b <= 24, a + 2b <= 6, c <= 1.5, a,b integer
    let mut m = LinearModel::new("mix", Sense::Maximize);
    let a = m.add_var("a", VarKind::Integer, 0.0, 10.0);
    let b = m.add_var("b", VarKind::Integer, 0.0, 10.0);
    let c = m.add_continuous("c", 0.0, 1.5);
    m.add_constraint("r1", vec![(a, 6.0), (b, 4.0)], Cmp::Le, 24.0);
    m.add_constraint("r2", vec![(a, 1.0), (b, 2.0)], Cmp::Le, 6.0);
    m.set_objective(vec![(a, 5.0), (b, 4.0), (c, 1.0)]);
    let res = solve_milp(&m, &MilpOptions::default(), None);
    assert_eq!(res.status, MilpStatus::Optimal);
    // Integer points: (4,0)=20, (3,1)=19, (2,2)=18 -> 20 + 1.5
    assert!((res.objective.unwrap() - 21.5).abs() < 1e-9);
}

#[test]
fn infeasible_integer_program() {
    let mut m = LinearModel::new("odd", Sense::Minimize);
    let x = m.add_var("x", VarKind::Integer, 0.0, 10.0);
    let y = m.add_var("y", VarKind::Integer, 0.0, 10.0);
    m.add_constraint("even", vec![(x, 2.0), (y, 2.0)], Cmp::Eq, 3.0);
    m.set_objective(vec![(x, 1.0)]);
    let res = solve_milp(&m, &MilpOptions::default(), None);
    assert_eq!(res.status, MilpStatus::Infeasible);
    assert!(res.values.is_none());
}

#[test]
fn seeded_incumbent_is_reported_and_improved() {
    let values = [10.0, 13.0, 7.0, 8.0, 9.0, 4.0];
    let weights = vec![vec![5.0, 7.0, 4.0, 4.0, 5.0, 2.0]];
    let m = knapsack(&values, &weights, &[13.0]);
    let seed = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let res = solve_milp(&m, &MilpOptions::default(), Some(&seed));
    assert_eq!(res.trace[0].objective, 10.0);
    assert!(res.trace.windows(2).all(|w| w[1].objective > w[0].objective));
    assert_eq!(res.objective.unwrap(), enumerate_best(&values, &weights, &[13.0]));
}

#[test]
fn relative_gap_stops_early_with_valid_bound() {
    let values: Vec<f64> = (0..14).map(|j| 10.0 + (j * 7 % 11) as f64).collect();
    let weights = vec![(0..14).map(|j| 5.0 + (j * 5 % 9) as f64).collect::<Vec<_>>()];
    let m = knapsack(&values, &weights, &[40.0]);
    let opts = MilpOptions {
        rel_gap: 0.05,
        ..MilpOptions::default()
    };
    let res = solve_milp(&m, &opts, None);
    let exact = enumerate_best(&values, &weights, &[40.0]);
    let z = res.objective.unwrap();
    assert!(matches!(res.status, MilpStatus::Optimal | MilpStatus::GapFeasible));
    assert!(z >= exact * 0.95 - 1e-9);
    assert!(res.bound >= exact - 1e-9);
    assert!(res.gap <= 0.05 + 1e-12);
}

#[test]
fn node_limit_reports_limit() {
    let values: Vec<f64> = (0..20).map(|j| 10.0 + (j * 7 % 11) as f64).collect();
    let weights = vec![(0..20).map(|j| 5.0 + (j * 5 % 9) as f64).collect::<Vec<_>>()];
    let m = knapsack(&values, &weights, &[57.0]);
    let opts = MilpOptions {
        node_limit: 1,
        heuristic_every: 0,
        ..MilpOptions::default()
    };
    let res = solve_milp(&m, &opts, None);
    assert_eq!(res.status, MilpStatus::Limit);
    assert_eq!(res.nodes, 1);
}
