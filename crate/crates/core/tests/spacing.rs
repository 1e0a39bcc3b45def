mod common;

use std::collections::BTreeSet;

use flexplan::modes::Transceiver;
use flexplan::spacing::*;
use flexplan::topology::ChannelIndex;
use flexplan_optim::LpOptions;
use proptest::prelude::{prop, proptest, prop_assert, ProptestConfig};

fn set(v: &[usize]) -> BTreeSet<usize> {
    v.iter().copied().collect()
}

#[test]
fn nearest_neighbors_on_one_link() {
    let ch: Vec<ChannelIndex> = [1, 3, 7, 11, 20].iter().map(|&s| ChannelIndex::new(s, 2)).collect();
    let all: Vec<Vec<usize>> = (0..5).map(|p| (0..5).filter(|&q| q != p).collect()).collect();
    let (y1, y2) = nearest_neighbors(&ch, &all);
    assert_eq!(y1[0], set(&[1]));
    assert_eq!(y2[0], set(&[2]));
    assert_eq!(y1[2], set(&[1, 3]));
    assert_eq!(y2[2], set(&[0, 4]));
    assert_eq!(y1[4], set(&[3]));
    assert_eq!(y2[4], set(&[2]));
}

#[test]
fn second_neighbor_must_share_a_link() {
    // 0 and 2 ride different links that both meet 1.
    let ch: Vec<ChannelIndex> = [1, 3, 5].iter().map(|&s| ChannelIndex::new(s, 2)).collect();
    let sharers = vec![vec![1], vec![0, 2], vec![1]];
    let (y1, y2) = nearest_neighbors(&ch, &sharers);
    assert_eq!(y1[1], set(&[0, 2]));
    assert!(y2[0].is_empty() && y2[2].is_empty());
}

#[test]
fn strategy_text_round_trip() {
    for s in ["cso", "fix:37.5", "can-opt:25,37.5,50", "can-random:25,50@7"] {
        let st: Strategy = s.parse().unwrap();
        assert_eq!(st.spec(), s);
        assert_eq!(st.spec().parse::<Strategy>().unwrap(), st);
    }
    assert_eq!("FIX".parse::<Strategy>().unwrap(), Strategy::Fix { h_ghz: 37.5 });
    assert_eq!("can".parse::<Strategy>().unwrap(), Strategy::CanOpt { set_ghz: vec![25.0, 37.5, 50.0] });
    assert!("fix:-1".parse::<Strategy>().is_err());
    assert!("can-opt:,".parse::<Strategy>().is_err());
    assert!("magic".parse::<Strategy>().is_err());
    assert!("can-random:25@x".parse::<Strategy>().is_err());
    let json = serde_json::to_string(&Strategy::Fix { h_ghz: 50.0 }).unwrap();
    assert_eq!(json, "\"fix:50\"");
    assert_eq!(serde_json::from_str::<Strategy>(&json).unwrap(), Strategy::Fix { h_ghz: 50.0 });
}

fn link_problem(starts: &[usize], w: usize, neighbors: Neighbors) -> SpacingProblem {
    let (ctx, _) = common::p2p(600.0, w, vec![Transceiver::new(16.0, 2)], 20.0);
    let ch: Vec<ChannelIndex> = starts.iter().map(|&s| ChannelIndex::new(s, 2)).collect();
    let cfg = SpacingConfig {
        neighbors,
        ..Default::default()
    };
    SpacingProblem::new(&ctx, &common::on_link(&ctx, &ch), &cfg).unwrap()
}

#[test]
fn nearest_rows_are_linear_in_n() {
    let starts: Vec<usize> = (0..12).map(|i| 1 + 3 * i).collect();
    let q = SpacingConfig::default().q;
    let n = starts.len();
    let near = build_phase4_model(&link_problem(&starts, 60, Neighbors::Nearest), &Strategy::Cso).unwrap();
    let full = build_phase4_model(&link_problem(&starts, 60, Neighbors::All), &Strategy::Cso).unwrap();
    assert!(near.xci_rows <= 4 * q * n);
    assert_eq!(full.xci_rows, q * n * (n - 1));
}

#[test]
fn strategies_are_ordered() {
    let prob = link_problem(&[1, 3, 5, 7, 9, 11, 13, 15], 40, Neighbors::Nearest);
    let lp = LpOptions::default();
    let x = |s: Strategy| optimize_spacing(&prob, &s, &lp).unwrap().x_network_continuous;
    let cso = x(Strategy::Cso);
    let opt = x(Strategy::CanOpt { set_ghz: vec![25.0, 37.5, 50.0] });
    let rnd = x(Strategy::CanRandom { set_ghz: vec![25.0, 37.5, 50.0], seed: 3 });
    assert!(cso <= opt + 1e-9 && opt <= rnd + 1e-9, "{cso} {opt} {rnd}");
}

#[test]
fn fix_fails_exactly_when_the_packing_overflows() {
    // Eight 25 GHz channels at 37.5 GHz need 7·37.5 + 25 = 287.5 GHz = 23 slots.
    let starts = [1, 3, 5, 7, 9, 11, 13, 15];
    let fix = Strategy::Fix { h_ghz: 37.5 };
    let lp = LpOptions::default();
    assert!(optimize_spacing(&link_problem(&starts, 23, Neighbors::Nearest), &fix, &lp).is_ok());
    assert!(matches!(
        optimize_spacing(&link_problem(&starts, 22, Neighbors::Nearest), &fix, &lp),
        Err(SpacingError::Infeasible(_))
    ));
}

#[test]
fn empty_problem_is_trivial() {
    let prob = link_problem(&[], 20, Neighbors::Nearest);
    let sol = optimize_spacing(&prob, &Strategy::Cso, &LpOptions::default()).unwrap();
    assert!(sol.channels.is_empty() && sol.min_q_db() == f64::INFINITY);
}

#[test]
fn cso_spreads_channels_and_lifts_q() {
    let prob = link_problem(&[1, 3, 5, 7, 9], 40, Neighbors::Nearest);
    let before = qot_as_assigned(&prob).into_iter().fold(f64::INFINITY, f64::min);
    let sol = optimize_spacing(&prob, &Strategy::Cso, &LpOptions::default()).unwrap();
    assert!(sol.min_q_db() > before);
    assert!(sol.min_spacing_ghz(&prob).iter().all(|&d| d > 25.0));
    let placed = sol.relocated(&prob);
    assert!(placed.iter().all(|c| c.channel.end() <= prob.w));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rounding_keeps_order_and_exclusivity(offsets in prop::collection::vec(0.0f64..1.0, 5)) {
        let prob = link_problem(&[1, 5, 9, 13, 17], 40, Neighbors::Nearest);
        // Any increasing centers inside the band with legal gaps.
        let mut f = Vec::new();
        let mut c = 12.5;
        for o in &offsets {
            f.push(c);
            c += 25.0 + o * 60.0;
        }
        let r = round_to_grid(&prob, &f).unwrap();
        for w in r.windows(2) {
            prop_assert!(w[1] - w[0] >= 25.0 - 1e-9);
        }
        for (p, &fc) in r.iter().enumerate() {
            let (lo, hi) = prob.center_bounds(p);
            prop_assert!(fc >= lo - 1e-9 && fc <= hi + 1e-9);
            let edge = fc / 12.5 - 1.0;
            prop_assert!((edge - edge.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn lp_bound_is_reached_by_model(starts in prop::collection::btree_set(0usize..14, 2..6)) {
        let starts: Vec<usize> = starts.into_iter().map(|s| 1 + 2 * s).collect();
        let prob = link_problem(&starts, 40, Neighbors::Nearest);
        let pm = build_phase4_model(&prob, &Strategy::Cso).unwrap();
        let out = flexplan_optim::solve_lp(&pm.model, &LpOptions::default());
        let f: Vec<f64> = pm.f.iter().map(|v| out.x[v.0]).collect();
        let model = model_x_network(&prob, &f, Neighbors::Nearest);
        prop_assert!((model - out.objective).abs() <= 1e-6 * model.max(1.0));
    }
}
