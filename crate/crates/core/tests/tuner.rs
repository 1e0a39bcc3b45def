mod common;

use flexplan::spacing::Strategy;
use flexplan::tuner::*;

#[test]
fn thirty_channel_example_gains_one_mode_step() {
    let (ctx, demand) = common::thirty();
    let res = tune(&ctx, &demand, &TuneConfig::default()).unwrap();
    assert_eq!(res.ep.th(), 3375.0);
    assert_eq!(res.jp.th(), 3750.0);
    assert!(res.jp.min_q_db() >= 0.0);
    assert!(res.jp.placed.iter().all(|c| c.mode == 1));
    assert_eq!(res.trace.records[0].reduction_db, 0.0);
}

#[test]
fn margins_fall_monotonically_and_stop_after_failure() {
    let (ctx, demand) = common::thirty();
    let res = tune(&ctx, &demand, &TuneConfig::default()).unwrap();
    let recs = &res.trace.records;
    for w in recs.windows(2) {
        assert!(w[1].reduction_db > w[0].reduction_db);
        assert!(w[1].max_margin_db <= w[0].max_margin_db);
    }
    // Only the last record may be non-feasible.
    assert!(recs[..recs.len() - 1].iter().all(|r| r.status == IterStatus::Feasible));
    let mut csv = Vec::new();
    res.trace.write_csv(&mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), recs.len() + 1);
}

#[test]
fn coarse_step_ends_quickly() {
    let (ctx, demand) = common::thirty();
    let cfg = TuneConfig {
        delta_m_db: 50.0,
        ..Default::default()
    };
    let res = tune(&ctx, &demand, &cfg).unwrap();
    assert!(res.trace.records.len() <= 2);
    assert!(res.jp.th() >= res.ep.th());
}

#[test]
fn fixed_spacing_keeps_worst_case_plan() {
    let (ctx, demand) = common::thirty();
    let cfg = TuneConfig {
        strategy: Strategy::Fix { h_ghz: 37.5 },
        ..Default::default()
    };
    let res = tune(&ctx, &demand, &cfg).unwrap();
    assert_eq!(res.ep.th(), 3375.0);
    assert_eq!(res.jp.th(), 3375.0);
}

#[test]
fn nonpositive_step_is_rejected() {
    let (ctx, demand) = common::thirty();
    let cfg = TuneConfig {
        delta_m_db: 0.0,
        ..Default::default()
    };
    assert!(matches!(tune(&ctx, &demand, &cfg), Err(TuneError::Step(_))));
}

#[test]
fn jp_never_below_ep_on_ring() {
    let (ctx, demand) = common::ring(0.4, 25.0);
    let res = tune(&ctx, &demand, &TuneConfig::default()).unwrap();
    assert!(res.jp.th() >= res.ep.th());
    assert!(res.jp.min_q_db() >= 0.0);
    res.jp.throughput.state.validate(&ctx.net, &demand, ctx.net.w_cur).unwrap();
}
