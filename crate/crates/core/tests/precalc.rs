mod common;

use flexplan::precalc::*;
use flexplan::topology::ChannelIndex;

#[test]
fn candidate_count_bound() {
    let (ctx, demand) = common::ring(0.4, 25.0);
    let opts = PrecalcOptions {
        prune_dominated: false,
        ..Default::default()
    };
    let all = precalculate(&ctx, &demand.pairs(), &MarginAssignment::Uniform(0.0), &opts);
    let pruned = precalculate(&ctx, &demand.pairs(), &MarginAssignment::Uniform(0.0), &PrecalcOptions::default());
    let channels = ctx.net.w_cur - 1;
    // pairs × routes × channels × modes
    assert!(all.len() <= demand.len() * 2 * channels * ctx.catalog.len());
    assert_eq!(pruned.len(), demand.len() * 2 * channels, "every route reaches some mode");
    assert!(pruned.len() < all.len());
    assert!(all.candidates.iter().enumerate().all(|(i, c)| c.id == i));
    assert!(all.candidates.iter().all(|c| c.channel.end() <= ctx.net.w_cur));
}

#[test]
fn adopted_modes_clear_their_budget() {
    let (ctx, demand) = common::ring(1.0, 25.0);
    let cands = precalculate(&ctx, &demand.pairs(), &MarginAssignment::WorstCase { reduction_db: 0.0 }, &PrecalcOptions::default());
    for c in &cands.candidates {
        let budget = c.snr_best_db - c.margin_db;
        assert!(ctx.catalog.threshold_db(c.mode) <= budget + 1e-12);
        assert_eq!(Some(c.mode), ctx.catalog.best_mode(budget, &ctx.transceivers[c.trx]));
        assert_eq!(c.margin_db, ctx.worst.get(&c.channel));
    }
}

#[test]
fn capacity_grows_as_margins_shrink() {
    let (ctx, demand) = common::ring(0.4, 25.0);
    let total = |red: f64| -> f64 {
        precalculate(&ctx, &demand.pairs(), &MarginAssignment::WorstCase { reduction_db: red }, &PrecalcOptions::default())
            .candidates
            .iter()
            .map(|c| c.capacity)
            .sum()
    };
    let caps: Vec<f64> = [0.0, 0.5, 1.0, 2.0, 10.0].iter().map(|&r| total(r)).collect();
    assert!(caps.windows(2).all(|w| w[1] >= w[0]), "{caps:?}");
    assert!(caps[4] > caps[0]);
}

#[test]
fn worst_case_margin_clamps_at_zero() {
    let (ctx, _) = common::ring(1.0, 25.0);
    let ch = ChannelIndex::new(30, 2);
    let x = ctx.worst.get(&ch);
    assert!(x > 0.0 && x <= ctx.worst.max_db());
    assert_eq!(MarginAssignment::WorstCase { reduction_db: x + 1.0 }.margin_db(&ctx.worst, &ch), 0.0);
    assert!((MarginAssignment::WorstCase { reduction_db: 0.25 }.margin_db(&ctx.worst, &ch) - (x - 0.25)).abs() < 1e-12);
    assert_eq!(MarginAssignment::Uniform(-2.0).margin_db(&ctx.worst, &ch), 0.0);
}

#[test]
fn stride_thins_channels() {
    let (ctx, demand) = common::ring(1.0, 25.0);
    let opts = PrecalcOptions {
        stride: 2,
        ..Default::default()
    };
    let cands = precalculate(&ctx, &demand.pairs(), &MarginAssignment::Uniform(0.0), &opts);
    assert!(cands.candidates.iter().all(|c| c.channel.start % 2 == 1));
}

#[test]
fn unreachable_pairs_are_reported() {
    // 5000 km at 5 μW/GHz leaves no mode above threshold.
    let (ctx, demand) = common::p2p(5000.0, 40, vec![flexplan::modes::Transceiver::new(16.0, 2)], 5.0);
    let cands = precalculate(&ctx, &demand.pairs(), &MarginAssignment::Uniform(0.0), &PrecalcOptions::default());
    assert!(cands.is_empty());
    assert_eq!(cands.unreachable, vec![(0, 1)]);
}

#[test]
fn csv_has_one_row_per_candidate() {
    let (ctx, demand) = common::ring(0.2, 25.0);
    let cands = precalculate(&ctx, &demand.pairs(), &MarginAssignment::Uniform(0.0), &PrecalcOptions::default());
    let mut buf = Vec::new();
    cands.write_csv(&ctx, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), cands.len() + 1);
}
