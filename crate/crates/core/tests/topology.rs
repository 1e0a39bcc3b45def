use flexplan::topology::*;
use proptest::prelude::*;

#[test]
fn ring_routes_both_ways_round() {
    let net = Network::bundled("ring4").unwrap();
    let routes = k_shortest_paths(&net, 0, 1, 2);
    assert_eq!(routes.len(), 2);
    assert_eq!(routes[0].length_km, 400.0);
    assert_eq!(routes[1].length_km, 1200.0);
    assert_eq!(routes[0].n_spans, 4);
    assert_eq!(routes[1].n_spans, 12);
    assert!(routes.iter().all(|r| r.is_loopless() && r.nodes.first() == Some(&0) && r.nodes.last() == Some(&1)));

    let opposite = k_shortest_paths(&net, 0, 2, 3);
    assert_eq!(opposite.len(), 2, "a ring has exactly two loopless paths");
    assert!(opposite.iter().all(|r| r.length_km == 800.0));
}

#[test]
fn yen_on_cost239_is_sorted_and_distinct() {
    let net = Network::bundled("cost239").unwrap();
    for (s, d) in [(0, 5), (3, 9), (10, 1)] {
        let routes = k_shortest_paths(&net, s, d, 5);
        assert_eq!(routes.len(), 5);
        for w in routes.windows(2) {
            assert!(w[0].length_km <= w[1].length_km + 1e-9);
            assert_ne!(w[0].nodes, w[1].nodes);
        }
        for r in &routes {
            assert!(r.is_loopless());
            let total: f64 = r.links.iter().map(|&l| net.links[l].length_km).sum();
            assert!((total - r.length_km).abs() < 1e-6);
        }
    }
}

#[test]
fn spans_round_up() {
    let net = Network::new("t", vec!["a".into(), "b".into(), "c".into()], &[(0, 1, 450.0), (1, 2, 100.0)], 100.0, 12.5, 40).unwrap();
    assert_eq!(net.links[0].n_spans, 5);
    assert_eq!(net.links[1].n_spans, 1);
    let r = k_shortest_paths(&net, 0, 2, 1);
    assert_eq!(r[0].n_spans, 6);
}

#[test]
fn channel_enumeration_counts() {
    assert_eq!(enumerate_channels(2, 60).len(), 59);
    assert_eq!(enumerate_channels(4, 60).len(), 57);
    assert!(enumerate_channels(7, 6).is_empty());
    assert_eq!(enumerate_channels_strided(2, 60, 2).len(), 30);
    let first = enumerate_channels(3, 10)[0];
    assert_eq!((first.start, first.end()), (1, 3));
    assert_eq!(first.center_ghz(12.5), 18.75);
}

#[test]
fn load_sets_w_cur() {
    let net = Network::bundled("ring4").unwrap();
    assert_eq!(net.w, 60);
    assert_eq!(net.with_load(0.2).w_cur, 12);
    assert_eq!(net.with_load(1.0).w_cur, 60);
    assert_eq!(net.with_load(0.0).w_cur, 1);
}

#[test]
fn malformed_topologies_are_rejected() {
    let names = || vec!["a".to_string(), "b".to_string()];
    assert!(matches!(Network::new("t", names(), &[(0, 0, 1.0)], 100.0, 12.5, 8), Err(TopologyError::SelfLoop(_))));
    assert!(matches!(Network::new("t", names(), &[(0, 1, -3.0)], 100.0, 12.5, 8), Err(TopologyError::NonPositiveLength { .. })));
    assert!(matches!(Network::new("t", names(), &[(0, 1, 1.0), (1, 0, 2.0)], 100.0, 12.5, 8), Err(TopologyError::DuplicateLink { .. })));
    assert!(matches!(Network::new("t", names(), &[(0, 2, 1.0)], 100.0, 12.5, 8), Err(TopologyError::DanglingEndpoint { .. })));
    assert!(matches!(Network::new("t", names(), &[(0, 1, 1.0)], 100.0, 12.5, 0), Err(TopologyError::Grid(_))));
    let bad = r#"{"nodes":["a"],"links":[{"u":"a","v":"z","length_km":5}],"span_km":100,"f_grid_ghz":12.5,"W":8}"#;
    assert!(matches!(Network::from_json_str(bad), Err(TopologyError::DanglingEndpoint { .. })));
    assert!(Network::bundled("atlantis").is_err());
    for name in BUNDLED {
        Network::bundled(name).unwrap();
    }
}

proptest! {
    #[test]
    fn overlap_matches_masks(a in 1usize..40, wa in 1usize..6, b in 1usize..40, wb in 1usize..6) {
        let (x, y) = (ChannelIndex::new(a, wa), ChannelIndex::new(b, wb));
        let (mx, my) = (x.mask(50), y.mask(50));
        let shared = mx.iter().zip(my.iter()).any(|(p, q)| *p && *q);
        prop_assert_eq!(x.overlaps(&y), shared);
        prop_assert_eq!(mx.count_ones(), wa);
    }

    #[test]
    fn occupancy_refuses_overlap(chs in prop::collection::vec((1usize..20, 1usize..4), 1..12)) {
        let mut occ = Occupancy::new(1, 24);
        let mut placed: Vec<ChannelIndex> = Vec::new();
        for (s, w) in chs {
            let ch = ChannelIndex::new(s, w);
            let free = placed.iter().all(|p| !p.overlaps(&ch));
            prop_assert_eq!(occ.try_occupy(&[0], &ch), free);
            if free {
                placed.push(ch);
            }
        }
    }
}
