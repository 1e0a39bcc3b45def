use flexplan::report::{summary, write_report, FILES};
use flexplan::scenario::*;
use flexplan::spacing::Strategy;
use flexplan::throughput::{BaudPolicy, Engine};
use flexplan::topology::Network;
use flexplan::Exec;

#[test]
fn policy_text() {
    for (s, p) in [("16", Policy::Single(16)), ("lb", Policy::Lb), ("RB", Policy::Rb), ("hb", Policy::Hb)] {
        assert_eq!(s.parse::<Policy>().unwrap(), p);
    }
    assert!("17".parse::<Policy>().is_err());
    assert!("xb".parse::<Policy>().is_err());
    assert_eq!(Policy::Hb.baud_policy(), BaudPolicy::Hb);
    assert_eq!(Policy::Single(32).transceivers().unwrap().len(), 1);
    assert_eq!(Policy::Lb.transceivers().unwrap().len(), 3);
}

#[test]
fn scenario_json_defaults_and_rejections() {
    let s: Scenario = serde_json::from_str(r#"{"name":"x","policies":["lb","64"],"strategies":["cso","fix:50"]}"#).unwrap();
    assert_eq!(s.topology, "ring4");
    assert_eq!(s.policies, vec![Policy::Lb, Policy::Single(64)]);
    assert_eq!(s.strategies[1], Strategy::Fix { h_ghz: 50.0 });
    assert_eq!(s.cells().len(), 5 * 2 * 2);
    assert!(serde_json::from_str::<Scenario>(r#"{"colour":"red"}"#).is_err());

    let round: Scenario = serde_json::from_str(&serde_json::to_string(&Scenario::p2p()).unwrap()).unwrap();
    assert_eq!(round, Scenario::p2p());

    for bad in [
        Scenario { loads: vec![1.5], ..Scenario::default() },
        Scenario { k: 0, ..Scenario::default() },
        Scenario { delta_m_db: 0.0, ..Scenario::default() },
        Scenario { psd_uw_per_ghz: vec![], ..Scenario::default() },
        Scenario { gap: -1.0, ..Scenario::default() },
    ] {
        assert!(bad.validate().is_err());
    }
}

#[test]
fn engine_follows_topology_degree() {
    let s = Scenario::default();
    assert_eq!(s.engine_for(&Network::bundled("ring4").unwrap()), Engine::Ilp);
    assert_eq!(s.engine_for(&Network::bundled("cost239").unwrap()), Engine::Heuristic);
    let forced = Scenario { engine: Some(Engine::Ilp), ..s };
    assert_eq!(forced.engine_for(&Network::bundled("nsf").unwrap()), Engine::Ilp);
}

#[test]
fn empty_bundle_writes_headers_only() {
    let dir = tempdir("empty");
    let files = write_report(&ResultBundle::empty(Scenario::default()), &dir).unwrap();
    assert_eq!(files.len(), FILES.len());
    for f in &files[..FILES.len() - 1] {
        assert_eq!(std::fs::read_to_string(f).unwrap().lines().count(), 1, "{}", f.display());
    }
}

#[test]
fn failed_cells_are_isolated() {
    let s = Scenario {
        topology: "p2p600".into(),
        loads: vec![],
        demand: DemandSpec::Pair("A".into(), "Z".into()),
        ..Scenario::default()
    };
    let b = run_scenario(&s, Exec::Sequential).unwrap();
    assert!(b.is_partial());
    assert_eq!(b.ok_cells().count(), 0);
    assert!(summary(&b).contains("FAILED"));
}

#[test]
fn p2p_sweep_is_deterministic() {
    let s = Scenario::p2p();
    let a = run_scenario(&s, Exec::Parallel).unwrap();
    let b = run_scenario(&s, Exec::Sequential).unwrap();
    assert_eq!(a, b);
    let (da, db) = (tempdir("det_a"), tempdir("det_b"));
    write_report(&a, &da).unwrap();
    write_report(&b, &db).unwrap();
    for f in FILES {
        assert_eq!(std::fs::read(da.join(f)).unwrap(), std::fs::read(db.join(f)).unwrap(), "{f}");
    }
    let text = summary(&a);
    assert!(text.contains("EP=3375 Gbps JP=3750 Gbps"));

    let json = serde_json::to_string(&a).unwrap();
    let back: ResultBundle = serde_json::from_str(&json).unwrap();
    assert_eq!(summary(&back), text);

    let (k, d) = a.ok_cells().next().unwrap();
    assert_eq!(k.strategy, Strategy::Cso);
    assert_eq!(d.jp.slot_usage.iter().filter(|&&n| n > 0).count(), 60);
    assert_eq!(d.ep.modes.values().sum::<usize>(), 30);
    let sp = d.jp.spacing.unwrap();
    assert!(sp.min_ghz >= 25.0 && sp.min_ghz <= sp.avg_ghz && sp.avg_ghz <= sp.max_ghz);
}

fn tempdir(tag: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("flexplan_{tag}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}
