use flexplan_optim::{export_model, import_model, Cmp, LinearModel, Sense, VarKind};
use proptest::prelude::*;

#[test]
fn parses_hand_written_file() {
    let text = "\\ Problem name: toy
Maximize
 obj: 2 x + 3 y - z
Subject To
 c1: x + y <= 4
 c2: x - 2 z >= -1.5
 c3: y + z = 2
Bounds
 0 <= x <= 3
 y free
 z >= 0.5
Binaries
 b
End
";
    let m = import_model(text).unwrap();
    assert_eq!(m.name, "toy");
    assert_eq!(m.sense, Sense::Maximize);
    let names: Vec<_> = m.vars.iter().map(|v| v.name.as_str()).collect();
    assert_eq!(names, ["x", "y", "z", "b"]);
    assert_eq!(m.vars[1].lb, f64::NEG_INFINITY);
    assert_eq!(m.vars[2].lb, 0.5);
    assert_eq!(m.vars[3].kind, VarKind::Binary);
    assert_eq!(m.constraints[1].terms[1].1, -2.0);
    assert_eq!(m.constraints[1].rhs, -1.5);
    assert_eq!(m.constraints[2].cmp, Cmp::Eq);
}

#[test]
fn rejects_missing_comparison() {
    let text = "Minimize\n obj: x\nSubject To\n c: x + y\nEnd\n";
    assert!(import_model(text).is_err());
}

fn random_model() -> impl Strategy<Value = LinearModel> {
    (1usize..15, 0usize..12, any::<bool>(), any::<u64>()).prop_map(|(n, m, max, seed)| {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut model = LinearModel::new("rt", if max { Sense::Maximize } else { Sense::Minimize });
        let vars: Vec<_> = (0..n)
            .map(|j| match rng.gen_range(0..4) {
                0 => model.add_binary(format!("b_{j}")),
                1 => model.add_var(format!("g_{j}"), VarKind::Integer, -3.0, 9.0),
                2 => model.add_continuous(format!("f_{j}"), f64::NEG_INFINITY, f64::INFINITY),
                _ => model.add_continuous(format!("c_{j}"), rng.gen_range(-1.0..1.0), 1e6 * rng.gen::<f64>()),
            })
            .collect();
        for i in 0..m {
            let terms = (0..rng.gen_range(0..20))
                .map(|_| (vars[rng.gen_range(0..n)], rng.gen_range(-1e3..1e3) * rng.gen::<f64>()))
                .collect();
            let cmp = [Cmp::Le, Cmp::Ge, Cmp::Eq][rng.gen_range(0..3)];
            model.add_constraint(format!("row_{i}"), terms, cmp, rng.gen_range(-50.0..50.0));
        }
        model.set_objective(vars.iter().map(|&v| (v, rng.gen_range(-1e-7..1e7))).collect());
        if rng.gen_bool(0.3) {
            model.epigraph = Some(vars[0]);
        }
        model
    })
}

proptest! {
    #[test]
    fn export_import_export_is_a_fixpoint(m in random_model()) {
        let first = export_model(&m);
        let back = import_model(&first).unwrap();
        let second = export_model(&back);
        prop_assert_eq!(&first, &second);
        prop_assert_eq!(back.num_vars(), m.num_vars());
        prop_assert_eq!(back.num_constraints(), m.num_constraints());
        for (a, b) in m.vars.iter().zip(&back.vars) {
            prop_assert_eq!(a, b);
        }
        prop_assert_eq!(back.epigraph, m.epigraph);
    }
}
