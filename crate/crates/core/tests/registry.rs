use liptest::function::{FunctionOracle, ValueRange};
use liptest::hypercube::Vertex;
use liptest::oracle;
use liptest::registry::{BuiltinFunction, FunctionFile, NamedFunction};

#[test]
fn builtins_evaluate() {
    let x = Vertex::parse("1101").unwrap();
    let h = BuiltinFunction::parse("hamming-weight").unwrap().instantiate(4, 0.01).unwrap();
    assert_eq!(h.evaluate(x), 3.0);
    assert_eq!(h.range(), ValueRange::DeltaGrid { delta: 1.0 });
    let k = BuiltinFunction::parse("scaled-dictator?k=4").unwrap().instantiate(4, 0.01).unwrap();
    assert_eq!(k.evaluate(x), 4.0);
    assert_eq!(k.evaluate(Vertex::parse("0111").unwrap()), 0.0);
    let c = BuiltinFunction::parse("constant?c=2.5").unwrap().instantiate(4, 0.5).unwrap();
    assert_eq!(c.evaluate(x), 2.5);
    assert_eq!(c.range(), ValueRange::DeltaGrid { delta: 0.5 });
}

#[test]
fn random_lipschitz_builtin_is_lipschitz_on_the_grid() {
    for seed in 0..20 {
        let f = BuiltinFunction::RandomLipschitz { seed }.instantiate(6, 0.1).unwrap();
        let NamedFunction::Dense(t) = f else { panic!("expected a table") };
        assert!(oracle::is_lipschitz_exhaustive(&t, 1.0).unwrap());
        assert_eq!(t.delta(), Some(0.1));
    }
}

#[test]
fn table_files_reject_bad_input() {
    let short = r#"{"d": 2, "values": [0, 1, 2]}"#;
    assert!(serde_json::from_str::<FunctionFile>(short).unwrap().into_function().is_err());
    let off_grid = r#"{"d": 1, "delta": 0.5, "values": [0, 0.3]}"#;
    assert!(serde_json::from_str::<FunctionFile>(off_grid).unwrap().into_function().is_err());
    let extra = r#"{"d": 1, "values": [0, 1], "colour": "red"}"#;
    assert!(serde_json::from_str::<FunctionFile>(extra).is_err());
    let ok = r#"{"d": 1, "delta": 0.5, "values": ["-inf", 1.5]}"#;
    let f = serde_json::from_str::<FunctionFile>(ok).unwrap().into_function().unwrap();
    assert_eq!(f.values()[0], f64::NEG_INFINITY);
}
