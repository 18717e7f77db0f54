use proptest::prelude::*;
use slicegen_harness::config::apply_override;
use slicegen_harness::{DataSource, ExperimentConfig, ExperimentKind, HarnessError};

#[test]
fn toml_and_json_agree() {
    let toml = r#"
        experiment = "gme"
        seed = 5
        n_runs = 40
        [grid]
        d = [1, 3]
        n = [10, 20]
    "#;
    let json = r#"{"experiment": "gme", "seed": 5, "n_runs": 40, "grid": {"d": [1, 3], "n": [10, 20]}}"#;
    let a = ExperimentConfig::from_str_with_overrides(toml, &[]).unwrap();
    let b = ExperimentConfig::from_str_with_overrides(json, &[]).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.seed, 5);
    assert_eq!(a.n_runs, 40);
    assert_eq!(a.grid.d, vec![1, 3]);
    // Unset fields come from the defaults of the experiment.
    let defaults = ExperimentConfig::defaults(ExperimentKind::Gme);
    assert_eq!(a.n_theta, defaults.n_theta);
    assert_eq!(a.model, defaults.model);
}

#[test]
fn defaults_validate_and_round_trip() {
    for kind in ExperimentKind::ALL {
        let cfg = ExperimentConfig::defaults(kind);
        cfg.validate().unwrap_or_else(|e| panic!("{kind:?}: {e}"));
        let text = cfg.to_toml().unwrap();
        let back = ExperimentConfig::from_str_with_overrides(&text, &[]).unwrap();
        assert_eq!(back, cfg, "{kind:?}");
        assert_eq!(kind.tag().parse::<ExperimentKind>().unwrap(), kind);
    }
}

#[test]
fn unknown_keys_are_rejected() {
    for text in [
        "experiment = \"gme\"\nsede = 3",
        "experiment = \"gme\"\n[grid]\nq = [1]",
        "experiment = \"gme\"\n[model]\nwidth = 3",
    ] {
        let err = ExperimentConfig::from_str_with_overrides(text, &[]).unwrap_err();
        assert!(matches!(err, HarnessError::Config(_)), "{text:?}: {err}");
    }
    assert!(ExperimentConfig::from_str_with_overrides("experiment = \"nope\"", &[]).is_err());
    assert!(ExperimentConfig::from_str_with_overrides("seed = 1", &[]).is_err());
}

#[test]
fn overrides_are_typed_and_nested() {
    let o: Vec<String> = ["seed=11", "grid.d=[2, 4]", "model.ambient=30", "data.images=\"a/b.gz\""].map(String::from).to_vec();
    let cfg = ExperimentConfig::defaults_with_overrides(ExperimentKind::QuantizedNn, &o).unwrap();
    assert_eq!(cfg.seed, 11);
    assert_eq!(cfg.grid.d, vec![2, 4]);
    assert_eq!(cfg.model.ambient, 30);
    match &cfg.data {
        DataSource::Mnist { images, .. } => assert_eq!(images.to_str(), Some("a/b.gz")),
        other => panic!("data source changed to {other:?}"),
    }
    // Overrides win over the document.
    let cfg = ExperimentConfig::from_str_with_overrides("experiment = \"gme\"\nseed = 1", &["seed=2".into()]).unwrap();
    assert_eq!(cfg.seed, 2);
}

#[test]
fn malformed_overrides_fail() {
    for bad in ["seed", "=3", "grid..d=[1]", "seed=\"x\""] {
        let r = ExperimentConfig::defaults_with_overrides(ExperimentKind::Gme, &[bad.to_string()]);
        assert!(r.is_err(), "{bad:?} was accepted");
    }
    let mut t = toml::Table::new();
    apply_override(&mut t, "a.b.c=1.5").unwrap();
    assert_eq!(t["a"]["b"]["c"].as_float(), Some(1.5));
    apply_override(&mut t, "a.s=hello").unwrap();
    assert_eq!(t["a"]["s"].as_str(), Some("hello"));
}

#[test]
fn validation_catches_impossible_grids() {
    let bad: &[(ExperimentKind, &[&str])] = &[
        (ExperimentKind::Gme, &["grid.d=[]"]),
        (ExperimentKind::Gme, &["grid.d=[0]"]),
        (ExperimentKind::Gme, &["model.ambient=5", "grid.d=[6]"]),
        (ExperimentKind::Gme, &["grid.n=[1]"]),
        (ExperimentKind::Gme, &["n_runs=0"]),
        (ExperimentKind::Linreg, &["grid.n=[1]"]),
        (ExperimentKind::Logistic, &["grid.d=[1000]"]),
        (ExperimentKind::RateDistortionNn, &["grid.lambda=[]"]),
        (ExperimentKind::RateDistortionNn, &["grid.lambda=[-1.0]"]),
        (ExperimentKind::QuantLevelSweep, &["grid.levels=[0]"]),
    ];
    for (kind, o) in bad {
        let o: Vec<String> = o.iter().map(|s| s.to_string()).collect();
        assert!(ExperimentConfig::defaults_with_overrides(*kind, &o).is_err(), "{kind:?} {o:?} was accepted");
    }
}

proptest! {
    #[test]
    fn seed_override_is_exact(seed in 0..=i64::MAX as u64) {
        let cfg = ExperimentConfig::defaults_with_overrides(ExperimentKind::Logistic, &[format!("seed={seed}")]).unwrap();
        prop_assert_eq!(cfg.seed, seed);
    }

    #[test]
    fn grid_override_round_trips(d in prop::collection::vec(1usize..=15, 1..6)) {
        let text = format!("grid.d=[{}]", d.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","));
        let cfg = ExperimentConfig::defaults_with_overrides(ExperimentKind::Gme, &[text]).unwrap();
        prop_assert_eq!(cfg.grid.d, d);
    }
}
