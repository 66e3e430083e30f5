use swapgrid::config::to_toml;
use swapgrid::{load_params, ModelConfig};

#[test]
fn file_round_trip() {
    let dir = std::env::temp_dir().join(format!("swapgrid-cfg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("params.toml");
    let cfg = ModelConfig::default().at_demand_scale(3.0);
    std::fs::write(&path, to_toml(&cfg)).unwrap();
    let back = load_params(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(to_toml(&back), to_toml(&cfg));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn partial_file_fills_baseline() {
    let cfg = load_params("[network]\nrho_s = 0.08\n").unwrap();
    assert_eq!(cfg.params.rho_s, 0.08);
    assert_eq!(cfg.params.truck_speed, ModelConfig::default().params.truck_speed);
    assert_eq!(cfg.demand, ModelConfig::default().demand);
}

#[test]
fn unknown_key_is_rejected() {
    let err = load_params("[network]\nrho = 0.08\n").unwrap_err();
    assert!(err.to_string().contains("rho"), "{err}");
}
