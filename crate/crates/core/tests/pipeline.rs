use arofsim_core::coherent::CoherentConfig;
use arofsim_core::topology::{
    calibrate, CalibrationTargets, Element, PlantDefaults, Scenario, Topology, TopologyName, CALIBRATED_THERMAL_NOISE,
};

#[test]
fn rerun_is_bit_identical() {
    let s = Scenario::preset("100G", TopologyName::B, 400e6, 7).unwrap();
    let a = serde_json::to_string(&s.run().unwrap().result).unwrap();
    let b = serde_json::to_string(&s.run().unwrap().result).unwrap();
    assert_eq!(a, b);
    let other = Scenario { seed: 8, ..s };
    assert_ne!(a, serde_json::to_string(&other.run().unwrap().result).unwrap());
}

#[test]
fn calibration_reproduces_shipped_defaults() {
    let c = calibrate(&PlantDefaults::default(), &CalibrationTargets::default()).unwrap();
    assert!((c.baseline_evm_pct - 1.3).abs() < 0.01);
    assert!((c.thermal_noise_density / CALIBRATED_THERMAL_NOISE - 1.0).abs() < 1e-3);
    assert!((c.q_100g_db - 17.3).abs() < 0.01 && (c.q_400g_db - 10.3).abs() < 0.01);
    let shipped_100 = CoherentConfig::preset_100g().tx_snr_db.unwrap();
    let shipped_400 = CoherentConfig::preset_400g().tx_snr_db.unwrap();
    assert!((c.tx_snr_100g_db - shipped_100).abs() < 0.01, "{}", c.tx_snr_100g_db);
    assert!((c.tx_snr_400g_db - shipped_400).abs() < 0.01, "{}", c.tx_snr_400g_db);
}

#[test]
fn inline_amplifier_raises_the_ledger() {
    let mut s = Scenario::preset("100G", TopologyName::A, 200e6, 1).unwrap();
    s.topology = Topology::custom(vec![
        Element::Span { length_km: 40.0 },
        Element::Edfa { gain_db: 8.0 },
        Element::Span { length_km: 10.0 },
    ])
    .unwrap();
    let r = s.run().unwrap().result;
    let stages: Vec<&str> = r.power_ledger.iter().map(|p| p.stage.as_str()).collect();
    assert_eq!(&stages[..5], ["combined launch", "span 1 (40 km)", "edfa 2", "span 3 (10 km)", "receive edfa"]);
    let p: Vec<f64> = r.power_ledger.iter().map(|p| p.power_dbm).collect();
    assert!((p[0] - p[1] - 8.0).abs() < 1e-6);
    assert!(p[2] > p[1] + 7.9);
    // Receive gain covers the residual 2 dB.
    assert!((p[4] - p[0]).abs() < 0.05, "{p:?}");
    assert!(r.evm_low < 8.0 && r.evm_high < 8.0);
}

#[test]
fn guard_trim_costs_the_arof_ports() {
    let base = Scenario::preset("100G", TopologyName::A, 800e6, 2).unwrap();
    let mut narrow = base.clone();
    narrow.plant.wss.guard_trim = 0.5e9;
    let r0 = base.run().unwrap().result;
    let r1 = narrow.run().unwrap().result;
    assert!(r1.evm_low > r0.evm_low && r1.evm_high > r0.evm_high);
}
