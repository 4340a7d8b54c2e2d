use arofsim_cli::config::{parse_config_str, parse_scenario_preset, Source};
use arofsim_cli::CliError;
use arofsim_core::topology::{Element, TopologyName};
use proptest::prelude::*;

#[test]
fn preset_name_expands_to_a_full_config() {
    let r = parse_config_str("preset = \"100G-topoB-800MHz\"\n").unwrap();
    let c = &r.config;
    assert_eq!(c.preset, "100G");
    assert_eq!(c.coherent.baud, 31.5e9);
    assert_eq!(c.coherent.occupied_width, 37.64e9);
    assert_eq!(c.coherent.channel_width, 50e9);
    assert_eq!(c.topology.name, TopologyName::B);
    assert_eq!(c.topology.spans_km(), vec![10.0, 25.0, 12.0]);
    assert_eq!(c.ofdm.bandwidth, 800e6);
    assert_eq!(c.sweep.presets, vec!["100G".to_string()]);
    assert_eq!(r.provenance["ofdm.bandwidth"], Source::Preset);
    assert_eq!(r.provenance["topology.name"], Source::Preset);
    assert_eq!(r.provenance["coherent.baud"], Source::Preset);
    assert_eq!(r.provenance["plant.laser_power"], Source::Default);
    let ofdm = c.ofdm_config().unwrap();
    assert_eq!(ofdm.n_data_sc, 512);
    assert_eq!(ofdm.sample_rate, 128e9);
}

#[test]
fn user_values_are_marked() {
    let r = parse_config_str("seed = 7\n[plant]\nlaser_power = \"3 dbm\"\n").unwrap();
    assert_eq!(r.config.plant.mzm.laser_power_dbm, 3.0);
    assert_eq!(r.provenance["plant.laser_power"], Source::User);
    assert_eq!(r.provenance["seed"], Source::User);
    assert_eq!(r.config.sweep.seeds, vec![7]);
    assert_eq!(r.config.sweep.presets.len(), 2);
}

#[test]
fn preset_names() {
    let p = parse_scenario_preset("400G-topoC-1.6GHz").unwrap();
    assert_eq!((p.coherent.as_str(), p.topology, p.bandwidth), ("400G", TopologyName::C, 1.6e9));
    assert_eq!(parse_scenario_preset("100G-topobaseline-200MHz").unwrap().topology, TopologyName::Baseline);
    for bad in ["200G-topoB-800MHz", "100G-B-800MHz", "100G-topoB", "100G-topoB-800", "100G-topocustom-800MHz"] {
        assert!(parse_scenario_preset(bad).is_err(), "{bad}");
    }
}

#[test]
fn oversized_coherent_carrier_is_rejected() {
    let e = parse_config_str("[coherent]\nchannel_width = \"50 ghz\"\noccupied_width = \"82.46 ghz\"\n").unwrap_err();
    assert!(matches!(&e, CliError::Contradiction { key, .. } if key == "coherent.occupied_width"), "{e}");
    // 400G carrier forced into a 50 GHz slot.
    let e = parse_config_str("[coherent]\npreset = \"400G\"\nchannel_width = \"50 ghz\"\n").unwrap_err();
    assert!(matches!(e, CliError::Contradiction { .. }), "{e}");
}

#[test]
fn declared_feasibility_must_hold() {
    let e = parse_config_str("preset = \"100G-topoB-2.4GHz\"\n[allocation]\nexpect_feasible = true\n").unwrap_err();
    assert!(matches!(&e, CliError::Contradiction { key, .. } if key == "allocation.expect_feasible"), "{e}");
    assert!(parse_config_str("preset = \"100G-topoB-2.4GHz\"\n[allocation]\nexpect_feasible = false\n").is_ok());
    assert!(parse_config_str("preset = \"100G-topoB-1.6GHz\"\n[allocation]\nexpect_feasible = false\n").is_err());
}

#[test]
fn preset_and_explicit_keys_must_agree() {
    for text in [
        "preset = \"100G-topoB-800MHz\"\n[topology]\nname = \"C\"\n",
        "preset = \"100G-topoB-800MHz\"\n[ofdm]\nbandwidth = \"400 mhz\"\n",
        "preset = \"100G-topoB-800MHz\"\n[coherent]\npreset = \"400G\"\n",
    ] {
        assert!(matches!(parse_config_str(text), Err(CliError::Contradiction { .. })), "{text}");
    }
    assert!(parse_config_str("preset = \"100G-topoB-800MHz\"\n[ofdm]\nbandwidth = \"0.8 ghz\"\n").is_ok());
}

#[test]
fn schema_errors_name_key_and_unit() {
    let cases = [
        ("[ofdm]\nbandwith = \"1 ghz\"\n", "ofdm.bandwith"),
        ("[ofdm]\nbandwidth = 800\n", "ofdm.bandwidth"),
        ("[ofdm]\nbandwidth = \"800\"\n", "ofdm.bandwidth"),
        ("[plant]\nattenuation = \"0.2 db\"\n", "plant.attenuation"),
        ("[plant]\nroadm_order = \"sharp\"\n", "plant.roadm_order"),
        ("[coherent]\nformat = \"DP-8PSK\"\n", "coherent.format"),
    ];
    for (text, key) in cases {
        let e = parse_config_str(text).unwrap_err();
        match &e {
            CliError::Config { key: k, .. } => assert_eq!(k, key, "{text}"),
            other => panic!("{text}: {other}"),
        }
    }
    let e = parse_config_str("[plant]\nattenuation = \"0.2 db\"\n").unwrap_err();
    assert!(e.to_string().contains("db/km"));
    assert!(matches!(parse_config_str("mystery = 1\n"), Err(CliError::Config { .. })));
}

#[test]
fn custom_light_path() {
    let text = "[topology]\nname = \"custom\"\n\
        [[topology.elements]]\nkind = \"span\"\nlength = \"20 km\"\n\
        [[topology.elements]]\nkind = \"edfa\"\ngain = \"4 db\"\n\
        [[topology.elements]]\nkind = \"roadm\"\n\
        [[topology.elements]]\nkind = \"span\"\nlength = \"500 m\"\n";
    let c = parse_config_str(text).unwrap().config;
    assert_eq!(
        c.topology.elements,
        vec![
            Element::Span { length_km: 20.0 },
            Element::Edfa { gain_db: 4.0 },
            Element::Roadm,
            Element::Span { length_km: 0.5 }
        ]
    );
    assert!(parse_config_str("[topology]\nname = \"B\"\n[[topology.elements]]\nkind = \"roadm\"\n").is_err());
    assert!(parse_config_str("[topology]\nname = \"custom\"\n").is_err());
    assert!(parse_config_str(
        "[topology]\nname = \"custom\"\n[[topology.elements]]\nkind = \"roadm\"\ngain = \"3 db\"\n"
    )
    .is_err());
}

#[test]
fn auto_settings_round_trip() {
    let text = "[plant]\nroadm_order = 6\nwss_coherent_order = \"auto\"\nrx_edfa_gain = \"12 db\"\n";
    let c = parse_config_str(text).unwrap().config;
    assert_eq!(c.plant.roadm_order, Some(6));
    assert_eq!(c.plant.wss.coherent_order, None);
    assert_eq!(c.plant.rx_edfa_gain_db, Some(12.0));
    let again = parse_config_str(&c.to_toml().unwrap()).unwrap().config;
    assert_eq!(again, c);
}

#[test]
fn canonical_form_ignores_the_output_directory() {
    let a = parse_config_str("output_dir = \"a\"\n").unwrap().config;
    let b = parse_config_str("output_dir = \"b\"\n").unwrap().config;
    assert_eq!(a.hash().unwrap(), b.hash().unwrap());
    let c = parse_config_str("seed = 2\n").unwrap().config;
    assert_ne!(a.hash().unwrap(), c.hash().unwrap());
}

#[allow(clippy::too_many_arguments)]
fn config_text(
    preset: &str,
    topo: &str,
    bw_mhz: u32,
    seed: u64,
    laser: f64,
    nf: f64,
    guard_mhz: u32,
    tx_snr: Option<f64>,
) -> String {
    let tx = tx_snr.map_or("\"off\"".to_string(), |v| format!("\"{v} db\""));
    format!(
        "seed = {seed}\noutput_dir = \"out/x\"\n\
         [coherent]\npreset = \"{preset}\"\ntx_snr = {tx}\n\
         [ofdm]\nbandwidth = \"{bw_mhz} mhz\"\n\
         [topology]\nname = \"{topo}\"\n\
         [allocation]\nguard = \"{guard_mhz} mhz\"\n\
         [plant]\nlaser_power = \"{laser} dbm\"\nedfa_noise_figure = \"{nf} db\"\n"
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parse_serialize_parse_is_identity(
        preset in prop::sample::select(vec!["100G", "400G"]),
        topo in prop::sample::select(vec!["baseline", "A", "B", "C"]),
        bw_steps in 1u32..=16,
        seed in any::<u64>(),
        laser in -10.0f64..10.0,
        nf in 3.0f64..8.0,
        guard_mhz in 0u32..100,
        tx_snr in proptest::option::of(5.0f64..30.0),
    ) {
        let text = config_text(preset, topo, bw_steps * 100, seed, laser, nf, guard_mhz, tx_snr);
        let first = parse_config_str(&text).unwrap().config;
        let written = first.to_toml().unwrap();
        let second = parse_config_str(&written).unwrap().config;
        prop_assert_eq!(&first, &second);
        prop_assert_eq!(second.to_toml().unwrap(), written);
    }
}
