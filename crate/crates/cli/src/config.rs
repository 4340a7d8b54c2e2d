//! Scenario configuration files.
//!
//! Every physical quantity is a string with a unit suffix. Unknown keys are
//! rejected. Resolution applies, in order of precedence, the value written in
//! the file, the named preset, then the built-in default, and records which
//! one each key came from.

use std::collections::BTreeMap;
use std::path::Path;

use arofsim_core::coherent::{CoherentConfig, CoherentFormat};
use arofsim_core::filters::DemuxOptions;
use arofsim_core::ofdm::OfdmConfig;
use arofsim_core::optics::{MzmParams, PdParams};
use arofsim_core::planner::allocate;
use arofsim_core::topology::{
    coherent_preset, ofdm_for_window, Element, PlantDefaults, Scenario, SimWindow, SweepSpec, Topology, TopologyName,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::units::{format_quantity, parse_quantity, Kind};

pub const DEFAULT_OUTPUT_DIR: &str = "out";
pub const COHERENT_PRESETS: [&str; 2] = ["100G", "400G"];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub output_dir: Option<String>,
    pub coherent: Option<RawCoherent>,
    pub ofdm: Option<RawOfdm>,
    pub topology: Option<RawTopology>,
    pub allocation: Option<RawAllocation>,
    pub plant: Option<RawPlant>,
    pub sweep: Option<RawSweep>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCoherent {
    pub preset: Option<String>,
    pub baud: Option<String>,
    pub format: Option<String>,
    pub rolloff: Option<f64>,
    pub channel_width: Option<String>,
    pub occupied_width: Option<String>,
    /// `"off"` or a ratio in dB.
    pub tx_snr: Option<String>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOfdm {
    pub bandwidth: Option<String>,
    pub if_freq: Option<String>,
    pub subcarrier_spacing: Option<String>,
    pub qam_order: Option<u32>,
    pub cp_fraction: Option<f64>,
    pub training_symbols: Option<usize>,
    pub smoothing: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTopology {
    pub name: Option<String>,
    pub elements: Option<Vec<RawElement>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawElement {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawAllocation {
    pub guard: Option<String>,
    pub expect_feasible: Option<bool>,
}

/// `"auto"` or a fixed value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OrderSetting {
    Fixed(u32),
    Auto(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPlant {
    pub laser_power: Option<String>,
    pub v_pi: Option<String>,
    pub bias: Option<f64>,
    pub drive_rms: Option<String>,
    pub responsivity: Option<String>,
    pub thermal_noise: Option<String>,
    pub shot_noise: Option<bool>,
    pub attenuation: Option<String>,
    pub dispersion: Option<String>,
    pub wavelength: Option<String>,
    pub edfa_noise_figure: Option<String>,
    /// `"auto"` or a gain in dB.
    pub rx_edfa_gain: Option<String>,
    pub coherent_launch: Option<String>,
    pub combiner_loss: Option<String>,
    pub roadm_insertion_loss: Option<String>,
    pub roadm_order: Option<OrderSetting>,
    pub roadm_nominal_order: Option<u32>,
    pub wss_insertion_loss: Option<String>,
    pub wss_arof_order: Option<u32>,
    pub wss_coherent_order: Option<OrderSetting>,
    pub wss_guard_trim: Option<String>,
    /// `"auto"` or a frequency.
    pub wss_coherent_width: Option<String>,
    pub wss_overlap_tolerance: Option<String>,
    pub evm_limit: Option<String>,
    pub power_floor: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSweep {
    pub presets: Option<Vec<String>>,
    pub topologies: Option<Vec<String>>,
    pub bandwidths: Option<Vec<String>>,
    pub seeds: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Default,
    Preset,
    User,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxes {
    pub presets: Vec<String>,
    pub topologies: Vec<TopologyName>,
    pub bandwidths: Vec<f64>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfdmSettings {
    pub bandwidth: f64,
    pub if_freq: f64,
    pub subcarrier_spacing: f64,
    pub qam_order: u32,
    pub cp_fraction: f64,
    pub training_symbols: usize,
    pub smoothing: usize,
}

/// A fully resolved configuration. Equality ignores provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Coherent preset label, or "custom".
    pub preset: String,
    pub coherent: CoherentConfig,
    pub ofdm: OfdmSettings,
    pub topology: Topology,
    pub guard: f64,
    pub expect_feasible: Option<bool>,
    pub plant: PlantDefaults,
    pub seed: u64,
    pub output_dir: String,
    pub sweep: SweepAxes,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub config: ScenarioConfig,
    pub provenance: BTreeMap<String, Source>,
}

/// Expansion of a scenario preset name such as `100G-topoB-800MHz`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioPreset {
    pub coherent: String,
    pub topology: TopologyName,
    pub bandwidth: f64,
}

pub fn parse_scenario_preset(name: &str) -> Result<ScenarioPreset, CliError> {
    let bad = || {
        CliError::config(
        "preset",
        format!("unknown preset \"{name}\"; expected <100G|400G>-topo<baseline|A|B|C>-<bandwidth>, e.g. 100G-topoB-800MHz"),
    )
    };
    let parts: Vec<&str> = name.split('-').collect();
    if parts.len() != 3 || !COHERENT_PRESETS.contains(&parts[0]) {
        return Err(bad());
    }
    let topology = parts[1].strip_prefix("topo").ok_or_else(bad)?.parse::<TopologyName>().map_err(|_| bad())?;
    if topology == TopologyName::Custom {
        return Err(bad());
    }
    let bandwidth = parse_quantity(parts[2], Kind::Frequency).map_err(|_| bad())?;
    Ok(ScenarioPreset { coherent: parts[0].to_string(), topology, bandwidth })
}

fn parse_format(s: &str) -> Option<CoherentFormat> {
    match s.to_ascii_uppercase().as_str() {
        "DP-QPSK" => Some(CoherentFormat::DpQpsk),
        "DP-16QAM" => Some(CoherentFormat::Dp16Qam),
        _ => None,
    }
}

struct Resolver {
    provenance: BTreeMap<String, Source>,
}

impl Resolver {
    fn take<T>(&mut self, key: &str, user: Option<T>, preset: Option<T>, default: T) -> T {
        let (v, src) = match (user, preset) {
            (Some(u), _) => (u, Source::User),
            (None, Some(p)) => (p, Source::Preset),
            (None, None) => (default, Source::Default),
        };
        self.provenance.insert(key.to_string(), src);
        v
    }

    fn quantity(&mut self, key: &str, user: Option<&String>, kind: Kind, default: f64) -> Result<f64, CliError> {
        let user =
            user.map(|s| parse_quantity(s, kind).map_err(|e| CliError::config(key, e.to_string()))).transpose()?;
        Ok(self.take(key, user, None, default))
    }

    fn quantity_or_preset(
        &mut self,
        key: &str,
        user: Option<&String>,
        kind: Kind,
        preset: Option<f64>,
        default: f64,
    ) -> Result<f64, CliError> {
        let user =
            user.map(|s| parse_quantity(s, kind).map_err(|e| CliError::config(key, e.to_string()))).transpose()?;
        Ok(self.take(key, user, preset, default))
    }

    /// `"auto"` → `None`, otherwise a quantity.
    fn auto_quantity(
        &mut self,
        key: &str,
        user: Option<&String>,
        kind: Kind,
        default: Option<f64>,
    ) -> Result<Option<f64>, CliError> {
        let user = match user {
            Some(s) if s.trim().eq_ignore_ascii_case("auto") => Some(None),
            Some(s) => Some(Some(parse_quantity(s, kind).map_err(|e| CliError::config(key, e.to_string()))?)),
            None => None,
        };
        Ok(self.take(key, user, None, default))
    }

    fn order(&mut self, key: &str, user: Option<&OrderSetting>, default: Option<u32>) -> Result<Option<u32>, CliError> {
        let user = match user {
            Some(OrderSetting::Fixed(n)) => Some(Some(*n)),
            Some(OrderSetting::Auto(s)) if s.trim().eq_ignore_ascii_case("auto") => Some(None),
            Some(OrderSetting::Auto(s)) => {
                return Err(CliError::config(key, format!("expected an integer order or \"auto\", got \"{s}\"")));
            }
            None => None,
        };
        Ok(self.take(key, user, None, default))
    }
}

pub fn parse_config_str(text: &str) -> Result<ResolvedConfig, CliError> {
    resolve(&parse_raw(text)?)
}

/// Parse without resolving. Schema errors name the dotted key at fault.
pub fn parse_raw(text: &str) -> Result<RawConfig, CliError> {
    toml::from_str(text).map_err(|e| schema_error(text, &e))
}

fn schema_error(text: &str, e: &toml::de::Error) -> CliError {
    let mut message = e.message().trim().to_string();
    if message.contains("untagged enum OrderSetting") {
        message = "expected an integer filter order or \"auto\"".to_string();
    }
    if message.contains("expected a string") {
        message.push_str("; physical quantities are strings with a unit, e.g. \"800 mhz\"");
    }
    let Some(span) = e.span() else { return CliError::Schema(message) };
    let before = &text[..span.start.min(text.len())];
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    let line = &text[line_start..];
    let line = line.lines().next().unwrap_or_default();
    let section = before[..line_start].lines().rev().find_map(|l| {
        l.trim().strip_prefix('[').map(|h| h.trim_end_matches(']').trim_matches(['[', ']']).trim().to_string())
    });
    let key = match line.split_once('=') {
        Some((k, _)) if !line.trim_start().starts_with('[') => Some(k.trim().to_string()),
        _ => None,
    };
    let path = match (section, key) {
        (Some(s), Some(k)) => format!("{s}.{k}"),
        (None, Some(k)) => k,
        (Some(s), None) => s,
        (None, None) => return CliError::Schema(message),
    };
    CliError::config(&path, message)
}

pub fn parse_config(path: &Path) -> Result<ResolvedConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config_str(&text)
}

/// Resolve a raw file into a full configuration, checking every invariant
/// and every cross-key contradiction.
pub fn resolve(raw: &RawConfig) -> Result<ResolvedConfig, CliError> {
    let mut r = Resolver { provenance: BTreeMap::new() };
    let preset = raw.preset.as_deref().map(parse_scenario_preset).transpose()?;
    if raw.preset.is_some() {
        r.provenance.insert("preset".into(), Source::User);
    }

    // Coherent service.
    let rc = raw.coherent.clone().unwrap_or_default();
    if let (Some(p), Some(c)) = (&preset, &rc.preset) {
        if &p.coherent != c {
            return Err(CliError::contradiction(
                "coherent.preset",
                format!("\"{c}\" contradicts preset \"{}\"", raw.preset.as_deref().unwrap_or_default()),
            ));
        }
    }
    let coh_name = match (&rc.preset, &preset) {
        (Some(c), _) => {
            r.provenance.insert("coherent.preset".into(), Source::User);
            c.clone()
        }
        (None, Some(p)) => {
            r.provenance.insert("coherent.preset".into(), Source::Preset);
            p.coherent.clone()
        }
        (None, None) => {
            r.provenance.insert("coherent.preset".into(), Source::Default);
            "100G".to_string()
        }
    };
    let base = if coh_name == "custom" {
        CoherentConfig::preset_100g()
    } else {
        coherent_preset(&coh_name).map_err(|e| CliError::config("coherent.preset", e.to_string()))?
    };
    let from_preset = coh_name != "custom";
    let pv = |v: f64| if from_preset { Some(v) } else { None };
    let baud = r.quantity_or_preset("coherent.baud", rc.baud.as_ref(), Kind::SymbolRate, pv(base.baud), base.baud)?;
    let format = match &rc.format {
        Some(s) => Some(parse_format(s).ok_or_else(|| {
            CliError::config("coherent.format", format!("expected \"DP-QPSK\" or \"DP-16QAM\", got \"{s}\""))
        })?),
        None => None,
    };
    let format = r.take("coherent.format", format, from_preset.then_some(base.format), base.format);
    let rolloff = r.take("coherent.rolloff", rc.rolloff, from_preset.then_some(base.rolloff), base.rolloff);
    let channel_width = r.quantity_or_preset(
        "coherent.channel_width",
        rc.channel_width.as_ref(),
        Kind::Frequency,
        pv(base.channel_width),
        base.channel_width,
    )?;
    let occupied_width = r.quantity_or_preset(
        "coherent.occupied_width",
        rc.occupied_width.as_ref(),
        Kind::Frequency,
        pv(base.occupied_width),
        base.occupied_width,
    )?;
    let tx_snr = match rc.tx_snr.as_deref() {
        Some(s) if s.trim().eq_ignore_ascii_case("off") => Some(None),
        Some(s) => Some(Some(
            parse_quantity(s, Kind::Decibel).map_err(|e| CliError::config("coherent.tx_snr", e.to_string()))?,
        )),
        None => None,
    };
    let tx_snr_db = r.take("coherent.tx_snr", tx_snr, from_preset.then_some(base.tx_snr_db), base.tx_snr_db);
    let coh_seed = r.take("coherent.seed", rc.seed, from_preset.then_some(base.seed), base.seed);
    let coherent = CoherentConfig { baud, format, rolloff, channel_width, occupied_width, tx_snr_db, seed: coh_seed };
    if occupied_width > channel_width {
        return Err(CliError::contradiction(
            "coherent.occupied_width",
            format!(
                "occupied width {} GHz exceeds the {} GHz channel (coherent.channel_width)",
                occupied_width / 1e9,
                channel_width / 1e9
            ),
        ));
    }
    coherent.validate().map_err(|e| CliError::config("coherent", e.to_string()))?;
    let window =
        SimWindow::for_channel(channel_width).map_err(|e| CliError::config("coherent.channel_width", e.to_string()))?;
    coherent
        .symbols_in(window.len, window.sample_rate)
        .map_err(|e| CliError::config("coherent.baud", e.to_string()))?;

    // ARoF numerology.
    let ro = raw.ofdm.clone().unwrap_or_default();
    let od = OfdmConfig::default();
    if let (Some(p), Some(b)) = (&preset, &ro.bandwidth) {
        let user = parse_quantity(b, Kind::Frequency).map_err(|e| CliError::config("ofdm.bandwidth", e.to_string()))?;
        if user != p.bandwidth {
            return Err(CliError::contradiction("ofdm.bandwidth", format!("\"{b}\" contradicts the preset bandwidth")));
        }
    }
    let ofdm = OfdmSettings {
        bandwidth: r.quantity_or_preset(
            "ofdm.bandwidth",
            ro.bandwidth.as_ref(),
            Kind::Frequency,
            preset.as_ref().map(|p| p.bandwidth),
            800e6,
        )?,
        if_freq: r.quantity("ofdm.if_freq", ro.if_freq.as_ref(), Kind::Frequency, od.if_freq)?,
        subcarrier_spacing: r.quantity(
            "ofdm.subcarrier_spacing",
            ro.subcarrier_spacing.as_ref(),
            Kind::Frequency,
            od.sc_spacing,
        )?,
        qam_order: r.take("ofdm.qam_order", ro.qam_order, None, od.qam_order),
        cp_fraction: r.take("ofdm.cp_fraction", ro.cp_fraction, None, od.cp_fraction),
        training_symbols: r.take("ofdm.training_symbols", ro.training_symbols, None, od.n_training_symbols),
        smoothing: r.take("ofdm.smoothing", ro.smoothing, None, od.smoothing),
    };

    // Light path.
    let rt = raw.topology.clone().unwrap_or_default();
    let user_topo = rt
        .name
        .as_deref()
        .map(|n| n.parse::<TopologyName>().map_err(|e| CliError::config("topology.name", e.to_string())))
        .transpose()?;
    if let (Some(p), Some(u)) = (&preset, user_topo) {
        if p.topology != u {
            return Err(CliError::contradiction("topology.name", format!("\"{u}\" contradicts the preset topology")));
        }
    }
    let topo_name = r.take("topology.name", user_topo, preset.as_ref().map(|p| p.topology), TopologyName::B);
    let topology = match (topo_name, &rt.elements) {
        (TopologyName::Custom, Some(elements)) => {
            r.provenance.insert("topology.elements".into(), Source::User);
            let parsed =
                elements.iter().enumerate().map(|(i, e)| parse_element(i, e)).collect::<Result<Vec<_>, _>>()?;
            Topology::custom(parsed).map_err(|e| CliError::config("topology.elements", e.to_string()))?
        }
        (TopologyName::Custom, None) => {
            return Err(CliError::config("topology.elements", "a custom topology needs an element list".to_string()));
        }
        (name, Some(_)) => {
            return Err(CliError::contradiction(
                "topology.elements",
                format!("elements are only allowed with topology.name = \"custom\", not \"{name}\""),
            ));
        }
        (name, None) => {
            r.provenance.insert("topology.elements".into(), Source::Default);
            Topology::preset(name).map_err(|e| CliError::config("topology.name", e.to_string()))?
        }
    };

    // Plant.
    let rp = raw.plant.clone().unwrap_or_default();
    let d = PlantDefaults::default();
    let plant = PlantDefaults {
        mzm: MzmParams {
            laser_power_dbm: r.quantity(
                "plant.laser_power",
                rp.laser_power.as_ref(),
                Kind::PowerDbm,
                d.mzm.laser_power_dbm,
            )?,
            v_pi: r.quantity("plant.v_pi", rp.v_pi.as_ref(), Kind::Voltage, d.mzm.v_pi)?,
            bias: r.take("plant.bias", rp.bias, None, d.mzm.bias),
            drive_rms: r.quantity("plant.drive_rms", rp.drive_rms.as_ref(), Kind::Voltage, d.mzm.drive_rms)?,
        },
        pd: PdParams {
            responsivity: r.quantity(
                "plant.responsivity",
                rp.responsivity.as_ref(),
                Kind::Responsivity,
                d.pd.responsivity,
            )?,
            thermal_noise_density: r.quantity(
                "plant.thermal_noise",
                rp.thermal_noise.as_ref(),
                Kind::NoiseDensity,
                d.pd.thermal_noise_density,
            )?,
            include_shot_noise: r.take("plant.shot_noise", rp.shot_noise, None, d.pd.include_shot_noise),
        },
        attenuation_db_per_km: r.quantity(
            "plant.attenuation",
            rp.attenuation.as_ref(),
            Kind::Attenuation,
            d.attenuation_db_per_km,
        )?,
        dispersion_ps_nm_km: r.quantity(
            "plant.dispersion",
            rp.dispersion.as_ref(),
            Kind::Dispersion,
            d.dispersion_ps_nm_km,
        )?,
        wavelength_nm: r.quantity("plant.wavelength", rp.wavelength.as_ref(), Kind::Wavelength, d.wavelength_nm)?,
        edfa_noise_figure_db: r.quantity(
            "plant.edfa_noise_figure",
            rp.edfa_noise_figure.as_ref(),
            Kind::Decibel,
            d.edfa_noise_figure_db,
        )?,
        rx_edfa_gain_db: r.auto_quantity(
            "plant.rx_edfa_gain",
            rp.rx_edfa_gain.as_ref(),
            Kind::Decibel,
            d.rx_edfa_gain_db,
        )?,
        coherent_launch_dbm: r.quantity(
            "plant.coherent_launch",
            rp.coherent_launch.as_ref(),
            Kind::PowerDbm,
            d.coherent_launch_dbm,
        )?,
        roadm_insertion_loss_db: r.quantity(
            "plant.roadm_insertion_loss",
            rp.roadm_insertion_loss.as_ref(),
            Kind::Decibel,
            d.roadm_insertion_loss_db,
        )?,
        roadm_order: r.order("plant.roadm_order", rp.roadm_order.as_ref(), d.roadm_order)?,
        roadm_nominal_order: r.take("plant.roadm_nominal_order", rp.roadm_nominal_order, None, d.roadm_nominal_order),
        wss: DemuxOptions {
            arof_order: r.take("plant.wss_arof_order", rp.wss_arof_order, None, d.wss.arof_order),
            coherent_order: r.order(
                "plant.wss_coherent_order",
                rp.wss_coherent_order.as_ref(),
                d.wss.coherent_order,
            )?,
            insertion_loss_db: r.quantity(
                "plant.wss_insertion_loss",
                rp.wss_insertion_loss.as_ref(),
                Kind::Decibel,
                d.wss.insertion_loss_db,
            )?,
            guard_trim: r.quantity(
                "plant.wss_guard_trim",
                rp.wss_guard_trim.as_ref(),
                Kind::Frequency,
                d.wss.guard_trim,
            )?,
            coherent_width: r.auto_quantity(
                "plant.wss_coherent_width",
                rp.wss_coherent_width.as_ref(),
                Kind::Frequency,
                d.wss.coherent_width,
            )?,
            overlap_tolerance: r.quantity(
                "plant.wss_overlap_tolerance",
                rp.wss_overlap_tolerance.as_ref(),
                Kind::Frequency,
                d.wss.overlap_tolerance,
            )?,
        },
        combiner_loss_db: r.quantity(
            "plant.combiner_loss",
            rp.combiner_loss.as_ref(),
            Kind::Decibel,
            d.combiner_loss_db,
        )?,
        evm_limit_pct: r.quantity("plant.evm_limit", rp.evm_limit.as_ref(), Kind::Percent, d.evm_limit_pct)?,
        power_floor_dbm: r.quantity("plant.power_floor", rp.power_floor.as_ref(), Kind::PowerDbm, d.power_floor_dbm)?,
    };
    plant.validate().map_err(|e| CliError::config("plant", e.to_string()))?;

    // Allocation.
    let ra = raw.allocation.clone().unwrap_or_default();
    let guard = r.quantity("allocation.guard", ra.guard.as_ref(), Kind::Frequency, 0.0)?;
    let expect_feasible = r.take("allocation.expect_feasible", ra.expect_feasible.map(Some), None, None);

    let seed = r.take("seed", raw.seed, None, 1);
    let output_dir = r.take("output_dir", raw.output_dir.clone(), None, DEFAULT_OUTPUT_DIR.to_string());

    // Sweep axes.
    let rs = raw.sweep.clone().unwrap_or_default();
    let grid = SweepSpec::reference_grid(seed);
    let chosen = r.provenance.get("coherent.preset") != Some(&Source::Default) && coh_name != "custom";
    let presets =
        r.take("sweep.presets", rs.presets.clone(), chosen.then(|| vec![coh_name.clone()]), grid.presets.clone());
    for p in &presets {
        if !COHERENT_PRESETS.contains(&p.as_str()) {
            return Err(CliError::config("sweep.presets", format!("unknown coherent preset \"{p}\" (100G, 400G)")));
        }
    }
    let topologies = match &rs.topologies {
        Some(list) => Some(
            list.iter()
                .map(|t| t.parse::<TopologyName>().map_err(|e| CliError::config("sweep.topologies", e.to_string())))
                .collect::<Result<Vec<_>, _>>()?,
        ),
        None => None,
    };
    if topologies.as_ref().is_some_and(|t| t.contains(&TopologyName::Custom)) {
        return Err(CliError::config("sweep.topologies", "sweeps take preset topologies only".to_string()));
    }
    let topologies = r.take("sweep.topologies", topologies, None, grid.topologies.clone());
    let bandwidths = match &rs.bandwidths {
        Some(list) => Some(
            list.iter()
                .map(|b| {
                    parse_quantity(b, Kind::Frequency).map_err(|e| CliError::config("sweep.bandwidths", e.to_string()))
                })
                .collect::<Result<Vec<_>, _>>()?,
        ),
        None => None,
    };
    let bandwidths = r.take("sweep.bandwidths", bandwidths, None, grid.bandwidths.clone());
    let seeds = r.take("sweep.seeds", rs.seeds.clone(), None, vec![seed]);
    if presets.is_empty() || topologies.is_empty() || bandwidths.is_empty() || seeds.is_empty() {
        return Err(CliError::config("sweep", "every sweep axis needs at least one entry".to_string()));
    }

    let config = ScenarioConfig {
        preset: coh_name,
        coherent,
        ofdm,
        topology,
        guard,
        expect_feasible,
        plant,
        seed,
        output_dir,
        sweep: SweepAxes { presets, topologies, bandwidths, seeds },
    };
    // Build once to surface numerology and feasibility errors early.
    let scenario = config.scenario()?;
    let alloc = allocate(&scenario.channel_plan()).map_err(|e| CliError::config("ofdm", e.to_string()))?;
    if let Some(expected) = config.expect_feasible {
        if expected != alloc.feasible {
            return Err(CliError::contradiction(
                "allocation.expect_feasible",
                format!(
                    "declared {} but the allocation is {} (slack {:.3} GHz)",
                    if expected { "feasible" } else { "infeasible" },
                    if alloc.feasible { "feasible" } else { "infeasible" },
                    alloc.slack / 1e9
                ),
            ));
        }
    }
    Ok(ResolvedConfig { config, provenance: r.provenance })
}

fn parse_element(i: usize, e: &RawElement) -> Result<Element, CliError> {
    let key = format!("topology.elements[{i}]");
    let no_extra = |field: &Option<String>, name: &str| match field {
        Some(_) => Err(CliError::config(&key, format!("\"{}\" elements take no {name}", e.kind))),
        None => Ok(()),
    };
    match e.kind.as_str() {
        "span" => {
            no_extra(&e.gain, "gain")?;
            let s = e.length.as_ref().ok_or_else(|| CliError::config(&key, "span needs a length".to_string()))?;
            let length_km = parse_quantity(s, Kind::Length)
                .map_err(|err| CliError::config(&format!("{key}.length"), err.to_string()))?;
            Ok(Element::Span { length_km })
        }
        "roadm" => {
            no_extra(&e.gain, "gain")?;
            no_extra(&e.length, "length")?;
            Ok(Element::Roadm)
        }
        "edfa" => {
            no_extra(&e.length, "length")?;
            let s = e.gain.as_ref().ok_or_else(|| CliError::config(&key, "edfa needs a gain".to_string()))?;
            let gain_db = parse_quantity(s, Kind::Decibel)
                .map_err(|err| CliError::config(&format!("{key}.gain"), err.to_string()))?;
            Ok(Element::Edfa { gain_db })
        }
        other => {
            Err(CliError::config(&format!("{key}.kind"), format!("expected span, roadm or edfa, got \"{other}\"")))
        }
    }
}

impl ScenarioConfig {
    /// The OFDM configuration at the scenario window rate.
    pub fn ofdm_config(&self) -> Result<OfdmConfig, CliError> {
        let window = SimWindow::for_channel(self.coherent.channel_width)?;
        let o = &self.ofdm;
        let base = ofdm_for_window(o.bandwidth, &window);
        let n_data_sc = (o.bandwidth / o.subcarrier_spacing).round() as usize;
        if (n_data_sc as f64 * o.subcarrier_spacing - o.bandwidth).abs() > 1e-3 {
            return Err(CliError::config(
                "ofdm.bandwidth",
                format!("{} Hz is not a whole number of {} Hz subcarriers", o.bandwidth, o.subcarrier_spacing),
            ));
        }
        let fft_size = (window.sample_rate / o.subcarrier_spacing).round() as usize;
        let cfg = OfdmConfig {
            fft_size,
            n_data_sc,
            sc_spacing: o.subcarrier_spacing,
            cp_fraction: o.cp_fraction,
            qam_order: o.qam_order,
            if_freq: o.if_freq,
            n_training_symbols: o.training_symbols,
            smoothing: o.smoothing,
            ..base
        };
        let per_symbol = cfg.symbol_len() + cfg.cp_len();
        let fits = window.len / per_symbol.max(1);
        if fits <= o.training_symbols {
            return Err(CliError::config(
                "ofdm",
                format!(
                    "the record holds {fits} OFDM symbols, not enough beyond {} training symbols",
                    o.training_symbols
                ),
            ));
        }
        let cfg = OfdmConfig { n_symbols: fits - o.training_symbols, ..cfg };
        cfg.validate().map_err(|e| CliError::config("ofdm", e.to_string()))?;
        Ok(cfg)
    }

    pub fn scenario(&self) -> Result<Scenario, CliError> {
        Ok(Scenario {
            preset: self.preset.clone(),
            topology: self.topology.clone(),
            coherent: self.coherent.clone(),
            ofdm: self.ofdm_config()?,
            guard: self.guard,
            plant: self.plant.clone(),
            seed: self.seed,
        })
    }

    pub fn sweep_spec(&self) -> SweepSpec {
        SweepSpec {
            presets: self.sweep.presets.clone(),
            topologies: self.sweep.topologies.clone(),
            bandwidths: self.sweep.bandwidths.clone(),
            seeds: self.sweep.seeds.clone(),
            plant: self.plant.clone(),
        }
    }

    /// Back to the file form, every key written out in base units.
    pub fn to_raw(&self) -> RawConfig {
        let q = format_quantity;
        let c = &self.coherent;
        let p = &self.plant;
        let order =
            |o: Option<u32>| Some(o.map(OrderSetting::Fixed).unwrap_or_else(|| OrderSetting::Auto("auto".into())));
        let auto = |v: Option<f64>, kind| Some(v.map(|v| q(v, kind)).unwrap_or_else(|| "auto".into()));
        RawConfig {
            preset: None,
            seed: Some(self.seed),
            output_dir: Some(self.output_dir.clone()),
            coherent: Some(RawCoherent {
                preset: Some(self.preset.clone()),
                baud: Some(q(c.baud, Kind::SymbolRate)),
                format: Some(c.format.to_string()),
                rolloff: Some(c.rolloff),
                channel_width: Some(q(c.channel_width, Kind::Frequency)),
                occupied_width: Some(q(c.occupied_width, Kind::Frequency)),
                tx_snr: Some(c.tx_snr_db.map(|v| q(v, Kind::Decibel)).unwrap_or_else(|| "off".into())),
                seed: Some(c.seed),
            }),
            ofdm: Some(RawOfdm {
                bandwidth: Some(q(self.ofdm.bandwidth, Kind::Frequency)),
                if_freq: Some(q(self.ofdm.if_freq, Kind::Frequency)),
                subcarrier_spacing: Some(q(self.ofdm.subcarrier_spacing, Kind::Frequency)),
                qam_order: Some(self.ofdm.qam_order),
                cp_fraction: Some(self.ofdm.cp_fraction),
                training_symbols: Some(self.ofdm.training_symbols),
                smoothing: Some(self.ofdm.smoothing),
            }),
            topology: Some(RawTopology {
                name: Some(self.topology.name.to_string()),
                elements: (self.topology.name == TopologyName::Custom).then(|| {
                    self.topology
                        .elements
                        .iter()
                        .map(|e| match *e {
                            Element::Span { length_km } => {
                                RawElement { kind: "span".into(), length: Some(q(length_km, Kind::Length)), gain: None }
                            }
                            Element::Roadm => RawElement { kind: "roadm".into(), length: None, gain: None },
                            Element::Edfa { gain_db } => {
                                RawElement { kind: "edfa".into(), length: None, gain: Some(q(gain_db, Kind::Decibel)) }
                            }
                        })
                        .collect()
                }),
            }),
            allocation: Some(RawAllocation {
                guard: Some(q(self.guard, Kind::Frequency)),
                expect_feasible: self.expect_feasible,
            }),
            plant: Some(RawPlant {
                laser_power: Some(q(p.mzm.laser_power_dbm, Kind::PowerDbm)),
                v_pi: Some(q(p.mzm.v_pi, Kind::Voltage)),
                bias: Some(p.mzm.bias),
                drive_rms: Some(q(p.mzm.drive_rms, Kind::Voltage)),
                responsivity: Some(q(p.pd.responsivity, Kind::Responsivity)),
                thermal_noise: Some(q(p.pd.thermal_noise_density, Kind::NoiseDensity)),
                shot_noise: Some(p.pd.include_shot_noise),
                attenuation: Some(q(p.attenuation_db_per_km, Kind::Attenuation)),
                dispersion: Some(q(p.dispersion_ps_nm_km, Kind::Dispersion)),
                wavelength: Some(q(p.wavelength_nm, Kind::Wavelength)),
                edfa_noise_figure: Some(q(p.edfa_noise_figure_db, Kind::Decibel)),
                rx_edfa_gain: auto(p.rx_edfa_gain_db, Kind::Decibel),
                coherent_launch: Some(q(p.coherent_launch_dbm, Kind::PowerDbm)),
                combiner_loss: Some(q(p.combiner_loss_db, Kind::Decibel)),
                roadm_insertion_loss: Some(q(p.roadm_insertion_loss_db, Kind::Decibel)),
                roadm_order: order(p.roadm_order),
                roadm_nominal_order: Some(p.roadm_nominal_order),
                wss_insertion_loss: Some(q(p.wss.insertion_loss_db, Kind::Decibel)),
                wss_arof_order: Some(p.wss.arof_order),
                wss_coherent_order: order(p.wss.coherent_order),
                wss_guard_trim: Some(q(p.wss.guard_trim, Kind::Frequency)),
                wss_coherent_width: auto(p.wss.coherent_width, Kind::Frequency),
                wss_overlap_tolerance: Some(q(p.wss.overlap_tolerance, Kind::Frequency)),
                evm_limit: Some(q(p.evm_limit_pct, Kind::Percent)),
                power_floor: Some(q(p.power_floor_dbm, Kind::PowerDbm)),
            }),
            sweep: Some(RawSweep {
                presets: Some(self.sweep.presets.clone()),
                topologies: Some(self.sweep.topologies.iter().map(|t| t.to_string()).collect()),
                bandwidths: Some(self.sweep.bandwidths.iter().map(|&b| q(b, Kind::Frequency)).collect()),
                seeds: Some(self.sweep.seeds.clone()),
            }),
        }
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(&self.to_raw()).map_err(|e| CliError::Serialize(e.to_string()))
    }

    /// The file form without the output directory: everything that can
    /// change a reported number.
    pub fn canonical_toml(&self) -> Result<String, CliError> {
        let raw = RawConfig { output_dir: None, ..self.to_raw() };
        toml::to_string(&raw).map_err(|e| CliError::Serialize(e.to_string()))
    }

    /// `sha256:<hex>` of [`canonical_toml`](Self::canonical_toml).
    pub fn hash(&self) -> Result<String, CliError> {
        Ok(format!("sha256:{}", crate::report::sha256_hex(self.canonical_toml()?.as_bytes())))
    }
}
