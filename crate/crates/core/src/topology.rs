//! End-to-end scenarios: two ARoF IF-OFDM signals placed on either side of a
//! coherent carrier, sent through a light path of fiber spans and ROADMs,
//! amplified, demultiplexed by a WSS and received.
//!
//! Topologies:
//!
//! | name     | light path                              |
//! |----------|-----------------------------------------|
//! | baseline | each service alone, back to back        |
//! | A        | 10 km                                   |
//! | B        | 10 km, ROADM, 25 km, 12 km              |
//! | C        | 10 km, ROADM, 25 km, ROADM, 25 km, 12 km |

use std::fmt;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coherent::{generate_coherent, receive_coherent, CoherentConfig, CoherentRxParams, QReport};
use crate::error::{Error, Result};
use crate::filters::{
    apply_filter_dual, build_demux, DemuxOptions, FilterProfile, PORT_AROF_HIGH, PORT_AROF_LOW, PORT_COHERENT,
};
use crate::ofdm::{
    compute_evm_with_limit, demodulate, modulate, EvmReport, OfdmConfig, OfdmFrame, EVM_LIMIT_64QAM_PCT,
};
use crate::optics::{
    edfa_amplify_dual, fiber_propagate_dual, mzm_modulate, photodetect_dual, EdfaParams, FiberParams, MzmParams,
    PdParams,
};
use crate::planner::{allocate, Allocation, ChannelPlan};
use crate::signal::{estimate_psd, frequency_shift, DualPolSignal, SampledSignal, SpectrumEstimate};
use crate::units::{dbm_to_mw, mw_to_dbm};

/// Length of every simulated record, s. Holds a whole number of coherent
/// symbols at both preset baud rates and twelve OFDM symbols.
pub const RECORD_DURATION: f64 = 8.192e-6;

/// Simulation rate per hertz of ROADM channel width.
pub const OVERSAMPLING: f64 = 2.56;

/// Reference channel width at which a ROADM passband has the nominal order.
pub const ORDER_REFERENCE_WIDTH: f64 = 50e9;

const STREAM_RX_EDFA: u64 = 1_000;
const STREAM_PD_LOW: u64 = 2_000;
const STREAM_PD_HIGH: u64 = 2_001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TopologyName {
    #[serde(rename = "baseline")]
    Baseline,
    A,
    B,
    C,
    #[serde(rename = "custom")]
    Custom,
}

impl fmt::Display for TopologyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TopologyName::Baseline => "baseline",
            TopologyName::A => "A",
            TopologyName::B => "B",
            TopologyName::C => "C",
            TopologyName::Custom => "custom",
        })
    }
}

impl std::str::FromStr for TopologyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" | "b2b" => Ok(TopologyName::Baseline),
            "A" | "a" => Ok(TopologyName::A),
            "B" | "b" => Ok(TopologyName::B),
            "C" | "c" => Ok(TopologyName::C),
            "custom" => Ok(TopologyName::Custom),
            other => Err(Error::Config(format!("unknown topology '{other}' (baseline, A, B, C, custom)"))),
        }
    }
}

/// One element of a light path, in propagation order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Element {
    Span { length_km: f64 },
    Roadm,
    Edfa { gain_db: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub name: TopologyName,
    pub elements: Vec<Element>,
}

impl Topology {
    pub fn preset(name: TopologyName) -> Result<Self> {
        use Element::*;
        let elements = match name {
            TopologyName::Baseline => vec![],
            TopologyName::A => vec![Span { length_km: 10.0 }],
            TopologyName::B => {
                vec![Span { length_km: 10.0 }, Roadm, Span { length_km: 25.0 }, Span { length_km: 12.0 }]
            }
            TopologyName::C => vec![
                Span { length_km: 10.0 },
                Roadm,
                Span { length_km: 25.0 },
                Roadm,
                Span { length_km: 25.0 },
                Span { length_km: 12.0 },
            ],
            TopologyName::Custom => return Err(Error::Config("the custom topology has no preset".into())),
        };
        Ok(Self { name, elements })
    }

    pub fn custom(elements: Vec<Element>) -> Result<Self> {
        let t = Self { name: TopologyName::Custom, elements };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        for e in &self.elements {
            match *e {
                Element::Span { length_km } if !(length_km >= 0.0) || !length_km.is_finite() => {
                    return Err(Error::Config(format!("span length {length_km} km must be finite and ≥ 0")));
                }
                Element::Edfa { gain_db } if !(gain_db >= 0.0) || !gain_db.is_finite() => {
                    return Err(Error::Config(format!("inline EDFA gain {gain_db} dB must be finite and ≥ 0")));
                }
                _ => {}
            }
        }
        if self.name == TopologyName::Baseline && !self.elements.is_empty() {
            return Err(Error::Config("the baseline topology is back to back".into()));
        }
        Ok(())
    }

    pub fn is_baseline(&self) -> bool {
        self.name == TopologyName::Baseline
    }

    pub fn spans_km(&self) -> Vec<f64> {
        self.elements
            .iter()
            .filter_map(|e| match e {
                Element::Span { length_km } => Some(*length_km),
                _ => None,
            })
            .collect()
    }

    pub fn total_length_km(&self) -> f64 {
        self.spans_km().iter().sum()
    }

    pub fn roadm_count(&self) -> usize {
        self.elements.iter().filter(|e| matches!(e, Element::Roadm)).count()
    }

    /// Positions of inline amplifiers in the element list.
    pub fn amplifier_positions(&self) -> Vec<usize> {
        self.elements.iter().enumerate().filter(|(_, e)| matches!(e, Element::Edfa { .. })).map(|(i, _)| i).collect()
    }
}

/// Physical parameters shared by every scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantDefaults {
    pub mzm: MzmParams,
    pub pd: PdParams,
    pub attenuation_db_per_km: f64,
    pub dispersion_ps_nm_km: f64,
    pub wavelength_nm: f64,
    pub edfa_noise_figure_db: f64,
    /// Receive amplifier gain; `None` restores the nominal path loss.
    pub rx_edfa_gain_db: Option<f64>,
    pub coherent_launch_dbm: f64,
    pub roadm_insertion_loss_db: f64,
    /// ROADM passband order; `None` scales the nominal order with the
    /// channel width so the edge roll-off is the same for every grid slot.
    pub roadm_order: Option<u32>,
    pub roadm_nominal_order: u32,
    pub wss: DemuxOptions,
    pub combiner_loss_db: f64,
    pub evm_limit_pct: f64,
    /// Optical power below which a receiver input is flagged, dBm.
    pub power_floor_dbm: f64,
}

impl Default for PlantDefaults {
    fn default() -> Self {
        Self {
            mzm: MzmParams { laser_power_dbm: 6.0, ..MzmParams::default() },
            pd: PdParams { thermal_noise_density: CALIBRATED_THERMAL_NOISE, ..PdParams::default() },
            attenuation_db_per_km: 0.2,
            dispersion_ps_nm_km: 17.0,
            wavelength_nm: 1550.0,
            edfa_noise_figure_db: 5.0,
            rx_edfa_gain_db: None,
            coherent_launch_dbm: 6.0,
            roadm_insertion_loss_db: 1.0,
            roadm_order: None,
            roadm_nominal_order: 4,
            wss: DemuxOptions { insertion_loss_db: 1.5, ..DemuxOptions::default() },
            combiner_loss_db: 0.0,
            evm_limit_pct: EVM_LIMIT_64QAM_PCT,
            power_floor_dbm: -40.0,
        }
    }
}

/// Thermal noise density, A/√Hz, from [`calibrate`] at the default plant.
pub const CALIBRATED_THERMAL_NOISE: f64 = 1.4155e-10;

impl PlantDefaults {
    pub fn validate(&self) -> Result<()> {
        self.mzm.validate()?;
        self.pd.validate()?;
        self.fiber(0.0).validate()?;
        self.edfa(0.0).validate()?;
        if !(self.roadm_insertion_loss_db >= 0.0) || !(self.combiner_loss_db >= 0.0) {
            return Err(Error::Config("insertion losses must be ≥ 0 dB".into()));
        }
        if self.roadm_nominal_order == 0 || self.roadm_order == Some(0) {
            return Err(Error::Config("ROADM order must be at least 1".into()));
        }
        if let Some(g) = self.rx_edfa_gain_db {
            if !(g >= 0.0) {
                return Err(Error::Config(format!("receive EDFA gain {g} dB must be ≥ 0")));
            }
        }
        if !(self.evm_limit_pct > 0.0) {
            return Err(Error::Config("EVM limit must be positive".into()));
        }
        Ok(())
    }

    pub fn fiber(&self, length_km: f64) -> FiberParams {
        FiberParams {
            length_km,
            attenuation_db_per_km: self.attenuation_db_per_km,
            dispersion_ps_nm_km: self.dispersion_ps_nm_km,
            reference_wavelength_nm: self.wavelength_nm,
        }
    }

    pub fn edfa(&self, gain_db: f64) -> EdfaParams {
        EdfaParams { gain_db, noise_figure_db: self.edfa_noise_figure_db, wavelength_nm: self.wavelength_nm }
    }

    pub fn roadm_profile(&self, channel_width: f64) -> Result<FilterProfile> {
        let order = self.roadm_order.unwrap_or_else(|| {
            ((self.roadm_nominal_order as f64 * channel_width / ORDER_REFERENCE_WIDTH).round() as u32).max(1)
        });
        FilterProfile::new(0.0, channel_width, order, self.roadm_insertion_loss_db)
    }

    /// Nominal loss of the passive elements, dB.
    pub fn path_loss_db(&self, topology: &Topology) -> f64 {
        topology
            .elements
            .iter()
            .map(|e| match *e {
                Element::Span { length_km } => self.fiber(length_km).loss_db(),
                Element::Roadm => self.roadm_insertion_loss_db,
                Element::Edfa { gain_db } => -gain_db,
            })
            .sum::<f64>()
            .max(0.0)
    }
}

/// Sample grid shared by every signal of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimWindow {
    pub sample_rate: f64,
    pub len: usize,
}

impl SimWindow {
    pub fn for_channel(channel_width: f64) -> Result<Self> {
        let sample_rate = OVERSAMPLING * channel_width;
        let exact = sample_rate * RECORD_DURATION;
        let len = exact.round() as usize;
        if len == 0 || (exact - len as f64).abs() > 1e-6 {
            return Err(Error::Config(format!(
                "a {channel_width} Hz channel does not give a whole-sample record ({exact} samples)"
            )));
        }
        Ok(Self { sample_rate, len })
    }
}

/// Everything needed to run one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Label of the coherent preset, e.g. "100G".
    pub preset: String,
    pub topology: Topology,
    pub coherent: CoherentConfig,
    pub ofdm: OfdmConfig,
    pub guard: f64,
    pub plant: PlantDefaults,
    pub seed: u64,
}

impl Scenario {
    /// A preset scenario: `preset` is "100G" or "400G".
    pub fn preset(preset: &str, topology: TopologyName, arof_bw: f64, seed: u64) -> Result<Self> {
        let coherent = coherent_preset(preset)?;
        let window = SimWindow::for_channel(coherent.channel_width)?;
        Ok(Self {
            preset: preset.to_string(),
            topology: Topology::preset(topology)?,
            ofdm: ofdm_for_window(arof_bw, &window),
            coherent,
            guard: 0.0,
            plant: PlantDefaults::default(),
            seed,
        })
    }

    pub fn channel_plan(&self) -> ChannelPlan {
        ChannelPlan {
            channel_width: self.coherent.channel_width,
            coherent_occupied: self.coherent.occupied_width,
            if_freq: self.ofdm.if_freq,
            arof_bw: self.ofdm.bandwidth(),
            guard: self.guard,
        }
    }

    pub fn allocation(&self) -> Result<Allocation> {
        allocate(&self.channel_plan())
    }

    pub fn run(&self) -> Result<ScenarioRun> {
        let alloc = self.allocation()?;
        run_scenario(&self.topology, &self.coherent, &self.ofdm, &alloc, &self.plant, self.seed, &self.preset)
    }
}

pub fn coherent_preset(name: &str) -> Result<CoherentConfig> {
    match name {
        "100G" => Ok(CoherentConfig::preset_100g()),
        "400G" => Ok(CoherentConfig::preset_400g()),
        other => Err(Error::Config(format!("unknown coherent preset '{other}' (100G, 400G)"))),
    }
}

/// Default OFDM numerology for `arof_bw`, synthesised at the window rate
/// with as many data symbols as the record holds.
pub fn ofdm_for_window(arof_bw: f64, window: &SimWindow) -> OfdmConfig {
    let base = OfdmConfig::for_bandwidth(arof_bw);
    let fft_size = (window.sample_rate / base.sc_spacing).round() as usize;
    let cfg = OfdmConfig { fft_size, sample_rate: window.sample_rate, ..base };
    let per_symbol = cfg.symbol_len() + cfg.cp_len();
    let n_symbols = (window.len / per_symbol).saturating_sub(cfg.n_training_symbols).max(1);
    OfdmConfig { n_symbols, ..cfg }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerStage {
    pub stage: String,
    pub power_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub preset: String,
    pub topology: TopologyName,
    pub arof_bw_hz: f64,
    pub seed: u64,
    pub allocation: Allocation,
    /// Percent.
    pub evm_low: f64,
    pub evm_high: f64,
    pub q_report: QReport,
    pub power_ledger: Vec<PowerStage>,
    /// Low and high port against the configured limit.
    pub pass_3gpp: [bool; 2],
    pub low_power: bool,
    pub warnings: Vec<String>,
}

impl ScenarioResult {
    pub fn worst_evm(&self) -> f64 {
        self.evm_low.max(self.evm_high)
    }
}

/// Data products kept for reporting, not part of the result record.
#[derive(Debug, Clone)]
pub struct ScenarioArtifacts {
    /// Composite field at the receive side, before demultiplexing.
    pub composite_psd: SpectrumEstimate,
    pub port_psds: Vec<(String, SpectrumEstimate)>,
    pub evm_low: EvmReport,
    pub evm_high: EvmReport,
    /// Equalised low-port symbols with their references.
    pub constellation_low: Vec<(Complex64, Complex64)>,
    pub constellation_high: Vec<(Complex64, Complex64)>,
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub result: ScenarioResult,
    pub artifacts: ScenarioArtifacts,
}

const PSD_SEGMENT: usize = 1 << 14;

fn noise_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn arof_field(frame: &OfdmFrame, window: &SimWindow, mzm: &MzmParams, carrier: f64) -> Result<SampledSignal> {
    let drive = frame.tx_waveform.padded_to(window.len)?;
    let field = mzm_modulate(&drive, mzm)?;
    frequency_shift(&field, carrier)
}

struct Detected {
    report: EvmReport,
    pairs: Vec<(Complex64, Complex64)>,
}

fn detect_arof(
    port: &DualPolSignal,
    frame: &OfdmFrame,
    plant: &PlantDefaults,
    rng: &mut ChaCha8Rng,
) -> Result<Detected> {
    let current = photodetect_dual(port, &plant.pd, rng)?;
    let grid = demodulate(&current, frame)?;
    let report = compute_evm_with_limit(&grid, &frame.reference_symbols, plant.evm_limit_pct)?;
    let pairs = grid.data.iter().copied().zip(frame.reference_symbols.data.iter().copied()).collect();
    Ok(Detected { report, pairs })
}

/// Run one scenario. Infeasible allocations are refused; weak receiver
/// inputs are flagged in the result.
pub fn run_scenario(
    topology: &Topology,
    coherent: &CoherentConfig,
    ofdm: &OfdmConfig,
    allocation: &Allocation,
    plant: &PlantDefaults,
    seed: u64,
    preset_label: &str,
) -> Result<ScenarioRun> {
    topology.validate()?;
    plant.validate()?;
    coherent.validate()?;
    if !allocation.feasible {
        return Err(Error::Infeasible(format!(
            "ARoF bandwidth {} MHz does not fit: deficit {:.3} GHz",
            allocation.plan.arof_bw / 1e6,
            -allocation.slack / 1e9
        )));
    }
    let window = SimWindow::for_channel(coherent.channel_width)?;
    if ofdm.sample_rate != window.sample_rate {
        return Err(Error::RateMismatch(window.sample_rate, ofdm.sample_rate));
    }
    if (ofdm.bandwidth() - allocation.plan.arof_bw).abs() > 1.0 || ofdm.if_freq != allocation.plan.if_freq {
        return Err(Error::Config("OFDM numerology does not match the allocation".into()));
    }
    let mut warnings = plant.edfa(0.0).warnings();

    let frame_low = modulate(&OfdmConfig { seed: seed.wrapping_mul(2), ..ofdm.clone() })?;
    let frame_high = modulate(&OfdmConfig { seed: seed.wrapping_mul(2).wrapping_add(1), ..ofdm.clone() })?;
    if frame_low.config.frame_len() > window.len {
        return Err(Error::TooShort {
            what: "simulation record",
            needed: frame_low.config.frame_len(),
            got: window.len,
        });
    }
    let arof_low = arof_field(&frame_low, &window, &plant.mzm, allocation.carrier_offset_low)?;
    let arof_high = arof_field(&frame_high, &window, &plant.mzm, allocation.carrier_offset_high)?;

    let coh_cfg =
        CoherentConfig { seed: coherent.seed.wrapping_add(seed.wrapping_mul(0x9E37_79B9)), ..coherent.clone() };
    let coh_wave = generate_coherent(&coh_cfg, window.len, window.sample_rate)?;
    let coh_field = coh_wave.signal.scaled(dbm_to_mw(plant.coherent_launch_dbm).sqrt());

    let mut ledger = Vec::new();
    let mut stage =
        |name: &str, p_mw: f64| ledger.push(PowerStage { stage: name.to_string(), power_dbm: mw_to_dbm(p_mw) });
    let mut low_power = false;
    let floor_mw = dbm_to_mw(plant.power_floor_dbm);

    let mut rng_pd_low = noise_rng(seed, STREAM_PD_LOW);
    let mut rng_pd_high = noise_rng(seed, STREAM_PD_HIGH);

    if topology.is_baseline() {
        // Every service alone, straight into its receiver.
        let low = DualPolSignal::from_x(arof_low);
        let high = DualPolSignal::from_x(arof_high);
        stage("arof-low launch", low.power_mw());
        stage("arof-high launch", high.power_mw());
        stage("coherent launch", coh_field.power_mw());
        let det_low = detect_arof(&low, &frame_low, plant, &mut rng_pd_low)?;
        let det_high = detect_arof(&high, &frame_high, plant, &mut rng_pd_high)?;
        let q = receive_coherent(&coh_field, &coh_wave, CoherentRxParams::default())?;
        let composite = crate::signal::combine(&[low.x.clone(), high.x.clone(), coh_field.x.clone()])?;
        let artifacts = ScenarioArtifacts {
            composite_psd: estimate_psd(&composite, PSD_SEGMENT, 0.5)?,
            port_psds: vec![
                (PORT_AROF_LOW.to_string(), estimate_psd(&low.x, PSD_SEGMENT, 0.5)?),
                (PORT_COHERENT.to_string(), estimate_psd(&coh_field.x, PSD_SEGMENT, 0.5)?),
                (PORT_AROF_HIGH.to_string(), estimate_psd(&high.x, PSD_SEGMENT, 0.5)?),
            ],
            evm_low: det_low.report.clone(),
            evm_high: det_high.report.clone(),
            constellation_low: det_low.pairs,
            constellation_high: det_high.pairs,
        };
        return Ok(finish(
            preset_label,
            topology,
            allocation,
            seed,
            &det_low.report,
            &det_high.report,
            q,
            ledger,
            low_power,
            warnings,
            artifacts,
        ));
    }

    let arof = DualPolSignal::from_x(crate::signal::combine(&[arof_low, arof_high])?);
    let mut field = DualPolSignal::combine(&[arof, coh_field], plant.combiner_loss_db)?;
    stage("combined launch", field.power_mw());

    let roadm = plant.roadm_profile(coherent.channel_width)?;
    let mut beta2_l = 0.0;
    let mut inline = 0u64;
    for (i, e) in topology.elements.iter().enumerate() {
        match *e {
            Element::Span { length_km } => {
                let fiber = plant.fiber(length_km);
                beta2_l += fiber.accumulated_beta2();
                field = fiber_propagate_dual(&field, &fiber)?;
                stage(&format!("span {} ({length_km} km)", i + 1), field.power_mw());
            }
            Element::Roadm => {
                field = apply_filter_dual(&field, &roadm);
                stage(&format!("roadm {}", i + 1), field.power_mw());
            }
            Element::Edfa { gain_db } => {
                inline += 1;
                field = edfa_amplify_dual(&field, &plant.edfa(gain_db), &mut noise_rng(seed, inline))?;
                stage(&format!("edfa {}", i + 1), field.power_mw());
            }
        }
    }
    let rx_gain = plant.rx_edfa_gain_db.unwrap_or_else(|| plant.path_loss_db(topology));
    field = edfa_amplify_dual(&field, &plant.edfa(rx_gain), &mut noise_rng(seed, STREAM_RX_EDFA))?;
    stage("receive edfa", field.power_mw());
    let composite_psd = estimate_psd(&field.x, PSD_SEGMENT, 0.5)?;

    let demux = build_demux(allocation, &plant.wss)?;
    let mut ports = Vec::with_capacity(3);
    for p in &demux.ports {
        let out = apply_filter_dual(&field, &p.profile);
        stage(&format!("wss {}", p.name), out.power_mw());
        if p.name != PORT_COHERENT && out.power_mw() < floor_mw {
            low_power = true;
            warnings.push(format!("{} port input {:.1} dBm is below the floor", p.name, out.power_dbm()));
        }
        ports.push((p.name.clone(), out));
    }
    let port = |name: &str| &ports.iter().find(|(n, _)| n == name).expect("demux port").1;

    let det_low = detect_arof(port(PORT_AROF_LOW), &frame_low, plant, &mut rng_pd_low)?;
    let det_high = detect_arof(port(PORT_AROF_HIGH), &frame_high, plant, &mut rng_pd_high)?;
    let q = receive_coherent(port(PORT_COHERENT), &coh_wave, CoherentRxParams { accumulated_beta2_l: beta2_l })?;

    let port_psds = ports
        .iter()
        .map(|(n, s)| Ok((n.clone(), estimate_psd(&s.x, PSD_SEGMENT, 0.5)?)))
        .collect::<Result<Vec<_>>>()?;
    let artifacts = ScenarioArtifacts {
        composite_psd,
        port_psds,
        evm_low: det_low.report.clone(),
        evm_high: det_high.report.clone(),
        constellation_low: det_low.pairs,
        constellation_high: det_high.pairs,
    };
    Ok(finish(
        preset_label,
        topology,
        allocation,
        seed,
        &det_low.report,
        &det_high.report,
        q,
        ledger,
        low_power,
        warnings,
        artifacts,
    ))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    preset: &str,
    topology: &Topology,
    allocation: &Allocation,
    seed: u64,
    low: &EvmReport,
    high: &EvmReport,
    q_report: QReport,
    power_ledger: Vec<PowerStage>,
    low_power: bool,
    warnings: Vec<String>,
    artifacts: ScenarioArtifacts,
) -> ScenarioRun {
    ScenarioRun {
        result: ScenarioResult {
            preset: preset.to_string(),
            topology: topology.name,
            arof_bw_hz: allocation.plan.arof_bw,
            seed,
            allocation: allocation.clone(),
            evm_low: low.evm_rms,
            evm_high: high.evm_rms,
            q_report,
            power_ledger,
            pass_3gpp: [low.pass, high.pass],
            low_power,
            warnings,
        },
        artifacts,
    }
}

/// The sweep axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub presets: Vec<String>,
    pub topologies: Vec<TopologyName>,
    pub bandwidths: Vec<f64>,
    pub seeds: Vec<u64>,
    pub plant: PlantDefaults,
}

impl SweepSpec {
    /// Two presets × baseline/A/B/C × 200, 400, 800, 1600 MHz.
    pub fn reference_grid(seed: u64) -> Self {
        Self {
            presets: vec!["100G".into(), "400G".into()],
            topologies: vec![TopologyName::Baseline, TopologyName::A, TopologyName::B, TopologyName::C],
            bandwidths: vec![200e6, 400e6, 800e6, 1600e6],
            seeds: vec![seed],
            plant: PlantDefaults::default(),
        }
    }

    pub fn scenarios(&self) -> Result<Vec<Scenario>> {
        let mut out = Vec::new();
        for preset in &self.presets {
            for &topo in &self.topologies {
                for &bw in &self.bandwidths {
                    for &seed in &self.seeds {
                        let mut s = Scenario::preset(preset, topo, bw, seed)?;
                        s.plant = self.plant.clone();
                        out.push(s);
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub preset: String,
    pub topology: TopologyName,
    pub arof_bw_hz: f64,
    pub seed: u64,
    pub outcome: std::result::Result<ScenarioResult, String>,
}

/// Run every cell of the sweep. Cells fail individually; results keep the
/// order of [`SweepSpec::scenarios`] whatever the thread count.
pub fn sweep(spec: &SweepSpec, jobs: Option<usize>) -> Result<Vec<SweepCell>> {
    let scenarios = spec.scenarios()?;
    let run_all = || {
        scenarios
            .par_iter()
            .map(|s| SweepCell {
                preset: s.preset.clone(),
                topology: s.topology.name,
                arof_bw_hz: s.ofdm.bandwidth(),
                seed: s.seed,
                outcome: s.run().map(|r| r.result).map_err(|e| e.to_string()),
            })
            .collect::<Vec<_>>()
    };
    match jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(run_all))
        }
        None => Ok(run_all()),
    }
}

/// Targets of the single calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTargets {
    /// Baseline EVM at `arof_bw`, percent.
    pub baseline_evm_pct: f64,
    pub arof_bw: f64,
    /// Back-to-back Q per coherent preset, dB.
    pub q_100g_db: f64,
    pub q_400g_db: f64,
    pub seed: u64,
}

impl Default for CalibrationTargets {
    fn default() -> Self {
        Self { baseline_evm_pct: 1.3, arof_bw: 200e6, q_100g_db: 17.3, q_400g_db: 10.3, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub thermal_noise_density: f64,
    pub baseline_evm_pct: f64,
    pub tx_snr_100g_db: f64,
    pub q_100g_db: f64,
    pub tx_snr_400g_db: f64,
    pub q_400g_db: f64,
    pub plant: PlantDefaults,
}

/// Bisect `f` (increasing in `x`) for `f(x) = target` on `[lo, hi]`.
fn bisect<F: FnMut(f64) -> Result<f64>>(mut f: F, target: f64, mut lo: f64, mut hi: f64, iters: usize) -> Result<f64> {
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if !(flo <= target && target <= fhi) {
        return Err(Error::Infeasible(format!("calibration target {target} outside [{flo}, {fhi}] on [{lo}, {hi}]")));
    }
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn baseline_evm(plant: &PlantDefaults, bw: f64, seed: u64) -> Result<f64> {
    let mut s = Scenario::preset("100G", TopologyName::Baseline, bw, seed)?;
    s.plant = plant.clone();
    let alloc = s.allocation()?;
    let window = SimWindow::for_channel(s.coherent.channel_width)?;
    let frame = modulate(&OfdmConfig { seed: seed.wrapping_mul(2), ..s.ofdm.clone() })?;
    let field = DualPolSignal::from_x(arof_field(&frame, &window, &plant.mzm, alloc.carrier_offset_low)?);
    let det = detect_arof(&field, &frame, plant, &mut noise_rng(seed, STREAM_PD_LOW))?;
    Ok(det.report.evm_rms)
}

fn coherent_b2b_q(preset: &str, tx_snr_db: f64, seed: u64) -> Result<f64> {
    let cfg = CoherentConfig { tx_snr_db: Some(tx_snr_db), ..coherent_preset(preset)? };
    let cfg = CoherentConfig { seed: cfg.seed.wrapping_add(seed.wrapping_mul(0x9E37_79B9)), ..cfg };
    let window = SimWindow::for_channel(cfg.channel_width)?;
    let wave = generate_coherent(&cfg, window.len, window.sample_rate)?;
    Ok(receive_coherent(&wave.signal, &wave, CoherentRxParams::default())?.q_db)
}

/// The single scripted calibration: PD thermal noise so the baseline EVM
/// hits its target, and transmitter SNR so each coherent preset hits its
/// back-to-back Q. Nothing else is fitted.
pub fn calibrate(plant: &PlantDefaults, targets: &CalibrationTargets) -> Result<CalibrationResult> {
    let evm_at = |density: f64| {
        let p = PlantDefaults { pd: PdParams { thermal_noise_density: density, ..plant.pd }, ..plant.clone() };
        baseline_evm(&p, targets.arof_bw, targets.seed)
    };
    // EVM grows with the density; search in log space.
    let log_density = bisect(|x| evm_at(10f64.powf(x)), targets.baseline_evm_pct, -13.0, -9.0, 40)?;
    let density = 10f64.powf(log_density);
    let mut fitted = plant.clone();
    fitted.pd.thermal_noise_density = density;
    let baseline_evm_pct = baseline_evm(&fitted, targets.arof_bw, targets.seed)?;

    // Q rises with the transmitter SNR.
    let snr_100 = bisect(|s| coherent_b2b_q("100G", s, targets.seed), targets.q_100g_db, 5.0, 30.0, 30)?;
    let snr_400 = bisect(|s| coherent_b2b_q("400G", s, targets.seed), targets.q_400g_db, 5.0, 30.0, 30)?;
    Ok(CalibrationResult {
        thermal_noise_density: density,
        baseline_evm_pct,
        tx_snr_100g_db: snr_100,
        q_100g_db: coherent_b2b_q("100G", snr_100, targets.seed)?,
        tx_snr_400g_db: snr_400,
        q_400g_db: coherent_b2b_q("400G", snr_400, targets.seed)?,
        plant: fitted,
    })
}
