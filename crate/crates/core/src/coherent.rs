//! DP-QPSK / DP-16QAM coherent carrier and its Q-factor receiver.
//!
//! The waveform is built in the frequency domain as an exactly periodic
//! root-raised-cosine pulse train, which requires the record to hold a whole
//! number of symbols (`len · baud / sample_rate` integer). The two
//! polarizations are independent tracks with no coupling.
//!
//! The occupied width is the full raised-cosine extent `baud · (1 + rolloff)`;
//! the spectrum is identically zero outside it.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};
use crate::ofdm::Qam;
use crate::signal::{add_complex_awgn, bin_frequency, fft_in_place, ifft_in_place, DualPolSignal, SampledSignal};

/// Reported Q when no errors are counted, dB.
pub const Q_CEILING_DB: f64 = 20.0;

/// Below this many bit errors the BER estimate is too coarse and Q is taken
/// from the data-aided EVM instead.
pub const MIN_ERRORS_FOR_BER: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoherentFormat {
    #[serde(rename = "DP-QPSK")]
    DpQpsk,
    #[serde(rename = "DP-16QAM")]
    Dp16Qam,
}

impl CoherentFormat {
    pub fn qam_order(self) -> u32 {
        match self {
            Self::DpQpsk => 4,
            Self::Dp16Qam => 16,
        }
    }

    /// Theoretical Gray-coded BER at a per-symbol SNR (Es/N0, linear).
    pub fn ber_at_snr(self, snr: f64) -> f64 {
        match self {
            Self::DpQpsk => 0.5 * erfc((snr / 2.0).sqrt()),
            Self::Dp16Qam => 0.375 * erfc((snr / 10.0).sqrt()),
        }
    }
}

impl std::fmt::Display for CoherentFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::DpQpsk => "DP-QPSK",
            Self::Dp16Qam => "DP-16QAM",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherentConfig {
    /// Symbol rate, Bd.
    pub baud: f64,
    pub format: CoherentFormat,
    pub rolloff: f64,
    /// Allocated ROADM slot, Hz.
    pub channel_width: f64,
    /// Occupied width, Hz. Presets carry the vendor-quoted figure, which
    /// agrees with `baud · (1 + rolloff)` to within 10 MHz.
    pub occupied_width: f64,
    /// Transponder implementation SNR (Es/N0) in dB, `None` for a noiseless
    /// transmitter.
    pub tx_snr_db: Option<f64>,
    pub seed: u64,
}

/// Tolerance between the stored and the computed occupied width.
const OCCUPIED_WIDTH_TOLERANCE_HZ: f64 = 10e6;

impl CoherentConfig {
    /// 31.5 GBd DP-QPSK in a 50 GHz slot.
    pub fn preset_100g() -> Self {
        Self {
            baud: 31.5e9,
            format: CoherentFormat::DpQpsk,
            rolloff: 0.195,
            channel_width: 50e9,
            occupied_width: 37.64e9,
            tx_snr_db: Some(17.298),
            seed: 100,
        }
    }

    /// 69 GBd DP-16QAM in a 100 GHz slot.
    pub fn preset_400g() -> Self {
        Self {
            baud: 69e9,
            format: CoherentFormat::Dp16Qam,
            rolloff: 0.195,
            channel_width: 100e9,
            occupied_width: 82.46e9,
            tx_snr_db: Some(17.074),
            seed: 400,
        }
    }

    /// Build with the occupied width derived from baud and roll-off.
    pub fn derived(baud: f64, format: CoherentFormat, rolloff: f64, channel_width: f64) -> Self {
        Self { baud, format, rolloff, channel_width, occupied_width: baud * (1.0 + rolloff), tx_snr_db: None, seed: 1 }
    }

    pub fn computed_occupied_width(&self) -> f64 {
        self.baud * (1.0 + self.rolloff)
    }

    /// Line rate over both polarizations, bit/s.
    pub fn line_rate(&self) -> f64 {
        2.0 * self.baud * (self.format.qam_order() as f64).log2()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.baud > 0.0) || !(self.channel_width > 0.0) {
            return Err(Error::Config("baud and channel width must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.rolloff) {
            return Err(Error::Config(format!("roll-off {} must lie in [0, 1]", self.rolloff)));
        }
        if (self.occupied_width - self.computed_occupied_width()).abs() > OCCUPIED_WIDTH_TOLERANCE_HZ {
            return Err(Error::Config(format!(
                "occupied width {} Hz disagrees with baud·(1+rolloff) = {} Hz",
                self.occupied_width,
                self.computed_occupied_width()
            )));
        }
        if self.occupied_width > self.channel_width {
            return Err(Error::Config(format!(
                "occupied width {} Hz exceeds the {} Hz channel",
                self.occupied_width, self.channel_width
            )));
        }
        Ok(())
    }

    pub fn symbols_in(&self, len: usize, sample_rate: f64) -> Result<usize> {
        let exact = len as f64 * self.baud / sample_rate;
        let n = exact.round();
        if n < 1.0 || (exact - n).abs() > 1e-6 {
            return Err(Error::Config(format!(
                "a {len}-sample record at {sample_rate} Hz holds {exact} symbols at {} Bd; need a whole number",
                self.baud
            )));
        }
        Ok(n as usize)
    }
}

/// Symbol-DFT index for window bin `k`, following the sign convention of
/// [`bin_frequency`].
fn symbol_bin(k: usize, len: usize, n_sym: usize) -> usize {
    let signed = if 2 * k >= len { k as i64 - len as i64 } else { k as i64 };
    signed.rem_euclid(n_sym as i64) as usize
}

/// Root-raised-cosine amplitude spectrum, unit peak.
pub fn rrc_amplitude(f: f64, baud: f64, rolloff: f64) -> f64 {
    let t = 1.0 / baud;
    let af = f.abs();
    let inner = (1.0 - rolloff) / (2.0 * t);
    let outer = (1.0 + rolloff) / (2.0 * t);
    if af <= inner {
        1.0
    } else if af <= outer {
        (0.5 * (1.0 + (PI * t / rolloff * (af - inner)).cos())).sqrt()
    } else {
        0.0
    }
}

/// Transmitted waveform together with what the receiver is allowed to know.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentWaveform {
    /// Unit total power over both tracks.
    pub signal: DualPolSignal,
    pub bits: [Vec<u8>; 2],
    pub symbols: [Vec<Complex64>; 2],
    pub config: CoherentConfig,
}

/// Generate the coherent carrier on a `len`-sample window at `sample_rate`.
pub fn generate_coherent(cfg: &CoherentConfig, len: usize, sample_rate: f64) -> Result<CoherentWaveform> {
    cfg.validate()?;
    if sample_rate < 2.0 * cfg.occupied_width {
        return Err(Error::Config(format!(
            "sample rate {sample_rate} Hz is below twice the occupied width {} Hz",
            cfg.occupied_width
        )));
    }
    let n_sym = cfg.symbols_in(len, sample_rate)?;
    let qam = Qam::new(cfg.format.qam_order())?;
    let mut tracks = Vec::with_capacity(2);
    let mut all_bits = Vec::with_capacity(2);
    let mut all_symbols = Vec::with_capacity(2);
    for pol in 0..2u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(pol);
        let bits = qam.random_bits(n_sym, &mut rng);
        let symbols = qam.map(&bits)?;
        let mut driven = symbols.clone();
        if let Some(snr_db) = cfg.tx_snr_db {
            let sym = SampledSignal::new(driven, cfg.baud, 0.0)?;
            let noisy = add_complex_awgn(&sym, 10f64.powf(-snr_db / 10.0), &mut rng);
            driven = noisy.into_samples();
        }
        fft_in_place(&mut driven);
        let mut spec = vec![Complex64::new(0.0, 0.0); len];
        for (k, x) in spec.iter_mut().enumerate() {
            let f = bin_frequency(k, len, sample_rate);
            let p = rrc_amplitude(f, cfg.baud, cfg.rolloff);
            if p > 0.0 {
                let idx = symbol_bin(k, len, n_sym);
                *x = driven[idx] * p;
            }
        }
        ifft_in_place(&mut spec);
        tracks.push(SampledSignal::new(spec, sample_rate, 0.0)?);
        all_bits.push(bits);
        all_symbols.push(symbols);
    }
    let y = tracks.pop().expect("two tracks");
    let x = tracks.pop().expect("two tracks");
    let total = x.power_mw() + y.power_mw();
    let norm = 1.0 / total.sqrt();
    let signal = DualPolSignal::new(x.scaled(norm), y.scaled(norm))?;
    let mut bits = all_bits.into_iter();
    let mut symbols = all_symbols.into_iter();
    Ok(CoherentWaveform {
        signal,
        bits: [bits.next().unwrap(), bits.next().unwrap()],
        symbols: [symbols.next().unwrap(), symbols.next().unwrap()],
        config: cfg.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QSource {
    Ber,
    Evm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QReport {
    pub ber: f64,
    pub bit_errors: u64,
    pub bits: u64,
    /// Reported Q, dB. From the BER when at least [`MIN_ERRORS_FOR_BER`]
    /// errors were counted, otherwise from the EVM; never above
    /// [`Q_CEILING_DB`].
    pub q_db: f64,
    pub q_source: QSource,
    /// Q implied by the data-aided EVM through the format's BER curve, dB.
    pub q_evm_db: f64,
    pub evm_coherent: f64,
    pub no_errors: bool,
    pub capped: bool,
}

/// Q in dB for a bit-error ratio: 20·log10(√2 · erfc⁻¹(2·BER)).
pub fn q_from_ber(ber: f64) -> f64 {
    20.0 * (std::f64::consts::SQRT_2 * erfc_inv(2.0 * ber)).log10()
}

/// Receiver knowledge beyond the waveform itself.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CoherentRxParams {
    /// Accumulated group-velocity dispersion β₂·L in s² to undo.
    pub accumulated_beta2_l: f64,
}

/// Matched filter, static dispersion compensation, data-aided gain/phase
/// alignment per polarization, hard decisions and Q.
pub fn receive_coherent(rx: &DualPolSignal, tx: &CoherentWaveform, params: CoherentRxParams) -> Result<QReport> {
    let cfg = &tx.config;
    let len = rx.len();
    let rate = rx.sample_rate();
    let n_sym = cfg.symbols_in(len, rate)?;
    if n_sym == 0 || tx.symbols[0].len() != n_sym {
        return Err(Error::Shape(format!(
            "received window holds {n_sym} symbols, transmitter sent {}",
            tx.symbols[0].len()
        )));
    }
    let qam = Qam::new(cfg.format.qam_order())?;
    let offset = rx.x.center_offset();
    let mut errors = 0u64;
    let mut total_bits = 0u64;
    let mut err_energy = 0.0;
    let mut ref_energy = 0.0;

    for (pol, track) in [&rx.x, &rx.y].into_iter().enumerate() {
        let mut spec = track.spectrum();
        let mut folded = vec![Complex64::new(0.0, 0.0); n_sym];
        for (k, x) in spec.iter_mut().enumerate() {
            let f = bin_frequency(k, len, rate);
            let p = rrc_amplitude(f, cfg.baud, cfg.rolloff);
            if p == 0.0 {
                continue;
            }
            let w = 2.0 * PI * (f + offset);
            let cd = Complex64::from_polar(1.0, 0.5 * params.accumulated_beta2_l * w * w);
            let idx = symbol_bin(k, len, n_sym);
            folded[idx] += *x * p * cd;
        }
        ifft_in_place(&mut folded);
        let reference = &tx.symbols[pol];
        let num: Complex64 = folded.iter().zip(reference).map(|(y, s)| y * s.conj()).sum();
        let den: f64 = reference.iter().map(|s| s.norm_sqr()).sum();
        let gain = num / den;
        if gain.norm() == 0.0 {
            return Err(Error::Empty("no coherent signal at the receiver"));
        }
        let aligned: Vec<Complex64> = folded.iter().map(|y| y / gain).collect();
        err_energy += aligned.iter().zip(reference).map(|(y, s)| (y - s).norm_sqr()).sum::<f64>();
        ref_energy += den;
        let decided = qam.demap(&aligned);
        errors += decided.iter().zip(&tx.bits[pol]).filter(|(a, b)| a != b).count() as u64;
        total_bits += decided.len() as u64;
    }
    if total_bits == 0 {
        return Err(Error::Empty("no coherent symbols demodulated"));
    }

    let evm = (err_energy / ref_energy).sqrt();
    let snr = 1.0 / (evm * evm);
    let q_evm_raw = q_from_ber(cfg.format.ber_at_snr(snr));
    let q_evm_db = if q_evm_raw.is_finite() { q_evm_raw.min(Q_CEILING_DB) } else { Q_CEILING_DB };
    let ber = errors as f64 / total_bits as f64;
    let (q_raw, q_source) =
        if errors >= MIN_ERRORS_FOR_BER { (q_from_ber(ber), QSource::Ber) } else { (q_evm_raw, QSource::Evm) };
    let capped = !(q_raw.is_finite() && q_raw < Q_CEILING_DB);
    Ok(QReport {
        ber,
        bit_errors: errors,
        bits: total_bits,
        q_db: if capped { Q_CEILING_DB } else { q_raw },
        q_source,
        q_evm_db,
        evm_coherent: 100.0 * evm,
        no_errors: errors == 0,
        capped,
    })
}

/// Complex noise power per sample that gives `esn0_db` per symbol on one
/// polarization carrying `power_per_pol_mw`.
pub fn noise_power_for_esn0(power_per_pol_mw: f64, baud: f64, sample_rate: f64, esn0_db: f64) -> f64 {
    power_per_pol_mw * (sample_rate / baud) / 10f64.powf(esn0_db / 10.0)
}
