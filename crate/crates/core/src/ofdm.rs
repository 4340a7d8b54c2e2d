//! IF-OFDM modem for the ARoF branches.
//!
//! Data sit on `n_data_sc` subcarriers centred on the IF with the centre
//! (DC) subcarrier left empty. Each symbol is synthesised directly at the
//! output sample rate with an `M = sample_rate / sc_spacing` point IFFT,
//! which is the band-limited interpolation of an `fft_size` baseband symbol
//! followed by a real up-conversion to `if_freq`. The receiver mirrors this:
//! an M-point FFT over each symbol window, picking the IF bins, is the
//! down-conversion, low-pass and baseband FFT in one step.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{fft_in_place, ifft_in_place, SampledSignal};

/// 3GPP EVM limit for 64-QAM, in percent.
pub const EVM_LIMIT_64QAM_PCT: f64 = 8.0;

/// Smallest EVM value reported (percent); exact matches clamp to this.
pub const EVM_FLOOR_PCT: f64 = 1e-9;

/// Square Gray-coded QAM with unit average energy.
///
/// Bits are consumed `log2(order)` at a time, MSB first. The first half of
/// each group selects the in-phase level, the second half the quadrature
/// level. Per axis, Gray value 0 is the most positive level, so for QPSK
/// `00 → (+1 + j)/√2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Qam {
    order: u32,
    bits_per_axis: u32,
    levels: u32,
    norm: f64,
}

impl Qam {
    pub fn new(order: u32) -> Result<Self> {
        if !matches!(order, 4 | 16 | 64) {
            return Err(Error::Config(format!("unsupported QAM order {order}; expected 4, 16 or 64")));
        }
        let bits = order.trailing_zeros();
        let levels = 1u32 << (bits / 2);
        Ok(Self { order, bits_per_axis: bits / 2, levels, norm: (2.0 * (order as f64 - 1.0) / 3.0).sqrt() })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        (2 * self.bits_per_axis) as usize
    }

    fn axis_level(&self, gray: u32) -> f64 {
        // Gray → binary.
        let mut b = gray;
        let mut shift = 1;
        while shift < self.bits_per_axis {
            b ^= b >> shift;
            shift <<= 1;
        }
        (self.levels - 1) as f64 - 2.0 * b as f64
    }

    fn axis_bits(&self, value: f64) -> u32 {
        let scaled = value * self.norm;
        let max = (self.levels - 1) as f64;
        let idx = ((max - scaled) / 2.0).round().clamp(0.0, max) as u32;
        idx ^ (idx >> 1)
    }

    pub fn map(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        let k = self.bits_per_symbol();
        if !bits.len().is_multiple_of(k) {
            return Err(Error::Shape(format!("{} bits is not a multiple of {k}", bits.len())));
        }
        let half = self.bits_per_axis as usize;
        let word = |chunk: &[u8]| chunk.iter().fold(0u32, |acc, &b| (acc << 1) | (b & 1) as u32);
        Ok(bits
            .chunks(k)
            .map(|c| {
                let i = self.axis_level(word(&c[..half]));
                let q = self.axis_level(word(&c[half..]));
                Complex64::new(i, q) / self.norm
            })
            .collect())
    }

    /// Nearest-point hard decision back to bits.
    pub fn demap(&self, symbols: &[Complex64]) -> Vec<u8> {
        let half = self.bits_per_axis as usize;
        let mut out = Vec::with_capacity(symbols.len() * self.bits_per_symbol());
        for s in symbols {
            for word in [self.axis_bits(s.re), self.axis_bits(s.im)] {
                for i in (0..half).rev() {
                    out.push(((word >> i) & 1) as u8);
                }
            }
        }
        out
    }

    /// Nearest constellation point.
    pub fn decide(&self, s: Complex64) -> Complex64 {
        let snap = |v: f64| {
            let max = (self.levels - 1) as f64;
            let idx = ((max - v * self.norm) / 2.0).round().clamp(0.0, max);
            (max - 2.0 * idx) / self.norm
        };
        Complex64::new(snap(s.re), snap(s.im))
    }

    pub fn points(&self) -> Vec<Complex64> {
        let bits: Vec<u8> = (0..self.order)
            .flat_map(|w| (0..self.bits_per_symbol()).rev().map(move |i| ((w >> i) & 1) as u8))
            .collect();
        self.map(&bits).expect("whole number of symbols")
    }

    pub fn random_bits<R: Rng + ?Sized>(&self, n_symbols: usize, rng: &mut R) -> Vec<u8> {
        (0..n_symbols * self.bits_per_symbol()).map(|_| rng.random_range(0..2u8)).collect()
    }
}

pub fn qam_map(bits: &[u8], order: u32) -> Result<Vec<Complex64>> {
    Qam::new(order)?.map(bits)
}

pub fn qam_demap(symbols: &[Complex64], order: u32) -> Result<Vec<u8>> {
    Ok(Qam::new(order)?.demap(symbols))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfdmConfig {
    pub fft_size: usize,
    pub n_data_sc: usize,
    /// Hz.
    pub sc_spacing: f64,
    /// Cyclic prefix length as a fraction of the useful symbol.
    pub cp_fraction: f64,
    pub qam_order: u32,
    /// Hz.
    pub if_freq: f64,
    /// Data symbols per frame.
    pub n_symbols: usize,
    pub n_training_symbols: usize,
    /// Rate of the generated IF waveform, Hz.
    pub sample_rate: f64,
    /// Channel-estimate smoothing across neighbouring subcarriers (odd, ≥ 1).
    pub smoothing: usize,
    pub seed: u64,
}

impl Default for OfdmConfig {
    fn default() -> Self {
        Self {
            fft_size: 2048,
            n_data_sc: 128,
            sc_spacing: 1.5625e6,
            cp_fraction: 1.0 / 16.0,
            qam_order: 64,
            if_freq: 2e9,
            n_symbols: 8,
            n_training_symbols: 4,
            sample_rate: 12.8e9,
            smoothing: 5,
            seed: 1,
        }
    }
}

impl OfdmConfig {
    /// Default numerology with the data-subcarrier count that gives
    /// `bandwidth` at the default 1.5625 MHz spacing.
    pub fn for_bandwidth(bandwidth: f64) -> Self {
        let base = Self::default();
        Self { n_data_sc: (bandwidth / base.sc_spacing).round() as usize, ..base }
    }

    pub fn bandwidth(&self) -> f64 {
        self.n_data_sc as f64 * self.sc_spacing
    }

    pub fn bits_per_symbol(&self) -> f64 {
        (self.qam_order as f64).log2()
    }

    /// n_data_sc · Δf · log2(M), bit/s.
    pub fn raw_bit_rate(&self) -> f64 {
        self.bandwidth() * self.bits_per_symbol()
    }

    /// Raw rate net of cyclic-prefix and training overhead.
    pub fn net_bit_rate(&self) -> f64 {
        let frame = (self.n_symbols + self.n_training_symbols) as f64;
        self.raw_bit_rate() / (1.0 + self.cp_fraction) * self.n_symbols as f64 / frame
    }

    /// IFFT length at the output rate.
    pub fn symbol_len(&self) -> usize {
        (self.sample_rate / self.sc_spacing).round() as usize
    }

    pub fn cp_len(&self) -> usize {
        (self.cp_fraction * self.symbol_len() as f64).round() as usize
    }

    pub fn frame_len(&self) -> usize {
        (self.n_symbols + self.n_training_symbols) * (self.symbol_len() + self.cp_len())
    }

    fn if_bin(&self) -> usize {
        (self.if_freq / self.sc_spacing).round() as usize
    }

    /// Signed baseband subcarrier indices, DC excluded.
    pub fn subcarrier_indices(&self) -> Vec<i64> {
        let n = self.n_data_sc as i64;
        let neg = n / 2;
        let pos = n - neg;
        (-neg..0).chain(1..=pos).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        Qam::new(self.qam_order)?;
        if self.n_data_sc == 0 || self.n_data_sc > self.fft_size.saturating_sub(1) {
            return bad(format!("n_data_sc {} must lie in 1..={}", self.n_data_sc, self.fft_size.saturating_sub(1)));
        }
        if !(self.sc_spacing > 0.0) || !(self.if_freq > 0.0) || !(self.sample_rate > 0.0) {
            return bad("subcarrier spacing, IF and sample rate must be positive".into());
        }
        if !(0.0..1.0).contains(&self.cp_fraction) {
            return bad(format!("cp_fraction {} must lie in [0, 1)", self.cp_fraction));
        }
        if self.n_symbols == 0 || self.n_training_symbols == 0 {
            return bad("need at least one data and one training symbol".into());
        }
        if self.smoothing == 0 || self.smoothing.is_multiple_of(2) {
            return bad(format!("smoothing window {} must be odd", self.smoothing));
        }
        let ratio = self.sample_rate / self.sc_spacing;
        if (ratio - ratio.round()).abs() > 1e-6 {
            return bad(format!("sample rate {} is not a multiple of the subcarrier spacing", self.sample_rate));
        }
        let if_ratio = self.if_freq / self.sc_spacing;
        if (if_ratio - if_ratio.round()).abs() > 1e-6 {
            return bad(format!("IF {} is not a multiple of the subcarrier spacing", self.if_freq));
        }
        let half_bw = self.bandwidth() / 2.0;
        if self.if_freq - half_bw <= 0.0 {
            return bad(format!("IF {} Hz folds a {} Hz band over DC", self.if_freq, self.bandwidth()));
        }
        if self.if_freq + half_bw >= self.sample_rate / 2.0 {
            return bad(format!(
                "IF band edge {} Hz exceeds Nyquist at {} Hz",
                self.if_freq + half_bw,
                self.sample_rate
            ));
        }
        Ok(())
    }
}

/// Symbols × subcarriers, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolGrid {
    pub n_symbols: usize,
    pub n_subcarriers: usize,
    pub data: Vec<Complex64>,
}

impl SymbolGrid {
    pub fn new(n_symbols: usize, n_subcarriers: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != n_symbols * n_subcarriers {
            return Err(Error::Shape(format!("{} values for a {n_symbols}×{n_subcarriers} grid", data.len())));
        }
        Ok(Self { n_symbols, n_subcarriers, data })
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.n_subcarriers..(i + 1) * self.n_subcarriers]
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OfdmFrame {
    /// Real IF waveform (zero imaginary part), unit mean power.
    pub tx_waveform: SampledSignal,
    pub reference_symbols: SymbolGrid,
    pub training_symbols: SymbolGrid,
    pub config: OfdmConfig,
}

fn synthesize_symbol(config: &OfdmConfig, row: &[Complex64], out: &mut Vec<f64>) {
    let m = config.symbol_len();
    let cp = config.cp_len();
    let if_bin = config.if_bin() as i64;
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (&k, &d) in config.subcarrier_indices().iter().zip(row) {
        let b = (if_bin + k) as usize;
        buf[b] = d;
        buf[m - b] = d.conj();
    }
    ifft_in_place(&mut buf);
    out.extend(buf[m - cp..].iter().map(|x| x.re));
    out.extend(buf.iter().map(|x| x.re));
}

/// Build the transmitted frame: training symbols, then data, each with a
/// cyclic prefix. Deterministic in `config.seed`.
pub fn modulate(config: &OfdmConfig) -> Result<OfdmFrame> {
    config.validate()?;
    let qam = Qam::new(config.qam_order)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.n_data_sc;

    let training = qam.map(&qam.random_bits(config.n_training_symbols * n, &mut rng))?;
    let data = qam.map(&qam.random_bits(config.n_symbols * n, &mut rng))?;
    let training = SymbolGrid::new(config.n_training_symbols, n, training)?;
    let reference = SymbolGrid::new(config.n_symbols, n, data)?;

    let mut wave = Vec::with_capacity(config.frame_len());
    for i in 0..training.n_symbols {
        synthesize_symbol(config, training.row(i), &mut wave);
    }
    for i in 0..reference.n_symbols {
        synthesize_symbol(config, reference.row(i), &mut wave);
    }
    let power = wave.iter().map(|x| x * x).sum::<f64>() / wave.len() as f64;
    let norm = 1.0 / power.sqrt();
    wave.iter_mut().for_each(|x| *x *= norm);

    Ok(OfdmFrame {
        tx_waveform: SampledSignal::from_real(&wave, config.sample_rate, 0.0)?,
        reference_symbols: reference,
        training_symbols: training,
        config: config.clone(),
    })
}

/// Receive-side FFT of one symbol, returning the data-subcarrier bins.
///
/// The window starts half a cyclic prefix early so that small positive or
/// negative delays stay inside the prefix; the resulting linear phase is
/// removed here so the channel estimate stays smooth across subcarriers.
fn analyze_symbol(config: &OfdmConfig, rx: &[Complex64], index: usize) -> Vec<Complex64> {
    let m = config.symbol_len();
    let cp = config.cp_len();
    let backoff = cp / 2;
    let start = index * (m + cp) + cp - backoff;
    let mut buf = rx[start..start + m].to_vec();
    fft_in_place(&mut buf);
    let if_bin = config.if_bin() as i64;
    config
        .subcarrier_indices()
        .iter()
        .map(|&k| {
            let b = (if_bin + k) as usize;
            let ramp = Complex64::from_polar(1.0, 2.0 * PI * (b * backoff) as f64 / m as f64);
            buf[b] * ramp
        })
        .collect()
}

/// One-tap-per-subcarrier least-squares channel estimate from the training
/// symbols, pooled over `config.smoothing` neighbouring subcarriers.
fn estimate_channel(config: &OfdmConfig, rx: &[Complex64], training: &SymbolGrid) -> Vec<Complex64> {
    let n = config.n_data_sc;
    let mut cross = vec![Complex64::new(0.0, 0.0); n];
    let mut energy = vec![0.0; n];
    for t in 0..training.n_symbols {
        let y = analyze_symbol(config, rx, t);
        for (k, (y, x)) in y.iter().zip(training.row(t)).enumerate() {
            cross[k] += y * x.conj();
            energy[k] += x.norm_sqr();
        }
    }
    let half = config.smoothing / 2;
    (0..n)
        .map(|k| {
            let lo = k.saturating_sub(half);
            let hi = (k + half).min(n - 1);
            cross[lo..=hi].iter().sum::<Complex64>() / energy[lo..=hi].iter().sum::<f64>()
        })
        .collect()
}

/// Downconvert, strip prefixes, FFT and equalise. `rx` must be on the
/// frame's sample grid with the frame starting at sample 0.
pub fn demodulate(rx: &SampledSignal, frame: &OfdmFrame) -> Result<SymbolGrid> {
    let config = &frame.config;
    if rx.sample_rate() != config.sample_rate {
        return Err(Error::RateMismatch(config.sample_rate, rx.sample_rate()));
    }
    if rx.len() < config.frame_len() {
        return Err(Error::TooShort { what: "received OFDM frame", needed: config.frame_len(), got: rx.len() });
    }
    let samples = rx.samples();
    let channel = estimate_channel(config, samples, &frame.training_symbols);
    let mut out = Vec::with_capacity(config.n_symbols * config.n_data_sc);
    for i in 0..config.n_symbols {
        let y = analyze_symbol(config, samples, config.n_training_symbols + i);
        out.extend(y.iter().zip(&channel).map(|(y, h)| y / h));
    }
    SymbolGrid::new(config.n_symbols, config.n_data_sc, out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvmReport {
    pub evm_rms: f64,
    pub per_subcarrier_evm: Vec<f64>,
    pub snr_equivalent: f64,
    pub limit_pct: f64,
    pub pass: bool,
    /// True when the measured EVM was at or below [`EVM_FLOOR_PCT`].
    pub below_floor: bool,
}

pub fn compute_evm(equalized: &SymbolGrid, reference: &SymbolGrid) -> Result<EvmReport> {
    compute_evm_with_limit(equalized, reference, EVM_LIMIT_64QAM_PCT)
}

/// 100·sqrt(mean|r − s|² / mean|s|²), overall and per subcarrier. Both use
/// the mean reference power of the whole grid.
pub fn compute_evm_with_limit(equalized: &SymbolGrid, reference: &SymbolGrid, limit_pct: f64) -> Result<EvmReport> {
    if equalized.is_empty() || reference.is_empty() {
        return Err(Error::Empty("EVM of an empty grid"));
    }
    if equalized.n_symbols != reference.n_symbols || equalized.n_subcarriers != reference.n_subcarriers {
        return Err(Error::Shape(format!(
            "equalized {}×{} vs reference {}×{}",
            equalized.n_symbols, equalized.n_subcarriers, reference.n_symbols, reference.n_subcarriers
        )));
    }
    let err: f64 = equalized.data.iter().zip(&reference.data).map(|(r, s)| (r - s).norm_sqr()).sum();
    let sig: f64 = reference.data.iter().map(|s| s.norm_sqr()).sum();
    let raw = 100.0 * (err / sig).sqrt();
    let below_floor = raw <= EVM_FLOOR_PCT;
    let evm_rms = raw.max(EVM_FLOOR_PCT);
    let mean_sig = sig / reference.data.len() as f64;

    let per_subcarrier_evm = (0..reference.n_subcarriers)
        .map(|k| {
            let e: f64 = (0..reference.n_symbols)
                .map(|i| {
                    let idx = i * reference.n_subcarriers + k;
                    (equalized.data[idx] - reference.data[idx]).norm_sqr()
                })
                .sum();
            (100.0 * (e / reference.n_symbols as f64 / mean_sig).sqrt()).max(EVM_FLOOR_PCT)
        })
        .collect();

    Ok(EvmReport {
        evm_rms,
        per_subcarrier_evm,
        snr_equivalent: -20.0 * (evm_rms / 100.0).log10(),
        limit_pct,
        pass: evm_rms <= limit_pct,
        below_floor,
    })
}

/// Variance of real white noise that gives `snr_db` per data subcarrier
/// when added to the frame's IF waveform.
pub fn in_band_noise_variance(frame: &OfdmFrame, snr_db: f64) -> f64 {
    let cfg = &frame.config;
    let p = frame.tx_waveform.power_mw();
    // The real waveform's power sits in ±bandwidth around ±IF.
    p * cfg.sample_rate / (2.0 * cfg.bandwidth() * 10f64.powf(snr_db / 10.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::add_real_awgn;

    #[test]
    fn qpsk_zero_bits_map_to_first_quadrant() {
        let s = qam_map(&[0, 0], 4).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s[0] - Complex64::new(r, r)).norm() < 1e-15);
        let s = qam_map(&[1, 1], 4).unwrap();
        assert!((s[0] - Complex64::new(-r, -r)).norm() < 1e-15);
    }

    #[test]
    fn constellations_have_unit_energy() {
        for order in [4, 16, 64] {
            let pts = Qam::new(order).unwrap().points();
            assert_eq!(pts.len(), order as usize);
            let e = pts.iter().map(|p| p.norm_sqr()).sum::<f64>() / pts.len() as f64;
            assert!((e - 1.0).abs() < 1e-12, "order {order}: {e}");
        }
    }

    #[test]
    fn gray_neighbours_differ_by_one_bit() {
        let qam = Qam::new(64).unwrap();
        let pts = qam.points();
        let d_min = 2.0 / (42.0f64).sqrt();
        for (i, a) in pts.iter().enumerate() {
            for (j, b) in pts.iter().enumerate() {
                if ((a - b).norm() - d_min).abs() < 1e-9 {
                    assert_eq!((i ^ j).count_ones(), 1, "{i} vs {j}");
                }
            }
        }
    }

    #[test]
    fn map_demap_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for order in [4, 16, 64] {
            let qam = Qam::new(order).unwrap();
            let bits = qam.random_bits(500, &mut rng);
            assert_eq!(qam.demap(&qam.map(&bits).unwrap()), bits);
        }
    }

    #[test]
    fn bad_orders_and_lengths() {
        assert!(Qam::new(8).is_err());
        assert!(Qam::new(32).is_err());
        assert!(Qam::new(256).is_err());
        assert!(qam_map(&[0, 1, 0], 4).is_err());
    }

    #[test]
    fn raw_rates_of_the_bandwidth_family() {
        let rates: Vec<f64> =
            [200e6, 400e6, 800e6, 1600e6].iter().map(|&bw| OfdmConfig::for_bandwidth(bw).raw_bit_rate()).collect();
        assert_eq!(rates, vec![1.2e9, 2.4e9, 4.8e9, 9.6e9]);
        assert_eq!(OfdmConfig::for_bandwidth(200e6).n_data_sc, 128);
        assert_eq!(OfdmConfig::for_bandwidth(1.6e9).n_data_sc, 1024);
        let c = OfdmConfig::for_bandwidth(1.6e9);
        assert!(c.net_bit_rate() < c.raw_bit_rate());
    }

    #[test]
    fn config_validation() {
        let ok = OfdmConfig::default();
        ok.validate().unwrap();
        assert!(OfdmConfig { if_freq: 0.05e9, ..ok.clone() }.validate().is_err());
        assert!(OfdmConfig { n_data_sc: 2048, ..ok.clone() }.validate().is_err());
        assert!(OfdmConfig { sample_rate: 4e9, ..ok.clone() }.validate().is_err());
        assert!(OfdmConfig { sample_rate: 12.8e9 + 1e5, ..ok.clone() }.validate().is_err());
        assert!(OfdmConfig { qam_order: 8, ..ok.clone() }.validate().is_err());
        assert!(OfdmConfig { smoothing: 4, ..ok }.validate().is_err());
    }

    #[test]
    fn modulate_is_deterministic() {
        let cfg = OfdmConfig::default();
        let a = modulate(&cfg).unwrap();
        let b = modulate(&cfg).unwrap();
        assert_eq!(a.tx_waveform, b.tx_waveform);
        let c = modulate(&OfdmConfig { seed: 2, ..cfg }).unwrap();
        assert_ne!(a.tx_waveform, c.tx_waveform);
    }

    #[test]
    fn frame_shape_and_realness() {
        let cfg = OfdmConfig::default();
        let f = modulate(&cfg).unwrap();
        assert!(f.tx_waveform.is_real());
        assert_eq!(f.tx_waveform.len(), cfg.frame_len());
        assert_eq!(f.reference_symbols.n_symbols, cfg.n_symbols);
        assert_eq!(f.reference_symbols.n_subcarriers, cfg.n_data_sc);
        let qam = Qam::new(64).unwrap();
        for s in &f.reference_symbols.data {
            assert!((qam.decide(*s) - s).norm() < 1e-12);
        }
        assert!((f.tx_waveform.power_mw() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn loopback_is_clean() {
        let f = modulate(&OfdmConfig::for_bandwidth(800e6)).unwrap();
        let eq = demodulate(&f.tx_waveform, &f).unwrap();
        let evm = compute_evm(&eq, &f.reference_symbols).unwrap();
        assert!(evm.evm_rms < 0.1, "{}", evm.evm_rms);
    }

    #[test]
    fn flat_gain_is_equalized() {
        let f = modulate(&OfdmConfig::default()).unwrap();
        let eq = demodulate(&f.tx_waveform.scaled(0.5), &f).unwrap();
        assert!(compute_evm(&eq, &f.reference_symbols).unwrap().evm_rms < 0.1);
    }

    #[test]
    fn awgn_at_25_db() {
        let cfg = OfdmConfig { n_symbols: 60, ..OfdmConfig::for_bandwidth(800e6) };
        let f = modulate(&cfg).unwrap();
        let var = in_band_noise_variance(&f, 25.0);
        let rx = add_real_awgn(&f.tx_waveform, var, &mut ChaCha8Rng::seed_from_u64(4));
        let evm = compute_evm(&demodulate(&rx, &f).unwrap(), &f.reference_symbols).unwrap();
        let expected = 100.0 * 10f64.powf(-25.0 / 20.0);
        assert!((20.0 * (evm.evm_rms / expected).log10()).abs() < 0.5, "{} vs {expected}", evm.evm_rms);
    }

    #[test]
    fn short_rx_is_rejected() {
        let f = modulate(&OfdmConfig::default()).unwrap();
        let short = f.tx_waveform.with_samples(f.tx_waveform.samples()[..1000].to_vec()).unwrap();
        assert!(matches!(demodulate(&short, &f), Err(Error::TooShort { .. })));
    }

    #[test]
    fn evm_definitions() {
        let f = modulate(&OfdmConfig::default()).unwrap();
        let r = &f.reference_symbols;
        let same = compute_evm(r, r).unwrap();
        assert!(same.below_floor && same.evm_rms <= EVM_FLOOR_PCT);

        let rms = (r.data.iter().map(|s| s.norm_sqr()).sum::<f64>() / r.data.len() as f64).sqrt();
        let offset = Complex64::new(0.08 * rms, 0.0);
        let shifted =
            SymbolGrid::new(r.n_symbols, r.n_subcarriers, r.data.iter().map(|s| s + offset).collect()).unwrap();
        let rep = compute_evm(&shifted, r).unwrap();
        assert!((rep.evm_rms - 8.0).abs() < 1e-9);
        assert!(rep.pass);
        assert!((rep.snr_equivalent + 20.0 * (0.08f64).log10()).abs() < 1e-9);
        assert!(rep.per_subcarrier_evm.iter().all(|e| (e - 8.0).abs() < 1e-9));

        let empty = SymbolGrid::new(0, 0, vec![]).unwrap();
        assert!(compute_evm(&empty, &empty).is_err());
        let other = SymbolGrid::new(1, r.n_subcarriers, r.row(0).to_vec()).unwrap();
        assert!(compute_evm(&other, r).is_err());
    }
}
