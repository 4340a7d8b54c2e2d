//! Sampled complex waveforms and the frequency-domain operations every other
//! module is built from.
//!
//! Amplitudes are in sqrt(mW), so `mean |x|²` is a power in mW in both the
//! optical and the electrical domain. A [`SampledSignal`] describes a window
//! of `sample_rate` Hz whose baseband centre sits `center_offset` Hz away from
//! the ROADM channel centre. Every operation is a pure function returning a
//! new value.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{db_to_lin, mw_to_dbm};

/// Fraction of energy used when locating the occupied band of a signal.
pub const OCCUPIED_ENERGY_FRACTION: f64 = 1.0 - 1e-6;

/// Floor applied to PSD bins before taking logarithms (mW/Hz).
const PSD_FLOOR_MW_PER_HZ: f64 = 1e-30;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// In-place unnormalised forward DFT.
pub fn fft_in_place(buf: &mut [Complex64]) {
    if !buf.is_empty() {
        plan(buf.len(), false).process(buf);
    }
}

/// In-place inverse DFT, normalised by 1/N so that `ifft(fft(x)) == x`.
pub fn ifft_in_place(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    plan(buf.len(), true).process(buf);
    let scale = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|x| *x *= scale);
}

/// Signed frequency of DFT bin `k` for an `n`-point transform at `rate` Hz.
pub fn bin_frequency(k: usize, n: usize, rate: f64) -> f64 {
    let signed = if k <= (n - 1) / 2 { k as f64 } else { k as f64 - n as f64 };
    // The Nyquist bin of an even transform is reported as negative.
    signed * rate / n as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSignal {
    samples: Vec<Complex64>,
    sample_rate: f64,
    center_offset: f64,
}

impl SampledSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64, center_offset: f64) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::InvalidSignal(format!("sample rate must be positive, got {sample_rate}")));
        }
        if samples.is_empty() {
            return Err(Error::InvalidSignal("no samples".into()));
        }
        if !center_offset.is_finite() {
            return Err(Error::InvalidSignal("center offset must be finite".into()));
        }
        if let Some(i) = samples.iter().position(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::InvalidSignal(format!("sample {i} is not finite")));
        }
        Ok(Self { samples, sample_rate, center_offset })
    }

    /// Real-valued waveform stored with a zero imaginary part.
    pub fn from_real(samples: &[f64], sample_rate: f64, center_offset: f64) -> Result<Self> {
        Self::new(samples.iter().map(|&r| Complex64::new(r, 0.0)).collect(), sample_rate, center_offset)
    }

    pub fn zeros(len: usize, sample_rate: f64, center_offset: f64) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); len], sample_rate, center_offset)
    }

    /// Continuous-wave carrier of the given power at baseband 0 Hz.
    pub fn carrier(len: usize, sample_rate: f64, power_mw: f64) -> Result<Self> {
        Self::new(vec![Complex64::new(power_mw.max(0.0).sqrt(), 0.0); len], sample_rate, 0.0)
    }

    /// Complex tone `amplitude · exp(j2π f t + phase)`.
    pub fn tone(len: usize, sample_rate: f64, freq: f64, amplitude: f64, phase: f64) -> Result<Self> {
        let samples = (0..len)
            .map(|n| Complex64::from_polar(amplitude, 2.0 * PI * frac(freq * n as f64 / sample_rate) + phase))
            .collect();
        Self::new(samples, sample_rate, 0.0)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn center_offset(&self) -> f64 {
        self.center_offset
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Mean |x|² in mW.
    pub fn power_mw(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    pub fn is_real(&self) -> bool {
        self.samples.iter().all(|s| s.im == 0.0)
    }

    /// Same window, new samples. Used by operations that keep the grid.
    pub fn with_samples(&self, samples: Vec<Complex64>) -> Result<Self> {
        Self::new(samples, self.sample_rate, self.center_offset)
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            sample_rate: self.sample_rate,
            center_offset: self.center_offset,
        }
    }

    pub fn scaled_complex(&self, gain: Complex64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            sample_rate: self.sample_rate,
            center_offset: self.center_offset,
        }
    }

    /// Zero-pad (or truncate) to `len` samples.
    pub fn padded_to(&self, len: usize) -> Result<Self> {
        let mut samples = self.samples.clone();
        samples.resize(len, Complex64::new(0.0, 0.0));
        self.with_samples(samples)
    }

    /// Unnormalised DFT of the samples.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut buf = self.samples.clone();
        fft_in_place(&mut buf);
        buf
    }

    /// Absolute frequency (relative to the channel centre) of each DFT bin.
    pub fn bin_frequencies(&self) -> Vec<f64> {
        let n = self.len();
        (0..n).map(|k| bin_frequency(k, n, self.sample_rate) + self.center_offset).collect()
    }

    /// Multiply the spectrum by `response(f)`, with `f` the absolute frequency
    /// relative to the channel centre.
    pub fn apply_transfer<F>(&self, response: F) -> Self
    where
        F: Fn(f64) -> Complex64,
    {
        let n = self.len();
        let mut buf = self.spectrum();
        for (k, x) in buf.iter_mut().enumerate() {
            *x *= response(bin_frequency(k, n, self.sample_rate) + self.center_offset);
        }
        ifft_in_place(&mut buf);
        Self { samples: buf, sample_rate: self.sample_rate, center_offset: self.center_offset }
    }

    /// Smallest baseband interval holding `fraction` of the signal energy,
    /// trimming equal energy from both tails. Frequencies are relative to the
    /// window centre, not the channel centre.
    pub fn occupied_band(&self, fraction: f64) -> (f64, f64) {
        let n = self.len();
        let spec = self.spectrum();
        // Walk bins in ascending frequency order.
        let order: Vec<usize> = (n.div_ceil(2)..n).chain(0..n.div_ceil(2)).collect();
        let total: f64 = spec.iter().map(|x| x.norm_sqr()).sum();
        if total == 0.0 {
            return (0.0, 0.0);
        }
        let tail = total * (1.0 - fraction) / 2.0;
        let mut acc = 0.0;
        let mut lo = bin_frequency(order[0], n, self.sample_rate);
        for &k in &order {
            acc += spec[k].norm_sqr();
            if acc > tail {
                lo = bin_frequency(k, n, self.sample_rate);
                break;
            }
        }
        acc = 0.0;
        let mut hi = bin_frequency(*order.last().unwrap(), n, self.sample_rate);
        for &k in order.iter().rev() {
            acc += spec[k].norm_sqr();
            if acc > tail {
                hi = bin_frequency(k, n, self.sample_rate);
                break;
            }
        }
        (lo, hi)
    }
}

fn frac(x: f64) -> f64 {
    x - x.floor()
}

/// Translate the waveform by `delta` Hz inside its window.
///
/// The window itself (`center_offset`) does not move; the content does.
pub fn frequency_shift(sig: &SampledSignal, delta: f64) -> Result<SampledSignal> {
    if delta == 0.0 {
        return Ok(sig.clone());
    }
    let nyquist = sig.sample_rate / 2.0;
    let (lo, hi) = sig.occupied_band(OCCUPIED_ENERGY_FRACTION);
    if delta.abs() >= nyquist || lo + delta <= -nyquist || hi + delta >= nyquist {
        return Err(Error::BandOverflow { lo_hz: lo + delta, hi_hz: hi + delta, nyquist_hz: nyquist });
    }
    let step = delta / sig.sample_rate;
    let samples = sig
        .samples
        .iter()
        .enumerate()
        .map(|(n, s)| s * Complex64::from_polar(1.0, 2.0 * PI * frac(step * n as f64)))
        .collect();
    sig.with_samples(samples)
}

/// Band-limited (DFT-domain) resampling to `new_rate`.
///
/// The record duration is preserved, so `len · new_rate / sample_rate` must
/// be an integer.
pub fn resample(sig: &SampledSignal, new_rate: f64) -> Result<SampledSignal> {
    if !(new_rate.is_finite() && new_rate > 0.0) {
        return Err(Error::InvalidSignal(format!("new sample rate must be positive, got {new_rate}")));
    }
    let n = sig.len();
    let exact = n as f64 * new_rate / sig.sample_rate;
    let m = exact.round() as usize;
    if m == 0 || (exact - m as f64).abs() > 1e-6 {
        return Err(Error::InvalidSignal(format!(
            "resampling {n} samples from {} to {new_rate} Hz gives a non-integer length {exact}",
            sig.sample_rate
        )));
    }
    if m == n {
        return SampledSignal::new(sig.samples.clone(), new_rate, sig.center_offset);
    }
    if new_rate < sig.sample_rate {
        let (lo, hi) = sig.occupied_band(OCCUPIED_ENERGY_FRACTION);
        if lo <= -new_rate / 2.0 || hi >= new_rate / 2.0 {
            return Err(Error::Aliasing { lo_hz: lo, hi_hz: hi, new_rate_hz: new_rate });
        }
    }
    let src = sig.spectrum();
    let mut dst = vec![Complex64::new(0.0, 0.0); m];
    let shared = n.min(m);
    // Bins strictly inside the shared band map one-to-one.
    let half = (shared - 1) / 2;
    dst[..=half].copy_from_slice(&src[..=half]);
    for s in 1..=half {
        dst[m - s] = src[n - s];
    }
    if shared.is_multiple_of(2) {
        let k = shared / 2;
        if n < m {
            // Split the source Nyquist bin across ±k.
            dst[k] += src[k] * 0.5;
            dst[m - k] += src[k] * 0.5;
        } else {
            // Fold ±k of the source onto the destination Nyquist bin.
            dst[k] = src[k] + src[n - k];
        }
    }
    ifft_in_place(&mut dst);
    let scale = m as f64 / n as f64;
    dst.iter_mut().for_each(|x| *x *= scale);
    SampledSignal::new(dst, new_rate, sig.center_offset)
}

/// Ideal lossless coupler: element-wise sum, shorter inputs zero-padded.
pub fn combine(signals: &[SampledSignal]) -> Result<SampledSignal> {
    combine_with_loss(signals, 0.0)
}

/// Coupler with a per-port insertion loss in dB applied to every input.
pub fn combine_with_loss(signals: &[SampledSignal], port_loss_db: f64) -> Result<SampledSignal> {
    let first = signals.first().ok_or(Error::Empty("combine needs at least one signal"))?;
    for s in &signals[1..] {
        if s.sample_rate != first.sample_rate {
            return Err(Error::RateMismatch(first.sample_rate, s.sample_rate));
        }
        if s.center_offset != first.center_offset {
            return Err(Error::WindowMismatch(first.center_offset, s.center_offset));
        }
    }
    let len = signals.iter().map(|s| s.len()).max().unwrap_or(0);
    let gain = db_to_lin(-port_loss_db).sqrt();
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for s in signals {
        for (o, x) in out.iter_mut().zip(&s.samples) {
            *o += x * gain;
        }
    }
    SampledSignal::new(out, first.sample_rate, first.center_offset)
}

/// 10·log10(mean |x|²). An all-zero signal gives `f64::NEG_INFINITY`.
pub fn measure_power_dbm(sig: &SampledSignal) -> f64 {
    mw_to_dbm(sig.power_mw())
}

/// Two orthogonal polarization tracks on a common window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPolSignal {
    pub x: SampledSignal,
    pub y: SampledSignal,
}

impl DualPolSignal {
    pub fn new(x: SampledSignal, y: SampledSignal) -> Result<Self> {
        if x.sample_rate != y.sample_rate {
            return Err(Error::RateMismatch(x.sample_rate, y.sample_rate));
        }
        if x.center_offset != y.center_offset {
            return Err(Error::WindowMismatch(x.center_offset, y.center_offset));
        }
        if x.len() != y.len() {
            return Err(Error::Shape(format!("polarization lengths {} and {}", x.len(), y.len())));
        }
        Ok(Self { x, y })
    }

    /// A single-polarization field launched on X.
    pub fn from_x(x: SampledSignal) -> Self {
        let y = SampledSignal {
            samples: vec![Complex64::new(0.0, 0.0); x.len()],
            sample_rate: x.sample_rate,
            center_offset: x.center_offset,
        };
        Self { x, y }
    }

    /// Total power over both tracks, mW.
    pub fn power_mw(&self) -> f64 {
        self.x.power_mw() + self.y.power_mw()
    }

    pub fn power_dbm(&self) -> f64 {
        mw_to_dbm(self.power_mw())
    }

    pub fn sample_rate(&self) -> f64 {
        self.x.sample_rate
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self { x: self.x.scaled(gain), y: self.y.scaled(gain) }
    }

    /// Apply the same operation to both tracks.
    pub fn map<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&SampledSignal) -> Result<SampledSignal>,
    {
        Self::new(f(&self.x)?, f(&self.y)?)
    }

    /// Track-wise [`combine_with_loss`].
    pub fn combine(fields: &[DualPolSignal], port_loss_db: f64) -> Result<Self> {
        let xs: Vec<SampledSignal> = fields.iter().map(|f| f.x.clone()).collect();
        let ys: Vec<SampledSignal> = fields.iter().map(|f| f.y.clone()).collect();
        Self::new(combine_with_loss(&xs, port_loss_db)?, combine_with_loss(&ys, port_loss_db)?)
    }
}

/// Averaged-periodogram PSD estimate on a two-sided frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    /// Absolute frequencies (Hz from channel centre), strictly increasing.
    pub frequencies: Vec<f64>,
    /// dBm/Hz per bin.
    pub psd: Vec<f64>,
    pub resolution_hz: f64,
}

impl SpectrumEstimate {
    pub fn linear_psd(&self) -> impl Iterator<Item = f64> + '_ {
        self.psd.iter().map(|&p| db_to_lin(p))
    }

    /// ∫ PSD df in mW.
    pub fn integrated_power_mw(&self) -> f64 {
        self.linear_psd().sum::<f64>() * self.resolution_hz
    }

    /// Power in mW between two absolute frequencies (inclusive bins).
    pub fn band_power_mw(&self, lo: f64, hi: f64) -> f64 {
        self.frequencies
            .iter()
            .zip(self.linear_psd())
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .map(|(_, p)| p)
            .sum::<f64>()
            * self.resolution_hz
    }

    /// Index of the largest bin.
    pub fn peak_bin(&self) -> usize {
        self.psd.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0)
    }
}

/// Welch estimate with a Hann window.
pub fn estimate_psd(sig: &SampledSignal, segment_len: usize, overlap: f64) -> Result<SpectrumEstimate> {
    if segment_len == 0 {
        return Err(Error::InvalidSignal("segment length must be positive".into()));
    }
    if segment_len > sig.len() {
        return Err(Error::TooShort { what: "PSD segment", needed: segment_len, got: sig.len() });
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::InvalidSignal(format!("overlap must lie in [0, 1), got {overlap}")));
    }
    let window: Vec<f64> = if segment_len == 1 {
        vec![1.0]
    } else {
        (0..segment_len).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / segment_len as f64).cos()).collect()
    };
    let window_energy: f64 = window.iter().map(|w| w * w).sum();
    let step = ((segment_len as f64 * (1.0 - overlap)).round() as usize).max(1);
    let fft = plan(segment_len, false);

    let mut acc = vec![0.0; segment_len];
    let mut segments = 0usize;
    let mut buf = vec![Complex64::new(0.0, 0.0); segment_len];
    let mut start = 0;
    while start + segment_len <= sig.len() {
        for (b, (x, w)) in buf.iter_mut().zip(sig.samples[start..start + segment_len].iter().zip(&window)) {
            *b = x * w;
        }
        fft.process(&mut buf);
        for (a, x) in acc.iter_mut().zip(&buf) {
            *a += x.norm_sqr();
        }
        segments += 1;
        start += step;
    }
    let scale = 1.0 / (segments as f64 * sig.sample_rate * window_energy);
    let n = segment_len;
    // fftshift: negative frequencies first.
    let order: Vec<usize> = (n.div_ceil(2)..n).chain(0..n.div_ceil(2)).collect();
    let frequencies = order.iter().map(|&k| bin_frequency(k, n, sig.sample_rate) + sig.center_offset).collect();
    let psd = order.iter().map(|&k| 10.0 * (acc[k] * scale).max(PSD_FLOOR_MW_PER_HZ).log10()).collect();
    Ok(SpectrumEstimate { frequencies, psd, resolution_hz: sig.sample_rate / n as f64 })
}

/// Add circular complex white Gaussian noise with `noise_power_mw` per sample.
pub fn add_complex_awgn<R: Rng + ?Sized>(sig: &SampledSignal, noise_power_mw: f64, rng: &mut R) -> SampledSignal {
    let sigma = (noise_power_mw.max(0.0) / 2.0).sqrt();
    let samples = sig
        .samples
        .iter()
        .map(|s| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            s + Complex64::new(re * sigma, im * sigma)
        })
        .collect();
    SampledSignal { samples, sample_rate: sig.sample_rate, center_offset: sig.center_offset }
}

/// Add real white Gaussian noise of variance `variance` to the real part.
pub fn add_real_awgn<R: Rng + ?Sized>(sig: &SampledSignal, variance: f64, rng: &mut R) -> SampledSignal {
    let sigma = variance.max(0.0).sqrt();
    let samples = sig
        .samples
        .iter()
        .map(|s| {
            let n: f64 = rng.sample(StandardNormal);
            Complex64::new(s.re + n * sigma, s.im)
        })
        .collect();
    SampledSignal { samples, sample_rate: sig.sample_rate, center_offset: sig.center_offset }
}
