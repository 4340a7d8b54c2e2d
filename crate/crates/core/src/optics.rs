//! Electro-optic and fiber plant.
//!
//! Optical fields are complex envelopes in sqrt(mW) around the channel
//! centre. Photodiode outputs are real photocurrents in mA (responsivity in
//! A/W is mA/mW). Noise sources take an explicit generator so runs are
//! reproducible.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{add_complex_awgn, add_real_awgn, DualPolSignal, SampledSignal};
use crate::units::{db_to_lin, dbm_to_mw, lin_to_db, photon_energy, ELECTRON_CHARGE, SPEED_OF_LIGHT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MzmParams {
    /// Volts.
    pub v_pi: f64,
    /// Bias as a fraction of V_π; 0.5 is quadrature.
    pub bias: f64,
    /// RMS drive voltage the input waveform is scaled to.
    pub drive_rms: f64,
    pub laser_power_dbm: f64,
}

impl Default for MzmParams {
    fn default() -> Self {
        Self { v_pi: 5.0, bias: 0.5, drive_rms: 0.16, laser_power_dbm: 0.0 }
    }
}

impl MzmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_pi > 0.0) {
            return Err(Error::Config(format!("V_pi must be positive, got {}", self.v_pi)));
        }
        if !(self.bias > 0.0 && self.bias < 1.0) {
            return Err(Error::Config(format!("bias must lie in (0, 1), got {}", self.bias)));
        }
        if !(self.drive_rms >= 0.0) {
            return Err(Error::Config("drive RMS must be non-negative".into()));
        }
        Ok(())
    }

    /// Small-signal phase modulation index π·v_rms / (2·V_π).
    pub fn modulation_index(&self) -> f64 {
        PI * self.drive_rms / (2.0 * self.v_pi)
    }
}

/// Push-pull MZM: `E = sqrt(P) · cos(π/2 · (bias + v/V_π))`.
///
/// The real `drive` is rescaled so that its RMS equals `p.drive_rms`. The
/// output is centred on the laser (0 Hz) and carries the carrier plus both
/// modulation sidebands.
pub fn mzm_modulate(drive: &SampledSignal, p: &MzmParams) -> Result<SampledSignal> {
    p.validate()?;
    if !drive.is_real() {
        return Err(Error::InvalidSignal("MZM drive must be real-valued".into()));
    }
    let rms = drive.power_mw().sqrt();
    let scale = if rms > 0.0 { p.drive_rms / rms } else { 0.0 };
    let amp = dbm_to_mw(p.laser_power_dbm).sqrt();
    let samples = drive
        .samples()
        .iter()
        .map(|v| Complex64::new(amp * (PI / 2.0 * (p.bias + v.re * scale / p.v_pi)).cos(), 0.0))
        .collect();
    SampledSignal::new(samples, drive.sample_rate(), 0.0)
}

/// Field of the unmodulated laser after the MZM at the given bias.
pub fn mzm_idle_field(p: &MzmParams) -> f64 {
    dbm_to_mw(p.laser_power_dbm).sqrt() * (PI / 2.0 * p.bias).cos()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberParams {
    pub length_km: f64,
    pub attenuation_db_per_km: f64,
    /// ps/(nm·km).
    pub dispersion_ps_nm_km: f64,
    pub reference_wavelength_nm: f64,
}

impl FiberParams {
    /// Standard single-mode fiber at 1550 nm with the repository's default
    /// loss and dispersion.
    pub fn ssmf(length_km: f64) -> Self {
        Self { length_km, attenuation_db_per_km: 0.2, dispersion_ps_nm_km: 17.0, reference_wavelength_nm: 1550.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_km >= 0.0) || !(self.attenuation_db_per_km >= 0.0) {
            return Err(Error::Config("fiber length and attenuation must be non-negative".into()));
        }
        if !(self.reference_wavelength_nm > 0.0) {
            return Err(Error::Config("reference wavelength must be positive".into()));
        }
        Ok(())
    }

    /// β₂ in s²/m from D and λ: β₂ = −D·λ²/(2πc).
    pub fn beta2(&self) -> f64 {
        let d = self.dispersion_ps_nm_km * 1e-6; // s/m²
        let lambda = self.reference_wavelength_nm * 1e-9;
        -d * lambda * lambda / (2.0 * PI * SPEED_OF_LIGHT)
    }

    /// β₂·L in s².
    pub fn accumulated_beta2(&self) -> f64 {
        self.beta2() * self.length_km * 1e3
    }

    pub fn loss_db(&self) -> f64 {
        self.attenuation_db_per_km * self.length_km
    }
}

/// Dispersion-only stage: all-pass `exp(−j·β₂/2·ω²·L)`.
pub fn disperse(sig: &SampledSignal, beta2_l: f64) -> SampledSignal {
    if beta2_l == 0.0 {
        return sig.clone();
    }
    sig.apply_transfer(|f| {
        let w = 2.0 * PI * f;
        Complex64::from_polar(1.0, -0.5 * beta2_l * w * w)
    })
}

/// Chromatic dispersion followed by scalar attenuation.
pub fn fiber_propagate(sig: &SampledSignal, p: &FiberParams) -> Result<SampledSignal> {
    p.validate()?;
    if p.length_km == 0.0 {
        return Ok(sig.clone());
    }
    Ok(disperse(sig, p.accumulated_beta2()).scaled(db_to_lin(-p.loss_db()).sqrt()))
}

pub fn fiber_propagate_dual(field: &DualPolSignal, p: &FiberParams) -> Result<DualPolSignal> {
    field.map(|t| fiber_propagate(t, p))
}

/// Detected RF power at `freq` after `length_km` of fiber for a chirp-free
/// double-sideband signal, relative to zero length: cos²(π·L·D·λ²·f²/c).
pub fn dispersion_fading_factor(p: &FiberParams, freq: f64) -> f64 {
    let phase = 0.5 * p.accumulated_beta2() * (2.0 * PI * freq).powi(2);
    phase.cos().powi(2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdfaParams {
    pub gain_db: f64,
    pub noise_figure_db: f64,
    pub wavelength_nm: f64,
}

impl Default for EdfaParams {
    fn default() -> Self {
        Self { gain_db: 20.0, noise_figure_db: 5.0, wavelength_nm: 1550.0 }
    }
}

/// Noise figures below this are reported as unphysical for a high-gain EDFA.
pub const EDFA_NF_WARNING_DB: f64 = 3.0;

impl EdfaParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gain_db >= 0.0) {
            return Err(Error::Config(format!("EDFA gain must be ≥ 0 dB, got {}", self.gain_db)));
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<String> {
        if self.noise_figure_db < EDFA_NF_WARNING_DB {
            vec![format!(
                "EDFA noise figure {} dB is below the {EDFA_NF_WARNING_DB} dB quantum limit",
                self.noise_figure_db
            )]
        } else {
            vec![]
        }
    }

    /// ASE PSD per polarization, mW/Hz: (G − 1)·h·ν·NF/2.
    pub fn ase_psd_per_pol(&self) -> f64 {
        let g = db_to_lin(self.gain_db);
        let nf = db_to_lin(self.noise_figure_db);
        (g - 1.0) * photon_energy(self.wavelength_nm * 1e-9) * nf / 2.0 * 1e3
    }

    /// OSNR in dB over `ref_bw` Hz for an input power in dBm, counting ASE in
    /// both polarizations: P_in − NF − 10·log10(h·ν·B_ref / 1 mW) + 10·log10(G/(G − 1)).
    pub fn osnr_db(&self, p_in_dbm: f64, ref_bw: f64) -> f64 {
        let g = db_to_lin(self.gain_db);
        let hv_b_mw = photon_energy(self.wavelength_nm * 1e-9) * ref_bw * 1e3;
        p_in_dbm - self.noise_figure_db - lin_to_db(hv_b_mw) + lin_to_db(g / (g - 1.0))
    }
}

/// Amplify one polarization track and add its ASE.
pub fn edfa_amplify<R: Rng + ?Sized>(sig: &SampledSignal, p: &EdfaParams, rng: &mut R) -> Result<SampledSignal> {
    p.validate()?;
    let amplified = sig.scaled(db_to_lin(p.gain_db).sqrt());
    let per_sample = p.ase_psd_per_pol() * sig.sample_rate();
    if per_sample == 0.0 {
        return Ok(amplified);
    }
    Ok(add_complex_awgn(&amplified, per_sample, rng))
}

pub fn edfa_amplify_dual<R: Rng + ?Sized>(field: &DualPolSignal, p: &EdfaParams, rng: &mut R) -> Result<DualPolSignal> {
    DualPolSignal::new(edfa_amplify(&field.x, p, rng)?, edfa_amplify(&field.y, p, rng)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdParams {
    /// A/W.
    pub responsivity: f64,
    /// One-sided thermal noise current density, A/√Hz.
    pub thermal_noise_density: f64,
    pub include_shot_noise: bool,
}

impl Default for PdParams {
    fn default() -> Self {
        Self { responsivity: 0.8, thermal_noise_density: 20e-12, include_shot_noise: false }
    }
}

impl PdParams {
    pub fn noiseless(responsivity: f64) -> Self {
        Self { responsivity, thermal_noise_density: 0.0, include_shot_noise: false }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.responsivity > 0.0) {
            return Err(Error::Config(format!("responsivity must be positive, got {}", self.responsivity)));
        }
        if !(self.thermal_noise_density >= 0.0) {
            return Err(Error::Config("thermal noise density must be non-negative".into()));
        }
        Ok(())
    }
}

fn detect_intensity<R: Rng + ?Sized>(
    intensity: Vec<f64>,
    rate: f64,
    p: &PdParams,
    rng: &mut R,
) -> Result<SampledSignal> {
    p.validate()?;
    let current: Vec<f64> = intensity.iter().map(|i| p.responsivity * i).collect();
    let mut out = SampledSignal::from_real(&current, rate, 0.0)?;
    // Noise spread over the Nyquist band, variance in mA².
    let mut variance = p.thermal_noise_density.powi(2) * rate / 2.0 * 1e6;
    if p.include_shot_noise {
        let mean_a = current.iter().sum::<f64>() / current.len() as f64 * 1e-3;
        variance += ELECTRON_CHARGE * mean_a.max(0.0) * rate * 1e6;
    }
    if variance > 0.0 {
        out = add_real_awgn(&out, variance, rng);
    }
    Ok(out)
}

/// Square-law detection `R·|E|²` plus thermal (and optional shot) noise.
pub fn photodetect<R: Rng + ?Sized>(field: &SampledSignal, p: &PdParams, rng: &mut R) -> Result<SampledSignal> {
    detect_intensity(field.samples().iter().map(|e| e.norm_sqr()).collect(), field.sample_rate(), p, rng)
}

/// Polarization-insensitive detection of both tracks.
pub fn photodetect_dual<R: Rng + ?Sized>(field: &DualPolSignal, p: &PdParams, rng: &mut R) -> Result<SampledSignal> {
    let intensity = field.x.samples().iter().zip(field.y.samples()).map(|(x, y)| x.norm_sqr() + y.norm_sqr()).collect();
    detect_intensity(intensity, field.sample_rate(), p, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{estimate_psd, measure_power_dbm};
    use crate::units::mw_to_dbm;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(42)
    }

    /// Bessel function of the first kind by its power series.
    fn bessel_j(n: u32, x: f64) -> f64 {
        let mut sum = 0.0;
        let mut fact_m = 1.0;
        for m in 0..30u32 {
            if m > 0 {
                fact_m *= m as f64;
            }
            let fact_mn: f64 = (1..=m + n).map(|v| v as f64).product();
            sum += (-1f64).powi(m as i32) * (x / 2.0).powi((2 * m + n) as i32) / (fact_m * fact_mn);
        }
        sum
    }

    /// Power of a real tone at bin `k` of an `n`-point record (both sides).
    fn real_tone_power(sig: &SampledSignal, k: usize) -> f64 {
        let n = sig.len();
        let spec = sig.spectrum();
        2.0 * spec[k].norm_sqr() / (n as f64 * n as f64)
    }

    fn complex_bin_power(sig: &SampledSignal, k: usize) -> f64 {
        let n = sig.len() as f64;
        sig.spectrum()[k].norm_sqr() / (n * n)
    }

    #[test]
    fn quadrature_idle_field_is_half_power() {
        let p = MzmParams::default();
        let drive = SampledSignal::zeros(64, 10e9, 0.0).unwrap();
        let out = mzm_modulate(&drive, &p).unwrap();
        assert!((out.power_mw() - 0.5).abs() < 1e-12);
        assert!((mzm_idle_field(&p).powi(2) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mzm_rejects_bad_params() {
        let drive = SampledSignal::zeros(8, 1e9, 0.0).unwrap();
        assert!(mzm_modulate(&drive, &MzmParams { bias: 1.0, ..Default::default() }).is_err());
        assert!(mzm_modulate(&drive, &MzmParams { v_pi: 0.0, ..Default::default() }).is_err());
        let cplx = SampledSignal::tone(8, 1e9, 1e8, 1.0, 0.0).unwrap();
        assert!(mzm_modulate(&cplx, &MzmParams::default()).is_err());
    }

    #[test]
    fn small_tone_sidebands_follow_bessel_expansion() {
        let n = 4096;
        let fs = 32e9;
        let k = 256; // 2 GHz
        let f = k as f64 * fs / n as f64;
        let tone: Vec<f64> = (0..n).map(|i| (2.0 * PI * f * i as f64 / fs).sin()).collect();
        let drive = SampledSignal::from_real(&tone, fs, 0.0).unwrap();
        let p = MzmParams { drive_rms: 0.3, ..Default::default() };
        let out = mzm_modulate(&drive, &p).unwrap();
        let carrier = complex_bin_power(&out, 0);
        let upper = complex_bin_power(&out, k);
        let lower = complex_bin_power(&out, n - k);
        // Peak phase swing x = π/2 · V_peak / V_π with V_peak = √2 · V_rms.
        let x = PI / 2.0 * p.drive_rms * 2f64.sqrt() / p.v_pi;
        let expected = (bessel_j(1, x) / bessel_j(0, x)).powi(2);
        for sb in [upper, lower] {
            let err_db = 10.0 * (sb / carrier / expected).log10();
            assert!(err_db.abs() < 0.5, "sideband/carrier off by {err_db} dB");
        }
    }

    #[test]
    fn beta2_of_standard_fiber() {
        let b2 = FiberParams::ssmf(1.0).beta2();
        // −21.7 ps²/km.
        assert!((b2 * 1e27 + 21.67).abs() < 0.05, "{b2}");
    }

    #[test]
    fn zero_length_is_identity() {
        let s = SampledSignal::tone(256, 10e9, 1e9, 1.0, 0.0).unwrap();
        assert_eq!(fiber_propagate(&s, &FiberParams::ssmf(0.0)).unwrap(), s);
    }

    #[test]
    fn ten_km_loses_two_db() {
        let s = SampledSignal::carrier(1024, 10e9, 1.0).unwrap();
        let out = fiber_propagate(&s, &FiberParams::ssmf(10.0)).unwrap();
        assert!((measure_power_dbm(&out) - measure_power_dbm(&s) + 2.0).abs() < 1e-9);
    }

    #[test]
    fn dispersion_is_unitary() {
        let noise = add_complex_awgn(&SampledSignal::zeros(1 << 14, 128e9, 0.0).unwrap(), 1.0, &mut rng());
        let out = disperse(&noise, FiberParams::ssmf(72.0).accumulated_beta2());
        assert!((out.energy() - noise.energy()).abs() / noise.energy() < 1e-9);
    }

    #[test]
    fn dispersion_commutes_with_attenuation() {
        let noise = add_complex_awgn(&SampledSignal::zeros(4096, 64e9, 0.0).unwrap(), 1.0, &mut rng());
        let p = FiberParams::ssmf(25.0);
        let a = fiber_propagate(&noise, &p).unwrap();
        let b = disperse(&noise.scaled(db_to_lin(-p.loss_db()).sqrt()), p.accumulated_beta2());
        let err: f64 = a.samples().iter().zip(b.samples()).map(|(x, y)| (x - y).norm_sqr()).sum();
        assert!((err / a.energy()).sqrt() < 1e-9);
    }

    #[test]
    fn edfa_without_gain_is_identity() {
        let s = SampledSignal::carrier(128, 10e9, 1.0).unwrap();
        let p = EdfaParams { gain_db: 0.0, ..Default::default() };
        assert_eq!(edfa_amplify(&s, &p, &mut rng()).unwrap(), s);
    }

    #[test]
    fn ase_psd_matches_formula() {
        let p = EdfaParams { gain_db: 20.0, noise_figure_db: 5.0, wavelength_nm: 1550.0 };
        let fs = 128e9;
        let out = edfa_amplify(&SampledSignal::zeros(1 << 18, fs, 0.0).unwrap(), &p, &mut rng()).unwrap();
        let est = estimate_psd(&out, 1024, 0.5).unwrap();
        let measured = est.integrated_power_mw() / fs;
        let expected = 99.0 * photon_energy(1550e-9) * db_to_lin(5.0) / 2.0 * 1e3;
        assert!((measured / expected - 1.0).abs() < 0.05, "{measured} vs {expected}");
    }

    #[test]
    fn osnr_after_one_amplifier() {
        let p = EdfaParams { gain_db: 15.0, noise_figure_db: 5.0, wavelength_nm: 1550.0 };
        let fs = 128e9;
        let n = 1 << 18;
        let p_in_dbm = -20.0;
        let field = DualPolSignal::from_x(SampledSignal::carrier(n, fs, dbm_to_mw(p_in_dbm)).unwrap());
        let out = edfa_amplify_dual(&field, &p, &mut rng()).unwrap();
        // Signal is the mean field; ASE is what remains, in both polarizations.
        let mean = out.x.samples().iter().sum::<Complex64>() / n as f64;
        let signal = mean.norm_sqr();
        let ase = out.power_mw() - signal;
        let ref_bw = 12.5e9;
        let measured = 10.0 * (signal / (ase / fs * ref_bw)).log10();
        let expected = p.osnr_db(p_in_dbm, ref_bw);
        assert!((measured - expected).abs() < 0.2, "{measured} vs {expected}");
        assert!(p.warnings().is_empty());
        assert_eq!(EdfaParams { noise_figure_db: 2.0, ..p }.warnings().len(), 1);
    }

    #[test]
    fn cw_detects_to_dc() {
        let s = SampledSignal::carrier(64, 10e9, 2.0).unwrap();
        let out = photodetect(&s, &PdParams::noiseless(0.8), &mut rng()).unwrap();
        assert!(out.samples().iter().all(|x| (x.re - 1.6).abs() < 1e-12 && x.im == 0.0));
    }

    #[test]
    fn carrier_sideband_beat_power() {
        let n = 4096;
        let fs = 32e9;
        let k = 200;
        let f = k as f64 * fs / n as f64;
        let (a, b) = (1.0, 0.05);
        let carrier = SampledSignal::carrier(n, fs, a * a).unwrap();
        let sideband = SampledSignal::tone(n, fs, f, b, 0.4).unwrap();
        let field = crate::signal::combine(&[carrier, sideband]).unwrap();
        let r = 0.8;
        let out = photodetect(&field, &PdParams::noiseless(r), &mut rng()).unwrap();
        let measured = real_tone_power(&out, k);
        let expected = 2.0 * r * r * a * a * b * b;
        assert!((10.0 * (measured / expected).log10()).abs() < 0.5);
    }

    fn dsb_field(n: usize, fs: f64, f: f64, upper: f64, lower: f64) -> SampledSignal {
        let c = SampledSignal::carrier(n, fs, 1.0).unwrap();
        let u = SampledSignal::tone(n, fs, f, upper, 0.0).unwrap();
        let l = SampledSignal::tone(n, fs, -f, lower, 0.0).unwrap();
        crate::signal::combine(&[c, u, l]).unwrap()
    }

    #[test]
    fn suppressing_one_sideband_follows_phasor_sum() {
        let n = 4096;
        let fs = 32e9;
        let k = 256;
        let f = k as f64 * fs / n as f64;
        let pd = PdParams::noiseless(1.0);
        let dsb = photodetect(&dsb_field(n, fs, f, 0.05, 0.05), &pd, &mut rng()).unwrap();
        let weak = photodetect(&dsb_field(n, fs, f, 0.05, 0.05 * db_to_lin(-6.0).sqrt()), &pd, &mut rng()).unwrap();
        let measured = 10.0 * (real_tone_power(&weak, k) / real_tone_power(&dsb, k)).log10();
        let phasor = 20.0 * ((1.0 + db_to_lin(-6.0).sqrt()) / 2.0).log10();
        assert!((measured - phasor).abs() < 0.05, "{measured} vs {phasor}");
        assert!((measured + 3.0).abs() < 0.55);
    }

    #[test]
    fn two_tone_fading_follows_cosine_law() {
        let n = 1 << 14;
        let fs = 128e9;
        let k = 1280; // 10 GHz
        let f = k as f64 * fs / n as f64;
        let pd = PdParams::noiseless(1.0);
        let field = dsb_field(n, fs, f, 0.05, 0.05);
        let b2b = real_tone_power(&photodetect(&field, &pd, &mut rng()).unwrap(), k);
        for km in [0.0, 5.0, 10.0, 20.0, 25.0, 45.0, 55.0, 72.0] {
            let p = FiberParams { attenuation_db_per_km: 0.0, ..FiberParams::ssmf(km) };
            let expected = dispersion_fading_factor(&p, f);
            if expected < 0.1 {
                continue;
            }
            let rx = fiber_propagate(&field, &p).unwrap();
            let measured = real_tone_power(&photodetect(&rx, &pd, &mut rng()).unwrap(), k) / b2b;
            assert!((10.0 * (measured / expected).log10()).abs() < 0.5, "{km} km: {measured} vs {expected}");
        }
    }

    #[test]
    fn detection_of_physical_field_is_nonnegative() {
        let field = add_complex_awgn(&SampledSignal::carrier(2048, 10e9, 1.0).unwrap(), 0.5, &mut rng());
        let out = photodetect(&field, &PdParams::noiseless(0.8), &mut rng()).unwrap();
        assert!(out.is_real());
        assert!(out.samples().iter().all(|x| x.re >= 0.0));
    }

    #[test]
    fn thermal_noise_variance() {
        let field = SampledSignal::zeros(1 << 16, 10e9, 0.0).unwrap();
        let p = PdParams { responsivity: 1.0, thermal_noise_density: 10e-12, include_shot_noise: false };
        let out = photodetect(&field, &p, &mut rng()).unwrap();
        let expected = (10e-12f64).powi(2) * 5e9 * 1e6;
        assert!((out.power_mw() / expected - 1.0).abs() < 0.03);
        assert!(mw_to_dbm(out.power_mw()).is_finite());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]

            #[test]
            fn fiber_is_linear(seed in 0u64..500, km in 0.0f64..80.0, a in -2.0f64..2.0) {
                let mut r = ChaCha8Rng::seed_from_u64(seed);
                let x = add_complex_awgn(&SampledSignal::zeros(1024, 64e9, 0.0).unwrap(), 1.0, &mut r);
                let y = add_complex_awgn(&SampledSignal::zeros(1024, 64e9, 0.0).unwrap(), 1.0, &mut r);
                let p = FiberParams::ssmf(km);
                let sum = crate::signal::combine(&[x.scaled(a), y.clone()]).unwrap();
                let lhs = fiber_propagate(&sum, &p).unwrap();
                let rhs = crate::signal::combine(&[fiber_propagate(&x, &p).unwrap().scaled(a), fiber_propagate(&y, &p).unwrap()]).unwrap();
                let err: f64 = lhs.samples().iter().zip(rhs.samples()).map(|(u, v)| (u - v).norm_sqr()).sum();
                prop_assert!((err / rhs.energy().max(1e-300)).sqrt() < 1e-9);
            }
        }
    }
}
