use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::grid::FrameLayout;
use super::waveform::{zed_fsk_waveform, TagParams};
use crate::error::{Error, Result};
use crate::stats::trial_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    Hann,
    Rectangular,
}

impl Window {
    fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; len],
            // Periodic Hann.
            Window::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
                .collect(),
        }
    }
}

/// Two-sided power spectral density, frequencies ascending from -fs/2.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub frequencies_hz: Vec<f64>,
    /// Power per Hz (linear).
    pub density: Vec<f64>,
    pub resolution_hz: f64,
}

impl Spectrum {
    /// Integrated power.
    pub fn total_power(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.resolution_hz
    }
}

/// Welch-averaged periodogram.
///
/// The density is scaled so that the sum over bins times the bin width
/// equals the mean power of the windowed segments; with a rectangular window
/// this is the time-domain mean power.
pub fn welch_psd(
    signal: &[Complex64],
    sample_rate_hz: f64,
    segment_len: usize,
    overlap: f64,
    window: Window,
) -> Result<Spectrum> {
    if segment_len == 0 || segment_len > signal.len() {
        return Err(Error::config(format!(
            "segment of {segment_len} samples does not fit a {}-sample signal",
            signal.len()
        )));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::config("overlap must lie in [0, 1)"));
    }
    let hop = ((segment_len as f64) * (1.0 - overlap)).round().max(1.0) as usize;
    let w = window.coefficients(segment_len);
    let w_energy: f64 = w.iter().map(|v| v * v).sum();
    let fft = FftPlanner::new().plan_fft_forward(segment_len);

    let mut acc = vec![0.0; segment_len];
    let mut segments = 0usize;
    let mut buf = vec![Complex64::new(0.0, 0.0); segment_len];
    let mut start = 0;
    while start + segment_len <= signal.len() {
        for (b, (x, wv)) in buf.iter_mut().zip(signal[start..].iter().zip(&w)) {
            *b = x * wv;
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        segments += 1;
        start += hop;
    }

    let scale = 1.0 / (segments as f64 * sample_rate_hz * w_energy);
    let resolution = sample_rate_hz / segment_len as f64;
    let half = segment_len / 2;
    let mut frequencies = Vec::with_capacity(segment_len);
    let mut density = Vec::with_capacity(segment_len);
    // fftshift: bins N/2..N are the negative frequencies.
    for k in (half..segment_len).chain(0..half) {
        let signed = if k >= half && segment_len > 1 {
            k as f64 - segment_len as f64
        } else {
            k as f64
        };
        let signed = if segment_len % 2 == 1 && k == half {
            k as f64 - segment_len as f64
        } else {
            signed
        };
        frequencies.push(signed * resolution);
        density.push(acc[k] * scale);
    }
    Ok(Spectrum {
        frequencies_hz: frequencies,
        density,
        resolution_hz: resolution,
    })
}

/// Tag illuminated by continuous pilot tones, observed in the time domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdScenario {
    pub layout: FrameLayout,
    pub tag: TagParams,
    pub bits: Vec<bool>,
    /// False keeps the tag in one reflection state.
    pub modulated: bool,
    /// Backscatter channel power relative to the direct path, dB.
    pub backscatter_gain_db: f64,
    /// SNR of each pilot tone over one subcarrier bandwidth, dB.
    pub direct_snr_db: f64,
    /// Target periodogram resolution, Hz.
    pub resolution_hz: f64,
    pub overlap: f64,
}

impl PsdScenario {
    /// All-zero bits, so the tag toggles at `f0` only.
    pub fn tone(layout: FrameLayout, tag: TagParams, symbols: usize) -> Self {
        PsdScenario {
            layout,
            tag,
            bits: vec![false; symbols],
            modulated: true,
            backscatter_gain_db: -20.0,
            direct_snr_db: 30.0,
            resolution_hz: 25.0,
            overlap: 0.5,
        }
    }

    fn fft_size(&self) -> Result<usize> {
        Ok((2 * self.layout.srs.subcarriers()?).next_power_of_two())
    }

    pub fn sample_rate_hz(&self) -> Result<f64> {
        Ok(self.fft_size()? as f64 * self.layout.srs.subcarrier_spacing_hz)
    }

    /// Signed frequency of each pilot subcarrier relative to the band centre.
    pub fn pilot_frequencies_hz(&self) -> Result<Vec<f64>> {
        let sc = self.layout.srs.subcarriers()? as i64;
        let scs = self.layout.srs.subcarrier_spacing_hz;
        Ok(self
            .layout
            .pilot_subcarriers()?
            .into_iter()
            .map(|i| (i as i64 - sc / 2) as f64 * scs)
            .collect())
    }

    /// Received baseband samples: pilot tones times `(h_d + h_b c(t))` plus noise.
    pub fn time_domain(&self, seed: u64) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        self.layout.validate()?;
        let n_fft = self.fft_size()?;
        let fs = self.sample_rate_hz()?;
        let scs = self.layout.srs.subcarrier_spacing_hz;

        // One OFDM symbol without cyclic prefix; repeating it gives continuous tones.
        let mut symbol = vec![Complex64::new(0.0, 0.0); n_fft];
        for f in self.pilot_frequencies_hz()? {
            let bin = ((f / scs).round() as i64).rem_euclid(n_fft as i64) as usize;
            symbol[bin] = Complex64::new(1.0, 0.0);
        }
        FftPlanner::new().plan_fft_inverse(n_fft).process(&mut symbol);

        let wf = zed_fsk_waveform(&self.bits, &self.tag, fs, scs)?;
        let mut rng = trial_rng(seed, 0);
        let hb = Complex64::from_polar(
            10f64.powf(self.backscatter_gain_db / 20.0),
            2.0 * PI * rng.random::<f64>(),
        );
        let noise_power = if self.direct_snr_db.is_infinite() && self.direct_snr_db > 0.0 {
            0.0
        } else {
            // Noise over the full sample rate so one subcarrier holds 1/snr.
            n_fft as f64 * 10f64.powf(-self.direct_snr_db / 10.0)
        };
        let sigma = (noise_power / 2.0).sqrt();

        let mut illumination = Vec::with_capacity(wf.samples.len());
        let mut received = Vec::with_capacity(wf.samples.len());
        for (n, &c) in wf.samples.iter().enumerate() {
            let x = symbol[n % n_fft];
            let c = if self.modulated { c } else { self.tag.amplitude };
            let mut y = (Complex64::new(1.0, 0.0) + hb * c) * x;
            if sigma > 0.0 {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                y += Complex64::new(re, im) * sigma;
            }
            illumination.push(x);
            received.push(y);
        }
        Ok((illumination, received))
    }
}

/// Strongest sideband on each side of one pilot subcarrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SidebandReport {
    pub pilot_hz: f64,
    pub lower_offset_hz: Option<f64>,
    pub upper_offset_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsdResult {
    pub before: Spectrum,
    pub after: Spectrum,
    /// Received spectrum folded around the pilots: (offset Hz, mean power dB).
    pub folded: Vec<(f64, f64)>,
    pub sidebands: Vec<SidebandReport>,
    /// Median of the received density, the reference for sideband detection.
    pub floor_density: f64,
}

/// Sidebands must clear the floor by this much, dB.
pub const SIDEBAND_THRESHOLD_DB: f64 = 10.0;
/// Bins either side of a pilot that belong to the carrier itself.
const CARRIER_GUARD_BINS: i64 = 2;

/// Spectrum of the illumination before and after the tag, and the sideband
/// offsets found around each pilot subcarrier.
pub fn psd_of_backscatter(scenario: &PsdScenario, seed: u64) -> Result<PsdResult> {
    let fs = scenario.sample_rate_hz()?;
    let segment_len = (fs / scenario.resolution_hz).round() as usize;
    let (before_td, after_td) = scenario.time_domain(seed)?;
    let before = welch_psd(&before_td, fs, segment_len, scenario.overlap, Window::Hann)?;
    let after = welch_psd(&after_td, fs, segment_len, scenario.overlap, Window::Hann)?;

    let res = after.resolution_hz;
    let scs = scenario.layout.srs.subcarrier_spacing_hz;
    let half_span = ((scs / 2.0) / res).floor() as i64 - 1;
    let n = after.density.len() as i64;
    // Index of 0 Hz in the shifted spectrum.
    let zero = after
        .frequencies_hz
        .iter()
        .position(|&f| f == 0.0)
        .unwrap_or(0) as i64;

    let mut sorted = after.density.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let peak = sorted.last().copied().unwrap_or(0.0);
    // Noise-free runs have no floor to speak of; fall back to -100 dBc.
    let floor = median.max(peak * 1e-10);
    let threshold = floor * 10f64.powf(SIDEBAND_THRESHOLD_DB / 10.0);

    let pilots = scenario.pilot_frequencies_hz()?;
    let mut folded_lin = vec![0.0; (2 * half_span + 1) as usize];
    let mut sidebands = Vec::with_capacity(pilots.len());
    for &pf in &pilots {
        let centre = zero + (pf / res).round() as i64;
        let mut best_lower: Option<(i64, f64)> = None;
        let mut best_upper: Option<(i64, f64)> = None;
        for off in -half_span..=half_span {
            let idx = centre + off;
            if idx < 0 || idx >= n {
                continue;
            }
            let p = after.density[idx as usize];
            folded_lin[(off + half_span) as usize] += p / pilots.len() as f64;
            if off.abs() <= CARRIER_GUARD_BINS || p < threshold {
                continue;
            }
            let slot = if off < 0 { &mut best_lower } else { &mut best_upper };
            if slot.is_none_or(|(_, q)| p > q) {
                *slot = Some((off, p));
            }
        }
        sidebands.push(SidebandReport {
            pilot_hz: pf,
            lower_offset_hz: best_lower.map(|(o, _)| o as f64 * res),
            upper_offset_hz: best_upper.map(|(o, _)| o as f64 * res),
        });
    }

    let folded = folded_lin
        .iter()
        .enumerate()
        .map(|(i, &p)| ((i as i64 - half_span) as f64 * res, 10.0 * p.max(1e-300).log10()))
        .collect();

    Ok(PsdResult {
        before,
        after,
        folded,
        sidebands,
        floor_density: floor,
    })
}
