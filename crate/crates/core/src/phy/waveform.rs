use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tag-side modulation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TagParams {
    /// Reflection amplitude `a`; the tag alternates between `+a` and `-a`.
    pub amplitude: f64,
    /// Toggle frequency for bit 0, Hz.
    pub f0_hz: f64,
    /// Toggle frequency for bit 1, Hz.
    pub f1_hz: f64,
    pub symbol_rate_hz: f64,
}

impl Default for TagParams {
    fn default() -> Self {
        TagParams {
            amplitude: 0.5,
            f0_hz: 200.0,
            f1_hz: 400.0,
            symbol_rate_hz: 100.0,
        }
    }
}

/// Largest shift allowed as a fraction of the subcarrier spacing.
pub const MAX_SHIFT_FRACTION: f64 = 0.1;

impl TagParams {
    /// Amplitude whose two-state switching costs `loss_db` relative to a full reflector.
    pub fn amplitude_for_modulation_loss(loss_db: f64) -> f64 {
        10f64.powf(-loss_db / 20.0)
    }

    pub fn modulation_loss_db(&self) -> f64 {
        -20.0 * self.amplitude.log10()
    }

    pub fn validate(&self, subcarrier_spacing_hz: f64) -> Result<()> {
        if !(self.amplitude > 0.0 && self.amplitude <= 1.0) {
            return Err(Error::config(format!(
                "reflection amplitude must lie in (0, 1], got {}",
                self.amplitude
            )));
        }
        if !(self.f0_hz > 0.0 && self.f1_hz > 0.0) {
            return Err(Error::config("shift frequencies must be positive"));
        }
        if !(self.symbol_rate_hz > 0.0) {
            return Err(Error::config("symbol rate must be positive"));
        }
        let max_shift = self.f0_hz.max(self.f1_hz);
        if max_shift > MAX_SHIFT_FRACTION * subcarrier_spacing_hz {
            return Err(Error::config(format!(
                "shift {max_shift} Hz is not small against the {subcarrier_spacing_hz} Hz subcarrier spacing (limit {})",
                MAX_SHIFT_FRACTION * subcarrier_spacing_hz
            )));
        }
        if self.symbol_rate_hz > (self.f1_hz - self.f0_hz).abs() {
            return Err(Error::config(format!(
                "symbol rate {} Hz exceeds the {} Hz tone spacing",
                self.symbol_rate_hz,
                (self.f1_hz - self.f0_hz).abs()
            )));
        }
        Ok(())
    }

    pub fn tone(&self, bit: bool) -> f64 {
        if bit {
            self.f1_hz
        } else {
            self.f0_hz
        }
    }
}

/// Square-wave state (+1 / -1) at `phase` cycles.
pub(crate) fn square(phase: f64) -> f64 {
    if phase.rem_euclid(1.0) < 0.5 {
        1.0
    } else {
        -1.0
    }
}

/// Sampled reflection coefficient of a tag sending a bit sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ZedWaveform {
    pub params: TagParams,
    pub sample_rate_hz: f64,
    pub bits: Vec<bool>,
    /// Reflection coefficient at `(n + 0.5) / sample_rate_hz`.
    pub samples: Vec<f64>,
}

impl ZedWaveform {
    pub fn duration_s(&self) -> f64 {
        self.bits.len() as f64 / self.params.symbol_rate_hz
    }
}

/// Modulates `bits` onto a continuous-phase two-tone square wave.
///
/// Bit 0 toggles the reflection state at `f0`, bit 1 at `f1`. The toggle phase
/// carries over symbol boundaries. Samples sit at the centre of each sampling
/// interval so no sample lands exactly on a toggle edge.
pub fn zed_fsk_waveform(
    bits: &[bool],
    params: &TagParams,
    sample_rate_hz: f64,
    subcarrier_spacing_hz: f64,
) -> Result<ZedWaveform> {
    params.validate(subcarrier_spacing_hz)?;
    if !(sample_rate_hz > 0.0) {
        return Err(Error::config("sample rate must be positive"));
    }
    let symbol_period = 1.0 / params.symbol_rate_hz;
    let n_samples = (bits.len() as f64 * sample_rate_hz / params.symbol_rate_hz).round() as usize;
    let mut samples = Vec::with_capacity(n_samples);

    let mut symbol = 0usize;
    let mut start_phase = 0.0f64;
    for n in 0..n_samples {
        let t = (n as f64 + 0.5) / sample_rate_hz;
        let m = ((t * params.symbol_rate_hz).floor() as usize).min(bits.len() - 1);
        while symbol < m {
            start_phase = (start_phase + params.tone(bits[symbol]) * symbol_period).fract();
            symbol += 1;
        }
        let f = params.tone(bits[m]);
        let phase = start_phase + f * (t - m as f64 * symbol_period);
        samples.push(params.amplitude * square(phase));
    }

    Ok(ZedWaveform {
        params: *params,
        sample_rate_hz,
        bits: bits.to_vec(),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rustfft::num_complex::Complex64;
    use rustfft::FftPlanner;

    #[test]
    fn defaults_respect_shift_constraint() {
        let p = TagParams::default();
        assert!(p.validate(15e3).is_ok());
        assert!(p.f1_hz <= 0.1 * 15e3);
        assert!((p.modulation_loss_db() - 6.02).abs() < 0.01);
    }

    #[test]
    fn large_shift_is_rejected() {
        let p = TagParams {
            f1_hz: 1600.0,
            ..TagParams::default()
        };
        assert!(matches!(p.validate(15e3), Err(Error::Config(_))));
        assert!(zed_fsk_waveform(&[true], &p, 4000.0, 15e3).is_err());
        let fast = TagParams {
            symbol_rate_hz: 300.0,
            ..TagParams::default()
        };
        assert!(fast.validate(15e3).is_err());
    }

    #[test]
    fn empty_bits_give_empty_waveform() {
        let w = zed_fsk_waveform(&[], &TagParams::default(), 4000.0, 15e3).unwrap();
        assert!(w.samples.is_empty());
        assert_eq!(w.duration_s(), 0.0);
    }

    #[test]
    fn zero_bits_have_a_line_at_f0() {
        let fs = 8000.0;
        let w = zed_fsk_waveform(&[false; 20], &TagParams::default(), fs, 15e3).unwrap();
        let n = w.samples.len();
        assert_eq!(n, 1600);
        let mut buf: Vec<Complex64> = w.samples.iter().map(|&s| Complex64::new(s, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let (peak, _) = buf[1..n / 2]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap();
        let peak_hz = (peak + 1) as f64 * fs / n as f64;
        assert!((peak_hz - 200.0).abs() < 1e-9);
    }

    #[test]
    fn two_states_only_and_balanced_per_symbol() {
        let p = TagParams::default();
        let w = zed_fsk_waveform(&[false, true, true, false], &p, 4000.0, 15e3).unwrap();
        assert_eq!(w.samples.len(), 160);
        for chunk in w.samples.chunks(40) {
            assert!(chunk.iter().all(|&s| s == 0.5 || s == -0.5));
            assert_eq!(chunk.iter().sum::<f64>(), 0.0);
        }
    }

    #[test]
    fn phase_continues_across_symbols() {
        // 150 Hz over a 10 ms symbol leaves the toggle half way through a cycle.
        let p = TagParams {
            f0_hz: 150.0,
            f1_hz: 400.0,
            ..TagParams::default()
        };
        let fs = 12_000.0;
        let w = zed_fsk_waveform(&[false, false], &p, fs, 15e3).unwrap();
        let per = 120;
        // An uninterrupted 150 Hz square wave over both symbols.
        for (n, &s) in w.samples.iter().enumerate() {
            let t = (n as f64 + 0.5) / fs;
            assert_eq!(s, 0.5 * square(150.0 * t), "sample {n}");
        }
        assert_eq!(w.samples.len(), 2 * per);
    }
}
