use num_complex::Complex64;
use serde::Serialize;

use super::waveform::{square, TagParams};
use crate::error::{Error, Result};

/// Tone energies for one tag symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymbolStatistic {
    pub energy_f0: f64,
    pub energy_f1: f64,
}

impl SymbolStatistic {
    pub fn decision(&self) -> bool {
        self.energy_f1 > self.energy_f0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub bits: Vec<bool>,
    /// Set once the report is scored against the transmitted bits.
    pub bit_errors: Option<usize>,
    pub statistics: Vec<SymbolStatistic>,
    /// Decision-directed estimate of the per-symbol SNR after combining, dB.
    pub effective_snr_db: f64,
}

impl DetectionReport {
    /// Counts disagreements with `truth` and records them.
    pub fn score(&mut self, truth: &[bool]) -> usize {
        let errors = self
            .bits
            .iter()
            .zip(truth)
            .filter(|(a, b)| a != b)
            .count();
        self.bit_errors = Some(errors);
        errors
    }
}

/// Noncoherent two-tone detector over a genie-synchronised residual.
///
/// For each symbol the residual is correlated against square-wave replicas
/// of both tones, starting from the toggle phase implied by the previous
/// decisions, and the tone with the larger correlation energy wins.
pub fn detect_zed_symbols(
    residual: &[Complex64],
    params: &TagParams,
    sample_rate_hz: f64,
) -> Result<DetectionReport> {
    let per_symbol = sample_rate_hz / params.symbol_rate_hz;
    let samples_per_symbol = per_symbol.round() as usize;
    if samples_per_symbol == 0 || (per_symbol - samples_per_symbol as f64).abs() > 1e-9 {
        return Err(Error::config(format!(
            "sample rate {sample_rate_hz} Hz is not a whole multiple of the symbol rate"
        )));
    }
    if residual.len() < samples_per_symbol {
        return Err(Error::InsufficientData(format!(
            "{} residual samples, need at least {samples_per_symbol} for one symbol",
            residual.len()
        )));
    }

    let symbol_period = 1.0 / params.symbol_rate_hz;
    let mut start_phase = 0.0f64;
    let mut bits = Vec::new();
    let mut statistics = Vec::new();

    for (m, chunk) in residual.chunks_exact(samples_per_symbol).enumerate() {
        let t0 = m as f64 * symbol_period;
        let correlate = |f: f64| {
            let z: Complex64 = chunk
                .iter()
                .enumerate()
                .map(|(k, r)| {
                    let t = (m * samples_per_symbol + k) as f64 + 0.5;
                    r * square(start_phase + f * (t / sample_rate_hz - t0))
                })
                .sum();
            z.norm_sqr()
        };
        let stat = SymbolStatistic {
            energy_f0: correlate(params.f0_hz),
            energy_f1: correlate(params.f1_hz),
        };
        let bit = stat.decision();
        start_phase = (start_phase + params.tone(bit) * symbol_period).fract();
        bits.push(bit);
        statistics.push(stat);
    }

    let (win, lose) = statistics.iter().fold((0.0, 0.0), |(w, l), s| {
        (w + s.energy_f0.max(s.energy_f1), l + s.energy_f0.min(s.energy_f1))
    });
    let effective_snr_db = if lose > 0.0 {
        10.0 * ((win - lose) / lose).log10()
    } else if win > 0.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };

    Ok(DetectionReport {
        bits,
        bit_errors: None,
        statistics,
        effective_snr_db,
    })
}

/// Uncoded noncoherent orthogonal BFSK bit error rate at linear SNR `gamma`.
pub fn noncoherent_bfsk_ber(gamma: f64) -> f64 {
    0.5 * (-gamma / 2.0).exp()
}

/// Noncoherent BFSK with square-law combining of `diversity` symbols per bit;
/// `gamma_total` is the linear SNR summed over those symbols.
pub fn noncoherent_combined_ber(diversity: u32, gamma_total: f64) -> f64 {
    let l = diversity as i64;
    let binom = |n: i64, k: i64| -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    };
    let half = gamma_total / 2.0;
    let mut sum = 0.0;
    let mut k_fact = 1.0;
    for k in 0..l {
        if k > 0 {
            k_fact *= k as f64;
        }
        let c_k: f64 = (0..l - k).map(|n| binom(2 * l - 1, n)).sum::<f64>() / k_fact;
        sum += c_k * half.powi(k as i32);
    }
    2f64.powi(-(2 * l as i32 - 1)) * (-half).exp() * sum
}
