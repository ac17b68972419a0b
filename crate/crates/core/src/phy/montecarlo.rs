use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::channel::{apply_backscatter_channel, ChannelPair};
use super::detect::{detect_zed_symbols, SymbolStatistic};
use super::estimate::{estimate_direct_channel, Combining};
use super::grid::{synthesize_ambient_frame, FrameLayout};
use super::waveform::{zed_fsk_waveform, TagParams};
use crate::error::{Error, Result};
use crate::linkbudget::LinkBudgetBreakdown;
use crate::stats::{trial_rng, wilson_interval};

/// Channel coding applied to the tag's information bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coding {
    #[default]
    None,
    /// Each bit sent on two consecutive symbols; square-law combined at the receiver.
    Repetition2,
}

impl Coding {
    pub fn rate(self) -> f64 {
        match self {
            Coding::None => 1.0,
            Coding::Repetition2 => 0.5,
        }
    }

    fn repeat(self) -> usize {
        match self {
            Coding::None => 1,
            Coding::Repetition2 => 2,
        }
    }

    fn encode(self, bits: &[bool]) -> Vec<bool> {
        bits.iter()
            .flat_map(|&b| std::iter::repeat_n(b, self.repeat()))
            .collect()
    }

    fn decode(self, stats: &[SymbolStatistic]) -> Vec<bool> {
        stats
            .chunks_exact(self.repeat())
            .map(|c| {
                let (e0, e1) = c
                    .iter()
                    .fold((0.0, 0.0), |(a, b), s| (a + s.energy_f0, b + s.energy_f1));
                e1 > e0
            })
            .collect()
    }
}

/// End-to-end BER experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerScenario {
    pub layout: FrameLayout,
    pub tag: TagParams,
    /// Per-RE SNR of the direct path, dB. `inf` for a noiseless run.
    pub direct_snr_db: f64,
    /// Backscatter channel power relative to the direct path, excluding the
    /// reflection amplitude, dB. `-inf` switches the tag off.
    pub backscatter_gain_db: f64,
    /// Information bits per trial.
    pub bits_per_trial: usize,
    pub coding: Coding,
}

impl Default for BerScenario {
    /// Narrow 180 kHz carrier, one antenna, 40 SRS occasions per tag symbol.
    fn default() -> Self {
        BerScenario {
            layout: FrameLayout {
                srs: crate::linkbudget::SrsConfig {
                    bandwidth_hz: 180e3,
                    subcarrier_spacing_hz: 15e3,
                    comb_factor: 2,
                    rx_antennas: 1,
                    symbols_per_zed_symbol: 1,
                },
                occasions_per_symbol: 40,
                symbol_rate_hz: 100.0,
            },
            tag: TagParams::default(),
            direct_snr_db: 0.0,
            backscatter_gain_db: -10.0,
            bits_per_trial: 100,
            coding: Coding::None,
        }
    }
}

impl BerScenario {
    /// Per-symbol SNR after combining all pilot REs of one tag symbol, dB.
    pub fn effective_snr_db(&self) -> Result<f64> {
        let resources = self.layout.combined_resources()? as f64;
        Ok(self.direct_snr_db
            + self.backscatter_gain_db
            + 20.0 * self.tag.amplitude.log10()
            + 10.0 * resources.log10())
    }

    /// Sets the noise level so the combined per-symbol SNR equals `gamma_db`.
    pub fn with_effective_snr(mut self, gamma_db: f64) -> Result<Self> {
        let current = self.effective_snr_db()?;
        self.direct_snr_db += gamma_db - current;
        Ok(self)
    }

    /// Channel and noise taken from a bistatic budget.
    ///
    /// The backscatter-to-direct ratio comes straight from the budget. The
    /// noise is then set so the simulated combined SNR equals the budget's
    /// effective SNR, since the simulated grid may combine a different number
    /// of REs than the SRS configuration behind the budget.
    pub fn from_breakdown(
        breakdown: &LinkBudgetBreakdown,
        layout: FrameLayout,
        tag: TagParams,
        bits_per_trial: usize,
        coding: Coding,
    ) -> Result<Self> {
        let gain = breakdown.backscatter_to_direct_db() + breakdown.modulation_loss_db;
        BerScenario {
            layout,
            tag: TagParams {
                amplitude: TagParams::amplitude_for_modulation_loss(breakdown.modulation_loss_db),
                ..tag
            },
            direct_snr_db: breakdown.per_re_snr_direct_db,
            backscatter_gain_db: gain,
            bits_per_trial,
            coding,
        }
        .with_effective_snr(breakdown.effective_snr_db)
    }

    pub fn validate(&self) -> Result<()> {
        self.layout.validate()?;
        self.tag.validate(self.layout.srs.subcarrier_spacing_hz)?;
        if (self.tag.symbol_rate_hz - self.layout.symbol_rate_hz).abs() > 1e-9 {
            return Err(Error::config(format!(
                "tag symbol rate {} Hz differs from the frame's {} Hz",
                self.tag.symbol_rate_hz, self.layout.symbol_rate_hz
            )));
        }
        if self.bits_per_trial == 0 {
            return Err(Error::config("bits per trial must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerResult {
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    /// 95 % Wilson interval.
    pub ci_low: f64,
    pub ci_high: f64,
    /// Mean of the detector's per-trial SNR estimates (linear average, in dB).
    pub effective_snr_estimate_db: f64,
    /// Simulated air time, s.
    pub duration_s: f64,
    /// Information bits delivered per second of air time.
    pub bits_per_second: f64,
}

struct TrialOutcome {
    bits: usize,
    errors: usize,
    snr_linear: f64,
}

fn run_trial(s: &BerScenario, seed: u64, index: u64) -> Result<TrialOutcome> {
    let mut rng = trial_rng(seed, index);
    let info: Vec<bool> = (0..s.bits_per_trial).map(|_| rng.random()).collect();
    let symbols = s.coding.encode(&info);

    let grid = synthesize_ambient_frame(&s.layout, symbols.len())?;
    let wf = zed_fsk_waveform(
        &symbols,
        &s.tag,
        s.layout.occasion_rate_hz(),
        s.layout.srs.subcarrier_spacing_hz,
    )?;
    let ch = ChannelPair::random_phases(
        grid.subcarriers(),
        grid.antennas(),
        s.backscatter_gain_db,
        &mut rng,
    );
    let noise_seed: u64 = rng.random();
    let rx = apply_backscatter_channel(&grid, &ch, &wf, s.direct_snr_db, noise_seed)?;
    let est = estimate_direct_channel(&rx, &Combining::EqualGain)?;
    let report = detect_zed_symbols(&est.residual, &s.tag, s.layout.occasion_rate_hz())?;

    let decoded = s.coding.decode(&report.statistics);
    let errors = decoded.iter().zip(&info).filter(|(a, b)| a != b).count();
    Ok(TrialOutcome {
        bits: info.len(),
        errors,
        snr_linear: 10f64.powf(report.effective_snr_db / 10.0),
    })
}

/// Runs `n_trials` independent frames through synthesis, modulation, the
/// channel, estimation and detection. Trials use derived seeds and may run
/// on any number of threads without changing the result.
pub fn ber_monte_carlo(scenario: &BerScenario, n_trials: u64, seed: u64) -> Result<BerResult> {
    scenario.validate()?;
    if n_trials == 0 {
        return Err(Error::config("at least one trial is required"));
    }
    let outcomes: Vec<TrialOutcome> = (0..n_trials)
        .into_par_iter()
        .map(|i| run_trial(scenario, seed, i))
        .collect::<Result<_>>()?;

    let bits: u64 = outcomes.iter().map(|o| o.bits as u64).sum();
    let errors: u64 = outcomes.iter().map(|o| o.errors as u64).sum();
    let finite: Vec<f64> = outcomes
        .iter()
        .map(|o| o.snr_linear)
        .filter(|v| v.is_finite())
        .collect();
    let snr_est = if finite.is_empty() {
        f64::INFINITY
    } else {
        10.0 * (finite.iter().sum::<f64>() / finite.len() as f64).log10()
    };
    let symbols = bits as f64 / scenario.coding.rate();
    let duration_s = symbols / scenario.layout.symbol_rate_hz;
    let (ci_low, ci_high) = wilson_interval(errors, bits, 1.96);
    Ok(BerResult {
        bits,
        errors,
        ber: errors as f64 / bits as f64,
        ci_low,
        ci_high,
        effective_snr_estimate_db: snr_est,
        duration_s,
        bits_per_second: bits as f64 / duration_s,
    })
}
