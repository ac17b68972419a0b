use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::grid::PilotGrid;
use super::waveform::ZedWaveform;
use crate::error::{Error, Result};
use crate::stats::trial_rng;

/// Direct and backscatter channel gains per (subcarrier, antenna).
///
/// The backscatter gain excludes the tag's reflection amplitude, which enters
/// through the waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPair {
    pub subcarriers: usize,
    pub antennas: usize,
    pub direct: Vec<Complex64>,
    pub backscatter: Vec<Complex64>,
}

impl ChannelPair {
    /// Same gains on every RE.
    pub fn flat(subcarriers: usize, antennas: usize, direct: Complex64, backscatter: Complex64) -> Self {
        let n = subcarriers * antennas;
        ChannelPair {
            subcarriers,
            antennas,
            direct: vec![direct; n],
            backscatter: vec![backscatter; n],
        }
    }

    /// Unit-magnitude direct gains with independent uniform phases, and a
    /// common backscatter gain of power `backscatter_gain_db` relative to the
    /// direct path with a uniform random phase.
    pub fn random_phases<R: Rng>(
        subcarriers: usize,
        antennas: usize,
        backscatter_gain_db: f64,
        rng: &mut R,
    ) -> Self {
        let n = subcarriers * antennas;
        let direct = (0..n)
            .map(|_| Complex64::from_polar(1.0, 2.0 * PI * rng.random::<f64>()))
            .collect();
        let mag = 10f64.powf(backscatter_gain_db / 20.0);
        let hb = Complex64::from_polar(mag, 2.0 * PI * rng.random::<f64>());
        ChannelPair {
            subcarriers,
            antennas,
            direct,
            backscatter: vec![hb; n],
        }
    }

    fn index(&self, sc: usize, ant: usize) -> usize {
        ant * self.subcarriers + sc
    }

    pub fn direct_at(&self, sc: usize, ant: usize) -> Complex64 {
        self.direct[self.index(sc, ant)]
    }

    pub fn backscatter_at(&self, sc: usize, ant: usize) -> Complex64 {
        self.backscatter[self.index(sc, ant)]
    }

    /// Mean direct-path power over the pilot REs of `mask`.
    pub fn mean_direct_power(&self, mask: &[bool]) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for ant in 0..self.antennas {
            for (sc, &pilot) in mask.iter().enumerate() {
                if pilot {
                    sum += self.direct_at(sc, ant).norm_sqr();
                    count += 1;
                }
            }
        }
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }
}

/// Passes the transmitted grid through `y = (h_d + h_b c(t)) x + n`.
///
/// `c(t)` is sampled once per occasion. Complex white noise is added to every
/// RE with variance set so that the mean direct-path power on pilot REs sits
/// `noise_snr_db` above it; `f64::INFINITY` disables noise.
pub fn apply_backscatter_channel(
    grid: &PilotGrid,
    ch: &ChannelPair,
    wf: &ZedWaveform,
    noise_snr_db: f64,
    seed: u64,
) -> Result<PilotGrid> {
    if ch.subcarriers != grid.subcarriers() || ch.antennas != grid.antennas() {
        return Err(Error::Shape(format!(
            "channel is {}x{} (subcarriers x antennas), grid is {}x{}",
            ch.subcarriers,
            ch.antennas,
            grid.subcarriers(),
            grid.antennas()
        )));
    }
    if wf.samples.len() != grid.occasions() {
        return Err(Error::Shape(format!(
            "waveform has {} samples for {} occasions",
            wf.samples.len(),
            grid.occasions()
        )));
    }

    let sigma = if noise_snr_db.is_infinite() && noise_snr_db > 0.0 {
        0.0
    } else {
        let signal = ch.mean_direct_power(grid.pilot_mask());
        (signal * 10f64.powf(-noise_snr_db / 10.0) / 2.0).sqrt()
    };

    let mut rng = trial_rng(seed, 0);
    let mut out = Vec::with_capacity(grid.samples().len());
    for ant in 0..grid.antennas() {
        for (occ, &c) in wf.samples.iter().enumerate() {
            for sc in 0..grid.subcarriers() {
                let h = ch.direct_at(sc, ant) + ch.backscatter_at(sc, ant) * c;
                let mut y = h * grid.get(sc, occ, ant);
                if sigma > 0.0 {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    y += Complex64::new(re, im) * sigma;
                }
                out.push(y);
            }
        }
    }
    grid.with_data(out)
}

#[cfg(test)]
mod tests {
    use super::super::grid::{synthesize_ambient_frame, FrameLayout};
    use super::super::waveform::{zed_fsk_waveform, TagParams};
    use super::*;
    use crate::linkbudget::SrsConfig;

    fn setup(n_symbols: usize) -> (PilotGrid, ZedWaveform) {
        let layout = FrameLayout {
            srs: SrsConfig {
                bandwidth_hz: 120e3,
                subcarrier_spacing_hz: 15e3,
                comb_factor: 2,
                rx_antennas: 2,
                symbols_per_zed_symbol: 1,
            },
            occasions_per_symbol: 40,
            symbol_rate_hz: 100.0,
        };
        let grid = synthesize_ambient_frame(&layout, n_symbols).unwrap();
        let bits: Vec<bool> = (0..n_symbols).map(|i| i % 3 == 0).collect();
        let wf = zed_fsk_waveform(&bits, &TagParams::default(), layout.occasion_rate_hz(), 15e3)
            .unwrap();
        (grid, wf)
    }

    #[test]
    fn energy_conservation_without_noise() {
        let (grid, wf) = setup(3);
        let mut rng = trial_rng(1, 0);
        let ch = ChannelPair::random_phases(grid.subcarriers(), grid.antennas(), -3.0, &mut rng);
        let y = apply_backscatter_channel(&grid, &ch, &wf, f64::INFINITY, 5).unwrap();
        let mut expected = 0.0;
        for ant in 0..grid.antennas() {
            for (occ, &c) in wf.samples.iter().enumerate() {
                for sc in 0..grid.subcarriers() {
                    let h = ch.direct_at(sc, ant) + ch.backscatter_at(sc, ant) * c;
                    expected += h.norm_sqr() * grid.get(sc, occ, ant).norm_sqr();
                }
            }
        }
        assert!((y.total_energy() - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn noiseless_output_is_reconstructible() {
        let (grid, wf) = setup(2);
        let ch = ChannelPair::flat(
            grid.subcarriers(),
            grid.antennas(),
            Complex64::new(0.3, -0.8),
            Complex64::new(0.05, 0.02),
        );
        let y = apply_backscatter_channel(&grid, &ch, &wf, f64::INFINITY, 0).unwrap();
        for occ in 0..grid.occasions() {
            let x = grid.get(0, occ, 1);
            let expect = (Complex64::new(0.3, -0.8) + Complex64::new(0.05, 0.02) * wf.samples[occ]) * x;
            assert!((y.get(0, occ, 1) - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn zero_backscatter_gives_direct_channel_only() {
        let (grid, wf) = setup(2);
        let ch = ChannelPair::flat(
            grid.subcarriers(),
            grid.antennas(),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        );
        let y = apply_backscatter_channel(&grid, &ch, &wf, f64::INFINITY, 0).unwrap();
        assert_eq!(y.samples(), grid.samples());
    }

    #[test]
    fn seeded_noise_is_deterministic() {
        let (grid, wf) = setup(2);
        let ch = ChannelPair::flat(grid.subcarriers(), grid.antennas(), 1.0.into(), 0.1.into());
        let a = apply_backscatter_channel(&grid, &ch, &wf, 10.0, 42).unwrap();
        let b = apply_backscatter_channel(&grid, &ch, &wf, 10.0, 42).unwrap();
        let c = apply_backscatter_channel(&grid, &ch, &wf, 10.0, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn noise_power_matches_snr() {
        let (grid, wf) = setup(20);
        let ch = ChannelPair::flat(grid.subcarriers(), grid.antennas(), 1.0.into(), 0.0.into());
        let y = apply_backscatter_channel(&grid, &ch, &wf, 10.0, 3).unwrap();
        let noise: f64 = y
            .samples()
            .iter()
            .zip(grid.samples())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            / y.samples().len() as f64;
        assert!((noise - 0.1).abs() < 0.01, "{noise}");
    }

    #[test]
    fn shape_mismatch() {
        let (grid, wf) = setup(2);
        let ch = ChannelPair::flat(3, grid.antennas(), 1.0.into(), 0.0.into());
        assert!(matches!(
            apply_backscatter_channel(&grid, &ch, &wf, 10.0, 0),
            Err(Error::Shape(_))
        ));
        let (_, short) = setup(1);
        let ch = ChannelPair::flat(grid.subcarriers(), grid.antennas(), 1.0.into(), 0.0.into());
        assert!(apply_backscatter_channel(&grid, &ch, &short, 10.0, 0).is_err());
    }
}
