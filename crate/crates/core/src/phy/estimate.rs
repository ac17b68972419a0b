use num_complex::Complex64;

use super::grid::PilotGrid;
use crate::error::{Error, Result};

/// How per-RE residuals are summed into one sequence.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Combining {
    /// Plain sum; coherent when the backscatter gain is common to all REs.
    #[default]
    EqualGain,
    /// Maximal-ratio weights indexed `antenna * pilots + pilot`. The conjugate
    /// of each weight multiplies its RE.
    Weighted(Vec<Complex64>),
}

/// Output of direct-channel estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub pilots: usize,
    pub antennas: usize,
    pub windows: usize,
    /// Least-squares direct gain per (window, antenna, pilot), averaged over the window.
    pub direct: Vec<Complex64>,
    /// Per-occasion estimate minus its window mean, combined over pilots and antennas.
    pub residual: Vec<Complex64>,
}

impl ChannelEstimate {
    /// Direct gains for one tag-symbol window, antenna-major.
    pub fn window(&self, w: usize) -> &[Complex64] {
        let n = self.pilots * self.antennas;
        &self.direct[w * n..(w + 1) * n]
    }

    /// Direct gain per (antenna, pilot) averaged over all windows.
    pub fn mean_direct(&self) -> Vec<Complex64> {
        let n = self.pilots * self.antennas;
        let mut acc = vec![Complex64::new(0.0, 0.0); n];
        for w in 0..self.windows {
            for (a, v) in acc.iter_mut().zip(self.window(w)) {
                *a += v;
            }
        }
        let scale = 1.0 / self.windows.max(1) as f64;
        acc.iter().map(|v| v * scale).collect()
    }

    /// One common gain: the average over every pilot, antenna and window.
    pub fn common_gain(&self) -> Complex64 {
        let sum: Complex64 = self.direct.iter().sum();
        sum / self.direct.len().max(1) as f64
    }
}

/// Least-squares direct-channel estimate over each tag-symbol window and the
/// residual perturbation left after removing it.
///
/// Per pilot RE and occasion the LS estimate is `y / x`. Its mean over the
/// window is the direct gain; the deviation from that mean carries the tag
/// modulation and is summed over pilots and antennas.
pub fn estimate_direct_channel(grid: &PilotGrid, combining: &Combining) -> Result<ChannelEstimate> {
    let pilot_sc: Vec<usize> = grid
        .pilot_mask()
        .iter()
        .enumerate()
        .filter_map(|(sc, &p)| p.then_some(sc))
        .collect();
    if pilot_sc.is_empty() {
        return Err(Error::InsufficientData("grid has no pilot REs".into()));
    }
    let window_len = grid.layout().occasions_per_symbol;
    let windows = grid.occasions() / window_len;
    let antennas = grid.antennas();
    let pilots = pilot_sc.len();

    let weights: Vec<Complex64> = match combining {
        Combining::EqualGain => vec![Complex64::new(1.0, 0.0); pilots * antennas],
        Combining::Weighted(w) => {
            if w.len() != pilots * antennas {
                return Err(Error::Shape(format!(
                    "{} combining weights for {} pilot REs",
                    w.len(),
                    pilots * antennas
                )));
            }
            w.iter().map(|v| v.conj()).collect()
        }
    };

    let reference = grid.reference();
    let mut direct = Vec::with_capacity(windows * pilots * antennas);
    let mut residual = vec![Complex64::new(0.0, 0.0); windows * window_len];
    let mut ls = vec![Complex64::new(0.0, 0.0); window_len];

    for w in 0..windows {
        let occ0 = w * window_len;
        for ant in 0..antennas {
            for (p, &sc) in pilot_sc.iter().enumerate() {
                let x_inv = reference[sc].inv();
                for (k, slot) in ls.iter_mut().enumerate() {
                    *slot = grid.get(sc, occ0 + k, ant) * x_inv;
                }
                let mean = ls.iter().sum::<Complex64>() / window_len as f64;
                direct.push(mean);
                let wt = weights[ant * pilots + p];
                for (k, v) in ls.iter().enumerate() {
                    residual[occ0 + k] += wt * (v - mean);
                }
            }
        }
    }

    Ok(ChannelEstimate {
        pilots,
        antennas,
        windows,
        direct,
        residual,
    })
}
