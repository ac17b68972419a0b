use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linkbudget::SrsConfig;

/// Time-frequency layout of the simulated SRS illumination.
///
/// Each tag symbol spans `occasions_per_symbol` SRS occasions; one occasion is
/// one pilot-bearing OFDM symbol on every antenna.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameLayout {
    pub srs: SrsConfig,
    pub occasions_per_symbol: usize,
    pub symbol_rate_hz: f64,
}

impl FrameLayout {
    pub fn validate(&self) -> Result<()> {
        self.srs.pilot_count()?;
        if self.srs.rx_antennas == 0 {
            return Err(Error::config("at least one receive antenna is required"));
        }
        if self.occasions_per_symbol == 0 {
            return Err(Error::config("occasions per symbol must be at least 1"));
        }
        if !(self.symbol_rate_hz > 0.0) {
            return Err(Error::config("symbol rate must be positive"));
        }
        Ok(())
    }

    pub fn occasion_rate_hz(&self) -> f64 {
        self.symbol_rate_hz * self.occasions_per_symbol as f64
    }

    /// Pilot resource elements combined per tag symbol.
    pub fn combined_resources(&self) -> Result<usize> {
        Ok(self.srs.pilot_count()? * self.srs.rx_antennas * self.occasions_per_symbol)
    }

    pub fn pilot_subcarriers(&self) -> Result<Vec<usize>> {
        let sc = self.srs.subcarriers()?;
        self.srs.pilot_count()?;
        Ok((0..sc).step_by(self.srs.comb_factor).collect())
    }
}

/// Received (or transmitted) resource grid indexed by (subcarrier, occasion, antenna).
#[derive(Debug, Clone, PartialEq)]
pub struct PilotGrid {
    layout: FrameLayout,
    subcarriers: usize,
    occasions: usize,
    antennas: usize,
    pilot_mask: Vec<bool>,
    /// Known pilot value per subcarrier (zero off the comb).
    reference: Vec<Complex64>,
    data: Vec<Complex64>,
}

impl PilotGrid {
    fn index(&self, sc: usize, occ: usize, ant: usize) -> usize {
        (ant * self.occasions + occ) * self.subcarriers + sc
    }

    pub fn layout(&self) -> &FrameLayout {
        &self.layout
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn occasions(&self) -> usize {
        self.occasions
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn zed_symbols(&self) -> usize {
        self.occasions / self.layout.occasions_per_symbol
    }

    pub fn duration_s(&self) -> f64 {
        self.zed_symbols() as f64 / self.layout.symbol_rate_hz
    }

    pub fn pilot_mask(&self) -> &[bool] {
        &self.pilot_mask
    }

    pub fn reference(&self) -> &[Complex64] {
        &self.reference
    }

    pub fn get(&self, sc: usize, occ: usize, ant: usize) -> Complex64 {
        self.data[self.index(sc, occ, ant)]
    }

    pub fn set(&mut self, sc: usize, occ: usize, ant: usize, value: Complex64) {
        let i = self.index(sc, occ, ant);
        self.data[i] = value;
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.data
    }

    pub fn total_energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    #[cfg(test)]
    pub(crate) fn without_pilots(&self) -> Self {
        PilotGrid {
            pilot_mask: vec![false; self.subcarriers],
            ..self.clone()
        }
    }

    pub(crate) fn with_data(&self, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != self.data.len() {
            return Err(Error::Shape(format!(
                "grid holds {} REs, got {}",
                self.data.len(),
                data.len()
            )));
        }
        Ok(PilotGrid {
            data,
            ..self.clone()
        })
    }
}

/// Constant-modulus Zadoff-Chu style pilot value for pilot `n` of `count`.
fn pilot_value(n: usize, count: usize) -> Complex64 {
    let n = n as f64;
    Complex64::from_polar(1.0, -PI * n * (n + 1.0) / count as f64)
}

/// Builds the transmitted SRS grid for `n_zed_symbols` tag symbols.
///
/// Pilot REs carry unit-power values on every occasion and antenna; all other
/// REs are zero.
pub fn synthesize_ambient_frame(layout: &FrameLayout, n_zed_symbols: usize) -> Result<PilotGrid> {
    layout.validate()?;
    let subcarriers = layout.srs.subcarriers()?;
    let pilot_count = layout.srs.pilot_count()?;
    let antennas = layout.srs.rx_antennas;
    let occasions = n_zed_symbols * layout.occasions_per_symbol;

    let mut pilot_mask = vec![false; subcarriers];
    let mut reference = vec![Complex64::new(0.0, 0.0); subcarriers];
    for (n, sc) in layout.pilot_subcarriers()?.into_iter().enumerate() {
        pilot_mask[sc] = true;
        reference[sc] = pilot_value(n, pilot_count);
    }

    let mut data = Vec::with_capacity(subcarriers * occasions * antennas);
    for _ in 0..antennas * occasions {
        data.extend_from_slice(&reference);
    }

    Ok(PilotGrid {
        layout: *layout,
        subcarriers,
        occasions,
        antennas,
        pilot_mask,
        reference,
        data,
    })
}
