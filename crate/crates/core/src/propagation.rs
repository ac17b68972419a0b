//! Deterministic large-scale path loss and thermal noise.
//!
//! Powers are carried in dBm and losses/gains in dB everywhere; linear
//! quantities only appear inside the formulas below.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Thermal noise density at 290 K, dBm/Hz.
pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

/// A carrier frequency in Hz.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Frequency(f64);

impl Frequency {
    pub fn from_hz(hertz: f64) -> Result<Self> {
        if hertz.is_finite() && hertz > 0.0 {
            Ok(Frequency(hertz))
        } else {
            Err(Error::domain(format!("frequency must be positive, got {hertz} Hz")))
        }
    }

    pub fn from_mhz(mhz: f64) -> Result<Self> {
        Self::from_hz(mhz * 1e6)
    }

    pub fn hz(self) -> f64 {
        self.0
    }

    pub fn mhz(self) -> f64 {
        self.0 / 1e6
    }

    pub fn wavelength(self) -> f64 {
        SPEED_OF_LIGHT / self.0
    }
}

/// Converts dB to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear power ratio to dB.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

fn check_positive(what: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} must be positive, got {value}")))
    }
}

/// Free-space (Friis) path loss between isotropic antennas, in dB.
pub fn free_space_path_loss(f: Frequency, distance_m: f64) -> Result<f64> {
    check_positive("distance", distance_m)?;
    Ok(20.0 * (4.0 * PI * distance_m * f.hz() / SPEED_OF_LIGHT).log10())
}

/// Distance at which free-space loss equals `loss_db`. Inverse of [`free_space_path_loss`].
pub fn free_space_distance(f: Frequency, loss_db: f64) -> f64 {
    f.wavelength() / (4.0 * PI) * 10f64.powf(loss_db / 20.0)
}

/// Antenna heights and link distance for the Okumura-Hata family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HataGeometry {
    /// Base station antenna height, m.
    pub base_height: f64,
    /// Mobile antenna height, m.
    pub mobile_height: f64,
    /// Link distance, km.
    pub distance_km: f64,
}

impl HataGeometry {
    pub const DEFAULT_BASE_HEIGHT: f64 = 30.0;
    pub const DEFAULT_MOBILE_HEIGHT: f64 = 1.5;

    pub fn new(base_height: f64, mobile_height: f64, distance_km: f64) -> Result<Self> {
        let g = HataGeometry {
            base_height,
            mobile_height,
            distance_km,
        };
        g.validate()?;
        Ok(g)
    }

    /// Classical macro-cell heights (30 m / 1.5 m) at the given distance.
    pub fn with_default_heights(distance_km: f64) -> Result<Self> {
        Self::new(
            Self::DEFAULT_BASE_HEIGHT,
            Self::DEFAULT_MOBILE_HEIGHT,
            distance_km,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(1.0..=200.0).contains(&self.base_height) {
            return Err(Error::domain(format!(
                "base height {} m outside [1, 200] m",
                self.base_height
            )));
        }
        if !(0.5..=10.0).contains(&self.mobile_height) {
            return Err(Error::domain(format!(
                "mobile height {} m outside [0.5, 10] m",
                self.mobile_height
            )));
        }
        check_positive("distance", self.distance_km)
    }

    fn at(&self, distance_km: f64) -> Self {
        HataGeometry {
            distance_km,
            ..*self
        }
    }
}

/// What to do when a Hata-family model is evaluated outside its frequency window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Validity {
    /// Log a warning once and evaluate the formula anyway.
    #[default]
    Extrapolate,
    /// Refuse with [`Error::Validity`].
    Strict,
}

/// Large-scale model for the cellular (UE-BS and ZED-BS) legs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathLossModel {
    /// Okumura-Hata, small/medium city mobile correction, suburban correction.
    #[default]
    HataSuburban,
    /// COST-231 extension of Hata (1500-2000 MHz), suburban/medium-city (Cm = 0).
    Cost231Suburban,
}

impl PathLossModel {
    pub fn loss(self, f: Frequency, g: &HataGeometry, validity: Validity) -> Result<f64> {
        match self {
            PathLossModel::HataSuburban => okumura_hata_suburban(f, g, validity),
            PathLossModel::Cost231Suburban => cost231_hata(f, g, validity),
        }
    }

    /// Distance (km) at which the model's loss equals `loss_db`.
    ///
    /// All supported models are affine in log10(d), so the inverse is closed form.
    pub fn distance_for_loss(
        self,
        f: Frequency,
        g: &HataGeometry,
        validity: Validity,
        loss_db: f64,
    ) -> Result<f64> {
        let at_1km = self.loss(f, &g.at(1.0), validity)?;
        let slope = hata_distance_slope(g.base_height);
        Ok(10f64.powf((loss_db - at_1km) / slope))
    }
}

static EXTRAPOLATION_WARNED: AtomicBool = AtomicBool::new(false);

fn check_window(
    model: &'static str,
    f: Frequency,
    min_mhz: f64,
    max_mhz: f64,
    validity: Validity,
) -> Result<()> {
    let mhz = f.mhz();
    if (min_mhz..=max_mhz).contains(&mhz) {
        return Ok(());
    }
    match validity {
        Validity::Strict => Err(Error::Validity {
            model,
            min_mhz,
            max_mhz,
            got_mhz: mhz,
        }),
        Validity::Extrapolate => {
            if !EXTRAPOLATION_WARNED.swap(true, Ordering::Relaxed) {
                log::warn!(
                    "{model} evaluated at {mhz:.1} MHz, outside its {min_mhz}-{max_mhz} MHz window; extrapolating"
                );
            }
            Ok(())
        }
    }
}

/// Small/medium-city mobile antenna correction a(hm), dB.
fn mobile_correction(f_mhz: f64, mobile_height: f64) -> f64 {
    let lf = f_mhz.log10();
    (1.1 * lf - 0.7) * mobile_height - (1.56 * lf - 0.8)
}

/// dB per decade of distance for the Hata family.
pub fn hata_distance_slope(base_height: f64) -> f64 {
    44.9 - 6.55 * base_height.log10()
}

fn hata_urban_unchecked(f: Frequency, g: &HataGeometry) -> f64 {
    let f_mhz = f.mhz();
    69.55 + 26.16 * f_mhz.log10() - 13.82 * g.base_height.log10()
        - mobile_correction(f_mhz, g.mobile_height)
        + hata_distance_slope(g.base_height) * g.distance_km.log10()
}

/// Okumura-Hata urban loss with the small/medium-city correction, dB.
pub fn okumura_hata_urban(f: Frequency, g: &HataGeometry, validity: Validity) -> Result<f64> {
    g.validate()?;
    check_window("Okumura-Hata", f, 150.0, 1500.0, validity)?;
    Ok(hata_urban_unchecked(f, g))
}

/// Okumura-Hata suburban loss, dB.
pub fn okumura_hata_suburban(f: Frequency, g: &HataGeometry, validity: Validity) -> Result<f64> {
    let urban = okumura_hata_urban(f, g, validity)?;
    let k = (f.mhz() / 28.0).log10();
    Ok(urban - 2.0 * k * k - 5.4)
}

/// COST-231 Hata loss for suburban / medium-city areas (Cm = 0 dB).
pub fn cost231_hata(f: Frequency, g: &HataGeometry, validity: Validity) -> Result<f64> {
    g.validate()?;
    check_window("COST-231 Hata", f, 1500.0, 2000.0, validity)?;
    let f_mhz = f.mhz();
    Ok(46.3 + 33.9 * f_mhz.log10() - 13.82 * g.base_height.log10()
        - mobile_correction(f_mhz, g.mobile_height)
        + hata_distance_slope(g.base_height) * g.distance_km.log10())
}

/// Thermal noise floor over `bandwidth_hz` at the given noise figure, dBm.
pub fn noise_floor(bandwidth_hz: f64, noise_figure_db: f64) -> Result<f64> {
    check_positive("bandwidth", bandwidth_hz)?;
    Ok(THERMAL_NOISE_DBM_HZ + 10.0 * bandwidth_hz.log10() + noise_figure_db)
}

/// Range and radar cross-section for the two-way monostatic path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadarGeometry {
    pub distance_m: f64,
    pub rcs_dbsm: f64,
}

/// Two-way monostatic spreading loss including the target RCS, dB.
///
/// Antenna gains and tag modulation loss are excluded.
pub fn radar_backscatter_loss(f: Frequency, g: &RadarGeometry) -> Result<f64> {
    check_positive("distance", g.distance_m)?;
    let lambda = f.wavelength();
    let sigma = db_to_linear(g.rcs_dbsm);
    let ratio = lambda * lambda * sigma / ((4.0 * PI).powi(3) * g.distance_m.powi(4));
    Ok(-10.0 * ratio.log10())
}

/// Range at which [`radar_backscatter_loss`] equals `loss_db`.
pub fn radar_distance_for_loss(f: Frequency, rcs_dbsm: f64, loss_db: f64) -> f64 {
    let lambda = f.wavelength();
    let sigma = db_to_linear(rcs_dbsm);
    (lambda * lambda * sigma * db_to_linear(loss_db) / (4.0 * PI).powi(3)).powf(0.25)
}
