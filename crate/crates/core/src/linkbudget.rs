//! Bistatic (sub-6 GHz, SRS-illuminated) and monostatic (mmWave reader) link budgets.
//!
//! In the bistatic geometry the UE sounds the uplink with SRS under BS power
//! control, the ZED sits at the same distance from the BS as the UE, the
//! UE-ZED leg is line of sight, and the BS recovers the slow backscatter
//! modulation by combining many pilot resource elements. The effective SNR
//! after that combining is what the tag's required SNR is compared against.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagation::{
    free_space_distance, free_space_path_loss, noise_floor, radar_backscatter_loss,
    radar_distance_for_loss, Frequency, HataGeometry, PathLossModel, RadarGeometry, Validity,
};

/// Regulatory UE transmit power cap, dBm.
pub const UE_MAX_TX_POWER_DBM: f64 = 23.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    Bs,
    Ue,
    Reader,
}

/// Radio parameters of a BS, UE or monostatic reader.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeProfile {
    pub role: NodeRole,
    /// Maximum conducted transmit power (EIRP for a reader), dBm.
    pub tx_power_max_dbm: f64,
    pub antenna_gain_dbi: f64,
    pub noise_figure_db: f64,
    pub height_m: f64,
}

impl NodeProfile {
    pub fn new(
        role: NodeRole,
        tx_power_max_dbm: f64,
        antenna_gain_dbi: f64,
        noise_figure_db: f64,
        height_m: f64,
    ) -> Result<Self> {
        let n = NodeProfile {
            role,
            tx_power_max_dbm,
            antenna_gain_dbi,
            noise_figure_db,
            height_m,
        };
        n.validate()?;
        Ok(n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.role == NodeRole::Ue && self.tx_power_max_dbm > UE_MAX_TX_POWER_DBM {
            return Err(Error::config(format!(
                "UE transmit power {} dBm exceeds the {UE_MAX_TX_POWER_DBM} dBm cap",
                self.tx_power_max_dbm
            )));
        }
        if !(self.noise_figure_db >= 0.0) {
            return Err(Error::config(format!(
                "noise figure must be non-negative, got {}",
                self.noise_figure_db
            )));
        }
        Ok(())
    }

    /// Sub-6 macro BS: 30 m mast, 5 dB noise figure, 0 dBi.
    pub fn default_bs() -> Self {
        NodeProfile {
            role: NodeRole::Bs,
            tx_power_max_dbm: 46.0,
            antenna_gain_dbi: 0.0,
            noise_figure_db: 5.0,
            height_m: HataGeometry::DEFAULT_BASE_HEIGHT,
        }
    }

    pub fn default_ue() -> Self {
        NodeProfile {
            role: NodeRole::Ue,
            tx_power_max_dbm: UE_MAX_TX_POWER_DBM,
            antenna_gain_dbi: 0.0,
            noise_figure_db: 7.0,
            height_m: HataGeometry::DEFAULT_MOBILE_HEIGHT,
        }
    }
}

/// How the tag couples to the illuminating field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TagCoupling {
    /// Sub-6 tag: receive and re-radiate through an antenna of this gain on each leg.
    LegGain { leg_antenna_gain_dbi: f64 },
    /// mmWave tag characterised by its radar cross-section.
    RadarCrossSection { rcs_dbsm: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZedProfile {
    pub modulation_loss_db: f64,
    pub coupling: TagCoupling,
    /// Post-processing-gain SNR needed to decode, dB.
    pub required_effective_snr_db: f64,
}

impl ZedProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.modulation_loss_db >= 0.0) {
            return Err(Error::config(format!(
                "modulation loss must be non-negative, got {}",
                self.modulation_loss_db
            )));
        }
        Ok(())
    }

    /// 6 dB modulation loss, 0 dBi legs, 1.5 dB required effective SNR.
    pub fn default_sub6() -> Self {
        ZedProfile {
            modulation_loss_db: 6.0,
            coupling: TagCoupling::LegGain {
                leg_antenna_gain_dbi: 0.0,
            },
            required_effective_snr_db: 1.5,
        }
    }

    /// 6 dB modulation loss, -10 dBsm RCS, 5 dB required SNR.
    pub fn default_mmwave() -> Self {
        ZedProfile {
            modulation_loss_db: 6.0,
            coupling: TagCoupling::RadarCrossSection { rcs_dbsm: -10.0 },
            required_effective_snr_db: 5.0,
        }
    }

    fn leg_gain(&self) -> Result<f64> {
        match self.coupling {
            TagCoupling::LegGain {
                leg_antenna_gain_dbi,
            } => Ok(leg_antenna_gain_dbi),
            TagCoupling::RadarCrossSection { .. } => Err(Error::Mode(
                "bistatic budget needs a leg-gain tag, got an RCS tag".into(),
            )),
        }
    }

    fn rcs(&self) -> Result<f64> {
        match self.coupling {
            TagCoupling::RadarCrossSection { rcs_dbsm } => Ok(rcs_dbsm),
            TagCoupling::LegGain { .. } => Err(Error::Mode(
                "monostatic budget needs an RCS tag, got a leg-gain tag".into(),
            )),
        }
    }
}

/// Sounding reference signal layout seen by the BS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrsConfig {
    /// Sounded (occupied) bandwidth, Hz.
    pub bandwidth_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub comb_factor: usize,
    pub rx_antennas: usize,
    /// SRS symbols falling inside one ZED symbol.
    pub symbols_per_zed_symbol: usize,
}

impl SrsConfig {
    /// LTE layout for a channel bandwidth of 1.4, 3, 5, 10, 15 or 20 MHz:
    /// full-band sounding over the transmission bandwidth, comb 2, two BS
    /// antennas and two SRS symbols per ZED symbol.
    pub fn lte(channel_bandwidth_hz: f64) -> Result<Self> {
        let rb = lte_resource_blocks(channel_bandwidth_hz)?;
        Ok(SrsConfig {
            bandwidth_hz: rb as f64 * 12.0 * 15e3,
            subcarrier_spacing_hz: 15e3,
            comb_factor: 2,
            rx_antennas: 2,
            symbols_per_zed_symbol: 2,
        })
    }

    pub fn subcarriers(&self) -> Result<usize> {
        if !(self.bandwidth_hz > 0.0 && self.subcarrier_spacing_hz > 0.0) {
            return Err(Error::config(
                "SRS bandwidth and subcarrier spacing must be positive",
            ));
        }
        // Nudge before flooring so 599.99999... counts as 600.
        Ok((self.bandwidth_hz / self.subcarrier_spacing_hz + 1e-9).floor() as usize)
    }

    /// Pilot resource elements per SRS symbol per antenna.
    pub fn pilot_count(&self) -> Result<usize> {
        if self.comb_factor == 0 {
            return Err(Error::config("comb factor must be at least 1"));
        }
        let sc = self.subcarriers()?;
        if sc % self.comb_factor != 0 {
            return Err(Error::config(format!(
                "{sc} subcarriers are not divisible by comb factor {}",
                self.comb_factor
            )));
        }
        let pilots = sc / self.comb_factor;
        if pilots == 0 {
            return Err(Error::config("SRS layout has no pilot subcarriers"));
        }
        Ok(pilots)
    }

    /// Pilot resource elements combined per ZED symbol.
    pub fn combined_resources(&self) -> Result<usize> {
        if self.rx_antennas == 0 || self.symbols_per_zed_symbol == 0 {
            return Err(Error::config(
                "rx antennas and SRS symbols per ZED symbol must be at least 1",
            ));
        }
        Ok(self.pilot_count()? * self.rx_antennas * self.symbols_per_zed_symbol)
    }
}

/// Resource blocks in an LTE carrier of the given channel bandwidth.
pub fn lte_resource_blocks(channel_bandwidth_hz: f64) -> Result<usize> {
    const TABLE: [(f64, usize); 6] = [
        (1.4e6, 6),
        (3e6, 15),
        (5e6, 25),
        (10e6, 50),
        (15e6, 75),
        (20e6, 100),
    ];
    TABLE
        .iter()
        .find(|(bw, _)| (bw - channel_bandwidth_hz).abs() < 1.0)
        .map(|&(_, rb)| rb)
        .ok_or_else(|| {
            Error::config(format!(
                "{channel_bandwidth_hz} Hz is not an LTE channel bandwidth"
            ))
        })
}

/// SNR gain from coherently combining every pilot resource element of one ZED symbol.
pub fn processing_gain(cfg: &SrsConfig) -> Result<f64> {
    Ok(10.0 * (cfg.combined_resources()? as f64).log10())
}

/// Propagation settings shared by the UE-BS and ZED-BS legs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellularLink {
    pub carrier: Frequency,
    pub model: PathLossModel,
    pub validity: Validity,
    pub base_height_m: f64,
    pub mobile_height_m: f64,
}

impl CellularLink {
    pub fn new(carrier: Frequency) -> Self {
        CellularLink {
            carrier,
            model: PathLossModel::HataSuburban,
            validity: Validity::Extrapolate,
            base_height_m: HataGeometry::DEFAULT_BASE_HEIGHT,
            mobile_height_m: HataGeometry::DEFAULT_MOBILE_HEIGHT,
        }
    }

    fn geometry(&self, distance_km: f64) -> Result<HataGeometry> {
        HataGeometry::new(self.base_height_m, self.mobile_height_m, distance_km)
    }

    pub fn loss(&self, distance_km: f64) -> Result<f64> {
        self.model
            .loss(self.carrier, &self.geometry(distance_km)?, self.validity)
    }

    pub fn distance_for_loss(&self, loss_db: f64) -> Result<f64> {
        self.model.distance_for_loss(
            self.carrier,
            &self.geometry(1.0)?,
            self.validity,
            loss_db,
        )
    }
}

/// Outcome of BS-controlled UE power adjustment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerControl {
    pub tx_power_dbm: f64,
    /// True when the UE runs at its maximum power and misses the target.
    pub capped: bool,
}

/// Every leg of the bistatic SRS backscatter budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudgetBreakdown {
    pub carrier_hz: f64,
    pub d_ue_bs_km: f64,
    pub d_ue_zed_m: f64,
    pub tx_power_dbm: f64,
    pub power_capped: bool,
    pub ue_antenna_gain_dbi: f64,
    pub bs_antenna_gain_dbi: f64,
    pub noise_per_re_dbm: f64,
    pub direct_loss_db: f64,
    pub direct_rx_power_dbm: f64,
    pub per_re_snr_direct_db: f64,
    pub ue_zed_loss_db: f64,
    pub zed_leg_gain_dbi: f64,
    pub modulation_loss_db: f64,
    pub zed_bs_loss_db: f64,
    pub backscatter_rx_power_dbm: f64,
    pub per_re_snr_backscatter_db: f64,
    pub processing_gain_db: f64,
    pub effective_snr_db: f64,
    pub required_effective_snr_db: f64,
    pub margin_db: f64,
}

impl LinkBudgetBreakdown {
    /// Effective SNR rebuilt from the recorded legs alone.
    pub fn audit_effective_snr(&self) -> f64 {
        let rx = self.tx_power_dbm + self.ue_antenna_gain_dbi - self.ue_zed_loss_db
            + 2.0 * self.zed_leg_gain_dbi
            - self.modulation_loss_db
            - self.zed_bs_loss_db
            + self.bs_antenna_gain_dbi;
        rx - self.noise_per_re_dbm + self.processing_gain_db
    }

    /// Backscatter-to-direct received power ratio, dB.
    pub fn backscatter_to_direct_db(&self) -> f64 {
        self.backscatter_rx_power_dbm - self.direct_rx_power_dbm
    }
}

/// Result of the reading-distance search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum ReadingDistance {
    Reachable { distance_m: f64 },
    /// Margin is negative even with the tag in the UE's near field.
    Unreachable { shortfall_db: f64 },
}

impl ReadingDistance {
    pub fn meters(&self) -> Option<f64> {
        match *self {
            ReadingDistance::Reachable { distance_m } => Some(distance_m),
            ReadingDistance::Unreachable { .. } => None,
        }
    }

    /// Distance in meters, 0 when unreachable.
    pub fn meters_or_zero(&self) -> f64 {
        self.meters().unwrap_or(0.0)
    }
}

/// The SRS-illuminated uplink backscatter scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BistaticLink {
    pub link: CellularLink,
    pub bs: NodeProfile,
    pub ue: NodeProfile,
    pub zed: ZedProfile,
    pub srs: SrsConfig,
    /// SNR per resource element that BS power control aims for, dB.
    pub target_snr_db: f64,
    /// Replaces the SRS-derived processing gain when set.
    pub processing_gain_override_db: Option<f64>,
}

impl BistaticLink {
    pub const DEFAULT_TARGET_SNR_DB: f64 = 15.0;

    pub fn new(carrier: Frequency) -> Result<Self> {
        Ok(BistaticLink {
            link: CellularLink::new(carrier),
            bs: NodeProfile::default_bs(),
            ue: NodeProfile::default_ue(),
            zed: ZedProfile::default_sub6(),
            srs: SrsConfig::lte(10e6)?,
            target_snr_db: Self::DEFAULT_TARGET_SNR_DB,
            processing_gain_override_db: None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.bs.validate()?;
        self.ue.validate()?;
        self.zed.validate()?;
        self.zed.leg_gain()?;
        self.srs.combined_resources()?;
        Ok(())
    }

    /// Noise over one subcarrier at the BS, dBm.
    pub fn noise_per_re_dbm(&self) -> Result<f64> {
        noise_floor(self.srs.subcarrier_spacing_hz, self.bs.noise_figure_db)
    }

    pub fn processing_gain_db(&self) -> Result<f64> {
        match self.processing_gain_override_db {
            Some(g) => Ok(g),
            None => processing_gain(&self.srs),
        }
    }

    fn pair_gain(&self) -> f64 {
        self.ue.antenna_gain_dbi + self.bs.antenna_gain_dbi
    }

    pub fn ue_power_control(&self, d_ue_bs_km: f64) -> Result<PowerControl> {
        let loss = self.link.loss(d_ue_bs_km)?;
        let wanted = self.noise_per_re_dbm()? + self.target_snr_db + loss - self.pair_gain();
        Ok(if wanted > self.ue.tx_power_max_dbm {
            PowerControl {
                tx_power_dbm: self.ue.tx_power_max_dbm,
                capped: true,
            }
        } else {
            PowerControl {
                tx_power_dbm: wanted,
                capped: false,
            }
        })
    }

    /// Per-RE SNR of the UE's SRS at the BS after power control, dB.
    pub fn srs_snr_at_bs(&self, d_ue_bs_km: f64) -> Result<f64> {
        let pc = self.ue_power_control(d_ue_bs_km)?;
        if !pc.capped {
            return Ok(self.target_snr_db);
        }
        Ok(pc.tx_power_dbm + self.pair_gain() - self.link.loss(d_ue_bs_km)?
            - self.noise_per_re_dbm()?)
    }

    /// UE-BS distance (km) beyond which the UE is power limited.
    pub fn cap_distance_km(&self) -> Result<f64> {
        let loss = self.ue.tx_power_max_dbm + self.pair_gain()
            - self.noise_per_re_dbm()?
            - self.target_snr_db;
        self.link.distance_for_loss(loss)
    }

    /// Full budget with the ZED `d_ue_zed_m` from the UE and `d_ue_bs_km` from the BS.
    pub fn breakdown(&self, d_ue_bs_km: f64, d_ue_zed_m: f64) -> Result<LinkBudgetBreakdown> {
        let ue_zed_loss = free_space_path_loss(self.link.carrier, d_ue_zed_m)?;
        self.breakdown_with_leg_loss(d_ue_bs_km, d_ue_zed_m, ue_zed_loss)
    }

    /// Budget with the tag closer than the free-space model reaches; the
    /// UE-ZED loss is clamped at 0 dB.
    pub fn breakdown_clamped(
        &self,
        d_ue_bs_km: f64,
        d_ue_zed_m: f64,
    ) -> Result<LinkBudgetBreakdown> {
        if !(d_ue_zed_m >= 0.0) {
            return Err(Error::domain(format!(
                "UE-ZED distance must be non-negative, got {d_ue_zed_m}"
            )));
        }
        let loss = if d_ue_zed_m > 0.0 {
            free_space_path_loss(self.link.carrier, d_ue_zed_m)?.max(0.0)
        } else {
            0.0
        };
        self.breakdown_with_leg_loss(d_ue_bs_km, d_ue_zed_m, loss)
    }

    fn breakdown_with_leg_loss(
        &self,
        d_ue_bs_km: f64,
        d_ue_zed_m: f64,
        ue_zed_loss: f64,
    ) -> Result<LinkBudgetBreakdown> {
        let leg_gain = self.zed.leg_gain()?;
        let pc = self.ue_power_control(d_ue_bs_km)?;
        let noise = self.noise_per_re_dbm()?;
        let direct_loss = self.link.loss(d_ue_bs_km)?;
        // Equidistant geometry: the ZED-BS leg has the UE-BS length.
        let zed_bs_loss = direct_loss;
        let direct_rx = pc.tx_power_dbm + self.pair_gain() - direct_loss;
        let per_re_snr_direct = if pc.capped {
            direct_rx - noise
        } else {
            self.target_snr_db
        };
        let backscatter_rx = pc.tx_power_dbm + self.ue.antenna_gain_dbi - ue_zed_loss
            + 2.0 * leg_gain
            - self.zed.modulation_loss_db
            - zed_bs_loss
            + self.bs.antenna_gain_dbi;
        let per_re_snr_backscatter = backscatter_rx - noise;
        let gp = self.processing_gain_db()?;
        let effective = per_re_snr_backscatter + gp;
        Ok(LinkBudgetBreakdown {
            carrier_hz: self.link.carrier.hz(),
            d_ue_bs_km,
            d_ue_zed_m,
            tx_power_dbm: pc.tx_power_dbm,
            power_capped: pc.capped,
            ue_antenna_gain_dbi: self.ue.antenna_gain_dbi,
            bs_antenna_gain_dbi: self.bs.antenna_gain_dbi,
            noise_per_re_dbm: noise,
            direct_loss_db: direct_loss,
            direct_rx_power_dbm: direct_rx,
            per_re_snr_direct_db: per_re_snr_direct,
            ue_zed_loss_db: ue_zed_loss,
            zed_leg_gain_dbi: leg_gain,
            modulation_loss_db: self.zed.modulation_loss_db,
            zed_bs_loss_db: zed_bs_loss,
            backscatter_rx_power_dbm: backscatter_rx,
            per_re_snr_backscatter_db: per_re_snr_backscatter,
            processing_gain_db: gp,
            effective_snr_db: effective,
            required_effective_snr_db: self.zed.required_effective_snr_db,
            margin_db: effective - self.zed.required_effective_snr_db,
        })
    }

    /// Largest UE-ZED separation with non-negative margin.
    ///
    /// The margin is affine in the UE-ZED free-space loss, so the loss budget
    /// is read off a zero-loss evaluation and inverted directly.
    pub fn max_reading_distance(&self, d_ue_bs_km: f64) -> Result<ReadingDistance> {
        let at_zero = self.breakdown_with_leg_loss(d_ue_bs_km, 0.0, 0.0)?;
        let loss_budget = at_zero.margin_db;
        if loss_budget < 0.0 {
            return Ok(ReadingDistance::Unreachable {
                shortfall_db: -loss_budget,
            });
        }
        Ok(ReadingDistance::Reachable {
            distance_m: free_space_distance(self.link.carrier, loss_budget),
        })
    }
}

/// Receiver sensitivity: noise floor plus the SNR requirement, dBm.
pub fn monostatic_receiver_threshold(
    bandwidth_hz: f64,
    noise_figure_db: f64,
    snr_req_db: f64,
) -> Result<f64> {
    Ok(noise_floor(bandwidth_hz, noise_figure_db)? + snr_req_db)
}

/// Co-located reader illuminating an RCS tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonostaticLink {
    pub carrier: Frequency,
    pub eirp_dbm: f64,
    pub reader_rx_gain_dbi: f64,
    pub zed: ZedProfile,
}

impl MonostaticLink {
    pub const DEFAULT_RX_GAIN_DBI: f64 = 25.0;

    pub fn received_power_dbm(&self, distance_m: f64) -> Result<f64> {
        let rcs = self.zed.rcs()?;
        let loss = radar_backscatter_loss(
            self.carrier,
            &RadarGeometry {
                distance_m,
                rcs_dbsm: rcs,
            },
        )?;
        Ok(self.eirp_dbm + self.reader_rx_gain_dbi - loss - self.zed.modulation_loss_db)
    }

    /// Largest range at which the tag return reaches `threshold_dbm`.
    pub fn max_range(&self, threshold_dbm: f64) -> Result<f64> {
        let rcs = self.zed.rcs()?;
        let loss_budget =
            self.eirp_dbm + self.reader_rx_gain_dbi - self.zed.modulation_loss_db - threshold_dbm;
        Ok(radar_distance_for_loss(self.carrier, rcs, loss_budget))
    }
}

/// Shorthand for [`MonostaticLink::max_range`].
pub fn monostatic_max_range(
    eirp_dbm: f64,
    reader_rx_gain_dbi: f64,
    carrier: Frequency,
    zed: &ZedProfile,
    threshold_dbm: f64,
) -> Result<f64> {
    MonostaticLink {
        carrier,
        eirp_dbm,
        reader_rx_gain_dbi,
        zed: *zed,
    }
    .max_range(threshold_dbm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn link(mhz: f64) -> BistaticLink {
        BistaticLink::new(Frequency::from_mhz(mhz).unwrap()).unwrap()
    }

    // Bisection on the Hata loss, no closed-form inverse involved.
    fn hata_inverse_bisect(l: &BistaticLink, loss: f64) -> f64 {
        let (mut lo, mut hi) = (1e-3, 1e3);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if l.link.loss(mid).unwrap() < loss {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn node_profile_invariants() {
        assert!(NodeProfile::new(NodeRole::Ue, 24.0, 0.0, 7.0, 1.5).is_err());
        assert!(NodeProfile::new(NodeRole::Bs, 46.0, 0.0, -1.0, 30.0).is_err());
        assert!(NodeProfile::new(NodeRole::Reader, 75.0, 25.0, 7.0, 10.0).is_ok());
    }

    #[test]
    fn power_control_uncapped_hits_target() {
        let l = link(768.0);
        let noise = l.noise_per_re_dbm().unwrap();
        assert_abs_diff_eq!(noise, -127.24, epsilon = 0.005);
        // Pick the distance at which the Hata loss is 100 dB.
        let d = l.link.distance_for_loss(100.0).unwrap();
        let pc = l.ue_power_control(d).unwrap();
        assert!(!pc.capped);
        assert_abs_diff_eq!(pc.tx_power_dbm, noise + 15.0 + 100.0, epsilon = 1e-9);
        assert_abs_diff_eq!(pc.tx_power_dbm, -12.24, epsilon = 0.01);
        assert_eq!(l.srs_snr_at_bs(d).unwrap(), 15.0);
    }

    #[test]
    fn cap_distance_matches_bisection() {
        let l = link(768.0);
        let loss = 23.0 - l.noise_per_re_dbm().unwrap() - 15.0;
        assert_abs_diff_eq!(loss, 135.24, epsilon = 0.005);
        let oracle = hata_inverse_bisect(&l, loss);
        let cap = l.cap_distance_km().unwrap();
        assert_abs_diff_eq!(cap, oracle, epsilon = 1e-6);
        assert_abs_diff_eq!(cap, 3.74, epsilon = 0.01);
        let beyond = l.ue_power_control(cap * 1.01).unwrap();
        assert!(beyond.capped);
        assert_eq!(beyond.tx_power_dbm, 23.0);
        assert!(!l.ue_power_control(cap * 0.99).unwrap().capped);
    }

    #[test]
    fn srs_snr_beyond_cap() {
        let l = link(768.0);
        let cap = l.cap_distance_km().unwrap();
        let snr = l.srs_snr_at_bs(2.0 * cap).unwrap();
        let slope = 44.9 - 6.55 * 30f64.log10();
        assert_abs_diff_eq!(snr, 15.0 - slope * 2f64.log10(), epsilon = 1e-6);
        assert_abs_diff_eq!(snr, 4.4, epsilon = 0.01);
    }

    #[test]
    fn processing_gain_lte_presets() {
        let ten = SrsConfig::lte(10e6).unwrap();
        assert_eq!(ten.pilot_count().unwrap(), 300);
        assert_eq!(ten.combined_resources().unwrap(), 1200);
        assert_abs_diff_eq!(processing_gain(&ten).unwrap(), 30.79, epsilon = 0.005);
        let twenty = SrsConfig::lte(20e6).unwrap();
        assert_eq!(twenty.combined_resources().unwrap(), 2400);
        assert_abs_diff_eq!(processing_gain(&twenty).unwrap(), 33.80, epsilon = 0.005);
        let single = SrsConfig {
            bandwidth_hz: 15e3,
            subcarrier_spacing_hz: 15e3,
            comb_factor: 1,
            rx_antennas: 1,
            symbols_per_zed_symbol: 1,
        };
        assert_eq!(processing_gain(&single).unwrap(), 0.0);
    }

    #[test]
    fn processing_gain_rejects_empty_layouts() {
        let mut cfg = SrsConfig::lte(10e6).unwrap();
        cfg.bandwidth_hz = 10e3;
        assert!(matches!(processing_gain(&cfg), Err(Error::Config(_))));
        cfg.bandwidth_hz = 9e6;
        cfg.comb_factor = 0;
        assert!(processing_gain(&cfg).is_err());
        cfg.comb_factor = 7;
        assert!(processing_gain(&cfg).is_err());
        assert!(SrsConfig::lte(7e6).is_err());
    }

    #[test]
    fn bistatic_chain_arithmetic() {
        let mut l = link(768.0);
        l.processing_gain_override_db = Some(31.0);
        let d_bs = 1.0;
        assert_eq!(l.srs_snr_at_bs(d_bs).unwrap(), 15.0);
        let d_zed = free_space_distance(l.link.carrier, 38.5);
        let b = l.breakdown(d_bs, d_zed).unwrap();
        assert_abs_diff_eq!(b.ue_zed_loss_db, 38.5, epsilon = 1e-9);
        assert_abs_diff_eq!(b.effective_snr_db, 1.5, epsilon = 1e-9);
        assert_abs_diff_eq!(b.margin_db, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn bistatic_identity_chain() {
        let mut l = link(450.0);
        l.processing_gain_override_db = Some(0.0);
        l.zed.modulation_loss_db = 0.0;
        let d_zed = free_space_distance(l.link.carrier, 0.0);
        let b = l.breakdown(2.0, d_zed).unwrap();
        assert_abs_diff_eq!(b.effective_snr_db, b.per_re_snr_direct_db, epsilon = 1e-9);
    }

    #[test]
    fn bistatic_rejects_rcs_tag() {
        let mut l = link(768.0);
        l.zed = ZedProfile::default_mmwave();
        assert!(matches!(l.breakdown(1.0, 1.0), Err(Error::Mode(_))));
        assert!(l.validate().is_err());
    }

    #[test]
    fn reading_distances_by_carrier() {
        let d: Vec<f64> = [450.0, 768.0, 1920.0]
            .iter()
            .map(|&f| {
                link(f)
                    .max_reading_distance(1.0)
                    .unwrap()
                    .meters()
                    .unwrap()
            })
            .collect();
        assert!(d[0] > d[1] && d[1] > d[2]);
        assert_abs_diff_eq!(d[1], 2.6, epsilon = 0.1);
        assert_abs_diff_eq!(d[0], 4.5, epsilon = 0.2);
        assert_abs_diff_eq!(d[2], 1.0, epsilon = 0.1);
        for x in d {
            assert!((0.5..=10.0).contains(&x));
        }
    }

    #[test]
    fn unreachable_is_a_value() {
        let mut l = link(768.0);
        l.zed.required_effective_snr_db = 80.0;
        let r = l.max_reading_distance(1.0).unwrap();
        assert!(matches!(r, ReadingDistance::Unreachable { .. }));
        assert_eq!(r.meters_or_zero(), 0.0);
    }

    #[test]
    fn receiver_threshold() {
        assert_eq!(monostatic_receiver_threshold(100e6, 7.0, 5.0).unwrap(), -82.0);
        assert_eq!(monostatic_receiver_threshold(100e6, 7.0, 0.0).unwrap(), -87.0);
        let a = monostatic_receiver_threshold(100e6, 7.0, 5.0).unwrap();
        let b = monostatic_receiver_threshold(100e6, 7.0, 8.5).unwrap();
        assert_abs_diff_eq!(b - a, 3.5, epsilon = 1e-12);
        assert!(monostatic_receiver_threshold(-1.0, 7.0, 5.0).is_err());
    }

    fn mmwave() -> MonostaticLink {
        MonostaticLink {
            carrier: Frequency::from_hz(28e9).unwrap(),
            eirp_dbm: 75.0,
            reader_rx_gain_dbi: 25.0,
            zed: ZedProfile::default_mmwave(),
        }
    }

    #[test]
    fn monostatic_range_reference() {
        let m = mmwave();
        let r = m.max_range(-82.0).unwrap();
        assert!(r > 100.0);
        assert_abs_diff_eq!(r, 219.0, epsilon = 1.0);
        assert_abs_diff_eq!(m.received_power_dbm(r).unwrap(), -82.0, epsilon = 1e-9);
        let r12 = m.max_range(-70.0).unwrap();
        assert_abs_diff_eq!(r12 / r, 10f64.powf(-12.0 / 40.0), epsilon = 1e-12);
    }

    #[test]
    fn monostatic_boundary_construction() {
        let mut m = mmwave();
        let p100 = m.received_power_dbm(100.0).unwrap();
        m.reader_rx_gain_dbi += -82.0 - p100;
        assert_abs_diff_eq!(m.max_range(-82.0).unwrap(), 100.0, epsilon = 1e-9);
    }

    #[test]
    fn monostatic_rejects_leg_gain_tag() {
        let mut m = mmwave();
        m.zed = ZedProfile::default_sub6();
        assert!(matches!(m.max_range(-82.0), Err(Error::Mode(_))));
    }

    proptest! {
        #[test]
        fn breakdown_audit_and_root(
            f_mhz in 300.0f64..2000.0,
            d_bs in 0.05f64..8.0,
            lmod in 0.0f64..12.0,
            leg in -3.0f64..6.0,
        ) {
            let mut l = link(f_mhz);
            l.zed.modulation_loss_db = lmod;
            l.zed.coupling = TagCoupling::LegGain { leg_antenna_gain_dbi: leg };
            let b = l.breakdown(d_bs, 1.7).unwrap();
            prop_assert!((b.audit_effective_snr() - b.effective_snr_db).abs() < 1e-9);
            if let ReadingDistance::Reachable { distance_m } = l.max_reading_distance(d_bs).unwrap() {
                let m = l.breakdown(d_bs, distance_m).unwrap().margin_db;
                prop_assert!(m.abs() <= 1e-6);
            }
        }

        #[test]
        fn reading_distance_monotone(f_mhz in 300.0f64..2000.0, d1 in 0.05f64..10.0, d2 in 0.05f64..10.0) {
            let l = link(f_mhz);
            let (near, far) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
            let rn = l.max_reading_distance(near).unwrap().meters_or_zero();
            let rf = l.max_reading_distance(far).unwrap().meters_or_zero();
            prop_assert!(rf <= rn + 1e-12);
            let hi = link(f_mhz * 1.1).max_reading_distance(near).unwrap().meters_or_zero();
            prop_assert!(hi <= rn + 1e-12);
        }

        #[test]
        fn srs_snr_non_increasing(d1 in 0.05f64..20.0, d2 in 0.05f64..20.0) {
            let l = link(768.0);
            let (near, far) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
            prop_assert!(l.srs_snr_at_bs(far).unwrap() <= l.srs_snr_at_bs(near).unwrap());
        }

        #[test]
        fn effective_snr_decreasing_in_tag_distance(d1 in 0.1f64..20.0, d2 in 0.1f64..20.0) {
            prop_assume!((d1 - d2).abs() > 1e-6);
            let l = link(768.0);
            let (near, far) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
            prop_assert!(l.breakdown(1.0, far).unwrap().effective_snr_db < l.breakdown(1.0, near).unwrap().effective_snr_db);
        }
    }
}
