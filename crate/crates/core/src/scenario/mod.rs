//! Scenario files, bundled presets, sweeps and CSV output.
//!
//! A scenario is a TOML (or JSON) document with one table per subsystem.
//! Only `carrier.frequency_hz` is required; everything else has a default.
//! Unknown keys are rejected.

mod csv_out;
mod presets;
mod sweep;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub use csv_out::{emit_csv, read_csv, write_csv, Field, Record};
pub use presets::{preset_source, PRESET_NAMES};
pub use sweep::{
    evaluate, run_sweep, write_psd_csv, write_sidebands_csv, RangeSpec, Scale, SweepSpec, Target,
};

use crate::error::{Error, Result};
use crate::linkbudget::{
    lte_resource_blocks, monostatic_receiver_threshold, BistaticLink, CellularLink,
    MonostaticLink, NodeProfile, NodeRole, SrsConfig, TagCoupling, ZedProfile,
};
use crate::phy::{BerScenario, Coding, FrameLayout, PsdScenario, TagParams};
use crate::positioning::{Arena, SensingModel, Weighting, ZedDeployment};
use crate::propagation::{Frequency, PathLossModel, Validity};
use crate::protocol::{AccessScenario, GridDescription, PlanMode, RateProfile};
use crate::stats::trial_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkMode {
    #[default]
    Bistatic,
    Monostatic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarrierSection {
    pub frequency_hz: f64,
    #[serde(default)]
    pub path_loss_model: PathLossModel,
    #[serde(default)]
    pub validity: Validity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SrsSection {
    /// LTE channel bandwidth; the sounded band is its resource blocks.
    pub channel_bandwidth_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub comb_factor: usize,
    pub rx_antennas: usize,
    pub symbols_per_zed_symbol: usize,
}

impl Default for SrsSection {
    fn default() -> Self {
        SrsSection {
            channel_bandwidth_hz: 10e6,
            subcarrier_spacing_hz: 15e3,
            comb_factor: 2,
            rx_antennas: 2,
            symbols_per_zed_symbol: 2,
        }
    }
}

impl SrsSection {
    pub fn config(&self) -> Result<SrsConfig> {
        let rb = lte_resource_blocks(self.channel_bandwidth_hz)?;
        Ok(SrsConfig {
            bandwidth_hz: rb as f64 * 12.0 * self.subcarrier_spacing_hz,
            subcarrier_spacing_hz: self.subcarrier_spacing_hz,
            comb_factor: self.comb_factor,
            rx_antennas: self.rx_antennas,
            symbols_per_zed_symbol: self.symbols_per_zed_symbol,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BsSection {
    pub tx_power_max_dbm: f64,
    pub antenna_gain_dbi: f64,
    pub noise_figure_db: f64,
    pub height_m: f64,
}

impl Default for BsSection {
    fn default() -> Self {
        let p = NodeProfile::default_bs();
        BsSection {
            tx_power_max_dbm: p.tx_power_max_dbm,
            antenna_gain_dbi: p.antenna_gain_dbi,
            noise_figure_db: p.noise_figure_db,
            height_m: p.height_m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UeSection {
    pub tx_power_max_dbm: f64,
    pub antenna_gain_dbi: f64,
    pub noise_figure_db: f64,
    pub height_m: f64,
}

impl Default for UeSection {
    fn default() -> Self {
        let p = NodeProfile::default_ue();
        UeSection {
            tx_power_max_dbm: p.tx_power_max_dbm,
            antenna_gain_dbi: p.antenna_gain_dbi,
            noise_figure_db: p.noise_figure_db,
            height_m: p.height_m,
        }
    }
}

/// Tag parameters. Leg gain applies to bistatic scenarios, RCS to monostatic ones.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZedSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modulation_loss_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub required_effective_snr_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leg_antenna_gain_dbi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rcs_dbsm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BistaticSection {
    pub target_snr_db: f64,
    pub d_ue_bs_km: f64,
    pub d_ue_zed_m: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub processing_gain_override_db: Option<f64>,
}

impl Default for BistaticSection {
    fn default() -> Self {
        BistaticSection {
            target_snr_db: BistaticLink::DEFAULT_TARGET_SNR_DB,
            d_ue_bs_km: 1.0,
            d_ue_zed_m: 2.0,
            processing_gain_override_db: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonostaticSection {
    pub eirp_dbm: f64,
    pub rx_gain_dbi: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    pub distance_m: f64,
}

impl Default for MonostaticSection {
    fn default() -> Self {
        MonostaticSection {
            eirp_dbm: 75.0,
            rx_gain_dbi: MonostaticLink::DEFAULT_RX_GAIN_DBI,
            bandwidth_hz: 100e6,
            noise_figure_db: 7.0,
            distance_m: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhySection {
    pub bandwidth_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub comb_factor: usize,
    pub rx_antennas: usize,
    pub occasions_per_symbol: usize,
    pub symbol_rate_hz: f64,
    pub f0_hz: f64,
    pub f1_hz: f64,
    pub coding: Coding,
    pub bits_per_trial: usize,
    pub trials: u64,
    /// Combined per-symbol SNR; taken from the bistatic budget when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub effective_snr_db: Option<f64>,
    /// Per-RE direct-path SNR used when `effective_snr_db` is set.
    pub direct_snr_db: f64,
    pub psd_resolution_hz: f64,
    pub psd_symbols: usize,
    pub psd_modulated: bool,
    pub psd_backscatter_gain_db: f64,
    pub psd_direct_snr_db: f64,
}

impl Default for PhySection {
    fn default() -> Self {
        PhySection {
            bandwidth_hz: 180e3,
            subcarrier_spacing_hz: 15e3,
            comb_factor: 2,
            rx_antennas: 1,
            occasions_per_symbol: 40,
            symbol_rate_hz: 100.0,
            f0_hz: 200.0,
            f1_hz: 400.0,
            coding: Coding::None,
            bits_per_trial: 100,
            trials: 1000,
            effective_snr_db: None,
            direct_snr_db: 0.0,
            psd_resolution_hz: 25.0,
            psd_symbols: 20,
            psd_modulated: true,
            psd_backscatter_gain_db: -20.0,
            psd_direct_snr_db: 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolSection {
    pub plan_mode: PlanMode,
    pub downlink_blocks: usize,
    pub uplink_blocks: usize,
    pub tag_count: u64,
    pub slots: u64,
    pub offered_load: f64,
    pub symbol_rate_hz: f64,
    pub modulation_order: u32,
    pub code_rate: f64,
    pub fdma_total_bandwidth_hz: f64,
    pub fdma_subchannel_hz: f64,
    pub fdma_guard_hz: f64,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        let r = RateProfile::ambient();
        ProtocolSection {
            plan_mode: PlanMode::Inband,
            downlink_blocks: 25,
            uplink_blocks: 25,
            tag_count: 10_000,
            slots: 200_000,
            offered_load: 1.0,
            symbol_rate_hz: r.symbol_rate_hz,
            modulation_order: r.modulation_order,
            code_rate: r.code_rate,
            fdma_total_bandwidth_hz: 180e3,
            fdma_subchannel_hz: 1.8e3,
            fdma_guard_hz: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeploymentKind {
    #[default]
    Grid,
    Poisson,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PositioningSection {
    pub arena_width_m: f64,
    pub arena_height_m: f64,
    pub deployment: DeploymentKind,
    pub grid_spacing_m: f64,
    pub density_per_m2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deployment_file: Option<PathBuf>,
    pub weighting: Weighting,
    pub trials: u64,
    pub power_jitter_db: f64,
}

impl Default for PositioningSection {
    fn default() -> Self {
        PositioningSection {
            arena_width_m: 50.0,
            arena_height_m: 50.0,
            deployment: DeploymentKind::Grid,
            grid_spacing_m: 5.0,
            density_per_m2: 0.05,
            deployment_file: None,
            weighting: Weighting::Power,
            trials: 10_000,
            power_jitter_db: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: LinkMode,
    pub carrier: CarrierSection,
    #[serde(default)]
    pub srs: SrsSection,
    #[serde(default)]
    pub bs: BsSection,
    #[serde(default)]
    pub ue: UeSection,
    #[serde(default)]
    pub zed: ZedSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bistatic: Option<BistaticSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monostatic: Option<MonostaticSection>,
    #[serde(default)]
    pub phy: PhySection,
    #[serde(default)]
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub positioning: PositioningSection,
}

fn default_name() -> String {
    "unnamed".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

impl Format {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Toml,
        }
    }
}

/// Turns a serde error into one that names the full dotted key.
fn located<E: std::fmt::Display>(err: serde_path_to_error::Error<E>) -> Error {
    let path = err.path().to_string();
    let inner = err.inner().to_string();
    if let Some(rest) = inner.split("missing field `").nth(1) {
        let field = rest.split('`').next().unwrap_or("");
        let key = if path == "." || path.is_empty() {
            field.to_string()
        } else {
            format!("{path}.{field}")
        };
        return Error::config(format!("missing required key `{key}`\n{}", inner.trim_end()));
    }
    if path == "." || path.is_empty() {
        Error::config(inner.trim_end().to_string())
    } else {
        Error::config(format!("at `{path}`: {}", inner.trim_end()))
    }
}

impl Scenario {
    /// Parses, fills defaults and validates.
    pub fn parse_str(text: &str, format: Format) -> Result<Self> {
        let raw: Scenario = match format {
            Format::Toml => {
                let de = toml::Deserializer::parse(text).map_err(|e| Error::config(e.to_string()))?;
                serde_path_to_error::deserialize(de).map_err(located)?
            }
            Format::Json => {
                let mut de = serde_json::Deserializer::from_str(text);
                let s = serde_path_to_error::deserialize(&mut de).map_err(located)?;
                de.end().map_err(|e| Error::config(e.to_string()))?;
                s
            }
        };
        raw.resolve()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text, Format::from_path(path)).map_err(|e| match e {
            Error::Config(msg) => Error::config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_preset(name: &str) -> Result<Self> {
        let text = preset_source(name).ok_or_else(|| {
            Error::config(format!(
                "unknown preset {name:?}; available: {}",
                PRESET_NAMES.join(", ")
            ))
        })?;
        Self::parse_str(text, Format::Toml)
    }

    /// Rejects fields that do not belong to the chosen mode, then fills
    /// every mode-dependent default so the result echoes completely.
    fn resolve(mut self) -> Result<Self> {
        match self.mode {
            LinkMode::Bistatic => {
                if self.monostatic.is_some() {
                    return Err(Error::config("[monostatic] section given in a bistatic scenario"));
                }
                if self.zed.rcs_dbsm.is_some() {
                    return Err(Error::config("zed.rcs_dbsm only applies to monostatic scenarios"));
                }
                let d = ZedProfile::default_sub6();
                self.zed.leg_antenna_gain_dbi.get_or_insert(0.0);
                self.zed.required_effective_snr_db.get_or_insert(d.required_effective_snr_db);
                self.zed.modulation_loss_db.get_or_insert(d.modulation_loss_db);
                self.bistatic.get_or_insert_with(BistaticSection::default);
            }
            LinkMode::Monostatic => {
                if self.bistatic.is_some() {
                    return Err(Error::config("[bistatic] section given in a monostatic scenario"));
                }
                if self.zed.leg_antenna_gain_dbi.is_some() {
                    return Err(Error::config(
                        "zed.leg_antenna_gain_dbi only applies to bistatic scenarios",
                    ));
                }
                let d = ZedProfile::default_mmwave();
                if let TagCoupling::RadarCrossSection { rcs_dbsm } = d.coupling {
                    self.zed.rcs_dbsm.get_or_insert(rcs_dbsm);
                }
                self.zed.required_effective_snr_db.get_or_insert(d.required_effective_snr_db);
                self.zed.modulation_loss_db.get_or_insert(d.modulation_loss_db);
                self.monostatic.get_or_insert_with(MonostaticSection::default);
            }
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        self.carrier()?;
        match self.mode {
            LinkMode::Bistatic => self.bistatic_link()?.validate()?,
            LinkMode::Monostatic => {
                self.monostatic_link()?;
            }
        }
        self.phy_layout()?.validate()?;
        self.tag()?.validate(self.phy.subcarrier_spacing_hz)?;
        if self.phy.bits_per_trial == 0 || self.phy.trials == 0 {
            return Err(Error::config("phy.bits_per_trial and phy.trials must be at least 1"));
        }
        let p = &self.positioning;
        Arena {
            width_m: p.arena_width_m,
            height_m: p.arena_height_m,
        }
        .validate()?;
        if p.deployment == DeploymentKind::File && p.deployment_file.is_none() {
            return Err(Error::config(
                "missing required key `positioning.deployment_file` for a file deployment",
            ));
        }
        Ok(())
    }

    pub fn carrier(&self) -> Result<Frequency> {
        Frequency::from_hz(self.carrier.frequency_hz).map_err(|e| match e {
            Error::Domain(m) => Error::config(format!("carrier.frequency_hz: {m}")),
            other => other,
        })
    }

    fn zed_profile(&self) -> ZedProfile {
        let coupling = match self.mode {
            LinkMode::Bistatic => TagCoupling::LegGain {
                leg_antenna_gain_dbi: self.zed.leg_antenna_gain_dbi.unwrap_or(0.0),
            },
            LinkMode::Monostatic => TagCoupling::RadarCrossSection {
                rcs_dbsm: self.zed.rcs_dbsm.unwrap_or(-10.0),
            },
        };
        ZedProfile {
            modulation_loss_db: self.zed.modulation_loss_db.unwrap_or(6.0),
            coupling,
            required_effective_snr_db: self.zed.required_effective_snr_db.unwrap_or(0.0),
        }
    }

    pub fn bistatic_section(&self) -> Result<&BistaticSection> {
        self.bistatic
            .as_ref()
            .ok_or_else(|| Error::Mode("scenario is monostatic; a bistatic run was requested".into()))
    }

    pub fn monostatic_section(&self) -> Result<&MonostaticSection> {
        self.monostatic
            .as_ref()
            .ok_or_else(|| Error::Mode("scenario is bistatic; a monostatic run was requested".into()))
    }

    pub fn bistatic_link(&self) -> Result<BistaticLink> {
        let b = self.bistatic_section()?;
        let mut link = CellularLink::new(self.carrier()?);
        link.model = self.carrier.path_loss_model;
        link.validity = self.carrier.validity;
        link.base_height_m = self.bs.height_m;
        link.mobile_height_m = self.ue.height_m;
        let bs = NodeProfile::new(
            NodeRole::Bs,
            self.bs.tx_power_max_dbm,
            self.bs.antenna_gain_dbi,
            self.bs.noise_figure_db,
            self.bs.height_m,
        )?;
        let ue = NodeProfile::new(
            NodeRole::Ue,
            self.ue.tx_power_max_dbm,
            self.ue.antenna_gain_dbi,
            self.ue.noise_figure_db,
            self.ue.height_m,
        )?;
        Ok(BistaticLink {
            link,
            bs,
            ue,
            zed: self.zed_profile(),
            srs: self.srs.config()?,
            target_snr_db: b.target_snr_db,
            processing_gain_override_db: b.processing_gain_override_db,
        })
    }

    /// Reader link and its receive threshold, dBm.
    pub fn monostatic_link(&self) -> Result<(MonostaticLink, f64)> {
        let m = self.monostatic_section()?;
        let zed = self.zed_profile();
        zed.validate()?;
        let threshold = monostatic_receiver_threshold(
            m.bandwidth_hz,
            m.noise_figure_db,
            zed.required_effective_snr_db,
        )?;
        Ok((
            MonostaticLink {
                carrier: self.carrier()?,
                eirp_dbm: m.eirp_dbm,
                reader_rx_gain_dbi: m.rx_gain_dbi,
                zed,
            },
            threshold,
        ))
    }

    pub fn phy_layout(&self) -> Result<FrameLayout> {
        let p = &self.phy;
        let layout = FrameLayout {
            srs: SrsConfig {
                bandwidth_hz: p.bandwidth_hz,
                subcarrier_spacing_hz: p.subcarrier_spacing_hz,
                comb_factor: p.comb_factor,
                rx_antennas: p.rx_antennas,
                symbols_per_zed_symbol: 1,
            },
            occasions_per_symbol: p.occasions_per_symbol,
            symbol_rate_hz: p.symbol_rate_hz,
        };
        layout.validate()?;
        Ok(layout)
    }

    pub fn tag(&self) -> Result<TagParams> {
        Ok(TagParams {
            amplitude: TagParams::amplitude_for_modulation_loss(
                self.zed.modulation_loss_db.unwrap_or(6.0),
            ),
            f0_hz: self.phy.f0_hz,
            f1_hz: self.phy.f1_hz,
            symbol_rate_hz: self.phy.symbol_rate_hz,
        })
    }

    /// BER experiment at the configured SNR, or at the bistatic budget's
    /// effective SNR when none is configured.
    pub fn ber_scenario(&self) -> Result<BerScenario> {
        let layout = self.phy_layout()?;
        let tag = self.tag()?;
        let s = match self.phy.effective_snr_db {
            Some(gamma) => BerScenario {
                layout,
                tag,
                direct_snr_db: self.phy.direct_snr_db,
                backscatter_gain_db: -10.0,
                bits_per_trial: self.phy.bits_per_trial,
                coding: self.phy.coding,
            }
            .with_effective_snr(gamma)?,
            None => {
                let b = self.bistatic_section()?;
                let breakdown = self.bistatic_link()?.breakdown_clamped(b.d_ue_bs_km, b.d_ue_zed_m)?;
                BerScenario::from_breakdown(
                    &breakdown,
                    layout,
                    tag,
                    self.phy.bits_per_trial,
                    self.phy.coding,
                )?
            }
        };
        s.validate()?;
        Ok(s)
    }

    pub fn psd_scenario(&self) -> Result<PsdScenario> {
        let mut s = PsdScenario::tone(self.phy_layout()?, self.tag()?, self.phy.psd_symbols);
        s.modulated = self.phy.psd_modulated;
        s.backscatter_gain_db = self.phy.psd_backscatter_gain_db;
        s.direct_snr_db = self.phy.psd_direct_snr_db;
        s.resolution_hz = self.phy.psd_resolution_hz;
        Ok(s)
    }

    pub fn access_scenario(&self) -> AccessScenario {
        AccessScenario {
            tag_count: self.protocol.tag_count,
            slots: self.protocol.slots,
            offered_load: self.protocol.offered_load,
        }
    }

    pub fn rate_profile(&self) -> RateProfile {
        RateProfile {
            symbol_rate_hz: self.protocol.symbol_rate_hz,
            modulation_order: self.protocol.modulation_order,
            code_rate: self.protocol.code_rate,
        }
    }

    pub fn grid_description(&self) -> GridDescription {
        GridDescription {
            downlink_blocks: self.protocol.downlink_blocks,
            uplink_blocks: self.protocol.uplink_blocks,
        }
    }

    pub fn arena(&self) -> Arena {
        Arena {
            width_m: self.positioning.arena_width_m,
            height_m: self.positioning.arena_height_m,
        }
    }

    pub fn sensing_model(&self) -> Result<SensingModel> {
        let b = self.bistatic_section()?;
        let mut m = SensingModel::new(self.bistatic_link()?, b.d_ue_bs_km);
        m.power_jitter_db = self.positioning.power_jitter_db;
        Ok(m)
    }

    pub fn deployment(&self, seed: u64) -> Result<ZedDeployment> {
        let p = &self.positioning;
        match p.deployment {
            DeploymentKind::Grid => ZedDeployment::grid(&self.arena(), p.grid_spacing_m, "zed"),
            DeploymentKind::Poisson => {
                let mut rng = trial_rng(seed, u64::MAX);
                ZedDeployment::poisson(&self.arena(), p.density_per_m2, "zed", &mut rng)
            }
            DeploymentKind::File => {
                let path = p.deployment_file.as_deref().ok_or_else(|| {
                    Error::config("missing required key `positioning.deployment_file`")
                })?;
                ZedDeployment::read_csv(path)
            }
        }
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("scenario serialises to JSON")
    }

    fn from_json(v: Value) -> Result<Self> {
        let s: Scenario = serde_path_to_error::deserialize(v).map_err(located)?;
        s.resolve()
    }

    /// Resolved scenario as TOML, defaults included.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serialises to TOML")
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("scenario serialises to JSON");
        let digest = Sha256::digest(canonical.as_bytes());
        hex::encode(&digest[..8])
    }

    /// Copy with the dotted `path` set to `value`, re-validated.
    pub fn with_value(&self, path: &str, value: Value) -> Result<Self> {
        let mut tree = self.to_json();
        set_path(&mut tree, path, value)?;
        Self::from_json(tree)
    }

    /// Copy with the numeric field at `path` set to `x`.
    pub fn with_number(&self, path: &str, x: f64) -> Result<Self> {
        let value = if x.fract() == 0.0 && x.abs() < 9.0e15 {
            if x >= 0.0 {
                Value::from(x as u64)
            } else {
                Value::from(x as i64)
            }
        } else {
            serde_json::Number::from_f64(x)
                .map(Value::Number)
                .ok_or_else(|| Error::domain(format!("{x} cannot be stored in a scenario")))?
        };
        let out = self.with_value(path, value).map_err(|e| match e {
            Error::Config(m) => Error::config(format!("`{path}` is not a numeric field ({m})")),
            other => other,
        })?;
        match get_path(&out.to_json(), path) {
            Some(Value::Number(_)) => Ok(out),
            _ => Err(Error::config(format!("`{path}` is not a numeric field"))),
        }
    }

    /// Applies `key=value` overrides; values use TOML literal syntax and
    /// fall back to plain strings.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut tree = self.to_json();
        for o in overrides {
            let o = o.as_ref();
            let (key, raw) = o
                .split_once('=')
                .ok_or_else(|| Error::config(format!("override {o:?} is not key=value")))?;
            let key = key.trim();
            let raw = raw.trim();
            let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
                .ok()
                .and_then(|mut t| t.remove("v"))
                .map(|v| serde_json::to_value(v).expect("TOML value converts to JSON"))
                .unwrap_or_else(|| Value::String(raw.to_string()));
            set_path(&mut tree, key, value)?;
        }
        Self::from_json(tree)
    }
}

fn set_path(tree: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut node = tree;
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::config(format!("malformed key path {path:?}")));
    }
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::config(format!("`{}` is not a table", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("path has at least one part")
}

fn get_path<'a>(tree: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').try_fold(tree, |node, part| node.get(part))
}
