use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::csv_out::Record;
use super::Scenario;
use crate::error::{Error, Result};
use crate::phy::{ber_monte_carlo, noncoherent_bfsk_ber, noncoherent_combined_ber, Coding, PsdResult};
use crate::positioning::{coverage_probability, positioning_error_mc};
use crate::protocol::{fdma_capacity, resource_plan, slotted_aloha_monte_carlo};
use crate::propagation::db_to_linear;
use crate::stats::trial_rng;

/// What each sweep point computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    Bistatic,
    Monostatic,
    Ber,
    Aloha,
    Rate,
    Position,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub scale: Scale,
}

impl RangeSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        let RangeSpec {
            start,
            stop,
            points,
            scale,
        } = *self;
        if !start.is_finite() || !stop.is_finite() {
            return Err(Error::config("sweep bounds must be finite"));
        }
        if stop < start {
            return Err(Error::config(format!("sweep stop {stop} is below start {start}")));
        }
        if points == 0 {
            return Err(Error::config("a sweep needs at least one point"));
        }
        if scale == Scale::Log && start <= 0.0 {
            return Err(Error::config("a log sweep needs a positive start"));
        }
        if points == 1 {
            return Ok(vec![start]);
        }
        let n = (points - 1) as f64;
        Ok((0..points)
            .map(|i| {
                let t = i as f64 / n;
                match scale {
                    Scale::Linear => start + (stop - start) * t,
                    Scale::Log => start * (stop / start).powf(t),
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepSpec {
    Range(RangeSpec),
    Values(Vec<f64>),
}

impl SweepSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            SweepSpec::Range(r) => r.values(),
            SweepSpec::Values(v) if v.is_empty() => Err(Error::config("empty value list")),
            SweepSpec::Values(v) => Ok(v.clone()),
        }
    }
}

/// Seed for sweep point `index`; independent of evaluation order.
fn point_seed(seed: u64, index: u64) -> u64 {
    trial_rng(seed, index).random()
}

/// Evaluates one scenario; the record's columns depend only on `target`.
pub fn evaluate(s: &Scenario, target: Target, seed: u64) -> Result<Record> {
    let mut r = Record::new();
    match target {
        Target::Bistatic => {
            let link = s.bistatic_link()?;
            let b = s.bistatic_section()?;
            let reading = link.max_reading_distance(b.d_ue_bs_km)?;
            let d = link.breakdown_clamped(b.d_ue_bs_km, b.d_ue_zed_m)?;
            r.push("srs_snr_db", link.srs_snr_at_bs(b.d_ue_bs_km)?)
                .push("cap_distance_km", link.cap_distance_km()?)
                .push("reachable", reading.meters().is_some())
                .push("reading_distance_m", reading.meters_or_zero())
                .push("carrier_hz", d.carrier_hz)
                .push("d_ue_bs_km", d.d_ue_bs_km)
                .push("d_ue_zed_m", d.d_ue_zed_m)
                .push("tx_power_dbm", d.tx_power_dbm)
                .push("power_capped", d.power_capped)
                .push("ue_antenna_gain_dbi", d.ue_antenna_gain_dbi)
                .push("bs_antenna_gain_dbi", d.bs_antenna_gain_dbi)
                .push("noise_per_re_dbm", d.noise_per_re_dbm)
                .push("direct_loss_db", d.direct_loss_db)
                .push("direct_rx_power_dbm", d.direct_rx_power_dbm)
                .push("per_re_snr_direct_db", d.per_re_snr_direct_db)
                .push("ue_zed_loss_db", d.ue_zed_loss_db)
                .push("zed_leg_gain_dbi", d.zed_leg_gain_dbi)
                .push("modulation_loss_db", d.modulation_loss_db)
                .push("zed_bs_loss_db", d.zed_bs_loss_db)
                .push("backscatter_rx_power_dbm", d.backscatter_rx_power_dbm)
                .push("per_re_snr_backscatter_db", d.per_re_snr_backscatter_db)
                .push("processing_gain_db", d.processing_gain_db)
                .push("effective_snr_db", d.effective_snr_db)
                .push("required_effective_snr_db", d.required_effective_snr_db)
                .push("margin_db", d.margin_db);
        }
        Target::Monostatic => {
            let (link, threshold) = s.monostatic_link()?;
            let distance = s.monostatic_section()?.distance_m;
            let rx = link.received_power_dbm(distance)?;
            r.push("carrier_hz", link.carrier.hz())
                .push("distance_m", distance)
                .push("received_power_dbm", rx)
                .push("threshold_dbm", threshold)
                .push("margin_db", rx - threshold)
                .push("max_range_m", link.max_range(threshold)?);
        }
        Target::Ber => {
            let sc = s.ber_scenario()?;
            let res = ber_monte_carlo(&sc, s.phy.trials, seed)?;
            let gamma = db_to_linear(sc.effective_snr_db()?);
            let theory = match sc.coding {
                Coding::None => noncoherent_bfsk_ber(gamma),
                Coding::Repetition2 => noncoherent_combined_ber(2, 2.0 * gamma),
            };
            r.push("effective_snr_db", sc.effective_snr_db()?)
                .push("bits", res.bits)
                .push("errors", res.errors)
                .push("ber", res.ber)
                .push("ci_low", res.ci_low)
                .push("ci_high", res.ci_high)
                .push("theory_ber", theory)
                .push("effective_snr_estimate_db", res.effective_snr_estimate_db)
                .push("bits_per_second", res.bits_per_second);
        }
        Target::Aloha => {
            let res = slotted_aloha_monte_carlo(&s.access_scenario(), seed)?;
            r.push("offered_load", res.offered_load)
                .push("tag_count", res.tag_count)
                .push("slots", res.slots)
                .push("successes", res.successes)
                .push("idle", res.idle)
                .push("collisions", res.collisions)
                .push("throughput", res.throughput)
                .push("analytic", res.analytic);
        }
        Target::Rate => {
            let p = &s.protocol;
            let plan = resource_plan(p.plan_mode, s.grid_description())?;
            r.push("symbol_rate_hz", p.symbol_rate_hz)
                .push("modulation_order", p.modulation_order)
                .push("code_rate", p.code_rate)
                .push("rate_bps", s.rate_profile().rate()?)
                .push(
                    "fdma_devices",
                    fdma_capacity(p.fdma_total_bandwidth_hz, p.fdma_subchannel_hz, p.fdma_guard_hz)?,
                )
                .push(
                    "plan_mode",
                    match p.plan_mode {
                        crate::protocol::PlanMode::Reserved => "reserved",
                        crate::protocol::PlanMode::Inband => "inband",
                    },
                )
                .push("reserved_blocks", plan.reserved_blocks())
                .push("untouched_blocks", plan.untouched_blocks());
        }
        Target::Position => {
            let model = s.sensing_model()?;
            let deployment = s.deployment(seed)?;
            let arena = s.arena();
            let st = positioning_error_mc(
                &deployment,
                &arena,
                &model,
                s.positioning.weighting,
                s.positioning.trials,
                seed,
            )?;
            let density = deployment.len() as f64 / arena.area();
            r.push("zed_count", deployment.len())
                .push("read_radius_m", st.read_radius_m)
                .push("trials", st.trials)
                .push("fixes", st.fixes)
                .push("no_fix_rate", st.no_fix_rate)
                .push("mean_error_m", st.mean_error_m)
                .push("median_error_m", st.median_error_m)
                .push("p90_error_m", st.p90_error_m)
                .push("max_error_m", st.max_error_m)
                .push("poisson_coverage", coverage_probability(density, st.read_radius_m)?);
        }
    }
    Ok(r)
}

/// Evaluates `target` at every value of `variable`, in sweep order.
///
/// Each record starts with the swept value and ends with the hash of the
/// base scenario.
pub fn run_sweep(
    base: &Scenario,
    target: Target,
    variable: &str,
    spec: &SweepSpec,
) -> Result<Vec<Record>> {
    let values = spec.values()?;
    let scenarios = values
        .iter()
        .map(|&x| base.with_number(variable, x))
        .collect::<Result<Vec<_>>>()?;
    let hash = base.hash();
    scenarios
        .par_iter()
        .zip(values.par_iter())
        .enumerate()
        .map(|(i, (s, &x))| {
            let body = evaluate(s, target, point_seed(base.seed, i as u64))?;
            let mut r = Record::new();
            r.push(variable, x);
            r.columns.extend(body.columns);
            r.push("scenario_hash", hash.as_str());
            Ok(r)
        })
        .collect()
}

/// Folded spectrum as `offset_hz,power_db`.
pub fn write_psd_csv<W: Write>(result: &PsdResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["offset_hz", "power_db"])?;
    for (f, p) in &result.folded {
        w.write_record([f.to_string(), p.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

/// Detected sideband offsets per pilot; empty cells where none cleared the threshold.
pub fn write_sidebands_csv<W: Write>(result: &PsdResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pilot_hz", "lower_offset_hz", "upper_offset_hz"])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for s in &result.sidebands {
        w.write_record([s.pilot_hz.to_string(), opt(s.lower_offset_hz), opt(s.upper_offset_hz)])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}
