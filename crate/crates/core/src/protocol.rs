use std::fmt::Write as _;

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::trial_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanMode {
    /// Dedicated blocks for the tag links.
    Reserved,
    /// Tag links overlaid on the cellular pilot regions.
    Inband,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Downlink,
    Uplink,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TagLink {
    R2d,
    D2r,
}

/// Resource blocks of a cell: downlink blocks first, then uplink.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridDescription {
    pub downlink_blocks: usize,
    pub uplink_blocks: usize,
}

impl GridDescription {
    pub fn total(&self) -> usize {
        self.downlink_blocks + self.uplink_blocks
    }

    fn check(&self) -> Result<()> {
        if self.downlink_blocks == 0 || self.uplink_blocks == 0 {
            return Err(Error::config(format!(
                "grid needs at least one DL and one UL block, got {} DL / {} UL",
                self.downlink_blocks, self.uplink_blocks
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Allocation {
    pub link: TagLink,
    pub direction: Direction,
    /// Index within the direction's blocks.
    pub block: usize,
    /// True when the block is shared with ordinary cellular traffic.
    pub overlay: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResourcePlan {
    pub mode: PlanMode,
    pub grid: GridDescription,
    pub allocations: Vec<Allocation>,
}

impl ResourcePlan {
    pub fn reserved_blocks(&self) -> usize {
        self.allocations.iter().filter(|a| !a.overlay).count()
    }

    pub fn untouched_blocks(&self) -> usize {
        let mut used = vec![false; self.grid.total()];
        for a in &self.allocations {
            used[self.flat_index(a)] = true;
        }
        used.iter().filter(|u| !**u).count()
    }

    fn flat_index(&self, a: &Allocation) -> usize {
        match a.direction {
            Direction::Downlink => a.block,
            Direction::Uplink => self.grid.downlink_blocks + a.block,
        }
    }

    /// One line per block, e.g. `UL 00  D2R reserved`.
    pub fn grid_map(&self) -> String {
        let mut out = String::new();
        let rows = [
            (Direction::Downlink, "DL", self.grid.downlink_blocks),
            (Direction::Uplink, "UL", self.grid.uplink_blocks),
        ];
        for (dir, tag, count) in rows {
            for b in 0..count {
                let users: Vec<String> = self
                    .allocations
                    .iter()
                    .filter(|a| a.direction == dir && a.block == b)
                    .map(|a| {
                        let link = match a.link {
                            TagLink::R2d => "R2D",
                            TagLink::D2r => "D2R",
                        };
                        let kind = if a.overlay { "overlay" } else { "reserved" };
                        format!("{link} {kind}")
                    })
                    .collect();
                let text = if users.is_empty() {
                    "-".to_string()
                } else {
                    users.join(", ")
                };
                let _ = writeln!(out, "{tag} {b:02}  {text}");
            }
        }
        out
    }
}

/// Places the tag links on a cell grid.
///
/// Reserved mode takes the first DL block for R2D and the first UL block for
/// D2R. In-band mode reserves nothing and overlays D2R on every block.
pub fn resource_plan(mode: PlanMode, grid: GridDescription) -> Result<ResourcePlan> {
    grid.check()?;
    let allocations = match mode {
        PlanMode::Reserved => vec![
            Allocation {
                link: TagLink::R2d,
                direction: Direction::Downlink,
                block: 0,
                overlay: false,
            },
            Allocation {
                link: TagLink::D2r,
                direction: Direction::Uplink,
                block: 0,
                overlay: false,
            },
        ],
        PlanMode::Inband => (0..grid.downlink_blocks)
            .map(|b| (Direction::Downlink, b))
            .chain((0..grid.uplink_blocks).map(|b| (Direction::Uplink, b)))
            .map(|(direction, block)| Allocation {
                link: TagLink::D2r,
                direction,
                block,
                overlay: true,
            })
            .collect(),
    };
    Ok(ResourcePlan {
        mode,
        grid,
        allocations,
    })
}

/// Expected successful slots per slot at offered load `g`.
pub fn slotted_aloha_throughput(g: f64) -> Result<f64> {
    if !(g >= 0.0) || !g.is_finite() {
        return Err(Error::domain(format!("offered load must be >= 0, got {g}")));
    }
    Ok(g * (-g).exp())
}

/// Exact success probability for `tags` tags each sending with probability `g / tags`.
pub fn finite_aloha_throughput(g: f64, tags: u64) -> Result<f64> {
    slotted_aloha_throughput(g)?;
    if tags == 0 {
        return Err(Error::domain("population must be at least one tag"));
    }
    let p = g / tags as f64;
    if p > 1.0 {
        return Err(Error::domain(format!("load {g} exceeds population {tags}")));
    }
    Ok(g * (1.0 - p).powf(tags as f64 - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccessScenario {
    pub tag_count: u64,
    pub slots: u64,
    pub offered_load: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlohaResult {
    pub offered_load: f64,
    pub tag_count: u64,
    pub slots: u64,
    pub successes: u64,
    pub idle: u64,
    pub collisions: u64,
    pub throughput: f64,
    pub analytic: f64,
}

const SLOT_BLOCK: u64 = 4096;

/// Finite-population slotted ALOHA: each slot draws Binomial(n, G/n) senders
/// and succeeds when exactly one transmits.
pub fn slotted_aloha_monte_carlo(s: &AccessScenario, seed: u64) -> Result<AlohaResult> {
    let analytic = slotted_aloha_throughput(s.offered_load)?;
    if s.tag_count == 0 || s.slots == 0 {
        return Err(Error::domain("tag count and slot count must be positive"));
    }
    let p = s.offered_load / s.tag_count as f64;
    let binom = Binomial::new(s.tag_count, p)
        .map_err(|e| Error::domain(format!("offered load {}: {e}", s.offered_load)))?;
    let blocks = s.slots.div_ceil(SLOT_BLOCK);
    let (successes, idle) = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = trial_rng(seed, b);
            let n = SLOT_BLOCK.min(s.slots - b * SLOT_BLOCK);
            let mut ok = 0u64;
            let mut empty = 0u64;
            for _ in 0..n {
                match binom.sample(&mut rng) {
                    0 => empty += 1,
                    1 => ok += 1,
                    _ => {}
                }
            }
            (ok, empty)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(AlohaResult {
        offered_load: s.offered_load,
        tag_count: s.tag_count,
        slots: s.slots,
        successes,
        idle,
        collisions: s.slots - successes - idle,
        throughput: successes as f64 / s.slots as f64,
        analytic,
    })
}

/// Load in `[lo, hi]` with the highest classical throughput, by grid search.
pub fn aloha_peak_load(lo: f64, hi: f64, step: f64) -> Result<f64> {
    if !(step > 0.0) || hi < lo {
        return Err(Error::domain("grid search needs step > 0 and hi >= lo"));
    }
    let n = ((hi - lo) / step).floor() as usize;
    let mut best = (lo, f64::NEG_INFINITY);
    for i in 0..=n {
        let g = lo + i as f64 * step;
        let t = slotted_aloha_throughput(g)?;
        if t > best.1 {
            best = (g, t);
        }
    }
    Ok(best.0)
}

/// Devices that fit side by side in `total_hz`.
pub fn fdma_capacity(total_hz: f64, per_device_hz: f64, guard_hz: f64) -> Result<u64> {
    if !(per_device_hz > 0.0) {
        return Err(Error::domain("per-device bandwidth must be positive"));
    }
    if !(total_hz >= 0.0) || !(guard_hz >= 0.0) {
        return Err(Error::domain("bandwidths must be non-negative"));
    }
    // Nudge so exact divisions survive rounding in the inputs.
    Ok((total_hz / (per_device_hz + guard_hz) + 1e-9).floor() as u64)
}

/// Information rate of the tag uplink.
pub fn d2r_data_rate(symbol_rate_hz: f64, modulation_order: u32, code_rate: f64) -> Result<f64> {
    if modulation_order < 2 {
        return Err(Error::domain(format!(
            "modulation order must be >= 2, got {modulation_order}"
        )));
    }
    if !(code_rate > 0.0 && code_rate <= 1.0) {
        return Err(Error::domain(format!("code rate must lie in (0, 1], got {code_rate}")));
    }
    if !(symbol_rate_hz >= 0.0) {
        return Err(Error::domain("symbol rate must be non-negative"));
    }
    Ok(symbol_rate_hz * (modulation_order as f64).log2() * code_rate)
}

/// Named rate configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateProfile {
    pub symbol_rate_hz: f64,
    pub modulation_order: u32,
    pub code_rate: f64,
}

impl RateProfile {
    /// Slow tag toggling under ambient SRS illumination.
    pub fn ambient() -> Self {
        RateProfile {
            symbol_rate_hz: 100.0,
            modulation_order: 2,
            code_rate: 0.5,
        }
    }

    /// Dedicated uplink resources; placeholder numbers.
    pub fn dedicated() -> Self {
        RateProfile {
            symbol_rate_hz: 4000.0,
            modulation_order: 2,
            code_rate: 0.5,
        }
    }

    pub fn rate(&self) -> Result<f64> {
        d2r_data_rate(self.symbol_rate_hz, self.modulation_order, self.code_rate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::{ber_monte_carlo, BerScenario, Coding};
    use proptest::prelude::*;

    fn grid50() -> GridDescription {
        GridDescription {
            downlink_blocks: 25,
            uplink_blocks: 25,
        }
    }

    #[test]
    fn reserved_plan_counts() {
        let p = resource_plan(PlanMode::Reserved, grid50()).unwrap();
        assert_eq!(p.reserved_blocks(), 2);
        assert_eq!(p.untouched_blocks(), 48);
        let dl = p.allocations.iter().filter(|a| a.direction == Direction::Downlink).count();
        assert_eq!(dl, 1);
        assert!(p.grid_map().contains("UL 00  D2R reserved"));
    }

    #[test]
    fn inband_plan_reserves_nothing() {
        let p = resource_plan(PlanMode::Inband, grid50()).unwrap();
        assert_eq!(p.reserved_blocks(), 0);
        assert!(p.allocations.iter().all(|a| a.overlay && a.link == TagLink::D2r));
        assert_eq!(p.untouched_blocks(), 0);
    }

    #[test]
    fn empty_grid_rejected() {
        let g = GridDescription {
            downlink_blocks: 3,
            uplink_blocks: 0,
        };
        assert!(matches!(resource_plan(PlanMode::Reserved, g), Err(Error::Config(_))));
    }

    proptest! {
        #[test]
        fn plans_stay_inside_grid(dl in 1usize..60, ul in 1usize..60, inband in any::<bool>()) {
            let g = GridDescription { downlink_blocks: dl, uplink_blocks: ul };
            let mode = if inband { PlanMode::Inband } else { PlanMode::Reserved };
            let p = resource_plan(mode, g).unwrap();
            let mut seen = std::collections::HashSet::new();
            for a in &p.allocations {
                let limit = match a.direction { Direction::Downlink => dl, Direction::Uplink => ul };
                prop_assert!(a.block < limit);
                if !a.overlay {
                    prop_assert!(seen.insert((a.direction, a.block)));
                }
            }
        }

        #[test]
        fn aloha_never_beats_peak(g in 0.0f64..20.0) {
            prop_assert!(slotted_aloha_throughput(g).unwrap() <= (-1.0f64).exp() + 1e-15);
        }
    }

    #[test]
    fn aloha_classical_values() {
        assert!((slotted_aloha_throughput(1.0).unwrap() - 0.3679).abs() < 5e-5);
        assert_eq!(slotted_aloha_throughput(0.0).unwrap(), 0.0);
        assert!(matches!(slotted_aloha_throughput(-0.1), Err(Error::Domain(_))));
        let peak = aloha_peak_load(0.0, 5.0, 0.001).unwrap();
        assert!((peak - 1.0).abs() < 0.01);
    }

    #[test]
    fn finite_population_converges() {
        let a = finite_aloha_throughput(2.0, 10_000).unwrap();
        assert!((a / slotted_aloha_throughput(2.0).unwrap() - 1.0).abs() < 1e-3);
        assert!(finite_aloha_throughput(3.0, 2).is_err());
    }

    #[test]
    fn monte_carlo_counts_add_up_and_repeat() {
        let s = AccessScenario {
            tag_count: 500,
            slots: 10_000,
            offered_load: 1.0,
        };
        let a = slotted_aloha_monte_carlo(&s, 5).unwrap();
        let b = slotted_aloha_monte_carlo(&s, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.successes + a.idle + a.collisions, 10_000);
    }

    #[test]
    fn fdma_examples() {
        assert_eq!(fdma_capacity(180e3, 1.8e3, 0.0).unwrap(), 100);
        assert_eq!(fdma_capacity(180e3, 1.8e3, 1.8e3).unwrap(), 50);
        assert_eq!(fdma_capacity(1e3, 1.8e3, 0.0).unwrap(), 0);
        assert!(matches!(fdma_capacity(1e3, 0.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn rate_examples() {
        assert_eq!(RateProfile::ambient().rate().unwrap(), 50.0);
        assert_eq!(RateProfile::dedicated().rate().unwrap(), 2000.0);
        assert_eq!(d2r_data_rate(250.0, 2, 1.0).unwrap(), 250.0);
        assert_eq!(d2r_data_rate(100.0, 4, 1.0).unwrap(), 200.0);
        assert!(d2r_data_rate(100.0, 1, 0.5).is_err());
        assert!(d2r_data_rate(100.0, 2, 0.0).is_err());
        assert!(d2r_data_rate(100.0, 2, 1.5).is_err());
    }

    #[test]
    fn rate_matches_noiseless_phy() {
        let mut s = BerScenario::default();
        s.coding = Coding::Repetition2;
        s.direct_snr_db = f64::INFINITY;
        s.bits_per_trial = 20;
        let r = ber_monte_carlo(&s, 3, 1).unwrap();
        assert_eq!(r.errors, 0);
        let p = RateProfile::ambient();
        assert_eq!(r.bits_per_second, p.rate().unwrap());
    }

}
