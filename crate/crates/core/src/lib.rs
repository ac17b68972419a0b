//! Feasibility planner and simulator for zero-energy backscatter devices that
//! ride on ambient cellular signals.
//!
//! * [`propagation`] - free-space, Okumura-Hata and radar path loss, thermal noise.
//! * [`linkbudget`] - bistatic SRS budget with power control and processing gain,
//!   monostatic mmWave budget.
//! * [`phy`] - baseband Monte Carlo of in-band backscatter over an OFDM pilot grid.
//! * [`protocol`] - resource plans, slotted ALOHA, FDMA and data-rate calculators.
//! * [`positioning`] - proximity fixes and coverage from detected tags.
//! * [`scenario`] - scenario files, presets, sweeps and CSV output.

pub mod error;
pub mod linkbudget;
pub mod phy;
pub mod positioning;
pub mod propagation;
pub mod protocol;
pub mod scenario;
pub mod stats;

pub use error::{Error, Result};
