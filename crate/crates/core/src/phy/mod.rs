//! Baseband Monte Carlo of in-band ambient backscatter.
//!
//! The UE's SRS comb illuminates a tag that toggles its reflection state as a
//! slow square wave (BFSK over two toggle rates far below the subcarrier
//! spacing). The BS estimates the direct channel per pilot RE, subtracts its
//! mean over each tag symbol, combines the residual over pilots and antennas
//! and runs a noncoherent two-tone detector on the result.

mod channel;
mod detect;
mod estimate;
mod grid;
mod montecarlo;
mod psd;
mod waveform;

pub use channel::{apply_backscatter_channel, ChannelPair};
pub use detect::{
    detect_zed_symbols, noncoherent_bfsk_ber, noncoherent_combined_ber, DetectionReport,
    SymbolStatistic,
};
pub use estimate::{estimate_direct_channel, ChannelEstimate, Combining};
pub use grid::{synthesize_ambient_frame, FrameLayout, PilotGrid};
pub use montecarlo::{ber_monte_carlo, BerResult, BerScenario, Coding};
pub use psd::{
    psd_of_backscatter, welch_psd, PsdResult, PsdScenario, SidebandReport, Spectrum, Window,
};
pub use waveform::{zed_fsk_waveform, TagParams, ZedWaveform};
