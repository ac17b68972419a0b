use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use xgzed::phy::psd_of_backscatter;
use xgzed::protocol::resource_plan;
use xgzed::scenario::{
    evaluate, run_sweep, write_csv, write_psd_csv, write_sidebands_csv, RangeSpec, Record, Scale,
    Scenario, SweepSpec, Target,
};
use xgzed::Error;

#[derive(Parser, Debug)]
#[command(name = "xgzed", version, about = "Link budgets, baseband Monte Carlo and access models for ambient backscatter tags")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario file (TOML, or JSON by extension).
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Bundled scenario: fig4b-450MHz, fig4b-768MHz, fig4b-1920MHz, srs-20MHz,
    /// fig4c-mmwave,
    /// phy-ber-default, positioning-grid5m.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Override a scenario key, e.g. --set carrier.frequency_hz=450e6. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Replaces the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// CSV destination; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Number of points of the default sweep.
    #[arg(long, global = true)]
    points: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bistatic and monostatic link budgets.
    #[command(subcommand)]
    Linkbudget(LinkbudgetCmd),
    /// Baseband simulation of the tag over SRS pilots.
    #[command(subcommand)]
    Phy(PhyCmd),
    /// Access-layer calculators.
    #[command(subcommand)]
    Protocol(ProtocolCmd),
    /// Proximity positioning from detected tags.
    #[command(subcommand)]
    Position(PositionCmd),
    /// Sweep any numeric scenario key.
    ///
    /// Columns: the swept key, the target's columns, scenario_hash.
    Sweep(SweepArgs),
}

#[derive(Subcommand, Debug)]
enum LinkbudgetCmd {
    /// Sweep UE-BS distance, log 0.1-10 km (default 100 points).
    ///
    /// Columns: bistatic.d_ue_bs_km, srs_snr_db, cap_distance_km, reachable,
    /// reading_distance_m, then every leg of the budget at (d_ue_bs_km, d_ue_zed_m)
    /// ending in margin_db, scenario_hash.
    Bistatic,
    /// Sweep reader range, log 1-1000 m (default 100 points).
    ///
    /// Columns: monostatic.distance_m, carrier_hz, distance_m, received_power_dbm,
    /// threshold_dbm, margin_db, max_range_m, scenario_hash.
    Monostatic,
}

#[derive(Subcommand, Debug)]
enum PhyCmd {
    /// BER against effective SNR, 0-14 dB (default 8 points).
    ///
    /// Columns: phy.effective_snr_db, effective_snr_db, bits, errors, ber, ci_low,
    /// ci_high, theory_ber, effective_snr_estimate_db, bits_per_second, scenario_hash.
    Ber,
    /// Received spectrum folded around the pilot subcarriers.
    ///
    /// Columns: offset_hz, power_db (mean over pilots). With --out, detected
    /// sidebands go to <out stem>.sidebands.csv with columns pilot_hz,
    /// lower_offset_hz, upper_offset_hz.
    Psd,
}

#[derive(Subcommand, Debug)]
enum ProtocolCmd {
    /// Finite-population slotted ALOHA, offered load 0-4 (default 17 points).
    ///
    /// Columns: protocol.offered_load, offered_load, tag_count, slots, successes,
    /// idle, collisions, throughput, analytic, scenario_hash.
    Aloha,
    /// Tag data rate, FDMA capacity and resource plan; the plan's block map goes to stderr.
    ///
    /// Columns: symbol_rate_hz, modulation_order, code_rate, rate_bps, fdma_devices,
    /// plan_mode, reserved_blocks, untouched_blocks, scenario_hash.
    Rate,
}

#[derive(Subcommand, Debug)]
enum PositionCmd {
    /// Positioning error over uniformly dropped UEs.
    ///
    /// Columns: zed_count, read_radius_m, trials, fixes, no_fix_rate, mean_error_m,
    /// median_error_m, p90_error_m, max_error_m, poisson_coverage, scenario_hash.
    Simulate,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Dotted scenario key, e.g. bistatic.d_ue_bs_km.
    #[arg(long = "var")]
    variable: String,
    /// What each point computes.
    #[arg(long, value_enum)]
    target: Target,
    #[arg(long, required_unless_present = "values")]
    start: Option<f64>,
    #[arg(long, required_unless_present = "values")]
    stop: Option<f64>,
    #[arg(long, value_enum, default_value_t = Scale::Linear)]
    scale: Scale,
    /// Explicit comma-separated values instead of a range.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["start", "stop"])]
    values: Option<Vec<f64>>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Schema(_) | Error::Mode(_) => 2,
        Error::Domain(_)
        | Error::Validity { .. }
        | Error::Shape(_)
        | Error::InsufficientData(_) => 3,
        Error::Io { .. } | Error::Csv(_) => 4,
    }
}

fn default_preset(cmd: &Command) -> &'static str {
    match cmd {
        Command::Linkbudget(LinkbudgetCmd::Monostatic) => "fig4c-mmwave",
        Command::Linkbudget(_) | Command::Sweep(_) => "fig4b-768MHz",
        Command::Phy(_) | Command::Protocol(_) => "phy-ber-default",
        Command::Position(_) => "positioning-grid5m",
    }
}

fn load(common: &Common, cmd: &Command) -> xgzed::Result<Scenario> {
    let mut s = match (&common.config, &common.preset) {
        (Some(path), _) => Scenario::load(path)?,
        (None, Some(name)) => Scenario::from_preset(name)?,
        (None, None) => Scenario::from_preset(default_preset(cmd))?,
    };
    if !common.overrides.is_empty() {
        s = s.with_overrides(&common.overrides)?;
    }
    if let Some(seed) = common.seed {
        s.seed = seed;
    }
    Ok(s)
}

fn emit(records: &[Record], out: Option<&Path>) -> xgzed::Result<()> {
    match out {
        Some(path) => xgzed::scenario::emit_csv(records, path),
        None => write_csv(records, std::io::stdout().lock()),
    }
}

fn range(common: &Common, start: f64, stop: f64, points: usize, scale: Scale) -> SweepSpec {
    SweepSpec::Range(RangeSpec {
        start,
        stop,
        points: common.points.unwrap_or(points),
        scale,
    })
}

fn single(s: &Scenario, target: Target) -> xgzed::Result<Vec<Record>> {
    let mut r = evaluate(s, target, s.seed)?;
    r.push("scenario_hash", s.hash());
    Ok(vec![r])
}

fn run(cli: &Cli) -> xgzed::Result<()> {
    let c = &cli.common;
    let s = load(c, &cli.command)?;
    eprintln!("# scenario {} (hash {})", s.name, s.hash());
    eprint!("{}", s.to_toml());
    eprintln!("# end scenario");

    let out = c.out.as_deref();
    let records = match &cli.command {
        Command::Linkbudget(LinkbudgetCmd::Bistatic) => run_sweep(
            &s,
            Target::Bistatic,
            "bistatic.d_ue_bs_km",
            &range(c, 0.1, 10.0, 100, Scale::Log),
        )?,
        Command::Linkbudget(LinkbudgetCmd::Monostatic) => run_sweep(
            &s,
            Target::Monostatic,
            "monostatic.distance_m",
            &range(c, 1.0, 1000.0, 100, Scale::Log),
        )?,
        Command::Phy(PhyCmd::Ber) => run_sweep(
            &s,
            Target::Ber,
            "phy.effective_snr_db",
            &range(c, 0.0, 14.0, 8, Scale::Linear),
        )?,
        Command::Phy(PhyCmd::Psd) => {
            let result = psd_of_backscatter(&s.psd_scenario()?, s.seed)?;
            for sb in &result.sidebands {
                log::info!(
                    "pilot {} Hz: sidebands {:?} / {:?}",
                    sb.pilot_hz,
                    sb.lower_offset_hz,
                    sb.upper_offset_hz
                );
            }
            match out {
                Some(path) => {
                    let mut buf = Vec::new();
                    write_psd_csv(&result, &mut buf)?;
                    std::fs::write(path, buf).map_err(|e| Error::Io { path: path.into(), source: e })?;
                    let side = path.with_extension("sidebands.csv");
                    let mut buf = Vec::new();
                    write_sidebands_csv(&result, &mut buf)?;
                    std::fs::write(&side, buf).map_err(|e| Error::Io { path: side.clone(), source: e })?;
                }
                None => write_psd_csv(&result, std::io::stdout().lock())?,
            }
            return Ok(());
        }
        Command::Protocol(ProtocolCmd::Aloha) => run_sweep(
            &s,
            Target::Aloha,
            "protocol.offered_load",
            &range(c, 0.0, 4.0, 17, Scale::Linear),
        )?,
        Command::Protocol(ProtocolCmd::Rate) => {
            let plan = resource_plan(s.protocol.plan_mode, s.grid_description())?;
            eprint!("{}", plan.grid_map());
            single(&s, Target::Rate)?
        }
        Command::Position(PositionCmd::Simulate) => single(&s, Target::Position)?,
        Command::Sweep(a) => {
            let spec = match &a.values {
                Some(v) => SweepSpec::Values(v.clone()),
                None => range(
                    c,
                    a.start.expect("clap requires --start"),
                    a.stop.expect("clap requires --stop"),
                    10,
                    a.scale,
                ),
            };
            run_sweep(&s, a.target, &a.variable, &spec)?
        }
    };
    emit(&records, out)?;
    std::io::stdout().flush().map_err(|e| Error::Io { path: "<stdout>".into(), source: e })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
