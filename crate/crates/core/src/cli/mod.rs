//! The `ecodrive` command line.
//!
//! Exit codes are a stable contract: 0 success, 1 an acceptance verdict
//! failed, 2 usage or I/O error.

mod compare;
mod live;

pub use compare::{savings_window, CompareError, ComparisonReport, RunSummary, Verdicts, NO_STOP_MIN_SPEED_MPS};
pub use live::{commands_csv, replay, run_live, LiveOptions, LiveSession, UiCommand, COAST_DECEL_MPS2};

use std::ffi::OsString;
use std::io::Write;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::energy::EnergyParams;
use crate::sim::{run_scenario_with, DriverKind, Scenario, SimError, TrajectoryLog, Transport};
use crate::spat::{serve, BrokerOptions, ChannelModel, SpatError, SpatSubscriber};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VERDICT: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Spat(#[from] SpatError),
    #[error(transparent)]
    Compare(#[from] CompareError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn io_err(path: impl AsRef<Path>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.as_ref().display().to_string();
    move |source| CliError::Io { path, source }
}

#[derive(Debug, Parser)]
#[command(name = "ecodrive", version, about = "Connected eco-driving advisory and comparison simulator")]
pub struct Cli {
    /// Overrides the seed of the link model.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write its trajectory log.
    Run(RunArgs),
    /// Compare two trajectory logs of the same approach.
    Compare(CompareArgs),
    /// Drive a scenario from a connected UI.
    Live(LiveArgs),
    /// Stream a trajectory log to a UI as advisory records.
    Replay(ReplayArgs),
    /// Publish a scenario's signal controllers as a SPaT broker.
    Serve(ServeArgs),
    /// Print SPaT messages received through the link model.
    Subscribe(SubscribeArgs),
}

#[derive(Debug, Args, Default)]
pub struct LinkArgs {
    #[arg(long)]
    pub latency_ms: Option<u64>,
    #[arg(long)]
    pub jitter_ms: Option<u64>,
    /// Independent drop probability in [0, 1).
    #[arg(long = "drop")]
    pub drop_probability: Option<f64>,
}

impl LinkArgs {
    fn apply(&self, model: &mut ChannelModel) {
        if let Some(v) = self.latency_ms {
            model.latency_ms = v;
        }
        if let Some(v) = self.jitter_ms {
            model.jitter_ms = v;
        }
        if let Some(v) = self.drop_probability {
            model.drop_probability = v;
        }
    }
}

#[derive(Debug, Args, Default)]
pub struct AdvisorArgs {
    #[arg(long)]
    pub ttc_threshold_s: Option<f64>,
    #[arg(long)]
    pub staleness_s: Option<f64>,
    #[arg(long)]
    pub rate_hz: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario TOML file.
    pub config: PathBuf,
    /// Replace the driver named in the file.
    #[arg(long)]
    pub driver: Option<DriverKind>,
    #[command(flatten)]
    pub link: LinkArgs,
    #[command(flatten)]
    pub advisor: AdvisorArgs,
}

impl ScenarioArgs {
    fn load(&self, seed: Option<u64>) -> Result<Scenario, CliError> {
        if !self.config.exists() {
            return Err(CliError::Io {
                path: self.config.display().to_string(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
            });
        }
        let base = Scenario::load_file(&self.config)?;
        Ok(base.modified(|c| {
            if let Some(d) = self.driver {
                c.driver = d;
            }
            if let Some(s) = seed {
                c.seed = s;
            }
            self.link.apply(&mut c.channel);
            let a = &self.advisor;
            if let Some(v) = a.ttc_threshold_s {
                c.advisor.ttc_threshold_s = v;
            }
            if let Some(v) = a.staleness_s {
                c.advisor.staleness_s = v;
            }
            if let Some(v) = a.rate_hz {
                c.advisor.rate_hz = v;
            }
        })?)
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Output CSV; stdout when absent.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Carry SPaT over a loopback TCP broker instead of in-process.
    #[arg(long)]
    pub tcp: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub log_a: PathBuf,
    pub log_b: PathBuf,
    /// Also write the report here.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Write one CSV row per run here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LiveArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// UI endpoint to listen on.
    #[arg(long, default_value = "127.0.0.1:7420")]
    pub bind: String,
    /// Session log; the command sidecar goes next to it.
    #[arg(short, long, default_value = "live_session.csv")]
    pub out: PathBuf,
    /// Simulated seconds per wall-clock second.
    #[arg(long, default_value_t = 1.0)]
    pub pace: f64,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub log: PathBuf,
    /// Serve one UI connection here; stdout when absent.
    #[arg(long)]
    pub bind: Option<String>,
    /// Log seconds per wall-clock second; 0 streams without pacing.
    #[arg(long, default_value_t = 1.0)]
    pub pace: f64,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    pub config: PathBuf,
    #[arg(long, default_value = "127.0.0.1:7410")]
    pub bind: String,
    #[arg(long, default_value_t = 1.0)]
    pub pace: f64,
    /// Stop after this many simulated seconds.
    #[arg(long)]
    pub duration_s: Option<u64>,
    #[arg(long, default_value_t = BrokerOptions::default().queue_bound)]
    pub queue_bound: usize,
}

#[derive(Debug, Args)]
pub struct SubscribeArgs {
    pub endpoint: String,
    #[command(flatten)]
    pub link: LinkArgs,
    /// Exit after this many delivered messages.
    #[arg(long)]
    pub count: Option<usize>,
    /// Broker pace, used to run the link model on the broker clock.
    #[arg(long, default_value_t = 1.0)]
    pub pace: f64,
}

/// Path of the command sidecar written next to a live session log.
pub fn commands_path(session: &Path) -> PathBuf {
    let stem = session.file_stem().and_then(|s| s.to_str()).unwrap_or("live_session");
    session.with_file_name(format!("{stem}.commands.csv"))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(io_err(path))
}

fn cmd_run(args: &RunArgs, seed: Option<u64>, out: &mut dyn Write) -> Result<u8, CliError> {
    let scenario = args.scenario.load(seed)?;
    let transport = if args.tcp { Transport::Tcp } else { Transport::InProcess };
    let log = run_scenario_with(&scenario, transport)?;
    match &args.out {
        Some(path) => {
            log.write_file(path)?;
            log::info!("{} rows written to {}", log.rows().len(), path.display());
        }
        None => out.write_all(log.to_csv().as_bytes()).map_err(io_err("stdout"))?,
    }
    Ok(EXIT_OK)
}

fn cmd_compare(args: &CompareArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let a = TrajectoryLog::read_file(&args.log_a)?;
    let b = TrajectoryLog::read_file(&args.log_b)?;
    let report = ComparisonReport::new(&a, &b, &EnergyParams::default())?;
    let text = report.to_text();
    out.write_all(text.as_bytes()).map_err(io_err("stdout"))?;
    if let Some(p) = &args.out {
        write_file(p, &text)?;
    }
    if let Some(p) = &args.csv {
        write_file(p, &report.to_csv())?;
    }
    Ok(match report.verdicts() {
        Some(v) if !v.all_pass() => EXIT_VERDICT,
        _ => EXIT_OK,
    })
}

fn cmd_live(args: &LiveArgs, seed: Option<u64>, err: &mut dyn Write) -> Result<u8, CliError> {
    let scenario = args.scenario.load(seed)?;
    let listener = TcpListener::bind(&args.bind).map_err(io_err(&args.bind))?;
    let addr = listener.local_addr().map_err(io_err(&args.bind))?;
    let _ = writeln!(err, "waiting for UI on {addr}");
    let opts = LiveOptions {
        pace: args.pace,
        ..LiveOptions::default()
    };
    let session = run_live(&scenario, &listener, &opts)?;
    session.log.write_file(&args.out)?;
    write_file(&commands_path(&args.out), &commands_csv(&session.commands))?;
    let _ = writeln!(
        err,
        "session ended at t = {:.1} s after {} commands",
        session.log.rows().last().map_or(0.0, |r| r.t_s),
        session.commands.len()
    );
    Ok(EXIT_OK)
}

fn cmd_replay(args: &ReplayArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8, CliError> {
    let log = TrajectoryLog::read_file(&args.log)?;
    match &args.bind {
        None => {
            replay(&log, out, args.pace).map_err(io_err("stdout"))?;
        }
        Some(bind) => {
            let listener = TcpListener::bind(bind).map_err(io_err(bind))?;
            let addr = listener.local_addr().map_err(io_err(bind))?;
            let _ = writeln!(err, "waiting for UI on {addr}");
            let (mut stream, _) = listener.accept().map_err(io_err(bind))?;
            replay(&log, &mut stream, args.pace).map_err(io_err(bind))?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_serve(args: &ServeArgs, err: &mut dyn Write) -> Result<u8, CliError> {
    let scenario = Scenario::load_file(&args.config)?;
    let options = BrokerOptions {
        queue_bound: args.queue_bound,
    };
    let handle = serve(&args.bind, scenario.controllers(), options, args.pace, args.duration_s)?;
    let _ = writeln!(err, "serving SPaT on {}", handle.local_addr());
    let pace = if args.pace > 0.0 { args.pace } else { 1.0 };
    let until = args
        .duration_s
        .map(|d| Instant::now() + Duration::from_secs_f64((d + 1) as f64 / pace));
    while until.is_none_or(|u| Instant::now() < u) {
        std::thread::sleep(Duration::from_millis(50));
    }
    handle.stop();
    Ok(EXIT_OK)
}

fn cmd_subscribe(args: &SubscribeArgs, seed: Option<u64>, out: &mut dyn Write) -> Result<u8, CliError> {
    let mut model = ChannelModel::default();
    args.link.apply(&mut model);
    let mut sub = SpatSubscriber::connect(&args.endpoint, model, seed.unwrap_or(0))?;
    let pace = if args.pace > 0.0 { args.pace } else { 1.0 };
    // the link model runs on the broker clock, anchored at the first message
    let mut anchor: Option<(u64, Instant)> = None;
    let mut printed = 0usize;
    loop {
        sub.wait_for_traffic(Duration::from_millis(20));
        if anchor.is_none() {
            anchor = sub.channel().last_sent_ms().map(|t| (t, Instant::now()));
        }
        let now_ms = anchor.map_or(0, |(t, at)| t + (at.elapsed().as_secs_f64() * pace * 1000.0) as u64);
        let poll = sub.poll(now_ms);
        for d in &poll.delivered {
            out.write_all(d.message.to_line().as_bytes()).map_err(io_err("stdout"))?;
            printed += 1;
            if args.count.is_some_and(|n| printed >= n) {
                return Ok(EXIT_OK);
            }
        }
        if poll.disconnected {
            return Ok(EXIT_OK);
        }
    }
}

/// Runs the command line with explicit arguments and streams, returning the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();

    let result = match &cli.command {
        Command::Run(a) => cmd_run(a, cli.seed, out),
        Command::Compare(a) => cmd_compare(a, out),
        Command::Live(a) => cmd_live(a, cli.seed, err),
        Command::Replay(a) => cmd_replay(a, out, err),
        Command::Serve(a) => cmd_serve(a, err),
        Command::Subscribe(a) => cmd_subscribe(a, cli.seed, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

pub fn main() -> ExitCode {
    let code = run(std::env::args_os(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    ExitCode::from(code)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (u8, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("ecodrive").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn missing_config_exits_two_and_names_the_path() {
        let (code, _, err) = run_capture(&["run", "no/such/scenario.toml"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("no/such/scenario.toml"), "{err}");
    }

    #[test]
    fn unknown_subcommand_is_a_usage_error() {
        assert_eq!(run_capture(&["fly"]).0, EXIT_USAGE);
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, EXIT_OK);
        for sub in ["run", "compare", "live", "replay", "serve", "subscribe"] {
            assert!(out.contains(sub), "{sub} missing from help");
        }
    }

    #[test]
    fn sidecar_path() {
        assert_eq!(commands_path(Path::new("out/s.csv")), PathBuf::from("out/s.commands.csv"));
    }
}
