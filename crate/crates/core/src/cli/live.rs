use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::advisor::{DisplayFilter, Mailbox};
use crate::sim::{Override, Scenario, SimError, Simulation, TrajectoryLog, Transport};

/// Deceleration applied after the UI disconnects.
pub const COAST_DECEL_MPS2: f64 = 0.5;

/// Pedal command sent by the UI, one JSON object per line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UiCommand {
    pub t_ms: u64,
    pub throttle: f64,
    pub brake: f64,
}

impl UiCommand {
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("command always serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LiveOptions {
    /// Simulated seconds per wall-clock second; 0 runs unpaced.
    pub pace: f64,
    pub coast_decel_mps2: f64,
}

impl Default for LiveOptions {
    fn default() -> Self {
        LiveOptions {
            pace: 1.0,
            coast_decel_mps2: COAST_DECEL_MPS2,
        }
    }
}

#[derive(Debug)]
pub struct LiveSession {
    pub log: TrajectoryLog,
    /// Every command received, in arrival order.
    pub commands: Vec<UiCommand>,
    pub ui_disconnected: bool,
}

/// Writes the commands as CSV with columns `t_ms,throttle,brake`.
pub fn commands_csv(commands: &[UiCommand]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for c in commands {
        w.serialize(c).expect("in-memory csv");
    }
    let text = String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8");
    if text.is_empty() {
        "t_ms,throttle,brake\n".to_string()
    } else {
        text
    }
}

struct Inbox {
    latest: Mailbox<UiCommand>,
    all: Arc<Mutex<Vec<UiCommand>>>,
    closed: Arc<AtomicBool>,
}

fn spawn_reader(stream: TcpStream) -> Inbox {
    let inbox = Inbox {
        latest: Mailbox::new(),
        all: Arc::default(),
        closed: Arc::default(),
    };
    let (latest, all, closed) = (inbox.latest.clone(), Arc::clone(&inbox.all), Arc::clone(&inbox.closed));
    thread::spawn(move || {
        for line in BufReader::new(stream).lines() {
            let Ok(line) = line else { break };
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<UiCommand>(&line) {
                Ok(c) => {
                    latest.put(c);
                    all.lock().expect("command list poisoned").push(c);
                }
                Err(e) => log::warn!("ignoring malformed UI command {line:?}: {e}"),
            }
        }
        closed.store(true, Ordering::SeqCst);
    });
    inbox
}

fn pace_until(start: Instant, t_ms: u64, pace: f64) {
    if pace > 0.0 {
        let due = start + Duration::from_secs_f64(t_ms as f64 / 1000.0 / pace);
        let now = Instant::now();
        if due > now {
            thread::sleep(due - now);
        }
    }
}

/// Accepts one UI connection on `listener` and drives the scenario from its
/// pedal commands instead of the driver model.
///
/// Advisory records go out through a [`DisplayFilter`] at the loop rate.
/// Until the first command arrives both pedals read zero, which holds
/// speed. When the UI goes away the truck coasts to a stop and the session
/// ends.
pub fn run_live(scenario: &Scenario, listener: &TcpListener, opts: &LiveOptions) -> Result<LiveSession, SimError> {
    let io = |source| SimError::Write {
        path: "UI socket".into(),
        source,
    };
    let (stream, peer) = listener.accept().map_err(io)?;
    log::info!("UI connected from {peer}");
    let _ = stream.set_nodelay(true);
    let inbox = spawn_reader(stream.try_clone().map_err(io)?);
    let mut writer = stream;

    let mut sim = Simulation::new(scenario, Transport::InProcess)?;
    let mut filter = DisplayFilter::new();
    let mut last_sent: Option<u64> = None;
    let mut write_failed = false;
    let start = Instant::now();
    loop {
        pace_until(start, sim.t_ms(), opts.pace);
        let gone = write_failed || inbox.closed.load(Ordering::SeqCst);
        let control = if gone {
            Override::CoastToStop {
                decel_mps2: opts.coast_decel_mps2,
            }
        } else {
            let c = inbox.latest.latest();
            Override::Pedals {
                throttle: c.map_or(0.0, |c| c.throttle),
                brake: c.map_or(0.0, |c| c.brake),
            }
        };
        let row = sim.step(Some(control))?;
        if !gone {
            if let Some(out) = sim.advisory().filter(|o| last_sent != Some(o.t_ms)) {
                last_sent = Some(out.t_ms);
                let line = filter.apply(out.to_record()).to_line();
                if let Err(e) = writer.write_all(line.as_bytes()) {
                    log::info!("UI write failed, coasting to a stop: {e}");
                    write_failed = true;
                }
            }
        }
        if sim.finished() || (gone && row.speed_mps < crate::energy::STOP_SPEED_MPS) {
            break;
        }
    }
    let _ = writer.shutdown(std::net::Shutdown::Both);
    let commands = inbox.all.lock().expect("command list poisoned").clone();
    Ok(LiveSession {
        log: sim.into_log(),
        commands,
        ui_disconnected: write_failed || inbox.closed.load(Ordering::SeqCst),
    })
}

/// Streams a logged run as advisory records, paced by the log clock.
/// Returns the number of records written.
pub fn replay(log: &TrajectoryLog, out: &mut dyn Write, pace: f64) -> std::io::Result<usize> {
    let mut filter = DisplayFilter::new();
    let start = Instant::now();
    let records = log.advisory_records();
    let t0 = records.first().map_or(0, |r| r.t_ms);
    for r in &records {
        pace_until(start, r.t_ms - t0, pace);
        out.write_all(filter.apply(*r).to_line().as_bytes())?;
    }
    out.flush()?;
    Ok(records.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_wire_format() {
        let c = UiCommand {
            t_ms: 1200,
            throttle: 0.5,
            brake: 0.0,
        };
        assert_eq!(c.to_line(), "{\"t_ms\":1200,\"throttle\":0.5,\"brake\":0.0}\n");
        assert!(serde_json::from_str::<UiCommand>("{\"t_ms\":1,\"throttle\":0}").is_err());
    }

    #[test]
    fn commands_csv_has_a_header_even_when_empty() {
        assert_eq!(commands_csv(&[]), "t_ms,throttle,brake\n");
        let text = commands_csv(&[UiCommand {
            t_ms: 5,
            throttle: 1.0,
            brake: 0.0,
        }]);
        assert_eq!(text, "t_ms,throttle,brake\n5,1.0,0.0\n");
    }
}
