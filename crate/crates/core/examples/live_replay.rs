//! Drives a live session from a scripted UI client, then replays the
//! recorded run as the advisory stream a display would receive.
//!
//! ```text
//! cargo run --example live_replay
//! ```

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::thread;

use ecodrive::advisor::AdvisoryRecord;
use ecodrive::cli::{replay, run_live, LiveOptions, UiCommand};
use ecodrive::fixtures;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?;

    // the stand-in UI: hold speed for ten seconds, brake gently, then leave
    let ui = thread::spawn(move || -> std::io::Result<()> {
        let mut stream = TcpStream::connect(addr)?;
        let mut lines = BufReader::new(stream.try_clone()?).lines();
        while let Some(line) = lines.next() {
            let r = AdvisoryRecord::from_line(&line?).map_err(std::io::Error::other)?;
            if r.t_ms == 10_000 {
                let c = UiCommand {
                    t_ms: r.t_ms,
                    throttle: 0.0,
                    brake: 0.2,
                };
                stream.write_all(c.to_line().as_bytes())?;
            }
            if r.t_ms >= 15_000 {
                break;
            }
        }
        Ok(())
    });

    let scenario = fixtures::scenario("acceleration_eco")?;
    let opts = LiveOptions {
        pace: 20.0,
        ..LiveOptions::default()
    };
    let session = run_live(&scenario, &listener, &opts)?;
    ui.join().expect("UI thread")?;
    let last = session.log.rows().last().expect("session logs rows");
    println!(
        "session: {} commands, ended at t = {:.1} s, {:.2} m/s",
        session.commands.len(),
        last.t_s,
        last.speed_mps
    );

    let mut out = Vec::new();
    let n = replay(&session.log, &mut out, 0.0)?;
    println!("replayed {n} records; every fiftieth:");
    for line in String::from_utf8(out)?.lines().step_by(50) {
        println!("  {line}");
    }
    Ok(())
}
