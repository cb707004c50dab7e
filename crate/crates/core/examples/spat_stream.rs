//! Serves one intersection's SPaT over TCP and reads it back through a
//! lossy link model.
//!
//! ```text
//! cargo run --example spat_stream
//! ```

use std::time::Duration;

use ecodrive::geo::SignalRef;
use ecodrive::spat::{serve, BrokerOptions, ChannelModel, Controller, PhasePlan, SpatSubscriber};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let controller = Controller {
        signal: SignalRef {
            intersection_id: 1201,
            signal_group_id: 2,
        },
        plan: PhasePlan::gar(20.0, 4.0, 16.0, 0.0)?,
    };
    // ten simulated seconds per wall second
    let pace = 10.0;
    let horizon_s = 12;
    let server = serve("127.0.0.1:0", vec![controller], BrokerOptions::default(), pace, Some(horizon_s))?;
    let link = ChannelModel {
        latency_ms: 100,
        jitter_ms: 50,
        drop_probability: 0.1,
    };
    let mut sub = SpatSubscriber::connect(&server.local_addr().to_string(), link, 42)?;
    let start = std::time::Instant::now();
    loop {
        sub.wait_for_traffic(Duration::from_millis(20));
        let now_ms = (start.elapsed().as_secs_f64() * pace * 1000.0) as u64;
        let poll = sub.poll(now_ms);
        for d in &poll.delivered {
            print!("arrived {:>6} ms  {}", d.arrival_ms, d.message.to_line());
        }
        // the broker keeps the socket open after its last tick
        if poll.disconnected || now_ms > (horizon_s + 1) * 1000 {
            break;
        }
    }
    let ch = sub.channel();
    println!("{} sent, {} dropped by the link", ch.sent(), ch.dropped());
    server.stop();
    Ok(())
}
