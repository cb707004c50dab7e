use std::time::Duration;

use super::{
    integrate, Driver, DriverView, LeadVehicle, LogHeader, LogRow, Scenario, SimError, TrajectoryLog,
    TruckState,
};
use crate::advisor::{AdvisoryLoop, AdvisoryOutput, Localization, SpeedBand};
use crate::energy::{fuel_rate, tractive_power};
use crate::spat::{
    broadcast_tick, Broker, BrokerOptions, Controller, Delivered, LossyChannel, SpatMessage,
    SpatSubscriber,
};

/// How SPaT reaches the advisory loop during a run. Both paths feed the same
/// seeded link model, so they produce identical logs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Transport {
    /// Messages are encoded to wire lines and decoded again in-process.
    #[default]
    InProcess,
    /// A loopback TCP broker and subscriber, advanced in lock step.
    Tcp,
}

const TCP_STEP_TIMEOUT: Duration = Duration::from_secs(5);

enum Feed {
    InProcess(LossyChannel),
    Tcp {
        // the broker must outlive the subscriber's connection
        broker: Broker,
        subscriber: SpatSubscriber,
    },
}

impl Feed {
    fn publish(&mut self, batch: &[SpatMessage]) -> Result<(), SimError> {
        match self {
            Feed::InProcess(channel) => {
                for m in batch {
                    channel.send(SpatMessage::from_line(&m.to_line())?);
                }
            }
            Feed::Tcp { broker, subscriber } => {
                broker.publish(batch);
                subscriber.pump(batch.len(), TCP_STEP_TIMEOUT)?;
            }
        }
        Ok(())
    }

    fn poll(&mut self, now_ms: u64) -> Vec<Delivered> {
        match self {
            Feed::InProcess(channel) => channel.poll(now_ms),
            Feed::Tcp { subscriber, .. } => subscriber.poll(now_ms).delivered,
        }
    }
}

/// Driver input that replaces the driver model for one step, as sent by
/// the DVI in live mode. Pedal positions are in [0, 1]; brake wins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Override {
    Pedals { throttle: f64, brake: f64 },
    /// Coast down at this deceleration, used when the UI goes away.
    CoastToStop { decel_mps2: f64 },
}

/// One scenario on a simulated clock. Each [`Simulation::step`] advances
/// exactly `dt` and returns the logged row.
pub struct Simulation {
    scenario: Scenario,
    controllers: Vec<Controller>,
    feed: Feed,
    advisory: AdvisoryLoop,
    driver: Driver,
    lead: Option<LeadVehicle>,
    truck: TruckState,
    last_output: Option<AdvisoryOutput>,
    t_ms: u64,
    dt_ms: u64,
    advisory_period_ms: u64,
    log: TrajectoryLog,
    min_lead_gap_m: Option<f64>,
}

impl Simulation {
    pub fn new(scenario: &Scenario, transport: Transport) -> Result<Self, SimError> {
        let cfg = &scenario.config;
        let feed = match transport {
            Transport::InProcess => Feed::InProcess(LossyChannel::new(cfg.channel, cfg.seed)?),
            Transport::Tcp => {
                let broker = Broker::bind("127.0.0.1:0", BrokerOptions { queue_bound: 1024 })?;
                let subscriber =
                    SpatSubscriber::connect(&broker.local_addr().to_string(), cfg.channel, cfg.seed)?;
                if !broker.wait_for_subscribers(1, TCP_STEP_TIMEOUT) {
                    return Err(SimError::Config("loopback SPaT subscriber never connected".into()));
                }
                Feed::Tcp { broker, subscriber }
            }
        };
        let advisory = AdvisoryLoop::new(
            std::sync::Arc::clone(&scenario.map),
            scenario.plans.clone(),
            cfg.advisor,
        )
        .without_log();
        let lead = if cfg.lead.is_empty() {
            None
        } else {
            Some(LeadVehicle::new(cfg.lead.clone())?)
        };
        let (position, heading_deg) = scenario.route.pose(0.0);
        let header = LogHeader {
            scenario: cfg.name.clone(),
            driver: cfg.driver.to_string(),
            digest: scenario.digest().to_string(),
            seed: cfg.seed,
            dt_s: format!("{}", cfg.dt_s),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
        };
        Ok(Simulation {
            controllers: scenario.controllers(),
            feed,
            advisory,
            driver: Driver::new(cfg.driver, cfg.driver_params, cfg.truck),
            lead,
            truck: TruckState {
                position,
                heading_deg,
                speed_mps: cfg.start.speed_mps,
                accel_mps2: 0.0,
                odometer_m: 0.0,
                t_s: 0.0,
            },
            last_output: None,
            t_ms: 0,
            dt_ms: cfg.dt_ms(),
            advisory_period_ms: (1000.0 / cfg.advisor.rate_hz).round() as u64,
            log: TrajectoryLog::new(header),
            min_lead_gap_m: None,
            scenario: scenario.clone(),
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn truck(&self) -> &TruckState {
        &self.truck
    }

    pub fn t_ms(&self) -> u64 {
        self.t_ms
    }

    pub fn log(&self) -> &TrajectoryLog {
        &self.log
    }

    pub fn into_log(self) -> TrajectoryLog {
        self.log
    }

    /// Smallest bumper-to-bumper gap to the scripted lead so far.
    pub fn min_lead_gap_m(&self) -> Option<f64> {
        self.min_lead_gap_m
    }

    /// The last advisory computed.
    pub fn advisory(&self) -> Option<&AdvisoryOutput> {
        self.last_output.as_ref()
    }

    /// True once the configured horizon or distance is reached.
    pub fn finished(&self) -> bool {
        let cfg = &self.scenario.config;
        self.t_ms as f64 >= cfg.duration_s * 1000.0 - 1e-6
            || cfg
                .end_odometer_m
                .is_some_and(|end| self.truck.odometer_m >= end)
    }

    pub fn step(&mut self, control: Option<Override>) -> Result<LogRow, SimError> {
        let cfg = &self.scenario.config;
        let t_ms = self.t_ms;
        let t_s = t_ms as f64 / 1000.0;
        let dt_s = self.dt_ms as f64 / 1000.0;

        if t_ms % 1000 == 0 {
            let batch = broadcast_tick(&self.controllers, t_ms);
            self.feed.publish(&batch)?;
        }
        let delivered = self.feed.poll(t_ms);
        self.advisory.ingest(&delivered);

        let odo = self.truck.odometer_m;
        let v = self.truck.speed_mps;
        let lead = self.lead.as_mut().map(|l| {
            l.advance(t_s, dt_s, odo);
            l
        });
        let lead_obs = lead.and_then(|l| l.observe(odo, v));
        if let Some(o) = lead_obs {
            self.min_lead_gap_m = Some(self.min_lead_gap_m.map_or(o.gap_m, |g| g.min(o.gap_m)));
        }

        if t_ms % self.advisory_period_ms == 0 || self.last_output.is_none() {
            let loc = Localization {
                position: self.truck.position,
                heading_deg: self.truck.heading_deg,
                speed_mps: v,
            };
            self.last_output = Some(self.advisory.tick(t_ms, &loc, lead_obs));
        }
        let out = self.last_output.clone().expect("advisory computed above");

        let truth = self.scenario.route.next_signal(odo).map(|(sig, d)| {
            let (phase, _) = self.scenario.plans[&sig].state_at_ms(t_ms);
            (phase, d)
        });
        let view = DriverView {
            t_s,
            speed_mps: v,
            speed_limit_mps: self.scenario.route.speed_limit(odo),
            signal: truth,
            lead: lead_obs,
        };
        let shown_band: SpeedBand = out.band;
        let command = self.driver.command(&view, &shown_band);
        let (accel, params) = match control {
            None if command.emergency => (command.accel_mps2, cfg.truck.emergency()),
            None => (command.accel_mps2, cfg.truck),
            Some(Override::Pedals { throttle, brake }) => {
                let a = if brake > 0.0 {
                    -brake.clamp(0.0, 1.0) * cfg.truck.max_decel_mps2
                } else {
                    throttle.clamp(0.0, 1.0) * cfg.truck.max_accel_mps2
                };
                (a, cfg.truck)
            }
            Some(Override::CoastToStop { decel_mps2 }) => (-decel_mps2.abs(), cfg.truck),
        };
        let step = integrate(v, accel, &params, dt_s);
        let power = tractive_power(v, step.accel_mps2, 0.0, &cfg.energy);

        let row = LogRow {
            t_s,
            lat: self.truck.position.lat,
            lon: self.truck.position.lon,
            speed_mps: v,
            accel_mps2: step.accel_mps2,
            d_sig_m: out.d_sig_m,
            phase: out.phase(),
            v_lower_mps: out.band.v_lower_mps,
            v_upper_mps: out.band.v_upper_mps,
            gating: out.band.gating,
            fuel_rate_gps: fuel_rate(power, &cfg.energy),
        };
        self.log.push(row);

        let odo = self.truck.odometer_m + step.displacement_m;
        let (position, heading_deg) = self.scenario.route.pose(odo);
        self.t_ms += self.dt_ms;
        self.truck = TruckState {
            position,
            heading_deg,
            speed_mps: step.speed_mps,
            accel_mps2: step.accel_mps2,
            odometer_m: odo,
            t_s: self.t_ms as f64 / 1000.0,
        };
        Ok(row)
    }
}

/// Runs a scenario to completion. Identical scenarios (including seed) give
/// byte-identical logs.
pub fn run_scenario(scenario: &Scenario) -> Result<TrajectoryLog, SimError> {
    run_scenario_with(scenario, Transport::InProcess)
}

pub fn run_scenario_with(scenario: &Scenario, transport: Transport) -> Result<TrajectoryLog, SimError> {
    let mut sim = Simulation::new(scenario, transport)?;
    loop {
        sim.step(None)?;
        if sim.finished() {
            break;
        }
    }
    Ok(sim.into_log())
}
