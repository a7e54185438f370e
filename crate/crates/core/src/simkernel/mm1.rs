//! Single-station Poisson queue used to check the kernel against closed-form
//! queueing results.

use super::dist::{sample, DistSpec};
use super::engine::{run, Model, RunLimits, RunOutcome};
use super::queue::{ComponentId, EventQueue, SimEvent};
use super::rng::RngStream;
use super::station::{ServiceStation, StationStats, Started};
use super::time::SimTime;
use super::SimError;

#[derive(Clone, Debug)]
pub struct PoissonQueueConfig {
    /// Arrivals per second.
    pub arrival_rate: f64,
    /// Services per second per server.
    pub service_rate: f64,
    pub servers: usize,
    pub arrivals: u64,
    pub seed: u64,
    /// Simulated-time cap in seconds, used when there are no arrivals.
    pub time_cap_s: f64,
}

impl PoissonQueueConfig {
    pub fn mm1(arrival_rate: f64, service_rate: f64, arrivals: u64, seed: u64) -> Self {
        Self {
            arrival_rate,
            service_rate,
            servers: 1,
            arrivals,
            seed,
            time_cap_s: 3_600.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PoissonQueueResult {
    pub mean_sojourn_s: f64,
    pub completed: u64,
    pub station: StationStats,
    pub outcome: RunOutcome,
}

enum Ev {
    Arrival,
    Departure(u64),
}

struct PoissonQueue {
    station: ServiceStation<u64>,
    interarrival: Option<DistSpec>,
    service: DistSpec,
    arrivals_rng: RngStream,
    service_rng: RngStream,
    remaining: u64,
    next_id: u64,
}

const STATION: ComponentId = ComponentId(0);

impl PoissonQueue {
    fn schedule_departure(&self, started: Started, q: &mut EventQueue<Ev>) {
        q.push(started.finish, STATION, Ev::Departure(started.token));
    }

    fn schedule_arrival(&mut self, q: &mut EventQueue<Ev>) {
        if self.remaining == 0 {
            return;
        }
        if let Some(d) = &self.interarrival {
            let gap = sample(d, &mut self.arrivals_rng).expect("validated");
            q.push(q.now() + gap, STATION, Ev::Arrival);
        }
    }
}

impl Model for PoissonQueue {
    type Event = Ev;

    fn handle(&mut self, event: SimEvent<Ev>, q: &mut EventQueue<Ev>) {
        let now = event.timestamp;
        match event.payload {
            Ev::Arrival => {
                self.remaining -= 1;
                let id = self.next_id;
                self.next_id += 1;
                let service = sample(&self.service, &mut self.service_rng).expect("validated");
                if let Some(s) = self.station.arrive(now, id, service) {
                    self.schedule_departure(s, q);
                }
                self.schedule_arrival(q);
            }
            Ev::Departure(token) => {
                if let Some((_, Some(next))) = self.station.complete(now, token) {
                    self.schedule_departure(next, q);
                }
            }
        }
    }

    fn event_kind(event: &Ev) -> &'static str {
        match event {
            Ev::Arrival => "arrival",
            Ev::Departure(_) => "departure",
        }
    }

    fn component_name(&self, _id: ComponentId) -> String {
        self.station.id().to_string()
    }
}

/// Runs the queue until every arrival has departed.
pub fn simulate(cfg: &PoissonQueueConfig) -> Result<PoissonQueueResult, SimError> {
    if cfg.service_rate <= 0.0 || cfg.servers == 0 {
        return Err(SimError::Config("service rate and servers must be positive".into()));
    }
    let service = DistSpec::exponential_ms(1_000.0 / cfg.service_rate);
    service.validate()?;
    let interarrival = if cfg.arrival_rate > 0.0 {
        let d = DistSpec::exponential_ms(1_000.0 / cfg.arrival_rate);
        d.validate()?;
        Some(d)
    } else {
        None
    };
    let mut model = PoissonQueue {
        station: ServiceStation::new("mm-station", cfg.servers),
        interarrival,
        service,
        arrivals_rng: RngStream::new(cfg.seed, 1),
        service_rng: RngStream::new(cfg.seed, 2),
        remaining: if cfg.arrival_rate > 0.0 { cfg.arrivals } else { 0 },
        next_id: 0,
    };
    let mut q = EventQueue::new();
    model.schedule_arrival(&mut q);
    let limits = RunLimits {
        time_cap: Some(SimTime::from_secs(cfg.time_cap_s)),
        ..RunLimits::default()
    };
    let limits = if model.remaining > 0 {
        RunLimits {
            time_cap: None,
            ..limits
        }
    } else {
        limits
    };
    let outcome = run(&mut model, &mut q, &limits, None)?;
    let station = model.station.stats(outcome.final_time);
    Ok(PoissonQueueResult {
        mean_sojourn_s: station.mean_sojourn_s,
        completed: station.completions,
        station,
        outcome,
    })
}

/// Analytic M/M/1 mean sojourn time, `1 / (mu - lambda)`.
pub fn mm1_mean_sojourn(arrival_rate: f64, service_rate: f64) -> Option<f64> {
    (arrival_rate < service_rate).then(|| 1.0 / (service_rate - arrival_rate))
}
