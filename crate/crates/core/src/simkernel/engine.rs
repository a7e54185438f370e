use std::io::Write;
use std::time::{Duration, Instant};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::queue::{ComponentId, EventQueue, SimEvent};
use super::time::SimTime;
use super::SimError;

/// A simulated world driven by the engine.
pub trait Model {
    type Event;

    fn handle(&mut self, event: SimEvent<Self::Event>, queue: &mut EventQueue<Self::Event>);

    /// Short tag naming the event kind, used for traces and the trace hash.
    fn event_kind(event: &Self::Event) -> &'static str;

    /// Extra payload bytes folded into the trace hash.
    fn event_digest(_event: &Self::Event) -> u64 {
        0
    }

    fn component_name(&self, id: ComponentId) -> String {
        format!("c{}", id.0)
    }

    /// True once the model wants the run to stop regardless of pending events.
    fn finished(&self) -> bool {
        false
    }
}

#[derive(Clone, Debug)]
pub struct RunLimits {
    pub time_cap: Option<SimTime>,
    pub event_cap: Option<u64>,
    /// Maximum consecutive events at one timestamp before declaring livelock.
    pub stall_cap: u64,
    pub wall_clock_cap: Option<Duration>,
}

impl Default for RunLimits {
    fn default() -> Self {
        Self {
            time_cap: None,
            event_cap: None,
            stall_cap: 5_000_000,
            wall_clock_cap: None,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Drained,
    ModelFinished,
    TimeCap,
    EventCap,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub reason: StopReason,
    pub events_processed: u64,
    pub final_time: SimTime,
    pub trace_hash: String,
}

#[derive(Serialize)]
struct TraceLine<'a> {
    timestamp: u64,
    component: &'a str,
    kind: &'a str,
}

/// Processes events until the queue drains, the model reports completion or
/// a cap is reached. Identical model state and queue contents always yield
/// the identical event trace and trace hash.
pub fn run<M: Model>(
    model: &mut M,
    queue: &mut EventQueue<M::Event>,
    limits: &RunLimits,
    mut trace: Option<&mut dyn Write>,
) -> Result<RunOutcome, SimError> {
    let started = Instant::now();
    let mut hasher = Sha256::new();
    let mut processed: u64 = 0;
    let mut stall: u64 = 0;
    let mut last_time = queue.now();

    let reason = loop {
        if model.finished() {
            break StopReason::ModelFinished;
        }
        let Some(next_time) = queue.peek_time() else {
            break StopReason::Drained;
        };
        if let Some(cap) = limits.time_cap {
            if next_time > cap {
                queue.advance_to(cap);
                break StopReason::TimeCap;
            }
        }
        if let Some(cap) = limits.event_cap {
            if processed >= cap {
                break StopReason::EventCap;
            }
        }
        if let Some(wall) = limits.wall_clock_cap {
            if processed.is_multiple_of(4096) && started.elapsed() > wall {
                return Err(SimError::WallClockExceeded {
                    sim_time: queue.now(),
                    events: processed,
                });
            }
        }

        let event = queue.pop().expect("peeked");
        if event.timestamp == last_time {
            stall += 1;
            if stall > limits.stall_cap {
                return Err(SimError::Livelock {
                    at: event.timestamp,
                    events: stall,
                });
            }
        } else {
            stall = 0;
            last_time = event.timestamp;
        }

        let kind = M::event_kind(&event.payload);
        hasher.update(event.timestamp.0.to_le_bytes());
        hasher.update(event.target.0.to_le_bytes());
        hasher.update(kind.as_bytes());
        hasher.update(M::event_digest(&event.payload).to_le_bytes());
        if let Some(w) = trace.as_deref_mut() {
            let name = model.component_name(event.target);
            let line = TraceLine {
                timestamp: event.timestamp.0,
                component: &name,
                kind,
            };
            serde_json::to_writer(&mut *w, &line).map_err(|e| SimError::Io(e.to_string()))?;
            w.write_all(b"\n").map_err(|e| SimError::Io(e.to_string()))?;
        }
        processed += 1;
        model.handle(event, queue);
    };

    Ok(RunOutcome {
        reason,
        events_processed: processed,
        final_time: queue.now(),
        trace_hash: hex::encode(hasher.finalize()),
    })
}
