use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::time::{Micros, SimTime};

/// Ticket for a job that has entered service; the owner schedules a
/// completion event at `finish` carrying `token`.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Started {
    pub token: u64,
    pub finish: SimTime,
}

struct Waiting<J> {
    job: J,
    arrival: SimTime,
    service: Micros,
}

struct InService<J> {
    token: u64,
    job: J,
    arrival: SimTime,
    start: SimTime,
}

/// Multi-server FIFO queueing station with time-integrated accounting.
pub struct ServiceStation<J> {
    id: String,
    servers: usize,
    waiting: VecDeque<Waiting<J>>,
    in_service: Vec<InService<J>>,
    next_token: u64,
    acct: Accounting,
}

#[derive(Clone, Debug, Default)]
struct Accounting {
    last_change: SimTime,
    area_in_system: f64,
    area_queue: f64,
    busy_area: f64,
    arrivals: u64,
    completions: u64,
    sojourn_sum: f64,
    wait_sum: f64,
}

/// Snapshot of a station's long-run statistics (times in seconds).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationStats {
    pub id: String,
    pub servers: usize,
    pub elapsed_s: f64,
    pub arrivals: u64,
    pub completions: u64,
    pub in_system: usize,
    pub arrival_rate: f64,
    pub mean_in_system: f64,
    pub mean_queue: f64,
    pub mean_sojourn_s: f64,
    pub mean_wait_s: f64,
    pub busy_time_s: f64,
    pub utilization: f64,
}

impl StationStats {
    /// Relative gap between the time-average number in system and
    /// `arrival_rate * mean_sojourn`. Zero for an untouched station.
    pub fn littles_law_error(&self) -> f64 {
        let lhs = self.mean_in_system;
        let rhs = self.arrival_rate * self.mean_sojourn_s;
        let scale = lhs.max(rhs);
        if scale <= 0.0 {
            0.0
        } else {
            (lhs - rhs).abs() / scale
        }
    }

    /// Same check on the waiting line only.
    pub fn littles_law_queue_error(&self) -> f64 {
        let lhs = self.mean_queue;
        let rhs = self.arrival_rate * self.mean_wait_s;
        let scale = lhs.max(rhs);
        if scale <= 1e-12 {
            0.0
        } else {
            (lhs - rhs).abs() / scale
        }
    }
}

impl<J> ServiceStation<J> {
    pub fn new(id: impl Into<String>, servers: usize) -> Self {
        assert!(servers >= 1, "a station needs at least one server");
        Self {
            id: id.into(),
            servers,
            waiting: VecDeque::new(),
            in_service: Vec::new(),
            next_token: 0,
            acct: Accounting::default(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn servers(&self) -> usize {
        self.servers
    }

    pub fn in_system(&self) -> usize {
        self.waiting.len() + self.in_service.len()
    }

    pub fn queue_len(&self) -> usize {
        self.waiting.len()
    }

    pub fn busy_servers(&self) -> usize {
        self.in_service.len()
    }

    fn integrate(&mut self, now: SimTime) {
        let dt = now.saturating_since(self.acct.last_change) as f64 / 1e6;
        if dt > 0.0 {
            self.acct.area_in_system += dt * self.in_system() as f64;
            self.acct.area_queue += dt * self.waiting.len() as f64;
            self.acct.busy_area += dt * self.in_service.len() as f64;
        }
        if now > self.acct.last_change {
            self.acct.last_change = now;
        }
    }

    fn start(&mut self, now: SimTime, w: Waiting<J>) -> Started {
        let token = self.next_token;
        self.next_token += 1;
        self.acct.wait_sum += (now - w.arrival) as f64 / 1e6;
        self.in_service.push(InService {
            token,
            job: w.job,
            arrival: w.arrival,
            start: now,
        });
        Started {
            token,
            finish: now + w.service,
        }
    }

    /// A job arrives needing `service` microseconds. Returns a ticket if it
    /// entered service immediately.
    pub fn arrive(&mut self, now: SimTime, job: J, service: Micros) -> Option<Started> {
        self.integrate(now);
        self.acct.arrivals += 1;
        let w = Waiting {
            job,
            arrival: now,
            service,
        };
        if self.in_service.len() < self.servers {
            Some(self.start(now, w))
        } else {
            self.waiting.push_back(w);
            None
        }
    }

    /// Completes the job holding `token`, returning it together with the
    /// ticket of the next job started (if any).
    pub fn complete(&mut self, now: SimTime, token: u64) -> Option<(J, Option<Started>)> {
        let idx = self.in_service.iter().position(|s| s.token == token)?;
        self.integrate(now);
        let done = self.in_service.swap_remove(idx);
        debug_assert!(now >= done.start);
        self.acct.completions += 1;
        self.acct.sojourn_sum += (now - done.arrival) as f64 / 1e6;
        let next = self.waiting.pop_front().map(|w| self.start(now, w));
        Some((done.job, next))
    }

    pub fn stats(&self, now: SimTime) -> StationStats {
        let mut acct = self.acct.clone();
        let dt = now.saturating_since(acct.last_change) as f64 / 1e6;
        acct.area_in_system += dt * self.in_system() as f64;
        acct.area_queue += dt * self.waiting.len() as f64;
        acct.busy_area += dt * self.in_service.len() as f64;
        let elapsed = now.as_secs();
        let per_time = |x: f64| if elapsed > 0.0 { x / elapsed } else { 0.0 };
        let per_done = |x: f64| if acct.completions > 0 { x / acct.completions as f64 } else { 0.0 };
        let busy_time = acct.busy_area;
        debug_assert!(busy_time <= elapsed * self.servers as f64 + 1e-6);
        StationStats {
            id: self.id.clone(),
            servers: self.servers,
            elapsed_s: elapsed,
            arrivals: acct.arrivals,
            completions: acct.completions,
            in_system: self.in_system(),
            arrival_rate: per_time(acct.arrivals as f64),
            mean_in_system: per_time(acct.area_in_system),
            mean_queue: per_time(acct.area_queue),
            mean_sojourn_s: per_done(acct.sojourn_sum),
            mean_wait_s: per_done(acct.wait_sum),
            busy_time_s: busy_time,
            utilization: per_time(busy_time) / self.servers as f64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_server_fifo() {
        let mut st = ServiceStation::new("s", 1);
        let a = st.arrive(SimTime(0), "a", 10).unwrap();
        assert_eq!(a.finish, SimTime(10));
        assert!(st.arrive(SimTime(2), "b", 5).is_none());
        let (job, next) = st.complete(SimTime(10), a.token).unwrap();
        assert_eq!(job, "a");
        let next = next.unwrap();
        assert_eq!(next.finish, SimTime(15));
        let (job, none) = st.complete(SimTime(15), next.token).unwrap();
        assert_eq!(job, "b");
        assert!(none.is_none());
        let s = st.stats(SimTime(15));
        assert_eq!(s.completions, 2);
        // b waited 8us, a none.
        assert!((s.mean_wait_s - 4e-6).abs() < 1e-12);
        assert!(s.busy_time_s <= s.elapsed_s);
        assert!(s.littles_law_error() < 1e-9);
    }

    #[test]
    fn unknown_token_is_none() {
        let mut st: ServiceStation<()> = ServiceStation::new("s", 2);
        assert!(st.complete(SimTime(1), 99).is_none());
    }
}
