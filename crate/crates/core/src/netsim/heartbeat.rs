use crate::simkernel::{Micros, SimTime};

/// Controller-side failure detector: a device is declared failed once more
/// than `timeout` has elapsed since its last received heartbeat.
#[derive(Clone, Debug)]
pub struct HeartbeatMonitor {
    pub timeout: Micros,
    last_rx: Vec<SimTime>,
    generation: Vec<u64>,
    declared: Vec<bool>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Deadline {
    pub device: usize,
    pub at: SimTime,
    pub generation: u64,
}

impl HeartbeatMonitor {
    pub fn new(devices: usize, timeout: Micros, start: SimTime) -> Self {
        Self {
            timeout,
            last_rx: vec![start; devices],
            generation: vec![0; devices],
            declared: vec![false; devices],
        }
    }

    pub fn deadline(&self, device: usize) -> Deadline {
        Deadline {
            device,
            at: self.last_rx[device] + self.timeout + 1,
            generation: self.generation[device],
        }
    }

    /// Record a received heartbeat. Returns the new deadline and whether the
    /// device had been declared failed (a rejoin).
    pub fn on_heartbeat(&mut self, device: usize, now: SimTime) -> (Deadline, bool) {
        self.last_rx[device] = now;
        self.generation[device] += 1;
        let rejoined = std::mem::replace(&mut self.declared[device], false);
        (self.deadline(device), rejoined)
    }

    /// Handle a deadline event; returns true when the device is newly declared failed.
    pub fn on_deadline(&mut self, d: Deadline, now: SimTime) -> bool {
        if d.generation != self.generation[d.device] || self.declared[d.device] {
            return false;
        }
        if now - self.last_rx[d.device] > self.timeout {
            self.declared[d.device] = true;
            return true;
        }
        false
    }

    /// Scan for devices silent longer than the timeout.
    pub fn monitor_heartbeats(&mut self, now: SimTime) -> Vec<usize> {
        let mut out = Vec::new();
        for d in 0..self.last_rx.len() {
            if !self.declared[d] && now.saturating_since(self.last_rx[d]) > self.timeout {
                self.declared[d] = true;
                out.push(d);
            }
        }
        out
    }

    pub fn is_declared(&self, device: usize) -> bool {
        self.declared[device]
    }

    pub fn last_rx(&self, device: usize) -> SimTime {
        self.last_rx[device]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simkernel::secs;

    #[test]
    fn strict_boundary() {
        let mut m = HeartbeatMonitor::new(1, secs(3.0), SimTime(0));
        // two heartbeats lost, third arrives exactly 3 s later
        assert!(m.monitor_heartbeats(SimTime(secs(3.0))).is_empty());
        let (d, rejoined) = m.on_heartbeat(0, SimTime(secs(3.0)));
        assert!(!rejoined);
        assert_eq!(d.at, SimTime(secs(6.0) + 1));
    }

    #[test]
    fn dead_device_detected_in_window() {
        let mut m = HeartbeatMonitor::new(1, secs(3.0), SimTime(0));
        let delay = 2_000;
        let mut last = None;
        for k in 0..=10u64 {
            last = Some(m.on_heartbeat(0, SimTime(secs(k as f64) + delay)).0);
        }
        let d = last.unwrap();
        assert!(!m.on_deadline(d, SimTime(d.at.as_micros() - 1)));
        assert!(m.on_deadline(d, d.at));
        let latency = d.at.as_micros() - secs(10.0);
        assert!(latency > secs(3.0) && latency <= secs(4.0));
    }

    #[test]
    fn stale_deadline_ignored_and_rejoin() {
        let mut m = HeartbeatMonitor::new(1, secs(3.0), SimTime(0));
        let d0 = m.deadline(0);
        m.on_heartbeat(0, SimTime(secs(1.0)));
        assert!(!m.on_deadline(d0, d0.at));
        assert_eq!(m.monitor_heartbeats(SimTime(secs(4.5))), vec![0]);
        let (_, rejoined) = m.on_heartbeat(0, SimTime(secs(5.0)));
        assert!(rejoined);
    }
}
