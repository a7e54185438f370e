use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::time::SimTime;

/// Identifier of the component an event is addressed to.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ComponentId(pub u32);

#[derive(Clone, Debug)]
pub struct SimEvent<P> {
    pub timestamp: SimTime,
    pub sequence: u64,
    pub target: ComponentId,
    pub payload: P,
}

struct Entry<P>(SimEvent<P>);

impl<P> PartialEq for Entry<P> {
    fn eq(&self, other: &Self) -> bool {
        self.0.sequence == other.0.sequence
    }
}
impl<P> Eq for Entry<P> {}
impl<P> PartialOrd for Entry<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<P> Ord for Entry<P> {
    // BinaryHeap is a max-heap; invert so the earliest (timestamp, sequence) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.0.timestamp, other.0.sequence).cmp(&(self.0.timestamp, self.0.sequence))
    }
}

/// Pending events, min-ordered by `(timestamp, sequence)`.
pub struct EventQueue<P> {
    heap: BinaryHeap<Entry<P>>,
    next_sequence: u64,
    clock: SimTime,
}

impl<P> Default for EventQueue<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> EventQueue<P> {
    pub fn new() -> Self {
        Self {
            heap: BinaryHeap::new(),
            next_sequence: 0,
            clock: SimTime::ZERO,
        }
    }

    /// Current simulated time: the timestamp of the last popped event.
    pub fn now(&self) -> SimTime {
        self.clock
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Schedules an event. Scheduling into the past is a logic error and is
    /// clamped to the current clock.
    pub fn push(&mut self, timestamp: SimTime, target: ComponentId, payload: P) -> u64 {
        debug_assert!(timestamp >= self.clock, "event scheduled in the past: {timestamp} < {}", self.clock);
        let timestamp = timestamp.max(self.clock);
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        self.heap.push(Entry(SimEvent {
            timestamp,
            sequence,
            target,
            payload,
        }));
        sequence
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|e| e.0.timestamp)
    }

    pub fn pop(&mut self) -> Option<SimEvent<P>> {
        let ev = self.heap.pop()?.0;
        assert!(ev.timestamp >= self.clock, "clock went backwards");
        self.clock = ev.timestamp;
        Some(ev)
    }

    /// Advances the clock without an event (used when a run stops at a cap).
    pub fn advance_to(&mut self, t: SimTime) {
        if t > self.clock {
            self.clock = t;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pops_in_time_then_sequence_order() {
        let mut q = EventQueue::new();
        q.push(SimTime(5), ComponentId(0), "c");
        q.push(SimTime(1), ComponentId(0), "a");
        q.push(SimTime(5), ComponentId(0), "d");
        q.push(SimTime(3), ComponentId(0), "b");
        let order: Vec<_> = std::iter::from_fn(|| q.pop()).map(|e| e.payload).collect();
        assert_eq!(order, vec!["a", "b", "c", "d"]);
    }

    #[test]
    fn sequences_are_unique() {
        let mut q = EventQueue::new();
        let a = q.push(SimTime(1), ComponentId(0), ());
        let b = q.push(SimTime(1), ComponentId(0), ());
        assert_ne!(a, b);
    }
}
