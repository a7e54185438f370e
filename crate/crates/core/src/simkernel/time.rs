use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

/// Span of simulated time in integer microseconds.
pub type Micros = u64;

pub const MICROS_PER_SEC: Micros = 1_000_000;
pub const MICROS_PER_MS: Micros = 1_000;

/// Converts seconds to microseconds, rounding to the nearest microsecond.
pub fn secs(s: f64) -> Micros {
    (s * MICROS_PER_SEC as f64).round().max(0.0) as Micros
}

pub fn millis(ms: f64) -> Micros {
    (ms * MICROS_PER_MS as f64).round().max(0.0) as Micros
}

/// Converts a nanosecond-precision latency to simulator time, rounding up so
/// that a nonzero latency never collapses to zero.
pub fn ceil_ns(ns: f64) -> Micros {
    if ns <= 0.0 {
        0
    } else {
        (ns / 1_000.0).ceil() as Micros
    }
}

/// A point on the simulated clock, in microseconds since simulation start.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimTime(pub Micros);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn from_secs(s: f64) -> Self {
        SimTime(secs(s))
    }

    pub fn as_micros(self) -> Micros {
        self.0
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 / MICROS_PER_SEC as f64
    }

    pub fn saturating_since(self, earlier: SimTime) -> Micros {
        self.0.saturating_sub(earlier.0)
    }
}

impl Add<Micros> for SimTime {
    type Output = SimTime;
    fn add(self, rhs: Micros) -> SimTime {
        SimTime(self.0 + rhs)
    }
}

impl AddAssign<Micros> for SimTime {
    fn add_assign(&mut self, rhs: Micros) {
        self.0 += rhs;
    }
}

impl Sub for SimTime {
    type Output = Micros;
    fn sub(self, rhs: SimTime) -> Micros {
        debug_assert!(self.0 >= rhs.0, "negative time span");
        self.0 - rhs.0
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}s", self.as_secs())
    }
}
