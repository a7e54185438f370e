use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::grid::Cell;
use crate::simkernel::SimError;

/// Parameters shared by all devices of one kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeviceClass {
    pub name: String,
    pub speed_mps: f64,
    pub cores: usize,
    pub fps: f64,
    pub frame_bytes: u64,
    pub battery_pct: f64,
    /// Battery percent per second of flight.
    pub motion_pct_per_s: f64,
    /// Battery percent per second of hovering in place.
    pub hover_pct_per_s: f64,
    pub compute_pct_per_core_ms: f64,
    pub radio_pct_per_byte: f64,
}

impl Default for DeviceClass {
    fn default() -> Self {
        Self::drone()
    }
}

impl DeviceClass {
    pub fn drone() -> Self {
        Self {
            name: "drone".into(),
            speed_mps: 4.0,
            cores: 2,
            fps: 8.0,
            frame_bytes: 2_000_000,
            battery_pct: 100.0,
            motion_pct_per_s: 0.12,
            hover_pct_per_s: 0.1,
            compute_pct_per_core_ms: 2e-5,
            radio_pct_per_byte: 2e-9,
        }
    }

    /// Ground vehicle: no hover term and a larger battery (smaller drain per unit).
    pub fn car() -> Self {
        Self {
            name: "car".into(),
            speed_mps: 4.0,
            motion_pct_per_s: 0.06,
            hover_pct_per_s: 0.0,
            compute_pct_per_core_ms: 1e-5,
            radio_pct_per_byte: 1e-9,
            ..Self::drone()
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "drone" => Some(Self::drone()),
            "car" => Some(Self::car()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let rates = [
            self.motion_pct_per_s,
            self.hover_pct_per_s,
            self.compute_pct_per_core_ms,
            self.radio_pct_per_byte,
        ];
        if self.speed_mps <= 0.0 || self.fps <= 0.0 || self.frame_bytes == 0 || self.cores == 0 {
            return Err(SimError::Config(format!("device class '{}': speed, fps, frame size and cores must be positive", self.name)));
        }
        if rates.iter().any(|r| *r < 0.0) || !(0.0..=100.0).contains(&self.battery_pct) || self.battery_pct == 0.0 {
            return Err(SimError::Config(format!("device class '{}': bad battery parameters", self.name)));
        }
        Ok(())
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq)]
pub struct Activity {
    pub motion_s: f64,
    pub hover_s: f64,
    pub compute_core_ms: f64,
    pub radio_bytes: f64,
}

/// Linear power model. Never returns less than zero.
pub fn drain_battery(battery: f64, class: &DeviceClass, a: &Activity) -> f64 {
    let used = class.motion_pct_per_s * a.motion_s
        + class.hover_pct_per_s * a.hover_s
        + class.compute_pct_per_core_ms * a.compute_core_ms
        + class.radio_pct_per_byte * a.radio_bytes;
    (battery - used).max(0.0)
}

#[derive(Clone, Debug)]
pub struct EdgeDevice {
    pub id: usize,
    pub class: DeviceClass,
    pub pos: (f64, f64),
    pub battery: f64,
    pub alive: bool,
    /// Remaining cell centers to fly through, in order.
    pub path: VecDeque<Cell>,
    /// Remaining cells this device must cover, in visit order.
    pub visits: VecDeque<Cell>,
    frame_phase: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepOutcome {
    pub reached: Vec<Cell>,
    pub moved_m: f64,
    pub frames: u32,
    pub died: bool,
}

impl EdgeDevice {
    pub fn new(id: usize, class: DeviceClass, pos: (f64, f64)) -> Self {
        let battery = class.battery_pct;
        Self {
            id,
            class,
            pos,
            battery,
            alive: true,
            path: VecDeque::new(),
            visits: VecDeque::new(),
            frame_phase: 0.0,
        }
    }

    pub fn drain(&mut self, a: &Activity) -> bool {
        if !self.alive {
            return false;
        }
        self.battery = drain_battery(self.battery, &self.class, a);
        if self.battery <= 0.0 {
            self.alive = false;
            self.path.clear();
            return true;
        }
        false
    }

    /// Advance `dt` seconds: move along the path at constant speed, count
    /// frames at the device's rate and drain motion or hover power.
    /// `center` maps a cell to its center in meters.
    pub fn step_device(&mut self, dt: f64, capture: bool, center: impl Fn(Cell) -> (f64, f64)) -> StepOutcome {
        let mut out = StepOutcome::default();
        if !self.alive {
            return out;
        }
        let mut budget = self.class.speed_mps * dt;
        while budget > 0.0 {
            let Some(&next) = self.path.front() else { break };
            let to = center(next);
            let d = ((to.0 - self.pos.0).powi(2) + (to.1 - self.pos.1).powi(2)).sqrt();
            if d <= budget + 1e-9 {
                self.pos = to;
                budget -= d;
                out.moved_m += d;
                out.reached.push(next);
                self.path.pop_front();
            } else {
                let f = budget / d;
                self.pos = (self.pos.0 + f * (to.0 - self.pos.0), self.pos.1 + f * (to.1 - self.pos.1));
                out.moved_m += budget;
                budget = 0.0;
            }
        }
        if capture {
            self.frame_phase += dt * self.class.fps;
            let f = (self.frame_phase + 1e-9).floor();
            self.frame_phase -= f;
            out.frames = f as u32;
        }
        let motion_s = out.moved_m / self.class.speed_mps;
        out.died = self.drain(&Activity {
            motion_s,
            hover_s: (dt - motion_s).max(0.0),
            ..Activity::default()
        });
        out
    }
}
