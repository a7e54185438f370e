use super::jobs::PREFLIGHT_INPUT_BYTES;
use super::*;
use crate::edgesim::{plan_route, Activity, Cell};
use crate::netsim::Endpoint;
use crate::simkernel::{percentile, FailureDetection};
use crate::workloads::AfterRoute;
use rand_distr::{Distribution, Exp};

impl World {
    fn tick_us(&self) -> u64 {
        secs(1.0 / self.class.fps).max(1)
    }

    pub(super) fn start_preflight(&mut self, d: usize, q: &mut EventQueue<Ev>) {
        if self.inject_job(JobKind::Preflight, d, PREFLIGHT_INPUT_BYTES, Vec::new(), q).is_none() {
            self.begin_flight(d, q);
        }
    }

    /// Route computed: take off, start capturing and arrivals.
    pub(super) fn begin_flight(&mut self, d: usize, q: &mut EventQueue<Ev>) {
        let st = &mut self.devices[d];
        if st.flying {
            return;
        }
        st.flying = true;
        let cells = self.coverage.uncovered_of(d);
        self.plan_device_route(d, &cells);
        let now = q.now();
        q.push(now + self.tick_us(), dev_id(d), Ev::FrameTick { device: d });
        match self.arrival {
            ArrivalPattern::Periodic { .. } => {
                q.push(now, dev_id(d), Ev::Arrival { device: d });
            }
            ArrivalPattern::Poisson { mean_gap_s } => {
                let gap = self.poisson_gap(d, mean_gap_s);
                q.push(now + gap, dev_id(d), Ev::Arrival { device: d });
            }
            _ => {}
        }
    }

    fn poisson_gap(&mut self, d: usize, mean_gap_s: f64) -> u64 {
        let exp = Exp::new(1.0 / mean_gap_s).expect("positive mean gap");
        secs(exp.sample(self.devices[d].arrival_rng.rng()))
    }

    fn plan_device_route(&mut self, d: usize, cells: &[Cell]) {
        let start = self.field.cell_at(self.devices[d].dev.pos);
        let route = plan_route(&self.field.grid, start, cells);
        for &c in &route.unreachable {
            self.coverage.drop_cell(c);
            self.counters.unreachable_cells += 1;
        }
        let st = &mut self.devices[d];
        st.dev.path = route.path.into();
        st.dev.visits = route.visits.into();
        st.route_done = false;
        st.capturing = true;
    }

    pub(super) fn drain_device(&mut self, d: usize, a: Activity, q: &mut EventQueue<Ev>) {
        if self.devices[d].dev.drain(&a) {
            self.device_died(d, q);
        }
    }

    fn device_died(&mut self, d: usize, q: &mut EventQueue<Ev>) {
        let st = &mut self.devices[d];
        if st.died_at.is_some() {
            return;
        }
        st.dev.alive = false;
        st.dev.path.clear();
        st.died_at = Some(q.now());
        self.counters.device_failures += 1;
        for job in std::mem::take(&mut self.devices[d].jobs) {
            // a lost frame that saw an unfound target has to be taken again
            if let Some(j) = self.job(job) {
                if j.kind == JobKind::Frame && j.targets.iter().any(|&t| !self.found[t]) {
                    let c = j.cell;
                    self.coverage.reopen(c);
                }
            }
            self.fail_job(job);
        }
        self.check_mission(q);
    }

    pub(super) fn on_frame_tick(&mut self, d: usize, q: &mut EventQueue<Ev>) {
        if self.mission_over || !self.devices[d].dev.alive {
            return;
        }
        let now = q.now();
        let dt = self.tick_us() as f64 / 1e6;
        let field = &self.field;
        let st = &mut self.devices[d];
        let out = st.dev.step_device(dt, st.capturing, |c| field.center(c));
        for &c in &out.reached {
            self.coverage.cover(c, d);
        }
        if out.died {
            self.device_died(d, q);
            return;
        }
        if self.devices[d].dev.path.is_empty() && !self.devices[d].route_done {
            let unc = self.coverage.uncovered_of(d);
            if !unc.is_empty() {
                self.plan_device_route(d, &unc);
            } else {
                match self.workload.profile.after_route {
                    AfterRoute::Hover => {
                        self.devices[d].capturing = false;
                        self.devices[d].route_done = true;
                    }
                    AfterRoute::Resweep => {
                        let cells = self.coverage.cells_of(d);
                        self.plan_device_route(d, &cells);
                        if self.devices[d].dev.path.len() <= 1 {
                            self.devices[d].route_done = true;
                        }
                    }
                }
            }
        }
        if out.frames > 0 {
            self.on_frames(d, out.frames, q);
        }
        self.check_mission(q);
        if !self.mission_over && self.devices[d].dev.alive {
            q.push(now + self.tick_us(), dev_id(d), Ev::FrameTick { device: d });
        }
    }

    fn on_frames(&mut self, d: usize, frames: u32, q: &mut EventQueue<Ev>) {
        let t = q.now().as_secs();
        let frame_bytes = self.class.frame_bytes;
        for _ in 0..frames {
            self.counters.frames_captured += 1;
            match self.arrival {
                ArrivalPattern::PerFrame => {
                    let targets = self.field.visible(self.devices[d].dev.pos, t);
                    self.inject_job(JobKind::Frame, d, frame_bytes, targets, q);
                }
                ArrivalPattern::PerBatch { seconds } => {
                    let targets = self.field.visible(self.devices[d].dev.pos, t);
                    let per_batch = ((seconds * self.class.fps).round() as u32).max(1);
                    let st = &mut self.devices[d];
                    st.batch_frames += 1;
                    for tg in targets {
                        if !st.batch_targets.contains(&tg) {
                            st.batch_targets.push(tg);
                        }
                    }
                    if st.batch_frames >= per_batch {
                        let bytes = st.batch_frames as u64 * frame_bytes;
                        let mut tg = std::mem::take(&mut st.batch_targets);
                        tg.sort_unstable();
                        st.batch_frames = 0;
                        self.inject_job(JobKind::Frame, d, bytes, tg, q);
                    }
                }
                ArrivalPattern::Periodic { .. } | ArrivalPattern::Poisson { .. } => {}
            }
        }
    }

    pub(super) fn on_arrival(&mut self, d: usize, q: &mut EventQueue<Ev>) {
        if self.mission_over || !self.devices[d].dev.alive {
            return;
        }
        let targets = self.field.visible(self.devices[d].dev.pos, q.now().as_secs());
        let bytes = self.workload.profile.input_bytes.unwrap_or(self.class.frame_bytes);
        self.inject_job(JobKind::Frame, d, bytes, targets, q);
        let gap = match self.arrival {
            ArrivalPattern::Periodic { period_s } => secs(period_s),
            ArrivalPattern::Poisson { mean_gap_s } => self.poisson_gap(d, mean_gap_s),
            _ => return,
        };
        q.push(q.now() + gap.max(1), dev_id(d), Ev::Arrival { device: d });
    }

    pub(super) fn on_heartbeat_send(&mut self, d: usize, q: &mut EventQueue<Ev>) {
        if self.mission_over || !self.devices[d].dev.alive {
            return;
        }
        let now = q.now();
        let period = secs(self.net.cfg.heartbeat_period_s);
        let st = &mut self.devices[d];
        st.last_hb_sent = now;
        st.next_hb = now + period;
        q.push(now + period, dev_id(d), Ev::HeartbeatSend { device: d });
        let loss = self.net.cfg.heartbeat_loss;
        if loss > 0.0 && rand::Rng::random::<f64>(self.rng_hb.rng()) < loss {
            return;
        }
        // control traffic is not queued behind bulk transfers
        let hops = self.net.route(Endpoint::Device(d), Endpoint::Cloud);
        let delay = self.net.idle_latency_us(&hops, self.net.cfg.heartbeat_bytes, Some(self.net.cfg.rpc(self.exec.rpc)));
        q.push(now + delay, CONTROL, Ev::HeartbeatRecv { device: d });
    }

    pub(super) fn on_heartbeat_recv(&mut self, d: usize, q: &mut EventQueue<Ev>) {
        if self.mission_over {
            return;
        }
        let (deadline, rejoined) = self.monitor.on_heartbeat(d, q.now());
        q.push(deadline.at, CONTROL, Ev::HeartbeatDeadline(deadline));
        if rejoined {
            self.declared[d] = false;
            self.counters.rejoins += 1;
            self.rejoin(d);
        }
    }

    pub(super) fn on_deadline(&mut self, dl: Deadline, q: &mut EventQueue<Ev>) {
        if self.mission_over || !self.monitor.on_deadline(dl, q.now()) {
            return;
        }
        let d = dl.device;
        self.declared[d] = true;
        self.counters.failures_detected += 1;
        let eligible: Vec<bool> = (0..self.n).map(|k| self.devices[k].dev.alive && !self.declared[k]).collect();
        let region = self.regions[d];
        let mut reassigned = BTreeMap::new();
        let mut region_adjacent = true;
        match self.coverage.repartition_on_failure(d, |k| eligible[k]) {
            Ok(gains) => {
                for (k, cells) in gains {
                    reassigned.insert(format!("d{k}"), cells.len());
                    region_adjacent &= self.regions[k].adjacent(&region);
                    if self.devices[k].flying {
                        let cells = self.coverage.uncovered_of(k);
                        self.plan_device_route(k, &cells);
                    }
                }
            }
            Err(_) => {
                self.mission_infeasible = true;
                self.end_mission(q);
            }
        }
        let st = &self.devices[d];
        self.detections.push(FailureDetection {
            device: format!("d{d}"),
            died_at_s: st.died_at.map_or(-1.0, SimTime::as_secs),
            last_heartbeat_sent_s: st.last_hb_sent.as_secs(),
            declared_at_s: q.now().as_secs(),
            reassigned,
            region_adjacent,
        });
        self.check_mission(q);
    }

    /// A declared device is heard from again: it takes back its region.
    fn rejoin(&mut self, d: usize) {
        let region = self.regions[d];
        let moved = self.coverage.reclaim_on_rejoin(d, &region);
        let mut touched: Vec<usize> = moved.into_iter().map(|(o, _)| o).collect();
        touched.push(d);
        for k in touched {
            if self.devices[k].flying && self.devices[k].dev.alive {
                let cells = self.coverage.uncovered_of(k);
                self.plan_device_route(k, &cells);
            }
        }
    }

    pub(super) fn on_kill(&mut self, d: usize, q: &mut EventQueue<Ev>) {
        if !self.devices[d].dev.alive {
            return;
        }
        // a heartbeat due at this very instant still goes out
        if !self.mission_over && self.devices[d].next_hb == q.now() {
            q.push(q.now(), dev_id(d), Ev::Kill { device: d });
            return;
        }
        self.device_died(d, q);
    }

    pub(super) fn on_replan_tick(&mut self, q: &mut EventQueue<Ev>) {
        if self.mission_over {
            return;
        }
        let now = q.now();
        let Some(r) = self.replanner.as_mut() else { return };
        let interval = r.interval_s();
        let from = now.as_micros().saturating_sub(secs(interval));
        self.window.retain(|(t, _)| t.as_micros() >= from);
        let lat: Vec<f64> = self.window.iter().map(|(_, l)| *l).collect();
        let stats = WindowStats {
            window_s: interval,
            jobs: lat.len(),
            p50_ms: percentile(&lat, 0.5),
            p99_ms: percentile(&lat, 0.99),
            throughput: lat.len() as f64 / interval,
            cloud_function_seconds: (self.cloud_us - self.window_cost) / 1e6,
        };
        self.window_cost = self.cloud_us;
        let current = self.plans.last().expect("initial plan");
        if let Some(plan) = r.replan(now, current, &stats) {
            if self.tasks.iter().all(|t| plan.assignment.contains_key(&t.name)) {
                self.locs.push(self.tasks.iter().map(|t| plan.location(&t.name).clone()).collect());
                self.plans.push(plan);
                self.counters.replans += 1;
            }
        }
        q.push(now + secs(interval), CONTROL, Ev::ReplanTick);
    }
}
