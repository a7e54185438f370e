use super::*;
use crate::netsim::Endpoint;
use crate::simkernel::{sample, millis};
use crate::synth::DataPathKind;
use crate::workloads::{EmitRule, OutputSize};

/// Size of the map a device uploads for its pre-flight tasks.
pub(super) const PREFLIGHT_INPUT_BYTES: u64 = 4_096;

impl World {
    fn job_mut(&mut self, job: JobId) -> Option<&mut Job> {
        self.jobs.get_mut(job).and_then(|j| j.as_deref_mut())
    }

    pub(super) fn job(&self, job: JobId) -> Option<&Job> {
        self.jobs.get(job).and_then(|j| j.as_deref())
    }

    /// Creates a job of `kind` on `device` and starts its root tasks.
    /// Returns `None` when the job class has no tasks.
    pub(super) fn inject_job(
        &mut self,
        kind: JobKind,
        device: usize,
        input_bytes: u64,
        targets: Vec<usize>,
        q: &mut EventQueue<Ev>,
    ) -> Option<JobId> {
        let plan = self.current_plan();
        let mut insts = vec![Inst::default(); self.tasks.len()];
        let mut unresolved = 0;
        let mut roots = Vec::new();
        for &t in &self.topo {
            let m = &self.tasks[t];
            if (kind == JobKind::Preflight) != m.preflight {
                continue;
            }
            insts[t].st = St::Waiting;
            insts[t].parents_left = m.parents.len() as u32;
            unresolved += 1;
            if m.parents.is_empty() {
                roots.push(t);
            }
        }
        if unresolved == 0 {
            return None;
        }
        let id = self.jobs.len();
        let cell = self.field.cell_at(self.devices[device].dev.pos);
        self.jobs.push(Some(Box::new(Job {
            kind,
            device,
            cell,
            captured: q.now(),
            targets,
            input_bytes,
            plan,
            insts,
            unresolved,
            crit_net_us: 0,
            crit_cold_us: 0,
        })));
        if kind == JobKind::Frame {
            self.counters.jobs_injected += 1;
            self.frame_jobs_live += 1;
        }
        self.devices[device].jobs.push(id);
        for r in roots {
            let Some(job) = self.job_mut(id) else { break };
            let inst = &mut job.insts[r];
            inst.emitting_parents = 1;
            inst.in_bytes = input_bytes;
            if self.tier(plan, r, device) == Tier::Edge {
                self.start_instance(id, r, q);
            } else {
                self.job_mut(id).expect("live job").insts[r].inputs_left = 1;
                let rpc = self.rpc_us(None);
                self.start_transfer(
                    Endpoint::Device(device),
                    Endpoint::Cloud,
                    input_bytes,
                    rpc,
                    Dest::Input { job: id, task: r },
                    (0, 0),
                    q,
                );
            }
        }
        Some(id)
    }

    /// RPC overhead for a cross-tier transfer on `path`, or the run default.
    pub(super) fn rpc_us(&self, path: Option<DataPathKind>) -> u64 {
        let kind = match path {
            Some(DataPathKind::RpcAccelerated) => crate::netsim::RpcKind::Accelerated,
            Some(DataPathKind::RpcCloudEdge) => crate::netsim::RpcKind::Baseline,
            _ => self.exec.rpc,
        };
        self.net.cfg.rpc(kind).overhead_us.ceil() as u64
    }

    /// All inputs are present: run the instance on its tier.
    fn start_instance(&mut self, job: JobId, t: usize, q: &mut EventQueue<Ev>) {
        let now = q.now();
        let (device, plan) = {
            let j = self.job(job).expect("live job");
            (j.device, j.plan)
        };
        let tier = self.tier(plan, t, device);
        let sync = self.tasks[t].sync;
        {
            let inst = &mut self.job_mut(job).expect("live job").insts[t];
            inst.st = St::Running;
            inst.ready_at = now;
            inst.ran_on = Some(if tier == Tier::Edge { Where::Device(device) } else { Where::Cloud });
        }
        match (tier, sync) {
            (Tier::Edge, false) => self.edge_submit(device, job, t, false, q),
            (Tier::Edge, true) => {
                let alive: Vec<usize> = (0..self.n).filter(|&k| self.devices[k].dev.alive).collect();
                let (bytes, net, cold) = {
                    let inst = &mut self.job_mut(job).expect("live job").insts[t];
                    inst.replicas_left = alive.len() as u32;
                    (inst.in_bytes.max(1), inst.net_us, inst.cold_us)
                };
                let rpc = self.rpc_us(None);
                for k in alive {
                    if k == device {
                        self.edge_submit(k, job, t, true, q);
                    } else {
                        self.start_transfer(
                            Endpoint::Device(device),
                            Endpoint::Device(k),
                            bytes,
                            rpc,
                            Dest::Replica { job, task: t, device: k },
                            (net, cold),
                            q,
                        );
                    }
                }
            }
            (Tier::Cloud, true) => self.sync_arrive(job, t, q),
            (Tier::Cloud, false) => {
                let service = millis(self.cfg.controller_overhead_ms);
                if let Some(s) = self.controller.arrive(now, (job, t), service) {
                    q.push(s.finish, CLOUD, Ev::ControllerDone { token: s.token });
                }
            }
        }
    }

    pub(super) fn edge_submit(&mut self, device: usize, job: JobId, t: usize, replica: bool, q: &mut EventQueue<Ev>) {
        let st = &mut self.devices[device];
        let service_us = sample(&self.tasks[t].prof.edge, &mut st.rng).expect("validated distribution");
        let work = EdgeWork {
            job,
            task: t,
            replica,
            service_us,
        };
        if let Some(s) = st.station.arrive(q.now(), work, service_us) {
            q.push(s.finish, dev_id(device), Ev::EdgeDone { device, token: s.token });
        }
    }

    pub(super) fn on_edge_done(&mut self, device: usize, token: u64, q: &mut EventQueue<Ev>) {
        let Some((work, next)) = self.devices[device].station.complete(q.now(), token) else {
            return;
        };
        if let Some(s) = next {
            q.push(s.finish, dev_id(device), Ev::EdgeDone { device, token: s.token });
        }
        self.drain_device(
            device,
            crate::edgesim::Activity {
                compute_core_ms: work.service_us as f64 / 1e3,
                ..Default::default()
            },
            q,
        );
        if self.job(work.job).is_none() {
            return;
        }
        if work.replica {
            self.replica_done(work.job, work.task, q);
        } else {
            self.finish_instance(work.job, work.task, q);
        }
    }

    pub(super) fn replica_done(&mut self, job: JobId, t: usize, q: &mut EventQueue<Ev>) {
        let Some(j) = self.job_mut(job) else { return };
        let inst = &mut j.insts[t];
        inst.replicas_left -= 1;
        if inst.replicas_left == 0 {
            self.finish_instance(job, t, q);
        }
    }

    /// Computation finished: decide emission and output size, then persist,
    /// write for store-exchange children or return results as needed.
    pub(super) fn finish_instance(&mut self, job: JobId, t: usize, q: &mut EventQueue<Ev>) {
        let now = q.now();
        let m = &self.tasks[t];
        let Some(j) = self.jobs.get_mut(job).and_then(|j| j.as_deref_mut()) else {
            return;
        };
        let has_targets = !j.targets.is_empty();
        let emitted = match m.prof.emit {
            EmitRule::Always => true,
            EmitRule::OnTargets { false_positive } => {
                has_targets || (false_positive > 0.0 && rand::Rng::random::<f64>(self.rng_emit.rng()) < false_positive)
            }
        };
        let out_bytes = match m.prof.output {
            OutputSize::Frame => j.input_bytes,
            OutputSize::Fixed(b) => b,
            OutputSize::PerTarget(b) => b * j.targets.len().max(1) as u64,
        };
        let inst = &mut j.insts[t];
        inst.emitted = emitted;
        inst.out_bytes = out_bytes;
        inst.cold_us += inst.sub_cold_us;
        let ran_on = inst.ran_on;
        let ready_at = inst.ready_at;
        if j.kind == JobKind::Frame {
            let ms = (now - ready_at) as f64 / 1e3;
            let seed = self.seed;
            self.task_latency
                .entry(m.name.clone())
                .or_insert_with(|| SampleSet::new(RngStream::new(seed, stream_id_for(&format!("metrics.task.{}", m.name)))))
                .push(ms);
            if self.goal_task == Some(t) {
                for &tg in &j.targets {
                    self.found[tg] = true;
                }
            }
        }
        if ran_on == Some(Where::Cloud) {
            if m.persist {
                let us = self.cfg.store.request_us(out_bytes).ceil() as u64;
                if let Some(s) = self.store.arrive(now, StoreWork::Persist, us) {
                    q.push(s.finish, CLOUD, Ev::StoreDone { token: s.token });
                }
            }
            if emitted && self.needs_store_write(job, t) {
                let us = self.cfg.store.request_us(out_bytes).ceil() as u64;
                if let Some(s) = self.store.arrive(now, StoreWork::Write { job, task: t }, us) {
                    q.push(s.finish, CLOUD, Ev::StoreDone { token: s.token });
                }
                return;
            }
        }
        self.after_write(job, t, q);
        self.check_mission(q);
    }

    fn needs_store_write(&self, job: JobId, t: usize) -> bool {
        let j = self.job(job).expect("live job");
        let parent = &self.tasks[t].name;
        self.tasks[t].children.iter().any(|&c| {
            j.insts[c].st == St::Waiting
                && self.tier(j.plan, c, j.device) == Tier::Cloud
                && self.plans[j.plan].path(parent, &self.tasks[c].name) == Some(DataPathKind::StoreExchange)
        })
    }

    /// Output is durable; ship it to the device if the task acts on it.
    pub(super) fn after_write(&mut self, job: JobId, t: usize, q: &mut EventQueue<Ev>) {
        let Some(j) = self.job(job) else { return };
        let inst = &j.insts[t];
        let leaf = self.tasks[t].children.is_empty();
        let needs_return = inst.ran_on == Some(Where::Cloud)
            && (self.tasks[t].prof.return_to_device || (j.kind == JobKind::Preflight && leaf));
        if needs_return {
            let (device, bytes, net, cold) = (j.device, inst.out_bytes.max(1), inst.net_us, inst.cold_us);
            self.job_mut(job).expect("live job").insts[t].st = St::Returning;
            let rpc = self.rpc_us(None);
            self.start_transfer(
                Endpoint::Cloud,
                Endpoint::Device(device),
                bytes,
                rpc,
                Dest::Return { job, task: t },
                (net, cold),
                q,
            );
        } else {
            self.resolve_instance(job, t, q);
        }
    }

    /// The instance is finished (or skipped): release its children.
    pub(super) fn resolve_instance(&mut self, job: JobId, t: usize, q: &mut EventQueue<Ev>) {
        let children = self.tasks[t].children.clone();
        let Some(j) = self.job_mut(job) else { return };
        let inst = &mut j.insts[t];
        if inst.st != St::Skipped {
            inst.st = St::Done;
        }
        let (emitted, net, cold) = (inst.emitted && inst.st == St::Done, inst.net_us, inst.cold_us);
        j.unresolved -= 1;
        j.crit_net_us = net;
        j.crit_cold_us = cold;
        if j.unresolved == 0 {
            self.complete_job(job, q);
            return;
        }
        let mut members = Vec::new();
        for &c in &children {
            let ci = &mut j.insts[c];
            if ci.st != St::Waiting {
                continue;
            }
            if emitted {
                ci.emitting_parents += 1;
                ci.inputs_left += 1;
            }
            ci.parents_left -= 1;
            ci.net_us = net;
            ci.cold_us = cold;
            members.push(c);
        }
        for c in members {
            if self.job(job).is_none() {
                return;
            }
            if emitted {
                self.send_input(job, t, c, q);
            } else {
                self.try_progress(job, c, q);
            }
        }
    }

    fn try_progress(&mut self, job: JobId, c: usize, q: &mut EventQueue<Ev>) {
        let Some(j) = self.job_mut(job) else { return };
        let inst = &mut j.insts[c];
        if inst.st != St::Waiting || inst.parents_left > 0 {
            return;
        }
        if inst.emitting_parents == 0 {
            inst.st = St::Skipped;
            self.resolve_instance(job, c, q);
        } else if inst.inputs_left == 0 {
            self.start_instance(job, c, q);
        }
    }

    /// Move parent `p`'s output to child `c`.
    fn send_input(&mut self, job: JobId, p: usize, c: usize, q: &mut EventQueue<Ev>) {
        let j = self.job(job).expect("live job");
        let pi = &j.insts[p];
        let from = pi.ran_on.expect("parent ran");
        let (bytes, net, cold, device, plan) = (pi.out_bytes, pi.net_us, pi.cold_us, j.device, j.plan);
        let to = self.tier(plan, c, device);
        let path = self.plans[plan].path(&self.tasks[p].name, &self.tasks[c].name);
        self.job_mut(job).expect("live job").insts[c].in_bytes += bytes;
        let dest = Dest::Input { job, task: c };
        match (from, to) {
            (Where::Device(_), Tier::Edge) => self.input_arrived(job, c, net, cold, q),
            (Where::Device(d), Tier::Cloud) => {
                let rpc = self.rpc_us(path);
                self.start_transfer(Endpoint::Device(d), Endpoint::Cloud, bytes, rpc, dest, (net, cold), q);
            }
            (Where::Cloud, Tier::Edge) => {
                let rpc = self.rpc_us(path);
                self.start_transfer(Endpoint::Cloud, Endpoint::Device(device), bytes, rpc, dest, (net, cold), q);
            }
            (Where::Cloud, Tier::Cloud) if self.tasks[c].sync => {
                let kind = match path {
                    Some(k @ (DataPathKind::StoreExchange | DataPathKind::RemoteMemory | DataPathKind::SameContainer)) => k,
                    _ => DataPathKind::RemoteMemory,
                };
                let us = crate::cloudsim::exchange_data(bytes, kind, &self.cfg).uncontended_us().ceil() as u64;
                self.start_transfer(Endpoint::Cloud, Endpoint::Cloud, bytes, us, dest, (net, cold), q);
            }
            // fetched by the child invocation itself
            (Where::Cloud, Tier::Cloud) => self.input_arrived(job, c, net, cold, q),
        }
    }

    pub(super) fn input_arrived(&mut self, job: JobId, c: usize, net: u64, cold: u64, q: &mut EventQueue<Ev>) {
        let Some(j) = self.job_mut(job) else { return };
        let inst = &mut j.insts[c];
        inst.net_us = net;
        inst.cold_us = cold;
        inst.inputs_left -= 1;
        self.try_progress(job, c, q);
    }

    fn complete_job(&mut self, job: JobId, q: &mut EventQueue<Ev>) {
        let j = self.jobs[job].take().expect("live job");
        match j.kind {
            JobKind::Frame => {
                let lat = (q.now() - j.captured) as f64 / 1e3;
                self.latency.push(lat);
                self.breakdown.push((lat, j.crit_net_us as f64 / 1e3, j.crit_cold_us as f64 / 1e3));
                self.counters.jobs_completed += 1;
                self.frame_jobs_live -= 1;
                if self.replanner.is_some() {
                    self.window.push((q.now(), lat));
                }
            }
            JobKind::Preflight => {
                if self.devices[j.device].dev.alive && !self.mission_over {
                    self.begin_flight(j.device, q);
                }
            }
        }
    }

    pub(super) fn fail_job(&mut self, job: JobId) {
        if let Some(j) = self.jobs.get_mut(job).and_then(Option::take) {
            if j.kind == JobKind::Frame {
                self.counters.jobs_failed += 1;
                self.frame_jobs_live -= 1;
            }
        }
    }

    /// Delivered transfer: hand its payload to the destination.
    pub(super) fn deliver(&mut self, tr: Transfer, q: &mut EventQueue<Ev>) {
        let net = tr.net_us + (q.now() - tr.created);
        match tr.dest {
            Dest::Input { job, task } => self.input_arrived(job, task, net, tr.cold_us, q),
            Dest::Replica { job, task, device } => {
                if self.job(job).is_none() {
                    return;
                }
                if self.devices[device].dev.alive {
                    self.edge_submit(device, job, task, true, q);
                } else {
                    self.replica_done(job, task, q);
                }
            }
            Dest::Return { job, task } => {
                let Some(j) = self.job_mut(job) else { return };
                j.insts[task].net_us = net;
                self.resolve_instance(job, task, q);
            }
        }
    }
}
