use super::*;
use crate::cloudsim::{detect_stragglers, exchange_data, schedule_invocation, Admit, Decision, ExchangeCost, InFlight, InvocationRequest};
use crate::simkernel::sample;
use crate::synth::DataPathKind;

impl World {
    pub(super) fn on_controller_done(&mut self, token: u64, q: &mut EventQueue<Ev>) {
        let Some(((job, t), next)) = self.controller.complete(q.now(), token) else {
            return;
        };
        if let Some(s) = next {
            q.push(s.finish, CLOUD, Ev::ControllerDone { token: s.token });
        }
        let fanout = self.tasks[t].prof.fanout;
        let Some(j) = self.jobs.get_mut(job).and_then(|j| j.as_deref_mut()) else {
            return;
        };
        j.insts[t].subs_left = fanout as u32;
        for _ in 0..fanout {
            let slot = self.slots.len();
            self.slots.push(Slot {
                job,
                task: t,
                consumed: false,
            });
            let inv = self.new_invocation(slot, false, None);
            self.offer(inv, q);
        }
    }

    fn new_invocation(&mut self, slot: usize, speculative: bool, exclude: Option<usize>) -> InvId {
        self.invs.push(Invocation {
            slot,
            speculative,
            twin: None,
            exclude,
            node: 0,
            container: None,
            st: InvSt::Pending,
            admitted: false,
            admission_released: false,
            cold_us: 0,
            started_at: SimTime::ZERO,
            exec_start: SimTime::ZERO,
            exec_us: 0,
            fetch_left: 0,
        });
        self.invs.len() - 1
    }

    fn offer(&mut self, inv: InvId, q: &mut EventQueue<Ev>) {
        match self.admission.offer(inv) {
            Admit::Admitted(i) => {
                self.invs[i].admitted = true;
                self.dispatch(i, q);
            }
            Admit::Queued => self.counters.controller_queued += 1,
            Admit::Rejected(i) => {
                self.counters.rejected_no_capacity += 1;
                self.invs[i].st = InvSt::Cancelled;
                if !self.invs[i].speculative {
                    let job = self.slots[self.invs[i].slot].job;
                    self.fail_job(job);
                }
            }
        }
    }

    fn release_admission(&mut self, inv: InvId, q: &mut EventQueue<Ev>) {
        let i = &mut self.invs[inv];
        if !i.admitted || i.admission_released {
            return;
        }
        i.admission_released = true;
        if let Some(next) = self.admission.release() {
            self.invs[next].admitted = true;
            self.dispatch(next, q);
        }
    }

    fn decide(&mut self, inv: InvId, now: SimTime) -> Decision {
        let i = &self.invs[inv];
        let slot = &self.slots[i.slot];
        let m = &self.tasks[slot.task];
        let parent_container = self.job(slot.job).and_then(|j| {
            m.parents
                .iter()
                .map(|&p| &j.insts[p])
                .find(|pi| pi.st == St::Done && pi.emitted && pi.ran_on == Some(Where::Cloud))
                .and_then(|pi| pi.container)
        });
        let req = InvocationRequest {
            task_type: &m.name,
            deps: m.prof.deps,
            parent_container,
            colocate: self.exec.colocate && self.cfg.colocate,
            isolate: m.isolate,
            pinned_node: m.pinned_node,
            exclude_node: i.exclude,
        };
        schedule_invocation(&req, &mut self.cluster, self.selector.as_mut(), now)
    }

    fn dispatch(&mut self, inv: InvId, q: &mut EventQueue<Ev>) {
        if self.invs[inv].st == InvSt::Cancelled {
            self.release_admission(inv, q);
            return;
        }
        let d = self.decide(inv, q.now());
        if d == Decision::Wait {
            self.core_wait.push_back(inv);
            self.counters.controller_queued += 1;
        } else {
            self.apply(inv, d, q);
        }
    }

    fn apply(&mut self, inv: InvId, d: Decision, q: &mut EventQueue<Ev>) {
        let now = q.now();
        let task = self.slots[self.invs[inv].slot].task;
        self.counters.invocations += 1;
        self.invs[inv].started_at = now;
        match d {
            Decision::ReuseParent(c) | Decision::Warm(c) => {
                if matches!(d, Decision::ReuseParent(_)) {
                    self.counters.parent_container_reuse += 1;
                }
                self.counters.warm_starts += 1;
                self.cluster.claim(c, &self.tasks[task].name);
                let i = &mut self.invs[inv];
                i.container = Some(c);
                i.node = self.cluster.containers[c].node_id;
                self.begin_fetch(inv, q);
            }
            Decision::Cold { node } | Decision::ColdAfterEvict { node, .. } => {
                if let Decision::ColdAfterEvict { evict, .. } = d {
                    self.cluster.terminate(evict);
                    self.counters.containers_terminated += 1;
                }
                let m = &self.tasks[task];
                let c = self.cluster.instantiate(node, &m.name, m.prof.deps, m.isolate);
                let cold = sample(&self.cfg.cold_start, &mut self.rng_cold).expect("validated distribution");
                self.counters.cold_starts += 1;
                let i = &mut self.invs[inv];
                i.container = Some(c);
                i.node = node;
                i.cold_us = cold;
                i.st = InvSt::Starting;
                q.push(now + cold, CLOUD, Ev::ContainerReady { inv });
            }
            Decision::Wait => unreachable!("waiting invocations are queued by the caller"),
        }
    }

    /// Retry invocations waiting for a core, in arrival order.
    fn retry_waits(&mut self, q: &mut EventQueue<Ev>) {
        while let Some(&inv) = self.core_wait.front() {
            if self.invs[inv].st == InvSt::Cancelled {
                self.core_wait.pop_front();
                self.release_admission(inv, q);
                continue;
            }
            let d = self.decide(inv, q.now());
            if d == Decision::Wait {
                break;
            }
            self.core_wait.pop_front();
            self.apply(inv, d, q);
        }
    }

    fn release_container(&mut self, c: ContainerId, q: &mut EventQueue<Ev>) {
        match self.cluster.release(c, q.now()) {
            Some(generation) => {
                let at = q.now() + self.cluster.keepalive + 1;
                q.push(at, CLOUD, Ev::ContainerExpire { container: c, generation });
            }
            None => self.counters.containers_terminated += 1,
        }
        self.retry_waits(q);
    }

    pub(super) fn on_container_expire(&mut self, c: ContainerId, generation: u64, q: &mut EventQueue<Ev>) {
        if self.cluster.expire(c, generation) {
            self.counters.containers_terminated += 1;
            self.retry_waits(q);
        }
    }

    pub(super) fn on_container_ready(&mut self, inv: InvId, q: &mut EventQueue<Ev>) {
        let c = self.invs[inv].container.expect("cold start has a container");
        self.cluster.ready(c);
        self.cloud_us += self.invs[inv].cold_us as f64;
        if self.invs[inv].st == InvSt::Cancelled {
            self.release_container(c, q);
            return;
        }
        self.begin_fetch(inv, q);
    }

    /// Pull inputs produced by cloud parents.
    fn begin_fetch(&mut self, inv: InvId, q: &mut EventQueue<Ev>) {
        let now = q.now();
        let (slot, container) = (self.invs[inv].slot, self.invs[inv].container);
        let Slot { job, task, .. } = self.slots[slot];
        let Some(j) = self.job(job) else {
            // job already failed: give the resources back
            self.invs[inv].st = InvSt::Cancelled;
            self.release_container(container.expect("placed"), q);
            self.release_admission(inv, q);
            return;
        };
        let mut direct_us: f64 = 0.0;
        let mut reads = Vec::new();
        for &p in &self.tasks[task].parents {
            let pi = &j.insts[p];
            if !(pi.st == St::Done && pi.emitted && pi.ran_on == Some(Where::Cloud)) {
                continue;
            }
            let path = if pi.container.is_some() && pi.container == container {
                DataPathKind::SameContainer
            } else {
                match self.plans[j.plan].path(&self.tasks[p].name, &self.tasks[task].name) {
                    Some(k @ (DataPathKind::StoreExchange | DataPathKind::RemoteMemory | DataPathKind::SameContainer)) => k,
                    _ => DataPathKind::RemoteMemory,
                }
            };
            match exchange_data(pi.out_bytes, path, &self.cfg) {
                ExchangeCost::Direct(us) => direct_us = direct_us.max(us),
                ExchangeCost::Store { request_us } => reads.push(request_us.ceil() as u64),
            }
        }
        let i = &mut self.invs[inv];
        i.st = InvSt::Fetching;
        i.fetch_left = reads.len() as u32 + u32::from(direct_us > 0.0);
        for us in reads {
            if let Some(s) = self.store.arrive(now, StoreWork::Read { inv }, us) {
                q.push(s.finish, CLOUD, Ev::StoreDone { token: s.token });
            }
        }
        if direct_us > 0.0 {
            q.push(now + direct_us.ceil() as u64, CLOUD, Ev::InputsReady { inv });
        }
        if self.invs[inv].fetch_left == 0 {
            self.start_exec(inv, q);
        }
    }

    fn fetched_one(&mut self, inv: InvId, q: &mut EventQueue<Ev>) {
        let i = &mut self.invs[inv];
        if i.st != InvSt::Fetching {
            return;
        }
        i.fetch_left -= 1;
        if i.fetch_left == 0 {
            self.start_exec(inv, q);
        }
    }

    pub(super) fn on_inputs_ready(&mut self, inv: InvId, q: &mut EventQueue<Ev>) {
        self.fetched_one(inv, q);
    }

    pub(super) fn on_store_done(&mut self, token: u64, q: &mut EventQueue<Ev>) {
        let Some((work, next)) = self.store.complete(q.now(), token) else {
            return;
        };
        if let Some(s) = next {
            q.push(s.finish, CLOUD, Ev::StoreDone { token: s.token });
        }
        match work {
            StoreWork::Read { inv } => self.fetched_one(inv, q),
            StoreWork::Write { job, task } => {
                self.after_write(job, task, q);
                self.check_mission(q);
            }
            StoreWork::Persist => {}
        }
    }

    fn start_exec(&mut self, inv: InvId, q: &mut EventQueue<Ev>) {
        let now = q.now();
        let task = self.slots[self.invs[inv].slot].task;
        let m = &self.tasks[task];
        let base = sample(&m.prof.cloud, &mut self.rng_cloud).expect("validated distribution");
        let slowdown = self.cluster.nodes[self.invs[inv].node].slowdown;
        let exec_us = (base as f64 / m.prof.fanout as f64 * slowdown).round() as u64;
        let i = &mut self.invs[inv];
        i.st = InvSt::Running;
        i.exec_start = now;
        i.exec_us = exec_us;
        q.push(now + exec_us, CLOUD, Ev::ExecDone { inv });
        if self.exec.stragglers && self.cfg.straggler.enabled && !i.speculative {
            if let Some(thr) = self.tracker.threshold(&m.name) {
                q.push(now + thr + 1, CLOUD, Ev::StragglerCheck { inv });
            }
        }
    }

    pub(super) fn on_exec_done(&mut self, inv: InvId, q: &mut EventQueue<Ev>) {
        if self.invs[inv].st != InvSt::Running {
            return;
        }
        let i = &mut self.invs[inv];
        i.st = InvSt::Done;
        let (slot, speculative, exec_us, cold_us, twin, container) =
            (i.slot, i.speculative, i.exec_us, i.cold_us, i.twin, i.container.expect("placed"));
        self.cloud_us += exec_us as f64;
        let Slot { job, task, consumed } = self.slots[slot];
        if !speculative {
            self.tracker.record(&self.tasks[task].name, exec_us);
        }
        if consumed {
            self.counters.duplicate_results_discarded += 1;
        } else {
            self.slots[slot].consumed = true;
            self.counters.results_consumed += 1;
            if speculative {
                self.counters.speculative_wins += 1;
                // the duplicate beat the original: a confirmed straggler
                if let Some(tw) = twin {
                    self.confirm_straggler(self.invs[tw].node, q.now());
                }
            }
        }
        if let Some(tw) = twin {
            self.cancel(tw, q);
        }
        self.release_container(container, q);
        self.release_admission(inv, q);
        if consumed {
            return;
        }
        let Some(j) = self.jobs.get_mut(job).and_then(|j| j.as_deref_mut()) else {
            return;
        };
        let inst = &mut j.insts[task];
        inst.subs_left -= 1;
        inst.sub_cold_us = inst.sub_cold_us.max(cold_us);
        inst.container = Some(container);
        if inst.subs_left == 0 {
            self.finish_instance(job, task, q);
        }
    }

    fn confirm_straggler(&mut self, node: usize, now: SimTime) {
        if !self.exec.probation {
            return;
        }
        if let Some(ch) = self.probation.update_probation(node, now) {
            self.cluster.nodes[ch.node].probation_until = Some(ch.until);
            self.counters.probations += 1;
        }
    }

    /// Abandon the losing copy of a duplicated invocation.
    fn cancel(&mut self, inv: InvId, q: &mut EventQueue<Ev>) {
        let now = q.now();
        let prev = self.invs[inv].st;
        match prev {
            InvSt::Done | InvSt::Cancelled => return,
            _ => self.invs[inv].st = InvSt::Cancelled,
        }
        match prev {
            InvSt::Running => {
                self.cloud_us += (now - self.invs[inv].exec_start) as f64;
                self.counters.duplicate_results_discarded += 1;
                self.release_container(self.invs[inv].container.expect("placed"), q);
                self.release_admission(inv, q);
            }
            InvSt::Fetching => {
                self.release_container(self.invs[inv].container.expect("placed"), q);
                self.release_admission(inv, q);
            }
            // the container is released once instantiation completes
            InvSt::Starting => self.release_admission(inv, q),
            // released when it leaves the admission or core queue
            InvSt::Pending => {}
            InvSt::Done | InvSt::Cancelled => unreachable!(),
        }
    }

    pub(super) fn on_straggler_check(&mut self, inv: InvId, q: &mut EventQueue<Ev>) {
        let now = q.now();
        let i = &self.invs[inv];
        if i.st != InvSt::Running || i.twin.is_some() || i.speculative {
            return;
        }
        let task = self.slots[i.slot].task;
        let f = InFlight {
            instance: inv as u64,
            task_type: &self.tasks[task].name,
            node: i.node,
            start: i.exec_start,
            speculative: i.speculative,
            has_duplicate: i.twin.is_some(),
        };
        let actions = detect_stragglers(&self.tracker, &[f], now);
        let Some(a) = actions.first() else { return };
        let (slot, node) = (i.slot, a.exclude_node);
        self.counters.stragglers_respawned += 1;
        let dup = self.new_invocation(slot, true, Some(node));
        self.invs[dup].twin = Some(inv);
        self.invs[inv].twin = Some(dup);
        self.offer(dup, q);
    }

    /// Synchronized cloud task: one long-lived single-server instance.
    pub(super) fn sync_arrive(&mut self, job: JobId, t: usize, q: &mut EventQueue<Ev>) {
        let now = q.now();
        if self.job(job).is_none() {
            return;
        }
        let name = self.tasks[t].name.clone();
        let entry = self.sync.entry(t).or_insert_with(|| SyncStation {
            station: ServiceStation::new(format!("sync.{name}"), 1),
            ready_at: None,
        });
        let first = entry.ready_at.is_none();
        if first {
            let cold = sample(&self.cfg.cold_start, &mut self.rng_cold).expect("validated distribution");
            entry.ready_at = Some(now + cold);
            self.counters.cold_starts += 1;
            self.cloud_us += cold as f64;
        }
        let ready = entry.ready_at.expect("set above");
        let inst = &mut self.jobs[job].as_deref_mut().expect("live job").insts[t];
        let reentry = inst.sub_cold_us > 0;
        if !first && !reentry {
            self.counters.warm_starts += 1;
        }
        if !reentry {
            self.counters.invocations += 1;
        }
        if now < ready {
            inst.sub_cold_us = ready - now;
            q.push(ready, CLOUD, Ev::SyncArrive { job, task: t });
            return;
        }
        let service = sample(&self.tasks[t].prof.cloud, &mut self.rng_cloud).expect("validated distribution");
        self.cloud_us += service as f64;
        let entry = self.sync.get_mut(&t).expect("created above");
        if let Some(s) = entry.station.arrive(now, (job, t), service) {
            q.push(s.finish, CLOUD, Ev::SyncDone { task: t, token: s.token });
        }
    }

    pub(super) fn on_sync_done(&mut self, t: usize, token: u64, q: &mut EventQueue<Ev>) {
        let entry = self.sync.get_mut(&t).expect("sync station exists");
        let Some(((job, task), next)) = entry.station.complete(q.now(), token) else {
            return;
        };
        if let Some(s) = next {
            q.push(s.finish, CLOUD, Ev::SyncDone { task: t, token: s.token });
        }
        if self.job(job).is_some() {
            self.finish_instance(job, task, q);
        }
    }
}
