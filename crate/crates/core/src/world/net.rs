use super::*;
use crate::edgesim::Activity;
use crate::netsim::Endpoint;

impl World {
    /// Send `bytes` from `src` to `dst` hop by hop. `carry` holds the
    /// sender's critical-path network and cold-start totals.
    #[allow(clippy::too_many_arguments)]
    pub(super) fn start_transfer(
        &mut self,
        src: Endpoint,
        dst: Endpoint,
        bytes: u64,
        rpc_us: u64,
        dest: Dest,
        carry: (u64, u64),
        q: &mut EventQueue<Ev>,
    ) {
        for end in [src, dst] {
            if let Endpoint::Device(d) = end {
                self.drain_device(
                    d,
                    Activity {
                        radio_bytes: bytes as f64,
                        ..Default::default()
                    },
                    q,
                );
            }
        }
        let tr = Transfer {
            hops: self.net.route(src, dst),
            next: 0,
            bytes,
            created: q.now(),
            rpc_us,
            dest,
            net_us: carry.0,
            cold_us: carry.1,
        };
        let id = match self.free_transfers.pop() {
            Some(id) => {
                self.transfers[id] = Some(tr);
                id
            }
            None => {
                self.transfers.push(Some(tr));
                self.transfers.len() - 1
            }
        };
        if self.transfers[id].as_ref().expect("just stored").hops.is_empty() {
            q.push(q.now() + rpc_us, NETWORK, Ev::HopArrive { transfer: id });
        } else {
            self.begin_hop(id, q);
        }
    }

    fn begin_hop(&mut self, id: usize, q: &mut EventQueue<Ev>) {
        let tr = self.transfers[id].as_ref().expect("live transfer");
        let link = tr.hops[tr.next];
        let (t, generation) = self.net.start_flow(q.now(), link, id as u64, tr.bytes);
        q.push(t, NETWORK, Ev::LinkCheck { link, generation });
    }

    pub(super) fn on_link_check(&mut self, link: usize, generation: u64, q: &mut EventQueue<Ev>) {
        let Some((done, next)) = self.net.on_check(q.now(), link, generation) else {
            return;
        };
        let base = self.net.links[link].base_latency;
        for flow in done {
            let id = flow as usize;
            let tr = self.transfers[id].as_mut().expect("flow belongs to a live transfer");
            tr.next += 1;
            let extra = if tr.next == tr.hops.len() { tr.rpc_us } else { 0 };
            q.push(q.now() + base + extra, NETWORK, Ev::HopArrive { transfer: id });
        }
        if let Some((t, g)) = next {
            q.push(t, NETWORK, Ev::LinkCheck { link, generation: g });
        }
    }

    pub(super) fn on_hop_arrive(&mut self, id: usize, q: &mut EventQueue<Ev>) {
        let tr = self.transfers[id].as_ref().expect("live transfer");
        if tr.next < tr.hops.len() {
            self.begin_hop(id, q);
            return;
        }
        let tr = self.transfers[id].take().expect("live transfer");
        self.free_transfers.push(id);
        self.deliver(tr, q);
    }

    pub(super) fn on_capacity_change(&mut self, factor: f64, q: &mut EventQueue<Ev>) {
        for (link, t, generation) in self.net.scale_wireless(q.now(), factor) {
            q.push(t, NETWORK, Ev::LinkCheck { link, generation });
        }
    }
}
