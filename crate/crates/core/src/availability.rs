//! Liveness of hardware and availability of devices and functionalities.

use crate::failures::FailedSet;
use crate::model::{Config, DevSet, HwSet, SystemModel};

/// Hardware that is live under `fs`: not crashed, and internally powered or
/// fed by at least one live power source.
pub fn live_set(sys: &SystemModel, fs: FailedSet) -> HwSet {
    let mut live = HwSet::EMPTY;
    for &h in sys.power_order() {
        let power = sys.power(h);
        if !fs.contains(h) && (power.is_empty() || !power.inter(live).is_empty()) {
            live.insert(h);
        }
    }
    live
}

pub fn live(sys: &SystemModel, h: usize, fs: FailedSet) -> bool {
    live_set(sys, fs).contains(h)
}

/// Device types offered by some live stand-alone device.
fn live_device_types(sys: &SystemModel, live: HwSet) -> DevSet {
    let mut types = DevSet::EMPTY;
    for h in sys.devices().inter(live).iter() {
        types.insert(sys.device_type(h));
    }
    types
}

pub fn avail_dev(sys: &SystemModel, dt: usize, c: usize, fs: FailedSet) -> bool {
    sys.computer_devices(c).contains(dt)
        || !sys
            .standalone_of_type(dt)
            .inter(live_set(sys, fs))
            .is_empty()
}

/// Availability of every functionality on every computer in one state.
///
/// Functionalities are evaluated in dependency order, so each one is
/// computed once from the already-known availability of its requirements.
#[derive(Debug, Clone)]
pub struct Availability {
    live: HwSet,
    live_computers: HwSet,
    dev_types: DevSet,
    on: Vec<HwSet>,
}

impl Availability {
    pub fn compute(sys: &SystemModel, cfg: &Config, fs: FailedSet) -> Self {
        let live = live_set(sys, fs);
        let mut a = Availability {
            live,
            live_computers: live.inter(sys.computers()),
            dev_types: live_device_types(sys, live),
            on: vec![HwSet::EMPTY; sys.num_fns()],
        };
        for &f in sys.fn_order() {
            let mut on = HwSet::EMPTY;
            for &s in sys.providers(f) {
                let sw = sys.software(s);
                let reach = |local: HwSet| {
                    if sw.remote_use {
                        a.live_computers
                    } else {
                        local
                    }
                };
                for inst in instances_of(cfg, s) {
                    let host = inst.computer();
                    if a.live.contains(host) && a.requirements_met(sys, s, host) {
                        on = on.union(reach(HwSet::single(host)));
                    }
                }
                if let Some(r) = cfg.rsi_of(s) {
                    let p = sys.protocol(r.protocol());
                    let q = p.progress_q.size(r.computers.len());
                    let live_members = r.computers.inter(a.live);
                    if p.active {
                        let good: HwSet = live_members
                            .iter()
                            .filter(|&c| a.requirements_met(sys, s, c))
                            .collect();
                        if good.len() >= q {
                            on = on.union(reach(good));
                        }
                    } else {
                        let primary = r.primary().expect("passive replicas have a primary");
                        if live_members.len() >= q && a.requirements_met(sys, s, primary) {
                            on = on.union(reach(live_members));
                        }
                    }
                }
            }
            a.on[f] = on;
        }
        a
    }

    pub fn live(&self) -> HwSet {
        self.live
    }

    pub fn live_computers(&self) -> HwSet {
        self.live_computers
    }

    /// Computers on which functionality `f` is available.
    pub fn on(&self, f: usize) -> HwSet {
        self.on[f]
    }

    pub fn avail_on(&self, f: usize, c: usize) -> bool {
        self.on[f].contains(c)
    }

    pub fn avail(&self, f: usize) -> bool {
        !self.on[f].is_empty()
    }

    pub fn avail_all(&self, fns: &[usize]) -> bool {
        fns.iter().all(|&f| self.avail(f))
    }

    pub fn devices_available(&self, sys: &SystemModel, s: usize, c: usize) -> bool {
        sys.sw_devices(s)
            .is_subset(sys.computer_devices(c).union(self.dev_types))
    }

    /// Every functionality and device type required by software `s` is
    /// available on computer `c`.
    pub fn requirements_met(&self, sys: &SystemModel, s: usize, c: usize) -> bool {
        sys.sw_req(s).iter().all(|&f| self.on[f].contains(c)) && self.devices_available(sys, s, c)
    }
}

fn instances_of(cfg: &Config, s: usize) -> impl Iterator<Item = &crate::model::SwInst> {
    let si = cfg.si();
    let start = si.partition_point(|i| i.sw() < s);
    si[start..].iter().take_while(move |i| i.sw() == s)
}

pub fn avail_on(sys: &SystemModel, f: usize, c: usize, cfg: &Config, fs: FailedSet) -> bool {
    Availability::compute(sys, cfg, fs).avail_on(f, c)
}

pub fn avail(sys: &SystemModel, fns: &[usize], cfg: &Config, fs: FailedSet) -> bool {
    Availability::compute(sys, cfg, fs).avail_all(fns)
}
