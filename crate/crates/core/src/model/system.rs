use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::bits::{DevSet, HwSet, MAX_DEV_TYPES, MAX_HW};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),
    #[error("`{0}` must declare at least one core")]
    NoCores(String),
    #[error("`{owner}` is powered by unknown hardware `{power}`")]
    UnknownPower { owner: String, power: String },
    #[error("cyclic power dependencies involving `{0}`")]
    CyclicPower(String),
    #[error("software `{0}` requires its own functionality")]
    SelfRequirement(String),
    #[error("cyclic functionality dependencies involving `{0}`")]
    CyclicFunctionalities(String),
    #[error("software `{0}` has persistent state but is not single-instance")]
    PersistentNotSingleInstance(String),
    #[error("protocol `{0}` does not tolerate crash failures")]
    ProtocolWithoutCrash(String),
    #[error("protocol `{protocol}`: {field} cannot be `{quorum}`")]
    BadQuorum {
        protocol: String,
        field: &'static str,
        quorum: Quorum,
    },
    #[error("unknown {kind} `{id}`")]
    Unknown { kind: &'static str, id: String },
    #[error("too many {what} ({count}, limit {limit})")]
    TooLarge {
        what: &'static str,
        count: usize,
        limit: usize,
    },
    #[error("failure model: {0}")]
    FailureModel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quorum {
    Majority,
    All,
    One,
}

impl Quorum {
    /// Minimum number of replicas forming a quorum among `n` replicas.
    pub fn size(self, n: usize) -> usize {
        assert!(n >= 1, "quorum size of an empty replica set");
        match self {
            Quorum::Majority => n / 2 + 1,
            Quorum::All => n,
            Quorum::One => 1,
        }
    }
}

impl std::fmt::Display for Quorum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Quorum::Majority => "majority",
            Quorum::All => "all",
            Quorum::One => "one",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Computer {
    pub id: String,
    pub os: String,
    pub cpu_arch: String,
    pub cores: u32,
    /// Megabytes.
    pub ram: u64,
    /// Types of integrated devices.
    #[serde(default)]
    pub devices: BTreeSet<String>,
    #[serde(rename = "wiredNIC")]
    pub wired_nic: bool,
    #[serde(rename = "wifiNIC")]
    pub wifi_nic: bool,
    pub cellular: bool,
    /// Power sources; empty means internal power.
    #[serde(default)]
    pub power: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Device {
    pub id: String,
    pub device_type: String,
    #[serde(default)]
    pub power: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Software {
    pub id: String,
    #[serde(rename = "fn")]
    pub func: String,
    #[serde(default)]
    pub fn_req: BTreeSet<String>,
    #[serde(default)]
    pub devices: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cpu_arch: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub os: Option<String>,
    pub ram: u64,
    pub cores: u32,
    pub cellular: bool,
    pub wired: bool,
    pub deterministic: bool,
    pub fast_starting: bool,
    pub migratable: bool,
    pub persis_state: bool,
    pub preferred: bool,
    pub remote_use: bool,
    pub resumable: bool,
    pub single_instance: bool,
    pub small_persis_state: bool,
}

impl Software {
    /// Replication is only meaningful for software with state worth preserving.
    pub fn stateful(&self) -> bool {
        self.persis_state || !self.resumable
    }

    /// May be started fresh by a `start` action.
    pub fn startable(&self) -> bool {
        self.fast_starting && !self.persis_state && self.resumable
    }

    /// May be relocated with a `move` action.
    pub fn movable(&self) -> bool {
        self.migratable && (!self.persis_state || self.small_persis_state)
    }

    /// New replicas may be added by `changeReps`.
    pub fn can_add_replicas(&self) -> bool {
        self.fast_starting && (!self.persis_state || self.small_persis_state)
    }

    /// Instances on a crashed computer are kept and resume after recovery.
    pub fn survives_crash(&self) -> bool {
        self.resumable && self.persis_state && self.fast_starting
    }

    pub fn requires_replication(&self) -> bool {
        self.persis_state || !self.fast_starting || !self.resumable
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RepProtocol {
    pub id: String,
    pub sync: bool,
    pub fail_types: BTreeSet<String>,
    pub active: bool,
    #[serde(rename = "progressQ")]
    pub progress_q: Quorum,
    #[serde(rename = "reconfigQ")]
    pub reconfig_q: Quorum,
}

/// Declarative description of a system, as read from a model file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SystemSpec {
    pub sync: bool,
    pub computers: Vec<Computer>,
    #[serde(default)]
    pub devices: Vec<Device>,
    pub software: Vec<Software>,
    #[serde(default)]
    pub protocols: Vec<RepProtocol>,
}

/// A validated system with dense indices.
///
/// Hardware indices place computers first (`0..num_computers()`), then
/// stand-alone devices. Software, protocols and functionalities are indexed
/// in declaration order.
#[derive(Debug, Clone)]
pub struct SystemModel {
    spec: SystemSpec,
    hw_ids: Vec<String>,
    hw_index: HashMap<String, usize>,
    sw_index: HashMap<String, usize>,
    proto_index: HashMap<String, usize>,
    power: Vec<HwSet>,
    power_order: Vec<usize>,
    dev_types: Vec<String>,
    dev_type_index: HashMap<String, usize>,
    comp_devs: Vec<DevSet>,
    device_type_of: Vec<usize>,
    standalone_by_type: Vec<HwSet>,
    fns: Vec<String>,
    fn_index: HashMap<String, usize>,
    sw_fn: Vec<usize>,
    sw_req: Vec<Vec<usize>>,
    sw_devs: Vec<DevSet>,
    providers: Vec<Vec<usize>>,
    fn_order: Vec<usize>,
    compat: Vec<HwSet>,
    equiv_class: Vec<usize>,
}

pub fn compatible(sw: &Software, c: &Computer) -> bool {
    sw.cpu_arch.as_ref().is_none_or(|a| *a == c.cpu_arch)
        && sw.os.as_ref().is_none_or(|o| *o == c.os)
        && (!sw.cellular || c.cellular)
        && (!sw.wired || c.wired_nic)
}

impl SystemModel {
    pub fn new(spec: SystemSpec) -> Result<Self, ModelError> {
        let nc = spec.computers.len();
        let nhw = nc + spec.devices.len();
        if nhw > MAX_HW {
            return Err(ModelError::TooLarge {
                what: "hardware components",
                count: nhw,
                limit: MAX_HW,
            });
        }
        if spec.software.len() > u16::MAX as usize {
            return Err(ModelError::TooLarge {
                what: "software components",
                count: spec.software.len(),
                limit: u16::MAX as usize,
            });
        }

        let mut seen = BTreeSet::new();
        let all_ids = spec
            .computers
            .iter()
            .map(|c| &c.id)
            .chain(spec.devices.iter().map(|d| &d.id))
            .chain(spec.software.iter().map(|s| &s.id))
            .chain(spec.protocols.iter().map(|p| &p.id));
        for id in all_ids {
            if !seen.insert(id.clone()) {
                return Err(ModelError::DuplicateId(id.clone()));
            }
        }

        let hw_ids: Vec<String> = spec
            .computers
            .iter()
            .map(|c| c.id.clone())
            .chain(spec.devices.iter().map(|d| d.id.clone()))
            .collect();
        let hw_index: HashMap<String, usize> = hw_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        let sw_index = spec
            .software
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id.clone(), i))
            .collect();
        let proto_index = spec
            .protocols
            .iter()
            .enumerate()
            .map(|(i, p)| (p.id.clone(), i))
            .collect();

        for c in &spec.computers {
            if c.cores == 0 {
                return Err(ModelError::NoCores(c.id.clone()));
            }
        }

        let power_lists = spec
            .computers
            .iter()
            .map(|c| (&c.id, &c.power))
            .chain(spec.devices.iter().map(|d| (&d.id, &d.power)));
        let mut power = Vec::with_capacity(nhw);
        for (owner, sources) in power_lists {
            let mut set = HwSet::EMPTY;
            for p in sources {
                let i = *hw_index.get(p).ok_or_else(|| ModelError::UnknownPower {
                    owner: owner.clone(),
                    power: p.clone(),
                })?;
                set.insert(i);
            }
            power.push(set);
        }
        let power_order = topo_order(nhw, |h| power[h].iter().collect())
            .map_err(|h| ModelError::CyclicPower(hw_ids[h].clone()))?;

        let mut dev_types: Vec<String> = Vec::new();
        let mut dev_type_index: HashMap<String, usize> = HashMap::new();
        let mut intern_dev = |t: &str, dev_types: &mut Vec<String>| -> usize {
            if let Some(&i) = dev_type_index.get(t) {
                return i;
            }
            dev_types.push(t.to_string());
            dev_type_index.insert(t.to_string(), dev_types.len() - 1);
            dev_types.len() - 1
        };
        let mut comp_devs = Vec::with_capacity(nc);
        for c in &spec.computers {
            let mut s = DevSet::EMPTY;
            for t in &c.devices {
                let i = intern_dev(t, &mut dev_types);
                if i < MAX_DEV_TYPES {
                    s.insert(i);
                }
            }
            comp_devs.push(s);
        }
        let mut device_type_of = Vec::with_capacity(spec.devices.len());
        for d in &spec.devices {
            device_type_of.push(intern_dev(&d.device_type, &mut dev_types));
        }
        let mut sw_dev_lists = Vec::with_capacity(spec.software.len());
        for s in &spec.software {
            let v: Vec<usize> = s
                .devices
                .iter()
                .map(|t| intern_dev(t, &mut dev_types))
                .collect();
            sw_dev_lists.push(v);
        }
        if dev_types.len() > MAX_DEV_TYPES {
            return Err(ModelError::TooLarge {
                what: "device types",
                count: dev_types.len(),
                limit: MAX_DEV_TYPES,
            });
        }
        let dev_type_index: HashMap<String, usize> = dev_types
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        let mut standalone_by_type = vec![HwSet::EMPTY; dev_types.len()];
        for (k, &t) in device_type_of.iter().enumerate() {
            standalone_by_type[t].insert(nc + k);
        }
        let sw_devs = sw_dev_lists
            .iter()
            .map(|v| {
                let mut s = DevSet::EMPTY;
                for &t in v {
                    s.insert(t);
                }
                s
            })
            .collect();

        let mut fns: Vec<String> = Vec::new();
        let mut fn_index: HashMap<String, usize> = HashMap::new();
        let mut intern_fn = |f: &str, fns: &mut Vec<String>| -> usize {
            *fn_index.entry(f.to_string()).or_insert_with(|| {
                fns.push(f.to_string());
                fns.len() - 1
            })
        };
        let mut sw_fn = Vec::new();
        let mut sw_req = Vec::new();
        for s in &spec.software {
            if s.cores == 0 {
                return Err(ModelError::NoCores(s.id.clone()));
            }
            if s.fn_req.contains(&s.func) {
                return Err(ModelError::SelfRequirement(s.id.clone()));
            }
            if s.persis_state && !s.single_instance {
                return Err(ModelError::PersistentNotSingleInstance(s.id.clone()));
            }
            sw_fn.push(intern_fn(&s.func, &mut fns));
            sw_req.push(
                s.fn_req
                    .iter()
                    .map(|f| intern_fn(f, &mut fns))
                    .collect::<Vec<_>>(),
            );
        }
        let fn_index: HashMap<String, usize> = fns
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i))
            .collect();
        let mut providers = vec![Vec::new(); fns.len()];
        for (s, &f) in sw_fn.iter().enumerate() {
            providers[f].push(s);
        }
        let mut fn_deps: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); fns.len()];
        for (s, &f) in sw_fn.iter().enumerate() {
            fn_deps[f].extend(sw_req[s].iter().copied());
        }
        let fn_order = topo_order(fns.len(), |f| fn_deps[f].iter().copied().collect())
            .map_err(|f| ModelError::CyclicFunctionalities(fns[f].clone()))?;

        for p in &spec.protocols {
            if !p.fail_types.contains("crash") {
                return Err(ModelError::ProtocolWithoutCrash(p.id.clone()));
            }
            if p.progress_q == Quorum::One {
                return Err(ModelError::BadQuorum {
                    protocol: p.id.clone(),
                    field: "progressQ",
                    quorum: p.progress_q,
                });
            }
            if p.reconfig_q == Quorum::All {
                return Err(ModelError::BadQuorum {
                    protocol: p.id.clone(),
                    field: "reconfigQ",
                    quorum: p.reconfig_q,
                });
            }
        }

        let compat = spec
            .software
            .iter()
            .map(|s| {
                spec.computers
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| compatible(s, c))
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();

        // Computers equal on every field except the id share a class.
        let mut equiv_class = Vec::with_capacity(nc);
        for (i, c) in spec.computers.iter().enumerate() {
            let class = spec.computers[..i]
                .iter()
                .position(|d| same_attributes(c, d))
                .map(|j| equiv_class[j])
                .unwrap_or(i);
            equiv_class.push(class);
        }

        Ok(SystemModel {
            spec,
            hw_ids,
            hw_index,
            sw_index,
            proto_index,
            power,
            power_order,
            dev_types,
            dev_type_index,
            comp_devs,
            device_type_of,
            standalone_by_type,
            fns,
            fn_index,
            sw_fn,
            sw_req,
            sw_devs,
            providers,
            fn_order,
            compat,
            equiv_class,
        })
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn sync(&self) -> bool {
        self.spec.sync
    }

    pub fn num_computers(&self) -> usize {
        self.spec.computers.len()
    }

    pub fn num_hw(&self) -> usize {
        self.hw_ids.len()
    }

    pub fn computers(&self) -> HwSet {
        HwSet::first_n(self.num_computers())
    }

    pub fn devices(&self) -> HwSet {
        HwSet::first_n(self.num_hw()).minus(self.computers())
    }

    pub fn is_computer(&self, h: usize) -> bool {
        h < self.num_computers()
    }

    pub fn computer(&self, c: usize) -> &Computer {
        &self.spec.computers[c]
    }

    pub fn device(&self, h: usize) -> &Device {
        &self.spec.devices[h - self.num_computers()]
    }

    pub fn hw_id(&self, h: usize) -> &str {
        &self.hw_ids[h]
    }

    pub fn hw_index(&self, id: &str) -> Option<usize> {
        self.hw_index.get(id).copied()
    }

    pub fn computer_index(&self, id: &str) -> Option<usize> {
        self.hw_index(id).filter(|&h| self.is_computer(h))
    }

    pub fn num_software(&self) -> usize {
        self.spec.software.len()
    }

    pub fn software(&self, s: usize) -> &Software {
        &self.spec.software[s]
    }

    pub fn sw_index(&self, id: &str) -> Option<usize> {
        self.sw_index.get(id).copied()
    }

    pub fn num_protocols(&self) -> usize {
        self.spec.protocols.len()
    }

    pub fn protocol(&self, p: usize) -> &RepProtocol {
        &self.spec.protocols[p]
    }

    pub fn protocol_index(&self, id: &str) -> Option<usize> {
        self.proto_index.get(id).copied()
    }

    pub fn power(&self, h: usize) -> HwSet {
        self.power[h]
    }

    /// Hardware indices ordered so that power sources precede what they power.
    pub fn power_order(&self) -> &[usize] {
        &self.power_order
    }

    pub fn dev_type_name(&self, t: usize) -> &str {
        &self.dev_types[t]
    }

    pub fn dev_type_index(&self, name: &str) -> Option<usize> {
        self.dev_type_index.get(name).copied()
    }

    /// Integrated device types of computer `c`.
    pub fn computer_devices(&self, c: usize) -> DevSet {
        self.comp_devs[c]
    }

    /// Device type of stand-alone device `h`.
    pub fn device_type(&self, h: usize) -> usize {
        self.device_type_of[h - self.num_computers()]
    }

    /// Stand-alone devices of type `t`.
    pub fn standalone_of_type(&self, t: usize) -> HwSet {
        self.standalone_by_type[t]
    }

    pub fn num_fns(&self) -> usize {
        self.fns.len()
    }

    pub fn fn_name(&self, f: usize) -> &str {
        &self.fns[f]
    }

    pub fn fn_index(&self, name: &str) -> Option<usize> {
        self.fn_index.get(name).copied()
    }

    pub fn sw_fn(&self, s: usize) -> usize {
        self.sw_fn[s]
    }

    pub fn sw_req(&self, s: usize) -> &[usize] {
        &self.sw_req[s]
    }

    pub fn sw_devices(&self, s: usize) -> DevSet {
        self.sw_devs[s]
    }

    /// Software providing functionality `f`.
    pub fn providers(&self, f: usize) -> &[usize] {
        &self.providers[f]
    }

    /// Functionalities ordered so that requirements precede their dependents.
    pub fn fn_order(&self) -> &[usize] {
        &self.fn_order
    }

    /// Computers compatible with software `s`.
    pub fn compatible_computers(&self, s: usize) -> HwSet {
        self.compat[s]
    }

    pub fn is_compatible(&self, s: usize, c: usize) -> bool {
        self.compat[s].contains(c)
    }

    /// Computers `c` and `d` agree on every attribute except their id.
    pub fn equivalent_computers(&self, c: usize, d: usize) -> bool {
        self.equiv_class[c] == self.equiv_class[d]
    }
}

fn same_attributes(a: &Computer, b: &Computer) -> bool {
    a.os == b.os
        && a.cpu_arch == b.cpu_arch
        && a.cores == b.cores
        && a.ram == b.ram
        && a.devices == b.devices
        && a.wired_nic == b.wired_nic
        && a.wifi_nic == b.wifi_nic
        && a.cellular == b.cellular
        && a.power == b.power
}

/// Orders `0..n` so that every node follows the nodes returned by `deps`.
/// On a cycle, returns a node on it.
fn topo_order(n: usize, deps: impl Fn(usize) -> Vec<usize>) -> Result<Vec<usize>, usize> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let mut mark = vec![Mark::New; n];
    let mut order = Vec::with_capacity(n);
    for root in 0..n {
        if mark[root] != Mark::New {
            continue;
        }
        let mut stack = vec![(root, deps(root), 0usize)];
        mark[root] = Mark::Active;
        while let Some((node, ds, next)) = stack.last_mut() {
            if *next < ds.len() {
                let d = ds[*next];
                *next += 1;
                match mark[d] {
                    Mark::Active => return Err(d),
                    Mark::Done => {}
                    Mark::New => {
                        mark[d] = Mark::Active;
                        let dd = deps(d);
                        stack.push((d, dd, 0));
                    }
                }
            } else {
                mark[*node] = Mark::Done;
                order.push(*node);
                stack.pop();
            }
        }
    }
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quorum_sizes() {
        assert_eq!(Quorum::Majority.size(3), 2);
        assert_eq!(Quorum::Majority.size(4), 3);
        assert_eq!(Quorum::Majority.size(1), 1);
        assert_eq!(Quorum::All.size(4), 4);
        assert_eq!(Quorum::One.size(5), 1);
    }

    #[test]
    #[should_panic]
    fn quorum_of_nothing_is_a_contract_violation() {
        Quorum::All.size(0);
    }

    #[test]
    fn topo_order_detects_cycles() {
        let edges = [vec![1], vec![2], vec![0]];
        assert!(topo_order(3, |i| edges[i].clone()).is_err());
        let edges = [vec![1, 2], vec![2], vec![]];
        assert_eq!(topo_order(3, |i| edges[i].clone()).unwrap(), vec![2, 1, 0]);
    }
}
