//! Slow reference implementations used to cross-check the optimized
//! engine, and a generator of small random models.
//!
//! Nothing here shares code with the optimized paths except the model
//! types, `valid_config`, `apply_action` and the relation under test.

use std::collections::{HashMap, HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::availability::live_set;
use crate::enumeration::ResilienceRequirement;
use crate::failures::{
    next_fs, remove_dead, FailBound, FailedSet, FailureModel, FailureType, HwType, State,
};
use crate::io::ModelFile;
use crate::model::{
    valid_config, Computer, Config, Device, HwSet, Quorum, RepProtocol, RepSwInst, Software,
    SwInst, SystemModel, SystemSpec,
};
use crate::reconfig::{apply_action, reconfig_relation, ReconfigAction};

pub const MAX_COMPUTERS: usize = 3;
pub const MAX_SOFTWARE: usize = 4;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("model too large for the oracle: {computers} computers, {software} software")]
pub struct TooLarge {
    pub computers: usize,
    pub software: usize,
}

fn guard(sys: &SystemModel) -> Result<(), TooLarge> {
    if sys.num_computers() > MAX_COMPUTERS || sys.num_software() > MAX_SOFTWARE {
        return Err(TooLarge {
            computers: sys.num_computers(),
            software: sys.num_software(),
        });
    }
    Ok(())
}

/// Every valid configuration, by exhaustive enumeration of instance sets.
pub fn all_valid_configs(sys: &SystemModel) -> Result<Vec<Config>, TooLarge> {
    guard(sys)?;
    let all = sys.computers();
    let mut per_sw: Vec<Vec<(Vec<SwInst>, Option<RepSwInst>)>> = Vec::new();
    for s in 0..sys.num_software() {
        let mut reps = vec![None];
        for p in 0..sys.num_protocols() {
            for members in all.subsets().into_iter().filter(|m| !m.is_empty()) {
                reps.push(Some(RepSwInst::new(s, p, members, None)));
                for c in members.iter() {
                    reps.push(Some(RepSwInst::new(s, p, members, Some(c))));
                }
            }
        }
        let mut opts = Vec::new();
        for hosts in all.subsets() {
            let si: Vec<SwInst> = hosts.iter().map(|c| SwInst::new(s, c)).collect();
            for r in &reps {
                // Validity constraints are per instance or monotone in the
                // instance set, so an option invalid on its own never
                // appears in a valid configuration.
                if valid_config(sys, &Config::new(si.clone(), r.iter().copied().collect())) {
                    opts.push((si.clone(), *r));
                }
            }
        }
        per_sw.push(opts);
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; per_sw.len()];
    loop {
        let mut si = Vec::new();
        let mut rsi = Vec::new();
        for (s, &i) in idx.iter().enumerate() {
            si.extend_from_slice(&per_sw[s][i].0);
            rsi.extend(per_sw[s][i].1);
        }
        let cfg = Config::new(si, rsi);
        if valid_config(sys, &cfg) {
            out.push(cfg);
        }
        // Odometer increment.
        let mut k = 0;
        loop {
            if k == idx.len() {
                out.sort();
                return Ok(out);
            }
            idx[k] += 1;
            if idx[k] < per_sw[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn requirements_on(
    sys: &SystemModel,
    s: usize,
    c: usize,
    cfg: &Config,
    fs: FailedSet,
    live: HwSet,
) -> bool {
    let types_ok = sys.sw_devices(s).iter().all(|t| {
        sys.computer_devices(c).contains(t)
            || sys.standalone_of_type(t).iter().any(|d| live.contains(d))
    });
    types_ok
        && sys
            .sw_req(s)
            .iter()
            .all(|&f| naive_avail_on(sys, f, c, cfg, fs))
}

/// Availability of `f` on `c`, searching explicitly for a quorum of
/// replicas that can each serve it.
pub fn naive_avail_on(sys: &SystemModel, f: usize, c: usize, cfg: &Config, fs: FailedSet) -> bool {
    let live = live_set(sys, fs);
    if !live.contains(c) {
        return false;
    }
    for i in cfg.si() {
        let s = i.sw();
        if sys.sw_fn(s) != f || !live.contains(i.computer()) {
            continue;
        }
        if (i.computer() == c || sys.software(s).remote_use)
            && requirements_on(sys, s, i.computer(), cfg, fs, live)
        {
            return true;
        }
    }
    for r in cfg.rsi() {
        let s = r.sw();
        if sys.sw_fn(s) != f {
            continue;
        }
        let p = sys.protocol(r.protocol());
        let q = p.progress_q.size(r.computers.len());
        for quorum in r.computers.subsets() {
            if quorum.len() < q || !quorum.is_subset(live) {
                continue;
            }
            if !(quorum.contains(c) || sys.software(s).remote_use) {
                continue;
            }
            let served = if p.active {
                quorum
                    .iter()
                    .all(|m| requirements_on(sys, s, m, cfg, fs, live))
            } else {
                let primary = r.primary().expect("passive replicas have a primary");
                requirements_on(sys, s, primary, cfg, fs, live)
            };
            if served {
                return true;
            }
        }
    }
    false
}

pub fn naive_avail(sys: &SystemModel, fns: &[usize], cfg: &Config, fs: FailedSet) -> bool {
    fns.iter().all(|&f| {
        sys.computers()
            .iter()
            .any(|c| naive_avail_on(sys, f, c, cfg, fs))
    })
}

/// Resilience straight from its definition: every permitted burst (not only
/// the worst), successors drawn from all valid configurations.
pub struct NaiveResilience<'a> {
    sys: &'a SystemModel,
    req: &'a ResilienceRequirement,
    universe: Vec<Config>,
    memo: HashMap<(Config, FailedSet), bool>,
}

impl<'a> NaiveResilience<'a> {
    pub fn new(sys: &'a SystemModel, req: &'a ResilienceRequirement) -> Result<Self, TooLarge> {
        Ok(NaiveResilience {
            sys,
            req,
            universe: all_valid_configs(sys)?,
            memo: HashMap::new(),
        })
    }

    pub fn universe(&self) -> &[Config] {
        &self.universe
    }

    pub fn resilient(&mut self, cfg: &Config, fs: FailedSet) -> bool {
        if let Some(&v) = self.memo.get(&(cfg.clone(), fs)) {
            return v;
        }
        let sys = self.sys;
        let mut v = naive_avail(sys, &self.req.crit_fns, cfg, fs);
        if v {
            for next in next_fs(sys, &self.req.fm, fs) {
                let base = remove_dead(sys, cfg, next);
                let succ: Vec<Config> = self
                    .universe
                    .iter()
                    .filter(|c| reconfig_relation(sys, &base, c, next))
                    .cloned()
                    .collect();
                if !succ.iter().any(|c| self.resilient(c, next)) {
                    v = false;
                    break;
                }
            }
        }
        self.memo.insert((cfg.clone(), fs), v);
        v
    }
}

/// Every action that could conceivably apply in `cfg`.
fn candidate_actions(sys: &SystemModel, cfg: &Config) -> Vec<ReconfigAction> {
    let computers = sys.computers();
    let mut out = Vec::new();
    for &i in cfg.si() {
        out.push(ReconfigAction::Stop(i));
        for to in computers.iter() {
            out.push(ReconfigAction::Move { inst: i, to });
        }
    }
    for r in cfg.rsi() {
        out.push(ReconfigAction::StopRep { sw: r.sw() });
        for members in computers.subsets().into_iter().filter(|m| !m.is_empty()) {
            out.push(ReconfigAction::ChangeReps {
                sw: r.sw(),
                computers: members,
                primary: None,
            });
            for p in members.iter() {
                out.push(ReconfigAction::ChangeReps {
                    sw: r.sw(),
                    computers: members,
                    primary: Some(p),
                });
            }
        }
    }
    for s in 0..sys.num_software() {
        for c in computers.iter() {
            out.push(ReconfigAction::Start(SwInst::new(s, c)));
        }
    }
    out
}

/// Configurations reachable from `cfg` under `fs` by at most `max_len`
/// actions, each applied with its preconditions checked.
pub fn reachable_set(
    sys: &SystemModel,
    cfg: &Config,
    fs: FailedSet,
    max_len: usize,
) -> Result<HashSet<Config>, TooLarge> {
    guard(sys)?;
    let mut seen = HashSet::from([cfg.clone()]);
    let mut queue = VecDeque::from([(cfg.clone(), 0usize)]);
    while let Some((c, d)) = queue.pop_front() {
        if d == max_len {
            continue;
        }
        let state = State { cfg: c.clone(), fs };
        for a in candidate_actions(sys, &c) {
            if let Ok(next) = apply_action(sys, &state, &a) {
                if seen.insert(next.cfg.clone()) {
                    queue.push_back((next.cfg, d + 1));
                }
            }
        }
    }
    Ok(seen)
}

/// Default search depth: enough for every instance to be touched once.
pub fn default_max_len(sys: &SystemModel) -> usize {
    sys.num_software() * sys.num_computers() + sys.num_software()
}

/// Whether some action sequence leads from `cfg` to `target`, and every
/// instance the sequence starts, moves or re-members can still run in
/// `target` itself.
///
/// Actions check requirements when applied, so a sequence may lean on a
/// helper it stops again later; the second conjunct rules such targets out.
pub fn reachable_by_actions(
    sys: &SystemModel,
    cfg: &Config,
    target: &Config,
    fs: FailedSet,
    max_len: usize,
) -> Result<bool, TooLarge> {
    Ok(reachable_by_actions_literal(sys, cfg, target, fs, max_len)?
        && runnable_in_target(sys, cfg, target, fs))
}

/// Every target for which [`reachable_by_actions`] holds.
pub fn reachable_targets(
    sys: &SystemModel,
    cfg: &Config,
    fs: FailedSet,
    max_len: usize,
) -> Result<HashSet<Config>, TooLarge> {
    let mut out = reachable_set(sys, cfg, fs, max_len)?;
    out.retain(|t| runnable_in_target(sys, cfg, t, fs));
    Ok(out)
}

/// Plain reachability by action sequences.
pub fn reachable_by_actions_literal(
    sys: &SystemModel,
    cfg: &Config,
    target: &Config,
    fs: FailedSet,
    max_len: usize,
) -> Result<bool, TooLarge> {
    Ok(reachable_set(sys, cfg, fs, max_len)?.contains(target))
}

fn runnable_in_target(sys: &SystemModel, cfg: &Config, target: &Config, fs: FailedSet) -> bool {
    let live = live_set(sys, fs);
    let runs = |s: usize, c: usize| {
        sys.is_compatible(s, c) && requirements_on(sys, s, c, target, fs, live)
    };
    let new_si = target
        .si()
        .iter()
        .filter(|i| !cfg.si().contains(i))
        .all(|i| runs(i.sw(), i.computer()));
    let changed_rsi = target
        .rsi()
        .iter()
        .filter(|r| !cfg.rsi().contains(r))
        .all(|r| match r.primary() {
            Some(p) => runs(r.sw(), p),
            None => r.computers.iter().all(|c| runs(r.sw(), c)),
        });
    new_si && changed_rsi
}

/// Parameters of the random model generator.
#[derive(Debug, Clone, Copy)]
pub struct RandomParams {
    pub max_computers: usize,
    pub max_software: usize,
    /// Leave every burst cap unset.
    pub unlimited_rate: bool,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            max_computers: 3,
            max_software: 3,
            unlimited_rate: false,
        }
    }
}

const DEV_TYPES: [&str; 2] = ["gps", "cam"];

/// A small random model that passes validation: one to three computers,
/// optional stand-alone devices with power chains, software with acyclic
/// functionality dependencies, and a mix of active and passive protocols.
pub fn random_model(seed: u64, params: RandomParams) -> ModelFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nc = rng.gen_range(1..=params.max_computers);
    let ns = rng.gen_range(1..=params.max_software);

    let mut computers: Vec<Computer> = (0..nc)
        .map(|i| Computer {
            id: format!("c{i}"),
            os: ["linux", "rtos"][rng.gen_range(0..2)].into(),
            cpu_arch: "arm".into(),
            cores: rng.gen_range(1..=3),
            ram: 1024,
            devices: if rng.gen_bool(0.2) {
                [DEV_TYPES[rng.gen_range(0..2)].to_string()].into()
            } else {
                Default::default()
            },
            wired_nic: rng.gen_bool(0.7),
            wifi_nic: true,
            cellular: false,
            power: Default::default(),
        })
        .collect();
    let mut devices = Vec::new();
    for (i, ty) in DEV_TYPES.iter().enumerate() {
        if rng.gen_bool(0.4) {
            devices.push(Device {
                id: format!("d{i}"),
                device_type: ty.to_string(),
                power: Default::default(),
            });
        }
    }
    // A device may power a computer, or another device may power a device.
    if !devices.is_empty() && rng.gen_bool(0.2) {
        let d = devices[0].id.clone();
        let c = rng.gen_range(0..nc);
        computers[c].power.insert(d);
    }
    if devices.len() == 2 && rng.gen_bool(0.3) {
        let src = devices[0].id.clone();
        devices[1].power.insert(src);
    }

    let nfns = rng.gen_range(1..=ns);
    let fn_name = |f: usize| format!("f{f}");
    let mut software: Vec<Software> = (0..ns)
        .map(|i| {
            let f = if i < nfns { i } else { rng.gen_range(0..nfns) };
            let fn_req = (0..f).filter(|_| rng.gen_bool(0.4)).map(fn_name).collect();
            let persis_state = rng.gen_bool(0.15);
            Software {
                id: format!("s{i}"),
                func: fn_name(f),
                fn_req,
                devices: if rng.gen_bool(0.3) {
                    [DEV_TYPES[rng.gen_range(0..2)].to_string()].into()
                } else {
                    Default::default()
                },
                cpu_arch: None,
                os: if rng.gen_bool(0.15) {
                    Some("linux".into())
                } else {
                    None
                },
                ram: 128,
                cores: rng.gen_range(1..=2),
                cellular: false,
                wired: rng.gen_bool(0.15),
                deterministic: rng.gen_bool(0.6),
                fast_starting: rng.gen_bool(0.8),
                migratable: rng.gen_bool(0.4),
                persis_state,
                preferred: rng.gen_bool(0.7),
                remote_use: rng.gen_bool(0.6),
                resumable: rng.gen_bool(0.6),
                single_instance: persis_state || rng.gen_bool(0.5),
                small_persis_state: rng.gen_bool(0.5),
            }
        })
        .collect();
    software.shuffle(&mut rng);

    let mut protocols = Vec::new();
    let quorums = [
        (Quorum::All, Quorum::One),
        (Quorum::Majority, Quorum::Majority),
        (Quorum::All, Quorum::Majority),
        (Quorum::Majority, Quorum::One),
    ];
    for i in 0..rng.gen_range(0..=2) {
        let (progress_q, reconfig_q) = quorums[rng.gen_range(0..quorums.len())];
        protocols.push(RepProtocol {
            id: format!("p{i}"),
            sync: rng.gen_bool(0.5),
            fail_types: ["crash".to_string()].into(),
            active: rng.gen_bool(0.5),
            progress_q,
            reconfig_q,
        });
    }

    let cap = |rng: &mut ChaCha8Rng, n: usize| {
        if params.unlimited_rate || rng.gen_bool(0.4) {
            None
        } else {
            Some(rng.gen_range(1..=n.max(1)).min(n))
        }
    };
    let n_comp = rng.gen_range(0..=nc);
    let mut bounds = vec![FailBound {
        hw_type: HwType::Computer,
        f_type: FailureType::Crash,
        n: n_comp,
        max_simult: cap(&mut rng, n_comp),
    }];
    if !devices.is_empty() && rng.gen_bool(0.4) {
        let n = rng.gen_range(1..=devices.len());
        bounds.push(FailBound {
            hw_type: HwType::Device,
            f_type: FailureType::Crash,
            n,
            max_simult: cap(&mut rng, n),
        });
    }
    let total: usize = bounds.iter().map(|b| b.n).sum();
    let max_simult = cap(&mut rng, total);

    let mut crit_fns: Vec<String> = (0..nfns)
        .filter(|_| rng.gen_bool(0.6))
        .map(fn_name)
        .collect();
    if crit_fns.is_empty() {
        crit_fns.push(fn_name(rng.gen_range(0..nfns)));
    }

    ModelFile {
        system: SystemSpec {
            sync: rng.gen_bool(0.7),
            computers,
            devices,
            software,
            protocols,
        },
        failure_model: FailureModel { bounds, max_simult },
        crit_fns,
        notes: Default::default(),
    }
}
