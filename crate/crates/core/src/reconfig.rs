//! Reconfiguration actions, their transition semantics, the logical
//! reconfiguration relation, and recovery of an action sequence realizing a
//! pair of configurations related by it.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::availability::{live_set, Availability};
use crate::failures::{FailedSet, State};
use crate::model::{resources_ok, valid_config, Config, HwSet, RepSwInst, SwInst, SystemModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ReconfigAction {
    /// Replace the member set (and, for passive protocols, the primary) of
    /// the replicated instance of `sw`.
    ChangeReps {
        sw: usize,
        computers: HwSet,
        primary: Option<usize>,
    },
    Stop(SwInst),
    StopRep {
        sw: usize,
    },
    Start(SwInst),
    Move {
        inst: SwInst,
        to: usize,
    },
}

impl fmt::Display for ReconfigAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReconfigAction::ChangeReps {
                sw,
                computers,
                primary,
            } => write!(f, "changeReps(sw {sw}, {computers:?}, {primary:?})"),
            ReconfigAction::Stop(i) => write!(f, "stop(sw {} @ {})", i.sw, i.computer),
            ReconfigAction::StopRep { sw } => write!(f, "stopRep(sw {sw})"),
            ReconfigAction::Start(i) => write!(f, "start(sw {} @ {})", i.sw, i.computer),
            ReconfigAction::Move { inst, to } => {
                write!(f, "move(sw {} @ {} -> {to})", inst.sw, inst.computer)
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReconfigError {
    #[error("{action} rejected: {clause}")]
    Rejected {
        action: ReconfigAction,
        clause: &'static str,
    },
    #[error("no action sequence leads to the target configuration")]
    NoWitness,
}

/// Computer `c` meets the requirements of software `s` given the
/// availability of a configuration. Liveness of `c` is not required.
pub fn can_run_with(sys: &SystemModel, avail: &Availability, c: usize, s: usize) -> bool {
    sys.is_compatible(s, c) && avail.requirements_met(sys, s, c)
}

pub fn can_run(sys: &SystemModel, c: usize, s: usize, cfg: &Config, fs: FailedSet) -> bool {
    can_run_with(sys, &Availability::compute(sys, cfg, fs), c, s)
}

fn reconfig_quorum_live(sys: &SystemModel, r: &RepSwInst, live: HwSet) -> bool {
    let p = sys.protocol(r.protocol());
    r.computers.inter(live).len() >= p.reconfig_q.size(r.computers.len())
}

/// Clauses of the relation concerning the instances of one software `s`,
/// excluding availability in the target configuration.
pub(crate) fn software_step_ok(
    sys: &SystemModel,
    s: usize,
    before: (HwSet, Option<&RepSwInst>),
    after: (HwSet, Option<&RepSwInst>),
    live: HwSet,
) -> bool {
    let sw = sys.software(s);
    if let Some(r2) = after.1 {
        let Some(r) = before.1.filter(|r| r.protocol == r2.protocol) else {
            return false;
        };
        if r.computers != r2.computers || r.primary != r2.primary {
            if !reconfig_quorum_live(sys, r, live) {
                return false;
            }
            if !r2.computers.is_subset(r.computers) && !sw.can_add_replicas() {
                return false;
            }
            if r2.primary().is_some_and(|p| !live.contains(p)) {
                return false;
            }
        }
    }
    let added = after.0.minus(before.0);
    if added.is_empty() || sw.startable() {
        return added.is_subset(live);
    }
    // Each moved instance needs its own live source instance.
    let sources = before.0.minus(after.0).inter(live);
    added.is_subset(live) && sw.movable() && added.len() <= sources.len()
}

pub(crate) fn structural_ok(sys: &SystemModel, cfg: &Config, target: &Config, live: HwSet) -> bool {
    (0..sys.num_software()).all(|s| {
        software_step_ok(
            sys,
            s,
            (cfg.si_hosts(s), cfg.rsi_of(s)),
            (target.si_hosts(s), target.rsi_of(s)),
            live,
        )
    })
}

/// Requirements that every new or re-membered instance must satisfy in the
/// target configuration.
pub(crate) fn requirements_ok(
    sys: &SystemModel,
    cfg: &Config,
    target: &Config,
    avail: &Availability,
) -> bool {
    for i in target.si() {
        if !cfg.contains_si(*i) && !can_run_with(sys, avail, i.computer(), i.sw()) {
            return false;
        }
    }
    for r2 in target.rsi() {
        let r = cfg.rsi_of(r2.sw()).expect("checked by structural_ok");
        if r.computers == r2.computers && r.primary == r2.primary {
            continue;
        }
        let ok = match r2.primary() {
            None => r2
                .computers
                .iter()
                .all(|c| can_run_with(sys, avail, c, r2.sw())),
            Some(p) => can_run_with(sys, avail, p, r2.sw()),
        };
        if !ok {
            return false;
        }
    }
    true
}

/// Whether `cfg` can be reconfigured to `target` under failed set `fs`.
///
/// `cfg` is expected to be free of dead instances. Two refinements over the
/// bare clause list keep the relation in agreement with action sequences:
/// a moved instance needs a distinct removed instance on a live computer,
/// and a passive instance whose primary changes is checked like one whose
/// members change.
pub fn reconfig_relation(sys: &SystemModel, cfg: &Config, target: &Config, fs: FailedSet) -> bool {
    let live = live_set(sys, fs);
    valid_config(sys, target)
        && structural_ok(sys, cfg, target, live)
        && requirements_ok(sys, cfg, target, &Availability::compute(sys, target, fs))
}

fn reject(action: &ReconfigAction, clause: &'static str) -> ReconfigError {
    ReconfigError::Rejected {
        action: *action,
        clause,
    }
}

/// Applies one action, checking its preconditions.
pub fn apply_action(
    sys: &SystemModel,
    s: &State,
    a: &ReconfigAction,
) -> Result<State, ReconfigError> {
    let live = live_set(sys, s.fs);
    let cfg = &s.cfg;
    let next = match *a {
        ReconfigAction::Stop(inst) => {
            if !cfg.contains_si(inst) {
                return Err(reject(a, "instance is not running"));
            }
            cfg.without_si(inst)
        }
        ReconfigAction::StopRep { sw } => {
            if cfg.rsi_of(sw).is_none() {
                return Err(reject(a, "no replicated instance of the software"));
            }
            cfg.with_rsi(sw, None)
        }
        ReconfigAction::Start(inst) => {
            let sw = sys.software(inst.sw());
            if cfg.contains_si(inst) {
                return Err(reject(a, "instance already running"));
            }
            if !live.contains(inst.computer()) {
                return Err(reject(a, "target computer is not live"));
            }
            if !sw.startable() {
                return Err(reject(
                    a,
                    "software is not fast-starting, resumable and free of persistent state",
                ));
            }
            if sw.single_instance && cfg.instance_count(inst.sw()) > 0 {
                return Err(reject(
                    a,
                    "single-instance software already has an instance",
                ));
            }
            let next = cfg.with_si(inst);
            if !resources_ok(sys, &next) {
                return Err(reject(a, "insufficient resources"));
            }
            if !can_run(sys, inst.computer(), inst.sw(), &next, s.fs) {
                return Err(reject(a, "target computer cannot run the software"));
            }
            next
        }
        ReconfigAction::Move { inst, to } => {
            let sw = sys.software(inst.sw());
            if !cfg.contains_si(inst) {
                return Err(reject(a, "instance is not running"));
            }
            if to == inst.computer() || !sys.is_computer(to) {
                return Err(reject(a, "target must be a different computer"));
            }
            if !sw.migratable {
                return Err(reject(a, "software is not migratable"));
            }
            if !live.contains(inst.computer()) || !live.contains(to) {
                return Err(reject(a, "source and target computers must be live"));
            }
            if !sw.movable() {
                return Err(reject(a, "persistent state is too large to move"));
            }
            let moved = SwInst::new(inst.sw(), to);
            if cfg.contains_si(moved) {
                return Err(reject(a, "target already runs an instance"));
            }
            let next = cfg.without_si(inst).with_si(moved);
            if !resources_ok(sys, &next) {
                return Err(reject(a, "insufficient resources"));
            }
            if !can_run(sys, to, inst.sw(), &next, s.fs) {
                return Err(reject(a, "target computer cannot run the software"));
            }
            next
        }
        ReconfigAction::ChangeReps {
            sw,
            computers,
            primary,
        } => {
            let r = *cfg
                .rsi_of(sw)
                .ok_or_else(|| reject(a, "no replicated instance of the software"))?;
            let p = sys.protocol(r.protocol());
            if computers.is_empty() || !computers.is_subset(sys.computers()) {
                return Err(reject(a, "replica set must be a nonempty set of computers"));
            }
            if p.active != primary.is_none() {
                return Err(reject(
                    a,
                    "a primary is required exactly for passive protocols",
                ));
            }
            if !reconfig_quorum_live(sys, &r, live) {
                return Err(reject(a, "no live reconfiguration quorum"));
            }
            if !computers.is_subset(r.computers) && !sys.software(sw).can_add_replicas() {
                return Err(reject(a, "software cannot gain new replicas"));
            }
            let updated = RepSwInst::new(sw, r.protocol(), computers, primary);
            let next = cfg.with_rsi(sw, Some(updated));
            if !resources_ok(sys, &next) {
                return Err(reject(a, "insufficient resources"));
            }
            let avail = Availability::compute(sys, &next, s.fs);
            match primary {
                None => {
                    if !computers.iter().all(|c| can_run_with(sys, &avail, c, sw)) {
                        return Err(reject(a, "some replica cannot run the software"));
                    }
                }
                Some(pr) => {
                    if !computers.contains(pr) {
                        return Err(reject(a, "primary must be a replica"));
                    }
                    if !live.contains(pr) {
                        return Err(reject(a, "primary is not live"));
                    }
                    if !can_run_with(sys, &avail, pr, sw) {
                        return Err(reject(a, "primary cannot run the software"));
                    }
                }
            }
            next
        }
    };
    if !valid_config(sys, &next) {
        return Err(reject(a, "resulting configuration is invalid"));
    }
    Ok(State {
        cfg: next,
        fs: s.fs,
    })
}

fn phase(a: &ReconfigAction, cfg: &Config) -> u8 {
    match a {
        ReconfigAction::Stop(_) => 0,
        ReconfigAction::StopRep { .. } => 1,
        ReconfigAction::ChangeReps { sw, computers, .. } => {
            let shrinking = cfg
                .rsi_of(*sw)
                .is_some_and(|r| computers.is_subset(r.computers));
            if shrinking {
                2
            } else {
                3
            }
        }
        ReconfigAction::Move { .. } => 4,
        ReconfigAction::Start(_) => 5,
    }
}

/// The actions that turn `cfg` into `target`, unordered.
fn diff_actions(
    sys: &SystemModel,
    cfg: &Config,
    target: &Config,
    live: HwSet,
) -> Vec<ReconfigAction> {
    let mut out = Vec::new();
    for s in 0..sys.num_software() {
        let before = cfg.si_hosts(s);
        let after = target.si_hosts(s);
        let added = after.minus(before);
        let mut removed = before.minus(after);
        if !sys.software(s).startable() {
            let sources: Vec<usize> = removed.inter(live).iter().collect();
            for (from, to) in sources.into_iter().zip(added.iter()) {
                out.push(ReconfigAction::Move {
                    inst: SwInst::new(s, from),
                    to,
                });
                removed.remove(from);
            }
        } else {
            out.extend(
                added
                    .iter()
                    .map(|c| ReconfigAction::Start(SwInst::new(s, c))),
            );
        }
        out.extend(
            removed
                .iter()
                .map(|c| ReconfigAction::Stop(SwInst::new(s, c))),
        );
        match (cfg.rsi_of(s), target.rsi_of(s)) {
            (Some(_), None) => out.push(ReconfigAction::StopRep { sw: s }),
            (Some(r), Some(r2)) if r != r2 => out.push(ReconfigAction::ChangeReps {
                sw: s,
                computers: r2.computers,
                primary: r2.primary(),
            }),
            _ => {}
        }
    }
    out.sort_by_key(|a| (phase(a, cfg), *a));
    out
}

/// An action sequence leading from `cfg` to `target` under `fs`, emitted in
/// phases (stops, replica-set changes, moves, starts). Within a phase,
/// actions whose preconditions depend on others are deferred until they
/// apply.
pub fn derive_actions(
    sys: &SystemModel,
    cfg: &Config,
    target: &Config,
    fs: FailedSet,
) -> Result<Vec<ReconfigAction>, ReconfigError> {
    if !reconfig_relation(sys, cfg, target, fs) {
        return Err(ReconfigError::NoWitness);
    }
    let actions = diff_actions(sys, cfg, target, live_set(sys, fs));
    let mut seq = Vec::with_capacity(actions.len());
    let mut done = vec![false; actions.len()];
    let mut dead_ends = HashSet::new();
    let start = State {
        cfg: cfg.clone(),
        fs,
    };
    if order_actions(sys, &actions, &start, &mut done, &mut seq, &mut dead_ends)
        && seq_reaches(sys, &start, &seq, target)
    {
        return Ok(seq);
    }
    // Some targets need detours, e.g. two instances trading hosts on
    // computers with room for only one of them.
    search_actions(sys, &start, target, actions.len() + SEARCH_EXTRA_DEPTH)
        .ok_or(ReconfigError::NoWitness)
}

const SEARCH_EXTRA_DEPTH: usize = 4;
const SEARCH_MAX_STATES: usize = 200_000;

/// Every action whose preconditions could hold in `cfg`.
fn candidate_actions(sys: &SystemModel, cfg: &Config, live: HwSet) -> Vec<ReconfigAction> {
    let mut out = Vec::new();
    for &i in cfg.si() {
        out.push(ReconfigAction::Stop(i));
        for to in live.inter(sys.computers()).iter() {
            out.push(ReconfigAction::Move { inst: i, to });
        }
    }
    for r in cfg.rsi() {
        out.push(ReconfigAction::StopRep { sw: r.sw() });
        let hosts = sys.compatible_computers(r.sw()).union(r.computers);
        for members in hosts.subsets().into_iter().filter(|m| !m.is_empty()) {
            if sys.protocol(r.protocol()).active {
                out.push(ReconfigAction::ChangeReps {
                    sw: r.sw(),
                    computers: members,
                    primary: None,
                });
            } else {
                out.extend(
                    members
                        .inter(live)
                        .iter()
                        .map(|p| ReconfigAction::ChangeReps {
                            sw: r.sw(),
                            computers: members,
                            primary: Some(p),
                        }),
                );
            }
        }
    }
    for s in 0..sys.num_software() {
        for c in sys.compatible_computers(s).inter(live).iter() {
            out.push(ReconfigAction::Start(SwInst::new(s, c)));
        }
    }
    out
}

/// Breadth-first search for a shortest action sequence, bounded in depth
/// and in the number of states visited.
fn search_actions(
    sys: &SystemModel,
    start: &State,
    target: &Config,
    max_depth: usize,
) -> Option<Vec<ReconfigAction>> {
    use std::collections::{HashMap, VecDeque};
    let live = live_set(sys, start.fs);
    let mut parent: HashMap<Config, Option<(Config, ReconfigAction)>> = HashMap::new();
    parent.insert(start.cfg.clone(), None);
    let mut queue = VecDeque::from([(start.cfg.clone(), 0usize)]);
    while let Some((cfg, depth)) = queue.pop_front() {
        if cfg == *target {
            let mut seq = Vec::new();
            let mut at = cfg;
            while let Some(Some((prev, a))) = parent.get(&at) {
                seq.push(*a);
                at = prev.clone();
            }
            seq.reverse();
            return Some(seq);
        }
        if depth == max_depth || parent.len() > SEARCH_MAX_STATES {
            continue;
        }
        let state = State {
            cfg: cfg.clone(),
            fs: start.fs,
        };
        for a in candidate_actions(sys, &cfg, live) {
            if let Ok(next) = apply_action(sys, &state, &a) {
                if !parent.contains_key(&next.cfg) {
                    parent.insert(next.cfg.clone(), Some((cfg.clone(), a)));
                    queue.push_back((next.cfg, depth + 1));
                }
            }
        }
    }
    None
}

fn seq_reaches(sys: &SystemModel, start: &State, seq: &[ReconfigAction], target: &Config) -> bool {
    let mut s = start.clone();
    for a in seq {
        match apply_action(sys, &s, a) {
            Ok(n) => s = n,
            Err(_) => return false,
        }
    }
    s.cfg == *target
}

fn order_actions(
    sys: &SystemModel,
    actions: &[ReconfigAction],
    s: &State,
    done: &mut Vec<bool>,
    seq: &mut Vec<ReconfigAction>,
    dead_ends: &mut HashSet<Vec<bool>>,
) -> bool {
    if done.iter().all(|&d| d) {
        return true;
    }
    if dead_ends.contains(done) {
        return false;
    }
    for i in 0..actions.len() {
        if done[i] {
            continue;
        }
        if let Ok(next) = apply_action(sys, s, &actions[i]) {
            done[i] = true;
            seq.push(actions[i]);
            if order_actions(sys, actions, &next, done, seq, dead_ends) {
                return true;
            }
            seq.pop();
            done[i] = false;
        }
    }
    dead_ends.insert(done.clone());
    false
}
