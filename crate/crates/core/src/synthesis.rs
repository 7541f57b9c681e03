//! Resilience checking, the quality metric, the top-level solvers and policy
//! extraction.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::time::{Duration, Instant};

use dashmap::DashMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::debug;

use crate::availability::{live_set, Availability};
use crate::enumeration::{ResilienceRequirement, Universe};
use crate::failures::{next_fs, next_fs_worst, remove_dead, FailedSet};
use crate::model::{Config, SystemModel};
use crate::quotient::{partition_by_class, signature, signature_at, Signature};
use crate::reconfig::{derive_actions, ReconfigAction};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Quality {
    pub qos: usize,
    pub cost: usize,
}

impl Ord for Quality {
    /// Greater is better: more preferred instances, then fewer replicas.
    fn cmp(&self, other: &Self) -> Ordering {
        self.qos
            .cmp(&other.qos)
            .then_with(|| other.cost.cmp(&self.cost))
    }
}

impl PartialOrd for Quality {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Preferred instances (a replicated instance counts once) and the number
/// of processes (a replicated instance counts once per member).
pub fn quality(sys: &SystemModel, cfg: &Config) -> Quality {
    let qos = cfg
        .si()
        .iter()
        .map(|i| i.sw())
        .chain(cfg.rsi().iter().map(|r| r.sw()))
        .filter(|&s| sys.software(s).preferred)
        .count();
    let cost = cfg.si().len() + cfg.rsi().iter().map(|r| r.computers.len()).sum::<usize>();
    Quality { qos, cost }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuotientMode {
    /// Every configuration is explored individually.
    Off,
    /// Only the initial configurations are reduced to class representatives.
    Partial,
    /// Initial configurations and successors are reduced, and results are
    /// cached per class.
    #[default]
    Full,
}

impl std::fmt::Display for QuotientMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            QuotientMode::Off => "off",
            QuotientMode::Partial => "partial",
            QuotientMode::Full => "full",
        })
    }
}

/// Which failure bursts the recursion considers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bursts {
    /// Only subset-maximal bursts.
    Worst,
    /// Every permitted burst.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    /// Report resilient classes in canonical order.
    Resilient,
    /// Report resilient classes best quality first.
    #[default]
    Best,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum StateKey {
    Class(Signature),
    Concrete(Config),
}

#[derive(Debug, Clone)]
struct Verdict {
    resilient: bool,
    /// Chosen successor per burst, for resilient states.
    choices: Vec<(FailedSet, Config)>,
}

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("no resilient successor for a state recorded as resilient")]
    DanglingSuccessor,
    #[error("successor is not reachable by actions: {0}")]
    Actions(#[from] crate::reconfig::ReconfigError),
}

/// Resilience checker over a fixed universe of successor configurations.
pub struct Solver<'a> {
    universe: Universe<'a>,
    mode: QuotientMode,
    bursts: Bursts,
    memo: DashMap<(StateKey, FailedSet), Verdict>,
}

impl<'a> Solver<'a> {
    pub fn new(sys: &'a SystemModel, req: &'a ResilienceRequirement, mode: QuotientMode) -> Self {
        Self::with_universe(Universe::new(sys, req), mode, Bursts::Worst)
    }

    pub fn with_universe(universe: Universe<'a>, mode: QuotientMode, bursts: Bursts) -> Self {
        Solver {
            universe,
            mode,
            bursts,
            memo: DashMap::new(),
        }
    }

    pub fn universe(&self) -> &Universe<'a> {
        &self.universe
    }

    fn sys(&self) -> &'a SystemModel {
        self.universe.system()
    }

    fn req(&self) -> &'a ResilienceRequirement {
        self.universe.requirement()
    }

    pub fn next_failed_sets(&self, fs: FailedSet) -> Vec<FailedSet> {
        match self.bursts {
            Bursts::Worst => next_fs_worst(self.sys(), &self.req().fm, fs),
            Bursts::All => next_fs(self.sys(), &self.req().fm, fs),
        }
    }

    fn key(&self, cfg: &Config, fs: FailedSet) -> StateKey {
        match self.mode {
            QuotientMode::Full => {
                StateKey::Class(signature_at(self.sys(), cfg, live_set(self.sys(), fs)))
            }
            _ => StateKey::Concrete(cfg.clone()),
        }
    }

    pub fn available(&self, cfg: &Config, fs: FailedSet) -> bool {
        Availability::compute(self.sys(), cfg, fs).avail_all(&self.req().crit_fns)
    }

    /// Successors of `base` best quality first; with full quotienting only
    /// the first member of each class is kept.
    pub fn candidates(&self, base: &Config, fs: FailedSet) -> Vec<Config> {
        let sys = self.sys();
        let mut succ: Vec<(Quality, Config)> = self
            .universe
            .successors(base, fs)
            .into_iter()
            .map(|c| (quality(sys, &c), c))
            .collect();
        succ.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        if self.mode == QuotientMode::Full {
            let live = live_set(sys, fs);
            let mut seen = HashSet::new();
            succ.retain(|(_, c)| seen.insert(signature_at(sys, c, live)));
        }
        succ.into_iter().map(|(_, c)| c).collect()
    }

    /// The best resilient configuration that `base` can be reconfigured to
    /// under `fs`.
    pub fn best_successor(&self, base: &Config, fs: FailedSet) -> Option<Config> {
        self.candidates(base, fs)
            .into_iter()
            .find(|c| self.resilient(c, fs))
    }

    /// The best resilient successor that some action sequence reaches,
    /// with that sequence. The relation only checks requirements in the
    /// target, so on rare models a related successor cannot be reached when
    /// every intermediate step must satisfy them.
    fn witnessed_successor(
        &self,
        base: &Config,
        fs: FailedSet,
    ) -> Result<(Config, Vec<ReconfigAction>), SynthesisError> {
        let mut any = false;
        for c in self.candidates(base, fs) {
            if !self.resilient(&c, fs) {
                continue;
            }
            any = true;
            if let Ok(actions) = derive_actions(self.sys(), base, &c, fs) {
                return Ok((c, actions));
            }
        }
        Err(if any {
            SynthesisError::Actions(crate::reconfig::ReconfigError::NoWitness)
        } else {
            SynthesisError::DanglingSuccessor
        })
    }

    pub fn resilient(&self, cfg: &Config, fs: FailedSet) -> bool {
        let key = (self.key(cfg, fs), fs);
        if let Some(v) = self.memo.get(&key) {
            return v.resilient;
        }
        let mut verdict = Verdict {
            resilient: self.available(cfg, fs),
            choices: Vec::new(),
        };
        if verdict.resilient {
            for next in self.next_failed_sets(fs) {
                let base = remove_dead(self.sys(), cfg, next);
                match self.best_successor(&base, next) {
                    Some(succ) => verdict.choices.push((next, succ)),
                    None => {
                        verdict.resilient = false;
                        verdict.choices.clear();
                        break;
                    }
                }
            }
        }
        let r = verdict.resilient;
        self.memo.insert(key, verdict);
        r
    }

    /// Availability now and after one reconfiguration following any burst.
    pub fn one_resilient(&self, cfg: &Config, fs: FailedSet) -> bool {
        self.available(cfg, fs)
            && self.next_failed_sets(fs).into_iter().all(|next| {
                let base = remove_dead(self.sys(), cfg, next);
                self.universe
                    .successors(&base, next)
                    .iter()
                    .any(|c| self.available(c, next))
            })
    }

    /// Number of cached (state, failed set) verdicts.
    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }

    /// Follows the chosen successors from `roots` under every burst and
    /// records the actions realizing each step.
    pub fn extract_policy(&self, roots: &[Config]) -> Result<Policy, SynthesisError> {
        let sys = self.sys();
        let mut policy = Policy {
            roots: roots.to_vec(),
            entries: BTreeMap::new(),
        };
        let mut seen = HashSet::new();
        let mut stack: Vec<(Config, FailedSet)> = roots
            .iter()
            .map(|c| (c.clone(), FailedSet::EMPTY))
            .collect();
        while let Some((cfg, fs)) = stack.pop() {
            if !seen.insert((cfg.clone(), fs)) {
                continue;
            }
            if !self.resilient(&cfg, fs) {
                return Err(SynthesisError::DanglingSuccessor);
            }
            for next in self.next_failed_sets(fs) {
                let base = remove_dead(sys, &cfg, next);
                let (target, actions) = self.witnessed_successor(&base, next)?;
                policy.entries.insert(
                    PolicyKey {
                        config: cfg.clone(),
                        failed: fs,
                        burst: next.minus(fs),
                    },
                    PolicyEntry {
                        target: target.clone(),
                        actions,
                    },
                );
                stack.push((target, next));
            }
        }
        Ok(policy)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PolicyKey {
    pub config: Config,
    pub failed: FailedSet,
    pub burst: FailedSet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyEntry {
    pub target: Config,
    pub actions: Vec<ReconfigAction>,
}

/// What to do after each burst, for every state reachable from the roots.
///
/// States are keyed by their concrete configuration: an action sequence
/// names concrete instances, so it only replays on the configuration it was
/// derived from, even when other members of the class share the verdict.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Policy {
    pub roots: Vec<Config>,
    pub entries: BTreeMap<PolicyKey, PolicyEntry>,
}

impl Policy {
    pub fn lookup(
        &self,
        cfg: &Config,
        failed: FailedSet,
        burst: FailedSet,
    ) -> Option<&PolicyEntry> {
        self.entries.get(&PolicyKey {
            config: cfg.clone(),
            failed,
            burst,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResilientClass {
    pub signature: Signature,
    /// Least member of the class in canonical order.
    pub config: Config,
    pub quality: Quality,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub all_cfg: usize,
    pub init_cfg: usize,
    pub all_classes: usize,
    pub init_classes: usize,
    pub resilient: Vec<ResilientClass>,
    pub policy: Policy,
    pub generate_time: Duration,
    pub analyze_time: Duration,
}

/// Generates the universes, checks every (representative) initial
/// configuration, and extracts a policy for the resilient ones.
pub fn solve(
    sys: &SystemModel,
    req: &ResilienceRequirement,
    quotient: QuotientMode,
    mode: SolveMode,
) -> Result<Solution, SynthesisError> {
    let t0 = Instant::now();
    let solver = Solver::new(sys, req, quotient);
    let all = solver.universe().all_configs();
    let init: Vec<Config> = all
        .iter()
        .filter(|c| solver.universe().is_initial(c))
        .cloned()
        .collect();
    let classes = partition_by_class(sys, &all);
    let init_sigs: BTreeMap<Signature, ()> = init.iter().map(|c| (signature(sys, c), ())).collect();
    let generate_time = t0.elapsed();
    debug!(
        all = all.len(),
        init = init.len(),
        classes = classes.len(),
        "universes generated"
    );

    let t1 = Instant::now();
    let mut roots: Vec<(Quality, Config)> = match quotient {
        QuotientMode::Off => init.clone(),
        _ => init_sigs.keys().map(|s| classes[s].clone()).collect(),
    }
    .into_iter()
    .map(|c| (quality(sys, &c), c))
    .collect();
    roots.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    let verdicts: Vec<bool> = roots
        .par_iter()
        .map(|(_, c)| solver.resilient(c, FailedSet::EMPTY))
        .collect();

    let mut found: BTreeMap<Signature, ResilientClass> = BTreeMap::new();
    for ((q, c), ok) in roots.iter().zip(verdicts) {
        if ok {
            let sig = signature(sys, c);
            let rep = classes[&sig].clone();
            found.entry(sig.clone()).or_insert(ResilientClass {
                signature: sig,
                config: rep,
                quality: *q,
            });
        }
    }
    let mut resilient: Vec<ResilientClass> = found.into_values().collect();
    match mode {
        SolveMode::Resilient => resilient.sort_by(|a, b| a.config.cmp(&b.config)),
        SolveMode::Best => resilient.sort_by(|a, b| {
            b.quality
                .cmp(&a.quality)
                .then_with(|| a.config.cmp(&b.config))
        }),
    }
    let root_cfgs: Vec<Config> = resilient.iter().map(|r| r.config.clone()).collect();
    let policy = solver.extract_policy(&root_cfgs)?;
    let analyze_time = t1.elapsed();

    Ok(Solution {
        all_cfg: all.len(),
        init_cfg: init.len(),
        all_classes: classes.len(),
        init_classes: init_sigs.len(),
        resilient,
        policy,
        generate_time,
        analyze_time,
    })
}
