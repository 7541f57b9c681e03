//! Generation of the configuration universes searched by the synthesizer.
//!
//! Each software component gets a list of placement options (which
//! computers host unreplicated instances, and which replicated instance, if
//! any). Configurations are the cartesian product of one option per
//! software, pruned on capacity, and filtered for irrelevance:
//!
//! - every critical functionality has a providing instance, and software
//!   that is the sole provider of one is present;
//! - replicated instances of critical software that needs replication have
//!   between 3 and 2f+1 members when a quorum is majority, else at most f+1;
//! - remotely usable software has at most one instance;
//! - critical software that needs replication is not left as a single
//!   unreplicated instance when a computer may crash (its host could crash
//!   first, and it can be neither restarted nor moved off a dead host).
//!
//! The same option lists drive [`Universe::successors`], which produces
//! exactly the members of the universe that a given state can be
//! reconfigured to.

use serde::{Deserialize, Serialize};

use crate::availability::{live_set, Availability};
use crate::failures::{FailedSet, FailureModel};
use crate::model::{rsi_ok, Config, HwSet, ModelError, RepSwInst, SwInst, SystemModel};
use crate::reconfig::{can_run_with, requirements_ok, software_step_ok};

/// A failure model together with the functionalities that must stay available.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResilienceRequirement {
    pub fm: FailureModel,
    pub crit_fns: Vec<usize>,
}

/// External form of [`ResilienceRequirement`], naming functionalities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RequirementSpec {
    pub failure_model: FailureModel,
    pub crit_fns: Vec<String>,
}

impl ResilienceRequirement {
    pub fn resolve(sys: &SystemModel, spec: &RequirementSpec) -> Result<Self, ModelError> {
        spec.failure_model.validate()?;
        let mut crit_fns = Vec::new();
        for name in &spec.crit_fns {
            let f = sys.fn_index(name).ok_or_else(|| ModelError::Unknown {
                kind: "functionality",
                id: name.clone(),
            })?;
            if !crit_fns.contains(&f) {
                crit_fns.push(f);
            }
        }
        crit_fns.sort_unstable();
        Ok(ResilienceRequirement {
            fm: spec.failure_model.clone(),
            crit_fns,
        })
    }
}

/// Software that is the only provider of some critical functionality.
pub fn critical_software(sys: &SystemModel, crit_fns: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = crit_fns
        .iter()
        .filter_map(|&f| match sys.providers(f) {
            [only] => Some(*only),
            _ => None,
        })
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Where the instances of one software component run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placement {
    pub si: HwSet,
    pub rsi: Option<RepSwInst>,
}

impl Placement {
    pub fn is_empty(&self) -> bool {
        self.si.is_empty() && self.rsi.is_none()
    }
}

/// Which irrelevance filters apply when building placement options.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Filters {
    pub relevance: bool,
}

/// The universe of relevant configurations for a system and requirement.
#[derive(Debug, Clone)]
pub struct Universe<'a> {
    sys: &'a SystemModel,
    req: &'a ResilienceRequirement,
    options: Vec<Vec<Placement>>,
    filters: Filters,
}

impl<'a> Universe<'a> {
    pub fn new(sys: &'a SystemModel, req: &'a ResilienceRequirement) -> Self {
        Self::with_filters(sys, req, Filters { relevance: true })
    }

    /// Without relevance filtering the universe is every valid configuration.
    pub fn with_filters(
        sys: &'a SystemModel,
        req: &'a ResilienceRequirement,
        filters: Filters,
    ) -> Self {
        let critical = critical_software(sys, &req.crit_fns);
        let f = req.fm.max_simult_fail();
        let options = (0..sys.num_software())
            .map(|s| {
                placement_options(
                    sys,
                    s,
                    critical.contains(&s) && filters.relevance,
                    f,
                    filters,
                )
            })
            .collect();
        Universe {
            sys,
            req,
            options,
            filters,
        }
    }

    pub fn system(&self) -> &'a SystemModel {
        self.sys
    }

    pub fn requirement(&self) -> &'a ResilienceRequirement {
        self.req
    }

    pub fn options(&self, s: usize) -> &[Placement] {
        &self.options[s]
    }

    /// All configurations of the universe, in canonical order.
    pub fn all_configs(&self) -> Vec<Config> {
        let allowed: Vec<Vec<&Placement>> =
            self.options.iter().map(|o| o.iter().collect()).collect();
        let mut out = Vec::new();
        self.product(&allowed, &mut |cfg| out.push(cfg));
        out.sort_unstable();
        out
    }

    /// Members of the universe that are also relevant as initial
    /// configurations: passive replicas on mutually equivalent computers use
    /// the first of them as primary, and every replica can run its software
    /// when nothing has failed.
    pub fn is_initial(&self, cfg: &Config) -> bool {
        let sys = self.sys;
        let mut avail = None;
        for r in cfg.rsi() {
            if let Some(p) = r.primary() {
                let first = r.computers.first().expect("replica sets are nonempty");
                let all_equivalent = r
                    .computers
                    .iter()
                    .all(|c| sys.equivalent_computers(c, first));
                if all_equivalent && p != first {
                    return false;
                }
            }
            let avail =
                avail.get_or_insert_with(|| Availability::compute(sys, cfg, FailedSet::EMPTY));
            if !r
                .computers
                .iter()
                .all(|c| can_run_with(sys, avail, c, r.sw()))
            {
                return false;
            }
        }
        true
    }

    pub fn initial_configs(&self) -> Vec<Config> {
        self.all_configs()
            .into_iter()
            .filter(|c| self.is_initial(c))
            .collect()
    }

    /// Members of the universe that `base` can be reconfigured to under
    /// `fs`, in canonical order. `base` must be free of dead instances.
    pub fn successors(&self, base: &Config, fs: FailedSet) -> Vec<Config> {
        let sys = self.sys;
        let live = live_set(sys, fs);
        let allowed: Vec<Vec<&Placement>> = (0..sys.num_software())
            .map(|s| {
                let before = (base.si_hosts(s), base.rsi_of(s));
                self.options[s]
                    .iter()
                    .filter(|p| software_step_ok(sys, s, before, (p.si, p.rsi.as_ref()), live))
                    .collect()
            })
            .collect();
        let mut out = Vec::new();
        self.product(&allowed, &mut |cfg| {
            let avail = Availability::compute(sys, &cfg, fs);
            if requirements_ok(sys, base, &cfg, &avail) {
                out.push(cfg);
            }
        });
        out.sort_unstable();
        out
    }

    fn product(&self, allowed: &[Vec<&Placement>], emit: &mut dyn FnMut(Config)) {
        let sys = self.sys;
        let nc = sys.num_computers();
        let capacity: Vec<(u64, u64)> = (0..nc)
            .map(|c| (sys.computer(c).cores as u64, sys.computer(c).ram))
            .collect();
        let mut walk = Walk {
            sys,
            allowed,
            capacity,
            load: vec![(0, 0); nc],
            chosen: Vec::with_capacity(allowed.len()),
            crit_fns: if self.filters.relevance {
                &self.req.crit_fns
            } else {
                &[]
            },
            emit,
        };
        walk.go(0);
    }
}

struct Walk<'w, 'p> {
    sys: &'w SystemModel,
    allowed: &'w [Vec<&'p Placement>],
    capacity: Vec<(u64, u64)>,
    load: Vec<(u64, u64)>,
    chosen: Vec<&'p Placement>,
    crit_fns: &'w [usize],
    emit: &'w mut dyn FnMut(Config),
}

impl<'w, 'p> Walk<'w, 'p> {
    fn go(&mut self, s: usize) {
        if s == self.allowed.len() {
            if self.covers_critical() {
                let cfg = self.build();
                (self.emit)(cfg);
            }
            return;
        }
        let sw = self.sys.software(s);
        let demand = (sw.cores as u64, sw.ram);
        for &p in &self.allowed[s] {
            let hosts =
                p.si.iter()
                    .chain(p.rsi.iter().flat_map(|r| r.computers.iter()));
            let mut fits = true;
            let mut touched = Vec::new();
            for c in hosts {
                let l = &mut self.load[c];
                l.0 += demand.0;
                l.1 += demand.1;
                touched.push(c);
                if l.0 > self.capacity[c].0 || l.1 > self.capacity[c].1 {
                    fits = false;
                    break;
                }
            }
            if fits {
                self.chosen.push(p);
                self.go(s + 1);
                self.chosen.pop();
            }
            for c in touched {
                let l = &mut self.load[c];
                l.0 -= demand.0;
                l.1 -= demand.1;
            }
        }
    }

    fn covers_critical(&self) -> bool {
        self.crit_fns.iter().all(|&f| {
            self.sys
                .providers(f)
                .iter()
                .any(|&s| !self.chosen[s].is_empty())
        })
    }

    fn build(&self) -> Config {
        let mut si = Vec::new();
        let mut rsi = Vec::new();
        for (s, p) in self.chosen.iter().enumerate() {
            si.extend(p.si.iter().map(|c| SwInst::new(s, c)));
            if let Some(r) = p.rsi {
                rsi.push(r);
            }
        }
        Config::new(si, rsi)
    }
}

fn placement_options(
    sys: &SystemModel,
    s: usize,
    critical: bool,
    f: usize,
    filters: Filters,
) -> Vec<Placement> {
    let sw = sys.software(s);
    let hosts = sys.compatible_computers(s);
    let at_most_one = sw.single_instance || (filters.relevance && sw.remote_use);
    let si_options: Vec<HwSet> = if at_most_one {
        std::iter::once(HwSet::EMPTY)
            .chain(hosts.iter().map(HwSet::single))
            .collect()
    } else {
        hosts.subsets()
    };

    let mut rsi_options: Vec<Option<RepSwInst>> = vec![None];
    if sw.stateful() {
        for p in 0..sys.num_protocols() {
            let proto = sys.protocol(p);
            let (lo, hi) = if critical && sw.requires_replication() {
                if proto.progress_q == crate::model::Quorum::Majority
                    || proto.reconfig_q == crate::model::Quorum::Majority
                {
                    (3, 2 * f + 1)
                } else {
                    (1, f + 1)
                }
            } else {
                (1, usize::MAX)
            };
            for members in hosts.subsets() {
                let n = members.len();
                if n == 0 || n < lo || n > hi {
                    continue;
                }
                let primaries: Vec<Option<usize>> = if proto.active {
                    vec![None]
                } else {
                    members.iter().map(Some).collect()
                };
                for primary in primaries {
                    let r = RepSwInst::new(s, p, members, primary);
                    if rsi_ok(sys, &r) {
                        rsi_options.push(Some(r));
                    }
                }
            }
        }
    }

    let mut out = Vec::new();
    for &si in &si_options {
        for &rsi in &rsi_options {
            let p = Placement { si, rsi };
            let count = si.len() + rsi.is_some() as usize;
            if at_most_one && count > 1 {
                continue;
            }
            if filters.relevance {
                if critical && count == 0 {
                    continue;
                }
                if critical && sw.requires_replication() && f >= 1 && rsi.is_none() && si.len() == 1
                {
                    continue;
                }
            }
            if fits_alone(sys, s, &p) {
                out.push(p);
            }
        }
    }
    out
}

fn fits_alone(sys: &SystemModel, s: usize, p: &Placement) -> bool {
    let sw = sys.software(s);
    p.si.iter()
        .chain(p.rsi.iter().flat_map(|r| r.computers.iter()))
        .all(|c| sw.cores <= sys.computer(c).cores && sw.ram <= sys.computer(c).ram)
}
