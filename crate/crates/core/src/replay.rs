//! Executing a policy against failure bursts.

use thiserror::Error;

use crate::availability::avail;
use crate::enumeration::ResilienceRequirement;
use crate::failures::{next_fs, next_fs_worst, remove_dead, FailedSet, State};
use crate::model::{Config, SystemModel};
use crate::reconfig::{apply_action, ReconfigAction, ReconfigError};
use crate::synthesis::Policy;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReplayError {
    #[error("step {step}: burst is not permitted by the failure model")]
    BurstNotPermitted { step: usize },
    #[error("step {step}: no policy entry for this state and burst")]
    MissingEntry { step: usize },
    #[error("step {step}: {source}")]
    Rejected { step: usize, source: ReconfigError },
    #[error("step {step}: actions end in a configuration other than the recorded target")]
    TargetMismatch { step: usize },
    #[error("step {step}: critical functionality unavailable")]
    Unavailable { step: usize },
    #[error("root is not a policy root")]
    UnknownRoot,
}

/// One reconfiguration performed during a replay.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub burst: FailedSet,
    pub failed: FailedSet,
    pub actions: Vec<ReconfigAction>,
    pub config: Config,
}

/// Runs `schedule` (a sequence of bursts) from `root`, applying the
/// policy's actions after each burst and checking critical availability in
/// every state reached. Step 0 is the root itself.
pub fn replay_schedule(
    sys: &SystemModel,
    req: &ResilienceRequirement,
    policy: &Policy,
    root: &Config,
    schedule: &[FailedSet],
) -> Result<Vec<Step>, ReplayError> {
    if !policy.roots.contains(root) {
        return Err(ReplayError::UnknownRoot);
    }
    if !avail(sys, &req.crit_fns, root, FailedSet::EMPTY) {
        return Err(ReplayError::Unavailable { step: 0 });
    }
    let mut cfg = root.clone();
    let mut fs = FailedSet::EMPTY;
    let mut steps = Vec::with_capacity(schedule.len());
    for (i, &burst) in schedule.iter().enumerate() {
        let step = i + 1;
        let next = fs.union(burst);
        if burst.is_empty() || !next_fs(sys, &req.fm, fs).contains(&next) {
            return Err(ReplayError::BurstNotPermitted { step });
        }
        let entry = policy
            .lookup(&cfg, fs, next.minus(fs))
            .ok_or(ReplayError::MissingEntry { step })?;
        let mut state = State {
            cfg: remove_dead(sys, &cfg, next),
            fs: next,
        };
        for a in &entry.actions {
            state = apply_action(sys, &state, a)
                .map_err(|source| ReplayError::Rejected { step, source })?;
        }
        if state.cfg != entry.target {
            return Err(ReplayError::TargetMismatch { step });
        }
        if !avail(sys, &req.crit_fns, &state.cfg, next) {
            return Err(ReplayError::Unavailable { step });
        }
        steps.push(Step {
            burst: next.minus(fs),
            failed: next,
            actions: entry.actions.clone(),
            config: state.cfg.clone(),
        });
        cfg = state.cfg;
        fs = next;
    }
    Ok(steps)
}

/// Every maximal sequence of worst-case bursts starting from no failures.
pub fn worst_case_schedules(sys: &SystemModel, req: &ResilienceRequirement) -> Vec<Vec<FailedSet>> {
    fn go(
        sys: &SystemModel,
        req: &ResilienceRequirement,
        fs: FailedSet,
        prefix: &mut Vec<FailedSet>,
        out: &mut Vec<Vec<FailedSet>>,
    ) {
        let nexts = next_fs_worst(sys, &req.fm, fs);
        if nexts.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for next in nexts {
            prefix.push(next.minus(fs));
            go(sys, req, next, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(sys, req, FailedSet::EMPTY, &mut Vec::new(), &mut out);
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReplaySummary {
    pub schedules: usize,
    pub steps: usize,
}

/// The first schedule on which a replay failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayFailure {
    pub root: Config,
    pub schedule: Vec<FailedSet>,
    pub error: ReplayError,
}

/// Replays every worst-case schedule from every root of the policy.
pub fn replay_all(
    sys: &SystemModel,
    req: &ResilienceRequirement,
    policy: &Policy,
) -> Result<ReplaySummary, Box<ReplayFailure>> {
    let schedules = worst_case_schedules(sys, req);
    let mut summary = ReplaySummary::default();
    for root in &policy.roots {
        for sched in &schedules {
            let steps = replay_schedule(sys, req, policy, root, sched).map_err(|error| {
                Box::new(ReplayFailure {
                    root: root.clone(),
                    schedule: sched.clone(),
                    error,
                })
            })?;
            summary.schedules += 1;
            summary.steps += steps.len();
        }
    }
    Ok(summary)
}
