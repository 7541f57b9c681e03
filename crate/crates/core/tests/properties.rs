//! Randomized cross-checks of the optimized engine against the oracles.

use std::collections::BTreeSet;

use proptest::prelude::*;

use rescon::availability::avail;
use rescon::enumeration::{Filters, ResilienceRequirement, Universe};
use rescon::failures::{next_fs, next_fs_worst, FailedSet};
use rescon::model::{valid_config, Config, Quorum, SystemModel};
use rescon::oracle::{
    all_valid_configs, default_max_len, naive_avail, random_model, reachable_targets,
    NaiveResilience, RandomParams,
};
use rescon::quotient::rs_equivalent;
use rescon::reconfig::{apply_action, derive_actions, reconfig_relation};
use rescon::synthesis::{Bursts, QuotientMode, Solver};

fn model(seed: u64) -> (SystemModel, ResilienceRequirement) {
    random_model(seed, RandomParams::default()).build().unwrap()
}

/// Every failed set reachable from no failures.
fn failed_sets(sys: &SystemModel, req: &ResilienceRequirement) -> Vec<FailedSet> {
    let mut seen = BTreeSet::from([FailedSet::EMPTY]);
    let mut todo = vec![FailedSet::EMPTY];
    while let Some(fs) = todo.pop() {
        for next in next_fs(sys, &req.fm, fs) {
            if seen.insert(next) {
                todo.push(next);
            }
        }
    }
    seen.into_iter().collect()
}

fn unfiltered<'a>(sys: &'a SystemModel, req: &'a ResilienceRequirement) -> Universe<'a> {
    Universe::with_filters(sys, req, Filters { relevance: false })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn worst_bursts_are_the_maximal_bursts(seed in any::<u64>()) {
        let (sys, req) = model(seed);
        for fs in failed_sets(&sys, &req) {
            let all = next_fs(&sys, &req.fm, fs);
            let maximal: Vec<FailedSet> = all
                .iter()
                .copied()
                .filter(|a| !all.iter().any(|b| b != a && a.hw().is_subset(b.hw())))
                .collect();
            let mut worst = next_fs_worst(&sys, &req.fm, fs);
            worst.sort();
            let mut maximal = maximal;
            maximal.sort();
            prop_assert_eq!(worst, maximal);
        }
    }

    #[test]
    fn availability_matches_oracle(seed in any::<u64>()) {
        let (sys, req) = model(seed);
        let cfgs = all_valid_configs(&sys).unwrap();
        for fs in failed_sets(&sys, &req) {
            for c in &cfgs {
                prop_assert_eq!(
                    avail(&sys, &req.crit_fns, c, fs),
                    naive_avail(&sys, &req.crit_fns, c, fs)
                );
            }
        }
    }

    #[test]
    fn unfiltered_universe_is_every_valid_config(seed in any::<u64>()) {
        let (sys, req) = model(seed);
        let mut ours = unfiltered(&sys, &req).all_configs();
        ours.sort();
        let mut naive = all_valid_configs(&sys).unwrap();
        naive.sort();
        prop_assert_eq!(ours, naive);
    }

    #[test]
    fn successors_are_exactly_the_related_configs(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let (sys, req) = model(seed);
        let universe = unfiltered(&sys, &req);
        let cfgs = universe.all_configs();
        let base = pick.get(&cfgs);
        for fs in failed_sets(&sys, &req) {
            let got: BTreeSet<Config> = universe.successors(base, fs).into_iter().collect();
            let want: BTreeSet<Config> = cfgs
                .iter()
                .filter(|c| reconfig_relation(&sys, base, c, fs))
                .cloned()
                .collect();
            prop_assert_eq!(got, want);
        }
    }

    #[test]
    fn reachable_configs_are_related(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let (sys, req) = model(seed);
        let cfgs = all_valid_configs(&sys).unwrap();
        let start = pick.get(&cfgs);
        for fs in failed_sets(&sys, &req) {
            for c in reachable_targets(&sys, start, fs, default_max_len(&sys)).unwrap() {
                prop_assert!(reconfig_relation(&sys, start, &c, fs));
            }
        }
    }

    #[test]
    fn derived_actions_replay(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let (sys, req) = model(seed);
        let cfgs = all_valid_configs(&sys).unwrap();
        let start = pick.get(&cfgs);
        for fs in failed_sets(&sys, &req) {
            for target in cfgs.iter().filter(|c| reconfig_relation(&sys, start, c, fs)) {
                if let Ok(actions) = derive_actions(&sys, start, target, fs) {
                    let mut state = rescon::failures::State { cfg: start.clone(), fs };
                    for a in &actions {
                        state = apply_action(&sys, &state, a).unwrap();
                        prop_assert!(valid_config(&sys, &state.cfg));
                    }
                    prop_assert_eq!(&state.cfg, target);
                }
            }
        }
    }

    #[test]
    fn resilience_matches_oracle(seed in any::<u64>()) {
        let (sys, req) = model(seed);
        let solver = Solver::with_universe(unfiltered(&sys, &req), QuotientMode::Off, Bursts::All);
        let mut naive = NaiveResilience::new(&sys, &req).unwrap();
        for c in naive.universe().to_vec() {
            prop_assert_eq!(solver.resilient(&c, FailedSet::EMPTY), naive.resilient(&c, FailedSet::EMPTY));
        }
    }

    #[test]
    fn verdicts_are_class_invariant(seed in any::<u64>()) {
        let (sys, req) = model(seed);
        let solver = Solver::with_universe(unfiltered(&sys, &req), QuotientMode::Off, Bursts::Worst);
        let cfgs = solver.universe().all_configs();
        let verdicts: Vec<bool> = cfgs.iter().map(|c| solver.resilient(c, FailedSet::EMPTY)).collect();
        for (i, a) in cfgs.iter().enumerate() {
            for (j, b) in cfgs.iter().enumerate().skip(i + 1) {
                if rs_equivalent(&sys, a, b) {
                    prop_assert_eq!(verdicts[i], verdicts[j]);
                }
            }
        }
    }

    /// The relevance filters keep every verdict when crash-sensitive and
    /// remotely usable software is single-instance and no protocol uses
    /// majority quorums. Outside these assumptions they can discard needed
    /// successors.
    #[test]
    fn filters_preserve_verdicts_under_their_assumptions(seed in any::<u64>()) {
        let (sys, req) = model(seed);
        prop_assume!((0..sys.num_software()).all(|s| {
            let sw = sys.software(s);
            sw.single_instance || (!sw.remote_use && !sw.requires_replication())
        }));
        prop_assume!((0..sys.num_protocols()).all(|p| {
            let p = sys.protocol(p);
            p.progress_q != Quorum::Majority && p.reconfig_q != Quorum::Majority
        }));
        let filtered = Solver::new(&sys, &req, QuotientMode::Off);
        let full = Solver::with_universe(unfiltered(&sys, &req), QuotientMode::Off, Bursts::Worst);
        for c in filtered.universe().all_configs() {
            prop_assert_eq!(filtered.resilient(&c, FailedSet::EMPTY), full.resilient(&c, FailedSet::EMPTY));
        }
        let any_full = full
            .universe()
            .all_configs()
            .iter()
            .any(|c| full.universe().is_initial(c) && full.resilient(c, FailedSet::EMPTY));
        let any_filtered = filtered
            .universe()
            .initial_configs()
            .iter()
            .any(|c| filtered.resilient(c, FailedSet::EMPTY));
        prop_assert_eq!(any_full, any_filtered);
    }
}
