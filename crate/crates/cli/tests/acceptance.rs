//! Acceptance checks. Runs without the test harness and prints one
//! PASS/FAIL line per criterion; exits non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rescon::enumeration::{Filters, ResilienceRequirement, Universe};
use rescon::failures::{next_fs, FailedSet};
use rescon::io::{load_model, ActionJson, Names};
use rescon::model::{Config, SystemModel};
use rescon::oracle::{
    all_valid_configs, default_max_len, random_model, reachable_by_actions, RandomParams,
};
use rescon::quotient::Signature;
use rescon::reconfig::{reconfig_relation, ReconfigAction};
use rescon::replay::replay_all;
use rescon::synthesis::{solve, Bursts, QuotientMode, Solution, SolveMode, Solver};

/// Wall-clock limit per case of criteria 1 and 2.
const CASE_LIMIT: Duration = Duration::from_secs(600);
/// Largest permitted ratio of full to partial quotient running time.
const FULL_OVER_PARTIAL: f64 = 2.0;
const TIMING_RUNS: usize = 3;
const THEOREM_MODELS: u64 = 200;
const QUOTIENT_MODELS: u64 = 100;
const ONE_RES_MODELS: u64 = 100;

type Outcome = Result<String, String>;

fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn fixture(name: &str) -> (SystemModel, ResilienceRequirement) {
    load_model(fixtures_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn solve_timed(
    sys: &SystemModel,
    req: &ResilienceRequirement,
    q: QuotientMode,
) -> (Solution, Duration) {
    let t = Instant::now();
    let sol = solve(sys, req, q, SolveMode::Best).expect("policy extraction");
    (sol, t.elapsed())
}

fn counts(sol: &Solution) -> [usize; 5] {
    [
        sol.all_cfg,
        sol.init_cfg,
        sol.all_classes,
        sol.init_classes,
        sol.resilient.len(),
    ]
}

fn check_counts(
    example: u8,
    expected: &[(usize, [usize; 5])],
    times: &mut Vec<(String, Duration)>,
) -> Outcome {
    let mut detail = Vec::new();
    let mut ok = true;
    for (n, want) in expected {
        let name = format!("example{example}-n{n}.json");
        let (sys, req) = fixture(&name);
        let (sol, dt) = solve_timed(&sys, &req, QuotientMode::Full);
        let got = counts(&sol);
        ok &= got == *want;
        detail.push(format!("N={n} {got:?}"));
        times.push((name, dt));
    }
    let detail = detail.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_3() -> Outcome {
    let mut detail = Vec::new();
    let mut ok = true;
    for (example, want) in [(1, 9), (2, 6)] {
        let got: Vec<usize> = (2..=5)
            .map(|n| {
                let (sys, req) = fixture(&format!("example{example}-n{n}.json"));
                solve_timed(&sys, &req, QuotientMode::Full)
                    .0
                    .resilient
                    .len()
            })
            .collect();
        ok &= got.iter().all(|&g| g == want);
        detail.push(format!("example{example} N=2..5 {got:?}"));
    }
    let detail = detail.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_4(times: &[(String, Duration)]) -> Outcome {
    let slowest = times.iter().max_by_key(|(_, d)| *d).expect("cases ran");
    let mut ok = slowest.1 <= CASE_LIMIT;
    let mut detail = vec![format!(
        "slowest {} {:.2}s",
        slowest.0,
        slowest.1.as_secs_f64()
    )];
    for example in [1, 2] {
        let (sys, req) = fixture(&format!("example{example}-n3.json"));
        let best = |q| {
            (0..TIMING_RUNS)
                .map(|_| solve_timed(&sys, &req, q).1)
                .min()
                .expect("runs")
                .as_secs_f64()
        };
        let partial = best(QuotientMode::Partial);
        let full = best(QuotientMode::Full);
        let ratio = full / partial;
        ok &= ratio <= FULL_OVER_PARTIAL;
        detail.push(format!(
            "example{example} N=3 full {full:.3}s partial {partial:.3}s ratio {ratio:.2} (limit {FULL_OVER_PARTIAL})"
        ));
    }
    let detail = detail.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random(seed: u64, unlimited_rate: bool) -> (SystemModel, ResilienceRequirement) {
    let params = RandomParams {
        unlimited_rate,
        ..RandomParams::default()
    };
    random_model(seed, params)
        .build()
        .unwrap_or_else(|e| panic!("random model {seed}: {e}"))
}

fn criterion_5() -> Outcome {
    let mut bad = Vec::new();
    let mut checked = 0usize;
    for seed in 0..THEOREM_MODELS {
        let (sys, req) = random(seed, false);
        let unfiltered = || Universe::with_filters(&sys, &req, Filters { relevance: false });
        let worst = Solver::with_universe(unfiltered(), QuotientMode::Off, Bursts::Worst);
        let all = Solver::with_universe(unfiltered(), QuotientMode::Off, Bursts::All);
        for cfg in worst.universe().all_configs() {
            checked += 1;
            if worst.resilient(&cfg, FailedSet::EMPTY) != all.resilient(&cfg, FailedSet::EMPTY) {
                bad.push(seed);
                break;
            }
        }
    }
    let detail =
        format!("{THEOREM_MODELS} models, {checked} configurations, discrepant seeds {bad:?}");
    if bad.is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

const MODES: [QuotientMode; 3] = [QuotientMode::Off, QuotientMode::Partial, QuotientMode::Full];

/// Compares the per-configuration verdicts over the initial configurations
/// and the resilient signatures reported by `solve` across quotient modes.
fn modes_agree(sys: &SystemModel, req: &ResilienceRequirement) -> Result<(), String> {
    let mut verdicts: Vec<BTreeSet<Config>> = Vec::new();
    let mut signatures: Vec<BTreeSet<Signature>> = Vec::new();
    for q in MODES {
        let solver = Solver::new(sys, req, q);
        let init = solver.universe().initial_configs();
        verdicts.push(
            init.into_iter()
                .filter(|c| solver.resilient(c, FailedSet::EMPTY))
                .collect(),
        );
        let sol = solve(sys, req, q, SolveMode::Resilient).map_err(|e| format!("{q}: {e}"))?;
        signatures.push(sol.resilient.into_iter().map(|r| r.signature).collect());
    }
    if verdicts.windows(2).any(|w| w[0] != w[1]) {
        return Err("verdict sets differ".into());
    }
    if signatures.windows(2).any(|w| w[0] != w[1]) {
        return Err("resilient signature sets differ".into());
    }
    Ok(())
}

fn criterion_6() -> Outcome {
    let mut bad = Vec::new();
    for name in ["example1-n2.json", "example2-n2.json", "example2-n3.json"] {
        let (sys, req) = fixture(name);
        if let Err(e) = modes_agree(&sys, &req) {
            bad.push(format!("{name}: {e}"));
        }
    }
    for seed in 0..QUOTIENT_MODELS {
        let (sys, req) = random(seed, false);
        if let Err(e) = modes_agree(&sys, &req) {
            bad.push(format!("seed {seed}: {e}"));
        }
    }
    let detail = format!("3 fixtures + {QUOTIENT_MODELS} random models, discrepancies {bad:?}");
    if bad.is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_7() -> Outcome {
    let (sys, req) = fixture("tiny.json");
    let cfgs = all_valid_configs(&sys).map_err(|e| e.to_string())?;
    let mut failed_sets = vec![FailedSet::EMPTY];
    failed_sets.extend(next_fs(&sys, &req.fm, FailedSet::EMPTY));
    let max_len = default_max_len(&sys);
    let mut pairs = 0usize;
    let mut bad = 0usize;
    for &fs in &failed_sets {
        for a in &cfgs {
            for b in &cfgs {
                pairs += 1;
                let rel = reconfig_relation(&sys, a, b, fs);
                let reach =
                    reachable_by_actions(&sys, a, b, fs, max_len).map_err(|e| e.to_string())?;
                if rel != reach {
                    bad += 1;
                }
            }
        }
    }
    let detail = format!(
        "{} configurations, {} failed sets, {pairs} pairs, {bad} discrepancies",
        cfgs.len(),
        failed_sets.len()
    );
    if bad == 0 && failed_sets.len() == 3 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_8() -> Outcome {
    let mut equiv_bad = Vec::new();
    let mut implies_bad = Vec::new();
    for (unlimited, bad) in [(true, &mut equiv_bad), (false, &mut implies_bad)] {
        for seed in 0..ONE_RES_MODELS {
            let (sys, req) = random(seed, unlimited);
            let solver = Solver::new(&sys, &req, QuotientMode::Off);
            let wrong = solver.universe().all_configs().iter().any(|c| {
                let r = solver.resilient(c, FailedSet::EMPTY);
                let one = solver.one_resilient(c, FailedSet::EMPTY);
                if unlimited {
                    r != one
                } else {
                    r && !one
                }
            });
            if wrong {
                bad.push(seed);
            }
        }
    }
    let detail = format!(
        "unlimited-rate: {ONE_RES_MODELS} models, discrepant seeds {equiv_bad:?}; \
         rate-limited: {ONE_RES_MODELS} models, discrepant seeds {implies_bad:?}"
    );
    if equiv_bad.is_empty() && implies_bad.is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn action(names: &Names, json: &str) -> ReconfigAction {
    let j: ActionJson = serde_json::from_str(json).expect("action json");
    names.parse_action(&j).expect("action names")
}

fn phase(a: &ReconfigAction) -> u8 {
    match a {
        ReconfigAction::Stop(_) | ReconfigAction::StopRep { .. } => 0,
        ReconfigAction::ChangeReps { .. } => 1,
        ReconfigAction::Move { .. } => 2,
        ReconfigAction::Start(_) => 3,
    }
}

fn criterion_9() -> Outcome {
    let mut detail = Vec::new();
    let mut ok = true;
    for name in [
        "example1-n2.json",
        "example1-n3.json",
        "example2-n2.json",
        "example2-n3.json",
    ] {
        let (sys, req) = fixture(name);
        let sol =
            solve(&sys, &req, QuotientMode::Full, SolveMode::Best).map_err(|e| e.to_string())?;
        match replay_all(&sys, &req, &sol.policy) {
            Ok(s) => detail.push(format!("{name} {} schedules ok", s.schedules)),
            Err(f) => {
                ok = false;
                detail.push(format!("{name} {}", f.error));
            }
        }
    }

    let (sys, req) = fixture("example1-n2.json");
    let names = Names::new(&sys);
    let sol = solve(&sys, &req, QuotientMode::Full, SolveMode::Best).map_err(|e| e.to_string())?;
    let root = &sol.policy.roots[0];
    let c0 = names.parse_failed(&["c0".to_string()]).expect("c0");
    let expected: BTreeSet<ReconfigAction> = [
        r#"{"action":"stop","sw":"planning","computer":"c1"}"#,
        r#"{"action":"changeReps","sw":"perception","computers":["c1"],"primary":"c1"}"#,
        r#"{"action":"start","sw":"vehicle-interface","computer":"c1"}"#,
        r#"{"action":"start","sw":"linux-control","computer":"laptop"}"#,
        r#"{"action":"start","sw":"linux-planning","computer":"laptop"}"#,
    ]
    .iter()
    .map(|j| action(&names, j))
    .collect();
    match sol.policy.lookup(root, FailedSet::EMPTY, c0) {
        None => {
            ok = false;
            detail.push("no c0-crash entry for the best root".into());
        }
        Some(entry) => {
            let got: BTreeSet<ReconfigAction> = entry.actions.iter().copied().collect();
            let phased = entry
                .actions
                .windows(2)
                .all(|w| phase(&w[0]) <= phase(&w[1]));
            let matches = got == expected && got.len() == entry.actions.len() && phased;
            ok &= matches;
            let shown: Vec<String> = entry
                .actions
                .iter()
                .map(|a| names.describe_action(a))
                .collect();
            detail.push(format!(
                "c0 crash from {}: [{}] {}",
                names.describe(root),
                shown.join(", "),
                if matches { "matches" } else { "differs" }
            ));
        }
    }
    let detail = detail.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_10() -> Outcome {
    let out = std::env::temp_dir().join(format!("rescon-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&out).map_err(|e| e.to_string())?;
    let mut files: Vec<PathBuf> = std::fs::read_dir(fixtures_dir())
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let mut differ = Vec::new();
    for model in &files {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let report = out.join(format!("report{run}.json"));
            let policy = out.join(format!("policy{run}.json"));
            let status = Command::new(env!("CARGO_BIN_EXE_rescon"))
                .arg("solve")
                .arg("--model")
                .arg(model)
                .arg("--report-out")
                .arg(&report)
                .arg("--policy-out")
                .arg(&policy)
                .output()
                .map_err(|e| e.to_string())?
                .status;
            if status.code() == Some(2) {
                return Err(format!("{} rejected as input", model.display()));
            }
            let read = |p: &Path| std::fs::read(p).map_err(|e| e.to_string());
            outputs.push((read(&report)?, read(&policy)?));
        }
        if outputs[0] != outputs[1] {
            differ.push(
                model
                    .file_name()
                    .unwrap_or_default()
                    .to_string_lossy()
                    .into_owned(),
            );
        }
    }
    let _ = std::fs::remove_dir_all(&out);
    let detail = format!("{} fixtures, differing {differ:?}", files.len());
    if differ.is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let mut times = Vec::new();
    let results: Vec<(&str, Outcome)> = vec![
        (
            "example 2 counts at N=2,3,4",
            check_counts(
                2,
                &[
                    (2, [162, 128, 24, 18, 6]),
                    (3, [2520, 1512, 72, 42, 6]),
                    (4, [20720, 9872, 192, 90, 6]),
                ],
                &mut times,
            ),
        ),
        (
            "example 1 counts at N=2,3",
            check_counts(
                1,
                &[(2, [256, 204, 36, 27, 9]), (3, [4332, 2607, 108, 63, 9])],
                &mut times,
            ),
        ),
        ("resilient classes constant in N", criterion_3()),
        ("runtime", criterion_4(&times)),
        ("worst-case bursts suffice", criterion_5()),
        ("quotient modes agree", criterion_6()),
        (
            "relation matches action reachability on tiny",
            criterion_7(),
        ),
        ("one-resilience", criterion_8()),
        ("policy replay", criterion_9()),
        ("deterministic output", criterion_10()),
    ];
    let mut failed = 0;
    for (i, (name, outcome)) in results.iter().enumerate() {
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag} {name}: {detail}", i + 1);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
