use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use rescon::failures::FailedSet;
use rescon::io::{load_model, load_policy, save_policy, save_report, IoError, Names, RunReport};
use rescon::replay::{replay_all, replay_schedule};
use rescon::synthesis::{solve, QuotientMode, SolveMode};

const EXIT_OK: u8 = 0;
const EXIT_NONE: u8 = 1;
const EXIT_INPUT: u8 = 2;

#[derive(Parser)]
#[command(
    name = "rescon",
    version,
    about = "Synthesize resilient configurations and reconfiguration policies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find resilient initial configurations and a reconfiguration policy.
    Solve {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Best)]
        mode: Mode,
        /// `partial` reduces only the initial configurations to class
        /// representatives; `full` also reduces successors and caches per class.
        #[arg(long, value_enum, default_value_t = Quotient::Full)]
        quotient: Quotient,
        #[arg(long)]
        policy_out: Option<PathBuf>,
        #[arg(long)]
        report_out: Option<PathBuf>,
        /// Print every resilient class, not just the first.
        #[arg(long)]
        list_all: bool,
        /// Include wall-clock times in the report file.
        #[arg(long)]
        timings: bool,
    },
    /// Check a model file without solving it.
    Validate { path: PathBuf },
    /// Run a policy against failure bursts and check critical availability.
    Replay {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        /// JSON list of bursts, each a list of hardware ids. Without it,
        /// every worst-case schedule is replayed from every root.
        #[arg(long)]
        schedule: Option<PathBuf>,
        /// Index of the policy root to start from when a schedule is given.
        #[arg(long, default_value_t = 0)]
        root: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Resilient,
    Best,
}

#[derive(Clone, Copy, ValueEnum)]
enum Quotient {
    Off,
    Partial,
    Full,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Solve {
            model,
            mode,
            quotient,
            policy_out,
            report_out,
            list_all,
            timings,
        } => run_solve(SolveArgs {
            model,
            mode: match mode {
                Mode::Resilient => SolveMode::Resilient,
                Mode::Best => SolveMode::Best,
            },
            quotient: match quotient {
                Quotient::Off => QuotientMode::Off,
                Quotient::Partial => QuotientMode::Partial,
                Quotient::Full => QuotientMode::Full,
            },
            policy_out,
            report_out,
            list_all,
            timings,
        }),
        Command::Validate { path } => run_validate(&path),
        Command::Replay {
            model,
            policy,
            schedule,
            root,
        } => run_replay(&model, &policy, schedule.as_deref(), root),
    };
    ExitCode::from(code)
}

fn input_error(e: impl std::fmt::Display) -> u8 {
    eprintln!("error: {e}");
    EXIT_INPUT
}

struct SolveArgs {
    model: PathBuf,
    mode: SolveMode,
    quotient: QuotientMode,
    policy_out: Option<PathBuf>,
    report_out: Option<PathBuf>,
    list_all: bool,
    timings: bool,
}

fn run_solve(args: SolveArgs) -> u8 {
    let (sys, req) = match load_model(&args.model) {
        Ok(m) => m,
        Err(e) => return input_error(e),
    };
    let sol = match solve(&sys, &req, args.quotient, args.mode) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: policy extraction failed: {e}");
            return EXIT_NONE;
        }
    };
    let names = Names::new(&sys);
    println!(
        "allCfg {}  initCfg {}  allClasses {}  initClasses {}  resilient {}",
        sol.all_cfg,
        sol.init_cfg,
        sol.all_classes,
        sol.init_classes,
        sol.resilient.len()
    );
    println!(
        "generate {:.3}s  analyze {:.3}s  (quotient {})",
        sol.generate_time.as_secs_f64(),
        sol.analyze_time.as_secs_f64(),
        args.quotient
    );
    let shown = if args.list_all {
        sol.resilient.len()
    } else {
        1
    };
    for r in sol.resilient.iter().take(shown) {
        println!(
            "  qos {} cost {}  {}",
            r.quality.qos,
            r.quality.cost,
            names.describe(&r.config)
        );
    }

    let mut report = RunReport::new(&sys, &sol, args.quotient, args.mode);
    if args.timings {
        report = report.with_timings(&sol);
    }
    if let Some(path) = &args.report_out {
        if let Err(e) = save_report(&report, path) {
            return input_error(e);
        }
    }
    if let Some(path) = &args.policy_out {
        if let Err(e) = save_policy(&sys, &sol.policy, path) {
            return input_error(e);
        }
    }
    if sol.resilient.is_empty() {
        println!("no resilient configuration");
        EXIT_NONE
    } else {
        EXIT_OK
    }
}

fn run_validate(path: &std::path::Path) -> u8 {
    match load_model(path) {
        Ok((sys, req)) => {
            println!(
                "ok: {} computers, {} devices, {} software, {} protocols, {} critical functionalities",
                sys.num_computers(),
                sys.num_hw() - sys.num_computers(),
                sys.num_software(),
                sys.num_protocols(),
                req.crit_fns.len()
            );
            EXIT_OK
        }
        Err(e) => input_error(e),
    }
}

fn read_schedule(path: &std::path::Path, names: &Names) -> Result<Vec<FailedSet>, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })?;
    let bursts: Vec<Vec<String>> = serde_json::from_str(&text).map_err(|e| IoError::Parse {
        path: path.display().to_string(),
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    bursts.iter().map(|b| names.parse_failed(b)).collect()
}

fn run_replay(
    model: &std::path::Path,
    policy: &std::path::Path,
    schedule: Option<&std::path::Path>,
    root: usize,
) -> u8 {
    let (sys, req) = match load_model(model) {
        Ok(m) => m,
        Err(e) => return input_error(e),
    };
    let policy = match load_policy(&sys, policy) {
        Ok(p) => p,
        Err(e) => return input_error(e),
    };
    let names = Names::new(&sys);
    match schedule {
        None => match replay_all(&sys, &req, &policy) {
            Ok(summary) => {
                println!(
                    "ok: {} schedules from {} roots, {} reconfigurations",
                    summary.schedules,
                    policy.roots.len(),
                    summary.steps
                );
                EXIT_OK
            }
            Err(f) => {
                let bursts: Vec<String> = f
                    .schedule
                    .iter()
                    .map(|b| format!("{:?}", names.failed(*b)))
                    .collect();
                println!(
                    "FAIL from {} under {}: {}",
                    names.describe(&f.root),
                    bursts.join(" then "),
                    f.error
                );
                EXIT_NONE
            }
        },
        Some(path) => {
            let sched = match read_schedule(path, &names) {
                Ok(s) => s,
                Err(e) => return input_error(e),
            };
            let Some(start) = policy.roots.get(root) else {
                return input_error(format!(
                    "root {root} out of range; the policy has {} roots",
                    policy.roots.len()
                ));
            };
            println!("start: {}", names.describe(start));
            match replay_schedule(&sys, &req, &policy, start, &sched) {
                Ok(steps) => {
                    for s in steps {
                        println!("burst {:?}:", names.failed(s.burst));
                        for a in &s.actions {
                            println!("  {}", names.describe_action(a));
                        }
                        println!("  -> {}", names.describe(&s.config));
                    }
                    EXIT_OK
                }
                Err(e) => {
                    println!("FAIL: {e}");
                    EXIT_NONE
                }
            }
        }
    }
}
