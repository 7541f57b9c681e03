//! Built-in models: a two-computer toy system, an unsatisfiable system, and
//! the two autonomous-driving systems at any number of embedded computers.
//!
//! The JSON files under `fixtures/` are generated from these builders and a
//! test keeps them in sync.

use std::collections::{BTreeMap, BTreeSet};

use crate::failures::{FailBound, FailureModel, FailureType, HwType};
use crate::io::ModelFile;
use crate::model::{Computer, Device, Quorum, RepProtocol, Software, SystemSpec};

const EMBEDDED_OS: &str = "SafeRTLinux";
const BIG_RAM: u64 = 65_536;

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn computer(id: &str, os: &str, arch: &str, cores: u32, wired: bool) -> Computer {
    Computer {
        id: id.into(),
        os: os.into(),
        cpu_arch: arch.into(),
        cores,
        ram: BIG_RAM,
        devices: BTreeSet::new(),
        wired_nic: wired,
        wifi_nic: !wired,
        cellular: false,
        power: BTreeSet::new(),
    }
}

fn device(id: &str, ty: &str) -> Device {
    Device {
        id: id.into(),
        device_type: ty.into(),
        power: BTreeSet::new(),
    }
}

/// Resumable, fast-starting, stateless, preferred, remotely usable
/// single-instance software with one core and no placement constraints.
fn software(id: &str, func: &str, req: &[&str]) -> Software {
    Software {
        id: id.into(),
        func: func.into(),
        fn_req: set(req),
        devices: BTreeSet::new(),
        cpu_arch: None,
        os: None,
        ram: 512,
        cores: 1,
        cellular: false,
        wired: false,
        deterministic: false,
        fast_starting: true,
        migratable: false,
        persis_state: false,
        preferred: true,
        remote_use: true,
        resumable: true,
        single_instance: true,
        small_persis_state: false,
    }
}

fn primary_backup() -> RepProtocol {
    RepProtocol {
        id: "primary-backup".into(),
        sync: true,
        fail_types: set(&["crash"]),
        active: false,
        progress_q: Quorum::All,
        reconfig_q: Quorum::One,
    }
}

fn crash_bound(n: usize) -> FailureModel {
    FailureModel {
        bounds: vec![FailBound {
            hw_type: HwType::Computer,
            f_type: FailureType::Crash,
            n,
            max_simult: Some(n),
        }],
        max_simult: Some(n),
    }
}

fn notes(items: &[(&str, &str)]) -> BTreeMap<String, String> {
    items
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

/// Two computers, a GPS receiver, a location service and a planner that
/// must be replicated to survive the crash of one computer.
pub fn tiny() -> ModelFile {
    let mut loc = software("LOC", "loc", &[]);
    loc.devices = set(&["GPS"]);
    let mut plan = software("PLAN", "plan", &["loc"]);
    plan.resumable = false;
    plan.deterministic = true;
    ModelFile {
        system: SystemSpec {
            sync: true,
            computers: vec![
                computer("c0", EMBEDDED_OS, "ARM", 4, true),
                computer("c1", EMBEDDED_OS, "ARM", 4, true),
            ],
            devices: vec![device("g0", "GPS")],
            software: vec![loc, plan],
            protocols: vec![primary_backup()],
        },
        failure_model: crash_bound(1),
        crit_fns: vec!["loc".into(), "plan".into()],
        notes: BTreeMap::new(),
    }
}

/// A planner that cannot be restarted or replicated, on a single computer
/// that may crash.
pub fn unsat() -> ModelFile {
    let mut plan = software("PLAN", "plan", &[]);
    plan.resumable = false;
    ModelFile {
        system: SystemSpec {
            sync: true,
            computers: vec![computer("c0", EMBEDDED_OS, "ARM", 4, true)],
            devices: vec![],
            software: vec![plan],
            protocols: vec![],
        },
        failure_model: crash_bound(1),
        crit_fns: vec!["plan".into()],
        notes: BTreeMap::new(),
    }
}

fn driving_base(n: usize) -> SystemSpec {
    let embedded = |s: &mut Software| s.os = Some(EMBEDDED_OS.into());

    let mut perception = software("perception", "perception", &[]);
    perception.devices = set(&["radar", "LIDAR", "camera"]);
    perception.cores = 2;
    perception.resumable = false;
    perception.wired = true;
    embedded(&mut perception);

    let mut control = software("control", "control", &["planning"]);
    embedded(&mut control);

    let mut vehicle_if = software("vehicle-interface", "vehicle-interface", &["control"]);
    vehicle_if.wired = true;
    embedded(&mut vehicle_if);

    let mut planning = software("planning", "planning", &["perception", "localization"]);
    embedded(&mut planning);

    let mut localization = software("localization", "localization", &[]);
    localization.devices = set(&["GPS", "IMU", "camera"]);
    localization.wired = true;
    embedded(&mut localization);

    SystemSpec {
        sync: true,
        computers: (0..n)
            .map(|i| computer(&format!("c{i}"), EMBEDDED_OS, "ARM", 4, true))
            .collect(),
        devices: vec![
            device("camera", "camera"),
            device("gps", "GPS"),
            device("imu", "IMU"),
            device("lidar", "LIDAR"),
            device("radar", "radar"),
        ],
        software: vec![perception, control, vehicle_if, planning, localization],
        protocols: vec![primary_backup()],
    }
}

const DRIVING_NOTES: &[(&str, &str)] = &[
    (
        "attributes",
        "All software is single-instance and remotely usable. Perception needs \
         two cores and cannot resume after a restart, so it is replicated with \
         primary-backup; everything else uses one core and can be restarted.",
    ),
    (
        "devices",
        "Sensors are stand-alone devices; perception uses radar, LIDAR and \
         camera, localization uses GPS, IMU and camera.",
    ),
    (
        "failures",
        "Up to N-1 computers crash, all possibly in one burst. The laptop and \
         phone may crash too.",
    ),
];

/// Embedded computers `c0..c{n-1}` plus a laptop that can run slower,
/// non-preferred Linux builds of planning and control. Every
/// functionality is critical.
pub fn example1(n: usize) -> ModelFile {
    let mut system = driving_base(n);
    system
        .computers
        .push(computer("laptop", "Linux", "x86_64", 4, false));

    let mut linux_control = software("linux-control", "control", &["planning"]);
    linux_control.os = Some("Linux".into());
    linux_control.preferred = false;
    let mut linux_planning = software(
        "linux-planning",
        "planning",
        &["perception", "localization"],
    );
    linux_planning.os = Some("Linux".into());
    linux_planning.preferred = false;
    system.software.push(linux_control);
    system.software.push(linux_planning);

    ModelFile {
        system,
        failure_model: crash_bound(n - 1),
        crit_fns: [
            "perception",
            "localization",
            "planning",
            "control",
            "vehicle-interface",
        ]
        .map(String::from)
        .to_vec(),
        notes: notes(DRIVING_NOTES),
    }
}

/// Embedded computers plus a smartphone offering manual control. The
/// vehicle interface is not critical.
pub fn example2(n: usize) -> ModelFile {
    let mut system = driving_base(n);
    let mut phone = computer("phone", "Android", "ARM", 8, false);
    phone.cellular = true;
    system.computers.push(phone);

    let mut manual = software("manual-control", "control", &["planning"]);
    manual.os = Some("Android".into());
    manual.cellular = true;
    manual.preferred = false;
    system.software.push(manual);

    ModelFile {
        system,
        failure_model: crash_bound(n - 1),
        crit_fns: ["perception", "localization", "planning", "control"]
            .map(String::from)
            .to_vec(),
        notes: notes(DRIVING_NOTES),
    }
}

/// File name and contents of every shipped fixture.
pub fn all() -> Vec<(String, ModelFile)> {
    let mut out = vec![
        ("tiny.json".to_string(), tiny()),
        ("unsat.json".to_string(), unsat()),
        ("example1.json".to_string(), example1(2)),
        ("example2.json".to_string(), example2(2)),
    ];
    for n in 2..=5 {
        out.push((format!("example1-n{n}.json"), example1(n)));
        out.push((format!("example2-n{n}.json"), example2(n)));
    }
    out
}
