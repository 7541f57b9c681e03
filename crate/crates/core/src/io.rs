//! Model files, and JSON forms of configurations, policies and run reports.
//!
//! Internal indices never leave this module: every external form names
//! hardware, software, protocols and device types by id.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::enumeration::{RequirementSpec, ResilienceRequirement};
use crate::failures::{FailedSet, FailureModel};
use crate::model::{Config, HwSet, ModelError, RepSwInst, SwInst, SystemModel, SystemSpec};
use crate::quotient::{signature, Signature};
use crate::reconfig::ReconfigAction;
use crate::synthesis::{Policy, PolicyEntry, PolicyKey, QuotientMode, Solution, SolveMode};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: line {line}, column {column}: {msg}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("{path}: {source}")]
    Invalid { path: String, source: ModelError },
    #[error("unknown {kind} `{id}`")]
    Unknown { kind: &'static str, id: String },
    #[error("{0}")]
    Malformed(String),
}

/// Contents of a model file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ModelFile {
    pub system: SystemSpec,
    pub failure_model: FailureModel,
    pub crit_fns: Vec<String>,
    /// Free-form remarks, ignored by the tool.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, String>,
}

impl ModelFile {
    pub fn build(&self) -> Result<(SystemModel, ResilienceRequirement), ModelError> {
        let sys = SystemModel::new(self.system.clone())?;
        let req = ResilienceRequirement::resolve(
            &sys,
            &RequirementSpec {
                failure_model: self.failure_model.clone(),
                crit_fns: self.crit_fns.clone(),
            },
        )?;
        Ok((sys, req))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model files serialize");
        s.push('\n');
        s
    }
}

fn read(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), IoError> {
    std::fs::write(path, text).map_err(|source| IoError::Write {
        path: path.display().to_string(),
        source,
    })
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, IoError> {
    serde_json::from_str(text).map_err(|e| IoError::Parse {
        path: path.display().to_string(),
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })
}

pub fn read_model_file(path: impl AsRef<Path>) -> Result<ModelFile, IoError> {
    let path = path.as_ref();
    parse(path, &read(path)?)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(SystemModel, ResilienceRequirement), IoError> {
    let path = path.as_ref();
    read_model_file(path)?
        .build()
        .map_err(|source| IoError::Invalid {
            path: path.display().to_string(),
            source,
        })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SwInstJson {
    pub sw: String,
    pub computer: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RepSwInstJson {
    pub sw: String,
    pub protocol: String,
    pub computers: Vec<String>,
    #[serde(default)]
    pub primary: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigJson {
    pub si: Vec<SwInstJson>,
    pub rsi: Vec<RepSwInstJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RelocJson {
    pub sw: String,
    pub devices: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SignatureJson {
    pub fixed_si: Vec<SwInstJson>,
    pub fixed_rsi: Vec<RepSwInstJson>,
    pub reloc: Vec<RelocJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "camelCase")]
pub enum ActionJson {
    ChangeReps {
        sw: String,
        computers: Vec<String>,
        #[serde(default)]
        primary: Option<String>,
    },
    Stop {
        sw: String,
        computer: String,
    },
    StopRep {
        sw: String,
    },
    Start {
        sw: String,
        computer: String,
    },
    Move {
        sw: String,
        from: String,
        to: String,
    },
}

/// Converts between internal values and their named JSON forms.
pub struct Names<'a> {
    sys: &'a SystemModel,
}

impl<'a> Names<'a> {
    pub fn new(sys: &'a SystemModel) -> Self {
        Names { sys }
    }

    fn sw(&self, s: usize) -> String {
        self.sys.software(s).id.clone()
    }

    fn hw(&self, h: usize) -> String {
        self.sys.hw_id(h).to_string()
    }

    fn hw_list(&self, set: HwSet) -> Vec<String> {
        set.iter().map(|h| self.hw(h)).collect()
    }

    fn sw_of(&self, id: &str) -> Result<usize, IoError> {
        self.sys.sw_index(id).ok_or_else(|| IoError::Unknown {
            kind: "software",
            id: id.to_string(),
        })
    }

    fn computer_of(&self, id: &str) -> Result<usize, IoError> {
        self.sys.computer_index(id).ok_or_else(|| IoError::Unknown {
            kind: "computer",
            id: id.to_string(),
        })
    }

    fn hw_of(&self, id: &str) -> Result<usize, IoError> {
        self.sys.hw_index(id).ok_or_else(|| IoError::Unknown {
            kind: "hardware",
            id: id.to_string(),
        })
    }

    pub fn si(&self, i: SwInst) -> SwInstJson {
        SwInstJson {
            sw: self.sw(i.sw()),
            computer: self.hw(i.computer()),
        }
    }

    pub fn rsi(&self, r: &RepSwInst) -> RepSwInstJson {
        RepSwInstJson {
            sw: self.sw(r.sw()),
            protocol: self.sys.protocol(r.protocol()).id.clone(),
            computers: self.hw_list(r.computers),
            primary: r.primary().map(|p| self.hw(p)),
        }
    }

    pub fn config(&self, cfg: &Config) -> ConfigJson {
        ConfigJson {
            si: cfg.si().iter().map(|&i| self.si(i)).collect(),
            rsi: cfg.rsi().iter().map(|r| self.rsi(r)).collect(),
        }
    }

    pub fn signature(&self, sig: &Signature) -> SignatureJson {
        SignatureJson {
            fixed_si: sig.fixed_si.iter().map(|&i| self.si(i)).collect(),
            fixed_rsi: sig.fixed_rsi.iter().map(|r| self.rsi(r)).collect(),
            reloc: sig
                .reloc
                .iter()
                .map(|&(s, devs)| RelocJson {
                    sw: self.sw(s as usize),
                    devices: devs
                        .iter()
                        .map(|t| self.sys.dev_type_name(t).to_string())
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn failed(&self, fs: FailedSet) -> Vec<String> {
        fs.sorted_ids(self.sys)
    }

    pub fn action(&self, a: &ReconfigAction) -> ActionJson {
        match *a {
            ReconfigAction::ChangeReps {
                sw,
                computers,
                primary,
            } => ActionJson::ChangeReps {
                sw: self.sw(sw),
                computers: self.hw_list(computers),
                primary: primary.map(|p| self.hw(p)),
            },
            ReconfigAction::Stop(i) => ActionJson::Stop {
                sw: self.sw(i.sw()),
                computer: self.hw(i.computer()),
            },
            ReconfigAction::StopRep { sw } => ActionJson::StopRep { sw: self.sw(sw) },
            ReconfigAction::Start(i) => ActionJson::Start {
                sw: self.sw(i.sw()),
                computer: self.hw(i.computer()),
            },
            ReconfigAction::Move { inst, to } => ActionJson::Move {
                sw: self.sw(inst.sw()),
                from: self.hw(inst.computer()),
                to: self.hw(to),
            },
        }
    }

    /// Compact one-line rendering, e.g. `ctl@c0 per[pb]{c0*,c1}` where `*`
    /// marks the primary.
    pub fn describe(&self, cfg: &Config) -> String {
        let mut parts: Vec<String> = cfg
            .si()
            .iter()
            .map(|i| format!("{}@{}", self.sw(i.sw()), self.hw(i.computer())))
            .collect();
        for r in cfg.rsi() {
            let members: Vec<String> = r
                .computers
                .iter()
                .map(|c| {
                    let star = if r.primary() == Some(c) { "*" } else { "" };
                    format!("{}{star}", self.hw(c))
                })
                .collect();
            parts.push(format!(
                "{}[{}]{{{}}}",
                self.sw(r.sw()),
                self.sys.protocol(r.protocol()).id,
                members.join(",")
            ));
        }
        if parts.is_empty() {
            "(empty)".to_string()
        } else {
            parts.join(" ")
        }
    }

    pub fn describe_action(&self, a: &ReconfigAction) -> String {
        match *a {
            ReconfigAction::ChangeReps {
                sw,
                computers,
                primary,
            } => {
                let p = primary
                    .map(|p| format!(", primary {}", self.hw(p)))
                    .unwrap_or_default();
                format!(
                    "changeReps {} -> {{{}}}{p}",
                    self.sw(sw),
                    self.hw_list(computers).join(",")
                )
            }
            ReconfigAction::Stop(i) => {
                format!("stop {}@{}", self.sw(i.sw()), self.hw(i.computer()))
            }
            ReconfigAction::StopRep { sw } => format!("stopRep {}", self.sw(sw)),
            ReconfigAction::Start(i) => {
                format!("start {}@{}", self.sw(i.sw()), self.hw(i.computer()))
            }
            ReconfigAction::Move { inst, to } => format!(
                "move {}@{} -> {}",
                self.sw(inst.sw()),
                self.hw(inst.computer()),
                self.hw(to)
            ),
        }
    }

    fn computers_of(&self, ids: &[String]) -> Result<HwSet, IoError> {
        ids.iter().map(|c| self.computer_of(c)).collect()
    }

    pub fn parse_si(&self, j: &SwInstJson) -> Result<SwInst, IoError> {
        Ok(SwInst::new(
            self.sw_of(&j.sw)?,
            self.computer_of(&j.computer)?,
        ))
    }

    pub fn parse_rsi(&self, j: &RepSwInstJson) -> Result<RepSwInst, IoError> {
        let protocol = self
            .sys
            .protocol_index(&j.protocol)
            .ok_or_else(|| IoError::Unknown {
                kind: "protocol",
                id: j.protocol.clone(),
            })?;
        let primary = j
            .primary
            .as_deref()
            .map(|p| self.computer_of(p))
            .transpose()?;
        Ok(RepSwInst::new(
            self.sw_of(&j.sw)?,
            protocol,
            self.computers_of(&j.computers)?,
            primary,
        ))
    }

    pub fn parse_config(&self, j: &ConfigJson) -> Result<Config, IoError> {
        let si =
            j.si.iter()
                .map(|i| self.parse_si(i))
                .collect::<Result<_, _>>()?;
        let rsi = j
            .rsi
            .iter()
            .map(|r| self.parse_rsi(r))
            .collect::<Result<_, _>>()?;
        Ok(Config::new(si, rsi))
    }

    pub fn parse_failed(&self, ids: &[String]) -> Result<FailedSet, IoError> {
        ids.iter().map(|h| self.hw_of(h)).collect()
    }

    pub fn parse_action(&self, j: &ActionJson) -> Result<ReconfigAction, IoError> {
        Ok(match j {
            ActionJson::ChangeReps {
                sw,
                computers,
                primary,
            } => ReconfigAction::ChangeReps {
                sw: self.sw_of(sw)?,
                computers: self.computers_of(computers)?,
                primary: primary
                    .as_deref()
                    .map(|p| self.computer_of(p))
                    .transpose()?,
            },
            ActionJson::Stop { sw, computer } => {
                ReconfigAction::Stop(SwInst::new(self.sw_of(sw)?, self.computer_of(computer)?))
            }
            ActionJson::StopRep { sw } => ReconfigAction::StopRep {
                sw: self.sw_of(sw)?,
            },
            ActionJson::Start { sw, computer } => {
                ReconfigAction::Start(SwInst::new(self.sw_of(sw)?, self.computer_of(computer)?))
            }
            ActionJson::Move { sw, from, to } => ReconfigAction::Move {
                inst: SwInst::new(self.sw_of(sw)?, self.computer_of(from)?),
                to: self.computer_of(to)?,
            },
        })
    }
}

/// A configuration together with the key of its class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassJson {
    pub config: ConfigJson,
    pub signature: SignatureJson,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StateJson {
    pub config: ConfigJson,
    pub signature: SignatureJson,
    pub failed_set: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyEntryJson {
    pub state: StateJson,
    pub burst: Vec<String>,
    pub target: ClassJson,
    pub actions: Vec<ActionJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyFile {
    pub roots: Vec<ClassJson>,
    pub entries: Vec<PolicyEntryJson>,
}

fn class_json(n: &Names, sys: &SystemModel, cfg: &Config) -> ClassJson {
    ClassJson {
        config: n.config(cfg),
        signature: n.signature(&signature(sys, cfg)),
    }
}

pub fn policy_to_file(sys: &SystemModel, policy: &Policy) -> PolicyFile {
    let n = Names::new(sys);
    PolicyFile {
        roots: policy
            .roots
            .iter()
            .map(|c| class_json(&n, sys, c))
            .collect(),
        entries: policy
            .entries
            .iter()
            .map(|(k, e)| PolicyEntryJson {
                state: StateJson {
                    config: n.config(&k.config),
                    signature: n.signature(&signature(sys, &k.config)),
                    failed_set: n.failed(k.failed),
                },
                burst: n.failed(k.burst),
                target: class_json(&n, sys, &e.target),
                actions: e.actions.iter().map(|a| n.action(a)).collect(),
            })
            .collect(),
    }
}

pub fn policy_from_file(sys: &SystemModel, file: &PolicyFile) -> Result<Policy, IoError> {
    let n = Names::new(sys);
    let roots = file
        .roots
        .iter()
        .map(|r| n.parse_config(&r.config))
        .collect::<Result<_, _>>()?;
    let mut entries = BTreeMap::new();
    for e in &file.entries {
        let key = PolicyKey {
            config: n.parse_config(&e.state.config)?,
            failed: n.parse_failed(&e.state.failed_set)?,
            burst: n.parse_failed(&e.burst)?,
        };
        let entry = PolicyEntry {
            target: n.parse_config(&e.target.config)?,
            actions: e
                .actions
                .iter()
                .map(|a| n.parse_action(a))
                .collect::<Result<_, _>>()?,
        };
        if entries.insert(key, entry).is_some() {
            return Err(IoError::Malformed("duplicate policy entry".into()));
        }
    }
    Ok(Policy { roots, entries })
}

pub fn policy_json(sys: &SystemModel, policy: &Policy) -> String {
    let mut s =
        serde_json::to_string_pretty(&policy_to_file(sys, policy)).expect("policies serialize");
    s.push('\n');
    s
}

pub fn save_policy(
    sys: &SystemModel,
    policy: &Policy,
    path: impl AsRef<Path>,
) -> Result<(), IoError> {
    write(path.as_ref(), &policy_json(sys, policy))
}

pub fn load_policy(sys: &SystemModel, path: impl AsRef<Path>) -> Result<Policy, IoError> {
    let path = path.as_ref();
    let file: PolicyFile = parse(path, &read(path)?)?;
    policy_from_file(sys, &file)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResilientJson {
    pub config: ConfigJson,
    pub signature: SignatureJson,
    pub qos: usize,
    pub cost: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Timings {
    pub generate_secs: f64,
    pub analyze_secs: f64,
}

/// Summary of one solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport {
    pub quotient: QuotientMode,
    pub mode: SolveMode,
    pub all_cfg: usize,
    pub init_cfg: usize,
    pub all_classes: usize,
    pub init_classes: usize,
    pub resilient_classes: usize,
    pub resilient: Vec<ResilientJson>,
    /// Wall-clock times vary between runs, so they are only written on request.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

impl RunReport {
    pub fn new(sys: &SystemModel, sol: &Solution, quotient: QuotientMode, mode: SolveMode) -> Self {
        let n = Names::new(sys);
        RunReport {
            quotient,
            mode,
            all_cfg: sol.all_cfg,
            init_cfg: sol.init_cfg,
            all_classes: sol.all_classes,
            init_classes: sol.init_classes,
            resilient_classes: sol.resilient.len(),
            resilient: sol
                .resilient
                .iter()
                .map(|r| ResilientJson {
                    config: n.config(&r.config),
                    signature: n.signature(&r.signature),
                    qos: r.quality.qos,
                    cost: r.quality.cost,
                })
                .collect(),
            timings: None,
        }
    }

    pub fn with_timings(mut self, sol: &Solution) -> Self {
        self.timings = Some(Timings {
            generate_secs: sol.generate_time.as_secs_f64(),
            analyze_secs: sol.analyze_time.as_secs_f64(),
        });
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

pub fn save_report(report: &RunReport, path: impl AsRef<Path>) -> Result<(), IoError> {
    write(path.as_ref(), &report.to_json())
}
