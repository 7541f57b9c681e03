//! Equivalence of configurations up to the placement of relocatable software.
//!
//! Two configurations are equivalent when they have the same instances of
//! non-relocatable software and a bijection between their relocatable
//! instances that preserves the software and the set of required device
//! types integrated in the host. Such a bijection exists exactly when the
//! multisets of (software, integrated required devices) pairs coincide, so
//! the sorted multiset serves as a canonical key.

use std::collections::{BTreeMap, HashMap};

use crate::model::{Config, DevSet, HwSet, RepSwInst, SwInst, SystemModel};

/// Whether software `s` can be relocated by stopping it and starting it
/// elsewhere without affecting anything else in `cfg`.
///
/// Any instance (replicated or not) that requires `s`'s functionality must
/// reach it remotely; otherwise moving `s` away from a replica could cut the
/// replica off from it.
pub fn relocatable(sys: &SystemModel, s: usize, cfg: &Config) -> bool {
    let sw = sys.software(s);
    if !sw.startable() {
        return false;
    }
    let f = sys.sw_fn(s);
    let instances = cfg
        .si()
        .iter()
        .map(|i| i.sw())
        .chain(cfg.rsi().iter().map(|r| r.sw()));
    for other in instances {
        if !sw.remote_use && sys.sw_req(other).contains(&f) {
            return false;
        }
        if sys.sw_req(s).contains(&sys.sw_fn(other)) && !sys.software(other).remote_use {
            return false;
        }
    }
    true
}

/// Canonical key of an equivalence class.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Signature {
    pub fixed_si: Vec<SwInst>,
    pub fixed_rsi: Vec<RepSwInst>,
    /// Sorted multiset of relocatable instances.
    pub reloc: Vec<(u16, DevSet)>,
}

pub fn signature(sys: &SystemModel, cfg: &Config) -> Signature {
    signature_at(sys, cfg, sys.computers())
}

/// Signature of `cfg` in a state where only `live` hardware is live. An
/// instance on a computer that is down but not itself failed (it lost
/// power) stays in the configuration; it is kept out of the relocatable
/// multiset, since it cannot stand in for a live instance.
pub fn signature_at(sys: &SystemModel, cfg: &Config, live: HwSet) -> Signature {
    let n = sys.num_software();
    let mut reloc_sw = vec![None; n];
    let mut sig = Signature {
        fixed_si: Vec::new(),
        fixed_rsi: cfg.rsi().to_vec(),
        reloc: Vec::new(),
    };
    for &i in cfg.si() {
        let is_reloc = *reloc_sw[i.sw()].get_or_insert_with(|| relocatable(sys, i.sw(), cfg));
        if is_reloc && live.contains(i.computer()) {
            let devs = sys
                .sw_devices(i.sw())
                .inter(sys.computer_devices(i.computer()));
            sig.reloc.push((i.sw, devs));
        } else {
            sig.fixed_si.push(i);
        }
    }
    sig.reloc.sort_unstable();
    sig
}

pub fn rs_equivalent(sys: &SystemModel, a: &Config, b: &Config) -> bool {
    signature(sys, a) == signature(sys, b)
}

/// Groups configurations by class; each class is represented by its least
/// member in canonical order.
pub fn partition_by_class(sys: &SystemModel, cfgs: &[Config]) -> BTreeMap<Signature, Config> {
    let mut reps: HashMap<Signature, &Config> = HashMap::new();
    for c in cfgs {
        reps.entry(signature(sys, c))
            .and_modify(|r| {
                if c < *r {
                    *r = c;
                }
            })
            .or_insert(c);
    }
    reps.into_iter().map(|(s, c)| (s, c.clone())).collect()
}
