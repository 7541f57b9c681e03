//! Failed sets, the failure model, and the failure and recovery transitions.
//!
//! Only crash failures exist, so a failed set is just the set of crashed
//! hardware components.

use serde::{Deserialize, Serialize};

use crate::model::{Config, HwSet, ModelError, SystemModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HwType {
    Computer,
    Device,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailureType {
    Crash,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Failure {
    pub hw: usize,
    pub ftype: FailureType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FailBound {
    pub hw_type: HwType,
    pub f_type: FailureType,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_simult: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FailureModel {
    pub bounds: Vec<FailBound>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_simult: Option<usize>,
}

impl FailureModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (i, b) in self.bounds.iter().enumerate() {
            if self.bounds[..i]
                .iter()
                .any(|o| o.hw_type == b.hw_type && o.f_type == b.f_type)
            {
                return Err(ModelError::FailureModel(format!(
                    "more than one bound for {:?}/{:?}",
                    b.hw_type, b.f_type
                )));
            }
            if b.max_simult.is_some_and(|m| m > b.n) {
                return Err(ModelError::FailureModel(format!(
                    "{:?} bound has maxSimult above n",
                    b.hw_type
                )));
            }
        }
        Ok(())
    }

    pub fn bound(&self, t: HwType) -> Option<&FailBound> {
        self.bounds
            .iter()
            .find(|b| b.hw_type == t && b.f_type == FailureType::Crash)
    }

    /// All permitted failures can happen in a single burst.
    pub fn is_unlimited_rate(&self) -> bool {
        self.max_simult.is_none() && self.bounds.iter().all(|b| b.max_simult.is_none())
    }

    /// Largest number of computers that can crash in one burst.
    pub fn max_simult_fail(&self) -> usize {
        match self.bound(HwType::Computer) {
            None => 0,
            Some(b) => {
                let mut f = b.n;
                if let Some(m) = b.max_simult {
                    f = f.min(m);
                }
                if let Some(m) = self.max_simult {
                    f = f.min(m);
                }
                f
            }
        }
    }
}

/// Crashed hardware components.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FailedSet(HwSet);

impl FailedSet {
    pub const EMPTY: FailedSet = FailedSet(HwSet::EMPTY);

    pub fn new(hw: HwSet) -> Self {
        FailedSet(hw)
    }

    pub fn hw(self) -> HwSet {
        self.0
    }

    pub fn contains(self, h: usize) -> bool {
        self.0.contains(h)
    }

    pub fn len(self) -> usize {
        self.0.len()
    }

    pub fn is_empty(self) -> bool {
        self.0.is_empty()
    }

    pub fn union(self, o: FailedSet) -> FailedSet {
        FailedSet(self.0.union(o.0))
    }

    pub fn minus(self, o: FailedSet) -> FailedSet {
        FailedSet(self.0.minus(o.0))
    }

    pub fn failures(self) -> impl Iterator<Item = Failure> {
        self.0.iter().map(|hw| Failure {
            hw,
            ftype: FailureType::Crash,
        })
    }

    /// Hardware ids in lexicographic order, the canonical external form.
    pub fn sorted_ids(self, sys: &SystemModel) -> Vec<String> {
        let mut ids: Vec<String> = self.0.iter().map(|h| sys.hw_id(h).to_string()).collect();
        ids.sort();
        ids
    }
}

impl FromIterator<usize> for FailedSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        FailedSet(iter.into_iter().collect())
    }
}

/// A configuration together with the failed set it runs under.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct State {
    pub cfg: Config,
    pub fs: FailedSet,
}

fn hw_of_type(sys: &SystemModel, t: HwType) -> HwSet {
    match t {
        HwType::Computer => sys.computers(),
        HwType::Device => sys.devices(),
    }
}

pub fn consistent(sys: &SystemModel, fm: &FailureModel, fs: FailedSet) -> bool {
    let mut covered = HwSet::EMPTY;
    for b in &fm.bounds {
        let of_type = fs.hw().inter(hw_of_type(sys, b.hw_type));
        if of_type.len() > b.n {
            return false;
        }
        covered = covered.union(of_type);
    }
    fs.hw().is_subset(covered)
}

/// Per hardware type: the candidates that may still fail and how many of them
/// one burst may include.
fn burst_caps(sys: &SystemModel, fm: &FailureModel, fs: FailedSet) -> Vec<(HwSet, usize)> {
    assert!(
        consistent(sys, fm, fs),
        "failed set is inconsistent with the failure model"
    );
    let mut caps = Vec::new();
    for t in [HwType::Computer, HwType::Device] {
        if let Some(b) = fm.bound(t) {
            let all = hw_of_type(sys, t);
            let cand = all.minus(fs.hw());
            let used = fs.hw().inter(all).len();
            let mut cap = (b.n - used).min(cand.len());
            if let Some(m) = b.max_simult {
                cap = cap.min(m);
            }
            if cap > 0 {
                caps.push((cand, cap));
            }
        }
    }
    caps
}

/// Subsets of `set` with exactly `k` elements, in increasing mask order.
pub fn combinations(set: HwSet, k: usize) -> Vec<HwSet> {
    let items: Vec<usize> = set.iter().collect();
    let mut out = Vec::new();
    if k > items.len() {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        let mut i = k;
        loop {
            if i == 0 {
                out.sort();
                return out;
            }
            i -= 1;
            if idx[i] != i + items.len() - k {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Bursts whose per-type sizes are given by `counts`.
fn bursts_with_counts(caps: &[(HwSet, usize)], counts: &[usize]) -> Vec<HwSet> {
    let mut acc = vec![HwSet::EMPTY];
    for (&(cand, _), &k) in caps.iter().zip(counts) {
        let parts = combinations(cand, k);
        acc = acc
            .iter()
            .flat_map(|a| parts.iter().map(move |p| a.union(*p)))
            .collect();
    }
    acc
}

fn count_vectors(caps: &[(HwSet, usize)]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &(_, cap) in caps {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..=cap).map(move |k| {
                    let mut w = v.clone();
                    w.push(k);
                    w
                })
            })
            .collect();
    }
    out
}

/// Failed sets reachable from `fs` by one burst of simultaneous failures.
pub fn next_fs(sys: &SystemModel, fm: &FailureModel, fs: FailedSet) -> Vec<FailedSet> {
    let caps = burst_caps(sys, fm, fs);
    let global = fm.max_simult.unwrap_or(usize::MAX);
    let mut out: Vec<FailedSet> = count_vectors(&caps)
        .into_iter()
        .filter(|v| {
            let total: usize = v.iter().sum();
            total > 0 && total <= global
        })
        .flat_map(|v| bursts_with_counts(&caps, &v))
        .map(|b| FailedSet(fs.hw().union(b)))
        .collect();
    out.sort();
    out
}

/// The subset-maximal members of [`next_fs`], generated directly from the
/// per-type burst sizes: a burst is maximal iff it reaches the global cap or
/// every type is at its own cap.
pub fn next_fs_worst(sys: &SystemModel, fm: &FailureModel, fs: FailedSet) -> Vec<FailedSet> {
    let caps = burst_caps(sys, fm, fs);
    let global = fm.max_simult.unwrap_or(usize::MAX);
    let mut out: Vec<FailedSet> = count_vectors(&caps)
        .into_iter()
        .filter(|v| {
            let total: usize = v.iter().sum();
            let saturated = v.iter().zip(&caps).all(|(&k, &(_, cap))| k == cap);
            total > 0 && total <= global && (total == global || saturated)
        })
        .flat_map(|v| bursts_with_counts(&caps, &v))
        .map(|b| FailedSet(fs.hw().union(b)))
        .collect();
    out.sort();
    out
}

/// Drops instances that cannot usefully resume after their computers crashed.
pub fn remove_dead(sys: &SystemModel, cfg: &Config, fs: FailedSet) -> Config {
    if fs.is_empty() {
        return cfg.clone();
    }
    let failed = fs.hw();
    cfg.retain(
        |i| !failed.contains(i.computer()) || sys.software(i.sw()).survives_crash(),
        |r| !r.computers.is_subset(failed) || sys.software(r.sw()).survives_crash(),
    )
}

pub fn apply_fail(sys: &SystemModel, s: &State, burst: FailedSet) -> State {
    assert!(
        s.fs.hw().inter(burst.hw()).is_empty(),
        "burst overlaps the failed set"
    );
    let fs = s.fs.union(burst);
    State {
        cfg: remove_dead(sys, &s.cfg, fs),
        fs,
    }
}

pub fn apply_recover(s: &State, f: Failure) -> State {
    assert!(
        s.fs.contains(f.hw),
        "recovering hardware that has not failed"
    );
    State {
        cfg: s.cfg.clone(),
        fs: FailedSet(s.fs.hw().without(f.hw)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_count() {
        let s = HwSet::first_n(5);
        assert_eq!(combinations(s, 2).len(), 10);
        assert_eq!(combinations(s, 0), vec![HwSet::EMPTY]);
        assert_eq!(combinations(s, 5), vec![s]);
        assert!(combinations(s, 6).is_empty());
    }

    #[test]
    fn max_simult_fail_examples() {
        let b = |n, m| FailBound {
            hw_type: HwType::Computer,
            f_type: FailureType::Crash,
            n,
            max_simult: m,
        };
        let fm = FailureModel {
            bounds: vec![b(1, Some(1))],
            max_simult: None,
        };
        assert_eq!(fm.max_simult_fail(), 1);
        let fm = FailureModel {
            bounds: vec![b(4, None)],
            max_simult: None,
        };
        assert_eq!(fm.max_simult_fail(), 4);
        assert!(fm.is_unlimited_rate());
        let fm = FailureModel {
            bounds: vec![b(3, None)],
            max_simult: Some(2),
        };
        assert_eq!(fm.max_simult_fail(), 2);
        assert!(!fm.is_unlimited_rate());
    }
}
