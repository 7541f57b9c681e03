use super::bits::HwSet;
use super::system::SystemModel;

/// An unreplicated software instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SwInst {
    pub sw: u16,
    pub computer: u16,
}

impl SwInst {
    pub fn new(sw: usize, computer: usize) -> Self {
        SwInst {
            sw: sw as u16,
            computer: computer as u16,
        }
    }

    pub fn sw(self) -> usize {
        self.sw as usize
    }

    pub fn computer(self) -> usize {
        self.computer as usize
    }
}

/// A replicated software instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RepSwInst {
    pub sw: u16,
    pub protocol: u16,
    pub computers: HwSet,
    pub primary: Option<u16>,
}

impl RepSwInst {
    pub fn new(sw: usize, protocol: usize, computers: HwSet, primary: Option<usize>) -> Self {
        RepSwInst {
            sw: sw as u16,
            protocol: protocol as u16,
            computers,
            primary: primary.map(|p| p as u16),
        }
    }

    pub fn sw(&self) -> usize {
        self.sw as usize
    }

    pub fn protocol(&self) -> usize {
        self.protocol as usize
    }

    pub fn primary(&self) -> Option<usize> {
        self.primary.map(|p| p as usize)
    }
}

/// Placement of software instances. Both collections are kept sorted and
/// free of duplicates, so derived equality is set equality and the derived
/// order is a canonical total order.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Config {
    si: Vec<SwInst>,
    rsi: Vec<RepSwInst>,
}

impl Config {
    pub fn new(mut si: Vec<SwInst>, mut rsi: Vec<RepSwInst>) -> Self {
        si.sort_unstable();
        si.dedup();
        rsi.sort_unstable();
        rsi.dedup();
        Config { si, rsi }
    }

    pub fn empty() -> Self {
        Config::default()
    }

    pub fn si(&self) -> &[SwInst] {
        &self.si
    }

    pub fn rsi(&self) -> &[RepSwInst] {
        &self.rsi
    }

    pub fn is_empty(&self) -> bool {
        self.si.is_empty() && self.rsi.is_empty()
    }

    pub fn contains_si(&self, inst: SwInst) -> bool {
        self.si.binary_search(&inst).is_ok()
    }

    /// The replicated instance of software `sw`, if any.
    pub fn rsi_of(&self, sw: usize) -> Option<&RepSwInst> {
        self.rsi.iter().find(|r| r.sw() == sw)
    }

    /// Computers hosting unreplicated instances of `sw`.
    pub fn si_hosts(&self, sw: usize) -> HwSet {
        self.si
            .iter()
            .filter(|i| i.sw() == sw)
            .map(|i| i.computer())
            .collect()
    }

    pub fn with_si(&self, inst: SwInst) -> Config {
        let mut c = self.clone();
        if let Err(pos) = c.si.binary_search(&inst) {
            c.si.insert(pos, inst);
        }
        c
    }

    pub fn without_si(&self, inst: SwInst) -> Config {
        let mut c = self.clone();
        c.si.retain(|&i| i != inst);
        c
    }

    /// Replaces (or removes, when `rep` is `None`) the replicated instance of `sw`.
    pub fn with_rsi(&self, sw: usize, rep: Option<RepSwInst>) -> Config {
        let mut c = self.clone();
        c.rsi.retain(|r| r.sw() != sw);
        if let Some(r) = rep {
            c.rsi.push(r);
            c.rsi.sort_unstable();
        }
        c
    }

    pub fn retain(
        &self,
        mut keep_si: impl FnMut(&SwInst) -> bool,
        mut keep_rsi: impl FnMut(&RepSwInst) -> bool,
    ) -> Config {
        Config {
            si: self.si.iter().filter(|i| keep_si(i)).copied().collect(),
            rsi: self.rsi.iter().filter(|r| keep_rsi(r)).copied().collect(),
        }
    }

    /// Number of instances of `sw`, counting a replicated instance once.
    pub fn instance_count(&self, sw: usize) -> usize {
        self.si.iter().filter(|i| i.sw() == sw).count()
            + self.rsi.iter().filter(|r| r.sw() == sw).count()
    }
}

/// Software running on computer `c`.
pub fn run(sys: &SystemModel, c: usize, cfg: &Config) -> Vec<usize> {
    let mut out: Vec<usize> = cfg
        .si()
        .iter()
        .filter(|i| i.computer() == c)
        .map(|i| i.sw())
        .chain(
            cfg.rsi()
                .iter()
                .filter(|r| r.computers.contains(c))
                .map(|r| r.sw()),
        )
        .collect();
    out.sort_unstable();
    out.dedup();
    debug_assert!(c < sys.num_computers());
    out
}

/// Per-computer (cores, ram) demand of a configuration.
pub fn load(sys: &SystemModel, cfg: &Config) -> Vec<(u64, u64)> {
    let mut load = vec![(0u64, 0u64); sys.num_computers()];
    for i in cfg.si() {
        let s = sys.software(i.sw());
        let l = &mut load[i.computer()];
        l.0 += s.cores as u64;
        l.1 += s.ram;
    }
    for r in cfg.rsi() {
        let s = sys.software(r.sw());
        for c in r.computers.iter() {
            let l = &mut load[c];
            l.0 += s.cores as u64;
            l.1 += s.ram;
        }
    }
    load
}

pub fn resources_ok(sys: &SystemModel, cfg: &Config) -> bool {
    load(sys, cfg).iter().enumerate().all(|(c, &(cores, ram))| {
        let comp = sys.computer(c);
        cores <= comp.cores as u64 && ram <= comp.ram
    })
}

/// Whether replicated instance `r` is well-formed in `sys`, ignoring resources.
pub fn rsi_ok(sys: &SystemModel, r: &RepSwInst) -> bool {
    let sw = sys.software(r.sw());
    let p = sys.protocol(r.protocol());
    !r.computers.is_empty()
        && sw.stateful()
        && r.computers.is_subset(sys.compatible_computers(r.sw()))
        && match (p.active, r.primary()) {
            (true, None) => sw.deterministic,
            (false, Some(pr)) => r.computers.contains(pr),
            _ => false,
        }
        && (!p.sync || sys.sync())
}

pub fn valid_config(sys: &SystemModel, cfg: &Config) -> bool {
    let n = sys.num_software();
    let mut count = vec![0usize; n];
    let mut reps = vec![0usize; n];
    for i in cfg.si() {
        if i.sw() >= n || i.computer() >= sys.num_computers() {
            return false;
        }
        if !sys.is_compatible(i.sw(), i.computer()) {
            return false;
        }
        count[i.sw()] += 1;
    }
    for r in cfg.rsi() {
        if r.sw() >= n || r.protocol() >= sys.num_protocols() {
            return false;
        }
        if !r.computers.is_subset(sys.computers()) || !rsi_ok(sys, r) {
            return false;
        }
        count[r.sw()] += 1;
        reps[r.sw()] += 1;
    }
    (0..n).all(|s| reps[s] <= 1 && (!sys.software(s).single_instance || count[s] <= 1))
        && resources_ok(sys, cfg)
}
