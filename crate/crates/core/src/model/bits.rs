use std::fmt;

/// Maximum number of hardware components (computers plus devices) a model may declare.
pub const MAX_HW: usize = 128;
/// Maximum number of distinct device types a model may mention.
pub const MAX_DEV_TYPES: usize = 64;

/// Set of hardware indices, stored as a 128-bit mask.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HwSet(u128);

impl HwSet {
    pub const EMPTY: HwSet = HwSet(0);

    pub fn single(i: usize) -> Self {
        HwSet(1u128 << i)
    }

    pub fn from_bits(bits: u128) -> Self {
        HwSet(bits)
    }

    pub fn bits(self) -> u128 {
        self.0
    }

    /// The set {0, 1, ..., n-1}.
    pub fn first_n(n: usize) -> Self {
        if n >= 128 {
            HwSet(u128::MAX)
        } else {
            HwSet((1u128 << n) - 1)
        }
    }

    pub fn contains(self, i: usize) -> bool {
        i < 128 && self.0 & (1u128 << i) != 0
    }

    pub fn insert(&mut self, i: usize) {
        self.0 |= 1u128 << i;
    }

    pub fn remove(&mut self, i: usize) {
        self.0 &= !(1u128 << i);
    }

    pub fn with(self, i: usize) -> Self {
        HwSet(self.0 | (1u128 << i))
    }

    pub fn without(self, i: usize) -> Self {
        HwSet(self.0 & !(1u128 << i))
    }

    pub fn union(self, o: Self) -> Self {
        HwSet(self.0 | o.0)
    }

    pub fn inter(self, o: Self) -> Self {
        HwSet(self.0 & o.0)
    }

    pub fn minus(self, o: Self) -> Self {
        HwSet(self.0 & !o.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_subset(self, o: Self) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn first(self) -> Option<usize> {
        if self.0 == 0 {
            None
        } else {
            Some(self.0.trailing_zeros() as usize)
        }
    }

    pub fn iter(self) -> HwIter {
        HwIter(self.0)
    }

    /// All subsets of `self`, including the empty set, in increasing mask order.
    pub fn subsets(self) -> Vec<HwSet> {
        let mut out = Vec::with_capacity(1 << self.len().min(20));
        let mut sub: u128 = 0;
        loop {
            out.push(HwSet(sub));
            if sub == self.0 {
                break;
            }
            sub = (sub.wrapping_sub(self.0)) & self.0;
        }
        out
    }
}

impl fmt::Debug for HwSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<usize> for HwSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = HwSet::EMPTY;
        for i in iter {
            s.insert(i);
        }
        s
    }
}

pub struct HwIter(u128);

impl Iterator for HwIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }
}

/// Set of device-type indices.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DevSet(u64);

impl DevSet {
    pub const EMPTY: DevSet = DevSet(0);

    pub fn contains(self, i: usize) -> bool {
        self.0 & (1u64 << i) != 0
    }

    pub fn insert(&mut self, i: usize) {
        self.0 |= 1u64 << i;
    }

    pub fn inter(self, o: Self) -> Self {
        DevSet(self.0 & o.0)
    }

    pub fn union(self, o: Self) -> Self {
        DevSet(self.0 | o.0)
    }

    pub fn is_subset(self, o: Self) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        HwIter(self.0 as u128)
    }
}

impl fmt::Debug for DevSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
