//! Small sets of region indices backed by a `u32` bitmask.
//!
//! Subset enumeration is the workhorse of both the follower's best-response
//! search and the leader's outer loop, so the representation is optimized for
//! cheap iteration and deterministic ordering (bitmask value).

use serde::{Deserialize, Serialize};
use std::fmt;

/// A set of region indices (0-based), bit `k` standing for region `k`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegionSet(pub u32);

impl RegionSet {
    pub const EMPTY: RegionSet = RegionSet(0);

    /// The full set `{0, …, count-1}`.
    pub fn full(count: usize) -> Self {
        debug_assert!(count <= 32);
        if count == 32 {
            RegionSet(u32::MAX)
        } else {
            RegionSet((1u32 << count) - 1)
        }
    }

    pub fn from_indices(indices: &[usize]) -> Self {
        let mut mask = 0u32;
        for &k in indices {
            debug_assert!(k < 32);
            mask |= 1 << k;
        }
        RegionSet(mask)
    }

    pub fn mask(self) -> u32 {
        self.0
    }

    pub fn contains(self, k: usize) -> bool {
        k < 32 && self.0 & (1 << k) != 0
    }

    #[must_use]
    pub fn with(self, k: usize) -> Self {
        RegionSet(self.0 | (1 << k))
    }

    #[must_use]
    pub fn without(self, k: usize) -> Self {
        RegionSet(self.0 & !(1 << k))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset_of(self, other: RegionSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersection(self, other: RegionSet) -> RegionSet {
        RegionSet(self.0 & other.0)
    }

    pub fn union(self, other: RegionSet) -> RegionSet {
        RegionSet(self.0 | other.0)
    }

    /// Members of `{0, …, count-1}` not in `self`.
    pub fn complement_in(self, count: usize) -> RegionSet {
        RegionSet(Self::full(count).0 & !self.0)
    }

    /// Iterate member indices in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let k = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(k)
            }
        })
    }

    pub fn indices(self) -> Vec<usize> {
        self.iter().collect()
    }

    /// All subsets of `self` (including the empty set and `self`), in
    /// increasing bitmask order. Carry-Rippler enumeration.
    pub fn subsets(self) -> SubsetIter {
        SubsetIter {
            set: self.0,
            next: 0,
            done: false,
        }
    }
}

impl fmt::Debug for RegionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RegionSet({:#b})", self.0)
    }
}

/// Displays 1-based region numbers, e.g. `{1,2,5}`.
impl fmt::Display for RegionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, k) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", k + 1)?;
        }
        write!(f, "}}")
    }
}

pub struct SubsetIter {
    set: u32,
    next: u32,
    done: bool,
}

impl Iterator for SubsetIter {
    type Item = RegionSet;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let current = self.next;
        self.next = self.next.wrapping_sub(self.set) & self.set;
        self.done = self.next == 0;
        Some(RegionSet(current))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_enumerate_in_ascending_mask_order() {
        let set = RegionSet(0b1011);
        let all: Vec<u32> = set.subsets().map(|s| s.mask()).collect();
        assert_eq!(
            all,
            vec![0b0000, 0b0001, 0b0010, 0b0011, 0b1000, 0b1001, 0b1010, 0b1011]
        );
    }

    #[test]
    fn subsets_of_empty_set_is_just_empty() {
        let all: Vec<RegionSet> = RegionSet::EMPTY.subsets().collect();
        assert_eq!(all, vec![RegionSet::EMPTY]);
    }

    #[test]
    fn iter_yields_sorted_indices() {
        let set = RegionSet::from_indices(&[4, 1, 3]);
        assert_eq!(set.indices(), vec![1, 3, 4]);
        assert_eq!(set.len(), 3);
        assert!(set.contains(3));
        assert!(!set.contains(0));
    }

    #[test]
    fn complement_and_subset_relations() {
        let set = RegionSet::from_indices(&[0, 2]);
        let comp = set.complement_in(4);
        assert_eq!(comp.indices(), vec![1, 3]);
        assert!(set.is_subset_of(RegionSet::full(4)));
        assert!(!RegionSet::full(4).is_subset_of(set));
        assert_eq!(set.intersection(comp), RegionSet::EMPTY);
        assert_eq!(set.union(comp), RegionSet::full(4));
    }

    #[test]
    fn display_uses_one_based_regions() {
        assert_eq!(RegionSet::from_indices(&[0, 3]).to_string(), "{1,4}");
        assert_eq!(RegionSet::EMPTY.to_string(), "{}");
    }
}
