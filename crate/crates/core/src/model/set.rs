use alloc::vec::Vec;

use super::StateId;

/// A set of states over a fixed universe `0..n`, stored as a membership mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateSet {
    mask: Vec<bool>,
    len: usize,
}

impl StateSet {
    pub fn empty(universe: usize) -> Self {
        StateSet {
            mask: alloc::vec![false; universe],
            len: 0,
        }
    }

    pub fn full(universe: usize) -> Self {
        StateSet {
            mask: alloc::vec![true; universe],
            len: universe,
        }
    }

    pub fn from_ids(universe: usize, ids: impl IntoIterator<Item = StateId>) -> Self {
        let mut set = Self::empty(universe);
        for id in ids {
            set.insert(id);
        }
        set
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        let len = mask.iter().filter(|&&b| b).count();
        StateSet { mask, len }
    }

    pub fn universe(&self) -> usize {
        self.mask.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn contains(&self, id: StateId) -> bool {
        self.mask.get(id).copied().unwrap_or(false)
    }

    /// Returns `true` if the state was newly inserted.
    pub fn insert(&mut self, id: StateId) -> bool {
        if self.mask[id] {
            false
        } else {
            self.mask[id] = true;
            self.len += 1;
            true
        }
    }

    pub fn remove(&mut self, id: StateId) -> bool {
        if self.mask[id] {
            self.mask[id] = false;
            self.len -= 1;
            true
        } else {
            false
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = StateId> + '_ {
        self.mask.iter().enumerate().filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn as_mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn union_with(&mut self, other: &StateSet) {
        for id in other.iter() {
            self.insert(id);
        }
    }

    pub fn is_disjoint(&self, other: &StateSet) -> bool {
        self.iter().all(|id| !other.contains(id))
    }

    pub fn complement(&self) -> StateSet {
        StateSet::from_mask(self.mask.iter().map(|b| !b).collect())
    }
}
