use serde::{Deserialize, Serialize};

pub type ItemId = usize;

/// A set of items, kept sorted ascending and duplicate-free.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "Vec<ItemId>", into = "Vec<ItemId>")]
pub struct Bundle(Vec<ItemId>);

impl Bundle {
    pub fn new(mut items: Vec<ItemId>) -> Self {
        items.sort_unstable();
        items.dedup();
        Bundle(items)
    }

    pub fn empty() -> Self {
        Bundle(Vec::new())
    }

    /// `{0, 1, ..., m-1}`.
    pub fn full(m: usize) -> Self {
        Bundle((0..m).collect())
    }

    pub fn from_mask(mask: u64) -> Self {
        Bundle((0..64).filter(|j| mask >> j & 1 == 1).collect())
    }

    /// Bit mask of the bundle; every item must be below 64.
    pub fn to_mask(&self) -> u64 {
        self.0.iter().fold(0, |acc, &j| acc | 1 << j)
    }

    pub fn items(&self) -> &[ItemId] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = ItemId> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.0.binary_search(&item).is_ok()
    }

    pub fn max_item(&self) -> Option<ItemId> {
        self.0.last().copied()
    }

    pub fn union(&self, other: &Bundle) -> Bundle {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Bundle::new(v)
    }

    pub fn difference(&self, other: &Bundle) -> Bundle {
        Bundle(self.0.iter().copied().filter(|&j| !other.contains(j)).collect())
    }

    pub fn intersection(&self, other: &Bundle) -> Bundle {
        Bundle(self.0.iter().copied().filter(|&j| other.contains(j)).collect())
    }

    pub fn is_disjoint(&self, other: &Bundle) -> bool {
        self.0.iter().all(|&j| !other.contains(j))
    }

    pub fn is_subset(&self, other: &Bundle) -> bool {
        self.0.iter().all(|&j| other.contains(j))
    }
}

impl From<Vec<ItemId>> for Bundle {
    fn from(v: Vec<ItemId>) -> Self {
        Bundle::new(v)
    }
}

impl From<Bundle> for Vec<ItemId> {
    fn from(b: Bundle) -> Self {
        b.0
    }
}

impl FromIterator<ItemId> for Bundle {
    fn from_iter<I: IntoIterator<Item = ItemId>>(iter: I) -> Self {
        Bundle::new(iter.into_iter().collect())
    }
}
