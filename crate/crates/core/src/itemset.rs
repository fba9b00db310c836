//! Product universes and bitmask-encoded subsets of products.
//!
//! Products are numbered `1..=n`; the id `0` is the outside (no-purchase)
//! option and never belongs to an [`ItemSet`]. Product `i` occupies bit
//! `i - 1` of the mask.

use std::fmt;

use crate::error::{Result, SsmError};

/// Product id. `0` is the outside option.
pub type ProductId = usize;

/// The outside option.
pub const OUTSIDE: ProductId = 0;

/// Largest supported universe (bitmask width cap).
pub const MAX_PRODUCTS: usize = 63;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ProductUniverse {
    n: usize,
}

impl ProductUniverse {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_PRODUCTS {
            return Err(SsmError::Domain(format!(
                "universe size must be in 1..={MAX_PRODUCTS}, got {n}"
            )));
        }
        Ok(Self { n })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// The set `N` of all products.
    #[inline]
    pub fn full(&self) -> ItemSet {
        ItemSet((1u64 << self.n) - 1)
    }

    /// Number of subsets of `N`.
    #[inline]
    pub fn subset_count(&self) -> u64 {
        1u64 << self.n
    }

    /// Every subset of `N` in ascending mask order.
    pub fn subsets(&self) -> impl Iterator<Item = ItemSet> {
        (0..self.subset_count()).map(ItemSet)
    }

    /// Product ids `1..=n`.
    pub fn products(&self) -> std::ops::RangeInclusive<ProductId> {
        1..=self.n
    }

    pub fn contains_set(&self, set: ItemSet) -> bool {
        set.0 & !self.full().0 == 0
    }

    pub fn check_set(&self, set: ItemSet) -> Result<()> {
        if self.contains_set(set) {
            Ok(())
        } else {
            Err(SsmError::Domain(format!("{set} is not a subset of a universe of {} products", self.n)))
        }
    }

    pub fn check_product(&self, id: ProductId) -> Result<()> {
        if (1..=self.n).contains(&id) {
            Ok(())
        } else {
            Err(SsmError::Domain(format!("product {id} outside universe 1..={}", self.n)))
        }
    }
}

/// A subset of products stored as a 64-bit mask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ItemSet(u64);

impl ItemSet {
    pub const EMPTY: ItemSet = ItemSet(0);

    #[inline]
    pub const fn from_mask(mask: u64) -> Self {
        ItemSet(mask)
    }

    /// Builds a set from product ids; ids must be in `1..=63`.
    pub fn from_ids<I: IntoIterator<Item = ProductId>>(ids: I) -> Result<Self> {
        let mut mask = 0u64;
        for id in ids {
            if id == 0 || id > MAX_PRODUCTS {
                return Err(SsmError::Domain(format!("product id {id} cannot be a set member")));
            }
            mask |= 1u64 << (id - 1);
        }
        Ok(ItemSet(mask))
    }

    #[inline]
    pub fn singleton(id: ProductId) -> Self {
        debug_assert!((1..=MAX_PRODUCTS).contains(&id));
        ItemSet(1u64 << (id - 1))
    }

    #[inline]
    pub const fn mask(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn contains(self, id: ProductId) -> bool {
        id >= 1 && id <= MAX_PRODUCTS && self.0 >> (id - 1) & 1 == 1
    }

    #[inline]
    pub fn with(self, id: ProductId) -> Self {
        ItemSet(self.0 | 1u64 << (id - 1))
    }

    #[inline]
    pub fn without(self, id: ProductId) -> Self {
        ItemSet(self.0 & !(1u64 << (id - 1)))
    }

    #[inline]
    pub fn intersection(self, other: ItemSet) -> Self {
        ItemSet(self.0 & other.0)
    }

    #[inline]
    pub fn union(self, other: ItemSet) -> Self {
        ItemSet(self.0 | other.0)
    }

    #[inline]
    pub fn difference(self, other: ItemSet) -> Self {
        ItemSet(self.0 & !other.0)
    }

    #[inline]
    pub fn is_subset_of(self, other: ItemSet) -> bool {
        self.0 & !other.0 == 0
    }

    #[inline]
    pub fn intersects(self, other: ItemSet) -> bool {
        self.0 & other.0 != 0
    }

    /// Lowest product id in the set.
    #[inline]
    pub fn first(self) -> Option<ProductId> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize + 1)
    }

    /// Member ids in ascending order.
    pub fn iter(self) -> Members {
        Members(self.0)
    }

    pub fn to_vec(self) -> Vec<ProductId> {
        self.iter().collect()
    }

    /// All subsets of `self` in ascending mask order, including `∅` and `self`.
    pub fn subsets(self) -> Subsets {
        Subsets { of: self.0, next: Some(0) }
    }
}

impl fmt::Debug for ItemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for ItemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, id) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{id}")?;
        }
        f.write_str("}")
    }
}

impl FromIterator<ProductId> for ItemSet {
    /// Panics on id 0 or ids above 63; use [`ItemSet::from_ids`] for untrusted input.
    fn from_iter<I: IntoIterator<Item = ProductId>>(iter: I) -> Self {
        ItemSet::from_ids(iter).expect("valid product ids")
    }
}

impl serde::Serialize for ItemSet {
    /// Sets serialize as ascending id lists, never as masks.
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> serde::Deserialize<'de> for ItemSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let ids = Vec::<ProductId>::deserialize(deserializer)?;
        ItemSet::from_ids(ids).map_err(serde::de::Error::custom)
    }
}

pub struct Members(u64);

impl Iterator for Members {
    type Item = ProductId;

    #[inline]
    fn next(&mut self) -> Option<ProductId> {
        if self.0 == 0 {
            return None;
        }
        let bit = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(bit + 1)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let k = self.0.count_ones() as usize;
        (k, Some(k))
    }
}

impl ExactSizeIterator for Members {}

/// Submask enumeration in ascending order.
pub struct Subsets {
    of: u64,
    next: Option<u64>,
}

impl Iterator for Subsets {
    type Item = ItemSet;

    #[inline]
    fn next(&mut self) -> Option<ItemSet> {
        let cur = self.next?;
        self.next = if cur == self.of {
            None
        } else {
            // Smallest submask strictly above `cur`.
            Some((cur | !self.of).wrapping_add(1) & self.of)
        };
        Some(ItemSet(cur))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn universe_bounds() {
        assert!(ProductUniverse::new(0).is_err());
        assert!(ProductUniverse::new(64).is_err());
        let u = ProductUniverse::new(63).unwrap();
        assert_eq!(u.full().len(), 63);
        assert!(u.check_product(0).is_err());
        assert!(u.check_product(63).is_ok());
    }

    #[test]
    fn ids_and_masks() {
        let s = ItemSet::from_ids([3, 1, 5]).unwrap();
        assert_eq!(s.mask(), 0b10101);
        assert_eq!(s.to_vec(), vec![1, 3, 5]);
        assert_eq!(s.to_string(), "{1,3,5}");
        assert_eq!(s.first(), Some(1));
        assert!(s.contains(3) && !s.contains(2) && !s.contains(0));
        assert_eq!(s.without(1).with(2).to_vec(), vec![2, 3, 5]);
        assert!(ItemSet::from_ids([0]).is_err());
        // Duplicate ids in any order map to the same key.
        assert_eq!(ItemSet::from_ids([2, 1, 2]).unwrap(), ItemSet::from_ids([1, 2]).unwrap());
    }

    #[test]
    fn universe_membership() {
        let u = ProductUniverse::new(3).unwrap();
        assert!(u.contains_set(ItemSet::from_mask(0b111)));
        assert!(!u.contains_set(ItemSet::from_mask(0b1000)));
    }

    proptest! {
        #[test]
        fn subsets_enumerates_power_set(mask in 0u64..(1 << 10)) {
            let s = ItemSet::from_mask(mask);
            let subs: Vec<_> = s.subsets().collect();
            prop_assert_eq!(subs.len(), 1usize << s.len());
            prop_assert!(subs.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(subs.iter().all(|x| x.is_subset_of(s)));
        }
    }
}
