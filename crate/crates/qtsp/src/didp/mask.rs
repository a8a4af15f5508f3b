//! Bit-set representations of the unvisited-customer set.
//!
//! Solver state is hashed and ordered billions of times in a long run, so
//! the set lives in plain machine words rather than a heap collection.
//! [`u64`] covers instances up to 64 nodes; [`Wide256`] covers the rest of
//! the supported range. Solvers are generic over [`CustomerMask`] and pick
//! the narrowest fit at runtime.

/// Fixed-capacity set of customer indices.
///
/// `Ord` may be any total order (the implementations here compare the
/// underlying bit strings numerically); solvers only rely on it being
/// fixed so that tie-breaking on state keys is deterministic.
pub trait CustomerMask:
    Copy + Eq + Ord + std::hash::Hash + std::fmt::Debug + Send + Sync + 'static
{
    /// Largest index storable plus one.
    const CAPACITY: usize;

    fn empty() -> Self;

    /// The set `{1, .., n-1}` of all customers of an `n`-node instance.
    fn full(n: usize) -> Self;

    fn contains(&self, k: usize) -> bool;

    #[must_use]
    fn insert(&self, k: usize) -> Self;

    #[must_use]
    fn remove(&self, k: usize) -> Self;

    fn count(&self) -> u32;

    fn is_empty(&self) -> bool {
        self.count() == 0
    }

    /// Smallest member, if any.
    fn lowest(&self) -> Option<usize>;

    /// Members in increasing order.
    fn iter(&self) -> MaskIter<Self> {
        MaskIter { rest: *self }
    }
}

/// Iterator over mask members, ascending.
pub struct MaskIter<M> {
    rest: M,
}

impl<M: CustomerMask> Iterator for MaskIter<M> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        let k = self.rest.lowest()?;
        self.rest = self.rest.remove(k);
        Some(k)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let c = self.rest.count() as usize;
        (c, Some(c))
    }
}

impl CustomerMask for u64 {
    const CAPACITY: usize = 64;

    fn empty() -> Self {
        0
    }

    fn full(n: usize) -> Self {
        debug_assert!((1..=Self::CAPACITY).contains(&n));
        (((1u128 << n) - 2) & u64::MAX as u128) as u64
    }

    fn contains(&self, k: usize) -> bool {
        debug_assert!(k < Self::CAPACITY);
        self & (1 << k) != 0
    }

    fn insert(&self, k: usize) -> Self {
        debug_assert!(k < Self::CAPACITY);
        self | (1 << k)
    }

    fn remove(&self, k: usize) -> Self {
        debug_assert!(k < Self::CAPACITY);
        self & !(1 << k)
    }

    fn count(&self) -> u32 {
        self.count_ones()
    }

    fn lowest(&self) -> Option<usize> {
        if *self == 0 {
            None
        } else {
            Some(self.trailing_zeros() as usize)
        }
    }
}

/// 256-bit set stored most-significant word first, so the derived
/// lexicographic `Ord` agrees with numeric order of the full bit string.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Wide256([u64; 4]);

impl Wide256 {
    /// Word index (in storage order) and bit position for element `k`.
    fn slot(k: usize) -> (usize, u32) {
        debug_assert!(k < 256);
        (3 - k / 64, (k % 64) as u32)
    }
}

impl CustomerMask for Wide256 {
    const CAPACITY: usize = 256;

    fn empty() -> Self {
        Wide256([0; 4])
    }

    fn full(n: usize) -> Self {
        debug_assert!((1..=Self::CAPACITY).contains(&n));
        let mut mask = Self::empty();
        for k in 1..n {
            mask = mask.insert(k);
        }
        mask
    }

    fn contains(&self, k: usize) -> bool {
        let (w, b) = Self::slot(k);
        self.0[w] & (1 << b) != 0
    }

    fn insert(&self, k: usize) -> Self {
        let (w, b) = Self::slot(k);
        let mut out = *self;
        out.0[w] |= 1 << b;
        out
    }

    fn remove(&self, k: usize) -> Self {
        let (w, b) = Self::slot(k);
        let mut out = *self;
        out.0[w] &= !(1 << b);
        out
    }

    fn count(&self) -> u32 {
        self.0.iter().map(|w| w.count_ones()).sum()
    }

    fn lowest(&self) -> Option<usize> {
        for (w, word) in self.0.iter().enumerate().rev() {
            if *word != 0 {
                return Some((3 - w) * 64 + word.trailing_zeros() as usize);
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exercise<M: CustomerMask>() {
        let full = M::full(6);
        assert_eq!(full.count(), 5);
        assert!(!full.contains(0));
        assert_eq!(full.iter().collect::<Vec<_>>(), vec![1, 2, 3, 4, 5]);

        let trimmed = full.remove(3);
        assert!(!trimmed.contains(3));
        assert_eq!(trimmed.count(), 4);
        assert_eq!(trimmed.insert(3), full);
        assert_eq!(trimmed.remove(3), trimmed);

        assert!(M::empty().is_empty());
        assert_eq!(M::empty().lowest(), None);
        assert_eq!(full.lowest(), Some(1));
    }

    #[test]
    fn narrow_mask_behaves() {
        exercise::<u64>();
        assert_eq!(u64::full(64).count(), 63);
        assert!(!u64::full(64).contains(0));
        assert!(u64::full(64).contains(63));
    }

    #[test]
    fn wide_mask_behaves() {
        exercise::<Wide256>();
        let full = Wide256::full(256);
        assert_eq!(full.count(), 255);
        assert!(full.contains(255));
        assert!(full.contains(64));
        assert!(full.contains(128));
        assert_eq!(full.iter().count(), 255);
    }

    #[test]
    fn wide_order_compares_bit_strings_numerically() {
        let full = Wide256::full(200);
        assert!(full.remove(1) > full.remove(199));
        assert!(full.remove(65) > full.remove(130));
        assert!(Wide256::empty() < full);
    }

    #[test]
    fn high_bits_cross_word_boundaries() {
        let mut m = Wide256::empty();
        for k in [0usize, 63, 64, 127, 128, 191, 192, 255] {
            m = m.insert(k);
            assert!(m.contains(k));
        }
        assert_eq!(
            m.iter().collect::<Vec<_>>(),
            vec![0, 63, 64, 127, 128, 191, 192, 255]
        );
    }
}
