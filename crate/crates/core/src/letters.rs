//! Statement letters and small sets of them.

use core::fmt;

/// A statement of the program alphabet, identified by its dense id.
pub type Letter = u32;

/// Largest supported alphabet.
pub const MAX_LETTERS: usize = 128;

/// A subset of the alphabet, stored as a 128-bit mask.
///
/// Used for sleep sets and dependence rows. Iteration is in increasing
/// letter order, which is the canonical statement order everywhere.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LetterSet(u128);

impl LetterSet {
    pub const EMPTY: LetterSet = LetterSet(0);

    /// The full alphabet `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_LETTERS, "alphabet of {n} letters exceeds {MAX_LETTERS}");
        if n == MAX_LETTERS {
            LetterSet(u128::MAX)
        } else {
            LetterSet((1u128 << n) - 1)
        }
    }

    pub fn singleton(a: Letter) -> Self {
        LetterSet(1u128 << a)
    }

    pub fn from_bits(bits: u128) -> Self {
        LetterSet(bits)
    }

    pub fn bits(self) -> u128 {
        self.0
    }

    pub fn contains(self, a: Letter) -> bool {
        self.0 >> a & 1 == 1
    }

    pub fn insert(&mut self, a: Letter) {
        self.0 |= 1u128 << a;
    }

    pub fn remove(&mut self, a: Letter) {
        self.0 &= !(1u128 << a);
    }

    pub fn with(mut self, a: Letter) -> Self {
        self.insert(a);
        self
    }

    pub fn without(mut self, a: Letter) -> Self {
        self.remove(a);
        self
    }

    pub fn union(self, other: Self) -> Self {
        LetterSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        LetterSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        LetterSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> LetterIter {
        LetterIter(self.0)
    }

    /// All subsets of `self`, in increasing order of their masks.
    pub fn subsets(self) -> impl Iterator<Item = LetterSet> {
        // Standard submask enumeration, run from the bottom up.
        let mask = self.0;
        let mut next = Some(0u128);
        core::iter::from_fn(move || {
            let cur = next?;
            next = if cur == mask {
                None
            } else {
                Some((cur.wrapping_sub(mask)) & mask)
            };
            Some(LetterSet(cur))
        })
    }
}

impl FromIterator<Letter> for LetterSet {
    fn from_iter<I: IntoIterator<Item = Letter>>(iter: I) -> Self {
        let mut s = LetterSet::EMPTY;
        for a in iter {
            s.insert(a);
        }
        s
    }
}

impl IntoIterator for LetterSet {
    type Item = Letter;
    type IntoIter = LetterIter;
    fn into_iter(self) -> LetterIter {
        self.iter()
    }
}

pub struct LetterIter(u128);

impl Iterator for LetterIter {
    type Item = Letter;
    fn next(&mut self) -> Option<Letter> {
        if self.0 == 0 {
            return None;
        }
        let a = self.0.trailing_zeros();
        self.0 &= self.0 - 1;
        Some(a)
    }
}

impl fmt::Debug for LetterSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
