//! Reflexive, symmetric dependence relations over the statement alphabet.

use alloc::vec::Vec;

use crate::letters::{Letter, LetterSet};

/// `D ⊆ Σ × Σ`, stored row-wise as `D(a) = { b | (a, b) ∈ D }`.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DependenceRel {
    rows: Vec<LetterSet>,
}

impl DependenceRel {
    /// Only the diagonal: every pair of distinct letters commutes.
    pub fn identity(n: usize) -> Self {
        DependenceRel {
            rows: (0..n as Letter).map(LetterSet::singleton).collect(),
        }
    }

    /// Every pair is dependent.
    pub fn total(n: usize) -> Self {
        DependenceRel {
            rows: alloc::vec![LetterSet::full(n); n],
        }
    }

    /// Reflexive, symmetric closure of the given pairs.
    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (Letter, Letter)>) -> Self {
        let mut d = Self::identity(n);
        for (a, b) in pairs {
            d.add(a, b);
        }
        d
    }

    /// Reflexive, symmetric closure of a predicate over letter pairs.
    pub fn from_fn(n: usize, mut dep: impl FnMut(Letter, Letter) -> bool) -> Self {
        let mut d = Self::identity(n);
        for a in 0..n as Letter {
            for b in a + 1..n as Letter {
                if dep(a, b) {
                    d.add(a, b);
                }
            }
        }
        d
    }

    pub fn add(&mut self, a: Letter, b: Letter) {
        self.rows[a as usize].insert(b);
        self.rows[b as usize].insert(a);
    }

    pub fn alphabet_len(&self) -> usize {
        self.rows.len()
    }

    /// `D(a)`.
    pub fn row(&self, a: Letter) -> LetterSet {
        self.rows[a as usize]
    }

    pub fn dependent(&self, a: Letter, b: Letter) -> bool {
        self.rows[a as usize].contains(b)
    }

    pub fn independent(&self, a: Letter, b: Letter) -> bool {
        !self.dependent(a, b)
    }

    /// Checks reflexivity and symmetry.
    pub fn is_well_formed(&self) -> bool {
        let n = self.rows.len() as Letter;
        (0..n).all(|a| {
            self.dependent(a, a) && self.rows[a as usize].iter().all(|b| b < n && self.dependent(b, a))
        })
    }

    /// Independent pairs `(a, b)` with `a < b`.
    pub fn independent_pairs(&self) -> impl Iterator<Item = (Letter, Letter)> + '_ {
        let n = self.rows.len() as Letter;
        (0..n).flat_map(move |a| (a + 1..n).filter(move |&b| self.independent(a, b)).map(move |b| (a, b)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closure_is_reflexive_and_symmetric() {
        let d = DependenceRel::from_pairs(4, [(0, 2), (3, 1)]);
        assert!(d.is_well_formed());
        assert!(d.dependent(2, 0) && d.dependent(1, 3));
        assert!(d.independent(0, 1));
        assert_eq!(d.independent_pairs().count(), 4);
    }
}
