//! Finite nonempty subsets of ℤ and the reindexing operations used by the
//! character model.
//!
//! `hat` opens a gap at coordinate 1 by pushing every positive element up by
//! one; `tilde` closes it again on sets that avoid 1:
//!
//! ```text
//! hat(A)   = {s ∈ A : s ≤ 0} ∪ {s + 1 : s ∈ A, s > 0}
//! tilde(B) = {s ∈ B : s ≤ 0} ∪ {s − 1 : s ∈ B, s > 1}      (1 ∉ B)
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Finite nonempty subset of ℤ, stored strictly increasing.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct FinSet(Vec<i64>);

impl FinSet {
    /// Builds a set from arbitrary elements; duplicates are merged.
    pub fn new(elements: impl IntoIterator<Item = i64>) -> Result<Self> {
        let mut v: Vec<i64> = elements.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        if v.is_empty() {
            return Err(Error::Precondition("a FinSet must be nonempty".into()));
        }
        Ok(Self(v))
    }

    pub fn singleton(s: i64) -> Self {
        Self(vec![s])
    }

    pub fn elements(&self) -> &[i64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min(&self) -> i64 {
        self.0[0]
    }

    pub fn max(&self) -> i64 {
        *self.0.last().unwrap()
    }

    pub fn contains(&self, s: i64) -> bool {
        self.0.binary_search(&s).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> + '_ {
        self.0.iter().copied()
    }

    pub fn is_within(&self, window: Window) -> bool {
        window.contains(self.min()) && window.contains(self.max())
    }

    /// `Â`: positive elements move up by one, so `1 ∉ Â`.
    pub fn hat(&self) -> FinSet {
        FinSet(
            self.0
                .iter()
                .map(|&s| if s > 0 { s + 1 } else { s })
                .collect(),
        )
    }

    /// `B̃`, the inverse of [`hat`](Self::hat) on sets avoiding 1.
    pub fn tilde(&self) -> Result<FinSet> {
        if self.contains(1) {
            return Err(Error::Precondition(format!(
                "tilde requires 1 ∉ B, got {self}"
            )));
        }
        Ok(FinSet(
            self.0
                .iter()
                .map(|&s| if s > 1 { s - 1 } else { s })
                .collect(),
        ))
    }

    /// `A + n`.
    pub fn shift(&self, n: i64) -> FinSet {
        FinSet(self.0.iter().map(|&s| s + n).collect())
    }

    /// Representative in the fundamental domain `Fin₀ = {A : min A = 0}` and
    /// the offset with `shift(rep, offset) == self`.
    pub fn canonical_rep(&self) -> (FinSet, i64) {
        let offset = self.min();
        (self.shift(-offset), offset)
    }

    pub fn is_canonical(&self) -> bool {
        self.min() == 0
    }

    /// `A ∼ B` iff `A = B + n` for some `n`.
    pub fn is_equivalent(&self, other: &FinSet) -> bool {
        self.canonical_rep().0 == other.canonical_rep().0
    }

    /// Bit mask of the set relative to `window` (bit `s − window.lo`).
    pub fn to_mask(&self, window: Window) -> Option<u64> {
        if !self.is_within(window) || window.len() > 64 {
            return None;
        }
        Some(self.iter().fold(0u64, |m, s| m | (1u64 << (s - window.lo))))
    }

    /// Inverse of [`to_mask`](Self::to_mask); `None` for the empty mask.
    pub fn from_mask(mask: u64, window: Window) -> Option<FinSet> {
        if mask == 0 {
            return None;
        }
        let v: Vec<i64> = (0..window.len() as i64)
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| window.lo + b)
            .collect();
        Some(FinSet(v))
    }
}

impl TryFrom<Vec<i64>> for FinSet {
    type Error = Error;

    fn try_from(v: Vec<i64>) -> Result<Self> {
        FinSet::new(v)
    }
}

impl From<FinSet> for Vec<i64> {
    fn from(s: FinSet) -> Self {
        s.0
    }
}

impl fmt::Display for FinSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "}}")
    }
}

/// Closed integer interval `[lo, hi]`, possibly empty when `lo > hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    pub lo: i64,
    pub hi: i64,
}

impl Window {
    pub fn new(lo: i64, hi: i64) -> Self {
        Self { lo, hi }
    }

    /// `[-half_width, half_width]`.
    pub fn symmetric(half_width: i64) -> Self {
        Self::new(-half_width, half_width)
    }

    pub fn len(&self) -> usize {
        if self.hi < self.lo {
            0
        } else {
            (self.hi - self.lo + 1) as usize
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, s: i64) -> bool {
        self.lo <= s && s <= self.hi
    }

    pub fn contains_window(&self, other: Window) -> bool {
        other.is_empty() || (self.contains(other.lo) && self.contains(other.hi))
    }

    /// `[lo − by, hi + by]`.
    pub fn dilate(&self, by: i64) -> Window {
        Window::new(self.lo - by, self.hi + by)
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> {
        self.lo..=self.hi
    }

    /// Every subset of the window, the empty one first as `None`.
    pub fn subsets(&self) -> impl Iterator<Item = Option<FinSet>> + '_ {
        assert!(self.len() < 64, "window too wide to enumerate");
        (0u64..(1u64 << self.len())).map(move |m| FinSet::from_mask(m, *self))
    }

    /// Every nonempty subset of the window.
    pub fn nonempty_subsets(&self) -> impl Iterator<Item = FinSet> + '_ {
        self.subsets().flatten()
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}
