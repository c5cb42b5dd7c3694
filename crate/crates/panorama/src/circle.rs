//! Finite unions of half-open intervals on the circle `[0, B)` and the ⊕/⊖ scans.

use serde::{Deserialize, Serialize};

/// Sorted, disjoint, non-empty, non-touching half-open intervals inside `[0, B)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubsetOfCircle {
    intervals: Vec<(u64, u64)>,
}

impl SubsetOfCircle {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn full(budget: u64) -> Self {
        Self::from_intervals(vec![(0, budget)])
    }

    /// Normalizes arbitrary intervals: drops empty ones, sorts, merges overlaps and touches.
    pub fn from_intervals(mut raw: Vec<(u64, u64)>) -> Self {
        raw.retain(|&(s, e)| s < e);
        raw.sort_unstable();
        let mut out: Vec<(u64, u64)> = Vec::with_capacity(raw.len());
        for (s, e) in raw {
            match out.last_mut() {
                Some(last) if s <= last.1 => last.1 = last.1.max(e),
                _ => out.push((s, e)),
            }
        }
        Self { intervals: out }
    }

    /// The circular interval `[y, z)`: empty if `y == z` unless `full_if_equal`.
    pub fn arc(y: u64, z: u64, budget: u64, full_if_equal: bool) -> Self {
        if y < z {
            Self::from_intervals(vec![(y, z)])
        } else if y > z || full_if_equal {
            Self::from_intervals(vec![(y, budget), (0, z)])
        } else {
            Self::empty()
        }
    }

    pub fn intervals(&self) -> &[(u64, u64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> u64 {
        self.intervals.iter().map(|(s, e)| e - s).sum()
    }

    pub fn contains(&self, y: u64) -> bool {
        self.intervals.iter().any(|&(s, e)| s <= y && y < e)
    }

    pub fn within(&self, budget: u64) -> bool {
        self.intervals.last().is_none_or(|&(_, e)| e <= budget)
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut all = self.intervals.clone();
        all.extend_from_slice(&other.intervals);
        Self::from_intervals(all)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.intervals.len() && j < other.intervals.len() {
            let (a0, a1) = self.intervals[i];
            let (b0, b1) = other.intervals[j];
            let s = a0.max(b0);
            let e = a1.min(b1);
            if s < e {
                out.push((s, e));
            }
            if a1 < b1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self::from_intervals(out)
    }

    pub fn difference(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        for &(s, e) in &self.intervals {
            let mut cur = s;
            for &(b0, b1) in &other.intervals {
                if b1 <= cur || b0 >= e {
                    continue;
                }
                if b0 > cur {
                    out.push((cur, b0));
                }
                cur = cur.max(b1);
                if cur >= e {
                    break;
                }
            }
            if cur < e {
                out.push((cur, e));
            }
        }
        Self::from_intervals(out)
    }

    pub fn overlaps(&self, other: &Self) -> bool {
        !self.intersection(other).is_empty()
    }

    /// Complement inside `[0, budget)`.
    pub fn complement(&self, budget: u64) -> Self {
        Self::full(budget).difference(self)
    }
}

/// Runs of `[0, B)` alternating between free and excluded, in increasing order.
fn free_runs(excluded: &SubsetOfCircle, budget: u64) -> Vec<(u64, u64)> {
    excluded.complement(budget).intervals
}

/// `y ⊕_Y b`: the smallest `z` (scanning forward from `y`, circularly) such that
/// `[y, z) \ Y` has measure `b`. Returns `y` when `b` exceeds `B - μ(Y)` or `b = 0`.
pub fn oplus(y: u64, excluded: &SubsetOfCircle, b: u64, budget: u64) -> u64 {
    assert!(y < budget && b <= budget, "oplus precondition");
    let runs = free_runs(excluded, budget);
    let available: u64 = runs.iter().map(|(s, e)| e - s).sum();
    if b == 0 || b > available {
        return y;
    }
    let mut need = b;
    // Pieces in scan order: runs clipped to [y, B), then runs clipped to [0, y].
    let first = runs.iter().filter_map(|&(s, e)| clip(s, e, y, budget));
    let second = runs.iter().filter_map(|&(s, e)| clip(s, e, 0, y));
    for (s, e) in first.chain(second) {
        let len = e - s;
        if len >= need {
            return (s + need) % budget;
        }
        need -= len;
    }
    unreachable!("available measure covers b")
}

/// `y ⊖_Y b`: the largest `w` (scanning backward from `y`, circularly) such that
/// `[w, y) \ Y` has measure `b`. Returns `y` when `b` exceeds `B - μ(Y)` or `b = 0`.
pub fn ominus(y: u64, excluded: &SubsetOfCircle, b: u64, budget: u64) -> u64 {
    assert!(y < budget && b <= budget, "ominus precondition");
    let runs = free_runs(excluded, budget);
    let available: u64 = runs.iter().map(|(s, e)| e - s).sum();
    if b == 0 || b > available {
        return y;
    }
    let mut need = b;
    let first = runs.iter().rev().filter_map(|&(s, e)| clip(s, e, 0, y));
    let second = runs.iter().rev().filter_map(|&(s, e)| clip(s, e, y, budget));
    for (s, e) in first.chain(second) {
        let len = e - s;
        if len >= need {
            return e - need;
        }
        need -= len;
    }
    unreachable!("available measure covers b")
}

fn clip(s: u64, e: u64, lo: u64, hi: u64) -> Option<(u64, u64)> {
    let s = s.max(lo);
    let e = e.min(hi);
    (s < e).then_some((s, e))
}

/// `[y, y ⊕_Y b) \ Y` together with the scan end; the full free region in the boundary case.
pub fn scan(y: u64, excluded: &SubsetOfCircle, b: u64, budget: u64) -> (SubsetOfCircle, u64) {
    let available = budget - excluded.measure();
    if b == 0 {
        return (SubsetOfCircle::empty(), y);
    }
    if b >= available {
        return (excluded.complement(budget), y);
    }
    let z = oplus(y, excluded, b, budget);
    let arc = SubsetOfCircle::arc(y, z, budget, false);
    (arc.difference(excluded), z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(iv: &[(u64, u64)]) -> SubsetOfCircle {
        SubsetOfCircle::from_intervals(iv.to_vec())
    }

    #[test]
    fn oplus_examples() {
        assert_eq!(oplus(150, &SubsetOfCircle::empty(), 100, 200), 50);
        assert_eq!(oplus(150, &set(&[(0, 50)]), 100, 200), 100);
        for y in [150, 160, 199] {
            assert_eq!(oplus(y, &set(&[(0, 150)]), 100, 200), y);
        }
    }

    #[test]
    fn ominus_examples() {
        assert_eq!(ominus(50, &SubsetOfCircle::empty(), 100, 200), 150);
        let y = set(&[(100, 200)]);
        let w = ominus(50, &y, 80, 200);
        assert_eq!(w, 70);
        assert_eq!(oplus(w, &y, 80, 200), 50);
    }

    #[test]
    fn inverse_needs_free_left_neighbour() {
        let y = set(&[(40, 50)]);
        let w = ominus(50, &y, 10, 100);
        assert_eq!(w, 30);
        assert_eq!(oplus(w, &y, 10, 100), 40);
    }

    #[test]
    fn set_algebra() {
        let a = set(&[(0, 10), (20, 30)]);
        let b = set(&[(5, 25)]);
        assert_eq!(a.union(&b), set(&[(0, 30)]));
        assert_eq!(a.intersection(&b), set(&[(5, 10), (20, 25)]));
        assert_eq!(a.difference(&b), set(&[(0, 5), (25, 30)]));
        assert_eq!(b.complement(40), set(&[(0, 5), (25, 40)]));
        assert_eq!(set(&[(0, 3), (3, 5)]).intervals(), &[(0, 5)]);
        assert_eq!(SubsetOfCircle::arc(8, 2, 10, false), set(&[(0, 2), (8, 10)]));
        assert!(SubsetOfCircle::arc(3, 3, 10, false).is_empty());
        assert_eq!(SubsetOfCircle::arc(3, 3, 10, true), SubsetOfCircle::full(10));
    }

    /// Linear breakpoint oracle: walk unit cells.
    fn oplus_oracle(y: u64, ex: &SubsetOfCircle, b: u64, budget: u64) -> u64 {
        let avail = budget - ex.measure();
        if b == 0 || b > avail {
            return y;
        }
        let mut acc = 0;
        let mut p = y;
        loop {
            if !ex.contains(p) {
                acc += 1;
            }
            p = (p + 1) % budget;
            if acc == b {
                return p;
            }
        }
    }

    fn excluded_strategy(budget: u64) -> impl Strategy<Value = SubsetOfCircle> {
        prop::collection::vec((0..budget, 0..budget), 0..4).prop_map(move |v| {
            SubsetOfCircle::from_intervals(v.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect())
        })
    }

    proptest! {
        #[test]
        fn oplus_matches_unit_scan((budget, y, b, ex) in (1u64..40).prop_flat_map(|bud| {
            (Just(bud), 0..bud, 0..=bud, excluded_strategy(bud))
        })) {
            prop_assert_eq!(oplus(y, &ex, b, budget), oplus_oracle(y, &ex, b, budget));
        }

        #[test]
        fn inverse_property((budget, y, b, ex) in (2u64..40).prop_flat_map(|bud| {
            (Just(bud), 0..bud, 0..=bud, excluded_strategy(bud))
        })) {
            let left = (y + budget - 1) % budget;
            prop_assume!(!ex.contains(left) && !ex.contains(y));
            prop_assume!(b <= budget - ex.measure());
            prop_assert_eq!(oplus(ominus(y, &ex, b, budget), &ex, b, budget), y);
        }

        #[test]
        fn modular_without_exclusions((budget, y, b) in (1u64..1000).prop_flat_map(|bud| {
            (Just(bud), 0..bud, 0..=bud)
        })) {
            let e = SubsetOfCircle::empty();
            prop_assert_eq!(oplus(y, &e, b, budget), (y + b) % budget);
            prop_assert_eq!(ominus(y, &e, b, budget), (y + budget - b) % budget);
        }

        #[test]
        fn scan_measure_and_disjointness((budget, y, b, ex) in (1u64..40).prop_flat_map(|bud| {
            (Just(bud), 0..bud, 0..=bud, excluded_strategy(bud))
        })) {
            let (sub, _) = scan(y, &ex, b, budget);
            prop_assert_eq!(sub.measure(), b.min(budget - ex.measure()));
            prop_assert!(!sub.overlaps(&ex));
            prop_assert!(sub.within(budget));
        }
    }
}
