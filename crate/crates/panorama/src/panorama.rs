//! Per-advertiser panorama: the circular budget interval as breakpoint segments
//! with point-level semi-assignment counters and the scan pointer `y*`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circle::{self, SubsetOfCircle};

/// Point-level status. `Semi` counts semi-assignments; `k_large` counts large-bid
/// semi-assignments before the first small-bid one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Semi { k: u32, k_large: u32, small_seen: bool },
    Det { k: u32 },
}

impl Status {
    pub const FRESH: Status = Status::Semi { k: 0, k_large: 0, small_seen: false };

    pub fn is_det(&self) -> bool {
        matches!(self, Status::Det { .. })
    }

    /// Semi-assignment count (retained after a deterministic assignment).
    pub fn k(&self) -> u32 {
        match *self {
            Status::Semi { k, .. } | Status::Det { k } => k,
        }
    }

    fn after_semi(self, large: bool) -> Status {
        match self {
            Status::Semi { k, k_large, small_seen } => Status::Semi {
                k: k + 1,
                k_large: if large && !small_seen { k_large + 1 } else { k_large },
                small_seen: small_seen || !large,
            },
            Status::Det { .. } => panic!("semi-assignment on a deterministic point"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Segment {
    pub start: u64,
    pub end: u64,
    pub status: Status,
}

impl Segment {
    pub fn len(&self) -> u64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommitKind {
    Semi { large: bool },
    Deterministic,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PanoramaError {
    #[error("subset overlaps a deterministically assigned segment")]
    OverlapsDeterministic,
    #[error("subset leaves [0, B)")]
    OutOfRange,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdvertiserPanorama {
    budget: u64,
    segments: Vec<Segment>,
    y_star: u64,
    det_measure: u64,
}

impl AdvertiserPanorama {
    pub fn new(budget: u64) -> Self {
        assert!(budget > 0);
        Self {
            budget,
            segments: vec![Segment { start: 0, end: budget, status: Status::FRESH }],
            y_star: 0,
            det_measure: 0,
        }
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn y_star(&self) -> u64 {
        self.y_star
    }

    pub fn det_measure(&self) -> u64 {
        self.det_measure
    }

    pub fn det_set(&self) -> SubsetOfCircle {
        SubsetOfCircle::from_intervals(
            self.segments
                .iter()
                .filter(|s| s.status.is_det())
                .map(|s| (s.start, s.end))
                .collect(),
        )
    }

    pub fn status_at(&self, y: u64) -> Status {
        self.segments
            .iter()
            .find(|s| s.start <= y && y < s.end)
            .expect("point inside [0, B)")
            .status
    }

    /// `[y*, y* ⊕_{Y_D} b) \ Y_D`; the whole non-deterministic region when `b` exceeds it.
    pub fn next_subset(&self, b: u64) -> SubsetOfCircle {
        assert!(b <= self.budget, "bid exceeds budget");
        circle::scan(self.y_star, &self.det_set(), b, self.budget).0
    }

    /// Segments of the current panorama restricted to `subset`, in increasing order.
    pub fn pieces(&self, subset: &SubsetOfCircle) -> Vec<Segment> {
        let mut out = Vec::new();
        for &(s, e) in subset.intervals() {
            for seg in &self.segments {
                let a = seg.start.max(s);
                let z = seg.end.min(e);
                if a < z {
                    out.push(Segment { start: a, end: z, status: seg.status });
                }
            }
        }
        out
    }

    /// Applies `subset` (which must come from `next_subset(b)`) and advances `y*`.
    pub fn commit(
        &mut self,
        subset: &SubsetOfCircle,
        b: u64,
        kind: CommitKind,
    ) -> Result<(), PanoramaError> {
        if !subset.within(self.budget) {
            return Err(PanoramaError::OutOfRange);
        }
        let det = self.det_set();
        if subset.overlaps(&det) {
            return Err(PanoramaError::OverlapsDeterministic);
        }
        if subset.is_empty() {
            return Ok(());
        }
        let (_, end) = circle::scan(self.y_star, &det, b, self.budget);
        for &(s, e) in subset.intervals() {
            self.split_at(s);
            self.split_at(e);
        }
        for seg in &mut self.segments {
            if subset.contains(seg.start) {
                seg.status = match kind {
                    CommitKind::Semi { large } => seg.status.after_semi(large),
                    CommitKind::Deterministic => Status::Det { k: seg.status.k() },
                };
            }
        }
        self.merge();
        self.det_measure = self.segments.iter().filter(|s| s.status.is_det()).map(|s| s.len()).sum();
        self.y_star = self.normalize(end);
        Ok(())
    }

    /// Moves `y` forward past deterministic points (mod B).
    fn normalize(&self, y: u64) -> u64 {
        if self.det_measure == self.budget {
            return y;
        }
        let mut y = y % self.budget;
        loop {
            let st = self.status_at(y);
            if !st.is_det() {
                return y;
            }
            let seg = self.segments.iter().find(|s| s.start <= y && y < s.end).unwrap();
            y = seg.end % self.budget;
        }
    }

    fn split_at(&mut self, y: u64) {
        if y == 0 || y >= self.budget {
            return;
        }
        if let Some(pos) = self.segments.iter().position(|s| s.start < y && y < s.end) {
            let seg = self.segments[pos];
            self.segments[pos].end = y;
            self.segments.insert(pos + 1, Segment { start: y, end: seg.end, status: seg.status });
        }
    }

    fn merge(&mut self) {
        let mut out: Vec<Segment> = Vec::with_capacity(self.segments.len());
        for seg in self.segments.drain(..) {
            match out.last_mut() {
                Some(last) if last.status == seg.status => last.end = seg.end,
                _ => out.push(seg),
            }
        }
        self.segments = out;
    }

    /// Minimum semi-assignment count over non-deterministic points.
    pub fn k_min(&self) -> Option<u32> {
        self.segments.iter().filter(|s| !s.status.is_det()).map(|s| s.status.k()).min()
    }

    /// The K-property of the panoramic interval-level assignment.
    pub fn k_property(&self) -> bool {
        let Some(kmin) = self.k_min() else {
            return true;
        };
        self.segments.iter().filter(|s| !s.status.is_det()).all(|s| {
            let k = s.status.k();
            (k == kmin && s.start >= self.y_star) || (k == kmin + 1 && s.end <= self.y_star)
        })
    }

    /// Structural invariants: exact partition, merged neighbours, cached measure.
    pub fn well_formed(&self) -> bool {
        let partition = self.segments.first().is_some_and(|s| s.start == 0)
            && self.segments.last().is_some_and(|s| s.end == self.budget)
            && self.segments.windows(2).all(|w| w[0].end == w[1].start && w[0].status != w[1].status)
            && self.segments.iter().all(|s| s.start < s.end);
        let det: u64 = self.segments.iter().filter(|s| s.status.is_det()).map(|s| s.len()).sum();
        partition && det == self.det_measure && self.y_star < self.budget
    }

    /// One line per segment `start..end k=<n|DET>`, then `y*=<v>`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for s in &self.segments {
            match s.status {
                Status::Det { .. } => writeln!(out, "{}..{} k=DET", s.start, s.end).unwrap(),
                st => writeln!(out, "{}..{} k={}", s.start, s.end, st.k()).unwrap(),
            }
        }
        write!(out, "y*={}", self.y_star).unwrap();
        out
    }
}

/// `μ(∪ subsets)`: the panorama-view payment of one advertiser.
pub fn panorama_payment<'a>(subsets: impl IntoIterator<Item = &'a SubsetOfCircle>) -> u64 {
    subsets
        .into_iter()
        .fold(SubsetOfCircle::empty(), |acc, s| acc.union(s))
        .measure()
}
