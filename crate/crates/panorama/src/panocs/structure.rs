//! Ex-ante structure of a randomized-round stream: adjacency, dependence arcs
//! under the large-bid rule, and the two-level partition into groups.

use std::collections::{BTreeMap, BTreeSet};

use crate::circle::SubsetOfCircle;
use crate::instance::is_large;

/// One side of a randomized round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub adv: usize,
    pub subset: SubsetOfCircle,
    pub bid: u64,
    pub budget: u64,
}

impl Candidate {
    pub fn large(&self) -> bool {
        is_large(self.bid, self.budget)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundPair {
    pub candidates: [Candidate; 2],
}

impl RoundPair {
    pub fn new(c1: Candidate, c2: Candidate) -> Self {
        assert_ne!(c1.adv, c2.adv, "randomized rounds pair distinct advertisers");
        Self { candidates: [c1, c2] }
    }

    pub fn advs(&self) -> [usize; 2] {
        [self.candidates[0].adv, self.candidates[1].adv]
    }
}

/// `(adv, j, k)`: group `k` of first-level subset `j` of advertiser `adv`.
pub type GroupId = (usize, usize, usize);

/// Group membership of one side of a round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupCtx {
    pub id: GroupId,
    /// The round opens the group, so the group decides now.
    pub created: bool,
    /// Groups of the same advertiser in `j-1` and `j-2` existing at creation.
    pub sources: Vec<GroupId>,
}

/// Everything a selection rule may know about a round before drawing randomness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundCtx {
    pub round: usize,
    pub advs: [usize; 2],
    /// Per side: every adjacent earlier round, most recent first.
    pub adjacent: [Vec<usize>; 2],
    /// Per side: in-arcs under the large-bid rule as `(from, ordinal among from's out-arcs)`, most recent first.
    pub in_arcs: [Vec<(usize, usize)>; 2],
    pub groups: [GroupCtx; 2],
}

#[derive(Debug, Clone, Default)]
struct AdvState {
    /// Last round covering each piece of the circle.
    last: BTreeMap<u64, (u64, usize)>,
    /// Current first-level index and the union of that subset's semi-assigned parts.
    j: usize,
    current: SubsetOfCircle,
    groups: BTreeSet<(usize, usize)>,
}

impl AdvState {
    fn last_coverers(&self, s: &SubsetOfCircle) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for &(a, b) in s.intervals() {
            for (&start, &(end, r)) in &self.last {
                if start < b && a < end {
                    out.insert(r);
                }
            }
        }
        out
    }

    fn cover(&mut self, s: &SubsetOfCircle, round: usize) {
        for &(a, b) in s.intervals() {
            let overlapping: Vec<(u64, (u64, usize))> = self
                .last
                .range(..b)
                .filter(|(_, &(end, _))| end > a)
                .map(|(&k, &v)| (k, v))
                .collect();
            for (start, (end, r)) in overlapping {
                self.last.remove(&start);
                if start < a {
                    self.last.insert(start, (a, r));
                }
                if end > b {
                    self.last.insert(b, (end, r));
                }
            }
            self.last.insert(a, (b, round));
        }
    }
}

#[derive(Debug, Clone)]
struct RoundInfo {
    advs: [usize; 2],
    large: [bool; 2],
    out: [usize; 2],
    in_degree: usize,
    groups: [GroupId; 2],
}

impl RoundInfo {
    fn side(&self, adv: usize) -> usize {
        if self.advs[0] == adv {
            0
        } else {
            1
        }
    }
}

/// Incrementally built ex-ante structure.
#[derive(Debug, Clone, Default)]
pub struct Structure {
    advs: BTreeMap<usize, AdvState>,
    rounds: Vec<RoundInfo>,
    /// Undirected group adjacency, from impression adjacency.
    group_edges: BTreeMap<GroupId, BTreeSet<GroupId>>,
}

impl Structure {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rounds(&self) -> usize {
        self.rounds.len()
    }

    /// Registers the next round and returns its context.
    pub fn observe(&mut self, pair: &RoundPair) -> RoundCtx {
        let round = self.rounds.len();
        let advs = pair.advs();
        let large = [pair.candidates[0].large(), pair.candidates[1].large()];
        let mut adjacent: [Vec<usize>; 2] = Default::default();
        let mut in_arcs: [Vec<(usize, usize)>; 2] = Default::default();
        for s in 0..2 {
            let st = self.advs.entry(advs[s]).or_default();
            let preds: Vec<usize> = st.last_coverers(&pair.candidates[s].subset).into_iter().rev().collect();
            for &p in &preds {
                let info = &mut self.rounds[p];
                let ps = info.side(advs[s]);
                if large[s] && info.large[ps] {
                    info.out[ps] += 1;
                    in_arcs[s].push((p, info.out[ps]));
                }
            }
            adjacent[s] = preds;
        }
        // First-level partition: a round overlapping the current subset opens the next one.
        for s in 0..2 {
            let st = self.advs.get_mut(&advs[s]).expect("registered above");
            let sub = &pair.candidates[s].subset;
            if st.j == 0 || st.current.overlaps(sub) {
                st.j += 1;
                st.current = sub.clone();
            } else {
                st.current = st.current.union(sub);
            }
        }
        let js = [self.advs[&advs[0]].j, self.advs[&advs[1]].j];
        let groups: [GroupCtx; 2] = std::array::from_fn(|s| {
            let (j, k) = (js[s], js[1 - s]);
            let st = &self.advs[&advs[s]];
            let created = !st.groups.contains(&(j, k));
            let sources = if created {
                st.groups
                    .iter()
                    .filter(|(jj, _)| *jj + 1 == j || *jj + 2 == j)
                    .map(|&(jj, kk)| (advs[s], jj, kk))
                    .collect()
            } else {
                Vec::new()
            };
            GroupCtx { id: (advs[s], j, k), created, sources }
        });
        for s in 0..2 {
            let st = self.advs.get_mut(&advs[s]).expect("registered above");
            st.groups.insert((js[s], js[1 - s]));
            st.cover(&pair.candidates[s].subset, round);
        }
        self.rounds.push(RoundInfo {
            advs,
            large,
            out: [0, 0],
            in_degree: in_arcs[0].len() + in_arcs[1].len(),
            groups: [groups[0].id, groups[1].id],
        });
        for s in 0..2 {
            let g = groups[s].id;
            self.group_edges.entry(g).or_default();
            for &p in &adjacent[s] {
                let info = &self.rounds[p];
                let h = info.groups[info.side(advs[s])];
                if h != g {
                    self.group_edges.entry(g).or_default().insert(h);
                    self.group_edges.entry(h).or_default().insert(g);
                }
            }
        }
        RoundCtx { round, advs, adjacent, in_arcs, groups }
    }

    /// `(in-degree, out-degree)` of a round in the large-bid dependence graph.
    pub fn degree(&self, round: usize) -> (usize, usize) {
        let info = &self.rounds[round];
        (info.in_degree, info.out[0] + info.out[1])
    }

    /// Number of nonempty first-level subsets of an advertiser.
    pub fn first_level_count(&self, adv: usize) -> usize {
        self.advs.get(&adv).map_or(0, |s| s.j)
    }

    pub fn group_neighbors(&self, g: &GroupId) -> Option<&BTreeSet<GroupId>> {
        self.group_edges.get(g)
    }

    pub fn groups(&self) -> impl Iterator<Item = &GroupId> {
        self.group_edges.keys()
    }
}
