//! Exact outcome distributions of a PanOCS on a scripted stream, Monte Carlo
//! estimates, and the scripted-stream file format.

use std::collections::{BTreeMap, HashMap, HashSet};

use num::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use super::{decide, Key, Memory, PanOcs, Randomness, Record, RoundCtx, RoundPair, Seeded, Slot, Structure, Variant};
use crate::circle::SubsetOfCircle;
use crate::rat::{q, Q};

/// Largest number of branch evaluations an exact enumeration may perform.
pub const ENUMERATION_BUDGET: u64 = 1 << 28;

/// A scripted stream of randomized rounds with the points to query.
#[derive(Debug, Clone, PartialEq)]
pub struct Script {
    pub pairs: Vec<RoundPair>,
    /// `(advertiser, point)`.
    pub queries: Vec<(usize, u64)>,
    pub names: Vec<String>,
}

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("invalid script JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown advertiser `{0}`")]
    UnknownAdvertiser(String),
    #[error("round {0}: {1}")]
    Round(usize, String),
}

#[derive(Deserialize)]
struct ScriptFile {
    budgets: BTreeMap<String, u64>,
    rounds: Vec<ScriptRound>,
    #[serde(default)]
    queries: Option<Vec<(String, u64)>>,
}

#[derive(Deserialize)]
struct ScriptRound {
    advertisers: [String; 2],
    subsets: [Vec<(u64, u64)>; 2],
    #[serde(default)]
    bids: Option<[u64; 2]>,
}

impl Script {
    /// Parses `{"budgets": {adv: B}, "rounds": [{"advertisers": [a, b], "subsets": [[[s, e], ...], ...],
    /// "bids": [x, y]}], "queries": [[adv, point]]}`. Bids default to the subset measures and
    /// queries to the left end of every elementary piece of every covered subset.
    pub fn from_json(text: &str) -> Result<Self, ScriptError> {
        let f: ScriptFile = serde_json::from_str(text)?;
        let names: Vec<String> = f.budgets.keys().cloned().collect();
        let index = |n: &str| names.iter().position(|x| x == n).ok_or_else(|| ScriptError::UnknownAdvertiser(n.into()));
        let mut pairs = Vec::new();
        for (t, r) in f.rounds.iter().enumerate() {
            let mut cands = Vec::new();
            for s in 0..2 {
                let adv = index(&r.advertisers[s])?;
                let budget = f.budgets[&r.advertisers[s]];
                let subset = SubsetOfCircle::from_intervals(r.subsets[s].clone());
                if !subset.within(budget) {
                    return Err(ScriptError::Round(t, "subset outside [0, B)".into()));
                }
                let bid = r.bids.map_or(subset.measure(), |b| b[s]);
                if bid > budget {
                    return Err(ScriptError::Round(t, "bid exceeds budget".into()));
                }
                cands.push(super::Candidate { adv, subset, bid, budget });
            }
            if cands[0].adv == cands[1].adv {
                return Err(ScriptError::Round(t, "candidates share an advertiser".into()));
            }
            let c2 = cands.pop().expect("two candidates");
            let c1 = cands.pop().expect("two candidates");
            pairs.push(RoundPair::new(c1, c2));
        }
        let queries = match f.queries {
            Some(qs) => qs.iter().map(|(n, y)| Ok((index(n)?, *y))).collect::<Result<_, ScriptError>>()?,
            None => default_queries(&pairs),
        };
        Ok(Self { pairs, queries, names })
    }

    /// `k` rounds on one point: advertiser `0` takes the whole circle every round,
    /// each time with a fresh partner.
    pub fn chain(k: usize) -> Self {
        let c = |adv| super::Candidate { adv, subset: SubsetOfCircle::full(2), bid: 2, budget: 2 };
        let pairs = (0..k).map(|t| RoundPair::new(c(0), c(t + 1))).collect();
        let names = (0..=k).map(|a| format!("a{a}")).collect();
        Self { pairs, queries: vec![(0, 0)], names }
    }

    /// The JSON form read by [`Script::from_json`], with bids and queries explicit.
    /// Queries on advertisers that never appear in a round are dropped.
    pub fn to_json(&self) -> String {
        let mut budgets = serde_json::Map::new();
        for p in &self.pairs {
            for c in &p.candidates {
                budgets.insert(self.names[c.adv].clone(), c.budget.into());
            }
        }
        let rounds: Vec<serde_json::Value> = self
            .pairs
            .iter()
            .map(|p| {
                let [a, b] = &p.candidates;
                serde_json::json!({
                    "advertisers": [self.names[a.adv], self.names[b.adv]],
                    "subsets": [a.subset.intervals(), b.subset.intervals()],
                    "bids": [a.bid, b.bid],
                })
            })
            .collect();
        let queries: Vec<serde_json::Value> = self
            .queries
            .iter()
            .filter(|&&(a, _)| budgets.contains_key(&self.names[a]))
            .map(|&(a, y)| serde_json::json!([self.names[a], y]))
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({"budgets": budgets, "rounds": rounds, "queries": queries}))
            .expect("script serializes")
    }

    /// Number of rounds whose subset for `adv` contains `y`.
    pub fn coverage(&self, adv: usize, y: u64) -> usize {
        self.pairs
            .iter()
            .filter(|p| p.candidates.iter().any(|c| c.adv == adv && c.subset.contains(y)))
            .count()
    }

    /// Side of round `t` covering `(adv, y)`, if any.
    fn covering_side(&self, t: usize, adv: usize, y: u64) -> Option<usize> {
        self.pairs[t].candidates.iter().position(|c| c.adv == adv && c.subset.contains(y))
    }
}

fn default_queries(pairs: &[RoundPair]) -> Vec<(usize, u64)> {
    let mut points: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
    for c in pairs.iter().flat_map(|p| p.candidates.iter()) {
        let e = points.entry(c.adv).or_default();
        for &(s, t) in c.subset.intervals() {
            e.extend([s, t]);
        }
    }
    let mut out = Vec::new();
    for (adv, mut pts) in points {
        pts.sort_unstable();
        pts.dedup();
        for w in pts.windows(2) {
            let y = w[0];
            if pairs.iter().any(|p| p.candidates.iter().any(|c| c.adv == adv && c.subset.contains(y))) {
                out.push((adv, y));
            }
        }
    }
    out
}

/// Odometer over the random choices of one round: each run follows a prefix of
/// fixed choices and extends it with first choices.
struct Replay<'h> {
    horizon: &'h Horizon,
    choices: Vec<usize>,
    arity: Vec<usize>,
    pos: usize,
    weight: Q,
}

impl<'h> Replay<'h> {
    fn new(horizon: &'h Horizon) -> Self {
        Self { horizon, choices: Vec::new(), arity: Vec::new(), pos: 0, weight: Q::one() }
    }

    fn start(&mut self) {
        self.pos = 0;
        self.weight = Q::one();
    }

    fn next(&mut self, n: usize) -> usize {
        assert!(n >= 1);
        if self.pos == self.choices.len() {
            self.choices.push(0);
            self.arity.push(n);
        }
        debug_assert_eq!(self.arity[self.pos], n, "choice tree is consistent");
        let c = self.choices[self.pos];
        self.pos += 1;
        c
    }

    /// Moves to the next leaf; `false` when all leaves are done.
    fn advance(&mut self) -> bool {
        self.choices.truncate(self.pos);
        self.arity.truncate(self.pos);
        while let Some(last) = self.choices.last_mut() {
            if *last + 1 < *self.arity.last().expect("same length") {
                *last += 1;
                return true;
            }
            self.choices.pop();
            self.arity.pop();
        }
        false
    }
}

impl Randomness for Replay<'_> {
    fn uniform(&mut self, n: usize) -> usize {
        let c = self.next(n);
        self.weight *= q(1, n as i64);
        c
    }

    fn bernoulli(&mut self, p: &Q) -> bool {
        let c = self.next(2);
        if c == 0 {
            self.weight *= p;
        } else {
            self.weight *= Q::one() - p;
        }
        c == 0
    }

    /// Targets that never occur share one branch.
    fn slot(&mut self, key: Key, slots: &[Slot]) -> Slot {
        let (live, dead): (Vec<Slot>, Vec<Slot>) = slots.iter().partition(|s| self.horizon.live(key, **s));
        let n = live.len() + usize::from(!dead.is_empty());
        let c = self.next(n);
        if c < live.len() {
            self.weight *= q(1, slots.len() as i64);
            live[c]
        } else {
            self.weight *= q(dead.len() as i64, slots.len() as i64);
            dead[0]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactReport {
    /// Per query: probability the point is assigned at least once.
    pub assigned: Vec<Q>,
    /// Per query: number of rounds covering the point.
    pub coverage: Vec<usize>,
    /// Probability that no arc is realized.
    pub no_arc: Q,
    /// Per round: probability of selecting the first candidate.
    pub marginals: Vec<Q>,
    /// Per round, then per query: probability the point is assigned by the end of the round.
    pub assigned_by_round: Vec<Vec<Q>>,
    pub expansions: u64,
    pub peak_states: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExactError {
    #[error("enumeration budget of {budget} branches exceeded")]
    Budget { budget: u64 },
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct State {
    memory: Memory,
    assigned: Vec<bool>,
    arc: bool,
}

/// What the remaining rounds of a script can read.
struct Horizon {
    last_reader: HashMap<Key, usize>,
    out_arcs: HashSet<(usize, usize, usize)>,
    groups: HashSet<(usize, usize, usize)>,
}

impl Horizon {
    fn new(ctxs: &[RoundCtx]) -> Self {
        let mut last_reader = HashMap::new();
        let mut out_arcs = HashSet::new();
        let mut groups = HashSet::new();
        for ctx in ctxs {
            for side in 0..2 {
                for &(from, ordinal) in &ctx.in_arcs[side] {
                    last_reader.insert(Key::Round(from), ctx.round);
                    out_arcs.insert((from, ctx.advs[side], ordinal));
                }
                let g = &ctx.groups[side];
                groups.insert(g.id);
                last_reader.insert(Key::Group(g.id), ctx.round);
                for src in &g.sources {
                    last_reader.insert(Key::Group(*src), ctx.round);
                }
            }
        }
        Self { last_reader, out_arcs, groups }
    }

    /// Whether a sender stored under `key` can reach `slot`.
    fn live(&self, key: Key, slot: Slot) -> bool {
        match (key, slot) {
            (Key::Round(r), Slot::Out { adv, ordinal }) => self.out_arcs.contains(&(r, adv, ordinal)),
            (Key::Group((adv, j, _)), Slot::Group { dj, k }) => self.groups.contains(&(adv, j + dj, k)),
            _ => false,
        }
    }

    /// Memory after round `now`: earlier entries no later round reads are dropped and
    /// the round's records are added in canonical form.
    fn advance(&self, memory: &Memory, records: Vec<(Key, Record)>, now: usize) -> Memory {
        let mut next: Memory = memory
            .iter()
            .filter(|(k, _)| self.last_reader.get(k).is_some_and(|&r| r > now))
            .map(|(k, v)| (*k, *v))
            .collect();
        for (k, rec) in records {
            if let Some(rec) = self.canonical(k, rec, now) {
                next.insert(k, rec);
            }
        }
        next
    }

    /// Keeps only what a later round can read, with unreachable targets cleared.
    fn canonical(&self, key: Key, rec: Record, now: usize) -> Option<Record> {
        if self.last_reader.get(&key).is_none_or(|&t| t <= now) {
            return None;
        }
        match (key, rec.slot) {
            (Key::Round(_), Some(slot)) => self.live(key, slot).then_some(rec),
            (Key::Round(_), None) => None,
            (Key::Group(_), slot) => {
                let slot = slot.filter(|s| self.live(key, *s));
                Some(Record { slot, choice: rec.choice })
            }
        }
    }
}

/// Exact distribution of the selections over every joint realization of the randomness.
pub fn enumerate(variant: &Variant, script: &Script) -> Result<ExactReport, ExactError> {
    enumerate_with_budget(variant, script, ENUMERATION_BUDGET)
}

pub fn enumerate_with_budget(variant: &Variant, script: &Script, budget: u64) -> Result<ExactReport, ExactError> {
    let mut structure = Structure::new();
    let ctxs: Vec<RoundCtx> = script.pairs.iter().map(|p| structure.observe(p)).collect();
    let horizon = Horizon::new(&ctxs);
    let nq = script.queries.len();
    let covers: Vec<Vec<(usize, usize)>> = (0..ctxs.len())
        .map(|t| {
            script
                .queries
                .iter()
                .enumerate()
                .filter_map(|(qi, &(adv, y))| script.covering_side(t, adv, y).map(|s| (qi, s)))
                .collect()
        })
        .collect();
    let mut states: HashMap<State, Q> = HashMap::new();
    states.insert(State { memory: Memory::new(), assigned: vec![false; nq], arc: false }, Q::one());
    let mut marginals = Vec::with_capacity(ctxs.len());
    let mut assigned_by_round = Vec::with_capacity(ctxs.len());
    let mut expansions = 0u64;
    let mut peak_states = 1;
    let mut replay = Replay::new(&horizon);
    for (t, ctx) in ctxs.iter().enumerate() {
        let mut next: HashMap<State, Q> = HashMap::new();
        let mut first = Q::zero();
        for (state, w) in &states {
            loop {
                replay.start();
                let d = decide(variant, ctx, &state.memory, &mut replay);
                expansions += 1;
                if expansions > budget {
                    return Err(ExactError::Budget { budget });
                }
                if !replay.weight.is_zero() {
                    let weight = w * &replay.weight;
                    if d.selected == 0 {
                        first += &weight;
                    }
                    let memory = horizon.advance(&state.memory, d.records, t);
                    let mut assigned = state.assigned.clone();
                    for &(qi, side) in &covers[t] {
                        if side == d.selected {
                            assigned[qi] = true;
                        }
                    }
                    let arc = state.arc || !d.arcs.is_empty();
                    *next.entry(State { memory, assigned, arc }).or_insert_with(Q::zero) += weight;
                }
                if !replay.advance() {
                    break;
                }
            }
        }
        marginals.push(first);
        let mut now = vec![Q::zero(); nq];
        for (state, w) in &next {
            for (qi, _) in state.assigned.iter().enumerate().filter(|(_, &a)| a) {
                now[qi] += w;
            }
        }
        assigned_by_round.push(now);
        peak_states = peak_states.max(next.len());
        states = next;
    }
    let assigned = assigned_by_round.last().cloned().unwrap_or_else(|| vec![Q::zero(); nq]);
    let no_arc = states.iter().filter(|(s, _)| !s.arc).map(|(_, w)| w.clone()).sum();
    let coverage = script.queries.iter().map(|&(a, y)| script.coverage(a, y)).collect();
    Ok(ExactReport { assigned, coverage, no_arc, marginals, assigned_by_round, expansions, peak_states })
}

/// Per round and query, the probability the point is assigned by the end of the
/// round. Each query gets its own enumeration in which realizations that already
/// assigned the point are absorbed, stopping at the point's last covering round.
/// The budget applies to each enumeration.
pub fn assignment_profile(variant: &Variant, script: &Script, budget: u64) -> Result<Vec<Vec<Q>>, ExactError> {
    let mut structure = Structure::new();
    let ctxs: Vec<RoundCtx> = script.pairs.iter().map(|p| structure.observe(p)).collect();
    let horizon = Horizon::new(&ctxs);
    let per_query: Vec<Vec<Q>> = script
        .queries
        .par_iter()
        .map(|&(adv, y)| {
            let sides: Vec<Option<usize>> = (0..ctxs.len()).map(|t| script.covering_side(t, adv, y)).collect();
            single_profile(variant, &ctxs, &horizon, &sides, budget)
        })
        .collect::<Result<_, ExactError>>()?;
    Ok((0..script.pairs.len()).map(|t| per_query.iter().map(|v| v[t].clone()).collect()).collect())
}

fn single_profile(
    variant: &Variant,
    ctxs: &[RoundCtx],
    horizon: &Horizon,
    sides: &[Option<usize>],
    budget: u64,
) -> Result<Vec<Q>, ExactError> {
    let Some(last) = sides.iter().rposition(Option::is_some) else {
        return Ok(vec![Q::zero(); ctxs.len()]);
    };
    let mut states: HashMap<Memory, Q> = HashMap::from([(Memory::new(), Q::one())]);
    let mut absorbed = Q::zero();
    let mut out = Vec::with_capacity(ctxs.len());
    let mut expansions = 0u64;
    let mut replay = Replay::new(horizon);
    for (t, ctx) in ctxs.iter().enumerate().take(last + 1) {
        let mut next: HashMap<Memory, Q> = HashMap::new();
        for (memory, w) in &states {
            loop {
                replay.start();
                let d = decide(variant, ctx, memory, &mut replay);
                expansions += 1;
                if expansions > budget {
                    return Err(ExactError::Budget { budget });
                }
                if !replay.weight.is_zero() {
                    let weight = w * &replay.weight;
                    if sides[t] == Some(d.selected) {
                        absorbed += weight;
                    } else {
                        *next.entry(horizon.advance(memory, d.records, t)).or_insert_with(Q::zero) += weight;
                    }
                }
                if !replay.advance() {
                    break;
                }
            }
        }
        states = next;
        out.push(absorbed.clone());
    }
    out.resize(ctxs.len(), absorbed);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub trials: u64,
    /// Per query: number of trials in which the point was assigned.
    pub assigned: Vec<u64>,
    /// Per round: number of trials selecting the first candidate.
    pub first: Vec<u64>,
}

/// Monte Carlo run of `trials` independent online executions. Trial `t` uses
/// stream `t` of a ChaCha generator seeded with `seed`.
pub fn monte_carlo(variant: &Variant, script: &Script, trials: u64, seed: u64) -> McReport {
    let nq = script.queries.len();
    let nr = script.pairs.len();
    let (assigned, first) = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial);
            let mut rng = Seeded(rng);
            let mut ocs = PanOcs::new(variant.clone());
            let mut a = vec![0u64; nq];
            let mut f = vec![0u64; nr];
            let mut hit = vec![false; nq];
            for (t, pair) in script.pairs.iter().enumerate() {
                let s = ocs.select(pair, &mut rng);
                if s == 0 {
                    f[t] = 1;
                }
                for (qi, &(adv, y)) in script.queries.iter().enumerate() {
                    if pair.candidates[s].adv == adv && pair.candidates[s].subset.contains(y) {
                        hit[qi] = true;
                    }
                }
            }
            for (x, h) in a.iter_mut().zip(hit) {
                *x = u64::from(h);
            }
            (a, f)
        })
        .reduce(
            || (vec![0; nq], vec![0; nr]),
            |(mut a, mut f), (b, g)| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                f.iter_mut().zip(g).for_each(|(x, y)| *x += y);
                (a, f)
            },
        );
    McReport { trials, assigned, first }
}

/// One-sided Hoeffding margin for a mean of `n` values in `[0, 1]` at confidence `1 - delta`.
pub fn hoeffding_margin(n: u64, delta: f64) -> f64 {
    ((1.0 / delta).ln() / (2.0 * n as f64)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panocs::bound;
    use crate::rat::{pow2_neg, qi};

    #[test]
    fn independent_chain_is_exact() {
        for k in 1..=5 {
            let r = enumerate(&Variant::Independent, &Script::chain(k)).unwrap();
            assert_eq!(r.assigned[0], qi(1) - pow2_neg(k as i64));
            assert!(r.marginals.iter().all(|m| *m == q(1, 2)));
        }
    }

    #[test]
    fn warmup_two_chain() {
        let r = enumerate(&Variant::Warmup, &Script::chain(2)).unwrap();
        assert_eq!(qi(1) - &r.assigned[0], q(63, 256));
        assert_eq!(r.no_arc, q(63, 64));
    }

    #[test]
    fn warmup_recursion_unrolled() {
        let f: Vec<Q> = (2..=5).map(|k| enumerate(&Variant::Warmup, &Script::chain(k)).unwrap().no_arc).collect();
        assert_eq!(f[0], q(63, 64));
        assert_eq!(f[1], q(62, 64));
        for m in 2..f.len() {
            assert_eq!(f[m], &f[m - 1] - &f[m - 2] / qi(64));
        }
    }

    #[test]
    fn large_two_chain_arc_probability() {
        let r = enumerate(&Variant::large(), &Script::chain(2)).unwrap();
        assert_eq!(qi(1) - &r.no_arc, q(5, 81));
        assert!(r.assigned[0] >= bound(&Variant::large().gamma(), 2));
    }

    #[test]
    fn profile_matches_joint_enumeration() {
        let text = r#"{"budgets": {"a": 4, "b": 4, "c": 4},
            "rounds": [{"advertisers": ["a", "b"], "subsets": [[[0, 4]], [[0, 2]]]},
                       {"advertisers": ["a", "c"], "subsets": [[[0, 3]], [[1, 3]]]},
                       {"advertisers": ["c", "b"], "subsets": [[[0, 4]], [[0, 4]]]}]}"#;
        let s = Script::from_json(text).unwrap();
        for v in [Variant::Warmup, Variant::large(), Variant::general(2)] {
            let joint = enumerate(&v, &s).unwrap();
            let profile = assignment_profile(&v, &s, ENUMERATION_BUDGET).unwrap();
            assert_eq!(profile, joint.assigned_by_round);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let e = enumerate_with_budget(&Variant::large(), &Script::chain(4), 10).unwrap_err();
        assert_eq!(e, ExactError::Budget { budget: 10 });
    }

    #[test]
    fn script_parsing() {
        let text = r#"{"budgets": {"a": 4, "b": 4, "c": 4},
            "rounds": [{"advertisers": ["a", "b"], "subsets": [[[0, 4]], [[0, 2]]]},
                       {"advertisers": ["a", "c"], "subsets": [[[0, 4]], [[1, 3]]], "bids": [4, 2]}]}"#;
        let s = Script::from_json(text).unwrap();
        assert_eq!(s.pairs.len(), 2);
        assert_eq!(s.pairs[0].candidates[1].bid, 2);
        assert!(s.queries.contains(&(0, 0)) && s.queries.contains(&(2, 1)));
        assert_eq!(s.coverage(0, 3), 2);
        let back = Script::from_json(&s.to_json()).unwrap();
        assert_eq!(back.pairs, s.pairs);
        assert_eq!(back.queries, s.queries);
        assert!(Script::from_json(r#"{"budgets": {}, "rounds": [{"advertisers": ["x", "y"], "subsets": [[], []]}]}"#).is_err());
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let s = Script::chain(3);
        let a = monte_carlo(&Variant::large(), &s, 2000, 9);
        assert_eq!(a, monte_carlo(&Variant::large(), &s, 2000, 9));
        let p = a.assigned[0] as f64 / 2000.0;
        assert!((p - 0.88).abs() < 0.05, "{p}");
    }
}
