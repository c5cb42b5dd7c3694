//! The online allocators: greedy, MSVV, the basic primal-dual rule and the
//! hybrid rule, with an exact dual ledger and replayable run traces.

pub mod dual;
pub mod rules;

use std::fmt;
use std::str::FromStr;

use num::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circle::SubsetOfCircle;
use crate::instance::{is_large, Instance};
use crate::lp::hybrid::default_hybrid_table;
use crate::panocs::exact::Script;
use crate::panocs::{Candidate, PanOcs, RoundPair, Seeded, Variant};
use crate::panorama::{panorama_payment, AdvertiserPanorama, CommitKind};
use crate::rat::{self, qu, Q};
use crate::tables::{gamma_general_frozen, gamma_large_frozen, BasicTable, HybridTable, ParamTable};

pub use rules::{Commit, Increment, PointRule};

/// Default `kmax` of the general-bid basic configuration.
pub const BASIC_GENERAL_KMAX: usize = 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Greedy,
    Msvv,
    Basic,
    Hybrid,
    Independent,
}

impl Algo {
    pub const ALL: [Algo; 5] = [Algo::Greedy, Algo::Msvv, Algo::Basic, Algo::Hybrid, Algo::Independent];
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algo::Greedy => "greedy",
            Algo::Msvv => "msvv",
            Algo::Basic => "basic",
            Algo::Hybrid => "hybrid",
            Algo::Independent => "independent",
        })
    }
}

impl FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algo::ALL.into_iter().find(|a| a.to_string() == s).ok_or_else(|| format!("unknown algorithm `{s}`"))
    }
}

/// A fully configured allocator.
#[derive(Debug, Clone, PartialEq)]
pub enum Allocator {
    Greedy,
    Msvv,
    PrimalDual { algo: Algo, rule: PointRule, variant: Variant },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AllocError {
    #[error("{0} needs a {1} parameter table")]
    WrongTable(Algo, &'static str),
    #[error("trace record {0}: {1}")]
    Replay(usize, String),
    #[error("ledger drift at step {step}: {what}")]
    Drift { step: usize, what: String },
    #[error("invalid trace: {0}")]
    Trace(String),
}

impl Allocator {
    /// The allocator with its default table: the closed form at `γ = 0.05144` and the
    /// large-bid PanOCS on all-large instances, otherwise the table truncated at
    /// `kmax = 18` with the general-bid PanOCS; the hybrid uses the certified LP table.
    pub fn default_for(algo: Algo, inst: &Instance) -> Self {
        match algo {
            Algo::Greedy => Allocator::Greedy,
            Algo::Msvv => Allocator::Msvv,
            Algo::Independent => Allocator::PrimalDual {
                algo,
                rule: PointRule::Basic(BasicTable::closed_form(Q::zero())),
                variant: Variant::Independent,
            },
            Algo::Basic if inst.all_large() => Allocator::PrimalDual {
                algo,
                rule: PointRule::Basic(BasicTable::closed_form(gamma_large_frozen())),
                variant: Variant::large(),
            },
            Algo::Basic => {
                let k = BASIC_GENERAL_KMAX;
                Allocator::PrimalDual {
                    algo,
                    rule: PointRule::Basic(BasicTable::truncated(gamma_general_frozen(k as u32), k)),
                    variant: Variant::general(k),
                }
            }
            Algo::Hybrid => Allocator::hybrid(default_hybrid_table().clone()),
        }
    }

    pub fn hybrid(table: HybridTable) -> Self {
        Allocator::PrimalDual { algo: Algo::Hybrid, rule: PointRule::Hybrid(table), variant: Variant::large() }
    }

    /// The allocator driven by an explicit table. Basic tables pick the PanOCS whose
    /// guarantee covers the table's `γ`.
    pub fn with_table(algo: Algo, table: ParamTable, inst: &Instance) -> Result<Self, AllocError> {
        match (algo, table) {
            (Algo::Greedy | Algo::Msvv, _) => Ok(Allocator::default_for(algo, inst)),
            (Algo::Hybrid, ParamTable::Hybrid(t)) => Ok(Allocator::hybrid(t)),
            (Algo::Hybrid, _) => Err(AllocError::WrongTable(algo, "hybrid")),
            (Algo::Basic | Algo::Independent, ParamTable::Basic(t)) => {
                let variant = if algo == Algo::Independent || t.gamma().is_zero() {
                    Variant::Independent
                } else if inst.all_large() && t.gamma() <= &Variant::large().gamma() {
                    Variant::large()
                } else {
                    Variant::general(t.kmax().unwrap_or(BASIC_GENERAL_KMAX))
                };
                Ok(Allocator::PrimalDual { algo, rule: PointRule::Basic(t), variant })
            }
            (_, _) => Err(AllocError::WrongTable(algo, "basic")),
        }
    }

    pub fn algo(&self) -> Algo {
        match self {
            Allocator::Greedy => Algo::Greedy,
            Allocator::Msvv => Algo::Msvv,
            Allocator::PrimalDual { algo, .. } => *algo,
        }
    }

    /// The ratio the allocator guarantees.
    pub fn guarantee(&self) -> Q {
        match self {
            Allocator::Greedy => rat::half(),
            Allocator::Msvv => rat::q(5, 9),
            Allocator::PrimalDual { rule, .. } => rule.ratio().clone(),
        }
    }

    pub fn table_json(&self) -> Option<serde_json::Value> {
        match self {
            Allocator::PrimalDual { rule: PointRule::Basic(t), .. } => Some(t.to_json()),
            Allocator::PrimalDual { rule: PointRule::Hybrid(t), .. } => Some(t.to_json()),
            _ => None,
        }
    }

    pub fn variant(&self) -> Option<&Variant> {
        match self {
            Allocator::PrimalDual { variant, .. } => Some(variant),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceCandidate {
    /// Advertiser index in instance order.
    pub advertiser: usize,
    pub subset: SubsetOfCircle,
    pub bid: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RoundKind {
    Deterministic {
        advertiser: usize,
        subset: SubsetOfCircle,
    },
    Randomized {
        candidates: [TraceCandidate; 2],
        /// `1` or `2`.
        selected: u8,
    },
    /// All offers vanish: greedy assignment outside the ledger.
    Fallback {
        advertiser: usize,
    },
    Unassigned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub id: String,
    #[serde(flatten)]
    pub kind: RoundKind,
    #[serde(serialize_with = "rat::ser", deserialize_with = "rat::de")]
    pub beta: Q,
}

/// Objective values after a step. `pbar` and `dual` are absent for greedy;
/// `xbar` is the integrated guarantee of the point-level rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    #[serde(rename = "P")]
    pub p: u64,
    pub panorama: u64,
    #[serde(rename = "Pbar", default, skip_serializing_if = "Option::is_none", with = "opt_q")]
    pub pbar: Option<Q>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none", with = "opt_q")]
    pub dual: Option<Q>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_q")]
    pub xbar: Option<Q>,
}

mod opt_q {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::rat::{self, Q};

    pub fn serialize<S: Serializer>(x: &Option<Q>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => rat::ser(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Q>, D::Error> {
        let v = Option::<String>::deserialize(d)?;
        v.map(|s| rat::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("invalid rational `{s}`"))))
            .transpose()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceAdvertiser {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_q")]
    pub alpha: Option<Q>,
    pub panorama: String,
}

/// Everything needed to replay and re-certify one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub algo: Algo,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    pub seed: u64,
    pub instance: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<serde_json::Value>,
    pub records: Vec<TraceRecord>,
    pub advertisers: Vec<TraceAdvertiser>,
    pub steps: Vec<Totals>,
    pub totals: Totals,
}

impl RunTrace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, AllocError> {
        serde_json::from_str(text).map_err(|e| AllocError::Trace(e.to_string()))
    }

    /// `β_i` in arrival order.
    pub fn betas(&self) -> Vec<Q> {
        self.records.iter().map(|r| r.beta.clone()).collect()
    }

    /// Final `α_a` in instance order (zero where the rule keeps none).
    pub fn alphas(&self) -> Vec<Q> {
        self.advertisers.iter().map(|a| a.alpha.clone().unwrap_or_else(Q::zero)).collect()
    }

    /// The randomized rounds as a PanOCS script, querying every elementary piece.
    pub fn script(&self, inst: &Instance) -> Script {
        let mut pairs = Vec::new();
        for r in &self.records {
            if let RoundKind::Randomized { candidates, .. } = &r.kind {
                let c = |t: &TraceCandidate| Candidate {
                    adv: t.advertiser,
                    subset: t.subset.clone(),
                    bid: t.bid,
                    budget: inst.budget(t.advertiser),
                };
                pairs.push(RoundPair::new(c(&candidates[0]), c(&candidates[1])));
            }
        }
        let names = inst.advertisers().iter().map(|a| a.id.clone()).collect();
        let queries = self.pieces(inst).into_iter().map(|(a, s, _)| (a, s)).collect();
        Script { pairs, queries, names }
    }

    /// Elementary pieces `(advertiser, start, end)` of every committed subset.
    pub fn pieces(&self, inst: &Instance) -> Vec<(usize, u64, u64)> {
        let mut cuts: Vec<Vec<u64>> = (0..inst.num_advertisers()).map(|a| vec![0, inst.budget(a)]).collect();
        let mut push = |a: usize, s: &SubsetOfCircle| {
            for &(x, y) in s.intervals() {
                cuts[a].extend([x, y]);
            }
        };
        for r in &self.records {
            match &r.kind {
                RoundKind::Deterministic { advertiser, subset } => push(*advertiser, subset),
                RoundKind::Randomized { candidates, .. } => {
                    for c in candidates {
                        push(c.advertiser, &c.subset);
                    }
                }
                _ => {}
            }
        }
        let mut out = Vec::new();
        for (a, mut c) in cuts.into_iter().enumerate() {
            c.sort_unstable();
            c.dedup();
            out.extend(c.windows(2).map(|w| (a, w[0], w[1])));
        }
        out
    }
}

/// How a step is decided: fresh decisions with a PanOCS or recorded ones.
enum Source<'r, R> {
    Online { ocs: PanOcs, rng: &'r mut R },
    Replay { records: &'r [TraceRecord] },
}

/// Mutable state of one run.
struct Engine<'a> {
    inst: &'a Instance,
    alloc: &'a Allocator,
    pans: Vec<AdvertiserPanorama>,
    alpha: Vec<Q>,
    pbar: Q,
    dual: Q,
    bids_paid: Vec<u64>,
    realized: Vec<SubsetOfCircle>,
    records: Vec<TraceRecord>,
    steps: Vec<Totals>,
}

/// Best `(index, value)` under `value` desc, then index asc; only positive values.
fn ranked(values: &[(usize, Q)]) -> Vec<(usize, Q)> {
    let mut v: Vec<(usize, Q)> = values.iter().filter(|(_, x)| x > &Q::zero()).cloned().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    v
}

impl<'a> Engine<'a> {
    fn new(inst: &'a Instance, alloc: &'a Allocator) -> Self {
        let n = inst.num_advertisers();
        Self {
            inst,
            alloc,
            pans: inst.budgets().into_iter().map(AdvertiserPanorama::new).collect(),
            alpha: vec![Q::zero(); n],
            pbar: Q::zero(),
            dual: Q::zero(),
            bids_paid: vec![0; n],
            realized: vec![SubsetOfCircle::empty(); n],
            records: Vec::new(),
            steps: Vec::new(),
        }
    }

    fn spent(&self, a: usize) -> u64 {
        self.bids_paid[a].min(self.inst.budget(a))
    }

    fn greedy_choice(&self, i: usize) -> Option<usize> {
        let gains: Vec<(usize, Q)> = (0..self.inst.num_advertisers())
            .map(|a| (a, qu(self.inst.bid(a, i).min(self.inst.budget(a) - self.spent(a)))))
            .collect();
        ranked(&gains).first().map(|(a, _)| *a)
    }

    /// The decision of the rule for impression `i`, with the selection still open.
    fn decide(&self, i: usize) -> RoundKind {
        let bids = self.inst.bids(i);
        match self.alloc {
            Allocator::Greedy => match self.greedy_choice(i) {
                Some(a) => RoundKind::Deterministic { advertiser: a, subset: self.pans[a].next_subset(bids[a]) },
                None => RoundKind::Unassigned,
            },
            Allocator::Msvv => {
                let offers: Vec<(usize, Q)> = (0..bids.len())
                    .map(|a| {
                        let gain = bids[a].min(self.inst.budget(a) - self.spent(a));
                        (a, rules::msvv_offer(self.spent(a), gain, self.inst.budget(a)))
                    })
                    .collect();
                match ranked(&offers).first() {
                    Some(&(a, _)) => RoundKind::Deterministic { advertiser: a, subset: self.pans[a].next_subset(bids[a]) },
                    None => RoundKind::Unassigned,
                }
            }
            Allocator::PrimalDual { rule, .. } => {
                let mut rand_offers = Vec::new();
                let mut det_offers = Vec::new();
                for (a, &b) in bids.iter().enumerate() {
                    if b == 0 {
                        continue;
                    }
                    let y = self.pans[a].next_subset(b);
                    let large = is_large(b, self.inst.budget(a));
                    rand_offers.push((a, rule.increment(&self.pans[a], &y, Commit::Semi { large }).beta));
                    det_offers.push((a, rule.increment(&self.pans[a], &y, Commit::Deterministic).beta));
                }
                let r = ranked(&rand_offers);
                let d = ranked(&det_offers);
                let best_d = d.first().map_or_else(Q::zero, |x| x.1.clone());
                let cand = |a: usize| TraceCandidate { advertiser: a, subset: self.pans[a].next_subset(bids[a]), bid: bids[a] };
                if r.len() >= 2 && &r[0].1 + &r[1].1 >= best_d {
                    RoundKind::Randomized { candidates: [cand(r[0].0), cand(r[1].0)], selected: 0 }
                } else if let Some(&(a, _)) = d.first() {
                    RoundKind::Deterministic { advertiser: a, subset: self.pans[a].next_subset(bids[a]) }
                } else {
                    match self.greedy_choice(i) {
                        Some(a) => RoundKind::Fallback { advertiser: a },
                        None => RoundKind::Unassigned,
                    }
                }
            }
        }
    }

    /// Commits a decided round and updates the ledger; returns `β_i`.
    fn apply(&mut self, i: usize, kind: &RoundKind) -> Result<Q, AllocError> {
        let bids = self.inst.bids(i);
        let err = |m: &str| AllocError::Replay(i, m.to_string());
        let beta = match kind {
            RoundKind::Unassigned => Q::zero(),
            RoundKind::Fallback { advertiser: a } => {
                self.bids_paid[*a] += bids[*a];
                Q::zero()
            }
            RoundKind::Deterministic { advertiser: a, subset } => {
                let a = *a;
                if *subset != self.pans[a].next_subset(bids[a]) {
                    return Err(err("subset is not the panoramic preview"));
                }
                let beta = match self.alloc {
                    Allocator::Greedy => Q::zero(),
                    Allocator::Msvv => {
                        let before = self.spent(a);
                        let gain = bids[a].min(self.inst.budget(a) - before);
                        let b = qu(self.inst.budget(a));
                        let new_alpha = &b * rules::msvv_alpha(&(qu(before + gain) / &b));
                        let beta = rules::msvv_offer(before, gain, self.inst.budget(a));
                        self.dual += &new_alpha - &self.alpha[a] + &beta;
                        self.pbar += qu(gain);
                        self.alpha[a] = new_alpha;
                        beta
                    }
                    Allocator::PrimalDual { rule, .. } => {
                        let inc = rule.increment(&self.pans[a], subset, Commit::Deterministic);
                        self.alpha[a] += &inc.alpha;
                        self.pbar += &inc.primal;
                        self.dual += &inc.alpha + &inc.beta;
                        inc.beta
                    }
                };
                self.pans[a].commit(subset, bids[a], CommitKind::Deterministic).map_err(|e| err(&e.to_string()))?;
                self.bids_paid[a] += bids[a];
                self.realized[a] = self.realized[a].union(subset);
                beta
            }
            RoundKind::Randomized { candidates, selected } => {
                let Allocator::PrimalDual { rule, .. } = self.alloc else {
                    return Err(err("randomized round under a deterministic allocator"));
                };
                if candidates[0].advertiser == candidates[1].advertiser || !(1..=2).contains(selected) {
                    return Err(err("malformed randomized round"));
                }
                let mut beta = Q::zero();
                for c in candidates {
                    let a = c.advertiser;
                    if c.bid != bids[a] || c.subset != self.pans[a].next_subset(bids[a]) {
                        return Err(err("candidate is not the panoramic preview"));
                    }
                    let large = is_large(c.bid, self.inst.budget(a));
                    let inc = rule.increment(&self.pans[a], &c.subset, Commit::Semi { large });
                    self.alpha[a] += &inc.alpha;
                    self.pbar += &inc.primal;
                    self.dual += &inc.alpha + &inc.beta;
                    beta += inc.beta;
                    self.pans[a].commit(&c.subset, c.bid, CommitKind::Semi { large }).map_err(|e| err(&e.to_string()))?;
                }
                let s = &candidates[usize::from(*selected) - 1];
                self.bids_paid[s.advertiser] += s.bid;
                self.realized[s.advertiser] = self.realized[s.advertiser].union(&s.subset);
                beta
            }
        };
        Ok(beta)
    }

    fn totals(&self) -> Totals {
        let n = self.inst.num_advertisers();
        let p = (0..n).map(|a| self.spent(a)).sum();
        let panorama = self.realized.iter().map(|s| panorama_payment([s])).sum();
        let (pbar, dual, xbar) = match self.alloc {
            Allocator::Greedy => (None, None, None),
            Allocator::Msvv => (Some(self.pbar.clone()), Some(self.dual.clone()), None),
            Allocator::PrimalDual { rule, .. } => {
                let xbar = self.pans.iter().map(|p| rule.xbar(p)).sum();
                (Some(self.pbar.clone()), Some(self.dual.clone()), Some(xbar))
            }
        };
        Totals { p, panorama, pbar, dual, xbar }
    }

    /// `P ≥ panorama ≥ ... `, `P̄ = D`, and `x̄ ≥ P̄` (equal for the basic rule).
    fn check(&self, step: usize, t: &Totals) -> Result<(), AllocError> {
        let drift = |what: String| Err(AllocError::Drift { step, what });
        if t.p < t.panorama {
            return drift(format!("P = {} below panorama payment {}", t.p, t.panorama));
        }
        if let (Some(pbar), Some(d)) = (&t.pbar, &t.dual) {
            if pbar != d {
                return drift(format!("Pbar = {} differs from D = {}", rat::format(pbar), rat::format(d)));
            }
        }
        if let (Some(x), Some(pbar)) = (&t.xbar, &t.pbar) {
            let basic = matches!(self.alloc, Allocator::PrimalDual { rule: PointRule::Basic(_), .. });
            if x < pbar || (basic && x != pbar) {
                return drift(format!("integrated guarantee {} vs Pbar {}", rat::format(x), rat::format(pbar)));
            }
        }
        if matches!(self.alloc, Allocator::Msvv) && t.pbar.as_ref() != Some(&qu(t.p)) {
            return drift("MSVV primal differs from P".into());
        }
        Ok(())
    }

    fn run<R: rand::RngCore>(mut self, mut source: Source<'_, R>, seed: u64) -> Result<RunTrace, AllocError> {
        for i in 0..self.inst.num_impressions() {
            let mut kind = self.decide(i);
            match &mut source {
                Source::Online { ocs, rng } => {
                    if let RoundKind::Randomized { candidates, selected } = &mut kind {
                        let c = |t: &TraceCandidate| Candidate {
                            adv: t.advertiser,
                            subset: t.subset.clone(),
                            bid: t.bid,
                            budget: self.inst.budget(t.advertiser),
                        };
                        let pair = RoundPair::new(c(&candidates[0]), c(&candidates[1]));
                        *selected = ocs.select(&pair, &mut Seeded(&mut **rng)) as u8 + 1;
                    }
                }
                Source::Replay { records } => {
                    let rec = records.get(i).ok_or_else(|| AllocError::Replay(i, "missing record".into()))?;
                    let mut expected = kind.clone();
                    if let (RoundKind::Randomized { selected, .. }, RoundKind::Randomized { selected: s, .. }) =
                        (&mut expected, &rec.kind)
                    {
                        *selected = *s;
                    }
                    if rec.kind != expected {
                        return Err(AllocError::Replay(i, "recorded decision differs from the rule".into()));
                    }
                    kind = expected;
                }
            }
            let beta = self.apply(i, &kind)?;
            if let Source::Replay { records } = &source {
                if records[i].beta != beta {
                    return Err(AllocError::Replay(i, "recorded beta differs".into()));
                }
            }
            self.records.push(TraceRecord { id: self.inst.impression_id(i).to_string(), kind, beta });
            let t = self.totals();
            self.check(i, &t)?;
            self.steps.push(t);
        }
        if let Allocator::PrimalDual { rule, .. } = self.alloc {
            for (a, p) in self.pans.iter().enumerate() {
                if rule.alpha_from_counters(p) != self.alpha[a] {
                    return Err(AllocError::Drift { step: self.steps.len(), what: format!("alpha of advertiser {a}") });
                }
            }
        }
        let totals = self.totals();
        let keeps_alpha = !matches!(self.alloc, Allocator::Greedy);
        let advertisers = (0..self.inst.num_advertisers())
            .map(|a| TraceAdvertiser {
                id: self.inst.advertiser_id(a).to_string(),
                alpha: keeps_alpha.then(|| self.alpha[a].clone()),
                panorama: self.pans[a].dump(),
            })
            .collect();
        Ok(RunTrace {
            algo: self.alloc.algo(),
            variant: self.alloc.variant().map(|v| v.kind().to_string()),
            seed,
            instance: serde_json::from_str(&self.inst.to_json()).expect("instance JSON"),
            table: self.alloc.table_json(),
            records: self.records,
            advertisers,
            steps: self.steps,
            totals,
        })
    }
}

/// One online run with randomness from a ChaCha stream seeded with `seed`.
pub fn run(inst: &Instance, alloc: &Allocator, seed: u64) -> Result<RunTrace, AllocError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    run_with(inst, alloc, &mut rng, seed)
}

/// One online run drawing from `rng`; `seed` is only recorded.
pub fn run_with<R: rand::RngCore>(inst: &Instance, alloc: &Allocator, rng: &mut R, seed: u64) -> Result<RunTrace, AllocError> {
    let ocs = PanOcs::new(alloc.variant().cloned().unwrap_or(Variant::Independent));
    Engine::new(inst, alloc).run(Source::Online { ocs, rng }, seed)
}

/// Rebuilds the allocator a trace was produced with.
pub fn allocator_of(trace: &RunTrace, inst: &Instance) -> Result<Allocator, AllocError> {
    let base = match &trace.table {
        None => Allocator::default_for(trace.algo, inst),
        Some(t) => {
            let table = ParamTable::from_json(&t.to_string()).map_err(|e| AllocError::Trace(e.to_string()))?;
            Allocator::with_table(trace.algo, table, inst)?
        }
    };
    match (base, &trace.variant) {
        (Allocator::PrimalDual { algo, rule, variant }, Some(v)) => {
            let kind = v.parse().map_err(AllocError::Trace)?;
            let kmax = match &variant {
                Variant::General { kmax, .. } => *kmax,
                _ => BASIC_GENERAL_KMAX,
            };
            Ok(Allocator::PrimalDual { algo, rule, variant: Variant::of(kind, kmax) })
        }
        (base, _) => Ok(base),
    }
}

/// Re-runs the rule on the recorded selections and checks every recorded value.
pub fn replay(trace: &RunTrace) -> Result<(Instance, Allocator, RunTrace), AllocError> {
    let inst = Instance::from_json(&trace.instance.to_string()).map_err(|e| AllocError::Trace(e.to_string()))?;
    let alloc = allocator_of(trace, &inst)?;
    if trace.records.len() != inst.num_impressions() {
        return Err(AllocError::Trace("record count differs from impression count".into()));
    }
    let source: Source<'_, ChaCha8Rng> = Source::Replay { records: &trace.records };
    let again = Engine::new(&inst, &alloc).run(source, trace.seed)?;
    if again.steps != trace.steps || again.totals != trace.totals || again.advertisers != trace.advertisers {
        return Err(AllocError::Trace("replayed totals differ from the recorded ones".into()));
    }
    Ok((inst, alloc, again))
}
