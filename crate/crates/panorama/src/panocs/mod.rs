//! Panoramic online correlated selection: the independent coin, the 1/64 warmup,
//! the large-bid sender/receiver scheme and the general-bid group scheme.

pub mod exact;
pub mod structure;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num::{ToPrimitive, Zero};
use rand::{Rng, RngCore};

use crate::rat::{pow2_neg, powi, q, qi, Q};
use crate::tables::{gamma_general_exact, gamma_large, p_general, p_large};

pub use structure::{Candidate, GroupCtx, GroupId, RoundCtx, RoundPair, Structure};

/// Source of the random choices a selection rule makes.
pub trait Randomness {
    /// Uniform in `0..n`.
    fn uniform(&mut self, n: usize) -> usize;
    fn bernoulli(&mut self, p: &Q) -> bool;
    fn coin(&mut self) -> bool {
        self.uniform(2) == 1
    }
    /// Uniform among `slots`, the sender target stored under `key`. Exact
    /// enumerators may merge targets that never occur.
    fn slot(&mut self, key: Key, slots: &[Slot]) -> Slot {
        let _ = key;
        slots[self.uniform(slots.len())]
    }
}

/// A seeded generator as a [`Randomness`] source.
#[derive(Debug, Clone)]
pub struct Seeded<R>(pub R);

impl<R: RngCore> Randomness for Seeded<R> {
    fn uniform(&mut self, n: usize) -> usize {
        self.0.gen_range(0..n)
    }

    fn bernoulli(&mut self, p: &Q) -> bool {
        let num = p.numer().to_u64().expect("probability numerator fits u64");
        let den = p.denom().to_u64().expect("probability denominator fits u64");
        self.0.gen_range(0..den) < num
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Variant {
    Independent,
    Warmup,
    Large { p: Q },
    General { p: Q, kmax: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VariantKind {
    Independent,
    Warmup,
    Large,
    General,
}

impl VariantKind {
    pub const ALL: [VariantKind; 4] =
        [VariantKind::Independent, VariantKind::Warmup, VariantKind::Large, VariantKind::General];
}

impl fmt::Display for VariantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VariantKind::Independent => "independent",
            VariantKind::Warmup => "warmup",
            VariantKind::Large => "large",
            VariantKind::General => "general",
        })
    }
}

impl FromStr for VariantKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VariantKind::ALL
            .into_iter()
            .find(|v| v.to_string() == s)
            .ok_or_else(|| format!("unknown PanOCS variant `{s}`"))
    }
}

impl Variant {
    pub fn large() -> Self {
        Variant::Large { p: p_large() }
    }

    pub fn general(kmax: usize) -> Self {
        assert!(kmax >= 1);
        Variant::General { p: p_general(), kmax }
    }

    /// The variant with its default parameters.
    pub fn of(kind: VariantKind, kmax: usize) -> Self {
        match kind {
            VariantKind::Independent => Variant::Independent,
            VariantKind::Warmup => Variant::Warmup,
            VariantKind::Large => Variant::large(),
            VariantKind::General => Variant::general(kmax),
        }
    }

    pub fn kind(&self) -> VariantKind {
        match self {
            Variant::Independent => VariantKind::Independent,
            Variant::Warmup => VariantKind::Warmup,
            Variant::Large { .. } => VariantKind::Large,
            Variant::General { .. } => VariantKind::General,
        }
    }

    /// The `γ` this variant guarantees.
    pub fn gamma(&self) -> Q {
        match self {
            Variant::Independent => Q::zero(),
            Variant::Warmup => q(1, 64),
            Variant::Large { p } => gamma_large(p),
            Variant::General { p, kmax } => gamma_general_exact(p, *kmax as u32),
        }
    }

    /// `1 - 2^{-k}(1-γ)^{max(k-1,0)}`.
    pub fn bound(&self, k: usize) -> Q {
        bound(&self.gamma(), k)
    }
}

/// `1 - 2^{-k}(1-γ)^{max(k-1,0)}`.
pub fn bound(gamma: &Q, k: usize) -> Q {
    let e = (k as i64 - 1).max(0);
    qi(1) - pow2_neg(k as i64) * powi(&(qi(1) - gamma), e)
}

/// Memory a later round may read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Key {
    Round(usize),
    Group(GroupId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    /// The `ordinal`-th future out-arc with respect to `adv`.
    Out { adv: usize, ordinal: usize },
    /// The `rank`-th most recent in-arc with respect to `adv`.
    In { adv: usize, rank: usize },
    /// The group `(j + dj, k)` of the same advertiser.
    Group { dj: usize, k: usize },
}

/// A round's or group's stored choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Record {
    /// Sender target; `None` for receivers or targets that never occur.
    pub slot: Option<Slot>,
    /// Selected advertiser (rounds) or `1` for "select the group's advertiser" (groups).
    pub choice: usize,
}

/// Realized arc of the ex-post graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RealizedArc {
    Rounds { from: usize, to: usize, adv: usize },
    Groups { from: GroupId, to: GroupId },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    /// Selected side, `0` or `1`.
    pub selected: usize,
    pub records: Vec<(Key, Record)>,
    pub arcs: Vec<RealizedArc>,
}

pub type Memory = BTreeMap<Key, Record>;

/// Side whose advertiser is not `adv` when `choice == adv`, and vice versa.
fn opposite(ctx: &RoundCtx, adv: usize, choice: usize) -> usize {
    let side_a = if ctx.advs[0] == adv { 0 } else { 1 };
    if choice == adv {
        1 - side_a
    } else {
        side_a
    }
}

/// One round of the selection rule. Pure in `(ctx, memory)` given the randomness.
pub fn decide<R: Randomness>(variant: &Variant, ctx: &RoundCtx, mem: &Memory, rng: &mut R) -> Decision {
    match variant {
        Variant::Independent => Decision { selected: usize::from(rng.coin()), records: vec![], arcs: vec![] },
        Variant::Warmup => decide_warmup(ctx, mem, rng),
        Variant::Large { p } => decide_large(p, ctx, mem, rng),
        Variant::General { p, kmax } => decide_general(p, *kmax, ctx, mem, rng),
    }
}

fn decide_warmup<R: Randomness>(ctx: &RoundCtx, mem: &Memory, rng: &mut R) -> Decision {
    let pick = rng.uniform(8);
    let side = pick / 4;
    let adv = ctx.advs[side];
    let slot = match pick % 4 {
        0 | 1 => Slot::Out { adv, ordinal: pick % 4 + 1 },
        r => Slot::In { adv, rank: r - 2 },
    };
    if let Slot::In { rank, .. } = slot {
        if let Some(&(from, ordinal)) = ctx.in_arcs[side].get(rank) {
            if let Some(rec) = mem.get(&Key::Round(from)) {
                if rec.slot == Some(Slot::Out { adv, ordinal }) {
                    let selected = opposite(ctx, adv, rec.choice);
                    let arcs = vec![RealizedArc::Rounds { from, to: ctx.round, adv }];
                    return Decision { selected, records: vec![], arcs };
                }
            }
        }
        let selected = usize::from(rng.coin());
        return Decision { selected, records: vec![], arcs: vec![] };
    }
    let selected = usize::from(rng.coin());
    let rec = Record { slot: Some(slot), choice: ctx.advs[selected] };
    Decision { selected, records: vec![(Key::Round(ctx.round), rec)], arcs: vec![] }
}

fn decide_large<R: Randomness>(p: &Q, ctx: &RoundCtx, mem: &Memory, rng: &mut R) -> Decision {
    if rng.bernoulli(p) {
        let selected = usize::from(rng.coin());
        let slots: Vec<Slot> =
            (0..4).map(|pick| Slot::Out { adv: ctx.advs[pick / 2], ordinal: pick % 2 + 1 }).collect();
        let slot = rng.slot(Key::Round(ctx.round), &slots);
        let rec = Record { slot: Some(slot), choice: ctx.advs[selected] };
        return Decision { selected, records: vec![(Key::Round(ctx.round), rec)], arcs: vec![] };
    }
    let mut senders = Vec::new();
    for side in 0..2 {
        let adv = ctx.advs[side];
        for &(from, ordinal) in &ctx.in_arcs[side] {
            if let Some(rec) = mem.get(&Key::Round(from)) {
                if rec.slot == Some(Slot::Out { adv, ordinal }) {
                    senders.push((from, adv, rec.choice));
                }
            }
        }
    }
    if senders.is_empty() {
        return Decision { selected: usize::from(rng.coin()), records: vec![], arcs: vec![] };
    }
    let (from, adv, choice) = senders[rng.uniform(senders.len())];
    let arcs = vec![RealizedArc::Rounds { from, to: ctx.round, adv }];
    Decision { selected: opposite(ctx, adv, choice), records: vec![], arcs }
}

fn decide_general<R: Randomness>(p: &Q, kmax: usize, ctx: &RoundCtx, mem: &Memory, rng: &mut R) -> Decision {
    let mut records = Vec::new();
    let mut arcs = Vec::new();
    let mut decisions = [false; 2];
    for side in 0..2 {
        let g = &ctx.groups[side];
        if !g.created {
            decisions[side] = mem.get(&Key::Group(g.id)).expect("open group has a record").choice == 1;
            continue;
        }
        let (adv, j, k) = g.id;
        let rec = if rng.bernoulli(p) {
            let decision = rng.coin();
            let slots: Vec<Slot> = (0..4 * kmax)
                .map(|pick| Slot::Group { dj: pick / (2 * kmax) + 1, k: pick % (2 * kmax) + 1 })
                .collect();
            let slot = rng.slot(Key::Group(g.id), &slots);
            Record { slot: Some(slot), choice: usize::from(decision) }
        } else {
            let senders: Vec<(GroupId, Record)> = g
                .sources
                .iter()
                .filter_map(|src| mem.get(&Key::Group(*src)).map(|r| (*src, *r)))
                .filter(|((_, sj, _), r)| r.slot == Some(Slot::Group { dj: j - sj, k }))
                .collect();
            if senders.is_empty() {
                Record { slot: None, choice: usize::from(rng.coin()) }
            } else {
                let (src, r) = senders[rng.uniform(senders.len())];
                arcs.push(RealizedArc::Groups { from: src, to: (adv, j, k) });
                Record { slot: None, choice: 1 - r.choice }
            }
        };
        decisions[side] = rec.choice == 1;
        records.push((Key::Group(g.id), rec));
    }
    let follow = usize::from(rng.coin());
    let selected = if decisions[follow] { follow } else { 1 - follow };
    Decision { selected, records, arcs }
}

/// A PanOCS instance driven online by a seeded generator.
#[derive(Debug, Clone)]
pub struct PanOcs {
    variant: Variant,
    structure: Structure,
    memory: Memory,
    realized: Vec<RealizedArc>,
    selections: Vec<usize>,
}

impl PanOcs {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            structure: Structure::new(),
            memory: Memory::new(),
            realized: Vec::new(),
            selections: Vec::new(),
        }
    }

    pub fn variant(&self) -> &Variant {
        &self.variant
    }

    /// Selects side `0` or `1` for the next randomized round.
    pub fn select<R: Randomness>(&mut self, pair: &RoundPair, rng: &mut R) -> usize {
        let ctx = self.structure.observe(pair);
        let d = decide(&self.variant, &ctx, &self.memory, rng);
        self.memory.extend(d.records);
        self.realized.extend(d.arcs);
        self.selections.push(d.selected);
        d.selected
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn realized(&self) -> &[RealizedArc] {
        &self.realized
    }

    pub fn selections(&self) -> &[usize] {
        &self.selections
    }

    /// No round (or group, for the general variant) is an endpoint of two realized arcs.
    pub fn realized_is_matching(&self) -> bool {
        let mut rounds = BTreeSet::new();
        let mut groups = BTreeSet::new();
        self.realized.iter().all(|arc| match *arc {
            RealizedArc::Rounds { from, to, .. } => rounds.insert(from) && rounds.insert(to),
            RealizedArc::Groups { from, to } => groups.insert(from) && groups.insert(to),
        })
    }

    /// Largest in- or out-degree in the large-bid dependence graph.
    pub fn max_degree(&self) -> usize {
        (0..self.structure.rounds())
            .map(|r| {
                let (i, o) = self.structure.degree(r);
                i.max(o)
            })
            .max()
            .unwrap_or(0)
    }

    /// Checks the group-level structure against `kmax`: first-level indices at most
    /// `2 kmax`, and each group adjacent to at most `8 kmax` groups, all within
    /// two first-level steps.
    pub fn group_structure_ok(&self, kmax: usize) -> bool {
        self.structure.groups().all(|g| {
            let (_, j, k) = *g;
            let nb = self.structure.group_neighbors(g).expect("listed group");
            j <= 2 * kmax
                && k <= 2 * kmax
                && nb.len() <= 8 * kmax
                && nb.iter().all(|&(_, j2, _)| j2 != j && j2 + 2 >= j && j2 <= j + 2)
        })
    }
}
