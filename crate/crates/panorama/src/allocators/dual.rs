//! Dual feasibility of a finished run: for every advertiser `a` and impression set
//! `S`, `α_a + Σ_{i∈S} β_i ≥ Γ · min(Σ_{i∈S} b_{ai}, B_a)`.

use num::Zero;

use crate::instance::Instance;
use crate::rat::{self, qu, Q};

/// Largest impression count the subset enumeration accepts.
pub const MAX_IMPRESSIONS: usize = 20;

/// Screening window above the floating-point minimum that is re-checked exactly.
const SCREEN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct DualCheck {
    /// Exact minimum slack over every `(a, S)`.
    pub min_slack: Q,
    pub advertiser: usize,
    /// Impression indices of a minimizing set.
    pub subset: Vec<usize>,
    pub pairs_checked: u64,
}

impl DualCheck {
    pub fn feasible(&self) -> bool {
        self.min_slack >= Q::zero()
    }
}

/// Enumerates all subsets in Gray-code order per advertiser. `None` if the
/// instance has more than [`MAX_IMPRESSIONS`] impressions.
pub fn check(inst: &Instance, alpha: &[Q], beta: &[Q], ratio: &Q) -> Option<DualCheck> {
    let n = inst.num_impressions();
    if n > MAX_IMPRESSIONS {
        return None;
    }
    let beta_f: Vec<f64> = beta.iter().map(rat::to_f64).collect();
    let g = rat::to_f64(ratio);
    let mut best: Option<DualCheck> = None;
    let mut pairs = 0u64;
    for a in 0..inst.num_advertisers() {
        let budget = inst.budget(a);
        let bids: Vec<u64> = (0..n).map(|i| inst.bid(a, i)).collect();
        let alpha_f = rat::to_f64(&alpha[a]);
        // Pass one: floating minimum.
        let slack_of = |sum_b: u64, sum_beta: f64| alpha_f + sum_beta - g * sum_b.min(budget) as f64;
        let mut masks = Vec::new();
        let (mut mask, mut sb, mut sbeta) = (0u32, 0u64, 0.0f64);
        let mut fmin = slack_of(0, 0.0);
        let mut slacks = Vec::with_capacity(1 << n);
        slacks.push((0u32, fmin));
        for step in 1u32..(1u32 << n) {
            let bit = step.trailing_zeros() as usize;
            mask ^= 1 << bit;
            if mask & (1 << bit) != 0 {
                sb += bids[bit];
                sbeta += beta_f[bit];
            } else {
                sb -= bids[bit];
                sbeta -= beta_f[bit];
            }
            let s = slack_of(sb, sbeta);
            fmin = fmin.min(s);
            slacks.push((mask, s));
        }
        pairs += slacks.len() as u64;
        masks.extend(slacks.into_iter().filter(|&(_, s)| s <= fmin + SCREEN).map(|(m, _)| m));
        // Pass two: exact slack of the screened sets.
        for m in masks {
            let members: Vec<usize> = (0..n).filter(|&i| m & (1 << i) != 0).collect();
            let sum_b: u64 = members.iter().map(|&i| bids[i]).sum();
            let sum_beta: Q = members.iter().map(|&i| beta[i].clone()).sum();
            let slack = &alpha[a] + sum_beta - ratio * qu(sum_b.min(budget));
            if best.as_ref().is_none_or(|b| slack < b.min_slack) {
                best = Some(DualCheck { min_slack: slack, advertiser: a, subset: members, pairs_checked: 0 });
            }
        }
    }
    best.map(|mut b| {
        b.pairs_checked = pairs;
        b
    })
}
