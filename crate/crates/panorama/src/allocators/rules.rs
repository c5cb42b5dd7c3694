//! Offers, dual increments and surrogate primal values of the basic and hybrid
//! rules, plus the MSVV trade-off function.

use num::Zero;

use crate::circle::SubsetOfCircle;
use crate::panorama::{AdvertiserPanorama, Status};
use crate::rat::{half, pow2_neg, powi, q, qi, qu, Q};
use crate::tables::{BasicTable, HybridTable, PrimalRow};

/// A primal-dual rule with point-level bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub enum PointRule {
    Basic(BasicTable),
    Hybrid(HybridTable),
}

/// What a commit of one subset adds: primal requirement, `α` mass and `β` share.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Increment {
    pub primal: Q,
    pub alpha: Q,
    pub beta: Q,
}

impl Increment {
    fn add(&mut self, len: &Q, primal: Q, alpha: Q, beta: Q) {
        self.primal += len * primal;
        self.alpha += len * alpha;
        self.beta += len * beta;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Commit {
    Semi { large: bool },
    Deterministic,
}

/// Lengths of `[s, e)` in the left half `[0, B/2)` and the right half `[B/2, B)`.
pub fn split_halves(s: u64, e: u64, budget: u64) -> (Q, Q) {
    let mid = q(budget as i64, 2);
    let (s, e) = (qu(s), qu(e));
    let left = if s < mid { e.clone().min(mid.clone()) - &s } else { Q::zero() };
    let right = &e - &s - &left;
    (left, right)
}

impl PointRule {
    pub fn ratio(&self) -> &Q {
        match self {
            PointRule::Basic(t) => t.ratio(),
            PointRule::Hybrid(t) => t.ratio(),
        }
    }

    pub fn gamma(&self) -> &Q {
        match self {
            PointRule::Basic(t) => t.gamma(),
            PointRule::Hybrid(t) => t.gamma(),
        }
    }

    /// Increments of committing `subset` (a preview of `pan`) as `commit`.
    pub fn increment(&self, pan: &AdvertiserPanorama, subset: &SubsetOfCircle, commit: Commit) -> Increment {
        let mut inc = Increment::default();
        for piece in pan.pieces(subset) {
            let k = piece.status.k() as usize;
            match self {
                PointRule::Basic(t) => {
                    let len = qu(piece.len());
                    match commit {
                        Commit::Semi { .. } => inc.add(&len, t.dx(k + 1), t.dalpha(k + 1), t.dbeta(k + 1)),
                        Commit::Deterministic => inc.add(&len, t.tail_x(k), t.tail_alpha(k), t.tail_beta(k)),
                    }
                }
                PointRule::Hybrid(t) => {
                    let (left, right) = split_halves(piece.start, piece.end, pan.budget());
                    let rows = match commit {
                        Commit::Semi { large: true } => [PrimalRow::LeftSemi, PrimalRow::RightLarge],
                        Commit::Semi { large: false } => [PrimalRow::LeftSemi, PrimalRow::RightSmall],
                        Commit::Deterministic => [PrimalRow::LeftDet, PrimalRow::RightDet],
                    };
                    for (len, row) in [(left, rows[0]), (right, rows[1])] {
                        if !len.is_zero() {
                            inc.add(&len, t.dx(row, k + 1), t.alpha(row.alpha_row(), k + 1), t.beta(row, k + 1));
                        }
                    }
                }
            }
        }
        inc
    }

    /// `α_a` recomputed from the point-level counters alone.
    pub fn alpha_from_counters(&self, pan: &AdvertiserPanorama) -> Q {
        let mut total = Q::zero();
        for seg in pan.segments() {
            let k = seg.status.k() as usize;
            match self {
                PointRule::Basic(t) => {
                    let per_point = if seg.status.is_det() { t.tail_alpha(0) } else { t.prefix_alpha(k) };
                    total += qu(seg.len()) * per_point;
                }
                PointRule::Hybrid(t) => {
                    let (left, right) = split_halves(seg.start, seg.end, pan.budget());
                    let (l, r) = (t.prefix_alpha(0, k), t.prefix_alpha(1, k));
                    let (l, r) = if seg.status.is_det() { (l + t.alpha(2, k + 1), r + t.alpha(3, k + 1)) } else { (l, r) };
                    total += left * l + right * r;
                }
            }
        }
        total
    }

    /// `∫ x̄_a(y) dy`: the guaranteed assignment probability integrated over the circle.
    pub fn xbar(&self, pan: &AdvertiserPanorama) -> Q {
        let mut total = Q::zero();
        for seg in pan.segments() {
            match self {
                PointRule::Basic(t) => {
                    let per_point = match seg.status {
                        Status::Det { .. } => t.tail_x(0),
                        Status::Semi { k, .. } => t.tail_x(0) - t.tail_x(k as usize),
                    };
                    total += qu(seg.len()) * per_point;
                }
                PointRule::Hybrid(t) => {
                    let (left, right) = split_halves(seg.start, seg.end, pan.budget());
                    let (l, r) = match seg.status {
                        Status::Det { .. } => (qi(1), qi(1)),
                        Status::Semi { k, k_large, .. } => {
                            let l = qi(1) - pow2_neg(i64::from(k));
                            let r = if k == 1 && k_large == 0 {
                                half() - t.gamma() / qi(4)
                            } else {
                                let e = (i64::from(k_large) - 1).max(0);
                                qi(1) - pow2_neg(i64::from(k)) * powi(&(qi(1) - t.gamma()), e)
                            };
                            (l, r)
                        }
                    };
                    total += left * l + right * r;
                }
            }
        }
        total
    }
}

/// `α(y)`: `4y/9` on `[0, 1/2]`, `2y/3 - 1/9` on `(1/2, 1]`.
pub fn msvv_alpha(y: &Q) -> Q {
    if *y <= half() {
        q(4, 9) * y
    } else {
        q(2, 3) * y - q(1, 9)
    }
}

/// `β(y) = y - α(y)`.
pub fn msvv_beta(y: &Q) -> Q {
    y - msvv_alpha(y)
}

/// `B (β((s + g)/B) - β(s/B))`: the share an MSVV assignment offers.
pub fn msvv_offer(spent: u64, gain: u64, budget: u64) -> Q {
    let b = qu(budget);
    &b * (msvv_beta(&(qu(spent + gain) / &b)) - msvv_beta(&(qu(spent) / &b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tables::gamma_large_frozen;

    #[test]
    fn msvv_closed_form() {
        assert_eq!(msvv_alpha(&half()), q(2, 9));
        assert_eq!(msvv_alpha(&qi(1)), q(5, 9));
        assert_eq!(msvv_beta(&qi(1)), q(4, 9));
        assert_eq!(msvv_offer(0, 1, 1000) * qi(1), q(5, 9));
        assert_eq!(msvv_offer(0, 0, 10), Q::zero());
    }

    #[test]
    fn halves_split_exactly() {
        assert_eq!(split_halves(0, 3, 3), (q(3, 2), q(3, 2)));
        assert_eq!(split_halves(2, 3, 4), (Q::zero(), qi(1)));
        assert_eq!(split_halves(0, 1, 4), (qi(1), Q::zero()));
    }

    #[test]
    fn basic_fresh_offers() {
        let t = BasicTable::closed_form(gamma_large_frozen());
        let rule = PointRule::Basic(t.clone());
        let pan = AdvertiserPanorama::new(10);
        let full = pan.next_subset(10);
        let r = rule.increment(&pan, &full, Commit::Semi { large: true });
        assert_eq!(r.beta, qi(10) * t.dbeta(1));
        let d = rule.increment(&pan, &full, Commit::Deterministic);
        assert_eq!(d.beta, qi(10) * t.tail_beta(0));
        assert!(qi(2) * &r.beta >= d.beta);
        assert_eq!(rule.increment(&pan, &SubsetOfCircle::empty(), Commit::Deterministic), Increment::default());
    }
}
