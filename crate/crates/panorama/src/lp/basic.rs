//! The basic factor-revealing LP with the primal increments fixed and cut at `kmax`.

use crate::rat::{qi, Q};
use crate::tables::BasicTable;

use super::{LinExpr, LinearProgram, Sense};

/// Variable layout: `Gamma`, then `Δα(1..=K)`, then `Δβ(1..=K)`.
pub struct BasicLp {
    pub lp: LinearProgram,
    pub kmax: usize,
}

impl BasicLp {
    pub fn gamma_var(&self) -> usize {
        0
    }

    pub fn alpha_var(&self, k: usize) -> usize {
        k
    }

    pub fn beta_var(&self, k: usize) -> usize {
        self.kmax + k
    }
}

pub fn build_basic_lp(gamma: &Q, kmax: usize) -> BasicLp {
    assert!(kmax >= 1);
    let dx = BasicTable::truncated(gamma.clone(), kmax);
    let mut lp = LinearProgram::default();
    lp.add_var("Gamma");
    for k in 1..=kmax {
        lp.add_var(format!("dalpha_{k}"));
    }
    for k in 1..=kmax {
        lp.add_var(format!("dbeta_{k}"));
    }
    let g = LinExpr::var(0);
    let a = |k: usize| if (1..=kmax).contains(&k) { LinExpr::var(k) } else { LinExpr::zero() };
    let b = |k: usize| if (1..=kmax).contains(&k) { LinExpr::var(kmax + k) } else { LinExpr::zero() };
    let prefix_a = |k: usize| (1..=k.min(kmax)).fold(LinExpr::zero(), |e, l| e.plus(&a(l)));
    let tail_b = |k: usize| (k + 1..=kmax).fold(LinExpr::zero(), |e, l| e.plus(&b(l)));
    lp.maximize(&g);
    for k in 1..=kmax {
        let e = a(k).plus(&b(k)).minus(&LinExpr::constant(dx.dx(k)));
        lp.add(format!("definition_{k}"), &e, Sense::Eq);
    }
    for k in 0..=kmax {
        let e = prefix_a(k).plus(&b(k + 1).scaled(&qi(2))).minus(&g);
        lp.add(format!("not_to_a_{k}"), &e, Sense::Ge);
    }
    for k in 1..=kmax {
        lp.add(format!("random_vs_deter_{k}"), &b(k).minus(&tail_b(k)), Sense::Ge);
        let e = prefix_a(k).plus(&tail_b(k - 1)).minus(&g);
        lp.add(format!("half_to_a_{k}"), &e, Sense::Ge);
    }
    for k in 1..kmax {
        lp.add(format!("monotone_{k}"), &b(k).minus(&b(k + 1)), Sense::Ge);
    }
    lp.add("bound_at_limit", &prefix_a(kmax).minus(&g), Sense::Ge);
    BasicLp { lp, kmax }
}
