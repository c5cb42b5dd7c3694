//! The hybrid factor-revealing LP: regularity rows, the `Γ` rows of each
//! crossing case, and the exported exact table.

use std::sync::OnceLock;

use num::Zero;

use crate::rat::{self, qi, Q};
use crate::tables::{gamma_large_frozen, HybridTable, PrimalRow, HYBRID_ALPHA_ROWS, HYBRID_BETA_ROWS};

use super::{Certificate, LinExpr, LinearProgram, LpError, Sense};

/// Default truncation of the hybrid table.
pub const HYBRID_KMAX: usize = 20;

const ALPHA_DEN: u64 = 1_000_000_000_000_000;
/// Denominator caps tried in turn for the exported `Γ`.
const GAMMA_DENS: [u64; 3] = [1_000_000_000, 1_000_000_000_000, 1_000_000_000_000_000];

/// Variable layout: `Gamma`, four α rows of `K` entries, five β rows of `K` entries.
pub struct HybridLp {
    pub lp: LinearProgram,
    pub gamma: Q,
    pub kmax: usize,
}

const A_LR: usize = 0;
const A_RR: usize = 1;
const A_LD: usize = 2;
const A_RD: usize = 3;

impl HybridLp {
    pub fn alpha_var(&self, r: usize, k: usize) -> usize {
        1 + r * self.kmax + (k - 1)
    }

    pub fn beta_var(&self, row: PrimalRow, k: usize) -> usize {
        1 + 4 * self.kmax + (row as usize) * self.kmax + (k - 1)
    }

    fn a(&self, r: usize, k: usize) -> LinExpr {
        if (1..=self.kmax).contains(&k) {
            LinExpr::var(self.alpha_var(r, k))
        } else {
            LinExpr::zero()
        }
    }

    fn b(&self, row: PrimalRow, k: usize) -> LinExpr {
        assert!(k >= 1, "β is indexed from 1");
        if k <= self.kmax {
            LinExpr::var(self.beta_var(row, k))
        } else {
            LinExpr::zero()
        }
    }

    fn sa(&self, r: usize, k: usize) -> LinExpr {
        (1..=k.min(self.kmax)).fold(LinExpr::zero(), |e, l| e.plus(&self.a(r, l)))
    }

    fn two(e: LinExpr) -> LinExpr {
        e.scaled(&qi(2))
    }

    fn ns1_l(&self, k: usize) -> LinExpr {
        self.sa(A_LR, k).plus(&Self::two(self.b(PrimalRow::LeftSemi, k + 1)))
    }

    fn ns1_r(&self, k: usize) -> LinExpr {
        self.sa(A_RR, k).plus(&Self::two(self.b(PrimalRow::RightSmall, k + 1)))
    }

    fn ns2_l(&self, k: usize) -> LinExpr {
        self.sa(A_LR, k).plus(&Self::two(self.b(PrimalRow::RightSmall, k)))
    }

    fn ns2_r(&self, k: usize) -> LinExpr {
        self.sa(A_RR, k).plus(&Self::two(self.b(PrimalRow::LeftSemi, k + 1)))
    }

    fn nl_l(&self, k: usize) -> LinExpr {
        self.ns1_l(k)
    }

    fn nl_r(&self, k: usize) -> LinExpr {
        self.sa(A_RR, k).plus(&Self::two(self.b(PrimalRow::RightLarge, k + 1)))
    }

    fn r_l(&self, k: usize) -> LinExpr {
        self.sa(A_LR, k).plus(&self.b(PrimalRow::LeftDet, k))
    }

    fn r_r(&self, k: usize) -> LinExpr {
        self.sa(A_RR, k).plus(&self.b(PrimalRow::RightDet, k))
    }

    fn d_l(&self, k: usize) -> LinExpr {
        self.sa(A_LR, k - 1).plus(&self.a(A_LD, k))
    }

    fn d_r(&self, k: usize) -> LinExpr {
        self.sa(A_RR, k - 1).plus(&self.a(A_RD, k))
    }

    /// Point of the LP corresponding to a table.
    pub fn point(&self, table: &HybridTable) -> Vec<Q> {
        assert_eq!(table.kmax(), self.kmax);
        let mut x = vec![Q::zero(); self.lp.num_vars()];
        x[0] = table.ratio().clone();
        for r in 0..4 {
            for k in 1..=self.kmax {
                x[self.alpha_var(r, k)] = table.alpha(r, k);
            }
        }
        for row in PrimalRow::ALL {
            for k in 1..=self.kmax {
                x[self.beta_var(row, k)] = table.beta(row, k);
            }
        }
        x
    }

    /// Exact re-substitution of a table into every row.
    pub fn certify(&self, table: &HybridTable) -> Certificate {
        self.lp.certify(&self.point(table))
    }
}

pub fn build_hybrid_lp(gamma: &Q, kmax: usize) -> HybridLp {
    assert!(kmax >= 1);
    let mut lp = LinearProgram::default();
    lp.add_var("Gamma");
    for name in HYBRID_ALPHA_ROWS {
        for k in 1..=kmax {
            lp.add_var(format!("{name}_{k}"));
        }
    }
    for name in HYBRID_BETA_ROWS {
        for k in 1..=kmax {
            lp.add_var(format!("{name}_{k}"));
        }
    }
    let mut h = HybridLp { lp, gamma: gamma.clone(), kmax };
    let g = LinExpr::var(0);
    let two_g = g.clone().scaled(&qi(2));
    let mut rows: Vec<(String, LinExpr, Sense)> = Vec::new();

    for row in PrimalRow::ALL {
        for k in 1..=kmax {
            let e = h.a(row.alpha_row(), k).plus(&h.b(row, k)).minus(&LinExpr::constant(row.dx(gamma, k)));
            rows.push((format!("link_{}_{k}", HYBRID_BETA_ROWS[row as usize]), e, Sense::Eq));
        }
    }
    let pairs = [
        ("RL", PrimalRow::LeftSemi, PrimalRow::RightLarge),
        ("RS", PrimalRow::LeftSemi, PrimalRow::RightSmall),
        ("D", PrimalRow::LeftDet, PrimalRow::RightDet),
    ];
    for (tag, left, right) in pairs {
        for k in 1..=kmax {
            rows.push((format!("regular_{tag}_lr_{k}"), h.b(left, k).minus(&h.b(right, k)), Sense::Ge));
            if k < kmax {
                rows.push((format!("regular_{tag}_rl_{k}"), h.b(right, k).minus(&h.b(left, k + 1)), Sense::Ge));
            }
        }
    }
    let doubles = [
        ("L", PrimalRow::LeftSemi, PrimalRow::LeftDet),
        ("RS", PrimalRow::RightSmall, PrimalRow::RightDet),
        ("RL", PrimalRow::RightLarge, PrimalRow::RightDet),
    ];
    for (tag, semi, det) in doubles {
        for k in 1..=kmax {
            let e = HybridLp::two(h.b(semi, k)).minus(&h.b(det, k));
            rows.push((format!("double_{tag}_{k}"), e, Sense::Ge));
        }
    }
    for (r, name) in HYBRID_ALPHA_ROWS.iter().enumerate() {
        for k in 1..=kmax {
            rows.push((format!("{name}_nonneg_{k}"), h.a(r, k), Sense::Ge));
        }
    }
    for row in PrimalRow::ALL {
        for k in 1..=kmax {
            rows.push((format!("{}_nonneg_{k}", HYBRID_BETA_ROWS[row as usize]), h.b(row, k), Sense::Ge));
        }
    }
    for (tag, semi, det) in [("L", A_LR, A_LD), ("R", A_RR, A_RD)] {
        for k in 1..=kmax {
            let e = h.a(det, k).minus(&h.a(det, k + 1)).minus(&h.a(semi, k));
            rows.push((format!("det_dominates_{tag}_{k}"), e, Sense::Ge));
        }
    }
    let e = g.clone().scaled(&rat::half()).minus(&h.b(PrimalRow::LeftSemi, 1));
    rows.push(("first_level_cap".into(), e, Sense::Ge));
    let e = h.sa(A_LR, kmax).plus(&h.sa(A_RR, kmax)).minus(&two_g);
    rows.push(("bound_at_limit".into(), e, Sense::Ge));

    let mut cell = |name: String, e: LinExpr| rows.push((name, e.minus(&two_g), Sense::Ge));
    for k in 0..=kmax {
        cell(format!("N{k}_N{k}_small"), h.ns1_l(k).plus(&h.ns2_r(k)));
        cell(format!("N{k}_N{k}_large"), h.nl_l(k).plus(&h.nl_r(k)));
        cell(format!("N{}_N{k}_small", k + 1), h.ns2_l(k + 1).plus(&h.ns1_r(k)));
        cell(format!("N{}_N{k}_large", k + 1), h.nl_l(k + 1).plus(&h.nl_r(k)));
        cell(format!("R{}_N{k}", k + 1), h.r_l(k + 1).plus(&h.ns1_r(k)));
        cell(format!("D{}_N{k}", k + 1), h.d_l(k + 1).plus(&h.ns1_r(k)));
        if k == 0 {
            continue;
        }
        cell(format!("R{k}_N{k}"), h.r_l(k).plus(&h.ns1_r(k)));
        cell(format!("D{k}_N{k}"), h.d_l(k).plus(&h.ns1_r(k)));
        cell(format!("N{k}_R{k}"), h.ns1_l(k).plus(&h.r_r(k)));
        cell(format!("R{k}_R{k}"), h.r_l(k).plus(&h.r_r(k)));
        cell(format!("R{}_R{k}", k + 1), h.r_l(k + 1).plus(&h.r_r(k)));
        cell(format!("D{k}_R{k}"), h.d_l(k).plus(&h.r_r(k)));
        cell(format!("D{}_R{k}", k + 1), h.d_l(k + 1).plus(&h.r_r(k)));
        cell(format!("N{k}_D{k}"), h.ns1_l(k).plus(&h.d_r(k)));
        cell(format!("N{}_D{k}", k + 1), h.ns1_l(k + 1).plus(&h.d_r(k)));
        cell(format!("R{k}_D{k}"), h.r_l(k).plus(&h.d_r(k)));
        cell(format!("R{}_D{k}", k + 1), h.r_l(k + 1).plus(&h.d_r(k)));
        cell(format!("D{k}_D{k}"), h.d_l(k).plus(&h.d_r(k)));
        cell(format!("D{}_D{k}", k + 1), h.d_l(k + 1).plus(&h.d_r(k)));
    }
    h.lp.maximize(&g);
    for (name, e, sense) in rows {
        h.lp.add(name, &e, sense);
    }
    h
}


/// A hybrid table exported from the LP together with its exact certificate.
#[derive(Debug, Clone)]
pub struct HybridExport {
    pub table: HybridTable,
    /// Exact optimum of the LP.
    pub optimum: Q,
    pub certificate: Certificate,
}

/// Solves the hybrid LP, recovers the optimal vertex exactly, and exports α with
/// short fractions when that stays exactly feasible (the exact vertex otherwise).
/// `Γ` is lowered to a short fraction inside the range every row admits.
pub fn solve_hybrid(gamma: &Q, kmax: usize) -> Result<HybridExport, LpError> {
    let h = build_hybrid_lp(gamma, kmax);
    let (x, _) = h.lp.solve_exact()?;
    let optimum = x[0].clone();
    let exact: [Vec<Q>; 4] = std::array::from_fn(|r| (1..=kmax).map(|k| x[h.alpha_var(r, k)].clone()).collect());
    let short = exact.clone().map(|row| row.iter().map(|v| rat::rationalize_nearest(v, ALPHA_DEN)).collect());
    let mut last = None;
    for alpha in [short, exact] {
        let provisional = HybridTable::new(gamma.clone(), kmax, Q::zero(), alpha.clone());
        let (lo, hi) = h.lp.range_of(0, &h.point(&provisional));
        let upper = match hi {
            Some(hi) if hi < optimum => hi,
            _ => optimum.clone(),
        };
        let ratio = GAMMA_DENS
            .iter()
            .map(|&d| rat::rationalize_floor(&upper, d))
            .find(|r| *r >= lo)
            .unwrap_or(upper);
        let table = HybridTable::new(gamma.clone(), kmax, ratio, alpha);
        let certificate = h.certify(&table);
        if certificate.exact() {
            return Ok(HybridExport { table, optimum, certificate });
        }
        last = Some(certificate);
    }
    let c = last.expect("two candidates tried");
    Err(LpError::Certification {
        violation: rat::to_f64(&c.max_violation),
        row: c.worst_row.unwrap_or_default(),
    })
}

/// The certified hybrid table at the frozen large-bid `γ` and [`HYBRID_KMAX`].
pub fn default_hybrid_table() -> &'static HybridTable {
    static TABLE: OnceLock<HybridTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        solve_hybrid(&gamma_large_frozen(), HYBRID_KMAX)
            .expect("hybrid LP at the frozen parameters is solvable")
            .table
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::q;

    #[test]
    fn exported_table_is_exactly_feasible() {
        let e = solve_hybrid(&gamma_large_frozen(), 5).unwrap();
        assert!(e.certificate.exact());
        assert!(e.table.ratio() <= &e.optimum);
        assert!(rat::to_f64(&(&e.optimum - e.table.ratio())) < 1e-8);
    }

    #[test]
    fn zero_table_violates_gamma_rows() {
        let h = build_hybrid_lp(&gamma_large_frozen(), 3);
        let zero = [vec![Q::zero(); 3], vec![Q::zero(); 3], vec![Q::zero(); 3], vec![Q::zero(); 3]];
        let t = HybridTable::new(gamma_large_frozen(), 3, q(1, 2), zero);
        assert!(!h.certify(&t).exact());
    }

    #[test]
    fn variable_layout_is_consistent() {
        let h = build_hybrid_lp(&gamma_large_frozen(), 4);
        assert_eq!(h.lp.num_vars(), 1 + 9 * 4);
        assert_eq!(h.lp.names[h.alpha_var(2, 3)], "alpha_LD_3");
        assert_eq!(h.lp.names[h.beta_var(PrimalRow::RightLarge, 4)], "beta_RL_4");
    }
}
