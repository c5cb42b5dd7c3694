//! Parameter tables for the basic and hybrid allocators, the PanOCS γ constants,
//! and the parameter-table JSON format.

use std::fmt;

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::rat::{self, half, pow2_neg, powi, q, qi, Q};

/// Sender probability of the large-bid PanOCS.
pub fn p_large() -> Q {
    q(4, 9)
}

/// Frozen sender probability of the general-bid PanOCS.
pub fn p_general() -> Q {
    q(44285, 100000)
}

/// `(1/4)(1-p) p (1 - 3p/8)`.
pub fn gamma_large(p: &Q) -> Q {
    q(1, 4) * (qi(1) - p) * p * (qi(1) - q(3, 8) * p)
}

/// The frozen large-bid constant `0.05144`.
pub fn gamma_large_frozen() -> Q {
    q(643, 12500)
}

/// `(1/(16 kmax)) (1-p) (1 - (1 - p/(4 kmax))^{4 kmax})`, exact.
pub fn gamma_general_exact(p: &Q, kmax: u32) -> Q {
    let n = 4 * i64::from(kmax);
    let inner = qi(1) - powi(&(qi(1) - p / qi(n)), n);
    (qi(1) - p) * inner / qi(16 * i64::from(kmax))
}

/// `(1/(16 kmax)) (1-p) (1 - e^{-p})`.
pub fn gamma_general_limit(p: f64, kmax: u32) -> f64 {
    (1.0 - p) * (1.0 - (-p).exp()) / (16.0 * f64::from(kmax))
}

/// The frozen general-bid constant `0.01245 / kmax`.
pub fn gamma_general_frozen(kmax: u32) -> Q {
    q(1245, 100000) / qi(i64::from(kmax))
}

/// `(3 + 2γ) / (6 + 3γ)`.
pub fn closed_form_ratio(gamma: &Q) -> Q {
    (qi(3) + qi(2) * gamma) / (qi(6) + qi(3) * gamma)
}

/// `Σ_{ℓ>k} Δx(ℓ)` for the untruncated sequence: `1` at `k = 0`, else `2^{-k}(1-γ)^{k-1}`.
fn closed_tail_x(gamma: &Q, k: usize) -> Q {
    if k == 0 {
        qi(1)
    } else {
        pow2_neg(k as i64) * powi(&(qi(1) - gamma), k as i64 - 1)
    }
}

fn closed_dx(gamma: &Q, k: usize) -> Q {
    match k {
        0 => Q::zero(),
        1 => half(),
        _ => pow2_neg(k as i64) * powi(&(qi(1) - gamma), k as i64 - 2) * (qi(1) + gamma),
    }
}

fn closed_dalpha(gamma: &Q, k: usize) -> Q {
    match k {
        0 => Q::zero(),
        1 => (qi(3) + gamma) / (qi(6) + qi(3) * gamma) * half(),
        _ => (qi(1) + gamma) / (qi(2) + gamma) * closed_dx(gamma, k),
    }
}

fn closed_tail_alpha(gamma: &Q, k: usize) -> Q {
    if k == 0 {
        closed_dalpha(gamma, 1) + closed_tail_alpha(gamma, 1)
    } else {
        (qi(1) + gamma) / (qi(2) + gamma) * closed_tail_x(gamma, k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasicForm {
    Closed,
    Truncated,
}

/// Entries kept explicitly for the untruncated table; later entries are computed on demand.
pub const CLOSED_STORED: usize = 64;

/// `Δx`, `Δα`, `Δβ` for the basic allocator, with exact tails.
#[derive(Debug, Clone, PartialEq)]
pub struct BasicTable {
    form: BasicForm,
    gamma: Q,
    kmax: Option<usize>,
    ratio: Q,
    dx: Vec<Q>,
    dalpha: Vec<Q>,
    dbeta: Vec<Q>,
    tail_x: Vec<Q>,
    tail_alpha: Vec<Q>,
    tail_beta: Vec<Q>,
}

impl BasicTable {
    /// The explicit solution with `Γ = (3+2γ)/(6+3γ)`.
    pub fn closed_form(gamma: Q) -> Self {
        assert!(!gamma.is_negative() && gamma <= qi(1), "0 <= γ <= 1");
        let n = CLOSED_STORED;
        let dx: Vec<Q> = (1..=n).map(|k| closed_dx(&gamma, k)).collect();
        let dalpha: Vec<Q> = (1..=n).map(|k| closed_dalpha(&gamma, k)).collect();
        let dbeta = dx.iter().zip(&dalpha).map(|(x, a)| x - a).collect();
        let tail_x: Vec<Q> = (0..=n).map(|k| closed_tail_x(&gamma, k)).collect();
        let tail_alpha: Vec<Q> = (0..=n).map(|k| closed_tail_alpha(&gamma, k)).collect();
        let tail_beta = tail_x.iter().zip(&tail_alpha).map(|(x, a)| x - a).collect();
        Self {
            form: BasicForm::Closed,
            ratio: closed_form_ratio(&gamma),
            gamma,
            kmax: None,
            dx,
            dalpha,
            dbeta,
            tail_x,
            tail_alpha,
            tail_beta,
        }
    }

    /// The closed form cut at `kmax`, with `Γ` lowered by `2^{-kmax}(1-γ)^{kmax-1}`.
    pub fn truncated(gamma: Q, kmax: usize) -> Self {
        assert!(kmax >= 1);
        assert!(!gamma.is_negative() && gamma <= qi(1), "0 <= γ <= 1");
        let dx: Vec<Q> = (1..=kmax).map(|k| closed_dx(&gamma, k)).collect();
        let dalpha: Vec<Q> = (1..=kmax).map(|k| closed_dalpha(&gamma, k)).collect();
        let dbeta: Vec<Q> = dx.iter().zip(&dalpha).map(|(x, a)| x - a).collect();
        let suffix = |v: &[Q]| {
            let mut t = vec![Q::zero(); kmax + 1];
            for k in (0..kmax).rev() {
                t[k] = &t[k + 1] + &v[k];
            }
            t
        };
        let ratio = closed_form_ratio(&gamma) - closed_tail_x(&gamma, kmax);
        Self {
            form: BasicForm::Truncated,
            tail_x: suffix(&dx),
            tail_alpha: suffix(&dalpha),
            tail_beta: suffix(&dbeta),
            gamma,
            kmax: Some(kmax),
            ratio,
            dx,
            dalpha,
            dbeta,
        }
    }

    pub fn form(&self) -> BasicForm {
        self.form
    }

    pub fn gamma(&self) -> &Q {
        &self.gamma
    }

    pub fn kmax(&self) -> Option<usize> {
        self.kmax
    }

    /// The competitive ratio `Γ` this table certifies.
    pub fn ratio(&self) -> &Q {
        &self.ratio
    }

    fn entry(&self, v: &[Q], k: usize, closed: impl Fn(&Q, usize) -> Q) -> Q {
        if k == 0 {
            return Q::zero();
        }
        match v.get(k - 1) {
            Some(x) => x.clone(),
            None if self.form == BasicForm::Closed => closed(&self.gamma, k),
            None => Q::zero(),
        }
    }

    fn tail(&self, v: &[Q], k: usize, closed: impl Fn(&Q, usize) -> Q) -> Q {
        match v.get(k) {
            Some(x) => x.clone(),
            None if self.form == BasicForm::Closed => closed(&self.gamma, k),
            None => Q::zero(),
        }
    }

    pub fn dx(&self, k: usize) -> Q {
        self.entry(&self.dx, k, closed_dx)
    }

    pub fn dalpha(&self, k: usize) -> Q {
        self.entry(&self.dalpha, k, closed_dalpha)
    }

    pub fn dbeta(&self, k: usize) -> Q {
        self.dx(k) - self.dalpha(k)
    }

    /// `Σ_{ℓ>k} Δx(ℓ)`.
    pub fn tail_x(&self, k: usize) -> Q {
        self.tail(&self.tail_x, k, closed_tail_x)
    }

    /// `Σ_{ℓ>k} Δα(ℓ)`.
    pub fn tail_alpha(&self, k: usize) -> Q {
        self.tail(&self.tail_alpha, k, closed_tail_alpha)
    }

    /// `Σ_{ℓ>k} Δβ(ℓ)`.
    pub fn tail_beta(&self, k: usize) -> Q {
        self.tail_x(k) - self.tail_alpha(k)
    }

    /// `Σ_{ℓ≤k} Δα(ℓ)`.
    pub fn prefix_alpha(&self, k: usize) -> Q {
        self.tail_alpha(0) - self.tail_alpha(k)
    }

    /// Exact check of every constraint of the basic factor-revealing LP for `k <= depth`.
    pub fn certify(&self, depth: usize) -> BasicCertificate {
        let g = &self.ratio;
        let mut rows = Vec::new();
        let mut push = |name: &'static str, k: usize, lhs: Q, rhs: Q| {
            rows.push(CheckedRow { name, k, slack: lhs - rhs });
        };
        for k in 1..=depth {
            push("definition", k, self.dalpha(k) + self.dbeta(k), self.dx(k));
            push("definition-rev", k, self.dx(k), self.dalpha(k) + self.dbeta(k));
        }
        for k in 0..=depth {
            push("not-to-a", k, self.prefix_alpha(k) + qi(2) * self.dbeta(k + 1), g.clone());
        }
        for k in 1..=depth {
            push("random-vs-deter", k, self.dbeta(k), self.tail_beta(k));
            push("half-to-a", k, self.prefix_alpha(k) + self.tail_beta(k - 1), g.clone());
            push("monotone", k, self.dbeta(k), self.dbeta(k + 1));
            push("alpha-nonneg", k, self.dalpha(k), Q::zero());
            push("beta-nonneg", k, self.dbeta(k), Q::zero());
        }
        push("bound-at-limit", 0, self.tail_alpha(0), g.clone());
        BasicCertificate { rows }
    }

    pub fn to_json(&self) -> Value {
        let n = self.dx.len();
        let f = |v: &[Q]| v.iter().map(rat::format).collect::<Vec<_>>();
        json!({
            "form": self.form,
            "gamma": rat::format(&self.gamma),
            "kmax": self.kmax,
            "Gamma": rat::format(&self.ratio),
            "Gamma_decimal": format!("{:.9}", rat::to_f64(&self.ratio)),
            "rows": {
                "dx": f(&self.dx[..n]),
                "dalpha": f(&self.dalpha[..n]),
                "dbeta": f(&self.dbeta[..n]),
            }
        })
    }
}

#[derive(Debug, Clone)]
pub struct CheckedRow {
    pub name: &'static str,
    pub k: usize,
    pub slack: Q,
}

#[derive(Debug, Clone)]
pub struct BasicCertificate {
    pub rows: Vec<CheckedRow>,
}

impl BasicCertificate {
    pub fn passes(&self) -> bool {
        self.rows.iter().all(|r| !r.slack.is_negative())
    }

    pub fn min_slack(&self) -> Q {
        self.rows.iter().map(|r| r.slack.clone()).min().unwrap_or_else(Q::zero)
    }

    /// Every row with the given name has zero slack.
    pub fn tight(&self, name: &str) -> bool {
        let mut any = false;
        for r in self.rows.iter().filter(|r| r.name == name) {
            any = true;
            if !r.slack.is_zero() {
                return false;
            }
        }
        any
    }

    pub fn first_violation(&self) -> Option<&CheckedRow> {
        self.rows.iter().find(|r| r.slack.is_negative())
    }
}

/// Row names of the hybrid table.
pub const HYBRID_ALPHA_ROWS: [&str; 4] = ["alpha_LR", "alpha_RR", "alpha_LD", "alpha_RD"];
pub const HYBRID_BETA_ROWS: [&str; 5] = ["beta_LR", "beta_RS", "beta_RL", "beta_LD", "beta_RD"];

/// Hybrid primal increments: `Δx_L^R`, `Δx_R^{RS}`, `Δx_R^{RL}`, `Δx_L^D`, `Δx_R^D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrimalRow {
    LeftSemi,
    RightSmall,
    RightLarge,
    LeftDet,
    RightDet,
}

impl PrimalRow {
    pub const ALL: [PrimalRow; 5] = [
        PrimalRow::LeftSemi,
        PrimalRow::RightSmall,
        PrimalRow::RightLarge,
        PrimalRow::LeftDet,
        PrimalRow::RightDet,
    ];

    /// The primal constant at `k >= 1`.
    pub fn dx(self, gamma: &Q, k: usize) -> Q {
        assert!(k >= 1);
        let k_i = k as i64;
        let one_minus = qi(1) - gamma;
        match self {
            PrimalRow::LeftSemi => pow2_neg(k_i),
            PrimalRow::LeftDet => pow2_neg(k_i - 1),
            PrimalRow::RightSmall if k == 1 => half() - gamma / qi(4),
            PrimalRow::RightSmall => pow2_neg(k_i) * powi(&one_minus, k_i - 2),
            PrimalRow::RightLarge if k == 1 => half(),
            PrimalRow::RightLarge => pow2_neg(k_i) * powi(&one_minus, k_i - 2) * (qi(1) + gamma),
            PrimalRow::RightDet => pow2_neg(k_i - 1) * powi(&one_minus, (k_i - 2).max(0)),
        }
    }

    /// Index of the α row paired with this primal row.
    pub fn alpha_row(self) -> usize {
        match self {
            PrimalRow::LeftSemi => 0,
            PrimalRow::RightSmall | PrimalRow::RightLarge => 1,
            PrimalRow::LeftDet => 2,
            PrimalRow::RightDet => 3,
        }
    }
}

/// The four α rows of the hybrid allocator plus `Γ`; β rows are derived exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridTable {
    gamma: Q,
    kmax: usize,
    ratio: Q,
    alpha: [Vec<Q>; 4],
    dx: [Vec<Q>; 5],
}

impl HybridTable {
    pub fn new(gamma: Q, kmax: usize, ratio: Q, alpha: [Vec<Q>; 4]) -> Self {
        assert!(alpha.iter().all(|r| r.len() == kmax), "α rows have kmax entries");
        let dx = PrimalRow::ALL.map(|row| (1..=kmax).map(|k| row.dx(&gamma, k)).collect());
        Self { gamma, kmax, ratio, alpha, dx }
    }

    pub fn gamma(&self) -> &Q {
        &self.gamma
    }

    pub fn kmax(&self) -> usize {
        self.kmax
    }

    pub fn ratio(&self) -> &Q {
        &self.ratio
    }

    pub fn alpha_rows(&self) -> &[Vec<Q>; 4] {
        &self.alpha
    }

    /// α row `r` (see [`HYBRID_ALPHA_ROWS`]) at `k`, zero outside `1..=kmax`.
    pub fn alpha(&self, r: usize, k: usize) -> Q {
        if k == 0 || k > self.kmax {
            Q::zero()
        } else {
            self.alpha[r][k - 1].clone()
        }
    }

    /// Primal increment, zero beyond `kmax`.
    pub fn dx(&self, row: PrimalRow, k: usize) -> Q {
        if k == 0 || k > self.kmax {
            Q::zero()
        } else {
            self.dx[row as usize][k - 1].clone()
        }
    }

    /// `Δβ` for a primal row: `Δx - Δα`.
    pub fn beta(&self, row: PrimalRow, k: usize) -> Q {
        self.dx(row, k) - self.alpha(row.alpha_row(), k)
    }

    /// `Σ_{ℓ≤k}` of α row `r`.
    pub fn prefix_alpha(&self, r: usize, k: usize) -> Q {
        (1..=k.min(self.kmax)).map(|l| self.alpha(r, l)).sum()
    }

    pub fn to_json(&self) -> Value {
        let f = |v: &[Q]| v.iter().map(rat::format).collect::<Vec<_>>();
        let mut rows = serde_json::Map::new();
        for (name, row) in HYBRID_ALPHA_ROWS.iter().zip(&self.alpha) {
            rows.insert((*name).into(), json!(f(row)));
        }
        for (name, row) in HYBRID_BETA_ROWS.iter().zip(PrimalRow::ALL) {
            let betas: Vec<Q> = (1..=self.kmax).map(|k| self.beta(row, k)).collect();
            rows.insert((*name).into(), json!(f(&betas)));
        }
        json!({
            "form": "hybrid",
            "gamma": rat::format(&self.gamma),
            "kmax": self.kmax,
            "Gamma": rat::format(&self.ratio),
            "Gamma_decimal": format!("{:.9}", rat::to_f64(&self.ratio)),
            "rows": rows,
        })
    }
}

/// Either table kind, as loaded from parameter-table JSON.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamTable {
    Basic(BasicTable),
    Hybrid(HybridTable),
}

impl ParamTable {
    pub fn ratio(&self) -> &Q {
        match self {
            ParamTable::Basic(t) => t.ratio(),
            ParamTable::Hybrid(t) => t.ratio(),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            ParamTable::Basic(t) => t.to_json(),
            ParamTable::Hybrid(t) => t.to_json(),
        }
    }

    /// Parses a table; basic tables are rebuilt from `gamma`/`kmax` and must match
    /// the stored entries, hybrid tables are taken from their α rows.
    pub fn from_json(text: &str) -> Result<Self, TableError> {
        let v: Value = serde_json::from_str(text).map_err(|e| TableError::Parse(e.to_string()))?;
        let field = |name: &str| v.get(name).ok_or_else(|| TableError::Missing(name.to_string()));
        let rational = |x: &Value, what: &str| {
            x.as_str()
                .and_then(rat::parse)
                .ok_or_else(|| TableError::Parse(format!("`{what}` is not a rational string")))
        };
        let form = field("form")?.as_str().unwrap_or_default().to_string();
        let gamma = rational(field("gamma")?, "gamma")?;
        let ratio = rational(field("Gamma")?, "Gamma")?;
        let kmax = field("kmax")?.as_u64().map(|k| k as usize);
        let rows = field("rows")?;
        let row = |name: &str| -> Result<Vec<Q>, TableError> {
            rows.get(name)
                .and_then(Value::as_array)
                .ok_or_else(|| TableError::Missing(format!("rows.{name}")))?
                .iter()
                .map(|x| rational(x, name))
                .collect()
        };
        match form.as_str() {
            "closed" | "truncated" => {
                let table = if form == "closed" {
                    BasicTable::closed_form(gamma)
                } else {
                    BasicTable::truncated(gamma, kmax.ok_or(TableError::Missing("kmax".into()))?)
                };
                let stored = [row("dx")?, row("dalpha")?, row("dbeta")?];
                let consistent = stored[0] == table.dx[..stored[0].len()]
                    && stored[1] == table.dalpha[..stored[1].len()]
                    && stored[2] == table.dbeta[..stored[2].len()]
                    && ratio == table.ratio;
                if !consistent {
                    return Err(TableError::Drift);
                }
                Ok(ParamTable::Basic(table))
            }
            "hybrid" => {
                let kmax = kmax.ok_or(TableError::Missing("kmax".into()))?;
                let alpha = [
                    row(HYBRID_ALPHA_ROWS[0])?,
                    row(HYBRID_ALPHA_ROWS[1])?,
                    row(HYBRID_ALPHA_ROWS[2])?,
                    row(HYBRID_ALPHA_ROWS[3])?,
                ];
                if alpha.iter().any(|r| r.len() != kmax) {
                    return Err(TableError::Parse("α rows must have kmax entries".into()));
                }
                Ok(ParamTable::Hybrid(HybridTable::new(gamma, kmax, ratio, alpha)))
            }
            other => Err(TableError::UnknownForm(other.to_string())),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TableError {
    #[error("table parse failure: {0}")]
    Parse(String),
    #[error("table field `{0}` missing")]
    Missing(String),
    #[error("unknown table form `{0}`")]
    UnknownForm(String),
    #[error("stored entries disagree with the table rebuilt from gamma and kmax")]
    Drift,
}

impl fmt::Display for BasicForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasicForm::Closed => "closed",
            BasicForm::Truncated => "truncated",
        })
    }
}

/// True if `x` is within `[0, 1]`.
pub fn is_probability(x: &Q) -> bool {
    !x.is_negative() && *x <= Q::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn large_bid_gamma_is_exact() {
        assert_eq!(gamma_large(&p_large()), q(100, 1944));
        assert_eq!(q(100, 1944), q(25, 486));
        let g = rat::to_f64(&gamma_large(&p_large()));
        assert!((g - 0.05144).abs() < 1e-5);
    }

    #[test]
    fn general_gamma_clears_frozen_constant() {
        let g = gamma_general_limit(0.44285, 18);
        assert!(g >= 0.01245 / 18.0);
        assert!((g * 18.0 - 0.0124591).abs() < 1e-6);
        let exact = gamma_general_exact(&p_general(), 18);
        assert!(exact >= gamma_general_frozen(18));
    }

    #[test]
    fn closed_form_values() {
        let t = BasicTable::closed_form(gamma_large_frozen());
        let r = rat::to_f64(t.ratio());
        assert!(r > 0.5041 && r < 0.5042);
        assert!((rat::to_f64(&t.dbeta(1)) - 0.25209).abs() < 1e-5);
        assert_eq!(BasicTable::closed_form(qi(0)).ratio(), &half());
        assert_eq!(BasicTable::closed_form(qi(1)).ratio(), &q(5, 9));
        let expect = (qi(3) + gamma_large_frozen()) / (qi(6) + qi(3) * gamma_large_frozen()) * half();
        assert_eq!(t.dalpha(1), expect);
    }

    #[test]
    fn closed_form_certifies_with_equalities() {
        for g in [qi(0), gamma_large_frozen(), q(1, 64), qi(1)] {
            let t = BasicTable::closed_form(g);
            let c = t.certify(64);
            assert!(c.passes(), "{:?}", c.first_violation());
            assert!(c.tight("not-to-a"));
            assert!(c.tight("bound-at-limit"));
        }
        let t = BasicTable::closed_form(gamma_large_frozen());
        assert!((1..=64).all(|k| t.dbeta(k) > t.dbeta(k + 1)));
    }

    #[test]
    fn tails_agree_with_summation() {
        let t = BasicTable::closed_form(gamma_large_frozen());
        let sum: Q = (6..=CLOSED_STORED + 10).map(|k| t.dbeta(k)).sum();
        let rest = t.tail_beta(CLOSED_STORED + 10);
        assert_eq!(sum + rest, t.tail_beta(5));
        assert_eq!(t.tail_x(0), qi(1));
    }

    #[test]
    fn truncated_general_ratio() {
        let t = BasicTable::truncated(gamma_general_frozen(18), 18);
        let r = rat::to_f64(t.ratio());
        assert!(r > 0.50005 + 1e-7, "{r}");
        assert!(t.certify(20).passes());
        assert_eq!(t.dbeta(19), Q::zero());
        assert_eq!(t.tail_beta(18), Q::zero());
    }

    #[test]
    fn truncated_ratio_increases_with_kmax() {
        let g = gamma_large_frozen();
        let rs: Vec<Q> = (1..=30).map(|k| BasicTable::truncated(g.clone(), k).ratio().clone()).collect();
        assert!(rs.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn hybrid_primal_constants() {
        let g = gamma_large_frozen();
        assert_eq!(PrimalRow::RightSmall.dx(&g, 1), half() - &g / qi(4));
        assert_eq!(PrimalRow::RightDet.dx(&g, 1), qi(1));
        assert_eq!(PrimalRow::LeftSemi.dx(&g, 3), q(1, 8));
        assert_eq!(PrimalRow::LeftDet.dx(&g, 3), q(1, 4));
        // Small then large on the right half: (1+γ)/4.
        let second = PrimalRow::RightLarge.dx(&g, 2);
        assert_eq!(second, (qi(1) + &g) / qi(4));
    }

    #[test]
    fn table_json_round_trip() {
        for t in [
            BasicTable::closed_form(gamma_large_frozen()),
            BasicTable::truncated(gamma_general_frozen(18), 18),
        ] {
            let text = t.to_json().to_string();
            assert_eq!(ParamTable::from_json(&text).unwrap(), ParamTable::Basic(t));
        }
        let h = HybridTable::new(gamma_large_frozen(), 2, q(1, 2), [
            vec![q(1, 4), q(1, 8)],
            vec![q(1, 4), q(1, 8)],
            vec![q(1, 2), q(1, 4)],
            vec![q(1, 2), q(1, 4)],
        ]);
        let text = h.to_json().to_string();
        assert_eq!(ParamTable::from_json(&text).unwrap(), ParamTable::Hybrid(h));
    }

    #[test]
    fn drift_is_rejected() {
        let t = BasicTable::closed_form(gamma_large_frozen());
        let mut v = t.to_json();
        v["Gamma"] = json!("1/2");
        assert_eq!(ParamTable::from_json(&v.to_string()), Err(TableError::Drift));
    }
}
