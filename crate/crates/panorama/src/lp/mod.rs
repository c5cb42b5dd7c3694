//! Linear programs with exact rational coefficients, a dense simplex solver,
//! exact certification, and the basic and hybrid factor-revealing LPs.

pub mod basic;
pub mod hybrid;
mod simplex;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num::{Signed, Zero};
use thiserror::Error;

use crate::rat::{self, Q};

pub use simplex::SimplexOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// Affine expression `Σ c_j x_j + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    terms: BTreeMap<usize, Q>,
    constant: Q,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn var(j: usize) -> Self {
        Self::term(j, Q::from_integer(1.into()))
    }

    pub fn term(j: usize, c: Q) -> Self {
        let mut e = Self::zero();
        e.add_term(j, c);
        e
    }

    pub fn constant(c: Q) -> Self {
        Self { terms: BTreeMap::new(), constant: c }
    }

    pub fn add_term(&mut self, j: usize, c: Q) {
        let entry = self.terms.entry(j).or_insert_with(Q::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&j);
        }
    }

    pub fn plus(mut self, other: &LinExpr) -> Self {
        for (&j, c) in &other.terms {
            self.add_term(j, c.clone());
        }
        self.constant += &other.constant;
        self
    }

    pub fn scaled(mut self, s: &Q) -> Self {
        if s.is_zero() {
            return Self::zero();
        }
        for c in self.terms.values_mut() {
            *c *= s;
        }
        self.constant *= s;
        self
    }

    pub fn minus(self, other: &LinExpr) -> Self {
        self.plus(&other.clone().scaled(&Q::from_integer((-1).into())))
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, &Q)> {
        self.terms.iter().map(|(&j, c)| (j, c))
    }

    pub fn eval(&self, x: &[Q]) -> Q {
        self.terms.iter().fold(self.constant.clone(), |acc, (&j, c)| acc + c * &x[j])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(usize, Q)>,
    pub sense: Sense,
    pub rhs: Q,
}

impl Constraint {
    pub fn lhs(&self, x: &[Q]) -> Q {
        self.coeffs.iter().fold(Q::zero(), |acc, (j, c)| acc + c * &x[*j])
    }

    /// Amount by which `x` violates the row (zero if satisfied).
    pub fn violation(&self, x: &[Q]) -> Q {
        let lhs = self.lhs(x);
        let v = match self.sense {
            Sense::Le => lhs - &self.rhs,
            Sense::Ge => &self.rhs - lhs,
            Sense::Eq => (lhs - &self.rhs).abs(),
        };
        if v.is_positive() {
            v
        } else {
            Q::zero()
        }
    }
}

/// `maximize c·x` subject to the rows and `x >= 0`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub names: Vec<String>,
    pub objective: Vec<(usize, Q)>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex iteration limit reached")]
    IterationLimit,
    #[error("certification failed: max violation {violation:e} at row `{row}`")]
    Certification { violation: f64, row: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub values: Vec<f64>,
    pub objective: f64,
    /// Largest row violation after exact re-substitution of the floating-point values.
    pub max_violation: f64,
}

/// Violations at or below this are accepted.
pub const ACCEPT_VIOLATION: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct Certificate {
    pub max_violation: Q,
    pub worst_row: Option<String>,
    pub objective: Q,
}

impl Certificate {
    pub fn exact(&self) -> bool {
        self.max_violation.is_zero()
    }
}

impl LinearProgram {
    pub fn add_var(&mut self, name: impl Into<String>) -> usize {
        self.names.push(name.into());
        self.names.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn maximize(&mut self, e: &LinExpr) {
        self.objective = e.terms().map(|(j, c)| (j, c.clone())).collect();
    }

    /// Adds `e {sense} 0`.
    pub fn add(&mut self, name: impl Into<String>, e: &LinExpr, sense: Sense) {
        self.constraints.push(Constraint {
            name: name.into(),
            coeffs: e.terms().map(|(j, c)| (j, c.clone())).collect(),
            sense,
            rhs: -e.constant.clone(),
        });
    }

    pub fn objective_value(&self, x: &[Q]) -> Q {
        self.objective.iter().fold(Q::zero(), |acc, (j, c)| acc + c * &x[*j])
    }

    /// Exact re-substitution of a candidate point (including `x >= 0`).
    pub fn certify(&self, x: &[Q]) -> Certificate {
        assert_eq!(x.len(), self.num_vars());
        let mut worst = Q::zero();
        let mut worst_row = None;
        for (j, v) in x.iter().enumerate() {
            if v.is_negative() && -v > worst {
                worst = -v;
                worst_row = Some(format!("{} >= 0", self.names[j]));
            }
        }
        for c in &self.constraints {
            let v = c.violation(x);
            if v > worst {
                worst = v;
                worst_row = Some(c.name.clone());
            }
        }
        Certificate { max_violation: worst, worst_row, objective: self.objective_value(x) }
    }

    /// Solves in floating point, then certifies the returned point exactly.
    pub fn solve(&self) -> Result<LpSolution, LpError> {
        self.solve_with(&SimplexOptions::default())
    }

    pub fn solve_with(&self, opts: &SimplexOptions) -> Result<LpSolution, LpError> {
        let values = simplex::solve(self, opts)?.x;
        let exact: Vec<Q> = values.iter().map(|&v| rat::from_f64(v)).collect();
        let cert = self.certify(&exact);
        let max_violation = rat::to_f64(&cert.max_violation);
        if max_violation > ACCEPT_VIOLATION {
            return Err(LpError::Certification {
                violation: max_violation,
                row: cert.worst_row.unwrap_or_default(),
            });
        }
        Ok(LpSolution { objective: rat::to_f64(&cert.objective), values, max_violation })
    }

    /// Solves in floating point, then recomputes the optimal vertex exactly from
    /// the final basis and certifies it with zero tolerance.
    pub fn solve_exact(&self) -> Result<(Vec<Q>, Certificate), LpError> {
        let v = simplex::solve(self, &SimplexOptions::default())?;
        let x = self.exact_vertex(&v.basic, &v.tight).ok_or_else(|| LpError::Certification {
            violation: f64::INFINITY,
            row: "singular basis".into(),
        })?;
        let cert = self.certify(&x);
        if !cert.exact() {
            return Err(LpError::Certification {
                violation: rat::to_f64(&cert.max_violation),
                row: cert.worst_row.clone().unwrap_or_default(),
            });
        }
        Ok((x, cert))
    }

    /// Solves the tight rows for the basic variables in exact arithmetic,
    /// with every other variable at zero.
    fn exact_vertex(&self, basic: &[usize], tight: &[usize]) -> Option<Vec<Q>> {
        let col: BTreeMap<usize, usize> = basic.iter().enumerate().map(|(i, &j)| (j, i)).collect();
        let s = basic.len();
        let mut rows: Vec<(BTreeMap<usize, Q>, Q)> = tight
            .iter()
            .map(|&i| {
                let c = &self.constraints[i];
                let coeffs = c.coeffs.iter().filter_map(|(j, v)| col.get(j).map(|&k| (k, v.clone()))).collect();
                (coeffs, c.rhs.clone())
            })
            .collect();
        let mut pivot_row = vec![usize::MAX; s];
        let mut used = vec![false; rows.len()];
        for k in 0..s {
            let r = (0..rows.len()).filter(|&r| !used[r] && rows[r].0.contains_key(&k)).min_by_key(|&r| rows[r].0.len())?;
            used[r] = true;
            pivot_row[k] = r;
            let (prow, prhs) = rows[r].clone();
            let p = prow[&k].clone();
            for (i, (row, rhs)) in rows.iter_mut().enumerate() {
                if i == r {
                    continue;
                }
                let Some(f) = row.get(&k).map(|v| v / &p) else {
                    continue;
                };
                for (j, v) in &prow {
                    let e = row.entry(*j).or_insert_with(Q::zero);
                    *e -= &f * v;
                    if e.is_zero() {
                        row.remove(j);
                    }
                }
                *rhs -= &f * &prhs;
            }
        }
        let mut x = vec![Q::zero(); self.num_vars()];
        for (k, &j) in basic.iter().enumerate() {
            let (row, rhs) = &rows[pivot_row[k]];
            x[j] = rhs / &row[&k];
        }
        Some(x)
    }

    /// Largest value of variable `j` keeping every row satisfied when the other
    /// coordinates of `x` are held fixed, with the matching lower bound.
    pub fn range_of(&self, j: usize, x: &[Q]) -> (Q, Option<Q>) {
        let mut lo = Q::zero();
        let mut hi: Option<Q> = None;
        let mut tighten_hi = |v: Q| {
            hi = Some(match hi.take() {
                Some(h) if h <= v => h,
                _ => v,
            });
        };
        for c in &self.constraints {
            let Some((_, cj)) = c.coeffs.iter().find(|(k, _)| *k == j) else {
                continue;
            };
            let rest = c.lhs(x) - cj * &x[j];
            let bound = (&c.rhs - rest) / cj;
            let upper = match c.sense {
                Sense::Le => cj.is_positive(),
                Sense::Ge => cj.is_negative(),
                Sense::Eq => {
                    lo = lo.max(bound.clone());
                    tighten_hi(bound);
                    continue;
                }
            };
            if upper {
                tighten_hi(bound);
            } else if bound > lo {
                lo = bound;
            }
        }
        (lo, hi)
    }

    /// CPLEX-style LP text.
    pub fn to_lp_text(&self) -> String {
        let mut out = String::from("Maximize\n obj:");
        let write_terms = |out: &mut String, terms: &[(usize, Q)]| {
            if terms.is_empty() {
                out.push_str(" 0");
            }
            for (j, c) in terms {
                let v = rat::to_f64(c);
                let sign = if v < 0.0 { '-' } else { '+' };
                write!(out, " {sign} {:.17e} {}", v.abs(), self.names[*j]).unwrap();
            }
        };
        write_terms(&mut out, &self.objective);
        out.push_str("\nSubject To\n");
        for c in &self.constraints {
            write!(out, " {}:", c.name).unwrap();
            write_terms(&mut out, &c.coeffs);
            let op = match c.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            writeln!(out, " {op} {:.17e}", rat::to_f64(&c.rhs)).unwrap();
        }
        out.push_str("Bounds\n");
        for n in &self.names {
            writeln!(out, " {n} >= 0").unwrap();
        }
        out.push_str("End\n");
        out
    }
}
