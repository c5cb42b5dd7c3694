//! Dense two-phase tableau simplex in `f64`. Dantzig's rule, falling back to
//! Bland's rule after a run of degenerate pivots.

use super::{LinearProgram, LpError, Sense};
use crate::rat;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Reduced-cost threshold for an entering column.
    pub eps: f64,
    /// Smallest admissible pivot magnitude.
    pub pivot_eps: f64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
    pub max_iterations: usize,
    /// Phase-one objective above this means infeasible.
    pub feasibility_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            eps: 1e-11,
            pivot_eps: 1e-10,
            bland_after: 64,
            max_iterations: 200_000,
            feasibility_tol: 1e-8,
        }
    }
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// `rows` constraint rows, then the objective row; each of width `cols + 1`.
    data: Vec<f64>,
    basis: Vec<usize>,
    /// Columns that may never enter.
    blocked: Vec<bool>,
}

impl Tableau {
    fn width(&self) -> usize {
        self.cols + 1
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width() + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn obj(&self, c: usize) -> f64 {
        self.at(self.rows, c)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width();
        let p = self.data[r * w + c];
        for v in &mut self.data[r * w..(r + 1) * w] {
            *v /= p;
        }
        let nz: Vec<usize> = (0..w).filter(|&j| self.data[r * w + j] != 0.0).collect();
        let pivot_row: Vec<f64> = nz.iter().map(|&j| self.data[r * w + j]).collect();
        for i in 0..=self.rows {
            if i == r {
                continue;
            }
            let f = self.data[i * w + c];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.data[i * w..(i + 1) * w];
            for (&j, &v) in nz.iter().zip(&pivot_row) {
                row[j] -= f * v;
            }
            row[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Runs pivots until optimal for the current objective row (maximization,
    /// entering when the reduced cost is positive).
    fn optimize(&mut self, opts: &SimplexOptions, iterations: &mut usize) -> Result<(), LpError> {
        let mut degenerate = 0usize;
        let mut bland = false;
        loop {
            *iterations += 1;
            if *iterations > opts.max_iterations {
                return Err(LpError::IterationLimit);
            }
            bland |= degenerate >= opts.bland_after;
            let mut enter = None;
            let mut best = opts.eps;
            for c in 0..self.cols {
                if self.blocked[c] {
                    continue;
                }
                let d = self.obj(c);
                if d > best {
                    enter = Some(c);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(c) = enter else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, c);
                if a <= opts.pivot_eps {
                    continue;
                }
                let ratio = self.rhs(r).max(0.0) / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        let tie = (ratio - lratio).abs() <= 1e-12 * (1.0 + lratio.abs());
                        let better = if tie {
                            if bland {
                                self.basis[r] < self.basis[lr]
                            } else {
                                a > self.at(lr, c)
                            }
                        } else {
                            ratio < lratio
                        };
                        if better {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
            let Some((r, ratio)) = leave else {
                return Err(LpError::Unbounded);
            };
            if ratio <= 1e-14 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, c);
        }
    }
}

/// Floating-point optimum with the final basis.
pub(super) struct Vertex {
    pub x: Vec<f64>,
    /// Structural variables in the final basis.
    pub basic: Vec<usize>,
    /// Rows whose slack is not basic, so they hold with equality at the vertex.
    pub tight: Vec<usize>,
}

/// `x_j >= 0` rows restate the variable bounds and are skipped by the tableau.
fn is_bound_row(c: &super::Constraint) -> bool {
    use num::{Signed, Zero};
    c.sense == Sense::Ge && c.rhs.is_zero() && c.coeffs.len() == 1 && c.coeffs[0].1.is_positive()
}

pub(super) fn solve(lp: &LinearProgram, opts: &SimplexOptions) -> Result<Vertex, LpError> {
    let n = lp.num_vars();
    let kept: Vec<usize> = (0..lp.constraints.len()).filter(|&i| !is_bound_row(&lp.constraints[i])).collect();
    let m = kept.len();
    // Normalize rows to non-negative right-hand sides.
    let mut rows: Vec<(Vec<(usize, f64)>, Sense, f64)> = Vec::with_capacity(m);
    for c in kept.iter().map(|&i| &lp.constraints[i]) {
        let mut coeffs: Vec<(usize, f64)> = c.coeffs.iter().map(|(j, v)| (*j, rat::to_f64(v))).collect();
        let mut rhs = rat::to_f64(&c.rhs);
        let mut sense = c.sense;
        if rhs < 0.0 {
            rhs = -rhs;
            for (_, v) in &mut coeffs {
                *v = -*v;
            }
            sense = match sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
        rows.push((coeffs, sense, rhs));
    }
    let n_slack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Sense::Le).count();
    let cols = n + n_slack + n_art;
    let w = cols + 1;
    let mut t = Tableau {
        rows: m,
        cols,
        data: vec![0.0; (m + 1) * w],
        basis: vec![0; m],
        blocked: vec![false; cols],
    };
    let mut next_slack = n;
    let mut next_art = n + n_slack;
    let mut artificial = vec![false; cols];
    let mut row_slack = vec![None; m];
    for (r, (coeffs, sense, rhs)) in rows.iter().enumerate() {
        if *sense != Sense::Eq {
            row_slack[r] = Some(next_slack);
        }
        for &(j, v) in coeffs {
            t.data[r * w + j] += v;
        }
        t.data[r * w + cols] = *rhs;
        match sense {
            Sense::Le => {
                t.data[r * w + next_slack] = 1.0;
                t.basis[r] = next_slack;
                next_slack += 1;
            }
            Sense::Ge => {
                t.data[r * w + next_slack] = -1.0;
                next_slack += 1;
                t.data[r * w + next_art] = 1.0;
                t.basis[r] = next_art;
                artificial[next_art] = true;
                next_art += 1;
            }
            Sense::Eq => {
                t.data[r * w + next_art] = 1.0;
                t.basis[r] = next_art;
                artificial[next_art] = true;
                next_art += 1;
            }
        }
    }
    let mut iterations = 0usize;
    if n_art > 0 {
        // Phase one: maximize -Σ artificials.
        for r in 0..m {
            if artificial[t.basis[r]] {
                for j in 0..w {
                    let v = t.data[r * w + j];
                    t.data[m * w + j] += v;
                }
            }
        }
        for j in 0..cols {
            if artificial[j] {
                t.data[m * w + j] = 0.0;
            }
        }
        t.optimize(opts, &mut iterations)?;
        if t.data[m * w + cols] > opts.feasibility_tol {
            return Err(LpError::Infeasible);
        }
        for r in 0..m {
            if !artificial[t.basis[r]] {
                continue;
            }
            if let Some(c) = (0..n + n_slack).find(|&c| t.at(r, c).abs() > 1e-9) {
                t.pivot(r, c);
            }
        }
        for (j, a) in artificial.iter().enumerate() {
            t.blocked[j] = *a;
        }
    }
    // Phase two objective row: c_j - c_B B^{-1} A_j.
    let mut cost = vec![0.0; cols];
    for (j, v) in &lp.objective {
        cost[*j] = rat::to_f64(v);
    }
    for j in 0..w {
        t.data[m * w + j] = if j < cols { cost[j] } else { 0.0 };
    }
    for r in 0..m {
        let cb = cost[t.basis[r]];
        if cb != 0.0 {
            for j in 0..w {
                let v = t.data[r * w + j];
                t.data[m * w + j] -= cb * v;
            }
        }
    }
    t.optimize(opts, &mut iterations)?;
    let mut x = vec![0.0; n];
    let mut basic = Vec::new();
    let mut in_basis = vec![false; cols];
    for r in 0..m {
        let b = t.basis[r];
        in_basis[b] = true;
        if b < n {
            x[b] = t.rhs(r).max(0.0);
            basic.push(b);
        }
    }
    basic.sort_unstable();
    let tight = (0..m)
        .filter(|&r| row_slack[r].is_none_or(|s| !in_basis[s]))
        .map(|r| kept[r])
        .collect();
    Ok(Vertex { x, basic, tight })
}
