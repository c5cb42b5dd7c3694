//! Offline optimum, Monte Carlo ratio estimates, PanOCS guarantee checks and
//! the per-step duality ledger of a run.

pub mod properties;

use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use num::{ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::allocators::{self, AllocError, Allocator, RoundKind, RunTrace};
use crate::instance::Instance;
use crate::panocs::exact::{self, hoeffding_margin, ExactError, Script};
use crate::panocs::Variant;
use crate::rat::{self, qi, qu, Q};

/// Largest number of spend states the exact optimum may hold per impression.
pub const OPT_STATE_BUDGET: usize = 1 << 22;

/// One-sided error of each end of a reported confidence interval.
pub const CI_DELTA: f64 = 0.025;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Alloc(#[from] AllocError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error("ratio must be positive")]
    NonPositiveRatio,
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("report {0}: {1}")]
    Report(String, String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OptMethod {
    Brute,
    Bound,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OptResult {
    pub value: u64,
    /// Advertiser index per impression; empty for a bound.
    pub assignment: Vec<Option<usize>>,
    pub method: OptMethod,
}

/// Exact offline optimum by exhaustive search over assignments, merging
/// assignments that leave every advertiser with the same capped spend. When the
/// state budget is exceeded, falls back to `⌊D/Γ⌋` of a basic run.
pub fn offline_opt(inst: &Instance) -> OptResult {
    offline_opt_with_budget(inst, OPT_STATE_BUDGET)
}

pub fn offline_opt_with_budget(inst: &Instance, budget: usize) -> OptResult {
    match brute(inst, budget) {
        Some((value, assignment)) => OptResult { value, assignment, method: OptMethod::Brute },
        None => {
            let alloc = Allocator::default_for(allocators::Algo::Basic, inst);
            let trace = allocators::run(inst, &alloc, 0).expect("basic run on a valid instance");
            let d = trace.totals.dual.expect("basic keeps a dual");
            let value = (d / alloc.guarantee()).floor().to_integer().to_u64().expect("bound fits u64");
            OptResult { value, assignment: Vec::new(), method: OptMethod::Bound }
        }
    }
}

fn brute(inst: &Instance, budget: usize) -> Option<(u64, Vec<Option<usize>>)> {
    let na = inst.num_advertisers();
    // Per layer: capped spend vector -> (value, parent spend vector, choice).
    let mut layers: Vec<HashMap<Vec<u64>, (u64, Vec<u64>, Option<usize>)>> = Vec::new();
    let mut cur: HashMap<Vec<u64>, (u64, Vec<u64>, Option<usize>)> = HashMap::new();
    cur.insert(vec![0; na], (0, Vec::new(), None));
    for i in 0..inst.num_impressions() {
        let mut next: HashMap<Vec<u64>, (u64, Vec<u64>, Option<usize>)> = HashMap::new();
        let mut offer = |s: Vec<u64>, v: u64, parent: &Vec<u64>, c: Option<usize>| {
            match next.get(&s) {
                Some(e) if e.0 >= v => {}
                _ => {
                    next.insert(s, (v, parent.clone(), c));
                }
            }
        };
        for (s, (v, _, _)) in &cur {
            offer(s.clone(), *v, s, None);
            for a in 0..na {
                let b = inst.bid(a, i);
                let room = inst.budget(a) - s[a];
                if b == 0 || room == 0 {
                    continue;
                }
                let gain = b.min(room);
                let mut t = s.clone();
                t[a] += gain;
                offer(t, v + gain, s, Some(a));
            }
        }
        if next.len() > budget {
            return None;
        }
        layers.push(std::mem::replace(&mut cur, next));
    }
    let (state, &(value, _, _)) = cur.iter().max_by(|x, y| x.1 .0.cmp(&y.1 .0).then(y.0.cmp(x.0)))?;
    let mut state = state.clone();
    let mut layer = cur;
    let mut assignment = vec![None; inst.num_impressions()];
    for i in (0..inst.num_impressions()).rev() {
        let (_, parent, choice) = layer[&state].clone();
        assignment[i] = choice;
        state = parent;
        layer = layers.pop().expect("one layer per impression");
    }
    Some((value, assignment))
}

/// Budget-additive value of an explicit assignment.
pub fn assignment_value(inst: &Instance, assignment: &[Option<usize>]) -> u64 {
    let mut paid = vec![0u64; inst.num_advertisers()];
    for (i, a) in assignment.iter().enumerate() {
        if let Some(a) = a {
            paid[*a] += inst.bid(*a, i);
        }
    }
    paid.iter().enumerate().map(|(a, &p)| p.min(inst.budget(a))).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioEstimate {
    pub trials: u64,
    pub seed: u64,
    pub mean_alg: f64,
    pub mean_panorama: f64,
    pub opt: u64,
    pub opt_method: OptMethod,
    pub ratio: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub guarantee: f64,
    pub pass: bool,
}

/// Per-trial totals `(P, panorama payment)`; trial `t` uses stream `t` of a ChaCha
/// generator seeded with `seed`. Results are in trial order.
pub fn trial_totals(inst: &Instance, alloc: &Allocator, trials: u64, seed: u64) -> Result<Vec<(u64, u64)>, EvalError> {
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t);
            let trace = allocators::run_with(inst, alloc, &mut rng, seed)?;
            Ok((trace.totals.p, trace.totals.panorama))
        })
        .collect()
}

/// Mean of `P` over the trials against the offline optimum. The interval is the
/// two-sided Hoeffding interval at `1 - 2·CI_DELTA` with payments normalized by
/// `Σ_a B_a`; the estimate passes when the interval reaches the guarantee.
pub fn estimate_ratio(inst: &Instance, alloc: &Allocator, trials: u64, seed: u64) -> Result<RatioEstimate, EvalError> {
    if trials == 0 {
        return Err(EvalError::NoTrials);
    }
    let totals = trial_totals(inst, alloc, trials, seed)?;
    let n = trials as f64;
    let mean_alg = totals.iter().map(|t| t.0 as f64).sum::<f64>() / n;
    let mean_panorama = totals.iter().map(|t| t.1 as f64).sum::<f64>() / n;
    let opt = offline_opt(inst);
    let scale = inst.total_budget() as f64;
    let margin = if alloc.variant().is_none() { 0.0 } else { scale * hoeffding_margin(trials, CI_DELTA) };
    let denom = opt.value.max(1) as f64;
    let guarantee = rat::to_f64(&alloc.guarantee());
    let ratio = if opt.value == 0 { 1.0 } else { mean_alg / denom };
    let (ci_low, ci_high) = if opt.value == 0 { (1.0, 1.0) } else { ((mean_alg - margin) / denom, (mean_alg + margin) / denom) };
    let pass = ci_high >= guarantee - 1e-9;
    Ok(RatioEstimate { trials, seed, mean_alg, mean_panorama, opt: opt.value, opt_method: opt.method, ratio, ci_low, ci_high, guarantee, pass })
}

/// The guarantee of a PanOCS variant at a point with `k` covering rounds, the first
/// `k_large` of them large.
pub fn point_bound(variant: &Variant, k: usize, k_large: usize) -> Q {
    let g = variant.gamma();
    let e = match variant {
        Variant::Independent => 0,
        Variant::Warmup | Variant::Large { .. } => k_large.saturating_sub(1),
        Variant::General { kmax, .. } => k.min(*kmax).saturating_sub(1),
    };
    qi(1) - rat::pow2_neg(k as i64) * rat::powi(&(qi(1) - g), e as i64)
}

/// Covering rounds of a query and the length of their large-bid prefix.
pub fn query_counts(script: &Script, adv: usize, y: u64) -> (usize, usize) {
    let mut k = 0;
    let mut kl = 0;
    let mut small = false;
    for p in &script.pairs {
        if let Some(c) = p.candidates.iter().find(|c| c.adv == adv && c.subset.contains(y)) {
            k += 1;
            small |= !c.large();
            if !small {
                kl += 1;
            }
        }
    }
    (k, kl)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VerifyMode {
    Exact,
    MonteCarlo { trials: u64, delta: f64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointCheck {
    pub advertiser: String,
    pub point: u64,
    pub k: usize,
    pub k_large: usize,
    pub probability: String,
    pub probability_f64: f64,
    pub bound: String,
    pub bound_f64: f64,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PanocsReport {
    pub variant: String,
    pub mode: String,
    pub points: Vec<PointCheck>,
    /// Largest deviation of a round marginal from `1/2` (exact mode: must be 0).
    pub marginal_deviation: f64,
    pub pass: bool,
}

/// Checks every queried point of a script against the variant's guarantee and
/// every round marginal against `1/2`.
pub fn verify_panocs_bound(variant: &Variant, script: &Script, mode: VerifyMode) -> Result<PanocsReport, EvalError> {
    let half = rat::half();
    let mut points = Vec::new();
    let (probs, margin, marginal_deviation, fair): (Vec<(Q, f64)>, f64, f64, bool) = match mode {
        VerifyMode::Exact => {
            let r = exact::enumerate(variant, script)?;
            let dev = r.marginals.iter().map(|m| (rat::to_f64(m) - 0.5).abs()).fold(0.0, f64::max);
            let fair = r.marginals.iter().all(|m| *m == half);
            (r.assigned.into_iter().map(|p| { let f = rat::to_f64(&p); (p, f) }).collect(), 0.0, dev, fair)
        }
        VerifyMode::MonteCarlo { trials, delta, seed } => {
            if trials == 0 {
                return Err(EvalError::NoTrials);
            }
            let r = exact::monte_carlo(variant, script, trials, seed);
            let n = trials as f64;
            let sigma = 0.5 / n.sqrt();
            let dev = r.first.iter().map(|&f| (f as f64 / n - 0.5).abs()).fold(0.0, f64::max);
            let probs = r.assigned.iter().map(|&a| (rat::q(a as i64, trials as i64), a as f64 / n)).collect();
            (probs, hoeffding_margin(trials, delta), dev, dev <= 3.0 * sigma)
        }
    };
    for (&(adv, y), (p, pf)) in script.queries.iter().zip(probs) {
        let (k, kl) = query_counts(script, adv, y);
        let b = point_bound(variant, k, kl);
        let bf = rat::to_f64(&b);
        let pass = match mode {
            VerifyMode::Exact => p >= b,
            VerifyMode::MonteCarlo { .. } => bf - pf <= margin,
        };
        points.push(PointCheck {
            advertiser: script.names[adv].clone(),
            point: y,
            k,
            k_large: kl,
            probability: rat::format(&p),
            probability_f64: pf,
            bound: rat::format(&b),
            bound_f64: bf,
            margin,
            pass,
        });
    }
    let pass = fair && points.iter().all(|p| p.pass);
    let mode = match mode {
        VerifyMode::Exact => "exact".to_string(),
        VerifyMode::MonteCarlo { .. } => "mc".to_string(),
    };
    Ok(PanocsReport { variant: variant.kind().to_string(), mode, points, marginal_deviation, pass })
}

/// `OPT ≤ D/Γ` for a finished run on a brute-forceable instance.
pub fn dual_upper_bound_sanity(inst: &Instance, trace: &RunTrace, ratio: &Q) -> Result<bool, EvalError> {
    if *ratio <= Q::zero() {
        return Err(EvalError::NonPositiveRatio);
    }
    let Some(d) = &trace.totals.dual else {
        return Ok(false);
    };
    let opt = offline_opt(inst);
    Ok(opt.method == OptMethod::Brute && qu(opt.value) * ratio <= *d)
}

/// Expected panorama payment after every step, exactly: deterministic pieces
/// count in full, randomized ones with their assignment probability.
pub fn expected_panorama(inst: &Instance, trace: &RunTrace, variant: &Variant, budget: u64) -> Result<Vec<Q>, EvalError> {
    let script = trace.script(inst);
    let pieces = trace.pieces(inst);
    let profile = exact::assignment_profile(variant, &script, budget)?;
    let mut det = vec![false; pieces.len()];
    let mut round = 0usize;
    let mut out = Vec::with_capacity(trace.records.len());
    for r in &trace.records {
        match &r.kind {
            RoundKind::Deterministic { advertiser, subset } => {
                for (pi, &(a, s, _)) in pieces.iter().enumerate() {
                    det[pi] |= a == *advertiser && subset.contains(s);
                }
            }
            RoundKind::Randomized { .. } => round += 1,
            _ => {}
        }
        let mut total = Q::zero();
        for (pi, &(_, s, e)) in pieces.iter().enumerate() {
            let len = qu(e - s);
            if det[pi] {
                total += len;
            } else if round > 0 {
                total += len * &profile[round - 1][pi];
            }
        }
        out.push(total);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerReport {
    pub steps: usize,
    /// Smallest `E[panorama] - P̄` over the steps.
    pub min_gap: Q,
    /// First violated relation, if any.
    pub violation: Option<String>,
}

/// Per step: `P ≥` realized panorama payment, `E[panorama] ≥ x̄ ≥ P̄ = D`.
pub fn ledger_check(inst: &Instance, trace: &RunTrace, variant: &Variant, budget: u64) -> Result<LedgerReport, EvalError> {
    let expected = expected_panorama(inst, trace, variant, budget)?;
    let mut min_gap: Option<Q> = None;
    let mut violation = None;
    for (t, (s, e)) in trace.steps.iter().zip(&expected).enumerate() {
        let pbar = s.pbar.clone().unwrap_or_else(Q::zero);
        let xbar = s.xbar.clone().unwrap_or_else(|| pbar.clone());
        let gap = e - &pbar;
        if min_gap.as_ref().is_none_or(|g| gap < *g) {
            min_gap = Some(gap);
        }
        let bad = if s.p < s.panorama {
            Some("P below panorama payment")
        } else if *e < xbar {
            Some("expected panorama below the integrated guarantee")
        } else if xbar < pbar {
            Some("integrated guarantee below Pbar")
        } else if s.dual.as_ref() != Some(&pbar) {
            Some("Pbar differs from D")
        } else {
            None
        };
        if violation.is_none() {
            violation = bad.map(|m| format!("step {t}: {m}"));
        }
    }
    Ok(LedgerReport { steps: expected.len(), min_gap: min_gap.unwrap_or_else(Q::zero), violation })
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const REPORT_HEADER: &str = "instance,algo,table,trials,seed,mean_alg,opt,ratio,ci_low,ci_high,guarantee,pass";

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub instance: String,
    pub algo: String,
    pub table: String,
    pub estimate: RatioEstimate,
}

impl ReportRow {
    pub fn to_csv(&self) -> String {
        let e = &self.estimate;
        format!(
            "{},{},{},{},{},{:.6},{},{:.6},{:.6},{:.6},{:.6},{}",
            csv_field(&self.instance),
            self.algo,
            csv_field(&self.table),
            e.trials,
            e.seed,
            e.mean_alg,
            e.opt,
            e.ratio,
            e.ci_low,
            e.ci_high,
            e.guarantee,
            e.pass
        )
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Appends a row, writing the schema-version row and header to a new or empty file
/// and refusing files with another schema.
pub fn append_report(path: &Path, row: &ReportRow) -> Result<(), EvalError> {
    let version = format!("# schema-version: {REPORT_SCHEMA_VERSION}");
    let shown = path.display().to_string();
    let fresh = match std::fs::File::open(path) {
        Ok(f) => {
            let mut lines = BufReader::new(f).lines();
            match lines.next().transpose()? {
                None => true,
                Some(first) => {
                    let second = lines.next().transpose()?;
                    if first != version || second.as_deref() != Some(REPORT_HEADER) {
                        return Err(EvalError::Report(shown, "existing file has another schema".into()));
                    }
                    false
                }
            }
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => true,
        Err(e) => return Err(e.into()),
    };
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    if fresh {
        writeln!(f, "{version}\n{REPORT_HEADER}")?;
    }
    writeln!(f, "{}", row.to_csv())?;
    Ok(())
}
