//! Acceptance suite: one pass/fail line per criterion.

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use panorama::allocators::rules::msvv_alpha;
use panorama::allocators::{dual, run, Algo, Allocator};
use panorama::eval::properties::{random_sequence, SequenceParams};
use panorama::eval::{estimate_ratio, ledger_check, offline_opt, verify_panocs_bound, OptMethod, VerifyMode};
use panorama::instance::{generate, Advertiser, Family, GenParams, Instance};
use panorama::panocs::exact::{enumerate, Script, ENUMERATION_BUDGET};
use panorama::panocs::{Variant, VariantKind};
use panorama::rat::{self, half, pow2_neg, powi, q, qi, Q};
use panorama::tables::{gamma_general_limit, gamma_large, p_general};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn cli(args: &[&str]) -> Result<(String, Duration), String> {
    let t0 = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_panorama")).args(args).output().map_err(|e| e.to_string())?;
    let took = t0.elapsed();
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    ensure(out.status.success(), format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)))?;
    Ok((stdout, took))
}

/// The decimal at the end of the first `Gamma = ...` line.
fn printed_ratio(out: &str) -> Result<f64, String> {
    let line = out.lines().find(|l| l.starts_with("Gamma = ")).ok_or("no Gamma line")?;
    let value = line.trim_start_matches("Gamma = ").split(" = ").last().unwrap_or_default();
    let value = value.split_whitespace().next().unwrap_or_default();
    value.parse().map_err(|_| format!("unparsable `{line}`"))
}

fn c1() -> Outcome {
    let (out, took) = cli(&["lp", "basic", "--gamma", "0.05144", "--closed-form"])?;
    let g = printed_ratio(&out)?;
    let gamma = q(643, 12500);
    let expect = (qi(3) + qi(2) * &gamma) / (qi(6) + qi(3) * &gamma);
    ensure(out.contains(&format!("Gamma = {} ", rat::format(&expect))), "ratio differs from (3+2γ)/(6+3γ)")?;
    ensure(g > 0.5041 && g < 0.5042, format!("Γ = {g}"))?;
    ensure(out.contains("min slack 0, not-to-a tight true, bound-at-limit tight true"), "certificate line")?;
    ensure(took < Duration::from_secs(1), format!("{took:?}"))?;
    Ok(format!("Γ = {} = {g:.9}, tight rows exact, {took:.2?}", rat::format(&expect)))
}

fn c2() -> Outcome {
    let (out, took) = cli(&["lp", "basic", "--gamma", "0.01245/18", "--kmax", "18"])?;
    let g = printed_ratio(&out)?;
    ensure(g > 0.50005 + 1e-7, format!("Γ = {g}"))?;
    ensure(took < Duration::from_secs(1), format!("{took:?}"))?;
    Ok(format!("Γ = {g:.9}, {took:.2?}"))
}

fn c3() -> Outcome {
    let (out, took) = cli(&["lp", "hybrid", "--kmax", "20"])?;
    let g = printed_ratio(&out)?;
    let v: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("max violation "))
        .ok_or("no violation line")?
        .parse()
        .map_err(|_| "unparsable violation")?;
    ensure(g >= 0.5016, format!("Γ = {g}"))?;
    ensure(v <= 1e-9, format!("violation {v}"))?;
    ensure(took < Duration::from_secs(60), format!("{took:?}"))?;
    Ok(format!("Γ = {g:.9}, max violation {v:e}, {took:.2?}"))
}

fn c4() -> Outcome {
    let large = gamma_large(&q(4, 9));
    ensure(large == q(100, 1944), format!("γ_large = {large}"))?;
    let p = rat::to_f64(&p_general());
    let general = gamma_general_limit(p, 18);
    let oracle = (1.0 - 0.44285f64) * (1.0 - (-0.44285f64).exp()) / 16.0 / 18.0;
    ensure((general - oracle).abs() <= 1e-6, "formula mismatch")?;
    ensure(general >= 0.01245 / 18.0 - 1e-6, format!("γ_general = {general}"))?;
    Ok(format!("γ_large = 100/1944, γ_general = {general:.9} ≥ {:.9}", 0.01245 / 18.0))
}

fn chain_bound(gamma: &Q, k: usize) -> Q {
    qi(1) - pow2_neg(k as i64) * powi(&(qi(1) - gamma), k.saturating_sub(1) as i64)
}

fn c5() -> Outcome {
    let t0 = Instant::now();
    let mut f = vec![qi(1), qi(1)];
    for m in 2..=6 {
        let next = &f[m - 1] - &f[m - 2] / qi(64);
        f.push(next);
    }
    ensure(f[2] == q(63, 64) && f[3] == q(62, 64), "recursion seeds")?;
    for k in 1..=6 {
        let w = enumerate(&Variant::Warmup, &Script::chain(k)).map_err(|e| e.to_string())?;
        ensure(w.assigned[0] >= chain_bound(&q(1, 64), k), format!("warmup k={k}"))?;
        ensure(w.assigned[0] == qi(1) - pow2_neg(k as i64) * &f[k], format!("warmup recursion k={k}"))?;
        let l = enumerate(&Variant::large(), &Script::chain(k)).map_err(|e| e.to_string())?;
        ensure(l.assigned[0] >= chain_bound(&q(643, 12500), k), format!("large k={k}"))?;
    }
    let took = t0.elapsed();
    ensure(took < Duration::from_secs(300), format!("{took:?}"))?;
    Ok(format!("chains k=1..6 meet the bound, f_2 = 63/64, f_3 = 62/64, {took:.2?}"))
}

fn corpus() -> Result<Vec<(String, Script)>, String> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../panorama/tests/data/scripts");
    let mut files: Vec<PathBuf> =
        std::fs::read_dir(dir).map_err(|e| e.to_string())?.filter_map(|e| e.ok().map(|e| e.path())).collect();
    files.sort();
    files
        .into_iter()
        .map(|f| {
            let text = std::fs::read_to_string(&f).map_err(|e| e.to_string())?;
            let s = Script::from_json(&text).map_err(|e| e.to_string())?;
            Ok((f.file_stem().unwrap_or_default().to_string_lossy().into_owned(), s))
        })
        .collect()
}

fn c6() -> Outcome {
    let scripts = corpus()?;
    let mut exact = 0;
    let mut worst: f64 = 0.0;
    for (name, s) in &scripts {
        let mut bare = s.clone();
        bare.queries.clear();
        for kind in VariantKind::ALL {
            let v = Variant::of(kind, 18);
            let r = enumerate(&v, &bare).map_err(|e| e.to_string())?;
            ensure(r.marginals.iter().all(|m| *m == half()), format!("{name} {kind}: exact marginal"))?;
            exact += r.marginals.len();
            let mc = verify_panocs_bound(&v, s, VerifyMode::MonteCarlo { trials: 100_000, delta: 0.001, seed: 6 })
                .map_err(|e| e.to_string())?;
            let sigma = 0.5 / (100_000f64).sqrt();
            ensure(mc.marginal_deviation <= 3.0 * sigma, format!("{name} {kind}: deviation {}", mc.marginal_deviation))?;
            worst = worst.max(mc.marginal_deviation / sigma);
        }
    }
    Ok(format!("{} scripts, {exact} exact marginals = 1/2, Monte Carlo max deviation {worst:.2}σ", scripts.len()))
}

fn c7() -> Outcome {
    let jobs: Vec<(Family, u64)> = Family::ALL.iter().flat_map(|&f| (0..250).map(move |s| (f, s))).collect();
    let bad: Vec<String> = jobs
        .par_iter()
        .flat_map_iter(|&(family, seed)| {
            let inst = generate(family, GenParams { advertisers: 3, impressions: 6, seed }).expect("valid parameters");
            [Algo::Basic, Algo::Hybrid].into_iter().filter_map(move |algo| {
                let alloc = Allocator::default_for(algo, &inst);
                let verdict = run(&inst, &alloc, seed).map_err(|e| e.to_string()).and_then(|t| {
                    let v = alloc.variant().expect("primal-dual allocator");
                    ledger_check(&inst, &t, v, ENUMERATION_BUDGET).map_err(|e| e.to_string())
                });
                match verdict {
                    Ok(r) if r.violation.is_none() => None,
                    Ok(r) => Some(format!("{family} seed {seed} {algo}: {}", r.violation.unwrap_or_default())),
                    Err(e) => Some(format!("{family} seed {seed} {algo}: {e}")),
                }
            })
        })
        .collect();
    ensure(bad.is_empty(), bad.first().cloned().unwrap_or_default())?;
    Ok(format!("{} instances, {} runs, ledger holds at every step", jobs.len(), 2 * jobs.len()))
}

fn c8() -> Outcome {
    let mut worst = f64::INFINITY;
    for (family, algo) in [(Family::AllLarge, Algo::Basic), (Family::Mixed, Algo::Hybrid)] {
        for seed in 0..20 {
            let inst = generate(family, GenParams { advertisers: 4, impressions: 14, seed }).map_err(|e| e.to_string())?;
            let alloc = Allocator::default_for(algo, &inst);
            let t = run(&inst, &alloc, seed).map_err(|e| e.to_string())?;
            let c = dual::check(&inst, &t.alphas(), &t.betas(), &alloc.guarantee()).ok_or("too many impressions")?;
            ensure(c.feasible(), format!("{family} {algo} seed {seed}: {c:?}"))?;
            worst = worst.min(rat::to_f64(&c.min_slack));
        }
    }
    Ok(format!("40 instances with |I| = 14, min slack {worst:.6}"))
}

fn c9() -> Outcome {
    let advs = vec![Advertiser { id: "a1".into(), budget: 2 }, Advertiser { id: "a2".into(), budget: 2 }];
    let rows = (1..=3).map(|i| (format!("i{i}"), vec![1, 1])).collect();
    let inst = Instance::new(1, advs, rows).map_err(|e| e.to_string())?;
    let e = estimate_ratio(&inst, &Allocator::default_for(Algo::Independent, &inst), 100_000, 9)
        .map_err(|e| e.to_string())?;
    ensure((e.mean_alg - 2.75).abs() <= 0.0275, format!("mean P {}", e.mean_alg))?;
    ensure((e.mean_panorama - 2.5).abs() <= 0.025, format!("mean panorama {}", e.mean_panorama))?;
    Ok(format!("mean P {:.4}, mean panorama {:.4}", e.mean_alg, e.mean_panorama))
}

fn small_bid_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let advs: Vec<Advertiser> = (0..3).map(|a| Advertiser { id: format!("a{a}"), budget: rng.gen_range(4..=12) }).collect();
    let rows = (0..8)
        .map(|i| (format!("i{i}"), advs.iter().map(|a| rng.gen_range(0..=a.budget / 2)).collect()))
        .collect();
    Instance::new(1, advs, rows).expect("bids within budgets")
}

fn c10() -> Outcome {
    ensure(msvv_alpha(&half()) == q(2, 9) && msvv_alpha(&qi(1)) == q(5, 9), "α closed form")?;
    let gamma = q(5, 9);
    let mut min_slack: Option<Q> = None;
    for i in 0..=1000 {
        let b = q(i, 1000);
        let slack = if b <= half() {
            qi(3) * msvv_alpha(&b) - qi(2) * msvv_alpha(&(&b + half())) + qi(1) - &gamma
        } else {
            qi(3) * msvv_alpha(&b) - qi(2) * msvv_alpha(&qi(1)) + qi(2) * (qi(1) - &b) - &gamma
        };
        min_slack = Some(min_slack.map_or(slack.clone(), |m| m.min(slack)));
    }
    let min_slack = min_slack.unwrap_or_default();
    ensure(min_slack >= Q::default(), format!("grid slack {min_slack}"))?;
    let mut worst = f64::INFINITY;
    for seed in 0..200 {
        let inst = small_bid_instance(seed);
        let opt = offline_opt(&inst);
        ensure(opt.method == OptMethod::Brute, "optimum not exact")?;
        let t = run(&inst, &Allocator::Msvv, seed).map_err(|e| e.to_string())?;
        let ratio = if opt.value == 0 { 1.0 } else { t.totals.p as f64 / opt.value as f64 };
        ensure(ratio >= 5.0 / 9.0 - 1e-9, format!("seed {seed}: {}/{}", t.totals.p, opt.value))?;
        worst = worst.min(ratio);
    }
    Ok(format!("α(1/2) = 2/9, α(1) = 5/9, grid min slack {min_slack}, 200 instances, min MSVV/OPT {worst:.4}"))
}

fn c11() -> Outcome {
    let cases: Vec<u64> = (0..10_000).collect();
    let bad: Vec<String> = cases
        .par_iter()
        .filter_map(|&seed| {
            let kind = VariantKind::ALL[(seed % 4) as usize];
            let kmax = 1 + (seed / 4 % 5) as usize;
            let params = SequenceParams {
                advertisers: 2 + (seed % 5) as usize,
                rounds: 8 + (seed % 33) as usize,
                kmax,
                max_budget: 4 + seed % 13,
                det_percent: (seed % 40) as u32,
            };
            let out = random_sequence(&Variant::of(kind, kmax), params, seed);
            (!out.holds(kmax)).then(|| format!("{kind} seed {seed}: {out:?}"))
        })
        .collect();
    ensure(bad.is_empty(), bad.first().cloned().unwrap_or_default())?;
    Ok(format!("{} sequences: K-property, first-level ≤ 2·kmax, group degree ≤ 8·kmax, matching", cases.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("C1 closed-form ratio", c1),
        ("C2 general-bid ratio", c2),
        ("C3 hybrid LP", c3),
        ("C4 γ constants", c4),
        ("C5 PanOCS chains", c5),
        ("C6 marginal fairness", c6),
        ("C7 duality ledger", c7),
        ("C8 dual feasibility", c8),
        ("C9 two-by-three unit instance", c9),
        ("C10 MSVV small bids", c10),
        ("C11 structural properties", c11),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let t0 = Instant::now();
        match check() {
            Ok(detail) => println!("[PASS] {name}: {detail} ({:.1?})", t0.elapsed()),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {name}: {why} ({:.1?})", t0.elapsed());
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
