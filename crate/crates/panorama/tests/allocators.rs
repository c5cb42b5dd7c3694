//! Allocator runs: ledger, dual feasibility, payments and trace replay.

use panorama::allocators::rules::{msvv_alpha, msvv_beta};
use panorama::allocators::{dual, replay, run, Algo, Allocator, RoundKind, RunTrace};
use panorama::eval::{assignment_value, ledger_check, offline_opt, OptMethod};
use panorama::instance::{generate, Advertiser, Family, GenParams, Instance};
use panorama::panocs::exact::ENUMERATION_BUDGET;
use panorama::rat::{half, q, qi, qu, Q};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gen(family: Family, advertisers: usize, impressions: usize, seed: u64) -> Instance {
    generate(family, GenParams { advertisers, impressions, seed }).unwrap()
}

fn small_bid_instance(advertisers: usize, impressions: usize, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let advs: Vec<Advertiser> =
        (0..advertisers).map(|a| Advertiser { id: format!("a{a}"), budget: rng.gen_range(4..=12) }).collect();
    let rows = (0..impressions)
        .map(|i| (format!("i{i}"), advs.iter().map(|a| rng.gen_range(0..=a.budget / 2)).collect()))
        .collect();
    Instance::new(1, advs, rows).unwrap()
}

fn assignment(trace: &RunTrace) -> Vec<Option<usize>> {
    trace
        .records
        .iter()
        .map(|r| match &r.kind {
            RoundKind::Deterministic { advertiser, .. } | RoundKind::Fallback { advertiser } => Some(*advertiser),
            RoundKind::Randomized { candidates, selected } => Some(candidates[usize::from(*selected) - 1].advertiser),
            RoundKind::Unassigned => None,
        })
        .collect()
}

#[test]
fn ledger_holds_at_every_step() {
    for family in Family::ALL {
        for seed in 0..6 {
            let inst = gen(family, 3, 6, seed);
            for algo in [Algo::Basic, Algo::Hybrid] {
                let alloc = Allocator::default_for(algo, &inst);
                let trace = run(&inst, &alloc, seed).unwrap();
                let r = ledger_check(&inst, &trace, alloc.variant().unwrap(), ENUMERATION_BUDGET).unwrap();
                assert_eq!(r.violation, None, "{family} {algo} seed {seed}");
                assert_eq!(r.steps, 6);
            }
        }
    }
}

#[test]
fn basic_ledger_is_dual_feasible_on_all_large() {
    for seed in 0..8 {
        let inst = gen(Family::AllLarge, 4, 12, seed);
        let alloc = Allocator::default_for(Algo::Basic, &inst);
        let t = run(&inst, &alloc, seed).unwrap();
        let c = dual::check(&inst, &t.alphas(), &t.betas(), &alloc.guarantee()).unwrap();
        assert!(c.feasible(), "seed {seed}: {:?}", c);
        assert_eq!(t.totals.pbar, t.totals.dual);
    }
}

#[test]
fn hybrid_ledger_is_dual_feasible_on_mixed() {
    for seed in 0..8 {
        let inst = gen(Family::Mixed, 4, 12, seed);
        let alloc = Allocator::default_for(Algo::Hybrid, &inst);
        let t = run(&inst, &alloc, seed).unwrap();
        let c = dual::check(&inst, &t.alphas(), &t.betas(), &alloc.guarantee()).unwrap();
        assert!(c.feasible(), "seed {seed}: {:?}", c);
    }
}

#[test]
fn dual_check_rejects_oversized_instances() {
    let inst = gen(Family::Mixed, 2, dual::MAX_IMPRESSIONS + 1, 0);
    let n = inst.num_impressions();
    assert!(dual::check(&inst, &[qi(0), qi(0)], &vec![qi(0); n], &half()).is_none());
}

#[test]
fn payments_match_the_assignment() {
    for family in Family::ALL {
        for seed in 0..10 {
            let inst = gen(family, 4, 10, seed);
            for algo in Algo::ALL {
                let t = run(&inst, &Allocator::default_for(algo, &inst), seed).unwrap();
                let a = assignment(&t);
                assert_eq!(t.totals.p, assignment_value(&inst, &a), "{family} {algo} seed {seed}");
                assert!(t.totals.p <= inst.total_budget());
                assert!(t.totals.panorama <= t.totals.p);
            }
        }
    }
}

#[test]
fn greedy_is_half_competitive() {
    for family in Family::ALL {
        for seed in 0..20 {
            let inst = gen(family, 3, 8, seed);
            let opt = offline_opt(&inst);
            assert_eq!(opt.method, OptMethod::Brute);
            let t = run(&inst, &Allocator::Greedy, seed).unwrap();
            assert!(2 * t.totals.p >= opt.value, "{family} seed {seed}");
        }
    }
}

#[test]
fn msvv_alpha_closed_form() {
    assert_eq!(msvv_alpha(&half()), q(2, 9));
    assert_eq!(msvv_alpha(&qi(1)), q(5, 9));
    assert_eq!(msvv_beta(&qi(1)), q(4, 9));
    let h = q(1, 1_000_000);
    let slope = msvv_beta(&h) / &h;
    assert_eq!(slope, q(5, 9));
}

#[test]
fn msvv_feasibility_inequalities_on_grid() {
    let gamma = q(5, 9);
    let mut min: Option<Q> = None;
    for i in 0..=1000 {
        let b = q(i, 1000);
        let slack = if b <= half() {
            qi(3) * msvv_alpha(&b) - qi(2) * msvv_alpha(&(&b + half())) + qi(1) - &gamma
        } else {
            qi(3) * msvv_alpha(&b) - qi(2) * msvv_alpha(&qi(1)) + qi(2) * (qi(1) - &b) - &gamma
        };
        min = Some(min.map_or(slack.clone(), |m: Q| m.min(slack)));
    }
    assert_eq!(min.unwrap(), qi(0));
}

#[test]
fn msvv_is_five_ninths_competitive_on_small_bids() {
    for seed in 0..60 {
        let inst = small_bid_instance(3, 8, seed);
        assert!(inst.small_bids());
        let opt = offline_opt(&inst);
        assert_eq!(opt.method, OptMethod::Brute);
        let t = run(&inst, &Allocator::Msvv, seed).unwrap();
        let ratio = if opt.value == 0 { 1.0 } else { t.totals.p as f64 / opt.value as f64 };
        assert!(ratio >= 5.0 / 9.0 - 1e-9, "seed {seed}: {} / {}", t.totals.p, opt.value);
        assert!(qu(opt.value) * q(5, 9) <= t.totals.dual.clone().unwrap());
        let c = dual::check(&inst, &t.alphas(), &t.betas(), &q(5, 9)).unwrap();
        assert!(c.feasible(), "seed {seed}: {:?}", c);
    }
}

#[test]
fn traces_replay_after_serialization() {
    for algo in Algo::ALL {
        let inst = gen(Family::Mixed, 3, 7, 4);
        let t = run(&inst, &Allocator::default_for(algo, &inst), 9).unwrap();
        let back = RunTrace::from_json(&t.to_json()).unwrap();
        assert_eq!(back, t);
        let (i2, a2, t2) = replay(&back).unwrap();
        assert_eq!(i2, inst);
        assert_eq!(a2.algo(), algo);
        assert_eq!(t2, t);
    }
}

#[test]
fn replay_rejects_edited_totals() {
    let inst = gen(Family::AllLarge, 3, 6, 2);
    let mut t = run(&inst, &Allocator::default_for(Algo::Basic, &inst), 1).unwrap();
    t.totals.p += 1;
    assert!(replay(&t).is_err());
}

#[test]
fn runs_are_reproducible() {
    let inst = gen(Family::UniformRandom, 4, 10, 3);
    for algo in Algo::ALL {
        let alloc = Allocator::default_for(algo, &inst);
        assert_eq!(run(&inst, &alloc, 42).unwrap(), run(&inst, &alloc, 42).unwrap());
    }
}
