//! Offline optimum, ratio estimates, ledgers and the CSV report.

use panorama::allocators::{run, Algo, Allocator};
use panorama::eval::{
    append_report, assignment_value, dual_upper_bound_sanity, estimate_ratio, offline_opt, offline_opt_with_budget,
    EvalError, OptMethod, ReportRow, REPORT_HEADER,
};
use panorama::instance::{generate, Advertiser, Family, GenParams, Instance};
use panorama::rat::{q, Q};

fn gen(family: Family, advertisers: usize, impressions: usize, seed: u64) -> Instance {
    generate(family, GenParams { advertisers, impressions, seed }).unwrap()
}

fn two_by_three() -> Instance {
    let advs = vec![Advertiser { id: "a1".into(), budget: 2 }, Advertiser { id: "a2".into(), budget: 2 }];
    let rows = (1..=3).map(|i| (format!("i{i}"), vec![1, 1])).collect();
    Instance::new(1, advs, rows).unwrap()
}

/// Plain enumeration of all `(A+1)^I` assignments.
fn enumerate_opt(inst: &Instance) -> u64 {
    let na = inst.num_advertisers();
    let ni = inst.num_impressions();
    let mut best = 0;
    let mut choice = vec![0usize; ni];
    loop {
        let a: Vec<Option<usize>> = choice.iter().map(|&c| c.checked_sub(1)).collect();
        best = best.max(assignment_value(inst, &a));
        let mut i = 0;
        while i < ni && choice[i] == na {
            choice[i] = 0;
            i += 1;
        }
        if i == ni {
            return best;
        }
        choice[i] += 1;
    }
}

#[test]
fn offline_opt_matches_plain_enumeration() {
    for family in Family::ALL {
        for seed in 0..12 {
            let inst = gen(family, 3, 7, seed);
            let opt = offline_opt(&inst);
            assert_eq!(opt.method, OptMethod::Brute);
            assert_eq!(opt.value, enumerate_opt(&inst), "{family} seed {seed}");
            assert_eq!(assignment_value(&inst, &opt.assignment), opt.value);
        }
    }
}

#[test]
fn two_by_three_optimum() {
    let opt = offline_opt(&two_by_three());
    assert_eq!(opt.value, 3);
}

#[test]
fn single_advertiser_optimum_is_capped_sum() {
    for (bids, budget) in [(vec![1, 2, 3], 10), (vec![4, 4, 4], 9), (vec![0, 0], 3)] {
        let rows = bids.iter().enumerate().map(|(i, &b)| (format!("i{i}"), vec![b])).collect();
        let inst = Instance::new(1, vec![Advertiser { id: "a".into(), budget }], rows).unwrap();
        assert_eq!(offline_opt(&inst).value, bids.iter().sum::<u64>().min(budget));
    }
}

#[test]
fn bound_fallback_dominates_the_optimum() {
    let inst = gen(Family::UniformRandom, 3, 8, 1);
    let exact = offline_opt(&inst);
    let bound = offline_opt_with_budget(&inst, 1);
    assert_eq!(bound.method, OptMethod::Bound);
    assert!(bound.value >= exact.value);
}

#[test]
fn independent_allocator_on_two_by_three() {
    let inst = two_by_three();
    let e = estimate_ratio(&inst, &Allocator::default_for(Algo::Independent, &inst), 20_000, 7).unwrap();
    assert!((e.mean_alg - 2.75).abs() <= 0.01 * 2.75, "{}", e.mean_alg);
    assert!((e.mean_panorama - 2.5).abs() <= 0.01 * 2.5, "{}", e.mean_panorama);
    assert_eq!(e.opt, 3);
}

#[test]
fn estimates_are_deterministic_and_pass() {
    let inst = gen(Family::AllLarge, 3, 6, 5);
    for algo in Algo::ALL {
        let alloc = Allocator::default_for(algo, &inst);
        let a = estimate_ratio(&inst, &alloc, 400, 3).unwrap();
        let b = estimate_ratio(&inst, &alloc, 400, 3).unwrap();
        assert_eq!(a, b);
        if algo != Algo::Msvv {
            assert!(a.pass, "{algo}: {a:?}");
        }
    }
}

#[test]
fn zero_trials_are_rejected() {
    let inst = two_by_three();
    assert!(matches!(estimate_ratio(&inst, &Allocator::Greedy, 0, 0), Err(EvalError::NoTrials)));
}

#[test]
fn dual_bounds_the_optimum() {
    for seed in 0..10 {
        let inst = gen(Family::AllLarge, 3, 8, seed);
        let alloc = Allocator::default_for(Algo::Basic, &inst);
        let t = run(&inst, &alloc, seed).unwrap();
        assert!(dual_upper_bound_sanity(&inst, &t, &alloc.guarantee()).unwrap());
    }
    let inst = two_by_three();
    let t = run(&inst, &Allocator::default_for(Algo::Basic, &inst), 0).unwrap();
    assert!(matches!(dual_upper_bound_sanity(&inst, &t, &Q::from_integer(0.into())), Err(EvalError::NonPositiveRatio)));
    assert!(matches!(dual_upper_bound_sanity(&inst, &t, &q(-1, 2)), Err(EvalError::NonPositiveRatio)));
}

#[test]
fn report_rows_append_under_one_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let inst = two_by_three();
    let estimate = estimate_ratio(&inst, &Allocator::Greedy, 10, 1).unwrap();
    let row = ReportRow { instance: "ex,2".into(), algo: "greedy".into(), table: String::new(), estimate };
    append_report(&path, &row).unwrap();
    append_report(&path, &row).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], "# schema-version: 1");
    assert_eq!(lines[1], REPORT_HEADER);
    assert!(lines[2].starts_with("\"ex,2\",greedy,,10,1,"));
    assert_eq!(lines[2], lines[3]);

    let other = dir.path().join("o.csv");
    std::fs::write(&other, "# schema-version: 0\nx\n").unwrap();
    assert!(matches!(append_report(&other, &row), Err(EvalError::Report(..))));
}
