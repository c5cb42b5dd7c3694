//! Factor-revealing LPs and γ constants against frozen values.

use std::time::{Duration, Instant};

use panorama::lp::basic::build_basic_lp;
use panorama::lp::hybrid::{solve_hybrid, HYBRID_KMAX};
use panorama::lp::ACCEPT_VIOLATION;
use panorama::rat::{self, q, Q};
use panorama::tables::{
    closed_form_ratio, gamma_general_exact, gamma_general_frozen, gamma_general_limit, gamma_large,
    gamma_large_frozen, p_general, p_large, BasicTable,
};

#[test]
fn closed_form_ratio_is_certified() {
    let t0 = Instant::now();
    let t = BasicTable::closed_form(gamma_large_frozen());
    assert_eq!(*t.ratio(), q(38786, 76929));
    let g = rat::to_f64(t.ratio());
    assert!(g > 0.5041 && g < 0.5042, "{g}");
    let cert = t.certify(64);
    assert!(cert.passes(), "{:?}", cert.first_violation());
    assert!(cert.tight("not-to-a"));
    assert!(cert.tight("bound-at-limit"));
    assert!(t0.elapsed() < Duration::from_secs(1));
}

#[test]
fn closed_form_ratio_matches_formula_over_gamma() {
    for (n, d) in [(0, 1), (1, 64), (643, 12500), (1, 2), (1, 1)] {
        let g = q(n, d);
        assert_eq!(closed_form_ratio(&g), (q(3, 1) + q(2, 1) * &g) / (q(6, 1) + q(3, 1) * &g));
        assert!(BasicTable::closed_form(g).certify(40).passes());
    }
    assert_eq!(closed_form_ratio(&q(1, 1)), q(5, 9));
}

#[test]
fn general_bid_ratio_exceeds_threshold() {
    let t0 = Instant::now();
    let gamma = rat::parse("0.01245/18").unwrap();
    assert_eq!(gamma, gamma_general_frozen(18));
    let t = BasicTable::truncated(gamma.clone(), 18);
    let g = rat::to_f64(t.ratio());
    assert!((g - 0.500_053_848_872_208_9).abs() < 1e-12, "{g}");
    assert!(g > 0.50005 + 1e-7);
    assert!(t.certify(18).passes());
    assert!(t0.elapsed() < Duration::from_secs(1));
}

#[test]
fn basic_lp_optimum_dominates_truncated_table() {
    let gamma = gamma_general_frozen(18);
    let lp = build_basic_lp(&gamma, 18);
    let (x, cert) = lp.lp.solve_exact().unwrap();
    assert!(cert.exact());
    let t = BasicTable::truncated(gamma, 18);
    assert!(x[lp.gamma_var()] >= *t.ratio());
    assert!((rat::to_f64(&x[0]) - 0.500_057_618).abs() < 1e-8);
}

#[test]
fn hybrid_lp_is_certified_above_threshold() {
    let t0 = Instant::now();
    let h = solve_hybrid(&gamma_large_frozen(), HYBRID_KMAX).unwrap();
    assert!(rat::to_f64(&h.certificate.max_violation) <= ACCEPT_VIOLATION);
    assert!(h.certificate.exact());
    assert!(*h.table.ratio() >= q(5016, 10000));
    assert!(*h.table.ratio() <= h.optimum);
    assert!(t0.elapsed() < Duration::from_secs(60));
}

#[test]
fn hybrid_lp_at_two_rounds() {
    let h = solve_hybrid(&gamma_large_frozen(), 2).unwrap();
    assert_eq!(*h.table.ratio(), q(66881, 150000));
}

#[test]
fn gamma_constants() {
    assert_eq!(p_large(), q(4, 9));
    assert_eq!(gamma_large(&p_large()), q(100, 1944));
    let p = rat::to_f64(&p_general());
    assert_eq!(p, 0.44285);
    let limit = gamma_general_limit(p, 18);
    assert!((limit - 0.000_692_174_663_338_824_7).abs() < 1e-15);
    assert!(limit >= 0.01245 / 18.0 - 1e-6);
    assert!(limit >= 0.01245 / 18.0);
    let exact: Q = gamma_general_exact(&p_general(), 18);
    assert!((rat::to_f64(&exact) - 0.000_693_872_483_200_154_4).abs() < 1e-15);
    assert!(exact >= gamma_general_frozen(18));
}
