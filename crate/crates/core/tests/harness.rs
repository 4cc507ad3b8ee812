use std::collections::BTreeSet;
use std::time::Instant;

use tl_core::graph::{generate_corpus, CorpusMode, Graph};
use tl_core::harness::*;
use tl_core::syntax::render;
use tl_core::wl::Algorithm;

fn exhaustive(n: usize) -> Vec<Graph> {
    generate_corpus(n, &CorpusMode::Exhaustive, None).unwrap()
}

#[test]
fn sampler_is_not_degenerate() {
    let shape = ExprShape { k_vars: 3, depth: 2, guarded: false, arity: 1, ell: 0 };
    let distinct: BTreeSet<String> = (0..500).map(|s| render(&random_expr(&shape, s))).collect();
    assert!(distinct.len() >= 100);
}

#[test]
fn theorem_checks_on_five_vertices() {
    let c = exhaustive(5);
    for t in 1..=3 {
        let now = Instant::now();
        let r = check_theorem(Theorem::Thm3, &c, 1, t, 500, 7).unwrap();
        eprintln!("thm3 t={t} pairs={} viol={} {:?}", r.pairs_checked, r.violations.len(), now.elapsed());
        assert!(r.passed(), "{:?}", r.violations.first());
    }
    for t in 1..=2 {
        let now = Instant::now();
        let r = check_theorem(Theorem::Thm2, &c, 2, t, 300, 7).unwrap();
        eprintln!("thm2 t={t} pairs={} viol={} {:?}", r.pairs_checked, r.violations.len(), now.elapsed());
        assert!(r.passed(), "{:?}", r.violations.first());
    }
    for t in 0..=3 {
        let r = check_theorem(Theorem::Thm4_1, &c, 1, t, 100, 7).unwrap();
        assert!(r.passed(), "{:?}", r.violations.first());
    }
    let r = check_theorem(Theorem::Thm4_2, &c, 2, 1, 100, 7).unwrap();
    assert!(r.passed(), "{:?}", r.violations.first());
}

#[test]
fn wl2_refines_cr_on_vertices() {
    for n in 1..=5 {
        let c = exhaustive(n);
        for t in 0..=3 {
            let w2 = wl_partition(&c, Algorithm::Wl(2), t, 1).unwrap();
            let w1 = wl_partition(&c, Algorithm::Wl(1), t, 1).unwrap();
            assert!(refines(&w2, &w1).unwrap());
        }
    }
}
