mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use tl_core::eval::{all_tuples, evaluate, FunctionRegistry, Mode, Valuation};
use tl_core::expr::{compact_vars, free_vars, substitute, Expr, Var};
use tl_core::graph::{generate_corpus, CorpusMode, Graph};
use tl_core::harness::random_conjunctive;
use tl_core::syntax::{parse, render};
use tl_core::tensor::evaluate_all;
use tl_core::treewidth::{normalize, rewrite_min_vars, Hypergraph, Strategy as Elim};
use tl_core::value::Value;

use common::*;

fn funcs() -> FunctionRegistry {
    FunctionRegistry::new()
}

fn eval_at(e: &Expr, g: &Graph, nu: &[usize]) -> Result<Value, tl_core::eval::EvalError> {
    evaluate(e, g, &Valuation::from_tuple(nu), Mode::Exact, &funcs())
}

/// Both sides evaluate to the same value, or both fail.
fn same(a: &Result<Value, tl_core::eval::EvalError>, b: &Result<Value, tl_core::eval::EvalError>) -> bool {
    match (a, b) {
        (Ok(x), Ok(y)) => x == y,
        (Err(_), Err(_)) => true,
        _ => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn parse_inverts_render(e in any_expr(4)) {
        let s = render(&e);
        let back = parse(&s).unwrap_or_else(|err| panic!("{s}: {err}"));
        prop_assert_eq!(&back, &e, "{}", s);
        prop_assert_eq!(render(&back), s);
    }

    #[test]
    fn evaluation_is_equivariant((g, sigma, nu) in scene(6, 4), e in any_expr(4)) {
        let h = g.permute(&sigma);
        let moved: Vec<usize> = nu.iter().map(|&v| sigma[v]).collect();
        let (a, b) = (eval_at(&e, &g, &nu), eval_at(&e, &h, &moved));
        prop_assert!(same(&a, &b), "{} : {:?} vs {:?}", render(&e), a, b);
    }

    #[test]
    fn tables_match_interpreter(g in graph(4), e in any_expr(3)) {
        let tuples = all_tuples(g.n(), 3);
        if let Ok(fast) = evaluate_all(&e, &g, &tuples, Mode::Exact, &funcs()) {
            for (t, f) in tuples.iter().zip(&fast) {
                let slow = eval_at(&e, &g, t).unwrap();
                prop_assert_eq!(&slow, f, "{} at {:?}", render(&e), t);
            }
        }
    }

    #[test]
    fn renaming_preserves_meaning((g, _s, nu) in scene(5, 4), e in sum_expr(4)) {
        let c = compact_vars(&e);
        prop_assert!(same(&eval_at(&e, &g, &nu), &eval_at(&c, &g, &nu)), "{} vs {}", render(&e), render(&c));
        // x1 <-> x3 on free occurrences, with the valuation swapped to match
        let m: BTreeMap<Var, Var> = [(1, 3), (3, 1)].into_iter().collect();
        let s = substitute(&e, &m);
        let swapped = vec![nu[2], nu[1], nu[0], nu[3]];
        prop_assert!(same(&eval_at(&e, &g, &nu), &eval_at(&s, &g, &swapped)), "{} vs {}", render(&e), render(&s));
    }

    #[test]
    fn normal_form_and_rewrite_preserve_meaning((g, _s, nu) in scene(4, 4), e in sum_expr(4)) {
        let want = eval_at(&e, &g, &nu).unwrap();
        let nf = normalize(&e).unwrap().to_expr();
        prop_assert_eq!(&eval_at(&nf, &g, &nu).unwrap(), &want, "{} -> {}", render(&e), render(&nf));
        let rw = rewrite_min_vars(&e).expr;
        prop_assert_eq!(&eval_at(&rw, &g, &nu).unwrap(), &want, "{} -> {}", render(&e), render(&rw));
        prop_assert!(free_vars(&rw).is_subset(&free_vars(&e)));
    }

    #[test]
    fn conjunctive_rewrites_are_narrow(seed in any::<u64>(), g in graph(4)) {
        let e = random_conjunctive(5, 2, seed);
        let rw = rewrite_min_vars(&e);
        let vars = tl_core::expr::used_vars(&rw.expr).len();
        prop_assert!(vars <= rw.width + 1, "{} -> {} (width {})", render(&e), render(&rw.expr), rw.width);
        for v in 0..g.n() {
            prop_assert_eq!(eval_at(&e, &g, &[v]).unwrap(), eval_at(&rw.expr, &g, &[v]).unwrap());
        }
    }

    #[test]
    fn float_mode_tracks_exact_mode((g, _s, nu) in scene(5, 3), e in any_expr(3)) {
        let exact = eval_at(&e, &g, &nu);
        let float = evaluate(&e, &g, &Valuation::from_tuple(&nu), Mode::Float, &funcs());
        match (exact, float) {
            (Ok(a), Ok(b)) => prop_assert!(a.close_to(&b, 1e-9), "{}: {} vs {}", render(&e), a, b),
            (Err(_), _) => {}
            (Ok(a), Err(b)) => prop_assert!(false, "{}: exact {} but float failed: {}", render(&e), a, b),
        }
    }

    #[test]
    fn guarded_sum_is_edge_weighted_sum((g, _s, nu) in scene(5, 2), body in sum_expr(1)) {
        let body = substitute(&body, &[(1, 2)].into_iter().collect());
        if !free_vars(&body).iter().all(|&v| v == 2) {
            return Ok(());
        }
        let guarded = Expr::guarded("sum", 1, 2, body.clone()).unwrap();
        let plain = Expr::sum(2, Expr::mul(Expr::edge(1, 2), body));
        prop_assert_eq!(eval_at(&guarded, &g, &nu).unwrap(), eval_at(&plain, &g, &nu).unwrap());
    }

    #[test]
    fn elimination_matches_brute_force(seed in any::<u64>()) {
        let e = random_conjunctive(6, 0, seed);
        let nf = normalize(&e).unwrap();
        for t in &nf.terms {
            let h = t.hypergraph(&nf.free);
            let best = h.elimination_order(Elim::Exhaustive);
            prop_assert_eq!(best.induced_width, brute_width(&h));
            prop_assert_eq!(simulate(&h, &best.order), best.induced_width);
            let greedy = h.elimination_order(Elim::MinFill);
            prop_assert!(greedy.induced_width >= best.induced_width);
            prop_assert_eq!(simulate(&h, &greedy.order), greedy.induced_width);
            check_decomposition(&h, &best);
            check_decomposition(&h, &greedy);
        }
    }
}

fn primal(h: &Hypergraph) -> BTreeMap<Var, BTreeSet<Var>> {
    let mut adj: BTreeMap<Var, BTreeSet<Var>> = h.vertices.iter().map(|&v| (v, BTreeSet::new())).collect();
    for e in &h.edges {
        for &a in e {
            for &b in e {
                if a != b {
                    adj.get_mut(&a).unwrap().insert(b);
                }
            }
        }
    }
    adj
}

/// Width of eliminating `order[f..]` from the back, free vertices never eliminated.
fn simulate(h: &Hypergraph, order: &[Var]) -> usize {
    let f = h.distinguished.len();
    let mut adj = primal(h);
    let mut worst = f;
    for &v in order[f..].iter().rev() {
        let nb = adj.remove(&v).unwrap();
        worst = worst.max(nb.len() + 1);
        for &a in &nb {
            let s = adj.get_mut(&a).unwrap();
            s.remove(&v);
            s.extend(nb.iter().copied().filter(|&b| b != a));
        }
    }
    worst.saturating_sub(1)
}

fn brute_width(h: &Hypergraph) -> usize {
    let inner: Vec<Var> = h.vertices.iter().copied().filter(|v| !h.distinguished.contains(v)).collect();
    let head: Vec<Var> = h.distinguished.iter().copied().collect();
    let mut best = usize::MAX;
    permutations(&inner, &mut Vec::new(), &mut |p| {
        let mut order = head.clone();
        order.extend_from_slice(p);
        best = best.min(simulate(h, &order));
    });
    best
}

fn permutations(rest: &[Var], cur: &mut Vec<Var>, f: &mut dyn FnMut(&[Var])) {
    if rest.is_empty() {
        f(cur);
        return;
    }
    for i in 0..rest.len() {
        let mut r = rest.to_vec();
        let x = r.remove(i);
        cur.push(x);
        permutations(&r, cur, f);
        cur.pop();
    }
}

fn check_decomposition(h: &Hypergraph, o: &tl_core::treewidth::EliminationOrder) {
    let td = o.tree_decomposition();
    assert_eq!(td.width(), o.induced_width.max(h.distinguished.len().saturating_sub(1)));
    for e in &h.edges {
        assert!(td.bags.iter().any(|b| e.is_subset(b)), "edge {e:?} not covered by {:?}", td.bags);
    }
    for &v in &h.vertices {
        let holding: Vec<usize> = (0..td.bags.len()).filter(|&i| td.bags[i].contains(&v)).collect();
        assert!(!holding.is_empty());
        // connected: exactly one holding bag has its parent outside the set
        let tops = holding.iter().filter(|&&i| td.parent[i].is_none_or(|p| !td.bags[p].contains(&v))).count();
        assert_eq!(tops, 1, "vertex {v} bags {:?}", td.bags);
    }
}

/// Canonical form by minimising the adjacency code over all n! relabellings.
fn brute_canonical(g: &Graph) -> Vec<bool> {
    let n = g.n();
    let verts: Vec<Var> = (0..n as Var).collect();
    let mut best: Option<Vec<bool>> = None;
    permutations(&verts, &mut Vec::new(), &mut |p| {
        let mut code = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in i + 1..n {
                code.push(g.has_edge(p[i] as usize, p[j] as usize));
            }
        }
        if best.as_ref().is_none_or(|b| code < *b) {
            best = Some(code);
        }
    });
    best.unwrap_or_default()
}

fn all_graphs(n: usize) -> Vec<Graph> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    (0u64..1 << pairs.len())
        .map(|mask| {
            let e: Vec<_> = pairs.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &p)| p).collect();
            Graph::unlabelled(n, &e).unwrap()
        })
        .collect()
}

#[test]
fn guarded_mean_is_not_an_edge_weighted_mean() {
    // star centre with three leaves, one of them heavy
    let g = Graph::new(4, &[(0, 1), (0, 2), (0, 3)], Some(vec![vec![Value::int(0)], vec![Value::int(3)], vec![Value::int(0)], vec![Value::int(0)]])).unwrap();
    let guarded = Expr::guarded("mean", 1, 2, Expr::label(1, 2)).unwrap();
    let plain = Expr::agg("mean", 2, Expr::mul(Expr::edge(1, 2), Expr::label(1, 2)));
    assert_eq!(eval_at(&guarded, &g, &[0]).unwrap(), Value::int(1));
    assert_eq!(eval_at(&plain, &g, &[0]).unwrap(), Value::Exact(tl_core::num::rat(3, 4)));
}

#[test]
fn exhaustive_corpus_matches_brute_force_isomorphism_classes() {
    for (n, classes) in [(1, 1), (2, 2), (3, 4), (4, 11), (5, 34), (6, 156)] {
        let oracle: BTreeSet<Vec<bool>> = all_graphs(n).iter().map(brute_canonical).collect();
        assert_eq!(oracle.len(), classes);
        let corpus = generate_corpus(n, &CorpusMode::Exhaustive, None).unwrap();
        let forms: BTreeSet<Vec<bool>> = corpus.iter().map(brute_canonical).collect();
        assert_eq!(corpus.len(), classes);
        assert_eq!(forms, oracle);
    }
}
