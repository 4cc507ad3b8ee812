#![allow(dead_code)]

use proptest::prelude::*;
use std::collections::BTreeMap;

use tl_core::expr::{substitute, CmpOp, Expr, Var};
use tl_core::graph::Graph;
use tl_core::num::rat;
use tl_core::value::Value;

pub const ELL: usize = 2;

fn coef() -> impl Strategy<Value = tl_core::num::Rat> {
    prop::sample::select(vec![(-2, 1), (-1, 1), (-1, 2), (1, 3), (1, 1), (3, 2), (0, 1)]).prop_map(|(n, d)| rat(n, d))
}

fn leaf(vars: Var) -> impl Strategy<Value = Expr> {
    prop_oneof![
        Just(Expr::One),
        (1..=vars, 1..=vars, any::<bool>()).prop_map(|(i, j, eq)| Expr::EqPred(i, j, if eq { CmpOp::Eq } else { CmpOp::Neq })),
        (1..=vars, 1..=vars).prop_map(|(i, j)| Expr::edge(i, j)),
        (1..=ELL as u32, 1..=vars).prop_map(|(s, i)| Expr::label(s, i)),
    ]
}

/// Sums, products, scaling, `+` and `-`; no functions or other aggregations.
pub fn sum_expr(vars: Var) -> impl Strategy<Value = Expr> {
    leaf(vars).prop_recursive(4, 24, 2, move |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
            (coef(), inner.clone()).prop_map(|(c, a)| Expr::scale(c, a)),
            (1..=vars, inner).prop_map(|(v, a)| Expr::sum(v, a)),
        ]
    })
}

/// Everything the AST has, including functions and all aggregation forms.
pub fn any_expr(vars: Var) -> impl Strategy<Value = Expr> {
    let aggs = prop::sample::select(vec!["sum", "max", "min", "mean"]);
    leaf(vars).prop_recursive(4, 24, 2, move |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
            (coef(), inner.clone()).prop_map(|(c, a)| Expr::scale(c, a)),
            (1..=vars, inner.clone()).prop_map(|(v, a)| Expr::sum(v, a)),
            (aggs.clone(), 1..=vars, inner.clone()).prop_map(|(n, v, a)| Expr::agg(n, v, a)),
            (aggs.clone(), 1..=vars, 1..=vars, inner.clone()).prop_filter_map("distinct guard", move |(n, i, j, a)| {
                // force the free part of the body onto x_j
                let m: BTreeMap<Var, Var> = (1..=vars).map(|v| (v, j)).collect();
                Expr::guarded(n, i, j, substitute(&a, &m)).ok()
            }),
            inner.clone().prop_map(|a| Expr::apply("relu", vec![a])),
        ]
    })
}

pub fn graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        (Just(n), prop::collection::vec(any::<bool>(), pairs), prop::collection::vec(prop::collection::vec(-2i64..=3, ELL), n))
    })
    .prop_map(|(n, bits, labels)| {
        let mut e = Vec::new();
        let mut b = bits.into_iter();
        for u in 0..n {
            for v in u + 1..n {
                if b.next().unwrap() {
                    e.push((u, v));
                }
            }
        }
        let ls = labels.into_iter().map(|l| l.into_iter().map(Value::int).collect()).collect();
        Graph::new(n, &e, Some(ls)).unwrap()
    })
}

/// A graph with a permutation and a valuation of `x1..x_vars`.
pub fn scene(max_n: usize, vars: usize) -> impl Strategy<Value = (Graph, Vec<usize>, Vec<usize>)> {
    graph(max_n).prop_flat_map(move |g| {
        let n = g.n();
        (Just(g), Just((0..n).collect::<Vec<_>>()).prop_shuffle(), prop::collection::vec(0..n, vars))
    })
}
