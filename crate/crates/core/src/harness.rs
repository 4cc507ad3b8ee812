//! Equivalence relations induced by expressions and by WL colourings, and
//! empirical checks of the inclusions between them.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eval::{all_tuples, EvalError, FunctionRegistry, Mode};
use crate::expr::{Expr, Var};
use crate::graph::Graph;
use crate::logic::{synthesize_cr_distinguisher, CrSynthesizer, LogicError};
use crate::num::{rat, Rat};
use crate::syntax::render;
use crate::tensor::evaluate_all;
use crate::value::Value;
use crate::wl::{refine_full, Algorithm, Interner, WlError};

#[derive(Clone, Debug, PartialEq)]
pub enum HarnessError {
    SizeMismatch { expected: usize, found: usize },
    ItemMismatch,
    Arity(usize),
    Eval(EvalError),
    Wl(WlError),
    Logic(LogicError),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::SizeMismatch { expected, found } => write!(f, "corpus graphs differ in size ({expected} vs {found})"),
            HarnessError::ItemMismatch => f.write_str("partitions are over different items"),
            HarnessError::Arity(s) => write!(f, "item arity must be 0 or 1, got {s}"),
            HarnessError::Eval(e) => write!(f, "{e}"),
            HarnessError::Wl(e) => write!(f, "{e}"),
            HarnessError::Logic(e) => write!(f, "{e}"),
        }
    }
}

impl From<EvalError> for HarnessError {
    fn from(e: EvalError) -> Self {
        HarnessError::Eval(e)
    }
}

impl From<WlError> for HarnessError {
    fn from(e: WlError) -> Self {
        HarnessError::Wl(e)
    }
}

impl From<LogicError> for HarnessError {
    fn from(e: LogicError) -> Self {
        HarnessError::Logic(e)
    }
}

/// A graph of the corpus, with a vertex tuple of length 0 or 1.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Item {
    pub graph: usize,
    pub tuple: Vec<usize>,
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tuple.as_slice() {
            [] => write!(f, "G{}", self.graph),
            t => write!(f, "G{}:{t:?}", self.graph),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub arity: usize,
    pub items: Vec<Item>,
    /// Dense class ids, numbered by first occurrence.
    pub class: Vec<usize>,
}

impl Partition {
    pub fn from_keys<K: Ord>(arity: usize, items: Vec<Item>, keys: Vec<K>) -> Partition {
        let mut ids: BTreeMap<K, usize> = BTreeMap::new();
        let class = keys
            .into_iter()
            .map(|k| {
                let next = ids.len();
                *ids.entry(k).or_insert(next)
            })
            .collect();
        Partition { arity, items, class }
    }

    pub fn class_count(&self) -> usize {
        self.class.iter().max().map_or(0, |m| m + 1)
    }

    /// Item indices per class.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.class_count()];
        for (i, &c) in self.class.iter().enumerate() {
            out[c].push(i);
        }
        out
    }
}

/// `true` iff every class of `p` lies inside a class of `q`.
pub fn refines(p: &Partition, q: &Partition) -> Result<bool, HarnessError> {
    if p.items != q.items {
        return Err(HarnessError::ItemMismatch);
    }
    let mut map = BTreeMap::new();
    Ok(p.class.iter().zip(&q.class).all(|(a, b)| *map.entry(*a).or_insert(*b) == *b))
}

fn corpus_size(corpus: &[Graph]) -> Result<usize, HarnessError> {
    let n = corpus.first().map_or(0, Graph::n);
    match corpus.iter().find(|g| g.n() != n) {
        Some(g) => Err(HarnessError::SizeMismatch { expected: n, found: g.n() }),
        None => Ok(n),
    }
}

pub fn items(corpus: &[Graph], s: usize) -> Vec<Item> {
    corpus.iter().enumerate().flat_map(|(gi, g)| all_tuples(g.n(), s).into_iter().map(move |tuple| Item { graph: gi, tuple })).collect()
}

/// `values[item][expr]` over all items of arity `s`.
pub fn value_grid(exprs: &[Expr], corpus: &[Graph], s: usize, mode: Mode) -> Result<Vec<Vec<Value>>, HarnessError> {
    if s > 1 {
        return Err(HarnessError::Arity(s));
    }
    corpus_size(corpus)?;
    let funcs = FunctionRegistry::new();
    let mut out = Vec::new();
    for g in corpus {
        let tuples = all_tuples(g.n(), s);
        let cols = exprs.iter().map(|e| evaluate_all(e, g, &tuples, mode, &funcs)).collect::<Result<Vec<_>, _>>()?;
        for r in 0..tuples.len() {
            out.push(cols.iter().map(|c| c[r].clone()).collect());
        }
    }
    Ok(out)
}

fn float_close(a: &[Value], b: &[Value]) -> bool {
    a.iter().zip(b).all(|(x, y)| {
        let (x, y) = (x.to_f64(), y.to_f64());
        x == y || (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0)
    })
}

/// Items share a class iff every expression agrees on them (within `1e-9` in float mode).
pub fn induced_partition(exprs: &[Expr], corpus: &[Graph], s: usize, mode: Mode) -> Result<Partition, HarnessError> {
    let grid = value_grid(exprs, corpus, s, mode)?;
    let its = items(corpus, s);
    match mode {
        Mode::Exact => {
            let keys = grid
                .iter()
                .map(|row| {
                    let mut b = Vec::new();
                    for v in row {
                        v.canonical_bytes(&mut b);
                    }
                    b
                })
                .collect();
            Ok(Partition::from_keys(s, its, keys))
        }
        Mode::Float => {
            // greedy: join the first class whose representative is close
            let mut reps: Vec<usize> = Vec::new();
            let mut class = Vec::with_capacity(grid.len());
            for (i, row) in grid.iter().enumerate() {
                match reps.iter().position(|&r| float_close(&grid[r], row)) {
                    Some(c) => class.push(c),
                    None => {
                        class.push(reps.len());
                        reps.push(i);
                    }
                }
            }
            Ok(Partition { arity: s, items: its, class })
        }
    }
}

/// Classes of `algo` after `t` rounds, on vertices (`s = 1`) or graphs (`s = 0`).
pub fn wl_partition(corpus: &[Graph], algo: Algorithm, t: usize, s: usize) -> Result<Partition, HarnessError> {
    if s > 1 {
        return Err(HarnessError::Arity(s));
    }
    corpus_size(corpus)?;
    let mut interner = Interner::new();
    let mut keys = Vec::new();
    for g in corpus {
        let tr = refine_full(g, algo, t, &mut interner)?;
        if s == 0 {
            keys.push(tr.graph_label(t, &mut interner)?);
        } else {
            for v in 0..g.n() {
                keys.push(tr.vertex_label(v, t)?);
            }
        }
    }
    Ok(Partition::from_keys(s, items(corpus, s), keys))
}

/// Shape of sampled expressions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExprShape {
    pub k_vars: usize,
    pub depth: usize,
    pub guarded: bool,
    /// Free variables are `x1..x_arity`; 0 or 1.
    pub arity: usize,
    /// Label predicates `P_1..P_ell` may appear.
    pub ell: usize,
}

const COEFFS: [(i64, i64); 6] = [(-2, 1), (-1, 1), (-1, 2), (1, 2), (1, 1), (2, 1)];

struct Sampler<'a> {
    rng: ChaCha8Rng,
    shape: &'a ExprShape,
}

impl Sampler<'_> {
    fn coeff(&mut self) -> Rat {
        let (n, d) = COEFFS[self.rng.gen_range(0..COEFFS.len())];
        rat(n, d)
    }

    fn pick(&mut self, scope: &[Var]) -> Var {
        scope[self.rng.gen_range(0..scope.len())]
    }

    fn leaf(&mut self, scope: &[Var]) -> Expr {
        if scope.is_empty() {
            return Expr::One;
        }
        let choices = if self.shape.ell > 0 { 4 } else { 3 };
        match self.rng.gen_range(0..choices) {
            0 => Expr::One,
            1 => {
                let (i, j) = (self.pick(scope), self.pick(scope));
                if self.rng.gen_bool(0.5) {
                    Expr::eq(i, j)
                } else {
                    Expr::neq(i, j)
                }
            }
            2 => Expr::edge(self.pick(scope), self.pick(scope)),
            _ => Expr::label(self.rng.gen_range(1..=self.shape.ell as u32), self.pick(scope)),
        }
    }

    fn general(&mut self, scope: &[Var], depth: usize, size: usize) -> Expr {
        let roll = self.rng.gen_range(0..10);
        if size == 0 || (roll < 3 && !(depth > 0 && scope.is_empty())) {
            return self.leaf(scope);
        }
        match roll {
            3 | 4 => Expr::mul(self.general(scope, depth, size - 1), self.general(scope, depth, size - 1)),
            5 => Expr::add(self.general(scope, depth, size - 1), self.general(scope, depth, size - 1)),
            6 => {
                let c = self.coeff();
                Expr::scale(c, self.general(scope, depth, size - 1))
            }
            _ if depth == 0 => self.leaf(scope),
            _ => {
                let y = self.rng.gen_range(1..=self.shape.k_vars as Var);
                let mut inner: Vec<Var> = scope.iter().copied().filter(|&v| v != y).collect();
                inner.push(y);
                Expr::sum(y, self.general(&inner, depth - 1, size - 1))
            }
        }
    }

    /// Guarded two-variable expressions with `x` free.
    fn guarded(&mut self, x: Var, depth: usize, size: usize) -> Expr {
        let roll = self.rng.gen_range(0..10);
        if size == 0 || roll < 3 {
            return match self.rng.gen_range(0..3) {
                0 => Expr::One,
                1 if self.shape.ell > 0 => Expr::label(self.rng.gen_range(1..=self.shape.ell as u32), x),
                _ => Expr::eq(x, x),
            };
        }
        match roll {
            3 | 4 => Expr::mul(self.guarded(x, depth, size - 1), self.guarded(x, depth, size - 1)),
            5 => Expr::add(self.guarded(x, depth, size - 1), self.guarded(x, depth, size - 1)),
            6 => {
                let c = self.coeff();
                Expr::scale(c, self.guarded(x, depth, size - 1))
            }
            _ if depth == 0 => Expr::eq(x, x),
            _ => {
                let y = 3 - x;
                let body = self.guarded(y, depth - 1, size - 1);
                let e = if self.rng.gen_bool(0.5) { Expr::edge(x, y) } else { Expr::edge(y, x) };
                Expr::sum(y, Expr::mul(e, body))
            }
        }
    }
}

/// Grammar-directed sample: function-free, coefficients in
/// `{-2, -1, -1/2, 1/2, 1, 2}`, at most `k_vars` variables, summation depth
/// at most `depth`, free variables among `x1..x_arity`.
///
/// Guarded samples use `x1, x2` only and are closed off with a sum over
/// `x1` when `arity` is 0 (that sum is unguarded, and counts towards depth).
pub fn random_expr(shape: &ExprShape, seed: u64) -> Expr {
    let mut s = Sampler { rng: ChaCha8Rng::seed_from_u64(seed), shape };
    const SIZE: usize = 6;
    if shape.guarded {
        if shape.arity == 0 {
            if shape.depth == 0 {
                return Expr::One;
            }
            return Expr::sum(1, s.guarded(1, shape.depth - 1, SIZE));
        }
        return s.guarded(1, shape.depth, SIZE);
    }
    let scope: Vec<Var> = (1..=shape.arity.min(shape.k_vars) as Var).collect();
    s.general(&scope, shape.depth, SIZE)
}

/// `Σ_{x2..x_m} Π atoms` with `x1` free: edges, label predicates and
/// (in)equalities over at most `max_vars` variables.
pub fn random_conjunctive(max_vars: usize, ell: usize, seed: u64) -> Expr {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(1..=max_vars.max(1)) as Var;
    let atoms = rng.gen_range(1..=2 * m as usize);
    let mut f = Vec::with_capacity(atoms);
    for _ in 0..atoms {
        let (i, j) = (rng.gen_range(1..=m), rng.gen_range(1..=m));
        f.push(match rng.gen_range(0..8) {
            0..=4 if i != j => Expr::edge(i, j),
            5 if ell > 0 => Expr::label(rng.gen_range(1..=ell as u32), i),
            6 if i != j => Expr::neq(i, j),
            7 => Expr::eq(i, j),
            _ => Expr::edge(i, m.min(i % m + 1)),
        });
    }
    let body = Expr::product_of(f);
    let c = COEFFS[rng.gen_range(0..COEFFS.len())];
    let vars: Vec<Var> = (2..=m).collect();
    Expr::scale(rat(c.0, c.1), Expr::sums(&vars, body))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Theorem {
    /// Vertex `vwl_k^(t)` refines `k+1`-variable depth-`t` expressions.
    Thm2,
    /// Colour refinement against guarded expressions, both directions.
    Thm3,
    /// Graph-level `cr^(t)` equals `wl_1^(t)`, and closed 2-variable depth `t+1`
    /// expressions respect it.
    Thm4_1,
    /// Graph-level `wl_k^(t)` refines closed `k+1`-variable depth `t+1` expressions.
    Thm4_2,
}

impl Theorem {
    pub fn tag(self) -> &'static str {
        match self {
            Theorem::Thm2 => "thm2",
            Theorem::Thm3 => "thm3",
            Theorem::Thm4_1 => "thm4_1",
            Theorem::Thm4_2 => "thm4_2",
        }
    }

    pub fn from_tag(s: &str) -> Option<Theorem> {
        [Theorem::Thm2, Theorem::Thm3, Theorem::Thm4_1, Theorem::Thm4_2].into_iter().find(|t| t.tag() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    /// What failed: `upper`, `lower` or `partition`.
    pub kind: String,
    pub expr: String,
    pub a: Item,
    pub b: Item,
    pub va: Option<Value>,
    pub vb: Option<Value>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub tag: String,
    pub k: usize,
    pub t: usize,
    pub expressions: usize,
    /// Item pairs compared, summed over all sub-checks.
    pub pairs_checked: u64,
    pub violations: Vec<Violation>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Every `p`-equivalent pair gets equal values under every expression.
fn check_upper(p: &Partition, exprs: &[Expr], grid: &[Vec<Value>], report: &mut CheckReport) {
    for cls in p.classes() {
        let Some((&first, rest)) = cls.split_first() else { continue };
        report.pairs_checked += (cls.len() * (cls.len() - 1) / 2 * exprs.len()) as u64;
        for &i in rest {
            for (j, e) in exprs.iter().enumerate() {
                if grid[i][j] != grid[first][j] {
                    report.violations.push(Violation {
                        kind: String::from("upper"),
                        expr: render(e),
                        a: p.items[first].clone(),
                        b: p.items[i].clone(),
                        va: Some(grid[first][j].clone()),
                        vb: Some(grid[i][j].clone()),
                    });
                }
            }
        }
    }
}

fn check_equal(p: &Partition, q: &Partition, what: &str, report: &mut CheckReport) -> Result<(), HarnessError> {
    let n = p.items.len() as u64;
    report.pairs_checked += n * n.saturating_sub(1) / 2;
    if refines(p, q)? && refines(q, p)? {
        return Ok(());
    }
    for a in 0..p.items.len() {
        for b in a + 1..p.items.len() {
            if (p.class[a] == p.class[b]) != (q.class[a] == q.class[b]) {
                report.violations.push(Violation {
                    kind: String::from("partition"),
                    expr: String::from(what),
                    a: p.items[a].clone(),
                    b: p.items[b].clone(),
                    va: None,
                    vb: None,
                });
                return Ok(());
            }
        }
    }
    Ok(())
}

fn sample(shape: &ExprShape, n: usize, seed: u64) -> Vec<Expr> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_expr(shape, rng.gen())).collect()
}

/// Spot checks of [`synthesize_cr_distinguisher`] on this many separated pairs.
const DIRECT_PAIRS: usize = 40;

/// Runs the falsifiable directions of a theorem on `corpus` in exact mode.
pub fn check_theorem(thm: Theorem, corpus: &[Graph], k: usize, t: usize, n_exprs: usize, seed: u64) -> Result<CheckReport, HarnessError> {
    let n = corpus_size(corpus)?;
    let ell = corpus.first().map_or(0, Graph::ell);
    let mut report = CheckReport { tag: String::from(thm.tag()), k, t, expressions: n_exprs, pairs_checked: 0, violations: Vec::new() };
    match thm {
        Theorem::Thm2 => {
            let shape = ExprShape { k_vars: k + 1, depth: t, guarded: false, arity: 1, ell };
            let exprs = sample(&shape, n_exprs, seed);
            let p = wl_partition(corpus, Algorithm::Wl(k), t, 1)?;
            check_upper(&p, &exprs, &value_grid(&exprs, corpus, 1, Mode::Exact)?, &mut report);
        }
        Theorem::Thm3 => {
            let shape = ExprShape { k_vars: 2, depth: t, guarded: true, arity: 1, ell };
            let exprs = sample(&shape, n_exprs, seed);
            let p = wl_partition(corpus, Algorithm::Cr, t, 1)?;
            check_upper(&p, &exprs, &value_grid(&exprs, corpus, 1, Mode::Exact)?, &mut report);
            check_cr_lower(corpus, n, t, seed, &mut report)?;
        }
        Theorem::Thm4_1 => {
            let cr = wl_partition(corpus, Algorithm::Cr, t, 0)?;
            let wl1 = wl_partition(corpus, Algorithm::Wl(1), t, 0)?;
            check_equal(&cr, &wl1, "gcr vs gwl_1", &mut report)?;
            let shape = ExprShape { k_vars: 2, depth: t + 1, guarded: false, arity: 0, ell };
            let exprs = sample(&shape, n_exprs, seed);
            check_upper(&cr, &exprs, &value_grid(&exprs, corpus, 0, Mode::Exact)?, &mut report);
        }
        Theorem::Thm4_2 => {
            let p = wl_partition(corpus, Algorithm::Wl(k), t, 0)?;
            let shape = ExprShape { k_vars: k + 1, depth: t + 1, guarded: false, arity: 0, ell };
            let exprs = sample(&shape, n_exprs, seed);
            check_upper(&p, &exprs, &value_grid(&exprs, corpus, 0, Mode::Exact)?, &mut report);
        }
    }
    Ok(report)
}

/// Every colour class at every round up to `t` is cut out exactly by its
/// synthesised expression; then a few pairs go through the two-graph path.
fn check_cr_lower(corpus: &[Graph], n: usize, t: usize, seed: u64, report: &mut CheckReport) -> Result<(), HarnessError> {
    let mut syn = CrSynthesizer::new(corpus, t)?;
    let its = items(corpus, 1);
    let funcs = FunctionRegistry::new();
    let tuples = all_tuples(n, 1);
    for r in 0..=t {
        let mut sizes: BTreeMap<u32, usize> = BTreeMap::new();
        for it in &its {
            *sizes.entry(syn.color(it.graph, it.tuple[0], r)).or_default() += 1;
        }
        for (&c, &size) in &sizes {
            let e = syn.expr(r, c);
            report.pairs_checked += (size * (its.len() - size)) as u64;
            let mut inside: Option<Item> = None;
            for (gi, g) in corpus.iter().enumerate() {
                let vals = evaluate_all(&e, g, &tuples, Mode::Exact, &funcs)?;
                for (v, val) in vals.into_iter().enumerate() {
                    let member = syn.color(gi, v, r) == c;
                    let want = if member { Value::one() } else { Value::zero() };
                    let item = Item { graph: gi, tuple: vec![v] };
                    if member && inside.is_none() {
                        inside = Some(item.clone());
                    }
                    if val != want {
                        let other = inside.clone().unwrap_or_else(|| item.clone());
                        report.violations.push(Violation {
                            kind: String::from("lower"),
                            expr: format!("colour {c} at round {r}"),
                            a: other,
                            b: item,
                            va: Some(want),
                            vb: Some(val),
                        });
                    }
                }
            }
        }
    }

    let mut pairs = Vec::new();
    for a in 0..its.len() {
        for b in a + 1..its.len() {
            if syn.color(its[a].graph, its[a].tuple[0], t) != syn.color(its[b].graph, its[b].tuple[0], t) {
                pairs.push((a, b));
            }
        }
    }
    pairs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed));
    for &(a, b) in pairs.iter().take(DIRECT_PAIRS) {
        let (ia, ib) = (&its[a], &its[b]);
        let (g, h) = (&corpus[ia.graph], &corpus[ib.graph]);
        let (v, w) = (ia.tuple[0], ib.tuple[0]);
        let d = synthesize_cr_distinguisher(g, v, h, w, t)?;
        let ok = match &d {
            None => false,
            Some(d) => {
                let x = crate::eval::evaluate(&d.expr, g, &crate::eval::Valuation::from_tuple(&[v]), Mode::Exact, &funcs)?;
                let y = crate::eval::evaluate(&d.expr, h, &crate::eval::Valuation::from_tuple(&[w]), Mode::Exact, &funcs)?;
                x != y
            }
        };
        report.pairs_checked += 1;
        if !ok {
            report.violations.push(Violation {
                kind: String::from("lower"),
                expr: d.map_or(String::from("no distinguisher"), |d| render(&d.expr)),
                a: ia.clone(),
                b: ib.clone(),
                va: None,
                vb: None,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::analyze;
    use crate::syntax::parse;

    fn c6_vs_two_triangles() -> Vec<Graph> {
        vec![Graph::cycle(6), Graph::cycle(3).disjoint_union(&Graph::cycle(3)).unwrap()]
    }

    #[test]
    fn triangle_count_splits_the_pair() {
        let tau = parse("sum x1 : sum x2 : sum x3 : E(x1,x2) * E(x2,x3) * E(x1,x3)").unwrap();
        let c = c6_vs_two_triangles();
        assert_eq!(induced_partition(&[tau], &c, 0, Mode::Exact).unwrap().class_count(), 2);
        assert_eq!(induced_partition(&[Expr::One], &c, 0, Mode::Exact).unwrap().class_count(), 1);
        assert_eq!(induced_partition(&[], &c, 1, Mode::Exact).unwrap().class_count(), 1);
    }

    #[test]
    fn wl_partitions_on_the_pair() {
        let c = c6_vs_two_triangles();
        for t in 0..4 {
            assert_eq!(wl_partition(&c, Algorithm::Cr, t, 0).unwrap().class_count(), 1);
        }
        assert_eq!(wl_partition(&c, Algorithm::Wl(2), 2, 0).unwrap().class_count(), 2);
        assert_eq!(wl_partition(&c, Algorithm::Cr, 0, 1).unwrap().class_count(), 1);
        let mixed = [Graph::cycle(6), Graph::cycle(5)];
        assert!(matches!(wl_partition(&mixed, Algorithm::Cr, 1, 1), Err(HarnessError::SizeMismatch { .. })));
    }

    #[test]
    fn refinement_order() {
        let c = c6_vs_two_triangles();
        let its = items(&c, 1);
        let ident = Partition::from_keys(1, its.clone(), (0..its.len()).collect());
        let one = Partition::from_keys(1, its.clone(), vec![0; its.len()]);
        assert!(refines(&ident, &one).unwrap());
        assert!(!refines(&one, &ident).unwrap());
        assert!(refines(&one, &one).unwrap());
        let other = Partition::from_keys(0, items(&c, 0), vec![0, 0]);
        assert_eq!(refines(&one, &other), Err(HarnessError::ItemMismatch));
    }

    #[test]
    fn samples_respect_shape() {
        for guarded in [false, true] {
            for arity in [0, 1] {
                for seed in 0..200 {
                    let shape = ExprShape { k_vars: if guarded { 2 } else { 3 }, depth: 2, guarded, arity, ell: 1 };
                    let e = random_expr(&shape, seed);
                    let a = analyze(&e);
                    assert!(a.var_count <= shape.k_vars, "{}", render(&e));
                    assert!(a.sum_depth <= 2);
                    assert!(a.function_free);
                    assert!(a.free_vars.iter().all(|&v| v as usize <= arity));
                    if guarded && arity == 1 {
                        assert!(a.guarded, "{}", render(&e));
                    }
                    assert_eq!(e, random_expr(&shape, seed));
                }
            }
        }
    }

    #[test]
    fn conjunctive_samples_have_one_free_variable() {
        for seed in 0..100 {
            let e = random_conjunctive(5, 1, seed);
            let a = analyze(&e);
            assert!(a.var_count <= 5);
            assert!(a.free_vars.iter().all(|&v| v == 1));
        }
    }
}
