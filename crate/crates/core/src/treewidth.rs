//! Conjunctive normal forms, elimination orders and variable-minimising
//! rewrites.
//!
//! A summation-only expression expands into a linear combination of
//! conjunctive terms `c · Σ_{y..} Π atoms`. Each term's hypergraph (one edge
//! per atom, free variables distinguished) has an elimination order whose
//! width bounds how many variables an equivalent factored expression needs.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::expr::{compact_vars, free_vars, map_all_vars, max_var, substitute, CmpOp, Expr, Var};
use crate::num::Rat;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TwError {
    /// A non-sum aggregation where a conjunctive normal form was requested.
    NonSumAggregation(String),
    /// An equality pattern that asserts and denies the same equality.
    MalformedPattern(String),
}

impl fmt::Display for TwError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TwError::NonSumAggregation(a) => write!(f, "aggregation @{a} has no conjunctive normal form"),
            TwError::MalformedPattern(m) => write!(f, "malformed equality pattern: {m}"),
        }
    }
}

/// A factor of a conjunctive term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Atom {
    Edge(Var, Var),
    Label(u32, Var),
    /// Equality between two free variables.
    Eq(Var, Var),
    /// `𝟙[y = y]`, keeping an otherwise unconstrained summation variable.
    Unit(Var),
    /// A function application or aggregation, treated as a relation on its free variables.
    Opaque(Expr),
}

impl Atom {
    pub fn vars(&self) -> BTreeSet<Var> {
        match self {
            Atom::Edge(a, b) | Atom::Eq(a, b) => [*a, *b].into_iter().collect(),
            Atom::Label(_, a) | Atom::Unit(a) => [*a].into_iter().collect(),
            Atom::Opaque(e) => free_vars(e),
        }
    }

    pub fn to_expr(&self) -> Expr {
        match self {
            Atom::Edge(a, b) => Expr::edge(*a, *b),
            Atom::Label(s, a) => Expr::label(*s, *a),
            Atom::Eq(a, b) => Expr::eq(*a, *b),
            Atom::Unit(a) => Expr::eq(*a, *a),
            Atom::Opaque(e) => e.clone(),
        }
    }

    fn rename(&self, m: &BTreeMap<Var, Var>) -> Atom {
        let f = |v: &Var| *m.get(v).unwrap_or(v);
        match self {
            Atom::Edge(a, b) => Atom::Edge(f(a), f(b)),
            Atom::Label(s, a) => Atom::Label(*s, f(a)),
            Atom::Eq(a, b) => Atom::Eq(f(a), f(b)),
            Atom::Unit(a) => Atom::Unit(f(a)),
            Atom::Opaque(e) => Atom::Opaque(substitute(e, m)),
        }
    }
}

/// `coef · Σ_{bound} Π atoms`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Conjunct {
    pub coef: Rat,
    pub bound: Vec<Var>,
    pub atoms: Vec<Atom>,
}

impl Conjunct {
    pub fn to_expr(&self) -> Expr {
        let body = Expr::sums(&self.bound, Expr::product_of(self.atoms.iter().map(Atom::to_expr)));
        scaled(&self.coef, body)
    }

    pub fn hypergraph(&self, free: &BTreeSet<Var>) -> Hypergraph {
        let mut vertices: BTreeSet<Var> = free.iter().copied().collect();
        vertices.extend(self.bound.iter().copied());
        let edges: Vec<BTreeSet<Var>> = self.atoms.iter().map(Atom::vars).filter(|s| !s.is_empty()).collect();
        for e in &edges {
            vertices.extend(e.iter().copied());
        }
        Hypergraph { vertices: vertices.into_iter().collect(), edges, distinguished: free.clone() }
    }
}

fn scaled(c: &Rat, e: Expr) -> Expr {
    if c.is_one() {
        e
    } else {
        Expr::scale(c.clone(), e)
    }
}

/// A linear combination of conjunctive terms sharing the free variables `free`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalForm {
    pub free: BTreeSet<Var>,
    pub terms: Vec<Conjunct>,
    /// Source binder of each internal bound variable.
    pub origin: BTreeMap<Var, Var>,
}

impl NormalForm {
    /// Back to an expression, with bound variables compacted.
    pub fn to_expr(&self) -> Expr {
        compact_vars(&sum_terms(self.terms.iter().map(|t| (t.coef.clone(), Expr::sums(&t.bound, Expr::product_of(t.atoms.iter().map(Atom::to_expr)))))))
    }
}

/// `Σ c_i e_i`, writing `-1` coefficients as subtraction.
fn sum_terms<I: IntoIterator<Item = (Rat, Expr)>>(terms: I) -> Expr {
    let minus = Rat::from_int(-1);
    let mut acc: Option<Expr> = None;
    for (c, e) in terms {
        acc = Some(match acc {
            None => scaled(&c, e),
            Some(a) if c == minus => Expr::sub(a, e),
            Some(a) => Expr::add(a, scaled(&c, e)),
        });
    }
    acc.unwrap_or_else(Expr::zero)
}

type Raw = Vec<(Rat, Vec<Atom>, Vec<Var>)>;

struct Normalizer {
    fresh: Var,
    /// Treat non-sum aggregations as opaque atoms instead of failing.
    opaque_aggs: bool,
    /// Rewrite the inside of opaque atoms before freezing them.
    inner: Option<fn(&Expr) -> Expr>,
    origin: BTreeMap<Var, Var>,
}

impl Normalizer {
    fn next(&mut self) -> Var {
        self.fresh += 1;
        self.fresh
    }

    /// Renames every binder in `e` to a fresh variable, so later
    /// substitutions into it cannot be captured.
    fn freshen(&mut self, e: &Expr) -> Expr {
        match e {
            Expr::One | Expr::EqPred(..) | Expr::EdgePred(..) | Expr::LabelPred(..) => e.clone(),
            Expr::Product(a, b) => Expr::mul(self.freshen(a), self.freshen(b)),
            Expr::Add(a, b) => Expr::add(self.freshen(a), self.freshen(b)),
            Expr::Scale(c, a) => Expr::scale(c.clone(), self.freshen(a)),
            Expr::Apply(n, args) => Expr::Apply(n.clone(), args.iter().map(|a| self.freshen(a)).collect()),
            Expr::SumAgg(v, body) | Expr::UncondAgg(_, v, body) => {
                let z = self.next();
                let b = self.freshen(&rebind(body, *v, z));
                match e {
                    Expr::SumAgg(..) => Expr::sum(z, b),
                    Expr::UncondAgg(n, ..) => Expr::agg(n, z, b),
                    _ => unreachable!(),
                }
            }
            Expr::GuardedAgg(n, i, j, body) => {
                let z = self.next();
                let b = self.freshen(&rebind(body, *j, z));
                Expr::GuardedAgg(n.clone(), *i, z, alloc::sync::Arc::new(b))
            }
        }
    }

    fn opaque(&mut self, e: &Expr) -> Raw {
        let e = match self.inner {
            Some(f) => f(e),
            None => e.clone(),
        };
        vec![(Rat::one(), vec![Atom::Opaque(self.freshen(&e))], vec![])]
    }

    fn run(&mut self, e: &Expr) -> Result<Raw, TwError> {
        let one = |atoms: Vec<Atom>| vec![(Rat::one(), atoms, vec![])];
        Ok(match e {
            Expr::One => one(vec![]),
            Expr::EqPred(i, j, op) => match (i == j, op) {
                (true, CmpOp::Eq) => one(vec![]),
                (true, CmpOp::Neq) => vec![],
                (false, CmpOp::Eq) => one(vec![Atom::Eq(*i, *j)]),
                (false, CmpOp::Neq) => vec![(Rat::one(), vec![], vec![]), (Rat::from_int(-1), vec![Atom::Eq(*i, *j)], vec![])],
            },
            Expr::EdgePred(i, j) if i == j => vec![],
            Expr::EdgePred(i, j) => one(vec![Atom::Edge(*i, *j)]),
            Expr::LabelPred(s, i) => one(vec![Atom::Label(*s, *i)]),
            Expr::Product(a, b) => {
                let (ra, rb) = (self.run(a)?, self.run(b)?);
                let mut out = Vec::with_capacity(ra.len() * rb.len());
                for (ca, aa, ba) in &ra {
                    for (cb, ab, bb) in &rb {
                        let mut atoms = aa.clone();
                        atoms.extend(ab.iter().cloned());
                        let mut bound = ba.clone();
                        bound.extend(bb.iter().copied());
                        out.push((ca * cb, atoms, bound));
                    }
                }
                out
            }
            Expr::Add(a, b) => {
                let mut ra = self.run(a)?;
                ra.extend(self.run(b)?);
                ra
            }
            Expr::Scale(c, a) => {
                if c.is_zero() {
                    vec![]
                } else {
                    self.run(a)?.into_iter().map(|(k, at, b)| (c * &k, at, b)).collect()
                }
            }
            Expr::SumAgg(y, body) => self.bind(*y, body, None)?,
            Expr::UncondAgg(name, y, body) if name == "sum" => self.bind(*y, body, None)?,
            Expr::GuardedAgg(name, i, j, body) if name == "sum" => self.bind(*j, body, Some(*i))?,
            Expr::Apply(..) => self.opaque(e),
            Expr::UncondAgg(name, ..) | Expr::GuardedAgg(name, ..) => {
                if self.opaque_aggs {
                    self.opaque(e)
                } else {
                    return Err(TwError::NonSumAggregation(name.clone()));
                }
            }
        })
    }

    fn bind(&mut self, y: Var, body: &Expr, guard: Option<Var>) -> Result<Raw, TwError> {
        let z = self.next();
        self.origin.insert(z, y);
        let b = rebind(body, y, z);
        let b = match guard {
            Some(i) => Expr::mul(Expr::edge(i, z), b),
            None => b,
        };
        let mut out = self.run(&b)?;
        for t in &mut out {
            t.2.push(z);
        }
        Ok(out)
    }
}

/// Substitutes the free occurrences of `y` by the globally fresh `z`.
fn rebind(body: &Expr, y: Var, z: Var) -> Expr {
    let mut m = BTreeMap::new();
    m.insert(y, z);
    substitute(body, &m)
}

/// Resolves equality atoms and drops vanishing terms.
fn finalize(raw: Raw, free: &BTreeSet<Var>) -> Vec<Conjunct> {
    let mut out = Vec::new();
    'terms: for (coef, atoms, bound) in raw {
        if coef.is_zero() {
            continue;
        }
        let mut parent: BTreeMap<Var, Var> = BTreeMap::new();
        fn find(p: &mut BTreeMap<Var, Var>, v: Var) -> Var {
            let u = *p.get(&v).unwrap_or(&v);
            if u == v {
                v
            } else {
                let r = find(p, u);
                p.insert(v, r);
                r
            }
        }
        let mut rest = Vec::new();
        for a in atoms {
            match a {
                Atom::Eq(x, y) => {
                    let (rx, ry) = (find(&mut parent, x), find(&mut parent, y));
                    if rx != ry {
                        parent.insert(rx.max(ry), rx.min(ry));
                    }
                }
                other => rest.push(other),
            }
        }
        let mut classes: BTreeMap<Var, Vec<Var>> = BTreeMap::new();
        let keys: Vec<Var> = parent.keys().copied().collect();
        for v in keys {
            let r = find(&mut parent, v);
            classes.entry(r).or_default().push(v);
        }
        let mut m = BTreeMap::new();
        let mut atoms = Vec::new();
        let mut dropped = BTreeSet::new();
        for (r, mut members) in classes {
            members.push(r);
            members.sort_unstable();
            members.dedup();
            let frees: Vec<Var> = members.iter().copied().filter(|v| free.contains(v)).collect();
            let rep = match frees.first() {
                Some(&f) => f,
                None => *bound.iter().find(|b| members.contains(b)).expect("bound member"),
            };
            for &f in frees.iter().skip(1) {
                atoms.push(Atom::Eq(rep, f));
            }
            for &v in &members {
                if v != rep && !free.contains(&v) {
                    m.insert(v, rep);
                    dropped.insert(v);
                }
            }
        }
        for a in rest {
            let a = a.rename(&m);
            if let Atom::Edge(x, y) = a {
                if x == y {
                    continue 'terms;
                }
                if atoms.iter().any(|b| matches!(b, Atom::Edge(p, q) if (*p, *q) == (x, y) || (*p, *q) == (y, x))) {
                    continue;
                }
            }
            atoms.push(a);
        }
        let bound: Vec<Var> = bound.into_iter().filter(|v| !dropped.contains(v)).collect();
        for &y in &bound {
            if !atoms.iter().any(|a| a.vars().contains(&y)) {
                atoms.push(Atom::Unit(y));
            }
        }
        out.push(Conjunct { coef, bound, atoms });
    }
    out
}

fn normalize_with(e: &Expr, opaque_aggs: bool, inner: Option<fn(&Expr) -> Expr>) -> Result<NormalForm, TwError> {
    let free = free_vars(e);
    let mut nz = Normalizer { fresh: max_var(e).max(1000), opaque_aggs, inner, origin: BTreeMap::new() };
    let raw = nz.run(e)?;
    Ok(NormalForm { terms: finalize(raw, &free), free, origin: nz.origin })
}

/// Expands a summation-only expression into conjunctive terms.
///
/// Function applications become opaque atoms over their free variables.
/// Aggregations other than `sum` are rejected.
pub fn normalize(e: &Expr) -> Result<NormalForm, TwError> {
    normalize_with(e, false, None)
}

/// A hypergraph with one edge per atom; distinguished vertices are the free variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypergraph {
    pub vertices: Vec<Var>,
    pub edges: Vec<BTreeSet<Var>>,
    pub distinguished: BTreeSet<Var>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Minimum width over all orders; ties go to the lexicographically smallest order.
    Exhaustive,
    /// Greedy: repeatedly eliminate the vertex adding the fewest fill edges.
    MinFill,
}

/// An ordering `v_1 .. v_n` with the distinguished vertices first.
/// Elimination runs from `v_n` down to `v_{f+1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EliminationOrder {
    pub order: Vec<Var>,
    pub distinguished: usize,
    /// `U_j` for `j = f+1 .. n`, aligned with `order[f..]`.
    pub u_sets: Vec<BTreeSet<Var>>,
    /// Variables needed by the factored form, minus one: `max(f, max_j |U_j|) - 1`.
    pub induced_width: usize,
    /// `f + max_j |U_j \ distinguished| - 1`, kept for comparison.
    pub distinguished_width: i64,
}

impl Hypergraph {
    /// Replays the elimination sequence for `order` and records the `U_j`.
    pub fn eliminate(&self, order: &[Var]) -> EliminationOrder {
        let f = self.distinguished.len();
        let mut edges: Vec<BTreeSet<Var>> = self.edges.clone();
        let mut u_sets = vec![BTreeSet::new(); order.len() - f];
        for j in (f..order.len()).rev() {
            let v = order[j];
            let (hit, keep): (Vec<_>, Vec<_>) = edges.into_iter().partition(|e| e.contains(&v));
            let u: BTreeSet<Var> = hit.iter().flatten().copied().collect();
            edges = keep;
            let mut rest = u.clone();
            rest.remove(&v);
            if !rest.is_empty() {
                edges.push(rest);
            }
            u_sets[j - f] = u;
        }
        let max_u = u_sets.iter().map(BTreeSet::len).max().unwrap_or(0);
        let max_ud = u_sets.iter().map(|u| u.iter().filter(|v| !self.distinguished.contains(v)).count()).max().unwrap_or(0);
        EliminationOrder {
            order: order.to_vec(),
            distinguished: f,
            u_sets,
            induced_width: max_u.max(f).saturating_sub(1),
            distinguished_width: f as i64 + max_ud as i64 - 1,
        }
    }

    fn free_vertices(&self) -> Vec<Var> {
        self.vertices.iter().copied().filter(|v| !self.distinguished.contains(v)).collect()
    }

    fn adjacency(&self) -> BTreeMap<Var, BTreeSet<Var>> {
        let mut adj: BTreeMap<Var, BTreeSet<Var>> = self.vertices.iter().map(|&v| (v, BTreeSet::new())).collect();
        for e in &self.edges {
            for &a in e {
                for &b in e {
                    if a != b {
                        adj.get_mut(&a).expect("vertex").insert(b);
                    }
                }
            }
        }
        adj
    }

    /// An elimination order for the non-distinguished vertices.
    ///
    /// `Exhaustive` falls back to `MinFill` above ten non-distinguished vertices.
    pub fn elimination_order(&self, strategy: Strategy) -> EliminationOrder {
        let inner = self.free_vertices();
        let mut order: Vec<Var> = self.distinguished.iter().copied().collect();
        if strategy == Strategy::Exhaustive && inner.len() <= 10 {
            order.extend(self.exhaustive_tail(&inner));
        } else {
            order.extend(self.min_fill_tail());
        }
        self.eliminate(&order)
    }

    /// `|U|` when eliminating `inner[v]` after the set `done` (bitmask over `inner`).
    fn cost(&self, adj: &BTreeMap<Var, BTreeSet<Var>>, inner: &[Var], done: u32, v: usize) -> usize {
        let in_done = |x: Var| inner.iter().position(|&y| y == x).is_some_and(|i| done >> i & 1 == 1);
        let mut seen: BTreeSet<Var> = BTreeSet::new();
        let mut stack = vec![inner[v]];
        let mut reach: BTreeSet<Var> = [inner[v]].into_iter().collect();
        seen.insert(inner[v]);
        while let Some(x) = stack.pop() {
            for &y in &adj[&x] {
                if seen.insert(y) {
                    if in_done(y) {
                        stack.push(y);
                    } else {
                        reach.insert(y);
                    }
                }
            }
        }
        reach.len()
    }

    fn exhaustive_tail(&self, inner: &[Var]) -> Vec<Var> {
        let m = inner.len();
        let adj = self.adjacency();
        let full = (1u32 << m) - 1;
        let mut best = vec![usize::MAX; 1 << m];
        best[0] = 0;
        for s in 1..=full {
            for v in 0..m {
                if s >> v & 1 == 1 {
                    let rest = s & !(1 << v);
                    let c = best[rest as usize].max(self.cost(&adj, inner, rest, v));
                    best[s as usize] = best[s as usize].min(c);
                }
            }
        }
        let w = best[full as usize];
        let mut sorted: Vec<usize> = (0..m).collect();
        sorted.sort_by_key(|&i| inner[i]);
        let mut r = full;
        let mut tail = Vec::with_capacity(m);
        while r != 0 {
            let pick = sorted
                .iter()
                .copied()
                .find(|&v| r >> v & 1 == 1 && best[(r & !(1 << v)) as usize].max(self.cost(&adj, inner, r & !(1 << v), v)) <= w)
                .expect("an optimal choice exists");
            tail.push(inner[pick]);
            r &= !(1 << pick);
        }
        tail
    }

    fn min_fill_tail(&self) -> Vec<Var> {
        let mut adj = self.adjacency();
        let mut remaining: BTreeSet<Var> = self.free_vertices().into_iter().collect();
        let mut time = Vec::new();
        while !remaining.is_empty() {
            let fill = |v: Var| {
                let nb: Vec<Var> = adj[&v].iter().copied().collect();
                let mut c = 0;
                for (i, a) in nb.iter().enumerate() {
                    for b in &nb[i + 1..] {
                        if !adj[a].contains(b) {
                            c += 1;
                        }
                    }
                }
                c
            };
            let v = *remaining.iter().min_by_key(|&&v| (fill(v), v)).expect("non-empty");
            let nb: Vec<Var> = adj[&v].iter().copied().collect();
            for &a in &nb {
                for &b in &nb {
                    if a != b {
                        adj.get_mut(&a).expect("vertex").insert(b);
                    }
                }
                adj.get_mut(&a).expect("vertex").remove(&v);
            }
            adj.remove(&v);
            remaining.remove(&v);
            time.push(v);
        }
        time.reverse();
        time
    }
}

/// Bags along an elimination order: one per eliminated vertex plus a root
/// bag holding the distinguished vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeDecomposition {
    pub bags: Vec<BTreeSet<Var>>,
    /// Parent bag index; `None` only for the root (index 0).
    pub parent: Vec<Option<usize>>,
}

impl TreeDecomposition {
    pub fn width(&self) -> usize {
        self.bags.iter().map(BTreeSet::len).max().unwrap_or(0).saturating_sub(1)
    }
}

impl EliminationOrder {
    pub fn tree_decomposition(&self) -> TreeDecomposition {
        let f = self.distinguished;
        let pos: BTreeMap<Var, usize> = self.order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut bags = vec![self.order[..f].iter().copied().collect::<BTreeSet<Var>>()];
        let mut parent = vec![None];
        // bag of order[j] sits at index j - f + 1
        for j in f..self.order.len() {
            let u = &self.u_sets[j - f];
            let mut bag = u.clone();
            bag.insert(self.order[j]);
            let next = u.iter().map(|v| pos[v]).filter(|&p| p < j && p >= f).max();
            parent.push(Some(next.map_or(0, |p| p - f + 1)));
            bags.push(bag);
        }
        TreeDecomposition { bags, parent }
    }
}

/// Width of an expression: the largest induced width over all conjunctive
/// terms, including those inside function arguments and aggregation bodies.
/// `exact` is false when some term was too large for the exhaustive search.
pub fn treewidth(e: &Expr) -> Result<(usize, bool), TwError> {
    let nf = normalize_with(e, true, None)?;
    let mut width = 0;
    let mut exact = true;
    for t in &nf.terms {
        let h = t.hypergraph(&nf.free);
        exact &= h.free_vertices().len() <= 10;
        width = width.max(h.elimination_order(Strategy::Exhaustive).induced_width);
        for a in &t.atoms {
            if let Atom::Opaque(inner) = a {
                let subs: Vec<&Expr> = match inner {
                    Expr::Apply(_, args) => args.iter().collect(),
                    Expr::UncondAgg(_, _, b) | Expr::GuardedAgg(_, _, _, b) => vec![&**b],
                    _ => vec![],
                };
                for s in subs {
                    let (w, x) = treewidth(s)?;
                    width = width.max(w);
                    exact &= x;
                }
            }
        }
    }
    Ok((width, exact))
}

/// Factors one conjunctive term along an elimination order.
pub fn factor(t: &Conjunct, order: &EliminationOrder) -> Expr {
    let mut factors: Vec<(Expr, BTreeSet<Var>)> = t.atoms.iter().map(|a| (a.to_expr(), a.vars())).collect();
    for &v in order.order[order.distinguished..].iter().rev() {
        let (hit, keep): (Vec<_>, Vec<_>) = factors.into_iter().partition(|(_, vs)| vs.contains(&v));
        factors = keep;
        let mut vars: BTreeSet<Var> = hit.iter().flat_map(|(_, vs)| vs.iter().copied()).collect();
        vars.remove(&v);
        let body = Expr::product_of(hit.into_iter().map(|(e, _)| e));
        factors.push((Expr::sum(v, body), vars));
    }
    scaled(&t.coef, Expr::product_of(factors.into_iter().map(|(e, _)| e)))
}

/// Result of [`rewrite_min_vars`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rewrite {
    pub expr: Expr,
    /// Largest induced width among the factored terms.
    pub width: usize,
    /// Elimination orders used, one per top-level term.
    pub orders: Vec<EliminationOrder>,
    /// Source binder of each internal variable appearing in `orders`.
    pub origin: BTreeMap<Var, Var>,
}

fn rewrite_inner(e: &Expr) -> Expr {
    match e {
        Expr::Apply(n, args) => Expr::Apply(n.clone(), args.iter().map(|a| rewrite_min_vars(a).expr).collect()),
        Expr::UncondAgg(n, v, b) => Expr::agg(n, *v, rewrite_min_vars(b).expr),
        Expr::GuardedAgg(n, i, j, b) => Expr::GuardedAgg(n.clone(), *i, *j, alloc::sync::Arc::new(rewrite_min_vars(b).expr)),
        _ => e.clone(),
    }
}

/// Rewrites `e` into an equivalent expression that reuses variables along a
/// minimum-width elimination order of each conjunctive term.
///
/// Function applications and non-sum aggregations are kept as opaque
/// factors; their insides are rewritten independently.
pub fn rewrite_min_vars(e: &Expr) -> Rewrite {
    let nf = normalize_with(e, true, Some(rewrite_inner)).expect("opaque aggregations never fail");
    let mut orders = Vec::new();
    let mut parts = Vec::new();
    for t in &nf.terms {
        let h = t.hypergraph(&nf.free);
        let ord = h.elimination_order(Strategy::Exhaustive);
        let unit = Conjunct { coef: Rat::one(), ..t.clone() };
        parts.push((t.coef.clone(), factor(&unit, &ord)));
        orders.push(ord);
    }
    let width = orders.iter().map(|o| o.induced_width).max().unwrap_or(0);
    Rewrite { expr: compact_vars(&sum_terms(parts)), width, orders, origin: nf.origin }
}

/// Equalities and inequalities among the `2k` positions `x_1..x_k, y_1..y_k`
/// (positions `0..k` are the `x`s, `k..2k` the `y`s).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EqualityPattern {
    pub k: usize,
    pub eqs: Vec<(usize, usize)>,
    pub neqs: Vec<(usize, usize)>,
}

impl EqualityPattern {
    /// The full pattern of a set partition given as a block id per position.
    pub fn from_blocks(k: usize, blocks: &[usize]) -> EqualityPattern {
        assert_eq!(blocks.len(), 2 * k);
        let mut eqs = Vec::new();
        let mut neqs = Vec::new();
        for a in 0..2 * k {
            for b in a + 1..2 * k {
                if blocks[a] == blocks[b] {
                    eqs.push((a, b));
                } else {
                    neqs.push((a, b));
                }
            }
        }
        EqualityPattern { k, eqs, neqs }
    }

    /// Every set partition of the `2k` positions, as full patterns.
    pub fn all(k: usize) -> Vec<EqualityPattern> {
        set_partitions(2 * k).into_iter().map(|b| EqualityPattern::from_blocks(k, &b)).collect()
    }

    /// `ψ(x, y)` over `x_1..x_{2k}` (position `p` is `x_{p+1}`).
    pub fn to_expr(&self) -> Expr {
        let v = |p: usize| p as Var + 1;
        Expr::product_of(
            self.eqs.iter().map(|&(a, b)| Expr::eq(v(a), v(b))).chain(self.neqs.iter().map(|&(a, b)| Expr::neq(v(a), v(b)))),
        )
    }
}

/// Restricted growth strings of length `m`.
pub fn set_partitions(m: usize) -> Vec<Vec<usize>> {
    fn go(cur: &mut Vec<usize>, m: usize, max: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for b in 0..=max {
            cur.push(b);
            go(cur, m, if b == max { max + 1 } else { max }, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), m, 0, &mut out);
    out
}

/// `Σ_{y_1..y_k} ψ(x, y) · φ(y)`, where `body` is `φ` written over `x_1..x_k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IgnTerm {
    pub pattern: EqualityPattern,
    pub body: Expr,
}

impl IgnTerm {
    /// The term as written, over `2k` variables.
    pub fn raw_expr(&self) -> Expr {
        let k = self.pattern.k as Var;
        let m: BTreeMap<Var, Var> = (1..=k).map(|i| (i, i + k)).collect();
        let body = substitute(&self.body, &m);
        let ys: Vec<Var> = (k + 1..=2 * k).collect();
        Expr::sums(&ys, Expr::mul(self.pattern.to_expr(), body))
    }
}

fn closure(n: usize, pairs: impl Iterator<Item = (usize, usize)>) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for (a, b) in pairs {
        let (ra, rb) = (find(&mut p, a), find(&mut p, b));
        if ra != rb {
            p[ra.max(rb)] = ra.min(rb);
        }
    }
    (0..n).map(|x| find(&mut p, x)).collect()
}

/// Rewrites an equality-pattern summation over `2k` variables into an
/// equivalent expression over `x_1..x_k`.
///
/// Inequalities are expanded by inclusion-exclusion; in each resulting
/// equality pattern, `y`s equal to some `x` are replaced by it, and the
/// remaining classes of `y`s are summed over reused `x` names.
pub fn reduce_ign_term(t: &IgnTerm) -> Result<Expr, TwError> {
    let k = t.pattern.k;
    let n = 2 * k;
    for &(a, b) in t.pattern.eqs.iter().chain(&t.pattern.neqs) {
        if a >= n || b >= n {
            return Err(TwError::MalformedPattern(alloc::format!("position {} out of range", a.max(b))));
        }
    }
    let base = closure(n, t.pattern.eqs.iter().copied());
    if let Some(&(a, b)) = t.pattern.neqs.iter().find(|&&(a, b)| base[a] == base[b]) {
        return Err(TwError::MalformedPattern(alloc::format!("positions {a} and {b} are both equal and unequal")));
    }
    let neqs = &t.pattern.neqs;
    if neqs.len() > 20 {
        return Err(TwError::MalformedPattern(String::from("too many inequalities to expand")));
    }
    let mut by_partition: BTreeMap<Vec<usize>, Rat> = BTreeMap::new();
    for mask in 0u32..(1 << neqs.len()) {
        let extra = neqs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &p)| p);
        let cl = closure(n, t.pattern.eqs.iter().copied().chain(extra));
        let sign = if mask.count_ones() % 2 == 0 { Rat::one() } else { Rat::from_int(-1) };
        let e = by_partition.entry(cl).or_insert_with(Rat::zero);
        *e = &*e + &sign;
    }
    let mut terms = Vec::new();
    for (cl, coef) in by_partition {
        if coef.is_zero() {
            continue;
        }
        terms.push((coef, pattern_term(k, &cl, &t.body)));
    }
    Ok(compact_vars(&sum_terms(terms)))
}

/// One all-equalities pattern, given as a closure (representative per position).
fn pattern_term(k: usize, cl: &[usize], body: &Expr) -> Expr {
    let mut eqs = Vec::new();
    for p in 0..k {
        if cl[p] != p {
            // `cl[p]` is the smallest position of the class, hence an x
            eqs.push(Expr::eq(cl[p] as Var + 1, p as Var + 1));
        }
    }
    let referenced: BTreeSet<Var> = (k..2 * k).filter(|&q| cl[q] < k).map(|q| cl[q] as Var + 1).collect();
    let mut names: BTreeMap<usize, Var> = BTreeMap::new();
    let mut summed = Vec::new();
    let mut taken = referenced.clone();
    for q in k..2 * k {
        let r = cl[q];
        if r < k || names.contains_key(&r) {
            continue;
        }
        let name = (1..).find(|v| !taken.contains(v)).expect("free name");
        taken.insert(name);
        names.insert(r, name);
        summed.push(name);
    }
    let m: BTreeMap<Var, Var> = (0..k)
        .map(|i| {
            let r = cl[k + i];
            let target = if r < k { r as Var + 1 } else { names[&r] };
            (i as Var + 1, target)
        })
        .collect();
    // rename φ's own binders out of the way first so the substitution cannot capture
    let shift = max_var(body).max(2 * k as Var) + 1;
    let lifted = map_all_vars(body, &|v| v + shift);
    let lifted_map: BTreeMap<Var, Var> = m.iter().map(|(&a, &b)| (a + shift, b)).collect();
    let inner = Expr::sums(&summed, substitute(&lifted, &lifted_map));
    Expr::product_of(eqs.into_iter().chain(core::iter::once(inner)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    #[test]
    fn theta_rewrites_to_two_variables() {
        let theta = parse("sum x2 : sum x3 : E(x1,x2) * E(x2,x3)").unwrap();
        let r = rewrite_min_vars(&theta);
        assert_eq!(r.expr, parse("sum x2 : E(x1,x2) * (sum x1 : E(x2,x1))").unwrap());
        assert_eq!(r.width, 1);
        assert_eq!(treewidth(&theta).unwrap(), (1, true));
    }

    #[test]
    fn clique_has_width_two() {
        let e = parse("sum x2 : sum x3 : E(x1,x2) * E(x1,x3) * E(x2,x3)").unwrap();
        assert_eq!(treewidth(&e).unwrap(), (2, true));
        assert_eq!(treewidth(&parse("P1(x1)").unwrap()).unwrap(), (0, true));
    }

    #[test]
    fn inequality_expands() {
        let e = parse("sum x2 : [x1!=x2] * P1(x2)").unwrap();
        let nf = normalize(&e).unwrap();
        assert_eq!(nf.terms.len(), 2);
        assert_eq!(nf.terms[1].coef, Rat::from_int(-1));
        assert_eq!(nf.terms[1].atoms, vec![Atom::Label(1, 1)]);
        assert_eq!(nf.to_expr(), parse("(sum x1 : P1(x1)) - P1(x1)").unwrap());
    }

    #[test]
    fn non_sum_aggregation_rejected() {
        let e = parse("agg @max x2 | E(x1,x2) : P1(x2)").unwrap();
        assert_eq!(normalize(&e), Err(TwError::NonSumAggregation("max".into())));
    }

    #[test]
    fn bell_numbers() {
        let counts: Vec<usize> = (0..6).map(|m| set_partitions(m).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 5, 15, 52]);
    }

    #[test]
    fn ign_examples() {
        let phi = parse("E(x1,x2) * P1(x2)").unwrap();
        let one_eq = IgnTerm { pattern: EqualityPattern { k: 2, eqs: vec![(0, 2)], neqs: vec![] }, body: phi.clone() };
        assert_eq!(reduce_ign_term(&one_eq).unwrap(), parse("sum x2 : E(x1,x2) * P1(x2)").unwrap());
        let free = IgnTerm { pattern: EqualityPattern { k: 2, eqs: vec![], neqs: vec![] }, body: phi };
        assert_eq!(reduce_ign_term(&free).unwrap(), parse("sum x1 : sum x2 : E(x1,x2) * P1(x2)").unwrap());
        let bad = IgnTerm { pattern: EqualityPattern { k: 1, eqs: vec![(0, 1)], neqs: vec![(0, 1)] }, body: Expr::One };
        assert!(matches!(reduce_ign_term(&bad), Err(TwError::MalformedPattern(_))));
    }
}
