//! Counting logic, its translation into expressions, and synthesis of
//! formulas that separate colour-refinement classes.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::eval::Valuation;
use crate::expr::{Expr, Var};
use crate::graph::Graph;
use crate::num::Rat;
use crate::value::Value;
use crate::wl::{refine_full, Algorithm, Interner, RefinementTrace};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LogicError {
    Unbound(Var),
    LabelIndex { index: u32, ell: usize },
    ThresholdAboveSize { m: usize, n: usize },
    SizeMismatch { expected: usize, found: usize },
    NonFiniteLabel,
    NoGraphs,
    VertexOutOfRange(usize),
}

impl fmt::Display for LogicError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogicError::Unbound(x) => write!(f, "variable x{x} is unbound"),
            LogicError::LabelIndex { index, ell } => write!(f, "label P{index} requested but labels have length {ell}"),
            LogicError::ThresholdAboveSize { m, n } => write!(f, "threshold {m} exceeds graph size {n}"),
            LogicError::SizeMismatch { expected, found } => write!(f, "graph has {found} vertices, expected {expected}"),
            LogicError::NonFiniteLabel => f.write_str("labels must be finite"),
            LogicError::NoGraphs => f.write_str("no graphs given"),
            LogicError::VertexOutOfRange(v) => write!(f, "vertex {v} out of range"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    VarEq(Var, Var),
    Edge(Var, Var),
    /// Label entry `s` equals 1.
    Label(u32, Var),
    /// Label entry `s` equals `r`.
    LabelEq(u32, Rat, Var),
    Not(Arc<Formula>),
    And(Arc<Formula>, Arc<Formula>),
    /// At least `m` witnesses.
    CountExists(usize, Var, Arc<Formula>),
    /// Exactly `m` witnesses.
    CountExactly(usize, Var, Arc<Formula>),
}

impl Formula {
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Arc::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Arc::new(a), Arc::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::not(Formula::and(Formula::not(a), Formula::not(b)))
    }

    pub fn at_least(m: usize, x: Var, f: Formula) -> Formula {
        Formula::CountExists(m, x, Arc::new(f))
    }

    pub fn exactly(m: usize, x: Var, f: Formula) -> Formula {
        Formula::CountExactly(m, x, Arc::new(f))
    }

    pub fn quantifier_rank(&self) -> usize {
        match self {
            Formula::VarEq(..) | Formula::Edge(..) | Formula::Label(..) | Formula::LabelEq(..) => 0,
            Formula::Not(a) => a.quantifier_rank(),
            Formula::And(a, b) => a.quantifier_rank().max(b.quantifier_rank()),
            Formula::CountExists(_, _, a) | Formula::CountExactly(_, _, a) => 1 + a.quantifier_rank(),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        match self {
            Formula::VarEq(a, b) | Formula::Edge(a, b) => [*a, *b].into_iter().collect(),
            Formula::Label(_, a) | Formula::LabelEq(_, _, a) => [*a].into_iter().collect(),
            Formula::Not(a) => a.free_vars(),
            Formula::And(a, b) => {
                let mut s = a.free_vars();
                s.extend(b.free_vars());
                s
            }
            Formula::CountExists(_, x, a) | Formula::CountExactly(_, x, a) => {
                let mut s = a.free_vars();
                s.remove(x);
                s
            }
        }
    }

    fn vars_within(&self, allowed: &[Var]) -> bool {
        match self {
            Formula::VarEq(a, b) | Formula::Edge(a, b) => allowed.contains(a) && allowed.contains(b),
            Formula::Label(_, a) | Formula::LabelEq(_, _, a) => allowed.contains(a),
            Formula::Not(a) => a.vars_within(allowed),
            Formula::And(a, b) => a.vars_within(allowed) && b.vars_within(allowed),
            Formula::CountExists(_, x, a) | Formula::CountExactly(_, x, a) => allowed.contains(x) && a.vars_within(allowed),
        }
    }

    /// Guarded two-variable shape: every quantifier reads
    /// `∃ x_j (E(x_i, x_j) ∧ ψ(x_j))` with `i ≠ j`.
    pub fn is_guarded(&self) -> bool {
        self.vars_within(&[1, 2]) && self.guarded_rec()
    }

    fn guarded_rec(&self) -> bool {
        match self {
            Formula::VarEq(..) | Formula::Edge(..) | Formula::Label(..) | Formula::LabelEq(..) => true,
            Formula::Not(a) => a.guarded_rec(),
            Formula::And(a, b) => a.guarded_rec() && b.guarded_rec(),
            Formula::CountExists(_, j, body) | Formula::CountExactly(_, j, body) => {
                let mut parts = Vec::new();
                flatten_and(body, &mut parts);
                let guard = parts.iter().position(|p| matches!(p, Formula::Edge(a, b) if (a == j) != (b == j)));
                let Some(g) = guard else { return false };
                parts.iter().enumerate().all(|(idx, p)| {
                    idx == g || (p.free_vars().iter().all(|v| v == j) && p.guarded_rec())
                })
            }
        }
    }
}

fn flatten_and<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
    match f {
        Formula::And(a, b) => {
            flatten_and(a, out);
            flatten_and(b, out);
        }
        other => out.push(other),
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::VarEq(a, b) => write!(f, "x{a}=x{b}"),
            Formula::Edge(a, b) => write!(f, "E(x{a},x{b})"),
            Formula::Label(s, a) => write!(f, "P{s}(x{a})"),
            Formula::LabelEq(s, r, a) => write!(f, "P{s}[{r}](x{a})"),
            Formula::Not(a) => write!(f, "!({a})"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::CountExists(m, x, a) => write!(f, "exists>={m} x{x}. {a}"),
            Formula::CountExactly(m, x, a) => write!(f, "exists={m} x{x}. {a}"),
        }
    }
}

fn label_entry(g: &Graph, s: u32, v: usize) -> Result<&Value, LogicError> {
    g.label(v).get(s as usize - 1).ok_or(LogicError::LabelIndex { index: s, ell: g.ell() })
}

fn value_equals(x: &Value, r: &Rat) -> bool {
    match x {
        Value::Exact(q) => q == r,
        Value::Float(f) => *f == r.to_f64(),
    }
}

/// Boolean semantics.
pub fn eval_formula(f: &Formula, g: &Graph, nu: &Valuation) -> Result<bool, LogicError> {
    let var = |x: Var| {
        let v = nu.get(x).ok_or(LogicError::Unbound(x))?;
        if v >= g.n() {
            Err(LogicError::VertexOutOfRange(v))
        } else {
            Ok(v)
        }
    };
    Ok(match f {
        Formula::VarEq(a, b) => var(*a)? == var(*b)?,
        Formula::Edge(a, b) => g.has_edge(var(*a)?, var(*b)?),
        Formula::Label(s, a) => value_equals(label_entry(g, *s, var(*a)?)?, &Rat::one()),
        Formula::LabelEq(s, r, a) => value_equals(label_entry(g, *s, var(*a)?)?, r),
        Formula::Not(a) => !eval_formula(a, g, nu)?,
        Formula::And(a, b) => eval_formula(a, g, nu)? && eval_formula(b, g, nu)?,
        Formula::CountExists(m, x, a) | Formula::CountExactly(m, x, a) => {
            let mut count = 0;
            for u in 0..g.n() {
                if eval_formula(a, g, &nu.clone().with(*x, u))? {
                    count += 1;
                }
            }
            match f {
                Formula::CountExists(..) => count >= *m,
                _ => count == *m,
            }
        }
    })
}

/// Coefficients `a_0 .. a_d`, lowest degree first, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polynomial {
    pub coeffs: Vec<Rat>,
}

impl Polynomial {
    pub fn eval(&self, x: &Rat) -> Rat {
        self.coeffs.iter().rev().fold(Rat::zero(), |acc, c| &(&acc * x) + c)
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolyKind {
    /// 0 below the threshold, 1 from it on.
    AtLeast,
    /// 1 only at the threshold.
    Exactly,
}

/// The unique polynomial of degree at most `n` taking the `kind` step or
/// spike values at `0, 1, .., n`.
pub fn interpolation_poly(m: usize, n: usize, kind: PolyKind) -> Result<Polynomial, LogicError> {
    if m > n {
        return Err(LogicError::ThresholdAboveSize { m, n });
    }
    let target = |x: usize| match kind {
        PolyKind::AtLeast => x >= m,
        PolyKind::Exactly => x == m,
    };
    let mut acc = vec![Rat::zero(); n + 1];
    for i in (0..=n).filter(|&i| target(i)) {
        // basis polynomial vanishing on every node but i
        let mut basis = vec![Rat::one()];
        let mut denom = Rat::one();
        for j in (0..=n).filter(|&j| j != i) {
            let mut next = vec![Rat::zero(); basis.len() + 1];
            let shift = Rat::from_int(j as i64);
            for (d, c) in basis.iter().enumerate() {
                next[d + 1] = &next[d + 1] + c;
                next[d] = &next[d] - &(c * &shift);
            }
            basis = next;
            denom = &denom * &Rat::from_int(i as i64 - j as i64);
        }
        for (d, c) in basis.iter().enumerate() {
            acc[d] = &acc[d] + &(c / &denom);
        }
    }
    while acc.last().is_some_and(Rat::is_zero) {
        acc.pop();
    }
    Ok(Polynomial { coeffs: acc })
}

/// Translation state: graph size, label value set and a memo over shared subformulas.
struct Hat<'a> {
    n: usize,
    values: &'a BTreeSet<Rat>,
    memo: BTreeMap<usize, Expr>,
}

impl Hat<'_> {
    fn arc(&mut self, f: &Arc<Formula>) -> Expr {
        let key = Arc::as_ptr(f) as usize;
        if let Some(e) = self.memo.get(&key) {
            return e.clone();
        }
        let e = self.tr(f);
        self.memo.insert(key, e.clone());
        e
    }

    fn tr(&mut self, f: &Formula) -> Expr {
        match f {
            Formula::VarEq(a, b) => Expr::eq(*a, *b),
            Formula::Edge(a, b) => Expr::edge(*a, *b),
            Formula::Label(s, a) => Expr::label(*s, *a),
            Formula::LabelEq(s, r, a) => {
                let others: Vec<&Rat> = self.values.iter().filter(|q| *q != r).collect();
                let denom = others.iter().fold(Rat::one(), |acc, q| &acc * &(r - *q));
                let factors = others.iter().map(|q| Expr::sub(Expr::label(*s, *a), Expr::scale((*q).clone(), Expr::eq(*a, *a))));
                let prod = Expr::product_of(factors);
                if others.is_empty() {
                    Expr::eq(*a, *a)
                } else if denom.is_one() {
                    prod
                } else {
                    Expr::scale(denom.recip().expect("distinct values"), prod)
                }
            }
            Formula::Not(a) => Expr::sub(Expr::One, self.arc(a)),
            Formula::And(a, b) => Expr::mul(self.arc(a), self.arc(b)),
            Formula::CountExists(m, x, a) | Formula::CountExactly(m, x, a) => {
                let kind = if matches!(f, Formula::CountExists(..)) { PolyKind::AtLeast } else { PolyKind::Exactly };
                let coeffs = match interpolation_poly(*m, self.n, kind) {
                    Ok(p) => p.coeffs,
                    Err(_) => Vec::new(),
                };
                let s = Expr::sum(*x, self.arc(a));
                power_series(&coeffs, &s)
            }
        }
    }
}

/// `Σ_j a_j s^j`; a `0 · s` term is kept when no power of `s` survives, so
/// the summation depth still reflects the quantifier.
fn power_series(coeffs: &[Rat], s: &Expr) -> Expr {
    let mut terms: Vec<Expr> = Vec::new();
    for (j, a) in coeffs.iter().enumerate() {
        if a.is_zero() {
            continue;
        }
        let pow = if j == 0 { Expr::One } else { Expr::product_of(core::iter::repeat_n(s.clone(), j)) };
        terms.push(if a.is_one() { pow } else { Expr::scale(a.clone(), pow) });
    }
    if coeffs.len() <= 1 {
        terms.push(Expr::scale(Rat::zero(), s.clone()));
    }
    let mut it = terms.into_iter();
    let first = it.next().expect("at least one term");
    it.fold(first, Expr::add)
}

/// Expression that is 1 where `f` holds and 0 elsewhere, on graphs with
/// exactly `n` vertices. Label tests `P_s = r` are resolved against the
/// values in `f` itself; see [`hat_translate_with`] for graphs whose labels
/// take other values.
pub fn hat_translate(f: &Formula, n: usize) -> Expr {
    let mut values = BTreeSet::new();
    collect_values(f, &mut values);
    hat_translate_with(f, n, &values)
}

/// As [`hat_translate`], with `values` the label values that may occur.
pub fn hat_translate_with(f: &Formula, n: usize, values: &BTreeSet<Rat>) -> Expr {
    let mut values = values.clone();
    collect_values(f, &mut values);
    Hat { n, values: &values, memo: BTreeMap::new() }.tr(f)
}

fn collect_values(f: &Formula, out: &mut BTreeSet<Rat>) {
    match f {
        Formula::LabelEq(_, r, _) => {
            out.insert(r.clone());
        }
        Formula::Not(a) | Formula::CountExists(_, _, a) | Formula::CountExactly(_, _, a) => collect_values(a, out),
        Formula::And(a, b) => {
            collect_values(a, out);
            collect_values(b, out);
        }
        _ => {}
    }
}

/// Formulas for colour-refinement classes, shared across a family of
/// equally sized graphs whose colours come from one interner.
pub struct CrSynthesizer {
    n: usize,
    traces: Vec<RefinementTrace>,
    graphs: Vec<Graph>,
    values: BTreeSet<Rat>,
    reps: BTreeMap<(usize, u32), (usize, usize)>,
    formulas: BTreeMap<(usize, u32, Var), Arc<Formula>>,
    exprs: BTreeMap<(usize, u32), Expr>,
    hat_memo: BTreeMap<usize, Expr>,
}

fn exact_label(x: &Value) -> Result<Rat, LogicError> {
    match x {
        Value::Exact(r) => Ok(r.clone()),
        Value::Float(f) => Rat::from_f64_exact(*f).ok_or(LogicError::NonFiniteLabel),
    }
}

impl CrSynthesizer {
    /// Runs `t` rounds of colour refinement jointly on `graphs`.
    pub fn new(graphs: &[Graph], t: usize) -> Result<CrSynthesizer, LogicError> {
        let n = graphs.first().ok_or(LogicError::NoGraphs)?.n();
        let mut values = BTreeSet::new();
        for g in graphs {
            if g.n() != n {
                return Err(LogicError::SizeMismatch { expected: n, found: g.n() });
            }
            for l in g.labels() {
                for x in l {
                    values.insert(exact_label(x)?);
                }
            }
        }
        let mut interner = Interner::new();
        let traces: Vec<RefinementTrace> =
            graphs.iter().map(|g| refine_full(g, Algorithm::Cr, t, &mut interner).expect("colour refinement")).collect();
        let mut reps = BTreeMap::new();
        for (gi, tr) in traces.iter().enumerate() {
            for (r, round) in tr.rounds.iter().enumerate() {
                for (v, &c) in round.iter().enumerate() {
                    reps.entry((r, c)).or_insert((gi, v));
                }
            }
        }
        Ok(CrSynthesizer {
            n,
            traces,
            graphs: graphs.to_vec(),
            values,
            reps,
            formulas: BTreeMap::new(),
            exprs: BTreeMap::new(),
            hat_memo: BTreeMap::new(),
        })
    }

    pub fn rounds(&self) -> usize {
        self.traces[0].rounds.len() - 1
    }

    /// Colour of vertex `v` of graph `gi` after `r` rounds.
    pub fn color(&self, gi: usize, v: usize, r: usize) -> u32 {
        self.traces[gi].rounds[r][v]
    }

    /// Colours present after `r` rounds.
    pub fn colors(&self, r: usize) -> Vec<u32> {
        self.reps.keys().filter(|(q, _)| *q == r).map(|(_, c)| *c).collect()
    }

    /// A formula in `x` true exactly at the vertices of colour `c` after `r` rounds.
    pub fn formula(&mut self, r: usize, c: u32, x: Var) -> Arc<Formula> {
        if let Some(f) = self.formulas.get(&(r, c, x)) {
            return f.clone();
        }
        let (gi, v) = self.reps[&(r, c)];
        let f = if r == 0 {
            let g = &self.graphs[gi];
            let mut parts = g.label(v).iter().enumerate().map(|(s, val)| {
                Formula::LabelEq(s as u32 + 1, exact_label(val).expect("checked in new"), x)
            });
            match parts.next() {
                None => Formula::VarEq(x, x),
                Some(first) => parts.fold(first, Formula::and),
            }
        } else {
            let y = if x == 1 { 2 } else { 1 };
            let prev = self.color(gi, v, r - 1);
            let g = &self.graphs[gi];
            let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
            for &u in g.neighbors(v) {
                *counts.entry(self.traces[gi].rounds[r - 1][u]).or_default() += 1;
            }
            let deg = g.degree(v);
            let mut acc = Formula::and((*self.formula(r - 1, prev, x)).clone(), Formula::exactly(deg, y, Formula::Edge(x, y)));
            for (d, m) in counts {
                let child = self.formula(r - 1, d, y);
                let body = Formula::And(Arc::new(Formula::Edge(x, y)), child);
                acc = Formula::and(acc, Formula::exactly(m, y, body));
            }
            acc
        };
        let f = Arc::new(f);
        self.formulas.insert((r, c, x), f.clone());
        f
    }

    /// The translated formula for colour `c` after `r` rounds, in `x1`.
    pub fn expr(&mut self, r: usize, c: u32) -> Expr {
        if let Some(e) = self.exprs.get(&(r, c)) {
            return e.clone();
        }
        let f = self.formula(r, c, 1);
        let mut hat = Hat { n: self.n, values: &self.values, memo: core::mem::take(&mut self.hat_memo) };
        let e = hat.arc(&f);
        self.hat_memo = hat.memo;
        self.exprs.insert((r, c), e.clone());
        e
    }

    /// First round within the computed ones at which the two vertices differ.
    pub fn first_difference(&self, a: (usize, usize), b: (usize, usize)) -> Option<usize> {
        (0..=self.rounds()).find(|&r| self.color(a.0, a.1, r) != self.color(b.0, b.1, r))
    }
}

/// A separating expression with the formula it came from.
#[derive(Clone, Debug)]
pub struct Distinguisher {
    pub round: usize,
    pub formula: Arc<Formula>,
    pub expr: Expr,
}

/// An expression of summation depth at most `t` that is 1 at `(G, v)` and
/// 0 at `(H, w)`, or `None` when `t` rounds of colour refinement agree on them.
pub fn synthesize_cr_distinguisher(g: &Graph, v: usize, h: &Graph, w: usize, t: usize) -> Result<Option<Distinguisher>, LogicError> {
    if g.n() != h.n() {
        return Err(LogicError::SizeMismatch { expected: g.n(), found: h.n() });
    }
    for x in [v, w] {
        if x >= g.n() {
            return Err(LogicError::VertexOutOfRange(x));
        }
    }
    let mut syn = CrSynthesizer::new(&[g.clone(), h.clone()], t)?;
    let Some(r) = syn.first_difference((0, v), (1, w)) else { return Ok(None) };
    let c = syn.color(0, v, r);
    let formula = syn.formula(r, c, 1);
    let expr = syn.expr(r, c);
    Ok(Some(Distinguisher { round: r, formula, expr }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{evaluate, FunctionRegistry, Mode};
    use crate::expr::{is_guarded, sum_depth};
    use crate::num::rat;

    #[test]
    fn step_polynomial() {
        let p = interpolation_poly(1, 2, PolyKind::AtLeast).unwrap();
        assert_eq!(p.coeffs, vec![Rat::zero(), rat(3, 2), rat(-1, 2)]);
        assert_eq!(interpolation_poly(0, 4, PolyKind::AtLeast).unwrap().coeffs, vec![Rat::one()]);
        assert_eq!(interpolation_poly(3, 2, PolyKind::AtLeast), Err(LogicError::ThresholdAboveSize { m: 3, n: 2 }));
    }

    #[test]
    fn degree_counting() {
        let f = Formula::at_least(2, 2, Formula::Edge(1, 2));
        let g = Graph::path(4);
        assert!(eval_formula(&f, &g, &Valuation::from_tuple(&[1])).unwrap());
        assert!(!eval_formula(&f, &g, &Valuation::from_tuple(&[0])).unwrap());
        assert!(f.is_guarded());
        let e = hat_translate(&f, 4);
        assert_eq!(sum_depth(&e), 1);
        assert!(is_guarded(&e));
        let fr = FunctionRegistry::new();
        for v in 0..4 {
            let val = evaluate(&e, &g, &Valuation::from_tuple(&[v]), Mode::Exact, &fr).unwrap();
            assert_eq!(val, Value::int((v == 1 || v == 2) as i64));
        }
    }

    #[test]
    fn negation_uses_one() {
        assert_eq!(hat_translate(&Formula::not(Formula::Label(1, 1)), 3), Expr::sub(Expr::One, Expr::label(1, 1)));
    }

    #[test]
    fn path_versus_cycle() {
        let d = synthesize_cr_distinguisher(&Graph::path(4), 0, &Graph::cycle(4), 0, 1).unwrap().unwrap();
        assert_eq!(d.round, 1);
        assert!(is_guarded(&d.expr));
        assert!(sum_depth(&d.expr) <= 1);
        let fr = FunctionRegistry::new();
        let at = |g: &Graph, v| evaluate(&d.expr, g, &Valuation::from_tuple(&[v]), Mode::Exact, &fr).unwrap();
        assert_eq!(at(&Graph::path(4), 0), Value::one());
        assert_eq!(at(&Graph::cycle(4), 0), Value::zero());
    }

    #[test]
    fn cycles_are_not_separated() {
        let c6 = Graph::cycle(6);
        let tt = Graph::cycle(3).disjoint_union(&Graph::cycle(3)).unwrap();
        for t in 0..4 {
            assert!(synthesize_cr_distinguisher(&c6, 0, &tt, 2, t).unwrap().is_none());
        }
    }
}
