//! Tensor-language expressions and their static analysis.
//!
//! Variables are positive integers (`x1`, `x2`, ...). Children are shared
//! through [`Arc`], so cloning an expression is cheap and memoised builders
//! can reuse subtrees.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::num::Rat;

pub type Var = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Eq,
    Neq,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    One,
    /// `𝟙[x_i op x_j]`
    EqPred(Var, Var, CmpOp),
    /// `E(x_i, x_j)`
    EdgePred(Var, Var),
    /// `P_s(x_i)`, `s >= 1`
    LabelPred(u32, Var),
    Product(Arc<Expr>, Arc<Expr>),
    Add(Arc<Expr>, Arc<Expr>),
    Scale(Rat, Arc<Expr>),
    /// Pointwise function application.
    Apply(String, Vec<Expr>),
    /// `Σ_{x_v} body` over all vertices.
    SumAgg(Var, Arc<Expr>),
    /// `agg_{x_v} body` over all vertices.
    UncondAgg(String, Var, Arc<Expr>),
    /// `agg_{x_j}(body | E(x_i, x_j))`; `body` mentions at most `x_j`.
    GuardedAgg(String, Var, Var, Arc<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprError {
    ZeroVariable,
    ZeroLabel,
    /// A guarded aggregation whose body has free variables besides the bound one.
    GuardBody { bound: Var, extra: Var },
    GuardSameVar(Var),
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprError::ZeroVariable => f.write_str("variable indices start at 1"),
            ExprError::ZeroLabel => f.write_str("label indices start at 1"),
            ExprError::GuardBody { bound, extra } => {
                write!(f, "guarded aggregation over x{bound} has x{extra} free in its body")
            }
            ExprError::GuardSameVar(v) => write!(f, "guarded aggregation binds its own guard variable x{v}"),
        }
    }
}

impl Expr {
    pub fn eq(i: Var, j: Var) -> Expr {
        Expr::EqPred(i, j, CmpOp::Eq)
    }

    pub fn neq(i: Var, j: Var) -> Expr {
        Expr::EqPred(i, j, CmpOp::Neq)
    }

    pub fn edge(i: Var, j: Var) -> Expr {
        Expr::EdgePred(i, j)
    }

    pub fn label(s: u32, i: Var) -> Expr {
        Expr::LabelPred(s, i)
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Product(Arc::new(a), Arc::new(b))
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Arc::new(a), Arc::new(b))
    }

    /// `a - b`, spelled `a + (-1)·b`.
    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::add(a, Expr::scale(Rat::from_int(-1), b))
    }

    pub fn scale(c: Rat, e: Expr) -> Expr {
        Expr::Scale(c, Arc::new(e))
    }

    pub fn sum(v: Var, body: Expr) -> Expr {
        Expr::SumAgg(v, Arc::new(body))
    }

    pub fn apply(name: &str, args: Vec<Expr>) -> Expr {
        Expr::Apply(String::from(name), args)
    }

    pub fn agg(name: &str, v: Var, body: Expr) -> Expr {
        Expr::UncondAgg(String::from(name), v, Arc::new(body))
    }

    /// Checked constructor for `agg_{x_j}(body | E(x_i, x_j))`.
    pub fn guarded(name: &str, i: Var, j: Var, body: Expr) -> Result<Expr, ExprError> {
        if i == j {
            return Err(ExprError::GuardSameVar(i));
        }
        if let Some(&extra) = free_vars(&body).iter().find(|&&v| v != j) {
            return Err(ExprError::GuardBody { bound: j, extra });
        }
        Ok(Expr::GuardedAgg(String::from(name), i, j, Arc::new(body)))
    }

    /// `0`, spelled `0·1`.
    pub fn zero() -> Expr {
        Expr::scale(Rat::zero(), Expr::One)
    }

    pub fn constant(c: Rat) -> Expr {
        Expr::scale(c, Expr::One)
    }

    /// Left-nested product; the empty product is `One`.
    pub fn product_of<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
        let mut it = items.into_iter();
        match it.next() {
            None => Expr::One,
            Some(first) => it.fold(first, Expr::mul),
        }
    }

    /// Left-nested sum; the empty sum is `0·1`.
    pub fn sum_of<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
        let mut it = items.into_iter();
        match it.next() {
            None => Expr::zero(),
            Some(first) => it.fold(first, Expr::add),
        }
    }

    /// `Σ_{vs[0]} Σ_{vs[1]} ... body`.
    pub fn sums(vs: &[Var], body: Expr) -> Expr {
        vs.iter().rev().fold(body, |acc, &v| Expr::sum(v, acc))
    }

    /// Checks the static well-formedness conditions.
    pub fn validate(&self) -> Result<(), ExprError> {
        let mut err = None;
        self.visit(&mut |e| {
            if err.is_some() {
                return;
            }
            let r = match e {
                Expr::EqPred(i, j, _) | Expr::EdgePred(i, j) if *i == 0 || *j == 0 => Err(ExprError::ZeroVariable),
                Expr::LabelPred(0, _) => Err(ExprError::ZeroLabel),
                Expr::LabelPred(_, 0) | Expr::SumAgg(0, _) | Expr::UncondAgg(_, 0, _) => Err(ExprError::ZeroVariable),
                Expr::GuardedAgg(_, i, j, body) => {
                    if *i == 0 || *j == 0 {
                        Err(ExprError::ZeroVariable)
                    } else {
                        Expr::guarded("", *i, *j, (**body).clone()).map(|_| ())
                    }
                }
                _ => Ok(()),
            };
            if let Err(x) = r {
                err = Some(x);
            }
        });
        err.map_or(Ok(()), Err)
    }

    /// Pre-order traversal of every node.
    pub fn visit<F: FnMut(&Expr)>(&self, f: &mut F) {
        f(self);
        match self {
            Expr::Product(a, b) | Expr::Add(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Scale(_, e) | Expr::SumAgg(_, e) | Expr::UncondAgg(_, _, e) | Expr::GuardedAgg(_, _, _, e) => e.visit(f),
            Expr::Apply(_, args) => args.iter().for_each(|a| a.visit(f)),
            _ => {}
        }
    }

    /// Number of nodes, counting shared subtrees once per occurrence.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }
}

/// Every variable index that occurs anywhere, bound or free.
pub fn used_vars(e: &Expr) -> BTreeSet<Var> {
    let mut s = BTreeSet::new();
    e.visit(&mut |n| match n {
        Expr::EqPred(i, j, _) | Expr::EdgePred(i, j) => {
            s.insert(*i);
            s.insert(*j);
        }
        Expr::LabelPred(_, i) | Expr::SumAgg(i, _) | Expr::UncondAgg(_, i, _) => {
            s.insert(*i);
        }
        Expr::GuardedAgg(_, i, j, _) => {
            s.insert(*i);
            s.insert(*j);
        }
        _ => {}
    });
    s
}

pub fn free_vars(e: &Expr) -> BTreeSet<Var> {
    let mut out = BTreeSet::new();
    collect_free(e, &mut out);
    out
}

fn collect_free(e: &Expr, out: &mut BTreeSet<Var>) {
    match e {
        Expr::One => {}
        Expr::EqPred(i, j, _) | Expr::EdgePred(i, j) => {
            out.insert(*i);
            out.insert(*j);
        }
        Expr::LabelPred(_, i) => {
            out.insert(*i);
        }
        Expr::Product(a, b) | Expr::Add(a, b) => {
            collect_free(a, out);
            collect_free(b, out);
        }
        Expr::Scale(_, a) => collect_free(a, out),
        Expr::Apply(_, args) => args.iter().for_each(|a| collect_free(a, out)),
        Expr::SumAgg(v, body) | Expr::UncondAgg(_, v, body) => {
            let mut inner = free_vars(body);
            inner.remove(v);
            out.extend(inner);
        }
        Expr::GuardedAgg(_, i, j, body) => {
            out.insert(*i);
            let mut inner = free_vars(body);
            inner.remove(j);
            out.extend(inner);
        }
    }
}

pub fn max_var(e: &Expr) -> Var {
    used_vars(e).into_iter().max().unwrap_or(0)
}

/// Nesting depth of `SumAgg` nodes.
pub fn sum_depth(e: &Expr) -> usize {
    depth(e, &|n| matches!(n, Expr::SumAgg(..)))
}

/// Nesting depth of all aggregation nodes.
pub fn agg_depth(e: &Expr) -> usize {
    depth(e, &|n| matches!(n, Expr::SumAgg(..) | Expr::UncondAgg(..) | Expr::GuardedAgg(..)))
}

fn depth(e: &Expr, counts: &dyn Fn(&Expr) -> bool) -> usize {
    let own = counts(e) as usize;
    let inner = match e {
        Expr::Product(a, b) | Expr::Add(a, b) => depth(a, counts).max(depth(b, counts)),
        Expr::Scale(_, a) | Expr::SumAgg(_, a) | Expr::UncondAgg(_, _, a) | Expr::GuardedAgg(_, _, _, a) => {
            depth(a, counts)
        }
        Expr::Apply(_, args) => args.iter().map(|a| depth(a, counts)).max().unwrap_or(0),
        _ => 0,
    };
    own + inner
}

pub fn function_free(e: &Expr) -> bool {
    let mut ok = true;
    e.visit(&mut |n| {
        if matches!(n, Expr::Apply(..)) {
            ok = false;
        }
    });
    ok
}

/// Static summary of an expression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Analysis {
    pub free_vars: BTreeSet<Var>,
    /// Distinct variable indices used, bound or free.
    pub var_count: usize,
    pub sum_depth: usize,
    pub agg_depth: usize,
    pub guarded: bool,
    pub function_free: bool,
}

pub fn analyze(e: &Expr) -> Analysis {
    Analysis {
        free_vars: free_vars(e),
        var_count: used_vars(e).len(),
        sum_depth: sum_depth(e),
        agg_depth: agg_depth(e),
        guarded: is_guarded(e),
        function_free: function_free(e),
    }
}

/// Syntactic membership in the two-variable guarded fragment with free
/// variables among `{x1}`.
pub fn is_guarded(e: &Expr) -> bool {
    used_vars(e).iter().all(|&v| v == 1 || v == 2) && matches!(guard_var(e), Ok(None | Some(1)))
}

/// Returns the single free variable of a guarded expression (`None` when closed).
fn guard_var(e: &Expr) -> Result<Option<Var>, ()> {
    fn join(a: Option<Var>, b: Option<Var>) -> Result<Option<Var>, ()> {
        match (a, b) {
            (Some(x), Some(y)) if x != y => Err(()),
            (Some(x), _) | (_, Some(x)) => Ok(Some(x)),
            _ => Ok(None),
        }
    }
    match e {
        Expr::One => Ok(None),
        Expr::EqPred(i, j, _) if i == j => Ok(Some(*i)),
        Expr::EqPred(..) | Expr::EdgePred(..) | Expr::UncondAgg(..) => Err(()),
        Expr::LabelPred(_, i) => Ok(Some(*i)),
        Expr::Product(a, b) | Expr::Add(a, b) => join(guard_var(a)?, guard_var(b)?),
        Expr::Scale(_, a) => guard_var(a),
        Expr::Apply(_, args) => args.iter().try_fold(None, |acc, a| join(acc, guard_var(a)?)),
        Expr::SumAgg(j, body) => {
            let mut factors = Vec::new();
            flatten_product(body, &mut factors);
            let guard = factors.iter().position(|f| match f {
                Expr::EdgePred(a, b) => (b == j && a != j) || (a == j && b != j),
                _ => false,
            });
            let Some(g) = guard else { return Err(()) };
            let i = match factors[g] {
                Expr::EdgePred(a, b) if a == j => *b,
                Expr::EdgePred(a, _) => *a,
                _ => unreachable!(),
            };
            for (k, f) in factors.iter().enumerate() {
                if k == g {
                    continue;
                }
                match guard_var(f)? {
                    None => {}
                    Some(v) if v == *j => {}
                    Some(_) => return Err(()),
                }
            }
            Ok(Some(i))
        }
        Expr::GuardedAgg(_, i, j, body) => match guard_var(body)? {
            None => Ok(Some(*i)),
            Some(v) if v == *j && i != j => Ok(Some(*i)),
            _ => Err(()),
        },
    }
}

/// Collects the factors of a (nested) product, left to right.
pub fn flatten_product<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
    match e {
        Expr::Product(a, b) => {
            flatten_product(a, out);
            flatten_product(b, out);
        }
        _ => out.push(e),
    }
}

fn rename_leaf(e: &Expr, f: &dyn Fn(Var) -> Var) -> Option<Expr> {
    Some(match e {
        Expr::One => Expr::One,
        Expr::EqPred(i, j, op) => Expr::EqPred(f(*i), f(*j), *op),
        Expr::EdgePred(i, j) => Expr::EdgePred(f(*i), f(*j)),
        Expr::LabelPred(s, i) => Expr::LabelPred(*s, f(*i)),
        _ => return None,
    })
}

/// Renames every occurrence (bound or free) of `a` to `b` and vice versa.
pub fn swap_vars(e: &Expr, a: Var, b: Var) -> Expr {
    let sw = move |v: Var| if v == a { b } else if v == b { a } else { v };
    map_all_vars(e, &sw)
}

/// Applies an injective renaming to every variable occurrence, binders included.
pub fn map_all_vars(e: &Expr, f: &dyn Fn(Var) -> Var) -> Expr {
    if let Some(l) = rename_leaf(e, f) {
        return l;
    }
    match e {
        Expr::Product(a, b) => Expr::mul(map_all_vars(a, f), map_all_vars(b, f)),
        Expr::Add(a, b) => Expr::add(map_all_vars(a, f), map_all_vars(b, f)),
        Expr::Scale(c, a) => Expr::scale(c.clone(), map_all_vars(a, f)),
        Expr::Apply(n, args) => Expr::Apply(n.clone(), args.iter().map(|a| map_all_vars(a, f)).collect()),
        Expr::SumAgg(v, body) => Expr::sum(f(*v), map_all_vars(body, f)),
        Expr::UncondAgg(n, v, body) => Expr::UncondAgg(n.clone(), f(*v), Arc::new(map_all_vars(body, f))),
        Expr::GuardedAgg(n, i, j, body) => Expr::GuardedAgg(n.clone(), f(*i), f(*j), Arc::new(map_all_vars(body, f))),
        _ => unreachable!(),
    }
}

/// Capture-avoiding simultaneous substitution of free variables.
///
/// Variables absent from `map` are left alone. A binder that would capture a
/// substituted name is renamed to a fresh index.
pub fn substitute(e: &Expr, map: &BTreeMap<Var, Var>) -> Expr {
    let fresh = max_var(e).max(map.values().copied().max().unwrap_or(0)) + 1;
    subst_rec(e, map, &mut { fresh })
}

fn subst_rec(e: &Expr, map: &BTreeMap<Var, Var>, fresh: &mut Var) -> Expr {
    if let Some(l) = rename_leaf(e, &|v| *map.get(&v).unwrap_or(&v)) {
        return l;
    }
    let bind = |v: Var, body: &Expr, fresh: &mut Var| -> (Var, Expr) {
        let mut inner = map.clone();
        inner.remove(&v);
        let fv = free_vars(body);
        let captured = fv.iter().any(|w| *w != v && inner.get(w) == Some(&v));
        if captured {
            let z = *fresh;
            *fresh += 1;
            inner.insert(v, z);
            (z, subst_rec(body, &inner, fresh))
        } else {
            (v, subst_rec(body, &inner, fresh))
        }
    };
    match e {
        Expr::Product(a, b) => Expr::mul(subst_rec(a, map, fresh), subst_rec(b, map, fresh)),
        Expr::Add(a, b) => Expr::add(subst_rec(a, map, fresh), subst_rec(b, map, fresh)),
        Expr::Scale(c, a) => Expr::scale(c.clone(), subst_rec(a, map, fresh)),
        Expr::Apply(n, args) => Expr::Apply(n.clone(), args.iter().map(|a| subst_rec(a, map, fresh)).collect()),
        Expr::SumAgg(v, body) => {
            let (v2, b2) = bind(*v, body, fresh);
            Expr::sum(v2, b2)
        }
        Expr::UncondAgg(n, v, body) => {
            let (v2, b2) = bind(*v, body, fresh);
            Expr::UncondAgg(n.clone(), v2, Arc::new(b2))
        }
        Expr::GuardedAgg(n, i, j, body) => {
            let i2 = *map.get(i).unwrap_or(i);
            // the body mentions only x_j, so only a clash with the guard matters
            if i2 == *j {
                let z = *fresh;
                *fresh += 1;
                let b2 = map_all_vars(body, &|v| if v == *j { z } else { v });
                Expr::GuardedAgg(n.clone(), i2, z, Arc::new(b2))
            } else {
                Expr::GuardedAgg(n.clone(), i2, *j, body.clone())
            }
        }
        _ => unreachable!(),
    }
}

/// Alpha-renames bound variables to the smallest indices that avoid capture.
///
/// Free variables keep their names. Each binder takes the least index not
/// used by the other variables free in its scope, so the result reuses
/// variables aggressively through shadowing.
pub fn compact_vars(e: &Expr) -> Expr {
    let env: BTreeMap<Var, Var> = free_vars(e).into_iter().map(|v| (v, v)).collect();
    compact_rec(e, &env)
}

fn least_unused(used: &BTreeSet<Var>) -> Var {
    (1..).find(|v| !used.contains(v)).expect("finite set")
}

fn compact_rec(e: &Expr, env: &BTreeMap<Var, Var>) -> Expr {
    let look = |v: Var| *env.get(&v).unwrap_or(&v);
    if let Some(l) = rename_leaf(e, &look) {
        return l;
    }
    let bind = |v: Var, body: &Expr| -> (Var, Expr) {
        let fv = free_vars(body);
        let used: BTreeSet<Var> = fv.iter().filter(|&&w| w != v).map(|&w| look(w)).collect();
        let nv = least_unused(&used);
        let mut inner: BTreeMap<Var, Var> = fv.iter().filter(|&&w| w != v).map(|&w| (w, look(w))).collect();
        inner.insert(v, nv);
        (nv, compact_rec(body, &inner))
    };
    match e {
        Expr::Product(a, b) => Expr::mul(compact_rec(a, env), compact_rec(b, env)),
        Expr::Add(a, b) => Expr::add(compact_rec(a, env), compact_rec(b, env)),
        Expr::Scale(c, a) => Expr::scale(c.clone(), compact_rec(a, env)),
        Expr::Apply(n, args) => Expr::Apply(n.clone(), args.iter().map(|a| compact_rec(a, env)).collect()),
        Expr::SumAgg(v, body) => {
            let (v2, b2) = bind(*v, body);
            Expr::sum(v2, b2)
        }
        Expr::UncondAgg(n, v, body) => {
            let (v2, b2) = bind(*v, body);
            Expr::UncondAgg(n.clone(), v2, Arc::new(b2))
        }
        Expr::GuardedAgg(n, i, j, body) => {
            let i2 = look(*i);
            let j2 = if i2 == 1 { 2 } else { 1 };
            let mut inner = BTreeMap::new();
            inner.insert(*j, j2);
            Expr::GuardedAgg(n.clone(), i2, j2, Arc::new(compact_rec(body, &inner)))
        }
        _ => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn theta() -> Expr {
        Expr::sum(2, Expr::sum(3, Expr::mul(Expr::edge(1, 2), Expr::edge(2, 3))))
    }

    #[test]
    fn free_vars_respect_shadowing() {
        let e = Expr::sum(2, Expr::mul(Expr::edge(1, 2), Expr::sum(1, Expr::edge(2, 1))));
        assert_eq!(free_vars(&e), [1].into_iter().collect());
        let g = Expr::guarded("max", 1, 2, Expr::label(1, 2)).unwrap();
        assert_eq!(free_vars(&g), [1].into_iter().collect());
    }

    #[test]
    fn guarded_examples() {
        let e = Expr::sum(2, Expr::mul(Expr::edge(1, 2), Expr::label(1, 2)));
        let a = analyze(&e);
        assert!(a.guarded);
        assert_eq!(a.sum_depth, 1);
        assert!(!is_guarded(&Expr::sum(1, Expr::label(1, 1))));
        assert!(!is_guarded(&theta()));
        assert!(is_guarded(&Expr::sum(2, Expr::mul(Expr::edge(1, 2), Expr::sum(1, Expr::edge(2, 1))))));
        assert!(!is_guarded(&Expr::edge(1, 2)));
        assert!(!is_guarded(&Expr::label(1, 2)));
    }

    #[test]
    fn guarded_rejects_bad_body() {
        assert_eq!(
            Expr::guarded("sum", 1, 2, Expr::label(1, 1)),
            Err(ExprError::GuardBody { bound: 2, extra: 1 })
        );
    }

    #[test]
    fn compact_reuses_variables() {
        let c = compact_vars(&theta());
        let expect = Expr::sum(2, Expr::sum(1, Expr::mul(Expr::edge(1, 2), Expr::edge(2, 1))));
        // the inner binder cannot reuse x1 here because x1 is still free below it
        assert_ne!(c, expect);
        assert_eq!(used_vars(&c).len(), 3);
    }

    #[test]
    fn substitute_avoids_capture() {
        // Σ_{x2} E(x1,x2) with x1 := x2 must not become Σ_{x2} E(x2,x2)
        let e = Expr::sum(2, Expr::edge(1, 2));
        let mut m = BTreeMap::new();
        m.insert(1, 2);
        let s = substitute(&e, &m);
        match s {
            Expr::SumAgg(v, body) => {
                assert_ne!(v, 2);
                assert_eq!(*body, Expr::edge(2, v));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn depths() {
        let e = Expr::apply("relu", vec![Expr::sum(2, Expr::agg("max", 1, Expr::label(1, 1)))]);
        assert_eq!(sum_depth(&e), 1);
        assert_eq!(agg_depth(&e), 2);
        assert!(!function_free(&e));
    }
}
