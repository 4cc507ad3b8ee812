//! Whole-table evaluation.
//!
//! Every subexpression is evaluated once into a dense table indexed by
//! assignments to its free variables, then combined bottom-up. Shared
//! subtrees are evaluated once. Results agree with [`crate::eval::evaluate`]
//! entry for entry; use this path when the same expression is needed at
//! every tuple of a graph. Unlike the interpreter it evaluates every entry,
//! so an error anywhere in a table (an empty `max`, say) is reported even
//! when the requested tuples would not reach it.

use alloc::collections::BTreeMap;
use alloc::rc::Rc;
use alloc::vec;
use alloc::vec::Vec;

use crate::eval::{check_function, label_of, EvalError, FunctionRegistry, Mode, Scalar};
use crate::expr::{CmpOp, Expr, Var};
use crate::graph::Graph;
use crate::num::Rat;
use crate::value::Value;

/// Values of an expression at every assignment of `vars` (sorted), row-major.
#[derive(Clone, Debug)]
pub struct ValueTable<T> {
    pub vars: Vec<Var>,
    pub data: Vec<T>,
}

impl<T: Clone> ValueTable<T> {
    /// Looks up the entry for `assign(v)` on each of `vars`.
    pub fn at(&self, n: usize, assign: &dyn Fn(Var) -> usize) -> &T {
        let mut idx = 0;
        for &v in &self.vars {
            idx = idx * n + assign(v);
        }
        &self.data[idx]
    }
}

/// Caches tables by node address, so every expression passed to one
/// evaluator must stay alive for as long as the evaluator is used.
pub struct TableEvaluator<'a, T> {
    g: &'a Graph,
    funcs: &'a FunctionRegistry,
    memo: BTreeMap<usize, Rc<ValueTable<T>>>,
}

fn union(a: &[Var], b: &[Var]) -> Vec<Var> {
    let mut v: Vec<Var> = a.iter().chain(b).copied().collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// For each assignment of `out` (row-major), the matching row of a table over `sub ⊆ out`.
fn projection(n: usize, out: &[Var], sub: &[Var]) -> Vec<usize> {
    let pos: Vec<usize> = sub.iter().map(|v| out.iter().position(|w| w == v).expect("subset")).collect();
    let total = n.pow(out.len() as u32);
    let mut idx = vec![0usize; out.len()];
    let mut res = Vec::with_capacity(total);
    for _ in 0..total {
        res.push(pos.iter().fold(0, |acc, &p| acc * n + idx[p]));
        for d in (0..out.len()).rev() {
            idx[d] += 1;
            if idx[d] < n {
                break;
            }
            idx[d] = 0;
        }
    }
    res
}

impl<'a, T: Scalar> TableEvaluator<'a, T> {
    pub fn new(g: &'a Graph, funcs: &'a FunctionRegistry) -> Self {
        TableEvaluator { g, funcs, memo: BTreeMap::new() }
    }

    fn n(&self) -> usize {
        self.g.n()
    }

    fn bool(b: bool) -> T {
        if b {
            T::one()
        } else {
            T::zero()
        }
    }

    fn grid(&self, vars: Vec<Var>, f: impl Fn(&[usize]) -> Result<T, EvalError>) -> Result<ValueTable<T>, EvalError> {
        let n = self.n();
        let k = vars.len();
        let total = n.pow(k as u32);
        let mut data = Vec::with_capacity(total);
        let mut idx = vec![0usize; k];
        for _ in 0..total {
            data.push(f(&idx)?);
            for d in (0..k).rev() {
                idx[d] += 1;
                if idx[d] < n {
                    break;
                }
                idx[d] = 0;
            }
        }
        Ok(ValueTable { vars, data })
    }

    /// Two-variable table `f(ν(i), ν(j))`, collapsing to one axis when `i == j`.
    fn binary(&self, i: Var, j: Var, f: impl Fn(usize, usize) -> bool) -> Result<ValueTable<T>, EvalError> {
        if i == j {
            return self.grid(vec![i], |a| Ok(Self::bool(f(a[0], a[0]))));
        }
        let swap = i > j;
        self.grid(vec![i.min(j), i.max(j)], |a| Ok(Self::bool(if swap { f(a[1], a[0]) } else { f(a[0], a[1]) })))
    }

    /// Table of `e` over its free variables.
    pub fn table(&mut self, e: &Expr) -> Result<Rc<ValueTable<T>>, EvalError> {
        let key = e as *const Expr as usize;
        if let Some(t) = self.memo.get(&key) {
            return Ok(t.clone());
        }
        let t = Rc::new(self.compute(e)?);
        self.memo.insert(key, t.clone());
        Ok(t)
    }

    fn compute(&mut self, e: &Expr) -> Result<ValueTable<T>, EvalError> {
        let n = self.n();
        let g = self.g;
        match e {
            Expr::One => Ok(ValueTable { vars: vec![], data: vec![T::one()] }),
            Expr::EqPred(i, j, op) => {
                let want = *op == CmpOp::Eq;
                self.binary(*i, *j, |a, b| (a == b) == want)
            }
            Expr::EdgePred(i, j) => self.binary(*i, *j, |a, b| g.has_edge(a, b)),
            Expr::LabelPred(s, i) => self.grid(vec![*i], |a| label_of::<T>(g, *s, a[0])),
            Expr::Product(a, b) | Expr::Add(a, b) => {
                let (ta, tb) = (self.table(a)?, self.table(b)?);
                let vars = union(&ta.vars, &tb.vars);
                let (pa, pb) = (projection(n, &vars, &ta.vars), projection(n, &vars, &tb.vars));
                let is_mul = matches!(e, Expr::Product(..));
                let data = pa
                    .iter()
                    .zip(&pb)
                    .map(|(&x, &y)| if is_mul { ta.data[x].mul(&tb.data[y]) } else { ta.data[x].add(&tb.data[y]) })
                    .collect();
                Ok(ValueTable { vars, data })
            }
            Expr::Scale(c, a) => {
                let t = self.table(a)?;
                let c = T::coef(c);
                Ok(ValueTable { vars: t.vars.clone(), data: t.data.iter().map(|x| c.mul(x)).collect() })
            }
            Expr::Apply(name, args) => {
                let f = check_function(self.funcs, name, args.len())?;
                let ts = args.iter().map(|a| self.table(a)).collect::<Result<Vec<_>, _>>()?;
                let vars = ts.iter().fold(Vec::new(), |acc, t| union(&acc, &t.vars));
                let ps: Vec<Vec<usize>> = ts.iter().map(|t| projection(n, &vars, &t.vars)).collect();
                let total = n.pow(vars.len() as u32);
                let mut data = Vec::with_capacity(total);
                let mut buf = Vec::with_capacity(ts.len());
                for r in 0..total {
                    buf.clear();
                    buf.extend(ts.iter().zip(&ps).map(|(t, p)| t.data[p[r]].clone()));
                    data.push(T::call(name, &f, &buf)?);
                }
                Ok(ValueTable { vars, data })
            }
            Expr::SumAgg(y, body) => self.over_all("sum", *y, body),
            Expr::UncondAgg(name, y, body) => self.over_all(name, *y, body),
            Expr::GuardedAgg(name, i, j, body) => {
                let t = self.table(body)?;
                let uses_j = t.vars.contains(j);
                let mut vals = Vec::new();
                let mut data = Vec::with_capacity(n);
                for a in 0..n {
                    vals.clear();
                    for &b in g.neighbors(a) {
                        vals.push(if uses_j { t.data[b].clone() } else { t.data[0].clone() });
                    }
                    data.push(T::aggregate(name, &vals)?);
                }
                Ok(ValueTable { vars: vec![*i], data })
            }
        }
    }

    fn over_all(&mut self, name: &str, y: Var, body: &Expr) -> Result<ValueTable<T>, EvalError> {
        let n = self.n();
        let t = self.table(body)?;
        let Some(p) = t.vars.iter().position(|v| *v == y) else {
            let data = t.data.iter().map(|x| T::aggregate(name, &vec![x.clone(); n])).collect::<Result<_, _>>()?;
            return Ok(ValueTable { vars: t.vars.clone(), data });
        };
        let vars: Vec<Var> = t.vars.iter().copied().filter(|v| *v != y).collect();
        let inner = n.pow((t.vars.len() - p - 1) as u32);
        let outer = n.pow(p as u32);
        let mut data = Vec::with_capacity(outer * inner);
        let mut vals = Vec::with_capacity(n);
        for o in 0..outer {
            for i in 0..inner {
                vals.clear();
                vals.extend((0..n).map(|k| t.data[(o * n + k) * inner + i].clone()));
                data.push(T::aggregate(name, &vals)?);
            }
        }
        Ok(ValueTable { vars, data })
    }
}

/// Values of `e` at every tuple in `tuples` (each binding `x1..x_k`), via tables.
pub fn evaluate_all(e: &Expr, g: &Graph, tuples: &[Vec<usize>], mode: Mode, funcs: &FunctionRegistry) -> Result<Vec<Value>, EvalError> {
    fn run<T: Scalar>(e: &Expr, g: &Graph, tuples: &[Vec<usize>], funcs: &FunctionRegistry) -> Result<Vec<Value>, EvalError> {
        let mut ev = TableEvaluator::<T>::new(g, funcs);
        let t = ev.table(e)?;
        tuples
            .iter()
            .map(|tup| {
                for &v in &t.vars {
                    if v as usize > tup.len() {
                        return Err(EvalError::Unbound(v));
                    }
                }
                Ok(t.at(g.n(), &|v| tup[v as usize - 1]).clone().into_value())
            })
            .collect()
    }
    match mode {
        Mode::Exact => run::<Rat>(e, g, tuples, funcs),
        Mode::Float => run::<f64>(e, g, tuples, funcs),
    }
}
