//! Evaluation of expressions on a graph under a valuation.
//!
//! [`evaluate`] is a direct recursive interpreter of the semantics and is the
//! reference every other evaluation path is checked against.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::expr::{free_vars, Expr, Var};
use crate::graph::Graph;
use crate::num::Rat;
use crate::syntax::{NameScope, BUILTIN_AGGREGATIONS};
use crate::value::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Rational arithmetic; never falls back to floats.
    Exact,
    /// Binary64 arithmetic.
    Float,
}

#[derive(Clone, Debug, PartialEq)]
pub enum EvalError {
    Unbound(Var),
    VertexOutOfRange { vertex: usize, n: usize },
    LabelIndex { index: u32, ell: usize },
    /// A float label or float-only function met in exact mode.
    NotExact(String),
    UnknownFunction(String),
    UnknownAggregation(String),
    Arity { name: String, expected: usize, found: usize },
    /// Argument outside a function's domain (for example a pole).
    Domain { name: String, arg: f64 },
    EmptyAggregation(String),
    /// Bundle tuples of differing arity, or an expression needing more variables than a tuple binds.
    Signature(String),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::Unbound(v) => write!(f, "variable x{v} is unbound"),
            EvalError::VertexOutOfRange { vertex, n } => write!(f, "vertex {vertex} out of range for n = {n}"),
            EvalError::LabelIndex { index, ell } => write!(f, "label P{index} out of range (graph has {ell} label entries)"),
            EvalError::NotExact(what) => write!(f, "{what} is not available in exact mode"),
            EvalError::UnknownFunction(n) => write!(f, "unknown function @{n}"),
            EvalError::UnknownAggregation(n) => write!(f, "unknown aggregation @{n}"),
            EvalError::Arity { name, expected, found } => {
                write!(f, "@{name} takes {expected} argument(s), got {found}")
            }
            EvalError::Domain { name, arg } => write!(f, "@{name} is undefined at {arg}"),
            EvalError::EmptyAggregation(n) => write!(f, "@{n} of an empty multiset"),
            EvalError::Signature(msg) => f.write_str(msg),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

/// One dense layer `act(W x + b)`; `w` is indexed `[output][input]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub act: Activation,
}

/// A feed-forward network of dense layers.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

impl Mlp {
    /// Checks that consecutive layer shapes agree.
    pub fn new(layers: Vec<Layer>) -> Result<Mlp, String> {
        if layers.is_empty() {
            return Err("an MLP needs at least one layer".into());
        }
        let mut width = None;
        for (k, l) in layers.iter().enumerate() {
            if l.w.len() != l.b.len() {
                return Err(alloc::format!("layer {k}: {} weight rows but {} biases", l.w.len(), l.b.len()));
            }
            let cols = l.w.first().map_or(0, Vec::len);
            if l.w.iter().any(|r| r.len() != cols) {
                return Err(alloc::format!("layer {k}: ragged weight matrix"));
            }
            if let Some(prev) = width {
                if prev != cols {
                    return Err(alloc::format!("layer {k}: expects {cols} inputs, previous layer gives {prev}"));
                }
            }
            width = Some(l.w.len());
        }
        Ok(Mlp { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.first().map_or(0, Vec::len)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.w.len())
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        for l in &self.layers {
            cur = l
                .w
                .iter()
                .zip(&l.b)
                .map(|(row, b)| {
                    let s = row.iter().zip(&cur).map(|(w, v)| w * v).sum::<f64>() + b;
                    match l.act {
                        Activation::Relu => s.max(0.0),
                        Activation::Identity => s,
                    }
                })
                .collect();
        }
        cur
    }
}

/// A named pointwise function.
#[derive(Clone, Debug, PartialEq)]
pub enum Function {
    Relu,
    Sign,
    Identity,
    /// `1 / sqrt(x + 1)`
    RecipSqrtPlus1,
    /// `1 / sqrt(x)`
    RecipSqrt,
    /// `1 / x`
    Recip,
    /// `ln(1 + x)`
    Log1p,
    /// One output coordinate of an MLP; float mode only.
    MlpOutput(Arc<Mlp>, usize),
}

impl Function {
    pub fn arity(&self) -> usize {
        match self {
            Function::MlpOutput(m, _) => m.input_dim(),
            _ => 1,
        }
    }
}

/// Functions visible to `@name(...)`.
#[derive(Clone, Debug)]
pub struct FunctionRegistry {
    funcs: BTreeMap<String, Function>,
}

impl Default for FunctionRegistry {
    fn default() -> Self {
        let mut funcs = BTreeMap::new();
        for (n, f) in [
            ("relu", Function::Relu),
            ("sign", Function::Sign),
            ("identity", Function::Identity),
            ("recip_sqrt_plus1", Function::RecipSqrtPlus1),
            ("recip_sqrt", Function::RecipSqrt),
            ("recip", Function::Recip),
            ("log1p", Function::Log1p),
        ] {
            funcs.insert(String::from(n), f);
        }
        FunctionRegistry { funcs }
    }
}

impl FunctionRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, f: Function) {
        self.funcs.insert(String::from(name), f);
    }

    /// Registers `prefix_0 .. prefix_{d-1}`, one function per MLP output.
    pub fn insert_mlp(&mut self, prefix: &str, mlp: Arc<Mlp>) -> Vec<String> {
        (0..mlp.output_dim())
            .map(|o| {
                let name = alloc::format!("{prefix}_{o}");
                self.funcs.insert(name.clone(), Function::MlpOutput(mlp.clone(), o));
                name
            })
            .collect()
    }

    pub fn get(&self, name: &str) -> Option<&Function> {
        self.funcs.get(name)
    }

    pub fn merge(&mut self, other: &FunctionRegistry) {
        for (k, v) in &other.funcs {
            self.funcs.insert(k.clone(), v.clone());
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.funcs.keys().map(String::as_str)
    }
}

impl NameScope for FunctionRegistry {
    fn has_function(&self, name: &str) -> bool {
        self.funcs.contains_key(name)
    }
    fn has_aggregation(&self, name: &str) -> bool {
        BUILTIN_AGGREGATIONS.contains(&name)
    }
}

/// Arithmetic shared by the exact and float evaluation paths.
pub trait Scalar: Clone + PartialOrd {
    fn zero() -> Self;
    fn one() -> Self;
    fn count(n: usize) -> Self;
    fn coef(c: &Rat) -> Self;
    fn label(v: &Value) -> Result<Self, EvalError>;
    fn add(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn call(name: &str, f: &Function, args: &[Self]) -> Result<Self, EvalError>;
    fn aggregate(name: &str, vals: &[Self]) -> Result<Self, EvalError>;
    fn into_value(self) -> Value;
}

fn domain(name: &str, x: f64) -> EvalError {
    EvalError::Domain { name: String::from(name), arg: x }
}

impl Scalar for Rat {
    fn zero() -> Self {
        Rat::zero()
    }
    fn one() -> Self {
        Rat::one()
    }
    fn count(n: usize) -> Self {
        Rat::from(n)
    }
    fn coef(c: &Rat) -> Self {
        c.clone()
    }
    fn label(v: &Value) -> Result<Self, EvalError> {
        match v {
            Value::Exact(r) => Ok(r.clone()),
            Value::Float(_) => Err(EvalError::NotExact(String::from("a float label"))),
        }
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn call(name: &str, f: &Function, args: &[Self]) -> Result<Self, EvalError> {
        let x = &args[0];
        match f {
            Function::Relu => Ok(if x.signum() < 0 { Rat::zero() } else { x.clone() }),
            Function::Sign => Ok(Rat::from_int(x.signum() as i64)),
            Function::Identity => Ok(x.clone()),
            Function::Recip => x.recip().ok_or_else(|| domain(name, 0.0)),
            _ => Err(EvalError::NotExact(alloc::format!("@{name}"))),
        }
    }
    fn aggregate(name: &str, vals: &[Self]) -> Result<Self, EvalError> {
        if name == "sum" {
            return Ok(vals.iter().fold(Rat::zero(), |a, b| &a + b));
        }
        if vals.is_empty() && BUILTIN_AGGREGATIONS.contains(&name) {
            return Err(EvalError::EmptyAggregation(String::from(name)));
        }
        match name {
            "max" => Ok(vals.iter().max().cloned().expect("non-empty")),
            "min" => Ok(vals.iter().min().cloned().expect("non-empty")),
            "mean" => Ok(&vals.iter().fold(Rat::zero(), |a, b| &a + b) / &Rat::from(vals.len())),
            "stdv" => Err(EvalError::NotExact(String::from("@stdv"))),
            _ => Err(EvalError::UnknownAggregation(String::from(name))),
        }
    }
    fn into_value(self) -> Value {
        Value::Exact(self)
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn count(n: usize) -> Self {
        n as f64
    }
    fn coef(c: &Rat) -> Self {
        c.to_f64()
    }
    fn label(v: &Value) -> Result<Self, EvalError> {
        Ok(v.to_f64())
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn call(name: &str, f: &Function, args: &[Self]) -> Result<Self, EvalError> {
        let x = args[0];
        match f {
            Function::Relu => Ok(x.max(0.0)),
            Function::Sign => Ok(if x > 0.0 {
                1.0
            } else if x < 0.0 {
                -1.0
            } else {
                0.0
            }),
            Function::Identity => Ok(x),
            Function::RecipSqrtPlus1 if x + 1.0 > 0.0 => Ok(1.0 / libm::sqrt(x + 1.0)),
            Function::RecipSqrt if x > 0.0 => Ok(1.0 / libm::sqrt(x)),
            Function::Recip if x != 0.0 => Ok(1.0 / x),
            Function::Log1p if x > -1.0 => Ok(libm::log1p(x)),
            Function::MlpOutput(m, o) => Ok(m.forward(args)[*o]),
            _ => Err(domain(name, x)),
        }
    }
    fn aggregate(name: &str, vals: &[Self]) -> Result<Self, EvalError> {
        if name == "sum" {
            return Ok(vals.iter().sum());
        }
        if vals.is_empty() && BUILTIN_AGGREGATIONS.contains(&name) {
            return Err(EvalError::EmptyAggregation(String::from(name)));
        }
        let mean = || vals.iter().sum::<f64>() / vals.len() as f64;
        match name {
            "max" => Ok(vals.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            "min" => Ok(vals.iter().copied().fold(f64::INFINITY, f64::min)),
            "mean" => Ok(mean()),
            "stdv" => {
                let m = mean();
                let var = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / vals.len() as f64;
                Ok(libm::sqrt(var))
            }
            _ => Err(EvalError::UnknownAggregation(String::from(name))),
        }
    }
    fn into_value(self) -> Value {
        Value::Float(self)
    }
}

/// Partial map from variables to vertices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Valuation(Vec<Option<usize>>);

impl Valuation {
    pub fn new() -> Self {
        Self::default()
    }

    /// `x_{i+1} ↦ tuple[i]`.
    pub fn from_tuple(tuple: &[usize]) -> Self {
        Valuation(tuple.iter().map(|&v| Some(v)).collect())
    }

    pub fn get(&self, x: Var) -> Option<usize> {
        self.0.get(x as usize - 1).copied().flatten()
    }

    pub fn set(&mut self, x: Var, v: Option<usize>) {
        let i = x as usize - 1;
        if self.0.len() <= i {
            self.0.resize(i + 1, None);
        }
        self.0[i] = v;
    }

    pub fn with(mut self, x: Var, v: usize) -> Self {
        self.set(x, Some(v));
        self
    }
}

pub(crate) fn check_function(funcs: &FunctionRegistry, name: &str, n_args: usize) -> Result<Function, EvalError> {
    let f = funcs.get(name).ok_or_else(|| EvalError::UnknownFunction(String::from(name)))?;
    if f.arity() != n_args {
        return Err(EvalError::Arity { name: String::from(name), expected: f.arity(), found: n_args });
    }
    Ok(f.clone())
}

pub(crate) fn label_of<T: Scalar>(g: &Graph, s: u32, v: usize) -> Result<T, EvalError> {
    let l = g.label(v);
    match l.get(s as usize - 1) {
        Some(x) => T::label(x),
        None => Err(EvalError::LabelIndex { index: s, ell: g.ell() }),
    }
}

struct Interp<'a> {
    g: &'a Graph,
    funcs: &'a FunctionRegistry,
}

impl Interp<'_> {
    fn var(&self, nu: &Valuation, x: Var) -> Result<usize, EvalError> {
        nu.get(x).ok_or(EvalError::Unbound(x))
    }

    fn bool<T: Scalar>(b: bool) -> T {
        if b {
            T::one()
        } else {
            T::zero()
        }
    }

    fn eval<T: Scalar>(&self, e: &Expr, nu: &mut Valuation) -> Result<T, EvalError> {
        match e {
            Expr::One => Ok(T::one()),
            Expr::EqPred(i, j, op) => {
                let same = self.var(nu, *i)? == self.var(nu, *j)?;
                Ok(Self::bool(same == (*op == crate::expr::CmpOp::Eq)))
            }
            Expr::EdgePred(i, j) => Ok(Self::bool(self.g.has_edge(self.var(nu, *i)?, self.var(nu, *j)?))),
            Expr::LabelPred(s, i) => label_of(self.g, *s, self.var(nu, *i)?),
            Expr::Product(a, b) => Ok(self.eval::<T>(a, nu)?.mul(&self.eval::<T>(b, nu)?)),
            Expr::Add(a, b) => Ok(self.eval::<T>(a, nu)?.add(&self.eval::<T>(b, nu)?)),
            Expr::Scale(c, a) => Ok(T::coef(c).mul(&self.eval::<T>(a, nu)?)),
            Expr::Apply(name, args) => {
                let f = check_function(self.funcs, name, args.len())?;
                let vals = args.iter().map(|a| self.eval::<T>(a, nu)).collect::<Result<Vec<T>, _>>()?;
                T::call(name, &f, &vals)
            }
            Expr::SumAgg(y, body) => {
                let vals = self.over(*y, body, nu, 0..self.g.n())?;
                T::aggregate("sum", &vals)
            }
            Expr::UncondAgg(name, y, body) => {
                let vals = self.over(*y, body, nu, 0..self.g.n())?;
                T::aggregate(name, &vals)
            }
            Expr::GuardedAgg(name, i, j, body) => {
                let a = self.var(nu, *i)?;
                let vals = self.over(*j, body, nu, self.g.neighbors(a).iter().copied())?;
                T::aggregate(name, &vals)
            }
        }
    }

    fn over<T: Scalar, I: Iterator<Item = usize>>(&self, y: Var, body: &Expr, nu: &mut Valuation, vs: I) -> Result<Vec<T>, EvalError> {
        let saved = nu.get(y);
        let mut out = Vec::new();
        for v in vs {
            nu.set(y, Some(v));
            match self.eval::<T>(body, nu) {
                Ok(x) => out.push(x),
                Err(err) => {
                    nu.set(y, saved);
                    return Err(err);
                }
            }
        }
        nu.set(y, saved);
        Ok(out)
    }
}

fn check_valuation(g: &Graph, nu: &Valuation) -> Result<(), EvalError> {
    for v in nu.0.iter().flatten() {
        if *v >= g.n() {
            return Err(EvalError::VertexOutOfRange { vertex: *v, n: g.n() });
        }
    }
    Ok(())
}

/// `[[e]]_G(ν)`.
pub fn evaluate(e: &Expr, g: &Graph, nu: &Valuation, mode: Mode, funcs: &FunctionRegistry) -> Result<Value, EvalError> {
    check_valuation(g, nu)?;
    let it = Interp { g, funcs };
    let mut nu = nu.clone();
    match mode {
        Mode::Exact => it.eval::<Rat>(e, &mut nu).map(Scalar::into_value),
        Mode::Float => it.eval::<f64>(e, &mut nu).map(Scalar::into_value),
    }
}

/// Values of several expressions at several tuples: one row per tuple.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub tuples: Vec<Vec<usize>>,
    pub rows: Vec<Vec<Value>>,
}

/// Evaluates every expression at every tuple, binding `x_i` to the `i`-th entry.
pub fn evaluate_bundle(exprs: &[Expr], g: &Graph, tuples: &[Vec<usize>], mode: Mode, funcs: &FunctionRegistry) -> Result<Table, EvalError> {
    check_signature(exprs, tuples)?;
    let mut rows = Vec::with_capacity(tuples.len());
    for t in tuples {
        let nu = Valuation::from_tuple(t);
        rows.push(exprs.iter().map(|e| evaluate(e, g, &nu, mode, funcs)).collect::<Result<Vec<_>, _>>()?);
    }
    Ok(Table { tuples: tuples.to_vec(), rows })
}

/// Common tuple arity; errors if tuples disagree or an expression needs a variable beyond it.
pub(crate) fn check_signature(exprs: &[Expr], tuples: &[Vec<usize>]) -> Result<usize, EvalError> {
    let s = tuples.first().map_or(0, Vec::len);
    if tuples.iter().any(|t| t.len() != s) {
        return Err(EvalError::Signature(String::from("bundle tuples have differing lengths")));
    }
    if !tuples.is_empty() {
        for (k, e) in exprs.iter().enumerate() {
            if let Some(v) = free_vars(e).into_iter().find(|&v| v as usize > s) {
                return Err(EvalError::Signature(alloc::format!("expression {k} has x{v} free but tuples bind only x1..x{s}")));
            }
        }
    }
    Ok(s)
}

/// All `n^k` tuples in lexicographic order.
pub fn all_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let total = n.checked_pow(k as u32).unwrap_or(0);
    for mut idx in 0..total {
        let mut t = alloc::vec![0; k];
        for p in (0..k).rev() {
            t[p] = idx % n;
            idx /= n;
        }
        out.push(t);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;
    use alloc::vec;

    fn exact(e: &str, g: &Graph, t: &[usize]) -> Result<Value, EvalError> {
        evaluate(&parse(e).unwrap(), g, &Valuation::from_tuple(t), Mode::Exact, &FunctionRegistry::new())
    }

    #[test]
    fn degree_and_labels() {
        let g = Graph::with_scalar_labels(3, &[(0, 1), (1, 2)], &[1, 2, 3]).unwrap();
        assert_eq!(exact("sum x2 : E(x1,x2)", &g, &[1]).unwrap(), Value::int(2));
        assert_eq!(exact("sum x2 : E(x1,x2) * P1(x2)", &g, &[1]).unwrap(), Value::int(4));
    }

    #[test]
    fn shadowing_rebinds() {
        let g = Graph::path(4);
        let v: Vec<_> = (0..4).map(|v| exact("sum x2 : E(x1,x2) * (sum x1 : E(x2,x1))", &g, &[v]).unwrap()).collect();
        assert_eq!(v, vec![Value::int(2), Value::int(3), Value::int(3), Value::int(2)]);
    }

    #[test]
    fn unbound_and_label_errors() {
        let g = Graph::path(2);
        assert_eq!(exact("E(x1,x2)", &g, &[0]), Err(EvalError::Unbound(2)));
        assert_eq!(exact("P1(x1)", &g, &[0]), Err(EvalError::LabelIndex { index: 1, ell: 0 }));
    }

    #[test]
    fn empty_aggregations() {
        let g = Graph::unlabelled(1, &[]).unwrap();
        assert_eq!(exact("agg @sum x2 | E(x1,x2) : 1", &g, &[0]).unwrap(), Value::int(0));
        assert_eq!(exact("agg @max x2 | E(x1,x2) : 1", &g, &[0]), Err(EvalError::EmptyAggregation("max".into())));
    }

    #[test]
    fn float_only_functions() {
        let g = Graph::path(2);
        assert!(matches!(exact("@recip_sqrt_plus1(1)", &g, &[0]), Err(EvalError::NotExact(_))));
        let f = evaluate(&parse("@recip_sqrt_plus1(3/1 * 1)").unwrap(), &g, &Valuation::new(), Mode::Float, &FunctionRegistry::new()).unwrap();
        assert_eq!(f, Value::Float(0.5));
        let pole = evaluate(&parse("@recip_sqrt(0 * 1)").unwrap(), &g, &Valuation::new(), Mode::Float, &FunctionRegistry::new());
        assert!(matches!(pole, Err(EvalError::Domain { .. })));
    }

    #[test]
    fn bundle_signature() {
        let g = Graph::path(3);
        let es = vec![parse("E(x1,x2)").unwrap()];
        let err = evaluate_bundle(&es, &g, &[vec![0]], Mode::Exact, &FunctionRegistry::new());
        assert!(matches!(err, Err(EvalError::Signature(_))));
        let ok = evaluate_bundle(&es, &g, &all_tuples(3, 2), Mode::Exact, &FunctionRegistry::new()).unwrap();
        assert_eq!(ok.rows.len(), 9);
    }
}
