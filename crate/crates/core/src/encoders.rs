//! GNN layers written as expressions, dense reference forward passes, and
//! the separation bounds that follow from an expression bundle's shape.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::eval::{all_tuples, Activation, FunctionRegistry, Mlp};
use crate::expr::{analyze, free_vars, is_guarded, map_all_vars, swap_vars, Expr, Var};
use crate::graph::Graph;
use crate::num::Rat;
use crate::treewidth::{reduce_ign_term, rewrite_min_vars, set_partitions, EqualityPattern, IgnTerm};

/// Row-major `[out][in]`.
pub type Matrix = Vec<Vec<Rat>>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EncodeError {
    Shape(String),
    DisconnectedPattern(usize),
    NoLayers,
}

impl fmt::Display for EncodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EncodeError::Shape(m) => write!(f, "shape mismatch: {m}"),
            EncodeError::DisconnectedPattern(i) => write!(f, "pattern {i} is not connected"),
            EncodeError::NoLayers => f.write_str("architecture needs at least one layer"),
        }
    }
}

/// `σ(V·F(v) + Σ_{u∈N(v)} W·F(u) + b)`, or with a general neighbour aggregation.
#[derive(Clone, Debug)]
pub struct SageLayer {
    pub v: Matrix,
    pub w: Matrix,
    pub b: Vec<Rat>,
    /// `sum`, `mean`, `max`, `min` or `stdv`.
    pub agg: String,
    pub act: Activation,
}

#[derive(Clone, Debug)]
pub struct DenseLayer {
    pub w: Matrix,
    pub b: Vec<Rat>,
    pub act: Activation,
}

#[derive(Clone, Debug)]
pub struct PnaLayer {
    /// Applied to neighbour features before the four aggregations.
    pub inner: Arc<Mlp>,
    /// Reads the 12 scaled aggregates.
    pub outer: Arc<Mlp>,
    /// Registry functions of the degree.
    pub scalers: [String; 2],
}

#[derive(Clone, Debug)]
pub struct FgnnLayer {
    pub mlp0: Arc<Mlp>,
    /// One per tuple position.
    pub mlps: Vec<Arc<Mlp>>,
}

#[derive(Clone, Debug)]
pub struct KginLayer {
    pub mlp0: Arc<Mlp>,
    pub mlp1: Arc<Mlp>,
}

/// An equivariant linear layer on k-tuples.
#[derive(Clone, Debug)]
pub struct IgnLayer {
    /// `c[γ][j][i]`, with `γ` ranging over [`set_partitions`]`(2k)`.
    pub c: Vec<Matrix>,
    /// `b[μ][j]`, with `μ` ranging over [`set_partitions`]`(k)`.
    pub b: Vec<Vec<Rat>>,
    pub act: Activation,
}

#[derive(Clone, Debug)]
pub struct ChebLayer {
    /// One weight matrix per Chebyshev term.
    pub ws: Vec<Matrix>,
    pub act: Activation,
}

#[derive(Clone, Debug)]
pub enum Architecture {
    Gin(Vec<Arc<Mlp>>),
    Egin(Vec<Arc<Mlp>>),
    GraphSage(Vec<SageLayer>),
    Gcn(Vec<DenseLayer>),
    Sgc { p: usize, w: Matrix, act: Activation },
    Pna(Vec<PnaLayer>),
    Fgnn { k: usize, layers: Vec<FgnnLayer> },
    Kgin { k: usize, layers: Vec<KginLayer> },
    /// `reduced` rewrites each layer onto `k` variables.
    Ign { k: usize, layers: Vec<IgnLayer>, reduced: bool },
    Readout { inner: Box<Architecture>, ro: Option<Arc<Mlp>> },
    /// Rooted homomorphism counts; vertex 0 of each pattern is the root.
    HomCount(Vec<Graph>),
    /// The normalised-Laplacian recursion with `2/λ_max` replaced by `c`.
    ChebNet { c: Rat, layers: Vec<ChebLayer> },
}

/// An architecture over graphs with `ell`-dimensional labels.
#[derive(Clone, Debug)]
pub struct GnnSpec {
    pub arch: Architecture,
    pub ell: usize,
}

/// Output expressions with the functions they call.
#[derive(Clone, Debug)]
pub struct Bundle {
    pub exprs: Vec<Expr>,
    pub functions: FunctionRegistry,
    /// Number of free variables, `x1..x_arity`.
    pub arity: usize,
    /// Aggregation depth reached after each layer.
    pub layer_depths: Vec<usize>,
}

fn shape(cond: bool, msg: impl FnOnce() -> String) -> Result<(), EncodeError> {
    if cond {
        Ok(())
    } else {
        Err(EncodeError::Shape(msg()))
    }
}

fn check_matrix(m: &Matrix, rows: Option<usize>, cols: usize, what: &str) -> Result<usize, EncodeError> {
    if let Some(r) = rows {
        shape(m.len() == r, || format!("{what} has {} rows, expected {r}", m.len()))?;
    }
    for row in m {
        shape(row.len() == cols, || format!("{what} rows have length {}, expected {cols}", row.len()))?;
    }
    Ok(m.len())
}

fn check_mlp(m: &Mlp, input: usize, what: &str) -> Result<usize, EncodeError> {
    shape(m.input_dim() == input, || format!("{what} takes {} inputs, expected {input}", m.input_dim()))?;
    Ok(m.output_dim())
}

/// `Σ c_i e_i`, dropping zero coefficients; `None` when nothing survives.
fn lin<I: IntoIterator<Item = (Rat, Expr)>>(terms: I) -> Option<Expr> {
    let mut acc: Option<Expr> = None;
    for (c, e) in terms {
        if c.is_zero() {
            continue;
        }
        let t = if c.is_one() { e } else { Expr::scale(c, e) };
        acc = Some(match acc {
            None => t,
            Some(a) => Expr::add(a, t),
        });
    }
    acc
}

fn plus(a: Option<Expr>, b: Expr) -> Expr {
    match a {
        Some(a) => Expr::add(a, b),
        None => b,
    }
}

fn activate(act: Activation, e: Expr) -> Expr {
    match act {
        Activation::Relu => Expr::apply("relu", vec![e]),
        Activation::Identity => e,
    }
}

fn guarded_sum(body: Expr) -> Expr {
    Expr::sum(2, Expr::mul(Expr::edge(1, 2), body))
}

/// `φ(x1)` as `φ(x2)`.
fn at2(e: &Expr) -> Expr {
    swap_vars(e, 1, 2)
}

fn degree() -> Expr {
    Expr::sum(2, Expr::edge(1, 2))
}

fn mlp_outputs(funcs: &mut FunctionRegistry, prefix: &str, mlp: &Arc<Mlp>, inputs: &[Expr]) -> Vec<Expr> {
    funcs.insert_mlp(prefix, mlp.clone()).into_iter().map(|name| Expr::Apply(name, inputs.to_vec())).collect()
}

/// Atomic-type features of k-tuples: equalities, adjacencies, then labels per position.
fn atp_features(k: usize, ell: usize) -> Vec<Expr> {
    let pairs: Vec<(Var, Var)> = (1..=k as Var).flat_map(|i| (i + 1..=k as Var).map(move |j| (i, j))).collect();
    let mut out: Vec<Expr> = pairs.iter().map(|&(i, j)| Expr::eq(i, j)).collect();
    out.extend(pairs.iter().map(|&(i, j)| Expr::edge(i, j)));
    for i in 1..=k as Var {
        for s in 1..=ell as u32 {
            out.push(Expr::label(s, i));
        }
    }
    out
}

pub fn atp_dim(k: usize, ell: usize) -> usize {
    k * k.saturating_sub(1) + k * ell
}

/// Feature dimension of the FGNN initial tensor.
pub fn fgnn_initial_dim(k: usize, ell: usize) -> usize {
    k * k * (ell + 2)
}

fn fgnn_initial(k: usize, ell: usize) -> Vec<Expr> {
    let mut out = Vec::new();
    for r in 1..=k as Var {
        for s in 1..=k as Var {
            for j in 1..=ell as u32 {
                out.push(Expr::mul(Expr::eq(r, s), Expr::label(j, r)));
            }
            out.push(Expr::edge(r, s));
            out.push(Expr::eq(r, s));
        }
    }
    out
}

/// Indicator of a full equality pattern over `x_1..x_m` given as block ids.
fn pattern_indicator(blocks: &[usize]) -> Expr {
    let mut f = Vec::new();
    for a in 0..blocks.len() {
        for b in a + 1..blocks.len() {
            let (x, y) = (a as Var + 1, b as Var + 1);
            f.push(if blocks[a] == blocks[b] { Expr::eq(x, y) } else { Expr::neq(x, y) });
        }
    }
    Expr::product_of(f)
}

/// Polynomial coefficients (in `M = D^{-1/2} A D^{-1/2}`) of the Chebyshev
/// matrices `C^(1) .. C^(p)`.
pub fn cheb_coefficients(c: &Rat, p: usize) -> Vec<Vec<Rat>> {
    let mut out: Vec<Vec<Rat>> = Vec::new();
    let c2 = vec![c - &Rat::one(), -c.clone()];
    for s in 0..p {
        let next = match s {
            0 => vec![Rat::one()],
            1 => c2.clone(),
            _ => {
                let prev = &out[s - 1];
                let prev2 = &out[s - 2];
                let mut r = vec![Rat::zero(); prev.len() + 1];
                for (i, a) in c2.iter().enumerate() {
                    for (j, b) in prev.iter().enumerate() {
                        r[i + j] = &r[i + j] + &(&Rat::from_int(2) * &(a * b));
                    }
                }
                for (i, b) in prev2.iter().enumerate() {
                    r[i] = &r[i] - b;
                }
                r
            }
        };
        out.push(next);
    }
    out
}

/// `M·ψ` for `M = D^{-1/2} A D^{-1/2}`.
fn normalized_adjacency(psi: &Expr) -> Expr {
    let rs = |d: Expr| Expr::apply("recip_sqrt", vec![d]);
    Expr::mul(rs(degree()), guarded_sum(Expr::mul(rs(at2(&degree())), at2(psi))))
}

/// Compiles `spec` into one expression per output feature.
pub fn encode(spec: &GnnSpec) -> Result<Bundle, EncodeError> {
    let mut funcs = FunctionRegistry::new();
    let ell = spec.ell;
    let mut depths = Vec::new();
    let (exprs, arity) = encode_arch(&spec.arch, ell, &mut funcs, &mut depths)?;
    Ok(Bundle { exprs, functions: funcs, arity, layer_depths: depths })
}

fn max_depth(es: &[Expr]) -> usize {
    es.iter().map(crate::expr::agg_depth).max().unwrap_or(0)
}

fn labels(ell: usize) -> Vec<Expr> {
    (1..=ell as u32).map(|s| Expr::label(s, 1)).collect()
}

fn encode_arch(arch: &Architecture, ell: usize, funcs: &mut FunctionRegistry, depths: &mut Vec<usize>) -> Result<(Vec<Expr>, usize), EncodeError> {
    match arch {
        Architecture::Gin(layers) | Architecture::Egin(layers) => {
            let extended = matches!(arch, Architecture::Egin(_));
            if layers.is_empty() {
                return Err(EncodeError::NoLayers);
            }
            let mut feats = labels(ell);
            for (t, mlp) in layers.iter().enumerate() {
                let d = feats.len();
                check_mlp(mlp, if extended { 3 * d } else { 2 * d }, &format!("layer {} MLP", t + 1))?;
                let mut inputs = feats.clone();
                inputs.extend(feats.iter().map(|f| guarded_sum(at2(f))));
                if extended {
                    inputs.extend(feats.iter().map(|f| Expr::sum(2, at2(f))));
                }
                let prefix = if extended { format!("egin{}", t + 1) } else { format!("gin{}", t + 1) };
                feats = mlp_outputs(funcs, &prefix, mlp, &inputs);
                depths.push(max_depth(&feats));
            }
            Ok((feats, 1))
        }
        Architecture::GraphSage(layers) => {
            if layers.is_empty() {
                return Err(EncodeError::NoLayers);
            }
            let mut feats = labels(ell);
            for l in layers {
                let d = feats.len();
                let out = check_matrix(&l.v, None, d, "V")?;
                check_matrix(&l.w, Some(out), d, "W")?;
                shape(l.b.len() == out, || format!("bias has length {}, expected {out}", l.b.len()))?;
                let mut next = Vec::with_capacity(out);
                for j in 0..out {
                    let own = lin((0..d).map(|i| (l.v[j][i].clone(), feats[i].clone())));
                    let nb = if l.agg == "sum" {
                        lin((0..d).map(|i| (l.w[j][i].clone(), at2(&feats[i])))).map(guarded_sum)
                    } else {
                        lin((0..d).map(|i| {
                            (l.w[j][i].clone(), Expr::GuardedAgg(l.agg.clone(), 1, 2, Arc::new(at2(&feats[i]))))
                        }))
                    };
                    let bias = Expr::scale(l.b[j].clone(), Expr::eq(1, 1));
                    let pre = match (own, nb) {
                        (Some(a), Some(b)) => Expr::add(Expr::add(a, b), bias),
                        (Some(a), None) | (None, Some(a)) => Expr::add(a, bias),
                        (None, None) => bias,
                    };
                    next.push(activate(l.act, pre));
                }
                feats = next;
                depths.push(max_depth(&feats));
            }
            Ok((feats, 1))
        }
        Architecture::Gcn(layers) => {
            if layers.is_empty() {
                return Err(EncodeError::NoLayers);
            }
            let mut feats = labels(ell);
            let g = || Expr::apply("recip_sqrt_plus1", vec![degree()]);
            for l in layers {
                let d = feats.len();
                let out = check_matrix(&l.w, None, d, "W")?;
                shape(l.b.len() == out, || format!("bias has length {}, expected {out}", l.b.len()))?;
                let mut next = Vec::with_capacity(out);
                for j in 0..out {
                    let bias = Expr::scale(l.b[j].clone(), Expr::eq(1, 1));
                    let pre = match lin((0..d).map(|i| (l.w[j][i].clone(), feats[i].clone()))) {
                        None => bias,
                        Some(h) => {
                            let self_term = Expr::mul(Expr::mul(g(), h.clone()), g());
                            let nb = Expr::mul(g(), guarded_sum(Expr::mul(at2(&g()), at2(&h))));
                            Expr::add(Expr::add(self_term, nb), bias)
                        }
                    };
                    next.push(activate(l.act, pre));
                }
                feats = next;
                depths.push(max_depth(&feats));
            }
            Ok((feats, 1))
        }
        Architecture::Sgc { p, w, act } => {
            let out = check_matrix(w, None, ell, "W")?;
            let p = *p as Var;
            let mut exprs = Vec::with_capacity(out);
            for row in w {
                let last = p + 1;
                let feat = lin(row.iter().enumerate().map(|(i, c)| (c.clone(), Expr::label(i as u32 + 1, last)))).unwrap_or_else(|| Expr::scale(Rat::zero(), Expr::eq(last, last)));
                let path = Expr::product_of((1..=p).map(|k| Expr::edge(k, k + 1)));
                let vars: Vec<Var> = (2..=p + 1).collect();
                let body = Expr::sums(&vars, Expr::mul(path, feat));
                exprs.push(activate(*act, body));
            }
            depths.push(max_depth(&exprs));
            Ok((exprs, 1))
        }
        Architecture::Pna(layers) => {
            if layers.is_empty() {
                return Err(EncodeError::NoLayers);
            }
            let mut feats = labels(ell);
            for (t, l) in layers.iter().enumerate() {
                let d = feats.len();
                let m = check_mlp(&l.inner, d, "PNA inner MLP")?;
                check_mlp(&l.outer, 12 * m, "PNA outer MLP")?;
                let shifted: Vec<Expr> = feats.iter().map(at2).collect();
                let msgs = mlp_outputs(funcs, &format!("pna{}_in", t + 1), &l.inner, &shifted);
                let mut g = Vec::with_capacity(4 * m);
                for agg in ["mean", "stdv", "max", "min"] {
                    for msg in &msgs {
                        g.push(Expr::GuardedAgg(String::from(agg), 1, 2, Arc::new(msg.clone())));
                    }
                }
                let deg = Expr::GuardedAgg(String::from("sum"), 1, 2, Arc::new(Expr::eq(2, 2)));
                let mut h = g.clone();
                for s in &l.scalers {
                    let sc = Expr::apply(s, vec![deg.clone()]);
                    h.extend(g.iter().map(|x| Expr::mul(sc.clone(), x.clone())));
                }
                feats = mlp_outputs(funcs, &format!("pna{}_out", t + 1), &l.outer, &h);
                depths.push(max_depth(&feats));
            }
            Ok((feats, 1))
        }
        Architecture::Fgnn { k, layers } => {
            let k = *k;
            shape(k >= 2, || String::from("FGNN needs k >= 2"))?;
            let mut feats = fgnn_initial(k, ell);
            let fresh = k as Var + 1;
            for (t, l) in layers.iter().enumerate() {
                let d = feats.len();
                shape(l.mlps.len() == k, || format!("layer {} has {} position MLPs, expected {k}", t + 1, l.mlps.len()))?;
                let mut dp = None;
                for (s, m) in l.mlps.iter().enumerate() {
                    let o = check_mlp(m, d, &format!("layer {} MLP {}", t + 1, s + 1))?;
                    shape(dp.is_none_or(|x| x == o), || String::from("position MLPs disagree on output size"))?;
                    dp = Some(o);
                }
                let dp = dp.unwrap_or(0);
                check_mlp(&l.mlp0, d + dp, &format!("layer {} MLP 0", t + 1))?;
                let per_pos: Vec<Vec<Expr>> = l
                    .mlps
                    .iter()
                    .enumerate()
                    .map(|(s, m)| {
                        let moved: Vec<Expr> = feats.iter().map(|f| swap_vars(f, s as Var + 1, fresh)).collect();
                        mlp_outputs(funcs, &format!("fgnn{}_m{}", t + 1, s + 1), m, &moved)
                    })
                    .collect();
                let mut inputs = feats.clone();
                for c in 0..dp {
                    inputs.push(Expr::sum(fresh, Expr::product_of(per_pos.iter().map(|outs| outs[c].clone()))));
                }
                feats = mlp_outputs(funcs, &format!("fgnn{}_m0", t + 1), &l.mlp0, &inputs);
                depths.push(max_depth(&feats));
            }
            Ok((feats, k))
        }
        Architecture::Kgin { k, layers } => {
            let k = *k;
            shape(k >= 1, || String::from("k-GIN needs k >= 1"))?;
            let mut feats = atp_features(k, ell);
            for (t, l) in layers.iter().enumerate() {
                let d = feats.len();
                let b = check_mlp(&l.mlp1, d, &format!("layer {} MLP 1", t + 1))?;
                check_mlp(&l.mlp0, d + k * b, &format!("layer {} MLP 0", t + 1))?;
                let inner = mlp_outputs(funcs, &format!("kgin{}_m1", t + 1), &l.mlp1, &feats);
                let mut inputs = feats.clone();
                for s in 1..=k as Var {
                    inputs.extend(inner.iter().map(|e| Expr::sum(s, e.clone())));
                }
                feats = mlp_outputs(funcs, &format!("kgin{}_m0", t + 1), &l.mlp0, &inputs);
                depths.push(max_depth(&feats));
            }
            Ok((feats, k))
        }
        Architecture::Ign { k, layers, reduced } => {
            let k = *k;
            shape(k >= 1, || String::from("IGN needs k >= 1"))?;
            let gammas = set_partitions(2 * k);
            let mus = set_partitions(k);
            let mut feats = atp_features(k, ell);
            let kk = k as Var;
            let lift = |v: Var| if v <= kk { v + kk } else if v <= 2 * kk { v - kk } else { v };
            let ys: Vec<Var> = (kk + 1..=2 * kk).collect();
            for (t, l) in layers.iter().enumerate() {
                let d = feats.len();
                shape(l.c.len() == gammas.len(), || format!("layer {} has {} pattern blocks, expected {}", t + 1, l.c.len(), gammas.len()))?;
                shape(l.b.len() == mus.len(), || format!("layer {} has {} bias patterns, expected {}", t + 1, l.b.len(), mus.len()))?;
                let out = l.c.first().map_or(0, Vec::len);
                for c in &l.c {
                    check_matrix(c, Some(out), d, "pattern coefficients")?;
                }
                for b in &l.b {
                    shape(b.len() == out, || format!("bias pattern has length {}, expected {out}", b.len()))?;
                }
                // one term per (pattern, input feature), shared by all outputs
                let mut terms: BTreeMap<(usize, usize), Expr> = BTreeMap::new();
                for (g, blocks) in gammas.iter().enumerate() {
                    for (i, f) in feats.iter().enumerate() {
                        if (0..out).all(|j| l.c[g][j][i].is_zero()) {
                            continue;
                        }
                        let e = if *reduced {
                            let term = IgnTerm { pattern: EqualityPattern::from_blocks(k, blocks), body: f.clone() };
                            reduce_ign_term(&term).expect("full patterns are consistent")
                        } else {
                            Expr::sums(&ys, Expr::mul(pattern_indicator(blocks), map_all_vars(f, &lift)))
                        };
                        terms.insert((g, i), e);
                    }
                }
                let mut next = Vec::with_capacity(out);
                for j in 0..out {
                    let main = lin(terms.iter().map(|(&(g, i), e)| (l.c[g][j][i].clone(), e.clone())));
                    let bias = lin(mus.iter().enumerate().map(|(m, blocks)| (l.b[m][j].clone(), pattern_indicator(blocks))));
                    let pre = match (main, bias) {
                        (Some(a), Some(b)) => Expr::add(a, b),
                        (Some(a), None) | (None, Some(a)) => a,
                        (None, None) => Expr::scale(Rat::zero(), Expr::product_of((1..=kk).map(|v| Expr::eq(v, v)))),
                    };
                    next.push(activate(l.act, pre));
                }
                feats = next;
                depths.push(max_depth(&feats));
            }
            Ok((feats, k))
        }
        Architecture::Readout { inner, ro } => {
            let (feats, arity) = encode_arch(inner, ell, funcs, depths)?;
            let vars: Vec<Var> = (1..=arity as Var).collect();
            let sums: Vec<Expr> = feats.iter().map(|f| Expr::sums(&vars, f.clone())).collect();
            let out = match ro {
                Some(m) => {
                    check_mlp(m, sums.len(), "readout MLP")?;
                    mlp_outputs(funcs, "ro", m, &sums)
                }
                None => sums,
            };
            depths.push(max_depth(&out));
            Ok((out, 0))
        }
        Architecture::HomCount(patterns) => {
            let mut out = Vec::with_capacity(patterns.len());
            for (idx, p) in patterns.iter().enumerate() {
                if !connected(p) {
                    return Err(EncodeError::DisconnectedPattern(idx));
                }
                out.push(rewrite_min_vars(&hom_expr(p)).expr);
            }
            depths.push(max_depth(&out));
            Ok((out, 1))
        }
        Architecture::ChebNet { c, layers } => {
            if layers.is_empty() {
                return Err(EncodeError::NoLayers);
            }
            let mut feats = labels(ell);
            for l in layers {
                let d = feats.len();
                shape(!l.ws.is_empty(), || String::from("ChebNet layer needs at least one weight matrix"))?;
                let out = check_matrix(&l.ws[0], None, d, "W")?;
                for w in &l.ws {
                    check_matrix(w, Some(out), d, "W")?;
                }
                let coeffs = cheb_coefficients(c, l.ws.len());
                let max_pow = coeffs.iter().map(Vec::len).max().unwrap_or(1);
                let mut next = Vec::with_capacity(out);
                for j in 0..out {
                    let mut pre: Option<Expr> = None;
                    for i in 0..max_pow {
                        // Σ_s a^{(s)}_i W^{(s)}_{j,:} F
                        let mut weights = vec![Rat::zero(); d];
                        for (s, w) in l.ws.iter().enumerate() {
                            if let Some(a) = coeffs[s].get(i) {
                                for q in 0..d {
                                    weights[q] = &weights[q] + &(a * &w[j][q]);
                                }
                            }
                        }
                        let Some(mut psi) = lin(weights.into_iter().zip(feats.iter().cloned())) else { continue };
                        for _ in 0..i {
                            psi = normalized_adjacency(&psi);
                        }
                        pre = Some(plus(pre, psi));
                    }
                    let pre = pre.unwrap_or_else(|| Expr::scale(Rat::zero(), Expr::eq(1, 1)));
                    next.push(activate(l.act, pre));
                }
                feats = next;
                depths.push(max_depth(&feats));
            }
            Ok((feats, 1))
        }
    }
}

fn connected(p: &Graph) -> bool {
    if p.n() == 0 {
        return false;
    }
    let mut seen = vec![false; p.n()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &u in p.neighbors(v) {
            if !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// `Σ_{x2..xp} Π_{uv ∈ E(P)} E(x_u, x_v)`, before any rewriting.
pub fn hom_expr(p: &Graph) -> Expr {
    let body = Expr::product_of(p.edges().map(|(u, v)| Expr::edge(u as Var + 1, v as Var + 1)));
    let body = if p.edge_count() == 0 { Expr::eq(1, 1) } else { body };
    let vars: Vec<Var> = (2..=p.n() as Var).collect();
    Expr::sums(&vars, body)
}

/// The separation bound implied by a bundle's shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bound {
    /// `cr^(t)` on vertices.
    Cr(usize),
    /// `vwl_k^(t)` on vertices.
    Vwl { k: usize, t: usize },
    /// `gcr^(t)` on graphs.
    Gcr(usize),
    /// `gwl_k^(t)` on graphs.
    Gwl { k: usize, t: usize },
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Cr(t) => write!(f, "cr^({t})"),
            Bound::Vwl { k, t } => write!(f, "vwl_{k}^({t})"),
            Bound::Gcr(t) => write!(f, "gcr^({t})"),
            Bound::Gwl { k, t } => write!(f, "gwl_{k}^({t})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundReport {
    pub var_count: usize,
    pub sum_depth: usize,
    pub agg_depth: usize,
    /// Aggregation depth added by each layer.
    pub layer_depths: Vec<usize>,
    pub guarded: bool,
    pub free_arity: usize,
    pub rewritten_var_count: usize,
    pub rewritten_guarded: bool,
    pub bound: Bound,
}

/// Upper bound on separation power read off the bundle; never a lower bound.
pub fn bound_report(b: &Bundle) -> BoundReport {
    let an: Vec<_> = b.exprs.iter().map(analyze).collect();
    let var_count = an.iter().map(|a| a.var_count).max().unwrap_or(0);
    let sum_depth = an.iter().map(|a| a.sum_depth).max().unwrap_or(0);
    let agg_depth = an.iter().map(|a| a.agg_depth).max().unwrap_or(0);
    let guarded = !b.exprs.is_empty() && b.exprs.iter().all(is_guarded);
    let free_arity = b.exprs.iter().map(|e| free_vars(e).len()).max().unwrap_or(0);
    let rewritten: Vec<Expr> = b.exprs.iter().map(|e| rewrite_min_vars(e).expr).collect();
    let ra: Vec<_> = rewritten.iter().map(analyze).collect();
    let rewritten_var_count = ra.iter().map(|a| a.var_count).max().unwrap_or(0);
    let rewritten_depth = ra.iter().map(|a| a.agg_depth).max().unwrap_or(0);
    let rewritten_guarded = !rewritten.is_empty() && rewritten.iter().all(is_guarded);

    let mut layer_depths = Vec::with_capacity(b.layer_depths.len());
    let mut prev = 0;
    for &d in &b.layer_depths {
        layer_depths.push(d.saturating_sub(prev));
        prev = d;
    }

    // (variables, depth) candidates from the expression as written and as rewritten
    let cands = [(var_count, agg_depth, guarded), (rewritten_var_count, rewritten_depth, rewritten_guarded)];
    let bound = if free_arity == 0 {
        let &(vars, depth, _) = cands.iter().min_by_key(|c| (c.0.max(2), c.1)).expect("two candidates");
        let k = vars.saturating_sub(1).max(1);
        if k == 1 {
            Bound::Gcr(depth.saturating_sub(1))
        } else {
            Bound::Gwl { k, t: depth.saturating_sub(1) }
        }
    } else if let Some(&(_, depth, _)) = cands.iter().filter(|c| c.2).min_by_key(|c| c.1) {
        Bound::Cr(depth)
    } else {
        let &(vars, depth, _) = cands.iter().min_by_key(|c| (c.0, c.1)).expect("two candidates");
        Bound::Vwl { k: vars.saturating_sub(1).max(1), t: depth }
    };
    BoundReport {
        var_count,
        sum_depth,
        agg_depth,
        layer_depths,
        guarded,
        free_arity,
        rewritten_var_count,
        rewritten_guarded,
        bound,
    }
}

// ---------------------------------------------------------------------------
// Dense reference implementations. Nothing below touches expressions.

type Rows = Vec<Vec<f64>>;

fn to_f(m: &Matrix) -> Vec<Vec<f64>> {
    m.iter().map(|r| r.iter().map(Rat::to_f64).collect()).collect()
}

fn act_f(a: Activation, x: f64) -> f64 {
    match a {
        Activation::Relu => x.max(0.0),
        Activation::Identity => x,
    }
}

fn matvec(w: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    w.iter().map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

fn label_rows(g: &Graph) -> Rows {
    (0..g.n()).map(|v| g.label(v).iter().map(|x| x.to_f64()).collect()).collect()
}

fn deg_f(g: &Graph, v: usize) -> f64 {
    g.degree(v) as f64
}

fn aggregate_f(name: &str, xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    match name {
        "sum" => xs.iter().sum(),
        "mean" => xs.iter().sum::<f64>() / n,
        "max" => xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        "min" => xs.iter().copied().fold(f64::INFINITY, f64::min),
        "stdv" => {
            let m = xs.iter().sum::<f64>() / n;
            libm::sqrt(xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n)
        }
        _ => f64::NAN,
    }
}

fn scalar_fn(name: &str, x: f64) -> f64 {
    match name {
        "log1p" => libm::log1p(x),
        "recip_sqrt_plus1" => 1.0 / libm::sqrt(x + 1.0),
        "recip_sqrt" => 1.0 / libm::sqrt(x),
        "recip" => 1.0 / x,
        "identity" => x,
        "relu" => x.max(0.0),
        _ => f64::NAN,
    }
}

fn tuple_index(n: usize, t: &[usize]) -> usize {
    t.iter().fold(0, |acc, &v| acc * n + v)
}

fn atp_rows(g: &Graph, k: usize) -> Rows {
    let n = g.n();
    all_tuples(n, k)
        .iter()
        .map(|t| {
            let mut row = Vec::new();
            for i in 0..k {
                for j in i + 1..k {
                    row.push((t[i] == t[j]) as u8 as f64);
                }
            }
            for i in 0..k {
                for j in i + 1..k {
                    row.push(g.has_edge(t[i], t[j]) as u8 as f64);
                }
            }
            for &v in t {
                row.extend(g.label(v).iter().map(|x| x.to_f64()));
            }
            row
        })
        .collect()
}

fn rgs(t: &[usize]) -> Vec<usize> {
    let mut seen: Vec<usize> = Vec::new();
    t.iter()
        .map(|v| match seen.iter().position(|s| s == v) {
            Some(p) => p,
            None => {
                seen.push(*v);
                seen.len() - 1
            }
        })
        .collect()
}

/// Direct dense forward pass; rows follow [`all_tuples`] order for the
/// output arity.
pub fn oracle_forward(spec: &GnnSpec, g: &Graph) -> Result<Rows, EncodeError> {
    let (rows, _) = oracle_arch(&spec.arch, g)?;
    Ok(rows)
}

fn oracle_arch(arch: &Architecture, g: &Graph) -> Result<(Rows, usize), EncodeError> {
    let n = g.n();
    Ok(match arch {
        Architecture::Gin(layers) | Architecture::Egin(layers) => {
            let mut f = label_rows(g);
            for m in layers {
                let total: Vec<f64> = (0..f.first().map_or(0, Vec::len)).map(|i| (0..n).map(|u| f[u][i]).sum()).collect();
                f = (0..n)
                    .map(|v| {
                        let mut x = f[v].clone();
                        for i in 0..f[v].len() {
                            x.push(g.neighbors(v).iter().map(|&u| f[u][i]).sum());
                        }
                        if matches!(arch, Architecture::Egin(_)) {
                            x.extend(total.iter().copied());
                        }
                        m.forward(&x)
                    })
                    .collect();
            }
            (f, 1)
        }
        Architecture::GraphSage(layers) => {
            let mut f = label_rows(g);
            for l in layers {
                let (v, w) = (to_f(&l.v), to_f(&l.w));
                let b: Vec<f64> = l.b.iter().map(Rat::to_f64).collect();
                f = (0..n)
                    .map(|x| {
                        let own = matvec(&v, &f[x]);
                        let d = f[x].len();
                        let agg: Vec<f64> = (0..d)
                            .map(|i| aggregate_f(&l.agg, &g.neighbors(x).iter().map(|&u| f[u][i]).collect::<Vec<_>>()))
                            .collect();
                        let nb = matvec(&w, &agg);
                        (0..own.len()).map(|j| act_f(l.act, own[j] + nb[j] + b[j])).collect()
                    })
                    .collect();
            }
            (f, 1)
        }
        Architecture::Gcn(layers) => {
            let mut f = label_rows(g);
            let s: Vec<f64> = (0..n).map(|v| 1.0 / libm::sqrt(deg_f(g, v) + 1.0)).collect();
            for l in layers {
                let w = to_f(&l.w);
                let h: Rows = f.iter().map(|r| matvec(&w, r)).collect();
                f = (0..n)
                    .map(|v| {
                        (0..w.len())
                            .map(|j| {
                                let mut acc = s[v] * s[v] * h[v][j];
                                for &u in g.neighbors(v) {
                                    acc += s[v] * s[u] * h[u][j];
                                }
                                act_f(l.act, acc + l.b[j].to_f64())
                            })
                            .collect()
                    })
                    .collect();
            }
            (f, 1)
        }
        Architecture::Sgc { p, w, act } => {
            let w = to_f(w);
            let mut h: Rows = label_rows(g).iter().map(|r| matvec(&w, r)).collect();
            for _ in 0..*p {
                h = (0..n).map(|v| (0..w.len()).map(|j| g.neighbors(v).iter().map(|&u| h[u][j]).sum()).collect()).collect();
            }
            (h.into_iter().map(|r| r.into_iter().map(|x| act_f(*act, x)).collect()).collect(), 1)
        }
        Architecture::Pna(layers) => {
            let mut f = label_rows(g);
            for l in layers {
                let msg: Rows = f.iter().map(|r| l.inner.forward(r)).collect();
                let m = l.inner.output_dim();
                f = (0..n)
                    .map(|v| {
                        let mut gv = Vec::with_capacity(4 * m);
                        for agg in ["mean", "stdv", "max", "min"] {
                            for j in 0..m {
                                gv.push(aggregate_f(agg, &g.neighbors(v).iter().map(|&u| msg[u][j]).collect::<Vec<_>>()));
                            }
                        }
                        let mut h = gv.clone();
                        for s in &l.scalers {
                            let k = scalar_fn(s, deg_f(g, v));
                            h.extend(gv.iter().map(|x| k * x));
                        }
                        l.outer.forward(&h)
                    })
                    .collect();
            }
            (f, 1)
        }
        Architecture::Fgnn { k, layers } => {
            let k = *k;
            let tuples = all_tuples(n, k);
            let mut f: Rows = tuples
                .iter()
                .map(|t| {
                    let mut row = Vec::new();
                    for r in 0..k {
                        for s in 0..k {
                            for x in g.label(t[r]) {
                                row.push(if t[r] == t[s] { x.to_f64() } else { 0.0 });
                            }
                            row.push(g.has_edge(t[r], t[s]) as u8 as f64);
                            row.push((t[r] == t[s]) as u8 as f64);
                        }
                    }
                    row
                })
                .collect();
            for l in layers {
                let outs: Vec<Rows> = l.mlps.iter().map(|m| f.iter().map(|r| m.forward(r)).collect()).collect();
                let dp = l.mlps.first().map_or(0, |m| m.output_dim());
                f = tuples
                    .iter()
                    .map(|t| {
                        let mut agg = vec![0.0; dp];
                        for w in 0..n {
                            let mut prod = vec![1.0; dp];
                            for (s, o) in outs.iter().enumerate() {
                                let mut u = t.clone();
                                u[s] = w;
                                let row = &o[tuple_index(n, &u)];
                                for c in 0..dp {
                                    prod[c] *= row[c];
                                }
                            }
                            for c in 0..dp {
                                agg[c] += prod[c];
                            }
                        }
                        let mut x = f[tuple_index(n, t)].clone();
                        x.extend(agg);
                        l.mlp0.forward(&x)
                    })
                    .collect();
            }
            (f, k)
        }
        Architecture::Kgin { k, layers } => {
            let k = *k;
            let tuples = all_tuples(n, k);
            let mut f = atp_rows(g, k);
            for l in layers {
                let inner: Rows = f.iter().map(|r| l.mlp1.forward(r)).collect();
                let b = l.mlp1.output_dim();
                f = tuples
                    .iter()
                    .map(|t| {
                        let mut x = f[tuple_index(n, t)].clone();
                        for s in 0..k {
                            let mut acc = vec![0.0; b];
                            for u in 0..n {
                                let mut tt = t.clone();
                                tt[s] = u;
                                for (c, y) in inner[tuple_index(n, &tt)].iter().enumerate() {
                                    acc[c] += y;
                                }
                            }
                            x.extend(acc);
                        }
                        l.mlp0.forward(&x)
                    })
                    .collect();
            }
            (f, k)
        }
        Architecture::Ign { k, layers, .. } => {
            let k = *k;
            let tuples = all_tuples(n, k);
            let gidx: BTreeMap<Vec<usize>, usize> = set_partitions(2 * k).into_iter().enumerate().map(|(i, p)| (p, i)).collect();
            let midx: BTreeMap<Vec<usize>, usize> = set_partitions(k).into_iter().enumerate().map(|(i, p)| (p, i)).collect();
            let mut f = atp_rows(g, k);
            for l in layers {
                let c: Vec<Vec<Vec<f64>>> = l.c.iter().map(to_f).collect();
                let out = c.first().map_or(0, Vec::len);
                f = tuples
                    .iter()
                    .map(|v| {
                        let mut acc: Vec<f64> = (0..out).map(|j| l.b[midx[&rgs(v)]][j].to_f64()).collect();
                        for w in &tuples {
                            let mut vw = v.clone();
                            vw.extend(w.iter().copied());
                            let cg = &c[gidx[&rgs(&vw)]];
                            let fw = &f[tuple_index(n, w)];
                            for j in 0..out {
                                acc[j] += cg[j].iter().zip(fw).map(|(a, b)| a * b).sum::<f64>();
                            }
                        }
                        acc.into_iter().map(|x| act_f(l.act, x)).collect()
                    })
                    .collect();
            }
            (f, k)
        }
        Architecture::Readout { inner, ro } => {
            let (rows, _) = oracle_arch(inner, g)?;
            let d = rows.first().map_or(0, Vec::len);
            let sums: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum()).collect();
            let out = match ro {
                Some(m) => m.forward(&sums),
                None => sums,
            };
            (vec![out], 0)
        }
        Architecture::HomCount(patterns) => {
            let mut rows = vec![Vec::with_capacity(patterns.len()); n];
            for p in patterns {
                let pn = p.n();
                let edges: Vec<(usize, usize)> = p.edges().collect();
                for (v, row) in rows.iter_mut().enumerate() {
                    let mut count = 0u64;
                    for rest in all_tuples(n, pn - 1) {
                        let mut map = vec![v];
                        map.extend(rest);
                        if edges.iter().all(|&(a, b)| g.has_edge(map[a], map[b])) {
                            count += 1;
                        }
                    }
                    row.push(count as f64);
                }
            }
            (rows, 1)
        }
        Architecture::ChebNet { c, layers } => {
            let cf = c.to_f64();
            let s: Vec<f64> = (0..n).map(|v| 1.0 / libm::sqrt(deg_f(g, v))).collect();
            let mut lap = vec![vec![0.0; n]; n];
            for (v, row) in lap.iter_mut().enumerate() {
                row[v] = 1.0;
                for &u in g.neighbors(v) {
                    row[u] -= s[v] * s[u];
                }
            }
            let eye: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect()).collect();
            let c2: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| cf * lap[i][j] - eye[i][j]).collect()).collect();
            let mut f = label_rows(g);
            for l in layers {
                let mut cs: Vec<Vec<Vec<f64>>> = Vec::new();
                for idx in 0..l.ws.len() {
                    let next = match idx {
                        0 => eye.clone(),
                        1 => c2.clone(),
                        _ => {
                            let (a, b) = (&cs[idx - 1], &cs[idx - 2]);
                            (0..n)
                                .map(|i| (0..n).map(|j| 2.0 * (0..n).map(|q| c2[i][q] * a[q][j]).sum::<f64>() - b[i][j]).collect())
                                .collect()
                        }
                    };
                    cs.push(next);
                }
                let out = l.ws[0].len();
                let mut acc = vec![vec![0.0; out]; n];
                for (cm, w) in cs.iter().zip(&l.ws) {
                    let h: Rows = f.iter().map(|r| matvec(&to_f(w), r)).collect();
                    for v in 0..n {
                        for j in 0..out {
                            acc[v][j] += (0..n).map(|u| cm[v][u] * h[u][j]).sum::<f64>();
                        }
                    }
                }
                f = acc.into_iter().map(|r| r.into_iter().map(|x| act_f(l.act, x)).collect()).collect();
            }
            (f, 1)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{evaluate_bundle, Layer, Mode};
    use crate::value::Value;

    fn linear_mlp(w: Vec<Vec<f64>>) -> Arc<Mlp> {
        let b = vec![0.0; w.len()];
        Arc::new(Mlp::new(vec![Layer { w, b, act: Activation::Identity }]).unwrap())
    }

    #[test]
    fn gin_hand_example() {
        let g = Graph::with_scalar_labels(3, &[(0, 1), (1, 2)], &[1, 2, 3]).unwrap();
        let spec = GnnSpec { arch: Architecture::Gin(vec![linear_mlp(vec![vec![1.0, 2.0]])]), ell: 1 };
        let b = encode(&spec).unwrap();
        let t = evaluate_bundle(&b.exprs, &g, &all_tuples(3, 1), Mode::Float, &b.functions).unwrap();
        let got: Vec<f64> = t.rows.iter().map(|r| r[0].to_f64()).collect();
        assert_eq!(got, vec![5.0, 10.0, 7.0]);
        assert_eq!(oracle_forward(&spec, &g).unwrap(), vec![vec![5.0], vec![10.0], vec![7.0]]);
        let rep = bound_report(&b);
        assert!(rep.guarded);
        assert_eq!(rep.bound, Bound::Cr(1));
    }

    #[test]
    fn gcn_on_triangle_is_one() {
        let g = Graph::with_scalar_labels(3, &[(0, 1), (1, 2), (0, 2)], &[1, 1, 1]).unwrap();
        let spec = GnnSpec {
            arch: Architecture::Gcn(vec![DenseLayer { w: vec![vec![Rat::one()]], b: vec![Rat::zero()], act: Activation::Identity }]),
            ell: 1,
        };
        for row in oracle_forward(&spec, &g).unwrap() {
            assert!((row[0] - 1.0).abs() < 1e-12);
        }
        let b = encode(&spec).unwrap();
        let t = evaluate_bundle(&b.exprs, &g, &all_tuples(3, 1), Mode::Float, &b.functions).unwrap();
        for r in &t.rows {
            assert!(r[0].close_to(&Value::Float(1.0), 1e-12));
        }
        assert_eq!(bound_report(&b).bound, Bound::Cr(2));
    }

    #[test]
    fn sgc_is_guarded_after_rewrite() {
        let spec = GnnSpec { arch: Architecture::Sgc { p: 3, w: vec![vec![Rat::one()]], act: Activation::Identity }, ell: 1 };
        let b = encode(&spec).unwrap();
        let rep = bound_report(&b);
        assert_eq!(rep.var_count, 4);
        assert_eq!(rep.rewritten_var_count, 2);
        assert!(rep.rewritten_guarded);
        assert_eq!(rep.sum_depth, 3);
        assert_eq!(rep.bound, Bound::Cr(3));
    }

    #[test]
    fn chebyshev_recursion() {
        // C3 = 2 C2^2 - I with C2 = (c-1) I - c M
        let c = Rat::from_int(2);
        let co = cheb_coefficients(&c, 3);
        assert_eq!(co[1], vec![Rat::one(), Rat::from_int(-2)]);
        assert_eq!(co[2], vec![Rat::one(), Rat::from_int(-8), Rat::from_int(8)]);
    }
}
