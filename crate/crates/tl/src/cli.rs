//! The `tl` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value as Json};
use sha2::{Digest, Sha256};

use tl_core::encoders::{bound_report, encode, BoundReport};
use tl_core::eval::{all_tuples, evaluate, FunctionRegistry, Mode, Valuation};
use tl_core::expr::{analyze, Expr, Var};
use tl_core::graph::{Graph, LabelSpec};
use tl_core::harness::{check_theorem, items, random_expr, refines, value_grid, wl_partition, CheckReport, ExprShape, Partition, Theorem};
use tl_core::logic::synthesize_cr_distinguisher;
use tl_core::num::Rat;
use tl_core::syntax::{parse_with, render};
use tl_core::treewidth::{rewrite_min_vars, treewidth};
use tl_core::wl::{refine_full, Algorithm, Interner, RefineOptions};

use crate::io::{graph_to_json, load_corpus, parse_expr_file, read_graph, read_mlp, read_text, InputError};
use crate::params::{random_spec, spec_from_json, RandomArch};

#[derive(Parser, Debug)]
#[command(name = "tl", version, about = "Tensor-language expressions, WL refinement and GNN encodings")]
pub struct Cli {
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    /// Worker threads for per-graph work.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct ExprSource {
    /// Expression in surface syntax.
    #[arg(long, conflicts_with = "expr_file")]
    pub expr: Option<String>,
    /// File with one expression, or JSON {"name","expr"} entries.
    #[arg(long)]
    pub expr_file: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum ModeArg {
    Exact,
    Float,
}

#[derive(Copy, Clone, Debug, ValueEnum, PartialEq, Eq)]
pub enum AlgoArg {
    Cr,
    Wl,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse and print in canonical form.
    Parse(ExprSource),
    /// Variables, depths, guardedness and treewidth.
    Analyze(ExprSource),
    /// Evaluate on a graph.
    Eval {
        #[command(flatten)]
        src: ExprSource,
        #[arg(long)]
        graph: PathBuf,
        /// `xI=V`, repeatable.
        #[arg(long = "assign")]
        assign: Vec<String>,
        #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
        mode: ModeArg,
        /// `PREFIX=FILE`: registers an MLP as functions PREFIX_0, PREFIX_1, ...
        #[arg(long = "weights")]
        weights: Vec<String>,
        /// Evaluate at every tuple over the free variables.
        #[arg(long)]
        all: bool,
    },
    /// Colour refinement or folklore k-WL.
    Wl {
        #[arg(long, conflicts_with = "corpus")]
        graph: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<String>,
        #[arg(long, value_enum, default_value_t = AlgoArg::Cr)]
        algo: AlgoArg,
        #[arg(short, default_value_t = 1)]
        k: usize,
        /// Maximum number of rounds.
        #[arg(short, default_value_t = 10)]
        t: usize,
        /// Keep going after the partition stabilises.
        #[arg(long)]
        full: bool,
    },
    /// Rewrite to few variables via an elimination order.
    Rewrite(ExprSource),
    /// Compile a GNN into expressions.
    Encode {
        #[arg(long)]
        arch: String,
        /// JSON weight payload; seeded random weights otherwise.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        layers: usize,
        #[arg(long, default_value_t = 2)]
        width: usize,
        #[arg(long, default_value_t = 1)]
        ell: usize,
        #[arg(short, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sum the output over all tuples.
        #[arg(long)]
        readout: bool,
    },
    /// Expression separating two vertices that colour refinement tells apart.
    Synth {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        vertex: usize,
        #[arg(long)]
        other: PathBuf,
        #[arg(long)]
        other_vertex: usize,
        #[arg(short, default_value_t = 3)]
        t: usize,
    },
    /// Compare WL partitions with partitions induced by random expressions.
    Separate {
        #[arg(long)]
        corpus: String,
        #[arg(long, value_enum, default_value_t = AlgoArg::Cr)]
        algo: AlgoArg,
        #[arg(short, default_value_t = 1)]
        k: usize,
        #[arg(short, default_value_t = 2)]
        t: usize,
        #[arg(long, default_value_t = 100)]
        random_exprs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// thm2, thm3, thm4_1 or thm4_2.
        #[arg(long)]
        theorem: Option<String>,
        /// Graph items (0) or vertex items (1).
        #[arg(short, default_value_t = 1)]
        s: usize,
    },
    /// Print a corpus as JSONL.
    Corpus {
        #[arg(long)]
        corpus: String,
        /// Random labels of this dimension.
        #[arg(long)]
        ell: Option<usize>,
        /// Comma-separated label values.
        #[arg(long, default_value = "0,1")]
        label_values: String,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    User(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl From<InputError> for CliError {
    fn from(e: InputError) -> Self {
        CliError::User(e.to_string())
    }
}

fn user<E: std::fmt::Display>(e: E) -> CliError {
    CliError::User(e.to_string())
}

/// What a command produced: JSON plus the human rendering; `ok == false` means exit 2.
struct Output {
    json: Json,
    text: String,
    ok: bool,
}

fn done(json: Json, text: String) -> Result<Output, CliError> {
    Ok(Output { json, text, ok: true })
}

fn load_exprs(src: &ExprSource, funcs: &FunctionRegistry) -> Result<Vec<(String, Expr)>, CliError> {
    match (&src.expr, &src.expr_file) {
        (Some(e), _) => Ok(vec![(String::from("expr"), parse_with(e, funcs).map_err(user)?)]),
        (None, Some(p)) => Ok(parse_expr_file(&read_text(p)?, &p.display().to_string(), funcs)?),
        (None, None) => Err(CliError::User(String::from("give --expr or --expr-file"))),
    }
}

fn var_names(vs: impl IntoIterator<Item = Var>) -> Vec<String> {
    vs.into_iter().map(|v| format!("x{v}")).collect()
}

fn analysis_json(e: &Expr) -> Json {
    let a = analyze(e);
    let (tw, exact) = match treewidth(e) {
        Ok((w, x)) => (json!(w), json!(x)),
        Err(_) => (Json::Null, Json::Null),
    };
    json!({
        "free": var_names(a.free_vars.iter().copied()),
        "var_count": a.var_count,
        "sum_depth": a.sum_depth,
        "agg_depth": a.agg_depth,
        "guarded": a.guarded,
        "function_free": a.function_free,
        "size": e.size(),
        "treewidth": tw,
        "treewidth_exact": exact,
    })
}

fn named<T>(items: Vec<(String, T)>, f: impl Fn(&T) -> Json) -> Json {
    if items.len() == 1 {
        f(&items[0].1)
    } else {
        Json::Array(items.iter().map(|(n, x)| json!({"name": n, "result": f(x)})).collect())
    }
}

fn parse_assign(s: &str) -> Result<(Var, usize), CliError> {
    let bad = || CliError::User(format!("bad --assign {s:?}; expected xI=V"));
    let (x, v) = s.split_once('=').ok_or_else(bad)?;
    let i: Var = x.trim().strip_prefix('x').ok_or_else(bad)?.parse().map_err(|_| bad())?;
    if i == 0 {
        return Err(bad());
    }
    Ok((i, v.trim().parse().map_err(|_| bad())?))
}

fn mode(m: ModeArg) -> Mode {
    match m {
        ModeArg::Exact => Mode::Exact,
        ModeArg::Float => Mode::Float,
    }
}

fn algorithm(a: AlgoArg, k: usize) -> Algorithm {
    match a {
        AlgoArg::Cr => Algorithm::Cr,
        AlgoArg::Wl => Algorithm::Wl(k),
    }
}

fn bound_json(r: &BoundReport) -> Json {
    json!({
        "var_count": r.var_count,
        "sum_depth": r.sum_depth,
        "agg_depth": r.agg_depth,
        "layer_depths": r.layer_depths,
        "guarded": r.guarded,
        "free_arity": r.free_arity,
        "rewritten_var_count": r.rewritten_var_count,
        "rewritten_guarded": r.rewritten_guarded,
        "bound": r.bound.to_string(),
    })
}

fn report_json(r: &CheckReport) -> Json {
    json!({
        "theorem": r.tag,
        "k": r.k,
        "t": r.t,
        "expressions": r.expressions,
        "pairs_checked": r.pairs_checked,
        "violations": r.violations.iter().map(|v| json!({
            "kind": v.kind,
            "expr": v.expr,
            "a": v.a.to_string(),
            "b": v.b.to_string(),
            "value_a": v.va.as_ref().map(|x| x.to_string()),
            "value_b": v.vb.as_ref().map(|x| x.to_string()),
        })).collect::<Vec<_>>(),
    })
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn run_command(cli: &Cli) -> Result<Output, CliError> {
    let builtins = FunctionRegistry::new();
    match &cli.command {
        Command::Parse(src) => {
            let es = load_exprs(src, &builtins)?;
            let text = es.iter().map(|(_, e)| render(e)).collect::<Vec<_>>().join("\n");
            done(named(es, |e| json!({"expr": render(e)})), text)
        }
        Command::Analyze(src) => {
            let es = load_exprs(src, &builtins)?;
            let j = named(es, analysis_json);
            let text = serde_json::to_string_pretty(&j).expect("json");
            done(j, text)
        }
        Command::Eval { src, graph, assign, mode: m, weights, all } => {
            let mut funcs = FunctionRegistry::new();
            for w in weights {
                let (prefix, path) = w.split_once('=').ok_or_else(|| CliError::User(format!("bad --weights {w:?}; expected PREFIX=FILE")))?;
                funcs.insert_mlp(prefix, read_mlp(path.as_ref())?);
            }
            let es = load_exprs(src, &funcs)?;
            let g = read_graph(graph)?;
            let m = mode(*m);
            if *all {
                let arity = es.iter().map(|(_, e)| analyze(e).free_vars.last().copied().unwrap_or(0)).max().unwrap_or(0) as usize;
                let tuples = all_tuples(g.n(), arity);
                let exprs: Vec<Expr> = es.iter().map(|(_, e)| e.clone()).collect();
                let table = tl_core::eval::evaluate_bundle(&exprs, &g, &tuples, m, &funcs).map_err(user)?;
                let rows: Vec<Json> =
                    table.rows.iter().zip(&tuples).map(|(r, t)| json!({"tuple": t, "values": r.iter().map(|v| v.to_string()).collect::<Vec<_>>()})).collect();
                let text = table
                    .rows
                    .iter()
                    .zip(&tuples)
                    .map(|(r, t)| format!("{t:?}\t{}", r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("\t")))
                    .collect::<Vec<_>>()
                    .join("\n");
                return done(json!({"names": es.iter().map(|(n, _)| n).collect::<Vec<_>>(), "rows": rows}), text);
            }
            let mut nu = Valuation::new();
            for a in assign {
                let (x, v) = parse_assign(a)?;
                if v >= g.n() {
                    return Err(CliError::User(format!("vertex {v} is outside 0..{}", g.n())));
                }
                nu.set(x, Some(v));
            }
            let vals = es.iter().map(|(n, e)| evaluate(e, &g, &nu, m, &funcs).map(|v| (n.clone(), v))).collect::<Result<Vec<_>, _>>().map_err(user)?;
            let text = vals.iter().map(|(_, v)| v.to_string()).collect::<Vec<_>>().join("\n");
            done(named(vals, |v| json!(v.to_string())), text)
        }
        Command::Wl { graph, corpus, algo, k, t, full } => {
            let graphs: Vec<Graph> = match (graph, corpus) {
                (Some(p), _) => vec![read_graph(p)?],
                (None, Some(c)) => load_corpus(c, None)?,
                (None, None) => return Err(CliError::User(String::from("give --graph or --corpus"))),
            };
            let mut interner = Interner::new();
            let opts = RefineOptions { stop_early: !full, ..RefineOptions::default() };
            let mut out = Vec::new();
            let mut text = Vec::new();
            for (i, g) in graphs.iter().enumerate() {
                let tr = match algorithm(*algo, *k) {
                    Algorithm::Cr if !full => tl_core::wl::color_refinement_with(g, *t, &mut interner, opts),
                    Algorithm::Wl(k) if !full => tl_core::wl::folklore_wl_with(g, k, *t, &mut interner, opts).map_err(user)?,
                    a => refine_full(g, a, *t, &mut interner).map_err(user)?,
                };
                let last = tr.last_round();
                let counts: Vec<usize> = (0..=last).map(|r| tr.class_count(r)).collect();
                let label = tr.graph_label(last, &mut interner).map_err(user)?;
                let d = digest(interner.encoding(label));
                let stable = tr.stable_round.map_or_else(|| String::from("not stable"), |r| format!("stable at round {r}"));
                text.push(format!("graph {i}: classes per round {counts:?}, {stable}, label {}", &d[..16]));
                out.push(json!({"graph": i, "rounds": last, "class_counts": counts, "stable_round": tr.stable_round, "graph_label": d}));
            }
            let j = if out.len() == 1 { out.pop().expect("one") } else { Json::Array(out) };
            done(j, text.join("\n"))
        }
        Command::Rewrite(src) => {
            let es = load_exprs(src, &builtins)?;
            let mut results = Vec::new();
            let mut text = Vec::new();
            for (name, e) in &es {
                let rw = rewrite_min_vars(e);
                let exact = treewidth(e).map(|(_, x)| x).unwrap_or(false);
                let orders: Vec<Vec<String>> = rw.orders.iter().map(|o| var_names(o.order.iter().map(|v| *rw.origin.get(v).unwrap_or(v)))).collect();
                let out = render(&rw.expr);
                text.push(out.clone());
                results.push((
                    name.clone(),
                    json!({
                        "expr": out,
                        "width": rw.width,
                        "exact": exact,
                        "vars_before": analyze(e).var_count,
                        "vars_after": analyze(&rw.expr).var_count,
                        "elimination_orders": orders,
                    }),
                ));
            }
            done(named(results, Json::clone), text.join("\n"))
        }
        Command::Encode { arch, params, layers, width, ell, k, seed, readout } => {
            let spec = match params {
                Some(p) => spec_from_json(arch, &read_text(p)?)?,
                None => random_spec(arch, &RandomArch { layers: *layers, width: *width, ell: *ell, k: *k, seed: *seed, readout: *readout })?,
            };
            let b = encode(&spec).map_err(user)?;
            let r = bound_report(&b);
            let exprs: Vec<String> = b.exprs.iter().map(render).collect();
            let mut text = exprs.clone();
            text.push(format!("bound: {}", r.bound));
            done(json!({"arity": b.arity, "exprs": exprs, "report": bound_json(&r)}), text.join("\n"))
        }
        Command::Synth { graph, vertex, other, other_vertex, t } => {
            let (g, h) = (read_graph(graph)?, read_graph(other)?);
            match synthesize_cr_distinguisher(&g, *vertex, &h, *other_vertex, *t).map_err(user)? {
                None => done(json!({"distinguisher": null}), format!("colour refinement does not separate them in {t} rounds")),
                Some(d) => {
                    let e = render(&d.expr);
                    let text = format!("{e}\nround {}\nformula {}", d.round, d.formula);
                    done(json!({"round": d.round, "formula": d.formula.to_string(), "expr": e, "analysis": analysis_json(&d.expr)}), text)
                }
            }
        }
        Command::Separate { corpus, algo, k, t, random_exprs, seed, theorem, s } => {
            let graphs = load_corpus(corpus, None)?;
            if let Some(tag) = theorem {
                let thm = Theorem::from_tag(tag).ok_or_else(|| CliError::User(format!("unknown theorem {tag:?}; expected thm2, thm3, thm4_1 or thm4_2")))?;
                let r = check_theorem(thm, &graphs, *k, *t, *random_exprs, *seed).map_err(user)?;
                let text = format!("{}: {} pairs checked, {} violations", r.tag, r.pairs_checked, r.violations.len());
                return Ok(Output { json: report_json(&r), text, ok: r.passed() });
            }
            if *s > 1 {
                return Err(CliError::User(String::from("-s must be 0 or 1")));
            }
            let a = algorithm(*algo, *k);
            let p = wl_partition(&graphs, a, *t, *s).map_err(user)?;
            let ell = graphs.first().map_or(0, Graph::ell);
            let shape = match a {
                Algorithm::Cr => ExprShape { k_vars: 2, depth: *t + 1 - *s, guarded: *s == 1, arity: *s, ell },
                Algorithm::Wl(k) => ExprShape { k_vars: k + 1, depth: *t + 1 - *s, guarded: false, arity: *s, ell },
            };
            let exprs: Vec<Expr> = (0..*random_exprs as u64).map(|i| random_expr(&shape, seed.wrapping_add(i))).collect();
            let grids: Vec<Vec<Vec<tl_core::value::Value>>> =
                graphs.par_iter().map(|g| value_grid(&exprs, std::slice::from_ref(g), *s, Mode::Exact)).collect::<Result<_, _>>().map_err(user)?;
            let keys: Vec<Vec<u8>> = grids
                .into_iter()
                .flatten()
                .map(|row| {
                    let mut b = Vec::new();
                    for v in &row {
                        v.canonical_bytes(&mut b);
                    }
                    b
                })
                .collect();
            let q = Partition::from_keys(*s, items(&graphs, *s), keys);
            let ok = refines(&p, &q).map_err(|e| CliError::Internal(e.to_string()))?;
            let j = json!({
                "items": p.items.len(),
                "wl_classes": p.class_count(),
                "expr_classes": q.class_count(),
                "wl_refines_exprs": ok,
            });
            let text = format!("{} items: {} WL classes, {} expression classes, WL refines expressions: {ok}", p.items.len(), p.class_count(), q.class_count());
            done(j, text)
        }
        Command::Corpus { corpus, ell, label_values } => {
            let labels = match ell {
                None => None,
                Some(ell) => {
                    let values = label_values.split(',').map(|x| x.trim().parse::<Rat>().map_err(|_| CliError::User(format!("bad label value {x:?}")))).collect::<Result<Vec<_>, _>>()?;
                    if values.is_empty() {
                        return Err(CliError::User(String::from("--label-values is empty")));
                    }
                    Some(LabelSpec { ell: *ell, values })
                }
            };
            let graphs = load_corpus(corpus, labels.as_ref())?;
            let lines: Vec<String> = graphs.iter().map(graph_to_json).collect();
            let text = lines.join("\n");
            let j = Json::Array(lines.iter().map(|l| serde_json::from_str(l).expect("own output")).collect());
            done(j, text)
        }
    }
}

/// Runs the CLI and returns the process exit code: 0 success, 1 user error, 2 internal failure.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if code == 0 { write!(stdout, "{e}") } else { write!(stderr, "{e}") };
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.max(1)).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(stderr, "internal error: {e}");
            return 2;
        }
    };
    match pool.install(|| run_command(&cli)) {
        Ok(out) => {
            let body = if cli.json { serde_json::to_string_pretty(&out.json).expect("json") } else { out.text };
            let _ = writeln!(stdout, "{body}");
            if out.ok {
                0
            } else {
                let _ = writeln!(stderr, "check failed");
                2
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            match e {
                CliError::User(_) => 1,
                CliError::Internal(_) => 2,
            }
        }
    }
}
