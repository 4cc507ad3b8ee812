//! Graph, corpus, expression and weight files.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Number;
use thiserror::Error;

use tl_core::eval::{Activation, FunctionRegistry, Layer, Mlp};
use tl_core::expr::Expr;
use tl_core::graph::{generate_corpus, CorpusError, CorpusMode, Graph, GraphError, LabelSpec};
use tl_core::num::Rat;
use tl_core::syntax::{parse_with, ParseError};
use tl_core::value::Value;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{context}: malformed JSON: {source}")]
    Json { context: String, source: serde_json::Error },
    #[error("{context}: {source}")]
    Graph { context: String, source: GraphError },
    #[error("{context}: label {index} of vertex {vertex} is not a number: {text}")]
    Label { context: String, vertex: usize, index: usize, text: String },
    #[error("{context}: {source}")]
    Parse { context: String, source: ParseError },
    #[error("{0}")]
    Corpus(#[from] CorpusError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<Vec<Number>>>,
}

/// Parses a JSON number without going through binary floating point.
pub fn number_to_rat(x: &Number) -> Option<Rat> {
    Rat::from_str(&x.to_string()).ok()
}

/// Integers and finite binary fractions come out exact; anything else as the nearest double.
pub fn rat_to_number(r: &Rat) -> Number {
    if r.is_integer() {
        return Number::from_string_unchecked(r.to_string());
    }
    let f = r.to_f64();
    match Rat::from_f64_exact(f) {
        Some(back) if &back == r => Number::from_string_unchecked(format!("{f:?}")),
        _ => Number::from_f64(f).unwrap_or_else(|| Number::from(0)),
    }
}

fn value_to_number(v: &Value) -> Number {
    match v {
        Value::Exact(r) => rat_to_number(r),
        Value::Float(f) => Number::from_f64(*f).unwrap_or_else(|| Number::from(0)),
    }
}

impl GraphJson {
    pub fn into_graph(self, context: &str) -> Result<Graph, InputError> {
        let labels = match self.labels {
            None => None,
            Some(ls) => {
                let mut out = Vec::with_capacity(ls.len());
                for (vertex, l) in ls.iter().enumerate() {
                    let mut row = Vec::with_capacity(l.len());
                    for (index, x) in l.iter().enumerate() {
                        let r = number_to_rat(x).ok_or_else(|| InputError::Label {
                            context: context.to_string(),
                            vertex,
                            index,
                            text: x.to_string(),
                        })?;
                        row.push(Value::Exact(r));
                    }
                    out.push(row);
                }
                Some(out)
            }
        };
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|e| (e[0], e[1])).collect();
        Graph::new(self.n, &edges, labels).map_err(|source| InputError::Graph { context: context.to_string(), source })
    }

    pub fn from_graph(g: &Graph) -> GraphJson {
        GraphJson {
            n: g.n(),
            edges: g.edges().map(|(u, v)| [u, v]).collect(),
            labels: (g.ell() > 0).then(|| g.labels().iter().map(|l| l.iter().map(value_to_number).collect()).collect()),
        }
    }
}

pub fn parse_graph(text: &str, context: &str) -> Result<Graph, InputError> {
    let j: GraphJson = serde_json::from_str(text).map_err(|source| InputError::Json { context: context.to_string(), source })?;
    j.into_graph(context)
}

pub fn read_text(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path).map_err(|source| InputError::Read { path: path.to_path_buf(), source })
}

pub fn read_graph(path: &Path) -> Result<Graph, InputError> {
    parse_graph(&read_text(path)?, &path.display().to_string())
}

pub fn graph_to_json(g: &Graph) -> String {
    serde_json::to_string(&GraphJson::from_graph(g)).expect("graphs serialize")
}

/// One graph per non-blank line.
pub fn parse_jsonl(text: &str, name: &str) -> Result<Vec<Graph>, InputError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_graph(l, &format!("{name}:{}", i + 1)))
        .collect()
}

/// `exhaustive:N`, `random:N:COUNT:SEED`, or a JSONL file.
pub fn load_corpus(spec: &str, labels: Option<&LabelSpec>) -> Result<Vec<Graph>, InputError> {
    let bad = || InputError::Invalid(format!("bad corpus spec {spec:?}; expected exhaustive:N, random:N:COUNT:SEED or a .jsonl path"));
    if let Some(n) = spec.strip_prefix("exhaustive:") {
        let n = n.parse().map_err(|_| bad())?;
        return Ok(generate_corpus(n, &CorpusMode::Exhaustive, labels)?);
    }
    if let Some(rest) = spec.strip_prefix("random:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let [n, count, seed] = parts.as_slice() else { return Err(bad()) };
        let (n, count, seed) = (n.parse().map_err(|_| bad())?, count.parse().map_err(|_| bad())?, seed.parse().map_err(|_| bad())?);
        return Ok(generate_corpus(n, &CorpusMode::Random { count, seed }, labels)?);
    }
    if labels.is_some() {
        return Err(InputError::Invalid(String::from("--ell only applies to generated corpora")));
    }
    let path = Path::new(spec);
    parse_jsonl(&read_text(path)?, spec)
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerJson {
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    #[serde(default = "default_act")]
    pub act: String,
}

fn default_act() -> String {
    String::from("id")
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpJson {
    pub layers: Vec<LayerJson>,
}

pub fn parse_activation(s: &str) -> Result<Activation, InputError> {
    match s {
        "relu" => Ok(Activation::Relu),
        "id" | "identity" => Ok(Activation::Identity),
        _ => Err(InputError::Invalid(format!("unknown activation {s:?}; expected relu or id"))),
    }
}

impl MlpJson {
    pub fn into_mlp(self) -> Result<Arc<Mlp>, InputError> {
        let layers = self
            .layers
            .into_iter()
            .map(|l| Ok(Layer { w: l.w, b: l.b, act: parse_activation(&l.act)? }))
            .collect::<Result<Vec<_>, InputError>>()?;
        Mlp::new(layers).map(Arc::new).map_err(InputError::Invalid)
    }
}

pub fn read_mlp(path: &Path) -> Result<Arc<Mlp>, InputError> {
    let context = path.display().to_string();
    let j: MlpJson = serde_json::from_str(&read_text(path)?).map_err(|source| InputError::Json { context, source })?;
    j.into_mlp()
}

#[derive(Deserialize)]
struct NamedExpr {
    name: String,
    expr: String,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ExprFile {
    One(NamedExpr),
    Many(Vec<NamedExpr>),
}

/// A file holding one expression in surface syntax, or JSON `{"name", "expr"}` entries.
pub fn parse_expr_file(text: &str, context: &str, funcs: &FunctionRegistry) -> Result<Vec<(String, Expr)>, InputError> {
    let trimmed = text.trim_start();
    let entries = if trimmed.starts_with('{') || trimmed.starts_with('[') {
        match serde_json::from_str(text).map_err(|source| InputError::Json { context: context.to_string(), source })? {
            ExprFile::One(e) => vec![e],
            ExprFile::Many(es) => es,
        }
    } else {
        let stem = Path::new(context).file_stem().map_or_else(|| context.to_string(), |s| s.to_string_lossy().into_owned());
        vec![NamedExpr { name: stem, expr: text.to_string() }]
    };
    entries
        .into_iter()
        .map(|e| {
            let parsed = parse_with(&e.expr, funcs).map_err(|source| InputError::Parse { context: format!("{context} ({})", e.name), source })?;
            Ok((e.name, parsed))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_file() {
        let g = parse_graph(r#"{"n":3,"edges":[[0,1],[1,2],[0,2]],"labels":[[],[],[]]}"#, "k3").unwrap();
        assert_eq!((g.n(), g.edge_count(), g.ell()), (3, 3, 0));
    }

    #[test]
    fn decimal_labels_stay_exact() {
        let g = parse_graph(r#"{"n":2,"edges":[[0,1]],"labels":[[0.1],[3]]}"#, "g").unwrap();
        assert_eq!(g.label(0)[0], Value::Exact(Rat::new(1, 10).unwrap()));
        let back = graph_to_json(&parse_graph(r#"{"n":2,"edges":[[1,0]],"labels":[[0.5],[-2]]}"#, "g").unwrap());
        assert_eq!(back, r#"{"n":2,"edges":[[0,1]],"labels":[[0.5],[-2]]}"#);
    }

    #[test]
    fn bad_graphs_name_the_problem() {
        let e = parse_graph(r#"{"n":2,"edges":[[0,2]]}"#, "g").unwrap_err();
        assert!(e.to_string().contains("outside"), "{e}");
        let e = parse_graph(r#"{"n":2,"edges":[[1,1]]}"#, "g").unwrap_err();
        assert!(e.to_string().contains("self-loop"), "{e}");
        let e = parse_graph(r#"{"n":2,"edges":[],"labels":[[1],[]]}"#, "g").unwrap_err();
        assert!(e.to_string().contains("vertex 1"), "{e}");
        assert!(parse_graph(r#"{"n":2,"edges":[],"weights":[]}"#, "g").is_err());
    }

    #[test]
    fn corpus_specs() {
        assert_eq!(load_corpus("exhaustive:4", None).unwrap().len(), 11);
        assert_eq!(load_corpus("random:6:5:1", None).unwrap().len(), 5);
        assert!(load_corpus("exhaustive:x", None).is_err());
    }

    #[test]
    fn expression_files() {
        let f = FunctionRegistry::new();
        let one = parse_expr_file("sum x2 : E(x1,x2)", "theta.tl", &f).unwrap();
        assert_eq!(one[0].0, "theta");
        let many = parse_expr_file(r#"[{"name":"a","expr":"P1(x1)"},{"name":"b","expr":"1"}]"#, "f.json", &f).unwrap();
        assert_eq!(many.len(), 2);
        assert!(parse_expr_file("sum x0 : 1", "bad", &f).is_err());
    }
}
