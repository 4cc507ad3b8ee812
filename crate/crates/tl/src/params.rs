//! Architecture weight payloads, from JSON or from a seeded generator.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::Number;

use tl_core::encoders::*;
use tl_core::eval::{Activation, Layer, Mlp};
use tl_core::graph::Graph;
use tl_core::num::{rat, Rat};
use tl_core::treewidth::set_partitions;

use crate::io::{number_to_rat, parse_activation, GraphJson, InputError, MlpJson};

pub const ARCHITECTURES: &[&str] = &["gin", "egin", "graphsage", "gcn", "sgc", "pna", "fgnn", "kgin", "ign", "hom", "chebnet"];

type NumMatrix = Vec<Vec<Number>>;

fn matrix(m: &NumMatrix) -> Result<Matrix, InputError> {
    m.iter().map(|r| vector(r)).collect()
}

fn vector(v: &[Number]) -> Result<Vec<Rat>, InputError> {
    v.iter().map(|x| number_to_rat(x).ok_or_else(|| InputError::Invalid(format!("not a number: {x}")))).collect()
}

fn act(s: &Option<String>) -> Result<Activation, InputError> {
    s.as_deref().map_or(Ok(Activation::Identity), parse_activation)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SageJson {
    #[serde(rename = "V")]
    v: NumMatrix,
    #[serde(rename = "W")]
    w: NumMatrix,
    b: Vec<Number>,
    #[serde(default)]
    agg: Option<String>,
    act: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DenseJson {
    #[serde(rename = "W")]
    w: NumMatrix,
    b: Vec<Number>,
    act: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PnaJson {
    inner: MlpJson,
    outer: MlpJson,
    #[serde(default)]
    scalers: Option<[String; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FgnnJson {
    mlp0: MlpJson,
    mlps: Vec<MlpJson>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KginJson {
    mlp0: MlpJson,
    mlp1: MlpJson,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IgnJson {
    c: Vec<NumMatrix>,
    b: Vec<Vec<Number>>,
    act: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChebJson {
    ws: Vec<NumMatrix>,
    act: Option<String>,
}

/// Every field any architecture uses; `arch` decides which are required.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecJson {
    ell: usize,
    #[serde(default)]
    layers: Option<serde_json::Value>,
    #[serde(default)]
    k: Option<usize>,
    #[serde(default)]
    p: Option<usize>,
    #[serde(default, rename = "W")]
    w: Option<NumMatrix>,
    #[serde(default)]
    act: Option<String>,
    #[serde(default)]
    reduced: Option<bool>,
    #[serde(default)]
    c: Option<Number>,
    #[serde(default)]
    patterns: Option<Vec<GraphJson>>,
    #[serde(default)]
    readout: Option<serde_json::Value>,
}

fn field<T>(x: Option<T>, name: &str, arch: &str) -> Result<T, InputError> {
    x.ok_or_else(|| InputError::Invalid(format!("{arch} parameters need {name:?}")))
}

fn layers<T: for<'de> Deserialize<'de>>(v: Option<serde_json::Value>, arch: &str) -> Result<Vec<T>, InputError> {
    let v = field(v, "layers", arch)?;
    serde_json::from_value(v).map_err(|source| InputError::Json { context: format!("{arch} layers"), source })
}

/// Reads a parameter payload for `arch`.
pub fn spec_from_json(arch: &str, text: &str) -> Result<GnnSpec, InputError> {
    let j: SpecJson = serde_json::from_str(text).map_err(|source| InputError::Json { context: format!("{arch} parameters"), source })?;
    let a = match arch {
        "gin" | "egin" => {
            let ls: Vec<MlpJson> = layers(j.layers, arch)?;
            let ms = ls.into_iter().map(MlpJson::into_mlp).collect::<Result<Vec<_>, _>>()?;
            if arch == "gin" {
                Architecture::Gin(ms)
            } else {
                Architecture::Egin(ms)
            }
        }
        "graphsage" => Architecture::GraphSage(
            layers::<SageJson>(j.layers, arch)?
                .into_iter()
                .map(|l| {
                    Ok(SageLayer { v: matrix(&l.v)?, w: matrix(&l.w)?, b: vector(&l.b)?, agg: l.agg.unwrap_or_else(|| "sum".into()), act: act(&l.act)? })
                })
                .collect::<Result<_, InputError>>()?,
        ),
        "gcn" => Architecture::Gcn(
            layers::<DenseJson>(j.layers, arch)?
                .into_iter()
                .map(|l| Ok(DenseLayer { w: matrix(&l.w)?, b: vector(&l.b)?, act: act(&l.act)? }))
                .collect::<Result<_, InputError>>()?,
        ),
        "sgc" => Architecture::Sgc { p: field(j.p, "p", arch)?, w: matrix(&field(j.w, "W", arch)?)?, act: act(&j.act)? },
        "pna" => Architecture::Pna(
            layers::<PnaJson>(j.layers, arch)?
                .into_iter()
                .map(|l| {
                    Ok(PnaLayer {
                        inner: l.inner.into_mlp()?,
                        outer: l.outer.into_mlp()?,
                        scalers: l.scalers.unwrap_or_else(|| ["log1p".into(), "recip_sqrt_plus1".into()]),
                    })
                })
                .collect::<Result<_, InputError>>()?,
        ),
        "fgnn" => Architecture::Fgnn {
            k: field(j.k, "k", arch)?,
            layers: layers::<FgnnJson>(j.layers, arch)?
                .into_iter()
                .map(|l| Ok(FgnnLayer { mlp0: l.mlp0.into_mlp()?, mlps: l.mlps.into_iter().map(MlpJson::into_mlp).collect::<Result<_, _>>()? }))
                .collect::<Result<_, InputError>>()?,
        },
        "kgin" => Architecture::Kgin {
            k: field(j.k, "k", arch)?,
            layers: layers::<KginJson>(j.layers, arch)?
                .into_iter()
                .map(|l| Ok(KginLayer { mlp0: l.mlp0.into_mlp()?, mlp1: l.mlp1.into_mlp()? }))
                .collect::<Result<_, InputError>>()?,
        },
        "ign" => Architecture::Ign {
            k: field(j.k, "k", arch)?,
            reduced: j.reduced.unwrap_or(false),
            layers: layers::<IgnJson>(j.layers, arch)?
                .into_iter()
                .map(|l| {
                    Ok(IgnLayer {
                        c: l.c.iter().map(matrix).collect::<Result<_, _>>()?,
                        b: l.b.iter().map(|b| vector(b)).collect::<Result<_, _>>()?,
                        act: act(&l.act)?,
                    })
                })
                .collect::<Result<_, InputError>>()?,
        },
        "hom" => Architecture::HomCount(
            field(j.patterns, "patterns", arch)?
                .into_iter()
                .enumerate()
                .map(|(i, p)| p.into_graph(&format!("pattern {i}")))
                .collect::<Result<_, _>>()?,
        ),
        "chebnet" => Architecture::ChebNet {
            c: j.c.as_ref().map_or(Ok(Rat::one()), |c| vector(std::slice::from_ref(c)).map(|mut v| v.remove(0)))?,
            layers: layers::<ChebJson>(j.layers, arch)?
                .into_iter()
                .map(|l| Ok(ChebLayer { ws: l.ws.iter().map(matrix).collect::<Result<_, _>>()?, act: act(&l.act)? }))
                .collect::<Result<_, InputError>>()?,
        },
        _ => return Err(unknown(arch)),
    };
    let a = match j.readout {
        None | Some(serde_json::Value::Bool(false)) => a,
        Some(serde_json::Value::Bool(true)) => Architecture::Readout { inner: Box::new(a), ro: None },
        Some(v) => {
            let m: MlpJson = serde_json::from_value(v).map_err(|source| InputError::Json { context: String::from("readout"), source })?;
            Architecture::Readout { inner: Box::new(a), ro: Some(m.into_mlp()?) }
        }
    };
    Ok(GnnSpec { arch: a, ell: j.ell })
}

fn unknown(arch: &str) -> InputError {
    InputError::Invalid(format!("unknown architecture {arch:?}; expected one of {}", ARCHITECTURES.join(", ")))
}

/// Options for seeded random weights.
#[derive(Clone, Debug)]
pub struct RandomArch {
    pub layers: usize,
    pub width: usize,
    pub ell: usize,
    pub k: usize,
    pub seed: u64,
    pub readout: bool,
}

struct Gen(ChaCha8Rng);

impl Gen {
    fn mlp(&mut self, input: usize, output: usize) -> Arc<Mlp> {
        let hidden = output.max(2);
        let mut layer = |i: usize, o: usize, act| Layer {
            w: (0..o).map(|_| (0..i).map(|_| self.0.gen_range(-1.0..1.0)).collect()).collect(),
            b: (0..o).map(|_| self.0.gen_range(-0.5..0.5)).collect(),
            act,
        };
        let a = layer(input, hidden, Activation::Relu);
        let b = layer(hidden, output, Activation::Identity);
        Arc::new(Mlp::new(vec![a, b]).expect("consistent shapes"))
    }

    fn rat(&mut self) -> Rat {
        const POOL: [(i64, i64); 7] = [(-1, 1), (-1, 2), (0, 1), (1, 4), (1, 2), (1, 1), (2, 1)];
        let (n, d) = POOL[self.0.gen_range(0..POOL.len())];
        rat(n, d)
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Matrix {
        (0..rows).map(|_| (0..cols).map(|_| self.rat()).collect()).collect()
    }

    fn vector(&mut self, len: usize) -> Vec<Rat> {
        (0..len).map(|_| self.rat()).collect()
    }
}

/// Seeded weights of the right shapes; hidden features have `width` entries.
pub fn random_spec(arch: &str, o: &RandomArch) -> Result<GnnSpec, InputError> {
    let mut g = Gen(ChaCha8Rng::seed_from_u64(o.seed));
    let (w, ell, k) = (o.width.max(1), o.ell, o.k.max(1));
    let dims: Vec<usize> = (0..=o.layers).map(|i| if i == 0 { ell } else { w }).collect();
    let act_of = |i: usize| if i + 1 == o.layers { Activation::Identity } else { Activation::Relu };
    let a = match arch {
        "gin" => Architecture::Gin((0..o.layers).map(|i| g.mlp(2 * dims[i], w)).collect()),
        "egin" => Architecture::Egin((0..o.layers).map(|i| g.mlp(3 * dims[i], w)).collect()),
        "graphsage" => Architecture::GraphSage(
            (0..o.layers)
                .map(|i| SageLayer { v: g.matrix(w, dims[i]), w: g.matrix(w, dims[i]), b: g.vector(w), agg: "sum".into(), act: act_of(i) })
                .collect(),
        ),
        "gcn" => Architecture::Gcn((0..o.layers).map(|i| DenseLayer { w: g.matrix(w, dims[i]), b: g.vector(w), act: act_of(i) }).collect()),
        "sgc" => Architecture::Sgc { p: o.layers, w: g.matrix(w, ell), act: Activation::Identity },
        "pna" => Architecture::Pna(
            (0..o.layers)
                .map(|i| PnaLayer { inner: g.mlp(dims[i], w), outer: g.mlp(12 * w, w), scalers: ["log1p".into(), "recip_sqrt_plus1".into()] })
                .collect(),
        ),
        "fgnn" => {
            let mut d = fgnn_initial_dim(k, ell);
            let mut layers = Vec::new();
            for _ in 0..o.layers {
                let mlps = (0..k).map(|_| g.mlp(d, w)).collect();
                layers.push(FgnnLayer { mlp0: g.mlp(d + w, w), mlps });
                d = w;
            }
            Architecture::Fgnn { k, layers }
        }
        "kgin" => {
            let mut d = atp_dim(k, ell);
            let mut layers = Vec::new();
            for _ in 0..o.layers {
                layers.push(KginLayer { mlp1: g.mlp(d, w), mlp0: g.mlp(d + k * w, w) });
                d = w;
            }
            Architecture::Kgin { k, layers }
        }
        "ign" => {
            let (gammas, mus) = (set_partitions(2 * k).len(), set_partitions(k).len());
            let mut d = atp_dim(k, ell);
            let mut layers = Vec::new();
            for i in 0..o.layers {
                layers.push(IgnLayer { c: (0..gammas).map(|_| g.matrix(w, d)).collect(), b: (0..mus).map(|_| g.vector(w)).collect(), act: act_of(i) });
                d = w;
            }
            Architecture::Ign { k, layers, reduced: true }
        }
        "hom" => Architecture::HomCount(vec![Graph::complete(3), Graph::path(3), Graph::cycle(4)]),
        "chebnet" => Architecture::ChebNet {
            c: Rat::one(),
            layers: (0..o.layers).map(|i| ChebLayer { ws: (0..3).map(|_| g.matrix(w, dims[i])).collect(), act: act_of(i) }).collect(),
        },
        _ => return Err(unknown(arch)),
    };
    let a = if o.readout { Architecture::Readout { inner: Box::new(a), ro: None } } else { a };
    Ok(GnnSpec { arch: a, ell })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_architecture_has_random_weights_that_encode() {
        for arch in ARCHITECTURES {
            let o = RandomArch { layers: 2, width: 2, ell: 1, k: 2, seed: 5, readout: false };
            let spec = random_spec(arch, &o).unwrap();
            encode(&spec).unwrap_or_else(|e| panic!("{arch}: {e}"));
        }
        assert!(random_spec("gat", &RandomArch { layers: 1, width: 1, ell: 1, k: 1, seed: 0, readout: false }).is_err());
    }

    #[test]
    fn gin_payload() {
        let text = r#"{"ell":1,"layers":[{"layers":[{"W":[[1,2]],"b":[0],"act":"id"}]}]}"#;
        let spec = spec_from_json("gin", text).unwrap();
        let b = encode(&spec).unwrap();
        assert_eq!(b.exprs.len(), 1);
        let sgc = spec_from_json("sgc", r#"{"ell":1,"p":2,"W":[[0.5]],"readout":true}"#).unwrap();
        assert_eq!(encode(&sgc).unwrap().arity, 0);
        assert!(spec_from_json("sgc", r#"{"ell":1}"#).is_err());
    }
}
