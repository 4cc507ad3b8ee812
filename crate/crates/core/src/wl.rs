//! Colour refinement and the folklore k-dimensional Weisfeiler-Leman test.
//!
//! Colours are small integers handed out by an [`Interner`] from canonical
//! byte encodings, so two items get the same colour exactly when their
//! (recursively defined) labels are equal. Share one interner across every
//! graph whose colours you want to compare.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::graph::{atomic_type, Graph};

/// Assigns dense ids to canonical encodings.
#[derive(Default, Debug, Clone)]
pub struct Interner {
    ids: BTreeMap<Vec<u8>, u32>,
    table: Vec<Vec<u8>>,
}

impl Interner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, bytes: Vec<u8>) -> u32 {
        if let Some(&id) = self.ids.get(&bytes) {
            return id;
        }
        let id = self.table.len() as u32;
        self.table.push(bytes.clone());
        self.ids.insert(bytes, id);
        id
    }

    /// The encoding behind an id.
    pub fn encoding(&self, id: u32) -> &[u8] {
        &self.table[id as usize]
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    /// Colour refinement (1-dimensional, neighbourhood multisets).
    Cr,
    /// Folklore k-WL over k-tuples.
    Wl(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WlError {
    TooManyTuples { n: usize, k: usize, cap: usize },
    ZeroDimension,
    RoundOutOfRange { t: usize, computed: usize },
}

impl fmt::Display for WlError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WlError::TooManyTuples { n, k, cap } => write!(f, "{n}^{k} tuples exceed the cap of {cap}"),
            WlError::ZeroDimension => f.write_str("k-WL needs k >= 1"),
            WlError::RoundOutOfRange { t, computed } => {
                write!(f, "round {t} requested but only rounds 0..={computed} were computed")
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RefineOptions {
    /// Stop once a round induces the same partition as the one before.
    pub stop_early: bool,
    /// Largest number of k-tuples k-WL will colour.
    pub max_tuples: usize,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions { stop_early: true, max_tuples: 2_000_000 }
    }
}

/// Colours of every item (vertex or k-tuple) per round.
#[derive(Clone, Debug)]
pub struct RefinementTrace {
    pub algorithm: Algorithm,
    pub n: usize,
    /// `rounds[t][item]`; k-tuples are indexed in mixed radix `n`.
    pub rounds: Vec<Vec<u32>>,
    /// First round whose partition equals that of the previous round.
    pub stable_round: Option<usize>,
}

impl RefinementTrace {
    pub fn last_round(&self) -> usize {
        self.rounds.len() - 1
    }

    pub fn class_count(&self, t: usize) -> usize {
        let mut v = self.rounds[t].clone();
        v.sort_unstable();
        v.dedup();
        v.len()
    }

    fn round(&self, t: usize) -> Result<&[u32], WlError> {
        self.rounds.get(t).map(Vec::as_slice).ok_or(WlError::RoundOutOfRange { t, computed: self.last_round() })
    }

    /// Colour of vertex `v` (for k-WL, of the tuple `(v, ..., v)`).
    pub fn vertex_label(&self, v: usize, t: usize) -> Result<u32, WlError> {
        let r = self.round(t)?;
        let k = match self.algorithm {
            Algorithm::Cr => 1,
            Algorithm::Wl(k) => k,
        };
        let diag: usize = (0..k).map(|i| self.n.pow(i as u32)).sum();
        Ok(r[v * diag])
    }

    /// Colour of the multiset of all item colours at round `t`.
    pub fn graph_label(&self, t: usize, interner: &mut Interner) -> Result<u32, WlError> {
        let mut ids = self.round(t)?.to_vec();
        ids.sort_unstable();
        let mut enc = vec![b'G'];
        enc.extend_from_slice(&(ids.len() as u32).to_be_bytes());
        for id in ids {
            enc.extend_from_slice(&id.to_be_bytes());
        }
        Ok(interner.intern(enc))
    }
}

fn same_partition(a: &[u32], b: &[u32]) -> bool {
    let mut fwd = BTreeMap::new();
    let mut bwd = BTreeMap::new();
    a.iter().zip(b).all(|(x, y)| *fwd.entry(*x).or_insert(*y) == *y && *bwd.entry(*y).or_insert(*x) == *x)
}

fn push_multiset(enc: &mut Vec<u8>, prev: u32, mut items: Vec<u32>) {
    items.sort_unstable();
    enc.extend_from_slice(&prev.to_be_bytes());
    enc.extend_from_slice(&(items.len() as u32).to_be_bytes());
    for id in items {
        enc.extend_from_slice(&id.to_be_bytes());
    }
}

/// Colour refinement for up to `t_max` rounds, stopping early at stability.
pub fn color_refinement(g: &Graph, t_max: usize, interner: &mut Interner) -> RefinementTrace {
    color_refinement_with(g, t_max, interner, RefineOptions::default())
}

pub fn color_refinement_with(g: &Graph, t_max: usize, interner: &mut Interner, opts: RefineOptions) -> RefinementTrace {
    let n = g.n();
    let r0: Vec<u32> = (0..n)
        .map(|v| {
            let mut enc = vec![b'L'];
            enc.extend_from_slice(&(g.ell() as u32).to_be_bytes());
            for x in g.label(v) {
                x.canonical_bytes(&mut enc);
            }
            interner.intern(enc)
        })
        .collect();
    let mut trace = RefinementTrace { algorithm: Algorithm::Cr, n, rounds: vec![r0], stable_round: None };
    for t in 1..=t_max {
        let prev = &trace.rounds[t - 1];
        let next: Vec<u32> = (0..n)
            .map(|v| {
                let mut enc = vec![b'C'];
                push_multiset(&mut enc, prev[v], g.neighbors(v).iter().map(|&u| prev[u]).collect());
                interner.intern(enc)
            })
            .collect();
        let stable = same_partition(prev, &next);
        trace.rounds.push(next);
        if stable && trace.stable_round.is_none() {
            trace.stable_round = Some(t);
            if opts.stop_early {
                break;
            }
        }
    }
    trace
}

/// Folklore k-WL for up to `t_max` rounds, stopping early at stability.
pub fn folklore_wl(g: &Graph, k: usize, t_max: usize, interner: &mut Interner) -> Result<RefinementTrace, WlError> {
    folklore_wl_with(g, k, t_max, interner, RefineOptions::default())
}

pub fn folklore_wl_with(g: &Graph, k: usize, t_max: usize, interner: &mut Interner, opts: RefineOptions) -> Result<RefinementTrace, WlError> {
    if k == 0 {
        return Err(WlError::ZeroDimension);
    }
    let n = g.n();
    let total = n.checked_pow(k as u32).filter(|&m| m <= opts.max_tuples).ok_or(WlError::TooManyTuples { n, k, cap: opts.max_tuples })?;
    let stride: Vec<usize> = (0..k).map(|i| n.pow((k - 1 - i) as u32)).collect();
    let decode = |mut idx: usize| -> Vec<usize> {
        let mut t = vec![0; k];
        for p in (0..k).rev() {
            t[p] = idx % n;
            idx /= n;
        }
        t
    };
    let atp_id = |interner: &mut Interner, tuple: &[usize]| {
        let mut enc = vec![b'A'];
        atomic_type(g, tuple).canonical_bytes(&mut enc);
        interner.intern(enc)
    };
    let r0: Vec<u32> = (0..total).map(|i| atp_id(interner, &decode(i))).collect();
    let mut trace = RefinementTrace { algorithm: Algorithm::Wl(k), n, rounds: vec![r0], stable_round: None };
    let mut ext = vec![0usize; k + 1];
    for t in 1..=t_max {
        let prev = &trace.rounds[t - 1];
        let mut next = Vec::with_capacity(total);
        for idx in 0..total {
            let v = decode(idx);
            ext[..k].copy_from_slice(&v);
            let mut elems: Vec<Vec<u8>> = Vec::with_capacity(n);
            for u in 0..n {
                ext[k] = u;
                let mut e = Vec::with_capacity(4 * (k + 1));
                e.extend_from_slice(&atp_id(interner, &ext).to_be_bytes());
                for s in 0..k {
                    let j = idx + u * stride[s] - v[s] * stride[s];
                    e.extend_from_slice(&prev[j].to_be_bytes());
                }
                elems.push(e);
            }
            elems.sort_unstable();
            let mut enc = vec![b'W'];
            enc.extend_from_slice(&prev[idx].to_be_bytes());
            enc.extend_from_slice(&(n as u32).to_be_bytes());
            for e in elems {
                enc.extend_from_slice(&e);
            }
            next.push(interner.intern(enc));
        }
        let stable = same_partition(prev, &next);
        trace.rounds.push(next);
        if stable && trace.stable_round.is_none() {
            trace.stable_round = Some(t);
            if opts.stop_early {
                break;
            }
        }
    }
    Ok(trace)
}

/// Runs either algorithm without early stopping, so all `t_max + 1` rounds exist.
pub fn refine_full(g: &Graph, algo: Algorithm, t_max: usize, interner: &mut Interner) -> Result<RefinementTrace, WlError> {
    let opts = RefineOptions { stop_early: false, ..RefineOptions::default() };
    match algo {
        Algorithm::Cr => Ok(color_refinement_with(g, t_max, interner, opts)),
        Algorithm::Wl(k) => folklore_wl_with(g, k, t_max, interner, opts),
    }
}
