//! Membership classifiers for the de Finetti, zero-one and LLN weight classes.
//!
//! On a finite alphabet the necessary condition is equivalent to connectivity
//! of the graph `G_S` for every nonempty subset `S`, and it is also sufficient,
//! so the three classes coincide and a definitive graph verdict settles all of
//! them at once.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Symbol;
use crate::weights::{tail_classify, SeriesRule, TailClass, TailOptions, Verdict, WeightFn, WeightSeq};

pub const MAX_SUBSET_ALPHABET: usize = 12;

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    components: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
            components: n,
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.components -= 1;
        true
    }

    pub fn components(&self) -> usize {
        self.components
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeEvidence {
    pub x0: Symbol,
    pub x1: Symbol,
    /// `Some(true)` with divergence proven, `Some(false)` with convergence proven.
    pub present: Option<bool>,
    pub tail: TailClass,
}

/// The graph on `S` whose edges are the pairs with a divergent min/max series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphGS {
    #[serde(rename = "S")]
    pub subset: Vec<Symbol>,
    /// `None` when the answer hinges on an edge without a closed-form verdict.
    pub connected: Option<bool>,
    pub edges: Vec<EdgeEvidence>,
    /// Pairs whose series has no verdict.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub unknown_edges: Vec<(Symbol, Symbol)>,
}

impl GraphGS {
    /// Proven edges only.
    pub fn adjacency(&self) -> impl Iterator<Item = (Symbol, Symbol)> + '_ {
        self.edges.iter().filter(|e| e.present == Some(true)).map(|e| (e.x0, e.x1))
    }

    pub fn has_edge(&self, a: Symbol, b: Symbol) -> bool {
        let (a, b) = (a.min(b), a.max(b));
        self.adjacency().any(|e| e == (a, b))
    }
}

fn connected_with(subset: &[Symbol], edges: impl Iterator<Item = (Symbol, Symbol)>) -> bool {
    let pos = |x: Symbol| subset.iter().position(|&s| s == x).expect("edge inside subset");
    let mut uf = UnionFind::new(subset.len());
    for (a, b) in edges {
        uf.union(pos(a), pos(b));
    }
    uf.components() <= 1
}

/// Builds `G_S` with symbolic edge verdicts.
///
/// Connectivity is decided when the proven edges already connect `S`, or when
/// `S` stays disconnected even after adding every undecided edge; otherwise it
/// is left undecided.
pub fn build_graph_gs(lambda: &WeightSeq, subset: &[Symbol], opts: &TailOptions) -> Result<GraphGS> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    let k = lambda.alphabet_size();
    let mut s: Vec<Symbol> = subset.to_vec();
    s.sort_unstable();
    s.dedup();
    if let Some(&bad) = s.iter().find(|&&x| x >= k) {
        return Err(Error::InvalidSymbol { symbol: bad, size: k });
    }
    let mut edges = Vec::new();
    let mut unknown_edges = Vec::new();
    for (a, &x0) in s.iter().enumerate() {
        for &x1 in &s[a + 1..] {
            let rule = SeriesRule::GraphEdge {
                x0,
                x1,
                subset: s.clone(),
            };
            let tail = tail_classify(lambda, &rule, opts)?;
            let present = match tail.verdict {
                Verdict::DivergesProven => Some(true),
                Verdict::ConvergesProven => Some(false),
                Verdict::Unknown => {
                    unknown_edges.push((x0, x1));
                    None
                }
            };
            edges.push(EdgeEvidence { x0, x1, present, tail });
        }
    }
    let proven = connected_with(&s, edges.iter().filter(|e| e.present == Some(true)).map(|e| (e.x0, e.x1)));
    let optimistic = connected_with(&s, edges.iter().filter(|e| e.present != Some(false)).map(|e| (e.x0, e.x1)));
    let connected = if proven {
        Some(true)
    } else if !optimistic {
        Some(false)
    } else {
        None
    };
    Ok(GraphGS {
        subset: s,
        connected,
        edges,
        unknown_edges,
    })
}

/// Nonempty subsets of `0..k`, by size and then lexicographically.
pub fn subsets_in_order(k: usize) -> Result<Vec<Vec<Symbol>>> {
    if k > MAX_SUBSET_ALPHABET {
        return Err(Error::TooManySubsets {
            size: k,
            limit: MAX_SUBSET_ALPHABET,
        });
    }
    let mut out: Vec<Vec<Symbol>> = (1u32..(1 << k)).map(|mask| (0..k).filter(|x| mask >> x & 1 == 1).collect()).collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Holds,
    Fails,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NecessaryReport {
    pub status: Status,
    pub subsets: Vec<GraphGS>,
    /// Smallest subset whose graph is disconnected.
    pub witness: Option<Vec<Symbol>>,
}

/// `G_S` for every nonempty `S`; holds iff all are connected.
pub fn necessary_report(lambda: &WeightSeq, opts: &TailOptions) -> Result<NecessaryReport> {
    let subsets = subsets_in_order(lambda.alphabet_size())?;
    let graphs = subsets
        .par_iter()
        .map(|s| build_graph_gs(lambda, s, opts))
        .collect::<Result<Vec<_>>>()?;
    let witness = graphs.iter().find(|g| g.connected == Some(false)).map(|g| g.subset.clone());
    let status = if witness.is_some() {
        Status::Fails
    } else if graphs.iter().all(|g| g.connected == Some(true)) {
        Status::Holds
    } else {
        Status::Unknown
    };
    Ok(NecessaryReport {
        status,
        subsets: graphs,
        witness,
    })
}

/// The reference functions tried by default: the constant one and `lambda_1`.
pub fn default_candidates(lambda: &WeightSeq) -> Vec<WeightFn> {
    vec![WeightFn::ones(lambda.alphabet_size()), lambda.weight_at(1)]
}

/// One tail verdict per reference candidate.
pub fn sufficient_report(lambda: &WeightSeq, candidates: &[WeightFn], opts: &TailOptions) -> Result<Vec<TailClass>> {
    candidates
        .iter()
        .map(|c| tail_classify(lambda, &SeriesRule::Sufficient { reference: c.clone() }, opts))
        .collect()
}

/// Series `sum_i min(lambda_i(0), lambda_i(1)) / max(lambda_i(0), lambda_i(1))`; binary alphabets only.
pub fn binary_criterion(lambda: &WeightSeq, opts: &TailOptions) -> Result<TailClass> {
    if lambda.alphabet_size() != 2 {
        return Err(Error::WrongAlphabet {
            size: lambda.alphabet_size(),
        });
    }
    tail_classify(lambda, &SeriesRule::Binary, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conclusion {
    /// Some candidate certifies the sufficient condition.
    pub sufficient: Status,
    pub necessary: Status,
    /// Membership in the de Finetti, zero-one and LLN classes; `None` when undetermined.
    pub in_definetti: Option<bool>,
    pub in_zero_one: Option<bool>,
    pub in_lln: Option<bool>,
    pub summary: String,
}

impl Conclusion {
    pub fn is_definitive(&self) -> bool {
        self.in_definetti.is_some() && self.in_zero_one.is_some() && self.in_lln.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub family: String,
    pub candidates: Vec<Vec<f64>>,
    pub sufficient: Vec<TailClass>,
    pub binary: Option<TailClass>,
    pub subsets: Vec<GraphGS>,
    pub conclusion: Conclusion,
}

/// Runs every classifier and combines the verdicts along the inclusion chain
/// sufficient ⊆ de Finetti ⊆ zero-one ⊆ LLN ⊆ necessary.
pub fn check_conditions(lambda: &WeightSeq, candidates: &[WeightFn], opts: &TailOptions) -> Result<ConditionReport> {
    let sufficient = sufficient_report(lambda, candidates, opts)?;
    let binary = if lambda.alphabet_size() == 2 {
        Some(binary_criterion(lambda, opts)?)
    } else {
        None
    };
    let necessary = necessary_report(lambda, opts)?;

    let suff_status = if sufficient.iter().any(|t| t.verdict == Verdict::DivergesProven) {
        Status::Holds
    } else if !sufficient.is_empty() && sufficient.iter().all(|t| t.verdict == Verdict::ConvergesProven) {
        Status::Fails
    } else {
        Status::Unknown
    };
    let mut nec_status = necessary.status;
    if suff_status == Status::Holds {
        if nec_status == Status::Fails {
            return Err(Error::Inconsistent(
                "sufficient condition holds while the necessary condition fails".into(),
            ));
        }
        nec_status = Status::Holds;
    }
    if let Some(b) = &binary {
        let from_binary = match b.verdict {
            Verdict::DivergesProven => Status::Holds,
            Verdict::ConvergesProven => Status::Fails,
            Verdict::Unknown => Status::Unknown,
        };
        match (from_binary, nec_status) {
            (Status::Unknown, _) => {}
            (s, Status::Unknown) => nec_status = s,
            (s, t) if s != t => {
                return Err(Error::Inconsistent(format!(
                    "binary criterion gives {s:?} but subset connectivity gives {t:?}"
                )))
            }
            _ => {}
        }
    }
    let member = match nec_status {
        Status::Holds => Some(true),
        Status::Fails => Some(false),
        Status::Unknown => None,
    };
    let summary = match (member, suff_status) {
        (Some(true), Status::Holds) => "in all of dF, 01, LLN; sufficient condition holds".to_string(),
        (Some(true), _) => {
            "in all of dF, 01, LLN via subset connectivity; sufficient condition not certified by the given candidates"
                .to_string()
        }
        (Some(false), _) => "in none of dF, 01, LLN".to_string(),
        (None, _) => "undetermined: some series has no closed-form verdict".to_string(),
    };
    Ok(ConditionReport {
        family: lambda.family_name().to_string(),
        candidates: candidates.iter().map(WeightFn::values).collect(),
        sufficient,
        binary,
        subsets: necessary.subsets,
        conclusion: Conclusion {
            sufficient: suff_status,
            necessary: nec_status,
            in_definetti: member,
            in_zero_one: member,
            in_lln: member,
            summary,
        },
    })
}
