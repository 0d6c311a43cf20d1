//! Rejection thinning, weighted empirical limits and spanning-tree
//! reconstruction of the latent component behind an observed stream.
//!
//! Every estimator works with the ratios `f_i(x) = lambda_i(x) / lambda_*(x)`;
//! the reconstructed `tilde P` targets `P∘lambda_*` and `tilde P_*` targets `P`
//! up to normalization.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::conditions::build_graph_gs;
use crate::error::{Error, Result};
use crate::logspace::LogAccumulator;
use crate::model::{reweight, Dist, Measure, RandomSource, Symbol};
use crate::weights::{TailOptions, WeightFn, WeightSeq};

/// Symbol used to pad a finite accepted subsequence.
pub const PADDING_SYMBOL: Symbol = 0;

fn check_reference(lambda: &WeightSeq, reference: &WeightFn) -> Result<()> {
    if reference.len() != lambda.alphabet_size() {
        return Err(Error::AlphabetMismatch {
            expected: lambda.alphabet_size(),
            actual: reference.len(),
        });
    }
    Ok(())
}

fn check_symbols(xs: &[Symbol], k: usize) -> Result<()> {
    match xs.iter().find(|&&x| x >= k) {
        Some(&x) => Err(Error::InvalidSymbol { symbol: x, size: k }),
        None => Ok(()),
    }
}

/// `ln f_i(x)` for all `x`, and its minimum.
fn ln_ratios(lambda: &WeightSeq, i: usize, reference: &WeightFn) -> (Vec<f64>, f64) {
    let f: Vec<f64> = (0..lambda.alphabet_size()).map(|x| lambda.ln_weight(i, x) - reference.ln(x)).collect();
    let min = f.iter().copied().fold(f64::INFINITY, f64::min);
    (f, min)
}

/// `p_i(x) = min_x' f_i(x') / f_i(x)`.
pub fn acceptance_prob(lambda: &WeightSeq, i: usize, x: Symbol, reference: &WeightFn) -> f64 {
    let (f, min) = ln_ratios(lambda, i, reference);
    (min - f[x]).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionTrace {
    /// `p_i(x_i)` for each observed index.
    pub probs: Vec<f64>,
    /// Accepted indices `I_1 < I_2 < ..`, 1-based.
    pub accepted: Vec<usize>,
    /// `M_n`, the number of acceptances among the first `n` observations.
    pub counts: Vec<usize>,
    pub padding: Symbol,
}

impl RejectionTrace {
    pub fn accepted_count(&self) -> usize {
        self.accepted.len()
    }

    /// `(x_{I_1}, .., x_{I_M})`.
    pub fn subsequence(&self, xs: &[Symbol]) -> Vec<Symbol> {
        self.accepted.iter().map(|&i| xs[i - 1]).collect()
    }
}

/// Accepts index `i` when `U_i <= probs[i]`, with one uniform per index drawn in order.
pub fn thin_with_probabilities<R: Rng + ?Sized>(probs: Vec<f64>, rng: &mut R) -> RejectionTrace {
    let mut accepted = Vec::new();
    let mut counts = Vec::with_capacity(probs.len());
    for (i, &p) in probs.iter().enumerate() {
        let u: f64 = rng.gen();
        if u <= p {
            accepted.push(i + 1);
        }
        counts.push(accepted.len());
    }
    RejectionTrace {
        probs,
        accepted,
        counts,
        padding: PADDING_SYMBOL,
    }
}

/// Rejection thinning of `x_1..x_n` with acceptance `p_i(x_i)`; uniforms come from stream 0 of `src`.
pub fn extract_subsequence(
    xs: &[Symbol],
    lambda: &WeightSeq,
    reference: &WeightFn,
    src: &RandomSource,
) -> Result<(RejectionTrace, Vec<Symbol>)> {
    check_reference(lambda, reference)?;
    check_symbols(xs, lambda.alphabet_size())?;
    let probs = xs.iter().enumerate().map(|(j, &x)| acceptance_prob(lambda, j + 1, x, reference)).collect();
    let trace = thin_with_probabilities(probs, &mut src.stream(0));
    let sub = trace.subsequence(xs);
    Ok((trace, sub))
}

/// Streaming `tilde P_n`: symbol `x_i` carries weight `p_i(x_i)`.
#[derive(Debug, Clone)]
pub struct TildeAccumulator {
    lambda: WeightSeq,
    reference: WeightFn,
    per_symbol: Vec<LogAccumulator>,
    seen: usize,
}

impl TildeAccumulator {
    pub fn new(lambda: &WeightSeq, reference: &WeightFn) -> Result<Self> {
        check_reference(lambda, reference)?;
        Ok(TildeAccumulator {
            lambda: lambda.clone(),
            reference: reference.clone(),
            per_symbol: vec![LogAccumulator::new(); lambda.alphabet_size()],
            seen: 0,
        })
    }

    pub fn push(&mut self, x: Symbol) -> Result<()> {
        check_symbols(&[x], self.per_symbol.len())?;
        self.seen += 1;
        let (f, min) = ln_ratios(&self.lambda, self.seen, &self.reference);
        self.per_symbol[x].push(min - f[x]);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.seen
    }

    pub fn is_empty(&self) -> bool {
        self.seen == 0
    }

    pub fn current(&self) -> Result<Dist> {
        let ln: Vec<f64> = self.per_symbol.iter().map(LogAccumulator::ln).collect();
        let total = crate::logspace::log_sum_exp(&ln);
        if total == f64::NEG_INFINITY {
            return Err(Error::EmptyDenominator);
        }
        Dist::normalized(ln.iter().map(|v| (v - total).exp()).collect())
    }
}

/// `tilde P_n`, the `p_i(x_i)`-weighted empirical distribution.
pub fn tilde_empirical(xs: &[Symbol], lambda: &WeightSeq, reference: &WeightFn) -> Result<Dist> {
    let mut acc = TildeAccumulator::new(lambda, reference)?;
    for &x in xs {
        acc.push(x)?;
    }
    acc.current()
}

/// Unweighted empirical distribution of the accepted symbols.
pub fn bar_empirical(trace: &RejectionTrace, xs: &[Symbol], alphabet_size: usize) -> Result<Dist> {
    if trace.accepted.is_empty() {
        return Err(Error::NoAcceptances);
    }
    Dist::empirical(alphabet_size, &trace.subsequence(xs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeEstimate {
    pub x: Symbol,
    pub x_prime: Symbol,
    /// `None` when no observation fell in `{x, x'}`.
    pub ratio: Option<f64>,
    pub ln_numerator: f64,
    pub ln_denominator: f64,
    /// Kish effective sample size of the denominator weights.
    pub ess: f64,
}

/// Streaming estimate of `tilde P(x) / (tilde P(x) + tilde P(x'))`.
///
/// Observation `i` with `x_i in {x, x'}` gets weight
/// `min(f_i(x), f_i(x')) / f_i(x_i)`; the numerator keeps those with `x_i = x`.
#[derive(Debug, Clone)]
pub struct EdgeAccumulator {
    x: Symbol,
    x_prime: Symbol,
    num: LogAccumulator,
    den: LogAccumulator,
    den_sq: LogAccumulator,
}

impl EdgeAccumulator {
    pub fn new(x: Symbol, x_prime: Symbol) -> Result<Self> {
        if x == x_prime {
            return Err(Error::SameSymbol(x));
        }
        Ok(EdgeAccumulator {
            x,
            x_prime,
            num: LogAccumulator::new(),
            den: LogAccumulator::new(),
            den_sq: LogAccumulator::new(),
        })
    }

    /// Adds observation `x_i` at 1-based index `i`.
    pub fn push(&mut self, lambda: &WeightSeq, reference: &WeightFn, i: usize, xi: Symbol) {
        if xi != self.x && xi != self.x_prime {
            return;
        }
        let f = |s: Symbol| lambda.ln_weight(i, s) - reference.ln(s);
        let w = f(self.x).min(f(self.x_prime)) - f(xi);
        self.den.push(w);
        self.den_sq.push(2.0 * w);
        if xi == self.x {
            self.num.push(w);
        }
    }

    pub fn estimate(&self) -> EdgeEstimate {
        let (ln_num, ln_den) = (self.num.ln(), self.den.ln());
        let defined = !self.den.is_empty();
        EdgeEstimate {
            x: self.x,
            x_prime: self.x_prime,
            ratio: defined.then(|| (ln_num - ln_den).exp()),
            ln_numerator: ln_num,
            ln_denominator: ln_den,
            ess: if defined { (2.0 * ln_den - self.den_sq.ln()).exp() } else { 0.0 },
        }
    }
}

pub fn pairwise_ratio(
    xs: &[Symbol],
    lambda: &WeightSeq,
    reference: &WeightFn,
    x: Symbol,
    x_prime: Symbol,
) -> Result<EdgeEstimate> {
    check_reference(lambda, reference)?;
    check_symbols(xs, lambda.alphabet_size())?;
    check_symbols(&[x, x_prime], lambda.alphabet_size())?;
    let mut acc = EdgeAccumulator::new(x, x_prime)?;
    for (j, &xi) in xs.iter().enumerate() {
        acc.push(lambda, reference, j + 1, xi);
    }
    Ok(acc.estimate())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEdge {
    pub parent: Symbol,
    pub child: Symbol,
    /// `tilde P(parent) / (tilde P(parent) + tilde P(child))`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructedComponent {
    pub support: Vec<Symbol>,
    pub root: Symbol,
    pub tree: Vec<TreeEdge>,
    /// `ln tilde P'(x)` on the support, `-inf` elsewhere; zero at the root.
    pub ln_unnormalized: Vec<f64>,
    pub tilde: Dist,
    pub tilde_star: Dist,
}

impl ReconstructedComponent {
    /// `reweight(tilde P_*, lambda_i)`, the predicted law of coordinate `i`.
    pub fn predicted_marginal(&self, lambda: &WeightSeq, i: usize) -> Result<Dist> {
        reweight(&Measure::from(&self.tilde_star), &lambda.weight_at(i))
    }
}

/// Rebuilds `tilde P` on `support` from ratios along a spanning tree of it.
///
/// Edges may be given in either orientation; the tree is rooted at the smallest
/// support symbol and `tilde P'(x)` is the product of `(1 - r) / r` along the
/// root-to-`x` path.
pub fn tree_reconstruct(support: &[Symbol], edges: &[EdgeEstimate], reference: &WeightFn) -> Result<ReconstructedComponent> {
    let k = reference.len();
    let mut s = support.to_vec();
    s.sort_unstable();
    s.dedup();
    if s.is_empty() {
        return Err(Error::EmptySubset);
    }
    check_symbols(&s, k)?;
    if edges.len() != s.len() - 1 {
        return Err(Error::NotATree(format!("{} edges for {} vertices", edges.len(), s.len())));
    }
    let mut adjacency: Vec<Vec<(Symbol, f64)>> = vec![Vec::new(); k];
    for e in edges {
        if !s.contains(&e.x) || !s.contains(&e.x_prime) || e.x == e.x_prime {
            return Err(Error::NotATree(format!("edge ({}, {}) leaves the support", e.x, e.x_prime)));
        }
        let r = e.ratio.ok_or(Error::UndefinedEdge {
            from: e.x,
            to: e.x_prime,
        })?;
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::DegenerateRatio {
                from: e.x,
                to: e.x_prime,
                ratio: r,
            });
        }
        adjacency[e.x].push((e.x_prime, r));
        adjacency[e.x_prime].push((e.x, 1.0 - r));
    }
    let root = s[0];
    let mut ln_unnormalized = vec![f64::NEG_INFINITY; k];
    ln_unnormalized[root] = 0.0;
    let mut tree = Vec::with_capacity(edges.len());
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        let mut next = adjacency[u].clone();
        next.sort_by_key(|&(v, _)| v);
        for (v, r) in next {
            if ln_unnormalized[v] == f64::NEG_INFINITY {
                ln_unnormalized[v] = ln_unnormalized[u] + (1.0 - r).ln() - r.ln();
                tree.push(TreeEdge { parent: u, child: v, ratio: r });
                queue.push_back(v);
            }
        }
    }
    if tree.len() != s.len() - 1 {
        return Err(Error::NotATree("edges do not connect the support".into()));
    }
    let total = crate::logspace::log_sum_exp(&ln_unnormalized);
    let tilde = Dist::normalized(ln_unnormalized.iter().map(|v| (v - total).exp()).collect())?;
    let ln_star: Vec<f64> = (0..k)
        .map(|x| if ln_unnormalized[x] == f64::NEG_INFINITY { f64::NEG_INFINITY } else { ln_unnormalized[x] - reference.ln(x) })
        .collect();
    let total_star = crate::logspace::log_sum_exp(&ln_star);
    let tilde_star = Dist::normalized(ln_star.iter().map(|v| (v - total_star).exp()).collect())?;
    Ok(ReconstructedComponent {
        support: s,
        root,
        tree,
        ln_unnormalized,
        tilde,
        tilde_star,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recovery {
    pub component: ReconstructedComponent,
    /// Estimates for the tree edges, in tree order.
    pub edges: Vec<EdgeEstimate>,
    /// True when some pair had no closed-form verdict and the complete graph was used.
    pub complete_graph_fallback: bool,
}

/// BFS spanning tree over `allowed` pairs from the smallest vertex, neighbors in increasing order.
fn bfs_tree(support: &[Symbol], allowed: impl Fn(Symbol, Symbol) -> bool) -> Result<Vec<(Symbol, Symbol)>> {
    let mut visited = vec![support[0]];
    let mut queue = VecDeque::from([support[0]]);
    let mut tree = Vec::new();
    while let Some(u) = queue.pop_front() {
        for &v in support {
            if !visited.contains(&v) && allowed(u.min(v), u.max(v)) {
                visited.push(v);
                tree.push((u, v));
                queue.push_back(v);
            }
        }
    }
    if visited.len() != support.len() {
        let mut missing: Vec<Symbol> = support.iter().copied().filter(|v| !visited.contains(v)).collect();
        missing.sort_unstable();
        return Err(Error::DisconnectedSupport(missing));
    }
    Ok(tree)
}

/// Estimates the latent component from one observed stream.
pub fn recover_component(xs: &[Symbol], lambda: &WeightSeq, reference: &WeightFn) -> Result<Recovery> {
    check_reference(lambda, reference)?;
    let k = lambda.alphabet_size();
    check_symbols(xs, k)?;
    let mut seen = vec![false; k];
    for &x in xs {
        seen[x] = true;
    }
    let support: Vec<Symbol> = (0..k).filter(|&x| seen[x]).collect();
    if support.is_empty() {
        return Err(Error::EmptySubset);
    }
    let graph = build_graph_gs(lambda, &support, &TailOptions::none())?;
    let fallback = !graph.unknown_edges.is_empty();
    let pairs = if fallback {
        bfs_tree(&support, |_, _| true)?
    } else {
        bfs_tree(&support, |a, b| graph.has_edge(a, b))?
    };
    let mut accs = pairs.iter().map(|&(u, v)| EdgeAccumulator::new(u, v)).collect::<Result<Vec<_>>>()?;
    for (j, &xi) in xs.iter().enumerate() {
        for acc in &mut accs {
            acc.push(lambda, reference, j + 1, xi);
        }
    }
    let edges: Vec<EdgeEstimate> = accs.iter().map(EdgeAccumulator::estimate).collect();
    let component = tree_reconstruct(&support, &edges, reference)?;
    Ok(Recovery {
        component,
        edges,
        complete_graph_fallback: fallback,
    })
}
