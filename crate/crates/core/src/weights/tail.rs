//! Symbolic divergence verdicts for min/max ratio series.
//!
//! Every registered series has the form
//!
//! ```text
//! a_i = min_{x in A} f_i(x) / max_{x in B} f_i(x),   f_i(x) = lambda_i(x) / r(x),
//! ```
//!
//! with `A ⊆ B`, so `0 < a_i <= 1`. Verdicts come only from each family's
//! closed form. Partial sums are attached for inspection but never decide
//! anything.

use serde::{Deserialize, Serialize};

use super::{Family, TailRule, WeightFn, WeightSeq};
use crate::error::{Error, Result};
use crate::model::Symbol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    DivergesProven,
    ConvergesProven,
    Unknown,
}

/// Closed-form fact behind a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum TailEvidence {
    /// `a_i = value > 0` for all `i >= from_index`.
    EventuallyConstant { from_index: u64, value: f64 },
    /// `a_i` is periodic with the given period and strictly positive.
    PeriodicPositive { period: usize, min_term: f64 },
    /// `a_i >= lower_bound > 0` on the progression `first_index + modulus * k`.
    PositiveOnProgression {
        modulus: usize,
        first_index: usize,
        lower_bound: f64,
    },
    /// `a_i <= constant * ratio^i` for all `i >= 1`, with `ratio < 1`.
    Geometric { ratio: f64, constant: f64 },
    NoClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartialSum {
    pub n: u64,
    pub sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailClass {
    pub verdict: Verdict,
    pub evidence: TailEvidence,
    pub partial_sums: Vec<PartialSum>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailOptions {
    /// Indices `N` at which `sum_{i<=N} a_i` is reported.
    pub horizons: Vec<u64>,
}

impl Default for TailOptions {
    fn default() -> Self {
        TailOptions {
            horizons: vec![100, 10_000, 1_000_000],
        }
    }
}

impl TailOptions {
    pub fn none() -> Self {
        TailOptions { horizons: vec![] }
    }
}

/// The per-index scalar series that the condition checks sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum SeriesRule {
    /// `min_x (lambda_i/ref)(x) / max_x (lambda_i/ref)(x)`.
    Sufficient { reference: WeightFn },
    /// `min(lambda_i(0), lambda_i(1)) / max(lambda_i(0), lambda_i(1))`; binary alphabets only.
    Binary,
    /// `min(lambda_i(x0), lambda_i(x1)) / max_{x in S} lambda_i(x)`.
    GraphEdge { x0: Symbol, x1: Symbol, subset: Vec<Symbol> },
}

impl SeriesRule {
    /// Looks up a rule by its registered name.
    pub fn by_name(name: &str, reference: Option<WeightFn>, edge: Option<(Symbol, Symbol, Vec<Symbol>)>) -> Result<Self> {
        match name {
            "sufficient" => Ok(SeriesRule::Sufficient {
                reference: reference.ok_or_else(|| Error::Config("sufficient rule needs a reference".into()))?,
            }),
            "binary" => Ok(SeriesRule::Binary),
            "graph_edge" | "graph-edge" => {
                let (x0, x1, subset) = edge.ok_or_else(|| Error::Config("graph edge rule needs a vertex pair and subset".into()))?;
                Ok(SeriesRule::GraphEdge { x0, x1, subset })
            }
            other => Err(Error::UnknownRule(other.to_string())),
        }
    }
}

/// `(A, B, ln r)` with `A ⊆ B`.
struct RatioSeries {
    numer: Vec<Symbol>,
    denom: Vec<Symbol>,
    ln_ref: Vec<f64>,
}

impl RatioSeries {
    fn new(rule: &SeriesRule, size: usize) -> Result<Self> {
        let all: Vec<Symbol> = (0..size).collect();
        let check = |x: Symbol| {
            if x >= size {
                Err(Error::InvalidSymbol { symbol: x, size })
            } else {
                Ok(())
            }
        };
        match rule {
            SeriesRule::Sufficient { reference } => {
                if reference.len() != size {
                    return Err(Error::AlphabetMismatch {
                        expected: size,
                        actual: reference.len(),
                    });
                }
                Ok(RatioSeries {
                    numer: all.clone(),
                    denom: all,
                    ln_ref: reference.ln_values().to_vec(),
                })
            }
            SeriesRule::Binary => {
                if size != 2 {
                    return Err(Error::WrongAlphabet { size });
                }
                Ok(RatioSeries {
                    numer: all.clone(),
                    denom: all,
                    ln_ref: vec![0.0; 2],
                })
            }
            SeriesRule::GraphEdge { x0, x1, subset } => {
                if subset.is_empty() {
                    return Err(Error::EmptySubset);
                }
                for &x in subset.iter().chain([x0, x1]) {
                    check(x)?;
                }
                for x in [*x0, *x1] {
                    if !subset.contains(&x) {
                        return Err(Error::BadIndex {
                            index: x,
                            min: 0,
                            max: size - 1,
                        });
                    }
                }
                let mut numer = vec![*x0, *x1];
                numer.dedup();
                Ok(RatioSeries {
                    numer,
                    denom: subset.clone(),
                    ln_ref: vec![0.0; size],
                })
            }
        }
    }

    #[inline]
    fn ln_f(&self, seq: &WeightSeq, i: usize, x: Symbol) -> f64 {
        seq.ln_weight(i, x) - self.ln_ref[x]
    }

    fn ln_term(&self, seq: &WeightSeq, i: usize) -> f64 {
        let lo = self.numer.iter().map(|&x| self.ln_f(seq, i, x)).fold(f64::INFINITY, f64::min);
        let hi = self.denom.iter().map(|&x| self.ln_f(seq, i, x)).fold(f64::NEG_INFINITY, f64::max);
        lo - hi
    }

    fn term(&self, seq: &WeightSeq, i: usize) -> f64 {
        self.ln_term(seq, i).exp()
    }
}

/// Summand of the sufficient condition at index `i` for a reference `lambda_*`.
pub fn ratio_term(seq: &WeightSeq, i: usize, reference: &WeightFn) -> Result<f64> {
    let series = RatioSeries::new(
        &SeriesRule::Sufficient {
            reference: reference.clone(),
        },
        seq.alphabet_size(),
    )?;
    Ok(series.term(seq, i))
}

/// Classifies `sum_i a_i` for the given rule as divergent, convergent or unknown.
pub fn tail_classify(seq: &WeightSeq, rule: &SeriesRule, opts: &TailOptions) -> Result<TailClass> {
    let series = RatioSeries::new(rule, seq.alphabet_size())?;
    let (verdict, evidence) = symbolic(seq, &series);
    Ok(TailClass {
        verdict,
        evidence,
        partial_sums: partial_sums(seq, &series, &opts.horizons),
    })
}

fn partial_sums(seq: &WeightSeq, series: &RatioSeries, horizons: &[u64]) -> Vec<PartialSum> {
    let mut sorted: Vec<u64> = horizons.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let Some(&last) = sorted.last() else {
        return vec![];
    };
    let mut out = Vec::with_capacity(sorted.len());
    let mut next = sorted.iter().peekable();
    let mut sum = 0.0;
    for i in 1..=last {
        sum += series.term(seq, i as usize);
        if next.peek().is_some_and(|&&h| h == i) {
            out.push(PartialSum { n: i, sum });
            next.next();
        }
    }
    out
}

fn symbolic(seq: &WeightSeq, s: &RatioSeries) -> (Verdict, TailEvidence) {
    match seq.family() {
        Family::Constant(_) => (
            Verdict::DivergesProven,
            TailEvidence::EventuallyConstant {
                from_index: 1,
                value: s.term(seq, 1),
            },
        ),
        Family::BoundedRatio { period } => periodic(seq, s, period.len()),
        Family::Custom { table, tail } => match tail {
            TailRule::Unspecified => (Verdict::Unknown, TailEvidence::NoClosedForm),
            TailRule::HoldLast => (
                Verdict::DivergesProven,
                TailEvidence::EventuallyConstant {
                    from_index: table.len() as u64,
                    value: s.term(seq, table.len()),
                },
            ),
            TailRule::Cycle => periodic(seq, s, table.len()),
        },
        Family::BinaryExample => geometric(s, &[0.0, 0.0], &[0.0, -std::f64::consts::LN_2]),
        Family::GeometricTilt { ln_base, ln_rates } => geometric(s, ln_base, ln_rates),
        Family::CyclicPartition { block_of, log_rate } => cyclic(s, block_of, *log_rate),
    }
}

fn periodic(seq: &WeightSeq, s: &RatioSeries, period: usize) -> (Verdict, TailEvidence) {
    let min_term = (1..=period).map(|i| s.term(seq, i)).fold(f64::INFINITY, f64::min);
    (Verdict::DivergesProven, TailEvidence::PeriodicPositive { period, min_term })
}

/// `ln f_i(x) = c(x) + i * rho(x)` with `c = ln_base - ln_ref`.
fn geometric(s: &RatioSeries, ln_base: &[f64], ln_rates: &[f64]) -> (Verdict, TailEvidence) {
    let c = |x: Symbol| ln_base[x] - s.ln_ref[x];
    // Eventual minimizer over A: smallest rate, then smallest offset.
    let a_star = *s
        .numer
        .iter()
        .min_by(|&&x, &&y| ln_rates[x].total_cmp(&ln_rates[y]).then(c(x).total_cmp(&c(y))))
        .expect("nonempty numerator set");
    // Eventual maximizer over B: largest rate, then largest offset.
    let b_star = *s
        .denom
        .iter()
        .max_by(|&&x, &&y| ln_rates[x].total_cmp(&ln_rates[y]).then(c(x).total_cmp(&c(y))))
        .expect("nonempty denominator set");
    let (rho_a, rho_b) = (ln_rates[a_star], ln_rates[b_star]);
    if rho_a < rho_b {
        return (
            Verdict::ConvergesProven,
            TailEvidence::Geometric {
                ratio: (rho_a - rho_b).exp(),
                constant: (c(a_star) - c(b_star)).exp(),
            },
        );
    }
    // Equal extreme rates: the extremizers settle once faster/slower symbols are dominated.
    let mut from = 1.0f64;
    for &x in &s.numer {
        if ln_rates[x] > rho_a {
            from = from.max((c(a_star) - c(x)) / (ln_rates[x] - rho_a));
        }
    }
    for &x in &s.denom {
        if ln_rates[x] < rho_b {
            from = from.max((c(x) - c(b_star)) / (rho_b - ln_rates[x]));
        }
    }
    (
        Verdict::DivergesProven,
        TailEvidence::EventuallyConstant {
            from_index: from.ceil().max(1.0) as u64,
            value: (c(a_star) - c(b_star)).exp(),
        },
    )
}

fn cyclic(s: &RatioSeries, block_of: &[usize], log_rate: f64) -> (Verdict, TailEvidence) {
    let neg_ref = |x: Symbol| -s.ln_ref[x];
    let min_over = |set: &mut dyn Iterator<Item = Symbol>| set.map(neg_ref).fold(f64::INFINITY, f64::min);
    let max_over = |set: &mut dyn Iterator<Item = Symbol>| set.map(neg_ref).fold(f64::NEG_INFINITY, f64::max);
    let mut envelope = f64::NEG_INFINITY;
    for class in 0..3 {
        let penalized = |x: &Symbol| block_of[*x] == class;
        let numer_hit = s.numer.iter().any(penalized);
        let denom_inside = s.denom.iter().all(penalized);
        if !numer_hit || denom_inside {
            // On indices of this class no numerator symbol is penalized (or every
            // denominator symbol is), so the term is bounded below by a constant.
            let lower = min_over(&mut s.numer.iter().copied()) - max_over(&mut s.denom.iter().copied());
            return (
                Verdict::DivergesProven,
                TailEvidence::PositiveOnProgression {
                    modulus: 3,
                    first_index: class + 1,
                    lower_bound: lower.exp(),
                },
            );
        }
        let lo = min_over(&mut s.numer.iter().copied().filter(|x| penalized(x)));
        let hi = max_over(&mut s.denom.iter().copied().filter(|x| !penalized(x)));
        envelope = envelope.max(lo - hi);
    }
    (
        Verdict::ConvergesProven,
        TailEvidence::Geometric {
            ratio: (-log_rate).exp(),
            constant: envelope.exp(),
        },
    )
}
