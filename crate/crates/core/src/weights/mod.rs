//! Weight sequences `lambda_1, lambda_2, ..` over a finite alphabet.
//!
//! Every family is a deterministic function of the 1-based index `i` and
//! carries enough closed-form structure for [`tail_classify`] to decide the
//! divergence of the min/max ratio series built from it.

mod tail;

pub use tail::{ratio_term, tail_classify, PartialSum, SeriesRule, TailClass, TailEvidence, TailOptions, Verdict};

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Symbol;

/// A strictly positive function on the alphabet, stored as logarithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightFn {
    ln: Vec<f64>,
}

impl WeightFn {
    pub fn from_linear(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::AlphabetMismatch { expected: 1, actual: 0 });
        }
        let ln = values
            .iter()
            .enumerate()
            .map(|(x, &v)| {
                if v > 0.0 && v.is_finite() {
                    Ok(v.ln())
                } else {
                    Err(Error::NonPositiveWeight { symbol: x, value: v })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(WeightFn { ln })
    }

    pub fn from_ln(ln: Vec<f64>) -> Result<Self> {
        if ln.is_empty() {
            return Err(Error::AlphabetMismatch { expected: 1, actual: 0 });
        }
        if let Some((x, &v)) = ln.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonPositiveWeight {
                symbol: x,
                value: v.exp(),
            });
        }
        Ok(WeightFn { ln })
    }

    pub fn constant(size: usize, value: f64) -> Result<Self> {
        WeightFn::from_linear(&vec![value; size])
    }

    pub fn ones(size: usize) -> Self {
        WeightFn { ln: vec![0.0; size] }
    }

    pub fn len(&self) -> usize {
        self.ln.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ln.is_empty()
    }

    pub fn ln(&self, x: Symbol) -> f64 {
        self.ln[x]
    }

    pub fn value(&self, x: Symbol) -> f64 {
        self.ln[x].exp()
    }

    pub fn ln_values(&self) -> &[f64] {
        &self.ln
    }

    pub fn values(&self) -> Vec<f64> {
        self.ln.iter().map(|l| l.exp()).collect()
    }

    /// `c * self` for `c = exp(ln_c)`.
    pub fn scaled(&self, ln_c: f64) -> WeightFn {
        WeightFn {
            ln: self.ln.iter().map(|l| l + ln_c).collect(),
        }
    }

    /// Pointwise quotient `self / other`.
    pub fn divide(&self, other: &WeightFn) -> Result<WeightFn> {
        if self.len() != other.len() {
            return Err(Error::AlphabetMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(WeightFn {
            ln: self.ln.iter().zip(&other.ln).map(|(a, b)| a - b).collect(),
        })
    }
}

impl TryFrom<Vec<f64>> for WeightFn {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        WeightFn::from_linear(&v)
    }
}

impl From<WeightFn> for Vec<f64> {
    fn from(w: WeightFn) -> Self {
        w.values()
    }
}

/// What happens past the end of a custom table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailRule {
    /// No claim about the tail: terms repeat the last row, but classification is `Unknown`.
    #[default]
    Unspecified,
    /// The last row repeats forever.
    HoldLast,
    /// The whole table repeats periodically.
    Cycle,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Family {
    Constant(WeightFn),
    BinaryExample,
    /// `block_of[x]` is the position (0, 1 or 2) of the block holding `x`; the
    /// block at position `p` is penalized by `exp(-i * log_rate)` when `(i - 1) % 3 == p`.
    CyclicPartition { block_of: Vec<usize>, log_rate: f64 },
    /// `ln lambda_i(x) = ln_base[x] + i * ln_rates[x]`.
    GeometricTilt { ln_base: Vec<f64>, ln_rates: Vec<f64> },
    BoundedRatio { period: Vec<WeightFn> },
    Custom { table: Vec<WeightFn>, tail: TailRule },
}

/// A sequence of weight functions indexed from 1.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSeq {
    size: usize,
    family: Family,
}

impl WeightSeq {
    pub fn constant(w: WeightFn) -> Self {
        WeightSeq {
            size: w.len(),
            family: Family::Constant(w),
        }
    }

    /// `lambda_i(0) = 1`, `lambda_i(1) = 2^-i` on a binary alphabet.
    pub fn binary_example() -> Self {
        WeightSeq {
            size: 2,
            family: Family::BinaryExample,
        }
    }

    /// Three-block partition; `blocks[p]` is penalized at indices `i` with `(i - 1) % 3 == p`.
    pub fn cyclic_partition(size: usize, blocks: &[Vec<Symbol>; 3], log_rate: f64) -> Result<Self> {
        if !(log_rate > 0.0 && log_rate.is_finite()) {
            return Err(Error::InvalidFamily(format!("cyclic partition log_rate must be positive, got {log_rate}")));
        }
        let mut block_of = vec![usize::MAX; size];
        for (p, block) in blocks.iter().enumerate() {
            for &x in block {
                if x >= size {
                    return Err(Error::InvalidSymbol { symbol: x, size });
                }
                if block_of[x] != usize::MAX {
                    return Err(Error::InvalidFamily(format!("symbol {x} appears in two blocks")));
                }
                block_of[x] = p;
            }
        }
        if let Some(x) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(Error::InvalidFamily(format!("symbol {x} is not assigned to a block")));
        }
        Ok(WeightSeq {
            size,
            family: Family::CyclicPartition { block_of, log_rate },
        })
    }

    /// Default partition `x -> block x % 3`.
    pub fn cyclic_default(size: usize, log_rate: f64) -> Result<Self> {
        let mut blocks: [Vec<Symbol>; 3] = Default::default();
        for x in 0..size {
            blocks[x % 3].push(x);
        }
        WeightSeq::cyclic_partition(size, &blocks, log_rate)
    }

    /// `lambda_i(x) = base[x] * rates[x]^i`.
    pub fn geometric_tilt(base: &WeightFn, rates: &WeightFn) -> Result<Self> {
        if base.len() != rates.len() {
            return Err(Error::AlphabetMismatch {
                expected: base.len(),
                actual: rates.len(),
            });
        }
        Ok(WeightSeq {
            size: base.len(),
            family: Family::GeometricTilt {
                ln_base: base.ln_values().to_vec(),
                ln_rates: rates.ln_values().to_vec(),
            },
        })
    }

    /// `lambda_i = period[(i - 1) % p]`.
    pub fn bounded_ratio(period: Vec<WeightFn>) -> Result<Self> {
        let size = check_table(&period)?;
        Ok(WeightSeq {
            size,
            family: Family::BoundedRatio { period },
        })
    }

    pub fn custom(table: Vec<WeightFn>, tail: TailRule) -> Result<Self> {
        let size = check_table(&table)?;
        Ok(WeightSeq {
            size,
            family: Family::Custom { table, tail },
        })
    }

    pub fn alphabet_size(&self) -> usize {
        self.size
    }

    pub(crate) fn family(&self) -> &Family {
        &self.family
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::Constant(_) => "constant",
            Family::BinaryExample => "binary_example",
            Family::CyclicPartition { .. } => "cyclic_partition",
            Family::GeometricTilt { .. } => "geometric_tilt",
            Family::BoundedRatio { .. } => "bounded_ratio",
            Family::Custom { .. } => "custom",
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.family, Family::Constant(_))
    }

    /// `ln lambda_i(x)` for 1-based `i`.
    #[inline]
    pub fn ln_weight(&self, i: usize, x: Symbol) -> f64 {
        assert!(i >= 1, "weight indices are 1-based");
        match &self.family {
            Family::Constant(w) => w.ln(x),
            Family::BinaryExample => {
                if x == 0 {
                    0.0
                } else {
                    -(i as f64) * LN_2
                }
            }
            Family::CyclicPartition { block_of, log_rate } => {
                if block_of[x] == (i - 1) % 3 {
                    -(i as f64) * log_rate
                } else {
                    0.0
                }
            }
            Family::GeometricTilt { ln_base, ln_rates } => ln_base[x] + i as f64 * ln_rates[x],
            Family::BoundedRatio { period } => period[(i - 1) % period.len()].ln(x),
            Family::Custom { table, tail } => {
                let t = table.len();
                let row = if i <= t {
                    i - 1
                } else {
                    match tail {
                        TailRule::Cycle => (i - 1) % t,
                        TailRule::HoldLast | TailRule::Unspecified => t - 1,
                    }
                };
                table[row].ln(x)
            }
        }
    }

    pub fn weight_at(&self, i: usize) -> WeightFn {
        WeightFn {
            ln: (0..self.size).map(|x| self.ln_weight(i, x)).collect(),
        }
    }

    /// `lambda_1, .., lambda_n`.
    pub fn prefix(&self, n: usize) -> Vec<WeightFn> {
        (1..=n).map(|i| self.weight_at(i)).collect()
    }
}

fn check_table(table: &[WeightFn]) -> Result<usize> {
    let first = table
        .first()
        .ok_or_else(|| Error::InvalidFamily("weight table must have at least one row".into()))?;
    for w in table {
        if w.len() != first.len() {
            return Err(Error::AlphabetMismatch {
                expected: first.len(),
                actual: w.len(),
            });
        }
    }
    Ok(first.len())
}

fn default_log_rate() -> f64 {
    1.0
}

/// Configuration schema for the built-in families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    Constant {
        weights: Vec<f64>,
    },
    BinaryExample,
    CyclicPartition {
        alphabet_size: usize,
        /// Three blocks; defaults to `x -> x % 3`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        blocks: Option<[Vec<Symbol>; 3]>,
        #[serde(default = "default_log_rate")]
        log_rate: f64,
    },
    GeometricTilt {
        base: Vec<f64>,
        rates: Vec<f64>,
    },
    BoundedRatio {
        table: Vec<Vec<f64>>,
    },
    Custom {
        table: Vec<Vec<f64>>,
        #[serde(default)]
        tail: TailRule,
    },
}

impl WeightSpec {
    pub fn build(&self) -> Result<WeightSeq> {
        match self {
            WeightSpec::Constant { weights } => Ok(WeightSeq::constant(WeightFn::from_linear(weights)?)),
            WeightSpec::BinaryExample => Ok(WeightSeq::binary_example()),
            WeightSpec::CyclicPartition {
                alphabet_size,
                blocks,
                log_rate,
            } => match blocks {
                Some(b) => WeightSeq::cyclic_partition(*alphabet_size, b, *log_rate),
                None => WeightSeq::cyclic_default(*alphabet_size, *log_rate),
            },
            WeightSpec::GeometricTilt { base, rates } => {
                WeightSeq::geometric_tilt(&WeightFn::from_linear(base)?, &WeightFn::from_linear(rates)?)
            }
            WeightSpec::BoundedRatio { table } => WeightSeq::bounded_ratio(rows(table)?),
            WeightSpec::Custom { table, tail } => WeightSeq::custom(rows(table)?, *tail),
        }
    }
}

fn rows(table: &[Vec<f64>]) -> Result<Vec<WeightFn>> {
    table.iter().map(|r| WeightFn::from_linear(r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-14 * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn binary_example_third_term() {
        let w = WeightSeq::binary_example().weight_at(3);
        assert!(close(w.value(0), 1.0));
        assert!(close(w.value(1), 0.125));
    }

    #[test]
    fn constant_family_ignores_index() {
        let s = WeightSeq::constant(WeightFn::from_linear(&[2.0, 5.0]).unwrap());
        for i in [1, 2, 17, 1_000_000] {
            let w = s.weight_at(i);
            assert!(close(w.value(0), 2.0) && close(w.value(1), 5.0));
        }
    }

    #[test]
    fn cyclic_partition_fourth_term() {
        let s = WeightSeq::cyclic_default(3, 1.0).unwrap();
        let w = s.weight_at(4);
        assert!(close(w.value(0), (-4f64).exp()));
        assert_eq!(w.value(1), 1.0);
        assert_eq!(w.value(2), 1.0);
        let w1 = s.weight_at(2);
        assert!(close(w1.value(1), (-2f64).exp()));
        let w3 = s.weight_at(3);
        assert!(close(w3.value(2), (-3f64).exp()));
    }

    #[test]
    fn cyclic_partition_validation() {
        assert!(WeightSeq::cyclic_partition(3, &[vec![0], vec![0], vec![2]], 1.0).is_err());
        assert!(WeightSeq::cyclic_partition(3, &[vec![0], vec![1], vec![]], 1.0).is_err());
        assert!(WeightSeq::cyclic_partition(3, &[vec![0], vec![1], vec![3]], 1.0).is_err());
        assert!(WeightSeq::cyclic_default(3, 0.0).is_err());
    }

    #[test]
    fn custom_tail_rules() {
        let t = vec![
            WeightFn::from_linear(&[1.0, 2.0]).unwrap(),
            WeightFn::from_linear(&[3.0, 4.0]).unwrap(),
        ];
        let hold = WeightSeq::custom(t.clone(), TailRule::HoldLast).unwrap();
        let cycle = WeightSeq::custom(t, TailRule::Cycle).unwrap();
        assert!(close(hold.weight_at(5).value(0), 3.0));
        assert!(close(cycle.weight_at(5).value(0), 1.0));
        assert!(close(cycle.weight_at(6).value(1), 4.0));
    }

    #[test]
    fn spec_round_trip_through_json() {
        let json = r#"{"family":"cyclic_partition","alphabet_size":3,"blocks":[[0],[1],[2]]}"#;
        let spec: WeightSpec = serde_json::from_str(json).unwrap();
        let s = spec.build().unwrap();
        assert_eq!(s, WeightSeq::cyclic_default(3, 1.0).unwrap());
        let bad = r#"{"family":"constant","weights":[1.0, 0.0]}"#;
        let spec: WeightSpec = serde_json::from_str(bad).unwrap();
        assert!(matches!(spec.build(), Err(Error::NonPositiveWeight { .. })));
        assert!(serde_json::from_str::<WeightSpec>(r#"{"family":"nope"}"#).is_err());
    }

    #[test]
    fn weight_fn_rejects_nonpositive() {
        assert!(WeightFn::from_linear(&[1.0, -2.0]).is_err());
        assert!(WeightFn::from_linear(&[f64::INFINITY]).is_err());
        assert!(WeightFn::from_ln(vec![f64::NEG_INFINITY]).is_err());
    }
}
