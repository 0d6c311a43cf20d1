//! Log-domain arithmetic for masses that span hundreds of orders of magnitude.

use serde::{Deserialize, Serialize};

/// `ln(exp(a) + exp(b))`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a > b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

/// `ln(sum(exp(v)))`, returning `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// A nonnegative mass stored as its logarithm plus an explicit zero flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogMass {
    ln: f64,
    zero: bool,
}

impl LogMass {
    pub const ZERO: LogMass = LogMass {
        ln: f64::NEG_INFINITY,
        zero: true,
    };

    pub fn from_ln(ln: f64) -> Self {
        if ln == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogMass { ln, zero: false }
        }
    }

    /// Returns `None` for negative or non-finite input.
    pub fn from_linear(value: f64) -> Option<Self> {
        if !value.is_finite() || value < 0.0 {
            None
        } else if value == 0.0 {
            Some(Self::ZERO)
        } else {
            Some(LogMass {
                ln: value.ln(),
                zero: false,
            })
        }
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    /// Natural log of the mass; `-inf` when zero.
    pub fn ln(&self) -> f64 {
        if self.zero {
            f64::NEG_INFINITY
        } else {
            self.ln
        }
    }

    pub fn value(&self) -> f64 {
        if self.zero {
            0.0
        } else {
            self.ln.exp()
        }
    }
}

/// Streaming log-sum-exp with a running maximum.
#[derive(Debug, Clone, Copy)]
pub struct LogAccumulator {
    max: f64,
    scaled: f64,
}

impl Default for LogAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl LogAccumulator {
    pub fn new() -> Self {
        LogAccumulator {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    pub fn push(&mut self, ln_value: f64) {
        if ln_value == f64::NEG_INFINITY {
            return;
        }
        if ln_value <= self.max {
            self.scaled += (ln_value - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - ln_value).exp() + 1.0;
            self.max = ln_value;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.max == f64::NEG_INFINITY
    }

    pub fn ln(&self) -> f64 {
        if self.is_empty() {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

/// Neumaier-compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_exp_handles_large_arguments() {
        // ln(e^1234 + e^1232) = 1232 + ln(e^2 + 1)
        let expected = 1232.0 + (2f64.exp() + 1.0).ln();
        assert!((log_add_exp(1234.0, 1232.0) - expected).abs() < 1e-12);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 3.0), 3.0);
    }

    #[test]
    fn sum_exp_matches_linear() {
        let v = [0.1f64.ln(), 0.2f64.ln(), 0.7f64.ln()];
        assert!(log_sum_exp(&v).abs() < 1e-15);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(
            log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn accumulator_agrees_with_batch() {
        let v: Vec<f64> = (0..200).map(|i| -(i as f64) * 3.7 + (i % 7) as f64).collect();
        let mut acc = LogAccumulator::new();
        for &x in &v {
            acc.push(x);
        }
        assert!((acc.ln() - log_sum_exp(&v)).abs() < 1e-12);
        assert!(LogAccumulator::new().is_empty());
    }

    #[test]
    fn log_mass_zero_flag() {
        assert!(LogMass::from_linear(0.0).unwrap().is_zero());
        assert!(LogMass::from_linear(-1.0).is_none());
        assert!(LogMass::from_linear(f64::NAN).is_none());
        let m = LogMass::from_linear(0.25).unwrap();
        assert!(!m.is_zero());
        assert!((m.value() - 0.25).abs() < 1e-16);
        assert_eq!(LogMass::from_ln(f64::NEG_INFINITY), LogMass::ZERO);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1e16);
        s.add(1.0);
        s.add(-1e16);
        assert_eq!(s.value(), 1.0);
    }
}
