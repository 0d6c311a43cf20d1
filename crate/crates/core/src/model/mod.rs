//! Finite-alphabet probability primitives.

mod event;
mod joint;
mod random;

pub use event::EventSpec;
pub use joint::{JointDist, JOINT_TABLE_LIMIT};
pub use random::RandomSource;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logspace::{log_sum_exp, LogMass};
use crate::weights::WeightFn;

/// Index of a symbol in an [`Alphabet`].
pub type Symbol = usize;

/// Tolerance applied when validating that a probability vector sums to one.
pub const DIST_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    labels: Vec<String>,
}

impl Alphabet {
    /// Alphabet `{0, .., size-1}` with decimal labels.
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::Config("alphabet must have at least one symbol".into()));
        }
        Ok(Alphabet {
            labels: (0..size).map(|x| x.to_string()).collect(),
        })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Config("alphabet must have at least one symbol".into()));
        }
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != labels.len() {
            return Err(Error::Config("alphabet labels must be distinct".into()));
        }
        Ok(Alphabet { labels })
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, x: Symbol) -> &str {
        &self.labels[x]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<Symbol> {
        self.labels.iter().position(|l| l == label)
    }
}

/// A finite nonnegative measure over an alphabet, stored in log space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measure {
    masses: Vec<LogMass>,
}

impl Measure {
    pub fn from_linear(masses: &[f64]) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::ZeroMass);
        }
        let masses = masses
            .iter()
            .enumerate()
            .map(|(x, &m)| LogMass::from_linear(m).ok_or(Error::InvalidMass { symbol: x, value: m }))
            .collect::<Result<Vec<_>>>()?;
        Ok(Measure { masses })
    }

    /// `ln_masses[x] == -inf` encodes a zero mass.
    pub fn from_ln(ln_masses: &[f64]) -> Result<Self> {
        if ln_masses.is_empty() {
            return Err(Error::ZeroMass);
        }
        let masses = ln_masses
            .iter()
            .enumerate()
            .map(|(x, &l)| {
                if l.is_nan() || l == f64::INFINITY {
                    Err(Error::InvalidMass { symbol: x, value: l })
                } else {
                    Ok(LogMass::from_ln(l))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Measure { masses })
    }

    pub fn uniform(size: usize) -> Self {
        Measure {
            masses: vec![LogMass::from_ln(0.0); size],
        }
    }

    pub fn point_mass(size: usize, x: Symbol) -> Self {
        let mut masses = vec![LogMass::ZERO; size];
        masses[x] = LogMass::from_ln(0.0);
        Measure { masses }
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn mass(&self, x: Symbol) -> LogMass {
        self.masses[x]
    }

    pub fn ln_total(&self) -> f64 {
        let ln: Vec<f64> = self.masses.iter().map(LogMass::ln).collect();
        log_sum_exp(&ln)
    }

    /// Whether this measure can serve as a base measure (positive finite total mass).
    pub fn is_valid_base(&self) -> bool {
        self.masses.iter().any(|m| !m.is_zero())
    }

    pub fn scaled(&self, ln_factor: f64) -> Measure {
        Measure {
            masses: self
                .masses
                .iter()
                .map(|m| if m.is_zero() { *m } else { LogMass::from_ln(m.ln() + ln_factor) })
                .collect(),
        }
    }

    pub fn normalize(&self) -> Result<Dist> {
        let total = self.ln_total();
        if total == f64::NEG_INFINITY {
            return Err(Error::ZeroMass);
        }
        Ok(Dist {
            probs: self.masses.iter().map(|m| (m.ln() - total).exp()).collect(),
        })
    }

    pub fn support(&self) -> Vec<Symbol> {
        (0..self.len()).filter(|&x| !self.masses[x].is_zero()).collect()
    }
}

impl From<&Dist> for Measure {
    fn from(d: &Dist) -> Self {
        Measure {
            masses: d
                .probs
                .iter()
                .map(|&p| LogMass::from_linear(p).unwrap_or(LogMass::ZERO))
                .collect(),
        }
    }
}

/// A probability vector over an alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Dist {
    probs: Vec<f64>,
}

impl Dist {
    /// Rejects inputs that are not normalized within [`DIST_TOL`].
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        validate_probs(&probs)?;
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > DIST_TOL {
            return Err(Error::NotNormalized { sum, tol: DIST_TOL });
        }
        Ok(Dist { probs })
    }

    /// Explicit renormalizing constructor.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        validate_probs(&weights)?;
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 || !sum.is_finite() {
            return Err(Error::ZeroMass);
        }
        Ok(Dist {
            probs: weights.into_iter().map(|w| w / sum).collect(),
        })
    }

    pub fn point_mass(size: usize, x: Symbol) -> Self {
        let mut probs = vec![0.0; size];
        probs[x] = 1.0;
        Dist { probs }
    }

    pub fn uniform(size: usize) -> Self {
        Dist {
            probs: vec![1.0 / size as f64; size],
        }
    }

    /// Empirical frequencies of `symbols` over an alphabet of `size` symbols.
    pub fn empirical(size: usize, symbols: &[Symbol]) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::ZeroMass);
        }
        let mut counts = vec![0.0; size];
        for &s in symbols {
            if s >= size {
                return Err(Error::InvalidSymbol { symbol: s, size });
            }
            counts[s] += 1.0;
        }
        Dist::normalized(counts)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, x: Symbol) -> f64 {
        self.probs[x]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    /// Inverse-CDF draw from a uniform `u` in `[0, 1)`.
    pub fn sample_with(&self, u: f64) -> Symbol {
        let mut acc = 0.0;
        let mut last = 0;
        for (x, &p) in self.probs.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last = x;
                if u < acc {
                    return x;
                }
            }
        }
        last
    }
}

fn validate_probs(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::ZeroMass);
    }
    for (x, &p) in probs.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidMass { symbol: x, value: p });
        }
    }
    Ok(())
}

/// The distribution proportional to `w(x) P(x)`.
pub fn reweight(base: &Measure, w: &WeightFn) -> Result<Dist> {
    if base.len() != w.len() {
        return Err(Error::AlphabetMismatch {
            expected: base.len(),
            actual: w.len(),
        });
    }
    let ln: Vec<f64> = (0..base.len())
        .map(|x| {
            let m = base.mass(x);
            if m.is_zero() {
                f64::NEG_INFINITY
            } else {
                m.ln() + w.ln(x)
            }
        })
        .collect();
    let total = log_sum_exp(&ln);
    if total == f64::NEG_INFINITY {
        return Err(Error::ZeroMass);
    }
    Ok(Dist {
        probs: ln.iter().map(|l| (l - total).exp()).collect(),
    })
}

/// Half the L1 distance between two distributions.
pub fn total_variation(p: &Dist, r: &Dist) -> Result<f64> {
    if p.len() != r.len() {
        return Err(Error::AlphabetMismatch {
            expected: p.len(),
            actual: r.len(),
        });
    }
    let l1: f64 = p.probs.iter().zip(&r.probs).map(|(a, b)| (a - b).abs()).sum();
    Ok((0.5 * l1).min(1.0))
}
