use serde::{Deserialize, Serialize};

use super::{Dist, Symbol};
use crate::error::{Error, Result};

/// Largest table an exact joint may hold (`K^n <= 2^24`).
pub const JOINT_TABLE_LIMIT: usize = 1 << 24;

const JOINT_TOL: f64 = 1e-10;

/// Exact joint distribution on `X^n`, dense over all `K^n` tuples.
///
/// Tuples are laid out lexicographically with `x_1` most significant, so the
/// index of `(x_1, .., x_n)` is `sum_i x_i K^(n-i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDist {
    alphabet_size: usize,
    n: usize,
    table: Vec<f64>,
}

/// Number of table entries for `K^n`, or `TooLarge` when over the cap.
pub(crate) fn table_len(k: usize, n: usize) -> Result<usize> {
    let mut len: usize = 1;
    for _ in 0..n {
        len = len.checked_mul(k).filter(|&l| l <= JOINT_TABLE_LIMIT).ok_or(Error::TooLarge {
            what: "joint table size",
            value: usize::MAX,
            limit: JOINT_TABLE_LIMIT,
        })?;
    }
    Ok(len)
}

impl JointDist {
    pub fn new(alphabet_size: usize, n: usize, table: Vec<f64>) -> Result<Self> {
        if alphabet_size == 0 || n == 0 {
            return Err(Error::BadIndex {
                index: n.min(alphabet_size),
                min: 1,
                max: usize::MAX,
            });
        }
        let len = table_len(alphabet_size, n)?;
        if table.len() != len {
            return Err(Error::AlphabetMismatch {
                expected: len,
                actual: table.len(),
            });
        }
        for (i, &p) in table.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidMass { symbol: i, value: p });
            }
        }
        let sum: f64 = table.iter().sum();
        if (sum - 1.0).abs() > JOINT_TOL {
            return Err(Error::NotNormalized { sum, tol: JOINT_TOL });
        }
        Ok(JointDist {
            alphabet_size,
            n,
            table,
        })
    }

    /// Builds a joint by evaluating `f` on every tuple; the result must be normalized.
    pub fn from_fn(alphabet_size: usize, n: usize, mut f: impl FnMut(&[Symbol]) -> f64) -> Result<Self> {
        let len = table_len(alphabet_size, n)?;
        let mut table = Vec::with_capacity(len);
        let mut tuple = vec![0; n];
        for idx in 0..len {
            decode_into(idx, alphabet_size, &mut tuple);
            table.push(f(&tuple));
        }
        JointDist::new(alphabet_size, n, table)
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn prob(&self, tuple: &[Symbol]) -> f64 {
        self.table[self.encode(tuple)]
    }

    pub fn encode(&self, tuple: &[Symbol]) -> usize {
        debug_assert_eq!(tuple.len(), self.n);
        tuple.iter().fold(0, |acc, &x| acc * self.alphabet_size + x)
    }

    pub fn decode(&self, index: usize) -> Vec<Symbol> {
        let mut t = vec![0; self.n];
        decode_into(index, self.alphabet_size, &mut t);
        t
    }

    /// Iterates `(tuple, probability)` over the full table.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<Symbol>, f64)> + '_ {
        self.table.iter().enumerate().map(move |(i, &p)| (self.decode(i), p))
    }

    /// Sums out coordinates `m+1..n`.
    pub fn marginalize(&self, m: usize) -> Result<JointDist> {
        if m == 0 || m > self.n {
            return Err(Error::BadIndex {
                index: m,
                min: 1,
                max: self.n,
            });
        }
        let block = self.alphabet_size.pow((self.n - m) as u32);
        let table: Vec<f64> = self.table.chunks(block).map(|c| c.iter().sum()).collect();
        Ok(JointDist {
            alphabet_size: self.alphabet_size,
            n: m,
            table,
        })
    }

    /// Law of coordinate `i` (1-based).
    pub fn coordinate_marginal(&self, i: usize) -> Result<Dist> {
        if i == 0 || i > self.n {
            return Err(Error::BadIndex {
                index: i,
                min: 1,
                max: self.n,
            });
        }
        let mut probs = vec![0.0; self.alphabet_size];
        let stride = self.alphabet_size.pow((self.n - i) as u32);
        for (idx, &p) in self.table.iter().enumerate() {
            probs[(idx / stride) % self.alphabet_size] += p;
        }
        Dist::normalized(probs)
    }

    /// Convex combination `sum_c weights[c] * joints[c]`.
    pub fn mixture(weights: &[f64], joints: &[JointDist]) -> Result<JointDist> {
        let first = joints.first().ok_or(Error::ZeroMass)?;
        if weights.len() != joints.len() {
            return Err(Error::AlphabetMismatch {
                expected: joints.len(),
                actual: weights.len(),
            });
        }
        let mut table = vec![0.0; first.len()];
        for (w, j) in weights.iter().zip(joints) {
            if j.alphabet_size != first.alphabet_size || j.n != first.n {
                return Err(Error::AlphabetMismatch {
                    expected: first.len(),
                    actual: j.len(),
                });
            }
            for (t, p) in table.iter_mut().zip(&j.table) {
                *t += w * p;
            }
        }
        JointDist::new(first.alphabet_size, first.n, table)
    }
}

pub(crate) fn decode_into(mut index: usize, k: usize, out: &mut [Symbol]) {
    for slot in out.iter_mut().rev() {
        *slot = index % k;
        index /= k;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn product(p: &[f64], n: usize) -> JointDist {
        JointDist::from_fn(p.len(), n, |t| t.iter().map(|&x| p[x]).product()).unwrap()
    }

    #[test]
    fn encode_is_lexicographic() {
        let q = product(&[0.5, 0.5], 3);
        assert_eq!(q.encode(&[0, 0, 1]), 1);
        assert_eq!(q.encode(&[1, 0, 0]), 4);
        assert_eq!(q.decode(6), vec![1, 1, 0]);
    }

    #[test]
    fn marginalize_identity_and_product() {
        let q = product(&[0.3, 0.7], 3);
        assert_eq!(q.marginalize(3).unwrap(), q);
        let m = q.marginalize(1).unwrap();
        assert!((m.table()[0] - 0.3).abs() < 1e-15);
        assert!((m.table()[1] - 0.7).abs() < 1e-15);
        assert!(matches!(q.marginalize(0), Err(Error::BadIndex { .. })));
        assert!(matches!(q.marginalize(4), Err(Error::BadIndex { .. })));
    }

    #[test]
    fn marginalize_counterexample_table() {
        // (0,0) -> 1/4, (0,1) -> 1/4, (1,0) -> 1/2, (1,1) -> 0
        let q = JointDist::new(2, 2, vec![0.25, 0.25, 0.5, 0.0]).unwrap();
        let m = q.marginalize(1).unwrap();
        assert_eq!(m.table(), &[0.5, 0.5]);
    }

    #[test]
    fn cap_is_enforced() {
        assert!(table_len(2, 24).is_ok());
        assert!(matches!(table_len(2, 25), Err(Error::TooLarge { .. })));
        assert!(matches!(table_len(3, 16), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn rejects_unnormalized_table() {
        assert!(matches!(
            JointDist::new(2, 1, vec![0.5, 0.6]),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn coordinate_marginals_of_product() {
        let q = JointDist::from_fn(3, 2, |t| [0.2, 0.3, 0.5][t[0]] * [0.6, 0.4, 0.0][t[1]]).unwrap();
        assert!((q.coordinate_marginal(1).unwrap().prob(2) - 0.5).abs() < 1e-15);
        assert!((q.coordinate_marginal(2).unwrap().prob(1) - 0.4).abs() < 1e-15);
    }
}
