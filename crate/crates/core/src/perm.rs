//! Log-space permanents and the permanent-ratio conditional weights.
//!
//! Rows index weight functions `lambda_k`, columns index observations `x_j`,
//! so `entry[k][j] = ln lambda_k(x_j)`.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logspace::{log_sum_exp, CompensatedSum, LogAccumulator};
use crate::model::{Dist, Symbol};
use crate::weights::WeightFn;

pub const MAX_PERMANENT_N: usize = 20;
pub const MAX_WEIGHT_TABLE_N: usize = 14;
pub const MAX_ORACLE_N: usize = 8;
/// Cap on the number of count vectors the multiset recursion may visit.
pub const MAX_MULTISET_STATES: usize = 1 << 22;

const SINKHORN_ROUNDS: usize = 40;
const RESYNC_EVERY: u64 = 1 << 10;

#[derive(Debug, Clone, PartialEq)]
pub struct LogMatrix {
    n: usize,
    data: Vec<f64>,
}

impl LogMatrix {
    /// Row-major square matrix of finite log-entries.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::AlphabetMismatch {
                expected: n * n,
                actual: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonPositiveWeight {
                symbol: pos,
                value: data[pos].exp(),
            });
        }
        Ok(LogMatrix { n, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(Error::AlphabetMismatch {
                    expected: n,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        LogMatrix::new(n, data)
    }

    /// `entry[k][j] = ln lambda_k(x_j)`.
    pub fn from_weights(lambdas: &[WeightFn], xs: &[Symbol]) -> Result<Self> {
        check_inputs(lambdas, xs)?;
        let n = xs.len();
        let mut data = Vec::with_capacity(n * n);
        for lam in lambdas {
            data.extend(xs.iter().map(|&x| lam.ln(x)));
        }
        Ok(LogMatrix { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.data[k * self.n + j]
    }

    /// The matrix with row `k` and column `j` removed.
    pub fn minor(&self, k: usize, j: usize) -> LogMatrix {
        let n = self.n;
        let mut data = Vec::with_capacity((n - 1) * (n - 1));
        for r in (0..n).filter(|&r| r != k) {
            for c in (0..n).filter(|&c| c != j) {
                data.push(self.get(r, c));
            }
        }
        LogMatrix { n: n - 1, data }
    }
}

fn check_inputs(lambdas: &[WeightFn], xs: &[Symbol]) -> Result<usize> {
    if lambdas.len() != xs.len() {
        return Err(Error::AlphabetMismatch {
            expected: xs.len(),
            actual: lambdas.len(),
        });
    }
    let k = lambdas.first().map_or(0, WeightFn::len);
    for lam in lambdas {
        if lam.len() != k {
            return Err(Error::AlphabetMismatch {
                expected: k,
                actual: lam.len(),
            });
        }
    }
    for &x in xs {
        if x >= k {
            return Err(Error::InvalidSymbol { symbol: x, size: k });
        }
    }
    Ok(k)
}

/// Log-domain Sinkhorn scaling: returns `(ln_scale, B)` with `A = D_r B D_c`
/// and `B` close to doubly stochastic, so `perm A = exp(ln_scale) perm B`.
fn balance(m: &LogMatrix) -> (f64, Vec<f64>) {
    let n = m.n;
    let mut a = m.data.clone();
    let mut ln_scale = 0.0;
    let mut buf = vec![0.0; n];
    for _ in 0..SINKHORN_ROUNDS {
        for k in 0..n {
            let row = &mut a[k * n..(k + 1) * n];
            let s = log_sum_exp(row);
            row.iter_mut().for_each(|v| *v -= s);
            ln_scale += s;
        }
        for j in 0..n {
            for k in 0..n {
                buf[k] = a[k * n + j];
            }
            let s = log_sum_exp(&buf);
            for k in 0..n {
                a[k * n + j] -= s;
            }
            ln_scale += s;
        }
    }
    (ln_scale, a.iter().map(|v| v.exp()).collect())
}

/// `ln perm(M)` by Ryser's formula with Gray-code subset order.
///
/// The matrix is first balanced so that all row sums stay in `[0, n]`, then
/// positive and negative inclusion-exclusion terms are accumulated separately
/// with compensated sums.
pub fn log_permanent(m: &LogMatrix) -> Result<f64> {
    let n = m.n;
    if n > MAX_PERMANENT_N {
        return Err(Error::TooLarge {
            what: "permanent order",
            value: n,
            limit: MAX_PERMANENT_N,
        });
    }
    match n {
        0 => return Ok(0.0),
        1 => return Ok(m.data[0]),
        2 => return Ok(crate::logspace::log_add_exp(m.data[0] + m.data[3], m.data[1] + m.data[2])),
        _ => {}
    }
    let (ln_scale, b) = balance(m);
    let mut rows = vec![0.0f64; n];
    let mut member = vec![false; n];
    let mut pos = CompensatedSum::new();
    let mut neg = CompensatedSum::new();
    let total: u64 = 1 << n;
    for g in 1..total {
        let j = g.trailing_zeros() as usize;
        member[j] = !member[j];
        if g % RESYNC_EVERY == 0 {
            for (k, r) in rows.iter_mut().enumerate() {
                *r = (0..n).filter(|&c| member[c]).map(|c| b[k * n + c]).sum();
            }
        } else if member[j] {
            for (k, r) in rows.iter_mut().enumerate() {
                *r += b[k * n + j];
            }
        } else {
            for (k, r) in rows.iter_mut().enumerate() {
                *r -= b[k * n + j];
            }
        }
        let prod: f64 = rows.iter().product();
        // Sign (-1)^(n - |S|); the Gray code parity tracks |S|.
        let size_parity = (g ^ (g >> 1)).count_ones() as usize;
        if (n - size_parity) % 2 == 0 {
            pos.add(prod);
        } else {
            neg.add(prod);
        }
    }
    let p = pos.value();
    let q = neg.value();
    let diff = p - q;
    if !(diff > 0.0) || diff < p * 1e-13 {
        return Err(Error::Cancellation);
    }
    Ok(ln_scale + diff.ln())
}

/// Visits every permutation of `0..n` (Heap's algorithm).
fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    f(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            f(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// `ln perm(M)` by summing all `n!` products; reference for small `n`.
pub fn log_permanent_enumerate(m: &LogMatrix) -> Result<f64> {
    if m.n > MAX_ORACLE_N {
        return Err(Error::TooLarge {
            what: "enumeration order",
            value: m.n,
            limit: MAX_ORACLE_N,
        });
    }
    let mut acc = LogAccumulator::new();
    for_each_permutation(m.n, |sigma| {
        acc.push(sigma.iter().enumerate().map(|(k, &j)| m.get(k, j)).sum());
    });
    Ok(acc.ln())
}

/// Weights `(w_{n,i})_j` of the conditional law of `X_i` over the observed values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondWeights {
    pub n: usize,
    /// Target coordinate, 1-based.
    pub i: usize,
    pub w: Vec<f64>,
}

impl CondWeights {
    /// Mass of the weights collected on each alphabet symbol.
    pub fn aggregate(&self, xs: &[Symbol], alphabet_size: usize) -> Result<Dist> {
        let mut probs = vec![0.0; alphabet_size];
        for (&x, &w) in xs.iter().zip(&self.w) {
            probs[x] += w;
        }
        Dist::normalized(probs)
    }
}

fn check_target(n: usize, i: usize) -> Result<()> {
    if i == 0 || i > n {
        return Err(Error::BadIndex { index: i, min: 1, max: n });
    }
    Ok(())
}

fn softmax(ln: &[f64]) -> Vec<f64> {
    let total = log_sum_exp(ln);
    ln.iter().map(|v| (v - total).exp()).collect()
}

/// `w_j = lambda_i(x_j) perm(M without row i, column j) / perm(M)`.
///
/// Columns sharing a symbol share a minor, so at most `K` minors are evaluated.
/// The normalizer is taken from the row expansion of `perm(M)` along row `i`.
pub fn conditional_weights(lambdas: &[WeightFn], xs: &[Symbol], i: usize) -> Result<CondWeights> {
    check_inputs(lambdas, xs)?;
    let n = xs.len();
    check_target(n, i)?;
    if n > MAX_WEIGHT_TABLE_N {
        return Err(Error::TooLarge {
            what: "conditional weight order",
            value: n,
            limit: MAX_WEIGHT_TABLE_N,
        });
    }
    let m = LogMatrix::from_weights(lambdas, xs)?;
    let mut minor_of_symbol: Vec<Option<f64>> = vec![None; lambdas[0].len()];
    let mut ln = Vec::with_capacity(n);
    for (j, &x) in xs.iter().enumerate() {
        let minor = match minor_of_symbol[x] {
            Some(v) => v,
            None => {
                let v = log_permanent(&m.minor(i - 1, j))?;
                minor_of_symbol[x] = Some(v);
                v
            }
        };
        ln.push(m.get(i - 1, j) + minor);
    }
    Ok(CondWeights { n, i, w: softmax(&ln) })
}

/// All rows `i = 1..n`; entry `[i-1][j]` is `(w_{n,i})_j`.
pub fn conditional_weight_table(lambdas: &[WeightFn], xs: &[Symbol]) -> Result<Vec<CondWeights>> {
    (1..=xs.len()).map(|i| conditional_weights(lambdas, xs, i)).collect()
}

/// Literal sum over all `n!` permutations.
pub fn oracle_conditional_weights(lambdas: &[WeightFn], xs: &[Symbol], i: usize) -> Result<CondWeights> {
    check_inputs(lambdas, xs)?;
    let n = xs.len();
    check_target(n, i)?;
    if n > MAX_ORACLE_N {
        return Err(Error::TooLarge {
            what: "enumeration order",
            value: n,
            limit: MAX_ORACLE_N,
        });
    }
    let mut acc = vec![LogAccumulator::new(); n];
    for_each_permutation(n, |sigma| {
        let ln: f64 = sigma.iter().enumerate().map(|(k, &j)| lambdas[k].ln(xs[j])).sum();
        acc[sigma[i - 1]].push(ln);
    });
    let ln: Vec<f64> = acc.iter().map(LogAccumulator::ln).collect();
    Ok(CondWeights { n, i, w: softmax(&ln) })
}

/// `sum_j (w_{m,i})_j delta_{x_j}` as a distribution on the alphabet.
pub fn weighted_empirical_perm(lambdas: &[WeightFn], xs: &[Symbol], i: usize) -> Result<Dist> {
    let cw = conditional_weights(lambdas, xs, i)?;
    cw.aggregate(xs, lambdas[0].len())
}

/// Mixed-radix indexing of count vectors `0 <= a_s <= c_s`.
struct CountSpace {
    caps: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl CountSpace {
    fn new(caps: &[usize]) -> Result<Self> {
        let mut strides = Vec::with_capacity(caps.len());
        let mut len = 1usize;
        for &c in caps {
            strides.push(len);
            len = len.checked_mul(c + 1).filter(|&l| l <= MAX_MULTISET_STATES).ok_or(Error::TooLarge {
                what: "multiset states",
                value: usize::MAX,
                limit: MAX_MULTISET_STATES,
            })?;
        }
        Ok(CountSpace {
            caps: caps.to_vec(),
            strides,
            len,
        })
    }

    fn digit(&self, idx: usize, s: usize) -> usize {
        (idx / self.strides[s]) % (self.caps[s] + 1)
    }
}

/// `ln G(c)` where `G(c) = sum over row-to-symbol assignments with counts c of prod_k lambda_k(s_k)`,
/// using the rows in `rows`. Every term is positive, so no cancellation occurs.
fn ln_assignment_sum(lambdas: &[WeightFn], rows: impl Iterator<Item = usize>, space: &CountSpace) -> Vec<f64> {
    let k = space.caps.len();
    let mut cur = vec![f64::NEG_INFINITY; space.len];
    cur[0] = 0.0;
    let mut level: Vec<usize> = vec![0];
    for (done, row) in rows.enumerate() {
        let mut next_level = Vec::new();
        let mut next = vec![f64::NEG_INFINITY; space.len];
        for &idx in &level {
            let base = cur[idx];
            for s in 0..k {
                if space.digit(idx, s) < space.caps[s] {
                    let to = idx + space.strides[s];
                    let v = base + lambdas[row].ln(s);
                    if next[to] == f64::NEG_INFINITY {
                        next_level.push(to);
                        next[to] = v;
                    } else {
                        next[to] = crate::logspace::log_add_exp(next[to], v);
                    }
                }
            }
        }
        debug_assert!(next_level.iter().all(|&i| (0..k).map(|s| space.digit(i, s)).sum::<usize>() == done + 1));
        cur = next;
        level = next_level;
    }
    cur
}

fn symbol_counts(xs: &[Symbol], k: usize) -> Vec<usize> {
    let mut c = vec![0; k];
    for &x in xs {
        c[x] += 1;
    }
    c
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|v| (v as f64).ln()).sum()
}

/// `ln perm(M)` via a dynamic program over symbol counts; exploits repeated columns.
pub fn log_permanent_multiset(lambdas: &[WeightFn], xs: &[Symbol]) -> Result<f64> {
    let k = check_inputs(lambdas, xs)?;
    let counts = symbol_counts(xs, k);
    let space = CountSpace::new(&counts)?;
    let g = ln_assignment_sum(lambdas, 0..xs.len(), &space);
    Ok(g[space.len - 1] + counts.iter().map(|&c| ln_factorial(c)).sum::<f64>())
}

/// Same weights as [`conditional_weights`], computed by the count recursion.
///
/// The mass on symbol `s` is `lambda_i(s) G_{-i}(c - e_s) / G(c)`, shared equally by its columns.
pub fn conditional_weights_multiset(lambdas: &[WeightFn], xs: &[Symbol], i: usize) -> Result<CondWeights> {
    let k = check_inputs(lambdas, xs)?;
    let n = xs.len();
    check_target(n, i)?;
    let counts = symbol_counts(xs, k);
    let space = CountSpace::new(&counts)?;
    let g_minus = ln_assignment_sum(lambdas, (0..n).filter(|&r| r != i - 1), &space);
    let full = space.len - 1;
    let ln_sym: Vec<f64> = (0..k)
        .map(|s| {
            if counts[s] == 0 {
                f64::NEG_INFINITY
            } else {
                lambdas[i - 1].ln(s) + g_minus[full - space.strides[s]] - (counts[s] as f64).ln()
            }
        })
        .collect();
    let ln: Vec<f64> = xs.iter().map(|&x| ln_sym[x]).collect();
    Ok(CondWeights { n, i, w: softmax(&ln) })
}

/// Approximate weights from `draws` uniformly random permutations, self-normalized
/// by their products. Unbiased only as `draws` grows; never used by the exact paths.
pub fn approx_conditional_weights_mc<R: Rng + ?Sized>(
    lambdas: &[WeightFn],
    xs: &[Symbol],
    i: usize,
    draws: usize,
    rng: &mut R,
) -> Result<CondWeights> {
    check_inputs(lambdas, xs)?;
    let n = xs.len();
    check_target(n, i)?;
    let mut acc = vec![LogAccumulator::new(); n];
    let mut sigma: Vec<usize> = (0..n).collect();
    for _ in 0..draws {
        sigma.shuffle(rng);
        let ln: f64 = sigma.iter().enumerate().map(|(k, &j)| lambdas[k].ln(xs[j])).sum();
        acc[sigma[i - 1]].push(ln);
    }
    let ln: Vec<f64> = acc.iter().map(LogAccumulator::ln).collect();
    if ln.iter().all(|v| *v == f64::NEG_INFINITY) {
        return Err(Error::EmptyDenominator);
    }
    Ok(CondWeights { n, i, w: softmax(&ln) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::WeightSeq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn wf(v: &[f64]) -> WeightFn {
        WeightFn::from_linear(v).unwrap()
    }

    fn int_permanent(a: &[Vec<i128>]) -> i128 {
        let n = a.len();
        let mut total = 0;
        for_each_permutation(n, |s| total += s.iter().enumerate().map(|(k, &j)| a[k][j]).product::<i128>());
        total
    }

    #[test]
    fn heap_visits_every_permutation_once() {
        let mut seen = std::collections::HashSet::new();
        for_each_permutation(5, |p| assert!(seen.insert(p.to_vec())));
        assert_eq!(seen.len(), 120);
    }

    #[test]
    fn all_ones_gives_factorial() {
        for n in 1..=14 {
            let m = LogMatrix::new(n, vec![0.0; n * n]).unwrap();
            let got = log_permanent(&m).unwrap();
            let want = ln_factorial(n);
            assert!((got - want).abs() <= 1e-10 * want.max(1.0), "n={n}: {got} vs {want}");
        }
    }

    #[test]
    fn two_by_two_formula() {
        let (a, b, c, d) = (2.0f64, 3.0f64, 5.0f64, 7.0f64);
        let m = LogMatrix::from_rows(&[vec![a.ln(), b.ln()], vec![c.ln(), d.ln()]]).unwrap();
        assert!((log_permanent(&m).unwrap() - (a * d + b * c).ln()).abs() < 1e-14);
    }

    #[test]
    fn binary_example_three_by_three() {
        let seq = WeightSeq::binary_example();
        let m = LogMatrix::from_weights(&seq.prefix(3), &[0, 1, 0]).unwrap();
        let ryser = log_permanent(&m).unwrap();
        let exact = log_permanent_enumerate(&m).unwrap();
        // Direct sum: the 1 sits at row k with weight 2^-k and the zeros permute in 2 ways.
        let direct = (2.0 * (0.5 + 0.25 + 0.125f64)).ln();
        assert!((ryser - direct).abs() < 1e-13);
        assert!((exact - direct).abs() < 1e-13);
    }

    #[test]
    fn integer_matrices_match_exact_arithmetic() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in 3..=7 {
            for _ in 0..20 {
                let a: Vec<Vec<i128>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(1..50)).collect()).collect();
                let exact = int_permanent(&a) as f64;
                let rows: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|&v| (v as f64).ln()).collect()).collect();
                let got = log_permanent(&LogMatrix::from_rows(&rows).unwrap()).unwrap();
                assert!((got.exp() / exact - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn size_caps() {
        let m = LogMatrix::new(21, vec![0.0; 441]).unwrap();
        assert!(matches!(log_permanent(&m), Err(Error::TooLarge { .. })));
        let m9 = LogMatrix::new(9, vec![0.0; 81]).unwrap();
        assert!(matches!(log_permanent_enumerate(&m9), Err(Error::TooLarge { .. })));
        let lam = vec![WeightFn::ones(2); 15];
        let xs = vec![0; 15];
        assert!(matches!(conditional_weights(&lam, &xs, 1), Err(Error::TooLarge { .. })));
        assert!(matches!(oracle_conditional_weights(&lam[..9], &xs[..9], 1), Err(Error::TooLarge { .. })));
        assert!(matches!(conditional_weights(&lam[..3], &xs[..3], 0), Err(Error::BadIndex { .. })));
    }

    #[test]
    fn two_point_example() {
        let lam = vec![WeightFn::ones(2), wf(&[1.0, 0.5])];
        let cw = conditional_weights(&lam, &[0, 1], 1).unwrap();
        assert!((cw.w[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((cw.w[1] - 2.0 / 3.0).abs() < 1e-15);
        let or = oracle_conditional_weights(&lam, &[0, 1], 1).unwrap();
        assert!((or.w[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn constant_weights_are_uniform() {
        let lam = vec![wf(&[2.0, 5.0, 1.0]); 6];
        let xs = [0, 2, 2, 1, 0, 0];
        for i in 1..=6 {
            for cw in [
                conditional_weights(&lam, &xs, i).unwrap(),
                oracle_conditional_weights(&lam, &xs, i).unwrap(),
                conditional_weights_multiset(&lam, &xs, i).unwrap(),
            ] {
                assert!(cw.w.iter().all(|w| (w - 1.0 / 6.0).abs() < 1e-13));
            }
        }
        let d = weighted_empirical_perm(&lam, &xs, 2).unwrap();
        assert!((d.prob(0) - 0.5).abs() < 1e-13);
        assert!((d.prob(1) - 1.0 / 6.0).abs() < 1e-13);
        let single = oracle_conditional_weights(&lam[..1], &[1], 1).unwrap();
        assert_eq!(single.w, vec![1.0]);
    }

    #[test]
    fn identical_observations_give_point_mass() {
        let seq = WeightSeq::cyclic_default(3, 1.0).unwrap();
        let d = weighted_empirical_perm(&seq.prefix(7), &[2; 7], 4).unwrap();
        assert_eq!(d.probs(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn heavy_tails_stay_normalized() {
        let seq = WeightSeq::cyclic_default(3, 1.0).unwrap();
        let xs: Vec<Symbol> = (0..14).map(|j| (j * 7 + 1) % 3).collect();
        let table = conditional_weight_table(&seq.prefix(14), &xs).unwrap();
        for j in 0..14 {
            let col: f64 = table.iter().map(|r| r.w[j]).sum();
            assert!((col - 1.0).abs() < 1e-10, "column {j}: {col}");
        }
    }

    #[test]
    fn multiset_matches_ryser_at_moderate_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = rng.gen_range(2..=12);
            let k = rng.gen_range(1..=3);
            let lam: Vec<WeightFn> = (0..n)
                .map(|_| WeightFn::from_ln((0..k).map(|_| rng.gen_range(-30.0..0.0)).collect()).unwrap())
                .collect();
            let xs: Vec<Symbol> = (0..n).map(|_| rng.gen_range(0..k)).collect();
            let a = log_permanent(&LogMatrix::from_weights(&lam, &xs).unwrap()).unwrap();
            let b = log_permanent_multiset(&lam, &xs).unwrap();
            assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
            let i = rng.gen_range(1..=n);
            let r = conditional_weights(&lam, &xs, i).unwrap();
            let d = conditional_weights_multiset(&lam, &xs, i).unwrap();
            for (u, v) in r.w.iter().zip(&d.w) {
                assert!((u - v).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn monte_carlo_estimate_is_close_on_small_instance() {
        let lam = vec![WeightFn::ones(2), wf(&[1.0, 0.5]), wf(&[2.0, 1.0])];
        let xs = [0, 1, 1];
        let exact = conditional_weights(&lam, &xs, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let approx = approx_conditional_weights_mc(&lam, &xs, 2, 20_000, &mut rng).unwrap();
        for (u, v) in exact.w.iter().zip(&approx.w) {
            assert!((u - v).abs() < 0.02);
        }
    }

    fn instance() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Symbol>, usize, Vec<usize>)> {
        (1usize..=7, 1usize..=3).prop_flat_map(|(n, k)| {
            (
                prop::collection::vec(prop::collection::vec(-30.0f64..0.0, k), n),
                prop::collection::vec(0..k, n),
                1..=n,
                Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn ryser_matches_enumeration((rows, xs, i, tau) in instance()) {
            let lam: Vec<WeightFn> = rows.into_iter().map(|r| WeightFn::from_ln(r).unwrap()).collect();
            let m = LogMatrix::from_weights(&lam, &xs).unwrap();
            let a = log_permanent(&m).unwrap();
            let b = log_permanent_enumerate(&m).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));

            let fast = conditional_weights(&lam, &xs, i).unwrap();
            let slow = oracle_conditional_weights(&lam, &xs, i).unwrap();
            for (u, v) in fast.w.iter().zip(&slow.w) {
                prop_assert!((u - v).abs() <= 1e-9);
            }
            prop_assert!((fast.w.iter().sum::<f64>() - 1.0).abs() < 1e-10);

            // Relabeling observations permutes the weights accordingly.
            let permuted: Vec<Symbol> = tau.iter().map(|&t| xs[t]).collect();
            let moved = oracle_conditional_weights(&lam, &permuted, i).unwrap();
            for (j, &t) in tau.iter().enumerate() {
                prop_assert!((moved.w[j] - slow.w[t]).abs() <= 1e-12);
            }
        }
    }
}
