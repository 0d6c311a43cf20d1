//! Exact verification of (weighted) exchangeability on enumerated joints.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logspace::log_sum_exp;
use crate::model::{Dist, JointDist, Measure, Symbol};
use crate::perm::weighted_empirical_perm;
use crate::weights::{WeightFn, WeightSeq};

/// Default absolute tolerance for enumeration checks.
pub const CHECK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub tuple: Vec<Symbol>,
    /// 1-based positions swapped, when the check is about a transposition.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transposition: Option<(usize, usize)>,
    /// Coordinate and prefix length, for conditional-law checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coordinate: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub passed: bool,
    pub max_violation: f64,
    pub tolerance: f64,
    pub witness: Option<Witness>,
}

impl CheckReport {
    fn new(check: &str, tolerance: f64) -> Self {
        CheckReport {
            check: check.to_string(),
            passed: true,
            max_violation: 0.0,
            tolerance,
            witness: None,
        }
    }

    /// Records a violation; the first strictly largest one becomes the witness.
    fn record(&mut self, violation: f64, witness: impl FnOnce() -> Witness) {
        if violation > self.max_violation || violation.is_nan() {
            self.max_violation = if violation.is_nan() { f64::INFINITY } else { violation };
            self.witness = Some(witness());
        }
    }

    fn finish(mut self) -> Self {
        self.passed = self.max_violation <= self.tolerance;
        if self.passed {
            self.witness = None;
        }
        self
    }

    /// Folds several reports into one keyed by `check`.
    pub fn combine(check: &str, tolerance: f64, parts: &[CheckReport]) -> CheckReport {
        let mut out = CheckReport::new(check, tolerance);
        for p in parts {
            if let Some(w) = &p.witness {
                out.record(p.max_violation, || w.clone());
            } else if p.max_violation > out.max_violation {
                out.max_violation = p.max_violation;
            }
        }
        out.finish()
    }
}

fn check_alphabet(q: &JointDist, lambda: &WeightSeq) -> Result<()> {
    if q.alphabet_size() != lambda.alphabet_size() {
        return Err(Error::AlphabetMismatch {
            expected: lambda.alphabet_size(),
            actual: q.alphabet_size(),
        });
    }
    Ok(())
}

/// Largest discrepancy of `values` under swapping positions `a < b` (0-based).
fn swap_scan(q: &JointDist, values: &[f64], a: usize, b: usize, report: &mut CheckReport) {
    for (idx, &v) in values.iter().enumerate() {
        let t = q.decode(idx);
        if t[a] >= t[b] {
            continue;
        }
        let mut s = t.clone();
        s.swap(a, b);
        let diff = (v - values[q.encode(&s)]).abs();
        report.record(diff, || Witness {
            tuple: t,
            transposition: Some((a + 1, b + 1)),
            coordinate: None,
        });
    }
}

/// Invariance under all adjacent transpositions, which generate `S_n`.
pub fn is_exchangeable(q: &JointDist, tol: f64) -> CheckReport {
    let mut report = CheckReport::new("exchangeable", tol);
    for a in 0..q.n().saturating_sub(1) {
        swap_scan(q, q.table(), a, a + 1, &mut report);
    }
    report.finish()
}

/// `Q(x) / prod_i lambda_i(x_i)`, normalized to total mass one in log space.
pub fn weighted_bar(q: &JointDist, lambda: &WeightSeq) -> Result<Vec<f64>> {
    check_alphabet(q, lambda)?;
    let lams = lambda.prefix(q.n());
    let ln: Vec<f64> = q
        .iter()
        .map(|(t, p)| {
            if p == 0.0 {
                f64::NEG_INFINITY
            } else {
                p.ln() - t.iter().zip(&lams).map(|(&x, l)| l.ln(x)).sum::<f64>()
            }
        })
        .collect();
    let z = log_sum_exp(&ln);
    Ok(ln.iter().map(|v| (v - z).exp()).collect())
}

/// Symmetry of `Q / prod lambda_i` under adjacent transpositions.
pub fn is_weighted_exchangeable(q: &JointDist, lambda: &WeightSeq, tol: f64) -> Result<CheckReport> {
    let bar = weighted_bar(q, lambda)?;
    let mut report = CheckReport::new("weighted_exchangeable", tol);
    for a in 0..q.n().saturating_sub(1) {
        swap_scan(q, &bar, a, a + 1, &mut report);
    }
    Ok(report.finish())
}

/// Tests `Q(t) / (lambda_i(t_i) lambda_j(t_j)) = Q(t^{ij}) / (lambda_i(t_j) lambda_j(t_i))` for all
/// tuples `t`, the indicator form of the weighted swap identity. Both sides are
/// divided by the total of the left-hand side.
pub fn weighted_swap_check(q: &JointDist, lambda: &WeightSeq, i: usize, j: usize, tol: f64) -> Result<CheckReport> {
    check_alphabet(q, lambda)?;
    if i == 0 || i >= j || j > q.n() {
        return Err(Error::BadIndex {
            index: if i == 0 { i } else { j },
            min: 1,
            max: q.n(),
        });
    }
    let (li, lj) = (lambda.weight_at(i), lambda.weight_at(j));
    let ln_side = |t: &[Symbol], p: f64| {
        if p == 0.0 {
            f64::NEG_INFINITY
        } else {
            p.ln() - li.ln(t[i - 1]) - lj.ln(t[j - 1])
        }
    };
    let lhs: Vec<f64> = q.iter().map(|(t, p)| ln_side(&t, p)).collect();
    let z = log_sum_exp(&lhs);
    let mut report = CheckReport::new(&format!("weighted_swap({i},{j})"), tol);
    for (idx, &l) in lhs.iter().enumerate() {
        let t = q.decode(idx);
        let mut s = t.clone();
        s.swap(i - 1, j - 1);
        let p_swapped = q.prob(&s);
        let r = if p_swapped == 0.0 {
            f64::NEG_INFINITY
        } else {
            p_swapped.ln() - li.ln(t[j - 1]) - lj.ln(t[i - 1])
        };
        let diff = ((l - z).exp() - (r - z).exp()).abs();
        report.record(diff, || Witness {
            tuple: t,
            transposition: Some((i, j)),
            coordinate: None,
        });
    }
    Ok(report.finish())
}

/// The swap check over every pair `i < j`.
pub fn weighted_swap_check_all(q: &JointDist, lambda: &WeightSeq, tol: f64) -> Result<CheckReport> {
    let mut parts = Vec::new();
    for i in 1..=q.n() {
        for j in i + 1..=q.n() {
            parts.push(weighted_swap_check(q, lambda, i, j, tol)?);
        }
    }
    Ok(CheckReport::combine("weighted_swap_all_pairs", tol, &parts))
}

struct Atom {
    representative: Vec<Symbol>,
    mass: f64,
    by_symbol: Vec<f64>,
}

/// Compares the law of `X_i` given the unordered prefix `x_1..x_m` and the exact
/// suffix `x_{m+1}..x_n` against the permanent-weighted empirical distribution.
/// Null atoms are skipped.
pub fn conditional_law_check(q: &JointDist, lambda: &WeightSeq, i: usize, m: usize, tol: f64) -> Result<CheckReport> {
    check_alphabet(q, lambda)?;
    if m == 0 || m > q.n() {
        return Err(Error::BadIndex { index: m, min: 1, max: q.n() });
    }
    if i == 0 || i > m {
        return Err(Error::BadIndex { index: i, min: 1, max: m });
    }
    let k = q.alphabet_size();
    let mut atoms: BTreeMap<Vec<Symbol>, Atom> = BTreeMap::new();
    for (t, p) in q.iter() {
        let mut key = t.clone();
        key[..m].sort_unstable();
        let atom = atoms.entry(key.clone()).or_insert_with(|| Atom {
            representative: key,
            mass: 0.0,
            by_symbol: vec![0.0; k],
        });
        atom.mass += p;
        atom.by_symbol[t[i - 1]] += p;
    }
    let lams: Vec<WeightFn> = lambda.prefix(m);
    let mut report = CheckReport::new(&format!("conditional_law(i={i},m={m})"), tol);
    for atom in atoms.values().filter(|a| a.mass > 0.0) {
        let prefix = &atom.representative[..m];
        let predicted = weighted_empirical_perm(&lams, prefix, i)?;
        // The representative ordering must not matter.
        let reversed: Vec<Symbol> = prefix.iter().rev().copied().collect();
        let alt = weighted_empirical_perm(&lams, &reversed, i)?;
        for x in 0..k {
            let observed = atom.by_symbol[x] / atom.mass;
            let diff = (observed - predicted.prob(x)).abs().max((alt.prob(x) - predicted.prob(x)).abs());
            report.record(diff, || Witness {
                tuple: atom.representative.clone(),
                transposition: None,
                coordinate: Some((i, m)),
            });
        }
    }
    Ok(report.finish())
}

/// Every `(i, m)` with `1 <= i <= m <= n`.
pub fn conditional_law_check_all(q: &JointDist, lambda: &WeightSeq, tol: f64) -> Result<CheckReport> {
    let mut parts = Vec::new();
    for m in 1..=q.n() {
        for i in 1..=m {
            parts.push(conditional_law_check(q, lambda, i, m, tol)?);
        }
    }
    Ok(CheckReport::combine("conditional_law_all", tol, &parts))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factorization {
    /// Normalized base distribution when `Q = P∘lambda` within tolerance.
    pub base: Option<Dist>,
    pub max_violation: f64,
    pub witness: Option<Vec<Symbol>>,
}

impl Factorization {
    pub fn base_measure(&self) -> Option<Measure> {
        self.base.as_ref().map(Measure::from)
    }
}

/// Tests whether `Q` is a weighted-i.i.d. product with a common base measure.
pub fn factor_as_weighted_iid(q: &JointDist, lambda: &WeightSeq, tol: f64) -> Result<Factorization> {
    check_alphabet(q, lambda)?;
    let marginals = (1..=q.n()).map(|i| q.coordinate_marginal(i)).collect::<Result<Vec<_>>>()?;
    let mut worst = 0.0f64;
    let mut witness = None;
    for (t, p) in q.iter() {
        let prod: f64 = t.iter().zip(&marginals).map(|(&x, d)| d.prob(x)).product();
        let diff = (p - prod).abs();
        if diff > worst {
            worst = diff;
            witness = Some(t);
        }
    }
    let lam1 = lambda.weight_at(1);
    let candidate = Dist::normalized((0..q.alphabet_size()).map(|x| marginals[0].prob(x) / lam1.value(x)).collect())?;
    let base = Measure::from(&candidate);
    for (i, qi) in marginals.iter().enumerate() {
        let predicted = crate::model::reweight(&base, &lambda.weight_at(i + 1))?;
        for x in 0..q.alphabet_size() {
            let diff = (qi.prob(x) - predicted.prob(x)).abs();
            if diff > worst {
                worst = diff;
                let mut t = vec![0; q.n()];
                t[i] = x;
                witness = Some(t);
            }
        }
    }
    let ok = worst <= tol;
    Ok(Factorization {
        base: ok.then_some(candidate),
        max_violation: worst,
        witness: if ok { None } else { witness },
    })
}
