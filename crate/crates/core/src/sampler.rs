//! Samplers and exact small-`n` joints for weighted-i.i.d. products, their
//! mixtures, and the single-one counterexample.
//!
//! Stream convention: the mixture component is drawn from stream 0 of the
//! [`RandomSource`], coordinate `i` from stream `i`. A single-component mixture
//! therefore reproduces [`sample_weighted_iid`] draw for draw.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{reweight, Dist, EventSpec, JointDist, Measure, RandomSource, Symbol};
use crate::weights::WeightSeq;

const MIXTURE_TOL: f64 = 1e-12;

/// A mixing distribution with finite support over base measures.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    components: Vec<(Measure, f64)>,
}

impl MixtureSpec {
    pub fn new(components: Vec<(Measure, f64)>) -> Result<Self> {
        let first = components.first().ok_or(Error::ZeroMass)?;
        let k = first.0.len();
        let mut sum = 0.0;
        for (c, (m, p)) in components.iter().enumerate() {
            if m.len() != k {
                return Err(Error::AlphabetMismatch {
                    expected: k,
                    actual: m.len(),
                });
            }
            if !m.is_valid_base() {
                return Err(Error::ZeroMass);
            }
            if !p.is_finite() || *p < 0.0 {
                return Err(Error::InvalidMass { symbol: c, value: *p });
            }
            sum += p;
        }
        if (sum - 1.0).abs() > MIXTURE_TOL {
            return Err(Error::NotNormalized { sum, tol: MIXTURE_TOL });
        }
        Ok(MixtureSpec { components })
    }

    pub fn single(base: Measure) -> Result<Self> {
        MixtureSpec::new(vec![(base, 1.0)])
    }

    /// Components given as linear masses with their mixing probabilities.
    pub fn from_linear(components: &[(Vec<f64>, f64)]) -> Result<Self> {
        let parsed = components
            .iter()
            .map(|(m, p)| Ok((Measure::from_linear(m)?, *p)))
            .collect::<Result<Vec<_>>>()?;
        MixtureSpec::new(parsed)
    }

    pub fn alphabet_size(&self) -> usize {
        self.components[0].0.len()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn component(&self, c: usize) -> &Measure {
        &self.components[c].0
    }

    pub fn probability(&self, c: usize) -> f64 {
        self.components[c].1
    }

    fn mixing_dist(&self) -> Result<Dist> {
        Dist::normalized(self.components.iter().map(|(_, p)| *p).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRun {
    pub symbols: Vec<Symbol>,
    pub drawn_component: Option<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleHeader {
    pub seed: u64,
    pub spec_hash: String,
    pub n: usize,
    pub drawn_component: Option<usize>,
}

impl SampleRun {
    /// A JSON header line followed by one symbol per line.
    pub fn to_text(&self, spec_hash: &str) -> Result<String> {
        let header = SampleHeader {
            seed: self.seed,
            spec_hash: spec_hash.to_string(),
            n: self.symbols.len(),
            drawn_component: self.drawn_component,
        };
        let mut out = serde_json::to_string(&header)?;
        out.push('\n');
        for s in &self.symbols {
            out.push_str(&s.to_string());
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_text(text: &str) -> Result<(SampleRun, SampleHeader)> {
        let mut lines = text.lines();
        let header: SampleHeader = serde_json::from_str(lines.next().ok_or_else(|| Error::SampleFormat("missing header".into()))?)?;
        let symbols = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.trim().parse::<Symbol>().map_err(|e| Error::SampleFormat(format!("bad symbol {l:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if symbols.len() != header.n {
            return Err(Error::SampleFormat(format!("header says n={} but found {} symbols", header.n, symbols.len())));
        }
        Ok((
            SampleRun {
                symbols,
                drawn_component: header.drawn_component,
                seed: header.seed,
            },
            header,
        ))
    }
}

fn check_alphabet(base: &Measure, lambda: &WeightSeq) -> Result<()> {
    if base.len() != lambda.alphabet_size() {
        return Err(Error::AlphabetMismatch {
            expected: lambda.alphabet_size(),
            actual: base.len(),
        });
    }
    Ok(())
}

/// Law of coordinate `i` (1-based) under `P∘lambda`.
pub fn coordinate_law(base: &Measure, lambda: &WeightSeq, i: usize) -> Result<Dist> {
    check_alphabet(base, lambda)?;
    reweight(base, &lambda.weight_at(i))
}

/// Draws `X_i ~ P∘lambda_i` independently for `i = 1..n`.
pub fn sample_weighted_iid(base: &Measure, lambda: &WeightSeq, n: usize, src: &RandomSource) -> Result<SampleRun> {
    check_alphabet(base, lambda)?;
    let symbols = (1..=n)
        .map(|i| {
            let d = reweight(base, &lambda.weight_at(i))?;
            let u: f64 = src.stream(i as u64).gen();
            Ok(d.sample_with(u))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleRun {
        symbols,
        drawn_component: None,
        seed: src.seed(),
    })
}

/// Draws a component `P ~ mu`, then a weighted-i.i.d. sequence from it.
pub fn sample_mixture(mix: &MixtureSpec, lambda: &WeightSeq, n: usize, src: &RandomSource) -> Result<SampleRun> {
    let u: f64 = src.stream(0).gen();
    let c = mix.mixing_dist()?.sample_with(u);
    let mut run = sample_weighted_iid(mix.component(c), lambda, n, src)?;
    run.drawn_component = Some(c);
    Ok(run)
}

/// `table(x) = prod_i reweight(P, lambda_i)(x_i)`.
pub fn exact_joint_weighted_iid(base: &Measure, lambda: &WeightSeq, n: usize) -> Result<JointDist> {
    check_alphabet(base, lambda)?;
    let laws = (1..=n).map(|i| reweight(base, &lambda.weight_at(i))).collect::<Result<Vec<_>>>()?;
    JointDist::from_fn(base.len(), n, |t| t.iter().zip(&laws).map(|(&x, d)| d.prob(x)).product())
}

pub fn exact_joint_mixture(mix: &MixtureSpec, lambda: &WeightSeq, n: usize) -> Result<JointDist> {
    let joints = (0..mix.len())
        .map(|c| exact_joint_weighted_iid(mix.component(c), lambda, n))
        .collect::<Result<Vec<_>>>()?;
    let weights: Vec<f64> = (0..mix.len()).map(|c| mix.probability(c)).collect();
    JointDist::mixture(&weights, &joints)
}

/// Prefix law of the sequence with a single 1 at a position `I`, `P(I = i) = 2^-i`.
pub fn example1_joint(n: usize) -> Result<JointDist> {
    JointDist::from_fn(2, n, |t| {
        let ones: Vec<usize> = t.iter().enumerate().filter(|(_, &x)| x == 1).map(|(j, _)| j + 1).collect();
        match ones.as_slice() {
            [] => 0.5f64.powi(n as i32),
            [i] => 0.5f64.powi(*i as i32),
            _ => 0.0,
        }
    })
}

/// Index `I >= 1` with `P(I = i) = 2^-i`: one plus the number of leading zero
/// bits in a stream of uniform words.
pub fn geometric_half_index<R: Rng + ?Sized>(rng: &mut R) -> u64 {
    let mut offset = 0u64;
    loop {
        let word: u64 = rng.gen();
        if word != 0 {
            return offset + word.leading_zeros() as u64 + 1;
        }
        offset += 64;
    }
}

/// `e_I` truncated to length `n`; uses stream 0.
pub fn example1_sample(n: usize, src: &RandomSource) -> SampleRun {
    let index = geometric_half_index(&mut src.stream(0));
    let mut symbols = vec![0; n];
    if index as usize <= n {
        symbols[index as usize - 1] = 1;
    }
    SampleRun {
        symbols,
        drawn_component: None,
        seed: src.seed(),
    }
}

/// Law of the number of occurrences of `symbol` in `X_1..X_n` under `P∘lambda`.
pub fn count_distribution(base: &Measure, lambda: &WeightSeq, symbol: Symbol, n: usize) -> Result<Vec<f64>> {
    check_alphabet(base, lambda)?;
    if symbol >= base.len() {
        return Err(Error::InvalidSymbol {
            symbol,
            size: base.len(),
        });
    }
    let mut dist = vec![1.0];
    for i in 1..=n {
        let p = reweight(base, &lambda.weight_at(i))?.prob(symbol);
        let mut next = vec![0.0; dist.len() + 1];
        for (c, &m) in dist.iter().enumerate() {
            next[c] += m * (1.0 - p);
            next[c + 1] += m * p;
        }
        dist = next;
    }
    Ok(dist)
}

/// Exact probability that `event` holds on the length-`n` prefix of `P∘lambda`.
pub fn event_probability(base: &Measure, lambda: &WeightSeq, event: &EventSpec, n: usize) -> Result<f64> {
    let counts = count_distribution(base, lambda, event.symbol(), n)?;
    Ok(counts.iter().enumerate().filter(|(c, _)| event.holds_for_count(*c)).map(|(_, p)| p).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::total_variation;
    use crate::weights::WeightFn;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn wf(v: &[f64]) -> WeightFn {
        WeightFn::from_linear(v).unwrap()
    }

    #[test]
    fn constant_weights_give_iid_bernoulli() {
        let base = Measure::from_linear(&[0.7, 0.3]).unwrap();
        let lam = WeightSeq::constant(wf(&[3.0, 3.0]));
        let n = 100_000;
        let run = sample_weighted_iid(&base, &lam, n, &RandomSource::new(11)).unwrap();
        let mean = run.symbols.iter().sum::<usize>() as f64 / n as f64;
        let sd = (0.3f64 * 0.7 / n as f64).sqrt();
        assert!((mean - 0.3).abs() < 3.0 * sd, "{mean}");
    }

    #[test]
    fn point_mass_gives_constant_sequence() {
        let run = sample_weighted_iid(
            &Measure::point_mass(3, 2),
            &WeightSeq::cyclic_default(3, 1.0).unwrap(),
            50,
            &RandomSource::new(1),
        )
        .unwrap();
        assert!(run.symbols.iter().all(|&x| x == 2));
    }

    #[test]
    fn binary_example_coordinate_marginals() {
        let base = Measure::uniform(2);
        let lam = WeightSeq::binary_example();
        let q = exact_joint_weighted_iid(&base, &lam, 6).unwrap();
        for i in 1..=6 {
            let t = 0.5f64.powi(i as i32);
            let want = t / (1.0 + t);
            assert!((q.coordinate_marginal(i).unwrap().prob(1) - want).abs() < 1e-15);
            assert!((coordinate_law(&base, &lam, i).unwrap().prob(1) - want).abs() < 1e-15);
        }
        let q2 = exact_joint_weighted_iid(&base, &lam, 2).unwrap();
        let a = [1.0 / 1.5, 0.5 / 1.5];
        let b = [1.0 / 1.25, 0.25 / 1.25];
        for x in 0..2 {
            for y in 0..2 {
                assert!((q2.prob(&[x, y]) - a[x] * b[y]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn exact_joint_basic_cases() {
        let base = Measure::from_linear(&[1.0, 2.0, 7.0]).unwrap();
        let lam = WeightSeq::bounded_ratio(vec![wf(&[1.0, 2.0, 0.5]), wf(&[2.0, 1.0, 1.0])]).unwrap();
        let q1 = exact_joint_weighted_iid(&base, &lam, 1).unwrap();
        let r = reweight(&base, &lam.weight_at(1)).unwrap();
        assert!(q1.table().iter().zip(r.probs()).all(|(a, b)| (a - b).abs() < 1e-15));
        let u = exact_joint_weighted_iid(&Measure::uniform(2), &WeightSeq::constant(WeightFn::ones(2)), 3).unwrap();
        assert!(u.table().iter().all(|p| (p - 0.125).abs() < 1e-15));
        let q4 = exact_joint_weighted_iid(&base, &lam, 4).unwrap();
        for i in 1..=4 {
            let want = reweight(&base, &lam.weight_at(i)).unwrap();
            assert!(total_variation(&q4.coordinate_marginal(i).unwrap(), &want).unwrap() < 1e-12);
        }
    }

    #[test]
    fn mixture_joint_is_weighted_sum() {
        let mix = MixtureSpec::from_linear(&[(vec![0.9, 0.1], 0.25), (vec![0.2, 0.8], 0.75)]).unwrap();
        let lam = WeightSeq::binary_example();
        let q = exact_joint_mixture(&mix, &lam, 2).unwrap();
        let a = exact_joint_weighted_iid(mix.component(0), &lam, 2).unwrap();
        let b = exact_joint_weighted_iid(mix.component(1), &lam, 2).unwrap();
        for idx in 0..4 {
            assert!((q.table()[idx] - (0.25 * a.table()[idx] + 0.75 * b.table()[idx])).abs() < 1e-12);
        }
        assert!(matches!(
            MixtureSpec::from_linear(&[(vec![1.0, 1.0], 0.5), (vec![1.0, 1.0], 0.6)]),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn single_component_matches_plain_sampler() {
        let base = Measure::from_linear(&[0.2, 0.5, 0.3]).unwrap();
        let lam = WeightSeq::cyclic_default(3, 0.3).unwrap();
        let src = RandomSource::new(77);
        let a = sample_weighted_iid(&base, &lam, 200, &src).unwrap();
        let b = sample_mixture(&MixtureSpec::single(base).unwrap(), &lam, 200, &src).unwrap();
        assert_eq!(a.symbols, b.symbols);
        assert_eq!(b.drawn_component, Some(0));
    }

    #[test]
    fn component_draw_frequency() {
        let mix = MixtureSpec::from_linear(&[(vec![0.95, 0.05], 0.5), (vec![0.05, 0.95], 0.5)]).unwrap();
        let lam = WeightSeq::constant(WeightFn::ones(2));
        let runs = 10_000;
        let ones = (0..runs)
            .filter(|&s| sample_mixture(&mix, &lam, 1, &RandomSource::new(s)).unwrap().drawn_component == Some(1))
            .count();
        let sd = (0.25f64 / runs as f64).sqrt();
        assert!((ones as f64 / runs as f64 - 0.5).abs() < 3.0 * sd);
    }

    #[test]
    fn example1_tables() {
        let q2 = example1_joint(2).unwrap();
        assert_eq!(q2.table(), &[0.25, 0.25, 0.5, 0.0]);
        assert_eq!(example1_joint(1).unwrap().table(), &[0.5, 0.5]);
        for n in 1..=12 {
            let q = example1_joint(n).unwrap();
            assert_eq!(q.table().iter().sum::<f64>(), 1.0);
            for (t, p) in q.iter() {
                if t.iter().filter(|&&x| x == 1).count() >= 2 {
                    assert_eq!(p, 0.0);
                }
            }
        }
    }

    #[test]
    fn example1_sampler_law() {
        let draws = 100_000u64;
        let mut hist = [0usize; 4];
        for s in 0..draws {
            let run = example1_sample(3, &RandomSource::new(s));
            assert!(run.symbols.iter().filter(|&&x| x == 1).count() <= 1);
            let pos = run.symbols.iter().position(|&x| x == 1).map_or(3, |p| p);
            hist[pos] += 1;
        }
        let probs = [0.5, 0.25, 0.125, 0.125];
        let chi2: f64 = hist
            .iter()
            .zip(probs)
            .map(|(&o, p)| {
                let e = p * draws as f64;
                (o as f64 - e).powi(2) / e
            })
            .sum();
        assert!(chi2 < ChiSquared::new(3.0).unwrap().inverse_cdf(0.999));
    }

    #[test]
    fn chi_square_goodness_of_fit() {
        let cases: Vec<(Measure, WeightSeq, usize)> = vec![
            (Measure::from_linear(&[0.3, 0.7]).unwrap(), WeightSeq::binary_example(), 3),
            (Measure::from_linear(&[0.2, 0.5, 0.3]).unwrap(), WeightSeq::cyclic_default(3, 1.0).unwrap(), 3),
            (
                Measure::uniform(3),
                WeightSeq::bounded_ratio(vec![wf(&[1.0, 2.0, 0.5]), wf(&[2.0, 1.0, 1.0])]).unwrap(),
                2,
            ),
        ];
        let draws = 100_000u64;
        for (case, (base, lam, n)) in cases.into_iter().enumerate() {
            let q = exact_joint_weighted_iid(&base, &lam, n).unwrap();
            let mut counts = vec![0usize; q.len()];
            for s in 0..draws {
                let run = sample_weighted_iid(&base, &lam, n, &RandomSource::new(1000 * case as u64 + s)).unwrap();
                counts[q.encode(&run.symbols)] += 1;
            }
            let mut chi2 = 0.0;
            let mut cells = 0;
            for (&o, &p) in counts.iter().zip(q.table()) {
                if p > 0.0 {
                    let e = p * draws as f64;
                    chi2 += (o as f64 - e).powi(2) / e;
                    cells += 1;
                }
            }
            let crit = ChiSquared::new((cells - 1) as f64).unwrap().inverse_cdf(0.999);
            assert!(chi2 < crit, "case {case}: {chi2} >= {crit}");
        }
    }

    #[test]
    fn count_distribution_matches_enumeration() {
        let base = Measure::from_linear(&[0.4, 0.6]).unwrap();
        let lam = WeightSeq::binary_example();
        let q = exact_joint_weighted_iid(&base, &lam, 5).unwrap();
        let event = EventSpec::CountOfSymbolAtLeast { symbol: 1, count: 2 };
        let brute: f64 = q.iter().filter(|(t, _)| event.evaluate(t)).map(|(_, p)| p).sum();
        assert!((event_probability(&base, &lam, &event, 5).unwrap() - brute).abs() < 1e-14);
    }

    #[test]
    fn sample_text_round_trip() {
        let run = SampleRun {
            symbols: vec![0, 2, 1, 1],
            drawn_component: Some(1),
            seed: 99,
        };
        let text = run.to_text("abc").unwrap();
        assert!(text.starts_with('{'));
        let (back, header) = SampleRun::from_text(&text).unwrap();
        assert_eq!(back, run);
        assert_eq!(header.spec_hash, "abc");
        assert!(SampleRun::from_text("{\"seed\":1,\"spec_hash\":\"\",\"n\":2,\"drawn_component\":null}\n0\n").is_err());
    }
}
