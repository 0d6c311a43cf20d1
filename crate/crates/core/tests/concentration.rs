use wexch::harness::mean_sd;
use wexch::model::RandomSource;
use wexch::recovery::tilde_empirical;
use wexch::sampler::example1_sample;
use wexch::weights::{WeightFn, WeightSeq};

// Under the single-one law the weighted empirical mass of 1 depends on where
// the one landed, so it does not settle on a common value across seeds.
#[test]
fn binary_weights_do_not_concentrate_under_the_single_one_law() {
    let lam = WeightSeq::binary_example();
    let ones = WeightFn::ones(2);
    let values: Vec<f64> = (1..=200)
        .map(|s| {
            let run = example1_sample(2_000, &RandomSource::new(s));
            tilde_empirical(&run.symbols, &lam, &ones).unwrap().prob(1)
        })
        .collect();
    let (mean, sd) = mean_sd(&values);
    assert!(sd > 0.05, "sd {sd}, mean {mean}");
    // With I = i the mass of 1 is 1 / (2 - 2^-i) up to 2^-n.
    for s in 1..=20u64 {
        let run = example1_sample(2_000, &RandomSource::new(s));
        let i = run.symbols.iter().position(|&x| x == 1).unwrap() + 1;
        let want = 1.0 / (2.0 - 0.5f64.powi(i as i32));
        let got = tilde_empirical(&run.symbols, &lam, &ones).unwrap().prob(1);
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
}

#[test]
fn constant_weights_concentrate() {
    let lam = WeightSeq::constant(WeightFn::ones(2));
    let base = wexch::model::Measure::from_linear(&[0.7, 0.3]).unwrap();
    let values: Vec<f64> = (1..=50)
        .map(|s| {
            let run = wexch::sampler::sample_weighted_iid(&base, &lam, 20_000, &RandomSource::new(s)).unwrap();
            tilde_empirical(&run.symbols, &lam, &WeightFn::ones(2)).unwrap().prob(1)
        })
        .collect();
    let (mean, sd) = mean_sd(&values);
    assert!((mean - 0.3).abs() < 0.01 && sd < 0.01, "{mean} {sd}");
}
