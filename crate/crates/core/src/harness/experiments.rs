use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{Experiment, ExperimentConfig, ResolvedConfig};
use super::{mean_sd, to_pretty_json, Criterion, ExitStatus, ExperimentResult, Outcome, OutputFile, VERSION};
use crate::check::{
    conditional_law_check_all, factor_as_weighted_iid, is_weighted_exchangeable, weighted_swap_check_all, CheckReport, Witness,
};
use crate::conditions::{check_conditions, necessary_report};
use crate::error::{Error, Result};
use crate::model::{reweight, total_variation, Dist, EventSpec, JointDist, Measure, RandomSource, Symbol};
use crate::perm::weighted_empirical_perm;
use crate::recovery::{extract_subsequence, recover_component, TildeAccumulator};
use crate::sampler::{
    coordinate_law, event_probability, example1_joint, exact_joint_mixture, exact_joint_weighted_iid, sample_mixture,
    sample_weighted_iid, MixtureSpec,
};
use crate::weights::{WeightFn, WeightSeq};

/// Runs `experiment` from a parsed config.
pub fn run(experiment: Experiment, config: ExperimentConfig, seed_offset: u64) -> Result<Outcome> {
    let rc = config.resolve(experiment, seed_offset)?;
    match experiment {
        Experiment::CheckConditions => run_check_conditions(&rc),
        Experiment::Verify => run_verify(&rc),
        Experiment::Lln => run_lln(&rc),
        Experiment::ZeroOne => run_zero_one(&rc),
        Experiment::Recover => run_recover(&rc),
    }
}

fn finish(
    rc: &ResolvedConfig,
    records: Vec<Value>,
    aggregate: BTreeMap<String, Value>,
    criteria: Vec<Criterion>,
    files: Vec<OutputFile>,
) -> Result<Outcome> {
    let passed = criteria.iter().all(|c| c.passed);
    let result = ExperimentResult {
        experiment: rc.experiment.name().to_string(),
        version: VERSION.to_string(),
        config_hash: rc.hash()?,
        config: rc.raw.clone(),
        records,
        aggregate,
        criteria,
        passed,
    };
    let stdout = to_pretty_json(&summary(&result))?;
    Ok(Outcome {
        result,
        files,
        status: if passed { ExitStatus::Pass } else { ExitStatus::CriteriaFailed },
        stdout,
    })
}

fn summary(r: &ExperimentResult) -> Value {
    json!({
        "experiment": r.experiment,
        "config_hash": r.config_hash,
        "aggregate": r.aggregate,
        "criteria": r.criteria,
        "passed": r.passed,
    })
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn csv_text<R: Serialize>(rows: &[R]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::SampleFormat(e.to_string()))
}

fn base_of(rc: &ResolvedConfig) -> Result<&Measure> {
    rc.base.as_ref().ok_or_else(|| Error::Config("a base measure is required".into()))
}

pub fn run_check_conditions(rc: &ResolvedConfig) -> Result<Outcome> {
    let report = check_conditions(&rc.lambda, &rc.candidates, &rc.tail_options())?;
    let definitive = report.conclusion.is_definitive();
    let mut aggregate = BTreeMap::new();
    aggregate.insert("family".into(), json!(report.family));
    aggregate.insert("conclusion".into(), to_value(&report.conclusion)?);
    let report_json = to_pretty_json(&report)?;
    let mut out = finish(
        rc,
        vec![to_value(&report)?],
        aggregate,
        vec![Criterion::holds("definitive_verdict", definitive)],
        vec![OutputFile {
            name: "condition_report.json".into(),
            contents: report_json.clone(),
        }],
    )?;
    out.status = if definitive { ExitStatus::Pass } else { ExitStatus::Unknown };
    out.stdout = report_json;
    Ok(out)
}

fn wf(v: &[f64]) -> WeightFn {
    WeightFn::from_linear(v).expect("built-in weights are positive")
}

/// Built-in weight families on an alphabet of size `k` (2 or 3).
pub(crate) fn builtin_families(k: usize) -> Vec<(String, WeightSeq)> {
    let mut out = Vec::new();
    match k {
        2 => {
            out.push(("constant".to_string(), WeightSeq::constant(wf(&[1.0, 3.0]))));
            out.push(("binary_example".to_string(), WeightSeq::binary_example()));
            out.push((
                "geometric_tilt".to_string(),
                WeightSeq::geometric_tilt(&wf(&[1.0, 2.0]), &wf(&[0.8, 1.1])).expect("sizes match"),
            ));
            out.push((
                "bounded_ratio".to_string(),
                WeightSeq::bounded_ratio(vec![wf(&[1.0, 2.0]), wf(&[2.0, 1.0]), wf(&[1.0, 1.0])]).expect("valid table"),
            ));
        }
        3 => {
            out.push(("constant".to_string(), WeightSeq::constant(wf(&[1.0, 2.0, 3.0]))));
            out.push(("cyclic_partition".to_string(), WeightSeq::cyclic_default(3, 1.0).expect("valid partition")));
            out.push((
                "geometric_tilt".to_string(),
                WeightSeq::geometric_tilt(&wf(&[1.0, 1.0, 2.0]), &wf(&[1.0, 0.5, 0.8])).expect("sizes match"),
            ));
            out.push((
                "bounded_ratio".to_string(),
                WeightSeq::bounded_ratio(vec![wf(&[1.0, 2.0, 0.5]), wf(&[2.0, 1.0, 1.0]), wf(&[1.0, 1.0, 3.0])])
                    .expect("valid table"),
            ));
        }
        _ => {}
    }
    out
}

fn verify_bases(k: usize) -> (Measure, Measure) {
    let (a, b): (Vec<f64>, Vec<f64>) = match k {
        2 => (vec![0.35, 0.65], vec![0.9, 0.1]),
        _ => (vec![0.2, 0.3, 0.5], vec![0.6, 0.3, 0.1]),
    };
    (Measure::from_linear(&a).expect("positive"), Measure::from_linear(&b).expect("positive"))
}

#[derive(Debug, Clone, Serialize)]
struct CheckRecord {
    suite: String,
    family: String,
    k: usize,
    n: usize,
    check: String,
    passed: bool,
    max_violation: f64,
    tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<Witness>,
}

impl CheckRecord {
    fn from_report(suite: &str, family: &str, k: usize, n: usize, r: CheckReport) -> Self {
        CheckRecord {
            suite: suite.to_string(),
            family: family.to_string(),
            k,
            n,
            check: r.check,
            passed: r.passed,
            max_violation: r.max_violation,
            tolerance: r.tolerance,
            witness: r.witness,
        }
    }
}

#[derive(Debug, Clone)]
struct VerifyJob {
    suite: &'static str,
    family: String,
    lambda: WeightSeq,
    k: usize,
    n: usize,
}

fn product_checks(job: &VerifyJob, tol: f64, example1_tol: Option<f64>) -> Result<Vec<CheckRecord>> {
    let (p, p2) = verify_bases(job.k);
    let rec = |r: CheckReport| CheckRecord::from_report(job.suite, &job.family, job.k, job.n, r);
    let mut out = Vec::new();
    match job.suite {
        "product" => {
            let q = exact_joint_weighted_iid(&p, &job.lambda, job.n)?;
            out.push(rec(is_weighted_exchangeable(&q, &job.lambda, tol)?));
            out.push(rec(weighted_swap_check_all(&q, &job.lambda, tol)?));
            out.push(rec(conditional_law_check_all(&q, &job.lambda, tol)?));
            let f = factor_as_weighted_iid(&q, &job.lambda, tol)?;
            let truth = p.normalize()?;
            let gap = match &f.base {
                Some(b) => total_variation(b, &truth)?,
                None => f64::INFINITY,
            };
            out.push(rec(CheckReport {
                check: "factorization_recovers_base".into(),
                passed: gap <= tol,
                max_violation: gap,
                tolerance: tol,
                witness: None,
            }));
        }
        "mixture" => {
            let mix = MixtureSpec::new(vec![(p, 0.4), (p2, 0.6)])?;
            let q = exact_joint_mixture(&mix, &job.lambda, job.n)?;
            out.push(rec(is_weighted_exchangeable(&q, &job.lambda, tol)?));
            out.push(rec(weighted_swap_check_all(&q, &job.lambda, tol)?));
            out.push(rec(conditional_law_check_all(&q, &job.lambda, tol)?));
        }
        "example1" => {
            let q = example1_joint(job.n)?;
            let e1_tol = example1_tol.unwrap_or(tol);
            out.push(rec(is_weighted_exchangeable(&q, &job.lambda, e1_tol)?));
            out.push(rec(conditional_law_check_all(&q, &job.lambda, tol)?));
        }
        _ => unreachable!("unknown verify suite"),
    }
    Ok(out)
}

/// Single-one joint with `eps` of the mass of `e_1` moved onto `e_2`.
fn perturbed_example1(n: usize, eps: f64) -> Result<JointDist> {
    let q = example1_joint(n)?;
    let mut table = q.table().to_vec();
    let mut e1 = vec![0; n];
    e1[0] = 1;
    let mut e2 = vec![0; n];
    e2[1] = 1;
    let (a, b) = (q.encode(&e1), q.encode(&e2));
    let moved = eps * table[a];
    table[a] -= moved;
    table[b] += moved;
    JointDist::new(2, n, table)
}

pub fn run_verify(rc: &ResolvedConfig) -> Result<Outcome> {
    let v = &rc.raw.verify;
    let tol = rc.raw.tolerances.check;
    let mut jobs = Vec::new();
    for &k in &v.alphabet_sizes {
        let mut families = builtin_families(k);
        if rc.lambda.alphabet_size() == k {
            families.push(("config".to_string(), rc.lambda.clone()));
        }
        for suite in ["product", "mixture"] {
            for (name, lam) in &families {
                for n in 1..=v.max_n {
                    jobs.push(VerifyJob {
                        suite,
                        family: name.clone(),
                        lambda: lam.clone(),
                        k,
                        n,
                    });
                }
            }
        }
    }
    let binary = WeightSeq::binary_example();
    for n in 1..=v.max_n.min(v.example1_n) {
        jobs.push(VerifyJob {
            suite: "example1",
            family: "binary_example".into(),
            lambda: binary.clone(),
            k: 2,
            n,
        });
    }
    let e1_tol = rc.raw.tolerances.example1;
    let chunks = jobs
        .par_iter()
        .map(|j| product_checks(j, tol, (j.suite == "example1").then_some(e1_tol)))
        .collect::<Result<Vec<_>>>()?;
    let mut records: Vec<CheckRecord> = chunks.into_iter().flatten().collect();

    // Single-one law beyond the conditional-law range: exchangeability and absent factorization.
    for n in 1..=v.example1_n {
        let q = example1_joint(n)?;
        if n > v.max_n {
            records.push(CheckRecord::from_report("example1", "binary_example", 2, n, is_weighted_exchangeable(&q, &binary, e1_tol)?));
        }
        if n >= 2 {
            let f = factor_as_weighted_iid(&q, &binary, tol)?;
            records.push(CheckRecord {
                suite: "example1".into(),
                family: "binary_example".into(),
                k: 2,
                n,
                check: "factorization_absent".into(),
                passed: f.base.is_none(),
                max_violation: f.max_violation,
                tolerance: tol,
                witness: f.witness.map(|t| Witness {
                    tuple: t,
                    transposition: None,
                    coordinate: None,
                }),
            });
        }
    }

    // Negative control: a perturbed fixture must be rejected with a witness.
    let control_n = v.max_n.clamp(2, 4);
    let bad = perturbed_example1(control_n, v.perturbation)?;
    let control = is_weighted_exchangeable(&bad, &binary, tol)?;
    let control_ok = !control.passed && control.witness.is_some();

    let failed: Vec<&CheckRecord> = records.iter().filter(|r| !r.passed).collect();
    // Largest violation among checks that pass by staying under their tolerance.
    let worst = records
        .iter()
        .filter(|r| r.check != "factorization_absent")
        .map(|r| r.max_violation)
        .fold(0.0, f64::max);
    let mut aggregate = BTreeMap::new();
    aggregate.insert("checks".into(), json!(records.len()));
    aggregate.insert("failed".into(), json!(failed.len()));
    aggregate.insert("max_violation".into(), json!(worst));
    aggregate.insert("negative_control".into(), to_value(&CheckRecord::from_report("negative_control", "binary_example", 2, control_n, control))?);
    let criteria = vec![
        Criterion::holds("all_checks_pass", failed.is_empty()),
        Criterion::holds("negative_control_rejected", control_ok),
    ];
    let values = records.iter().map(to_value).collect::<Result<Vec<_>>>()?;
    finish(rc, values, aggregate, criteria, Vec::new())
}

#[derive(Debug, Clone, Serialize)]
struct LlnRow {
    replicate: usize,
    seed: u64,
    n: usize,
    symbol: Symbol,
    tilde_value: f64,
    bar_value: f64,
    target_value: f64,
}

#[derive(Debug, Clone, Serialize)]
struct PermanentRow {
    replicate: usize,
    seed: u64,
    n: usize,
    i: usize,
    symbol: Symbol,
    perm_value: f64,
    target_value: f64,
}

struct LlnReplicate {
    rows: Vec<LlnRow>,
    perm_rows: Vec<PermanentRow>,
    /// Per grid point: (TV to target, sup |bar - tilde|, accepted count).
    stats: Vec<(f64, f64, usize)>,
    perm_tv: f64,
}

fn lln_replicate(rc: &ResolvedConfig, base: &Measure, target: &Dist, replicate: usize, seed: u64) -> Result<LlnReplicate> {
    let grid = &rc.raw.n_grid;
    let n_max = grid[grid.len() - 1];
    let k = rc.lambda.alphabet_size();
    let src = RandomSource::new(seed);
    let run = sample_weighted_iid(base, &rc.lambda, n_max, &src)?;
    let xs = &run.symbols;
    let (trace, sub) = extract_subsequence(xs, &rc.lambda, &rc.reference, &src.derive(1))?;

    let mut acc = TildeAccumulator::new(&rc.lambda, &rc.reference)?;
    let mut rows = Vec::new();
    let mut stats = Vec::new();
    let mut next = 0;
    for (j, &x) in xs.iter().enumerate() {
        acc.push(x)?;
        if j + 1 == grid[next] {
            let n = j + 1;
            let tilde = acc.current()?;
            let m = trace.counts[n - 1];
            let bar = Dist::empirical(k, &sub[..m]).map_err(|_| Error::NoAcceptances)?;
            let tv = total_variation(&tilde, target)?;
            let sup = (0..k).map(|s| (bar.prob(s) - tilde.prob(s)).abs()).fold(0.0, f64::max);
            for s in 0..k {
                rows.push(LlnRow {
                    replicate,
                    seed,
                    n,
                    symbol: s,
                    tilde_value: tilde.prob(s),
                    bar_value: bar.prob(s),
                    target_value: target.prob(s),
                });
            }
            stats.push((tv, sup, m));
            next += 1;
            if next == grid.len() {
                break;
            }
        }
    }

    let pn = rc.raw.lln.permanent_n;
    let pi = rc.raw.lln.permanent_index;
    let perm = weighted_empirical_perm(&rc.lambda.prefix(pn), &xs[..pn], pi)?;
    let perm_target = coordinate_law(base, &rc.lambda, pi)?;
    let perm_rows = (0..k)
        .map(|s| PermanentRow {
            replicate,
            seed,
            n: pn,
            i: pi,
            symbol: s,
            perm_value: perm.prob(s),
            target_value: perm_target.prob(s),
        })
        .collect();
    Ok(LlnReplicate {
        rows,
        perm_rows,
        stats,
        perm_tv: total_variation(&perm, &perm_target)?,
    })
}

pub fn run_lln(rc: &ResolvedConfig) -> Result<Outcome> {
    let base = base_of(rc)?;
    let target = reweight(base, &rc.reference)?;
    let seeds = rc.seeds();
    let reps = seeds
        .par_iter()
        .enumerate()
        .map(|(r, &seed)| lln_replicate(rc, base, &target, r + 1, seed))
        .collect::<Result<Vec<_>>>()?;
    let t = &rc.raw.tolerances;
    let grid = &rc.raw.n_grid;

    let mut records = Vec::new();
    for (r, rep) in reps.iter().enumerate() {
        for (g, &(tv, sup, m)) in rep.stats.iter().enumerate() {
            records.push(json!({
                "replicate": r + 1,
                "seed": seeds[r],
                "n": grid[g],
                "tv": tv,
                "bar_tilde_sup": sup,
                "accepted": m,
            }));
        }
    }
    let mut per_n = Vec::new();
    for (g, &n) in grid.iter().enumerate() {
        let tvs: Vec<f64> = reps.iter().map(|r| r.stats[g].0).collect();
        let sups: Vec<f64> = reps.iter().map(|r| r.stats[g].1).collect();
        let (tv_mean, tv_sd) = mean_sd(&tvs);
        let (sup_mean, sup_sd) = mean_sd(&sups);
        per_n.push(json!({
            "n": n,
            "tv_mean": tv_mean,
            "tv_sd": tv_sd,
            "tv_band": tv_mean + t.sigma * tv_sd,
            "bar_tilde_mean": sup_mean,
            "bar_tilde_sd": sup_sd,
            "bar_tilde_band": sup_mean + t.sigma * sup_sd,
        }));
    }
    let field = |v: &Value, k: &str| v[k].as_f64().unwrap_or(f64::NAN);
    let last = &per_n[per_n.len() - 1];
    let decreasing = per_n.windows(2).all(|w| field(&w[1], "tv_mean") < field(&w[0], "tv_mean"));
    let perm_tvs: Vec<f64> = reps.iter().map(|r| r.perm_tv).collect();
    let (perm_mean, perm_sd) = mean_sd(&perm_tvs);

    let mut aggregate = BTreeMap::new();
    aggregate.insert("per_n".into(), Value::Array(per_n.clone()));
    aggregate.insert("target".into(), json!(target.probs()));
    aggregate.insert(
        "permanent_path".into(),
        json!({"n": rc.raw.lln.permanent_n, "i": rc.raw.lln.permanent_index, "tv_mean": perm_mean, "tv_sd": perm_sd}),
    );
    let necessary = necessary_report(&rc.lambda, &rc.tail_options())?;
    aggregate.insert("necessary_condition".into(), to_value(&necessary.status)?);
    aggregate.insert(
        "band".into(),
        json!(format!("mean + {} * sample sd across {} replicates", t.sigma, seeds.len())),
    );
    let criteria = vec![
        Criterion::at_most("tv_at_largest_n", field(last, "tv_band"), t.lln_tv),
        Criterion::holds("tv_mean_decreasing", decreasing),
        Criterion::at_most("bar_tilde_sup_at_largest_n", field(last, "bar_tilde_band"), t.bar_tilde),
    ];

    let rows: Vec<&LlnRow> = reps.iter().flat_map(|r| &r.rows).collect();
    let perm_rows: Vec<&PermanentRow> = reps.iter().flat_map(|r| &r.perm_rows).collect();
    let files = vec![
        OutputFile {
            name: "lln_trace.csv".into(),
            contents: csv_text(&rows)?,
        },
        OutputFile {
            name: "lln_permanent.csv".into(),
            contents: csv_text(&perm_rows)?,
        },
    ];
    finish(rc, records, aggregate, criteria, files)
}

/// Numerical bound on `sum_{i > from} P(X_i = s)`; infinite when the terms
/// are not visibly summable.
fn coordinate_tail_mass(base: &Measure, lambda: &WeightSeq, s: Symbol, from: usize) -> Result<f64> {
    const MAX_TERMS: usize = 1_000_000;
    let mut sum = 0.0;
    let mut prev = f64::NAN;
    for i in from + 1..=from + MAX_TERMS {
        let q = coordinate_law(base, lambda, i)?.prob(s);
        sum += q;
        if q < 1e-300 {
            return Ok(sum);
        }
        // Geometric closure once the terms shrink by a fixed ratio.
        if i > from + 64 && prev > 0.0 {
            let ratio = q / prev;
            if ratio < 0.99 {
                let rest = q * ratio / (1.0 - ratio);
                if rest < 1e-3 * sum || rest < 1e-300 {
                    return Ok(sum + rest);
                }
            }
        }
        prev = q;
    }
    Ok(f64::INFINITY)
}

pub fn run_zero_one(rc: &ResolvedConfig) -> Result<Outcome> {
    let base = base_of(rc)?;
    let z = &rc.raw.zero_one;
    let t = &rc.raw.tolerances;
    let event = rc.raw.event.unwrap_or(EventSpec::CountOfSymbolAtLeast { symbol: 1, count: 1 });
    let truncation = z.truncation;
    let exact = event_probability(base, &rc.lambda, &event, truncation)?;
    let tail = coordinate_tail_mass(base, &rc.lambda, event.symbol(), truncation)?;

    let laws = (1..=truncation).map(|i| coordinate_law(base, &rc.lambda, i)).collect::<Result<Vec<_>>>()?;
    let seeds = rc.seeds();
    let sym = event.symbol();
    let hits: Vec<usize> = seeds
        .par_iter()
        .map(|&seed| {
            let mut rng = RandomSource::new(seed).stream(0);
            let mut hits = 0;
            for _ in 0..z.sequences {
                let count = laws.iter().filter(|d| d.sample_with(rng.gen::<f64>()) == sym).count();
                if event.holds_for_count(count) {
                    hits += 1;
                }
            }
            hits
        })
        .collect();
    let estimates: Vec<f64> = hits.iter().map(|&h| h as f64 / z.sequences as f64).collect();
    let (mean, sd) = mean_sd(&estimates);
    let se = sd / (seeds.len() as f64).sqrt();
    let deviation = (mean - exact).abs();
    let band = t.sigma * se;
    let records = seeds
        .iter()
        .zip(&estimates)
        .enumerate()
        .map(|(r, (&seed, &p))| json!({"replicate": r + 1, "seed": seed, "sequences": z.sequences, "estimate": p}))
        .collect();

    let inside = exact > 0.0 && exact + tail < 1.0 && exact - tail > 0.0;
    let mut aggregate = BTreeMap::new();
    aggregate.insert("event".into(), to_value(&event)?);
    aggregate.insert("truncation".into(), json!(truncation));
    aggregate.insert("exact_truncated".into(), json!(exact));
    aggregate.insert("tail_bound".into(), if tail.is_finite() { json!(tail) } else { Value::Null });
    aggregate.insert("mc_mean".into(), json!(mean));
    aggregate.insert("mc_sd".into(), json!(sd));
    aggregate.insert("mc_standard_error".into(), json!(se));
    aggregate.insert("zero_one_law_violated".into(), json!(inside));
    aggregate.insert(
        "band".into(),
        json!(format!("{} * sd / sqrt({}) of the per-seed estimates", t.sigma, seeds.len())),
    );
    let criteria = vec![
        Criterion::at_most("mc_deviation_from_exact", deviation, band),
        Criterion::holds("probability_strictly_inside_unit_interval", inside),
    ];
    finish(rc, records, aggregate, criteria, Vec::new())
}

#[derive(Debug, Clone, Serialize)]
struct ComponentRow {
    replicate: usize,
    seed: u64,
    drawn_component: usize,
    symbol: Symbol,
    tilde_value: f64,
    tilde_star_value: f64,
    truth_value: f64,
}

#[derive(Debug, Clone, Serialize)]
struct EdgeRow {
    replicate: usize,
    seed: u64,
    x: Symbol,
    x_prime: Symbol,
    ratio: Option<f64>,
    ess: f64,
}

struct RecoverReplicate {
    record: Value,
    success: bool,
    components: Vec<ComponentRow>,
    edges: Vec<EdgeRow>,
}

fn recover_replicate(rc: &ResolvedConfig, mix: &MixtureSpec, truths: &[Dist], n: usize, replicate: usize, seed: u64) -> Result<RecoverReplicate> {
    let t = &rc.raw.tolerances;
    let run = sample_mixture(mix, &rc.lambda, n, &RandomSource::new(seed))?;
    let drawn = run.drawn_component.unwrap_or(0);
    let rec = match recover_component(&run.symbols, &rc.lambda, &rc.reference) {
        Ok(r) => r,
        Err(e) => {
            return Ok(RecoverReplicate {
                record: json!({"replicate": replicate, "seed": seed, "drawn_component": drawn, "success": false, "error": e.to_string()}),
                success: false,
                components: Vec::new(),
                edges: Vec::new(),
            })
        }
    };
    let est = &rec.component.tilde_star;
    let tvs = truths.iter().map(|p| total_variation(est, p)).collect::<Result<Vec<_>>>()?;
    let close = tvs[drawn] <= t.recover_tv;
    let rejects = tvs.iter().enumerate().all(|(c, &d)| c == drawn || d >= t.recover_reject);
    let success = close && rejects;
    let k = rc.lambda.alphabet_size();
    let components = (0..k)
        .map(|s| ComponentRow {
            replicate,
            seed,
            drawn_component: drawn,
            symbol: s,
            tilde_value: rec.component.tilde.prob(s),
            tilde_star_value: est.prob(s),
            truth_value: truths[drawn].prob(s),
        })
        .collect();
    let edges = rec
        .edges
        .iter()
        .map(|e| EdgeRow {
            replicate,
            seed,
            x: e.x,
            x_prime: e.x_prime,
            ratio: e.ratio,
            ess: e.ess,
        })
        .collect();
    Ok(RecoverReplicate {
        record: json!({
            "replicate": replicate,
            "seed": seed,
            "drawn_component": drawn,
            "tv_to_components": tvs,
            "success": success,
            "complete_graph_fallback": rec.complete_graph_fallback,
            "component": rec.component,
        }),
        success,
        components,
        edges,
    })
}

pub fn run_recover(rc: &ResolvedConfig) -> Result<Outcome> {
    let mix = rc.mixture.as_ref().ok_or_else(|| Error::Config("recover needs a mixture".into()))?;
    let truths = (0..mix.len()).map(|c| mix.component(c).normalize()).collect::<Result<Vec<_>>>()?;
    let n = rc.raw.n_grid[rc.raw.n_grid.len() - 1];
    let seeds = rc.seeds();
    let reps = seeds
        .par_iter()
        .enumerate()
        .map(|(r, &seed)| recover_replicate(rc, mix, &truths, n, r + 1, seed))
        .collect::<Result<Vec<_>>>()?;
    let t = &rc.raw.tolerances;
    let successes = reps.iter().filter(|r| r.success).count();
    let rate = successes as f64 / reps.len() as f64;
    let mut draws = vec![0usize; mix.len()];
    for r in &reps {
        if let Some(c) = r.record["drawn_component"].as_u64() {
            draws[c as usize] += 1;
        }
    }
    let mut aggregate = BTreeMap::new();
    aggregate.insert("n".into(), json!(n));
    aggregate.insert("replicates".into(), json!(reps.len()));
    aggregate.insert("successes".into(), json!(successes));
    aggregate.insert("success_rate".into(), json!(rate));
    aggregate.insert("draws_per_component".into(), json!(draws));
    let criteria = vec![Criterion::at_least("success_rate", rate, t.success_rate)];
    let comp_rows: Vec<&ComponentRow> = reps.iter().flat_map(|r| &r.components).collect();
    let edge_rows: Vec<&EdgeRow> = reps.iter().flat_map(|r| &r.edges).collect();
    let files = vec![
        OutputFile {
            name: "recover_components.csv".into(),
            contents: csv_text(&comp_rows)?,
        },
        OutputFile {
            name: "recover_edges.csv".into(),
            contents: csv_text(&edge_rows)?,
        },
    ];
    let records = reps.into_iter().map(|r| r.record).collect();
    finish(rc, records, aggregate, criteria, files)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(s: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(s).unwrap()
    }

    #[test]
    fn check_conditions_exit_codes() {
        let out = run(Experiment::CheckConditions, cfg(r#"{"weights": {"family": "binary_example"}}"#), 0).unwrap();
        assert_eq!(out.status, ExitStatus::Pass);
        assert!(out.stdout.contains("in none of dF, 01, LLN"));
        let unknown = r#"{"weights": {"family": "custom", "table": [[1, 2], [2, 1]], "tail": "unspecified"}}"#;
        let out = run(Experiment::CheckConditions, cfg(unknown), 0).unwrap();
        assert_eq!(out.status, ExitStatus::Unknown);
    }

    #[test]
    fn small_verify_passes_and_control_fails() {
        let c = cfg(r#"{"weights": {"family": "binary_example"}, "verify": {"max_n": 3, "alphabet_sizes": [2], "example1_n": 4}}"#);
        let out = run(Experiment::Verify, c, 0).unwrap();
        assert!(out.result.passed, "{}", out.stdout);
        assert_eq!(out.result.aggregate["negative_control"]["passed"], json!(false));
    }

    #[test]
    fn small_lln_is_reproducible() {
        let text = r#"{"weights": {"family": "bounded_ratio", "table": [[1, 2], [2, 1]]}, "base": [0.3, 0.7],
            "n_grid": [100, 1000], "replicates": 3, "lln": {"permanent_n": 6}}"#;
        let a = run(Experiment::Lln, cfg(text), 0).unwrap();
        let b = run(Experiment::Lln, cfg(text), 0).unwrap();
        assert_eq!(to_pretty_json(&a.result).unwrap(), to_pretty_json(&b.result).unwrap());
        assert_eq!(a.files, b.files);
        assert!(a.files[0].contents.starts_with("replicate,seed,n,symbol,tilde_value,bar_value,target_value\n"));
        assert_eq!(a.files[0].contents.lines().count(), 1 + 3 * 2 * 2);
    }

    #[test]
    fn tail_mass_of_binary_example() {
        let base = Measure::uniform(2);
        let lam = WeightSeq::binary_example();
        let tail = coordinate_tail_mass(&base, &lam, 1, 40).unwrap();
        assert!(tail > 0.0 && tail < 0.5f64.powi(40), "{tail}");
        let c = WeightSeq::constant(WeightFn::ones(2));
        assert!(coordinate_tail_mass(&base, &c, 1, 40).unwrap().is_infinite());
    }

    #[test]
    fn small_recover_single_component() {
        let text = r#"{"weights": {"family": "bounded_ratio", "table": [[1, 2, 0.5], [2, 1, 1]]}, "base": [0.2, 0.3, 0.5],
            "n_grid": [20000], "replicates": 4}"#;
        let out = run(Experiment::Recover, cfg(text), 0).unwrap();
        assert!(out.result.passed, "{}", out.stdout);
        assert_eq!(out.files.len(), 2);
    }
}
