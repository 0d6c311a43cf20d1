use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{total_variation, EventSpec, Measure};
use crate::sampler::MixtureSpec;
use crate::weights::{TailOptions, WeightFn, WeightSeq, WeightSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    CheckConditions,
    Verify,
    Lln,
    ZeroOne,
    Recover,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::CheckConditions => "check-conditions",
            Experiment::Verify => "verify",
            Experiment::Lln => "lln",
            Experiment::ZeroOne => "zero-one",
            Experiment::Recover => "recover",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub mass: Vec<f64>,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Absolute tolerance for enumeration checks.
    pub check: f64,
    /// Weighted-exchangeability tolerance for the single-one law.
    pub example1: f64,
    /// Bound on mean + sigma * sd of TV(tilde, target) at the largest n.
    pub lln_tv: f64,
    /// Bound on mean + sigma * sd of sup |bar - tilde| at the largest n.
    pub bar_tilde: f64,
    /// A replicate recovers its component when TV to it is at most this.
    pub recover_tv: f64,
    /// ..and TV to every other component is at least this.
    pub recover_reject: f64,
    /// Required fraction of successful replicates.
    pub success_rate: f64,
    /// Width of statistical bands in standard deviations.
    pub sigma: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            check: 1e-9,
            example1: 1e-12,
            lln_tv: 0.02,
            bar_tilde: 0.02,
            recover_tv: 0.05,
            recover_reject: 0.2,
            success_rate: 0.9,
            sigma: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySettings {
    pub max_n: usize,
    pub alphabet_sizes: Vec<usize>,
    pub example1_n: usize,
    /// Mass moved between two tuples in the negative-control fixture.
    pub perturbation: f64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings {
            max_n: 6,
            alphabet_sizes: vec![2, 3],
            example1_n: 8,
            perturbation: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZeroOneSettings {
    /// Prefix length used for both the exact product and the simulated sequences.
    pub truncation: usize,
    /// Simulated sequences per seed.
    pub sequences: usize,
}

impl Default for ZeroOneSettings {
    fn default() -> Self {
        ZeroOneSettings {
            truncation: 40,
            sequences: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlnSettings {
    /// Prefix length for the permanent-weighted empirical distribution.
    pub permanent_n: usize,
    /// Coordinate `i` of that distribution.
    pub permanent_index: usize,
}

impl Default for LlnSettings {
    fn default() -> Self {
        LlnSettings {
            permanent_n: 12,
            permanent_index: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoverSettings {
    /// Minimum pairwise TV between mixture components.
    pub min_component_gap: f64,
}

impl Default for RecoverSettings {
    fn default() -> Self {
        RecoverSettings { min_component_gap: 0.4 }
    }
}

fn default_n_grid() -> Vec<usize> {
    vec![1_000, 10_000, 100_000]
}

fn default_replicates() -> usize {
    20
}

fn default_horizons() -> Vec<u64> {
    TailOptions::default().horizons
}

/// One experiment, fully described. Every optional field has an embedded
/// default, and the resolved config is echoed into the result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    pub weights: WeightSpec,
    /// Base measure as linear masses.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixture: Option<Vec<ComponentSpec>>,
    /// `lambda_*` for the recovery estimators; defaults to all ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Vec<f64>>,
    /// Extra `lambda_*` candidates for the sufficient condition.
    #[serde(default)]
    pub candidates: Vec<Vec<f64>>,
    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Defaults to `1..=replicates`.
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Partial-sum horizons reported next to tail verdicts.
    #[serde(default = "default_horizons")]
    pub horizons: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event: Option<EventSpec>,
    #[serde(default)]
    pub verify: VerifySettings,
    #[serde(default)]
    pub zero_one: ZeroOneSettings,
    #[serde(default)]
    pub lln: LlnSettings,
    #[serde(default)]
    pub recover: RecoverSettings,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        ExperimentConfig::from_json(&text)
    }

    /// Fills defaults, applies the seed offset and validates everything the
    /// experiment will touch. Nothing is computed from an unresolved config.
    pub fn resolve(mut self, experiment: Experiment, seed_offset: u64) -> Result<ResolvedConfig> {
        if let Some(e) = self.experiment {
            if e != experiment {
                return Err(Error::Config(format!("config is for `{}`, not `{}`", e.name(), experiment.name())));
            }
        }
        self.experiment = Some(experiment);
        if self.seeds.is_empty() {
            self.seeds = (1..=self.replicates as u64).collect();
        }
        for s in &mut self.seeds {
            *s = s.wrapping_add(seed_offset);
        }
        let lambda = self.weights.build()?;
        let k = lambda.alphabet_size();
        let need = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Error::Config(msg.to_string())) };

        need(self.replicates >= 1, "replicates must be at least 1")?;
        need(self.seeds.len() >= self.replicates, "seed list is shorter than the replicate count")?;
        need(!self.n_grid.is_empty(), "n_grid is empty")?;
        need(self.n_grid.windows(2).all(|w| w[0] < w[1]) && self.n_grid[0] >= 1, "n_grid must be strictly increasing and positive")?;
        let t = &self.tolerances;
        for (name, v) in [
            ("check", t.check),
            ("example1", t.example1),
            ("lln_tv", t.lln_tv),
            ("bar_tilde", t.bar_tilde),
            ("recover_tv", t.recover_tv),
            ("recover_reject", t.recover_reject),
            ("sigma", t.sigma),
        ] {
            need(v.is_finite() && v > 0.0, &format!("tolerance `{name}` must be positive"))?;
        }
        need(t.success_rate > 0.0 && t.success_rate <= 1.0, "success_rate must lie in (0, 1]")?;

        let base = match &self.base {
            Some(b) => Some(Measure::from_linear(b)?),
            None => None,
        };
        if let Some(b) = &base {
            need(b.len() == k, "base measure and weights have different alphabet sizes")?;
            need(b.is_valid_base(), "base measure has zero total mass")?;
        }
        let mixture = match &self.mixture {
            Some(cs) => {
                let parts: Vec<(Vec<f64>, f64)> = cs.iter().map(|c| (c.mass.clone(), c.prob)).collect();
                let m = MixtureSpec::from_linear(&parts)?;
                need(m.alphabet_size() == k, "mixture and weights have different alphabet sizes")?;
                Some(m)
            }
            None => None,
        };
        let reference = match &self.reference {
            Some(r) => WeightFn::from_linear(r)?,
            None => WeightFn::ones(k),
        };
        need(reference.len() == k, "reference and weights have different alphabet sizes")?;
        let mut candidates = crate::conditions::default_candidates(&lambda);
        for c in &self.candidates {
            let w = WeightFn::from_linear(c)?;
            need(w.len() == k, "candidate and weights have different alphabet sizes")?;
            candidates.push(w);
        }
        if let Some(e) = &self.event {
            need(e.symbol() < k, "event symbol outside the alphabet")?;
        }

        match experiment {
            Experiment::CheckConditions => {}
            Experiment::Verify => {
                let v = &self.verify;
                need((1..=8).contains(&v.max_n), "verify.max_n must lie in 1..=8")?;
                need(!v.alphabet_sizes.is_empty() && v.alphabet_sizes.iter().all(|&a| (2..=3).contains(&a)), "verify.alphabet_sizes must be 2 or 3")?;
                need((1..=16).contains(&v.example1_n), "verify.example1_n must lie in 1..=16")?;
                need(v.perturbation > 0.0 && v.perturbation < 1.0, "verify.perturbation must lie in (0, 1)")?;
            }
            Experiment::Lln => {
                need(base.is_some(), "lln needs a base measure")?;
                need(self.lln.permanent_n >= 1 && self.lln.permanent_n <= crate::perm::MAX_WEIGHT_TABLE_N, "lln.permanent_n must lie in 1..=14")?;
                need(self.lln.permanent_index >= 1 && self.lln.permanent_index <= self.lln.permanent_n, "lln.permanent_index must lie in 1..=permanent_n")?;
                need(self.lln.permanent_n <= self.n_grid[self.n_grid.len() - 1], "lln.permanent_n exceeds the largest n")?;
            }
            Experiment::ZeroOne => {
                need(base.is_some(), "zero-one needs a base measure")?;
                need(self.zero_one.truncation >= 1 && self.zero_one.sequences >= 1, "zero_one settings must be positive")?;
            }
            Experiment::Recover => {
                need(mixture.is_some() || base.is_some(), "recover needs a mixture or a base measure")?;
                if let Some(m) = &mixture {
                    let comps = (0..m.len()).map(|c| m.component(c).normalize()).collect::<Result<Vec<_>>>()?;
                    for a in 0..comps.len() {
                        for b in a + 1..comps.len() {
                            let gap = total_variation(&comps[a], &comps[b])?;
                            need(
                                gap >= self.recover.min_component_gap,
                                &format!("components {a} and {b} are only {gap:.3} apart in TV"),
                            )?;
                        }
                    }
                }
            }
        }
        let mixture = match (mixture, &base) {
            (Some(m), _) => Some(m),
            (None, Some(b)) if experiment == Experiment::Recover => Some(MixtureSpec::single(b.clone())?),
            _ => None,
        };
        Ok(ResolvedConfig {
            experiment,
            raw: self,
            lambda,
            base,
            mixture,
            reference,
            candidates,
        })
    }
}

/// A validated config with its parsed objects.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub experiment: Experiment,
    pub raw: ExperimentConfig,
    pub lambda: WeightSeq,
    pub base: Option<Measure>,
    pub mixture: Option<MixtureSpec>,
    pub reference: WeightFn,
    pub candidates: Vec<WeightFn>,
}

impl ResolvedConfig {
    pub fn seeds(&self) -> &[u64] {
        &self.raw.seeds[..self.raw.replicates]
    }

    pub fn tail_options(&self) -> TailOptions {
        TailOptions {
            horizons: self.raw.horizons.clone(),
        }
    }

    /// Canonical JSON of the resolved config.
    pub fn canonical_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.raw)?)
    }

    /// SHA-256 of the canonical JSON, hex encoded.
    pub fn hash(&self) -> Result<String> {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.canonical_json()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(s).unwrap()
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse(r#"{"weights": {"family": "binary_example"}}"#);
        let r = c.resolve(Experiment::CheckConditions, 0).unwrap();
        assert_eq!(r.raw.seeds, (1..=20).collect::<Vec<u64>>());
        assert_eq!(r.candidates.len(), 2);
        assert_eq!(r.raw.experiment, Some(Experiment::CheckConditions));
        assert_eq!(r.hash().unwrap().len(), 64);
    }

    #[test]
    fn seed_offset_shifts_seeds_and_hash() {
        let c = parse(r#"{"weights": {"family": "binary_example"}, "seeds": [5, 6], "replicates": 2}"#);
        let a = c.clone().resolve(Experiment::CheckConditions, 0).unwrap();
        let b = c.resolve(Experiment::CheckConditions, 10).unwrap();
        assert_eq!(b.seeds(), &[15, 16]);
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
    }

    #[test]
    fn malformed_configs_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"weights": {"family": "nope"}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"weights": {"family": "binary_example"}, "typo": 1}"#).is_err());
        let bad = [
            (r#"{"weights": {"family": "binary_example"}, "seeds": [1], "replicates": 2}"#, Experiment::CheckConditions),
            (r#"{"weights": {"family": "binary_example"}, "n_grid": [10, 5]}"#, Experiment::CheckConditions),
            (r#"{"weights": {"family": "binary_example"}}"#, Experiment::Lln),
            (r#"{"weights": {"family": "binary_example"}, "base": [1, 1, 1]}"#, Experiment::ZeroOne),
            (r#"{"experiment": "lln", "weights": {"family": "binary_example"}}"#, Experiment::Verify),
            (
                r#"{"weights": {"family": "constant", "weights": [1, 1]}, "mixture": [{"mass": [0.5, 0.5], "prob": 0.5}, {"mass": [0.6, 0.4], "prob": 0.5}]}"#,
                Experiment::Recover,
            ),
        ];
        for (text, exp) in bad {
            assert!(matches!(parse(text).resolve(exp, 0), Err(Error::Config(_)) | Err(Error::NotNormalized { .. })), "{text}");
        }
    }
}
