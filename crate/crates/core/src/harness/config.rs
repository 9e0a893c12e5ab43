//! Experiment configuration files.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::contextual::CoverConfig;
use crate::elim::GuessMode;
use crate::error::{Error, Result};
use crate::instance::{NoiseLaw, PayoffKind};

/// One learner to run on every seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Algorithm {
    ElimLoss,
    ElimReward,
    ElimMisspecified {
        epsilon: f64,
    },
    #[serde(rename_all = "camelCase")]
    ContextualReduction {
        /// Confidence level; `1 / T^2` when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
        /// Size of the random action subset revealed each round.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        context_set_size: Option<usize>,
    },
    Linucb {
        #[serde(default = "default_lambda")]
        lambda: f64,
    },
}

fn default_lambda() -> f64 {
    1.0
}

/// Default size of the per-round action subsets of the contextual reduction.
pub const DEFAULT_CONTEXT_SET_SIZE: usize = 10;

impl Algorithm {
    /// Name used in file names and output tables.
    pub fn label(&self) -> String {
        match self {
            Algorithm::ElimLoss => "elim-loss".into(),
            Algorithm::ElimReward => "elim-reward".into(),
            Algorithm::ElimMisspecified { epsilon } => format!("elim-misspecified-{epsilon}"),
            Algorithm::ContextualReduction { .. } => "contextual-reduction".into(),
            Algorithm::Linucb { lambda } => {
                if *lambda == 1.0 {
                    "linucb".into()
                } else {
                    format!("linucb-{lambda}")
                }
            }
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "elim-loss" => Algorithm::ElimLoss,
            "elim-reward" => Algorithm::ElimReward,
            "contextual-reduction" => Algorithm::ContextualReduction { delta: None, context_set_size: None },
            "linucb" => Algorithm::Linucb { lambda: 1.0 },
            _ => return None,
        })
    }
}

/// Accepts either a bare algorithm name or a tagged object.
#[derive(Deserialize)]
#[serde(untagged)]
enum AlgorithmRepr {
    Name(String),
    Full(Algorithm),
}

fn deserialize_algorithms<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec<Algorithm>, D::Error> {
    let raw = Vec::<AlgorithmRepr>::deserialize(d)?;
    raw.into_iter()
        .map(|r| match r {
            AlgorithmRepr::Full(a) => Ok(a),
            AlgorithmRepr::Name(n) => Algorithm::from_name(&n)
                .ok_or_else(|| serde::de::Error::custom(format!("unknown algorithm `{n}`"))),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "T")]
    pub t: u64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "payoffKind", default)]
    pub payoff_kind: PayoffKind,
    #[serde(deserialize_with = "deserialize_algorithms")]
    pub algorithms: Vec<Algorithm>,
    pub seeds: Vec<u64>,
    #[serde(rename = "BMode", default)]
    pub b_mode: GuessMode,
    #[serde(rename = "spannerBudget", default, skip_serializing_if = "Option::is_none")]
    pub spanner_budget: Option<usize>,
    #[serde(rename = "coverCfg", default)]
    pub cover_cfg: CoverConfig,
    #[serde(rename = "outputDir", default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(rename = "noiseLaw", default)]
    pub noise_law: NoiseLaw,
    /// Confidence-width coefficient of the elimination learners;
    /// `sqrt(2 ln(K T^3))` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    /// The synthetic study: `n`-dimensional instances with 50 actions,
    /// 16000 rounds, delay scale 1000, 8 seeds, elimination against LinUCB.
    pub fn default_study(n: usize) -> Self {
        Self {
            n,
            k: 50,
            t: 16000,
            d: 1000.0,
            payoff_kind: PayoffKind::Loss,
            algorithms: vec![Algorithm::ElimLoss, Algorithm::Linucb { lambda: 1.0 }],
            seeds: (0..8).collect(),
            b_mode: GuessMode::Ignored,
            spanner_budget: None,
            cover_cfg: CoverConfig::default(),
            output_dir: default_output_dir(),
            noise_law: NoiseLaw::Mixture,
            beta: None,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n == 0 || self.k == 0 {
            return bad("n and K must be at least 1".into());
        }
        if self.t == 0 {
            return bad("T must be at least 1".into());
        }
        if !(self.d >= 0.0) || !self.d.is_finite() {
            return bad(format!("D = {} must be finite and non-negative", self.d));
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.algorithms.is_empty() {
            return bad("at least one algorithm is required".into());
        }
        let mut labels: Vec<String> = self.algorithms.iter().map(Algorithm::label).collect();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return bad("algorithms must be distinct".into());
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        if seeds.windows(2).any(|w| w[0] == w[1]) {
            return bad("seeds must be distinct".into());
        }
        if self.beta.is_some_and(|b| !(b > 0.0) || !b.is_finite()) {
            return bad("beta must be positive".into());
        }
        if let Some(b) = self.spanner_budget {
            if b == 0 {
                return bad("spannerBudget must be positive".into());
            }
        }
        for a in &self.algorithms {
            match (a, self.payoff_kind) {
                (Algorithm::ElimLoss | Algorithm::ContextualReduction { .. }, PayoffKind::Reward) => {
                    return bad(format!("{} needs payoffKind = loss", a.label()));
                }
                (Algorithm::ElimReward, PayoffKind::Loss) => {
                    return bad("elim-reward needs payoffKind = reward".into());
                }
                (Algorithm::ElimMisspecified { epsilon }, _) if !(*epsilon >= 0.0) => {
                    return bad(format!("misspecification {epsilon} must be non-negative"));
                }
                (Algorithm::Linucb { lambda }, _) if !(*lambda > 0.0) => {
                    return bad(format!("LinUCB regularizer {lambda} must be positive"));
                }
                (Algorithm::ContextualReduction { delta, context_set_size }, _) => {
                    if delta.is_some_and(|d| !(d > 0.0 && d < 1.0)) {
                        return bad("contextual delta must lie in (0, 1)".into());
                    }
                    if context_set_size.is_some_and(|s| s == 0 || s > self.k) {
                        return bad("contextSetSize must lie in 1..=K".into());
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form, ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.output_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&canon).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "n": 6, "K": 50, "T": 16000, "D": 1000, "payoffKind": "loss",
        "algorithms": ["elim-loss", {"kind": "linucb", "lambda": 1.0},
                       {"kind": "elim-misspecified", "epsilon": 0.01},
                       {"kind": "contextual-reduction", "contextSetSize": 5}],
        "seeds": [0, 1, 2], "BMode": "ignored", "spannerBudget": 18,
        "coverCfg": {"resolution": 0.05, "cap": 256}, "outputDir": "out/default"
    }"#;

    #[test]
    fn parses_verbatim_field_names() {
        let c = ExperimentConfig::from_json(SAMPLE).unwrap();
        assert_eq!((c.n, c.k, c.t, c.d), (6, 50, 16000, 1000.0));
        assert_eq!(c.algorithms.len(), 4);
        assert_eq!(c.algorithms[3], Algorithm::ContextualReduction { delta: None, context_set_size: Some(5) });
        assert_eq!(c.spanner_budget, Some(18));
        assert_eq!(c.cover_cfg.cap, 256);
        let back = ExperimentConfig::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_bad_configs() {
        for (from, to) in [
            ("\"seeds\": [0, 1, 2]", "\"seeds\": []"),
            ("\"T\": 16000", "\"T\": 0"),
            ("\"D\": 1000", "\"D\": -1"),
            ("\"payoffKind\": \"loss\"", "\"payoffKind\": \"reward\""),
            ("\"elim-loss\"", "\"elim-whatever\""),
            ("\"n\": 6", "\"n\": 6, \"bogus\": 1"),
        ] {
            let s = SAMPLE.replace(from, to);
            assert!(matches!(ExperimentConfig::from_json(&s), Err(Error::Config(_))), "{to}");
        }
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = ExperimentConfig::default_study(6);
        let mut b = a.clone();
        b.output_dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.t = 100;
        assert_ne!(a.hash(), b.hash());
    }
}
