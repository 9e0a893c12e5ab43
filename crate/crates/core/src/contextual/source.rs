//! Distributions over finite action sets.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{best_index, ActionVector, PayoffKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ContextSource {
    /// The same action set every round.
    Fixed { set: Vec<ActionVector> },
    /// One of several sets, drawn with the given weights.
    Mixture { sets: Vec<Vec<ActionVector>>, weights: Vec<f64> },
    /// A uniformly random `size`-subset of `pool`, drawn fresh each round.
    Subsets { pool: Vec<ActionVector>, size: usize },
}

impl ContextSource {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        match self {
            ContextSource::Fixed { set } if set.is_empty() => bad("fixed context set is empty"),
            ContextSource::Mixture { sets, weights } => {
                if sets.is_empty() || sets.len() != weights.len() || sets.iter().any(|s| s.is_empty()) {
                    bad("mixture needs one positive weight per non-empty set")
                } else if weights.iter().any(|w| !(*w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
                    bad("mixture weights must be non-negative and not all zero")
                } else {
                    Ok(())
                }
            }
            ContextSource::Subsets { pool, size } if *size == 0 || *size > pool.len() => {
                bad("subset size must lie in 1..=pool size")
            }
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ContextSource::Fixed { set } => set[0].dim(),
            ContextSource::Mixture { sets, .. } => sets[0][0].dim(),
            ContextSource::Subsets { pool, .. } => pool[0].dim(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<ActionVector> {
        match self {
            ContextSource::Fixed { set } => set.clone(),
            ContextSource::Mixture { sets, weights } => {
                let total: f64 = weights.iter().sum();
                let mut x = rng.random::<f64>() * total;
                for (s, w) in sets.iter().zip(weights) {
                    if x < *w {
                        return s.clone();
                    }
                    x -= w;
                }
                sets.last().expect("validated non-empty").clone()
            }
            ContextSource::Subsets { pool, size } => {
                let mut idx = sample(rng, pool.len(), *size).into_vec();
                idx.sort_unstable();
                idx.into_iter().map(|i| pool[i].clone()).collect()
            }
        }
    }

    /// Population average of the per-set argmin under `theta`, when it can
    /// be computed exactly.
    pub fn expected_argmin(&self, theta: &[f64]) -> Option<Vec<f64>> {
        let argmin = |set: &[ActionVector]| {
            let i = best_index(set.iter().map(|a| a.dot(theta)), PayoffKind::Loss).expect("non-empty set");
            set[i].coords().to_vec()
        };
        match self {
            ContextSource::Fixed { set } => Some(argmin(set)),
            ContextSource::Mixture { sets, weights } => {
                let total: f64 = weights.iter().sum();
                let mut acc = vec![0.0; self.dim()];
                for (s, w) in sets.iter().zip(weights) {
                    acc.iter_mut().zip(argmin(s)).for_each(|(a, x)| *a += w / total * x);
                }
                Some(acc)
            }
            ContextSource::Subsets { .. } => None,
        }
    }
}
