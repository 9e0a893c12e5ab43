//! Bandit instances, payoff laws and the ground-truth gap oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::TOL;

/// A point of the non-negative orthant inside the unit ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ActionVector(Vec<f64>);

impl ActionVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidInstance("empty vector".into()));
        }
        if let Some(c) = coords.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::InvalidInstance(format!("coordinate {c} is not a non-negative real")));
        }
        let nrm = norm(&coords);
        if nrm > 1.0 + TOL {
            return Err(Error::InvalidInstance(format!("norm {nrm} exceeds 1")));
        }
        Ok(Self(coords))
    }

    /// Rescales a non-negative, non-zero vector to unit norm.
    pub fn normalized(mut coords: Vec<f64>) -> Result<Self> {
        let nrm = norm(&coords);
        if nrm == 0.0 || !nrm.is_finite() {
            return Err(Error::InvalidInstance("cannot normalize a zero vector".into()));
        }
        coords.iter_mut().for_each(|c| *c /= nrm);
        Self::new(coords)
    }

    pub fn basis(dim: usize, axis: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[axis] = 1.0;
        Self(v)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        dot(&self.0, other)
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

impl AsRef<[f64]> for ActionVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for ActionVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ActionVector> for Vec<f64> {
    fn from(v: ActionVector) -> Self {
        v.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PayoffKind {
    #[default]
    Loss,
    Reward,
}

/// Law of the realized payoff `u` given its mean. Every law keeps
/// `u` in `[0, 1]` and `E[u] = mean`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseLaw {
    /// With probability `1 - mean` draw from `U[0, mean]`, otherwise from `U[mean, 1]`.
    #[default]
    Mixture,
    Bernoulli,
    /// Gaussian noise clipped symmetrically to `[-r, r]`, `r = min(mean, 1 - mean)`.
    ClippedGaussian { sigma: f64 },
}

impl NoiseLaw {
    pub fn sample<R: Rng + ?Sized>(&self, mean: f64, rng: &mut R) -> f64 {
        let mean = mean.clamp(0.0, 1.0);
        let u = match *self {
            NoiseLaw::Mixture => {
                // Both draws are always consumed so the stream stays aligned across arms.
                let high = rng.random::<f64>() < mean;
                let x = rng.random::<f64>();
                if high {
                    mean + (1.0 - mean) * x
                } else {
                    mean * x
                }
            }
            NoiseLaw::Bernoulli => {
                if rng.random::<f64>() < mean {
                    1.0
                } else {
                    0.0
                }
            }
            NoiseLaw::ClippedGaussian { sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                let r = mean.min(1.0 - mean);
                mean + (sigma * z).clamp(-r, r)
            }
        };
        u.clamp(0.0, 1.0)
    }
}

/// A fixed-action-set problem together with everything needed to simulate it.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstance {
    pub theta: ActionVector,
    pub actions: Vec<ActionVector>,
    pub max_delay: f64,
    pub payoff_kind: PayoffKind,
    pub noise_law: NoiseLaw,
    pub seed: u64,
    /// Per-action deviations from linearity; `None` for a well-specified model.
    pub offsets: Option<Vec<f64>>,
}

impl BanditInstance {
    pub fn new(theta: ActionVector, actions: Vec<ActionVector>, max_delay: f64) -> Result<Self> {
        let inst = Self {
            theta,
            actions,
            max_delay,
            payoff_kind: PayoffKind::Loss,
            noise_law: NoiseLaw::Mixture,
            seed: 0,
            offsets: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn with_max_delay(mut self, d: f64) -> Self {
        self.max_delay = d;
        self
    }

    pub fn with_payoff_kind(mut self, kind: PayoffKind) -> Self {
        self.payoff_kind = kind;
        self
    }

    pub fn with_noise_law(mut self, law: NoiseLaw) -> Self {
        self.noise_law = law;
        self
    }

    pub fn with_offsets(mut self, offsets: Vec<f64>) -> Result<Self> {
        self.offsets = Some(offsets);
        self.validate()?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.theta.dim()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    /// Linear part `<a, theta>` of action `i`.
    pub fn linear_mean(&self, i: usize) -> f64 {
        self.actions[i].dot(self.theta.coords())
    }

    /// Expected payoff of action `i`, including any misspecification offset.
    pub fn mean(&self, i: usize) -> f64 {
        self.linear_mean(i) + self.offsets.as_ref().map_or(0.0, |o| o[i])
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if self.actions.is_empty() {
            return Err(Error::InvalidInstance("action set is empty".into()));
        }
        if let Some((i, _)) = self.actions.iter().enumerate().find(|(_, a)| a.dim() != n) {
            return Err(Error::InvalidInstance(format!("action {i} has the wrong dimension")));
        }
        if !(self.max_delay >= 0.0) || !self.max_delay.is_finite() {
            return Err(Error::InvalidInstance(format!("max delay {} is not a non-negative real", self.max_delay)));
        }
        if let Some(off) = &self.offsets {
            if off.len() != self.actions.len() {
                return Err(Error::InvalidInstance("one offset per action is required".into()));
            }
        }
        for i in 0..self.actions.len() {
            let mu = self.mean(i);
            if !(-TOL..=1.0 + TOL).contains(&mu) {
                return Err(Error::InvalidInstance(format!("mean payoff {mu} of action {i} is outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn sample_payoff<R: Rng + ?Sized>(&self, action: usize, rng: &mut R) -> f64 {
        self.noise_law.sample(self.mean(action), rng)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&InstanceFile::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(s).map_err(|e| Error::InvalidInstance(e.to_string()))?;
        file.try_into()
    }
}

/// Samples an instance the way the synthetic study does: `theta = |nu| / |nu|_2`
/// for standard normal `nu`, and actions drawn coordinatewise from `U[0, 1]`
/// then normalized. The result is a loss instance with zero delay; use the
/// `with_*` builders to adjust.
pub fn generate_instance(seed: u64, n: usize, k: usize) -> BanditInstance {
    assert!(n >= 1 && k >= 1, "dimension and action count must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta = loop {
        let nu: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal).abs()).collect();
        if let Ok(v) = ActionVector::normalized(nu) {
            break v;
        }
    };
    let actions = (0..k)
        .map(|_| loop {
            let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            if let Ok(v) = ActionVector::normalized(raw) {
                break v;
            }
        })
        .collect();
    BanditInstance {
        theta,
        actions,
        max_delay: 0.0,
        payoff_kind: PayoffKind::Loss,
        noise_law: NoiseLaw::Mixture,
        seed,
        offsets: None,
    }
}

/// Ground-truth optimum and gaps of an instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapProfile {
    pub optimal_index: usize,
    pub optimal_mean: f64,
    pub gaps: Vec<f64>,
    /// Smallest strictly positive gap; `None` when every gap is zero.
    pub min_gap: Option<f64>,
    pub max_gap: f64,
    pub optimal_delay: f64,
}

/// Index of the best score, ties (within [`TOL`]) broken toward the lowest index.
pub fn best_index<I: IntoIterator<Item = f64>>(scores: I, kind: PayoffKind) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.into_iter().enumerate() {
        let better = match (best, kind) {
            (None, _) => true,
            (Some((_, b)), PayoffKind::Loss) => s < b - TOL,
            (Some((_, b)), PayoffKind::Reward) => s > b + TOL,
        };
        if better {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| i)
}

pub fn compute_gaps(instance: &BanditInstance) -> GapProfile {
    let kind = instance.payoff_kind;
    let linear: Vec<f64> = (0..instance.num_actions()).map(|i| instance.linear_mean(i)).collect();
    let star = best_index(linear.iter().copied(), kind).expect("instance has at least one action");
    let gaps: Vec<f64> = linear
        .iter()
        .map(|&v| match kind {
            PayoffKind::Loss => (v - linear[star]).max(0.0),
            PayoffKind::Reward => (linear[star] - v).max(0.0),
        })
        .collect();
    let means = (0..instance.num_actions()).map(|i| instance.mean(i));
    let optimal_mean = match kind {
        PayoffKind::Loss => means.fold(f64::INFINITY, f64::min),
        PayoffKind::Reward => means.fold(f64::NEG_INFINITY, f64::max),
    };
    let min_gap = gaps.iter().copied().filter(|&g| g > TOL).reduce(f64::min);
    let max_gap = gaps.iter().copied().fold(0.0, f64::max);
    GapProfile {
        optimal_index: star,
        optimal_mean,
        gaps,
        min_gap,
        max_gap,
        optimal_delay: instance.max_delay * optimal_mean,
    }
}

/// On-disk representation of an instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct InstanceFile {
    n: usize,
    #[serde(rename = "K")]
    k: usize,
    theta: ActionVector,
    actions: Vec<ActionVector>,
    #[serde(rename = "maxDelay")]
    max_delay: f64,
    #[serde(rename = "payoffKind")]
    payoff_kind: PayoffKind,
    #[serde(rename = "noiseLaw", default)]
    noise_law: NoiseLaw,
    #[serde(default)]
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    offsets: Option<Vec<f64>>,
}

impl From<&BanditInstance> for InstanceFile {
    fn from(i: &BanditInstance) -> Self {
        Self {
            n: i.dim(),
            k: i.num_actions(),
            theta: i.theta.clone(),
            actions: i.actions.clone(),
            max_delay: i.max_delay,
            payoff_kind: i.payoff_kind,
            noise_law: i.noise_law,
            seed: i.seed,
            offsets: i.offsets.clone(),
        }
    }
}

impl TryFrom<InstanceFile> for BanditInstance {
    type Error = Error;
    fn try_from(f: InstanceFile) -> Result<Self> {
        if f.theta.dim() != f.n || f.actions.len() != f.k {
            return Err(Error::InvalidInstance(format!(
                "declared n={} K={} but found n={} K={}",
                f.n,
                f.k,
                f.theta.dim(),
                f.actions.len()
            )));
        }
        let inst = BanditInstance {
            theta: f.theta,
            actions: f.actions,
            max_delay: f.max_delay,
            payoff_kind: f.payoff_kind,
            noise_law: f.noise_law,
            seed: f.seed,
            offsets: f.offsets,
        };
        inst.validate()?;
        Ok(inst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_arm() -> BanditInstance {
        BanditInstance::new(
            ActionVector::new(vec![0.2, 0.6]).unwrap(),
            vec![ActionVector::basis(2, 0), ActionVector::basis(2, 1)],
            10.0,
        )
        .unwrap()
    }

    #[test]
    fn generated_instance_is_normalized() {
        for seed in 0..20 {
            let inst = generate_instance(seed, 6, 50);
            assert!((inst.theta.norm() - 1.0).abs() < 1e-9);
            assert!(inst.theta.coords().iter().all(|&c| c >= 0.0));
            for a in &inst.actions {
                assert!((a.norm() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_instance(42, 8, 50);
        let b = generate_instance(42, 8, 50);
        assert_eq!(a, b);
        let c = generate_instance(43, 8, 50);
        assert_ne!(a, c);
    }

    #[test]
    fn gaps_of_basis_instance() {
        let g = compute_gaps(&two_arm());
        assert_eq!(g.optimal_index, 0);
        assert!((g.optimal_mean - 0.2).abs() < 1e-12);
        assert!((g.gaps[1] - 0.4).abs() < 1e-12);
        assert_eq!(g.gaps[0], 0.0);
        assert!((g.min_gap.unwrap() - 0.4).abs() < 1e-12);
        assert!((g.max_gap - 0.4).abs() < 1e-12);
        assert!((g.optimal_delay - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gaps_of_reward_instance() {
        let g = compute_gaps(&two_arm().with_payoff_kind(PayoffKind::Reward));
        assert_eq!(g.optimal_index, 1);
        assert!((g.gaps[0] - 0.4).abs() < 1e-12);
        assert!((g.optimal_delay - 6.0).abs() < 1e-12);
    }

    #[test]
    fn single_action_has_no_min_gap() {
        let inst = BanditInstance::new(
            ActionVector::new(vec![0.5]).unwrap(),
            vec![ActionVector::basis(1, 0)],
            1.0,
        )
        .unwrap();
        let g = compute_gaps(&inst);
        assert_eq!(g.min_gap, None);
        assert_eq!(g.max_gap, 0.0);
    }

    #[test]
    fn ties_break_to_lowest_index() {
        let a = ActionVector::new(vec![0.6, 0.0]).unwrap();
        let inst = BanditInstance::new(
            ActionVector::new(vec![1.0, 0.0]).unwrap(),
            vec![ActionVector::basis(2, 1), a.clone(), ActionVector::basis(2, 1)],
            0.0,
        )
        .unwrap();
        assert_eq!(compute_gaps(&inst).optimal_index, 0);
    }

    #[test]
    fn degenerate_means_are_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for law in [NoiseLaw::Mixture, NoiseLaw::Bernoulli, NoiseLaw::ClippedGaussian { sigma: 0.3 }] {
            for _ in 0..100 {
                assert_eq!(law.sample(0.0, &mut rng), 0.0);
                assert_eq!(law.sample(1.0, &mut rng), 1.0);
            }
        }
    }

    #[test]
    fn mixture_mean_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| NoiseLaw::Mixture.sample(0.5, &mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|u| (u - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - 0.5).abs() <= 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn alternative_laws_are_unbiased() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for law in [NoiseLaw::Bernoulli, NoiseLaw::ClippedGaussian { sigma: 0.2 }] {
            for mu in [0.1, 0.37, 0.8] {
                let n = 20_000;
                let draws: Vec<f64> = (0..n).map(|_| law.sample(mu, &mut rng)).collect();
                let mean = draws.iter().sum::<f64>() / n as f64;
                let var = draws.iter().map(|u| (u - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                assert!((mean - mu).abs() <= 4.0 * (var / n as f64).sqrt(), "{law:?} mu={mu} mean={mean}");
                assert!(draws.iter().all(|u| (0.0..=1.0).contains(u)));
            }
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let inst = generate_instance(9, 4, 7).with_max_delay(123.456).with_payoff_kind(PayoffKind::Reward);
        let back = BanditInstance::from_json(&inst.to_json().unwrap()).unwrap();
        assert_eq!(inst, back);
        for (a, b) in inst.actions.iter().zip(&back.actions) {
            for (x, y) in a.coords().iter().zip(b.coords()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn rejects_out_of_ball_vectors() {
        assert!(ActionVector::new(vec![1.0, 1.0]).is_err());
        assert!(ActionVector::new(vec![-0.1, 0.5]).is_err());
        let bad = r#"{"n":2,"K":1,"theta":[0.5,0.5],"actions":[[0.9,0.9]],"maxDelay":1,"payoffKind":"loss","noiseLaw":"mixture","seed":0}"#;
        assert!(BanditInstance::from_json(bad).is_err());
    }

    #[test]
    fn misspecified_means_are_checked() {
        let inst = two_arm();
        assert!(inst.clone().with_offsets(vec![0.05, -0.05]).is_ok());
        assert!(inst.with_offsets(vec![-0.5, 0.0]).is_err());
    }
}
