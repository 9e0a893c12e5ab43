//! Reduction from contextual linear bandits with payoff-proportional delay
//! to the misspecified fixed-action-set learner.
//!
//! The reduction runs in doubling epochs: epoch `m` covers rounds
//! `2^(m-1) + 1 ..= 2^m`. Before each epoch every cover point `θ` is mapped
//! to `g^(m)(θ)`, the average over past rounds of the action a learner
//! knowing `θ` would have played. A fresh elimination learner over those
//! averaged actions nominates one per round; the reduction plays the
//! nominee's argmin in the current action set and forwards the payoff.

pub mod cover;
pub mod source;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use cover::{build_cover, CoverConfig, ParameterCover};
pub use source::ContextSource;

use crate::elim::{default_beta, ElimConfig, ElimLearner, EpochRecord, GuessMode};
use crate::env::{arrival_round, DelayQueue, FeedbackEvent, RunRecord};
use crate::error::{Error, Result};
use crate::instance::{best_index, ActionVector, NoiseLaw, PayoffKind};
use crate::Policy;

/// Vectors closer than this are treated as one abstract action.
pub const DEDUPE_TOL: f64 = 1e-12;

fn argmin_index(set: &[ActionVector], theta: &[f64]) -> usize {
    best_index(set.iter().map(|a| a.dot(theta)), PayoffKind::Loss).expect("non-empty action set")
}

/// `g^(m)(θ)` for every cover point, averaged over `rounds` past contexts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GEstimate {
    pub m: u32,
    pub rounds: usize,
    pub vectors: Vec<Vec<f64>>,
}

/// Running sums of per-round argmins, one per cover point.
#[derive(Debug, Clone)]
pub struct GAccumulator {
    thetas: Vec<Vec<f64>>,
    sums: Vec<Vec<f64>>,
    rounds: usize,
}

impl GAccumulator {
    pub fn new(cover: &ParameterCover) -> Self {
        let n = cover.points.first().map_or(0, |p| p.dim());
        Self {
            thetas: cover.points.iter().map(|p| p.coords().to_vec()).collect(),
            sums: vec![vec![0.0; n]; cover.len()],
            rounds: 0,
        }
    }

    pub fn push(&mut self, set: &[ActionVector]) {
        for (theta, sum) in self.thetas.iter().zip(self.sums.iter_mut()) {
            let a = set[argmin_index(set, theta)].coords();
            sum.iter_mut().zip(a).for_each(|(s, x)| *s += x);
        }
        self.rounds += 1;
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn estimate(&self, m: u32) -> GEstimate {
        let r = self.rounds.max(1) as f64;
        GEstimate {
            m,
            rounds: self.rounds,
            vectors: self.sums.iter().map(|s| s.iter().map(|x| x / r).collect()).collect(),
        }
    }
}

/// `g^(m)` from the first `2^(m-1)` action sets of `history`.
pub fn update_g(history: &[Vec<ActionVector>], cover: &ParameterCover, m: u32) -> GEstimate {
    let take = (1usize << (m - 1)).min(history.len());
    let mut acc = GAccumulator::new(cover);
    history[..take].iter().for_each(|set| acc.push(set));
    acc.estimate(m)
}

/// `min{1, 2 sqrt(ln(T |Θ'| / δ) / 2^m)}`.
pub fn epsilon_schedule(m: u32, horizon: u64, cover_size: usize, delta: f64) -> f64 {
    let l = (horizon as f64 * cover_size as f64 / delta).ln();
    (2.0 * (l / 2f64.powi(m as i32)).sqrt()).min(1.0)
}

/// Deduplicated abstract action set `X_m` with a representative cover
/// index per entry (the first cover point producing it).
pub fn abstract_actions(g: &GEstimate) -> (Vec<ActionVector>, Vec<usize>) {
    let mut actions: Vec<ActionVector> = Vec::new();
    let mut reps = Vec::new();
    for (i, v) in g.vectors.iter().enumerate() {
        let dup = actions
            .iter()
            .any(|a| a.coords().iter().zip(v).all(|(x, y)| (x - y).abs() <= DEDUPE_TOL));
        if !dup {
            // Averages of feasible points stay feasible up to rounding.
            let v: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
            let nrm = crate::linalg::norm(&v);
            let v = if nrm > 1.0 { v.iter().map(|x| x / nrm).collect() } else { v };
            actions.push(ActionVector::new(v).expect("average of feasible actions"));
            reps.push(i);
        }
    }
    (actions, reps)
}

/// A contextual problem: hidden parameter, context law and delay scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ContextualInstance {
    pub theta: ActionVector,
    pub source: ContextSource,
    pub max_delay: f64,
    #[serde(default)]
    pub noise_law: NoiseLaw,
}

impl ContextualInstance {
    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        if self.source.dim() != self.theta.dim() {
            return Err(Error::InvalidInstance("context dimension differs from theta".into()));
        }
        if !(self.max_delay >= 0.0) || !self.max_delay.is_finite() {
            return Err(Error::InvalidInstance(format!("max delay {} must be finite and non-negative", self.max_delay)));
        }
        Ok(())
    }
}

/// Environment drawing a fresh action set each round. Events carry the
/// index of the played action within that round's set.
#[derive(Debug, Clone)]
pub struct ContextualEnv {
    instance: ContextualInstance,
    horizon: u64,
    round: u64,
    current: Option<Vec<ActionVector>>,
    collected: bool,
    queue: DelayQueue,
    rng: ChaCha8Rng,
    record: RunRecord,
    contexts: Vec<Vec<ActionVector>>,
}

impl ContextualEnv {
    pub fn new(instance: ContextualInstance, horizon: u64, rng: ChaCha8Rng) -> Result<Self> {
        instance.validate()?;
        Ok(Self {
            instance,
            horizon,
            round: 0,
            current: None,
            collected: true,
            queue: DelayQueue::default(),
            rng,
            record: RunRecord::default(),
            contexts: Vec::with_capacity(horizon as usize),
        })
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn record(&self) -> &RunRecord {
        &self.record
    }

    /// Every action set revealed so far, in round order.
    pub fn contexts(&self) -> &[Vec<ActionVector>] {
        &self.contexts
    }

    /// Reveals the action set of the next round.
    pub fn context(&mut self) -> Result<&[ActionVector]> {
        if self.round >= self.horizon {
            return Err(Error::HorizonExceeded { round: self.round + 1, horizon: self.horizon });
        }
        if self.current.is_none() {
            let set = self.instance.source.sample(&mut self.rng);
            self.current = Some(set);
        }
        Ok(self.current.as_deref().expect("drawn above"))
    }

    pub fn play(&mut self, index: usize, epoch: u32) -> Result<FeedbackEvent> {
        if !self.collected {
            return Err(Error::Protocol(format!("round {} was never collected", self.round)));
        }
        self.context()?;
        let set = self.current.take().expect("context drawn");
        if index >= set.len() {
            return Err(Error::Protocol(format!("action {index} does not exist in a set of {}", set.len())));
        }
        self.round += 1;
        let t = self.round;
        let theta = self.instance.theta.coords();
        let mean = set[index].dot(theta);
        let best = set[argmin_index(&set, theta)].dot(theta);
        let payoff = self.instance.noise_law.sample(mean, &mut self.rng);
        let event = FeedbackEvent {
            played_round: t,
            action: index,
            payoff,
            arrival_round: arrival_round(t, self.instance.max_delay, payoff),
        };
        self.queue.push(event);
        self.record.push_round(t, index, (mean - best).max(0.0));
        if let Some(row) = self.record.rows.last_mut() {
            row.epoch = epoch;
        }
        self.contexts.push(set);
        self.collected = false;
        Ok(event)
    }

    pub fn collect(&mut self) -> Vec<FeedbackEvent> {
        let due = self.queue.drain_due(self.round);
        if let Some(row) = self.record.rows.last_mut() {
            row.events_arrived = due.len();
        }
        self.collected = true;
        due
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReductionConfig {
    pub horizon: u64,
    /// Confidence level; `1 / T^2` when absent.
    pub delta: Option<f64>,
    pub cover: CoverConfig,
    pub spanner_budget: Option<usize>,
}

impl ReductionConfig {
    pub fn new(horizon: u64) -> Self {
        Self { horizon, delta: None, cover: CoverConfig::default(), spanner_budget: None }
    }

    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or_else(|| 1.0 / (self.horizon as f64).powi(2))
    }
}

/// Diagnostics of one reduction epoch.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ReductionEpoch {
    pub m: u32,
    pub start_round: u64,
    pub end_round: u64,
    pub epsilon: f64,
    pub abstract_actions: usize,
    /// Payoffs from earlier epochs that arrived during this one; the fresh
    /// learner cannot use them.
    pub stale_feedback: usize,
    #[serde(skip)]
    pub sub_epochs: Vec<EpochRecord>,
}

#[derive(Debug)]
pub struct ReductionRun {
    pub record: RunRecord,
    pub epochs: Vec<ReductionEpoch>,
    pub cover: ParameterCover,
    pub contexts: Vec<Vec<ActionVector>>,
    /// Feedback still pending at the horizon.
    pub dropped: usize,
}

/// Runs the reduction for `config.horizon` rounds. Round 1 precedes the
/// first epoch and plays the argmin under the first cover point.
pub fn run_reduction(instance: &ContextualInstance, config: &ReductionConfig, rng: ChaCha8Rng) -> Result<ReductionRun> {
    let horizon = config.horizon;
    if horizon == 0 {
        return Err(Error::Config("horizon must be positive".into()));
    }
    let delta = config.delta();
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Config(format!("delta {delta} must lie in (0, 1)")));
    }
    let n = instance.theta.dim();
    let cover = build_cover(n, config.cover.resolution, config.cover.cap, config.cover.seed)?;
    let mut env = ContextualEnv::new(instance.clone(), horizon, rng)?;
    let mut acc = GAccumulator::new(&cover);
    let beta = default_beta(cover.len(), horizon);

    let first = {
        let set = env.context()?;
        argmin_index(set, cover.points[0].coords())
    };
    env.play(first, 0)?;
    env.collect();
    acc.push(&env.contexts()[0]);

    let mut epochs = Vec::new();
    let mut m = 1u32;
    while env.round() < horizon {
        let start = (1u64 << (m - 1)) + 1;
        let end = (1u64 << m).min(horizon);
        let g = acc.estimate(m);
        let (actions, reps) = abstract_actions(&g);
        let epsilon = epsilon_schedule(m, horizon, cover.len(), delta);
        let sub_config = ElimConfig {
            epsilon,
            guess_mode: GuessMode::Ignored,
            beta: Some(beta),
            spanner_budget: config.spanner_budget,
            ..ElimConfig::new(PayoffKind::Loss, end, instance.max_delay)
        };
        let mut learner = ElimLearner::new(actions.clone(), sub_config)?;
        let mut late = 0usize;
        for t in start..=end {
            let nominee = learner.select(t);
            let theta = cover.points[reps[nominee]].coords();
            let index = argmin_index(env.context()?, theta);
            env.play(index, m)?;
            let events = env.collect();
            late += events.iter().filter(|e| e.played_round < start).count();
            learner.observe(&events);
            learner.end_round(t);
            acc.push(env.contexts().last().expect("just played"));
        }
        learner.close();
        log::debug!("reduction epoch {m}: |X_m| = {}, epsilon = {epsilon:.4}", actions.len());
        epochs.push(ReductionEpoch {
            m,
            start_round: start,
            end_round: end,
            epsilon,
            abstract_actions: actions.len(),
            stale_feedback: late,
            sub_epochs: learner.into_epochs(),
        });
        m += 1;
    }
    let dropped = env.pending();
    Ok(ReductionRun { record: env.record().clone(), epochs, cover, contexts: env.contexts().to_vec(), dropped })
}
