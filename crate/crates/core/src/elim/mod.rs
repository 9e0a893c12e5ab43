//! Phased elimination over a volumetric spanner.
//!
//! Each epoch `m` computes a spanner of the active set, pulls every spanner
//! arm `2^m` times round-robin, estimates the arms from the feedback that
//! arrived inside the epoch, lifts those estimates to every active action
//! through its spanner decomposition and finally removes the dominated
//! actions. A guess `B` of the optimal payoff adds an extra elimination
//! threshold; when it empties the active set the learner restarts with the
//! guess doubled (loss) or halved (reward).

pub mod stats;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use stats::{action_bounds, eliminate, epoch_schedule, epoch_stats, ActionBounds, ArmStats, EpochPull, EpochStats, Schedule};

use crate::env::{drive, DelayEnv, FeedbackEvent, RunRecord};
use crate::error::{Error, Result};
use crate::instance::{ActionVector, BanditInstance, PayoffKind};
use crate::spanner::{certify, compute_spanner, default_budget, Spanner};
use crate::Policy;

/// How the optimal-payoff guess `B` is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GuessMode {
    /// Doubling from `1/D` (loss) or halving from `1` (reward).
    Guess,
    /// `B` plays no role and the learner never restarts.
    #[default]
    Ignored,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuessState {
    pub b: f64,
    pub mode: GuessMode,
    kind: PayoffKind,
}

impl GuessState {
    pub fn new(kind: PayoffKind, mode: GuessMode, max_delay: f64) -> Self {
        let b = match (mode, kind) {
            (GuessMode::Ignored, PayoffKind::Loss) => f64::INFINITY,
            (GuessMode::Ignored, PayoffKind::Reward) => f64::NEG_INFINITY,
            // With no delay the guess carries no information.
            (GuessMode::Guess, PayoffKind::Loss) if max_delay <= 0.0 => f64::INFINITY,
            (GuessMode::Guess, PayoffKind::Loss) => 1.0 / max_delay,
            (GuessMode::Guess, PayoffKind::Reward) => 1.0,
        };
        Self { b, mode, kind }
    }

    fn on_empty(&mut self) {
        match self.kind {
            PayoffKind::Loss => self.b *= 2.0,
            PayoffKind::Reward => self.b /= 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElimConfig {
    pub kind: PayoffKind,
    /// Misspecification level; `0` gives the well-specified rule.
    pub epsilon: f64,
    pub guess_mode: GuessMode,
    pub horizon: u64,
    pub max_delay: f64,
    /// Defaults to `3n`.
    pub spanner_budget: Option<usize>,
    /// Defaults to `sqrt(2 ln(K T^3))`.
    pub beta: Option<f64>,
}

impl ElimConfig {
    pub fn new(kind: PayoffKind, horizon: u64, max_delay: f64) -> Self {
        Self {
            kind,
            epsilon: 0.0,
            guess_mode: GuessMode::Ignored,
            horizon,
            max_delay,
            spanner_budget: None,
            beta: None,
        }
    }

    pub fn with_epsilon(mut self, eps: f64) -> Self {
        self.epsilon = eps;
        self
    }

    pub fn with_guess_mode(mut self, mode: GuessMode) -> Self {
        self.guess_mode = mode;
        self
    }
}

/// `sqrt(2 ln(K T^3))`.
pub fn default_beta(num_actions: usize, horizon: u64) -> f64 {
    (2.0 * ((num_actions as f64).ln() + 3.0 * (horizon as f64).ln())).sqrt()
}

/// Everything recorded about one epoch.
#[derive(Debug, Clone, Serialize)]
pub struct EpochRecord {
    pub m: u32,
    /// Index of the `B` phase (number of restarts before this epoch).
    pub phase: u32,
    #[serde(rename = "B")]
    pub b: f64,
    pub start_round: u64,
    pub end_round: u64,
    #[serde(rename = "activeCount")]
    pub active_count: usize,
    #[serde(rename = "spannerSize")]
    pub spanner_size: usize,
    pub rho: f64,
    pub truncated: bool,
    #[serde(skip)]
    pub active: Vec<usize>,
    #[serde(rename = "spannerMembers")]
    pub spanner_members: Vec<usize>,
    /// Minimum-norm coefficients of each active action (`None` if the
    /// decomposition failed).
    #[serde(skip)]
    pub coefficients: Vec<Option<Vec<f64>>>,
    #[serde(rename = "perArm")]
    pub stats: Option<EpochStats>,
    #[serde(skip)]
    pub bounds: Vec<ActionBounds>,
    pub eliminated: Vec<usize>,
    pub restarted: bool,
    #[serde(rename = "decompositionFailures")]
    pub decomposition_failures: usize,
}

struct Epoch {
    m: u32,
    start: u64,
    spanner: Spanner,
    schedule: Schedule,
    pulls: Vec<EpochPull>,
}

/// Phased-elimination learner. It only ever sees its own action list and
/// the feedback events routed to it.
pub struct ElimLearner {
    actions: Vec<ActionVector>,
    config: ElimConfig,
    beta: f64,
    slack: f64,
    budget: usize,
    guess: GuessState,
    phase: u32,
    m: u32,
    active: Vec<usize>,
    epoch: Option<Epoch>,
    log: Vec<EpochRecord>,
}

impl ElimLearner {
    pub fn new(actions: Vec<ActionVector>, config: ElimConfig) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::Config("elimination needs at least one action".into()));
        }
        if !(config.epsilon >= 0.0) {
            return Err(Error::Config(format!("misspecification {} must be non-negative", config.epsilon)));
        }
        let n = actions[0].dim();
        let beta = config.beta.unwrap_or_else(|| default_beta(actions.len(), config.horizon));
        let budget = config.spanner_budget.unwrap_or_else(|| default_budget(n));
        Ok(Self {
            slack: 4.0 * ((3 * n) as f64).sqrt() * config.epsilon,
            guess: GuessState::new(config.kind, config.guess_mode, config.max_delay),
            active: (0..actions.len()).collect(),
            actions,
            beta,
            budget,
            config,
            phase: 0,
            m: 1,
            epoch: None,
            log: Vec::new(),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn guess(&self) -> f64 {
        self.guess.b
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn epochs(&self) -> &[EpochRecord] {
        &self.log
    }

    pub fn into_epochs(self) -> Vec<EpochRecord> {
        self.log
    }

    /// Current epoch index (the one the next pull belongs to).
    pub fn epoch_index(&self) -> u32 {
        self.epoch.as_ref().map_or(self.m, |e| e.m)
    }

    fn begin_epoch(&mut self, t: u64) {
        let active_vectors: Vec<ActionVector> = self.active.iter().map(|&i| self.actions[i].clone()).collect();
        let local = compute_spanner(&active_vectors, self.budget);
        let members: Vec<usize> = local.members.iter().map(|&i| self.active[i]).collect();
        let spanner = Spanner { members, vectors: local.vectors, target_size: local.target_size };
        let remaining = self.config.horizon.saturating_sub(t - 1);
        let schedule = epoch_schedule(spanner.len(), self.m, remaining);
        self.epoch = Some(Epoch { m: self.m, start: t, pulls: Vec::with_capacity(schedule.arms.len()), spanner, schedule });
    }

    fn finish_epoch(&mut self) {
        let epoch = self.epoch.take().expect("an epoch is in progress");
        let norms: Vec<f64> = epoch.spanner.vectors.iter().map(|v| v.norm()).collect();
        let stats = epoch_stats(&epoch.pulls, &norms, epoch.m, self.config.max_delay, self.beta);
        let dec = epoch.spanner.decomposer();
        let mut failures = 0;
        let coefficients: Vec<Option<Vec<f64>>> = self
            .active
            .iter()
            .map(|&i| match dec.decompose(self.actions[i].coords()) {
                Ok(l) => Some(l),
                Err(e) => {
                    failures += 1;
                    log::warn!("epoch {}: action {i} not decomposable ({e}); keeping it", epoch.m);
                    None
                }
            })
            .collect();
        let bounds: Vec<ActionBounds> = coefficients
            .iter()
            .map(|c| c.as_ref().map_or(ActionBounds::VACUOUS, |l| action_bounds(l, &stats, self.config.kind)))
            .collect();
        let survivors = eliminate(&bounds, self.guess.b, self.slack, self.config.kind);
        let rho = {
            let active_vectors: Vec<ActionVector> = self.active.iter().map(|&i| self.actions[i].clone()).collect();
            certify(&active_vectors, &epoch.spanner).map_or(f64::INFINITY, |c| c.norm_factor)
        };

        let mut record = EpochRecord {
            m: epoch.m,
            phase: self.phase,
            b: self.guess.b,
            start_round: epoch.start,
            end_round: stats.end_round,
            active_count: self.active.len(),
            spanner_size: epoch.spanner.len(),
            rho,
            truncated: false,
            active: self.active.clone(),
            spanner_members: epoch.spanner.members.clone(),
            coefficients,
            stats: Some(stats),
            bounds,
            eliminated: Vec::new(),
            restarted: false,
            decomposition_failures: failures,
        };

        if survivors.is_empty() {
            match self.guess.mode {
                GuessMode::Guess => {
                    record.eliminated = self.active.clone();
                    record.restarted = true;
                    self.guess.on_empty();
                    self.phase += 1;
                    self.active = (0..self.actions.len()).collect();
                    self.m = 1;
                }
                GuessMode::Ignored => {
                    log::warn!("epoch {}: every action eliminated with the guess ignored; keeping the active set", epoch.m);
                    self.m += 1;
                }
            }
        } else {
            let keep: Vec<usize> = survivors.iter().map(|&p| self.active[p]).collect();
            record.eliminated = self.active.iter().copied().filter(|i| !keep.contains(i)).collect();
            self.active = keep;
            self.m += 1;
        }
        self.log.push(record);
    }

    /// Logs the epoch cut short by the horizon, if any. No elimination is
    /// performed from it.
    pub fn close(&mut self) {
        if let Some(epoch) = self.epoch.take() {
            self.log.push(EpochRecord {
                m: epoch.m,
                phase: self.phase,
                b: self.guess.b,
                start_round: epoch.start,
                end_round: epoch.pulls.last().map_or(epoch.start, |p| p.round),
                active_count: self.active.len(),
                spanner_size: epoch.spanner.len(),
                rho: f64::NAN,
                truncated: epoch.schedule.truncated || epoch.pulls.len() < epoch.schedule.arms.len(),
                active: self.active.clone(),
                spanner_members: epoch.spanner.members,
                coefficients: Vec::new(),
                stats: None,
                bounds: Vec::new(),
                eliminated: Vec::new(),
                restarted: false,
                decomposition_failures: 0,
            });
        }
    }
}

impl Policy for ElimLearner {
    fn select(&mut self, t: u64) -> usize {
        if self.epoch.is_none() {
            self.begin_epoch(t);
        }
        let epoch = self.epoch.as_mut().expect("epoch started above");
        let pos = epoch.pulls.len();
        let arm = *epoch.schedule.arms.get(pos).expect("selection requested past the horizon");
        epoch.pulls.push(EpochPull { round: t, arm, observed: None });
        epoch.spanner.members[arm]
    }

    fn observe(&mut self, events: &[FeedbackEvent]) {
        let Some(epoch) = self.epoch.as_mut() else { return };
        for e in events {
            if e.played_round < epoch.start {
                continue;
            }
            if let Some(p) = epoch.pulls.get_mut((e.played_round - epoch.start) as usize) {
                debug_assert_eq!(p.round, e.played_round);
                p.observed = Some(e.payoff);
            }
        }
    }

    fn end_round(&mut self, _t: u64) {
        let complete = self
            .epoch
            .as_ref()
            .is_some_and(|e| !e.schedule.truncated && e.pulls.len() == e.schedule.arms.len());
        if complete {
            self.finish_epoch();
        }
    }

    fn annotation(&self) -> (u32, Option<f64>) {
        (self.epoch_index(), Some(self.guess.b))
    }
}

/// Output of a full elimination run.
#[derive(Debug)]
pub struct ElimRun {
    pub record: RunRecord,
    pub epochs: Vec<EpochRecord>,
    pub env: DelayEnv,
}

/// Runs the elimination learner on `instance` for `config.horizon` rounds,
/// drawing payoffs from `env_rng`.
pub fn run_elimination(instance: &BanditInstance, config: ElimConfig, env_rng: ChaCha8Rng) -> Result<ElimRun> {
    if config.kind != instance.payoff_kind {
        return Err(Error::Config("learner and instance disagree on the payoff kind".into()));
    }
    let mut env = DelayEnv::new(instance.clone(), config.horizon, env_rng);
    let mut learner = ElimLearner::new(instance.actions.clone(), config)?;
    drive(&mut env, &mut learner)?;
    learner.close();
    Ok(ElimRun { record: env.record().clone(), epochs: learner.into_epochs(), env })
}

/// Per-epoch diagnostics as JSON lines.
pub fn epoch_log_jsonl(epochs: &[EpochRecord]) -> Result<String> {
    let mut out = String::new();
    for e in epochs {
        out.push_str(&serde_json::to_string(e)?);
        out.push('\n');
    }
    Ok(out)
}
