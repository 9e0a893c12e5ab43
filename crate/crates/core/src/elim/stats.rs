//! Per-epoch estimators, confidence bounds and the elimination rule.

use serde::Serialize;

use crate::PayoffKind;

/// Round-robin pull order for one epoch: each of `spanner_size` arms is
/// pulled `2^m` times, arm `i` at positions congruent to `i` modulo the
/// spanner size. The schedule is cut at `remaining` rounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub arms: Vec<usize>,
    pub truncated: bool,
}

pub fn epoch_schedule(spanner_size: usize, m: u32, remaining: u64) -> Schedule {
    let full = spanner_size as u64 * (1u64 << m);
    let len = full.min(remaining);
    Schedule {
        arms: (0..len).map(|p| (p % spanner_size as u64) as usize).collect(),
        truncated: len < full,
    }
}

/// One scheduled pull. `observed` holds the payoff if it arrived by the end
/// of the epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochPull {
    pub round: u64,
    pub arm: usize,
    pub observed: Option<f64>,
}

/// Estimators for one spanner arm at the end of an epoch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmStats {
    /// Rounds whose feedback arrived within the epoch.
    #[serde(skip)]
    pub observed_rounds: Vec<u64>,
    /// Rounds played at least `D` before the epoch end.
    #[serde(skip)]
    pub certain_rounds: Vec<u64>,
    /// Rounds whose feedback had not arrived by the epoch end.
    #[serde(skip)]
    pub pending_rounds: Vec<u64>,
    pub cm: usize,
    pub om: usize,
    pub em: usize,
    pub mu_plus: f64,
    pub mu_minus: f64,
    /// `None` when no pull is guaranteed to have arrived.
    pub mu_f: Option<f64>,
    pub upper1: f64,
    pub lower1: f64,
    pub upper2: f64,
    pub lower2: f64,
}

impl ArmStats {
    fn upper(&self, j: u8) -> f64 {
        if j == 1 {
            self.upper1
        } else {
            self.upper2
        }
    }

    fn lower(&self, j: u8) -> f64 {
        if j == 1 {
            self.lower1
        } else {
            self.lower2
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochStats {
    pub m: u32,
    pub end_round: u64,
    pub beta: f64,
    pub arms: Vec<ArmStats>,
}

/// Computes the estimators of every spanner arm from a completed epoch.
///
/// `norms[i]` is `|a_i|_2` of spanner arm `i`. Bounds built from the
/// guaranteed-arrival estimate are `+-inf` for an arm with no such pulls.
pub fn epoch_stats(pulls: &[EpochPull], norms: &[f64], m: u32, max_delay: f64, beta: f64) -> EpochStats {
    let end_round = pulls.last().map_or(0, |p| p.round);
    let count = (1u64 << m) as f64;
    let mut arms = Vec::with_capacity(norms.len());
    for (arm, &nrm) in norms.iter().enumerate() {
        let mut observed_rounds = Vec::new();
        let mut certain_rounds = Vec::new();
        let mut pending_rounds = Vec::new();
        let mut sum_observed = 0.0;
        let mut sum_certain = 0.0;
        for p in pulls.iter().filter(|p| p.arm == arm) {
            match p.observed {
                Some(u) => {
                    observed_rounds.push(p.round);
                    sum_observed += u;
                }
                None => pending_rounds.push(p.round),
            }
            if p.round as f64 + max_delay <= end_round as f64 {
                certain_rounds.push(p.round);
                sum_certain += p.observed.expect("feedback played D rounds before the epoch end has arrived");
            }
        }
        let cm = certain_rounds.len();
        let em = pending_rounds.len();
        let mu_minus = sum_observed / count;
        let mu_plus = (sum_observed + em as f64) / count;
        let width1 = beta / count.sqrt() * nrm;
        let (mu_f, upper2, lower2) = if cm == 0 {
            (None, f64::INFINITY, f64::NEG_INFINITY)
        } else {
            let mf = sum_certain / cm as f64;
            let width2 = beta / (cm as f64).sqrt() * nrm;
            (Some(mf), mf + width2, mf - width2)
        };
        arms.push(ArmStats {
            om: observed_rounds.len(),
            observed_rounds,
            certain_rounds,
            pending_rounds,
            cm,
            em,
            mu_plus,
            mu_minus,
            mu_f,
            upper1: mu_plus + width1,
            lower1: mu_minus - width1,
            upper2,
            lower2,
        });
    }
    EpochStats { m, end_round, beta, arms }
}

/// Confidence bounds of one active action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActionBounds {
    pub ucb: f64,
    pub lcb: f64,
    /// The two candidate bounds that were maximized over: the LCBs for a
    /// loss learner, the UCBs for a reward learner.
    pub candidates: [f64; 2],
}

impl ActionBounds {
    pub const VACUOUS: ActionBounds = ActionBounds {
        ucb: f64::INFINITY,
        lcb: f64::NEG_INFINITY,
        candidates: [f64::NEG_INFINITY, f64::INFINITY],
    };
}

/// `sum_i lambda_i * pick(i)`, where `pick` selects the upper estimate when
/// `upper_on_positive` agrees with the sign of `lambda_i`. Zero coefficients
/// contribute nothing.
fn routed_sum(lambda: &[f64], stats: &EpochStats, j: u8, upper_on_positive: bool) -> f64 {
    lambda
        .iter()
        .zip(&stats.arms)
        .filter(|(l, _)| **l != 0.0)
        .map(|(&l, s)| {
            let use_upper = (l > 0.0) == upper_on_positive;
            l * if use_upper { s.upper(j) } else { s.lower(j) }
        })
        .sum()
}

/// Aggregates spanner-arm bounds into bounds for an action with
/// decomposition `lambda`, routing each term by the sign of its coefficient.
///
/// Loss: `UCB = sum lambda_i mu2^{sgn lambda_i}`,
/// `LCB = max_j sum lambda_i muj^{-sgn lambda_i}`.
/// Reward: `LCB = sum lambda_i mu2^{-sgn lambda_i}`,
/// `UCB = max_j sum lambda_i muj^{sgn lambda_i}`.
pub fn action_bounds(lambda: &[f64], stats: &EpochStats, kind: PayoffKind) -> ActionBounds {
    match kind {
        PayoffKind::Loss => {
            let ucb = routed_sum(lambda, stats, 2, true);
            let l1 = routed_sum(lambda, stats, 1, false);
            let l2 = routed_sum(lambda, stats, 2, false);
            ActionBounds { ucb, lcb: l1.max(l2), candidates: [l1, l2] }
        }
        PayoffKind::Reward => {
            let lcb = routed_sum(lambda, stats, 2, false);
            let u1 = routed_sum(lambda, stats, 1, true);
            let u2 = routed_sum(lambda, stats, 2, true);
            ActionBounds { ucb: u1.max(u2), lcb, candidates: [u1, u2] }
        }
    }
}

/// Positions (into `bounds`) of the actions that survive elimination.
///
/// Loss: `a` is removed if `LCB(a) >= min{UCB(a'), B} + slack` for some `a'`.
/// Reward: `a` is removed if `max{LCB(a'), B} >= UCB(a) + slack` for some `a'`.
/// A `B` of `+inf` (loss) or `-inf` (reward) disables the guess.
pub fn eliminate(bounds: &[ActionBounds], guess: f64, slack: f64, kind: PayoffKind) -> Vec<usize> {
    match kind {
        PayoffKind::Loss => {
            let threshold = bounds.iter().map(|b| b.ucb).fold(f64::INFINITY, f64::min).min(guess) + slack;
            (0..bounds.len()).filter(|&i| !(bounds[i].lcb >= threshold)).collect()
        }
        PayoffKind::Reward => {
            let threshold = bounds.iter().map(|b| b.lcb).fold(f64::NEG_INFINITY, f64::max).max(guess);
            (0..bounds.len()).filter(|&i| !(threshold >= bounds[i].ucb + slack)).collect()
        }
    }
}
