//! The delayed-feedback environment.
//!
//! A payoff `u` played at round `t` reaches the learner at the end of round
//! `ceil(t + D * u)`. Feedback delivered at the end of round `s` can only
//! influence decisions from round `s + 1` on.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{compute_gaps, BanditInstance, GapProfile};
use crate::Policy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackEvent {
    pub played_round: u64,
    pub action: usize,
    pub payoff: f64,
    pub arrival_round: u64,
}

/// `ceil(t + D * u)`, with the ceiling applied once to the real sum.
pub fn arrival_round(played_round: u64, max_delay: f64, payoff: f64) -> u64 {
    (played_round as f64 + max_delay * payoff).ceil() as u64
}

/// Pending feedback keyed by arrival round.
#[derive(Debug, Clone, Default)]
pub struct DelayQueue {
    pending: BTreeMap<u64, Vec<FeedbackEvent>>,
    len: usize,
}

impl DelayQueue {
    pub fn push(&mut self, event: FeedbackEvent) {
        self.pending.entry(event.arrival_round).or_default().push(event);
        self.len += 1;
    }

    /// Removes and returns every event due at or before `round`, ordered by
    /// play round.
    pub fn drain_due(&mut self, round: u64) -> Vec<FeedbackEvent> {
        let later = self.pending.split_off(&(round + 1));
        let due = std::mem::replace(&mut self.pending, later);
        let mut out: Vec<FeedbackEvent> = due.into_values().flatten().collect();
        out.sort_by_key(|e| e.played_round);
        self.len -= out.len();
        out
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// One row of a run trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRow {
    pub t: u64,
    pub action: usize,
    pub gap: f64,
    pub cum_regret: f64,
    pub epoch: u32,
    #[serde(rename = "B")]
    pub b: Option<f64>,
    pub events_arrived: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunRecord {
    pub rows: Vec<RoundRow>,
}

impl RunRecord {
    pub fn push_round(&mut self, t: u64, action: usize, gap: f64) {
        let cum = self.rows.last().map_or(0.0, |r| r.cum_regret) + gap;
        self.rows.push(RoundRow {
            t,
            action,
            gap,
            cum_regret: cum,
            epoch: 0,
            b: None,
            events_arrived: 0,
        });
    }

    pub fn final_regret(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.cum_regret)
    }

    pub fn cumulative(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.cum_regret).collect()
    }

    pub fn actions(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.action).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for row in &self.rows {
            wr.serialize(row)?;
        }
        if self.rows.is_empty() {
            wr.write_record(["t", "action", "gap", "cum_regret", "epoch", "B", "events_arrived"])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let rows = rd.deserialize().collect::<std::result::Result<Vec<RoundRow>, _>>()?;
        Ok(Self { rows })
    }
}

/// Sum of ground-truth gaps along the trace.
pub fn pseudo_regret(record: &RunRecord) -> f64 {
    record.rows.iter().map(|r| r.gap).sum()
}

/// Fixed-action-set environment with payoff-proportional delays.
#[derive(Debug, Clone)]
pub struct DelayEnv {
    instance: BanditInstance,
    gaps: GapProfile,
    horizon: u64,
    round: u64,
    collected: bool,
    queue: DelayQueue,
    rng: ChaCha8Rng,
    record: RunRecord,
    events: Vec<FeedbackEvent>,
    delivered_at: Vec<Option<u64>>,
}

impl DelayEnv {
    pub fn new(instance: BanditInstance, horizon: u64, rng: ChaCha8Rng) -> Self {
        let gaps = compute_gaps(&instance);
        Self {
            instance,
            gaps,
            horizon,
            round: 0,
            collected: true,
            queue: DelayQueue::default(),
            rng,
            record: RunRecord::default(),
            events: Vec::with_capacity(horizon as usize),
            delivered_at: Vec::with_capacity(horizon as usize),
        }
    }

    pub fn instance(&self) -> &BanditInstance {
        &self.instance
    }

    pub fn gaps(&self) -> &GapProfile {
        &self.gaps
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    /// Number of rounds played so far; the last played round.
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn record(&self) -> &RunRecord {
        &self.record
    }

    /// Sets the epoch / guess columns of the latest trace row.
    pub fn annotate(&mut self, epoch: u32, b: Option<f64>) {
        if let Some(row) = self.record.rows.last_mut() {
            row.epoch = epoch;
            row.b = b;
        }
    }

    /// Plays `action` at the next round and schedules its feedback.
    pub fn play(&mut self, action: usize) -> Result<FeedbackEvent> {
        if self.round >= self.horizon {
            return Err(Error::HorizonExceeded { round: self.round + 1, horizon: self.horizon });
        }
        if !self.collected {
            return Err(Error::Protocol(format!("round {} was never collected", self.round)));
        }
        if action >= self.instance.num_actions() {
            return Err(Error::Protocol(format!("action {action} does not exist")));
        }
        self.round += 1;
        let t = self.round;
        let payoff = self.instance.sample_payoff(action, &mut self.rng);
        let event = FeedbackEvent {
            played_round: t,
            action,
            payoff,
            arrival_round: arrival_round(t, self.instance.max_delay, payoff),
        };
        self.queue.push(event);
        self.events.push(event);
        self.delivered_at.push(None);
        self.record.push_round(t, action, self.gaps.gaps[action]);
        self.collected = false;
        Ok(event)
    }

    /// Feedback arriving at the end of the current round.
    pub fn collect(&mut self) -> Vec<FeedbackEvent> {
        let due = self.queue.drain_due(self.round);
        for e in &due {
            self.delivered_at[(e.played_round - 1) as usize] = Some(self.round);
        }
        if let Some(row) = self.record.rows.last_mut() {
            row.events_arrived = due.len();
        }
        self.collected = true;
        due
    }

    /// Every event generated so far, indexed by `played_round - 1`, with the
    /// round it was delivered at (if any).
    pub fn event_log(&self) -> impl Iterator<Item = (&FeedbackEvent, Option<u64>)> {
        self.events.iter().zip(self.delivered_at.iter().copied())
    }

    /// Ends the run; feedback still pending past the horizon is dropped.
    pub fn finish(self) -> (RunRecord, usize) {
        let dropped = self.queue.len();
        (self.record, dropped)
    }
}

/// Runs `policy` against `env` until the horizon.
pub fn drive<P: Policy + ?Sized>(env: &mut DelayEnv, policy: &mut P) -> Result<()> {
    while env.round() < env.horizon() {
        let t = env.round() + 1;
        let action = policy.select(t);
        env.play(action)?;
        let (epoch, b) = policy.annotation();
        env.annotate(epoch, b);
        let events = env.collect();
        policy.observe(&events);
        policy.end_round(t);
    }
    Ok(())
}

/// Checks every generated event was delivered exactly at its arrival round
/// (or is still pending because that round lies past the horizon). Returns
/// the number of violations.
pub fn audit_delivery(env: &DelayEnv) -> usize {
    let d = env.instance().max_delay;
    env.event_log()
        .filter(|(e, delivered)| {
            let expected = arrival_round(e.played_round, d, e.payoff);
            let ok_arrival = e.arrival_round == expected;
            let ok_delivery = match delivered {
                Some(r) => *r == expected,
                None => expected > env.round(),
            };
            !(ok_arrival && ok_delivery)
        })
        .count()
}
