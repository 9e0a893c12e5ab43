//! LinUCB that only learns from feedback that has already arrived.

use nalgebra::{DMatrix, DVector};

use crate::env::FeedbackEvent;
use crate::instance::{best_index, ActionVector, PayoffKind};
use crate::Policy;

/// Ridge-regression state over arrived feedback.
#[derive(Debug, Clone)]
pub struct RidgeState {
    pub gram: DMatrix<f64>,
    pub response: DVector<f64>,
    pub estimate: DVector<f64>,
    pub regularizer: f64,
    gram_inverse: DMatrix<f64>,
}

impl RidgeState {
    pub fn new(dim: usize, regularizer: f64) -> Self {
        assert!(regularizer > 0.0, "ridge regularizer must be positive");
        Self {
            gram: DMatrix::identity(dim, dim) * regularizer,
            response: DVector::zeros(dim),
            estimate: DVector::zeros(dim),
            regularizer,
            gram_inverse: DMatrix::identity(dim, dim) / regularizer,
        }
    }

    pub fn dim(&self) -> usize {
        self.response.len()
    }

    /// Adds arrived `(action, payoff)` pairs and re-solves the estimate.
    pub fn ingest<'a, I>(&mut self, observations: I)
    where
        I: IntoIterator<Item = (&'a [f64], f64)>,
    {
        let mut changed = false;
        for (a, u) in observations {
            let a = DVector::from_column_slice(a);
            self.gram += &a * a.transpose();
            self.response += &a * u;
            changed = true;
        }
        if changed {
            let chol = self.gram.clone().cholesky().expect("regularized Gram matrix is positive definite");
            self.estimate = chol.solve(&self.response);
            self.gram_inverse = chol.inverse();
        }
    }

    /// `sqrt(a^T H^{-1} a)`.
    pub fn bonus_norm(&self, a: &[f64]) -> f64 {
        let v = DVector::from_column_slice(a);
        (v.transpose() * &self.gram_inverse * &v)[(0, 0)].max(0.0).sqrt()
    }

    pub fn predict(&self, a: &[f64]) -> f64 {
        a.iter().zip(self.estimate.iter()).map(|(x, y)| x * y).sum()
    }
}

/// `sqrt(lambda) + sqrt(2 ln T + n ln(1 + t / (n lambda)))`.
pub fn confidence_radius(t: u64, horizon: u64, dim: usize, regularizer: f64) -> f64 {
    let n = dim as f64;
    regularizer.sqrt() + (2.0 * (horizon as f64).ln() + n * (1.0 + t as f64 / (n * regularizer)).ln()).sqrt()
}

pub struct LinUcb {
    actions: Vec<ActionVector>,
    state: RidgeState,
    horizon: u64,
    kind: PayoffKind,
}

impl LinUcb {
    pub fn new(actions: Vec<ActionVector>, kind: PayoffKind, horizon: u64, regularizer: f64) -> Self {
        let dim = actions[0].dim();
        Self { state: RidgeState::new(dim, regularizer), actions, horizon, kind }
    }

    pub fn state(&self) -> &RidgeState {
        &self.state
    }

    /// Optimistic score of every action at round `t`.
    pub fn scores(&self, t: u64) -> Vec<f64> {
        let beta = confidence_radius(t, self.horizon, self.state.dim(), self.state.regularizer);
        self.actions
            .iter()
            .map(|a| {
                let mean = self.state.predict(a.coords());
                let bonus = beta * self.state.bonus_norm(a.coords());
                match self.kind {
                    PayoffKind::Loss => mean - bonus,
                    PayoffKind::Reward => mean + bonus,
                }
            })
            .collect()
    }
}

impl Policy for LinUcb {
    fn select(&mut self, t: u64) -> usize {
        best_index(self.scores(t), self.kind).expect("non-empty action set")
    }

    fn observe(&mut self, events: &[FeedbackEvent]) {
        let actions = &self.actions;
        self.state.ingest(events.iter().map(|e| (actions[e.action].coords(), e.payoff)));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_example() {
        // 1 + sqrt(2 ln 16000 + 6 ln(1 + 1000)) = 8.798283 (evaluated independently)
        let r = confidence_radius(6000, 16000, 6, 1.0);
        assert!((r - 8.798_283).abs() < 1e-6, "{r}");
    }

    #[test]
    fn initial_selection_is_lowest_index() {
        let actions: Vec<ActionVector> = (0..4).map(|i| ActionVector::basis(4, i)).collect();
        let mut l = LinUcb::new(actions, PayoffKind::Loss, 100, 1.0);
        assert_eq!(l.select(1), 0);
    }

    #[test]
    fn no_arrivals_leave_state_unchanged() {
        let actions: Vec<ActionVector> = (0..2).map(|i| ActionVector::basis(2, i)).collect();
        let mut l = LinUcb::new(actions, PayoffKind::Loss, 100, 1.0);
        let before = l.state().gram.clone();
        l.observe(&[]);
        assert_eq!(l.state().gram, before);
        assert!(l.state().estimate.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_event_matches_sherman_morrison() {
        let a = ActionVector::new(vec![0.6, 0.8, 0.0]).unwrap();
        let mut s = RidgeState::new(3, 1.0);
        s.ingest([(a.coords(), 0.7)]);
        let denom = 1.0 + a.norm().powi(2);
        for (x, ai) in s.estimate.iter().zip(a.coords()) {
            assert!((x - ai * 0.7 / denom).abs() < 1e-12);
        }
    }

    #[test]
    fn unexplored_direction_has_largest_bonus() {
        let mut s = RidgeState::new(3, 1.0);
        let e0 = [1.0, 0.0, 0.0];
        let e1 = [0.0, 1.0, 0.0];
        for _ in 0..10 {
            s.ingest([(&e0[..], 0.3), (&e1[..], 0.5)]);
        }
        let fresh = s.bonus_norm(&[0.0, 0.0, 1.0]);
        assert!(fresh > s.bonus_norm(&e0));
        assert!(fresh > s.bonus_norm(&e1));
        assert!(fresh > s.bonus_norm(&[0.0, 0.6, 0.8]));
    }
}
