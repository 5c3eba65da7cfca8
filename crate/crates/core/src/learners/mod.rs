//! Optimistic minimax value iteration learners.
//!
//! Each learner keeps one [`GramState`] per step and only ever sees feature
//! vectors, realized rewards and realized next states. At the start of
//! episode `k` it builds a plan: ridge estimates for every step computed
//! backward from `H`, with state values evaluated lazily and memoized per
//! `(h, x)` for the episode.

mod offline;
mod online;
mod turn;

pub use offline::{offline_plan, OfflineLearner, OfflinePlan, OfflineStateSolution};
pub use online::{online_plan, OnlineLearner, OnlinePlan, OnlineStateSolution, Opponent};
pub use turn::{find_max, find_min, TurnOfflineLearner, TurnOfflinePlan, TurnOnlineLearner, TurnOnlinePlan, TurnStateSolution};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::eps_net::{eval_q, QParams, Sign};
use crate::error::{Error, Result};
use crate::game_model::{sample_index, GameSpec};
use crate::regression::GramState;

/// Generator used for every stochastic component of a run.
pub type SimRng = ChaCha8Rng;

/// `beta = c d H sqrt(iota)` with `iota = log(2 d T / p)` and `T = K H`.
pub fn bonus_beta(c: f64, d: usize, horizon: usize, episodes: usize, p: f64) -> Result<f64> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Config(format!("bonus constant c must be positive, got {c}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Config(format!("confidence p must lie in (0, 1), got {p}")));
    }
    if d == 0 || horizon == 0 || episodes == 0 {
        return Err(Error::Config("d, H and K must be positive".into()));
    }
    let t = (episodes * horizon) as f64;
    let iota = (2.0 * d as f64 * t / p).ln();
    Ok(c * d as f64 * horizon as f64 * iota.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub episodes: usize,
    pub beta: f64,
    /// Rounding accuracy for the offline learners, `1 / (K H)`.
    pub eps_net: f64,
    /// Episodes after which the incremental inverse is compared with a
    /// direct inverse.
    pub drift_checkpoints: Vec<usize>,
}

impl LearnerConfig {
    pub fn new(d: usize, horizon: usize, episodes: usize, c: f64, p: f64) -> Result<Self> {
        Ok(Self {
            episodes,
            beta: bonus_beta(c, d, horizon, episodes, p)?,
            eps_net: 1.0 / (episodes * horizon) as f64,
            drift_checkpoints: Vec::new(),
        })
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_drift_checkpoints(mut self, checkpoints: Vec<usize>) -> Self {
        self.drift_checkpoints = checkpoints;
        self
    }
}

/// Something that can be played: draws initial states and next states and
/// reveals rewards.
pub trait Environment {
    fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> usize;
    fn step<R: Rng + ?Sized>(&self, h: usize, x: usize, a: usize, b: usize, rng: &mut R) -> Result<(f64, usize)>;
}

impl Environment for GameSpec {
    fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.sample_initial(rng)
    }

    fn step<R: Rng + ?Sized>(&self, h: usize, x: usize, a: usize, b: usize, rng: &mut R) -> Result<(f64, usize)> {
        let (r, next) = self.query(h, x, a, b)?;
        Ok((r, sample_index(&next, rng)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub state: usize,
    pub a: usize,
    pub b: usize,
    pub reward: f64,
    pub next_state: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub k: usize,
    pub steps: Vec<Step>,
    /// Optimistic value at the initial state.
    pub upper: f64,
    /// Pessimistic value at the initial state; offline learners only.
    pub lower: Option<f64>,
}

impl EpisodeRecord {
    pub fn initial_state(&self) -> usize {
        self.steps[0].state
    }

    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }
}

/// Running record of the regression invariants, as worst slack seen. A
/// positive slack is a violation of that size.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// `sum_tau phi^T Lambda^{-1} phi - d`.
    pub leverage_slack: f64,
    /// `potential - 2 log det Lambda`.
    pub potential_slack: f64,
    /// `||w|| - 2 H sqrt(d k)`.
    pub coefficient_slack: f64,
    /// Largest Frobenius distance between the incremental and direct inverse.
    pub inverse_drift: f64,
    pub episodes_checked: usize,
    pub drift_checks: usize,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Self {
            leverage_slack: f64::NEG_INFINITY,
            potential_slack: f64::NEG_INFINITY,
            coefficient_slack: f64::NEG_INFINITY,
            inverse_drift: 0.0,
            episodes_checked: 0,
            drift_checks: 0,
        }
    }
}

impl Diagnostics {
    /// Whether every recorded slack and the drift are within `tol`.
    pub fn within(&self, tol: f64) -> bool {
        self.leverage_slack <= tol
            && self.potential_slack <= tol
            && self.coefficient_slack <= tol
            && self.inverse_drift <= tol
    }

    pub fn merge(&mut self, other: &Diagnostics) {
        self.leverage_slack = self.leverage_slack.max(other.leverage_slack);
        self.potential_slack = self.potential_slack.max(other.potential_slack);
        self.coefficient_slack = self.coefficient_slack.max(other.coefficient_slack);
        self.inverse_drift = self.inverse_drift.max(other.inverse_drift);
        self.episodes_checked += other.episodes_checked;
        self.drift_checks += other.drift_checks;
    }

    fn observe_weights(&mut self, w: &DVector<f64>, horizon: usize, k: usize) {
        let radius = 2.0 * horizon as f64 * ((w.len() * k) as f64).sqrt();
        self.coefficient_slack = self.coefficient_slack.max(w.norm() - radius);
    }

    /// Check the Gram invariants after episode `k` has been appended.
    fn observe_grams(&mut self, grams: &[GramState], k: usize, checkpoints: &[usize]) -> Result<()> {
        for g in grams {
            let d = g.dim() as f64;
            self.leverage_slack = self.leverage_slack.max(g.leverage_sum() - d);
            self.potential_slack = self.potential_slack.max(g.potential_sum() - 2.0 * g.log_det()?);
            if checkpoints.contains(&k) {
                self.inverse_drift = self.inverse_drift.max(g.inverse_drift()?);
            }
        }
        if checkpoints.contains(&k) {
            self.drift_checks += 1;
        }
        self.episodes_checked += 1;
        Ok(())
    }
}

/// Ridge targets `r + next_value(x')` for every sample of one step.
fn targets<F>(gram: &GramState, mut next_value: F) -> Result<Vec<f64>>
where
    F: FnMut(usize) -> Result<f64>,
{
    gram.history().iter().map(|s| Ok(s.reward + next_value(s.next_state)?)).collect()
}

fn check_history(grams: &[GramState], k: usize) -> Result<()> {
    for (h, g) in grams.iter().enumerate() {
        if g.len() + 1 != k {
            return Err(Error::InternalState(format!(
                "step {} holds {} samples at episode {k}, expected {}",
                h + 1,
                g.len(),
                k - 1
            )));
        }
    }
    Ok(())
}

fn q_params(w: DVector<f64>, gram: &GramState, sign: Sign, beta: f64, horizon: usize, k: usize) -> Result<QParams> {
    QParams::new(w, gram.lambda_inv().clone(), sign, beta, horizon as f64, k)
}

/// `Q(phi(x, a, b))` for all action pairs.
fn payoff_matrix<'f, F>(q: &QParams, num_actions: usize, phi: F) -> DMatrix<f64>
where
    F: Fn(usize, usize) -> &'f DVector<f64>,
{
    DMatrix::from_fn(num_actions, num_actions, |a, b| eval_q(q, phi(a, b)))
}
