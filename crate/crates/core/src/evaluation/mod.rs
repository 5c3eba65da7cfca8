//! Exact dynamic-programming oracles on the true model and the per-episode
//! metrics derived from them.
//!
//! Everything here is an exact expectation over finite `S` and `A`, so
//! tolerances only absorb LP and floating-point roundoff.

mod opponents;
mod policy;

pub use opponents::{make_opponent, BestResponseOpponent, FixedMarkovOpponent, OpponentKind, UniformOpponent};
pub use policy::MarkovPolicy;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::game_model::GameSpec;
use crate::matrix_equilibria::{solve_zero_sum, MixedStrategy};

/// Which player's policy is held fixed in a best-response computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Player {
    /// The maximizing player (rows).
    Max,
    /// The minimizing player (columns).
    Min,
}

/// Rewards and transition kernels of a spec, tabulated once.
#[derive(Debug, Clone)]
pub struct ModelTables {
    horizon: usize,
    num_states: usize,
    num_actions: usize,
    reward: Vec<f64>,
    next: Vec<Vec<f64>>,
}

impl ModelTables {
    /// Tabulate every `(h, x, a, b)` through the validating query.
    pub fn new(spec: &GameSpec) -> Result<Self> {
        let (hz, ns, na) = (spec.horizon(), spec.num_states(), spec.num_actions());
        let mut reward = Vec::with_capacity(hz * ns * na * na);
        let mut next = Vec::with_capacity(hz * ns * na * na);
        for h in 1..=hz {
            for x in 0..ns {
                for a in 0..na {
                    for b in 0..na {
                        let (r, p) = spec.query(h, x, a, b)?;
                        reward.push(r);
                        next.push(p);
                    }
                }
            }
        }
        Ok(Self { horizon: hz, num_states: ns, num_actions: na, reward, next })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn index(&self, h: usize, x: usize, a: usize, b: usize) -> usize {
        (((h - 1) * self.num_states + x) * self.num_actions + a) * self.num_actions + b
    }

    pub fn reward(&self, h: usize, x: usize, a: usize, b: usize) -> f64 {
        self.reward[self.index(h, x, a, b)]
    }

    pub fn next(&self, h: usize, x: usize, a: usize, b: usize) -> &[f64] {
        &self.next[self.index(h, x, a, b)]
    }
}

/// State values `V_h(x)` for `h` in `1..=H+1` (with `V_{H+1} = 0`) and action
/// values `Q_h(x, a, b)` for `h` in `1..=H`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    horizon: usize,
    num_states: usize,
    num_actions: usize,
    v: Vec<f64>,
    q: Vec<f64>,
}

impl ValueTable {
    fn zeros(horizon: usize, num_states: usize, num_actions: usize) -> Self {
        Self {
            horizon,
            num_states,
            num_actions,
            v: vec![0.0; (horizon + 1) * num_states],
            q: vec![0.0; horizon * num_states * num_actions * num_actions],
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn v(&self, h: usize, x: usize) -> f64 {
        self.v[(h - 1) * self.num_states + x]
    }

    pub fn q(&self, h: usize, x: usize, a: usize, b: usize) -> f64 {
        self.q[(((h - 1) * self.num_states + x) * self.num_actions + a) * self.num_actions + b]
    }

    /// The `|A| x |A|` matrix `Q_h(x, ., .)`.
    pub fn q_matrix(&self, h: usize, x: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.num_actions, self.num_actions, |a, b| self.q(h, x, a, b))
    }

    /// The vector `(V_h(x))_x`.
    pub fn v_vector(&self, h: usize) -> DVector<f64> {
        DVector::from_fn(self.num_states, |x, _| self.v(h, x))
    }

    fn set_v(&mut self, h: usize, x: usize, val: f64) {
        self.v[(h - 1) * self.num_states + x] = val;
    }

    /// Largest `|entry|` over all `V` and `Q`.
    pub fn max_abs(&self) -> f64 {
        self.v.iter().chain(&self.q).fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Equilibrium values together with a Markov Nash policy pair.
#[derive(Debug, Clone)]
pub struct NashSolution {
    pub values: ValueTable,
    pub row: MarkovPolicy,
    pub col: MarkovPolicy,
}

/// Backward induction where each state's value is `backup(h, x, Q_h(x,.,.))`.
fn backward<F>(tables: &ModelTables, mut backup: F) -> Result<ValueTable>
where
    F: FnMut(usize, usize, &DMatrix<f64>) -> Result<f64>,
{
    let (hz, ns, na) = (tables.horizon, tables.num_states, tables.num_actions);
    let mut t = ValueTable::zeros(hz, ns, na);
    for h in (1..=hz).rev() {
        let base = (h - 1) * ns * na * na;
        for x in 0..ns {
            for a in 0..na {
                for b in 0..na {
                    let p = tables.next(h, x, a, b);
                    let cont: f64 = p.iter().enumerate().map(|(xp, w)| w * t.v(h + 1, xp)).sum();
                    t.q[base + (x * na + a) * na + b] = tables.reward(h, x, a, b) + cont;
                }
            }
            let m = t.q_matrix(h, x);
            let val = backup(h, x, &m)?;
            t.set_v(h, x, val);
        }
    }
    Ok(t)
}

fn check_policy(tables: &ModelTables, policy: &MarkovPolicy) -> Result<()> {
    if policy.horizon() != tables.horizon
        || policy.num_states() != tables.num_states
        || policy.num_actions() != tables.num_actions
    {
        return Err(Error::Input("policy shape does not match the game".into()));
    }
    Ok(())
}

/// `sum_a p(a) M(a, b)` for each `b`.
fn row_mix(p: &MixedStrategy, m: &DMatrix<f64>) -> Vec<f64> {
    (0..m.ncols()).map(|b| (0..m.nrows()).map(|a| p.probs()[a] * m[(a, b)]).sum()).collect()
}

/// `sum_b q(b) M(a, b)` for each `a`.
fn col_mix(q: &MixedStrategy, m: &DMatrix<f64>) -> Vec<f64> {
    (0..m.nrows()).map(|a| (0..m.ncols()).map(|b| q.probs()[b] * m[(a, b)]).sum()).collect()
}

/// Lowest index attaining the minimum.
fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x < v[best] {
            best = i;
        }
    }
    best
}

/// Lowest index attaining the maximum.
fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Nash values of the game: each state's value is the minimax value of its
/// Q matrix.
pub fn nash(tables: &ModelTables) -> Result<NashSolution> {
    let (hz, ns, na) = (tables.horizon, tables.num_states, tables.num_actions);
    let mut row = MarkovPolicy::empty(hz, ns, na);
    let mut col = MarkovPolicy::empty(hz, ns, na);
    let values = backward(tables, |h, x, m| {
        let sol = solve_zero_sum(m)?;
        row.set(h, x, sol.row.clone())?;
        col.set(h, x, sol.col.clone())?;
        Ok(sol.value)
    })?;
    Ok(NashSolution { values, row, col })
}

/// `V*` and `Q*`.
pub fn exact_nash(spec: &GameSpec) -> Result<ValueTable> {
    Ok(nash(&ModelTables::new(spec)?)?.values)
}

/// Best-response values against a fixed policy.
///
/// With `fixed = Player::Max` the argument is the max player's policy `pi`
/// and the result is `V^{pi,*}`; with `Player::Min` it is `nu` and the result
/// is `V^{*,nu}`.
pub fn best_response_table(tables: &ModelTables, policy: &MarkovPolicy, fixed: Player) -> Result<ValueTable> {
    check_policy(tables, policy)?;
    backward(tables, |h, x, m| {
        let s = policy.require(h, x)?;
        Ok(match fixed {
            Player::Max => row_mix(s, m).into_iter().fold(f64::INFINITY, f64::min),
            Player::Min => col_mix(s, m).into_iter().fold(f64::NEG_INFINITY, f64::max),
        })
    })
}

pub fn best_response_values(spec: &GameSpec, policy: &MarkovPolicy, fixed: Player) -> Result<ValueTable> {
    best_response_table(&ModelTables::new(spec)?, policy, fixed)
}

/// A deterministic best response (lowest index on ties) to `policy` and its
/// values. Against a fixed max player this is the minimizing reply.
pub fn best_response_policy(
    tables: &ModelTables,
    policy: &MarkovPolicy,
    fixed: Player,
) -> Result<(MarkovPolicy, ValueTable)> {
    check_policy(tables, policy)?;
    let mut reply = MarkovPolicy::empty(tables.horizon, tables.num_states, tables.num_actions);
    let values = backward(tables, |h, x, m| {
        let s = policy.require(h, x)?;
        let (act, val) = match fixed {
            Player::Max => {
                let v = row_mix(s, m);
                let i = argmin(&v);
                (i, v[i])
            }
            Player::Min => {
                let v = col_mix(s, m);
                let i = argmax(&v);
                (i, v[i])
            }
        };
        reply.set(h, x, MixedStrategy::point_mass(tables.num_actions, act))?;
        Ok(val)
    })?;
    Ok((reply, values))
}

/// `V^{pi,nu}` and `Q^{pi,nu}` by exact backward induction.
pub fn policy_table(tables: &ModelTables, pi: &MarkovPolicy, nu: &MarkovPolicy) -> Result<ValueTable> {
    check_policy(tables, pi)?;
    check_policy(tables, nu)?;
    backward(tables, |h, x, m| {
        let p = pi.require(h, x)?;
        let q = nu.require(h, x)?;
        Ok(row_mix(p, m).iter().zip(q.probs()).map(|(v, w)| v * w).sum())
    })
}

pub fn policy_value(spec: &GameSpec, pi: &MarkovPolicy, nu: &MarkovPolicy) -> Result<ValueTable> {
    policy_table(&ModelTables::new(spec)?, pi, nu)
}

/// Oracle quantities for one offline episode, all at the episode's initial
/// state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapMetrics {
    /// `V^{*,nu} - V^{pi,*}`.
    pub gap: f64,
    /// `V^{pi,nu} - V^{pi,*}`.
    pub exploit1: f64,
    /// `V^{*,nu} - V^{pi,nu}`.
    pub exploit2: f64,
    /// `V^{pi,*}`.
    pub pi_br: f64,
    /// `V^{*,nu}`.
    pub nu_br: f64,
}

pub fn gap_metrics(tables: &ModelTables, x1: usize, pi: &MarkovPolicy, nu: &MarkovPolicy) -> Result<GapMetrics> {
    let pi_br = best_response_table(tables, pi, Player::Max)?.v(1, x1);
    let nu_br = best_response_table(tables, nu, Player::Min)?.v(1, x1);
    let both = policy_table(tables, pi, nu)?.v(1, x1);
    Ok(GapMetrics { gap: nu_br - pi_br, exploit1: both - pi_br, exploit2: nu_br - both, pi_br, nu_br })
}

/// Per-episode metric series for a whole run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsSeries {
    pub ucb: Vec<f64>,
    pub lcb: Vec<f64>,
    pub gap: Vec<f64>,
    pub exploit1: Vec<f64>,
    pub exploit2: Vec<f64>,
    /// `V_1^*(x_1^k)`.
    pub nash_value: Vec<f64>,
    /// `None` where the opponent's policy is unknown to the harness.
    pub regret: Vec<Option<f64>>,
}

impl MetricsSeries {
    pub fn len(&self) -> usize {
        self.ucb.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ucb.is_empty()
    }

    /// Running sums of `gap`.
    pub fn cum_gap(&self) -> Vec<f64> {
        running_sum(self.gap.iter().copied())
    }

    /// Running sums of `regret`; once an entry is unavailable every later
    /// sum is too.
    pub fn cum_regret(&self) -> Vec<Option<f64>> {
        let mut acc = Some(0.0);
        self.regret
            .iter()
            .map(|r| {
                acc = match (acc, r) {
                    (Some(s), Some(r)) => Some(s + r),
                    _ => None,
                };
                acc
            })
            .collect()
    }

    /// `UCB - LCB` per episode.
    pub fn width(&self) -> Vec<f64> {
        self.ucb.iter().zip(&self.lcb).map(|(u, l)| u - l).collect()
    }
}

fn running_sum(it: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    it.map(|v| {
        acc += v;
        acc
    })
    .collect()
}
