//! Turn-based learners. At every state only the owner's action matters, so
//! the matrix games of the simultaneous learners collapse to an argmax for
//! the max player and an argmin for the min player.
//!
//! The environment is the simultaneous embedding of the turn game; the
//! inactive player's action is always sent as 0.

use rand::Rng;

use super::{check_history, q_params, targets, Diagnostics, EpisodeRecord, Environment, LearnerConfig, Opponent, SimRng, Step};
use crate::eps_net::{eval_q, round_q_params, QParams, Sign};
use crate::error::{Error, Result};
use crate::evaluation::MarkovPolicy;
use crate::game_model::{Owner, TurnView};
use crate::matrix_equilibria::MixedStrategy;
use crate::regression::GramState;

fn argmax_by<F: Fn(usize) -> f64>(n: usize, f: F) -> usize {
    let mut best = 0;
    let mut best_val = f(0);
    for i in 1..n {
        let v = f(i);
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    best
}

/// Action maximizing the rounded `Q(x, .)`; lowest index on ties.
pub fn find_max(view: &TurnView<'_>, q: &QParams, x: usize, eps: f64) -> Result<usize> {
    let r = round_q_params(q, eps)?;
    Ok(argmax_by(view.num_actions(), |a| eval_q(&r, view.phi(x, a))))
}

/// `find_max` on `-Q`.
pub fn find_min(view: &TurnView<'_>, q: &QParams, x: usize, eps: f64) -> Result<usize> {
    find_max(view, &q.negated(), x, eps)
}

fn joint_action(owner: Owner, act: usize) -> (usize, usize) {
    match owner {
        Owner::Max => (act, 0),
        Owner::Min => (0, act),
    }
}

/// The owner's chosen action at one `(h, x)` and the values there. Online
/// plans carry a single value, stored in both fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurnStateSolution {
    pub action: usize,
    pub upper: f64,
    pub lower: f64,
}

/// Deterministic policies for both players; off-turn entries are action 0.
fn owner_policies<F>(view: &TurnView<'_>, mut action: F) -> Result<(MarkovPolicy, MarkovPolicy)>
where
    F: FnMut(usize, usize) -> Result<usize>,
{
    let (hz, ns, na) = (view.horizon(), view.num_states(), view.num_actions());
    let mut pi = MarkovPolicy::empty(hz, ns, na);
    let mut nu = MarkovPolicy::empty(hz, ns, na);
    for h in 1..=hz {
        for x in 0..ns {
            let (a, b) = joint_action(view.owner(x), action(h, x)?);
            pi.set(h, x, MixedStrategy::point_mass(na, a))?;
            nu.set(h, x, MixedStrategy::point_mass(na, b))?;
        }
    }
    Ok((pi, nu))
}

#[derive(Debug, Clone)]
pub struct TurnOfflinePlan<'a> {
    view: TurnView<'a>,
    k: usize,
    eps_net: f64,
    upper: Vec<QParams>,
    lower: Vec<QParams>,
    memo: Vec<Vec<Option<TurnStateSolution>>>,
}

impl<'a> TurnOfflinePlan<'a> {
    fn build(view: TurnView<'a>, grams: &[GramState], k: usize, config: &LearnerConfig) -> Result<Self> {
        let hz = view.horizon();
        check_history(grams, k)?;
        let mut plan = Self {
            view,
            k,
            eps_net: config.eps_net,
            upper: Vec::with_capacity(hz),
            lower: Vec::with_capacity(hz),
            memo: vec![vec![None; view.num_states()]; hz],
        };
        for h in (1..=hz).rev() {
            let gram = &grams[h - 1];
            let (tu, tl) = if h == hz {
                let t = targets(gram, |_| Ok(0.0))?;
                (t.clone(), t)
            } else {
                let mut tl = Vec::with_capacity(gram.len());
                let tu = targets(gram, |xp| {
                    let s = plan.solve(h + 1, xp)?;
                    tl.push(s.lower);
                    Ok(s.upper)
                })?;
                let tl = gram.history().iter().zip(tl).map(|(s, v)| s.reward + v).collect();
                (tu, tl)
            };
            plan.upper.insert(0, q_params(gram.ridge_solve(&tu)?, gram, Sign::Plus, config.beta, hz, k)?);
            plan.lower.insert(0, q_params(gram.ridge_solve(&tl)?, gram, Sign::Minus, config.beta, hz, k)?);
        }
        Ok(plan)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn param_index(&self, h: usize) -> usize {
        h - 1 - (self.view.horizon() - self.upper.len())
    }

    pub fn upper_params(&self, h: usize) -> &QParams {
        &self.upper[self.param_index(h)]
    }

    pub fn lower_params(&self, h: usize) -> &QParams {
        &self.lower[self.param_index(h)]
    }

    fn solve(&mut self, h: usize, x: usize) -> Result<TurnStateSolution> {
        if h == 0 || h > self.view.horizon() || x >= self.view.num_states() {
            return Err(Error::Input(format!("(h={h}, x={x}) out of range")));
        }
        if let Some(s) = self.memo[h - 1][x] {
            return Ok(s);
        }
        let (qu, ql) = (self.upper_params(h), self.lower_params(h));
        let action = match self.view.owner(x) {
            Owner::Max => find_max(&self.view, qu, x, self.eps_net)?,
            Owner::Min => find_min(&self.view, ql, x, self.eps_net)?,
        };
        let phi = self.view.phi(x, action);
        let s = TurnStateSolution { action, upper: eval_q(qu, phi), lower: eval_q(ql, phi) };
        self.memo[h - 1][x] = Some(s);
        Ok(s)
    }

    pub fn solution(&mut self, h: usize, x: usize) -> Result<TurnStateSolution> {
        self.solve(h, x)
    }

    /// Policies of both players at every state, as point masses.
    pub fn policies(&mut self) -> Result<(MarkovPolicy, MarkovPolicy)> {
        let view = self.view;
        owner_policies(&view, |h, x| Ok(self.solve(h, x)?.action))
    }
}

/// Offline learner for turn-based games.
#[derive(Debug, Clone)]
pub struct TurnOfflineLearner<'a> {
    view: TurnView<'a>,
    config: LearnerConfig,
    grams: Vec<GramState>,
    diagnostics: Diagnostics,
}

impl<'a> TurnOfflineLearner<'a> {
    pub fn new(view: TurnView<'a>, config: LearnerConfig) -> Self {
        let grams = (0..view.horizon()).map(|_| GramState::new(view.dim())).collect();
        Self { view, config, grams, diagnostics: Diagnostics::default() }
    }

    pub fn grams(&self) -> &[GramState] {
        &self.grams
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    pub fn episodes_done(&self) -> usize {
        self.grams[0].len()
    }

    pub fn plan(&mut self) -> Result<TurnOfflinePlan<'a>> {
        let k = self.episodes_done() + 1;
        let plan = TurnOfflinePlan::build(self.view, &self.grams, k, &self.config)?;
        for (qu, ql) in plan.upper.iter().zip(&plan.lower) {
            self.diagnostics.observe_weights(qu.w(), self.view.horizon(), k);
            self.diagnostics.observe_weights(ql.w(), self.view.horizon(), k);
        }
        Ok(plan)
    }

    /// Play one episode on the simultaneous embedding `env`.
    pub fn execute<E, R>(&mut self, plan: &mut TurnOfflinePlan<'a>, env: &E, env_rng: &mut R) -> Result<EpisodeRecord>
    where
        E: Environment,
        R: Rng + ?Sized,
    {
        let k = self.episodes_done() + 1;
        if plan.k != k {
            return Err(Error::InternalState(format!("plan for episode {} used at episode {k}", plan.k)));
        }
        let mut x = env.initial_state(env_rng);
        let first = plan.solve(1, x)?;
        let mut steps = Vec::with_capacity(self.view.horizon());
        let mut active = Vec::with_capacity(self.view.horizon());
        for h in 1..=self.view.horizon() {
            let act = plan.solve(h, x)?.action;
            let (a, b) = joint_action(self.view.owner(x), act);
            let (reward, next_state) = env.step(h, x, a, b, env_rng)?;
            steps.push(Step { state: x, a, b, reward, next_state });
            active.push(act);
            x = next_state;
        }
        for (h, (s, &act)) in steps.iter().zip(&active).enumerate() {
            self.grams[h].update(self.view.phi(s.state, act).clone(), s.next_state, s.reward)?;
        }
        self.diagnostics.observe_grams(&self.grams, k, &self.config.drift_checkpoints)?;
        Ok(EpisodeRecord { k, steps, upper: first.upper, lower: Some(first.lower) })
    }
}

#[derive(Debug, Clone)]
pub struct TurnOnlinePlan<'a> {
    view: TurnView<'a>,
    k: usize,
    params: Vec<QParams>,
    memo: Vec<Vec<Option<TurnStateSolution>>>,
}

impl<'a> TurnOnlinePlan<'a> {
    fn build(view: TurnView<'a>, grams: &[GramState], k: usize, config: &LearnerConfig) -> Result<Self> {
        let hz = view.horizon();
        check_history(grams, k)?;
        let mut plan = Self { view, k, params: Vec::with_capacity(hz), memo: vec![vec![None; view.num_states()]; hz] };
        for h in (1..=hz).rev() {
            let gram = &grams[h - 1];
            let t = if h == hz {
                targets(gram, |_| Ok(0.0))?
            } else {
                targets(gram, |xp| Ok(plan.solve(h + 1, xp)?.upper))?
            };
            plan.params.insert(0, q_params(gram.ridge_solve(&t)?, gram, Sign::Plus, config.beta, hz, k)?);
        }
        Ok(plan)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn params(&self, h: usize) -> &QParams {
        &self.params[h - 1 - (self.view.horizon() - self.params.len())]
    }

    fn solve(&mut self, h: usize, x: usize) -> Result<TurnStateSolution> {
        if h == 0 || h > self.view.horizon() || x >= self.view.num_states() {
            return Err(Error::Input(format!("(h={h}, x={x}) out of range")));
        }
        if let Some(s) = self.memo[h - 1][x] {
            return Ok(s);
        }
        let q = self.params(h);
        let view = self.view;
        let values: Vec<f64> = (0..view.num_actions()).map(|a| eval_q(q, view.phi(x, a))).collect();
        let action = match view.owner(x) {
            Owner::Max => argmax_by(values.len(), |a| values[a]),
            Owner::Min => argmax_by(values.len(), |a| -values[a]),
        };
        let s = TurnStateSolution { action, upper: values[action], lower: values[action] };
        self.memo[h - 1][x] = Some(s);
        Ok(s)
    }

    pub fn solution(&mut self, h: usize, x: usize) -> Result<TurnStateSolution> {
        self.solve(h, x)
    }

    /// The learner's policy: its argmax at max-owned states, action 0 elsewhere.
    pub fn learner_policy(&mut self) -> Result<MarkovPolicy> {
        let view = self.view;
        Ok(owner_policies(&view, |h, x| Ok(self.solve(h, x)?.action))?.0)
    }
}

/// Online learner for turn-based games; the opponent moves at min-owned
/// states.
#[derive(Debug, Clone)]
pub struct TurnOnlineLearner<'a> {
    view: TurnView<'a>,
    config: LearnerConfig,
    grams: Vec<GramState>,
    diagnostics: Diagnostics,
}

impl<'a> TurnOnlineLearner<'a> {
    pub fn new(view: TurnView<'a>, config: LearnerConfig) -> Self {
        let grams = (0..view.horizon()).map(|_| GramState::new(view.dim())).collect();
        Self { view, config, grams, diagnostics: Diagnostics::default() }
    }

    pub fn grams(&self) -> &[GramState] {
        &self.grams
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    pub fn episodes_done(&self) -> usize {
        self.grams[0].len()
    }

    pub fn plan(&mut self) -> Result<TurnOnlinePlan<'a>> {
        let k = self.episodes_done() + 1;
        let plan = TurnOnlinePlan::build(self.view, &self.grams, k, &self.config)?;
        for q in &plan.params {
            self.diagnostics.observe_weights(q.w(), self.view.horizon(), k);
        }
        Ok(plan)
    }

    pub fn execute<E, R>(
        &mut self,
        plan: &mut TurnOnlinePlan<'a>,
        env: &E,
        opponent: &mut dyn Opponent,
        env_rng: &mut R,
        opponent_rng: &mut SimRng,
    ) -> Result<EpisodeRecord>
    where
        E: Environment,
        R: Rng + ?Sized,
    {
        let k = self.episodes_done() + 1;
        if plan.k != k {
            return Err(Error::InternalState(format!("plan for episode {} used at episode {k}", plan.k)));
        }
        let na = self.view.num_actions();
        let mut x = env.initial_state(env_rng);
        let upper = plan.solve(1, x)?.upper;
        let mut steps = Vec::with_capacity(self.view.horizon());
        let mut active = Vec::with_capacity(self.view.horizon());
        for h in 1..=self.view.horizon() {
            let (a, b, act) = match self.view.owner(x) {
                Owner::Max => {
                    let a = plan.solve(h, x)?.action;
                    (a, 0, a)
                }
                Owner::Min => {
                    let b = opponent.act(k, h, x, opponent_rng)?;
                    if b >= na {
                        return Err(Error::Input(format!("opponent chose action {b}, only {na} exist")));
                    }
                    (0, b, b)
                }
            };
            let (reward, next_state) = env.step(h, x, a, b, env_rng)?;
            steps.push(Step { state: x, a, b, reward, next_state });
            active.push(act);
            x = next_state;
        }
        for (h, (s, &act)) in steps.iter().zip(&active).enumerate() {
            self.grams[h].update(self.view.phi(s.state, act).clone(), s.next_state, s.reward)?;
        }
        self.diagnostics.observe_grams(&self.grams, k, &self.config.drift_checkpoints)?;
        Ok(EpisodeRecord { k, steps, upper, lower: None })
    }
}
