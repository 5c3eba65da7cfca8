use nalgebra::DMatrix;
use rand::Rng;

use super::{check_history, payoff_matrix, q_params, targets, Diagnostics, EpisodeRecord, Environment, LearnerConfig, Step};
use crate::eps_net::{round_q_params, QParams, Sign};
use crate::error::{Error, Result};
use crate::evaluation::MarkovPolicy;
use crate::game_model::{sample_index, FeatureView};
use crate::matrix_equilibria::{marginals, solve_cce, JointDistribution};
use crate::regression::GramState;

/// Memoized equilibrium at one `(h, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OfflineStateSolution {
    pub sigma: JointDistribution,
    /// `E_sigma[Q_upper]` with the unrounded parameters.
    pub upper: f64,
    /// `E_sigma[Q_lower]` with the unrounded parameters.
    pub lower: f64,
}

/// Optimistic and pessimistic Q parameters for every step of one episode.
#[derive(Debug, Clone)]
pub struct OfflinePlan<'a> {
    view: FeatureView<'a>,
    k: usize,
    eps_net: f64,
    upper: Vec<QParams>,
    lower: Vec<QParams>,
    memo: Vec<Vec<Option<OfflineStateSolution>>>,
}

/// Build the plan for episode `k` from `k - 1` episodes of history.
pub fn offline_plan<'a>(
    view: FeatureView<'a>,
    grams: &[GramState],
    k: usize,
    config: &LearnerConfig,
) -> Result<OfflinePlan<'a>> {
    let hz = view.horizon();
    if grams.len() != hz {
        return Err(Error::InternalState(format!("{} Gram states for horizon {hz}", grams.len())));
    }
    check_history(grams, k)?;
    let mut plan = OfflinePlan {
        view,
        k,
        eps_net: config.eps_net,
        upper: Vec::with_capacity(hz),
        lower: Vec::with_capacity(hz),
        memo: vec![vec![None; view.num_states()]; hz],
    };
    // Built backward; `upper`/`lower` are filled from step H and reversed.
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
        let wu = gram.ridge_solve(&tu)?;
        let wl = gram.ridge_solve(&tl)?;
        plan.upper.insert(0, q_params(wu, gram, Sign::Plus, config.beta, hz, k)?);
        plan.lower.insert(0, q_params(wl, gram, Sign::Minus, config.beta, hz, k)?);
    }
    Ok(plan)
}

impl<'a> OfflinePlan<'a> {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn eps_net(&self) -> f64 {
        self.eps_net
    }

    /// Parameters of the optimistic Q at step `h`. During construction only
    /// steps after the one being built exist, so index from the end.
    pub fn upper_params(&self, h: usize) -> &QParams {
        &self.upper[self.param_index(h)]
    }

    pub fn lower_params(&self, h: usize) -> &QParams {
        &self.lower[self.param_index(h)]
    }

    fn param_index(&self, h: usize) -> usize {
        // `upper` holds steps `H - len + 1 ..= H`.
        h - 1 - (self.view.horizon() - self.upper.len())
    }

    /// `(Q_upper, Q_lower)` matrices at `(h, x)`, optionally on rounded
    /// parameters.
    pub fn payoff_matrices(&self, h: usize, x: usize, rounded: bool) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let (mut qu, mut ql) = (self.upper_params(h).clone(), self.lower_params(h).clone());
        if rounded {
            qu = round_q_params(&qu, self.eps_net)?;
            ql = round_q_params(&ql, self.eps_net)?;
        }
        let view = self.view;
        let na = view.num_actions();
        Ok((
            payoff_matrix(&qu, na, |a, b| view.phi(x, a, b)),
            payoff_matrix(&ql, na, |a, b| view.phi(x, a, b)),
        ))
    }

    fn solve(&mut self, h: usize, x: usize) -> Result<&OfflineStateSolution> {
        if x >= self.view.num_states() {
            return Err(Error::Input(format!("state {x} out of range")));
        }
        if self.memo[h - 1][x].is_none() {
            let (ru, rl) = self.payoff_matrices(h, x, true)?;
            let sigma = solve_cce(&ru, &rl)?;
            let (qu, ql) = self.payoff_matrices(h, x, false)?;
            let upper = sigma.expect(&qu);
            let lower = sigma.expect(&ql);
            self.memo[h - 1][x] = Some(OfflineStateSolution { sigma, upper, lower });
        }
        Ok(self.memo[h - 1][x].as_ref().expect("memo filled above"))
    }

    /// The equilibrium and values at `(h, x)`, computed on first demand.
    pub fn solution(&mut self, h: usize, x: usize) -> Result<&OfflineStateSolution> {
        if h == 0 || h > self.view.horizon() {
            return Err(Error::Input(format!("step {h} out of range")));
        }
        self.solve(h, x)
    }

    /// The joint action distribution played at `(h, x)`.
    pub fn find_cce(&mut self, h: usize, x: usize) -> Result<&JointDistribution> {
        Ok(&self.solution(h, x)?.sigma)
    }

    /// Number of `(h, x)` pairs evaluated so far.
    pub fn demanded(&self) -> usize {
        self.memo.iter().flatten().filter(|s| s.is_some()).count()
    }

    /// Already-evaluated solution, if any.
    pub fn cached(&self, h: usize, x: usize) -> Option<&OfflineStateSolution> {
        self.memo.get(h.wrapping_sub(1))?.get(x)?.as_ref()
    }

    /// Both players' marginal policies, evaluated at every state.
    pub fn marginal_policies(&mut self) -> Result<(MarkovPolicy, MarkovPolicy)> {
        let (hz, ns, na) = (self.view.horizon(), self.view.num_states(), self.view.num_actions());
        let mut pi = MarkovPolicy::empty(hz, ns, na);
        let mut nu = MarkovPolicy::empty(hz, ns, na);
        for h in 1..=hz {
            for x in 0..ns {
                let (p, q) = marginals(&self.solve(h, x)?.sigma);
                pi.set(h, x, p)?;
                nu.set(h, x, q)?;
            }
        }
        Ok((pi, nu))
    }
}

/// Simultaneous-move learner that controls both players.
#[derive(Debug, Clone)]
pub struct OfflineLearner<'a> {
    view: FeatureView<'a>,
    config: LearnerConfig,
    grams: Vec<GramState>,
    diagnostics: Diagnostics,
}

impl<'a> OfflineLearner<'a> {
    pub fn new(view: FeatureView<'a>, config: LearnerConfig) -> Self {
        let grams = (0..view.horizon()).map(|_| GramState::new(view.dim())).collect();
        Self { view, config, grams, diagnostics: Diagnostics::default() }
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn grams(&self) -> &[GramState] {
        &self.grams
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    /// Episodes completed so far.
    pub fn episodes_done(&self) -> usize {
        self.grams[0].len()
    }

    /// Plan for the next episode.
    pub fn plan(&mut self) -> Result<OfflinePlan<'a>> {
        let k = self.episodes_done() + 1;
        let plan = offline_plan(self.view, &self.grams, k, &self.config)?;
        for (qu, ql) in plan.upper.iter().zip(&plan.lower) {
            self.diagnostics.observe_weights(qu.w(), self.view.horizon(), k);
            self.diagnostics.observe_weights(ql.w(), self.view.horizon(), k);
        }
        Ok(plan)
    }

    /// Play one episode with `plan`, sampling joint actions from the
    /// equilibrium at each visited state, and append it to the history.
    pub fn execute<E, R1, R2>(
        &mut self,
        plan: &mut OfflinePlan<'a>,
        env: &E,
        env_rng: &mut R1,
        learner_rng: &mut R2,
    ) -> Result<EpisodeRecord>
    where
        E: Environment,
        R1: Rng + ?Sized,
        R2: Rng + ?Sized,
    {
        let k = self.episodes_done() + 1;
        if plan.k != k {
            return Err(Error::InternalState(format!("plan for episode {} used at episode {k}", plan.k)));
        }
        let na = self.view.num_actions();
        let mut x = env.initial_state(env_rng);
        let (upper, lower) = {
            let s = plan.solution(1, x)?;
            (s.upper, s.lower)
        };
        let mut steps = Vec::with_capacity(self.view.horizon());
        for h in 1..=self.view.horizon() {
            let idx = sample_index(plan.solution(h, x)?.sigma.probs(), learner_rng);
            let (a, b) = (idx / na, idx % na);
            let (reward, next_state) = env.step(h, x, a, b, env_rng)?;
            steps.push(Step { state: x, a, b, reward, next_state });
            x = next_state;
        }
        for (h, s) in steps.iter().enumerate() {
            self.grams[h].update(self.view.phi(s.state, s.a, s.b).clone(), s.next_state, s.reward)?;
        }
        self.diagnostics.observe_grams(&self.grams, k, &self.config.drift_checkpoints)?;
        Ok(EpisodeRecord { k, steps, upper, lower: Some(lower) })
    }

    /// Plan and play the next episode.
    pub fn run_episode<E, R1, R2>(&mut self, env: &E, env_rng: &mut R1, learner_rng: &mut R2) -> Result<(EpisodeRecord, OfflinePlan<'a>)>
    where
        E: Environment,
        R1: Rng + ?Sized,
        R2: Rng + ?Sized,
    {
        let mut plan = self.plan()?;
        let record = self.execute(&mut plan, env, env_rng, learner_rng)?;
        Ok((record, plan))
    }
}
