use nalgebra::DMatrix;
use rand::Rng;

use super::{check_history, payoff_matrix, q_params, targets, Diagnostics, EpisodeRecord, Environment, LearnerConfig, SimRng, Step};
use crate::eps_net::{QParams, Sign};
use crate::error::{Error, Result};
use crate::evaluation::MarkovPolicy;
use crate::game_model::{sample_index, FeatureView};
use crate::matrix_equilibria::{solve_zero_sum, JointDistribution, MixedStrategy};
use crate::regression::GramState;

/// The second player in an online run.
///
/// Actions are requested with `(k, h, x)` only: the opponent never sees the
/// learner's action at the current step.
pub trait Opponent {
    /// Called before episode `k`. Opponents that ask for it receive the
    /// learner's Markov policy for the episode.
    fn begin_episode(&mut self, k: usize, learner_policy: Option<&MarkovPolicy>) -> Result<()>;

    fn act(&mut self, k: usize, h: usize, x: usize, rng: &mut SimRng) -> Result<usize>;

    /// Whether [`begin_episode`](Self::begin_episode) needs the learner's policy.
    fn wants_learner_policy(&self) -> bool {
        false
    }

    /// The Markov policy played this episode, when the opponent has one.
    fn markov_policy(&self) -> Option<&MarkovPolicy> {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnlineStateSolution {
    /// The learner's strategy.
    pub policy: MixedStrategy,
    /// The minimizing strategy of the same matrix game.
    pub reply: MixedStrategy,
    /// `E_{policy, reply}[Q]`.
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct OnlinePlan<'a> {
    view: FeatureView<'a>,
    k: usize,
    params: Vec<QParams>,
    memo: Vec<Vec<Option<OnlineStateSolution>>>,
}

/// Build the optimistic plan for episode `k`.
pub fn online_plan<'a>(
    view: FeatureView<'a>,
    grams: &[GramState],
    k: usize,
    config: &LearnerConfig,
) -> Result<OnlinePlan<'a>> {
    let hz = view.horizon();
    if grams.len() != hz {
        return Err(Error::InternalState(format!("{} Gram states for horizon {hz}", grams.len())));
    }
    check_history(grams, k)?;
    let mut plan = OnlinePlan { view, k, params: Vec::with_capacity(hz), memo: vec![vec![None; view.num_states()]; hz] };
    for h in (1..=hz).rev() {
        let gram = &grams[h - 1];
        let t = if h == hz {
            targets(gram, |_| Ok(0.0))?
        } else {
            targets(gram, |xp| Ok(plan.solve(h + 1, xp)?.value))?
        };
        let w = gram.ridge_solve(&t)?;
        plan.params.insert(0, q_params(w, gram, Sign::Plus, config.beta, hz, k)?);
    }
    Ok(plan)
}

impl<'a> OnlinePlan<'a> {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn params(&self, h: usize) -> &QParams {
        &self.params[h - 1 - (self.view.horizon() - self.params.len())]
    }

    /// The optimistic Q matrix at `(h, x)`.
    pub fn q_matrix(&self, h: usize, x: usize) -> DMatrix<f64> {
        let view = self.view;
        payoff_matrix(self.params(h), view.num_actions(), |a, b| view.phi(x, a, b))
    }

    fn solve(&mut self, h: usize, x: usize) -> Result<&OnlineStateSolution> {
        if x >= self.view.num_states() {
            return Err(Error::Input(format!("state {x} out of range")));
        }
        if self.memo[h - 1][x].is_none() {
            let q = self.q_matrix(h, x);
            let sol = solve_zero_sum(&q)?;
            let value = JointDistribution::product(&sol.row, &sol.col).expect(&q);
            self.memo[h - 1][x] = Some(OnlineStateSolution { policy: sol.row, reply: sol.col, value });
        }
        Ok(self.memo[h - 1][x].as_ref().expect("memo filled above"))
    }

    pub fn solution(&mut self, h: usize, x: usize) -> Result<&OnlineStateSolution> {
        if h == 0 || h > self.view.horizon() {
            return Err(Error::Input(format!("step {h} out of range")));
        }
        self.solve(h, x)
    }

    pub fn demanded(&self) -> usize {
        self.memo.iter().flatten().filter(|s| s.is_some()).count()
    }

    /// The learner's policy at every state.
    pub fn learner_policy(&mut self) -> Result<MarkovPolicy> {
        let (hz, ns, na) = (self.view.horizon(), self.view.num_states(), self.view.num_actions());
        let mut pi = MarkovPolicy::empty(hz, ns, na);
        for h in 1..=hz {
            for x in 0..ns {
                pi.set(h, x, self.solve(h, x)?.policy.clone())?;
            }
        }
        Ok(pi)
    }
}

/// Simultaneous-move learner controlling the first player only.
#[derive(Debug, Clone)]
pub struct OnlineLearner<'a> {
    view: FeatureView<'a>,
    config: LearnerConfig,
    grams: Vec<GramState>,
    diagnostics: Diagnostics,
}

impl<'a> OnlineLearner<'a> {
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

    pub fn episodes_done(&self) -> usize {
        self.grams[0].len()
    }

    pub fn plan(&mut self) -> Result<OnlinePlan<'a>> {
        let k = self.episodes_done() + 1;
        let plan = online_plan(self.view, &self.grams, k, &self.config)?;
        for q in &plan.params {
            self.diagnostics.observe_weights(q.w(), self.view.horizon(), k);
        }
        Ok(plan)
    }

    /// Play one episode. The opponent must already have been told about the
    /// episode via [`Opponent::begin_episode`].
    pub fn execute<E, R1, R2>(
        &mut self,
        plan: &mut OnlinePlan<'a>,
        env: &E,
        opponent: &mut dyn Opponent,
        env_rng: &mut R1,
        learner_rng: &mut R2,
        opponent_rng: &mut SimRng,
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
        let upper = plan.solution(1, x)?.value;
        let mut steps = Vec::with_capacity(self.view.horizon());
        for h in 1..=self.view.horizon() {
            let a = sample_index(plan.solution(h, x)?.policy.probs(), learner_rng);
            let b = opponent.act(k, h, x, opponent_rng)?;
            if b >= na {
                return Err(Error::Input(format!("opponent chose action {b}, only {na} exist")));
            }
            let (reward, next_state) = env.step(h, x, a, b, env_rng)?;
            steps.push(Step { state: x, a, b, reward, next_state });
            x = next_state;
        }
        for (h, s) in steps.iter().enumerate() {
            self.grams[h].update(self.view.phi(s.state, s.a, s.b).clone(), s.next_state, s.reward)?;
        }
        self.diagnostics.observe_grams(&self.grams, k, &self.config.drift_checkpoints)?;
        Ok(EpisodeRecord { k, steps, upper, lower: None })
    }
}
