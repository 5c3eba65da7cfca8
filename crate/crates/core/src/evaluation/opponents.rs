use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{best_response_policy, MarkovPolicy, ModelTables, Player};
use crate::error::{Error, Result};
use crate::game_model::sample_index;
use crate::learners::{Opponent, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpponentKind {
    Uniform,
    FixedMarkov,
    #[serde(alias = "best_response")]
    BestResponseOracle,
}

impl FromStr for OpponentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "fixed_markov" => Ok(Self::FixedMarkov),
            "best_response_oracle" | "best_response" => Ok(Self::BestResponseOracle),
            other => Err(Error::Config(format!("unknown opponent kind '{other}'"))),
        }
    }
}

impl OpponentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Uniform => "uniform",
            Self::FixedMarkov => "fixed_markov",
            Self::BestResponseOracle => "best_response_oracle",
        }
    }
}

/// Plays uniformly at random.
#[derive(Debug, Clone)]
pub struct UniformOpponent {
    policy: MarkovPolicy,
}

impl UniformOpponent {
    pub fn new(horizon: usize, num_states: usize, num_actions: usize) -> Self {
        Self { policy: MarkovPolicy::uniform(horizon, num_states, num_actions) }
    }
}

impl Opponent for UniformOpponent {
    fn begin_episode(&mut self, _k: usize, _learner_policy: Option<&MarkovPolicy>) -> Result<()> {
        Ok(())
    }

    fn act(&mut self, _k: usize, _h: usize, _x: usize, rng: &mut SimRng) -> Result<usize> {
        Ok(rng.random_range(0..self.policy.num_actions()))
    }

    fn markov_policy(&self) -> Option<&MarkovPolicy> {
        Some(&self.policy)
    }
}

/// Plays a given Markov policy in every episode.
#[derive(Debug, Clone)]
pub struct FixedMarkovOpponent {
    policy: MarkovPolicy,
}

impl FixedMarkovOpponent {
    pub fn new(policy: MarkovPolicy) -> Result<Self> {
        if !policy.is_total() {
            return Err(Error::Input("fixed opponent policy must cover every state".into()));
        }
        Ok(Self { policy })
    }
}

fn play(policy: &MarkovPolicy, h: usize, x: usize, rng: &mut SimRng) -> Result<usize> {
    let s = policy.require(h, x)?;
    // Point masses consume no randomness so deterministic opponents leave
    // their stream untouched.
    if let Some(i) = s.probs().iter().position(|&p| p == 1.0) {
        return Ok(i);
    }
    Ok(sample_index(s.probs(), rng))
}

impl Opponent for FixedMarkovOpponent {
    fn begin_episode(&mut self, _k: usize, _learner_policy: Option<&MarkovPolicy>) -> Result<()> {
        Ok(())
    }

    fn act(&mut self, _k: usize, h: usize, x: usize, rng: &mut SimRng) -> Result<usize> {
        play(&self.policy, h, x, rng)
    }

    fn markov_policy(&self) -> Option<&MarkovPolicy> {
        Some(&self.policy)
    }
}

/// Omniscient minimizer: each episode it plays an exact best response to
/// the learner's policy for that episode.
#[derive(Debug, Clone)]
pub struct BestResponseOpponent {
    tables: ModelTables,
    policy: Option<MarkovPolicy>,
}

impl BestResponseOpponent {
    pub fn new(tables: ModelTables) -> Self {
        Self { tables, policy: None }
    }
}

impl Opponent for BestResponseOpponent {
    fn begin_episode(&mut self, _k: usize, learner_policy: Option<&MarkovPolicy>) -> Result<()> {
        let pi = learner_policy
            .ok_or_else(|| Error::InternalState("best-response opponent needs the learner's policy".into()))?;
        self.policy = Some(best_response_policy(&self.tables, pi, Player::Max)?.0);
        Ok(())
    }

    fn act(&mut self, _k: usize, h: usize, x: usize, rng: &mut SimRng) -> Result<usize> {
        let policy = self
            .policy
            .as_ref()
            .ok_or_else(|| Error::InternalState("best-response opponent used before begin_episode".into()))?;
        play(policy, h, x, rng)
    }

    fn wants_learner_policy(&self) -> bool {
        true
    }

    fn markov_policy(&self) -> Option<&MarkovPolicy> {
        self.policy.as_ref()
    }
}

/// Build an opponent for `tables`' game. `fixed` is required for
/// [`OpponentKind::FixedMarkov`].
pub fn make_opponent(kind: OpponentKind, tables: &ModelTables, fixed: Option<MarkovPolicy>) -> Result<Box<dyn Opponent>> {
    let (hz, ns, na) = (tables.horizon(), tables.num_states(), tables.num_actions());
    Ok(match kind {
        OpponentKind::Uniform => Box::new(UniformOpponent::new(hz, ns, na)),
        OpponentKind::FixedMarkov => {
            let policy = fixed.ok_or_else(|| Error::Config("fixed_markov opponent needs a policy".into()))?;
            if policy.horizon() != hz || policy.num_states() != ns || policy.num_actions() != na {
                return Err(Error::Config("fixed_markov policy shape does not match the game".into()));
            }
            Box::new(FixedMarkovOpponent::new(policy)?)
        }
        OpponentKind::BestResponseOracle => Box::new(BestResponseOpponent::new(tables.clone())),
    })
}
