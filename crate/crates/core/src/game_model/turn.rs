use nalgebra::{DMatrix, DVector};

use super::{GameSpec, InitialState, MASS_TOL};
use crate::error::{Error, Result};

/// Which player acts at a state of a turn-based game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Owner {
    /// The maximizing player.
    Max,
    /// The minimizing player.
    Min,
}

impl Owner {
    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(Owner::Max),
            2 => Ok(Owner::Min),
            other => Err(Error::Input(format!("owner must be 1 or 2, got {other}"))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Owner::Max => 1,
            Owner::Min => 2,
        }
    }
}

/// Turn-based linear game: features depend only on the active player's
/// action.
#[derive(Debug, Clone, PartialEq)]
pub struct TurnSpec {
    pub(crate) num_states: usize,
    pub(crate) num_actions: usize,
    /// Indexed by `x * A + a`.
    pub(crate) features: Vec<DVector<f64>>,
    pub(crate) owner: Vec<Owner>,
    pub(crate) theta: Vec<DVector<f64>>,
    pub(crate) mu: Vec<DMatrix<f64>>,
    pub(crate) initial: InitialState,
    pub(crate) tabular: bool,
}

impl TurnSpec {
    pub fn new(
        num_states: usize,
        num_actions: usize,
        features: Vec<DVector<f64>>,
        owner: Vec<Owner>,
        theta: Vec<DVector<f64>>,
        mu: Vec<DMatrix<f64>>,
        initial: InitialState,
    ) -> Result<Self> {
        if owner.len() != num_states {
            return Err(Error::Input("owner map must cover every state".into()));
        }
        if features.len() != num_states * num_actions {
            return Err(Error::Input(format!(
                "expected {} turn features, got {}",
                num_states * num_actions,
                features.len()
            )));
        }
        let spec = Self {
            num_states,
            num_actions,
            features,
            owner,
            theta,
            mu,
            initial,
            tabular: false,
        };
        // Shape checks are shared with the simultaneous representation.
        embed_turn_based(&spec)?;
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.theta[0].len()
    }

    pub fn horizon(&self) -> usize {
        self.theta.len()
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn owner(&self, x: usize) -> Owner {
        self.owner[x]
    }

    pub fn phi(&self, x: usize, a: usize) -> &DVector<f64> {
        &self.features[x * self.num_actions + a]
    }

    pub fn is_tabular(&self) -> bool {
        self.tabular
    }

    pub fn initial_state(&self) -> &InitialState {
        &self.initial
    }

    pub fn theta(&self, h: usize) -> &DVector<f64> {
        &self.theta[h - 1]
    }

    pub fn mu(&self, h: usize) -> &DMatrix<f64> {
        &self.mu[h - 1]
    }
}

impl TurnSpec {
    /// The learner-facing view: features and owners only.
    pub fn view(&self) -> TurnView<'_> {
        TurnView { spec: self }
    }
}

/// Read-only access to a turn game's features and state owners.
#[derive(Debug, Clone, Copy)]
pub struct TurnView<'a> {
    spec: &'a TurnSpec,
}

impl<'a> TurnView<'a> {
    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn horizon(&self) -> usize {
        self.spec.horizon()
    }

    pub fn num_states(&self) -> usize {
        self.spec.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.spec.num_actions
    }

    pub fn owner(&self, x: usize) -> Owner {
        self.spec.owner[x]
    }

    pub fn phi(&self, x: usize, a: usize) -> &'a DVector<f64> {
        self.spec.phi(x, a)
    }
}

/// View a turn-based game as a simultaneous one whose features ignore the
/// inactive player's action.
pub fn embed_turn_based(turn: &TurnSpec) -> Result<GameSpec> {
    let na = turn.num_actions;
    let mut features = Vec::with_capacity(turn.num_states * na * na);
    for x in 0..turn.num_states {
        for a in 0..na {
            for b in 0..na {
                let active = match turn.owner[x] {
                    Owner::Max => a,
                    Owner::Min => b,
                };
                features.push(turn.features[x * na + active].clone());
            }
        }
    }
    GameSpec::new(
        turn.num_states,
        na,
        features,
        turn.theta.clone(),
        turn.mu.clone(),
        turn.initial.clone(),
    )
}

/// Indicator-feature turn game from tables `reward[h][x][a]` and
/// `transition[h][x][a][x']` (`h` 0-based). Feature dimension is `|S| |A|`.
pub fn turn_tabular_game(
    reward: &[Vec<Vec<f64>>],
    transition: &[Vec<Vec<Vec<f64>>>],
    owner: Vec<Owner>,
) -> Result<TurnSpec> {
    let horizon = reward.len();
    if horizon == 0 || transition.len() != horizon {
        return Err(Error::Input("reward and transition tables need the same nonzero horizon".into()));
    }
    let num_states = owner.len();
    let num_actions = reward[0].first().map_or(0, |r| r.len());
    if num_states == 0 || num_actions == 0 {
        return Err(Error::Input("tables must have at least one state and action".into()));
    }
    let d = num_states * num_actions;
    let mut theta = Vec::with_capacity(horizon);
    let mut mu = Vec::with_capacity(horizon);
    for h in 0..horizon {
        if reward[h].len() != num_states
            || transition[h].len() != num_states
            || reward[h].iter().any(|r| r.len() != num_actions)
            || transition[h].iter().any(|r| r.len() != num_actions)
        {
            return Err(Error::Input("turn tables are ragged".into()));
        }
        let mut th = DVector::zeros(d);
        let mut m = DMatrix::zeros(d, num_states);
        for x in 0..num_states {
            for a in 0..num_actions {
                let idx = x * num_actions + a;
                let r = reward[h][x][a];
                if !(r.abs() <= 1.0) {
                    return Err(Error::Input(format!("reward {r} outside [-1, 1]")));
                }
                th[idx] = r;
                let row = &transition[h][x][a];
                let total: f64 = row.iter().sum();
                if row.len() != num_states || row.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > MASS_TOL {
                    return Err(Error::Input(format!(
                        "transition row at (h={}, x={x}, a={a}) is not stochastic",
                        h + 1
                    )));
                }
                for (xp, p) in row.iter().enumerate() {
                    m[(idx, xp)] = *p;
                }
            }
        }
        theta.push(th);
        mu.push(m);
    }
    let features = (0..d)
        .map(|i| {
            let mut v = DVector::zeros(d);
            v[i] = 1.0;
            v
        })
        .collect();
    let mut spec = TurnSpec::new(num_states, num_actions, features, owner, theta, mu, InitialState::Fixed(0))?;
    spec.tabular = true;
    Ok(spec)
}
