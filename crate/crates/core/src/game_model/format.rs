//! TOML game files.
//!
//! ```toml
//! format = 1
//! kind = "simultaneous"        # or "turn"
//! d = 8
//! H = 2
//! S = 2
//! A = 2
//! initial_state = 0            # or: initial_distribution = [0.5, 0.5]
//! features = "tabular"         # or one dense row per (x, a, b) / (x, a)
//! theta = [[...], [...]]       # H rows of length d
//! mu = [[[...]], [[...]]]      # H matrices, d rows of length S
//! owner = [1, 2]               # turn games only
//! ```
//!
//! Dense feature rows are listed in row-major order over `(x, a, b)` for
//! simultaneous games and over `(x, a)` for turn games.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{GameSpec, InitialState, Owner, TurnSpec};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GameKind {
    #[default]
    Simultaneous,
    Turn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureSource {
    Named(String),
    Dense(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub format: u32,
    #[serde(default)]
    pub kind: GameKind,
    pub d: usize,
    #[serde(rename = "H", alias = "horizon")]
    pub horizon: usize,
    #[serde(rename = "S", alias = "states")]
    pub states: usize,
    #[serde(rename = "A", alias = "actions")]
    pub actions: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_distribution: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owner: Option<Vec<u8>>,
    pub features: FeatureSource,
    pub theta: Vec<Vec<f64>>,
    pub mu: Vec<Vec<Vec<f64>>>,
}

/// A parsed game file of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedGame {
    Simultaneous(GameSpec),
    Turn(TurnSpec),
}

impl LoadedGame {
    /// The simultaneous-move view (turn games are embedded).
    pub fn as_simultaneous(&self) -> Result<GameSpec> {
        match self {
            LoadedGame::Simultaneous(g) => Ok(g.clone()),
            LoadedGame::Turn(t) => super::embed_turn_based(t),
        }
    }
}

pub fn load_game_file(path: &Path) -> Result<LoadedGame> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    GameFile::parse(&text)?.into_game()
}

fn initial_from(file: &GameFile) -> Result<InitialState> {
    match (&file.initial_state, &file.initial_distribution) {
        (Some(_), Some(_)) => Err(Error::Config(
            "give either initial_state or initial_distribution, not both".into(),
        )),
        (Some(x), None) => Ok(InitialState::Fixed(*x)),
        (None, Some(p)) => Ok(InitialState::Distribution(p.clone())),
        (None, None) => Ok(InitialState::Fixed(0)),
    }
}

fn initial_fields(initial: &InitialState) -> (Option<usize>, Option<Vec<f64>>) {
    match initial {
        InitialState::Fixed(x) => (Some(*x), None),
        InitialState::Distribution(p) => (None, Some(p.clone())),
    }
}

fn one_hot(d: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(d);
    v[i] = 1.0;
    v
}

impl GameFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: GameFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if file.format != FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported game format {} (expected {FORMAT_VERSION})",
                file.format
            )));
        }
        Ok(file)
    }

    fn weights(&self) -> Result<(Vec<DVector<f64>>, Vec<DMatrix<f64>>)> {
        if self.theta.len() != self.horizon || self.mu.len() != self.horizon {
            return Err(Error::Config(format!("theta and mu must each have H = {} entries", self.horizon)));
        }
        let mut theta = Vec::with_capacity(self.horizon);
        for t in &self.theta {
            if t.len() != self.d {
                return Err(Error::Config("theta rows must have length d".into()));
            }
            theta.push(DVector::from_column_slice(t));
        }
        let mut mu = Vec::with_capacity(self.horizon);
        for m in &self.mu {
            if m.len() != self.d || m.iter().any(|row| row.len() != self.states) {
                return Err(Error::Config(format!("mu matrices must be {} x {}", self.d, self.states)));
            }
            mu.push(DMatrix::from_fn(self.d, self.states, |i, j| m[i][j]));
        }
        Ok((theta, mu))
    }

    fn feature_rows(&self, count: usize) -> Result<(Vec<DVector<f64>>, bool)> {
        match &self.features {
            FeatureSource::Named(name) if name == "tabular" => {
                if self.d != count {
                    return Err(Error::Config(format!("tabular features need d = {count}, got {}", self.d)));
                }
                Ok(((0..count).map(|i| one_hot(count, i)).collect(), true))
            }
            FeatureSource::Named(other) => Err(Error::Config(format!("unknown feature kind {other:?}"))),
            FeatureSource::Dense(rows) => {
                if rows.len() != count || rows.iter().any(|r| r.len() != self.d) {
                    return Err(Error::Config(format!("expected {count} feature rows of length {}", self.d)));
                }
                Ok((rows.iter().map(|r| DVector::from_column_slice(r)).collect(), false))
            }
        }
    }

    pub fn into_game(self) -> Result<LoadedGame> {
        let initial = initial_from(&self)?;
        let (theta, mu) = self.weights()?;
        match self.kind {
            GameKind::Simultaneous => {
                if self.owner.is_some() {
                    return Err(Error::Config("owner is only valid for turn games".into()));
                }
                let (features, tabular) = self.feature_rows(self.states * self.actions * self.actions)?;
                let mut spec = GameSpec::new(self.states, self.actions, features, theta, mu, initial)
                    .map_err(to_config)?;
                spec.tabular = tabular;
                Ok(LoadedGame::Simultaneous(spec))
            }
            GameKind::Turn => {
                let owner = self
                    .owner
                    .as_ref()
                    .ok_or_else(|| Error::Config("turn games need an owner list".into()))?
                    .iter()
                    .map(|&o| Owner::from_index(o).map_err(to_config))
                    .collect::<Result<Vec<_>>>()?;
                let (features, tabular) = self.feature_rows(self.states * self.actions)?;
                let mut spec = TurnSpec::new(self.states, self.actions, features, owner, theta, mu, initial)
                    .map_err(to_config)?;
                spec.tabular = tabular;
                Ok(LoadedGame::Turn(spec))
            }
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

fn to_config(e: Error) -> Error {
    match e {
        Error::Input(m) => Error::Config(m),
        other => other,
    }
}

fn dense_weights(theta: &[DVector<f64>], mu: &[DMatrix<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>) {
    let theta = theta.iter().map(|t| t.iter().copied().collect()).collect();
    let mu = mu
        .iter()
        .map(|m| (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect())
        .collect();
    (theta, mu)
}

impl From<&GameSpec> for GameFile {
    fn from(spec: &GameSpec) -> Self {
        let (theta, mu) = dense_weights(&spec.theta, &spec.mu);
        let (initial_state, initial_distribution) = initial_fields(&spec.initial);
        let features = if spec.tabular {
            FeatureSource::Named("tabular".into())
        } else {
            FeatureSource::Dense(spec.features.iter().map(|f| f.iter().copied().collect()).collect())
        };
        GameFile {
            format: FORMAT_VERSION,
            kind: GameKind::Simultaneous,
            d: spec.d,
            horizon: spec.horizon,
            states: spec.num_states,
            actions: spec.num_actions,
            initial_state,
            initial_distribution,
            owner: None,
            features,
            theta,
            mu,
        }
    }
}

impl From<&TurnSpec> for GameFile {
    fn from(spec: &TurnSpec) -> Self {
        let (theta, mu) = dense_weights(&spec.theta, &spec.mu);
        let (initial_state, initial_distribution) = initial_fields(&spec.initial);
        let features = if spec.tabular {
            FeatureSource::Named("tabular".into())
        } else {
            FeatureSource::Dense(spec.features.iter().map(|f| f.iter().copied().collect()).collect())
        };
        GameFile {
            format: FORMAT_VERSION,
            kind: GameKind::Turn,
            d: spec.dim(),
            horizon: spec.horizon(),
            states: spec.num_states,
            actions: spec.num_actions,
            initial_state,
            initial_distribution,
            owner: Some(spec.owner.iter().map(|o| o.index()).collect()),
            features,
            theta,
            mu,
        }
    }
}

impl GameSpec {
    pub fn to_toml_string(&self) -> Result<String> {
        GameFile::from(self).to_toml_string()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        match GameFile::parse(text)?.into_game()? {
            LoadedGame::Simultaneous(g) => Ok(g),
            LoadedGame::Turn(_) => Err(Error::Config("expected a simultaneous game, found a turn game".into())),
        }
    }
}

impl TurnSpec {
    pub fn to_toml_string(&self) -> Result<String> {
        GameFile::from(self).to_toml_string()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        match GameFile::parse(text)?.into_game()? {
            LoadedGame::Turn(t) => Ok(t),
            LoadedGame::Simultaneous(_) => Err(Error::Config("expected a turn game".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game_model::{random_simplex_game, tabular_game, turn_tabular_game};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tabular_file_uses_named_features() {
        let spec = tabular_game(
            &[vec![vec![vec![0.25, -0.5], vec![1.0, 0.0]]]],
            &[vec![vec![vec![vec![1.0], vec![1.0]], vec![vec![1.0], vec![1.0]]]]],
        )
        .unwrap();
        let text = spec.to_toml_string().unwrap();
        assert!(text.contains("format = 1"));
        assert!(text.contains("features = \"tabular\""));
        let back = GameSpec::from_toml_str(&text).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn turn_file_round_trip() {
        let turn = turn_tabular_game(
            &[vec![vec![0.5, -0.5], vec![0.0, 1.0]]],
            &[vec![vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![vec![1.0, 0.0]; 2]]],
            vec![Owner::Max, Owner::Min],
        )
        .unwrap();
        let text = turn.to_toml_string().unwrap();
        assert!(text.contains("kind = \"turn\""));
        assert_eq!(TurnSpec::from_toml_str(&text).unwrap(), turn);
    }

    #[test]
    fn rejects_wrong_version_and_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let text = random_simplex_game(2, 2, 2, 1, &mut rng).unwrap().to_toml_string().unwrap();
        let bumped = text.replace("format = 1", "format = 2");
        assert!(matches!(GameSpec::from_toml_str(&bumped), Err(Error::Config(_))));
        let broken = text.replace("d = 2", "d = 3");
        assert!(matches!(GameSpec::from_toml_str(&broken), Err(Error::Config(_))));
    }

    #[test]
    fn handwritten_file_parses() {
        let text = r#"
            format = 1
            d = 1
            H = 1
            S = 1
            A = 1
            features = [[1.0]]
            theta = [[0.5]]
            mu = [[[1.0]]]
        "#;
        let spec = GameSpec::from_toml_str(text).unwrap();
        assert_eq!(spec.query(1, 0, 0, 0).unwrap(), (0.5, vec![1.0]));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn dense_specs_round_trip_exactly(seed in any::<u64>(), d in 1usize..5, s in 1usize..4, a in 1usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = random_simplex_game(d, s, a, 2, &mut rng).unwrap();
            let back = GameSpec::from_toml_str(&spec.to_toml_string().unwrap()).unwrap();
            prop_assert_eq!(back, spec);
        }
    }
}
