//! Experiment configuration files.
//!
//! ```toml
//! mode = "offline"
//! K = 1000
//! c = 0.2
//! p = 0.05
//! seed = 7
//! checkpoints = [250, 500, 1000]
//!
//! [game]
//! source = "builtin"
//! name = "two_state"
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evaluation::OpponentKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Offline,
    Online,
    TurnOffline,
    TurnOnline,
    DemoInstability,
    Validate,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Offline => "offline",
            Mode::Online => "online",
            Mode::TurnOffline => "turn_offline",
            Mode::TurnOnline => "turn_online",
            Mode::DemoInstability => "demo_instability",
            Mode::Validate => "validate",
        }
    }

    pub fn is_turn(self) -> bool {
        matches!(self, Mode::TurnOffline | Mode::TurnOnline)
    }

    /// Online modes learn one side and face an opponent.
    pub fn is_online(self) -> bool {
        matches!(self, Mode::Online | Mode::TurnOnline)
    }

    /// Modes that play episodes.
    pub fn is_learning(self) -> bool {
        matches!(self, Mode::Offline | Mode::Online | Mode::TurnOffline | Mode::TurnOnline)
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "offline" => Mode::Offline,
            "online" => Mode::Online,
            "turn_offline" => Mode::TurnOffline,
            "turn_online" => Mode::TurnOnline,
            "demo_instability" => Mode::DemoInstability,
            "validate" => Mode::Validate,
            other => return Err(Error::Config(format!("unknown mode '{other}'"))),
        })
    }
}

/// Where the game comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum GameSource {
    /// One of the games shipped with the crate, see [`super::builtin_names`].
    Builtin { name: String },
    /// A TOML game file; relative paths resolve against the config file.
    File { path: PathBuf },
    RandomSimplex {
        d: usize,
        #[serde(rename = "S", alias = "states")]
        states: usize,
        #[serde(rename = "A", alias = "actions")]
        actions: usize,
        #[serde(rename = "H", alias = "horizon")]
        horizon: usize,
        #[serde(default)]
        seed: u64,
    },
    RandomTabular {
        #[serde(rename = "S", alias = "states")]
        states: usize,
        #[serde(rename = "A", alias = "actions")]
        actions: usize,
        #[serde(rename = "H", alias = "horizon")]
        horizon: usize,
        #[serde(default)]
        seed: u64,
    },
}

impl Default for GameSource {
    fn default() -> Self {
        GameSource::Builtin { name: "two_state".into() }
    }
}

/// Policy for the `fixed_markov` opponent: a named policy or one action per
/// `[h][x]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolicySpec {
    /// `"nash"` (the exact equilibrium policy of the minimizer),
    /// `"uniform"`, or `"first"` (always action 0).
    Named(String),
    Actions(Vec<Vec<usize>>),
}

fn default_episodes() -> usize {
    1000
}

fn default_c() -> f64 {
    1.0
}

fn default_p() -> f64 {
    0.05
}

fn default_eps() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default)]
    pub game: GameSource,
    #[serde(rename = "K", alias = "episodes", default = "default_episodes")]
    pub episodes: usize,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opponent: Option<OpponentKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opponent_policy: Option<PolicySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Episodes at which cumulative gap/regret is reported in the summary.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checkpoints: Vec<usize>,
    /// Perturbation size for `demo_instability`.
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Seeds for `sweep`; empty means just `seed`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub seeds: Vec<u64>,
}

impl ExperimentConfig {
    pub fn new(mode: Mode, game: GameSource) -> Self {
        Self {
            mode,
            game,
            episodes: default_episodes(),
            c: default_c(),
            p: default_p(),
            seed: 0,
            opponent: None,
            opponent_policy: None,
            output: None,
            checkpoints: Vec::new(),
            eps: default_eps(),
            seeds: Vec::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.check()?;
        Ok(config)
    }

    /// Read a config file. A relative game path is made relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut config = Self::parse(&text)?;
        if let GameSource::File { path: game } = &mut config.game {
            if game.is_relative() {
                if let Some(dir) = path.parent() {
                    *game = dir.join(&*game);
                }
            }
        }
        Ok(config)
    }

    /// Check the invariants that do not need the game.
    pub fn check(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::Config(format!("c must be positive, got {}", self.c)));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::Config(format!("p must lie in (0, 1), got {}", self.p)));
        }
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::Config(format!("eps must be positive, got {}", self.eps)));
        }
        if let Some(&k) = self.checkpoints.iter().find(|&&k| k == 0 || k > self.episodes) {
            return Err(Error::Config(format!("checkpoint {k} outside 1..={}", self.episodes)));
        }
        if self.opponent.is_some() && !self.mode.is_online() {
            return Err(Error::Config(format!("mode {} takes no opponent", self.mode.name())));
        }
        if self.opponent_policy.is_some() && self.opponent() != OpponentKind::FixedMarkov {
            return Err(Error::Config("opponent_policy needs opponent = \"fixed_markov\"".into()));
        }
        if self.opponent() == OpponentKind::FixedMarkov && self.mode.is_online() && self.opponent_policy.is_none() {
            return Err(Error::Config("fixed_markov opponent needs opponent_policy".into()));
        }
        match &self.game {
            GameSource::RandomSimplex { d, states, actions, horizon, .. } => {
                if *d == 0 || *states == 0 || *actions == 0 || *horizon == 0 {
                    return Err(Error::Config("random_simplex sizes must be positive".into()));
                }
                if self.mode.is_turn() {
                    return Err(Error::Config("turn modes need a turn-based game".into()));
                }
            }
            GameSource::RandomTabular { states, actions, horizon, .. } => {
                if *states == 0 || *actions == 0 || *horizon == 0 {
                    return Err(Error::Config("random_tabular sizes must be positive".into()));
                }
                if self.mode.is_turn() {
                    return Err(Error::Config("turn modes need a turn-based game".into()));
                }
            }
            GameSource::Builtin { .. } | GameSource::File { .. } => {}
        }
        Ok(())
    }

    /// Opponent kind, defaulting to the best-response oracle.
    pub fn opponent(&self) -> OpponentKind {
        self.opponent.unwrap_or(OpponentKind::BestResponseOracle)
    }

    /// Summary checkpoints: the configured list, or quarter, half and full K.
    pub fn checkpoints(&self) -> Vec<usize> {
        let mut cps = if self.checkpoints.is_empty() {
            vec![self.episodes / 4, self.episodes / 2, self.episodes]
        } else {
            self.checkpoints.clone()
        };
        cps.retain(|&k| k >= 1);
        cps.sort_unstable();
        cps.dedup();
        cps
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Hex SHA-256 of the canonical TOML echo.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::parse("mode = \"offline\"").unwrap();
        assert_eq!(c.episodes, 1000);
        assert_eq!(c.c, 1.0);
        assert_eq!(c.p, 0.05);
        assert_eq!(c.game, GameSource::default());
        assert_eq!(c.checkpoints(), vec![250, 500, 1000]);
    }

    #[test]
    fn full_config_round_trips() {
        let text = r#"
mode = "online"
K = 40
c = 0.2
seed = 3
opponent = "fixed_markov"
opponent_policy = [[0, 1], [1, 1]]
checkpoints = [10, 40]

[game]
source = "random_simplex"
d = 3
S = 2
A = 2
H = 2
seed = 9
"#;
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.opponent, Some(OpponentKind::FixedMarkov));
        assert_eq!(c.opponent_policy, Some(PolicySpec::Actions(vec![vec![0, 1], vec![1, 1]])));
        let again = ExperimentConfig::parse(&c.to_toml().unwrap()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.hash().unwrap(), c.hash().unwrap());
        assert_eq!(c.hash().unwrap().len(), 64);
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "mode = \"offline\"\nK = 0",
            "mode = \"offline\"\nc = 0.0",
            "mode = \"offline\"\np = 1.0",
            "mode = \"offline\"\ncheckpoints = [2000]",
            "mode = \"offline\"\nopponent = \"uniform\"",
            "mode = \"online\"\nopponent = \"fixed_markov\"",
            "mode = \"online\"\nopponent = \"nobody\"",
            "mode = \"sideways\"",
            "mode = \"offline\"\nbogus = 1",
            "mode = \"turn_offline\"\n[game]\nsource = \"random_tabular\"\nS = 2\nA = 2\nH = 2",
        ] {
            let err = ExperimentConfig::parse(text).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}: {err}");
        }
    }

    #[test]
    fn relative_game_paths_follow_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        std::fs::write(&path, "mode = \"offline\"\n[game]\nsource = \"file\"\npath = \"g.toml\"\n").unwrap();
        let c = ExperimentConfig::load(&path).unwrap();
        assert_eq!(c.game, GameSource::File { path: dir.path().join("g.toml") });
    }

    #[test]
    fn missing_config_file_is_io() {
        let err = ExperimentConfig::load(Path::new("/nonexistent/exp.toml")).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn mode_names_parse_back() {
        for m in [Mode::Offline, Mode::Online, Mode::TurnOffline, Mode::TurnOnline, Mode::DemoInstability, Mode::Validate] {
            assert_eq!(m.name().parse::<Mode>().unwrap(), m);
        }
    }
}
