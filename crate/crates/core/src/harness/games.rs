use rand::SeedableRng;

use super::config::GameSource;
use crate::error::{Error, Result};
use crate::game_model::{
    load_game_file, random_simplex_game, random_tabular_game, tabular_game, turn_tabular_game, LoadedGame, Owner,
};
use crate::learners::SimRng;

/// Names accepted by `source = "builtin"`.
pub fn builtin_names() -> &'static [&'static str] {
    &["two_state", "alternating", "matching_pennies"]
}

pub fn builtin(name: &str) -> Result<LoadedGame> {
    match name {
        "two_state" => two_state().map(LoadedGame::Simultaneous),
        "alternating" => alternating().map(LoadedGame::Turn),
        "matching_pennies" => {
            let reward = vec![vec![vec![vec![1.0, -1.0], vec![-1.0, 1.0]]]];
            let transition = vec![vec![vec![vec![vec![1.0]; 2]; 2]]];
            tabular_game(&reward, &transition).map(LoadedGame::Simultaneous)
        }
        other => Err(Error::Config(format!(
            "unknown builtin game '{other}' (known: {})",
            builtin_names().join(", ")
        ))),
    }
}

/// Two states, two actions, two steps. Each stage game has a strict mixed
/// equilibrium and the minimizer's action steers the next state.
fn two_state() -> Result<crate::game_model::GameSpec> {
    let stage = [[[0.5, -0.3], [-0.5, 0.7]], [[-0.2, 0.6], [0.5, 0.0]]];
    let steer = |b: usize| if b == 0 { vec![0.8, 0.2] } else { vec![0.2, 0.8] };
    let reward: Vec<Vec<Vec<Vec<f64>>>> =
        (0..2).map(|_| stage.iter().map(|m| m.iter().map(|r| r.to_vec()).collect()).collect()).collect();
    let transition: Vec<Vec<Vec<Vec<Vec<f64>>>>> =
        (0..2).map(|_| (0..2).map(|_| (0..2).map(|_| (0..2).map(steer).collect()).collect()).collect()).collect();
    tabular_game(&reward, &transition)
}

/// Three states owned max, min, max; three steps starting in state 0.
fn alternating() -> Result<crate::game_model::TurnSpec> {
    let reward = vec![vec![0.0, 0.3], vec![0.4, -0.2], vec![-0.3, 0.5]];
    let transition = vec![
        vec![vec![0.1, 0.8, 0.1], vec![0.1, 0.1, 0.8]],
        vec![vec![0.5, 0.0, 0.5], vec![0.8, 0.1, 0.1]],
        vec![vec![0.3, 0.4, 0.3], vec![0.2, 0.6, 0.2]],
    ];
    turn_tabular_game(&vec![reward; 3], &vec![transition; 3], vec![Owner::Max, Owner::Min, Owner::Max])
}

/// Build the game a config points at.
pub fn resolve(source: &GameSource) -> Result<LoadedGame> {
    match source {
        GameSource::Builtin { name } => builtin(name),
        GameSource::File { path } => load_game_file(path),
        GameSource::RandomSimplex { d, states, actions, horizon, seed } => {
            let mut rng = SimRng::seed_from_u64(*seed);
            random_simplex_game(*d, *states, *actions, *horizon, &mut rng)
                .map(LoadedGame::Simultaneous)
                .map_err(|e| Error::Config(e.to_string()))
        }
        GameSource::RandomTabular { states, actions, horizon, seed } => {
            let mut rng = SimRng::seed_from_u64(*seed);
            random_tabular_game(*states, *actions, *horizon, &mut rng)
                .map(LoadedGame::Simultaneous)
                .map_err(|e| Error::Config(e.to_string()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::exact_nash;
    use crate::game_model::validate;

    #[test]
    fn builtins_are_valid() {
        for name in builtin_names() {
            let spec = builtin(name).unwrap().as_simultaneous().unwrap();
            assert!(validate(&spec).is_empty(), "{name}");
        }
    }

    #[test]
    fn two_state_shape_and_values() {
        let LoadedGame::Simultaneous(g) = builtin("two_state").unwrap() else { panic!() };
        assert_eq!((g.num_states(), g.num_actions(), g.horizon(), g.dim()), (2, 2, 2, 8));
        let v = exact_nash(&g).unwrap();
        // Last step: stage values 0.1 and 3/13.
        assert!((v.v(2, 0) - 0.1).abs() < 1e-9);
        assert!((v.v(2, 1) - 3.0 / 13.0).abs() < 1e-9);
    }

    #[test]
    fn alternating_owners() {
        let LoadedGame::Turn(t) = builtin("alternating").unwrap() else { panic!() };
        assert_eq!(t.owner(0), Owner::Max);
        assert_eq!(t.owner(1), Owner::Min);
        assert_eq!(t.owner(2), Owner::Max);
        assert_eq!(t.dim(), 6);
    }

    #[test]
    fn unknown_builtin_is_config_error() {
        assert_eq!(builtin("nope").unwrap_err().exit_code(), 2);
    }

    #[test]
    fn random_sources_are_seeded() {
        let src = GameSource::RandomSimplex { d: 3, states: 2, actions: 2, horizon: 2, seed: 5 };
        assert_eq!(resolve(&src).unwrap(), resolve(&src).unwrap());
    }
}
