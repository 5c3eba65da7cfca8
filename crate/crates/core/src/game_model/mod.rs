//! Finite linear Markov games.
//!
//! A [`GameSpec`] stores a feature vector for every `(x, a, b)`, a reward
//! weight vector `theta_h` and a `d x |S|` transition weight matrix `mu_h`
//! per step. Rewards are `phi^T theta_h` and next-state distributions are
//! `phi^T mu_h`. Steps are 1-based throughout the public API (`1..=H`).

mod format;
mod turn;
mod validate;

pub use format::{load_game_file, GameFile, LoadedGame, FORMAT_VERSION};
pub use turn::{embed_turn_based, turn_tabular_game, Owner, TurnSpec, TurnView};
pub use validate::{validate, ValidationReport, Violation};

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};

/// Tolerance on the total mass of a next-state distribution.
pub const MASS_TOL: f64 = 1e-9;
/// Negative transition mass above `-NEG_MASS_TOL` is treated as roundoff.
pub const NEG_MASS_TOL: f64 = 1e-12;
/// Slack allowed on norm and reward bounds.
pub const BOUND_TOL: f64 = 1e-9;

/// How the first state of each episode is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Fixed(usize),
    Distribution(Vec<f64>),
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::Fixed(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    d: usize,
    horizon: usize,
    num_states: usize,
    num_actions: usize,
    /// Indexed by `(x * A + a) * A + b`.
    features: Vec<DVector<f64>>,
    /// Indicator features: queries select table entries directly.
    tabular: bool,
    theta: Vec<DVector<f64>>,
    /// `mu[h]` is `d x |S|`; column `x'` is `mu_h({x'})`.
    mu: Vec<DMatrix<f64>>,
    initial: InitialState,
}

impl GameSpec {
    /// Build a spec from dense parts. Only shapes are checked here; use
    /// [`validate`] for the model assumptions.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        features: Vec<DVector<f64>>,
        theta: Vec<DVector<f64>>,
        mu: Vec<DMatrix<f64>>,
        initial: InitialState,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(Error::Input("need at least one state and one action".into()));
        }
        let horizon = theta.len();
        if horizon == 0 {
            return Err(Error::Input("horizon must be positive".into()));
        }
        if mu.len() != horizon {
            return Err(Error::Input(format!(
                "theta has {} steps but mu has {}",
                horizon,
                mu.len()
            )));
        }
        let d = theta[0].len();
        if d == 0 {
            return Err(Error::Input("feature dimension must be positive".into()));
        }
        if features.len() != num_states * num_actions * num_actions {
            return Err(Error::Input(format!(
                "expected {} feature vectors, got {}",
                num_states * num_actions * num_actions,
                features.len()
            )));
        }
        if let Some(bad) = features.iter().position(|f| f.len() != d) {
            return Err(Error::Input(format!("feature vector {bad} has wrong length")));
        }
        if theta.iter().any(|t| t.len() != d) {
            return Err(Error::Input("theta vectors must all have length d".into()));
        }
        if mu.iter().any(|m| m.nrows() != d || m.ncols() != num_states) {
            return Err(Error::Input(format!("mu matrices must be {d} x {num_states}")));
        }
        check_initial(&initial, num_states)?;
        Ok(Self {
            d,
            horizon,
            num_states,
            num_actions,
            features,
            tabular: false,
            theta,
            mu,
            initial,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
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

    pub fn is_tabular(&self) -> bool {
        self.tabular
    }

    pub fn initial_state(&self) -> &InitialState {
        &self.initial
    }

    pub fn with_initial_state(mut self, initial: InitialState) -> Result<Self> {
        check_initial(&initial, self.num_states)?;
        self.initial = initial;
        Ok(self)
    }

    pub fn theta(&self, h: usize) -> &DVector<f64> {
        &self.theta[h - 1]
    }

    pub fn mu(&self, h: usize) -> &DMatrix<f64> {
        &self.mu[h - 1]
    }

    fn index(&self, x: usize, a: usize, b: usize) -> usize {
        (x * self.num_actions + a) * self.num_actions + b
    }

    /// Feature vector `phi(x, a, b)`. Panics on out-of-range indices.
    pub fn phi(&self, x: usize, a: usize, b: usize) -> &DVector<f64> {
        &self.features[self.index(x, a, b)]
    }

    /// The learner-facing view: features only, no access to the model.
    pub fn feature_view(&self) -> FeatureView<'_> {
        FeatureView { spec: self }
    }

    fn check_indices(&self, h: usize, x: usize, a: usize, b: usize) -> Result<()> {
        if h == 0 || h > self.horizon {
            return Err(Error::Input(format!("step {h} outside 1..={}", self.horizon)));
        }
        if x >= self.num_states {
            return Err(Error::Input(format!("state {x} out of range")));
        }
        if a >= self.num_actions || b >= self.num_actions {
            return Err(Error::Input(format!("action pair ({a}, {b}) out of range")));
        }
        Ok(())
    }

    /// Unchecked reward and raw (unclamped) next-state weights.
    pub(crate) fn raw_query(&self, h: usize, x: usize, a: usize, b: usize) -> (f64, Vec<f64>) {
        let idx = self.index(x, a, b);
        let theta = &self.theta[h - 1];
        let mu = &self.mu[h - 1];
        if self.tabular {
            let row = mu.row(idx).iter().copied().collect();
            (theta[idx], row)
        } else {
            let phi = &self.features[idx];
            let reward = phi.dot(theta);
            let next = mu.tr_mul(phi);
            (reward, next.iter().copied().collect())
        }
    }

    /// Reward and next-state distribution at step `h`.
    pub fn query(&self, h: usize, x: usize, a: usize, b: usize) -> Result<(f64, Vec<f64>)> {
        self.check_indices(h, x, a, b)?;
        let (reward, mut next) = self.raw_query(h, x, a, b);
        if !(reward.abs() <= 1.0 + BOUND_TOL) {
            return Err(Error::ModelValidity(format!(
                "reward {reward} at (h={h}, x={x}, a={a}, b={b}) outside [-1, 1]"
            )));
        }
        let mut clamped = false;
        for (xp, p) in next.iter_mut().enumerate() {
            if *p < 0.0 {
                if *p < -NEG_MASS_TOL {
                    return Err(Error::ModelValidity(format!(
                        "negative transition mass {p} to {xp} at (h={h}, x={x}, a={a}, b={b})"
                    )));
                }
                *p = 0.0;
                clamped = true;
            }
        }
        let total: f64 = next.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::ModelValidity(format!(
                "transition mass {total} at (h={h}, x={x}, a={a}, b={b}) is not 1"
            )));
        }
        if clamped {
            next.iter_mut().for_each(|p| *p /= total);
        }
        Ok((reward, next))
    }

    /// Draw the next state by inverse CDF with a single uniform draw.
    pub fn sample_next<R: Rng + ?Sized>(
        &self,
        h: usize,
        x: usize,
        a: usize,
        b: usize,
        rng: &mut R,
    ) -> Result<usize> {
        let (_, next) = self.query(h, x, a, b)?;
        Ok(sample_index(&next, rng))
    }

    /// Draw an initial state.
    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match &self.initial {
            InitialState::Fixed(x) => *x,
            InitialState::Distribution(p) => sample_index(p, rng),
        }
    }
}

fn check_initial(initial: &InitialState, num_states: usize) -> Result<()> {
    match initial {
        InitialState::Fixed(x) if *x >= num_states => {
            Err(Error::Input(format!("initial state {x} out of range")))
        }
        InitialState::Distribution(p) => {
            if p.len() != num_states {
                return Err(Error::Input("initial distribution has wrong length".into()));
            }
            if p.iter().any(|v| !(*v >= 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > MASS_TOL {
                return Err(Error::Input("initial distribution is not a probability vector".into()));
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

/// Inverse-CDF sampling from a probability vector using one uniform draw.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
        }
        cum += p;
        if u < cum {
            return i;
        }
    }
    last_positive
}

/// Read-only access to the feature map. Learners hold this and never see
/// `theta` or `mu`.
#[derive(Debug, Clone, Copy)]
pub struct FeatureView<'a> {
    spec: &'a GameSpec,
}

impl<'a> FeatureView<'a> {
    pub fn dim(&self) -> usize {
        self.spec.d
    }

    pub fn horizon(&self) -> usize {
        self.spec.horizon
    }

    pub fn num_states(&self) -> usize {
        self.spec.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.spec.num_actions
    }

    pub fn phi(&self, x: usize, a: usize, b: usize) -> &'a DVector<f64> {
        self.spec.phi(x, a, b)
    }
}

/// Indicator-feature game from explicit tables.
///
/// `reward[h][x][a][b]` and `transition[h][x][a][b][x']`, with `h` 0-based
/// in the tables. The feature dimension is `|S| |A|^2`.
pub fn tabular_game(
    reward: &[Vec<Vec<Vec<f64>>>],
    transition: &[Vec<Vec<Vec<Vec<f64>>>>],
) -> Result<GameSpec> {
    let horizon = reward.len();
    if horizon == 0 || transition.len() != horizon {
        return Err(Error::Input("reward and transition tables need the same nonzero horizon".into()));
    }
    let num_states = reward[0].len();
    let num_actions = reward[0].first().map_or(0, |r| r.len());
    if num_states == 0 || num_actions == 0 {
        return Err(Error::Input("tables must have at least one state and action".into()));
    }
    let d = num_states * num_actions * num_actions;
    let mut theta = Vec::with_capacity(horizon);
    let mut mu = Vec::with_capacity(horizon);
    for h in 0..horizon {
        let mut th = DVector::zeros(d);
        let mut m = DMatrix::zeros(d, num_states);
        check_shape(&reward[h], num_states, num_actions, "reward")?;
        check_shape(&transition[h], num_states, num_actions, "transition")?;
        for x in 0..num_states {
            for a in 0..num_actions {
                for b in 0..num_actions {
                    let idx = (x * num_actions + a) * num_actions + b;
                    let r = reward[h][x][a][b];
                    if !(r.abs() <= 1.0) {
                        return Err(Error::Input(format!(
                            "reward {r} at (h={}, x={x}, a={a}, b={b}) outside [-1, 1]",
                            h + 1
                        )));
                    }
                    th[idx] = r;
                    let row = &transition[h][x][a][b];
                    if row.len() != num_states {
                        return Err(Error::Input("transition row has wrong length".into()));
                    }
                    let total: f64 = row.iter().sum();
                    if row.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > MASS_TOL {
                        return Err(Error::Input(format!(
                            "transition row at (h={}, x={x}, a={a}, b={b}) is not stochastic",
                            h + 1
                        )));
                    }
                    for (xp, p) in row.iter().enumerate() {
                        m[(idx, xp)] = *p;
                    }
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
    let mut spec = GameSpec::new(num_states, num_actions, features, theta, mu, InitialState::Fixed(0))?;
    spec.tabular = true;
    Ok(spec)
}

fn check_shape<T>(table: &[Vec<Vec<T>>], s: usize, a: usize, what: &str) -> Result<()> {
    if table.len() != s || table.iter().any(|r| r.len() != a || r.iter().any(|c| c.len() != a)) {
        return Err(Error::Input(format!("{what} table is ragged")));
    }
    Ok(())
}

/// Uniform draw from the probability simplex of the given size.
pub(crate) fn random_simplex_point<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    // Normalized exponentials are Dirichlet(1, ..., 1).
    let mut v: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.iter_mut().for_each(|p| *p /= total);
    } else {
        v.iter_mut().for_each(|p| *p = 1.0 / n as f64);
    }
    v
}

/// Random valid linear game: features on the simplex, each row of `mu_h` a
/// probability vector over states, `theta_h` uniform in `[-1, 1]^d`.
pub fn random_simplex_game<R: Rng + ?Sized>(
    d: usize,
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    rng: &mut R,
) -> Result<GameSpec> {
    if d == 0 || num_states == 0 || num_actions == 0 || horizon == 0 {
        return Err(Error::Input("random_simplex_game needs positive sizes".into()));
    }
    let features = (0..num_states * num_actions * num_actions)
        .map(|_| DVector::from_vec(random_simplex_point(d, rng)))
        .collect();
    let mut theta = Vec::with_capacity(horizon);
    let mut mu = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        theta.push(DVector::from_fn(d, |_, _| rng.random_range(-1.0..=1.0)));
        let mut m = DMatrix::zeros(d, num_states);
        for i in 0..d {
            let row = random_simplex_point(num_states, rng);
            for (xp, p) in row.into_iter().enumerate() {
                m[(i, xp)] = p;
            }
        }
        mu.push(m);
    }
    GameSpec::new(num_states, num_actions, features, theta, mu, InitialState::Fixed(0))
}

/// Random tabular game: rewards uniform in `[-1, 1]`, each transition row
/// uniform on the simplex.
pub fn random_tabular_game<R: Rng + ?Sized>(
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    rng: &mut R,
) -> Result<GameSpec> {
    if num_states == 0 || num_actions == 0 || horizon == 0 {
        return Err(Error::Input("random_tabular_game needs positive sizes".into()));
    }
    let mut reward = Vec::with_capacity(horizon);
    let mut transition = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let mut rh = Vec::with_capacity(num_states);
        let mut th = Vec::with_capacity(num_states);
        for _ in 0..num_states {
            let mut rx = Vec::with_capacity(num_actions);
            let mut tx = Vec::with_capacity(num_actions);
            for _ in 0..num_actions {
                rx.push((0..num_actions).map(|_| rng.random_range(-1.0..=1.0)).collect::<Vec<f64>>());
                tx.push((0..num_actions).map(|_| random_simplex_point(num_states, rng)).collect::<Vec<_>>());
            }
            rh.push(rx);
            th.push(tx);
        }
        reward.push(rh);
        transition.push(th);
    }
    tabular_game(&reward, &transition)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_by_two_tables(rng: &mut ChaCha8Rng) -> (Vec<Vec<Vec<Vec<f64>>>>, Vec<Vec<Vec<Vec<Vec<f64>>>>>) {
        let reward = (0..2)
            .map(|_| {
                (0..2)
                    .map(|_| (0..2).map(|_| (0..2).map(|_| rng.random_range(-1.0..=1.0)).collect()).collect())
                    .collect()
            })
            .collect();
        let transition = (0..2)
            .map(|_| {
                (0..2)
                    .map(|_| (0..2).map(|_| (0..2).map(|_| random_simplex_point(2, rng)).collect()).collect())
                    .collect()
            })
            .collect();
        (reward, transition)
    }

    #[test]
    fn tabular_constant_reward_selects_table_entry() {
        let reward = vec![vec![vec![vec![0.5; 2]; 2]; 2]];
        let transition = vec![vec![vec![vec![vec![0.25, 0.75]; 2]; 2]; 2]];
        let spec = tabular_game(&reward, &transition).unwrap();
        let (r, next) = spec.query(1, 1, 0, 1).unwrap();
        assert_eq!(r, 0.5);
        assert_eq!(next, vec![0.25, 0.75]);
    }

    #[test]
    fn single_state_absorbing() {
        let spec = GameSpec::new(
            1,
            1,
            vec![DVector::from_element(1, 1.0)],
            vec![DVector::zeros(1)],
            vec![DMatrix::from_element(1, 1, 1.0)],
            InitialState::Fixed(0),
        )
        .unwrap();
        assert_eq!(spec.query(1, 0, 0, 0).unwrap(), (0.0, vec![1.0]));
    }

    #[test]
    fn one_state_one_action_tabular() {
        let spec = tabular_game(&[vec![vec![vec![1.0]]]], &[vec![vec![vec![vec![1.0]]]]]).unwrap();
        assert_eq!(spec.dim(), 1);
        assert_eq!(spec.phi(0, 0, 0)[0], 1.0);
        assert_eq!(spec.theta(1)[0], 1.0);
    }

    #[test]
    fn tabular_round_trip_all_tuples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (reward, transition) = two_by_two_tables(&mut rng);
        let spec = tabular_game(&reward, &transition).unwrap();
        for h in 1..=2 {
            for x in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        let (r, next) = spec.query(h, x, a, b).unwrap();
                        assert_eq!(r, reward[h - 1][x][a][b]);
                        assert_eq!(next, transition[h - 1][x][a][b]);
                    }
                }
            }
        }
    }

    #[test]
    fn tabular_rejects_out_of_range_reward() {
        let err = tabular_game(&[vec![vec![vec![1.5]]]], &[vec![vec![vec![vec![1.0]]]]]).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    #[test]
    fn tabular_rejects_substochastic_row() {
        let err = tabular_game(&[vec![vec![vec![0.0]]]], &[vec![vec![vec![vec![0.9]]]]]).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    #[test]
    fn query_matches_naive_loops_on_simplex_game() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = random_simplex_game(4, 3, 2, 2, &mut rng).unwrap();
        for h in 1..=2 {
            for x in 0..3 {
                for a in 0..2 {
                    for b in 0..2 {
                        let phi = spec.phi(x, a, b);
                        let mut r = 0.0;
                        for i in 0..4 {
                            r += phi[i] * spec.theta(h)[i];
                        }
                        let (qr, next) = spec.query(h, x, a, b).unwrap();
                        assert!((qr - r).abs() < 1e-12);
                        for xp in 0..3 {
                            let mut p = 0.0;
                            for i in 0..4 {
                                p += phi[i] * spec.mu(h)[(i, xp)];
                            }
                            assert!((next[xp] - p).abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn query_rejects_bad_indices() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = random_simplex_game(2, 2, 2, 2, &mut rng).unwrap();
        assert!(matches!(spec.query(0, 0, 0, 0), Err(Error::Input(_))));
        assert!(matches!(spec.query(3, 0, 0, 0), Err(Error::Input(_))));
        assert!(matches!(spec.query(1, 2, 0, 0), Err(Error::Input(_))));
        assert!(matches!(spec.query(1, 0, 0, 2), Err(Error::Input(_))));
    }

    #[test]
    fn query_clamps_roundoff_and_rejects_real_negatives() {
        let make = |neg: f64| {
            GameSpec::new(
                2,
                1,
                vec![DVector::from_element(1, 1.0), DVector::from_element(1, 1.0)],
                vec![DVector::zeros(1)],
                vec![DMatrix::from_row_slice(1, 2, &[1.0 - neg, neg])],
                InitialState::Fixed(0),
            )
            .unwrap()
        };
        let (_, next) = make(-1e-13).query(1, 0, 0, 0).unwrap();
        assert_eq!(next[1], 0.0);
        assert!((next.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(matches!(make(-1e-6).query(1, 0, 0, 0), Err(Error::ModelValidity(_))));
    }

    #[test]
    fn sample_point_mass_is_certain() {
        let spec = tabular_game(&[vec![vec![vec![0.0]]; 2]], &[vec![vec![vec![vec![0.0, 1.0]]]; 2]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert_eq!(spec.sample_next(1, 0, 0, 0, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn sample_uniform_frequencies() {
        let spec = tabular_game(&[vec![vec![vec![0.0]]; 2]], &[vec![vec![vec![vec![0.5, 0.5]]]; 2]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 10_000;
        let ones = (0..n).filter(|_| spec.sample_next(1, 0, 0, 0, &mut rng).unwrap() == 1).count();
        assert!((ones as f64 / n as f64 - 0.5).abs() < 0.02);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = random_simplex_game(3, 4, 2, 1, &mut rng).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| spec.sample_next(1, 0, 1, 0, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
    }

    #[test]
    fn random_simplex_games_validate_over_seeds() {
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = random_simplex_game(8, 2, 2, 2, &mut rng).unwrap();
            let report = validate(&spec);
            assert!(report.is_empty(), "seed {seed}: {report}");
            for h in 1..=2 {
                for x in 0..2 {
                    for a in 0..2 {
                        for b in 0..2 {
                            let (_, raw) = spec.raw_query(h, x, a, b);
                            assert!(raw.iter().all(|p| *p >= 0.0));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn random_simplex_game_is_deterministic() {
        let make = || {
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            random_simplex_game(3, 3, 2, 2, &mut rng).unwrap()
        };
        assert_eq!(make().to_toml_string().unwrap(), make().to_toml_string().unwrap());
    }

    #[test]
    fn query_is_pure() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let spec = random_simplex_game(5, 3, 3, 2, &mut rng).unwrap();
        let first = spec.query(2, 1, 2, 0).unwrap();
        for _ in 0..10 {
            let again = spec.query(2, 1, 2, 0).unwrap();
            assert_eq!(first.0.to_bits(), again.0.to_bits());
            assert!(first.1.iter().zip(&again.1).all(|(p, q)| p.to_bits() == q.to_bits()));
        }
    }
}
