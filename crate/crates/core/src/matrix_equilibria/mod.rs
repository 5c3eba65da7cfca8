//! Exact solvers for finite matrix games.
//!
//! Player 1 picks rows and maximizes, player 2 picks columns and minimizes.
//! In a general-sum game player 1 receives `u1(a, b)` and player 2 pays
//! `u2(a, b)`, so player 2 also prefers small `u2`.

mod simplex;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use simplex::{maximize, Constraint, LpFailure, Relation};

/// Mass tolerance for probability vectors.
pub const PROB_TOL: f64 = 1e-9;
/// Feasibility promised to callers of [`solve_cce`] and [`solve_zero_sum`].
pub const EQUILIBRIUM_TOL: f64 = 1e-8;

fn check_probs(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::Input("empty probability vector".into()));
    }
    if p.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::Input("probabilities must be nonnegative".into()));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::Input(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

/// Clamp tiny negatives and renormalize an LP output.
fn cleaned(mut p: Vec<f64>) -> Vec<f64> {
    p.iter_mut().for_each(|v| *v = v.max(0.0));
    let total: f64 = p.iter().sum();
    if total > 0.0 {
        p.iter_mut().for_each(|v| *v /= total);
    }
    p
}

/// A distribution over one player's actions.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedStrategy {
    probs: Vec<f64>,
}

impl MixedStrategy {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_probs(&probs)?;
        Ok(Self { probs })
    }

    pub fn point_mass(n: usize, i: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[i] = 1.0;
        Self { probs }
    }

    pub fn uniform(n: usize) -> Self {
        Self { probs: vec![1.0 / n as f64; n] }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// A distribution over joint action pairs, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    n: usize,
    probs: Vec<f64>,
}

impl JointDistribution {
    pub fn new(n: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != n * n {
            return Err(Error::Input(format!("joint distribution needs {} entries", n * n)));
        }
        check_probs(&probs)?;
        Ok(Self { n, probs })
    }

    pub fn point_mass(n: usize, a: usize, b: usize) -> Self {
        let mut probs = vec![0.0; n * n];
        probs[a * n + b] = 1.0;
        Self { n, probs }
    }

    pub fn product(p: &MixedStrategy, q: &MixedStrategy) -> Self {
        let n = p.len();
        let probs = (0..n * n).map(|i| p.probs[i / n] * q.probs[i % n]).collect();
        Self { n, probs }
    }

    pub fn num_actions(&self) -> usize {
        self.n
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.probs[a * self.n + b]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Expected payoff `E_{(a,b) ~ sigma} u(a, b)`.
    pub fn expect(&self, u: &DMatrix<f64>) -> f64 {
        let mut total = 0.0;
        for a in 0..self.n {
            for b in 0..self.n {
                total += self.get(a, b) * u[(a, b)];
            }
        }
        total
    }
}

/// Player marginals of a joint distribution.
pub fn marginals(sigma: &JointDistribution) -> (MixedStrategy, MixedStrategy) {
    let n = sigma.n;
    let mut p1 = vec![0.0; n];
    let mut p2 = vec![0.0; n];
    for a in 0..n {
        for b in 0..n {
            let s = sigma.get(a, b);
            p1[a] += s;
            p2[b] += s;
        }
    }
    (MixedStrategy { probs: p1 }, MixedStrategy { probs: p2 })
}

fn check_payoff(u: &DMatrix<f64>, n: Option<usize>) -> Result<usize> {
    if u.nrows() == 0 || u.nrows() != u.ncols() {
        return Err(Error::Input("payoff matrices must be square and nonempty".into()));
    }
    if let Some(n) = n {
        if u.nrows() != n {
            return Err(Error::Input("payoff matrices must have matching sizes".into()));
        }
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("payoff entries must be finite".into()));
    }
    Ok(u.nrows())
}

/// Solution of a zero-sum matrix game.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroSumSolution {
    pub value: f64,
    pub row: MixedStrategy,
    pub col: MixedStrategy,
}

impl ZeroSumSolution {
    /// `min_b (row^T M)_b`: what the row strategy guarantees.
    pub fn lower(&self, payoff: &DMatrix<f64>) -> f64 {
        (0..payoff.ncols())
            .map(|b| (0..payoff.nrows()).map(|a| self.row.probs[a] * payoff[(a, b)]).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    /// `max_a (M col)_a`: what the column strategy concedes at most.
    pub fn upper(&self, payoff: &DMatrix<f64>) -> f64 {
        (0..payoff.nrows())
            .map(|a| (0..payoff.ncols()).map(|b| self.col.probs[b] * payoff[(a, b)]).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn lp_error(what: &str, failure: LpFailure) -> Error {
    Error::Solver { message: format!("{what}: {failure:?}"), residual: f64::NAN }
}

/// Minimax value and optimal mixed strategies of a zero-sum game in which
/// the row player maximizes `payoff`.
pub fn solve_zero_sum(payoff: &DMatrix<f64>) -> Result<ZeroSumSolution> {
    let n = check_payoff(payoff, None)?;
    if n == 1 {
        let one = MixedStrategy::point_mass(1, 0);
        return Ok(ZeroSumSolution { value: payoff[(0, 0)], row: one.clone(), col: one });
    }
    // Shift so every entry is at least 1; the value variable is then positive.
    let shift = 1.0 - payoff.min();
    let shifted = payoff.map(|v| v + shift);

    // Row player: max v s.t. v - sum_a x_a M(a, b) <= 0 for all b, sum x = 1.
    let mut objective = vec![0.0; n + 1];
    objective[n] = 1.0;
    let mut rows: Vec<Constraint> = (0..n)
        .map(|b| {
            let mut coeffs: Vec<f64> = (0..n).map(|a| -shifted[(a, b)]).collect();
            coeffs.push(1.0);
            Constraint { coeffs, relation: Relation::Le, rhs: 0.0 }
        })
        .collect();
    let mut simplex_row = vec![1.0; n];
    simplex_row.push(0.0);
    rows.push(Constraint { coeffs: simplex_row.clone(), relation: Relation::Eq, rhs: 1.0 });
    let x = maximize(&objective, &rows).map_err(|f| lp_error("row player LP", f))?;

    // Column player: max -u s.t. sum_b y_b M(a, b) - u <= 0 for all a, sum y = 1.
    objective[n] = -1.0;
    let mut rows: Vec<Constraint> = (0..n)
        .map(|a| {
            let mut coeffs: Vec<f64> = (0..n).map(|b| shifted[(a, b)]).collect();
            coeffs.push(-1.0);
            Constraint { coeffs, relation: Relation::Le, rhs: 0.0 }
        })
        .collect();
    rows.push(Constraint { coeffs: simplex_row, relation: Relation::Eq, rhs: 1.0 });
    let y = maximize(&objective, &rows).map_err(|f| lp_error("column player LP", f))?;

    let row = MixedStrategy { probs: cleaned(x[..n].to_vec()) };
    let col = MixedStrategy { probs: cleaned(y[..n].to_vec()) };
    let mut sol = ZeroSumSolution { value: 0.0, row, col };
    let lower = sol.lower(payoff);
    let upper = sol.upper(payoff);
    let gap = upper - lower;
    if !(gap <= EQUILIBRIUM_TOL) {
        return Err(Error::Solver { message: "minimax duality gap too large".into(), residual: gap });
    }
    sol.value = 0.5 * (lower + upper);
    Ok(sol)
}

/// Outcome of checking the coarse-correlated-equilibrium inequalities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CceCheck {
    pub ok: bool,
    pub max_violation: f64,
}

/// Largest gain any unilateral, unconditional deviation achieves under
/// `sigma`, and whether it is within `tol`.
pub fn verify_cce(sigma: &JointDistribution, u1: &DMatrix<f64>, u2: &DMatrix<f64>, tol: f64) -> CceCheck {
    let n = sigma.n;
    let v1 = sigma.expect(u1);
    let v2 = sigma.expect(u2);
    let mut worst: f64 = 0.0;
    for dev in 0..n {
        // Sum in the same (a, b) order as `expect` so constant payoffs give
        // exactly zero slack.
        let mut gain1 = 0.0;
        let mut gain2 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let s = sigma.get(a, b);
                gain1 += s * u1[(dev, b)];
                gain2 += s * u2[(a, dev)];
            }
        }
        worst = worst.max(gain1 - v1).max(v2 - gain2);
    }
    CceCheck { ok: worst <= tol, max_violation: worst }
}

/// A coarse correlated equilibrium of the general-sum game `(u1, u2)`.
///
/// Among all CCEs this returns one maximizing `E[u1 - u2]`; the simplex
/// pivots deterministically, so ties resolve the same way every time.
pub fn solve_cce(u1: &DMatrix<f64>, u2: &DMatrix<f64>) -> Result<JointDistribution> {
    let n = check_payoff(u1, None)?;
    check_payoff(u2, Some(n))?;
    if n == 1 {
        return Ok(JointDistribution::point_mass(1, 0, 0));
    }
    let idx = |a: usize, b: usize| a * n + b;
    let objective: Vec<f64> = (0..n * n).map(|i| u1[(i / n, i % n)] - u2[(i / n, i % n)]).collect();
    let mut rows = Vec::with_capacity(2 * n + 1);
    for dev in 0..n {
        // sum sigma(a,b) [u1(dev,b) - u1(a,b)] <= 0
        let mut coeffs = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                coeffs[idx(a, b)] = u1[(dev, b)] - u1[(a, b)];
            }
        }
        rows.push(Constraint { coeffs, relation: Relation::Le, rhs: 0.0 });
    }
    for dev in 0..n {
        // sum sigma(a,b) [u2(a,b) - u2(a,dev)] <= 0
        let mut coeffs = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                coeffs[idx(a, b)] = u2[(a, b)] - u2[(a, dev)];
            }
        }
        rows.push(Constraint { coeffs, relation: Relation::Le, rhs: 0.0 });
    }
    rows.push(Constraint { coeffs: vec![1.0; n * n], relation: Relation::Eq, rhs: 1.0 });

    let x = maximize(&objective, &rows).map_err(|f| lp_error("CCE LP", f))?;
    let sigma = JointDistribution { n, probs: cleaned(x) };
    let check = verify_cce(&sigma, u1, u2, EQUILIBRIUM_TOL);
    if !check.ok {
        return Err(Error::Solver { message: "CCE certificate failed".into(), residual: check.max_violation });
    }
    Ok(sigma)
}

/// Two nearby 2x2 games, each with a unique CCE, whose equilibrium values
/// differ by at least one. Returns `(u1, u2, u1', u2')`.
pub fn instability_pair(eps: f64) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Input(format!("eps must be positive, got {eps}")));
    }
    let u1 = DMatrix::from_row_slice(2, 2, &[1.0 + eps, eps, 1.0, 0.0]);
    let u2 = DMatrix::from_row_slice(2, 2, &[-1.0 - eps, -1.0, -eps, 0.0]);
    let u1p = DMatrix::from_row_slice(2, 2, &[1.0 - eps, -eps, 1.0, 0.0]);
    let u2p = DMatrix::from_row_slice(2, 2, &[-1.0 + eps, -1.0, eps, 0.0]);
    Ok((u1, u2, u1p, u2p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..=1.0))
    }

    #[test]
    fn one_by_one_game() {
        let m = DMatrix::from_element(1, 1, 0.37);
        let sol = solve_zero_sum(&m).unwrap();
        assert_eq!(sol.value, 0.37);
        assert_eq!(sol.row.probs(), &[1.0]);
        assert_eq!(sol.col.probs(), &[1.0]);
    }

    #[test]
    fn matching_pennies() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let sol = solve_zero_sum(&m).unwrap();
        assert!(sol.value.abs() < 1e-12);
        for p in sol.row.probs().iter().chain(sol.col.probs()) {
            assert!((p - 0.5).abs() < 1e-12);
        }
    }

    /// Grid brute force: max over row strategies on a 1e-3 simplex grid of
    /// the min over pure columns.
    fn grid_value_3x3(m: &DMatrix<f64>) -> f64 {
        let steps = 1000;
        let mut best = f64::NEG_INFINITY;
        for i in 0..=steps {
            for j in 0..=steps - i {
                let p = [i as f64 / steps as f64, j as f64 / steps as f64, (steps - i - j) as f64 / steps as f64];
                let worst = (0..3)
                    .map(|b| (0..3).map(|a| p[a] * m[(a, b)]).sum::<f64>())
                    .fold(f64::INFINITY, f64::min);
                best = best.max(worst);
            }
        }
        best
    }

    #[test]
    fn random_3x3_matches_grid_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..5 {
            let m = random_matrix(3, &mut rng);
            let sol = solve_zero_sum(&m).unwrap();
            let grid = grid_value_3x3(&m);
            assert!((sol.value - grid).abs() <= 2e-3, "lp {} grid {}", sol.value, grid);
            assert!(sol.value >= grid - 1e-12);
        }
    }

    #[test]
    fn rejects_non_finite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, 0.0, 0.0]);
        assert!(matches!(solve_zero_sum(&m), Err(Error::Input(_))));
        assert!(matches!(solve_cce(&m, &m), Err(Error::Input(_))));
    }

    #[test]
    fn constant_payoffs_give_fixed_vertex() {
        let c = DMatrix::from_element(3, 3, 0.7);
        let sigma = solve_cce(&c, &c).unwrap();
        assert_eq!(sigma, solve_cce(&c, &c).unwrap());
        assert!(verify_cce(&sigma, &c, &c, 0.0).ok);
        assert_eq!(sigma, JointDistribution::point_mass(3, 0, 0));
    }

    #[test]
    fn any_sigma_on_constant_payoffs_is_exact() {
        let c = DMatrix::from_element(2, 2, -1.3);
        let sigma = JointDistribution::new(2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let check = verify_cce(&sigma, &c, &c, 0.0);
        assert!(check.ok, "{check:?}");
    }

    #[test]
    fn unique_cces_of_the_instability_pair() {
        let (u1, u2, u1p, u2p) = instability_pair(0.1).unwrap();
        assert_eq!(u1, DMatrix::from_row_slice(2, 2, &[1.1, 0.1, 1.0, 0.0]));
        assert_eq!(u2, DMatrix::from_row_slice(2, 2, &[-1.1, -1.0, -0.1, 0.0]));
        let sigma = solve_cce(&u1, &u2).unwrap();
        assert!((sigma.get(0, 0) - 1.0).abs() < 1e-9);
        assert!((sigma.expect(&u1) - 1.1).abs() < 1e-9);
        assert!((sigma.expect(&u2) + 1.1).abs() < 1e-9);
        let sigma_p = solve_cce(&u1p, &u2p).unwrap();
        assert!((sigma_p.get(1, 1) - 1.0).abs() < 1e-9);
        assert!(sigma_p.expect(&u1p).abs() < 1e-9);
        assert!(sigma_p.expect(&u2p).abs() < 1e-9);
    }

    #[test]
    fn dominated_point_mass_is_not_a_cce() {
        let (u1, u2, _, _) = instability_pair(0.1).unwrap();
        // Bottom-right: player 1 gains eps by moving to the top row.
        let check = verify_cce(&JointDistribution::point_mass(2, 1, 1), &u1, &u2, 1e-12);
        assert!(!check.ok);
        assert!(check.max_violation >= 0.1 - 1e-12);
    }

    #[test]
    fn instability_pair_distance_and_transfer() {
        for &eps in &[0.1, 0.01, 0.37] {
            let (u1, u2, u1p, u2p) = instability_pair(eps).unwrap();
            let dist = (&u1 - &u1p).amax().max((&u2 - &u2p).amax());
            assert!((dist - 2.0 * eps).abs() < 1e-12);
            let sigma = solve_cce(&u1, &u2).unwrap();
            let sigma_p = solve_cce(&u1p, &u2p).unwrap();
            assert!((sigma.expect(&u1) - sigma_p.expect(&u1p)).abs() >= 1.0);
            assert!(verify_cce(&sigma, &u1p, &u2p, eps + 1e-12).ok);
            assert!(verify_cce(&sigma_p, &u1, &u2, eps + 1e-12).ok);
        }
        assert!(instability_pair(0.0).is_err());
        assert!(instability_pair(-1.0).is_err());
    }

    #[test]
    fn marginal_cases() {
        let p = MixedStrategy::new(vec![0.2, 0.8]).unwrap();
        let q = MixedStrategy::new(vec![0.5, 0.5]).unwrap();
        let (m1, m2) = marginals(&JointDistribution::product(&p, &q));
        assert_eq!(m1, p);
        assert_eq!(m2, q);
        let (e1, e2) = marginals(&JointDistribution::point_mass(3, 2, 1));
        assert_eq!(e1.probs(), &[0.0, 0.0, 1.0]);
        assert_eq!(e2.probs(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn marginals_match_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let raw: Vec<f64> = (0..16).map(|_| rng.random::<f64>()).collect();
            let total: f64 = raw.iter().sum();
            let sigma = JointDistribution::new(4, raw.iter().map(|v| v / total).collect()).unwrap();
            let (p1, p2) = marginals(&sigma);
            for i in 0..4 {
                let mut r = 0.0;
                let mut c = 0.0;
                for j in 0..4 {
                    r += sigma.get(i, j);
                    c += sigma.get(j, i);
                }
                assert!((p1.probs()[i] - r).abs() < 1e-15);
                assert!((p2.probs()[i] - c).abs() < 1e-15);
            }
            assert!((p1.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((p2.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_invalid_distributions() {
        assert!(MixedStrategy::new(vec![0.5, 0.4]).is_err());
        assert!(MixedStrategy::new(vec![1.5, -0.5]).is_err());
        assert!(JointDistribution::new(2, vec![1.0, 0.0, 0.0]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn zero_sum_strategies_certify_the_value(seed in any::<u64>(), n in 1usize..=4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_matrix(n, &mut rng);
            let sol = solve_zero_sum(&m).unwrap();
            prop_assert!(sol.upper(&m) - sol.lower(&m) <= 1e-8);
            prop_assert!((sol.value - sol.lower(&m)).abs() <= 1e-8);
            prop_assert_eq!(&sol, &solve_zero_sum(&m).unwrap());
        }

        #[test]
        fn cce_is_feasible_and_deterministic(seed in any::<u64>(), n in 1usize..=4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u1 = random_matrix(n, &mut rng);
            let u2 = random_matrix(n, &mut rng);
            let sigma = solve_cce(&u1, &u2).unwrap();
            prop_assert!(verify_cce(&sigma, &u1, &u2, 1e-8).ok);
            let again = solve_cce(&u1, &u2).unwrap();
            prop_assert!(sigma.probs().iter().zip(again.probs()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }

        #[test]
        fn zero_sum_cce_collapses_to_game_value(seed in any::<u64>(), n in 1usize..=4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_matrix(n, &mut rng);
            let sigma = solve_cce(&m, &m).unwrap();
            let value = solve_zero_sum(&m).unwrap().value;
            prop_assert!((sigma.expect(&m) - value).abs() <= 1e-6);
        }

        #[test]
        fn exact_cce_of_perturbed_game_is_2eps_cce(seed in any::<u64>(), n in 2usize..=4, eps in 0.001f64..0.2) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u1 = random_matrix(n, &mut rng);
            let u2 = random_matrix(n, &mut rng);
            let v1 = u1.map(|v| v + rng.random_range(-eps..=eps));
            let v2 = u2.map(|v| v + rng.random_range(-eps..=eps));
            let sigma = solve_cce(&v1, &v2).unwrap();
            prop_assert!(verify_cce(&sigma, &u1, &u2, 2.0 * eps + 1e-8).ok);
        }
    }
}
