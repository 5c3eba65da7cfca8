use std::fmt;

use super::{GameSpec, BOUND_TOL, MASS_TOL, NEG_MASS_TOL};

/// One violated model assumption, with its location and magnitude.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    FeatureNorm { x: usize, a: usize, b: usize, norm: f64 },
    ThetaNorm { h: usize, norm: f64, bound: f64 },
    MuMassNorm { h: usize, norm: f64, bound: f64 },
    RewardBound { h: usize, x: usize, a: usize, b: usize, reward: f64 },
    NegativeMass { h: usize, x: usize, a: usize, b: usize, next: usize, mass: f64 },
    MassDeficit { h: usize, x: usize, a: usize, b: usize, total: f64, deficit: f64 },
}

impl Violation {
    /// How far past the bound the violation is.
    pub fn magnitude(&self) -> f64 {
        match *self {
            Violation::FeatureNorm { norm, .. } => norm - 1.0,
            Violation::ThetaNorm { norm, bound, .. } | Violation::MuMassNorm { norm, bound, .. } => norm - bound,
            Violation::RewardBound { reward, .. } => reward.abs() - 1.0,
            Violation::NegativeMass { mass, .. } => -mass,
            Violation::MassDeficit { deficit, .. } => deficit.abs(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::FeatureNorm { x, a, b, norm } => {
                write!(f, "||phi({x},{a},{b})|| = {norm} exceeds 1")
            }
            Violation::ThetaNorm { h, norm, bound } => write!(f, "||theta_{h}|| = {norm} exceeds {bound}"),
            Violation::MuMassNorm { h, norm, bound } => write!(f, "||mu_{h}(S)|| = {norm} exceeds {bound}"),
            Violation::RewardBound { h, x, a, b, reward } => {
                write!(f, "reward at (h={h}, x={x}, a={a}, b={b}) = {reward} outside [-1, 1]")
            }
            Violation::NegativeMass { h, x, a, b, next, mass } => {
                write!(f, "P_{h}({next} | {x},{a},{b}) = {mass} is negative")
            }
            Violation::MassDeficit { h, x, a, b, total, deficit } => {
                write!(f, "P_{h}(. | {x},{a},{b}) sums to {total} (deficit {deficit})")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Check every linear-model assumption and list what fails.
pub fn validate(spec: &GameSpec) -> ValidationReport {
    let mut violations = Vec::new();
    let sqrt_d = (spec.dim() as f64).sqrt();
    let (ns, na) = (spec.num_states(), spec.num_actions());

    for x in 0..ns {
        for a in 0..na {
            for b in 0..na {
                let norm = spec.phi(x, a, b).norm();
                if norm > 1.0 + BOUND_TOL {
                    violations.push(Violation::FeatureNorm { x, a, b, norm });
                }
            }
        }
    }

    for h in 1..=spec.horizon() {
        let norm = spec.theta(h).norm();
        if norm > sqrt_d + BOUND_TOL {
            violations.push(Violation::ThetaNorm { h, norm, bound: sqrt_d });
        }
        let mass = spec.mu(h).column_sum();
        let norm = mass.norm();
        if norm > sqrt_d + BOUND_TOL {
            violations.push(Violation::MuMassNorm { h, norm, bound: sqrt_d });
        }
        for x in 0..ns {
            for a in 0..na {
                for b in 0..na {
                    let (reward, next) = spec.raw_query(h, x, a, b);
                    if !(reward.abs() <= 1.0 + BOUND_TOL) {
                        violations.push(Violation::RewardBound { h, x, a, b, reward });
                    }
                    for (xp, &p) in next.iter().enumerate() {
                        if p < -NEG_MASS_TOL {
                            violations.push(Violation::NegativeMass { h, x, a, b, next: xp, mass: p });
                        }
                    }
                    let total: f64 = next.iter().map(|p| p.max(0.0)).sum();
                    if !((total - 1.0).abs() <= MASS_TOL) {
                        violations.push(Violation::MassDeficit { h, x, a, b, total, deficit: 1.0 - total });
                    }
                }
            }
        }
    }
    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game_model::{random_simplex_game, tabular_game, InitialState};
    use nalgebra::{DMatrix, DVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tabular_output_is_clean() {
        let reward = vec![vec![vec![vec![0.3, -0.2], vec![1.0, -1.0]]; 2]; 3];
        let transition = vec![vec![vec![vec![vec![0.5, 0.5], vec![1.0, 0.0]]; 2]; 2]; 3];
        let spec = tabular_game(&reward, &transition).unwrap();
        assert!(validate(&spec).is_empty());
    }

    #[test]
    fn short_row_reports_tuple_and_deficit() {
        let spec = GameSpec::new(
            2,
            1,
            vec![DVector::from_element(1, 1.0), DVector::from_element(1, 1.0)],
            vec![DVector::zeros(1)],
            vec![DMatrix::from_row_slice(1, 2, &[0.4, 0.5])],
            InitialState::Fixed(0),
        )
        .unwrap();
        let report = validate(&spec);
        assert_eq!(report.violations.len(), 2);
        match report.violations[0] {
            Violation::MassDeficit { h, x, a, b, deficit, .. } => {
                assert_eq!((h, x, a, b), (1, 0, 0, 0));
                assert!((deficit - 0.1).abs() < 1e-12);
            }
            ref other => panic!("unexpected {other}"),
        }
        assert!(report.to_string().contains("deficit"));
    }

    #[test]
    fn scaled_theta_is_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let spec = random_simplex_game(4, 2, 2, 1, &mut rng).unwrap();
        let scaled = GameSpec::new(
            2,
            2,
            (0..8).map(|i| spec.phi(i / 4, (i / 2) % 2, i % 2).clone()).collect(),
            vec![spec.theta(1) * 10.0],
            vec![spec.mu(1).clone()],
            InitialState::Fixed(0),
        )
        .unwrap();
        let report = validate(&scaled);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::RewardBound { .. } | Violation::ThetaNorm { .. })));
        assert!(report.violations.iter().all(|v| v.magnitude() > 0.0));
    }
}
