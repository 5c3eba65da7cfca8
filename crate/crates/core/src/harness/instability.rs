//! Two nearby general-sum games whose unique CCEs have far-apart values,
//! while each CCE stays an approximate CCE of the other game.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use super::emit::fmt_float;
use crate::error::Result;
use crate::matrix_equilibria::{instability_pair, solve_cce, verify_cce, JointDistribution};

#[derive(Debug, Clone, PartialEq)]
pub struct InstabilityReport {
    pub eps: f64,
    /// Payoffs of the maximizer and the minimizer's loss, original game.
    pub u1: DMatrix<f64>,
    pub u2: DMatrix<f64>,
    /// Same for the perturbed game.
    pub u1_perturbed: DMatrix<f64>,
    pub u2_perturbed: DMatrix<f64>,
    pub sigma: JointDistribution,
    pub sigma_perturbed: JointDistribution,
    pub value: (f64, f64),
    pub value_perturbed: (f64, f64),
    /// Largest entrywise payoff difference between the two games.
    pub distance: f64,
    /// Largest difference between the two games' CCE values.
    pub value_gap: f64,
    /// Worst deviation gain of each game's CCE inside the other game.
    pub transfer_violation: (f64, f64),
    pub transfer_ok: bool,
}

fn sup_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

/// Roundoff allowance on top of `eps` in the transfer check; `1 - (1 - eps)`
/// is not exactly `eps` in floating point.
const TRANSFER_ROUNDOFF: f64 = 1e-12;

/// Build and solve the pair at perturbation `eps`. The transfer check uses
/// tolerance `eps`.
pub fn demo_instability(eps: f64) -> Result<InstabilityReport> {
    let (u1, u2, u1p, u2p) = instability_pair(eps)?;
    let sigma = solve_cce(&u1, &u2)?;
    let sigma_p = solve_cce(&u1p, &u2p)?;
    let value = (sigma.expect(&u1), sigma.expect(&u2));
    let value_p = (sigma_p.expect(&u1p), sigma_p.expect(&u2p));
    let distance = sup_distance(&u1, &u1p).max(sup_distance(&u2, &u2p));
    let value_gap = (value.0 - value_p.0).abs().max((value.1 - value_p.1).abs());
    let into_perturbed = verify_cce(&sigma, &u1p, &u2p, eps + TRANSFER_ROUNDOFF);
    let into_original = verify_cce(&sigma_p, &u1, &u2, eps + TRANSFER_ROUNDOFF);
    Ok(InstabilityReport {
        eps,
        u1,
        u2,
        u1_perturbed: u1p,
        u2_perturbed: u2p,
        sigma,
        sigma_perturbed: sigma_p,
        value,
        value_perturbed: value_p,
        distance,
        value_gap,
        transfer_violation: (into_perturbed.max_violation, into_original.max_violation),
        transfer_ok: into_perturbed.ok && into_original.ok,
    })
}

fn write_game(s: &mut String, name: &str, u1: &DMatrix<f64>, u2: &DMatrix<f64>) {
    let _ = writeln!(s, "{name} (u1, u2):");
    for a in 0..u1.nrows() {
        let cells: Vec<String> = (0..u1.ncols()).map(|b| format!("({:+.4}, {:+.4})", u1[(a, b)], u2[(a, b)])).collect();
        let _ = writeln!(s, "  {}", cells.join("  "));
    }
}

fn write_sigma(s: &mut String, name: &str, sigma: &JointDistribution) {
    let n = sigma.num_actions();
    let cells: Vec<String> = (0..n * n).map(|i| format!("{:.4}", sigma.get(i / n, i % n))).collect();
    let _ = writeln!(s, "{name} CCE (row-major): [{}]", cells.join(", "));
}

impl InstabilityReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "eps = {}", self.eps);
        write_game(&mut s, "game", &self.u1, &self.u2);
        write_game(&mut s, "perturbed game", &self.u1_perturbed, &self.u2_perturbed);
        write_sigma(&mut s, "game", &self.sigma);
        write_sigma(&mut s, "perturbed game", &self.sigma_perturbed);
        let _ = writeln!(s, "values: ({:.6}, {:.6}) vs ({:.6}, {:.6})", self.value.0, self.value.1, self.value_perturbed.0, self.value_perturbed.1);
        let _ = writeln!(s, "payoff distance: {:.6}", self.distance);
        let _ = writeln!(s, "value gap: {:.6}", self.value_gap);
        let _ = writeln!(
            s,
            "transfer check at tol {}: {} (violations {:.3e}, {:.3e})",
            self.eps,
            if self.transfer_ok { "pass" } else { "FAIL" },
            self.transfer_violation.0,
            self.transfer_violation.1
        );
        s
    }

    /// One row per game.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("game,eps,sigma_00,sigma_01,sigma_10,sigma_11,value1,value2,distance,value_gap,transfer_violation,transfer_ok\n");
        for (name, sigma, value, violation) in [
            ("original", &self.sigma, self.value, self.transfer_violation.0),
            ("perturbed", &self.sigma_perturbed, self.value_perturbed, self.transfer_violation.1),
        ] {
            let cells: Vec<String> = sigma.probs().iter().map(|&p| fmt_float(p)).collect();
            let _ = writeln!(
                s,
                "{name},{},{},{},{},{},{},{},{}",
                fmt_float(self.eps),
                cells.join(","),
                fmt_float(value.0),
                fmt_float(value.1),
                fmt_float(self.distance),
                fmt_float(self.value_gap),
                fmt_float(violation),
                self.transfer_ok
            );
        }
        s
    }
}
