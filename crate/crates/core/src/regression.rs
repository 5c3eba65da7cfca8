//! Regularized least squares for one step `h`: the Gram matrix
//! `I + sum phi phi^T`, its inverse maintained by rank-one updates, and the
//! observed `(phi, next_state, reward)` history.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Slack on `||phi|| <= 1`.
const PHI_NORM_TOL: f64 = 1e-9;
/// Quadratic forms above `-RADICAND_TOL` are clamped to zero.
pub const RADICAND_TOL: f64 = 1e-12;
/// Recompute the inverse from scratch after this many rank-one updates.
pub const REFRESH_EVERY: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub phi: DVector<f64>,
    pub next_state: usize,
    pub reward: f64,
}

#[derive(Debug, Clone)]
pub struct GramState {
    lambda: DMatrix<f64>,
    lambda_inv: DMatrix<f64>,
    history: Vec<Sample>,
    since_refresh: usize,
    /// Running `sum_j phi_j^T Lambda_{j-1}^{-1} phi_j`.
    potential: f64,
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numeric("Gram matrix is not positive definite".into()))?;
    let mut inv = chol.inverse();
    symmetrize(&mut inv);
    Ok(inv)
}

impl GramState {
    /// Fresh state: `Lambda = I`, empty history.
    pub fn new(d: usize) -> Self {
        Self {
            lambda: DMatrix::identity(d, d),
            lambda_inv: DMatrix::identity(d, d),
            history: Vec::new(),
            since_refresh: 0,
            potential: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.lambda.nrows()
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    pub fn lambda(&self) -> &DMatrix<f64> {
        &self.lambda
    }

    pub fn lambda_inv(&self) -> &DMatrix<f64> {
        &self.lambda_inv
    }

    pub fn history(&self) -> &[Sample] {
        &self.history
    }

    /// `sum_j phi_j^T Lambda_{j-1}^{-1} phi_j` over all updates so far.
    pub fn potential_sum(&self) -> f64 {
        self.potential
    }

    /// Append one observation and update `Lambda` and its inverse.
    pub fn update(&mut self, phi: DVector<f64>, next_state: usize, reward: f64) -> Result<()> {
        if phi.len() != self.dim() {
            return Err(Error::Input(format!("phi has length {}, expected {}", phi.len(), self.dim())));
        }
        let norm = phi.norm();
        if !(norm <= 1.0 + PHI_NORM_TOL) {
            return Err(Error::Input(format!("||phi|| = {norm} exceeds 1")));
        }
        let u = &self.lambda_inv * &phi;
        let quad = phi.dot(&u).max(0.0);
        self.potential += quad;
        self.lambda.ger(1.0, &phi, &phi, 1.0);
        symmetrize(&mut self.lambda);

        self.since_refresh += 1;
        if self.since_refresh >= REFRESH_EVERY {
            self.lambda_inv = spd_inverse(&self.lambda)?;
            self.since_refresh = 0;
        } else {
            // Sherman-Morrison: (L + pp^T)^-1 = L^-1 - (L^-1 p)(L^-1 p)^T / (1 + p^T L^-1 p)
            let scale = 1.0 / (1.0 + quad);
            let d = self.dim();
            for i in 0..d {
                for j in i..d {
                    let v = self.lambda_inv[(i, j)] - scale * u[i] * u[j];
                    self.lambda_inv[(i, j)] = v;
                    self.lambda_inv[(j, i)] = v;
                }
            }
        }
        self.history.push(Sample { phi, next_state, reward });
        Ok(())
    }

    /// `sqrt(phi^T Lambda^{-1} phi)`.
    pub fn weighted_norm(&self, phi: &DVector<f64>) -> Result<f64> {
        quad_norm(&self.lambda_inv, phi)
    }

    /// `Lambda^{-1} sum_tau phi_tau target_tau`.
    pub fn ridge_solve(&self, targets: &[f64]) -> Result<DVector<f64>> {
        if targets.len() != self.history.len() {
            return Err(Error::Input(format!(
                "{} targets for {} samples",
                targets.len(),
                self.history.len()
            )));
        }
        let mut rhs = DVector::zeros(self.dim());
        for (s, &t) in self.history.iter().zip(targets) {
            rhs.axpy(t, &s.phi, 1.0);
        }
        Ok(&self.lambda_inv * rhs)
    }

    /// `Lambda` rebuilt from the history alone.
    pub fn rebuilt_lambda(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::identity(d, d);
        for s in &self.history {
            m.ger(1.0, &s.phi, &s.phi, 1.0);
        }
        m
    }

    /// `||Lambda^{-1}_maintained - inverse(Lambda)||_F`.
    pub fn inverse_drift(&self) -> Result<f64> {
        Ok((&self.lambda_inv - spd_inverse(&self.lambda)?).norm())
    }

    /// `log det Lambda`, computed from a fresh factorization.
    pub fn log_det(&self) -> Result<f64> {
        let chol = self
            .lambda
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numeric("Gram matrix is not positive definite".into()))?;
        Ok(2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>())
    }

    /// `sum_i phi_i^T Lambda^{-1} phi_i` over the history, with the current
    /// inverse. Never exceeds `d`.
    pub fn leverage_sum(&self) -> f64 {
        self.history
            .iter()
            .map(|s| s.phi.dot(&(&self.lambda_inv * &s.phi)))
            .sum()
    }
}

/// `sqrt(phi^T M phi)` with roundoff-level negatives clamped to zero.
pub fn quad_norm(m: &DMatrix<f64>, phi: &DVector<f64>) -> Result<f64> {
    let q = phi.dot(&(m * phi));
    if q < -RADICAND_TOL {
        return Err(Error::Numeric(format!("negative quadratic form {q}")));
    }
    Ok(q.max(0.0).sqrt())
}
