//! Parametric optimistic/pessimistic Q functions and their on-the-fly
//! rounding onto a fixed finite grid.
//!
//! A [`QParams`] describes
//! `Q(phi) = clip_H( <w, phi> + rho * beta * sqrt(phi^T A phi) )`.
//! Rounding never materializes the net: each coordinate of `w` and each
//! entry of `A` is truncated toward zero onto a power-of-two grid, so the
//! rounded parameters are exactly representable and rounding twice is a
//! no-op.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const PARAM_TOL: f64 = 1e-9;

/// Sign of the exploration bonus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// `clip_H(u) = max(min(u, H), -H)`.
pub fn clip(u: f64, horizon: f64) -> f64 {
    u.min(horizon).max(-horizon)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QParams {
    w: DVector<f64>,
    a: DMatrix<f64>,
    rho: Sign,
    beta: f64,
    horizon: f64,
    k: usize,
}

impl QParams {
    /// `k` is the episode index; it sets the radius `2 H sqrt(d k)` of the
    /// ball that `w` must lie in. `a` must satisfy `||a||_F <= sqrt(d)`.
    pub fn new(w: DVector<f64>, a: DMatrix<f64>, rho: Sign, beta: f64, horizon: f64, k: usize) -> Result<Self> {
        let d = w.len();
        if d == 0 || a.nrows() != d || a.ncols() != d {
            return Err(Error::Input("QParams: w and A dimensions disagree".into()));
        }
        if !(beta > 0.0) || !beta.is_finite() || !(horizon > 0.0) || !horizon.is_finite() || k == 0 {
            return Err(Error::Input("QParams: beta, H and k must be positive".into()));
        }
        let q = Self { w, a, rho, beta, horizon, k };
        let wn = q.w.norm();
        if !(wn <= q.w_radius() + PARAM_TOL) {
            return Err(Error::Input(format!("QParams: ||w|| = {wn} exceeds {}", q.w_radius())));
        }
        let an = q.a.norm();
        if !(an <= (d as f64).sqrt() + PARAM_TOL) {
            return Err(Error::Input(format!("QParams: ||A||_F = {an} exceeds sqrt(d)")));
        }
        Ok(q)
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn w(&self) -> &DVector<f64> {
        &self.w
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rho(&self) -> Sign {
        self.rho
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `2 H sqrt(d k)`.
    pub fn w_radius(&self) -> f64 {
        2.0 * self.horizon * ((self.dim() * self.k) as f64).sqrt()
    }

    /// The same function with the bonus sign flipped and `w` negated, i.e.
    /// the unclipped part of `-Q`.
    pub fn negated(&self) -> Self {
        let rho = match self.rho {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        };
        Self { w: -&self.w, rho, ..self.clone() }
    }
}

/// Evaluate `Q(phi)`. Negative radicands (possible after rounding `A`) are
/// clamped to zero.
pub fn eval_q(q: &QParams, phi: &DVector<f64>) -> f64 {
    let quad = phi.dot(&(&q.a * phi)).max(0.0);
    let raw = q.w.dot(phi) + q.rho.value() * q.beta * quad.sqrt();
    clip(raw, q.horizon)
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Truncate toward zero onto the grid `step * Z`.
fn round_scalar(v: f64, step: f64) -> f64 {
    let n = (v.abs() / step).floor();
    if n == 0.0 {
        0.0
    } else {
        n * step * sign(v)
    }
}

/// Largest power of two not exceeding `x` (`x > 0`).
pub fn pow2_floor(x: f64) -> f64 {
    let mut s = 2f64.powi(x.log2().floor() as i32);
    while s > x {
        s *= 0.5;
    }
    while s * 2.0 <= x {
        s *= 2.0;
    }
    s
}

/// Round a vector in the unit ball to the grid `(eps / sqrt(d)) Z^d`,
/// coordinatewise toward zero, so `||w~ - w||_inf <= eps / sqrt(d)`.
pub fn round_unit_vector(w: &DVector<f64>, eps: f64) -> Result<DVector<f64>> {
    if !(eps > 0.0) {
        return Err(Error::Input(format!("eps must be positive, got {eps}")));
    }
    let norm = w.norm();
    if !(norm <= 1.0) {
        return Err(Error::Input(format!("vector norm {norm} exceeds 1; rescale first")));
    }
    let step = eps / (w.len() as f64).sqrt();
    Ok(w.map(|v| round_scalar(v, step)))
}

/// Grid steps used by [`round_q_params`] for accuracy `eps`.
///
/// `w` uses `pow2_floor(eps / (2 sqrt d))`, so `||dw|| <= eps / 2`. `A` uses
/// `pow2_floor(eps^2 / (4 beta^2 d))`, so `||dA||_F <= eps^2 / (4 beta^2)` and
/// `beta sqrt(||dA||_F) <= eps / 2`.
pub fn grid_steps(d: usize, beta: f64, eps: f64) -> (f64, f64) {
    let d = d as f64;
    let w_step = pow2_floor(eps / (2.0 * d.sqrt()));
    let a_step = pow2_floor(eps * eps / (4.0 * beta * beta * d));
    (w_step, a_step)
}

/// Round `q` to a nearby element of the finite cover, within `eps` in sup
/// norm over `||phi|| <= 1`.
pub fn round_q_params(q: &QParams, eps: f64) -> Result<QParams> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Input(format!("eps must be positive, got {eps}")));
    }
    let (w_step, a_step) = grid_steps(q.dim(), q.beta, eps);
    let w = q.w.map(|v| round_scalar(v, w_step));
    // The quadratic form only sees the symmetric part, and symmetrizing
    // before rounding keeps the result symmetric and on the grid.
    let d = q.dim();
    let a = DMatrix::from_fn(d, d, |i, j| round_scalar(0.5 * (q.a[(i, j)] + q.a[(j, i)]), a_step));
    Ok(QParams { w, a, ..q.clone() })
}

/// Whether every parameter of `q` lies exactly on the grid for `eps`.
pub fn on_grid(q: &QParams, eps: f64) -> bool {
    let (w_step, a_step) = grid_steps(q.dim(), q.beta, eps);
    let integral = |v: f64, step: f64| {
        let n = v / step;
        n == n.trunc()
    };
    q.w.iter().all(|&v| integral(v, w_step)) && q.a.iter().all(|&v| integral(v, a_step))
}

/// Upper bound on the log covering number of the Q class:
/// `log 2 + d log(1 + 8 H sqrt(d k) / eps) + d^2 log(1 + 8 beta^2 sqrt(d) / eps^2)`.
pub fn covering_log_bound(d: usize, horizon: f64, k: usize, beta: f64, eps: f64) -> f64 {
    let df = d as f64;
    std::f64::consts::LN_2
        + df * (8.0 * horizon * (df * k as f64).sqrt() / eps).ln_1p()
        + df * df * (8.0 * beta * beta * df.sqrt() / (eps * eps)).ln_1p()
}
