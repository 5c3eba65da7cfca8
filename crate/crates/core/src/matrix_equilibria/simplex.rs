//! Dense two-phase tableau simplex with Bland's pivoting rule.
//!
//! Sized for matrix games (a few dozen variables), where determinism
//! matters more than speed: the entering column is always the lowest index
//! with a negative reduced cost and ratio-test ties go to the lowest basic
//! variable index, so identical inputs give bitwise-identical vertices.

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpFailure {
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Maximize `objective . x` subject to `constraints` and `x >= 0`.
pub(crate) fn maximize(objective: &[f64], constraints: &[Constraint]) -> Result<Vec<f64>, LpFailure> {
    let n = objective.len();
    let m = constraints.len();

    let mut num_slack = 0;
    let mut num_art = 0;
    for c in constraints {
        debug_assert_eq!(c.coeffs.len(), n);
        let rel = normalized(c).1;
        match rel {
            Relation::Le => num_slack += 1,
            Relation::Ge => {
                num_slack += 1;
                num_art += 1;
            }
            Relation::Eq => num_art += 1,
        }
    }
    let art_start = n + num_slack;
    let width = art_start + num_art;

    let mut tab = Tableau {
        rows: vec![vec![0.0; width + 1]; m],
        basis: vec![0; m],
        width,
    };
    let (mut s, mut art) = (n, art_start);
    for (i, c) in constraints.iter().enumerate() {
        let (sign, rel) = normalized(c);
        let row = &mut tab.rows[i];
        for (j, &a) in c.coeffs.iter().enumerate() {
            row[j] = sign * a;
        }
        row[width] = sign * c.rhs;
        match rel {
            Relation::Le => {
                row[s] = 1.0;
                tab.basis[i] = s;
                s += 1;
            }
            Relation::Ge => {
                row[s] = -1.0;
                s += 1;
                row[art] = 1.0;
                tab.basis[i] = art;
                art += 1;
            }
            Relation::Eq => {
                row[art] = 1.0;
                tab.basis[i] = art;
                art += 1;
            }
        }
    }

    if num_art > 0 {
        // Phase 1: maximize -(sum of artificials).
        let mut cost = vec![0.0; width];
        cost[art_start..width].iter_mut().for_each(|c| *c = -1.0);
        let value = tab.run(&cost, width)?;
        if value < -FEAS_TOL {
            return Err(LpFailure::Infeasible);
        }
        tab.drive_out_artificials(art_start);
    }

    let mut cost = vec![0.0; width];
    cost[..n].copy_from_slice(objective);
    tab.run(&cost, art_start)?;

    let mut x = vec![0.0; n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.rows[i][width];
        }
    }
    Ok(x)
}

fn normalized(c: &Constraint) -> (f64, Relation) {
    if c.rhs < 0.0 {
        let rel = match c.relation {
            Relation::Le => Relation::Ge,
            Relation::Ge => Relation::Le,
            Relation::Eq => Relation::Eq,
        };
        (-1.0, rel)
    } else {
        (1.0, c.relation)
    }
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    /// Run primal simplex for `cost`, only letting columns `< allowed` enter.
    /// Returns the optimal objective value.
    fn run(&mut self, cost: &[f64], allowed: usize) -> Result<f64, LpFailure> {
        let w = self.width;
        // Reduced costs r_j = c_B B^-1 A_j - c_j; optimal when all r_j >= 0.
        let mut reduced: Vec<f64> = (0..=w).map(|j| if j < w { -cost[j] } else { 0.0 }).collect();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (r, a) in reduced.iter_mut().zip(&self.rows[i]) {
                    *r += cb * a;
                }
            }
        }

        let max_iter = 50 * (w + self.rows.len() + 10);
        for _ in 0..max_iter {
            let Some(enter) = (0..allowed).find(|&j| reduced[j] < -COST_TOL) else {
                return Ok(reduced[w]);
            };
            let mut leave: Option<usize> = None;
            let mut best = f64::INFINITY;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[enter];
                if a > PIVOT_TOL {
                    let ratio = row[w] / a;
                    let better = match leave {
                        None => true,
                        Some(l) => ratio < best - 1e-14 || (ratio <= best + 1e-14 && self.basis[i] < self.basis[l]),
                    };
                    if better {
                        best = ratio;
                        leave = Some(i);
                    }
                }
            }
            let Some(leave) = leave else {
                return Err(LpFailure::Unbounded);
            };
            self.pivot(leave, enter, &mut reduced);
        }
        Err(LpFailure::IterationLimit)
    }

    fn pivot(&mut self, row: usize, col: usize, reduced: &mut [f64]) {
        let p = self.rows[row][col];
        self.rows[row].iter_mut().for_each(|v| *v /= p);
        self.rows[row][col] = 1.0;
        let pivot_row = self.rows[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let f = r[col];
            if f != 0.0 {
                for (v, pv) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                r[col] = 0.0;
            }
        }
        let f = reduced[col];
        if f != 0.0 {
            for (v, pv) in reduced.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            reduced[col] = 0.0;
        }
        self.basis[row] = col;
    }

    /// After phase 1, pivot zero-level artificials out of the basis, or drop
    /// their rows when they are linearly dependent on the rest.
    fn drive_out_artificials(&mut self, art_start: usize) {
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] >= art_start {
                let col = (0..art_start).find(|&j| self.rows[i][j].abs() > PIVOT_TOL);
                match col {
                    Some(j) => {
                        let mut scratch = vec![0.0; self.width + 1];
                        self.pivot(i, j, &mut scratch);
                        i += 1;
                    }
                    None => {
                        self.rows.remove(i);
                        self.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
        // Artificial columns can no longer enter; zero them for clarity.
        for row in &mut self.rows {
            row[art_start..self.width].iter_mut().for_each(|v| *v = 0.0);
        }
    }
}
