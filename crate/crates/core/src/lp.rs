//! Dense bounded-variable primal simplex.
//!
//! Rows are `a_i . x >= b_i`. Internally every row gets a surplus variable
//! `s_i >= 0` with `a_i . x - s_i = b_i`; rows that are violated at the
//! starting point also get an artificial variable that phase one drives to
//! zero. Pricing is Dantzig's rule and falls back to Bland's rule after
//! `10 (m + n)` iterations without objective progress. The basis inverse is
//! kept explicitly and rebuilt from scratch every [`REFACTOR_PERIOD`] pivots.

use thiserror::Error;

use crate::model::{GeRow, Tolerances};

const REFACTOR_PERIOD: usize = 50;
const PIVOT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<GeRow>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>, rows: Vec<GeRow>, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self {
            objective,
            rows,
            lower,
            upper,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    fn check(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Malformed(
                "bound vectors do not match objective length",
            ));
        }
        if self.rows.iter().any(|r| r.coeffs.len() != n) {
            return Err(LpError::Malformed(
                "row length does not match objective length",
            ));
        }
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] > self.upper[j] {
                return Err(LpError::Malformed("inconsistent variable bounds"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per row, nonnegative at optimality.
    pub duals: Vec<f64>,
    /// `c_j - y . a_j` per structural variable.
    pub reduced_costs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    /// `ray` is a recession direction with `objective . ray < 0`; `point` is
    /// the feasible basic point where unboundedness was detected.
    Unbounded {
        ray: Vec<f64>,
        point: Vec<f64>,
    },
}

impl LpOutcome {
    pub fn optimal(&self) -> Option<&LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("simplex failed to converge after {iterations} iterations")]
    NumericalFailure { iterations: usize },
    #[error("singular basis encountered during refactorization")]
    SingularBasis,
    #[error("malformed linear program: {0}")]
    Malformed(&'static str),
}

/// Solves `min c.x  s.t.  rows, lower <= x <= upper`.
pub fn solve_lp(lp: &LinearProgram, tol: &Tolerances) -> Result<LpOutcome, LpError> {
    lp.check()?;
    Simplex::new(lp, tol).solve()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum NonBasic {
    AtLower,
    AtUpper,
    /// Free variable resting at zero.
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum VarState {
    Basic(usize),
    NonBasic(NonBasic),
}

enum PhaseEnd {
    Optimal,
    Unbounded {
        entering: usize,
        dir: f64,
        delta: Vec<f64>,
    },
}

struct Simplex<'a> {
    lp: &'a LinearProgram,
    tol: Tolerances,
    m: usize,
    n: usize,
    /// Dense columns of `[A | -I | artificials]`, each of length m.
    cols: Vec<Vec<f64>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    /// Row-major `m x m` basis inverse.
    binv: Vec<f64>,
    rhs: Vec<f64>,
    first_artificial: usize,
    pivots_since_refactor: usize,
    iterations: usize,
}

impl<'a> Simplex<'a> {
    fn new(lp: &'a LinearProgram, tol: &Tolerances) -> Self {
        let m = lp.rows.len();
        let n = lp.num_vars();
        let mut cols: Vec<Vec<f64>> = (0..n)
            .map(|j| lp.rows.iter().map(|r| r.coeffs[j]).collect())
            .collect();
        let mut lower = lp.lower.clone();
        let mut upper = lp.upper.clone();
        let mut x = Vec::with_capacity(n + 2 * m);
        let mut state = Vec::with_capacity(n + 2 * m);
        for j in 0..n {
            let (l, u) = (lower[j], upper[j]);
            if l.is_finite() {
                x.push(l);
                state.push(VarState::NonBasic(NonBasic::AtLower));
            } else if u.is_finite() {
                x.push(u);
                state.push(VarState::NonBasic(NonBasic::AtUpper));
            } else {
                x.push(0.0);
                state.push(VarState::NonBasic(NonBasic::Zero));
            }
        }
        let activity: Vec<f64> = lp
            .rows
            .iter()
            .map(|r| r.coeffs.iter().zip(&x[..n]).map(|(a, v)| a * v).sum())
            .collect();

        // Surplus columns.
        for i in 0..m {
            let mut col = vec![0.0; m];
            col[i] = -1.0;
            cols.push(col);
            lower.push(0.0);
            upper.push(f64::INFINITY);
            x.push(0.0);
            state.push(VarState::NonBasic(NonBasic::AtLower));
        }
        let first_artificial = n + m;
        let mut basis = vec![0; m];
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            let slack = activity[i] - lp.rows[i].rhs;
            if slack >= 0.0 {
                let s = n + i;
                x[s] = slack;
                state[s] = VarState::Basic(i);
                basis[i] = s;
                binv[i * m + i] = -1.0;
            } else {
                let mut col = vec![0.0; m];
                col[i] = 1.0;
                cols.push(col);
                lower.push(0.0);
                upper.push(f64::INFINITY);
                x.push(-slack);
                let a = x.len() - 1;
                state.push(VarState::Basic(i));
                basis[i] = a;
                binv[i * m + i] = 1.0;
            }
        }
        let rhs = lp.rows.iter().map(|r| r.rhs).collect();
        Self {
            lp,
            tol: *tol,
            m,
            n,
            cols,
            lower,
            upper,
            x,
            state,
            basis,
            binv,
            rhs,
            first_artificial,
            pivots_since_refactor: 0,
            iterations: 0,
        }
    }

    fn num_cols(&self) -> usize {
        self.cols.len()
    }

    fn solve(mut self) -> Result<LpOutcome, LpError> {
        if self.num_cols() > self.first_artificial {
            let cost: Vec<f64> = (0..self.num_cols())
                .map(|j| if j >= self.first_artificial { 1.0 } else { 0.0 })
                .collect();
            match self.run(&cost)? {
                PhaseEnd::Optimal => {}
                // Phase one is bounded below by zero.
                PhaseEnd::Unbounded { .. } => {
                    return Err(LpError::NumericalFailure {
                        iterations: self.iterations,
                    })
                }
            }
            self.refactor()?;
            let infeasibility: f64 = self.x[self.first_artificial..].iter().sum();
            let scale = 1.0 + self.rhs.iter().fold(0.0f64, |acc, b| acc.max(b.abs()));
            if infeasibility > self.tol.feasibility * scale {
                return Ok(LpOutcome::Infeasible);
            }
            for j in self.first_artificial..self.num_cols() {
                self.upper[j] = 0.0;
                if let VarState::NonBasic(_) = self.state[j] {
                    self.x[j] = 0.0;
                    self.state[j] = VarState::NonBasic(NonBasic::AtLower);
                }
            }
            self.drive_out_artificials()?;
        }

        let mut cost = self.lp.objective.clone();
        cost.resize(self.num_cols(), 0.0);
        match self.run(&cost)? {
            PhaseEnd::Optimal => {
                self.refactor()?;
                let y = self.duals(&cost);
                let x: Vec<f64> = self.x[..self.n].to_vec();
                let reduced_costs = (0..self.n)
                    .map(|j| cost[j] - dot(&y, &self.cols[j]))
                    .collect();
                let objective = dot(&self.lp.objective, &x);
                Ok(LpOutcome::Optimal(LpSolution {
                    x,
                    objective,
                    duals: y,
                    reduced_costs,
                }))
            }
            PhaseEnd::Unbounded {
                entering,
                dir,
                delta,
            } => {
                let mut ray = vec![0.0; self.n];
                if entering < self.n {
                    ray[entering] = dir;
                }
                for (r, &b) in self.basis.iter().enumerate() {
                    if b < self.n {
                        ray[b] = delta[r];
                    }
                }
                Ok(LpOutcome::Unbounded {
                    ray,
                    point: self.x[..self.n].to_vec(),
                })
            }
        }
    }

    /// Simplex multipliers `y = c_B^T B^{-1}`.
    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                let row = &self.binv[r * m..(r + 1) * m];
                for k in 0..m {
                    y[k] += cb * row[k];
                }
            }
        }
        y
    }

    fn ftran(&self, col: &[f64]) -> Vec<f64> {
        let m = self.m;
        (0..m)
            .map(|r| dot(&self.binv[r * m..(r + 1) * m], col))
            .collect()
    }

    fn run(&mut self, cost: &[f64]) -> Result<PhaseEnd, LpError> {
        let n_total = self.num_cols();
        let stall_limit = 10 * (self.m + self.n);
        let cap = self.iterations + 50 * (self.m + n_total) + 5000;
        let mut bland = false;
        let mut best_obj = f64::INFINITY;
        let mut stalled = 0usize;

        loop {
            if self.iterations >= cap {
                return Err(LpError::NumericalFailure {
                    iterations: self.iterations,
                });
            }
            let obj = dot(cost, &self.x);
            if obj < best_obj - 1e-12 * (1.0 + best_obj.abs().min(1e300)) {
                best_obj = obj;
                stalled = 0;
            } else {
                stalled += 1;
                if stalled > stall_limit {
                    bland = true;
                }
            }

            let y = self.duals(cost);
            let mut entering: Option<(usize, f64, f64)> = None;
            for j in 0..n_total {
                let st = match self.state[j] {
                    VarState::Basic(_) => continue,
                    VarState::NonBasic(st) => st,
                };
                if self.lower[j] == self.upper[j] {
                    continue;
                }
                let d = cost[j] - dot(&y, &self.cols[j]);
                let dir = if d < -self.tol.optimality && st != NonBasic::AtUpper {
                    1.0
                } else if d > self.tol.optimality && st != NonBasic::AtLower {
                    -1.0
                } else {
                    continue;
                };
                match entering {
                    None => entering = Some((j, dir, d.abs())),
                    Some((_, _, best)) if !bland && d.abs() > best => {
                        entering = Some((j, dir, d.abs()))
                    }
                    _ => {}
                }
                if bland {
                    break;
                }
            }
            let Some((q, dir, _)) = entering else {
                return Ok(PhaseEnd::Optimal);
            };

            let alpha = self.ftran(&self.cols[q]);
            // Rate of change of each basic variable per unit step of the entering one.
            let delta: Vec<f64> = alpha.iter().map(|a| -dir * a).collect();

            let flip = self.upper[q] - self.lower[q];
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.m {
                let dr = delta[r];
                let b = self.basis[r];
                let ratio = if dr < -PIVOT_TOL && self.lower[b].is_finite() {
                    ((self.x[b] - self.lower[b]) / -dr).max(0.0)
                } else if dr > PIVOT_TOL && self.upper[b].is_finite() {
                    ((self.upper[b] - self.x[b]) / dr).max(0.0)
                } else {
                    continue;
                };
                match leave {
                    None => leave = Some((r, ratio)),
                    Some((lr, lt)) => {
                        let tie = (ratio - lt).abs() <= 1e-12 * (1.0 + lt.abs());
                        let better = if tie {
                            bland && self.basis[r] < self.basis[lr]
                        } else {
                            ratio < lt
                        };
                        if better {
                            leave = Some((r, ratio));
                        }
                    }
                }
            }

            self.iterations += 1;
            match leave {
                None if !flip.is_finite() => {
                    return Ok(PhaseEnd::Unbounded {
                        entering: q,
                        dir,
                        delta,
                    });
                }
                Some((_, theta)) if theta < flip => {
                    let (r, theta) = leave.unwrap();
                    self.pivot(q, r, dir, theta, &alpha, &delta)?;
                }
                _ => {
                    // Entering variable reaches its opposite bound first.
                    for r in 0..self.m {
                        let b = self.basis[r];
                        self.x[b] += delta[r] * flip;
                    }
                    if dir > 0.0 {
                        self.x[q] = self.upper[q];
                        self.state[q] = VarState::NonBasic(NonBasic::AtUpper);
                    } else {
                        self.x[q] = self.lower[q];
                        self.state[q] = VarState::NonBasic(NonBasic::AtLower);
                    }
                }
            }
        }
    }

    fn pivot(
        &mut self,
        q: usize,
        r: usize,
        dir: f64,
        theta: f64,
        alpha: &[f64],
        delta: &[f64],
    ) -> Result<(), LpError> {
        let m = self.m;
        for i in 0..m {
            let b = self.basis[i];
            self.x[b] += delta[i] * theta;
        }
        self.x[q] += dir * theta;
        let leaving = self.basis[r];
        if delta[r] < 0.0 {
            self.x[leaving] = self.lower[leaving];
            self.state[leaving] = VarState::NonBasic(NonBasic::AtLower);
        } else {
            self.x[leaving] = self.upper[leaving];
            self.state[leaving] = VarState::NonBasic(NonBasic::AtUpper);
        }
        self.basis[r] = q;
        self.state[q] = VarState::Basic(r);

        let piv = alpha[r];
        for k in 0..m {
            self.binv[r * m + k] /= piv;
        }
        for i in 0..m {
            if i == r || alpha[i] == 0.0 {
                continue;
            }
            let f = alpha[i];
            for k in 0..m {
                self.binv[i * m + k] -= f * self.binv[r * m + k];
            }
        }
        self.pivots_since_refactor += 1;
        if self.pivots_since_refactor >= REFACTOR_PERIOD {
            self.refactor()?;
        }
        Ok(())
    }

    /// Rebuilds the basis inverse by Gauss-Jordan elimination and recomputes
    /// basic values from the nonbasic ones.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        self.pivots_since_refactor = 0;
        if m == 0 {
            return Ok(());
        }
        let mut a = vec![0.0; m * m];
        for (c, &b) in self.basis.iter().enumerate() {
            for r in 0..m {
                a[r * m + c] = self.cols[b][r];
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let mut p = c;
            for r in c + 1..m {
                if a[r * m + c].abs() > a[p * m + c].abs() {
                    p = r;
                }
            }
            if a[p * m + c].abs() < 1e-12 {
                return Err(LpError::SingularBasis);
            }
            if p != c {
                for k in 0..m {
                    a.swap(p * m + k, c * m + k);
                    inv.swap(p * m + k, c * m + k);
                }
            }
            let d = a[c * m + c];
            for k in 0..m {
                a[c * m + k] /= d;
                inv[c * m + k] /= d;
            }
            for r in 0..m {
                if r == c {
                    continue;
                }
                let f = a[r * m + c];
                if f == 0.0 {
                    continue;
                }
                for k in 0..m {
                    a[r * m + k] -= f * a[c * m + k];
                    inv[r * m + k] -= f * inv[c * m + k];
                }
            }
        }
        self.binv = inv;

        let mut resid = self.rhs.clone();
        for j in 0..self.num_cols() {
            if let VarState::NonBasic(_) = self.state[j] {
                let v = self.x[j];
                if v != 0.0 {
                    for (ri, cv) in resid.iter_mut().zip(&self.cols[j]) {
                        *ri -= cv * v;
                    }
                }
            }
        }
        let xb = self.ftran(&resid);
        for (r, &b) in self.basis.iter().enumerate() {
            self.x[b] = xb[r];
        }
        Ok(())
    }

    /// Replaces zero-valued basic artificials by structural or surplus
    /// columns where a nonzero pivot exists.
    fn drive_out_artificials(&mut self) -> Result<(), LpError> {
        let m = self.m;
        for r in 0..m {
            if self.basis[r] < self.first_artificial {
                continue;
            }
            let row = self.binv[r * m..(r + 1) * m].to_vec();
            let candidate = (0..self.first_artificial).find(|&j| {
                matches!(self.state[j], VarState::NonBasic(_))
                    && dot(&row, &self.cols[j]).abs() > 1e-7
            });
            if let Some(q) = candidate {
                let alpha = self.ftran(&self.cols[q]);
                let delta: Vec<f64> = alpha.iter().map(|a| -a).collect();
                self.pivot(q, r, 1.0, 0.0, &alpha, &delta)?;
            }
        }
        self.refactor()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(coeffs: &[f64], rhs: f64) -> GeRow {
        GeRow {
            coeffs: coeffs.to_vec(),
            rhs,
        }
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn single_variable_bound() {
        let lp = LinearProgram::new(vec![-1.0], vec![], vec![0.0], vec![1.0]);
        let s = solve_lp(&lp, &tol()).unwrap();
        let s = s.optimal().unwrap();
        assert_eq!(s.x, vec![1.0]);
        assert_eq!(s.objective, -1.0);
    }

    #[test]
    fn pair_relaxation_vertex() {
        // min -b1 - b2 over [0,1]^2 with b1 + 0.6 b2 <= 1.
        let lp = LinearProgram::new(
            vec![-1.0, -1.0],
            vec![row(&[-1.0, -0.6], -1.0)],
            vec![0.0, 0.0],
            vec![1.0, 1.0],
        );
        let out = solve_lp(&lp, &tol()).unwrap();
        let s = out.optimal().unwrap();
        assert!((s.objective + 1.4).abs() < 1e-9);
        assert!((s.x[0] - 0.4).abs() < 1e-9);
        assert!((s.x[1] - 1.0).abs() < 1e-9);
        assert!((s.duals[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unbounded_ray() {
        let lp = LinearProgram::new(vec![-1.0], vec![], vec![0.0], vec![f64::INFINITY]);
        match solve_lp(&lp, &tol()).unwrap() {
            LpOutcome::Unbounded { ray, .. } => assert_eq!(ray, vec![1.0]),
            other => panic!("expected unbounded, got {other:?}"),
        }
    }

    #[test]
    fn unbounded_ray_through_rows() {
        // min -x - y  s.t. x - y >= -1, y - x >= -1, x,y >= 0.
        let lp = LinearProgram::new(
            vec![-1.0, -1.0],
            vec![row(&[1.0, -1.0], -1.0), row(&[-1.0, 1.0], -1.0)],
            vec![0.0, 0.0],
            vec![f64::INFINITY; 2],
        );
        match solve_lp(&lp, &tol()).unwrap() {
            LpOutcome::Unbounded { ray, .. } => {
                for r in &lp.rows {
                    assert!(r.activity(&ray) >= -1e-9);
                }
                assert!(-ray[0] - ray[1] < 0.0);
                assert!(ray.iter().all(|v| *v >= -1e-9));
            }
            other => panic!("expected unbounded, got {other:?}"),
        }
    }

    #[test]
    fn infeasible_rows() {
        let lp = LinearProgram::new(
            vec![0.0],
            vec![row(&[1.0], 1.0), row(&[-1.0], 0.0)],
            vec![0.0],
            vec![1.0],
        );
        assert_eq!(solve_lp(&lp, &tol()).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn free_variables_and_equalities() {
        // min x + y s.t. x + y = 3 (two rows), x - y >= 1, x,y free.
        let lp = LinearProgram::new(
            vec![1.0, 2.0],
            vec![
                row(&[1.0, 1.0], 3.0),
                row(&[-1.0, -1.0], -3.0),
                row(&[1.0, -1.0], 1.0),
            ],
            vec![f64::NEG_INFINITY; 2],
            vec![f64::INFINITY; 2],
        );
        match solve_lp(&lp, &tol()).unwrap() {
            LpOutcome::Unbounded { .. } => {}
            other => panic!("x -> inf, y -> -inf is unbounded: {other:?}"),
        }
        let lp = LinearProgram::new(
            vec![1.0, 2.0],
            vec![
                row(&[1.0, 1.0], 3.0),
                row(&[-1.0, -1.0], -3.0),
                row(&[-1.0, 1.0], -5.0),
            ],
            vec![f64::NEG_INFINITY; 2],
            vec![f64::INFINITY; 2],
        );
        // x + y = 3, y - x >= -5 ... min x + 2y = 3 + y; y >= -1.
        let out = solve_lp(&lp, &tol()).unwrap();
        let s = out.optimal().unwrap();
        assert!((s.x[1] + 1.0).abs() < 1e-9 && (s.x[0] - 4.0).abs() < 1e-9);
        assert!((s.objective - 2.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Classic Beale-style cycling example in >= form.
        let lp = LinearProgram::new(
            vec![-0.75, 150.0, -0.02, 6.0],
            vec![
                row(&[-0.25, 60.0, 0.04, -9.0], 0.0),
                row(&[-0.5, 90.0, 0.02, -3.0], 0.0),
                row(&[0.0, 0.0, -1.0, 0.0], -1.0),
            ],
            vec![0.0; 4],
            vec![f64::INFINITY; 4],
        );
        let out = solve_lp(&lp, &tol()).unwrap();
        let s = out.optimal().unwrap();
        assert!((s.objective + 0.05).abs() < 1e-9);
    }
}
