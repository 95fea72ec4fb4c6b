//! Master problem: the 1-norm projection of `c0` onto the cone cut out by the
//! current pool, `c . (x_hat - x) <= 0` for every pool point `x`.
//!
//! The cost vector is split as `c = c0 + u - v` with `u, v >= 0`. Optional
//! duality rows `y^T A = c`, `y >= 0` use the forward rows with the variable
//! bounds folded in, which keeps every proposed `c` bounded below over the
//! relaxation of the forward region.

use thiserror::Error;

use crate::lp::{solve_lp, LinearProgram, LpError, LpOutcome};
use crate::model::{CutPool, ForwardProblem, GeRow, Relation, Row, Tolerances};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MasterConfig {
    pub use_duality_constraints: bool,
    /// Linear restrictions on `c` (the set `P`). Indices refer to components of `c`.
    pub extra_c_constraints: Vec<Row>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MasterSolution {
    pub c_tilde: Vec<f64>,
    pub objective: f64,
    /// Multipliers on `A` when duality rows are active.
    pub dual_y: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiMasterSolution {
    pub c: Vec<f64>,
    /// Per-point vectors; copies of `c` when no regularization weight is given.
    pub c_bar: Vec<Vec<f64>>,
    pub objective: f64,
}

/// One data point of the multi-point master.
#[derive(Clone, Copy, Debug)]
pub struct PointData<'a> {
    pub x_hat: &'a [f64],
    pub pool: &'a CutPool,
    pub problem: &'a ForwardProblem,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MasterError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("the restrictions on c leave no feasible cost vector")]
    Infeasible,
    #[error("master LP reported an unbounded objective")]
    Unbounded,
    #[error("{what} has length {got}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("regularization weight must be finite and nonnegative, got {0}")]
    BadLambda(f64),
}

pub fn solve_master(
    c0: &[f64],
    x_hat: &[f64],
    pool: &CutPool,
    problem: &ForwardProblem,
    cfg: &MasterConfig,
    tol: &Tolerances,
) -> Result<MasterSolution, MasterError> {
    let data = [PointData {
        x_hat,
        pool,
        problem,
    }];
    let built = build(c0, &data, None, cfg)?;
    let x = run(&built, tol)?;
    let n = c0.len();
    let c: Vec<f64> = (0..n).map(|j| c0[j] + x[j] - x[n + j]).collect();
    let objective = l1_dist(&c, c0);
    let dual_y = built
        .y_offsets
        .first()
        .map(|&(off, m)| x[off..off + m].to_vec());
    Ok(MasterSolution {
        c_tilde: c,
        objective,
        dual_y,
    })
}

/// Multi-point master. With `lambda = None` one `c` satisfies every pool;
/// otherwise each point gets its own `c_bar_d` and the objective is
/// `||c - c0||_1 + lambda * sum_d ||c_bar_d - c||_1`.
pub fn solve_master_multi(
    c0: &[f64],
    data: &[PointData<'_>],
    lambda: Option<f64>,
    cfg: &MasterConfig,
    tol: &Tolerances,
) -> Result<MultiMasterSolution, MasterError> {
    if let Some(l) = lambda {
        if !(l.is_finite() && l >= 0.0) {
            return Err(MasterError::BadLambda(l));
        }
    }
    let built = build(c0, data, lambda, cfg)?;
    let x = run(&built, tol)?;
    let n = c0.len();
    let c: Vec<f64> = (0..n).map(|j| c0[j] + x[j] - x[n + j]).collect();
    let c_bar: Vec<Vec<f64>> = match lambda {
        None => vec![c.clone(); data.len()],
        Some(_) => (0..data.len())
            .map(|d| {
                let off = 2 * n + 2 * n * d;
                (0..n).map(|j| c[j] + x[off + j] - x[off + n + j]).collect()
            })
            .collect(),
    };
    let mut objective = l1_dist(&c, c0);
    if let Some(l) = lambda {
        objective += l * c_bar.iter().map(|cb| l1_dist(cb, &c)).sum::<f64>();
    }
    Ok(MultiMasterSolution {
        c,
        c_bar,
        objective,
    })
}

fn l1_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

struct Built {
    lp: LinearProgram,
    /// `(offset, length)` of each `y_d` block.
    y_offsets: Vec<(usize, usize)>,
}

fn run(built: &Built, tol: &Tolerances) -> Result<Vec<f64>, MasterError> {
    match solve_lp(&built.lp, tol)? {
        LpOutcome::Optimal(s) => Ok(s.x),
        LpOutcome::Infeasible => Err(MasterError::Infeasible),
        LpOutcome::Unbounded { .. } => Err(MasterError::Unbounded),
    }
}

fn build(
    c0: &[f64],
    data: &[PointData<'_>],
    lambda: Option<f64>,
    cfg: &MasterConfig,
) -> Result<Built, MasterError> {
    let n = c0.len();
    for pd in data {
        check_len("x_hat", pd.x_hat.len(), n)?;
        check_len("forward problem", pd.problem.n, n)?;
        for p in pd.pool.points() {
            check_len("pool point", p.len(), n)?;
        }
    }
    for r in &cfg.extra_c_constraints {
        if let Some(&(j, _)) = r.coeffs.iter().find(|(j, _)| *j >= n) {
            check_len("restriction index", j + 1, n)?;
        }
    }

    // Layout: u, v, then (w_d, z_d) per point when regularized, then y_d blocks.
    let per_point = lambda.is_some();
    let mut num = 2 * n + if per_point { 2 * n * data.len() } else { 0 };
    let mut objective = vec![1.0; 2 * n];
    if let Some(l) = lambda {
        objective.extend(std::iter::repeat_n(l, 2 * n * data.len()));
    }
    let a_blocks: Vec<Vec<GeRow>> = if cfg.use_duality_constraints {
        data.iter()
            .map(|pd| pd.problem.ge_rows_with_bounds())
            .collect()
    } else {
        Vec::new()
    };
    let mut y_offsets = Vec::new();
    for a in &a_blocks {
        y_offsets.push((num, a.len()));
        num += a.len();
    }
    objective.resize(num, 0.0);

    // Coefficients of c_bar_d (or c) on the variable vector: c = c0 + u - v (+ w_d - z_d).
    let c_coeffs = |d: Option<usize>, j: usize, weight: f64, row: &mut [f64]| {
        row[j] += weight;
        row[n + j] -= weight;
        if let Some(d) = d {
            let off = 2 * n + 2 * n * d;
            row[off + j] += weight;
            row[off + n + j] -= weight;
        }
    };

    let mut rows = Vec::new();
    for (d, pd) in data.iter().enumerate() {
        let block = per_point.then_some(d);
        for p in pd.pool.points() {
            // -(c_bar . dir) >= 0 with dir = x_hat - x.
            let mut coeffs = vec![0.0; num];
            let mut rhs = 0.0;
            for j in 0..n {
                let dir = pd.x_hat[j] - p[j];
                if dir != 0.0 {
                    c_coeffs(block, j, -dir, &mut coeffs);
                    rhs += c0[j] * dir;
                }
            }
            rows.push(GeRow { coeffs, rhs });
        }
    }
    for (d, a) in a_blocks.iter().enumerate() {
        let block = per_point.then_some(d);
        let (off, _) = y_offsets[d];
        for j in 0..n {
            // sum_i y_i A_ij - (c_bar_j - c0_j) = c0_j
            let mut coeffs = vec![0.0; num];
            for (i, r) in a.iter().enumerate() {
                coeffs[off + i] = r.coeffs[j];
            }
            c_coeffs(block, j, -1.0, &mut coeffs);
            let neg: Vec<f64> = coeffs.iter().map(|v| -v).collect();
            rows.push(GeRow { coeffs, rhs: c0[j] });
            rows.push(GeRow {
                coeffs: neg,
                rhs: -c0[j],
            });
        }
    }
    for r in &cfg.extra_c_constraints {
        let mut coeffs = vec![0.0; num];
        let mut shift = 0.0;
        for &(j, a) in &r.coeffs {
            c_coeffs(None, j, a, &mut coeffs);
            shift += a * c0[j];
        }
        let rhs = r.rhs - shift;
        let neg = || GeRow {
            coeffs: coeffs.iter().map(|v| -v).collect(),
            rhs: -rhs,
        };
        match r.relation {
            Relation::Ge => rows.push(GeRow {
                coeffs: coeffs.clone(),
                rhs,
            }),
            Relation::Le => rows.push(neg()),
            Relation::Eq => {
                rows.push(neg());
                rows.push(GeRow {
                    coeffs: coeffs.clone(),
                    rhs,
                });
            }
        }
    }
    let lower = vec![0.0; num];
    let upper = vec![f64::INFINITY; num];
    Ok(Built {
        lp: LinearProgram::new(objective, rows, lower, upper),
        y_offsets,
    })
}

fn check_len(what: &'static str, got: usize, expected: usize) -> Result<(), MasterError> {
    if got != expected {
        return Err(MasterError::DimensionMismatch {
            what,
            got,
            expected,
        });
    }
    Ok(())
}
