//! Best-bound branch-and-bound over [`ForwardProblem`] regions.
//!
//! Every integer-feasible incumbent is streamed to an optional listener and,
//! when a violation oracle is configured, scored by it. Scores drive two
//! stopping rules used by cut generation:
//!
//! * early stop: once `early_stop_tau` has elapsed, the incumbent with the
//!   largest violation found so far is returned if any is violated;
//!   otherwise the first violated incumbent found later is returned;
//! * large-violation escape: an incumbent whose violation exceeds
//!   `big_violation_threshold` is returned at once.
//!
//! An unbounded root relaxation with an oracle present switches to a dive
//! over growing boxes around the relaxation point, which keeps each search
//! bounded while the objective keeps decreasing, until the escape fires.
//!
//! Time checks happen at node boundaries.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::lp::{solve_lp, LinearProgram, LpError, LpOutcome};
use crate::model::{ForwardProblem, GeRow, Tolerances};

const MAX_ESCAPE_LEVELS: u32 = 128;

/// Scores a feasible point; larger means more violated.
pub type ViolationOracle<'a> = &'a dyn Fn(&[f64]) -> f64;

pub struct StopPolicy<'a> {
    pub time_limit: Option<Duration>,
    pub early_stop_tau: Option<Duration>,
    pub violation_oracle: Option<ViolationOracle<'a>>,
    /// Violations strictly above this value count as violated.
    pub violation_floor: f64,
    pub big_violation_threshold: f64,
}

impl Default for StopPolicy<'_> {
    fn default() -> Self {
        Self {
            time_limit: None,
            early_stop_tau: None,
            violation_oracle: None,
            violation_floor: 0.0,
            big_violation_threshold: 1e10,
        }
    }
}

impl std::fmt::Debug for StopPolicy<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StopPolicy")
            .field("time_limit", &self.time_limit)
            .field("early_stop_tau", &self.early_stop_tau)
            .field("violation_oracle", &self.violation_oracle.is_some())
            .field("violation_floor", &self.violation_floor)
            .field("big_violation_threshold", &self.big_violation_threshold)
            .finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    EarlyStopFeasible,
    Infeasible,
    Unbounded,
    UnboundedViolationEscape,
    TimeLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MilpOutcome {
    pub status: MilpStatus,
    pub x: Option<Vec<f64>>,
    pub objective: Option<f64>,
    pub best_bound: f64,
    pub nodes: usize,
    pub wall: Duration,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MilpError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("objective has length {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("large-violation dive exhausted {levels} box levels without triggering")]
    EscapeExhausted { levels: u32 },
}

/// Minimizes `objective . x` over the problem's region.
pub fn solve_milp(
    problem: &ForwardProblem,
    objective: &[f64],
    policy: &StopPolicy<'_>,
    tol: &Tolerances,
) -> Result<MilpOutcome, MilpError> {
    solve_milp_with_incumbent_stream(problem, objective, policy, tol, &mut |_, _| {})
}

/// As [`solve_milp`], reporting each new incumbent `(x, objective)` to
/// `listener` in discovery order.
pub fn solve_milp_with_incumbent_stream(
    problem: &ForwardProblem,
    objective: &[f64],
    policy: &StopPolicy<'_>,
    tol: &Tolerances,
    listener: &mut dyn FnMut(&[f64], f64),
) -> Result<MilpOutcome, MilpError> {
    if objective.len() != problem.n {
        return Err(MilpError::DimensionMismatch {
            got: objective.len(),
            expected: problem.n,
        });
    }
    let mut search = Search {
        rows: problem.ge_rows(),
        objective,
        is_integer: &problem.is_integer,
        policy,
        tol: *tol,
        start: Instant::now(),
        listener,
        scored: Vec::new(),
        nodes: 0,
    };
    let mut lower = problem.lower.clone();
    let mut upper = problem.upper.clone();
    for j in 0..problem.n {
        if problem.is_integer[j] {
            lower[j] = (lower[j] - tol.integrality).ceil();
            upper[j] = (upper[j] + tol.integrality).floor();
            if lower[j] > upper[j] {
                return Ok(search.finish(MilpStatus::Infeasible, None, f64::INFINITY));
            }
        }
    }
    match search.branch_and_bound(lower.clone(), upper.clone())? {
        Step::Done(outcome) => Ok(outcome),
        Step::RootUnbounded { point } => {
            if policy.violation_oracle.is_none() {
                return Ok(search.finish(MilpStatus::Unbounded, None, f64::NEG_INFINITY));
            }
            search.escape_dive(&lower, &upper, &point)
        }
    }
}

enum Step {
    Done(MilpOutcome),
    RootUnbounded { point: Vec<f64> },
}

struct Node {
    bound: f64,
    seq: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap is a max-heap: smaller bound, then smaller seq, ranks higher.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

enum Relaxation {
    Solved { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded { point: Vec<f64> },
}

struct Search<'a, 'p> {
    rows: Vec<GeRow>,
    objective: &'a [f64],
    is_integer: &'a [bool],
    policy: &'a StopPolicy<'p>,
    tol: Tolerances,
    start: Instant,
    listener: &'a mut dyn FnMut(&[f64], f64),
    /// Incumbents paired with their oracle violations, in discovery order.
    scored: Vec<(Vec<f64>, f64)>,
    nodes: usize,
}

impl Search<'_, '_> {
    fn finish(&self, status: MilpStatus, best: Option<(Vec<f64>, f64)>, bound: f64) -> MilpOutcome {
        let (x, objective) = match best {
            Some((x, o)) => (Some(x), Some(o)),
            None => (None, None),
        };
        MilpOutcome {
            status,
            x,
            objective,
            best_bound: bound,
            nodes: self.nodes,
            wall: self.start.elapsed(),
        }
    }

    fn relax(&mut self, lower: &[f64], upper: &[f64]) -> Result<Relaxation, MilpError> {
        self.nodes += 1;
        let lp = LinearProgram::new(
            self.objective.to_vec(),
            self.rows.clone(),
            lower.to_vec(),
            upper.to_vec(),
        );
        Ok(match solve_lp(&lp, &self.tol)? {
            LpOutcome::Optimal(s) => Relaxation::Solved {
                x: s.x,
                objective: s.objective,
            },
            LpOutcome::Infeasible => Relaxation::Infeasible,
            LpOutcome::Unbounded { point, .. } => Relaxation::Unbounded { point },
        })
    }

    /// Index of the most fractional integer variable, lowest index on ties.
    fn branching_variable(&self, x: &[f64]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (j, &v) in x.iter().enumerate() {
            if !self.is_integer[j] {
                continue;
            }
            let frac = (v - v.floor()).min(v.ceil() - v);
            if frac <= self.tol.integrality {
                continue;
            }
            if best.is_none_or(|(_, f)| frac > f + 1e-12) {
                best = Some((j, frac));
            }
        }
        best.map(|(j, _)| j)
    }

    fn snap(&self, x: &mut [f64]) {
        for (v, &int) in x.iter_mut().zip(self.is_integer) {
            if int {
                *v = v.round();
            }
        }
    }

    fn elapsed_at_least(&self, limit: Option<Duration>) -> bool {
        limit.is_some_and(|t| self.start.elapsed() >= t)
    }

    /// Early-stop pick once tau has passed: the most violated incumbent so
    /// far, earliest on ties.
    fn early_stop_pick(&self) -> Option<Vec<f64>> {
        if !self.elapsed_at_least(self.policy.early_stop_tau) {
            return None;
        }
        let mut best: Option<&(Vec<f64>, f64)> = None;
        for entry in &self.scored {
            if entry.1 > self.policy.violation_floor && best.is_none_or(|b| entry.1 > b.1) {
                best = Some(entry);
            }
        }
        best.map(|(x, _)| x.clone())
    }

    /// Records a new incumbent; returns a terminal status when a stopping
    /// rule fires.
    fn on_incumbent(&mut self, x: &[f64], obj: f64) -> Option<MilpOutcome> {
        (self.listener)(x, obj);
        let oracle = self.policy.violation_oracle?;
        let v = oracle(x);
        self.scored.push((x.to_vec(), v));
        if v > self.policy.big_violation_threshold {
            return Some(self.finish(
                MilpStatus::UnboundedViolationEscape,
                Some((x.to_vec(), obj)),
                f64::NEG_INFINITY,
            ));
        }
        self.early_stop_pick().map(|pick| {
            let o = dot(self.objective, &pick);
            self.finish(
                MilpStatus::EarlyStopFeasible,
                Some((pick, o)),
                f64::NEG_INFINITY,
            )
        })
    }

    fn branch_and_bound(&mut self, lower: Vec<f64>, upper: Vec<f64>) -> Result<Step, MilpError> {
        let mut incumbent: Option<(Vec<f64>, f64)> = None;
        let mut heap = BinaryHeap::new();
        let mut seq = 0usize;

        match self.relax(&lower, &upper)? {
            Relaxation::Infeasible => {
                return Ok(Step::Done(self.finish(
                    MilpStatus::Infeasible,
                    None,
                    f64::INFINITY,
                )))
            }
            Relaxation::Unbounded { point } => return Ok(Step::RootUnbounded { point }),
            Relaxation::Solved { mut x, objective } => match self.branching_variable(&x) {
                None => {
                    self.snap(&mut x);
                    if let Some(out) = self.on_incumbent(&x, objective) {
                        return Ok(Step::Done(out));
                    }
                    return Ok(Step::Done(self.finish(
                        MilpStatus::Optimal,
                        Some((x, objective)),
                        objective,
                    )));
                }
                Some(_) => heap.push(Node {
                    bound: objective,
                    seq,
                    lower,
                    upper,
                    x,
                }),
            },
        }

        while let Some(node) = heap.pop() {
            if self.elapsed_at_least(self.policy.time_limit) {
                let bound = node.bound;
                return Ok(Step::Done(self.finish(
                    MilpStatus::TimeLimit,
                    incumbent,
                    bound,
                )));
            }
            if let Some(pick) = self.early_stop_pick() {
                let o = dot(self.objective, &pick);
                return Ok(Step::Done(self.finish(
                    MilpStatus::EarlyStopFeasible,
                    Some((pick, o)),
                    node.bound,
                )));
            }
            if let Some((_, inc)) = &incumbent {
                if node.bound >= inc - self.tol.mip_gap {
                    // Best-first order: every remaining node is dominated too.
                    break;
                }
            }
            let Some(j) = self.branching_variable(&node.x) else {
                continue;
            };
            let v = node.x[j];
            let children = [
                (node.lower[j], v.floor().min(node.upper[j])),
                (v.ceil().max(node.lower[j]), node.upper[j]),
            ];
            for (lo_j, up_j) in children {
                if lo_j > up_j {
                    continue;
                }
                let mut lower = node.lower.clone();
                let mut upper = node.upper.clone();
                lower[j] = lo_j;
                upper[j] = up_j;
                match self.relax(&lower, &upper)? {
                    Relaxation::Infeasible => {}
                    // A bounded parent relaxation keeps children bounded.
                    Relaxation::Unbounded { .. } => {
                        return Err(MilpError::Lp(LpError::NumericalFailure { iterations: 0 }))
                    }
                    Relaxation::Solved { mut x, objective } => {
                        let beats = |inc: &Option<(Vec<f64>, f64)>, margin: f64| {
                            inc.as_ref().is_none_or(|(_, o)| objective < o - margin)
                        };
                        if self.branching_variable(&x).is_none() {
                            if beats(&incumbent, 1e-9) {
                                self.snap(&mut x);
                                let obj = dot(self.objective, &x);
                                if let Some(out) = self.on_incumbent(&x, obj) {
                                    return Ok(Step::Done(out));
                                }
                                incumbent = Some((x, obj));
                            }
                        } else if beats(&incumbent, self.tol.mip_gap) {
                            seq += 1;
                            heap.push(Node {
                                bound: objective,
                                seq,
                                lower,
                                upper,
                                x,
                            });
                        }
                    }
                }
            }
        }
        let status = if incumbent.is_some() {
            MilpStatus::Optimal
        } else {
            MilpStatus::Infeasible
        };
        let bound = incumbent.as_ref().map_or(f64::INFINITY, |(_, o)| *o);
        Ok(Step::Done(self.finish(status, incumbent, bound)))
    }

    /// Solves the problem restricted to boxes of radius 1, 2, 4, ... around
    /// the unbounded relaxation point until a stopping rule fires.
    fn escape_dive(
        &mut self,
        lower: &[f64],
        upper: &[f64],
        point: &[f64],
    ) -> Result<MilpOutcome, MilpError> {
        let center: Vec<f64> = point
            .iter()
            .zip(self.is_integer)
            .map(|(v, &int)| if int { v.round() } else { *v })
            .collect();
        for level in 0..MAX_ESCAPE_LEVELS {
            let radius = 2f64.powi(level as i32);
            let mut lo = lower.to_vec();
            let mut up = upper.to_vec();
            for j in 0..lo.len() {
                lo[j] = lo[j].max(center[j] - radius);
                up[j] = up[j].min(center[j] + radius);
                if self.is_integer[j] {
                    lo[j] = lo[j].ceil();
                    up[j] = up[j].floor();
                }
            }
            if lo.iter().zip(&up).any(|(l, u)| l > u) {
                continue;
            }
            match self.branch_and_bound(lo, up)? {
                Step::Done(out) => match out.status {
                    MilpStatus::Optimal | MilpStatus::Infeasible => {}
                    _ => return Ok(out),
                },
                Step::RootUnbounded { .. } => {
                    return Err(MilpError::Lp(LpError::NumericalFailure { iterations: 0 }))
                }
            }
            if self.elapsed_at_least(self.policy.time_limit) {
                return Ok(self.finish(MilpStatus::TimeLimit, None, f64::NEG_INFINITY));
            }
        }
        Err(MilpError::EscapeExhausted {
            levels: MAX_ESCAPE_LEVELS,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Relation, Row};

    fn pair() -> ForwardProblem {
        ForwardProblem::new(
            "pair",
            2,
            vec![Row::new(vec![(0, 1.0), (1, 0.6)], Relation::Le, 1.0)],
            vec![0.0; 2],
            vec![1.0; 2],
            vec![true; 2],
        )
        .unwrap()
    }

    fn knapsack() -> ForwardProblem {
        ForwardProblem::new(
            "knapsack",
            2,
            vec![Row::new(vec![(0, 1.0), (1, 1.0)], Relation::Ge, 2.0)],
            vec![0.0; 2],
            vec![3.0; 2],
            vec![true; 2],
        )
        .unwrap()
    }

    #[test]
    fn pair_minimum_and_tie_pick() {
        let out = solve_milp(
            &pair(),
            &[-1.0, -1.0],
            &StopPolicy::default(),
            &Tolerances::default(),
        )
        .unwrap();
        assert_eq!(out.status, MilpStatus::Optimal);
        assert_eq!(out.objective, Some(-1.0));
        assert_eq!(out.x, Some(vec![0.0, 1.0]));
    }

    #[test]
    fn knapsack_minimum() {
        let out = solve_milp(
            &knapsack(),
            &[1.0, 1.0],
            &StopPolicy::default(),
            &Tolerances::default(),
        )
        .unwrap();
        assert_eq!(out.status, MilpStatus::Optimal);
        assert!((out.objective.unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let p = ForwardProblem::new(
            "bad",
            1,
            vec![
                Row::new(vec![(0, 1.0)], Relation::Ge, 1.0),
                Row::new(vec![(0, 1.0)], Relation::Le, 0.0),
            ],
            vec![0.0],
            vec![1.0],
            vec![true],
        )
        .unwrap();
        let out = solve_milp(&p, &[1.0], &StopPolicy::default(), &Tolerances::default()).unwrap();
        assert_eq!(out.status, MilpStatus::Infeasible);
        assert!(out.x.is_none());
    }

    #[test]
    fn stream_ends_with_optimal_incumbent() {
        let mut seen = Vec::new();
        let out = solve_milp_with_incumbent_stream(
            &pair(),
            &[-1.0, -1.0],
            &StopPolicy::default(),
            &Tolerances::default(),
            &mut |x, o| seen.push((x.to_vec(), o)),
        )
        .unwrap();
        assert_eq!(seen.last().unwrap().0, out.x.unwrap());
    }

    #[test]
    fn early_stop_at_zero_returns_first_violated() {
        // Violation against x_hat = (0,0) with c = (-1,-1): positive on (0,1) and (1,0).
        let oracle = |x: &[f64]| x[0] + x[1];
        let policy = StopPolicy {
            early_stop_tau: Some(Duration::ZERO),
            violation_oracle: Some(&oracle),
            ..StopPolicy::default()
        };
        let mut seen = Vec::new();
        let out = solve_milp_with_incumbent_stream(
            &pair(),
            &[-1.0, -1.0],
            &policy,
            &Tolerances::default(),
            &mut |x, _| seen.push(x.to_vec()),
        )
        .unwrap();
        assert_eq!(out.status, MilpStatus::EarlyStopFeasible);
        assert_eq!(out.x.as_ref(), seen.first());
    }

    #[test]
    fn unbounded_without_oracle() {
        let p = ForwardProblem::new("ray", 1, vec![], vec![0.0], vec![f64::INFINITY], vec![true])
            .unwrap();
        let out = solve_milp(&p, &[-1.0], &StopPolicy::default(), &Tolerances::default()).unwrap();
        assert_eq!(out.status, MilpStatus::Unbounded);
    }

    #[test]
    fn unbounded_escape_exceeds_threshold() {
        let p = ForwardProblem::new("ray", 1, vec![], vec![0.0], vec![f64::INFINITY], vec![true])
            .unwrap();
        let oracle = |x: &[f64]| x[0];
        let policy = StopPolicy {
            violation_oracle: Some(&oracle),
            big_violation_threshold: 10.0,
            ..StopPolicy::default()
        };
        let out = solve_milp(&p, &[-1.0], &policy, &Tolerances::default()).unwrap();
        assert_eq!(out.status, MilpStatus::UnboundedViolationEscape);
        assert!(out.x.unwrap()[0] > 10.0);
    }

    #[test]
    fn time_limit_zero_stops_at_first_node_boundary() {
        let policy = StopPolicy {
            time_limit: Some(Duration::ZERO),
            ..StopPolicy::default()
        };
        let out = solve_milp(&pair(), &[-1.0, -1.0], &policy, &Tolerances::default()).unwrap();
        assert_eq!(out.status, MilpStatus::TimeLimit);
    }
}
