//! Trust-region cut generation.
//!
//! [`generate_cut`] runs the inner loop: remove or keep the current region,
//! solve the forward problem over `T ∩ X`, and either return a violated point
//! or grow the region. With dimensionality reduction configured the growth
//! step is the stochastic [`s_update`] and regions may fix a random subset of
//! coordinates at `x_hat`.
//!
//! `RAND(s)` draws from a [`Xoshiro256PlusPlus`] stream seeded through
//! SplitMix64 (`seed_from_u64`), using a partial Fisher–Yates shuffle: for
//! `i` in `0..s`, swap position `i` with a uniform position in `i..n`, then
//! sort the first `s` entries.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use thiserror::Error;

use crate::milp::{solve_milp, MilpError, MilpStatus, StopPolicy};
use crate::model::{
    Cut, CutOrigin, ForwardProblem, InfoSet, RegionSize, Relation, Row, Tolerances, TrustRegion,
};

pub type CutRng = Xoshiro256PlusPlus;

pub fn seeded_rng(seed: u64) -> CutRng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DrParams {
    pub kappa: f64,
    pub dr_floor_q: f64,
    pub h_star: usize,
}

impl Default for DrParams {
    fn default() -> Self {
        Self {
            kappa: 0.03,
            dr_floor_q: 0.8,
            h_star: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubroutineParams {
    pub p0: f64,
    pub delta: f64,
    pub i_star: usize,
    pub k_star: usize,
    pub tau: Option<Duration>,
    pub dr: Option<DrParams>,
    pub seed: u64,
    pub violation_tol: f64,
    pub big_violation_threshold: f64,
}

impl Default for SubroutineParams {
    fn default() -> Self {
        Self {
            p0: 1.0,
            delta: 2.0,
            i_star: 10,
            k_star: 2,
            tau: None,
            dr: None,
            seed: 0,
            violation_tol: 1e-6,
            big_violation_threshold: 1e10,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("p0 must be positive, got {0}")]
    P0(f64),
    #[error("delta must exceed 1, got {0}")]
    Delta(f64),
    #[error("i_star and k_star must be at least 1")]
    Period,
    #[error("kappa must lie in (0, 1), got {0}")]
    Kappa(f64),
    #[error("dr_floor_q must lie in (0, 1), got {0}")]
    Floor(f64),
    #[error("violation tolerance must be nonnegative, got {0}")]
    ViolationTol(f64),
    #[error("large-violation threshold must be positive, got {0}")]
    Threshold(f64),
}

impl SubroutineParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.p0 > 0.0 && self.p0.is_finite()) {
            return Err(ParamError::P0(self.p0));
        }
        if !(self.delta > 1.0 && self.delta.is_finite()) {
            return Err(ParamError::Delta(self.delta));
        }
        if self.i_star == 0 || self.k_star == 0 {
            return Err(ParamError::Period);
        }
        if let Some(dr) = self.dr {
            if !(dr.kappa > 0.0 && dr.kappa < 1.0) {
                return Err(ParamError::Kappa(dr.kappa));
            }
            if !(dr.dr_floor_q > 0.0 && dr.dr_floor_q < 1.0) {
                return Err(ParamError::Floor(dr.dr_floor_q));
            }
        }
        if !(self.violation_tol >= 0.0) {
            return Err(ParamError::ViolationTol(self.violation_tol));
        }
        if !(self.big_violation_threshold > 0.0) {
            return Err(ParamError::Threshold(self.big_violation_threshold));
        }
        Ok(())
    }
}

/// The whole space when `i` is a positive multiple of `i_star` or
/// `k == k_star`; `t` otherwise.
pub fn remove(t: &TrustRegion, i: usize, k: usize, prm: &SubroutineParams) -> TrustRegion {
    if (i > 0 && i.is_multiple_of(prm.i_star)) || k == prm.k_star {
        TrustRegion::infinite(t.center.clone())
    } else {
        t.clone()
    }
}

/// `T(x_hat, p) -> T(x_hat, delta p)` over all coordinates.
///
/// # Panics
/// If `t` is infinite.
pub fn update(t: &TrustRegion, prm: &SubroutineParams) -> TrustRegion {
    let p = t
        .size
        .finite()
        .expect("update called on a removed trust region");
    TrustRegion::finite(t.center.clone(), prm.delta * p)
}

pub fn save(current: &TrustRegion, previous: &TrustRegion) -> TrustRegion {
    if current.is_infinite() {
        previous.clone()
    } else {
        current.clone()
    }
}

/// `max(floor((1 - kappa (p - 1)) n), floor(q n))`, capped at `n`.
pub fn s_of_p(p: f64, n: usize, kappa: f64, dr_floor_q: f64) -> usize {
    // The nudge keeps products such as 0.97 * 100 from flooring to 96.
    const NUDGE: f64 = 1e-9;
    let nf = n as f64;
    let shrunk = ((1.0 - kappa * (p - 1.0)) * nf + NUDGE).floor();
    let floor = (dr_floor_q * nf + NUDGE).floor();
    (shrunk.max(floor).max(0.0) as usize).min(n)
}

/// Uniform `s`-subset of `0..n`, sorted.
pub fn rand_subset(n: usize, s: usize, rng: &mut CutRng) -> Vec<usize> {
    let s = s.min(n);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..s {
        let j = rng.gen_range(i..n);
        idx.swap(i, j);
    }
    idx.truncate(s);
    idx.sort_unstable();
    idx
}

/// Stochastic update for a region that just came up empty; `h` is the
/// already-incremented empty counter.
///
/// # Panics
/// If `t` is infinite or dimensionality reduction is not configured.
pub fn s_update(
    t: &TrustRegion,
    h: usize,
    prm: &SubroutineParams,
    rng: &mut CutRng,
) -> TrustRegion {
    let dr = prm
        .dr
        .expect("s_update requires dimensionality reduction parameters");
    let p = t
        .size
        .finite()
        .expect("s_update called on a removed trust region");
    let n = t.center.len();
    if h == dr.h_star {
        TrustRegion::finite(t.center.clone(), p)
    } else if h < dr.h_star {
        let s = s_of_p(p, n, dr.kappa, dr.dr_floor_q);
        TrustRegion::with_dims(t.center.clone(), p, rand_subset(n, s, rng))
    } else {
        let q = prm.delta * p;
        let s = s_of_p(q, n, dr.kappa, dr.dr_floor_q);
        TrustRegion::with_dims(t.center.clone(), q, rand_subset(n, s, rng))
    }
}

/// The forward problem restricted to `t`. Finite regions append one
/// deviation variable `d_j >= |x_j - x_hat_j|` per active coordinate and the
/// row `sum d_j <= p`; inactive coordinates are fixed at `x_hat_j`. The first
/// `n` variables of the result are the original ones.
pub fn encode_subregion(problem: &ForwardProblem, t: &TrustRegion) -> ForwardProblem {
    let p = match t.size {
        RegionSize::Infinite => return problem.clone(),
        RegionSize::Finite(p) => p,
    };
    let n = problem.n;
    let s = t.active_dims.len();
    let mut out = problem.clone();
    out.n = n + s;
    out.lower.extend(std::iter::repeat_n(0.0, s));
    out.upper.extend(std::iter::repeat_n(p, s));
    out.is_integer.extend(std::iter::repeat_n(false, s));
    out.objective.extend(std::iter::repeat_n(0.0, s));
    let mut budget = Vec::with_capacity(s);
    for (k, &j) in t.active_dims.iter().enumerate() {
        let d = n + k;
        out.rows.push(Row::new(
            vec![(d, 1.0), (j, -1.0)],
            Relation::Ge,
            -t.center[j],
        ));
        out.rows.push(Row::new(
            vec![(d, 1.0), (j, 1.0)],
            Relation::Ge,
            t.center[j],
        ));
        budget.push((d, 1.0));
    }
    if s > 0 {
        out.rows.push(Row::new(budget, Relation::Le, p));
    }
    for j in 0..n {
        if t.active_dims.binary_search(&j).is_err() {
            out.lower[j] = t.center[j];
            out.upper[j] = t.center[j];
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub enum CutResult {
    Violated {
        cut: Cut,
        info: InfoSet,
    },
    Verified {
        info: InfoSet,
    },
    /// The deadline passed before the subroutine could conclude.
    Interrupted {
        info: InfoSet,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CutReport {
    pub result: CutResult,
    /// Region sizes solved over, in order.
    pub regions: Vec<RegionSize>,
}

#[derive(Clone, Copy, Debug)]
pub struct CutControl {
    pub deadline: Option<Instant>,
    pub tol: Tolerances,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CutGenError {
    #[error(transparent)]
    Milp(#[from] MilpError),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("forward problem over a region containing x_hat reported infeasible")]
    InconsistentRegion,
    #[error("forward problem unbounded without an escape point")]
    Unbounded,
}

/// Threshold a point's violation must exceed to yield a cut.
pub fn violation_threshold(c: &[f64], x_hat: &[f64], violation_tol: f64) -> f64 {
    violation_tol * dot(c, x_hat).abs().max(1.0)
}

pub fn generate_cut(
    c_tilde: &[f64],
    x_hat: &[f64],
    problem: &ForwardProblem,
    info: &InfoSet,
    prm: &SubroutineParams,
    rng: &mut CutRng,
    ctl: &CutControl,
) -> Result<CutReport, CutGenError> {
    prm.validate()?;
    let n = problem.n;
    let base = dot(c_tilde, x_hat);
    let threshold = violation_threshold(c_tilde, x_hat, prm.violation_tol);
    let oracle = |x: &[f64]| base - dot(c_tilde, &x[..n]);
    let mut regions = Vec::new();
    let mut k = 1;
    let mut h = info.empty_counter;
    let mut prev = info.trust_region.clone();
    loop {
        let cur = remove(&prev, info.outer_index, k, prm);
        let time_limit = match ctl.deadline {
            Some(d) => {
                let now = Instant::now();
                if now >= d {
                    return Ok(CutReport {
                        result: CutResult::Interrupted { info: info.clone() },
                        regions,
                    });
                }
                Some(d - now)
            }
            None => None,
        };
        let encoded = encode_subregion(problem, &cur);
        let mut objective = c_tilde.to_vec();
        objective.resize(encoded.n, 0.0);
        let policy = StopPolicy {
            time_limit,
            early_stop_tau: prm.tau,
            violation_oracle: Some(&oracle),
            violation_floor: threshold,
            big_violation_threshold: prm.big_violation_threshold,
        };
        regions.push(cur.size);
        let out = solve_milp(&encoded, &objective, &policy, &ctl.tol)?;
        let origin = match out.status {
            MilpStatus::TimeLimit => {
                return Ok(CutReport {
                    result: CutResult::Interrupted { info: info.clone() },
                    regions,
                })
            }
            MilpStatus::Infeasible => return Err(CutGenError::InconsistentRegion),
            MilpStatus::Unbounded => return Err(CutGenError::Unbounded),
            MilpStatus::UnboundedViolationEscape => CutOrigin::UnboundedEscape,
            MilpStatus::EarlyStopFeasible => CutOrigin::EarlyStop,
            MilpStatus::Optimal => match cur.size {
                RegionSize::Finite(p) => CutOrigin::TrustRegion(p),
                RegionSize::Infinite => CutOrigin::FullRegion,
            },
        };
        let x = out.x.expect("feasible MILP outcome carries a point");
        let point = x[..n].to_vec();
        let violation = oracle(&point);
        if violation > threshold {
            let saved = save(&cur, &prev);
            if prm.dr.is_some() && !cur.is_infinite() {
                h = 0;
            }
            return Ok(CutReport {
                result: CutResult::Violated {
                    cut: Cut {
                        point,
                        violation,
                        origin,
                    },
                    info: InfoSet {
                        trust_region: saved,
                        outer_index: info.outer_index + 1,
                        empty_counter: h,
                    },
                },
                regions,
            });
        }
        if cur.is_infinite() {
            return Ok(CutReport {
                result: CutResult::Verified { info: info.clone() },
                regions,
            });
        }
        match prm.dr {
            Some(dr) => {
                h += 1;
                prev = s_update(&cur, h, prm, rng);
                if h == dr.h_star + 1 {
                    h = 0;
                }
            }
            None => prev = update(&cur, prm),
        }
        k += 1;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
