//! Outer cutting-plane loops: single-point and multi-point, plus the named
//! variant presets.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::cutgen::{
    generate_cut, seeded_rng, CutControl, CutGenError, CutResult, DrParams, ParamError,
    SubroutineParams,
};
use crate::master::{solve_master, solve_master_multi, MasterConfig, MasterError, PointData};
use crate::model::{
    validate_instance, CutOrigin, CutPool, InfoSet, InverseInstance, ModelError, RegionSize,
    Tolerances, TrustRegion, Violation,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Cp,
    CpEs,
    Cptr,
    CptrEs,
    CptrEsDr,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Cp,
        Variant::CpEs,
        Variant::Cptr,
        Variant::CptrEs,
        Variant::CptrEsDr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Cp => "CP",
            Variant::CpEs => "CP-ES",
            Variant::Cptr => "CPTR",
            Variant::CptrEs => "CPTR-ES",
            Variant::CptrEsDr => "CPTR-ES-DR",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = DriverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| DriverError::UnknownVariant(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariantConfig {
    pub name: String,
    pub params: SubroutineParams,
    pub master: MasterConfig,
}

impl VariantConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.params.seed = seed;
        self
    }
}

const EARLY_STOP_TAU: Duration = Duration::from_secs(5);

pub fn preset(name: &str) -> Result<VariantConfig, DriverError> {
    let v: Variant = name.parse()?;
    let classic = SubroutineParams {
        i_star: 1,
        k_star: 1,
        ..Default::default()
    };
    let params = match v {
        Variant::Cp => classic,
        Variant::CpEs => SubroutineParams {
            tau: Some(EARLY_STOP_TAU),
            ..classic
        },
        Variant::Cptr => SubroutineParams::default(),
        Variant::CptrEs => SubroutineParams {
            tau: Some(EARLY_STOP_TAU),
            ..Default::default()
        },
        Variant::CptrEsDr => SubroutineParams {
            tau: Some(EARLY_STOP_TAU),
            dr: Some(DrParams::default()),
            ..Default::default()
        },
    };
    Ok(VariantConfig {
        name: v.name().to_string(),
        params,
        master: MasterConfig::default(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Limits {
    pub time: Option<Duration>,
    pub max_iters: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            time: None,
            max_iters: 10_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    TimeLimit,
    IterationLimit,
    ProvedInfeasible,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "Optimal",
            SolveStatus::TimeLimit => "TimeLimit",
            SolveStatus::IterationLimit => "IterationLimit",
            SolveStatus::ProvedInfeasible => "ProvedInfeasible",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolveStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            SolveStatus::Optimal,
            SolveStatus::TimeLimit,
            SolveStatus::IterationLimit,
            SolveStatus::ProvedInfeasible,
        ]
        .into_iter()
        .find(|v| v.as_str() == s)
        .ok_or_else(|| format!("unknown status {s:?}"))
    }
}

/// One subroutine call.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    /// 1-based call counter.
    pub iteration: usize,
    /// Data point index (always 0 for single-point solves).
    pub point_index: usize,
    /// The violated point, `None` for a verification.
    pub point: Option<Vec<f64>>,
    pub violation: f64,
    pub origin: Option<CutOrigin>,
    /// Size of the last region solved in this call.
    pub region_size: Option<RegionSize>,
    pub fp_solves: usize,
    /// Cost vector handed to this call.
    pub candidate: Vec<f64>,
    /// Master objective of that candidate.
    pub master_objective: f64,
    pub cutgen: Duration,
    /// Time of the master solve that produced the candidate.
    pub master: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub c_star: Vec<f64>,
    pub objective: f64,
    /// Subroutine calls, verifications included.
    pub iterations: usize,
    pub cuts: usize,
    pub pool: CutPool,
    pub log: Vec<IterationRecord>,
    pub total: Duration,
    pub cutgen: Duration,
    pub master: Duration,
}

impl SolveReport {
    /// Cut points in generation order.
    pub fn cut_sequence(&self) -> Vec<Vec<f64>> {
        self.pool.points().map(<[f64]>::to_vec).collect()
    }

    pub fn escapes(&self) -> usize {
        self.pool
            .cuts()
            .iter()
            .filter(|c| c.origin == CutOrigin::UnboundedEscape)
            .count()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiReport {
    pub status: SolveStatus,
    pub c_star: Vec<f64>,
    /// Per-point cost vectors when a regularization weight was given.
    pub c_bar: Option<Vec<Vec<f64>>>,
    pub objective: f64,
    pub iterations: usize,
    pub master_calls: usize,
    pub pools: Vec<CutPool>,
    pub log: Vec<IterationRecord>,
    pub total: Duration,
}

impl MultiReport {
    pub fn cuts(&self) -> usize {
        self.pools.iter().map(CutPool::len).sum()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DriverError {
    #[error("unknown variant {0:?}; expected one of CP, CP-ES, CPTR, CPTR-ES, CPTR-ES-DR")]
    UnknownVariant(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("x_hat of {label:?} is not forward-feasible: {first}")]
    InfeasibleTarget { label: String, first: Violation },
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    CutGen(#[from] CutGenError),
    #[error(transparent)]
    Master(MasterError),
    #[error("multi-point solve needs at least one instance")]
    NoInstances,
    #[error("v_star must lie in [1, {d}], got {v_star}")]
    VStar { v_star: usize, d: usize },
    #[error("instances disagree on {0}")]
    Mismatch(&'static str),
}

fn check_instance(inst: &InverseInstance, tol: &Tolerances) -> Result<(), DriverError> {
    let report = validate_instance(inst, tol)?;
    if let Some(first) = report.violations.into_iter().next() {
        return Err(DriverError::InfeasibleTarget {
            label: inst.label.clone(),
            first,
        });
    }
    Ok(())
}

fn expired(deadline: Option<Instant>) -> bool {
    deadline.is_some_and(|d| Instant::now() >= d)
}

/// Single-point cutting-plane loop.
pub fn solve_inverse(
    inst: &InverseInstance,
    variant: &VariantConfig,
    limits: &Limits,
) -> Result<SolveReport, DriverError> {
    solve_inverse_with_tol(inst, variant, limits, &Tolerances::default())
}

pub fn solve_inverse_with_tol(
    inst: &InverseInstance,
    variant: &VariantConfig,
    limits: &Limits,
    tol: &Tolerances,
) -> Result<SolveReport, DriverError> {
    let start = Instant::now();
    check_instance(inst, tol)?;
    let prm = &variant.params;
    prm.validate()?;
    let deadline = limits.time.map(|t| start + t);
    let ctl = CutControl {
        deadline,
        tol: *tol,
    };
    let mut rng = seeded_rng(prm.seed);
    let mut info = InfoSet::new(TrustRegion::finite(inst.x_hat.clone(), prm.p0));
    let mut pool = CutPool::new();
    let mut log = Vec::new();
    let mut cutgen_total = Duration::ZERO;
    let mut master_total = Duration::ZERO;

    let master_step = |pool: &CutPool, total: &mut Duration| {
        let t = Instant::now();
        let r = solve_master(
            &inst.c0,
            &inst.x_hat,
            pool,
            &inst.problem,
            &variant.master,
            tol,
        );
        let dt = t.elapsed();
        *total += dt;
        r.map(|s| (s, dt))
    };

    let finish = |status, c: Vec<f64>, objective, iterations, pool: CutPool, log, cg, ms| {
        Ok(SolveReport {
            status,
            c_star: c,
            objective,
            iterations,
            cuts: pool.len(),
            pool,
            log,
            total: start.elapsed(),
            cutgen: cg,
            master: ms,
        })
    };

    let (mut sol, mut last_master) = match master_step(&pool, &mut master_total) {
        Ok(v) => v,
        Err(MasterError::Infeasible) => {
            return finish(
                SolveStatus::ProvedInfeasible,
                inst.c0.clone(),
                f64::NAN,
                0,
                pool,
                log,
                cutgen_total,
                master_total,
            )
        }
        Err(e) => return Err(DriverError::Master(e)),
    };
    let mut iterations = 0;
    loop {
        if expired(deadline) {
            return finish(
                SolveStatus::TimeLimit,
                sol.c_tilde,
                sol.objective,
                iterations,
                pool,
                log,
                cutgen_total,
                master_total,
            );
        }
        if iterations >= limits.max_iters {
            return finish(
                SolveStatus::IterationLimit,
                sol.c_tilde,
                sol.objective,
                iterations,
                pool,
                log,
                cutgen_total,
                master_total,
            );
        }
        let t = Instant::now();
        let report = generate_cut(
            &sol.c_tilde,
            &inst.x_hat,
            &inst.problem,
            &info,
            prm,
            &mut rng,
            &ctl,
        )?;
        let dt = t.elapsed();
        cutgen_total += dt;
        iterations += 1;
        let mut record = IterationRecord {
            iteration: iterations,
            point_index: 0,
            point: None,
            violation: 0.0,
            origin: None,
            region_size: report.regions.last().copied(),
            fp_solves: report.regions.len(),
            candidate: sol.c_tilde.clone(),
            master_objective: sol.objective,
            cutgen: dt,
            master: last_master,
        };
        match report.result {
            CutResult::Interrupted { .. } => {
                log.push(record);
                return finish(
                    SolveStatus::TimeLimit,
                    sol.c_tilde,
                    sol.objective,
                    iterations,
                    pool,
                    log,
                    cutgen_total,
                    master_total,
                );
            }
            CutResult::Verified { .. } => {
                log.push(record);
                return finish(
                    SolveStatus::Optimal,
                    sol.c_tilde,
                    sol.objective,
                    iterations,
                    pool,
                    log,
                    cutgen_total,
                    master_total,
                );
            }
            CutResult::Violated { cut, info: next } => {
                record.point = Some(cut.point.clone());
                record.violation = cut.violation;
                record.origin = Some(cut.origin);
                log.push(record);
                pool.push(cut);
                info = next;
                match master_step(&pool, &mut master_total) {
                    Ok((s, dt)) => {
                        sol = s;
                        last_master = dt;
                    }
                    Err(MasterError::Infeasible) => {
                        return finish(
                            SolveStatus::ProvedInfeasible,
                            sol.c_tilde,
                            f64::NAN,
                            iterations,
                            pool,
                            log,
                            cutgen_total,
                            master_total,
                        )
                    }
                    Err(e) => return Err(DriverError::Master(e)),
                }
            }
        }
    }
}

/// Multi-point cutting-plane loop. The sweep over points restarts from the
/// first point after every master solve and stops early once `v_star`
/// violated points have been collected.
pub fn solve_inverse_multi(
    instances: &[InverseInstance],
    lambda: Option<f64>,
    v_star: usize,
    variant: &VariantConfig,
    limits: &Limits,
) -> Result<MultiReport, DriverError> {
    let start = Instant::now();
    let tol = Tolerances::default();
    let d_count = instances.len();
    let Some(first) = instances.first() else {
        return Err(DriverError::NoInstances);
    };
    if !(1..=d_count).contains(&v_star) {
        return Err(DriverError::VStar { v_star, d: d_count });
    }
    for inst in instances {
        check_instance(inst, &tol)?;
        if inst.problem.n != first.problem.n {
            return Err(DriverError::Mismatch("variable count"));
        }
        if inst.c0 != first.c0 {
            return Err(DriverError::Mismatch("c0"));
        }
    }
    let prm = &variant.params;
    prm.validate()?;
    let deadline = limits.time.map(|t| start + t);
    let ctl = CutControl { deadline, tol };
    let c0 = &first.c0;
    let mut rngs: Vec<_> = (0..d_count)
        .map(|d| seeded_rng(prm.seed.wrapping_add(d as u64)))
        .collect();
    let mut infos: Vec<InfoSet> = instances
        .iter()
        .map(|inst| InfoSet::new(TrustRegion::finite(inst.x_hat.clone(), prm.p0)))
        .collect();
    let mut pools = vec![CutPool::new(); d_count];
    let mut log = Vec::new();
    let mut iterations = 0;
    let mut master_calls = 0;

    let solve_mp = |pools: &[CutPool]| {
        let data: Vec<PointData<'_>> = instances
            .iter()
            .zip(pools)
            .map(|(inst, pool)| PointData {
                x_hat: &inst.x_hat,
                pool,
                problem: &inst.problem,
            })
            .collect();
        let t = Instant::now();
        let r = solve_master_multi(c0, &data, lambda, &variant.master, &tol);
        r.map(|s| (s, t.elapsed()))
    };
    let report = |status,
                  sol: Option<&crate::master::MultiMasterSolution>,
                  iterations,
                  master_calls,
                  pools,
                  log| {
        let (c_star, c_bar, objective) = match sol {
            Some(s) => (s.c.clone(), lambda.map(|_| s.c_bar.clone()), s.objective),
            None => (c0.clone(), None, f64::NAN),
        };
        Ok(MultiReport {
            status,
            c_star,
            c_bar,
            objective,
            iterations,
            master_calls,
            pools,
            log,
            total: start.elapsed(),
        })
    };

    loop {
        let (sol, master_dt) = match solve_mp(&pools) {
            Ok(v) => v,
            Err(MasterError::Infeasible) => {
                return report(
                    SolveStatus::ProvedInfeasible,
                    None,
                    iterations,
                    master_calls,
                    pools,
                    log,
                )
            }
            Err(e) => return Err(DriverError::Master(e)),
        };
        master_calls += 1;
        let mut count_e = 0;
        let mut count_v = 0;
        for d in 0..d_count {
            if expired(deadline) {
                return report(
                    SolveStatus::TimeLimit,
                    Some(&sol),
                    iterations,
                    master_calls,
                    pools,
                    log,
                );
            }
            if iterations >= limits.max_iters {
                return report(
                    SolveStatus::IterationLimit,
                    Some(&sol),
                    iterations,
                    master_calls,
                    pools,
                    log,
                );
            }
            let t = Instant::now();
            let inst = &instances[d];
            let out = generate_cut(
                &sol.c_bar[d],
                &inst.x_hat,
                &inst.problem,
                &infos[d],
                prm,
                &mut rngs[d],
                &ctl,
            )?;
            iterations += 1;
            let mut record = IterationRecord {
                iteration: iterations,
                point_index: d,
                point: None,
                violation: 0.0,
                origin: None,
                region_size: out.regions.last().copied(),
                fp_solves: out.regions.len(),
                candidate: sol.c_bar[d].clone(),
                master_objective: sol.objective,
                cutgen: t.elapsed(),
                master: master_dt,
            };
            match out.result {
                CutResult::Interrupted { .. } => {
                    log.push(record);
                    return report(
                        SolveStatus::TimeLimit,
                        Some(&sol),
                        iterations,
                        master_calls,
                        pools,
                        log,
                    );
                }
                CutResult::Verified { .. } => {
                    log.push(record);
                    count_e += 1;
                }
                CutResult::Violated { cut, info } => {
                    record.point = Some(cut.point.clone());
                    record.violation = cut.violation;
                    record.origin = Some(cut.origin);
                    log.push(record);
                    pools[d].push(cut);
                    infos[d] = info;
                    count_v += 1;
                }
            }
            if count_v >= v_star {
                break;
            }
        }
        if count_e == d_count {
            return report(
                SolveStatus::Optimal,
                Some(&sol),
                iterations,
                master_calls,
                pools,
                log,
            );
        }
    }
}
