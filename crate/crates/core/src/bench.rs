//! Instance generation, benchmark runs and performance profiles.

use std::collections::{BTreeMap, BTreeSet};
use std::io;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use thiserror::Error;

use crate::driver::{solve_inverse, IterationRecord, Limits, VariantConfig};
use crate::milp::{solve_milp, MilpError, MilpStatus, StopPolicy};
use crate::model::{CutOrigin, ForwardProblem, InverseInstance, RegionSize, Tolerances};

pub const RESULTS_HEADER: [&str; 9] = [
    "instance",
    "variant",
    "status",
    "objective",
    "iterations",
    "cuts",
    "total_s",
    "cutgen_s",
    "master_s",
];

pub const PROFILE_HEADER: [&str; 4] = ["variant", "x", "y", "curve_kind"];

#[derive(Clone, Debug, PartialEq)]
pub enum Generated {
    Instances(Vec<InverseInstance>),
    Dropped { attempts: usize },
}

/// Draws cost vectors uniform on `[-1, 1]^n` and keeps the optimal points as
/// targets, with the problem's own objective as `c0`. Unbounded, infeasible
/// and timed-out draws are discarded. Fewer than `count` successes within
/// `attempts` draws drops the problem.
pub fn generate_instances(
    problem: &ForwardProblem,
    seed: u64,
    time_limit: Option<Duration>,
    attempts: usize,
    count: usize,
) -> Result<Generated, MilpError> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let tol = Tolerances::default();
    let policy = StopPolicy {
        time_limit,
        ..Default::default()
    };
    let mut out = Vec::new();
    for _ in 0..attempts {
        if out.len() == count {
            break;
        }
        let c: Vec<f64> = (0..problem.n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let res = solve_milp(problem, &c, &policy, &tol)?;
        if res.status != MilpStatus::Optimal {
            continue;
        }
        let x_hat = res.x.expect("optimal outcome carries a point");
        let label = format!("{}_t{}", problem.name, out.len() + 1);
        out.push(InverseInstance::new(
            problem.clone(),
            problem.objective.clone(),
            x_hat,
            label,
        ));
    }
    if out.len() < count {
        return Ok(Generated::Dropped { attempts });
    }
    Ok(Generated::Instances(out))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub instance: String,
    pub variant: String,
    pub status: String,
    pub objective: f64,
    pub iterations: usize,
    pub cuts: usize,
    pub total_s: f64,
    pub cutgen_s: f64,
    pub master_s: f64,
}

impl BenchRow {
    pub fn solved(&self) -> bool {
        self.status == "Optimal"
    }
}

/// Solves every (instance, variant) cell, in parallel, and returns rows
/// sorted by instance label then variant name. A cell whose solve fails
/// outright gets status `Error`.
pub fn run_bench(
    instances: &[InverseInstance],
    variants: &[VariantConfig],
    time_limit: Option<Duration>,
) -> Vec<BenchRow> {
    let cells: Vec<(&InverseInstance, &VariantConfig)> = instances
        .iter()
        .flat_map(|i| variants.iter().map(move |v| (i, v)))
        .collect();
    let limits = Limits {
        time: time_limit,
        ..Default::default()
    };
    let mut rows: Vec<BenchRow> = cells
        .par_iter()
        .map(|(inst, v)| match solve_inverse(inst, v, &limits) {
            Ok(r) => BenchRow {
                instance: inst.label.clone(),
                variant: v.name.clone(),
                status: r.status.to_string(),
                objective: r.objective,
                iterations: r.iterations,
                cuts: r.cuts,
                total_s: r.total.as_secs_f64(),
                cutgen_s: r.cutgen.as_secs_f64(),
                master_s: r.master.as_secs_f64(),
            },
            Err(_) => BenchRow {
                instance: inst.label.clone(),
                variant: v.name.clone(),
                status: "Error".to_string(),
                objective: f64::NAN,
                iterations: 0,
                cuts: 0,
                total_s: 0.0,
                cutgen_s: 0.0,
                master_s: 0.0,
            },
        })
        .collect();
    rows.sort_by(|a, b| (&a.instance, &a.variant).cmp(&(&b.instance, &b.variant)));
    rows
}

fn csv_writer<W: io::Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

/// Writes the results table. With `timings` off every seconds column is 0.
pub fn write_bench_csv<W: io::Write>(rows: &[BenchRow], w: W, timings: bool) -> csv::Result<()> {
    let mut out = csv_writer(w);
    out.write_record(RESULTS_HEADER)?;
    let t = |v: f64| {
        if timings {
            v.to_string()
        } else {
            "0".to_string()
        }
    };
    for r in rows {
        out.write_record([
            r.instance.clone(),
            r.variant.clone(),
            r.status.clone(),
            r.objective.to_string(),
            r.iterations.to_string(),
            r.cuts.to_string(),
            t(r.total_s),
            t(r.cutgen_s),
            t(r.master_s),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub const LOG_HEADER: [&str; 11] = [
    "iteration",
    "point_index",
    "point",
    "violation",
    "origin",
    "region_size",
    "fp_solves",
    "candidate",
    "master_objective",
    "cutgen_s",
    "master_s",
];

fn origin_text(o: Option<CutOrigin>) -> String {
    match o {
        None => String::new(),
        Some(CutOrigin::TrustRegion(p)) => format!("trust_region:{p}"),
        Some(CutOrigin::FullRegion) => "full_region".into(),
        Some(CutOrigin::EarlyStop) => "early_stop".into(),
        Some(CutOrigin::UnboundedEscape) => "unbounded_escape".into(),
    }
}

/// One line per subroutine call. Points are space-separated; verifications
/// leave `point` and `origin` empty.
pub fn write_log_csv<W: io::Write>(
    log: &[IterationRecord],
    w: W,
    timings: bool,
) -> csv::Result<()> {
    let mut out = csv_writer(w);
    out.write_record(LOG_HEADER)?;
    let t = |d: Duration| {
        if timings {
            d.as_secs_f64().to_string()
        } else {
            "0".to_string()
        }
    };
    let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
    for r in log {
        let point = r.point.as_deref().map(join).unwrap_or_default();
        let region = match r.region_size {
            None => String::new(),
            Some(RegionSize::Infinite) => "inf".into(),
            Some(RegionSize::Finite(p)) => p.to_string(),
        };
        out.write_record([
            r.iteration.to_string(),
            r.point_index.to_string(),
            point,
            r.violation.to_string(),
            origin_text(r.origin),
            region,
            r.fp_solves.to_string(),
            join(&r.candidate),
            r.master_objective.to_string(),
            t(r.cutgen),
            t(r.master),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Error)]
pub enum ReadError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("results header must be {expected}, found {found}")]
    Header { expected: String, found: String },
    #[error("record {record}: bad {field} value {text:?}")]
    Field {
        record: usize,
        field: &'static str,
        text: String,
    },
}

pub fn read_bench_csv<R: io::Read>(r: R) -> Result<Vec<BenchRow>, ReadError> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    if header.iter().ne(RESULTS_HEADER) {
        return Err(ReadError::Header {
            expected: RESULTS_HEADER.join(","),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let record = k + 1;
        let text = |i: usize| rec.get(i).unwrap_or("");
        let bad = |i: usize, name: &'static str| ReadError::Field {
            record,
            field: name,
            text: text(i).to_string(),
        };
        let f = |i: usize, name: &'static str| -> Result<f64, ReadError> {
            text(i).parse::<f64>().map_err(|_| bad(i, name))
        };
        let u = |i: usize, name: &'static str| -> Result<usize, ReadError> {
            text(i).parse::<usize>().map_err(|_| bad(i, name))
        };
        rows.push(BenchRow {
            instance: rec.get(0).unwrap_or("").to_string(),
            variant: rec.get(1).unwrap_or("").to_string(),
            status: rec.get(2).unwrap_or("").to_string(),
            objective: f(3, "objective")?,
            iterations: u(4, "iterations")?,
            cuts: u(5, "cuts")?,
            total_s: f(6, "total_s")?,
            cutgen_s: f(7, "cutgen_s")?,
            master_s: f(8, "master_s")?,
        });
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurveKind {
    /// Sorted solve times against the number of instances solved by then.
    Cumulative,
    /// Fraction of instances solved within `x` times the best time.
    Ratio,
}

impl CurveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CurveKind::Cumulative => "cumulative",
            CurveKind::Ratio => "ratio",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProfilePoint {
    pub variant: String,
    pub x: f64,
    pub y: f64,
    pub kind: CurveKind,
}

/// Ratio grid `2^(k/4)` for `k = 0..=40`, spanning `[1, 1024]`.
pub fn theta_grid() -> Vec<f64> {
    (0..=40).map(|k| 2f64.powf(k as f64 / 4.0)).collect()
}

/// Both curve families, variants in name order, cumulative curves first.
pub fn performance_profile(rows: &[BenchRow]) -> Vec<ProfilePoint> {
    let variants: BTreeSet<&str> = rows.iter().map(|r| r.variant.as_str()).collect();
    let instances: BTreeSet<&str> = rows.iter().map(|r| r.instance.as_str()).collect();
    let mut best: BTreeMap<&str, f64> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.solved()) {
        let e = best.entry(r.instance.as_str()).or_insert(f64::INFINITY);
        *e = e.min(r.total_s);
    }
    let mut out = Vec::new();
    for v in &variants {
        let mut times: Vec<f64> = rows
            .iter()
            .filter(|r| r.variant == *v && r.solved())
            .map(|r| r.total_s)
            .collect();
        times.sort_by(f64::total_cmp);
        for (k, t) in times.into_iter().enumerate() {
            out.push(ProfilePoint {
                variant: v.to_string(),
                x: t,
                y: (k + 1) as f64,
                kind: CurveKind::Cumulative,
            });
        }
    }
    let total = instances.len() as f64;
    for v in &variants {
        for theta in theta_grid() {
            let within = rows
                .iter()
                .filter(|r| r.variant == *v && r.solved())
                .filter(|r| {
                    let b = best[r.instance.as_str()];
                    r.total_s <= theta * b * (1.0 + 1e-12)
                })
                .count();
            out.push(ProfilePoint {
                variant: v.to_string(),
                x: theta,
                y: if total > 0.0 {
                    within as f64 / total
                } else {
                    0.0
                },
                kind: CurveKind::Ratio,
            });
        }
    }
    out
}

pub fn write_profile_csv<W: io::Write>(points: &[ProfilePoint], w: W) -> csv::Result<()> {
    let mut out = csv_writer(w);
    out.write_record(PROFILE_HEADER)?;
    for p in points {
        out.write_record([
            p.variant.clone(),
            p.x.to_string(),
            p.y.to_string(),
            p.kind.as_str().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
