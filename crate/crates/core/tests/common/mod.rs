//! Fixtures and brute-force helpers shared by the integration suites.
#![allow(dead_code)]

use invmilo::lp::LinearProgram;
use invmilo::master::{solve_master, MasterConfig};
use invmilo::model::{CutPool, ForwardProblem, GeRow, InverseInstance, Relation, Row, Tolerances};
use invmilo_oracle::{dot, integer_points, mixed_candidates, Ge};
use rand::Rng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type TestRng = Xoshiro256PlusPlus;

fn problem(
    name: &str,
    rows: Vec<Row>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    is_integer: Vec<bool>,
    objective: Vec<f64>,
) -> ForwardProblem {
    ForwardProblem::new(name, lower.len(), rows, lower, upper, is_integer)
        .unwrap()
        .with_objective(objective)
        .unwrap()
}

/// Binary pair with `b1 + 0.6 b2 <= 1`; target (0,1) is already optimal.
pub fn pair() -> InverseInstance {
    let p = problem(
        "pair",
        vec![Row::new(vec![(0, 1.0), (1, 0.6)], Relation::Le, 1.0)],
        vec![0.0, 0.0],
        vec![1.0, 1.0],
        vec![true, true],
        vec![-1.0, -1.0],
    );
    InverseInstance::new(p, vec![-1.0, -1.0], vec![0.0, 1.0], "pair")
}

/// Integer points of `[0,3]^2` with `x1 + x2 >= 2`; inverse optimum 1.
pub fn knapsack() -> InverseInstance {
    let p = problem(
        "knapsack",
        vec![Row::new(vec![(0, 1.0), (1, 1.0)], Relation::Ge, 2.0)],
        vec![0.0, 0.0],
        vec![3.0, 3.0],
        vec![true, true],
        vec![1.0, 2.0],
    );
    InverseInstance::new(p, vec![1.0, 2.0], vec![1.0, 1.0], "knapsack")
}

/// Hexagon-like 2D region where a handful of points near x_hat generate the
/// inverse-feasible cone; inverse optimum 2.
pub fn hexagon() -> InverseInstance {
    let p = problem(
        "hexagon",
        vec![
            Row::new(vec![(1, 1.0), (0, -1.0)], Relation::Le, 6.0),
            Row::new(vec![(0, 1.0), (1, 1.0)], Relation::Le, 14.0),
            Row::new(vec![(0, 1.0), (1, -1.0)], Relation::Le, 1.0),
            Row::new(vec![(0, 1.0), (1, 1.0)], Relation::Ge, 8.0),
        ],
        vec![2.0, 5.0],
        vec![6.0, 9.0],
        vec![true, true],
        vec![1.0, 1.0],
    );
    InverseInstance::new(p, vec![1.0, 1.0], vec![3.0, 9.0], "hexagon")
}

pub fn cube3() -> InverseInstance {
    let p = problem(
        "cube3",
        vec![
            Row::new(vec![(0, 1.0), (1, 1.0), (2, 1.0)], Relation::Le, 4.0),
            Row::new(vec![(0, 1.0), (2, -1.0)], Relation::Ge, -1.0),
        ],
        vec![0.0; 3],
        vec![2.0; 3],
        vec![true; 3],
        vec![1.0, -1.0, 2.0],
    );
    InverseInstance::new(p, vec![1.0, -1.0, 2.0], vec![1.0, 1.0, 1.0], "cube3")
}

pub fn mixed2() -> InverseInstance {
    let p = problem(
        "mixed2",
        vec![
            Row::new(vec![(0, 1.0), (1, 2.0)], Relation::Le, 5.0),
            Row::new(vec![(0, 1.0), (1, -1.0)], Relation::Ge, -1.0),
        ],
        vec![0.0, 0.0],
        vec![3.0, 2.5],
        vec![true, false],
        vec![-1.0, -1.0],
    );
    InverseInstance::new(p, vec![-1.0, -1.0], vec![1.0, 2.0], "mixed2")
}

/// Nonnegative integer quadrant without upper bounds. With `c0 = (-1, 1)`
/// the first candidate makes the forward problem unbounded; the optimum is
/// `c = (0, 1)` at distance 1.
pub fn unbounded() -> InverseInstance {
    let p = problem(
        "quadrant",
        vec![],
        vec![0.0, 0.0],
        vec![f64::INFINITY, f64::INFINITY],
        vec![true, true],
        vec![-1.0, 1.0],
    );
    InverseInstance::new(p, vec![-1.0, 1.0], vec![0.0, 0.0], "quadrant")
}

/// Every bounded hand-made fixture.
pub fn bounded_fixtures() -> Vec<InverseInstance> {
    vec![pair(), knapsack(), hexagon(), cube3(), mixed2()]
}

/// Rows in oracle form, converted straight from the mixed-relation rows.
pub fn oracle_rows(p: &ForwardProblem) -> Vec<Ge> {
    let mut out = Vec::new();
    for r in &p.rows {
        let mut a = vec![0.0; p.n];
        for &(j, v) in &r.coeffs {
            a[j] += v;
        }
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        match r.relation {
            Relation::Ge => out.push(Ge::new(a, r.rhs)),
            Relation::Le => out.push(Ge::new(neg, -r.rhs)),
            Relation::Eq => {
                out.push(Ge::new(a, r.rhs));
                out.push(Ge::new(neg, -r.rhs));
            }
        }
    }
    out
}

/// Integer points of a pure problem, or a finite superset of the extreme
/// points of a mixed one.
pub fn oracle_points(p: &ForwardProblem) -> Vec<Vec<f64>> {
    let rows = oracle_rows(p);
    if p.is_integer.iter().all(|b| *b) {
        integer_points(&rows, &p.lower, &p.upper)
    } else {
        mixed_candidates(&rows, &p.lower, &p.upper, &p.is_integer)
    }
}

/// Inverse optimum with every candidate point as a cut, one master solve.
pub fn oracle_inverse(inst: &InverseInstance) -> f64 {
    let pool = CutPool::from_points(oracle_points(&inst.problem));
    solve_master(
        &inst.c0,
        &inst.x_hat,
        &pool,
        &inst.problem,
        &MasterConfig::default(),
        &Tolerances::default(),
    )
    .unwrap()
    .objective
}

fn random_rows(rng: &mut TestRng, n: usize, anchor: &[f64]) -> Vec<Row> {
    let m = rng.gen_range(1..=4);
    (0..m)
        .map(|_| {
            let coeffs: Vec<(usize, f64)> = (0..n)
                .map(|j| (j, rng.gen_range(-3..=3) as f64))
                .filter(|&(_, v)| v != 0.0)
                .collect();
            let act: f64 = coeffs.iter().map(|&(j, v)| v * anchor[j]).sum();
            let slack = rng.gen_range(0..=2) as f64;
            match rng.gen_range(0..5) {
                0 => Row::new(coeffs, Relation::Eq, act),
                1 | 2 => Row::new(coeffs, Relation::Le, act + slack),
                _ => Row::new(coeffs, Relation::Ge, act - slack),
            }
        })
        .collect()
}

/// Integer widths in `[0, 4]` with box volume at most `max_volume`.
fn random_box(rng: &mut TestRng, n: usize, max_volume: f64) -> (Vec<f64>, Vec<f64>) {
    let mut lo: Vec<f64> = (0..n).map(|_| rng.gen_range(0..=2) as f64).collect();
    let mut hi: Vec<f64> = lo
        .iter()
        .map(|l| (l + rng.gen_range(1..=4) as f64).min(4.0))
        .collect();
    while lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| h - l + 1.0)
        .product::<f64>()
        > max_volume
    {
        let j = (0..n)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap();
        if rng.gen_bool(0.5) {
            hi[j] -= 1.0;
        } else {
            lo[j] += 1.0;
        }
    }
    (lo, hi)
}

fn random_c(rng: &mut TestRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-3..=3) as f64).collect()
}

/// Bounded pure-integer instance: n <= 6, bounds within [0,4], <= 4 rows.
/// The target is a random feasible point.
pub fn random_pure(rng: &mut TestRng, label: &str) -> InverseInstance {
    let n = rng.gen_range(1..=6);
    let (lo, hi) = random_box(rng, n, 300.0);
    let anchor: Vec<f64> = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| rng.gen_range(*l as i64..=*h as i64) as f64)
        .collect();
    let rows = random_rows(rng, n, &anchor);
    let c0 = random_c(rng, n);
    let p = problem(label, rows, lo, hi, vec![true; n], c0.clone());
    let pts = oracle_points(&p);
    let x_hat = pts[rng.gen_range(0..pts.len())].clone();
    InverseInstance::new(p, c0, x_hat, label)
}

/// Bounded mixed instance with n <= 5 and at least one variable of each kind.
/// The target is a random oracle candidate, which is always feasible.
pub fn random_mixed(rng: &mut TestRng, label: &str) -> InverseInstance {
    let n = rng.gen_range(2..=5);
    let (lo, hi) = random_box(rng, n, 150.0);
    let mut is_integer: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    is_integer[0] = true;
    is_integer[n - 1] = false;
    let anchor: Vec<f64> = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| rng.gen_range(*l as i64..=*h as i64) as f64)
        .collect();
    let rows = random_rows(rng, n, &anchor);
    let c0 = random_c(rng, n);
    let p = problem(label, rows, lo, hi, is_integer, c0.clone());
    let pts = oracle_points(&p);
    let x_hat = pts[rng.gen_range(0..pts.len())].clone();
    InverseInstance::new(p, c0, x_hat, label)
}

/// Bounded LP with n, m <= 8; feasible about 85% of the time.
pub struct RandomLp {
    pub c: Vec<f64>,
    pub rows: Vec<Ge>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

pub fn random_lp(rng: &mut TestRng) -> RandomLp {
    let n = rng.gen_range(1..=8);
    let m = rng.gen_range(1..=8);
    let lower: Vec<f64> = (0..n).map(|_| rng.gen_range(-6..=0) as f64 / 2.0).collect();
    let upper: Vec<f64> = lower
        .iter()
        .map(|l| l + rng.gen_range(1..=10) as f64 / 2.0)
        .collect();
    let anchor: Vec<f64> = lower
        .iter()
        .zip(&upper)
        .map(|(l, u)| rng.gen_range(*l..=*u))
        .collect();
    let feasible = rng.gen_bool(0.85);
    let rows = (0..m)
        .map(|_| {
            let a: Vec<f64> = (0..n)
                .map(|_| rng.gen_range(-10..=10) as f64 / 2.0)
                .collect();
            let b = if feasible {
                dot(&a, &anchor) - rng.gen_range(0.0..2.0)
            } else {
                rng.gen_range(-10.0..10.0)
            };
            Ge::new(a, b)
        })
        .collect();
    let c = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
    RandomLp {
        c,
        rows,
        lower,
        upper,
    }
}

pub fn to_lp(r: &RandomLp) -> LinearProgram {
    let rows = r
        .rows
        .iter()
        .map(|g| GeRow {
            coeffs: g.a.clone(),
            rhs: g.b,
        })
        .collect();
    LinearProgram::new(r.c.clone(), rows, r.lower.clone(), r.upper.clone())
}
